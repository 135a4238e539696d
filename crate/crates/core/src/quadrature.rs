//! Polar product rules for `∫_ℂ f dλ` with power-law tails.
//!
//! The radial variable is `s = log r`. Without split radii the rule is the
//! trapezoid rule in `u` with `s = sinh u`, which keeps the node spacing fine
//! near `|ζ| ~ 1` and coarse in the exponentially decaying tails. With split
//! radii (weight kinks, e.g. `r = 1` for `d log⁺|ζ|`) the `s`-line is cut into
//! pieces and each piece is mapped onto the whole `u`-line by a softplus (end
//! pieces) or logistic (interior pieces) map, so that the kink sits at
//! `u = ±∞` and the trapezoid rule stays spectrally accurate on each side.
//! The angular rule is the periodic trapezoid rule.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `u` cut-off at a split point: the last node sits `softplus(-30) ≈ 1e-13`
/// away from the kink.
const SPLIT_END: f64 = 30.0;
/// Largest tolerated fraction of nodes with non-finite integrand values.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("resolution too low: n_radial = {n_radial}, n_angular = {n_angular} (need >= 32 each)")]
    ResolutionTooLow { n_radial: usize, n_angular: usize },
    #[error("invalid truncation s_min = {s_min}, s_max = {s_max}")]
    InvalidTruncation { s_min: f64, s_max: f64 },
    #[error("split radii must be positive, increasing and inside the truncation window: {0:?}")]
    InvalidSplit(Vec<f64>),
    #[error("{excluded} of {total} nodes had non-finite integrand values")]
    TooManyExcludedNodes { excluded: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureParams {
    pub n_radial: usize,
    pub n_angular: usize,
    pub split_radii: Vec<f64>,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            n_radial: 128,
            n_angular: 128,
            split_radii: Vec::new(),
            s_min: -13.0,
            s_max: 13.0,
        }
    }
}

impl QuadratureParams {
    pub fn with_resolution(n_radial: usize, n_angular: usize) -> Self {
        Self {
            n_radial,
            n_angular,
            ..Self::default()
        }
    }

    pub fn with_splits(mut self, split_radii: Vec<f64>) -> Self {
        self.split_radii = split_radii;
        self
    }

    /// Same rule with twice the nodes in both directions.
    pub fn refined(&self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_angular: 2 * self.n_angular,
            ..self.clone()
        }
    }

    /// Same node density with the outer truncation pushed to `s_max + ds`.
    pub fn extended(&self, ds: f64) -> Self {
        let span = self.s_max - self.s_min;
        let n = (self.n_radial as f64 * (span + ds) / span).ceil() as usize;
        Self {
            n_radial: n,
            s_max: self.s_max + ds,
            ..self.clone()
        }
    }
}

impl QuadratureParams {
    /// Same node density with both truncations pushed out by `ds`.
    pub fn widened(&self, ds: f64) -> Self {
        let span = self.s_max - self.s_min;
        let n = (self.n_radial as f64 * (span + 2.0 * ds) / span).ceil() as usize;
        Self {
            n_radial: n,
            s_min: self.s_min - ds,
            s_max: self.s_max + ds,
            ..self.clone()
        }
    }
}

/// One circle of nodes.
#[derive(Debug, Clone, Copy)]
pub struct Ring {
    pub radius: f64,
    pub log_radius: f64,
    /// Weight of the ring in `∫ g r² ds` (so `∫ f dλ ≈ Σ_i weight_i · mean_θ f`·2π).
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    params: QuadratureParams,
    rings: Vec<Ring>,
    angles: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Trapezoid nodes on `[lo, hi]` with `n` points: `(u, weight)`.
fn trapezoid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| {
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        (lo + h * i as f64, w)
    })
}

/// Radial nodes `(s, ds-weight)`.
fn radial_rule(p: &QuadratureParams) -> Vec<(f64, f64)> {
    let n = p.n_radial;
    let splits: Vec<f64> = p.split_radii.iter().map(|r| r.ln()).collect();
    let mut out = Vec::new();
    if splits.is_empty() {
        for (u, w) in trapezoid(p.s_min.asinh(), p.s_max.asinh(), n) {
            out.push((u.sinh(), w * u.cosh()));
        }
        return out;
    }
    // end and interior pieces: s = b - softplus(-v), a + (b-a) σ(κv),
    // b + softplus(v) with v = sinh u, trapezoid in u
    let first = splits[0];
    let v_lo = -(first - p.s_min).exp_m1().ln();
    for (u, w) in trapezoid(v_lo.asinh(), SPLIT_END.asinh(), n) {
        let v = u.sinh();
        out.push((first - softplus(-v), w * u.cosh() * logistic(-v)));
    }
    for pair in splits.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let kappa = 4.0 / (b - a);
        let edge = (SPLIT_END / kappa).asinh();
        for (u, w) in trapezoid(-edge, edge, n) {
            let sg = logistic(kappa * u.sinh());
            out.push((a + (b - a) * sg, w * u.cosh() * 4.0 * sg * (1.0 - sg)));
        }
    }
    let last = *splits.last().unwrap();
    let v_hi = (p.s_max - last).exp_m1().ln();
    for (u, w) in trapezoid((-SPLIT_END).asinh(), v_hi.asinh(), n) {
        let v = u.sinh();
        out.push((last + softplus(v), w * u.cosh() * logistic(v)));
    }
    out
}

/// Value of an integral together with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    /// Envelope bound for the parts outside the truncation window, from a
    /// `C r^(-4)` envelope at the outer ring and a bounded integrand inside
    /// the inner ring. An error estimate, not added to `value`.
    pub tail_bound: f64,
    pub excluded: usize,
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl QuadratureGrid {
    pub fn new(params: QuadratureParams) -> Result<Self, QuadratureError> {
        if params.n_radial < 32 || params.n_angular < 32 {
            return Err(QuadratureError::ResolutionTooLow {
                n_radial: params.n_radial,
                n_angular: params.n_angular,
            });
        }
        if !(params.s_min.is_finite() && params.s_max.is_finite() && params.s_min < params.s_max) {
            return Err(QuadratureError::InvalidTruncation {
                s_min: params.s_min,
                s_max: params.s_max,
            });
        }
        let splits = &params.split_radii;
        let inside = splits
            .iter()
            .all(|&r| r > 0.0 && r.ln() > params.s_min && r.ln() < params.s_max);
        if !inside || splits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QuadratureError::InvalidSplit(splits.clone()));
        }
        let rings = radial_rule(&params)
            .into_iter()
            .map(|(s, w)| Ring {
                radius: s.exp(),
                log_radius: s,
                weight: w * (2.0 * s).exp(),
            })
            .collect();
        let n = params.n_angular;
        let angles = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        Ok(Self {
            params,
            rings,
            angles,
        })
    }

    pub fn params(&self) -> &QuadratureParams {
        &self.params
    }

    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Weight of one angular node, `2π / n_angular`.
    pub fn angle_weight(&self) -> f64 {
        2.0 * PI / self.angles.len() as f64
    }

    pub fn len(&self) -> usize {
        self.rings.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All nodes with their `dλ` weights, ring-major.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let aw = self.angle_weight();
        self.rings.iter().flat_map(move |ring| {
            self.angles
                .iter()
                .map(move |&t| (Complex64::from_polar(ring.radius, t), ring.weight * aw))
        })
    }

    /// `Σ w_k f(ζ_k)`; nodes where `f` is not finite are skipped and counted.
    pub fn integrate<F>(&self, f: F) -> Result<Integral, QuadratureError>
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let aw = self.angle_weight();
        let per_ring: Vec<(Complex64, usize, f64)> = self
            .rings
            .par_iter()
            .map(|ring| {
                let mut re = CompensatedSum::default();
                let mut im = CompensatedSum::default();
                let mut excluded = 0;
                let mut peak: f64 = 0.0;
                for &t in &self.angles {
                    let v = f(Complex64::from_polar(ring.radius, t));
                    if v.re.is_finite() && v.im.is_finite() {
                        re.add(v.re);
                        im.add(v.im);
                        peak = peak.max(v.norm());
                    } else {
                        excluded += 1;
                    }
                }
                (
                    Complex64::new(re.value(), im.value()) * (ring.weight * aw),
                    excluded,
                    peak,
                )
            })
            .collect();
        let mut re = CompensatedSum::default();
        let mut im = CompensatedSum::default();
        let mut excluded = 0;
        for (v, e, _) in &per_ring {
            re.add(v.re);
            im.add(v.im);
            excluded += e;
        }
        let total = self.len();
        if excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
            return Err(QuadratureError::TooManyExcludedNodes { excluded, total });
        }
        let inner = &self.rings[0];
        let outer = self.rings.last().unwrap();
        let tail_bound = PI * per_ring[0].2 * inner.radius * inner.radius
            + PI * per_ring.last().unwrap().2 * outer.radius * outer.radius;
        Ok(Integral {
            value: Complex64::new(re.value(), im.value()),
            tail_bound,
            excluded,
        })
    }

    /// Real-valued convenience wrapper around [`Self::integrate`].
    pub fn integrate_real<F>(&self, f: F) -> Result<f64, QuadratureError>
    where
        F: Fn(Complex64) -> f64 + Sync,
    {
        Ok(self.integrate(|z| Complex64::new(f(z), 0.0))?.value.re)
    }
}

/// Integrals of one integrand under outward extensions of the truncation.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub s_max: Vec<f64>,
    pub values: Vec<f64>,
    pub converged: bool,
}

/// Integrates `f` with `s_max` pushed out by 0, 4 and 8 and reports whether
/// the value has stabilized (`|I₂ - I₁| <= tol · |I₂|`). A non-integrable
/// power-law tail keeps adding mass at every extension.
pub fn self_refine<F>(params: &QuadratureParams, f: F, tol: f64) -> Result<Refinement, QuadratureError>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    let mut s_max = Vec::new();
    let mut values = Vec::new();
    for ds in [0.0, 4.0, 8.0] {
        let p = params.extended(ds);
        let grid = QuadratureGrid::new(p.clone())?;
        values.push(grid.integrate_real(&f)?);
        s_max.push(p.s_max);
    }
    let converged = (values[2] - values[1]).abs() <= tol * values[2].abs().max(f64::MIN_POSITIVE)
        && (values[2] - values[1]).abs() <= (values[1] - values[0]).abs().max(tol * values[2].abs());
    Ok(Refinement {
        s_max,
        values,
        converged,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels of
/// `order` points each.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let mid = a + h * (k as f64 + 0.5);
        for &(x, w) in &gl {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// `∫∫ f dλ` over the polar box `s0 < log r < s1`, `t0 < θ < t1`.
pub fn integrate_polar_box<F>(f: F, s0: f64, s1: f64, t0: f64, t1: f64) -> f64
where
    F: Fn(Complex64) -> f64,
{
    if s1 <= s0 || t1 <= t0 {
        return 0.0;
    }
    let radial = composite_gauss(s0, s1, ((s1 - s0) / 0.25).ceil().max(1.0) as usize, 8);
    let angular = composite_gauss(t0, t1, ((t1 - t0) / (PI / 8.0)).ceil().max(1.0) as usize, 8);
    let mut acc = CompensatedSum::default();
    for &(s, ws) in &radial {
        let r = s.exp();
        let mut ring = CompensatedSum::default();
        for &(t, wt) in &angular {
            ring.add(wt * f(Complex64::from_polar(r, t)));
        }
        acc.add(ws * r * r * ring.value());
    }
    acc.value()
}
