//! Convergence diagnostics: discrepancies between measures on a fixed family
//! of test sets, kernel growth exponents, `L¹` decay of log-kernels and
//! potentials, and the integrated Lelong–Poincaré identity.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::bergman::{BergmanError, BergmanSpace, FubiniStudyMeasure, SpaceKind};
use crate::curve::PlaneCurve;
use crate::quadrature::{composite_gauss, gauss_legendre, CompensatedSum, QuadratureError, QuadratureGrid};
use crate::weights::{curvature_measure, AtomLocation, CurvatureMeasure, Weight, WeightError};
use crate::zeros::{self, angular_bin, RandomSection, ZeroEnsemble, ZerosError, ANGULAR_BINS};

pub const N_DISKS: usize = 64;
pub const N_SECTORS: usize = ANGULAR_BINS;
pub const N_ANNULI: usize = 32;
pub const TEST_RADIUS_MIN: f64 = 1e-2;
pub const TEST_RADIUS_MAX: f64 = 1e2;
/// Total masses must agree to this before a discrepancy is computed.
pub const MASS_MATCH_TOL: f64 = 1e-6;
/// Default radius of the disk on which the kernel minimum is taken.
pub const EVAL_RADIUS: f64 = 2.0;
/// `|t|` range of the vanishing-order fit at the point over `x1`.
pub const VANISHING_STENCIL: (f64, f64) = (1e-3, 1e-2);
/// Required decrease from first to last ladder rung.
pub const PASS_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },
    #[error("least-squares fit is ill-conditioned: {0}")]
    IllConditionedFit(String),
    #[error("ladder must be strictly increasing and non-empty")]
    InvalidLadder,
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error(transparent)]
    Zeros(#[from] ZerosError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A test set, described by indices into [`TestFamily::edges`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestSet {
    /// `|ζ| < edges[edge]`.
    Disk { edge: usize, radius: f64 },
    /// `edges[inner] <= |ζ| < edges[outer]`.
    Annulus { inner: usize, outer: usize },
    /// `2πk/N <= arg ζ < 2π(k+1)/N`.
    Sector { index: usize },
}

/// 64 centered disks with geometric radii in `[1e-2, 1e2]`, 32 sectors and
/// 32 annuli with geometric edges in the same range.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    edges: Vec<f64>,
    sets: Vec<TestSet>,
}

fn geometric(n: usize, k: usize) -> f64 {
    let t = k as f64 / (n - 1) as f64;
    TEST_RADIUS_MIN * (TEST_RADIUS_MAX / TEST_RADIUS_MIN).powf(t)
}

impl TestFamily {
    pub fn standard() -> Self {
        let disk_r: Vec<f64> = (0..N_DISKS).map(|k| geometric(N_DISKS, k)).collect();
        let ann_r: Vec<f64> = (0..=N_ANNULI).map(|k| geometric(N_ANNULI + 1, k)).collect();
        let mut edges: Vec<f64> = disk_r.iter().chain(&ann_r).copied().collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        let idx = |r: f64| {
            edges
                .iter()
                .position(|e| (e - r).abs() <= 1e-12 * r)
                .expect("radius is an edge")
        };
        let mut sets: Vec<TestSet> = disk_r
            .iter()
            .map(|&r| TestSet::Disk { edge: idx(r), radius: r })
            .collect();
        sets.extend((0..N_SECTORS).map(|index| TestSet::Sector { index }));
        sets.extend(ann_r.windows(2).map(|w| TestSet::Annulus {
            inner: idx(w[0]),
            outer: idx(w[1]),
        }));
        Self { edges, sets }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn sets(&self) -> &[TestSet] {
        &self.sets
    }

    /// Radial cells: `[0, e0)`, `[e_{i-1}, e_i)`, `[e_last, ∞)`.
    pub fn n_radial_cells(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn radial_cell(&self, r: f64) -> usize {
        self.edges.partition_point(|&e| e <= r)
    }

    fn radial_cells_of(&self, set: &TestSet) -> std::ops::Range<usize> {
        match *set {
            TestSet::Disk { edge, .. } => 0..edge + 1,
            TestSet::Annulus { inner, outer } => inner + 1..outer + 1,
            TestSet::Sector { .. } => 0..self.n_radial_cells(),
        }
    }
}

pub trait MassGauge {
    fn mass_in(&self, set: &TestSet) -> f64;
    fn total_mass(&self) -> f64;
}

/// A measure on the curve recorded by its mass in every (radial cell,
/// sector) of a [`TestFamily`] plus its atom at `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeasure {
    family: TestFamily,
    /// `cells[i * N_SECTORS + b]`.
    cells: Vec<f64>,
    pub atom_at_x1: f64,
}

impl CellMeasure {
    pub fn empty(family: &TestFamily) -> Self {
        Self {
            family: family.clone(),
            cells: vec![0.0; family.n_radial_cells() * N_SECTORS],
            atom_at_x1: 0.0,
        }
    }

    pub fn add_point(&mut self, z: Complex64, mass: f64) {
        let i = self.family.radial_cell(z.norm());
        self.cells[i * N_SECTORS + angular_bin(z)] += mass;
    }

    /// Uniform measure of mass `mass` on `|ζ| = radius`.
    pub fn add_circle(&mut self, radius: f64, mass: f64) {
        let i = self.family.radial_cell(radius);
        for b in 0..N_SECTORS {
            self.cells[i * N_SECTORS + b] += mass / N_SECTORS as f64;
        }
    }

    /// Adds `density dλ`, integrated per cell by Gauss–Legendre in
    /// `(log r, θ)`; the innermost and outermost cells are truncated at
    /// `log r = s_min` and `s_max`.
    pub fn add_density<F>(&mut self, density: F, s_min: f64, s_max: f64)
    where
        F: Fn(Complex64) -> f64 + Sync,
    {
        let edges = self.family.edges.clone();
        let n = self.family.n_radial_cells();
        let angular_gl = gauss_legendre(6);
        let h = TAU / N_SECTORS as f64;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let radial = if i == 0 {
                    let hi = edges[0].ln();
                    composite_gauss(s_min, hi, ((hi - s_min) / 0.5).ceil().max(1.0) as usize, 8)
                } else if i == n - 1 {
                    let lo = edges[n - 2].ln();
                    composite_gauss(lo, s_max, ((s_max - lo) / 0.5).ceil().max(1.0) as usize, 8)
                } else {
                    composite_gauss(edges[i - 1].ln(), edges[i].ln(), 1, 8)
                };
                (0..N_SECTORS)
                    .map(|b| {
                        let mut acc = CompensatedSum::default();
                        for &(s, ws) in &radial {
                            let r = s.exp();
                            for &(x, wt) in &angular_gl {
                                let t = h * (b as f64 + 0.5 + 0.5 * x);
                                acc.add(ws * r * r * 0.5 * h * wt * density(Complex64::from_polar(r, t)));
                            }
                        }
                        acc.value()
                    })
                    .collect()
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (b, v) in row.into_iter().enumerate() {
                self.cells[i * N_SECTORS + b] += v;
            }
        }
    }

    pub fn from_curvature(m: &CurvatureMeasure, family: &TestFamily, s_min: f64, s_max: f64) -> Self {
        let mut out = Self::empty(family);
        if let Some(f) = m.density() {
            out.add_density(|z| f(z), s_min, s_max);
        }
        for &(r, mass) in &m.circles {
            out.add_circle(r, mass);
        }
        for &(loc, mass) in &m.atoms {
            match loc {
                AtomLocation::Finite(z) => out.add_point(z, mass),
                AtomLocation::SingularPoint => out.atom_at_x1 += mass,
            }
        }
        out
    }

    /// `γ_p / p`.
    pub fn from_fs_measure(g: &FubiniStudyMeasure, family: &TestFamily, s_min: f64, s_max: f64) -> Self {
        let p = g.level() as f64;
        let mut out = Self::empty(family);
        out.add_density(|z| g.density_at(z) / p, s_min, s_max);
        out.atom_at_x1 = g.atom_at_x1() as f64 / p;
        out
    }

    /// `(1/p) E[div]` from an ensemble.
    pub fn from_ensemble(e: &ZeroEnsemble, family: &TestFamily) -> Self {
        let mut out = Self::empty(family);
        for (z, w) in e.weighted_points() {
            out.add_point(z, w);
        }
        out.atom_at_x1 = e.mean_atom_at_x1();
        out
    }

    /// Mass of the cells meeting negative values (the negative variation
    /// seen at cell resolution), excluding the atom at `x1`.
    pub fn negative_cell_mass(&self) -> f64 {
        self.cells.iter().filter(|&&v| v < 0.0).map(|v| -v).sum()
    }
}

impl MassGauge for CellMeasure {
    fn mass_in(&self, set: &TestSet) -> f64 {
        let mut acc = CompensatedSum::default();
        for i in self.family.radial_cells_of(set) {
            match *set {
                TestSet::Sector { index } => acc.add(self.cells[i * N_SECTORS + index]),
                _ => {
                    for b in 0..N_SECTORS {
                        acc.add(self.cells[i * N_SECTORS + b]);
                    }
                }
            }
        }
        acc.value()
    }

    fn total_mass(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &v in &self.cells {
            acc.add(v);
        }
        acc.add(self.atom_at_x1);
        acc.value()
    }
}

/// `sup_T |a(T) - b(T)|` over `family`, after checking that total masses
/// agree to `tol`.
pub fn discrepancy_with_tol<A: MassGauge, B: MassGauge>(
    a: &A,
    b: &B,
    family: &TestFamily,
    tol: f64,
) -> Result<f64, DiagnosticsError> {
    let (ta, tb) = (a.total_mass(), b.total_mass());
    if !((ta - tb).abs() <= tol) {
        return Err(DiagnosticsError::MassMismatch { left: ta, right: tb });
    }
    Ok(family
        .sets()
        .iter()
        .map(|s| (a.mass_in(s) - b.mass_in(s)).abs())
        .fold(0.0, f64::max))
}

pub fn discrepancy<A: MassGauge, B: MassGauge>(a: &A, b: &B, family: &TestFamily) -> Result<f64, DiagnosticsError> {
    discrepancy_with_tol(a, b, family, MASS_MATCH_TOL)
}

/// Minimum of the kernel on `|ζ| <= radius`, sampled on 33 radii × 64
/// angles.
pub fn min_kernel(space: &BergmanSpace, radius: f64) -> Result<f64, BergmanError> {
    let pts: Vec<Complex64> = (0..=32)
        .flat_map(|i| {
            let r = radius * i as f64 / 32.0;
            (0..64).map(move |k| Complex64::from_polar(r, TAU * k as f64 / 64.0))
        })
        .collect();
    let vals: Vec<Result<f64, BergmanError>> = pts.par_iter().map(|&z| space.kernel_at(z)).collect();
    let mut m = f64::INFINITY;
    for v in vals {
        m = m.min(v?);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least squares `y ≈ slope·x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit, DiagnosticsError> {
    let n = x.len();
    if n < 2 || y.len() != n || x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::IllConditionedFit(format!("{n} points")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return Err(DiagnosticsError::IllConditionedFit("abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Vanishing order at the point over `x1` of the pulled-back curvature
/// density, from a log–log fit of `c(t) = W(1/t) / |t|⁴` on
/// `|t| ∈ VANISHING_STENCIL`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingOrder {
    pub order: f64,
    /// `r = order + 2`.
    pub r: f64,
    pub stencil: (f64, f64),
}

pub fn vanishing_order(weight: &Weight) -> Result<VanishingOrder, DiagnosticsError> {
    let density = weight
        .curvature_density()
        .ok_or_else(|| DiagnosticsError::IllConditionedFit("weight has no smooth curvature density".into()))?;
    let (a, b) = VANISHING_STENCIL;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..16 {
        let t = a * (b / a).powf(i as f64 / 15.0);
        // average over a few directions to remove angular dependence
        let mut acc = 0.0;
        for k in 0..8 {
            let z = Complex64::from_polar(1.0 / t, TAU * k as f64 / 8.0 + 0.3);
            acc += density(z);
        }
        xs.push(t.ln());
        ys.push((acc / 8.0 / t.powi(4)).ln());
    }
    let fit = fit_line(&xs, &ys)?;
    Ok(VanishingOrder {
        order: fit.slope,
        r: fit.slope + 2.0,
        stencil: VANISHING_STENCIL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub p_ladder: Vec<usize>,
    pub min_kernel: Vec<f64>,
    pub fit: LinearFit,
    pub eval_radius: f64,
}

/// Slope of `log min_{|ζ|<=R} P_p` against `log p` for the weakly
/// holomorphic space.
pub fn kernel_growth_exponent(
    curve: &PlaneCurve,
    weight: &Weight,
    p_ladder: &[usize],
    grid: &QuadratureGrid,
    eval_radius: f64,
) -> Result<GrowthFit, DiagnosticsError> {
    check_ladder(p_ladder)?;
    if p_ladder.len() < 4 {
        return Err(DiagnosticsError::IllConditionedFit("ladder shorter than 4".into()));
    }
    let mins = p_ladder
        .par_iter()
        .map(|&p| {
            let s = BergmanSpace::build(SpaceKind::WeaklyHolomorphic, curve, weight, p, grid)?;
            min_kernel(&s, eval_radius)
        })
        .collect::<Result<Vec<f64>, BergmanError>>()?;
    let xs: Vec<f64> = p_ladder.iter().map(|&p| (p as f64).ln()).collect();
    let ys: Vec<f64> = mins.iter().map(|m| m.ln()).collect();
    Ok(GrowthFit {
        p_ladder: p_ladder.to_vec(),
        min_kernel: mins,
        fit: fit_line(&xs, &ys)?,
        eval_radius,
    })
}

fn check_ladder(p: &[usize]) -> Result<(), DiagnosticsError> {
    if p.is_empty() || p[0] == 0 || p.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DiagnosticsError::InvalidLadder);
    }
    Ok(())
}

/// `(1/p) ∫ |log |s|_{h_p}| W dλ`.
pub fn potential_l1(section: &RandomSection, weight: &Weight, curve: &PlaneCurve, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let p = section.level as f64;
    let v = grid.integrate_real(|z| {
        let s = crate::curve::horner(&section.poly, z).norm();
        let phi = weight.value(z);
        if s == 0.0 || !phi.is_finite() {
            return f64::NAN;
        }
        (s.ln() - p * phi).abs() * curve.fs_pullback_density(z)
    })?;
    Ok(v / p)
}

/// Series for one space kind along the ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindSeries {
    pub kind: SpaceKind,
    pub dim: Vec<usize>,
    pub condition: Vec<f64>,
    pub residual: Vec<f64>,
    pub l1_log_kernel: Vec<f64>,
    pub fs_discrepancy: Vec<f64>,
    pub fs_atom_at_x1: Vec<i64>,
    pub fs_negative_mass: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub p_ladder: Vec<usize>,
    pub kinds: Vec<KindSeries>,
    /// Per rung: mean over samples of the potential `L¹` norm (if sampled).
    pub potential_l1: Vec<f64>,
    /// Per rung: discrepancy of `(1/p) E[div]` against `c_1`.
    pub discrepancy: Vec<f64>,
    /// Per rung: minimum of the weakly holomorphic kernel on the
    /// evaluation disk.
    pub min_kernel: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    pub vanishing: Option<VanishingOrder>,
    pub eval_radius: f64,
    pub pass: bool,
}

fn decreases(v: &[f64]) -> bool {
    match (v.first(), v.last()) {
        (Some(a), Some(b)) => v.len() >= 2 && *b * PASS_FACTOR <= *a,
        _ => false,
    }
}

/// `L¹` norms of log-kernels and discrepancies of `γ_p/p` against `c_1`
/// for every kind and rung; PASS when each series drops by a factor 2 from
/// the first rung to the last.
pub fn run_kernel_convergence(
    curve: &PlaneCurve,
    weight: &Weight,
    kinds: &[SpaceKind],
    p_ladder: &[usize],
    grid: &QuadratureGrid,
) -> Result<Vec<KindSeries>, DiagnosticsError> {
    check_ladder(p_ladder)?;
    let family = TestFamily::standard();
    let gp = grid.params();
    let c1 = curvature_measure(weight, curve, grid)?;
    let target = CellMeasure::from_curvature(&c1, &family, gp.s_min, gp.s_max);
    let mut out = Vec::new();
    for &kind in kinds {
        let rungs = p_ladder
            .iter()
            .map(|&p| -> Result<_, DiagnosticsError> {
                let s = BergmanSpace::build(kind, curve, weight, p, grid)?;
                let l1 = s.log_kernel_l1(grid)?;
                let g = s.fs_measure(grid)?;
                let cells = CellMeasure::from_fs_measure(&g, &family, gp.s_min, gp.s_max);
                let disc = discrepancy_with_tol(&cells, &target, &family, FS_MASS_TOL)?;
                Ok((
                    s.dim(),
                    s.condition_number()?,
                    s.orthonormality_residual()?,
                    l1,
                    disc,
                    g.atom_at_x1(),
                    g.negative_mass,
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let l1: Vec<f64> = rungs.iter().map(|r| r.3).collect();
        let disc: Vec<f64> = rungs.iter().map(|r| r.4).collect();
        out.push(KindSeries {
            kind,
            dim: rungs.iter().map(|r| r.0).collect(),
            condition: rungs.iter().map(|r| r.1).collect(),
            residual: rungs.iter().map(|r| r.2).collect(),
            pass: decreases(&l1) && decreases(&disc),
            l1_log_kernel: l1,
            fs_discrepancy: disc,
            fs_atom_at_x1: rungs.iter().map(|r| r.5).collect(),
            fs_negative_mass: rungs.iter().map(|r| r.6).collect(),
        });
    }
    Ok(out)
}

/// Mass agreement required between `γ_p/p` and `c_1`: the smooth part of
/// `γ_p` comes from a finite-difference Laplacian.
pub const FS_MASS_TOL: f64 = 1e-3;

/// Per rung: discrepancy of `(1/p) E[div s_p]` against `c_1` and the mean
/// potential `L¹` norm over `n_potential` of the samples.
pub fn run_zero_convergence(
    curve: &PlaneCurve,
    weight: &Weight,
    kind: SpaceKind,
    p_ladder: &[usize],
    grid: &QuadratureGrid,
    n_samples: usize,
    n_potential: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<ZeroEnsemble>), DiagnosticsError> {
    check_ladder(p_ladder)?;
    let family = TestFamily::standard();
    let gp = grid.params();
    let c1 = curvature_measure(weight, curve, grid)?;
    let target = CellMeasure::from_curvature(&c1, &family, gp.s_min, gp.s_max);
    let mut disc = Vec::new();
    let mut pot = Vec::new();
    let mut ensembles = Vec::new();
    for &p in p_ladder {
        let s = BergmanSpace::build(kind, curve, weight, p, grid)?;
        let (sections, ens) = zeros::sample_ensemble(&s, n_samples, seed)?;
        let cells = CellMeasure::from_ensemble(&ens, &family);
        disc.push(discrepancy_with_tol(&cells, &target, &family, FS_MASS_TOL)?);
        let k = n_potential.min(sections.len());
        let mut acc = 0.0;
        for sec in sections.iter().take(k) {
            acc += potential_l1(sec, weight, curve, grid)?;
        }
        pot.push(if k > 0 { acc / k as f64 } else { f64::NAN });
        ensembles.push(ens);
    }
    Ok((disc, pot, ensembles))
}

/// `χ(ζ) = exp(-|ζ - c|² / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBump {
    pub center: Complex64,
    pub width: f64,
}

impl GaussianBump {
    pub fn value(&self, z: Complex64) -> f64 {
        (-(z - self.center).norm_sqr() / (self.width * self.width)).exp()
    }

    pub fn laplacian(&self, z: Complex64) -> f64 {
        let s2 = self.width * self.width;
        let q = (z - self.center).norm_sqr();
        (-q / s2).exp() * (4.0 * q / (s2 * s2) - 4.0 / s2)
    }

    /// Support radius outside which `χ` and `Δχ` are below `1e-20`.
    pub fn reach(&self) -> f64 {
        7.0 * self.width
    }
}

/// `n` bumps with centers in `|c| <= 2` and widths in `[0.3, 1]`.
pub fn random_bumps(n: usize, seed: u64) -> Vec<GaussianBump> {
    let mut rng = zeros::sample_rng(seed, u64::MAX);
    (0..n)
        .map(|_| {
            let r = 2.0 * rng.random::<f64>().sqrt();
            let t = TAU * rng.random::<f64>();
            GaussianBump {
                center: Complex64::from_polar(r, t),
                width: 0.3 + 0.7 * rng.random::<f64>(),
            }
        })
        .collect()
}

/// 4×4 Gauss rule on squares, refined near the given singular points.
fn integrate_square<F>(f: &F, center: Complex64, half: f64, singular: &[Complex64], depth: usize, out: &mut CompensatedSum)
where
    F: Fn(Complex64) -> f64,
{
    let near = singular.iter().any(|z| {
        let d = z - center;
        d.re.abs() <= 1.5 * half && d.im.abs() <= 1.5 * half
    });
    if near && depth > 0 {
        let q = 0.5 * half;
        for (dx, dy) in [(-q, -q), (q, -q), (-q, q), (q, q)] {
            integrate_square(f, center + Complex64::new(dx, dy), q, singular, depth - 1, out);
        }
        return;
    }
    const GL4: [(f64, f64); 4] = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    for &(x, wx) in &GL4 {
        for &(y, wy) in &GL4 {
            let z = center + Complex64::new(x * half, y * half);
            out.add(wx * wy * half * half * f(z));
        }
    }
}

/// `∫χ d[div s] - p∫χ dc_1 - (1/2π)∫ log|s|_{h_p} Δχ dλ` for a smooth
/// weight (density plus circles).
pub fn lelong_poincare_residual(
    section: &RandomSection,
    divisor: &zeros::DivisorMeasure,
    weight: &Weight,
    bump: &GaussianBump,
) -> f64 {
    let p = section.level as f64;
    let lhs: f64 = divisor
        .finite_atoms
        .iter()
        .map(|&(z, m)| m as f64 * bump.value(z))
        .sum();
    let reach = bump.reach();
    let cells = 56usize;
    let half = reach / cells as f64;
    let singular: Vec<Complex64> = divisor
        .finite_atoms
        .iter()
        .map(|a| a.0)
        .filter(|z| (z - bump.center).norm() <= reach * 1.5)
        .collect();
    let density = weight.curvature_density();
    let circles = weight.singular_parts().circles;
    let integrand = |z: Complex64| {
        let log_s = crate::curve::horner(&section.poly, z).norm().ln() - p * weight.value(z);
        let c1 = density.as_ref().map_or(0.0, |f| f(z));
        p * bump.value(z) * c1 + log_s * bump.laplacian(z) / TAU
    };
    let rows: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut acc = CompensatedSum::default();
            for j in 0..cells {
                let c = bump.center
                    + Complex64::new(-reach + half * (2 * i + 1) as f64, -reach + half * (2 * j + 1) as f64);
                integrate_square(&integrand, c, half, &singular, 24, &mut acc);
            }
            acc.value()
        })
        .collect();
    let mut rhs = CompensatedSum::default();
    for r in rows {
        rhs.add(r);
    }
    let gl = gauss_legendre(64);
    for &(rho, mass) in &circles {
        let avg: f64 = gl
            .iter()
            .map(|&(x, w)| 0.5 * w * bump.value(Complex64::from_polar(rho, PI * (x + 1.0))))
            .sum();
        rhs.add(p * mass * avg);
    }
    lhs - rhs.value()
}
