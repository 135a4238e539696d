//! Bergman spaces of sections of `L^p` at level `p`, their Bergman kernel
//! functions and Fubini–Study measures.
//!
//! Sections are polynomials `s(ζ)` in the affine chart. The three spaces are
//!
//! * [`SpaceKind::WeaklyHolomorphic`]: all polynomials of degree `<= dp`
//!   (locally bounded near `x1`; on these curves this also describes the
//!   continuous sections, so the two spaces are one object here);
//! * [`SpaceKind::RegularPart`]: polynomials of degree `<= dp + d - 2` with
//!   finite norm, i.e. `L²` sections on the regular part;
//! * [`SpaceKind::Restriction`]: restrictions of global sections of
//!   `O(p)` on the plane, spanned by `ζ^a P^c`, `a + c <= p`.
//!
//! The norm is `‖s‖² = ∫ |s|² e^{-2pφ} W dλ` with `W` the pulled-back
//! Fubini–Study density.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::curve::{self, PlaneCurve};
use crate::linalg::{self, LinalgError};
use crate::quadrature::{CompensatedSum, QuadratureError, QuadratureGrid, QuadratureParams};
use crate::weights::{log_polar_laplacian, Weight, LAPLACIAN_STEP};

/// Cap on the condition number of the equilibrated Gram matrix.
pub const CONDITION_CAP: f64 = 1e12;
/// Relative change allowed when a norm integral's truncation is pushed out.
pub const SELF_CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BergmanError {
    #[error("norm integral of ζ^{degree} does not converge")]
    DivergentNormEntry { degree: usize },
    #[error("Gram matrix ill-conditioned (cond {cond:.3e} > {cap:.1e}); use a smaller p or a finer grid")]
    IllConditioned { cond: f64, cap: f64 },
    #[error("Gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("weight is -∞ at {0}; kernel undefined there")]
    WeightPole(Complex64),
    #[error("weight scale {weight} does not match curve degree {curve}")]
    DegreeMismatch { weight: usize, curve: usize },
    #[error("level p must be at least 1")]
    InvalidLevel,
    #[error("space has no orthonormal basis yet")]
    NotOrthonormalized,
    #[error("space is empty")]
    Empty,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

impl From<LinalgError> for BergmanError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::IllConditioned { cond, cap } => Self::IllConditioned { cond, cap },
            LinalgError::NotPositiveDefinite => Self::NotPositiveDefinite,
            LinalgError::Empty => Self::Empty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpaceKind {
    #[serde(rename = "w")]
    WeaklyHolomorphic,
    #[serde(rename = "regular")]
    RegularPart,
    #[serde(rename = "restriction")]
    Restriction,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 3] = [
        SpaceKind::WeaklyHolomorphic,
        SpaceKind::RegularPart,
        SpaceKind::Restriction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpaceKind::WeaklyHolomorphic => "w",
            SpaceKind::RegularPart => "regular",
            SpaceKind::Restriction => "restriction",
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "w" => Ok(SpaceKind::WeaklyHolomorphic),
            "regular" => Ok(SpaceKind::RegularPart),
            "restriction" => Ok(SpaceKind::Restriction),
            other => Err(format!("unknown space kind {other:?} (expected w, regular, restriction)")),
        }
    }
}

/// Orthonormal basis polynomials as a matrix (`rows` = monomial degrees
/// `0..=k_max`, one column per basis section), evaluated without overflow.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    coeffs: DMatrix<Complex64>,
}

impl BasisEvaluator {
    pub fn new(coeffs: DMatrix<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn top_degree(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Values `v_j` and a log-scale `c` with `s_j(ζ) = v_j e^c`.
    pub fn eval(&self, z: Complex64) -> (Vec<Complex64>, f64) {
        let k = self.top_degree();
        let r = z.norm();
        let (powers, log_scale): (Vec<Complex64>, f64) = if r <= 1.0 {
            let mut pw = Vec::with_capacity(k + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=k {
                pw.push(acc);
                acc *= z;
            }
            (pw, 0.0)
        } else {
            // ζ^i = ζ^k · y^(k-i), y = 1/ζ
            let y = z.inv();
            let mut pw = vec![Complex64::new(0.0, 0.0); k + 1];
            let mut acc = Complex64::new(1.0, 0.0);
            for i in (0..=k).rev() {
                pw[i] = acc;
                acc *= y;
            }
            (pw, k as f64 * r.ln())
        };
        let vals = (0..self.dim())
            .map(|j| {
                self.coeffs
                    .column(j)
                    .iter()
                    .zip(&powers)
                    .map(|(c, p)| c * p)
                    .sum()
            })
            .collect();
        (vals, log_scale)
    }

    /// `½ log Σ_j |s_j(ζ)|²`, the local potential of the Fubini–Study measure.
    pub fn potential(&self, z: Complex64) -> f64 {
        let (v, c) = self.eval(z);
        0.5 * v.iter().map(|x| x.norm_sqr()).sum::<f64>().ln() + c
    }
}

/// A Bergman space at level `p`.
#[derive(Debug, Clone)]
pub struct BergmanSpace {
    kind: SpaceKind,
    p: usize,
    curve: PlaneCurve,
    weight: Weight,
    grid: QuadratureParams,
    /// Admitted monomial degrees (WeaklyHolomorphic/RegularPart) or the
    /// ambient degrees `0..=dp` (Restriction).
    degrees: Vec<usize>,
    excluded_degrees: Vec<usize>,
    /// Space coordinates → monomial coefficients (`k_max + 1` rows).
    coords: DMatrix<Complex64>,
    /// `G_jk = ⟨e_j, e_k⟩ = ∫ conj(e_j) e_k e^{-2pφ} W dλ`.
    gram: DMatrix<Complex64>,
    basis: Option<Orthonormal>,
}

#[derive(Debug, Clone)]
struct Orthonormal {
    coords: DMatrix<Complex64>,
    evaluator: BasisEvaluator,
    condition: f64,
    raw_condition: f64,
    residual: f64,
}

/// Monomial Gram matrix `∫ conj(ζ^j) ζ^k e^{-2pφ} W dλ` over `degrees`, by
/// per-ring angular Fourier sums of the weight in log scale.
pub fn monomial_gram(
    curve: &PlaneCurve,
    weight: &Weight,
    p: usize,
    degrees: &[usize],
    grid: &QuadratureGrid,
    diagonal_only: bool,
) -> DMatrix<Complex64> {
    let kmax = degrees.iter().copied().max().unwrap_or(0);
    let spread = if diagonal_only { 0 } else { kmax };
    let angles = grid.angles();
    let aw = grid.angle_weight();
    let pf = p as f64;
    // per ring: log-scale and Fourier coefficients F(m), m = 0..=spread
    let rings: Vec<(f64, f64, Vec<Complex64>)> = grid
        .rings()
        .par_iter()
        .map(|ring| {
            let logs: Vec<f64> = angles
                .iter()
                .map(|&t| {
                    let z = Complex64::from_polar(ring.radius, t);
                    -2.0 * pf * weight.value(z) + curve.log_fs_pullback_density(z)
                })
                .collect();
            let top = logs
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            let amp: Vec<f64> = logs
                .iter()
                .map(|&v| if v.is_finite() { (v - top).exp() } else { 0.0 })
                .collect();
            let fourier = (0..=spread)
                .map(|m| {
                    let mut re = CompensatedSum::default();
                    let mut im = CompensatedSum::default();
                    for (&a, &t) in amp.iter().zip(angles) {
                        let (s, c) = (m as f64 * t).sin_cos();
                        re.add(a * c);
                        im.add(a * s);
                    }
                    Complex64::new(re.value(), im.value()) * aw
                })
                .collect();
            (ring.weight.ln() + top, ring.log_radius, fourier)
        })
        .collect();
    let n = degrees.len();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        let b_range = if diagonal_only { a..a + 1 } else { a..n };
        for b in b_range {
            let (j, k) = (degrees[a], degrees[b]);
            let m = k.abs_diff(j);
            let mut re = CompensatedSum::default();
            let mut im = CompensatedSum::default();
            for (log_w, s, f) in &rings {
                if !log_w.is_finite() {
                    continue;
                }
                let scale = (log_w + (j + k) as f64 * s).exp();
                // e^{i(k-j)θ}: F(m) for k >= j, conj otherwise
                let fm = if k >= j { f[m] } else { f[m].conj() };
                re.add(scale * fm.re);
                im.add(scale * fm.im);
            }
            let v = Complex64::new(re.value(), im.value());
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
    }
    g
}

/// Candidate degrees before the self-convergence screen.
fn candidate_degrees(kind: SpaceKind, d: usize, p: usize) -> Vec<usize> {
    match kind {
        SpaceKind::RegularPart => (0..=curve::regular_degree_cutoff(d, p))
            .filter(|&k| curve::degree_is_integrable(d, p, k))
            .collect(),
        _ => (0..=d * p).collect(),
    }
}

/// Degrees among `degrees` whose diagonal norm integral does not stabilize
/// when the truncation is pushed out at both ends.
pub fn divergent_degrees(
    curve: &PlaneCurve,
    weight: &Weight,
    p: usize,
    degrees: &[usize],
    params: &QuadratureParams,
) -> Result<Vec<usize>, QuadratureError> {
    let diag = |ds: f64| -> Result<Vec<f64>, QuadratureError> {
        let g = QuadratureGrid::new(params.widened(ds))?;
        let m = monomial_gram(curve, weight, p, degrees, &g, true);
        Ok((0..degrees.len()).map(|i| m[(i, i)].re).collect())
    };
    let (a, b) = (diag(4.0)?, diag(8.0)?);
    Ok(degrees
        .iter()
        .enumerate()
        .filter(|&(i, _)| !((b[i] - a[i]).abs() <= SELF_CONVERGENCE_TOL * b[i].abs()) || !b[i].is_finite())
        .map(|(_, &k)| k)
        .collect())
}

impl BergmanSpace {
    /// Builds the Gram matrix of `kind` at level `p` on `grid`.
    pub fn assemble(
        kind: SpaceKind,
        curve: &PlaneCurve,
        weight: &Weight,
        p: usize,
        grid: &QuadratureGrid,
    ) -> Result<Self, BergmanError> {
        if p == 0 {
            return Err(BergmanError::InvalidLevel);
        }
        let d = curve.degree();
        if weight.scale() != d {
            return Err(BergmanError::DegreeMismatch {
                weight: weight.scale(),
                curve: d,
            });
        }
        let candidates = candidate_degrees(kind, d, p);
        let divergent = divergent_degrees(curve, weight, p, &candidates, grid.params())?;
        let (degrees, excluded): (Vec<usize>, Vec<usize>) = match kind {
            SpaceKind::RegularPart => {
                for k in &divergent {
                    log::warn!("degree {k} excluded from the regular-part space: norm integral diverges");
                }
                let mut excluded: Vec<usize> = (0..=curve::regular_degree_cutoff(d, p))
                    .filter(|k| !curve::degree_is_integrable(d, p, *k))
                    .collect();
                excluded.extend(divergent.iter().copied());
                excluded.sort_unstable();
                (
                    candidates.into_iter().filter(|k| !divergent.contains(k)).collect(),
                    excluded,
                )
            }
            _ => {
                if let Some(&k) = divergent.first() {
                    return Err(BergmanError::DivergentNormEntry { degree: k });
                }
                (candidates, Vec::new())
            }
        };
        if degrees.is_empty() {
            return Err(BergmanError::Empty);
        }
        let mono = monomial_gram(curve, weight, p, &degrees, grid, false);
        let kmax = *degrees.last().unwrap();
        let (coords, gram) = match kind {
            SpaceKind::Restriction => {
                let c = curve.restricted_space_basis(p, curve::RANK_TOL);
                let g = c.adjoint() * &mono * &c;
                (c, g)
            }
            _ => {
                let mut c = DMatrix::<Complex64>::zeros(kmax + 1, degrees.len());
                for (j, &k) in degrees.iter().enumerate() {
                    c[(k, j)] = Complex64::new(1.0, 0.0);
                }
                (c, mono)
            }
        };
        Ok(Self {
            kind,
            p,
            curve: curve.clone(),
            weight: weight.clone(),
            grid: grid.params().clone(),
            degrees,
            excluded_degrees: excluded,
            coords,
            gram: linalg::hermitian_part(&gram),
            basis: None,
        })
    }

    /// A space given directly by an orthonormal basis (monomial coefficients
    /// in the columns of `basis_poly`); the Gram matrix is taken to be the
    /// identity.
    pub fn from_orthonormal_basis(
        kind: SpaceKind,
        curve: &PlaneCurve,
        weight: &Weight,
        p: usize,
        basis_poly: DMatrix<Complex64>,
    ) -> Self {
        let n = basis_poly.ncols();
        let degrees = (0..basis_poly.nrows()).collect();
        let eye = DMatrix::<Complex64>::identity(n, n);
        Self {
            kind,
            p,
            curve: curve.clone(),
            weight: weight.clone(),
            grid: QuadratureParams::default(),
            degrees,
            excluded_degrees: Vec::new(),
            coords: basis_poly.clone(),
            gram: eye.clone(),
            basis: Some(Orthonormal {
                coords: eye,
                evaluator: BasisEvaluator::new(basis_poly),
                condition: 1.0,
                raw_condition: 1.0,
                residual: 0.0,
            }),
        }
    }

    /// Computes the orthonormal basis `B` with `B† G B = I`.
    pub fn orthonormalize(mut self) -> Result<Self, BergmanError> {
        let o = linalg::orthonormalize(&self.gram, CONDITION_CAP)?;
        let poly = &self.coords * &o.basis;
        self.basis = Some(Orthonormal {
            coords: o.basis,
            evaluator: BasisEvaluator::new(poly),
            condition: o.condition,
            raw_condition: o.raw_condition,
            residual: o.residual,
        });
        Ok(self)
    }

    /// Assembles and orthonormalizes in one go.
    pub fn build(
        kind: SpaceKind,
        curve: &PlaneCurve,
        weight: &Weight,
        p: usize,
        grid: &QuadratureGrid,
    ) -> Result<Self, BergmanError> {
        Self::assemble(kind, curve, weight, p, grid)?.orthonormalize()
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn level(&self) -> usize {
        self.p
    }

    pub fn curve(&self) -> &PlaneCurve {
        &self.curve
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn grid_params(&self) -> &QuadratureParams {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn excluded_degrees(&self) -> &[usize] {
        &self.excluded_degrees
    }

    /// Highest monomial degree occurring in the space.
    pub fn top_degree(&self) -> usize {
        self.coords.nrows() - 1
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    pub fn coords(&self) -> &DMatrix<Complex64> {
        &self.coords
    }

    fn ortho(&self) -> Result<&Orthonormal, BergmanError> {
        self.basis.as_ref().ok_or(BergmanError::NotOrthonormalized)
    }

    /// Orthonormal basis in space coordinates.
    pub fn basis(&self) -> Result<&DMatrix<Complex64>, BergmanError> {
        Ok(&self.ortho()?.coords)
    }

    /// Orthonormal basis as monomial coefficient columns.
    pub fn basis_poly(&self) -> Result<&DMatrix<Complex64>, BergmanError> {
        Ok(self.ortho()?.evaluator.coeffs())
    }

    pub fn evaluator(&self) -> Result<&BasisEvaluator, BergmanError> {
        Ok(&self.ortho()?.evaluator)
    }

    /// Condition number of the equilibrated Gram matrix.
    pub fn condition_number(&self) -> Result<f64, BergmanError> {
        Ok(self.ortho()?.condition)
    }

    pub fn raw_condition_number(&self) -> Result<f64, BergmanError> {
        Ok(self.ortho()?.raw_condition)
    }

    /// `max |B† G B - I|`.
    pub fn orthonormality_residual(&self) -> Result<f64, BergmanError> {
        Ok(self.ortho()?.residual)
    }

    /// Values `|S_j(ζ)|_{h_p} = |s_j(ζ)| e^{-pφ}` of the orthonormal basis, as
    /// `(v, c)` with `|S_j(ζ)|_{h_p} = |v_j| e^c`.
    pub fn basis_values(&self, z: Complex64) -> Result<(Vec<Complex64>, f64), BergmanError> {
        let phi = self.weight.value(z);
        if phi == f64::NEG_INFINITY || phi.is_nan() {
            return Err(BergmanError::WeightPole(z));
        }
        let (v, c) = self.ortho()?.evaluator.eval(z);
        Ok((v, c - self.p as f64 * phi))
    }

    /// `log P_p(ζ) = log Σ_j |S_j(ζ)|²_{h_p}`.
    pub fn log_kernel_at(&self, z: Complex64) -> Result<f64, BergmanError> {
        let (v, c) = self.basis_values(z)?;
        Ok(v.iter().map(|x| x.norm_sqr()).sum::<f64>().ln() + 2.0 * c)
    }

    /// Bergman kernel function `P_p(ζ)`.
    pub fn kernel_at(&self, z: Complex64) -> Result<f64, BergmanError> {
        Ok(self.log_kernel_at(z)?.exp())
    }

    /// `log P_p`, or NaN at weight poles (so quadrature skips them).
    fn log_kernel_or_nan(&self, z: Complex64) -> f64 {
        self.log_kernel_at(z).unwrap_or(f64::NAN)
    }

    /// `(1/p) ∫ |log P_p| W dλ`.
    pub fn log_kernel_l1(&self, grid: &QuadratureGrid) -> Result<f64, BergmanError> {
        self.ortho()?;
        let v = grid.integrate_real(|z| {
            self.log_kernel_or_nan(z).abs() * self.curve.fs_pullback_density(z)
        })?;
        Ok(v / self.p as f64)
    }

    /// `∫ P_p W dλ`, which equals the dimension.
    pub fn kernel_trace(&self, grid: &QuadratureGrid) -> Result<f64, BergmanError> {
        self.ortho()?;
        Ok(grid.integrate_real(|z| {
            (self.log_kernel_or_nan(z) + self.curve.log_fs_pullback_density(z)).exp()
        })?)
    }

    /// Fubini–Study measure `γ_p` of this space.
    pub fn fs_measure(&self, grid: &QuadratureGrid) -> Result<FubiniStudyMeasure, BergmanError> {
        let evaluator = self.ortho()?.evaluator.clone();
        let step = LAPLACIAN_STEP.min(0.05 * grid.angle_weight());
        let measure = FubiniStudyMeasure {
            evaluator: Arc::new(evaluator),
            p: self.p,
            degree: self.curve.degree(),
            step,
            smooth_mass: 0.0,
            negative_mass: 0.0,
        };
        let dens: Vec<f64> = {
            let nodes: Vec<(Complex64, f64)> = grid.nodes().collect();
            nodes
                .par_iter()
                .map(|&(z, w)| w * measure.density_at(z))
                .collect()
        };
        let mut pos = CompensatedSum::default();
        let mut neg = CompensatedSum::default();
        for v in dens {
            if v >= 0.0 {
                pos.add(v);
            } else {
                neg.add(-v);
            }
        }
        Ok(FubiniStudyMeasure {
            smooth_mass: pos.value() - neg.value(),
            negative_mass: neg.value(),
            ..measure
        })
    }
}

/// `γ_p = dd^c u`, `u = ½ log Σ|s_j|²`: a smooth density on the affine chart
/// plus the atom `pd - k_max` at `x1`.
#[derive(Debug, Clone)]
pub struct FubiniStudyMeasure {
    evaluator: Arc<BasisEvaluator>,
    p: usize,
    degree: usize,
    step: f64,
    /// Quadrature mass of the smooth part.
    pub smooth_mass: f64,
    /// Quadrature mass of the negative part of the smooth density.
    pub negative_mass: f64,
}

impl FubiniStudyMeasure {
    pub fn level(&self) -> usize {
        self.p
    }

    /// Density of the smooth part of `γ_p` against `dλ`.
    pub fn density_at(&self, z: Complex64) -> f64 {
        log_polar_laplacian(|w| self.evaluator.potential(w), z, self.step, &[])
    }

    /// Signed atom of `γ_p` at `x1`.
    pub fn atom_at_x1(&self) -> i64 {
        (self.p * self.degree) as i64 - self.evaluator.top_degree() as i64
    }

    pub fn total_mass(&self) -> f64 {
        self.smooth_mass + self.atom_at_x1() as f64
    }

    /// Mass of the negative variation: the smooth negative part plus the
    /// negative part of the atom.
    pub fn negative_variation(&self) -> f64 {
        self.negative_mass + (-self.atom_at_x1()).max(0) as f64
    }

    pub fn evaluator(&self) -> &BasisEvaluator {
        &self.evaluator
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> QuadratureGrid {
        QuadratureGrid::new(QuadratureParams::with_resolution(n, n)).unwrap()
    }

    #[test]
    fn radial_gram_is_diagonal() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&cubic);
        let s = BergmanSpace::assemble(SpaceKind::WeaklyHolomorphic, &cubic, &w, 2, &grid(128)).unwrap();
        assert_eq!(s.dim(), 7);
        let g = s.gram();
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    assert!(g[(i, j)].norm() < 1e-14 * g[(i, i)].re.max(g[(j, j)].re));
                }
            }
        }
    }

    #[test]
    fn regular_part_dimension() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&cubic);
        let s = BergmanSpace::assemble(SpaceKind::RegularPart, &cubic, &w, 2, &grid(128)).unwrap();
        assert_eq!(s.degrees(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(s.top_degree(), 7);
    }

    #[test]
    fn restriction_dimension() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&cubic);
        let s = BergmanSpace::build(SpaceKind::Restriction, &cubic, &w, 2, &grid(128)).unwrap();
        assert_eq!(s.dim(), 6);
        assert!(s.orthonormality_residual().unwrap() < 1e-8);
    }

    #[test]
    fn kernel_before_basis_is_an_error() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&cubic);
        let s = BergmanSpace::assemble(SpaceKind::WeaklyHolomorphic, &cubic, &w, 1, &grid(64)).unwrap();
        assert_eq!(
            s.kernel_at(Complex64::new(0.5, 0.0)),
            Err(BergmanError::NotOrthonormalized)
        );
    }

    #[test]
    fn weight_pole_reported() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let a = Complex64::new(0.5, 0.0);
        let w = Weight::custom(
            3,
            Arc::new(move |z: Complex64| cubic_fs(z) + 0.0 * (z - a).norm().ln() + if z == a { f64::NEG_INFINITY } else { 0.0 }),
            Default::default(),
        );
        let basis = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let s = BergmanSpace::from_orthonormal_basis(SpaceKind::WeaklyHolomorphic, &cubic, &w, 1, basis);
        assert_eq!(s.kernel_at(a), Err(BergmanError::WeightPole(a)));
        assert!(s.kernel_at(Complex64::new(0.1, 0.0)).is_ok());
    }

    fn cubic_fs(z: Complex64) -> f64 {
        PlaneCurve::monomial(3).unwrap().fs_potential(z)
    }

    #[test]
    fn trace_identity() {
        let c = PlaneCurve::from_real_affine(&[1.0, 1.0, 0.0, 1.0]).unwrap();
        let w = Weight::fubini_study(&c);
        let g = grid(128);
        for kind in SpaceKind::ALL {
            let s = BergmanSpace::build(kind, &c, &w, 3, &g).unwrap();
            let t = s.kernel_trace(&g).unwrap();
            assert!((t - s.dim() as f64).abs() < 1e-5, "{kind}: {t} vs {}", s.dim());
        }
    }

    #[test]
    fn radial_kernel_is_rotation_invariant() {
        let c = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&c);
        let s = BergmanSpace::build(SpaceKind::RegularPart, &c, &w, 4, &grid(128)).unwrap();
        for &r in &[0.1, 0.9, 1.7, 6.0] {
            let a = s.kernel_at(Complex64::new(r, 0.0)).unwrap();
            let b = s.kernel_at(Complex64::from_polar(r, 2.2)).unwrap();
            assert!((a - b).abs() <= 1e-10 * a, "{a} {b}");
        }
    }

    #[test]
    fn kernel_domination_and_basis_independence() {
        let c = PlaneCurve::from_real_affine(&[0.5, -1.0, 0.0, 1.0]).unwrap();
        let w = Weight::fubini_study(&c);
        let g = grid(128);
        let wk = BergmanSpace::build(SpaceKind::WeaklyHolomorphic, &c, &w, 2, &g).unwrap();
        let rg = BergmanSpace::build(SpaceKind::RegularPart, &c, &w, 2, &g).unwrap();
        let rs = BergmanSpace::build(SpaceKind::Restriction, &c, &w, 2, &g).unwrap();
        // rotate the basis by a unitary built from a Hermitian generator
        let n = wk.dim();
        let h = DMatrix::from_fn(n, n, |i, j| {
            Complex64::new((i + j) as f64 * 0.1, i as f64 * 0.05 - j as f64 * 0.05)
        });
        let h = linalg::hermitian_part(&h);
        let eig = h.clone().symmetric_eigen();
        let u = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)] * Complex64::from_polar(1.0, eig.eigenvalues[j]));
        let rotated = BergmanSpace::from_orthonormal_basis(
            SpaceKind::WeaklyHolomorphic,
            &c,
            &w,
            2,
            wk.basis_poly().unwrap() * &u,
        );
        for k in 0..40 {
            let z = Complex64::from_polar(0.05 * (k as f64 + 1.0), 0.7 * k as f64);
            let pw = wk.kernel_at(z).unwrap();
            assert!(pw <= rg.kernel_at(z).unwrap() * (1.0 + 1e-10));
            assert!(rs.kernel_at(z).unwrap() <= pw * (1.0 + 1e-10));
            let pr = rotated.kernel_at(z).unwrap();
            assert!((pr - pw).abs() <= 1e-10 * pw);
        }
    }

    #[test]
    fn variational_formula() {
        let c = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&c);
        let s = BergmanSpace::build(SpaceKind::WeaklyHolomorphic, &c, &w, 2, &grid(128)).unwrap();
        let z = Complex64::new(0.4, -1.3);
        let (v, sc) = s.basis_values(z).unwrap();
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let ext: Complex64 = v.iter().map(|x| x * x.conj() / norm).sum();
        let k = s.kernel_at(z).unwrap();
        assert!((ext.norm_sqr() * (2.0 * sc).exp() - k).abs() <= 1e-10 * k);
        // a non-extremal unit vector does strictly worse
        let e0: Complex64 = v[0];
        assert!(e0.norm_sqr() * (2.0 * sc).exp() < k);
    }

    #[test]
    fn fs_measure_mass_and_atom() {
        let c = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&c);
        let g = grid(128);
        let rg = BergmanSpace::build(SpaceKind::RegularPart, &c, &w, 2, &g).unwrap();
        let m = rg.fs_measure(&g).unwrap();
        assert_eq!(m.atom_at_x1(), -1);
        assert!((m.total_mass() - 6.0).abs() < 1e-3, "{}", m.total_mass());
        assert!((m.negative_variation() - 1.0).abs() < 1e-3);
        let wk = BergmanSpace::build(SpaceKind::WeaklyHolomorphic, &c, &w, 2, &g).unwrap();
        let m = wk.fs_measure(&g).unwrap();
        assert_eq!(m.atom_at_x1(), 0);
        assert!((m.total_mass() - 6.0).abs() < 1e-3, "{}", m.total_mass());
    }

    #[test]
    fn constant_space_l1() {
        // a single constant section with |s|² e^{-2pφ} = κ e^{-2pφ}; for the
        // zero weight P ≡ κ and the L¹ norm is |log κ|·d/p
        let c = PlaneCurve::monomial(3).unwrap();
        let w = Weight::custom(3, Arc::new(|_| 0.0), Default::default());
        let kappa: f64 = 0.3;
        let b = DMatrix::from_element(1, 1, Complex64::new(kappa.sqrt(), 0.0));
        let s = BergmanSpace::from_orthonormal_basis(SpaceKind::WeaklyHolomorphic, &c, &w, 4, b);
        let l1 = s.log_kernel_l1(&grid(256)).unwrap();
        let want = kappa.ln().abs() * 3.0 / 4.0;
        assert!((l1 - want).abs() < 1e-6, "{l1} {want}");
    }

    #[test]
    fn divergence_detected() {
        let c = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fubini_study(&c);
        let q = QuadratureParams::default();
        // 2k - 2pd - 2d < -2 fails from k = dp + d - 1 on
        assert_eq!(divergent_degrees(&c, &w, 2, &[0, 7, 8, 9], &q).unwrap(), vec![8, 9]);
        // e^{-2pφ} = |ζ|^{-6p} near the origin
        let pole = Weight::custom(3, Arc::new(|z: Complex64| 3.0 * z.norm().ln()), Default::default());
        assert_eq!(
            BergmanSpace::assemble(SpaceKind::WeaklyHolomorphic, &c, &pole, 1, &grid(64)).unwrap_err(),
            BergmanError::DivergentNormEntry { degree: 0 }
        );
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SpaceKind::ALL {
            assert_eq!(k.as_str().parse::<SpaceKind>().unwrap(), k);
        }
        assert!("c".parse::<SpaceKind>().is_err());
    }
}
