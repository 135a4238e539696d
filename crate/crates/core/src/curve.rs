//! The graph curves `X_Q = { z0^(d-1) z2 = Q(z0, z1) }` in the projective plane.
//!
//! In the affine chart `z0 = 1` the curve is the graph `z2 = P(z1)` with
//! `P(ζ) = Q(1, ζ)`, so the affine coordinate `ζ` parametrizes everything
//! except the single point `x1 = [0:0:1]` at infinity. For `d >= 3` that point
//! is singular and locally irreducible; the normalization is the projective
//! line, with ramification index `d - 2` at `y = [0:1]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("leading coefficient a0 vanishes, so deg P < d")]
    ZeroLeadingCoefficient,
    #[error("curve degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("expected {expected} coefficients for degree {degree}, got {got}")]
    CoefficientCount {
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("normalization is undefined at t0 = t1 = 0")]
    BothZero,
    #[error("non-finite coefficient")]
    NonFinite,
}

/// Evaluates a polynomial given by ascending coefficients.
pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Product of two polynomials in ascending coefficient order.
pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Plane curve `X_Q` of degree `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCurve {
    /// `a_0 .. a_d` in `Q(z0, z1) = Σ a_j z0^j z1^(d-j)`.
    coeffs: Vec<Complex64>,
    degree: usize,
    /// `P` in ascending powers of `ζ`: `p[k] = a_(d-k)`.
    p: Vec<Complex64>,
    dp: Vec<Complex64>,
}

impl PlaneCurve {
    pub fn new(coeffs: Vec<Complex64>, degree: usize) -> Result<Self, CurveError> {
        if degree < 2 {
            return Err(CurveError::DegreeTooSmall(degree));
        }
        if coeffs.len() != degree + 1 {
            return Err(CurveError::CoefficientCount {
                degree,
                expected: degree + 1,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(CurveError::NonFinite);
        }
        if coeffs[0].norm() == 0.0 {
            return Err(CurveError::ZeroLeadingCoefficient);
        }
        let p: Vec<Complex64> = coeffs.iter().rev().copied().collect();
        let dp = p
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Ok(Self {
            coeffs,
            degree,
            p,
            dp,
        })
    }

    /// `P(ζ) = ζ^d`.
    pub fn monomial(degree: usize) -> Result<Self, CurveError> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[0] = Complex64::new(1.0, 0.0);
        Self::new(coeffs, degree)
    }

    /// Builds the curve from ascending coefficients of `P` (length `d + 1`).
    pub fn from_affine(p: &[Complex64]) -> Result<Self, CurveError> {
        if p.is_empty() {
            return Err(CurveError::DegreeTooSmall(0));
        }
        let degree = p.len() - 1;
        Self::new(p.iter().rev().copied().collect(), degree)
    }

    /// Same as [`PlaneCurve::from_affine`] for real coefficients.
    pub fn from_real_affine(p: &[f64]) -> Result<Self, CurveError> {
        let c: Vec<Complex64> = p.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_affine(&c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Ascending coefficients of `P`.
    pub fn affine_poly(&self) -> &[Complex64] {
        &self.p
    }

    pub fn is_singular(&self) -> bool {
        self.degree >= 3
    }

    /// Ramification index at `y = [0:1]`, the preimage of `x1`.
    pub fn ramification_index(&self) -> usize {
        self.degree - 2
    }

    /// True when `P = a0 ζ^d`, in which case every built-in object is radial.
    pub fn is_radial(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval_p(&self, z: Complex64) -> Complex64 {
        horner(&self.p, z)
    }

    pub fn eval_dp(&self, z: Complex64) -> Complex64 {
        horner(&self.dp, z)
    }

    /// `Q(t0, t1) = Σ a_j t0^j t1^(d-j)`.
    pub fn eval_q(&self, t0: Complex64, t1: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| a * t0.powu(j as u32) * t1.powu((self.degree - j) as u32))
            .sum()
    }

    /// Residual of the defining equation `z0^(d-1) z2 - Q(z0, z1)`.
    pub fn defining_residual(&self, pt: &ProjectivePoint) -> Complex64 {
        let [z0, z1, z2] = pt.coords;
        z0.powu(self.degree as u32 - 1) * z2 - self.eval_q(z0, z1)
    }

    /// Normalization map `σ([t0:t1]) = [t0^d : t0^(d-1) t1 : Q(t0, t1)]`.
    pub fn normalize_point(&self, t0: Complex64, t1: Complex64) -> Result<ProjectivePoint, CurveError> {
        if t0.norm() == 0.0 && t1.norm() == 0.0 {
            return Err(CurveError::BothZero);
        }
        let d = self.degree as u32;
        Ok(ProjectivePoint::new([
            t0.powu(d),
            t0.powu(d - 1) * t1,
            self.eval_q(t0, t1),
        ]))
    }

    /// Density of the pulled-back Fubini–Study form against `dλ`:
    /// `(1 + |P'|² + |ζP' - P|²) / (π (1 + |ζ|² + |P|²)²)`.
    pub fn fs_pullback_density(&self, z: Complex64) -> f64 {
        self.log_fs_pullback_density(z).exp()
    }

    /// Logarithm of [`Self::fs_pullback_density`], finite for every `ζ`.
    pub fn log_fs_pullback_density(&self, z: Complex64) -> f64 {
        let p = self.eval_p(z);
        let dp = self.eval_dp(z);
        let a = z * dp - p;
        // scale by t = max(1, |ζ|, |P|) so that nothing overflows far out
        let t = 1.0f64.max(z.norm()).max(p.norm());
        let inv = 1.0 / t;
        let num = inv * inv + (dp * inv).norm_sqr() + (a * inv).norm_sqr();
        let den = inv * inv + (z * inv).norm_sqr() + (p * inv).norm_sqr();
        num.ln() - std::f64::consts::PI.ln() - 2.0 * t.ln() - 2.0 * den.ln()
    }

    /// `½ log(1 + |ζ|² + |P(ζ)|²)`, the Fubini–Study weight of `O(1)|X` in the
    /// affine frame.
    pub fn fs_potential(&self, z: Complex64) -> f64 {
        let p = self.eval_p(z);
        let t = 1.0f64.max(z.norm()).max(p.norm());
        let inv = 1.0 / t;
        let s = inv * inv + (z * inv).norm_sqr() + (p * inv).norm_sqr();
        t.ln() + 0.5 * s.ln()
    }

    /// Spanning family `{ζ^a P^c : a + c <= p}` of the restrictions `V_p`,
    /// each as `d p + 1` ascending monomial coefficients.
    pub fn restricted_space_generators(&self, p: usize) -> Vec<Vec<Complex64>> {
        let len = self.degree * p + 1;
        let mut powers: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0)]];
        for c in 1..=p {
            let next = poly_mul(&powers[c - 1], &self.p);
            powers.push(next);
        }
        let mut out = Vec::with_capacity((p + 1) * (p + 2) / 2);
        for (c, pc) in powers.iter().enumerate() {
            for a in 0..=(p - c) {
                let mut v = vec![Complex64::new(0.0, 0.0); len];
                for (k, &x) in pc.iter().enumerate() {
                    v[k + a] = x;
                }
                out.push(v);
            }
        }
        out
    }

    /// Orthonormal (Euclidean) basis of the span of the generators, in monomial
    /// coordinates; its column count is the numerical rank at relative
    /// singular-value threshold `rank_tol`.
    pub fn restricted_space_basis(&self, p: usize, rank_tol: f64) -> DMatrix<Complex64> {
        let gens = self.restricted_space_generators(p);
        let rows = self.degree * p + 1;
        let mut m = DMatrix::<Complex64>::zeros(rows, gens.len());
        for (j, g) in gens.iter().enumerate() {
            let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for (i, &c) in g.iter().enumerate() {
                m[(i, j)] = c / norm;
            }
        }
        linalg::column_space(&m, rank_tol)
    }

    pub fn restricted_space_rank(&self, p: usize) -> usize {
        self.restricted_space_basis(p, RANK_TOL).ncols()
    }
}

/// Relative singular-value threshold for the rank of `V_p`.
pub const RANK_TOL: f64 = 1e-9;

/// `dim H⁰_w(X, L^p) = dp + 1`.
pub fn dim_weakly_holomorphic(d: usize, p: usize) -> usize {
    d * p + 1
}

/// Closed form `dp - d(d-3)/2` for `dim V_p`, as printed for `d >= 3`.
/// It agrees with [`dim_restriction_exact`] only when `p >= d - 2`.
pub fn dim_restriction_formula(d: usize, p: usize) -> i64 {
    let d = d as i64;
    d * p as i64 - d * (d - 3) / 2
}

/// Exact `dim V_p`: degree-`p` ternary forms modulo multiples of the defining
/// equation, `C(p+2, 2) - C(p-d+2, 2)` (the second term absent for `p < d`).
pub fn dim_restriction_exact(d: usize, p: usize) -> usize {
    let all = (p + 1) * (p + 2) / 2;
    if p >= d {
        let q = p - d;
        all - (q + 1) * (q + 2) / 2
    } else {
        all
    }
}

/// Top polynomial degree `dp + d - 2` of finite-norm sections off `Σ`.
pub fn regular_degree_cutoff(d: usize, p: usize) -> usize {
    d * p + d - 2
}

/// Degree-arithmetic integrability test: `|ζ|^(2k) e^(-2pφ) σ*ω` with
/// `φ ~ d log|ζ|` is integrable at infinity iff `2k - 2pd - 2d < -2`.
pub fn degree_is_integrable(d: usize, p: usize, k: usize) -> bool {
    let lhs = 2 * k as i64 - (2 * p * d) as i64 - (2 * d) as i64;
    lhs < -2
}

/// Point of the projective plane, stored as a raw homogeneous triple.
#[derive(Debug, Clone, Copy)]
pub struct ProjectivePoint {
    pub coords: [Complex64; 3],
}

impl ProjectivePoint {
    pub fn new(coords: [Complex64; 3]) -> Self {
        Self { coords }
    }

    /// Rescales so the largest-modulus coordinate equals one (first such index).
    pub fn normalized(&self) -> [Complex64; 3] {
        let mut idx = 0;
        for i in 1..3 {
            if self.coords[i].norm() > self.coords[idx].norm() {
                idx = i;
            }
        }
        let s = self.coords[idx];
        [self.coords[0] / s, self.coords[1] / s, self.coords[2] / s]
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        // scale-invariant: cross products of the triples vanish
        let a = self.normalized();
        let b = other.normalized();
        let na = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let nb = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (a[i] * b[j] - a[j] * b[i]).norm() > tol * na * nb {
                    return false;
                }
            }
        }
        true
    }

    /// Affine coordinates `(z1/z0, z2/z0)`, if `z0 != 0`.
    pub fn affine(&self) -> Option<(Complex64, Complex64)> {
        let z0 = self.coords[0];
        (z0.norm() > 0.0).then(|| (self.coords[1] / z0, self.coords[2] / z0))
    }
}

impl PartialEq for ProjectivePoint {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cubic_has_ramification_one() {
        let curve = PlaneCurve::new(vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)], 3).unwrap();
        assert_eq!(curve.ramification_index(), 1);
        assert!(curve.is_singular());
    }

    #[test]
    fn conic_is_smooth() {
        let curve = PlaneCurve::new(vec![c(1., 0.), c(0., 0.), c(0., 0.)], 2).unwrap();
        assert_eq!(curve.ramification_index(), 0);
        assert!(!curve.is_singular());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            PlaneCurve::new(vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)], 3),
            Err(CurveError::ZeroLeadingCoefficient)
        );
        assert_eq!(
            PlaneCurve::new(vec![c(1., 0.), c(1., 0.)], 1),
            Err(CurveError::DegreeTooSmall(1))
        );
        assert!(matches!(
            PlaneCurve::new(vec![c(1., 0.), c(1., 0.)], 3),
            Err(CurveError::CoefficientCount { .. })
        ));
    }

    #[test]
    fn normalization_hits_singular_point() {
        let curve = PlaneCurve::monomial(3).unwrap();
        let x1 = ProjectivePoint::new([c(0., 0.), c(0., 0.), c(1., 0.)]);
        assert_eq!(curve.normalize_point(c(0., 0.), c(1., 0.)).unwrap(), x1);
        let origin = ProjectivePoint::new([c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert_eq!(curve.normalize_point(c(1., 0.), c(0., 0.)).unwrap(), origin);
        assert_eq!(
            curve.normalize_point(c(0., 0.), c(0., 0.)),
            Err(CurveError::BothZero)
        );
    }

    #[test]
    fn normalization_is_graph_point() {
        let curve =
            PlaneCurve::new(vec![c(2., 1.), c(0., 0.), c(1., 0.), c(-1., 0.5)], 3).unwrap();
        let z = c(0.7, -1.3);
        let pt = curve.normalize_point(c(1., 0.), z).unwrap();
        let (z1, z2) = pt.affine().unwrap();
        assert!((z1 - z).norm() < 1e-14);
        assert!((z2 - curve.eval_p(z)).norm() < 1e-13);
    }

    #[test]
    fn projective_equality_is_scale_invariant() {
        let a = ProjectivePoint::new([c(1., 0.), c(2., 1.), c(0., -3.)]);
        let s = c(-0.3, 2.5);
        let b = ProjectivePoint::new([a.coords[0] * s, a.coords[1] * s, a.coords[2] * s]);
        assert_eq!(a, b);
        let other = ProjectivePoint::new([c(1., 0.), c(2., 1.), c(0., -3.1)]);
        assert_ne!(a, other);
    }

    #[test]
    fn density_at_origin_for_conic() {
        let curve = PlaneCurve::monomial(2).unwrap();
        let w = curve.fs_pullback_density(c(0., 0.));
        assert!((w - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn density_decay_envelope_for_cubic() {
        let curve = PlaneCurve::monomial(3).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..=60 {
            let r = 10f64.powf(1.0 + 3.0 * i as f64 / 60.0);
            let v = curve.fs_pullback_density(c(r, 0.)) * (1.0 + r.powi(6));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo > 0.1 && hi < 10.0, "lo {lo} hi {hi}");
    }

    #[test]
    fn log_density_matches_direct_formula() {
        let curve =
            PlaneCurve::new(vec![c(1., 0.), c(0.5, 0.), c(0., 1.), c(-2., 0.)], 3).unwrap();
        for &z in &[c(0.3, 0.2), c(-1.5, 2.0), c(4.0, -0.1)] {
            let p = curve.eval_p(z);
            let dp = curve.eval_dp(z);
            let direct = (1.0 + dp.norm_sqr() + (z * dp - p).norm_sqr())
                / (std::f64::consts::PI * (1.0 + z.norm_sqr() + p.norm_sqr()).powi(2));
            assert!((curve.fs_pullback_density(z) / direct - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn generator_ranks_small_cases() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        assert_eq!(cubic.restricted_space_generators(2).len(), 6);
        assert_eq!(cubic.restricted_space_rank(2), 6);
        assert_eq!(cubic.restricted_space_rank(1), 3);
        let quartic = PlaneCurve::monomial(4).unwrap();
        assert_eq!(quartic.restricted_space_rank(2), 6);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(dim_weakly_holomorphic(3, 2), 7);
        assert_eq!(dim_restriction_formula(3, 2), 6);
        assert_eq!(dim_restriction_formula(4, 2), 6);
        assert_eq!(regular_degree_cutoff(3, 2), 7);
        for d in 3..=6 {
            for p in (d - 2)..=8 {
                assert_eq!(dim_restriction_exact(d, p) as i64, dim_restriction_formula(d, p));
            }
        }
        assert_eq!(dim_restriction_exact(4, 1), 3);
        assert!(degree_is_integrable(3, 1, 4));
        assert!(!degree_is_integrable(3, 1, 5));
    }
}
