//! Metric weights `φ ∈ d·𝓛(ℂ)` for `O(1)|X` in the affine frame, and their
//! curvature measures `dd^c φ`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::curve::PlaneCurve;
use crate::quadrature::{QuadratureError, QuadratureGrid};

/// Stencil spacing (in `log r` and `θ`) of the discrete Laplacian.
pub const LAPLACIAN_STEP: f64 = 1e-3;
/// Tolerance on the total curvature mass.
pub const MASS_TOL: f64 = 1e-3;
/// Number of angles sampled per radius by [`growth_check`].
const GROWTH_ANGLES: usize = 64;

pub type PotentialFn = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type DensityFn = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("growth scale must be at least 2, got {0}")]
    ScaleTooSmall(usize),
    #[error("φ - d log⁺|ζ| still increases at radius {radius:.3e} (by {increase:.3e})")]
    GrowthViolation { radius: f64, increase: f64 },
    #[error("growth check needs increasing radii reaching at least 1e3")]
    InvalidRadii,
    #[error("curvature mass {total} differs from degree {degree}")]
    MassMismatch { total: f64, degree: usize },
    #[error("weight scale {weight} does not match curve degree {curve}")]
    DegreeMismatch { weight: usize, curve: usize },
    #[error("negative singular mass {0}")]
    NegativeMass(f64),
    #[error("grid too coarse for curvature: {n_radial} x {n_angular} (need >= 64 x 64)")]
    GridTooCoarse { n_radial: usize, n_angular: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Declared singular parts of `dd^c φ`: uniform circle measures and point
/// masses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SingularParts {
    /// `(radius, total mass)` of centered uniform circle measures.
    pub circles: Vec<(f64, f64)>,
    pub atoms: Vec<(Complex64, f64)>,
}

impl SingularParts {
    pub fn mass(&self) -> f64 {
        self.circles.iter().map(|c| c.1).sum::<f64>() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }
}

#[derive(Clone)]
pub enum WeightKind {
    /// `½ log(1 + |ζ|² + |P(ζ)|²)`.
    FubiniStudy(PlaneCurve),
    /// `d log⁺|ζ|`, the extremal member of the class.
    LogPlus,
    /// `φ(ζ) = profile(|ζ|)`, optionally with a closed-form curvature density.
    SmoothRadial {
        profile: RadialFn,
        density: Option<RadialFn>,
    },
    Custom {
        potential: PotentialFn,
        singular: SingularParts,
    },
}

/// A weight together with its growth scale `d`.
#[derive(Clone)]
pub struct Weight {
    kind: WeightKind,
    scale: usize,
    label: String,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("label", &self.label)
            .field("scale", &self.scale)
            .finish()
    }
}

/// `½ log(1 + |ζ|² + |P(ζ)|²)`.
pub fn fs_weight(curve: &PlaneCurve, z: Complex64) -> f64 {
    curve.fs_potential(z)
}

/// `d · max(log|ζ|, 0)`.
pub fn logplus_weight(d: usize, z: Complex64) -> f64 {
    d as f64 * z.norm().ln().max(0.0)
}

impl Weight {
    pub fn fubini_study(curve: &PlaneCurve) -> Self {
        Self {
            scale: curve.degree(),
            kind: WeightKind::FubiniStudy(curve.clone()),
            label: "fs".into(),
        }
    }

    pub fn log_plus(d: usize) -> Result<Self, WeightError> {
        if d < 2 {
            return Err(WeightError::ScaleTooSmall(d));
        }
        Ok(Self {
            kind: WeightKind::LogPlus,
            scale: d,
            label: "logplus".into(),
        })
    }

    pub fn smooth_radial(d: usize, profile: RadialFn, density: Option<RadialFn>) -> Self {
        Self {
            kind: WeightKind::SmoothRadial { profile, density },
            scale: d,
            label: "smooth_radial".into(),
        }
    }

    /// `½ d log(1 + |ζ|²)`, the Fubini–Study metric of `O(d)` on the line.
    pub fn fs_line(d: usize) -> Self {
        let dd = d as f64;
        let mut w = Self::smooth_radial(
            d,
            Arc::new(move |r: f64| 0.5 * dd * (r * r).ln_1p()),
            Some(Arc::new(move |r: f64| dd / (PI * (1.0 + r * r).powi(2)))),
        );
        w.label = "fs_line".into();
        w
    }

    pub fn custom(d: usize, potential: PotentialFn, singular: SingularParts) -> Self {
        Self {
            kind: WeightKind::Custom { potential, singular },
            scale: d,
            label: "custom".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `φ(ζ)`, possibly `-∞`.
    pub fn value(&self, z: Complex64) -> f64 {
        match &self.kind {
            WeightKind::FubiniStudy(c) => c.fs_potential(z),
            WeightKind::LogPlus => logplus_weight(self.scale, z),
            WeightKind::SmoothRadial { profile, .. } => profile(z.norm()),
            WeightKind::Custom { potential, .. } => potential(z),
        }
    }

    /// Radii where `φ` has kinks; quadrature grids should split there.
    pub fn split_radii(&self) -> Vec<f64> {
        match &self.kind {
            WeightKind::LogPlus => vec![1.0],
            WeightKind::Custom { singular, .. } => {
                let mut r: Vec<f64> = singular.circles.iter().map(|c| c.0).collect();
                r.sort_by(f64::total_cmp);
                r.dedup();
                r
            }
            _ => Vec::new(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(
            self.kind,
            WeightKind::FubiniStudy(_) | WeightKind::SmoothRadial { .. }
        )
    }

    /// True when `φ(e^{iθ}ζ) = φ(ζ)`.
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            WeightKind::FubiniStudy(c) => c.is_radial(),
            WeightKind::LogPlus | WeightKind::SmoothRadial { .. } => true,
            WeightKind::Custom { .. } => false,
        }
    }

    /// Declared or built-in singular part of the curvature.
    pub fn singular_parts(&self) -> SingularParts {
        match &self.kind {
            WeightKind::LogPlus => SingularParts {
                circles: vec![(1.0, self.scale as f64)],
                atoms: Vec::new(),
            },
            WeightKind::Custom { singular, .. } => singular.clone(),
            _ => SingularParts::default(),
        }
    }

    /// Density of the absolutely continuous part of `dd^c φ` against `dλ`.
    pub fn curvature_density(&self) -> Option<DensityFn> {
        match &self.kind {
            WeightKind::FubiniStudy(c) => {
                let c = c.clone();
                Some(Arc::new(move |z| c.fs_pullback_density(z)))
            }
            WeightKind::LogPlus => None,
            WeightKind::SmoothRadial { density: Some(rho), .. } => {
                let rho = rho.clone();
                Some(Arc::new(move |z: Complex64| rho(z.norm())))
            }
            WeightKind::SmoothRadial { profile, density: None } => {
                let profile = profile.clone();
                let f: PotentialFn = Arc::new(move |z: Complex64| profile(z.norm()));
                Some(laplacian_density(f, SingularParts::default()))
            }
            WeightKind::Custom { potential, singular } => {
                Some(laplacian_density(potential.clone(), singular.clone()))
            }
        }
    }
}

/// `(1/2π) Δu` at `ζ`, from a 5-point stencil in log-polar coordinates
/// `(s, θ) = (log|ζ|, arg ζ)`, where `Δ = e^{-2s} (∂_s² + ∂_θ²)`.
///
/// Stencil arms crossing a radius in `kinks` are replaced by a one-sided
/// second difference on the side of `ζ`.
pub fn log_polar_laplacian<F: Fn(Complex64) -> f64>(u: F, z: Complex64, h: f64, kinks: &[f64]) -> f64 {
    let s = z.norm().ln();
    let t = z.arg();
    let at = |s: f64, t: f64| u(Complex64::from_polar(s.exp(), t));
    let c = at(s, t);
    let crossing = kinks
        .iter()
        .map(|r| r.ln())
        .find(|&k| (s - k).abs() < 1.5 * h);
    let uss = match crossing {
        Some(k) if s >= k => (c - 2.0 * at(s + h, t) + at(s + 2.0 * h, t)) / (h * h),
        Some(_) => (c - 2.0 * at(s - h, t) + at(s - 2.0 * h, t)) / (h * h),
        None => (at(s + h, t) - 2.0 * c + at(s - h, t)) / (h * h),
    };
    let utt = (at(s, t + h) - 2.0 * c + at(s, t - h)) / (h * h);
    (uss + utt) * (-2.0 * s).exp() / (2.0 * PI)
}

fn laplacian_density(potential: PotentialFn, singular: SingularParts) -> DensityFn {
    let kinks: Vec<f64> = singular.circles.iter().map(|c| c.0).collect();
    let atoms: Vec<Complex64> = singular.atoms.iter().map(|a| a.0).collect();
    Arc::new(move |z: Complex64| {
        let reach = 3.0 * LAPLACIAN_STEP * z.norm();
        if atoms.iter().any(|&a| (z - a).norm() <= reach) {
            return 0.0;
        }
        let v = log_polar_laplacian(|w| potential(w), z, LAPLACIAN_STEP, &kinks);
        if v.is_finite() { v } else { 0.0 }
    })
}

/// Estimates `C_φ = sup (φ - d log⁺|ζ|)` over circles of the given radii.
/// Fails when the per-circle supremum still grows between the two largest
/// radii by more than `1e-2`.
pub fn growth_check(w: &Weight, d: usize, radii: &[f64]) -> Result<f64, WeightError> {
    if radii.len() < 2
        || radii.windows(2).any(|p| p[0] >= p[1])
        || radii[0] <= 0.0
        || *radii.last().unwrap() < 1e3
    {
        return Err(WeightError::InvalidRadii);
    }
    let sups: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (0..GROWTH_ANGLES)
                .map(|j| {
                    let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / GROWTH_ANGLES as f64);
                    w.value(z) - logplus_weight(d, z)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let n = sups.len();
    let increase = sups[n - 1] - sups[n - 2];
    if increase > 1e-2 {
        return Err(WeightError::GrowthViolation {
            radius: radii[n - 1],
            increase,
        });
    }
    Ok(sups.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Where an atom of a measure sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomLocation {
    Finite(Complex64),
    /// The singular point `x1 = [0:0:1]` at infinity of the affine chart.
    SingularPoint,
}

/// `c_1(L, h) = dd^c φ` split into an absolutely continuous part, centered
/// circle measures and atoms.
#[derive(Clone)]
pub struct CurvatureMeasure {
    density: Option<DensityFn>,
    pub circles: Vec<(f64, f64)>,
    pub atoms: Vec<(AtomLocation, f64)>,
    /// Quadrature value of the density's mass.
    pub density_mass: f64,
    pub total_mass: f64,
}

impl fmt::Debug for CurvatureMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurvatureMeasure")
            .field("has_density", &self.density.is_some())
            .field("circles", &self.circles)
            .field("atoms", &self.atoms)
            .field("density_mass", &self.density_mass)
            .field("total_mass", &self.total_mass)
            .finish()
    }
}

impl CurvatureMeasure {
    /// Assembles a measure from parts, computing the density mass on `grid`.
    pub fn from_parts(
        density: Option<DensityFn>,
        circles: Vec<(f64, f64)>,
        atoms: Vec<(AtomLocation, f64)>,
        grid: &QuadratureGrid,
    ) -> Result<Self, WeightError> {
        for &m in circles.iter().map(|c| &c.1).chain(atoms.iter().map(|a| &a.1)) {
            if m < 0.0 {
                return Err(WeightError::NegativeMass(m));
            }
        }
        let density_mass = match &density {
            Some(f) => grid.integrate_real(|z| f(z))?,
            None => 0.0,
        };
        let total_mass = density_mass
            + circles.iter().map(|c| c.1).sum::<f64>()
            + atoms.iter().map(|a| a.1).sum::<f64>();
        Ok(Self {
            density,
            circles,
            atoms,
            density_mass,
            total_mass,
        })
    }

    pub fn density(&self) -> Option<&DensityFn> {
        self.density.as_ref()
    }

    pub fn density_at(&self, z: Complex64) -> f64 {
        self.density.as_ref().map_or(0.0, |f| f(z))
    }
}

/// Curvature measure of `w`; the density mass is integrated on `grid`.
pub fn curvature_measure(w: &Weight, curve: &PlaneCurve, grid: &QuadratureGrid) -> Result<CurvatureMeasure, WeightError> {
    let gp = grid.params();
    if gp.n_radial < 64 || gp.n_angular < 64 {
        return Err(WeightError::GridTooCoarse {
            n_radial: gp.n_radial,
            n_angular: gp.n_angular,
        });
    }
    if w.scale() != curve.degree() {
        return Err(WeightError::DegreeMismatch {
            weight: w.scale(),
            curve: curve.degree(),
        });
    }
    let singular = w.singular_parts();
    let atoms = singular
        .atoms
        .iter()
        .map(|&(z, m)| (AtomLocation::Finite(z), m))
        .collect();
    let m = CurvatureMeasure::from_parts(w.curvature_density(), singular.circles, atoms, grid)?;
    if (m.total_mass - curve.degree() as f64).abs() > MASS_TOL {
        return Err(WeightError::MassMismatch {
            total: m.total_mass,
            degree: curve.degree(),
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fs_weight_values() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        assert_eq!(fs_weight(&cubic, c(0., 0.)), 0.0);
        let mut prev = None;
        for k in 2..=6 {
            let r = 10f64.powi(k);
            let gap = fs_weight(&cubic, c(r, 0.)) - 3.0 * r.ln();
            assert!(gap.abs() < 1.0);
            if let Some(p) = prev {
                assert!(gap <= p + 1e-12);
            }
            prev = Some(gap);
        }
    }

    #[test]
    fn logplus_values_and_continuity() {
        assert_eq!(logplus_weight(3, c(0.5, 0.)), 0.0);
        let e2 = std::f64::consts::E.powi(2);
        assert!((logplus_weight(3, c(e2, 0.)) - 6.0).abs() < 1e-14);
        for &eps in &[1e-3, 1e-5, 1e-8] {
            let jump = (logplus_weight(4, c(1.0 + eps, 0.)) - logplus_weight(4, c(1.0 - eps, 0.))).abs();
            assert!(jump <= 2.0 * 4.0 * eps);
        }
    }

    #[test]
    fn fs_weight_rotation_invariant() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let z = c(1.7, -0.4);
        for k in 1..8 {
            let rot = z * Complex64::from_polar(1.0, 0.77 * k as f64);
            assert!((fs_weight(&cubic, z) - fs_weight(&cubic, rot)).abs() < 1e-14);
        }
    }

    #[test]
    fn growth_checks() {
        let cubic = PlaneCurve::monomial(3).unwrap();
        let radii = [1.0, 10.0, 1e2, 1e3, 1e4, 1e6];
        let cphi = growth_check(&Weight::fubini_study(&cubic), 3, &radii).unwrap();
        assert!(cphi.is_finite() && cphi < 1.0);
        assert_eq!(growth_check(&Weight::log_plus(3).unwrap(), 3, &radii).unwrap(), 0.0);
        let too_fast = Weight::custom(
            3,
            Arc::new(|z: Complex64| 4.0 * z.norm().ln().max(0.0)),
            SingularParts::default(),
        );
        assert!(matches!(
            growth_check(&too_fast, 3, &radii),
            Err(WeightError::GrowthViolation { .. })
        ));
        assert_eq!(
            growth_check(&Weight::log_plus(3).unwrap(), 3, &[1.0, 10.0]),
            Err(WeightError::InvalidRadii)
        );
    }

    #[test]
    fn curvature_masses() {
        let grid = QuadratureGrid::new(QuadratureParams::with_resolution(128, 128)).unwrap();
        let cubic = PlaneCurve::monomial(3).unwrap();
        let fs = curvature_measure(&Weight::fubini_study(&cubic), &cubic, &grid).unwrap();
        assert!((fs.total_mass - 3.0).abs() < 1e-4);
        assert!(fs.circles.is_empty() && fs.atoms.is_empty());

        let quartic = PlaneCurve::monomial(4).unwrap();
        let lp = curvature_measure(&Weight::log_plus(4).unwrap(), &quartic, &grid).unwrap();
        assert_eq!(lp.circles, vec![(1.0, 4.0)]);
        assert_eq!(lp.density_mass, 0.0);

        let line = curvature_measure(&Weight::fs_line(3), &cubic, &grid).unwrap();
        assert!((line.total_mass - 3.0).abs() < 1e-6);
    }

    #[test]
    fn laplacian_recovers_smooth_radial_density() {
        let profile: RadialFn = Arc::new(|r: f64| 1.5 * (r * r).ln_1p());
        let w = Weight::smooth_radial(3, profile, None);
        let rho = w.curvature_density().unwrap();
        for &z in &[c(0.3, 0.1), c(1.0, 1.0), c(-4.0, 2.0), c(100.0, 0.0)] {
            let want = 3.0 / (PI * (1.0 + z.norm_sqr()).powi(2));
            assert!((rho(z) - want).abs() < 1e-5 * want, "{z}: {} vs {want}", rho(z));
        }
    }

    #[test]
    fn custom_weight_with_declared_parts() {
        // ½ log(1+|ζ|²) + log⁺|ζ/2| + log|ζ - 0.5|: masses 1 + 1 + 1
        let grid = QuadratureGrid::new(QuadratureParams::with_resolution(128, 128).with_splits(vec![2.0]))
            .unwrap();
        let a = c(0.5, 0.0);
        let pot: PotentialFn = Arc::new(move |z: Complex64| {
            0.5 * z.norm_sqr().ln_1p() + (z.norm() / 2.0).ln().max(0.0) + (z - a).norm().ln()
        });
        let w = Weight::custom(
            3,
            pot,
            SingularParts {
                circles: vec![(2.0, 1.0)],
                atoms: vec![(a, 1.0)],
            },
        );
        let cubic = PlaneCurve::monomial(3).unwrap();
        let m = curvature_measure(&w, &cubic, &grid).unwrap();
        assert!((m.density_mass - 1.0).abs() < 1e-3, "{}", m.density_mass);
        assert!((m.total_mass - 3.0).abs() < 1e-3);
    }

    #[test]
    fn mass_mismatch_reported() {
        let grid = QuadratureGrid::new(QuadratureParams::with_resolution(64, 64)).unwrap();
        let cubic = PlaneCurve::monomial(3).unwrap();
        let w = Weight::fs_line(2).with_label("wrong");
        assert!(matches!(
            curvature_measure(&w, &cubic, &grid),
            Err(WeightError::DegreeMismatch { .. })
        ));
        let w = Weight::custom(3, Arc::new(|_| 0.0), SingularParts::default());
        assert!(matches!(
            curvature_measure(&w, &cubic, &grid),
            Err(WeightError::MassMismatch { .. })
        ));
    }
}
