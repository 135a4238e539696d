//! Run configuration read from TOML.
//!
//! ```toml
//! seed = 20261017
//! output_dir = "runs"
//! kinds = ["w", "regular"]
//! p_ladder = [2, 4, 8, 16]
//! n_samples = 200
//!
//! [curve]
//! degree = 3
//! coeffs = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
//!
//! [weight]
//! kind = "fs"
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::bergman::SpaceKind;
use crate::curve::{CurveError, PlaneCurve};
use crate::quadrature::QuadratureParams;
use crate::weights::{SingularParts, Weight, WeightError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid curve: {0}")]
    Curve(#[from] CurveError),
    #[error("invalid weight: {0}")]
    Weight(#[from] WeightError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub degree: usize,
    /// `a_0..a_d` in `Q = Σ a_j z0^j z1^(d-j)`, as `[re, im]` pairs.
    pub coeffs: Vec<[f64; 2]>,
}

impl CurveSpec {
    pub fn build(&self) -> Result<PlaneCurve, CurveError> {
        let c = self.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        PlaneCurve::new(c, self.degree)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKindSpec {
    Fs,
    Logplus,
    SmoothRadial,
    Custom,
}

/// One summand of a custom weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CustomTerm {
    /// `m log⁺(|ζ| / radius)`; curvature is a circle of mass `m`.
    LogPlus { mass: f64, radius: f64 },
    /// `m log|ζ - c|`; curvature is an atom of mass `m` at `c`.
    LogAbs { mass: f64, center: [f64; 2] },
    /// `(m/2) log(1 + |ζ|²)`.
    FsLine { mass: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightParams {
    /// SmoothRadial: `φ = (d/2) log(a² + |ζ|²)`.
    pub a: Option<f64>,
    /// Custom: summands whose masses add up to `d`.
    pub terms: Vec<CustomTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub kind: WeightKindSpec,
    #[serde(default)]
    pub params: WeightParams,
}

impl WeightSpec {
    pub fn build(&self, curve: &PlaneCurve) -> Result<Weight, ConfigError> {
        let d = curve.degree();
        let dd = d as f64;
        Ok(match self.kind {
            WeightKindSpec::Fs => Weight::fubini_study(curve),
            WeightKindSpec::Logplus => Weight::log_plus(d)?,
            WeightKindSpec::SmoothRadial => {
                let a = self.params.a.unwrap_or(1.0);
                if !(a > 0.0 && a.is_finite()) {
                    return Err(ConfigError::Invalid(format!("smooth_radial parameter a = {a} must be positive")));
                }
                let a2 = a * a;
                Weight::smooth_radial(
                    d,
                    Arc::new(move |r: f64| 0.5 * dd * (a2 + r * r).ln()),
                    Some(Arc::new(move |r: f64| dd * a2 / (PI * (a2 + r * r).powi(2)))),
                )
            }
            WeightKindSpec::Custom => custom_weight(d, &self.params.terms)?,
        })
    }
}

fn custom_weight(d: usize, terms: &[CustomTerm]) -> Result<Weight, ConfigError> {
    if terms.is_empty() {
        return Err(ConfigError::Invalid("custom weight needs at least one term".into()));
    }
    let mut singular = SingularParts::default();
    let mut mass = 0.0;
    for t in terms {
        let m = match *t {
            CustomTerm::LogPlus { mass, radius } => {
                if !(radius > 0.0) {
                    return Err(ConfigError::Invalid(format!("log_plus radius {radius} must be positive")));
                }
                singular.circles.push((radius, mass));
                mass
            }
            CustomTerm::LogAbs { mass, center } => {
                singular.atoms.push((Complex64::new(center[0], center[1]), mass));
                mass
            }
            CustomTerm::FsLine { mass } => mass,
        };
        if !(m >= 0.0) {
            return Err(ConfigError::Invalid(format!("term mass {m} must be non-negative")));
        }
        mass += m;
    }
    if (mass - d as f64).abs() > 1e-9 {
        return Err(ConfigError::Invalid(format!("custom term masses add up to {mass}, expected {d}")));
    }
    let terms = terms.to_vec();
    let potential = Arc::new(move |z: Complex64| {
        terms
            .iter()
            .map(|t| match *t {
                CustomTerm::LogPlus { mass, radius } => mass * (z.norm() / radius).ln().max(0.0),
                CustomTerm::LogAbs { mass, center } => {
                    mass * (z - Complex64::new(center[0], center[1])).norm().ln()
                }
                CustomTerm::FsLine { mass } => 0.5 * mass * z.norm_sqr().ln_1p(),
            })
            .sum()
    });
    Ok(Weight::custom(d, potential, singular))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub p: usize,
}

/// Polar sample grid for kernel output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelPoints {
    pub radius: f64,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for KernelPoints {
    fn default() -> Self {
        Self {
            radius: 3.0,
            n_radial: 24,
            n_angular: 32,
        }
    }
}

fn default_kinds() -> Vec<SpaceKind> {
    SpaceKind::ALL.to_vec()
}

fn default_ladder() -> Vec<usize> {
    vec![2, 4, 8, 16]
}

fn default_samples() -> usize {
    200
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

fn default_true() -> bool {
    true
}

fn default_potential_samples() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveSpec,
    pub weight: WeightSpec,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<SpaceKind>,
    #[serde(default = "default_ladder")]
    pub p_ladder: Vec<usize>,
    /// Single space for `kernel` and `zeros`; all kinds × ladder otherwise.
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub quadrature: QuadratureParams,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Samples per rung used for the potential `L¹` series.
    #[serde(default = "default_potential_samples")]
    pub n_potential_samples: usize,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub emit_plots: bool,
    #[serde(default)]
    pub kernel_points: KernelPoints,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let curve = self.curve.build()?;
        self.weight.build(&curve)?;
        if self.kinds.is_empty() {
            return Err(ConfigError::Invalid("kinds is empty".into()));
        }
        if self.p_ladder.is_empty() || self.p_ladder[0] == 0 || self.p_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(format!(
                "p_ladder {:?} must be non-empty, positive and strictly increasing",
                self.p_ladder
            )));
        }
        if let Some(s) = &self.space {
            if s.p == 0 {
                return Err(ConfigError::Invalid("space.p must be at least 1".into()));
            }
        }
        if self.n_samples == 0 {
            return Err(ConfigError::Invalid("n_samples must be at least 1".into()));
        }
        let q = &self.quadrature;
        if q.n_radial < 16 || q.n_angular < 16 || !(q.s_min < q.s_max) {
            return Err(ConfigError::Invalid(format!("bad quadrature parameters {q:?}")));
        }
        let k = &self.kernel_points;
        if !(k.radius > 0.0) || k.n_radial == 0 || k.n_angular == 0 {
            return Err(ConfigError::Invalid(format!("bad kernel_points {k:?}")));
        }
        Ok(())
    }

    pub fn curve(&self) -> Result<PlaneCurve, ConfigError> {
        Ok(self.curve.build()?)
    }

    pub fn weight(&self) -> Result<Weight, ConfigError> {
        self.weight.build(&self.curve()?)
    }

    /// Quadrature parameters with the weight's kinks added as splits.
    pub fn grid_params(&self) -> Result<QuadratureParams, ConfigError> {
        let mut q = self.quadrature.clone();
        for r in self.weight()?.split_radii() {
            if !q.split_radii.iter().any(|&s| (s - r).abs() <= 1e-12 * r) {
                q.split_radii.push(r);
            }
        }
        q.split_radii.sort_by(f64::total_cmp);
        Ok(q)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form of the
    /// config with `output_dir` cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(format!("run-{}", self.hash()))
    }
}
