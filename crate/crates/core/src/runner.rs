//! Subcommand drivers. Every output lands in `<output_dir>/run-<hash>`;
//! CSV files start with a `# config_hash: <hash>` line.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bergman::{BergmanError, BergmanSpace, SpaceKind};
use crate::config::{ConfigError, RunConfig};
use crate::curve::{self, PlaneCurve};
use crate::diagnostics::{self, ConvergenceReport, DiagnosticsError, GrowthFit, EVAL_RADIUS};
use crate::plot;
use crate::quadrature::{QuadratureError, QuadratureGrid, QuadratureParams};
use crate::weights::{curvature_measure, Weight, WeightError};
use crate::zeros::{self, EnsembleSummary, ZerosError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical!(BergmanError, ZerosError, DiagnosticsError, QuadratureError, WeightError);

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
            RunError::Io { .. } => "io",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimRow {
    pub kind: SpaceKind,
    pub p: usize,
    pub measured: usize,
    /// `dp+1`, `dp - d(d-3)/2` or `dp+d-1`.
    pub closed_form: i64,
    /// Generator-count rank of the restriction space; equals the closed
    /// form otherwise.
    pub exact_count: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceRow {
    pub kind: SpaceKind,
    pub p: usize,
    pub dim: usize,
    pub top_degree: usize,
    pub condition: f64,
    pub raw_condition: f64,
    pub residual: f64,
    pub excluded_degrees: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroSummaryRow {
    pub kind: SpaceKind,
    #[serde(flatten)]
    pub summary: EnsembleSummary,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    config_hash: &'a str,
    seed: u64,
    grid: &'a QuadratureParams,
    package: &'static str,
    version: &'static str,
    threads: usize,
    config: &'a RunConfig,
}

/// A configured run with its output directory.
pub struct Runner {
    cfg: RunConfig,
    hash: String,
    dir: PathBuf,
    curve: PlaneCurve,
    weight: Weight,
    grid: QuadratureGrid,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Runner {
    pub fn new(cfg: RunConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        let curve = cfg.curve()?;
        let weight = cfg.weight()?;
        let grid = QuadratureGrid::new(cfg.grid_params()?)?;
        let hash = cfg.hash();
        let dir = cfg.run_dir();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            cfg,
            hash,
            dir,
            curve,
            weight,
            grid,
        })
    }

    pub fn run_dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn write(&self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))
    }

    fn csv(&self, header: &str) -> String {
        format!("# config_hash: {}\n{header}\n", self.hash)
    }

    fn spaces(&self) -> Vec<(SpaceKind, usize)> {
        match &self.cfg.space {
            Some(s) => vec![(s.kind, s.p)],
            None => self
                .cfg
                .kinds
                .iter()
                .flat_map(|&k| self.cfg.p_ladder.iter().map(move |&p| (k, p)))
                .collect(),
        }
    }

    fn build(&self, kind: SpaceKind, p: usize) -> Result<BergmanSpace, BergmanError> {
        BergmanSpace::build(kind, &self.curve, &self.weight, p, &self.grid)
    }

    /// Measured dimensions beside closed forms, for every kind and rung.
    pub fn dims(&self) -> Result<Vec<DimRow>, RunError> {
        let d = self.curve.degree();
        let mut rows = Vec::new();
        for &kind in &self.cfg.kinds {
            for &p in &self.cfg.p_ladder {
                let (measured, closed, exact) = match kind {
                    SpaceKind::Restriction => (
                        self.curve.restricted_space_rank(p),
                        curve::dim_restriction_formula(d, p),
                        curve::dim_restriction_exact(d, p) as i64,
                    ),
                    _ => {
                        let s = BergmanSpace::assemble(kind, &self.curve, &self.weight, p, &self.grid)?;
                        let closed = if kind == SpaceKind::WeaklyHolomorphic {
                            curve::dim_weakly_holomorphic(d, p) as i64
                        } else {
                            (curve::regular_degree_cutoff(d, p) + 1) as i64
                        };
                        (s.dim(), closed, closed)
                    }
                };
                rows.push(DimRow {
                    kind,
                    p,
                    measured,
                    closed_form: closed,
                    exact_count: exact,
                });
            }
        }
        let mut out = self.csv("kind,p,measured,closed_form,exact_count");
        for r in &rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.kind, r.p, r.measured, r.closed_form, r.exact_count);
        }
        self.write("dims.csv", &out)?;
        Ok(rows)
    }

    /// Kernel samples and space statistics.
    pub fn kernel(&self) -> Result<Vec<SpaceRow>, RunError> {
        let kp = &self.cfg.kernel_points;
        let mut pts = vec![Complex64::new(0.0, 0.0)];
        for i in 1..=kp.n_radial {
            let r = kp.radius * i as f64 / kp.n_radial as f64;
            for k in 0..kp.n_angular {
                pts.push(Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / kp.n_angular as f64));
            }
        }
        let mut rows = Vec::new();
        let mut kcsv = self.csv("kind,p,re,im,P,logP");
        for (kind, p) in self.spaces() {
            let s = self.build(kind, p)?;
            rows.push(SpaceRow {
                kind,
                p,
                dim: s.dim(),
                top_degree: s.top_degree(),
                condition: s.condition_number()?,
                raw_condition: s.raw_condition_number()?,
                residual: s.orthonormality_residual()?,
                excluded_degrees: s.excluded_degrees().to_vec(),
            });
            let vals: Vec<Result<f64, BergmanError>> = pts.par_iter().map(|&z| s.log_kernel_at(z)).collect();
            for (z, v) in pts.iter().zip(vals) {
                match v {
                    Ok(lp) => {
                        let _ = writeln!(kcsv, "{kind},{p},{},{},{},{}", z.re, z.im, lp.exp(), lp);
                    }
                    Err(BergmanError::WeightPole(_)) => log::warn!("kernel undefined at weight pole {z}"),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let mut scsv = self.csv("kind,p,dim,top_degree,condition,raw_condition,residual,excluded_degrees");
        for r in &rows {
            let excl: Vec<String> = r.excluded_degrees.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(
                scsv,
                "{},{},{},{},{},{},{},{}",
                r.kind,
                r.p,
                r.dim,
                r.top_degree,
                r.condition,
                r.raw_condition,
                r.residual,
                excl.join(" ")
            );
        }
        self.write("kernel.csv", &kcsv)?;
        self.write("spaces.csv", &scsv)?;
        Ok(rows)
    }

    /// Random zeros, `x1` atoms and ensemble summaries.
    pub fn zeros(&self) -> Result<Vec<ZeroSummaryRow>, RunError> {
        let mut zcsv = self.csv("kind,p,sample_index,re,im,multiplicity");
        let mut acsv = self.csv("kind,p,sample_index,atom_at_x1");
        let mut summaries = Vec::new();
        for (kind, p) in self.spaces() {
            let s = self.build(kind, p)?;
            let e = zeros::expectation_divisor(&s, self.cfg.n_samples, self.cfg.seed)?;
            for (i, dv) in e.divisors.iter().enumerate() {
                for &(z, m) in &dv.finite_atoms {
                    let _ = writeln!(zcsv, "{kind},{p},{i},{},{},{m}", z.re, z.im);
                }
                let _ = writeln!(acsv, "{kind},{p},{i},{}", dv.atom_at_x1);
            }
            summaries.push(ZeroSummaryRow {
                kind,
                summary: e.summary(),
            });
        }
        self.write("zeros.csv", &zcsv)?;
        self.write("atoms.csv", &acsv)?;
        self.write("curvature.csv", &self.curvature_csv()?)?;
        let json = serde_json::json!({ "config_hash": self.hash, "ensembles": summaries });
        self.write("zeros_summary.json", &pretty(&json))?;
        Ok(summaries)
    }

    /// Curvature density on a 48 × 48 grid over `[-R, R]²` for plots.
    fn curvature_csv(&self) -> Result<String, RunError> {
        let m = curvature_measure(&self.weight, &self.curve, &self.grid)?;
        let r = plot::VIEW_RADIUS;
        let n = plot::HEATMAP_CELLS;
        let mut out = self.csv("re,im,density");
        for i in 0..n {
            for j in 0..n {
                let z = Complex64::new(
                    -r + 2.0 * r * (j as f64 + 0.5) / n as f64,
                    -r + 2.0 * r * (i as f64 + 0.5) / n as f64,
                );
                let _ = writeln!(out, "{},{},{}", z.re, z.im, m.density_at(z));
            }
        }
        Ok(out)
    }

    /// Convergence series along the ladder.
    pub fn converge(&self) -> Result<ConvergenceReport, RunError> {
        let ladder = &self.cfg.p_ladder;
        let kinds = diagnostics::run_kernel_convergence(&self.curve, &self.weight, &self.cfg.kinds, ladder, &self.grid)?;
        let zero_kind = self.cfg.kinds[0];
        let (disc, pot, _) = diagnostics::run_zero_convergence(
            &self.curve,
            &self.weight,
            zero_kind,
            ladder,
            &self.grid,
            self.cfg.n_samples,
            self.cfg.n_potential_samples,
            self.cfg.seed,
        )?;
        let growth: Option<GrowthFit> = if self.weight.is_smooth() && ladder.len() >= 4 {
            Some(diagnostics::kernel_growth_exponent(
                &self.curve,
                &self.weight,
                ladder,
                &self.grid,
                EVAL_RADIUS,
            )?)
        } else {
            None
        };
        let min_kernel = match &growth {
            Some(g) => g.min_kernel.clone(),
            None => ladder
                .iter()
                .map(|&p| -> Result<f64, RunError> {
                    let s = self.build(SpaceKind::WeaklyHolomorphic, p)?;
                    Ok(diagnostics::min_kernel(&s, EVAL_RADIUS)?)
                })
                .collect::<Result<_, _>>()?,
        };
        let vanishing = if self.weight.is_smooth() {
            diagnostics::vanishing_order(&self.weight).ok()
        } else {
            None
        };
        let report = ConvergenceReport {
            p_ladder: ladder.clone(),
            pass: kinds.iter().all(|k| k.pass),
            kinds,
            potential_l1: pot,
            discrepancy: disc,
            min_kernel,
            fitted_exponent: growth.as_ref().map(|g| g.fit.slope),
            vanishing,
            eval_radius: EVAL_RADIUS,
        };
        self.write("report.csv", &self.report_csv(&report, zero_kind))?;
        Ok(report)
    }

    fn report_csv(&self, r: &ConvergenceReport, zero_kind: SpaceKind) -> String {
        let mut out = self.csv("series,kind,p,value");
        for k in &r.kinds {
            for (i, &p) in r.p_ladder.iter().enumerate() {
                let kind = k.kind;
                let _ = writeln!(out, "dim,{kind},{p},{}", k.dim[i]);
                let _ = writeln!(out, "condition,{kind},{p},{}", k.condition[i]);
                let _ = writeln!(out, "residual,{kind},{p},{}", k.residual[i]);
                let _ = writeln!(out, "l1_log_kernel,{kind},{p},{}", k.l1_log_kernel[i]);
                let _ = writeln!(out, "fs_discrepancy,{kind},{p},{}", k.fs_discrepancy[i]);
                let _ = writeln!(out, "fs_atom_at_x1,{kind},{p},{}", k.fs_atom_at_x1[i]);
                let _ = writeln!(out, "fs_negative_mass,{kind},{p},{}", k.fs_negative_mass[i]);
            }
        }
        for (i, &p) in r.p_ladder.iter().enumerate() {
            let _ = writeln!(out, "discrepancy,{zero_kind},{p},{}", r.discrepancy[i]);
            let _ = writeln!(out, "potential_l1,{zero_kind},{p},{}", r.potential_l1[i]);
            let _ = writeln!(out, "min_kernel,w,{p},{}", r.min_kernel[i]);
        }
        out
    }

    /// Everything: dims, kernel, zeros, convergence, plots and a manifest.
    pub fn report(&self) -> Result<serde_json::Value, RunError> {
        let dims = self.dims()?;
        let spaces = self.kernel()?;
        let zeros = self.zeros()?;
        let conv = self.converge()?;
        let manifest = Manifest {
            config_hash: &self.hash,
            seed: self.cfg.seed,
            grid: self.grid.params(),
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            config: &self.cfg,
        };
        let json = serde_json::json!({
            "config_hash": self.hash,
            "manifest": manifest,
            "pass": conv.pass,
            "dims": dims,
            "spaces": spaces,
            "convergence": conv,
            "zeros": zeros,
        });
        self.write("report.json", &pretty(&json))?;
        if self.cfg.emit_plots {
            self.plots()?;
        }
        Ok(json)
    }

    /// Renders SVG plots from the CSV files in the run directory.
    pub fn plots(&self) -> Result<Vec<PathBuf>, RunError> {
        let read = |name: &str| -> Result<String, RunError> {
            let path = self.dir.join(name);
            fs::read_to_string(&path).map_err(io_err(&path))
        };
        let mut written = Vec::new();
        let mut emit = |name: String, svg: String| -> Result<(), RunError> {
            self.write(&name, &svg)?;
            written.push(self.dir.join(name));
            Ok(())
        };
        if self.dir.join("zeros.csv").exists() {
            let curv = read("curvature.csv")?;
            let z = read("zeros.csv")?;
            for (kind, p) in plot::zero_panels(&z) {
                emit(format!("zeros_{kind}_p{p}.svg"), plot::zeros_svg(&curv, &z, &kind, p))?;
            }
        }
        if self.dir.join("report.csv").exists() {
            let r = read("report.csv")?;
            emit("kernel_fit.svg".into(), plot::kernel_fit_svg(&r))?;
            emit("l1_decay.svg".into(), plot::l1_decay_svg(&r))?;
        }
        Ok(written)
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}
