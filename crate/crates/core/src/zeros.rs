//! Random sections uniform on the unit sphere of a Bergman space, their
//! zero divisors, and Monte Carlo averages of normalized divisors.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::bergman::{BergmanError, BergmanSpace, SpaceKind};
use crate::roots::{self, RootError};

pub const RADIAL_QUANTILES: usize = 64;
pub const ANGULAR_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZerosError {
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error("sample {index}: {source}")]
    Roots { index: u64, source: RootError },
    #[error("need at least one sample")]
    NoSamples,
}

/// Deterministic generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A section drawn uniformly from the unit sphere in orthonormal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSection {
    pub kind: SpaceKind,
    pub level: usize,
    pub curve_degree: usize,
    /// Unit vector in orthonormal coordinates.
    pub coeffs: Vec<Complex64>,
    /// Ascending monomial coefficients of `s(ζ)`.
    pub poly: Vec<Complex64>,
    pub seed: u64,
    pub index: u64,
}

pub fn sample_section(space: &BergmanSpace, seed: u64, index: u64) -> Result<RandomSection, BergmanError> {
    let basis = space.basis_poly()?;
    let n = basis.ncols();
    let mut rng = sample_rng(seed, index);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= norm;
    }
    let poly = basis * DVector::from_column_slice(&v);
    Ok(RandomSection {
        kind: space.kind(),
        level: space.level(),
        curve_degree: space.curve().degree(),
        coeffs: v,
        poly: poly.iter().copied().collect(),
        seed,
        index,
    })
}

/// Zero divisor of a section: finite zeros with multiplicity plus the signed
/// atom at `x1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisorMeasure {
    pub finite_atoms: Vec<(Complex64, usize)>,
    pub atom_at_x1: i64,
    pub total_mass: i64,
}

impl DivisorMeasure {
    pub fn finite_mass(&self) -> usize {
        self.finite_atoms.iter().map(|(_, m)| m).sum()
    }
}

/// Divisor of `s`: zeros of the affine polynomial and `pd - deg s` at `x1`.
pub fn divisor_of(section: &RandomSection) -> Result<DivisorMeasure, RootError> {
    divisor_of_poly(&section.poly, section.level, section.curve_degree)
}

pub fn divisor_of_poly(poly: &[Complex64], p: usize, d: usize) -> Result<DivisorMeasure, RootError> {
    let deg = roots::effective_degree(poly).ok_or(RootError::ZeroPolynomial)?;
    let finite_atoms: Vec<(Complex64, usize)> = roots::polynomial_roots(poly)?
        .into_iter()
        .map(|r| (r.value, r.multiplicity))
        .collect();
    let atom_at_x1 = (p * d) as i64 - deg as i64;
    let finite: usize = finite_atoms.iter().map(|(_, m)| m).sum();
    Ok(DivisorMeasure {
        finite_atoms,
        atom_at_x1,
        total_mass: finite as i64 + atom_at_x1,
    })
}

/// `(1/p)·E[div s_p]` estimated from seeded samples.
#[derive(Debug, Clone)]
pub struct ZeroEnsemble {
    pub level: usize,
    pub curve_degree: usize,
    pub seed: u64,
    pub divisors: Vec<DivisorMeasure>,
}

impl ZeroEnsemble {
    pub fn n_samples(&self) -> usize {
        self.divisors.len()
    }

    /// Each finite zero with weight `multiplicity / (p n)`.
    pub fn weighted_points(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let w = 1.0 / (self.level * self.n_samples()) as f64;
        self.divisors
            .iter()
            .flat_map(move |dv| dv.finite_atoms.iter().map(move |&(z, m)| (z, m as f64 * w)))
    }

    /// Mean of `atom_at_x1 / p`.
    pub fn mean_atom_at_x1(&self) -> f64 {
        let s: i64 = self.divisors.iter().map(|d| d.atom_at_x1).sum();
        s as f64 / (self.level * self.n_samples()) as f64
    }

    /// Total mass of the average; equals `d`.
    pub fn total_mass(&self) -> f64 {
        let s: i64 = self.divisors.iter().map(|d| d.total_mass).sum();
        s as f64 / (self.level * self.n_samples()) as f64
    }

    /// Mass of the averaged normalized divisor in `r0 < |ζ| < r1`.
    pub fn annulus_mass(&self, r0: f64, r1: f64) -> f64 {
        self.weighted_points()
            .filter(|(z, _)| {
                let r = z.norm();
                r > r0 && r < r1
            })
            .map(|(_, w)| w)
            .sum()
    }

    /// Radii below which a fraction `k/64` of the averaged mass lies
    /// (`None` when the quantile falls in the atom at `x1`).
    pub fn radial_quantiles(&self) -> Vec<RadialQuantile> {
        let mut pts: Vec<(f64, f64)> = self.weighted_points().map(|(z, w)| (z.norm(), w)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = self.total_mass();
        let mut out = Vec::with_capacity(RADIAL_QUANTILES);
        let mut acc = 0.0;
        let mut it = pts.iter().peekable();
        for k in 1..=RADIAL_QUANTILES {
            let level = k as f64 / RADIAL_QUANTILES as f64;
            let target = level * total;
            let mut radius = None;
            while let Some(&&(r, w)) = it.peek() {
                if acc + w >= target - 1e-12 {
                    radius = Some(r);
                    break;
                }
                acc += w;
                it.next();
            }
            out.push(RadialQuantile { level, radius });
        }
        out
    }

    /// Fraction of finite zero mass per angular bin, averaged over samples,
    /// with standard errors across samples.
    pub fn angular_histogram(&self) -> AngularHistogram {
        let n = self.n_samples() as f64;
        let per_sample: Vec<[f64; ANGULAR_BINS]> = self
            .divisors
            .iter()
            .map(|dv| {
                let mut h = [0.0; ANGULAR_BINS];
                let total = dv.finite_mass() as f64;
                if total > 0.0 {
                    for &(z, m) in &dv.finite_atoms {
                        h[angular_bin(z)] += m as f64 / total;
                    }
                }
                h
            })
            .collect();
        let mut mean = vec![0.0; ANGULAR_BINS];
        let mut stderr = vec![0.0; ANGULAR_BINS];
        for b in 0..ANGULAR_BINS {
            let m = per_sample.iter().map(|h| h[b]).sum::<f64>() / n;
            let var = if n > 1.0 {
                per_sample.iter().map(|h| (h[b] - m).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            mean[b] = m;
            stderr[b] = (var / n).sqrt();
        }
        AngularHistogram { fraction: mean, stderr }
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            level: self.level,
            n_samples: self.n_samples(),
            seed: self.seed,
            total_mass: self.total_mass(),
            mean_atom_at_x1: self.mean_atom_at_x1(),
            radial_quantiles: self.radial_quantiles(),
            angular_histogram: self.angular_histogram(),
        }
    }
}

pub fn angular_bin(z: Complex64) -> usize {
    let t = z.arg().rem_euclid(TAU);
    ((t / TAU * ANGULAR_BINS as f64) as usize).min(ANGULAR_BINS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialQuantile {
    pub level: f64,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularHistogram {
    pub fraction: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl AngularHistogram {
    /// Largest `|fraction - 1/bins| / stderr` over bins.
    pub fn max_z_score(&self) -> f64 {
        let u = 1.0 / self.fraction.len() as f64;
        self.fraction
            .iter()
            .zip(&self.stderr)
            .map(|(f, s)| if *s > 0.0 { (f - u).abs() / s } else if (f - u).abs() < 1e-15 { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * 2.0 * PI / self.fraction.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub level: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub total_mass: f64,
    pub mean_atom_at_x1: f64,
    pub radial_quantiles: Vec<RadialQuantile>,
    pub angular_histogram: AngularHistogram,
}

/// Samples `n_samples` sections (indices `0..n_samples`) and their divisors.
pub fn expectation_divisor(space: &BergmanSpace, n_samples: usize, seed: u64) -> Result<ZeroEnsemble, ZerosError> {
    Ok(sample_ensemble(space, n_samples, seed)?.1)
}

/// Like [`expectation_divisor`], also returning the sections.
pub fn sample_ensemble(
    space: &BergmanSpace,
    n_samples: usize,
    seed: u64,
) -> Result<(Vec<RandomSection>, ZeroEnsemble), ZerosError> {
    if n_samples == 0 {
        return Err(ZerosError::NoSamples);
    }
    space.basis_poly()?;
    let results: Vec<Result<(RandomSection, DivisorMeasure), ZerosError>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sample_section(space, seed, i)?;
            let dv = divisor_of(&s).map_err(|source| ZerosError::Roots { index: i, source })?;
            Ok((s, dv))
        })
        .collect();
    let mut sections = Vec::with_capacity(n_samples);
    let mut divisors = Vec::with_capacity(n_samples);
    for r in results {
        let (s, d) = r?;
        sections.push(s);
        divisors.push(d);
    }
    Ok((
        sections,
        ZeroEnsemble {
            level: space.level(),
            curve_degree: space.curve().degree(),
            seed,
            divisors,
        },
    ))
}
