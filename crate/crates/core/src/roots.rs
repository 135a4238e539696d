//! Polynomial roots by Aberth–Ehrlich simultaneous iteration, certified by
//! direct evaluation.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Relative threshold below which top coefficients are treated as zero.
pub const DEGREE_TOL: f64 = 1e-12;
/// Residual certificate: `|p(z)| <= CERT_TOL · ‖c‖∞ · max(1,|z|)^k`.
pub const CERT_TOL: f64 = 1e-8;
/// Roots closer than `CLUSTER_TOL · max(1,|z|)` are one multiple root.
pub const CLUSTER_TOL: f64 = 1e-7;
pub const MAX_ITER: usize = 800;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("root iteration did not converge after {iterations} steps (worst residual {worst:.3e})")]
    NonConvergence { iterations: usize, worst: f64, residuals: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
    /// `|p(z)| / (‖c‖∞ max(1,|z|)^k)`.
    pub residual: f64,
}

/// Largest index with `|c_k| > DEGREE_TOL · ‖c‖∞`, or `None` for the zero
/// polynomial.
pub fn effective_degree(coeffs: &[Complex64]) -> Option<usize> {
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return None;
    }
    coeffs.iter().rposition(|c| c.norm() > DEGREE_TOL * top)
}

/// `p(z)/p'(z)` and the scaled value `|p(z)| / max(1,|z|)^n`.
fn newton_ratio(c: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let n = c.len() - 1;
    if z.norm() <= 1.0 {
        let mut p = c[n];
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            dp = dp * z + p;
            p = p * z + c[k];
        }
        (p / dp, p.norm())
    } else {
        // p(z) = z^n q(y), q(y) = Σ c_k y^(n-k), y = 1/z
        let y = z.inv();
        let mut q = c[0];
        let mut dq = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            dq = dq * y + q;
            q = q * y + c[k];
        }
        (z / (n as f64 - y * dq / q), q.norm())
    }
}

/// Initial guesses on circles whose radii come from the upper convex hull
/// of `(k, log|c_k|)`.
fn initial_guesses(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(k, v)| (k, v.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut guesses = Vec::with_capacity(n);
    for (e, w) in hull.windows(2).enumerate() {
        let (i, j) = (w[0].0, w[1].0);
        let m = j - i;
        let radius = ((w[0].1 - w[1].1) / m as f64).exp();
        let offset = 0.7 + 1.3 * e as f64;
        for q in 0..m {
            guesses.push(Complex64::from_polar(radius, offset + TAU * q as f64 / m as f64));
        }
    }
    debug_assert_eq!(guesses.len(), n);
    guesses
}

/// All roots of `Σ c_k ζ^k` (ascending coefficients) after degree trimming,
/// with multiplicities from clustering.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Root>, RootError> {
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(RootError::NonFinite);
    }
    let deg = effective_degree(coeffs).ok_or(RootError::ZeroPolynomial)?;
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let c: Vec<Complex64> = coeffs[..=deg].iter().map(|v| v / scale).collect();
    // exact zeros at the origin
    let low = c.iter().position(|v| v.norm() > 0.0).unwrap_or(0);
    let mut found: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); low];
    let reduced = &c[low..];
    let n = reduced.len() - 1;
    if n > 0 {
        let mut z = initial_guesses(reduced);
        let mut done = vec![false; n];
        let mut iterations = 0;
        while iterations < MAX_ITER && done.iter().any(|d| !d) {
            iterations += 1;
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let (ratio, _) = newton_ratio(reduced, z[i]);
                let mut repulsion = Complex64::new(0.0, 0.0);
                for (j, zj) in z.iter().enumerate() {
                    if j != i {
                        repulsion += (z[i] - zj).inv();
                    }
                }
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.re.is_finite() && step.im.is_finite() {
                    z[i] -= step;
                    if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(1.0) {
                        done[i] = true;
                    }
                } else {
                    done[i] = true;
                }
            }
        }
        let residuals: Vec<f64> = z.iter().map(|&zi| newton_ratio(reduced, zi).1).collect();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        if !(worst <= CERT_TOL) {
            return Err(RootError::NonConvergence {
                iterations,
                worst,
                residuals,
            });
        }
        found.extend(z);
    }
    Ok(cluster(&c, found))
}

fn cluster(c: &[Complex64], z: Vec<Complex64>) -> Vec<Root> {
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (z[i] - z[j]).norm() <= CLUSTER_TOL * z[i].norm().max(z[j].norm()).max(1.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, v)) => v.push(z[i]),
            None => groups.push((r, vec![z[i]])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let value = members.iter().sum::<Complex64>() / members.len() as f64;
            Root {
                value,
                multiplicity: members.len(),
                residual: newton_ratio(c, value).1,
            }
        })
        .collect()
}
