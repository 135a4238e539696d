//! Dense complex linear algebra on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("condition number {cond:.3e} exceeds cap {cap:.1e}")]
    IllConditioned { cond: f64, cap: f64 },
    #[error("empty matrix")]
    Empty,
}

/// Euclidean orthonormal basis of the column space, with rank decided by the
/// relative singular-value threshold `tol`.
pub fn column_space(m: &DMatrix<Complex64>, tol: f64) -> DMatrix<Complex64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let smax = svd.singular_values[order[0]];
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = hermitian_part(m);
    let eig = sym.symmetric_eigenvalues();
    let mut v: Vec<f64> = eig.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Spectral condition number of a Hermitian positive definite matrix
/// (infinite when the smallest eigenvalue is not positive).
pub fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let ev = hermitian_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Result of orthonormalizing a Gram matrix.
#[derive(Debug, Clone)]
pub struct Orthonormalization {
    /// Columns are coordinates of an orthonormal basis: `B† G B = I`.
    pub basis: DMatrix<Complex64>,
    /// Condition number of the Jacobi-equilibrated Gram matrix.
    pub condition: f64,
    /// Condition number of the raw Gram matrix.
    pub raw_condition: f64,
    /// `max |B† G B - I|`.
    pub residual: f64,
}

/// Orthonormalizes against the Hermitian form `G` through a Cholesky factor
/// of the equilibrated matrix `D G D`, `D = diag(G)^(-1/2)`; the basis is
/// `B = D L^(-†)`.
pub fn orthonormalize(gram: &DMatrix<Complex64>, cond_cap: f64) -> Result<Orthonormalization, LinalgError> {
    let n = gram.nrows();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let g = hermitian_part(gram);
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let gii = g[(i, i)].re;
        if !(gii > 0.0 && gii.is_finite()) {
            return Err(LinalgError::NotPositiveDefinite);
        }
        scale.push(1.0 / gii.sqrt());
    }
    let eq = DMatrix::from_fn(n, n, |i, j| g[(i, j)] * (scale[i] * scale[j]));
    let condition = condition_number(&eq);
    if !condition.is_finite() {
        return Err(LinalgError::NotPositiveDefinite);
    }
    if condition > cond_cap {
        return Err(LinalgError::IllConditioned {
            cond: condition,
            cap: cond_cap,
        });
    }
    let raw_condition = condition_number(&g);
    let chol = eq.clone().cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
    let l = chol.l();
    // B̂ = L^(-†): solve L† X = I (upper triangular)
    let lt = l.adjoint();
    let mut inv = DMatrix::<Complex64>::identity(n, n);
    if !lt.solve_upper_triangular_mut(&mut inv) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let basis = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * scale[i]);
    let residual = orthonormality_residual(&basis, &g);
    Ok(Orthonormalization {
        basis,
        condition,
        raw_condition,
        residual,
    })
}

/// `max |B† G B - I|`.
pub fn orthonormality_residual(basis: &DMatrix<Complex64>, gram: &DMatrix<Complex64>) -> f64 {
    let prod = basis.adjoint() * gram * basis;
    let mut worst: f64 = 0.0;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_gram_gives_inverse_square_roots() {
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(0.25, 0.0),
            Complex64::new(9.0, 0.0),
        ]));
        let o = orthonormalize(&g, 1e12).unwrap();
        let expect = [0.5, 2.0, 1.0 / 3.0];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!((o.basis[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        assert!((o.condition - 1.0).abs() < 1e-12);
        assert!((o.raw_condition - 36.0).abs() < 1e-9);
    }

    #[test]
    fn hermitian_gram_residual_small() {
        let a = DMatrix::from_fn(5, 5, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
        });
        let g = a.adjoint() * &a + DMatrix::identity(5, 5).scale(0.5);
        let o = orthonormalize(&g, 1e12).unwrap();
        assert!(o.residual < 1e-12, "{}", o.residual);
    }

    #[test]
    fn rejects_ill_conditioned() {
        let g = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0 - 1e-14, 0.0),
                Complex64::new(1.0 - 1e-14, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            orthonormalize(&g, 1e12),
            Err(LinalgError::IllConditioned { .. }) | Err(LinalgError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn column_space_rank() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0],
        )
        .map(|x| Complex64::new(x, 0.0));
        assert_eq!(column_space(&m, 1e-9).ncols(), 2);
    }
}
