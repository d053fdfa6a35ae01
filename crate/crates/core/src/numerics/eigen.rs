use nalgebra::DMatrix;

use crate::error::{domain, Result};

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending order.
///
/// Column `i` of `vectors` is the unit eigenvector for `values[i]`, signed so
/// that its entries sum to a non-negative number (first nonzero entry positive
/// when the sum vanishes).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

const SYMMETRY_TOLERANCE: f64 = 1e-9;

pub fn eigh_symmetric(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return domain(format!("matrix is {}x{}, not square", m.nrows(), m.ncols()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return domain("matrix contains non-finite entries");
    }
    let scale = m.amax();
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOLERANCE * scale {
        return domain(format!(
            "matrix asymmetry {asym:e} exceeds {SYMMETRY_TOLERANCE:e} x max|M| = {scale:e}"
        ));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut v = eig.eigenvectors.column(src).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        if sign_flip_needed(v.as_slice()) {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    Ok(SymmetricEigen { values, vectors })
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn sign_flip_needed(v: &[f64]) -> bool {
    let sum: f64 = v.iter().sum();
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if sum.abs() > 1e-12 * l1 {
        return sum < 0.0;
    }
    v.iter()
        .find(|x| x.abs() > 1e-14 * l1)
        .is_some_and(|x| *x < 0.0)
}
