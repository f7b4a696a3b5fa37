//! Small dense linear-algebra helpers over faer.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix.
pub fn sym_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn sym_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))
}

/// Singular values (descending) and right singular vectors of `a`.
pub fn svd_right(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let svd = a.svd().map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((vals, svd.V().to_owned()))
}

/// Real parts of the eigenvalues of a general square matrix.
pub fn general_eigenvalues(a: &Mat<f64>) -> Result<Vec<(f64, f64)>> {
    let ev = a
        .eigenvalues()
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    Ok(ev.iter().map(|z| (z.re, z.im)).collect())
}

/// Orthonormal basis (as columns) of the hyperplane orthogonal to `v`.
///
/// Built from the Householder reflector that maps `v` onto a multiple of `e₀`.
pub fn orthogonal_complement(v: &[f64]) -> Mat<f64> {
    let n = v.len();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut h: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let s = if h[0] >= 0.0 { 1.0 } else { -1.0 };
    h[0] += s;
    let hh: f64 = h.iter().map(|x| x * x).sum();
    Mat::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let id = if i == col { 1.0 } else { 0.0 };
        id - 2.0 * h[i] * h[col] / hh
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        for v in [vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 0.25, 4.0], vec![2.0, 2.0]] {
            let q = orthogonal_complement(&v);
            let n = v.len();
            for a in 0..n - 1 {
                let dot: f64 = (0..n).map(|i| q[(i, a)] * v[i]).sum();
                assert!(dot.abs() < 1e-14);
                for b in 0..n - 1 {
                    let g: f64 = (0..n).map(|i| q[(i, a)] * q[(i, b)]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_ascending() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 });
        let v = sym_eigenvalues(&a).unwrap();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!((v[0] - (2.0 - 2f64.sqrt())).abs() < 1e-14);
    }
}
