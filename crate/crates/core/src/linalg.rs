//! Thin SVD on nalgebra matrices, computed with faer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `m = u * diag(sigma) * v^T` with `u`: rows x r, `v`: cols x r,
/// `r = min(rows, cols)` and `sigma` non-increasing.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Ok(ThinSvd {
            u: DMatrix::zeros(rows, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        });
    }
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::Arithmetic(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(rows, r, |i, j| u[(i, j)]),
        sigma: DVector::from_fn(r, |i, _| s[i]),
        v: DMatrix::from_fn(cols, r, |i, j| v[(i, j)]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_reconstruction() {
        let dir: Vec<f64> = (0..64).map(|i| ((i * 13) % 5) as f64 - 2.0).collect();
        let m = DMatrix::from_fn(64, 4, |j, i| if i % 2 == 0 { dir[j] } else { -dir[j] });
        let svd = thin_svd(&m).unwrap();
        let rec = &svd.u * DMatrix::from_diagonal(&svd.sigma) * svd.v.transpose();
        assert!((rec - &m).norm() < 1e-10);
        let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((svd.sigma[0] - 2.0 * norm).abs() < 1e-10);
        assert!(svd.sigma.iter().skip(1).all(|&s| s < 1e-10));
        for w in svd.sigma.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn wide_and_empty() {
        let m = DMatrix::from_fn(2, 5, |i, j| {
            (i * 5 + j) as f64 + if i == j { 1.0 } else { 0.0 }
        });
        let svd = thin_svd(&m).unwrap();
        assert_eq!(svd.u.shape(), (2, 2));
        assert_eq!(svd.v.shape(), (5, 2));
        let rec = &svd.u * DMatrix::from_diagonal(&svd.sigma) * svd.v.transpose();
        assert!((rec - &m).norm() < 1e-12);
        assert_eq!(thin_svd(&DMatrix::zeros(0, 3)).unwrap().sigma.len(), 0);
    }
}
