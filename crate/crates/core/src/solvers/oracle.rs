//! Cyclic Jacobi eigensolver for small symmetric matrices. Used as the
//! reference answer in tests and for tiny `k × k` problems inside metrics.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const ORACLE_MAX_DIM: usize = 64;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct OracleEigen {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: DenseMatrix,
}

impl OracleEigen {
    /// First `k` eigenvectors as a `d × k` basis.
    pub fn top_k(&self, k: usize) -> DenseMatrix {
        let d = self.eigenvectors.nrows();
        let mut out = DenseMatrix::zeros(d, k);
        for i in 0..d {
            out.row_mut(i).copy_from_slice(&self.eigenvectors.row(i)[..k]);
        }
        out
    }
}

pub fn exact_eig_oracle(a: &DenseMatrix) -> Result<OracleEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "exact_eig_oracle (rows vs cols)",
            left: n,
            right: a.ncols(),
        });
    }
    if n > ORACLE_MAX_DIM {
        return Err(Error::invalid(format!(
            "oracle eigensolver supports d <= {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    let scale = a.frobenius_norm().max(1.0);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a.get(i, j) - a.get(j, i)).abs());
        }
    }
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    symmetric_eigen(a)
}

/// Jacobi iteration without the size/symmetry checks. Only the lower
/// triangle's mirror is assumed equal to the upper.
pub(crate) fn symmetric_eigen(a: &DenseMatrix) -> Result<OracleEigen> {
    let n = a.nrows();
    let mut m = a.clone();
    // symmetrize exactly so rotations stay consistent
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut v = DenseMatrix::identity(n);
    let total = m.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let mrp = m.get(r, p);
                    let mrq = m.get(r, q);
                    m.set(r, p, c * mrp - s * mrq);
                    m.set(r, q, s * mrp + c * mrq);
                }
                for r in 0..n {
                    let mpr = m.get(p, r);
                    let mqr = m.get(q, r);
                    m.set(p, r, c * mpr - s * mqr);
                    m.set(q, r, s * mpr + c * mqr);
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let eigenvalues = order.iter().map(|&i| m.get(i, i)).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        // sign: largest-magnitude component positive
        let col = v.column(src);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let col: Vec<f64> = col.iter().map(|x| x * sign).collect();
        eigenvectors.set_column(dst, &col);
    }
    Ok(OracleEigen {
        eigenvalues,
        eigenvectors,
    })
}
