//! Subspace distance, explained variance and unnormalized eigenvalue error.

use std::fmt;

use crate::datagen::RngState;
use crate::error::{Error, Result};
use crate::ingest::{DataBlock, Dataset};
use crate::linalg::{orthonormalize_in_place, DenseMatrix, RowView};
use crate::solvers::oracle::symmetric_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricName {
    PrincipalAngle,
    ExplainedVariance,
    UnnormalizedError,
}

impl MetricName {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::PrincipalAngle => "principal_angle",
            MetricName::ExplainedVariance => "explained_variance",
            MetricName::UnnormalizedError => "unnormalized_error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "principal_angle" => Some(MetricName::PrincipalAngle),
            "explained_variance" => Some(MetricName::ExplainedVariance),
            "unnormalized_error" => Some(MetricName::UnnormalizedError),
            _ => None,
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub name: MetricName,
    pub value: f64,
    pub samples_seen: u64,
}

const ORTHO_SLACK: f64 = 1e-6;

fn orthonormal_view(a: &DenseMatrix) -> Result<std::borrow::Cow<'_, DenseMatrix>> {
    if a.orthonormality_error() <= ORTHO_SLACK {
        return Ok(std::borrow::Cow::Borrowed(a));
    }
    let mut q = a.clone();
    // fixed seed: only consulted if a column is degenerate
    orthonormalize_in_place(&mut q, &mut RngState::seed_from(0))?;
    Ok(std::borrow::Cow::Owned(q))
}

/// Largest-principal-angle distance `‖U_⊥ᵀV‖₂`, computed as the largest
/// singular value of `(I − UUᵀ)V` accumulated row by row in `O(dk²)`.
pub fn principal_angle_distance(u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    if u.ncols() != v.ncols() {
        return Err(Error::DimensionMismatch {
            context: "principal_angle_distance (subspace ranks)",
            left: u.ncols(),
            right: v.ncols(),
        });
    }
    if u.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch {
            context: "principal_angle_distance (ambient dimensions)",
            left: u.nrows(),
            right: v.nrows(),
        });
    }
    let u = orthonormal_view(u)?;
    let v = orthonormal_view(v)?;
    let k = u.ncols();
    let overlap = u.t_matmul(&v)?;
    let mut gram = DenseMatrix::zeros(k, k);
    let mut p = vec![0.0; k];
    for i in 0..u.nrows() {
        let ui = u.row(i);
        for (j, pj) in p.iter_mut().enumerate() {
            let proj: f64 = ui.iter().enumerate().map(|(l, x)| x * overlap.get(l, j)).sum();
            *pj = v.get(i, j) - proj;
        }
        for a in 0..k {
            let row = gram.row_mut(a);
            for b in 0..k {
                row[b] += p[a] * p[b];
            }
        }
    }
    let top = symmetric_eigen(&gram)?.eigenvalues[0];
    Ok(top.max(0.0).sqrt().min(1.0))
}

/// Streaming accumulator for `trace(WᵀXᵀXW) / ‖X‖_F²`.
#[derive(Debug, Clone)]
pub struct ExplainedVariance<'w> {
    w: &'w DenseMatrix,
    captured: f64,
    total: f64,
    rows: u64,
    proj: Vec<f64>,
}

impl<'w> ExplainedVariance<'w> {
    pub fn new(w: &'w DenseMatrix) -> Self {
        Self {
            w,
            captured: 0.0,
            total: 0.0,
            rows: 0,
            proj: vec![0.0; w.ncols()],
        }
    }

    pub fn add_row(&mut self, row: RowView<'_>) {
        row.project(self.w, &mut self.proj);
        self.captured += self.proj.iter().map(|p| p * p).sum::<f64>();
        self.total += row.norm_sq();
        self.rows += 1;
    }

    pub fn add_block(&mut self, block: &DataBlock) {
        for r in block.rows() {
            self.add_row(r);
        }
    }

    pub fn finish(&self) -> Result<f64> {
        if self.rows == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.total == 0.0 {
            return Err(Error::invalid("explained variance of all-zero data is undefined"));
        }
        Ok(self.captured / self.total)
    }
}

pub fn explained_variance(w: &DenseMatrix, data: &Dataset) -> Result<f64> {
    if w.nrows() != data.dim() {
        return Err(Error::DimensionMismatch {
            context: "explained_variance (basis rows vs data dimension)",
            left: w.nrows(),
            right: data.dim(),
        });
    }
    let w = orthonormal_view(w)?;
    let mut acc = ExplainedVariance::new(&w);
    for r in data.views() {
        acc.add_row(r);
    }
    acc.finish()
}

/// `λ_max(XᵀX) − wᵀXᵀXw`.
pub fn unnormalized_error(w: &[f64], data: &Dataset, lambda_max: f64) -> Result<f64> {
    if w.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            context: "unnormalized_error (vector vs data dimension)",
            left: w.len(),
            right: data.dim(),
        });
    }
    let captured: f64 = data.views().map(|r| r.dot(w).powi(2)).sum();
    Ok(lambda_max - captured)
}
