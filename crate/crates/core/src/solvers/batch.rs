//! Multi-pass baselines over an in-memory dataset.

use crate::datagen::RngState;
use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::linalg::{column_norms, gram_accumulate, normalize, orthonormalize_in_place, DenseMatrix, DiagonalWeights};

use super::{init_random_subspace, SubspaceEstimate};

/// Orthogonal iteration on `(1/N) XᵀX`, one full pass per iteration.
pub fn power_method_batch(
    data: &Dataset,
    k: usize,
    iters: usize,
    rng: &mut RngState,
) -> Result<SubspaceEstimate> {
    power_method_batch_traced(data, k, iters, rng, &mut |_, _| {})
}

/// As [`power_method_batch`], calling `on_iter(i, estimate)` after
/// iteration `i` (1-based).
pub fn power_method_batch_traced(
    data: &Dataset,
    k: usize,
    iters: usize,
    rng: &mut RngState,
    on_iter: &mut dyn FnMut(usize, &SubspaceEstimate),
) -> Result<SubspaceEstimate> {
    let q0 = init_random_subspace(data.dim(), k, rng)?;
    power_method_from(data, q0, iters, rng, on_iter)
}

pub(crate) fn power_method_from(
    data: &Dataset,
    q0: DenseMatrix,
    iters: usize,
    rng: &mut RngState,
    on_iter: &mut dyn FnMut(usize, &SubspaceEstimate),
) -> Result<SubspaceEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let scale = 1.0 / data.n_samples() as f64;
    let mut est = SubspaceEstimate::initial(q0);
    for it in 1..=iters {
        let mut s = DenseMatrix::zeros(est.dim(), est.rank());
        gram_accumulate(data.views(), &est.q, scale, &mut s);
        let lambda = column_norms(&s);
        orthonormalize_in_place(&mut s, rng)?;
        est = SubspaceEstimate {
            q: s,
            lambda,
            tau: it,
        };
        on_iter(it, &est);
    }
    Ok(est)
}

/// `N / ‖X‖_F²`, the reciprocal mean squared sample norm.
pub fn default_vr_eta(data: &Dataset) -> Result<f64> {
    let total = data.frobenius_sq();
    if data.is_empty() || total == 0.0 {
        return Err(Error::EmptyDataset);
    }
    Ok(data.n_samples() as f64 / total)
}

/// Rank-1 VR-PCA with uniformly sampled inner steps.
pub fn vr_pca(data: &Dataset, epochs: usize, eta: Option<f64>, rng: &mut RngState) -> Result<SubspaceEstimate> {
    vr_pca_traced(data, epochs, eta, rng, &mut |_, _| {})
}

/// As [`vr_pca`], calling `on_pass(passes, w)` after each full data pass.
/// Every epoch costs two passes: the anchor gradient and `N` stochastic
/// steps.
pub fn vr_pca_traced(
    data: &Dataset,
    epochs: usize,
    eta: Option<f64>,
    rng: &mut RngState,
    on_pass: &mut dyn FnMut(usize, &[f64]),
) -> Result<SubspaceEstimate> {
    let w0 = init_random_subspace(data.dim(), 1, rng)?.column(0);
    vr_pca_from(data, w0, epochs, eta, rng, on_pass)
}

pub(crate) fn vr_pca_from(
    data: &Dataset,
    w0: Vec<f64>,
    epochs: usize,
    eta: Option<f64>,
    rng: &mut RngState,
    on_pass: &mut dyn FnMut(usize, &[f64]),
) -> Result<SubspaceEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let eta = match eta {
        Some(e) => e,
        None => default_vr_eta(data)?,
    };
    let n = data.n_samples();
    let d = data.dim();
    let rows = data.rows();
    let mut anchor = w0;
    let mut passes = 0;
    for _ in 0..epochs {
        let mut full = vec![0.0; d];
        for r in data.views() {
            let a = r.dot(&anchor);
            add_scaled_row(&mut full, r, a / n as f64);
        }
        passes += 1;
        on_pass(passes, &anchor);

        let mut w = anchor.clone();
        for _ in 0..n {
            let x = rows[rng.index(n)].view();
            let coeff = eta * (x.dot(&w) - x.dot(&anchor));
            add_scaled_row(&mut w, x, coeff);
            for (wi, gi) in w.iter_mut().zip(&full) {
                *wi += eta * gi;
            }
            w = match normalize(&w) {
                Ok(v) => v.into_inner(),
                Err(_) => return Err(Error::Diverged),
            };
        }
        passes += 1;
        on_pass(passes, &w);
        anchor = w;
    }
    Ok(SubspaceEstimate {
        q: DenseMatrix::from_columns(&[anchor])?,
        lambda: DiagonalWeights::ones(1),
        tau: epochs,
    })
}

fn add_scaled_row(out: &mut [f64], row: crate::linalg::RowView<'_>, s: f64) {
    match row {
        crate::linalg::RowView::Dense(x) => {
            for (o, v) in out.iter_mut().zip(x) {
                *o += s * v;
            }
        }
        crate::linalg::RowView::Sparse(e) => {
            for &(c, v) in e {
                out[c] += s * v;
            }
        }
    }
}
