//! History PCA.
//!
//! Block `τ` is absorbed by running a few power iterations on the implicit
//! operator
//!
//! ```text
//! ((τ−1)/τ) · Q_{τ−1} Λ_{τ−1} Q_{τ−1}ᵀ  +  (1/τ) · (1/B) X_τᵀ X_τ
//! ```
//!
//! starting from `Q_{τ−1}`, with a QR after every application. The first
//! block uses `I + (1/B) X_1ᵀ X_1`. The new weights are the column norms of
//! the last pre-QR iterate. Rank 1 with fixed unit weight is the plain
//! vector recursion.

use crate::datagen::RngState;
use crate::error::{Error, Result};
use crate::ingest::{BlockStream, DataBlock, Row};
use crate::linalg::{column_norms, gram_accumulate, orthonormalize_in_place, DenseMatrix, DiagonalWeights};
use crate::metrics::principal_angle_distance;

use super::{check_dim, init_random_subspace, Algorithm, SolverConfig, StreamingSolver, SubspaceEstimate};

#[derive(Debug, Clone)]
pub struct SolverStep {
    pub estimate: SubspaceEstimate,
    /// Operator applications actually performed (≤ m).
    pub inner_iters: usize,
    /// Columns re-randomized by QR during this step.
    pub reseeded: usize,
}

/// `weight · Q_prev Λ (Q_prevᵀ current)`.
fn history_term(prev: &SubspaceEstimate, current: &DenseMatrix, weight: f64) -> Result<DenseMatrix> {
    let mut mix = prev.q.t_matmul(current)?;
    for (i, &l) in prev.lambda.as_slice().iter().enumerate() {
        mix.row_mut(i).iter_mut().for_each(|v| *v *= l * weight);
    }
    prev.q.matmul(&mix)
}

fn inner_solve(
    prev: Option<&SubspaceEstimate>,
    start: &DenseMatrix,
    block: &DataBlock,
    m: usize,
    tol: f64,
    rng: &mut RngState,
) -> Result<SolverStep> {
    if m == 0 {
        return Err(Error::invalid("inner iteration count m must be >= 1"));
    }
    check_dim(block, start.nrows())?;
    let tau = prev.map_or(1, |p| p.tau + 1);
    let b = block.n_rows() as f64;
    let data_scale = 1.0 / (tau as f64 * b);
    let history_weight = (tau as f64 - 1.0) / tau as f64;

    let mut q = start.clone();
    let mut lambda = DiagonalWeights::ones(q.ncols());
    let mut reseeded = 0;
    let mut iters = 0;
    while iters < m {
        let mut s = match prev {
            None => q.clone(),
            Some(p) => history_term(p, &q, history_weight)?,
        };
        gram_accumulate(block.rows(), &q, data_scale, &mut s);
        if !s.is_finite() {
            return Err(Error::Diverged);
        }
        lambda = column_norms(&s);
        let (_, dead) = orthonormalize_in_place(&mut s, rng)?;
        if !dead.is_empty() {
            log::debug!("history step {tau}: reseeded columns {dead:?}");
        }
        reseeded += dead.len();
        iters += 1;
        let converged = iters < m && principal_angle_distance(&s, &q)? < tol;
        q = s;
        if converged {
            break;
        }
    }
    let mut estimate = SubspaceEstimate { q, lambda, tau };
    estimate.sort_by_weight();
    Ok(SolverStep {
        estimate,
        inner_iters: iters,
        reseeded,
    })
}

/// First block: iterate on `I + (1/B) XᵀX` from `q0`.
pub fn history_first_block(
    q0: &DenseMatrix,
    block: &DataBlock,
    m: usize,
    tol: f64,
    rng: &mut RngState,
) -> Result<SolverStep> {
    inner_solve(None, q0, block, m, tol, rng)
}

/// Absorbs block `state.tau + 1`.
pub fn history_update(
    state: &SubspaceEstimate,
    block: &DataBlock,
    m: usize,
    tol: f64,
    rng: &mut RngState,
) -> Result<SolverStep> {
    if state.tau == 0 {
        return Err(Error::invalid("history_update needs an estimate from a first block"));
    }
    inner_solve(Some(state), &state.q, block, m, tol, rng)
}

/// Single-application (`m = 1`) update that pulls up to `max_rows` samples
/// one at a time, so the block is never held in memory. Working state is
/// the basis, one `d × k` accumulator and the current sample. Handles the
/// first block when `state.tau == 0`. Returns `None` if no sample arrived.
pub fn history_update_rows(
    state: &SubspaceEstimate,
    next_row: &mut dyn FnMut() -> Result<Option<Row>>,
    max_rows: usize,
    rng: &mut RngState,
) -> Result<Option<SolverStep>> {
    let (d, k) = (state.q.nrows(), state.q.ncols());
    let mut acc = DenseMatrix::zeros(d, k);
    let mut proj = vec![0.0; k];
    let mut count = 0usize;
    while count < max_rows {
        let Some(row) = next_row()? else { break };
        if let Row::Dense(v) = &row {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "history_update_rows (sample vs basis rows)",
                    left: v.len(),
                    right: d,
                });
            }
        }
        let view = row.view();
        view.project(&state.q, &mut proj);
        view.add_outer(&proj, 1.0, &mut acc);
        count += 1;
    }
    if count == 0 {
        return Ok(None);
    }
    let tau = state.tau + 1;
    let data_scale = 1.0 / (tau as f64 * count as f64);
    // Coefficients of the history term in the basis: S = D·scale + Q·mix.
    let mix = if state.tau == 0 {
        DenseMatrix::identity(k)
    } else {
        let weight = (tau as f64 - 1.0) / tau as f64;
        let mut mix = state.q.t_matmul(&state.q)?;
        for (i, &l) in state.lambda.as_slice().iter().enumerate() {
            mix.row_mut(i).iter_mut().for_each(|v| *v *= l * weight);
        }
        mix
    };
    for i in 0..d {
        let qi = state.q.row(i);
        let si = acc.row_mut(i);
        for (j, s) in si.iter_mut().enumerate() {
            let h: f64 = qi.iter().enumerate().map(|(l, q)| q * mix.get(l, j)).sum();
            *s = *s * data_scale + h;
        }
    }
    if !acc.is_finite() {
        return Err(Error::Diverged);
    }
    let lambda = column_norms(&acc);
    let (_, dead) = orthonormalize_in_place(&mut acc, rng)?;
    let mut estimate = SubspaceEstimate {
        q: acc,
        lambda,
        tau,
    };
    estimate.sort_by_weight();
    Ok(Some(SolverStep {
        estimate,
        inner_iters: 1,
        reseeded: dead.len(),
    }))
}

/// Stateful History PCA runner.
pub struct HistoryPca {
    estimate: SubspaceEstimate,
    m: usize,
    tol: f64,
    track_lambda: bool,
    rng: RngState,
    samples: u64,
    reseeds: usize,
    diverged: bool,
}

impl HistoryPca {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        let mut rng = cfg.solver_rng();
        let q0 = init_random_subspace(cfg.d, cfg.k, &mut rng)?;
        Ok(Self::from_initial(q0, cfg, rng))
    }

    /// Starts from a caller-chosen basis.
    pub fn from_initial(q0: DenseMatrix, cfg: &SolverConfig, rng: RngState) -> Self {
        Self {
            estimate: SubspaceEstimate::initial(q0),
            m: cfg.m,
            tol: cfg.tol,
            track_lambda: cfg.track_lambda,
            rng,
            samples: 0,
            reseeds: 0,
            diverged: false,
        }
    }

    fn accept(&mut self, step: Result<SolverStep>, samples: usize) -> Result<()> {
        match step {
            Ok(mut s) => {
                if !self.track_lambda {
                    s.estimate.lambda = DiagonalWeights::ones(s.estimate.rank());
                }
                self.estimate = s.estimate;
                self.reseeds += s.reseeded;
                self.samples += samples as u64;
                Ok(())
            }
            Err(Error::Diverged) => {
                self.diverged = true;
                self.samples += samples as u64;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

impl StreamingSolver for HistoryPca {
    fn algorithm(&self) -> Algorithm {
        Algorithm::History
    }

    fn absorb(&mut self, block: &DataBlock) -> Result<()> {
        check_dim(block, self.estimate.dim())?;
        if self.diverged {
            self.samples += block.n_rows() as u64;
            return Ok(());
        }
        let step = if self.estimate.tau == 0 {
            history_first_block(&self.estimate.q, block, self.m, self.tol, &mut self.rng)
        } else {
            history_update(&self.estimate, block, self.m, self.tol, &mut self.rng)
        };
        self.accept(step, block.n_rows())
    }

    fn step(&mut self, stream: &mut BlockStream) -> Result<usize> {
        if self.m > 1 || self.diverged {
            return match stream.next_block()? {
                Some(block) => {
                    self.absorb(&block)?;
                    Ok(block.n_rows())
                }
                None => Ok(0),
            };
        }
        let max = stream.block_size();
        let mut count = 0usize;
        let mut pull = || {
            let r = stream.next_row();
            if matches!(r, Ok(Some(_))) {
                count += 1;
            }
            r
        };
        match history_update_rows(&self.estimate, &mut pull, max, &mut self.rng) {
            Ok(None) => Ok(0),
            Ok(Some(s)) => {
                self.accept(Ok(s), count)?;
                Ok(count)
            }
            Err(e) => {
                self.accept(Err(e), count)?;
                Ok(count)
            }
        }
    }

    fn estimate(&self) -> &SubspaceEstimate {
        &self.estimate
    }

    fn samples_seen(&self) -> u64 {
        self.samples
    }

    fn diverged(&self) -> bool {
        self.diverged
    }

    fn reseed_events(&self) -> usize {
        self.reseeds
    }
}
