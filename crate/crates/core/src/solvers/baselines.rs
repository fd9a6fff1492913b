//! Baseline streaming solvers: Oja, Oja++, block stochastic power and the
//! doubling-block variant (DBPCA).

use crate::datagen::RngState;
use crate::error::{Error, Result};
use crate::ingest::DataBlock;
use crate::linalg::{column_norms, gram_accumulate, orthonormalize_in_place, DenseMatrix};

use super::{
    check_dim, init_random_subspace, Algorithm, SolverConfig, SolverStep, StreamingSolver,
    SubspaceEstimate,
};

/// DBPCA never buffers more than this many samples.
pub const DBPCA_BUFFER_CAP: usize = 1 << 15;

fn finish(s: DenseMatrix, tau: usize, rng: &mut RngState) -> Result<SolverStep> {
    if !s.is_finite() {
        return Err(Error::Diverged);
    }
    let lambda = column_norms(&s);
    let mut q = s;
    let (_, dead) = orthonormalize_in_place(&mut q, rng)?;
    Ok(SolverStep {
        estimate: SubspaceEstimate { q, lambda, tau },
        inner_iters: 1,
        reseeded: dead.len(),
    })
}

/// `Q ← QR(Q + (c/t)·(1/B)·XᵀX Q)`; for `k = 1` the QR is a normalization.
pub fn oja_update(
    state: &SubspaceEstimate,
    block: &DataBlock,
    c: f64,
    t: usize,
    rng: &mut RngState,
) -> Result<SolverStep> {
    oja_pp_update(state, block, c, t, state.rank(), rng)
}

/// Oja step applied to the first `active` columns only; the rest are
/// carried through the QR unchanged.
pub fn oja_pp_update(
    state: &SubspaceEstimate,
    block: &DataBlock,
    c: f64,
    t: usize,
    active: usize,
    rng: &mut RngState,
) -> Result<SolverStep> {
    check_dim(block, state.dim())?;
    if t == 0 {
        return Err(Error::invalid("Oja iteration counter starts at 1"));
    }
    let k = state.rank();
    let eta = c / t as f64 / block.n_rows() as f64;
    let mut grad = DenseMatrix::zeros(state.dim(), k);
    gram_accumulate(block.rows(), &state.q, eta, &mut grad);
    let mut s = state.q.clone();
    for i in 0..state.dim() {
        let g = grad.row(i);
        for (j, v) in s.row_mut(i).iter_mut().enumerate().take(active.min(k)) {
            *v += g[j];
        }
    }
    finish(s, state.tau + 1, rng)
}

/// `Q ← QR((1/B) XᵀX Q)`. A zero block collapses the iterate and the QR
/// re-randomizes it.
pub fn block_power_update(
    state: &SubspaceEstimate,
    block: &DataBlock,
    rng: &mut RngState,
) -> Result<SolverStep> {
    check_dim(block, state.dim())?;
    let mut s = DenseMatrix::zeros(state.dim(), state.rank());
    gram_accumulate(block.rows(), &state.q, 1.0 / block.n_rows() as f64, &mut s);
    finish(s, state.tau + 1, rng)
}

/// Shared bookkeeping for the simple baselines.
struct Core {
    estimate: SubspaceEstimate,
    rng: RngState,
    samples: u64,
    reseeds: usize,
    diverged: bool,
}

impl Core {
    fn new(cfg: &SolverConfig) -> Result<Self> {
        let mut rng = cfg.solver_rng();
        let q = init_random_subspace(cfg.d, cfg.k, &mut rng)?;
        Ok(Self {
            estimate: SubspaceEstimate::initial(q),
            rng,
            samples: 0,
            reseeds: 0,
            diverged: false,
        })
    }

    fn accept(&mut self, step: Result<SolverStep>) -> Result<()> {
        match step {
            Ok(s) => {
                if s.reseeded > 0 {
                    log::debug!("step {}: reseeded {} columns", s.estimate.tau, s.reseeded);
                }
                self.reseeds += s.reseeded;
                self.estimate = s.estimate;
                Ok(())
            }
            Err(Error::Diverged) => {
                self.diverged = true;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

macro_rules! core_accessors {
    () => {
        fn estimate(&self) -> &SubspaceEstimate {
            &self.core.estimate
        }

        fn samples_seen(&self) -> u64 {
            self.core.samples
        }

        fn diverged(&self) -> bool {
            self.core.diverged
        }

        fn reseed_events(&self) -> usize {
            self.core.reseeds
        }
    };
}

pub struct Oja {
    core: Core,
    c: f64,
}

impl Oja {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        Ok(Self {
            core: Core::new(cfg)?,
            c: cfg.c,
        })
    }
}

impl StreamingSolver for Oja {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Oja
    }

    fn absorb(&mut self, block: &DataBlock) -> Result<()> {
        check_dim(block, self.core.estimate.dim())?;
        self.core.samples += block.n_rows() as u64;
        if self.core.diverged {
            return Ok(());
        }
        let t = self.core.estimate.tau + 1;
        let step = oja_update(&self.core.estimate, block, self.c, t, &mut self.core.rng);
        self.core.accept(step)
    }

    core_accessors!();
}

/// Number of columns Oja++ updates at block `t` (1-based): one more column
/// every `⌈n/(2k)⌉` blocks during the first half of the stream, all `k`
/// afterwards.
pub fn oja_pp_active_columns(k: usize, t: usize, total_blocks: usize) -> usize {
    let period = total_blocks.div_ceil(2 * k).max(1);
    if 2 * t > total_blocks {
        return k;
    }
    (1 + (t.saturating_sub(1)) / period).min(k)
}

pub struct OjaPlusPlus {
    core: Core,
    c: f64,
    total_blocks: usize,
    active: usize,
}

impl OjaPlusPlus {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        let total_blocks = cfg
            .total_blocks
            .ok_or_else(|| Error::invalid("oja_pp needs total_blocks"))?;
        Ok(Self {
            core: Core::new(cfg)?,
            c: cfg.c,
            total_blocks,
            active: 1,
        })
    }

    pub fn active_columns(&self) -> usize {
        self.active
    }
}

impl StreamingSolver for OjaPlusPlus {
    fn algorithm(&self) -> Algorithm {
        Algorithm::OjaPp
    }

    fn absorb(&mut self, block: &DataBlock) -> Result<()> {
        check_dim(block, self.core.estimate.dim())?;
        self.core.samples += block.n_rows() as u64;
        if self.core.diverged {
            return Ok(());
        }
        let k = self.core.estimate.rank();
        let t = self.core.estimate.tau + 1;
        let want = oja_pp_active_columns(k, t, self.total_blocks);
        if want > self.active {
            // fresh random directions for the newly activated columns
            let q = &mut self.core.estimate.q;
            for i in 0..q.nrows() {
                for j in self.active..want {
                    q.set(i, j, self.core.rng.standard_normal());
                }
            }
            orthonormalize_in_place(q, &mut self.core.rng)?;
            self.active = want;
        }
        let step = oja_pp_update(
            &self.core.estimate,
            block,
            self.c,
            t,
            self.active,
            &mut self.core.rng,
        );
        self.core.accept(step)
    }

    core_accessors!();
}

pub struct BlockPower {
    core: Core,
}

impl BlockPower {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        Ok(Self {
            core: Core::new(cfg)?,
        })
    }
}

impl StreamingSolver for BlockPower {
    fn algorithm(&self) -> Algorithm {
        Algorithm::BlockPower
    }

    fn absorb(&mut self, block: &DataBlock) -> Result<()> {
        check_dim(block, self.core.estimate.dim())?;
        self.core.samples += block.n_rows() as u64;
        if self.core.diverged {
            return Ok(());
        }
        let step = block_power_update(&self.core.estimate, block, &mut self.core.rng);
        self.core.accept(step)
    }

    core_accessors!();
}

/// Block power method on a growing buffer: the first power step uses `B`
/// samples and each later one twice as many as the previous, up to
/// [`DBPCA_BUFFER_CAP`]. The basis is fixed while a buffer fills, so only
/// the running product `XᵀX Q` is kept. A partially filled buffer at end of
/// stream is not used.
pub struct Dbpca {
    core: Core,
    acc: DenseMatrix,
    buffered: usize,
    target: usize,
    consumed_per_step: Vec<usize>,
}

impl Dbpca {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        Ok(Self {
            core: Core::new(cfg)?,
            acc: DenseMatrix::zeros(cfg.d, cfg.k),
            buffered: 0,
            target: cfg.block_size.min(DBPCA_BUFFER_CAP),
            consumed_per_step: Vec::new(),
        })
    }

    /// Samples used by each completed power step.
    pub fn schedule(&self) -> &[usize] {
        &self.consumed_per_step
    }

    pub fn buffered(&self) -> usize {
        self.buffered
    }

    fn power_step(&mut self) -> Result<()> {
        let (d, k) = (self.acc.nrows(), self.acc.ncols());
        let mut s = std::mem::replace(&mut self.acc, DenseMatrix::zeros(d, k));
        s.scale_in_place(1.0 / self.buffered as f64);
        let step = finish(s, self.core.estimate.tau + 1, &mut self.core.rng);
        self.consumed_per_step.push(self.buffered);
        self.buffered = 0;
        self.target = (self.target * 2).min(DBPCA_BUFFER_CAP);
        self.core.accept(step)
    }
}

impl StreamingSolver for Dbpca {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dbpca
    }

    fn absorb(&mut self, block: &DataBlock) -> Result<()> {
        check_dim(block, self.core.estimate.dim())?;
        self.core.samples += block.n_rows() as u64;
        if self.core.diverged {
            return Ok(());
        }
        gram_accumulate(block.rows(), &self.core.estimate.q, 1.0, &mut self.acc);
        self.buffered += block.n_rows();
        if self.buffered >= self.target {
            self.power_step()?;
        }
        Ok(())
    }

    core_accessors!();
}
