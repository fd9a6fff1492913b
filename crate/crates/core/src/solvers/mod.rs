//! Streaming and batch PCA solvers.
//!
//! Streaming solvers implement [`StreamingSolver`] and see every sample once.
//! The batch solvers ([`power_method_batch`], [`vr_pca`]) make full passes
//! over an in-memory [`Dataset`](crate::ingest::Dataset).

mod baselines;
mod batch;
mod history;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

pub use baselines::{
    block_power_update, oja_pp_active_columns, oja_pp_update, oja_update, BlockPower, Dbpca, Oja,
    OjaPlusPlus,
    DBPCA_BUFFER_CAP,
};
pub use batch::{default_vr_eta, power_method_batch, power_method_batch_traced, vr_pca, vr_pca_traced};
pub use history::{history_first_block, history_update, history_update_rows, HistoryPca, SolverStep};
pub use oracle::{exact_eig_oracle, OracleEigen};

use crate::datagen::RngState;
use crate::error::{Error, Result};
use crate::ingest::{BlockStream, DataBlock};
use crate::linalg::{orthonormalize_in_place, DenseMatrix, DiagonalWeights};

/// Orthonormal basis plus per-column weights and the number of blocks
/// absorbed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEstimate {
    pub q: DenseMatrix,
    pub lambda: DiagonalWeights,
    pub tau: usize,
}

impl SubspaceEstimate {
    /// Estimate before any data: `tau = 0`, unit weights.
    pub fn initial(q: DenseMatrix) -> Self {
        let k = q.ncols();
        Self {
            q,
            lambda: DiagonalWeights::ones(k),
            tau: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// First column, the rank-1 answer.
    pub fn leading_vector(&self) -> Vec<f64> {
        self.q.column(0)
    }

    /// Reorders columns so `lambda` is non-increasing. The operator
    /// `QΛQᵀ` and the spanned subspace are unchanged.
    pub(crate) fn sort_by_weight(&mut self) {
        let k = self.rank();
        for i in 0..k {
            let mut best = i;
            for j in i + 1..k {
                if self.lambda.as_slice()[j] > self.lambda.as_slice()[best] {
                    best = j;
                }
            }
            if best != i {
                self.q.swap_columns(i, best);
                self.lambda.swap(i, best);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    History,
    Oja,
    OjaPp,
    BlockPower,
    Dbpca,
    PowerBatch,
    VrPca,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::History,
        Algorithm::Oja,
        Algorithm::OjaPp,
        Algorithm::BlockPower,
        Algorithm::Dbpca,
        Algorithm::PowerBatch,
        Algorithm::VrPca,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::History => "history",
            Algorithm::Oja => "oja",
            Algorithm::OjaPp => "oja_pp",
            Algorithm::BlockPower => "block_power",
            Algorithm::Dbpca => "dbpca",
            Algorithm::PowerBatch => "power_batch",
            Algorithm::VrPca => "vr_pca",
        }
    }

    pub fn is_streaming(self) -> bool {
        !matches!(self, Algorithm::PowerBatch | Algorithm::VrPca)
    }

    /// Oja-family solvers take a step constant `c` and are tuned over a grid.
    pub fn uses_step_constant(self) -> bool {
        matches!(self, Algorithm::Oja | Algorithm::OjaPp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub d: usize,
    pub k: usize,
    pub block_size: usize,
    /// History PCA inner operator applications per block.
    pub m: usize,
    /// Inner-loop early exit on successive-iterate principal angle.
    pub tol: f64,
    /// Carry eigenvalue weights in History PCA (default on). Off pins
    /// `Λ = I`, the unit-eigenvalue form of the rank-1 recursion.
    pub track_lambda: bool,
    /// Oja-family step constant; step is `c / t` with `t` the block count.
    pub c: f64,
    /// Stream length in blocks; required by the Oja++ activation schedule.
    pub total_blocks: Option<usize>,
    pub epochs: usize,
    /// VR-PCA step; `None` uses `N / ‖X‖_F²`.
    pub eta: Option<f64>,
    /// Batch power-method iterations.
    pub iters: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, d: usize, k: usize, block_size: usize) -> Self {
        Self {
            algorithm,
            d,
            k,
            block_size,
            m: 3,
            tol: 1e-8,
            track_lambda: true,
            c: 1.0,
            total_blocks: None,
            epochs: 5,
            eta: None,
            iters: 50,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.d {
            return Err(Error::invalid(format!(
                "need 1 <= k < d, got k={} d={}",
                self.k, self.d
            )));
        }
        if self.block_size == 0 {
            return Err(Error::invalid("block size must be >= 1"));
        }
        if self.m == 0 {
            return Err(Error::invalid("inner iteration count m must be >= 1"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::invalid("tolerance must be >= 0"));
        }
        if self.algorithm.uses_step_constant() && !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("step constant must be > 0, got {}", self.c)));
        }
        if self.algorithm == Algorithm::OjaPp && self.total_blocks.is_none() {
            return Err(Error::invalid("oja_pp needs total_blocks for its schedule"));
        }
        if self.algorithm == Algorithm::VrPca {
            if self.k != 1 {
                return Err(Error::invalid("vr_pca is rank-1 only"));
            }
            if let Some(eta) = self.eta {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::invalid(format!("vr_pca step must be > 0, got {eta}")));
                }
            }
        }
        Ok(())
    }

    pub fn solver_rng(&self) -> RngState {
        RngState::with_stream(self.seed, SOLVER_STREAM)
    }
}

const SOLVER_STREAM: u64 = 0x51;

/// Orthonormal columns from a Gaussian matrix.
pub fn init_random_subspace(d: usize, k: usize, rng: &mut RngState) -> Result<DenseMatrix> {
    if k == 0 || k >= d {
        return Err(Error::invalid(format!("need 1 <= k < d, got k={k} d={d}")));
    }
    let mut q = rng.normal_matrix(d, k);
    orthonormalize_in_place(&mut q, rng)?;
    Ok(q)
}

/// Common interface for one-pass solvers.
pub trait StreamingSolver: Send {
    fn algorithm(&self) -> Algorithm;

    fn absorb(&mut self, block: &DataBlock) -> Result<()>;

    /// Pulls at most one block from `stream` and absorbs it. Returns the
    /// number of samples consumed; zero means the stream is exhausted.
    fn step(&mut self, stream: &mut BlockStream) -> Result<usize> {
        match stream.next_block()? {
            Some(block) => {
                self.absorb(&block)?;
                Ok(block.n_rows())
            }
            None => Ok(0),
        }
    }

    fn estimate(&self) -> &SubspaceEstimate;

    fn samples_seen(&self) -> u64;

    /// Set once a step produced non-finite values; later steps are no-ops.
    fn diverged(&self) -> bool {
        false
    }

    /// QR columns replaced because the iterate lost rank.
    fn reseed_events(&self) -> usize {
        0
    }
}

/// Instantiates the streaming solver named by `cfg`.
pub fn build_streaming_solver(cfg: &SolverConfig) -> Result<Box<dyn StreamingSolver>> {
    cfg.validate()?;
    Ok(match cfg.algorithm {
        Algorithm::History => Box::new(HistoryPca::new(cfg)?),
        Algorithm::Oja => Box::new(Oja::new(cfg)?),
        Algorithm::OjaPp => Box::new(OjaPlusPlus::new(cfg)?),
        Algorithm::BlockPower => Box::new(BlockPower::new(cfg)?),
        Algorithm::Dbpca => Box::new(Dbpca::new(cfg)?),
        other => {
            return Err(Error::invalid(format!("{other} is a batch solver")));
        }
    })
}

pub(crate) fn check_dim(block: &DataBlock, d: usize) -> Result<()> {
    if block.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "solver update (block columns vs basis rows)",
            left: block.dim(),
            right: d,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_subspace_is_orthonormal_and_seeded() {
        let a = init_random_subspace(30, 4, &mut RngState::seed_from(3)).unwrap();
        let b = init_random_subspace(30, 4, &mut RngState::seed_from(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.orthonormality_error() <= 1e-10);
        let v = init_random_subspace(5, 1, &mut RngState::seed_from(1)).unwrap();
        assert!((crate::linalg::norm(&v.column(0)) - 1.0).abs() < 1e-14);
        assert!(init_random_subspace(3, 3, &mut RngState::seed_from(1)).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("sgd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::new(Algorithm::History, 10, 2, 5);
        assert!(c.validate().is_ok());
        c.m = 0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::new(Algorithm::Oja, 10, 1, 5);
        c.c = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig::new(Algorithm::OjaPp, 10, 2, 5);
        assert!(c.validate().is_err());
        let c = SolverConfig::new(Algorithm::VrPca, 10, 2, 5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn sort_by_weight_keeps_pairs() {
        let q = DenseMatrix::eye(4, 3);
        let mut est = SubspaceEstimate {
            q,
            lambda: DiagonalWeights::new(vec![1.0, 3.0, 2.0]).unwrap(),
            tau: 1,
        };
        est.sort_by_weight();
        assert_eq!(est.lambda.as_slice(), &[3.0, 2.0, 1.0]);
        assert_eq!(est.q.column(0), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(est.q.column(1), vec![0.0, 0.0, 1.0, 0.0]);
    }
}
