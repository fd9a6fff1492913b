//! Streaming PCA under bounded memory.
//!
//! The centerpiece is History PCA ([`solvers::HistoryPca`]): each incoming
//! block of samples is combined with a rank-k summary `QΛQᵀ` of every
//! earlier block, weighted by block count, and a few power iterations on
//! that combined operator give the new basis. Baselines (Oja, Oja++, block
//! power, DBPCA, batch power method, VR-PCA), the spiked covariance
//! generator, LIBSVM / docword readers, and evaluation metrics live
//! alongside it.

pub mod datagen;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod solvers;

pub use error::{Error, Result};
