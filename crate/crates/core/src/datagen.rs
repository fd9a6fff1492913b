//! Seeded synthetic data: the spiked covariance model `Σ = UUᵀ + σ²I` and a
//! small sparse bag-of-words style corpus used for bundled fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::DataBlock;
use crate::linalg::{orthonormalize_in_place, DenseMatrix, SparseRow};

/// Deterministic generator. ChaCha keystreams are platform independent, and
/// normals come from the ziggurat sampler in `rand_distr`.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent sub-stream of `seed` selected by `stream`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        self.fill_normal(m.as_mut_slice());
        m
    }
}

// Sub-stream ids, so that the subspace and the sample stream of one seed
// never share keystream.
const STREAM_SUBSPACE: u64 = 0;
const STREAM_SAMPLES: u64 = 1;
const STREAM_EVAL: u64 = 2;

#[derive(Debug, Clone)]
pub struct SpikedModel {
    d: usize,
    k: usize,
    u: DenseMatrix,
    sigma: f64,
    seed: u64,
}

impl SpikedModel {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for this model's sample stream.
    pub fn sample_rng(&self) -> RngState {
        RngState::with_stream(self.seed, STREAM_SAMPLES)
    }

    /// Generator for a held-out evaluation set, disjoint from the stream.
    pub fn eval_rng(&self) -> RngState {
        RngState::with_stream(self.seed, STREAM_EVAL)
    }

    /// Writes `U z + σ ε` into `out`.
    pub fn sample_into(&self, rng: &mut RngState, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        let mut z = vec![0.0; self.k];
        rng.fill_normal(&mut z);
        for (i, o) in out.iter_mut().enumerate() {
            let signal: f64 = self.u.row(i).iter().zip(z.iter()).map(|(a, b)| a * b).sum();
            *o = signal;
        }
        if self.sigma > 0.0 {
            for o in out.iter_mut() {
                *o += self.sigma * rng.standard_normal();
            }
        }
    }

    /// `Σ = UUᵀ + σ²I` as an explicit `d × d` matrix (small `d` only).
    pub fn covariance(&self) -> DenseMatrix {
        let mut cov = self.u.matmul(&self.u.transpose()).expect("square");
        for i in 0..self.d {
            let v = cov.get(i, i) + self.sigma * self.sigma;
            cov.set(i, i, v);
        }
        cov
    }
}

/// Draws `U` as the orthonormal factor of a seeded `d × k` Gaussian matrix.
pub fn make_spiked_model(d: usize, k: usize, sigma: f64, seed: u64) -> Result<SpikedModel> {
    if k == 0 || k >= d {
        return Err(Error::invalid(format!("spiked model needs 1 <= k < d, got k={k}, d={d}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise level must be >= 0, got {sigma}")));
    }
    let mut rng = RngState::with_stream(seed, STREAM_SUBSPACE);
    let mut u = rng.normal_matrix(d, k);
    orthonormalize_in_place(&mut u, &mut rng)?;
    Ok(SpikedModel {
        d,
        k,
        u,
        sigma,
        seed,
    })
}

pub fn sample_block(model: &SpikedModel, b: usize, rng: &mut RngState) -> Result<DataBlock> {
    if b == 0 {
        return Err(Error::invalid("block size must be >= 1"));
    }
    let mut x = DenseMatrix::zeros(b, model.d);
    for r in 0..b {
        model.sample_into(rng, x.row_mut(r));
    }
    DataBlock::dense(x)
}

pub fn true_subspace(model: &SpikedModel) -> DenseMatrix {
    model.u.clone()
}

/// Sparse non-negative "document" rows over `d` terms, drawn from a few
/// latent topics with Zipf-like term weights. Rows are L2-normalized so the
/// leading eigenvalues of the sample covariance are O(1).
pub fn make_sparse_corpus(
    n: usize,
    d: usize,
    topics: usize,
    words_per_doc: usize,
    seed: u64,
) -> Result<Vec<SparseRow>> {
    if topics == 0 || d == 0 || words_per_doc == 0 {
        return Err(Error::invalid("corpus needs topics, terms and words per doc"));
    }
    let mut rng = RngState::seed_from(seed);
    // Each topic owns a random permutation prefix of the vocabulary; term
    // rank r within a topic has weight 1/(r+1).
    let span = (d / 2).max(1);
    let topic_terms: Vec<Vec<usize>> = (0..topics)
        .map(|_| {
            let mut perm: Vec<usize> = (0..d).collect();
            for i in (1..d).rev() {
                let j = rng.index(i + 1);
                perm.swap(i, j);
            }
            perm.truncate(span);
            perm
        })
        .collect();
    let harmonic: Vec<f64> = (0..span)
        .scan(0.0, |acc, r| {
            *acc += 1.0 / (r as f64 + 1.0);
            Some(*acc)
        })
        .collect();
    let total = *harmonic.last().unwrap();

    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        // Topic 0 dominates so the corpus has a clear leading direction.
        let topic = if rng.uniform() < 0.5 { 0 } else { rng.index(topics) };
        let mut counts = vec![0u32; d];
        for _ in 0..words_per_doc {
            let u = rng.uniform() * total;
            let rank = harmonic.partition_point(|&h| h < u).min(span - 1);
            counts[topic_terms[topic][rank]] += 1;
        }
        let mut entries: Vec<(usize, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, (1.0 + c as f64).ln()))
            .collect();
        let nrm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        for e in &mut entries {
            // Round so the text form round-trips exactly.
            e.1 = (e.1 / nrm * 1e6).round() / 1e6;
        }
        rows.push(SparseRow::new(entries, d)?);
    }
    Ok(rows)
}
