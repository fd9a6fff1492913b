//! Experiment descriptions and their expansion into individual runs.

use std::fmt;
use std::path::PathBuf;

use historypca::metrics::MetricName;
use historypca::solvers::{Algorithm, SolverConfig};

use crate::error::{BenchError, Result};

/// Oja step constants `c = 10^j`, `j = -6..=4`.
pub fn oja_c_grid() -> Vec<f64> {
    (-6..=4).map(|j| 10f64.powi(j)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Spiked covariance model, one model per seed.
    Spiked { d: usize, sigma: f64 },
    Libsvm { path: PathBuf, dim: Option<usize> },
    Docword { path: PathBuf },
    /// LIBSVM text compiled into the binary.
    Bundled { name: String },
}

impl DataSource {
    pub fn kind(&self) -> &'static str {
        match self {
            DataSource::Spiked { .. } => "spiked",
            DataSource::Libsvm { .. } => "libsvm",
            DataSource::Docword { .. } => "docword",
            DataSource::Bundled { .. } => "bundled",
        }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self, DataSource::Spiked { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: String,
    pub source: DataSource,
    pub k: usize,
    pub block_size: usize,
    /// Samples per pass. Synthetic sources need it; file sources default to
    /// the whole file.
    pub n_samples: Option<usize>,
    pub passes: usize,
    pub algorithms: Vec<Algorithm>,
    /// History PCA inner-iteration grid.
    pub m_grid: Vec<usize>,
    /// Oja-family step-constant grid.
    pub c_grid: Vec<f64>,
    pub track_lambda: bool,
    pub tol: f64,
    pub eta: Option<f64>,
    pub seeds: usize,
    pub seed_base: u64,
    /// Evaluate every this many blocks (batch solvers: every pass).
    pub eval_every: usize,
    /// Held-out evaluation set size for synthetic explained variance.
    pub eval_samples: usize,
    pub metric: MetricName,
    /// Oja-family configurations kept in summaries and plots.
    pub top_c: usize,
}

impl ExperimentSpec {
    /// Spiked-model experiment with the defaults used throughout the presets.
    pub fn spiked(scenario: &str, d: usize, k: usize, sigma: f64, block_size: usize) -> Self {
        Self {
            scenario: scenario.to_string(),
            source: DataSource::Spiked { d, sigma },
            k,
            block_size,
            n_samples: Some(10_000),
            passes: 1,
            algorithms: vec![Algorithm::History],
            m_grid: vec![3],
            c_grid: oja_c_grid(),
            track_lambda: true,
            tol: 1e-8,
            eta: None,
            seeds: 10,
            seed_base: 0,
            eval_every: 10,
            eval_samples: 10_000,
            metric: MetricName::PrincipalAngle,
            top_c: 3,
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed_base + i).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Invalid(format!("{}: {msg}", self.scenario)));
        if self.scenario.is_empty()
            || !self
                .scenario
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return bad(format!("scenario name {:?} must be non-empty [A-Za-z0-9._-]", self.scenario));
        }
        if self.algorithms.is_empty() {
            return bad("at least one solver is required".into());
        }
        if self.seeds == 0 {
            return bad("at least one seed is required".into());
        }
        if self.block_size == 0 || self.passes == 0 || self.eval_every == 0 {
            return bad("block_size, passes and eval_every must be >= 1".into());
        }
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        match &self.source {
            DataSource::Spiked { d, sigma } => {
                if self.k >= *d {
                    return bad(format!("need k < d, got k={} d={d}", self.k));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma must be >= 0, got {sigma}"));
                }
                if self.n_samples.is_none_or(|n| n == 0) {
                    return bad("synthetic sources need n >= 1".into());
                }
            }
            DataSource::Libsvm { path, .. } | DataSource::Docword { path } => {
                if path.as_os_str().is_empty() {
                    return bad("file source needs a path".into());
                }
            }
            DataSource::Bundled { name } => {
                if crate::presets::bundled_data(name).is_none() {
                    return bad(format!("unknown bundled dataset {name:?}"));
                }
            }
        }
        if self.algorithms.contains(&Algorithm::History) && self.m_grid.is_empty() {
            return bad("history needs a non-empty m grid".into());
        }
        if self.algorithms.iter().any(|a| a.uses_step_constant()) && self.c_grid.is_empty() {
            return bad("oja-family solvers need a non-empty c grid".into());
        }
        if self.metric == MetricName::UnnormalizedError && self.k != 1 {
            return bad("unnormalized_error is defined for k = 1".into());
        }
        if self.metric == MetricName::ExplainedVariance && self.source.is_synthetic() && self.eval_samples == 0 {
            return bad("eval_samples must be >= 1".into());
        }
        if self.algorithms.contains(&Algorithm::VrPca) && self.k != 1 {
            return bad("vr_pca is rank-1 only".into());
        }
        // Solver-level checks with a placeholder dimension.
        let d = match &self.source {
            DataSource::Spiked { d, .. } => *d,
            _ => self.k + 1,
        };
        for run in self.runs_for_dim(d, self.n_samples.unwrap_or(1)) {
            run.solver.validate()?;
        }
        Ok(())
    }

    /// Every (solver configuration, seed) pair, in a fixed order, for data
    /// of dimension `d` with `n` samples per pass.
    pub fn runs_for_dim(&self, d: usize, n: usize) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &alg in &self.algorithms {
            for variant in self.variants(alg) {
                for seed in self.seed_list() {
                    let mut cfg = SolverConfig::new(alg, d, self.k, self.block_size);
                    cfg.tol = self.tol;
                    cfg.track_lambda = self.track_lambda;
                    cfg.eta = self.eta;
                    cfg.seed = seed;
                    cfg.iters = self.passes;
                    cfg.epochs = self.passes.div_ceil(2);
                    cfg.total_blocks = Some(n.div_ceil(self.block_size) * self.passes);
                    match variant {
                        Variant::M(m) => cfg.m = m,
                        Variant::C(c) => cfg.c = c,
                        Variant::Plain => {}
                    }
                    out.push(RunSpec {
                        algorithm: alg,
                        config: variant.label(alg, self),
                        seed,
                        solver: cfg,
                    });
                }
            }
        }
        out
    }

    fn variants(&self, alg: Algorithm) -> Vec<Variant> {
        match alg {
            Algorithm::History => self.m_grid.iter().map(|&m| Variant::M(m)).collect(),
            a if a.uses_step_constant() => self.c_grid.iter().map(|&c| Variant::C(c)).collect(),
            _ => vec![Variant::Plain],
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Variant {
    M(usize),
    C(f64),
    Plain,
}

impl Variant {
    fn label(self, alg: Algorithm, spec: &ExperimentSpec) -> String {
        match self {
            Variant::M(m) => format!("m={m}"),
            Variant::C(c) => format!("c={}", CFormat(c)),
            Variant::Plain if alg.is_streaming() => format!("B={}", spec.block_size),
            Variant::Plain => format!("passes={}", spec.passes),
        }
    }
}

/// Prints powers of ten as `1e-3`, anything else verbatim.
struct CFormat(f64);

impl fmt::Display for CFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.0.log10().round();
        if (10f64.powf(e) - self.0).abs() <= 1e-12 * self.0 {
            write!(f, "1e{}", e as i32)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// One solver configuration on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    /// Short label of the varied parameter, e.g. `m=3` or `c=1e-2`.
    pub config: String,
    pub seed: u64,
    pub solver: SolverConfig,
}
