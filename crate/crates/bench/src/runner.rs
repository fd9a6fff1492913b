//! Executes an [`ExperimentSpec`]: one fresh stream per run, evaluation at a
//! fixed cadence, results collected in run order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use historypca::datagen::{make_spiked_model, true_subspace, RngState, SpikedModel};
use historypca::ingest::{
    BlockStream, CountingSource, Dataset, DocwordSource, LibsvmSource, RowSource, SyntheticSource,
    Take, TextInput,
};
use historypca::linalg::{gram_accumulate, DenseMatrix};
use historypca::metrics::{explained_variance, principal_angle_distance, unnormalized_error, MetricName};
use historypca::solvers::{
    build_streaming_solver, exact_eig_oracle, power_method_batch, power_method_batch_traced,
    vr_pca_traced, Algorithm, SubspaceEstimate,
};

use historypca::solvers::oracle::ORACLE_MAX_DIM;

use crate::error::{BenchError, Result};
use crate::presets::bundled_data;
use crate::spec::{DataSource, ExperimentSpec, RunSpec};
use crate::trace::{self, TraceRecord, DIVERGED};

/// Power iterations used to find reference eigenpairs of file data.
const REFERENCE_ITERS: usize = 500;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Concurrent runs; each run is single-threaded.
    pub jobs: usize,
    /// Fill the `ms` column with solver wall-clock time. Off by default so
    /// that repeated invocations produce identical files.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timing: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: RunSpec,
    pub records: Vec<TraceRecord>,
    pub diverged: bool,
    /// Rows pulled from the source (streaming solvers only).
    pub rows_read: u64,
    /// Rows the source holds per pass.
    pub rows_per_pass: u64,
    pub final_estimate: Option<SubspaceEstimate>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn records(&self) -> Vec<TraceRecord> {
        self.runs.iter().flat_map(|r| r.records.iter().cloned()).collect()
    }

    pub fn diverged_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.diverged).count()
    }
}

/// What estimates are scored against.
enum Target {
    Subspace(DenseMatrix),
    Explained(Dataset),
    Unnormalized { data: Dataset, lambda_max: f64 },
}

impl Target {
    fn score(&self, q: &DenseMatrix) -> Result<f64> {
        Ok(match self {
            Target::Subspace(u) => principal_angle_distance(u, q)?,
            Target::Explained(data) => explained_variance(q, data)?,
            Target::Unnormalized { data, lambda_max } => unnormalized_error(&q.column(0), data, *lambda_max)?,
        })
    }
}

/// Everything shared by the runs of one seed.
struct SeedContext {
    model: Option<SpikedModel>,
    /// Materialized training data, when a batch solver or the metric needs it.
    train: Option<Dataset>,
    target: Arc<Target>,
}

/// File-backed data, loaded once per experiment.
struct FileData {
    input: TextInput,
    format: DataSource,
    data: Dataset,
    target: Arc<Target>,
}

fn file_input(source: &DataSource) -> Option<TextInput> {
    match source {
        DataSource::Libsvm { path, .. } | DataSource::Docword { path } => Some(TextInput::Path(path.clone())),
        DataSource::Bundled { name } => bundled_data(name).map(|s| TextInput::Bytes(Arc::from(s.as_bytes()))),
        DataSource::Spiked { .. } => None,
    }
}

fn open_file_source(format: &DataSource, input: &TextInput, dim: Option<usize>) -> Result<Box<dyn RowSource>> {
    Ok(match format {
        DataSource::Docword { .. } => Box::new(DocwordSource::open(input.clone())?),
        DataSource::Libsvm { dim: d, .. } => Box::new(LibsvmSource::open(input.clone(), d.or(dim))?),
        _ => Box::new(LibsvmSource::open(input.clone(), dim)?),
    })
}

/// Largest eigenvalue of `XᵀX`: exact for small `d`, power method otherwise.
pub fn top_eigenvalue(data: &Dataset) -> Result<f64> {
    let d = data.dim();
    if d <= ORACLE_MAX_DIM {
        let mut g = DenseMatrix::zeros(d, d);
        gram_accumulate(data.views(), &DenseMatrix::identity(d), 1.0, &mut g);
        // Symmetrize away rounding before the oracle's symmetry check.
        let gt = g.transpose();
        g.add_scaled(1.0, &gt)?;
        g.scale_in_place(0.5);
        return Ok(exact_eig_oracle(&g)?.eigenvalues[0]);
    }
    let est = power_method_batch(data, 1, REFERENCE_ITERS, &mut RngState::seed_from(0))?;
    let w = est.q.column(0);
    Ok(data.views().map(|r| r.dot(&w).powi(2)).sum())
}

fn build_target(metric: MetricName, k: usize, data: &Dataset) -> Result<Target> {
    Ok(match metric {
        MetricName::PrincipalAngle => {
            let est = power_method_batch(data, k, REFERENCE_ITERS, &mut RngState::seed_from(0))?;
            Target::Subspace(est.q)
        }
        MetricName::ExplainedVariance => Target::Explained(data.clone()),
        MetricName::UnnormalizedError => Target::Unnormalized {
            lambda_max: top_eigenvalue(data)?,
            data: data.clone(),
        },
    })
}

fn load_file(spec: &ExperimentSpec) -> Result<FileData> {
    let input = file_input(&spec.source).expect("file source");
    let mut src = open_file_source(&spec.source, &input, None)?;
    let limit = spec.n_samples.unwrap_or(usize::MAX);
    let data = Dataset::collect(src.as_mut(), limit)?;
    if data.is_empty() {
        return Err(BenchError::Invalid(format!("{}: data source is empty", spec.scenario)));
    }
    if spec.k >= data.dim() {
        return Err(BenchError::Invalid(format!(
            "{}: need k < d, got k={} d={}",
            spec.scenario,
            spec.k,
            data.dim()
        )));
    }
    let target = Arc::new(build_target(spec.metric, spec.k, &data)?);
    Ok(FileData {
        input,
        format: spec.source.clone(),
        data,
        target,
    })
}

fn seed_context(spec: &ExperimentSpec, seed: u64, d: usize, sigma: f64) -> Result<SeedContext> {
    let model = make_spiked_model(d, spec.k, sigma, seed)?;
    let n = spec.n_samples.expect("validated");
    let needs_train = spec.metric == MetricName::UnnormalizedError || spec.algorithms.iter().any(|a| !a.is_streaming());
    let train = needs_train.then(|| Dataset::sample_spiked(&model, n));
    let target = match spec.metric {
        MetricName::PrincipalAngle => Target::Subspace(true_subspace(&model)),
        MetricName::ExplainedVariance => {
            Target::Explained(Dataset::sample_spiked_with(&model, spec.eval_samples, model.eval_rng()))
        }
        MetricName::UnnormalizedError => {
            let data = train.clone().expect("materialized above");
            Target::Unnormalized {
                lambda_max: top_eigenvalue(&data)?,
                data,
            }
        }
    };
    Ok(SeedContext {
        model: Some(model),
        train,
        target: Arc::new(target),
    })
}

struct Recorder<'a> {
    spec: &'a ExperimentSpec,
    run: &'a RunSpec,
    records: Vec<TraceRecord>,
    timing: bool,
}

impl Recorder<'_> {
    fn push(&mut self, samples_seen: u64, metric: &str, value: f64, elapsed: Duration) {
        if self.records.last().is_some_and(|r| r.samples_seen == samples_seen && r.metric == metric) {
            return;
        }
        let ms = if self.timing {
            (elapsed.as_secs_f64() * 1e6).round() / 1e3
        } else {
            0.0
        };
        self.records.push(TraceRecord {
            scenario: self.spec.scenario.clone(),
            algorithm: self.run.algorithm.to_string(),
            config: self.run.config.clone(),
            seed: self.run.seed,
            samples_seen,
            metric: metric.to_string(),
            value,
            ms,
        });
    }
}

fn run_streaming(
    spec: &ExperimentSpec,
    run: &RunSpec,
    source: Box<dyn RowSource>,
    target: &Target,
    timing: bool,
) -> Result<RunResult> {
    let (counted, counter) = CountingSource::new(source);
    let mut stream = BlockStream::new(Box::new(counted), spec.block_size)?;
    let mut solver = build_streaming_solver(&run.solver)?;
    let mut rec = Recorder {
        spec,
        run,
        records: Vec::new(),
        timing,
    };
    let metric = spec.metric.as_str();
    let mut elapsed = Duration::ZERO;
    let mut blocks = 0usize;
    let mut rows_per_pass = 0;
    for pass in 0..spec.passes {
        if pass > 0 {
            stream.rewind()?;
        }
        let start_rows = counter.rows();
        loop {
            let t = Instant::now();
            let n = solver.step(&mut stream)?;
            elapsed += t.elapsed();
            if n == 0 || solver.diverged() {
                break;
            }
            blocks += 1;
            if blocks.is_multiple_of(spec.eval_every) {
                let v = target.score(&solver.estimate().q)?;
                rec.push(solver.samples_seen(), metric, v, elapsed);
            }
        }
        rows_per_pass = counter.rows() - start_rows;
        if solver.diverged() {
            break;
        }
    }
    let diverged = solver.diverged();
    if diverged {
        log::warn!("{} {} seed {}: diverged", run.algorithm, run.config, run.seed);
        rec.push(solver.samples_seen(), DIVERGED, f64::NAN, elapsed);
    } else if solver.samples_seen() > 0 {
        let v = target.score(&solver.estimate().q)?;
        rec.push(solver.samples_seen(), metric, v, elapsed);
    }
    Ok(RunResult {
        run: run.clone(),
        records: rec.records,
        diverged,
        rows_read: counter.rows(),
        rows_per_pass,
        final_estimate: (!diverged).then(|| solver.estimate().clone()),
    })
}

fn run_batch(spec: &ExperimentSpec, run: &RunSpec, data: &Dataset, target: &Target, timing: bool) -> Result<RunResult> {
    let mut rec = Recorder {
        spec,
        run,
        records: Vec::new(),
        timing,
    };
    let metric = spec.metric.as_str();
    let n = data.n_samples() as u64;
    let mut rng = run.solver.solver_rng();
    let mut score_err = None;
    let start = Instant::now();
    let mut eval_time = Duration::ZERO;
    let outcome = match run.algorithm {
        Algorithm::PowerBatch => power_method_batch_traced(data, spec.k, spec.passes, &mut rng, &mut |it, est| {
            let t = Instant::now();
            match target.score(&est.q) {
                Ok(v) => rec.push(it as u64 * n, metric, v, start.elapsed() - eval_time),
                Err(e) => score_err = Some(e),
            }
            eval_time += t.elapsed();
        }),
        Algorithm::VrPca => vr_pca_traced(data, run.solver.epochs, run.solver.eta, &mut rng, &mut |pass, w| {
            if pass > spec.passes {
                return;
            }
            let t = Instant::now();
            let q = DenseMatrix::from_columns(&[w.to_vec()]).expect("one column");
            match target.score(&q) {
                Ok(v) => rec.push(pass as u64 * n, metric, v, start.elapsed() - eval_time),
                Err(e) => score_err = Some(e),
            }
            eval_time += t.elapsed();
        }),
        other => unreachable!("{other} is streaming"),
    };
    if let Some(e) = score_err {
        return Err(e);
    }
    let (diverged, final_estimate) = match outcome {
        Ok(est) => (false, Some(est)),
        Err(historypca::Error::Diverged) => (true, None),
        Err(e) => return Err(e.into()),
    };
    if diverged {
        let seen = rec.records.last().map_or(0, |r| r.samples_seen);
        rec.push(seen, DIVERGED, f64::NAN, start.elapsed());
    }
    Ok(RunResult {
        run: run.clone(),
        records: rec.records,
        diverged,
        rows_read: 0,
        rows_per_pass: n,
        final_estimate,
    })
}

/// Runs every (configuration, seed) pair of `spec`, up to `opts.jobs` at a
/// time. Results come back in expansion order regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| match &spec.source {
        DataSource::Spiked { d, sigma } => run_synthetic(spec, *d, *sigma, opts),
        _ => run_file(spec, opts),
    })
}

fn run_synthetic(spec: &ExperimentSpec, d: usize, sigma: f64, opts: &RunOptions) -> Result<ExperimentResult> {
    let n = spec.n_samples.expect("validated");
    let seeds = spec.seed_list();
    let contexts: Vec<SeedContext> = seeds
        .par_iter()
        .map(|&s| seed_context(spec, s, d, sigma))
        .collect::<Result<_>>()?;
    let runs = spec.runs_for_dim(d, n);
    let results = runs
        .par_iter()
        .map(|run| {
            let ctx = &contexts[seeds.iter().position(|&s| s == run.seed).expect("seed in list")];
            if run.algorithm.is_streaming() {
                let model = ctx.model.clone().expect("synthetic");
                let source = Box::new(Take::new(SyntheticSource::new(model), n));
                run_streaming(spec, run, source, &ctx.target, opts.timing)
            } else {
                let data = ctx.train.as_ref().expect("materialized for batch solvers");
                run_batch(spec, run, data, &ctx.target, opts.timing)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        runs: results,
    })
}

fn run_file(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentResult> {
    let file = load_file(spec)?;
    let d = file.data.dim();
    let n = file.data.n_samples();
    let runs = spec.runs_for_dim(d, n);
    for r in &runs {
        r.solver.validate()?;
    }
    let results = runs
        .par_iter()
        .map(|run| {
            if run.algorithm.is_streaming() {
                let src = open_file_source(&file.format, &file.input, Some(d))?;
                let source: Box<dyn RowSource> = Box::new(Take::new(src, n));
                run_streaming(spec, run, source, &file.target, opts.timing)
            } else {
                run_batch(spec, run, &file.data, &file.target, opts.timing)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        runs: results,
    })
}

/// Files written for one experiment.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Writes `<scenario>.csv`, `<scenario>.summary.csv`, the resolved config
/// `<scenario>.config.toml` and, if asked, `<scenario>.svg` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, svg: bool) -> Result<Outputs> {
    fs::create_dir_all(dir)?;
    let spec = &result.spec;
    let records = result.records();
    let csv = dir.join(format!("{}.csv", spec.scenario));
    trace::write_csv(&records, fs::File::create(&csv)?)?;

    let summary = trace::summarize(&records, spec.top_c);
    let summary_path = dir.join(format!("{}.summary.csv", spec.scenario));
    trace::write_summary_csv(&spec.scenario, &summary, fs::File::create(&summary_path)?)?;

    let config = dir.join(format!("{}.config.toml", spec.scenario));
    fs::write(&config, crate::config::to_toml(spec)?)?;

    let svg = if svg {
        let path = dir.join(format!("{}.svg", spec.scenario));
        let opts = crate::svg::PlotOptions {
            title: format!("{} ({})", spec.scenario, crate::presets::describe(spec)),
            y_label: spec.metric.as_str().to_string(),
            log_y: true,
        };
        fs::write(&path, crate::svg::render_summary(&summary, &opts))?;
        Some(path)
    } else {
        None
    };
    Ok(Outputs {
        csv,
        summary: summary_path,
        config,
        svg,
    })
}
