//! Built-in scenarios: every synthetic comparison panel at desk scale, the
//! inner-iteration sweep on the bundled sparse corpus, and a multi-pass run
//! against the batch solvers.

use historypca::metrics::MetricName;
use historypca::solvers::Algorithm;

use crate::spec::{DataSource, ExperimentSpec};

const SPARSE1500: &str = include_str!("../data/sparse1500.libsvm");

/// Bundled LIBSVM text by name.
pub fn bundled_data(name: &str) -> Option<&'static str> {
    match name {
        "sparse1500" => Some(SPARSE1500),
        _ => None,
    }
}

const SIGMAS: [f64; 3] = [0.1, 0.5, 0.8];

const STREAMING_BASELINES: [Algorithm; 5] = [
    Algorithm::History,
    Algorithm::BlockPower,
    Algorithm::Dbpca,
    Algorithm::Oja,
    Algorithm::OjaPp,
];

fn panel(name: String, d: usize, b: usize, k: usize, sigma: f64) -> ExperimentSpec {
    let mut s = ExperimentSpec::spiked(&name, d, k, sigma, b);
    s.algorithms = STREAMING_BASELINES.to_vec();
    s
}

fn panels(prefix: &str, d: usize, layout: &[(usize, usize)]) -> Vec<ExperimentSpec> {
    let mut out = Vec::new();
    let mut letter = b'a';
    for &(b, k) in layout {
        for sigma in SIGMAS {
            out.push(panel(format!("{prefix}-panel-{}", letter as char), d, b, k, sigma));
            letter += 1;
        }
    }
    out
}

pub fn builtin_presets() -> Vec<ExperimentSpec> {
    let mut out = panels("fig2", 100, &[(10, 1), (10, 5), (100, 1), (100, 5), (100, 10)]);
    out.extend(panels("fig3", 1000, &[(100, 1), (100, 5), (100, 10)]));

    out.push(ExperimentSpec {
        source: DataSource::Bundled {
            name: "sparse1500".into(),
        },
        n_samples: None,
        m_grid: vec![1, 3, 5, 7],
        seeds: 5,
        metric: MetricName::ExplainedVariance,
        ..ExperimentSpec::spiked("fig1-m-sweep", 2, 1, 0.0, 10)
    });

    let mut multi = ExperimentSpec::spiked("multipass", 50, 1, 0.1, 100);
    multi.algorithms = vec![
        Algorithm::History,
        Algorithm::Oja,
        Algorithm::PowerBatch,
        Algorithm::VrPca,
    ];
    multi.n_samples = Some(100_000);
    multi.passes = 5;
    multi.c_grid = vec![0.1, 1.0, 10.0];
    // 1/(r·sqrt(N)) with r = E‖x‖² = 1 + dσ² = 1.5
    multi.eta = Some(0.002);
    multi.seeds = 3;
    multi.eval_every = 100;
    multi.metric = MetricName::UnnormalizedError;
    out.push(multi);
    out
}

pub fn find_preset(name: &str) -> Option<ExperimentSpec> {
    builtin_presets().into_iter().find(|p| p.scenario == name)
}

/// One-line summary of the scenario parameters.
pub fn describe(spec: &ExperimentSpec) -> String {
    match &spec.source {
        DataSource::Spiked { d, sigma } => {
            let mut s = format!("d = {d}, B = {}, k = {}, sig = {sigma}", spec.block_size, spec.k);
            if spec.passes > 1 {
                s.push_str(&format!(", n = {}, {} passes", spec.n_samples.unwrap_or(0), spec.passes));
            }
            s
        }
        other => format!(
            "{} data, B = {}, k = {}, m in {:?}",
            other.kind(),
            spec.block_size,
            spec.k,
            spec.m_grid
        ),
    }
}
