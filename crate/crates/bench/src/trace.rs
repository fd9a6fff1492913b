//! Trace records, their CSV form, and per-configuration summaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use historypca::metrics::MetricName;

use crate::error::Result;

pub const CSV_HEADER: &str = "scenario,algorithm,config,seed,samples_seen,metric,value,ms";

/// Metric name of the terminal record written for a diverged run.
pub const DIVERGED: &str = "diverged";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub scenario: String,
    pub algorithm: String,
    pub config: String,
    pub seed: u64,
    pub samples_seen: u64,
    pub metric: String,
    pub value: f64,
    /// Solver wall-clock time so far; zero unless timing was requested.
    pub ms: f64,
}

pub fn write_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(crate::BenchError::Invalid(format!(
            "unexpected trace header {:?}",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<TraceRecord>, _>>()?)
}

/// Median and quartiles across seeds at one sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPoint {
    pub samples_seen: u64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub algorithm: String,
    pub config: String,
    pub metric: String,
    pub points: Vec<SummaryPoint>,
    /// Median over seeds of each seed's last value.
    pub final_median: f64,
    /// Seeds whose run ended with a divergence record.
    pub diverged: usize,
    /// 1 for the best configuration of a tuned solver, 0 if untuned.
    pub rank: usize,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

fn higher_is_better(metric: &str) -> bool {
    MetricName::parse(metric) == Some(MetricName::ExplainedVariance)
}

/// Groups records by (algorithm, config, metric) and reduces over seeds.
/// Tuned solvers (those with `c=` configs) keep only their `top` best
/// configurations by final median, ranked from 1.
pub fn summarize(records: &[TraceRecord], top: usize) -> Vec<SeriesSummary> {
    type Key = (String, String, String);
    let mut groups: BTreeMap<Key, BTreeMap<u64, Vec<(u64, f64)>>> = BTreeMap::new();
    let mut diverged: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in records {
        if r.metric == DIVERGED {
            *diverged.entry((r.algorithm.clone(), r.config.clone())).or_default() += 1;
            continue;
        }
        groups
            .entry((r.algorithm.clone(), r.config.clone(), r.metric.clone()))
            .or_default()
            .entry(r.seed)
            .or_default()
            .push((r.samples_seen, r.value));
    }

    let mut all = Vec::new();
    for ((algorithm, config, metric), seeds) in groups {
        let mut by_count: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut finals = Vec::new();
        for series in seeds.values() {
            for &(n, v) in series {
                by_count.entry(n).or_default().push(v);
            }
            if let Some(&(_, v)) = series.iter().max_by_key(|p| p.0) {
                finals.push(v);
            }
        }
        let points = by_count
            .into_iter()
            .map(|(n, mut v)| {
                v.sort_by(f64::total_cmp);
                SummaryPoint {
                    samples_seen: n,
                    median: quantile(&v, 0.5),
                    q25: quantile(&v, 0.25),
                    q75: quantile(&v, 0.75),
                    n_seeds: v.len(),
                }
            })
            .collect();
        let d = diverged
            .get(&(algorithm.clone(), config.clone()))
            .copied()
            .unwrap_or(0);
        all.push(SeriesSummary {
            algorithm,
            config,
            final_median: median(&finals),
            metric,
            points,
            diverged: d,
            rank: 0,
        });
    }

    let mut tuned: BTreeMap<(String, String), Vec<SeriesSummary>> = BTreeMap::new();
    let mut out = Vec::new();
    for s in all {
        if s.config.starts_with("c=") {
            tuned
                .entry((s.algorithm.clone(), s.metric.clone()))
                .or_default()
                .push(s);
        } else {
            out.push(s);
        }
    }
    for ((_, metric), mut group) in tuned {
        let better_high = higher_is_better(&metric);
        // Diverged and NaN configurations sort last.
        group.sort_by(|a, b| {
            let key = |s: &SeriesSummary| {
                let v = if better_high { -s.final_median } else { s.final_median };
                if s.diverged > 0 || v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            };
            key(a).total_cmp(&key(b))
        });
        for (i, mut s) in group.into_iter().take(top).enumerate() {
            s.rank = i + 1;
            out.push(s);
        }
    }
    out.sort_by(|a, b| {
        (&a.algorithm, a.rank, &a.config, &a.metric).cmp(&(&b.algorithm, b.rank, &b.config, &b.metric))
    });
    out
}

pub const SUMMARY_HEADER: &str = "scenario,algorithm,config,rank,samples_seen,metric,median,q25,q75,n_seeds";

pub fn write_summary_csv<W: Write>(scenario: &str, summary: &[SeriesSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for s in summary {
        for p in &s.points {
            w.write_record([
                scenario.to_string(),
                s.algorithm.clone(),
                s.config.clone(),
                s.rank.to_string(),
                p.samples_seen.to_string(),
                s.metric.clone(),
                p.median.to_string(),
                p.q25.to_string(),
                p.q75.to_string(),
                p.n_seeds.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
