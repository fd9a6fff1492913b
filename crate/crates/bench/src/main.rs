use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use historypca_bench::presets::{builtin_presets, describe};
use historypca_bench::runner::{run_experiment, write_outputs, RunOptions};
use historypca_bench::svg::{render_summary, PlotOptions};
use historypca_bench::{config, trace, BenchError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "bench", version, about = "Run streaming PCA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a TOML config and write CSV traces.
    Run(RunArgs),
    /// List built-in presets.
    ListPresets,
    /// Render a trace CSV to SVG next to it.
    Render {
        csv: PathBuf,
        /// Output path (defaults to the CSV path with an .svg extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Concurrent runs (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Also write an SVG of the median traces.
    #[arg(long)]
    svg: bool,
    /// Record solver wall-clock time in the `ms` column.
    #[arg(long)]
    timing: bool,
    /// Exit 0 even if some runs diverged.
    #[arg(long)]
    allow_diverged: bool,
    /// Override a config key, e.g. `--set seeds=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let text = match (&args.preset, &args.config) {
        (Some(p), _) => format!("preset = {}\n", toml_string(p)),
        (None, Some(path)) => fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("reading {}: {e}", path.display())))?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let mut overrides = args.overrides.clone();
    if let Some(s) = args.seed_base {
        overrides.push(format!("seed_base={s}"));
    }
    let spec = config::load_spec(&text, &overrides)?;
    let mut opts = RunOptions {
        timing: args.timing,
        ..RunOptions::default()
    };
    if let Some(j) = args.jobs {
        opts.jobs = j;
    }
    log::info!("{}: {}", spec.scenario, describe(&spec));
    let result = run_experiment(&spec, &opts)?;
    let out = write_outputs(&result, &args.out, args.svg)?;
    println!("{}", out.csv.display());
    let diverged = result.diverged_runs();
    if diverged > 0 {
        eprintln!("{diverged} run(s) diverged");
        if !args.allow_diverged {
            return Ok(ExitCode::from(EXIT_DIVERGED));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn render(csv: &Path, out: Option<PathBuf>) -> anyhow::Result<()> {
    let records = trace::read_csv(fs::File::open(csv).with_context(|| format!("opening {}", csv.display()))?)?;
    let scenario = records.first().map_or_else(String::new, |r| r.scenario.clone());
    let metric = records
        .iter()
        .find(|r| r.metric != trace::DIVERGED)
        .map_or_else(String::new, |r| r.metric.clone());
    let summary = trace::summarize(&records, 3);
    let svg = render_summary(
        &summary,
        &PlotOptions {
            title: scenario,
            y_label: metric,
            log_y: true,
        },
    );
    let path = out.unwrap_or_else(|| csv.with_extension("svg"));
    fs::write(&path, svg)?;
    println!("{}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ListPresets => {
            for p in builtin_presets() {
                println!("{:<16} {}", p.scenario, describe(&p));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { csv, out } => render(&csv, out).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.downcast_ref::<BenchError>().is_some_and(BenchError::is_validation);
            ExitCode::from(if validation { EXIT_VALIDATION } else { 1 })
        }
    }
}
