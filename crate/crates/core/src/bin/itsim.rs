use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use interleaved_training::channel::PathCount;
use interleaved_training::harness::{
    self, analytic_csv, comparison_csv, render, summary_csv, ExperimentSpec, Format, HarnessError, Mode, Scheme,
};
use interleaved_training::mu::AssignmentMethod;

/// Interleaved beam training simulator.
#[derive(Parser)]
#[command(name = "itsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment described by a spec file.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate the closed-form results at every point of a spec file.
    Analytic {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate and compare against the closed forms.
    Compare {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build a spec from grid flags and simulate it.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

/// Lists are `a,b,c` or `start:stop:step` (inclusive).
#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long, value_parser = parse_method)]
    method: Option<AssignmentMethod>,
    #[arg(long = "n-t", value_parser = parse_list::<usize>)]
    n_t: Vec<Vec<usize>>,
    /// Integers are fixed counts, fractions scale with N_t.
    #[arg(long, value_parser = parse_paths)]
    paths: Vec<Vec<PathCount>>,
    #[arg(long = "n-rf", value_parser = parse_list::<usize>)]
    n_rf: Vec<Vec<usize>>,
    #[arg(long, value_parser = parse_list::<usize>)]
    users: Vec<Vec<usize>>,
    #[arg(long, value_parser = parse_list::<f64>)]
    alpha: Vec<Vec<f64>>,
    #[arg(long = "power-db", value_parser = parse_list::<f64>)]
    power_db: Vec<Vec<f64>>,
    #[arg(long = "rate-th", value_parser = parse_list::<f64>)]
    rate_th: Vec<Vec<f64>>,
    #[arg(long = "l-trained", value_parser = parse_list::<usize>)]
    l_trained: Vec<Vec<usize>>,
    #[arg(long)]
    exhaustive_cap: Option<u64>,
    #[command(flatten)]
    run: RunArgs,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<AssignmentMethod, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_list<T>(s: &str) -> Result<Vec<T>, String>
where
    T: std::str::FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + Default,
    T::Err: std::fmt::Display,
{
    let one = |v: &str| v.trim().parse::<T>().map_err(|e| format!("{v:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (one(start)?, one(stop)?, one(step)?);
            if step.partial_cmp(&T::default()) != Some(std::cmp::Ordering::Greater) {
                return Err("range step must be positive".into());
            }
            let mut v = Vec::new();
            let mut x = start;
            while x <= stop {
                v.push(x);
                x = x + step;
            }
            Ok(v)
        }
        [_] => s.split(',').map(one).collect(),
        _ => Err(format!("{s:?}: expected a,b,c or start:stop:step")),
    }
}

fn parse_paths(s: &str) -> Result<Vec<PathCount>, String> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            if v.contains('.') {
                v.parse().map(PathCount::LinearInNt).map_err(|e| format!("{v:?}: {e}"))
            } else {
                v.parse().map(PathCount::Fixed).map_err(|e| format!("{v:?}: {e}"))
            }
        })
        .collect()
}

fn apply(spec: &mut ExperimentSpec, run: &RunArgs) {
    if let Some(s) = run.seed {
        spec.seed = s;
    }
    if let Some(t) = run.trials {
        spec.trials = t;
    }
    if run.threads.is_some() {
        spec.threads = run.threads;
    }
}

fn write(text: String, out: &OutArgs) -> Result<(), HarnessError> {
    match &out.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn simulate(spec: &ExperimentSpec, out: &OutArgs) -> Result<(), HarnessError> {
    let summary = harness::run_experiment(spec)?;
    for (row, secs) in summary.rows.iter().zip(&summary.wall_time) {
        eprintln!(
            "N_t={} L={} N_RF={} U={}: {:.2}s",
            row.n_t, row.l, row.n_rf, row.users, secs
        );
    }
    match &out.out {
        Some(p) => harness::emit(&summary, out.format, p),
        None => write(render(&summary.rows, out.format, summary_csv)?, out),
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate { spec, run } => {
            let mut s = ExperimentSpec::load(&spec)?;
            apply(&mut s, &run);
            simulate(&s, &run.out)
        }
        Command::Analytic { spec, out } => {
            let rows = harness::analytic_table(&ExperimentSpec::load(&spec)?)?;
            write(render(&rows, out.format, analytic_csv)?, &out)
        }
        Command::Compare { spec, run } => {
            let mut s = ExperimentSpec::load(&spec)?;
            apply(&mut s, &run);
            let rows = harness::compare_report(&s)?;
            write(render(&rows, run.out.format, comparison_csv)?, &run.out)
        }
        Command::Sweep(a) => {
            let mut s = ExperimentSpec {
                mode: a.mode,
                scheme: a.scheme,
                method: a.method,
                n_t: a.n_t.concat(),
                paths: a.paths.concat(),
                n_rf: a.n_rf.concat(),
                users: if a.users.is_empty() { vec![1] } else { a.users.concat() },
                alpha: a.alpha.concat(),
                power_db: a.power_db.concat(),
                rate_th: a.rate_th.concat(),
                l_trained: a.l_trained.concat(),
                trials: 10_000,
                seed: 1,
                threads: None,
                exhaustive_cap: a.exhaustive_cap,
            };
            apply(&mut s, &a.run);
            simulate(&s, &a.run.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
