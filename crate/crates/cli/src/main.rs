//! Command-line front end: capacity checks, matching enumeration, simulation
//! and figure reproduction.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qnet_sched::capacity::{cross_checked_verdict, exact_report, CapacityError};
use qnet_sched::matching::{enumerate_matchings, enumerate_service_vectors, MatchingError};
use qnet_sched::repro::{repro_scenario, ReproScenario, REPRO_SCENARIOS};
use qnet_sched::sim::{self, write_trace_csv, RunJob, RunOutput, SimConfig, SimError, DEFAULT_SLOTS};
use qnet_sched::{builtin_scenario, parse_spec, ArrivalSpec, NetworkSpec, PolicyKind, SpecError};

const AFTER_HELP: &str = "\
Built-in networks: switch3-symmetric, switch4-unstable, switch4-stable, net5-low, net5-high.
Reproduction scenarios:
  fig3   switch4-unstable, maxweight (growing)
  fig4   switch4-stable,   maxweight (stable)
  fig5   net5-low,         maxweight (stable)
  fig6   net5-low,         lqf       (stable)
  fig7a  net5-high,        maxweight (stable)
  fig7b  net5-high,        lqf       (growing)
Exit codes: 0 success, 1 usage or input error, 2 enumeration cap or solver failure.";

#[derive(Debug, Parser)]
#[command(name = "qnet-sched", version, about = "Scheduling and capacity analysis for entanglement-distribution networks", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a rate vector against the per-link and budget regions (JSON output).
    Check(NetworkArgs),
    /// List the matchings and count the service vectors (JSON output).
    Matchings(NetworkArgs),
    /// Simulate a network and write trace.csv and summary.json.
    Simulate(SimulateArgs),
    /// Re-run a figure scenario (fig3 ... fig7b, or all).
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct NetworkArgs {
    /// Built-in network name (same as --scenario).
    #[arg(value_name = "NAME", conflicts_with_all = ["spec", "scenario"])]
    name: Option<String>,
    /// Spec document (JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    spec: Option<PathBuf>,
    /// Built-in network name.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    /// Comma-separated arrival rates overriding the network's own.
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    rates: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[arg(long, default_value = "maxweight")]
    policy: PolicyKind,
    #[arg(long, default_value_t = DEFAULT_SLOTS)]
    slots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trace decimation; defaults to slots / 1000.
    #[arg(long, value_name = "N")]
    sample_every: Option<u64>,
    /// `||Q||` threshold for the drift probe; defaults to the 80th percentile.
    #[arg(long)]
    drift_threshold: Option<f64>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Print the run summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// fig3, fig4, fig5, fig6, fig7a, fig7b or all.
    scenario: String,
    /// Override the default slot count.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MatchingError> for CliError {
    fn from(e: MatchingError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<CapacityError> for CliError {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::Spec(s) => s.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Matching(m) => m.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check(args) => check(&args),
        Command::Matchings(args) => matchings(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Reproduce(args) => reproduce(&args),
    }
}

fn load_network(args: &NetworkArgs) -> Result<(NetworkSpec, ArrivalSpec), CliError> {
    let (spec, mut arrivals) = match (&args.spec, args.scenario.as_ref().or(args.name.as_ref())) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            parse_spec(&text)?
        }
        (None, Some(name)) => builtin_scenario(name)?,
        _ => {
            return Err(CliError::Input(
                "give a network with --spec PATH or --scenario NAME".into(),
            ))
        }
    };
    if let Some(rates) = &args.rates {
        spec.validate_rates(rates)?;
        arrivals.rates = rates.clone();
    }
    Ok((spec, arrivals))
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn print_json<T: Serialize>(value: &T) {
    emit(&serde_json::to_string_pretty(value).expect("serializable"));
}

fn check(args: &NetworkArgs) -> Result<(), CliError> {
    let (spec, arrivals) = load_network(args)?;
    let (_, exact) = cross_checked_verdict(&spec, &arrivals.rates)?;
    print_json(&exact_report(&exact, spec.num_classes()));
    Ok(())
}

#[derive(Serialize)]
struct MatchingsReport {
    num_classes: usize,
    matchings: Vec<String>,
    num_matchings: usize,
    num_service_vectors: usize,
}

fn matchings(args: &NetworkArgs) -> Result<(), CliError> {
    let (spec, _) = load_network(args)?;
    let m = spec.num_classes();
    let all = enumerate_matchings(&spec)?;
    let service = enumerate_service_vectors(&spec)?;
    print_json(&MatchingsReport {
        num_classes: m,
        num_matchings: all.len(),
        matchings: all.iter().map(|s| s.to_bit_string(m)).collect(),
        num_service_vectors: service.len(),
    });
    Ok(())
}

fn write_outputs(
    out: &RunOutput,
    num_classes: usize,
    dir: &Path,
    trace_name: &str,
    summary_name: &str,
) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let trace_path = dir.join(trace_name);
    let file = fs::File::create(&trace_path).map_err(|e| io_error(&trace_path, e))?;
    write_trace_csv(&out.trace, num_classes, std::io::BufWriter::new(file)).map_err(|e| io_error(&trace_path, e))?;
    let summary_path = dir.join(summary_name);
    fs::write(&summary_path, out.summary.to_json() + "\n").map_err(|e| io_error(&summary_path, e))?;
    Ok((trace_path, summary_path))
}

fn summary_line(label: &str, out: &RunOutput) -> String {
    let s = &out.summary;
    let drift = s.drift.mean.map_or("n/a".to_string(), |d| format!("{d:.4}"));
    format!(
        "{label}: policy={} slots={} seed={} mean_S={:.4} trend={} (heuristic) slope={:.3e} drift={drift}",
        s.policy,
        s.slots,
        s.seed,
        s.mean_s,
        serde_json::to_value(s.trend.verdict).unwrap().as_str().unwrap(),
        s.trend.slope,
    )
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (spec, arrivals) = load_network(&args.network)?;
    let mut config = SimConfig::new(args.policy, args.slots, args.seed);
    if let Some(k) = args.sample_every {
        config.sample_every = k;
    }
    config.drift_threshold = args.drift_threshold;
    let out = sim::run(&config, &spec, &arrivals)?;
    write_outputs(&out, spec.num_classes(), &args.out, "trace.csv", "summary.json")?;
    if args.json {
        emit(&out.summary.to_json());
    } else {
        emit(&summary_line("simulate", &out));
    }
    Ok(())
}

#[derive(Serialize)]
struct IndexEntry {
    name: &'static str,
    network: &'static str,
    policy: PolicyKind,
    seed: u64,
    slots: u64,
    expected: sim::TrendVerdict,
    observed: sim::TrendVerdict,
    matches_expected: bool,
    #[serde(rename = "mean_S")]
    mean_s: f64,
    trace: String,
    summary: String,
}

fn reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let scenarios: Vec<&'static ReproScenario> = if args.scenario == "all" {
        REPRO_SCENARIOS.iter().collect()
    } else {
        vec![repro_scenario(&args.scenario)?]
    };
    let jobs: Vec<RunJob> = scenarios
        .iter()
        .map(|s| {
            let (spec, arrivals) = s.network();
            RunJob {
                config: s.config(args.slots),
                spec,
                arrivals,
            }
        })
        .collect();
    let mut index = Vec::new();
    for ((scenario, job), result) in scenarios.iter().zip(&jobs).zip(sim::run_batch(&jobs)) {
        let out = result?;
        let (trace, summary) = write_outputs(
            &out,
            job.spec.num_classes(),
            &args.out,
            &format!("{}_trace.csv", scenario.name),
            &format!("{}_summary.json", scenario.name),
        )?;
        if args.json {
            emit(&out.summary.to_json());
        } else {
            emit(&summary_line(scenario.name, &out));
        }
        index.push(IndexEntry {
            name: scenario.name,
            network: scenario.network,
            policy: scenario.policy,
            seed: scenario.seed,
            slots: job.config.slots,
            expected: scenario.expected,
            observed: out.summary.trend.verdict,
            matches_expected: out.summary.trend.verdict == scenario.expected,
            mean_s: out.summary.mean_s,
            trace: file_name(&trace),
            summary: file_name(&summary),
        });
    }
    if args.scenario == "all" {
        let path = args.out.join("index.json");
        let text = serde_json::to_string_pretty(&index).expect("serializable") + "\n";
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}
