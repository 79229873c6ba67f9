use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use failure_region::geometry::{InputDomain, Point};
use failure_region::harness::{
    read_records_csv, render_svg, run_setting, summarize, sweep, write_summary_csv,
    ExperimentSetting, Matrix, RunOptions, RunRecord, SweepOptions,
};
use failure_region::measure::{hull_volume, inequality_report};
use failure_region::oracles::{CommandTemplate, ExternalOracle, FailConvention, RegionShape};
use failure_region::search::{
    find_first_failure, run_strategy, Alg1Mode, OrientationPolicy, SearchConfig, Strategy,
};

const EXIT_PARTIAL: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "fregion", version, about = "Boundary-search failure-region identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one setting and print its records as JSON.
    Simulate(SimulateArgs),
    /// Run a parameter matrix, writing records.csv, summary.csv and runs/*.json.
    Sweep(SweepArgs),
    /// Per-cell means of a records.csv.
    Summarize(SummarizeArgs),
    /// Draw a JSON run record as SVG.
    Render(RenderArgs),
    /// Boundary search against an external command used as the test oracle.
    ProbeExternal(ProbeArgs),
}

#[derive(Args)]
struct SearchFlags {
    #[arg(long, default_value = "dsb")]
    strategy: Strategy,
    /// Boundary inputs to harvest.
    #[arg(short = 'N', long = "boundary-count", default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    lambda: u32,
    /// Extension length.
    #[arg(short = 'L', long = "extension-length", default_value_t = 1.0)]
    extension_length: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ray search mode: bracketing or literal.
    #[arg(long, default_value = "bracketing")]
    mode: Alg1Mode,
    /// FSB orientation policy: all-per-source or one-per-source.
    #[arg(long, default_value = "all-per-source")]
    policy: OrientationPolicy,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "dim", default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.001)]
    theta: f64,
    #[arg(long, default_value = "rectangle")]
    shape: RegionShape,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Rotation angle in degrees.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[command(flatten)]
    search: SearchFlags,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    #[arg(long, default_value_t = RunOptions::default().mc_samples)]
    mc_samples: usize,
    /// Record wall_time_ms as 0 for byte-reproducible output.
    #[arg(long)]
    no_timing: bool,
    /// Write the JSON records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Matrix file (TOML).
    matrix: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "sweep-out")]
    out: PathBuf,
    /// Override the matrix base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the matrix repetitions.
    #[arg(long)]
    reps: Option<u32>,
    /// Override the matrix ray search mode.
    #[arg(long)]
    mode: Option<Alg1Mode>,
    #[arg(long)]
    no_timing: bool,
    /// Skip the per-run JSON files.
    #[arg(long)]
    no_json: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    records: PathBuf,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    record: PathBuf,
    /// Two 1-based axes, e.g. `1,3`.
    #[arg(long, default_value = "1,2")]
    axes: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long = "dim")]
    d: usize,
    /// Command line with `{x1}`..`{xd}` placeholders.
    #[arg(long)]
    command: String,
    /// How a failure is signalled: exit, stdout or either.
    #[arg(long, default_value = "exit")]
    convention: FailConvention,
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Comma-separated lower bounds (default all 0).
    #[arg(long)]
    lower: Option<String>,
    /// Comma-separated upper bounds (default all 1).
    #[arg(long)]
    upper: Option<String>,
    #[command(flatten)]
    search: SearchFlags,
    #[arg(long, default_value_t = RunOptions::default().finder_budget)]
    finder_budget: u64,
    #[arg(long, default_value_t = RunOptions::default().probe_budget)]
    probe_budget: u64,
    #[arg(long, default_value_t = RunOptions::default().mc_samples)]
    mc_samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(anyhow::Error),
    Partial(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Partial(e)
    }
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let setting = ExperimentSetting {
        d: args.d,
        theta: args.theta,
        shape: args.shape,
        delta: args.delta,
        gamma: args.gamma,
        strategy: args.search.strategy,
        n: args.search.n,
        lambda: args.search.lambda,
        extension_length: args.search.extension_length,
        repetitions: args.reps,
        base_seed: args.search.seed,
    };
    setting.validate().map_err(config)?;
    setting.check_feasible().map_err(config)?;
    let options = RunOptions {
        alg1_mode: args.search.mode,
        orientation_policy: args.search.policy,
        mc_samples: args.mc_samples,
        record_timing: !args.no_timing,
        ..RunOptions::default()
    };
    let records = run_setting(&setting, &options);
    let mut text = serde_json::to_string_pretty(&records).map_err(anyhow::Error::from)?;
    text.push('\n');
    emit(args.out.as_ref(), &text)?;
    for r in &records {
        eprintln!(
            "rep {}: status={} s_ratio={:.4} probes={} wall_time_ms={:.3}",
            r.rep, r.status, r.s_ratio, r.probes, r.wall_time_ms
        );
    }
    if records.iter().any(|r| !r.status.is_success()) {
        return Err(Failure::Partial(anyhow!("some repetitions failed")));
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut matrix = Matrix::load(&args.matrix).map_err(config)?;
    if let Some(seed) = args.seed {
        matrix.base_seed = seed;
    }
    if let Some(reps) = args.reps {
        matrix.repetitions = reps;
    }
    if let Some(mode) = args.mode {
        matrix.alg1_mode = mode;
    }
    if args.jobs == 0 {
        return Err(config(anyhow!("--jobs must be >= 1")));
    }
    let options = SweepOptions {
        jobs: args.jobs,
        out_dir: args.out.clone(),
        write_json: !args.no_json,
        record_timing: !args.no_timing,
    };
    let report = sweep(&matrix, &options).map_err(|e| match e {
        failure_region::harness::SweepError::Config(_) => config(e),
        other => Failure::Partial(other.into()),
    })?;
    eprintln!(
        "{} rows, {} failed runs, {} infeasible cells skipped -> {}",
        report.rows,
        report.failed_runs,
        report.skipped.len(),
        args.out.display()
    );
    if report.is_partial() {
        return Err(Failure::Partial(anyhow!("{} runs failed", report.failed_runs)));
    }
    Ok(())
}

fn run_summarize(args: SummarizeArgs) -> Result<(), Failure> {
    let rows = read_records_csv(&args.records).map_err(config)?;
    let cells = summarize(&rows);
    println!(
        "{:<56} {:>5} {:>10} {:>10} {:>14} {:>12}",
        "setting_id", "runs", "s_ratio", "sd", "time_ms", "iterations"
    );
    for c in &cells {
        println!(
            "{:<56} {:>5} {:>10.4} {:>10.4} {:>14.3} {:>12.1}",
            c.setting_id, c.measured_runs, c.mean_s_ratio, c.sd_s_ratio, c.mean_wall_time_ms, c.mean_iterations
        );
    }
    if let Some(out) = &args.out {
        write_summary_csv(out, &cells).map_err(anyhow::Error::from)?;
    }
    Ok(())
}

fn parse_axes(text: &str) -> anyhow::Result<(usize, usize)> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad axes `{text}`"))?;
    match parts.as_slice() {
        [a, b] if *a >= 1 && *b >= 1 => Ok((a - 1, b - 1)),
        _ => Err(anyhow!("axes must be two 1-based indices, got `{text}`")),
    }
}

fn run_render(args: RenderArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.record)
        .with_context(|| format!("reading {}", args.record.display()))
        .map_err(config)?;
    let record: RunRecord = serde_json::from_str(&text).map_err(config)?;
    let axes = parse_axes(&args.axes).map_err(config)?;
    let svg = render_svg(&record, axes).map_err(config)?;
    emit(args.out.as_ref(), &svg)?;
    Ok(())
}

fn parse_bounds(text: Option<&str>, d: usize, fill: f64) -> anyhow::Result<Vec<f64>> {
    match text {
        None => Ok(vec![fill; d]),
        Some(t) => {
            let v: Vec<f64> = t
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad bounds `{t}`"))?;
            if v.len() != d {
                return Err(anyhow!("expected {d} bounds, got {}", v.len()));
            }
            Ok(v)
        }
    }
}

fn probe_external(args: ProbeArgs) -> Result<(), Failure> {
    let lower = parse_bounds(args.lower.as_deref(), args.d, 0.0).map_err(config)?;
    let upper = parse_bounds(args.upper.as_deref(), args.d, 1.0).map_err(config)?;
    let domain = InputDomain::new(
        Point::new(lower).map_err(config)?,
        Point::new(upper).map_err(config)?,
    )
    .map_err(config)?;
    let template = CommandTemplate::parse(&args.command, args.d).map_err(config)?;
    let mut oracle = ExternalOracle::new(
        template,
        args.convention,
        args.timeout_ms.map(Duration::from_millis),
    );
    let config_ = SearchConfig {
        strategy: args.search.strategy,
        extension_length: args.search.extension_length,
        lambda: args.search.lambda,
        target: args.search.n,
        orientation_policy: args.search.policy,
        alg1_mode: args.search.mode,
        probe_budget: args.probe_budget,
        seed: args.search.seed,
        ..SearchConfig::default()
    };
    config_.validate().map_err(config)?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.search.seed);
    let first = find_first_failure(
        &mut oracle,
        &domain,
        config_.fscs_candidates,
        &mut rng,
        args.finder_budget,
    )
    .map_err(anyhow::Error::from)?;
    let harvest = run_strategy(&first.point, &config_, &mut oracle, &domain, &mut rng)
        .map_err(anyhow::Error::from)?;
    let points: Vec<_> = harvest
        .boundary_inputs
        .iter()
        .chain(&harvest.source_inputs)
        .cloned()
        .collect();
    let volume = hull_volume(&points, args.d, args.mc_samples, &mut rng);
    let report = json!({
        "first_failure": first,
        "harvest": harvest,
        "hull_volume": volume,
        "estimated_failure_rate": volume.volume / domain.volume(),
        "inequalities": inequality_report(&points).to_string(),
        "oracle_timeouts": oracle.timeouts(),
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    text.push('\n');
    emit(args.out.as_ref(), &text)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Summarize(a) => run_summarize(a),
        Command::Render(a) => run_render(a),
        Command::ProbeExternal(a) => probe_external(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Partial(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
