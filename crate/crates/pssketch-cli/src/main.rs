//! Command-line front end: run a detector over a windowed trace, sweep
//! parameter grids, synthesize Poisson traces, validate the arrival-model
//! theory, and report trace shape.
//!
//! Every command is deterministic given `--seed`; only wall-clock throughput
//! fields (opt-in via `--throughput`) vary between runs. Exit codes: 0
//! success, 1 failed theory check, 2 unreadable input or unwritable output,
//! 3 invalid configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pssketch::baselines::run_trace;
use pssketch::eval::{
    build_detector, distribution_report, measure_throughput, metrics_csv, run_cell, CellConfig,
    DetectorKind, HarnessOptions, MetricsRecord,
};
use pssketch::hash::derive_seed;
use pssketch::synth::{
    ejection_experiment, generate_trace, theory_stats, validate_convergence, ConvergenceReport,
    EjectionReport, GroundTruth, PlantedGroup, PopulationModel, TheoryStats,
};
use pssketch::trace::{exact_stats, read_trace_file, write_trace_file};
use pssketch::{Criterion, Error as LibError, WindowedTrace};

/// Seed-derivation tag for traces generated inline by `run`/`sweep`/`dist`.
const TRACE_SEED_TAG: u64 = 0x17;

#[derive(Parser, Debug)]
#[command(name = "pssketch", version, about = "Persistent-and-sparse flow detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one detector over a trace and emit its metrics.
    Run(RunArgs),
    /// Run a detector x memory x threshold grid and emit one row per cell.
    Sweep(SweepArgs),
    /// Generate a synthetic trace file plus a ground-truth sidecar.
    Synth(SynthArgs),
    /// Evaluate the arrival-model moments and their Monte-Carlo checks.
    Theory(TheoryArgs),
    /// Report persistence and density histograms of a trace.
    Dist(DistArgs),
}

/// How a command failed, carrying the process exit code.
#[derive(Debug)]
enum Failure {
    /// A theory check failed (exit 1).
    Check(String),
    /// Input could not be read or output written (exit 2).
    Io(String),
    /// A flag or config value is invalid (exit 3).
    Config(String),
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        match e {
            LibError::Io(_) | LibError::TraceParse { .. } => Failure::Io(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn io_err(e: std::io::Error, path: &Path) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Dist(args) => cmd_dist(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, msg) = match failure {
                Failure::Check(m) => (1, m),
                Failure::Io(m) => (2, m),
                Failure::Config(m) => (3, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

// ---------------------------------------------------------------- trace input

/// Trace source shared by `run`, `sweep`, and `dist`: either a trace file or
/// an inline synthetic population.
#[derive(Args, Debug, Clone)]
struct TraceArgs {
    /// Trace file: `flow,window` lines, or bare `flow` lines with
    /// --window-size. `#` starts a comment.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Packets per derived window, for traces without a window column.
    #[arg(long, value_name = "N")]
    window_size: Option<u64>,
    /// Generate the input instead of reading a file. The generator seed is
    /// derived from --seed, so runs stay reproducible.
    #[arg(long)]
    synthetic: bool,
    /// Synthetic: background flow count.
    #[arg(long, default_value_t = 1000)]
    flows: usize,
    /// Synthetic: mean of the normal per-window rate distribution.
    #[arg(long, default_value_t = 0.5)]
    lambda_mean: f64,
    /// Synthetic: stddev of the normal per-window rate distribution.
    #[arg(long, default_value_t = 0.25)]
    lambda_stddev: f64,
    /// Synthetic: planted group as `lambda:count`; repeatable.
    #[arg(long, value_name = "L:N")]
    planted: Vec<String>,
    /// Synthetic: number of windows.
    #[arg(long, default_value_t = 100)]
    windows: u64,
}

impl TraceArgs {
    fn population(&self) -> Result<PopulationModel, Failure> {
        Ok(PopulationModel {
            flow_count: self.flows,
            lambda_mean: self.lambda_mean,
            lambda_stddev: self.lambda_stddev,
            planted: self
                .planted
                .iter()
                .map(|s| parse_planted(s))
                .collect::<Result<_, _>>()?,
        })
    }

    fn load(&self, seed: u64) -> Result<WindowedTrace, Failure> {
        match (&self.trace, self.synthetic) {
            (Some(_), true) => Err(config_err("--trace and --synthetic are mutually exclusive")),
            (None, false) => Err(config_err("a trace source is required: --trace or --synthetic")),
            (Some(path), false) => read_trace_file(path, self.window_size).map_err(|e| match e {
                LibError::Io(io) => io_err(io, path),
                other => other.into(),
            }),
            (None, true) => {
                let model = self.population()?;
                let (trace, _) = generate_trace(&model, self.windows, derive_seed(seed, TRACE_SEED_TAG))?;
                Ok(trace)
            }
        }
    }
}

fn parse_planted(text: &str) -> Result<PlantedGroup, Failure> {
    let parsed = text.split_once(':').and_then(|(lambda, count)| {
        Some(PlantedGroup {
            lambda: lambda.trim().parse().ok()?,
            count: count.trim().parse().ok()?,
        })
    });
    parsed.ok_or_else(|| config_err(format!("--planted expects `lambda:count`, got {text:?}")))
}

// ------------------------------------------------------------- config merging

/// Optional JSON config file; explicit flags always win over its fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    detector: Option<String>,
    memory_kb: Option<f64>,
    p0: Option<u64>,
    d0: Option<f64>,
    bucket_width: Option<usize>,
    fingerprint_bits: Option<u32>,
    seed: Option<u64>,
    window_size: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| io_err(e, path))?;
    serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn harness_options(bucket_width: Option<usize>, fingerprint_bits: Option<u32>) -> HarnessOptions {
    let defaults = HarnessOptions::default();
    HarnessOptions {
        bucket_width: bucket_width.unwrap_or(defaults.bucket_width),
        fingerprint_bits: fingerprint_bits.unwrap_or(defaults.fingerprint_bits),
        ..defaults
    }
}

fn memory_bits_of(memory_kb: f64) -> Result<u64, Failure> {
    if !(memory_kb.is_finite() && memory_kb > 0.0) {
        return Err(config_err("--memory-kb must be > 0"));
    }
    Ok((memory_kb * 8.0 * 1024.0) as u64)
}

// --------------------------------------------------------------------- output

fn write_json_value<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| config_err(format!("serialization failed: {e}")))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(e, p)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_text(text: &str, path: &Path) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(e, path))
}

// ------------------------------------------------------------------------ run

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: TraceArgs,
    /// pssketch | pisketch | pisketch-density | strawman | exact.
    #[arg(long)]
    detector: Option<String>,
    /// Memory budget in KB.
    #[arg(long)]
    memory_kb: Option<f64>,
    /// Persistence threshold.
    #[arg(long)]
    p0: Option<u64>,
    /// Density ceiling.
    #[arg(long)]
    d0: Option<f64>,
    /// Entries per competition bucket.
    #[arg(long)]
    bucket_width: Option<usize>,
    /// Competition fingerprint width in bits.
    #[arg(long)]
    fingerprint_bits: Option<u32>,
    /// Master seed; every random choice derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file supplying defaults for the flags above.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Measure insert throughput (wall-clock, so exempt from determinism).
    #[arg(long)]
    throughput: bool,
    /// Timed repetitions when --throughput is set.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Write metrics JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write metrics CSV here.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write the final sketch state dump here (pssketch only).
    #[arg(long, value_name = "PATH")]
    dump_state: Option<PathBuf>,
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let file = load_config(args.config.as_deref())?;
    let detector: DetectorKind = args
        .detector
        .or(file.detector)
        .unwrap_or_else(|| "pssketch".into())
        .parse()?;
    let criterion = Criterion::new(
        args.p0.or(file.p0).unwrap_or(50),
        args.d0.or(file.d0).unwrap_or(1.2),
    )?;
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let cell = CellConfig {
        detector,
        memory_bits: memory_bits_of(args.memory_kb.or(file.memory_kb).unwrap_or(100.0))?,
        criterion,
        seed,
        options: harness_options(
            args.bucket_width.or(file.bucket_width),
            args.fingerprint_bits.or(file.fingerprint_bits),
        ),
    };

    let mut source = args.source;
    source.window_size = source.window_size.or(file.window_size);
    let trace = source.load(seed)?;

    let exact = exact_stats(&trace);
    let mut record = run_cell(&cell, &trace, &exact);
    if let Some(e) = record.error {
        return Err(config_err(e));
    }
    if args.throughput {
        record.throughput_pps = Some(measure_throughput(
            || build_detector(&cell).expect("cell built once already"),
            &trace,
            args.repeats.max(1),
        )?);
    }

    if let Some(path) = &args.dump_state {
        if detector != DetectorKind::PsSketch {
            return Err(config_err("--dump-state requires --detector pssketch"));
        }
        let mut built = build_detector(&cell)?;
        run_trace(&mut built, &trace);
        let sketch = built.ps().expect("pssketch cell builds a two-layer sketch");
        write_text(&sketch.dump(), path)?;
    }

    emit_records(&[record], args.json.as_deref(), args.csv.as_deref(), OutputShape::Single)
}

/// `run` prints one JSON object by default; `sweep` prints CSV rows.
enum OutputShape {
    Single,
    Table,
}

fn emit_records(
    records: &[MetricsRecord],
    json: Option<&Path>,
    csv: Option<&Path>,
    shape: OutputShape,
) -> Result<(), Failure> {
    if let Some(path) = json {
        match shape {
            OutputShape::Single => write_json_value(&records[0], Some(path))?,
            OutputShape::Table => write_json_value(&records, Some(path))?,
        }
    }
    if let Some(path) = csv {
        write_text(&metrics_csv(records), path)?;
    }
    if json.is_none() && csv.is_none() {
        match shape {
            OutputShape::Single => write_json_value(&records[0], None)?,
            OutputShape::Table => print!("{}", metrics_csv(records)),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------- sweep

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    source: TraceArgs,
    /// Comma list of detectors, or `all`.
    #[arg(long, default_value = "pssketch")]
    detector: String,
    /// Memory budgets in KB: a value, comma list, or `lo:hi:step` range.
    #[arg(long)]
    memory_kb: Option<String>,
    /// Persistence thresholds: a value, comma list, or `lo:hi:step` range.
    #[arg(long)]
    p0: Option<String>,
    /// Density ceilings: a value, comma list, or `lo:hi:step` range.
    #[arg(long)]
    d0: Option<String>,
    /// Entries per competition bucket.
    #[arg(long)]
    bucket_width: Option<usize>,
    /// Competition fingerprint width in bits.
    #[arg(long)]
    fingerprint_bits: Option<u32>,
    /// Master seed. Repeat 0 uses it unchanged; repeat r re-runs the grid
    /// with a seed derived from (--seed, r).
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file supplying defaults for scalar flags.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Times to repeat the whole grid with derived seeds.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Parallel cells; --throughput forces sequential execution so timings
    /// do not contend.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Measure insert throughput per cell (median of 3 timed runs).
    #[arg(long)]
    throughput: bool,
    /// Write the table as JSON here.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the table as CSV here (default: CSV to stdout).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let file = load_config(args.config.as_deref())?;
    let detectors = parse_detectors(&args.detector)?;
    let memories = match &args.memory_kb {
        Some(text) => parse_f64_seq(text, "--memory-kb")?,
        None => vec![file.memory_kb.unwrap_or(100.0)],
    };
    let p0s = match &args.p0 {
        Some(text) => parse_u64_seq(text, "--p0")?,
        None => vec![file.p0.unwrap_or(50)],
    };
    let d0s = match &args.d0 {
        Some(text) => parse_f64_seq(text, "--d0")?,
        None => vec![file.d0.unwrap_or(1.2)],
    };
    if args.repeats < 1 {
        return Err(config_err("--repeats must be >= 1"));
    }
    if args.jobs < 1 {
        return Err(config_err("--jobs must be >= 1"));
    }
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let options = harness_options(
        args.bucket_width.or(file.bucket_width),
        args.fingerprint_bits.or(file.fingerprint_bits),
    );

    let mut cells = Vec::new();
    for repeat in 0..args.repeats {
        let row_seed = if repeat == 0 { seed } else { derive_seed(seed, repeat) };
        for &detector in &detectors {
            for &memory_kb in &memories {
                for &p0 in &p0s {
                    for &d0 in &d0s {
                        cells.push(CellConfig {
                            detector,
                            memory_bits: memory_bits_of(memory_kb)?,
                            criterion: Criterion::new(p0, d0)?,
                            seed: row_seed,
                            options,
                        });
                    }
                }
            }
        }
    }

    let mut source = args.source;
    source.window_size = source.window_size.or(file.window_size);
    let trace = source.load(seed)?;
    let exact = exact_stats(&trace);

    // Cells are independent, so parallel execution cannot change any row;
    // collect() preserves grid order.
    let records: Vec<MetricsRecord> = if args.jobs > 1 && !args.throughput {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(|e| config_err(format!("--jobs: {e}")))?;
        pool.install(|| cells.par_iter().map(|c| run_cell(c, &trace, &exact)).collect())
    } else {
        cells
            .iter()
            .map(|cell| {
                let mut record = run_cell(cell, &trace, &exact);
                if args.throughput && record.error.is_none() {
                    record.throughput_pps =
                        measure_throughput(|| build_detector(cell).expect("cell built"), &trace, 3)
                            .ok();
                }
                record
            })
            .collect()
    };

    emit_records(&records, args.json.as_deref(), args.csv.as_deref(), OutputShape::Table)
}

fn parse_detectors(text: &str) -> Result<Vec<DetectorKind>, Failure> {
    if text.trim() == "all" {
        return Ok(DetectorKind::ALL.to_vec());
    }
    text.split(',')
        .map(|s| s.trim().parse::<DetectorKind>().map_err(Failure::from))
        .collect()
}

/// Parses `v`, `a,b,c`, or an inclusive `lo:hi:step` range.
fn parse_u64_seq(text: &str, flag: &str) -> Result<Vec<u64>, Failure> {
    let bad = || config_err(format!("{flag}: expected a value, comma list, or lo:hi:step range, got {text:?}"));
    if text.contains(':') {
        let parts: Vec<u64> = text
            .splitn(3, ':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [lo, hi, step] = parts[..] else { return Err(bad()) };
        if step == 0 || hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(step as usize).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Float twin of [`parse_u64_seq`]; range steps tolerate representation error
/// so `1.0:2.0:0.5` lands exactly on 2.0.
fn parse_f64_seq(text: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    let bad = || config_err(format!("{flag}: expected a value, comma list, or lo:hi:step range, got {text:?}"));
    let finite = |v: f64| if v.is_finite() { Ok(v) } else { Err(bad()) };
    if text.contains(':') {
        let parts: Vec<f64> = text
            .splitn(3, ':')
            .map(|p| p.trim().parse().map_err(|_| bad()).and_then(finite))
            .collect::<Result<_, _>>()?;
        let [lo, hi, step] = parts[..] else { return Err(bad()) };
        // `finite` already rejected NaN, so this is a plain sign check.
        if step <= 0.0 || hi < lo {
            return Err(bad());
        }
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = lo + step * f64::from(k);
            if v > hi + step * 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        return Ok(out);
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()).and_then(finite))
        .collect()
}

// ---------------------------------------------------------------------- synth

#[derive(Args, Debug)]
struct SynthArgs {
    /// Background flow count.
    #[arg(long, default_value_t = 1000)]
    flows: usize,
    /// Mean of the normal per-window rate distribution.
    #[arg(long, default_value_t = 0.5)]
    lambda_mean: f64,
    /// Stddev of the normal per-window rate distribution.
    #[arg(long, default_value_t = 0.25)]
    lambda_stddev: f64,
    /// Planted group as `lambda:count`; repeatable.
    #[arg(long, value_name = "L:N")]
    planted: Vec<String>,
    /// Number of windows.
    #[arg(long, default_value_t = 100)]
    windows: u64,
    /// Generator seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trace output path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Ground-truth sidecar path (default: `<out>.truth.json`).
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let model = PopulationModel {
        flow_count: args.flows,
        lambda_mean: args.lambda_mean,
        lambda_stddev: args.lambda_stddev,
        planted: args
            .planted
            .iter()
            .map(|s| parse_planted(s))
            .collect::<Result<_, _>>()?,
    };
    // An empty population is representable on disk even though the generator
    // rejects it: write an empty trace and an empty truth sidecar.
    let (trace, truth) = if model.flow_count + model.planted.iter().map(|g| g.count).sum::<usize>() == 0 {
        (
            WindowedTrace::from_records(Vec::new()).expect("empty trace is valid"),
            GroundTruth {
                seed: args.seed,
                windows: args.windows,
                flows: Vec::new(),
            },
        )
    } else {
        generate_trace(&model, args.windows, args.seed)?
    };

    write_trace_file(&args.out, &trace)?;
    let truth_path = args
        .truth
        .unwrap_or_else(|| PathBuf::from(format!("{}.truth.json", args.out.display())));
    write_json_value(&truth, Some(&truth_path))
}

// --------------------------------------------------------------------- theory

#[derive(Args, Debug)]
struct TheoryArgs {
    /// Per-window arrival rate.
    #[arg(long)]
    lambda: f64,
    /// Observation horizon in windows (the ejection check needs >= 2).
    #[arg(long, default_value_t = 100)]
    windows: u64,
    /// Monte-Carlo trials per check.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct TheoryChecks {
    convergence_mse_decreasing: bool,
    ejection_ci_contains_zero: bool,
}

#[derive(Debug, Serialize)]
struct TheoryReport {
    stats: TheoryStats,
    convergence: ConvergenceReport,
    ejection: EjectionReport,
    checks: TheoryChecks,
    pass: bool,
}

fn cmd_theory(args: TheoryArgs) -> Result<(), Failure> {
    let stats = theory_stats(args.lambda, args.windows)?;
    let convergence =
        validate_convergence(args.lambda, args.windows, args.trials, derive_seed(args.seed, 1))?;
    let ejection =
        ejection_experiment(args.lambda, args.windows, args.trials, derive_seed(args.seed, 2))?;
    let checks = TheoryChecks {
        convergence_mse_decreasing: convergence.decreasing,
        ejection_ci_contains_zero: ejection.contains_zero,
    };
    let pass = checks.convergence_mse_decreasing && checks.ejection_ci_contains_zero;
    let report = TheoryReport {
        stats,
        convergence,
        ejection,
        checks,
        pass,
    };
    write_json_value(&report, args.json.as_deref())?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("one or more theory checks failed".into()))
    }
}

// ----------------------------------------------------------------------- dist

#[derive(Args, Debug)]
struct DistArgs {
    #[command(flatten)]
    source: TraceArgs,
    /// Seed for a --synthetic source.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the summary JSON here (default: stdout when no CSV is asked for).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the persistence histogram CSV here.
    #[arg(long, value_name = "PATH")]
    persistence_csv: Option<PathBuf>,
    /// Write the density histogram CSV here.
    #[arg(long, value_name = "PATH")]
    density_csv: Option<PathBuf>,
}

fn cmd_dist(args: DistArgs) -> Result<(), Failure> {
    let trace = args.source.load(args.seed)?;
    let report = distribution_report(&trace);
    if let Some(path) = &args.persistence_csv {
        write_text(&report.persistence.to_csv(), path)?;
    }
    if let Some(path) = &args.density_csv {
        write_text(&report.density.to_csv(), path)?;
    }
    let csv_requested = args.persistence_csv.is_some() || args.density_csv.is_some();
    match (&args.json, csv_requested) {
        (Some(path), _) => write_json_value(&report, Some(path.as_path())),
        (None, false) => write_json_value(&report, None),
        (None, true) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u64_sequences() {
        assert_eq!(parse_u64_seq("50", "--p0").unwrap(), vec![50]);
        assert_eq!(parse_u64_seq("8, 16,32", "--p0").unwrap(), vec![8, 16, 32]);
        assert_eq!(
            parse_u64_seq("20:60:10", "--p0").unwrap(),
            vec![20, 30, 40, 50, 60]
        );
        assert!(parse_u64_seq("60:20:10", "--p0").is_err());
        assert!(parse_u64_seq("1:9:0", "--p0").is_err());
        assert!(parse_u64_seq("abc", "--p0").is_err());
    }

    #[test]
    fn f64_sequences() {
        assert_eq!(parse_f64_seq("1.2", "--d0").unwrap(), vec![1.2]);
        assert_eq!(parse_f64_seq("1.0:2.0:0.5", "--d0").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_f64_seq("0.1:0.3:0.1", "--d0").unwrap().len(), 3);
        assert!(parse_f64_seq("1:2:nan", "--d0").is_err());
        assert!(parse_f64_seq("", "--d0").is_err());
    }

    #[test]
    fn planted_groups() {
        let g = parse_planted("1.5:100").unwrap();
        assert_eq!((g.lambda, g.count), (1.5, 100));
        assert!(parse_planted("1.5").is_err());
        assert!(parse_planted("x:1").is_err());
    }

    #[test]
    fn detector_lists() {
        assert_eq!(parse_detectors("all").unwrap().len(), 5);
        assert_eq!(
            parse_detectors("pssketch, exact").unwrap(),
            vec![DetectorKind::PsSketch, DetectorKind::Exact]
        );
        assert!(parse_detectors("nope").is_err());
    }

    #[test]
    fn trace_source_must_be_unambiguous() {
        let mut args = TraceArgs {
            trace: None,
            window_size: None,
            synthetic: false,
            flows: 1,
            lambda_mean: 0.5,
            lambda_stddev: 0.1,
            planted: vec![],
            windows: 5,
        };
        assert!(matches!(args.load(1), Err(Failure::Config(_))));
        args.trace = Some(PathBuf::from("x"));
        args.synthetic = true;
        assert!(matches!(args.load(1), Err(Failure::Config(_))));
    }
}
