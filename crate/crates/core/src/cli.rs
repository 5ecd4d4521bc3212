//! `sqflow` command line.
//!
//! Exit status is 0 on success, 2 for bad invocations or inputs (clap's own
//! parse errors included) and 1 when the work itself fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baseline::{evaluate_partition, predict_partition, threshold_sweep, MetricsReport};
use crate::dataset::filter::{coverage_filter, DEFAULT_MAX_COVERAGE, DEFAULT_WINDOW};
use crate::dataset::generate::{generate_category, partition_from_run};
use crate::dataset::split::{apply_recipe, SplitRecipe};
use crate::dataset::stats::compute_norm_stats;
use crate::dataset::{compile_root, leakage_check, write_partition, DatasetPartition};
use crate::error::Error;
use crate::grid::{make_pattern_random, DropPattern, ImprintImage};
use crate::params::SimParams;
use crate::sim::{run, SnapshotSchedule};

#[derive(Debug, Parser)]
#[command(name = "sqflow", version, about = "Capillary squeeze-flow simulator and dataset tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its partition.
    Simulate(SimulateArgs),
    /// Run a seeded batch of one category.
    Generate(GenerateArgs),
    /// Drop examples with a locally saturated film.
    Filter(FilterArgs),
    /// Normalization statistics of a training set.
    Stats(StatsArgs),
    /// Score the crude max-pool baseline.
    Baseline(BaselineArgs),
    /// Write one imprint as a binary PGM.
    Render(RenderArgs),
    /// Assemble splits from a recipe and check them for leakage.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Pattern file: 20 lines of 20 characters in {0,1}.
    #[arg(long, conflicts_with_all = ["category", "seed"])]
    pub pattern: Option<PathBuf>,
    #[arg(long, requires = "seed")]
    pub category: Option<usize>,
    #[arg(long, requires = "category")]
    pub seed: Option<u64>,
    /// key = value overrides of the default parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write render/snap_NNN.pgm per snapshot.
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub category: usize,
    #[arg(long)]
    pub sims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; capped by SQFLOW_THREADS. Never changes the output.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_COVERAGE)]
    pub max_coverage: f64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Also write the statistics to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Print CSV rows for thresholds 0, 0.05, …, 1 after the report.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub row: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Second image: the row's nozzle pattern drawn as 8×8 blocks.
    #[arg(long)]
    pub dp_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Generated root holding `<category>/<sim_id>/`.
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long)]
    pub recipe: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip the interrogation-window filter.
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_COVERAGE)]
    pub max_coverage: f64,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

type CliResult = std::result::Result<(), Failure>;

fn load_params(path: Option<&Path>) -> std::result::Result<SimParams, Failure> {
    let p = match path {
        Some(path) => SimParams::from_file(path).map_err(usage)?,
        None => SimParams::default(),
    };
    p.validate().map_err(usage)?;
    Ok(p)
}

fn require_dir(path: &Path) -> CliResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("{}: no such directory", path.display())))
    }
}

/// Requested jobs, defaulting to all cores, capped by `SQFLOW_THREADS`.
pub fn effective_jobs(requested: Option<usize>, env: Option<&str>) -> std::result::Result<usize, Failure> {
    let mut jobs = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Some(cap) = env {
        let cap: usize = cap
            .trim()
            .parse()
            .map_err(|_| usage(format!("SQFLOW_THREADS={cap:?} is not a count")))?;
        jobs = jobs.min(cap.max(1));
    }
    Ok(jobs.max(1))
}

/// Binary greymap, 255 = On.
pub fn pgm(side: usize, on: impl Fn(usize) -> bool) -> Vec<u8> {
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend((0..side * side).map(|i| if on(i) { 255u8 } else { 0 }));
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| runtime(Error::io(parent, e)))?;
    }
    fs::write(path, bytes).map_err(|e| runtime(Error::io(path, e)))
}

fn load_dataset(dir: &Path) -> std::result::Result<DatasetPartition, Failure> {
    require_dir(dir)?;
    compile_root(dir).map_err(runtime)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    let params = load_params(a.params.as_deref())?;
    let dp = match (&a.pattern, a.category, a.seed) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path).map_err(|e| usage(Error::io(path, e)))?;
            DropPattern::parse_text(&text, params.nozzle_n).map_err(usage)?
        }
        (None, Some(k), Some(seed)) => make_pattern_random(k, seed, &params).map_err(usage)?,
        _ => return Err(usage("give --pattern FILE or --category K --seed S")),
    };
    let result = run(&dp, &params, &SnapshotSchedule::default()).map_err(runtime)?;
    let part = partition_from_run(&dp, &result).map_err(runtime)?;
    write_partition(&part, &a.out).map_err(runtime)?;
    if a.render {
        for (k, s) in result.snapshots.iter().enumerate() {
            let img = pgm(s.imprint.side(), |i| s.imprint.wet.as_slice()[i]);
            write_bytes(&a.out.join("render").join(format!("snap_{k:03}.pgm")), &img)?;
        }
    }
    let st = result.status;
    writeln!(
        out,
        "examples {} end {} t {:.6e} h {:.6e}",
        part.len(),
        st.reason,
        st.final_t,
        st.final_h
    )
    .map_err(runtime)
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> CliResult {
    let params = load_params(a.params.as_deref())?;
    let total = params.nozzle_n * params.nozzle_n;
    if a.category == 0 || a.category > total {
        return Err(usage(Error::CategoryOutOfRange(a.category, total)));
    }
    let jobs = effective_jobs(a.jobs, std::env::var("SQFLOW_THREADS").ok().as_deref())?;
    let summary = generate_category(a.category, a.sims, a.seed, &params, &a.out, jobs).map_err(runtime)?;
    out.write_all(summary.to_text().as_bytes()).map_err(runtime)?;
    if summary.failed.is_empty() {
        Ok(())
    } else {
        let ids: Vec<String> = summary.failed.iter().map(|(s, _)| format!("{s:04}")).collect();
        Err(runtime(format!("failed simulations: {}", ids.join(", "))))
    }
}

fn check_window(window: usize, max_coverage: f64) -> CliResult {
    if window == 0 || window > 160 {
        return Err(usage(format!("window {window} outside 1..=160")));
    }
    if !(0.0..=1.0).contains(&max_coverage) {
        return Err(usage(format!("max coverage {max_coverage} outside [0, 1]")));
    }
    Ok(())
}

fn filter(a: &FilterArgs, out: &mut dyn Write) -> CliResult {
    check_window(a.window, a.max_coverage)?;
    let all = load_dataset(&a.input)?;
    let kept = coverage_filter(&all, a.window, a.max_coverage);
    write_partition(&kept, &a.out).map_err(runtime)?;
    writeln!(out, "kept {} of {}", kept.len(), all.len()).map_err(runtime)
}

fn stats(a: &StatsArgs, out: &mut dyn Write) -> CliResult {
    let train = load_dataset(&a.train)?;
    let s = compute_norm_stats(&train).map_err(runtime)?;
    if let Some(path) = &a.out {
        write_bytes(path, s.to_string().as_bytes())?;
    }
    write!(out, "{s}").map_err(runtime)
}

fn baseline(a: &BaselineArgs, out: &mut dyn Write) -> CliResult {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(usage(format!("threshold {} outside [0, 1]", a.threshold)));
    }
    let data = load_dataset(&a.dataset)?;
    let report = evaluate_partition(&data, a.threshold).map_err(runtime)?;
    writeln!(out, "examples = {}", data.len()).map_err(runtime)?;
    write!(out, "{report}").map_err(runtime)?;
    if a.sweep {
        let (preds, truths) = predict_partition(&data).map_err(runtime)?;
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        writeln!(out, "{}", MetricsReport::CSV_HEADER).map_err(runtime)?;
        for r in threshold_sweep(&preds, &truths, &grid).map_err(runtime)? {
            writeln!(out, "{}", r.csv_row()).map_err(runtime)?;
        }
    }
    Ok(())
}

fn render(a: &RenderArgs, out: &mut dyn Write) -> CliResult {
    let data = load_dataset(&a.dataset)?;
    if a.row >= data.len() {
        return Err(usage(format!("row {} out of range (dataset has {})", a.row, data.len())));
    }
    let img = ImprintImage::from_indices(data.shape.vof_side, &data.vof[a.row]).map_err(runtime)?;
    let side = img.side();
    write_bytes(&a.out, &pgm(side, |i| img.wet.as_slice()[i]))?;
    if let Some(path) = &a.dp_out {
        let dp = DropPattern::from_indices(data.shape.dp_side, &data.dp[a.row]).map_err(runtime)?;
        let block = side / dp.side();
        let bytes = pgm(side, |i| dp.is_on(i / side / block, i % side / block));
        write_bytes(path, &bytes)?;
    }
    writeln!(out, "row {} t {:.8e} h {:.8e}", a.row, data.t[a.row], data.h[a.row]).map_err(runtime)
}

fn split(a: &SplitArgs, out: &mut dyn Write) -> CliResult {
    if !a.no_filter {
        check_window(a.window, a.max_coverage)?;
    }
    require_dir(&a.root)?;
    let recipe = SplitRecipe::from_file(&a.recipe).map_err(usage)?;
    let mut splits = apply_recipe(&a.root, &recipe).map_err(runtime)?;
    if !a.no_filter {
        for (_, p) in &mut splits {
            *p = coverage_filter(p, a.window, a.max_coverage);
        }
    }
    for (name, p) in &splits {
        write_partition(p, &a.out.join(name)).map_err(runtime)?;
        writeln!(out, "{name}: {} examples", p.len()).map_err(runtime)?;
    }
    let named: Vec<(&str, &DatasetPartition)> = splits.iter().map(|(n, p)| (n.as_str(), p)).collect();
    let report = leakage_check(&named);
    write!(out, "{report}").map_err(runtime)?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(runtime(format!("{} droplet patterns shared between splits", report.leaks.len())))
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Generate(a) => generate(a, out),
        Command::Filter(a) => filter(a, out),
        Command::Stats(a) => stats(a, out),
        Command::Baseline(a) => baseline(a, out),
        Command::Render(a) => render(a, out),
        Command::Split(a) => split(a, out),
    }
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("sqflow: {msg}");
            f.code()
        }
    }
}
