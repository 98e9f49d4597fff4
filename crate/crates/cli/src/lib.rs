//! `padpress` subcommands. Each `cmd_*` writes its data output to the
//! given writer so it can be driven in-process.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use padpress_core::export::{self, FrameRecord};
use padpress_core::ingest::{IngestError, BASELINE_THRESHOLD_KPA};
use padpress_core::{format, synth, BuildConfig, ContactStatistic, Finding, Lattice, Point};
use padpress_service::{replay, Pacing, RenderService, ReplayOptions, ServiceConfig, ServiceError};
use thiserror::Error;

pub const LOG_ENV: &str = "PADPRESS_LOG";
/// Per-query latency the bench is measured against, microseconds.
pub const LATENCY_TARGET_US: f64 = 10.0;

/// Sets up stderr diagnostics from `PADPRESS_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).format_target(false).try_init();
}

#[derive(Debug, Parser)]
#[command(name = "padpress", version, about = "Finger-pad pressure lattice tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a lattice file from capture CSVs.
    Build(BuildArgs),
    /// Predict one frame.
    Query(QueryArgs),
    /// Measure per-query latency.
    Bench(BenchArgs),
    /// Run the WebSocket render service.
    Serve(ServeArgs),
    /// Feed a recorded trajectory through the render service.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Capture CSV, one per session. Repeatable.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Contact threshold for baseline detection.
    #[arg(long, default_value_t = BASELINE_THRESHOLD_KPA)]
    pub threshold_kpa: f64,
    /// Frame statistic compared with the threshold: max or sum.
    #[arg(long, default_value = "max")]
    pub statistic: ContactStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Pgm,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    /// Query point, e.g. `z=1.25,theta=30`.
    #[arg(long)]
    pub at: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub lattice: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8642")]
    pub addr: String,
    #[arg(long, default_value_t = padpress_service::server::DEFAULT_TICK_RATE_HZ)]
    pub rate_hz: f64,
    /// Directory served under `/ui`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub serve: ServeArgs,
    /// CSV with `t_s` and one column per lattice axis.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Hold the first row until this many viewers have connected.
    #[arg(long, default_value_t = 0)]
    pub wait_viewers: usize,
    /// Advance one row per rendered tick instead of following `t_s`.
    #[arg(long)]
    pub lockstep: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Capture {
        path: String,
        #[source]
        source: padpress_core::CaptureError,
    },
    #[error("{0}")]
    Build(IngestError),
    #[error("{path}: {source}")]
    Format {
        path: String,
        #[source]
        source: format::FormatError,
    },
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Replay(#[from] padpress_service::ReplayError),
    #[error("cannot write output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    /// Validation findings behind this error, if any.
    pub fn findings(&self) -> &[Finding] {
        match self {
            CliError::Build(e) => match e.root() {
                IngestError::InvalidLattice(f) => f,
                _ => &[],
            },
            CliError::Format { source: format::FormatError::Lattice(f), .. } => f,
            _ => &[],
        }
    }
}

fn io_err(path: &std::path::Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Build(a) => cmd_build(a, out).map(|_| ()),
        Command::Query(a) => cmd_query(a, out),
        Command::Bench(a) => cmd_bench(a, out).map(|_| ()),
        Command::Serve(a) => cmd_serve(a, out),
        Command::Replay(a) => cmd_replay(a, out),
    }
}

fn load(path: &std::path::Path) -> Result<Lattice, CliError> {
    format::load_lattice(path).map_err(|source| CliError::Format { path: path.display().to_string(), source })
}

pub fn cmd_build(args: &BuildArgs, out: &mut dyn Write) -> Result<Lattice, CliError> {
    if !(args.threshold_kpa.is_finite() && args.threshold_kpa > 0.0) {
        return Err(CliError::Usage(format!("--threshold-kpa must be positive, got {}", args.threshold_kpa)));
    }
    let mut sessions = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let file = File::open(path).map_err(io_err(path))?;
        let session = padpress_core::parse_capture(BufReader::new(file))
            .map_err(|source| CliError::Capture { path: path.display().to_string(), source })?;
        sessions.push(session);
    }
    let config = BuildConfig { threshold_kpa: args.threshold_kpa, statistic: args.statistic, ..BuildConfig::default() };
    let lattice = padpress_core::build_lattice(&sessions, &config).map_err(CliError::Build)?;
    format::save_lattice(&lattice, &args.out)
        .map_err(|source| CliError::Format { path: args.out.display().to_string(), source })?;

    writeln!(out, "wrote {}", args.out.display())?;
    writeln!(out, "nodes: {}", lattice.node_count())?;
    for axis in lattice.axes() {
        let samples: Vec<String> =
            axis.samples().iter().map(|v| export::format_significant(*v, export::TEXT_DIGITS)).collect();
        writeln!(out, "axis {} [{}]: {}", axis.name(), axis.unit(), samples.join(", "))?;
    }
    writeln!(out, "frame: {}x{}", lattice.frame_rows(), lattice.frame_cols())?;
    for finding in lattice.validate() {
        writeln!(out, "warning: {finding}")?;
    }
    Ok(lattice)
}

/// Parses `name=value,...` into lattice axis order. Every axis must be
/// given exactly once.
pub fn parse_at(lattice: &Lattice, at: &str) -> Result<Point, CliError> {
    let mut coords = vec![None; lattice.dims()];
    for part in at.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) =
            part.split_once('=').ok_or_else(|| CliError::Usage(format!("--at: expected name=value, got {part:?}")))?;
        let axis = lattice
            .axis_position(name.trim())
            .ok_or_else(|| CliError::Usage(format!("--at: unknown axis {:?}", name.trim())))?;
        let value: f64 =
            value.trim().parse().map_err(|_| CliError::Usage(format!("--at: {name} is not a number: {value:?}")))?;
        if !value.is_finite() {
            return Err(CliError::Usage(format!("--at: {name} must be finite")));
        }
        if coords[axis].replace(value).is_some() {
            return Err(CliError::Usage(format!("--at: {name} given twice")));
        }
    }
    let missing: Vec<&str> =
        lattice.axes().iter().zip(&coords).filter(|(_, c)| c.is_none()).map(|(a, _)| a.name()).collect();
    if !missing.is_empty() {
        return Err(CliError::Usage(format!("--at: missing {}", missing.join(", "))));
    }
    Ok(Point::new(coords.into_iter().flatten().collect()))
}

pub fn cmd_query(args: &QueryArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let lattice = load(&args.lattice)?;
    let point = parse_at(&lattice, &args.at)?;
    let started = Instant::now();
    let (frame, report) = lattice.query(&point).map_err(|e| CliError::Usage(e.to_string()))?;
    let compute_us = started.elapsed().as_secs_f64() * 1e6;
    for (axis, clamp) in lattice.axes().iter().zip(&report.axes) {
        if clamp.flag.is_clamped() {
            log::warn!("{} clamped to {} ({} range)", axis.name(), clamp.coord, clamp.flag.as_str());
        }
    }

    let mut bytes = Vec::new();
    match args.format {
        OutputFormat::Csv => export::write_frame_csv(&frame, &mut bytes)?,
        OutputFormat::Pgm => export::write_frame_pgm(&frame, lattice.full_scale_kpa(), &mut bytes)?,
        OutputFormat::Json => {
            let record = FrameRecord::new(&lattice, &frame, &report, compute_us);
            serde_json::to_writer(&mut bytes, &record).map_err(io::Error::from)?;
            bytes.push(b'\n');
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, &bytes).map_err(io_err(path))?,
        None => out.write_all(&bytes)?,
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyStats {
    pub min_us: f64,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub queries: usize,
    pub seed: u64,
    /// `None` when no queries ran.
    pub stats: Option<LatencyStats>,
    pub pinning: String,
}

impl BenchReport {
    pub fn meets_target(&self) -> Option<bool> {
        self.stats.as_ref().map(|s| s.mean_us < LATENCY_TARGET_US)
    }
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn latency_stats(mut samples: Vec<f64>) -> Option<LatencyStats> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_by(f64::total_cmp);
    Some(LatencyStats {
        min_us: samples[0],
        mean_us: samples.iter().sum::<f64>() / samples.len() as f64,
        p50_us: percentile(&samples, 0.50),
        p99_us: percentile(&samples, 0.99),
        max_us: samples[samples.len() - 1],
    })
}

/// The `n` uniformly random in-range points the bench uses for `seed`.
pub fn bench_points(lattice: &Lattice, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = synth::rng(seed);
    (0..n).map(|_| synth::random_point(&mut rng, lattice)).collect()
}

#[cfg(target_os = "linux")]
fn pin_to_current_core() -> String {
    // SAFETY: cpu_set_t is plain data; both calls only read or write the
    // set we own.
    unsafe {
        let cpu = libc::sched_getcpu();
        if cpu < 0 {
            return "not pinned: current cpu unknown".into();
        }
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_SET(cpu as usize, &mut set);
        if libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0 {
            format!("pinned to cpu {cpu}")
        } else {
            format!("not pinned: {}", io::Error::last_os_error())
        }
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to_current_core() -> String {
    "not pinned: unsupported platform".into()
}

/// Runs the latency benchmark on the calling thread.
pub fn bench(lattice: &Lattice, queries: usize, seed: u64) -> BenchReport {
    let points = bench_points(lattice, queries, seed);
    let pinning = if queries > 0 { pin_to_current_core() } else { "not pinned: nothing to run".into() };
    let mut samples = Vec::with_capacity(queries);
    for point in &points {
        let started = Instant::now();
        let result = lattice.query(point);
        let elapsed = started.elapsed();
        std::hint::black_box(&result);
        samples.push(elapsed.as_secs_f64() * 1e6);
    }
    BenchReport { queries, seed, stats: latency_stats(samples), pinning }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<BenchReport, CliError> {
    let lattice = load(&args.lattice)?;
    let report = bench(&lattice, args.queries, args.seed);
    let shape: Vec<String> = lattice.shape().iter().map(usize::to_string).collect();
    writeln!(
        out,
        "lattice: {} nodes ({}), frame {}x{}",
        lattice.node_count(),
        shape.join("x"),
        lattice.frame_rows(),
        lattice.frame_cols()
    )?;
    writeln!(out, "queries: {}", report.queries)?;
    writeln!(out, "seed: {}", report.seed)?;
    writeln!(out, "cpu: {}", report.pinning)?;
    match &report.stats {
        None => writeln!(out, "no queries run")?,
        Some(s) => {
            let f = |v: f64| format!("{v:.3}");
            writeln!(out, "min_us: {}", f(s.min_us))?;
            writeln!(out, "mean_us: {}", f(s.mean_us))?;
            writeln!(out, "p50_us: {}", f(s.p50_us))?;
            writeln!(out, "p99_us: {}", f(s.p99_us))?;
            writeln!(out, "max_us: {}", f(s.max_us))?;
            let verdict = if s.mean_us < LATENCY_TARGET_US { "met" } else { "missed" };
            writeln!(out, "target: mean < {LATENCY_TARGET_US} us {verdict}")?;
        }
    }
    Ok(report)
}

fn service_config(args: &ServeArgs) -> ServiceConfig {
    ServiceConfig { tick_rate_hz: args.rate_hz, ui_dir: args.ui_dir.clone(), ..ServiceConfig::default() }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    Ok(tokio::runtime::Runtime::new()?)
}

async fn ctrl_c() {
    if tokio::signal::ctrl_c().await.is_err() {
        std::future::pending::<()>().await;
    }
}

pub fn cmd_serve(args: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let lattice = load(&args.lattice)?;
    if let Some(dir) = &args.ui_dir {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("--ui-dir {} is not a directory", dir.display())));
        }
    }
    runtime()?.block_on(async {
        let service = RenderService::bind(lattice, &args.addr, service_config(args)).await?;
        writeln!(out, "listening on ws://{}/ws", service.local_addr()?)?;
        out.flush()?;
        service.run(ctrl_c()).await?;
        log::info!("shut down");
        Ok(())
    })
}

pub fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let lattice = load(&args.serve.lattice)?;
    let file = File::open(&args.trajectory).map_err(io_err(&args.trajectory))?;
    let trajectory = padpress_service::parse_trajectory(BufReader::new(file), &lattice)?;
    let options = ReplayOptions {
        wait_for_viewers: args.wait_viewers,
        pacing: if args.lockstep { Pacing::Lockstep } else { Pacing::Recorded },
    };
    runtime()?.block_on(async {
        let service = RenderService::bind(lattice, &args.serve.addr, service_config(&args.serve)).await?;
        writeln!(out, "listening on ws://{}/ws", service.local_addr()?)?;
        out.flush()?;
        let handle = service.handle();
        tokio::select! {
            report = replay(service, &trajectory, &options) => {
                let report = report?;
                writeln!(out, "replayed {} rows over {} ticks, {} frames rendered", report.rows, report.ticks, report.frames_rendered)?;
            }
            _ = ctrl_c() => {
                handle.shutdown();
                log::info!("replay interrupted");
            }
        }
        Ok(())
    })
}

/// Writes `sessions` as capture CSVs named `session_<i>.csv` in `dir`.
pub fn write_captures(dir: &std::path::Path, sessions: &[padpress_core::Session]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::with_capacity(sessions.len());
    for (i, session) in sessions.iter().enumerate() {
        let path = dir.join(format!("session_{i}.csv"));
        let file = File::create(&path).map_err(io_err(&path))?;
        padpress_core::ingest::write_capture(session, BufWriter::new(file))
            .map_err(|source| CliError::Capture { path: path.display().to_string(), source })?;
        paths.push(path);
    }
    Ok(paths)
}
