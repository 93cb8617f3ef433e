//! Command-line harness: `run`, `sweep` and `verify`.
//!
//! Exit codes: 0 success, 1 verification or run failure, 2 usage or input
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::apps::dump::{self, Array, DumpError, DumpFormat, Kind};
use crate::apps::{self, App, AppError, PrParams, Violation};
use crate::graph::{load_graph, Graph, GraphError};
use crate::metrics::{self, CsvRow, MetricsError, RunStats, MIN_SAMPLE_INTERVAL};
use crate::scheduler::{Mode, SchedError, SchedulerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Feasible sweep cells need this many tasks per pop for every 32 lanes.
pub const LANES_PER_FETCHED_TASK: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    App(#[from] AppError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error("verification failed: {0}")]
    Verification(Violation),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Graph(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::App(AppError::Sched(SchedError::InvalidConfig(_))) => EXIT_USAGE,
            CliError::App(AppError::Sched(_)) => EXIT_FAILED,
            CliError::App(_) => EXIT_USAGE,
            CliError::Metrics(MetricsError::IntervalTooShort(_)) => EXIT_USAGE,
            CliError::Metrics(_) => EXIT_FAILED,
            CliError::Dump(DumpError::Io(_)) => EXIT_USAGE,
            CliError::Dump(_) | CliError::Verification(_) => EXIT_FAILED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "relaxsched",
    version,
    about = "Run graph applications on the relaxed task scheduler"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration `--repeats` times, verifying every run.
    Run(RunArgs),
    /// Run every group size x fetch size combination.
    Sweep(SweepArgs),
    /// Check a dumped result array against the matching oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// File path, `synth:grid:ROWSxCOLS` or `synth:rmat:SCALE:EDGEFACTOR`.
    #[arg(long, default_value = "synth:grid:64x64")]
    pub graph: String,
    /// `mtx`, `edges` or `auto` (by file extension).
    #[arg(long, default_value = "auto")]
    pub format: String,
    /// Add the reverse of every edge after loading.
    #[arg(long)]
    pub symmetrize: bool,
    /// Relabel vertices with a random permutation drawn from `--seed`.
    #[arg(long)]
    pub permute_ids: bool,
    /// Seeds the RMAT generator, the permutation and worker backoff.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AppArgs {
    #[arg(long, default_value = "bfs")]
    pub app: App,
    /// BFS source vertex.
    #[arg(long, default_value_t = 0)]
    pub source: u32,
    /// PageRank damping factor.
    #[arg(long, default_value_t = 0.85)]
    pub lambda: f64,
    /// PageRank residue threshold.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// PageRank vertices checked per processed vertex.
    #[arg(long, default_value_t = 1)]
    pub check_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub app: AppArgs,
    #[arg(long, default_value = "persistent")]
    pub mode: Mode,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub group_size: usize,
    #[arg(long, default_value_t = 32)]
    pub fetch_size: usize,
    /// Runs per configuration; the first is a warm-up and is left out of the
    /// timing summary when there is more than one.
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    /// Write one CSV row per timed run.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the last run's `elapsed_us,cumulative_work` trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Trace sampling interval in microseconds (at least 100).
    #[arg(long)]
    pub sample_us: Option<u64>,
    /// Dump the last run's result array.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    pub dump_format: DumpFormat,
    /// Corrupt the result before verification (exercises the failure path).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Group sizes to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,8,32,64,128,256")]
    pub group_sizes: Vec<usize>,
    /// Fetch sizes to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub fetch_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub app: AppArgs,
    /// Result array written by `run --output`.
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long, default_value = "text")]
    pub dump_format: DumpFormat,
}

/// Everything needed to execute one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub app: App,
    pub mode: Mode,
    pub graph: String,
    pub format: String,
    pub symmetrize: bool,
    pub permute_ids: bool,
    pub source: u32,
    pub workers: usize,
    pub group_size: usize,
    pub fetch_size: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub check_size: usize,
    pub seed: u64,
    pub repeats: usize,
    pub sample_us: Option<u64>,
}

impl RunSpec {
    pub fn new(app: App, mode: Mode, graph: &str) -> Self {
        RunSpec {
            app,
            mode,
            graph: graph.to_string(),
            format: "auto".into(),
            symmetrize: false,
            permute_ids: false,
            source: 0,
            workers: SchedulerConfig::default().num_workers,
            group_size: 32,
            fetch_size: 32,
            lambda: 0.85,
            epsilon: 1e-6,
            check_size: 1,
            seed: 1,
            repeats: 20,
            sample_us: None,
        }
    }

    fn from_args(a: &RunArgs) -> Self {
        RunSpec {
            app: a.app.app,
            mode: a.mode,
            graph: a.graph.graph.clone(),
            format: a.graph.format.clone(),
            symmetrize: a.graph.symmetrize,
            permute_ids: a.graph.permute_ids,
            source: a.app.source,
            workers: a.workers.unwrap_or_else(|| SchedulerConfig::default().num_workers),
            group_size: a.group_size,
            fetch_size: a.fetch_size,
            lambda: a.app.lambda,
            epsilon: a.app.epsilon,
            check_size: a.app.check_size,
            seed: a.graph.seed,
            repeats: a.repeats,
            sample_us: match (a.sample_us, &a.trace) {
                (Some(us), _) => Some(us),
                (None, Some(_)) => Some(MIN_SAMPLE_INTERVAL.as_micros() as u64),
                (None, None) => None,
            },
        }
    }

    pub fn params(&self) -> PrParams {
        PrParams {
            lambda: self.lambda,
            epsilon: self.epsilon,
            check_size: self.check_size,
        }
    }

    pub fn config(&self) -> SchedulerConfig {
        let mut cfg =
            SchedulerConfig::new(self.mode, self.workers, self.group_size, self.fetch_size).with_seed(self.seed);
        cfg.sample_interval = self.sample_us.map(Duration::from_micros);
        cfg
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.repeats == 0 {
            return Err(CliError::Usage("--repeats must be >= 1".into()));
        }
        if self.workers == 0 || self.group_size == 0 || self.fetch_size == 0 {
            return Err(CliError::Usage(
                "--workers, --group-size and --fetch-size must be >= 1".into(),
            ));
        }
        if let Some(us) = self.sample_us {
            if Duration::from_micros(us) < MIN_SAMPLE_INTERVAL {
                return Err(CliError::Usage(format!("--sample-us {us} is below the 100 us minimum")));
            }
        }
        if self.app == App::PageRank {
            self.params().validate()?;
        }
        Ok(())
    }

    /// Every setting as `key=value`, in a fixed order.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("app", self.app.to_string()),
            ("mode", self.mode.to_string()),
            ("graph", self.graph.clone()),
            ("format", self.format.clone()),
            ("symmetrize", self.symmetrize.to_string()),
            ("permute_ids", self.permute_ids.to_string()),
            ("source", self.source.to_string()),
            ("workers", self.workers.to_string()),
            ("group_size", self.group_size.to_string()),
            ("fetch_size", self.fetch_size.to_string()),
            ("lambda", self.lambda.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("check_size", self.check_size.to_string()),
            ("seed", self.seed.to_string()),
            ("repeats", self.repeats.to_string()),
        ];
        m.push((
            "sample_us",
            self.sample_us.map_or_else(|| "off".to_string(), |us| us.to_string()),
        ));
        m.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn csv_row(&self) -> CsvRow {
        CsvRow {
            app: self.app.to_string(),
            mode: self.mode.to_string(),
            group_size: self.group_size,
            fetch_size: self.fetch_size,
            workers: self.workers,
            graph: self.graph.clone(),
            seed: self.seed,
            run_ms: None,
            work_items: None,
            tasks_popped: None,
            tasks_pushed: None,
            rounds: None,
            queue_high_water: None,
            overwork_ratio: None,
        }
    }
}

/// Loads or generates the graph, then applies `--symmetrize` and
/// `--permute-ids` in that order.
pub fn prepare_graph(
    graph: &str,
    format: &str,
    symmetrize: bool,
    permute_ids: bool,
    seed: u64,
) -> Result<Graph, CliError> {
    let mut g = load_graph(graph, format, seed)?;
    if symmetrize {
        g = g.symmetrize();
    }
    if permute_ids {
        g = g.permute_ids(seed).0;
    }
    Ok(g)
}

pub fn prepare_spec_graph(spec: &RunSpec) -> Result<Graph, CliError> {
    prepare_graph(&spec.graph, &spec.format, spec.symmetrize, spec.permute_ids, spec.seed)
}

/// Denominator of the overwork ratio: reachable edges for BFS, the BSP
/// run's work for PageRank, `|V|` for coloring.
pub fn baseline_workload(g: &Graph, spec: &RunSpec) -> Result<u64, CliError> {
    Ok(match spec.app {
        App::Bfs => {
            if spec.source as usize >= g.num_vertices() {
                return Err(AppError::SourceOutOfRange {
                    vertex: spec.source,
                    num_vertices: g.num_vertices(),
                }
                .into());
            }
            apps::reachable_edges(g, &g.bfs_distances(spec.source))
        }
        App::PageRank => {
            let cfg = SchedulerConfig::new(Mode::Bsp, spec.workers, spec.group_size, 1);
            apps::pagerank_bsp(g, spec.params(), &cfg)?.1.work_items
        }
        App::Coloring => g.num_vertices() as u64,
    })
}

/// One verified execution.
#[derive(Debug)]
pub struct RunOutcome {
    pub stats: RunStats,
    pub overwork: Option<f64>,
    pub result: Array,
    pub violation: Option<Violation>,
}

/// Runs the application once and checks the result with its oracle.
pub fn run_once(g: &Graph, spec: &RunSpec, baseline: u64) -> Result<RunOutcome, CliError> {
    let cfg = spec.config();
    let bsp = spec.mode == Mode::Bsp;
    let (stats, result, violation) = match spec.app {
        App::Bfs => {
            let (s, stats) = if bsp {
                apps::bfs_bsp(g, spec.source, &cfg)?
            } else {
                apps::bfs_relaxed(g, spec.source, &cfg)?
            };
            let d = s.distances();
            let v = apps::verify_bfs(&d, g, spec.source).err();
            (stats, Array::U32(d), v)
        }
        App::PageRank => {
            let (s, stats) = if bsp {
                apps::pagerank_bsp(g, spec.params(), &cfg)?
            } else {
                apps::pagerank_relaxed(g, spec.params(), &cfg)?
            };
            let ranks = s.ranks();
            let v = apps::verify_pagerank(&s)
                .and_then(|_| apps::verify_pagerank_ranks(&ranks, g, &spec.params()))
                .err();
            (stats, Array::F64(ranks), v)
        }
        App::Coloring => {
            let (s, stats) = if bsp {
                apps::coloring_bsp(g, &cfg)?
            } else {
                apps::coloring_relaxed(g, &cfg)?
            };
            let c = s.colors();
            let v = apps::verify_coloring(&c, g).err();
            (stats, Array::I32(c), v)
        }
    };
    let overwork = metrics::overwork(stats.work_items, baseline).ok().map(|r| r.ratio);
    Ok(RunOutcome {
        stats,
        overwork,
        result,
        violation,
    })
}

fn corrupt(result: &mut Array) {
    match result {
        Array::U32(v) => v.iter_mut().for_each(|x| *x = x.wrapping_add(1)),
        Array::I32(v) => v.iter_mut().for_each(|x| *x = 0),
        Array::F64(v) => v.iter_mut().for_each(|x| *x += 1.0),
    }
}

fn reverify(result: &Array, g: &Graph, spec: &RunSpec) -> Option<Violation> {
    match (spec.app, result) {
        (App::Bfs, Array::U32(d)) => apps::verify_bfs(d, g, spec.source).err(),
        (App::PageRank, Array::F64(r)) => apps::verify_pagerank_ranks(r, g, &spec.params()).err(),
        (App::Coloring, Array::I32(c)) => apps::verify_coloring(c, g).err(),
        _ => Some(Violation::global("result kind", spec.app, "other")),
    }
}

/// Mean, min and max of a sample.
pub fn summarize(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

fn echo(out: &mut dyn Write, meta: &[(String, String)]) -> Result<(), CliError> {
    for (k, v) in meta {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |r| format!("{r:.4}"))
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = RunSpec::from_args(args);
    spec.validate()?;
    let mut meta = spec.metadata();
    meta.push(("dump_format".into(), format!("{:?}", args.dump_format).to_lowercase()));
    echo(out, &meta)?;

    let g = prepare_spec_graph(&spec)?;
    writeln!(out, "graph: {} vertices, {} edges", g.num_vertices(), g.num_edges())?;
    let baseline = baseline_workload(&g, &spec)?;

    let mut rows = Vec::new();
    let mut times = Vec::new();
    let mut ratios = Vec::new();
    let mut last = None;
    for rep in 0..spec.repeats {
        let mut o = run_once(&g, &spec, baseline)?;
        if args.inject_fault {
            corrupt(&mut o.result);
            o.violation = o.violation.or_else(|| reverify(&o.result, &g, &spec));
        }
        if let Some(v) = o.violation.take() {
            writeln!(out, "run {rep}: FAIL {v}")?;
            return Err(CliError::Verification(v));
        }
        let warmup = rep == 0 && spec.repeats > 1;
        writeln!(
            out,
            "run {rep}{}: {:.3} ms, work {}, rounds {}, overwork {}",
            if warmup { " (warm-up)" } else { "" },
            o.stats.run_ms(),
            o.stats.work_items,
            o.stats.rounds,
            fmt_ratio(o.overwork)
        )?;
        if warmup {
            meta.push(("warmup_run_ms".into(), format!("{:.3}", o.stats.run_ms())));
        } else {
            times.push(o.stats.run_ms());
            ratios.extend(o.overwork);
            rows.push(spec.csv_row().measured(&o.stats, o.overwork));
        }
        last = Some(o);
    }
    let last = last.expect("repeats >= 1");
    let (mean, min, max) = summarize(&times);
    let (omean, omin, omax) = summarize(&ratios);
    writeln!(out, "verified {} runs", spec.repeats)?;
    writeln!(out, "run_ms mean {mean:.3} min {min:.3} max {max:.3}")?;
    writeln!(
        out,
        "overwork mean {omean:.4} min {omin:.4} max {omax:.4} (baseline {baseline})"
    )?;

    if let Some(path) = &args.csv {
        metrics::write_csv(path, &rows, &meta)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if let Some(path) = &args.trace {
        metrics::write_trace(path, &last.stats.trace)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if let Some(path) = &args.output {
        dump::write_array(path, &last.result, args.dump_format)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

/// Whether `fetch_size` tasks per pop can occupy `group_size` lanes.
pub fn feasible(group_size: usize, fetch_size: usize) -> bool {
    fetch_size >= group_size.div_ceil(LANES_PER_FETCHED_TASK)
}

/// Runs the cross product in `group_sizes`-major order. Infeasible cells
/// produce rows with empty measurement fields.
pub fn sweep(
    g: &Graph,
    base: &RunSpec,
    group_sizes: &[usize],
    fetch_sizes: &[usize],
    mut progress: impl FnMut(&CsvRow),
) -> Result<Vec<CsvRow>, CliError> {
    let baseline = baseline_workload(g, base)?;
    let mut rows = Vec::with_capacity(group_sizes.len() * fetch_sizes.len());
    for &group_size in group_sizes {
        for &fetch_size in fetch_sizes {
            let spec = RunSpec {
                group_size,
                fetch_size,
                ..base.clone()
            };
            let mut row = spec.csv_row();
            if feasible(group_size, fetch_size) {
                let mut times = Vec::new();
                let mut kept = None;
                for rep in 0..spec.repeats {
                    let o = run_once(g, &spec, baseline)?;
                    if let Some(v) = o.violation {
                        return Err(CliError::Verification(v));
                    }
                    if rep > 0 || spec.repeats == 1 {
                        times.push(o.stats.run_ms());
                        kept = Some(o);
                    }
                }
                let o = kept.expect("at least one timed repeat");
                row = row.measured(&o.stats, o.overwork);
                row.run_ms = Some(summarize(&times).0);
            }
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.group_sizes.is_empty() || args.fetch_sizes.is_empty() {
        return Err(CliError::Usage(
            "--group-sizes and --fetch-sizes must be nonempty".into(),
        ));
    }
    if args.group_sizes.contains(&0) || args.fetch_sizes.contains(&0) {
        return Err(CliError::Usage("sweep sizes must be >= 1".into()));
    }
    let spec = RunSpec::from_args(&args.run);
    spec.validate()?;
    let mut meta = spec.metadata();
    meta.push(("group_sizes".into(), join(&args.group_sizes)));
    meta.push(("fetch_sizes".into(), join(&args.fetch_sizes)));
    echo(out, &meta)?;
    let g = prepare_spec_graph(&spec)?;
    writeln!(out, "graph: {} vertices, {} edges", g.num_vertices(), g.num_edges())?;
    writeln!(out, "group_size,fetch_size,run_ms,overwork_ratio")?;
    let mut io_err = None;
    let rows = sweep(&g, &spec, &args.group_sizes, &args.fetch_sizes, |r| {
        let line = match r.run_ms {
            Some(ms) => format!(
                "{},{},{ms:.3},{}",
                r.group_size,
                r.fetch_size,
                fmt_ratio(r.overwork_ratio)
            ),
            None => format!("{},{},,", r.group_size, r.fetch_size),
        };
        if let Err(e) = writeln!(out, "{line}") {
            io_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(path) = &args.run.csv {
        metrics::write_csv(path, &rows, &meta)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = prepare_graph(
        &args.graph.graph,
        &args.graph.format,
        args.graph.symmetrize,
        args.graph.permute_ids,
        args.graph.seed,
    )?;
    let kind = match args.app.app {
        App::Bfs => Kind::U32,
        App::PageRank => Kind::F64,
        App::Coloring => Kind::I32,
    };
    let result = dump::read_array(&args.result, args.dump_format, kind)?;
    let mut spec = RunSpec::new(args.app.app, Mode::Bsp, &args.graph.graph);
    spec.source = args.app.source;
    spec.lambda = args.app.lambda;
    spec.epsilon = args.app.epsilon;
    spec.check_size = args.app.check_size;
    if spec.app == App::PageRank {
        spec.params().validate()?;
    }
    match reverify(&result, &g, &spec) {
        None => {
            writeln!(out, "ok: {} values match the {} oracle", result.len(), spec.app)?;
            Ok(())
        }
        Some(v) => {
            writeln!(out, "FAIL {v}")?;
            Err(CliError::Verification(v))
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(
            std::iter::once("relaxsched").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn feasibility_rule() {
        assert!(feasible(32, 1));
        assert!(!feasible(64, 1));
        assert!(feasible(64, 2));
        assert!(feasible(1, 1));
        assert!(!feasible(256, 4));
    }

    #[test]
    fn bfs_run_passes_and_echoes_defaults() {
        let (code, out, _) = run(&["run", "--graph", "synth:grid:16x16", "--repeats", "2", "--workers", "2"]);
        assert_eq!(code, 0, "{out}");
        for key in [
            "app=bfs",
            "mode=persistent",
            "group_size=32",
            "fetch_size=32",
            "lambda=0.85",
            "epsilon=0.000001",
            "seed=1",
        ] {
            assert!(out.contains(&format!("# {key}")), "missing {key}:\n{out}");
        }
        assert!(out.contains("(warm-up)"));
        assert!(out.contains("verified 2 runs"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&["run", "--mode", "turbo"]).0, 2);
        assert_eq!(run(&["run", "--repeats", "0"]).0, 2);
        assert_eq!(run(&["run", "--graph", "synth:cube:3"]).0, 2);
        assert_eq!(run(&["run", "--sample-us", "10"]).0, 2);
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["run", "--app", "pagerank", "--lambda", "1.5"]).0, 2);
        // coloring on a directed graph
        assert_eq!(
            run(&[
                "run",
                "--app",
                "coloring",
                "--graph",
                "synth:rmat:6:4",
                "--repeats",
                "1"
            ])
            .0,
            2
        );
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn injected_fault_exits_one() {
        for app in ["bfs", "pagerank", "coloring"] {
            let (code, out, _) = run(&[
                "run",
                "--app",
                app,
                "--graph",
                "synth:grid:8x8",
                "--repeats",
                "1",
                "--inject-fault",
            ]);
            assert_eq!(code, 1, "{app}: {out}");
            assert!(out.contains("FAIL"));
        }
    }
}
