//! Work accounting, throughput traces and CSV output.
//!
//! Work-unit conventions per application:
//! - BFS: edges relaxed. Baseline: edges leaving reachable vertices.
//! - PageRank: vertex residue pushes that moved nonzero residue. Baseline:
//!   the bulk-synchronous run on the same graph.
//! - Coloring: color assignments. Baseline: `|V|`.
//!
//! Throughput is reported in work-units per second.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crossbeam_utils::CachePadded;
use serde::{Deserialize, Serialize};

/// Smallest accepted sampling interval.
pub const MIN_SAMPLE_INTERVAL: Duration = Duration::from_micros(100);

/// Window used for throughput plots.
pub const THROUGHPUT_WINDOW: Duration = Duration::from_millis(1);

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("overwork baseline must be positive")]
    ZeroBaseline,
    #[error("sample interval {0:?} is below the 100us minimum")]
    IntervalTooShort(Duration),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSample {
    pub elapsed_us: u64,
    pub cumulative: u64,
}

/// Timestamped cumulative work counts, merged over workers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    /// `per_worker[i][w]` is worker `w`'s count at `samples[i]`.
    pub per_worker: Vec<Vec<u64>>,
}

impl Trace {
    pub fn is_monotone(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[0].cumulative <= w[1].cumulative && w[0].elapsed_us <= w[1].elapsed_us)
    }

    pub fn final_count(&self) -> Option<u64> {
        self.samples.last().map(|s| s.cumulative)
    }

    fn push(&mut self, elapsed_us: u64, per_worker: Vec<u64>) {
        let cumulative = per_worker.iter().sum();
        self.samples.push(TraceSample { elapsed_us, cumulative });
        self.per_worker.push(per_worker);
    }

    /// Appends `other`, shifting its timestamps and counts past this trace.
    fn extend_after(&mut self, other: &Trace, time_offset_us: u64, count_offset: u64) {
        for (s, pw) in other.samples.iter().zip(&other.per_worker) {
            self.samples.push(TraceSample {
                elapsed_us: s.elapsed_us + time_offset_us,
                cumulative: s.cumulative + count_offset,
            });
            self.per_worker.push(pw.clone());
        }
    }
}

/// Counters and timing for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub wall_time: Duration,
    pub work_items: u64,
    pub tasks_popped: u64,
    pub tasks_pushed: u64,
    pub rounds: u64,
    pub queue_high_water: u64,
    pub trace: Trace,
}

impl RunStats {
    /// Folds a later continuation of the same run into `self`.
    pub fn absorb(&mut self, later: RunStats) {
        let offset_us = self.wall_time.as_micros() as u64;
        self.trace.extend_after(&later.trace, offset_us, self.work_items);
        self.wall_time += later.wall_time;
        self.work_items += later.work_items;
        self.tasks_popped += later.tasks_popped;
        self.tasks_pushed += later.tasks_pushed;
        self.rounds += later.rounds;
        self.queue_high_water = self.queue_high_water.max(later.queue_high_water);
    }

    pub fn run_ms(&self) -> f64 {
        self.wall_time.as_secs_f64() * 1e3
    }
}

/// Per-worker monotone work counters, written by their owner and read by
/// the sampler.
#[derive(Debug)]
pub struct WorkCounters {
    counts: Box<[CachePadded<AtomicU64>]>,
}

impl WorkCounters {
    pub fn new(workers: usize) -> Self {
        WorkCounters {
            counts: (0..workers).map(|_| CachePadded::new(AtomicU64::new(0))).collect(),
        }
    }

    #[inline]
    pub fn publish(&self, worker: usize, count: u64) {
        self.counts[worker].store(count, Ordering::Relaxed);
    }

    pub fn read(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.load(Ordering::Relaxed)).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Samples a set of [`WorkCounters`] at a fixed interval.
pub struct TraceRecorder<'a> {
    counters: &'a WorkCounters,
    interval: Duration,
    start: Instant,
    trace: Trace,
}

impl<'a> TraceRecorder<'a> {
    pub fn new(counters: &'a WorkCounters, interval: Duration, start: Instant) -> Result<Self, MetricsError> {
        if interval < MIN_SAMPLE_INTERVAL {
            return Err(MetricsError::IntervalTooShort(interval));
        }
        Ok(TraceRecorder {
            counters,
            interval,
            start,
            trace: Trace::default(),
        })
    }

    pub fn sample_now(&mut self) {
        let elapsed = self.start.elapsed().as_micros() as u64;
        self.trace.push(elapsed, self.counters.read());
    }

    /// Samples until `stop` is raised.
    pub fn run(&mut self, stop: &AtomicBool) {
        self.sample_now();
        let mut next = Instant::now() + self.interval;
        while !stop.load(Ordering::Acquire) {
            let now = Instant::now();
            if now < next {
                std::thread::sleep((next - now).min(self.interval));
                continue;
            }
            self.sample_now();
            next += self.interval;
            if next < Instant::now() {
                next = Instant::now() + self.interval;
            }
        }
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

/// Appends one sample holding the exact post-run totals.
pub fn finish_trace(trace: &mut Trace, elapsed: Duration, per_worker_totals: Vec<u64>) {
    let us = (elapsed.as_micros() as u64).max(trace.samples.last().map_or(0, |s| s.elapsed_us));
    trace.push(us, per_worker_totals);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverworkReport {
    pub work_items: u64,
    pub baseline_workload: u64,
    pub ratio: f64,
}

/// `work_items / baseline`. Ratios below 1 are kept as they are.
pub fn overwork(work_items: u64, baseline: u64) -> Result<OverworkReport, MetricsError> {
    if baseline == 0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok(OverworkReport {
        work_items,
        baseline_workload: baseline,
        ratio: work_items as f64 / baseline as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputSample {
    /// End of the window.
    pub elapsed_us: u64,
    pub window_us: u64,
    /// Work-units per second.
    pub throughput: f64,
}

/// Windowed throughput: consecutive trace samples are merged until a window
/// spans at least `window`.
pub fn throughput(trace: &Trace, window: Duration) -> Vec<ThroughputSample> {
    let window_us = window.as_micros() as u64;
    let mut out = Vec::new();
    let Some(first) = trace.samples.first() else {
        return out;
    };
    let mut from = TraceSample {
        elapsed_us: 0,
        cumulative: 0,
    };
    if first.cumulative != 0 {
        from = *first;
    }
    let last_idx = trace.samples.len() - 1;
    for (i, s) in trace.samples.iter().enumerate() {
        let dt = s.elapsed_us.saturating_sub(from.elapsed_us);
        if dt == 0 || (dt < window_us && i != last_idx) {
            continue;
        }
        out.push(ThroughputSample {
            elapsed_us: s.elapsed_us,
            window_us: dt,
            throughput: (s.cumulative - from.cumulative) as f64 / (dt as f64 * 1e-6),
        });
        from = *s;
    }
    out
}

/// Throughput divided by the overwork ratio: useful work per second.
pub fn normalized_throughput(samples: &[ThroughputSample], ratio: f64) -> Vec<ThroughputSample> {
    assert!(ratio > 0.0, "overwork ratio must be positive");
    samples
        .iter()
        .map(|s| ThroughputSample {
            throughput: s.throughput / ratio,
            ..*s
        })
        .collect()
}

/// Integral of a throughput series over time, in work-units.
pub fn integrate(samples: &[ThroughputSample]) -> f64 {
    samples.iter().map(|s| s.throughput * s.window_us as f64 * 1e-6).sum()
}

/// One CSV row. Measurement fields are empty for infeasible sweep cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub app: String,
    pub mode: String,
    pub group_size: usize,
    pub fetch_size: usize,
    pub workers: usize,
    pub graph: String,
    pub seed: u64,
    pub run_ms: Option<f64>,
    pub work_items: Option<u64>,
    pub tasks_popped: Option<u64>,
    pub tasks_pushed: Option<u64>,
    pub rounds: Option<u64>,
    pub queue_high_water: Option<u64>,
    pub overwork_ratio: Option<f64>,
}

impl CsvRow {
    pub fn measured(mut self, stats: &RunStats, overwork_ratio: Option<f64>) -> Self {
        self.run_ms = Some(stats.run_ms());
        self.work_items = Some(stats.work_items);
        self.tasks_popped = Some(stats.tasks_popped);
        self.tasks_pushed = Some(stats.tasks_pushed);
        self.rounds = Some(stats.rounds);
        self.queue_high_water = Some(stats.queue_high_water);
        self.overwork_ratio = overwork_ratio;
        self
    }

    pub fn is_blank(&self) -> bool {
        self.run_ms.is_none()
    }
}

pub const CSV_HEADER: &str = "app,mode,group_size,fetch_size,workers,graph,seed,run_ms,work_items,tasks_popped,tasks_pushed,rounds,queue_high_water,overwork_ratio";

/// Writes `# key=value` metadata lines followed by the header and rows.
pub fn write_csv(path: impl AsRef<Path>, rows: &[CsvRow], metadata: &[(String, String)]) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let mut file = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for (k, v) in metadata {
        writeln!(file, "# {k}={v}").map_err(io_err(path))?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>, MetricsError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    Ok(r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?)
}

/// Writes `elapsed_us,cumulative_work` lines.
pub fn write_trace(path: impl AsRef<Path>, trace: &Trace) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["elapsed_us", "cumulative_work"])?;
    for s in &trace.samples {
        w.write_record([s.elapsed_us.to_string(), s.cumulative.to_string()])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceSample>, MetricsError> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        let (elapsed_us, cumulative): (u64, u64) = rec?;
        out.push(TraceSample { elapsed_us, cumulative });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: usize) -> CsvRow {
        CsvRow {
            app: "bfs".into(),
            mode: "persistent".into(),
            group_size: 1 << i,
            fetch_size: 32,
            workers: 4,
            graph: "synth:grid:64x64".into(),
            seed: 7,
            run_ms: None,
            work_items: None,
            tasks_popped: None,
            tasks_pushed: None,
            rounds: None,
            queue_high_water: None,
            overwork_ratio: None,
        }
    }

    fn stats() -> RunStats {
        RunStats {
            wall_time: Duration::from_micros(12_345),
            work_items: 1000,
            tasks_popped: 90,
            tasks_pushed: 89,
            rounds: 3,
            queue_high_water: 17,
            trace: Trace::default(),
        }
    }

    #[test]
    fn overwork_examples() {
        assert_eq!(overwork(150, 100).unwrap().ratio, 1.5);
        assert!(matches!(overwork(1, 0), Err(MetricsError::ZeroBaseline)));
        assert!(overwork(72, 100).unwrap().ratio < 1.0);
    }

    #[test]
    fn normalized_throughput_scales() {
        let trace = Trace {
            samples: (0..=10)
                .map(|i| TraceSample {
                    elapsed_us: i * 1000,
                    cumulative: i * i * 10,
                })
                .collect(),
            per_worker: vec![vec![]; 11],
        };
        let raw = throughput(&trace, THROUGHPUT_WINDOW);
        assert_eq!(raw.len(), 10);
        assert_eq!(normalized_throughput(&raw, 1.0), raw);
        let half = normalized_throughput(&raw, 2.0);
        for (a, b) in raw.iter().zip(&half) {
            assert_eq!(a.throughput / 2.0, b.throughput);
        }
        // integral of normalized throughput = work / ratio
        assert!((integrate(&half) - 500.0).abs() <= 5.0);
    }

    #[test]
    fn throughput_merges_short_intervals() {
        let trace = Trace {
            samples: (0..=20)
                .map(|i| TraceSample {
                    elapsed_us: i * 250,
                    cumulative: i * 5,
                })
                .collect(),
            per_worker: vec![vec![]; 21],
        };
        let t = throughput(&trace, THROUGHPUT_WINDOW);
        assert_eq!(t.len(), 5);
        assert!(t
            .iter()
            .all(|s| s.window_us == 1000 && (s.throughput - 20_000.0).abs() < 1e-9));
    }

    #[test]
    fn recorder_rejects_short_interval() {
        let c = WorkCounters::new(1);
        assert!(TraceRecorder::new(&c, Duration::from_micros(50), Instant::now()).is_err());
    }

    #[test]
    fn recorder_merges_workers() {
        let c = WorkCounters::new(3);
        let mut rec = TraceRecorder::new(&c, MIN_SAMPLE_INTERVAL, Instant::now()).unwrap();
        rec.sample_now();
        c.publish(0, 5);
        c.publish(2, 7);
        rec.sample_now();
        let t = rec.into_trace();
        assert_eq!(t.samples[0].cumulative, 0);
        assert_eq!(t.samples[1].cumulative, 12);
        assert_eq!(t.per_worker[1], vec![5, 0, 7]);
    }

    #[test]
    fn csv_one_run_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let r = row(0).measured(&stats(), Some(1.0 / 3.0));
        write_csv(&path, std::slice::from_ref(&r), &[("repeats".into(), "1".into())]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0], CSV_HEADER);
        assert_eq!(read_csv(&path).unwrap(), vec![r]);
    }

    #[test]
    fn csv_sweep_rows_with_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows: Vec<CsvRow> = (0..36)
            .map(|i| {
                let r = row(i % 6);
                if i % 5 == 0 {
                    r
                } else {
                    r.measured(&stats(), Some(1.25))
                }
            })
            .collect();
        write_csv(&path, &rows, &[]).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 36);
        assert_eq!(back, rows);
        assert!(back[0].is_blank());
    }

    #[test]
    fn trace_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let mut trace = Trace::default();
        trace.push(0, vec![0, 0]);
        trace.push(150, vec![3, 4]);
        write_trace(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("elapsed_us,cumulative_work\n"));
        assert_eq!(read_trace(&path).unwrap(), trace.samples);
    }

    #[test]
    fn absorb_shifts_trace() {
        let mut a = stats();
        a.trace.push(12_000, vec![1000]);
        let mut b = stats();
        b.trace.push(5, vec![1000]);
        a.absorb(b);
        assert_eq!(a.work_items, 2000);
        assert_eq!(a.trace.samples[1].elapsed_us, 12_345 + 5);
        assert_eq!(a.trace.samples[1].cumulative, 2000);
        assert!(a.trace.is_monotone());
    }
}
