//! Runs a [`TaskHandler`] over a [`TaskQueue`] with a chosen worker count,
//! group size, fetch size and execution mode.
//!
//! * `persistent`: long-lived workers loop `pop → execute → push → done`
//!   until the queue is quiescent.
//! * `discrete`: the same workers, but in rounds. Each round drains exactly
//!   the tasks present when it started; tasks pushed during a round wait
//!   for the next one behind a barrier.
//! * `bsp`: double-buffered frontiers with a join after every phase and no
//!   shared queue.
//!
//! A worker's group of lanes is executed as an inner loop on one thread.
//! With more than one lane, the work units of a whole batch are flattened
//! with a prefix sum and cut into near-equal contiguous lane ranges.

use std::fmt;
use std::ops::Range;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Barrier, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::metrics::{finish_trace, MetricsError, RunStats, TraceRecorder, WorkCounters};
use crate::queue::{QueueError, Task, TaskQueue};

/// Failed-pop spins before a worker starts yielding.
pub const SPIN_LIMIT: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Persistent,
    Discrete,
    Bsp,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Persistent => "persistent",
            Mode::Discrete => "discrete",
            Mode::Bsp => "bsp",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "persistent" => Ok(Mode::Persistent),
            "discrete" => Ok(Mode::Discrete),
            "bsp" => Ok(Mode::Bsp),
            other => Err(format!("unknown mode {other:?} (expected persistent, discrete or bsp)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchedError {
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error("frontier of {len} tasks exceeds capacity {capacity}")]
    FrontierOverflow { len: usize, capacity: usize },
    #[error("worker {worker} panicked: {message}")]
    WorkerPanic { worker: usize, message: String },
    #[error("invalid scheduler configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    pub mode: Mode,
    pub num_workers: usize,
    /// Lanes per worker: 1 behaves like a thread, 32 like a warp, 64 and up
    /// like a block.
    pub group_size: usize,
    /// Tasks popped per batch. Ignored in `bsp` mode.
    pub fetch_size: usize,
    pub seed: u64,
    /// Throughput trace sampling; `None` disables the sampler thread.
    pub sample_interval: Option<Duration>,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            mode: Mode::Persistent,
            num_workers: thread::available_parallelism().map_or(1, |n| n.get()),
            group_size: 32,
            fetch_size: 32,
            seed: 0,
            sample_interval: None,
        }
    }
}

impl SchedulerConfig {
    pub fn new(mode: Mode, num_workers: usize, group_size: usize, fetch_size: usize) -> Self {
        SchedulerConfig {
            mode,
            num_workers,
            group_size,
            fetch_size,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sampling(mut self, interval: Duration) -> Self {
        self.sample_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<(), SchedError> {
        if self.num_workers == 0 || self.group_size == 0 || self.fetch_size == 0 {
            return Err(SchedError::InvalidConfig(format!(
                "workers={}, group_size={}, fetch_size={} must all be >= 1",
                self.num_workers, self.group_size, self.fetch_size
            )));
        }
        Ok(())
    }
}

/// Result of [`TaskHandler::begin`]: how many work units the task has and a
/// word handed to each of them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Begin {
    pub units: usize,
    pub carry: u64,
}

impl Begin {
    pub fn new(units: usize, carry: u64) -> Self {
        Begin { units, carry }
    }
}

/// Application code run by the workers.
///
/// For each popped task the scheduler calls `begin` once, `unit` once per
/// work unit (possibly from different lanes) and `end` once. Invocations
/// are concurrent across workers and sequential within one.
pub trait TaskHandler: Sync {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin;

    fn unit(&self, _task: Task, _carry: u64, _index: usize, _cx: &mut WorkerContext) {}

    fn end(&self, _task: Task, _carry: u64, _cx: &mut WorkerContext) {}

    /// Runs after a pop comes back empty, before the scheduler backs off.
    fn on_empty_pop(&self, _cx: &mut WorkerContext) {}
}

/// Per-worker state visible to handlers.
#[derive(Debug, Default)]
pub struct WorkerContext {
    worker: usize,
    lane: usize,
    work: u64,
    out: Vec<Task>,
    /// Handler-owned scratch space, reused across tasks.
    pub scratch: Vec<u64>,
    sizes: Vec<usize>,
    carries: Vec<u64>,
}

impl WorkerContext {
    pub fn new(worker: usize) -> Self {
        WorkerContext {
            worker,
            ..Default::default()
        }
    }

    pub fn worker(&self) -> usize {
        self.worker
    }

    /// Lane currently executing a unit.
    pub fn lane(&self) -> usize {
        self.lane
    }

    #[inline]
    pub fn push(&mut self, task: Task) {
        self.out.push(task);
    }

    #[inline]
    pub fn add_work(&mut self, n: u64) {
        self.work += n;
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    /// Tasks pushed since the last flush.
    pub fn pending(&self) -> &[Task] {
        &self.out
    }

    pub fn take_pending(&mut self) -> Vec<Task> {
        std::mem::take(&mut self.out)
    }
}

/// Splits `total` units into `lanes` contiguous ranges whose sizes differ by
/// at most one.
pub fn lane_range(total: usize, lanes: usize, lane: usize) -> Range<usize> {
    let base = total / lanes;
    let extra = total % lanes;
    let start = lane * base + lane.min(extra);
    let len = base + usize::from(lane < extra);
    start..start + len
}

pub fn lane_ranges(total: usize, lanes: usize) -> Vec<Range<usize>> {
    (0..lanes).map(|l| lane_range(total, lanes, l)).collect()
}

/// Executes one popped batch with `group_size` lanes.
pub fn group_execute(h: &dyn TaskHandler, batch: &[Task], group_size: usize, cx: &mut WorkerContext) {
    if group_size <= 1 {
        cx.lane = 0;
        for &task in batch {
            let b = h.begin(task, cx);
            for i in 0..b.units {
                h.unit(task, b.carry, i, cx);
            }
            h.end(task, b.carry, cx);
        }
        return;
    }

    let mut sizes = std::mem::take(&mut cx.sizes);
    let mut carries = std::mem::take(&mut cx.carries);
    sizes.clear();
    carries.clear();
    // sizes becomes the exclusive prefix sum in place
    sizes.push(0);
    for &task in batch {
        let b = h.begin(task, cx);
        sizes.push(sizes[sizes.len() - 1] + b.units);
        carries.push(b.carry);
    }
    let offsets = &sizes;
    let total = offsets[batch.len()];
    for lane in 0..group_size {
        let range = lane_range(total, group_size, lane);
        if range.is_empty() {
            continue;
        }
        cx.lane = lane;
        // first item whose unit range contains range.start
        let mut item = offsets.partition_point(|&o| o <= range.start) - 1;
        let mut unit = range.start;
        while unit < range.end {
            let item_end = offsets[item + 1];
            let stop = item_end.min(range.end);
            for u in unit..stop {
                h.unit(batch[item], carries[item], u - offsets[item], cx);
            }
            unit = stop;
            item += 1;
        }
    }
    cx.lane = 0;
    for (i, &task) in batch.iter().enumerate() {
        h.end(task, carries[i], cx);
    }
    cx.sizes = sizes;
    cx.carries = carries;
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct WorkerTotals {
    work: u64,
    popped: u64,
    pushed: u64,
}

struct Shared {
    stop: AtomicBool,
    error: Mutex<Option<SchedError>>,
}

impl Shared {
    fn new() -> Self {
        Shared {
            stop: AtomicBool::new(false),
            error: Mutex::new(None),
        }
    }

    fn fail(&self, err: SchedError) {
        let mut slot = self.error.lock().unwrap_or_else(|e| e.into_inner());
        if slot.is_none() {
            *slot = Some(err);
        }
        self.stop.store(true, Ordering::SeqCst);
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    fn take_error(&self) -> Option<SchedError> {
        self.error.lock().unwrap_or_else(|e| e.into_inner()).take()
    }
}

/// Small per-worker generator for backoff jitter.
struct Jitter(u64);

impl Jitter {
    fn new(seed: u64, worker: usize) -> Self {
        Jitter((seed ^ 0x9E37_79B9_7F4A_7C15).wrapping_add((worker as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)) | 1)
    }

    fn spins(&mut self) -> u32 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        SPIN_LIMIT / 2 + (self.0 % (SPIN_LIMIT as u64 / 2 + 1)) as u32
    }
}

fn backoff(idle: &mut u32, limit: u32) {
    if *idle < limit {
        for _ in 0..(1u32 << (*idle).min(6)) {
            std::hint::spin_loop();
        }
        *idle += 1;
    } else {
        thread::yield_now();
    }
}

/// Flushes the pushes of one batch, then ends the batch.
fn finish_batch(q: &TaskQueue, cx: &mut WorkerContext, totals: &mut WorkerTotals) -> Result<(), QueueError> {
    let res = q.push_bulk(&cx.out);
    if res.is_ok() {
        totals.pushed += cx.out.len() as u64;
    }
    cx.out.clear();
    q.task_done();
    res
}

/// Runs workers in `body` with optional trace sampling and builds RunStats.
fn with_workers<F>(cfg: &SchedulerConfig, shared: &Shared, body: F) -> Result<(Vec<WorkerTotals>, RunStats), SchedError>
where
    F: Fn(usize, &WorkCounters) -> WorkerTotals + Sync,
{
    cfg.validate()?;
    let counters = WorkCounters::new(cfg.num_workers);
    let start = Instant::now();
    let sampling_done = AtomicBool::new(false);
    let mut recorder = match cfg.sample_interval {
        Some(iv) => Some(TraceRecorder::new(&counters, iv, start)?),
        None => None,
    };

    let totals: Vec<WorkerTotals> = thread::scope(|s| {
        let sampler = recorder.as_mut().map(|rec| {
            let done = &sampling_done;
            s.spawn(move || rec.run(done))
        });
        let handles: Vec<_> = (0..cfg.num_workers)
            .map(|w| {
                let body = &body;
                let counters = &counters;
                s.spawn(move || {
                    panic::catch_unwind(AssertUnwindSafe(|| body(w, counters))).unwrap_or_else(|payload| {
                        shared.fail(SchedError::WorkerPanic {
                            worker: w,
                            message: panic_message(payload),
                        });
                        WorkerTotals::default()
                    })
                })
            })
            .collect();
        let totals = handles.into_iter().map(|h| h.join().unwrap_or_default()).collect();
        sampling_done.store(true, Ordering::Release);
        if let Some(h) = sampler {
            let _ = h.join();
        }
        totals
    });
    let wall_time = start.elapsed();

    let mut stats = RunStats {
        wall_time,
        ..Default::default()
    };
    for t in &totals {
        stats.work_items += t.work;
        stats.tasks_popped += t.popped;
        stats.tasks_pushed += t.pushed;
    }
    if let Some(rec) = recorder {
        stats.trace = rec.into_trace();
        finish_trace(&mut stats.trace, wall_time, totals.iter().map(|t| t.work).collect());
    }
    Ok((totals, stats))
}

/// Dispatches to [`run_persistent`] or [`run_discrete`] by `cfg.mode`.
pub fn run(q: &TaskQueue, h: &dyn TaskHandler, cfg: &SchedulerConfig) -> Result<RunStats, SchedError> {
    match cfg.mode {
        Mode::Persistent => run_persistent(q, h, cfg),
        Mode::Discrete => run_discrete(q, h, cfg),
        Mode::Bsp => Err(SchedError::InvalidConfig(
            "bsp mode runs phase lists through run_bsp, not a task queue".into(),
        )),
    }
}

/// Long-lived workers drain the queue until quiescence.
pub fn run_persistent(q: &TaskQueue, h: &dyn TaskHandler, cfg: &SchedulerConfig) -> Result<RunStats, SchedError> {
    let shared = Shared::new();
    let (_, mut stats) = with_workers(cfg, &shared, |w, counters| {
        let mut cx = WorkerContext::new(w);
        let mut batch = Vec::with_capacity(cfg.fetch_size);
        let mut totals = WorkerTotals::default();
        let mut jitter = Jitter::new(cfg.seed, w);
        let mut idle = 0u32;
        let mut limit = jitter.spins();
        while !shared.stopped() {
            let n = q.pop_bulk(cfg.fetch_size, &mut batch);
            if n > 0 {
                totals.popped += n as u64;
                group_execute(h, &batch, cfg.group_size, &mut cx);
                let res = finish_batch(q, &mut cx, &mut totals);
                counters.publish(w, cx.work);
                if let Err(e) = res {
                    shared.fail(e.into());
                    break;
                }
                idle = 0;
                continue;
            }
            h.on_empty_pop(&mut cx);
            if !cx.out.is_empty() {
                // pushes from the empty-pop hook behave like setup pushes
                let res = q.push_bulk(&cx.out);
                totals.pushed += cx.out.len() as u64;
                cx.out.clear();
                if let Err(e) = res {
                    shared.fail(e.into());
                    break;
                }
                continue;
            }
            if q.try_quiesce().is_some() {
                shared.stop.store(true, Ordering::SeqCst);
                break;
            }
            if idle == 0 {
                limit = jitter.spins();
            }
            backoff(&mut idle, limit);
        }
        totals.work = cx.work;
        totals
    })?;
    if let Some(e) = shared.take_error() {
        return Err(e);
    }
    stats.queue_high_water = q.high_water();
    Ok(stats)
}

/// Rounds separated by barriers; each drains the tasks present at its start.
pub fn run_discrete(q: &TaskQueue, h: &dyn TaskHandler, cfg: &SchedulerConfig) -> Result<RunStats, SchedError> {
    let shared = Shared::new();
    let barrier = Barrier::new(cfg.num_workers.max(1));
    let budget = AtomicU64::new(0);
    let rounds = AtomicU64::new(0);
    let finished = AtomicBool::new(false);

    let (_, mut stats) = with_workers(cfg, &shared, |w, counters| {
        let mut cx = WorkerContext::new(w);
        let mut batch = Vec::with_capacity(cfg.fetch_size);
        let mut totals = WorkerTotals::default();
        loop {
            barrier.wait();
            if w == 0 {
                let s = q.size() as u64;
                if s == 0 || shared.stopped() {
                    finished.store(true, Ordering::SeqCst);
                } else {
                    budget.store(s, Ordering::SeqCst);
                    rounds.fetch_add(1, Ordering::Relaxed);
                }
            }
            barrier.wait();
            if finished.load(Ordering::SeqCst) {
                break;
            }
            let round = panic::catch_unwind(AssertUnwindSafe(|| loop {
                if shared.stopped() {
                    break;
                }
                let claim = budget.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |b| {
                    (b > 0).then(|| b - b.min(cfg.fetch_size as u64))
                });
                let Ok(before) = claim else { break };
                let k = before.min(cfg.fetch_size as u64) as usize;
                let n = q.pop_bulk(k, &mut batch);
                debug_assert_eq!(n, k, "round tasks must all be resident");
                if n == 0 {
                    continue;
                }
                totals.popped += n as u64;
                group_execute(h, &batch, cfg.group_size, &mut cx);
                let res = finish_batch(q, &mut cx, &mut totals);
                counters.publish(w, cx.work);
                if let Err(e) = res {
                    shared.fail(e.into());
                }
            }));
            if let Err(payload) = round {
                shared.fail(SchedError::WorkerPanic {
                    worker: w,
                    message: panic_message(payload),
                });
            }
        }
        totals.work = cx.work;
        totals
    })?;
    if let Some(e) = shared.take_error() {
        return Err(e);
    }
    stats.rounds = rounds.load(Ordering::Relaxed);
    stats.queue_high_water = q.high_water();
    Ok(stats)
}

/// Which items a BSP phase runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseInput {
    /// The current input frontier.
    Frontier,
    /// Every vertex `0..num_items`.
    AllItems,
}

/// One bulk-synchronous kernel: the handler is applied to every input item,
/// then all workers join.
pub struct Phase<'a> {
    pub input: PhaseInput,
    pub handler: &'a dyn TaskHandler,
}

/// Double-buffered frontier execution.
///
/// Each iteration runs `phases` in order over the input frontier (or over all
/// `num_items` vertices); everything the handlers push during the iteration
/// becomes the next frontier. `observer` runs after every iteration with the
/// iteration count so far. Stops when an iteration starts with an empty
/// frontier.
pub fn run_bsp(
    num_items: usize,
    phases: &[Phase<'_>],
    initial: Vec<Task>,
    capacity: usize,
    cfg: &SchedulerConfig,
    observer: &mut dyn FnMut(u64),
) -> Result<RunStats, SchedError> {
    cfg.validate()?;
    let workers = cfg.num_workers;
    let counters = WorkCounters::new(workers);
    let start = Instant::now();
    let sampling_done = AtomicBool::new(false);
    let mut recorder = match cfg.sample_interval {
        Some(iv) => Some(TraceRecorder::new(&counters, iv, start)?),
        None => None,
    };
    let needs_all = phases.iter().any(|p| p.input == PhaseInput::AllItems);
    let all_items: Vec<Task> = if needs_all {
        (0..num_items as u32).map(Task::vertex).collect()
    } else {
        Vec::new()
    };

    let mut contexts: Vec<WorkerContext> = (0..workers).map(WorkerContext::new).collect();
    let mut stats = RunStats::default();
    let mut high_water = initial.len() as u64;
    if initial.len() > capacity {
        return Err(SchedError::FrontierOverflow {
            len: initial.len(),
            capacity,
        });
    }

    let outcome: Result<(), SchedError> = thread::scope(|s| {
        let sampler = recorder.as_mut().map(|rec| {
            let done = &sampling_done;
            s.spawn(move || rec.run(done))
        });
        let result = (|| {
            let mut frontier = initial;
            while !frontier.is_empty() {
                stats.rounds += 1;
                let mut next: Vec<Task> = Vec::new();
                for phase in phases {
                    let input: &[Task] = match phase.input {
                        PhaseInput::Frontier => &frontier,
                        PhaseInput::AllItems => &all_items,
                    };
                    stats.tasks_popped += input.len() as u64;
                    run_phase(phase.handler, input, cfg, &mut contexts, &counters)?;
                    for cx in contexts.iter_mut() {
                        next.append(&mut cx.out);
                    }
                    if next.len() > capacity {
                        return Err(SchedError::FrontierOverflow {
                            len: next.len(),
                            capacity,
                        });
                    }
                }
                stats.tasks_pushed += next.len() as u64;
                high_water = high_water.max(next.len() as u64);
                frontier = next;
                observer(stats.rounds);
            }
            Ok(())
        })();
        sampling_done.store(true, Ordering::Release);
        if let Some(h) = sampler {
            let _ = h.join();
        }
        result
    });
    outcome?;

    stats.wall_time = start.elapsed();
    stats.work_items = contexts.iter().map(|c| c.work).sum();
    stats.queue_high_water = high_water;
    if let Some(rec) = recorder {
        stats.trace = rec.into_trace();
        finish_trace(
            &mut stats.trace,
            stats.wall_time,
            contexts.iter().map(|c| c.work).collect(),
        );
    }
    Ok(stats)
}

fn run_phase(
    h: &dyn TaskHandler,
    input: &[Task],
    cfg: &SchedulerConfig,
    contexts: &mut [WorkerContext],
    counters: &WorkCounters,
) -> Result<(), SchedError> {
    if input.is_empty() {
        return Ok(());
    }
    let workers = contexts.len();
    let chunk = input.len().div_ceil(workers * 4).max(1);
    let cursor = AtomicU64::new(0);
    let work = |cx: &mut WorkerContext| loop {
        let at = cursor.fetch_add(chunk as u64, Ordering::Relaxed) as usize;
        if at >= input.len() {
            break;
        }
        let end = (at + chunk).min(input.len());
        group_execute(h, &input[at..end], cfg.group_size, cx);
        counters.publish(cx.worker, cx.work);
    };
    if workers == 1 {
        return panic::catch_unwind(AssertUnwindSafe(|| work(&mut contexts[0]))).map_err(|p| SchedError::WorkerPanic {
            worker: 0,
            message: panic_message(p),
        });
    }
    thread::scope(|s| {
        let handles: Vec<_> = contexts
            .iter_mut()
            .map(|cx| {
                let work = &work;
                s.spawn(move || work(cx))
            })
            .collect();
        let mut first_err = None;
        for (w, h) in handles.into_iter().enumerate() {
            if let Err(p) = h.join() {
                first_err.get_or_insert(SchedError::WorkerPanic {
                    worker: w,
                    message: panic_message(p),
                });
            }
        }
        first_err.map_or(Ok(()), Err)
    })
}
