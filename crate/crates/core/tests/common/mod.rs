//! Workloads shared by the integration and acceptance suites.
#![allow(dead_code)]

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicU8, AtomicUsize, Ordering};
use std::sync::{mpsc, Barrier};
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaxsched::scheduler;
use relaxsched::{Begin, Mode, QueueError, SchedulerConfig, Task, TaskHandler, TaskQueue, WorkerContext};

/// Outcome of [`mpmc_stress`].
#[derive(Debug)]
pub struct StressReport {
    pub pushed: u64,
    pub popped: u64,
    pub missing: u64,
    pub duplicated: u64,
    pub overflow_retries: u64,
    pub final_size: usize,
}

/// `producers` threads push `per_producer` uniquely tagged tasks each in
/// batches of up to 64, retrying on overflow; `consumers` threads pop in
/// batches of up to `fetch` until every task has been seen.
pub fn mpmc_stress(
    producers: usize,
    consumers: usize,
    per_producer: u64,
    capacity: usize,
    fetch: usize,
) -> StressReport {
    let q = TaskQueue::new(capacity).unwrap();
    let total = producers as u64 * per_producer;
    let seen: Vec<AtomicU8> = (0..total).map(|_| AtomicU8::new(0)).collect();
    let retries = AtomicU64::new(0);
    let popped = AtomicU64::new(0);
    thread::scope(|s| {
        for p in 0..producers as u64 {
            let (q, retries) = (&q, &retries);
            s.spawn(move || {
                let mut batch = Vec::with_capacity(64);
                let mut i = 0;
                while i < per_producer {
                    batch.clear();
                    let n = 64.min(per_producer - i);
                    batch.extend((i..i + n).map(|k| Task(p * per_producer + k)));
                    loop {
                        match q.push_bulk(&batch) {
                            Ok(()) => break,
                            Err(QueueError::Overflow { .. }) => {
                                retries.fetch_add(1, Ordering::Relaxed);
                                thread::yield_now();
                            }
                            Err(e) => panic!("{e}"),
                        }
                    }
                    i += n;
                }
            });
        }
        for _ in 0..consumers {
            let (q, seen, popped) = (&q, &seen, &popped);
            s.spawn(move || {
                let mut out = Vec::with_capacity(fetch);
                while popped.load(Ordering::Relaxed) < total {
                    let n = q.pop_bulk(fetch, &mut out);
                    if n == 0 {
                        thread::yield_now();
                        continue;
                    }
                    for t in &out {
                        let prev = seen[t.0 as usize].fetch_add(1, Ordering::Relaxed);
                        assert!(prev < 200, "task {} seen too often", t.0);
                    }
                    popped.fetch_add(n as u64, Ordering::Relaxed);
                    q.task_done();
                }
            });
        }
    });
    let mut missing = 0;
    let mut duplicated = 0;
    for c in &seen {
        match c.load(Ordering::Relaxed) {
            0 => missing += 1,
            1 => {}
            _ => duplicated += 1,
        }
    }
    StressReport {
        pushed: q.pushed_total(),
        popped: q.popped_total(),
        missing,
        duplicated,
        overflow_retries: retries.load(Ordering::Relaxed),
        final_size: q.size(),
    }
}

/// One round of the push-just-before-`task_done` schedule: a worker holding
/// the only task pushes a child and ends its batch while an observer polls
/// for quiescence. Returns false if the observer declared quiescence while
/// the child was still unprocessed.
pub fn quiescence_race_trial(seed: u64) -> bool {
    let q = TaskQueue::new(16).unwrap();
    q.push_bulk(&[Task(1)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delay_push: u32 = rng.gen_range(0..4);
    let delay_done: u32 = rng.gen_range(0..4);
    let child_done = AtomicBool::new(false);
    let holding = Barrier::new(2);
    let mut ok = true;
    thread::scope(|s| {
        s.spawn(|| {
            let mut out = Vec::new();
            assert_eq!(q.pop_bulk(1, &mut out), 1);
            holding.wait();
            (0..delay_push).for_each(|_| thread::yield_now());
            q.push_bulk(&[Task(2)]).unwrap();
            (0..delay_done).for_each(|_| thread::yield_now());
            q.task_done();
            while q.pop_bulk(1, &mut out) == 0 {
                thread::yield_now();
            }
            child_done.store(true, Ordering::SeqCst);
            q.task_done();
        });
        holding.wait();
        loop {
            if let Some(tok) = q.try_quiesce() {
                ok = child_done.load(Ordering::SeqCst) && tok.pushed_total == 2 && tok.popped_total == 2;
                break;
            }
            thread::yield_now();
        }
    });
    ok && q.size() == 0
}

/// Handler that expands a complete `fanout`-ary tree of the given depth and
/// sleeps or yields for a random while around each task. Counts visits.
pub struct DelayedTree {
    pub fanout: u64,
    pub depth: u64,
    pub visits: AtomicU64,
    pub seed: u64,
    pub max_yields: u32,
    calls: AtomicUsize,
}

impl DelayedTree {
    pub fn new(fanout: u64, depth: u64, seed: u64, max_yields: u32) -> Self {
        DelayedTree {
            fanout,
            depth,
            visits: AtomicU64::new(0),
            seed,
            max_yields,
            calls: AtomicUsize::new(0),
        }
    }

    /// Nodes in the tree.
    pub fn size(&self) -> u64 {
        (0..=self.depth).map(|d| self.fanout.pow(d as u32)).sum()
    }

    fn pause(&self) {
        if self.max_yields == 0 {
            return;
        }
        let k = self.calls.fetch_add(1, Ordering::Relaxed) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for _ in 0..rng.gen_range(0..=self.max_yields) {
            thread::yield_now();
        }
    }
}

// task word: depth in the high 32 bits
impl TaskHandler for DelayedTree {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        self.pause();
        self.visits.fetch_add(1, Ordering::Relaxed);
        cx.add_work(1);
        let depth = task.0 >> 32;
        Begin::new(if depth < self.depth { self.fanout as usize } else { 0 }, depth)
    }

    fn unit(&self, _task: Task, depth: u64, _index: usize, cx: &mut WorkerContext) {
        cx.push(Task((depth + 1) << 32));
    }

    fn end(&self, _task: Task, _carry: u64, _cx: &mut WorkerContext) {
        self.pause();
    }
}

/// Runs the tree workload once on a fresh queue. Returns (visits, expected).
pub fn delayed_tree_run(cfg: &SchedulerConfig, fanout: u64, depth: u64, max_yields: u32) -> (u64, u64) {
    let h = DelayedTree::new(fanout, depth, cfg.seed, max_yields);
    let q = TaskQueue::new(1 << 16).unwrap();
    q.push_bulk(&[Task(0)]).unwrap();
    let stats = scheduler::run(&q, &h, cfg).expect("run");
    assert_eq!(q.size(), 0);
    assert!(q.try_quiesce().is_some());
    assert_eq!(stats.work_items, h.visits.load(Ordering::Relaxed));
    (h.visits.load(Ordering::Relaxed), h.size())
}

/// Runs `f` on a helper thread and waits at most `limit` for it.
pub fn with_watchdog<T: Send + 'static>(limit: Duration, f: impl FnOnce() -> T + Send + 'static) -> Option<T> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let _ = tx.send(f());
    });
    rx.recv_timeout(limit).ok()
}

pub fn queue_modes() -> [Mode; 2] {
    [Mode::Persistent, Mode::Discrete]
}
