//! Bounded multi-producer/multi-consumer task queue.
//!
//! Producers and consumers reserve contiguous ranges of logical positions by
//! compare-and-swap on the `tail` / `head` cursors, then fill or drain the
//! reserved slots. Every slot carries a sequence number so a consumer never
//! reads a slot whose producer has reserved but not yet written it, and a
//! producer never overwrites a slot from the previous lap that is still being
//! read.
//!
//! Termination is detected by counting: `in_flight` is the number of queued
//! tasks plus the number of workers holding (or acquiring) a batch. Pushes
//! raise it before they publish and [`TaskQueue::task_done`] lowers it only
//! after the worker's own pushes, so it can only read zero once no task exists
//! anywhere and no worker can create one.

use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crossbeam_utils::{Backoff, CachePadded};

/// 64-bit task word. Applications decide how to pack it; the queue only
/// moves it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Task(pub u64);

impl Task {
    const TAG_BIT: u64 = 1 << 63;

    #[inline]
    pub fn vertex(v: u32) -> Task {
        Task(v as u64)
    }

    /// Vertex task with the phase tag set.
    #[inline]
    pub fn tagged(v: u32) -> Task {
        Task(v as u64 | Self::TAG_BIT)
    }

    /// Low 32 bits.
    #[inline]
    pub fn id(self) -> u32 {
        self.0 as u32
    }

    #[inline]
    pub fn is_tagged(self) -> bool {
        self.0 & Self::TAG_BIT != 0
    }
}

impl fmt::Debug for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_tagged() {
            write!(f, "Task(#{}*)", self.id())
        } else {
            write!(f, "Task(#{})", self.id())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueueError {
    #[error("queue capacity must be at least 1")]
    ZeroCapacity,
    #[error("queue overflow: pushing {requested} onto {resident} resident tasks exceeds capacity {capacity} (high-water mark {high_water})")]
    Overflow {
        capacity: u64,
        requested: u64,
        resident: u64,
        high_water: u64,
    },
}

/// Proof that the queue was observed quiescent twice with no intervening push.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuiescenceToken {
    pub pushed_total: u64,
    pub popped_total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Snapshot {
    pushed: u64,
    popped: u64,
    active: usize,
    in_flight: u64,
}

impl Snapshot {
    fn is_quiet(&self) -> bool {
        self.in_flight == 0 && self.active == 0 && self.pushed == self.popped
    }
}

struct Slot {
    seq: AtomicU64,
    value: AtomicU64,
}

pub struct TaskQueue {
    slots: Box<[Slot]>,
    capacity: u64,
    head: CachePadded<AtomicU64>,
    tail: CachePadded<AtomicU64>,
    in_flight: CachePadded<AtomicU64>,
    active: CachePadded<AtomicUsize>,
    high_water: AtomicU64,
}

impl fmt::Debug for TaskQueue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskQueue")
            .field("capacity", &self.capacity)
            .field("pushed_total", &self.pushed_total())
            .field("popped_total", &self.popped_total())
            .field("active_workers", &self.active_workers())
            .finish()
    }
}

impl TaskQueue {
    pub fn new(capacity: usize) -> Result<Self, QueueError> {
        if capacity == 0 {
            return Err(QueueError::ZeroCapacity);
        }
        let slots = (0..capacity as u64)
            .map(|i| Slot {
                seq: AtomicU64::new(i),
                value: AtomicU64::new(0),
            })
            .collect();
        Ok(TaskQueue {
            slots,
            capacity: capacity as u64,
            head: CachePadded::new(AtomicU64::new(0)),
            tail: CachePadded::new(AtomicU64::new(0)),
            in_flight: CachePadded::new(AtomicU64::new(0)),
            active: CachePadded::new(AtomicUsize::new(0)),
            high_water: AtomicU64::new(0),
        })
    }

    /// Capacity used by the applications: `max(4·|V|, 2^20)` task words.
    pub fn default_capacity(num_vertices: usize) -> usize {
        (4 * num_vertices).max(1 << 20)
    }

    pub fn capacity(&self) -> usize {
        self.capacity as usize
    }

    /// Tasks pushed and not yet popped.
    pub fn size(&self) -> usize {
        let popped = self.head.load(Ordering::SeqCst);
        let pushed = self.tail.load(Ordering::SeqCst);
        pushed.saturating_sub(popped) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn pushed_total(&self) -> u64 {
        self.tail.load(Ordering::SeqCst)
    }

    pub fn popped_total(&self) -> u64 {
        self.head.load(Ordering::SeqCst)
    }

    pub fn active_workers(&self) -> usize {
        self.active.load(Ordering::SeqCst)
    }

    /// Largest resident task count seen so far.
    pub fn high_water(&self) -> u64 {
        self.high_water.load(Ordering::Relaxed)
    }

    #[inline]
    fn slot(&self, pos: u64) -> &Slot {
        &self.slots[(pos % self.capacity) as usize]
    }

    /// Appends `tasks`; they become poppable in order.
    ///
    /// Fails without side effects if the queue would exceed its capacity.
    pub fn push_bulk(&self, tasks: &[Task]) -> Result<(), QueueError> {
        if tasks.is_empty() {
            return Ok(());
        }
        let n = tasks.len() as u64;
        self.in_flight.fetch_add(n, Ordering::SeqCst);
        let mut tail = self.tail.load(Ordering::SeqCst);
        let start = loop {
            let head = self.head.load(Ordering::SeqCst);
            let resident = tail.saturating_sub(head);
            if resident + n > self.capacity {
                self.in_flight.fetch_sub(n, Ordering::SeqCst);
                return Err(QueueError::Overflow {
                    capacity: self.capacity,
                    requested: n,
                    resident,
                    high_water: self.high_water().max(resident),
                });
            }
            match self
                .tail
                .compare_exchange_weak(tail, tail + n, Ordering::SeqCst, Ordering::SeqCst)
            {
                Ok(_) => {
                    self.high_water.fetch_max(resident + n, Ordering::Relaxed);
                    break tail;
                }
                Err(current) => tail = current,
            }
        };
        for (i, task) in tasks.iter().enumerate() {
            let pos = start + i as u64;
            let slot = self.slot(pos);
            let backoff = Backoff::new();
            // wait for the previous lap's reader to release the slot
            while slot.seq.load(Ordering::Acquire) != pos {
                backoff.snooze();
            }
            slot.value.store(task.0, Ordering::Relaxed);
            slot.seq.store(pos + 1, Ordering::Release);
        }
        Ok(())
    }

    /// Removes up to `max_n` tasks into `out` (which is cleared first) and
    /// returns how many were taken.
    ///
    /// A nonempty result registers the caller as active; it must call
    /// [`task_done`](Self::task_done) after pushing any follow-up tasks.
    pub fn pop_bulk(&self, max_n: usize, out: &mut Vec<Task>) -> usize {
        assert!(max_n >= 1, "pop_bulk needs max_n >= 1");
        out.clear();
        // register before reserving so a quiescence check can never see the
        // reserved tasks gone while this worker looks idle
        self.active.fetch_add(1, Ordering::SeqCst);
        self.in_flight.fetch_add(1, Ordering::SeqCst);
        let mut head = self.head.load(Ordering::SeqCst);
        let (start, k) = loop {
            let tail = self.tail.load(Ordering::SeqCst);
            let k = (tail.saturating_sub(head)).min(max_n as u64);
            if k == 0 {
                self.in_flight.fetch_sub(1, Ordering::SeqCst);
                self.active.fetch_sub(1, Ordering::SeqCst);
                return 0;
            }
            match self
                .head
                .compare_exchange_weak(head, head + k, Ordering::SeqCst, Ordering::SeqCst)
            {
                Ok(_) => break (head, k),
                Err(current) => head = current,
            }
        };
        out.reserve(k as usize);
        for pos in start..start + k {
            let slot = self.slot(pos);
            let backoff = Backoff::new();
            while slot.seq.load(Ordering::Acquire) != pos + 1 {
                backoff.snooze();
            }
            out.push(Task(slot.value.load(Ordering::Relaxed)));
            slot.seq.store(pos + self.capacity, Ordering::Release);
        }
        self.in_flight.fetch_sub(k, Ordering::SeqCst);
        k as usize
    }

    /// Ends the batch obtained by the caller's last nonempty `pop_bulk`.
    ///
    /// # Panics
    /// If no worker holds a batch.
    pub fn task_done(&self) {
        let prev = self
            .active
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |a| a.checked_sub(1));
        assert!(prev.is_ok(), "task_done without a matching pop_bulk");
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
    }

    fn snapshot(&self) -> Snapshot {
        let in_flight = self.in_flight.load(Ordering::SeqCst);
        let active = self.active.load(Ordering::SeqCst);
        let popped = self.head.load(Ordering::SeqCst);
        let pushed = self.tail.load(Ordering::SeqCst);
        Snapshot {
            pushed,
            popped,
            active,
            in_flight,
        }
    }

    /// Returns a token if the queue is quiescent: empty, nobody holding a
    /// batch, and push/pop totals equal, observed twice with no push in
    /// between.
    pub fn try_quiesce(&self) -> Option<QuiescenceToken> {
        self.try_quiesce_with(|| {})
    }

    /// [`try_quiesce`](Self::try_quiesce) with `between` run between the two
    /// observations.
    pub fn try_quiesce_with(&self, between: impl FnOnce()) -> Option<QuiescenceToken> {
        let first = self.snapshot();
        if !first.is_quiet() {
            return None;
        }
        between();
        let second = self.snapshot();
        if !second.is_quiet() || second.pushed != first.pushed {
            return None;
        }
        Some(QuiescenceToken {
            pushed_total: second.pushed,
            popped_total: second.popped,
        })
    }
}
