//! Driving the scheduler with an application-defined handler.
//!
//! Each task is a number; it is split into two halves until it reaches 1.
//! The work units of a task are its children, so with several lanes the
//! pushes of a batch are spread across lanes.

use std::sync::atomic::{AtomicU64, Ordering};

use relaxsched::scheduler::run;
use relaxsched::{Begin, Mode, SchedulerConfig, Task, TaskHandler, TaskQueue, WorkerContext};

struct Split {
    leaves: AtomicU64,
}

impl TaskHandler for Split {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        cx.add_work(1);
        if task.0 <= 1 {
            self.leaves.fetch_add(1, Ordering::Relaxed);
            return Begin::default();
        }
        Begin::new(2, task.0)
    }

    fn unit(&self, _task: Task, n: u64, half: usize, cx: &mut WorkerContext) {
        let lo = n / 2;
        cx.push(Task(if half == 0 { lo } else { n - lo }));
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 100_000u64;
    for mode in [Mode::Persistent, Mode::Discrete] {
        let q = TaskQueue::new(1 << 20)?;
        q.push_bulk(&[Task(n)])?;
        let h = Split {
            leaves: AtomicU64::new(0),
        };
        let stats = run(&q, &h, &SchedulerConfig::new(mode, 4, 8, 16))?;
        assert_eq!(h.leaves.load(Ordering::Relaxed), n);
        let token = q.try_quiesce().expect("queue is quiescent after run");
        println!(
            "{mode}: {} tasks, {} rounds, high water {}, pushed {} popped {}",
            stats.work_items, stats.rounds, stats.queue_high_water, token.pushed_total, token.popped_total
        );
    }
    Ok(())
}
