//! Breadth-first search by atomic-min relaxation.
//!
//! The bulk-synchronous version expands one level per iteration. The relaxed
//! version pushes every improved vertex onto the shared queue immediately;
//! a vertex reached first through a longer path is corrected later by a
//! smaller `fetch_min` and pushed again.

use std::sync::atomic::{AtomicU32, Ordering};

use super::{require_queue_mode, AppError, Violation};
use crate::graph::{Graph, VertexId};
use crate::metrics::RunStats;
use crate::queue::{Task, TaskQueue};
use crate::scheduler::{self, Begin, Phase, PhaseInput, SchedulerConfig, TaskHandler, WorkerContext};

pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug)]
pub struct BfsState {
    pub source: VertexId,
    pub dist: Vec<AtomicU32>,
}

impl BfsState {
    pub fn new(num_vertices: usize, source: VertexId) -> Self {
        let dist: Vec<AtomicU32> = (0..num_vertices).map(|_| AtomicU32::new(UNREACHED)).collect();
        dist[source as usize].store(0, Ordering::Relaxed);
        BfsState { source, dist }
    }

    pub fn distances(&self) -> Vec<u32> {
        self.dist.iter().map(|d| d.load(Ordering::Relaxed)).collect()
    }
}

struct Relax<'a> {
    g: &'a Graph,
    dist: &'a [AtomicU32],
}

impl TaskHandler for Relax<'_> {
    fn begin(&self, task: Task, _cx: &mut WorkerContext) -> Begin {
        let v = task.id();
        Begin::new(self.g.degree(v), self.dist[v as usize].load(Ordering::Acquire) as u64)
    }

    #[inline]
    fn unit(&self, task: Task, carry: u64, index: usize, cx: &mut WorkerContext) {
        let u = self.g.neighbor(task.id(), index);
        let candidate = carry as u32 + 1;
        let prev = self.dist[u as usize].fetch_min(candidate, Ordering::AcqRel);
        if candidate < prev {
            cx.push(Task::vertex(u));
        }
        cx.add_work(1);
    }
}

fn check_source(g: &Graph, source: VertexId) -> Result<(), AppError> {
    if (source as usize) < g.num_vertices() {
        Ok(())
    } else {
        Err(AppError::SourceOutOfRange {
            vertex: source,
            num_vertices: g.num_vertices(),
        })
    }
}

/// Level-synchronous BFS: one frontier per iteration, joined between levels.
pub fn bfs_bsp(g: &Graph, source: VertexId, cfg: &SchedulerConfig) -> Result<(BfsState, RunStats), AppError> {
    check_source(g, source)?;
    let state = BfsState::new(g.num_vertices(), source);
    let relax = Relax { g, dist: &state.dist };
    let phases = [Phase {
        input: PhaseInput::Frontier,
        handler: &relax,
    }];
    let stats = scheduler::run_bsp(
        g.num_vertices(),
        &phases,
        vec![Task::vertex(source)],
        TaskQueue::default_capacity(g.num_vertices()),
        cfg,
        &mut |_| {},
    )?;
    Ok((state, stats))
}

/// Speculative BFS over the shared queue (`persistent` or `discrete`).
pub fn bfs_relaxed(g: &Graph, source: VertexId, cfg: &SchedulerConfig) -> Result<(BfsState, RunStats), AppError> {
    check_source(g, source)?;
    require_queue_mode("bfs", cfg.mode)?;
    let state = BfsState::new(g.num_vertices(), source);
    let q = TaskQueue::new(TaskQueue::default_capacity(g.num_vertices())).map_err(scheduler::SchedError::from)?;
    q.push_bulk(&[Task::vertex(source)])
        .map_err(scheduler::SchedError::from)?;
    let relax = Relax { g, dist: &state.dist };
    let stats = scheduler::run(&q, &relax, cfg)?;
    debug_assert_eq!(q.size(), 0);
    Ok((state, stats))
}

/// Number of edges leaving vertices with a finite distance.
pub fn reachable_edges(g: &Graph, dist: &[u32]) -> u64 {
    (0..g.num_vertices() as VertexId)
        .filter(|&v| dist[v as usize] != UNREACHED)
        .map(|v| g.degree(v) as u64)
        .sum()
}

/// Compares `dist` with a serial FIFO traversal from `source`.
pub fn verify_bfs(dist: &[u32], g: &Graph, source: VertexId) -> Result<(), Violation> {
    if dist.len() != g.num_vertices() {
        return Err(Violation::global("distance array length", g.num_vertices(), dist.len()));
    }
    if source as usize >= g.num_vertices() {
        return Err(Violation::global("source in range", g.num_vertices(), source));
    }
    let oracle = g.bfs_distances(source);
    match oracle.iter().zip(dist).position(|(a, b)| a != b) {
        None => Ok(()),
        Some(v) => Err(Violation::at("bfs distance", v as u32, oracle[v], dist[v])),
    }
}
