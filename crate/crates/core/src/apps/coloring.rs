//! Speculative greedy coloring with conflict repair.
//!
//! An assign step gives a vertex the smallest color not used by any
//! neighbor it can currently see. Two neighbors assigned concurrently may
//! pick the same color; a check step afterwards finds such pairs and sends
//! the larger endpoint back for reassignment. Self-loops are ignored.

use std::sync::atomic::{AtomicBool, AtomicI32, AtomicU64, Ordering};

use super::{require_queue_mode, AppError, Violation};
use crate::graph::{Graph, VertexId};
use crate::metrics::RunStats;
use crate::queue::{Task, TaskQueue};
use crate::scheduler::{self, Begin, Phase, PhaseInput, SchedError, SchedulerConfig, TaskHandler, WorkerContext};

pub const UNCOLORED: i32 = -1;

#[derive(Debug)]
pub struct ColorState {
    pub color: Vec<AtomicI32>,
    /// Set while an assign task for the vertex is queued and not started.
    pub pending: Vec<AtomicBool>,
    pub assignments: AtomicU64,
    pub checks: AtomicU64,
}

impl ColorState {
    pub fn new(num_vertices: usize) -> Self {
        ColorState {
            color: (0..num_vertices).map(|_| AtomicI32::new(UNCOLORED)).collect(),
            pending: (0..num_vertices).map(|_| AtomicBool::new(false)).collect(),
            assignments: AtomicU64::new(0),
            checks: AtomicU64::new(0),
        }
    }

    pub fn colors(&self) -> Vec<i32> {
        self.color.iter().map(|c| c.load(Ordering::Relaxed)).collect()
    }

    pub fn num_colors(&self) -> usize {
        palette_size(&self.colors())
    }

    pub fn assignments(&self) -> u64 {
        self.assignments.load(Ordering::Relaxed)
    }
}

/// Number of distinct non-negative colors.
pub fn palette_size(colors: &[i32]) -> usize {
    let mut seen: Vec<i32> = colors.iter().copied().filter(|&c| c >= 0).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

struct Colorer<'a> {
    g: &'a Graph,
    state: &'a ColorState,
    /// Relaxed mode: assign and check tasks share one queue, told apart by
    /// the tag bit.
    relaxed: bool,
}

impl Colorer<'_> {
    /// Smallest color not used by a neighbor right now.
    fn pick(&self, v: VertexId, cx: &mut WorkerContext) -> usize {
        let deg = self.g.degree(v);
        let words = (deg + 1).div_ceil(64);
        let forbidden = &mut cx.scratch;
        forbidden.clear();
        forbidden.resize(words, 0);
        for &u in self.g.neighbors(v) {
            if u == v {
                continue;
            }
            let c = self.state.color[u as usize].load(Ordering::SeqCst);
            if c >= 0 && (c as usize) <= deg {
                forbidden[c as usize / 64] |= 1 << (c as usize % 64);
            }
        }
        for (i, w) in forbidden.iter().enumerate() {
            if *w != u64::MAX {
                return i * 64 + w.trailing_ones() as usize;
            }
        }
        deg
    }

    fn requeue(&self, v: VertexId, cx: &mut WorkerContext) {
        if !self.state.pending[v as usize].swap(true, Ordering::AcqRel) {
            cx.push(Task::vertex(v));
        }
    }
}

// An assign picks its color in `begin` and stores it in `end`. With more
// than one lane, every assign of a batch reads neighbor colors before any of
// them is stored, as lanes running in lockstep would.
impl TaskHandler for Colorer<'_> {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        let v = task.id();
        if task.is_tagged() {
            self.state.checks.fetch_add(1, Ordering::Relaxed);
            let c = self.state.color[v as usize].load(Ordering::SeqCst);
            return Begin::new(self.g.degree(v), c as u32 as u64);
        }
        if self.relaxed {
            self.state.pending[v as usize].store(false, Ordering::SeqCst);
        }
        Begin::new(0, self.pick(v, cx) as u64)
    }

    #[inline]
    fn unit(&self, task: Task, carry: u64, index: usize, cx: &mut WorkerContext) {
        let v = task.id();
        let u = self.g.neighbor(v, index);
        if u == v || self.state.color[u as usize].load(Ordering::SeqCst) != carry as u32 as i32 {
            return;
        }
        if self.relaxed {
            self.requeue(v.max(u), cx);
        } else if u < v {
            // both endpoints are in this frontier; each sees the other
            self.requeue(v, cx);
        }
    }

    fn end(&self, task: Task, carry: u64, cx: &mut WorkerContext) {
        if task.is_tagged() {
            return;
        }
        let v = task.id();
        self.state.color[v as usize].store(carry as i32, Ordering::SeqCst);
        self.state.assignments.fetch_add(1, Ordering::Relaxed);
        cx.add_work(1);
        if self.relaxed {
            cx.push(Task::tagged(v));
        }
    }
}

fn check_symmetric(g: &Graph) -> Result<(), AppError> {
    for u in 0..g.num_vertices() as VertexId {
        if let Some(&v) = g.neighbors(u).iter().find(|&&v| !g.has_edge(v, u)) {
            return Err(AppError::NotSymmetric(u, v));
        }
    }
    Ok(())
}

fn all_vertices(g: &Graph) -> Vec<Task> {
    (0..g.num_vertices() as VertexId).map(Task::vertex).collect()
}

/// Per iteration: assign every frontier vertex, join, then check every
/// frontier vertex. Vertices that lose a conflict form the next frontier.
pub fn coloring_bsp(g: &Graph, cfg: &SchedulerConfig) -> Result<(ColorState, RunStats), AppError> {
    check_symmetric(g)?;
    let state = ColorState::new(g.num_vertices());
    let assign = Colorer {
        g,
        state: &state,
        relaxed: false,
    };
    let check = Checker(&assign);
    let phases = [
        Phase {
            input: PhaseInput::Frontier,
            handler: &assign,
        },
        Phase {
            input: PhaseInput::Frontier,
            handler: &check,
        },
    ];
    let stats = scheduler::run_bsp(
        g.num_vertices(),
        &phases,
        all_vertices(g),
        TaskQueue::default_capacity(g.num_vertices()),
        cfg,
        &mut |_| {
            for p in &state.pending {
                p.store(false, Ordering::Relaxed);
            }
        },
    )?;
    Ok((state, stats))
}

/// Runs the check step on untagged frontier tasks.
struct Checker<'a>(&'a Colorer<'a>);

impl TaskHandler for Checker<'_> {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        self.0.begin(Task::tagged(task.id()), cx)
    }

    fn unit(&self, task: Task, carry: u64, index: usize, cx: &mut WorkerContext) {
        self.0.unit(task, carry, index, cx)
    }
}

/// Assign and check tasks interleaved on the shared queue. Each assign
/// queues its own check; a check that finds a conflict queues an assign for
/// the larger endpoint unless one is already waiting.
pub fn coloring_relaxed(g: &Graph, cfg: &SchedulerConfig) -> Result<(ColorState, RunStats), AppError> {
    check_symmetric(g)?;
    require_queue_mode("coloring", cfg.mode)?;
    let state = ColorState::new(g.num_vertices());
    for p in &state.pending {
        p.store(true, Ordering::Relaxed);
    }
    let q = TaskQueue::new(TaskQueue::default_capacity(g.num_vertices())).map_err(SchedError::from)?;
    let seed = all_vertices(g);
    q.push_bulk(&seed).map_err(SchedError::from)?;
    let h = Colorer {
        g,
        state: &state,
        relaxed: true,
    };
    let mut stats = scheduler::run(&q, &h, cfg)?;
    stats.tasks_pushed += seed.len() as u64;
    Ok((state, stats))
}

/// Every vertex colored, no edge between distinct vertices of equal color,
/// and at most `max_degree + 1` colors.
pub fn verify_coloring(colors: &[i32], g: &Graph) -> Result<(), Violation> {
    if colors.len() != g.num_vertices() {
        return Err(Violation::global("color array length", g.num_vertices(), colors.len()));
    }
    if let Some(v) = colors.iter().position(|&c| c < 0) {
        return Err(Violation::at("vertex colored", v as u32, ">= 0", colors[v]));
    }
    for u in 0..g.num_vertices() as VertexId {
        for &v in g.neighbors(u) {
            if u != v && colors[u as usize] == colors[v as usize] {
                return Err(Violation::at(
                    "proper coloring",
                    u,
                    format!("color != {} (neighbor {v})", colors[v as usize]),
                    colors[u as usize],
                ));
            }
        }
    }
    let limit = g.max_degree() + 1;
    let used = palette_size(colors);
    if used > limit {
        return Err(Violation::global("palette size <= max degree + 1", limit, used));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_grid, gen_rmat};
    use crate::scheduler::Mode;

    fn cfg(mode: Mode, workers: usize, group: usize, fetch: usize) -> SchedulerConfig {
        SchedulerConfig::new(mode, workers, group, fetch)
    }

    fn configs() -> Vec<SchedulerConfig> {
        vec![
            cfg(Mode::Persistent, 1, 1, 1),
            cfg(Mode::Persistent, 4, 32, 8),
            cfg(Mode::Discrete, 3, 8, 4),
        ]
    }

    #[test]
    fn edgeless_uses_one_color() {
        let g = Graph::from_edges(6, vec![]).unwrap();
        let (s, stats) = coloring_bsp(&g, &cfg(Mode::Bsp, 2, 1, 1)).unwrap();
        assert_eq!(s.colors(), vec![0; 6]);
        assert_eq!(stats.rounds, 1);
        for c in configs() {
            let (s, _) = coloring_relaxed(&g, &c).unwrap();
            assert_eq!(s.colors(), vec![0; 6]);
        }
    }

    #[test]
    fn triangle_needs_three() {
        let g = Graph::from_edges(3, vec![(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]).unwrap();
        let (s, _) = coloring_bsp(&g, &cfg(Mode::Bsp, 1, 1, 1)).unwrap();
        verify_coloring(&s.colors(), &g).unwrap();
        assert_eq!(s.num_colors(), 3);
    }

    #[test]
    fn self_loops_ignored() {
        let g = Graph::from_edges(2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        let (s, _) = coloring_relaxed(&g, &cfg(Mode::Persistent, 1, 1, 1)).unwrap();
        verify_coloring(&s.colors(), &g).unwrap();
        assert_eq!(s.colors(), vec![0, 1]);
    }

    #[test]
    fn grid_palette_bound() {
        let g = gen_grid(30, 30).unwrap();
        let (s, _) = coloring_bsp(&g, &cfg(Mode::Bsp, 3, 16, 1)).unwrap();
        verify_coloring(&s.colors(), &g).unwrap();
        assert!(s.num_colors() <= 5);
        for c in configs() {
            let (s, stats) = coloring_relaxed(&g, &c).unwrap();
            verify_coloring(&s.colors(), &g).unwrap();
            assert!(s.num_colors() <= 5);
            assert_eq!(stats.work_items, s.assignments());
            assert!(s.assignments() >= g.num_vertices() as u64);
        }
    }

    #[test]
    fn serial_relaxed_assigns_each_vertex_once() {
        let g = gen_rmat(9, 8, 5).unwrap().symmetrize();
        let (s, _) = coloring_relaxed(&g, &cfg(Mode::Persistent, 1, 1, 1)).unwrap();
        verify_coloring(&s.colors(), &g).unwrap();
        assert_eq!(s.assignments(), g.num_vertices() as u64);
    }

    #[test]
    fn rmat_all_modes_valid() {
        for seed in 0..5 {
            let g = gen_rmat(10, 8, seed).unwrap().symmetrize();
            let (s, _) = coloring_bsp(&g, &cfg(Mode::Bsp, 4, 32, 1)).unwrap();
            verify_coloring(&s.colors(), &g).unwrap();
            for c in configs() {
                let (s, _) = coloring_relaxed(&g, &c.with_seed(seed)).unwrap();
                verify_coloring(&s.colors(), &g).unwrap();
            }
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let g = Graph::from_edges(3, vec![(0, 1), (1, 0), (1, 2)]).unwrap();
        assert!(matches!(
            coloring_bsp(&g, &cfg(Mode::Bsp, 1, 1, 1)),
            Err(AppError::NotSymmetric(1, 2))
        ));
    }

    #[test]
    fn verify_catches_conflicts() {
        let g = gen_grid(2, 2).unwrap();
        assert!(verify_coloring(&[0, 1, 1, 0], &g).is_ok());
        let v = verify_coloring(&[0, 0, 1, 0], &g).unwrap_err();
        assert_eq!(v.vertex, Some(0));
        assert!(verify_coloring(&[0, 1, -1, 0], &g).is_err());
        let tri = Graph::from_edges(3, vec![(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]).unwrap();
        assert_eq!(verify_coloring(&[0, 0, 1], &tri).unwrap_err().vertex, Some(0));
        // palette too large for a 4-cycle (max degree 2)
        assert!(verify_coloring(&[0, 1, 2, 3], &g).is_err());
    }
}
