//! Push-based PageRank with per-vertex residues.
//!
//! Every vertex starts with rank `1-λ`. Its residue is seeded with one
//! synchronous push from that uniform start: each edge `v -> u` adds
//! `λ(1-λ)/deg(v)` to `residue[u]`. Processing a vertex moves its residue into
//! its rank and spreads `λ·res/deg` to each out-neighbor. A vertex without
//! out-edges keeps the residue in its rank and distributes nothing; the
//! `λ·res` it would have spread is booked in `dangling` so that
//!
//! `Σ rank + (Σ residue + Σ outbox + Σ dangling) / (1-λ)`
//!
//! is unchanged by every single vertex push. `outbox` holds mass taken from
//! a residue but not yet spread; only the bulk-synchronous form uses it.
//! The fixed point is the unnormalized PageRank `x = (1-λ) + λ·Pᵀx`.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{accurate_sum, require_queue_mode, AppError, AtomicF64, Violation};
use crate::graph::{Graph, VertexId};
use crate::metrics::RunStats;
use crate::queue::{Task, TaskQueue};
use crate::scheduler::{self, Begin, Phase, PhaseInput, SchedError, SchedulerConfig, TaskHandler, WorkerContext};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrParams {
    /// Damping factor in (0, 1).
    pub lambda: f64,
    /// A vertex is active while its residue exceeds this.
    pub epsilon: f64,
    /// Vertices inspected by the check cursor per processed vertex.
    pub check_size: usize,
}

impl Default for PrParams {
    fn default() -> Self {
        PrParams {
            lambda: 0.85,
            epsilon: 1e-6,
            check_size: 1,
        }
    }
}

impl PrParams {
    pub fn validate(&self) -> Result<(), AppError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(AppError::InvalidParameter(format!(
                "lambda {} not in (0,1)",
                self.lambda
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(AppError::InvalidParameter(format!(
                "epsilon {} must be > 0",
                self.epsilon
            )));
        }
        if self.check_size == 0 {
            return Err(AppError::InvalidParameter("check_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Rank L1 error bound for a terminated run: `|V|·ε/(1-λ)`.
    pub fn l1_bound(&self, num_vertices: usize) -> f64 {
        num_vertices as f64 * self.epsilon / (1.0 - self.lambda)
    }
}

#[derive(Debug)]
pub struct PrState {
    pub params: PrParams,
    pub rank: Vec<AtomicF64>,
    pub residue: Vec<AtomicF64>,
    /// Mass taken in the current BSP iteration and not yet distributed.
    pub outbox: Vec<AtomicF64>,
    /// Mass dropped at vertices without out-edges.
    pub dangling: Vec<AtomicF64>,
    pub check_cursor: AtomicU64,
    initial_ledger: f64,
}

impl PrState {
    pub fn new(g: &Graph, params: PrParams) -> Self {
        let n = g.num_vertices();
        let lambda = params.lambda;
        let rank: Vec<AtomicF64> = (0..n).map(|_| AtomicF64::new(1.0 - lambda)).collect();
        let mut residue = vec![0.0f64; n];
        for v in 0..n as VertexId {
            let deg = g.degree(v);
            if deg == 0 {
                continue;
            }
            let share = lambda * (1.0 - lambda) / deg as f64;
            for &u in g.neighbors(v) {
                residue[u as usize] += share;
            }
        }
        let mut state = PrState {
            params,
            rank,
            residue: residue.into_iter().map(AtomicF64::new).collect(),
            outbox: (0..n).map(|_| AtomicF64::new(0.0)).collect(),
            dangling: (0..n).map(|_| AtomicF64::new(0.0)).collect(),
            check_cursor: AtomicU64::new(0),
            initial_ledger: 0.0,
        };
        state.initial_ledger = state.ledger();
        state
    }

    pub fn ranks(&self) -> Vec<f64> {
        self.rank.iter().map(AtomicF64::load).collect()
    }

    pub fn residues(&self) -> Vec<f64> {
        self.residue.iter().map(AtomicF64::load).collect()
    }

    pub fn max_residue(&self) -> f64 {
        self.residue.iter().map(AtomicF64::load).fold(0.0, f64::max)
    }

    /// `Σ rank + (Σ residue + Σ outbox + Σ dangling) / (1-λ)`.
    pub fn ledger(&self) -> f64 {
        let scale = 1.0 / (1.0 - self.params.lambda);
        accurate_sum(
            self.rank
                .iter()
                .map(AtomicF64::load)
                .chain(self.residue.iter().map(|r| r.load() * scale))
                .chain(self.outbox.iter().map(|o| o.load() * scale))
                .chain(self.dangling.iter().map(|d| d.load() * scale)),
        )
    }

    pub fn initial_ledger(&self) -> f64 {
        self.initial_ledger
    }

    /// Relative change of the ledger since initialization.
    pub fn ledger_drift(&self) -> f64 {
        let init = self.initial_ledger;
        if init == 0.0 {
            self.ledger().abs()
        } else {
            ((self.ledger() - init) / init).abs()
        }
    }
}

type Audit<'a> = &'a (dyn Fn(&PrState, u64) + Sync);

/// Moves one vertex's residue into its rank and spreads it to neighbors.
/// With `check` set it also runs the rotating convergence check.
struct Push<'a> {
    g: &'a Graph,
    state: &'a PrState,
    check: bool,
    executed: AtomicU64,
    audit: Option<(u64, Audit<'a>)>,
}

impl<'a> Push<'a> {
    fn new(g: &'a Graph, state: &'a PrState, check: bool) -> Self {
        Push {
            g,
            state,
            check,
            executed: AtomicU64::new(0),
            audit: None,
        }
    }
}

impl TaskHandler for Push<'_> {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        let v = task.id();
        let res = self.state.residue[v as usize].swap(0.0);
        if res == 0.0 {
            return Begin::default();
        }
        cx.add_work(1);
        self.state.rank[v as usize].fetch_add(res);
        let lambda = self.state.params.lambda;
        let deg = self.g.degree(v);
        if deg == 0 {
            self.state.dangling[v as usize].fetch_add(lambda * res);
            return Begin::default();
        }
        Begin::new(deg, (res * lambda / deg as f64).to_bits())
    }

    #[inline]
    fn unit(&self, task: Task, carry: u64, index: usize, _cx: &mut WorkerContext) {
        let u = self.g.neighbor(task.id(), index);
        self.state.residue[u as usize].fetch_add(f64::from_bits(carry));
    }

    fn end(&self, _task: Task, _carry: u64, cx: &mut WorkerContext) {
        if self.check {
            let n = self.state.residue.len() as u64;
            let size = self.state.params.check_size as u64;
            let start = self.state.check_cursor.fetch_add(size, Ordering::Relaxed);
            for k in 0..size {
                let id = ((start + k) % n) as usize;
                if self.state.residue[id].load() > self.state.params.epsilon {
                    cx.push(Task::vertex(id as VertexId));
                }
            }
        }
        if let Some((every, audit)) = self.audit {
            let done = self.executed.fetch_add(1, Ordering::Relaxed) + 1;
            if done.is_multiple_of(every) {
                audit(self.state, done);
            }
        }
    }
}

/// BSP phase 1: move each frontier residue into rank and the outbox.
struct Take<'a> {
    g: &'a Graph,
    state: &'a PrState,
}

impl TaskHandler for Take<'_> {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        let v = task.id() as usize;
        let res = self.state.residue[v].swap(0.0);
        if res == 0.0 {
            return Begin::default();
        }
        cx.add_work(1);
        self.state.rank[v].fetch_add(res);
        let spread = self.state.params.lambda * res;
        if self.g.degree(task.id()) == 0 {
            self.state.dangling[v].fetch_add(spread);
        } else {
            self.state.outbox[v].fetch_add(spread);
        }
        Begin::default()
    }
}

/// BSP phase 2: distribute each outbox evenly over the out-edges.
struct Spread<'a> {
    g: &'a Graph,
    state: &'a PrState,
}

impl TaskHandler for Spread<'_> {
    fn begin(&self, task: Task, _cx: &mut WorkerContext) -> Begin {
        let out = self.state.outbox[task.id() as usize].swap(0.0);
        if out == 0.0 {
            return Begin::default();
        }
        let deg = self.g.degree(task.id());
        Begin::new(deg, (out / deg as f64).to_bits())
    }

    #[inline]
    fn unit(&self, task: Task, carry: u64, index: usize, _cx: &mut WorkerContext) {
        let u = self.g.neighbor(task.id(), index);
        self.state.residue[u as usize].fetch_add(f64::from_bits(carry));
    }
}

/// Appends every vertex whose residue exceeds ε.
struct Filter<'a> {
    state: &'a PrState,
}

impl TaskHandler for Filter<'_> {
    fn begin(&self, task: Task, cx: &mut WorkerContext) -> Begin {
        if self.state.residue[task.id() as usize].load() > self.state.params.epsilon {
            cx.push(task);
        }
        Begin::default()
    }
}

fn all_vertices(g: &Graph) -> Vec<Task> {
    (0..g.num_vertices() as VertexId).map(Task::vertex).collect()
}

/// Synchronous iterations over the frontier: take every frontier residue,
/// join, spread the taken mass, join, then collect every vertex whose
/// residue exceeds ε as the next frontier. Residue added during an
/// iteration is not pushed until the next one.
pub fn pagerank_bsp(g: &Graph, params: PrParams, cfg: &SchedulerConfig) -> Result<(PrState, RunStats), AppError> {
    pagerank_bsp_observed(g, params, cfg, &mut |_, _| {})
}

/// [`pagerank_bsp`] calling `observer` after every iteration.
pub fn pagerank_bsp_observed(
    g: &Graph,
    params: PrParams,
    cfg: &SchedulerConfig,
    observer: &mut dyn FnMut(&PrState, u64),
) -> Result<(PrState, RunStats), AppError> {
    params.validate()?;
    let state = PrState::new(g, params);
    let take = Take { g, state: &state };
    let spread = Spread { g, state: &state };
    let filter = Filter { state: &state };
    let phases = [
        Phase {
            input: PhaseInput::Frontier,
            handler: &take,
        },
        Phase {
            input: PhaseInput::Frontier,
            handler: &spread,
        },
        Phase {
            input: PhaseInput::AllItems,
            handler: &filter,
        },
    ];
    let stats = scheduler::run_bsp(
        g.num_vertices(),
        &phases,
        all_vertices(g),
        TaskQueue::default_capacity(g.num_vertices()),
        cfg,
        &mut |round| observer(&state, round),
    )?;
    Ok((state, stats))
}

/// Fused asynchronous PageRank over the shared queue.
///
/// Each processed vertex also advances a global check cursor by
/// `check_size` (wrapping over `|V|`) and queues the vertices it passes whose
/// residue exceeds ε. After quiescence a sequential sweep requeues any vertex
/// still above ε and the workers resume, so every residue is at most ε on
/// return.
pub fn pagerank_relaxed(g: &Graph, params: PrParams, cfg: &SchedulerConfig) -> Result<(PrState, RunStats), AppError> {
    run_relaxed(g, params, cfg, None)
}

/// [`pagerank_relaxed`] calling `audit` after every `every` vertex tasks.
/// The state passed to `audit` is only a consistent snapshot when the run
/// has one worker.
pub fn pagerank_relaxed_audited(
    g: &Graph,
    params: PrParams,
    cfg: &SchedulerConfig,
    every: u64,
    audit: Audit<'_>,
) -> Result<(PrState, RunStats), AppError> {
    if every == 0 {
        return Err(AppError::InvalidParameter("audit interval must be >= 1".into()));
    }
    run_relaxed(g, params, cfg, Some((every, audit)))
}

fn run_relaxed(
    g: &Graph,
    params: PrParams,
    cfg: &SchedulerConfig,
    audit: Option<(u64, Audit<'_>)>,
) -> Result<(PrState, RunStats), AppError> {
    params.validate()?;
    require_queue_mode("pagerank", cfg.mode)?;
    let state = PrState::new(g, params);
    let q = TaskQueue::new(TaskQueue::default_capacity(g.num_vertices())).map_err(SchedError::from)?;
    let mut push = Push::new(g, &state, true);
    push.audit = audit;

    let mut seed = all_vertices(g);
    let mut stats: Option<RunStats> = None;
    while !seed.is_empty() {
        q.push_bulk(&seed).map_err(SchedError::from)?;
        let mut run = scheduler::run(&q, &push, cfg)?;
        run.tasks_pushed += seed.len() as u64;
        match stats.as_mut() {
            None => stats = Some(run),
            Some(s) => s.absorb(run),
        }
        seed = (0..g.num_vertices())
            .filter(|&v| state.residue[v].load() > params.epsilon)
            .map(|v| Task::vertex(v as VertexId))
            .collect();
    }
    Ok((state, stats.unwrap_or_default()))
}

/// Dense power iteration for `x = (1-λ) + λ·Pᵀx` with dangling mass dropped.
pub fn dense_pagerank(g: &Graph, lambda: f64, tol: f64, max_iters: usize) -> Vec<f64> {
    let n = g.num_vertices();
    let mut x = vec![1.0 - lambda; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iters {
        next.iter_mut().for_each(|y| *y = 1.0 - lambda);
        for v in 0..n as VertexId {
            let deg = g.degree(v);
            if deg == 0 {
                continue;
            }
            let share = lambda * x[v as usize] / deg as f64;
            for &u in g.neighbors(v) {
                next[u as usize] += share;
            }
        }
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta <= tol {
            break;
        }
    }
    x
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Checks a finished run: every residue at most ε and the ledger balanced
/// within `1e-9` relative.
pub fn verify_pagerank(state: &PrState) -> Result<(), Violation> {
    let eps = state.params.epsilon;
    if let Some(v) = state.residue.iter().position(|r| r.load() > eps) {
        return Err(Violation::at(
            "residue <= epsilon",
            v as u32,
            format!("<= {eps:e}"),
            state.residue[v].load(),
        ));
    }
    let drift = state.ledger_drift();
    if drift > 1e-9 {
        return Err(Violation::global("conservation ledger drift", "<= 1e-9", drift));
    }
    Ok(())
}

/// Offline check of a rank vector against [`dense_pagerank`], within the
/// `|V|·ε/(1-λ)` L1 bound.
pub fn verify_pagerank_ranks(ranks: &[f64], g: &Graph, params: &PrParams) -> Result<(), Violation> {
    if ranks.len() != g.num_vertices() {
        return Err(Violation::global("rank array length", g.num_vertices(), ranks.len()));
    }
    let oracle = dense_pagerank(g, params.lambda, 1e-13 * g.num_vertices().max(1) as f64, 10_000);
    let bound = params.l1_bound(g.num_vertices()) + 1e-9 * g.num_vertices() as f64;
    let dist = l1_distance(ranks, &oracle);
    if dist > bound {
        let worst = (0..ranks.len())
            .max_by(|&a, &b| (ranks[a] - oracle[a]).abs().total_cmp(&(ranks[b] - oracle[b]).abs()))
            .unwrap_or(0);
        return Err(Violation {
            what: "rank L1 distance to power iteration",
            vertex: Some(worst as u32),
            expected: format!("<= {bound:e} (oracle {} at worst vertex)", oracle[worst]),
            got: format!("{dist:e} (rank {})", ranks[worst]),
        });
    }
    Ok(())
}

/// Single-threaded replay used to check the ledger after each vertex push.
#[doc(hidden)]
pub fn replay_push(g: &Graph, state: &PrState, v: VertexId) {
    let push = Push::new(g, state, false);
    let mut cx = WorkerContext::new(0);
    scheduler::group_execute(&push, &[Task::vertex(v)], 1, &mut cx);
}
