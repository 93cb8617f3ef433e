//! Task-parallel dynamic scheduling for irregular graph computations.
//!
//! The crate pairs a shared bounded task queue with a scheduler that can run
//! application code in three ways: persistent workers that loop until the
//! queue goes quiet, discrete rounds with a barrier between them, or classic
//! bulk-synchronous frontiers. Workers can be given several lanes, in which
//! case the edge work of a fetched batch is balanced across lanes with a
//! prefix sum.
//!
//! Three applications are included, each in a bulk-synchronous and a
//! relaxed-barrier form: breadth-first search, push-based PageRank and
//! speculative greedy coloring. [`metrics`] measures overwork and
//! throughput; [`cli`] drives runs and parameter sweeps.

pub mod apps;
pub mod cli;
pub mod graph;
pub mod metrics;
pub mod queue;
pub mod scheduler;

pub use graph::{Graph, GraphError, Permutation, VertexId};
pub use metrics::{OverworkReport, RunStats};
pub use queue::{QueueError, QuiescenceToken, Task, TaskQueue};
pub use scheduler::{Begin, Mode, SchedError, SchedulerConfig, TaskHandler, WorkerContext};
