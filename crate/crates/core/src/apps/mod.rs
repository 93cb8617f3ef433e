//! Breadth-first search, PageRank and graph coloring, each in a
//! bulk-synchronous form and a relaxed-barrier form, with their oracles.

pub mod bfs;
pub mod coloring;
pub mod dump;
pub mod pagerank;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::scheduler::{Mode, SchedError};

pub use bfs::{bfs_bsp, bfs_relaxed, reachable_edges, verify_bfs, BfsState};
pub use coloring::{coloring_bsp, coloring_relaxed, verify_coloring, ColorState};
pub use pagerank::{
    dense_pagerank, pagerank_bsp, pagerank_bsp_observed, pagerank_relaxed, pagerank_relaxed_audited, verify_pagerank,
    verify_pagerank_ranks, PrParams, PrState,
};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error("source vertex {vertex} out of range for {num_vertices} vertices")]
    SourceOutOfRange { vertex: u32, num_vertices: usize },
    #[error("{app} needs mode persistent or discrete, got {mode}")]
    WrongMode { app: &'static str, mode: Mode },
    #[error("coloring needs a symmetric graph (edge {0}->{1} has no reverse)")]
    NotSymmetric(u32, u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum App {
    Bfs,
    PageRank,
    Coloring,
}

impl App {
    pub fn as_str(self) -> &'static str {
        match self {
            App::Bfs => "bfs",
            App::PageRank => "pagerank",
            App::Coloring => "coloring",
        }
    }
}

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for App {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bfs" => Ok(App::Bfs),
            "pagerank" => Ok(App::PageRank),
            "coloring" => Ok(App::Coloring),
            other => Err(format!("unknown app {other:?} (expected bfs, pagerank or coloring)")),
        }
    }
}

/// A failed oracle check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: &'static str,
    pub vertex: Option<u32>,
    pub expected: String,
    pub got: String,
}

impl Violation {
    pub fn at(what: &'static str, vertex: u32, expected: impl ToString, got: impl ToString) -> Self {
        Violation {
            what,
            vertex: Some(vertex),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub fn global(what: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Violation {
            what,
            vertex: None,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vertex {
            Some(v) => write!(
                f,
                "{} at vertex {v}: expected {}, got {}",
                self.what, self.expected, self.got
            ),
            None => write!(f, "{}: expected {}, got {}", self.what, self.expected, self.got),
        }
    }
}

impl std::error::Error for Violation {}

/// `f64` stored as bits in an `AtomicU64`.
#[derive(Debug, Default)]
#[repr(transparent)]
pub struct AtomicF64(AtomicU64);

impl AtomicF64 {
    pub fn new(x: f64) -> Self {
        AtomicF64(AtomicU64::new(x.to_bits()))
    }

    #[inline]
    pub fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }

    #[inline]
    pub fn store(&self, x: f64) {
        self.0.store(x.to_bits(), Ordering::Release)
    }

    #[inline]
    pub fn swap(&self, x: f64) -> f64 {
        f64::from_bits(self.0.swap(x.to_bits(), Ordering::AcqRel))
    }

    /// Returns the previous value.
    #[inline]
    pub fn fetch_add(&self, x: f64) -> f64 {
        let mut cur = self.0.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(cur) + x).to_bits();
            match self
                .0
                .compare_exchange_weak(cur, next, Ordering::AcqRel, Ordering::Relaxed)
            {
                Ok(prev) => return f64::from_bits(prev),
                Err(actual) => cur = actual,
            }
        }
    }
}

/// Compensated (Neumaier) sum.
pub fn accurate_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn require_queue_mode(app: &'static str, mode: Mode) -> Result<(), AppError> {
    match mode {
        Mode::Persistent | Mode::Discrete => Ok(()),
        Mode::Bsp => Err(AppError::WrongMode { app, mode }),
    }
}
