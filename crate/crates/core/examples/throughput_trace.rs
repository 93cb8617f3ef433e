//! Sampled work counters turned into raw and normalized throughput.
//!
//! cargo run --release --example throughput_trace -- [trace.csv]

use std::time::Duration;

use relaxsched::apps::{bfs_relaxed, reachable_edges};
use relaxsched::graph::gen_rmat;
use relaxsched::metrics::{integrate, normalized_throughput, overwork, throughput, write_trace, THROUGHPUT_WINDOW};
use relaxsched::{Mode, SchedulerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1);
    let g = gen_rmat(16, 16, 1)?;
    let cfg = SchedulerConfig::new(Mode::Persistent, 4, 32, 8).with_sampling(Duration::from_micros(200));
    let (s, stats) = bfs_relaxed(&g, 0, &cfg)?;
    let baseline = reachable_edges(&g, &s.distances());
    let ratio = overwork(stats.work_items, baseline)?.ratio;
    let raw = throughput(&stats.trace, THROUGHPUT_WINDOW);
    let norm = normalized_throughput(&raw, ratio);
    println!(
        "{} samples over {:.2} ms, overwork {ratio:.4}, useful work integrates to {:.0} of {baseline}",
        stats.trace.samples.len(),
        stats.run_ms(),
        integrate(&norm)
    );
    for (r, n) in raw.iter().zip(&norm).take(20) {
        println!(
            "{:>8} us  {:>12.0} units/s  {:>12.0} useful/s",
            r.elapsed_us, r.throughput, n.throughput
        );
    }
    if let Some(path) = out {
        write_trace(&path, &stats.trace)?;
        println!("wrote {path}");
    }
    Ok(())
}
