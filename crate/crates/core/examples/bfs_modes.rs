//! BFS on the same graph in all three execution modes.
//!
//! cargo run --release --example bfs_modes -- [graph] [workers]

use relaxsched::apps::{bfs_bsp, bfs_relaxed, reachable_edges, verify_bfs};
use relaxsched::graph::load_graph;
use relaxsched::metrics::overwork;
use relaxsched::{Mode, SchedulerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "synth:grid:256x256".into());
    let workers: usize = args.next().map_or(Ok(4), |w| w.parse())?;
    let g = load_graph(&source, "auto", 1)?;
    println!("{source}: {} vertices, {} edges", g.num_vertices(), g.num_edges());

    let (bsp, stats) = bfs_bsp(&g, 0, &SchedulerConfig::new(Mode::Bsp, workers, 32, 1))?;
    let baseline = reachable_edges(&g, &bsp.distances());
    println!("{:<24} {:>9} {:>7} {:>9}", "config", "ms", "rounds", "overwork");
    println!("{:<24} {:>9.2} {:>7} {:>9.4}", "bsp", stats.run_ms(), stats.rounds, 1.0);

    for (mode, group, fetch) in [
        (Mode::Persistent, 1, 8),
        (Mode::Persistent, 32, 32),
        (Mode::Persistent, 256, 32),
        (Mode::Discrete, 64, 32),
        (Mode::Discrete, 1, 1),
    ] {
        let cfg = SchedulerConfig::new(mode, workers, group, fetch);
        let (s, stats) = bfs_relaxed(&g, 0, &cfg)?;
        verify_bfs(&s.distances(), &g, 0)?;
        let r = overwork(stats.work_items, baseline.max(1))?;
        let name = format!("{mode} g{group} f{fetch}");
        println!(
            "{name:<24} {:>9.2} {:>7} {:>9.4}",
            stats.run_ms(),
            stats.rounds,
            r.ratio
        );
    }
    Ok(())
}
