//! Coloring overwork on an RMAT graph before and after relabeling vertices.
//!
//! cargo run --release --example coloring_permutation -- [scale] [workers]

use relaxsched::apps::{coloring_bsp, coloring_relaxed, verify_coloring};
use relaxsched::graph::gen_rmat;
use relaxsched::{Mode, SchedulerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scale: u32 = args.next().map_or(Ok(14), |s| s.parse())?;
    let workers: usize = args.next().map_or(Ok(4), |w| w.parse())?;
    let g = gen_rmat(scale, 16, 1)?.symmetrize();
    let (permuted, _) = g.permute_ids(1);
    println!(
        "rmat scale {scale}: {} vertices, max degree {}",
        g.num_vertices(),
        g.max_degree()
    );

    for (label, graph) in [("original ids", &g), ("permuted ids", &permuted)] {
        let (s, _) = coloring_bsp(graph, &SchedulerConfig::new(Mode::Bsp, workers, 32, 1))?;
        println!("{label}: bsp uses {} colors", s.num_colors());
        for (mode, group, fetch) in [
            (Mode::Persistent, 1, 8),
            (Mode::Persistent, 64, 32),
            (Mode::Discrete, 64, 32),
        ] {
            let (s, stats) = coloring_relaxed(graph, &SchedulerConfig::new(mode, workers, group, fetch))?;
            verify_coloring(&s.colors(), graph)?;
            println!(
                "  {mode:<10} g{group:<3} colors {:>3}  overwork {:.4}",
                s.num_colors(),
                stats.work_items as f64 / graph.num_vertices() as f64
            );
        }
    }
    Ok(())
}
