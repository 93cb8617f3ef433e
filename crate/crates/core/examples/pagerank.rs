//! Bulk-synchronous and relaxed PageRank compared against power iteration.
//!
//! cargo run --release --example pagerank -- [graph] [epsilon]

use relaxsched::apps::pagerank::l1_distance;
use relaxsched::apps::{dense_pagerank, pagerank_bsp, pagerank_relaxed, verify_pagerank, PrParams};
use relaxsched::graph::load_graph;
use relaxsched::{Mode, SchedulerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "synth:rmat:12:16".into());
    let epsilon: f64 = args.next().map_or(Ok(1e-6), |e| e.parse())?;
    let g = load_graph(&source, "auto", 1)?;
    let params = PrParams {
        epsilon,
        ..Default::default()
    };
    let oracle = dense_pagerank(&g, params.lambda, 1e-12, 10_000);
    println!("bound per run: L1 <= {:.3e}", params.l1_bound(g.num_vertices()));

    let (bsp, stats) = pagerank_bsp(&g, params, &SchedulerConfig::new(Mode::Bsp, 4, 32, 1))?;
    verify_pagerank(&bsp)?;
    println!(
        "bsp         {:>8.2} ms  iterations {:>4}  pushes {:>8}  L1 {:.3e}  drift {:.1e}",
        stats.run_ms(),
        stats.rounds,
        stats.work_items,
        l1_distance(&bsp.ranks(), &oracle),
        bsp.ledger_drift()
    );
    for mode in [Mode::Persistent, Mode::Discrete] {
        let (s, st) = pagerank_relaxed(&g, params, &SchedulerConfig::new(mode, 4, 32, 8))?;
        verify_pagerank(&s)?;
        println!(
            "{mode:<11} {:>8.2} ms  overwork {:.3}  pushes {:>8}  L1 {:.3e}  drift {:.1e}",
            st.run_ms(),
            st.work_items as f64 / stats.work_items as f64,
            st.work_items,
            l1_distance(&s.ranks(), &oracle),
            s.ledger_drift()
        );
    }
    let mut top: Vec<(usize, f64)> = bsp.ranks().into_iter().enumerate().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("top vertices: {:?}", &top[..top.len().min(5)]);
    Ok(())
}
