//! Runtime over a group size x fetch size grid, printed as a table.
//!
//! cargo run --release --example sweep_heatmap -- [graph] [app]

use relaxsched::apps::App;
use relaxsched::cli::{prepare_graph, sweep, RunSpec};
use relaxsched::Mode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "synth:grid:256x256".into());
    let app: App = args.next().map_or(Ok(App::Bfs), |a| a.parse())?;
    let g = prepare_graph(&source, "auto", app == App::Coloring, false, 1)?;
    let mut spec = RunSpec::new(app, Mode::Persistent, &source);
    spec.workers = 4;
    spec.repeats = 3;
    let groups = [1, 8, 32, 64, 128, 256];
    let fetches = [1, 2, 4, 8, 16, 32];
    let rows = sweep(&g, &spec, &groups, &fetches, |_| {})?;

    print!("{:>8}", "g \\ f");
    fetches.iter().for_each(|f| print!("{f:>9}"));
    println!();
    for (i, g) in groups.iter().enumerate() {
        print!("{g:>8}");
        for r in &rows[i * fetches.len()..(i + 1) * fetches.len()] {
            match r.run_ms {
                Some(ms) => print!("{ms:>9.2}"),
                None => print!("{:>9}", "-"),
            }
        }
        println!();
    }
    Ok(())
}
