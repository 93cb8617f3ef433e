//! Loading, generating and relabeling graphs.
//!
//! cargo run --release --example load_graph -- [path.mtx | edges.txt | synth:...]

use relaxsched::graph::{load_graph, parse_matrix_market};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sources: Vec<String> = match std::env::args().nth(1) {
        Some(s) => vec![s],
        None => vec!["synth:grid:64x64".into(), "synth:rmat:12:16".into()],
    };
    for source in &sources {
        let g = load_graph(source, "auto", 7)?;
        let (p, perm) = g.permute_ids(7);
        println!(
            "{source}: |V| {} |E| {} avg degree {:.2} max out {} max in {} symmetric {} pseudo-diameter {}",
            g.num_vertices(),
            g.num_edges(),
            g.average_degree(),
            g.max_degree(),
            g.max_in_degree(),
            g.is_symmetric(),
            g.pseudo_diameter(4)
        );
        assert_eq!(p.degree_multiset(), g.degree_multiset());
        println!("  vertex 0 is {} after permuting", perm.forward[0]);
    }

    let text = "%%MatrixMarket matrix coordinate pattern symmetric\n4 4 3\n2 1\n3 2\n4 3\n";
    let path = parse_matrix_market(text)?;
    println!(
        "inline path graph: |E| {} (symmetric entries mirrored)",
        path.num_edges()
    );
    Ok(())
}
