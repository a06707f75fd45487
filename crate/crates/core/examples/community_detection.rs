//! Louvain and Walktrap on two 5-cliques joined by a single edge.
//!
//! ```text
//! cargo run --example community_detection
//! ```

use polarimeter::community::{cluster, modularity, ClusterMethod};
use polarimeter::graph::UndirectedGraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((4, 5, 1.0));
    let graph = UndirectedGraph::from_edges(10, edges);

    for method in [ClusterMethod::Louvain, ClusterMethod::Walktrap] {
        let partition = cluster(&graph, method, 7)?;
        println!(
            "{method:?}: {} communities {:?}, Q = {:.4}",
            partition.community_count(),
            partition.members(),
            modularity(&graph, partition.assignment())?
        );
    }
    Ok(())
}
