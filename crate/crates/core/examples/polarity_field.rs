//! Propagates two opposite seeds along a path and scores the field.
//!
//! ```text
//! cargo run --example polarity_field
//! ```

use polarimeter::graph::UndirectedGraph;
use polarimeter::polarity::{dmc, label_propagation, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 0 - 1 - 2 - 3 - 4 - 5 - 6, seeds at both ends.
    let graph = UndirectedGraph::from_edges(7, (0..6).map(|i| (i, i + 1, 1.0)));
    let field = label_propagation(&graph, &[(0, 1.0), (6, -1.0)], DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS)?;
    println!(
        "{} iterations, residual {:.1e}, converged {}",
        field.iterations, field.residual, field.converged
    );
    for (i, v) in field.values().iter().enumerate() {
        println!("  node {i}: {v:+.4}{}", if field.is_seed(i) { " (seed)" } else { "" });
    }
    let score = dmc(field.values())?;
    println!(
        "dmc {:.4} (delta_a {:.4}, tau {:.4}, +{} -{} zero {})",
        score.dmc, score.delta_a, score.tau, score.n_plus, score.n_minus, score.n_zero
    );
    Ok(())
}
