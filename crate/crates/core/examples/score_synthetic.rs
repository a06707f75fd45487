//! Generates a controversial and a non-controversial synthetic discussion
//! and scores both.
//!
//! ```text
//! cargo run --release --example score_synthetic -- [walktrap] [runs]
//! ```

use std::time::Instant;

use polarimeter::community::ClusterMethod;
use polarimeter::discussion::{score_discussion, DiscussionError, ScoreOptions};
use polarimeter::eval::{generate_discussion, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let method: ClusterMethod = args.next().as_deref().unwrap_or("louvain").parse()?;
    let n_runs: usize = args.next().as_deref().unwrap_or("5").parse()?;
    let options = ScoreOptions {
        method,
        n_runs,
        ..Default::default()
    };
    for (name, params) in [
        ("controversial", SynthParams::controversial(1)),
        ("non-controversial", SynthParams::non_controversial(1)),
    ] {
        let discussion = generate_discussion(&params)?;
        let start = Instant::now();
        match score_discussion(&discussion.records, &options) {
            Ok(report) => {
                println!(
                    "{name:>18}: dmc {:.3} ± {:.3} over {} runs, root {} nodes, {:.1}s",
                    report.dmc_mean,
                    report.dmc_std,
                    report.runs.len(),
                    report.root_nodes,
                    start.elapsed().as_secs_f64()
                );
                for r in &report.runs {
                    println!(
                        "    run {}: dmc {:.3} dA {:.3} tau {:.3} +{} -{} 0:{} seeds +{} -{}",
                        r.run, r.dmc, r.delta_a, r.tau, r.n_plus, r.n_minus, r.n_zero, r.seeds_plus, r.seeds_minus
                    );
                }
            }
            Err(DiscussionError::NotApplicable(report)) => {
                println!(
                    "{name:>18}: not applicable, {}/{} applicability runs found seeds on both sides ({:.1}s)",
                    report.passing_runs(),
                    report.runs.len(),
                    start.elapsed().as_secs_f64()
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
