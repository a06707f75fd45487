//! Sweeps the cross-side retweet rate of a synthetic discussion and reports,
//! per rate, how well the principal communities match the planted sides and
//! the resulting score.
//!
//! ```text
//! cargo run --release --example degradation_sweep -- [louvain|walktrap] [runs]
//! ```

use polarimeter::community::{self, ClusterMethod};
use polarimeter::discussion::{prepare, DiscussionError, ScoreOptions, Scorer};
use polarimeter::eval::{generate_discussion, Side, SynthParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let method: ClusterMethod = args.next().as_deref().unwrap_or("louvain").parse()?;
    let n_runs: usize = args.next().as_deref().unwrap_or("5").parse()?;
    let options = ScoreOptions {
        method,
        n_runs,
        ..Default::default()
    };
    println!("cross  root  C1(A/B)    C2(A/B)    outcome");
    for cross in [0.0, 0.05, 0.1, 0.25, 0.5] {
        let params = SynthParams {
            cross_retweet_prob: cross,
            seed: 1,
            ..Default::default()
        };
        let discussion = generate_discussion(&params)?;
        let prepared = prepare(&discussion.records, &options)?;
        let scorer = Scorer::with_base_clustering(&prepared, &options)?;
        let sides = |users: &[String]| {
            let a = users.iter().filter(|u| discussion.membership[*u] == Side::A).count();
            format!("{a}/{}", users.len() - a)
        };
        let (c1, c2) = match community::principal_pair(scorer.base_partition(), prepared.node_ids()) {
            Ok(pair) => (sides(&pair.c1_users), sides(&pair.c2_users)),
            Err(_) => ("-".into(), "-".into()),
        };
        let outcome = match scorer.score(None) {
            Ok(r) => format!("dmc {:.3} ± {:.3}", r.dmc_mean, r.dmc_std),
            Err(DiscussionError::NotApplicable(r)) => {
                format!("not applicable ({}/{} runs pass)", r.passing_runs(), r.runs.len())
            }
            Err(e) => e.to_string(),
        };
        println!(
            "{cross:<5}  {:<4}  {c1:<9}  {c2:<9}  {outcome}",
            prepared.node_ids().len()
        );
    }
    Ok(())
}
