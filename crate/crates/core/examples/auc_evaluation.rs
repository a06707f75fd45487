//! AUC-ROC over labelled scores, and over a manifest of discussion files.
//!
//! ```text
//! cargo run --release --example auc_evaluation
//! ```

use polarimeter::discussion::ScoreOptions;
use polarimeter::eval::{self, generate_discussion, GroundTruth, LabeledScore, SynthParams};
use polarimeter::ingest::MaxChars;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scores = [
        LabeledScore::new("c1", 0.7, GroundTruth::Controversial),
        LabeledScore::new("c2", 0.4, GroundTruth::Controversial),
        LabeledScore::new("n1", 0.5, GroundTruth::NonControversial),
        LabeledScore::new("n2", 0.2, GroundTruth::NonControversial),
    ];
    println!("hand-made scores: auc {:.3}", eval::auc_roc(&scores)?);

    // Two small synthetic discussions written to disk and listed in a manifest.
    let dir = std::env::temp_dir().join("polarimeter-auc-example");
    std::fs::create_dir_all(&dir)?;
    let small = |p: SynthParams| SynthParams {
        users_per_side: 150,
        ..p
    };
    generate_discussion(&small(SynthParams::controversial(3)))?.write_jsonl(&dir.join("hot.jsonl"))?;
    generate_discussion(&small(SynthParams::non_controversial(3)))?.write_jsonl(&dir.join("calm.jsonl"))?;
    std::fs::write(
        dir.join("manifest.csv"),
        "path,label\nhot.jsonl,controversial\ncalm.jsonl,non_controversial\n",
    )?;

    let options = ScoreOptions {
        n_runs: 3,
        ..Default::default()
    };
    let entries = eval::read_manifest(&dir.join("manifest.csv"))?;
    let report = eval::evaluate_manifest(&entries, MaxChars::Unlimited, &options)?;
    for s in &report.scores {
        println!("{:>10}: {:?} dmc {:.3} ({:?})", s.id, s.ground_truth, s.dmc, s.outcome);
    }
    println!("manifest auc {:.3}", report.auc);
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
