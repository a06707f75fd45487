//! Runs every pipeline stage from a TOML configuration, writing the stage
//! artifacts to a temporary directory.
//!
//! ```text
//! cargo run --release --example pipeline_from_config -- [config.toml]
//! ```
//!
//! Without an argument, `examples/data/pipeline.toml` is used with a freshly
//! generated synthetic discussion as input.

use std::path::PathBuf;

use polarimeter::eval::{generate_discussion, SynthParams};
use polarimeter::pipeline::{self, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = match std::env::args().nth(1) {
        Some(path) => PipelineConfig::from_toml_file(path.as_ref())?,
        None => {
            let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/pipeline.toml");
            PipelineConfig::from_toml_file(&path)?
        }
    };
    let dir = std::env::temp_dir().join("polarimeter-pipeline-example");
    std::fs::create_dir_all(&dir)?;
    if config.inputs.is_empty() {
        let input = dir.join("input.jsonl");
        generate_discussion(&SynthParams::controversial(config.seed))?.write_jsonl(&input)?;
        config.inputs = vec![input];
    }
    config.output_dir = dir.join("out");

    let result = pipeline::run_pipeline(&config);
    match &result {
        Ok(report) => println!("{}", serde_json::to_string_pretty(report)?),
        Err(e) => eprintln!("error: {e}"),
    }
    println!(
        "artifacts in {}, exit code {}",
        config.output_dir.display(),
        pipeline::exit_code(&result)
    );
    Ok(())
}
