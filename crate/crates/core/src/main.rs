use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polarimeter::classifier::ClassifierConfig;
use polarimeter::community::ClusterMethod;
use polarimeter::eval::{self, SynthParams};
use polarimeter::pipeline::{self, PipelineConfig, PipelineError, EXIT_FAILURE};

#[derive(Parser)]
#[command(
    name = "polarimeter",
    version,
    about = "Text-based controversy scores for social-media discussions"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print record counts for the filtered input.
    IngestStats,
    /// Filter the input and write the root-graph.
    BuildGraph,
    /// Cluster the root-graph.
    Cluster,
    /// Build documents and the training corpus, then train the first model.
    Train,
    /// Applicability check and scoring runs; writes report.json.
    Score,
    /// All stages in order.
    Run,
    /// Score every discussion of a `path,label` manifest and print the AUC.
    Eval {
        manifest: PathBuf,
        /// Also write the per-discussion scores here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a synthetic discussion and its ground truth.
    Synth(SynthArgs),
    /// Time training plus prediction over growing corpora.
    Bench {
        /// Corpus sizes in kilobytes, ascending.
        #[arg(long, value_delimiter = ',', default_values_t = [256.0, 512.0, 1024.0, 2048.0])]
        sizes: Vec<f64>,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// File stem for `<name>.jsonl` and `<name>.truth` in the output directory.
    #[arg(long, default_value = "synthetic")]
    name: String,
    /// Authors per side; a single community has twice this many.
    #[arg(long, default_value_t = 500)]
    users_per_side: usize,
    /// Original tweets per author.
    #[arg(long, default_value_t = 15)]
    tweets_per_user: usize,
    /// Word ranks per side.
    #[arg(long, default_value_t = 2000)]
    vocab_size: usize,
    /// Fraction of vocabulary shared by both sides.
    #[arg(long, default_value_t = 0.2)]
    overlap: f64,
    /// Probability that a retweet targets the other side.
    #[arg(long, default_value_t = 0.02)]
    cross: f64,
    /// Mean retweets per author.
    #[arg(long, default_value_t = 6.0)]
    intra_mean: f64,
    /// One community with a shared vocabulary (non-controversial).
    #[arg(long)]
    single_community: bool,
}

#[derive(Args)]
struct Options {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input JSONL file (repeatable).
    #[arg(long = "input", global = true)]
    inputs: Vec<PathBuf>,
    /// Topic hashtag, without `#` (repeatable).
    #[arg(long = "hashtag", global = true)]
    hashtags: Vec<String>,
    /// Topic keyword, matched as a case-insensitive substring (repeatable).
    #[arg(long = "keyword", global = true)]
    keywords: Vec<String>,
    /// Window start (unix seconds).
    #[arg(long, global = true, allow_negative_numbers = true)]
    from: Option<i64>,
    /// Window end (unix seconds).
    #[arg(long, global = true, allow_negative_numbers = true)]
    to: Option<i64>,
    /// 140, 280 or "unlimited".
    #[arg(long, global = true)]
    max_chars: Option<String>,
    /// Emoji lexicon TSV (`emoji<TAB>word`) replacing the bundled table.
    #[arg(long, global = true)]
    emoji_lexicon: Option<PathBuf>,
    /// Keep letter case when sanitising.
    #[arg(long, global = true)]
    no_lowercase: bool,
    /// Output directory for stage artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scoring runs averaged into the score.
    #[arg(long, global = true)]
    n_runs: Option<usize>,
    /// "louvain" or "walktrap".
    #[arg(long, global = true)]
    cluster: Option<ClusterMethod>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Training epochs.
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Initial learning rate.
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// Longest word n-gram used as a feature.
    #[arg(long, global = true)]
    word_ngrams: Option<usize>,
    /// Minimum word count to enter the vocabulary.
    #[arg(long, global = true)]
    min_count: Option<usize>,
    /// Hash buckets for n-gram features.
    #[arg(long, global = true)]
    hash_buckets: Option<u64>,
    /// Training threads; more than one trades determinism for speed.
    #[arg(long, global = true)]
    train_threads: Option<usize>,
    /// Probability needed to seed a user.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Nodes with fewer weighted interactions are peeled.
    #[arg(long, global = true)]
    min_degree: Option<u64>,
    /// Trainings that must all yield seeds on both sides.
    #[arg(long, global = true)]
    applicability_runs: Option<usize>,
}

impl Options {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => PipelineConfig::default(),
        };
        if !self.inputs.is_empty() {
            c.inputs = self.inputs.clone();
        }
        if !self.hashtags.is_empty() {
            c.hashtags = self.hashtags.clone();
        }
        if !self.keywords.is_empty() {
            c.keywords = self.keywords.clone();
        }
        c.from = self.from.or(c.from);
        c.to = self.to.or(c.to);
        if let Some(m) = &self.max_chars {
            let parsed: polarimeter::ingest::MaxChars = m.parse()?;
            c.max_chars = parsed.limit();
        }
        c.emoji_lexicon = self.emoji_lexicon.clone().or(c.emoji_lexicon);
        c.lowercase &= !self.no_lowercase;
        c.output_dir = self.out.clone().unwrap_or(c.output_dir);
        c.seed = self.seed.unwrap_or(c.seed);
        c.n_runs = self.n_runs.unwrap_or(c.n_runs);
        c.cluster = self.cluster.unwrap_or(c.cluster);
        let k: &mut ClassifierConfig = &mut c.classifier;
        k.dim = self.dim.unwrap_or(k.dim);
        k.epochs = self.epochs.unwrap_or(k.epochs);
        k.lr = self.lr.unwrap_or(k.lr);
        k.word_ngrams = self.word_ngrams.unwrap_or(k.word_ngrams);
        k.min_count = self.min_count.unwrap_or(k.min_count);
        k.hash_buckets = self.hash_buckets.unwrap_or(k.hash_buckets);
        k.threads = self.train_threads.unwrap_or(k.threads);
        c.characteristic_threshold = self.threshold.unwrap_or(c.characteristic_threshold);
        c.min_degree = self.min_degree.unwrap_or(c.min_degree);
        c.applicability_runs = self.applicability_runs.unwrap_or(c.applicability_runs);
        c.validate()?;
        Ok(c)
    }
}

// Like `println!`, but a closed stdout (e.g. `| head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn print_json<T: Serialize>(value: &T) {
    say!("{}", serde_json::to_string_pretty(value).expect("serialisable"));
}

fn run(cli: Cli) -> Result<i32, Box<dyn std::error::Error>> {
    let config = cli.opts.config()?;
    match cli.command {
        Command::IngestStats => print_json(&pipeline::ingest_stats(&config)?),
        Command::BuildGraph => print_json(&pipeline::build_graph_stage(&config)?),
        Command::Cluster => print_json(&pipeline::cluster_stage(&config)?),
        Command::Train => print_json(&pipeline::train_stage(&config)?),
        Command::Score | Command::Run => {
            let report = if matches!(cli.command, Command::Run) {
                pipeline::run_pipeline(&config)?
            } else {
                pipeline::score_stage(&config)?
            };
            print_json(&report);
            return Ok(report.exit_code());
        }
        Command::Eval { manifest, report } => {
            let entries = eval::read_manifest(&manifest)?;
            let result = eval::evaluate_manifest(&entries, config.max_chars()?, &config.score_options()?)?;
            if let Some(path) = report {
                std::fs::write(path, serde_json::to_string_pretty(&result)?)?;
            }
            for s in &result.scores {
                say!("{}\t{:?}\t{:.4}\t{:?}", s.id, s.ground_truth, s.dmc, s.outcome);
            }
            say!("auc\t{:.4}", result.auc);
        }
        Command::Synth(args) => {
            let params = SynthParams {
                users_per_side: args.users_per_side,
                tweets_per_user: args.tweets_per_user,
                vocab_size: args.vocab_size,
                vocab_overlap: args.overlap,
                cross_retweet_prob: args.cross,
                intra_retweet_mean: args.intra_mean,
                single_community: args.single_community,
                seed: config.seed,
                ..SynthParams::default()
            };
            let discussion = eval::generate_discussion(&params)?;
            std::fs::create_dir_all(&config.output_dir)?;
            let jsonl = config.output_dir.join(format!("{}.jsonl", args.name));
            let truth = config.output_dir.join(format!("{}.truth", args.name));
            discussion.write_jsonl(&jsonl)?;
            discussion.write_ground_truth(&truth)?;
            say!(
                "{}: {} records ({} originals, {} retweets), ground truth in {}",
                jsonl.display(),
                discussion.records.len(),
                discussion.original_count,
                discussion.retweet_count,
                truth.display()
            );
        }
        Command::Bench { sizes } => {
            let report = eval::benchmark_scaling(&sizes, &config.classifier.with_seed(config.seed), config.seed);
            for p in &report.points {
                say!("{:>10.1} KB {:>8.3} s", p.size_kb, p.seconds);
            }
            match report.r_squared {
                Some(r2) => say!("linear fit: {:.3e} s/KB, R² = {r2:.4}", report.slope),
                None => say!("linear fit: not enough points"),
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("POLARIMETER_THREADS").ok().and_then(|v| v.parse().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e.downcast_ref::<PipelineError>() {
                Some(p) => p.exit_code(),
                None => EXIT_FAILURE,
            }
        }
    };
    ExitCode::from(code as u8)
}
