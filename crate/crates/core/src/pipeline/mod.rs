//! File-based pipeline: every stage reads the previous stage's artifacts
//! from the output directory and writes its own.

pub mod artifacts;

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::{self, ClassifierConfig, ClassifierError};
use crate::community::{self, ClusterMethod, CommunityError};
use crate::corpus::{self, CorpusError, EmojiLexicon, Sanitizer, UserDocument};
use crate::discussion::{DiscussionError, PreparedDiscussion, RunReport, ScoreOptions, Scorer};
use crate::graph::{self, GraphError, RetweetGraph};
use crate::ingest::{self, DatasetStats, IngestError, InteractionRecord, MaxChars, ParseMode, TopicFilter};
use crate::polarity::{self, ApplicabilityReport};
use artifacts::{CORPUS, DOCUMENTS, GRAPH, GRAPH_SUMMARY, MODEL, NODES, PARTITION, RECORDS, REPORT};

pub const EXIT_SCORED: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_APPLICABLE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing {}: run `polarimeter {producer}` first", path.display())]
    MissingArtifact { path: PathBuf, producer: &'static str },
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Discussion(#[from] DiscussionError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<GraphError> for PipelineError {
    fn from(e: GraphError) -> Self {
        Self::Discussion(e.into())
    }
}

impl From<CommunityError> for PipelineError {
    fn from(e: CommunityError) -> Self {
        Self::Discussion(e.into())
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        Self::Discussion(e.into())
    }
}

impl From<ClassifierError> for PipelineError {
    fn from(e: ClassifierError) -> Self {
        Self::Discussion(e.into())
    }
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Discussion(DiscussionError::NotApplicable(_)) => EXIT_NOT_APPLICABLE,
            Self::Discussion(e) if e.is_degenerate() => EXIT_DEGENERATE,
            _ => EXIT_FAILURE,
        }
    }
}

/// Every pipeline parameter; loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub hashtags: Vec<String>,
    pub keywords: Vec<String>,
    pub from: Option<i64>,
    pub to: Option<i64>,
    /// 140, 280, or absent for no truncation.
    pub max_chars: Option<usize>,
    pub cluster: ClusterMethod,
    pub classifier: ClassifierConfig,
    pub n_runs: usize,
    pub characteristic_threshold: f64,
    pub min_degree: u64,
    pub applicability_runs: usize,
    pub tolerance: f64,
    pub max_iters: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub emoji_lexicon: Option<PathBuf>,
    pub lowercase: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            hashtags: Vec::new(),
            keywords: Vec::new(),
            from: None,
            to: None,
            max_chars: None,
            cluster: ClusterMethod::Louvain,
            classifier: ClassifierConfig::default(),
            n_runs: 20,
            characteristic_threshold: polarity::CHARACTERISTIC_THRESHOLD,
            min_degree: 3,
            applicability_runs: polarity::DEFAULT_APPLICABILITY_RUNS,
            tolerance: polarity::DEFAULT_TOLERANCE,
            max_iters: polarity::DEFAULT_MAX_ITERS,
            output_dir: PathBuf::from("polarimeter-out"),
            seed: 0,
            emoji_lexicon: None,
            lowercase: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 over the configuration, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn max_chars(&self) -> Result<MaxChars, PipelineError> {
        Ok(MaxChars::from_limit(self.max_chars)?)
    }

    /// `None` when no hashtag or keyword is configured (keep every record).
    pub fn topic_filter(&self) -> Result<Option<TopicFilter>, PipelineError> {
        if self.hashtags.is_empty() && self.keywords.is_empty() {
            if self.from.is_some() || self.to.is_some() {
                return Err(PipelineError::Config("a time window needs a hashtag or keyword".into()));
            }
            return Ok(None);
        }
        let window = (self.from.unwrap_or(i64::MIN), self.to.unwrap_or(i64::MAX));
        Ok(Some(TopicFilter::new(
            &self.hashtags,
            &self.keywords,
            window,
            self.max_chars()?,
        )?))
    }

    pub fn sanitizer(&self) -> Result<Sanitizer, PipelineError> {
        let lexicon = match &self.emoji_lexicon {
            Some(path) => EmojiLexicon::from_path(path)?,
            None => EmojiLexicon::bundled(),
        };
        Ok(Sanitizer::new(lexicon).with_lowercase(self.lowercase))
    }

    pub fn score_options(&self) -> Result<ScoreOptions, PipelineError> {
        Ok(ScoreOptions {
            method: self.cluster,
            classifier: self.classifier.clone(),
            n_runs: self.n_runs,
            seed: self.seed,
            threshold: self.characteristic_threshold,
            applicability_runs: self.applicability_runs,
            min_degree: self.min_degree,
            tolerance: self.tolerance,
            max_iters: self.max_iters,
            sanitizer: self.sanitizer()?,
        })
    }

    /// Checks everything that can be checked before any work is done.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.score_options()?.validate()?;
        self.max_chars()?;
        self.topic_filter()?;
        Ok(())
    }

    fn dir(&self) -> &Path {
        &self.output_dir
    }
}

/// Reads and filters every input file.
pub fn load_inputs(config: &PipelineConfig) -> Result<ingest::LoadOutcome, PipelineError> {
    if config.inputs.is_empty() {
        return Err(PipelineError::Config("no input files given".into()));
    }
    let filter = config.topic_filter()?;
    let max_chars = config.max_chars()?;
    let mut all = ingest::LoadOutcome::default();
    for path in &config.inputs {
        let outcome = match &filter {
            Some(f) => ingest::load_records(path, f, ParseMode::Lenient)?,
            None => ingest::read_records(path, max_chars, ParseMode::Lenient)?,
        };
        all.records.extend(outcome.records);
        all.malformed += outcome.malformed;
        all.filtered_out += outcome.filtered_out;
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub stats: DatasetStats,
    pub malformed: usize,
    pub filtered_out: usize,
}

pub fn ingest_stats(config: &PipelineConfig) -> Result<IngestSummary, PipelineError> {
    let outcome = load_inputs(config)?;
    Ok(IngestSummary {
        stats: ingest::dataset_stats(&outcome.records),
        malformed: outcome.malformed,
        filtered_out: outcome.filtered_out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub records: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    /// Size of the largest weakly connected component before pruning.
    pub component_nodes: usize,
    /// `component_nodes / graph_nodes`; reported, never used as a gate.
    pub component_fraction: f64,
    pub root_nodes: usize,
    pub root_edges: usize,
}

/// Writes the filtered records, the root-graph edge list and its node list.
pub fn build_graph_stage(config: &PipelineConfig) -> Result<GraphSummary, PipelineError> {
    config.validate()?;
    let hash = config.hash();
    std::fs::create_dir_all(config.dir())?;
    let outcome = load_inputs(config)?;
    let mut out = RECORDS.create(config.dir(), &hash)?;
    for r in &outcome.records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let full = graph::build_graph(&outcome.records);
    let root = graph::root_graph(&full, config.min_degree)?;
    let mut out = GRAPH.create(config.dir(), &hash)?;
    graph::write_edges(&root.graph, &mut out)?;
    out.flush()?;
    let mut out = NODES.create(config.dir(), &hash)?;
    graph::write_nodes(&root.graph, &mut out)?;
    out.flush()?;
    let summary = GraphSummary {
        records: outcome.records.len(),
        graph_nodes: full.node_count(),
        graph_edges: full.edge_count(),
        component_nodes: root.component_size,
        component_fraction: root.component_size as f64 / full.node_count().max(1) as f64,
        root_nodes: root.graph.node_count(),
        root_edges: root.graph.edge_count(),
    };
    let file = File::create(GRAPH_SUMMARY.path(config.dir()))?;
    serde_json::to_writer_pretty(file, &summary).map_err(std::io::Error::from)?;
    Ok(summary)
}

fn read_root_graph(config: &PipelineConfig, hash: &str) -> Result<RetweetGraph, PipelineError> {
    let nodes = graph::read_nodes(NODES.open(config.dir(), hash)?)?;
    Ok(graph::read_edges(GRAPH.open(config.dir(), hash)?, &nodes)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub method: ClusterMethod,
    pub communities: usize,
    pub modularity: f64,
    pub c1_size: usize,
    pub c2_size: usize,
}

/// Clusters the root-graph with the run-0 seed and writes the partition.
pub fn cluster_stage(config: &PipelineConfig) -> Result<ClusterSummary, PipelineError> {
    config.validate()?;
    let hash = config.hash();
    let graph = read_root_graph(config, &hash)?;
    let options = config.score_options()?;
    let partition = community::cluster(&graph.undirected(), config.cluster, options.cluster_seed(0))?;
    let mut out = PARTITION.create(config.dir(), &hash)?;
    community::write_partition(&partition, graph.nodes(), &mut out)?;
    out.flush()?;
    let (c1_size, c2_size) = match community::principal_pair(&partition, graph.nodes()) {
        Ok(p) => (p.c1_users.len(), p.c2_users.len()),
        Err(_) => (partition.node_count(), 0),
    };
    Ok(ClusterSummary {
        method: config.cluster,
        communities: partition.community_count(),
        modularity: partition.modularity,
        c1_size,
        c2_size,
    })
}

fn write_documents<W: Write>(docs: &[UserDocument], out: &mut W) -> std::io::Result<()> {
    for d in docs {
        writeln!(out, "{}\t{}\t{}", d.user_id, d.source_tweet_count, d.text)?;
    }
    Ok(())
}

fn read_documents<R: BufRead>(input: R) -> Result<Vec<UserDocument>, PipelineError> {
    let mut docs = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CorpusError::Parse {
            line: idx + 1,
            message: "expected user<TAB>count<TAB>text".into(),
        };
        let mut parts = line.splitn(3, '\t');
        let (Some(user), Some(count), Some(text)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad().into());
        };
        docs.push(UserDocument {
            user_id: user.to_owned(),
            source_tweet_count: count.parse().map_err(|_| bad())?,
            text: text.to_owned(),
        });
    }
    Ok(docs)
}

fn read_records_artifact(config: &PipelineConfig) -> Result<Vec<InteractionRecord>, PipelineError> {
    let path = RECORDS.require(config.dir())?;
    Ok(ingest::read_records(&path, MaxChars::Unlimited, ParseMode::FailFast)?.records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub documents: usize,
    pub per_class: usize,
    pub vocabulary: usize,
    pub epoch_losses: Vec<f64>,
}

/// Builds the root users' documents and the run-0 corpus, then trains the
/// run-0 model.
pub fn train_stage(config: &PipelineConfig) -> Result<TrainSummary, PipelineError> {
    config.validate()?;
    let hash = config.hash();
    let options = config.score_options()?;
    let graph = read_root_graph(config, &hash)?;
    let partition = community::read_partition(
        PARTITION.open(config.dir(), &hash)?,
        &graph.undirected(),
        graph.nodes(),
        config.cluster,
    )?;
    let records = read_records_artifact(config)?;
    let deduped = corpus::dedupe(&records, &options.sanitizer);
    let docs = corpus::build_user_documents(&deduped, graph.nodes(), &options.sanitizer);
    let mut out = DOCUMENTS.create(config.dir(), &hash)?;
    write_documents(&docs, &mut out)?;
    out.flush()?;

    let prepared = PreparedDiscussion::new(graph, docs);
    let scorer = Scorer::new(&prepared, &options, partition);
    let corpus = scorer.base_corpus()?;
    let mut out = CORPUS.create(config.dir(), &hash)?;
    corpus.write_tsv(&mut out)?;
    out.flush()?;
    let (model, report) = classifier::train_with_report(&corpus, &options.classifier.with_seed(options.train_seed(0)))?;
    classifier::save(&model, &MODEL.path(config.dir()))?;
    Ok(TrainSummary {
        documents: prepared.docs.len(),
        per_class: corpus.per_class(),
        vocabulary: model.vocabulary().len(),
        epoch_losses: report.epoch_losses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStatus {
    Scored,
    NotApplicable,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub artifact: String,
    pub version: u32,
    pub config_hash: String,
    pub status: PipelineStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub graph: Option<GraphSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub applicability: Option<ApplicabilityReport>,
}

impl PipelineReport {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            PipelineStatus::Scored => EXIT_SCORED,
            PipelineStatus::NotApplicable => EXIT_NOT_APPLICABLE,
        }
    }
}

/// Applicability check and the scoring runs; writes `report.json` for both
/// outcomes.
pub fn score_stage(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    config.validate()?;
    let hash = config.hash();
    let options = config.score_options()?;
    let graph = read_root_graph(config, &hash)?;
    let undirected = graph.undirected();
    let partition = community::read_partition(
        PARTITION.open(config.dir(), &hash)?,
        &undirected,
        graph.nodes(),
        config.cluster,
    )?;
    let docs = read_documents(DOCUMENTS.open(config.dir(), &hash)?)?;
    let model = classifier::load(&MODEL.require(config.dir())?)?;
    let prepared = PreparedDiscussion::new(graph, docs);
    let scorer = Scorer::new(&prepared, &options, partition);
    let mut report = PipelineReport {
        artifact: REPORT.kind.to_owned(),
        version: artifacts::ARTIFACT_VERSION,
        config_hash: hash,
        status: PipelineStatus::Scored,
        graph: read_graph_summary(config.dir()),
        score: None,
        applicability: None,
    };
    match scorer.score(Some(model)) {
        Ok(score) => {
            report.applicability = score.applicability.clone();
            report.score = Some(score);
        }
        Err(DiscussionError::NotApplicable(a)) => {
            report.status = PipelineStatus::NotApplicable;
            report.applicability = Some(*a);
        }
        Err(e) => return Err(e.into()),
    }
    let file = File::create(REPORT.path(config.dir()))?;
    serde_json::to_writer_pretty(file, &report).map_err(std::io::Error::from)?;
    Ok(report)
}

/// The build-graph summary, if one was written.
fn read_graph_summary(dir: &Path) -> Option<GraphSummary> {
    let file = File::open(GRAPH_SUMMARY.path(dir)).ok()?;
    serde_json::from_reader(BufReader::new(file)).ok()
}

pub fn read_report(dir: &Path) -> Result<PipelineReport, PipelineError> {
    let file = BufReader::new(File::open(REPORT.require(dir)?)?);
    serde_json::from_reader(file).map_err(|e| PipelineError::Io(e.into()))
}

/// All stages in order. A degenerate graph stops before clustering.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    config.validate()?;
    build_graph_stage(config)?;
    cluster_stage(config)?;
    train_stage(config)?;
    score_stage(config)
}

/// Exit code for a pipeline result: 0 scored, 2 not applicable,
/// 3 degenerate, 1 anything else.
pub fn exit_code(result: &Result<PipelineReport, PipelineError>) -> i32 {
    match result {
        Ok(r) => r.exit_code(),
        Err(e) => e.exit_code(),
    }
}
