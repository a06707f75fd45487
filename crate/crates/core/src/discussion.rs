//! End-to-end scoring of one discussion, repeated over seeded runs.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{self, ClassifierConfig, ClassifierError, TextClassifier};
use crate::community::{self, ClusterMethod, CommunityError, Partition};
use crate::corpus::{self, CorpusError, Sanitizer, TrainingCorpus, UserDocument};
use crate::graph::{self, GraphError, RetweetGraph, UndirectedGraph};
use crate::ingest::InteractionRecord;
use crate::polarity::{self, ApplicabilityReport, DmcScore, PolarityError};

#[derive(Debug, Error)]
pub enum DiscussionError {
    #[error("graph stage: {0}")]
    Graph(#[from] GraphError),
    #[error("discussion is not applicable: {} of {} trainings found characteristic users on both sides", .0.passing_runs(), .0.runs.len())]
    NotApplicable(Box<ApplicabilityReport>),
    #[error("community stage: {0}")]
    Community(#[from] CommunityError),
    #[error("corpus stage: {0}")]
    Corpus(#[from] CorpusError),
    #[error("classifier stage: {0}")]
    Classifier(#[from] ClassifierError),
    #[error("polarity stage: {0}")]
    Polarity(#[from] PolarityError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

impl DiscussionError {
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Self::Graph(GraphError::Degenerate { .. } | GraphError::EmptyGraph)
        )
    }
}

/// Independent random streams derived from the global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Cluster = 1,
    Sample = 2,
    Train = 3,
}

/// Seed for the `index`-th draw of `stream` (splitmix64 finaliser).
pub fn derive_seed(base: u64, stream: SeedStream, index: u64) -> u64 {
    let mut z = base
        .wrapping_add((stream as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    pub method: ClusterMethod,
    pub classifier: ClassifierConfig,
    pub n_runs: usize,
    pub seed: u64,
    pub threshold: f64,
    pub applicability_runs: usize,
    pub min_degree: u64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub sanitizer: Sanitizer,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            method: ClusterMethod::Louvain,
            classifier: ClassifierConfig::default(),
            n_runs: 20,
            seed: 0,
            threshold: polarity::CHARACTERISTIC_THRESHOLD,
            applicability_runs: polarity::DEFAULT_APPLICABILITY_RUNS,
            min_degree: 3,
            tolerance: polarity::DEFAULT_TOLERANCE,
            max_iters: polarity::DEFAULT_MAX_ITERS,
            sanitizer: Sanitizer::default(),
        }
    }
}

impl ScoreOptions {
    pub fn validate(&self) -> Result<(), DiscussionError> {
        self.classifier.validate()?;
        if self.n_runs == 0 {
            return Err(DiscussionError::InvalidOptions("n_runs must be at least 1".into()));
        }
        if self.applicability_runs == 0 {
            return Err(DiscussionError::InvalidOptions(
                "applicability_runs must be at least 1".into(),
            ));
        }
        if !(0.5..=1.0).contains(&self.threshold) {
            return Err(DiscussionError::InvalidOptions(format!(
                "threshold {} outside [0.5, 1]",
                self.threshold
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_iters == 0 {
            return Err(DiscussionError::InvalidOptions(
                "tolerance and max_iters must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn train_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, SeedStream::Train, run as u64)
    }

    pub fn sample_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, SeedStream::Sample, run as u64)
    }

    pub fn cluster_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, SeedStream::Cluster, run as u64)
    }

    pub fn train(&self, corpus: &TrainingCorpus, run: usize) -> Result<TextClassifier, ClassifierError> {
        classifier::train(corpus, &self.classifier.with_seed(self.train_seed(run)))
    }
}

/// Root-graph and the documents of its users.
#[derive(Debug, Clone)]
pub struct PreparedDiscussion {
    pub graph: RetweetGraph,
    pub undirected: UndirectedGraph,
    pub docs: Vec<UserDocument>,
}

impl PreparedDiscussion {
    pub fn new(graph: RetweetGraph, docs: Vec<UserDocument>) -> Self {
        Self {
            undirected: graph.undirected(),
            graph,
            docs,
        }
    }

    pub fn node_ids(&self) -> &[String] {
        self.graph.nodes()
    }
}

/// Graph stage plus per-user documents for the root-graph users.
pub fn prepare(records: &[InteractionRecord], options: &ScoreOptions) -> Result<PreparedDiscussion, DiscussionError> {
    let full = graph::build_graph(records);
    let root = graph::root_graph(&full, options.min_degree)?;
    let deduped = corpus::dedupe(records, &options.sanitizer);
    let docs = corpus::build_user_documents(&deduped, root.graph.nodes(), &options.sanitizer);
    Ok(PreparedDiscussion::new(root.graph, docs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Scored,
    SingleCommunity,
    NoSeeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub run: usize,
    pub status: RunStatus,
    pub dmc: f64,
    pub delta_a: f64,
    pub tau: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub gc_plus: f64,
    pub gc_minus: f64,
    pub seeds_plus: usize,
    pub seeds_minus: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunScore {
    fn new(run: usize, status: RunStatus, score: DmcScore) -> Self {
        Self {
            run,
            status,
            dmc: score.dmc,
            delta_a: score.delta_a,
            tau: score.tau,
            n_plus: score.n_plus,
            n_minus: score.n_minus,
            n_zero: score.n_zero,
            gc_plus: score.gc_plus,
            gc_minus: score.gc_minus,
            seeds_plus: 0,
            seeds_minus: 0,
            iterations: 0,
            residual: 0.0,
            converged: true,
            timings_ms: BTreeMap::new(),
        }
    }
}

/// JSON report of a scored discussion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dmc_mean: f64,
    pub dmc_std: f64,
    pub method: ClusterMethod,
    pub seed: u64,
    pub root_nodes: usize,
    pub root_edges: usize,
    pub tolerance: f64,
    pub max_iters: usize,
    pub runs: Vec<RunScore>,
    pub applicability: Option<ApplicabilityReport>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    /// Per-run DMC values, in run order.
    pub fn scores(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.dmc).collect()
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Scores a prepared discussion given its base clustering (run 0).
pub struct Scorer<'a> {
    prepared: &'a PreparedDiscussion,
    options: &'a ScoreOptions,
    base: Partition,
}

impl<'a> Scorer<'a> {
    pub fn new(prepared: &'a PreparedDiscussion, options: &'a ScoreOptions, base: Partition) -> Self {
        Self {
            prepared,
            options,
            base,
        }
    }

    /// Clusters with the run-0 seed.
    pub fn with_base_clustering(
        prepared: &'a PreparedDiscussion,
        options: &'a ScoreOptions,
    ) -> Result<Self, DiscussionError> {
        let base = community::cluster(&prepared.undirected, options.method, options.cluster_seed(0))?;
        Ok(Self::new(prepared, options, base))
    }

    pub fn base_partition(&self) -> &Partition {
        &self.base
    }

    /// Run-0 training corpus.
    pub fn base_corpus(&self) -> Result<TrainingCorpus, DiscussionError> {
        let pair = community::principal_pair(&self.base, self.prepared.node_ids())?;
        Ok(corpus::build_training_corpus(
            &pair,
            &self.prepared.docs,
            self.options.sample_seed(0),
        )?)
    }

    fn partition_for(&self, run: usize) -> Result<Partition, CommunityError> {
        if run == 0 || self.options.method == ClusterMethod::Walktrap {
            Ok(self.base.clone())
        } else {
            community::cluster(
                &self.prepared.undirected,
                self.options.method,
                self.options.cluster_seed(run),
            )
        }
    }

    fn run_once(&self, run: usize, run0_model: Option<&TextClassifier>) -> Result<RunScore, DiscussionError> {
        let nodes = self.prepared.graph.node_count();
        let mut timings = BTreeMap::new();
        let t = Instant::now();
        let partition = self.partition_for(run)?;
        timings.insert("cluster".to_owned(), ms_since(t));

        let t = Instant::now();
        let pair = match community::principal_pair(&partition, self.prepared.node_ids()) {
            Ok(p) => p,
            Err(CommunityError::SingleCommunity) => {
                let mut score = RunScore::new(run, RunStatus::SingleCommunity, DmcScore::zero(nodes));
                score.timings_ms = timings;
                return Ok(score);
            }
            Err(e) => return Err(e.into()),
        };
        let trained;
        let model = match run0_model {
            Some(m) => m,
            None => {
                let corpus = corpus::build_training_corpus(&pair, &self.prepared.docs, self.options.sample_seed(run))?;
                timings.insert("corpus".to_owned(), ms_since(t));
                let t = Instant::now();
                trained = self.options.train(&corpus, run)?;
                timings.insert("train".to_owned(), ms_since(t));
                &trained
            }
        };

        let t = Instant::now();
        let seeds = polarity::collect_seeds(model, &self.prepared.docs, self.options.threshold);
        timings.insert("predict".to_owned(), ms_since(t));
        if seeds.is_empty() {
            let mut score = RunScore::new(run, RunStatus::NoSeeds, DmcScore::zero(nodes));
            score.timings_ms = timings;
            return Ok(score);
        }

        let t = Instant::now();
        let field = polarity::label_propagation(
            &self.prepared.undirected,
            &seeds.to_indices(self.prepared.node_ids()),
            self.options.tolerance,
            self.options.max_iters,
        )?;
        timings.insert("propagate".to_owned(), ms_since(t));
        let dmc = polarity::dmc(field.values())?;
        let mut score = RunScore::new(run, RunStatus::Scored, dmc);
        score.seeds_plus = seeds.positive_count();
        score.seeds_minus = seeds.negative_count();
        score.iterations = field.iterations;
        score.residual = field.residual;
        score.converged = field.converged;
        score.timings_ms = timings;
        Ok(score)
    }

    /// Applicability check on the run-0 corpus, then `n_runs` scoring runs.
    /// `run0_model` (trained on the run-0 corpus with the run-0 training
    /// seed) skips retraining when supplied.
    pub fn score(&self, run0_model: Option<TextClassifier>) -> Result<RunReport, DiscussionError> {
        self.options.validate()?;
        let opts = self.options;
        let mut report = RunReport {
            dmc_mean: 0.0,
            dmc_std: 0.0,
            method: opts.method,
            seed: opts.seed,
            root_nodes: self.prepared.graph.node_count(),
            root_edges: self.prepared.undirected.edge_count(),
            tolerance: opts.tolerance,
            max_iters: opts.max_iters,
            runs: Vec::new(),
            applicability: None,
            warnings: Vec::new(),
            timings_ms: BTreeMap::new(),
        };
        let corpus0 = match self.base_corpus() {
            Ok(c) => c,
            Err(DiscussionError::Community(CommunityError::SingleCommunity)) => {
                report
                    .warnings
                    .push("clustering found a single community; reporting score 0".into());
                report.runs = (0..opts.n_runs)
                    .map(|r| RunScore::new(r, RunStatus::SingleCommunity, DmcScore::zero(report.root_nodes)))
                    .collect();
                return Ok(report);
            }
            Err(e) => return Err(e),
        };

        let t = Instant::now();
        let mut supplied = run0_model;
        let (applicability, mut models) = polarity::check_applicability(
            |c, k| match (k, supplied.take()) {
                (0, Some(m)) => Ok(m),
                _ => opts.train(c, k),
            },
            &corpus0,
            &self.prepared.docs,
            opts.applicability_runs,
            opts.threshold,
        )?;
        report.timings_ms.insert("applicability".to_owned(), ms_since(t));
        if !applicability.passed {
            return Err(DiscussionError::NotApplicable(Box::new(applicability)));
        }
        report.applicability = Some(applicability);
        let model0 = models.swap_remove(0);
        drop(models);

        let t = Instant::now();
        let first = self.run_once(0, Some(&model0))?;
        let rest: Vec<RunScore> = (1..opts.n_runs)
            .into_par_iter()
            .map(|r| self.run_once(r, None))
            .collect::<Result<_, _>>()?;
        report.timings_ms.insert("runs".to_owned(), ms_since(t));
        report.runs = std::iter::once(first).chain(rest).collect();
        for r in &report.runs {
            match r.status {
                RunStatus::SingleCommunity => report.warnings.push(format!(
                    "run {}: clustering found a single community; run scored 0",
                    r.run
                )),
                RunStatus::NoSeeds => report
                    .warnings
                    .push(format!("run {}: no characteristic users; run scored 0", r.run)),
                RunStatus::Scored if !r.converged => report.warnings.push(format!(
                    "run {}: propagation stopped at {} iterations (residual {:.2e})",
                    r.run, r.iterations, r.residual
                )),
                RunStatus::Scored => {}
            }
        }
        (report.dmc_mean, report.dmc_std) = mean_std(&report.scores());
        Ok(report)
    }
}

/// Full pipeline over already filtered records.
pub fn score_discussion(records: &[InteractionRecord], options: &ScoreOptions) -> Result<RunReport, DiscussionError> {
    options.validate()?;
    let t = Instant::now();
    let prepared = prepare(records, options)?;
    let prepare_ms = ms_since(t);
    let scorer = Scorer::with_base_clustering(&prepared, options)?;
    let mut report = scorer.score(None)?;
    report.timings_ms.insert("graph".to_owned(), prepare_ms);
    Ok(report)
}
