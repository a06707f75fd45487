use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU32, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{init_row, ngram_buckets, token_hash, ClassifierConfig, ClassifierError, TextClassifier};
use crate::corpus::TrainingCorpus;

/// Mean training loss of every epoch, measured before each update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingReport {
    pub epoch_losses: Vec<f64>,
    pub examples_used: usize,
}

pub fn train(corpus: &TrainingCorpus, config: &ClassifierConfig) -> Result<TextClassifier, ClassifierError> {
    train_with_report(corpus, config).map(|(m, _)| m)
}

struct Prepared {
    words: Vec<String>,
    bucket_ids: Vec<u64>,
    examples: Vec<(usize, Vec<u32>)>,
}

fn prepare(corpus: &TrainingCorpus, config: &ClassifierConfig) -> Prepared {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (_, doc) in corpus.examples() {
        for token in doc.text.split_whitespace() {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut words: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= config.min_count).collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let vocab: HashMap<&str, u32> = words.iter().enumerate().map(|(i, &(w, _))| (w, i as u32)).collect();

    let mut raw: Vec<(usize, Vec<u32>, Vec<u64>)> = Vec::with_capacity(corpus.len());
    let mut seen_buckets = BTreeSet::new();
    for (label, doc) in corpus.examples() {
        let mut rows = Vec::new();
        let mut hashes = Vec::new();
        for token in doc.text.split_whitespace() {
            if let Some(&r) = vocab.get(token) {
                rows.push(r);
            }
            hashes.push(token_hash(token));
        }
        let mut buckets = Vec::new();
        ngram_buckets(&hashes, config.word_ngrams, config.hash_buckets, |b| buckets.push(b));
        seen_buckets.extend(buckets.iter().copied());
        raw.push((label.index(), rows, buckets));
    }
    let bucket_ids: Vec<u64> = seen_buckets.into_iter().collect();
    let bucket_row: HashMap<u64, u32> = bucket_ids
        .iter()
        .enumerate()
        .map(|(i, &b)| (b, (words.len() + i) as u32))
        .collect();
    let examples = raw
        .into_iter()
        .map(|(label, mut rows, buckets)| {
            rows.extend(buckets.iter().map(|b| bucket_row[b]));
            (label, rows)
        })
        .collect();
    Prepared {
        words: words.into_iter().map(|(w, _)| w.to_owned()).collect(),
        bucket_ids,
        examples,
    }
}

/// Row storage that a training thread can read and update.
trait Weights {
    fn row(&self, r: usize, dim: usize, out: &mut [f32]);
    fn axpy(&mut self, r: usize, dim: usize, scale: f32, x: &[f32]);
}

impl Weights for &mut [f32] {
    fn row(&self, r: usize, dim: usize, out: &mut [f32]) {
        out.copy_from_slice(&self[r * dim..(r + 1) * dim]);
    }

    fn axpy(&mut self, r: usize, dim: usize, scale: f32, x: &[f32]) {
        for (w, &v) in self[r * dim..(r + 1) * dim].iter_mut().zip(x) {
            *w += scale * v;
        }
    }
}

/// Lock-free shared weights: loads and stores are individually atomic but
/// updates may be lost under contention.
#[derive(Clone, Copy)]
struct Racy<'a>(&'a [AtomicU32]);

impl Weights for Racy<'_> {
    fn row(&self, r: usize, dim: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(&self.0[r * dim..(r + 1) * dim]) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn axpy(&mut self, r: usize, dim: usize, scale: f32, x: &[f32]) {
        for (a, &v) in self.0[r * dim..(r + 1) * dim].iter().zip(x) {
            let w = f32::from_bits(a.load(Ordering::Relaxed)) + scale * v;
            a.store(w.to_bits(), Ordering::Relaxed);
        }
    }
}

struct Scratch {
    hidden: Vec<f32>,
    grad: Vec<f32>,
    row: Vec<f32>,
    out: [Vec<f32>; 2],
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            hidden: vec![0.0; dim],
            grad: vec![0.0; dim],
            row: vec![0.0; dim],
            out: [vec![0.0; dim], vec![0.0; dim]],
        }
    }
}

/// One softmax SGD update; returns the example's loss before the update.
fn sgd_step<W: Weights>(
    input: &mut W,
    output: &mut W,
    rows: &[u32],
    label: usize,
    lr: f32,
    dim: usize,
    s: &mut Scratch,
) -> f64 {
    s.hidden.iter_mut().for_each(|h| *h = 0.0);
    for &r in rows {
        input.row(r as usize, dim, &mut s.row);
        for (h, &x) in s.hidden.iter_mut().zip(&s.row) {
            *h += x;
        }
    }
    let inv = 1.0 / rows.len() as f32;
    s.hidden.iter_mut().for_each(|h| *h *= inv);

    let mut logits = [0.0f64; 2];
    for (l, logit) in logits.iter_mut().enumerate() {
        output.row(l, dim, &mut s.out[l]);
        *logit = s.out[l].iter().zip(&s.hidden).map(|(&w, &h)| (w * h) as f64).sum();
    }
    let p = super::softmax2(logits);
    s.grad.iter_mut().for_each(|g| *g = 0.0);
    for (l, &pl) in p.iter().enumerate() {
        let target = if l == label { 1.0 } else { 0.0 };
        let alpha = lr * (target - pl) as f32;
        for (g, &w) in s.grad.iter_mut().zip(&s.out[l]) {
            *g += alpha * w;
        }
        output.axpy(l, dim, alpha, &s.hidden);
    }
    for &r in rows {
        input.axpy(r as usize, dim, inv, &s.grad);
    }
    -p[label].max(1e-300).ln()
}

/// Trains a model and reports the per-epoch loss curve.
pub fn train_with_report(
    corpus: &TrainingCorpus,
    config: &ClassifierConfig,
) -> Result<(TextClassifier, TrainingReport), ClassifierError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    let prepared = prepare(corpus, config);
    let examples: Vec<(usize, Vec<u32>)> = prepared.examples.into_iter().filter(|(_, r)| !r.is_empty()).collect();
    if examples.is_empty() {
        return Err(ClassifierError::DegenerateCorpus);
    }
    let dim = config.dim;
    let rows = prepared.words.len() + prepared.bucket_ids.len();
    let mut input = vec![0.0f32; rows * dim];
    for (i, chunk) in input.chunks_mut(dim).enumerate() {
        let feature = if i < prepared.words.len() {
            i as u64
        } else {
            prepared.words.len() as u64 + prepared.bucket_ids[i - prepared.words.len()]
        };
        init_row(config.seed, feature, dim, chunk);
    }
    let mut output = vec![0.0f32; 2 * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let total = (config.epochs * examples.len()) as f64;
    let mut report = TrainingReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        examples_used: examples.len(),
    };

    if config.threads <= 1 {
        let mut scratch = Scratch::new(dim);
        let mut step = 0usize;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut loss = 0.0;
            for &e in &order {
                let lr = (config.lr * (1.0 - step as f64 / total)) as f32;
                let (label, ref rows) = examples[e];
                let mut inp: &mut [f32] = &mut input;
                let mut out: &mut [f32] = &mut output;
                loss += sgd_step(&mut inp, &mut out, rows, label, lr, dim, &mut scratch);
                step += 1;
            }
            report.epoch_losses.push(loss / examples.len() as f64);
        }
    } else {
        let shared_in: Vec<AtomicU32> = input.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        let shared_out: Vec<AtomicU32> = output.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        let threads = config.threads.min(examples.len());
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let chunk = order.len().div_ceil(threads);
            let losses: Vec<f64> = std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .map(|part| {
                        let mut inp = Racy(&shared_in);
                        let mut out = Racy(&shared_out);
                        let examples = &examples;
                        scope.spawn(move || {
                            let mut scratch = Scratch::new(dim);
                            let mut loss = 0.0;
                            for (k, &e) in part.iter().enumerate() {
                                let step = epoch * examples.len() + k * threads;
                                let lr = (config.lr * (1.0 - (step as f64 / total).min(1.0))) as f32;
                                let (label, ref rows) = examples[e];
                                loss += sgd_step(&mut inp, &mut out, rows, label, lr, dim, &mut scratch);
                            }
                            loss
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training thread panicked"))
                    .collect()
            });
            report
                .epoch_losses
                .push(losses.iter().sum::<f64>() / examples.len() as f64);
        }
        input = shared_in.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
        output = shared_out.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
    }

    if input.iter().chain(&output).any(|x| !x.is_finite()) {
        return Err(ClassifierError::InvalidConfig(
            "training diverged (non-finite weights); lower the learning rate".into(),
        ));
    }
    let model = TextClassifier::from_parts(config.clone(), prepared.words, prepared.bucket_ids, input, output)?;
    Ok((model, report))
}
