//! Two-class fastText-style classifier.
//!
//! A document is the mean of its feature embeddings (in-vocabulary words
//! plus hashed word n-grams); a linear layer and a softmax turn it into label
//! probabilities. Embedding rows are only stored for features seen during
//! training; features never seen in training are ignored at prediction time.

mod io;
mod train;

use std::collections::HashMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

pub use io::{load, save, MODEL_MAGIC, MODEL_VERSION};
pub use train::{train, train_with_report, TrainingReport};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no training document has any feature")]
    DegenerateCorpus,
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub dim: usize,
    /// Initial learning rate, decayed linearly to zero over all updates.
    pub lr: f64,
    pub epochs: usize,
    pub word_ngrams: usize,
    pub min_count: usize,
    pub hash_buckets: u64,
    pub seed: u64,
    /// 1 trains deterministically; more threads use lock-free racy updates.
    pub threads: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            lr: 0.1,
            epochs: 20,
            word_ngrams: 2,
            min_count: 1,
            hash_buckets: 2_000_000,
            seed: 0,
            threads: 1,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_owned()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.word_ngrams == 0 {
            return bad("word_ngrams must be at least 1");
        }
        if self.word_ngrams > 1 && self.hash_buckets == 0 {
            return bad("hash_buckets must be positive when word_ngrams > 1");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// fastText's 32-bit FNV-1a variant (bytes are sign-extended before mixing).
pub fn token_hash(token: &str) -> u32 {
    let mut h: u32 = 2_166_136_261;
    for &b in token.as_bytes() {
        h ^= b as i8 as i32 as u32;
        h = h.wrapping_mul(16_777_619);
    }
    h
}

/// Buckets of the word n-grams (2..=n) of a token sequence.
pub(crate) fn ngram_buckets(hashes: &[u32], n: usize, buckets: u64, mut emit: impl FnMut(u64)) {
    if n < 2 || buckets == 0 {
        return;
    }
    for i in 0..hashes.len() {
        let mut h = hashes[i] as u64;
        for &next in hashes.iter().take((i + n).min(hashes.len())).skip(i + 1) {
            h = h.wrapping_mul(116_049_371).wrapping_add(next as u64);
            emit(h % buckets);
        }
    }
}

/// Initial value of embedding row `feature` (`rows` of the conceptual
/// `(vocab + buckets) × dim` matrix): uniform in `±1/dim`, drawn from a
/// stream keyed by the feature so rows can be materialised in any order.
pub(crate) fn init_row(seed: u64, feature: u64, dim: usize, out: &mut [f32]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(feature);
    let bound = 1.0 / dim as f32;
    let dist = Uniform::new_inclusive(-bound, bound);
    for x in out.iter_mut() {
        *x = dist.sample(&mut rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Probability of `label`; at least 0.5.
    pub probability: f64,
    /// Probabilities of C1 and C2.
    pub probabilities: [f64; 2],
    /// No known feature in the text; the prediction is uniform.
    pub no_features: bool,
}

/// Analytic cross-entropy gradients for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// `(row, dL/drow)` for every distinct feature row of the example.
    pub input: Vec<(usize, Vec<f64>)>,
    /// `dL/d output[label]` for both labels.
    pub output: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier {
    config: ClassifierConfig,
    words: Vec<String>,
    vocab: HashMap<String, u32>,
    bucket_ids: Vec<u64>,
    buckets: HashMap<u64, u32>,
    /// `(words + buckets) × dim`, row-major.
    input: Vec<f32>,
    /// `2 × dim`, row `l` scores label `l`.
    output: Vec<f32>,
}

impl TextClassifier {
    /// Assembles a model from explicit weights. `bucket_ids` name the hashed
    /// n-gram buckets stored after the word rows.
    pub fn from_parts(
        config: ClassifierConfig,
        words: Vec<String>,
        bucket_ids: Vec<u64>,
        input: Vec<f32>,
        output: Vec<f32>,
    ) -> Result<Self, ClassifierError> {
        config.validate()?;
        let rows = words.len() + bucket_ids.len();
        if input.len() != rows * config.dim {
            return Err(ClassifierError::InvalidConfig(format!(
                "input matrix has {} values, expected {rows} x {}",
                input.len(),
                config.dim
            )));
        }
        if output.len() != 2 * config.dim {
            return Err(ClassifierError::InvalidConfig(format!(
                "output matrix has {} values, expected 2 x {}",
                output.len(),
                config.dim
            )));
        }
        let vocab: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        if vocab.len() != words.len() {
            return Err(ClassifierError::InvalidConfig("duplicate vocabulary entry".into()));
        }
        let buckets: HashMap<u64, u32> = bucket_ids
            .iter()
            .enumerate()
            .map(|(i, &b)| (b, (words.len() + i) as u32))
            .collect();
        Ok(Self {
            config,
            words,
            vocab,
            bucket_ids,
            buckets,
            input,
            output,
        })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    pub fn bucket_ids(&self) -> &[u64] {
        &self.bucket_ids
    }

    pub fn rows(&self) -> usize {
        self.words.len() + self.bucket_ids.len()
    }

    pub fn input_weights(&self) -> &[f32] {
        &self.input
    }

    pub fn output_weights(&self) -> &[f32] {
        &self.output
    }

    /// Raw weight access, e.g. for finite-difference checks.
    pub fn input_weights_mut(&mut self) -> &mut [f32] {
        &mut self.input
    }

    pub fn output_weights_mut(&mut self) -> &mut [f32] {
        &mut self.output
    }

    pub fn label_names(&self) -> [&'static str; 2] {
        [Label::C1.name(), Label::C2.name()]
    }

    /// Known feature rows of `text`: vocabulary words, then n-gram buckets
    /// seen in training. Repeated features repeat.
    pub fn features(&self, text: &str) -> Vec<u32> {
        let mut rows = Vec::new();
        let mut hashes = Vec::new();
        for token in text.split_whitespace() {
            if let Some(&row) = self.vocab.get(token) {
                rows.push(row);
            }
            hashes.push(token_hash(token));
        }
        ngram_buckets(&hashes, self.config.word_ngrams, self.config.hash_buckets, |b| {
            if let Some(&row) = self.buckets.get(&b) {
                rows.push(row);
            }
        });
        rows
    }

    fn hidden(&self, rows: &[u32]) -> Vec<f64> {
        let dim = self.config.dim;
        let mut hidden = vec![0.0f64; dim];
        for &r in rows {
            let row = &self.input[r as usize * dim..(r as usize + 1) * dim];
            for (h, &x) in hidden.iter_mut().zip(row) {
                *h += x as f64;
            }
        }
        let scale = 1.0 / rows.len() as f64;
        hidden.iter_mut().for_each(|h| *h *= scale);
        hidden
    }

    fn probabilities(&self, hidden: &[f64]) -> [f64; 2] {
        let dim = self.config.dim;
        let logit = |l: usize| -> f64 {
            self.output[l * dim..(l + 1) * dim]
                .iter()
                .zip(hidden)
                .map(|(&w, &h)| w as f64 * h)
                .sum()
        };
        softmax2([logit(0), logit(1)])
    }

    pub fn predict(&self, text: &str) -> Prediction {
        self.predict_features(&self.features(text))
    }

    pub(crate) fn predict_features(&self, rows: &[u32]) -> Prediction {
        if rows.is_empty() {
            return Prediction {
                label: Label::C1,
                probability: 0.5,
                probabilities: [0.5, 0.5],
                no_features: true,
            };
        }
        let probabilities = self.probabilities(&self.hidden(rows));
        let label = if probabilities[1] > probabilities[0] {
            Label::C2
        } else {
            Label::C1
        };
        Prediction {
            label,
            probability: probabilities[label.index()],
            probabilities,
            no_features: false,
        }
    }

    /// Cross-entropy `-ln p(label | text)`; `None` without known features.
    pub fn loss(&self, text: &str, label: Label) -> Option<f64> {
        let rows = self.features(text);
        if rows.is_empty() {
            return None;
        }
        let p = self.probabilities(&self.hidden(&rows));
        Some(-p[label.index()].ln())
    }

    /// Analytic gradients of [`TextClassifier::loss`].
    pub fn gradients(&self, text: &str, label: Label) -> Option<Gradients> {
        let rows = self.features(text);
        if rows.is_empty() {
            return None;
        }
        let dim = self.config.dim;
        let hidden = self.hidden(&rows);
        let p = self.probabilities(&hidden);
        let err = [
            p[0] - (label == Label::C1) as u8 as f64,
            p[1] - (label == Label::C2) as u8 as f64,
        ];
        let output = [0, 1].map(|l| hidden.iter().map(|h| err[l] * h).collect::<Vec<f64>>());
        let d_hidden: Vec<f64> = (0..dim)
            .map(|k| err[0] * self.output[k] as f64 + err[1] * self.output[dim + k] as f64)
            .collect();
        let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
        for &r in &rows {
            *counts.entry(r as usize).or_insert(0) += 1;
        }
        let n = rows.len() as f64;
        let input = counts
            .into_iter()
            .map(|(row, c)| (row, d_hidden.iter().map(|g| g * c as f64 / n).collect()))
            .collect();
        Some(Gradients { input, output })
    }
}

pub(crate) fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let max = logits[0].max(logits[1]);
    let e0 = (logits[0] - max).exp();
    let e1 = (logits[1] - max).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_reference_values() {
        // FNV-1a offset basis for the empty string
        assert_eq!(token_hash(""), 2_166_136_261);
        assert_eq!(token_hash("a"), 0xe40c292c);
        // non-ASCII bytes are sign-extended, unlike textbook FNV-1a
        let textbook = {
            let mut h: u32 = 2_166_136_261;
            for &b in "é".as_bytes() {
                h ^= b as u32;
                h = h.wrapping_mul(16_777_619);
            }
            h
        };
        assert_ne!(token_hash("é"), textbook);
    }

    #[test]
    fn ngram_buckets_cover_windows() {
        let mut out = Vec::new();
        ngram_buckets(&[1, 2, 3], 2, 1000, |b| out.push(b));
        assert_eq!(out, vec![(116_049_371 + 2) % 1000, (2 * 116_049_371 + 3) % 1000]);
        let mut tri = 0;
        ngram_buckets(&[1, 2, 3], 3, 1000, |_| tri += 1);
        assert_eq!(tri, 3);
    }

    #[test]
    fn row_init_is_keyed_by_feature() {
        let mut a = vec![0.0; 8];
        let mut b = vec![0.0; 8];
        init_row(1, 5, 8, &mut a);
        init_row(1, 5, 8, &mut b);
        assert_eq!(a, b);
        init_row(1, 6, 8, &mut b);
        assert_ne!(a, b);
        assert!(a.iter().all(|x| x.abs() <= 1.0 / 8.0));
    }

    fn toy() -> TextClassifier {
        let config = ClassifierConfig {
            dim: 3,
            word_ngrams: 1,
            ..Default::default()
        };
        TextClassifier::from_parts(
            config,
            vec!["a".into(), "b".into(), "c".into()],
            vec![],
            vec![0.1, -0.2, 0.3, 0.05, 0.4, -0.1, -0.3, 0.2, 0.1],
            vec![0.5, -0.4, 0.2, -0.1, 0.3, 0.6],
        )
        .unwrap()
    }

    #[test]
    fn unknown_text_is_uniform() {
        let m = toy();
        let p = m.predict("zzz yyy");
        assert!(p.no_features);
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.label, Label::C1);
    }

    #[test]
    fn probabilities_are_normalised() {
        let m = toy();
        for text in ["a", "a b", "c c c b", "b a c"] {
            let p = m.predict(text);
            assert!((p.probabilities[0] + p.probabilities[1] - 1.0).abs() < 1e-12);
            assert!(p.probability >= 0.5);
        }
    }

    #[test]
    fn from_parts_checks_shapes() {
        let config = ClassifierConfig {
            dim: 2,
            ..Default::default()
        };
        assert!(
            TextClassifier::from_parts(config.clone(), vec!["a".into()], vec![], vec![0.0; 3], vec![0.0; 4]).is_err()
        );
        assert!(
            TextClassifier::from_parts(config, vec!["a".into(), "a".into()], vec![], vec![0.0; 4], vec![0.0; 4])
                .is_err()
        );
    }

    #[test]
    fn config_guards() {
        for bad in [
            ClassifierConfig {
                dim: 0,
                ..Default::default()
            },
            ClassifierConfig {
                epochs: 0,
                ..Default::default()
            },
            ClassifierConfig {
                lr: 0.0,
                ..Default::default()
            },
            ClassifierConfig {
                threads: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(ClassifierConfig::default().validate().is_ok());
    }
}
