use std::time::Instant;

use rand::distributions::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use super::synth::Vocabulary;
use crate::classifier::{train, ClassifierConfig};
use crate::corpus::{Label, TrainingCorpus, UserDocument};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub size_kb: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
    /// `None` with fewer than two points or no spread in size.
    pub r_squared: Option<f64>,
}

/// Least squares `y = slope * x + intercept` and its R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, Option<f64>) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, ys.first().copied().unwrap_or(0.0), None);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, None);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, Some(r2))
}

/// Balanced two-sided corpus of roughly `size_kb` kilobytes of text.
pub fn synthetic_corpus(size_kb: f64, seed: u64) -> TrainingCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::new(2000, 0.2, &mut rng);
    let zipf = Zipf::new(2000, 1.1).expect("valid zipf");
    let target = (size_kb * 1024.0) as usize;
    let mut examples = Vec::new();
    let mut bytes = 0;
    let mut i = 0;
    while bytes < target || examples.len() % 2 == 1 {
        let label = Label::from_index(i % 2);
        let len = rng.gen_range(150..=250);
        let text: Vec<&str> = (0..len)
            .map(|_| vocab.token(label.index(), zipf.sample(&mut rng) as usize - 1))
            .collect();
        let text = text.join(" ");
        bytes += text.len() + 1;
        examples.push((
            label,
            UserDocument {
                user_id: format!("u{i:06}"),
                text,
                source_tweet_count: 1,
            },
        ));
        i += 1;
    }
    TrainingCorpus::from_examples(examples).expect("balanced by construction")
}

/// Times training plus prediction over every document for corpora of the
/// given sizes (kilobytes, ascending).
pub fn benchmark_scaling(sizes_kb: &[f64], config: &ClassifierConfig, seed: u64) -> ScalingReport {
    assert!(sizes_kb.windows(2).all(|w| w[0] <= w[1]), "sizes must be ascending");
    let points: Vec<ScalingPoint> = sizes_kb
        .iter()
        .map(|&kb| {
            let corpus = synthetic_corpus(kb, seed);
            let start = Instant::now();
            let model = train(&corpus, config).expect("synthetic corpus trains");
            let mut confident = 0usize;
            for (_, doc) in corpus.examples() {
                confident += (model.predict(&doc.text).probability >= 0.9) as usize;
            }
            std::hint::black_box(confident);
            ScalingPoint {
                size_kb: kb,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.size_kb).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    ScalingReport {
        points,
        slope,
        intercept,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_has_unit_r2() {
        let (m, b, r2) = linear_fit(&[1.0, 2.0, 4.0], &[3.0, 5.0, 9.0]);
        assert_abs_diff_eq!(m, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r2.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_size_list_gives_empty_table() {
        let r = benchmark_scaling(&[], &ClassifierConfig::default(), 0);
        assert!(r.points.is_empty());
        assert_eq!(r.r_squared, None);
    }

    #[test]
    fn corpus_size_is_close_to_request() {
        let c = synthetic_corpus(20.0, 1);
        let bytes: usize = c.examples().iter().map(|(_, d)| d.text.len() + 1).sum();
        assert!((20 * 1024..22 * 1024).contains(&bytes), "{bytes}");
        assert_eq!(c.per_class() * 2, c.len());
    }
}
