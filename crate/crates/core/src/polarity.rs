//! Characteristic users, label propagation and the dipole moment score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, TextClassifier};
use crate::corpus::{Label, TrainingCorpus, UserDocument};
use crate::graph::UndirectedGraph;

pub const CHARACTERISTIC_THRESHOLD: f64 = 0.9;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_APPLICABILITY_RUNS: usize = 10;

#[derive(Debug, Error)]
pub enum PolarityError {
    #[error("no user reached the characteristic-probability threshold")]
    NoSeeds,
    #[error("characteristic users found on one side only ({positive} positive, {negative} negative)")]
    OneSidedSeeds { positive: usize, negative: usize },
    #[error("polarity field has no nodes")]
    EmptyField,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Signed seed values: `+p` for users predicted C1, `-p` for C2.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeedAssignment {
    values: BTreeMap<String, f64>,
}

impl SeedAssignment {
    /// Every value must satisfy `0.9 <= |v| <= 1`.
    pub fn from_values(values: BTreeMap<String, f64>) -> Result<Self, PolarityError> {
        if let Some((user, v)) = values
            .iter()
            .find(|(_, v)| !(CHARACTERISTIC_THRESHOLD..=1.0).contains(&v.abs()))
        {
            return Err(PolarityError::InvalidArgument(format!(
                "seed {user} = {v} outside [0.9, 1]"
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, user: &str) -> Option<f64> {
        self.values.get(user).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(u, &v)| (u.as_str(), v))
    }

    pub fn positive_count(&self) -> usize {
        self.values.values().filter(|&&v| v > 0.0).count()
    }

    pub fn negative_count(&self) -> usize {
        self.values.values().filter(|&&v| v < 0.0).count()
    }

    pub fn is_two_sided(&self) -> bool {
        self.positive_count() > 0 && self.negative_count() > 0
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|(u, &v)| (u.clone(), -v)).collect(),
        }
    }

    /// Seeds as `(node index, value)` for the given node ordering; users not
    /// in `node_ids` are ignored.
    pub fn to_indices(&self, node_ids: &[String]) -> Vec<(usize, f64)> {
        node_ids
            .iter()
            .enumerate()
            .filter_map(|(i, id)| self.get(id).map(|v| (i, v)))
            .collect()
    }
}

/// All users predicted with probability at least `threshold`, signed by
/// label. May be empty or one-sided.
pub fn collect_seeds(model: &TextClassifier, docs: &[UserDocument], threshold: f64) -> SeedAssignment {
    let values = docs
        .iter()
        .filter_map(|d| {
            let p = model.predict(&d.text);
            if p.no_features || p.probability < threshold {
                return None;
            }
            let sign = if p.label == Label::C1 { 1.0 } else { -1.0 };
            Some((d.user_id.clone(), sign * p.probability))
        })
        .collect();
    SeedAssignment { values }
}

/// Like [`collect_seeds`] but requires at least one seed on each side.
pub fn select_characteristic_users(
    model: &TextClassifier,
    docs: &[UserDocument],
    threshold: f64,
) -> Result<SeedAssignment, PolarityError> {
    if !(0.5..=1.0).contains(&threshold) {
        return Err(PolarityError::InvalidArgument(format!(
            "threshold {threshold} outside [0.5, 1]"
        )));
    }
    let seeds = collect_seeds(model, docs, threshold);
    if seeds.is_empty() {
        return Err(PolarityError::NoSeeds);
    }
    if !seeds.is_two_sided() {
        return Err(PolarityError::OneSidedSeeds {
            positive: seeds.positive_count(),
            negative: seeds.negative_count(),
        });
    }
    Ok(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicabilityRun {
    pub run: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicabilityReport {
    pub passed: bool,
    pub threshold: f64,
    pub runs: Vec<ApplicabilityRun>,
}

impl ApplicabilityReport {
    pub fn passing_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.positive > 0 && r.negative > 0).count()
    }
}

/// Trains `runs` models (`train_fn(corpus, run)` picks the seed) and passes
/// only if every one of them yields a characteristic user on both sides.
/// The trained models are returned in run order so callers can reuse them.
pub fn check_applicability<F>(
    mut train_fn: F,
    corpus: &TrainingCorpus,
    root_docs: &[UserDocument],
    runs: usize,
    threshold: f64,
) -> Result<(ApplicabilityReport, Vec<TextClassifier>), PolarityError>
where
    F: FnMut(&TrainingCorpus, usize) -> Result<TextClassifier, ClassifierError>,
{
    if runs == 0 {
        return Err(PolarityError::InvalidArgument(
            "applicability needs at least one run".into(),
        ));
    }
    let mut report = ApplicabilityReport {
        passed: true,
        threshold,
        runs: Vec::with_capacity(runs),
    };
    let mut models = Vec::with_capacity(runs);
    for run in 0..runs {
        let model = train_fn(corpus, run)?;
        let seeds = collect_seeds(&model, root_docs, threshold);
        let entry = ApplicabilityRun {
            run,
            positive: seeds.positive_count(),
            negative: seeds.negative_count(),
        };
        report.passed &= entry.positive > 0 && entry.negative > 0;
        report.runs.push(entry);
        models.push(model);
    }
    Ok((report, models))
}

/// Converged (or capped) propagation result over the root-graph nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityField {
    values: Vec<f64>,
    seeded: Vec<bool>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl PolarityField {
    /// A field with no propagation metadata, e.g. for scoring fixed values.
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            values,
            seeded: vec![false; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_seed(&self, node: usize) -> bool {
        self.seeded[node]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Jacobi iteration: non-seed nodes start at 0 and repeatedly take the
/// weighted mean of their neighbours; seeds stay clamped. Stops once the
/// largest per-node change drops below `tolerance` or after `max_iters`.
pub fn label_propagation(
    graph: &UndirectedGraph,
    seeds: &[(usize, f64)],
    tolerance: f64,
    max_iters: usize,
) -> Result<PolarityField, PolarityError> {
    label_propagation_observed(graph, seeds, tolerance, max_iters, |_, _| {})
}

/// [`label_propagation`] that calls `observe(iteration, values)` after
/// every sweep.
pub fn label_propagation_observed<F>(
    graph: &UndirectedGraph,
    seeds: &[(usize, f64)],
    tolerance: f64,
    max_iters: usize,
    mut observe: F,
) -> Result<PolarityField, PolarityError>
where
    F: FnMut(usize, &[f64]),
{
    if seeds.is_empty() {
        return Err(PolarityError::NoSeeds);
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(PolarityError::InvalidArgument(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let n = graph.node_count();
    let mut values = vec![0.0; n];
    let mut seeded = vec![false; n];
    for &(i, v) in seeds {
        if i >= n {
            return Err(PolarityError::InvalidArgument(format!("seed node {i} out of range")));
        }
        if !v.is_finite() {
            return Err(PolarityError::InvalidArgument(format!("seed value {v} is not finite")));
        }
        values[i] = v;
        seeded[i] = true;
    }
    let strength: Vec<f64> = (0..n).map(|i| graph.strength(i)).collect();
    let mut next = values.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iters {
        residual = 0.0;
        for i in 0..n {
            if seeded[i] || strength[i] == 0.0 {
                continue;
            }
            let sum: f64 = graph.neighbors(i).map(|(j, w)| w * values[j]).sum();
            next[i] = sum / strength[i];
            residual = f64::max(residual, (next[i] - values[i]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        observe(iterations, &values);
        if residual < tolerance {
            break;
        }
    }
    Ok(PolarityField {
        values,
        seeded,
        iterations,
        residual,
        converged: residual < tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmcScore {
    pub dmc: f64,
    pub delta_a: f64,
    pub tau: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub gc_plus: f64,
    pub gc_minus: f64,
}

impl DmcScore {
    /// Score of a discussion with no detectable division.
    pub fn zero(nodes: usize) -> Self {
        Self {
            dmc: 0.0,
            delta_a: 1.0,
            tau: 0.0,
            n_plus: 0,
            n_minus: 0,
            n_zero: nodes,
            gc_plus: 0.0,
            gc_minus: 0.0,
        }
    }
}

/// `DMC = (1 - ΔA) τ` with `ΔA = |n⁺ - n⁻| / |V|` and
/// `τ = |gc⁺ - gc⁻| / 2`. Zero-valued nodes count towards `|V|` only.
pub fn dmc(values: &[f64]) -> Result<DmcScore, PolarityError> {
    if values.is_empty() {
        return Err(PolarityError::EmptyField);
    }
    let (mut n_plus, mut n_minus) = (0usize, 0usize);
    let (mut sum_plus, mut sum_minus) = (0.0, 0.0);
    for &v in values {
        if v > 0.0 {
            n_plus += 1;
            sum_plus += v;
        } else if v < 0.0 {
            n_minus += 1;
            sum_minus += v;
        }
    }
    let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
    let gc_plus = mean(sum_plus, n_plus);
    let gc_minus = mean(sum_minus, n_minus);
    let delta_a = n_plus.abs_diff(n_minus) as f64 / values.len() as f64;
    let tau = (gc_plus - gc_minus).abs() / 2.0;
    Ok(DmcScore {
        dmc: (1.0 - delta_a) * tau,
        delta_a,
        tau,
        n_plus,
        n_minus,
        n_zero: values.len() - n_plus - n_minus,
        gc_plus,
        gc_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3() -> UndirectedGraph {
        UndirectedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    }

    #[test]
    fn path_midpoint_is_neutral() {
        let f = label_propagation(&path3(), &[(0, 1.0), (2, -1.0)], 1e-6, 1000).unwrap();
        assert_eq!(f.values(), &[1.0, 0.0, -1.0]);
        assert!(f.converged);
    }

    #[test]
    fn constant_seeds_give_constant_field() {
        let g = UndirectedGraph::from_edges(5, [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 3.0), (3, 4, 1.0), (4, 0, 1.0)]);
        let f = label_propagation(&g, &[(0, 0.9), (3, 0.9)], 1e-6, 1000).unwrap();
        for &v in f.values() {
            assert_abs_diff_eq!(v, 0.9, epsilon = 1e-5);
        }
        assert!(f.is_seed(0) && !f.is_seed(1));
    }

    #[test]
    fn seeds_are_clamped_and_cap_is_reported() {
        let g = UndirectedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let f = label_propagation(&g, &[(0, 0.95)], 1e-12, 3).unwrap();
        assert_eq!(f.values()[0], 0.95);
        assert_eq!(f.iterations, 3);
        assert!(!f.converged);
    }

    #[test]
    fn propagation_needs_seeds() {
        assert!(matches!(
            label_propagation(&path3(), &[], 1e-6, 10),
            Err(PolarityError::NoSeeds)
        ));
    }

    #[test]
    fn perfect_dipole() {
        let mut v = vec![1.0; 5];
        v.extend([-1.0; 5]);
        let s = dmc(&v).unwrap();
        assert_eq!((s.delta_a, s.tau, s.dmc), (0.0, 1.0, 1.0));
    }

    #[test]
    fn one_sided_field_scores_zero() {
        let s = dmc(&[0.3, 0.9, 1.0]).unwrap();
        assert_eq!(s.delta_a, 1.0);
        assert_eq!(s.dmc, 0.0);
    }

    #[test]
    fn unbalanced_dipole() {
        let v = [0.95, 0.95, 0.95, 0.95, 0.95, 0.95, -0.8, -0.8, -0.8, -0.8];
        let s = dmc(&v).unwrap();
        assert_abs_diff_eq!(s.delta_a, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.tau, 0.875, epsilon = 1e-12);
        assert_abs_diff_eq!(s.dmc, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn zeros_count_in_v_only() {
        let s = dmc(&[1.0, -1.0, 0.0, 0.0]).unwrap();
        assert_eq!((s.n_plus, s.n_minus, s.n_zero), (1, 1, 2));
        assert_eq!(s.dmc, 1.0);
        assert!(matches!(dmc(&[]), Err(PolarityError::EmptyField)));
    }

    #[test]
    fn seed_assignment_validates_range() {
        let ok: BTreeMap<String, f64> = [("a".into(), 0.95), ("b".into(), -0.91)].into();
        let s = SeedAssignment::from_values(ok).unwrap();
        assert!(s.is_two_sided());
        assert_eq!(s.negated().get("a"), Some(-0.95));
        let bad: BTreeMap<String, f64> = [("a".into(), 0.89)].into();
        assert!(SeedAssignment::from_values(bad).is_err());
    }
}
