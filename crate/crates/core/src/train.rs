//! Asymmetric pairwise boosting.
//!
//! Each round scores every (filter, threshold) weak classifier on the
//! training pairs, keeps the one with the lowest weighted error, and then
//! re-weights *only* the matching pairs: misclassified positives are scaled
//! by `exp(c_m)` and the positive weights renormalised to sum to one.
//! Negative-pair weights keep their initial value for the whole run.

use std::collections::HashSet;

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::filter::{response_matrix, FilterBank, ResponseMatrix};
use crate::model::{FingerprintModel, ModelError, ModelMetadata, WeakClassifier};
use crate::pairs::{MatchLabel, PairDataset, RNG_ALGORITHM};

/// Lower/upper clamp applied to the weighted error before computing the
/// confidence, keeping perfect separators finite.
pub const EPSILON_CLAMP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("requested {rounds} rounds but the bank only has {bank} filters (need 1 <= M < B)")]
    Rounds { rounds: usize, bank: usize },
    #[error("training set has no pairs")]
    NoPairs,
    #[error("training set has no matching pairs")]
    NoPositivePairs,
    #[error("threshold set must be non-empty and strictly increasing")]
    Thresholds,
    #[error("round {round}: no non-constant (filter, threshold) candidate left")]
    NoCandidate { round: usize },
    #[error("positive-pair weights collapsed to zero in round {round}")]
    DegenerateWeights { round: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Candidate thresholds, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdSet(Vec<i32>);

impl ThresholdSet {
    pub fn new(values: Vec<i32>) -> Result<Self, TrainError> {
        if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TrainError::Thresholds);
        }
        Ok(ThresholdSet(values))
    }

    pub fn range(min: i32, max: i32) -> Result<Self, TrainError> {
        Self::new((min..=max).collect())
    }

    pub fn values(&self) -> &[i32] {
        &self.0
    }
}

impl Default for ThresholdSet {
    fn default() -> Self {
        ThresholdSet((-15..=15).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainOptions {
    pub rounds: usize,
    /// Whether a (filter, threshold) pair may be selected in more than one round.
    pub allow_repeat: bool,
}

impl TrainOptions {
    pub fn rounds(rounds: usize) -> Self {
        TrainOptions {
            rounds,
            allow_repeat: true,
        }
    }
}

/// Pair-level weak classifier: `+1` iff both responses fall on the same side
/// of `t`, with `b == t` counted on the lower side.
pub fn pair_classifier_output(b_a: i32, b_b: i32, t: i32) -> MatchLabel {
    if (b_a > t) == (b_b > t) {
        MatchLabel::Match
    } else {
        MatchLabel::NonMatch
    }
}

/// Weighted error of filter column `filter` at threshold `t`, summed in pair
/// order. `pairs` index rows of `responses`.
pub fn weighted_error(
    responses: &ResponseMatrix,
    pairs: &[(usize, usize, MatchLabel)],
    weights: &[f64],
    filter: usize,
    t: i32,
) -> f64 {
    let mut err = 0.0;
    for (&(a, b, y), &w) in pairs.iter().zip(weights) {
        let h = pair_classifier_output(responses.get(a, filter) as i32, responses.get(b, filter) as i32, t);
        if h != y {
            err += w;
        }
    }
    err
}

/// Confidence `ln((1 - e) / e)` of a weak classifier with error `e`, after
/// clamping `e` to `[EPSILON_CLAMP, 1 - EPSILON_CLAMP]`.
pub fn confidence(epsilon: f64) -> f64 {
    let e = epsilon.clamp(EPSILON_CLAMP, 1.0 - EPSILON_CLAMP);
    ((1.0 - e) / e).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub weights: Vec<f64>,
    pub round: usize,
    pub selected: Vec<WeakClassifier>,
}

pub struct Trainer<'a> {
    bank: &'a FilterBank,
    thresholds: &'a ThresholdSet,
    options: TrainOptions,
    responses: ResponseMatrix,
    /// (row of a, row of b, label) per training pair.
    pairs: Vec<(usize, usize, MatchLabel)>,
    state: TrainingState,
    used: HashSet<(usize, i32)>,
    training_pairs: usize,
    pair_seed: u64,
}

impl<'a> Trainer<'a> {
    pub fn new(
        train_pairs: &PairDataset,
        bank: &'a FilterBank,
        thresholds: &'a ThresholdSet,
        options: TrainOptions,
    ) -> Result<Self, TrainError> {
        if options.rounds == 0 || options.rounds >= bank.len() {
            return Err(TrainError::Rounds {
                rounds: options.rounds,
                bank: bank.len(),
            });
        }
        if train_pairs.is_empty() {
            return Err(TrainError::NoPairs);
        }
        if train_pairs.count(MatchLabel::Match) == 0 {
            return Err(TrainError::NoPositivePairs);
        }

        // only vectors referenced by a pair get a response row
        let mut row_of = vec![usize::MAX; train_pairs.vectors.len()];
        let mut used_vectors = Vec::new();
        let mut row = |v: usize| {
            if row_of[v] == usize::MAX {
                row_of[v] = used_vectors.len();
                used_vectors.push(v);
            }
            row_of[v]
        };
        let pairs: Vec<(usize, usize, MatchLabel)> =
            train_pairs.pairs.iter().map(|p| (row(p.a), row(p.b), p.y)).collect();
        let responses = response_matrix(bank, used_vectors.iter().map(|&v| &train_pairs.vectors[v].bits));

        let n = pairs.len();
        Ok(Trainer {
            bank,
            thresholds,
            options,
            responses,
            pairs,
            state: TrainingState {
                weights: vec![1.0 / n as f64; n],
                round: 0,
                selected: Vec::new(),
            },
            used: HashSet::new(),
            training_pairs: n,
            pair_seed: train_pairs.rng_seed,
        })
    }

    pub fn state(&self) -> &TrainingState {
        &self.state
    }

    pub fn responses(&self) -> &ResponseMatrix {
        &self.responses
    }

    /// Training pairs as (response row, response row, label).
    pub fn pair_rows(&self) -> &[(usize, usize, MatchLabel)] {
        &self.pairs
    }

    pub fn is_done(&self) -> bool {
        self.state.round >= self.options.rounds
    }

    /// Lowest-error threshold for one filter, ties to the smaller threshold.
    /// Thresholds outside the filter's achievable range give constant
    /// classifiers and are skipped.
    fn best_threshold(&self, filter: usize) -> Option<(f64, i32)> {
        let (rmin, rmax) = self.bank.filters()[filter].response_range();
        let weights = &self.state.weights;
        let spans: Vec<(i8, i8)> = self
            .pairs
            .iter()
            .map(|&(a, b, _)| {
                let (ra, rb) = (self.responses.get(a, filter), self.responses.get(b, filter));
                (ra.min(rb), ra.max(rb))
            })
            .collect();

        let mut best: Option<(f64, i32)> = None;
        for &t in self.thresholds.values() {
            if t < rmin || t >= rmax {
                continue;
            }
            if !self.options.allow_repeat && self.used.contains(&(filter, t)) {
                continue;
            }
            let mut err = 0.0;
            for ((&(lo, hi), &(_, _, y)), &w) in spans.iter().zip(&self.pairs).zip(weights) {
                // the pair is split (predicted non-matching) iff lo <= t < hi
                let split = lo as i32 <= t && t < hi as i32;
                if split == y.is_match() {
                    err += w;
                }
            }
            if best.is_none_or(|(e, _)| err < e) {
                best = Some((err, t));
            }
        }
        best
    }

    /// Runs one boosting round and returns the selected weak classifier.
    pub fn step(&mut self) -> Result<WeakClassifier, TrainError> {
        let round = self.state.round + 1;
        let candidates: Vec<Option<(f64, i32)>> = (0..self.bank.len())
            .into_par_iter()
            .map(|i| self.best_threshold(i))
            .collect();

        let mut best: Option<(f64, usize, i32)> = None;
        for (i, c) in candidates.into_iter().enumerate() {
            if let Some((err, t)) = c {
                if best.is_none_or(|(e, _, _)| err < e) {
                    best = Some((err, i, t));
                }
            }
        }
        let (epsilon, filter_index, threshold) = best.ok_or(TrainError::NoCandidate { round })?;

        let c = confidence(epsilon);
        if epsilon >= 0.5 {
            warn!("round {round}: best weighted error {epsilon:.6} >= 0.5, confidence {c:.6}");
        }

        let boost = c.exp();
        for (&(a, b, y), w) in self.pairs.iter().zip(self.state.weights.iter_mut()) {
            if y.is_match() {
                let h = pair_classifier_output(
                    self.responses.get(a, filter_index) as i32,
                    self.responses.get(b, filter_index) as i32,
                    threshold,
                );
                if h != y {
                    *w *= boost;
                }
            }
        }
        let positive_mass: f64 = self
            .pairs
            .iter()
            .zip(&self.state.weights)
            .filter(|((_, _, y), _)| y.is_match())
            .map(|(_, w)| w)
            .sum();
        if !(positive_mass > 0.0 && positive_mass.is_finite()) {
            return Err(TrainError::DegenerateWeights { round });
        }
        for ((_, _, y), w) in self.pairs.iter().zip(self.state.weights.iter_mut()) {
            if y.is_match() {
                *w /= positive_mass;
            }
        }

        let filter = self.bank.filters()[filter_index];
        let selected = WeakClassifier {
            filter_index,
            filter,
            threshold,
            confidence: c,
            training_error: epsilon,
        };
        info!(
            "round {round}: {} L={} P={} t={threshold} eps={epsilon:.6} c={c:.6}",
            filter.kind(),
            filter.length(),
            filter.prefix()
        );
        self.used.insert((filter_index, threshold));
        self.state.selected.push(selected);
        self.state.round = round;
        Ok(selected)
    }

    pub fn run(&mut self) -> Result<(), TrainError> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_model(self) -> Result<FingerprintModel, TrainError> {
        let metadata = ModelMetadata {
            bank: self.bank.params().clone(),
            bank_size: self.bank.len(),
            thresholds: self.thresholds.values().to_vec(),
            allow_repeat: self.options.allow_repeat,
            training_pairs: self.training_pairs,
            pair_seed: self.pair_seed,
            rng: RNG_ALGORITHM.to_owned(),
            config_hash: None,
        };
        Ok(FingerprintModel::new(self.state.selected, metadata)?)
    }
}

/// Trains an `rounds`-bit fingerprint model on `train_pairs`.
pub fn train(
    train_pairs: &PairDataset,
    bank: &FilterBank,
    thresholds: &ThresholdSet,
    rounds: usize,
) -> Result<FingerprintModel, TrainError> {
    train_with(train_pairs, bank, thresholds, TrainOptions::rounds(rounds))
}

pub fn train_with(
    train_pairs: &PairDataset,
    bank: &FilterBank,
    thresholds: &ThresholdSet,
    options: TrainOptions,
) -> Result<FingerprintModel, TrainError> {
    let mut trainer = Trainer::new(train_pairs, bank, thresholds, options)?;
    trainer.run()?;
    trainer.into_model()
}
