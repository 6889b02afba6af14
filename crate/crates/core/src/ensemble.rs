//! Ensemble inference over trained policy networks: hard voting above a
//! threshold on the modal greedy pick, soft voting (weighted sum of the
//! per-model masked distributions) otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::heuristics::heuristic_mask;
use crate::neural::{DenseNet, NetError};
use crate::plant::{color_change_count, Color, MaskVector, PlantConfig, PlantError, PlantState};
use crate::sac::{greedy_action, masked_distribution};

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleError {
    NoModels,
    /// Checkpoints disagree on architecture.
    ShapeMismatch,
    BadWeights,
    Net(NetError),
    Plant(PlantError),
}

impl fmt::Display for EnsembleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleError::NoModels => write!(f, "ensemble needs at least one model"),
            EnsembleError::ShapeMismatch => write!(f, "models disagree on architecture"),
            EnsembleError::BadWeights => write!(f, "weights must be finite, non-negative, one per model"),
            EnsembleError::Net(e) => write!(f, "{e}"),
            EnsembleError::Plant(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EnsembleError {}

impl From<NetError> for EnsembleError {
    fn from(e: NetError) -> Self {
        EnsembleError::Net(e)
    }
}
impl From<PlantError> for EnsembleError {
    fn from(e: PlantError) -> Self {
        EnsembleError::Plant(e)
    }
}

/// Hard-voting threshold: `n/2 − 1`, exact halving. The modal pick count
/// is compared against this in real arithmetic.
pub fn hard_vote_threshold(n_models: usize) -> f64 {
    n_models as f64 / 2.0 - 1.0
}

/// Which voting rule produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteKind {
    Hard,
    Soft,
}

/// Decide an action from per-model masked distributions.
///
/// Each model votes with its greedy pick. If a unique modal pick clears
/// the threshold the vote is hard; multiplicity ties between different
/// actions and below-threshold counts fall through to soft voting, the
/// argmax of the weighted sum of the distributions over the masked
/// support (ties to the lowest flat index).
pub fn vote(
    per_model_probs: &[Vec<f64>],
    weights: &[f64],
    mask: &MaskVector,
    strict_threshold: bool,
) -> (usize, VoteKind) {
    let n_models = per_model_probs.len();
    debug_assert!(n_models > 0 && weights.len() == n_models);

    let picks: Vec<usize> = per_model_probs.iter().map(|p| greedy_action(p)).collect();
    let mut counts = vec![0usize; mask.len()];
    for &p in &picks {
        counts[p] += 1;
    }
    let modal_count = counts.iter().copied().max().unwrap_or(0);
    let modal_actions: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter_map(|(a, &c)| (c == modal_count && c > 0).then_some(a))
        .collect();

    let threshold = hard_vote_threshold(n_models);
    let val = modal_count as f64;
    let clears = if strict_threshold {
        val > threshold
    } else {
        val >= threshold
    };
    if clears && modal_actions.len() == 1 {
        return (modal_actions[0], VoteKind::Hard);
    }

    let mut best = 0usize;
    let mut best_sum = f64::NEG_INFINITY;
    for a in mask.valid_indices() {
        let sum: f64 = per_model_probs
            .iter()
            .zip(weights.iter())
            .map(|(p, &w)| w * p[a])
            .sum();
        if sum > best_sum {
            best_sum = sum;
            best = a;
        }
    }
    (best, VoteKind::Soft)
}

/// A loaded, validated set of policy networks with soft-voting weights.
#[derive(Debug, Clone)]
pub struct Ensemble {
    models: Vec<DenseNet>,
    weights: Vec<f64>,
    strict_threshold: bool,
}

impl Ensemble {
    /// Uniform weights, strict (`>`) threshold comparison.
    pub fn new(models: Vec<DenseNet>) -> Result<Self, EnsembleError> {
        let n = models.len();
        Self::with_weights(models, vec![1.0; n], true)
    }

    pub fn with_weights(
        models: Vec<DenseNet>,
        weights: Vec<f64>,
        strict_threshold: bool,
    ) -> Result<Self, EnsembleError> {
        if models.is_empty() {
            return Err(EnsembleError::NoModels);
        }
        let dims = models[0].dims();
        if models.iter().any(|m| m.dims() != dims) {
            return Err(EnsembleError::ShapeMismatch);
        }
        if weights.len() != models.len()
            || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(EnsembleError::BadWeights);
        }
        Ok(Ensemble {
            models,
            weights,
            strict_threshold,
        })
    }

    /// Load from serialized checkpoints.
    pub fn from_checkpoints(blobs: &[Vec<u8>]) -> Result<Self, EnsembleError> {
        let models = blobs
            .iter()
            .map(|b| DenseNet::from_bytes(b))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(models)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Ensemble decision for one observation under a mask.
    pub fn action(&self, obs: &[f64], mask: &MaskVector) -> usize {
        let per_model: Vec<Vec<f64>> = self
            .models
            .iter()
            .map(|m| masked_distribution(&m.forward(obs), mask))
            .collect();
        vote(&per_model, &self.weights, mask, self.strict_threshold).0
    }

    /// Roll one scenario to completion; returns the color-change count.
    pub fn rollout(
        &self,
        plant_cfg: PlantConfig,
        colors: &[Color],
    ) -> Result<usize, EnsembleError> {
        let mut plant = PlantState::new(plant_cfg, colors)?;
        while !plant.is_done() {
            let mask = heuristic_mask(&plant)?;
            let obs = plant.encode_observation();
            let action = self.action(&obs, &mask);
            plant.apply_flat(action)?;
        }
        Ok(color_change_count(plant.emitted()))
    }
}

/// Color-change count per scenario under the ensemble policy.
pub fn evaluate_ensemble(
    ensemble: &Ensemble,
    plant_cfg: PlantConfig,
    scenarios: &[Vec<Color>],
) -> Result<Vec<usize>, EnsembleError> {
    scenarios
        .iter()
        .map(|colors| ensemble.rollout(plant_cfg, colors))
        .collect()
}
