//! Training reward: per-car bonus/penalty plus potential-based shaping.
//!
//! An emitted car is worth `0.1 + dup` when it continues the current output
//! run (dup being the run length so far, minus one) and `-0.1` when it
//! breaks it; the first car counts as continuing. On top of that the
//! shaping term `γ·Φ(s') − Φ(s)` rewards building same-color stacks inside
//! the lanes, with `Φ` a scaled count of adjacent same-color pairs across
//! all buffers. Steps that only insert ("holds") earn the shaping term
//! alone.

use crate::plant::{Color, PlantState, StepOutcome};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RewardConfig {
    /// Reward for a color change at the output (negative).
    pub penalty: f64,
    /// Base reward for continuing the current run.
    pub base_bonus: f64,
    /// Discount used in the shaping term.
    pub gamma: f64,
    /// Weight of one adjacent same-color pair inside a lane.
    pub potential_scale: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            penalty: -0.1,
            base_bonus: 0.1,
            gamma: 0.99,
            potential_scale: 0.1,
        }
    }
}

/// Reward for emitting `cur` after `prev`, where `dup` is the run counter
/// already updated for `cur`.
pub fn car_reward(cfg: &RewardConfig, prev: Option<Color>, cur: Color, dup: u32) -> f64 {
    match prev {
        Some(p) if p != cur => cfg.penalty,
        _ => cfg.base_bonus + f64::from(dup),
    }
}

/// Φ(s): adjacent same-color pairs within every lane, scaled.
pub fn potential(cfg: &RewardConfig, state: &PlantState) -> f64 {
    let mut pairs = 0usize;
    for lane in state.buffers() {
        let mut it = lane.iter();
        if let Some(mut prev) = it.next() {
            for c in it {
                if c == prev {
                    pairs += 1;
                }
                prev = c;
            }
        }
    }
    cfg.potential_scale * pairs as f64
}

/// Shaped step reward `car_r + γ·Φ(s') − Φ(s)`.
pub fn shaped_reward(cfg: &RewardConfig, s: &PlantState, s_next: &PlantState, car_r: f64) -> f64 {
    car_r + cfg.gamma * potential(cfg, s_next) - potential(cfg, s)
}

/// Car reward for a step outcome, given the state before the step.
/// Hold steps (no emission) earn zero.
pub fn outcome_car_reward(
    cfg: &RewardConfig,
    before: &PlantState,
    after: &PlantState,
    outcome: &StepOutcome,
) -> f64 {
    match outcome.emitted_color {
        Some(cur) => car_reward(cfg, before.last_emitted(), cur, after.dup()),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{PlantConfig, PlantState};
    use alloc::vec;
    use alloc::vec::Vec;

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn car_reward_cases() {
        assert_eq!(car_reward(&cfg(), Some(Color(2)), Color(5), 0), -0.1);
        assert_eq!(car_reward(&cfg(), Some(Color(2)), Color(2), 2), 2.1);
        assert_eq!(car_reward(&cfg(), None, Color(3), 0), 0.1);
    }

    fn fixture(lanes: &[&[u8]]) -> PlantState {
        let config = PlantConfig::new(lanes.len().max(2), 5, 6);
        let mut padded: Vec<Vec<Color>> = lanes
            .iter()
            .map(|l| l.iter().map(|&c| Color(c)).collect())
            .collect();
        padded.resize(config.num_buffers, Vec::new());
        PlantState::from_parts(config, vec![Color(1)], padded, Vec::new()).unwrap()
    }

    #[test]
    fn potential_counts_adjacent_pairs() {
        assert_eq!(potential(&cfg(), &fixture(&[&[], &[]])), 0.0);
        let phi = potential(&cfg(), &fixture(&[&[2, 2, 2]]));
        assert!((phi - 0.2).abs() < 1e-12);
        let phi = potential(&cfg(), &fixture(&[&[2, 3], &[3, 3]]));
        assert!((phi - 0.1).abs() < 1e-12);
    }

    #[test]
    fn shaped_reward_arithmetic() {
        let zero = fixture(&[&[], &[]]);
        assert_eq!(shaped_reward(&cfg(), &zero, &zero, 0.1), 0.1);

        let two_pairs = fixture(&[&[2, 2, 2]]);
        let r = shaped_reward(&cfg(), &two_pairs, &two_pairs, 0.5);
        assert!((r - (0.5 - 0.002)).abs() < 1e-12);

        let mut undiscounted = cfg();
        undiscounted.gamma = 1.0;
        let three = fixture(&[&[4, 4], &[1, 1]]);
        let from = fixture(&[&[], &[]]);
        let r = shaped_reward(&undiscounted, &from, &three, 0.0);
        assert!((r - 0.2).abs() < 1e-12);
    }

    #[test]
    fn shaping_telescopes_with_unit_gamma() {
        use crate::rng::Rng;
        // Over any complete episode with γ = 1 the shaping terms collapse
        // to Φ(s_T) − Φ(s_0).
        let mut reward_cfg = cfg();
        reward_cfg.gamma = 1.0;
        let plant_cfg = PlantConfig::new(3, 3, 4);
        let mut rng = Rng::new(2024);
        for _ in 0..100 {
            let scenario: Vec<Color> =
                (0..15).map(|_| Color(rng.below(4) as u8 + 1)).collect();
            let mut plant = PlantState::new(plant_cfg, &scenario).unwrap();
            let phi_start = potential(&reward_cfg, &plant);
            let mut shaping_sum = 0.0;
            while !plant.is_done() {
                let mask = plant.structural_mask().unwrap();
                let valid: Vec<usize> = mask.valid_indices().collect();
                let pick = valid[rng.below(valid.len())];
                let before_phi = potential(&reward_cfg, &plant);
                plant.apply_flat(pick).unwrap();
                let after_phi = potential(&reward_cfg, &plant);
                shaping_sum += reward_cfg.gamma * after_phi - before_phi;
            }
            let phi_end = potential(&reward_cfg, &plant);
            assert!(
                (shaping_sum - (phi_end - phi_start)).abs() < 1e-9,
                "telescoping violated: {shaping_sum} vs {}",
                phi_end - phi_start
            );
        }
    }

    #[test]
    fn hold_steps_earn_no_car_reward() {
        let plant_cfg = PlantConfig::new(3, 3, 4);
        let scenario = vec![Color(1), Color(2)];
        let mut plant = PlantState::new(plant_cfg, &scenario).unwrap();
        let before = plant.clone();
        let outcome = plant
            .apply(crate::plant::Action::new(0, 1))
            .unwrap();
        assert!(outcome.emitted_color.is_none());
        assert_eq!(outcome_car_reward(&cfg(), &before, &plant, &outcome), 0.0);
    }
}
