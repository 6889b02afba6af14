//! Exhaustive minimum-color-change oracle for tiny plant instances.
//!
//! Memoized depth-first search over canonicalized states, used to verify
//! that the heuristic baseline and trained policies never beat the true
//! optimum. Lane order is irrelevant to future dynamics, so lanes are
//! sorted into the state key; the output history collapses to its last
//! color.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::plant::{Color, PlantConfig, PlantError, PlantState};

/// Instances above these bounds are refused outright.
pub const MAX_TOTAL_SLOTS: usize = 6;
pub const MAX_SCENARIO_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// `num_buffers × buffer_depth` exceeds [`MAX_TOTAL_SLOTS`] or the
    /// scenario is longer than [`MAX_SCENARIO_LEN`].
    InstanceTooLarge { slots: usize, len: usize },
    Plant(PlantError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::InstanceTooLarge { slots, len } => write!(
                f,
                "instance too large for exhaustive search: {slots} slots, {len} cars \
                 (limits {MAX_TOTAL_SLOTS}/{MAX_SCENARIO_LEN})"
            ),
            OracleError::Plant(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for OracleError {}

impl From<PlantError> for OracleError {
    fn from(e: PlantError) -> Self {
        OracleError::Plant(e)
    }
}

fn state_key(state: &PlantState) -> Vec<u8> {
    let mut lanes: Vec<Vec<u8>> = state
        .buffers()
        .iter()
        .map(|lane| lane.iter().map(|c| c.0).collect())
        .collect();
    lanes.sort_unstable();
    let mut key = Vec::with_capacity(2 + lanes.iter().map(|l| l.len() + 1).sum::<usize>());
    key.push(state.pending().len() as u8);
    key.push(state.last_emitted().map_or(0, |c| c.0));
    for lane in lanes {
        key.extend_from_slice(&lane);
        key.push(0xFF);
    }
    key
}

fn best_from(state: &PlantState, memo: &mut BTreeMap<Vec<u8>, usize>) -> usize {
    if state.is_done() {
        return 0;
    }
    let key = state_key(state);
    if let Some(&cached) = memo.get(&key) {
        return cached;
    }
    let mask = state
        .structural_mask()
        .expect("search only visits non-terminal states");
    let mut best = usize::MAX;
    let mut seen_children: Vec<Vec<u8>> = Vec::new();
    for flat in mask.valid_indices() {
        let mut child = state.clone();
        let outcome = child.apply_flat(flat).expect("masked action applies");
        let child_key = state_key(&child);
        if seen_children.contains(&child_key) {
            continue;
        }
        seen_children.push(child_key);
        let step_cost = usize::from(outcome.color_changed);
        let total = step_cost + best_from(&child, memo);
        if total < best {
            best = total;
        }
    }
    memo.insert(key, best);
    best
}

/// Minimum achievable color-change count for `scenario` on a plant of the
/// given dimensions, by exhaustive search over all action sequences.
pub fn oracle_min_changes(
    config: PlantConfig,
    scenario: &[Color],
) -> Result<usize, OracleError> {
    let slots = config.num_buffers * config.buffer_depth;
    if slots > MAX_TOTAL_SLOTS || scenario.len() > MAX_SCENARIO_LEN {
        return Err(OracleError::InstanceTooLarge {
            slots,
            len: scenario.len(),
        });
    }
    let state = PlantState::new(config, scenario)?;
    let mut memo = BTreeMap::new();
    Ok(best_from(&state, &mut memo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{default_fill_target, run_baseline};
    use crate::plant::color_change_count;
    use crate::rng::Rng;
    use alloc::vec::Vec;

    fn colors(ids: &[u8]) -> Vec<Color> {
        ids.iter().map(|&c| Color(c)).collect()
    }

    #[test]
    fn alternating_pair_coalesces_once() {
        let cfg = PlantConfig::new(2, 2, 3);
        let n = oracle_min_changes(cfg, &colors(&[1, 2, 1, 2])).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn uniform_scenario_is_free() {
        let cfg = PlantConfig::new(2, 2, 3);
        assert_eq!(oracle_min_changes(cfg, &colors(&[2; 10])).unwrap(), 0);
    }

    #[test]
    fn single_slot_plant_equals_raw_count() {
        let cfg = PlantConfig::new(1, 1, 3);
        let scenario = colors(&[1, 2, 2, 3, 1, 3, 3, 2]);
        assert_eq!(
            oracle_min_changes(cfg, &scenario).unwrap(),
            color_change_count(&scenario)
        );
    }

    #[test]
    fn refuses_oversized_instances() {
        let cfg = PlantConfig::new(5, 5, 6);
        assert!(matches!(
            oracle_min_changes(cfg, &colors(&[1, 2])),
            Err(OracleError::InstanceTooLarge { .. })
        ));
        let cfg = PlantConfig::new(2, 2, 3);
        assert!(matches!(
            oracle_min_changes(cfg, &colors(&[1; 13])),
            Err(OracleError::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_never_beaten_by_baseline() {
        let cfg = PlantConfig::new(2, 2, 3);
        let mut rng = Rng::new(123);
        let mut strictly_better = 0usize;
        for _ in 0..25 {
            let len = 6 + rng.below(7); // 6..=12 cars
            let scenario: Vec<Color> =
                (0..len).map(|_| Color(rng.below(3) as u8 + 1)).collect();
            let optimal = oracle_min_changes(cfg, &scenario).unwrap();
            let (emitted, _) =
                run_baseline(cfg, &scenario, default_fill_target(&cfg)).unwrap();
            let heuristic = color_change_count(&emitted);
            assert!(optimal <= heuristic, "oracle must lower-bound the baseline");
            assert!(optimal <= color_change_count(&scenario));
            if optimal < heuristic {
                strictly_better += 1;
            }
        }
        assert!(strictly_better > 0, "expected the oracle to win somewhere");
    }
}
