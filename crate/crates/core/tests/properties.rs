//! Cross-module invariants, checked over randomized episodes and by
//! exhaustive enumeration on small plants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use colorbatch_core::heuristics::heuristic_mask;
use colorbatch_core::plant::{color_change_count, Color, PlantConfig, PlantState};
use colorbatch_core::reward::{outcome_car_reward, potential, RewardConfig};
use colorbatch_core::rng::Rng;

fn arb_scenario(max_len: usize, colors: u8) -> impl Strategy<Value = Vec<Color>> {
    prop::collection::vec(1..=colors, 1..=max_len)
        .prop_map(|ids| ids.into_iter().map(Color).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Conservation, progress, dup consistency and the equivalence of the
    /// change metric with the per-step flags, over random masked walks.
    #[test]
    fn episode_invariants(
        scenario in arb_scenario(24, 4),
        walk_seed in any::<u64>(),
        buffers in 1usize..=4,
        depth in 1usize..=3,
    ) {
        let cfg = PlantConfig::new(buffers, depth, 4);
        let mut plant = PlantState::new(cfg, &scenario).unwrap();
        let mut rng = Rng::new(walk_seed);
        let total = scenario.len();
        let mut steps = 0usize;
        let mut flagged_changes = 0usize;

        while !plant.is_done() {
            let mask = plant.structural_mask().unwrap();
            prop_assert!(mask.any());
            let valid: Vec<usize> = mask.valid_indices().collect();
            let pick = valid[rng.below(valid.len())];
            let before_emitted = plant.emitted().len();
            let outcome = plant.apply_flat(pick).unwrap();
            steps += 1;

            // conservation
            prop_assert_eq!(
                plant.pending().len() + plant.occupancy() + plant.emitted().len(),
                total
            );
            // progress: emits at most one car per step, episodes bounded
            prop_assert!(plant.emitted().len() - before_emitted <= 1);
            prop_assert!(steps <= 2 * total);
            if outcome.color_changed {
                flagged_changes += 1;
            }
            // dup equals the recomputed run-length-minus-one
            let recomputed = plant
                .emitted()
                .last()
                .map(|&last| {
                    plant
                        .emitted()
                        .iter()
                        .rev()
                        .take_while(|&&c| c == last)
                        .count() as u32
                        - 1
                })
                .unwrap_or(0);
            prop_assert_eq!(plant.dup(), recomputed);
        }
        prop_assert_eq!(plant.emitted().len(), total);
        prop_assert_eq!(color_change_count(plant.emitted()), flagged_changes);
    }

    /// Structural mask soundness in both directions: masked-true actions
    /// apply cleanly, masked-false actions error without mutating.
    #[test]
    fn mask_soundness_exhaustive(
        scenario in arb_scenario(12, 3),
        walk_seed in any::<u64>(),
    ) {
        let cfg = PlantConfig::new(2, 2, 3);
        let mut plant = PlantState::new(cfg, &scenario).unwrap();
        let mut rng = Rng::new(walk_seed);
        while !plant.is_done() {
            let mask = plant.structural_mask().unwrap();
            for flat in 0..cfg.action_count() {
                let mut probe = plant.clone();
                let result = probe.apply_flat(flat);
                if mask.get(flat) {
                    prop_assert!(result.is_ok(), "masked-valid action {flat} failed");
                } else {
                    prop_assert!(result.is_err(), "masked-invalid action {flat} applied");
                    prop_assert_eq!(&probe, &plant);
                }
            }
            let valid: Vec<usize> = mask.valid_indices().collect();
            plant.apply_flat(valid[rng.below(valid.len())]).unwrap();
        }
    }

    /// The heuristic mask stays inside the structural mask and never
    /// strands a live episode.
    #[test]
    fn heuristic_mask_contained_and_live(
        scenario in arb_scenario(30, 6),
        walk_seed in any::<u64>(),
    ) {
        let cfg = PlantConfig::default();
        let mut plant = PlantState::new(cfg, &scenario).unwrap();
        let mut rng = Rng::new(walk_seed);
        while !plant.is_done() {
            let structural = plant.structural_mask().unwrap();
            let mask = heuristic_mask(&plant).unwrap();
            prop_assert!(mask.any());
            for i in mask.valid_indices() {
                prop_assert!(structural.get(i));
            }
            let valid: Vec<usize> = mask.valid_indices().collect();
            plant.apply_flat(valid[rng.below(valid.len())]).unwrap();
        }
    }
}

// --- policy invariance under potential-based shaping -----------------------

type StateKey = (usize, Vec<Vec<u8>>, u8, u32);

fn key_of(state: &PlantState) -> StateKey {
    (
        state.pending().len(),
        state
            .buffers()
            .iter()
            .map(|b| b.iter().map(|c| c.id()).collect())
            .collect(),
        state.last_emitted().map_or(0, |c| c.id()),
        state.dup(),
    )
}

/// Optimal state value by backward induction; `shaped` switches the reward
/// between the raw car reward and the potential-shaped one.
fn optimal_value(
    state: &PlantState,
    reward_cfg: &RewardConfig,
    shaped: bool,
    memo: &mut BTreeMap<StateKey, f64>,
) -> f64 {
    if state.is_done() {
        return 0.0;
    }
    let key = key_of(state);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mask = state.structural_mask().unwrap();
    let mut best = f64::NEG_INFINITY;
    for flat in mask.valid_indices() {
        let mut next = state.clone();
        let outcome = next.apply_flat(flat).unwrap();
        let mut r = outcome_car_reward(reward_cfg, state, &next, &outcome);
        if shaped {
            r += reward_cfg.gamma * potential(reward_cfg, &next) - potential(reward_cfg, state);
        }
        let v = r + reward_cfg.gamma * optimal_value(&next, reward_cfg, shaped, memo);
        if v > best {
            best = v;
        }
    }
    memo.insert(key, best);
    best
}

fn optimal_actions(
    state: &PlantState,
    reward_cfg: &RewardConfig,
    shaped: bool,
    memo: &mut BTreeMap<StateKey, f64>,
) -> Vec<usize> {
    let mask = state.structural_mask().unwrap();
    let mut q: Vec<(usize, f64)> = Vec::new();
    for flat in mask.valid_indices() {
        let mut next = state.clone();
        let outcome = next.apply_flat(flat).unwrap();
        let mut r = outcome_car_reward(reward_cfg, state, &next, &outcome);
        if shaped {
            r += reward_cfg.gamma * potential(reward_cfg, &next) - potential(reward_cfg, state);
        }
        q.push((
            flat,
            r + reward_cfg.gamma * optimal_value(&next, reward_cfg, shaped, memo),
        ));
    }
    let best = q.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    q.into_iter()
        .filter(|&(_, v)| v >= best - 1e-9)
        .map(|(a, _)| a)
        .collect()
}

/// Shaping must not change which actions are optimal, anywhere in the
/// reachable state space of a small instance.
#[test]
fn shaping_preserves_optimal_policies() {
    let cfg = PlantConfig::new(2, 2, 3);
    let reward_cfg = RewardConfig::default();
    let mut rng = Rng::new(20240917);
    for case in 0..6 {
        let len = 5 + (case % 4);
        let scenario: Vec<Color> = (0..len).map(|_| Color(rng.below(3) as u8 + 1)).collect();
        let root = PlantState::new(cfg, &scenario).unwrap();

        let mut plain_memo = BTreeMap::new();
        let mut shaped_memo = BTreeMap::new();

        // enumerate every reachable non-terminal state
        let mut stack = vec![root];
        let mut seen = std::collections::BTreeSet::new();
        while let Some(state) = stack.pop() {
            if state.is_done() || !seen.insert(key_of(&state)) {
                continue;
            }
            let plain = optimal_actions(&state, &reward_cfg, false, &mut plain_memo);
            let shaped = optimal_actions(&state, &reward_cfg, true, &mut shaped_memo);
            assert_eq!(
                plain, shaped,
                "optimal action sets diverged on scenario {scenario:?} at {:?}",
                key_of(&state)
            );
            let mask = state.structural_mask().unwrap();
            for flat in mask.valid_indices() {
                let mut next = state.clone();
                next.apply_flat(flat).unwrap();
                stack.push(next);
            }
        }
    }
}
