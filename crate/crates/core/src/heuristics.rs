//! Paint-shop insertion/extraction heuristics and the action-masking layer
//! built from them.
//!
//! Three rules drive both the deterministic baseline policy and the mask
//! handed to the learning agent:
//!
//! * **LP** (lowest priority / least diverse) — insert into the lane whose
//!   current contents span the fewest distinct colors; an empty lane counts
//!   as zero and is preferred.
//! * **CM** (color memory) — on input, insert into a lane whose tail car
//!   matches the incoming color; on output, extract from a lane whose head
//!   matches the last emitted color.
//! * **UCM** (unseen color memory) — when no head continues the current
//!   output run, extract the head whose color has the most cars still in
//!   the system (buffers plus input queue).
//!
//! Rule precedence is CM before LP on input and CM before UCM on output;
//! index ties always resolve to the lowest ("most top") lane.
//!
//! The mask additionally keeps every hold action (an empty output lane)
//! available while cars are pending, so the agent — not the rules — decides
//! when to trade buffer inventory for an emission. The baseline policy
//! resolves that choice with a fixed fill threshold.

use alloc::vec::Vec;

use crate::plant::{Action, Color, MaskVector, PlantConfig, PlantError, PlantState};

/// Which input rule produced the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputRule {
    ColorMemory,
    LeastDiverse,
    /// Input half of the action is ignored (drained queue or no free slot).
    Ignored,
}

/// Which output rule produced the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputRule {
    ColorMemory,
    MostRemaining,
    /// Every lane is empty; only pass-through/hold targets exist.
    None,
}

/// Candidate lanes for the two halves of the next action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicCandidates {
    pub input_set: Vec<usize>,
    pub output_set: Vec<usize>,
    pub input_rule: InputRule,
    pub output_rule: OutputRule,
}

/// Non-full lanes with the fewest distinct colors. Empty when every lane
/// is full.
pub fn lp_input(state: &PlantState, _incoming: Color) -> Vec<usize> {
    let depth = state.config().buffer_depth;
    let mut best = usize::MAX;
    let mut set = Vec::new();
    for (i, lane) in state.buffers().iter().enumerate() {
        if lane.len() >= depth {
            continue;
        }
        let mut seen = [false; 256];
        let mut distinct = 0usize;
        for c in lane {
            if !seen[c.0 as usize] {
                seen[c.0 as usize] = true;
                distinct += 1;
            }
        }
        if distinct < best {
            best = distinct;
            set.clear();
            set.push(i);
        } else if distinct == best {
            set.push(i);
        }
    }
    set
}

/// Non-full lanes whose tail car matches the incoming color.
pub fn cm_input(state: &PlantState, incoming: Color) -> Vec<usize> {
    let depth = state.config().buffer_depth;
    state
        .buffers()
        .iter()
        .enumerate()
        .filter(|(_, lane)| lane.len() < depth && lane.back() == Some(&incoming))
        .map(|(i, _)| i)
        .collect()
}

/// Non-empty lanes whose head car matches the last emitted color. Empty
/// when nothing has been emitted yet.
pub fn cm_output(state: &PlantState, last_out: Option<Color>) -> Vec<usize> {
    let Some(last) = last_out else {
        return Vec::new();
    };
    state
        .buffers()
        .iter()
        .enumerate()
        .filter(|(_, lane)| lane.front() == Some(&last))
        .map(|(i, _)| i)
        .collect()
}

/// Among non-empty lanes, those whose head color has the highest remaining
/// count across all lanes and the input queue. At least one lane must be
/// non-empty.
pub fn ucm_output(state: &PlantState) -> Vec<usize> {
    assert!(
        state.occupancy() > 0,
        "ucm_output requires a non-empty lane"
    );
    let mut remaining = [0usize; 256];
    for lane in state.buffers() {
        for c in lane {
            remaining[c.0 as usize] += 1;
        }
    }
    for c in state.pending() {
        remaining[c.0 as usize] += 1;
    }
    let mut best = 0usize;
    let mut set = Vec::new();
    for (i, lane) in state.buffers().iter().enumerate() {
        let Some(head) = lane.front() else { continue };
        let count = remaining[head.0 as usize];
        if count > best {
            best = count;
            set.clear();
            set.push(i);
        } else if count == best {
            set.push(i);
        }
    }
    set
}

/// Candidate sets under the CM-before-LP / CM-before-UCM precedence.
pub fn candidates(state: &PlantState) -> HeuristicCandidates {
    let (input_set, input_rule) = match state.incoming() {
        Some(incoming) if !state.all_lanes_full() => {
            let cm = cm_input(state, incoming);
            if cm.is_empty() {
                (lp_input(state, incoming), InputRule::LeastDiverse)
            } else {
                (cm, InputRule::ColorMemory)
            }
        }
        _ => ((0..state.config().num_buffers).collect(), InputRule::Ignored),
    };
    let (output_set, output_rule) = {
        let cm = cm_output(state, state.last_emitted());
        if !cm.is_empty() {
            (cm, OutputRule::ColorMemory)
        } else if state.occupancy() > 0 {
            (ucm_output(state), OutputRule::MostRemaining)
        } else {
            (Vec::new(), OutputRule::None)
        }
    };
    HeuristicCandidates {
        input_set,
        output_set,
        input_rule,
        output_rule,
    }
}

/// Heuristic-restricted action mask: the cross product of the candidate
/// sets, widened with every hold target (empty output lane) while cars are
/// pending, intersected with the structural mask. Falls back to the plain
/// structural mask if the intersection would be empty.
pub fn heuristic_mask(state: &PlantState) -> Result<MaskVector, PlantError> {
    let structural = state.structural_mask()?;
    let n = state.config().num_buffers;
    let cand = candidates(state);

    let mut output_ok = alloc::vec![false; n];
    for &o in &cand.output_set {
        output_ok[o] = true;
    }
    if !state.extract_only() {
        // Holds stay available: the agent chooses when to emit.
        for (o, lane) in state.buffers().iter().enumerate() {
            if lane.is_empty() {
                output_ok[o] = true;
            }
        }
    }

    let mut mask = MaskVector::all_false(structural.len());
    for &i in &cand.input_set {
        for (o, &ok) in output_ok.iter().enumerate() {
            if ok {
                mask.set(i * n + o, true);
            }
        }
    }
    let mask = mask.and(&structural);
    if mask.any() {
        Ok(mask)
    } else {
        Ok(structural)
    }
}

/// Buffer inventory the baseline builds before it starts emitting.
/// Calibrated to `num_buffers + buffer_depth − 1` (9 on the default 5×5
/// plant), the operating point where the baseline's color-change counts
/// match the reference heuristic results this implementation is measured
/// against. Larger inventories batch better; the learning agent is free to
/// discover that through the hold actions in its mask.
pub fn default_fill_target(config: &PlantConfig) -> usize {
    config.num_buffers + config.buffer_depth - 1
}

/// Deterministic baseline action with an explicit fill threshold.
///
/// Below the threshold the policy holds the incoming car (inserting by
/// CM/LP, directing the output half at an empty lane); otherwise it emits
/// by CM/UCM. Ties resolve to the lowest lane index.
pub fn baseline_action(state: &PlantState, fill_target: usize) -> Result<Action, PlantError> {
    if state.is_done() {
        return Err(PlantError::TerminalState);
    }
    let cand = candidates(state);
    let emit = cand.output_set.first().copied();

    if state.extract_only() {
        let o = emit.expect("non-terminal extract-only state has a non-empty lane");
        return Ok(Action::new(0, o));
    }

    let i = *cand
        .input_set
        .first()
        .expect("some lane has room when not extract-only");
    if state.occupancy() < fill_target {
        let channel = state
            .buffers()
            .iter()
            .enumerate()
            .find(|(o, lane)| *o != i && lane.is_empty())
            .map(|(o, _)| o);
        if let Some(o) = channel {
            return Ok(Action::new(i, o));
        }
    }
    match emit {
        Some(o) => Ok(Action::new(i, o)),
        // Every lane empty and no hold channel (single-lane plant):
        // pass the car straight through.
        None => Ok(Action::new(i, i)),
    }
}

/// Baseline action with the default fill threshold.
pub fn heuristic_policy_step(state: &PlantState) -> Result<Action, PlantError> {
    baseline_action(state, default_fill_target(state.config()))
}

/// Roll a scenario through the baseline policy; returns the emitted
/// sequence and the number of steps taken.
pub fn run_baseline(
    config: PlantConfig,
    scenario: &[Color],
    fill_target: usize,
) -> Result<(Vec<Color>, usize), PlantError> {
    let mut plant = PlantState::new(config, scenario)?;
    let mut steps = 0usize;
    while !plant.is_done() {
        let action = baseline_action(&plant, fill_target)?;
        plant.apply(action)?;
        steps += 1;
    }
    Ok((plant.emitted().to_vec(), steps))
}
