//! Deterministic state machine for the buffer-bank plant.
//!
//! Cars arrive on an input queue, pass through a bank of parallel FIFO
//! lanes, and leave on an output queue; the quantity to minimize is the
//! number of adjacent color changes in the output sequence.
//!
//! An action is a pair `(input_buffer, output_buffer)` flattened into a
//! `num_buffers²` discrete space. One step performs, atomically:
//!
//! 1. **Insert** — if the input queue is non-empty and lane `input_buffer`
//!    has a free slot, the incoming car is appended to that lane's tail.
//!    Selecting a full input lane is invalid while other lanes have room.
//! 2. **Extract** — if lane `output_buffer` is non-empty after the
//!    insertion, its head car is emitted to the output queue. Selecting an
//!    empty output lane emits nothing; the step is a pure insertion that
//!    builds up buffer inventory ("hold"). `(i, i)` on an empty lane is a
//!    pass-through: the car is inserted and immediately extracted.
//!
//! Two degenerate regimes keep every non-terminal state actionable: when
//! all lanes are full while cars are still pending, and when the input
//! queue has drained, the input half of the action is ignored and a step
//! is a pure extraction from a non-empty lane.
//!
//! Every step therefore inserts a car, emits a car, or both, so an episode
//! over `V` cars emits exactly `V` cars in at most `2·V` steps.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Paint color, identified by `1..=num_colors`. Zero is the "empty slot"
/// filler in observations and never appears as a car color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Color(pub u8);

impl Color {
    pub fn id(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Plant dimensions and the discount used by downstream reward shaping.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PlantConfig {
    pub num_buffers: usize,
    pub buffer_depth: usize,
    pub num_colors: u8,
    pub discount: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            num_buffers: 5,
            buffer_depth: 5,
            num_colors: 6,
            discount: 0.99,
        }
    }
}

impl PlantConfig {
    pub fn new(num_buffers: usize, buffer_depth: usize, num_colors: u8) -> Self {
        PlantConfig {
            num_buffers,
            buffer_depth,
            num_colors,
            ..PlantConfig::default()
        }
    }

    /// Size of the flat action space (`num_buffers²`).
    pub fn action_count(&self) -> usize {
        self.num_buffers * self.num_buffers
    }

    /// Length of the observation vector (`2 + num_buffers × buffer_depth`).
    pub fn observation_len(&self) -> usize {
        2 + self.num_buffers * self.buffer_depth
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if self.num_buffers < 1 || self.buffer_depth < 1 {
            return Err(PlantError::BadConfig("buffer dimensions must be >= 1"));
        }
        if self.num_colors < 2 {
            return Err(PlantError::BadConfig("need at least two colors"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(PlantError::BadConfig("discount must be in (0, 1]"));
        }
        Ok(())
    }
}

/// A `(input_buffer, output_buffer)` pair, also addressable by flat index
/// `input_buffer × num_buffers + output_buffer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Action {
    pub input_buffer: usize,
    pub output_buffer: usize,
}

impl Action {
    pub fn new(input_buffer: usize, output_buffer: usize) -> Self {
        Action {
            input_buffer,
            output_buffer,
        }
    }

    pub fn flat_index(&self, num_buffers: usize) -> usize {
        self.input_buffer * num_buffers + self.output_buffer
    }

    pub fn from_flat(index: usize, num_buffers: usize) -> Self {
        Action {
            input_buffer: index / num_buffers,
            output_buffer: index % num_buffers,
        }
    }
}

/// Normalized observation vector: incoming-car slot, every buffer slot in
/// row-major order (head first), last-emitted slot; color ids divided by
/// `num_colors`, zero for empty.
pub type Observation = Vec<f64>;

/// Boolean validity flags over the flat action space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVector(Vec<bool>);

impl MaskVector {
    pub fn all_false(len: usize) -> Self {
        MaskVector(vec![false; len])
    }

    pub fn from_vec(flags: Vec<bool>) -> Self {
        MaskVector(flags)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.0[index] = value;
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&v| v)
    }

    pub fn count_valid(&self) -> usize {
        self.0.iter().filter(|&&v| v).count()
    }

    /// Indices of all valid actions, ascending.
    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Intersection with another mask of the same length.
    pub fn and(&self, other: &MaskVector) -> MaskVector {
        debug_assert_eq!(self.len(), other.len());
        MaskVector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&a, &b)| a && b)
                .collect(),
        )
    }
}

impl core::ops::Index<usize> for MaskVector {
    type Output = bool;
    fn index(&self, index: usize) -> &bool {
        &self.0[index]
    }
}

/// What a single step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Color emitted to the output queue, if the step extracted a car.
    pub emitted_color: Option<Color>,
    /// Whether the step consumed the incoming car.
    pub inserted: bool,
    /// True when the emitted car's color differs from the previous output.
    pub color_changed: bool,
    /// True when every scenario car has been emitted.
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlantError {
    BadConfig(&'static str),
    EmptyScenario,
    /// A scenario car's color id is outside `1..=num_colors`.
    InvalidColor {
        color: u8,
        num_colors: u8,
    },
    /// The action is masked invalid; it is rejected, never corrected.
    MaskedAction {
        action: Action,
    },
    /// Action index outside the flat action space.
    ActionOutOfRange {
        index: usize,
        len: usize,
    },
    /// Operation requires a live episode.
    TerminalState,
}

impl fmt::Display for PlantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlantError::BadConfig(msg) => write!(f, "invalid plant config: {msg}"),
            PlantError::EmptyScenario => write!(f, "scenario must contain at least one car"),
            PlantError::InvalidColor { color, num_colors } => {
                write!(f, "color {color} outside 1..={num_colors}")
            }
            PlantError::MaskedAction { action } => write!(
                f,
                "action ({}, {}) is not valid in the current state",
                action.input_buffer, action.output_buffer
            ),
            PlantError::ActionOutOfRange { index, len } => {
                write!(f, "flat action {index} outside 0..{len}")
            }
            PlantError::TerminalState => write!(f, "episode already finished"),
        }
    }
}

impl core::error::Error for PlantError {}

/// Full simulator state: input queue, FIFO lanes, output history and the
/// consecutive-color counter.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    config: PlantConfig,
    scenario_len: usize,
    pending: VecDeque<Color>,
    buffers: Vec<VecDeque<Color>>,
    emitted: Vec<Color>,
    dup: u32,
}

impl PlantState {
    /// Set up a fresh episode: the whole scenario pending, all lanes empty.
    pub fn new(config: PlantConfig, scenario: &[Color]) -> Result<Self, PlantError> {
        config.validate()?;
        if scenario.is_empty() {
            return Err(PlantError::EmptyScenario);
        }
        for &c in scenario {
            if c.0 == 0 || c.0 > config.num_colors {
                return Err(PlantError::InvalidColor {
                    color: c.0,
                    num_colors: config.num_colors,
                });
            }
        }
        Ok(PlantState {
            config,
            scenario_len: scenario.len(),
            pending: scenario.iter().copied().collect(),
            buffers: vec![VecDeque::new(); config.num_buffers],
            emitted: Vec::with_capacity(scenario.len()),
            dup: 0,
        })
    }

    /// Reconstruct a mid-episode state from its parts. The duplication
    /// counter is recomputed from the output history and all container
    /// bounds are validated.
    pub fn from_parts(
        config: PlantConfig,
        pending: Vec<Color>,
        buffers: Vec<Vec<Color>>,
        emitted: Vec<Color>,
    ) -> Result<Self, PlantError> {
        config.validate()?;
        if buffers.len() != config.num_buffers {
            return Err(PlantError::BadConfig("buffer count mismatch"));
        }
        if buffers.iter().any(|b| b.len() > config.buffer_depth) {
            return Err(PlantError::BadConfig("lane exceeds buffer depth"));
        }
        let scenario_len = pending.len() + buffers.iter().map(|b| b.len()).sum::<usize>()
            + emitted.len();
        if scenario_len == 0 {
            return Err(PlantError::EmptyScenario);
        }
        for c in pending
            .iter()
            .chain(buffers.iter().flatten())
            .chain(emitted.iter())
        {
            if c.0 == 0 || c.0 > config.num_colors {
                return Err(PlantError::InvalidColor {
                    color: c.0,
                    num_colors: config.num_colors,
                });
            }
        }
        let dup = match emitted.last() {
            Some(&last) => {
                emitted.iter().rev().take_while(|&&c| c == last).count() as u32 - 1
            }
            None => 0,
        };
        Ok(PlantState {
            config,
            scenario_len,
            pending: pending.into_iter().collect(),
            buffers: buffers.into_iter().map(VecDeque::from).collect(),
            emitted,
            dup,
        })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn scenario_len(&self) -> usize {
        self.scenario_len
    }

    /// Next incoming car, if any.
    pub fn incoming(&self) -> Option<Color> {
        self.pending.front().copied()
    }

    pub fn pending(&self) -> &VecDeque<Color> {
        &self.pending
    }

    pub fn buffers(&self) -> &[VecDeque<Color>] {
        &self.buffers
    }

    pub fn emitted(&self) -> &[Color] {
        &self.emitted
    }

    /// Color of the most recently emitted car.
    pub fn last_emitted(&self) -> Option<Color> {
        self.emitted.last().copied()
    }

    /// Length-minus-one of the constant-color run at the output tail.
    pub fn dup(&self) -> u32 {
        self.dup
    }

    /// Total cars currently stored across all lanes.
    pub fn occupancy(&self) -> usize {
        self.buffers.iter().map(|b| b.len()).sum()
    }

    pub fn is_done(&self) -> bool {
        self.emitted.len() == self.scenario_len
    }

    fn lane_full(&self, lane: usize) -> bool {
        self.buffers[lane].len() >= self.config.buffer_depth
    }

    /// True when no lane can accept the incoming car.
    pub fn all_lanes_full(&self) -> bool {
        self.buffers.iter().all(|b| b.len() >= self.config.buffer_depth)
    }

    /// Whether the input half of actions is currently ignored (input queue
    /// drained, or every lane full).
    pub fn extract_only(&self) -> bool {
        self.pending.is_empty() || self.all_lanes_full()
    }

    /// Structural validity of every action in the current state.
    ///
    /// With cars pending and room somewhere, `(i, o)` is valid iff lane `i`
    /// has a free slot; the extract half never invalidates an action because
    /// an empty output lane simply emits nothing. In the extract-only
    /// regimes validity reduces to "lane `o` is non-empty".
    pub fn structural_mask(&self) -> Result<MaskVector, PlantError> {
        if self.is_done() {
            return Err(PlantError::TerminalState);
        }
        let n = self.config.num_buffers;
        let mut mask = MaskVector::all_false(self.config.action_count());
        if self.extract_only() {
            for o in 0..n {
                if !self.buffers[o].is_empty() {
                    for i in 0..n {
                        mask.set(i * n + o, true);
                    }
                }
            }
        } else {
            for i in 0..n {
                if !self.lane_full(i) {
                    for o in 0..n {
                        mask.set(i * n + o, true);
                    }
                }
            }
        }
        debug_assert!(mask.any(), "non-terminal state must have a valid action");
        Ok(mask)
    }

    /// Check a single action without building the whole mask.
    pub fn action_valid(&self, action: Action) -> bool {
        if self.is_done()
            || action.input_buffer >= self.config.num_buffers
            || action.output_buffer >= self.config.num_buffers
        {
            return false;
        }
        if self.extract_only() {
            !self.buffers[action.output_buffer].is_empty()
        } else {
            !self.lane_full(action.input_buffer)
        }
    }

    /// Apply a structurally valid action in place.
    pub fn apply(&mut self, action: Action) -> Result<StepOutcome, PlantError> {
        if self.is_done() {
            return Err(PlantError::TerminalState);
        }
        if action.input_buffer >= self.config.num_buffers
            || action.output_buffer >= self.config.num_buffers
        {
            return Err(PlantError::ActionOutOfRange {
                index: action.flat_index(self.config.num_buffers),
                len: self.config.action_count(),
            });
        }
        if !self.action_valid(action) {
            return Err(PlantError::MaskedAction { action });
        }

        let mut inserted = false;
        if !self.pending.is_empty() && !self.all_lanes_full() {
            let car = self.pending.pop_front().expect("pending checked non-empty");
            self.buffers[action.input_buffer].push_back(car);
            inserted = true;
        }

        let mut emitted_color = None;
        let mut color_changed = false;
        if let Some(car) = self.buffers[action.output_buffer].pop_front() {
            let prev = self.emitted.last().copied();
            color_changed = prev.is_some_and(|p| p != car);
            self.dup = match prev {
                Some(p) if p == car => self.dup + 1,
                _ => 0,
            };
            self.emitted.push(car);
            emitted_color = Some(car);
        }

        debug_assert!(
            inserted || emitted_color.is_some(),
            "every valid step makes progress"
        );
        debug_assert_eq!(
            self.pending.len() + self.occupancy() + self.emitted.len(),
            self.scenario_len,
            "car conservation"
        );

        Ok(StepOutcome {
            emitted_color,
            inserted,
            color_changed,
            done: self.is_done(),
        })
    }

    /// Apply an action given by flat index.
    pub fn apply_flat(&mut self, index: usize) -> Result<StepOutcome, PlantError> {
        let len = self.config.action_count();
        if index >= len {
            return Err(PlantError::ActionOutOfRange { index, len });
        }
        self.apply(Action::from_flat(index, self.config.num_buffers))
    }

    /// Encode the state as the normalized observation vector.
    pub fn encode_observation(&self) -> Observation {
        let scale = 1.0 / f64::from(self.config.num_colors);
        let mut obs = Vec::with_capacity(self.config.observation_len());
        obs.push(self.incoming().map_or(0.0, |c| f64::from(c.0) * scale));
        for lane in &self.buffers {
            for slot in 0..self.config.buffer_depth {
                obs.push(
                    lane.get(slot)
                        .map_or(0.0, |c| f64::from(c.0) * scale),
                );
            }
        }
        obs.push(self.last_emitted().map_or(0.0, |c| f64::from(c.0) * scale));
        obs
    }
}

/// Number of adjacent color changes in an output sequence — the
/// evaluation metric.
pub fn color_change_count(emitted: &[Color]) -> usize {
    emitted.windows(2).filter(|w| w[0] != w[1]).count()
}
