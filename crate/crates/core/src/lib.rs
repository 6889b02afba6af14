//! Core algorithms for color-batching re-sequencing: a buffer-bank plant
//! simulator, paint-shop heuristics (LP/CM/UCM) used both as a baseline policy
//! and as an action-masking layer, potential-based reward shaping, a small
//! dense-network substrate with exact gradients, a masked discrete
//! soft actor-critic trainer, ensemble inference, and the evaluation
//! primitives (scenario generation, statistics, exhaustive oracle).
//!
//! The crate is `no_std` + `alloc`; all floating-point math goes through
//! [`libm`] so results are identical with or without the standard library.
//! File formats, the CLI and the HTTP session service live in the companion
//! `colorbatch` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ensemble;
pub mod heuristics;
pub mod neural;
pub mod plant;
pub mod reward;
pub mod rng;
pub mod sac;
pub mod scenario;
pub mod search;
pub mod stats;

pub use plant::{
    Action, Color, MaskVector, Observation, PlantConfig, PlantError, PlantState, StepOutcome,
};
pub use scenario::Scenario;
