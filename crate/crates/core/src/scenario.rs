//! Evaluation scenarios: seeded sequences of vehicle colors drawn from a
//! configurable distribution.

use alloc::vec::Vec;
use core::fmt;

use crate::plant::Color;
use crate::rng::Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Production color mix used throughout evaluation: colors 1..=6 with
/// frequencies 6%, 38%, 29%, 14%, 10% and 3%.
pub const DEFAULT_DISTRIBUTION: [f64; 6] = [0.06, 0.38, 0.29, 0.14, 0.10, 0.03];

/// A reproducible sequence of vehicle colors.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Scenario {
    pub id: u32,
    pub seed: u64,
    pub colors: Vec<Color>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    /// Probabilities must be non-negative and sum to 1 (±1e-9).
    BadDistribution { sum: f64 },
    EmptyRequest,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::BadDistribution { sum } => {
                write!(f, "distribution must sum to 1, got {sum}")
            }
            ScenarioError::EmptyRequest => write!(f, "need n >= 1 scenarios of len >= 1"),
        }
    }
}

impl core::error::Error for ScenarioError {}

fn validate_distribution(dist: &[f64]) -> Result<(), ScenarioError> {
    let sum: f64 = dist.iter().sum();
    if dist.is_empty() || dist.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(ScenarioError::BadDistribution { sum });
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ScenarioError::BadDistribution { sum });
    }
    Ok(())
}

/// Draw one color sequence of length `len` i.i.d. from `dist` (color ids
/// are 1-based indices into the distribution).
pub fn sample_colors(dist: &[f64], len: usize, rng: &mut Rng) -> Vec<Color> {
    (0..len)
        .map(|_| Color(rng.sample_discrete(dist) as u8 + 1))
        .collect()
}

/// Generate `n` scenarios of `len` cars each, deterministically under
/// `seed`. Scenario ids are 1-based; each scenario records the derived
/// seed of its own stream.
pub fn generate_scenarios(
    dist: &[f64],
    n: usize,
    len: usize,
    seed: u64,
) -> Result<Vec<Scenario>, ScenarioError> {
    validate_distribution(dist)?;
    if n == 0 || len == 0 {
        return Err(ScenarioError::EmptyRequest);
    }
    let root = Rng::new(seed);
    Ok((0..n)
        .map(|i| {
            let stream_seed = seed.wrapping_add(1).wrapping_mul(i as u64 + 1);
            let mut rng = root.derive(i as u64);
            Scenario {
                id: i as u32 + 1,
                seed: stream_seed,
                colors: sample_colors(dist, len, &mut rng),
            }
        })
        .collect())
}

/// Where training episodes come from: sampled fresh from a distribution
/// (the infinite-task regime) or cycled from a fixed list.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Distribution { probs: Vec<f64>, len: usize },
    Fixed(Vec<Scenario>),
}

impl ScenarioSource {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            ScenarioSource::Distribution { probs, len } => {
                validate_distribution(probs)?;
                if *len == 0 {
                    return Err(ScenarioError::EmptyRequest);
                }
                Ok(())
            }
            ScenarioSource::Fixed(list) => {
                if list.is_empty() || list.iter().any(|s| s.colors.is_empty()) {
                    return Err(ScenarioError::EmptyRequest);
                }
                Ok(())
            }
        }
    }

    /// Color sequence for the `episode`-th training episode.
    pub fn episode_colors(&self, episode: u64, rng: &Rng) -> Vec<Color> {
        match self {
            ScenarioSource::Distribution { probs, len } => {
                let mut stream = rng.derive(episode);
                sample_colors(probs, *len, &mut stream)
            }
            ScenarioSource::Fixed(list) => {
                list[(episode % list.len() as u64) as usize].colors.clone()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_distribution() {
        assert!(generate_scenarios(&[0.5, 0.4], 1, 10, 0).is_err());
        assert!(generate_scenarios(&[1.2, -0.2], 1, 10, 0).is_err());
    }

    #[test]
    fn degenerate_distribution_yields_one_color() {
        let scenarios = generate_scenarios(&[1.0, 0.0, 0.0], 3, 50, 9).unwrap();
        for s in &scenarios {
            assert!(s.colors.iter().all(|&c| c == Color(1)));
        }
    }

    #[test]
    fn same_seed_same_scenarios() {
        let a = generate_scenarios(&DEFAULT_DISTRIBUTION, 30, 100, 1234).unwrap();
        let b = generate_scenarios(&DEFAULT_DISTRIBUTION, 30, 100, 1234).unwrap();
        assert_eq!(a, b);
        let c = generate_scenarios(&DEFAULT_DISTRIBUTION, 30, 100, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pooled_counts_match_distribution_within_3_sigma() {
        let scenarios = generate_scenarios(&DEFAULT_DISTRIBUTION, 30, 100, 77).unwrap();
        let total = 3000.0;
        let mut counts = [0usize; 6];
        for s in &scenarios {
            for c in &s.colors {
                counts[(c.0 - 1) as usize] += 1;
            }
        }
        for (i, &p) in DEFAULT_DISTRIBUTION.iter().enumerate() {
            let mean = total * p;
            let sigma = libm::sqrt(total * p * (1.0 - p));
            let observed = counts[i] as f64;
            assert!(
                (observed - mean).abs() <= 3.0 * sigma,
                "color {}: observed {observed}, expected {mean} ± {:.1}",
                i + 1,
                3.0 * sigma
            );
        }
    }
}
