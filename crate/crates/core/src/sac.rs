//! Masked discrete soft actor-critic: twin critics with target networks,
//! a learnable entropy temperature, n-step returns and a ring replay
//! buffer. All expectations over the action space are closed-form sums
//! over the masked support — nothing is estimated by sampling — which the
//! 25-action space makes both cheap and low-variance.
//!
//! Every environment step recomputes the heuristic action mask, samples
//! from the masked policy, and stores n-step transitions assembled per
//! episode so replay never mixes episodes.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{exp, log};

use crate::heuristics::heuristic_mask;
use crate::neural::{Adam, DenseNet, Gradients, NetError, ScalarAdam};
use crate::plant::{color_change_count, MaskVector, PlantConfig, PlantError, PlantState};
use crate::reward::{outcome_car_reward, shaped_reward, RewardConfig};
use crate::rng::Rng;
use crate::scenario::{ScenarioError, ScenarioSource};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Trainer hyperparameters. Field names follow the training-config file
/// format; `steps_per_epoch`, `step_per_collect`, `test_num`,
/// `reward_normalization` and `action_scaling` are recorded in manifests
/// for provenance but do not drive this trainer (collection is
/// episode-based and rewards are used raw).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SacConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub step_per_collect: usize,
    pub test_num: usize,
    pub batch_size: usize,
    pub episode_per_collect: usize,
    pub episode_per_test: usize,
    pub hidden_sizes: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub buffer_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub n_step: usize,
    pub alpha_init: f64,
    /// Adjust the temperature towards the target entropy; when false the
    /// temperature stays frozen at `alpha_init`.
    pub learnable_alpha: bool,
    pub target_entropy_scale: f64,
    pub deterministic_eval: bool,
    pub reward_normalization: bool,
    pub action_scaling: bool,
    /// Gradient steps per collected environment step.
    pub update_per_step: f64,
    /// Epochs between greedy evaluations (each one emits a checkpoint).
    pub eval_every: usize,
    /// Best checkpoints (by evaluation color changes) kept in the outcome.
    pub keep_top: usize,
    pub seed: u64,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            epochs: 10_000,
            steps_per_epoch: 200,
            step_per_collect: 1,
            test_num: 1,
            batch_size: 16,
            episode_per_collect: 16,
            episode_per_test: 10,
            hidden_sizes: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            alpha_lr: 1e-4,
            buffer_size: 20_000,
            gamma: 0.99,
            tau: 0.005,
            n_step: 3,
            alpha_init: 0.05,
            learnable_alpha: true,
            target_entropy_scale: 0.3,
            deterministic_eval: true,
            reward_normalization: false,
            action_scaling: false,
            update_per_step: 1.0,
            eval_every: 25,
            keep_top: 3,
            seed: 0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.episode_per_collect == 0 {
            return Err(TrainError::BadConfig("need epochs and episodes per collect"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(TrainError::BadConfig("tau must be in (0, 1]"));
        }
        if self.n_step < 1 {
            return Err(TrainError::BadConfig("n_step must be >= 1"));
        }
        if self.buffer_size < self.batch_size || self.batch_size == 0 {
            return Err(TrainError::BadConfig("buffer must hold at least one batch"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(TrainError::BadConfig("gamma must be in (0, 1]"));
        }
        if self.alpha_init <= 0.0 {
            return Err(TrainError::BadConfig("alpha_init must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    BadConfig(&'static str),
    Net(NetError),
    Plant(PlantError),
    Scenario(ScenarioError),
    /// A loss stopped being finite; the epoch is reported for diagnosis.
    NonFiniteLoss { epoch: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::BadConfig(msg) => write!(f, "bad training config: {msg}"),
            TrainError::Net(e) => write!(f, "network error: {e}"),
            TrainError::Plant(e) => write!(f, "simulator error: {e}"),
            TrainError::Scenario(e) => write!(f, "scenario error: {e}"),
            TrainError::NonFiniteLoss { epoch } => {
                write!(f, "non-finite loss at epoch {epoch}; aborting")
            }
        }
    }
}

impl core::error::Error for TrainError {}

impl From<NetError> for TrainError {
    fn from(e: NetError) -> Self {
        TrainError::Net(e)
    }
}
impl From<PlantError> for TrainError {
    fn from(e: PlantError) -> Self {
        TrainError::Plant(e)
    }
}
impl From<ScenarioError> for TrainError {
    fn from(e: ScenarioError) -> Self {
        TrainError::Scenario(e)
    }
}

/// Masked softmax: probabilities restricted to the mask's support.
/// Masked-out entries are exactly zero (equivalent to clamping their
/// logits to -1e9 and renormalizing, without the numerical residue).
pub fn masked_distribution(logits: &[f64], mask: &MaskVector) -> Vec<f64> {
    assert_eq!(logits.len(), mask.len(), "logits/mask length mismatch");
    assert!(mask.any(), "mask must have at least one valid entry");
    let mut max = f64::NEG_INFINITY;
    for i in mask.valid_indices() {
        if logits[i] > max {
            max = logits[i];
        }
    }
    let mut probs = vec![0.0; logits.len()];
    let mut z = 0.0;
    for i in mask.valid_indices() {
        let e = exp(logits[i] - max);
        probs[i] = e;
        z += e;
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    probs
}

/// Log-probabilities matching [`masked_distribution`]; masked-out entries
/// hold negative infinity.
pub fn masked_log_distribution(logits: &[f64], mask: &MaskVector) -> Vec<f64> {
    assert_eq!(logits.len(), mask.len(), "logits/mask length mismatch");
    assert!(mask.any(), "mask must have at least one valid entry");
    let mut max = f64::NEG_INFINITY;
    for i in mask.valid_indices() {
        if logits[i] > max {
            max = logits[i];
        }
    }
    let mut z = 0.0;
    for i in mask.valid_indices() {
        z += exp(logits[i] - max);
    }
    let log_z = log(z);
    let mut out = vec![f64::NEG_INFINITY; logits.len()];
    for i in mask.valid_indices() {
        out[i] = logits[i] - max - log_z;
    }
    out
}

/// Draw an action from a masked probability vector.
pub fn sample_action(probs: &[f64], rng: &mut Rng) -> usize {
    rng.sample_discrete(probs)
}

/// Highest-probability action; ties resolve to the lowest index.
pub fn greedy_action(probs: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_p = f64::NEG_INFINITY;
    for (i, &p) in probs.iter().enumerate() {
        if p > best_p {
            best_p = p;
            best = i;
        }
    }
    best
}

/// One replayable experience. `reward` is the n-step discounted sum
/// assembled at insertion; `next_obs`/`next_mask` describe the bootstrap
/// state n steps ahead (truncated at the episode end, in which case `done`
/// is set and no bootstrapping happens).
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub mask: MaskVector,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub next_mask: MaskVector,
    /// γ^n̂ for the bootstrap term.
    pub discount: f64,
    pub done: bool,
}

/// Fixed-capacity ring buffer; overwrites oldest first.
#[derive(Debug)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            items: Vec::with_capacity(capacity),
            capacity,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.items[index]
    }

    pub fn sample_indices(&self, batch: usize, rng: &mut Rng) -> Vec<usize> {
        (0..batch).map(|_| rng.below(self.items.len())).collect()
    }
}

/// Per-epoch training log record (one CSV row).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub env_steps: usize,
    pub mean_episode_reward: f64,
    pub mean_color_changes: f64,
    pub alpha: f64,
    pub actor_loss: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub alpha_loss: f64,
}

/// Greedy evaluation summary at a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub epoch: usize,
    pub mean_color_changes: f64,
    pub per_scenario: Vec<usize>,
}

/// A retained policy checkpoint.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub epoch: usize,
    pub eval_mean_changes: f64,
    pub actor_bytes: Vec<u8>,
}

/// Everything a training run produces.
#[derive(Debug)]
pub struct TrainOutcome {
    pub records: Vec<EpochRecord>,
    pub evals: Vec<EvalRecord>,
    /// Best checkpoints by evaluation score, ascending (best first).
    pub checkpoints: Vec<Checkpoint>,
    pub final_actor_bytes: Vec<u8>,
    pub sampled_actions: u64,
    /// Sampled actions that violated the structural mask (must stay zero).
    pub invalid_actions: u64,
}

/// Observer hooks for progress reporting; all optional.
pub trait TrainObserver {
    fn on_epoch(&mut self, _record: &EpochRecord) {}
    fn on_eval(&mut self, _record: &EvalRecord) {}
}

/// Ignores all events.
pub struct NullObserver;
impl TrainObserver for NullObserver {}

struct Networks {
    actor: DenseNet,
    critic1: DenseNet,
    critic2: DenseNet,
    target1: DenseNet,
    target2: DenseNet,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    log_alpha: f64,
    alpha_opt: ScalarAdam,
    entropy_scale: f64,
}

impl Networks {
    fn alpha(&self) -> f64 {
        exp(self.log_alpha)
    }
}

/// Elementwise `target ← τ·online + (1−τ)·target`.
pub fn soft_update(target: &mut DenseNet, online: &DenseNet, tau: f64) {
    target.soft_update_from(online, tau);
}

/// Expected soft state value under the masked policy:
/// `Σ_a π(a|s) (min(Q̄₁,Q̄₂)(s,a) − α log π(a|s))`.
fn soft_state_value(nets: &Networks, obs: &[f64], mask: &MaskVector) -> f64 {
    let logits = nets.actor.forward(obs);
    let probs = masked_distribution(&logits, mask);
    let logps = masked_log_distribution(&logits, mask);
    let q1 = nets.target1.forward(obs);
    let q2 = nets.target2.forward(obs);
    let alpha = nets.alpha();
    let mut v = 0.0;
    for i in mask.valid_indices() {
        if probs[i] > 0.0 {
            v += probs[i] * (q1[i].min(q2[i]) - alpha * logps[i]);
        }
    }
    v
}

/// n-step critic regression targets for a batch of transitions.
fn critic_targets(nets: &Networks, batch: &[&Transition]) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                t.reward + t.discount * soft_state_value(nets, &t.next_obs, &t.next_mask)
            }
        })
        .collect()
}

fn update_critics(
    nets: &mut Networks,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<(f64, f64), NetError> {
    let inv_b = 1.0 / batch.len() as f64;
    let mut loss1 = 0.0;
    let mut loss2 = 0.0;
    let mut grads1 = Gradients::zeroed(&nets.critic1);
    let mut grads2 = Gradients::zeroed(&nets.critic2);
    for (t, &y) in batch.iter().zip(targets.iter()) {
        let q1 = nets.critic1.forward(&t.obs);
        let q2 = nets.critic2.forward(&t.obs);
        let e1 = q1[t.action] - y;
        let e2 = q2[t.action] - y;
        loss1 += e1 * e1 * inv_b;
        loss2 += e2 * e2 * inv_b;
        let mut upstream = vec![0.0; q1.len()];
        upstream[t.action] = 2.0 * e1 * inv_b;
        grads1.add_scaled(&nets.critic1.backward(&t.obs, &upstream), 1.0);
        upstream[t.action] = 2.0 * e2 * inv_b;
        grads2.add_scaled(&nets.critic2.backward(&t.obs, &upstream), 1.0);
    }
    nets.critic1_opt.apply(&mut nets.critic1, &grads1)?;
    nets.critic2_opt.apply(&mut nets.critic2, &grads2)?;
    Ok((loss1, loss2))
}

fn update_actor(nets: &mut Networks, batch: &[&Transition]) -> Result<f64, NetError> {
    let inv_b = 1.0 / batch.len() as f64;
    let alpha = nets.alpha();
    let mut loss = 0.0;
    let mut grads = Gradients::zeroed(&nets.actor);
    for t in batch {
        let logits = nets.actor.forward(&t.obs);
        let probs = masked_distribution(&logits, &t.mask);
        let logps = masked_log_distribution(&logits, &t.mask);
        let q1 = nets.critic1.forward(&t.obs);
        let q2 = nets.critic2.forward(&t.obs);
        // L = Σ_a π_a (α log π_a − min Q_a); dL/dz_j = π_j (c_j − c̄)
        let mut c_bar = 0.0;
        let mut c = vec![0.0; logits.len()];
        for i in t.mask.valid_indices() {
            c[i] = alpha * logps[i] - q1[i].min(q2[i]);
            c_bar += probs[i] * c[i];
        }
        loss += c_bar * inv_b;
        let mut upstream = vec![0.0; logits.len()];
        for i in t.mask.valid_indices() {
            upstream[i] = probs[i] * (c[i] - c_bar) * inv_b;
        }
        grads.add_scaled(&nets.actor.backward(&t.obs, &upstream), 1.0);
    }
    nets.actor_opt.apply(&mut nets.actor, &grads)?;
    Ok(loss)
}

fn update_alpha(nets: &mut Networks, batch: &[&Transition]) -> Result<f64, NetError> {
    let alpha = nets.alpha();
    // The entropy target scales with the state's masked support:
    // target_entropy_scale × log(valid actions). A fixed log(25) target is
    // unreachable whenever the mask narrows below e^H̄ actions and would
    // drive α to infinity.
    let mut mean_gap = 0.0;
    for t in batch {
        let logits = nets.actor.forward(&t.obs);
        let probs = masked_distribution(&logits, &t.mask);
        let logps = masked_log_distribution(&logits, &t.mask);
        let mut h = 0.0;
        for i in t.mask.valid_indices() {
            if probs[i] > 0.0 {
                h -= probs[i] * logps[i];
            }
        }
        let target = nets.entropy_scale * log(t.mask.count_valid() as f64);
        mean_gap += (h - target) / batch.len() as f64;
    }
    // J(α) = α (H − H̄): entropy below target pushes α up.
    let loss = alpha * mean_gap;
    let grad_log_alpha = alpha * mean_gap;
    nets.alpha_opt.apply(&mut nets.log_alpha, grad_log_alpha)?;
    nets.log_alpha = nets.log_alpha.clamp(-20.0, 2.3);
    Ok(loss)
}

/// Assemble n-step transitions for one completed episode and push them
/// into the replay buffer.
#[allow(clippy::too_many_arguments)]
fn push_episode(
    replay: &mut ReplayBuffer,
    observations: Vec<Vec<f64>>,
    masks: Vec<MaskVector>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    terminal_obs: Vec<f64>,
    gamma: f64,
    n_step: usize,
) {
    let len = actions.len();
    for t in 0..len {
        let horizon = n_step.min(len - t);
        let mut reward = 0.0;
        let mut discount = 1.0;
        for k in 0..horizon {
            reward += discount * rewards[t + k];
            discount *= gamma;
        }
        let boot_index = t + horizon;
        let done = boot_index == len;
        let (next_obs, next_mask) = if done {
            (
                terminal_obs.clone(),
                MaskVector::all_false(masks[t].len()),
            )
        } else {
            (observations[boot_index].clone(), masks[boot_index].clone())
        };
        replay.push(Transition {
            obs: observations[t].clone(),
            mask: masks[t].clone(),
            action: actions[t],
            reward,
            next_obs,
            next_mask,
            discount,
            done,
        });
    }
}

/// Greedy (or sampled) rollout of a single policy network over one color
/// sequence; returns the color-change count.
pub fn rollout_policy(
    plant_cfg: PlantConfig,
    colors: &[crate::plant::Color],
    actor: &DenseNet,
    deterministic: bool,
    rng: &mut Rng,
) -> Result<usize, PlantError> {
    let mut plant = PlantState::new(plant_cfg, colors)?;
    while !plant.is_done() {
        let mask = heuristic_mask(&plant)?;
        let obs = plant.encode_observation();
        let logits = actor.forward(&obs);
        let probs = masked_distribution(&logits, &mask);
        let action = if deterministic {
            greedy_action(&probs)
        } else {
            sample_action(&probs, rng)
        };
        plant.apply_flat(action)?;
    }
    Ok(color_change_count(plant.emitted()))
}

/// Run the full collect/update loop.
pub fn train(
    cfg: &SacConfig,
    plant_cfg: PlantConfig,
    reward_cfg: RewardConfig,
    source: &ScenarioSource,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    plant_cfg.validate()?;
    source.validate()?;

    let root = Rng::new(cfg.seed);
    let mut init_rng = root.derive(0);
    let mut action_rng = root.derive(1);
    let episode_stream = root.derive(2);
    let eval_stream = root.derive(3);
    let mut replay_rng = root.derive(4);

    let obs_len = plant_cfg.observation_len();
    let n_actions = plant_cfg.action_count();
    let mut dims = vec![obs_len];
    dims.extend_from_slice(&cfg.hidden_sizes);
    dims.push(n_actions);

    let actor = DenseNet::new(&dims, &mut init_rng);
    let critic1 = DenseNet::new(&dims, &mut init_rng);
    let critic2 = DenseNet::new(&dims, &mut init_rng);
    let mut nets = Networks {
        target1: critic1.clone(),
        target2: critic2.clone(),
        actor_opt: Adam::new(&actor, cfg.actor_lr),
        critic1_opt: Adam::new(&critic1, cfg.critic_lr),
        critic2_opt: Adam::new(&critic2, cfg.critic_lr),
        actor,
        critic1,
        critic2,
        log_alpha: log(cfg.alpha_init),
        alpha_opt: ScalarAdam::new(cfg.alpha_lr),
        entropy_scale: cfg.target_entropy_scale,
    };

    // Fixed evaluation scenarios so scores are comparable across epochs.
    let eval_scenarios: Vec<Vec<crate::plant::Color>> = (0..cfg.episode_per_test)
        .map(|i| source.episode_colors(i as u64, &eval_stream))
        .collect();

    let mut replay = ReplayBuffer::new(cfg.buffer_size);
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut evals = Vec::new();
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut episode_counter = 0u64;
    let mut sampled_actions = 0u64;
    let mut invalid_actions = 0u64;

    for epoch in 0..cfg.epochs {
        // -- collect -------------------------------------------------------
        let mut epoch_steps = 0usize;
        let mut reward_sum = 0.0;
        let mut changes_sum = 0usize;
        for _ in 0..cfg.episode_per_collect {
            let colors = source.episode_colors(episode_counter, &episode_stream);
            episode_counter += 1;
            let mut plant = PlantState::new(plant_cfg, &colors)?;
            let mut observations = Vec::new();
            let mut masks = Vec::new();
            let mut actions = Vec::new();
            let mut rewards = Vec::new();
            while !plant.is_done() {
                let mask = heuristic_mask(&plant)?;
                let obs = plant.encode_observation();
                let logits = nets.actor.forward(&obs);
                let probs = masked_distribution(&logits, &mask);
                let action = sample_action(&probs, &mut action_rng);
                sampled_actions += 1;
                if !plant.action_valid(crate::plant::Action::from_flat(
                    action,
                    plant_cfg.num_buffers,
                )) {
                    invalid_actions += 1;
                }
                let before = plant.clone();
                let outcome = plant.apply_flat(action)?;
                let car_r = outcome_car_reward(&reward_cfg, &before, &plant, &outcome);
                let r = shaped_reward(&reward_cfg, &before, &plant, car_r);
                observations.push(obs);
                masks.push(mask);
                actions.push(action);
                rewards.push(r);
            }
            epoch_steps += actions.len();
            reward_sum += rewards.iter().sum::<f64>();
            changes_sum += color_change_count(plant.emitted());
            let terminal_obs = plant.encode_observation();
            push_episode(
                &mut replay,
                observations,
                masks,
                actions,
                rewards,
                terminal_obs,
                cfg.gamma,
                cfg.n_step,
            );
        }

        // -- update --------------------------------------------------------
        let mut actor_loss = 0.0;
        let mut critic1_loss = 0.0;
        let mut critic2_loss = 0.0;
        let mut alpha_loss = 0.0;
        let grad_steps = if replay.len() >= cfg.batch_size {
            (((epoch_steps as f64 * cfg.update_per_step) + 0.5) as usize).max(1)
        } else {
            0
        };
        for _ in 0..grad_steps {
            let indices = replay.sample_indices(cfg.batch_size, &mut replay_rng);
            let batch: Vec<&Transition> = indices.iter().map(|&i| replay.get(i)).collect();
            let targets = critic_targets(&nets, &batch);
            let (l1, l2) = update_critics(&mut nets, &batch, &targets)?;
            let la = update_actor(&mut nets, &batch)?;
            let lt = if cfg.learnable_alpha {
                update_alpha(&mut nets, &batch)?
            } else {
                0.0
            };
            soft_update(&mut nets.target1, &nets.critic1, cfg.tau);
            soft_update(&mut nets.target2, &nets.critic2, cfg.tau);
            critic1_loss = l1;
            critic2_loss = l2;
            actor_loss = la;
            alpha_loss = lt;
            if !(l1.is_finite() && l2.is_finite() && la.is_finite()) {
                return Err(TrainError::NonFiniteLoss { epoch });
            }
        }

        let episodes = cfg.episode_per_collect as f64;
        let record = EpochRecord {
            epoch,
            env_steps: epoch_steps,
            mean_episode_reward: reward_sum / episodes,
            mean_color_changes: changes_sum as f64 / episodes,
            alpha: nets.alpha(),
            actor_loss,
            critic1_loss,
            critic2_loss,
            alpha_loss,
        };
        observer.on_epoch(&record);
        records.push(record);

        // -- evaluate ------------------------------------------------------
        let last_epoch = epoch + 1 == cfg.epochs;
        if (epoch + 1) % cfg.eval_every == 0 || last_epoch {
            let mut per_scenario = Vec::with_capacity(eval_scenarios.len());
            for colors in &eval_scenarios {
                let changes = rollout_policy(
                    plant_cfg,
                    colors,
                    &nets.actor,
                    cfg.deterministic_eval,
                    &mut action_rng,
                )?;
                per_scenario.push(changes);
            }
            let mean = per_scenario.iter().sum::<usize>() as f64 / per_scenario.len() as f64;
            let eval = EvalRecord {
                epoch,
                mean_color_changes: mean,
                per_scenario,
            };
            observer.on_eval(&eval);
            evals.push(eval);
            checkpoints.push(Checkpoint {
                epoch,
                eval_mean_changes: mean,
                actor_bytes: nets.actor.to_bytes(),
            });
            checkpoints.sort_by(|a, b| {
                a.eval_mean_changes
                    .partial_cmp(&b.eval_mean_changes)
                    .expect("eval means are finite")
                    .then(a.epoch.cmp(&b.epoch))
            });
            checkpoints.truncate(cfg.keep_top.max(1));
        }
    }

    Ok(TrainOutcome {
        records,
        evals,
        checkpoints,
        final_actor_bytes: nets.actor.to_bytes(),
        sampled_actions,
        invalid_actions,
    })
}
