//! PPO training of the shared policy.
//!
//! The policy/value network (see [`crate::nn`]) is trained with the
//! clipped-surrogate objective, an entropy bonus, and a learned value
//! baseline over generalized advantage estimates. Parallel environments
//! produce fixed-length rollout segments which are flattened into one
//! trajectory buffer per update; advantages are normalized per batch.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{structural_embedding, StructuralEmbedding};
use crate::env::{
    ActionPolicy, CrossingEnv, EnvConfig, Objective, Observation, Transition, OBS_LEN,
};
use crate::geometry::Drawing;
use crate::graph::{Graph, GraphClass};
use crate::layout::layout_kamada_kawai;
use crate::nn::{entropy, softmax, PolicyNet};
use crate::rng::{derive_seed, substream_indexed};

pub const NUM_ACTIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Curriculum over the two graph classes: phase 1 samples only
/// Rome-class graphs, phase 2 mixes, phase 3 mostly BA-class.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub phase2_fraction: f64,
    pub phase3_fraction: f64,
    pub phase2_ba_prob: f64,
    pub phase3_ba_prob: f64,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        CurriculumSchedule {
            phase2_fraction: 1.0 / 3.0,
            phase3_fraction: 2.0 / 3.0,
            phase2_ba_prob: 0.5,
            phase3_ba_prob: 0.9,
        }
    }
}

impl CurriculumSchedule {
    /// Probability of starting the next episode on a BA-class graph,
    /// given training progress in [0, 1].
    pub fn ba_probability(&self, progress: f64) -> f64 {
        if progress < self.phase2_fraction {
            0.0
        } else if progress < self.phase3_fraction {
            self.phase2_ba_prob
        } else {
            self.phase3_ba_prob
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PpoConfig {
    pub learning_rate: f64,
    /// Minibatch size for gradient steps.
    pub batch_size: usize,
    pub clip_ratio: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Gradient epochs per update.
    pub epochs: usize,
    pub total_steps: usize,
    pub num_envs: usize,
    /// Steps per environment per update; the buffer holds
    /// `num_envs * rollout_len` transitions.
    pub rollout_len: usize,
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub curriculum: CurriculumSchedule,
    /// Step cap of each training episode.
    pub episode_cap: usize,
    /// Non-improving steps before an episode resets to its best drawing.
    pub reset_patience: usize,
    /// Overshoot factor range for ray-hit moves.
    pub epsilon_range: (f64, f64),
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            learning_rate: 3e-3,
            batch_size: 1028,
            clip_ratio: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            gamma: 0.99,
            lambda: 0.95,
            epochs: 10,
            total_steps: 200_000,
            num_envs: 16,
            rollout_len: 65,
            hidden: vec![64, 64],
            optimizer: OptimizerKind::Adam,
            curriculum: CurriculumSchedule::default(),
            episode_cap: 2000,
            reset_patience: 400,
            epsilon_range: (0.01, 0.1),
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.clip_ratio && self.clip_ratio < 1.0) {
            return Err(format!("clip_ratio must be in (0,1), got {}", self.clip_ratio));
        }
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda)] {
            if !(0.0 < v && v <= 1.0) {
                return Err(format!("{name} must be in (0,1], got {v}"));
            }
        }
        if self.batch_size == 0 || self.num_envs == 0 || self.rollout_len == 0 {
            return Err("batch_size, num_envs, rollout_len must be positive".into());
        }
        Ok(())
    }

    /// Hash binding checkpoints to the architecture and objective.
    pub fn config_hash(&self, objective: Objective) -> u64 {
        let canonical = format!(
            "in={OBS_LEN};hidden={:?};actions={NUM_ACTIONS};objective={objective}",
            self.hidden
        );
        derive_seed(0x005b_a1ce, &canonical)
    }
}

/// Forward pass at the interface level: action probabilities plus
/// value estimate.
pub fn policy_forward(net: &PolicyNet, obs: &[f64]) -> (Vec<f64>, f64) {
    let (logits, value) = net.forward(obs);
    (softmax(&logits), value)
}

/// Categorical sample; the returned log-probability is exactly
/// `ln(probs[action])`.
pub fn sample_action(probs: &[f64], rng: &mut ChaCha8Rng) -> (usize, f64) {
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    let x: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    let mut chosen = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            chosen = i;
            break;
        }
    }
    (chosen, probs[chosen].ln())
}

impl ActionPolicy for PolicyNet {
    fn act(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> (usize, f64, f64) {
        let (probs, value) = policy_forward(self, &obs.values);
        let (action, log_prob) = sample_action(&probs, rng);
        (action, log_prob, value)
    }
}

/// Generalized advantage estimation over one episode-contiguous segment.
/// `dones[t]` marks a transition that ended its episode: the chain and
/// the bootstrap reset there, so advantages never leak across episode
/// boundaries. Returns (advantages, returns).
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut advantages = vec![0.0; n];
    let mut returns = vec![0.0; n];
    let mut gae = 0.0;
    for t in (0..n).rev() {
        let (next_value, nonterminal) = if dones[t] {
            (0.0, 0.0)
        } else if t == n - 1 {
            (bootstrap_value, 1.0)
        } else {
            (values[t + 1], 1.0)
        };
        let delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        gae = delta + gamma * lambda * nonterminal * gae;
        advantages[t] = gae;
        returns[t] = gae + values[t];
    }
    (advantages, returns)
}

/// Fixed-length rollout slice from one environment plus the bootstrap
/// value for its (possibly unfinished) tail episode.
pub struct EnvSegment {
    pub transitions: Vec<Transition>,
    pub bootstrap_value: f64,
}

/// Flattened training batch across all parallel environments.
pub struct TrajectoryBuffer {
    pub observations: Vec<[f64; OBS_LEN]>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TrajectoryBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Flatten segments, compute GAE per segment, and normalize the
    /// advantages to zero mean / unit variance over the whole batch.
    pub fn from_segments(segments: &[EnvSegment], gamma: f64, lambda: f64) -> Self {
        let total: usize = segments.iter().map(|s| s.transitions.len()).sum();
        let mut buf = TrajectoryBuffer {
            observations: Vec::with_capacity(total),
            actions: Vec::with_capacity(total),
            log_probs: Vec::with_capacity(total),
            advantages: Vec::with_capacity(total),
            returns: Vec::with_capacity(total),
        };
        for seg in segments {
            let rewards: Vec<f64> = seg.transitions.iter().map(|t| t.reward).collect();
            let values: Vec<f64> = seg.transitions.iter().map(|t| t.value).collect();
            let dones: Vec<bool> = seg.transitions.iter().map(|t| t.done).collect();
            let (adv, ret) =
                compute_gae(&rewards, &values, &dones, seg.bootstrap_value, gamma, lambda);
            for (t, (a, r)) in seg.transitions.iter().zip(adv.iter().zip(ret.iter())) {
                buf.observations.push(t.observation);
                buf.actions.push(t.action);
                buf.log_probs.push(t.log_prob);
                buf.advantages.push(*a);
                buf.returns.push(*r);
            }
        }
        buf.normalize_advantages();
        buf
    }

    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len();
        if n == 0 {
            return;
        }
        let mean: f64 = self.advantages.iter().sum::<f64>() / n as f64;
        let var: f64 =
            self.advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt().max(1e-8);
        for a in &mut self.advantages {
            *a = (*a - mean) / std;
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// PPO loss and its analytic gradient over the given sample indices.
///
/// loss = mean(-min(ratio * A, clip(ratio) * A))
///      + value_coef * mean((V - R)^2)
///      - entropy_coef * mean(H)
pub fn ppo_loss_and_grads(
    net: &PolicyNet,
    buffer: &TrajectoryBuffer,
    indices: &[usize],
    cfg: &PpoConfig,
) -> (LossStats, Vec<f64>) {
    let n = indices.len() as f64;
    let mut grads = vec![0.0; net.param_count()];
    let mut stats = LossStats::default();
    let mut clipped_count = 0usize;

    for &i in indices {
        let obs = &buffer.observations[i];
        let action = buffer.actions[i];
        let old_logp = buffer.log_probs[i];
        let advantage = buffer.advantages[i];
        let target_return = buffer.returns[i];

        let (logits, value, cache) = net.forward_cached(obs);
        let probs = softmax(&logits);
        let logp = probs[action].ln();
        let ratio = (logp - old_logp).exp();
        let h = entropy(&probs);

        let unclipped = ratio * advantage;
        let clipped = ratio.clamp(1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * advantage;
        let surrogate = unclipped.min(clipped);
        let use_unclipped = unclipped <= clipped;
        if !use_unclipped {
            clipped_count += 1;
        }

        stats.policy += -surrogate / n;
        stats.value += (value - target_return).powi(2) / n;
        stats.entropy += h / n;

        // d(policy loss)/d logp: -A * ratio on the unclipped branch,
        // exactly zero when the clipped branch is active and saturated
        let dlogp = if use_unclipped { -advantage * ratio / n } else { 0.0 };
        let mut dlogits = vec![0.0; probs.len()];
        for (j, dl) in dlogits.iter_mut().enumerate() {
            let indicator = if j == action { 1.0 } else { 0.0 };
            // policy term through softmax
            *dl += dlogp * (indicator - probs[j]);
            // entropy bonus: d(-c_e * H)/d z_j = c_e * p_j (ln p_j + H)
            *dl += cfg.entropy_coef * probs[j] * (probs[j].ln() + h) / n;
        }
        let dvalue = cfg.value_coef * 2.0 * (value - target_return) / n;
        net.backward(&cache, &dlogits, dvalue, &mut grads);
    }

    stats.total = stats.policy + cfg.value_coef * stats.value - cfg.entropy_coef * stats.entropy;
    stats.clip_fraction = clipped_count as f64 / n;
    (stats, grads)
}

#[derive(Debug)]
pub enum OptimizerState {
    Sgd,
    Adam {
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    },
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, param_count: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => OptimizerState::Adam {
                m: vec![0.0; param_count],
                v: vec![0.0; param_count],
                t: 0,
            },
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        match self {
            OptimizerState::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerState::Adam { m, v, t } => {
                const BETA1: f64 = 0.9;
                const BETA2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                *t += 1;
                let bc1 = 1.0 - BETA1.powi(*t as i32);
                let bc2 = 1.0 - BETA2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grads[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grads[i] * grads[i];
                    let mhat = m[i] / bc1;
                    let vhat = v[i] / bc2;
                    params[i] -= lr * mhat / (vhat.sqrt() + EPS);
                }
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    #[error("non-finite loss; update aborted")]
    NonFiniteLoss,
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

/// One PPO update: `epochs` passes of shuffled minibatch gradient steps
/// over the buffer. Aborts without touching the parameters if any
/// minibatch loss turns non-finite.
pub fn ppo_update(
    net: &mut PolicyNet,
    buffer: &TrajectoryBuffer,
    cfg: &PpoConfig,
    opt: &mut OptimizerState,
    rng: &mut ChaCha8Rng,
) -> Result<LossStats, PpoError> {
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    let mut last = LossStats::default();
    for _ in 0..cfg.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.batch_size) {
            let (stats, grads) = ppo_loss_and_grads(net, buffer, chunk, cfg);
            if !stats.total.is_finite() {
                return Err(PpoError::NonFiniteLoss);
            }
            let mut params = net.to_flat();
            opt.step(&mut params, &grads, cfg.learning_rate);
            net.load_flat(&params);
            last = stats;
        }
    }
    if !net.all_finite() {
        return Err(PpoError::NonFiniteLoss);
    }
    Ok(last)
}

// ---------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------

const CHECKPOINT_MAGIC: &[u8; 4] = b"CMPK";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub num_actions: usize,
    pub objective: String,
    pub config_hash: u64,
    pub trained_steps: usize,
}

/// Versioned binary blob: magic, version, JSON header, flat parameters.
pub fn save_checkpoint(
    net: &PolicyNet,
    header: &CheckpointHeader,
    path: &Path,
) -> Result<(), PpoError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(CHECKPOINT_MAGIC)?;
    file.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let header_bytes = serde_json::to_vec(header).expect("header serializes");
    file.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    let flat = net.to_flat();
    file.write_all(&(flat.len() as u64).to_le_bytes())?;
    for x in flat {
        file.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicyNet, CheckpointHeader), PpoError> {
    let mut file = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(PpoError::BadCheckpoint("wrong magic".into()));
    }
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(PpoError::BadCheckpoint(format!("unsupported version {version}")));
    }
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u64buf)?;
    let header_len = u64::from_le_bytes(u64buf) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| PpoError::BadCheckpoint(e.to_string()))?;
    file.read_exact(&mut u64buf)?;
    let count = u64::from_le_bytes(u64buf) as usize;
    let mut flat = Vec::with_capacity(count);
    let mut f64buf = [0u8; 8];
    for _ in 0..count {
        file.read_exact(&mut f64buf)?;
        flat.push(f64::from_le_bytes(f64buf));
    }
    let mut net = PolicyNet::new(header.input_dim, &header.hidden, header.num_actions, 0);
    if net.param_count() != flat.len() {
        return Err(PpoError::BadCheckpoint(format!(
            "parameter count mismatch: header implies {}, blob has {}",
            net.param_count(),
            flat.len()
        )));
    }
    net.load_flat(&flat);
    Ok((net, header))
}

// ---------------------------------------------------------------------
// training
// ---------------------------------------------------------------------

/// A prepared training graph: preprocessed graph, its KK initial
/// drawing, and the cached structural embedding.
#[derive(Clone)]
pub struct TrainGraph {
    pub id: String,
    pub class: GraphClass,
    pub graph: Arc<Graph>,
    pub init: Drawing,
    pub embedding: StructuralEmbedding,
}

impl TrainGraph {
    pub fn prepare(id: String, class: GraphClass, graph: Arc<Graph>, layout_seed: u64) -> Self {
        let init = layout_kamada_kawai(&graph, layout_seed);
        let embedding = structural_embedding(&graph);
        TrainGraph {
            id,
            class,
            graph,
            init,
            embedding,
        }
    }
}

/// Training corpus split by class; the curriculum samples between them.
pub struct TrainSets {
    pub rome: Vec<TrainGraph>,
    pub ba: Vec<TrainGraph>,
}

impl TrainSets {
    fn pick(&self, ba_prob: f64, rng: &mut ChaCha8Rng) -> &TrainGraph {
        let use_ba = if self.ba.is_empty() {
            false
        } else if self.rome.is_empty() {
            true
        } else {
            rng.random_range(0.0..1.0) < ba_prob
        };
        let list = if use_ba { &self.ba } else { &self.rome };
        &list[rng.random_range(0..list.len())]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub mean_reward: f64,
    pub entropy: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

pub struct TrainOutcome {
    pub net: PolicyNet,
    pub log: Vec<LogRow>,
    pub episodes_completed: usize,
    /// Total reward of every completed episode, in completion order
    /// (deterministic: assembled per rollout in env-slot order).
    pub episode_rewards: Vec<f64>,
}

struct EnvSlot {
    env: CrossingEnv,
    sampler: ChaCha8Rng,
    episode_reward: f64,
    episodes: usize,
    slot_index: u64,
}

impl EnvSlot {
    fn new_env(
        sets: &TrainSets,
        ba_prob: f64,
        env_cfg: EnvConfig,
        sampler: &mut ChaCha8Rng,
        seed_root: u64,
        slot_index: u64,
        episode_counter: u64,
    ) -> CrossingEnv {
        let tg = sets.pick(ba_prob, sampler);
        let env_seed =
            crate::rng::derive_seed_indexed(seed_root, "episode", slot_index * 1_000_003 + episode_counter);
        CrossingEnv::with_embedding(tg.init.clone(), tg.embedding.clone(), env_cfg, env_seed)
    }

    /// Collect a fixed-length rollout, resetting to fresh episodes as
    /// needed. Returns the segment plus total rewards of completed
    /// episodes.
    fn rollout(
        &mut self,
        net: &PolicyNet,
        sets: &TrainSets,
        ba_prob: f64,
        env_cfg: EnvConfig,
        rollout_len: usize,
        seed_root: u64,
    ) -> (EnvSegment, Vec<f64>) {
        let mut transitions = Vec::with_capacity(rollout_len);
        let mut completed = Vec::new();
        for _ in 0..rollout_len {
            if self.env.is_done() {
                completed.push(self.episode_reward);
                self.episode_reward = 0.0;
                self.episodes += 1;
                self.env = Self::new_env(
                    sets,
                    ba_prob,
                    env_cfg,
                    &mut self.sampler,
                    seed_root,
                    self.slot_index,
                    self.episodes as u64,
                );
            }
            let t = self.env.step(net).expect("env was reset if done");
            self.episode_reward += t.reward;
            transitions.push(t);
        }
        let bootstrap_value = if transitions.last().map(|t| t.done).unwrap_or(true) {
            0.0
        } else {
            let obs = self.env.observe();
            let (_, value) = policy_forward(net, &obs.values);
            value
        };
        (
            EnvSegment {
                transitions,
                bootstrap_value,
            },
            completed,
        )
    }
}

/// Train a policy on the given sets. Environments run in parallel worker
/// threads and synchronize at rollout boundaries; results are assembled
/// in slot order, so the outcome does not depend on thread scheduling.
pub fn train(cfg: &PpoConfig, objective: Objective, sets: &TrainSets) -> Result<TrainOutcome, PpoError> {
    cfg.validate().map_err(PpoError::BadCheckpoint)?;
    assert!(
        !(sets.rome.is_empty() && sets.ba.is_empty()),
        "training needs at least one graph"
    );
    let mut net = PolicyNet::new(OBS_LEN, &cfg.hidden, NUM_ACTIONS, derive_seed(cfg.seed, "net"));
    let mut opt = OptimizerState::new(cfg.optimizer, net.param_count());
    let mut update_rng = substream_indexed(cfg.seed, "ppo-update", 0);
    let mut env_cfg = EnvConfig::new(objective);
    env_cfg.step_cap = cfg.episode_cap;
    env_cfg.reset_patience = cfg.reset_patience;
    env_cfg.epsilon_range = cfg.epsilon_range;

    let mut slots: Vec<EnvSlot> = (0..cfg.num_envs)
        .map(|i| {
            let mut sampler = substream_indexed(cfg.seed, "env-sampler", i as u64);
            let env = EnvSlot::new_env(
                sets,
                cfg.curriculum.ba_probability(0.0),
                env_cfg,
                &mut sampler,
                cfg.seed,
                i as u64,
                0,
            );
            EnvSlot {
                env,
                sampler,
                episode_reward: 0.0,
                episodes: 0,
                slot_index: i as u64,
            }
        })
        .collect();

    let mut log = Vec::new();
    let mut steps_done = 0usize;
    let mut recent_rewards: VecDeque<f64> = VecDeque::with_capacity(64);
    let mut episode_rewards: Vec<f64> = Vec::new();

    while steps_done < cfg.total_steps {
        let progress = steps_done as f64 / cfg.total_steps.max(1) as f64;
        let ba_prob = cfg.curriculum.ba_probability(progress);
        let net_ref = &net;
        let results: Vec<(EnvSegment, Vec<f64>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = slots
                .iter_mut()
                .map(|slot| {
                    scope.spawn(move || {
                        slot.rollout(
                            net_ref,
                            sets,
                            ba_prob,
                            env_cfg,
                            cfg.rollout_len,
                            cfg.seed,
                        )
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });

        let mut segments = Vec::with_capacity(results.len());
        for (seg, completed) in results {
            for r in completed {
                if recent_rewards.len() == 64 {
                    recent_rewards.pop_front();
                }
                recent_rewards.push_back(r);
                episode_rewards.push(r);
            }
            segments.push(seg);
        }
        steps_done += cfg.num_envs * cfg.rollout_len;

        let buffer = TrajectoryBuffer::from_segments(&segments, cfg.gamma, cfg.lambda);
        let stats = ppo_update(&mut net, &buffer, cfg, &mut opt, &mut update_rng)?;
        let mean_reward = if recent_rewards.is_empty() {
            0.0
        } else {
            recent_rewards.iter().sum::<f64>() / recent_rewards.len() as f64
        };
        log.push(LogRow {
            step: steps_done,
            mean_reward,
            entropy: stats.entropy,
            policy_loss: stats.policy,
            value_loss: stats.value,
        });
    }

    let episodes_completed = slots.iter().map(|s| s.episodes).sum();
    Ok(TrainOutcome {
        net,
        log,
        episodes_completed,
        episode_rewards,
    })
}

/// Write the scalar training log as CSV.
pub fn write_training_log(log: &[LogRow], path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "mean_reward", "entropy", "policy_loss", "value_loss"])?;
    for row in log {
        w.write_record([
            row.step.to_string(),
            format!("{:.6}", row.mean_reward),
            format!("{:.6}", row.entropy),
            format!("{:.6}", row.policy_loss),
            format!("{:.6}", row.value_loss),
        ])?;
    }
    w.flush()
}

/// Run one evaluation episode per graph and report whether the policy
/// strictly improved the objective over the initial drawing.
pub fn evaluate_improvements(
    policy: &dyn ActionPolicy,
    graphs: &[TrainGraph],
    env_cfg: EnvConfig,
    seed: u64,
) -> Vec<bool> {
    graphs
        .iter()
        .enumerate()
        .map(|(i, tg)| {
            let mut env = CrossingEnv::with_embedding(
                tg.init.clone(),
                tg.embedding.clone(),
                env_cfg,
                derive_seed(seed, &format!("eval-{i}")),
            );
            let res = env.run_episode(policy);
            res.final_objective < res.initial_objective
        })
        .collect()
}
