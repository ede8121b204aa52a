//! The reinforcement-learning environment: one shared agent sits on one
//! vertex at a time, sees a 54-entry observation of its surroundings,
//! and moves the vertex along one of 16 compass directions.
//!
//! Orientation handling: all octant-indexed observation blocks are
//! rotated so the octant with the most crossings becomes octant I, then
//! mirrored so the second-most-crossed octant gets the smaller index.
//! Action indices live in that normalized frame; [`FrameTransform`]
//! decodes them back to world directions.
//!
//! Octant convention: compass bearings measured clockwise from north,
//! octant I covering (0, 45] degrees, so each boundary ray belongs to
//! its clockwise predecessor octant (a point exactly north of the
//! vertex sits in octant VIII).

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{structural_embedding, StructuralEmbedding};
use crate::geometry::{first_ray_hit, move_vertex, CrossingIndex, Drawing, Point, VertexId};

pub const OBS_LEN: usize = 54;
pub const NUM_ACTIONS: usize = 16;
pub const NUM_OCTANTS: usize = 8;

/// Octant of `other` as seen from `center`, 0-based (octant I = 0).
/// Exact sign/comparison tests; boundary rays fall in the clockwise
/// predecessor octant.
pub fn octant_of(center: Point, other: Point) -> usize {
    let dx = other.x - center.x;
    let dy = other.y - center.y;
    assert!(
        dx != 0.0 || dy != 0.0,
        "octant undefined for coincident points"
    );
    if dx > 0.0 {
        if dy > 0.0 {
            if dx <= dy {
                0 // (N, NE]
            } else {
                1 // (NE, E)
            }
        } else if dy == 0.0 {
            1 // E exactly
        } else if dx >= -dy {
            2 // (E, SE]
        } else {
            3 // (SE, S)
        }
    } else if dx == 0.0 {
        if dy < 0.0 {
            3 // S exactly
        } else {
            7 // N exactly
        }
    } else if dy < 0.0 {
        if -dx <= -dy {
            4 // (S, SW]
        } else {
            5 // (SW, W)
        }
    } else if dy == 0.0 {
        5 // W exactly
    } else if -dx >= dy {
        6 // (W, NW]
    } else {
        7 // (NW, N]
    }
}

/// Unit vector of action/compass direction k (bearing k * 22.5 degrees,
/// clockwise from north).
pub fn direction_vector(direction: usize) -> Point {
    let bearing = direction as f64 * (std::f64::consts::PI / 8.0);
    Point::new(bearing.sin(), bearing.cos())
}

/// Rotation (in octants) plus optional mirror that maps world-frame
/// octant stats into the normalized frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameTransform {
    /// World octant that lands on normalized octant I.
    pub rotation: usize,
    pub mirrored: bool,
}

impl FrameTransform {
    pub fn identity() -> Self {
        FrameTransform {
            rotation: 0,
            mirrored: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == 0 && !self.mirrored
    }

    /// World octant shown at normalized position `j`.
    pub fn world_octant(&self, j: usize) -> usize {
        let jr = if self.mirrored {
            (NUM_OCTANTS - j) % NUM_OCTANTS
        } else {
            j
        };
        (jr + self.rotation) % NUM_OCTANTS
    }

    /// Normalized position of a world octant (inverse of
    /// [`FrameTransform::world_octant`]).
    pub fn normalized_octant(&self, world: usize) -> usize {
        let jr = (world + NUM_OCTANTS - self.rotation) % NUM_OCTANTS;
        if self.mirrored {
            (NUM_OCTANTS - jr) % NUM_OCTANTS
        } else {
            jr
        }
    }

    /// Decode a normalized-frame action index into a world direction.
    /// The mirror axis is the bisector of octant I (bearing 22.5°), so
    /// mirroring maps direction d to (2 - d) mod 16.
    pub fn to_world_direction(&self, action: usize) -> usize {
        debug_assert!(action < NUM_ACTIONS);
        let d = if self.mirrored {
            (2 + NUM_ACTIONS - action) % NUM_ACTIONS
        } else {
            action
        };
        (d + 2 * self.rotation) % NUM_ACTIONS
    }

    /// Normalized-frame index of a world direction (inverse decode).
    pub fn normalize_direction(&self, world: usize) -> usize {
        let d = (world + 2 * (NUM_OCTANTS - self.rotation)) % NUM_ACTIONS;
        if self.mirrored {
            (2 + NUM_ACTIONS - d) % NUM_ACTIONS
        } else {
            d
        }
    }
}

/// Raw per-octant measurements around one vertex, in the world frame
/// (or, after [`normalize_frame`], in the normalized frame). Distances
/// are kept squared so downstream normalization can stay exact.
#[derive(Debug, Clone, PartialEq)]
pub struct OctantStats {
    pub neighbors: [usize; NUM_OCTANTS],
    pub vertices: [usize; NUM_OCTANTS],
    /// Squared distance to the closest neighbor, infinity if none.
    pub nearest_neighbor_d2: [f64; NUM_OCTANTS],
    /// Squared distance to the closest vertex, infinity if none.
    pub nearest_vertex_d2: [f64; NUM_OCTANTS],
    /// Crossings on edges of v, attributed to the octant of the far
    /// endpoint.
    pub crossings: [usize; NUM_OCTANTS],
    /// Max crossings on any single edge of v per octant.
    pub local_cr: [usize; NUM_OCTANTS],
}

impl OctantStats {
    fn empty() -> Self {
        OctantStats {
            neighbors: [0; NUM_OCTANTS],
            vertices: [0; NUM_OCTANTS],
            nearest_neighbor_d2: [f64::INFINITY; NUM_OCTANTS],
            nearest_vertex_d2: [f64::INFINITY; NUM_OCTANTS],
            crossings: [0; NUM_OCTANTS],
            local_cr: [0; NUM_OCTANTS],
        }
    }

    /// View the stats through a frame transform.
    pub fn permuted(&self, t: FrameTransform) -> OctantStats {
        let mut out = OctantStats::empty();
        for j in 0..NUM_OCTANTS {
            let w = t.world_octant(j);
            out.neighbors[j] = self.neighbors[w];
            out.vertices[j] = self.vertices[w];
            out.nearest_neighbor_d2[j] = self.nearest_neighbor_d2[w];
            out.nearest_vertex_d2[j] = self.nearest_vertex_d2[w];
            out.crossings[j] = self.crossings[w];
            out.local_cr[j] = self.local_cr[w];
        }
        out
    }
}

fn mirror_row(row: &[usize; NUM_OCTANTS]) -> [usize; NUM_OCTANTS] {
    let mut out = [0; NUM_OCTANTS];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = row[(NUM_OCTANTS - j) % NUM_OCTANTS];
    }
    out
}

/// Index (among 1..8) of the second-most-crossed octant: smallest index
/// attaining the maximum of row[1..].
fn second_max_index(row: &[usize; NUM_OCTANTS]) -> usize {
    let mut best = 1;
    for j in 2..NUM_OCTANTS {
        if row[j] > row[best] {
            best = j;
        }
    }
    best
}

/// Pick the transform for a crossings row: rotate the most-crossed
/// octant to position I (ties: smallest index; all-zero: identity),
/// then mirror iff that gives the second-most-crossed octant a smaller
/// index (ties broken lexicographically on the whole row, which makes
/// the choice a function of the unordered {row, mirrored row} pair and
/// hence invariant under mirroring the drawing).
pub fn choose_transform(crossings: &[usize; NUM_OCTANTS]) -> FrameTransform {
    if crossings.iter().all(|&c| c == 0) {
        return FrameTransform::identity();
    }
    let mut rotation = 0;
    for j in 1..NUM_OCTANTS {
        if crossings[j] > crossings[rotation] {
            rotation = j;
        }
    }
    let mut rotated = [0; NUM_OCTANTS];
    for (j, slot) in rotated.iter_mut().enumerate() {
        *slot = crossings[(j + rotation) % NUM_OCTANTS];
    }
    let mirrored_row = mirror_row(&rotated);
    let ju = second_max_index(&rotated);
    let jm = second_max_index(&mirrored_row);
    let mirrored = match jm.cmp(&ju) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => mirrored_row < rotated,
    };
    FrameTransform { rotation, mirrored }
}

/// Rotate/mirror all octant-indexed blocks into the normalized frame.
pub fn normalize_frame(stats: &OctantStats) -> (OctantStats, FrameTransform) {
    let t = choose_transform(&stats.crossings);
    (stats.permuted(t), t)
}

/// The 54-entry observation handed to the agent, along with the frame
/// transform needed to decode its actions.
#[derive(Debug, Clone)]
pub struct Observation {
    pub values: [f64; OBS_LEN],
    pub transform: FrameTransform,
    pub vertex: VertexId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Gc,
    Lc,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Gc => write!(f, "gc"),
            Objective::Lc => write!(f, "lc"),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gc" => Ok(Objective::Gc),
            "lc" => Ok(Objective::Lc),
            other => Err(format!("unknown objective {other:?}, expected gc|lc")),
        }
    }
}

/// Reward for the global-crossing objective: crossings removed, with a
/// small negative reward when nothing changed to incentivize alteration.
pub fn reward_gc(cr_before: usize, cr_after: usize) -> f64 {
    if cr_before != cr_after {
        cr_before as f64 - cr_after as f64
    } else {
        -0.001
    }
}

/// Reward for the local-crossing objective, combining the change in the
/// local and global crossing number. `mstar` counts edges carrying
/// exactly the local crossing number.
#[allow(clippy::too_many_arguments)]
pub fn reward_lc(
    lcr_before: usize,
    lcr_after: usize,
    cr_before: usize,
    cr_after: usize,
    mstar_before: usize,
    mstar_after: usize,
    m: usize,
) -> f64 {
    assert!(m >= 1);
    let cr_term = (cr_before as f64 - cr_after as f64) / m as f64;
    if lcr_before != lcr_after {
        10.0 * (lcr_before as f64 - lcr_after as f64) + cr_term
    } else if mstar_before != mstar_after || cr_before != cr_after {
        0.1 * (mstar_before as f64 - mstar_after as f64) + cr_term
    } else {
        -0.001
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SelectionError {
    #[error("drawing is crossing-free; the episode should have terminated")]
    CrossingFree,
}

/// Sample a vertex with probability proportional to the sum of incident
/// per-edge crossing counts divided by its degree. Vertices with zero
/// weight are never chosen.
pub fn select_vertex_gc(
    drawing: &Drawing,
    idx: &CrossingIndex,
    rng: &mut ChaCha8Rng,
) -> Result<VertexId, SelectionError> {
    let g = drawing.graph();
    let weights: Vec<f64> = (0..g.n())
        .map(|v| {
            let incident: usize = g
                .incident_edges(v)
                .iter()
                .map(|&e| idx.edge_crossings(e))
                .sum();
            if incident == 0 {
                0.0
            } else {
                incident as f64 / g.degree(v) as f64
            }
        })
        .collect();
    weighted_sample(&weights, rng).ok_or(SelectionError::CrossingFree)
}

/// Sample among vertices touching the local-crossing bottleneck: v is
/// eligible iff some incident edge either carries lcr crossings itself
/// or crosses an edge that does. Weight 1/deg(v).
pub fn select_vertex_lc(
    drawing: &Drawing,
    idx: &CrossingIndex,
    rng: &mut ChaCha8Rng,
) -> Result<VertexId, SelectionError> {
    let g = drawing.graph();
    let lcr = idx.local_crossing_number();
    if lcr == 0 {
        return Err(SelectionError::CrossingFree);
    }
    let weights: Vec<f64> = (0..g.n())
        .map(|v| {
            let eligible = g.incident_edges(v).iter().any(|&e| {
                idx.edge_crossings(e) == lcr
                    || idx.partners(e).iter().any(|&f| idx.edge_crossings(f) == lcr)
            });
            if eligible {
                1.0 / g.degree(v) as f64
            } else {
                0.0
            }
        })
        .collect();
    weighted_sample(&weights, rng).ok_or(SelectionError::CrossingFree)
}

fn weighted_sample(weights: &[f64], rng: &mut ChaCha8Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut x = rng.random_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if x < w {
            return Some(i);
        }
        x -= w;
    }
    weights.iter().rposition(|&w| w > 0.0)
}

/// A stochastic mapping from observations to actions.
pub trait ActionPolicy {
    /// Returns (action index, log-probability, value estimate).
    fn act(&self, obs: &Observation, rng: &mut ChaCha8Rng) -> (usize, f64, f64);
}

/// Baseline policy: uniform over the 16 directions.
pub struct UniformRandomPolicy;

impl ActionPolicy for UniformRandomPolicy {
    fn act(&self, _obs: &Observation, rng: &mut ChaCha8Rng) -> (usize, f64, f64) {
        let a = rng.random_range(0..NUM_ACTIONS);
        (a, -(NUM_ACTIONS as f64).ln(), 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnvConfig {
    pub objective: Objective,
    /// Episode ends after this many steps.
    pub step_cap: usize,
    /// Steps without improving the best drawing before resetting to it.
    pub reset_patience: usize,
    /// Overshoot factor range for ray-hit moves.
    pub epsilon_range: (f64, f64),
}

impl EnvConfig {
    pub fn new(objective: Objective) -> Self {
        EnvConfig {
            objective,
            step_cap: 2000,
            reset_patience: 400,
            epsilon_range: (0.01, 0.1),
        }
    }
}

/// One environment step as recorded for training.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: [f64; OBS_LEN],
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// Episode summary returned by [`CrossingEnv::run_episode`].
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub initial_objective: usize,
    pub final_objective: usize,
    pub steps: usize,
    pub total_reward: f64,
}

/// Episodic environment: owns the drawing and its crossing index,
/// tracks the best drawing seen, and resets to it after
/// `reset_patience` non-improving steps.
pub struct CrossingEnv {
    drawing: Drawing,
    index: CrossingIndex,
    embedding: StructuralEmbedding,
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    best_positions: Vec<Point>,
    best_objective: usize,
    initial_objective: usize,
    steps: usize,
    steps_since_improvement: usize,
    pending: Option<Observation>,
    done: bool,
}

impl CrossingEnv {
    pub fn new(drawing: Drawing, cfg: EnvConfig, seed: u64) -> Self {
        let embedding = structural_embedding(drawing.graph());
        Self::with_embedding(drawing, embedding, cfg, seed)
    }

    /// Construction with a precomputed (cached) embedding.
    pub fn with_embedding(
        drawing: Drawing,
        embedding: StructuralEmbedding,
        cfg: EnvConfig,
        seed: u64,
    ) -> Self {
        assert_eq!(embedding.n(), drawing.graph().n());
        let index = CrossingIndex::build(&drawing);
        let objective = objective_of(&index, cfg.objective);
        let best_positions = drawing.positions().to_vec();
        let done = objective == 0;
        CrossingEnv {
            drawing,
            index,
            embedding,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            best_positions,
            best_objective: objective,
            initial_objective: objective,
            steps: 0,
            steps_since_improvement: 0,
            pending: None,
            done,
        }
    }

    pub fn drawing(&self) -> &Drawing {
        &self.drawing
    }

    pub fn index(&self) -> &CrossingIndex {
        &self.index
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn steps_since_improvement(&self) -> usize {
        self.steps_since_improvement
    }

    pub fn initial_objective(&self) -> usize {
        self.initial_objective
    }

    pub fn best_objective(&self) -> usize {
        self.best_objective
    }

    pub fn objective_value(&self) -> usize {
        objective_of(&self.index, self.cfg.objective)
    }

    /// The best drawing seen so far (including the initial one).
    pub fn best_drawing(&self) -> Drawing {
        let mut d = self.drawing.clone();
        d.set_all_positions(&self.best_positions);
        d
    }

    /// Raw per-octant measurements for v, world frame.
    pub fn octant_stats(&self, v: VertexId) -> OctantStats {
        let g = self.drawing.graph();
        let pos = self.drawing.position(v);
        let mut stats = OctantStats::empty();
        for (w, &q) in self.drawing.positions().iter().enumerate() {
            if w == v {
                continue;
            }
            let oct = octant_of(pos, q);
            stats.vertices[oct] += 1;
            let d2 = pos.dist2(q);
            if d2 < stats.nearest_vertex_d2[oct] {
                stats.nearest_vertex_d2[oct] = d2;
            }
        }
        for &e in g.incident_edges(v) {
            let (a, b) = g.endpoints(e);
            let u = if a == v { b } else { a };
            let q = self.drawing.position(u);
            let oct = octant_of(pos, q);
            stats.neighbors[oct] += 1;
            let d2 = pos.dist2(q);
            if d2 < stats.nearest_neighbor_d2[oct] {
                stats.nearest_neighbor_d2[oct] = d2;
            }
            let crossings = self.index.edge_crossings(e);
            stats.crossings[oct] += crossings;
            stats.local_cr[oct] = stats.local_cr[oct].max(crossings);
        }
        stats
    }

    /// Build the observation for v: fill the octant blocks, normalize
    /// the frame, then scale everything into bounded ranges.
    pub fn build_observation(&self, v: VertexId) -> Observation {
        let g = self.drawing.graph();
        let (stats, transform) = normalize_frame(&self.octant_stats(v));
        let deg = g.degree(v);
        let n = g.n();
        let m = g.m();
        let diam2 = self.drawing.diameter2();
        let cr = self.index.total();
        let lcr = self.index.local_crossing_number();
        let max_oct_cross = *stats.crossings.iter().max().unwrap_or(&0);

        let mut values = [0.0; OBS_LEN];
        for j in 0..NUM_OCTANTS {
            if deg > 0 {
                values[j] = stats.neighbors[j] as f64 / deg as f64;
            }
            values[8 + j] = stats.vertices[j] as f64 / n as f64;
            values[16 + j] = normalized_distance(stats.nearest_neighbor_d2[j], diam2);
            values[24 + j] = normalized_distance(stats.nearest_vertex_d2[j], diam2);
            if max_oct_cross > 0 {
                values[32 + j] = stats.crossings[j] as f64 / max_oct_cross as f64;
            }
            values[40 + j] = stats.local_cr[j] as f64 / lcr.max(1) as f64;
        }
        let cr_denom = (m * m.saturating_sub(1) / 2).max(1);
        values[48] = cr as f64 / cr_denom as f64;
        values[49] = lcr as f64 / m.saturating_sub(1).max(1) as f64;
        let emb = self.embedding.vector(v);
        values[50..54].copy_from_slice(&emb);
        Observation {
            values,
            transform,
            vertex: v,
        }
    }

    /// Pick the vertex the agent sits on next, per the objective.
    pub fn select_vertex(&mut self) -> Result<VertexId, SelectionError> {
        match self.cfg.objective {
            Objective::Gc => select_vertex_gc(&self.drawing, &self.index, &mut self.rng),
            Objective::Lc => select_vertex_lc(&self.drawing, &self.index, &mut self.rng),
        }
    }

    /// Observation for the upcoming step (vertex selection included);
    /// cached so value bootstrapping does not re-roll the selection.
    pub fn observe(&mut self) -> Observation {
        assert!(!self.done, "cannot observe a finished episode");
        if self.pending.is_none() {
            let v = self.select_vertex().expect("non-terminal env has crossings");
            self.pending = Some(self.build_observation(v));
        }
        self.pending.clone().unwrap()
    }

    /// Decode the action, move the vertex (overshooting the first edge
    /// hit by 1+eps, or by unit distance if the ray escapes), update the
    /// index incrementally, and return the reward.
    pub fn apply_action(&mut self, obs: &Observation, action: usize) -> f64 {
        assert!(action < NUM_ACTIONS);
        let v = obs.vertex;
        let dir = direction_vector(obs.transform.to_world_direction(action));
        let origin = self.drawing.position(v);
        let distance = match first_ray_hit(&self.drawing, v, dir) {
            Some(t) => {
                let (lo, hi) = self.cfg.epsilon_range;
                let eps: f64 = self.rng.random_range(lo..=hi);
                t * (1.0 + eps)
            }
            None => 1.0,
        };
        let target = origin + dir * distance;

        let cr_before = self.index.total();
        let lcr_before = self.index.local_crossing_number();
        let mstar_before = self.index.mstar();

        let pos = self.drawing.sanitized_position(v, target, &mut self.rng);
        move_vertex(&mut self.drawing, &mut self.index, v, pos);

        let cr_after = self.index.total();
        match self.cfg.objective {
            Objective::Gc => reward_gc(cr_before, cr_after),
            Objective::Lc => reward_lc(
                lcr_before,
                self.index.local_crossing_number(),
                cr_before,
                cr_after,
                mstar_before,
                self.index.mstar(),
                self.drawing.graph().m(),
            ),
        }
    }

    /// Restore the best drawing seen and rebuild the index.
    pub fn reset_to_best(&mut self) {
        self.drawing.set_all_positions(&self.best_positions);
        self.index = CrossingIndex::build(&self.drawing);
        self.pending = None;
    }

    /// One full step: select vertex, observe, act, reward, track the
    /// best drawing, reset after `reset_patience` non-improving steps,
    /// and terminate at the step cap or at objective zero. Returns None
    /// once the episode is over.
    pub fn step(&mut self, policy: &dyn ActionPolicy) -> Option<Transition> {
        if self.done {
            return None;
        }
        let obs = self.observe();
        let (action, log_prob, value) = policy.act(&obs, &mut self.rng);
        let reward = self.apply_action(&obs, action);
        self.pending = None;
        self.steps += 1;

        let objective = self.objective_value();
        if objective < self.best_objective {
            self.best_objective = objective;
            self.best_positions = self.drawing.positions().to_vec();
            self.steps_since_improvement = 0;
        } else {
            self.steps_since_improvement += 1;
            if self.steps_since_improvement >= self.cfg.reset_patience {
                self.reset_to_best();
                self.steps_since_improvement = 0;
            }
        }

        self.done = self.objective_value() == 0 || self.steps >= self.cfg.step_cap;
        Some(Transition {
            observation: obs.values,
            action,
            log_prob,
            value,
            reward,
            done: self.done,
        })
    }

    /// Run the episode to completion and return the summary; the best
    /// drawing is available via [`CrossingEnv::best_drawing`].
    pub fn run_episode(&mut self, policy: &dyn ActionPolicy) -> EpisodeResult {
        let mut total_reward = 0.0;
        while let Some(t) = self.step(policy) {
            total_reward += t.reward;
        }
        EpisodeResult {
            initial_objective: self.initial_objective,
            final_objective: self.best_objective,
            steps: self.steps,
            total_reward,
        }
    }
}

fn objective_of(index: &CrossingIndex, objective: Objective) -> usize {
    match objective {
        Objective::Gc => index.total(),
        Objective::Lc => index.local_crossing_number(),
    }
}

fn normalized_distance(d2: f64, diam2: f64) -> f64 {
    if !d2.is_finite() || diam2 <= 0.0 {
        0.0
    } else {
        (d2 / diam2).sqrt()
    }
}
