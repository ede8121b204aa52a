//! Initial and baseline layouts.
//!
//! Kamada-Kawai (stress majorization over graph-theoretic distances)
//! produces the initial drawing handed to every post-processing
//! algorithm. Fruchterman-Reingold serves as a force-directed baseline,
//! and sampled vertex movement is a candidate-sampling local search that
//! stands in for the exact vertex-movement heuristic from the
//! literature. All layouts are rescaled to average edge length 1.0 and
//! nudged into general position before they are returned.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{
    incident_crossings, incident_crossings_at, move_vertex, CrossingIndex, Drawing, Point,
};
use crate::graph::Graph;

const STRESS_REL_TOL: f64 = 1e-6;
const STRESS_MAX_SWEEPS: usize = 500;

/// All-pairs hop distances by one BFS per vertex.
fn all_pairs_distances(g: &Graph) -> Vec<Vec<usize>> {
    (0..g.n()).map(|v| g.bfs_distances(v)).collect()
}

/// Stress of a placement: sum over pairs of (||p_u - p_v|| - d_uv)^2 / d_uv^2.
pub fn stress(positions: &[Point], dists: &[Vec<usize>]) -> f64 {
    let n = positions.len();
    let mut total = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            let d = dists[u][v] as f64;
            if d == 0.0 {
                continue;
            }
            let diff = positions[u].dist(positions[v]) - d;
            total += diff * diff / (d * d);
        }
    }
    total
}

fn random_positions(n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let span = (n as f64).sqrt().max(1.0);
    (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(0.0..span),
                rng.random_range(0.0..span),
            )
        })
        .collect()
}

/// Kamada-Kawai layout via stress majorization sweeps: every vertex
/// moves to the weighted barycenter prescribed by the majorizing
/// function, which never increases stress. Stops when the relative
/// stress improvement drops below 1e-6 or after 500 sweeps.
pub fn layout_kamada_kawai(g: &Arc<Graph>, seed: u64) -> Drawing {
    assert!(g.is_connected(), "layout requires a connected graph");
    let n = g.n();
    let dists = all_pairs_distances(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = random_positions(n, &mut rng);
    if n > 1 {
        let mut current = stress(&pos, &dists);
        for _ in 0..STRESS_MAX_SWEEPS {
            for u in 0..n {
                let mut num = Point::new(0.0, 0.0);
                let mut denom = 0.0;
                for v in 0..n {
                    if v == u {
                        continue;
                    }
                    let d = dists[u][v] as f64;
                    let w = 1.0 / (d * d);
                    let delta = pos[u] - pos[v];
                    let len = delta.dist2(Point::default()).sqrt();
                    let dir = if len > 1e-12 {
                        delta * (1.0 / len)
                    } else {
                        // coincident pair: push along a seeded direction
                        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        Point::new(a.cos(), a.sin())
                    };
                    num = num + (pos[v] + dir * d) * w;
                    denom += w;
                }
                if denom > 0.0 {
                    pos[u] = num * (1.0 / denom);
                }
            }
            let next = stress(&pos, &dists);
            debug_assert!(next <= current + 1e-9, "majorization must not increase stress");
            let converged = current - next < STRESS_REL_TOL * current.max(f64::MIN_POSITIVE);
            current = next;
            if converged {
                break;
            }
        }
    }
    finalize(g, pos, seed)
}

/// Fruchterman-Reingold force layout with linearly cooling temperature.
pub fn layout_fruchterman_reingold(g: &Arc<Graph>, seed: u64, iterations: usize) -> Drawing {
    assert!(g.is_connected(), "layout requires a connected graph");
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = random_positions(n, &mut rng);
    if n > 1 {
        let span = (n as f64).sqrt().max(1.0);
        let k = span / (n as f64).sqrt(); // ideal pairwise distance
        let mut disp = vec![Point::new(0.0, 0.0); n];
        for it in 0..iterations.max(1) {
            for d in &mut disp {
                *d = Point::new(0.0, 0.0);
            }
            for u in 0..n {
                for v in (u + 1)..n {
                    let delta = pos[u] - pos[v];
                    let dist = delta.dist2(Point::default()).sqrt().max(1e-9);
                    let repulse = k * k / dist;
                    let push = delta * (repulse / dist);
                    disp[u] = disp[u] + push;
                    disp[v] = disp[v] - push;
                }
            }
            for &(u, v) in g.edges() {
                let delta = pos[u] - pos[v];
                let dist = delta.dist2(Point::default()).sqrt().max(1e-9);
                let attract = dist * dist / k;
                let pull = delta * (attract / dist);
                disp[u] = disp[u] - pull;
                disp[v] = disp[v] + pull;
            }
            let t = 0.1 * span * (1.0 - it as f64 / iterations.max(1) as f64);
            for u in 0..n {
                let len = disp[u].dist2(Point::default()).sqrt();
                if len > 1e-12 {
                    let step = len.min(t.max(1e-4));
                    pos[u] = pos[u] + disp[u] * (step / len);
                }
            }
        }
    }
    finalize(g, pos, seed)
}

fn finalize(g: &Arc<Graph>, positions: Vec<Point>, seed: u64) -> Drawing {
    let mut d = Drawing::new(Arc::clone(g), positions);
    d.rescale_to_unit_edge();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_ab1e);
    d.sanitize_all(&mut rng);
    d
}

/// Local search baseline: iterate vertices in random order, test
/// `samples_per_vertex` candidate positions (uniform in the current
/// bounding box, plus the current position), and keep the candidate
/// minimizing total crossings. Ties keep the current position, so the
/// global crossing count never increases.
pub fn sampled_vertex_movement(
    d: &mut Drawing,
    idx: &mut CrossingIndex,
    samples_per_vertex: usize,
    sweeps: usize,
    seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = d.graph().n();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..sweeps {
        if idx.total() == 0 {
            return;
        }
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for &v in &order {
            let before_total = idx.total();
            let incident_now = incident_crossings(idx, d, v);
            let (lo, hi) = d.bounding_box();
            let mut best_pos = None;
            let mut best_incident = incident_now;
            for _ in 0..samples_per_vertex {
                let cand = Point::new(
                    rng.random_range(lo.x..=hi.x),
                    rng.random_range(lo.y..=hi.y),
                );
                let c = incident_crossings_at(d, v, cand);
                if c < best_incident {
                    best_incident = c;
                    best_pos = Some(cand);
                }
            }
            if let Some(cand) = best_pos {
                let old = d.position(v);
                let pos = d.sanitized_position(v, cand, &mut rng);
                move_vertex(d, idx, v, pos);
                // perturbation could have spoiled the predicted count
                if idx.total() > before_total {
                    move_vertex(d, idx, v, old);
                }
            }
            debug_assert!(idx.total() <= before_total);
        }
    }
}
