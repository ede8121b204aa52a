//! Straight-line drawings and crossing computations.
//!
//! A [`Drawing`] maps each vertex of a [`Graph`] to a point in the plane;
//! edges are the straight segments between endpoint positions. The
//! [`CrossingIndex`] keeps per-edge crossing partner sets so that moving
//! one vertex only retests the segment pairs involving its incident
//! edges instead of recounting all of them.
//!
//! Degeneracy policy: drawings are kept in general position by
//! construction. Whenever a vertex would land within [`DEGENERACY_TOL`]
//! of another vertex or of a non-incident segment, it is nudged by a
//! seeded offset of magnitude [`PERTURB_MAGNITUDE`] and retested, so the
//! crossing predicate stays a pure strict test.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::graph::Graph;

pub type VertexId = usize;
pub type EdgeId = usize;

/// Distance below which a configuration counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Magnitude of the seeded nudge applied to degenerate positions.
pub const PERTURB_MAGNITUDE: f64 = 1e-6;
/// Orientation values within this band are treated as collinear.
pub const ORIENT_EPS: f64 = 1e-12;
/// Ray hits closer than this are ignored (the ray leaving a vertex along
/// one of its own edges would otherwise report t ~ 0).
pub const RAY_MIN_T: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Sign of the orientation of the triple (a, b, c): +1 counterclockwise,
/// -1 clockwise, 0 within [`ORIENT_EPS`] of collinear.
fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let v = (b - a).cross(c - a);
    if v > ORIENT_EPS {
        1
    } else if v < -ORIENT_EPS {
        -1
    } else {
        0
    }
}

/// True iff the open segments p1p2 and q1q2 intersect in exactly one
/// interior point. Segments that merely touch (shared endpoint, endpoint
/// on the other segment, collinear overlap) do not cross; such
/// configurations are removed upstream by the perturbation policy.
pub fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let o1 = orientation(p1, p2, q1);
    let o2 = orientation(p1, p2, q2);
    let o3 = orientation(q1, q2, p1);
    let o4 = orientation(q1, q2, p2);
    o1 * o2 < 0 && o3 * o4 < 0
}

/// Squared distance from point p to the closed segment ab.
pub fn point_segment_dist2(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dist2(Point::default()).max(f64::MIN_POSITIVE);
    let t = ((p - a).x * ab.x + (p - a).y * ab.y) / len2;
    let t = t.clamp(0.0, 1.0);
    p.dist2(a + ab * t)
}

/// A straight-line drawing of a graph: one finite position per vertex.
#[derive(Debug, Clone)]
pub struct Drawing {
    graph: Arc<Graph>,
    positions: Vec<Point>,
}

impl Drawing {
    pub fn new(graph: Arc<Graph>, positions: Vec<Point>) -> Self {
        assert_eq!(positions.len(), graph.n(), "one position per vertex");
        assert!(
            positions.iter().all(|p| p.is_finite()),
            "positions must be finite"
        );
        Drawing { graph, positions }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn position(&self, v: VertexId) -> Point {
        self.positions[v]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Raw position write. Callers are responsible for general position;
    /// see [`Drawing::sanitized_position`] and [`move_vertex`].
    pub fn set_position(&mut self, v: VertexId, p: Point) {
        assert!(p.is_finite());
        self.positions[v] = p;
    }

    pub fn set_all_positions(&mut self, positions: &[Point]) {
        assert_eq!(positions.len(), self.positions.len());
        self.positions.copy_from_slice(positions);
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Maximum squared distance over all vertex pairs. Rotation-invariant
    /// scale used to normalize observation distances.
    pub fn diameter2(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.positions.len() {
            for j in (i + 1)..self.positions.len() {
                best = best.max(self.positions[i].dist2(self.positions[j]));
            }
        }
        best
    }

    pub fn average_edge_length(&self) -> f64 {
        if self.graph.m() == 0 {
            return 1.0;
        }
        let sum: f64 = self
            .graph
            .edges()
            .iter()
            .map(|&(u, v)| self.positions[u].dist(self.positions[v]))
            .sum();
        sum / self.graph.m() as f64
    }

    /// Uniformly rescale so the average edge length is 1.0, giving the
    /// "unit distance" move fallback a scale-free meaning.
    pub fn rescale_to_unit_edge(&mut self) {
        let avg = self.average_edge_length();
        if avg > 0.0 && avg.is_finite() {
            let s = 1.0 / avg;
            for p in &mut self.positions {
                *p = *p * s;
            }
        }
    }

    /// True if placing v at p would violate general position: p within
    /// tolerance of another vertex or of a segment not incident to v.
    pub fn is_degenerate_at(&self, v: VertexId, p: Point) -> bool {
        let tol2 = DEGENERACY_TOL * DEGENERACY_TOL;
        for (u, q) in self.positions.iter().enumerate() {
            if u != v && p.dist2(*q) < tol2 {
                return true;
            }
        }
        for (e, &(a, b)) in self.graph.edges().iter().enumerate() {
            if a == v || b == v {
                // An incident segment always passes through v's own
                // position; only foreign segments make p degenerate.
                continue;
            }
            let _ = e;
            if point_segment_dist2(p, self.positions[a], self.positions[b]) < tol2 {
                return true;
            }
        }
        // Moving v also moves its incident segments; make sure none of
        // them would sweep through another vertex's position.
        for &u in self.graph.neighbors(v) {
            let a = self.positions[u];
            for (w, q) in self.positions.iter().enumerate() {
                if w == v || w == u {
                    continue;
                }
                if point_segment_dist2(*q, a, p) < tol2 {
                    return true;
                }
            }
        }
        false
    }

    /// Nudge `desired` until it is in general position for v.
    pub fn sanitized_position(&self, v: VertexId, desired: Point, rng: &mut ChaCha8Rng) -> Point {
        let mut p = desired;
        let mut magnitude = PERTURB_MAGNITUDE;
        while self.is_degenerate_at(v, p) {
            let dx: f64 = rng.random_range(-1.0..=1.0);
            let dy: f64 = rng.random_range(-1.0..=1.0);
            p = Point::new(desired.x + dx * magnitude, desired.y + dy * magnitude);
            magnitude *= 2.0;
        }
        p
    }

    /// Nudge every vertex into general position (used once after layout).
    pub fn sanitize_all(&mut self, rng: &mut ChaCha8Rng) {
        for v in 0..self.positions.len() {
            let p = self.sanitized_position(v, self.positions[v], rng);
            self.positions[v] = p;
        }
    }

    /// Serialize as `{"vertex_id": [x, y], ...}` with keys in vertex order.
    pub fn to_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .positions
            .iter()
            .enumerate()
            .map(|(v, p)| (v.to_string(), json!([p.x, p.y])))
            .collect();
        serde_json::Value::Object(map).to_string()
    }

    pub fn from_json(graph: Arc<Graph>, text: &str) -> Result<Self, DrawingParseError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(DrawingParseError::Json)?;
        let obj = value
            .as_object()
            .ok_or(DrawingParseError::NotAnObject)?;
        let mut positions = vec![None; graph.n()];
        for (key, val) in obj {
            let v: usize = key
                .parse()
                .map_err(|_| DrawingParseError::BadVertexId(key.clone()))?;
            if v >= graph.n() {
                return Err(DrawingParseError::BadVertexId(key.clone()));
            }
            let coords = val
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| DrawingParseError::BadCoordinates(key.clone()))?;
            let x = coords[0]
                .as_f64()
                .ok_or_else(|| DrawingParseError::BadCoordinates(key.clone()))?;
            let y = coords[1]
                .as_f64()
                .ok_or_else(|| DrawingParseError::BadCoordinates(key.clone()))?;
            positions[v] = Some(Point::new(x, y));
        }
        let positions: Option<Vec<Point>> = positions.into_iter().collect();
        match positions {
            Some(ps) => Ok(Drawing::new(graph, ps)),
            None => Err(DrawingParseError::MissingVertex),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DrawingParseError {
    #[error("invalid drawing JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("drawing JSON must be an object")]
    NotAnObject,
    #[error("bad vertex id {0:?}")]
    BadVertexId(String),
    #[error("bad coordinates for vertex {0:?}")]
    BadCoordinates(String),
    #[error("drawing JSON is missing a vertex")]
    MissingVertex,
}

/// Per-edge crossing partner sets plus the global total.
///
/// Invariants: `total == sum(per-edge counts) / 2`, each per-edge count
/// equals its partner-set size, and the local crossing number is the
/// maximum per-edge count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingIndex {
    partners: Vec<BTreeSet<EdgeId>>,
    total: usize,
}

impl CrossingIndex {
    /// Exhaustive O(m^2) pairwise test over non-adjacent edge pairs.
    pub fn build(d: &Drawing) -> Self {
        let g = d.graph();
        let m = g.m();
        let mut partners = vec![BTreeSet::new(); m];
        let mut total = 0;
        let edges = g.edges();
        for e in 0..m {
            let (a, b) = edges[e];
            for f in (e + 1)..m {
                let (c, dd) = edges[f];
                if a == c || a == dd || b == c || b == dd {
                    continue;
                }
                if segments_cross(
                    d.position(a),
                    d.position(b),
                    d.position(c),
                    d.position(dd),
                ) {
                    partners[e].insert(f);
                    partners[f].insert(e);
                    total += 1;
                }
            }
        }
        CrossingIndex { partners, total }
    }

    /// Global crossing number of the drawing.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of crossings on edge e.
    pub fn edge_crossings(&self, e: EdgeId) -> usize {
        self.partners[e].len()
    }

    /// Edges crossing edge e.
    pub fn partners(&self, e: EdgeId) -> &BTreeSet<EdgeId> {
        &self.partners[e]
    }

    /// Local crossing number: maximum crossings on any single edge.
    pub fn local_crossing_number(&self) -> usize {
        self.partners.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Number of edges carrying exactly the local crossing number.
    pub fn mstar(&self) -> usize {
        let lcr = self.local_crossing_number();
        self.partners.iter().filter(|s| s.len() == lcr).count()
    }

    /// Edges attaining the local crossing number (empty if lcr == 0).
    pub fn max_crossing_edges(&self) -> Vec<EdgeId> {
        let lcr = self.local_crossing_number();
        if lcr == 0 {
            return Vec::new();
        }
        self.partners
            .iter()
            .enumerate()
            .filter(|(_, s)| s.len() == lcr)
            .map(|(e, _)| e)
            .collect()
    }

    fn clear_edge(&mut self, e: EdgeId) {
        let old: Vec<EdgeId> = self.partners[e].iter().copied().collect();
        for f in old {
            self.partners[f].remove(&e);
            self.total -= 1;
        }
        self.partners[e].clear();
    }

    fn retest_edge(&mut self, d: &Drawing, e: EdgeId) {
        let g = d.graph();
        let (a, b) = g.edges()[e];
        let (pa, pb) = (d.position(a), d.position(b));
        for (f, &(c, dd)) in g.edges().iter().enumerate() {
            if f == e || a == c || a == dd || b == c || b == dd {
                continue;
            }
            if self.partners[e].contains(&f) {
                continue;
            }
            if segments_cross(pa, pb, d.position(c), d.position(dd)) {
                self.partners[e].insert(f);
                self.partners[f].insert(e);
                self.total += 1;
            }
        }
    }
}

/// Move v to `new_pos` (sanitized by the caller) and update the index by
/// retesting only pairs involving edges incident to v. The result is
/// identical to rebuilding the index from scratch on the new drawing.
pub fn move_vertex(d: &mut Drawing, idx: &mut CrossingIndex, v: VertexId, new_pos: Point) {
    for &e in d.graph().incident_edges(v) {
        idx.clear_edge(e);
    }
    d.set_position(v, new_pos);
    let incident: Vec<EdgeId> = d.graph().incident_edges(v).to_vec();
    for e in incident {
        idx.retest_edge(d, e);
    }
}

/// Number of crossings the edges incident to v would carry if v sat at
/// `pos`, with every other vertex fixed. Crossings between two edges both
/// incident to v never count (they share v).
pub fn incident_crossings_at(d: &Drawing, v: VertexId, pos: Point) -> usize {
    let g = d.graph();
    let mut count = 0;
    for &e in g.incident_edges(v) {
        let (a, b) = g.edges()[e];
        let u = if a == v { b } else { a };
        let pu = d.position(u);
        for (f, &(c, dd)) in g.edges().iter().enumerate() {
            if f == e || c == v || dd == v || c == u || dd == u {
                continue;
            }
            if segments_cross(pos, pu, d.position(c), d.position(dd)) {
                count += 1;
            }
        }
    }
    count
}

/// Current number of crossings carried by edges incident to v.
pub fn incident_crossings(idx: &CrossingIndex, d: &Drawing, v: VertexId) -> usize {
    d.graph()
        .incident_edges(v)
        .iter()
        .map(|&e| idx.edge_crossings(e))
        .sum()
}

/// Smallest t > RAY_MIN_T such that `origin + t*dir` lies on some edge
/// segment of the drawing; None if the ray escapes cleanly. `dir` must be
/// a unit vector. Hits of v's own edges at v itself fall under the
/// RAY_MIN_T cutoff and are ignored.
pub fn first_ray_hit(d: &Drawing, v: VertexId, dir: Point) -> Option<f64> {
    let origin = d.position(v);
    let mut best: Option<f64> = None;
    for &(a, b) in d.graph().edges() {
        let pa = d.position(a);
        let pb = d.position(b);
        let seg = pb - pa;
        let denom = dir.cross(seg);
        if denom.abs() < ORIENT_EPS {
            continue; // parallel (or degenerate) — no transversal hit
        }
        let rel = pa - origin;
        let t = rel.cross(seg) / denom;
        let s = rel.cross(dir) / denom;
        if t > RAY_MIN_T && (0.0..=1.0).contains(&s) {
            best = Some(match best {
                Some(cur) => cur.min(t),
                None => t,
            });
        }
    }
    best
}
