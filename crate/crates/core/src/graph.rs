//! Graph representation, ingestion, random generation, and the
//! filtering/preprocessing pipeline.
//!
//! Graphs are simple and undirected, immutable after construction.
//! Preprocessing rejects disconnected inputs, strips degree-1 vertices to
//! a fixed point, and drops instances the planarity filter judges planar,
//! so every surviving graph is connected with minimum degree >= 2.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::EdgeId;

/// Simple undirected graph: compact vertex ids 0..n-1, unordered edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    incident: Vec<Vec<EdgeId>>,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop at vertex {0} rejected")]
    SelfLoop(String),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex id {0} out of range for n={1}")]
    VertexOutOfRange(usize, usize),
    #[error("malformed GraphML: {0}")]
    Xml(String),
    #[error("edge references undeclared node {0:?}")]
    MissingEndpoint(String),
}

impl Graph {
    /// Build from an edge list. Rejects self-loops, duplicates, and
    /// out-of-range endpoints; loaders deduplicate (with a warning)
    /// before calling this.
    pub fn from_edges(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        for e in &mut edges {
            if e.0 == e.1 {
                return Err(GraphError::SelfLoop(e.0.to_string()));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.1 >= n {
                return Err(GraphError::VertexOutOfRange(e.1, n));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &e in &edges {
            if !seen.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut incident = vec![Vec::new(); n];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push(v);
            adjacency[v].push(u);
            incident[u].push(id);
            incident[v].push(id);
        }
        Ok(Graph {
            n,
            edges,
            adjacency,
            incident,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn incident_edges(&self, v: usize) -> &[EdgeId] {
        &self.incident[v]
    }

    pub fn endpoints(&self, e: EdgeId) -> (usize, usize) {
        self.edges[e]
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }

    /// Unweighted shortest-path (hop) distances from src; usize::MAX for
    /// unreachable vertices.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &u in self.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// True if both endpoints of e touch edge f (shared vertex).
    pub fn edges_adjacent(&self, e: EdgeId, f: EdgeId) -> bool {
        let (a, b) = self.edges[e];
        let (c, d) = self.edges[f];
        a == c || a == d || b == c || b == d
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.m())
    }
}

/// Compact arbitrary ids to 0..n-1 preserving first-appearance order,
/// deduplicating edges with a warning and rejecting self-loops.
fn assemble<I: Eq + std::hash::Hash + Clone + fmt::Debug>(
    raw_edges: Vec<(I, I)>,
    declared: Option<&[I]>,
) -> Result<Graph, GraphError> {
    let mut ids: HashMap<I, usize> = HashMap::new();
    let mut order = 0usize;
    if let Some(decl) = declared {
        for id in decl {
            ids.entry(id.clone()).or_insert_with(|| {
                let k = order;
                order += 1;
                k
            });
        }
    }
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(raw_edges.len());
    let mut seen = std::collections::HashSet::new();
    for (a, b) in raw_edges {
        if a == b {
            return Err(GraphError::SelfLoop(format!("{a:?}")));
        }
        let resolve = |ids: &mut HashMap<I, usize>, order: &mut usize, key: I| -> Result<usize, GraphError> {
            if declared.is_some() {
                ids.get(&key)
                    .copied()
                    .ok_or_else(|| GraphError::MissingEndpoint(format!("{key:?}")))
            } else {
                Ok(*ids.entry(key).or_insert_with(|| {
                    let k = *order;
                    *order += 1;
                    k
                }))
            }
        };
        let u = resolve(&mut ids, &mut order, a)?;
        let v = resolve(&mut ids, &mut order, b)?;
        let e = (u.min(v), u.max(v));
        if seen.insert(e) {
            edges.push(e);
        } else {
            log::warn!("duplicate edge ({}, {}) dropped", e.0, e.1);
        }
    }
    Graph::from_edges(order, edges)
}

/// Load a UTF-8 edge list: one `u v` pair per line, `#` comments and
/// blank lines ignored, vertex ids compacted in first-appearance order.
pub fn load_edgelist(path: &Path) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_edgelist(&text)
}

pub fn parse_edgelist(text: &str) -> Result<Graph, GraphError> {
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse_id = |tok: Option<&str>| -> Result<u64, GraphError> {
            tok.and_then(|t| t.parse::<u64>().ok())
                .ok_or_else(|| GraphError::Parse {
                    line: lineno + 1,
                    message: format!("expected `u v`, got {line:?}"),
                })
        };
        let u = parse_id(parts.next())?;
        let v = parse_id(parts.next())?;
        if parts.next().is_some() {
            return Err(GraphError::Parse {
                line: lineno + 1,
                message: format!("trailing tokens in {line:?}"),
            });
        }
        raw.push((u, v));
    }
    assemble(raw, None)
}

/// Load the GraphML subset used by the benchmark sets: `<node id>` and
/// `<edge source target>`; every other attribute is ignored.
pub fn load_graphml(path: &Path) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_graphml(&text)
}

pub fn parse_graphml(text: &str) -> Result<Graph, GraphError> {
    use quick_xml::events::Event;
    use quick_xml::Reader;

    let mut reader = Reader::from_str(text);
    let mut nodes: Vec<String> = Vec::new();
    let mut raw_edges: Vec<(String, String)> = Vec::new();
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) => {
                let name = e.name();
                let name = name.as_ref();
                if name == b"node" {
                    let mut id = None;
                    for attr in e.attributes().flatten() {
                        if attr.key.as_ref() == b"id" {
                            id = Some(String::from_utf8_lossy(&attr.value).into_owned());
                        }
                    }
                    match id {
                        Some(id) => nodes.push(id),
                        None => return Err(GraphError::Xml("node without id".into())),
                    }
                } else if name == b"edge" {
                    let (mut src, mut tgt) = (None, None);
                    for attr in e.attributes().flatten() {
                        match attr.key.as_ref() {
                            b"source" => {
                                src = Some(String::from_utf8_lossy(&attr.value).into_owned());
                            }
                            b"target" => {
                                tgt = Some(String::from_utf8_lossy(&attr.value).into_owned());
                            }
                            _ => {}
                        }
                    }
                    match (src, tgt) {
                        (Some(s), Some(t)) => raw_edges.push((s, t)),
                        _ => {
                            return Err(GraphError::Xml(
                                "edge without source/target".into(),
                            ))
                        }
                    }
                }
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(err) => return Err(GraphError::Xml(err.to_string())),
        }
    }
    assemble(raw_edges, Some(&nodes))
}

/// Parameters of the extended Barabasi-Albert process.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BaParams {
    /// Target vertex count.
    pub n: usize,
    /// Preferential attachment parameter (edges per new vertex).
    pub m_attach: usize,
    /// Probability of an edge-addition step.
    pub p: f64,
    /// Probability of a rewiring step.
    pub q: f64,
    pub seed: u64,
}

impl BaParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.p < 0.0 || self.q < 0.0 || self.p + self.q >= 1.0 {
            return Err(format!("require p, q >= 0 and p + q < 1, got p={}, q={}", self.p, self.q));
        }
        if self.m_attach == 0 {
            return Err("m_attach must be >= 1".into());
        }
        if self.n < self.m_attach + 1 {
            return Err(format!(
                "need n >= m_attach + 1, got n={}, m_attach={}",
                self.n, self.m_attach
            ));
        }
        Ok(())
    }
}

/// Preferential sampling pool: one entry per unit of degree.
struct DegreePool {
    entries: Vec<usize>,
}

impl DegreePool {
    fn new() -> Self {
        DegreePool { entries: Vec::new() }
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        self.entries.push(u);
        self.entries.push(v);
    }

    fn remove_one(&mut self, v: usize) {
        if let Some(pos) = self.entries.iter().position(|&x| x == v) {
            self.entries.swap_remove(pos);
        }
    }

    /// Degree-proportional draw avoiding `exclude`; None if the pool has
    /// no eligible entry after a bounded number of tries.
    fn sample(
        &self,
        rng: &mut ChaCha8Rng,
        exclude: &dyn Fn(usize) -> bool,
    ) -> Option<usize> {
        if self.entries.is_empty() {
            return None;
        }
        for _ in 0..64 {
            let v = self.entries[rng.random_range(0..self.entries.len())];
            if !exclude(v) {
                return Some(v);
            }
        }
        let eligible: Vec<usize> = self
            .entries
            .iter()
            .copied()
            .filter(|&v| !exclude(v))
            .collect();
        if eligible.is_empty() {
            None
        } else {
            Some(eligible[rng.random_range(0..eligible.len())])
        }
    }
}

/// Grow an extended Barabasi-Albert graph: starting from a clique on
/// m_attach + 1 vertices, each step either adds m_attach edges between
/// existing vertices (probability p), rewires m_attach edges
/// (probability q), or attaches a new vertex with m_attach preferential
/// edges. Deterministic given the seed.
pub fn generate_extended_ba(params: &BaParams) -> Graph {
    params.validate().expect("invalid BA parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let m = params.m_attach;

    let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); m + 1];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut pool = DegreePool::new();
    for u in 0..=m {
        for v in (u + 1)..=m {
            adj[u].insert(v);
            adj[v].insert(u);
            edges.push((u, v));
            pool.add_edge(u, v);
        }
    }

    while adj.len() < params.n {
        let roll: f64 = rng.random();
        if roll < params.p {
            // add m edges between existing vertices
            for _ in 0..m {
                let u = rng.random_range(0..adj.len());
                let pick = pool.sample(&mut rng, &|w| w == u || adj[u].contains(&w));
                if let Some(v) = pick {
                    adj[u].insert(v);
                    adj[v].insert(u);
                    edges.push((u.min(v), u.max(v)));
                    pool.add_edge(u, v);
                }
            }
        } else if roll < params.p + params.q {
            // rewire m edges: replace (u, w) by (u, w')
            for _ in 0..m {
                let u = rng.random_range(0..adj.len());
                if adj[u].is_empty() {
                    continue;
                }
                let nb: Vec<usize> = adj[u].iter().copied().collect();
                let w = nb[rng.random_range(0..nb.len())];
                let pick = pool.sample(&mut rng, &|x| x == u || adj[u].contains(&x));
                if let Some(w2) = pick {
                    adj[u].remove(&w);
                    adj[w].remove(&u);
                    let old = (u.min(w), u.max(w));
                    if let Some(pos) = edges.iter().position(|&e| e == old) {
                        edges.swap_remove(pos);
                    }
                    pool.remove_one(u);
                    pool.remove_one(w);
                    adj[u].insert(w2);
                    adj[w2].insert(u);
                    edges.push((u.min(w2), u.max(w2)));
                    pool.add_edge(u, w2);
                }
            }
        } else {
            // attach a new vertex with m preferential edges
            let new = adj.len();
            adj.push(Default::default());
            let mut chosen: Vec<usize> = Vec::with_capacity(m);
            for _ in 0..m {
                let pick = pool.sample(&mut rng, &|w| w == new || chosen.contains(&w));
                match pick {
                    Some(v) => chosen.push(v),
                    None => break,
                }
            }
            for &v in &chosen {
                adj[new].insert(v);
                adj[v].insert(new);
                edges.push((v.min(new), v.max(new)));
                pool.add_edge(new, v);
            }
        }
    }

    Graph::from_edges(adj.len(), edges).expect("generator preserves simplicity")
}

/// Random chorded cycle: a Hamiltonian cycle on n vertices plus `chords`
/// random chords. Connected with minimum degree 2 by construction; used
/// as the desk-scale stand-in for the sparse benchmark corpus.
pub fn generate_chorded_cycle(n: usize, chords: usize, seed: u64) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| {
        let j = (i + 1) % n;
        (i.min(j), i.max(j))
    }).collect();
    let mut seen: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
    let max_extra = n * (n - 1) / 2 - n;
    let target = chords.min(max_extra);
    let mut added = 0;
    while added < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if seen.insert(e) {
            edges.push(e);
            added += 1;
        }
    }
    Graph::from_edges(n, edges).expect("construction is simple")
}

/// Why preprocessing rejected a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    Disconnected,
    Planar,
    EmptyAfterStripping,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Disconnected => write!(f, "disconnected"),
            Rejection::Planar => write!(f, "planar"),
            Rejection::EmptyAfterStripping => write!(f, "empty_after_stripping"),
        }
    }
}

/// Effort ceiling for the layout-based planarity filter.
#[derive(Debug, Clone, Copy)]
pub struct PlanarFilterBudget {
    pub samples_per_vertex: usize,
    pub sweeps: usize,
}

impl Default for PlanarFilterBudget {
    fn default() -> Self {
        PlanarFilterBudget {
            samples_per_vertex: 40,
            sweeps: 3,
        }
    }
}

/// Strip degree-1 vertices iteratively (removing a leaf can create new
/// leaves) and return the remainder with compacted ids.
pub fn strip_degree_one(g: &Graph) -> Graph {
    let mut alive = vec![true; g.n()];
    let mut degree: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut queue: VecDeque<usize> = (0..g.n()).filter(|&v| degree[v] <= 1).collect();
    while let Some(v) = queue.pop_front() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &u in g.neighbors(v) {
            if alive[u] {
                degree[u] -= 1;
                if degree[u] <= 1 {
                    queue.push_back(u);
                }
            }
        }
    }
    let mut remap = vec![usize::MAX; g.n()];
    let mut next = 0;
    for v in 0..g.n() {
        if alive[v] {
            remap[v] = next;
            next += 1;
        }
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(u, v)| alive[u] && alive[v])
        .map(|&(u, v)| (remap[u], remap[v]))
        .collect();
    Graph::from_edges(next, edges).expect("stripping preserves simplicity")
}

/// Keep only instances worth benchmarking: reject disconnected graphs,
/// strip degree-1 vertices to a fixed point, then reject graphs the
/// heuristic filter judges planar. Graphs with m > 3n - 6 are kept
/// immediately (Euler bound); otherwise a budgeted layout plus local
/// search must fail to find a crossing-free drawing. The filter may keep
/// some planar graphs (that only makes benchmarks harder), never the
/// other way around.
pub fn preprocess(
    g: &Graph,
    budget: PlanarFilterBudget,
    seed: u64,
) -> Result<Graph, Rejection> {
    if !g.is_connected() {
        return Err(Rejection::Disconnected);
    }
    let core = strip_degree_one(g);
    if core.n() == 0 {
        return Err(Rejection::EmptyAfterStripping);
    }
    debug_assert!(core.is_connected());
    debug_assert!(core.min_degree() >= 2);
    if judged_planar(&core, budget, seed) {
        return Err(Rejection::Planar);
    }
    Ok(core)
}

/// Heuristic planarity verdict: false immediately when m > 3n - 6,
/// otherwise true iff a budgeted KK layout + sampled vertex movement
/// reaches a 0-crossing drawing.
pub fn judged_planar(g: &Graph, budget: PlanarFilterBudget, seed: u64) -> bool {
    if g.n() >= 3 && g.m() > 3 * g.n() - 6 {
        return false;
    }
    let arc = std::sync::Arc::new(g.clone());
    let mut drawing = crate::layout::layout_kamada_kawai(&arc, seed);
    let mut idx = crate::geometry::CrossingIndex::build(&drawing);
    if idx.total() == 0 {
        return true;
    }
    crate::layout::sampled_vertex_movement(
        &mut drawing,
        &mut idx,
        budget.samples_per_vertex,
        budget.sweeps,
        seed ^ 0x5eed,
    );
    idx.total() == 0
}

/// Which half of the corpus a graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphClass {
    Rome,
    Ba,
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphClass::Rome => write!(f, "rome"),
            GraphClass::Ba => write!(f, "ba"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Seeded train/test split over graph indices. Rome-like sets split
/// 80/20; BA-like sets use the 1000/500 absolute sizes when the corpus
/// is large enough and fall back to the same 2:1 ratio otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

pub fn split_dataset(count: usize, class: GraphClass, seed: u64) -> DatasetSplit {
    let mut ids: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let train_len = match class {
        GraphClass::Rome => (count * 4) / 5,
        GraphClass::Ba => {
            if count >= 1500 {
                1000.min(count)
            } else {
                (count * 2) / 3
            }
        }
    };
    let (train, test) = ids.split_at(train_len.min(count));
    DatasetSplit {
        train: train.to_vec(),
        test: test.to_vec(),
        seed,
    }
}

/// One graph of a prepared dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub split: Split,
    pub class: GraphClass,
}

/// Dataset manifest: the JSON file listing every prepared graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| GraphError::Parse {
            line: 0,
            message: format!("manifest: {e}"),
        })
    }

    pub fn entries_for(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// Load a graph by file extension: `.graphml` as GraphML, anything else
/// as an edge list.
pub fn load_graph_auto(path: &Path) -> Result<Graph, GraphError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("graphml") | Some("xml") => load_graphml(path),
        _ => load_edgelist(path),
    }
}
