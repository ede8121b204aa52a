//! Benchmark harness: run registered algorithms over a test set with a
//! per-run time limit, record crossing numbers and runtimes, and compute
//! the evaluation statistics (box-plot summaries, pairwise win
//! percentages, Wilcoxon-Holm p-values).
//!
//! Runs are sequential (one worker) so recorded runtimes are meaningful;
//! each algorithm executes on its own thread only so that a run
//! exceeding the time limit can be abandoned and recorded as a timeout.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::embedding::{structural_embedding, StructuralEmbedding};
use crate::env::{CrossingEnv, EnvConfig, Objective};
use crate::geometry::{CrossingIndex, Drawing};
use crate::graph::Graph;
use crate::layout::{layout_fruchterman_reingold, layout_kamada_kawai, sampled_vertex_movement};
use crate::nn::PolicyNet;
use crate::rng::derive_seed_indexed;
use crate::stats::{five_number_summary, holm_adjust, wilcoxon_signed_rank, FiveNumberSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Timeout,
    Failed,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunStatus::Ok => write!(f, "ok"),
            RunStatus::Timeout => write!(f, "timeout"),
            RunStatus::Failed => write!(f, "failed"),
        }
    }
}

/// One (graph, algorithm) measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub graph_id: String,
    pub algo: String,
    pub status: RunStatus,
    pub gcn: Option<usize>,
    pub lcn: Option<usize>,
    pub runtime_s: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Gcn,
    Lcn,
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Metric::Gcn),
            "lcn" => Ok(Metric::Lcn),
            other => Err(format!("unknown metric {other:?}, expected gcn|lcn")),
        }
    }
}

impl RunRecord {
    pub fn metric(&self, metric: Metric) -> Option<usize> {
        if self.status != RunStatus::Ok {
            return None;
        }
        match metric {
            Metric::Gcn => self.gcn,
            Metric::Lcn => self.lcn,
        }
    }
}

/// Everything an algorithm may use for one graph. The KK initial layout
/// and the structural embedding are computed once per graph, outside the
/// timed region, and shared by all post-processing algorithms.
pub struct BenchTask {
    pub graph_id: String,
    pub graph: Arc<Graph>,
    pub kk_init: Drawing,
    pub embedding: StructuralEmbedding,
    pub seed: u64,
}

pub trait BenchAlgorithm: Send + Sync {
    fn name(&self) -> &str;
    fn run(&self, task: &BenchTask) -> Drawing;
}

/// Kamada-Kawai baseline; also defines the initial layout of the
/// post-processing algorithms (same seed, hence the same drawing).
pub struct KkAlgorithm;

impl BenchAlgorithm for KkAlgorithm {
    fn name(&self) -> &str {
        "kk"
    }
    fn run(&self, task: &BenchTask) -> Drawing {
        layout_kamada_kawai(&task.graph, task.seed)
    }
}

pub struct FrAlgorithm {
    pub iterations: usize,
}

impl Default for FrAlgorithm {
    fn default() -> Self {
        FrAlgorithm { iterations: 50 }
    }
}

impl BenchAlgorithm for FrAlgorithm {
    fn name(&self) -> &str {
        "fr"
    }
    fn run(&self, task: &BenchTask) -> Drawing {
        layout_fruchterman_reingold(&task.graph, task.seed, self.iterations)
    }
}

pub struct SampledVmAlgorithm {
    pub samples_per_vertex: usize,
    pub sweeps: usize,
}

impl Default for SampledVmAlgorithm {
    fn default() -> Self {
        SampledVmAlgorithm {
            samples_per_vertex: 100,
            sweeps: 4,
        }
    }
}

impl BenchAlgorithm for SampledVmAlgorithm {
    fn name(&self) -> &str {
        "svm"
    }
    fn run(&self, task: &BenchTask) -> Drawing {
        let mut d = task.kk_init.clone();
        let mut idx = CrossingIndex::build(&d);
        sampled_vertex_movement(&mut d, &mut idx, self.samples_per_vertex, self.sweeps, task.seed);
        d
    }
}

/// RL post-processing: run one episode from the KK initial layout and
/// return the best drawing seen.
pub struct RlAlgorithm {
    pub objective: Objective,
    pub net: Arc<PolicyNet>,
    pub env_cfg: EnvConfig,
}

impl RlAlgorithm {
    pub fn new(objective: Objective, net: Arc<PolicyNet>) -> Self {
        RlAlgorithm {
            objective,
            net,
            env_cfg: EnvConfig::new(objective),
        }
    }
}

impl BenchAlgorithm for RlAlgorithm {
    fn name(&self) -> &str {
        match self.objective {
            Objective::Gc => "rl-gc",
            Objective::Lc => "rl-lc",
        }
    }
    fn run(&self, task: &BenchTask) -> Drawing {
        let mut cfg = self.env_cfg;
        cfg.objective = self.objective;
        let mut env = CrossingEnv::with_embedding(
            task.kk_init.clone(),
            task.embedding.clone(),
            cfg,
            task.seed,
        );
        env.run_episode(self.net.as_ref());
        env.best_drawing()
    }
}

/// Test stub: sleeps past any reasonable limit, for timeout-path checks.
pub struct SlowStubAlgorithm {
    pub delay: Duration,
}

impl BenchAlgorithm for SlowStubAlgorithm {
    fn name(&self) -> &str {
        "slow-stub"
    }
    fn run(&self, task: &BenchTask) -> Drawing {
        std::thread::sleep(self.delay);
        task.kk_init.clone()
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub time_limit: Duration,
    pub seed: u64,
    /// Append records here as they complete (crash-safe).
    pub results_csv: Option<PathBuf>,
    /// Persist each ok drawing as JSON for later rendering.
    pub drawings_dir: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            time_limit: Duration::from_secs(900),
            seed: 0,
            results_csv: None,
            drawings_dir: None,
        }
    }
}

/// Run every algorithm on every graph, one at a time. A run that
/// exceeds the time limit or panics becomes a timeout/failure row and
/// the suite continues.
pub fn run_suite(
    algorithms: &[Arc<dyn BenchAlgorithm>],
    set: &[(String, Arc<Graph>)],
    cfg: &SuiteConfig,
) -> Vec<RunRecord> {
    let mut writer = cfg.results_csv.as_ref().map(|path| {
        let mut w = csv::Writer::from_path(path).expect("open results csv");
        w.write_record(["graph_id", "algo", "status", "gcn", "lcn", "runtime_s", "seed"])
            .expect("csv header");
        w.flush().expect("flush header");
        w
    });
    if let Some(dir) = &cfg.drawings_dir {
        std::fs::create_dir_all(dir).expect("create drawings dir");
    }

    let mut records = Vec::with_capacity(set.len() * algorithms.len());
    for (gi, (graph_id, graph)) in set.iter().enumerate() {
        let seed = derive_seed_indexed(cfg.seed, "bench-graph", gi as u64);
        let task = Arc::new(BenchTask {
            graph_id: graph_id.clone(),
            graph: Arc::clone(graph),
            kk_init: layout_kamada_kawai(graph, seed),
            embedding: structural_embedding(graph),
            seed,
        });
        for algo in algorithms {
            let (record, drawing) = run_single(Arc::clone(algo), Arc::clone(&task), cfg.time_limit);
            if let (Some(dir), Some(drawing)) = (&cfg.drawings_dir, drawing) {
                let path = dir.join(format!("{}__{}.json", record.graph_id, record.algo));
                std::fs::write(path, drawing.to_json()).expect("write drawing json");
            }
            if let Some(w) = writer.as_mut() {
                write_record(w, &record).expect("append record");
                w.flush().expect("flush record");
            }
            records.push(record);
        }
    }
    records
}

fn run_single(
    algo: Arc<dyn BenchAlgorithm>,
    task: Arc<BenchTask>,
    limit: Duration,
) -> (RunRecord, Option<Drawing>) {
    let (tx, rx) = mpsc::channel();
    let name = algo.name().to_string();
    let seed = task.seed;
    let graph_id = task.graph_id.clone();
    let worker_task = Arc::clone(&task);
    std::thread::spawn(move || {
        let start = Instant::now();
        let drawing = algo.run(&worker_task);
        // receiver hung up == timeout already recorded; ignore send error
        let _ = tx.send((drawing, start.elapsed()));
    });
    match rx.recv_timeout(limit) {
        Ok((drawing, elapsed)) => {
            let idx = CrossingIndex::build(&drawing);
            let record = RunRecord {
                graph_id,
                algo: name,
                status: RunStatus::Ok,
                gcn: Some(idx.total()),
                lcn: Some(idx.local_crossing_number()),
                runtime_s: Some(elapsed.as_secs_f64()),
                seed,
            };
            (record, Some(drawing))
        }
        Err(err) => {
            let status = match err {
                mpsc::RecvTimeoutError::Timeout => RunStatus::Timeout,
                mpsc::RecvTimeoutError::Disconnected => RunStatus::Failed,
            };
            let record = RunRecord {
                graph_id,
                algo: name,
                status,
                gcn: None,
                lcn: None,
                runtime_s: None,
                seed,
            };
            (record, None)
        }
    }
}

fn write_record<W: std::io::Write>(w: &mut csv::Writer<W>, r: &RunRecord) -> csv::Result<()> {
    w.write_record([
        r.graph_id.clone(),
        r.algo.clone(),
        r.status.to_string(),
        r.gcn.map(|v| v.to_string()).unwrap_or_default(),
        r.lcn.map(|v| v.to_string()).unwrap_or_default(),
        r.runtime_s.map(|v| format!("{v:.6}")).unwrap_or_default(),
        r.seed.to_string(),
    ])
}

pub fn write_records_csv(records: &[RunRecord], path: &Path) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["graph_id", "algo", "status", "gcn", "lcn", "runtime_s", "seed"])?;
    for r in records {
        write_record(&mut w, r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RunRecord>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let status = match row.get(2) {
            Some("ok") => RunStatus::Ok,
            Some("timeout") => RunStatus::Timeout,
            Some("failed") => RunStatus::Failed,
            other => return Err(format!("bad status {other:?}")),
        };
        let parse_opt = |s: Option<&str>| -> Option<usize> {
            s.filter(|s| !s.is_empty()).and_then(|s| s.parse().ok())
        };
        out.push(RunRecord {
            graph_id: row.get(0).unwrap_or_default().to_string(),
            algo: row.get(1).unwrap_or_default().to_string(),
            status,
            gcn: parse_opt(row.get(3)),
            lcn: parse_opt(row.get(4)),
            runtime_s: row
                .get(5)
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse().ok()),
            seed: row.get(6).and_then(|s| s.parse().ok()).unwrap_or(0),
        });
    }
    Ok(out)
}

/// Per-algorithm five-number summaries over ok records; algorithms with
/// no ok records are omitted with a warning.
pub fn summarize(records: &[RunRecord], metric: Metric) -> BTreeMap<String, FiveNumberSummary> {
    let mut by_algo: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for r in records {
        seen.insert(r.algo.clone());
        if let Some(v) = r.metric(metric) {
            by_algo.entry(r.algo.clone()).or_default().push(v as f64);
        }
    }
    for algo in &seen {
        if !by_algo.contains_key(algo) {
            log::warn!("algorithm {algo} has no ok records; omitted from summary");
        }
    }
    by_algo
        .into_iter()
        .filter_map(|(algo, values)| five_number_summary(&values).map(|s| (algo, s)))
        .collect()
}

/// Pairwise comparison table. Cell (i, j) gives win/loss/tie percentages
/// of algorithm i against algorithm j over their common graphs; a
/// one-sided timeout is a loss for the side that did not finish, a
/// two-sided timeout is a tie.
#[derive(Debug, Clone)]
pub struct PairwiseWinTable {
    pub algos: Vec<String>,
    /// [i][j] = (win%, loss%, tie%) of algos[i] vs algos[j].
    pub cells: Vec<Vec<(f64, f64, f64)>>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchStatsError {
    #[error("no overlapping graphs between {0} and {1}")]
    EmptyOverlap(String, String),
}

pub fn pairwise_wins(
    records: &[RunRecord],
    metric: Metric,
) -> Result<PairwiseWinTable, BenchStatsError> {
    let algos: Vec<String> = {
        let mut s = BTreeSet::new();
        for r in records {
            s.insert(r.algo.clone());
        }
        s.into_iter().collect()
    };
    let by_key: BTreeMap<(String, String), &RunRecord> = records
        .iter()
        .map(|r| ((r.algo.clone(), r.graph_id.clone()), r))
        .collect();
    let graphs: BTreeSet<String> = records.iter().map(|r| r.graph_id.clone()).collect();

    let mut cells = vec![vec![(0.0, 0.0, 0.0); algos.len()]; algos.len()];
    for (i, a) in algos.iter().enumerate() {
        for (j, b) in algos.iter().enumerate() {
            if i == j {
                continue;
            }
            let (mut wins, mut losses, mut ties, mut total) = (0usize, 0usize, 0usize, 0usize);
            for gid in &graphs {
                let ra = by_key.get(&(a.clone(), gid.clone()));
                let rb = by_key.get(&(b.clone(), gid.clone()));
                let (Some(ra), Some(rb)) = (ra, rb) else { continue };
                total += 1;
                match (ra.metric(metric), rb.metric(metric)) {
                    (Some(va), Some(vb)) => {
                        if va < vb {
                            wins += 1;
                        } else if va > vb {
                            losses += 1;
                        } else {
                            ties += 1;
                        }
                    }
                    (Some(_), None) => wins += 1,  // b timed out / failed
                    (None, Some(_)) => losses += 1,
                    (None, None) => ties += 1,
                }
            }
            if total == 0 {
                return Err(BenchStatsError::EmptyOverlap(a.clone(), b.clone()));
            }
            let pct = |x: usize| 100.0 * x as f64 / total as f64;
            cells[i][j] = (pct(wins), pct(losses), pct(ties));
        }
    }
    Ok(PairwiseWinTable { algos, cells })
}

/// Wilcoxon-Holm adjusted p-values over all algorithm pairs, paired on
/// the graphs where both runs finished.
#[derive(Debug, Clone)]
pub struct WilcoxonMatrix {
    pub algos: Vec<String>,
    /// Holm-adjusted two-sided p-values; diagonal is None.
    pub adjusted: Vec<Vec<Option<f64>>>,
    /// Pairs where every difference was zero (p = 1.0 by convention).
    pub degenerate: Vec<(String, String)>,
}

pub fn wilcoxon_holm(
    records: &[RunRecord],
    metric: Metric,
) -> Result<WilcoxonMatrix, BenchStatsError> {
    let algos: Vec<String> = {
        let mut s = BTreeSet::new();
        for r in records {
            s.insert(r.algo.clone());
        }
        s.into_iter().collect()
    };
    let by_key: BTreeMap<(String, String), &RunRecord> = records
        .iter()
        .map(|r| ((r.algo.clone(), r.graph_id.clone()), r))
        .collect();
    let graphs: BTreeSet<String> = records.iter().map(|r| r.graph_id.clone()).collect();

    let mut raw = Vec::new();
    let mut pair_idx = Vec::new();
    let mut degenerate = Vec::new();
    for i in 0..algos.len() {
        for j in (i + 1)..algos.len() {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for gid in &graphs {
                let ra = by_key.get(&(algos[i].clone(), gid.clone()));
                let rb = by_key.get(&(algos[j].clone(), gid.clone()));
                if let (Some(ra), Some(rb)) = (ra, rb) {
                    if let (Some(va), Some(vb)) = (ra.metric(metric), rb.metric(metric)) {
                        xs.push(va as f64);
                        ys.push(vb as f64);
                    }
                }
            }
            if xs.is_empty() {
                return Err(BenchStatsError::EmptyOverlap(
                    algos[i].clone(),
                    algos[j].clone(),
                ));
            }
            let res = wilcoxon_signed_rank(&xs, &ys);
            if res.method == crate::stats::WilcoxonMethod::Degenerate {
                degenerate.push((algos[i].clone(), algos[j].clone()));
            }
            raw.push(res.p_value);
            pair_idx.push((i, j));
        }
    }
    let adjusted_flat = holm_adjust(&raw);
    let mut adjusted = vec![vec![None; algos.len()]; algos.len()];
    for ((i, j), p) in pair_idx.into_iter().zip(adjusted_flat) {
        adjusted[i][j] = Some(p);
        adjusted[j][i] = Some(p);
    }
    Ok(WilcoxonMatrix {
        algos,
        adjusted,
        degenerate,
    })
}
