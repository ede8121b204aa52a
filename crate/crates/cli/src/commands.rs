use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;

use crossmin::agent::{
    self, load_checkpoint, save_checkpoint, CheckpointHeader, PpoConfig, TrainGraph, TrainSets,
};
use crossmin::bench::{
    pairwise_wins, read_records_csv, run_suite, summarize, wilcoxon_holm, BenchAlgorithm,
    FrAlgorithm, KkAlgorithm, Metric, RlAlgorithm, SampledVmAlgorithm, SuiteConfig,
};
use crossmin::embedding::structural_embedding;
use crossmin::env::{CrossingEnv, EnvConfig, Objective};
use crossmin::geometry::{CrossingIndex, Drawing};
use crossmin::graph::{
    generate_chorded_cycle, generate_extended_ba, load_graph_auto, preprocess, BaParams,
    Graph, GraphClass, Manifest, ManifestEntry, PlanarFilterBudget, Split,
};
use crossmin::layout::{layout_fruchterman_reingold, layout_kamada_kawai};
use crossmin::rng::{derive_seed, derive_seed_indexed, substream};
use crossmin::svg::{render_svg, SvgOptions};

/// Outputs with relative paths land under `CROSSMIN_OUT_ROOT` when set.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("CROSSMIN_OUT_ROOT") {
        Some(root) => PathBuf::from(root).join(path),
        None => path.to_path_buf(),
    }
}

/// Every run logs its full resolved configuration next to its primary
/// output.
fn write_config_sidecar<T: Serialize>(primary_out: &Path, config: &T) -> Result<()> {
    let mut name = primary_out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    name.push_str(".config.json");
    let path = primary_out.with_file_name(name);
    let text = serde_json::to_string_pretty(config)?;
    std::fs::write(&path, text)
        .with_context(|| format!("writing config sidecar {}", path.display()))?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn resolve_manifest_path(manifest_path: &Path, entry: &Path) -> PathBuf {
    if entry.is_absolute() {
        entry.to_path_buf()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(entry)
    }
}

fn load_manifest_graphs(
    manifest_path: &Path,
    split: Split,
) -> Result<Vec<(ManifestEntry, Arc<Graph>)>> {
    let manifest = Manifest::load(manifest_path)
        .with_context(|| format!("loading manifest {}", manifest_path.display()))?;
    let mut out = Vec::new();
    for entry in manifest.entries_for(split) {
        let path = resolve_manifest_path(manifest_path, &entry.path);
        let graph = load_graph_auto(&path)
            .with_context(|| format!("loading graph {}", path.display()))?;
        out.push((entry.clone(), Arc::new(graph)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------

#[derive(Args, Serialize)]
pub struct PrepareArgs {
    /// Manifest output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for generated graph files and embedding caches
    /// (default: `<out dir>/dataset`).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Directories of existing graph files to ingest as Rome-class
    /// instances (edge lists or GraphML).
    #[arg(long)]
    pub source_dir: Vec<PathBuf>,
    /// Number of sparse Rome-class graphs to generate.
    #[arg(long, default_value_t = 0)]
    pub gen_rome: usize,
    /// Number of extended Barabasi-Albert graphs to generate.
    #[arg(long, default_value_t = 0)]
    pub gen_ba: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planarity-filter budget: candidate positions per vertex.
    #[arg(long, default_value_t = 40)]
    pub filter_samples: usize,
    /// Planarity-filter budget: local-search sweeps.
    #[arg(long, default_value_t = 3)]
    pub filter_sweeps: usize,
}

pub fn prepare(args: PrepareArgs) -> Result<()> {
    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    let data_dir = args
        .data_dir
        .clone()
        .map(|d| resolve_out(&d))
        .unwrap_or_else(|| {
            out.parent().unwrap_or_else(|| Path::new(".")).join("dataset")
        });
    let graphs_dir = data_dir.join("graphs");
    let embed_dir = data_dir.join("embeddings");
    std::fs::create_dir_all(&graphs_dir)?;
    std::fs::create_dir_all(&embed_dir)?;

    let budget = PlanarFilterBudget {
        samples_per_vertex: args.filter_samples,
        sweeps: args.filter_sweeps,
    };
    let mut kept: Vec<(String, GraphClass, Graph)> = Vec::new();
    let mut rejected = 0usize;

    // ingest source directories
    for dir in &args.source_dir {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for path in files {
            let id = format!(
                "rome_{}",
                path.file_stem().unwrap_or_default().to_string_lossy()
            );
            let graph = load_graph_auto(&path)
                .with_context(|| format!("loading {}", path.display()))?;
            match preprocess(&graph, budget, derive_seed(args.seed, &id)) {
                Ok(core) => kept.push((id, GraphClass::Rome, core)),
                Err(reason) => {
                    log::info!("{id}: rejected ({reason})");
                    rejected += 1;
                }
            }
        }
    }

    // generated Rome-class stand-ins: chorded cycles inside the Rome
    // envelope (n in [10,100], m in [9,158], min degree 2)
    let mut sampling = substream(args.seed, "sampling");
    use rand::Rng;
    let mut produced = 0usize;
    let mut attempts = 0usize;
    while produced < args.gen_rome && attempts < 40 * args.gen_rome + 100 {
        attempts += 1;
        let n = sampling.random_range(10..=60usize);
        let max_chords = (158 - n).min(n);
        let chords = sampling.random_range(3..=max_chords.max(4).min(n));
        let seed = derive_seed_indexed(args.seed, "gen-rome", attempts as u64);
        let g = generate_chorded_cycle(n, chords, seed);
        match preprocess(&g, budget, seed) {
            Ok(core) if core.n() >= 10 && core.m() >= 9 && core.n() <= 100 && core.m() <= 158 => {
                kept.push((format!("rome_gen{produced:04}"), GraphClass::Rome, core));
                produced += 1;
            }
            _ => rejected += 1,
        }
    }
    if produced < args.gen_rome {
        bail!("only generated {produced}/{} Rome-class graphs", args.gen_rome);
    }

    let mut produced_ba = 0usize;
    attempts = 0;
    while produced_ba < args.gen_ba && attempts < 40 * args.gen_ba + 100 {
        attempts += 1;
        let params = BaParams {
            n: sampling.random_range(50..=150usize),
            m_attach: sampling.random_range(1..=3usize),
            p: sampling.random_range(0.0..=0.1),
            q: sampling.random_range(0.0..=0.2),
            seed: derive_seed_indexed(args.seed, "gen-ba", attempts as u64),
        };
        let g = generate_extended_ba(&params);
        match preprocess(&g, budget, params.seed) {
            Ok(core) => {
                kept.push((format!("ba_gen{produced_ba:04}"), GraphClass::Ba, core));
                produced_ba += 1;
            }
            Err(reason) => {
                log::debug!("ba attempt {attempts}: rejected ({reason})");
                rejected += 1;
            }
        }
    }
    if produced_ba < args.gen_ba {
        bail!("only generated {produced_ba}/{} BA graphs", args.gen_ba);
    }
    if kept.is_empty() {
        bail!("no graphs survived preprocessing");
    }

    // write graph files + embedding caches, then split per class
    let mut entries = Vec::new();
    for (id, class, graph) in &kept {
        let path = graphs_dir.join(format!("{id}.txt"));
        let mut text = String::new();
        for &(u, v) in graph.edges() {
            text.push_str(&format!("{u} {v}\n"));
        }
        std::fs::write(&path, text)?;
        structural_embedding(graph).save_cache(&embed_dir.join(format!("{id}.json")))?;
        entries.push((id.clone(), *class, path));
    }

    let manifest_dir = out.parent().unwrap_or_else(|| Path::new("."));
    let mut manifest_entries = Vec::new();
    for class in [GraphClass::Rome, GraphClass::Ba] {
        let class_entries: Vec<&(String, GraphClass, PathBuf)> =
            entries.iter().filter(|(_, c, _)| *c == class).collect();
        if class_entries.is_empty() {
            continue;
        }
        let split = crossmin::graph::split_dataset(
            class_entries.len(),
            class,
            derive_seed(args.seed, &format!("split-{class}")),
        );
        for (rank, &idx) in split.train.iter().enumerate() {
            let _ = rank;
            let (id, c, path) = class_entries[idx];
            let rel = path.strip_prefix(manifest_dir).unwrap_or(path).to_path_buf();
            manifest_entries.push(ManifestEntry {
                id: id.clone(),
                path: rel,
                split: Split::Train,
                class: *c,
            });
        }
        for &idx in &split.test {
            let (id, c, path) = class_entries[idx];
            let rel = path.strip_prefix(manifest_dir).unwrap_or(path).to_path_buf();
            manifest_entries.push(ManifestEntry {
                id: id.clone(),
                path: rel,
                split: Split::Test,
                class: *c,
            });
        }
    }
    let manifest = Manifest {
        seed: args.seed,
        entries: manifest_entries,
    };
    manifest.save(&out)?;
    write_config_sidecar(&out, &args)?;
    let train_n = manifest.entries_for(Split::Train).count();
    let test_n = manifest.entries_for(Split::Test).count();
    println!(
        "prepared {} graphs ({} train / {} test), rejected {}",
        manifest.entries.len(),
        train_n,
        test_n,
        rejected
    );
    Ok(())
}

// ---------------------------------------------------------------------
// layout
// ---------------------------------------------------------------------

#[derive(Args, Serialize)]
pub struct LayoutArgs {
    /// kk or fr.
    #[arg(long)]
    pub algo: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub fr_iterations: usize,
}

pub fn layout(args: LayoutArgs) -> Result<()> {
    let graph = Arc::new(load_graph_auto(&args.input)?);
    if !graph.is_connected() {
        bail!("layout requires a connected graph");
    }
    let seed = derive_seed(args.seed, "layout");
    let drawing = match args.algo.as_str() {
        "kk" => layout_kamada_kawai(&graph, seed),
        "fr" => layout_fruchterman_reingold(&graph, seed, args.fr_iterations),
        other => bail!("unknown layout algorithm {other:?}, expected kk|fr"),
    };
    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    std::fs::write(&out, drawing.to_json())?;
    write_config_sidecar(&out, &args)?;
    let idx = CrossingIndex::build(&drawing);
    println!(
        "{} layout: gcn={} lcn={} -> {}",
        args.algo,
        idx.total(),
        idx.local_crossing_number(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------
// train
// ---------------------------------------------------------------------

#[derive(Args, Serialize)]
pub struct TrainArgs {
    /// gc or lc.
    #[arg(long)]
    pub objective: String,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Training-log CSV (default: `<out>.log.csv`).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// JSON file with a full PPO config; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub envs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub rollout_len: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Comma-separated hidden layer widths, e.g. 64,64.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Episode step cap inside each training environment.
    #[arg(long)]
    pub step_cap: Option<usize>,
    /// Non-improving steps before an episode resets to its best drawing.
    #[arg(long)]
    pub reset_patience: Option<usize>,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let objective: Objective = args.objective.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<PpoConfig>(&text)?
        }
        None => PpoConfig::default(),
    };
    if let Some(v) = args.steps {
        cfg.total_steps = v;
    }
    if let Some(v) = args.envs {
        cfg.num_envs = v;
    }
    if let Some(v) = args.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.batch {
        cfg.batch_size = v;
    }
    if let Some(v) = args.rollout_len {
        cfg.rollout_len = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(h) = &args.hidden {
        cfg.hidden = h
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .context("parsing --hidden")?;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.step_cap {
        cfg.episode_cap = v;
    }
    if let Some(v) = args.reset_patience {
        cfg.reset_patience = v;
    }
    cfg.validate().map_err(|e| anyhow::anyhow!(e))?;

    let graphs = load_manifest_graphs(&args.manifest, Split::Train)?;
    if graphs.is_empty() {
        bail!("manifest has no train entries");
    }
    log::info!("preparing {} training graphs (layout + embedding)", graphs.len());
    let mut sets = TrainSets {
        rome: Vec::new(),
        ba: Vec::new(),
    };
    for (i, (entry, graph)) in graphs.into_iter().enumerate() {
        let tg = TrainGraph::prepare(
            entry.id.clone(),
            entry.class,
            graph,
            derive_seed_indexed(cfg.seed, "layout", i as u64),
        );
        match entry.class {
            GraphClass::Rome => sets.rome.push(tg),
            GraphClass::Ba => sets.ba.push(tg),
        }
    }

    log::info!(
        "training objective={objective} steps={} envs={} lr={} batch={}",
        cfg.total_steps,
        cfg.num_envs,
        cfg.learning_rate,
        cfg.batch_size
    );
    let started = Instant::now();
    let outcome = agent::train(&cfg, objective, &sets)?;
    log::info!(
        "trained {} steps in {:.1}s ({} episodes)",
        cfg.total_steps,
        started.elapsed().as_secs_f64(),
        outcome.episodes_completed
    );

    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    let header = CheckpointHeader {
        input_dim: crossmin::env::OBS_LEN,
        hidden: cfg.hidden.clone(),
        num_actions: agent::NUM_ACTIONS,
        objective: objective.to_string(),
        config_hash: cfg.config_hash(objective),
        trained_steps: cfg.total_steps,
    };
    save_checkpoint(&outcome.net, &header, &out)?;
    let log_path = args
        .log
        .clone()
        .map(|p| resolve_out(&p))
        .unwrap_or_else(|| out.with_extension("log.csv"));
    agent::write_training_log(&outcome.log, &log_path)?;
    write_config_sidecar(&out, &serde_json::json!({"args": &args, "resolved": &cfg}))?;
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        println!(
            "mean episode reward: {:.3} (first update) -> {:.3} (last update)",
            first.mean_reward, last.mean_reward
        );
    }
    println!("checkpoint -> {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------

#[derive(Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub objective: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Best drawing output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics output (default: `<out>.metrics.json`).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long)]
    pub step_cap: Option<usize>,
    #[arg(long)]
    pub reset_patience: Option<usize>,
}

pub fn optimize(args: OptimizeArgs) -> Result<()> {
    let objective: Objective = args.objective.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let (net, header) = load_checkpoint(&args.model)?;
    if header.objective != objective.to_string() {
        bail!(
            "checkpoint was trained for objective {} but {} was requested",
            header.objective,
            objective
        );
    }
    let expected_hash = PpoConfig {
        hidden: header.hidden.clone(),
        ..PpoConfig::default()
    }
    .config_hash(objective);
    if header.config_hash != expected_hash {
        bail!(
            "checkpoint config hash mismatch: header {:#x}, expected {:#x}",
            header.config_hash,
            expected_hash
        );
    }

    let graph = Arc::new(load_graph_auto(&args.graph)?);
    if !graph.is_connected() {
        bail!("optimize requires a connected graph");
    }
    let started = Instant::now();
    let init = layout_kamada_kawai(&graph, derive_seed(args.seed, "layout"));
    let init_idx = CrossingIndex::build(&init);
    let (init_gcn, init_lcn) = (init_idx.total(), init_idx.local_crossing_number());
    let mut env_cfg = EnvConfig::new(objective);
    if let Some(cap) = args.step_cap {
        env_cfg.step_cap = cap;
    }
    if let Some(p) = args.reset_patience {
        env_cfg.reset_patience = p;
    }
    let mut env = CrossingEnv::new(init, env_cfg, derive_seed(args.seed, "env"));
    let episode = env.run_episode(&net);
    let best = env.best_drawing();
    let best_idx = CrossingIndex::build(&best);
    let runtime_s = started.elapsed().as_secs_f64();

    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    std::fs::write(&out, best.to_json())?;
    let metrics = serde_json::json!({
        "gcn": best_idx.total(),
        "lcn": best_idx.local_crossing_number(),
        "initial_gcn": init_gcn,
        "initial_lcn": init_lcn,
        "steps": episode.steps,
        "runtime_s": runtime_s,
    });
    let metrics_path = args
        .metrics
        .clone()
        .map(|p| resolve_out(&p))
        .unwrap_or_else(|| out.with_extension("metrics.json"));
    std::fs::write(&metrics_path, serde_json::to_string_pretty(&metrics)?)?;
    write_config_sidecar(&out, &args)?;
    println!(
        "optimize {}: gcn {} -> {}, lcn {} -> {}, {} steps",
        objective,
        init_gcn,
        best_idx.total(),
        init_lcn,
        best_idx.local_crossing_number(),
        episode.steps
    );
    Ok(())
}

// ---------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------

#[derive(Subcommand)]
pub enum BenchCommand {
    /// Run algorithms over the test split and record results.
    Run(BenchRunArgs),
    /// Summaries, pairwise wins, and Wilcoxon-Holm p-values.
    Stats(BenchStatsArgs),
    /// Render stored drawings for the first N graphs as SVG.
    Render(BenchRenderArgs),
}

#[derive(Args, Serialize)]
pub struct BenchRunArgs {
    /// Comma-separated: kk, fr, svm, rl-gc, rl-lc.
    #[arg(long, default_value = "kk,fr,svm")]
    pub algos: String,
    /// Dataset manifest.
    #[arg(long)]
    pub set: PathBuf,
    /// Which split to benchmark.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Per-run time limit in seconds.
    #[arg(long, default_value_t = 900)]
    pub timeout: u64,
    /// Results CSV output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub model_gc: Option<PathBuf>,
    #[arg(long)]
    pub model_lc: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to persist drawings (default: `<out stem>_drawings/`).
    #[arg(long)]
    pub drawings_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub svm_samples: usize,
    #[arg(long, default_value_t = 4)]
    pub svm_sweeps: usize,
    #[arg(long, default_value_t = 50)]
    pub fr_iterations: usize,
}

fn load_rl_algo(model: &Option<PathBuf>, objective: Objective) -> Result<Arc<dyn BenchAlgorithm>> {
    let path = model.as_ref().with_context(|| {
        format!("--model-{objective} is required when rl-{objective} is benchmarked")
    })?;
    let (net, header) = load_checkpoint(path)?;
    if header.objective != objective.to_string() {
        bail!(
            "model {} was trained for objective {}, not {}",
            path.display(),
            header.objective,
            objective
        );
    }
    Ok(Arc::new(RlAlgorithm::new(objective, Arc::new(net))))
}

pub fn bench_run(args: BenchRunArgs) -> Result<()> {
    let split = match args.split.as_str() {
        "train" => Split::Train,
        "test" => Split::Test,
        other => bail!("unknown split {other:?}"),
    };
    let mut algorithms: Vec<Arc<dyn BenchAlgorithm>> = Vec::new();
    for name in args.algos.split(',').map(str::trim) {
        let algo: Arc<dyn BenchAlgorithm> = match name {
            "kk" => Arc::new(KkAlgorithm),
            "fr" => Arc::new(FrAlgorithm {
                iterations: args.fr_iterations,
            }),
            "svm" => Arc::new(SampledVmAlgorithm {
                samples_per_vertex: args.svm_samples,
                sweeps: args.svm_sweeps,
            }),
            "rl-gc" => load_rl_algo(&args.model_gc, Objective::Gc)?,
            "rl-lc" => load_rl_algo(&args.model_lc, Objective::Lc)?,
            other => bail!("unknown algorithm {other:?}"),
        };
        algorithms.push(algo);
    }

    let graphs = load_manifest_graphs(&args.set, split)?;
    if graphs.is_empty() {
        bail!("no graphs in the requested split");
    }
    let set: Vec<(String, Arc<Graph>)> = graphs
        .into_iter()
        .map(|(entry, graph)| (entry.id, graph))
        .collect();

    let out = resolve_out(&args.out);
    ensure_parent(&out)?;
    let drawings_dir = args
        .drawings_dir
        .clone()
        .map(|p| resolve_out(&p))
        .unwrap_or_else(|| {
            let stem = out.file_stem().unwrap_or_default().to_string_lossy();
            out.with_file_name(format!("{stem}_drawings"))
        });
    let cfg = SuiteConfig {
        time_limit: Duration::from_secs(args.timeout),
        seed: derive_seed(args.seed, "bench"),
        results_csv: Some(out.clone()),
        drawings_dir: Some(drawings_dir),
    };
    let records = run_suite(&algorithms, &set, &cfg);
    write_config_sidecar(&out, &args)?;
    let ok = records.iter().filter(|r| r.status == crossmin::bench::RunStatus::Ok).count();
    println!(
        "bench: {} runs ({} ok, {} other) -> {}",
        records.len(),
        ok,
        records.len() - ok,
        out.display()
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct BenchStatsArgs {
    /// gcn or lcn.
    #[arg(long)]
    pub metric: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub summary: bool,
    #[arg(long)]
    pub pairwise: bool,
    #[arg(long)]
    pub wilcoxon: bool,
}

pub fn bench_stats(args: BenchStatsArgs) -> Result<()> {
    let metric: Metric = args.metric.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let records = read_records_csv(&args.input).map_err(|e| anyhow::anyhow!(e))?;
    let all = !(args.summary || args.pairwise || args.wilcoxon);

    if args.summary || all {
        println!("# summary ({})", args.metric);
        println!("{:<10} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "algo", "n", "min", "q1", "median", "mean", "q3", "max");
        for (algo, s) in summarize(&records, metric) {
            println!(
                "{algo:<10} {:>6} {:>8.1} {:>8.1} {:>8.1} {:>8.2} {:>8.1} {:>8.1}",
                s.count, s.min, s.q1, s.median, s.mean, s.q3, s.max
            );
        }
    }
    if args.pairwise || all {
        let table = pairwise_wins(&records, metric).map_err(|e| anyhow::anyhow!(e.to_string()))?;
        println!("\n# pairwise win% ({}), row vs column", args.metric);
        print!("{:<10}", "");
        for a in &table.algos {
            print!(" {a:>16}");
        }
        println!();
        for (i, a) in table.algos.iter().enumerate() {
            print!("{a:<10}");
            for j in 0..table.algos.len() {
                if i == j {
                    print!(" {:>16}", "-");
                } else {
                    let (w, l, t) = table.cells[i][j];
                    print!(" {:>4.0}/{:>4.0}/{:>4.0}w/l/t", w, l, t);
                }
            }
            println!();
        }
    }
    if args.wilcoxon || all {
        let m = wilcoxon_holm(&records, metric).map_err(|e| anyhow::anyhow!(e.to_string()))?;
        println!("\n# Wilcoxon-Holm adjusted p-values ({})", args.metric);
        print!("{:<10}", "");
        for a in &m.algos {
            print!(" {a:>10}");
        }
        println!();
        for (i, a) in m.algos.iter().enumerate() {
            print!("{a:<10}");
            for j in 0..m.algos.len() {
                match m.adjusted[i][j] {
                    Some(p) => print!(" {p:>10.4}"),
                    None => print!(" {:>10}", "-"),
                }
            }
            println!();
        }
        for (a, b) in &m.degenerate {
            println!("note: all paired differences zero for ({a}, {b}); p = 1.0");
        }
    }
    Ok(())
}

#[derive(Args, Serialize)]
pub struct BenchRenderArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Manifest used by the bench run (for graph structure).
    #[arg(long)]
    pub set: PathBuf,
    /// Where bench run stored the drawing JSON files.
    #[arg(long)]
    pub drawings_dir: PathBuf,
    /// Render the first N distinct graphs.
    #[arg(long, default_value_t = 5)]
    pub graphs: usize,
    /// Output directory for SVG files.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn bench_render(args: BenchRenderArgs) -> Result<()> {
    let records = read_records_csv(&args.input).map_err(|e| anyhow::anyhow!(e))?;
    let manifest = Manifest::load(&args.set)?;
    let out = resolve_out(&args.out);
    std::fs::create_dir_all(&out)?;

    let mut chosen: Vec<String> = Vec::new();
    for r in &records {
        if !chosen.contains(&r.graph_id) {
            chosen.push(r.graph_id.clone());
            if chosen.len() == args.graphs {
                break;
            }
        }
    }
    let mut rendered = 0usize;
    for r in &records {
        if r.status != crossmin::bench::RunStatus::Ok || !chosen.contains(&r.graph_id) {
            continue;
        }
        let entry = manifest
            .entries
            .iter()
            .find(|e| e.id == r.graph_id)
            .with_context(|| format!("graph {} not in manifest", r.graph_id))?;
        let gpath = resolve_manifest_path(&args.set, &entry.path);
        let graph = Arc::new(load_graph_auto(&gpath)?);
        let dpath = args
            .drawings_dir
            .join(format!("{}__{}.json", r.graph_id, r.algo));
        let text = std::fs::read_to_string(&dpath)
            .with_context(|| format!("reading drawing {}", dpath.display()))?;
        let drawing = Drawing::from_json(graph, &text)?;
        let idx = CrossingIndex::build(&drawing);
        let caption = format!(
            "{} on {}: GCN={} LCN={} runtime={:.3}s",
            r.algo,
            r.graph_id,
            idx.total(),
            idx.local_crossing_number(),
            r.runtime_s.unwrap_or(0.0)
        );
        let svg = render_svg(
            &drawing,
            &idx,
            &SvgOptions {
                caption: Some(caption),
                ..SvgOptions::default()
            },
        );
        std::fs::write(out.join(format!("{}__{}.svg", r.graph_id, r.algo)), svg)?;
        rendered += 1;
    }
    println!("rendered {rendered} drawings -> {}", out.display());
    Ok(())
}

pub fn bench(cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Run(args) => bench_run(args),
        BenchCommand::Stats(args) => bench_stats(args),
        BenchCommand::Render(args) => bench_render(args),
    }
}
