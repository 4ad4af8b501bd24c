// Copyright 2026 The omega-search Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use omega_bench::compare::Comparison;
use omega_bench::config::BenchConfig;
use omega_bench::report::RunReport;
use omega_bench::runner::{replay, Artifacts, Method, RunConfig};
use omega_bench::trace::{synth_trace, KMix, QueryTrace};
use omega_bench::REPORT_FILE;
use omega_core::graph::{load_index, save_index};
use omega_core::preprocess::run_pipeline_on;
use omega_core::vectorstore::{
    brute_force_ground_truth, load_dataset, load_ground_truth, load_vectors, save_ground_truth,
    write_fvecs, Distribution, SynthSpec, VecFormat,
};
use omega_core::{Dataset32, GraphIndex, GroundTruth32, Metric};

#[derive(Parser)]
#[command(name = "omega-bench", version, about = "Build, train and replay query traces against an omega index")]
struct Cli {
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic base set (and optionally queries) as fvecs.
    SynthData(SynthDataArgs),
    /// Build and save a graph index.
    Build(BuildArgs),
    /// Exact top-k for a query file.
    GroundTruth(GroundTruthArgs),
    /// Train the stop model and profile the forecast table.
    Preprocess(PreprocessArgs),
    /// Replay a trace with one method and write per-query and summary CSV.
    Run(RunArgs),
    /// Pair two per-query reports.
    Compare(CompareArgs),
    /// Generate a `query_id,K` trace from K weights.
    SynthTrace(SynthTraceArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Base vectors (.fvecs, .bvecs, .ivecs or raw .f32).
    #[arg(long)]
    data: PathBuf,
    /// Overrides the format implied by the extension.
    #[arg(long)]
    format: Option<VecFormat>,
    #[arg(long, default_value_t = Metric::SquaredEuclidean)]
    metric: Metric,
}

#[derive(Args)]
struct SynthDataArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "gaussian-clusters")]
    distribution: Distribution,
    #[arg(long, default_value_t = 0.1)]
    cluster_std: f64,
    #[arg(long)]
    out: PathBuf,
    /// Number of queries to draw from the same distribution.
    #[arg(long, default_value_t = 0)]
    queries: usize,
    #[arg(long)]
    queries_out: Option<PathBuf>,
    /// Independent query streams give disjoint query sets.
    #[arg(long, default_value_t = 0)]
    query_stream: u64,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    ef_construction: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GroundTruthArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Writes `<out>.ivecs` (ids) and `<out>.dists.fvecs`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    index: PathBuf,
    /// Training queries.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    num_training_queries: Option<usize>,
    #[arg(long)]
    checkpoint_interval: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Receives the model, table, decay fits and report.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Ground truth prefix from `ground-truth`; computed on the fly if absent.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    trace: PathBuf,
    /// fixed, omega-basic or omega-opt.
    #[arg(long)]
    method: String,
    /// Directory written by `preprocess`.
    #[arg(long)]
    artifacts: Option<PathBuf>,
    #[arg(long)]
    r_t: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    w: Option<usize>,
    #[arg(long)]
    base_interval: Option<usize>,
    #[arg(long)]
    adaptive: Option<bool>,
    #[arg(long)]
    forecast: Option<bool>,
    #[arg(long)]
    step_cap: Option<usize>,
    #[arg(long)]
    fixed_c: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Per-query CSV.
    #[arg(long)]
    out: PathBuf,
    /// Aggregate CSV; defaults to `<out>.summary.csv`.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthTraceArgs {
    #[arg(long)]
    num_queries: usize,
    #[arg(long)]
    count: usize,
    /// `K:weight` pairs, e.g. `1:0.25,10:0.25,50:0.25,100:0.25`.
    #[arg(long)]
    weights: KMix,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = BenchConfig::load_or_default(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::SynthData(a) => synth_data(a),
        Cmd::Build(a) => build(a, &mut cfg),
        Cmd::GroundTruth(a) => ground_truth(a),
        Cmd::Preprocess(a) => preprocess(a, &mut cfg),
        Cmd::Run(a) => run_trace(a, &mut cfg),
        Cmd::Compare(a) => compare(a),
        Cmd::SynthTrace(a) => {
            let t = synth_trace(a.num_queries, a.count, &a.weights, a.seed)?;
            t.save(&a.out)?;
            info!("wrote {} entries to {}", t.len(), a.out.display());
            Ok(())
        }
    }
}

fn load_data(a: &DataArgs) -> Result<Arc<Dataset32>> {
    let format = match a.format {
        Some(f) => f,
        None => VecFormat::from_path(&a.data)?,
    };
    let ds = load_dataset::<f32>(&a.data, format)
        .with_context(|| format!("loading {}", a.data.display()))?
        .with_metric(a.metric);
    ds.validate()?;
    Ok(Arc::new(ds))
}

fn load_queries(path: &Path) -> Result<Vec<Vec<f32>>> {
    let format = VecFormat::from_path(path)?;
    load_vectors(path, format).with_context(|| format!("loading {}", path.display()))
}

fn gt_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let s = prefix.as_os_str().to_string_lossy();
    (PathBuf::from(format!("{s}.ivecs")), PathBuf::from(format!("{s}.dists.fvecs")))
}

fn synth_data(a: SynthDataArgs) -> Result<()> {
    let mut spec = SynthSpec::new(a.n, a.dim, a.seed, a.distribution);
    spec.cluster_std = a.cluster_std;
    let ds = spec.generate::<f32>()?;
    let rows: Vec<&[f32]> = ds.iter().collect();
    write_fvecs(&a.out, &rows)?;
    info!("wrote {} x {} to {}", a.n, a.dim, a.out.display());
    if a.queries > 0 {
        let Some(qpath) = a.queries_out else {
            bail!("--queries needs --queries-out");
        };
        let qs = spec.queries::<f32>(a.queries, a.query_stream)?;
        write_fvecs(&qpath, &qs)?;
        info!("wrote {} queries to {}", qs.len(), qpath.display());
    }
    Ok(())
}

fn build(a: BuildArgs, cfg: &mut BenchConfig) -> Result<()> {
    if let Some(m) = a.m {
        cfg.graph.m = m;
    }
    if let Some(ef) = a.ef_construction {
        cfg.graph.ef_construction = ef;
    }
    if let Some(s) = a.seed {
        cfg.graph.seed = s;
    }
    let ds = load_data(&a.data)?;
    let t = Instant::now();
    let index = GraphIndex::build(ds, cfg.graph.to_core())?;
    let secs = t.elapsed().as_secs_f64();
    save_index(&index, &a.out)?;
    let edges: usize = index.adjacency().iter().map(|l| l.iter().map(Vec::len).sum::<usize>()).sum();
    println!(
        "built {} nodes, {} layers, {} edges in {secs:.2}s -> {}",
        index.len(),
        index.max_level() + 1,
        edges,
        a.out.display()
    );
    Ok(())
}

fn ground_truth(a: GroundTruthArgs) -> Result<()> {
    let ds = load_data(&a.data)?;
    let qs = load_queries(&a.queries)?;
    let t = Instant::now();
    let gt = brute_force_ground_truth(&ds, &qs, a.k)?;
    let (ids, dists) = gt_paths(&a.out);
    save_ground_truth(&gt, &ids, &dists)?;
    println!(
        "ground truth for {} queries at depth {} in {:.2}s -> {}",
        qs.len(),
        a.k,
        t.elapsed().as_secs_f64(),
        ids.display()
    );
    Ok(())
}

fn preprocess(a: PreprocessArgs, cfg: &mut BenchConfig) -> Result<()> {
    let p = &mut cfg.pipeline;
    if let Some(v) = a.num_training_queries {
        p.num_training_queries = v;
    }
    if let Some(v) = a.checkpoint_interval {
        p.checkpoint_interval = v;
    }
    if let Some(v) = a.window {
        p.window = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    let ds = load_data(&a.data)?;
    let qs = load_queries(&a.queries)?;
    let index = load_index(&a.index, ds)?;
    let out = run_pipeline_on(index, &qs, &cfg.pipeline_config())?;
    fs::create_dir_all(&a.out_dir)?;
    Artifacts {
        model: out.model,
        forecaster: out.forecaster,
    }
    .save(&a.out_dir)?;
    let mut report = out.report.to_csv();
    for (k, v) in cfg.flat_pairs() {
        report.push_str(&format!("{k},{v}\n"));
    }
    fs::write(a.out_dir.join(REPORT_FILE), report)?;
    println!(
        "{} records, stopping round {}, preprocessing {:.2}s -> {}",
        out.report.records,
        out.report.train.best_round,
        out.report.total_time.as_secs_f64(),
        a.out_dir.display()
    );
    Ok(())
}

fn run_trace(a: RunArgs, cfg: &mut BenchConfig) -> Result<()> {
    let s = &mut cfg.search;
    macro_rules! apply {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { s.$f = v; } )* };
    }
    apply!(r_t, alpha, w, base_interval, adaptive, forecast, fixed_c, workers);
    if a.step_cap.is_some() {
        s.step_cap = a.step_cap;
    }
    let method: Method = a.method.parse()?;
    let artifacts = match (&a.artifacts, method) {
        (Some(dir), _) => Some(Artifacts::load(dir)?),
        (None, Method::Fixed) => None,
        (None, m) => bail!("method {m} needs --artifacts"),
    };
    let ds = load_data(&a.data)?;
    let qs = load_queries(&a.queries)?;
    let trace = QueryTrace::load(&a.trace)?;
    trace.check_ids(qs.len())?;
    let index = load_index(&a.index, ds.clone())?;
    let gt: GroundTruth32 = match &a.gt {
        Some(prefix) => {
            let (ids, dists) = gt_paths(prefix);
            load_ground_truth(ids, dists)?
        }
        None => {
            warn!("no --gt given, computing exact neighbors");
            brute_force_ground_truth(&ds, &qs, trace.max_k().clamp(1, ds.len()))?
        }
    };
    let rc = RunConfig {
        method,
        params: cfg.search.params(),
        fixed_c: cfg.search.fixed_c,
        workers: cfg.search.workers,
    };
    let mut report: RunReport = replay(&index, &qs, &gt, &trace, artifacts.as_ref(), &rc)?;
    report.meta.extend(cfg.flat_pairs());
    let summary = a
        .summary
        .unwrap_or_else(|| PathBuf::from(format!("{}.summary.csv", a.out.display())));
    report.save(&a.out, &summary)?;
    let s = report.summary();
    println!(
        "{method}: {} queries, mean recall {:.4}, {:.1}% at target, mean cmps {:.1}, mean model calls {:.2}",
        s.count,
        s.recall.mean,
        100.0 * s.frac_at_target,
        s.cmps.mean,
        s.model_invocations.mean
    );
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let [first, second] = a.reports.as_slice() else {
        bail!("compare takes exactly two reports");
    };
    let c = Comparison::new(&RunReport::load_rows(first)?, &RunReport::load_rows(second)?)?;
    let text = c.to_csv();
    match a.out {
        Some(p) => fs::write(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!(
        "recall delta {:+.4}, cmps ratio {:.3}, model call reduction {:.1}%",
        c.mean_recall_delta(),
        c.cmps_ratio(),
        c.invocation_reduction_pct()
    );
    Ok(())
}
