//! `cct`: build, update and query Cluster Center Tree indexes from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use cct_core::datagen::{self, SyntheticConfig};
use cct_core::{
    query, BuildOptions, BuildVariant, CctIndex, Counters, ErrorModel, InsertVariant, QueryKind, QuerySpec, Trajectory,
    TrajectorySet,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(name = "cct", version, about = "Cluster Center Trees under the continuous Fréchet distance")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a trajectory CSV.
    Build(BuildArgs),
    /// Insert trajectories into an existing index.
    Insert(InsertArgs),
    /// Run queries against an index and write a per-query report.
    Query(QueryArgs),
    /// Generate a synthetic trajectory set, and optionally query trajectories.
    Gen(GenArgs),
    /// Print tree quality metrics and export the dendrogram.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildKind {
    Exact,
    Relaxed,
    Approx,
    /// Exact inserts in id order.
    Inserts,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "relaxed")]
    variant: BuildKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Simplify each trajectory at this fraction of its reach before building.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.02")]
    simplify_frac: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InsertKind {
    Exact,
    Approx,
    Standard,
}

#[derive(Args)]
struct InsertArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    variant: InsertKind,
    /// Where to write the updated index; defaults to overwriting `--index`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Kind {
    Knn,
    Nn,
    Rnn,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Per-query range thresholds from a `cct gen` manifest.
    #[arg(long, conflicts_with = "tau")]
    tau_manifest: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["erel", "implicit"])]
    eadd: Option<f64>,
    #[arg(long, conflicts_with = "implicit")]
    erel: Option<f64>,
    #[arg(long)]
    implicit: bool,
    #[arg(long, default_value_t = 1.25)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Record zero wall time so reports are byte-identical across runs.
    #[arg(long)]
    no_timing: bool,
    /// Print only the aggregate line.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    cluster_size: usize,
    #[arg(long, default_value_t = 0.95)]
    straightness: f64,
    #[arg(long, default_value_t = 0.6)]
    max_edge: f64,
    #[arg(long, default_value_t = 15)]
    avg_size: usize,
    #[arg(long, default_value_t = 5000)]
    total: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    noise: usize,
    /// Size of the query pool sampled from the clustered trajectories.
    #[arg(long, default_value_t = 1000)]
    pool: usize,
    /// Write query trajectories here, drawn from the query pool.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    query_count: usize,
    /// Make range queries with exactly this many results instead of plain perturbations.
    #[arg(long)]
    result_size: Option<usize>,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
    /// Use exact distances for overlap and verify the covering radii.
    #[arg(long)]
    oracle: bool,
    /// Write `<prefix>.csv` and `<prefix>.dot`.
    #[arg(long)]
    dendrogram: Option<PathBuf>,
}

/// Failures caused by the invocation rather than by the computation.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require_file(path: &Path) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(usage(format!("{}: no such file", path.display())));
    }
    Ok(())
}

fn read_set(path: &Path) -> anyhow::Result<TrajectorySet> {
    require_file(path)?;
    cct_core::io::read_trajectories(path).with_context(|| format!("reading {}", path.display()))
}

fn load_index(path: &Path) -> anyhow::Result<CctIndex> {
    require_file(path)?;
    CctIndex::load(path).with_context(|| format!("loading {}", path.display()))
}

fn print_counters(label: &str, c: &Counters) {
    println!(
        "{label}: df_calls={} dfd_calls={} bound_calls={} node_visits={}",
        c.df_calls,
        c.dfd_calls,
        c.bound_calls(),
        c.node_visits
    );
}

fn cmd_build(a: BuildArgs) -> anyhow::Result<()> {
    let mut set = read_set(&a.input)?;
    if let Some(frac) = a.simplify_frac {
        if !(frac >= 0.0 && frac.is_finite()) {
            return Err(usage("--simplify-frac must be a non-negative number"));
        }
        let simplified = set.iter().map(|t| t.simplify(frac * t.reach())).collect();
        set = TrajectorySet::new(simplified)?;
    }
    let variant = match a.variant {
        BuildKind::Exact => BuildVariant::Exact,
        BuildKind::Relaxed => BuildVariant::Relaxed,
        BuildKind::Approx => BuildVariant::Approx,
        BuildKind::Inserts => BuildVariant::Inserts,
    };
    let idx = CctIndex::build(set, variant, &BuildOptions::seeded(a.seed))?;
    idx.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("trajectories={} nodes={}", idx.len(), idx.node_count());
    print_counters("build", &idx.build_stats().totals());
    Ok(())
}

fn cmd_insert(a: InsertArgs) -> anyhow::Result<()> {
    let mut idx = load_index(&a.index)?;
    let set = read_set(&a.input)?;
    let variant = match a.variant {
        InsertKind::Exact => InsertVariant::Exact,
        InsertKind::Approx => InsertVariant::Approx,
        InsertKind::Standard => InsertVariant::Standard,
    };
    let mut total = Counters::default();
    let added = set.len();
    for t in set.into_vec() {
        total += idx.insert(t, variant)?.totals();
    }
    let out = a.out.as_ref().unwrap_or(&a.index);
    idx.save(out).with_context(|| format!("writing {}", out.display()))?;
    println!("inserted={added} trajectories={} nodes={}", idx.len(), idx.node_count());
    print_counters("insert", &total);
    Ok(())
}

fn error_model(a: &QueryArgs) -> anyhow::Result<ErrorModel> {
    let check = |v: f64, flag: &str| {
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(usage(format!("{flag} must be a non-negative number")))
        }
    };
    Ok(match (a.eadd, a.erel, a.implicit) {
        (Some(e), _, _) => ErrorModel::Additive(check(e, "--eadd")?),
        (_, Some(e), _) => ErrorModel::Relative(check(e, "--erel")?),
        (_, _, true) => ErrorModel::Implicit,
        _ => ErrorModel::Additive(0.0),
    })
}

/// Range thresholds keyed by query id, read from a generator manifest.
fn manifest_taus(path: &Path) -> anyhow::Result<std::collections::HashMap<u64, f64>> {
    require_file(path)?;
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(path)?)?;
    let entries = doc["queries"]["taus"]
        .as_array()
        .ok_or_else(|| usage(format!("{}: manifest has no query thresholds", path.display())))?;
    entries
        .iter()
        .map(|e| match (e["id"].as_u64(), e["tau"].as_f64()) {
            (Some(id), Some(tau)) => Ok((id, tau)),
            _ => Err(usage(format!("{}: malformed threshold entry {e}", path.display()))),
        })
        .collect()
}

struct Row {
    query_id: u64,
    ids: Vec<u64>,
    counters: Counters,
    e_add: Option<f64>,
    e_rel: Option<f64>,
    wall_ms: f64,
}

const REPORT_HEADER: &str =
    "query_id,kind,df_calls,dfd_calls,sev,bb,st,tr,ub_bb,adf,segment,node_visits,result_size,e_add,e_rel,wall_ms";

fn report_row(r: &Row, kind: &str) -> String {
    let c = &r.counters;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{kind},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        r.query_id,
        c.df_calls,
        c.dfd_calls,
        c.sev,
        c.bb,
        c.st,
        c.tr,
        c.ub_bb,
        c.adf,
        c.segment,
        c.node_visits,
        r.ids.len(),
        opt(r.e_add),
        opt(r.e_rel),
        r.wall_ms
    )
}

fn cmd_query(a: QueryArgs) -> anyhow::Result<()> {
    let model = error_model(&a)?;
    let taus = a.tau_manifest.as_deref().map(manifest_taus).transpose()?;
    match a.kind {
        Kind::Knn if a.k.is_none() => return Err(usage("--kind knn needs --k")),
        Kind::Rnn if a.tau.is_none() && taus.is_none() => return Err(usage("--kind rnn needs --tau or --tau-manifest")),
        _ => {}
    }
    let idx = load_index(&a.index)?;
    let queries = read_set(&a.queries)?.into_vec();

    let spec_for = |q: &Trajectory| -> anyhow::Result<QuerySpec> {
        let kind = match a.kind {
            Kind::Knn => QueryKind::Knn(a.k.unwrap()),
            Kind::Nn => QueryKind::Nn,
            Kind::Rnn => QueryKind::Rnn(match &taus {
                Some(m) => *m
                    .get(&q.id())
                    .ok_or_else(|| usage(format!("manifest has no threshold for query {}", q.id())))?,
                None => a.tau.unwrap(),
            }),
        };
        Ok(QuerySpec::new(kind)
            .with_error(model)
            .with_kappa(a.kappa)
            .with_seed(a.seed ^ q.id()))
    };
    let rows: Vec<Row> = queries
        .par_iter()
        .map(|q| {
            let spec = spec_for(q)?;
            let start = Instant::now();
            let res = query(&idx, q, &spec).with_context(|| format!("query {}", q.id()))?;
            let wall_ms = if a.no_timing { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
            Ok(Row {
                query_id: q.id(),
                ids: res.ids,
                counters: res.instr.totals(),
                e_add: res.reported_error.map(|e| e.e_add),
                e_rel: res.reported_error.map(|e| e.e_rel),
                wall_ms,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let kind = match a.kind {
        Kind::Knn => "knn",
        Kind::Nn => "nn",
        Kind::Rnn => "rnn",
    };
    if let Some(path) = &a.report {
        let mut text = String::from(REPORT_HEADER);
        text.push('\n');
        for r in &rows {
            text += &report_row(r, kind);
            text.push('\n');
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        let stamp = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "index": a.index.display().to_string(),
            "build_variant": format!("{:?}", idx.variant()),
            "index_seed": idx.seed(),
            "kind": kind,
            "k": a.k,
            "error_model": format!("{model:?}"),
            "kappa": a.kappa,
            "seed": a.seed,
        });
        let mut meta = path.as_os_str().to_owned();
        meta.push(".env.json");
        std::fs::write(&meta, serde_json::to_string_pretty(&stamp)? + "\n")?;
    }
    if !a.quiet {
        let mut out = String::new();
        for r in &rows {
            let ids: Vec<String> = r.ids.iter().map(u64::to_string).collect();
            write!(out, "query={} ids={}", r.query_id, ids.join(";"))?;
            if let Some(e) = r.e_add {
                write!(out, " e_add={e}")?;
            }
            out.push('\n');
        }
        print!("{out}");
    }
    println!("{}", aggregate_line(&rows));
    Ok(())
}

fn aggregate_line(rows: &[Row]) -> String {
    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&Counters) -> u64| rows.iter().map(|r| f(&r.counters) as f64).sum::<f64>() / n;
    let zero = rows.iter().filter(|r| r.counters.df_calls == 0).count() as f64 / n;
    format!(
        "queries={} mean_df={} mean_dfd={} mean_visits={} zero_df_frac={}",
        rows.len(),
        mean(|c| c.df_calls),
        mean(|c| c.dfd_calls),
        mean(|c| c.node_visits),
        zero
    )
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        cluster_size: a.cluster_size,
        straightness: a.straightness,
        max_edge: a.max_edge,
        avg_size: a.avg_size,
        total: a.total,
        dim: a.dim,
        seed: a.seed,
        noise_count: a.noise,
        query_count: a.pool,
    };
    let data = datagen::gen_synthetic(&cfg).map_err(|e| usage(e.to_string()))?;
    cct_core::io::write_trajectories(&a.out, data.set.iter()).with_context(|| format!("writing {}", a.out.display()))?;

    let mut queries = serde_json::Value::Null;
    if let Some(path) = &a.queries {
        let pool: Vec<Trajectory> = data.query_pool.iter().map(|&id| data.set.get(id).unwrap().clone()).collect();
        if pool.is_empty() {
            return Err(usage("the query pool is empty; raise --pool"));
        }
        let first_id = data.set.iter().map(|t| t.id()).max().map_or(0, |m| m + 1);
        let query_seed = a.seed ^ 0x5eed;
        let (trajs, taus): (Vec<Trajectory>, Vec<serde_json::Value>) = match a.result_size {
            None => {
                let qs = datagen::gen_queries_perturb(&pool, a.query_count, query_seed, first_id)?;
                (qs, Vec::new())
            }
            Some(size) => datagen::gen_queries_fixed_result(data.set.as_slice(), a.query_count, size, query_seed, first_id)?
                .into_iter()
                .map(|f| {
                    let entry = json!({ "id": f.query.id(), "tau": f.tau });
                    (f.query, entry)
                })
                .unzip(),
        };
        cct_core::io::write_trajectories(path, trajs.iter()).with_context(|| format!("writing {}", path.display()))?;
        queries = json!({
            "file": path.display().to_string(),
            "method": if a.result_size.is_some() { "fixed_result" } else { "perturb" },
            "count": trajs.len(),
            "seed": query_seed,
            "result_size": a.result_size,
            "taus": taus,
        });
    }
    let manifest = json!({
        "config": cfg,
        "seed": a.seed,
        "trajectories": data.set.len(),
        "query_pool": data.query_pool,
        "queries": queries,
    });
    let manifest_path = a.manifest.clone().unwrap_or_else(|| {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("trajectories={} pool={} manifest={}", data.set.len(), data.query_pool.len(), manifest_path.display());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> anyhow::Result<()> {
    let idx = load_index(&a.index)?;
    let report = idx.quality(a.oracle)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    let nesting = idx.check_nesting();
    println!("nesting: {}", if nesting.is_ok() { "OK" } else { "VIOLATED" });
    let mut ok = nesting.is_ok();
    if a.oracle {
        let bad = idx.bounding_violations_exact(1e-9);
        println!("bounding: {}", if bad.is_empty() { "OK".to_string() } else { format!("{} VIOLATIONS", bad.len()) });
        ok &= bad.is_empty();
    }
    print_counters("build", &idx.build_stats().totals());
    if let Some(prefix) = &a.dendrogram {
        let with_ext = |ext: &str| {
            let mut p = prefix.as_os_str().to_owned();
            p.push(ext);
            PathBuf::from(p)
        };
        idx.export_dendrogram(with_ext(".csv"), with_ext(".dot"))?;
    }
    if !ok {
        bail!("index invariants violated");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Command::Build(a) => cmd_build(a),
        Command::Insert(a) => cmd_insert(a),
        Command::Query(a) => cmd_query(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
