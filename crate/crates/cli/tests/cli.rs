use std::path::Path;
use std::process::{Command, Output};

use cct_core::frechet::{self, DistanceMode};
use cct_core::io::read_trajectories;

fn cct(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cct"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run cct")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cct(dir, args);
    assert!(
        out.status.success(),
        "cct {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const THREE: &str = "traj_id,seq,c1,c2\n0,0,0,0\n0,1,0,1\n1,0,4,0\n1,1,4,1\n2,0,10,0\n2,1,10,1\n";

fn small_set(dir: &Path, queries: usize) {
    ok(
        dir,
        &[
            "gen", "--out", "s.csv", "--total", "600", "--noise", "60", "--pool", "100", "--queries", "q.csv",
            "--query-count", &queries.to_string(), "--seed", "4",
        ],
    );
    ok(dir, &["build", "--input", "s.csv", "--out", "idx.json", "--seed", "1"]);
}

/// Report rows as (header, rows of fields).
fn report(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn result_ids(stdout: &str) -> Vec<(u64, Vec<u64>)> {
    stdout
        .lines()
        .filter_map(|l| {
            let rest = l.strip_prefix("query=")?;
            let (q, ids) = rest.split_once(" ids=")?;
            let ids = ids.split_whitespace().next().unwrap_or("");
            let ids = ids.split(';').filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
            Some((q.parse().unwrap(), ids))
        })
        .collect()
}

#[test]
fn build_three_segments() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), THREE).unwrap();
    let out = ok(dir.path(), &["build", "--input", "t.csv", "--variant", "exact", "--out", "i.json"]);
    assert!(out.contains("nodes=5"), "{out}");
    let stats = ok(dir.path(), &["stats", "--index", "i.json", "--oracle", "--dendrogram", "dg"]);
    assert!(stats.contains("\"compactness\": 0.4"), "{stats}");
    assert!(stats.contains("nesting: OK") && stats.contains("bounding: OK"));
    assert!(dir.path().join("dg.csv").is_file() && dir.path().join("dg.dot").is_file());

    let out = ok(dir.path(), &["build", "--input", "t.csv", "--variant", "approx", "--out", "a.json"]);
    assert!(out.contains("df_calls=0 dfd_calls=0"), "{out}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cct(dir.path(), &["build", "--input", "missing.csv", "--out", "i.json"]).status.code(), Some(2));
    std::fs::write(dir.path().join("t.csv"), THREE).unwrap();
    ok(dir.path(), &["build", "--input", "t.csv", "--out", "i.json"]);
    let both = ["query", "--index", "i.json", "--queries", "t.csv", "--kind", "nn", "--eadd", "1", "--erel", "1"];
    assert_eq!(cct(dir.path(), &both).status.code(), Some(2));
    let no_k = ["query", "--index", "i.json", "--queries", "t.csv", "--kind", "knn"];
    assert_eq!(cct(dir.path(), &no_k).status.code(), Some(2));
    assert_eq!(cct(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), THREE).unwrap();
    ok(dir.path(), &["build", "--input", "t.csv", "--out", "i.json"]);
    let too_many = ["query", "--index", "i.json", "--queries", "t.csv", "--kind", "knn", "--k", "4"];
    assert_eq!(cct(dir.path(), &too_many).status.code(), Some(1));
    std::fs::write(dir.path().join("bad.csv"), "traj_id,seq,c1\n0,0,zero\n").unwrap();
    assert_eq!(cct(dir.path(), &["build", "--input", "bad.csv", "--out", "b.json"]).status.code(), Some(1));
}

#[test]
fn implicit_rows_make_no_distance_calls() {
    let dir = tempfile::tempdir().unwrap();
    small_set(dir.path(), 40);
    ok(
        dir.path(),
        &["query", "--index", "idx.json", "--queries", "q.csv", "--kind", "knn", "--k", "5", "--implicit", "--report", "r.csv"],
    );
    let (h, rows) = report(&dir.path().join("r.csv"));
    assert_eq!(rows.len(), 40);
    assert!(column(&h, &rows, "df_calls").iter().all(|&x| x == 0.0));
    assert!(column(&h, &rows, "dfd_calls").iter().all(|&x| x == 0.0));
    assert!(column(&h, &rows, "e_add").iter().all(|&x| x >= 0.0));
}

#[test]
fn aggregates_match_rows() {
    let dir = tempfile::tempdir().unwrap();
    small_set(dir.path(), 60);
    let out = ok(
        dir.path(),
        &["query", "--index", "idx.json", "--queries", "q.csv", "--kind", "nn", "--report", "r.csv", "--quiet"],
    );
    let line = out.lines().last().unwrap();
    let fields: std::collections::HashMap<&str, f64> = line
        .split_whitespace()
        .map(|kv| {
            let (k, v) = kv.split_once('=').unwrap();
            (k, v.parse().unwrap())
        })
        .collect();
    let (h, rows) = report(&dir.path().join("r.csv"));
    let mean = |name: &str| column(&h, &rows, name).iter().sum::<f64>() / rows.len() as f64;
    assert_eq!(fields["queries"], rows.len() as f64);
    assert!((fields["mean_df"] - mean("df_calls")).abs() <= 1e-12);
    assert!((fields["mean_dfd"] - mean("dfd_calls")).abs() <= 1e-12);
    assert!((fields["mean_visits"] - mean("node_visits")).abs() <= 1e-12);
    let zero = column(&h, &rows, "df_calls").iter().filter(|&&x| x == 0.0).count() as f64 / rows.len() as f64;
    assert!((fields["zero_df_frac"] - zero).abs() <= 1e-12);
    let ids: Vec<f64> = column(&h, &rows, "query_id");
    assert!(ids.windows(2).all(|w| w[0] < w[1]), "rows ordered by query id");
}

#[test]
fn knn_one_agrees_with_nn() {
    let dir = tempfile::tempdir().unwrap();
    small_set(dir.path(), 30);
    let knn = ok(dir.path(), &["query", "--index", "idx.json", "--queries", "q.csv", "--kind", "knn", "--k", "1"]);
    let nn = ok(dir.path(), &["query", "--index", "idx.json", "--queries", "q.csv", "--kind", "nn"]);
    let set = read_trajectories(dir.path().join("s.csv")).unwrap();
    let queries = read_trajectories(dir.path().join("q.csv")).unwrap();
    let (a, b) = (result_ids(&knn), result_ids(&nn));
    assert_eq!(a.len(), 30);
    for ((qa, ia), (qb, ib)) in a.iter().zip(&b) {
        assert_eq!(qa, qb);
        let q = queries.get(*qa).unwrap();
        let d = |id: u64| frechet::distance(set.get(id).unwrap(), q, DistanceMode::CriticalValues).unwrap();
        assert!((d(ia[0]) - d(ib[0])).abs() <= 1e-9);
    }
}

#[test]
fn fixed_result_thresholds_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let gen = [
        "gen", "--out", "s.csv", "--total", "600", "--noise", "60", "--pool", "100", "--queries", "q.csv",
        "--query-count", "8", "--result-size", "10", "--seed", "9",
    ];
    ok(dir.path(), &gen);
    ok(dir.path(), &["build", "--input", "s.csv", "--out", "idx.json"]);
    ok(
        dir.path(),
        &[
            "query", "--index", "idx.json", "--queries", "q.csv", "--kind", "rnn", "--tau-manifest",
            "s.csv.manifest.json", "--report", "r.csv",
        ],
    );
    let (h, rows) = report(&dir.path().join("r.csv"));
    assert_eq!(rows.len(), 8);
    assert!(column(&h, &rows, "result_size").iter().all(|&x| x == 10.0));
}

#[test]
fn generation_and_reports_are_reproducible() {
    let runs: Vec<Vec<Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            small_set(dir.path(), 25);
            ok(
                dir.path(),
                &["query", "--index", "idx.json", "--queries", "q.csv", "--kind", "knn", "--k", "3", "--report", "r.csv", "--no-timing"],
            );
            ["s.csv", "q.csv", "s.csv.manifest.json", "idx.json", "idx.json.traj.csv", "r.csv"]
                .iter()
                .map(|f| std::fs::read(dir.path().join(f)).unwrap())
                .collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn insert_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    small_set(dir.path(), 20);
    for variant in ["exact", "approx", "standard"] {
        let out = format!("{variant}.json");
        let res = ok(
            dir.path(),
            &["insert", "--index", "idx.json", "--input", "q.csv", "--variant", variant, "--out", &out],
        );
        assert!(res.contains("inserted=20 trajectories=620"), "{res}");
        let stats = ok(dir.path(), &["stats", "--index", &out, "--oracle"]);
        assert!(stats.contains("nesting: OK") && stats.contains("bounding: OK"), "{stats}");
    }
}

#[test]
fn simplified_build_keeps_every_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    small_set(dir.path(), 1);
    let out = ok(dir.path(), &["build", "--input", "s.csv", "--out", "simple.json", "--simplify-frac"]);
    assert!(out.contains("trajectories=600"));
    let full = read_trajectories(dir.path().join("idx.json.traj.csv")).unwrap();
    let simple = read_trajectories(dir.path().join("simple.json.traj.csv")).unwrap();
    let before: usize = full.iter().map(|t| t.len()).sum();
    let after: usize = simple.iter().map(|t| t.len()).sum();
    assert!(after < before, "{after} vs {before}");
}
