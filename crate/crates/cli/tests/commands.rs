use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn surrobid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surrobid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn market_trivial_instance() {
    let tmp = TempDir::new().unwrap();
    let inst = repo("instances/trivial_1bus.json");
    let o = surrobid(&[
        "market",
        arg(&inst),
        "--e-m",
        "0",
        "--p-m",
        "0",
        "--out",
        arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("total cost: 1100.00 $"), "{text}");
    assert!(text.contains("storage profit: 0.00 $"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("clearing.json")).unwrap())
            .unwrap();
    assert_eq!(json["clearing"]["lambda"][0][0].as_f64().unwrap(), 12.0);
    let periods = fs::read_to_string(tmp.path().join("periods.csv")).unwrap();
    assert_eq!(periods.lines().count(), 2);
}

#[test]
fn market_arbitrage_profit() {
    let tmp = TempDir::new().unwrap();
    let inst = repo("instances/arbitrage_t2.json");
    let o = surrobid(&[
        "market",
        arg(&inst),
        "--e-m",
        "25",
        "--p-m",
        "25",
        "--out",
        arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("storage profit: 25.00 $"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn malformed_instance_names_field() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(repo("instances/trivial_1bus.json")).unwrap())
            .unwrap();
    doc.as_object_mut().unwrap().remove("loads");
    fs::write(&bad, doc.to_string()).unwrap();
    for cmd in ["validate", "market"] {
        let mut args = vec![cmd, arg(&bad)];
        if cmd == "market" {
            args.extend(["--e-m", "1", "--p-m", "1"]);
        }
        let o = surrobid(&args);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("loads"), "{}", stderr(&o));
        assert!(stdout(&o).is_empty());
    }
}

#[test]
fn invalid_instance_lists_violations() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(repo("instances/trivial_1bus.json")).unwrap())
            .unwrap();
    doc["storage"]["eta_c"] = serde_json::json!(1.5);
    fs::write(&bad, doc.to_string()).unwrap();
    let o = surrobid(&["validate", arg(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eta"), "{}", stderr(&o));
}

#[test]
fn validate_bundled_instances() {
    for stem in ["trivial_1bus", "arbitrage_t2", "desk_3bus_t6"] {
        let o = surrobid(&["validate", arg(&repo(&format!("instances/{stem}.json")))]);
        assert!(o.status.success(), "{stem}: {}", stderr(&o));
    }
}

#[test]
fn enumerate_finds_arbitrage_optimum() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "grid.json",
        serde_json::json!({
            "instance": repo("instances/arbitrage_t2.json"),
            "method": "enumerate",
            "grid_points": 51,
            "output_dir": "run",
        }),
    );
    let o = surrobid(&["optimize", arg(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["best_bid"]["e_m"].as_f64().unwrap(), 25.0);
    assert_eq!(summary["best_bid"]["p_m"].as_f64().unwrap(), 25.0);
    assert!((summary["best_profit"].as_f64().unwrap() - 25.0).abs() <= 0.01);
    assert_eq!(summary["evaluations"].as_u64().unwrap(), 2601);
}

#[test]
fn surrogate_trace_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sur.json",
        serde_json::json!({
            "instance": repo("instances/arbitrage_t2.json"),
            "method": "surrogate",
            "alpha": 500,
            "n_max": 20,
        }),
    );
    let mut traces = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = surrobid(&["optimize", arg(&cfg), "--seed", "3", "--out", arg(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        traces.push(fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    let text = String::from_utf8(traces.remove(0)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "iter,method,x1,x2,f,best_f,ms"
    );
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn stochastic_method_requires_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "noseed.json",
        serde_json::json!({ "instance": repo("instances/arbitrage_t2.json"), "method": "random", "n_max": 5 }),
    );
    let o = surrobid(&["optimize", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn budget_below_initial_design_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "small.json",
        serde_json::json!({
            "instance": repo("instances/arbitrage_t2.json"),
            "method": "surrogate",
            "seed": 0,
            "n_init": 10,
            "n_max": 4,
            "output_dir": "run",
        }),
    );
    let o = surrobid(&["optimize", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_init"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "typo.json",
        serde_json::json!({ "instance": repo("instances/arbitrage_t2.json"), "method": "pattern", "nmax": 5 }),
    );
    let o = surrobid(&["optimize", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nmax"), "{}", stderr(&o));
}

#[test]
fn compare_method_against_itself() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cmp.json",
        serde_json::json!({
            "instance": repo("instances/arbitrage_t2.json"),
            "methods": ["random", "random"],
            "seeds": [5],
            "n_max": 15,
            "grid_points": 11,
            "output_dir": "cmp",
        }),
    );
    let o = surrobid(&["compare", arg(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("cmp/compare.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "method,seed,best_f,rel_error,evals,ms");
    assert_eq!(rows.len(), 4);
    let reference: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(reference[0], "enumerate");
    assert_eq!(reference[3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(reference[4], "121");
    assert_eq!(rows[2], rows[3]);
    assert!(tmp.path().join("cmp/traces/random_seed5.csv").exists());
}

#[test]
fn compare_needs_two_methods() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "one.json",
        serde_json::json!({
            "instance": repo("instances/arbitrage_t2.json"),
            "methods": ["pattern"],
            "seeds": [0],
        }),
    );
    let o = surrobid(&["compare", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn entropy_demo_outputs() {
    let tmp = TempDir::new().unwrap();
    let o = surrobid(&["entropy-demo", "--out", arg(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));

    let grid: Vec<(f64, f64)> = read_csv(&tmp.path().join("entropy_grid.csv"))
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(grid.len(), 1001);
    for s in [0.1, 0.3, 0.7, 0.8] {
        let (_, h) = grid
            .iter()
            .min_by(|a, b| (a.0 - s).abs().total_cmp(&(b.0 - s).abs()))
            .unwrap();
        assert!(h.abs() < 1e-12, "{s}: {h}");
    }
    let max_in = |lo: f64, hi: f64| {
        grid.iter()
            .filter(|(x, _)| *x > lo && *x < hi)
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    assert!(max_in(0.3, 0.7) > max_in(0.7, 0.8));

    let rows = read_csv(&tmp.path().join("orderings.csv"));
    let finals = |pred: &dyn Fn(&str) -> bool| -> Vec<f64> {
        rows.iter()
            .filter(|r| pred(&r[0]) && r[2] == "4")
            .map(|r| r[4].parse().unwrap())
            .collect()
    };
    let perms = finals(&|l| l.starts_with("perm"));
    assert_eq!(perms.len(), 24);
    let greedy = finals(&|l| l == "greedy")[0];
    let best = perms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((greedy - best).abs() <= 1e-12 * best.abs().max(1.0));
    assert_eq!(finals(&|l| l == "natural").len(), 1);
    assert_eq!(finals(&|l| l == "reverse").len(), 1);
}

#[test]
fn entropy_demo_custom_points() {
    let tmp = TempDir::new().unwrap();
    let o = surrobid(&[
        "entropy-demo",
        "--points",
        "0.2,0.9",
        "--out",
        arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&tmp.path().join("orderings.csv"));
    assert_eq!(
        rows.iter().filter(|r| r[0].starts_with("perm")).count(),
        2 * 2
    );
}
