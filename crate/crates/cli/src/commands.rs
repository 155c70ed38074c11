use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use surrobid_core::entropy::{cumulative_entropy, delta_entropy, greedy_order, permutations};
use surrobid_core::market::{bidding_objective, clear_market, storage_profit, validate_instance};
use surrobid_core::optimizer::{
    fmt_num, genetic_algorithm, grid_enumerate, pattern_search, random_search, surrogate_optimize,
    OptimizationResult,
};
use surrobid_core::{Bid, Bounds, Error, MarketInstance, SampleSet};

use crate::config::{Method, Overrides, RunConfig};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn load_instance(path: &Path) -> Result<MarketInstance> {
    let inst = MarketInstance::from_path(path)
        .with_context(|| format!("cannot load instance {}", path.display()))?;
    let violations = validate_instance(&inst);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations))
            .with_context(|| format!("instance {} is invalid", path.display()));
    }
    Ok(inst)
}

pub fn validate(path: &Path) -> Result<()> {
    load_instance(path)?;
    println!("{}: valid", path.display());
    Ok(())
}

pub fn market(path: &Path, e_m: f64, p_m: f64, out: &Path) -> Result<()> {
    let inst = load_instance(path)?;
    let bid = Bid::new(e_m, p_m);
    let r = clear_market(&inst, &bid)?;
    let profit = storage_profit(&inst, &r);
    let doc = json!({ "bid": bid, "storage_profit": profit, "clearing": r });
    write_file(
        &out.join("clearing.json"),
        &serde_json::to_string_pretty(&doc)?,
    )?;
    let mut csv = String::from("t,pc,pd,y,lambda_at_storage_bus\n");
    let prices = &r.lambda[inst.storage.bus];
    for t in 0..inst.horizon {
        let _ = writeln!(
            csv,
            "{t},{},{},{},{}",
            fmt_num(r.pc[t]),
            fmt_num(r.pd[t]),
            fmt_num(r.y[t + 1]),
            fmt_num(prices[t])
        );
    }
    write_file(&out.join("periods.csv"), &csv)?;
    println!("total cost: {:.2} $", r.total_cost);
    println!("storage profit: {:.2} $", profit);
    println!("branch-and-bound nodes: {}", r.node_count);
    Ok(())
}

struct MethodRun {
    result: OptimizationResult,
    ms: f64,
}

fn run_method(
    method: Method,
    cfg: &RunConfig,
    inst: &MarketInstance,
    seed: u64,
) -> Result<MethodRun> {
    let objective = bidding_objective(inst.clone())?;
    let ocfg = cfg.optimizer_config(2, seed)?;
    let start = Instant::now();
    let result = match method {
        Method::Surrogate => surrogate_optimize(&objective, &ocfg)?,
        Method::Pattern => pattern_search(&objective, &ocfg)?,
        Method::Ga => genetic_algorithm(&objective, &ocfg)?,
        Method::Random => random_search(&objective, &ocfg)?,
        Method::Enumerate => {
            let g = grid_enumerate(&objective, cfg.grid_points)?;
            OptimizationResult {
                best_point: g.best_point,
                best_value: g.best_value,
                trace: g.trace,
            }
        }
    };
    Ok(MethodRun {
        result,
        ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Serialize)]
struct Summary {
    method: String,
    seed: Option<u64>,
    instance: PathBuf,
    best_bid: Bid,
    best_profit: f64,
    best_value: f64,
    evaluations: usize,
    wall_ms: f64,
}

pub fn optimize(config: &Path, ov: &Overrides) -> Result<()> {
    let cfg = RunConfig::load(config, ov)?;
    let Some(method) = cfg.method else {
        bail!(Error::Config(
            "config needs a \"method\" (or pass --method)".into()
        ));
    };
    let seed = cfg.require_seed(method)?;
    let inst = load_instance(&cfg.instance)?;
    let run = run_method(method, &cfg, &inst, seed)?;
    let out = cfg.output_dir();
    write_file(&out.join("trace.csv"), &run.result.trace.to_csv())?;
    let best = &run.result.best_point;
    let summary = Summary {
        method: method.to_string(),
        seed: method.needs_seed().then_some(seed),
        instance: cfg.instance.clone(),
        best_bid: Bid::new(best[0], best[1]),
        best_profit: -run.result.best_value,
        best_value: run.result.best_value,
        evaluations: run.result.trace.len(),
        wall_ms: run.ms,
    };
    write_file(
        &out.join("summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{method}: best bid e_m = {:.4} MWh, p_m = {:.4} MW, profit {:.2} $ after {} evaluations",
        best[0],
        best[1],
        -run.result.best_value,
        run.result.trace.len()
    );
    Ok(())
}

/// Relative error against the reference value; absolute when it is zero.
pub fn rel_error(value: f64, reference: f64) -> f64 {
    let diff = (value - reference).abs();
    if reference == 0.0 {
        diff
    } else {
        diff / reference.abs()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn compare(config: &Path, ov: &Overrides) -> Result<()> {
    let cfg = RunConfig::load(config, ov)?;
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| *m != Method::Enumerate)
        .collect();
    if cfg.methods.len() < 2 {
        bail!(Error::Config(
            "compare needs at least two \"methods\"".into()
        ));
    }
    if cfg.seeds.is_empty() {
        bail!(Error::Config(
            "compare needs a nonempty \"seeds\" list (or --seed)".into()
        ));
    }
    let inst = load_instance(&cfg.instance)?;
    let reference = run_method(Method::Enumerate, &cfg, &inst, 0)?;
    let f_enum = reference.result.best_value;

    let cells: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let runs: Vec<Result<MethodRun>> = cells
        .par_iter()
        .map(|&(m, s)| run_method(m, &cfg, &inst, s))
        .collect();

    let out = cfg.output_dir();
    let ms = |v: f64| if cfg.record_timing { v } else { 0.0 };
    let mut csv = String::from("method,seed,best_f,rel_error,evals,ms\n");
    let _ = writeln!(
        csv,
        "enumerate,,{},{},{},{}",
        fmt_num(f_enum),
        fmt_num(0.0),
        reference.result.trace.len(),
        fmt_num(ms(reference.ms))
    );
    let mut by_method: Vec<(Method, Vec<f64>)> = Vec::new();
    for &m in &methods {
        if !by_method.iter().any(|(k, _)| *k == m) {
            by_method.push((m, Vec::new()));
        }
    }
    for (&(m, s), run) in cells.iter().zip(runs) {
        let run = run?;
        let err = rel_error(run.result.best_value, f_enum);
        let _ = writeln!(
            csv,
            "{m},{s},{},{},{},{}",
            fmt_num(run.result.best_value),
            fmt_num(err),
            run.result.trace.len(),
            fmt_num(ms(run.ms))
        );
        by_method
            .iter_mut()
            .find(|(k, _)| *k == m)
            .expect("method listed")
            .1
            .push(err);
        write_file(
            &out.join("traces").join(format!("{m}_seed{s}.csv")),
            &run.result.trace.to_csv(),
        )?;
    }
    write_file(&out.join("compare.csv"), &csv)?;
    println!(
        "reference: enumeration on {0}x{0} grid, best value {1:.6}",
        cfg.grid_points, f_enum
    );
    for (m, errs) in by_method {
        let worst = errs.iter().copied().fold(0.0, f64::max);
        println!(
            "{m:>10}: median rel. error {:.4}%, max {:.4}%",
            100.0 * median(errs),
            100.0 * worst
        );
    }
    Ok(())
}

pub fn entropy_demo(points: &[f64], out: &Path) -> Result<()> {
    let bounds = Bounds::unit(1)?;
    if points.is_empty() {
        bail!(Error::Usage("need at least one point".into()));
    }
    let pts: Vec<Vec<f64>> = points.iter().map(|&p| vec![p]).collect();
    let samples = SampleSet::from_parts(bounds.clone(), pts.clone(), vec![0.0; pts.len()], 1e-12)?;

    let mut grid = String::from("x,delta_h\n");
    for k in 0..=1000 {
        let x = k as f64 / 1000.0;
        let h = delta_entropy(
            &[x],
            &samples,
            surrobid_core::entropy::DEFAULT_COINCIDENCE_EPS,
        )?;
        let _ = writeln!(grid, "{},{}", fmt_num(x), fmt_num(h));
    }
    write_file(&out.join("entropy_grid.csv"), &grid)?;

    let n = pts.len();
    let mut orderings: Vec<(String, Vec<usize>)> = vec![
        ("natural".into(), (0..n).collect()),
        ("greedy".into(), greedy_order(&pts, &bounds)?),
        ("reverse".into(), (0..n).rev().collect()),
    ];
    if n <= 6 {
        for (k, p) in permutations(n).into_iter().enumerate() {
            orderings.push((format!("perm{k}"), p));
        }
    }
    let mut csv = String::from("label,order,step,point,cumulative\n");
    let mut finals = Vec::new();
    for (label, order) in &orderings {
        let seq: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let totals = cumulative_entropy(&seq, &bounds)?;
        let order_str = order
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        for (step, total) in totals.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{label},{order_str},{},{},{}",
                step + 1,
                fmt_num(seq[step][0]),
                fmt_num(*total)
            );
        }
        finals.push((label.clone(), *totals.last().expect("nonempty")));
    }
    write_file(&out.join("orderings.csv"), &csv)?;

    let greedy = finals[1].1;
    println!("greedy order total: {greedy:.6}");
    if n <= 6 {
        let best = finals[3..]
            .iter()
            .map(|f| f.1)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("best of {} permutations: {best:.6}", finals.len() - 3);
    }
    Ok(())
}
