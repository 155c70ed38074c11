use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// `null` in JSON stands for an unlimited capacity.
fn inf_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

fn infinite() -> f64 {
    f64::INFINITY
}

/// Transmission line with DC flow `b (theta_from - theta_to)`, limited to `F` MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub b: f64,
    #[serde(rename = "F", deserialize_with = "inf_if_null", default = "infinite")]
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub reference_bus: usize,
    pub lines: Vec<Line>,
}

/// Quadratic-cost generator `c p^2 + o p`, `0 <= p <= P`, ramp limit `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub c: f64,
    pub o: f64,
    #[serde(rename = "P")]
    pub capacity: f64,
    #[serde(rename = "K", deserialize_with = "inf_if_null", default = "infinite")]
    pub ramp: f64,
}

/// Physical storage unit; bids are bounded by its ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoragePhysical {
    pub bus: usize,
    #[serde(rename = "E_max")]
    pub e_max: f64,
    #[serde(rename = "P_max")]
    pub p_max: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    #[serde(default)]
    pub y_init: f64,
}

/// A market clearing instance. Periods are one hour long, so MW and MWh per
/// period coincide. Buses are 0-indexed; the bus count is `loads.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub horizon: usize,
    pub network: Network,
    pub generators: Vec<Generator>,
    /// `loads[i][t]`, MW.
    pub loads: Vec<Vec<f64>>,
    pub storage: StoragePhysical,
}

/// Storage owner's offer: energy capacity `e_m` (MWh) and power rate `p_m` (MW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub e_m: f64,
    pub p_m: f64,
}

impl Bid {
    pub fn new(e_m: f64, p_m: f64) -> Self {
        Self { e_m, p_m }
    }
}

impl MarketInstance {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn bus_count(&self) -> usize {
        self.loads.len()
    }

    /// Generator at bus `i`, if any.
    pub fn generator_at(&self, i: usize) -> Option<&Generator> {
        self.generators.iter().find(|g| g.bus == i)
    }

    pub fn validate(&self) -> Vec<String> {
        validate_instance(self)
    }

    pub fn check_bid(&self, bid: &Bid) -> Result<()> {
        let s = &self.storage;
        let ok = |v: f64, hi: f64| v.is_finite() && v >= 0.0 && v <= hi;
        if !ok(bid.e_m, s.e_max) || !ok(bid.p_m, s.p_max) {
            return Err(Error::Usage(format!(
                "bid (e_m = {}, p_m = {}) outside [0, {}] x [0, {}]",
                bid.e_m, bid.p_m, s.e_max, s.p_max
            )));
        }
        Ok(())
    }

    /// First period whose total load exceeds total generation plus storage rating.
    pub fn screening_violation(&self) -> Option<usize> {
        let cap: f64 = self.generators.iter().map(|g| g.capacity).sum::<f64>() + self.storage.p_max;
        (0..self.horizon).find(|&t| {
            let load: f64 = self.loads.iter().filter_map(|row| row.get(t)).sum();
            load > cap + 1e-9
        })
    }
}

/// Check structural invariants; returns human-readable violations (empty when
/// the instance is well formed). Never solves anything.
pub fn validate_instance(inst: &MarketInstance) -> Vec<String> {
    let mut v = Vec::new();
    let n_bus = inst.bus_count();
    if inst.horizon == 0 {
        v.push("horizon must be at least 1".to_string());
    }
    if n_bus == 0 {
        v.push("loads must have one row per bus (found none)".to_string());
    }
    for (i, row) in inst.loads.iter().enumerate() {
        if row.len() != inst.horizon {
            v.push(format!(
                "loads[{i}] has {} periods, horizon is {}",
                row.len(),
                inst.horizon
            ));
        }
        if row.iter().any(|l| !l.is_finite()) {
            v.push(format!("loads[{i}] contains a non-finite value"));
        }
    }
    if inst.network.reference_bus >= n_bus {
        v.push(format!(
            "network.reference_bus {} out of range (buses: {n_bus})",
            inst.network.reference_bus
        ));
    }
    for (k, line) in inst.network.lines.iter().enumerate() {
        if line.from >= n_bus || line.to >= n_bus {
            v.push(format!(
                "lines[{k}] connects unknown bus ({} -> {})",
                line.from, line.to
            ));
        }
        if line.from == line.to {
            v.push(format!("lines[{k}] is a self-loop at bus {}", line.from));
        }
        if !(line.b > 0.0 && line.b.is_finite()) {
            v.push(format!("lines[{k}].b must be positive, got {}", line.b));
        }
        if !(line.capacity > 0.0) {
            v.push(format!(
                "lines[{k}].F must be positive, got {}",
                line.capacity
            ));
        }
    }
    if n_bus > 1 && !connected(n_bus, &inst.network.lines) {
        v.push("network is not connected".to_string());
    }
    let mut per_bus = vec![0usize; n_bus];
    for (k, g) in inst.generators.iter().enumerate() {
        if g.bus >= n_bus {
            v.push(format!("generators[{k}].bus {} out of range", g.bus));
        } else {
            per_bus[g.bus] += 1;
        }
        if !(g.c >= 0.0 && g.c.is_finite()) {
            v.push(format!("generators[{k}].c must be >= 0, got {}", g.c));
        }
        if !g.o.is_finite() {
            v.push(format!("generators[{k}].o must be finite"));
        }
        if !(g.capacity >= 0.0 && g.capacity.is_finite()) {
            v.push(format!(
                "generators[{k}].P must be >= 0, got {}",
                g.capacity
            ));
        }
        if !(g.ramp > 0.0) {
            v.push(format!(
                "generators[{k}].K must be positive, got {}",
                g.ramp
            ));
        }
    }
    for (i, &count) in per_bus.iter().enumerate() {
        if count != 1 {
            v.push(format!(
                "bus {i} has {count} generators, expected exactly 1"
            ));
        }
    }
    let s = &inst.storage;
    if s.bus >= n_bus {
        v.push(format!("storage.bus {} out of range", s.bus));
    }
    if !(s.e_max >= 0.0 && s.e_max.is_finite()) {
        v.push(format!("storage.E_max must be >= 0, got {}", s.e_max));
    }
    if !(s.p_max >= 0.0 && s.p_max.is_finite()) {
        v.push(format!("storage.P_max must be >= 0, got {}", s.p_max));
    }
    for (name, eta) in [("eta_c", s.eta_c), ("eta_d", s.eta_d)] {
        if !(eta > 0.0 && eta <= 1.0) {
            v.push(format!("storage.{name} must lie in (0, 1], got {eta}"));
        }
    }
    if !(s.y_init >= 0.0 && s.y_init <= s.e_max) {
        v.push(format!(
            "storage.y_init {} outside [0, E_max = {}]",
            s.y_init, s.e_max
        ));
    }
    if v.is_empty() {
        if let Some(t) = inst.screening_violation() {
            v.push(format!(
                "period {t}: total load exceeds generation capacity plus storage rating"
            ));
        }
    }
    v
}

fn connected(n_bus: usize, lines: &[Line]) -> bool {
    let mut adj = vec![Vec::new(); n_bus];
    for l in lines.iter().filter(|l| l.from < n_bus && l.to < n_bus) {
        adj[l.from].push(l.to);
        adj[l.to].push(l.from);
    }
    let mut seen = vec![false; n_bus];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &k in &adj[i] {
            if !seen[k] {
                seen[k] = true;
                queue.push_back(k);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
