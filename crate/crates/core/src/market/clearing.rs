//! Storage-aware DC market clearing.
//!
//! Decision variables per period `t`: generator output `p[i][t]`, bus angles
//! `theta[i][t]` (zero at the reference bus), storage charge/discharge
//! `pc[t]`, `pd[t]` and state of charge `y[t+1]`. The charge/discharge
//! indicators never appear as QP variables: for a given assignment they only
//! decide which of `pc`, `pd` may be nonzero, and with both relaxed the
//! projection of `pc <= zc p_m, pd <= zd p_m, zc + zd <= 1` onto the powers is
//! `pc + pd <= p_m`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::instance::{Bid, MarketInstance};
use crate::error::{Error, Result};
use crate::qp::{self, LinRow, QpProblem, QpSettings};

/// Integrality tolerance on `pc / p_m` and `pd / p_m`.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Nodes whose bound is within this of the incumbent are pruned.
pub const PRUNE_TOL: f64 = 1e-9;
/// Feasibility tolerance used when checking a returned clearing.
pub const FEAS_TOL: f64 = 1e-6;

/// State of one charge or discharge indicator in a branch-and-bound node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZState {
    /// Relaxed to `[0, 1]`.
    Free,
    Zero,
    One,
}

/// Indicator states for every period.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryAssignment {
    pub charge: Vec<ZState>,
    pub discharge: Vec<ZState>,
}

impl BinaryAssignment {
    pub fn relaxed(horizon: usize) -> Self {
        Self {
            charge: vec![ZState::Free; horizon],
            discharge: vec![ZState::Free; horizon],
        }
    }

    pub fn fixed(zc: &[bool], zd: &[bool]) -> Self {
        let st = |b: bool| if b { ZState::One } else { ZState::Zero };
        Self {
            charge: zc.iter().map(|&b| st(b)).collect(),
            discharge: zd.iter().map(|&b| st(b)).collect(),
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.charge
            .iter()
            .chain(&self.discharge)
            .all(|z| *z != ZState::Free)
    }

    /// All `3^T` assignments with `zc + zd <= 1`, in a fixed order.
    pub fn all_patterns(horizon: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let total = 3usize.pow(horizon as u32);
        for code in 0..total {
            let (mut zc, mut zd) = (vec![false; horizon], vec![false; horizon]);
            let mut c = code;
            for t in 0..horizon {
                match c % 3 {
                    1 => zc[t] = true,
                    2 => zd[t] = true,
                    _ => {}
                }
                c /= 3;
            }
            out.push(Self::fixed(&zc, &zd));
        }
        out
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if self.charge.len() != horizon || self.discharge.len() != horizon {
            return Err(Error::Usage(format!(
                "binary assignment covers {} / {} periods, horizon is {horizon}",
                self.charge.len(),
                self.discharge.len()
            )));
        }
        if let Some(t) = (0..horizon)
            .find(|&t| self.charge[t] == ZState::One && self.discharge[t] == ZState::One)
        {
            return Err(Error::Usage(format!("period {t}: zc + zd <= 1 violated")));
        }
        Ok(())
    }

    fn charge_allowed(&self, t: usize) -> bool {
        self.charge[t] != ZState::Zero && self.discharge[t] != ZState::One
    }

    fn discharge_allowed(&self, t: usize) -> bool {
        self.discharge[t] != ZState::Zero && self.charge[t] != ZState::One
    }
}

/// Optimal dispatch for one indicator assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dispatch {
    /// `p[i][t]`, MW.
    pub p: Vec<Vec<f64>>,
    pub pc: Vec<f64>,
    pub pd: Vec<f64>,
    /// State of charge at the start of each period, plus the terminal state.
    pub y: Vec<f64>,
    /// `theta[i][t]`, rad.
    pub theta: Vec<Vec<f64>>,
    /// Nodal prices `lambda[i][t]`, $/MWh: sensitivity of the optimal cost to
    /// the load at bus `i`, period `t`.
    pub lambda: Vec<Vec<f64>>,
    pub cost: f64,
    /// Labels of the inequality constraints that bind at the optimum.
    pub active: Vec<String>,
}

/// Result of clearing the market for one bid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClearingResult {
    pub p: Vec<Vec<f64>>,
    pub pc: Vec<f64>,
    pub pd: Vec<f64>,
    pub zc: Vec<u8>,
    pub zd: Vec<u8>,
    /// `y[0]` is the initial state; `y[T]` the terminal one.
    pub y: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub total_cost: f64,
    /// Branch-and-bound nodes created, including the root.
    pub node_count: usize,
    pub active: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Const(f64),
}

#[derive(Default)]
struct Expr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Expr {
    fn add(&mut self, slot: Slot, coef: f64) -> &mut Self {
        match slot {
            Slot::Var(j) => self.terms.push((j, coef)),
            Slot::Const(v) => self.constant += coef * v,
        }
        self
    }

    fn into_row(mut self) -> (LinRow, f64) {
        self.terms.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (j, v) in self.terms {
            match merged.last_mut() {
                Some((k, w)) if *k == j => *w += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        (LinRow(merged), self.constant)
    }
}

struct Model {
    qp: QpProblem,
    tags: Vec<String>,
    p: Vec<Vec<Slot>>,
    theta: Vec<Vec<Slot>>,
    pc: Vec<Slot>,
    pd: Vec<Slot>,
    y: Vec<Slot>,
    balance_rows: Vec<Vec<Option<usize>>>,
}

impl Model {
    fn eq(&mut self, e: Expr, rhs: f64, what: &str) -> Result<Option<usize>> {
        let (row, k) = e.into_row();
        if row.0.is_empty() {
            if (rhs - k).abs() > 1e-9 * (1.0 + rhs.abs()) {
                return Err(Error::Infeasible(format!(
                    "{what}: fixed terms violate equality"
                )));
            }
            return Ok(None);
        }
        Ok(Some(self.qp.add_eq(row, rhs - k)))
    }

    fn le(&mut self, e: Expr, rhs: f64, tag: String) -> Result<()> {
        let (row, k) = e.into_row();
        if row.0.is_empty() {
            if k > rhs + 1e-9 * (1.0 + rhs.abs()) {
                return Err(Error::Infeasible(format!(
                    "{tag}: fixed terms violate bound"
                )));
            }
            return Ok(());
        }
        self.qp.add_le(row, rhs - k);
        self.tags.push(tag);
        Ok(())
    }

    fn value(&self, x: &[f64], slot: Slot) -> f64 {
        match slot {
            Slot::Var(j) => x[j],
            Slot::Const(v) => v,
        }
    }
}

const FIXED_WIDTH: f64 = 1e-12;

fn build_model(inst: &MarketInstance, bid: &Bid, z: &BinaryAssignment) -> Result<Model> {
    let n_bus = inst.bus_count();
    let horizon = inst.horizon;
    let st = &inst.storage;
    let mut n = 0usize;
    let mut next = |fixed: Option<f64>| match fixed {
        Some(v) => Slot::Const(v),
        None => {
            n += 1;
            Slot::Var(n - 1)
        }
    };

    let gens: Vec<_> = (0..n_bus)
        .map(|i| {
            inst.generator_at(i)
                .ok_or_else(|| Error::InvalidInstance(vec![format!("bus {i} has no generator")]))
        })
        .collect::<Result<_>>()?;

    let p: Vec<Vec<Slot>> = gens
        .iter()
        .map(|g| {
            (0..horizon)
                .map(|_| next((g.capacity <= FIXED_WIDTH).then_some(0.0)))
                .collect()
        })
        .collect();
    let theta: Vec<Vec<Slot>> = (0..n_bus)
        .map(|i| {
            (0..horizon)
                .map(|_| next((i == inst.network.reference_bus).then_some(0.0)))
                .collect()
        })
        .collect();
    let power_fixed = bid.p_m <= FIXED_WIDTH;
    let pc: Vec<Slot> = (0..horizon)
        .map(|t| next((power_fixed || !z.charge_allowed(t)).then_some(0.0)))
        .collect();
    let pd: Vec<Slot> = (0..horizon)
        .map(|t| next((power_fixed || !z.discharge_allowed(t)).then_some(0.0)))
        .collect();
    if st.y_init > bid.e_m + 1e-9 {
        return Err(Error::Infeasible(format!(
            "initial state of charge {} exceeds bid capacity {}",
            st.y_init, bid.e_m
        )));
    }
    let energy_fixed = bid.e_m <= FIXED_WIDTH;
    let mut y = vec![Slot::Const(st.y_init)];
    y.extend((0..horizon).map(|_| next(energy_fixed.then_some(0.0))));

    let mut m = Model {
        qp: QpProblem::new(n),
        tags: Vec::new(),
        p,
        theta,
        pc,
        pd,
        y,
        balance_rows: vec![vec![None; horizon]; n_bus],
    };

    for (i, g) in gens.iter().enumerate() {
        for t in 0..horizon {
            if let Slot::Var(j) = m.p[i][t] {
                m.qp.q[(j, j)] = 2.0 * g.c;
                m.qp.c[j] = g.o;
            }
        }
    }

    // Nodal balance: p - L = storage net charge at its bus + net line outflow.
    for i in 0..n_bus {
        for t in 0..horizon {
            let mut e = Expr::default();
            e.add(m.p[i][t], 1.0);
            if i == st.bus {
                e.add(m.pc[t], -1.0).add(m.pd[t], 1.0);
            }
            for line in &inst.network.lines {
                let other = if line.from == i {
                    line.to
                } else if line.to == i {
                    line.from
                } else {
                    continue;
                };
                e.add(m.theta[i][t], -line.b).add(m.theta[other][t], line.b);
            }
            m.balance_rows[i][t] = m.eq(e, inst.loads[i][t], &format!("balance[{i},{t}]"))?;
        }
    }

    // State of charge dynamics, including the terminal state.
    for t in 0..horizon {
        let mut e = Expr::default();
        e.add(m.y[t + 1], 1.0)
            .add(m.y[t], -1.0)
            .add(m.pc[t], -st.eta_c)
            .add(m.pd[t], 1.0 / st.eta_d);
        m.eq(e, 0.0, &format!("soc[{t}]"))?;
    }

    for (i, g) in gens.iter().enumerate() {
        for t in 0..horizon {
            let mut lo = Expr::default();
            lo.add(m.p[i][t], -1.0);
            m.le(lo, 0.0, format!("p_min[{i},{t}]"))?;
            let mut hi = Expr::default();
            hi.add(m.p[i][t], 1.0);
            m.le(hi, g.capacity, format!("p_max[{i},{t}]"))?;
        }
        if g.ramp.is_finite() {
            for t in 0..horizon.saturating_sub(1) {
                let mut up = Expr::default();
                up.add(m.p[i][t + 1], 1.0).add(m.p[i][t], -1.0);
                m.le(up, g.ramp, format!("ramp_up[{i},{t}]"))?;
                let mut down = Expr::default();
                down.add(m.p[i][t], 1.0).add(m.p[i][t + 1], -1.0);
                m.le(down, g.ramp, format!("ramp_down[{i},{t}]"))?;
            }
        }
    }

    for t in 0..horizon {
        for (slot, name) in [(m.pc[t], "pc"), (m.pd[t], "pd")] {
            let mut lo = Expr::default();
            lo.add(slot, -1.0);
            m.le(lo, 0.0, format!("{name}_min[{t}]"))?;
            let mut hi = Expr::default();
            hi.add(slot, 1.0);
            m.le(hi, bid.p_m, format!("{name}_max[{t}]"))?;
        }
        if matches!((m.pc[t], m.pd[t]), (Slot::Var(_), Slot::Var(_))) {
            let mut e = Expr::default();
            e.add(m.pc[t], 1.0).add(m.pd[t], 1.0);
            m.le(e, bid.p_m, format!("pcd_sum[{t}]"))?;
        }
        let mut lo = Expr::default();
        lo.add(m.y[t + 1], -1.0);
        m.le(lo, 0.0, format!("soc_min[{}]", t + 1))?;
        let mut hi = Expr::default();
        hi.add(m.y[t + 1], 1.0);
        m.le(hi, bid.e_m, format!("soc_max[{}]", t + 1))?;
    }

    for (k, line) in inst.network.lines.iter().enumerate() {
        if !line.capacity.is_finite() {
            continue;
        }
        for t in 0..horizon {
            let mut fwd = Expr::default();
            fwd.add(m.theta[line.from][t], line.b)
                .add(m.theta[line.to][t], -line.b);
            m.le(fwd, line.capacity, format!("flow_fwd[{k},{t}]"))?;
            let mut rev = Expr::default();
            rev.add(m.theta[line.from][t], -line.b)
                .add(m.theta[line.to][t], line.b);
            m.le(rev, line.capacity, format!("flow_rev[{k},{t}]"))?;
        }
    }
    Ok(m)
}

/// Solve the convex dispatch problem with the indicators fixed or relaxed as
/// given by `z`. Returns [`Error::Infeasible`] if no dispatch exists.
pub fn solve_qp_fixed_binaries(
    inst: &MarketInstance,
    bid: &Bid,
    z: &BinaryAssignment,
) -> Result<Dispatch> {
    z.validate(inst.horizon)?;
    let m = build_model(inst, bid, z)?;
    let sol = qp::solve(&m.qp, &QpSettings::default())?;
    let x = &sol.x;
    let grid = |slots: &Vec<Vec<Slot>>| -> Vec<Vec<f64>> {
        slots
            .iter()
            .map(|row| row.iter().map(|&s| m.value(x, s)).collect())
            .collect()
    };
    let p = grid(&m.p);
    let cost = inst
        .generators
        .iter()
        .map(|g| p[g.bus].iter().map(|&v| g.c * v * v + g.o * v).sum::<f64>())
        .sum();
    // A balance row without free variables has no price; report 0 there.
    let lambda = m
        .balance_rows
        .iter()
        .map(|row| row.iter().map(|r| r.map_or(0.0, |k| -sol.y[k])).collect())
        .collect();
    let active = sol
        .s
        .iter()
        .zip(&m.qp.h)
        .zip(&m.tags)
        .filter(|((s, h), _)| **s <= 1e-7 * (1.0 + h.abs()))
        .map(|(_, tag)| tag.clone())
        .collect();
    Ok(Dispatch {
        theta: grid(&m.theta),
        pc: m.pc.iter().map(|&s| m.value(x, s)).collect(),
        pd: m.pd.iter().map(|&s| m.value(x, s)).collect(),
        y: m.y.iter().map(|&s| m.value(x, s)).collect(),
        p,
        lambda,
        cost,
        active,
    })
}

struct Node {
    bound: f64,
    id: usize,
    z: BinaryAssignment,
    dispatch: Dispatch,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap on the reverse: lowest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Indicator chosen for branching.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BranchVar {
    t: usize,
    charge: bool,
}

/// Minimal relaxed indicator values implied by a dispatch.
fn implied_z(d: &Dispatch, p_m: f64, t: usize) -> (f64, f64) {
    if p_m <= FIXED_WIDTH {
        (0.0, 0.0)
    } else {
        (d.pc[t] / p_m, d.pd[t] / p_m)
    }
}

/// Most fractional indicator among periods that charge and discharge at
/// once beyond `tol`; ties go to the earliest period, charge first.
fn branching_var(d: &Dispatch, p_m: f64, tol: f64) -> Option<BranchVar> {
    let mut best: Option<(BranchVar, f64)> = None;
    for t in 0..d.pc.len() {
        let (zc, zd) = implied_z(d, p_m, t);
        if zc.min(zd) <= tol {
            continue;
        }
        for (charge, v) in [(true, zc), (false, zd)] {
            let frac = v.min(1.0 - v);
            if best.is_none_or(|(_, f)| frac > f) {
                best = Some((BranchVar { t, charge }, frac));
            }
        }
    }
    best.map(|(b, _)| b)
}

/// Integer assignment whose feasible set contains the given relaxed dispatch
/// (when it is complementary). Idle periods default to charge-only.
fn rounded_assignment(z: &BinaryAssignment, d: &Dispatch, p_m: f64) -> BinaryAssignment {
    let horizon = z.charge.len();
    let (mut zc, mut zd) = (vec![false; horizon], vec![false; horizon]);
    for t in 0..horizon {
        let (c, dis) = implied_z(d, p_m, t);
        let charge = if !z.charge_allowed(t) {
            false
        } else if !z.discharge_allowed(t) {
            true
        } else {
            c >= dis
        };
        zc[t] = charge;
        zd[t] = !charge && z.discharge_allowed(t);
    }
    BinaryAssignment::fixed(&zc, &zd)
}

fn child(z: &BinaryAssignment, var: BranchVar, one: bool) -> BinaryAssignment {
    let mut out = z.clone();
    let state = if one { ZState::One } else { ZState::Zero };
    if var.charge {
        out.charge[var.t] = state;
        if one {
            out.discharge[var.t] = ZState::Zero;
        }
    } else {
        out.discharge[var.t] = state;
        if one {
            out.charge[var.t] = ZState::Zero;
        }
    }
    out
}

/// Clear the market exactly: minimize total generation cost over dispatch
/// and charge/discharge indicators by best-first branch-and-bound.
pub fn clear_market(inst: &MarketInstance, bid: &Bid) -> Result<ClearingResult> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    inst.check_bid(bid)?;
    let horizon = inst.horizon;
    let p_m = bid.p_m;

    let root_z = BinaryAssignment::relaxed(horizon);
    let root = match solve_qp_fixed_binaries(inst, bid, &root_z) {
        Ok(d) => d,
        Err(Error::Infeasible(msg)) => {
            let hint = inst
                .screening_violation()
                .map(|t| format!(" (period {t} load exceeds available capacity)"))
                .unwrap_or_default();
            return Err(Error::Infeasible(format!(
                "market cannot be cleared: {msg}{hint}"
            )));
        }
        Err(e) => return Err(e),
    };

    let mut node_count = 1;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root.cost,
        id: 0,
        z: root_z,
        dispatch: root,
    });
    let mut incumbent: Option<(BinaryAssignment, Dispatch)> = None;
    let inc_cost = |inc: &Option<(BinaryAssignment, Dispatch)>| {
        inc.as_ref().map_or(f64::INFINITY, |(_, d)| d.cost)
    };

    while let Some(node) = heap.pop() {
        if node.bound >= inc_cost(&incumbent) - PRUNE_TOL {
            break;
        }
        let mut branch = branching_var(&node.dispatch, p_m, INTEGRALITY_TOL);
        if branch.is_none() {
            let overlap = branching_var(&node.dispatch, p_m, 0.0);
            let (z_int, d_int) = if node.z.is_fixed() {
                (node.z.clone(), node.dispatch)
            } else {
                let z_int = rounded_assignment(&node.z, &node.dispatch, p_m);
                let d_int = solve_qp_fixed_binaries(inst, bid, &z_int)?;
                (z_int, d_int)
            };
            let gap = d_int.cost - node.bound;
            if d_int.cost < inc_cost(&incumbent) {
                incumbent = Some((z_int, d_int));
            }
            if gap > PRUNE_TOL * (1.0 + node.bound.abs()) {
                // Rounding lost value to sub-tolerance overlap; keep branching on it.
                branch = overlap;
            }
            if branch.is_none() {
                continue;
            }
        }
        let var = branch.expect("branching variable");
        for one in [true, false] {
            let z = child(&node.z, var, one);
            node_count += 1;
            let id = node_count - 1;
            match solve_qp_fixed_binaries(inst, bid, &z) {
                Ok(d) => {
                    if d.cost < inc_cost(&incumbent) - PRUNE_TOL {
                        heap.push(Node {
                            bound: d.cost,
                            id,
                            z,
                            dispatch: d,
                        });
                    }
                }
                Err(Error::Infeasible(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }

    let (z, d) = incumbent.ok_or_else(|| {
        Error::Infeasible("no charge/discharge assignment admits a feasible dispatch".into())
    })?;
    let result = ClearingResult {
        zc: z.charge.iter().map(|s| (*s == ZState::One) as u8).collect(),
        zd: z
            .discharge
            .iter()
            .map(|s| (*s == ZState::One) as u8)
            .collect(),
        p: d.p,
        pc: d.pc,
        pd: d.pd,
        y: d.y,
        theta: d.theta,
        lambda: d.lambda,
        total_cost: d.cost,
        node_count,
        active: d.active,
    };
    let problems = clearing_violations(inst, bid, &result);
    if !problems.is_empty() {
        return Err(Error::Numerical(format!(
            "clearing violates its constraints: {}",
            problems.join("; ")
        )));
    }
    Ok(result)
}

/// Check every constraint of the clearing model on a result, at
/// [`FEAS_TOL`]. Returns one message per violation.
pub fn clearing_violations(inst: &MarketInstance, bid: &Bid, r: &ClearingResult) -> Vec<String> {
    let mut v = Vec::new();
    let st = &inst.storage;
    let horizon = inst.horizon;
    let tol = FEAS_TOL;
    for t in 0..horizon {
        if r.zc[t] + r.zd[t] > 1 {
            v.push(format!("t={t}: zc + zd > 1"));
        }
        if r.pc[t] * r.pd[t] != 0.0 {
            v.push(format!(
                "t={t}: simultaneous charge {} and discharge {}",
                r.pc[t], r.pd[t]
            ));
        }
        if r.pc[t] < -tol || r.pc[t] > r.zc[t] as f64 * bid.p_m + tol {
            v.push(format!("t={t}: pc {} outside [0, zc p_m]", r.pc[t]));
        }
        if r.pd[t] < -tol || r.pd[t] > r.zd[t] as f64 * bid.p_m + tol {
            v.push(format!("t={t}: pd {} outside [0, zd p_m]", r.pd[t]));
        }
        let next = r.y[t] + st.eta_c * r.pc[t] - r.pd[t] / st.eta_d;
        if (r.y[t + 1] - next).abs() > tol {
            v.push(format!(
                "t={t}: state of charge dynamics off by {}",
                r.y[t + 1] - next
            ));
        }
    }
    for (t, &y) in r.y.iter().enumerate() {
        if y < -tol || y > bid.e_m + tol {
            v.push(format!("y[{t}] = {y} outside [0, e_m]"));
        }
    }
    for g in &inst.generators {
        let p = &r.p[g.bus];
        for t in 0..horizon {
            if p[t] < -tol || p[t] > g.capacity + tol {
                v.push(format!("p[{},{t}] = {} outside [0, P]", g.bus, p[t]));
            }
            if t + 1 < horizon && (p[t + 1] - p[t]).abs() > g.ramp + tol {
                v.push(format!("p[{}] ramp at t={t} exceeds K", g.bus));
            }
        }
    }
    for t in 0..horizon {
        if r.theta[inst.network.reference_bus][t] != 0.0 {
            v.push(format!("t={t}: reference angle nonzero"));
        }
        let mut net = vec![0.0; inst.bus_count()];
        for (k, line) in inst.network.lines.iter().enumerate() {
            let flow = line.b * (r.theta[line.from][t] - r.theta[line.to][t]);
            if flow.abs() > line.capacity + tol {
                v.push(format!("t={t}: line {k} flow {flow} exceeds F"));
            }
            net[line.from] += flow;
            net[line.to] -= flow;
        }
        for i in 0..inst.bus_count() {
            let storage = if i == st.bus { r.pc[t] - r.pd[t] } else { 0.0 };
            let mismatch = r.p[i][t] - inst.loads[i][t] - storage - net[i];
            if mismatch.abs() > tol {
                v.push(format!("t={t}: bus {i} balance off by {mismatch}"));
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::instance::{Generator, Line, Network, StoragePhysical};

    pub(crate) fn single_bus(loads: Vec<f64>, g: Generator, s: StoragePhysical) -> MarketInstance {
        MarketInstance {
            horizon: loads.len(),
            network: Network {
                reference_bus: 0,
                lines: vec![],
            },
            generators: vec![g],
            loads: vec![loads],
            storage: s,
        }
    }

    fn trivial() -> MarketInstance {
        single_bus(
            vec![100.0],
            Generator {
                bus: 0,
                c: 0.01,
                o: 10.0,
                capacity: 200.0,
                ramp: 1000.0,
            },
            StoragePhysical {
                bus: 0,
                e_max: 50.0,
                p_max: 50.0,
                eta_c: 1.0,
                eta_d: 1.0,
                y_init: 0.0,
            },
        )
    }

    fn arbitrage() -> MarketInstance {
        single_bus(
            vec![50.0, 150.0],
            Generator {
                bus: 0,
                c: 0.01,
                o: 0.0,
                capacity: 1000.0,
                ramp: 1000.0,
            },
            StoragePhysical {
                bus: 0,
                e_max: 50.0,
                p_max: 50.0,
                eta_c: 1.0,
                eta_d: 1.0,
                y_init: 0.0,
            },
        )
    }

    #[test]
    fn trivial_dispatch_and_price() {
        let d = solve_qp_fixed_binaries(
            &trivial(),
            &Bid::new(0.0, 0.0),
            &BinaryAssignment::relaxed(1),
        )
        .unwrap();
        assert!((d.p[0][0] - 100.0).abs() < 1e-9);
        assert!((d.cost - 1100.0).abs() < 1e-7);
        assert!((d.lambda[0][0] - 12.0).abs() < 1e-9);
        let r = clear_market(&trivial(), &Bid::new(0.0, 0.0)).unwrap();
        assert!((r.lambda[0][0] - 12.0).abs() < 1e-9);
        assert_eq!(r.pc, vec![0.0]);
    }

    #[test]
    fn arbitrage_closed_form() {
        let r = clear_market(&arbitrage(), &Bid::new(25.0, 25.0)).unwrap();
        assert!((r.pc[0] - 25.0).abs() < 1e-7 && (r.pd[1] - 25.0).abs() < 1e-7);
        assert_eq!((r.zc.clone(), r.zd.clone()), (vec![1, 0], vec![0, 1]));
        assert!((r.lambda[0][0] - 1.5).abs() < 1e-7);
        assert!((r.lambda[0][1] - 2.5).abs() < 1e-7);
        assert!((r.y[2]).abs() < 1e-7);
    }

    #[test]
    fn congested_two_bus_prices_split() {
        let mut inst = MarketInstance {
            horizon: 1,
            network: Network {
                reference_bus: 0,
                lines: vec![Line {
                    from: 0,
                    to: 1,
                    b: 100.0,
                    capacity: f64::INFINITY,
                }],
            },
            generators: vec![
                Generator {
                    bus: 0,
                    c: 0.01,
                    o: 10.0,
                    capacity: 500.0,
                    ramp: 1000.0,
                },
                Generator {
                    bus: 1,
                    c: 0.02,
                    o: 20.0,
                    capacity: 500.0,
                    ramp: 1000.0,
                },
            ],
            loads: vec![vec![20.0], vec![150.0]],
            storage: StoragePhysical {
                bus: 1,
                e_max: 10.0,
                p_max: 10.0,
                eta_c: 0.9,
                eta_d: 0.9,
                y_init: 0.0,
            },
        };
        let r = clear_market(&inst, &Bid::new(0.0, 0.0)).unwrap();
        assert!((r.lambda[0][0] - r.lambda[1][0]).abs() < 1e-7);
        inst.network.lines[0].capacity = 40.0;
        let r = clear_market(&inst, &Bid::new(0.0, 0.0)).unwrap();
        assert!(r.lambda[1][0] > r.lambda[0][0] + 1.0);
        assert!(r.active.iter().any(|a| a.starts_with("flow_fwd[0")));
    }

    #[test]
    fn infeasible_assignment_is_reported() {
        // Load 300 > generation 200: storage must discharge, impossible with zd = 0 and y_init = 0.
        let mut inst = trivial();
        inst.loads = vec![vec![300.0]];
        inst.storage.y_init = 0.0;
        let z = BinaryAssignment::fixed(&[false], &[false]);
        let out = solve_qp_fixed_binaries(&inst, &Bid::new(50.0, 50.0), &z);
        assert!(matches!(out, Err(Error::Infeasible(_))), "{out:?}");
    }

    #[test]
    fn unservable_load_names_period() {
        let mut inst = trivial();
        inst.horizon = 2;
        inst.loads = vec![vec![100.0, 260.0]];
        let err = clear_market(&inst, &Bid::new(10.0, 10.0)).unwrap_err();
        assert!(
            matches!(err, Error::InvalidInstance(ref v) if v.iter().any(|m| m.contains("period 1"))),
            "{err}"
        );
    }

    #[test]
    fn small_bid_cannot_cover_peak() {
        let mut inst = trivial();
        inst.horizon = 2;
        inst.loads = vec![vec![100.0, 240.0]];
        assert!(matches!(
            clear_market(&inst, &Bid::new(10.0, 10.0)),
            Err(Error::Infeasible(_))
        ));
        assert!(clear_market(&inst, &Bid::new(50.0, 50.0)).is_ok());
    }

    #[test]
    fn invalid_assignment_is_usage_error() {
        let z = BinaryAssignment {
            charge: vec![ZState::One],
            discharge: vec![ZState::One],
        };
        assert!(matches!(
            solve_qp_fixed_binaries(&trivial(), &Bid::new(1.0, 1.0), &z),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn pattern_enumeration_count() {
        let pats = BinaryAssignment::all_patterns(3);
        assert_eq!(pats.len(), 27);
        assert!(pats.iter().all(|z| z.is_fixed()));
        let unique: std::collections::HashSet<_> = pats.into_iter().collect();
        assert_eq!(unique.len(), 27);
    }

    #[test]
    fn clearing_is_deterministic() {
        let a = clear_market(&arbitrage(), &Bid::new(30.0, 20.0)).unwrap();
        let b = clear_market(&arbitrage(), &Bid::new(30.0, 20.0)).unwrap();
        assert_eq!(a.node_count, b.node_count);
        assert_eq!(a.total_cost.to_bits(), b.total_cost.to_bits());
        assert_eq!(a.lambda, b.lambda);
    }

    #[test]
    fn bid_outside_box_rejected() {
        assert!(matches!(
            clear_market(&arbitrage(), &Bid::new(60.0, 10.0)),
            Err(Error::Usage(_))
        ));
    }
}
