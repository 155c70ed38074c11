#![allow(dead_code)]

use rand::Rng;
use surrobid_core::market::{
    clear_market, solve_qp_fixed_binaries, Bid, BinaryAssignment, Generator, Line, MarketInstance,
    Network, StoragePhysical,
};
use surrobid_core::sampling::rng_from_seed;
use surrobid_core::Error;

/// Small random instance (at most 3 buses, 4 periods) and a random bid.
pub fn random_instance(seed: u64) -> (MarketInstance, Bid) {
    let mut rng = rng_from_seed(seed);
    let n_bus = rng.random_range(1..=3usize);
    let horizon = rng.random_range(1..=4usize);
    let mut lines = Vec::new();
    for i in 1..n_bus {
        let from = rng.random_range(0..i);
        lines.push(random_line(&mut rng, from, i));
    }
    if n_bus == 3 && rng.random_bool(0.5) {
        lines.push(random_line(&mut rng, 0, 2));
    }
    let generators = (0..n_bus)
        .map(|bus| Generator {
            bus,
            c: if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.005..0.05)
            },
            o: rng.random_range(5.0..30.0),
            capacity: rng.random_range(80.0..150.0),
            ramp: if rng.random_bool(0.3) {
                f64::INFINITY
            } else {
                rng.random_range(20.0..100.0)
            },
        })
        .collect();
    let loads = (0..n_bus)
        .map(|_| (0..horizon).map(|_| rng.random_range(0.0..60.0)).collect())
        .collect();
    let e_max = rng.random_range(10.0..60.0);
    let storage = StoragePhysical {
        bus: rng.random_range(0..n_bus),
        e_max,
        p_max: rng.random_range(5.0..40.0),
        eta_c: rng.random_range(0.8..=1.0),
        eta_d: rng.random_range(0.8..=1.0),
        y_init: rng.random_range(0.0..e_max / 2.0),
    };
    let bid = Bid::new(
        rng.random_range(storage.y_init..=e_max),
        rng.random_range(0.0..=storage.p_max),
    );
    let inst = MarketInstance {
        horizon,
        network: Network {
            reference_bus: rng.random_range(0..n_bus),
            lines,
        },
        generators,
        loads,
        storage,
    };
    (inst, bid)
}

fn random_line(rng: &mut impl Rng, from: usize, to: usize) -> Line {
    Line {
        from,
        to,
        b: rng.random_range(5.0..20.0),
        capacity: if rng.random_bool(0.5) {
            f64::INFINITY
        } else {
            rng.random_range(10.0..60.0)
        },
    }
}

/// Minimum cost over all `3^T` charge/discharge patterns; `None` if none is feasible.
pub fn enumerate_patterns(inst: &MarketInstance, bid: &Bid) -> Option<f64> {
    let mut best: Option<f64> = None;
    for z in BinaryAssignment::all_patterns(inst.horizon) {
        match solve_qp_fixed_binaries(inst, bid, &z) {
            Ok(d) => best = Some(best.map_or(d.cost, |b| b.min(d.cost))),
            Err(Error::Infeasible(_)) => {}
            Err(e) => panic!("pattern solve failed: {e}"),
        }
    }
    best
}

pub struct LmpProbe {
    pub checked: usize,
    pub skipped: usize,
    pub worst_rel: f64,
}

/// Compare every nodal price with the central difference of the optimal
/// cost under a +-eps load change, wherever the probe keeps the binary
/// pattern and active set unchanged.
pub fn probe_lmps(inst: &MarketInstance, bid: &Bid, eps: f64) -> LmpProbe {
    let base = clear_market(inst, bid).expect("base clearing");
    let mut out = LmpProbe {
        checked: 0,
        skipped: 0,
        worst_rel: 0.0,
    };
    for i in 0..inst.bus_count() {
        for t in 0..inst.horizon {
            let shifted = |delta: f64| {
                let mut m = inst.clone();
                m.loads[i][t] += delta;
                clear_market(&m, bid).ok()
            };
            let (Some(up), Some(down)) = (shifted(eps), shifted(-eps)) else {
                out.skipped += 1;
                continue;
            };
            let stable = [&up, &down]
                .iter()
                .all(|r| r.zc == base.zc && r.zd == base.zd && r.active == base.active);
            if !stable {
                out.skipped += 1;
                continue;
            }
            let fd = (up.total_cost - down.total_cost) / (2.0 * eps);
            let lam = base.lambda[i][t];
            let rel = (lam - fd).abs() / lam.abs().max(1.0);
            out.worst_rel = out.worst_rel.max(rel);
            out.checked += 1;
        }
    }
    out
}
