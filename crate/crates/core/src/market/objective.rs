use std::sync::Arc;

use super::clearing::{clear_market, ClearingResult};
use super::instance::{Bid, MarketInstance};
use crate::error::Result;
use crate::optimizer::Objective;
use crate::sampling::Bounds;

/// Storage revenue at its own bus: `sum_t lambda[t] (pd[t] - pc[t])`.
pub fn storage_profit(inst: &MarketInstance, r: &ClearingResult) -> f64 {
    let prices = &r.lambda[inst.storage.bus];
    (0..inst.horizon)
        .map(|t| prices[t] * (r.pd[t] - r.pc[t]))
        .sum()
}

/// Profit for a bid, after clearing the market.
pub fn bid_profit(inst: &MarketInstance, bid: &Bid) -> Result<f64> {
    let r = clear_market(inst, bid)?;
    Ok(storage_profit(inst, &r))
}

/// Bid box `[0, E_max] x [0, P_max]`.
pub fn bid_bounds(inst: &MarketInstance) -> Result<Bounds> {
    Bounds::new(vec![0.0, 0.0], vec![inst.storage.e_max, inst.storage.p_max])
}

/// Black-box objective over `(e_m, p_m)`: negative storage profit.
pub fn bidding_objective(inst: MarketInstance) -> Result<Objective> {
    let bounds = bid_bounds(&inst)?;
    let inst = Arc::new(inst);
    Ok(Objective::new(bounds, move |x: &[f64]| {
        bid_profit(&inst, &Bid::new(x[0], x[1])).map(|p| -p)
    }))
}
