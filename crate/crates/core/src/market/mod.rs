//! Storage-participating electricity market: instances, exact clearing and
//! the storage owner's bid objective.

mod clearing;
mod instance;
mod objective;

pub use clearing::{
    clear_market, clearing_violations, solve_qp_fixed_binaries, BinaryAssignment, ClearingResult,
    Dispatch, ZState, FEAS_TOL, INTEGRALITY_TOL, PRUNE_TOL,
};
pub use instance::{
    validate_instance, Bid, Generator, Line, MarketInstance, Network, StoragePhysical,
};
pub use objective::{bid_bounds, bid_profit, bidding_objective, storage_profit};
