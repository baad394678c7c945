//! Windowed food-delivery dispatch: a time-dependent road network, route
//! planning with pickup-before-dropoff precedence, an income-fairness-aware
//! bipartite allocator with delivery-time baselines, a deterministic
//! discrete-event simulator and the inequality/efficiency metrics computed
//! from its event log.

pub mod allocator;
pub mod dispatch;
pub mod metrics;
pub mod roadnet;
pub mod simulator;
pub mod workload;

/// Seconds of simulated time.
pub type Seconds = f64;

/// Seconds since midnight of day zero.
pub type Timestamp = f64;

pub use roadnet::{NodeId, RoadNetwork, VehicleId};
