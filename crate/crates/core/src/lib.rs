//! Budgeted team assembly for collaborative crowdsourcing.
//!
//! Each step the controller observes the available workers per skill and the
//! incoming task requests, decides how many offline workers to mobilize per
//! skill under a per-step budget, and forms teams. A drift-plus-penalty
//! score `q_m - rho * c_m / r_m` trades queue stability against profit.
//!
//! [`simulator::run`] drives a seeded market; [`oracle`] holds exhaustive
//! searches used to check the controller; [`metrics`] turns traces into
//! reports.

pub mod cli;
pub mod demand;
pub mod domain;
pub mod fixtures;
pub mod generate;
pub mod metrics;
pub mod oracle;
pub mod reputation;
pub mod scheduler;
pub mod simulator;

pub use domain::{validate_config, MarketConfig};
pub use oracle::Policy;
pub use simulator::{run, SimulationTrace};
