//! Stability analysis and simulation of dynamical flow networks.

pub mod analysis;
pub mod certificates;
pub mod error;
pub mod export;
pub mod flow;
pub mod inflow;
pub mod model;
pub mod multicommodity;
pub mod network;
pub mod reproduce;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use model::FlowNetwork;
