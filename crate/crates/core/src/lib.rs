pub mod cli;
pub mod covert_opt;
pub mod covertness;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod scalar;
pub mod secrecy_analysis;
pub mod secrecy_opt;
pub mod specfun;
pub mod validation;

/// Double-precision instantiations used by the simulation layers.
pub type Params = model::SystemParams<f64>;
pub type Allocation = model::PowerAllocation<f64>;
pub type Channels = model::ChannelRealization<f64>;
