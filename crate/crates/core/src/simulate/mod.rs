//! Seeded generators for Poisson, log-Gaussian Cox, Thomas and Strauss processes.

mod lgcp;
mod poisson;
mod rng;
mod scenario;
mod strauss;
mod thomas;

pub use lgcp::{sim_lgcp, CirculantEmbedding, LgcpSampler, DEFAULT_LGCP_GRID, NEGATIVE_MASS_TOL};
pub use poisson::{sim_poisson_homog, sim_poisson_inhom, IntensityFn};
pub use rng::{replicate_seed, rng_from_seed, SimRng};
pub use scenario::{run_scenario, Family, Scenario, ScenarioSpec};
pub use strauss::{
    calibrate_strauss_beta, run_strauss_chain, sim_strauss, StraussChain, StraussParams,
    DEFAULT_STRAUSS_ITERATIONS,
};
pub use thomas::{sim_thomas, PARENT_MARGIN_SIGMAS};
