//! User association for two-tier sub-6 / mmWave heterogeneous networks.
//!
//! The crate builds a network ([`netgen`]), draws channels ([`channel`]),
//! derives SVD beamformers ([`beamform`]) and evaluates interference-aware
//! MIMO rates ([`rate`]). Associations come from two distributed matching
//! games ([`matching`]), a centralised swap search ([`wcs`]) or exhaustive
//! enumeration ([`oracle`]). [`experiment`] runs Monte-Carlo grids and
//! [`metrics`] summarises them.
//!
//! ```
//! use hetnet_assoc::prelude::*;
//! use rand::SeedableRng;
//!
//! let config = NetworkConfig::default();
//! let topology = generate_topology(&config, 3).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
//! let channels = build_channel_set(&topology, &config, &mut rng).unwrap();
//! let engine = RateEngine::new(&channels, &config).unwrap();
//!
//! let start = random_feasible_activation(&config.quotas, config.num_ues, &mut rng).unwrap();
//! let ea = run_matching_algorithm(Game::EarlyAcceptance, &engine, &config.quotas, start, 50).unwrap();
//! assert!(ea.activation.check_feasible(&config).is_ok());
//! assert!(ea.sum_rate >= ea.initial_sum_rate);
//! ```

pub mod beamform;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod matching;
pub mod metrics;
pub mod netgen;
pub mod oracle;
pub mod rate;
pub mod scenario;
pub mod wcs;

pub use error::{ConfigIssue, Error, Result};

/// The types and entry points most programs need.
pub mod prelude {
    pub use crate::beamform::{build_beamforming_set, svd_directions, BeamformingSet, LinkDirections};
    pub use crate::channel::{build_channel_set, ChannelSet};
    pub use crate::error::{Error, Result};
    pub use crate::experiment::{run_experiment, run_scaling_sweep, ExperimentPlan};
    pub use crate::matching::{
        build_preferences, random_feasible_activation, run_da, run_ea, run_matching_algorithm, Game,
        PreferenceMatrices,
    };
    pub use crate::metrics::{aggregate, GroupBy, RunRecord, Solver};
    pub use crate::netgen::{generate_topology, NetworkConfig};
    pub use crate::oracle::{brute_force_optimum, EnumerationBudget};
    pub use crate::rate::{Activation, RateEngine, RateMatrix};
    pub use crate::wcs::run_wcs;
}

/// Guide chapters compiled as doc-tests so their snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
