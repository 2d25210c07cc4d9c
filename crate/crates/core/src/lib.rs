//! Betti number estimation for point clouds.
//!
//! The pipeline: build a Vietoris-Rips filtration of the cloud and compute
//! its persistence diagram, turn one homology level into a sorted sample of
//! feature lifetimes, fit a Bayesian no-gaps random-partition model over the
//! log-lifetimes by split-merge MCMC, and read two Betti point estimates off
//! the posterior — one from the modal partition and the overlap of its
//! mixture components, one from the per-lifetime block-start probabilities.
//!
//! ```
//! use bettibayes::{
//!     estimators::summarize,
//!     homology::zero_dim_persistence,
//!     lifetimes::extract_lifetimes,
//!     sampler::{run_chain, ChainConfig, GammaPrior},
//!     partition::NormalGammaParams,
//!     synthgen::GeneratorConfig,
//! };
//!
//! let cloud = GeneratorConfig::circles(2, 120, 5.0, 5.0, 0.0, 7)
//!     .sample()
//!     .unwrap();
//! let diagram = zero_dim_persistence(&cloud, bettibayes::homology::enclosing_eps_max(&cloud))
//!     .unwrap();
//! let sample = extract_lifetimes(&diagram, 0).unwrap();
//! let cfg = ChainConfig {
//!     burn_in: 1_000,
//!     samples: 1_000,
//!     thin: 1,
//!     prior: NormalGammaParams::new(0.0, 0.5, 1.1, 0.1).unwrap(),
//!     theta_prior: GammaPrior::new(1.1, 0.1).unwrap(),
//!     theta_init: 1.0,
//!     seed: 7,
//! };
//! let out = run_chain(sample.logs(), &cfg).unwrap();
//! let summary = summarize(&out, &sample, &cfg.prior, 0.3, 0.03).unwrap();
//! assert_eq!(summary.beta_hat, Some(2));
//! ```

pub mod cloud;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod homology;
pub mod io;
pub mod lifetimes;
pub mod partition;
pub mod sampler;
pub mod synthgen;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use estimators::PosteriorSummary;
pub use homology::{Filtration, PersistenceDiagram, Simplex};
pub use lifetimes::LifetimeSample;
pub use partition::{Composition, NormalGammaParams};
pub use sampler::{ChainConfig, ChainOutput, ChainState, GammaPrior};
pub use synthgen::GeneratorConfig;
