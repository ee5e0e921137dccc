//! Simulation of dependent Dirichlet processes (DDP, wDDP, thetaDDP) on
//! Euclidean index spaces, their induced mixture densities, and a Monte Carlo
//! harness that checks continuity, support, association and KL-support
//! properties of the sampled paths.
//!
//! The pipeline is
//!
//! ```text
//! LocationSet -> latent Gaussian fields -> sticks V_i(x) / atoms theta_i(x)
//!             -> TruncatedWeights + AtomField -> MeasureField -> mixture densities
//! ```
//!
//! and [`diagnostics`] runs replicated versions of it.

pub mod atom_process;
pub mod ddp;
pub mod diagnostics;
pub mod error;
pub mod index_space;
pub mod latent_field;
pub mod mixture;
pub mod rng;
pub mod stats;
pub mod stick_process;
pub mod table;

pub use atom_process::{AtomField, AtomSpec, AtomVariant, Marginal};
pub use ddp::{DdpModel, DiscreteMeasure, MeasureField, TestFunction, TestFunctionPanel, Variant};
pub use error::{DsbError, Result};
pub use index_space::{build_grid, distance, Domain, IndexPoint, LocationSet};
pub use latent_field::{CovKernelSpec, LatentField};
pub use mixture::{DensityGrid, MixtureKernel};
pub use rng::StreamSeed;
pub use stick_process::{Alpha, StickSpec, TruncatedWeights, Truncation};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
