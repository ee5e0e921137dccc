//! Monte Carlo probes of the sampled processes.
//!
//! Every probe draws `replicates` independent paths, replicate `r` using the
//! stream `StreamSeed::new(seed).named(probe).child(r)`, so results are
//! bit-reproducible regardless of thread count. Each probe returns a
//! [`DiagnosticsReport`] holding estimates with standard errors and verdicts
//! against the tolerances declared in [`Tolerances`].

mod config;
mod probes;
mod report;

pub use config::{ProbeConfig, Tolerances, MIN_KS_REPLICATES, MIN_REPLICATES};
pub use probes::{
    association_probe, continuity_modulus_probe, default_decay_shells, kl_support_probe, marginal_beta_probe,
    mixture_tv_modulus_probe, support_probe, tv_contrast_probe, ModulusAxis,
};
pub use report::{DiagnosticsReport, Outcome, Row, Verdict};

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::StreamSeed;

/// Runs `f` once per replicate, in parallel, returning results in replicate order.
pub fn run_replicates<T, F>(n: usize, seed: &StreamSeed, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&StreamSeed) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|r| f(&seed.child(r as u64)))
        .collect()
}
