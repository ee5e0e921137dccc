use serde::{Deserialize, Serialize};

use crate::ddp::{DdpModel, TestFunctionPanel};
use crate::error::{DsbError, Result};
use crate::index_space::{Domain, IndexPoint, LocationSet};

pub const MIN_REPLICATES: usize = 100;
pub const MIN_KS_REPLICATES: usize = 1_000;

/// Thresholds that turn estimates into verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// KS significance level.
    pub ks_level: f64,
    /// Allowed monotonicity violation, in standard errors.
    pub monotone_se: f64,
    /// Final-to-first ratio bound for continuity moduli.
    pub modulus_ratio: f64,
    /// Upper bound on the thetaDDP TV estimate at the smallest ladder step.
    pub tv_theta_max: f64,
    /// Lower bound on DDP / wDDP TV estimates at every positive distance.
    pub tv_moving_min: f64,
    /// Far-distance correlation bound, in standard errors.
    pub association_far_se: f64,
    /// Two-sided level of binomial confidence intervals.
    pub ci_level: f64,
    /// Mixture normalization tolerance.
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ks_level: 0.01,
            monotone_se: 2.0,
            modulus_ratio: 0.25,
            tv_theta_max: 0.2,
            tv_moving_min: 1.9,
            association_far_se: 3.0,
            ci_level: 0.05,
            normalization: 1e-6,
        }
    }
}

/// One run description shared by all probes.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub model: DdpModel,
    pub domain: Domain,
    pub x0: IndexPoint,
    /// Strictly decreasing positive distances from `x0` along the first axis.
    pub ladder: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub panel: TestFunctionPanel,
    pub epsilon: Vec<f64>,
    pub tolerances: Tolerances,
}

impl ProbeConfig {
    pub fn new(
        model: DdpModel,
        domain: Domain,
        x0: IndexPoint,
        ladder: Vec<f64>,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        let panel = TestFunctionPanel::default_for(&model.atoms)?;
        let cfg = Self {
            model,
            domain,
            x0,
            ladder,
            replicates,
            seed,
            panel,
            epsilon: vec![0.25],
            tolerances: Tolerances::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(DsbError::Config(format!(
                "replicates = {} is below the minimum of {MIN_REPLICATES}",
                self.replicates
            )));
        }
        if self.ladder.iter().any(|d| !(d.is_finite() && *d > 0.0)) || self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(DsbError::Config("ladder must be positive and strictly decreasing".into()));
        }
        if self.epsilon.iter().any(|e| !(*e > 0.0)) {
            return Err(DsbError::Config("every epsilon must be positive".into()));
        }
        if !self.domain.contains(&self.x0) {
            return Err(DsbError::Config("x0 lies outside the domain".into()));
        }
        Ok(())
    }

    pub fn with_variant(&self, variant: crate::ddp::Variant) -> Result<Self> {
        let mut out = self.clone();
        out.model = DdpModel::new(variant, self.model.sticks.clone(), self.model.atoms.clone())?;
        Ok(out)
    }

    /// `x0` followed by the ladder points.
    pub fn ladder_locations(&self) -> Result<LocationSet> {
        LocationSet::ladder(self.domain.clone(), &self.x0, &self.ladder)
    }

    /// Stable 64-bit FNV-1a digest of the configuration, hex encoded.
    pub fn digest(&self, extra: &str) -> String {
        let text = format!("{self:?}|{extra}");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
        format!("{h:016x}")
    }
}
