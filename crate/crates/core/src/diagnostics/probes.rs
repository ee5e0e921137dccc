use crate::atom_process::Marginal;
use crate::ddp::{tv_distance, weak_panel_distance, MeasureField, Variant};
use crate::error::{DsbError, Result};
use crate::index_space::LocationSet;
use crate::mixture::{
    check_decay_condition, kl_divergence, l1_distance, mixture_density, DensityField, DensityGrid, MixtureKernel,
};
use crate::rng::StreamSeed;
use crate::stats::{clopper_pearson, ks_test, pearson_jackknife, Summary};
use crate::stick_process::{beta_cdf, StickSampler, StickSpec, Truncation};
use crate::table::fmt_f64;

use super::config::{ProbeConfig, MIN_KS_REPLICATES};
use super::report::{DiagnosticsReport, Row, Verdict};
use super::run_replicates;

/// Null standard deviation of sqrt(n) * D for the Kolmogorov distribution.
const KOLMOGOROV_SD: f64 = 0.2603;

fn d_label(d: f64) -> String {
    format!("d={}", fmt_f64(d))
}

fn column(values: &[Vec<f64>], k: usize) -> Vec<f64> {
    values.iter().map(|v| v[k]).collect()
}

/// Adds rows for each ladder column plus paired-difference monotonicity verdicts.
///
/// `values[r][k]` is replicate `r` at ladder step `k`; steps run from the
/// largest distance to the smallest, so estimates should not increase.
fn ladder_rows(report: &mut DiagnosticsReport, prefix: &str, ladder: &[f64], values: &[Vec<f64>], se_mult: f64) -> Vec<Summary> {
    let summaries: Vec<Summary> = (0..ladder.len()).map(|k| Summary::of(&column(values, k))).collect();
    for (d, s) in ladder.iter().zip(&summaries) {
        report.rows.push(Row::new(format!("{prefix}{}", d_label(*d)), s.mean, s.stderr, s.n));
    }
    for k in 0..ladder.len().saturating_sub(1) {
        let diffs: Vec<f64> = values.iter().map(|v| v[k + 1] - v[k]).collect();
        let s = Summary::of(&diffs);
        report.verdicts.push(Verdict::new(
            format!(
                "{prefix}nonincreasing {} -> {}",
                d_label(ladder[k]),
                d_label(ladder[k + 1])
            ),
            se_mult,
            if s.stderr > 0.0 { s.mean / s.stderr } else if s.mean > 0.0 { f64::INFINITY } else { 0.0 },
            s.mean <= se_mult * s.stderr,
        ));
    }
    summaries
}

/// KS test of the first stick `V_{1,x}` at each location against Beta(1, alpha(x)),
/// or against Beta(1, `test_alpha`) when given.
pub fn marginal_beta_probe(cfg: &ProbeConfig, locs: &LocationSet, test_alpha: Option<f64>) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    if cfg.replicates < MIN_KS_REPLICATES {
        return Err(DsbError::Config(format!(
            "marginal probe needs at least {MIN_KS_REPLICATES} replicates, got {}",
            cfg.replicates
        )));
    }
    let spec = StickSpec::new(cfg.model.sticks.alpha.clone(), cfg.model.sticks.kernel, Truncation::Sticks(1))?;
    let sampler = StickSampler::new(&spec, locs)?;
    let seed = StreamSeed::new(cfg.seed).named("marginal_beta");
    let draws = run_replicates(cfg.replicates, &seed, |s| Ok(sampler.sample(s).row(0).iter().copied().collect::<Vec<f64>>()))?;

    let mut report = DiagnosticsReport::new(
        "marginal_beta",
        cfg.digest(&format!("marginal_beta|{locs:?}|{test_alpha:?}")),
        cfg.seed,
    );
    let n = cfg.replicates;
    for (j, x) in locs.points().iter().enumerate() {
        let alpha = match test_alpha {
            Some(a) => a,
            None => spec.alpha.at(x)?,
        };
        let ks = ks_test(&column(&draws, j), |v| beta_cdf(v, alpha))?;
        report.rows.push(Row::new(
            format!("ks_statistic[loc={j}]"),
            ks.statistic,
            KOLMOGOROV_SD / (n as f64).sqrt(),
            n,
        ));
        report.verdicts.push(Verdict::new(
            format!("ks_p_value[loc={j}] > level (alpha={})", fmt_f64(alpha)),
            cfg.tolerances.ks_level,
            ks.p_value,
            ks.p_value > cfg.tolerances.ks_level,
        ));
    }
    Ok(report)
}

/// `E[weak_panel_distance(G_x, G_x0)]` along the ladder.
pub fn continuity_modulus_probe(cfg: &ProbeConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let locs = cfg.ladder_locations()?;
    let sampler = cfg.model.prepare(&locs)?;
    let seed = StreamSeed::new(cfg.seed).named("continuity_modulus").named(cfg.model.variant.name());
    let k = cfg.ladder.len();
    let values = run_replicates(cfg.replicates, &seed, |s| {
        let path = sampler.sample(s)?;
        let mut v = Vec::with_capacity(k + 1);
        v.push(weak_panel_distance(path.at(0), path.at(0), &cfg.panel));
        v.extend((1..=k).map(|j| weak_panel_distance(path.at(j), path.at(0), &cfg.panel)));
        Ok(v)
    })?;

    let mut report = DiagnosticsReport::new(
        "continuity_modulus",
        cfg.digest("continuity_modulus"),
        cfg.seed,
    );
    let zero = Summary::of(&column(&values, 0));
    report.rows.push(Row::new(format!("{} d=0", cfg.model.variant), zero.mean, zero.stderr, zero.n));
    let shifted: Vec<Vec<f64>> = values.iter().map(|v| v[1..].to_vec()).collect();
    let prefix = format!("{} ", cfg.model.variant);
    let sums = ladder_rows(&mut report, &prefix, &cfg.ladder, &shifted, cfg.tolerances.monotone_se);
    if let (Some(first), Some(last)) = (sums.first(), sums.last()) {
        let ratio = last.mean / first.mean;
        report.verdicts.push(Verdict::new(
            format!("{prefix}final/first modulus ratio"),
            cfg.tolerances.modulus_ratio,
            ratio,
            ratio < cfg.tolerances.modulus_ratio,
        ));
    }
    Ok(report)
}

/// Paired `E[tv_distance(G_x, G_x0)]` columns for thetaDDP, DDP and wDDP.
pub fn tv_contrast_probe(cfg: &ProbeConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let locs = cfg.ladder_locations()?;
    let mut report = DiagnosticsReport::new("tv_contrast", cfg.digest("tv_contrast"), cfg.seed);
    let k = cfg.ladder.len();
    for variant in [Variant::ThetaDdp, Variant::Ddp, Variant::WDdp] {
        let vcfg = cfg.with_variant(variant)?;
        let sampler = vcfg.model.prepare(&locs)?;
        let seed = StreamSeed::new(cfg.seed).named("tv_contrast").named(variant.name());
        let values = run_replicates(cfg.replicates, &seed, |s| {
            let path = sampler.sample(s)?;
            let mut v = Vec::with_capacity(k + 1);
            v.push(tv_distance(path.at(0), path.at(0)));
            v.extend((1..=k).map(|j| tv_distance(path.at(j), path.at(0))));
            Ok(v)
        })?;
        let zero = Summary::of(&column(&values, 0));
        report.rows.push(Row::new(format!("{variant} d=0"), zero.mean, zero.stderr, zero.n));
        let shifted: Vec<Vec<f64>> = values.iter().map(|v| v[1..].to_vec()).collect();
        let prefix = format!("{variant} ");
        if variant == Variant::ThetaDdp {
            let sums = ladder_rows(&mut report, &prefix, &cfg.ladder, &shifted, cfg.tolerances.monotone_se);
            if let Some(last) = sums.last() {
                report.verdicts.push(Verdict::new(
                    format!("thetaDDP TV at {} below bound", d_label(*cfg.ladder.last().expect("nonempty"))),
                    cfg.tolerances.tv_theta_max,
                    last.mean,
                    last.mean < cfg.tolerances.tv_theta_max,
                ));
            }
        } else {
            for (j, d) in cfg.ladder.iter().enumerate() {
                let s = Summary::of(&column(&shifted, j));
                report.rows.push(Row::new(format!("{prefix}{}", d_label(*d)), s.mean, s.stderr, s.n));
                report.verdicts.push(Verdict::new(
                    format!("{prefix}TV at {} stays above bound", d_label(*d)),
                    cfg.tolerances.tv_moving_min,
                    s.mean,
                    s.mean >= cfg.tolerances.tv_moving_min,
                ));
            }
        }
    }
    Ok(report)
}

/// Prior mass `G0(B)` of a box under independent coordinate marginals.
fn base_mass(marginals: &[Marginal], region: &[(f64, f64)]) -> f64 {
    marginals
        .iter()
        .zip(region)
        .map(|(m, (lo, hi))| m.cdf(*hi) - m.cdf(*lo))
        .product()
}

/// Pearson correlation of `G_x0(B)` and `G_{x0 + d}(B)` along the ladder, and
/// at `far` when given.
pub fn association_probe(cfg: &ProbeConfig, region: &[(f64, f64)], far: Option<f64>) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let name_b = format!("B={region:?}");
    if region.len() != cfg.model.atoms.theta_dim() {
        return Err(DsbError::Probe(format!("{name_b} does not match the atom dimension")));
    }
    let g0 = base_mass(cfg.model.atoms.marginals(), region);
    if !(g0 > 0.0 && g0 < 1.0) {
        return Err(DsbError::Probe(format!("{name_b} has base mass {g0}; correlation is degenerate")));
    }
    let mut ladder = cfg.ladder.clone();
    if let Some(f) = far {
        if ladder.first().is_some_and(|d| *d <= f) || ladder.is_empty() {
            ladder.insert(0, f);
        }
    }
    let locs = LocationSet::ladder(cfg.domain.clone(), &cfg.x0, &ladder)?;
    let sampler = cfg.model.prepare(&locs)?;
    let seed = StreamSeed::new(cfg.seed).named("association").named(cfg.model.variant.name());
    let masses = run_replicates(cfg.replicates, &seed, |s| {
        let path = sampler.sample(s)?;
        Ok(path.measures.iter().map(|m| m.mass_in_box(region)).collect::<Vec<f64>>())
    })?;

    let mut report = DiagnosticsReport::new(
        "association",
        cfg.digest(&format!("association|{region:?}|{far:?}")),
        cfg.seed,
    );
    let n = cfg.replicates;
    let base = column(&masses, 0);
    let corr = |j: usize| -> Result<(f64, f64)> {
        pearson_jackknife(&base, &column(&masses, j))
            .map_err(|_| DsbError::Probe(format!("{name_b}: degenerate sample variance of G_x(B)")))
    };
    let (r0, se0) = corr(0)?;
    report.rows.push(Row::new(format!("{} rho d=0", cfg.model.variant), r0, se0, n));
    report.verdicts.push(Verdict::new("rho at d=0 equals 1", 0.0, (r0 - 1.0).abs(), r0 == 1.0));

    let offset = usize::from(ladder.len() != cfg.ladder.len());
    if offset == 1 {
        let (rf, sef) = corr(1)?;
        report.rows.push(Row::new(format!("{} rho {}", cfg.model.variant, d_label(ladder[0])), rf, sef, n));
        report.verdicts.push(Verdict::new(
            format!("|rho| at {} within se bound", d_label(ladder[0])),
            cfg.tolerances.association_far_se,
            if sef > 0.0 { rf.abs() / sef } else { f64::INFINITY },
            rf.abs() < cfg.tolerances.association_far_se * sef,
        ));
    }
    let mut prev: Option<(f64, f64, f64)> = None;
    for (k, d) in cfg.ladder.iter().enumerate() {
        let (r, se) = corr(k + 1 + offset)?;
        report.rows.push(Row::new(format!("{} rho {}", cfg.model.variant, d_label(*d)), r, se, n));
        if let Some((pd, pr, pse)) = prev {
            let slack = cfg.tolerances.monotone_se * (se * se + pse * pse).sqrt();
            report.verdicts.push(Verdict::new(
                format!("rho increasing {} -> {}", d_label(pd), d_label(*d)),
                cfg.tolerances.monotone_se,
                r - pr,
                r >= pr - slack,
            ));
        }
        prev = Some((*d, r, se));
    }
    Ok(report)
}

fn hit_rows(
    report: &mut DiagnosticsReport,
    label: &str,
    distances: &[f64],
    epsilon: f64,
    level: f64,
) -> Result<()> {
    let n = distances.len();
    let hits = distances.iter().filter(|d| **d < epsilon).count();
    let p = hits as f64 / n as f64;
    report.rows.push(Row::new(
        format!("{label} hit_frequency eps={}", fmt_f64(epsilon)),
        p,
        (p * (1.0 - p) / n as f64).sqrt(),
        n,
    ));
    let (lo, hi) = clopper_pearson(hits, n, level)?;
    report.rows.push(Row::new(format!("{label} ci_lower eps={}", fmt_f64(epsilon)), lo, 0.0, n));
    report.rows.push(Row::new(format!("{label} ci_upper eps={}", fmt_f64(epsilon)), hi, 0.0, n));
    let check = format!("{label} support evidence eps={}", fmt_f64(epsilon));
    if hits == 0 {
        let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
        report.verdicts.push(Verdict::inconclusive(check, epsilon, min));
    } else {
        report.verdicts.push(Verdict::new(check, 0.0, lo, lo > 0.0));
    }
    Ok(())
}

/// Frequency with which a path stays within `epsilon` of `target` in the
/// panel distance at every location.
///
/// The default target is a frozen path of the same process on `locs`.
pub fn support_probe(cfg: &ProbeConfig, target: Option<&MeasureField>, locs: &LocationSet) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let sampler = cfg.model.prepare(locs)?;
    let frozen;
    let target = match target {
        Some(t) => t,
        None => {
            frozen = sampler.sample(&StreamSeed::new(cfg.seed).named("support_target"))?;
            &frozen
        }
    };
    if target.len() != locs.len() || target.measures.iter().any(|m| m.dim() != cfg.model.atoms.theta_dim()) {
        return Err(DsbError::Probe("target field does not match the probe locations or atom dimension".into()));
    }
    let seed = StreamSeed::new(cfg.seed).named("support").named(cfg.model.variant.name());
    let distances = run_replicates(cfg.replicates, &seed, |s| {
        let path = sampler.sample(s)?;
        Ok((0..locs.len())
            .map(|j| weak_panel_distance(path.at(j), target.at(j), &cfg.panel))
            .fold(0.0, f64::max))
    })?;

    let mut report = DiagnosticsReport::new("support", cfg.digest(&format!("support|{locs:?}|{target:?}")), cfg.seed);
    let s = Summary::of(&distances);
    report.rows.push(Row::new(format!("{} mean max panel distance", cfg.model.variant), s.mean, s.stderr, s.n));
    for &eps in &cfg.epsilon {
        hit_rows(&mut report, cfg.model.variant.name(), &distances, eps, cfg.tolerances.ci_level)?;
    }
    Ok(report)
}

/// Shell radii used when a probe needs the decay condition.
pub fn default_decay_shells(kernel: &MixtureKernel) -> Vec<f64> {
    match *kernel {
        MixtureKernel::GaussianLoc { gamma_max, .. } => (1..=12).map(|i| gamma_max * i as f64).collect(),
        MixtureKernel::BetaConstrained { beta_max } => {
            (1..=4).map(|i| (beta_max - 1.0).max(1.0) * i as f64 / 4.0 + 1e-9).collect()
        }
        MixtureKernel::BetaFree => (1..=8).map(|i| 10.0 * i as f64).collect(),
    }
}

fn require_decay(kernel: &MixtureKernel, grid: &DensityGrid, gammas: &[f64]) -> Result<()> {
    kernel.ensure_pipeline_ok()?;
    let y0 = 0.5 * (grid.nodes()[0] + grid.nodes()[grid.len() - 1]);
    for &g in gammas {
        let rep = check_decay_condition(kernel, y0, g, 0.01, &default_decay_shells(kernel))?;
        if !rep.passed {
            return Err(DsbError::Probe(format!(
                "{} kernel fails the decay condition at gamma={g}; induced densities need not be continuous",
                kernel.name()
            )));
        }
    }
    Ok(())
}

/// Frequency of `sup_{gamma, x} KL(q0 || rho^G) < epsilon`.
///
/// The default target `q0` is the mixture density field of a frozen path.
/// Replicates whose mixture vanishes where `q0` is positive count as misses.
pub fn kl_support_probe(
    cfg: &ProbeConfig,
    kernel: &MixtureKernel,
    gammas: &[f64],
    grid: &DensityGrid,
    locs: &LocationSet,
    target: Option<&DensityField>,
) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    require_decay(kernel, grid, gammas)?;
    let sampler = cfg.model.prepare(locs)?;
    let frozen;
    let target = match target {
        Some(t) => t,
        None => {
            let path = sampler.sample(&StreamSeed::new(cfg.seed).named("kl_target"))?;
            frozen = DensityField::from_path(&path, kernel, gammas, grid)?;
            &frozen
        }
    };
    if target.gammas != gammas || target.values.iter().any(|v| v.len() != locs.len()) || target.grid != *grid {
        return Err(DsbError::Probe("target density field does not match the probe grid".into()));
    }
    if target.values.iter().flatten().flatten().any(|v| !(*v > 0.0)) {
        return Err(DsbError::Probe("target density must be strictly positive on the grid".into()));
    }
    let seed = StreamSeed::new(cfg.seed).named("kl_support").named(cfg.model.variant.name());
    let per_rep = run_replicates(cfg.replicates, &seed, |s| {
        let path = sampler.sample(s)?;
        let mut sup = 0.0f64;
        let mut joint = 0.0;
        for (gi, &g) in gammas.iter().enumerate() {
            for j in 0..locs.len() {
                let q0 = &target.values[gi][j];
                let kl = match mixture_density(path.at(j), kernel, g, grid) {
                    Ok(rho) => match kl_divergence(grid, q0, &rho) {
                        Ok(v) => v,
                        Err(DsbError::Support { .. }) => f64::INFINITY,
                        Err(e) => return Err(e),
                    },
                    Err(DsbError::Coverage { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                sup = sup.max(kl);
                joint += kl / (gammas.len() * locs.len()) as f64;
            }
        }
        Ok((sup, joint))
    })?;

    let mut report = DiagnosticsReport::new(
        "kl_support",
        cfg.digest(&format!("kl_support|{kernel:?}|{gammas:?}|{grid:?}|{locs:?}|{target:?}")),
        cfg.seed,
    );
    let sups: Vec<f64> = per_rep.iter().map(|p| p.0).collect();
    let finite: Vec<f64> = sups.iter().copied().filter(|v| v.is_finite()).collect();
    let s = Summary::of(&finite);
    report.rows.push(Row::new(format!("{} mean sup KL (finite)", cfg.model.variant), s.mean, s.stderr, s.n));
    let inf_frac = (sups.len() - finite.len()) as f64 / sups.len() as f64;
    report.rows.push(Row::new(
        format!("{} fraction infinite KL", cfg.model.variant),
        inf_frac,
        (inf_frac * (1.0 - inf_frac) / sups.len() as f64).sqrt(),
        sups.len(),
    ));
    let joint_ok = per_rep.iter().all(|(sup, joint)| *joint <= *sup * (1.0 + 1e-12) || sup.is_infinite());
    report.verdicts.push(Verdict::new("predictor-averaged KL <= sup KL", 0.0, 0.0, joint_ok));
    for &eps in &cfg.epsilon {
        hit_rows(&mut report, cfg.model.variant.name(), &sups, eps, cfg.tolerances.ci_level)?;
    }
    Ok(report)
}

/// Direction along which the mixture modulus is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusAxis {
    /// `x = x0 + d e_1` at fixed `gamma0`.
    Space,
    /// `gamma = gamma0 + d` at fixed `x0`.
    Gamma,
}

/// `E[int |rho_{gamma, x} - rho_{gamma0, x0}|]` along the ladder.
pub fn mixture_tv_modulus_probe(
    cfg: &ProbeConfig,
    kernel: &MixtureKernel,
    gamma0: f64,
    grid: &DensityGrid,
    axis: ModulusAxis,
) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let (locs, gammas): (LocationSet, Vec<f64>) = match axis {
        ModulusAxis::Space => (cfg.ladder_locations()?, vec![gamma0]),
        ModulusAxis::Gamma => {
            let mut g = vec![gamma0];
            g.extend(cfg.ladder.iter().map(|d| gamma0 + d));
            (LocationSet::new(vec![cfg.x0.clone()], cfg.domain.clone())?, g)
        }
    };
    for g in &gammas {
        kernel.check_gamma(*g)?;
    }
    require_decay(kernel, grid, &gammas)?;
    let sampler = cfg.model.prepare(&locs)?;
    let axis_name = match axis {
        ModulusAxis::Space => "space",
        ModulusAxis::Gamma => "gamma",
    };
    let seed = StreamSeed::new(cfg.seed)
        .named("mixture_tv_modulus")
        .named(axis_name)
        .named(cfg.model.variant.name());
    let k = cfg.ladder.len();
    let per_rep = run_replicates(cfg.replicates, &seed, |s| {
        let path = sampler.sample(s)?;
        let dens: Vec<Vec<f64>> = match axis {
            ModulusAxis::Space => path
                .measures
                .iter()
                .map(|m| mixture_density(m, kernel, gamma0, grid))
                .collect::<Result<_>>()?,
            ModulusAxis::Gamma => gammas
                .iter()
                .map(|g| mixture_density(path.at(0), kernel, *g, grid))
                .collect::<Result<_>>()?,
        };
        let norm_err = dens.iter().map(|d| (grid.integrate(d) - 1.0).abs()).fold(0.0, f64::max);
        let mut v = Vec::with_capacity(k + 1);
        v.push(l1_distance(grid, &dens[0], &dens[0]));
        v.extend((1..=k).map(|j| l1_distance(grid, &dens[j], &dens[0])));
        Ok((v, norm_err))
    })?;

    let mut report = DiagnosticsReport::new(
        "mixture_tv_modulus",
        cfg.digest(&format!("mixture_tv_modulus|{kernel:?}|{gamma0}|{grid:?}|{axis:?}")),
        cfg.seed,
    );
    let values: Vec<Vec<f64>> = per_rep.iter().map(|p| p.0.clone()).collect();
    let prefix = format!("{} {axis_name} ", cfg.model.variant);
    let zero = Summary::of(&column(&values, 0));
    report.rows.push(Row::new(format!("{prefix}d=0"), zero.mean, zero.stderr, zero.n));
    let shifted: Vec<Vec<f64>> = values.iter().map(|v| v[1..].to_vec()).collect();
    ladder_rows(&mut report, &prefix, &cfg.ladder, &shifted, cfg.tolerances.monotone_se);
    let max_norm = per_rep.iter().map(|p| p.1).fold(0.0, f64::max);
    report.verdicts.push(Verdict::new(
        "every density integrates to 1",
        cfg.tolerances.normalization,
        max_norm,
        max_norm <= cfg.tolerances.normalization,
    ));
    Ok(report)
}
