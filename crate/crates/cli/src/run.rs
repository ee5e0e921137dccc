use std::path::PathBuf;
use std::time::Instant;

use dsb_core::diagnostics::{
    association_probe, continuity_modulus_probe, default_decay_shells, kl_support_probe, marginal_beta_probe,
    mixture_tv_modulus_probe, support_probe, tv_contrast_probe, DiagnosticsReport, Outcome, ProbeConfig, Row,
    Verdict,
};
use dsb_core::mixture::{check_decay_condition, diagonal_growth_exponent, DensityField};
use dsb_core::table::{fmt_f64, Table};
use dsb_core::{build_grid, DdpModel, DsbError, LocationSet, Marginal, MixtureKernel, StreamSeed};

use crate::config::{Command, KernelBlock, ProbeKind, RunConfig, Space};
use crate::output::{Manifest, Sink, VerdictSummary, Versions, WriteError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] DsbError),
    #[error("write failed: {0}")]
    Write(#[from] WriteError),
}

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub quiet: bool,
}

pub struct RunResult {
    pub manifest: Manifest,
    pub outcome: Option<Outcome>,
}

fn say(opts: &RunOptions, text: &str) {
    if !opts.quiet {
        print!("{text}");
    }
}

fn put_report(sink: &mut Sink, cfg: &RunConfig, report: &DiagnosticsReport) -> Result<(), RunError> {
    if cfg.formats.json {
        sink.put(&format!("{}.json", report.probe), &report.to_json()?)?;
    }
    if cfg.formats.csv {
        sink.put(&format!("{}.csv", report.probe), &report.rows_table().to_csv()?)?;
    }
    if cfg.formats.text {
        sink.put(&format!("{}.txt", report.probe), &report.to_text())?;
    }
    Ok(())
}

fn put_table(sink: &mut Sink, name: &str, table: &Table) -> Result<(), RunError> {
    sink.put(name, &table.to_csv()?)?;
    Ok(())
}

fn parts(cfg: &RunConfig) -> (&DdpModel, &Space) {
    (
        cfg.model.as_ref().expect("validated: [process] present"),
        cfg.space.as_ref().expect("validated: [space] present"),
    )
}

fn grid_locations(space: &Space) -> Result<LocationSet, DsbError> {
    build_grid(&space.domain, &space.resolution)
}

fn locations_table(path: &dsb_core::MeasureField) -> Table {
    let p = path.locations.dim();
    let mut header = vec!["loc_index".to_string()];
    header.extend((1..=p).map(|k| format!("x{k}")));
    header.push("tail_mass".into());
    let mut t = Table::new(header);
    for (i, (x, tail)) in path.locations.points().iter().zip(&path.tail_record).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.coords().iter().map(|c| fmt_f64(*c)));
        row.push(fmt_f64(*tail));
        t.push(row);
    }
    t
}

fn simulate(cfg: &RunConfig, sink: &mut Sink, opts: &RunOptions) -> Result<(), RunError> {
    let (model, space) = parts(cfg);
    let locs = grid_locations(space)?;
    let path = model.sample_path(&locs, &StreamSeed::new(cfg.seed).named("simulate"))?;
    put_table(sink, "path.csv", &path.to_table())?;
    put_table(sink, "locations.csv", &locations_table(&path))?;
    let max_tail = path.tail_record.iter().copied().fold(0.0, f64::max);
    say(
        opts,
        &format!(
            "simulated {} path: {} locations, {} sticks, max tail mass {}\n",
            model.variant,
            locs.len(),
            model.sticks.num_sticks(),
            fmt_f64(max_tail)
        ),
    );
    Ok(())
}

fn mixture(cfg: &RunConfig, sink: &mut Sink, opts: &RunOptions) -> Result<(), RunError> {
    let (model, space) = parts(cfg);
    let kb = cfg.kernel.as_ref().expect("validated: [kernel] present");
    let locs = grid_locations(space)?;
    let path = model.sample_path(&locs, &StreamSeed::new(cfg.seed).named("mixture"))?;
    let field = DensityField::from_path(&path, &kb.kernel, &kb.gammas, &kb.grid)?;
    put_table(sink, "path.csv", &path.to_table())?;
    put_table(sink, "density.csv", &field.to_table())?;
    let mut norm = Table::new(["gamma", "loc_index", "integral"].map(String::from).to_vec());
    for (g, per_loc) in field.gammas.iter().zip(&field.values) {
        for (j, v) in per_loc.iter().enumerate() {
            norm.push(vec![fmt_f64(*g), j.to_string(), fmt_f64(field.grid.integrate(v))]);
        }
    }
    put_table(sink, "normalization.csv", &norm)?;
    say(
        opts,
        &format!(
            "{} mixture densities: {} gammas x {} locations on {} nodes, max |integral - 1| = {}\n",
            kb.kernel.name(),
            field.gammas.len(),
            locs.len(),
            field.grid.len(),
            fmt_f64(field.max_normalization_error())
        ),
    );
    Ok(())
}

/// Default association box: the upper half of each atom coordinate's law.
fn default_region(model: &DdpModel) -> Vec<(f64, f64)> {
    model
        .atoms
        .marginals()
        .iter()
        .map(|m| match *m {
            Marginal::Normal { mean, .. } => (mean, f64::INFINITY),
            Marginal::Uniform { lo, hi } => (0.5 * (lo + hi), hi),
        })
        .collect()
}

fn run_probe(kind: ProbeKind, cfg: &RunConfig, pcfg: &ProbeConfig) -> Result<DiagnosticsReport, DsbError> {
    let (model, space) = parts(cfg);
    let pb = cfg.probe.as_ref().expect("validated: [probe] present");
    let kernel = || -> &KernelBlock { cfg.kernel.as_ref().expect("validated: [kernel] present") };
    match kind {
        ProbeKind::MarginalBeta => marginal_beta_probe(pcfg, &grid_locations(space)?, pb.test_alpha),
        ProbeKind::ContinuityModulus => continuity_modulus_probe(pcfg),
        ProbeKind::TvContrast => tv_contrast_probe(pcfg),
        ProbeKind::Association => {
            let region = pb.region.clone().unwrap_or_else(|| default_region(model));
            association_probe(pcfg, &region, pb.far)
        }
        ProbeKind::Support => support_probe(pcfg, None, &grid_locations(space)?),
        ProbeKind::KlSupport => {
            let k = kernel();
            let mut c = pcfg.clone();
            c.epsilon = pb.kl_epsilon.clone();
            kl_support_probe(&c, &k.kernel, &k.gammas, &k.grid, &grid_locations(space)?, None)
        }
        ProbeKind::MixtureTvModulus => {
            let k = kernel();
            let gamma0 = pb.gamma0.unwrap_or(k.gammas[0]);
            mixture_tv_modulus_probe(pcfg, &k.kernel, gamma0, &k.grid, pb.axis)
        }
    }
}

fn probe(cfg: &RunConfig, sink: &mut Sink, opts: &RunOptions) -> Result<Vec<DiagnosticsReport>, RunError> {
    let (model, space) = parts(cfg);
    let pb = cfg.probe.as_ref().expect("validated: [probe] present");
    let mut pcfg = ProbeConfig::new(
        model.clone(),
        space.domain.clone(),
        space.x0.clone(),
        space.ladder.clone(),
        pb.replicates,
        cfg.seed,
    )
    .map_err(|e| DsbError::Config(format!("[probe] {e}")))?;
    pcfg.epsilon = pb.epsilon.clone();
    pcfg.tolerances = pb.tolerances;
    pcfg.validate()?;
    let digest = cfg.digest();
    let mut reports = Vec::new();
    for kind in &pb.probes {
        let mut report = run_probe(*kind, cfg, &pcfg)?;
        report.config_digest = digest.clone();
        put_report(sink, cfg, &report)?;
        say(opts, &report.to_text());
        reports.push(report);
    }
    Ok(reports)
}

fn decay_check(cfg: &RunConfig, sink: &mut Sink, opts: &RunOptions) -> Result<Vec<DiagnosticsReport>, RunError> {
    let kb = cfg.kernel.as_ref().expect("validated: [kernel] present");
    let db = cfg.decay.as_ref().expect("validated: [decay] present");
    let shells = db.shells.clone().unwrap_or_else(|| default_decay_shells(&kb.kernel));
    let dr = check_decay_condition(&kb.kernel, db.y0, db.gamma0, db.epsilon, &shells)?;
    let mut report = DiagnosticsReport::new("decay_condition", cfg.digest(), cfg.seed);
    for (r, sup) in &dr.profile {
        report.rows.push(Row::new(format!("{} sup psi outside r={}", dr.family, fmt_f64(*r)), *sup, 0.0, 1));
    }
    if let Some((lo, hi)) = db.growth_t {
        if matches!(kb.kernel, MixtureKernel::BetaFree) {
            let slope = diagonal_growth_exponent(lo, hi, 16)?;
            report.rows.push(Row::new(
                format!("growth exponent of psi(1/2, t, t) on [{}, {}]", fmt_f64(lo), fmt_f64(hi)),
                slope,
                0.0,
                16,
            ));
        }
    }
    let last = dr.profile.last().map_or(f64::NAN, |p| p.1);
    report.verdicts.push(Verdict::new(
        format!("{} decays below epsilon outside compact shells", dr.family),
        db.epsilon,
        last,
        dr.passed,
    ));
    put_report(sink, cfg, &report)?;
    say(opts, &report.to_text());
    Ok(vec![report])
}

pub fn execute(cfg: &RunConfig, command: Command, opts: &RunOptions) -> Result<RunResult, RunError> {
    let start = Instant::now();
    let mut sink = Sink::new(opts.out_dir.clone());
    let reports = match command {
        Command::Simulate => {
            simulate(cfg, &mut sink, opts)?;
            Vec::new()
        }
        Command::Mixture => {
            mixture(cfg, &mut sink, opts)?;
            Vec::new()
        }
        Command::Probe => probe(cfg, &mut sink, opts)?,
        Command::DecayCheck => decay_check(cfg, &mut sink, opts)?,
    };
    let verdicts: Vec<VerdictSummary> = reports
        .iter()
        .flat_map(|r| {
            r.verdicts.iter().map(|v| VerdictSummary {
                probe: r.probe.clone(),
                check: v.check.clone(),
                status: v.status,
            })
        })
        .collect();
    let outcome = if verdicts.is_empty() {
        None
    } else if verdicts.iter().any(|v| v.status == Outcome::Fail) {
        Some(Outcome::Fail)
    } else if verdicts.iter().any(|v| v.status == Outcome::Inconclusive) {
        Some(Outcome::Inconclusive)
    } else {
        Some(Outcome::Pass)
    };
    let mut manifest = Manifest {
        command: command.name().into(),
        config_digest: cfg.digest(),
        seed: cfg.seed,
        artifacts: std::mem::take(&mut sink.artifacts),
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: dsb_core::VERSION,
        },
        outcome: match outcome {
            None => "none".into(),
            Some(Outcome::Pass) => "pass".into(),
            Some(Outcome::Fail) => "fail".into(),
            Some(Outcome::Inconclusive) => "inconclusive".into(),
        },
        verdicts,
        runtime_seconds: 0.0,
    };
    manifest.runtime_seconds = start.elapsed().as_secs_f64();
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    crate::output::write_atomic(&sink.dir().join("manifest.json"), format!("{text}\n").as_bytes())?;
    Ok(RunResult { manifest, outcome })
}
