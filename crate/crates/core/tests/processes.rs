use dsb_core::atom_process::AtomSampler;
use dsb_core::diagnostics::{continuity_modulus_probe, run_replicates, ProbeConfig};
use dsb_core::stats::{ks_test, pearson_jackknife, Summary};
use dsb_core::stick_process::StickSampler;
use dsb_core::*;

fn unit_kernel() -> CovKernelSpec {
    CovKernelSpec::new(1.0, 1.0, 0.0).unwrap()
}

fn ladder_locs() -> LocationSet {
    LocationSet::ladder(
        Domain::cube(0.0, 2.0, 1).unwrap(),
        &IndexPoint::scalar(0.0).unwrap(),
        &[1.0, 0.5, 0.25, 0.125],
    )
    .unwrap()
}

/// Paired check that `E|f(x_k) - f(x0)|` does not increase along the ladder.
fn assert_nonincreasing(diffs: &[Vec<f64>]) {
    for k in 0..diffs[0].len() - 1 {
        let step: Vec<f64> = diffs.iter().map(|d| d[k + 1] - d[k]).collect();
        let s = Summary::of(&step);
        assert!(s.mean <= 2.0 * s.stderr, "step {k}: mean change {} vs se {}", s.mean, s.stderr);
    }
    let first = Summary::of(&diffs.iter().map(|d| d[0]).collect::<Vec<_>>()).mean;
    let last = Summary::of(&diffs.iter().map(|d| d[diffs[0].len() - 1]).collect::<Vec<_>>()).mean;
    assert!(last < first);
}

#[test]
fn stick_paths_get_closer_along_the_ladder() {
    let spec = StickSpec::new(Alpha::constant(1.0).unwrap(), unit_kernel(), Truncation::Sticks(1)).unwrap();
    let sampler = StickSampler::new(&spec, &ladder_locs()).unwrap();
    let diffs = run_replicates(10_000, &StreamSeed::new(21), |s| {
        let v = sampler.sample(s);
        Ok((1..5).map(|j| (v[(0, j)] - v[(0, 0)]).abs()).collect::<Vec<f64>>())
    })
    .unwrap();
    assert_nonincreasing(&diffs);
}

#[test]
fn atom_paths_get_closer_along_the_ladder() {
    let spec = AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap()], unit_kernel(), AtomVariant::Field).unwrap();
    let sampler = AtomSampler::new(&spec, &ladder_locs()).unwrap();
    let diffs = run_replicates(10_000, &StreamSeed::new(22), |s| {
        let a = sampler.sample(1, s);
        Ok((1..5).map(|j| (a.atom(0, j)[0] - a.atom(0, 0)[0]).abs()).collect::<Vec<f64>>())
    })
    .unwrap();
    assert_nonincreasing(&diffs);
}

#[test]
fn atom_rows_are_uncorrelated() {
    let locs = build_grid(&Domain::cube(0.0, 1.0, 1).unwrap(), &[3]).unwrap();
    let spec = AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap()], unit_kernel(), AtomVariant::Field).unwrap();
    let sampler = AtomSampler::new(&spec, &locs).unwrap();
    let pairs = run_replicates(10_000, &StreamSeed::new(23), |s| {
        let a = sampler.sample(2, s);
        Ok((a.atom(0, 1)[0], a.atom(1, 1)[0]))
    })
    .unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (rho, se) = pearson_jackknife(&x, &y).unwrap();
    assert!(rho.abs() < 3.0 * se, "rho {rho}, se {se}");
}

#[test]
fn atom_field_marginals_match_their_laws() {
    let locs = build_grid(&Domain::cube(0.0, 1.0, 1).unwrap(), &[5]).unwrap();
    let laws = [Marginal::normal(1.0, 2.0).unwrap(), Marginal::uniform(-1.0, 3.0).unwrap()];
    for law in laws {
        let spec = AtomSpec::new(vec![law], unit_kernel(), AtomVariant::Field).unwrap();
        let sampler = AtomSampler::new(&spec, &locs).unwrap();
        let draws = run_replicates(10_000, &StreamSeed::new(24), |s| {
            let a = sampler.sample(1, s);
            Ok((0..5).map(|j| a.atom(0, j)[0]).collect::<Vec<f64>>())
        })
        .unwrap();
        for j in 0..5 {
            let col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            let ks = ks_test(&col, |v| law.cdf(v)).unwrap();
            assert!(ks.p_value > 0.01, "{law:?} at location {j}: p = {}", ks.p_value);
        }
    }
}

#[test]
fn iid_atom_rows_are_bitwise_constant() {
    let locs = build_grid(&Domain::cube(0.0, 1.0, 1).unwrap(), &[7]).unwrap();
    let spec = AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap()], unit_kernel(), AtomVariant::Iid).unwrap();
    let model = DdpModel::new(
        Variant::ThetaDdp,
        StickSpec::new(Alpha::constant(1.0).unwrap(), unit_kernel(), Truncation::Sticks(10)).unwrap(),
        spec,
    )
    .unwrap();
    let path = model.sample_path(&locs, &StreamSeed::new(25)).unwrap();
    for j in 1..7 {
        for i in 0..10 {
            assert_eq!(path.at(j).atom(i).to_vec(), path.at(0).atom(i).to_vec());
        }
    }
}

#[test]
fn standard_errors_shrink_as_root_n() {
    let model = DdpModel::new(
        Variant::ThetaDdp,
        StickSpec::new(Alpha::constant(1.0).unwrap(), unit_kernel(), Truncation::Sticks(30)).unwrap(),
        AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap()], unit_kernel(), AtomVariant::Field).unwrap(),
    )
    .unwrap();
    let cfg = |n| {
        ProbeConfig::new(
            model.clone(),
            Domain::cube(0.0, 2.0, 1).unwrap(),
            IndexPoint::scalar(0.0).unwrap(),
            vec![1.0, 0.5],
            n,
            26,
        )
        .unwrap()
    };
    let small = continuity_modulus_probe(&cfg(1_000)).unwrap();
    let large = continuity_modulus_probe(&cfg(4_000)).unwrap();
    for k in 1..3 {
        let ratio = small.rows[k].stderr / large.rows[k].stderr;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "row {k}: ratio {ratio}");
    }
}

#[test]
fn probes_do_not_depend_on_thread_count() {
    let model = DdpModel::new(
        Variant::Ddp,
        StickSpec::new(Alpha::constant(2.0).unwrap(), unit_kernel(), Truncation::Sticks(15)).unwrap(),
        AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap()], unit_kernel(), AtomVariant::Field).unwrap(),
    )
    .unwrap();
    let cfg = ProbeConfig::new(
        model,
        Domain::cube(0.0, 1.0, 1).unwrap(),
        IndexPoint::scalar(0.0).unwrap(),
        vec![0.5, 0.25],
        300,
        27,
    )
    .unwrap();
    let with = |t: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| continuity_modulus_probe(&cfg).unwrap().to_json().unwrap())
    };
    assert_eq!(with(1), with(3));
}
