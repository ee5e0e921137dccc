use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SIMULATE: &str = "\
[run]
seed = 42

[process]
variant = thetaDDP
alpha = 1
sticks = 50

[space]
lo = 0
hi = 1
resolution = 5
";

const PROBE: &str = "\
[run]
seed = 7

[process]
variant = DDP
alpha = 1
sticks = 20

[space]
lo = 0
hi = 2
x0 = 0
ladder = 1, 0.5, 0.25
resolution = 3

[probe]
probes = tv_contrast
replicates = 100
tv_theta_max = 1.5
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dsb-lab"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn run(command: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), config);
    bin()
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .args(extra)
        .env_remove("DSB_LAB_THREADS")
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_path_dump_and_manifest() {
    let out = TempDir::new().unwrap();
    let o = run("simulate", SIMULATE, out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.path().join("path.csv")).unwrap();
    assert!(csv.starts_with("loc_index,x1,theta1,weight\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 50);
    let m = manifest(out.path());
    assert_eq!(m["outcome"], "none");
    assert_eq!(m["command"], "simulate");
    let names: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["path.csv", "locations.csv"]);
    assert!(m["versions"]["dsb-core"].is_string());
    assert_eq!(m["config_digest"].as_str().unwrap().len(), 64);
    // nothing but artifacts and the manifest is left behind
    let mut files: Vec<String> = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["locations.csv", "manifest.json", "path.csv"]);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(run("probe", PROBE, a.path(), &["--threads", "1"]).status.success());
    assert!(run("probe", PROBE, b.path(), &["--threads", "3"]).status.success());
    for f in ["tv_contrast.json", "tv_contrast.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(manifest(a.path())["config_digest"], manifest(b.path())["config_digest"]);
}

#[test]
fn thread_env_fallback() {
    let out = TempDir::new().unwrap();
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SIMULATE);
    let o = bin()
        .args(["simulate", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out.path())
        .env("DSB_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DSB_LAB_THREADS"));
}

#[test]
fn probe_report_has_both_variant_columns() {
    let out = TempDir::new().unwrap();
    let o = run("probe", PROBE, out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("tv_contrast.json")).unwrap()).unwrap();
    for key in ["probe", "config_digest", "rows", "verdicts", "seed", "runtime_seconds"] {
        assert!(r.get(key).is_some(), "{key}");
    }
    let labels: Vec<&str> = r["rows"].as_array().unwrap().iter().map(|x| x["label"].as_str().unwrap()).collect();
    assert!(labels.iter().any(|l| l.starts_with("thetaDDP")));
    assert!(labels.iter().any(|l| l.starts_with("DDP")));
    let row = &r["rows"][0];
    for key in ["label", "estimate", "stderr", "n"] {
        assert!(row.get(key).is_some(), "{key}");
    }
    let v = &r["verdicts"][0];
    for key in ["check", "tolerance", "pass"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(r["config_digest"], manifest(out.path())["config_digest"]);
    assert_eq!(manifest(out.path())["outcome"], "pass");
}

#[test]
fn failed_verdict_exits_nonzero() {
    let out = TempDir::new().unwrap();
    let o = run("probe", &format!("{PROBE}tv_moving_min = 2.5\n"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(out.path())["outcome"], "fail");
}

#[test]
fn inconclusive_support_exits_zero() {
    let cfg = PROBE.replace("probes = tv_contrast", "probes = support\nepsilon = 1e-300");
    let out = TempDir::new().unwrap();
    let o = run("probe", &cfg, out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(out.path());
    assert_eq!(m["outcome"], "inconclusive");
    assert_eq!(m["verdicts"][0]["status"], "inconclusive");
}

#[test]
fn config_errors_exit_two_and_name_the_problem() {
    let out = TempDir::new().unwrap();
    let o = run("simulate", &format!("{SIMULATE}colour = red\n"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));

    let o = run("simulate", &format!("{SIMULATE}[space]\nlo = 0\n"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate section [space]"));

    let o = run("simulate", &SIMULATE.replace("alpha = 1", "alpha = 0"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha_min"));

    let o = run("probe", SIMULATE, out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[probe]"));
    assert!(!out.path().join("manifest.json").exists());
}

#[test]
fn seed_is_mandatory_unless_given_on_the_command_line() {
    let no_seed = SIMULATE.replace("seed = 42\n", "");
    let out = TempDir::new().unwrap();
    let o = run("simulate", &no_seed, out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));

    let o = run("simulate", &no_seed, out.path(), &["--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let with_flag = fs::read(out.path().join("path.csv")).unwrap();
    let out2 = TempDir::new().unwrap();
    assert!(run("simulate", SIMULATE, out2.path(), &[]).status.success());
    assert_eq!(with_flag, fs::read(out2.path().join("path.csv")).unwrap());

    let out3 = TempDir::new().unwrap();
    assert!(run("simulate", SIMULATE, out3.path(), &["--seed", "43"]).status.success());
    assert_ne!(with_flag, fs::read(out3.path().join("path.csv")).unwrap());
}

#[test]
fn crlf_configs_are_accepted() {
    let out = TempDir::new().unwrap();
    let o = run("simulate", &SIMULATE.replace('\n', "\r\n"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn mixture_command_writes_normalized_densities() {
    let cfg = format!("{SIMULATE}\n[kernel]\nfamily = gaussian_loc\ngammas = 0.5, 1\ny_lo = -10\ny_hi = 10\ny_nodes = 801\n");
    let out = TempDir::new().unwrap();
    let o = run("mixture", &cfg, out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let norm = fs::read_to_string(out.path().join("normalization.csv")).unwrap();
    for line in norm.lines().skip(1) {
        let integral: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((integral - 1.0).abs() < 1e-6, "{line}");
    }
    let density = fs::read_to_string(out.path().join("density.csv")).unwrap();
    assert!(density.starts_with("y,gamma,loc_index,density\n"));
    assert_eq!(manifest(out.path())["outcome"], "none");

    let bad = cfg.replace("family = gaussian_loc", "family = beta_free");
    let o = run("mixture", &bad, out.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decay_check_exit_status_follows_the_kernel() {
    let base = "[run]\nseed = 1\n[decay]\ny0 = 0.5\ngamma0 = 1\n";
    let out = TempDir::new().unwrap();
    let o = run("decay-check", &format!("{base}[kernel]\nfamily = gaussian_loc\n"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(manifest(out.path())["outcome"], "pass");

    let o = run(
        "decay-check",
        &format!("{base}growth_t = 100, 400\n[kernel]\nfamily = beta_free\n"),
        out.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("decay_condition.json")).unwrap()).unwrap();
    let slope = r["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|row| row["label"].as_str().unwrap().contains("growth exponent"))
        .unwrap()["estimate"]
        .as_f64()
        .unwrap();
    // labels containing commas are quoted in the CSV
    let csv = fs::read_to_string(out.path().join("decay_condition.csv")).unwrap();
    assert!(csv.contains("\"growth exponent of psi(1/2, t, t)"));
    assert!((0.45..=0.55).contains(&slope), "{slope}");
}

#[test]
fn small_values_use_exponent_notation() {
    let out = TempDir::new().unwrap();
    assert!(run("simulate", SIMULATE, out.path(), &[]).status.success());
    let csv = fs::read_to_string(out.path().join("path.csv")).unwrap();
    let mut rdr = csv.lines().skip(1);
    let tiny = rdr.find_map(|l| {
        let w = l.rsplit(',').next().unwrap();
        let v: f64 = w.parse().unwrap();
        (v != 0.0 && v.abs() < 1e-4).then(|| w.to_string())
    });
    let tiny = tiny.expect("fifty sticks leave some weight below 1e-4");
    assert!(tiny.contains('e'), "{tiny}");
}
