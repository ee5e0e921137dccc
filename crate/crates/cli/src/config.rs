//! Sectioned key-value run descriptions.
//!
//! ```text
//! # comment
//! [run]
//! seed = 42
//!
//! [process]
//! variant = thetaDDP
//! alpha = 1
//! sticks = 50
//!
//! [space]
//! lo = 0
//! hi = 1
//! resolution = 5
//! ```
//!
//! Values are typed as integers, floats or strings; a comma makes a list.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use sha2::{Digest, Sha256};

use dsb_core::diagnostics::Tolerances;
use dsb_core::mixture::{DensityGrid, DEFAULT_NODES};
use dsb_core::{
    Alpha, AtomSpec, AtomVariant, CovKernelSpec, DdpModel, Domain, IndexPoint, Marginal, MixtureKernel, StickSpec,
    Truncation, Variant,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    fn parse_scalar(s: &str) -> Value {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
            return Value::Str(inner.to_string());
        }
        if let Ok(i) = s.parse::<i64>() {
            return Value::Int(i);
        }
        match s.parse::<f64>() {
            Ok(f) => Value::Float(f),
            Err(_) => Value::Str(s.to_string()),
        }
    }

    fn parse(s: &str) -> Value {
        if s.contains(',') {
            Value::List(s.split(',').map(Value::parse_scalar).collect())
        } else {
            Value::parse_scalar(s)
        }
    }

    fn items(&self) -> Vec<&Value> {
        match self {
            Value::List(v) => v.iter().collect(),
            other => vec![other],
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Float(f) => Some(f),
            _ => None,
        }
    }

    /// Canonical text used for hashing: numbers by value, so `1` and `1.0` agree.
    fn canonical(&self) -> String {
        match self {
            Value::Int(i) => format!("n:{:?}", *i as f64),
            Value::Float(f) => format!("n:{f:?}"),
            Value::Str(s) => format!("s:{s}"),
            Value::List(v) => format!("[{}]", v.iter().map(Value::canonical).collect::<Vec<_>>().join(",")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) => write!(f, "{s}"),
            Value::List(v) => {
                let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                write!(f, "{}", parts.join(", "))
            }
        }
    }
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["command", "seed"]),
    (
        "process",
        &[
            "variant",
            "alpha",
            "alpha_slope",
            "sticks",
            "tail_mass",
            "stick_sigma0",
            "stick_tau",
            "atom_law",
            "atom_mean",
            "atom_scale",
            "atom_lo",
            "atom_hi",
            "atom_variant",
            "atom_sigma0",
            "atom_tau",
        ],
    ),
    ("space", &["lo", "hi", "resolution", "x0", "ladder"]),
    ("kernel", &["family", "gamma_min", "gamma_max", "beta_max", "gammas", "y_lo", "y_hi", "y_nodes"]),
    (
        "probe",
        &[
            "probes",
            "replicates",
            "epsilon",
            "kl_epsilon",
            "test_alpha",
            "region_lo",
            "region_hi",
            "far",
            "gamma0",
            "axis",
            "ks_level",
            "monotone_se",
            "modulus_ratio",
            "tv_theta_max",
            "tv_moving_min",
            "association_far_se",
            "ci_level",
            "normalization",
        ],
    ),
    ("decay", &["y0", "gamma0", "epsilon", "shells", "growth_t"]),
    ("output", &["dir", "formats"]),
];

/// Parsed but untyped document: section -> key -> value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    sections: BTreeMap<String, BTreeMap<String, Value>>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut doc = Document::default();
        let mut current: Option<String> = None;
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        msg: format!("unterminated section header '{line}'"),
                    })?
                    .trim()
                    .to_string();
                if doc.sections.contains_key(&name) {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        msg: format!("duplicate section [{name}]"),
                    });
                }
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    errors.push(format!("line {line_no}: unknown section [{name}]"));
                }
                doc.sections.insert(name.clone(), BTreeMap::new());
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    msg: format!("expected 'key = value', got '{line}'"),
                });
            };
            let key = key.trim().to_string();
            let Some(section) = &current else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    msg: format!("key '{key}' appears before any [section]"),
                });
            };
            if let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) {
                if !keys.contains(&key.as_str()) {
                    errors.push(format!("line {line_no}: unknown key '{key}' in [{section}]"));
                }
            }
            let entries = doc.sections.get_mut(section).expect("section inserted on header");
            if entries.insert(key.clone(), Value::parse(value)).is_some() {
                errors.push(format!("line {line_no}: duplicate key '{key}' in [{section}]"));
            }
        }
        if errors.is_empty() {
            Ok(doc)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    /// SHA-256 over the canonical content, skipping `skip` (section, key) pairs.
    pub fn digest(&self, skip: &[(&str, &str)], overrides: &[(&str, &str, Value)]) -> String {
        let mut merged = self.sections.clone();
        for (s, k, v) in overrides {
            merged.entry(s.to_string()).or_default().insert(k.to_string(), v.clone());
        }
        let mut h = Sha256::new();
        for (section, entries) in &merged {
            for (key, value) in entries {
                if skip.contains(&(section.as_str(), key.as_str())) {
                    continue;
                }
                h.update(format!("{section}.{key}={}\n", value.canonical()).as_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Typed accessors that accumulate errors instead of stopping at the first.
struct Reader<'a> {
    doc: &'a Document,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn fail(&mut self, section: &str, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("[{section}] {key}: {msg}"));
    }

    fn f64_opt(&mut self, s: &str, k: &str) -> Option<f64> {
        let v = self.doc.get(s, k)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.fail(s, k, format!("expected a number, got '{v}'"));
                None
            }
        }
    }

    fn f64_or(&mut self, s: &str, k: &str, default: f64) -> f64 {
        self.f64_opt(s, k).unwrap_or(default)
    }

    fn f64_req(&mut self, s: &str, k: &str) -> Option<f64> {
        if self.doc.get(s, k).is_none() {
            self.fail(s, k, "missing");
        }
        self.f64_opt(s, k)
    }

    fn list_opt(&mut self, s: &str, k: &str) -> Option<Vec<f64>> {
        let v = self.doc.get(s, k)?;
        let out: Option<Vec<f64>> = v.items().iter().map(|x| x.as_f64().filter(|f| f.is_finite())).collect();
        if out.is_none() {
            self.fail(s, k, format!("expected numbers, got '{v}'"));
        }
        out
    }

    fn u64_opt(&mut self, s: &str, k: &str) -> Option<u64> {
        let v = self.doc.get(s, k)?;
        match v {
            Value::Int(i) if *i >= 0 => Some(*i as u64),
            // seeds above i64::MAX
            Value::Float(_) | Value::Str(_) => match v.to_string().parse::<u64>() {
                Ok(u) => Some(u),
                Err(_) => {
                    self.fail(s, k, format!("expected a non-negative integer, got '{v}'"));
                    None
                }
            },
            _ => {
                self.fail(s, k, format!("expected a non-negative integer, got '{v}'"));
                None
            }
        }
    }

    fn usize_opt(&mut self, s: &str, k: &str) -> Option<usize> {
        self.u64_opt(s, k).map(|u| u as usize)
    }

    fn usize_list(&mut self, s: &str, k: &str) -> Option<Vec<usize>> {
        let v = self.doc.get(s, k)?;
        let out: Option<Vec<usize>> = v
            .items()
            .iter()
            .map(|x| match x {
                Value::Int(i) if *i > 0 => Some(*i as usize),
                _ => None,
            })
            .collect();
        if out.is_none() {
            self.fail(s, k, format!("expected positive integers, got '{v}'"));
        }
        out
    }

    fn str_opt(&mut self, s: &str, k: &str) -> Option<String> {
        let v = self.doc.get(s, k)?;
        match v {
            Value::Str(x) => Some(x.clone()),
            _ => {
                self.fail(s, k, format!("expected a name, got '{v}'"));
                None
            }
        }
    }

    fn str_list(&mut self, s: &str, k: &str) -> Option<Vec<String>> {
        let v = self.doc.get(s, k)?;
        let out: Option<Vec<String>> = v
            .items()
            .iter()
            .map(|x| match x {
                Value::Str(t) if !t.is_empty() => Some(t.clone()),
                _ => None,
            })
            .collect();
        if out.is_none() {
            self.fail(s, k, format!("expected names, got '{v}'"));
        }
        out
    }

    /// Records a core validation error against a key.
    fn check<T>(&mut self, s: &str, k: &str, r: dsb_core::Result<T>) -> Option<T> {
        match r {
            Ok(t) => Some(t),
            Err(e) => {
                self.fail(s, k, e);
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Probe,
    Mixture,
    DecayCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Probe => "probe",
            Command::Mixture => "mixture",
            Command::DecayCheck => "decay-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Command::Simulate, Command::Probe, Command::Mixture, Command::DecayCheck]
            .into_iter()
            .find(|c| c.name() == s)
    }

    fn required(&self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["process", "space"],
            Command::Probe => &["process", "space", "probe"],
            Command::Mixture => &["process", "space", "kernel"],
            Command::DecayCheck => &["kernel", "decay"],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Space {
    pub domain: Domain,
    pub resolution: Vec<usize>,
    pub x0: IndexPoint,
    pub ladder: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KernelBlock {
    pub kernel: MixtureKernel,
    pub gammas: Vec<f64>,
    pub grid: DensityGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    MarginalBeta,
    ContinuityModulus,
    TvContrast,
    Association,
    Support,
    KlSupport,
    MixtureTvModulus,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 7] = [
        ProbeKind::MarginalBeta,
        ProbeKind::ContinuityModulus,
        ProbeKind::TvContrast,
        ProbeKind::Association,
        ProbeKind::Support,
        ProbeKind::KlSupport,
        ProbeKind::MixtureTvModulus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProbeKind::MarginalBeta => "marginal_beta",
            ProbeKind::ContinuityModulus => "continuity_modulus",
            ProbeKind::TvContrast => "tv_contrast",
            ProbeKind::Association => "association",
            ProbeKind::Support => "support",
            ProbeKind::KlSupport => "kl_support",
            ProbeKind::MixtureTvModulus => "mixture_tv_modulus",
        }
    }

    fn needs_kernel(&self) -> bool {
        matches!(self, ProbeKind::KlSupport | ProbeKind::MixtureTvModulus)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeBlock {
    pub probes: Vec<ProbeKind>,
    pub replicates: usize,
    pub epsilon: Vec<f64>,
    pub kl_epsilon: Vec<f64>,
    pub test_alpha: Option<f64>,
    pub region: Option<Vec<(f64, f64)>>,
    pub far: Option<f64>,
    pub gamma0: Option<f64>,
    pub axis: dsb_core::diagnostics::ModulusAxis,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone)]
pub struct DecayBlock {
    pub y0: f64,
    pub gamma0: f64,
    pub epsilon: f64,
    pub shells: Option<Vec<f64>>,
    pub growth_t: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub text: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub model: Option<DdpModel>,
    pub space: Option<Space>,
    pub kernel: Option<KernelBlock>,
    pub probe: Option<ProbeBlock>,
    pub decay: Option<DecayBlock>,
    pub out_dir: Option<String>,
    pub formats: Formats,
    pub document: Document,
}

fn parse_space(r: &mut Reader) -> Option<Space> {
    let lo = r.list_opt("space", "lo").unwrap_or_else(|| vec![0.0]);
    let hi = r.list_opt("space", "hi").unwrap_or_else(|| vec![1.0; lo.len()]);
    let domain = r.check("space", "lo", Domain::new(lo.clone(), hi))?;
    let resolution = r.usize_list("space", "resolution").unwrap_or_else(|| vec![5; lo.len()]);
    if resolution.len() != lo.len() {
        r.fail("space", "resolution", format!("needs {} entries", lo.len()));
    }
    let x0 = r.list_opt("space", "x0").unwrap_or_else(|| lo.clone());
    let x0 = r.check("space", "x0", IndexPoint::new(x0))?;
    if !domain.contains(&x0) {
        r.fail("space", "x0", "lies outside the domain");
    }
    let ladder = r
        .list_opt("space", "ladder")
        .unwrap_or_else(|| vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    if ladder.iter().any(|d| *d <= 0.0) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        r.fail("space", "ladder", "must be positive and strictly decreasing");
    }
    Some(Space {
        domain,
        resolution,
        x0,
        ladder,
    })
}

fn parse_process(r: &mut Reader, space: Option<&Space>) -> Option<DdpModel> {
    let s = "process";
    let variant = match r.str_opt(s, "variant") {
        Some(v) => match v.parse::<Variant>() {
            Ok(v) => Some(v),
            Err(_) => {
                r.fail(s, "variant", format!("unknown variant '{v}' (DDP, wDDP, thetaDDP)"));
                None
            }
        },
        None => {
            r.fail(s, "variant", "missing");
            None
        }
    };
    let alpha0 = r.f64_or(s, "alpha", 1.0);
    let alpha = match (r.f64_opt(s, "alpha_slope"), space) {
        (Some(slope), Some(sp)) => r.check(s, "alpha", Alpha::affine(alpha0, slope, &sp.domain)),
        _ => r.check(s, "alpha", Alpha::constant(alpha0)),
    };
    let truncation = match (r.usize_opt(s, "sticks"), r.f64_opt(s, "tail_mass")) {
        (Some(_), Some(_)) => {
            r.fail(s, "sticks", "give either sticks or tail_mass, not both");
            None
        }
        (Some(n), None) => Some(Truncation::Sticks(n)),
        (None, Some(t)) => Some(Truncation::TailMass(t)),
        (None, None) => Some(Truncation::default()),
    };
    let stick_kernel = {
        let (s0, tau) = (r.f64_or(s, "stick_sigma0", 1.0), r.f64_or(s, "stick_tau", 1.0));
        r.check(s, "stick_sigma0", CovKernelSpec::new(s0, tau, 0.0))
    };
    let atom_kernel = {
        let (s0, tau) = (r.f64_or(s, "atom_sigma0", 1.0), r.f64_or(s, "atom_tau", 1.0));
        r.check(s, "atom_sigma0", CovKernelSpec::new(s0, tau, 0.0))
    };
    let atom_variant = match r.str_opt(s, "atom_variant").as_deref() {
        None | Some("field") => Some(AtomVariant::Field),
        Some("iid") => Some(AtomVariant::Iid),
        Some("circle") => Some(AtomVariant::Circle),
        Some(other) => {
            r.fail(s, "atom_variant", format!("unknown atom variant '{other}' (field, iid, circle)"));
            None
        }
    };
    let law = r.str_opt(s, "atom_law").unwrap_or_else(|| {
        if atom_variant == Some(AtomVariant::Circle) {
            "uniform".into()
        } else {
            "normal".into()
        }
    });
    let marginals: Option<Vec<Marginal>> = match law.as_str() {
        "normal" => {
            let mean = r.list_opt(s, "atom_mean").unwrap_or_else(|| vec![0.0]);
            let scale = r.list_opt(s, "atom_scale").unwrap_or_else(|| vec![1.0; mean.len()]);
            if mean.len() != scale.len() {
                r.fail(s, "atom_scale", "needs one entry per atom_mean entry");
                None
            } else {
                mean.iter()
                    .zip(&scale)
                    .map(|(m, sc)| r.check(s, "atom_scale", Marginal::normal(*m, *sc)))
                    .collect()
            }
        }
        "uniform" => {
            let lo = r.list_opt(s, "atom_lo").unwrap_or_else(|| vec![0.0]);
            let hi = r.list_opt(s, "atom_hi").unwrap_or_else(|| vec![TAU; lo.len()]);
            if lo.len() != hi.len() {
                r.fail(s, "atom_hi", "needs one entry per atom_lo entry");
                None
            } else {
                lo.iter()
                    .zip(&hi)
                    .map(|(a, b)| r.check(s, "atom_lo", Marginal::uniform(*a, *b)))
                    .collect()
            }
        }
        other => {
            r.fail(s, "atom_law", format!("unknown atom law '{other}' (normal, uniform)"));
            None
        }
    };
    let (variant, alpha, truncation, sk, ak, av, marginals) =
        (variant?, alpha?, truncation?, stick_kernel?, atom_kernel?, atom_variant?, marginals?);
    let sticks = r.check(s, "sticks", StickSpec::new(alpha, sk, truncation))?;
    let atoms = r.check(s, "atom_law", AtomSpec::new(marginals, ak, av))?;
    r.check(s, "variant", DdpModel::new(variant, sticks, atoms))
}

fn parse_kernel(r: &mut Reader) -> Option<KernelBlock> {
    let s = "kernel";
    let family = r.str_opt(s, "family").unwrap_or_else(|| "gaussian_loc".into());
    let (kernel, y_default) = match family.as_str() {
        "gaussian_loc" => {
            let lo = r.f64_or(s, "gamma_min", 0.25);
            let hi = r.f64_or(s, "gamma_max", 2.0);
            (r.check(s, "gamma_min", MixtureKernel::gaussian_loc(lo, hi)), (-10.0, 10.0))
        }
        "beta_constrained" => {
            let b = r.f64_or(s, "beta_max", 20.0);
            (r.check(s, "beta_max", MixtureKernel::beta_constrained(b)), (0.0, 1.0))
        }
        "beta_free" => (r.check(s, "family", MixtureKernel::beta_free()), (0.0, 1.0)),
        other => {
            r.fail(s, "family", format!("unknown family '{other}' (gaussian_loc, beta_constrained, beta_free)"));
            (None, (0.0, 1.0))
        }
    };
    let gammas = r.list_opt(s, "gammas").unwrap_or_else(|| vec![1.0]);
    let y_lo = r.f64_or(s, "y_lo", y_default.0);
    let y_hi = r.f64_or(s, "y_hi", y_default.1);
    let nodes = r.usize_opt(s, "y_nodes").unwrap_or(DEFAULT_NODES);
    let grid = r.check(s, "y_nodes", DensityGrid::uniform(y_lo, y_hi, nodes));
    let kernel = kernel?;
    if !matches!(kernel, MixtureKernel::BetaFree) {
        for g in &gammas {
            r.check(s, "gammas", kernel.check_gamma(*g));
        }
    }
    Some(KernelBlock {
        kernel,
        gammas,
        grid: grid?,
    })
}

fn parse_probe(r: &mut Reader) -> Option<ProbeBlock> {
    let s = "probe";
    let names = r.str_list(s, "probes").unwrap_or_default();
    if names.is_empty() {
        r.fail(s, "probes", "list at least one probe");
    }
    let mut probes = Vec::new();
    for n in &names {
        match ProbeKind::ALL.iter().find(|p| p.name() == n) {
            Some(p) => probes.push(*p),
            None => r.fail(
                s,
                "probes",
                format!(
                    "unknown probe '{n}' ({})",
                    ProbeKind::ALL.map(|p| p.name()).join(", ")
                ),
            ),
        }
    }
    let d = Tolerances::default();
    let tolerances = Tolerances {
        ks_level: r.f64_or(s, "ks_level", d.ks_level),
        monotone_se: r.f64_or(s, "monotone_se", d.monotone_se),
        modulus_ratio: r.f64_or(s, "modulus_ratio", d.modulus_ratio),
        tv_theta_max: r.f64_or(s, "tv_theta_max", d.tv_theta_max),
        tv_moving_min: r.f64_or(s, "tv_moving_min", d.tv_moving_min),
        association_far_se: r.f64_or(s, "association_far_se", d.association_far_se),
        ci_level: r.f64_or(s, "ci_level", d.ci_level),
        normalization: r.f64_or(s, "normalization", d.normalization),
    };
    let region = match (r.list_opt(s, "region_lo"), r.list_opt(s, "region_hi")) {
        (Some(lo), Some(hi)) if lo.len() == hi.len() => Some(lo.into_iter().zip(hi).collect()),
        (None, None) => None,
        _ => {
            r.fail(s, "region_lo", "region_lo and region_hi must be given together with equal lengths");
            None
        }
    };
    let axis = match r.str_opt(s, "axis").as_deref() {
        None | Some("space") => dsb_core::diagnostics::ModulusAxis::Space,
        Some("gamma") => dsb_core::diagnostics::ModulusAxis::Gamma,
        Some(other) => {
            r.fail(s, "axis", format!("unknown axis '{other}' (space, gamma)"));
            dsb_core::diagnostics::ModulusAxis::Space
        }
    };
    let replicates = match r.usize_opt(s, "replicates") {
        Some(n) => n,
        None => {
            r.fail(s, "replicates", "missing");
            0
        }
    };
    Some(ProbeBlock {
        probes,
        replicates,
        epsilon: r.list_opt(s, "epsilon").unwrap_or_else(|| vec![0.25]),
        kl_epsilon: r.list_opt(s, "kl_epsilon").unwrap_or_else(|| vec![0.1]),
        test_alpha: r.f64_opt(s, "test_alpha"),
        region,
        far: r.f64_opt(s, "far"),
        gamma0: r.f64_opt(s, "gamma0"),
        axis,
        tolerances,
    })
}

fn parse_decay(r: &mut Reader) -> Option<DecayBlock> {
    let s = "decay";
    let y0 = r.f64_req(s, "y0");
    let gamma0 = r.f64_req(s, "gamma0");
    let growth_t = match r.list_opt(s, "growth_t") {
        Some(v) if v.len() == 2 && 0.0 < v[0] && v[0] < v[1] => Some((v[0], v[1])),
        Some(_) => {
            r.fail(s, "growth_t", "expected 'lo, hi' with 0 < lo < hi");
            None
        }
        None => None,
    };
    Some(DecayBlock {
        y0: y0?,
        gamma0: gamma0?,
        epsilon: r.f64_or(s, "epsilon", 0.01),
        shells: r.list_opt(s, "shells"),
        growth_t,
    })
}

impl RunConfig {
    /// Parses and validates `text`. `command` is the subcommand the run was
    /// invoked with; blocks it needs must be present.
    pub fn parse(text: &str, command: Option<Command>) -> Result<Self, ConfigError> {
        let document = Document::parse(text)?;
        let mut r = Reader {
            doc: &document,
            errors: Vec::new(),
        };
        let declared = match r.str_opt("run", "command") {
            Some(c) => match Command::parse(&c) {
                Some(c) => Some(c),
                None => {
                    r.fail("run", "command", format!("unknown command '{c}'"));
                    None
                }
            },
            None => None,
        };
        let command = match (command, declared) {
            (Some(a), Some(b)) if a != b => {
                r.fail("run", "command", format!("config declares '{}' but '{}' was requested", b.name(), a.name()));
                Some(a)
            }
            (a, b) => a.or(b),
        };
        let seed = r.u64_opt("run", "seed");
        if document.get("run", "seed").is_none() {
            r.fail("run", "seed", "missing (seeds are mandatory)");
        }
        let space = document.has("space").then(|| parse_space(&mut r)).flatten();
        let model = document.has("process").then(|| parse_process(&mut r, space.as_ref())).flatten();
        let kernel = document.has("kernel").then(|| parse_kernel(&mut r)).flatten();
        let probe = document.has("probe").then(|| parse_probe(&mut r)).flatten();
        let decay = document.has("decay").then(|| parse_decay(&mut r)).flatten();
        let out_dir = r.str_opt("output", "dir");
        let formats = match r.str_list("output", "formats") {
            Some(list) => {
                for f in &list {
                    if !["csv", "json", "text"].contains(&f.as_str()) {
                        r.fail("output", "formats", format!("unknown format '{f}' (csv, json, text)"));
                    }
                }
                Formats {
                    csv: list.iter().any(|f| f == "csv"),
                    json: list.iter().any(|f| f == "json"),
                    text: list.iter().any(|f| f == "text"),
                }
            }
            None => Formats {
                csv: true,
                json: true,
                text: false,
            },
        };
        if let Some(c) = command {
            for block in c.required() {
                if !document.has(block) {
                    r.fail(block, "*", format!("section [{block}] is required by '{}'", c.name()));
                }
            }
        }
        if let Some(p) = &probe {
            if p.probes.iter().any(ProbeKind::needs_kernel) && !document.has("kernel") {
                r.fail("kernel", "*", "section [kernel] is required by kl_support and mixture_tv_modulus");
            }
        }
        if let (Some(c), Some(k)) = (command, &kernel) {
            if c != Command::DecayCheck {
                r.check("kernel", "family", k.kernel.ensure_pipeline_ok());
            }
        }
        if !r.errors.is_empty() {
            return Err(ConfigError::Invalid(r.errors));
        }
        Ok(Self {
            seed: seed.expect("checked above"),
            model,
            space,
            kernel,
            probe,
            decay,
            out_dir,
            formats,
            document,
        })
    }

    /// Content hash of everything that affects results. The output directory
    /// is excluded; the effective seed is included.
    pub fn digest(&self) -> String {
        self.document
            .digest(&[("output", "dir")], &[("run", "seed", Value::Float(self.seed as f64))])
    }
}
