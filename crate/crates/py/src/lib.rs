//! Python bindings: `import dsb_lab`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dsb_core::diagnostics::{
    association_probe, continuity_modulus_probe, default_decay_shells, marginal_beta_probe, support_probe,
    tv_contrast_probe, DiagnosticsReport, ProbeConfig,
};
use dsb_core::mixture::{self as mx, check_decay_condition};
use dsb_core::{
    ddp, Alpha, AtomSpec, AtomVariant, CovKernelSpec, DdpModel, DensityGrid, Domain, DsbError, IndexPoint,
    LocationSet, Marginal, MeasureField, MixtureKernel, StickSpec, StreamSeed, Truncation, Variant,
};

fn err(e: DsbError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn locations(points: Vec<Vec<f64>>, lo: f64, hi: f64) -> Result<LocationSet, DsbError> {
    let dim = points.first().map_or(1, Vec::len);
    let domain = Domain::cube(lo, hi, dim)?;
    let pts = points.into_iter().map(IndexPoint::new).collect::<Result<Vec<_>, _>>()?;
    LocationSet::new(pts, domain)
}

fn kernel_from(family: &str, gamma_min: f64, gamma_max: f64, beta_max: f64) -> Result<MixtureKernel, DsbError> {
    match family {
        "gaussian_loc" => MixtureKernel::gaussian_loc(gamma_min, gamma_max),
        "beta_constrained" => MixtureKernel::beta_constrained(beta_max),
        "beta_free" => MixtureKernel::beta_free(),
        other => Err(DsbError::Config(format!(
            "unknown kernel family '{other}' (expected gaussian_loc, beta_constrained or beta_free)"
        ))),
    }
}

fn report_dict<'py>(py: Python<'py>, r: &DiagnosticsReport) -> PyResult<Bound<'py, PyAny>> {
    let text = r.to_json().map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Stick-breaking process description.
///
/// `variant` is one of "DDP", "wDDP" or "thetaDDP". Exactly one of
/// `sticks` and `tail_mass` picks the truncation; the default is a tail target.
#[pyclass(frozen, module = "dsb_lab")]
pub struct Model {
    inner: DdpModel,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (
        variant = "DDP", alpha = 1.0, sticks = None, tail_mass = None,
        sigma0 = 1.0, tau = 1.0, atom_law = "normal", atom_params = (0.0, 1.0),
        atom_sigma0 = 1.0, atom_tau = 1.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        variant: &str,
        alpha: f64,
        sticks: Option<usize>,
        tail_mass: Option<f64>,
        sigma0: f64,
        tau: f64,
        atom_law: &str,
        atom_params: (f64, f64),
        atom_sigma0: f64,
        atom_tau: f64,
    ) -> PyResult<Self> {
        let build = || -> Result<DdpModel, DsbError> {
            let variant: Variant = variant.parse()?;
            let truncation = match (sticks, tail_mass) {
                (Some(_), Some(_)) => return Err(DsbError::Config("give sticks or tail_mass, not both".into())),
                (Some(n), None) => Truncation::Sticks(n),
                (None, Some(t)) => Truncation::TailMass(t),
                (None, None) => Truncation::default(),
            };
            let law = match atom_law {
                "normal" => Marginal::normal(atom_params.0, atom_params.1)?,
                "uniform" => Marginal::uniform(atom_params.0, atom_params.1)?,
                other => return Err(DsbError::Config(format!("unknown atom law '{other}'"))),
            };
            let atom_variant = match variant {
                Variant::ThetaDdp => AtomVariant::Iid,
                _ => AtomVariant::Field,
            };
            DdpModel::new(
                variant,
                StickSpec::new(Alpha::constant(alpha)?, CovKernelSpec::new(sigma0, tau, 0.0)?, truncation)?,
                AtomSpec::new(vec![law], CovKernelSpec::new(atom_sigma0, atom_tau, 0.0)?, atom_variant)?,
            )
        };
        Ok(Self { inner: build().map_err(err)? })
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant.name()
    }

    #[getter]
    fn num_sticks(&self) -> usize {
        self.inner.sticks.num_sticks()
    }

    /// Draws one truncated path at `points` inside the cube `[lo, hi]^p`.
    #[pyo3(signature = (points, seed, lo = 0.0, hi = 1.0))]
    fn sample_path(&self, points: Vec<Vec<f64>>, seed: u64, lo: f64, hi: f64) -> PyResult<Path> {
        let locs = locations(points, lo, hi).map_err(err)?;
        let inner = self.inner.sample_path(&locs, &StreamSeed::new(seed)).map_err(err)?;
        Ok(Path { inner })
    }

    fn __repr__(&self) -> String {
        format!("Model(variant={}, sticks={})", self.inner.variant, self.inner.sticks.num_sticks())
    }
}

/// One sampled path: a discrete measure per location.
#[pyclass(frozen, module = "dsb_lab")]
pub struct Path {
    inner: MeasureField,
}

#[pymethods]
impl Path {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn weights(&self, loc: usize) -> PyResult<Vec<f64>> {
        self.check(loc)?;
        Ok(self.inner.at(loc).weights().to_vec())
    }

    /// Atoms at `loc`, one list of coordinates per stick.
    fn atoms(&self, loc: usize) -> PyResult<Vec<Vec<f64>>> {
        self.check(loc)?;
        let m = self.inner.at(loc);
        Ok((0..m.len()).map(|i| m.atom(i).to_vec()).collect())
    }

    #[getter]
    fn tail_record(&self) -> Vec<f64> {
        self.inner.tail_record.clone()
    }

    fn tv_distance(&self, a: usize, b: usize) -> PyResult<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(ddp::tv_distance(self.inner.at(a), self.inner.at(b)))
    }

    /// Mixture density at `loc` tabulated on `n` uniform nodes of `[lo, hi]`.
    #[pyo3(signature = (loc, family, gamma, lo, hi, n = 2001, gamma_min = 0.05, gamma_max = 5.0, beta_max = 20.0))]
    #[allow(clippy::too_many_arguments)]
    fn mixture_density(
        &self,
        loc: usize,
        family: &str,
        gamma: f64,
        lo: f64,
        hi: f64,
        n: usize,
        gamma_min: f64,
        gamma_max: f64,
        beta_max: f64,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.check(loc)?;
        let run = || -> Result<(Vec<f64>, Vec<f64>), DsbError> {
            let kernel = kernel_from(family, gamma_min, gamma_max, beta_max)?;
            kernel.ensure_pipeline_ok()?;
            let grid = DensityGrid::uniform(lo, hi, n)?;
            let f = mx::mixture_density(self.inner.at(loc), &kernel, gamma, &grid)?;
            Ok((grid.nodes().to_vec(), f))
        };
        run().map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_table().to_csv().map_err(err)
    }
}

impl Path {
    fn check(&self, loc: usize) -> PyResult<()> {
        if loc < self.inner.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("location {loc} out of range for {} locations", self.inner.len())))
        }
    }
}

fn tabulated(lo: f64, hi: f64, p: &[f64], q: &[f64]) -> PyResult<DensityGrid> {
    if p.len() != q.len() {
        return Err(PyValueError::new_err("densities must share one grid"));
    }
    DensityGrid::uniform(lo, hi, p.len()).map_err(err)
}

/// Hellinger distance between densities tabulated on a uniform grid over `[lo, hi]`.
#[pyfunction]
fn hellinger(lo: f64, hi: f64, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    Ok(mx::hellinger(&tabulated(lo, hi, &p, &q)?, &p, &q))
}

#[pyfunction]
fn l1_distance(lo: f64, hi: f64, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    Ok(mx::l1_distance(&tabulated(lo, hi, &p, &q)?, &p, &q))
}

#[pyfunction]
fn kl_divergence(lo: f64, hi: f64, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    mx::kl_divergence(&tabulated(lo, hi, &p, &q)?, &p, &q).map_err(err)
}

/// Kernel tail check; returns `{"family", "profile": [(R, sup)], "passed"}`.
#[pyfunction]
#[pyo3(signature = (family, y0, gamma0, epsilon, shells = None, gamma_min = 0.05, gamma_max = 5.0, beta_max = 20.0))]
#[allow(clippy::too_many_arguments)]
fn decay_check<'py>(
    py: Python<'py>,
    family: &str,
    y0: f64,
    gamma0: f64,
    epsilon: f64,
    shells: Option<Vec<f64>>,
    gamma_min: f64,
    gamma_max: f64,
    beta_max: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let kernel = kernel_from(family, gamma_min, gamma_max, beta_max).map_err(err)?;
    let shells = shells.unwrap_or_else(|| default_decay_shells(&kernel));
    let r = check_decay_condition(&kernel, y0, gamma0, epsilon, &shells).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("family", r.family)?;
    d.set_item("profile", r.profile)?;
    d.set_item("passed", r.passed)?;
    Ok(d.into_any())
}

/// Runs a Monte Carlo probe and returns its report as a dict.
///
/// `name` is one of marginal_beta, continuity_modulus, tv_contrast,
/// association or support.
#[pyfunction]
#[pyo3(signature = (name, model, ladder, replicates, seed, lo = 0.0, hi = 1.0, x0 = 0.0, resolution = 5))]
#[allow(clippy::too_many_arguments)]
fn probe<'py>(
    py: Python<'py>,
    name: &str,
    model: &Model,
    ladder: Vec<f64>,
    replicates: usize,
    seed: u64,
    lo: f64,
    hi: f64,
    x0: f64,
    resolution: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let run = || -> Result<DiagnosticsReport, DsbError> {
        let domain = Domain::cube(lo, hi, 1)?;
        let cfg = ProbeConfig::new(model.inner.clone(), domain.clone(), IndexPoint::scalar(x0)?, ladder, replicates, seed)?;
        let grid = || dsb_core::build_grid(&domain, &[resolution]);
        match name {
            "marginal_beta" => marginal_beta_probe(&cfg, &grid()?, None),
            "continuity_modulus" => continuity_modulus_probe(&cfg),
            "tv_contrast" => tv_contrast_probe(&cfg),
            "association" => {
                let region = model
                    .inner
                    .atoms
                    .marginals()
                    .iter()
                    .map(|m| match *m {
                        Marginal::Normal { mean, .. } => (mean, f64::INFINITY),
                        Marginal::Uniform { lo, hi } => (0.5 * (lo + hi), hi),
                    })
                    .collect::<Vec<_>>();
                association_probe(&cfg, &region, None)
            }
            "support" => support_probe(&cfg, None, &grid()?),
            other => Err(DsbError::Config(format!("unknown probe '{other}'"))),
        }
    };
    let report = py.detach(run).map_err(err)?;
    report_dict(py, &report)
}

#[pymodule]
fn dsb_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", dsb_core::VERSION)?;
    m.add_class::<Model>()?;
    m.add_class::<Path>()?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(l1_distance, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(decay_check, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    Ok(())
}
