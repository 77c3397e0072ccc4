//! Python bindings for the tree-disorder solver core.

use anderson_tree::density::{tail_certify, TailBound};
use anderson_tree::disorder::{DisorderLaw, UniformScaling};
use anderson_tree::halfplane::{self, EnergyPoint, HalfPlanePoint};
use anderson_tree::population::{
    init_pool, pool_stats, run_to_fixed_point, step_pool, InitMode, IterationConfig, MeasurePool,
};
use anderson_tree::spectra::{self, EtaPolicy, SolveSettings};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};

type PyObj = Py<PyAny>;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// serde_json::Value -> Python object, for report-shaped results.
fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<PyObj> {
    Ok(match v {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => PyBool::new(py, *b).to_owned().unbind().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.unbind().into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.unbind().into_any(),
        serde_json::Value::Array(a) => {
            let list = PyList::empty(py);
            for item in a {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into_any()
        }
        serde_json::Value::Object(o) => {
            let dict = PyDict::new(py);
            for (k, val) in o {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.unbind().into_any()
        }
    })
}

fn build_law(kind: &str, beta: f64, l: f64) -> PyResult<Option<DisorderLaw>> {
    if beta == 0.0 {
        return Ok(None);
    }
    match kind {
        "uniform" => DisorderLaw::uniform(beta, l, UniformScaling::MomentMatched),
        "uniform_plain" => DisorderLaw::uniform(beta, l, UniformScaling::Plain),
        "gaussian" => DisorderLaw::gaussian(beta, l),
        other => return Err(PyValueError::new_err(format!("unknown law kind {other:?}"))),
    }
    .map(Some)
    .map_err(value_err)
}

/// Free (zero-disorder) Green's function w_z for branching number k.
#[pyfunction]
fn free_green(z: Complex64, k: u32) -> PyResult<Complex64> {
    if k < 2 {
        return Err(PyValueError::new_err("k must be >= 2"));
    }
    Ok(halfplane::free_green(z, k))
}

/// Branch square root: argument taken in (-pi, pi], halved.
#[pyfunction]
fn branch_sqrt(z: Complex64) -> Complex64 {
    halfplane::branch_sqrt(z)
}

/// Hyperbolic distance surrogate |z-w|^2 / (Im z Im w).
#[pyfunction]
fn hyp_dist(z: Complex64, w: Complex64) -> PyResult<f64> {
    let a = HalfPlanePoint::from_complex(z).map_err(value_err)?;
    let b = HalfPlanePoint::from_complex(w).map_err(value_err)?;
    Ok(halfplane::hyp_dist(a, b))
}

/// Cauchy kernel density of sigma_z at x.
#[pyfunction]
fn cauchy_density(z: Complex64, x: f64) -> PyResult<f64> {
    let p = HalfPlanePoint::from_complex(z).map_err(value_err)?;
    Ok(anderson_tree::density::cauchy_density(p, x))
}

/// Population pool for the distributional recursion.
#[pyclass]
struct Pool {
    pool: MeasurePool,
    cfg: IterationConfig,
}

#[pymethods]
impl Pool {
    /// Create a pool of `n` samples. `init` is "leaf" or a complex point for
    /// a delta start; beta = 0 means zero disorder.
    #[new]
    #[pyo3(signature = (e, eta, k, beta=0.0, n=10_000, seed=0, law="uniform", l=2.0, init=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        e: f64,
        eta: f64,
        k: u32,
        beta: f64,
        n: usize,
        seed: u64,
        law: &str,
        l: f64,
        init: Option<Complex64>,
    ) -> PyResult<Self> {
        let energy = EnergyPoint::new(e, eta, k).map_err(value_err)?;
        let mut cfg = IterationConfig::new(energy, build_law(law, beta, l)?, seed);
        cfg.pool_size = n;
        let mode = match init {
            Some(z) => InitMode::Delta(HalfPlanePoint::from_complex(z).map_err(value_err)?),
            None => InitMode::LeafLaw,
        };
        let pool = init_pool(mode, &cfg).map_err(value_err)?;
        Ok(Self { pool, cfg })
    }

    fn step(&mut self, generations: u32) {
        for _ in 0..generations {
            self.pool = step_pool(&self.pool, &self.cfg);
        }
    }

    fn run_to_fixed_point(&mut self, max_generations: u32, tol: f64) -> PyResult<bool> {
        self.cfg.max_generations = max_generations;
        self.cfg.convergence_tol = tol;
        let init = InitMode::Delta(self.cfg.energy.free_point());
        let (pool, trace) = run_to_fixed_point(&self.cfg, init).map_err(value_err)?;
        self.pool = pool;
        Ok(trace.converged)
    }

    fn samples(&self) -> Vec<Complex64> {
        self.pool.samples().iter().map(|p| p.as_complex()).collect()
    }

    fn generation(&self) -> u32 {
        self.pool.generation()
    }

    fn lyapunov(&self) -> (f64, f64) {
        let est = spectra::lyapunov_estimate(&self.pool);
        (est.value, est.stderr)
    }

    /// Mean squared hyperbolic distance to the free point.
    fn mean_hyp_dist_sq(&self) -> f64 {
        pool_stats(&self.pool, self.cfg.energy.free_point()).mean_hyp_dist_sq
    }
}

/// Full spectral report as a dict; eta=None selects the eta schedule with
/// linear extrapolation to 0.
#[pyfunction]
#[pyo3(signature = (e, k, beta, eta=None, pool_size=20_000, max_generations=300, seed=0, law="uniform", l=2.0))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    e: f64,
    k: u32,
    beta: f64,
    eta: Option<f64>,
    pool_size: usize,
    max_generations: u32,
    seed: u64,
    law: &str,
    l: f64,
) -> PyResult<PyObj> {
    let settings = SolveSettings {
        e,
        k,
        beta,
        law: build_law(law, beta, l)?,
        eta: match eta {
            Some(v) => EtaPolicy::Fixed(v),
            None => EtaPolicy::Schedule,
        },
        pool_size,
        max_generations,
        convergence_tol: 0.005,
        eps: 0.1,
        seed,
    };
    let report = spectra::solve_report(&settings).map_err(value_err)?;
    let value = serde_json::to_value(&report).map_err(value_err)?;
    json_to_py(py, &value)
}

/// Hyperbolic-regime tail certificate as a dict.
#[pyfunction]
#[pyo3(signature = (e, k, beta, eta=None, n_steps=200, l=2.0, t=None))]
fn certify(
    py: Python<'_>,
    e: f64,
    k: u32,
    beta: f64,
    eta: Option<f64>,
    n_steps: u32,
    l: f64,
    t: Option<f64>,
) -> PyResult<PyObj> {
    let eta = eta.unwrap_or_else(|| (beta * beta).min(1e-3).max(1e-12));
    let energy = EnergyPoint::new(e, eta, k).map_err(value_err)?;
    let nu_tail = match build_law("uniform", beta, l)? {
        Some(law) => {
            let (s, r) = law.tail_pair();
            TailBound::new(s, r, 0.0)
        }
        None => TailBound::new(0.0, 0.0, 0.0),
    };
    let eta_tail = TailBound::new(eta / std::f64::consts::PI, 0.0, 0.0);
    let report = tail_certify(&energy, beta, nu_tail, eta_tail, n_steps, t).map_err(value_err)?;
    let value = serde_json::to_value(&report).map_err(value_err)?;
    json_to_py(py, &value)
}

/// Disorder-law validation report as a dict.
#[pyfunction]
#[pyo3(signature = (kind, beta, l=2.0, tol=0.05))]
fn validate_law(py: Python<'_>, kind: &str, beta: f64, l: f64, tol: f64) -> PyResult<PyObj> {
    let law = build_law(kind, beta, l)?
        .ok_or_else(|| PyValueError::new_err("validation requires beta > 0"))?;
    let report = law.validate(tol).map_err(value_err)?;
    let value = serde_json::to_value(&report).map_err(value_err)?;
    json_to_py(py, &value)
}

#[pymodule]
fn anderson_tree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(free_green, m)?)?;
    m.add_function(wrap_pyfunction!(branch_sqrt, m)?)?;
    m.add_function(wrap_pyfunction!(hyp_dist, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_density, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(validate_law, m)?)?;
    m.add_class::<Pool>()?;
    Ok(())
}
