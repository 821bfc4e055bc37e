//! Python bindings for `oddsbound`.
//!
//! Library errors surface as `ValueError`. Composite results are returned
//! as dictionaries.

use oddsbound::{bayes_prior, contingency, effect_bounds, kepler, numerics};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: oddsbound::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn lift<T>(r: oddsbound::Result<T>) -> PyResult<T> {
    r.map_err(py_err)
}

/// 2x2 case-control table of counts (n11, n12, n21, n22).
#[pyclass(name = "TwoByTwoTable", module = "oddsbound_py", frozen)]
struct PyTable {
    inner: contingency::TwoByTwoTable,
}

#[pymethods]
impl PyTable {
    #[new]
    fn new(n11: u64, n12: u64, n21: u64, n22: u64) -> PyResult<Self> {
        Ok(Self {
            inner: lift(contingency::TwoByTwoTable::new(n11, n12, n21, n22))?,
        })
    }

    /// Parses "n11,n12,n21,n22".
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: lift(text.parse())?,
        })
    }

    fn cells(&self) -> (u64, u64, u64, u64) {
        let [a, b, c, d] = self.inner.cells();
        (a, b, c, d)
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    /// (p_hat, q_hat, w_hat)
    fn proportions(&self) -> (f64, f64, f64) {
        let s = contingency::estimate_probs(&self.inner);
        (s.p_hat, s.q_hat, s.w_hat)
    }

    #[pyo3(signature = (correction = false))]
    fn odds_ratio(&self, correction: bool) -> PyResult<f64> {
        Ok(lift(contingency::estimate_or(&self.inner, correction))?.or)
    }

    #[pyo3(signature = (correction = false))]
    fn t_statistic(&self, correction: bool) -> PyResult<f64> {
        lift(contingency::t_statistic(&self.inner, correction))
    }

    #[pyo3(signature = (correction = false))]
    fn sigma_hat(&self, correction: bool) -> PyResult<f64> {
        lift(contingency::sigma_hat(&self.inner, correction))
    }

    fn __repr__(&self) -> String {
        format!("TwoByTwoTable({})", self.inner)
    }
}

/// Risk parameterization (Pr(D|E), Pr(D|Ē), Pr(E)).
#[pyclass(name = "RiskParams", module = "oddsbound_py", frozen)]
struct PyRisk {
    inner: contingency::RiskParams,
}

#[pymethods]
impl PyRisk {
    #[new]
    fn new(r_de: f64, r_dne: f64, v: f64) -> PyResult<Self> {
        Ok(Self {
            inner: lift(contingency::RiskParams::new(r_de, r_dne, v))?,
        })
    }

    #[getter]
    fn r_de(&self) -> f64 {
        self.inner.r_de()
    }

    #[getter]
    fn r_dne(&self) -> f64 {
        self.inner.r_dne()
    }

    #[getter]
    fn v(&self) -> f64 {
        self.inner.v()
    }

    fn odds_ratio(&self) -> f64 {
        contingency::or_rr_from_risk(&self.inner).or
    }

    fn relative_risk(&self) -> f64 {
        contingency::or_rr_from_risk(&self.inner).rr
    }

    /// Standardized effect ln(OR)/σ(v).
    fn gamma(&self) -> f64 {
        effect_bounds::gamma(&self.inner)
    }

    fn to_cohort(&self) -> PyCohort {
        PyCohort {
            inner: contingency::risk_to_cohort(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "RiskParams(r_de={}, r_dne={}, v={})",
            self.inner.r_de(),
            self.inner.r_dne(),
            self.inner.v()
        )
    }
}

/// Cohort parameterization (Pr(E|D), Pr(E|D̄), Pr(D)).
#[pyclass(name = "CohortParams", module = "oddsbound_py", frozen)]
struct PyCohort {
    inner: contingency::CohortParams,
}

#[pymethods]
impl PyCohort {
    #[new]
    fn new(p: f64, q: f64, w: f64) -> PyResult<Self> {
        Ok(Self {
            inner: lift(contingency::CohortParams::new(p, q, w))?,
        })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    #[getter]
    fn w(&self) -> f64 {
        self.inner.w()
    }

    fn odds_ratio(&self) -> f64 {
        self.inner.odds_ratio()
    }

    fn to_risk(&self) -> PyRisk {
        PyRisk {
            inner: contingency::cohort_to_risk(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("CohortParams(p={}, q={}, w={})", self.inner.p(), self.inner.q(), self.inner.w())
    }
}

#[pyfunction]
fn bound_constants(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let c = effect_bounds::bound_constants();
    let d = PyDict::new(py);
    d.set_item("z", c.z)?;
    d.set_item("x_star", c.x_star)?;
    d.set_item("or_star", c.or_star)?;
    d.set_item("llc", c.llc)?;
    d.set_item("p_star", c.p_star)?;
    Ok(d)
}

#[pyfunction]
fn gamma_max(or: f64) -> PyResult<f64> {
    lift(effect_bounds::gamma_max(or))
}

#[pyfunction]
fn kappa(x: f64) -> f64 {
    effect_bounds::kappa(x)
}

#[pyfunction]
fn kappa_prime(x: f64) -> f64 {
    effect_bounds::kappa_prime(x)
}

#[pyfunction]
fn sigma2_w(w: f64, p: f64, q: f64) -> PyResult<f64> {
    lift(effect_bounds::sigma2_w(w, p, q))
}

#[pyfunction]
fn sigma2_v(v: f64, r_de: f64, r_dne: f64) -> PyResult<f64> {
    lift(effect_bounds::sigma2_v(v, r_de, r_dne))
}

#[pyfunction]
fn w_min(p: f64, q: f64) -> PyResult<f64> {
    lift(effect_bounds::w_min(p, q))
}

#[pyfunction]
fn v_min(rr: f64, or: f64) -> PyResult<f64> {
    lift(effect_bounds::v_min(rr, or))
}

/// Risks attaining γ_max(or).
#[pyfunction]
fn optimal_risk(or: f64) -> PyResult<PyRisk> {
    Ok(PyRisk {
        inner: lift(effect_bounds::optimal_risk(or))?,
    })
}

#[pyfunction]
#[pyo3(signature = (n_samples, seed = 42))]
fn verify_bound(py: Python<'_>, n_samples: usize, seed: u64) -> PyResult<Bound<'_, PyDict>> {
    let r = lift(py.detach(|| effect_bounds::verify_bound(n_samples, seed)))?;
    let d = PyDict::new(py);
    d.set_item("samples", r.samples)?;
    d.set_item("violations", r.violations)?;
    d.set_item("max_gamma_observed", r.max_gamma_observed)?;
    d.set_item("bound", r.bound)?;
    d.set_item("arg_max", (r.arg_max.r_de(), r.arg_max.r_dne(), r.arg_max.v()))?;
    Ok(d)
}

fn solution_dict(py: Python<'_>, s: kepler::KeplerSolution) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("eccentric_anomaly", s.eccentric_anomaly)?;
    d.set_item("residual", s.residual)?;
    d.set_item("method", s.method.as_str())?;
    d.set_item("iterations_or_order", s.iterations_or_order)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (mean_anomaly, eps, tol = 1e-12))]
fn kepler_solve(py: Python<'_>, mean_anomaly: f64, eps: f64, tol: f64) -> PyResult<Bound<'_, PyDict>> {
    let problem = lift(kepler::KeplerProblem::new(mean_anomaly, eps))?;
    solution_dict(py, lift(kepler::kepler_solve(&problem, tol))?)
}

#[pyfunction]
fn kepler_series(py: Python<'_>, mean_anomaly: f64, eps: f64, order: usize) -> PyResult<Bound<'_, PyDict>> {
    let problem = lift(kepler::KeplerProblem::new(mean_anomaly, eps))?;
    solution_dict(py, lift(kepler::kepler_series(&problem, order))?)
}

/// List of (order, series value, absolute error against Newton).
#[pyfunction]
#[pyo3(signature = (mean_anomaly, eps, max_order, tol = 1e-12))]
fn divergence_table(mean_anomaly: f64, eps: f64, max_order: usize, tol: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    let problem = lift(kepler::KeplerProblem::new(mean_anomaly, eps))?;
    let table = lift(kepler::divergence_table(&problem, max_order, tol))?;
    Ok(table.rows.iter().map(|r| (r.order, r.series, r.abs_error)).collect())
}

#[pyfunction]
fn mean_anomaly(eccentric_anomaly: f64, eps: f64) -> PyResult<f64> {
    lift(kepler::mean_anomaly(eccentric_anomaly, eps))
}

#[pyfunction]
fn series_radius() -> f64 {
    kepler::series_radius()
}

/// Prior variance σ₀ for μ/σ given Pr(OR > x) = beta.
#[pyfunction]
#[pyo3(signature = (x, beta, sigma_m = None))]
fn flattest_prior(x: f64, beta: f64, sigma_m: Option<f64>) -> PyResult<f64> {
    let sigma_m = match sigma_m {
        Some(s) => s,
        None => lift(bayes_prior::sigma_m_max(x))?,
    };
    Ok(lift(bayes_prior::flattest_prior(x, beta, sigma_m))?.sigma0)
}

#[pyfunction]
fn sigma_m_max(x: f64) -> PyResult<f64> {
    lift(bayes_prior::sigma_m_max(x))
}

fn pathway_dict(py: Python<'_>, p: bayes_prior::DesignPathway) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("pr_dne", p.pr_dne)?;
    d.set_item("rr", p.rr)?;
    d.set_item("share", p.share)?;
    d.set_item("sigma", p.sigma)?;
    Ok(d)
}

#[pyfunction]
fn sigma_wm_pathway(py: Python<'_>, or: f64, pr_de: f64) -> PyResult<Bound<'_, PyDict>> {
    pathway_dict(py, lift(bayes_prior::sigma_wm_pathway(or, pr_de))?)
}

#[pyfunction]
fn sigma_vm_pathway(py: Python<'_>, or: f64, pr_de: f64) -> PyResult<Bound<'_, PyDict>> {
    pathway_dict(py, lift(bayes_prior::sigma_vm_pathway(or, pr_de))?)
}

#[pyfunction]
fn p_to_z(p: f64) -> PyResult<f64> {
    lift(bayes_prior::p_to_z(p))
}

#[pyfunction]
fn z_to_p(z: f64) -> PyResult<f64> {
    lift(bayes_prior::z_to_p(z))
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    numerics::normal_cdf(x)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    lift(numerics::normal_quantile(p))
}

#[pymodule]
fn oddsbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyRisk>()?;
    m.add_class::<PyCohort>()?;
    m.add("LLC", effect_bounds::LLC)?;
    m.add_function(wrap_pyfunction!(bound_constants, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_max, m)?)?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_prime, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2_w, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2_v, m)?)?;
    m.add_function(wrap_pyfunction!(w_min, m)?)?;
    m.add_function(wrap_pyfunction!(v_min, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_risk, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bound, m)?)?;
    m.add_function(wrap_pyfunction!(kepler_solve, m)?)?;
    m.add_function(wrap_pyfunction!(kepler_series, m)?)?;
    m.add_function(wrap_pyfunction!(divergence_table, m)?)?;
    m.add_function(wrap_pyfunction!(mean_anomaly, m)?)?;
    m.add_function(wrap_pyfunction!(series_radius, m)?)?;
    m.add_function(wrap_pyfunction!(flattest_prior, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_m_max, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_wm_pathway, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_vm_pathway, m)?)?;
    m.add_function(wrap_pyfunction!(p_to_z, m)?)?;
    m.add_function(wrap_pyfunction!(z_to_p, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    Ok(())
}
