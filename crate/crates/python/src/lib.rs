//! Python module `cavmag`: standard forms, Fisher information, RWA and
//! near-critical dynamics, and the scaling sweeps.

use cavmag_core::sweep::{self, EvalTime};
use cavmag_core::{fisher, gaussian, Complex64, CriticalModel, Error, FitResult, ParamDerivatives, RwaModel, StandardForm};
use nalgebra::{DMatrix, Matrix2};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(cavmag, CavmagError, PyException, "Numerical failure inside cavmag-core.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidModel(_)
        | Error::NonPhysicalState(_)
        | Error::WrongModeCount { .. }
        | Error::SuperradiantPhase { .. }
        | Error::ZeroCoupling
        | Error::NonPositiveData { .. }
        | Error::TooFewPoints(_) => PyValueError::new_err(e.to_string()),
        _ => CavmagError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for cavmag_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Single-mode Gaussian state `(α, r, φ, n_th)`.
#[pyclass(name = "StandardForm", module = "cavmag", frozen)]
struct PyStandardForm {
    inner: StandardForm,
}

#[pymethods]
impl PyStandardForm {
    #[new]
    #[pyo3(signature = (alpha = Complex64::new(0.0, 0.0), r = 0.0, phi = 0.0, n_th = 0.0))]
    fn new(alpha: Complex64, r: f64, phi: f64, n_th: f64) -> PyResult<Self> {
        Ok(Self {
            inner: StandardForm::new(alpha, r, phi, n_th).py_err()?,
        })
    }

    /// Standard form of a 2×2 covariance (vacuum = identity) and optional
    /// displacement `d = √2 (Re α, Im α)`.
    #[staticmethod]
    #[pyo3(signature = (covariance, displacement = [0.0, 0.0]))]
    fn from_covariance(covariance: [[f64; 2]; 2], displacement: [f64; 2]) -> PyResult<Self> {
        let [[a, b], [c, d]] = covariance;
        let state = gaussian::GaussianState::single_mode(displacement, Matrix2::new(a, b, c, d)).py_err()?;
        Ok(Self {
            inner: gaussian::to_standard_form(&state).py_err()?,
        })
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        self.inner.alpha
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    #[getter]
    fn n_th(&self) -> f64 {
        self.inner.n_th
    }

    fn covariance(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(gaussian::from_standard_form(&self.inner).py_err()?.covariance()))
    }

    fn photon_number(&self) -> f64 {
        gaussian::photon_number(&self.inner)
    }

    /// Von Neumann entropy (bits) of the thermal part.
    fn entropy(&self) -> PyResult<f64> {
        gaussian::entanglement_entropy(self.inner.n_th).py_err()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "StandardForm(alpha={}{:+}j, r={}, phi={}, n_th={})",
            p.alpha.re, p.alpha.im, p.r, p.phi, p.n_th
        )
    }
}

/// Derivatives of the standard-form parameters with respect to the field.
#[pyclass(name = "ParamDerivatives", module = "cavmag", frozen)]
struct PyParamDerivatives {
    inner: ParamDerivatives,
}

#[pymethods]
impl PyParamDerivatives {
    #[new]
    #[pyo3(signature = (d_alpha = Complex64::new(0.0, 0.0), d_r = 0.0, d_phi = 0.0, d_nth = 0.0))]
    fn new(d_alpha: Complex64, d_r: f64, d_phi: f64, d_nth: f64) -> Self {
        Self {
            inner: ParamDerivatives {
                d_alpha,
                d_r,
                d_phi,
                d_nth,
            },
        }
    }

    #[getter]
    fn d_alpha(&self) -> Complex64 {
        self.inner.d_alpha
    }

    #[getter]
    fn d_r(&self) -> f64 {
        self.inner.d_r
    }

    #[getter]
    fn d_phi(&self) -> f64 {
        self.inner.d_phi
    }

    #[getter]
    fn d_nth(&self) -> f64 {
        self.inner.d_nth
    }

    fn __repr__(&self) -> String {
        let d = &self.inner;
        format!(
            "ParamDerivatives(d_alpha={}{:+}j, d_r={}, d_phi={}, d_nth={})",
            d.d_alpha.re, d.d_alpha.im, d.d_r, d.d_phi, d.d_nth
        )
    }
}

#[pyfunction]
fn qfi(p: PyRef<'_, PyStandardForm>, dp: PyRef<'_, PyParamDerivatives>) -> PyResult<f64> {
    fisher::qfi(&p.inner, &dp.inner).py_err()
}

/// CFI of the measurement matched to the state.
#[pyfunction]
fn cfi_optimal(p: PyRef<'_, PyStandardForm>, dp: PyRef<'_, PyParamDerivatives>) -> PyResult<f64> {
    fisher::cfi_optimal(&p.inner, &dp.inner).py_err()
}

/// CFI of a Gaussian measurement with probe squeezing `s` along `psi`.
#[pyfunction]
fn cfi_general(p: PyRef<'_, PyStandardForm>, dp: PyRef<'_, PyParamDerivatives>, psi: f64, s: f64) -> PyResult<f64> {
    fisher::cfi_general(&p.inner, &dp.inner, psi, s).py_err()
}

#[pyclass(name = "FitResult", module = "cavmag", frozen)]
struct PyFitResult {
    inner: FitResult,
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn slope(&self) -> f64 {
        self.inner.slope
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept
    }

    #[getter]
    fn r_squared(&self) -> f64 {
        self.inner.r_squared
    }

    #[getter]
    fn n_points(&self) -> usize {
        self.inner.n_points
    }

    #[getter]
    fn flagged(&self) -> bool {
        self.inner.flagged()
    }

    fn __repr__(&self) -> String {
        let f = &self.inner;
        format!("FitResult(slope={}, intercept={}, r_squared={}, n_points={})", f.slope, f.intercept, f.r_squared, f.n_points)
    }
}

impl From<FitResult> for PyFitResult {
    fn from(inner: FitResult) -> Self {
        Self { inner }
    }
}

#[pyfunction]
fn loglog_fit(x: Vec<f64>, y: Vec<f64>) -> PyResult<PyFitResult> {
    if x.len() != y.len() {
        return Err(PyValueError::new_err(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    let points: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    Ok(sweep::loglog_fit(&points).py_err()?.into())
}

/// Fisher information and standard form at one time.
#[pyclass(name = "FisherPoint", module = "cavmag", frozen, get_all)]
struct FisherPoint {
    t: f64,
    f_q: f64,
    f_c: f64,
    form: Py<PyStandardForm>,
}

#[pymethods]
impl FisherPoint {
    fn __repr__(&self) -> String {
        format!("FisherPoint(t={}, f_q={}, f_c={})", self.t, self.f_q, self.f_c)
    }
}

fn fisher_point(py: Python<'_>, t: f64, p: StandardForm, f: fisher::FisherResult) -> PyResult<FisherPoint> {
    Ok(FisherPoint {
        t,
        f_q: f.f_q,
        f_c: f.f_c,
        form: Py::new(py, PyStandardForm { inner: p })?,
    })
}

/// Beam-splitter (rotating-wave) cavity-magnon model; `ω_m = B0 + B`.
#[pyclass(name = "RwaModel", module = "cavmag", frozen)]
struct PyRwaModel {
    inner: RwaModel,
}

#[pymethods]
impl PyRwaModel {
    #[new]
    #[allow(non_snake_case, clippy::too_many_arguments)]
    #[pyo3(signature = (omega_c, B0, g, *, B = 0.0, B_x = 0.0, B_y = 0.0, kappa = 0.0, n_noise = 0.0, r0 = 0.0))]
    fn new(omega_c: f64, B0: f64, g: f64, B: f64, B_x: f64, B_y: f64, kappa: f64, n_noise: f64, r0: f64) -> PyResult<Self> {
        let inner = RwaModel {
            omega_c,
            b0: B0,
            b: B,
            b_x: B_x,
            b_y: B_y,
            g,
            kappa,
            n_noise,
            r0,
        };
        inner.validate().py_err()?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega_m(&self) -> f64 {
        self.inner.omega_m()
    }

    fn t_star(&self) -> PyResult<f64> {
        self.inner.t_star().py_err()
    }

    fn cavity_state(&self, t: f64) -> PyResult<PyStandardForm> {
        Ok(PyStandardForm {
            inner: self.inner.evolve_cavity(t).py_err()?.1,
        })
    }

    fn cavity_covariance(&self, t: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(self.inner.evolve_cavity(t).py_err()?.0.covariance()))
    }

    fn fisher_at(&self, py: Python<'_>, t: f64) -> PyResult<FisherPoint> {
        let (p, _, f) = py.detach(|| self.inner.fisher_at(t)).py_err()?;
        fisher_point(py, t, p, f)
    }

    /// Entanglement entropy (bits) of the noiseless joint state.
    fn entanglement(&self, t: f64) -> PyResult<f64> {
        Ok(self.inner.entanglement_vs_time(&[t]).py_err()?[0].1)
    }

    /// F_C against N_c over initial squeezings, evaluated at `t*` or, with
    /// `peak=True`, at the maximum of F_C/t² on [0.5 t*, 1.5 t*].
    #[pyo3(signature = (r0_grid, peak = false))]
    fn snl_hl_experiment(&self, py: Python<'_>, r0_grid: Vec<f64>, peak: bool) -> PyResult<(PyFitResult, Vec<(f64, f64)>)> {
        let eval = if peak {
            EvalTime::CfiPeak {
                lo: 0.5,
                hi: 1.5,
                grid_n: 64,
            }
        } else {
            EvalTime::TStar
        };
        let exp = py.detach(|| sweep::snl_hl_experiment(&self.inner, &r0_grid, eval)).py_err()?;
        let points = exp.records.iter().map(|r| (r.n_c, r.f_c)).collect();
        Ok((exp.fit.into(), points))
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!(
            "RwaModel(omega_c={}, B0={}, g={}, B={}, B_x={}, B_y={}, kappa={}, n_noise={}, r0={})",
            m.omega_c, m.b0, m.g, m.b, m.b_x, m.b_y, m.kappa, m.n_noise, m.r0
        )
    }
}

/// Full (beyond rotating-wave) quadratic model below the critical coupling.
#[pyclass(name = "CriticalModel", module = "cavmag", frozen)]
struct PyCriticalModel {
    inner: CriticalModel,
}

#[pymethods]
impl PyCriticalModel {
    #[new]
    fn new(omega_c: f64, omega_m: f64, g: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CriticalModel::new(omega_c, omega_m, g).py_err()?,
        })
    }

    /// Model at `g = g_c (1 − gap)`.
    #[staticmethod]
    fn near_critical(omega_c: f64, omega_m: f64, gap: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CriticalModel::near_critical(omega_c, omega_m, gap).py_err()?,
        })
    }

    #[getter]
    fn g_c(&self) -> f64 {
        self.inner.g_c()
    }

    /// `(ε₋, ε₊, δ)`.
    fn bogoliubov(&self) -> PyResult<(f64, f64, f64)> {
        let b = self.inner.bogoliubov().py_err()?;
        Ok((b.eps_minus, b.eps_plus, b.delta_angle))
    }

    #[pyo3(signature = (n = 1))]
    fn t_star(&self, n: u32) -> PyResult<f64> {
        self.inner.t_star(n).py_err()
    }

    fn cavity_covariance(&self, t: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(self.inner.gamma_c_closed(t).py_err()?.covariance()))
    }

    fn fisher_at(&self, py: Python<'_>, t: f64) -> PyResult<FisherPoint> {
        let (p, f) = self.inner.fisher_at(t).py_err()?;
        fisher_point(py, t, p, f)
    }

    fn entanglement(&self, t: f64) -> PyResult<f64> {
        self.inner.entanglement(t).py_err()
    }

    fn __repr__(&self) -> String {
        let m = &self.inner;
        format!("CriticalModel(omega_c={}, omega_m={}, g={})", m.omega_c, m.omega_m, m.g)
    }
}

/// Exponents of `F_C/t*²` at `t*` and `t*/4` against `g_c − g`.
#[pyfunction]
fn critical_scaling(py: Python<'_>, omega_c: f64, omega_m: f64, gaps: Vec<f64>) -> PyResult<(PyFitResult, PyFitResult)> {
    let s = py.detach(|| sweep::critical_scaling_sweep(omega_c, omega_m, &gaps)).py_err()?;
    Ok((s.fit_t_star.into(), s.fit_quarter.into()))
}

/// F_Q against N_c for the synthetic family `n_th = e^{ν r}`.
#[pyfunction]
fn nu_scaling_check(nu: f64, r_grid: Vec<f64>) -> PyResult<PyFitResult> {
    Ok(sweep::nu_scaling_check(nu, &r_grid).py_err()?.fit.into())
}

#[pymodule]
fn cavmag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class, function and exception of the module to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CavmagError", m.py().get_type::<CavmagError>())?;
    m.add_class::<PyStandardForm>()?;
    m.add_class::<PyParamDerivatives>()?;
    m.add_class::<PyFitResult>()?;
    m.add_class::<FisherPoint>()?;
    m.add_class::<PyRwaModel>()?;
    m.add_class::<PyCriticalModel>()?;
    m.add_function(wrap_pyfunction!(qfi, m)?)?;
    m.add_function(wrap_pyfunction!(cfi_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(cfi_general, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_fit, m)?)?;
    m.add_function(wrap_pyfunction!(critical_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(nu_scaling_check, m)?)?;
    Ok(())
}
