//! Parameter sweeps, peak location and log–log exponent fits.
//!
//! Every sweep evaluates its points with a parallel map and returns them in
//! input order, so identical inputs give bit-identical outputs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::CriticalModel;
use crate::error::{Error, Result};
use crate::fisher::{self, ParamDerivatives};
use crate::gaussian::{self, entanglement_entropy, photon_number, StandardForm};
use crate::rwa::RwaModel;

/// Fits with a lower coefficient of determination are flagged.
pub const MIN_R_SQUARED: f64 = 0.99;

/// One evaluated point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub inputs: BTreeMap<String, f64>,
    pub t: f64,
    pub f_q: f64,
    pub f_c: f64,
    pub s: f64,
    pub n_th: f64,
    pub r: f64,
    pub phi: f64,
    pub n_c: f64,
    /// The covariance needed a physicality clamp; such points are kept in
    /// the output but left out of fits.
    pub clamped: bool,
}

impl SweepRecord {
    fn from_form(inputs: BTreeMap<String, f64>, t: f64, p: &StandardForm, f_q: f64, f_c: f64, clamped: bool) -> Result<Self> {
        Ok(Self {
            inputs,
            t,
            f_q,
            f_c,
            s: entanglement_entropy(p.n_th)?,
            n_th: p.n_th,
            r: p.r,
            phi: p.phi,
            n_c: photon_number(p),
            clamped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn flagged(&self) -> bool {
        !(self.r_squared >= MIN_R_SQUARED)
    }
}

/// A sweep's records and the exponent fitted to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub records: Vec<SweepRecord>,
    pub fit: FitResult,
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    for (index, &(x, y)) in points.iter().enumerate() {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::NonPositiveData { index, x, y });
        }
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &logs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
    })
}

/// Maximum of `f` on `window`: a grid scan of `grid_n` intervals, then
/// golden-section search on the bracket around the best grid point, closed
/// by a parabolic step through the final triple.
pub fn peak_find<F>(f: F, window: (f64, f64), grid_n: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("window ({lo}, {hi})")));
    }
    if grid_n < 16 {
        return Err(Error::InvalidParameter(format!("grid_n = {grid_n} < 16")));
    }
    let h = (hi - lo) / grid_n as f64;
    let values: Vec<f64> = (0..=grid_n)
        .into_par_iter()
        .map(|i| f(lo + i as f64 * h))
        .collect::<Result<_>>()?;
    let (best, &fbest) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let fmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if (fbest - fmin).abs() <= 1e-12 * fbest.abs().max(fmin.abs()) {
        return Err(Error::FlatFunction);
    }

    let mut a = lo + best.saturating_sub(1) as f64 * h;
    let mut b = lo + (best + 1).min(grid_n) as f64 * h;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let tol = 1e-9 * h;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2)?;
        }
    }
    let (mut t_peak, mut f_peak) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // parabolic step through (x1, x2, midpoint of the final bracket)
    let xm = 0.5 * (a + b);
    if xm != x1 && xm != x2 && x1 != x2 {
        let fm = f(xm)?;
        let pts = [(x1, f1), (xm, fm), (x2, f2)];
        if let Some(v) = parabola_vertex(pts) {
            if v > a && v < b {
                let fv = f(v)?;
                if fv > f_peak {
                    t_peak = v;
                    f_peak = fv;
                }
            }
        }
        if fm > f_peak {
            t_peak = xm;
            f_peak = fm;
        }
    }
    if fbest > f_peak {
        return Ok((lo + best as f64 * h, fbest));
    }
    Ok((t_peak, f_peak))
}

fn parabola_vertex(p: [(f64, f64); 3]) -> Option<f64> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    (den != 0.0).then(|| x1 - 0.5 * num / den)
}

pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > 0.0) || count == 0 {
        return Err(Error::InvalidParameter(format!("geometric grid ({start}, {stop}, {count})")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let ratio = (stop / start).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { stop } else { start * (ratio * i as f64).exp() })
        .collect())
}

pub fn linear_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !start.is_finite() || !stop.is_finite() || count == 0 {
        return Err(Error::InvalidParameter(format!("linear grid ({start}, {stop}, {count})")));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
        .collect())
}

/// Where along the time axis an RWA scaling point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTime {
    /// `t* = π/(2g)`.
    TStar,
    Fixed(f64),
    /// Maximum of `F_C/t²` on `[lo·t*, hi·t*]`.
    CfiPeak { lo: f64, hi: f64, grid_n: usize },
}

/// Fisher information and cavity parameters of an RWA model at time `t`.
pub fn rwa_record(m: &RwaModel, t: f64, inputs: BTreeMap<String, f64>) -> Result<SweepRecord> {
    let (state, _) = m.evolve_cavity(t)?;
    let clamped = gaussian::to_standard_form_checked(&state)?.clamped();
    let (p, _, f) = m.fisher_at(t)?;
    SweepRecord::from_form(inputs, t, &p, f.f_q, f.f_c, clamped)
}

/// Time series of a single RWA model.
pub fn rwa_time_series(m: &RwaModel, t_grid: &[f64]) -> Result<Vec<SweepRecord>> {
    t_grid
        .par_iter()
        .map(|&t| rwa_record(m, t, BTreeMap::new()))
        .collect()
}

fn resolve_time(m: &RwaModel, eval: EvalTime) -> Result<f64> {
    match eval {
        EvalTime::TStar => m.t_star(),
        EvalTime::Fixed(t) => Ok(t),
        EvalTime::CfiPeak { lo, hi, grid_n } => {
            let ts = m.t_star()?;
            let objective = |t: f64| -> Result<f64> {
                let (_, _, f) = m.fisher_at(t)?;
                Ok(f.f_c / (t * t))
            };
            Ok(peak_find(objective, (lo * ts, hi * ts), grid_n)?.0)
        }
    }
}

fn fit_records<X, Y>(records: &[SweepRecord], x: X, y: Y) -> Result<FitResult>
where
    X: Fn(&SweepRecord) -> f64,
    Y: Fn(&SweepRecord) -> f64,
{
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| {
            if r.clamped {
                log::warn!("excluding clamped point {:?} from fit", r.inputs);
            }
            !r.clamped
        })
        .map(|r| (x(r), y(r)))
        .collect();
    loglog_fit(&points)
}

fn require_increasing(grid: &[f64], min_len: usize, name: &str) -> Result<()> {
    if grid.len() < min_len {
        return Err(Error::InvalidParameter(format!("{name} needs at least {min_len} values, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

/// Sweeps the initial magnon squeezing and fits `F_C` against `N_c` at the
/// chosen evaluation time.
pub fn snl_hl_experiment(base: &RwaModel, r0_grid: &[f64], eval: EvalTime) -> Result<Experiment> {
    require_increasing(r0_grid, 8, "r0 grid")?;
    let records: Vec<SweepRecord> = r0_grid
        .par_iter()
        .map(|&r0| {
            let m = RwaModel { r0, ..*base };
            let t = resolve_time(&m, eval)?;
            rwa_record(&m, t, BTreeMap::from([("r0".to_string(), r0)]))
        })
        .collect::<Result<_>>()?;
    let fit = fit_records(&records, |r| r.n_c, |r| r.f_c)?;
    Ok(Experiment { records, fit })
}

/// Sweeps a transverse field component with no initial squeezing and fits
/// `F_Q` against the coherent excitation `|α|²`. The matched-measurement CFI
/// is undefined for displaced states and is reported as NaN.
pub fn displacement_experiment(base: &RwaModel, bx_grid: &[f64], t: f64) -> Result<Experiment> {
    require_increasing(bx_grid, 3, "B_x grid")?;
    let records: Vec<SweepRecord> = bx_grid
        .par_iter()
        .map(|&b_x| {
            let m = RwaModel { b_x, r0: 0.0, ..*base };
            rwa_record(&m, t, BTreeMap::from([("B_x".to_string(), b_x)]))
        })
        .collect::<Result<_>>()?;
    let fit = fit_records(&records, |r| r.n_c, |r| r.f_q)?;
    Ok(Experiment { records, fit })
}

/// Synthetic family `α = 0, r = B, φ = B, n_th = e^{νB}` evaluated at each
/// `B` in `r_grid`; fits `F_Q` against `N_c`.
pub fn nu_scaling_check(nu: f64, r_grid: &[f64]) -> Result<Experiment> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("ν = {nu}")));
    }
    require_increasing(r_grid, 3, "r grid")?;
    let family = |b: f64| StandardForm::new(0.0.into(), b, b, (nu * b).exp());
    let records: Vec<SweepRecord> = r_grid
        .par_iter()
        .map(|&r| {
            let p = family(r)?;
            let dp: ParamDerivatives = fisher::derivatives_fd(family, r, fisher::default_step(r))?;
            let f = fisher::evaluate(&p, &dp)?;
            SweepRecord::from_form(BTreeMap::from([("nu".to_string(), nu), ("r".to_string(), r)]), 0.0, &p, f.f_q, f.f_c, false)
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = records
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.n_c), hi.max(r.n_c)));
    if (hi / lo).log10() < 1.5 {
        return Err(Error::InvalidParameter(format!(
            "r grid spans only {:.2} decades of N_c (need 1.5)",
            (hi / lo).log10()
        )));
    }
    let fit = fit_records(&records, |r| r.n_c, |r| r.f_q)?;
    Ok(Experiment { records, fit })
}

/// One coupling of a critical sweep, evaluated at `t*` and `t*/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRecord {
    pub g: f64,
    pub gc_minus_g: f64,
    pub t_star: f64,
    pub f_q: f64,
    pub f_c: f64,
    pub f_q_quarter: f64,
    pub f_c_quarter: f64,
    pub n_th_quarter: f64,
    pub cosh2r_quarter: f64,
    pub gamma11_quarter: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSweep {
    pub records: Vec<CriticalRecord>,
    /// `F_C(t*)/t*²` against `g_c − g`.
    pub fit_t_star: FitResult,
    /// `F_C(t*/4)/t*²` against `g_c − g`.
    pub fit_quarter: FitResult,
    /// Unscaled `F_C(t*)` against `g_c − g`.
    pub raw_fit_t_star: FitResult,
    /// Unscaled `F_C(t*/4)` against `g_c − g`.
    pub raw_fit_quarter: FitResult,
}

/// Sweeps `g = g_c(1 − gap)` over `gaps` and fits the critical exponents of
/// the CFI. The time-rescaled fits factor out the `t*²` growth that every
/// Fisher information picks up from phase accumulation.
pub fn critical_scaling_sweep(omega_c: f64, omega_m: f64, gaps: &[f64]) -> Result<CriticalSweep> {
    if gaps.len() < 3 || gaps.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
        return Err(Error::InvalidParameter("gaps must be ≥ 3 values in (0, 1)".into()));
    }
    let records: Vec<CriticalRecord> = gaps
        .par_iter()
        .map(|&gap| {
            let m = CriticalModel::near_critical(omega_c, omega_m, gap)?;
            let f = m.fisher_at_special_times()?;
            let q = m.gamma_c_closed(f.t_star / 4.0)?;
            let clamped = gaussian::to_standard_form_checked(&m.gamma_c_closed(f.t_star)?)?.clamped()
                || gaussian::to_standard_form_checked(&q)?.clamped();
            Ok(CriticalRecord {
                g: m.g,
                gc_minus_g: m.g_c() - m.g,
                t_star: f.t_star,
                f_q: f.at_t_star.f_q,
                f_c: f.at_t_star.f_c,
                f_q_quarter: f.at_quarter.f_q,
                f_c_quarter: f.at_quarter.f_c,
                n_th_quarter: f.form_quarter.n_th,
                cosh2r_quarter: (2.0 * f.form_quarter.r).cosh(),
                gamma11_quarter: q.covariance()[(0, 0)],
                clamped,
            })
        })
        .collect::<Result<_>>()?;
    let fit = |y: &dyn Fn(&CriticalRecord) -> f64| {
        let pts: Vec<(f64, f64)> = records.iter().filter(|r| !r.clamped).map(|r| (r.gc_minus_g, y(r))).collect();
        loglog_fit(&pts)
    };
    Ok(CriticalSweep {
        fit_t_star: fit(&|r| r.f_c / (r.t_star * r.t_star))?,
        fit_quarter: fit(&|r| r.f_c_quarter / (r.t_star * r.t_star))?,
        raw_fit_t_star: fit(&|r| r.f_c)?,
        raw_fit_quarter: fit(&|r| r.f_c_quarter)?,
        records,
    })
}
