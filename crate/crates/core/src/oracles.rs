//! Brute-force reference engines.
//!
//! Neither engine reuses the closed-form code paths: the Fock oracle builds
//! the Hamiltonian directly on number states and propagates a state vector,
//! and the moment oracle integrates the covariance equation of motion with an
//! adaptive Runge–Kutta scheme.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::CriticalModel;
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::rwa::RwaModel;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Dynamics handed to the Fock oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FockModel {
    Rwa(RwaModel),
    Critical(CriticalModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    /// Number states kept per mode.
    pub cutoff: usize,
    /// Longest time slice handed to a single Chebyshev expansion.
    pub dt: f64,
    /// Largest population tolerated beyond / at the edge of the truncation.
    pub tail_tolerance: f64,
    pub model: FockModel,
}

impl FockConfig {
    pub fn new(model: FockModel, cutoff: usize) -> Self {
        Self {
            cutoff,
            dt: 50.0,
            tail_tolerance: 1e-10,
            model,
        }
    }

    /// Cutoff suited to an initial squeezing `r0`: 40 up to 0.8, 60 up to 1.2.
    ///
    /// At the top of each band the squeezed vacuum leaves about `1.3e−8` of
    /// its population beyond the cutoff, so the tail tolerance is relaxed to
    /// `1e−7`; the resulting moment error stays below `1e−6`.
    pub fn for_squeezing(model: FockModel, r0: f64) -> Result<Self> {
        let cutoff = match r0 {
            r if r <= 0.8 => 40,
            r if r <= 1.2 => 60,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "initial squeezing {r0} is beyond the Fock oracle's range"
                )))
            }
        };
        Ok(Self {
            tail_tolerance: 1e-7,
            ..Self::new(model, cutoff)
        })
    }
}

/// Moments extracted from a Fock-space run plus its self-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOutcome {
    pub state: GaussianState,
    /// `| ‖ψ(t)‖ − 1 |`.
    pub norm_drift: f64,
    /// Largest of the initial truncation loss and the final edge population.
    pub tail: f64,
    /// Largest relative violation of the fourth-order Gaussian factorisation.
    pub wick_error: f64,
}

/// Two truncated bosonic modes; index `n_c·N + n_m`.
struct FockSpace {
    n: usize,
    omega_c: f64,
    omega_m: f64,
    g: f64,
    counter_rotating: bool,
    drive: Complex64,
    sqrt: Vec<f64>,
}

impl FockSpace {
    fn new(cfg: &FockConfig) -> Result<Self> {
        let n = cfg.cutoff;
        let (omega_c, omega_m, g, counter_rotating, drive) = match cfg.model {
            FockModel::Rwa(m) => {
                m.validate()?;
                if m.kappa > 0.0 {
                    return Err(Error::UnsupportedNoise { kappa: m.kappa });
                }
                (m.omega_c, m.omega_m(), m.g, false, Complex64::new(m.b_x, m.b_y) / 2.0)
            }
            FockModel::Critical(m) => {
                m.validate()?;
                (m.omega_c, m.omega_m, m.g, true, ZERO)
            }
        };
        Ok(Self {
            n,
            omega_c,
            omega_m,
            g,
            counter_rotating,
            drive,
            sqrt: (0..=n + 1).map(|k| (k as f64).sqrt()).collect(),
        })
    }

    fn dim(&self) -> usize {
        self.n * self.n
    }

    /// Visits every nonzero `H[row, col]` of a row.
    fn row<F: FnMut(usize, Complex64)>(&self, nc: usize, nm: usize, mut f: F) {
        let n = self.n;
        let s = &self.sqrt;
        let idx = |a: usize, b: usize| a * n + b;
        f(idx(nc, nm), Complex64::from(self.omega_c * nc as f64 + self.omega_m * nm as f64));
        // g(ĉ†ℬ̂ + ĉℬ̂†)
        if nc > 0 && nm + 1 < n {
            f(idx(nc - 1, nm + 1), Complex64::from(self.g * s[nc] * s[nm + 1]));
        }
        if nc + 1 < n && nm > 0 {
            f(idx(nc + 1, nm - 1), Complex64::from(self.g * s[nc + 1] * s[nm]));
        }
        if self.counter_rotating {
            // g(ĉℬ̂ + ĉ†ℬ̂†)
            if nc + 1 < n && nm + 1 < n {
                f(idx(nc + 1, nm + 1), Complex64::from(self.g * s[nc + 1] * s[nm + 1]));
            }
            if nc > 0 && nm > 0 {
                f(idx(nc - 1, nm - 1), Complex64::from(self.g * s[nc] * s[nm]));
            }
        }
        if self.drive != ZERO {
            // −β*ℬ̂ − βℬ̂† with β = (B_x + iB_y)/2
            if nm + 1 < n {
                f(idx(nc, nm + 1), -self.drive.conj() * s[nm + 1]);
            }
            if nm > 0 {
                f(idx(nc, nm - 1), -self.drive * s[nm]);
            }
        }
    }

    fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for nc in 0..self.n {
            for nm in 0..self.n {
                let mut acc = ZERO;
                self.row(nc, nm, |col, h| acc += h * psi[col]);
                out[nc * self.n + nm] = acc;
            }
        }
    }

    /// Gershgorin enclosure of the spectrum.
    fn spectral_bounds(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for nc in 0..self.n {
            for nm in 0..self.n {
                let (mut center, mut radius) = (0.0, 0.0);
                let me = nc * self.n + nm;
                self.row(nc, nm, |col, h| {
                    if col == me {
                        center = h.re;
                    } else {
                        radius += h.norm();
                    }
                });
                lo = f64::min(lo, center - radius);
                hi = f64::max(hi, center + radius);
            }
        }
        (lo, hi)
    }

    /// `e^{−iHt}ψ` by a Chebyshev expansion.
    fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let (lo, hi) = self.spectral_bounds();
        let half = 0.5 * (hi - lo) * (1.0 + 1e-9) + 1e-12;
        let center = 0.5 * (hi + lo);
        let x = half * t;
        let coeffs = bessel_j_series(x);
        let dim = self.dim();

        let scaled = |v: &[Complex64], out: &mut [Complex64]| {
            self.apply(v, out);
            for (o, vi) in out.iter_mut().zip(v) {
                *o = (*o - *vi * center) / half;
            }
        };
        let mut prev = psi.to_vec();
        let mut cur = vec![ZERO; dim];
        scaled(&prev, &mut cur);
        let mut acc: Vec<Complex64> = prev.iter().map(|v| v * coeffs[0]).collect();
        let mut phase = Complex64::new(0.0, -1.0);
        if coeffs.len() > 1 {
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c * phase * (2.0 * coeffs[1]);
            }
        }
        let mut next = vec![ZERO; dim];
        for &jk in coeffs.iter().skip(2) {
            scaled(&cur, &mut next);
            for (nx, pv) in next.iter_mut().zip(&prev) {
                *nx = *nx * 2.0 - pv;
            }
            phase *= Complex64::new(0.0, -1.0);
            let w = phase * (2.0 * jk);
            for (a, nx) in acc.iter_mut().zip(&next) {
                *a += nx * w;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        let global = Complex64::from_polar(1.0, -center * t);
        acc.iter().map(|a| a * global).collect()
    }

    /// Applies one of the quadratures `X_c, P_c, X_m, P_m`.
    fn quadrature(&self, which: usize, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let s = &self.sqrt;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = vec![ZERO; n * n];
        for nc in 0..n {
            for nm in 0..n {
                let (k, up, down) = if which < 2 {
                    (nc, (nc + 1 < n).then(|| (nc + 1) * n + nm), (nc > 0).then(|| (nc - 1) * n + nm))
                } else {
                    (nm, (nm + 1 < n).then(|| nc * n + nm + 1), (nm > 0).then(|| nc * n + nm - 1))
                };
                // ⟨k|a|k+1⟩ = √(k+1), ⟨k|a†|k−1⟩ = √k
                let from_up = up.map_or(ZERO, |i| psi[i] * s[k + 1]);
                let from_down = down.map_or(ZERO, |i| psi[i] * s[k]);
                out[nc * n + nm] = if which % 2 == 0 {
                    (from_up + from_down) * r
                } else {
                    (from_up - from_down) * Complex64::new(0.0, -r)
                };
            }
        }
        out
    }

    fn edge_population(&self, psi: &[Complex64]) -> f64 {
        let n = self.n;
        let edge = n.saturating_sub(2);
        let mut p = 0.0;
        for nc in 0..n {
            for nm in 0..n {
                if nc >= edge || nm >= edge {
                    p += psi[nc * n + nm].norm_sqr();
                }
            }
        }
        p
    }
}

/// Amplitudes of a squeezed vacuum with `⟨ΔX²⟩ = e^{−2r}/2` on `n` number
/// states, plus the population lost beyond the cutoff (before renormalising).
pub fn squeezed_vacuum_amplitudes(r: f64, n: usize) -> (Vec<f64>, f64) {
    let mut a = vec![0.0; n];
    if n == 0 {
        return (a, 1.0);
    }
    let t = -r.tanh();
    a[0] = 1.0 / r.cosh().sqrt();
    // a_{2k+2} = a_{2k}·t·√((2k+1)(2k+2))/(2(k+1))
    let mut k = 0;
    while 2 * k + 2 < n {
        let m = (2 * k + 1) as f64 * (2 * k + 2) as f64;
        a[2 * k + 2] = a[2 * k] * t * m.sqrt() / (2.0 * (k + 1) as f64);
        k += 1;
    }
    let kept: f64 = a.iter().map(|x| x * x).sum();
    let norm = kept.sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    (a, (1.0 - kept).max(0.0))
}

/// Bessel functions `J_k(x)`, `k = 0..K`, by Miller's backward recurrence,
/// truncated once the terms are negligible.
fn bessel_j_series(x: f64) -> Vec<f64> {
    if x == 0.0 {
        return vec![1.0];
    }
    let k_max = (x + 12.0 * x.cbrt() + 40.0).ceil() as usize;
    let start = k_max + 40 + (2.0 * x.sqrt()) as usize;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    let mut out: Vec<f64> = j.iter().take(k_max + 1).map(|v| v / norm).collect();
    while out.len() > 2 && out.last().is_some_and(|v| v.abs() < 1e-18) {
        out.pop();
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Evolves `|0⟩_c ⊗ S(r₀)|0⟩_m` in a truncated Fock space and returns the
/// first and second quadrature moments.
pub fn fock_evolve(cfg: &FockConfig, r0: f64, t: f64) -> Result<FockOutcome> {
    if cfg.cutoff < 2 {
        return Err(Error::InvalidParameter(format!("cutoff {} < 2", cfg.cutoff)));
    }
    if !(t >= 0.0) || !t.is_finite() || !(cfg.dt > 0.0) || !(r0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t}, dt = {}, r0 = {r0}", cfg.dt)));
    }
    let space = FockSpace::new(cfg)?;
    let n = cfg.cutoff;
    let (amps, lost) = squeezed_vacuum_amplitudes(r0, n);
    let mut psi = vec![ZERO; n * n];
    for (k, a) in amps.iter().enumerate() {
        psi[k] = Complex64::from(*a); // n_c = 0
    }

    let slices = (t / cfg.dt).ceil().max(1.0) as usize;
    let h = t / slices as f64;
    for _ in 0..slices {
        if h > 0.0 {
            psi = space.propagate(&psi, h);
        }
    }

    let norm = inner(&psi, &psi).re.sqrt();
    let norm_drift = (norm - 1.0).abs();
    if norm_drift > 1e-10 {
        return Err(Error::IntegratorFailure(format!("Fock norm drift {norm_drift:e}")));
    }
    let tail = lost.max(space.edge_population(&psi));
    if tail >= cfg.tail_tolerance {
        return Err(Error::CutoffTooSmall {
            cutoff: n,
            tail,
            tolerance: cfg.tail_tolerance,
        });
    }

    let xs: Vec<Vec<Complex64>> = (0..4).map(|j| space.quadrature(j, &psi)).collect();
    let mean: Vec<f64> = xs.iter().map(|x| inner(&psi, x).re).collect();
    let mut gamma = DMatrix::zeros(4, 4);
    for j in 0..4 {
        for k in j..4 {
            let v = 2.0 * inner(&xs[j], &xs[k]).re - 2.0 * mean[j] * mean[k];
            gamma[(j, k)] = v;
            gamma[(k, j)] = v;
        }
    }
    let wick_error = wick_violation(&space, &psi, &mean, &gamma);
    let state = GaussianState::new(DVector::from_vec(mean), gamma)?;
    Ok(FockOutcome {
        state,
        norm_drift,
        tail,
        wick_error,
    })
}

/// Fourth moments of the commuting pairs `(X_c, X_m)` and `(P_c, P_m)`
/// against their Gaussian factorisation.
fn wick_violation(space: &FockSpace, psi: &[Complex64], mean: &[f64], gamma: &DMatrix<f64>) -> f64 {
    let centered = |j: usize, v: &[Complex64]| -> Vec<Complex64> {
        let mut out = space.quadrature(j, v);
        for (o, x) in out.iter_mut().zip(v) {
            *o -= x * mean[j];
        }
        out
    };
    let mut worst: f64 = 0.0;
    for (a, b) in [(0, 2), (1, 3)] {
        let s = |i: usize, k: usize| gamma[(i, k)] / 2.0;
        let da = centered(a, psi);
        let daa = centered(a, &da);
        let dab = centered(b, &da);
        let dbb = centered(b, &centered(b, psi));
        let checks = [
            (inner(&daa, &daa).re, 3.0 * s(a, a) * s(a, a)),
            (inner(&dbb, &dbb).re, 3.0 * s(b, b) * s(b, b)),
            (inner(&dab, &dab).re, s(a, a) * s(b, b) + 2.0 * s(a, b) * s(a, b)),
            (inner(&daa, &dab).re, 3.0 * s(a, a) * s(a, b)),
        ];
        for (got, want) in checks {
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    worst
}

/// Drift matrix, diffusion matrix and constant force of the RWA quadrature
/// Langevin equations, built directly from the Hamiltonian.
fn moment_equations(m: &RwaModel) -> (Matrix4<f64>, Matrix4<f64>, Vector4<f64>) {
    let (wc, wm, g) = (m.omega_c, m.omega_m(), m.g);
    // H = ½xᵀHx with ĉ†ℬ̂ + ĉℬ̂† = X_cX_m + P_cP_m
    let h = Matrix4::new(
        wc, 0.0, g, 0.0, //
        0.0, wc, 0.0, g, //
        g, 0.0, wm, 0.0, //
        0.0, g, 0.0, wm,
    );
    let mut omega = Matrix4::zeros();
    for k in [0, 2] {
        omega[(k, k + 1)] = 1.0;
        omega[(k + 1, k)] = -1.0;
    }
    let a = omega * h - Matrix4::identity() * (m.kappa / 2.0);
    let d = Matrix4::identity() * (m.kappa * (2.0 * m.n_noise + 1.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let force = Vector4::new(0.0, 0.0, -m.b_y * s, m.b_x * s);
    (a, d, force)
}

const RTOL: f64 = 1e-11;
const ATOL: f64 = 1e-13;

/// Joint state at each requested time (must be non-decreasing) by integrating
/// `dγ/dt = Aγ + γAᵀ + D` and `dd/dt = Ad + f`.
pub fn lyapunov_integrate_grid(m: &RwaModel, times: &[f64]) -> Result<Vec<GaussianState>> {
    m.validate()?;
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be finite, ≥ 0 and non-decreasing".into()));
    }
    let (a, d, force) = moment_equations(m);
    let rhs = |y: &[f64; 20]| -> [f64; 20] {
        let gamma = Matrix4::from_column_slice(&y[..16]);
        let disp = Vector4::from_column_slice(&y[16..]);
        let dg = a * gamma + gamma * a.transpose() + d;
        let dd = a * disp + force;
        let mut out = [0.0; 20];
        out[..16].copy_from_slice(dg.as_slice());
        out[16..].copy_from_slice(dd.as_slice());
        out
    };

    let e = (2.0 * m.r0).exp();
    let mut y = [0.0; 20];
    let g0 = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0 / e, e));
    y[..16].copy_from_slice(g0.as_slice());

    let mut stepper = DormandPrince::new(RTOL, ATOL);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        stepper.advance(&rhs, &mut y, &mut now, target, |y| {
            let gamma = Matrix4::from_column_slice(&y[..16]);
            let gamma = DMatrix::from_column_slice(4, 4, gamma.as_slice());
            GaussianState::new(DVector::zeros(4), (&gamma + gamma.transpose()) * 0.5).map(|_| ())
        })?;
        let gamma = DMatrix::from_column_slice(4, 4, &y[..16]);
        out.push(GaussianState::new(
            DVector::from_column_slice(&y[16..]),
            (&gamma + gamma.transpose()) * 0.5,
        )?);
    }
    Ok(out)
}

pub fn lyapunov_integrate(m: &RwaModel, t: f64) -> Result<GaussianState> {
    Ok(lyapunov_integrate_grid(m, &[t])?.remove(0))
}

/// Adaptive Dormand–Prince 5(4) stepper with the classic step controller.
struct DormandPrince {
    rtol: f64,
    atol: f64,
    h: f64,
}

impl DormandPrince {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B_LOW: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, h: 1e-3 }
    }

    fn advance<const N: usize, F, C>(&mut self, f: &F, y: &mut [f64; N], t: &mut f64, target: f64, mut check: C) -> Result<()>
    where
        F: Fn(&[f64; N]) -> [f64; N],
        C: FnMut(&[f64; N]) -> Result<()>,
    {
        let mut rejected = 0usize;
        while *t < target {
            let h = self.h.min(target - *t);
            if h < 1e-14 * target.max(1.0) {
                *t = target;
                break;
            }
            let mut k = [[0.0; N]; 7];
            k[0] = f(y);
            for s in 1..7 {
                let mut ys = *y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = Self::A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[s] = f(&ys);
            }
            let mut high = *y;
            let mut err: f64 = 0.0;
            for i in 0..N {
                let (mut hi, mut lo) = (0.0, 0.0);
                for s in 0..7 {
                    hi += Self::B[s] * k[s][i];
                    lo += Self::B_LOW[s] * k[s][i];
                }
                high[i] += h * hi;
                let scale = self.atol + self.rtol * y[i].abs().max(high[i].abs());
                err = err.max((h * (hi - lo)).abs() / scale);
            }
            if err <= 1.0 {
                check(&high)?;
                *y = high;
                *t += h;
                rejected = 0;
            } else {
                rejected += 1;
                if rejected > 50 {
                    return Err(Error::IntegratorFailure(format!("step rejected 50 times at t = {t}")));
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if h == self.h || err > 1.0 {
                self.h = h * factor;
            } else {
                // the step was shortened to hit the target; keep the old size
                self.h = self.h.max(h * factor);
            }
            if !self.h.is_finite() || self.h <= 0.0 {
                return Err(Error::IntegratorFailure(format!("step size collapsed at t = {t}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{to_standard_form, CAVITY};
    use approx::assert_abs_diff_eq;

    fn rwa(omega_c: f64, omega_m: f64, g: f64, r0: f64) -> RwaModel {
        RwaModel {
            b0: omega_m,
            ..RwaModel::resonant(omega_c, g, r0)
        }
    }

    #[test]
    fn bessel_values() {
        let j = bessel_j_series(1.0);
        assert_abs_diff_eq!(j[0], 0.765_197_686_557_966_6, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1], 0.440_050_585_744_933_5, epsilon = 1e-15);
        let j = bessel_j_series(100.0);
        assert_abs_diff_eq!(j[0], 0.019_985_850_304_223_122, epsilon = 1e-14);
        assert!(j.len() > 100);
    }

    #[test]
    fn squeezed_amplitudes_have_right_variance() {
        let (a, lost) = squeezed_vacuum_amplitudes(0.5, 60);
        assert!(lost < 1e-15);
        // 2⟨X²⟩ = e^{−2r}: ⟨X²⟩ = ½ + Σ (a_n a_{n+2}√((n+1)(n+2)) + a_n²n)
        let mut x2 = 0.5;
        for n in 0..58 {
            x2 += a[n] * a[n] * n as f64 + a[n] * a[n + 2] * ((n + 1) as f64 * (n + 2) as f64).sqrt();
        }
        assert_abs_diff_eq!(2.0 * x2, (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn vacuum_stays_vacuum_without_coupling() {
        let cfg = FockConfig::new(FockModel::Rwa(rwa(2.0, 2.5, 0.0, 0.0)), 8);
        for t in [0.0, 1.0, 30.0] {
            let out = fock_evolve(&cfg, 0.0, t).unwrap();
            assert!((out.state.covariance() - DMatrix::identity(4, 4)).amax() < 1e-12);
            assert!(out.norm_drift < 1e-12);
        }
    }

    #[test]
    fn resonant_swap_in_fock_space() {
        let m = RwaModel::resonant(2.0, 0.05, 0.6);
        let cfg = FockConfig::for_squeezing(FockModel::Rwa(m), 0.6).unwrap();
        let out = fock_evolve(&cfg, 0.6, m.t_star().unwrap()).unwrap();
        let cav = to_standard_form(&out.state.reduce(CAVITY).unwrap()).unwrap();
        assert_abs_diff_eq!(cav.r, 0.6, epsilon = 1e-6);
        assert_abs_diff_eq!(cav.n_th, 0.0, epsilon = 1e-6);
        assert!(out.wick_error < 1e-6, "wick {}", out.wick_error);
    }

    #[test]
    fn generic_rwa_matches_symplectic_propagation() {
        let m = RwaModel { r0: 1.0, ..rwa(2.0, 2.5, 0.05, 1.0) };
        // at cutoff 60 the truncated squeezed vacuum alone is 3.5e−6 off in ⟨P_m²⟩
        let cfg = FockConfig { tail_tolerance: 1e-7, ..FockConfig::new(FockModel::Rwa(m), 70) };
        let out = fock_evolve(&cfg, 1.0, 7.0).unwrap();
        let closed = m.joint_evolve_noiseless(7.0).unwrap();
        let diff = (out.state.covariance() - closed.covariance()).amax();
        assert!(diff < 1e-6, "{diff:e}, tail {:e}", out.tail);
    }

    #[test]
    fn critical_model_matches_closed_form() {
        let m = CriticalModel::near_critical(2.0, 2.0, 0.9).unwrap();
        let cfg = FockConfig::new(FockModel::Critical(m), 40);
        let out = fock_evolve(&cfg, 0.0, 3.0).unwrap();
        let closed = m.gamma_c_closed(3.0).unwrap();
        let cav = out.state.reduce(CAVITY).unwrap();
        assert!((cav.covariance() - closed.covariance()).amax() < 1e-5);
        let joint = m.joint_evolve(3.0).unwrap();
        assert!((out.state.covariance() - joint.covariance()).amax() < 1e-5);
    }

    #[test]
    fn drive_displacement_matches_closed_form() {
        let m = RwaModel { b_x: 0.01, ..RwaModel::resonant(2.0, 0.05, 0.0) };
        let cfg = FockConfig::new(FockModel::Rwa(m), 12);
        let out = fock_evolve(&cfg, 0.0, 5.0).unwrap();
        let d = out.state.displacement();
        let alpha = Complex64::new(d[0], d[1]) / std::f64::consts::SQRT_2;
        let closed = m.displacement_nonparallel(5.0).unwrap();
        assert!((alpha - closed).norm() < 1e-6, "{alpha} vs {closed}");
    }

    #[test]
    fn tiny_cutoff_is_reported() {
        let m = RwaModel::resonant(2.0, 0.05, 0.8);
        let cfg = FockConfig::new(FockModel::Rwa(m), 6);
        assert!(matches!(fock_evolve(&cfg, 0.8, 10.0), Err(Error::CutoffTooSmall { cutoff: 6, .. })));
    }

    #[test]
    fn noise_rejected_by_fock_oracle() {
        let m = RwaModel { kappa: 0.1, ..RwaModel::resonant(2.0, 0.05, 0.0) };
        let cfg = FockConfig::new(FockModel::Rwa(m), 6);
        assert!(matches!(fock_evolve(&cfg, 0.0, 1.0), Err(Error::UnsupportedNoise { .. })));
    }

    #[test]
    fn cutoff_convergence() {
        let m = rwa(2.0, 2.3, 0.08, 0.6);
        let t = 9.0;
        let a = fock_evolve(&FockConfig::new(FockModel::Rwa(m), 40), 0.6, t).unwrap();
        let b = fock_evolve(&FockConfig::new(FockModel::Rwa(m), 80), 0.6, t).unwrap();
        assert!((a.state.covariance() - b.state.covariance()).amax() < 1e-8);
    }

    #[test]
    fn lyapunov_noiseless_matches_symplectic() {
        let m = rwa(2.0, 2.4, 0.07, 0.9);
        for t in [0.0, 3.0, 40.0] {
            let a = lyapunov_integrate(&m, t).unwrap();
            let b = m.joint_evolve_noiseless(t).unwrap();
            let diff = (a.covariance() - b.covariance()).amax();
            assert!(diff < 1e-9, "t = {t}: {diff:e}");
        }
    }

    #[test]
    fn lyapunov_thermalises() {
        let m = RwaModel { kappa: 0.2, n_noise: 2.0, ..rwa(2.0, 2.0, 0.05, 1.0) };
        let s = lyapunov_integrate(&m, 200.0).unwrap().reduce(CAVITY).unwrap();
        assert!((s.covariance() - DMatrix::identity(2, 2) * 5.0).amax() < 1e-8);
    }

    #[test]
    fn lyapunov_matches_dissipative_closed_form() {
        let m = RwaModel { kappa: 0.001, n_noise: 30.0, ..RwaModel::resonant(2.0, 0.05, 1.0) };
        let ts = m.t_star().unwrap();
        let s = lyapunov_integrate(&m, ts).unwrap().reduce(CAVITY).unwrap();
        let (closed, _) = m.evolve_cavity(ts).unwrap();
        let diff = (s.covariance() - closed.covariance()).amax();
        assert!(diff < 1e-8 * closed.covariance().amax(), "{diff}");
    }

    #[test]
    fn lyapunov_displacement_matches_closed_form() {
        let m = RwaModel { b_x: 0.02, b_y: -0.01, kappa: 0.03, ..rwa(2.0, 2.2, 0.05, 0.0) };
        let s = lyapunov_integrate(&m, 12.0).unwrap();
        let d = s.displacement();
        let alpha = Complex64::new(d[0], d[1]) / std::f64::consts::SQRT_2;
        let closed = m.displacement_nonparallel(12.0).unwrap();
        assert!((alpha - closed).norm() < 1e-10);
    }
}
