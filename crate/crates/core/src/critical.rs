//! Beyond-RWA dynamics in the normal phase.
//!
//! `H = ω_c ĉ†ĉ + ω_m ℬ̂†ℬ̂ + g(ĉ + ĉ†)(ℬ̂ + ℬ̂†)` with both modes initially in
//! vacuum. The quadratic Hamiltonian splits into two normal modes with
//! frequencies `ε₋ ≤ ε₊`; the lower branch softens as `g → g_c = √(ω_c ω_m)/2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{self, FisherResult};
use crate::gaussian::{self, entanglement_entropy, photon_number, GaussianState, StandardForm, CAVITY};
use crate::rwa::symmetrize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalModel {
    pub omega_c: f64,
    pub omega_m: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovData {
    pub eps_minus: f64,
    pub eps_plus: f64,
    pub delta_angle: f64,
}

/// Fisher information at one special time and at a quarter of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialTimeFisher {
    pub t_star: f64,
    pub at_t_star: FisherResult,
    pub at_quarter: FisherResult,
    pub form_t_star: StandardForm,
    pub form_quarter: StandardForm,
}

impl CriticalModel {
    pub fn new(omega_c: f64, omega_m: f64, g: f64) -> Result<Self> {
        let m = Self { omega_c, omega_m, g };
        m.validate()?;
        Ok(m)
    }

    /// Model at `g = (1 − gap)·g_c`.
    pub fn near_critical(omega_c: f64, omega_m: f64, gap: f64) -> Result<Self> {
        let g_c = (omega_c * omega_m).sqrt() / 2.0;
        Self::new(omega_c, omega_m, g_c * (1.0 - gap))
    }

    pub fn g_c(&self) -> f64 {
        (self.omega_c * self.omega_m).sqrt() / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.omega_c, self.omega_m, self.g].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if self.omega_c <= 0.0 || self.omega_m <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "frequencies must be positive (ω_c = {}, ω_m = {})",
                self.omega_c, self.omega_m
            )));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidModel(format!("g = {} < 0", self.g)));
        }
        if self.g >= self.g_c() {
            return Err(Error::SuperradiantPhase { g: self.g, g_c: self.g_c() });
        }
        Ok(())
    }

    /// Normal-mode frequencies and mixing angle.
    ///
    /// `ε₋²` is evaluated as `8ω_cω_m(g_c − g)(g_c + g)/(ω_c² + ω_m² + R)`,
    /// the cancellation-free twin of `(ω_c² + ω_m² − R)/2`, so it keeps full
    /// relative precision as `g → g_c`. The angle uses the two-argument
    /// arctangent, which selects the branch where the `ε₋` mode is the one
    /// continuously connected to the lower bare frequency (`π/4` at resonance).
    pub fn bogoliubov(&self) -> Result<BogoliubovData> {
        self.validate()?;
        let (wc, wm, g) = (self.omega_c, self.omega_m, self.g);
        let sum = wc * wc + wm * wm;
        let coupling = 4.0 * g * (wc * wm).sqrt();
        let root = (wc * wc - wm * wm).hypot(coupling);
        let g_c = self.g_c();
        let eps_plus = ((sum + root) / 2.0).sqrt();
        let eps_minus = (8.0 * wc * wm * (g_c - g) * (g_c + g) / (sum + root)).sqrt();
        Ok(BogoliubovData {
            eps_minus,
            eps_plus,
            delta_angle: 0.5 * coupling.atan2(wm * wm - wc * wc),
        })
    }

    /// `t* = nπ/ε₋`.
    pub fn t_star(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter("special-time index must be ≥ 1".into()));
        }
        Ok(n as f64 * PI / self.bogoliubov()?.eps_minus)
    }

    /// Reduced cavity covariance from the closed-form entries.
    pub fn gamma_c_closed(&self, t: f64) -> Result<GaussianState> {
        check_time(t)?;
        let b = self.bogoliubov()?;
        let (wc, wm) = (self.omega_c, self.omega_m);
        let (em, ep) = (b.eps_minus, b.eps_plus);
        let c2 = b.delta_angle.cos().powi(2);
        let d = wc - wm;
        let (sm, cm) = (em * t).sin_cos();
        let (sp, cp) = (ep * t).sin_cos();
        // (cos 2εt − 1) and sin 2εt
        let (dcm, dcp) = (-2.0 * sm * sm, -2.0 * sp * sp);
        let (s2m, s2p) = ((2.0 * em * t).sin(), (2.0 * ep * t).sin());
        let mix = c2 * (c2 - 1.0) * d;

        let g11 = 1.0 + mix * (2.0 / wm * (cp * cm - 1.0) - 2.0 * wc / (ep * em) * sp * sm)
            - (c2 - 1.0) * ((wc * wm + ep * ep) * d * c2 + (ep * ep - wc * wc) * wm) * dcp / (2.0 * ep * ep * wm)
            - c2 * ((wc * wm + em * em) * d * c2 + (wm * wm - em * em) * wc) * dcm / (2.0 * em * em * wm);
        let g22 = 1.0 - mix * (2.0 / wc * (cp * cm - 1.0) - 2.0 * ep * em / (wc * wc * wm) * sp * sm)
            + (c2 - 1.0) * (d * (wc * wm + ep * ep) * c2 + (ep * ep - wc * wc) * wm) * dcp / (2.0 * wc * wc * wm)
            + c2 * (d * (wc * wm + em * em) * c2 - (em * em - wm * wm) * wc) * dcm / (2.0 * wc * wc * wm);
        let g12 = -mix
            * ((ep * ep + wc * wm) / (ep * wc * wm) * sp * cm + (em * em + wc * wm) / (em * wc * wm) * cp * sm)
            + (c2 - 1.0) * (c2 * d * (ep * ep + wc * wm) + (ep * ep - wc * wc) * wm) * s2p / (2.0 * ep * wc * wm)
            + c2 * (c2 * d * (em * em + wc * wm) - (em * em - wm * wm) * wc) * s2m / (2.0 * em * wc * wm);

        GaussianState::single_mode([0.0, 0.0], Matrix2::new(g11, g12, g12, g22))
    }

    /// Real symplectic propagator of `(X_c, P_c, X_m, P_m)` assembled from the
    /// normal-mode decomposition `M = T₁T₂T₃(t)T₂⁻¹T₁⁻¹`.
    pub fn propagator(&self, t: f64) -> Result<Matrix4<f64>> {
        let b = self.bogoliubov()?;
        let (wc, wm) = (self.omega_c, self.omega_m);
        let (em, ep) = (b.eps_minus, b.eps_plus);
        let (s, c) = b.delta_angle.sin_cos();
        let block = |w: f64, e: f64, amp: f64| {
            let k = amp / (2.0 * (w * e).sqrt());
            (k * (w + e), k * (w - e))
        };
        // columns: (ĉ₁, ĉ₁†, ĉ₂, ĉ₂†) in terms of rows (ĉ, ĉ†, ℬ̂, ℬ̂†)
        let (a1, b1) = block(wc, em, c);
        let (a2, b2) = block(wc, ep, s);
        let (a3, b3) = block(wm, em, -s);
        let (a4, b4) = block(wm, ep, c);
        let t2 = Matrix4::new(
            a1, b1, a2, b2, //
            b1, a1, b2, a2, //
            a3, b3, a4, b4, //
            b3, a3, b4, a4,
        )
        .map(Complex64::from);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let i = Complex64::new(0.0, 1.0);
        let t1 = Matrix4::new(
            r.into(), r.into(), 0.0.into(), 0.0.into(),
            -i * r, i * r, 0.0.into(), 0.0.into(),
            0.0.into(), 0.0.into(), r.into(), r.into(),
            0.0.into(), 0.0.into(), -i * r, i * r,
        );
        let phase = |e: f64, sign: f64| Complex64::from_polar(1.0, sign * e * t);
        let t3 = Matrix4::from_diagonal(&nalgebra::Vector4::new(
            phase(em, -1.0),
            phase(em, 1.0),
            phase(ep, -1.0),
            phase(ep, 1.0),
        ));
        let inv = |m: Matrix4<Complex64>| {
            m.try_inverse()
                .ok_or_else(|| Error::InvalidModel("singular normal-mode transformation".into()))
        };
        let m = t1 * t2 * t3 * inv(t2)? * inv(t1)?;
        Ok(m.map(|z| z.re))
    }

    /// Joint cavity–magnon state at time `t` starting from the joint vacuum.
    pub fn joint_evolve(&self, t: f64) -> Result<GaussianState> {
        check_time(t)?;
        let m = self.propagator(t)?;
        let m = DMatrix::from_iterator(4, 4, m.iter().copied());
        let gamma = symmetrize(&m * m.transpose());
        GaussianState::new(DVector::zeros(4), gamma)
    }

    /// Cavity–magnon entanglement entropy in bits.
    pub fn entanglement(&self, t: f64) -> Result<f64> {
        let cav = self.joint_evolve(t)?.reduce(CAVITY)?;
        entanglement_entropy(gaussian::to_standard_form(&cav)?.n_th)
    }

    /// Standard form of the cavity as a function of a shift `b` of `ω_m`,
    /// at a frozen time `t`.
    pub fn family(&self, t: f64) -> impl Fn(f64) -> Result<StandardForm> + '_ {
        move |b| {
            let m = Self { omega_m: self.omega_m + b, ..*self };
            gaussian::to_standard_form(&m.gamma_c_closed(t)?)
        }
    }

    /// Finite-difference step for the `ω_m` family.
    ///
    /// By `t*` the soft mode has accumulated a phase `ε₋t ∝ (g_c − g)^{−1/2}`
    /// relative to its sensitivity, so the cavity state varies on an `ω_m`
    /// scale of order `(g_c − g)^{3/2}/√g_c`; the step is `1e−2` of that.
    pub fn fd_step(&self) -> f64 {
        let gap = self.g_c() - self.g;
        (1e-2 * gap * (gap / self.g_c()).sqrt()).min(fisher::default_step(self.omega_m))
    }

    /// Fisher information of the cavity at fixed time `t`.
    pub fn fisher_at(&self, t: f64) -> Result<(StandardForm, FisherResult)> {
        let p = gaussian::to_standard_form(&self.gamma_c_closed(t)?)?;
        let dp = fisher::derivatives_fd(self.family(t), 0.0, self.fd_step())?;
        Ok((p, fisher::evaluate(&p, &dp)?))
    }

    /// Fisher information at `t* = π/ε₋` and `t*/4`. Time is fixed at its
    /// value for the actual field before the state is differentiated.
    pub fn fisher_at_special_times(&self) -> Result<SpecialTimeFisher> {
        let t_star = self.t_star(1)?;
        let (form_t_star, at_t_star) = self.fisher_at(t_star)?;
        let (form_quarter, at_quarter) = self.fisher_at(t_star / 4.0)?;
        Ok(SpecialTimeFisher {
            t_star,
            at_t_star,
            at_quarter,
            form_t_star,
            form_quarter,
        })
    }

    /// Mean cavity excitation at time `t`.
    pub fn photon_number(&self, t: f64) -> Result<f64> {
        Ok(photon_number(&gaussian::to_standard_form(&self.gamma_c_closed(t)?)?))
    }

    /// Entanglement along a time grid, evaluated in parallel.
    pub fn entanglement_vs_time(&self, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        t_grid.par_iter().map(|&t| Ok((t, self.entanglement(t)?))).collect()
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t = {t}")));
    }
    Ok(())
}
