//! Dissipative cavity–magnon dynamics in the rotating-wave approximation.
//!
//! The magnon starts in a squeezed vacuum (`γ_m = diag(e^{−2r₀}, e^{2r₀})`),
//! the cavity in vacuum. Equal damping `κ` and equal bath occupation
//! `n_noise` are assumed for both modes, which keeps the reduced cavity
//! state a two-step mixture: a noiseless beam-splitter exchange followed by
//! relaxation toward the bath.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{self, FisherResult, ParamDerivatives};
use crate::gaussian::{
    self, entanglement_entropy, principal_angle, GaussianState, StandardForm, CAVITY,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Physical parameters. The magnon frequency is `ω_m = B₀ + B` (μ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwaModel {
    pub omega_c: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "B", default)]
    pub b: f64,
    #[serde(rename = "B_x", default)]
    pub b_x: f64,
    #[serde(rename = "B_y", default)]
    pub b_y: f64,
    pub g: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub n_noise: f64,
    #[serde(default)]
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionFactors {
    pub delta: f64,
    pub xi: f64,
    pub eta: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

impl RwaModel {
    /// Resonant, noiseless model with `ω_c = ω_m = omega`.
    pub fn resonant(omega: f64, g: f64, r0: f64) -> Self {
        Self {
            omega_c: omega,
            b0: omega,
            b: 0.0,
            b_x: 0.0,
            b_y: 0.0,
            g,
            kappa: 0.0,
            n_noise: 0.0,
            r0,
        }
    }

    pub fn omega_m(&self) -> f64 {
        self.b0 + self.b
    }

    /// Upper end of the coupling range where the RWA is trusted.
    pub fn g_limit(&self) -> f64 {
        (self.omega_c * self.omega_m()).sqrt() / 2.0
    }

    /// The same model with the estimated field set to `b`.
    pub fn with_field(&self, b: f64) -> Self {
        Self { b, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.omega_c, self.b0, self.b, self.b_x, self.b_y, self.g, self.kappa, self.n_noise, self.r0,
        ];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if self.omega_c <= 0.0 || self.omega_m() <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "frequencies must be positive (ω_c = {}, ω_m = {})",
                self.omega_c,
                self.omega_m()
            )));
        }
        for (name, v) in [("g", self.g), ("kappa", self.kappa), ("n_noise", self.n_noise), ("r0", self.r0)] {
            if v < 0.0 {
                return Err(Error::InvalidModel(format!("{name} = {v} < 0")));
            }
        }
        if self.g >= self.g_limit() {
            log::warn!("g = {} outside the RWA region (limit {})", self.g, self.g_limit());
        }
        Ok(())
    }

    pub fn factors(&self, t: f64) -> EvolutionFactors {
        let detuning = self.omega_c - self.omega_m();
        let delta = (4.0 * self.g * self.g + detuning * detuning).sqrt();
        let xi = if delta == 0.0 {
            0.0
        } else {
            (4.0 * self.g * self.g * (delta * t / 2.0).sin().powi(2) / (delta * delta)).min(1.0)
        };
        let sum = self.omega_c + self.omega_m();
        let damp = self.kappa / 2.0;
        EvolutionFactors {
            delta,
            xi,
            eta: (-self.kappa * t).exp(),
            lambda_plus: Complex64::new(-damp, (-sum + delta) / 2.0),
            lambda_minus: Complex64::new(-damp, (-sum - delta) / 2.0),
        }
    }

    /// `T(t) = e^{At}` acting on `(ĉ, iℬ̂)`, with
    /// `A = [[−iω_c − κ/2, −g], [g, −iω_m − κ/2]]`.
    ///
    /// Written as `e^{mt}[cos(Δt/2)·𝟙 + t·sinc(Δt/2)·(A − m𝟙)]`, `m = tr A / 2`,
    /// which stays finite through `Δ → 0`.
    pub fn propagator(&self, t: f64) -> Matrix2<Complex64> {
        let f = self.factors(t);
        let a = Matrix2::new(
            Complex64::new(-self.kappa / 2.0, -self.omega_c),
            Complex64::from(-self.g),
            Complex64::from(self.g),
            Complex64::new(-self.kappa / 2.0, -self.omega_m()),
        );
        let m = (a[(0, 0)] + a[(1, 1)]) / 2.0;
        let half = f.delta * t / 2.0;
        let sinc_t = if half.abs() < 1e-8 { t } else { half.sin() / (f.delta / 2.0) };
        let shifted = a - Matrix2::identity() * m;
        (Matrix2::identity() * Complex64::from(half.cos()) + shifted * Complex64::from(sinc_t))
            * (m * t).exp()
    }

    /// Noiseless cavity covariance (process P1).
    pub fn gamma_in(&self, t: f64) -> Matrix2<f64> {
        let xi = self.factors(t).xi;
        let sum_t = (self.omega_c + self.omega_m()) * t;
        let (s, c) = (sum_t / 2.0).sin_cos();
        let (up, down) = ((2.0 * self.r0).exp() - 1.0, (-2.0 * self.r0).exp() - 1.0);
        let g11 = 1.0 + down * xi * s * s + up * xi * c * c;
        let g22 = 1.0 + up * xi * s * s + down * xi * c * c;
        let g12 = -(2.0 * self.r0).sinh() * xi * sum_t.sin();
        Matrix2::new(g11, g12, g12, g22)
    }

    /// Reduced cavity state at time `t` and its standard form obtained from
    /// the closed-form `(r, n_th, φ)` expressions.
    pub fn evolve_cavity(&self, t: f64) -> Result<(GaussianState, StandardForm)> {
        self.validate()?;
        check_time(t)?;
        let f = self.factors(t);
        let bath = 2.0 * self.n_noise + 1.0;
        let gamma = self.gamma_in(t) * f.eta + Matrix2::identity() * ((1.0 - f.eta) * bath);
        let alpha = self.displacement_nonparallel(t)?;
        let d = [std::f64::consts::SQRT_2 * alpha.re, std::f64::consts::SQRT_2 * alpha.im];
        let state = GaussianState::single_mode(d, gamma)?;

        let (xi, eta) = (f.xi, f.eta);
        let root_in = (1.0 + 4.0 * xi * (1.0 - xi) * self.r0.sinh().powi(2)).sqrt();
        let r_in = 0.5 * ((1.0 - xi + xi * (2.0 * self.r0).exp()) / root_in).ln();
        let nn_in = root_in; // 1 + 2 n_in
        let mixed = ((eta * nn_in + (1.0 - eta) * bath).powi(2)
            + 4.0 * eta * (1.0 - eta) * nn_in * bath * r_in.sinh().powi(2))
        .sqrt();
        let r = 0.5 * (((1.0 - eta) * bath + eta * nn_in * (2.0 * r_in).exp()) / mixed).ln();
        let n_th = ((mixed - 1.0) / 2.0).max(0.0);
        let phi = if (2.0 * r).sinh() < 1e-12 {
            0.0
        } else {
            principal_angle(PI - (self.omega_c + self.omega_m()) * t)
        };
        let form = StandardForm { alpha, r: r.max(0.0), phi, n_th };
        Ok((state, form))
    }

    /// Cavity displacement produced by a field component transverse to the
    /// bias, `α(t) = ⟨ĉ(t)⟩`.
    ///
    /// The drive enters the `iℬ̂` row of the Langevin equation as
    /// `i(B_x + iB_y)/2`; propagating it with `T(s)` and reading off the `ĉ`
    /// row gives `i·g(B_x + iB_y)/(2Δ)·[(e^{λ₋t} − 1)/λ₋ − (e^{λ₊t} − 1)/λ₊]`.
    pub fn displacement_nonparallel(&self, t: f64) -> Result<Complex64> {
        check_time(t)?;
        if (self.b_x == 0.0 && self.b_y == 0.0) || self.g == 0.0 || t == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let f = self.factors(t);
        let ramp = |l: Complex64| ((l * t).exp() - 1.0) / l;
        let drive = Complex64::new(self.b_x, self.b_y);
        Ok(I * self.g * drive / (2.0 * f.delta) * (ramp(f.lambda_minus) - ramp(f.lambda_plus)))
    }

    /// Real 4×4 map of `(X_c, P_c, X_m, P_m)` for the noiseless dynamics.
    pub fn quadrature_propagator(&self, t: f64) -> Matrix4<f64> {
        let tm = self.propagator(t);
        // (ĉ, iℬ̂) → (ĉ, ℬ̂)
        let u = Matrix2::new(tm[(0, 0)], I * tm[(0, 1)], -I * tm[(1, 0)], tm[(1, 1)]);
        let mut m = Matrix4::zeros();
        for j in 0..2 {
            for k in 0..2 {
                let z = u[(j, k)];
                m[(2 * j, 2 * k)] = z.re;
                m[(2 * j, 2 * k + 1)] = -z.im;
                m[(2 * j + 1, 2 * k)] = z.im;
                m[(2 * j + 1, 2 * k + 1)] = z.re;
            }
        }
        m
    }

    pub fn initial_joint(&self) -> Result<GaussianState> {
        let e = (2.0 * self.r0).exp();
        let gamma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0 / e, e]));
        GaussianState::new(DVector::zeros(4), gamma)
    }

    /// Joint cavity–magnon state for `κ = 0`.
    pub fn joint_evolve_noiseless(&self, t: f64) -> Result<GaussianState> {
        self.validate()?;
        check_time(t)?;
        if self.kappa > 0.0 {
            return Err(Error::UnsupportedNoise { kappa: self.kappa });
        }
        if self.b_x != 0.0 || self.b_y != 0.0 {
            return Err(Error::InvalidModel("joint evolution needs B_x = B_y = 0".into()));
        }
        let m = self.quadrature_propagator(t);
        let g0 = self.initial_joint()?;
        let gm = DMatrix::from_iterator(4, 4, m.iter().copied());
        let gamma = &gm * g0.covariance() * gm.transpose();
        GaussianState::new(DVector::zeros(4), symmetrize(gamma))
    }

    /// Cavity–magnon entanglement entropy (bits) along a time grid.
    pub fn entanglement_vs_time(&self, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        if self.kappa > 0.0 {
            return Err(Error::UnsupportedNoise { kappa: self.kappa });
        }
        t_grid
            .par_iter()
            .map(|&t| {
                let cav = self.joint_evolve_noiseless(t)?.reduce(CAVITY)?;
                let n_th = gaussian::to_standard_form(&cav)?.n_th;
                Ok((t, entanglement_entropy(n_th)?))
            })
            .collect()
    }

    /// Time of complete cavity–magnon exchange at resonance, `π/(2g)`.
    pub fn t_star(&self) -> Result<f64> {
        if !(self.g > 0.0) {
            return Err(Error::ZeroCoupling);
        }
        Ok(FRAC_PI_2 / self.g)
    }

    /// Closed-form standard form as a function of the estimated field.
    pub fn family(&self, t: f64) -> impl Fn(f64) -> Result<StandardForm> + '_ {
        move |b| self.with_field(b).evolve_cavity(t).map(|(_, p)| p)
    }

    /// Standard form, its field derivatives and the Fisher information of the
    /// cavity at time `t`, differentiating around the model's own `B`.
    pub fn fisher_at(&self, t: f64) -> Result<(StandardForm, ParamDerivatives, FisherResult)> {
        let (_, p) = self.evolve_cavity(t)?;
        let dp = fisher::derivatives_fd(self.family(t), self.b, fisher::default_step(self.b))?;
        let f_q = fisher::qfi(&p, &dp)?;
        // the matched-measurement CFI is only defined without displacement
        let f_c = if p.alpha.norm() > 0.0 || dp.d_alpha.norm() > 0.0 {
            f64::NAN
        } else {
            fisher::cfi_optimal(&p, &dp)?
        };
        Ok((p, dp, FisherResult { f_q, f_c }))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t = {t}")));
    }
    Ok(())
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::to_standard_form;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn generic() -> RwaModel {
        RwaModel { b0: 2.5, r0: 1.0, ..RwaModel::resonant(2.0, 0.05, 1.0) }
    }

    fn omega() -> Matrix4<f64> {
        let j = Matrix2::new(0.0, 1.0, -1.0, 0.0);
        let mut o = Matrix4::zeros();
        o.fixed_view_mut::<2, 2>(0, 0).copy_from(&j);
        o.fixed_view_mut::<2, 2>(2, 2).copy_from(&j);
        o
    }

    fn expm_series(a: Matrix2<Complex64>, t: f64) -> Matrix2<Complex64> {
        // scaling and squaring of a Taylor series
        let steps = 20;
        let h = a * Complex64::from(t / f64::powi(2.0, steps));
        let mut term = Matrix2::identity();
        let mut sum = Matrix2::identity();
        for k in 1..30 {
            term = term * h / Complex64::from(k as f64);
            sum += term;
        }
        for _ in 0..steps {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn g_zero_keeps_vacuum() {
        let m = RwaModel { g: 0.0, ..generic() };
        for t in [0.0, 1.0, 37.3] {
            let (s, p) = m.evolve_cavity(t).unwrap();
            assert_abs_diff_eq!(s.covariance2().unwrap(), Matrix2::identity(), epsilon = 1e-15);
            assert_eq!(p.r, 0.0);
        }
    }

    #[test]
    fn t_zero_is_vacuum() {
        let (s, _) = generic().evolve_cavity(0.0).unwrap();
        assert_eq!(s.covariance2().unwrap(), Matrix2::identity());
    }

    #[test]
    fn resonant_swap_transfers_squeezing() {
        let m = RwaModel::resonant(2.0, 0.05, 1.0);
        let ts = m.t_star().unwrap();
        let (s, p) = m.evolve_cavity(ts).unwrap();
        assert_abs_diff_eq!(p.r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.n_th, 0.0, epsilon = 1e-12);
        let q = to_standard_form(&s).unwrap();
        assert_abs_diff_eq!(q.r, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.n_th, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.factors(ts).xi, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn long_time_thermalises() {
        let m = RwaModel { kappa: 0.1, n_noise: 3.0, ..generic() };
        let (s, p) = m.evolve_cavity(600.0).unwrap();
        assert_abs_diff_eq!(s.covariance2().unwrap(), Matrix2::identity() * 7.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.n_th, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn invalid_models() {
        let bad = [
            RwaModel { omega_c: 0.0, ..generic() },
            RwaModel { b: -3.0, ..generic() },
            RwaModel { kappa: -1.0, ..generic() },
            RwaModel { r0: f64::NAN, ..generic() },
        ];
        for m in bad {
            assert!(matches!(m.evolve_cavity(1.0), Err(Error::InvalidModel(_))));
        }
        assert!(generic().evolve_cavity(-1.0).is_err());
    }

    #[test]
    fn propagator_matches_series_exponential() {
        for m in [generic(), RwaModel { kappa: 0.3, ..generic() }, RwaModel::resonant(1.0, 0.0, 0.0)] {
            let a = Matrix2::new(
                Complex64::new(-m.kappa / 2.0, -m.omega_c),
                Complex64::from(-m.g),
                Complex64::from(m.g),
                Complex64::new(-m.kappa / 2.0, -m.omega_m()),
            );
            for t in [0.0, 0.3, 7.0, 40.0] {
                let d = m.propagator(t) - expm_series(a, t);
                assert!(d.iter().all(|z| z.norm() < 1e-10), "t = {t}: {d}");
            }
        }
    }

    #[test]
    fn propagator_matches_eigen_form() {
        // T(t) written with the eigenvalues λ± of A
        let m = RwaModel { kappa: 0.02, ..generic() };
        let t = 13.0;
        let f = m.factors(t);
        let (lp, lm) = (f.lambda_plus, f.lambda_minus);
        let shift = Complex64::new(m.kappa / 2.0, m.omega_c);
        let (ep, em) = ((lp * t).exp(), (lm * t).exp());
        let pre = 1.0 / (I * m.g * f.delta);
        let expect = Matrix2::new(
            m.g * (lp + shift) * em - m.g * (lm + shift) * ep,
            m.g * m.g * (em - ep),
            (lp + shift) * (lm + shift) * (ep - em),
            m.g * (lp + shift) * ep - m.g * (lm + shift) * em,
        ) * pre;
        let d = m.propagator(t) - expect;
        assert!(d.iter().all(|z| z.norm() < 1e-12), "{d}");
    }

    #[test]
    fn joint_evolution_is_symplectic_and_pure() {
        let om = omega();
        for m in [generic(), RwaModel::resonant(2.0, 0.3, 0.4)] {
            for t in [0.0, 0.7, 7.0, 55.0] {
                let s = m.quadrature_propagator(t);
                assert!((s * om * s.transpose() - om).amax() < 1e-10);
                let g = m.joint_evolve_noiseless(t).unwrap();
                assert_abs_diff_eq!(g.covariance().determinant(), 1.0, epsilon = 1e-9);
            }
        }
        let g0 = generic().joint_evolve_noiseless(0.0).unwrap();
        assert_eq!(g0, generic().initial_joint().unwrap());
    }

    #[test]
    fn joint_reduction_matches_closed_form() {
        let m = generic();
        for t in [0.5, 7.0, 31.0, 100.0] {
            let joint = m.joint_evolve_noiseless(t).unwrap().reduce(CAVITY).unwrap();
            let (cav, _) = m.evolve_cavity(t).unwrap();
            assert!((joint.covariance() - cav.covariance()).amax() < 1e-10);
        }
    }

    #[test]
    fn joint_rejects_noise() {
        let m = RwaModel { kappa: 0.01, ..generic() };
        assert_eq!(m.joint_evolve_noiseless(1.0), Err(Error::UnsupportedNoise { kappa: 0.01 }));
        assert!(m.entanglement_vs_time(&[1.0]).is_err());
    }

    #[test]
    fn resonant_swap_disentangles() {
        let m = RwaModel::resonant(2.0, 0.05, 1.0);
        let ts = m.t_star().unwrap();
        let s = m.entanglement_vs_time(&[ts, ts / 2.0]).unwrap();
        assert!(s[0].1 < 1e-8, "S(t*) = {}", s[0].1);
        assert!(s[1].1 > 0.1);
        let joint = m.joint_evolve_noiseless(ts).unwrap();
        let magnon = joint.reduce(gaussian::MAGNON).unwrap();
        assert!((magnon.covariance() - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn no_entanglement_without_coupling_or_squeezing() {
        let grid: Vec<f64> = (0..50).map(|k| k as f64 * 1.7).collect();
        for m in [RwaModel { g: 0.0, ..generic() }, RwaModel { r0: 0.0, ..generic() }] {
            assert!(m.entanglement_vs_time(&grid).unwrap().iter().all(|&(_, s)| s.abs() < 1e-10));
        }
    }

    #[test]
    fn t_star_values() {
        assert_abs_diff_eq!(RwaModel::resonant(2.0, 0.05, 0.0).t_star().unwrap(), 10.0 * PI, epsilon = 1e-12);
        let g = 7.11 * PI;
        assert_abs_diff_eq!(RwaModel::resonant(2.0, g, 0.0).t_star().unwrap(), 1.0 / 14.22, epsilon = 1e-15);
        let a = RwaModel::resonant(2.0, 0.1, 0.0).t_star().unwrap();
        let b = RwaModel::resonant(2.0, 0.2, 0.0).t_star().unwrap();
        assert_abs_diff_eq!(a, 2.0 * b, epsilon = 1e-14);
        assert_eq!(RwaModel::resonant(2.0, 0.0, 0.0).t_star(), Err(Error::ZeroCoupling));
    }

    #[test]
    fn displacement_trivial_cases() {
        let m = generic();
        assert_eq!(m.displacement_nonparallel(5.0).unwrap(), Complex64::new(0.0, 0.0));
        let m = RwaModel { b_x: 0.01, ..generic() };
        assert_eq!(m.displacement_nonparallel(0.0).unwrap(), Complex64::new(0.0, 0.0));
        let a = m.displacement_nonparallel(5.0).unwrap();
        let b = RwaModel { r0: 0.0, ..m }.displacement_nonparallel(5.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn displacement_matches_mean_field_integration() {
        // RK4 on the classical amplitudes dc/dt = −iω_c c − ig b − κc/2,
        // db/dt = −iω_m b − ig c + i(B_x + iB_y)/2 − κb/2
        for m in [
            RwaModel { b_x: 0.01, b_y: 0.003, ..RwaModel::resonant(2.0, 0.05, 0.0) },
            RwaModel { b_x: -0.02, b_y: 0.01, kappa: 0.04, ..generic() },
        ] {
            let t_end = 5.0;
            let f = |y: [Complex64; 2]| {
                let drive = I * Complex64::new(m.b_x, m.b_y) / 2.0;
                [
                    -I * m.omega_c * y[0] - I * m.g * y[1] - m.kappa / 2.0 * y[0],
                    -I * m.omega_m() * y[1] - I * m.g * y[0] + drive - m.kappa / 2.0 * y[1],
                ]
            };
            let n = 20000;
            let h = t_end / n as f64;
            let mut y = [Complex64::new(0.0, 0.0); 2];
            let add = |y: [Complex64; 2], k: [Complex64; 2], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s];
            for _ in 0..n {
                let k1 = f(y);
                let k2 = f(add(y, k1, h / 2.0));
                let k3 = f(add(y, k2, h / 2.0));
                let k4 = f(add(y, k3, h));
                for i in 0..2 {
                    y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                }
            }
            let a = m.displacement_nonparallel(t_end).unwrap();
            assert!((a - y[0]).norm() < 1e-12, "{a} vs {}", y[0]);
        }
    }

    /// Forward-mode dual numbers used as an independent derivative oracle.
    #[derive(Clone, Copy, Debug)]
    struct Dual(f64, f64);
    impl std::ops::Add for Dual {
        type Output = Dual;
        fn add(self, o: Dual) -> Dual {
            Dual(self.0 + o.0, self.1 + o.1)
        }
    }
    impl std::ops::Sub for Dual {
        type Output = Dual;
        fn sub(self, o: Dual) -> Dual {
            Dual(self.0 - o.0, self.1 - o.1)
        }
    }
    impl std::ops::Mul for Dual {
        type Output = Dual;
        fn mul(self, o: Dual) -> Dual {
            Dual(self.0 * o.0, self.1 * o.0 + self.0 * o.1)
        }
    }
    impl std::ops::Div for Dual {
        type Output = Dual;
        fn div(self, o: Dual) -> Dual {
            Dual(self.0 / o.0, (self.1 * o.0 - self.0 * o.1) / (o.0 * o.0))
        }
    }
    impl Dual {
        fn c(x: f64) -> Dual {
            Dual(x, 0.0)
        }
        fn sin(self) -> Dual {
            Dual(self.0.sin(), self.1 * self.0.cos())
        }
        fn sqrt(self) -> Dual {
            let s = self.0.sqrt();
            Dual(s, self.1 / (2.0 * s))
        }
        fn ln(self) -> Dual {
            Dual(self.0.ln(), self.1 / self.0)
        }
        fn exp(self) -> Dual {
            let e = self.0.exp();
            Dual(e, self.1 * e)
        }
    }

    /// (r, n_th) of the cavity and φ′ with ω_m carrying the dual part.
    fn dual_form(m: &RwaModel, t: f64) -> (Dual, Dual, f64) {
        let wm = Dual(m.omega_m(), 1.0);
        let wc = Dual::c(m.omega_c);
        let g = Dual::c(m.g);
        let det = wc - wm;
        let delta = (Dual::c(4.0) * g * g + det * det).sqrt();
        let half = delta * Dual::c(t / 2.0);
        let s = half.sin();
        let xi = Dual::c(4.0) * g * g * s * s / (delta * delta);
        let one = Dual::c(1.0);
        let sh = Dual::c(m.r0.sinh());
        let root_in = (one + Dual::c(4.0) * xi * (one - xi) * sh * sh).sqrt();
        let r_in = Dual::c(0.5) * ((one - xi + xi * Dual::c((2.0 * m.r0).exp())) / root_in).ln();
        let eta = Dual::c((-m.kappa * t).exp());
        let bath = Dual::c(2.0 * m.n_noise + 1.0);
        let sinh_rin = (r_in.exp() - one / r_in.exp()) * Dual::c(0.5);
        let mixed = ((eta * root_in + (one - eta) * bath) * (eta * root_in + (one - eta) * bath)
            + Dual::c(4.0) * eta * (one - eta) * root_in * bath * sinh_rin * sinh_rin)
            .sqrt();
        let r = Dual::c(0.5) * (((one - eta) * bath + eta * root_in * (r_in * Dual::c(2.0)).exp()) / mixed).ln();
        let n_th = (mixed - one) * Dual::c(0.5);
        (r, n_th, -t)
    }

    #[test]
    fn fd_derivatives_match_dual_oracle() {
        let models = [
            RwaModel { kappa: 1e-3, n_noise: 2.0, ..generic() },
            RwaModel { kappa: 1e-2, n_noise: 0.5, r0: 0.7, ..RwaModel::resonant(2.0, 0.05, 0.7) },
            generic(),
        ];
        for m in models {
            for t in [3.0, 12.5, 27.0] {
                let (r, n, dphi) = dual_form(&m, t);
                let dp = fisher::derivatives_fd(m.family(t), m.b, fisher::default_step(m.b)).unwrap();
                let (_, p) = m.evolve_cavity(t).unwrap();
                assert_abs_diff_eq!(p.r, r.0, epsilon = 1e-12);
                assert_abs_diff_eq!(dp.d_r, r.1, epsilon = 1e-7 * r.1.abs().max(1.0));
                assert_abs_diff_eq!(dp.d_nth, n.1, epsilon = 1e-7 * n.1.abs().max(1.0));
                assert_abs_diff_eq!(dp.d_phi, dphi, epsilon = 1e-7 * t);
            }
        }
    }

    #[test]
    fn resonant_fisher_at_swap_time() {
        let m = RwaModel::resonant(2.0, 0.05, 1.0);
        let ts = m.t_star().unwrap();
        let (_, _, f) = m.fisher_at(ts).unwrap();
        let expect = 0.25 * 2f64.sinh().powi(2) * ts * ts;
        assert_abs_diff_eq!(f.f_c, expect, epsilon = 1e-6 * expect);
        assert_abs_diff_eq!(f.f_q, 2.0 * expect, epsilon = 1e-6 * expect);
    }

    fn arb_model() -> impl Strategy<Value = (RwaModel, f64)> {
        (
            1.0..3.0f64,
            -0.5..0.5f64,
            0.0..0.2f64,
            0.0..0.05f64,
            0.0..5.0f64,
            0.0..1.5f64,
            0.0..200.0f64,
        )
            .prop_map(|(wc, det, g, kappa, n, r0, t)| {
                let m = RwaModel {
                    omega_c: wc,
                    b0: wc + det,
                    b: 0.0,
                    b_x: 0.0,
                    b_y: 0.0,
                    g,
                    kappa,
                    n_noise: n,
                    r0,
                };
                (m, t)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn closed_form_matches_matrix_decomposition((m, t) in arb_model()) {
            let (s, p) = m.evolve_cavity(t).unwrap();
            let q = to_standard_form(&s).unwrap();
            prop_assert!((p.r - q.r).abs() < 1e-9, "r {} vs {}", p.r, q.r);
            prop_assert!((p.n_th - q.n_th).abs() < 1e-9 * q.n_th.max(1.0));
            if p.r > 1e-6 {
                prop_assert!(principal_angle(p.phi - q.phi).abs() < 1e-9 / p.r.min(1.0));
            }
        }

        #[test]
        fn xi_stays_in_unit_interval((m, t) in arb_model()) {
            let f = m.factors(t);
            prop_assert!((0.0..=1.0).contains(&f.xi));
            prop_assert!(f.eta > 0.0 && f.eta <= 1.0);
        }

        #[test]
        fn relaxation_is_convex((m, t) in arb_model()) {
            let (s, _) = m.evolve_cavity(t).unwrap();
            let g = s.covariance2().unwrap();
            let gi = m.gamma_in(t);
            let bath = 2.0 * m.n_noise + 1.0;
            for i in 0..2 {
                let (lo, hi) = if gi[(i, i)] < bath { (gi[(i, i)], bath) } else { (bath, gi[(i, i)]) };
                prop_assert!(g[(i, i)] >= lo - 1e-12 && g[(i, i)] <= hi + 1e-12);
            }
        }

        #[test]
        fn noiseless_joint_state_stays_pure((m, t) in arb_model()) {
            let m = RwaModel { kappa: 0.0, ..m };
            let det = m.joint_evolve_noiseless(t).unwrap().covariance().determinant();
            prop_assert!((det - 1.0).abs() < 1e-9);
        }
    }
}
