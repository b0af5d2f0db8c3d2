//! One- and two-mode Gaussian states.
//!
//! Quadratures are ordered `X₁, P₁[, X₂, P₂]` with `X = (a + a†)/√2` and
//! `P = i(a† − a)/√2`. The covariance matrix is normalised so that the vacuum
//! is the identity: `γ_jk = ⟨{Δx_j, Δx_k}⟩`.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the cavity mode in a two-mode state.
pub const CAVITY: usize = 0;
/// Index of the magnon mode in a two-mode state.
pub const MAGNON: usize = 1;

const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest admissible symplectic eigenvalue; values in `[1 - tol, 1)` are
/// treated as rounding noise and clamped.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// A clamp larger than this is reported as a warning.
pub const CLAMP_WARN: f64 = 1e-12;
const DEGENERATE_SINH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    d: DVector<f64>,
    gamma: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state after checking shape, symmetry and physicality.
    pub fn new(d: DVector<f64>, gamma: DMatrix<f64>) -> Result<Self> {
        let dim = d.len();
        if dim != 2 && dim != 4 {
            return Err(Error::WrongModeCount {
                expected: 2,
                actual: dim / 2,
            });
        }
        if gamma.nrows() != dim || gamma.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "covariance is {}x{}, displacement has length {dim}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        if d.iter().chain(gamma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonPhysicalState("non-finite moment".into()));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (gamma[(i, j)], gamma[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NonPhysicalState(format!(
                        "covariance not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        let state = Self {
            n_modes: dim / 2,
            d,
            gamma,
        };
        let nu_min = state
            .symplectic_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if !(nu_min >= 1.0 - PHYSICALITY_TOL) {
            return Err(Error::NonPhysicalState(format!(
                "smallest symplectic eigenvalue {nu_min} < 1"
            )));
        }
        Ok(state)
    }

    pub fn single_mode(d: [f64; 2], gamma: Matrix2<f64>) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(&d),
            DMatrix::from_fn(2, 2, |i, j| gamma[(i, j)]),
        )
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes != 1 && n_modes != 2 {
            return Err(Error::WrongModeCount {
                expected: 1,
                actual: n_modes,
            });
        }
        Ok(Self {
            n_modes,
            d: DVector::zeros(2 * n_modes),
            gamma: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Product state `first ⊗ second` of two single-mode states.
    pub fn product(first: &Self, second: &Self) -> Result<Self> {
        first.expect_modes(1)?;
        second.expect_modes(1)?;
        let mut d = DVector::zeros(4);
        let mut gamma = DMatrix::zeros(4, 4);
        d.rows_mut(0, 2).copy_from(&first.d);
        d.rows_mut(2, 2).copy_from(&second.d);
        gamma.view_mut((0, 0), (2, 2)).copy_from(&first.gamma);
        gamma.view_mut((2, 2), (2, 2)).copy_from(&second.gamma);
        Self::new(d, gamma)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Covariance of a single-mode state as a fixed-size matrix.
    pub fn covariance2(&self) -> Result<Matrix2<f64>> {
        self.expect_modes(1)?;
        Ok(Matrix2::from_fn(|i, j| self.gamma[(i, j)]))
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let g = &self.gamma;
        match self.n_modes {
            1 => vec![(g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).max(0.0).sqrt()],
            _ => {
                // ν² are the eigenvalues of KᵀK with K = γ^{1/2} Ω γ^{1/2}; the
                // symmetric route stays accurate for nearly pure states, where
                // the invariant-based quadratic loses half the digits.
                let eig = g.clone().symmetric_eigen();
                if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
                    return vec![0.0, 0.0];
                }
                let root = &eig.eigenvectors
                    * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
                    * eig.eigenvectors.transpose();
                let mut omega = DMatrix::zeros(4, 4);
                for k in [0, 2] {
                    omega[(k, k + 1)] = 1.0;
                    omega[(k + 1, k)] = -1.0;
                }
                let k = &root * omega * &root;
                let mut nu2: Vec<f64> = (k.transpose() * &k).symmetric_eigen().eigenvalues.iter().copied().collect();
                nu2.sort_by(f64::total_cmp);
                vec![nu2[0].max(0.0).sqrt(), nu2[3].max(0.0).sqrt()]
            }
        }
    }

    /// Partial trace: keeps the displacement pair and 2×2 covariance block of
    /// mode `keep`.
    pub fn reduce(&self, keep: usize) -> Result<Self> {
        self.expect_modes(2)?;
        if keep > 1 {
            return Err(Error::InvalidParameter(format!(
                "mode index {keep} out of range for a two-mode state"
            )));
        }
        let k = 2 * keep;
        Self::new(
            self.d.rows(k, 2).into_owned(),
            self.gamma.view((k, k), (2, 2)).into_owned(),
        )
    }

    fn expect_modes(&self, n: usize) -> Result<()> {
        if self.n_modes != n {
            return Err(Error::WrongModeCount {
                expected: n,
                actual: self.n_modes,
            });
        }
        Ok(())
    }
}

/// Displaced squeezed thermal parameters `(α, r, φ, n_th)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardForm {
    pub alpha: Complex64,
    pub r: f64,
    pub phi: f64,
    pub n_th: f64,
}

impl StandardForm {
    pub fn new(alpha: Complex64, r: f64, phi: f64, n_th: f64) -> Result<Self> {
        let p = Self { alpha, r, phi, n_th };
        p.validate()?;
        Ok(p)
    }

    pub fn vacuum() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            r: 0.0,
            phi: 0.0,
            n_th: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha.re, self.alpha.im, self.r, self.phi, self.n_th]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite standard-form parameter".into()));
        }
        if self.r < 0.0 {
            return Err(Error::InvalidParameter(format!("squeezing r = {} < 0", self.r)));
        }
        if self.n_th < 0.0 {
            return Err(Error::InvalidParameter(format!("n_th = {} < 0", self.n_th)));
        }
        Ok(())
    }
}

/// Result of [`to_standard_form_checked`]: the parameters plus the amount by
/// which `√det γ` fell short of 1 and had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conversion {
    pub form: StandardForm,
    pub clamp: f64,
}

impl Conversion {
    pub fn clamped(&self) -> bool {
        self.clamp > CLAMP_WARN
    }
}

pub fn to_standard_form(state: &GaussianState) -> Result<StandardForm> {
    to_standard_form_checked(state).map(|c| c.form)
}

/// Standard-form decomposition of a single-mode state.
///
/// `φ` is taken as `atan2(−2γ₁₂, γ₂₂ − γ₁₁)`, the branch that makes
/// [`from_standard_form`] an exact inverse, and is set to 0 when the state is
/// isotropic.
pub fn to_standard_form_checked(state: &GaussianState) -> Result<Conversion> {
    let g = state.covariance2()?;
    let (g11, g22, g12) = (g[(0, 0)], g[(1, 1)], g[(0, 1)]);
    let det = g11 * g22 - g12 * g12;
    let sqrt_det = det.max(0.0).sqrt();
    if !(sqrt_det >= 1.0 - PHYSICALITY_TOL) {
        return Err(Error::NonPhysicalState(format!("det γ = {det} < 1")));
    }
    let clamp = (1.0 - sqrt_det).max(0.0);
    let n_th = ((sqrt_det - 1.0) / 2.0).max(0.0);

    // sinh 2r = √(Tr² − 4 det) / (2√det), written without cancellation.
    let aniso = (g11 - g22).hypot(2.0 * g12);
    let sinh2r = aniso / (2.0 * sqrt_det);
    let r = 0.5 * sinh2r.asinh();
    let phi = if sinh2r < DEGENERATE_SINH {
        0.0
    } else {
        principal_angle((-2.0 * g12).atan2(g22 - g11))
    };

    let d = state.displacement();
    let alpha = Complex64::new(d[0], d[1]) / std::f64::consts::SQRT_2;
    Ok(Conversion {
        form: StandardForm { alpha, r, phi, n_th },
        clamp,
    })
}

pub fn from_standard_form(p: &StandardForm) -> Result<GaussianState> {
    p.validate()?;
    let scale = 2.0 * p.n_th + 1.0;
    let (c2, s2) = ((2.0 * p.r).cosh(), (2.0 * p.r).sinh());
    let (sin, cos) = p.phi.sin_cos();
    let gamma = Matrix2::new(
        scale * (c2 - s2 * cos),
        -scale * s2 * sin,
        -scale * s2 * sin,
        scale * (c2 + s2 * cos),
    );
    let d = [
        std::f64::consts::SQRT_2 * p.alpha.re,
        std::f64::consts::SQRT_2 * p.alpha.im,
    ];
    GaussianState::single_mode(d, gamma)
}

/// Mean excitation number `|α|² + n_th + (2n_th + 1) sinh² r`.
pub fn photon_number(p: &StandardForm) -> f64 {
    p.alpha.norm_sqr() + p.n_th + (2.0 * p.n_th + 1.0) * p.r.sinh().powi(2)
}

/// Von Neumann entropy (bits) of a single-mode Gaussian state with thermal
/// occupation `n_th`.
pub fn entanglement_entropy(n_th: f64) -> Result<f64> {
    if !n_th.is_finite() || n_th < -PHYSICALITY_TOL {
        return Err(Error::InvalidParameter(format!("n_th = {n_th} < 0")));
    }
    let n = n_th.max(0.0);
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok((n + 1.0).log2() + n * ((n + 1.0) / n).log2())
}

/// Maps an angle onto `(−π, π]`.
pub fn principal_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
