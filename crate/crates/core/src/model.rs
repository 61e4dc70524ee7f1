//! The balance law in its three coordinate frames.
//!
//! * primitive `(v, u)` with equilibrium `(0, 1)`;
//! * shifted `W = (w1, w2) = (v − θ, u − 1)`, where `θ` is the heat-kernel
//!   profile carrying the mass of `v`;
//! * hatted `Ŵ = (w1, w3) = W − Φ`, `Φ = (0, φ)`, with `φ` half the running
//!   integral of `w1`.
//!
//! In the shifted frame the system reads `W_t + F(W, x, t)_x + G(W, x, t) = 0`
//! and in the hatted frame `Ŵ_t + F̂_x + Ĝ = 0` with `F̂ = F(Ŵ + Φ) − F(Φ)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Radius of the amplitude ball `|w1| + |w2| < rho0` in the shifted frame.
    pub rho0: f64,
    /// Damping source and the nonlocal potential. Off means the homogeneous
    /// conservation law.
    pub source_enabled: bool,
    /// Heat-kernel profile. Off means `θ ≡ 0`.
    pub theta_enabled: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            rho0: 0.25,
            source_enabled: true,
            theta_enabled: true,
        }
    }
}

impl ModelParams {
    pub fn homogeneous() -> Self {
        ModelParams {
            source_enabled: false,
            theta_enabled: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0 < 0.5) {
            return Err(Error::Config(format!(
                "model.rho0 = {} must lie in (0, 1/2)",
                self.rho0
            )));
        }
        Ok(())
    }

    /// Amplitude guard on a shifted-frame state.
    pub fn check_ball(&self, w: Vec2) -> Result<()> {
        let r = w[0].abs() + w[1].abs();
        if r < self.rho0 {
            Ok(())
        } else {
            Err(Error::AmplitudeGuard {
                w1: w[0],
                w2: w[1],
                rho0: self.rho0,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub v: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedState {
    pub w1: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatState {
    pub w1: f64,
    pub w3: f64,
}

impl PrimitiveState {
    pub fn to_shifted(self, theta: f64) -> ShiftedState {
        ShiftedState {
            w1: self.v - theta,
            w2: self.u - 1.0,
        }
    }
}

impl ShiftedState {
    pub fn to_primitive(self, theta: f64) -> PrimitiveState {
        PrimitiveState {
            v: self.w1 + theta,
            u: 1.0 + self.w2,
        }
    }

    pub fn to_hat(self, phi: f64) -> HatState {
        HatState {
            w1: self.w1,
            w3: self.w2 - phi,
        }
    }

    pub fn as_vec(self) -> Vec2 {
        [self.w1, self.w2]
    }
}

impl HatState {
    pub fn to_shifted(self, phi: f64) -> ShiftedState {
        ShiftedState {
            w1: self.w1,
            w2: self.w3 + phi,
        }
    }

    pub fn as_vec(self) -> Vec2 {
        [self.w1, self.w3]
    }
}

impl From<Vec2> for ShiftedState {
    fn from(w: Vec2) -> Self {
        ShiftedState { w1: w[0], w2: w[1] }
    }
}

impl From<Vec2> for HatState {
    fn from(w: Vec2) -> Self {
        HatState { w1: w[0], w3: w[1] }
    }
}

/// Values of `θ` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThetaSample {
    pub theta: f64,
    pub theta_x: f64,
    pub theta_xx: f64,
    pub theta_xxx: f64,
    pub theta_t: f64,
}

/// Heat kernel `θ(x, t) = M (4π(t+1))^{-1/2} exp(−x² / (4(t+1)))`.
///
/// All derivatives are closed-form; `θ_t = θ_xx` holds identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticProfile {
    pub mass: f64,
}

impl AsymptoticProfile {
    pub fn new(mass: f64) -> Self {
        AsymptoticProfile { mass }
    }

    pub fn zero() -> Self {
        AsymptoticProfile { mass: 0.0 }
    }

    #[inline]
    pub fn theta(&self, x: f64, t: f64) -> f64 {
        if self.mass == 0.0 {
            return 0.0;
        }
        let s = t + 1.0;
        self.mass / (4.0 * PI * s).sqrt() * (-x * x / (4.0 * s)).exp()
    }

    #[inline]
    pub fn theta_x(&self, x: f64, t: f64) -> f64 {
        -x / (2.0 * (t + 1.0)) * self.theta(x, t)
    }

    #[inline]
    pub fn theta_xx(&self, x: f64, t: f64) -> f64 {
        let s = t + 1.0;
        (x * x / (4.0 * s * s) - 1.0 / (2.0 * s)) * self.theta(x, t)
    }

    #[inline]
    pub fn theta_xxx(&self, x: f64, t: f64) -> f64 {
        let s = t + 1.0;
        (-x * x * x / (8.0 * s * s * s) + 3.0 * x / (4.0 * s * s)) * self.theta(x, t)
    }

    /// `θ_t`, evaluated from the time derivative of the closed form rather
    /// than through the heat equation, so the identity `θ_t = θ_xx` is a check.
    #[inline]
    pub fn theta_t(&self, x: f64, t: f64) -> f64 {
        let s = t + 1.0;
        (-1.0 / (2.0 * s) + x * x / (4.0 * s * s)) * self.theta(x, t)
    }

    pub fn sample(&self, x: f64, t: f64) -> ThetaSample {
        let s = t + 1.0;
        let th = self.theta(x, t);
        ThetaSample {
            theta: th,
            theta_x: -x / (2.0 * s) * th,
            theta_xx: (x * x / (4.0 * s * s) - 1.0 / (2.0 * s)) * th,
            theta_xxx: (-x * x * x / (8.0 * s * s * s) + 3.0 * x / (4.0 * s * s)) * th,
            theta_t: (-1.0 / (2.0 * s) + x * x / (4.0 * s * s)) * th,
        }
    }

    /// Analytic integral of `θ(·, t)` over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64, t: f64) -> f64 {
        let z = 2.0 * (t + 1.0).sqrt();
        0.5 * self.mass * (statrs::function::erf::erf(b / z) - statrs::function::erf::erf(a / z))
    }

    /// Mass of `θ(·, t)` outside `[-x_max, x_max]`.
    pub fn tail_mass(&self, x_max: f64, t: f64) -> f64 {
        self.mass * statrs::function::erf::erfc(x_max / (2.0 * (t + 1.0).sqrt()))
    }
}

/// Flux `F(W) = (w2, (w1 + θ)(1 + w2))`.
#[inline]
pub fn flux_w(w: Vec2, theta: f64) -> Vec2 {
    [w[1], (w[0] + theta) * (1.0 + w[1])]
}

/// Source `G(W) = (θ_t, (1 + w2) w2)`.
#[inline]
pub fn source_g(w: Vec2, theta_t: f64) -> Vec2 {
    [theta_t, (1.0 + w[1]) * w[1]]
}

/// Below this value of `1 + w2` the flux Jacobian is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-8;

/// `F_W` and its inverse.
pub fn jacobian_and_inverse(w: Vec2, theta: f64) -> Result<(Mat2, Mat2)> {
    let one_w2 = 1.0 + w[1];
    if one_w2 <= SINGULAR_TOL {
        return Err(Error::Singular(one_w2));
    }
    let a = w[0] + theta;
    let jac = [[0.0, 1.0], [one_w2, a]];
    let inv = [[-a / one_w2, 1.0 / one_w2], [1.0, 0.0]];
    Ok((jac, inv))
}

/// Eigenvalues `(λ−, λ+)` of `F_W`.
#[inline]
pub fn eigenvalues(w: Vec2, theta: f64) -> Result<(f64, f64)> {
    let a = w[0] + theta;
    let disc = a * a + 4.0 * (1.0 + w[1]);
    if disc <= 0.0 {
        return Err(Error::HyperbolicityLoss(disc));
    }
    let root = disc.sqrt();
    Ok((0.5 * (a - root), 0.5 * (a + root)))
}

/// Right eigenvectors `(1, λ−)` and `(1, λ+)` as columns.
pub fn eigenvector_matrix(w: Vec2, theta: f64) -> Result<Mat2> {
    let (lm, lp) = eigenvalues(w, theta)?;
    Ok([[1.0, 1.0], [lm, lp]])
}

/// `R^{-1}`.
pub fn eigenvector_matrix_inverse(w: Vec2, theta: f64) -> Result<Mat2> {
    let (lm, lp) = eigenvalues(w, theta)?;
    let d = lp - lm;
    Ok([[lp / d, -1.0 / d], [-lm / d, 1.0 / d]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyPair {
    pub eta: f64,
    pub flux: f64,
    pub dissipation: f64,
}

/// Convex entropy, its flux and the dissipation of the damping, in the
/// variables `(v, ũ)` with `ũ = u − 1`.
pub fn entropy_pair(v: f64, ut: f64) -> Result<EntropyPair> {
    let one = 1.0 + ut;
    if one <= 0.0 {
        return Err(Error::LogDomain(one));
    }
    let l = one * one.ln();
    Ok(EntropyPair {
        eta: 0.5 * v * v + l - ut,
        flux: v * l,
        dissipation: ut * l,
    })
}

/// Hatted flux `F̂(Ŵ, Φ) = F(Ŵ + Φ) − F(Φ)` with `θ` frozen.
#[inline]
pub fn hat_flux_unchecked(w_hat: Vec2, phi: Vec2, theta: f64) -> Vec2 {
    let w = [w_hat[0] + phi[0], w_hat[1] + phi[1]];
    let f = flux_w(w, theta);
    let g = flux_w(phi, theta);
    [f[0] - g[0], f[1] - g[1]]
}

/// [`hat_flux_unchecked`] with the amplitude guard on `Ŵ + Φ` and `Φ`.
pub fn hat_flux(w_hat: Vec2, phi: Vec2, theta: f64, params: &ModelParams) -> Result<Vec2> {
    params.check_ball([w_hat[0] + phi[0], w_hat[1] + phi[1]])?;
    params.check_ball(phi)?;
    Ok(hat_flux_unchecked(w_hat, phi, theta))
}

/// Hatted source `Ĝ`: the damping redistributed between both equations.
#[inline]
pub fn hat_source(w_hat: Vec2, phi: f64, th: &ThetaSample) -> Vec2 {
    let (w1, w3) = (w_hat[0], w_hat[1]);
    let w2 = w3 + phi;
    [
        0.5 * w1 + th.theta_xx,
        0.5 * w3 + 0.5 * th.theta * w1 + 0.5 * phi + th.theta_x * (0.5 + phi) + w2 * w2,
    ]
}

/// `v = s_x / s` by centered differences (one-sided second order at the ends).
pub fn inverse_hopf_cole(s: &[f64], h: f64) -> Result<Vec<f64>> {
    if let Some((index, &value)) = s.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositive { index, value });
    }
    let n = s.len();
    if n < 3 {
        return Err(Error::Config(
            "inverse Hopf-Cole needs at least three samples".into(),
        ));
    }
    let mut v = Vec::with_capacity(n);
    v.push((-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h) / s[0]);
    for i in 1..n - 1 {
        v.push((s[i + 1] - s[i - 1]) / (2.0 * h) / s[i]);
    }
    v.push((3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * h) / s[n - 1]);
    Ok(v)
}

/// Growth ratio and the change of variables that maps the dimensional
/// chemotaxis system onto the unit-coefficient one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaling {
    pub r: f64,
    pub time: f64,
    pub space: f64,
    pub v: f64,
    pub u: f64,
    /// Diffusion is invariant under the parabolic scaling.
    pub diffusion: f64,
}

pub fn rescale_parameters(chi: f64, mu: f64, k: f64, a: f64, d: f64) -> Result<Rescaling> {
    if !(chi * mu > 0.0) {
        return Err(Error::Regime(format!("chi * mu = {} must be positive", chi * mu)));
    }
    if !(k > 0.0) {
        return Err(Error::Regime(format!("carrying capacity K = {k} must be positive")));
    }
    if !(a > 0.0) {
        return Err(Error::Regime(format!("growth rate a = {a} must be positive")));
    }
    let cmk = chi * mu * k;
    Ok(Rescaling {
        r: a / cmk,
        time: cmk,
        space: cmk.sqrt(),
        v: chi.signum() * (chi / (mu * k)).sqrt(),
        u: 1.0 / k,
        diffusion: d,
    })
}
