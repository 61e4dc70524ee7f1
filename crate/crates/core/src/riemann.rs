//! Exact Riemann solver for the frozen-coefficient system
//! `U_t + F(U, θ)_x = 0`, with `θ` a fixed scalar.
//!
//! States live in the shifted frame. Both characteristic families are
//! genuinely nonlinear, so every admissible fan is a minus-wave followed by
//! a plus-wave, each a Lax shock or a centered rarefaction.
//!
//! A wave's amplitude is the jump of the first component across it. With
//! `r± = (1, λ±)` the rarefaction curves are integrated in that parameter and
//! the Hugoniot loci are explicit in it: for a jump `A` in the first
//! component from `(a0, b0)` (with `a = w1 + θ`), the shock speed solves
//! `s² − s(a0 + A) − (1 + b0) = 0` and the second component jumps by `sA`.
//! Amplitudes are positive for rarefactions and negative for shocks.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::model;

/// Fixed RK4 step, in units of amplitude, along rarefaction curves.
pub const RAREFACTION_STEP: f64 = 1e-3;
/// Newton tolerance on `|P(U_L, γ) − U_R|∞`.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

/// Flux coefficient frozen at one mesh point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrozenContext {
    pub theta: f64,
}

impl FrozenContext {
    pub fn new(theta: f64) -> Self {
        assert!(theta.is_finite(), "frozen θ must be finite");
        FrozenContext { theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Minus,
    Plus,
}

impl Family {
    pub fn index(self) -> usize {
        match self {
            Family::Minus => 0,
            Family::Plus => 1,
        }
    }
}

/// Characteristic speed of one family, `NaN` outside the hyperbolic region.
#[inline]
pub fn char_speed(family: Family, u: Vec2, theta: f64) -> f64 {
    let a = u[0] + theta;
    let root = (a * a + 4.0 * (1.0 + u[1])).sqrt();
    match family {
        Family::Minus => 0.5 * (a - root),
        Family::Plus => 0.5 * (a + root),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementaryWave {
    pub family: Family,
    pub amplitude: f64,
    pub left: Vec2,
    pub right: Vec2,
    /// Lower and upper edge of the wave in similarity coordinates; equal for
    /// a shock (or a null wave).
    pub speed_lo: f64,
    pub speed_hi: f64,
}

impl ElementaryWave {
    pub fn is_shock(&self) -> bool {
        self.amplitude < 0.0
    }

    pub fn is_rarefaction(&self) -> bool {
        self.amplitude > 0.0
    }

    pub fn strength(&self) -> f64 {
        self.amplitude.abs()
    }

    /// Variation of the state across the wave in the 1-norm. Both components
    /// are monotone along a wave curve here, so this is `|right − left|₁`.
    pub fn variation(&self) -> f64 {
        linalg::norm1(linalg::sub(self.right, self.left))
    }

    /// Rankine–Hugoniot residual `|s[U] − [F]|∞` at the shock speed.
    pub fn rh_residual(&self, theta: f64) -> f64 {
        let s = self.speed_lo;
        let du = linalg::sub(self.right, self.left);
        let df = linalg::sub(
            model::flux_w(self.right, theta),
            model::flux_w(self.left, theta),
        );
        linalg::norm_inf([s * du[0] - df[0], s * du[1] - df[1]])
    }
}

fn vacuum_check(u: Vec2, theta: f64) -> Result<()> {
    let a = u[0] + theta;
    let disc = a * a + 4.0 * (1.0 + u[1]);
    if !(1.0 + u[1] > model::SINGULAR_TOL) {
        return Err(Error::Singular(1.0 + u[1]));
    }
    if !(disc > 0.0) {
        return Err(Error::HyperbolicityLoss(disc));
    }
    Ok(())
}

/// Integral curve of `r = (1, λ)` from `u0`, advanced by `sigma` in the first
/// component with fixed-step RK4.
fn integral_curve(family: Family, u0: Vec2, sigma: f64, theta: f64) -> Vec2 {
    if sigma == 0.0 {
        return u0;
    }
    let n = (sigma.abs() / RAREFACTION_STEP).ceil().max(1.0);
    let ds = sigma / n;
    let (a0, mut b) = (u0[0], u0[1]);
    for i in 0..n as usize {
        let a = a0 + i as f64 * ds;
        let k1 = char_speed(family, [a, b], theta);
        let k2 = char_speed(family, [a + 0.5 * ds, b + 0.5 * ds * k1], theta);
        let k3 = char_speed(family, [a + 0.5 * ds, b + 0.5 * ds * k2], theta);
        let k4 = char_speed(family, [a + ds, b + ds * k3], theta);
        b += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    [a0 + sigma, b]
}

/// Right state reached from `left` by a wave of the given family and
/// amplitude, and the wave itself.
pub fn forward_wave(family: Family, left: Vec2, sigma: f64, theta: f64) -> Result<ElementaryWave> {
    vacuum_check(left, theta)?;
    let lam_l = char_speed(family, left, theta);
    let wave = if sigma < 0.0 {
        let s = char_speed(family, [left[0] + sigma, left[1]], theta);
        let right = [left[0] + sigma, left[1] + s * sigma];
        ElementaryWave {
            family,
            amplitude: sigma,
            left,
            right,
            speed_lo: s,
            speed_hi: s,
        }
    } else {
        let right = integral_curve(family, left, sigma, theta);
        ElementaryWave {
            family,
            amplitude: sigma,
            left,
            right,
            speed_lo: lam_l,
            speed_hi: char_speed(family, right, theta),
        }
    };
    vacuum_check(wave.right, theta)?;
    Ok(wave)
}

/// Left state from which a wave of the given family and amplitude reaches
/// `right`.
pub fn backward_wave(family: Family, right: Vec2, sigma: f64, theta: f64) -> Result<ElementaryWave> {
    vacuum_check(right, theta)?;
    let wave = if sigma < 0.0 {
        let a_l = right[0] - sigma;
        let s = char_speed(family, [a_l, right[1]], theta);
        let left = [a_l, right[1] - s * sigma];
        ElementaryWave {
            family,
            amplitude: sigma,
            left,
            right,
            speed_lo: s,
            speed_hi: s,
        }
    } else {
        let left = integral_curve(family, right, -sigma, theta);
        ElementaryWave {
            family,
            amplitude: sigma,
            left,
            right,
            speed_lo: char_speed(family, left, theta),
            speed_hi: char_speed(family, right, theta),
        }
    };
    vacuum_check(wave.left, theta)?;
    Ok(wave)
}

/// Forward wave curve `P(U_L, γ)`: the right end-state of the fan.
pub fn forward_curve(u_l: Vec2, gamma: Vec2, ctx: &FrozenContext) -> Result<Vec2> {
    let m = forward_wave(Family::Minus, u_l, gamma[0], ctx.theta)?;
    let p = forward_wave(Family::Plus, m.right, gamma[1], ctx.theta)?;
    Ok(p.right)
}

/// Backward wave curve `Q(U_R, γ)`: the left end-state of the fan.
pub fn backward_curve(u_r: Vec2, gamma: Vec2, ctx: &FrozenContext) -> Result<Vec2> {
    let p = backward_wave(Family::Plus, u_r, gamma[1], ctx.theta)?;
    let m = backward_wave(Family::Minus, p.left, gamma[0], ctx.theta)?;
    Ok(m.left)
}

fn residual(u_l: Vec2, u_r: Vec2, gamma: Vec2, ctx: &FrozenContext) -> Result<Vec2> {
    Ok(linalg::sub(forward_curve(u_l, gamma, ctx)?, u_r))
}

fn fd_jacobian(u_l: Vec2, gamma: Vec2, g0: Vec2, u_r: Vec2, ctx: &FrozenContext) -> Result<Mat2> {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let eps = 1e-7 * (1.0 + gamma[j].abs());
        let mut gp = gamma;
        gp[j] += eps;
        let g = residual(u_l, u_r, gp, ctx)?;
        for i in 0..2 {
            jac[i][j] = (g[i] - g0[i]) / eps;
        }
    }
    Ok(jac)
}

/// Amplitude vector `Ω(U_L, U_R)` of the fan joining two states.
///
/// Newton's method on `P(U_L, γ) = U_R` from the linearised guess
/// `R⁻¹(U_L)(U_R − U_L)`. The first iterations reuse `R(U_L) = P_γ(U_L, 0)`
/// as a chord Jacobian; if that stalls a finite-difference Jacobian takes
/// over, and a bracketed scalar solve along the minus curve is the last
/// resort.
pub fn amplitude(u_l: Vec2, u_r: Vec2, ctx: &FrozenContext) -> Result<Vec2> {
    if u_l == u_r {
        return Ok([0.0, 0.0]);
    }
    let tol = NEWTON_TOL * (1.0f64).max(linalg::norm_inf(u_r));
    let rinv = model::eigenvector_matrix_inverse(u_l, ctx.theta)?;
    let mut gamma = linalg::mat_vec(&rinv, linalg::sub(u_r, u_l));
    let mut g = residual(u_l, u_r, gamma, ctx)?;
    let mut res = linalg::norm_inf(g);
    let mut chord = true;
    for _ in 0..NEWTON_MAX_ITER {
        if res <= tol {
            return Ok(gamma);
        }
        let step = if chord {
            linalg::mat_vec(&rinv, g)
        } else {
            let jac = fd_jacobian(u_l, gamma, g, u_r, ctx)?;
            match linalg::solve(&jac, g) {
                Some(s) => s,
                None => break,
            }
        };
        // Damped update.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = [gamma[0] - lambda * step[0], gamma[1] - lambda * step[1]];
            if let Ok(gt) = residual(u_l, u_r, trial, ctx) {
                let rt = linalg::norm_inf(gt);
                if rt < res || rt <= tol {
                    if chord && rt > 0.1 * res {
                        chord = false;
                    }
                    gamma = trial;
                    g = gt;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if chord {
                chord = false;
                continue;
            }
            break;
        }
    }
    if res <= tol {
        return Ok(gamma);
    }
    amplitude_bisection(u_l, u_r, ctx).map_err(|_| Error::NewtonFailure {
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}

/// Scalar fallback. Since amplitudes are jumps of the first component,
/// `γ+ = a_R − a_L − γ−`, and only the second component has to match.
fn amplitude_bisection(u_l: Vec2, u_r: Vec2, ctx: &FrozenContext) -> Result<Vec2> {
    let total = u_r[0] - u_l[0];
    let mismatch = |gm: f64| -> Result<f64> {
        let u = forward_curve(u_l, [gm, total - gm], ctx)?;
        Ok(u[1] - u_r[1])
    };
    // f is decreasing in γ− (slope ≈ λ− − λ+ < 0); widen until bracketed.
    let mut width = 2.0 * linalg::norm1(linalg::sub(u_r, u_l)) + 1e-12;
    let (mut lo, mut hi);
    let mut tries = 0;
    loop {
        lo = -width;
        hi = width;
        let (flo, fhi) = (mismatch(lo)?, mismatch(hi)?);
        if flo >= 0.0 && fhi <= 0.0 {
            break;
        }
        width *= 2.0;
        tries += 1;
        if tries > 20 {
            return Err(Error::NewtonFailure {
                iterations: 0,
                residual: f64::NAN,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = mismatch(mid)?;
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let gm = 0.5 * (lo + hi);
    Ok([gm, total - gm])
}

/// `H(U, Z) = Ω(U, U + Z)`.
pub fn h_map(u: Vec2, z: Vec2, ctx: &FrozenContext) -> Result<Vec2> {
    amplitude(u, linalg::add(u, z), ctx)
}

/// Self-similar solution of one Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFan {
    pub gamma: Vec2,
    pub waves: [ElementaryWave; 2],
    pub middle: Vec2,
    pub theta: f64,
}

impl WaveFan {
    pub fn constant(u: Vec2, theta: f64) -> Self {
        let lm = char_speed(Family::Minus, u, theta);
        let lp = char_speed(Family::Plus, u, theta);
        let null = |family, s| ElementaryWave {
            family,
            amplitude: 0.0,
            left: u,
            right: u,
            speed_lo: s,
            speed_hi: s,
        };
        WaveFan {
            gamma: [0.0, 0.0],
            waves: [null(Family::Minus, lm), null(Family::Plus, lp)],
            middle: u,
            theta,
        }
    }

    pub fn left(&self) -> Vec2 {
        self.waves[0].left
    }

    pub fn right(&self) -> Vec2 {
        self.waves[1].right
    }

    pub fn is_constant(&self) -> bool {
        self.gamma == [0.0, 0.0]
    }

    /// Largest absolute speed of a nontrivial wave; 0 for a constant fan.
    pub fn max_abs_speed(&self) -> f64 {
        self.waves
            .iter()
            .filter(|w| w.amplitude != 0.0)
            .map(|w| w.speed_lo.abs().max(w.speed_hi.abs()))
            .fold(0.0, f64::max)
    }

    /// Sum of wave strengths `|γ−| + |γ+|`.
    pub fn strength(&self) -> f64 {
        self.gamma[0].abs() + self.gamma[1].abs()
    }

    /// State variation across the fan in the 1-norm.
    pub fn variation(&self) -> f64 {
        self.waves[0].variation() + self.waves[1].variation()
    }

    /// Amplitudes of the part of the fan lying strictly right of `xi`.
    pub fn amplitudes_right_of(&self, xi: f64) -> Vec2 {
        let mut out = [0.0; 2];
        for (i, w) in self.waves.iter().enumerate() {
            out[i] = if xi < w.speed_lo {
                w.amplitude
            } else if xi >= w.speed_hi {
                0.0
            } else {
                // Inside a rarefaction: amplitude is additive in the first component.
                w.right[0] - sample_wave(w, xi, self.theta)[0]
            };
        }
        out
    }

    /// Amplitudes of the part of the fan lying left of `xi`.
    pub fn amplitudes_left_of(&self, xi: f64) -> Vec2 {
        let r = self.amplitudes_right_of(xi);
        [self.gamma[0] - r[0], self.gamma[1] - r[1]]
    }
}

/// Solve the Riemann problem with data `U_L` (x < 0) and `U_R` (x > 0).
pub fn solve_riemann(u_l: Vec2, u_r: Vec2, ctx: &FrozenContext) -> Result<WaveFan> {
    if u_l == u_r {
        vacuum_check(u_l, ctx.theta)?;
        return Ok(WaveFan::constant(u_l, ctx.theta));
    }
    let gamma = amplitude(u_l, u_r, ctx)?;
    let minus = forward_wave(Family::Minus, u_l, gamma[0], ctx.theta)?;
    let mut plus = forward_wave(Family::Plus, minus.right, gamma[1], ctx.theta)?;
    // Pin the end state exactly; the Newton residual is below 1e-12.
    plus.right = u_r;
    if plus.amplitude >= 0.0 {
        plus.speed_hi = char_speed(Family::Plus, u_r, ctx.theta);
    }
    Ok(WaveFan {
        gamma,
        waves: [minus, plus],
        middle: minus.right,
        theta: ctx.theta,
    })
}

/// State inside one wave at similarity coordinate `xi`.
fn sample_wave(w: &ElementaryWave, xi: f64, theta: f64) -> Vec2 {
    if xi < w.speed_lo {
        return w.left;
    }
    if xi >= w.speed_hi || !w.is_rarefaction() {
        return w.right;
    }
    // Find s in (0, amplitude) with λ(curve(s)) = xi. λ is increasing in s
    // with derivative 1 ± a/√disc, so safeguarded Newton converges fast.
    let (mut lo, mut hi) = (0.0, w.amplitude);
    let mut s = w.amplitude * (xi - w.speed_lo) / (w.speed_hi - w.speed_lo);
    for _ in 0..60 {
        let u = integral_curve(w.family, w.left, s, theta);
        let f = char_speed(w.family, u, theta) - xi;
        if f.abs() <= 1e-14 {
            return u;
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let a = u[0] + theta;
        let root = (a * a + 4.0 * (1.0 + u[1])).sqrt();
        let slope = match w.family {
            Family::Minus => 1.0 - a / root,
            Family::Plus => 1.0 + a / root,
        };
        let mut next = s - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() < 1e-16 {
            s = next;
            break;
        }
        s = next;
    }
    integral_curve(w.family, w.left, s, theta)
}

/// Fan state at `xi = x / t`.
pub fn sample_fan(fan: &WaveFan, xi: f64) -> Vec2 {
    if fan.is_constant() {
        return fan.left();
    }
    let [m, p] = &fan.waves;
    if xi < m.speed_hi || (m.is_rarefaction() && xi < m.speed_hi) {
        return sample_wave(m, xi, fan.theta);
    }
    if xi < p.speed_lo {
        return fan.middle;
    }
    sample_wave(p, xi, fan.theta)
}
