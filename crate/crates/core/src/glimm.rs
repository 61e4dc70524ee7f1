//! Random-choice scheme with operator splitting.
//!
//! The unknown is the hatted field `Ŵ = W − Φ` with `Φ = (0, φ)` and
//! `φ(x) = ½∫_{−X}^x w1`. At strip `m` the piecewise-constant field lives on
//! cells centred at the points `k` with `k + m` odd, each cell covering
//! `((k−1)h, (k+1)h)`. Riemann problems sit at the points with `k + m` even
//! and are sampled at `y = (k + ζ_{m+1})h` to give the cells of strip `m+1`.
//!
//! Outside `[−X, X]` the field is continued by copying the nearest interior
//! cell, so the outermost Riemann problems are trivial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsConfig, DiagnosticsRecord, Tracker};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::model::{self, AsymptoticProfile, ModelParams, ThetaSample};
use crate::riemann::{self, FrozenContext, WaveFan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub h: f64,
    pub lambda_cfl: f64,
    /// Half-width `X` of the computational domain.
    pub x_half: f64,
    pub t_final: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            h: 0.01,
            lambda_cfl: 2.0,
            x_half: 60.0,
            t_final: 200.0,
        }
    }
}

impl MeshConfig {
    pub fn tau(&self) -> f64 {
        self.h / self.lambda_cfl
    }

    /// `N` with `X = N h`.
    pub fn n(&self) -> i64 {
        (self.x_half / self.h).round() as i64
    }

    /// Number of strips needed to reach `t_final`.
    pub fn n_strips(&self) -> usize {
        (self.t_final / self.tau() - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("mesh.h = {} must be positive", self.h)));
        }
        if !(self.lambda_cfl >= 2.0) {
            return Err(Error::Config(format!(
                "mesh.lambda = {} must be at least 2",
                self.lambda_cfl
            )));
        }
        let n = self.x_half / self.h;
        if !(n >= 4.0) || (n - n.round()).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::Config(format!(
                "mesh.X = {} must be a multiple of mesh.h = {} with at least 4 cells",
                self.x_half, self.h
            )));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!("mesh.T = {} must be >= 0", self.t_final)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SamplingSequence {
    #[default]
    VanDerCorput,
    SeededPrng { seed: u64 },
}

/// Radical inverse of `m` in base 2.
pub fn van_der_corput(mut m: u64) -> f64 {
    let mut x = 0.0;
    let mut base = 0.5;
    while m > 0 {
        if m & 1 == 1 {
            x += base;
        }
        m >>= 1;
        base *= 0.5;
    }
    x
}

/// `ζ_m ∈ (−1, 1)` for `m ≥ 1`.
pub fn sample_sequence_value(m: usize, seq: SamplingSequence) -> f64 {
    assert!(m >= 1, "sampling sequence starts at m = 1");
    match seq {
        SamplingSequence::VanDerCorput => 2.0 * van_der_corput(m as u64) - 1.0,
        SamplingSequence::SeededPrng { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            loop {
                let z = 2.0 * rng.gen::<f64>() - 1.0;
                if z > -1.0 {
                    return z;
                }
            }
        }
    }
}

/// `φ` at every mesh point `−N..=N` from cell values of `w1`, integrating the
/// piecewise-constant field exactly from `−X`.
pub fn discrete_potential(cells: &[Vec2], k_first: i64, n: i64, h: f64) -> Vec<f64> {
    let mut phi = Vec::with_capacity((2 * n + 1) as usize);
    let mut acc = 0.0;
    phi.push(0.0);
    let parity = k_first.rem_euclid(2);
    for k in -n..n {
        let c = if k.rem_euclid(2) == parity { k } else { k + 1 };
        let i = ((c - k_first) / 2) as usize;
        acc += 0.5 * h * cells[i][0];
        phi.push(acc);
    }
    phi
}

/// Piecewise-constant approximation at the bottom of a strip.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub m: usize,
    pub mesh: MeshConfig,
    pub params: ModelParams,
    pub profile: AsymptoticProfile,
    /// `Ŵ` on the cells centred at `k_first, k_first + 2, ...`.
    pub cells: Vec<Vec2>,
    pub k_first: i64,
    /// `φ(kh)` for `k = −N..=N`.
    pub phi: Vec<f64>,
}

impl GridSolution {
    fn from_cells(
        m: usize,
        mesh: MeshConfig,
        params: ModelParams,
        profile: AsymptoticProfile,
        cells: Vec<Vec2>,
        k_first: i64,
    ) -> Self {
        let n = mesh.n();
        let phi = if params.source_enabled {
            discrete_potential(&cells, k_first, n, mesh.h)
        } else {
            vec![0.0; (2 * n + 1) as usize]
        };
        GridSolution {
            m,
            mesh,
            params,
            profile,
            cells,
            k_first,
            phi,
        }
    }

    pub fn t(&self) -> f64 {
        self.m as f64 * self.mesh.tau()
    }

    pub fn n(&self) -> i64 {
        self.mesh.n()
    }

    pub fn cell_k(&self, i: usize) -> i64 {
        self.k_first + 2 * i as i64
    }

    pub fn cell_x(&self, i: usize) -> f64 {
        self.cell_k(i) as f64 * self.mesh.h
    }

    /// Length of cell `i` inside `[−X, X]`.
    pub fn cell_weight(&self, i: usize) -> f64 {
        let n = self.n();
        let k = self.cell_k(i);
        if k == -n || k == n {
            self.mesh.h
        } else {
            2.0 * self.mesh.h
        }
    }

    /// `φ(kh)`, continued by constants outside the domain.
    pub fn phi_at(&self, k: i64) -> f64 {
        let n = self.n();
        self.phi[(k.clamp(-n, n) + n) as usize]
    }

    pub fn theta_sample(&self, x: f64, t: f64) -> ThetaSample {
        if self.params.theta_enabled {
            self.profile.sample(x, t)
        } else {
            ThetaSample::default()
        }
    }

    pub fn theta_at(&self, x: f64, t: f64) -> f64 {
        if self.params.theta_enabled {
            self.profile.theta(x, t)
        } else {
            0.0
        }
    }

    /// `W` at `x`, from the cell containing it (clamped to the domain).
    pub fn w_at(&self, x: f64) -> Vec2 {
        let j = ((x / self.mesh.h - self.k_first as f64 + 1.0) / 2.0).floor() as i64;
        let i = j.clamp(0, self.cells.len() as i64 - 1) as usize;
        let c = self.cells[i];
        [c[0], c[1] + self.phi_at(self.cell_k(i))]
    }

    /// Shifted-frame cell values `W = Ŵ + Φ`.
    pub fn w_cells(&self) -> Vec<Vec2> {
        (0..self.cells.len())
            .map(|i| {
                let c = self.cells[i];
                [c[0], c[1] + self.phi_at(self.cell_k(i))]
            })
            .collect()
    }
}

/// Build the strip-0 field from a shifted-frame initial datum sampled at
/// cell midpoints.
pub fn init_solution(
    w0: impl Fn(f64) -> Vec2,
    profile: AsymptoticProfile,
    mesh: MeshConfig,
    params: ModelParams,
) -> Result<GridSolution> {
    mesh.validate()?;
    params.validate()?;
    let n = mesh.n();
    let k_first = if n.rem_euclid(2) == 1 { -n } else { -n + 1 };
    let raw: Vec<Vec2> = (0..)
        .map(|i| k_first + 2 * i)
        .take_while(|&k| k <= n)
        .map(|k| w0(k as f64 * mesh.h))
        .collect();
    for w in &raw {
        if !(w[0].is_finite() && w[1].is_finite()) {
            return Err(Error::Config("initial datum is not finite".into()));
        }
        params.check_ball(*w)?;
    }
    let mut sol = GridSolution::from_cells(0, mesh, params, profile, raw, k_first);
    for i in 0..sol.cells.len() {
        let p = sol.phi_at(sol.cell_k(i));
        sol.cells[i][1] -= p;
    }
    Ok(sol)
}

/// Splitting data at one cell (a point with `k + m` odd).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPoint {
    pub k: i64,
    pub w_hat: Vec2,
    pub w: Vec2,
    pub s: Mat2,
    pub s_tilde: Vec2,
    pub g: Vec2,
    pub w_l: Vec2,
    pub w_r: Vec2,
    pub w_hat_l: Vec2,
    pub w_hat_r: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStates {
    pub m: usize,
    pub points: Vec<SplitPoint>,
}

fn split_point(sol: &GridSolution, i: usize) -> Result<SplitPoint> {
    let h = sol.mesh.h;
    let tau = sol.mesh.tau();
    let t = sol.t();
    let k = sol.cell_k(i);
    let x = k as f64 * h;
    let th = sol.theta_sample(x, t);
    let phi_k = sol.phi_at(k);
    let (phi_l, phi_r) = (sol.phi_at(k - 1), sol.phi_at(k + 1));
    let w_hat = sol.cells[i];
    let w = [w_hat[0], w_hat[1] + phi_k];
    sol.params.check_ball(w)?;
    let (_, jinv) = model::jacobian_and_inverse(w, th.theta)?;
    let (jphi, _) = model::jacobian_and_inverse([0.0, phi_k], th.theta)?;
    let s = linalg::mat_mul(&jinv, &jphi);
    let s_tilde = [th.theta_x * w_hat[1] / (1.0 + w[1]), 0.0];
    let g = if sol.params.source_enabled {
        model::hat_source(w_hat, phi_k, &th)
    } else {
        [th.theta_t, 0.0]
    };
    let dl = linalg::mat_vec(&s, [0.0, phi_l - phi_k]);
    let dr = linalg::mat_vec(&s, [0.0, phi_r - phi_k]);
    let w_l = [
        w[0] + dl[0] + h * s_tilde[0] - tau * g[0],
        w[1] + dl[1] + h * s_tilde[1] - tau * g[1],
    ];
    let w_r = [
        w[0] + dr[0] - h * s_tilde[0] - tau * g[0],
        w[1] + dr[1] - h * s_tilde[1] - tau * g[1],
    ];
    sol.params.check_ball(w_l)?;
    sol.params.check_ball(w_r)?;
    Ok(SplitPoint {
        k,
        w_hat,
        w,
        s,
        s_tilde,
        g,
        w_l,
        w_r,
        w_hat_l: [w_l[0], w_l[1] - phi_l],
        w_hat_r: [w_r[0], w_r[1] - phi_r],
    })
}

pub fn compute_split_states(sol: &GridSolution) -> Result<SplitStates> {
    let points = (0..sol.cells.len())
        .into_par_iter()
        .map(|i| split_point(sol, i))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| guard_abort(sol.m, e))?;
    Ok(SplitStates { m: sol.m, points })
}

fn guard_abort(strip: usize, e: Error) -> Error {
    match e {
        Error::AmplitudeGuard { .. } => Error::GuardAbort {
            strip,
            source: Box::new(e),
        },
        other => other,
    }
}

/// `|F̂(Ŵ^R_k, Φ_{k+1}) − F̂(Ŵ^L_k, Φ_{k−1})|∞` with `θ` at `(k±1)h`.
pub fn flux_mismatch(sol: &GridSolution, p: &SplitPoint) -> f64 {
    let h = sol.mesh.h;
    let t = sol.t();
    let k = p.k;
    let th_l = sol.theta_at((k - 1) as f64 * h, t);
    let th_r = sol.theta_at((k + 1) as f64 * h, t);
    let fr = model::hat_flux_unchecked(p.w_hat_r, [0.0, sol.phi_at(k + 1)], th_r);
    let fl = model::hat_flux_unchecked(p.w_hat_l, [0.0, sol.phi_at(k - 1)], th_l);
    linalg::norm_inf(linalg::sub(fr, fl))
}

/// Riemann problem at a point with `k + m` even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanAt {
    pub k: i64,
    pub fan: WaveFan,
    /// `φ_{k,m}`; subtracting it maps fan states to the hatted frame.
    pub phi: f64,
}

/// Everything produced while crossing one strip.
#[derive(Debug, Clone)]
pub struct StripOutput {
    pub m: usize,
    pub split: SplitStates,
    pub fans: Vec<FanAt>,
    /// `ζ_{m+1}`, used to sample the fans.
    pub zeta: f64,
}

/// Default strength above which a fan near `±X` aborts the run.
pub const BOUNDARY_TOL: f64 = 1e-6;

pub fn riemann_fans(sol: &GridSolution, split: &SplitStates, boundary_tol: f64) -> Result<Vec<FanAt>> {
    let n = sol.n();
    let h = sol.mesh.h;
    let t = sol.t();
    let pts = &split.points;
    // Riemann points sit between consecutive cells, plus one past each end.
    let k0 = sol.k_first - 1;
    let first = if k0 < -n { k0 + 2 } else { k0 };
    let ks: Vec<i64> = (0..).map(|j| first + 2 * j).take_while(|&k| k <= n).collect();
    ks.par_iter()
        .map(|&k| {
            let il = (k - 1 - sol.k_first).div_euclid(2);
            let ir = (k + 1 - sol.k_first).div_euclid(2);
            let has_l = il >= 0;
            let has_r = (ir as usize) < pts.len();
            let (u_l, u_r) = match (has_l, has_r) {
                (true, true) => (pts[il as usize].w_r, pts[ir as usize].w_l),
                (false, true) => (pts[ir as usize].w_l, pts[ir as usize].w_l),
                (true, false) => (pts[il as usize].w_r, pts[il as usize].w_r),
                (false, false) => unreachable!("domain has at least four cells"),
            };
            let ctx = FrozenContext::new(sol.theta_at(k as f64 * h, t));
            let fan = riemann::solve_riemann(u_l, u_r, &ctx)?;
            sol.params.check_ball(fan.middle)?;
            let speed = fan.max_abs_speed();
            if speed >= sol.mesh.lambda_cfl {
                return Err(Error::Cfl {
                    speed,
                    limit: sol.mesh.lambda_cfl,
                });
            }
            if k.abs() >= n - 2 && fan.strength() > boundary_tol {
                return Err(Error::BoundaryInfluence {
                    strip: sol.m,
                    strength: fan.strength(),
                });
            }
            Ok(FanAt {
                k,
                fan,
                phi: sol.phi_at(k),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| guard_abort(sol.m, e))
}

/// Sample the fans at `ξ = ζ λ` and rebuild the field on strip `m + 1`.
pub fn sample_fans(sol: &GridSolution, fans: &[FanAt], zeta: f64) -> GridSolution {
    let xi = zeta * sol.mesh.lambda_cfl;
    let cells: Vec<Vec2> = fans
        .par_iter()
        .map(|f| {
            let u = riemann::sample_fan(&f.fan, xi);
            [u[0], u[1] - f.phi]
        })
        .collect();
    GridSolution::from_cells(
        sol.m + 1,
        sol.mesh,
        sol.params,
        sol.profile,
        cells,
        fans[0].k,
    )
}

/// One full strip: splitting, Riemann solves and sampling.
pub fn riemann_step(
    sol: &GridSolution,
    seq: SamplingSequence,
    boundary_tol: f64,
) -> Result<(GridSolution, StripOutput)> {
    let split = compute_split_states(sol)?;
    let fans = riemann_fans(sol, &split, boundary_tol)?;
    let zeta = sample_sequence_value(sol.m + 1, seq);
    let next = sample_fans(sol, &fans, zeta);
    Ok((
        next,
        StripOutput {
            m: sol.m,
            split,
            fans,
            zeta,
        },
    ))
}

/// Advance `n_strips` strips, handing every strip to `observer` before the
/// next one starts.
pub fn advance_with<F>(
    mut sol: GridSolution,
    seq: SamplingSequence,
    n_strips: usize,
    boundary_tol: f64,
    mut observer: F,
) -> Result<GridSolution>
where
    F: FnMut(&GridSolution, &StripOutput, &GridSolution) -> Result<()>,
{
    for _ in 0..n_strips {
        let (next, out) = riemann_step(&sol, seq, boundary_tol)?;
        observer(&sol, &out, &next)?;
        sol = next;
    }
    Ok(sol)
}

/// Advance `n_strips` strips and collect the diagnostics of every strip.
pub fn advance(
    sol: GridSolution,
    seq: SamplingSequence,
    n_strips: usize,
    cfg: DiagnosticsConfig,
) -> Result<(GridSolution, Vec<DiagnosticsRecord>)> {
    let mut tracker = Tracker::new(cfg);
    let end = advance_with(sol, seq, n_strips, BOUNDARY_TOL, |s, out, _| tracker.observe(s, out))?;
    Ok((end, tracker.records))
}
