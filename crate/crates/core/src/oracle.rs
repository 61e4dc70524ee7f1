//! First-order finite-volume reference solver for the shifted system
//! `W_t + F(W, θ)_x + G = 0`.
//!
//! Local Lax–Friedrichs (Rusanov) fluxes with `θ` evaluated at the
//! interfaces, Strang splitting for the source, and transmissive ends. The
//! source steps are exact: `w1` moves by `−(θ(t+dt) − θ(t))` at the cell
//! centre and `w2` follows the logistic flow `y' = −y(1 + y)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::model::{self, AsymptoticProfile, ModelParams};

/// Bound on characteristic speeds used for the time-step restriction.
pub const SPEED_BOUND: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FVConfig {
    pub dx: f64,
    pub dt: f64,
    pub x_half: f64,
    pub t_final: f64,
    /// Output times; `t_final` is always included.
    pub snapshot_times: Vec<f64>,
}

impl FVConfig {
    /// `Δt = 0.2 Δx`, the largest step with `2 Δt / Δx ≤ 0.4`.
    pub fn new(dx: f64, x_half: f64, t_final: f64) -> Self {
        FVConfig {
            dx,
            dt: 0.2 * dx,
            x_half,
            t_final,
            snapshot_times: Vec::new(),
        }
    }

    pub fn n_cells(&self) -> usize {
        (2.0 * self.x_half / self.dx).round() as usize
    }

    pub fn cell_x(&self, i: usize) -> f64 {
        -self.x_half + (i as f64 + 0.5) * self.dx
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dt > 0.0 && self.x_half > 0.0) {
            return Err(Error::Config("oracle mesh sizes must be positive".into()));
        }
        if SPEED_BOUND * self.dt / self.dx > 0.4 + 1e-12 {
            return Err(Error::Cfl {
                speed: SPEED_BOUND * self.dt / self.dx,
                limit: 0.4,
            });
        }
        if self.n_cells() < 3 {
            return Err(Error::Config("oracle needs at least three cells".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FvSnapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub w: Vec<Vec2>,
}

/// One Rusanov step for a system of `D` components with transmissive ends.
/// `flux(u, i)` and `speed(u, i)` take the interface index `i` (interface
/// `i` sits between cells `i − 1` and `i`).
pub fn rusanov_step<const D: usize, F, S>(u: &[[f64; D]], dt_dx: f64, flux: F, speed: S) -> Vec<[f64; D]>
where
    F: Fn([f64; D], usize) -> [f64; D] + Sync,
    S: Fn([f64; D], usize) -> f64 + Sync,
{
    let n = u.len();
    let at = |i: isize| u[i.clamp(0, n as isize - 1) as usize];
    let fluxes: Vec<[f64; D]> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let (l, r) = (at(i as isize - 1), at(i as isize));
            let (fl, fr) = (flux(l, i), flux(r, i));
            let a = speed(l, i).max(speed(r, i));
            let mut f = [0.0; D];
            for c in 0..D {
                f[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * a * (r[c] - l[c]);
            }
            f
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut v = u[i];
            for c in 0..D {
                v[c] -= dt_dx * (fluxes[i + 1][c] - fluxes[i][c]);
            }
            v
        })
        .collect()
}

fn logistic(y0: f64, t: f64) -> f64 {
    let e = (-t).exp();
    y0 * e / (1.0 + y0 * (1.0 - e))
}

fn source_step(w: &mut [Vec2], cfg: &FVConfig, profile: &AsymptoticProfile, params: &ModelParams, t: f64, dt: f64) {
    if params.theta_enabled {
        for (i, c) in w.iter_mut().enumerate() {
            let x = cfg.cell_x(i);
            c[0] -= profile.theta(x, t + dt) - profile.theta(x, t);
        }
    }
    if params.source_enabled {
        for c in w.iter_mut() {
            c[1] = logistic(c[1], dt);
        }
    }
}

pub fn fv_solve(
    w0: impl Fn(f64) -> Vec2,
    profile: AsymptoticProfile,
    cfg: &FVConfig,
    params: &ModelParams,
) -> Result<Vec<FvSnapshot>> {
    cfg.validate()?;
    let n = cfg.n_cells();
    let mut w: Vec<Vec2> = (0..n).map(|i| w0(cfg.cell_x(i))).collect();
    for c in &w {
        params.check_ball(*c)?;
    }
    let mut stops: Vec<f64> = cfg
        .snapshot_times
        .iter()
        .copied()
        .filter(|t| *t >= 0.0 && *t < cfg.t_final)
        .chain(std::iter::once(cfg.t_final))
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let theta_if = |t: f64| -> Vec<f64> {
        (0..=n)
            .map(|i| {
                if params.theta_enabled {
                    profile.theta(-cfg.x_half + i as f64 * cfg.dx, t)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mut out = Vec::with_capacity(stops.len());
    let mut t = 0.0;
    for stop in stops {
        while t < stop - 1e-12 {
            let dt = cfg.dt.min(stop - t);
            source_step(&mut w, cfg, &profile, params, t, 0.5 * dt);
            let th = theta_if(t + 0.5 * dt);
            let next = rusanov_step(
                &w,
                dt / cfg.dx,
                |u, i| model::flux_w(u, th[i]),
                |u, i| {
                    let a = u[0] + th[i];
                    0.5 * (a.abs() + (a * a + 4.0 * (1.0 + u[1])).max(0.0).sqrt())
                },
            );
            w = next;
            source_step(&mut w, cfg, &profile, params, t + 0.5 * dt, 0.5 * dt);
            t += dt;
            if let Some(c) = w.iter().find(|c| !(c[0].is_finite() && c[1].is_finite())) {
                return Err(Error::Regime(format!("oracle produced {c:?} at t = {t}")));
            }
            for c in &w {
                params.check_ball(*c)?;
            }
        }
        t = stop;
        out.push(FvSnapshot {
            t,
            x: (0..n).map(|i| cfg.cell_x(i)).collect(),
            w: w.clone(),
        });
    }
    Ok(out)
}

/// Scalar Burgers run with the same machinery, for sanity checks.
pub fn burgers_solve(u0: impl Fn(f64) -> f64, cfg: &FVConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = cfg.n_cells();
    let mut u: Vec<[f64; 1]> = (0..n).map(|i| [u0(cfg.cell_x(i))]).collect();
    let mut t = 0.0;
    while t < cfg.t_final - 1e-12 {
        let dt = cfg.dt.min(cfg.t_final - t);
        u = rusanov_step(&u, dt / cfg.dx, |v, _| [0.5 * v[0] * v[0]], |v, _| v[0].abs());
        t += dt;
    }
    Ok(u.into_iter().map(|v| v[0]).collect())
}

/// `∫|a − b|` for two cell arrays on the same mesh.
pub fn l1_difference(a: &[Vec2], b: &[Vec2], dx: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| dx * ((p[0] - q[0]).abs() + (p[1] - q[1]).abs()))
        .sum()
}
