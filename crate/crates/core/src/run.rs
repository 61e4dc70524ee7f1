//! Run orchestration shared by the command-line tool and the test suites.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{make_initial_data, InitialData};
use crate::diagnostics::{self, DiagnosticsRecord, FitResult, Tracker, TwoTermFit};
use crate::error::{Error, Result};
use crate::glimm::{self, GridSolution};
use crate::linalg::Vec2;
use crate::model::AsymptoticProfile;
use crate::oracle::{self, FVConfig};
use crate::riemann::{self, FrozenContext, WaveFan};

/// Header embedded in every output file: version and the resolved config.
pub fn header(cfg: &RunConfig) -> String {
    format!("version={}\n{}", crate::VERSION, cfg.serialize())
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: InitialData,
    pub profile: AsymptoticProfile,
    pub solution: GridSolution,
}

/// Resolve the initial datum and build the strip-0 field. The profile mass
/// is the mass of the sampled `v0` on the domain.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let data = make_initial_data(&cfg.data)?;
    let mass = if cfg.model.theta_enabled {
        data.discrete_mass(&cfg.mesh)
    } else {
        0.0
    };
    let profile = AsymptoticProfile::new(mass);
    let theta_on = cfg.model.theta_enabled;
    let solution = glimm::init_solution(
        |x| {
            let p = data.primitive(x);
            let th = if theta_on { profile.theta(x, 0.0) } else { 0.0 };
            [p[0] - th, p[1]]
        },
        profile,
        cfg.mesh,
        cfg.model,
    )?;
    Ok(Prepared {
        data,
        profile,
        solution,
    })
}

/// Primitive fields on the cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
}

pub fn snapshot(sol: &GridSolution) -> Snapshot {
    let t = sol.t();
    let w = sol.w_cells();
    let x: Vec<f64> = (0..w.len()).map(|i| sol.cell_x(i)).collect();
    let theta: Vec<f64> = x.iter().map(|x| sol.theta_at(*x, t)).collect();
    Snapshot {
        t,
        v: w.iter().zip(&theta).map(|(w, th)| w[0] + th).collect(),
        u: w.iter().map(|w| 1.0 + w[1]).collect(),
        x,
        theta,
    }
}

pub fn write_snapshot<W: std::io::Write>(out: &mut W, header: &str, s: &Snapshot) -> Result<()> {
    for line in header.lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# t={}", diagnostics::fmt_f64(s.t))?;
    writeln!(out, "x,v,u,theta")?;
    for i in 0..s.x.len() {
        writeln!(
            out,
            "{},{},{},{}",
            diagnostics::fmt_f64(s.x[i]),
            diagnostics::fmt_f64(s.v[i]),
            diagnostics::fmt_f64(s.u[i]),
            diagnostics::fmt_f64(s.theta[i])
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub data: InitialData,
    pub profile: AsymptoticProfile,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub initial: GridSolution,
    pub last: GridSolution,
    /// Largest `|∫w1| − |∫v − M|` over all strips.
    pub zero_mass_excess: f64,
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulationOutput> {
    let prep = prepare(cfg)?;
    let mut tracker = Tracker::new(cfg.diag);
    let mut pending: Vec<f64> = cfg.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    let mut pending = pending.into_iter().peekable();
    let mut snapshots = Vec::new();
    let n_strips = cfg.mesh.n_strips();
    let initial = prep.solution.clone();
    let last = glimm::advance_with(prep.solution, cfg.sampling, n_strips, cfg.boundary_tol, |sol, out, _| {
        while let Some(&ts) = pending.peek() {
            if sol.t() >= ts - 1e-12 {
                snapshots.push(snapshot(sol));
                pending.next();
            } else {
                break;
            }
        }
        tracker.observe(sol, out)
    })?;
    if pending.next().is_some() {
        snapshots.push(snapshot(&last));
    }
    Ok(SimulationOutput {
        data: prep.data,
        profile: prep.profile,
        records: tracker.records.clone(),
        snapshots,
        initial,
        last,
        zero_mass_excess: tracker.zero_mass_excess,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecaySummary {
    pub version: String,
    pub mass: f64,
    pub delta: f64,
    pub sigma: f64,
    pub tail_window: (f64, f64),
    pub head_window: (f64, f64),
    /// `TV v + TV u`.
    pub tv: FitResult,
    pub tv_two_term: Option<TwoTermFit>,
    /// `∫|v − θ| + ∫|u − 1|`.
    pub l1: FitResult,
    /// `∫|v − θ| + ∫|u − 1|` prefactor with the exponent pinned at −1/4.
    pub l1_quarter: FitResult,
    pub weighted_l2_sup: f64,
}

pub fn series(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> (Vec<f64>, Vec<f64>) {
    (records.iter().map(|r| r.t).collect(), records.iter().map(f).collect())
}

pub fn decay_summary(out: &SimulationOutput, t_final: f64) -> Result<DecaySummary> {
    let (tail, head) = diagnostics::default_windows(t_final);
    let (t, tv) = series(&out.records, |r| r.tv_vu);
    let (_, l1) = series(&out.records, |r| r.l1_v_theta + r.l1_u);
    Ok(DecaySummary {
        version: crate::VERSION.to_string(),
        mass: out.profile.mass,
        delta: out.data.delta,
        sigma: out.data.sigma,
        tail_window: tail,
        head_window: head,
        tv: diagnostics::fit_decay(&t, &tv, tail)?,
        tv_two_term: diagnostics::fit_two_term(&t, &tv, tail, head).ok(),
        l1: diagnostics::fit_decay(&t, &l1, tail)?,
        l1_quarter: diagnostics::fit_prefactor(&t, &l1, tail, -0.25)?,
        weighted_l2_sup: out.records.iter().map(|r| r.weighted_l2).fold(0.0, f64::max),
    })
}

/// Largest flux mismatch over the cells of the first strip.
pub fn initial_flux_mismatch(sol: &GridSolution) -> Result<f64> {
    let split = glimm::compute_split_states(sol)?;
    Ok(split
        .points
        .iter()
        .map(|p| glimm::flux_mismatch(sol, p))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub flux_mismatch: f64,
    pub mass_drift: f64,
    /// `∫|W_h − W_{prev}|` at the final time against the previous level.
    pub l1_self_difference: f64,
}

/// `∫|a − b|` over `[−X, X]` for two piecewise-constant fields, evaluated on
/// the finer of the two meshes.
pub fn l1_between(a: &GridSolution, b: &GridSolution) -> f64 {
    let (fine, coarse) = if a.mesh.h <= b.mesh.h { (a, b) } else { (b, a) };
    let h = 0.5 * fine.mesh.h;
    let x0 = -fine.mesh.x_half.min(coarse.mesh.x_half);
    let n = (2.0 * x0.abs() / h).round() as usize;
    (0..n)
        .map(|i| {
            let x = x0 + (i as f64 + 0.5) * h;
            let (p, q) = (fine.w_at(x), coarse.w_at(x));
            h * ((p[0] - q[0]).abs() + (p[1] - q[1]).abs())
        })
        .sum()
}

pub fn convergence(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    let mut prev: Option<GridSolution> = None;
    for &h in &cfg.convergence_h {
        let mut c = cfg.clone();
        c.mesh.h = h;
        let prep = prepare(&c)?;
        let fm = initial_flux_mismatch(&prep.solution)?;
        let out = simulate(&c)?;
        let (mass_v, _) = diagnostics::masses(&out.last);
        let l1 = prev.as_ref().map_or(f64::NAN, |p| l1_between(p, &out.last));
        rows.push(ConvergenceRow {
            h,
            flux_mismatch: fm,
            mass_drift: (mass_v - out.profile.mass).abs(),
            l1_self_difference: l1,
        });
        prev = Some(out.last);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub t: f64,
    pub x: Vec<f64>,
    pub glimm: Vec<Vec2>,
    pub fv: Vec<Vec2>,
    pub l1: f64,
}

/// Glimm and finite-volume solutions of the same configuration at `mesh.T`.
pub fn oracle_compare(cfg: &RunConfig) -> Result<OracleComparison> {
    let out = simulate(cfg)?;
    let t = out.last.t();
    let fv_cfg = FVConfig::new(cfg.oracle_dx, cfg.mesh.x_half, t);
    let prof = out.profile;
    let theta_on = cfg.model.theta_enabled;
    let data = out.data.clone();
    let snaps = oracle::fv_solve(
        |x| {
            let p = data.primitive(x);
            [p[0] - if theta_on { prof.theta(x, 0.0) } else { 0.0 }, p[1]]
        },
        prof,
        &fv_cfg,
        &cfg.model,
    )?;
    let fv = snaps.last().ok_or_else(|| Error::Regime("oracle produced no output".into()))?;
    let glimm: Vec<Vec2> = fv.x.iter().map(|x| out.last.w_at(*x)).collect();
    let l1 = oracle::l1_difference(&glimm, &fv.w, cfg.oracle_dx);
    Ok(OracleComparison {
        t,
        x: fv.x.clone(),
        glimm,
        fv: fv.w.clone(),
        l1,
    })
}

/// Fan of the configured Riemann datum and its profile at `riemann.t`.
pub fn riemann_profile(cfg: &RunConfig) -> Result<(WaveFan, Vec<(f64, Vec2)>)> {
    let th = cfg.riemann_theta;
    let to_w = |p: Vec2| [p[0] - th, p[1]];
    let (ul, ur) = (to_w(cfg.data.left), to_w(cfg.data.right));
    cfg.model.check_ball(ul)?;
    cfg.model.check_ball(ur)?;
    let fan = riemann::solve_riemann(ul, ur, &FrozenContext::new(th))?;
    let t = cfg.riemann_t;
    let n = cfg.riemann_samples;
    let span = cfg.mesh.lambda_cfl * t;
    let prof = (0..n)
        .map(|i| {
            let x = -span + 2.0 * span * i as f64 / (n - 1) as f64;
            (x, riemann::sample_fan(&fan, x / t))
        })
        .collect();
    Ok((fan, prof))
}
