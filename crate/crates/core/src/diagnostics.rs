//! Functionals tracked along a run: total variation and its split into
//! mesh-point jumps and wave strengths, the interaction potential and Glimm
//! functional, weighted energies, entropy budget, masses, L¹ distance to the
//! heat-kernel profile, and decay-rate fits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glimm::{FanAt, GridSolution, StripOutput};
use crate::linalg::{self, Vec2};
use crate::model;
use crate::riemann::{ElementaryWave, Family};

/// Default weight of the interaction potential in the Glimm functional.
pub const KAPPA: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Total variation of `Ŵ_h` right after the strip starts, `K + L_tv`.
    pub tv: f64,
    pub k: f64,
    pub l: f64,
    pub m_int: f64,
    pub n: f64,
    pub mass_v: f64,
    pub mass_w1: f64,
    pub l1_v_theta: f64,
    pub l1_u: f64,
    pub weighted_l2: f64,
    pub dissipation_accum: f64,
    pub y_accum: f64,
    pub entropy_total: f64,
    pub entropy_slack: f64,
    /// `TV v + TV u` in the primitive variables.
    pub tv_vu: f64,
    /// State variation carried by the waves.
    pub l_tv: f64,
    pub delta: f64,
    pub j: f64,
    pub entropy_production_step: f64,
    /// Total variation of `W` (no potential).
    pub tv_w: f64,
}

pub const CSV_HEADER: &str = "t,TV,K,L,Mint,N,mass_v,mass_w1,L1_v_theta,L1_u,wL2,diss,Y,eta,slack,tv_vu,L_tv,delta,J,eta_prod,tv_w";

impl DiagnosticsRecord {
    pub fn fields(&self) -> [f64; 21] {
        [
            self.t,
            self.tv,
            self.k,
            self.l,
            self.m_int,
            self.n,
            self.mass_v,
            self.mass_w1,
            self.l1_v_theta,
            self.l1_u,
            self.weighted_l2,
            self.dissipation_accum,
            self.y_accum,
            self.entropy_total,
            self.entropy_slack,
            self.tv_vu,
            self.l_tv,
            self.delta,
            self.j,
            self.entropy_production_step,
            self.tv_w,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|v| v.is_finite())
    }
}

/// Float formatting used in every CSV: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn write_csv<W: Write>(out: &mut W, header_comment: &str, records: &[DiagnosticsRecord]) -> Result<()> {
    for line in header_comment.lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let row: Vec<String> = r.fields().iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Total variation of a sequence of states, 1-norm of consecutive jumps.
pub fn total_variation(states: &[Vec2]) -> f64 {
    states
        .windows(2)
        .map(|p| linalg::norm1(linalg::sub(p[1], p[0])))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TvSplit {
    pub tv: f64,
    pub k: f64,
    pub l: f64,
    pub l_tv: f64,
}

/// Hatted state sequence across the strip: left, middle and right state of
/// every fan, shifted by `Φ_k`.
pub fn hat_sequence(fans: &[FanAt]) -> Vec<Vec2> {
    let mut seq = Vec::with_capacity(3 * fans.len());
    for f in fans {
        let shift = |u: Vec2| [u[0], u[1] - f.phi];
        seq.push(shift(f.fan.left()));
        seq.push(shift(f.fan.middle));
        seq.push(shift(f.fan.right()));
    }
    seq
}

/// TV at the start of a strip, split into jumps at the cell points (`K`)
/// and wave strengths (`L`). `tv` is computed independently from the full
/// state sequence; `K + L_tv = TV` is an identity.
pub fn tv_split(fans: &[FanAt]) -> TvSplit {
    let seq = hat_sequence(fans);
    let mut k = 0.0;
    for pair in fans.windows(2) {
        let a = [pair[0].fan.right()[0], pair[0].fan.right()[1] - pair[0].phi];
        let b = [pair[1].fan.left()[0], pair[1].fan.left()[1] - pair[1].phi];
        k += linalg::norm1(linalg::sub(b, a));
    }
    TvSplit {
        tv: total_variation(&seq),
        k,
        l: fans.iter().map(|f| f.fan.strength()).sum(),
        l_tv: fans.iter().map(|f| f.fan.variation()).sum(),
    }
}

/// TV of `(v, ũ) = (w1 + θ, w2)` with `θ` frozen per fan.
pub fn tv_primitive(fans: &[FanAt]) -> f64 {
    let mut seq = Vec::with_capacity(3 * fans.len());
    for f in fans {
        let th = f.fan.theta;
        for u in [f.fan.left(), f.fan.middle, f.fan.right()] {
            seq.push([u[0] + th, u[1]]);
        }
    }
    total_variation(&seq)
}

/// TV of `W` across the strip.
pub fn tv_shifted(fans: &[FanAt]) -> f64 {
    let seq: Vec<Vec2> = fans
        .iter()
        .flat_map(|f| [f.fan.left(), f.fan.middle, f.fan.right()])
        .collect();
    total_variation(&seq)
}

/// One elementary wave in the strip-wide list used for the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveEntry {
    pub family: Family,
    pub amplitude: f64,
}

impl From<&ElementaryWave> for WaveEntry {
    fn from(w: &ElementaryWave) -> Self {
        WaveEntry {
            family: w.family,
            amplitude: w.amplitude,
        }
    }
}

pub fn wave_list(fans: &[FanAt]) -> Vec<WaveEntry> {
    fans.iter()
        .flat_map(|f| f.fan.waves.iter())
        .filter(|w| w.amplitude != 0.0)
        .map(WaveEntry::from)
        .collect()
}

/// `Σ |ζ_i||ξ_j|` over approaching pairs, waves listed left to right. A
/// plus-wave approaches any minus-wave on its right; waves of one family
/// approach when at least one of them is a shock.
pub fn interaction_potential(waves: &[WaveEntry]) -> f64 {
    let (mut plus_all, mut plus_shock, mut minus_all, mut minus_shock) = (0.0, 0.0, 0.0, 0.0);
    let mut total = 0.0;
    for w in waves {
        let s = w.amplitude.abs();
        let shock = w.amplitude < 0.0;
        match w.family {
            Family::Minus => {
                total += s * plus_all;
                total += s * if shock { minus_all } else { minus_shock };
                minus_all += s;
                if shock {
                    minus_shock += s;
                }
            }
            Family::Plus => {
                total += s * if shock { plus_all } else { plus_shock };
                plus_all += s;
                if shock {
                    plus_shock += s;
                }
            }
        }
    }
    total
}

pub fn glimm_functional(l: f64, m: f64, kappa: f64) -> f64 {
    assert!(kappa > 0.0, "κ must be positive");
    l + kappa * m
}

/// `Σ_k |ε_k − α_k − β_k|`: `ε` are the fans of this strip, `α` the part of
/// the previous left neighbour's fan right of its sample point and `β` the
/// part of the previous right neighbour's fan left of it.
pub fn interaction_defect(prev: &[FanAt], cur: &[FanAt], xi: f64) -> f64 {
    let find = |k: i64| -> Option<&FanAt> {
        let k0 = prev.first()?.k;
        let d = k - k0;
        if d < 0 || d % 2 != 0 {
            return None;
        }
        prev.get((d / 2) as usize).filter(|f| f.k == k)
    };
    cur.iter()
        .map(|f| {
            let alpha = find(f.k - 1).map_or([0.0; 2], |p| p.fan.amplitudes_right_of(xi));
            let beta = find(f.k + 1).map_or([0.0; 2], |p| p.fan.amplitudes_left_of(xi));
            let e = f.fan.gamma;
            (e[0] - alpha[0] - beta[0]).abs() + (e[1] - alpha[1] - beta[1]).abs()
        })
        .sum()
}

/// Midpoint quadrature of `(x² + t + 1)(w1² + w2²)`.
pub fn weighted_l2(sol: &GridSolution) -> f64 {
    let t = sol.t();
    sol.w_cells()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let x = sol.cell_x(i);
            sol.cell_weight(i) * (x * x + t + 1.0) * (w[0] * w[0] + w[1] * w[1])
        })
        .sum()
}

/// Midpoint quadrature of `(x² + t + 1)(w2 + θ_x)²`.
pub fn dissipation_density(sol: &GridSolution) -> f64 {
    let t = sol.t();
    sol.w_cells()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let x = sol.cell_x(i);
            let thx = if sol.params.theta_enabled {
                sol.profile.theta_x(x, t)
            } else {
                0.0
            };
            sol.cell_weight(i) * (x * x + t + 1.0) * (w[1] + thx).powi(2)
        })
        .sum()
}

/// Midpoint quadrature of `w1²`.
pub fn y_density(sol: &GridSolution) -> f64 {
    (0..sol.cells.len())
        .map(|i| sol.cell_weight(i) * sol.cells[i][0] * sol.cells[i][0])
        .sum()
}

pub fn dissipation_increment(sol: &GridSolution) -> f64 {
    sol.mesh.tau() * dissipation_density(sol)
}

pub fn y_increment(sol: &GridSolution) -> f64 {
    sol.mesh.tau() * y_density(sol)
}

/// `Ψ(kh) = ∫_{−X}^{kh} w1` at every mesh point, and `|Ψ(X)|`.
pub fn potential_psi(sol: &GridSolution) -> (Vec<f64>, f64) {
    let psi = if sol.params.source_enabled {
        sol.phi.iter().map(|p| 2.0 * p).collect::<Vec<_>>()
    } else {
        crate::glimm::discrete_potential(&sol.cells, sol.k_first, sol.n(), sol.mesh.h)
            .into_iter()
            .map(|p| 2.0 * p)
            .collect()
    };
    let tail = psi.last().copied().unwrap_or(0.0).abs();
    (psi, tail)
}

/// `(∫|v − θ|, ∫|u − 1|) = (∫|w1|, ∫|w2|)`.
pub fn l1_distance_to_profile(sol: &GridSolution) -> (f64, f64) {
    sol.w_cells()
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(a, b), (i, w)| {
            let c = sol.cell_weight(i);
            (a + c * w[0].abs(), b + c * w[1].abs())
        })
}

/// `(∫v, ∫w1)` over the domain.
pub fn masses(sol: &GridSolution) -> (f64, f64) {
    let t = sol.t();
    (0..sol.cells.len()).fold((0.0, 0.0), |(mv, mw), i| {
        let c = sol.cell_weight(i);
        let w1 = sol.cells[i][0];
        (mv + c * (w1 + sol.theta_at(sol.cell_x(i), t)), mw + c * w1)
    })
}

/// `(∫η, ∫ ũ(1+ũ)ln(1+ũ))` at the strip bottom.
pub fn entropy_integrals(sol: &GridSolution) -> Result<(f64, f64)> {
    let t = sol.t();
    let mut eta = 0.0;
    let mut diss = 0.0;
    for (i, w) in sol.w_cells().iter().enumerate() {
        let c = sol.cell_weight(i);
        let e = model::entropy_pair(w[0] + sol.theta_at(sol.cell_x(i), t), w[1])?;
        eta += c * e.eta;
        diss += c * e.dissipation;
    }
    Ok((eta, diss))
}

/// `∫η(t2) − ∫η(t1) + ∫∫ dissipation`. Admissible solutions keep this ≤ 0.
pub fn entropy_budget(sol1: &GridSolution, sol2: &GridSolution, dissipation: f64) -> Result<f64> {
    Ok(entropy_integrals(sol2)?.0 - entropy_integrals(sol1)?.0 + dissipation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub kappa: f64,
    /// Record every `every`-th strip (accumulators still see every strip).
    pub every: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            kappa: KAPPA,
            every: 1,
        }
    }
}

/// Consumes strips in order and produces records.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub cfg: DiagnosticsConfig,
    pub records: Vec<DiagnosticsRecord>,
    /// Fans of the previous strip and the `ζ` they were sampled at.
    prev_fans: Option<(Vec<FanAt>, f64)>,
    diss: f64,
    y: f64,
    eta0: Option<f64>,
    entropy_dissipated: f64,
    /// Largest `|∫w1| − |∫v − M|` seen so far.
    pub zero_mass_excess: f64,
}

impl Tracker {
    pub fn new(cfg: DiagnosticsConfig) -> Self {
        Tracker {
            cfg,
            records: Vec::new(),
            prev_fans: None,
            diss: 0.0,
            y: 0.0,
            eta0: None,
            entropy_dissipated: 0.0,
            zero_mass_excess: f64::NEG_INFINITY,
        }
    }

    pub fn observe(&mut self, sol: &GridSolution, out: &StripOutput) -> Result<()> {
        let tau = sol.mesh.tau();
        let (eta, ent_diss) = entropy_integrals(sol)?;
        let eta0 = *self.eta0.get_or_insert(eta);
        let slack = eta - eta0 + self.entropy_dissipated;
        let (mass_v, mass_w1) = masses(sol);
        self.zero_mass_excess = self
            .zero_mass_excess
            .max(mass_w1.abs() - (mass_v - sol.profile.mass).abs());

        if sol.m % self.cfg.every == 0 {
            let split = tv_split(&out.fans);
            let m_int = interaction_potential(&wave_list(&out.fans));
            let (l1v, l1u) = l1_distance_to_profile(sol);
            let delta = match &self.prev_fans {
                Some((prev, zeta)) => interaction_defect(prev, &out.fans, zeta * sol.mesh.lambda_cfl),
                None => 0.0,
            };
            let tv_w = tv_shifted(&out.fans);
            let rec = DiagnosticsRecord {
                t: sol.t(),
                tv: split.tv,
                k: split.k,
                l: split.l,
                m_int,
                n: glimm_functional(split.l, m_int, self.cfg.kappa),
                mass_v,
                mass_w1,
                l1_v_theta: l1v,
                l1_u: l1u,
                weighted_l2: weighted_l2(sol),
                dissipation_accum: self.diss,
                y_accum: self.y,
                entropy_total: eta,
                entropy_slack: slack,
                tv_vu: tv_primitive(&out.fans),
                l_tv: split.l_tv,
                delta,
                j: tau * tv_w,
                entropy_production_step: if sol.params.source_enabled { tau * ent_diss } else { 0.0 },
                tv_w,
            };
            if !rec.is_finite() {
                return Err(Error::Regime(format!("non-finite diagnostics at t = {}", rec.t)));
            }
            self.records.push(rec);
        }

        self.diss += dissipation_increment(sol);
        self.y += y_increment(sol);
        if sol.params.source_enabled {
            self.entropy_dissipated += tau * ent_diss;
        }
        self.prev_fans = Some((out.fans.clone(), out.zeta));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub samples: usize,
}

/// Residual above which a power-law fit is rejected.
pub const POWER_LAW_RESIDUAL_MAX: f64 = 0.1;

impl FitResult {
    pub fn accepted(&self) -> bool {
        self.residual <= POWER_LAW_RESIDUAL_MAX
    }
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum();
    (slope, icpt, (rss / n).sqrt())
}

fn window_samples(t: &[f64], v: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if t.len() != v.len() {
        return Err(Error::Fit("time and value series differ in length".into()));
    }
    let (ts, vs): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(v)
        .filter(|(ti, _)| **ti >= window.0 && **ti <= window.1)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if ts.len() < 20 {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need at least 20",
            window.0,
            window.1,
            ts.len()
        )));
    }
    if let Some(bad) = vs.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::Fit(format!("series has a non-positive value {bad}")));
    }
    Ok((ts, vs))
}

/// Least-squares power law `value ≈ c (t+1)^p` over `window`.
pub fn fit_decay(t: &[f64], v: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let (ts, vs) = window_samples(t, v, window)?;
    let x: Vec<f64> = ts.iter().map(|t| (t + 1.0).ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, icpt, res) = least_squares(&x, &y);
    Ok(FitResult {
        exponent: slope,
        prefactor: icpt.exp(),
        residual: res,
        t_lo: window.0,
        t_hi: window.1,
        samples: ts.len(),
    })
}

/// Least-squares exponential `value ≈ c e^{p t}`; the decay rate is `−p`.
pub fn fit_exponential(t: &[f64], v: &[f64], window: (f64, f64)) -> Result<FitResult> {
    let (ts, vs) = window_samples(t, v, window)?;
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, icpt, res) = least_squares(&ts, &y);
    Ok(FitResult {
        exponent: slope,
        prefactor: icpt.exp(),
        residual: res,
        t_lo: window.0,
        t_hi: window.1,
        samples: ts.len(),
    })
}

/// Power-law prefactor with the exponent held fixed.
pub fn fit_prefactor(t: &[f64], v: &[f64], window: (f64, f64), exponent: f64) -> Result<FitResult> {
    let (ts, vs) = window_samples(t, v, window)?;
    let r: Vec<f64> = ts
        .iter()
        .zip(&vs)
        .map(|(t, v)| v.ln() - exponent * (t + 1.0).ln())
        .collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let res = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    Ok(FitResult {
        exponent,
        prefactor: mean.exp(),
        residual: res,
        t_lo: window.0,
        t_hi: window.1,
        samples: ts.len(),
    })
}

/// Default windows: tail `[T/4, T]` for the power law, head
/// `[0, min(10, T/4)]` for the exponential.
pub fn default_windows(t_final: f64) -> ((f64, f64), (f64, f64)) {
    ((0.25 * t_final, t_final), (0.0, (0.25 * t_final).min(10.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTermFit {
    pub power: FitResult,
    pub exponential: FitResult,
}

/// Two-term model `b σ (t+1)^{−1/4} + b δ e^{−ν t}` fitted on disjoint
/// windows: the power law on the tail and the exponential on the head after
/// removing the extrapolated power law.
pub fn fit_two_term(t: &[f64], v: &[f64], tail: (f64, f64), head: (f64, f64)) -> Result<TwoTermFit> {
    let power = fit_decay(t, v, tail)?;
    let (ts, vs): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(v)
        .map(|(t, v)| (*t, v - power.prefactor * (t + 1.0).powf(power.exponent)))
        .filter(|(t, r)| *t >= head.0 && *t <= head.1 && *r > 0.0)
        .unzip();
    let exponential = fit_exponential(&ts, &vs, head)?;
    Ok(TwoTermFit { power, exponential })
}
