//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits non-zero only if the harness itself breaks, or if
//! `ACCEPTANCE_STRICT=1` is set and any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use chemoglimm::config::RunConfig;
use chemoglimm::data::DataFamily;
use chemoglimm::diagnostics::{self, DiagnosticsConfig, DiagnosticsRecord, Tracker};
use chemoglimm::glimm::{self, GridSolution, MeshConfig, SamplingSequence};
use chemoglimm::linalg::{self, Mat2, Vec2};
use chemoglimm::model::{self, AsymptoticProfile, ModelParams};
use chemoglimm::oracle::{self, FVConfig};
use chemoglimm::riemann::{self, FrozenContext};
use chemoglimm::run;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} [{tag}] {name}: {detail}");
        if !pass {
            self.failed.push(n);
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng, radius: f64) -> Vec2 {
    loop {
        let w = [rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)];
        if linalg::norm1(w) < radius {
            return w;
        }
    }
}

fn rel_err(fd: &Mat2, exact: &Mat2) -> f64 {
    let scale = exact.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (fd[i][j] - exact[i][j]).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Central-difference Jacobian of `f` at `x`; column `j` is `∂f/∂x_j`.
fn jac(f: impl Fn(Vec2) -> Vec2, x: Vec2) -> Mat2 {
    let e = 1e-6;
    let mut m = [[0.0; 2]; 2];
    for j in 0..2 {
        let (mut p, mut q) = (x, x);
        p[j] += e;
        q[j] -= e;
        let (fp, fq) = (f(p), f(q));
        for i in 0..2 {
            m[i][j] = (fp[i] - fq[i]) / (2.0 * e);
        }
    }
    m
}

fn neg(m: Mat2) -> Mat2 {
    [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
}

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
const ZERO: Mat2 = [[0.0, 0.0], [0.0, 0.0]];

fn criterion_1(rep: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut exact_zero: f64 = 0.0;
    for _ in 0..100 {
        let u = random_state(&mut rng, 0.24);
        let ctx = FrozenContext::new(rng.gen_range(0.0..0.05));
        let r = model::eigenvector_matrix(u, ctx.theta).unwrap();
        let rinv = model::eigenvector_matrix_inverse(u, ctx.theta).unwrap();
        let p = |u: Vec2, g: Vec2| riemann::forward_curve(u, g, &ctx).unwrap();
        let q = |u: Vec2, g: Vec2| riemann::backward_curve(u, g, &ctx).unwrap();
        let om = |a: Vec2, b: Vec2| riemann::amplitude(a, b, &ctx).unwrap();
        let hm = |a: Vec2, z: Vec2| riemann::h_map(a, z, &ctx).unwrap();
        // P(Ū,0) = Q(Ū,0) = Ū, Ω(Ū,Ū) = 0, H(Ū,0) = 0
        for v in [linalg::sub(p(u, [0.0; 2]), u), linalg::sub(q(u, [0.0; 2]), u), om(u, u), hm(u, [0.0; 2])] {
            exact_zero = exact_zero.max(linalg::norm_inf(v));
        }
        let checks = [
            (jac(|x| p(x, [0.0; 2]), u), IDENTITY),
            (jac(|x| q(x, [0.0; 2]), u), IDENTITY),
            (jac(|g| p(u, g), [0.0; 2]), r),
            (jac(|g| q(u, g), [0.0; 2]), neg(r)),
            (jac(|x| om(x, u), u), neg(rinv)),
            (jac(|x| om(u, x), u), rinv),
            (jac(|x| hm(x, [0.0; 2]), u), ZERO),
            (jac(|z| hm(u, z), [0.0; 2]), rinv),
        ];
        for (fd, exact) in &checks {
            worst = worst.max(rel_err(fd, exact));
        }
    }
    let mut round = 0.0f64;
    for _ in 0..1000 {
        let ul = random_state(&mut rng, 0.2);
        let ur = linalg::add(ul, [rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)]);
        let ctx = FrozenContext::new(rng.gen_range(0.0..0.05));
        let g = riemann::amplitude(ul, ur, &ctx).unwrap();
        let back = riemann::forward_curve(ul, g, &ctx).unwrap();
        round = round.max(linalg::norm_inf(linalg::sub(back, ur)));
        let g2 = riemann::amplitude(ul, back, &ctx).unwrap();
        round = round.max(linalg::norm_inf(linalg::sub(g2, g)));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-5 && exact_zero <= 1e-12 && round <= 1e-9 && secs < 10.0;
    rep.line(
        1,
        "Riemann calculus identities",
        pass,
        format!("max rel FD error {worst:.2e} (<= 1e-5), identities at zero {exact_zero:.1e}, P/Omega round trip {round:.2e} (<= 1e-9), {secs:.1}s (< 10s)"),
    );
}

fn criterion_2(rep: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut shocks, mut rarefactions) = (0usize, 0usize);
    let mut max_rh: f64 = 0.0;
    let mut lax_bad = 0usize;
    let mut mono_bad = 0usize;
    for _ in 0..1000 {
        let ul = random_state(&mut rng, 0.2);
        let ur = linalg::add(ul, [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)]);
        if linalg::norm1(ur) >= 0.25 {
            continue;
        }
        let theta = rng.gen_range(0.0..0.05);
        let fan = riemann::solve_riemann(ul, ur, &FrozenContext::new(theta)).unwrap();
        for w in &fan.waves {
            if w.is_shock() {
                shocks += 1;
                max_rh = max_rh.max(w.rh_residual(theta));
                let s = w.speed_lo;
                let (a, b) = (riemann::char_speed(w.family, w.left, theta), riemann::char_speed(w.family, w.right, theta));
                if !(a > s && s > b) {
                    lax_bad += 1;
                }
            } else if w.is_rarefaction() {
                rarefactions += 1;
                let mut last = f64::NEG_INFINITY;
                for i in 0..=32 {
                    let xi = w.speed_lo + (w.speed_hi - w.speed_lo) * i as f64 / 32.0;
                    let lam = riemann::char_speed(w.family, riemann::sample_fan(&fan, xi), theta);
                    if lam < last - 1e-14 {
                        mono_bad += 1;
                        break;
                    }
                    last = lam;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = max_rh <= 1e-10 && lax_bad == 0 && mono_bad == 0 && shocks > 0 && rarefactions > 0 && secs < 30.0;
    rep.line(
        2,
        "shock admissibility",
        pass,
        format!("{shocks} shocks, max RH residual {max_rh:.2e} (<= 1e-10), {lax_bad} Lax violations; {rarefactions} rarefactions, {mono_bad} non-monotone; {secs:.1}s (< 30s)"),
    );
}

fn criterion_3(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut non_monotone = 0usize;
    let t = 0.2;
    for _ in 0..20 {
        let ul = random_state(&mut rng, 0.15);
        let ur = loop {
            let d = [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)];
            if linalg::norm1(d) <= 0.1 {
                break linalg::add(ul, d);
            }
        };
        let fan = riemann::solve_riemann(ul, ur, &FrozenContext::new(0.0)).unwrap();
        let mut errs = Vec::new();
        for dx in [2e-3, 1e-3, 5e-4] {
            let cfg = FVConfig::new(dx, 0.6, t);
            let s = oracle::fv_solve(
                |x| if x < 0.0 { ul } else { ur },
                AsymptoticProfile::zero(),
                &cfg,
                &ModelParams::homogeneous(),
            )
            .unwrap();
            let exact: Vec<Vec2> = s[0].x.iter().map(|x| riemann::sample_fan(&fan, x / t)).collect();
            errs.push(oracle::l1_difference(&s[0].w, &exact, dx));
        }
        worst = worst.max(errs[1]);
        if !(errs[0] > errs[1] && errs[1] > errs[2]) {
            non_monotone += 1;
        }
    }
    rep.line(
        3,
        "oracle equivalence",
        worst <= 2e-3 && non_monotone == 0,
        format!("max L1 at dx=1e-3 {worst:.2e} (<= 2e-3), {non_monotone}/20 non-monotone over dx = 2e-3, 1e-3, 5e-4"),
    );
}

fn smooth_config() -> RunConfig {
    let mut c = RunConfig::default();
    c.data.family = DataFamily::RationalBump;
    c.data.a = 0.05;
    c.data.b = 0.02;
    c.data.p = 2.0;
    c.mesh.x_half = 50.0;
    c
}

fn criterion_4(rep: &mut Report) {
    let mut c = smooth_config();
    let fm: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            c.mesh.h = h;
            run::initial_flux_mismatch(&run::prepare(&c).unwrap().solution).unwrap()
        })
        .collect();
    let ratios = [fm[0] / fm[1], fm[1] / fm[2]];
    rep.line(
        4,
        "flux-mismatch order",
        ratios.iter().all(|r| (3.0..=5.0).contains(r)),
        format!("mismatch {:.3e}, {:.3e}, {:.3e}; ratios {:.3}, {:.3} (in [3, 5])", fm[0], fm[1], fm[2], ratios[0], ratios[1]),
    );
}

struct Tracked {
    records: Vec<DiagnosticsRecord>,
    last: GridSolution,
    mass: f64,
    zero_mass_excess: f64,
    shocks: usize,
}

fn tracked(cfg: &RunConfig) -> Tracked {
    let prep = run::prepare(cfg).unwrap();
    let mut tracker = Tracker::new(cfg.diag);
    let mut shocks = 0usize;
    let last = glimm::advance_with(prep.solution, cfg.sampling, cfg.mesh.n_strips(), cfg.boundary_tol, |sol, out, _| {
        shocks += out
            .fans
            .iter()
            .flat_map(|f| f.fan.waves.iter())
            .filter(|w| w.is_shock() && w.strength() > 1e-10)
            .count();
        tracker.observe(sol, out)
    })
    .unwrap();
    Tracked {
        records: tracker.records,
        last,
        mass: prep.profile.mass,
        zero_mass_excess: tracker.zero_mass_excess,
        shocks,
    }
}

fn criteria_5_6(rep: &mut Report) {
    let mut c = smooth_config();
    c.mesh.t_final = 50.0;
    let hs = [0.02, 0.01, 0.005];
    let mut drift = Vec::new();
    let mut excess: f64 = 0.0;
    let mut tol = Vec::new();
    let mut shocks = 0;
    for &h in &hs {
        c.mesh.h = h;
        let r = tracked(&c);
        let (mass_v, _) = diagnostics::masses(&r.last);
        drift.push((mass_v - r.mass).abs());
        excess = excess.max(r.zero_mass_excess);
        tol.push(r.records.iter().map(|r| r.entropy_slack).fold(0.0, f64::max));
        shocks += r.shocks;
    }
    let dr = [drift[0] / drift[1], drift[1] / drift[2]];
    rep.line(
        5,
        "conservation",
        dr.iter().all(|r| *r >= 1.5) && excess <= 1e-8,
        format!(
            "|mass_v(50) - M| = {:.3e}, {:.3e}, {:.3e} at h = 0.02, 0.01, 0.005; ratios {:.2}, {:.2} (>= 1.5); max(|int w1| - drift) {excess:.1e} (<= 1e-8)",
            drift[0], drift[1], drift[2], dr[0], dr[1]
        ),
    );
    let tr = [tol[0] / tol[1], tol[1] / tol[2]];
    rep.line(
        6,
        "entropy budget",
        shocks > 0 && tr.iter().all(|r| *r >= 1.5),
        format!(
            "tol(h) = {:.3e}, {:.3e}, {:.3e}; ratios {:.2}, {:.2} (>= 1.5); {shocks} shock waves summed over all strips",
            tol[0], tol[1], tol[2], tr[0], tr[1]
        ),
    );
}

fn homogeneous_run() -> (Vec<DiagnosticsRecord>, String) {
    let mesh = MeshConfig {
        h: 0.01,
        lambda_cfl: 2.0,
        x_half: 6.0,
        t_final: 3.0,
    };
    let w0 = |x: f64| {
        if x < -1.0 {
            [0.0, 0.0]
        } else if x < 1.0 {
            [0.05, -0.03]
        } else {
            [0.015, 0.01]
        }
    };
    let sol = glimm::init_solution(w0, AsymptoticProfile::zero(), mesh, ModelParams::homogeneous()).unwrap();
    let cfg = DiagnosticsConfig {
        kappa: 20.0,
        ..Default::default()
    };
    let (_, rec) = glimm::advance(sol, SamplingSequence::VanDerCorput, mesh.n_strips(), cfg).unwrap();
    let mut buf = Vec::new();
    diagnostics::write_csv(&mut buf, "homogeneous", &rec).unwrap();
    (rec, String::from_utf8(buf).unwrap())
}

fn criterion_7(rep: &mut Report) -> String {
    let (rec, csv) = homogeneous_run();
    let n: Vec<f64> = rec.iter().map(|r| r.n).collect();
    let steps = n.len() - 1;
    let ok = n.windows(2).filter(|w| w[1] <= w[0] + 1e-10).count();
    let frac = ok as f64 / steps as f64;
    let interactions = n.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
    rep.line(
        7,
        "Glimm functional",
        frac >= 0.95 && n[steps] <= n[0],
        format!(
            "{ok}/{steps} strips nonincreasing ({:.1}%, >= 95%), N_0 = {:.6e}, N_last = {:.6e}, {interactions} strict decreases",
            100.0 * frac,
            n[0],
            n[steps]
        ),
    );
    csv
}

/// Out-of-sample envelope: `b` is the smallest constant bounding the series
/// by `b (t+1)^(-1/4)` on the first half of the window; the check counts
/// violations on the second half.
fn envelope(t: &[f64], v: &[f64], window: (f64, f64)) -> (f64, usize, usize) {
    let mid = 0.5 * (window.0 + window.1);
    let b = t
        .iter()
        .zip(v)
        .filter(|(t, _)| **t >= window.0 && **t <= mid)
        .map(|(t, v)| v * (t + 1.0).powf(0.25))
        .fold(0.0, f64::max);
    let tail: Vec<_> = t.iter().zip(v).filter(|(t, _)| **t > mid && **t <= window.1).collect();
    let bad = tail.iter().filter(|(t, v)| **v > b * (**t + 1.0).powf(-0.25)).count();
    (b, bad, tail.len())
}

fn decay_config(scale: f64, h: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.data.a = scale * 0.05 / PI;
    c.data.b = scale * 0.0262;
    c.mesh.h = h;
    c
}

/// Tail exponent of `TV v + TV ũ` from the finite-volume solver on the same
/// datum, for context next to the Glimm fit.
fn fv_tv_exponent(c: &RunConfig, out: &run::SimulationOutput, window: (f64, f64)) -> f64 {
    let dx = 0.05;
    let mut cfg = FVConfig::new(dx, c.mesh.x_half, c.mesh.t_final);
    cfg.snapshot_times = (0..=c.mesh.t_final as usize).map(|i| i as f64).collect();
    let prof = out.profile;
    let snaps = oracle::fv_solve(
        |x| {
            let p = out.data.primitive(x);
            [p[0] - prof.theta(x, 0.0), p[1]]
        },
        prof,
        &cfg,
        &c.model,
    )
    .unwrap();
    let tv = |s: &oracle::FvSnapshot| {
        let v: Vec<f64> = s.w.iter().zip(&s.x).map(|(w, x)| w[0] + prof.theta(*x, s.t)).collect();
        let tv_v: f64 = v.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
        let tv_u: f64 = s.w.windows(2).map(|p| (p[1][1] - p[0][1]).abs()).sum();
        tv_v + tv_u
    };
    let t: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let v: Vec<f64> = snaps.iter().map(tv).collect();
    diagnostics::fit_decay(&t, &v, window).unwrap().exponent
}

fn criteria_8_9(rep: &mut Report) {
    let c = decay_config(1.0, 0.01);
    let out = run::simulate(&c).unwrap();
    let window = (50.0, 200.0);
    let (t, tv) = run::series(&out.records, |r| r.tv_vu);
    let (_, l1) = run::series(&out.records, |r| r.l1_v_theta + r.l1_u);
    let fit = diagnostics::fit_decay(&t, &tv, window).unwrap();
    let reference = fv_tv_exponent(&c, &out, window);
    let (b, bad, n) = envelope(&t, &tv, window);
    let frac = bad as f64 / n as f64;
    rep.line(
        8,
        "TV decay",
        (-0.50..=-0.15).contains(&fit.exponent) && fit.accepted() && frac <= 0.02,
        format!(
            "M = {:.5}, delta = {:.4}, sigma = {:.4}; TV exponent {:.4} (in [-0.50, -0.15]), residual {:.3}; envelope b = {b:.3e}, {bad}/{n} violations ({:.2}%, <= 2%); finite-volume reference exponent {reference:.4}",
            out.profile.mass,
            out.data.delta,
            out.data.sigma,
            fit.exponent,
            fit.residual,
            100.0 * frac
        ),
    );
    let fit = diagnostics::fit_decay(&t, &l1, window).unwrap();
    let (c_sigma, bad, n) = envelope(&t, &l1, window);
    let frac = bad as f64 / n as f64;
    rep.line(
        9,
        "L1 convergence to theta",
        fit.exponent <= -0.15 && fit.accepted() && frac <= 0.02,
        format!(
            "L1 exponent {:.4} (<= -0.15), residual {:.3}; envelope c = {:.3e}, {bad}/{n} violations ({:.2}%, <= 2%)",
            fit.exponent,
            fit.residual,
            c_sigma / out.data.sigma,
            100.0 * frac
        ),
    );
}

fn criterion_10(rep: &mut Report) {
    let window = (50.0, 200.0);
    let stats: Vec<(f64, f64, f64)> = [1.0, 0.5]
        .iter()
        .map(|&s| {
            let out = run::simulate(&decay_config(s, 0.02)).unwrap();
            let (t, l1) = run::series(&out.records, |r| r.l1_v_theta + r.l1_u);
            let pref = diagnostics::fit_prefactor(&t, &l1, window, -0.25).unwrap().prefactor;
            let sup = out.records.iter().map(|r| r.weighted_l2).fold(0.0, f64::max);
            (out.data.sigma, pref, sup)
        })
        .collect();
    let r_pref = stats[1].1 / stats[0].1;
    let r_l2 = stats[1].2 / stats[0].2;
    let pass = (r_pref - 0.5).abs() <= 0.3 * 0.5 && (r_l2 - 0.25).abs() <= 0.4 * 0.25;
    rep.line(
        10,
        "sigma scaling",
        pass,
        format!(
            "sigma {:.4} -> {:.4}; L1 prefactor ratio {r_pref:.3} (0.5 +- 30%); sup weighted L2 ratio {r_l2:.3} (0.25 +- 40%)",
            stats[0].0, stats[1].0
        ),
    );
}

fn seeded_csv() -> String {
    let mut c = smooth_config();
    c.mesh.h = 0.02;
    c.mesh.t_final = 10.0;
    c.sampling = SamplingSequence::SeededPrng { seed: 11 };
    let out = run::simulate(&c).unwrap();
    let mut buf = Vec::new();
    diagnostics::write_csv(&mut buf, &run::header(&c), &out.records).unwrap();
    run::write_snapshot(&mut buf, "", &run::snapshot(&out.last)).unwrap();
    String::from_utf8(buf).unwrap()
}

fn criterion_11(rep: &mut Report, homogeneous_csv: &str) {
    let (_, again) = homogeneous_run();
    let (a, b) = (seeded_csv(), seeded_csv());
    let same = again == homogeneous_csv && a == b;
    rep.line(
        11,
        "determinism",
        same,
        format!(
            "van der Corput rerun identical: {}; seeded rerun identical: {} ({} bytes)",
            again == homogeneous_csv,
            a == b,
            a.len()
        ),
    );
}

fn main() {
    let start = Instant::now();
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let want = |n: usize| only.as_ref().map_or(true, |o| o.contains(&n));
    let mut rep = Report { failed: Vec::new() };
    if want(1) {
        criterion_1(&mut rep);
    }
    if want(2) {
        criterion_2(&mut rep);
    }
    if want(3) {
        criterion_3(&mut rep);
    }
    if want(4) {
        criterion_4(&mut rep);
    }
    if want(5) || want(6) {
        criteria_5_6(&mut rep);
    }
    let mut csv = None;
    if want(7) {
        csv = Some(criterion_7(&mut rep));
    }
    if want(8) || want(9) {
        criteria_8_9(&mut rep);
    }
    if want(10) {
        criterion_10(&mut rep);
    }
    if want(11) {
        let csv = csv.unwrap_or_else(|| homogeneous_run().1);
        criterion_11(&mut rep, &csv);
    }
    println!(
        "acceptance: {} failed {:?}, {:.0}s",
        rep.failed.len(),
        rep.failed,
        start.elapsed().as_secs_f64()
    );
    if !rep.failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
