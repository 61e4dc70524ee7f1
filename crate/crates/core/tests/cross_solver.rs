use chemoglimm::config::RunConfig;
use chemoglimm::glimm::SamplingSequence;
use chemoglimm::run;

fn smooth(h: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.data.a = 0.03;
    c.data.b = 0.01;
    c.data.p = 2.0;
    c.mesh.x_half = 30.0;
    c.mesh.t_final = 5.0;
    c.mesh.h = h;
    c.oracle_dx = h / 4.0;
    c
}

#[test]
fn glimm_and_finite_volume_converge_together() {
    let l1: Vec<f64> = [0.08, 0.04, 0.02]
        .iter()
        .map(|&h| run::oracle_compare(&smooth(h)).unwrap().l1)
        .collect();
    assert!(l1[0] > l1[1] && l1[1] > l1[2], "{l1:?}");
    assert!(l1[2] < 2e-3, "{l1:?}");
}

#[test]
fn glimm_self_differences_shrink() {
    let mut c = smooth(0.08);
    c.convergence_h = vec![0.08, 0.04, 0.02];
    let rows = run::convergence(&c).unwrap();
    assert!(rows[1].l1_self_difference > rows[2].l1_self_difference, "{rows:?}");
    for w in rows.windows(2) {
        let r = w[0].flux_mismatch / w[1].flux_mismatch;
        assert!((3.0..5.0).contains(&r), "{rows:?}");
    }
}

#[test]
fn prng_and_van_der_corput_agree_on_mass() {
    let mut a = smooth(0.04);
    a.sampling = SamplingSequence::SeededPrng { seed: 3 };
    let b = smooth(0.04);
    let (ra, rb) = (run::simulate(&a).unwrap(), run::simulate(&b).unwrap());
    let (ma, mb) = (ra.records.last().unwrap().mass_v, rb.records.last().unwrap().mass_v);
    assert!((ma - ra.profile.mass).abs() < 1e-3 * ra.profile.mass.max(1e-3) + 1e-4, "{ma} {mb}");
    assert!((mb - rb.profile.mass).abs() < 1e-4, "{mb}");
}
