use modlab_harness::*;
use modlab_packet::group_velocity;
use modlab_spectral::{norm, Grid, Norm, Transform};
use proptest::prelude::*;

#[test]
fn fit_exact_power_law() {
    let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&e| (e, e * e * e)).collect();
    let f = fit_loglog_order(&pts).unwrap();
    assert!((f.slope - 3.0).abs() < 1e-12, "{}", f.slope);
    assert!(f.intercept.abs() < 1e-11);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    assert_eq!(f.points, pts);
}

#[test]
fn fit_constant_data() {
    let f = fit_loglog_order(&[(0.1, 2.0), (0.05, 2.0), (0.02, 2.0)]).unwrap();
    assert_eq!(f.slope, 0.0);
    assert!((f.intercept - 2f64.ln()).abs() < 1e-15);
    assert_eq!(f.r_squared, 1.0);
}

#[test]
fn fit_noisy_power_law() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<(f64, f64)> = (0..12)
        .map(|i| {
            let e = 0.2 * 0.8f64.powi(i);
            (e, 5.0 * e.powf(2.5) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0)))
        })
        .collect();
    let f = fit_loglog_order(&pts).unwrap();
    assert!((f.slope - 2.5).abs() <= 0.05, "{}", f.slope);
}

#[test]
fn fit_rejects_degenerate_input() {
    assert!(matches!(fit_loglog_order(&[(0.1, 1.0), (0.05, 0.5)]), Err(HarnessError::DegenerateFit(_))));
    assert!(matches!(fit_loglog_order(&[(0.1, 1.0), (0.05, 0.0), (0.02, 1.0)]), Err(HarnessError::DegenerateFit(_))));
    assert!(matches!(fit_loglog_order(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]), Err(HarnessError::DegenerateFit(_))));
    let lin = fit_linear(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
    assert!((lin.slope - 2.0).abs() < 1e-15 && (lin.intercept - 1.0).abs() < 1e-15);
}

#[test]
fn empty_table_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    emit_csv(&Table::new(&SWEEP_COLUMNS), &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "epsilon,sup_r_hse,sup_rt_hse,sup_rtt_hse\n");
    assert!(read_csv(&path).unwrap().rows.is_empty());
}

#[test]
fn io_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let bad = blocker.join("out.csv");
    let err = emit_csv(&Table::new(&["a"]), &bad).unwrap_err();
    assert!(err.to_string().contains("out.csv") || err.to_string().contains("file"), "{err}");
}

#[test]
fn manifest_hash_tracks_config() {
    let a = SweepConfig::reference(vec![0.1, 0.05], 0.25);
    let mut b = a.clone();
    let h = |c: &SweepConfig| Manifest::new("sweep-remainder", c).unwrap().config_hash;
    assert_eq!(h(&a), h(&b));
    b.samples += 1;
    assert_ne!(h(&a), h(&b));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let mut m = Manifest::new("sweep-remainder", &a).unwrap();
    m.time("total", std::time::Duration::from_millis(1500));
    emit_manifest(&m, &path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["config_hash"], h(&a));
    assert_eq!(v["config"]["epsilons"][1], 0.05);
    assert!(v["versions"]["modlab-harness"].is_string());
    assert_eq!(v["timings_s"][0][1], 1.5);
}

#[test]
fn config_invariants() {
    assert!(SweepConfig::reference(vec![0.1, 0.05], 0.25).validate().is_ok());
    for bad in [vec![0.05, 0.1], vec![0.1, 0.1], vec![], vec![0.1, -0.05]] {
        assert!(matches!(SweepConfig::reference(bad, 0.25).validate(), Err(HarnessError::BadConfig(_))));
    }
    assert!(SweepConfig::reference(vec![0.1], 0.0).validate().is_err());
    let mut c = SweepConfig::reference(vec![0.1], 0.25);
    c.profile = Profile::Ring { radius: 1.0, width: 0.0 };
    assert!(c.validate().is_err());
    let text = r#"{"epsilons":[0.1],"horizon_t":0.5,"profile":{"kind":"ring","radius":2.0,"width":0.5}}"#;
    let parsed: SweepConfig = serde_json::from_str(text).unwrap();
    assert_eq!(parsed.depth, 3);
    assert_eq!(parsed.profile, Profile::Ring { radius: 2.0, width: 0.5 });
    assert_eq!(parsed.n_fast_for(0.025), 512);
}

#[test]
fn profiles_are_analytic() {
    let g = Grid::new(64, 64, 16.0, 16.0).unwrap();
    let ga = Profile::Gaussian { sigma: 1.0, chirp: 0.0 }.sample(g);
    // ||e^{-r^2/2}||^2 = pi
    let l2 = norm(&ga, Norm::L2, &Transform::for_grid(&g));
    assert!((l2 * l2 - std::f64::consts::PI).abs() < 1e-12);
    let ring = Profile::Ring { radius: 3.0, width: 0.5 }.sample(g);
    assert!((ring.at(0, 0).re - (-18.0f64).exp()).abs() < 1e-20);
    let i = (3.0 / g.dx()) as usize;
    assert!((ring.at(i, 0).re - 1.0).abs() < 1e-12);
}

#[test]
fn envelope_speed_closed_form() {
    assert_eq!(group_velocity(4.0, 1.0), 0.25);
    let r = dispersion_check(4.0, 1.0, 3.7).unwrap();
    assert_eq!((r.omega, r.omega_p), (2.0, 0.25));
    assert!(r.phase_rel < 1e-10, "{}", r.phase_rel);
}

#[test]
fn linear_envelope_norm_is_constant() {
    let mut c = GrowthConfig::new(3.0, 3, 1.0);
    c.n = 64;
    c.nonlinear = false;
    c.profile = Profile::Gaussian { sigma: 1.0, chirp: 0.4 };
    let out = norm_growth_experiment(&c).unwrap();
    assert!(out.max_rel_change <= 1e-10, "{}", out.max_rel_change);
}

#[test]
fn growth_functional_of_real_data_is_hs_squared() {
    let mut c = GrowthConfig::new(3.0, 3, 0.1);
    c.n = 64;
    let out = norm_growth_experiment(&c).unwrap();
    let (hs, g) = (out.trace.rows[0][1], out.trace.rows[0][2]);
    assert!((g - hs * hs).abs() <= 1e-12 * hs * hs, "{g} vs {}", hs * hs);
}

#[test]
fn defocusing_growth_trace_is_bounded() {
    let mut c = GrowthConfig::new(3.0, 3, 5.0);
    c.n = 64;
    c.dt = 5e-3;
    let out = norm_growth_experiment(&c).unwrap();
    let hs = out.trace.column("hs_norm").unwrap();
    assert!(hs.iter().all(|v| v.is_finite() && *v < 10.0 * hs[0]));
    assert!(out.fit.as_ref().unwrap().slope.is_finite());
}

#[test]
fn single_eps_sweep_has_one_row() {
    let mut cfg = SweepConfig::reference(vec![0.1], 0.02);
    cfg.depth = 1;
    cfg.n_slow = 64;
    cfg.dt = 5e-3;
    cfg.samples = 4;
    let out = remainder_sweep(&cfg).unwrap();
    assert!(out.fits.is_none());
    let t = out.sup_table();
    assert_eq!(t.rows.len(), 1);
    let run = &out.runs[0];
    assert_eq!(run.trace.len(), 5);
    assert!(run.trace.iter().all(|d| d.row_is_finite()));
    // r(0) is the filter leakage of the packet and nothing else.
    assert!(run.trace[0].r_hse < 1e-4 && run.trace[0].rt_hse < 1e-4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    emit_csv(&run.trace_table(), &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.columns, TRACE_COLUMNS);
    assert_eq!(back.rows, run.trace_table().rows);
}

#[test]
fn sweeps_are_deterministic() {
    let mut cfg = SweepConfig::reference(vec![0.1, 0.08], 0.01);
    cfg.depth = 1;
    cfg.n_slow = 64;
    cfg.dt = 5e-3;
    cfg.samples = 2;
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for i in 0..2 {
        let p = dir.path().join(format!("s{i}.csv"));
        emit_csv(&remainder_sweep(&cfg).unwrap().sup_table(), &p).unwrap();
        texts.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(rows in proptest::collection::vec(proptest::collection::vec(-1e300f64..1e300, 3), 0..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&FIT_COLUMNS);
        for r in &rows {
            t.push(r.clone());
        }
        emit_csv(&t, &path).unwrap();
        prop_assert_eq!(read_csv(&path).unwrap(), t);
    }

    #[test]
    fn r_squared_in_unit_interval(pts in proptest::collection::vec((1e-3f64..1.0, 1e-6f64..1e3), 3..10)) {
        if let Ok(f) = fit_loglog_order(&pts) {
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }
    }
}
