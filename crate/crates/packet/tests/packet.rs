use std::f64::consts::PI;

use modlab_nls::{c_x, c_y, run_nls, YConvention};
use modlab_packet::*;
use modlab_spectral::{norm, Dealias, Field, Grid, Multiplier, Norm, Rep, Transform, C64};
use proptest::prelude::*;

fn gaussian(g: Grid) -> Field {
    Field::from_fn(g, |x, y| C64::new((-(x * x + y * y) / 2.0).exp(), 0.0))
}

fn setup(eps: f64, depth: usize, n_slow: usize, n_fast: usize) -> PacketParams {
    let (slow, fast) = commensurate_grids(eps, 1.0, 5.0 * PI, n_slow, n_fast).unwrap();
    PacketParams::new(eps, 1.0, 1.0, 3, 1.0, 1.5, depth, slow, fast).unwrap()
}

fn rel(a: &Field, b: &Field) -> f64 {
    let tr = Transform::for_grid(a.grid());
    norm(&a.sub(b), Norm::L2, &tr) / norm(b, Norm::L2, &tr)
}

#[test]
fn dispersion_relation_examples() {
    assert_eq!(dispersion(1.0, 1.0), 1.0);
    assert!((dispersion(4.0, 1.0) - 2.0).abs() < 1e-15);
    assert!((dispersion(4.0, 3.0) - 8.0).abs() < 1e-13);
    for (k, p) in [(1.0, 1.0), (4.0, 1.0), (2.5, 3.0), (0.7, 0.5)] {
        let w = dispersion(k, p);
        assert!((w * w - f64::powf(k, p)).abs() <= 1e-14 * f64::powf(k, p));
    }
}

#[test]
fn group_velocity_examples() {
    assert!((group_velocity(4.0, 1.0) - 0.25).abs() < 1e-15);
    assert!((group_velocity(9.0, 1.0) - 1.0 / 6.0).abs() < 1e-15);
    for p in [0.5, 1.0, 1.5, 3.0, 4.0] {
        assert!((group_velocity(1.0, p) - p / 2.0).abs() < 1e-15);
    }
    for k in [0.3, 1.0, 2.0, 4.0, 9.0, 17.5] {
        for p in [0.5, 1.0, 1.7, 3.0] {
            let (a, b) = (group_velocity(k, p), group_velocity_quotient(k, p));
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "k={k} p={p}: {a} vs {b}");
        }
    }
}

#[test]
fn taylor_parts_match_dispersion_data() {
    for (k, p) in [(1.0, 1.0), (2.0, 3.0), (1.5, 0.5)] {
        let t = SymbolTaylor::new(k, p, 6);
        let w = dispersion(k, p);
        let wp = group_velocity(k, p);
        for (a, b) in [(0.3, -0.7), (1.1, 0.4), (-2.0, 0.0)] {
            assert!((t.part(0, a, b) - w * w).abs() < 1e-13);
            assert!((t.part(1, a, b) - 2.0 * w * wp * a).abs() < 1e-12);
            // The second part is the modulation operator plus the square of the drift.
            let l0 = c_x(k, p) * a * a + c_y(k, p, YConvention::Derived) * b * b;
            assert!((t.part(2, a, b) - wp * wp * a * a + l0).abs() < 1e-12, "k={k} p={p}");
        }
    }
}

#[test]
fn taylor_truncation_order() {
    // |(k + eps a, eps b)|^p against its degree-D truncation: error ~ eps^{D+1}.
    let (k, p, a, b) = (1.0, 1.0, 0.8, -0.6);
    let exact = |e: f64| Multiplier::SolidPower { p }.symbol(k + e * a, e * b);
    for deg in 2..=5 {
        let t = SymbolTaylor::new(k, p, deg);
        let (e1, e2) = (0.02, 0.01);
        let r1 = (exact(e1) - t.truncated(e1, a, b)).abs();
        let r2 = (exact(e2) - t.truncated(e2, a, b)).abs();
        let slope = (r1 / r2).log2();
        assert!((slope - (deg + 1) as f64).abs() < 0.15, "degree {deg}: slope {slope}");
    }
}

#[test]
fn hierarchy_operator_is_the_solver_symbol() {
    let p = setup(0.1, 2, 64, 128);
    let h = p.hierarchy();
    let sym = p.nls_params().unwrap().linear_symbol();
    assert_eq!(h.l0(), &sym[..]);
}

#[test]
fn params_validation() {
    let (slow, fast) = commensurate_grids(0.1, 1.0, 5.0 * PI, 64, 128).unwrap();
    assert!(PacketParams::new(0.3, 1.0, 1.0, 3, 1.0, 1.5, 1, slow, fast).is_err());
    assert!(PacketParams::new(0.1, 1.0, 1.0, 3, 1.0, 2.0, 1, slow, fast).is_err());
    assert!(matches!(PacketParams::new(0.1, 1.0, 1.0, 3, 1.0, 1.5, 7, slow, fast), Err(PacketError::DepthUnsupported(7))));
    let (_, other) = commensurate_grids(0.05, 1.0, 5.0 * PI, 64, 256).unwrap();
    assert!(matches!(PacketParams::new(0.1, 1.0, 1.0, 3, 1.0, 1.5, 1, slow, other), Err(PacketError::GridMismatch(_))));
    let p = PacketParams::new(0.1, 1.0, 1.0, 3, 1.0, 1.5, 5, slow, fast).unwrap();
    assert!(matches!(CorrectorSet::build(&p, &gaussian(slow), 0.01, 1), Err(PacketError::DepthUnsupported(5))));
    let p = p.with_experimental(true);
    let set = CorrectorSet::build(&p, &gaussian(slow), 0.004, 1).unwrap();
    assert_eq!(set.states.last().unwrap().a.len(), 5);
    assert!(set.states.iter().all(|s| s.a.iter().all(|f| f.is_finite())));
    let pp = setup(0.1, 1, 64, 128);
    assert_eq!(pp.m, 25);
    assert_eq!(pp.omega * pp.omega, f64::powf(pp.k, pp.p));
}

#[test]
fn leading_envelope_is_the_nls_trajectory() {
    let p = setup(0.1, 3, 64, 128).with_dt(4e-3).unwrap();
    let a0 = gaussian(p.slow);
    let traj = run_nls(&a0, p.nls_params().unwrap(), 0.1, 3).unwrap();
    let set = CorrectorSet::from_trajectory(&p, &traj).unwrap();
    assert_eq!(set.states.len(), traj.states.len());
    for (s, t) in set.states.iter().zip(&traj.states) {
        assert_eq!(s.t, t.t);
        assert_eq!(s.a[0], t.a);
    }
    // Off-checkpoint evaluation follows the same partial-step rule.
    let tt = 0.0537;
    assert_eq!(set.state_at(tt).unwrap()[0], traj.at(tt).unwrap());
    // Correctors start from zero.
    assert!(set.states[0].a[1..].iter().all(|f| f.max_abs() == 0.0));
    assert!(set.states.last().unwrap().a[1].max_abs() > 0.0);
}

#[test]
fn zero_envelope_gives_zero_everything() {
    let p = setup(0.1, 3, 64, 128).with_dt(1e-2).unwrap();
    let set = CorrectorSet::build(&p, &Field::zeros(p.slow, Rep::Physical), 0.05, 1).unwrap();
    for s in &set.states {
        assert!(s.a.iter().all(|f| f.max_abs() == 0.0));
    }
    let ev = set.assemble(2.0).unwrap();
    assert_eq!(ev.z.max_abs() + ev.zt.max_abs() + ev.ztt.max_abs(), 0.0);
    assert_eq!(set.residual(2.0).unwrap().max_abs(), 0.0);
    assert_eq!(set.residual_norm(2.0).unwrap(), 0.0);
}

#[test]
fn depth_one_has_no_correctors() {
    let p = setup(0.1, 1, 64, 128).with_dt(1e-2).unwrap();
    let set = CorrectorSet::build(&p, &gaussian(p.slow), 0.05, 1).unwrap();
    assert!(set.states.iter().all(|s| s.a.len() == 1));
}

#[test]
fn horizon_is_enforced() {
    let p = setup(0.1, 2, 64, 128).with_dt(1e-2).unwrap();
    let set = CorrectorSet::build(&p, &gaussian(p.slow), 0.05, 1).unwrap();
    assert!(set.assemble(4.0).is_ok());
    assert!(matches!(set.assemble(6.0), Err(PacketError::HorizonExceeded { .. })));
    assert!(matches!(set.residual(-1.0), Err(PacketError::HorizonExceeded { .. })));
}

#[test]
fn initial_packet_is_scaled_envelope_on_carrier() {
    let p = setup(0.1, 1, 64, 256);
    let a0 = gaussian(p.slow);
    let set = CorrectorSet::build(&p, &a0, 0.01, 1).unwrap();
    assert_eq!(set.dropped_modes(), 0);
    let ev = set.assemble(0.0).unwrap();
    let r = p.fast.nx / p.slow.nx;
    let mut worst: f64 = 0.0;
    for iy in 0..p.slow.ny {
        for ix in 0..p.slow.nx {
            let (fx, fy) = (ix * r, iy * r);
            let x = p.fast.x(fx);
            let expect = a0.at(ix, iy) * C64::from_polar(p.eps, p.k * x);
            worst = worst.max((ev.z.at(fx, fy) - expect).norm());
        }
    }
    assert!(worst < 1e-13, "{worst}");
}

#[test]
fn rescaled_norm_of_packet_is_envelope_norm() {
    let p = setup(0.1, 1, 64, 256);
    let a0 = gaussian(p.slow);
    let set = CorrectorSet::build(&p, &a0, 0.01, 1).unwrap();
    let z = set.assemble(0.0).unwrap().z;
    let fast_tr = Transform::for_grid(&p.fast);
    let lhs = norm(&z, Norm::HsEps { s: p.s, eps: p.eps, k: p.k }, &fast_tr);
    let rhs = norm(&a0, Norm::Hs(p.s), &Transform::for_grid(&p.slow));
    assert!((lhs - rhs).abs() <= 1e-8 * rhs, "{lhs} vs {rhs}");
}

#[test]
fn time_derivatives_match_finite_differences_linear() {
    let p = setup(0.1, 1, 64, 256).with_c_omega(0.0).with_dt(5e-3).unwrap();
    let a0 = Field::from_fn(p.slow, |x, y| C64::new((-(x * x + y * y) / 2.0).exp(), 0.0) * C64::from_polar(1.0, 0.5 * x));
    let set = CorrectorSet::build(&p, &a0, 0.3, 4).unwrap();
    let (t, h) = (17.3, 1e-4);
    let ev = set.assemble(t).unwrap();
    let zp = set.assemble(t + h).unwrap();
    let zm = set.assemble(t - h).unwrap();
    let mut fd1 = zp.z.sub(&zm.z);
    fd1.scale(C64::new(0.5 / h, 0.0));
    let mut fd2 = zp.z.add(&zm.z).sub(&ev.z.scaled(C64::new(2.0, 0.0)));
    fd2.scale(C64::new(1.0 / (h * h), 0.0));
    assert!(rel(&fd1, &ev.zt) < 1e-6, "z_t: {}", rel(&fd1, &ev.zt));
    assert!(rel(&fd2, &ev.ztt) < 1e-6, "z_tt: {}", rel(&fd2, &ev.ztt));
    let mut fd3 = zp.zt.sub(&zm.zt);
    fd3.scale(C64::new(0.5 / h, 0.0));
    assert!(rel(&fd3, &ev.ztt) < 1e-6);
}

#[test]
fn second_corrector_satisfies_its_equation() {
    // A^2(T) against the integral of the substituted right-hand side, by
    // Simpson's rule on fine samples.
    let t_end = 0.08;
    let p = setup(0.1, 2, 64, 128).with_dt(2e-3).unwrap();
    let a0 = gaussian(p.slow);
    let set = CorrectorSet::build(&p, &a0, t_end, 1).unwrap();
    let h = set.hierarchy();
    let tr = h.transform();
    let n = 40;
    let mut integral = Field::zeros(p.slow, Rep::Spectral);
    for j in 0..=n {
        let tj = t_end * j as f64 / n as f64;
        let st = set.state_at(tj).unwrap();
        let jets = h.jets(&st, 1);
        let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        integral.axpy(C64::new(w * t_end / (3.0 * n as f64), 0.0), &jets.a[1][1]);
    }
    let a2 = tr.to_spectral(&set.states.last().unwrap().a[1]);
    let defect = norm(&a2.sub(&integral), Norm::L2, tr);

    let fine = CorrectorSet::build(&p.clone().with_dt(1e-3).unwrap(), &a0, t_end, 1).unwrap();
    let a2f = tr.to_spectral(&fine.states.last().unwrap().a[1]);
    let self_conv = norm(&a2.sub(&a2f), Norm::L2, tr);
    assert!(self_conv > 0.0);
    assert!(defect <= 10.0 * self_conv, "defect {defect}, self-convergence {self_conv}");
}

#[test]
fn fast_grid_residual_matches_slow_route() {
    let p = setup(0.1, 2, 64, 256);
    let set = CorrectorSet::build(&p, &gaussian(p.slow), 0.02, 2).unwrap();
    let t = 1.3;
    let ev = set.assemble(t).unwrap();
    let fast_tr = Transform::for_grid(&p.fast);
    let dz = modlab_spectral::apply_multiplier(&ev.z, &Multiplier::SolidPower { p: p.p }, &fast_tr);
    let dealias = Dealias::new(&p.fast);
    let nl = dealias.power(&ev.z, p.q, p.c_omega * p.eps * p.eps * p.eps.powi(1 - p.q as i32));
    let fast_res = fast_tr.to_spectral(&ev.ztt).add(&dz).add(&nl);
    let slow_res = fast_tr.to_spectral(&set.residual(t).unwrap());
    let diff = norm(&fast_res.sub(&slow_res), Norm::L2, &fast_tr);
    let size = norm(&slow_res, Norm::L2, &fast_tr);
    assert!(diff <= 1e-6 * size, "diff {diff}, residual {size}");
    assert!((size - set.residual_norm(t).unwrap()).abs() <= 1e-12 * size);
}

#[test]
fn residual_orders_per_depth() {
    let eps_list = [0.1, 0.05, 0.025];
    let mut sups = vec![vec![]; 3];
    let t_end = 0.1;
    for &eps in &eps_list {
        let base = setup(eps, 3, 64, if eps < 0.04 { 512 } else { 256 }).with_dt(2e-3).unwrap();
        let full = CorrectorSet::build(&base, &gaussian(base.slow), t_end, 5).unwrap();
        for d in 1..=3 {
            let set = full.truncated(d).unwrap();
            let sup = (0..=2)
                .map(|i| set.residual_norm(t_end * i as f64 / 2.0 / (eps * eps)).unwrap())
                .fold(0.0, f64::max);
            sups[d - 1].push(sup);
        }
    }
    let slope = |v: &[f64]| {
        let x: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = v.iter().map(|e| e.ln()).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    };
    let s: Vec<f64> = sups.iter().map(|v| slope(v)).collect();
    for (d, sd) in s.iter().enumerate() {
        assert!((sd - (d + 3) as f64).abs() <= 0.4, "depth {}: slope {sd}", d + 1);
    }
    assert!(s[1] - s[0] >= 0.7 && s[2] - s[1] >= 0.7, "{s:?}");
}

#[test]
fn centroid_moves_against_group_velocity() {
    let p = setup(0.1, 1, 64, 256);
    let set = CorrectorSet::build(&p, &gaussian(p.slow), 0.1, 5).unwrap();
    let g = p.fast;
    let centroid = |f: &Field| {
        let (mut num, mut den) = (0.0, 0.0);
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let w = f.at(ix, iy).norm_sqr();
                num += w * g.x(ix);
                den += w;
            }
        }
        num / den
    };
    let t1 = 1.0 / p.eps;
    let c0 = centroid(&set.assemble(0.0).unwrap().z);
    let c1 = centroid(&set.assemble(t1).unwrap().z);
    let v = (c1 - c0) / t1;
    assert!((v + p.omega_p).abs() <= 0.02 * p.omega_p, "speed {v}");
}

#[test]
fn rebinding_reuses_the_trajectories() {
    let p = setup(0.1, 2, 64, 128).with_dt(1e-2).unwrap();
    let set = CorrectorSet::build(&p, &gaussian(p.slow), 0.05, 1).unwrap();
    let (slow, fast) = commensurate_grids(0.05, 1.0, 5.0 * PI, 64, 256).unwrap();
    assert!(slow.same_lattice(&p.slow));
    let q = p.clone().with_eps(0.05, slow, fast).unwrap();
    let other = set.for_eps(&q).unwrap();
    let direct = CorrectorSet::build(&q.clone().with_dt(1e-2).unwrap(), &gaussian(slow), 0.05, 1).unwrap();
    for (a, b) in other.states.iter().zip(&direct.states) {
        assert_eq!(a.a, b.a);
    }
    assert_eq!(other.residual_norm(3.0).unwrap(), direct.residual_norm(3.0).unwrap());
}

#[test]
fn dump_round_trip() {
    let p = setup(0.1, 2, 64, 128).with_dt(1e-2).unwrap();
    let set = CorrectorSet::build(&p, &gaussian(p.slow), 0.03, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.bin");
    set.dump(&path).unwrap();
    let back = read_dump(&path).unwrap();
    assert_eq!(back.ncomp, 2);
    assert_eq!(back.records.len(), set.states.len());
    assert!(back.grid.same_lattice(&p.slow));
    for ((t, fs), s) in back.records.iter().zip(&set.states) {
        assert_eq!(*t, s.t);
        for (f, g) in fs.iter().zip(&s.a) {
            for (x, y) in f.data().iter().zip(g.data()) {
                assert!((x - y).norm() <= 1e-7 * g.max_abs().max(1e-30));
            }
        }
    }
    let bytes = std::fs::read(&path).unwrap();
    let expect = 8 + 4 * 3 + 8 * 2 + 4 * 2 + set.states.len() * (8 + 2 * 64 * 64 * 8);
    assert_eq!(bytes.len(), expect);
    assert!(read_dump(&dir.path().join("missing.bin")).is_err());
}

fn embed_probe(vals: &[(f64, f64)], t: f64) -> (f64, f64) {
    let p = setup(0.1, 1, 16, 128).with_dt(0.5).unwrap();
    let f = Field::new(p.slow, vals.iter().map(|&(a, b)| C64::new(a, b)).collect(), Rep::Physical).unwrap();
    let set = CorrectorSet::build(&p, &f, 0.5, 1).unwrap();
    let e = set.embed(&f, t);
    let n_fast = norm(&e, Norm::L2, &Transform::for_grid(&p.fast));
    let n_slow = norm(&f, Norm::L2, &Transform::for_grid(&p.slow));
    (n_fast, n_slow)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn embedding_preserves_l2(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256), t in 0.0f64..50.0) {
        let (a, b) = embed_probe(&vals, t);
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn taylor_series_converges_to_symbol(k in 0.5f64..4.0, p in 0.3f64..4.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let t = SymbolTaylor::new(k, p, 8);
        let e = 1e-2 * k;
        let exact = Multiplier::SolidPower { p }.symbol(k + e * a, e * b);
        prop_assert!((t.truncated(e, a, b) - exact).abs() <= 1e-12 * exact);
    }
}
