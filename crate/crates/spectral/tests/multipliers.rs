use std::f64::consts::PI;

use modlab_spectral::{
    apply_multiplier, in_mode_ball, inner_product, make_grid, norm, Dealias, Field, Grid, Norm, Rep, Symbol, Transform, C64,
};
use proptest::prelude::*;

fn packet_grids(eps: f64, n: usize) -> (Grid, Grid) {
    // fast grid with k = 1 on index 32; slow grid is the eps-image
    let lx = 64.0 * PI;
    let fast = make_grid(n, n, lx, lx, 1.0).unwrap();
    let slow = Grid::new(n, n, eps * lx, eps * lx).unwrap();
    (fast, slow)
}

fn envelope(slow: Grid) -> Field {
    Field::from_fn(slow, |x, y| C64::new(1.0, 0.3 * x - 0.1 * y) * (-(x * x + y * y) / 2.0).exp())
}

fn carry(fast: Grid, slow_vals: &Field) -> Field {
    let k = fast.carrier().unwrap();
    let mut f = Field::from_fn(fast, |x, _| C64::from_polar(1.0, k * x));
    for (v, a) in f.data_mut().iter_mut().zip(slow_vals.data()) {
        *v *= a;
    }
    f
}

#[test]
fn mode_filter_keeps_carrier_plane_wave() {
    let (fast, _) = packet_grids(0.1, 128);
    let tr = Transform::for_grid(&fast);
    let w = Field::from_fn(fast, |x, _| C64::from_polar(1.0, x));
    let out = tr.to_physical(&apply_multiplier(&w, &Symbol::ModeFilter { k: 1.0 }, &tr));
    for (a, b) in out.data().iter().zip(w.data()) {
        assert!((a - b).norm() < 1e-13);
    }
}

#[test]
fn solid_power_on_plane_wave() {
    let lx = 2.0 * PI * 4.0;
    let g = make_grid(64, 16, lx, 5.0, 2.0 * PI * 6.0 / lx).unwrap();
    let k = g.carrier().unwrap();
    let tr = Transform::for_grid(&g);
    let w = Field::from_fn(g, |x, _| C64::from_polar(1.0, k * x));
    for p in [0.5, 1.0, 3.0] {
        let out = tr.to_physical(&apply_multiplier(&w, &Symbol::SolidPower { p }, &tr));
        let kp = k.powf(p);
        for (a, b) in out.data().iter().zip(w.data()) {
            assert!((a - b * kp).norm() < 1e-12 * kp);
        }
    }
}

#[test]
fn rescaled_bessel_fixes_carrier() {
    let (fast, _) = packet_grids(0.05, 128);
    let tr = Transform::for_grid(&fast);
    let w = Field::from_fn(fast, |x, _| C64::from_polar(1.0, x));
    let out = tr.to_physical(&apply_multiplier(&w, &Symbol::RescaledBessel { s: 2.5, eps: 0.05, k: 1.0 }, &tr));
    for (a, b) in out.data().iter().zip(w.data()) {
        assert!((a - b).norm() < 1e-10, "{a} {b}");
    }
}

#[test]
fn semigroup_symbols() {
    let t = 0.7;
    assert_eq!(Symbol::SemiSinc { p: 1.0, t }.symbol(0.0, 0.0), t);
    assert_eq!(Symbol::SemiCos { p: 1.0, t }.symbol(0.0, 0.0), 1.0);
    assert_eq!(Symbol::SemiDSin { p: 1.0, t }.symbol(0.0, 0.0), 0.0);
    let (xi1, xi2) = (1.3, -0.4);
    let w = (xi1 * xi1 + xi2 * xi2 as f64).powf(0.25);
    assert!((Symbol::SemiSinc { p: 1.0, t }.symbol(xi1, xi2) - (w * t).sin() / w).abs() < 1e-15);
    assert!((Symbol::SemiDSin { p: 1.0, t }.symbol(xi1, xi2) + w * (w * t).sin()).abs() < 1e-15);
}

#[test]
fn mode_filter_symbol_is_indicator() {
    let (fast, _) = packet_grids(0.1, 128);
    let tab = Symbol::ModeFilter { k: 1.0 }.tabulate(&fast);
    assert!(tab.iter().all(|&v| v == 0.0 || v == 1.0));
    let inside = tab.iter().filter(|&&v| v == 1.0).count();
    // lattice points with (jx-32)^2 + jy^2 <= 16^2
    let mut count = 0;
    for jx in -64i64..64 {
        for jy in -64i64..64 {
            if (jx - 32) * (jx - 32) + jy * jy <= 256 {
                count += 1;
            }
        }
    }
    assert_eq!(inside, count);
    assert!(in_mode_ball(&fast, 1.0, 16, 0));
    assert!(in_mode_ball(&fast, 1.0, 48, 0));
    assert!(in_mode_ball(&fast, 1.0, 32, 16));
    assert!(!in_mode_ball(&fast, 1.0, 15, 0));
    assert!(!in_mode_ball(&fast, 1.0, 49, 0));
}

#[test]
fn packet_commutation_identity() {
    let eps = 0.1;
    let (fast, slow) = packet_grids(eps, 128);
    let (trf, trs) = (Transform::for_grid(&fast), Transform::for_grid(&slow));
    let a = envelope(slow);
    let packet = carry(fast, &a);
    for (fast_sym, slow_sym) in [
        (Symbol::RescaledBessel { s: 1.5, eps, k: 1.0 }, Symbol::BesselPower { s: 1.5 }),
        (Symbol::RescaledSolid { s: 2.0, eps, k: 1.0 }, Symbol::SolidPower { p: 2.0 }),
    ] {
        let lhs = trf.to_physical(&apply_multiplier(&packet, &fast_sym, &trf));
        let ma = trs.to_physical(&apply_multiplier(&a, &slow_sym, &trs));
        let rhs = carry(fast, &ma);
        let scale = rhs.max_abs();
        let err = lhs.data().iter().zip(rhs.data()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(err < 1e-8 * scale, "{fast_sym:?}: {err:e}");
    }
    // norm form of the same identity
    let hse = norm(&packet, Norm::HsEps { s: 2.0, eps, k: 1.0 }, &trf);
    let hs = norm(&a, Norm::Hs(2.0), &trs) / eps;
    assert!((hse - hs).abs() < 1e-8 * hs);
}

#[test]
fn mode_filter_leakage_rate() {
    // Profile with |F^(eta)| = <eta>^{-(m+1)}, the sharp H^m threshold. Gaussian
    // profiles leak at exp(-c/eps^2), far faster than any power.
    let n = 512;
    let lx = 2.0 * PI * 64.0;
    let fast = make_grid(n, n, lx, lx, 1.0).unwrap();
    let tr = Transform::for_grid(&fast);
    let filter = Symbol::ModeFilter { k: 1.0 }.tabulate(&fast);
    for m in [2.0f64, 3.0, 4.0] {
        let epss = [0.1, 0.05, 0.025];
        let mut points = vec![];
        for &eps in &epss {
            let mut data = vec![C64::new(0.0, 0.0); fast.len()];
            for iy in 0..n {
                for ix in 0..n {
                    let e1 = (fast.xi1(ix) - 1.0) / eps;
                    let e2 = fast.xi2(iy) / eps;
                    data[iy * n + ix] = C64::new((1.0 + e1 * e1 + e2 * e2).powf(-(m + 1.0) / 2.0) / (eps * eps), 0.0);
                }
            }
            let f = Field::new(fast, data, Rep::Spectral).unwrap();
            let mut out = f.clone();
            for (v, &w) in out.data_mut().iter_mut().zip(&filter) {
                if w == 1.0 {
                    *v = C64::new(0.0, 0.0);
                }
            }
            points.push((eps.ln(), norm(&out, Norm::L2, &tr).ln()));
        }
        let slope = ls_slope(&points);
        assert!((slope - (m - 1.0)).abs() <= 0.3, "m = {m}: slope {slope}");
    }
}

fn ls_slope(p: &[(f64, f64)]) -> f64 {
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q.0).sum::<f64>() / n;
    let my = p.iter().map(|q| q.1).sum::<f64>() / n;
    let sxy: f64 = p.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let sxx: f64 = p.iter().map(|q| (q.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn dealiased_cube_drops_wrapped_modes() {
    let g = Grid::new(32, 16, 2.0 * PI, 2.0 * PI).unwrap();
    let tr = Transform::for_grid(&g);
    let f = Field::from_fn(g, |x, _| C64::from_polar(1.0, 10.0 * x) + C64::from_polar(0.5, 2.0 * x));
    let d = Dealias::new(&g);
    let cube = d.power(&f, 3, 1.0);
    let native = tr.to_spectral(&f.map(|v| v * v.norm_sqr()));
    // 10 + 10 - 2 = 18 is past the native Nyquist and wraps to -14
    let slot = |j: i64| j.rem_euclid(32) as usize;
    assert!(native.data()[slot(-14)].norm() > 0.1);
    assert!(cube.data()[slot(-14)].norm() < 1e-14);
    // in-band modes agree
    assert!((cube.data()[slot(2)] - native.data()[slot(2)]).norm() < 1e-13);
    assert!((cube.data()[slot(10)] - native.data()[slot(10)]).norm() < 1e-13);
    assert!((cube.data()[slot(-6)] - native.data()[slot(-6)]).norm() < 1e-13);
}

#[test]
fn dealiased_product_exact_for_banded_input() {
    let g = Grid::new(32, 32, 10.0, 10.0).unwrap();
    let tr = Transform::for_grid(&g);
    let f = Field::from_fn(g, |x, y| C64::new((2.0 * PI * x / 10.0).cos(), (2.0 * PI * y / 10.0).sin()));
    let d = Dealias::new(&g);
    let out = tr.to_physical(&d.power(&f, 5, 2.0));
    let direct = f.map(|v| v * v.norm_sqr().powi(2) * 2.0);
    for (a, b) in out.data().iter().zip(direct.data()) {
        assert!((a - b).norm() < 1e-12);
    }
}

fn random_fast(vals: &[(f64, f64)]) -> Field {
    let g = make_grid(16, 16, 2.0 * PI * 4.0, 2.0 * PI * 4.0, 1.0).unwrap();
    Field::new(g, vals.iter().map(|&(a, b)| C64::new(a, b)).collect(), Rep::Physical).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mode_filter_idempotent_bit_exact(vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 256)) {
        let f = random_fast(&vals);
        let tr = Transform::for_grid(f.grid());
        let b = Symbol::ModeFilter { k: 1.0 };
        let once = apply_multiplier(&f, &b, &tr);
        let twice = apply_multiplier(&once, &b, &tr);
        prop_assert_eq!(
            once.data().iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect::<Vec<_>>(),
            twice.data().iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect::<Vec<_>>()
        );
    }

    #[test]
    fn mode_filter_self_adjoint(
        a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 256),
        b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 256),
    ) {
        let (f, g) = (random_fast(&a), random_fast(&b));
        let tr = Transform::for_grid(f.grid());
        let m = Symbol::ModeFilter { k: 1.0 };
        let l = inner_product(&apply_multiplier(&f, &m, &tr), &g, &tr).unwrap();
        let r = inner_product(&f, &apply_multiplier(&g, &m, &tr), &tr).unwrap();
        prop_assert!((l - r).abs() < 1e-10 * (1.0 + l.abs()));
    }

    #[test]
    fn symbols_real_and_finite(xi1 in -20.0f64..20.0, xi2 in -20.0f64..20.0, p in 0.5f64..4.0, t in 0.0f64..10.0) {
        for m in [
            Symbol::SolidPower { p },
            Symbol::BesselPower { s: p },
            Symbol::RescaledSolid { s: p, eps: 0.1, k: 1.0 },
            Symbol::RescaledBessel { s: p, eps: 0.1, k: 1.0 },
            Symbol::SemiCos { p, t },
            Symbol::SemiSinc { p, t },
            Symbol::SemiDSin { p, t },
        ] {
            prop_assert!(m.symbol(xi1, xi2).is_finite());
        }
        // cos^2 + |xi|^p sinc^2 = 1 per mode
        let w2 = (xi1 * xi1 + xi2 * xi2).powf(p / 2.0);
        let c = Symbol::SemiCos { p, t }.symbol(xi1, xi2);
        let s = Symbol::SemiSinc { p, t }.symbol(xi1, xi2);
        prop_assert!((c * c + w2 * s * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiplier_is_linear(
        a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 256),
        b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 256),
        c in -2.0f64..2.0,
    ) {
        let (f, g) = (random_fast(&a), random_fast(&b));
        let tr = Transform::for_grid(f.grid());
        let m = Symbol::BesselPower { s: 1.5 };
        let lhs = apply_multiplier(&f.scaled(C64::new(c, 0.0)).add(&g), &m, &tr);
        let rhs = apply_multiplier(&f, &m, &tr).scaled(C64::new(c, 0.0)).add(&apply_multiplier(&g, &m, &tr));
        for (x, y) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((x - y).norm() < 1e-10);
        }
    }
}
