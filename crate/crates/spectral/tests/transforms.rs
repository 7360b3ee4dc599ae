use std::f64::consts::PI;

use modlab_spectral::{inner_product, make_grid, norm, Complex, Field, Grid, Norm, Rep, Transform, C64};
use proptest::prelude::*;

fn dft_oracle(f: &Field) -> Vec<C64> {
    // Direct double sum, normalized by 1/(nx ny).
    let g = f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let mut out = vec![C64::new(0.0, 0.0); nx * ny];
    for ky in 0..ny {
        for kx in 0..nx {
            let mut acc = C64::new(0.0, 0.0);
            for iy in 0..ny {
                for ix in 0..nx {
                    let ph = -2.0 * PI * ((kx * ix) as f64 / nx as f64 + (ky * iy) as f64 / ny as f64);
                    acc += f.at(ix, iy) * C64::from_polar(1.0, ph);
                }
            }
            out[ky * nx + kx] = acc / (nx * ny) as f64;
        }
    }
    out
}

fn small_grid() -> Grid {
    make_grid(16, 32, 2.0 * PI * 4.0, 3.0, 1.0).unwrap()
}

fn sample(g: Grid) -> Field {
    Field::from_fn(g, |x, y| C64::new((x * 0.7).sin() + y * y * 0.1, (x - y).cos() * 0.3))
}

#[test]
fn forward_matches_direct_sum() {
    let g = small_grid();
    let f = sample(g);
    let tr = Transform::for_grid(&g);
    let s = tr.to_spectral(&f);
    let o = dft_oracle(&f);
    for (a, b) in s.data().iter().zip(&o) {
        assert!((a - b).norm() < 1e-13, "{a} vs {b}");
    }
}

#[test]
fn constant_field_sits_at_origin() {
    let g = small_grid();
    let f = Field::from_fn(g, |_, _| C64::new(2.5, -1.0));
    let s = Transform::for_grid(&g).to_spectral(&f);
    assert!((s.data()[0] - C64::new(2.5, -1.0)).norm() < 1e-14);
    let rest: f64 = s.data()[1..].iter().map(|c| c.norm()).sum();
    assert!(rest < 1e-13);
}

#[test]
fn plane_wave_single_coefficient() {
    let g = make_grid(64, 32, 32.0 * PI, 16.0, 1.0).unwrap();
    let m = g.carrier_index.unwrap() as usize;
    assert_eq!(m, 16);
    let k = g.carrier().unwrap();
    let f = Field::from_fn(g, |x, _| C64::from_polar(1.0, k * x));
    let s = Transform::for_grid(&g).to_spectral(&f);
    for (i, c) in s.data().iter().enumerate() {
        let expect = if i == m { 1.0 } else { 0.0 };
        assert!((c.norm() - expect).abs() < 1e-13, "slot {i}: {c}");
    }
}

#[test]
fn idempotent_conversions() {
    let g = small_grid();
    let tr = Transform::for_grid(&g);
    let f = sample(g);
    assert_eq!(tr.to_physical(&f), f);
    let s = tr.to_spectral(&f);
    assert_eq!(tr.to_spectral(&s), s);
    assert_eq!(s.rep(), Rep::Spectral);
}

#[test]
fn plane_wave_l2_is_root_area() {
    let g = make_grid(32, 16, 8.0 * PI, 5.0, 1.0).unwrap();
    let f = Field::from_fn(g, |x, _| C64::from_polar(1.0, x));
    let tr = Transform::for_grid(&g);
    let expect = (g.lx * g.ly).sqrt();
    assert!((norm(&f, Norm::L2, &tr) - expect).abs() < 1e-12 * expect);
    assert!((norm(&tr.to_spectral(&f), Norm::L2, &tr) - expect).abs() < 1e-12 * expect);
}

#[test]
fn gaussian_pairing_matches_quadrature() {
    let g = make_grid(64, 64, 20.0, 20.0, 2.0 * PI / 20.0).unwrap();
    let f = Field::from_fn(g, |x, y| C64::new((-(x * x + y * y) / 4.0).exp(), 0.0));
    let h = Field::from_fn(g, |x, y| C64::new(0.0, 1.0) * (-((x - 1.0).powi(2) + y * y) / 2.0).exp() + 0.5 * (-(x * x + y * y) / 3.0).exp());
    let tr = Transform::for_grid(&g);
    let mut oracle = 0.0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let (a, b) = (f.at(ix, iy), h.at(ix, iy));
            oracle += (a * b.conj()).re;
        }
    }
    oracle *= g.dx() * g.dy();
    let ip = inner_product(&f, &h, &tr).unwrap();
    assert!((ip - oracle).abs() < 1e-12 * oracle.abs());
    let ip_s = inner_product(&tr.to_spectral(&f), &tr.to_spectral(&h), &tr).unwrap();
    assert!((ip_s - oracle).abs() < 1e-12 * oracle.abs());
}

#[test]
fn pairing_with_i_times_self_vanishes() {
    let g = small_grid();
    let tr = Transform::for_grid(&g);
    let f = sample(g);
    let fi = f.scaled(Complex::new(0.0, 1.0));
    assert!(inner_product(&f, &fi, &tr).unwrap().abs() < 1e-14);
    let n2 = norm(&f, Norm::L2, &tr).powi(2);
    assert!((inner_product(&f, &f, &tr).unwrap() - n2).abs() < 1e-13 * n2);
}

#[test]
fn zero_field_has_zero_norms() {
    let g = small_grid();
    let tr = Transform::for_grid(&g);
    let z = Field::zeros(g, Rep::Physical);
    for kind in [Norm::L2, Norm::Linf, Norm::Hs(1.5), Norm::HsEps { s: 2.0, eps: 0.1, k: 1.0 }, Norm::L1hat] {
        assert_eq!(norm(&z, kind, &tr), 0.0);
    }
}

#[test]
fn grid_mismatch_reported() {
    let g = small_grid();
    let h = make_grid(32, 32, 2.0 * PI * 4.0, 3.0, 1.0).unwrap();
    let tr = Transform::for_grid(&g);
    assert!(inner_product(&sample(g), &sample(h), &tr).is_err());
}

fn random_field(vals: &[(f64, f64)]) -> Field {
    let g = make_grid(16, 16, 2.0 * PI * 2.0, 7.0, 1.0).unwrap();
    Field::new(g, vals.iter().map(|&(a, b)| C64::new(a, b)).collect(), Rep::Physical).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_and_plancherel(vals in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 256)) {
        let f = random_field(&vals);
        let tr = Transform::for_grid(f.grid());
        let s = tr.to_spectral(&f);
        let back = tr.to_physical(&s);
        let scale = f.max_abs().max(1e-300);
        for (a, b) in f.data().iter().zip(back.data()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
        let (np, ns) = (norm(&f, Norm::L2, &tr), norm(&s, Norm::L2, &tr));
        prop_assert!((np - ns).abs() <= 1e-12 * np.max(1e-300));
    }

    #[test]
    fn inner_product_is_symmetric_and_bilinear(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256),
        t in -3.0f64..3.0,
    ) {
        let (f, g) = (random_field(&a), random_field(&b));
        let tr = Transform::for_grid(f.grid());
        let fg = inner_product(&f, &g, &tr).unwrap();
        prop_assert!((fg - inner_product(&g, &f, &tr).unwrap()).abs() < 1e-12);
        let lhs = inner_product(&f.scaled(C64::new(t, 0.0)).add(&g), &g, &tr).unwrap();
        let rhs = t * fg + inner_product(&g, &g, &tr).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}
