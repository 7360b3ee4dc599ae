//! Library-level contracts, measured the same way the acceptance suite
//! reports them.

use std::f64::consts::PI;

use modlab_nls::{dispersion, mass, run_nls, NlsParams};
use modlab_packet::group_velocity;
use modlab_progenitor::{Progenitor, ProgenitorParams, ProgenitorState};
use modlab_spectral::{apply_multiplier, make_grid, Field, Grid, Multiplier, Norm, Rep, Transform, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::HarnessError;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    /// `| sum |f|^2 dA - A sum |c|^2 | / sum |f|^2 dA`
    pub plancherel_rel: f64,
    pub round_trip_rel: f64,
    pub filter_idempotent: bool,
    /// Max over the Bessel and solid rescaled symbols.
    pub commutation_rel: f64,
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng) -> Field {
    let data = (0..g.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    Field::new(g, data, Rep::Physical).expect("sized")
}

fn max_rel(a: &Field, b: &Field) -> f64 {
    let scale = b.max_abs();
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// `a(X, Y) e^{ikx}` sampled on `fast`, with `a` given on the slow image.
fn carry(fast: Grid, a: &Field) -> Field {
    let k = fast.carrier().expect("carrier grid");
    let mut f = Field::from_fn(fast, |x, _| C64::from_polar(1.0, k * x));
    for (v, w) in f.data_mut().iter_mut().zip(a.data()) {
        *v *= w;
    }
    f
}

pub fn spectral_contracts(seed: u64) -> Result<SpectralReport, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Grid::new(64, 32, 7.0, 5.0)?;
    let tr = Transform::for_grid(&g);
    let f = random_field(g, &mut rng);
    let phys: f64 = f.data().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.cell_area();
    let spec = tr.to_spectral(&f);
    let coef: f64 = spec.data().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.area();
    let plancherel_rel = (phys - coef).abs() / phys;
    let round_trip_rel = max_rel(&tr.to_physical(&spec), &f);

    let fast = make_grid(128, 128, 64.0 * PI, 64.0 * PI, 1.0)?;
    let ftr = Transform::for_grid(&fast);
    let noise = random_field(fast, &mut rng);
    let filt = Multiplier::ModeFilter { k: 1.0 };
    let once = apply_multiplier(&noise, &filt, &ftr);
    let twice = apply_multiplier(&once, &filt, &ftr);
    let filter_idempotent = once.data() == twice.data();

    let eps = 0.1;
    let slow = Grid::new(128, 128, eps * fast.lx, eps * fast.ly)?;
    let str_ = Transform::for_grid(&slow);
    let a = Field::from_fn(slow, |x, y| C64::new(1.0, 0.3 * x - 0.1 * y) * (-(x * x + y * y) / 2.0).exp());
    let packet = carry(fast, &a);
    let mut commutation_rel: f64 = 0.0;
    for (fs, ss) in [
        (Multiplier::RescaledBessel { s: 1.5, eps, k: 1.0 }, Multiplier::BesselPower { s: 1.5 }),
        (Multiplier::RescaledSolid { s: 2.0, eps, k: 1.0 }, Multiplier::SolidPower { p: 2.0 }),
    ] {
        let lhs = ftr.to_physical(&apply_multiplier(&packet, &fs, &ftr));
        let rhs = carry(fast, &str_.to_physical(&apply_multiplier(&a, &ss, &str_)));
        commutation_rel = commutation_rel.max(max_rel(&lhs, &rhs));
    }
    Ok(SpectralReport { plancherel_rel, round_trip_rel, filter_idempotent, commutation_rel })
}

#[derive(Clone, Debug, Serialize)]
pub struct NlsReport {
    /// Max relative mass deviation over `T <= 1`.
    pub mass_rel: f64,
    /// Successive Strang self-convergence orders, `dt` halved each time.
    pub strang_orders: Vec<f64>,
}

pub fn nls_contracts() -> Result<NlsReport, HarnessError> {
    let g = Grid::new(64, 64, 16.0, 16.0)?;
    let tr = Transform::for_grid(&g);
    let a0 = Field::from_fn(g, |x, y| C64::from_polar((-(x * x + y * y) / 2.0).exp(), 0.5 * x));
    let m0 = mass(&a0, &tr);
    let traj = run_nls(&a0, NlsParams::new(1.0, 3, 1.0, 1.0, g)?, 1.0, 10)?;
    let mass_rel = traj.states.iter().map(|s| (mass(&s.a, &tr) - m0).abs() / m0).fold(0.0, f64::max);

    let run = |dt: f64| -> Result<Field, HarnessError> {
        let p = NlsParams::new(1.0, 3, 1.0, 1.0, g)?.with_dt(dt)?;
        Ok(run_nls(&a0, p, 0.5, usize::MAX)?.states.pop().expect("final state").a)
    };
    let reference = run(0.005 / 64.0)?;
    let errs = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| Ok(modlab_spectral::norm(&run(dt)?.sub(&reference), Norm::L2, &tr)))
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    let strang_orders = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(NlsReport { mass_rel, strang_orders })
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionReport {
    pub k: f64,
    pub p: f64,
    pub omega: f64,
    pub omega_p: f64,
    /// Relative error of `e^{i omega t}` phase advance of the carrier wave,
    /// through the spectral semigroup symbols and the progenitor flow.
    pub phase_rel: f64,
}

/// Carrier plane wave `e^{i(kx + omega t)}` advanced by `t`.
pub fn dispersion_check(k: f64, p: f64, t: f64) -> Result<DispersionReport, HarnessError> {
    let omega = dispersion(k, p);
    let m = 8.0;
    let l = 2.0 * PI * m / k;
    let g = make_grid(32, 32, l, l, k)?;
    let tr = Transform::for_grid(&g);
    let z0 = Field::from_fn(g, |x, _| C64::from_polar(1.0, k * x));
    let zt0 = z0.scaled(C64::new(0.0, omega));
    let exact = z0.scaled(C64::from_polar(1.0, omega * t));

    let c = apply_multiplier(&z0, &Multiplier::SemiCos { p, t }, &tr);
    let s = apply_multiplier(&zt0, &Multiplier::SemiSinc { p, t }, &tr);
    let semi = tr.to_physical(&c.add(&s));
    let mut phase_rel = max_rel(&semi, &exact);

    // The progenitor's own linear flow, with nonlinear terms off.
    let mut prm = ProgenitorParams::new(0.1, k, p, 3, 1.0, 1.5, 1.0, g).map_err(HarnessError::at(0.1))?;
    prm.c_omega = 0.0;
    prm.penalty = false;
    let eng = Progenitor::new(prm).map_err(HarnessError::at(0.1))?;
    let st = ProgenitorState { z: z0.clone(), zt: zt0, ztt: z0.scaled(C64::new(-omega * omega, 0.0)), t: 0.0, g_bar: 0.0 };
    let out = eng.linear_propagate(&st, t);
    phase_rel = phase_rel.max(max_rel(&tr.to_physical(&out.z), &exact));
    Ok(DispersionReport { k, p, omega, omega_p: group_velocity(k, p), phase_rel })
}
