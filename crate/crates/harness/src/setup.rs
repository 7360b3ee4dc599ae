//! Grid choice and the shared corrector builds.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use modlab_packet::{commensurate_grids, CorrectorSet, PacketParams};
use modlab_spectral::{Field, Grid};

use crate::{HarnessError, Profile, SweepConfig};

/// Slow and fast grids for `eps`, with the carrier index made integral.
pub fn grids_for(cfg: &SweepConfig, eps: f64) -> Result<(Grid, Grid), HarnessError> {
    Ok(commensurate_grids(eps, cfg.k, cfg.s0, cfg.n_slow, cfg.n_fast_for(eps))?)
}

pub(crate) fn packet_params(cfg: &SweepConfig, eps: f64, depth: usize) -> Result<PacketParams, HarnessError> {
    let (slow, fast) = grids_for(cfg, eps)?;
    let mut pp = PacketParams::new(eps, cfg.k, cfg.p, cfg.q, cfg.s, cfg.nu, depth, slow, fast)?.with_dt(cfg.dt)?;
    if depth > 4 {
        pp = pp.with_experimental(true);
    }
    if !cfg.nonlinear {
        pp = pp.with_c_omega(0.0);
    }
    Ok(pp)
}

type Slot = Arc<Mutex<Option<Arc<CorrectorSet>>>>;
type Cache = Mutex<HashMap<String, Slot>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// Correctors for `pp` up to slow time `big_t`.
///
/// The trajectories depend on the slow grid and the envelope equation
/// only, so one build serves every `eps` (and every lower depth) sharing
/// that grid. Builds are memoized for the life of the process and a
/// concurrent request for the same key waits for the first.
pub fn packet_set(pp: &PacketParams, a0_profile: &Profile, big_t: f64) -> Result<CorrectorSet, HarnessError> {
    let key = format!(
        "{:?}|{:?}|k{} p{} q{} c{} dt{} d{} T{} {:?}",
        (pp.slow.nx, pp.slow.ny, pp.slow.lx.to_bits(), pp.slow.ly.to_bits()),
        a0_profile,
        pp.k,
        pp.p,
        pp.q,
        pp.c_omega,
        pp.dt,
        pp.depth,
        big_t,
        pp.y_convention,
    );
    let slot = cache().lock().expect("cache lock").entry(key).or_default().clone();
    let base = {
        let mut guard = slot.lock().expect("slot lock");
        match guard.as_ref() {
            Some(b) => b.clone(),
            None => {
                let a0: Field = a0_profile.sample(pp.slow);
                let built = Arc::new(CorrectorSet::build(pp, &a0, big_t * (1.0 + 1e-12) + 1e-12, 10)?);
                *guard = Some(built.clone());
                built
            }
        }
    };
    Ok(base.for_eps(pp)?)
}

/// `sup_T max |A^1(T)|` over the stored checkpoints up to `horizon_t`.
pub fn envelope_sup(cfg: &SweepConfig, eps: f64) -> Result<f64, HarnessError> {
    let pp = packet_params(cfg, eps, cfg.depth)?;
    let set = packet_set(&pp, &cfg.profile, cfg.horizon_t)?;
    Ok(set.states.iter().map(|s| s.a[0].max_abs()).fold(0.0, f64::max))
}
