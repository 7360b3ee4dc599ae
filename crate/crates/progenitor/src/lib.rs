//! Penalized progenitor equation
//!
//! `z_tt + |D|^p z + C eps^2 B(z |z/eps|^{q-1}) + g_bar N(z, t) = 0`
//!
//! with the averaged cutoff `g_bar` held constant on each subinterval,
//! compatibility data for `z_tt(0)`, jump updates at subinterval boundaries
//! and the `lambda` / energy ledger.

mod engine;
mod ledger;

pub use engine::{CompatOutcome, Progenitor, ProgenitorState, RunOutcome, SubintervalStats};
pub use ledger::{LedgerRow, PenaltyLedger, LEDGER_COLUMNS};

use modlab_nls::{c_omega, dispersion};
use modlab_spectral::Grid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProgenitorError {
    #[error("lambda = {0} is outside [0, 1)")]
    DomainError(f64),
    #[error("C eps^(q+4) = {0} must be below 64")]
    PenaltyScaleInvalid(f64),
    #[error("{what} did not converge in {iters} iterations (last change {last:e})")]
    NoConvergence { what: &'static str, iters: usize, last: f64 },
    #[error("lambda reached {lambda} at t = {t}")]
    BlowupPenalty { t: f64, lambda: f64 },
    #[error("invalid parameter: {0}")]
    BadParam(String),
}

/// `g(lambda) = 1 - sqrt(1 - lambda)`.
pub fn g_eval(lambda: f64) -> Result<f64, ProgenitorError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(ProgenitorError::DomainError(lambda));
    }
    Ok(1.0 - (1.0 - lambda).sqrt())
}

pub fn g_prime(lambda: f64) -> Result<f64, ProgenitorError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(ProgenitorError::DomainError(lambda));
    }
    Ok(0.5 / (1.0 - lambda).sqrt())
}

/// `g` up to `lambda_star`, constant beyond. Defined for every `lambda >= 0`.
pub fn g_star(lambda: f64, lambda_star: f64) -> Result<f64, ProgenitorError> {
    if lambda < 0.0 || lambda.is_nan() {
        return Err(ProgenitorError::DomainError(lambda));
    }
    if lambda <= lambda_star {
        g_eval(lambda)
    } else {
        g_eval(lambda_star)
    }
}

/// `1 - (C eps^{q+4} / 64)^2`, the point where `eps^{q+4} g'(lambda) = 32 / C`.
pub fn lambda_star_of(eps: f64, q: u32, c_growth: f64) -> Result<f64, ProgenitorError> {
    let a = c_growth * eps.powi(q as i32 + 4);
    if !(a < 64.0) || a < 0.0 {
        return Err(ProgenitorError::PenaltyScaleInvalid(a));
    }
    Ok(1.0 - (a / 64.0).powi(2))
}

/// `omega` solving `c omega^{4/p - 1} T u^{q-1} = 1`, with `u` the sup of
/// the envelope over the horizon.
pub fn calibrated_omega(c: f64, p: f64, big_t: f64, u_sup: f64, q: u32) -> Result<f64, ProgenitorError> {
    let e = 4.0 / p - 1.0;
    let base = c * big_t * u_sup.powi(q as i32 - 1);
    if !(base > 0.0 && base.is_finite()) || e == 0.0 {
        return Err(ProgenitorError::BadParam(format!("cannot calibrate omega (base {base}, exponent {e})")));
    }
    Ok(base.powf(-1.0 / e))
}

#[derive(Clone, Debug)]
pub struct ProgenitorParams {
    pub eps: f64,
    pub k: f64,
    pub p: f64,
    pub q: u32,
    pub s: f64,
    pub nu: f64,
    /// Scale in `lambda` and in `N`.
    pub omega: f64,
    /// Power nonlinearity coefficient. Zero switches it off.
    pub c_omega: f64,
    pub t1: f64,
    pub c_growth: f64,
    pub t1_offset: f64,
    pub lambda_star: f64,
    pub n_sub: usize,
    /// Window half-length.
    pub t0: f64,
    /// Tolerance on the `g_bar` fixed point and on the compatibility map.
    pub fp_tol: f64,
    pub fp_maxiter: usize,
    /// Relative Picard tolerance on the nodal values of `z`.
    pub picard_tol: f64,
    pub anchor_hs: f64,
    pub grid: Grid,
    /// Quadrature intervals per subinterval.
    pub sub_nodes: usize,
    pub damping: f64,
    /// `false` drops `g_bar N` from the equation.
    pub penalty: bool,
}

impl ProgenitorParams {
    /// Defaults: `omega = k^{p/2}`, `C_omega = omega^{2-4/p}`, `T1 = 1`,
    /// `C = 1e5`, `n_sub = 64`, `t0 = 12.8`, 8 quadrature intervals.
    #[allow(clippy::too_many_arguments)]
    pub fn new(eps: f64, k: f64, p: f64, q: u32, s: f64, nu: f64, anchor_hs: f64, grid: Grid) -> Result<Self, ProgenitorError> {
        let omega = dispersion(k, p);
        let out = Self {
            eps,
            k,
            p,
            q,
            s,
            nu,
            omega,
            c_omega: c_omega(omega, p),
            t1: 1.0,
            c_growth: 1e5,
            t1_offset: 0.0,
            lambda_star: 0.0,
            n_sub: 64,
            t0: 12.8,
            fp_tol: 1e-10,
            fp_maxiter: 60,
            picard_tol: 1e-13,
            anchor_hs,
            grid,
            sub_nodes: 8,
            damping: 0.5,
            penalty: true,
        };
        out.validated()
    }

    /// Re-checks every invariant and refreshes `lambda_star`.
    pub fn validated(mut self) -> Result<Self, ProgenitorError> {
        let bad = |m: String| Err(ProgenitorError::BadParam(m));
        if !(self.eps > 0.0 && self.eps <= 0.25) {
            return bad(format!("eps = {} out of (0, 0.25]", self.eps));
        }
        if !(self.nu > 1.0 && self.nu < 2.0) {
            return bad(format!("nu = {} out of (1, 2)", self.nu));
        }
        if self.q < 3 || self.q % 2 == 0 {
            return bad(format!("q = {} must be odd and >= 3", self.q));
        }
        if !(self.p > 0.0 && self.k > 0.0 && self.s >= 0.0 && self.omega > 0.0) {
            return bad("p, k, omega must be positive and s >= 0".into());
        }
        if !(self.anchor_hs > 0.0 && self.anchor_hs.is_finite()) {
            return bad(format!("anchor_hs = {}", self.anchor_hs));
        }
        if self.n_sub == 0 || self.sub_nodes == 0 || !(self.t0 > 0.0) {
            return bad("n_sub, sub_nodes and t0 must be positive".into());
        }
        if !(self.fp_tol > 0.0) || self.fp_maxiter == 0 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("fp_tol, fp_maxiter, damping".into());
        }
        match (self.grid.carrier_index, self.grid.carrier()) {
            (Some(_), Some(kc)) if (kc - self.k).abs() <= 1e-12 * self.k => {}
            _ => return bad(format!("grid does not carry k = {}", self.k)),
        }
        self.lambda_star = lambda_star_of(self.eps, self.q, self.c_growth)?;
        Ok(self)
    }

    /// Subinterval length `2 t0 / n_sub`.
    pub fn h(&self) -> f64 {
        2.0 * self.t0 / self.n_sub as f64
    }

    /// Picks `t0` so an integer number of windows (at most 256) covers
    /// `horizon` with subintervals no longer than `max_h`.
    pub fn fit_windows(mut self, horizon: f64, max_h: f64) -> Result<Self, ProgenitorError> {
        if !(horizon > 0.0 && max_h > 0.0) {
            return Err(ProgenitorError::BadParam(format!("horizon {horizon}, max_h {max_h}")));
        }
        let windows = (horizon / (self.n_sub as f64 * max_h)).ceil().max(1.0);
        if windows > 256.0 {
            return Err(ProgenitorError::BadParam(format!("{windows} windows needed for horizon {horizon}")));
        }
        self.t0 = horizon / (2.0 * windows);
        Ok(self)
    }
}
