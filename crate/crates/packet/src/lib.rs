//! Multiscale wave-packet approximation of the progenitor equation.
//!
//! The envelope `A^1` and its correctors `A^2..A^d` live on a slow grid; the
//! packet `z~ = eps sum_n eps^{n-1} A^n(eps(x + omega' t), eps y, eps^2 t) e^{i(kx + omega t)}`
//! lives on a fast grid whose lattice contains the slow one, shifted to the
//! carrier.

mod correctors;
mod dump;
mod hierarchy;
mod taylor;

pub use correctors::{CorrectorSet, CorrectorState, PacketEvaluation, SlowFields};
pub use dump::{read_dump, write_dump, DumpFile};
pub use hierarchy::{Hierarchy, Jets};
pub use taylor::{Homog, SymbolTaylor};

use std::f64::consts::PI;

use modlab_nls::{c_omega, c_x, c_y, NlsError, NlsParams, YConvention};
use modlab_spectral::{Grid, SpectralError};
use thiserror::Error;

pub use modlab_nls::dispersion;

#[derive(Debug, Error)]
pub enum PacketError {
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("depth {0} is not available (1..=4, or up to 6 with the experimental flag)")]
    DepthUnsupported(usize),
    #[error("slow time {t} is past the corrector horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("slow and fast grids are not commensurate: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Nls(#[from] NlsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `omega' = p/2 |k|^{(p-2)/2}`.
pub fn group_velocity(k: f64, p: f64) -> f64 {
    0.5 * p * k.abs().powf((p - 2.0) / 2.0)
}

/// Quotient form `p k |k|^{p-2} / (2 omega)`.
pub fn group_velocity_quotient(k: f64, p: f64) -> f64 {
    p * k * k.abs().powf(p - 2.0) / (2.0 * dispersion(k, p))
}

/// Square slow/fast pair for a carrier `k`: the slow length is adjusted from
/// `s0` so the carrier index `m = k S / (2 pi eps)` is an integer.
pub fn commensurate_grids(eps: f64, k: f64, s0: f64, n_slow: usize, n_fast: usize) -> Result<(Grid, Grid), PacketError> {
    if !(eps > 0.0 && k > 0.0 && s0 > 0.0) {
        return Err(PacketError::BadParam(format!("eps = {eps}, k = {k}, S = {s0}")));
    }
    let m = (k * s0 / (2.0 * PI * eps)).round().max(1.0);
    let s = 2.0 * PI * m * eps / k;
    let slow = Grid::new(n_slow, n_slow, s, s)?;
    let fast = Grid::new(n_fast, n_fast, s / eps, s / eps)?.with_carrier(k)?;
    Ok((slow, fast))
}

#[derive(Clone, Debug)]
pub struct PacketParams {
    pub eps: f64,
    pub k: f64,
    pub p: f64,
    pub q: u32,
    pub s: f64,
    pub nu: f64,
    pub depth: usize,
    pub omega: f64,
    pub omega_p: f64,
    /// Coefficient of the power nonlinearity. Zero switches it off.
    pub c_omega: f64,
    pub slow: Grid,
    pub fast: Grid,
    /// Carrier index of the fast grid.
    pub m: i64,
    /// Slow step for the corrector integration.
    pub dt: f64,
    pub y_convention: YConvention,
    pub experimental: bool,
}

impl PacketParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(eps: f64, k: f64, p: f64, q: u32, s: f64, nu: f64, depth: usize, slow: Grid, fast: Grid) -> Result<Self, PacketError> {
        if !(eps > 0.0 && eps <= 0.25) {
            return Err(PacketError::BadParam(format!("eps = {eps} out of (0, 0.25]")));
        }
        if !(nu > 1.0 && nu < 2.0) {
            return Err(PacketError::BadParam(format!("nu = {nu} out of (1, 2)")));
        }
        // Reuses the NLS validation of p, q, s, k.
        NlsParams::new(p, q, s, k, slow)?;
        if depth == 0 || depth > 6 {
            return Err(PacketError::DepthUnsupported(depth));
        }
        let m = match (fast.carrier_index, fast.carrier()) {
            (Some(m), Some(kc)) if (kc - k).abs() <= 1e-12 * k => m,
            _ => return Err(PacketError::GridMismatch(format!("fast grid does not carry k = {k}"))),
        };
        for (a, b, axis) in [(slow.lx, fast.lx, 'x'), (slow.ly, fast.ly, 'y')] {
            if ((b * eps) - a).abs() > 1e-9 * a {
                return Err(PacketError::GridMismatch(format!("{axis}: slow length {a} != eps * {b}")));
            }
        }
        if fast.nx % slow.nx != 0 || fast.ny % slow.ny != 0 {
            return Err(PacketError::GridMismatch("slow points are not fast points".into()));
        }
        let omega = dispersion(k, p);
        Ok(Self {
            eps,
            k,
            p,
            q,
            s,
            nu,
            depth,
            omega,
            omega_p: group_velocity(k, p),
            c_omega: c_omega(omega, p),
            slow,
            fast,
            m,
            dt: 1e-3,
            y_convention: YConvention::Derived,
            experimental: false,
        })
    }

    pub fn with_experimental(mut self, on: bool) -> Self {
        self.experimental = on;
        self
    }

    pub fn with_y_convention(mut self, conv: YConvention) -> Self {
        self.y_convention = conv;
        self
    }

    pub fn with_c_omega(mut self, c: f64) -> Self {
        self.c_omega = c;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, PacketError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PacketError::BadParam(format!("dt = {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64, slow: Grid, fast: Grid) -> Result<Self, PacketError> {
        let fresh = Self::new(eps, self.k, self.p, self.q, self.s, self.nu, self.depth, slow, fast)?;
        self.eps = fresh.eps;
        self.slow = fresh.slow;
        self.fast = fresh.fast;
        self.m = fresh.m;
        Ok(self)
    }

    pub fn check_depth(&self) -> Result<(), PacketError> {
        match self.depth {
            1..=4 => Ok(()),
            5 | 6 if self.experimental => Ok(()),
            d => Err(PacketError::DepthUnsupported(d)),
        }
    }

    pub fn cx(&self) -> f64 {
        c_x(self.k, self.p)
    }

    pub fn cy(&self) -> f64 {
        c_y(self.k, self.p, self.y_convention)
    }

    /// Envelope parameters on the slow grid, in the actual form and with the
    /// same nonlinear coefficient as the packet.
    pub fn nls_params(&self) -> Result<NlsParams, PacketError> {
        let mut p = NlsParams::new(self.p, self.q, self.s, self.k, self.slow)?
            .with_y_convention(self.y_convention)
            .with_dt(self.dt)?;
        p.cnl = self.c_omega;
        Ok(p)
    }

    pub fn hierarchy(&self) -> Hierarchy {
        Hierarchy::new(self.depth, self.k, self.p, self.q, self.omega, self.omega_p, self.c_omega, self.cx(), self.cy(), self.slow)
    }
}
