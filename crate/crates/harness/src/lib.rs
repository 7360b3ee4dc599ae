//! Experiments over the envelope, packet and progenitor solvers.
//!
//! Each public study is a pure function of its config. Per-`eps` work runs
//! on scoped threads and is merged in config order, so tables are
//! byte-identical across runs.

mod config;
mod contracts;
mod emit;
mod fit;
mod setup;
mod studies;

pub use config::{GrowthConfig, Profile, SweepConfig};
pub use contracts::{dispersion_check, nls_contracts, spectral_contracts, DispersionReport, NlsReport, SpectralReport};
pub use emit::{content_hash, emit_csv, emit_manifest, read_csv, Manifest, Table};
pub use fit::{fit_linear, fit_loglog_order, FitResult};
pub use setup::{envelope_sup, grids_for, packet_set};
pub use studies::{
    energy_drift_check, envelope_speed_check, jump_refinement, modulation_identity_check, norm_growth_experiment, penalty_report,
    remainder_sweep, residual_order_study, DiagnosticsRecord, FIT_COLUMNS, SWEEP_COLUMNS, TRACE_COLUMNS, DriftReport, EpsRun, GrowthOutcome, IdentityOutcome, JumpOutcome,
    PenaltyReport, RemainderRow, ResidualOutcome, SpeedOutcome, SweepOutcome,
};

use std::path::PathBuf;

use modlab_nls::NlsError;
use modlab_packet::PacketError;
use modlab_progenitor::ProgenitorError;
use modlab_spectral::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("eps = {eps}: {source}")]
    Progenitor { eps: f64, source: ProgenitorError },
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Nls(#[from] NlsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl HarnessError {
    pub(crate) fn at(eps: f64) -> impl Fn(ProgenitorError) -> HarnessError {
        move |source| HarnessError::Progenitor { eps, source }
    }
}
