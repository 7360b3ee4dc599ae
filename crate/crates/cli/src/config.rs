use std::f64::consts::PI;

use modlab_harness::{GrowthConfig, Profile, SweepConfig};
use modlab_progenitor::lambda_star_of;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("{0}")]
    Validation(String),
}

fn d_n() -> usize {
    128
}
fn d_l() -> f64 {
    5.0 * PI
}
fn d_nu() -> f64 {
    1.5
}
fn d_t1() -> f64 {
    1.0
}
fn d_depth() -> usize {
    3
}
fn d_dt() -> f64 {
    1e-3
}
fn d_c_growth() -> f64 {
    1e5
}
fn d_c_const() -> f64 {
    1.0
}
fn d_n_sub() -> usize {
    64
}
fn d_fp_tol() -> f64 {
    1e-10
}
fn d_fp_maxiter() -> usize {
    60
}
fn d_max_h() -> f64 {
    0.4
}
fn d_true() -> bool {
    true
}
fn d_horizon() -> f64 {
    0.25
}
fn d_samples() -> usize {
    16
}
fn d_dir() -> String {
    "out".into()
}
fn d_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}
fn d_nls_t() -> f64 {
    1.0
}
fn d_nls_dt() -> f64 {
    2e-3
}
fn d_nls_samples() -> usize {
    50
}

/// Slow grid. The box is adjusted so the carrier index is an integer, and
/// must be square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "d_n")]
    pub nx: usize,
    #[serde(default = "d_n")]
    pub ny: usize,
    #[serde(default = "d_l")]
    pub lx: f64,
    #[serde(default = "d_l")]
    pub ly: f64,
    /// Fast points per axis; 256, or 512 below `eps = 0.03`, when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_fast: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: d_n(), ny: d_n(), lx: d_l(), ly: d_l(), n_fast: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub epsilon: f64,
    pub k: f64,
    pub p: f64,
    pub q: u32,
    pub s: f64,
    #[serde(default = "d_nu")]
    pub nu: f64,
    #[serde(default = "d_t1")]
    pub t1: f64,
    #[serde(default = "d_depth")]
    pub depth: usize,
    /// Slow step for the envelope and correctors.
    #[serde(default = "d_dt")]
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaMode {
    /// `omega` as given, or `k^{p/2}` when absent.
    #[default]
    Explicit,
    /// `c_const omega^{4/p-1} T sup|A|^{q-1} = 1`.
    Calibrated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgenitorSection {
    #[serde(default = "d_c_growth")]
    pub c_growth: f64,
    #[serde(default)]
    pub omega_mode: OmegaMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default = "d_c_const")]
    pub c_const: f64,
    #[serde(default = "d_n_sub")]
    pub n_sub: usize,
    /// Longest subinterval; window half-lengths are fitted to the horizon.
    #[serde(default = "d_max_h")]
    pub max_h: f64,
    #[serde(default = "d_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "d_fp_maxiter")]
    pub fp_maxiter: usize,
    #[serde(default = "d_true")]
    pub penalty: bool,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
}

impl Default for ProgenitorSection {
    fn default() -> Self {
        Self {
            c_growth: d_c_growth(),
            omega_mode: OmegaMode::Explicit,
            omega: None,
            c_const: d_c_const(),
            n_sub: d_n_sub(),
            max_h: d_max_h(),
            fp_tol: d_fp_tol(),
            fp_maxiter: d_fp_maxiter(),
            penalty: true,
            nonlinear: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Defaults to `[packet].epsilon` alone.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(rename = "horizon_T", default = "d_horizon")]
    pub horizon_t: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "d_samples")]
    pub samples: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { epsilons: Vec::new(), horizon_t: d_horizon(), profile: Profile::default(), samples: d_samples() }
    }
}

/// Envelope-only runs (`nls-run`, `growth-track`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsSection {
    #[serde(default = "d_nls_t")]
    pub t_end: f64,
    #[serde(default = "d_nls_dt")]
    pub dt: f64,
    #[serde(default = "d_nls_samples")]
    pub samples: usize,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
}

impl Default for NlsSection {
    fn default() -> Self {
        Self { t_end: d_nls_t(), dt: d_nls_dt(), samples: d_nls_samples(), nonlinear: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "d_dir")]
    pub dir: String,
    /// Any of `csv`, `json`.
    #[serde(default = "d_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: d_dir(), formats: d_formats() }
    }
}

impl OutputSection {
    pub fn wants(&self, fmt: &str) -> bool {
        self.formats.iter().any(|f| f == fmt)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    pub packet: PacketSection,
    #[serde(default)]
    pub progenitor: ProgenitorSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub nls: NlsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let head = &text[..offset.min(text.len())];
    let line = head.matches('\n').count() + 1;
    let column = head.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    (line, column)
}

/// TOML text to a validated config with defaults filled.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        ConfigError::Parse { line, column, msg: e.message().to_string() }
    })?;
    if cfg.sweep.epsilons.is_empty() {
        cfg.sweep.epsilons = vec![cfg.packet.epsilon];
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Cross-field constraints of every module the config feeds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Validation(m));
        let (g, pk, pr) = (&self.grid, &self.packet, &self.progenitor);
        if g.nx != g.ny || g.lx != g.ly {
            return bad("grid must be square (nx = ny, lx = ly)".into());
        }
        if !g.nx.is_power_of_two() || g.nx < 16 {
            return bad(format!("grid nx = {} must be a power of two >= 16", g.nx));
        }
        if let Some(n) = g.n_fast {
            if n % g.nx != 0 || !n.is_power_of_two() {
                return bad(format!("n_fast = {n} must be a power-of-two multiple of nx"));
            }
        }
        if !(g.lx > 0.0) {
            return bad("grid lx must be positive".into());
        }
        if !(pk.nu > 1.0 && pk.nu < 2.0) {
            return bad("nu out of (1,2)".into());
        }
        if !(pk.k > 0.0) || !(pk.p > 0.0) {
            return bad("k and p must be positive".into());
        }
        if pk.q < 3 || pk.q % 2 == 0 {
            return bad(format!("q = {} must be odd and >= 3", pk.q));
        }
        if !(1..=4).contains(&pk.depth) {
            return bad(format!("depth = {} out of 1..=4", pk.depth));
        }
        let eps_all = std::iter::once(pk.epsilon).chain(self.sweep.epsilons.iter().copied());
        for e in eps_all {
            if !(e > 0.0 && e <= 0.25) {
                return bad(format!("epsilon = {e} out of (0, 0.25]"));
            }
            // The carrier must sit on the fast lattice once the box is adjusted.
            let m = (pk.k * g.lx / (2.0 * PI * e)).round();
            if m < 1.0 || 2.0 * m >= self.n_fast_for(e) as f64 {
                return bad(format!("k = {} is not admissible on the fast grid at epsilon = {e}", pk.k));
            }
            if lambda_star_of(e, pk.q, pr.c_growth).is_err() {
                return bad(format!("c_growth * eps^(q+4) = {:e} must be below 64", pr.c_growth * e.powi(pk.q as i32 + 4)));
            }
        }
        if self.sweep.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("sweep epsilons must be strictly decreasing".into());
        }
        if !(self.sweep.horizon_t > 0.0) {
            return bad("horizon_T must be positive".into());
        }
        if pr.omega_mode == OmegaMode::Explicit && pr.omega.is_some_and(|w| !(w > 0.0)) {
            return bad("omega must be positive".into());
        }
        if !(pr.c_const > 0.0) || pr.n_sub == 0 || !(pr.max_h > 0.0) || !(pr.fp_tol > 0.0) || pr.fp_maxiter == 0 {
            return bad("c_const, n_sub, max_h, fp_tol and fp_maxiter must be positive".into());
        }
        if let Some(f) = self.output.formats.iter().find(|f| !matches!(f.as_str(), "csv" | "json")) {
            return bad(format!("unknown output format {f:?}"));
        }
        if !(self.nls.t_end > 0.0 && self.nls.dt > 0.0) {
            return bad("nls t_end and dt must be positive".into());
        }
        Ok(())
    }

    pub fn n_fast_for(&self, eps: f64) -> usize {
        self.grid.n_fast.unwrap_or(if eps < 0.03 { 512 } else { 256 }).max(self.grid.nx)
    }

    /// Sweep settings over `epsilons`; `omega` is resolved by the caller.
    pub fn sweep_config(&self, epsilons: Vec<f64>) -> SweepConfig {
        let (pk, pr) = (&self.packet, &self.progenitor);
        let mut c = SweepConfig::reference(epsilons, self.sweep.horizon_t);
        c.depth = pk.depth;
        c.profile = self.sweep.profile.clone();
        c.k = pk.k;
        c.p = pk.p;
        c.q = pk.q;
        c.s = pk.s;
        c.nu = pk.nu;
        c.n_slow = self.grid.nx;
        c.s0 = self.grid.lx;
        c.n_fast = self.grid.n_fast;
        c.dt = pk.dt;
        c.samples = self.sweep.samples;
        c.max_h = pr.max_h;
        c.n_sub = pr.n_sub;
        c.c_growth = pr.c_growth;
        c.penalty = pr.penalty;
        c.nonlinear = pr.nonlinear;
        c.t1 = pk.t1;
        c.fp_tol = pr.fp_tol;
        c.fp_maxiter = pr.fp_maxiter;
        c.omega = pr.omega;
        c
    }

    pub fn growth_config(&self) -> GrowthConfig {
        let pk = &self.packet;
        let mut g = GrowthConfig::new(pk.p, pk.q, self.nls.t_end);
        g.k = pk.k;
        g.s = pk.s;
        g.profile = self.sweep.profile.clone();
        g.n = self.grid.nx;
        g.l = self.grid.lx;
        g.dt = self.nls.dt;
        g.samples = self.nls.samples;
        g.nonlinear = self.nls.nonlinear;
        g.t1 = pk.t1;
        g
    }
}
