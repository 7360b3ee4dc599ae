use std::f64::consts::PI;

use modlab_spectral::{Field, Grid, C64};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Analytic initial envelopes, centred at the origin of the slow grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    /// `exp(-r^2 / (2 sigma^2)) e^{i chirp X^2}`
    Gaussian { sigma: f64, chirp: f64 },
    /// `exp(-(r - radius)^2 / (2 width^2))`
    Ring { radius: f64, width: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Gaussian { sigma: 1.0, chirp: 0.0 }
    }
}

impl Profile {
    pub fn sample(&self, g: Grid) -> Field {
        match *self {
            Profile::Gaussian { sigma, chirp } => {
                Field::from_fn(g, move |x, y| C64::from_polar((-(x * x + y * y) / (2.0 * sigma * sigma)).exp(), chirp * x * x))
            }
            Profile::Ring { radius, width } => Field::from_fn(g, move |x, y| {
                let r = (x * x + y * y).sqrt() - radius;
                C64::new((-(r * r) / (2.0 * width * width)).exp(), 0.0)
            }),
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        let ok = match *self {
            Profile::Gaussian { sigma, chirp } => sigma > 0.0 && chirp.is_finite(),
            Profile::Ring { radius, width } => radius >= 0.0 && width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::BadConfig(format!("profile {self:?}")))
        }
    }
}

fn d_k() -> f64 {
    1.0
}
fn d_p() -> f64 {
    1.0
}
fn d_q() -> u32 {
    3
}
fn d_s() -> f64 {
    1.0
}
fn d_nu() -> f64 {
    1.5
}
fn d_depth() -> usize {
    3
}
fn d_n_slow() -> usize {
    128
}
fn d_s0() -> f64 {
    5.0 * PI
}
fn d_dt() -> f64 {
    1e-3
}
fn d_samples() -> usize {
    16
}
fn d_max_h() -> f64 {
    0.4
}
fn d_n_sub() -> usize {
    64
}
fn d_c_growth() -> f64 {
    1e5
}
fn d_true() -> bool {
    true
}
fn d_t1() -> f64 {
    1.0
}
fn d_fp_tol() -> f64 {
    1e-10
}
fn d_fp_maxiter() -> usize {
    60
}

/// One sweep over `epsilons` with every other knob shared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// Slow horizon: runs cover `t <= horizon_t / eps^2`.
    pub horizon_t: f64,
    #[serde(default = "d_depth")]
    pub depth: usize,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "d_k")]
    pub k: f64,
    #[serde(default = "d_p")]
    pub p: f64,
    #[serde(default = "d_q")]
    pub q: u32,
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default = "d_nu")]
    pub nu: f64,
    #[serde(default = "d_n_slow")]
    pub n_slow: usize,
    /// Slow box length before the carrier adjustment.
    #[serde(default = "d_s0")]
    pub s0: f64,
    /// Fast points per axis. `None` picks 256, or 512 below `eps = 0.03`.
    #[serde(default)]
    pub n_fast: Option<usize>,
    /// Slow step of the corrector integration.
    #[serde(default = "d_dt")]
    pub dt: f64,
    /// Sample count over the horizon, the same for every `eps`.
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default = "d_max_h")]
    pub max_h: f64,
    #[serde(default = "d_n_sub")]
    pub n_sub: usize,
    #[serde(default = "d_c_growth")]
    pub c_growth: f64,
    #[serde(default = "d_true")]
    pub penalty: bool,
    /// `false` drops the power nonlinearity in packet and progenitor alike.
    #[serde(default = "d_true")]
    pub nonlinear: bool,
    #[serde(default = "d_t1")]
    pub t1: f64,
    #[serde(default = "d_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "d_fp_maxiter")]
    pub fp_maxiter: usize,
    /// Overrides `omega = k^{p/2}` in `lambda` and `N`.
    #[serde(default)]
    pub omega: Option<f64>,
    /// Worker cap. `None` runs one worker per `eps`.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl SweepConfig {
    /// Reference setup: `k = p = s = 1`, `q = 3`, unit Gaussian.
    pub fn reference(epsilons: Vec<f64>, horizon_t: f64) -> Self {
        Self {
            epsilons,
            horizon_t,
            depth: d_depth(),
            profile: Profile::default(),
            k: d_k(),
            p: d_p(),
            q: d_q(),
            s: d_s(),
            nu: d_nu(),
            n_slow: d_n_slow(),
            s0: d_s0(),
            n_fast: None,
            dt: d_dt(),
            samples: d_samples(),
            max_h: d_max_h(),
            n_sub: d_n_sub(),
            c_growth: d_c_growth(),
            penalty: true,
            nonlinear: true,
            t1: d_t1(),
            fp_tol: d_fp_tol(),
            fp_maxiter: d_fp_maxiter(),
            omega: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::BadConfig(m));
        if self.epsilons.is_empty() {
            return bad("epsilons is empty".into());
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad(format!("epsilons must be positive: {:?}", self.epsilons));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad(format!("epsilons must be strictly decreasing: {:?}", self.epsilons));
        }
        if !(self.horizon_t > 0.0 && self.horizon_t.is_finite()) {
            return bad(format!("horizon_T = {} must be positive", self.horizon_t));
        }
        if self.samples == 0 || self.n_sub == 0 || !(self.max_h > 0.0) || !(self.dt > 0.0) {
            return bad("samples, n_sub, max_h and dt must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        self.profile.check()
    }

    pub fn n_fast_for(&self, eps: f64) -> usize {
        self.n_fast.unwrap_or(if eps < 0.03 { 512 } else { 256 })
    }
}

fn d_g_n() -> usize {
    128
}
fn d_g_l() -> f64 {
    16.0
}
fn d_g_dt() -> f64 {
    2e-3
}
fn d_g_samples() -> usize {
    50
}

/// Envelope-only run for the norm-growth trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    #[serde(default = "d_k")]
    pub k: f64,
    #[serde(default = "d_p")]
    pub p: f64,
    #[serde(default = "d_q")]
    pub q: u32,
    #[serde(default = "d_s")]
    pub s: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "d_g_n")]
    pub n: usize,
    #[serde(default = "d_g_l")]
    pub l: f64,
    pub t_end: f64,
    #[serde(default = "d_g_dt")]
    pub dt: f64,
    #[serde(default = "d_g_samples")]
    pub samples: usize,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
    #[serde(default = "d_t1")]
    pub t1: f64,
}

impl GrowthConfig {
    pub fn new(p: f64, q: u32, t_end: f64) -> Self {
        Self {
            k: d_k(),
            p,
            q,
            s: d_s(),
            profile: Profile::default(),
            n: d_g_n(),
            l: d_g_l(),
            t_end,
            dt: d_g_dt(),
            samples: d_g_samples(),
            nonlinear: true,
            t1: d_t1(),
        }
    }
}
