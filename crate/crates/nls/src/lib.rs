//! Split-step solver for the modulation equation
//!
//! `2 i tau A_T + c_X A_XX + c_Y A_YY + c_nl A |A|^{q-1} = 0`
//!
//! on a periodic slow grid, plus the `u -> A` coordinate map and the
//! `H^s` growth functional.

use modlab_spectral::{
    norm, weighted_pairing, Complex, Dealias, Field, Grid, Multiplier, Norm, Rep, SpectralError, Transform, C64,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NlsError {
    #[error("q must be an odd integer >= 3, got {0}")]
    BadExponent(u32),
    #[error("s = {s} is not above the critical index {sc}")]
    Subcritical { s: f64, sc: f64 },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("p = 2 makes the X scaling degenerate")]
    DegenerateScaling,
    #[error("non-finite sample at T = {t} (step {step})")]
    NonFinite { step: usize, t: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Which overall normalization the equation is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlsForm {
    /// `tau = omega`, `c_nl = C_omega`.
    Actual,
    /// Actual form divided by `k^{p-2}`: `tau = omega^{4/p-1}`, `c_nl = 1`.
    Normalized,
}

/// Coefficient of `A_YY`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum YConvention {
    /// `-p k^{p-2} / 2`, the value the multiple-scales balance produces.
    #[default]
    Derived,
    /// `-p k^{p-2}`.
    Stated,
}

pub fn critical_index(q: u32) -> Result<f64, NlsError> {
    if q < 3 || q % 2 == 0 {
        return Err(NlsError::BadExponent(q));
    }
    Ok(1.0 - 2.0 / (q as f64 - 1.0))
}

pub fn dispersion(k: f64, p: f64) -> f64 {
    k.abs().powf(p / 2.0)
}

/// `C_omega = omega^{2 - 4/p}`.
pub fn c_omega(omega: f64, p: f64) -> f64 {
    omega.powf(2.0 - 4.0 / p)
}

pub fn c_x(k: f64, p: f64) -> f64 {
    0.25 * p * (2.0 - p) * k.abs().powf(p - 2.0)
}

pub fn c_y(k: f64, p: f64, conv: YConvention) -> f64 {
    let base = -p * k.abs().powf(p - 2.0);
    match conv {
        YConvention::Derived => 0.5 * base,
        YConvention::Stated => base,
    }
}

#[derive(Clone, Debug)]
pub struct NlsParams {
    pub p: f64,
    pub q: u32,
    pub s: f64,
    pub k: f64,
    pub omega: f64,
    pub grid: Grid,
    pub dt: f64,
    pub t1: f64,
    pub form: NlsForm,
    pub y_convention: YConvention,
    /// Coefficient of `2 i A_T`.
    pub tau: f64,
    pub cx: f64,
    pub cy: f64,
    pub cnl: f64,
}

impl NlsParams {
    /// Actual form, derived `Y` coefficient, default `dt` and `T1 = 1`.
    pub fn new(p: f64, q: u32, s: f64, k: f64, grid: Grid) -> Result<Self, NlsError> {
        let sc = critical_index(q)?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(NlsError::BadParam(format!("p = {p} must be positive")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(NlsError::BadParam(format!("k = {k} must be positive")));
        }
        if !(s > sc) {
            return Err(NlsError::Subcritical { s, sc });
        }
        let dx = grid.dx().min(grid.dy());
        let mut out = Self {
            p,
            q,
            s,
            k,
            omega: dispersion(k, p),
            grid,
            dt: (0.25 * dx * dx).min(1e-2),
            t1: 1.0,
            form: NlsForm::Actual,
            y_convention: YConvention::Derived,
            tau: 0.0,
            cx: 0.0,
            cy: 0.0,
            cnl: 0.0,
        };
        out.refresh();
        Ok(out)
    }

    fn refresh(&mut self) {
        let (p, k, w) = (self.p, self.k, self.omega);
        let (cx, cy, cn) = (c_x(k, p), c_y(k, p, self.y_convention), c_omega(w, p));
        let scale = match self.form {
            NlsForm::Actual => 1.0,
            NlsForm::Normalized => k.abs().powf(p - 2.0),
        };
        self.tau = w / scale;
        self.cx = cx / scale;
        self.cy = cy / scale;
        self.cnl = cn / scale;
    }

    pub fn with_form(mut self, form: NlsForm) -> Self {
        self.form = form;
        self.refresh();
        self
    }

    pub fn with_y_convention(mut self, conv: YConvention) -> Self {
        self.y_convention = conv;
        self.refresh();
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, NlsError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(NlsError::BadParam(format!("dT = {dt} must be positive")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_t1(mut self, t1: f64) -> Result<Self, NlsError> {
        if !(t1 > 0.0 && t1.is_finite()) {
            return Err(NlsError::BadParam(format!("T1 = {t1} must be positive")));
        }
        self.t1 = t1;
        Ok(self)
    }

    /// Linear symbol `-(c_X xi1^2 + c_Y xi2^2)`, so that `A_T = i/(2 tau) (L A + c_nl N)`.
    pub fn linear_symbol(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.len());
        for iy in 0..g.ny {
            let b = g.xi2(iy);
            for ix in 0..g.nx {
                let a = g.xi1(ix);
                out.push(-(self.cx * a * a + self.cy * b * b));
            }
        }
        out
    }
}

/// Sampling metadata for a field on the normalized `(x, y, t)` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaleMap {
    pub sx: f64,
    pub sy: f64,
    pub st: f64,
}

impl RescaleMap {
    pub fn new(p: f64, omega: f64) -> Result<Self, NlsError> {
        if p == 2.0 {
            return Err(NlsError::DegenerateScaling);
        }
        if !(p > 0.0) || !(omega > 0.0) {
            return Err(NlsError::BadParam(format!("need p > 0 and omega > 0, got p = {p}, omega = {omega}")));
        }
        Ok(Self { sx: 0.5 * (p * (2.0 - p).abs()).sqrt(), sy: p.sqrt(), st: 2.0 * omega.powf(4.0 / p - 1.0) })
    }

    pub fn apply(&self, x: f64, y: f64, t: f64) -> (f64, f64, f64) {
        (self.sx * x, self.sy * y, self.st * t)
    }
}

/// Relabels samples of `u(t)` as samples of `A(T)`: the values are kept and
/// the grid lengths and time are dilated, so sup norms agree by construction.
pub fn rescale_u_to_a(u: &Field, t: f64, p: f64, omega: f64) -> Result<(Field, f64), NlsError> {
    let m = RescaleMap::new(p, omega)?;
    let g = u.grid();
    let grid = Grid::new(g.nx, g.ny, g.lx * m.sx, g.ly * m.sy)?;
    Ok((u.clone().regrid(grid)?, t * m.st))
}

/// Split-step integrator with cached symbol tables.
pub struct NlsSolver {
    pub params: NlsParams,
    tr: Transform,
    symbol: Vec<f64>,
}

impl NlsSolver {
    pub fn new(params: NlsParams) -> Self {
        let tr = Transform::for_grid(&params.grid);
        let symbol = params.linear_symbol();
        Self { params, tr, symbol }
    }

    pub fn transform(&self) -> &Transform {
        &self.tr
    }

    /// Exact flow of `2 i tau A_T + c_nl A|A|^{q-1} = 0` over `h`, in place on physical samples.
    pub fn rotate(&self, a: &mut Field, h: f64) {
        assert_eq!(a.rep(), Rep::Physical);
        let c = self.params.cnl * h / (2.0 * self.params.tau);
        let e = ((self.params.q - 1) / 2) as i32;
        for v in a.data_mut() {
            let ph = c * v.norm_sqr().powi(e);
            *v *= C64::from_polar(1.0, ph);
        }
    }

    /// Exact linear flow over `h`, in place on spectral coefficients.
    pub fn linear(&self, a: &mut Field, h: f64) {
        assert_eq!(a.rep(), Rep::Spectral);
        let c = h / (2.0 * self.params.tau);
        for (v, &w) in a.data_mut().iter_mut().zip(&self.symbol) {
            *v *= C64::from_polar(1.0, w * c);
        }
    }

    /// One Strang step of size `h`: half rotation, linear, half rotation.
    pub fn step(&self, a: &Field, h: f64) -> Field {
        let mut b = self.tr.to_physical(a);
        self.rotate(&mut b, 0.5 * h);
        self.tr.make_spectral(&mut b);
        self.linear(&mut b, h);
        self.tr.make_physical(&mut b);
        self.rotate(&mut b, 0.5 * h);
        b
    }

    /// Pseudo-spectral right-hand side `A_T`, physical in/out. Used by the
    /// explicit reference integrators.
    pub fn rhs(&self, a: &Field) -> Field {
        let p = &self.params;
        let phys = self.tr.to_physical(a);
        let mut lin = self.tr.to_spectral(&phys);
        for (v, &w) in lin.data_mut().iter_mut().zip(&self.symbol) {
            *v *= w;
        }
        self.tr.make_physical(&mut lin);
        let e = ((p.q - 1) / 2) as i32;
        let scale = C64::new(0.0, 1.0 / (2.0 * p.tau));
        let data = lin
            .data()
            .iter()
            .zip(phys.data())
            .map(|(l, v)| scale * (l + v * (p.cnl * v.norm_sqr().powi(e))))
            .collect();
        Field::new(p.grid, data, Rep::Physical).expect("shape")
    }

    /// Advances `a` from `T` to `T + span` in equal Strang steps no larger than `dt`.
    pub fn advance(&self, a: &Field, span: f64) -> Result<Field, NlsError> {
        if span == 0.0 {
            return Ok(self.tr.to_physical(a));
        }
        let n = (span / self.params.dt - 1e-12).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut cur = self.tr.to_physical(a);
        for i in 0..n {
            cur = self.step(&cur, h);
            if !cur.is_finite() {
                return Err(NlsError::NonFinite { step: i + 1, t: (i + 1) as f64 * h });
            }
        }
        Ok(cur)
    }
}

#[derive(Clone, Debug)]
pub struct NlsState {
    pub a: Field,
    pub t: f64,
}

/// Stored states of one run, plus an evaluator between them.
pub struct Trajectory {
    solver: NlsSolver,
    pub h: f64,
    pub store_every: usize,
    pub states: Vec<NlsState>,
}

/// Integrates to `t_end` with step `h = t_end / ceil(t_end / dt)`, storing
/// every `store_every`-th state (the first and last are always kept).
pub fn run_nls(a0: &Field, params: NlsParams, t_end: f64, store_every: usize) -> Result<Trajectory, NlsError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(NlsError::BadParam(format!("T_end = {t_end} must be positive")));
    }
    if !a0.grid().same_lattice(&params.grid) {
        return Err(SpectralError::GridMismatch.into());
    }
    let store_every = store_every.max(1);
    let solver = NlsSolver::new(params);
    let n = (t_end / solver.params.dt - 1e-12).ceil().max(1.0) as usize;
    let h = t_end / n as f64;
    let mut cur = solver.tr.to_physical(a0);
    let mut states = vec![NlsState { a: cur.clone(), t: 0.0 }];
    for i in 1..=n {
        cur = solver.step(&cur, h);
        if !cur.is_finite() {
            return Err(NlsError::NonFinite { step: i, t: i as f64 * h });
        }
        if i % store_every == 0 || i == n {
            states.push(NlsState { a: cur.clone(), t: i as f64 * h });
        }
    }
    Ok(Trajectory { solver, h, store_every, states })
}

impl Trajectory {
    pub fn params(&self) -> &NlsParams {
        &self.solver.params
    }

    pub fn solver(&self) -> &NlsSolver {
        &self.solver
    }

    pub fn t_end(&self) -> f64 {
        self.states.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// State at slow time `t`: the nearest stored state at or before `t`,
    /// stepped forward with steps of at most `h`. Physical.
    pub fn at(&self, t: f64) -> Result<Field, NlsError> {
        let t = t.clamp(0.0, self.t_end());
        let i = self.states.partition_point(|s| s.t <= t + 1e-14).saturating_sub(1);
        let base = &self.states[i];
        let span = t - base.t;
        if span <= 1e-14 {
            return Ok(base.a.clone());
        }
        let n = (span / self.h - 1e-9).ceil().max(1.0) as usize;
        let hh = span / n as f64;
        let mut cur = base.a.clone();
        for _ in 0..n {
            cur = self.solver.step(&cur, hh);
        }
        Ok(cur)
    }

    /// `A(X + shift, Y, t)`, by a spectral phase.
    pub fn shifted(&self, t: f64, shift: f64) -> Result<Field, NlsError> {
        Ok(translate_x(&self.at(t)?, shift, &self.solver.tr))
    }
}

/// `f(X + shift, Y)`, spectral output.
pub fn translate_x(f: &Field, shift: f64, tr: &Transform) -> Field {
    let mut g = tr.to_spectral(f);
    let grid = *g.grid();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let j = iy * grid.nx + ix;
            g.data_mut()[j] *= C64::from_polar(1.0, grid.xi1(ix) * shift);
        }
    }
    g
}

/// `G = ||A||_{H^s}^2 + 2 (T + T1) <Lambda^s A, Lambda^s (i A |A|^{q-1})>`.
pub fn growth_functional(a: &Field, t: f64, params: &NlsParams, dealias: &Dealias) -> f64 {
    let hs = norm(a, Norm::Hs(params.s), dealias.transformer());
    hs * hs + 2.0 * (t + params.t1) * growth_pairing(a, params.s, params.q, dealias)
}

/// `<Lambda^s A, Lambda^s (i A |A|^{q-1})>` alone.
pub fn growth_pairing(a: &Field, s: f64, q: u32, dealias: &Dealias) -> f64 {
    let tr = dealias.transformer();
    let spec = tr.to_spectral(a);
    let nl = dealias.power(&spec, q, 1.0).scaled(Complex::new(0.0, 1.0));
    let w: Vec<f64> = Multiplier::BesselPower { s }.tabulate(spec.grid()).iter().map(|v| v * v).collect();
    weighted_pairing(&spec, &nl, &w)
}

pub fn mass(a: &Field, tr: &Transform) -> f64 {
    norm(a, Norm::L2, tr)
}
