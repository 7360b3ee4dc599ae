//! Batch experiments. Each takes its config by reference and returns plain
//! data; tables are built from it in config order.

use std::time::Instant;

use modlab_nls::{growth_functional, growth_pairing, mass, run_nls, NlsParams};
use modlab_packet::{CorrectorSet, PacketParams};
use modlab_progenitor::{CompatOutcome, PenaltyLedger, Progenitor, ProgenitorParams, ProgenitorState, SubintervalStats};
use modlab_spectral::{norm, Dealias, Field, Grid, Norm, Transform};
use serde::Serialize;

use crate::setup::packet_params;
use crate::{fit_linear, fit_loglog_order, packet_set, FitResult, GrowthConfig, HarnessError, SweepConfig, Table};

/// One sampled time of a progenitor run. `r = z - B z~`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub r_l2: f64,
    pub r_hse: f64,
    pub rt_hse: f64,
    pub rtt_hse: f64,
    pub lambda: f64,
    pub energy: f64,
    /// `L^2` norm of the leading envelope at the matching slow time.
    pub mass_progeny: f64,
}

pub const TRACE_COLUMNS: [&str; 8] = ["t", "r_l2", "r_hse", "rt_hse", "rtt_hse", "lambda", "energy", "mass_progeny"];
pub const SWEEP_COLUMNS: [&str; 4] = ["epsilon", "sup_r_hse", "sup_rt_hse", "sup_rtt_hse"];
pub const FIT_COLUMNS: [&str; 3] = ["slope", "intercept", "r_squared"];

impl DiagnosticsRecord {
    pub fn row_is_finite(&self) -> bool {
        self.row().iter().all(|v| v.is_finite())
    }

    fn row(&self) -> Vec<f64> {
        vec![self.t, self.r_l2, self.r_hse, self.rt_hse, self.rtt_hse, self.lambda, self.energy, self.mass_progeny]
    }
}

/// Everything one `eps` of a sweep produced.
#[derive(Clone, Debug)]
pub struct EpsRun {
    pub eps: f64,
    /// Max over samples of `HsEps(z~ - B z~)`, the packet's part outside
    /// the mode ball.
    pub packet_tail_hse: f64,
    pub trace: Vec<DiagnosticsRecord>,
    pub ledger: PenaltyLedger,
    pub stats: Vec<SubintervalStats>,
    pub compat_iterations: usize,
    pub compat_residual: f64,
    pub lambda_w0: f64,
    pub lambda_star: f64,
    pub h: f64,
    pub steps: usize,
    pub seconds: f64,
}

/// Sup over sampled times of `HsEps(r)`, `HsEps(r_t)`, `HsEps(r_tt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RemainderRow {
    pub epsilon: f64,
    pub sup_r_hse: f64,
    pub sup_rt_hse: f64,
    pub sup_rtt_hse: f64,
}

impl EpsRun {
    pub fn sup(&self) -> RemainderRow {
        let m = |f: fn(&DiagnosticsRecord) -> f64| self.trace.iter().map(f).fold(0.0, f64::max);
        RemainderRow { epsilon: self.eps, sup_r_hse: m(|d| d.r_hse), sup_rt_hse: m(|d| d.rt_hse), sup_rtt_hse: m(|d| d.rtt_hse) }
    }

    pub fn trace_table(&self) -> Table {
        let mut t = Table::new(&TRACE_COLUMNS);
        for d in &self.trace {
            t.push(d.row());
        }
        t
    }

    /// `max E(t) / E(0)` over the ledger.
    pub fn energy_ratio(&self) -> f64 {
        let e0 = self.ledger.rows.first().map(|r| r.energy).unwrap_or(0.0);
        if e0 == 0.0 {
            return 0.0;
        }
        self.ledger.rows.iter().map(|r| r.energy / e0).fold(0.0, f64::max)
    }

    /// Largest `lambda` seen: ledger rows and every subinterval's
    /// quadrature nodes.
    pub fn max_lambda(&self) -> f64 {
        self.stats.iter().map(|s| s.lambda_max).fold(self.ledger.max_lambda(), f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub runs: Vec<EpsRun>,
    /// Log-log fits of the three sup columns against `eps`, when at least
    /// three values were swept.
    pub fits: Option<[FitResult; 3]>,
}

impl SweepOutcome {
    pub fn sup_table(&self) -> Table {
        let mut t = Table::new(&SWEEP_COLUMNS);
        for r in &self.runs {
            let s = r.sup();
            t.push(vec![s.epsilon, s.sup_r_hse, s.sup_rt_hse, s.sup_rtt_hse]);
        }
        t
    }

    /// Rows for `r`, `r_t`, `r_tt`, in that order.
    pub fn fits_table(&self) -> Table {
        fits_table(self.fits.iter().flatten())
    }
}

pub(crate) fn fits_table<'a>(fits: impl IntoIterator<Item = &'a FitResult>) -> Table {
    let mut t = Table::new(&FIT_COLUMNS);
    for f in fits {
        t.push(vec![f.slope, f.intercept, f.r_squared]);
    }
    t
}

struct Pipeline {
    set: CorrectorSet,
    eng: Progenitor,
    st0: ProgenitorState,
    compat: CompatOutcome,
    ftr: Transform,
    slow_tr: Transform,
    pp: PacketParams,
}

fn anchor_of(set: &CorrectorSet, s: f64) -> f64 {
    let slow = set.params().slow;
    norm(&set.states[0].a[0], Norm::Hs(s), &Transform::for_grid(&slow))
}

/// Packet at `eps`, a progenitor fitted to `horizon`, then `tweak`, then
/// compatible initial data from `z~(0)`, `z~_t(0)`.
fn pipeline(cfg: &SweepConfig, eps: f64, horizon: f64, tweak: impl FnOnce(&mut ProgenitorParams)) -> Result<Pipeline, HarnessError> {
    let pp = packet_params(cfg, eps, cfg.depth)?;
    let set = packet_set(&pp, &cfg.profile, cfg.horizon_t)?;
    let anchor = anchor_of(&set, cfg.s);
    let at = HarnessError::at(eps);
    let mut prm = ProgenitorParams::new(eps, cfg.k, cfg.p, cfg.q, cfg.s, cfg.nu, anchor, pp.fast).map_err(&at)?;
    prm.c_growth = cfg.c_growth;
    prm.penalty = cfg.penalty;
    prm.t1 = cfg.t1;
    prm.fp_tol = cfg.fp_tol;
    prm.fp_maxiter = cfg.fp_maxiter;
    prm.n_sub = cfg.n_sub;
    if let Some(w) = cfg.omega {
        prm.omega = w;
    }
    if !cfg.nonlinear {
        prm.c_omega = 0.0;
    }
    let mut prm = prm.validated().map_err(&at)?.fit_windows(horizon, cfg.max_h).map_err(&at)?;
    tweak(&mut prm);
    let eng = Progenitor::new(prm.validated().map_err(&at)?).map_err(&at)?;
    let ev = set.assemble(0.0)?;
    let (st0, compat) = eng.initial_state(&ev.z, &ev.zt).map_err(&at)?;
    Ok(Pipeline { ftr: Transform::for_grid(&pp.fast), slow_tr: Transform::for_grid(&pp.slow), set, eng, st0, compat, pp })
}

/// Boundary indices nearest to `i n / samples`, `i = 0..=samples`.
fn sample_mask(n: usize, samples: usize) -> Vec<bool> {
    let mut mask = vec![false; n + 1];
    for i in 0..=samples {
        mask[(i * n + samples / 2) / samples] = true;
    }
    mask
}

fn run_eps(cfg: &SweepConfig, eps: f64) -> Result<EpsRun, HarnessError> {
    let clock = Instant::now();
    let horizon = cfg.horizon_t / (eps * eps);
    let pl = pipeline(cfg, eps, horizon, |_| {})?;
    let eng = &pl.eng;
    let steps = eng.steps_for(horizon).map_err(HarnessError::at(eps))?;
    let mask = sample_mask(steps, cfg.samples);
    let hse = Norm::HsEps { s: cfg.s, eps, k: cfg.k };
    let mut trace = Vec::new();
    let mut failure: Option<HarnessError> = None;
    let mut j = 0usize;
    let mut tail: f64 = 0.0;
    let mut record = |s: &ProgenitorState| -> Result<DiagnosticsRecord, HarnessError> {
        let ev = pl.set.assemble(s.t)?;
        // z lives on the mode ball, so r is taken against B z~. The packet's
        // spectral tail outside the ball is tracked on its own.
        let zs = pl.ftr.to_spectral(&ev.z);
        let bz = eng.filter(&zs);
        tail = tail.max(norm(&zs.sub(&bz), hse, &pl.ftr));
        let r = s.z.sub(&bz);
        let rt = s.zt.sub(&eng.filter(&ev.zt));
        let rtt = s.ztt.sub(&eng.filter(&ev.ztt));
        let big_t = (eps * eps * s.t).min(pl.set.t_end());
        let a1 = pl.set.state_at(big_t)?.swap_remove(0);
        Ok(DiagnosticsRecord {
            t: s.t,
            r_l2: norm(&r, Norm::L2, &pl.ftr),
            r_hse: norm(&r, hse, &pl.ftr),
            rt_hse: norm(&rt, hse, &pl.ftr),
            rtt_hse: norm(&rtt, hse, &pl.ftr),
            lambda: eng.lambda_of(&s.ztt),
            energy: eng.hamiltonian(s),
            mass_progeny: mass(&a1, &pl.slow_tr),
        })
    };
    let (_, ledger, stats) = eng
        .run_with(&pl.st0, horizon, |s| {
            if mask[j] && failure.is_none() {
                match record(s) {
                    Ok(d) => trace.push(d),
                    Err(e) => failure = Some(e),
                }
            }
            j += 1;
        })
        .map_err(HarnessError::at(eps))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(EpsRun {
        eps,
        packet_tail_hse: tail,
        trace,
        ledger,
        stats,
        compat_iterations: pl.compat.iterations,
        compat_residual: pl.compat.residual,
        lambda_w0: pl.compat.lambda,
        lambda_star: eng.params().lambda_star,
        h: eng.params().h(),
        steps,
        seconds: clock.elapsed().as_secs_f64(),
    })
}

/// `f` on every `eps`, one scoped worker each (at most `threads` at a
/// time), results in input order.
fn per_eps<T: Send>(eps: &[f64], threads: Option<usize>, f: impl Fn(f64) -> Result<T, HarnessError> + Sync) -> Result<Vec<T>, HarnessError> {
    let width = threads.unwrap_or(eps.len()).max(1);
    let mut out = Vec::with_capacity(eps.len());
    for chunk in eps.chunks(width) {
        let results: Vec<Result<T, HarnessError>> = std::thread::scope(|sc| {
            let f = &f;
            let handles: Vec<_> = chunk.iter().map(|&e| sc.spawn(move || f(e))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

fn fit3(points: [Vec<(f64, f64)>; 3]) -> Option<[FitResult; 3]> {
    let [a, b, c] = points;
    Some([fit_loglog_order(&a).ok()?, fit_loglog_order(&b).ok()?, fit_loglog_order(&c).ok()?])
}

/// NLS, packet and penalized progenitor at each `eps`, recording
/// `r = z - z~` at a fixed number of slow-time samples.
pub fn remainder_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, HarnessError> {
    cfg.validate()?;
    let runs = per_eps(&cfg.epsilons, cfg.threads, |e| run_eps(cfg, e))?;
    let sups: Vec<RemainderRow> = runs.iter().map(EpsRun::sup).collect();
    let col = |f: fn(&RemainderRow) -> f64| sups.iter().map(|r| (r.epsilon, f(r))).collect::<Vec<_>>();
    let fits = if runs.len() >= 3 { fit3([col(|r| r.sup_r_hse), col(|r| r.sup_rt_hse), col(|r| r.sup_rtt_hse)]) } else { None };
    Ok(SweepOutcome { runs, fits })
}

#[derive(Clone, Debug, Serialize)]
pub struct PenaltyReport {
    pub epsilon: f64,
    pub compat_iterations: usize,
    pub compat_residual: f64,
    pub lambda_w0: f64,
    /// `1/2 + 1/(2 nu^2)`
    pub lambda_w0_bound: f64,
    pub max_lambda: f64,
    pub lambda_star: f64,
    pub max_energy_ratio: f64,
    pub max_iterations: usize,
}

pub fn penalty_report(cfg: &SweepConfig, sweep: &SweepOutcome) -> Vec<PenaltyReport> {
    sweep
        .runs
        .iter()
        .map(|r| PenaltyReport {
            epsilon: r.eps,
            compat_iterations: r.compat_iterations,
            compat_residual: r.compat_residual,
            lambda_w0: r.lambda_w0,
            lambda_w0_bound: 0.5 + 0.5 / (cfg.nu * cfg.nu),
            max_lambda: r.max_lambda(),
            lambda_star: r.lambda_star,
            max_energy_ratio: r.energy_ratio(),
            max_iterations: r.ledger.max_iterations(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualOutcome {
    pub epsilons: Vec<f64>,
    pub depths: Vec<usize>,
    /// `sup[d][e]`: sup over samples of the fast `L^2` residual.
    pub sup: Vec<Vec<f64>>,
    pub fits: Vec<FitResult>,
    /// Slope gain per added corrector.
    pub increments: Vec<f64>,
}

impl ResidualOutcome {
    /// Columns `depth, epsilon, sup_residual_l2`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["depth", "epsilon", "sup_residual_l2"]);
        for (d, row) in self.depths.iter().zip(&self.sup) {
            for (e, v) in self.epsilons.iter().zip(row) {
                t.push(vec![*d as f64, *e, *v]);
            }
        }
        t
    }
}

/// Sup-in-time residual of the truncated packet for each depth and `eps`.
/// One corrector build at the largest depth serves every row.
pub fn residual_order_study(cfg: &SweepConfig, depths: &[usize]) -> Result<ResidualOutcome, HarnessError> {
    cfg.validate()?;
    let top = depths.iter().copied().max().ok_or_else(|| HarnessError::BadConfig("no depths".into()))?;
    let per = per_eps(&cfg.epsilons, cfg.threads, |eps| {
        let pp = packet_params(cfg, eps, top)?;
        let full = packet_set(&pp, &cfg.profile, cfg.horizon_t)?;
        depths
            .iter()
            .map(|&d| {
                let set = full.truncated(d)?;
                let mut sup: f64 = 0.0;
                for i in 0..=cfg.samples {
                    let big_t = cfg.horizon_t * i as f64 / cfg.samples as f64;
                    sup = sup.max(set.residual_norm(big_t / (eps * eps))?);
                }
                Ok(sup)
            })
            .collect::<Result<Vec<f64>, HarnessError>>()
    })?;
    let sup: Vec<Vec<f64>> = (0..depths.len()).map(|d| per.iter().map(|row| row[d]).collect()).collect();
    let fits = sup
        .iter()
        .map(|row| fit_loglog_order(&cfg.epsilons.iter().copied().zip(row.iter().copied()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>, _>>()?;
    let increments = fits.windows(2).map(|w| w[1].slope - w[0].slope).collect();
    Ok(ResidualOutcome { epsilons: cfg.epsilons.clone(), depths: depths.to_vec(), sup, fits, increments })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityOutcome {
    pub epsilons: Vec<f64>,
    pub depths: Vec<usize>,
    /// `scaled[d][e] = sup_T |packet pairing - prediction| / eps^3`.
    pub scaled: Vec<Vec<f64>>,
    /// `|difference|` ratios between successive `eps` at the last depth,
    /// rescaled to one halving of `eps`.
    pub halving_ratios: Vec<f64>,
    /// Packet pairing over `eps^3` at `T = 0`, last depth.
    pub at_zero: Vec<f64>,
}

impl IdentityOutcome {
    /// Columns `depth, epsilon, sup_diff_over_eps3`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["depth", "epsilon", "sup_diff_over_eps3"]);
        for (d, row) in self.depths.iter().zip(&self.scaled) {
            for (e, v) in self.epsilons.iter().zip(row) {
                t.push(vec![*d as f64, *e, *v]);
            }
        }
        t
    }
}

/// Packet-side `<Lambda_eps^{2s} z~_tt, z~_ttt>` against the envelope
/// prediction `1/2 omega^3 C_omega eps^2 <Lambda^{2s} A, i A |A|^{q-1}>`,
/// at depth 1 and at `cfg.depth`.
pub fn modulation_identity_check(cfg: &SweepConfig) -> Result<IdentityOutcome, HarnessError> {
    cfg.validate()?;
    if cfg.depth < 3 {
        return Err(HarnessError::BadConfig(format!("identity check needs depth >= 3, got {}", cfg.depth)));
    }
    let depths = vec![1, cfg.depth];
    let per = per_eps(&cfg.epsilons, cfg.threads, |eps| {
        let pp = packet_params(cfg, eps, cfg.depth)?;
        let full = packet_set(&pp, &cfg.profile, cfg.horizon_t)?;
        let dealias = Dealias::new(&pp.slow);
        let c = 0.5 * pp.omega.powi(3) * pp.c_omega * eps * eps;
        let mut sups = Vec::new();
        let mut zero = 0.0;
        for &d in &depths {
            let set = full.truncated(d)?;
            let mut sup: f64 = 0.0;
            for i in 0..=cfg.samples {
                let big_t = cfg.horizon_t * i as f64 / cfg.samples as f64;
                let lhs = set.packet_pairing(big_t / (eps * eps))?;
                let a1 = set.state_at(big_t)?.swap_remove(0);
                let rhs = c * growth_pairing(&a1, cfg.s, cfg.q, &dealias);
                sup = sup.max((lhs - rhs).abs());
                if i == 0 {
                    zero = lhs / eps.powi(3);
                }
            }
            sups.push(sup);
        }
        Ok((sups, zero))
    })?;
    let raw: Vec<Vec<f64>> = (0..depths.len()).map(|d| per.iter().map(|p| p.0[d]).collect()).collect();
    let last = raw.last().expect("two depths");
    let halving_ratios = (1..cfg.epsilons.len())
        .map(|i| {
            let (e0, e1) = (cfg.epsilons[i - 1], cfg.epsilons[i]);
            (last[i - 1] / last[i]).powf(2f64.ln() / (e0 / e1).ln())
        })
        .collect();
    let scaled = raw.iter().map(|row| row.iter().zip(&cfg.epsilons).map(|(v, e)| v / e.powi(3)).collect()).collect();
    Ok(IdentityOutcome { epsilons: cfg.epsilons.clone(), depths, scaled, halving_ratios, at_zero: per.iter().map(|p| p.1).collect() })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedOutcome {
    pub eps: f64,
    /// `-omega'`
    pub expected: f64,
    /// Centroid `x` against fast time.
    pub fit: FitResult,
    pub rel_err: f64,
    /// Max `|x(t) - x(0) + omega' t|` in fast grid cells.
    pub max_drift_cells: f64,
}

fn centroid_x(f: &Field) -> f64 {
    let g: Grid = *f.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let w = f.at(ix, iy).norm_sqr();
            num += w * g.x(ix);
            den += w;
        }
    }
    num / den
}

/// Linearized progenitor run (power term and penalty off) from packet data
/// at the first `eps`; the `|z|^2` centroid should move at `-omega'`.
pub fn envelope_speed_check(cfg: &SweepConfig) -> Result<SpeedOutcome, HarnessError> {
    cfg.validate()?;
    let mut lin = cfg.clone();
    lin.nonlinear = false;
    lin.penalty = false;
    let eps = cfg.epsilons[0];
    let horizon = cfg.horizon_t / (eps * eps);
    let pl = pipeline(&lin, eps, horizon, |_| {})?;
    let steps = pl.eng.steps_for(horizon).map_err(HarnessError::at(eps))?;
    let mask = sample_mask(steps, cfg.samples);
    let mut pts = Vec::new();
    let mut j = 0usize;
    pl.eng
        .run_with(&pl.st0, horizon, |s| {
            if mask[j] {
                pts.push((s.t, centroid_x(&pl.ftr.to_physical(&s.z))));
            }
            j += 1;
        })
        .map_err(HarnessError::at(eps))?;
    let fit = fit_linear(&pts)?;
    let expected = -pl.pp.omega_p;
    let x0 = pts[0].1;
    let dx = pl.pp.fast.dx();
    let max_drift_cells = pts.iter().map(|&(t, x)| (x - x0 - expected * t).abs() / dx).fold(0.0, f64::max);
    Ok(SpeedOutcome { eps, expected, rel_err: ((fit.slope - expected) / expected).abs(), fit, max_drift_cells })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthOutcome {
    /// Columns `t, hs_norm, growth_functional, mass`.
    #[serde(skip)]
    pub trace: Table,
    /// `ln ||A||_{H^s}` against `ln(1 + T)`.
    pub fit: Option<FitResult>,
    /// `max |norm - norm(0)| / norm(0)`
    pub max_rel_change: f64,
}

/// Envelope-only run recording `||A(T)||_{H^s}` and the growth functional.
pub fn norm_growth_experiment(cfg: &GrowthConfig) -> Result<GrowthOutcome, HarnessError> {
    let grid = Grid::new(cfg.n, cfg.n, cfg.l, cfg.l)?;
    let mut prm = NlsParams::new(cfg.p, cfg.q, cfg.s, cfg.k, grid)?.with_dt(cfg.dt)?.with_t1(cfg.t1)?;
    if !cfg.nonlinear {
        prm.cnl = 0.0;
    }
    let samples = cfg.samples.max(1);
    let steps = (cfg.t_end / prm.dt - 1e-12).ceil().max(1.0) as usize;
    let every = (steps / samples).max(1);
    let a0 = cfg.profile.sample(grid);
    let dealias = Dealias::new(&grid);
    let tr = Transform::for_grid(&grid);
    let traj = run_nls(&a0, prm.clone(), cfg.t_end, every)?;
    let mut trace = Table::new(&["t", "hs_norm", "growth_functional", "mass"]);
    for st in &traj.states {
        let hs = norm(&st.a, Norm::Hs(cfg.s), &tr);
        trace.push(vec![st.t, hs, growth_functional(&st.a, st.t, &prm, &dealias), mass(&st.a, &tr)]);
    }
    let hs = trace.column("hs_norm").expect("column");
    let t = trace.column("t").expect("column");
    let max_rel_change = hs.iter().map(|v| (v - hs[0]).abs() / hs[0]).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = t.iter().zip(&hs).map(|(t, v)| (1.0 + t, *v)).collect();
    Ok(GrowthOutcome { trace, fit: fit_loglog_order(&pts).ok(), max_rel_change })
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpOutcome {
    pub n_subs: Vec<usize>,
    pub max_jumps: Vec<f64>,
    pub fit: FitResult,
}

/// Max `z_tt` jump over one window of half-length `t0`, for each
/// subinterval count, at the first `eps`.
pub fn jump_refinement(cfg: &SweepConfig, n_subs: &[usize], t0: f64) -> Result<JumpOutcome, HarnessError> {
    cfg.validate()?;
    let eps = cfg.epsilons[0];
    let mut max_jumps = Vec::new();
    for &n in n_subs {
        let pl = pipeline(cfg, eps, 2.0 * t0, |p| {
            p.n_sub = n;
            p.t0 = t0;
        })?;
        let (_, _, stats) = pl.eng.run_with(&pl.st0, 2.0 * t0, |_| {}).map_err(HarnessError::at(eps))?;
        max_jumps.push(stats.iter().map(|s| s.jump).fold(0.0, f64::max));
    }
    let pts: Vec<(f64, f64)> = n_subs.iter().map(|&n| n as f64).zip(max_jumps.iter().copied()).collect();
    Ok(JumpOutcome { n_subs: n_subs.to_vec(), fit: fit_loglog_order(&pts)?, max_jumps })
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub eps: f64,
    pub windows: usize,
    /// Max over windows of `max |E - E(window start)| / E(window start)`.
    pub max_rel_drift: f64,
}

/// Hamiltonian drift per window with the penalty switched off, at the
/// first `eps` over the configured horizon.
pub fn energy_drift_check(cfg: &SweepConfig) -> Result<DriftReport, HarnessError> {
    cfg.validate()?;
    let mut off = cfg.clone();
    off.penalty = false;
    let eps = cfg.epsilons[0];
    let horizon = cfg.horizon_t / (eps * eps);
    let pl = pipeline(&off, eps, horizon, |_| {})?;
    let (_, ledger, _) = pl.eng.run_with(&pl.st0, horizon, |_| {}).map_err(HarnessError::at(eps))?;
    let per = pl.eng.params().n_sub;
    // The second to last row opens the last subinterval; the closing row
    // ends it.
    let rows = &ledger.rows;
    let n = rows.len() - 1;
    let windows = n.div_ceil(per);
    let mut max_rel_drift: f64 = 0.0;
    for w in 0..windows {
        let e0 = rows[w * per].energy;
        for r in &rows[w * per..=((w + 1) * per).min(n)] {
            max_rel_drift = max_rel_drift.max(((r.energy - e0) / e0).abs());
        }
    }
    Ok(DriftReport { eps, windows, max_rel_drift })
}
