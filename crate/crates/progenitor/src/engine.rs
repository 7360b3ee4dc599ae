//! The integrator.
//!
//! Every field lives in the mode ball of radius `k/2` around `(k, 0)`, so the
//! state is kept as ball coefficients. Pointwise products run on a compact
//! periodic grid of the same length, with enough points that the ball part
//! of `z |z|^{q-1}` (and the mean of `|z|^{q+1}`) is alias-free.
//!
//! On a subinterval `z_tt + Omega^2 z = -F` with `F = P(z) + g_bar N(z, t)`
//! is solved in Duhamel form. `G = e^{-i w t} F` is slow for packet data, so
//! it is interpolated linearly between nodes and integrated exactly against
//! the oscillatory kernels (a modulated trapezoid rule).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use modlab_spectral::{signed_index, Field, Grid, Multiplier, Rep, Transform, C64};

use crate::{g_eval, g_prime, g_star, LedgerRow, PenaltyLedger, ProgenitorError, ProgenitorParams};

/// Fields are spectral on the fast grid and vanish outside the mode ball.
#[derive(Clone, Debug)]
pub struct ProgenitorState {
    pub z: Field,
    pub zt: Field,
    pub ztt: Field,
    pub t: f64,
    pub g_bar: f64,
}

#[derive(Clone, Debug)]
pub struct CompatOutcome {
    pub w0: Field,
    pub iterations: usize,
    /// Successive-difference ratios of the iteration.
    pub ratios: Vec<f64>,
    pub lambda: f64,
    /// `HsEps(W - F(W))` at the returned point.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SubintervalStats {
    pub t_start: f64,
    pub iterations: usize,
    pub lambda_start: f64,
    pub lambda_mean: f64,
    pub lambda_max: f64,
    pub g_bar: f64,
    /// `| ||z_tt(t_j+)|| - ||z_tt(t_j-)|| |` in the `Lambda_eps^s` norm.
    pub jump: f64,
    pub energy_start: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub final_state: ProgenitorState,
    pub trajectory: Vec<ProgenitorState>,
    pub ledger: PenaltyLedger,
    pub stats: Vec<SubintervalStats>,
}

#[derive(Clone)]
struct BallState {
    z: Vec<C64>,
    zt: Vec<C64>,
    ztt: Vec<C64>,
    t: f64,
    g_bar: f64,
    prod: Vec<C64>,
    lq: f64,
}

/// Duhamel tables for one subinterval length, per ball mode.
struct Kernel {
    cos: Vec<Vec<f64>>,
    sinc: Vec<Vec<f64>>,
    msin: Vec<Vec<f64>>,
    /// `wz[l][m]`: weight of `G_m` in `z(tau_l)`, `m <= l`.
    wz: Vec<Vec<Vec<C64>>>,
    wt: Vec<Vec<Vec<C64>>>,
    tau: Vec<f64>,
}

pub struct Progenitor {
    params: ProgenitorParams,
    grid: Grid,
    fast_tr: Transform,
    ball: Vec<usize>,
    compact: Vec<usize>,
    compact_shape: (usize, usize),
    ctr: Transform,
    freq: Vec<f64>,
    dp: Vec<f64>,
    w2: Vec<f64>,
    carrier_freq: f64,
    denom: f64,
    kernels: Mutex<HashMap<u64, Arc<Kernel>>>,
}

const I: C64 = C64::new(0.0, 1.0);

fn smooth_size(min: usize) -> usize {
    (min.max(2)..)
        .find(|&n| {
            let mut r = n;
            for f in [2, 3, 5] {
                while r % f == 0 {
                    r /= f;
                }
            }
            r == 1
        })
        .unwrap()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum()
}

/// `int_0^1 e^{i theta u} du` and `int_0^1 u e^{i theta u} du`.
fn phi01(theta: f64) -> (C64, C64) {
    if theta.abs() < 0.5 {
        let (mut p0, mut p1) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut term = C64::new(1.0, 0.0);
        for n in 0..30 {
            p0 += term / (n + 1) as f64;
            p1 += term / (n + 2) as f64;
            term *= I * theta / (n + 1) as f64;
        }
        (p0, p1)
    } else {
        let e = C64::from_polar(1.0, theta);
        let it = I * theta;
        ((e - 1.0) / it, e / it + (e - 1.0) / (theta * theta))
    }
}

impl Progenitor {
    pub fn new(params: ProgenitorParams) -> Result<Self, ProgenitorError> {
        let params = params.validated()?;
        let grid = params.grid;
        let m = grid.carrier_index.expect("validated carrier");
        let wtab = Multiplier::RescaledBessel { s: params.s, eps: params.eps, k: params.k };
        let (mut ball, mut idx2) = (Vec::new(), Vec::new());
        let (mut freq, mut dp, mut w2) = (Vec::new(), Vec::new(), Vec::new());
        let (mut rx, mut ry) = (0i64, 0i64);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if !modlab_spectral::in_mode_ball(&grid, params.k, ix, iy) {
                    continue;
                }
                let (jx, jy) = (signed_index(ix, grid.nx), signed_index(iy, grid.ny));
                rx = rx.max((jx - m).abs());
                ry = ry.max(jy.abs());
                let (a, b) = (grid.xi1(ix), grid.xi2(iy));
                let r = (a * a + b * b).sqrt();
                ball.push(iy * grid.nx + ix);
                idx2.push((jx, jy));
                dp.push(r.powf(params.p));
                freq.push(r.powf(params.p / 2.0));
                w2.push(wtab.symbol(a, b).powi(2));
            }
        }
        if freq.iter().any(|&w| !(w > 0.0)) {
            return Err(ProgenitorError::BadParam("mode ball touches the zero frequency".into()));
        }
        let q1 = params.q as i64 + 1;
        let (cx, cy) = (smooth_size((q1 * rx + 1) as usize), smooth_size((q1 * ry + 1) as usize));
        let compact = idx2
            .iter()
            .map(|&(jx, jy)| (jy.rem_euclid(cy as i64) as usize) * cx + jx.rem_euclid(cx as i64) as usize)
            .collect();
        let denom = params.omega.powi(4) * params.nu * params.nu * params.anchor_hs * params.anchor_hs;
        Ok(Self {
            carrier_freq: params.k.powf(params.p / 2.0),
            params,
            grid,
            fast_tr: Transform::for_grid(&grid),
            ball,
            compact,
            compact_shape: (cx, cy),
            ctr: Transform::new(cx, cy),
            freq,
            dp,
            w2,
            denom,
            kernels: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &ProgenitorParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn transform(&self) -> &Transform {
        &self.fast_tr
    }

    pub fn ball_len(&self) -> usize {
        self.ball.len()
    }

    /// Shape of the product grid.
    pub fn compact_shape(&self) -> (usize, usize) {
        self.compact_shape
    }

    /// The filter as a 0/1 table on the fast lattice.
    pub fn filter_table(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.grid.len()];
        for &i in &self.ball {
            t[i] = 1.0;
        }
        t
    }

    fn gather(&self, f: &Field) -> Vec<C64> {
        assert!(f.grid().same_lattice(&self.grid), "field is not on the progenitor grid");
        let spec;
        let data = match f.rep() {
            Rep::Spectral => f.data(),
            Rep::Physical => {
                spec = self.fast_tr.to_spectral(f);
                spec.data()
            }
        };
        self.ball.iter().map(|&i| data[i]).collect()
    }

    fn scatter(&self, b: &[C64]) -> Field {
        let mut f = Field::zeros(self.grid, Rep::Spectral);
        let d = f.data_mut();
        for (&i, &v) in self.ball.iter().zip(b) {
            d[i] = v;
        }
        f
    }

    /// `B f`, spectral.
    pub fn filter(&self, f: &Field) -> Field {
        self.scatter(&self.gather(f))
    }

    fn compact_physical(&self, b: &[C64]) -> Vec<C64> {
        let (cx, cy) = self.compact_shape;
        let mut buf = vec![C64::new(0.0, 0.0); cx * cy];
        for (&i, &v) in self.compact.iter().zip(b) {
            buf[i] = v;
        }
        self.ctr.inverse(&mut buf);
        buf
    }

    fn compact_ball(&self, mut buf: Vec<C64>) -> Vec<C64> {
        self.ctr.forward(&mut buf);
        self.compact.iter().map(|&i| buf[i]).collect()
    }

    fn compact_cell(&self) -> f64 {
        let (cx, cy) = self.compact_shape;
        self.grid.area() / (cx * cy) as f64
    }

    /// Ball part of `z |z|^{q-1}` and `int |z|^{q+1}`.
    fn nonlinear(&self, zb: &[C64]) -> (Vec<C64>, f64) {
        let mut buf = self.compact_physical(zb);
        let h = ((self.params.q - 1) / 2) as i32;
        let mut lq = 0.0;
        for v in buf.iter_mut() {
            let a = v.norm_sqr();
            let pw = a.powi(h);
            lq += pw * a;
            *v *= pw;
        }
        (self.compact_ball(buf), lq * self.compact_cell())
    }

    fn power_coef(&self) -> f64 {
        self.params.c_omega * self.params.eps.powi(3 - self.params.q as i32)
    }

    fn clock(&self, t: f64) -> f64 {
        let e = self.params.eps;
        e * e * t + self.params.t1 + self.params.t1_offset
    }

    /// `N` from ball data of `z` and `z |z|^{q-1}`.
    fn penalty_b(&self, zb: &[C64], prod: &[C64], t: f64) -> Vec<C64> {
        if !self.params.penalty {
            return vec![C64::new(0.0, 0.0); zb.len()];
        }
        let e = self.params.eps;
        let w2 = self.params.omega * self.params.omega;
        let a = w2 * e.powi(self.params.q as i32 + 4);
        let b = I * (w2 * 2.0 * e.powi(5) * self.clock(t));
        zb.iter().zip(prod).map(|(z, n)| z * a + n * b).collect()
    }

    /// `-|D|^p z - P - g N`.
    fn accel(&self, zb: &[C64], prod: &[C64], nb: &[C64], g: f64) -> Vec<C64> {
        let c = self.power_coef();
        (0..zb.len()).map(|i| -(zb[i] * self.dp[i]) - prod[i] * c - nb[i] * g).collect()
    }

    fn pairing_b(&self, a: &[C64], b: &[C64]) -> f64 {
        let s: f64 = a.iter().zip(b).zip(&self.w2).map(|((x, y), w)| w * (x.re * y.re + x.im * y.im)).sum();
        self.grid.area() * s
    }

    fn lambda_b(&self, w: &[C64]) -> f64 {
        self.pairing_b(w, w) / self.denom
    }

    /// `HsEps(w)^2 / (omega^4 nu^2 anchor^2)`.
    pub fn lambda_of(&self, w: &Field) -> f64 {
        self.lambda_b(&self.gather(w))
    }

    /// `Lambda_eps^s` norm of the ball part of `w`.
    pub fn hs_eps(&self, w: &Field) -> f64 {
        let b = self.gather(w);
        self.pairing_b(&b, &b).sqrt()
    }

    /// `omega^2 B(eps^{q+4} z + 2 i eps^5 (eps^2 t + T1 + T1') z |z|^{q-1})`.
    /// Switched-off penalties give zero.
    pub fn penalty_n(&self, z: &Field, t: f64) -> Field {
        let zb = self.gather(z);
        let (prod, _) = self.nonlinear(&zb);
        self.scatter(&self.penalty_b(&zb, &prod, t))
    }

    /// `C eps^{3-q} B(z |z|^{q-1})`.
    pub fn power_term(&self, z: &Field) -> Field {
        let zb = self.gather(z);
        let (prod, _) = self.nonlinear(&zb);
        let c = self.power_coef();
        self.scatter(&prod.iter().map(|v| v * c).collect::<Vec<_>>())
    }

    fn energy_b(&self, zb: &[C64], ztb: &[C64], lq: f64) -> f64 {
        let quad: f64 = (0..zb.len()).map(|i| ztb[i].norm_sqr() + self.dp[i] * zb[i].norm_sqr()).sum();
        0.5 * self.grid.area() * quad + self.power_coef() / (self.params.q + 1) as f64 * lq
    }

    /// `1/2 ||z_t||^2 + 1/2 || |D|^{p/2} z ||^2 + C eps^{3-q} / (q+1) ||z||^{q+1}_{q+1}`.
    pub fn hamiltonian(&self, state: &ProgenitorState) -> f64 {
        let zb = self.gather(&state.z);
        let (_, lq) = self.nonlinear(&zb);
        self.energy_b(&zb, &self.gather(&state.zt), lq)
    }

    /// Fixed point of `W -> -|D|^p z0 - P(z0) - N(z0, 0) g(lambda(W))`.
    pub fn compat_w0(&self, z0: &Field) -> Result<CompatOutcome, ProgenitorError> {
        let zb = self.gather(z0);
        let (prod, _) = self.nonlinear(&zb);
        let t = 0.0;
        let nb = self.penalty_b(&zb, &prod, t);
        let base = self.accel(&zb, &prod, &nb, 0.0);
        let map = |w: &[C64]| -> Result<Vec<C64>, ProgenitorError> {
            let g = g_eval(self.lambda_b(w))?;
            Ok(base.iter().zip(&nb).map(|(b, n)| b - n * g).collect())
        };
        let dist = |a: &[C64], b: &[C64]| {
            let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            self.pairing_b(&d, &d).sqrt()
        };
        let mut w = base.clone();
        let mut ratios = Vec::new();
        let mut prev: Option<f64> = None;
        for it in 1..=self.params.fp_maxiter {
            let next = map(&w)?;
            let d = dist(&next, &w);
            if let Some(p) = prev {
                if p > 0.0 {
                    ratios.push(d / p);
                }
            }
            prev = Some(d);
            w = next;
            if d <= self.params.fp_tol {
                let residual = dist(&map(&w)?, &w);
                let lambda = self.lambda_b(&w);
                return Ok(CompatOutcome { w0: self.scatter(&w), iterations: it, ratios, lambda, residual });
            }
        }
        Err(ProgenitorError::NoConvergence { what: "compatibility map", iters: self.params.fp_maxiter, last: prev.unwrap_or(f64::NAN) })
    }

    /// Filters `(z0, zt0)`, solves for `z_tt(0)` and sets `g_bar = g(lambda(z_tt(0)))`.
    pub fn initial_state(&self, z0: &Field, zt0: &Field) -> Result<(ProgenitorState, CompatOutcome), ProgenitorError> {
        let compat = self.compat_w0(z0)?;
        let g_bar = g_eval(compat.lambda)?;
        let st = ProgenitorState { z: self.filter(z0), zt: self.filter(zt0), ztt: compat.w0.clone(), t: 0.0, g_bar };
        Ok((st, compat))
    }

    fn to_ball(&self, st: &ProgenitorState) -> BallState {
        let z = self.gather(&st.z);
        let (prod, lq) = self.nonlinear(&z);
        BallState { zt: self.gather(&st.zt), ztt: self.gather(&st.ztt), t: st.t, g_bar: st.g_bar, z, prod, lq }
    }

    fn from_ball(&self, b: &BallState) -> ProgenitorState {
        ProgenitorState { z: self.scatter(&b.z), zt: self.scatter(&b.zt), ztt: self.scatter(&b.ztt), t: b.t, g_bar: b.g_bar }
    }

    /// Exact linear flow of `(z, z_t)` over `dt`; `z_tt` from the full
    /// equation with the state's `g_bar`.
    pub fn linear_propagate(&self, st: &ProgenitorState, dt: f64) -> ProgenitorState {
        let (z, zt) = (self.gather(&st.z), self.gather(&st.zt));
        let mut z1 = Vec::with_capacity(z.len());
        let mut zt1 = Vec::with_capacity(z.len());
        for i in 0..z.len() {
            let w = self.freq[i];
            let (s, c) = (w * dt).sin_cos();
            z1.push(z[i] * c + zt[i] * (s / w));
            zt1.push(z[i] * (-w * s) + zt[i] * c);
        }
        let t = st.t + dt;
        let (prod, _) = self.nonlinear(&z1);
        let nb = self.penalty_b(&z1, &prod, t);
        let ztt = self.accel(&z1, &prod, &nb, st.g_bar);
        ProgenitorState { z: self.scatter(&z1), zt: self.scatter(&zt1), ztt: self.scatter(&ztt), t, g_bar: st.g_bar }
    }

    fn kernel(&self, h: f64) -> Arc<Kernel> {
        let mut cache = self.kernels.lock().expect("kernel cache");
        cache.entry(h.to_bits()).or_insert_with(|| Arc::new(self.build_kernel(h))).clone()
    }

    fn build_kernel(&self, h: f64) -> Kernel {
        let nl = self.params.sub_nodes;
        let d = h / nl as f64;
        let tau: Vec<f64> = (0..=nl).map(|l| l as f64 * d).collect();
        let nb = self.freq.len();
        let w0 = self.carrier_freq;
        let mut k = Kernel {
            cos: vec![vec![0.0; nb]; nl + 1],
            sinc: vec![vec![0.0; nb]; nl + 1],
            msin: vec![vec![0.0; nb]; nl + 1],
            wz: (0..=nl).map(|l| vec![vec![C64::new(0.0, 0.0); nb]; if l == 0 { 0 } else { l + 1 }]).collect(),
            wt: (0..=nl).map(|l| vec![vec![C64::new(0.0, 0.0); nb]; if l == 0 { 0 } else { l + 1 }]).collect(),
            tau: tau.clone(),
        };
        for b in 0..nb {
            let om = self.freq[b];
            // Segment integrals of e^{i a sigma} against the two hat halves.
            let seg = |a: f64, s: usize| -> (C64, C64) {
                let (p0, p1) = phi01(a * d);
                let e = C64::from_polar(d, a * tau[s]);
                (e * (p0 - p1), e * p1)
            };
            let (am, ap) = (w0 - om, w0 + om);
            let segs: Vec<((C64, C64), (C64, C64))> = (0..nl).map(|s| (seg(am, s), seg(ap, s))).collect();
            for l in 0..=nl {
                let (sn, cs) = (om * tau[l]).sin_cos();
                k.cos[l][b] = cs;
                k.sinc[l][b] = sn / om;
                k.msin[l][b] = -om * sn;
                if l == 0 {
                    continue;
                }
                let mut xm = vec![C64::new(0.0, 0.0); l + 1];
                let mut xp = vec![C64::new(0.0, 0.0); l + 1];
                for (s, ((m0, m1), (p0, p1))) in segs.iter().take(l).enumerate() {
                    xm[s] += m0;
                    xm[s + 1] += m1;
                    xp[s] += p0;
                    xp[s + 1] += p1;
                }
                let (ep, en) = (C64::from_polar(1.0, om * tau[l]), C64::from_polar(1.0, -om * tau[l]));
                for m in 0..=l {
                    k.wz[l][m][b] = (ep * xm[m] - en * xp[m]) / (I * (2.0 * om));
                    k.wt[l][m][b] = (ep * xm[m] + en * xp[m]) * 0.5;
                }
            }
        }
        k
    }

    fn solve_ball(&self, st: &BallState, h: f64) -> Result<(BallState, SubintervalStats), ProgenitorError> {
        let ker = self.kernel(h);
        let nl = self.params.sub_nodes;
        let nb = st.z.len();
        let zero = C64::new(0.0, 0.0);
        let times: Vec<f64> = ker.tau.iter().map(|&s| st.t + s).collect();
        let mods: Vec<C64> = ker.tau.iter().map(|&s| C64::from_polar(1.0, -self.carrier_freq * s)).collect();

        let mut z = vec![st.z.clone()];
        let mut zt = vec![st.zt.clone()];
        for l in 1..=nl {
            z.push((0..nb).map(|b| st.z[b] * ker.cos[l][b] + st.zt[b] * ker.sinc[l][b]).collect());
            zt.push((0..nb).map(|b| st.z[b] * ker.msin[l][b] + st.zt[b] * ker.cos[l][b]).collect());
        }
        let mut prod = vec![st.prod.clone()];
        let mut lq = vec![st.lq];
        for zl in z.iter().skip(1) {
            let (p, q) = self.nonlinear(zl);
            prod.push(p);
            lq.push(q);
        }
        let pc = self.power_coef();
        let mut g = st.g_bar;
        let mut hist = vec![g];
        let mut last = f64::NAN;
        for iter in 1..=self.params.fp_maxiter {
            let pen: Vec<Vec<C64>> = (0..=nl).map(|l| self.penalty_b(&z[l], &prod[l], times[l])).collect();
            let gnode: Vec<Vec<C64>> = (0..=nl).map(|l| (0..nb).map(|b| (prod[l][b] * pc + pen[l][b] * g) * mods[l]).collect()).collect();
            let (mut dz, mut scale) = (0.0f64, 0.0f64);
            for l in 1..=nl {
                let mut zn = Vec::with_capacity(nb);
                let mut ztn = Vec::with_capacity(nb);
                for b in 0..nb {
                    let (mut sz, mut st_) = (zero, zero);
                    for (m, gm) in gnode.iter().enumerate().take(l + 1) {
                        sz += ker.wz[l][m][b] * gm[b];
                        st_ += ker.wt[l][m][b] * gm[b];
                    }
                    zn.push(st.z[b] * ker.cos[l][b] + st.zt[b] * ker.sinc[l][b] - sz);
                    ztn.push(st.z[b] * ker.msin[l][b] + st.zt[b] * ker.cos[l][b] - st_);
                }
                let d: f64 = zn.iter().zip(&z[l]).map(|(a, b)| (a - b).norm_sqr()).sum();
                dz = dz.max(d.sqrt());
                scale = scale.max(norm2(&zn).sqrt());
                z[l] = zn;
                zt[l] = ztn;
                let (p, q) = self.nonlinear(&z[l]);
                prod[l] = p;
                lq[l] = q;
            }
            if !(dz.is_finite() && scale.is_finite()) {
                return Err(ProgenitorError::NoConvergence { what: "subinterval Picard iteration", iters: iter, last: dz });
            }
            let lam: Vec<f64> = (0..=nl)
                .map(|l| {
                    let nbl = self.penalty_b(&z[l], &prod[l], times[l]);
                    self.lambda_b(&self.accel(&z[l], &prod[l], &nbl, g))
                })
                .collect();
            let mean = (lam[1..nl].iter().sum::<f64>() + 0.5 * (lam[0] + lam[nl])) / nl as f64;
            let target = g_star(mean, self.params.lambda_star)?;
            last = (target - g).abs();
            if dz <= self.params.picard_tol * scale && last <= self.params.fp_tol {
                let lam_max = lam.iter().cloned().fold(0.0, f64::max);
                if let Some(l) = lam.iter().position(|&x| x >= 1.0) {
                    return Err(ProgenitorError::BlowupPenalty { t: times[l], lambda: lam[l] });
                }
                let n0 = self.penalty_b(&z[0], &prod[0], times[0]);
                let plus = self.accel(&z[0], &prod[0], &n0, g);
                let delta: Vec<C64> = n0.iter().map(|n| -n * (g - st.g_bar)).collect();
                let (na, nm) = (self.pairing_b(&plus, &plus).sqrt(), self.pairing_b(&st.ztt, &st.ztt).sqrt());
                let num = (2.0 * self.pairing_b(&st.ztt, &delta) + self.pairing_b(&delta, &delta)).abs();
                let jump = if na + nm > 0.0 { num / (na + nm) } else { 0.0 };
                let nend = self.penalty_b(&z[nl], &prod[nl], times[nl]);
                let ztt_end = self.accel(&z[nl], &prod[nl], &nend, g);
                let stats = SubintervalStats {
                    t_start: st.t,
                    iterations: iter,
                    lambda_start: lam[0],
                    lambda_mean: mean,
                    lambda_max: lam_max,
                    g_bar: g,
                    jump,
                    energy_start: self.energy_b(&st.z, &st.zt, st.lq),
                };
                let out = BallState {
                    z: z.pop().unwrap(),
                    zt: zt.pop().unwrap(),
                    ztt: ztt_end,
                    t: times[nl],
                    g_bar: g,
                    prod: prod.pop().unwrap(),
                    lq: lq[nl],
                };
                return Ok((out, stats));
            }
            // Damped update, with an Aitken extrapolation every third iterate.
            let mut next = g + self.params.damping * (target - g);
            hist.push(next);
            if hist.len() >= 3 && iter % 3 == 0 {
                let n = hist.len();
                let (a, b, c) = (hist[n - 3], hist[n - 2], hist[n - 1]);
                let den = c - 2.0 * b + a;
                if den.abs() > 1e-300 {
                    let acc = c - (c - b) * (c - b) / den;
                    if acc.is_finite() && acc >= 0.0 {
                        next = acc;
                        hist.push(next);
                    }
                }
            }
            g = next;
        }
        Err(ProgenitorError::NoConvergence { what: "subinterval g_bar fixed point", iters: self.params.fp_maxiter, last })
    }

    /// One subinterval of length `h` from `state`, whose `g_bar` is the
    /// previous subinterval's value.
    pub fn subinterval_solve(&self, state: &ProgenitorState, h: f64) -> Result<(ProgenitorState, SubintervalStats), ProgenitorError> {
        if !(h > 0.0) {
            return Err(ProgenitorError::BadParam(format!("h = {h}")));
        }
        let (b, s) = self.solve_ball(&self.to_ball(state), h)?;
        Ok((self.from_ball(&b), s))
    }

    /// Number of subintervals of length `params.h()` in `horizon`.
    pub fn steps_for(&self, horizon: f64) -> Result<usize, ProgenitorError> {
        let h = self.params.h();
        let n = (horizon / h).round();
        if !(horizon >= 0.0) || (n * h - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(ProgenitorError::BadParam(format!("horizon {horizon} is not a multiple of h = {h}")));
        }
        Ok(n as usize)
    }

    /// Chains subintervals up to `horizon`, calling `visit` on every
    /// boundary state (the initial one included).
    pub fn run_with(
        &self,
        state0: &ProgenitorState,
        horizon: f64,
        mut visit: impl FnMut(&ProgenitorState),
    ) -> Result<(ProgenitorState, PenaltyLedger, Vec<SubintervalStats>), ProgenitorError> {
        let n = self.steps_for(horizon)?;
        let h = self.params.h();
        let mut b = self.to_ball(state0);
        let t_start = b.t;
        visit(state0);
        let mut ledger = PenaltyLedger::default();
        let mut stats = Vec::with_capacity(n);
        for j in 0..n {
            let (mut next, s) = self.solve_ball(&b, h)?;
            // Keeps boundary times free of accumulated rounding.
            next.t = t_start + (j + 1) as f64 * h;
            ledger.rows.push(LedgerRow { t: s.t_start, lambda: s.lambda_start, g_bar: s.g_bar, energy: s.energy_start, jump_l2: s.jump, iterations: s.iterations });
            stats.push(s);
            b = next;
            visit(&self.from_ball(&b));
        }
        ledger.rows.push(LedgerRow {
            t: b.t,
            lambda: self.lambda_b(&b.ztt),
            g_bar: b.g_bar,
            energy: self.energy_b(&b.z, &b.zt, b.lq),
            jump_l2: 0.0,
            iterations: 0,
        });
        Ok((self.from_ball(&b), ledger, stats))
    }

    /// Like [`Progenitor::run_with`], keeping every `record_every`-th
    /// boundary state and the last one.
    pub fn run_window(&self, state0: &ProgenitorState, horizon: f64, record_every: usize) -> Result<RunOutcome, ProgenitorError> {
        let every = record_every.max(1);
        let mut trajectory = Vec::new();
        let mut count = 0usize;
        let (final_state, ledger, stats) = self.run_with(state0, horizon, |s| {
            if count % every == 0 {
                trajectory.push(s.clone());
            }
            count += 1;
        })?;
        if (count - 1) % every != 0 {
            trajectory.push(final_state.clone());
        }
        Ok(RunOutcome { final_state, trajectory, ledger, stats })
    }

    /// `(1 - 2 <z_tt, -N>_s g'(lambda) / D, 2 <z_tt, z_ttt>_s / D)` with
    /// `D = nu^2 omega^4 anchor^2` and `z_ttt` from the differentiated
    /// equation at fixed `g_bar`.
    pub fn lambda_ode_terms(&self, st: &ProgenitorState) -> Result<(f64, f64), ProgenitorError> {
        let (zb, ztb, zttb) = (self.gather(&st.z), self.gather(&st.zt), self.gather(&st.ztt));
        let lambda = self.lambda_b(&zttb);
        let gp = g_prime(lambda)?;
        let (prod, _) = self.nonlinear(&zb);
        let nb = self.penalty_b(&zb, &prod, st.t);
        let neg_n: Vec<C64> = nb.iter().map(|v| -v).collect();
        let coef = 1.0 - 2.0 * self.pairing_b(&zttb, &neg_n) * gp / self.denom;

        let q = self.params.q as i32;
        let zp = self.compact_physical(&zb);
        let ztp = self.compact_physical(&ztb);
        let (hq, hq3) = ((q - 1) / 2, (q - 3) / 2);
        let (ca, cb) = ((q + 1) as f64 / 2.0, (q - 1) as f64 / 2.0);
        let dprod: Vec<C64> = zp
            .iter()
            .zip(&ztp)
            .map(|(z, zt)| {
                let a = z.norm_sqr();
                zt * (ca * a.powi(hq)) + z * z * zt.conj() * (cb * a.powi(hq3))
            })
            .collect();
        let db = self.compact_ball(dprod);
        let pc = self.power_coef();
        let e = self.params.eps;
        let mut zttt: Vec<C64> = (0..zb.len()).map(|i| -(ztb[i] * self.dp[i]) - db[i] * pc).collect();
        if self.params.penalty {
            let w2 = self.params.omega * self.params.omega;
            let a = w2 * e.powi(q + 4);
            let b7 = I * (w2 * 2.0 * e.powi(7));
            let b5 = I * (w2 * 2.0 * e.powi(5) * self.clock(st.t));
            for i in 0..zb.len() {
                zttt[i] -= (ztb[i] * a + prod[i] * b7 + db[i] * b5) * st.g_bar;
            }
        }
        let drive = 2.0 * self.pairing_b(&zttb, &zttt) / self.denom;
        Ok((coef, drive))
    }
}
