//! Corrector integration, packet assembly and the residual.

use modlab_nls::{NlsSolver, Trajectory};
use modlab_spectral::{signed_index, Field, Multiplier, Rep, Transform, C64};

use crate::hierarchy::Hierarchy;
use crate::{PacketError, PacketParams};

#[derive(Clone, Debug)]
pub struct CorrectorState {
    pub t: f64,
    /// `A^1 .. A^d`, physical.
    pub a: Vec<Field>,
}

/// `z~` and two time derivatives on the fast grid, physical.
#[derive(Clone, Debug)]
pub struct PacketEvaluation {
    pub z: Field,
    pub zt: Field,
    pub ztt: Field,
    pub t: f64,
}

/// `Z_r = (i sigma + eps^2 d_T)^r v` on the slow grid, spectral and unshifted,
/// with `sigma = omega + eps omega' eta_1`. The fast field `d_t^r z~` is
/// `eps` times the embedding of `Z_r`.
#[derive(Clone, Debug)]
pub struct SlowFields {
    pub t: f64,
    pub big_t: f64,
    pub z: Vec<Field>,
    /// `v = sum eps^{n-1} A^n`, physical.
    pub v: Field,
}

/// Slow-time trajectories of `A^1 .. A^d` with checkpoints every
/// `store_every` steps of size `h`.
pub struct CorrectorSet {
    params: PacketParams,
    hier: Hierarchy,
    solver: NlsSolver,
    pub h: f64,
    pub store_every: usize,
    pub states: Vec<CorrectorState>,
    /// Slow slot `j` lands in fast slot `embed[j]`, when it fits.
    embed: Vec<Option<usize>>,
    fast_tr: Transform,
    sigma: Vec<f64>,
    symbol: Vec<f64>,
    weight2s: Vec<f64>,
}

impl CorrectorSet {
    /// Integrates `A^1` from `a0` and the correctors from zero data up to slow time `t_end`.
    pub fn build(params: &PacketParams, a0: &Field, t_end: f64, store_every: usize) -> Result<Self, PacketError> {
        params.check_depth()?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(PacketError::BadParam(format!("T_end = {t_end}")));
        }
        if !a0.grid().same_lattice(&params.slow) {
            return Err(PacketError::GridMismatch("initial envelope is not on the slow grid".into()));
        }
        let solver = NlsSolver::new(params.nls_params()?);
        let n = (t_end / params.dt - 1e-12).ceil().max(1.0) as usize;
        let h = t_end / n as f64;
        let mut set = Self::empty(params, solver, h, store_every.max(1));
        let tr = set.solver.transform();
        let mut cur = vec![tr.to_physical(a0)];
        for _ in 1..params.depth {
            cur.push(Field::zeros(params.slow, Rep::Physical));
        }
        set.states.push(CorrectorState { t: 0.0, a: cur.clone() });
        for i in 1..=n {
            set.step(&mut cur, h);
            if cur.iter().any(|f| !f.is_finite()) {
                return Err(modlab_nls::NlsError::NonFinite { step: i, t: i as f64 * h }.into());
            }
            if i % set.store_every == 0 || i == n {
                set.states.push(CorrectorState { t: i as f64 * h, a: cur.clone() });
            }
        }
        Ok(set)
    }

    /// Same as [`CorrectorSet::build`] on the step and checkpoints of an
    /// existing envelope run, whose stored states are reproduced exactly.
    pub fn from_trajectory(params: &PacketParams, traj: &Trajectory) -> Result<Self, PacketError> {
        let mut p = params.clone();
        p.dt = traj.h;
        let set = Self::build(&p, &traj.states[0].a, traj.t_end(), traj.store_every)?;
        for (mine, theirs) in set.states.iter().zip(&traj.states) {
            if mine.a[0] != theirs.a {
                return Err(PacketError::BadParam("envelope run uses a different solver configuration".into()));
            }
        }
        Ok(set)
    }

    fn empty(params: &PacketParams, solver: NlsSolver, h: f64, store_every: usize) -> Self {
        let (slow, fast) = (params.slow, params.fast);
        let mut embed = Vec::with_capacity(slow.len());
        let mut sigma = Vec::with_capacity(slow.len());
        let mut symbol = Vec::with_capacity(slow.len());
        let solid = Multiplier::SolidPower { p: params.p };
        for iy in 0..slow.ny {
            let jy = signed_index(iy, slow.ny);
            for ix in 0..slow.nx {
                let jx = signed_index(ix, slow.nx) + params.m;
                let fits = |j: i64, n: usize| j > -(n as i64) / 2 && j < (n as i64) / 2;
                embed.push(if fits(jx, fast.nx) && fits(jy, fast.ny) {
                    Some(jy.rem_euclid(fast.ny as i64) as usize * fast.nx + jx.rem_euclid(fast.nx as i64) as usize)
                } else {
                    None
                });
                let (a, b) = (slow.xi1(ix), slow.xi2(iy));
                sigma.push(params.omega + params.eps * params.omega_p * a);
                symbol.push(solid.symbol(params.k + params.eps * a, params.eps * b));
            }
        }
        let weight2s = Multiplier::BesselPower { s: params.s }.tabulate(&slow).into_iter().map(|w| w * w).collect();
        Self {
            params: params.clone(),
            hier: params.hierarchy(),
            solver,
            h,
            store_every,
            states: Vec::new(),
            embed,
            fast_tr: Transform::for_grid(&fast),
            sigma,
            symbol,
            weight2s,
        }
    }

    /// The same trajectories viewed at another `eps` on the same slow grid.
    /// The correctors themselves do not depend on `eps`.
    pub fn for_eps(&self, params: &PacketParams) -> Result<Self, PacketError> {
        let p0 = &self.params;
        if !params.slow.same_lattice(&p0.slow) || params.depth > p0.depth {
            return Err(PacketError::GridMismatch("rebinding needs the same slow grid and no extra depth".into()));
        }
        if (params.k, params.p, params.q, params.c_omega, params.y_convention) != (p0.k, p0.p, p0.q, p0.c_omega, p0.y_convention) {
            return Err(PacketError::BadParam("rebinding needs the same envelope equation".into()));
        }
        let mut p = params.clone();
        p.dt = p0.dt;
        let solver = NlsSolver::new(p.nls_params()?);
        let mut out = Self::empty(&p, solver, self.h, self.store_every);
        out.states = self
            .states
            .iter()
            .map(|s| CorrectorState { t: s.t, a: s.a[..p.depth].to_vec() })
            .collect();
        Ok(out)
    }

    /// Keeps `A^1 .. A^depth`. Lower components never see higher ones.
    pub fn truncated(&self, depth: usize) -> Result<Self, PacketError> {
        let mut p = self.params.clone();
        if depth == 0 {
            return Err(PacketError::DepthUnsupported(0));
        }
        p.depth = depth;
        self.for_eps(&p)
    }

    pub fn params(&self) -> &PacketParams {
        &self.params
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hier
    }

    pub fn solver(&self) -> &NlsSolver {
        &self.solver
    }

    pub fn depth(&self) -> usize {
        self.params.depth
    }

    pub fn t_end(&self) -> f64 {
        self.states.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Strang step: nonlinear/forcing flow over `h/2`, exact linear flow over
    /// `h` for every component, nonlinear/forcing flow over `h/2`.
    fn step(&self, cur: &mut [Field], h: f64) {
        self.forcing_flow(cur, 0.5 * h);
        let tr = self.solver.transform();
        for f in cur.iter_mut() {
            tr.make_spectral(f);
            self.solver.linear(f, h);
            tr.make_physical(f);
        }
        self.forcing_flow(cur, 0.5 * h);
    }

    /// `A^1` by its exact phase rotation; `A^2..` by RK4 on
    /// `A^n_T = a^n_1 - (i / 2 omega) L0 A^n`, with `A^1` taken on the rotation.
    fn forcing_flow(&self, cur: &mut [Field], h: f64) {
        let d = cur.len();
        let a1 = cur[0].clone();
        self.solver.rotate(&mut cur[0], h);
        if d == 1 {
            return;
        }
        let tr = self.solver.transform();
        let lead_at = |tau: f64| {
            let mut f = a1.clone();
            self.solver.rotate(&mut f, tau);
            f
        };
        let y0: Vec<Field> = cur[1..].iter().map(|f| tr.to_spectral(f)).collect();
        let rate = |lead: &Field, y: &[Field]| -> Vec<Field> {
            let mut st = Vec::with_capacity(d);
            st.push(lead.clone());
            st.extend(y.iter().cloned());
            let jets = self.hier.jets(&st, 1);
            let c = C64::new(0.0, 1.0 / (2.0 * self.params.omega));
            (1..d)
                .map(|n| {
                    let mut r = jets.a[n][1].clone();
                    for ((x, a0), &w) in r.data_mut().iter_mut().zip(jets.a[n][0].data()).zip(self.hier.l0()) {
                        *x -= c * w * a0;
                    }
                    r
                })
                .collect()
        };
        let comb = |y: &[Field], k: &[Field], s: f64| -> Vec<Field> {
            y.iter()
                .zip(k)
                .map(|(a, b)| {
                    let mut o = a.clone();
                    o.axpy(C64::new(s, 0.0), b);
                    o
                })
                .collect()
        };
        let mid = lead_at(0.5 * h);
        let k1 = rate(&a1, &y0);
        let k2 = rate(&mid, &comb(&y0, &k1, 0.5 * h));
        let k3 = rate(&mid, &comb(&y0, &k2, 0.5 * h));
        let k4 = rate(&cur[0], &comb(&y0, &k3, h));
        for (n, out) in cur[1..].iter_mut().enumerate() {
            let mut y = y0[n].clone();
            let w = C64::new(h / 6.0, 0.0);
            y.axpy(w, &k1[n]);
            y.axpy(w * 2.0, &k2[n]);
            y.axpy(w * 2.0, &k3[n]);
            y.axpy(w, &k4[n]);
            *out = tr.to_physical(&y);
        }
    }

    /// `A^1 .. A^d` at slow time `big_t`, physical.
    pub fn state_at(&self, big_t: f64) -> Result<Vec<Field>, PacketError> {
        let end = self.t_end();
        if !(big_t >= -1e-14) || big_t > end * (1.0 + 1e-12) + 1e-14 {
            return Err(PacketError::HorizonExceeded { t: big_t, horizon: end });
        }
        let t = big_t.clamp(0.0, end);
        let i = self.states.partition_point(|s| s.t <= t + 1e-14).saturating_sub(1);
        let base = &self.states[i];
        let span = t - base.t;
        let mut cur = base.a.clone();
        if span <= 1e-14 {
            return Ok(cur);
        }
        let n = (span / self.h - 1e-9).ceil().max(1.0) as usize;
        let hh = span / n as f64;
        for _ in 0..n {
            self.step(&mut cur, hh);
        }
        Ok(cur)
    }

    /// Slow-frame derivative fields `Z_0 .. Z_top` at fast time `t`.
    pub fn slow_fields(&self, t: f64, top: usize) -> Result<SlowFields, PacketError> {
        let p = &self.params;
        let big_t = p.eps * p.eps * t;
        let st = self.state_at(big_t)?;
        let jets = self.hier.jets(&st, top.max(1));
        let e2 = p.eps * p.eps;
        let dv: Vec<Field> = (0..=top).map(|r| jets.dv(p.eps, r)).collect();
        let mut z = Vec::with_capacity(top + 1);
        for r in 0..=top {
            let mut out = Field::zeros(p.slow, Rep::Spectral);
            for (j, dvj) in dv.iter().enumerate().take(r + 1) {
                let c = binom(r, r - j) * e2.powi(j as i32);
                let pw = (r - j) as i32;
                for ((o, x), &s) in out.data_mut().iter_mut().zip(dvj.data()).zip(&self.sigma) {
                    *o += x * (C64::new(0.0, s).powi(pw) * c);
                }
            }
            z.push(out);
        }
        let v = self.hier.transform().to_physical(&dv[0]);
        Ok(SlowFields { t, big_t, z, v })
    }

    /// Places `eps F` on the fast lattice with the envelope shift
    /// `eps omega' t` and the carrier phase `e^{i omega t}`; physical output.
    pub fn embed(&self, f: &Field, t: f64) -> Field {
        let p = &self.params;
        let f = self.hier.transform().to_spectral(f);
        let mut out = Field::zeros(p.fast, Rep::Spectral);
        let shift = p.eps * p.omega_p * t;
        let base = C64::from_polar(p.eps, p.omega * t);
        let slow = p.slow;
        for iy in 0..slow.ny {
            for ix in 0..slow.nx {
                let j = iy * slow.nx + ix;
                if let Some(dst) = self.embed[j] {
                    out.data_mut()[dst] = f.data()[j] * base * C64::from_polar(1.0, slow.xi1(ix) * shift);
                }
            }
        }
        self.fast_tr.make_physical(&mut out);
        out
    }

    /// `z~, z~_t, z~_tt` at fast time `t`.
    pub fn assemble(&self, t: f64) -> Result<PacketEvaluation, PacketError> {
        let sf = self.slow_fields(t, 2)?;
        Ok(PacketEvaluation { z: self.embed(&sf.z[0], t), zt: self.embed(&sf.z[1], t), ztt: self.embed(&sf.z[2], t), t })
    }

    /// `d_t^r z~` for `r = 0..=top` at fast time `t`.
    pub fn time_derivatives(&self, t: f64, top: usize) -> Result<Vec<Field>, PacketError> {
        let sf = self.slow_fields(t, top)?;
        Ok(sf.z.iter().map(|f| self.embed(f, t)).collect())
    }

    /// Slow form `E` of the residual, spectral: the fast residual
    /// `z~_tt + |D|^p z~ + C eps^2 z~|z~/eps|^{q-1}` is `eps` times its embedding.
    pub fn slow_residual(&self, t: f64) -> Result<Field, PacketError> {
        let p = &self.params;
        let sf = self.slow_fields(t, 2)?;
        let h = ((p.q - 1) / 2) as i32;
        let mut nl = sf.v.map(|x| x * x.norm_sqr().powi(h));
        self.hier.transform().make_spectral(&mut nl);
        let c = p.c_omega * p.eps * p.eps;
        let mut out = sf.z[2].clone();
        for (((o, z0), n), &w) in out.data_mut().iter_mut().zip(sf.z[0].data()).zip(nl.data()).zip(&self.symbol) {
            *o += z0 * w + n * c;
        }
        Ok(out)
    }

    pub fn residual(&self, t: f64) -> Result<Field, PacketError> {
        Ok(self.embed(&self.slow_residual(t)?, t))
    }

    /// Fast `L^2` norm of the residual. Equal to the slow `L^2` norm of `E`
    /// whenever the embedding keeps every slow mode.
    pub fn residual_norm(&self, t: f64) -> Result<f64, PacketError> {
        let e = self.slow_residual(t)?;
        let g = e.grid();
        Ok((g.area() * e.data().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt())
    }

    /// `<Lambda_eps^{2s} z~_tt, z~_ttt>` at fast time `t`.
    pub fn packet_pairing(&self, t: f64) -> Result<f64, PacketError> {
        let sf = self.slow_fields(t, 3)?;
        let s = sf.z[2]
            .data()
            .iter()
            .zip(sf.z[3].data())
            .zip(&self.weight2s)
            .fold(0.0, |acc, ((a, b), &w)| acc + w * (a * b.conj()).re);
        Ok(self.params.slow.area() * s)
    }

    /// Slow spectral slots that have no fast counterpart.
    pub fn dropped_modes(&self) -> usize {
        self.embed.iter().filter(|e| e.is_none()).count()
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
