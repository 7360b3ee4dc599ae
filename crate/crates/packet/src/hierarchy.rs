//! Slow-frame corrector hierarchy and its exact `T`-jets.
//!
//! With `v = sum_n eps^{n-1} A^n`, the order `eps^{n-1}` balance reads
//!
//! `2 i omega A^n_T + L0 A^n + C [N(v)]_{n-1} + sum_{j=1}^{n-1} M_j A^{n-j} = 0`
//!
//! where `M_1 = 2 omega' d_X d_T + S_3`, `M_2 = d_T^2 + S_4` and
//! `M_j = S_{j+2}` beyond. `T`-derivatives are never differenced: the jet
//! `a^n_r = d_T^r A^n / r!` is generated from the instantaneous fields by
//! substituting the equations into themselves.

use std::collections::HashMap;
use std::rc::Rc;

use modlab_spectral::{Field, Grid, Rep, Transform, C64};

use crate::taylor::SymbolTaylor;

/// Spectral tables for the hierarchy on one slow grid. Independent of `eps`.
pub struct Hierarchy {
    pub depth: usize,
    pub omega: f64,
    pub omega_p: f64,
    pub c_omega: f64,
    pub q: u32,
    pub grid: Grid,
    tr: Transform,
    l0: Vec<f64>,
    eta1: Vec<f64>,
    /// `s[j]` is `S_j(eta)` sampled on the lattice; only `j >= 3` is used.
    s: Vec<Vec<f64>>,
}

impl Hierarchy {
    /// `cx, cy` are the modulation-equation coefficients, so `L0 = -(cx eta1^2 + cy eta2^2)`.
    pub fn new(depth: usize, k: f64, p: f64, q: u32, omega: f64, omega_p: f64, c_omega: f64, cx: f64, cy: f64, grid: Grid) -> Self {
        let taylor = SymbolTaylor::new(k, p, depth + 1);
        let n = grid.len();
        let (mut l0, mut eta1) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut s = vec![Vec::new(); depth + 2];
        for iy in 0..grid.ny {
            let b = grid.xi2(iy);
            for ix in 0..grid.nx {
                let a = grid.xi1(ix);
                l0.push(-(cx * a * a + cy * b * b));
                eta1.push(a);
                for (j, tab) in s.iter_mut().enumerate().skip(3) {
                    tab.push(taylor.part(j, a, b));
                }
            }
        }
        Self { depth, omega, omega_p, c_omega, q, grid, tr: Transform::for_grid(&grid), l0, eta1, s }
    }

    pub fn transform(&self) -> &Transform {
        &self.tr
    }

    pub fn l0(&self) -> &[f64] {
        &self.l0
    }

    pub fn eta1(&self) -> &[f64] {
        &self.eta1
    }

    /// Jet orders needed so that every component reaches order `top`.
    pub fn orders(&self, top: usize) -> Vec<usize> {
        (1..=self.depth).map(|n| top + (self.depth - n) / 2).collect()
    }

    /// Jets of the components in `state` (spectral, `state.len() <= depth`),
    /// with component `n` carried to order `top + (len - n) / 2`.
    pub fn jets(&self, state: &[Field], top: usize) -> Jets {
        let d = state.len();
        assert!(d >= 1 && d <= self.depth);
        let orders: Vec<usize> = (1..=d).map(|n| top + (d - n) / 2).collect();
        let npts = self.grid.len();
        let mut tree = SeriesTree::new(npts, ((self.q - 1) / 2) as usize, d, orders[0] + 1);
        let mut a: Vec<Vec<Field>> = Vec::with_capacity(d);
        let scale = C64::new(0.0, 1.0 / (2.0 * self.omega));
        for n in 1..=d {
            let a0 = self.tr.to_spectral(&state[n - 1]);
            tree.set_leaf(n - 1, 0, self.tr.to_physical(&a0).into_data());
            let mut comp = vec![a0];
            for r in 0..orders[n - 1] {
                let mut f: Vec<C64> = comp[r].data().iter().zip(&self.l0).map(|(v, &w)| v * w).collect();
                let mut nl = Field::new(self.grid, tree.coef_n(n - 1, r).to_vec(), Rep::Physical).expect("shape");
                self.tr.make_spectral(&mut nl);
                for (x, y) in f.iter_mut().zip(nl.data()) {
                    *x += y * self.c_omega;
                }
                if n >= 2 {
                    let lo = &a[n - 2];
                    let c = 2.0 * self.omega_p * (r + 1) as f64;
                    for (idx, x) in f.iter_mut().enumerate() {
                        *x += lo[r + 1].data()[idx] * C64::new(0.0, c * self.eta1[idx]) + lo[r].data()[idx] * self.s[3][idx];
                    }
                }
                if n >= 3 {
                    let lo = &a[n - 3];
                    let c = ((r + 1) * (r + 2)) as f64;
                    for (idx, x) in f.iter_mut().enumerate() {
                        *x += lo[r + 2].data()[idx] * c + lo[r].data()[idx] * self.s[4][idx];
                    }
                }
                for j in 3..n {
                    let lo = &a[n - j - 1];
                    let tab = &self.s[j + 2];
                    for (idx, x) in f.iter_mut().enumerate() {
                        *x += lo[r].data()[idx] * tab[idx];
                    }
                }
                let s = scale / (r + 1) as f64;
                let next = Field::new(self.grid, f.into_iter().map(|x| x * s).collect(), Rep::Spectral).expect("shape");
                // The top-order entry never feeds a product.
                if r + 1 < orders[n - 1] {
                    tree.set_leaf(n - 1, r + 1, self.tr.to_physical(&next).into_data());
                }
                comp.push(next);
            }
            a.push(comp);
        }
        Jets { a }
    }
}

/// `a[n-1][r] = d_T^r A^n / r!`, spectral.
pub struct Jets {
    pub a: Vec<Vec<Field>>,
}

impl Jets {
    /// `d_T^r v = sum_n eps^{n-1} r! a^n_r`; spectral. Components without an
    /// order-`r` entry are skipped, which is only correct when they are zero.
    pub fn dv(&self, eps: f64, r: usize) -> Field {
        let fact: f64 = (1..=r).map(|i| i as f64).product();
        let g = *self.a[0][0].grid();
        let mut out = Field::zeros(g, Rep::Spectral);
        let mut w = 1.0;
        for comp in &self.a {
            if let Some(f) = comp.get(r) {
                out.axpy(C64::new(w * fact, 0.0), f);
            }
            w *= eps;
        }
        out
    }
}

enum Op {
    Leaf,
    LeafConj,
    Mul(usize, usize),
}

/// Coefficients of bivariate `(eps, T)` series of pointwise products,
/// computed on demand and memoized. Leaves are `v_{i,r} = a^{i+1}_r` in
/// physical samples.
struct SeriesTree {
    npts: usize,
    ops: Vec<Op>,
    memo: Vec<HashMap<(usize, usize), Rc<Vec<C64>>>>,
    leaves: Vec<Vec<Option<Rc<Vec<C64>>>>>,
    n_node: usize,
}

impl SeriesTree {
    fn new(npts: usize, h: usize, depth: usize, max_order: usize) -> Self {
        let mut ops = vec![Op::Leaf, Op::LeafConj, Op::Mul(0, 1)];
        let u = 2;
        let mut pw = u;
        for _ in 1..h {
            ops.push(Op::Mul(pw, u));
            pw = ops.len() - 1;
        }
        ops.push(Op::Mul(0, pw));
        let n_node = ops.len() - 1;
        let memo = (0..ops.len()).map(|_| HashMap::new()).collect();
        Self { npts, ops, memo, leaves: vec![vec![None; max_order + 2]; depth], n_node }
    }

    fn set_leaf(&mut self, i: usize, r: usize, v: Vec<C64>) {
        self.leaves[i][r] = Some(Rc::new(v));
    }

    /// Coefficient of `eps^i T^r` in `N(v) = v |v|^{q-1}`.
    fn coef_n(&mut self, i: usize, r: usize) -> Rc<Vec<C64>> {
        self.coef(self.n_node, i, r)
    }

    fn coef(&mut self, node: usize, i: usize, r: usize) -> Rc<Vec<C64>> {
        if let Some(v) = self.memo[node].get(&(i, r)) {
            return v.clone();
        }
        let out = match self.ops[node] {
            Op::Leaf => self.leaves[i][r].clone().expect("jet leaf not yet available"),
            Op::LeafConj => {
                let l = self.leaves[i][r].clone().expect("jet leaf not yet available");
                Rc::new(l.iter().map(|c| c.conj()).collect())
            }
            Op::Mul(a, b) => {
                let mut acc = vec![C64::new(0.0, 0.0); self.npts];
                for i1 in 0..=i {
                    for r1 in 0..=r {
                        let x = self.coef(a, i1, r1);
                        let y = self.coef(b, i - i1, r - r1);
                        for ((o, u), w) in acc.iter_mut().zip(x.iter()).zip(y.iter()) {
                            *o += u * w;
                        }
                    }
                }
                Rc::new(acc)
            }
        };
        self.memo[node].insert((i, r), out.clone());
        out
    }
}
