use num_complex::Complex;

use crate::{lit, signed_index, Field2D, Real, Rep, TorusGrid, Transformer};

/// Real diagonal Fourier symbols.
///
/// Rescaled kinds evaluate the base symbol at `(xi - k e1) / eps`; the
/// semigroup entries are those of the wave propagator with `omega = |xi|^{p/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier<F> {
    /// `|xi|^p`
    SolidPower { p: F },
    /// `(1 + |xi|^2)^{s/2}`
    BesselPower { s: F },
    RescaledSolid { s: F, eps: F, k: F },
    RescaledBessel { s: F, eps: F, k: F },
    /// Indicator of `|xi - k e1| <= k/2`, boundary included.
    ModeFilter { k: F },
    /// `cos(|xi|^{p/2} t)`
    SemiCos { p: F, t: F },
    /// `sin(|xi|^{p/2} t) / |xi|^{p/2}`, equal to `t` at the origin.
    SemiSinc { p: F, t: F },
    /// `-|xi|^{p/2} sin(|xi|^{p/2} t)`
    SemiDSin { p: F, t: F },
}

/// Frequency-ball membership on the lattice of `grid`.
///
/// When `k` is the grid carrier and the cells are square in frequency, the
/// test is exact integer arithmetic; otherwise a `1e-12` relative slack keeps
/// boundary points inside.
pub fn in_mode_ball<F: Real>(grid: &TorusGrid<F>, k: F, ix: usize, iy: usize) -> bool {
    let jx = signed_index(ix, grid.nx);
    let jy = signed_index(iy, grid.ny);
    if let (Some(m), Some(kc)) = (grid.carrier_index, grid.carrier()) {
        if kc == k && grid.dxi1() == grid.dxi2() {
            let dx = jx - m;
            return 4 * (dx * dx + jy * jy) <= m * m;
        }
    }
    let d1 = grid.xi1(ix) - k;
    let d2 = grid.xi2(iy);
    let r = k / lit(2.0);
    d1 * d1 + d2 * d2 <= r * r * (F::one() + lit(1e-12))
}

impl<F: Real> Multiplier<F> {
    /// Symbol value at `(xi1, xi2)`. `ModeFilter` here uses the continuum
    /// test; [`Multiplier::tabulate`] uses the lattice-exact one.
    pub fn symbol(&self, xi1: F, xi2: F) -> F {
        let half = lit::<F>(0.5);
        match *self {
            Multiplier::SolidPower { p } => solid(xi1, xi2, p),
            Multiplier::BesselPower { s } => bessel(xi1, xi2, s),
            Multiplier::RescaledSolid { s, eps, k } => solid((xi1 - k) / eps, xi2 / eps, s),
            Multiplier::RescaledBessel { s, eps, k } => bessel((xi1 - k) / eps, xi2 / eps, s),
            Multiplier::ModeFilter { k } => {
                let (d1, r) = (xi1 - k, k * half);
                if d1 * d1 + xi2 * xi2 <= r * r * (F::one() + lit(1e-12)) {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Multiplier::SemiCos { p, t } => (freq(xi1, xi2, p) * t).cos(),
            Multiplier::SemiSinc { p, t } => {
                let w = freq(xi1, xi2, p);
                if w == F::zero() {
                    t
                } else {
                    (w * t).sin() / w
                }
            }
            Multiplier::SemiDSin { p, t } => {
                let w = freq(xi1, xi2, p);
                -w * (w * t).sin()
            }
        }
    }

    /// Symbol sampled on every lattice point of `grid`, in storage order.
    pub fn tabulate(&self, grid: &TorusGrid<F>) -> Vec<F> {
        let mut out = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let xi2 = grid.xi2(iy);
            for ix in 0..grid.nx {
                let v = match *self {
                    Multiplier::ModeFilter { k } => {
                        if in_mode_ball(grid, k, ix, iy) {
                            F::one()
                        } else {
                            F::zero()
                        }
                    }
                    _ => self.symbol(grid.xi1(ix), xi2),
                };
                out.push(v);
            }
        }
        out
    }
}

fn solid<F: Real>(a: F, b: F, p: F) -> F {
    let r2 = a * a + b * b;
    if r2 == F::zero() {
        if p == F::zero() {
            F::one()
        } else {
            F::zero()
        }
    } else {
        r2.powf(p / lit(2.0))
    }
}

fn bessel<F: Real>(a: F, b: F, s: F) -> F {
    (F::one() + a * a + b * b).powf(s / lit(2.0))
}

fn freq<F: Real>(a: F, b: F, p: F) -> F {
    solid(a, b, p / lit(2.0))
}

/// Multiplies the spectral coefficients of `f` by a tabulated symbol.
/// Zero entries produce exact zeros and unit entries leave values untouched.
pub fn apply_table<F: Real>(f: &Field2D<F>, table: &[F], tr: &Transformer<F>) -> Field2D<F> {
    let mut g = tr.to_spectral(f);
    assert_eq!(table.len(), g.data().len(), "symbol table shape mismatch");
    let zero = Complex::new(F::zero(), F::zero());
    for (v, &w) in g.data_mut().iter_mut().zip(table) {
        if w == F::zero() {
            *v = zero;
        } else if w != F::one() {
            *v = *v * w;
        }
    }
    debug_assert_eq!(g.rep(), Rep::Spectral);
    g
}

/// Applies `m` to `f`; the result is spectral.
pub fn apply_multiplier<F: Real>(f: &Field2D<F>, m: &Multiplier<F>, tr: &Transformer<F>) -> Field2D<F> {
    apply_table(f, &m.tabulate(f.grid()), tr)
}
