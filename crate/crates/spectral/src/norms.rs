use num_complex::Complex;

use crate::{Field2D, Multiplier, Real, Rep, SpectralError, Transformer};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind<F> {
    L2,
    Linf,
    Hs(F),
    HsEps { s: F, eps: F, k: F },
    /// `sum |c_j|`, the discrete `L^1` norm of the transform.
    L1hat,
}

fn re_dot<F: Real>(a: &[Complex<F>], b: &[Complex<F>]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + x.re * y.re + x.im * y.im)
}

/// `<f, g> = integral Re(f conj g)`, by cell-area quadrature.
pub fn inner_product<F: Real>(f: &Field2D<F>, g: &Field2D<F>, tr: &Transformer<F>) -> Result<F, SpectralError> {
    if !f.compatible(g) {
        return Err(SpectralError::GridMismatch);
    }
    let grid = f.grid();
    Ok(match (f.rep(), g.rep()) {
        (Rep::Physical, Rep::Physical) => grid.cell_area() * re_dot(f.data(), g.data()),
        (Rep::Spectral, Rep::Spectral) => grid.area() * re_dot(f.data(), g.data()),
        (Rep::Spectral, Rep::Physical) => grid.area() * re_dot(f.data(), tr.to_spectral(g).data()),
        (Rep::Physical, Rep::Spectral) => grid.area() * re_dot(tr.to_spectral(f).data(), g.data()),
    })
}

/// `area * sum w_j Re(F_j conj G_j)` over spectral coefficients, for a real
/// symbol table `w`; both inputs must be spectral.
pub fn weighted_pairing<F: Real>(f: &Field2D<F>, g: &Field2D<F>, w: &[F]) -> F {
    assert!(f.compatible(g), "grid mismatch");
    assert!(f.rep() == Rep::Spectral && g.rep() == Rep::Spectral, "pairing needs spectral inputs");
    let s = f
        .data()
        .iter()
        .zip(g.data())
        .zip(w)
        .fold(F::zero(), |acc, ((x, y), &w)| acc + w * (x.re * y.re + x.im * y.im));
    f.grid().area() * s
}

fn weighted_sq<F: Real>(c: &[Complex<F>], w: &[F]) -> F {
    c.iter().zip(w).fold(F::zero(), |acc, (v, &w)| acc + w * w * v.norm_sqr())
}

pub fn norm<F: Real>(f: &Field2D<F>, kind: NormKind<F>, tr: &Transformer<F>) -> F {
    let grid = *f.grid();
    match kind {
        NormKind::L2 => match f.rep() {
            Rep::Physical => (grid.cell_area() * f.data().iter().fold(F::zero(), |a, v| a + v.norm_sqr())).sqrt(),
            Rep::Spectral => (grid.area() * f.data().iter().fold(F::zero(), |a, v| a + v.norm_sqr())).sqrt(),
        },
        NormKind::Linf => match f.rep() {
            Rep::Physical => f.max_abs(),
            Rep::Spectral => tr.to_physical(f).max_abs(),
        },
        NormKind::L1hat => {
            let g = tr.to_spectral(f);
            g.data().iter().fold(F::zero(), |a, v| a + v.norm())
        }
        NormKind::Hs(s) => {
            let g = tr.to_spectral(f);
            (grid.area() * weighted_sq(g.data(), &Multiplier::BesselPower { s }.tabulate(&grid))).sqrt()
        }
        NormKind::HsEps { s, eps, k } => {
            let g = tr.to_spectral(f);
            let w = Multiplier::RescaledBessel { s, eps, k }.tabulate(&grid);
            (grid.area() * weighted_sq(g.data(), &w)).sqrt()
        }
    }
}
