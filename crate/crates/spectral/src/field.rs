use num_complex::Complex;

use crate::{Real, SpectralError, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rep {
    Physical,
    Spectral,
}

/// Complex samples on a torus grid, stored row-major (`x` fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D<F> {
    grid: TorusGrid<F>,
    data: Vec<Complex<F>>,
    rep: Rep,
}

impl<F: Real> Field2D<F> {
    pub fn new(grid: TorusGrid<F>, data: Vec<Complex<F>>, rep: Rep) -> Result<Self, SpectralError> {
        if data.len() != grid.len() {
            return Err(SpectralError::LengthMismatch { expected: grid.len(), got: data.len() });
        }
        Ok(Self { grid, data, rep })
    }

    pub fn zeros(grid: TorusGrid<F>, rep: Rep) -> Self {
        Self { grid, data: vec![Complex::new(F::zero(), F::zero()); grid.len()], rep }
    }

    /// Physical field sampled from `f(x, y)` at centered coordinates.
    pub fn from_fn(grid: TorusGrid<F>, f: impl Fn(F, F) -> Complex<F>) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let y = grid.y(iy);
            for ix in 0..grid.nx {
                data.push(f(grid.x(ix), y));
            }
        }
        Self { grid, data, rep: Rep::Physical }
    }

    pub fn grid(&self) -> &TorusGrid<F> {
        &self.grid
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn data(&self) -> &[Complex<F>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<F>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<F>> {
        self.data
    }

    /// Relabels the representation without touching values.
    pub(crate) fn set_rep(&mut self, rep: Rep) {
        self.rep = rep;
    }

    /// Same values interpreted on another grid with identical shape.
    pub fn regrid(mut self, grid: TorusGrid<F>) -> Result<Self, SpectralError> {
        if grid.nx != self.grid.nx || grid.ny != self.grid.ny {
            return Err(SpectralError::GridMismatch);
        }
        self.grid = grid;
        Ok(self)
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.grid.nx + ix
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex<F> {
        self.data[self.idx(ix, iy)]
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.grid.same_lattice(&other.grid)
    }

    fn assert_same(&self, other: &Self) {
        assert!(self.compatible(other), "grid mismatch");
        assert_eq!(self.rep, other.rep, "representation mismatch");
    }

    pub fn scale(&mut self, a: Complex<F>) {
        for v in &mut self.data {
            *v = *v * a;
        }
    }

    pub fn scaled(&self, a: Complex<F>) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: Complex<F>, other: &Self) {
        self.assert_same(other);
        for (v, w) in self.data.iter_mut().zip(&other.data) {
            *v = *v + a * *w;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex::new(F::one(), F::zero()), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex::new(-F::one(), F::zero()), other);
        out
    }

    pub fn conj(&self) -> Self {
        assert_eq!(self.rep, Rep::Physical, "conjugation is taken pointwise");
        let mut out = self.clone();
        for v in &mut out.data {
            *v = v.conj();
        }
        out
    }

    /// Pointwise map; only meaningful on physical fields.
    pub fn map(&self, f: impl Fn(Complex<F>) -> Complex<F>) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |m, v| m.max(v.norm()))
    }
}
