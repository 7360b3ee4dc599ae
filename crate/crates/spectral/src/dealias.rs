use num_complex::Complex;

use crate::{signed_index, Field2D, Real, Rep, TorusGrid, Transformer};

/// Pointwise products evaluated on a 3/2 zero-padded grid (the 2/3 rule),
/// then truncated back to the native lattice.
pub struct Dealiaser<F: Real> {
    grid: TorusGrid<F>,
    mx: usize,
    my: usize,
    native: Transformer<F>,
    padded: Transformer<F>,
    map: Vec<usize>,
}

impl<F: Real> Dealiaser<F> {
    pub fn new(grid: &TorusGrid<F>) -> Self {
        let (mx, my) = (3 * grid.nx / 2, 3 * grid.ny / 2);
        let mut map = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let py = signed_index(iy, grid.ny).rem_euclid(my as i64) as usize;
            for ix in 0..grid.nx {
                let px = signed_index(ix, grid.nx).rem_euclid(mx as i64) as usize;
                map.push(py * mx + px);
            }
        }
        Self { grid: *grid, mx, my, native: Transformer::for_grid(grid), padded: Transformer::new(mx, my), map }
    }

    pub fn grid(&self) -> &TorusGrid<F> {
        &self.grid
    }

    pub fn transformer(&self) -> &Transformer<F> {
        &self.native
    }

    /// Physical samples of `f` on the padded grid.
    pub fn upsample(&self, f: &Field2D<F>) -> Vec<Complex<F>> {
        assert!(f.grid().same_lattice(&self.grid), "grid mismatch");
        let spec = self.native.to_spectral(f);
        let mut big = vec![Complex::new(F::zero(), F::zero()); self.mx * self.my];
        for (c, &j) in spec.data().iter().zip(&self.map) {
            big[j] = *c;
        }
        self.padded.inverse(&mut big);
        big
    }

    /// Truncates padded physical samples back to a native spectral field.
    pub fn downsample(&self, mut big: Vec<Complex<F>>) -> Field2D<F> {
        self.padded.forward(&mut big);
        let data = self.map.iter().map(|&j| big[j]).collect();
        Field2D::new(self.grid, data, Rep::Spectral).expect("shape")
    }

    /// Dealiased `op(f_1(x), ..., f_n(x))`; returns a spectral field.
    pub fn product(&self, inputs: &[&Field2D<F>], op: impl Fn(&[Complex<F>]) -> Complex<F>) -> Field2D<F> {
        let ups: Vec<Vec<Complex<F>>> = inputs.iter().map(|f| self.upsample(f)).collect();
        let mut vals = vec![Complex::new(F::zero(), F::zero()); inputs.len()];
        let mut out = vec![Complex::new(F::zero(), F::zero()); self.mx * self.my];
        for (i, o) in out.iter_mut().enumerate() {
            for (v, u) in vals.iter_mut().zip(&ups) {
                *v = u[i];
            }
            *o = op(&vals);
        }
        self.downsample(out)
    }

    /// Dealiased `scale * f |f|^{q-1}` for odd `q`.
    pub fn power(&self, f: &Field2D<F>, q: u32, scale: F) -> Field2D<F> {
        let h = ((q - 1) / 2) as i32;
        self.product(&[f], |v| v[0] * (v[0].norm_sqr().powi(h) * scale))
    }
}
