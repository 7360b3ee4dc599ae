use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::{lit, Field2D, Real, Rep};

/// 2D transform plans for one `nx x ny` shape. Each worker owns its own.
pub struct Transformer<F: Real> {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<F>>,
    inv_x: Arc<dyn Fft<F>>,
    fwd_y: Arc<dyn Fft<F>>,
    inv_y: Arc<dyn Fft<F>>,
}

impl<F: Real> Transformer<F> {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn for_grid(grid: &crate::TorusGrid<F>) -> Self {
        Self::new(grid.nx, grid.ny)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn run(&self, buf: &mut [Complex<F>], fx: &Arc<dyn Fft<F>>, fy: &Arc<dyn Fft<F>>) {
        assert_eq!(buf.len(), self.nx * self.ny, "transform shape mismatch");
        let scratch_len = fx.get_inplace_scratch_len().max(fy.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(F::zero(), F::zero()); scratch_len];
        fx.process_with_scratch(buf, &mut scratch[..fx.get_inplace_scratch_len()]);
        let mut t = vec![Complex::new(F::zero(), F::zero()); buf.len()];
        transpose(buf, &mut t, self.nx, self.ny);
        fy.process_with_scratch(&mut t, &mut scratch[..fy.get_inplace_scratch_len()]);
        transpose(&t, buf, self.ny, self.nx);
    }

    /// Physical samples to normalized coefficients, in place.
    pub fn forward(&self, buf: &mut [Complex<F>]) {
        let (fx, fy) = (self.fwd_x.clone(), self.fwd_y.clone());
        self.run(buf, &fx, &fy);
        let s = F::one() / lit((self.nx * self.ny) as f64);
        for v in buf.iter_mut() {
            *v = *v * s;
        }
    }

    /// Normalized coefficients to physical samples, in place.
    pub fn inverse(&self, buf: &mut [Complex<F>]) {
        let (fx, fy) = (self.inv_x.clone(), self.inv_y.clone());
        self.run(buf, &fx, &fy);
    }

    pub fn make_spectral(&self, f: &mut Field2D<F>) {
        if f.rep() == Rep::Physical {
            self.forward(f.data_mut());
            f.set_rep(Rep::Spectral);
        }
    }

    pub fn make_physical(&self, f: &mut Field2D<F>) {
        if f.rep() == Rep::Spectral {
            self.inverse(f.data_mut());
            f.set_rep(Rep::Physical);
        }
    }

    pub fn to_spectral(&self, f: &Field2D<F>) -> Field2D<F> {
        let mut g = f.clone();
        self.make_spectral(&mut g);
        g
    }

    pub fn to_physical(&self, f: &Field2D<F>) -> Field2D<F> {
        let mut g = f.clone();
        self.make_physical(&mut g);
        g
    }
}

/// `dst[c * rows + r] = src[r * cols + c]` for a `rows x cols` source.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], cols: usize, rows: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
