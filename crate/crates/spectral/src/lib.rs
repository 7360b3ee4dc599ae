//! Periodic 2D grids, FFT transforms, diagonal Fourier multipliers, inner
//! products and the norms used by the modulation pipeline.
//!
//! Spectral fields store normalized Fourier coefficients `c_j`, so that the
//! physical samples are `f(x) = sum_j c_j exp(i xi_j . x)`.

mod dealias;
mod error;
mod fft;
mod field;
mod grid;
mod multiplier;
mod norms;

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};

pub use dealias::Dealiaser;
pub use error::SpectralError;
pub use fft::Transformer;
pub use field::{Field2D, Rep};
pub use grid::{make_grid, signed_index, TorusGrid};
pub use multiplier::{apply_multiplier, apply_table, in_mode_ball, Multiplier};
pub use norms::{inner_product, norm, weighted_pairing, NormKind};
pub use num_complex::Complex;

/// Scalar type accepted by the spectral layer.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal representable")
}

pub type C64 = Complex<f64>;
pub type Grid = TorusGrid<f64>;
pub type Field = Field2D<f64>;
pub type Transform = Transformer<f64>;
pub type Symbol = Multiplier<f64>;
pub type Norm = NormKind<f64>;
pub type Dealias = Dealiaser<f64>;
