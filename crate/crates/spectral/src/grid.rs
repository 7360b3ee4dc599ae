use crate::{lit, Real, SpectralError};

/// Periodic rectangle `[0, lx) x [0, ly)` sampled on `nx x ny` points.
///
/// `carrier_index` is the integer `m` with `k = 2 pi m / lx`, when a carrier is
/// attached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid<F> {
    pub nx: usize,
    pub ny: usize,
    pub lx: F,
    pub ly: F,
    pub carrier_index: Option<i64>,
}

fn check_axis(axis: char, n: usize) -> Result<(), SpectralError> {
    if n < 16 || !n.is_power_of_two() {
        return Err(SpectralError::BadResolution { axis, n });
    }
    Ok(())
}

/// Signed wavenumber index of storage slot `i` on an `n`-point axis.
/// The Nyquist slot maps to `-n/2`.
#[inline]
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl<F: Real> TorusGrid<F> {
    pub fn new(nx: usize, ny: usize, lx: F, ly: F) -> Result<Self, SpectralError> {
        check_axis('x', nx)?;
        check_axis('y', ny)?;
        if !(lx > F::zero() && lx.is_finite()) {
            return Err(SpectralError::BadLength { axis: 'x' });
        }
        if !(ly > F::zero() && ly.is_finite()) {
            return Err(SpectralError::BadLength { axis: 'y' });
        }
        Ok(Self { nx, ny, lx, ly, carrier_index: None })
    }

    /// Attaches the carrier `k`, which must sit exactly on the lattice.
    pub fn with_carrier(mut self, k: F) -> Result<Self, SpectralError> {
        let m_real = k * self.lx / (lit::<F>(2.0) * F::PI());
        let m = m_real.round();
        let kf = k.to_f64().unwrap_or(f64::NAN);
        let mf = m_real.to_f64().unwrap_or(f64::NAN);
        if !(k > F::zero()) || !m_real.is_finite() || (m_real - m).abs() > lit(1e-9) || m < F::one() {
            return Err(SpectralError::NonAdmissibleCarrier { k: kf, m: mf });
        }
        let m = m.to_i64().unwrap();
        if m >= (self.nx / 2) as i64 {
            return Err(SpectralError::GridTooSmall { m, half: self.nx / 2 });
        }
        self.carrier_index = Some(m);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> F {
        self.lx / lit(self.nx as f64)
    }

    pub fn dy(&self) -> F {
        self.ly / lit(self.ny as f64)
    }

    pub fn cell_area(&self) -> F {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> F {
        self.lx * self.ly
    }

    pub fn dxi1(&self) -> F {
        lit::<F>(2.0) * F::PI() / self.lx
    }

    pub fn dxi2(&self) -> F {
        lit::<F>(2.0) * F::PI() / self.ly
    }

    /// Carrier wavenumber `2 pi m / lx`, if attached.
    pub fn carrier(&self) -> Option<F> {
        self.carrier_index.map(|m| self.dxi1() * lit(m as f64))
    }

    pub fn xi1(&self, ix: usize) -> F {
        self.dxi1() * lit(signed_index(ix, self.nx) as f64)
    }

    pub fn xi2(&self, iy: usize) -> F {
        self.dxi2() * lit(signed_index(iy, self.ny) as f64)
    }

    /// Centered coordinate in `[-lx/2, lx/2)` of column `ix`.
    pub fn x(&self, ix: usize) -> F {
        self.dx() * lit(signed_index(ix, self.nx) as f64)
    }

    /// Centered coordinate in `[-ly/2, ly/2)` of row `iy`.
    pub fn y(&self, iy: usize) -> F {
        self.dy() * lit(signed_index(iy, self.ny) as f64)
    }

    /// Same sampling, ignoring any attached carrier.
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

/// Builds a grid with carrier `k`; see [`TorusGrid::with_carrier`].
pub fn make_grid<F: Real>(nx: usize, ny: usize, lx: F, ly: F, k: F) -> Result<TorusGrid<F>, SpectralError> {
    TorusGrid::new(nx, ny, lx, ly)?.with_carrier(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn carrier_index_from_k() {
        let g = make_grid(256, 256, 64.0 * PI, 64.0 * PI, 1.0).unwrap();
        assert_eq!(g.carrier_index, Some(32));
        assert!((g.carrier().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn off_lattice_carrier_rejected() {
        let e = make_grid(256, 256, 64.0 * PI, 64.0 * PI, 0.3).unwrap_err();
        assert!(matches!(e, SpectralError::NonAdmissibleCarrier { .. }));
    }

    #[test]
    fn resolution_rules() {
        assert!(matches!(
            make_grid(12, 16, 2.0 * PI, 2.0 * PI, 1.0),
            Err(SpectralError::BadResolution { axis: 'x', n: 12 })
        ));
        assert!(TorusGrid::new(8, 16, 1.0, 1.0).is_err());
        assert!(matches!(
            make_grid(16, 16, 16.0 * PI, 2.0 * PI, 1.0),
            Err(SpectralError::GridTooSmall { m: 8, half: 8 })
        ));
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 16), 0);
        assert_eq!(signed_index(7, 16), 7);
        assert_eq!(signed_index(8, 16), -8);
        assert_eq!(signed_index(15, 16), -1);
    }
}
