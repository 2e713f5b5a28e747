//! Two-dimensional period lattice and its reciprocal vectors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice generated by `lambda1`, `lambda2` with reciprocal vectors
/// satisfying `recip_i · lambda_j = 2π δ_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub lambda1: [f64; 2],
    pub lambda2: [f64; 2],
    pub recip1: [f64; 2],
    pub recip2: [f64; 2],
    pub cell_area: f64,
}

impl Lattice {
    pub fn new(lambda1: [f64; 2], lambda2: [f64; 2]) -> Result<Self> {
        let det = lambda1[0] * lambda2[1] - lambda1[1] * lambda2[0];
        let scale = (lambda1[0].hypot(lambda1[1])) * (lambda2[0].hypot(lambda2[1]));
        if !det.is_finite() || det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::GeometryDegenerate(format!(
                "lattice generators {lambda1:?}, {lambda2:?} are linearly dependent"
            )));
        }
        // Rows of 2π P^{-1}, P = [λ1 λ2] as columns.
        let recip1 = [2.0 * PI * lambda2[1] / det, -2.0 * PI * lambda2[0] / det];
        let recip2 = [-2.0 * PI * lambda1[1] / det, 2.0 * PI * lambda1[0] / det];
        Ok(Self {
            lambda1,
            lambda2,
            recip1,
            recip2,
            cell_area: det.abs(),
        })
    }

    /// Square lattice of side `side`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new([side, 0.0], [0.0, side])
    }

    /// Signed determinant of `[λ1 λ2]`.
    pub fn det(&self) -> f64 {
        self.lambda1[0] * self.lambda2[1] - self.lambda1[1] * self.lambda2[0]
    }

    /// Horizontal point `s1 λ1 + s2 λ2`.
    pub fn point(&self, s1: f64, s2: f64) -> [f64; 2] {
        [
            s1 * self.lambda1[0] + s2 * self.lambda2[0],
            s1 * self.lambda1[1] + s2 * self.lambda2[1],
        ]
    }

    /// Lattice coordinates of a horizontal point.
    pub fn coords(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (self.recip1[0] * x[0] + self.recip1[1] * x[1]) / (2.0 * PI),
            (self.recip2[0] * x[0] + self.recip2[1] * x[1]) / (2.0 * PI),
        ]
    }

    /// Physical wavevector `k1 recip1 + k2 recip2`.
    pub fn wavevector(&self, k1: f64, k2: f64) -> [f64; 2] {
        [
            k1 * self.recip1[0] + k2 * self.recip2[0],
            k1 * self.recip1[1] + k2 * self.recip2[1],
        ]
    }

    /// Integer reciprocal indices of `k` if it lies on the reciprocal lattice.
    pub fn reciprocal_indices(&self, k: [f64; 2]) -> Option<[i64; 2]> {
        let m = [
            (k[0] * self.lambda1[0] + k[1] * self.lambda1[1]) / (2.0 * PI),
            (k[0] * self.lambda2[0] + k[1] * self.lambda2[1]) / (2.0 * PI),
        ];
        let r = [m[0].round(), m[1].round()];
        if (m[0] - r[0]).abs() < 1e-9 && (m[1] - r[1]).abs() < 1e-9 {
            Some([r[0] as i64, r[1] as i64])
        } else {
            None
        }
    }

    /// Lattice vector `l λ1 + j λ2`.
    pub fn shift(&self, l: i64, j: i64) -> [f64; 2] {
        self.point(l as f64, j as f64)
    }

    /// Partial derivatives with respect to `(s1, s2)` expressed through the
    /// `(X, Y)` gradient: `∂/∂s_i = λ_i · ∇`. This returns the inverse map,
    /// `(∂_X, ∂_Y)` from `(∂_s1, ∂_s2)`.
    pub fn xy_from_s(&self, ds1: f64, ds2: f64) -> [f64; 2] {
        [
            (self.recip1[0] * ds1 + self.recip2[0] * ds2) / (2.0 * PI),
            (self.recip1[1] * ds1 + self.recip2[1] * ds2) / (2.0 * PI),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_duality_oblique() {
        let lat = Lattice::new([2.0, 0.3], [0.7, 1.5]).unwrap();
        let r = [lat.recip1, lat.recip2];
        let l = [lat.lambda1, lat.lambda2];
        for i in 0..2 {
            for j in 0..2 {
                let dot = r[i][0] * l[j][0] + r[i][1] * l[j][1];
                let expect = if i == j { 2.0 * PI } else { 0.0 };
                assert!((dot - expect).abs() < 1e-13);
            }
        }
        assert!((lat.cell_area - (2.0 * 1.5 - 0.3 * 0.7)).abs() < 1e-14);
    }

    #[test]
    fn dependent_generators_rejected() {
        assert!(Lattice::new([1.0, 2.0], [2.0, 4.0]).is_err());
    }

    #[test]
    fn coords_roundtrip() {
        let lat = Lattice::new([2.0, 0.3], [-0.7, 1.5]).unwrap();
        let p = lat.point(0.25, -1.5);
        let s = lat.coords(p);
        assert!((s[0] - 0.25).abs() < 1e-14 && (s[1] + 1.5).abs() < 1e-14);
        assert_eq!(lat.reciprocal_indices(lat.wavevector(2.0, -1.0)), Some([2, -1]));
        assert_eq!(lat.reciprocal_indices([0.1234, 0.0]), None);
    }
}
