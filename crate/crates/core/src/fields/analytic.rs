//! Closed-form Beltrami fields on the flat slab.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Lattice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AnalyticBeltrami {
    /// `u = (cos αz, −sin αz, 0)`.
    Shear { alpha: f64 },
    /// `u = c (α curl(ψ e₃) + curl curl(ψ e₃))` with
    /// `ψ = cos(k·x′) sin(mπ(z+d)/d)`, scaled so that `max |u| = amplitude`.
    Modal {
        k: [f64; 2],
        m: u32,
        depth: f64,
        amplitude: f64,
    },
}

impl AnalyticBeltrami {
    pub fn shear(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha != 0.0) {
            return Err(Error::Contract(format!("shear family needs nonzero alpha, got {alpha}")));
        }
        Ok(Self::Shear { alpha })
    }

    pub fn modal(lattice: &Lattice, k: [f64; 2], m: u32, depth: f64, amplitude: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Contract("modal family needs m >= 1".into()));
        }
        if k[0] == 0.0 && k[1] == 0.0 {
            return Err(Error::Contract("modal family needs a nonzero wavevector".into()));
        }
        if lattice.reciprocal_indices(k).is_none() {
            return Err(Error::Contract(format!("wavevector {k:?} is not on the reciprocal lattice")));
        }
        if !(depth > 0.0) {
            return Err(Error::Contract("depth must be positive".into()));
        }
        Ok(Self::Modal {
            k,
            m,
            depth,
            amplitude,
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Shear { .. } => "shear",
            Self::Modal { .. } => "modal",
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Shear { alpha } => alpha,
            Self::Modal { k, m, depth, .. } => {
                let beta = m as f64 * PI / depth;
                (k[0] * k[0] + k[1] * k[1] + beta * beta).sqrt()
            }
        }
    }

    /// Modal shorthand: `(c, k, |k|², β, θ, ζ)`.
    fn modal_parts(&self, x: &Vector3<f64>) -> (f64, [f64; 2], f64, f64, f64, f64) {
        let Self::Modal {
            k,
            m,
            depth,
            amplitude,
        } = *self
        else {
            unreachable!()
        };
        let alpha = self.alpha();
        let k2 = k[0] * k[0] + k[1] * k[1];
        let beta = m as f64 * PI / depth;
        let c = amplitude / (alpha * k2.sqrt());
        (c, k, k2, beta, k[0] * x.x + k[1] * x.y, beta * (x.z + depth))
    }

    pub fn velocity(&self, x: &Vector3<f64>) -> Vector3<f64> {
        match *self {
            Self::Shear { alpha } => Vector3::new((alpha * x.z).cos(), -(alpha * x.z).sin(), 0.0),
            Self::Modal { .. } => {
                let a = self.alpha();
                let (c, k, k2, beta, th, ze) = self.modal_parts(x);
                let (st, ct) = th.sin_cos();
                let (sz, cz) = ze.sin_cos();
                let p = -a * k[1] * sz - beta * k[0] * cz;
                let q = a * k[0] * sz - beta * k[1] * cz;
                Vector3::new(c * st * p, c * st * q, c * k2 * ct * sz)
            }
        }
    }

    /// `∂_j u_i` at `x`.
    pub fn jacobian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        match *self {
            Self::Shear { alpha } => {
                let mut j = Matrix3::zeros();
                j[(0, 2)] = -alpha * (alpha * x.z).sin();
                j[(1, 2)] = -alpha * (alpha * x.z).cos();
                j
            }
            Self::Modal { .. } => {
                let a = self.alpha();
                let (c, k, k2, beta, th, ze) = self.modal_parts(x);
                let (st, ct) = th.sin_cos();
                let (sz, cz) = ze.sin_cos();
                let p = -a * k[1] * sz - beta * k[0] * cz;
                let q = a * k[0] * sz - beta * k[1] * cz;
                let dp = beta * (-a * k[1] * cz + beta * k[0] * sz);
                let dq = beta * (a * k[0] * cz + beta * k[1] * sz);
                Matrix3::new(
                    c * k[0] * ct * p,
                    c * k[1] * ct * p,
                    c * st * dp,
                    c * k[0] * ct * q,
                    c * k[1] * ct * q,
                    c * st * dq,
                    -c * k2 * k[0] * st * sz,
                    -c * k2 * k[1] * st * sz,
                    c * k2 * beta * ct * cz,
                )
            }
        }
    }

    /// Vector potential with `curl A = u`, `A × n = 0` on the top and
    /// `A × e₃` constant on the bottom.
    pub fn potential(&self, x: &Vector3<f64>) -> Vector3<f64> {
        match *self {
            Self::Shear { alpha } => Vector3::new(
                ((alpha * x.z).cos() - 1.0) / alpha,
                -(alpha * x.z).sin() / alpha,
                0.0,
            ),
            Self::Modal { .. } => {
                let a = self.alpha();
                let (c, k, _, _, th, ze) = self.modal_parts(x);
                let (st, ct) = th.sin_cos();
                let sz = ze.sin();
                Vector3::new(-c * k[1] * st * sz, c * k[0] * st * sz, c * a * ct * sz)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curl(j: &Matrix3<f64>) -> Vector3<f64> {
        Vector3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
    }

    fn fd_jacobian(f: &AnalyticBeltrami, x: &Vector3<f64>, pot: bool) -> Matrix3<f64> {
        let h = 1e-5;
        let mut m = Matrix3::zeros();
        for a in 0..3 {
            let mut e = Vector3::zeros();
            e[a] = h;
            let (p, q) = if pot {
                (f.potential(&(x + e)), f.potential(&(x - e)))
            } else {
                (f.velocity(&(x + e)), f.velocity(&(x - e)))
            };
            m.set_column(a, &((p - q) / (2.0 * h)));
        }
        m
    }

    fn families() -> Vec<AnalyticBeltrami> {
        let lat = Lattice::square(2.0 * PI).unwrap();
        vec![
            AnalyticBeltrami::shear(2.0).unwrap(),
            AnalyticBeltrami::modal(&lat, [1.0, 0.0], 1, 1.0, 1.0).unwrap(),
            AnalyticBeltrami::modal(&lat, [1.0, 2.0], 2, 1.3, 0.7).unwrap(),
        ]
    }

    #[test]
    fn beltrami_divergence_free_and_potential() {
        let x = Vector3::new(0.31, 1.7, -0.42);
        for f in families() {
            let j = f.jacobian(&x);
            assert!((j - fd_jacobian(&f, &x, false)).norm() < 1e-8, "{f:?}");
            assert!((curl(&j) - f.velocity(&x) * f.alpha()).norm() < 1e-12);
            assert!(j.trace().abs() < 1e-12);
            let ja = fd_jacobian(&f, &x, true);
            assert!((curl(&ja) - f.velocity(&x)).norm() < 1e-8);
        }
    }

    #[test]
    fn boundary_values() {
        let s = AnalyticBeltrami::shear(2.0).unwrap();
        assert_eq!(s.velocity(&Vector3::new(0.0, 0.0, 0.0)), Vector3::new(1.0, 0.0, 0.0));
        let v = s.velocity(&Vector3::new(0.0, 0.0, -PI / 4.0));
        assert!((v - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        let lat = Lattice::square(2.0 * PI).unwrap();
        let m = AnalyticBeltrami::modal(&lat, [1.0, 0.0], 1, 1.0, 1.0).unwrap();
        assert!((m.alpha() - (1.0 + PI * PI).sqrt()).abs() < 1e-15);
        for x in [0.0, 0.9, 2.5] {
            assert!(m.velocity(&Vector3::new(x, 0.3, 0.0)).z.abs() < 1e-15);
            assert!(m.velocity(&Vector3::new(x, 0.3, -1.0)).z.abs() < 1e-15);
        }
    }

    #[test]
    fn modal_amplitude_is_max_speed() {
        let lat = Lattice::square(2.0 * PI).unwrap();
        let m = AnalyticBeltrami::modal(&lat, [1.0, 1.0], 1, 1.0, 1.0).unwrap();
        let mut max: f64 = 0.0;
        for i in 0..64 {
            for k in 0..=64 {
                let x = Vector3::new(2.0 * PI * i as f64 / 64.0, 0.0, -(k as f64) / 64.0);
                max = max.max(m.velocity(&x).norm());
            }
        }
        assert!(max <= 1.0 + 1e-12 && max > 0.99);
    }

    #[test]
    fn off_lattice_wavevector_rejected() {
        let lat = Lattice::square(2.0 * PI).unwrap();
        assert!(AnalyticBeltrami::modal(&lat, [0.5, 0.0], 1, 1.0, 1.0).is_err());
        assert!(AnalyticBeltrami::modal(&lat, [1.0, 0.0], 0, 1.0, 1.0).is_err());
    }
}
