//! Moving frame, dual basis and mean curvature of the free surface
//! `S(X, Y) = F(X, Y, 0)`.

use nalgebra::Vector3;

use super::map::{DomainMap, SurfaceJet};
use crate::error::{Error, Result};

/// Smallest admissible area element `|S_X × S_Y|`.
pub const EPS_GEOM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub s: Vector3<f64>,
    pub s_x: Vector3<f64>,
    pub s_y: Vector3<f64>,
    /// Outward unit normal.
    pub n: Vector3<f64>,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub n_x: Vector3<f64>,
    pub n_y: Vector3<f64>,
    pub area_element: f64,
    pub k_m: f64,
}

impl SurfaceFrame {
    pub fn from_jet(jet: &SurfaceJet) -> Result<Self> {
        let cross = jet.s_x.cross(&jet.s_y);
        let area = cross.norm();
        if !(area >= EPS_GEOM) {
            return Err(Error::GeometryDegenerate(format!(
                "surface tangents degenerate: |S_X x S_Y| = {area:.3e}"
            )));
        }
        let n = cross / area;
        let a = jet.s_y.cross(&n) / area;
        let b = n.cross(&jet.s_x) / area;
        let dn = |dcross: Vector3<f64>| (dcross - n * n.dot(&dcross)) / area;
        let n_x = dn(jet.s_xx.cross(&jet.s_y) + jet.s_x.cross(&jet.s_xy));
        let n_y = dn(jet.s_xy.cross(&jet.s_y) + jet.s_x.cross(&jet.s_yy));
        let e = jet.s_x.dot(&jet.s_x);
        let f = jet.s_x.dot(&jet.s_y);
        let g = jet.s_y.dot(&jet.s_y);
        let l = jet.s_xx.dot(&n);
        let m = jet.s_xy.dot(&n);
        let nn = jet.s_yy.dot(&n);
        // 2 K_M = -div n
        let k_m = (l * g - 2.0 * m * f + nn * e) / (2.0 * (e * g - f * f));
        Ok(Self {
            s: jet.s,
            s_x: jet.s_x,
            s_y: jet.s_y,
            n,
            a,
            b,
            n_x,
            n_y,
            area_element: area,
            k_m,
        })
    }

    /// Surface gradient `g_X a + g_Y b` from the chart partials of `g`.
    pub fn surface_gradient(&self, g_x: f64, g_y: f64) -> Vector3<f64> {
        self.a * g_x + self.b * g_y
    }
}

pub fn build_frame(map: &DomainMap, x: f64, y: f64) -> Result<SurfaceFrame> {
    SurfaceFrame::from_jet(&map.surface_jet(x, y))
}

pub fn mean_curvature(map: &DomainMap, x: f64, y: f64) -> Result<f64> {
    Ok(build_frame(map, x, y)?.k_m)
}
