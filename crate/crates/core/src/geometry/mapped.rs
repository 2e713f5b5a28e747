//! A reference grid pushed forward by a domain map: node positions,
//! Jacobians, quadrature weights, top-surface frames and the chain-rule
//! derivatives in physical space.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::frame::SurfaceFrame;
use super::grid::{Grid, Operators};
use super::map::DomainMap;
use crate::error::{Error, Result};

/// Smallest admissible `det DF` at a node.
pub const MIN_DET: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct MappedGrid {
    grid: Grid,
    ops: Operators,
    map: DomainMap,
    positions: Vec<Vector3<f64>>,
    jac: Vec<Matrix3<f64>>,
    /// `DF^{-T}` at each node.
    inv_t: Vec<Matrix3<f64>>,
    det: Vec<f64>,
    volume_w: Vec<f64>,
    top: Vec<SurfaceFrame>,
    bottom_area: Vec<f64>,
    surface_w: Vec<f64>,
}

impl MappedGrid {
    pub fn new(map: &DomainMap, grid: Grid) -> Result<Self> {
        if (map.depth() - grid.depth).abs() > 1e-12 * grid.depth {
            return Err(Error::Contract(format!(
                "map depth {} differs from grid depth {}",
                map.depth(),
                grid.depth
            )));
        }
        let geo = map.node_geometry(&grid);
        let mut positions = Vec::with_capacity(grid.len());
        let mut jac = Vec::with_capacity(grid.len());
        let mut inv_t = Vec::with_capacity(grid.len());
        let mut det = Vec::with_capacity(grid.len());
        for (n, (p, j)) in geo.into_iter().enumerate() {
            let dj = j.determinant();
            if !(dj > MIN_DET) {
                let x = grid.reference_point(n);
                return Err(Error::GeometryDegenerate(format!(
                    "det DF = {dj:.3e} at reference point ({:.4}, {:.4}, {:.4})",
                    x.x, x.y, x.z
                )));
            }
            let inv = j.try_inverse().ok_or_else(|| Error::GeometryDegenerate("singular DF".into()))?;
            positions.push(p);
            jac.push(j);
            inv_t.push(inv.transpose());
            det.push(dj);
        }
        let zw = grid.z_weights();
        let cell = grid.lattice.cell_area * grid.horizontal_weight();
        let volume_w = (0..grid.len()).map(|n| det[n] * cell * zw[grid.ijk(n).2]).collect();
        let top: Vec<SurfaceFrame> = (0..grid.layer_len())
            .into_par_iter()
            .map(|n| {
                let [x, y] = grid.surface_point(n % grid.nx, n / grid.nx);
                SurfaceFrame::from_jet(&map.surface_jet(x, y))
            })
            .collect::<Result<_>>()?;
        let surface_w = top.iter().map(|f| f.area_element * cell).collect();
        Ok(Self {
            ops: Operators::new(grid),
            grid,
            map: map.clone(),
            positions,
            jac,
            inv_t,
            det,
            volume_w,
            top,
            bottom_area: vec![cell; grid.layer_len()],
            surface_w,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ops(&self) -> &Operators {
        &self.ops
    }

    pub fn map(&self) -> &DomainMap {
        &self.map
    }

    pub fn position(&self, n: usize) -> Vector3<f64> {
        self.positions[n]
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    /// `DF` (columns `F_X, F_Y, F_Z`) at node `n`.
    pub fn jacobian(&self, n: usize) -> &Matrix3<f64> {
        &self.jac[n]
    }

    pub fn det(&self, n: usize) -> f64 {
        self.det[n]
    }

    pub fn min_det(&self) -> f64 {
        self.det.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn volume_weights(&self) -> &[f64] {
        &self.volume_w
    }

    pub fn surface_weights(&self) -> &[f64] {
        &self.surface_w
    }

    /// Frames at the top-layer nodes, indexed `j * nx + i`.
    pub fn top_frames(&self) -> &[SurfaceFrame] {
        &self.top
    }

    /// Flat index of top node `m` (`m = j * nx + i`).
    pub fn top_index(&self, m: usize) -> usize {
        self.grid.nz * self.grid.layer_len() + m
    }

    pub fn integrate_volume(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.grid.len() {
            return Err(Error::Contract(format!(
                "volume integrand has {} samples, grid has {}",
                f.len(),
                self.grid.len()
            )));
        }
        Ok(f.iter().zip(&self.volume_w).map(|(a, w)| a * w).sum())
    }

    /// Integral over the top surface of a layer of samples.
    pub fn integrate_surface(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.grid.layer_len() {
            return Err(Error::Contract(format!(
                "surface integrand has {} samples, layer has {}",
                f.len(),
                self.grid.layer_len()
            )));
        }
        Ok(f.iter().zip(&self.surface_w).map(|(a, w)| a * w).sum())
    }

    /// Integral over the (flat) bottom of a layer of samples.
    pub fn integrate_bottom(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.grid.layer_len() {
            return Err(Error::Contract("bottom integrand has wrong sample count".into()));
        }
        Ok(f.iter().zip(&self.bottom_area).map(|(a, w)| a * w).sum())
    }

    /// `(∂_X, ∂_Y)` of a periodic layer.
    pub fn layer_xy_derivatives(&self, f: &[f64]) -> [Vec<f64>; 2] {
        let [d1, d2] = self.ops.plane.gradient(f);
        let lat = &self.grid.lattice;
        let mut dx = vec![0.0; f.len()];
        let mut dy = vec![0.0; f.len()];
        for n in 0..f.len() {
            [dx[n], dy[n]] = lat.xy_from_s(d1[n], d2[n]);
        }
        [dx, dy]
    }

    /// Reference gradient `(∂_X, ∂_Y, ∂_Z)` of a sampled scalar.
    pub fn reference_gradient(&self, f: &[f64]) -> [Vec<f64>; 3] {
        let [d1, d2, d3] = self.ops.ref_gradient(f);
        let lat = &self.grid.lattice;
        let mut dx = d1;
        let mut dy = d2;
        for n in 0..dx.len() {
            [dx[n], dy[n]] = lat.xy_from_s(dx[n], dy[n]);
        }
        [dx, dy, d3]
    }

    /// Physical gradient `DF^{-T} ∇_ref f`.
    pub fn gradient(&self, f: &[f64]) -> Result<[Vec<f64>; 3]> {
        if f.len() != self.grid.len() {
            return Err(Error::Contract("gradient input has wrong sample count".into()));
        }
        let r = self.reference_gradient(f);
        let mut out: [Vec<f64>; 3] = [vec![0.0; f.len()], vec![0.0; f.len()], vec![0.0; f.len()]];
        for n in 0..f.len() {
            let g = self.inv_t[n] * Vector3::new(r[0][n], r[1][n], r[2][n]);
            out[0][n] = g.x;
            out[1][n] = g.y;
            out[2][n] = g.z;
        }
        Ok(out)
    }

    /// Surface gradient on the top layer of a periodic layer `g`.
    pub fn surface_gradient(&self, g: &[f64]) -> Vec<Vector3<f64>> {
        let [gx, gy] = self.layer_xy_derivatives(g);
        self.top
            .iter()
            .enumerate()
            .map(|(m, fr)| fr.surface_gradient(gx[m], gy[m]))
            .collect()
    }

    /// Surface divergence of a tangent field on the top layer, in the
    /// conservative form `(∂_X(|N| a·V) + ∂_Y(|N| b·V)) / |N|`, which is
    /// the discrete adjoint of [`MappedGrid::surface_gradient`].
    pub fn surface_divergence(&self, v: &[Vector3<f64>], tol: f64) -> Result<Vec<f64>> {
        if v.len() != self.grid.layer_len() {
            return Err(Error::Contract("tangent field has wrong sample count".into()));
        }
        let scale = v.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
        let mut p = vec![0.0; v.len()];
        let mut q = vec![0.0; v.len()];
        for (m, fr) in self.top.iter().enumerate() {
            let normal = v[m].dot(&fr.n).abs();
            if normal > tol * scale {
                return Err(Error::Contract(format!(
                    "field is not tangent to the surface: |V.n| = {normal:.3e}"
                )));
            }
            p[m] = fr.area_element * fr.a.dot(&v[m]);
            q[m] = fr.area_element * fr.b.dot(&v[m]);
        }
        let [px, _] = self.layer_xy_derivatives(&p);
        let [_, qy] = self.layer_xy_derivatives(&q);
        Ok((0..v.len()).map(|m| (px[m] + qy[m]) / self.top[m].area_element).collect())
    }
}
