//! Reference grid over one periodic cell of the slab `D = ℝ² × (−d, 0)`.
//!
//! Nodes are uniform in lattice coordinates `(s1, s2) ∈ [0,1)²` and in
//! `Z ∈ [−d, 0]`; `nz` counts Z intervals, so there are `nz + 1` layers with
//! layer `0` on the bottom and layer `nz` on the top. Flat index is
//! `(k * ny + j) * nx + i`.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fd::{simpson_weights, ZDerivative};
use super::lattice::Lattice;
use super::spectral::Plane;
use crate::error::{Error, Result};

/// Formal order of the vertical finite differences.
pub const Z_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lattice: Lattice,
    pub depth: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Grid {
    pub fn new(lattice: Lattice, depth: f64, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::Contract(format!("depth must be positive, got {depth}")));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::Contract(format!(
                "horizontal resolution must be at least 4, got {nx}x{ny}"
            )));
        }
        if nz < Z_ORDER + 2 || nz % 2 != 0 {
            return Err(Error::Contract(format!(
                "nz must be even and at least {}, got {nz}",
                Z_ORDER + 2
            )));
        }
        Ok(Self {
            lattice,
            depth,
            nx,
            ny,
            nz,
        })
    }

    pub fn layer_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn layers(&self) -> usize {
        self.nz + 1
    }

    pub fn len(&self) -> usize {
        self.layer_len() * self.layers()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    /// `(i, j, k)` of a flat index.
    #[inline]
    pub fn ijk(&self, n: usize) -> (usize, usize, usize) {
        let i = n % self.nx;
        let j = (n / self.nx) % self.ny;
        let k = n / self.layer_len();
        (i, j, k)
    }

    pub fn dz(&self) -> f64 {
        self.depth / self.nz as f64
    }

    pub fn s1(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn s2(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        if k == self.nz {
            0.0
        } else {
            -self.depth + k as f64 * self.dz()
        }
    }

    /// Reference point `(X, Y, Z)` of a node.
    pub fn reference_point(&self, n: usize) -> Vector3<f64> {
        let (i, j, k) = self.ijk(n);
        let p = self.lattice.point(self.s1(i), self.s2(j));
        Vector3::new(p[0], p[1], self.z(k))
    }

    /// Reference horizontal point of surface node `(i, j)`.
    pub fn surface_point(&self, i: usize, j: usize) -> [f64; 2] {
        self.lattice.point(self.s1(i), self.s2(j))
    }

    /// Per-node weight of the horizontal trapezoid rule on the unit `s` cell.
    pub fn horizontal_weight(&self) -> f64 {
        1.0 / self.layer_len() as f64
    }

    pub fn z_weights(&self) -> Vec<f64> {
        simpson_weights(self.nz, self.dz())
    }

    /// Flat indices of one layer.
    pub fn layer_range(&self, k: usize) -> std::ops::Range<usize> {
        let l = self.layer_len();
        k * l..(k + 1) * l
    }

    /// Same grid with a different resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Grid::new(self.lattice, self.depth, nx, ny, nz)
    }
}

/// Discrete derivative operators bound to a grid.
#[derive(Debug, Clone)]
pub struct Operators {
    pub grid: Grid,
    pub plane: Plane,
    pub dz: ZDerivative,
}

impl Operators {
    pub fn new(grid: Grid) -> Self {
        Self {
            plane: Plane::new(grid.nx, grid.ny),
            dz: ZDerivative::new(grid.layers(), grid.dz(), Z_ORDER),
            grid,
        }
    }

    /// `∂/∂Z` of a sampled scalar.
    pub fn d_z(&self, f: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        let stride = g.layer_len();
        for offset in 0..stride {
            self.dz.apply_strided(f, offset, stride, &mut out);
        }
        out
    }

    /// Reference gradient `(∂_{s1}, ∂_{s2}, ∂_Z)` of a sampled scalar.
    pub fn ref_gradient(&self, f: &[f64]) -> [Vec<f64>; 3] {
        let g = &self.grid;
        assert_eq!(f.len(), g.len(), "sample count does not match grid");
        let layers: Vec<[Vec<f64>; 2]> = (0..g.layers())
            .into_par_iter()
            .map(|k| self.plane.gradient(&f[g.layer_range(k)]))
            .collect();
        let mut d1 = Vec::with_capacity(g.len());
        let mut d2 = Vec::with_capacity(g.len());
        for [a, b] in layers {
            d1.extend(a);
            d2.extend(b);
        }
        [d1, d2, self.d_z(f)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_nz() {
        let lat = Lattice::square(1.0).unwrap();
        assert!(Grid::new(lat, 1.0, 8, 8, 9).is_err());
        assert!(Grid::new(lat, 1.0, 8, 8, 4).is_err());
        assert!(Grid::new(lat, -1.0, 8, 8, 8).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(Lattice::square(1.0).unwrap(), 1.0, 6, 5, 8).unwrap();
        for n in [0, 7, 29, g.len() - 1] {
            let (i, j, k) = g.ijk(n);
            assert_eq!(g.idx(i, j, k), n);
        }
        assert_eq!(g.z(g.nz), 0.0);
        assert_eq!(g.z(0), -1.0);
    }
}
