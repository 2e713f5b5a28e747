//! Domain maps `F: D → Ω` fixing the bottom and periodic up to lattice shifts.
//!
//! Closed-form families have the profile `F(X) = X + (1 + Z/d) · D(X, Y)`
//! with a trigonometric displacement `D`, which keeps `F(X, Y, −d)` exactly
//! on the bottom. The sampled kind stores `D(X)` on grid nodes and is used for
//! variation curves `F + t δF`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::fd::interpolation_weights;
use super::grid::{Grid, Operators};
use super::lattice::Lattice;
use super::spectral::Series2;
use crate::error::{Error, Result};

/// One trigonometric term `cos·cos(k·X') + sin·sin(k·X')` of a vector displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    /// Physical wavevector; must lie on the reciprocal lattice.
    pub k: [f64; 2],
    pub cos: [f64; 3],
    pub sin: [f64; 3],
}

/// Second-order jet of the surface restriction `S(X, Y) = F(X, Y, 0)` in the
/// `(X, Y)` chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceJet {
    pub s: Vector3<f64>,
    pub s_x: Vector3<f64>,
    pub s_y: Vector3<f64>,
    pub s_xx: Vector3<f64>,
    pub s_xy: Vector3<f64>,
    pub s_yy: Vector3<f64>,
}

impl SurfaceJet {
    fn scaled_add(self, t: f64, o: SurfaceJet) -> SurfaceJet {
        SurfaceJet {
            s: self.s + o.s * t,
            s_x: self.s_x + o.s_x * t,
            s_y: self.s_y + o.s_y * t,
            s_xx: self.s_xx + o.s_xx * t,
            s_xy: self.s_xy + o.s_xy * t,
            s_yy: self.s_yy + o.s_yy * t,
        }
    }
}

/// Periodic trigonometric displacement `D(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigDisplacement {
    pub modes: Vec<FourierMode>,
}

impl TrigDisplacement {
    /// `[D, D_X, D_Y, D_XX, D_XY, D_YY]`.
    pub fn jet(&self, x: f64, y: f64) -> [Vector3<f64>; 6] {
        let mut out = [Vector3::zeros(); 6];
        for m in &self.modes {
            let c = Vector3::from(m.cos);
            let s = Vector3::from(m.sin);
            let ph = m.k[0] * x + m.k[1] * y;
            let (sn, cs) = ph.sin_cos();
            let f = c * cs + s * sn;
            // derivative of the phase factor pattern
            let df = s * cs - c * sn;
            out[0] += f;
            out[1] += df * m.k[0];
            out[2] += df * m.k[1];
            out[3] -= f * (m.k[0] * m.k[0]);
            out[4] -= f * (m.k[0] * m.k[1]);
            out[5] -= f * (m.k[1] * m.k[1]);
        }
        out
    }
}

/// Sampled periodic displacement on grid nodes.
#[derive(Debug, Clone)]
pub struct SampledDisplacement {
    grid: Grid,
    /// Samples of the three components.
    values: [Vec<f64>; 3],
    /// `∂_X`, `∂_Y`, `∂_Z` of each component: `deriv[axis][comp]`.
    deriv: [[Vec<f64>; 3]; 3],
    /// Per-layer interpolants of the values and of their Z derivatives.
    layer_series: Vec<[Series2; 3]>,
    layer_dz_series: Vec<[Series2; 3]>,
}

impl SampledDisplacement {
    pub fn new(grid: Grid, values: [Vec<f64>; 3]) -> Result<Self> {
        for v in &values {
            if v.len() != grid.len() {
                return Err(Error::Contract(format!(
                    "displacement has {} samples, grid has {}",
                    v.len(),
                    grid.len()
                )));
            }
        }
        let ops = Operators::new(grid);
        let mut deriv: [[Vec<f64>; 3]; 3] = Default::default();
        for c in 0..3 {
            let [d1, d2, d3] = ops.ref_gradient(&values[c]);
            let mut dx = vec![0.0; grid.len()];
            let mut dy = vec![0.0; grid.len()];
            for n in 0..grid.len() {
                let [a, b] = grid.lattice.xy_from_s(d1[n], d2[n]);
                dx[n] = a;
                dy[n] = b;
            }
            deriv[0][c] = dx;
            deriv[1][c] = dy;
            deriv[2][c] = d3;
        }
        let layer_series = (0..grid.layers())
            .map(|k| {
                let r = grid.layer_range(k);
                [0, 1, 2].map(|c| ops.plane.series(&values[c][r.clone()]))
            })
            .collect();
        let layer_dz_series = (0..grid.layers())
            .map(|k| {
                let r = grid.layer_range(k);
                [0, 1, 2].map(|c| ops.plane.series(&deriv[2][c][r.clone()]))
            })
            .collect();
        Ok(Self {
            grid,
            values,
            deriv,
            layer_series,
            layer_dz_series,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>; 3] {
        &self.values
    }

    pub fn node_value(&self, n: usize) -> Vector3<f64> {
        Vector3::new(self.values[0][n], self.values[1][n], self.values[2][n])
    }

    /// `∂_j δ_i` at node `n`, columns `X, Y, Z`.
    pub fn node_jacobian(&self, n: usize) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for c in 0..3 {
            for a in 0..3 {
                m[(c, a)] = self.deriv[a][c][n];
            }
        }
        m
    }

    fn z_stencil(&self, z: f64) -> (usize, Vec<f64>) {
        let t = (z + self.grid.depth) / self.grid.dz();
        interpolation_weights(t, 8, self.grid.layers())
    }

    fn value_at(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let s = self.grid.lattice.coords([x.x, x.y]);
        let (lo, w) = self.z_stencil(x.z);
        let mut v = Vector3::zeros();
        for (q, wq) in w.iter().enumerate() {
            for c in 0..3 {
                v[c] += wq * self.layer_series[lo + q][c].eval(s[0], s[1], 0, 0);
            }
        }
        v
    }

    fn jacobian_at(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let lat = &self.grid.lattice;
        let s = lat.coords([x.x, x.y]);
        let (lo, w) = self.z_stencil(x.z);
        let mut m = Matrix3::zeros();
        for (q, wq) in w.iter().enumerate() {
            for c in 0..3 {
                let ser = &self.layer_series[lo + q][c];
                let [dx, dy] = lat.xy_from_s(ser.eval(s[0], s[1], 1, 0), ser.eval(s[0], s[1], 0, 1));
                m[(c, 0)] += wq * dx;
                m[(c, 1)] += wq * dy;
                m[(c, 2)] += wq * self.layer_dz_series[lo + q][c].eval(s[0], s[1], 0, 0);
            }
        }
        m
    }

    fn surface_jet(&self, x: f64, y: f64) -> SurfaceJet {
        let lat = &self.grid.lattice;
        let s = lat.coords([x, y]);
        let top = &self.layer_series[self.grid.nz];
        // ∂_X = c00 ∂1 + c10 ∂2, ∂_Y = c01 ∂1 + c11 ∂2
        let c = [
            [lat.recip1[0] / (2.0 * PI), lat.recip1[1] / (2.0 * PI)],
            [lat.recip2[0] / (2.0 * PI), lat.recip2[1] / (2.0 * PI)],
        ];
        let mut jet = SurfaceJet {
            s: Vector3::zeros(),
            s_x: Vector3::zeros(),
            s_y: Vector3::zeros(),
            s_xx: Vector3::zeros(),
            s_xy: Vector3::zeros(),
            s_yy: Vector3::zeros(),
        };
        for comp in 0..3 {
            let [f, f1, f2, f11, f12, f22] = top[comp].jet2(s[0], s[1]);
            let d = |p: usize, q: usize| -> f64 {
                // second derivative along XY axes p, q
                c[0][p] * c[0][q] * f11 + (c[0][p] * c[1][q] + c[1][p] * c[0][q]) * f12 + c[1][p] * c[1][q] * f22
            };
            jet.s[comp] = f;
            jet.s_x[comp] = c[0][0] * f1 + c[1][0] * f2;
            jet.s_y[comp] = c[0][1] * f1 + c[1][1] * f2;
            jet.s_xx[comp] = d(0, 0);
            jet.s_xy[comp] = d(0, 1);
            jet.s_yy[comp] = d(1, 1);
        }
        jet
    }
}

#[derive(Debug, Clone)]
pub enum MapKind {
    Identity,
    /// `D = (0, 0, η)`.
    GraphLift(TrigDisplacement),
    /// Horizontal displacement `D = (ξ₁, ξ₂, 0)`.
    Shear(TrigDisplacement),
    Sampled(SampledDisplacement),
    /// `base + t · delta`.
    Perturbed {
        base: Box<DomainMap>,
        delta: SampledDisplacement,
        t: f64,
    },
}

#[derive(Debug, Clone)]
pub struct DomainMap {
    depth: f64,
    kind: MapKind,
}

impl DomainMap {
    pub fn identity(depth: f64) -> Self {
        Self {
            depth,
            kind: MapKind::Identity,
        }
    }

    /// Graph lift `(X, Y, Z) ↦ (X, Y, Z + (1 + Z/d) η(X, Y))`, with `η` given
    /// as `(k, a_cos, a_sin)` terms.
    pub fn graph_lift(lattice: &Lattice, depth: f64, eta: &[([f64; 2], f64, f64)]) -> Result<Self> {
        let modes = eta
            .iter()
            .map(|&(k, c, s)| FourierMode {
                k,
                cos: [0.0, 0.0, c],
                sin: [0.0, 0.0, s],
            })
            .collect();
        Self::trig(lattice, depth, modes, false)
    }

    /// Horizontal shear `(X, Y, Z) ↦ (X' + (1 + Z/d) ξ(X, Y), Z)`.
    pub fn shear(lattice: &Lattice, depth: f64, xi: &[([f64; 2], [f64; 2], [f64; 2])]) -> Result<Self> {
        let modes = xi
            .iter()
            .map(|&(k, c, s)| FourierMode {
                k,
                cos: [c[0], c[1], 0.0],
                sin: [s[0], s[1], 0.0],
            })
            .collect();
        Self::trig(lattice, depth, modes, true)
    }

    fn trig(lattice: &Lattice, depth: f64, modes: Vec<FourierMode>, shear: bool) -> Result<Self> {
        for m in &modes {
            if lattice.reciprocal_indices(m.k).is_none() {
                return Err(Error::Contract(format!(
                    "wavevector {:?} is not on the reciprocal lattice",
                    m.k
                )));
            }
        }
        let d = TrigDisplacement { modes };
        Ok(Self {
            depth,
            kind: if shear {
                MapKind::Shear(d)
            } else {
                MapKind::GraphLift(d)
            },
        })
    }

    pub fn sampled(displacement: SampledDisplacement) -> Self {
        Self {
            depth: displacement.grid.depth,
            kind: MapKind::Sampled(displacement),
        }
    }

    /// `self + t · delta`.
    pub fn perturbed(&self, delta: SampledDisplacement, t: f64) -> Self {
        Self {
            depth: self.depth,
            kind: MapKind::Perturbed {
                base: Box::new(self.clone()),
                delta,
                t,
            },
        }
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn is_identity(&self) -> bool {
        match &self.kind {
            MapKind::Identity => true,
            MapKind::GraphLift(d) | MapKind::Shear(d) => d.modes.is_empty(),
            MapKind::Perturbed { base, t, .. } => *t == 0.0 && base.is_identity(),
            MapKind::Sampled(_) => false,
        }
    }

    pub fn family(&self) -> &'static str {
        match &self.kind {
            MapKind::Identity => "identity-slab",
            MapKind::GraphLift(_) => "graph-lift",
            MapKind::Shear(_) => "shear",
            MapKind::Sampled(_) => "sampled-displacement",
            MapKind::Perturbed { .. } => "perturbed",
        }
    }

    fn weight(&self, z: f64) -> f64 {
        1.0 + z / self.depth
    }

    /// `F(X)`.
    pub fn eval(&self, x: &Vector3<f64>) -> Vector3<f64> {
        match &self.kind {
            MapKind::Identity => *x,
            MapKind::GraphLift(d) | MapKind::Shear(d) => x + d.jet(x.x, x.y)[0] * self.weight(x.z),
            MapKind::Sampled(s) => x + s.value_at(x),
            MapKind::Perturbed { base, delta, t } => base.eval(x) + delta.value_at(x) * *t,
        }
    }

    /// `DF(X)` with columns `F_X, F_Y, F_Z`.
    pub fn jacobian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        match &self.kind {
            MapKind::Identity => Matrix3::identity(),
            MapKind::GraphLift(d) | MapKind::Shear(d) => {
                let j = d.jet(x.x, x.y);
                let w = self.weight(x.z);
                let mut m = Matrix3::identity();
                for c in 0..3 {
                    m[(c, 0)] += w * j[1][c];
                    m[(c, 1)] += w * j[2][c];
                    m[(c, 2)] += j[0][c] / self.depth;
                }
                m
            }
            MapKind::Sampled(s) => Matrix3::identity() + s.jacobian_at(x),
            MapKind::Perturbed { base, delta, t } => base.jacobian(x) + delta.jacobian_at(x) * *t,
        }
    }

    /// Node positions and Jacobians over a whole grid, using stored samples
    /// where the map is sampled on that grid.
    pub fn node_geometry(&self, grid: &Grid) -> Vec<(Vector3<f64>, Matrix3<f64>)> {
        let same_grid = |g: &Grid| g.nx == grid.nx && g.ny == grid.ny && g.nz == grid.nz;
        match &self.kind {
            MapKind::Sampled(s) if same_grid(&s.grid) => (0..grid.len())
                .map(|n| {
                    let x = grid.reference_point(n);
                    (x + s.node_value(n), Matrix3::identity() + s.node_jacobian(n))
                })
                .collect(),
            MapKind::Perturbed { base, delta, t } if same_grid(&delta.grid) => base
                .node_geometry(grid)
                .into_iter()
                .enumerate()
                .map(|(n, (p, j))| (p + delta.node_value(n) * *t, j + delta.node_jacobian(n) * *t))
                .collect(),
            _ => (0..grid.len())
                .map(|n| {
                    let x = grid.reference_point(n);
                    (self.eval(&x), self.jacobian(&x))
                })
                .collect(),
        }
    }

    /// Jet of the surface parametrization at `(X, Y)`.
    pub fn surface_jet(&self, x: f64, y: f64) -> SurfaceJet {
        let flat = SurfaceJet {
            s: Vector3::new(x, y, 0.0),
            s_x: Vector3::x(),
            s_y: Vector3::y(),
            s_xx: Vector3::zeros(),
            s_xy: Vector3::zeros(),
            s_yy: Vector3::zeros(),
        };
        match &self.kind {
            MapKind::Identity => flat,
            MapKind::GraphLift(d) | MapKind::Shear(d) => {
                let j = d.jet(x, y);
                SurfaceJet {
                    s: flat.s + j[0],
                    s_x: flat.s_x + j[1],
                    s_y: flat.s_y + j[2],
                    s_xx: j[3],
                    s_xy: j[4],
                    s_yy: j[5],
                }
            }
            MapKind::Sampled(s) => {
                let j = s.surface_jet(x, y);
                SurfaceJet {
                    s: flat.s + j.s,
                    s_x: flat.s_x + j.s_x,
                    s_y: flat.s_y + j.s_y,
                    ..j
                }
            }
            MapKind::Perturbed { base, delta, t } => base.surface_jet(x, y).scaled_add(*t, delta.surface_jet(x, y)),
        }
    }

    /// Checks (F1) on the grid nodes and (F2) on the bottom layer.
    pub fn check_invariants(&self, grid: &Grid) -> Result<()> {
        let geo = self.node_geometry(grid);
        let mut min_det = f64::INFINITY;
        for (_, j) in &geo {
            min_det = min_det.min(j.determinant());
        }
        if !(min_det > 0.0) {
            return Err(Error::GeometryDegenerate(format!(
                "det DF reaches {min_det:.3e} on the grid"
            )));
        }
        for n in grid.layer_range(0) {
            let x = grid.reference_point(n);
            if (geo[n].0 - x).norm() > 1e-12 * (1.0 + x.norm()) {
                return Err(Error::Contract("F does not fix the bottom".into()));
            }
        }
        Ok(())
    }
}
