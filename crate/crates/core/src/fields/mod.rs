//! Sampled vector fields on a mapped cell and their physical derivatives.
//!
//! Samples are stored per reference node and hold the physical components
//! of the field at `F(node)`.

mod analytic;

pub use analytic::AnalyticBeltrami;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Grid, MappedGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledVectorField {
    grid: Grid,
    pub comps: [Vec<f64>; 3],
}

impl SampledVectorField {
    pub fn new(grid: Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::Contract(format!(
                    "field has {} samples, grid has {}",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Samples `f(F(node))` at every node of a mapped grid.
    pub fn from_fn(mg: &MappedGrid, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        let mut out = Self::zeros(*mg.grid());
        for (n, p) in mg.positions().iter().enumerate() {
            out.set(n, f(p));
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn at(&self, n: usize) -> Vector3<f64> {
        Vector3::new(self.comps[0][n], self.comps[1][n], self.comps[2][n])
    }

    #[inline]
    pub fn set(&mut self, n: usize, v: Vector3<f64>) {
        self.comps[0][n] = v.x;
        self.comps[1][n] = v.y;
        self.comps[2][n] = v.z;
    }

    /// `self + t · other`.
    pub fn axpy(&self, t: f64, other: &SampledVectorField) -> SampledVectorField {
        let mut out = self.clone();
        for c in 0..3 {
            for (a, b) in out.comps[c].iter_mut().zip(&other.comps[c]) {
                *a += t * b;
            }
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.len()).map(|n| self.at(n).norm()).fold(0.0, f64::max)
    }

    pub fn check_grid(&self, mg: &MappedGrid) -> Result<()> {
        let g = mg.grid();
        if g.nx != self.grid.nx || g.ny != self.grid.ny || g.nz != self.grid.nz {
            return Err(Error::Contract(format!(
                "field grid {}x{}x{} does not match {}x{}x{}",
                self.grid.nx, self.grid.ny, self.grid.nz, g.nx, g.ny, g.nz
            )));
        }
        Ok(())
    }
}

/// Physical first derivatives of a sampled field.
#[derive(Debug, Clone)]
pub struct FieldDerivatives {
    /// `grad[i][j] = ∂_j u_i`.
    pub grad: [[Vec<f64>; 3]; 3],
    pub curl: SampledVectorField,
    pub div: Vec<f64>,
}

impl FieldDerivatives {
    pub fn jacobian(&self, n: usize) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.grad[i][j][n])
    }
}

pub fn mapped_derivatives(field: &SampledVectorField, mg: &MappedGrid) -> Result<FieldDerivatives> {
    field.check_grid(mg)?;
    let grad = [
        mg.gradient(&field.comps[0])?,
        mg.gradient(&field.comps[1])?,
        mg.gradient(&field.comps[2])?,
    ];
    let n = field.len();
    let mut curl = SampledVectorField::zeros(*field.grid());
    let mut div = vec![0.0; n];
    for p in 0..n {
        curl.comps[0][p] = grad[2][1][p] - grad[1][2][p];
        curl.comps[1][p] = grad[0][2][p] - grad[2][0][p];
        curl.comps[2][p] = grad[1][0][p] - grad[0][1][p];
        div[p] = grad[0][0][p] + grad[1][1][p] + grad[2][2][p];
    }
    Ok(FieldDerivatives { grad, curl, div })
}

/// Max-norm residuals of the Beltrami system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeltramiResiduals {
    pub curl_minus_alpha_u: f64,
    pub div: f64,
    pub top_normal: f64,
    pub bottom_normal: f64,
}

pub fn beltrami_residuals(field: &SampledVectorField, mg: &MappedGrid, alpha: f64) -> Result<BeltramiResiduals> {
    let d = mapped_derivatives(field, mg)?;
    let g = mg.grid();
    let mut curl_res: f64 = 0.0;
    let mut div_res: f64 = 0.0;
    for n in 0..g.len() {
        curl_res = curl_res.max((d.curl.at(n) - field.at(n) * alpha).norm());
        div_res = div_res.max(d.div[n].abs());
    }
    let mut top: f64 = 0.0;
    for (m, fr) in mg.top_frames().iter().enumerate() {
        top = top.max(field.at(mg.top_index(m)).dot(&fr.n).abs());
    }
    let bottom = g.layer_range(0).map(|n| field.comps[2][n].abs()).fold(0.0, f64::max);
    Ok(BeltramiResiduals {
        curl_minus_alpha_u: curl_res,
        div: div_res,
        top_normal: top,
        bottom_normal: bottom,
    })
}

/// `p = C − |u|²/2 − g z` at every node.
pub fn bernoulli_pressure(field: &SampledVectorField, mg: &MappedGrid, c: f64, gravity: f64) -> Result<Vec<f64>> {
    field.check_grid(mg)?;
    Ok((0..field.len())
        .map(|n| c - 0.5 * field.at(n).norm_squared() - gravity * mg.position(n).z)
        .collect())
}

fn check_analytic(family: &AnalyticBeltrami, mg: &MappedGrid) -> Result<()> {
    if !mg.map().is_identity() {
        return Err(Error::Unsupported(format!(
            "analytic {} field is only defined on the flat slab, map is {}",
            family.family(),
            mg.map().family()
        )));
    }
    if let AnalyticBeltrami::Modal { depth, .. } = family {
        if (depth - mg.grid().depth).abs() > 1e-12 * depth {
            return Err(Error::Contract("modal depth differs from the grid depth".into()));
        }
    }
    Ok(())
}

/// Samples an analytic family on the flat slab.
pub fn evaluate_analytic(family: &AnalyticBeltrami, mg: &MappedGrid) -> Result<SampledVectorField> {
    check_analytic(family, mg)?;
    Ok(SampledVectorField::from_fn(mg, |p| family.velocity(p)))
}

/// Samples the closed-form potential of an analytic family (`A × n = 0` on
/// the surface) on the flat slab.
pub fn evaluate_analytic_potential(family: &AnalyticBeltrami, mg: &MappedGrid) -> Result<SampledVectorField> {
    check_analytic(family, mg)?;
    Ok(SampledVectorField::from_fn(mg, |p| family.potential(p)))
}
