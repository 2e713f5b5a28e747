//! Splitting a closed periodic 1-form `B* = (B*₁, B*₂)` on the chart into
//! `∇f₀ + (a₁, a₂)`.

use crate::elliptic::solve_periodic_poisson_2d;
use crate::error::{Error, Result};
use crate::geometry::spectral::Plane;
use crate::geometry::Lattice;

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub f0: Vec<f64>,
    pub a: [f64; 2],
    /// `‖∂_X B*₂ − ∂_Y B*₁‖_∞ / scale`.
    pub defect: f64,
    /// `‖∇f₀ + a − B*‖_∞ / scale`.
    pub reconstruction: f64,
}

fn xy_gradient(lattice: &Lattice, plane: &Plane, f: &[f64]) -> [Vec<f64>; 2] {
    let [d1, d2] = plane.gradient(f);
    let mut gx = vec![0.0; f.len()];
    let mut gy = vec![0.0; f.len()];
    for n in 0..f.len() {
        [gx[n], gy[n]] = lattice.xy_from_s(d1[n], d2[n]);
    }
    [gx, gy]
}

/// `scale` normalises the reported defects; decomposition fails when the
/// relative conservativity defect exceeds `tolerance`.
pub fn tangential_decompose(
    lattice: &Lattice,
    plane: &Plane,
    bstar: &[Vec<f64>; 2],
    scale: f64,
    tolerance: f64,
) -> Result<Decomposition> {
    let n = plane.len();
    if bstar[0].len() != n || bstar[1].len() != n {
        return Err(Error::Contract("tangential components have wrong sample count".into()));
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let a = [Plane::mean(&bstar[0]), Plane::mean(&bstar[1])];
    let [b1x, b1y] = xy_gradient(lattice, plane, &bstar[0]);
    let [b2x, b2y] = xy_gradient(lattice, plane, &bstar[1]);
    let defect = (0..n).map(|m| (b2x[m] - b1y[m]).abs()).fold(0.0, f64::max) / scale;
    if defect > tolerance {
        return Err(Error::DecompositionInvalid { defect, tolerance });
    }
    let mut source: Vec<f64> = (0..n).map(|m| b1x[m] + b2y[m]).collect();
    // derivatives of periodic data have zero mean up to rounding
    let mean = Plane::mean(&source);
    source.iter_mut().for_each(|v| *v -= mean);
    let f0 = solve_periodic_poisson_2d(lattice, plane, &source)?;
    let [fx, fy] = xy_gradient(lattice, plane, &f0);
    let reconstruction = (0..n)
        .map(|m| (fx[m] + a[0] - bstar[0][m]).abs().max((fy[m] + a[1] - bstar[1][m]).abs()))
        .fold(0.0, f64::max)
        / scale;
    Ok(Decomposition {
        f0,
        a,
        defect,
        reconstruction,
    })
}
