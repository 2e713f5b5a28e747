//! The frame transport `T_F Â = Â₁F_X + Â₂F_Y + Â₃ F_X×F_Y` and admissible
//! variations generated from a surface displacement `δη`.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{mapped_derivatives, SampledVectorField};
use crate::geometry::frame::EPS_GEOM;
use crate::geometry::mapped::MIN_DET;
use crate::geometry::spectral::signed_wavenumber;
use crate::geometry::{Grid, MappedGrid, SampledDisplacement};
use crate::potential::smoothstep;

fn basis(j: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let fx = j.column(0).into_owned();
    let fy = j.column(1).into_owned();
    let nz = fx.cross(&fy);
    if !(nz.norm() >= EPS_GEOM) {
        return Err(Error::GeometryDegenerate(format!(
            "|F_X x F_Y| = {:.3e} in the transport frame",
            nz.norm()
        )));
    }
    Ok(Matrix3::from_columns(&[fx, fy, nz]))
}

/// `T_F Â` at every node.
pub fn transport(mg: &MappedGrid, a_hat: &SampledVectorField) -> Result<SampledVectorField> {
    a_hat.check_grid(mg)?;
    let mut out = SampledVectorField::zeros(*mg.grid());
    for n in 0..a_hat.len() {
        out.set(n, basis(mg.jacobian(n))? * a_hat.at(n));
    }
    Ok(out)
}

/// `T_F⁻¹ A` at every node.
pub fn transport_inverse(mg: &MappedGrid, a: &SampledVectorField) -> Result<SampledVectorField> {
    a.check_grid(mg)?;
    let mut out = SampledVectorField::zeros(*mg.grid());
    for n in 0..a.len() {
        let b = basis(mg.jacobian(n))?;
        let x = b
            .lu()
            .solve(&a.at(n))
            .ok_or_else(|| Error::GeometryDegenerate("singular transport frame".into()))?;
        out.set(n, x);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    TransportGenerated,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationOptions {
    /// Width of the horizontal Gaussian mollifier applied to `δF`; zero disables it.
    pub mollification: f64,
    /// The curve `F + tδF` must stay a diffeomorphism for `|t| ≤ max_step`.
    pub max_step: f64,
    /// Admissibility checks must hold within this tolerance.
    pub tolerance: f64,
}

impl Default for VariationOptions {
    fn default() -> Self {
        Self {
            mollification: 0.0,
            max_step: 1e-3,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityCheck {
    /// `max |δA×n + (DA δF)×n + A×j|` on the surface.
    pub var5_residual: f64,
    /// Size of the three terms, for relative judgement.
    pub var5_scale: f64,
    /// `max |δA×e₃|` on the bed.
    pub bottom_residual: f64,
    /// `max |δF|` on the bed.
    pub bottom_displacement: f64,
    /// `max |δF·n − δη|` against the requested surface displacement.
    pub eta_gap: f64,
}

impl AdmissibilityCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.var5_residual <= tolerance * self.var5_scale.max(1.0)
            && self.bottom_residual <= tolerance
            && self.bottom_displacement <= tolerance
    }
}

#[derive(Debug, Clone)]
pub struct AdmissiblePair {
    pub delta_f: SampledDisplacement,
    /// Eulerian `δA` at the nodes.
    pub delta_a: SampledVectorField,
    /// Realised `δη = δF·n` on the surface nodes.
    pub delta_eta: Vec<f64>,
    pub provenance: Provenance,
    pub check: AdmissibilityCheck,
    pub tolerance: f64,
}

/// `j = (S_X × δS_Y + δS_X × S_Y) / |S_X × S_Y|` at surface node `q`.
pub(crate) fn surface_j(mg: &MappedGrid, delta_f: &SampledDisplacement, q: usize) -> Vector3<f64> {
    let f = &mg.top_frames()[q];
    let dj = delta_f.node_jacobian(mg.top_index(q));
    let dsx = dj.column(0).into_owned();
    let dsy = dj.column(1).into_owned();
    (f.s_x.cross(&dsy) + dsx.cross(&f.s_y)) / f.area_element
}

fn check_pair(
    mg: &MappedGrid,
    a: &SampledVectorField,
    delta_f: &SampledDisplacement,
    delta_a: &SampledVectorField,
    requested: Option<&[f64]>,
) -> Result<(AdmissibilityCheck, Vec<f64>)> {
    let g = mg.grid();
    let da = mapped_derivatives(a, mg)?;
    let frames = mg.top_frames();
    let mut check = AdmissibilityCheck {
        var5_residual: 0.0,
        var5_scale: 0.0,
        bottom_residual: 0.0,
        bottom_displacement: 0.0,
        eta_gap: 0.0,
    };
    let mut eta = Vec::with_capacity(frames.len());
    for (q, f) in frames.iter().enumerate() {
        let n = mg.top_index(q);
        let ds = delta_f.node_value(n);
        let t1 = delta_a.at(n).cross(&f.n);
        let t2 = (da.jacobian(n) * ds).cross(&f.n);
        let t3 = a.at(n).cross(&surface_j(mg, delta_f, q));
        check.var5_residual = check.var5_residual.max((t1 + t2 + t3).norm());
        check.var5_scale = check.var5_scale.max(t1.norm().max(t2.norm()).max(t3.norm()));
        let e = ds.dot(&f.n);
        if let Some(r) = requested {
            check.eta_gap = check.eta_gap.max((e - r[q]).abs());
        }
        eta.push(e);
    }
    for n in g.layer_range(0) {
        check.bottom_residual = check.bottom_residual.max(delta_a.at(n).cross(&Vector3::z()).norm());
        check.bottom_displacement = check.bottom_displacement.max(delta_f.node_value(n).norm());
    }
    Ok((check, eta))
}

impl AdmissiblePair {
    /// A hand-built pair with `δF = 0`, e.g. an interior variation of `A`.
    pub fn manual_interior(mg: &MappedGrid, a: &SampledVectorField, delta_a: SampledVectorField) -> Result<Self> {
        delta_a.check_grid(mg)?;
        let g = *mg.grid();
        let delta_f = SampledDisplacement::new(g, [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]])?;
        let (check, delta_eta) = check_pair(mg, a, &delta_f, &delta_a, None)?;
        Ok(Self {
            delta_f,
            delta_a,
            delta_eta,
            provenance: Provenance::Manual,
            check,
            tolerance: VariationOptions::default().tolerance,
        })
    }
}

/// Vertical cutoff: one at the surface, zero below half depth.
fn cutoff(z: f64, depth: f64) -> f64 {
    1.0 - smoothstep(-z / (0.5 * depth))
}

fn mollify(grid: &Grid, plane: &crate::geometry::spectral::Plane, layer: &[f64], eps: f64) -> Vec<f64> {
    let lat = grid.lattice;
    plane.filter(layer, |i, j| {
        let k = lat.wavevector(
            signed_wavenumber(i, grid.nx) as f64,
            signed_wavenumber(j, grid.ny) as f64,
        );
        Complex64::new((-0.5 * eps * eps * (k[0] * k[0] + k[1] * k[1])).exp(), 0.0)
    })
}

/// Builds `δF = χ(Z) δη N/|N|` (mollified), and `δA` as the Eulerian
/// derivative of `A(t) = T_{F+tδF} T_F⁻¹ A` at `t = 0`.
pub fn make_admissible(
    mg: &MappedGrid,
    a: &SampledVectorField,
    delta_eta: &[f64],
    options: &VariationOptions,
) -> Result<AdmissiblePair> {
    a.check_grid(mg)?;
    let g = *mg.grid();
    let l = g.layer_len();
    if delta_eta.len() != l {
        return Err(Error::Contract(format!(
            "surface displacement has {} samples, surface has {l}",
            delta_eta.len()
        )));
    }
    if !(options.mollification >= 0.0) || !(options.max_step > 0.0) {
        return Err(Error::Contract("mollification must be >= 0 and max step > 0".into()));
    }
    let mut values = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    for n in 0..g.len() {
        let (_, _, k) = g.ijk(n);
        let chi = cutoff(g.z(k), g.depth);
        if chi == 0.0 {
            continue;
        }
        let j = mg.jacobian(n);
        let nn = j.column(0).cross(&j.column(1)).normalize();
        for c in 0..3 {
            values[c][n] = chi * delta_eta[n % l] * nn[c];
        }
    }
    if options.mollification > 0.0 {
        let plane = &mg.ops().plane;
        for comp in values.iter_mut() {
            for k in 0..g.layers() {
                let r = g.layer_range(k);
                let sm = mollify(&g, plane, &comp[r.clone()], options.mollification);
                comp[r].copy_from_slice(&sm);
            }
        }
    }
    let delta_f = SampledDisplacement::new(g, values)?;

    for t in [-options.max_step, options.max_step] {
        let min_det = (0..g.len())
            .map(|n| (mg.jacobian(n) + delta_f.node_jacobian(n) * t).determinant())
            .fold(f64::INFINITY, f64::min);
        if !(min_det > MIN_DET) {
            return Err(Error::StepSize {
                step: options.max_step,
                min_det,
            });
        }
    }

    let a_hat = transport_inverse(mg, a)?;
    let da = mapped_derivatives(a, mg)?;
    let mut delta_a = SampledVectorField::zeros(g);
    for n in 0..g.len() {
        let j = mg.jacobian(n);
        let dj = delta_f.node_jacobian(n);
        let (fx, fy) = (j.column(0).into_owned(), j.column(1).into_owned());
        let (dfx, dfy) = (dj.column(0).into_owned(), dj.column(1).into_owned());
        let h = a_hat.at(n);
        let material = dfx * h.x + dfy * h.y + (dfx.cross(&fy) + fx.cross(&dfy)) * h.z;
        delta_a.set(n, material - da.jacobian(n) * delta_f.node_value(n));
    }
    let (check, realised) = check_pair(mg, a, &delta_f, &delta_a, Some(delta_eta))?;
    Ok(AdmissiblePair {
        delta_f,
        delta_a,
        delta_eta: realised,
        provenance: Provenance::TransportGenerated,
        check,
        tolerance: options.tolerance,
    })
}

/// Random trigonometric surface displacement with modes `|k1|, |k2| ≤ max_mode`
/// (including the mean), scaled to `max |δη| = amplitude`.
pub fn random_surface_variation(grid: &Grid, seed: u64, max_mode: i64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for k1 in -max_mode..=max_mode {
        for k2 in 0..=max_mode {
            if k2 == 0 && k1 < 0 {
                continue;
            }
            modes.push((k1, k2, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let mut eta: Vec<f64> = (0..grid.layer_len())
        .map(|m| {
            let (s1, s2) = (grid.s1(m % grid.nx), grid.s2(m / grid.nx));
            modes
                .iter()
                .map(|&(k1, k2, c, s)| {
                    let ph = 2.0 * std::f64::consts::PI * (k1 as f64 * s1 + k2 as f64 * s2);
                    c * ph.cos() + s * ph.sin()
                })
                .sum()
        })
        .collect();
    let peak = eta.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if peak > 0.0 {
        eta.iter_mut().for_each(|v| *v *= amplitude / peak);
    }
    eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{evaluate_analytic_potential, AnalyticBeltrami};
    use crate::geometry::{DomainMap, Lattice};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, n, n, n).unwrap()
    }

    fn graph_lift(n: usize) -> MappedGrid {
        let g = grid(n);
        let map = DomainMap::graph_lift(&g.lattice, 1.0, &[([1.0, 0.0], 0.1, 0.0), ([0.0, 1.0], 0.0, 0.05)]).unwrap();
        MappedGrid::new(&map, g).unwrap()
    }

    fn random_hat(mg: &MappedGrid, seed: u64, top_free: bool) -> SampledVectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = *mg.grid();
        let mut out = SampledVectorField::zeros(g);
        for n in 0..g.len() {
            let x = g.reference_point(n);
            let w = if top_free { x.z } else { 1.0 };
            out.set(
                n,
                Vector3::new(
                    w * (c[0] + c[1] * x.x.cos() + c[2] * x.y.sin()),
                    w * (c[3] + c[4] * (x.x + x.y).sin() + c[5] * x.z),
                    c[6] + c[7] * x.x.sin() * x.z + c[8] * x.y.cos(),
                ),
            );
        }
        out
    }

    #[test]
    fn identity_transport_is_identity() {
        let g = grid(8);
        let mg = MappedGrid::new(&DomainMap::identity(1.0), g).unwrap();
        let h = random_hat(&mg, 1, false);
        assert_eq!(transport(&mg, &h).unwrap(), h);
    }

    #[test]
    fn transport_round_trip_on_graph_lift() {
        let mg = graph_lift(16);
        let h = random_hat(&mg, 2, false);
        let back = transport_inverse(&mg, &transport(&mg, &h).unwrap()).unwrap();
        assert!(back.axpy(-1.0, &h).max_norm() < 1e-10);
    }

    #[test]
    fn tangential_hat_gives_normal_trace() {
        let mg = graph_lift(16);
        let a = transport(&mg, &random_hat(&mg, 3, true)).unwrap();
        let worst = (0..mg.grid().layer_len())
            .map(|q| a.at(mg.top_index(q)).cross(&mg.top_frames()[q].n).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10);
    }

    #[test]
    fn zero_displacement_gives_zero_pair() {
        let mg = graph_lift(8);
        let a = transport(&mg, &random_hat(&mg, 4, true)).unwrap();
        let p = make_admissible(&mg, &a, &vec![0.0; 64], &VariationOptions::default()).unwrap();
        assert!(p.delta_f.values().iter().all(|v| v.iter().all(|x| *x == 0.0)));
        assert_eq!(p.delta_a.max_norm(), 0.0);
    }

    #[test]
    fn flat_cosine_displacement() {
        let g = grid(16);
        let mg = MappedGrid::new(&DomainMap::identity(1.0), g).unwrap();
        let a = evaluate_analytic_potential(&AnalyticBeltrami::shear(2.0).unwrap(), &mg).unwrap();
        let eta: Vec<f64> = (0..256).map(|m| (2.0 * PI * g.s1(m % 16)).cos()).collect();
        let p = make_admissible(&mg, &a, &eta, &VariationOptions::default()).unwrap();
        for q in 0..256 {
            let v = p.delta_f.node_value(mg.top_index(q));
            assert!(v.x.abs() < 1e-15 && v.y.abs() < 1e-15 && (v.z - eta[q]).abs() < 1e-15);
        }
        assert!(p.check.var5_residual < 1e-8, "{:?}", p.check);
        assert!(p.check.passes(1e-8));
    }

    #[test]
    fn random_displacement_on_graph_lift_is_admissible() {
        let mg = graph_lift(16);
        let a = transport(&mg, &random_hat(&mg, 5, true)).unwrap();
        let eta = random_surface_variation(mg.grid(), 9, 2, 0.1);
        let p = make_admissible(&mg, &a, &eta, &VariationOptions::default()).unwrap();
        assert!(p.check.var5_residual < 1e-6, "{:?}", p.check);
        assert!(p.check.bottom_residual < 1e-10 && p.check.bottom_displacement == 0.0);
        // normal displacement is realised exactly before mollification
        assert!(p.check.eta_gap < 1e-12);
    }

    #[test]
    fn mollified_displacement_stays_close() {
        let mg = graph_lift(16);
        let a = transport(&mg, &random_hat(&mg, 6, true)).unwrap();
        let eta = random_surface_variation(mg.grid(), 10, 1, 0.1);
        let opts = VariationOptions {
            mollification: 0.05,
            ..Default::default()
        };
        let p = make_admissible(&mg, &a, &eta, &opts).unwrap();
        assert!(p.check.eta_gap > 0.0 && p.check.eta_gap < 1e-2, "{}", p.check.eta_gap);
        assert!(p.check.passes(1e-6));
    }

    #[test]
    fn oversized_step_is_rejected() {
        let mg = graph_lift(8);
        let a = SampledVectorField::zeros(*mg.grid());
        let eta = random_surface_variation(mg.grid(), 11, 2, 1.0);
        let opts = VariationOptions {
            max_step: 10.0,
            ..Default::default()
        };
        assert!(matches!(make_admissible(&mg, &a, &eta, &opts), Err(Error::StepSize { .. })));
    }
}
