//! Vector potentials for tangential divergence-free fields on the mapped
//! cell.
//!
//! The pipeline: a symmetric lattice sum of Biot–Savart integrals gives `B`
//! with `curl B = u`; the tangential parts of `B` on the surface and the bed
//! split into a periodic gradient plus constants; three harmonic Dirichlet
//! corrections then remove the tangential trace on the surface, leaving
//! `A × e₃` constant on the bed.

mod biot_savart;
mod decompose;
mod partition;
mod singular;

pub use biot_savart::{
    biot_savart, dipole_tail_tensor, pv_lattice_sum, LatticeSum, LatticeSumOptions, LatticeTarget, SourceCloud, TailEstimate,
};
pub use decompose::{tangential_decompose, Decomposition};
pub use partition::{profile, smoothstep, PartitionCell};
pub use singular::{parallelepiped_kernel_integral, polygon_inverse_distance};

use nalgebra::Vector3;
use serde::Serialize;

use crate::elliptic::{DirichletProblem, EllipticSolver, SolverOptions};
use crate::error::{Error, Result};
use crate::fields::{mapped_derivatives, SampledVectorField};
use crate::geometry::fd::cumulative_from_top;
use crate::geometry::MappedGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialOptions {
    pub lattice_sum: LatticeSumOptions,
    pub solver: SolverOptions,
    pub tol_curl: f64,
    pub tol_bc: f64,
    pub tol_flux: f64,
    /// Relative conservativity defect above which a decomposition fails.
    pub tol_decompose: f64,
    /// Relative `|u·n|` on the boundary above which the input is rejected.
    pub tol_membership: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        Self {
            lattice_sum: LatticeSumOptions::default(),
            solver: SolverOptions::default(),
            tol_curl: 5e-2,
            tol_bc: 1e-2,
            tol_flux: 1e-2,
            tol_decompose: 0.1,
            tol_membership: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialStatus {
    Ok,
    AssembledWithWarnings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialDiagnostics {
    /// `‖curl A − u‖_∞ / ‖u‖_∞`.
    pub curl_error: f64,
    /// `max |A × n|` on the surface over `‖A‖_∞`.
    pub top_bc: f64,
    /// Largest deviation of `A × e₃` from `(m₁, m₂, 0)` on the bed over `‖A‖_∞`.
    pub bottom_bc: f64,
    pub div_max: f64,
    /// `|a_j − (m₂, −m₁)·λ_j|` relative to `|a_j|`, or to `‖u‖_∞ |λ_j| d` when the flux is negligible.
    pub flux_gap: [f64; 2],
    pub decomposition_defect: [f64; 2],
    pub solver_iterations: [usize; 3],
    pub a_max: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PotentialResult {
    pub a: SampledVectorField,
    /// Components of `A × e₃` on the bed.
    pub m: [f64; 2],
    pub fluxes: [f64; 2],
    /// Constants of the surface and bed decompositions.
    pub top_constants: [f64; 2],
    pub bottom_constants: [f64; 2],
    pub tail: TailEstimate,
    pub diagnostics: PotentialDiagnostics,
    pub status: PotentialStatus,
}

/// Side-face fluxes `a_j = ∫ u · (F_Z × F_{s_j}) ds dZ` through the faces
/// spanned by `λ_j` and the vertical, oriented by `e₃ × λ_j`.
pub fn compute_fluxes(u: &SampledVectorField, mg: &MappedGrid) -> Result<[f64; 2]> {
    u.check_grid(mg)?;
    let g = mg.grid();
    let zw = g.z_weights();
    let lam = [
        Vector3::new(g.lattice.lambda1[0], g.lattice.lambda1[1], 0.0),
        Vector3::new(g.lattice.lambda2[0], g.lattice.lambda2[1], 0.0),
    ];
    let mut out = [0.0; 2];
    for (face, slot) in out.iter_mut().enumerate() {
        let count = if face == 0 { g.nx } else { g.ny };
        let mut acc = 0.0;
        for k in 0..g.layers() {
            for p in 0..count {
                let n = if face == 0 { g.idx(p, 0, k) } else { g.idx(0, p, k) };
                let df = mg.jacobian(n);
                let normal = df.column(2).cross(&(df * lam[face]));
                acc += u.at(n).dot(&normal) * zw[k] / count as f64;
            }
        }
        *slot = acc;
    }
    Ok(out)
}

fn check_membership(u: &SampledVectorField, mg: &MappedGrid, tol: f64) -> Result<f64> {
    let umax = u.max_norm();
    let g = mg.grid();
    let mut worst: f64 = 0.0;
    for (m, fr) in mg.top_frames().iter().enumerate() {
        worst = worst.max(u.at(mg.top_index(m)).dot(&fr.n).abs());
    }
    for n in g.layer_range(0) {
        worst = worst.max(u.comps[2][n].abs());
    }
    if worst > tol * umax.max(f64::MIN_POSITIVE) && worst > 0.0 {
        return Err(Error::Contract(format!(
            "field is not tangent to the boundary: max |u.n| = {worst:.3e}"
        )));
    }
    Ok(umax)
}

pub fn assemble_potential(u: &SampledVectorField, mg: &MappedGrid, options: &PotentialOptions) -> Result<PotentialResult> {
    let umax = check_membership(u, mg, options.tol_membership)?;
    let g = *mg.grid();
    let l = g.layer_len();
    let lat = g.lattice;
    let sum = pv_lattice_sum(mg, u, &options.lattice_sum, &LatticeTarget::nodes(mg)).map_err(|e| e.in_stage("lattice-sum"))?;
    let b = &sum.b;

    let frames = mg.top_frames();
    let top_star = [
        (0..l).map(|m| b[mg.top_index(m)].dot(&frames[m].s_x)).collect(),
        (0..l).map(|m| b[mg.top_index(m)].dot(&frames[m].s_y)).collect(),
    ];
    let area_max = frames.iter().map(|f| f.area_element).fold(0.0, f64::max);
    let plane = &mg.ops().plane;
    let top = tangential_decompose(&lat, plane, &top_star, umax * area_max, options.tol_decompose)
        .map_err(|e| e.in_stage("surface-decomposition"))?;
    let bottom_star = [(0..l).map(|m| b[m].x).collect(), (0..l).map(|m| b[m].y).collect()];
    let bottom = tangential_decompose(&lat, plane, &bottom_star, umax, options.tol_decompose)
        .map_err(|e| e.in_stage("bed-decomposition"))?;

    let solver = EllipticSolver::new(mg, options.solver);
    let zeros = vec![0.0; l];
    let phi = solver
        .solve(&DirichletProblem::harmonic(g.len(), top.f0.clone(), bottom.f0.clone()))
        .map_err(|e| e.in_stage("dirichlet-phi"))?;
    let mut per = [Vec::with_capacity(l), Vec::with_capacity(l)];
    for m in 0..l {
        let x = g.surface_point(m % g.nx, m / g.nx);
        let s = mg.position(mg.top_index(m));
        per[0].push(x[0] - s.x);
        per[1].push(x[1] - s.y);
    }
    let [p0, p1] = per;
    let phi1 = solver
        .solve(&DirichletProblem::harmonic(g.len(), p0, zeros.clone()))
        .map_err(|e| e.in_stage("dirichlet-phi1"))?;
    let phi2 = solver
        .solve(&DirichletProblem::harmonic(g.len(), p1, zeros))
        .map_err(|e| e.in_stage("dirichlet-phi2"))?;

    let [a1, a2] = top.a;
    let mut a = SampledVectorField::zeros(g);
    for n in 0..g.len() {
        let grad = |s: &crate::elliptic::DirichletSolution| Vector3::new(s.grad[0][n], s.grad[1][n], s.grad[2][n]);
        let v = b[n] - grad(&phi) - (grad(&phi1) + Vector3::x()) * a1 - (grad(&phi2) + Vector3::y()) * a2;
        a.set(n, v);
    }

    let m = [bottom.a[1] - a2, a1 - bottom.a[0]];
    let fluxes = compute_fluxes(u, mg)?;
    let d = mapped_derivatives(&a, mg)?;
    let a_max = a.max_norm();
    let a_scale = a_max.max(f64::MIN_POSITIVE);
    let u_scale = umax.max(f64::MIN_POSITIVE);
    let curl_error = (0..g.len()).map(|n| (d.curl.at(n) - u.at(n)).norm()).fold(0.0, f64::max) / u_scale;
    let top_bc = (0..l)
        .map(|q| a.at(mg.top_index(q)).cross(&frames[q].n).norm())
        .fold(0.0, f64::max)
        / a_scale;
    let bottom_bc = (0..l)
        .map(|q| {
            let v = a.at(q);
            (v.y - m[0]).hypot(-v.x - m[1])
        })
        .fold(0.0, f64::max)
        / a_scale;
    let div_max = d.div.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let lam = [lat.lambda1, lat.lambda2];
    let mut flux_gap = [0.0; 2];
    for j in 0..2 {
        let predicted = m[1] * lam[j][0] - m[0] * lam[j][1];
        // relative to the flux itself unless it is negligible against the face scale
        let face = umax * lam[j][0].hypot(lam[j][1]) * g.depth;
        let denom = if fluxes[j].abs() > 1e-3 * face { fluxes[j].abs() } else { face };
        flux_gap[j] = if denom > 0.0 { (fluxes[j] - predicted).abs() / denom } else { 0.0 };
    }
    let mut warnings = Vec::new();
    if curl_error > options.tol_curl {
        warnings.push(format!("curl error {curl_error:.3e} exceeds {:.1e}", options.tol_curl));
    }
    if top_bc > options.tol_bc {
        warnings.push(format!("surface |A x n| {top_bc:.3e} exceeds {:.1e}", options.tol_bc));
    }
    if bottom_bc > options.tol_bc {
        warnings.push(format!("bed A x n deviation {bottom_bc:.3e} exceeds {:.1e}", options.tol_bc));
    }
    for j in 0..2 {
        if flux_gap[j] > options.tol_flux {
            warnings.push(format!("flux gap {} = {:.3e} exceeds {:.1e}", j + 1, flux_gap[j], options.tol_flux));
        }
    }
    let status = if warnings.is_empty() {
        PotentialStatus::Ok
    } else {
        PotentialStatus::AssembledWithWarnings
    };
    Ok(PotentialResult {
        a,
        m,
        fluxes,
        top_constants: top.a,
        bottom_constants: bottom.a,
        tail: sum.tail,
        diagnostics: PotentialDiagnostics {
            curl_error,
            top_bc,
            bottom_bc,
            div_max,
            flux_gap,
            decomposition_defect: [top.defect, bottom.defect],
            solver_iterations: [phi.iterations, phi1.iterations, phi2.iterations],
            a_max,
            warnings,
        },
        status,
    })
}

/// Potential on the flat slab in the gauge `A₃ = 0`, `A = 0` on the surface:
/// `A₁ = −∫_z^0 u₂`, `A₂ = ∫_z^0 u₁`, integrated column by column.
pub fn spectral_potential_flat(u: &SampledVectorField, mg: &MappedGrid) -> Result<SampledVectorField> {
    if !mg.map().is_identity() {
        return Err(Error::Unsupported(format!(
            "flat-slab oracle needs the identity map, got {}",
            mg.map().family()
        )));
    }
    u.check_grid(mg)?;
    let g = mg.grid();
    let mut a = SampledVectorField::zeros(*g);
    let mut col = vec![0.0; g.layers()];
    for m in 0..g.layer_len() {
        for (c, sign, target) in [(1usize, -1.0, 0usize), (0, 1.0, 1)] {
            for (k, v) in col.iter_mut().enumerate() {
                *v = u.comps[c][k * g.layer_len() + m];
            }
            let integral = cumulative_from_top(&col, g.dz(), 8);
            for (k, v) in integral.iter().enumerate() {
                a.comps[target][k * g.layer_len() + m] = sign * v;
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct CleanedPotential {
    pub a: SampledVectorField,
    /// `max |div A|` over interior nodes before and after cleaning.
    pub div_before: f64,
    pub div_after: f64,
    /// `max |∇φ × n|` over both boundaries.
    pub boundary_change: f64,
    pub iterations: usize,
}

fn interior_div_max(mg: &MappedGrid, a: &SampledVectorField) -> Result<(Vec<f64>, f64)> {
    let d = mapped_derivatives(a, mg)?;
    let g = mg.grid();
    let l = g.layer_len();
    let m = d.div[l..g.nz * l].iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok((d.div, m))
}

/// `A − ∇φ` with `Δφ = div A`, `φ = 0` on both boundaries.
pub fn divergence_clean(a: &SampledVectorField, mg: &MappedGrid, options: SolverOptions) -> Result<CleanedPotential> {
    let g = *mg.grid();
    let (div, div_before) = interior_div_max(mg, a)?;
    let sol = EllipticSolver::new(mg, options).solve(&DirichletProblem::homogeneous(div, g.layer_len()))?;
    let mut out = a.clone();
    for n in 0..g.len() {
        let gr = Vector3::new(sol.grad[0][n], sol.grad[1][n], sol.grad[2][n]);
        out.set(n, a.at(n) - gr);
    }
    let (_, div_after) = interior_div_max(mg, &out)?;
    let mut boundary_change: f64 = 0.0;
    for (q, fr) in mg.top_frames().iter().enumerate() {
        let n = mg.top_index(q);
        let gr = Vector3::new(sol.grad[0][n], sol.grad[1][n], sol.grad[2][n]);
        boundary_change = boundary_change.max(gr.cross(&fr.n).norm());
    }
    for n in g.layer_range(0) {
        boundary_change = boundary_change.max(sol.grad[0][n].hypot(sol.grad[1][n]));
    }
    Ok(CleanedPotential {
        a: out,
        div_before,
        div_after,
        boundary_change,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{evaluate_analytic, AnalyticBeltrami};
    use crate::geometry::{DomainMap, Grid, Lattice};
    use std::f64::consts::PI;

    fn slab(n: usize, nz: usize) -> MappedGrid {
        let g = Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, n, n, nz).unwrap();
        MappedGrid::new(&DomainMap::identity(1.0), g).unwrap()
    }

    #[test]
    fn shear_flux_closed_form() {
        let mg = slab(8, 32);
        let u = evaluate_analytic(&AnalyticBeltrami::shear(2.0).unwrap(), &mg).unwrap();
        let f = compute_fluxes(&u, &mg).unwrap();
        assert!((f[0] - PI * (1.0 - 2f64.cos())).abs() < 1e-6);
        assert!((f[1] + PI * 2f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn oracle_reproduces_shear_potential() {
        let mg = slab(8, 32);
        let fam = AnalyticBeltrami::shear(2.0).unwrap();
        let u = evaluate_analytic(&fam, &mg).unwrap();
        let a = spectral_potential_flat(&u, &mg).unwrap();
        for n in 0..u.len() {
            assert!((a.at(n) - fam.potential(&mg.position(n))).norm() < 1e-8);
        }
        let d = mapped_derivatives(&a, &mg).unwrap();
        let r = (0..u.len()).map(|n| (d.curl.at(n) - u.at(n)).norm()).fold(0.0, f64::max);
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn oracle_needs_flat_slab() {
        let g = Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, 8, 8, 8).unwrap();
        let map = DomainMap::graph_lift(&g.lattice, 1.0, &[([1.0, 0.0], 0.1, 0.0)]).unwrap();
        let mg = MappedGrid::new(&map, g).unwrap();
        let u = SampledVectorField::zeros(g);
        assert!(matches!(spectral_potential_flat(&u, &mg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_field_gives_zero_potential() {
        let mg = slab(8, 8);
        let u = SampledVectorField::zeros(*mg.grid());
        let opts = PotentialOptions {
            lattice_sum: LatticeSumOptions {
                truncation: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = assemble_potential(&u, &mg, &opts).unwrap();
        assert_eq!(r.a.max_norm(), 0.0);
        assert_eq!(r.m, [0.0, 0.0]);
        assert_eq!(r.fluxes, [0.0, 0.0]);
    }

    #[test]
    fn cleaning_removes_gradient_part() {
        let mg = slab(16, 16);
        let fam = AnalyticBeltrami::shear(2.0).unwrap();
        // ∇(sin X · Z(Z+1)) vanishes tangentially on both boundaries
        let a = SampledVectorField::from_fn(&mg, |p| {
            let q = p.z * (p.z + 1.0);
            fam.potential(p) + Vector3::new(p.x.cos() * q, 0.0, p.x.sin() * (2.0 * p.z + 1.0))
        });
        let c = divergence_clean(&a, &mg, SolverOptions::default()).unwrap();
        assert!(c.div_before > 0.1);
        assert!(c.div_after < 1e-8, "{}", c.div_after);
        assert!(c.boundary_change < 1e-8);
        let clean = SampledVectorField::from_fn(&mg, |p| fam.potential(p));
        let c2 = divergence_clean(&clean, &mg, SolverOptions::default()).unwrap();
        assert!((0..clean.len()).all(|n| (c2.a.at(n) - clean.at(n)).norm() < 1e-8));
    }
}
