//! Analytic first variations of `J = E − αK − μM` along admissible pairs,
//! and finite-difference estimates along admissible curves.

use serde::Serialize;

use super::transport::{surface_j, transport, transport_inverse, AdmissiblePair};
use super::{evaluate_functionals, PhysicalParams};
use crate::error::{Error, Result};
use crate::fields::{mapped_derivatives, SampledVectorField};
use crate::geometry::{DomainMap, MappedGrid, SampledDisplacement};

/// Top-surface pieces of `−∫ [δA×n]·u dS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryTerms {
    /// `−∫ ((DA δS)×u)·n dS`.
    pub i1: f64,
    /// `−∫ (A×u)·j dS`.
    pub i2: f64,
    /// `−∫ [δA×n]·u dS` evaluated directly.
    pub direct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstVariation {
    pub de: f64,
    pub dk: f64,
    pub dm: f64,
    pub dj: f64,
    /// `2∫(curl curl A − α curl A)·δA dV − ∫[|u|² + 2gz − 2σK_M + μ]δη dS`,
    /// equal to `dj` when `A×n = 0` and `u·n = 0` on the surface.
    pub reduced_dj: f64,
    /// Volume part of `reduced_dj`.
    pub interior: f64,
    /// Surface part of `reduced_dj`.
    pub boundary: f64,
    pub terms: BoundaryTerms,
}

pub fn first_variation(
    a: &SampledVectorField,
    mg: &MappedGrid,
    params: &PhysicalParams,
    pair: &AdmissiblePair,
) -> Result<FirstVariation> {
    params.validate()?;
    a.check_grid(mg)?;
    pair.delta_a.check_grid(mg)?;
    if !pair.check.passes(pair.tolerance) {
        return Err(Error::Contract(format!(
            "variation is not admissible within {:.1e}: {:?}",
            pair.tolerance, pair.check
        )));
    }
    let da = mapped_derivatives(a, mg)?;
    let u = &da.curl;
    let cc = mapped_derivatives(u, mg)?.curl;
    let n = mg.grid().len();
    let mut vol_cc = vec![0.0; n];
    let mut vol_u = vec![0.0; n];
    for q in 0..n {
        let d = pair.delta_a.at(q);
        vol_cc[q] = cc.at(q).dot(&d);
        vol_u[q] = u.at(q).dot(&d);
    }
    let vol_cc = mg.integrate_volume(&vol_cc)?;
    let vol_u = mg.integrate_volume(&vol_u)?;

    let frames = mg.top_frames();
    let l = frames.len();
    let (mut i1, mut i2, mut direct) = (vec![0.0; l], vec![0.0; l], vec![0.0; l]);
    let (mut e_s, mut k_s, mut red) = (vec![0.0; l], vec![0.0; l], vec![0.0; l]);
    for (m, f) in frames.iter().enumerate() {
        let t = mg.top_index(m);
        let (am, um) = (a.at(t), u.at(t));
        let de = pair.delta_eta[m];
        let uu = um.norm_squared();
        let z = f.s.z;
        i1[m] = -(da.jacobian(t) * pair.delta_f.node_value(t)).cross(&um).dot(&f.n);
        i2[m] = -am.cross(&um).dot(&surface_j(mg, &pair.delta_f, m));
        direct[m] = -pair.delta_a.at(t).cross(&f.n).dot(&um);
        e_s[m] = (uu - 2.0 * params.g * z + 2.0 * params.sigma * f.k_m) * de;
        k_s[m] = am.dot(&um) * de;
        red[m] = (uu + 2.0 * params.g * z - 2.0 * params.sigma * f.k_m + params.mu) * de;
    }
    let terms = BoundaryTerms {
        i1: mg.integrate_surface(&i1)?,
        i2: mg.integrate_surface(&i2)?,
        direct: mg.integrate_surface(&direct)?,
    };
    let de = 2.0 * vol_cc + 2.0 * (terms.i1 + terms.i2) + mg.integrate_surface(&e_s)?;
    let dk = 2.0 * vol_u + mg.integrate_surface(&k_s)?;
    let dm = mg.integrate_surface(&pair.delta_eta)?;
    let interior = 2.0 * (vol_cc - params.alpha * vol_u);
    let boundary = -mg.integrate_surface(&red)?;
    Ok(FirstVariation {
        de,
        dk,
        dm,
        dj: de - params.alpha * dk - params.mu * dm,
        reduced_dj: interior + boundary,
        interior,
        boundary,
        terms,
    })
}

/// A one-parameter family `(A(t), Ω(t))` through the current configuration.
#[derive(Debug, Clone)]
pub enum AdmissibleCurve {
    /// `F(t) = F + tδF`, `A(t) = T_{F(t)} T_F⁻¹ A`.
    Transported {
        map: DomainMap,
        grid: crate::geometry::Grid,
        a_hat: SampledVectorField,
        delta_f: SampledDisplacement,
    },
    /// Fixed domain, `A(t) = A + tδA`.
    Linear {
        mg: MappedGrid,
        a: SampledVectorField,
        delta_a: SampledVectorField,
    },
    Constant {
        mg: MappedGrid,
        a: SampledVectorField,
    },
}

impl AdmissibleCurve {
    pub fn transported(map: &DomainMap, mg: &MappedGrid, a: &SampledVectorField, delta_f: &SampledDisplacement) -> Result<Self> {
        Ok(Self::Transported {
            map: map.clone(),
            grid: *mg.grid(),
            a_hat: transport_inverse(mg, a)?,
            delta_f: delta_f.clone(),
        })
    }

    /// Configuration at parameter `t`.
    pub fn at(&self, t: f64) -> Result<(MappedGrid, SampledVectorField)> {
        match self {
            Self::Transported {
                map,
                grid,
                a_hat,
                delta_f,
            } => {
                let mg = MappedGrid::new(&map.perturbed(delta_f.clone(), t), *grid)?;
                let a = transport(&mg, a_hat)?;
                Ok((mg, a))
            }
            Self::Linear { mg, a, delta_a } => Ok((mg.clone(), a.axpy(t, delta_a))),
            Self::Constant { mg, a } => Ok((mg.clone(), a.clone())),
        }
    }

    pub fn functional(&self, t: f64, params: &PhysicalParams) -> Result<f64> {
        let (mg, a) = self.at(t)?;
        Ok(evaluate_functionals(&a, &mg, params)?.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdEstimate {
    /// Richardson-extrapolated `dJ/dt` at `t = 0`.
    pub value: f64,
    /// `|value − central difference at the finer step|`.
    pub error_estimate: f64,
    /// Central differences at the two steps.
    pub central: [f64; 2],
}

/// Central differences at `steps[0]` and `steps[1]`, extrapolated assuming
/// an `h²` error.
pub fn finite_difference_dj(curve: &AdmissibleCurve, params: &PhysicalParams, steps: [f64; 2]) -> Result<FdEstimate> {
    let [h1, h2] = steps;
    if !(h1 > 0.0 && h2 > 0.0 && h1 != h2) {
        return Err(Error::Contract(format!("need two distinct positive steps, got {steps:?}")));
    }
    let d = |h: f64| -> Result<f64> { Ok((curve.functional(h, params)? - curve.functional(-h, params)?) / (2.0 * h)) };
    let (d1, d2) = (d(h1)?, d(h2)?);
    let value = (h1 * h1 * d2 - h2 * h2 * d1) / (h1 * h1 - h2 * h2);
    Ok(FdEstimate {
        value,
        error_estimate: (value - d2).abs(),
        central: [d1, d2],
    })
}

#[cfg(test)]
mod tests {
    use super::super::transport::{make_admissible, random_surface_variation, VariationOptions};
    use super::*;
    use crate::fields::{evaluate_analytic_potential, AnalyticBeltrami};
    use crate::geometry::{Grid, Lattice};
    use std::f64::consts::PI;

    fn slab(n: usize) -> (DomainMap, MappedGrid) {
        let g = Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, n, n, n).unwrap();
        let map = DomainMap::identity(1.0);
        let mg = MappedGrid::new(&map, g).unwrap();
        (map, mg)
    }

    #[test]
    fn zero_potential_cosine_displacement() {
        let (_, mg) = slab(16);
        let a = SampledVectorField::zeros(*mg.grid());
        let eta: Vec<f64> = (0..256).map(|m| (2.0 * PI * mg.grid().s1(m % 16)).cos()).collect();
        let p = make_admissible(&mg, &a, &eta, &VariationOptions::default()).unwrap();
        let params = PhysicalParams::new(1.0, 0.1, 2.0, 0.7).unwrap();
        let v = first_variation(&a, &mg, &params, &p).unwrap();
        assert!(v.dj.abs() < 1e-12 && v.dm.abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn constant_curve_has_zero_derivative() {
        let (_, mg) = slab(8);
        let a = evaluate_analytic_potential(&AnalyticBeltrami::shear(2.0).unwrap(), &mg).unwrap();
        let c = AdmissibleCurve::Constant { mg, a };
        let params = PhysicalParams::new(1.0, 0.1, 2.0, -1.0).unwrap();
        let fd = finite_difference_dj(&c, &params, [1e-3, 5e-4]).unwrap();
        assert_eq!(fd.value, 0.0);
    }

    #[test]
    fn boundary_decomposition_matches_direct_form() {
        let (_, mg) = slab(16);
        let fam = AnalyticBeltrami::modal(&mg.grid().lattice, [1.0, 0.0], 1, 1.0, 1.0).unwrap();
        let a = evaluate_analytic_potential(&fam, &mg).unwrap();
        let eta = random_surface_variation(mg.grid(), 3, 2, 0.1);
        let p = make_admissible(&mg, &a, &eta, &VariationOptions::default()).unwrap();
        let params = PhysicalParams::new(1.0, 0.1, fam.alpha(), -0.5).unwrap();
        let v = first_variation(&a, &mg, &params, &p).unwrap();
        let t = v.terms;
        assert!((t.i1 + t.i2 - t.direct).abs() < 1e-8 * t.direct.abs().max(1.0), "{t:?}");
        assert!((v.dj - v.reduced_dj).abs() < 1e-3 * v.dj.abs().max(1e-3), "{v:?}");
    }

    #[test]
    fn inadmissible_pair_is_rejected() {
        let (_, mg) = slab(8);
        let fam = AnalyticBeltrami::shear(2.0).unwrap();
        let a = evaluate_analytic_potential(&fam, &mg).unwrap();
        // δA tangential on the surface violates the top compatibility
        let mut d = SampledVectorField::zeros(*mg.grid());
        for m in 0..64 {
            d.set(mg.top_index(m), nalgebra::Vector3::x());
        }
        let p = AdmissiblePair::manual_interior(&mg, &a, d).unwrap();
        let params = PhysicalParams::new(1.0, 0.1, 2.0, -1.0).unwrap();
        assert!(first_variation(&a, &mg, &params, &p).is_err());
    }
}
