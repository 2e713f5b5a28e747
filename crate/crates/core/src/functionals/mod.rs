//! Energy, helicity and volume functionals, admissible variations, and the
//! Euler–Lagrange residuals of `J = E − αK − μM`.

mod identities;
mod transport;
mod variation;

pub use identities::{identity_suite, IdentityReport};
pub use transport::{
    make_admissible, random_surface_variation, transport, transport_inverse, AdmissibilityCheck, AdmissiblePair,
    Provenance, VariationOptions,
};
pub use variation::{
    finite_difference_dj, first_variation, AdmissibleCurve, BoundaryTerms, FdEstimate, FirstVariation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{mapped_derivatives, SampledVectorField};
use crate::geometry::MappedGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Gravity.
    pub g: f64,
    /// Surface tension coefficient.
    pub sigma: f64,
    /// Beltrami multiplier.
    pub alpha: f64,
    /// Volume multiplier.
    pub mu: f64,
}

impl PhysicalParams {
    pub fn new(g: f64, sigma: f64, alpha: f64, mu: f64) -> Result<Self> {
        let p = Self { g, sigma, alpha, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.g, self.sigma, self.alpha, self.mu].iter().all(|v| v.is_finite()) {
            return Err(Error::Contract("physical parameters must be finite".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::Contract(format!("surface tension must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    /// `∫ |curl A|² dV`.
    pub kinetic: f64,
    /// `−∫ 2gz dV`.
    pub gravity: f64,
    /// `−σ ∫ dS` over the surface.
    pub surface: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub e: f64,
    pub k: f64,
    pub m: f64,
    pub j: f64,
    pub parts: EnergyParts,
}

pub fn evaluate_functionals(a: &SampledVectorField, mg: &MappedGrid, params: &PhysicalParams) -> Result<FunctionalReport> {
    params.validate()?;
    let u = mapped_derivatives(a, mg)?.curl;
    let n = mg.grid().len();
    let kin: Vec<f64> = (0..n).map(|q| u.at(q).norm_squared()).collect();
    let grav: Vec<f64> = (0..n).map(|q| -2.0 * params.g * mg.position(q).z).collect();
    let hel: Vec<f64> = (0..n).map(|q| a.at(q).dot(&u.at(q))).collect();
    let area = mg.integrate_surface(&vec![1.0; mg.grid().layer_len()])?;
    let parts = EnergyParts {
        kinetic: mg.integrate_volume(&kin)?,
        gravity: mg.integrate_volume(&grav)?,
        surface: -params.sigma * area,
    };
    let e = parts.kinetic + parts.gravity + parts.surface;
    let k = mg.integrate_volume(&hel)?;
    let m = mg.integrate_volume(&vec![1.0; n])?;
    Ok(FunctionalReport {
        e,
        k,
        m,
        j: e - params.alpha * k - params.mu * m,
        parts,
    })
}

#[derive(Debug, Clone)]
pub struct ElResiduals {
    /// `curl curl A − α curl A`.
    pub interior: SampledVectorField,
    /// `|curl A|² + 2gz − 2σK_M + μ` on the surface nodes.
    pub boundary: Vec<f64>,
    pub interior_norm: f64,
    pub boundary_norm: f64,
    /// `max − min` of `½|u|² + gz − 2σK_M` on the surface.
    pub bernoulli_const_dev: f64,
}

pub fn el_residuals(a: &SampledVectorField, mg: &MappedGrid, params: &PhysicalParams) -> Result<ElResiduals> {
    params.validate()?;
    let u = mapped_derivatives(a, mg)?.curl;
    let cc = mapped_derivatives(&u, mg)?.curl;
    let interior = cc.axpy(-params.alpha, &u);
    let frames = mg.top_frames();
    let mut boundary = Vec::with_capacity(frames.len());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (q, f) in frames.iter().enumerate() {
        let uu = u.at(mg.top_index(q)).norm_squared();
        let z = f.s.z;
        boundary.push(uu + 2.0 * params.g * z - 2.0 * params.sigma * f.k_m + params.mu);
        let b = 0.5 * uu + params.g * z - 2.0 * params.sigma * f.k_m;
        lo = lo.min(b);
        hi = hi.max(b);
    }
    Ok(ElResiduals {
        interior_norm: interior.max_norm(),
        boundary_norm: boundary.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        bernoulli_const_dev: hi - lo,
        interior,
        boundary,
    })
}
