//! TOML scenario files: lattice, map, field, physical parameters, grid and
//! tolerances, with every default materialised after loading.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use super::dump::read_bwf1;
use super::CliError;
use crate::fields::{evaluate_analytic, evaluate_analytic_potential, AnalyticBeltrami, SampledVectorField};
use crate::functionals::{PhysicalParams, VariationOptions};
use crate::geometry::{DomainMap, Grid, Lattice, MappedGrid};
use crate::potential::{LatticeSumOptions, PotentialOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub lattice: LatticeSpec,
    pub depth: f64,
    pub grid: GridSpec,
    pub map: MapSpec,
    pub field: FieldSpec,
    pub params: ParamsSpec,
    pub potential: PotentialSpec,
    pub variational: VariationalSpec,
    pub tolerances: Tolerances,
    /// Output directory; not part of the reports.
    #[serde(skip_serializing)]
    pub output: String,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::default(),
            depth: 1.0,
            grid: GridSpec::default(),
            map: MapSpec::Identity,
            field: FieldSpec::Zero,
            params: ParamsSpec::default(),
            potential: PotentialSpec::default(),
            variational: VariationalSpec::default(),
            tolerances: Tolerances::default(),
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub lambda1: [f64; 2],
    pub lambda2: [f64; 2],
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            lambda1: [2.0 * PI, 0.0],
            lambda2: [0.0, 2.0 * PI],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Number of vertical intervals (even).
    pub nz: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 16, ny: 16, nz: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphMode {
    pub k: [f64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearMode {
    pub k: [f64; 2],
    #[serde(default)]
    pub cos: [f64; 2],
    #[serde(default)]
    pub sin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSpec {
    Identity,
    GraphLift { modes: Vec<GraphMode> },
    Shear { modes: Vec<ShearMode> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FieldSpec {
    Zero,
    Constant { value: [f64; 3] },
    Shear { alpha: f64 },
    Modal {
        k: [f64; 2],
        m: u32,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// A `BWF1` dump on the scenario grid.
    File { path: String },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub g: f64,
    pub sigma: f64,
    /// Defaults to the field family's multiplier, or 0.
    pub alpha: Option<f64>,
    pub mu: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            g: 1.0,
            sigma: 0.1,
            alpha: None,
            mu: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSpec {
    pub truncation: usize,
    pub refinement: usize,
    pub tail_correction: bool,
    pub local_correction: bool,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        let o = LatticeSumOptions::default();
        Self {
            truncation: o.truncation,
            refinement: o.refinement,
            tail_correction: o.tail_correction,
            local_correction: o.local_correction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariationalSpec {
    pub num_variations: usize,
    /// Highest Fourier index of the random surface displacements.
    pub max_mode: i64,
    /// `max |δη|` of each displacement.
    pub amplitude: f64,
    pub mollification: f64,
    pub steps: [f64; 2],
}

impl Default for VariationalSpec {
    fn default() -> Self {
        Self {
            num_variations: 10,
            max_mode: 3,
            amplitude: 1.0,
            mollification: 0.0,
            steps: [1e-3, 5e-4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Beltrami residuals (absolute).
    pub residual: f64,
    pub potential_curl: f64,
    pub potential_bc: f64,
    pub flux_gap: f64,
    /// Analytic vs finite-difference `dJ/dt`.
    pub variation_gap: f64,
    /// `|δJ| / ‖δη‖₁` and residual norms below which a configuration is critical.
    pub critical: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-5,
            potential_curl: 5e-2,
            potential_bc: 1e-2,
            flux_gap: 1e-2,
            variation_gap: 1e-3,
            critical: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            residual: self.residual * s,
            potential_curl: self.potential_curl * s,
            potential_bc: self.potential_bc * s,
            flux_gap: self.flux_gap * s,
            variation_gap: self.variation_gap * s,
            critical: self.critical * s,
        }
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite")))
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses, validates and fills `params.alpha`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        if s.params.alpha.is_none() {
            s.params.alpha = Some(s.family().map_or(0.0, |f| f.alpha()));
        }
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        finite("lattice", &[self.lattice.lambda1, self.lattice.lambda2].concat())?;
        finite("depth", &[self.depth])?;
        if !(self.depth > 0.0) {
            return Err(CliError::Config(format!("depth must be positive, got {}", self.depth)));
        }
        let p = &self.params;
        finite("params", &[p.g, p.sigma, p.mu, p.alpha.unwrap_or(0.0)])?;
        if !(p.sigma > 0.0) {
            return Err(CliError::Config(format!("sigma must be positive, got {}", p.sigma)));
        }
        let t = &self.tolerances;
        finite(
            "tolerances",
            &[t.residual, t.potential_curl, t.potential_bc, t.flux_gap, t.variation_gap, t.critical],
        )?;
        let v = &self.variational;
        finite("variational", &[v.amplitude, v.mollification, v.steps[0], v.steps[1]])?;
        match &self.map {
            MapSpec::Identity => {}
            MapSpec::GraphLift { modes } => {
                for m in modes {
                    finite("map modes", &[m.k[0], m.k[1], m.cos, m.sin])?;
                }
            }
            MapSpec::Shear { modes } => {
                for m in modes {
                    finite("map modes", &[m.k[0], m.k[1], m.cos[0], m.cos[1], m.sin[0], m.sin[1]])?;
                }
            }
        }
        match &self.field {
            FieldSpec::Constant { value } => finite("field value", value)?,
            FieldSpec::Shear { alpha } => finite("field alpha", &[*alpha])?,
            FieldSpec::Modal { k, amplitude, .. } => finite("field", &[k[0], k[1], *amplitude])?,
            FieldSpec::Zero | FieldSpec::File { .. } => {}
        }
        self.build_grid()?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid, CliError> {
        let lat = Lattice::new(self.lattice.lambda1, self.lattice.lambda2).map_err(|e| CliError::Config(e.to_string()))?;
        Grid::new(lat, self.depth, self.grid.nx, self.grid.ny, self.grid.nz).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn build_map(&self) -> Result<DomainMap, CliError> {
        let lat = self.build_grid()?.lattice;
        let map = match &self.map {
            MapSpec::Identity => Ok(DomainMap::identity(self.depth)),
            MapSpec::GraphLift { modes } => DomainMap::graph_lift(
                &lat,
                self.depth,
                &modes.iter().map(|m| (m.k, m.cos, m.sin)).collect::<Vec<_>>(),
            ),
            MapSpec::Shear { modes } => DomainMap::shear(
                &lat,
                self.depth,
                &modes.iter().map(|m| (m.k, m.cos, m.sin)).collect::<Vec<_>>(),
            ),
        };
        map.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn mapped_grid(&self) -> Result<MappedGrid, CliError> {
        Ok(MappedGrid::new(&self.build_map()?, self.build_grid()?)?)
    }

    /// The analytic family behind the field spec, if any.
    pub fn family(&self) -> Option<AnalyticBeltrami> {
        let lat = Lattice::new(self.lattice.lambda1, self.lattice.lambda2).ok()?;
        match self.field {
            FieldSpec::Shear { alpha } => AnalyticBeltrami::shear(alpha).ok(),
            FieldSpec::Modal { k, m, amplitude } => AnalyticBeltrami::modal(&lat, k, m, self.depth, amplitude).ok(),
            _ => None,
        }
    }

    pub fn physical_params(&self) -> Result<PhysicalParams, CliError> {
        let p = &self.params;
        PhysicalParams::new(p.g, p.sigma, p.alpha.unwrap_or(0.0), p.mu).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn potential_options(&self, tol: &Tolerances) -> PotentialOptions {
        let p = &self.potential;
        PotentialOptions {
            lattice_sum: LatticeSumOptions {
                truncation: p.truncation,
                refinement: p.refinement,
                tail_correction: p.tail_correction,
                local_correction: p.local_correction,
            },
            tol_curl: tol.potential_curl,
            tol_bc: tol.potential_bc,
            tol_flux: tol.flux_gap,
            ..Default::default()
        }
    }

    pub fn variation_options(&self) -> VariationOptions {
        VariationOptions {
            mollification: self.variational.mollification,
            ..Default::default()
        }
    }

    /// Samples the velocity field on `mg`.
    pub fn velocity(&self, mg: &MappedGrid) -> Result<SampledVectorField, CliError> {
        let g = *mg.grid();
        match &self.field {
            FieldSpec::Zero => Ok(SampledVectorField::zeros(g)),
            FieldSpec::Constant { value } => {
                Ok(SampledVectorField::from_fn(mg, |_| nalgebra::Vector3::new(value[0], value[1], value[2])))
            }
            FieldSpec::File { path } => {
                let (file_grid, field) = read_bwf1(Path::new(path))?;
                if file_grid.nx != g.nx || file_grid.ny != g.ny || file_grid.nz != g.nz {
                    return Err(CliError::Config(format!(
                        "{path}: field is {}x{}x{}, scenario grid is {}x{}x{}",
                        file_grid.nx, file_grid.ny, file_grid.nz, g.nx, g.ny, g.nz
                    )));
                }
                Ok(SampledVectorField::new(g, field.comps)?)
            }
            FieldSpec::Shear { .. } | FieldSpec::Modal { .. } => {
                let fam = self
                    .family()
                    .ok_or_else(|| CliError::Config("invalid analytic field parameters".into()))?;
                evaluate_analytic(&fam, mg).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// Closed-form potential where one exists on this map.
    pub fn analytic_potential(&self, mg: &MappedGrid) -> Option<SampledVectorField> {
        if matches!(self.field, FieldSpec::Zero) {
            return Some(SampledVectorField::zeros(*mg.grid()));
        }
        evaluate_analytic_potential(&self.family()?, mg).ok()
    }
}
