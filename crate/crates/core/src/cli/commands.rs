use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

use super::dump::{write_bwf1, write_csv};
use super::scenario::{Scenario, Tolerances};
use super::{CliError, Command, Common};
use crate::fields::{beltrami_residuals, BeltramiResiduals, SampledVectorField};
use crate::functionals::{
    el_residuals, evaluate_functionals, finite_difference_dj, first_variation, make_admissible,
    random_surface_variation, AdmissibleCurve, FunctionalReport,
};
use crate::geometry::MappedGrid;
use crate::potential::{assemble_potential, PotentialDiagnostics, PotentialStatus, TailEstimate};

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'static str,
    scenario: &'a Scenario,
    seed: u64,
    tolerance_scale: f64,
    tolerances: Tolerances,
    result: T,
    pass: bool,
}

struct Context {
    scenario: Scenario,
    out: PathBuf,
    tol: Tolerances,
    common: Common,
}

impl Context {
    fn new(common: Common) -> Result<Self, CliError> {
        if !(common.tolerance_scale.is_finite() && common.tolerance_scale > 0.0) {
            return Err(CliError::Config("tolerance scale must be positive".into()));
        }
        let scenario = Scenario::load(&common.config)?;
        let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.output));
        std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        let tol = scenario.tolerances.scaled(common.tolerance_scale);
        Ok(Self {
            scenario,
            out,
            tol,
            common,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_report<T: Serialize>(&self, command: &'static str, result: T, pass: bool) -> Result<bool, CliError> {
        let r = Report {
            command,
            scenario: &self.scenario,
            seed: self.common.seed,
            tolerance_scale: self.common.tolerance_scale,
            tolerances: self.tol,
            result,
            pass,
        };
        let mut text = serde_json::to_string_pretty(&r).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        let path = self.path(&format!("{command}.json"));
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        println!("{command}: {} ({})", if pass { "pass" } else { "FAIL" }, path.display());
        Ok(pass)
    }
}

pub(super) fn dispatch(command: Command) -> Result<bool, CliError> {
    let (common, job): (Common, Box<dyn FnOnce(&Context) -> Result<bool, CliError> + Send>) = match command {
        Command::VerifyBeltrami(c) => (c, Box::new(verify_beltrami)),
        Command::ConstructPotential(c) => (c, Box::new(construct_potential)),
        Command::CheckVariational { common, num_variations } => {
            (common, Box::new(move |ctx: &Context| check_variational(ctx, num_variations)))
        }
        Command::DumpFields { common, csv } => (common, Box::new(move |ctx: &Context| dump_fields(ctx, csv))),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let ctx = Context::new(common)?;
    pool.install(|| job(&ctx))
}

#[derive(Serialize)]
struct GridInfo {
    nx: usize,
    ny: usize,
    nz: usize,
    depth: f64,
}

fn grid_info(mg: &MappedGrid) -> GridInfo {
    let g = mg.grid();
    GridInfo {
        nx: g.nx,
        ny: g.ny,
        nz: g.nz,
        depth: g.depth,
    }
}

#[derive(Serialize)]
struct BeltramiResult {
    grid: GridInfo,
    alpha: f64,
    velocity_max: f64,
    residuals: BeltramiResiduals,
}

fn verify_beltrami(ctx: &Context) -> Result<bool, CliError> {
    let s = &ctx.scenario;
    let mg = s.mapped_grid()?;
    let u = s.velocity(&mg)?;
    let alpha = s.params.alpha.unwrap_or(0.0);
    let r = beltrami_residuals(&u, &mg, alpha)?;
    let t = ctx.tol.residual;
    let pass = [r.curl_minus_alpha_u, r.div, r.top_normal, r.bottom_normal]
        .iter()
        .all(|v| *v <= t);
    ctx.write_report(
        "verify-beltrami",
        BeltramiResult {
            grid: grid_info(&mg),
            alpha,
            velocity_max: u.max_norm(),
            residuals: r,
        },
        pass,
    )
}

#[derive(Serialize)]
struct PotentialReport {
    grid: GridInfo,
    dump: String,
    m: [f64; 2],
    fluxes: [f64; 2],
    flux_identity_gap: [f64; 2],
    top_constants: [f64; 2],
    bottom_constants: [f64; 2],
    tail: TailEstimate,
    status: PotentialStatus,
    diagnostics: PotentialDiagnostics,
}

fn construct_potential(ctx: &Context) -> Result<bool, CliError> {
    let s = &ctx.scenario;
    let mg = s.mapped_grid()?;
    let u = s.velocity(&mg)?;
    let r = assemble_potential(&u, &mg, &s.potential_options(&ctx.tol))?;
    let dump = "potential.bwf";
    write_bwf1(&ctx.path(dump), &r.a)?;
    let d = &r.diagnostics;
    let t = &ctx.tol;
    let pass = d.curl_error <= t.potential_curl
        && d.top_bc <= t.potential_bc
        && d.bottom_bc <= t.potential_bc
        && d.flux_gap.iter().all(|g| *g <= t.flux_gap);
    ctx.write_report(
        "construct-potential",
        PotentialReport {
            grid: grid_info(&mg),
            dump: dump.into(),
            m: r.m,
            fluxes: r.fluxes,
            flux_identity_gap: d.flux_gap,
            top_constants: r.top_constants,
            bottom_constants: r.bottom_constants,
            tail: r.tail,
            status: r.status,
            diagnostics: r.diagnostics.clone(),
        },
        pass,
    )
}

#[derive(Serialize)]
struct VariationEntry {
    index: usize,
    seed: u64,
    analytic_dj: f64,
    reduced_dj: f64,
    fd_dj: f64,
    fd_error_estimate: f64,
    eta_l1: f64,
    /// `|δJ − FD|` over `‖δη‖₁`.
    gap_l1: f64,
    /// `|δJ − FD|` over `|δJ|`.
    gap_relative: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VariationalReport {
    grid: GridInfo,
    potential_source: &'static str,
    functionals: FunctionalReport,
    interior_residual: f64,
    boundary_residual: f64,
    bernoulli_const_dev: f64,
    max_dj_over_eta: f64,
    verdict: &'static str,
    variations: Vec<VariationEntry>,
}

fn potential_for(ctx: &Context, mg: &MappedGrid, u: &SampledVectorField) -> Result<(SampledVectorField, &'static str), CliError> {
    if let Some(a) = ctx.scenario.analytic_potential(mg) {
        return Ok((a, "closed-form"));
    }
    let r = assemble_potential(u, mg, &ctx.scenario.potential_options(&ctx.tol))?;
    Ok((r.a, "constructed"))
}

fn check_variational(ctx: &Context, num: Option<usize>) -> Result<bool, CliError> {
    let s = &ctx.scenario;
    let mg = s.mapped_grid()?;
    let map = s.build_map()?;
    let u = s.velocity(&mg)?;
    let params = s.physical_params()?;
    let (a, source) = potential_for(ctx, &mg, &u)?;
    let functionals = evaluate_functionals(&a, &mg, &params)?;
    let el = el_residuals(&a, &mg, &params)?;
    let n = num.unwrap_or(s.variational.num_variations);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.common.seed);
    let seeds: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
    let v = &s.variational;
    let opts = s.variation_options();
    let tol = ctx.tol.variation_gap;
    let entries = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| -> Result<VariationEntry, CliError> {
            let eta = random_surface_variation(mg.grid(), seed, v.max_mode, v.amplitude);
            let pair = make_admissible(&mg, &a, &eta, &opts)?;
            let fv = first_variation(&a, &mg, &params, &pair)?;
            let curve = AdmissibleCurve::transported(&map, &mg, &a, &pair.delta_f)?;
            let fd = finite_difference_dj(&curve, &params, v.steps)?;
            let abs: Vec<f64> = pair.delta_eta.iter().map(|x| x.abs()).collect();
            let eta_l1 = mg.integrate_surface(&abs)?;
            let gap = (fv.dj - fd.value).abs();
            let gap_l1 = gap / eta_l1.max(f64::MIN_POSITIVE);
            let gap_relative = gap / fv.dj.abs().max(f64::MIN_POSITIVE);
            Ok(VariationEntry {
                index,
                seed,
                analytic_dj: fv.dj,
                reduced_dj: fv.reduced_dj,
                fd_dj: fd.value,
                fd_error_estimate: fd.error_estimate,
                eta_l1,
                gap_l1,
                gap_relative,
                pass: gap_l1 <= tol || gap_relative <= tol,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_dj_over_eta = entries
        .iter()
        .map(|e| e.analytic_dj.abs() / e.eta_l1.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let c = ctx.tol.critical;
    let critical = max_dj_over_eta <= c && el.interior_norm <= c && el.boundary_norm <= c;
    let pass = entries.iter().all(|e| e.pass);
    ctx.write_report(
        "check-variational",
        VariationalReport {
            grid: grid_info(&mg),
            potential_source: source,
            functionals,
            interior_residual: el.interior_norm,
            boundary_residual: el.boundary_norm,
            bernoulli_const_dev: el.bernoulli_const_dev,
            max_dj_over_eta,
            verdict: if critical { "critical" } else { "not critical" },
            variations: entries,
        },
        pass,
    )
}

#[derive(Serialize)]
struct DumpReport {
    grid: GridInfo,
    files: Vec<String>,
}

fn dump_fields(ctx: &Context, csv: bool) -> Result<bool, CliError> {
    let s = &ctx.scenario;
    let mg = s.mapped_grid()?;
    let u = s.velocity(&mg)?;
    let mut files = vec!["velocity.bwf".to_string()];
    write_bwf1(&ctx.path(&files[0]), &u)?;
    if let Some(a) = s.analytic_potential(&mg) {
        files.push("potential.bwf".into());
        write_bwf1(&ctx.path("potential.bwf"), &a)?;
    }
    if csv {
        files.push("velocity.csv".into());
        write_csv(&ctx.path("velocity.csv"), &mg, &u)?;
    }
    ctx.write_report("dump-fields", DumpReport { grid: grid_info(&mg), files }, true)
}
