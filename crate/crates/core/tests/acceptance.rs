//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use beltrami::fields::{evaluate_analytic, mapped_derivatives, AnalyticBeltrami, SampledVectorField};
use beltrami::functionals::{evaluate_functionals, identity_suite, PhysicalParams};
use beltrami::geometry::{DomainMap, Grid, Lattice, MappedGrid};
use beltrami::potential::{assemble_potential, spectral_potential_flat, LatticeSumOptions, PotentialOptions};
use nalgebra::Vector3;
use serde_json::Value;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn cli(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, Value, Duration) {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_beltrami"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    let elapsed = t.elapsed();
    let text = std::fs::read_to_string(out.join(format!("{cmd}.json"))).unwrap();
    (status.status.code().unwrap(), serde_json::from_str(&text).unwrap(), elapsed)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

const SHEAR_FIELD: &str = "[field]\nfamily = \"shear\"\nalpha = 2.0\n";
const MODAL_FIELD: &str = "[field]\nfamily = \"modal\"\nk = [1.0, 0.0]\nm = 1\n";

fn grid_toml(n: usize, nz: usize) -> String {
    format!("[grid]\nnx = {n}\nny = {n}\nnz = {nz}\n")
}

fn max_residual(r: &Value) -> f64 {
    let r = &r["result"]["residuals"];
    ["curl_minus_alpha_u", "div", "top_normal", "bottom_normal"]
        .iter()
        .map(|k| f(&r[*k]))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_beltrami_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for (name, field) in [("shear", SHEAR_FIELD), ("modal", MODAL_FIELD)] {
        let c32 = write(dir.path(), &format!("{name}32.toml"), &(grid_toml(32, 32) + field));
        let c64 = write(dir.path(), &format!("{name}64.toml"), &(grid_toml(32, 64) + field));
        let (code, r32, time) = cli("verify-beltrami", &c32, &dir.path().join(format!("{name}32")), &[]);
        let (_, r64, _) = cli("verify-beltrami", &c64, &dir.path().join(format!("{name}64")), &[]);
        let (e32, e64) = (max_residual(&r32), max_residual(&r64));
        let shrink = e32 / e64;
        ok &= code == 0 && e32 < 1e-5 && shrink >= 4.0 && time.as_secs_f64() < 10.0;
        detail += &format!(
            "[{name}: exit {code}, max residual {e32:.2e} at 32^3, {e64:.2e} at NZ=64 (x{shrink:.1}), {:.2}s] ",
            time.as_secs_f64()
        );
    }
    report(1, ok, detail);
}

#[test]
fn criterion_2_potential_construction() {
    let dir = tempfile::tempdir().unwrap();
    let fine = write(dir.path(), "fine.toml", &(grid_toml(16, 16) + SHEAR_FIELD + "[potential]\ntruncation = 8\n"));
    let coarse = write(dir.path(), "coarse.toml", &(grid_toml(8, 8) + SHEAR_FIELD + "[potential]\ntruncation = 4\n"));
    let (code, r, time) = cli("construct-potential", &fine, &dir.path().join("fine"), &["--threads", "1"]);
    let (_, rc, _) = cli("construct-potential", &coarse, &dir.path().join("coarse"), &["--threads", "1"]);
    let d = &r["result"]["diagnostics"];
    let dc = &rc["result"]["diagnostics"];
    let a1 = PI * (1.0 - 2f64.cos());
    let m = &r["result"]["m"];
    let gap = (a1 - f(&m[1]) * 2.0 * PI).abs() / a1;
    let (curl, top, bottom) = (f(&d["curl_error"]), f(&d["top_bc"]), f(&d["bottom_bc"]));
    let flux = f(&r["result"]["fluxes"][0]);
    let shrinks = curl < f(&dc["curl_error"])
        && top < f(&dc["top_bc"])
        && bottom < f(&dc["bottom_bc"])
        && f(&d["flux_gap"][0]) < f(&dc["flux_gap"][0]);
    let ok = code == 0
        && curl < 5e-2
        && top < 1e-2
        && bottom < 1e-2
        && gap < 1e-2
        && (flux - a1).abs() < 1e-2 * a1
        && shrinks
        && time.as_secs_f64() < 300.0;
    report(
        2,
        ok,
        format!(
            "(curl {curl:.2e}, top {top:.2e}, bottom {bottom:.2e}, flux gap {gap:.2e}, a1 {flux:.4} vs {a1:.4}, \
             coarse curl {:.2e}, shrinks {shrinks}, {:.1}s)",
            f(&dc["curl_error"]),
            time.as_secs_f64()
        ),
    );
}

fn shear_slab(n: usize) -> (MappedGrid, SampledVectorField) {
    let g = Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, n, n, n).unwrap();
    let mg = MappedGrid::new(&DomainMap::identity(1.0), g).unwrap();
    let u = evaluate_analytic(&AnalyticBeltrami::shear(2.0).unwrap(), &mg).unwrap();
    (mg, u)
}

fn constructed(mg: &MappedGrid, u: &SampledVectorField) -> SampledVectorField {
    let opts = PotentialOptions {
        lattice_sum: LatticeSumOptions {
            truncation: 8,
            ..Default::default()
        },
        ..Default::default()
    };
    assemble_potential(u, mg, &opts).unwrap().a
}

#[test]
fn criterion_3_oracle_cross_check() {
    let (mg, u) = shear_slab(16);
    let a = constructed(&mg, &u);
    let oracle = spectral_potential_flat(&u, &mg).unwrap();
    let rel = mapped_derivatives(&a.axpy(-1.0, &oracle), &mg).unwrap().curl.max_norm() / u.max_norm();
    report(3, rel < 5e-2, format!("(|curl(A - A_oracle)| / |u| = {rel:.2e})"));
}

#[test]
fn criterion_4_functional_values() {
    let (mg, u) = shear_slab(16);
    let a = constructed(&mg, &u);
    let p = PhysicalParams::new(1.0, 0.1, 2.0, 0.0).unwrap();
    let r = evaluate_functionals(&a, &mg, &p).unwrap();
    let c = 4.0 * PI * PI;
    let checks = [
        ("kinetic", r.parts.kinetic, c),
        ("gravity", r.parts.gravity, c),
        ("surface", r.parts.surface, -0.1 * c),
        ("M", r.m, c),
        ("K", r.k, 2.0 * PI * PI),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, got, want) in checks {
        let rel = (got - want).abs() / want.abs();
        ok &= rel < 1e-2;
        detail += &format!("{name} {got:.6} vs {want:.6} (rel {rel:.1e}); ");
    }
    // value fixed by the boundary conditions, for reference
    let k_bc = c * (1.0 - 2f64.sin() / 2.0) / 2.0;
    detail += &format!("K of any potential with A x n = 0 on top: {k_bc:.6}");
    report(4, ok, detail);
}

fn variational(dir: &Path, name: &str, field: &str, mu: f64) -> (i32, Value, Duration) {
    let cfg = write(
        dir,
        &format!("{name}.toml"),
        &(grid_toml(32, 32) + field + &format!("[params]\ng = 1.0\nsigma = 0.1\nmu = {mu}\n[variational]\nnum_variations = 10\n")),
    );
    cli("check-variational", &cfg, &dir.join(name), &["--seed", "2024"])
}

#[test]
fn criterion_5_critical_direction() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, time) = variational(dir.path(), "shear", SHEAR_FIELD, -1.0);
    let vars = r["result"]["variations"].as_array().unwrap();
    let max_dj = f(&r["result"]["max_dj_over_eta"]);
    let max_gap = vars.iter().map(|v| f(&v["gap_l1"])).fold(0.0, f64::max);
    let ok = code == 0 && vars.len() == 10 && max_dj < 1e-3 && max_gap < 1e-3 && time.as_secs_f64() < 120.0;
    report(
        5,
        ok,
        format!(
            "(max |dJ|/|eta|_1 {max_dj:.2e}, max FD gap/|eta|_1 {max_gap:.2e}, verdict {}, {:.1}s)",
            r["result"]["verdict"],
            time.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_6_noncritical_detection() {
    let dir = tempfile::tempdir().unwrap();
    let (_, r, _) = variational(dir.path(), "modal", MODAL_FIELD, -0.5);
    let boundary = f(&r["result"]["boundary_residual"]);
    let vars = r["result"]["variations"].as_array().unwrap();
    let (mut reduced_gap, mut fd_gap): (f64, f64) = (0.0, 0.0);
    for v in vars {
        let dj = f(&v["analytic_dj"]);
        reduced_gap = reduced_gap.max((dj - f(&v["reduced_dj"])).abs() / dj.abs());
        fd_gap = fd_gap.max(f(&v["gap_relative"]));
    }
    let ok = boundary > 0.1 && !vars.is_empty() && reduced_gap < 1e-3 && fd_gap < 1e-3 && r["result"]["verdict"] == "not critical";
    report(
        6,
        ok,
        format!("(boundary residual {boundary:.3}, reduced-form gap {reduced_gap:.2e}, FD gap {fd_gap:.2e} over {} variations)", vars.len()),
    );
}

#[test]
fn criterion_7_identity_suite() {
    let lat = Lattice::square(2.0 * PI).unwrap();
    let g = Grid::new(lat, 1.0, 32, 32, 16).unwrap();
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for (seed, modes) in [
        (1, vec![([1.0, 0.0], 0.1, 0.0)]),
        (2, vec![([1.0, 0.0], 0.1, 0.0), ([1.0, 1.0], 0.0, 0.05), ([0.0, 2.0], 0.03, 0.02)]),
    ] {
        let map = DomainMap::graph_lift(&lat, 1.0, &modes).unwrap();
        let r = identity_suite(&map, &g, seed).unwrap();
        worst = worst.max(r.worst());
        detail += &format!("{r:?} ");
    }
    report(7, worst < 1e-6, format!("(worst {worst:.2e}) {detail}"));
}

#[test]
fn criterion_8_mean_curvature() {
    let lat = Lattice::square(2.0 * PI).unwrap();
    let g = Grid::new(lat, 1.0, 64, 64, 8).unwrap();
    let map = DomainMap::graph_lift(&lat, 1.0, &[([1.0, 0.0], 0.1, 0.0)]).unwrap();
    let mg = MappedGrid::new(&map, g).unwrap();
    let k0 = mg.top_frames()[0].k_m;
    // the unit normal of the graph, extended to the whole domain
    let normal = SampledVectorField::from_fn(&mg, |x| {
        let slope = -0.1 * x.x.sin();
        Vector3::new(-slope, 0.0, 1.0) / (1.0 + slope * slope).sqrt()
    });
    let div = mapped_derivatives(&normal, &mg).unwrap().div;
    let from_div = -0.5 * div[mg.top_index(0)];
    let ok = (k0 + 0.05).abs() < 1e-6 && (from_div - k0).abs() < 1e-6;
    report(8, ok, format!("(K_M(0) = {k0:.9}, -div n / 2 = {from_div:.9})"));
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        &(grid_toml(16, 16) + SHEAR_FIELD + "[params]\nmu = -1.0\n[variational]\nnum_variations = 4\n"),
    );
    let mut ok = true;
    let mut reports = Vec::new();
    for (i, threads) in ["1", "2", "0", "1"].iter().enumerate() {
        for cmd in ["verify-beltrami", "check-variational", "construct-potential"] {
            let out = dir.path().join(format!("run{i}"));
            let (code, _, _) = cli(cmd, &cfg, &out, &["--seed", "99", "--threads", threads]);
            ok &= code == 0;
            reports.push((cmd, std::fs::read(out.join(format!("{cmd}.json"))).unwrap()));
        }
    }
    let first = &reports[..3];
    let identical = reports.chunks(3).all(|run| run.iter().zip(first).all(|(a, b)| a.1 == b.1));
    ok &= identical;
    report(9, ok, format!("(4 runs x 3 commands with --threads 1, 2, 0, 1: identical {identical})"));
}
