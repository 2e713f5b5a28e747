//! Pointwise identities the boundary reduction relies on, checked on sampled
//! fields over a mapped grid.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use super::transport::transport;
use crate::error::Result;
use crate::fields::{mapped_derivatives, SampledVectorField};
use crate::geometry::{DomainMap, Grid, MappedGrid};

/// Largest relative pointwise defect of each identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `div(A×B) = curl A·B − A·curl B`.
    pub div_cross: f64,
    /// `j_|| = −∇_||δη + (δS·n_X)a + (δS·n_Y)b`.
    pub j_parallel: f64,
    /// `(DA v)×n = −A×(Dn v)` for `A×n = 0` and `v ∈ {S_X, S_Y}`.
    pub tangential_derivative: f64,
    /// `δη_X = δS_X·n + δS·n_X` (and the `Y` analogue).
    pub eta_derivative: f64,
    /// `a·S_X = b·S_Y = 1`, `a·S_Y = b·S_X = a·n = b·n = 0`.
    pub duality: f64,
    /// `n_X·S_Y = n_Y·S_X`.
    pub shape_symmetry: f64,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        [
            self.div_cross,
            self.j_parallel,
            self.tangential_derivative,
            self.eta_derivative,
            self.duality,
            self.shape_symmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst() <= tolerance
    }
}

/// Random band-limited vector function of `(s₁, s₂, Z)`: modes up to 2,
/// quadratic in `Z`.
struct RandomField {
    terms: Vec<(i64, i64, [f64; 3], [f64; 3], [f64; 3])>,
}

impl RandomField {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut terms = Vec::new();
        for k1 in -2..=2i64 {
            for k2 in 0..=2i64 {
                let mut c = || [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
                terms.push((k1, k2, c(), c(), c()));
            }
        }
        Self { terms }
    }

    fn eval(&self, s: [f64; 2], z: f64) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        for &(k1, k2, c, sn, q) in &self.terms {
            let ph = 2.0 * PI * (k1 as f64 * s[0] + k2 as f64 * s[1]);
            let (sp, cp) = ph.sin_cos();
            for i in 0..3 {
                v[i] += (c[i] * cp + sn[i] * sp) * (1.0 + q[i] * z * (1.0 + 0.5 * z)) / 15.0;
            }
        }
        v
    }
}

fn sample(grid: &Grid, f: impl Fn([f64; 2], f64) -> Vector3<f64>) -> SampledVectorField {
    let mut out = SampledVectorField::zeros(*grid);
    for n in 0..grid.len() {
        let (i, j, k) = grid.ijk(n);
        out.set(n, f([grid.s1(i), grid.s2(j)], grid.z(k)));
    }
    out
}

fn scaled(defect: f64, scale: f64) -> f64 {
    defect / scale.max(1.0)
}

pub fn identity_suite(map: &DomainMap, grid: &Grid, seed: u64) -> Result<IdentityReport> {
    let mg = MappedGrid::new(map, *grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fa, fb, fs) = (RandomField::new(&mut rng), RandomField::new(&mut rng), RandomField::new(&mut rng));

    // (i) on the whole grid
    let a = sample(grid, |s, z| fa.eval(s, z));
    let b = sample(grid, |s, z| fb.eval(s, z));
    let mut axb = SampledVectorField::zeros(*grid);
    for n in 0..grid.len() {
        axb.set(n, a.at(n).cross(&b.at(n)));
    }
    let div = mapped_derivatives(&axb, &mg)?.div;
    let (ca, cb) = (mapped_derivatives(&a, &mg)?.curl, mapped_derivatives(&b, &mg)?.curl);
    let (mut defect, mut scale) = (0.0f64, 0.0f64);
    for n in 0..grid.len() {
        let (l, r1, r2) = (div[n], ca.at(n).dot(&b.at(n)), a.at(n).dot(&cb.at(n)));
        defect = defect.max((l - (r1 - r2)).abs());
        scale = scale.max(r1.abs()).max(r2.abs());
    }
    let div_cross = scaled(defect, scale);

    // surface displacement δS and δη = δS·n
    let frames = mg.top_frames();
    let l = grid.layer_len();
    let ds: Vec<Vector3<f64>> = (0..l).map(|m| fs.eval([grid.s1(m % grid.nx), grid.s2(m / grid.nx)], 0.0)).collect();
    let comp = |c: usize| -> Vec<f64> { ds.iter().map(|v| v[c]).collect() };
    let dds: Vec<[Vec<f64>; 2]> = (0..3).map(|c| mg.layer_xy_derivatives(&comp(c))).collect();
    let ds_x = |m: usize| Vector3::new(dds[0][0][m], dds[1][0][m], dds[2][0][m]);
    let ds_y = |m: usize| Vector3::new(dds[0][1][m], dds[1][1][m], dds[2][1][m]);
    let eta: Vec<f64> = (0..l).map(|m| ds[m].dot(&frames[m].n)).collect();
    let [eta_x, eta_y] = mg.layer_xy_derivatives(&eta);

    let (mut jd, mut js, mut ed, mut es, mut dual, mut sym, mut symscale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (m, f) in frames.iter().enumerate() {
        let j = (f.s_x.cross(&ds_y(m)) + ds_x(m).cross(&f.s_y)) / f.area_element;
        let j_par = j - f.n * j.dot(&f.n);
        let formula = -f.surface_gradient(eta_x[m], eta_y[m]) + f.a * ds[m].dot(&f.n_x) + f.b * ds[m].dot(&f.n_y);
        jd = jd.max((j_par - formula).norm());
        js = js.max(j_par.norm());

        let ex = ds_x(m).dot(&f.n) + ds[m].dot(&f.n_x);
        let ey = ds_y(m).dot(&f.n) + ds[m].dot(&f.n_y);
        ed = ed.max((eta_x[m] - ex).abs()).max((eta_y[m] - ey).abs());
        es = es.max(ex.abs()).max(ey.abs());

        for d in [
            f.a.dot(&f.s_x) - 1.0,
            f.b.dot(&f.s_y) - 1.0,
            f.a.dot(&f.s_y),
            f.b.dot(&f.s_x),
            f.a.dot(&f.n),
            f.b.dot(&f.n),
        ] {
            dual = dual.max(d.abs());
        }
        sym = sym.max((f.n_x.dot(&f.s_y) - f.n_y.dot(&f.s_x)).abs());
        symscale = symscale.max(f.n_x.norm()).max(f.n_y.norm());
    }

    // (iii) with A = T_F Â, tangential components of Â vanishing at Z = 0
    let a_hat = sample(grid, |s, z| {
        let v = fa.eval(s, z);
        Vector3::new(z * v.x, z * v.y, v.z)
    });
    let at = transport(&mg, &a_hat)?;
    let dat = mapped_derivatives(&at, &mg)?;
    let (mut td, mut ts) = (0.0f64, 0.0f64);
    for (m, f) in frames.iter().enumerate() {
        let t = mg.top_index(m);
        let (jac, av) = (dat.jacobian(t), at.at(t));
        for (v, dn) in [(f.s_x, f.n_x), (f.s_y, f.n_y)] {
            let lhs = (jac * v).cross(&f.n);
            let rhs = -av.cross(&dn);
            td = td.max((lhs - rhs).norm());
            ts = ts.max(lhs.norm()).max(rhs.norm());
        }
    }

    Ok(IdentityReport {
        div_cross,
        j_parallel: scaled(jd, js),
        tangential_derivative: scaled(td, ts),
        eta_derivative: scaled(ed, es),
        duality: dual,
        shape_symmetry: scaled(sym, symscale),
    })
}
