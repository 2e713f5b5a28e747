//! Biot–Savart quadrature over point-source clouds and the symmetric
//! lattice sum of cell contributions.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::singular::parallelepiped_kernel;
use super::partition::{PartitionCell, SUPPORT_HI, SUPPORT_LO};
use crate::error::{Error, Result};
use crate::fields::{mapped_derivatives, SampledVectorField};
use crate::geometry::fd::interpolation_weights;
use crate::geometry::spectral::Plane;
use crate::geometry::{Lattice, MappedGrid};

/// Weighted point sources: `(1/4π) Σ w × (x − y)/|x − y|³` approximates the
/// Biot–Savart integral when `w` carries the quadrature volume.
#[derive(Debug, Clone, Default)]
pub struct SourceCloud {
    px: Vec<f64>,
    py: Vec<f64>,
    pz: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    wz: Vec<f64>,
}

impl SourceCloud {
    pub fn push(&mut self, y: Vector3<f64>, w: Vector3<f64>) {
        self.px.push(y.x);
        self.py.push(y.y);
        self.pz.push(y.z);
        self.wx.push(w.x);
        self.wy.push(w.y);
        self.wz.push(w.z);
    }

    pub fn len(&self) -> usize {
        self.px.len()
    }

    pub fn is_empty(&self) -> bool {
        self.px.is_empty()
    }

    /// `∫ w`.
    pub fn total(&self) -> Vector3<f64> {
        let mut t = Vector3::zeros();
        for s in 0..self.len() {
            t += Vector3::new(self.wx[s], self.wy[s], self.wz[s]);
        }
        t
    }

    /// `∫ w(y) × (Q y) dy`.
    pub fn moment(&self, q: &Matrix3<f64>) -> Vector3<f64> {
        let mut t = Vector3::zeros();
        for s in 0..self.len() {
            let w = Vector3::new(self.wx[s], self.wy[s], self.wz[s]);
            let y = Vector3::new(self.px[s], self.py[s], self.pz[s]);
            t += w.cross(&(q * y));
        }
        t
    }

    /// `Σ w × (x − y)/|x − y|³` without the `1/4π` factor, sources shifted by `shift`.
    #[inline]
    fn kernel_sum(&self, x: &Vector3<f64>, shift: [f64; 2]) -> Vector3<f64> {
        let (tx, ty, tz) = (x.x - shift[0], x.y - shift[1], x.z);
        let (mut bx, mut by, mut bz) = (0.0, 0.0, 0.0);
        for s in 0..self.px.len() {
            let dx = tx - self.px[s];
            let dy = ty - self.py[s];
            let dz = tz - self.pz[s];
            let r2 = dx * dx + dy * dy + dz * dz;
            let inv = 1.0 / (r2 * r2.sqrt());
            bx += (self.wy[s] * dz - self.wz[s] * dy) * inv;
            by += (self.wz[s] * dx - self.wx[s] * dz) * inv;
            bz += (self.wx[s] * dy - self.wy[s] * dx) * inv;
        }
        Vector3::new(bx, by, bz)
    }

    /// Biot–Savart field of the cloud at one point.
    pub fn field_at(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.kernel_sum(x, [0.0, 0.0]) / (4.0 * PI)
    }

    /// Cloud of `φ₀₀ u` over the enlarged cell, sampled at staggered
    /// midpoints of a `m1 × m2 × mz` grid per cell.
    pub fn from_field(mg: &MappedGrid, u: &SampledVectorField, m1: usize, m2: usize, mz: usize) -> Result<Self> {
        u.check_grid(mg)?;
        if m1 % 4 != 0 || m2 % 4 != 0 || mz == 0 {
            return Err(Error::Contract(format!(
                "source resolution {m1}x{m2}x{mz} must have horizontal counts divisible by 4"
            )));
        }
        let g = mg.grid();
        let map = mg.map();
        let lat = g.lattice;
        let target = Plane::new(m1, m2);
        let part = PartitionCell;
        let hz = g.depth / mz as f64;
        let vol = lat.cell_area / (m1 * m2) as f64 * hz;
        let (lo1, hi1) = ((SUPPORT_LO * m1 as f64) as i64, (SUPPORT_HI * m1 as f64) as i64);
        let (lo2, hi2) = ((SUPPORT_LO * m2 as f64) as i64, (SUPPORT_HI * m2 as f64) as i64);
        let levels: Vec<SourceCloud> = (0..mz)
            .into_par_iter()
            .map(|q| {
                let z = -g.depth + (q as f64 + 0.5) * hz;
                let (k0, wz) = interpolation_weights((z + g.depth) / g.dz(), 8, g.layers());
                let comps: Vec<Vec<f64>> = (0..3)
                    .map(|c| {
                        let mut layer = vec![0.0; g.layer_len()];
                        for (p, w) in wz.iter().enumerate() {
                            let r = g.layer_range(k0 + p);
                            for (v, s) in layer.iter_mut().zip(&u.comps[c][r]) {
                                *v += w * s;
                            }
                        }
                        mg.ops().plane.resample(&layer, &target, [0.5, 0.5])
                    })
                    .collect();
                let mut cloud = SourceCloud::default();
                for j in lo2..hi2 {
                    for i in lo1..hi1 {
                        let s1 = (i as f64 + 0.5) / m1 as f64;
                        let s2 = (j as f64 + 0.5) / m2 as f64;
                        let phi = part.phi00(s1, s2);
                        if phi == 0.0 {
                            continue;
                        }
                        let b = j.rem_euclid(m2 as i64) as usize * m1 + i.rem_euclid(m1 as i64) as usize;
                        let uval = Vector3::new(comps[0][b], comps[1][b], comps[2][b]);
                        let xy = lat.point(s1, s2);
                        let x = Vector3::new(xy[0], xy[1], z);
                        let det = map.jacobian(&x).determinant();
                        cloud.push(map.eval(&x), uval * (phi * det * vol));
                    }
                }
                cloud
            })
            .collect();
        let mut out = SourceCloud::default();
        for c in levels {
            out.px.extend(c.px);
            out.py.extend(c.py);
            out.pz.extend(c.pz);
            out.wx.extend(c.wx);
            out.wy.extend(c.wy);
            out.wz.extend(c.wz);
        }
        Ok(out)
    }
}

/// Biot–Savart field of a cloud at many targets.
pub fn biot_savart(cloud: &SourceCloud, targets: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    targets.par_iter().map(|x| cloud.field_at(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSumOptions {
    /// Cells with `|l|, |j| ≤ truncation` are summed directly.
    pub truncation: usize,
    /// Source nodes per grid interval in each direction for the 3×3 near cells.
    pub refinement: usize,
    /// Add the dipole approximation of all cells beyond the truncation.
    pub tail_correction: bool,
    /// Replace the midpoint rule next to each target by the exact integral
    /// of the frozen-Jacobian kernel.
    pub local_correction: bool,
}

impl Default for LatticeSumOptions {
    fn default() -> Self {
        Self {
            truncation: 8,
            refinement: 1,
            tail_correction: true,
            local_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    /// `C` in `|B_lj + B_(−l)(−j)| ≤ C / (1 + |l|³ + |j|³)`, fitted on the outermost shell.
    pub decay_constant: f64,
    /// Bound on the omitted pairs implied by the fitted decay.
    pub truncation_bound: f64,
    /// Largest magnitude of the dipole tail correction over the targets.
    pub dipole_correction: f64,
}

#[derive(Debug, Clone)]
pub struct LatticeSum {
    pub b: Vec<Vector3<f64>>,
    pub tail: TailEstimate,
}

/// Grid node `node` translated by the lattice vector `shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeTarget {
    pub node: usize,
    pub shift: [i64; 2],
}

impl LatticeTarget {
    /// Every node of the grid, unshifted.
    pub fn nodes(mg: &MappedGrid) -> Vec<Self> {
        (0..mg.grid().len()).map(|node| Self { node, shift: [0, 0] }).collect()
    }
}

/// `Σ (I − 3R̂R̂)/|R|³` over lattice vectors with `max(|l|, |j|) > truncation`,
/// with a continuum estimate beyond a large radius.
pub fn dipole_tail_tensor(lattice: &Lattice, truncation: usize) -> Matrix3<f64> {
    let l1 = lattice.lambda1[0].hypot(lattice.lambda1[1]);
    let l2 = lattice.lambda2[0].hypot(lattice.lambda2[1]);
    let r_big = 400.0 * l1.max(l2);
    let n1 = (r_big * lattice.recip1[0].hypot(lattice.recip1[1]) / (2.0 * PI)).ceil() as i64 + 1;
    let n2 = (r_big * lattice.recip2[0].hypot(lattice.recip2[1]) / (2.0 * PI)).ceil() as i64 + 1;
    let t = truncation as i64;
    let mut q = Matrix3::zeros();
    for l in -n1..=n1 {
        for j in -n2..=n2 {
            if l.abs() <= t && j.abs() <= t {
                continue;
            }
            let r = lattice.shift(l, j);
            let rn = r[0].hypot(r[1]);
            if rn > r_big {
                continue;
            }
            let rh = Vector3::new(r[0] / rn, r[1] / rn, 0.0);
            q += (Matrix3::identity() - rh * rh.transpose() * 3.0) / (rn * rn * rn);
        }
    }
    q + Matrix3::from_diagonal(&Vector3::new(-0.5, -0.5, 1.0)) * (2.0 * PI / (lattice.cell_area * r_big))
}

fn pair_weight(l: i64, j: i64) -> f64 {
    1.0 + (l.abs().pow(3) + j.abs().pow(3)) as f64
}

/// `(exact − midpoint)` of `∫ K(x − y) dy` and `∫ (x − y)(x − y)ᵀ/|x − y|³ dy`
/// over a full-depth box of `±p` source cells around node `n`, with the map
/// frozen at the node. `K(η) = η/|η|³`; the sources sit at the staggered
/// midpoints of an `m1 × m2 × mz` grid, which has the node as a corner.
fn local_kernel_defect(mg: &MappedGrid, n: usize, m: [usize; 3], p: usize) -> (Vector3<f64>, Matrix3<f64>) {
    let g = mg.grid();
    let lat = g.lattice;
    let (_, _, k) = g.ijk(n);
    let zt = g.z(k);
    let frame = Matrix3::new(
        lat.lambda1[0], lat.lambda2[0], 0.0,
        lat.lambda1[1], lat.lambda2[1], 0.0,
        0.0, 0.0, 1.0,
    );
    let neg = -(mg.jacobian(n) * frame);
    let (h1, h2, hz) = (1.0 / m[0] as f64, 1.0 / m[1] as f64, g.depth / m[2] as f64);
    let lo = Vector3::new(-(p as f64) * h1, -(p as f64) * h2, -g.depth - zt);
    let hi = Vector3::new(p as f64 * h1, p as f64 * h2, -zt);
    let exact = parallelepiped_kernel(&neg, &lo, &hi);
    let w = neg.determinant().abs() * h1 * h2 * hz;
    let pi = p as i64;
    let mut first = Vector3::zeros();
    let mut second = Matrix3::zeros();
    for q in 0..m[2] {
        let sz = -g.depth + (q as f64 + 0.5) * hz - zt;
        for b in -pi..pi {
            for a in -pi..pi {
                let eta = neg * Vector3::new((a as f64 + 0.5) * h1, (b as f64 + 0.5) * h2, sz);
                let k = eta / eta.norm().powi(3);
                first += k;
                second += k * eta.transpose();
            }
        }
    }
    (exact.first - first * w, exact.second - second * w)
}

/// Near-target correction to `Σ w × K`: `u(y) ≈ u(x) − G (x − y)` inside
/// the box, so the defect is `u × δK − ε (G δT)`.
fn local_correction(u: &Vector3<f64>, grad: &Matrix3<f64>, defect: &(Vector3<f64>, Matrix3<f64>)) -> Vector3<f64> {
    let w = grad * defect.1;
    u.cross(&defect.0) - Vector3::new(w[(1, 2)] - w[(2, 1)], w[(2, 0)] - w[(0, 2)], w[(0, 1)] - w[(1, 0)])
}

/// Symmetric principal-value sum `Σ_{|l|,|j|≤L} BS(φ_lj u)` at the targets.
/// Cells within one period of the target's own cell use the fine cloud.
pub fn pv_lattice_sum(
    mg: &MappedGrid,
    u: &SampledVectorField,
    options: &LatticeSumOptions,
    targets: &[LatticeTarget],
) -> Result<LatticeSum> {
    if options.truncation < 1 || options.refinement < 1 {
        return Err(Error::Contract("truncation and refinement must be at least 1".into()));
    }
    let g = mg.grid();
    if let Some(t) = targets.iter().find(|t| t.node >= g.len()) {
        return Err(Error::Contract(format!("target node {} outside the grid", t.node)));
    }
    let r = options.refinement;
    let fine = [r * g.nx, r * g.ny, r * g.nz];
    let near = SourceCloud::from_field(mg, u, fine[0], fine[1], fine[2])?;
    let far = if g.nx % 8 == 0 && g.ny % 8 == 0 {
        SourceCloud::from_field(mg, u, g.nx / 2, g.ny / 2, (g.nz / 2).max(1))?
    } else {
        near.clone()
    };
    let lat = g.lattice;
    let big = options.truncation as i64;
    let q = if options.tail_correction {
        Some(dipole_tail_tensor(&lat, options.truncation))
    } else {
        None
    };
    let (total, moment) = match &q {
        Some(q) => (near.total(), near.moment(q)),
        None => (Vector3::zeros(), Vector3::zeros()),
    };
    // the box must stay inside the 3×3 fine cells around any node
    let p = 3.min(fine[0] * 2 / 3).min(fine[1] * 2 / 3);
    let local: Vec<Vector3<f64>> = if options.local_correction && p > 0 {
        let d = mapped_derivatives(u, mg)?;
        (0..g.len())
            .into_par_iter()
            .map(|n| local_correction(&u.at(n), &d.jacobian(n), &local_kernel_defect(mg, n, fine, p)))
            .collect()
    } else {
        vec![Vector3::zeros(); g.len()]
    };
    let per_target: Vec<(Vector3<f64>, f64, f64)> = targets
        .par_iter()
        .map(|t| {
            let sh = lat.shift(t.shift[0], t.shift[1]);
            let x = mg.position(t.node) + Vector3::new(sh[0], sh[1], 0.0);
            let mut sum = local[t.node];
            let mut shell = Vec::new();
            for l in -big..=big {
                for j in -big..=big {
                    let is_near = (l - t.shift[0]).abs() <= 1 && (j - t.shift[1]).abs() <= 1;
                    let cloud = if is_near { &near } else { &far };
                    let v = cloud.kernel_sum(&x, lat.shift(l, j));
                    sum += v;
                    if l.abs() == big || j.abs() == big {
                        shell.push((l, j, v));
                    }
                }
            }
            let mut fit: f64 = 0.0;
            for &(l, j, v) in &shell {
                if (l, j) > (-l, -j) {
                    let partner = shell.iter().find(|s| s.0 == -l && s.1 == -j).expect("symmetric shell").2;
                    fit = fit.max((v + partner).norm() / (4.0 * PI) * pair_weight(l, j));
                }
            }
            let mut b = sum / (4.0 * PI);
            let mut corr = 0.0;
            if let Some(q) = &q {
                let tail = (total.cross(&(q * x)) - moment) / (4.0 * PI);
                corr = tail.norm();
                b += tail;
            }
            (b, fit, corr)
        })
        .collect();
    let decay_constant = per_target.iter().map(|p| p.1).fold(0.0, f64::max);
    let dipole_correction = per_target.iter().map(|p| p.2).fold(0.0, f64::max);
    // omitted pairs out to ten truncation radii, then an integral estimate
    let mut omitted = 0.0;
    let outer = 10 * big;
    for l in -outer..=outer {
        for j in -outer..=outer {
            if (l.abs() > big || j.abs() > big) && (l, j) > (-l, -j) {
                omitted += 1.0 / pair_weight(l, j);
            }
        }
    }
    omitted += PI / (outer as f64);
    Ok(LatticeSum {
        b: per_target.into_iter().map(|p| p.0).collect(),
        tail: TailEstimate {
            decay_constant,
            truncation_bound: decay_constant * omitted,
            dipole_correction,
        },
    })
}
