//! Exact integrals of the Biot–Savart kernel `η/|η|³` over parallelepipeds,
//! used to subtract the near-singular part of the midpoint quadrature.

use nalgebra::{Matrix3, Vector3};

/// `ln(R + s)` without cancellation when `s < 0`; `r0sq = R² − s²`.
fn ln_r_plus_s(s: f64, r: f64, r0sq: f64) -> f64 {
    if s >= 0.0 {
        (r + s).ln()
    } else {
        (r0sq / (r - s)).ln()
    }
}

/// `∫ √(s² + r0²) ds` antiderivative.
fn sqrt_antiderivative(s: f64, r: f64, r0sq: f64) -> f64 {
    let log = if r0sq > 0.0 { r0sq * ln_r_plus_s(s, r, r0sq) } else { 0.0 };
    0.5 * (s * r + log)
}

/// `(∫ 1/|η| dS, ∫ η/|η| dS)` over a planar convex polygon with vertices in order.
pub fn polygon_moments(vertices: &[Vector3<f64>]) -> (f64, Vector3<f64>) {
    let nv = vertices.len();
    let mut normal = Vector3::zeros();
    for i in 0..nv {
        normal += vertices[i].cross(&vertices[(i + 1) % nv]);
    }
    let area2 = normal.norm();
    if area2 == 0.0 {
        return (0.0, Vector3::zeros());
    }
    let n = normal / area2;
    let h = n.dot(&vertices[0]);
    let o = n * h;
    let ha = h.abs();
    let mut total = 0.0;
    let mut lateral = Vector3::zeros();
    for i in 0..nv {
        let va = vertices[i] - o;
        let vb = vertices[(i + 1) % nv] - o;
        let edge = vb - va;
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        let l = edge / len;
        // outward in-plane edge normal
        let u = l.cross(&n);
        let p = va.dot(&u);
        let sm = va.dot(&l);
        let sp = vb.dot(&l);
        let r0sq = p * p + h * h;
        let rm = (sm * sm + r0sq).sqrt();
        let rp = (sp * sp + r0sq).sqrt();
        lateral += u * (sqrt_antiderivative(sp, rp, r0sq) - sqrt_antiderivative(sm, rm, r0sq));
        if p.abs() <= 1e-14 * len {
            continue;
        }
        let log = ln_r_plus_s(sp, rp, r0sq) - ln_r_plus_s(sm, rm, r0sq);
        let ang = if ha > 0.0 {
            (p * sp / (r0sq + ha * rp)).atan() - (p * sm / (r0sq + ha * rm)).atan()
        } else {
            0.0
        };
        total += p * log - ha * ang;
    }
    // ∫ ρ/|η| over the face is the edge flux of |η|
    (total, o * total + lateral)
}

/// `∫_polygon 1/|η| dS`.
pub fn polygon_inverse_distance(vertices: &[Vector3<f64>]) -> f64 {
    polygon_moments(vertices).0
}

/// Kernel integrals over the parallelepiped `{M σ : σ ∈ [lo, hi]}`:
/// `∫ η/|η|³ dη` and `∫ η ηᵀ/|η|³ dη`. The origin may lie inside or on the
/// boundary.
#[derive(Debug, Clone, Copy)]
pub struct BoxKernel {
    pub first: Vector3<f64>,
    pub second: Matrix3<f64>,
}

pub fn parallelepiped_kernel(m: &Matrix3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> BoxKernel {
    let corner = |c: [usize; 3]| {
        let s = Vector3::new(
            if c[0] == 0 { lo.x } else { hi.x },
            if c[1] == 0 { lo.y } else { hi.y },
            if c[2] == 0 { lo.z } else { hi.z },
        );
        m * s
    };
    let centre = m * ((lo + hi) * 0.5);
    let mut first = Vector3::zeros();
    let mut flux = Matrix3::zeros();
    let mut inv = 0.0;
    for axis in 0..3 {
        for side in 0..2 {
            let quad: Vec<Vector3<f64>> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .iter()
                .map(|&(t, w)| {
                    let mut c = [0; 3];
                    c[axis] = side;
                    c[(axis + 1) % 3] = t;
                    c[(axis + 2) % 3] = w;
                    corner(c)
                })
                .collect();
            let mut n = (quad[1] - quad[0]).cross(&(quad[3] - quad[0]));
            let nn = n.norm();
            if nn == 0.0 {
                continue;
            }
            n /= nn;
            if n.dot(&((quad[0] + quad[2]) * 0.5 - centre)) < 0.0 {
                n = -n;
            }
            let (p, v) = polygon_moments(&quad);
            // ∫ ∇(−1/|η|) = −∮ n/|η|
            first -= n * p;
            // div(η/|η|) = 2/|η|
            inv += 0.5 * n.dot(&quad[0]) * p;
            // ∮ η_i n_j / |η|
            flux += v * n.transpose();
        }
    }
    // ∂_j(η_i/|η|) = δ_ij/|η| − η_i η_j/|η|³
    BoxKernel {
        first,
        second: Matrix3::identity() * inv - flux,
    }
}

/// `∫ η/|η|³ dη` over the parallelepiped `{M σ : σ ∈ [lo, hi]}`.
pub fn parallelepiped_kernel_integral(m: &Matrix3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Vector3<f64> {
    parallelepiped_kernel(m, lo, hi).first
}
