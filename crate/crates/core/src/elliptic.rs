//! Dirichlet problems for the Laplacian on the mapped slab and the periodic
//! Poisson problem on the surface chart.
//!
//! The discrete Laplacian is the composition `div_h ∘ grad_h` of the mapped
//! first-derivative operators, so that subtracting `grad_h φ` from a field
//! removes its discrete divergence exactly. The system on interior layers is
//! solved by BiCGStab, preconditioned with the flat-slab operator, which is
//! block diagonal in the horizontal Fourier modes.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, LU};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::spectral::{derivative_wavenumber, signed_wavenumber, Plane};
use crate::geometry::{Lattice, MappedGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

/// `Δφ = rho` in the cell, `φ = top` on the surface, `φ = bottom` on the bed.
/// Boundary data are layers in the `(X, Y)` chart.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub rho: Vec<f64>,
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
}

impl DirichletProblem {
    pub fn homogeneous(rho: Vec<f64>, layer_len: usize) -> Self {
        Self {
            rho,
            top: vec![0.0; layer_len],
            bottom: vec![0.0; layer_len],
        }
    }

    pub fn harmonic(total_len: usize, top: Vec<f64>, bottom: Vec<f64>) -> Self {
        Self {
            rho: vec![0.0; total_len],
            top,
            bottom,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub phi: Vec<f64>,
    pub grad: [Vec<f64>; 3],
    pub iterations: usize,
    /// Relative residual on interior nodes.
    pub residual: f64,
}

/// `div_h grad_h f` on all nodes.
pub fn mapped_laplacian(mg: &MappedGrid, f: &[f64]) -> Result<Vec<f64>> {
    let g = mg.gradient(f)?;
    Ok(divergence(mg, &g))
}

fn divergence(mg: &MappedGrid, v: &[Vec<f64>; 3]) -> Vec<f64> {
    let gx = mg.gradient(&v[0]).expect("sizes checked");
    let gy = mg.gradient(&v[1]).expect("sizes checked");
    let gz = mg.gradient(&v[2]).expect("sizes checked");
    (0..v[0].len()).map(|n| gx[0][n] + gy[1][n] + gz[2][n]).collect()
}

/// Reusable solver bound to one mapped grid.
pub struct EllipticSolver<'a> {
    mg: &'a MappedGrid,
    options: SolverOptions,
    /// Index into `factors` for each horizontal mode.
    mode_factor: Vec<usize>,
    factors: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a> EllipticSolver<'a> {
    pub fn new(mg: &'a MappedGrid, options: SolverOptions) -> Self {
        let g = mg.grid();
        let ni = g.nz - 1;
        let dzz = {
            let rows = mg.ops().dz.dense();
            let d = DMatrix::from_fn(g.layers(), g.layers(), |r, c| rows[r][c]);
            &d * &d
        };
        let inner = dzz.view((1, 1), (ni, ni)).into_owned();
        let lat = &g.lattice;
        let mut keys: HashMap<u64, usize> = HashMap::new();
        let mut qs = Vec::new();
        let mut mode_factor = vec![0; g.layer_len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = lat.wavevector(derivative_wavenumber(i, g.nx), derivative_wavenumber(j, g.ny));
                let q = k[0] * k[0] + k[1] * k[1];
                let id = *keys.entry(q.to_bits()).or_insert_with(|| {
                    qs.push(q);
                    qs.len() - 1
                });
                mode_factor[j * g.nx + i] = id;
            }
        }
        let factors = qs
            .par_iter()
            .map(|&q| {
                let mut m = inner.clone();
                for r in 0..ni {
                    m[(r, r)] -= q;
                }
                m.lu()
            })
            .collect();
        Self {
            mg,
            options,
            mode_factor,
            factors,
        }
    }

    fn interior_len(&self) -> usize {
        let g = self.mg.grid();
        (g.nz - 1) * g.layer_len()
    }

    fn extend(&self, x: &[f64]) -> Vec<f64> {
        let l = self.mg.grid().layer_len();
        let mut full = vec![0.0; self.mg.grid().len()];
        full[l..l + x.len()].copy_from_slice(x);
        full
    }

    fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let l = self.mg.grid().layer_len();
        full[l..l + self.interior_len()].to_vec()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let lap = mapped_laplacian(self.mg, &self.extend(x)).expect("sizes checked");
        self.restrict(&lap)
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let g = self.mg.grid();
        let l = g.layer_len();
        let ni = g.nz - 1;
        let plane: &Plane = &self.mg.ops().plane;
        let spectra: Vec<Vec<Complex64>> = (0..ni)
            .into_par_iter()
            .map(|k| plane.forward(&r[k * l..(k + 1) * l]))
            .collect();
        let cols: Vec<Vec<Complex64>> = (0..l)
            .into_par_iter()
            .map(|m| {
                let lu = &self.factors[self.mode_factor[m]];
                let re = DVector::from_iterator(ni, (0..ni).map(|k| spectra[k][m].re));
                let im = DVector::from_iterator(ni, (0..ni).map(|k| spectra[k][m].im));
                let sr = lu.solve(&re).expect("flat operator is nonsingular");
                let si = lu.solve(&im).expect("flat operator is nonsingular");
                (0..ni).map(|k| Complex64::new(sr[k], si[k])).collect()
            })
            .collect();
        let layers: Vec<Vec<f64>> = (0..ni)
            .into_par_iter()
            .map(|k| plane.inverse((0..l).map(|m| cols[m][k]).collect()))
            .collect();
        layers.concat()
    }

    pub fn solve(&self, problem: &DirichletProblem) -> Result<DirichletSolution> {
        let g = self.mg.grid();
        let l = g.layer_len();
        if problem.rho.len() != g.len() || problem.top.len() != l || problem.bottom.len() != l {
            return Err(Error::Contract("Dirichlet problem data do not match the grid".into()));
        }
        let mut lifted = vec![0.0; g.len()];
        lifted[..l].copy_from_slice(&problem.bottom);
        lifted[g.nz * l..].copy_from_slice(&problem.top);
        let lap_b = mapped_laplacian(self.mg, &lifted)?;
        let b: Vec<f64> = self
            .restrict(&problem.rho)
            .iter()
            .zip(self.restrict(&lap_b))
            .map(|(r, lb)| r - lb)
            .collect();
        let (x, iterations, residual) = self.bicgstab(&b)?;
        let mut phi = self.extend(&x);
        phi[..l].copy_from_slice(&problem.bottom);
        phi[g.nz * l..].copy_from_slice(&problem.top);
        let grad = self.mg.gradient(&phi)?;
        Ok(DirichletSolution {
            phi,
            grad,
            iterations,
            residual,
        })
    }

    fn bicgstab(&self, b: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
        let n = b.len();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], 0, 0.0));
        }
        let tol = self.options.tolerance * bnorm;
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for it in 1..=self.options.max_iterations {
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let y = self.precondition(&p);
            v = self.apply(&y);
            alpha = rho / dot(&r_hat, &v);
            let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
            if norm(&s) <= tol {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                return Ok((x, it, norm(&s) / bnorm));
            }
            let z = self.precondition(&s);
            let t = self.apply(&z);
            omega = dot(&t, &s) / dot(&t, &t);
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            let rn = norm(&r);
            if rn <= tol {
                return Ok((x, it, rn / bnorm));
            }
            if !rn.is_finite() || omega == 0.0 {
                break;
            }
        }
        // report the true residual
        let ax = self.apply(&x);
        let res = (0..n).map(|i| (b[i] - ax[i]).powi(2)).sum::<f64>().sqrt() / bnorm;
        Err(Error::SolverFailure {
            iterations: self.options.max_iterations,
            residual: res,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn solve_dirichlet(mg: &MappedGrid, problem: &DirichletProblem, options: SolverOptions) -> Result<DirichletSolution> {
    EllipticSolver::new(mg, options).solve(problem)
}

/// Symbol `|K|²` of `−Δ₂` for FFT bin `(i, j)`; Nyquist bins use the
/// average over their two aliases so the operator stays real.
fn poisson_symbol(lat: &Lattice, i: usize, j: usize, nx: usize, ny: usize) -> f64 {
    let k1 = signed_wavenumber(i, nx) as f64;
    let k2 = signed_wavenumber(j, ny) as f64;
    let (d1, d2) = (derivative_wavenumber(i, nx), derivative_wavenumber(j, ny));
    let r11 = lat.recip1[0] * lat.recip1[0] + lat.recip1[1] * lat.recip1[1];
    let r22 = lat.recip2[0] * lat.recip2[0] + lat.recip2[1] * lat.recip2[1];
    let r12 = lat.recip1[0] * lat.recip2[0] + lat.recip1[1] * lat.recip2[1];
    k1 * k1 * r11 + k2 * k2 * r22 + 2.0 * d1 * d2 * r12
}

/// Spectral `Δ₂ f` of a periodic layer.
pub fn periodic_laplacian_2d(lattice: &Lattice, plane: &Plane, f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (plane.nx(), plane.ny());
    plane.filter(f, |i, j| Complex64::new(-poisson_symbol(lattice, i, j, nx, ny), 0.0))
}

/// Zero-mean periodic solution of `Δ₂ f₀ = source`.
pub fn solve_periodic_poisson_2d(lattice: &Lattice, plane: &Plane, source: &[f64]) -> Result<Vec<f64>> {
    if source.len() != plane.len() {
        return Err(Error::Contract("Poisson source has wrong sample count".into()));
    }
    let mean = Plane::mean(source);
    let scale = source.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tolerance = 1e-10 * scale + 1e-14;
    if mean.abs() > tolerance {
        return Err(Error::Compatibility { mean, tolerance });
    }
    let (nx, ny) = (plane.nx(), plane.ny());
    Ok(plane.filter(source, |i, j| {
        let q = poisson_symbol(lattice, i, j, nx, ny);
        if i == 0 && j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0 / q, 0.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainMap, Grid};
    use std::f64::consts::PI;

    fn flat(n: usize, nz: usize) -> MappedGrid {
        let g = Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, n, n, nz).unwrap();
        MappedGrid::new(&DomainMap::identity(1.0), g).unwrap()
    }

    fn top_layer(mg: &MappedGrid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let g = mg.grid();
        (0..g.layer_len())
            .map(|m| {
                let p = g.surface_point(m % g.nx, m / g.nx);
                f(p[0], p[1])
            })
            .collect()
    }

    #[test]
    fn zero_data_gives_zero() {
        let mg = flat(8, 8);
        let g = mg.grid();
        let s = solve_dirichlet(&mg, &DirichletProblem::homogeneous(vec![0.0; g.len()], g.layer_len()), SolverOptions::default()).unwrap();
        assert!(s.phi.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn separable_harmonic_mode() {
        let mg = flat(16, 32);
        let g = *mg.grid();
        let top = top_layer(&mg, |x, _| x.cos());
        let p = DirichletProblem::harmonic(g.len(), top, vec![0.0; g.layer_len()]);
        let s = solve_dirichlet(&mg, &p, SolverOptions::default()).unwrap();
        let mut err: f64 = 0.0;
        for n in 0..g.len() {
            let x = g.reference_point(n);
            let exact = x.x.cos() * (x.z + 1.0).sinh() / 1f64.sinh();
            err = err.max((s.phi[n] - exact).abs());
        }
        assert!(err < 1e-7, "{err}");
        assert!(s.iterations <= 3);
    }

    fn manufactured(nz: usize, exact_fn: impl Fn(f64, f64) -> f64, lap_factor: f64) -> f64 {
        let g = Grid::new(Lattice::square(2.0 * PI).unwrap(), 1.0, 16, 16, nz).unwrap();
        let map = DomainMap::graph_lift(&g.lattice, 1.0, &[([1.0, 0.0], 0.15, 0.0)]).unwrap();
        let mg = MappedGrid::new(&map, g).unwrap();
        let exact: Vec<f64> = mg.positions().iter().map(|p| exact_fn(p.x, p.z)).collect();
        let rho: Vec<f64> = exact.iter().map(|v| lap_factor * v).collect();
        let l = g.layer_len();
        let p = DirichletProblem {
            rho,
            top: exact[g.nz * l..].to_vec(),
            bottom: exact[..l].to_vec(),
        };
        let s = solve_dirichlet(&mg, &p, SolverOptions::default()).unwrap();
        s.phi.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_linear_profile_on_graph_lift() {
        // sin x (z + 1) is linear in Z along each column, so only solver error remains
        let e = manufactured(16, |x, z| x.sin() * (z + 1.0), -1.0);
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn manufactured_converges_on_graph_lift() {
        let f = |x: f64, z: f64| x.sin() * (2.0 * z).cos();
        let (e1, e2) = (manufactured(16, f, -5.0), manufactured(32, f, -5.0));
        assert!(e2 < 1e-5, "{e2}");
        assert!(e1 / e2 > 16.0, "{e1} {e2}");
    }

    #[test]
    fn maximum_principle_and_linearity() {
        let mg = flat(8, 16);
        let g = *mg.grid();
        let t1 = top_layer(&mg, |x, y| (x + y).sin());
        let b1 = top_layer(&mg, |x, _| 0.5 * (2.0 * x).cos());
        let t2 = top_layer(&mg, |_, y| y.cos());
        let opts = SolverOptions::default();
        let s1 = solve_dirichlet(&mg, &DirichletProblem::harmonic(g.len(), t1.clone(), b1.clone()), opts).unwrap();
        let s2 = solve_dirichlet(&mg, &DirichletProblem::harmonic(g.len(), t2.clone(), vec![0.0; g.layer_len()]), opts).unwrap();
        let hi = t1.iter().chain(&b1).fold(f64::MIN, |a, b| a.max(*b));
        let lo = t1.iter().chain(&b1).fold(f64::MAX, |a, b| a.min(*b));
        assert!(s1.phi.iter().all(|v| *v <= hi + 1e-8 && *v >= lo - 1e-8));
        let t: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| 2.0 * a - b).collect();
        let b: Vec<f64> = b1.iter().map(|a| 2.0 * a).collect();
        let s = solve_dirichlet(&mg, &DirichletProblem::harmonic(g.len(), t, b), opts).unwrap();
        for n in 0..g.len() {
            assert!((s.phi[n] - 2.0 * s1.phi[n] + s2.phi[n]).abs() < 1e-8);
        }
    }

    #[test]
    fn poisson_2d() {
        let lat = Lattice::square(2.0 * PI).unwrap();
        let plane = Plane::new(16, 16);
        let pts: Vec<[f64; 2]> = (0..256).map(|m| lat.point((m % 16) as f64 / 16.0, (m / 16) as f64 / 16.0)).collect();
        let src: Vec<f64> = pts.iter().map(|p| -p[0].cos()).collect();
        let f = solve_periodic_poisson_2d(&lat, &plane, &src).unwrap();
        for (v, p) in f.iter().zip(&pts) {
            assert!((v - p[0].cos()).abs() < 1e-13);
        }
        assert!(solve_periodic_poisson_2d(&lat, &plane, &vec![0.0; 256]).unwrap().iter().all(|v| *v == 0.0));
        let bad = vec![1.0; 256];
        assert!(matches!(solve_periodic_poisson_2d(&lat, &plane, &bad), Err(Error::Compatibility { .. })));
    }

    #[test]
    fn poisson_2d_oblique_random() {
        use rand::{Rng, SeedableRng};
        let lat = Lattice::new([5.0, 0.0], [1.5, 4.0]).unwrap();
        let plane = Plane::new(12, 10);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut src: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = Plane::mean(&src);
        src.iter_mut().for_each(|v| *v -= mean);
        let f = solve_periodic_poisson_2d(&lat, &plane, &src).unwrap();
        let back = periodic_laplacian_2d(&lat, &plane, &f);
        for (a, b) in back.iter().zip(&src) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(Plane::mean(&f).abs() < 1e-14);
    }
}
