//! Fourier operations on one periodic layer in lattice coordinates
//! `(s1, s2) ∈ [0,1)²`, stored row-major as `data[j * nx + i]`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Signed wavenumber of FFT bin `idx` out of `n`.
pub fn signed_wavenumber(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// True when `idx` is the unpaired Nyquist bin of an even-length transform.
pub fn is_nyquist(idx: usize, n: usize) -> bool {
    n % 2 == 0 && idx == n / 2
}

/// Wavenumber used by first derivatives (Nyquist bin differentiated to zero).
pub fn derivative_wavenumber(idx: usize, n: usize) -> f64 {
    if is_nyquist(idx, n) {
        0.0
    } else {
        signed_wavenumber(idx, n) as f64
    }
}

#[derive(Clone)]
pub struct Plane {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plane").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl Plane {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn transpose(&self, data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = data[r * cols + c];
            }
        }
        out
    }

    fn transform(&self, mut buf: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
        let (fx, fy) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        fx.process(&mut buf);
        let mut t = self.transpose(&buf, self.ny, self.nx);
        fy.process(&mut t);
        self.transpose(&t, self.nx, self.ny)
    }

    /// Unnormalised forward transform of a real layer.
    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(data.len(), self.len());
        let buf = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(buf, false)
    }

    /// Inverse of [`Plane::forward`], returning the real part.
    pub fn inverse(&self, coeffs: Vec<Complex64>) -> Vec<f64> {
        let scale = 1.0 / self.len() as f64;
        self.transform(coeffs, true)
            .into_iter()
            .map(|c| c.re * scale)
            .collect()
    }

    /// Apply a per-mode multiplier `m(k1, k2)` where `k` are FFT bin indices.
    pub fn filter(&self, data: &[f64], m: impl Fn(usize, usize) -> Complex64) -> Vec<f64> {
        let mut c = self.forward(data);
        for j in 0..self.ny {
            for i in 0..self.nx {
                c[j * self.nx + i] *= m(i, j);
            }
        }
        self.inverse(c)
    }

    /// `∂/∂s1` (axis 0) or `∂/∂s2` (axis 1) of a period-1 layer.
    pub fn derivative(&self, data: &[f64], axis: usize) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        self.filter(data, |i, j| {
            let k = if axis == 0 {
                derivative_wavenumber(i, nx)
            } else {
                derivative_wavenumber(j, ny)
            };
            Complex64::new(0.0, 2.0 * PI * k)
        })
    }

    /// Both first derivatives from one forward transform.
    pub fn gradient(&self, data: &[f64]) -> [Vec<f64>; 2] {
        let c = self.forward(data);
        let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (axis, slot) in out.iter_mut().enumerate() {
            let mut ca = c.clone();
            for j in 0..self.ny {
                for i in 0..self.nx {
                    let k = if axis == 0 {
                        derivative_wavenumber(i, self.nx)
                    } else {
                        derivative_wavenumber(j, self.ny)
                    };
                    ca[j * self.nx + i] *= Complex64::new(0.0, 2.0 * PI * k);
                }
            }
            *slot = self.inverse(ca);
        }
        out
    }

    /// Cell mean of a layer.
    pub fn mean(data: &[f64]) -> f64 {
        data.iter().sum::<f64>() / data.len() as f64
    }

    /// Values of the trigonometric interpolant of `data` on the `target`
    /// grid, shifted by `offset` (in units of the target spacing):
    /// `s = ((i + o1) / m1, (j + o2) / m2)`.
    pub fn resample(&self, data: &[f64], target: &Plane, offset: [f64; 2]) -> Vec<f64> {
        let (m1, m2) = (target.nx, target.ny);
        let zero = Complex64::new(0.0, 0.0);
        let mut folded = vec![zero; target.len()];
        let scale = (m1 * m2) as f64;
        for (k1, k2, c) in self.series(data).terms {
            let phase = 2.0 * PI * (k1 as f64 * offset[0] / m1 as f64 + k2 as f64 * offset[1] / m2 as f64);
            let b1 = k1.rem_euclid(m1 as i64) as usize;
            let b2 = k2.rem_euclid(m2 as i64) as usize;
            folded[b2 * m1 + b1] += c * Complex64::new(phase.cos(), phase.sin()) * scale;
        }
        target.inverse(folded)
    }

    /// Trigonometric interpolant of a layer, for evaluation off the grid.
    pub fn series(&self, data: &[f64]) -> Series2 {
        let c = self.forward(data);
        let scale = 1.0 / self.len() as f64;
        let mut terms = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let coef = c[j * self.nx + i] * scale;
                if coef.norm() == 0.0 {
                    continue;
                }
                let k1 = signed_wavenumber(i, self.nx);
                let k2 = signed_wavenumber(j, self.ny);
                // Nyquist bins are split symmetrically so the interpolant is real.
                let split_x = is_nyquist(i, self.nx);
                let split_y = is_nyquist(j, self.ny);
                let xs: &[i64] = if split_x { &[k1, -k1] } else { &[k1] };
                let ys: &[i64] = if split_y { &[k2, -k2] } else { &[k2] };
                let share = 1.0 / (xs.len() * ys.len()) as f64;
                for &a in xs {
                    for &b in ys {
                        terms.push((a, b, coef * share));
                    }
                }
            }
        }
        Series2 { terms }
    }
}

/// Finite complex Fourier series in lattice coordinates, period 1.
#[derive(Debug, Clone)]
pub struct Series2 {
    terms: Vec<(i64, i64, Complex64)>,
}

impl Series2 {
    /// Mixed partial `∂^p_{s1} ∂^q_{s2}` at `(s1, s2)`.
    pub fn eval(&self, s1: f64, s2: f64, p: u32, q: u32) -> f64 {
        let mut acc = 0.0;
        for &(k1, k2, c) in &self.terms {
            let phase = 2.0 * PI * (k1 as f64 * s1 + k2 as f64 * s2);
            let mut f = c * Complex64::new(phase.cos(), phase.sin());
            let ik1 = Complex64::new(0.0, 2.0 * PI * k1 as f64);
            let ik2 = Complex64::new(0.0, 2.0 * PI * k2 as f64);
            for _ in 0..p {
                f *= ik1;
            }
            for _ in 0..q {
                f *= ik2;
            }
            acc += f.re;
        }
        acc
    }

    /// Value and all partials up to second order:
    /// `[f, f_1, f_2, f_11, f_12, f_22]` in lattice coordinates.
    pub fn jet2(&self, s1: f64, s2: f64) -> [f64; 6] {
        let mut out = [0.0; 6];
        for &(k1, k2, c) in &self.terms {
            let phase = 2.0 * PI * (k1 as f64 * s1 + k2 as f64 * s2);
            let f = c * Complex64::new(phase.cos(), phase.sin());
            let a = 2.0 * PI * k1 as f64;
            let b = 2.0 * PI * k2 as f64;
            let i = Complex64::new(0.0, 1.0);
            out[0] += f.re;
            out[1] += (f * i * a).re;
            out[2] += (f * i * b).re;
            out[3] -= f.re * a * a;
            out[4] -= f.re * a * b;
            out[5] -= f.re * b * b;
        }
        out
    }
}
