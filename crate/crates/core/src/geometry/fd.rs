//! Finite-difference and interpolation stencils along the non-periodic Z axis.

/// Fornberg's recursion: weights of the `m`-th derivative at `x0` from the
/// samples at `xs`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(m)
}

/// Start index of a `width`-point stencil centred on `i` in `0..n`, clamped
/// to stay inside.
fn stencil_start(i: usize, width: usize, n: usize) -> usize {
    let half = width / 2;
    i.saturating_sub(half).min(n - width)
}

/// First-derivative operator on `n_nodes` uniformly spaced nodes: centred in
/// the interior, one-sided with one extra node at the ends (so the closures
/// are one order more accurate than the centred rows).
#[derive(Debug, Clone)]
pub struct ZDerivative {
    h: f64,
    rows: Vec<(usize, Vec<f64>)>,
}

impl ZDerivative {
    /// `order` is the (even) formal accuracy of the centred stencil.
    pub fn new(n_nodes: usize, h: f64, order: usize) -> Self {
        let centred = (order + 1).min(n_nodes);
        let half = centred / 2;
        let rows = (0..n_nodes)
            .map(|i| {
                let width = if i >= half && i + half < n_nodes {
                    centred
                } else {
                    (order + 2).min(n_nodes)
                };
                let lo = stencil_start(i, width, n_nodes);
                let xs: Vec<f64> = (lo..lo + width).map(|p| p as f64).collect();
                let w = fornberg(i as f64, &xs, 1);
                (lo, w.into_iter().map(|v| v / h).collect())
            })
            .collect();
        Self { h, rows }
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Apply to a strided column: element `p` lives at `data[offset + p * stride]`.
    pub fn apply_strided(&self, data: &[f64], offset: usize, stride: usize, out: &mut [f64]) {
        for (i, (lo, w)) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for (q, wq) in w.iter().enumerate() {
                acc += wq * data[offset + (lo + q) * stride];
            }
            out[offset + i * stride] = acc;
        }
    }

    /// Dense matrix form (row-major), for building small direct solvers.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        self.rows
            .iter()
            .map(|(lo, w)| {
                let mut row = vec![0.0; n];
                for (q, wq) in w.iter().enumerate() {
                    row[lo + q] = *wq;
                }
                row
            })
            .collect()
    }
}

/// Lagrange interpolation weights at fractional node position `t` (in units
/// of the spacing) using `width` nodes out of `n_nodes`. Returns the start
/// index and the weights.
pub fn interpolation_weights(t: f64, width: usize, n_nodes: usize) -> (usize, Vec<f64>) {
    let width = width.min(n_nodes);
    let centre = t.floor().max(0.0) as usize;
    let lo = (centre + 1).saturating_sub(width / 2).min(n_nodes - width);
    let xs: Vec<f64> = (lo..lo + width).map(|p| p as f64).collect();
    (lo, fornberg(t, &xs, 0))
}

/// Cumulative integral from the last node downwards: `out[k] = ∫_{z_k}^{z_top} f`.
/// Each interval is integrated with the degree-`width-1` interpolant of a
/// local stencil, evaluated by 4-point Gauss–Legendre (exact up to degree 7).
pub fn cumulative_from_top(values: &[f64], h: f64, width: usize) -> Vec<f64> {
    let n = values.len();
    let width = width.min(n);
    let gauss = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    let mut out = vec![0.0; n];
    for k in (0..n - 1).rev() {
        // Interval [k, k+1]; stencil centred on its midpoint.
        let lo = (k + 1).saturating_sub(width / 2).min(n - width);
        let xs: Vec<f64> = (lo..lo + width).map(|p| p as f64).collect();
        let mut integral = 0.0;
        for (xg, wg) in gauss {
            let t = k as f64 + 0.5 + 0.5 * xg;
            let w = fornberg(t, &xs, 0);
            let f: f64 = w.iter().zip(&values[lo..lo + width]).map(|(a, b)| a * b).sum();
            integral += 0.5 * wg * f;
        }
        out[k] = out[k + 1] + integral * h;
    }
    out
}

/// Composite Simpson weights on `n_intervals` (even) intervals of width `h`.
pub fn simpson_weights(n_intervals: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n_intervals + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = if k == 0 || k == n_intervals {
            h / 3.0
        } else if k % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}
