//! Piecewise-uniform radial grids made of nested refinement levels.

use crate::stencil::fornberg_weights;
use serde::{Deserialize, Serialize};

/// One refinement level: spacing `h` on `[0, extent]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub h: f64,
    pub extent: f64,
}

/// Union of the nodes of all levels. Level 0 is the base grid; every finer
/// level covers a sub-interval `[0, extent]` of the one before it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeGrid {
    levels: Vec<Level>,
    r: Vec<f64>,
}

impl CompositeGrid {
    /// Uniform grid with spacing `outer / cells`.
    pub fn uniform(outer: f64, cells: usize) -> Self {
        let h = outer / cells as f64;
        let r = (0..=cells).map(|i| i as f64 * h).collect();
        Self { levels: vec![Level { h, extent: outer }], r }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn h_min(&self) -> f64 {
        self.levels.last().unwrap().h
    }

    pub fn outer(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Adds a level with spacing `h_min / factor` on `[0, extent]`, where
    /// `extent` is rounded up to a node of the current finest level.
    pub fn refined(&self, factor: usize, extent: f64) -> Self {
        let fine = *self.levels.last().unwrap();
        let extent = ((extent / fine.h).ceil() * fine.h).min(fine.extent);
        let h = fine.h / factor as f64;
        let cells = (extent / h).round() as usize;
        let mut r: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        let tol = 1e-9 * h;
        r.extend(self.r.iter().copied().filter(|&x| x > extent + tol));
        let mut levels = self.levels.clone();
        levels.push(Level { h, extent });
        Self { levels, r }
    }

    /// Index of the last node with `r[i] <= x`.
    pub fn locate(&self, x: f64) -> usize {
        match self.r.partition_point(|&v| v <= x) {
            0 => 0,
            k => k - 1,
        }
    }

    /// Nodes and values of a `width`-point stencil near `x`, mirrored evenly
    /// through `r = 0` when needed.
    fn stencil_near(&self, x: f64, width: usize, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.r.len();
        let i = self.locate(x) as isize;
        let half = (width as isize - 1) / 2;
        let mut start = i - half;
        let last = n as isize - 1;
        if start + width as isize - 1 > last {
            start = last - width as isize + 1;
        }
        let mut xs = Vec::with_capacity(width);
        let mut vs = Vec::with_capacity(width);
        for k in start..start + width as isize {
            if k < 0 {
                xs.push(-self.r[(-k) as usize]);
                vs.push(values[(-k) as usize]);
            } else {
                xs.push(self.r[k as usize]);
                vs.push(values[k as usize]);
            }
        }
        (xs, vs)
    }

    /// Cubic interpolation of an even function sampled on the nodes.
    pub fn interpolate_even(&self, values: &[f64], x: f64) -> f64 {
        let (xs, vs) = self.stencil_near(x.abs(), 4, values);
        let w = fornberg_weights(x.abs(), &xs, 0);
        w[0].iter().zip(&vs).map(|(a, b)| a * b).sum()
    }

    /// Value and first derivative of the even interpolant at `x >= 0`.
    pub fn interpolate_even_with_derivative(&self, values: &[f64], x: f64) -> (f64, f64) {
        let (xs, vs) = self.stencil_near(x, 5, values);
        let w = fornberg_weights(x, &xs, 1);
        let f = w[0].iter().zip(&vs).map(|(a, b)| a * b).sum();
        let d = w[1].iter().zip(&vs).map(|(a, b)| a * b).sum();
        (f, d)
    }

    /// First derivative at every node from five-point stencils, for an even
    /// function.
    pub fn derivative_even(&self, values: &[f64]) -> Vec<f64> {
        self.r
            .iter()
            .map(|&x| {
                if x == 0.0 {
                    return 0.0;
                }
                let (xs, vs) = self.stencil_near(x, 5, values);
                let w = fornberg_weights(x, &xs, 1);
                w[1].iter().zip(&vs).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `int_0^{upper} f dr` from nodal values, using the local cubic
    /// interpolant and two-point Gauss rules on each cell. `upper` is clamped
    /// to the grid.
    pub fn integrate(&self, f: &[f64], upper: f64) -> f64 {
        let upper = upper.min(self.outer());
        let g = 0.5 / 3f64.sqrt();
        let n = self.r.len();
        let mut acc = 0.0;
        for i in 0..n - 1 {
            let a = self.r[i];
            if a >= upper {
                break;
            }
            let b = self.r[i + 1].min(upper);
            let lo = if i == 0 { 0 } else { (i - 1).min(n - 4) };
            let xs = &self.r[lo..lo + 4];
            let vs = &f[lo..lo + 4];
            let mid = 0.5 * (a + b);
            let len = b - a;
            for x in [mid - g * len, mid + g * len] {
                let w = fornberg_weights(x, xs, 0);
                acc += 0.5 * len * w[0].iter().zip(vs).map(|(c, v)| c * v).sum::<f64>();
            }
        }
        acc
    }
}

/// Precomputed three-point weights for the radial operator
/// `u'' + (k/r) u' = r^{-k} (r^k u')'` in the conservative form
/// `(k+1) [r_{i+1/2}^k D+ u - r_{i-1/2}^k D- u] / (r_{i+1/2}^{k+1} - r_{i-1/2}^{k+1})`
/// with midpoints as cell faces. The form is self-adjoint in the weighted
/// inner product with cell volumes `r^{k+1}` on any node set, so the
/// semi-discrete wave operator has a purely imaginary spectrum, and it
/// reduces to `2 (k+1)(u1 - u0)/h^2` at the origin.
#[derive(Debug, Clone)]
pub struct RadialStencils {
    /// `(left, centre, right)` weights at nodes `1..n-1`.
    pub interior: Vec<[f64; 3]>,
    /// `lap(0) = origin * (u1 - u0)`.
    pub origin: f64,
    /// One-sided derivative weights on nodes `n-3, n-2, n-1`.
    pub outer_d1: [f64; 3],
}

impl RadialStencils {
    pub fn new(grid: &CompositeGrid, k: f64) -> Self {
        let r = grid.nodes();
        let n = r.len();
        let mut interior = Vec::with_capacity(n.saturating_sub(2));
        for i in 1..n - 1 {
            let (lo, hi) = (0.5 * (r[i - 1] + r[i]), 0.5 * (r[i] + r[i + 1]));
            // r_hi^{k+1} - r_lo^{k+1} without cancellation for thin cells
            let vol = (k + 1.0) * pow_diff_over(hi, lo, k + 1.0);
            let a = lo.powf(k) / (r[i] - r[i - 1]) * (k + 1.0) / vol;
            let c = hi.powf(k) / (r[i + 1] - r[i]) * (k + 1.0) / vol;
            interior.push([a, -a - c, c]);
        }
        let h1 = r[1];
        let origin = (1.0 + k) * 2.0 / (h1 * h1);
        let w = fornberg_weights(r[n - 1], &r[n - 3..n], 1);
        Self { interior, origin, outer_d1: [w[1][0], w[1][1], w[1][2]] }
    }
}

// (hi^m - lo^m)/m for 0 <= lo < hi.
fn pow_diff_over(hi: f64, lo: f64, m: f64) -> f64 {
    let q = lo / hi;
    // hi^m (1 - q^m)/m with 1 - q^m = -expm1(m ln q)
    hi.powf(m) * -(m * q.ln()).exp_m1() / m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_nests_levels() {
        let g = CompositeGrid::uniform(10.0, 100);
        let g2 = g.refined(2, 1.03);
        assert_eq!(g2.depth(), 2);
        assert!((g2.levels()[1].extent - 1.1).abs() < 1e-12);
        assert!((g2.h_min() - 0.05).abs() < 1e-15);
        let r = g2.nodes();
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(r.len(), 101 + 11);
        // every old node is still present
        for x in g.nodes() {
            assert!(r.iter().any(|y| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn quadrature_exact_for_cubics_on_composite_grid() {
        let g = CompositeGrid::uniform(4.0, 40).refined(2, 1.0).refined(2, 0.3);
        let f: Vec<f64> = g.nodes().iter().map(|x| 1.0 + x - 0.5 * x * x + 0.25 * x.powi(3)).collect();
        let exact = |b: f64| b + b * b / 2.0 - b.powi(3) / 6.0 + b.powi(4) / 16.0;
        assert!((g.integrate(&f, 4.0) - exact(4.0)).abs() < 1e-12);
        assert!((g.integrate(&f, 2.345) - exact(2.345)).abs() < 1e-12);
    }

    #[test]
    fn even_interpolation_and_derivative() {
        let g = CompositeGrid::uniform(5.0, 200).refined(2, 1.0);
        let f: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        for x in [0.0, 0.013, 0.7, 1.01, 3.3] {
            assert!((g.interpolate_even(&f, x) - (-x * x).exp()).abs() < 1e-6);
            let (v, d) = g.interpolate_even_with_derivative(&f, x);
            assert!((v - (-x * x).exp()).abs() < 1e-7);
            assert!((d + 2.0 * x * (-x * x).exp()).abs() < 1e-6);
        }
        let d = g.derivative_even(&f);
        for (x, d) in g.nodes().iter().zip(&d) {
            assert!((d + 2.0 * x * (-x * x).exp()).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn radial_operator_second_order() {
        // u = exp(-r^2): u'' + (k/r) u' = (4 r^2 - 2 - 2k) exp(-r^2)
        let k = 6.0;
        let mut errs = vec![];
        for cells in [100, 200] {
            let g = CompositeGrid::uniform(4.0, cells).refined(2, 1.0);
            let s = RadialStencils::new(&g, k);
            let r = g.nodes();
            let u: Vec<f64> = r.iter().map(|x| (-x * x).exp()).collect();
            let mut err: f64 = (s.origin * (u[1] - u[0]) - (-2.0 - 2.0 * k)).abs();
            for i in 1..r.len() - 1 {
                let w = s.interior[i - 1];
                let lap = w[0] * u[i - 1] + w[1] * u[i] + w[2] * u[i + 1];
                err = err.max((lap - (4.0 * r[i] * r[i] - 2.0 - 2.0 * k) * u[i]).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 1.8, "ratio {ratio}");
    }
}
