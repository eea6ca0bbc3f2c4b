//! One-dimensional quadrature building blocks.

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Mapped nodes and weights for [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel edges graded geometrically toward `lo`: lo, lo + (hi-lo)q^k, ...
/// The innermost panel has width (hi - lo) * ratio^(levels-1).
pub fn geometric_edges(lo: f64, hi: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mut e = vec![lo];
    for k in (0..levels).rev() {
        e.push(lo + (hi - lo) * ratio.powi(k as i32));
    }
    e
}

/// Integrate over the panels defined by `edges` with a fixed rule per panel.
pub fn integrate_panels<F: FnMut(f64) -> f64>(gl: &GaussLegendre, edges: &[f64], mut f: F) -> f64 {
    edges
        .windows(2)
        .map(|w| gl.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Adaptive Gauss-Legendre: split until the one-panel and two-panel
/// estimates agree to `tol` (absolute, scaled by panel width).
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    let gl = GaussLegendre::new(10);
    fn rec<F: FnMut(f64) -> f64>(
        gl: &GaussLegendre,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        f: &mut F,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let l = gl.integrate(a, m, &mut *f);
        let r = gl.integrate(m, b, &mut *f);
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        rec(gl, a, m, l, 0.5 * tol, depth - 1, f) + rec(gl, m, b, r, 0.5 * tol, depth - 1, f)
    }
    let whole = gl.integrate(a, b, &mut f);
    rec(&gl, a, b, whole, tol, 40, &mut f)
}

/// Finite-difference weights (Fornberg) for derivatives 0..=m at `x0`
/// from arbitrary distinct nodes. Returns `w[d][j]`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
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
    c
}

/// Composite Simpson weights for `n` (even) equal intervals of width `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n % 2 == 0 && n > 0, "Simpson needs an even interval count");
    let mut w = vec![0.0; n + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        for p in 0..16 {
            let got = gl.integrate(0.0, 2.0, |x| x.powi(p));
            let want = 2f64.powi(p + 1) / (p as f64 + 1.0);
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "p={p}");
        }
    }

    #[test]
    fn geometric_panels_handle_endpoint_singularity() {
        let gl = GaussLegendre::new(12);
        let e = geometric_edges(0.0, 1.0, 0.25, 30);
        let got = integrate_panels(&gl, &e, |x| x.powf(-0.5));
        assert!((got - 2.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_peaked_integrand() {
        let eps: f64 = 1e-3;
        let got = adaptive(-1.0, 1.0, 1e-12, |x| eps / (x * x + eps * eps));
        let want = 2.0 * (1.0 / eps).atan();
        assert!((got - want).abs() < 1e-8);
    }

    #[test]
    fn fornberg_second_derivative_nonuniform() {
        let xs = [0.0, 0.1, 0.25, 0.3, 0.5];
        let w = fornberg(0.25, &xs, 2);
        let d2: f64 = xs.iter().zip(&w[2]).map(|(x, c)| c * x.powi(3)).sum();
        assert!((d2 - 6.0 * 0.25).abs() < 1e-10);
    }
}
