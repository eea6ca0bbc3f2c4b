//! Ball geometry, graded polar grids, boundary layers and the first
//! Dirichlet eigenpair.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{fornberg, simpson_weights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    pub dimension: usize,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(dimension: usize, radius: f64) -> Result<Self> {
        if !(dimension == 2 || dimension == 3) {
            return Err(Error::domain(format!("dimension {dimension} not in {{2,3}}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("radius {radius} must be positive")));
        }
        Ok(BallDomain { dimension, radius })
    }

    pub fn unit_disk() -> Self {
        BallDomain { dimension: 2, radius: 1.0 }
    }

    pub fn unit_ball3() -> Self {
        BallDomain { dimension: 3, radius: 1.0 }
    }

    /// Surface area of the unit sphere S^{N-1}.
    pub fn unit_sphere_area(&self) -> f64 {
        match self.dimension {
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }

    pub fn volume(&self) -> f64 {
        self.unit_sphere_area() * self.radius.powi(self.dimension as i32) / self.dimension as f64
    }

    pub fn boundary_area(&self) -> f64 {
        self.unit_sphere_area() * self.radius.powi(self.dimension as i32 - 1)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn check_point(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::domain(format!(
                "point has {} coordinates, domain dimension is {}",
                x.len(),
                self.dimension
            )));
        }
        let r = norm(x);
        if r > self.radius * (1.0 + 1e-14) {
            return Err(Error::domain(format!("|x| = {r} lies outside the ball of radius {}", self.radius)));
        }
        Ok(r)
    }

    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        let r = self.check_point(x)?;
        Ok((self.radius - r).max(0.0))
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Serializable grid descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub radius: f64,
    #[serde(rename = "M_radial")]
    pub m_radial: usize,
    #[serde(rename = "M_angular")]
    pub m_angular: usize,
    pub gamma: f64,
}

impl GridSpec {
    pub fn disk(m_radial: usize, m_angular: usize) -> Self {
        GridSpec { dimension: 2, radius: 1.0, m_radial, m_angular, gamma: 2.0 }
    }

    pub fn default_disk() -> Self {
        Self::disk(256, 256)
    }

    pub fn ball3(m_radial: usize) -> Self {
        GridSpec { dimension: 3, radius: 1.0, m_radial, m_angular: 1, gamma: 2.0 }
    }

    pub fn domain(&self) -> Result<BallDomain> {
        BallDomain::new(self.dimension, self.radius)
    }
}

/// Graded polar (N=2) or radial-only (N=3) grid.
///
/// Node layout for fields: index 0 is the centre, ring `i` in `1..=M` and
/// angle `j` in `0..K` sit at `1 + (i-1)K + j`. Ring `M` is the boundary.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub domain: BallDomain,
    pub spec: GridSpec,
    /// r_0 = 0 < r_1 < ... < r_M = R.
    pub radial_nodes: Vec<f64>,
    /// dr/ds at each radial node, s = i/M.
    pub radial_jacobian: Vec<f64>,
    /// Weights for integrals of radial functions against r^{N-1} dr.
    pub radial_weights: Vec<f64>,
    pub angular_nodes: Vec<f64>,
    pub dtheta: f64,
    /// Quadrature weight per node (field layout).
    pub cell_volumes: Vec<f64>,
    /// Arclength (N=2) or area (N=3) weight per boundary node.
    pub boundary_weights: Vec<f64>,
}

impl PolarGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let domain = spec.domain()?;
        let m = spec.m_radial;
        if m < 4 || m % 2 != 0 {
            return Err(Error::domain(format!("radial node count {m} must be even and >= 4")));
        }
        if !(spec.gamma >= 1.0) {
            return Err(Error::domain("grading exponent must be >= 1"));
        }
        let k = if domain.dimension == 2 { spec.m_angular } else { 1 };
        if domain.dimension == 2 && k < 8 {
            return Err(Error::domain("need at least 8 angular nodes"));
        }
        let rr = domain.radius;
        let g = spec.gamma;
        let radial_nodes: Vec<f64> = (0..=m)
            .map(|i| {
                let s = i as f64 / m as f64;
                if i == m {
                    rr
                } else {
                    rr * (1.0 - (1.0 - s).powf(g))
                }
            })
            .collect();
        let radial_jacobian: Vec<f64> = (0..=m)
            .map(|i| {
                let s = i as f64 / m as f64;
                rr * g * (1.0 - s).powf(g - 1.0)
            })
            .collect();
        let simpson = simpson_weights(m, 1.0 / m as f64);
        let nm1 = domain.dimension as i32 - 1;
        let radial_weights: Vec<f64> = (0..=m)
            .map(|i| simpson[i] * radial_nodes[i].powi(nm1) * radial_jacobian[i])
            .collect();
        let dtheta = 2.0 * PI / k as f64;
        let angular_nodes: Vec<f64> = (0..k).map(|j| j as f64 * dtheta).collect();
        let ang_measure = if domain.dimension == 2 { dtheta } else { 4.0 * PI };
        let mut cell_volumes = vec![0.0; 1 + m * k];
        cell_volumes[0] = radial_weights[0] * domain.unit_sphere_area();
        for i in 1..=m {
            for j in 0..k {
                cell_volumes[1 + (i - 1) * k + j] = radial_weights[i] * ang_measure;
            }
        }
        let boundary_weights = if domain.dimension == 2 {
            vec![rr * dtheta; k]
        } else {
            vec![domain.boundary_area()]
        };
        Ok(PolarGrid {
            domain,
            spec,
            radial_nodes,
            radial_jacobian,
            radial_weights,
            angular_nodes,
            dtheta,
            cell_volumes,
            boundary_weights,
        })
    }

    pub fn m(&self) -> usize {
        self.spec.m_radial
    }

    pub fn k(&self) -> usize {
        self.angular_nodes.len()
    }

    pub fn len(&self) -> usize {
        1 + self.m() * self.k()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            0
        } else {
            1 + (i - 1) * self.k() + j
        }
    }

    /// Radial index of a node in field layout.
    #[inline]
    pub fn ring_of(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            1 + (n - 1) / self.k()
        }
    }

    #[inline]
    pub fn angle_of(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            (n - 1) % self.k()
        }
    }

    /// Cartesian coordinates of node `n` (N=3 nodes are placed on the x-axis).
    pub fn coords(&self, n: usize) -> Vec<f64> {
        let r = self.radial_nodes[self.ring_of(n)];
        if self.domain.dimension == 2 {
            let t = self.angular_nodes[self.angle_of(n)];
            vec![r * t.cos(), r * t.sin()]
        } else {
            vec![r, 0.0, 0.0]
        }
    }

    pub fn delta_of(&self, n: usize) -> f64 {
        self.domain.radius - self.radial_nodes[self.ring_of(n)]
    }

    pub fn is_boundary(&self, n: usize) -> bool {
        self.ring_of(n) == self.m()
    }

    pub fn boundary_point(&self, j: usize) -> Vec<f64> {
        let r = self.domain.radius;
        if self.domain.dimension == 2 {
            let t = self.angular_nodes[j];
            vec![r * t.cos(), r * t.sin()]
        } else {
            vec![r, 0.0, 0.0]
        }
    }

    /// Quadrature of a nodal function over the domain.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut s = 0.0;
        for (n, (v, w)) in values.iter().zip(&self.cell_volumes).enumerate() {
            if *w != 0.0 && !self.is_boundary(n) {
                s += v * w;
            }
        }
        s
    }

    /// Angular index nearest to `theta`.
    pub fn nearest_angle(&self, theta: f64) -> usize {
        let k = self.k() as f64;
        let t = theta.rem_euclid(2.0 * PI);
        ((t / self.dtheta).round() as usize) % (k as usize)
    }

    /// Smallest radial spacing (at the boundary).
    pub fn min_radial_spacing(&self) -> f64 {
        let m = self.m();
        self.radial_nodes[m] - self.radial_nodes[m - 1]
    }

    /// Radial position r = R - delta mapped to the grading variable s.
    pub fn s_of_delta(&self, delta: f64) -> f64 {
        1.0 - (delta / self.domain.radius).max(0.0).powf(1.0 / self.spec.gamma)
    }
}

/// Sphere of radius R - eps sampled at the angular nodes.
#[derive(Debug, Clone)]
pub struct Layer {
    pub eps: f64,
    pub radius: f64,
    pub points: Vec<Vec<f64>>,
    /// Radial projection onto the boundary.
    pub sigma: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

pub fn layer(domain: &BallDomain, grid: &PolarGrid, eps: f64) -> Result<Layer> {
    let eps0 = domain.radius / 2.0;
    if !(eps > 0.0 && eps < eps0) {
        return Err(Error::domain(format!("layer depth {eps} outside (0, {eps0})")));
    }
    let rho = domain.radius - eps;
    let k = grid.k();
    let mut points = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    for j in 0..k {
        let e = grid.boundary_point(j);
        let unit: Vec<f64> = e.iter().map(|c| c / domain.radius).collect();
        points.push(unit.iter().map(|c| c * rho).collect());
        sigma.push(e);
    }
    let weights = if domain.dimension == 2 {
        vec![rho * grid.dtheta; k]
    } else {
        vec![4.0 * PI * rho * rho]
    };
    Ok(Layer { eps, radius: rho, points, sigma, weights })
}

/// Fine tabulation of the radial eigenfunction with cubic Hermite lookup.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    r: Vec<f64>,
    f: Vec<f64>,
    df: Vec<f64>,
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_derivative(r).0
    }

    pub fn eval_with_derivative(&self, r: f64) -> (f64, f64) {
        let n = self.r.len();
        let r = r.clamp(0.0, self.r[n - 1]);
        let pos = self.r.partition_point(|&x| x <= r);
        let i = pos.saturating_sub(1).min(n - 2);
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.f[i] + h10 * h * self.df[i] + h01 * self.f[i + 1] + h11 * h * self.df[i + 1];
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let d = d00 * self.f[i] + d10 * self.df[i] + d01 * self.f[i + 1] + d11 * self.df[i + 1];
        (v, d)
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    /// phi sampled on the radial nodes of the grid it was built for.
    pub phi: Vec<f64>,
    pub profile: RadialProfile,
    /// Sup of |phi'' + (N-1)/r phi' + lambda phi| on interior radial nodes.
    pub residual: f64,
    /// Comparability constants c1 delta <= phi <= c2 delta.
    pub c1: f64,
    pub c2: f64,
}

impl Eigenpair {
    pub fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    /// Outward normal derivative at the boundary (negative).
    pub fn normal_derivative(&self) -> f64 {
        let n = self.profile.r.len();
        self.profile.df[n - 1]
    }
}

const SHOOT_STEPS: usize = 20_000;

fn shoot(n: usize, rr: f64, lambda: f64, keep: bool) -> (f64, Option<RadialProfile>) {
    let nm1 = (n - 1) as f64;
    let nn = n as f64;
    let r0 = 1e-4 * rr;
    let y0 = 1.0 - lambda * r0 * r0 / (2.0 * nn) + lambda * lambda * r0.powi(4) / (8.0 * nn * (nn + 2.0));
    let d0 = -lambda * r0 / nn + lambda * lambda * r0.powi(3) / (2.0 * nn * (nn + 2.0));
    let rhs = |r: f64, y: f64, d: f64| -> (f64, f64) { (d, -nm1 / r * d - lambda * y) };
    let h = (rr - r0) / SHOOT_STEPS as f64;
    let (mut y, mut d, mut r) = (y0, d0, r0);
    let mut tab = if keep {
        Some((vec![0.0, r0], vec![1.0, y0], vec![0.0, d0]))
    } else {
        None
    };
    for s in 0..SHOOT_STEPS {
        let (k1y, k1d) = rhs(r, y, d);
        let (k2y, k2d) = rhs(r + 0.5 * h, y + 0.5 * h * k1y, d + 0.5 * h * k1d);
        let (k3y, k3d) = rhs(r + 0.5 * h, y + 0.5 * h * k2y, d + 0.5 * h * k2d);
        let (k4y, k4d) = rhs(r + h, y + h * k3y, d + h * k3d);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        d += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        r = if s + 1 == SHOOT_STEPS { rr } else { r0 + (s + 1) as f64 * h };
        if let Some((tr, tf, td)) = tab.as_mut() {
            tr.push(r);
            tf.push(y);
            td.push(d);
        }
    }
    (y, tab.map(|(r, f, df)| RadialProfile { r, f, df }))
}

/// First Dirichlet eigenpair of -Laplace on the ball by radial shooting,
/// normalized phi(0) = 1. Independent of the grid resolution.
pub fn eigenpair_profile(domain: &BallDomain) -> Result<(f64, RadialProfile)> {
    let n = domain.dimension;
    let rr = domain.radius;
    let scale = 1.0 / (rr * rr);
    let step = 0.5 * scale;
    let mut lo = step;
    let mut flo = shoot(n, rr, lo, false).0;
    let mut trace = vec![flo];
    let mut hi = lo;
    let mut found = false;
    for _ in 0..200 {
        hi = lo + step;
        let fhi = shoot(n, rr, hi, false).0;
        trace.push(fhi);
        if fhi.signum() != flo.signum() {
            found = true;
            break;
        }
        lo = hi;
        flo = fhi;
    }
    if !found {
        return Err(Error::numerical("no sign change of phi(R) while bracketing lambda", trace));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = shoot(n, rr, mid, false).0;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    if hi - lo > 1e-12 * hi {
        return Err(Error::numerical("eigenvalue bisection did not converge", vec![lo, hi]));
    }
    let lambda = 0.5 * (lo + hi);
    let (_, prof) = shoot(n, rr, lambda, true);
    let mut prof = prof.expect("profile requested");
    let last = prof.f.len() - 1;
    prof.f[last] = 0.0;
    Ok((lambda, prof))
}

pub fn first_eigenpair(domain: &BallDomain, grid: &PolarGrid) -> Result<Eigenpair> {
    if grid.m() < 256 {
        return Err(Error::domain(format!(
            "eigenpair needs >= 256 radial nodes, grid has {}",
            grid.m()
        )));
    }
    eigenpair_on(domain, grid)
}

/// Same as `first_eigenpair` without the resolution precondition; used by
/// modules that only need phi sampled on coarse grids.
pub fn eigenpair_on(domain: &BallDomain, grid: &PolarGrid) -> Result<Eigenpair> {
    let (lambda, profile) = eigenpair_profile(domain)?;
    let rn = &grid.radial_nodes;
    let m = grid.m();
    let mut phi: Vec<f64> = rn.iter().map(|&r| profile.eval(r)).collect();
    phi[m] = 0.0;
    let nm1 = (domain.dimension - 1) as f64;
    let mut residual: f64 = 0.0;
    for i in 1..m {
        let lo = i.saturating_sub(3).min(m.saturating_sub(6));
        let hi = (lo + 7).min(m + 1);
        let xs = &rn[lo..hi];
        let w = fornberg(rn[i], xs, 2);
        let fs = &phi[lo..hi];
        let d1: f64 = w[1].iter().zip(fs).map(|(a, b)| a * b).sum();
        let d2: f64 = w[2].iter().zip(fs).map(|(a, b)| a * b).sum();
        let res = d2 + nm1 / rn[i] * d1 + lambda * phi[i];
        residual = residual.max(res.abs());
    }
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for i in 0..m {
        let q = phi[i] / (domain.radius - rn[i]);
        c1 = c1.min(q);
        c2 = c2.max(q);
    }
    Ok(Eigenpair { lambda, phi, profile, residual, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let d = BallDomain::unit_disk();
        assert_eq!(d.distance_to_boundary(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(d.distance_to_boundary(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((d.distance_to_boundary(&[0.75, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(d.distance_to_boundary(&[1.5, 0.0]).is_err());
        assert!(BallDomain::new(4, 1.0).is_err());
        assert!(BallDomain::new(2, 0.0).is_err());
    }

    #[test]
    fn grid_volume_and_boundary_sums() {
        let g = PolarGrid::new(GridSpec::default_disk()).unwrap();
        let vol: f64 = g.cell_volumes.iter().sum();
        assert!((vol - PI).abs() <= 1e-8 * PI);
        let bl: f64 = g.boundary_weights.iter().sum();
        assert!((bl - 2.0 * PI).abs() <= 1e-10 * 2.0 * PI);
        let r2: Vec<f64> = (0..g.len()).map(|n| g.radial_nodes[g.ring_of(n)].powi(2)).collect();
        assert!((g.integrate(&r2) - PI / 2.0).abs() <= 1e-6 * PI / 2.0);
    }

    #[test]
    fn grading_widths_nonincreasing() {
        let g = PolarGrid::new(GridSpec::default_disk()).unwrap();
        let w: Vec<f64> = g.radial_nodes.windows(2).map(|p| p[1] - p[0]).collect();
        assert!(w.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn layer_circumference() {
        let d = BallDomain::unit_disk();
        let g = PolarGrid::new(GridSpec::disk(64, 64)).unwrap();
        let l = layer(&d, &g, 0.25).unwrap();
        let total: f64 = l.weights.iter().sum();
        assert!((total - 2.0 * PI * 0.75).abs() < 1e-10);
        let s = &l.sigma[5];
        assert!((norm(s) - 1.0).abs() < 1e-15);
        assert!(layer(&d, &g, 0.5).is_err());
    }

    #[test]
    fn eigenpair_sign_and_shape() {
        let d = BallDomain::unit_disk();
        let g = PolarGrid::new(GridSpec::default_disk()).unwrap();
        let e = first_eigenpair(&d, &g).unwrap();
        assert_eq!(e.phi[256], 0.0);
        assert!((e.phi[0] - 1.0).abs() < 1e-12);
        assert!(e.phi.windows(2).all(|p| p[1] < p[0]));
        assert!(e.residual <= 1e-6 * e.lambda, "residual {}", e.residual);
        assert!(e.c1 > 0.0 && e.c1 <= e.c2);
        let coarse = PolarGrid::new(GridSpec::disk(64, 64)).unwrap();
        assert!(first_eigenpair(&d, &coarse).is_err());
    }
}
