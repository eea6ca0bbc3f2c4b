//! Poisson and Green kernels of the ball, boundary measures, grid fields and
//! the operators K[mu] and G[f].

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{dist, norm, BallDomain, Eigenpair, PolarGrid};
use crate::error::{Error, Result};
use crate::operator::{self, Operator, SolveReport};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Angle of the boundary point (N=2).
    pub theta: f64,
    pub mass: f64,
}

/// Boundary measure: point masses plus a density that is constant on each
/// boundary cell (per unit arclength, cell j centred at angle j*dtheta).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub atoms: Vec<Atom>,
    pub density: Vec<f64>,
    pub nonnegative: bool,
}

impl BoundaryMeasure {
    pub fn zero(grid: &PolarGrid) -> Self {
        BoundaryMeasure { atoms: vec![], density: vec![0.0; grid.k()], nonnegative: true }
    }

    /// c times surface measure.
    pub fn uniform(grid: &PolarGrid, c: f64) -> Self {
        BoundaryMeasure { atoms: vec![], density: vec![c; grid.k()], nonnegative: c >= 0.0 }
    }

    /// Density sampled at the boundary nodes.
    pub fn from_density<F: Fn(f64) -> f64>(grid: &PolarGrid, f: F) -> Self {
        let density: Vec<f64> = grid.angular_nodes.iter().map(|&t| f(t)).collect();
        let nonnegative = density.iter().all(|&x| x >= 0.0);
        BoundaryMeasure { atoms: vec![], density, nonnegative }
    }

    pub fn dirac(grid: &PolarGrid, theta: f64, mass: f64) -> Self {
        BoundaryMeasure {
            atoms: vec![Atom { theta: theta.rem_euclid(2.0 * PI), mass }],
            density: vec![0.0; grid.k()],
            nonnegative: mass >= 0.0,
        }
    }

    pub fn is_density_only(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self, grid: &PolarGrid) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.mass.abs()).sum();
        let d: f64 = self.density.iter().zip(&grid.boundary_weights).map(|(x, w)| x.abs() * w).sum();
        a + d
    }

    pub fn total_mass(&self, grid: &PolarGrid) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let d: f64 = self.density.iter().zip(&grid.boundary_weights).map(|(x, w)| x * w).sum();
        a + d
    }

    pub fn scaled(&self, c: f64) -> Self {
        BoundaryMeasure {
            atoms: self.atoms.iter().map(|a| Atom { theta: a.theta, mass: c * a.mass }).collect(),
            density: self.density.iter().map(|x| c * x).collect(),
            nonnegative: self.nonnegative && c >= 0.0,
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().copied());
        BoundaryMeasure {
            atoms,
            density: self.density.iter().zip(&other.density).map(|(a, b)| a + b).collect(),
            nonnegative: self.nonnegative && other.nonnegative,
        }
    }

    /// Mass carried by boundary cells in `nodes` (atoms by nearest node).
    pub fn mass_on(&self, grid: &PolarGrid, nodes: &[usize]) -> f64 {
        let mut sel = vec![false; grid.k()];
        for &j in nodes {
            sel[j] = true;
        }
        let d: f64 = (0..grid.k()).filter(|&j| sel[j]).map(|j| self.density[j] * grid.boundary_weights[j]).sum();
        let a: f64 = self.atoms.iter().filter(|a| sel[grid.nearest_angle(a.theta)]).map(|a| a.mass).sum();
        d + a
    }

    /// Fourier coefficients  hat mu_n = ∫ e^{-i n θ} dmu  for n = 0..=nmax,
    /// as (re, im) pairs.
    pub fn fourier(&self, grid: &PolarGrid, nmax: usize) -> Vec<(f64, f64)> {
        let dt = grid.dtheta;
        (0..=nmax)
            .map(|n| {
                let nf = n as f64;
                let x = 0.5 * nf * dt;
                let sinc = if n == 0 { 1.0 } else { x.sin() / x };
                let mut re = 0.0;
                let mut im = 0.0;
                for (j, &rho) in self.density.iter().enumerate() {
                    let t = grid.angular_nodes[j];
                    let w = rho * grid.boundary_weights[j] * sinc;
                    re += w * (nf * t).cos();
                    im -= w * (nf * t).sin();
                }
                for a in &self.atoms {
                    re += a.mass * (nf * a.theta).cos();
                    im -= a.mass * (nf * a.theta).sin();
                }
                (re, im)
            })
            .collect()
    }
}

/// Nodal values on a polar grid (layout described on `PolarGrid`).
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<PolarGrid>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<PolarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!("field has {} values, grid has {} nodes", values.len(), grid.len())));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let n = grid.len();
        Field { grid, values: vec![0.0; n] }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync + Send>(grid: Arc<PolarGrid>, f: F) -> Self {
        let g = grid.clone();
        let values = par::map_range(g.len(), |n| {
            let r = g.radial_nodes[g.ring_of(n)];
            let t = g.angular_nodes[g.angle_of(n)];
            f(r, t)
        });
        Field { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Sup norm over nodes with distance to the boundary at least `min_delta`.
    pub fn sup_norm_where(&self, min_delta: f64) -> f64 {
        let g = &self.grid;
        self.values
            .iter()
            .enumerate()
            .filter(|(n, _)| g.delta_of(*n) >= min_delta && !g.is_boundary(*n))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn interior_sup(&self) -> f64 {
        self.sup_norm_where(0.0)
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Bilinear interpolation in (r, θ) at polar coordinates.
    pub fn interpolate_polar(&self, r: f64, theta: f64) -> f64 {
        let g = &self.grid;
        let rn = &g.radial_nodes;
        let r = r.clamp(0.0, g.domain.radius);
        let i = rn.partition_point(|&x| x <= r).saturating_sub(1).min(g.m() - 1);
        let tr = (r - rn[i]) / (rn[i + 1] - rn[i]);
        let k = g.k();
        let t = theta.rem_euclid(2.0 * PI) / g.dtheta;
        let j0 = (t.floor() as usize) % k;
        let j1 = (j0 + 1) % k;
        let ta = t - t.floor();
        let ring = |ii: usize| -> f64 {
            if ii == 0 {
                self.values[0]
            } else {
                (1.0 - ta) * self.at(ii, j0) + ta * self.at(ii, j1)
            }
        };
        (1.0 - tr) * ring(i) + tr * ring(i + 1)
    }

    /// Radial profile along angle index j (index 0 = centre).
    pub fn ray(&self, j: usize) -> Vec<f64> {
        (0..=self.grid.m()).map(|i| self.at(i, j)).collect()
    }
}

/// Poisson kernel (R^2 - |x|^2) / (ω_{N-1} R |x - y|^N).
pub fn poisson_kernel(domain: &BallDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    let rx = domain.check_point(x)?;
    if rx >= domain.radius {
        return Err(Error::domain("Poisson kernel needs an interior point x"));
    }
    if y.len() != domain.dimension || (norm(y) - domain.radius).abs() > 1e-9 * domain.radius {
        return Err(Error::domain("Poisson kernel needs y on the boundary sphere"));
    }
    let d = dist(x, y);
    let rr = domain.radius;
    Ok((rr * rr - rx * rx) / (domain.unit_sphere_area() * rr * d.powi(domain.dimension as i32)))
}

/// Green function of -Δ in the ball with zero boundary values.
pub fn green_kernel(domain: &BallDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    let rx = domain.check_point(x)?;
    let ry = domain.check_point(y)?;
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::domain("Green function evaluated on its pole"));
    }
    Ok(green_unchecked(domain, rx, ry, x.iter().zip(y).map(|(a, b)| a * b).sum(), d))
}

pub(crate) fn green_unchecked(domain: &BallDomain, rx: f64, ry: f64, xy: f64, d: f64) -> f64 {
    let rr = domain.radius;
    let q = (rx * rx * ry * ry / (rr * rr) - 2.0 * xy + rr * rr).max(0.0);
    if domain.dimension == 2 {
        (q / (d * d)).ln() / (4.0 * PI)
    } else {
        (1.0 / d - 1.0 / q.sqrt()) / (4.0 * PI)
    }
}

/// Antiderivative in the angle difference of the disk Poisson kernel
/// (harmonic measure seen from a point at radius r), continued so that
/// F(t + 2π) = F(t) + 1.
pub fn poisson_angle_cdf(radius: f64, r: f64, t: f64) -> f64 {
    let wraps = ((t + PI) / (2.0 * PI)).floor();
    let tt = t - wraps * 2.0 * PI;
    let h = 0.5 * tt;
    let base = ((radius + r) * h.sin()).atan2((radius - r) * h.cos()) / PI;
    base + wraps
}

/// Harmonic measure of the boundary arc between angle offsets a < b, seen
/// from a point at radius r (offsets relative to the point's direction).
pub fn arc_harmonic_measure(radius: f64, r: f64, a: f64, b: f64) -> f64 {
    poisson_angle_cdf(radius, r, b) - poisson_angle_cdf(radius, r, a)
}

/// Harmonic measure of each boundary cell at angular offset d = 0..K-1 as
/// seen from radius r. Sums to 1.
pub fn poisson_cell_weights(grid: &PolarGrid, r: f64) -> Vec<f64> {
    let k = grid.k();
    let dt = grid.dtheta;
    let rr = grid.domain.radius;
    (0..k)
        .map(|d| {
            let c = d as f64 * dt;
            let c = if c > PI { c - 2.0 * PI } else { c };
            arc_harmonic_measure(rr, r, c - 0.5 * dt, c + 0.5 * dt)
        })
        .collect()
}

fn check_grid_dimension(grid: &PolarGrid, mu: &BoundaryMeasure) -> Result<()> {
    if mu.density.len() != grid.k() {
        return Err(Error::domain(format!(
            "measure has {} density cells, grid boundary has {}",
            mu.density.len(),
            grid.k()
        )));
    }
    if grid.domain.dimension == 3 && !mu.atoms.is_empty() {
        return Err(Error::domain("atoms are not supported on radial-only N=3 grids"));
    }
    Ok(())
}

/// K[mu] at every grid node: exact cell integrals of the kernel against the
/// piecewise-constant density plus exact kernel values for atoms. The
/// boundary ring holds the density values (atoms do not appear there).
pub fn poisson_extend(grid: &Arc<PolarGrid>, mu: &BoundaryMeasure) -> Result<Field> {
    check_grid_dimension(grid, mu)?;
    let g = grid.clone();
    let (m, k) = (g.m(), g.k());
    let rr = g.domain.radius;
    let mut values = vec![0.0; g.len()];
    if g.domain.dimension == 3 {
        for v in values.iter_mut() {
            *v = mu.density[0];
        }
        return Field::new(grid.clone(), values);
    }
    let dens_nonzero = mu.density.iter().any(|&x| x != 0.0);
    let ring = |i: usize| -> Vec<f64> {
        let r = g.radial_nodes[i];
        let mut row = vec![0.0; k];
        if dens_nonzero {
            let w = poisson_cell_weights(&g, r);
            for (j, out) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for (l, &rho) in mu.density.iter().enumerate() {
                    if rho != 0.0 {
                        s += rho * w[(j + k - l) % k];
                    }
                }
                *out = s;
            }
        }
        for a in &mu.atoms {
            for (j, out) in row.iter_mut().enumerate() {
                let t = g.angular_nodes[j];
                let d2 = r * r + rr * rr - 2.0 * r * rr * (t - a.theta).cos();
                *out += a.mass * (rr * rr - r * r) / (2.0 * PI * rr * d2);
            }
        }
        row
    };
    let rows = par::map_range(m - 1, |ii| ring(ii + 1));
    values[0] = ring(0)[0];
    for (ii, row) in rows.into_iter().enumerate() {
        let b = g.idx(ii + 1, 0);
        values[b..b + k].copy_from_slice(&row);
    }
    let b = g.idx(m, 0);
    values[b..b + k].copy_from_slice(&mu.density);
    Field::new(grid.clone(), values)
}

/// K[mu](x) at an arbitrary interior point.
pub fn poisson_extend_at(grid: &PolarGrid, mu: &BoundaryMeasure, x: &[f64]) -> Result<f64> {
    check_grid_dimension(grid, mu)?;
    let d = &grid.domain;
    let r = d.check_point(x)?;
    if r >= d.radius {
        return Err(Error::domain("K[mu] evaluated on the boundary"));
    }
    if d.dimension == 3 {
        return Ok(mu.density[0]);
    }
    let tx = x[1].atan2(x[0]);
    let dt = grid.dtheta;
    let mut s = 0.0;
    for (l, &rho) in mu.density.iter().enumerate() {
        if rho != 0.0 {
            let c = grid.angular_nodes[l] - tx;
            s += rho * arc_harmonic_measure(d.radius, r, c - 0.5 * dt, c + 0.5 * dt);
        }
    }
    for a in &mu.atoms {
        let y = [d.radius * a.theta.cos(), d.radius * a.theta.sin()];
        s += a.mass * poisson_kernel(d, x, &y)?;
    }
    Ok(s)
}

/// ∫ K(x, y) dS(y) by adaptive quadrature of the kernel itself (no closed
/// form), refined toward the boundary point nearest to x.
pub fn harmonic_measure_total(domain: &BallDomain, x: &[f64]) -> Result<f64> {
    let r = domain.check_point(x)?;
    let rr = domain.radius;
    if domain.dimension == 3 {
        // axisymmetric: integrate over the polar angle
        let f = |t: f64| {
            let d2 = r * r + rr * rr - 2.0 * r * rr * t.cos();
            (rr * rr - r * r) / (4.0 * PI * rr * d2.powf(1.5)) * 2.0 * PI * rr * rr * t.sin()
        };
        return Ok(crate::quad::adaptive(0.0, PI, 1e-13, f));
    }
    let tx = x[1].atan2(x[0]);
    let f = |t: f64| {
        let y = [rr * (tx + t).cos(), rr * (tx + t).sin()];
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        (rr * rr - r * r) / (2.0 * PI * rr * d2) * rr
    };
    let delta = (rr - r).max(1e-300);
    let mut edges = vec![0.0];
    let mut e = (delta / rr).min(PI);
    while e < PI {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(PI);
    let mut s = 0.0;
    for w in edges.windows(2) {
        s += crate::quad::adaptive(w[0], w[1], 1e-14, f);
        s += crate::quad::adaptive(-w[1], -w[0], 1e-14, f);
    }
    Ok(s)
}

/// G[f] by solving the discrete Dirichlet problem -Δw = f, w = 0 on the
/// boundary.
pub fn green_apply(op: &Arc<Operator>, f: &Field) -> Result<(Field, SolveReport)> {
    let g = &op.grid;
    let mut rhs = f.values.clone();
    for (n, x) in rhs.iter_mut().enumerate() {
        if g.is_boundary(n) {
            *x = 0.0;
        } else if !x.is_finite() {
            return Err(Error::domain(format!("source is not finite at node {n}")));
        }
    }
    let zero = vec![0.0; g.len()];
    let (w, rep) = operator::solve(op, &zero, &rhs, 1e-10)?;
    Ok((Field::new(g.clone(), w)?, rep))
}

/// G[f] at selected nodes by kernel quadrature over finite-volume cells,
/// with f constant per cell. Cells next to the pole use 4 levels of 2x2
/// subdivision; the centre disk is integrated in polar coordinates.
pub fn green_apply_quadrature(grid: &PolarGrid, f: &[f64], targets: &[usize]) -> Vec<f64> {
    let d = grid.domain;
    assert_eq!(d.dimension, 2, "kernel quadrature of G is implemented for the disk");
    let (m, k) = (grid.m(), grid.k());
    let rn = &grid.radial_nodes;
    let face: Vec<f64> = (0..m).map(|i| 0.5 * (rn[i] + rn[i + 1])).collect();
    let dt = grid.dtheta;
    let gl2 = crate::quad::GaussLegendre::new(2);
    let gl4 = crate::quad::GaussLegendre::new(4);
    par::map_slice(targets, |&t| {
        let x = grid.coords(t);
        let rx = norm(&x);
        let it = grid.ring_of(t);
        let jt = grid.angle_of(t);
        let gfun = |r: f64, th: f64| -> f64 {
            let z = [r * th.cos(), r * th.sin()];
            let dd = dist(&x, &z);
            if dd == 0.0 {
                return 0.0;
            }
            green_unchecked(&d, rx, r, x[0] * z[0] + x[1] * z[1], dd) * r
        };
        let cell_int = |r0: f64, r1: f64, t0: f64, t1: f64, depth: u32| -> f64 {
            let mut s = 0.0;
            let n = 1usize << depth;
            for a in 0..n {
                let ra = r0 + (r1 - r0) * a as f64 / n as f64;
                let rb = r0 + (r1 - r0) * (a + 1) as f64 / n as f64;
                for b in 0..n {
                    let ta = t0 + (t1 - t0) * b as f64 / n as f64;
                    let tb = t0 + (t1 - t0) * (b + 1) as f64 / n as f64;
                    for (rq, wr) in gl2.on(ra, rb) {
                        for (tq, wt) in gl2.on(ta, tb) {
                            s += wr * wt * gfun(rq, tq);
                        }
                    }
                }
            }
            s
        };
        let mut total = 0.0;
        // centre disk
        if f[0] != 0.0 {
            let mut s = 0.0;
            let depth = if it <= 1 { 4 } else { 0 };
            let nr = 1usize << depth;
            for a in 0..nr {
                let ra = face[0] * a as f64 / nr as f64;
                let rb = face[0] * (a + 1) as f64 / nr as f64;
                for (rq, wr) in gl4.on(ra, rb) {
                    for b in 0..(4 * nr) {
                        let ta = 2.0 * PI * b as f64 / (4 * nr) as f64;
                        let tb = 2.0 * PI * (b + 1) as f64 / (4 * nr) as f64;
                        for (tq, wt) in gl4.on(ta, tb) {
                            s += wr * wt * gfun(rq, tq);
                        }
                    }
                }
            }
            total += f[0] * s;
        }
        for i in 1..m {
            for j in 0..k {
                let fv = f[grid.idx(i, j)];
                if fv == 0.0 {
                    continue;
                }
                let dj = ((j + k - jt) % k).min((jt + k - j) % k);
                let near = (i as isize - it as isize).abs() <= 1 && dj <= 1;
                let depth = if near { 4 } else { 0 };
                let t0 = grid.angular_nodes[j] - 0.5 * dt;
                total += fv * cell_int(face[i - 1], face[i], t0, t0 + dt, depth);
            }
        }
        total
    })
}

/// Empirical constant c in c^{-1} phi/|x-y|^N <= K <= c phi/|x-y|^N, from
/// an exhaustive scan over interior nodes and boundary nodes.
pub fn kernel_bound_constant(grid: &PolarGrid, eigen: &Eigenpair) -> (f64, f64, f64) {
    let d = grid.domain;
    let n_nodes = grid.len();
    let interior: Vec<usize> = (0..n_nodes).filter(|&n| !grid.is_boundary(n)).collect();
    let k = grid.k();
    let stats = par::map_slice(&interior, |&n| {
        let x = grid.coords(n);
        let phi = eigen.phi[grid.ring_of(n)];
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for j in 0..k {
            let y = grid.boundary_point(j);
            let kv = poisson_kernel(&d, &x, &y).unwrap_or(0.0);
            let q = kv * dist(&x, &y).powi(d.dimension as i32) / phi;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        (lo, hi)
    });
    let lo = stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    (lo, hi, hi.max(1.0 / lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridSpec;

    #[test]
    fn poisson_kernel_at_centre_is_uniform() {
        let d = BallDomain::unit_disk();
        for t in [0.0f64, 1.0, 2.5] {
            let k = poisson_kernel(&d, &[0.0, 0.0], &[t.cos(), t.sin()]).unwrap();
            assert!((k - 1.0 / (2.0 * PI)).abs() < 1e-15);
        }
        assert!(poisson_kernel(&d, &[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn green_examples() {
        let d = BallDomain::unit_disk();
        let y = [0.3, -0.4];
        let g = green_kernel(&d, &[0.0, 0.0], &y).unwrap();
        assert!((g + (0.5f64).ln() / (2.0 * PI)).abs() < 1e-14);
        let d3 = BallDomain::unit_ball3();
        let y3 = [0.2, 0.1, -0.3];
        let g3 = green_kernel(&d3, &[0.0, 0.0, 0.0], &y3).unwrap();
        let r = norm(&y3);
        assert!((g3 - (1.0 / r - 1.0) / (4.0 * PI)).abs() < 1e-14);
        assert!(green_kernel(&d, &y, &y).is_err());
    }

    #[test]
    fn arc_measure_total_and_closed_form() {
        let r = 0.9;
        let total = arc_harmonic_measure(1.0, r, -PI, PI);
        assert!((total - 1.0).abs() < 1e-15);
        let d = BallDomain::unit_disk();
        let x = [r, 0.0];
        let direct = crate::quad::adaptive(0.2, 0.7, 1e-14, |t| {
            poisson_kernel(&d, &x, &[t.cos(), t.sin()]).unwrap()
        });
        assert!((arc_harmonic_measure(1.0, r, 0.2, 0.7) - direct).abs() < 1e-12);
        // wrap-around arc
        let wrap = arc_harmonic_measure(1.0, r, 3.0, 3.5);
        let direct = crate::quad::adaptive(3.0, 3.5, 1e-14, |t| {
            poisson_kernel(&d, &x, &[t.cos(), t.sin()]).unwrap()
        });
        assert!((wrap - direct).abs() < 1e-12);
    }

    #[test]
    fn extension_of_surface_measure_is_one() {
        let g = Arc::new(PolarGrid::new(GridSpec::disk(32, 32)).unwrap());
        let f = poisson_extend(&g, &BoundaryMeasure::uniform(&g, 1.0)).unwrap();
        assert!(f.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn atom_extension_matches_kernel() {
        let g = Arc::new(PolarGrid::new(GridSpec::disk(16, 16)).unwrap());
        let mu = BoundaryMeasure::dirac(&g, 0.3, 2.0);
        let f = poisson_extend(&g, &mu).unwrap();
        let d = g.domain;
        let n = g.idx(5, 3);
        let x = g.coords(n);
        let want = 2.0 * poisson_kernel(&d, &x, &[0.3f64.cos(), 0.3f64.sin()]).unwrap();
        assert!((f.values[n] - want).abs() < 1e-13);
        let at = poisson_extend_at(&g, &mu, &x).unwrap();
        assert!((at - want).abs() < 1e-13);
    }

    #[test]
    fn fourier_of_uniform_measure() {
        let g = PolarGrid::new(GridSpec::disk(16, 32)).unwrap();
        let c = BoundaryMeasure::uniform(&g, 1.0).fourier(&g, 3);
        assert!((c[0].0 - 2.0 * PI).abs() < 1e-12);
        assert!(c[1].0.abs() < 1e-12 && c[2].1.abs() < 1e-12);
    }
}
