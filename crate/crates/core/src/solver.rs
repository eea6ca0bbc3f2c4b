//! Discrete solutions of -Δu + Vu = 0 with boundary data.
//!
//! Every solve is written as u = K[μ] - w with K[μ] evaluated exactly and
//! w the discrete solution of (-Δ + V) w = V K[μ], w = 0 on the boundary.
//! Then w = G_h[V u] holds to solver precision, so u + G_h[Vu] = K[μ] is an
//! identity of the scheme rather than an approximation.

use serde::{Deserialize, Serialize};

use crate::domain::{BallDomain, PolarGrid};
use crate::error::{Error, Result};
use crate::kernels::{green_apply, poisson_extend, BoundaryMeasure, Field};
use crate::lab::Lab;
use crate::operator::{self, SolveReport};
use crate::par;
use crate::potentials::Potential;
use crate::quad::fornberg;

pub const DEFAULT_TOL: f64 = 1e-8;
/// Default truncation levels k_j = 4^j, j = 0..=8.
pub fn default_schedule() -> Vec<f64> {
    (0..=8).map(|j| 4f64.powi(j)).collect()
}

/// Default mollification width: 3 boundary cells (arclength).
pub fn default_atom_width(grid: &PolarGrid) -> f64 {
    3.0 * grid.dtheta * grid.domain.radius
}

// u = K - w with (-Δ_h + V)w = (-Δ_h + V)K, w = 0 on ∂Ω: the plain
// finite-difference solution, lifted by the exact harmonic extension so that
// the right-hand side is small and smooth.
fn lifted_solve(lab: &Lab, v: &[f64], kmu: &Field, tol: f64) -> Result<(Field, SolveReport)> {
    let g = &lab.grid;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("potential is not finite on the grid"));
    }
    let mut rhs = lab.op.apply(&kmu.values, Some(v));
    let base = g.idx(g.m(), 0);
    for x in &mut rhs[base..] {
        *x = 0.0;
    }
    let (w, rep) = operator::solve(&lab.op, v, &rhs, tol)?;
    let mut u: Vec<f64> = kmu.values.iter().zip(&w).map(|(k, w)| k - w).collect();
    u[base..].copy_from_slice(&kmu.values[base..]);
    Ok((Field::new(g.clone(), u)?, rep))
}

/// Discrete harmonic extension of density data: -Δ_h K_h = 0 inside,
/// K_h = K[g] on the boundary ring. The chains are certified against it.
pub fn discrete_harmonic(lab: &Lab, g: &BoundaryMeasure) -> Result<Field> {
    let kmu = poisson_extend(&lab.grid, g)?;
    let zero = vec![0.0; lab.grid.len()];
    Ok(lifted_solve(lab, &zero, &kmu, DEFAULT_TOL)?.0)
}

/// Solve with bounded V and density-only data g.
pub fn solve_dirichlet(lab: &Lab, v: &Potential, g: &BoundaryMeasure) -> Result<(Field, SolveReport)> {
    if !g.is_density_only() {
        return Err(Error::domain("boundary data must be a density; mollify atoms first"));
    }
    let vs = v.sample(&lab.grid);
    let kmu = poisson_extend(&lab.grid, g)?;
    lifted_solve(lab, &vs, &kmu, DEFAULT_TOL)
}

/// Same as `solve_dirichlet` with V given by nodal values.
pub fn solve_dirichlet_sampled(lab: &Lab, v: &[f64], g: &BoundaryMeasure) -> Result<(Field, SolveReport)> {
    if !g.is_density_only() {
        return Err(Error::domain("boundary data must be a density; mollify atoms first"));
    }
    let kmu = poisson_extend(&lab.grid, g)?;
    lifted_solve(lab, v, &kmu, DEFAULT_TOL)
}

/// Cumulative distribution of the unit hat of half-width h centred at 0.
fn hat_cdf(t: f64, h: f64) -> f64 {
    if t <= -h {
        0.0
    } else if t >= h {
        1.0
    } else if t <= 0.0 {
        0.5 * (t + h).powi(2) / (h * h)
    } else {
        1.0 - 0.5 * (h - t).powi(2) / (h * h)
    }
}

/// Replace each atom by a hat density of the same mass supported on an arc
/// of the given arclength width, integrated exactly over boundary cells.
pub fn mollify_atoms(grid: &PolarGrid, mu: &BoundaryMeasure, width: f64) -> Result<BoundaryMeasure> {
    if mu.atoms.is_empty() {
        return Ok(mu.clone());
    }
    if grid.domain.dimension != 2 {
        return Err(Error::domain("atoms are only supported on the disk"));
    }
    let rr = grid.domain.radius;
    let spacing = grid.dtheta * rr;
    if width < spacing * (1.0 - 1e-12) {
        return Err(Error::domain(format!("mollification width {width} below mesh spacing {spacing}")));
    }
    let h = 0.5 * width / rr;
    let dt = grid.dtheta;
    let k = grid.k();
    let mut density = mu.density.clone();
    for a in &mu.atoms {
        let span = (h / dt).ceil() as i64 + 1;
        let jc = (a.theta / dt).round() as i64;
        for jj in (jc - span)..=(jc + span) {
            let j = jj.rem_euclid(k as i64) as usize;
            let c = jj as f64 * dt - a.theta;
            let frac = hat_cdf(c + 0.5 * dt, h) - hat_cdf(c - 0.5 * dt, h);
            density[j] += a.mass * frac / grid.boundary_weights[j];
        }
    }
    Ok(BoundaryMeasure { atoms: vec![], density, nonnegative: mu.nonnegative })
}

#[derive(Debug, Clone)]
pub struct MeasureSolution {
    /// Truncation levels; the final entry is +inf (untruncated grid V).
    pub levels: Vec<f64>,
    pub fields: Vec<Field>,
    pub limit: Field,
    pub poisson: Field,
    /// sup |u_last - u_previous| over interior nodes.
    pub cauchy_gap: f64,
    pub report: SolveReport,
    /// Mollified data actually used.
    pub data: BoundaryMeasure,
}

/// Truncation chain u_k = solution with min(V, k_j), followed by the
/// untruncated grid potential, with the certificate
/// 0 <= u_{k_{j+1}} <= u_{k_j} <= K_h[μ] nodewise (K_h the discrete harmonic extension).
pub fn solve_measure(
    lab: &Lab,
    v: &Potential,
    mu: &BoundaryMeasure,
    schedule: &[f64],
    atom_width: f64,
) -> Result<MeasureSolution> {
    solve_measure_tol(lab, v, mu, schedule, atom_width, DEFAULT_TOL)
}

/// `solve_measure` with an explicit relative tolerance for iterative solves.
pub fn solve_measure_tol(
    lab: &Lab,
    v: &Potential,
    mu: &BoundaryMeasure,
    schedule: &[f64],
    atom_width: f64,
    tol: f64,
) -> Result<MeasureSolution> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain("solver tolerance must lie in (0, 1)"));
    }
    if !mu.nonnegative || mu.density.iter().any(|x| *x < 0.0) || mu.atoms.iter().any(|a| a.mass < 0.0) {
        return Err(Error::domain("solve_measure needs a nonnegative measure"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) || schedule.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::domain("truncation schedule must be positive and strictly increasing"));
    }
    let data = mollify_atoms(&lab.grid, mu, atom_width)?;
    let kmu = poisson_extend(&lab.grid, &data)?;
    let full = v.sample(&lab.grid);
    let mut samples: Vec<Vec<f64>> = schedule.iter().map(|&k| full.iter().map(|x| x.min(k)).collect()).collect();
    samples.push(full);
    // V = 0 last: the discrete harmonic extension bounds the chain
    samples.push(vec![0.0; lab.grid.len()]);
    let mut levels = schedule.to_vec();
    levels.push(f64::INFINITY);
    let t0 = std::time::Instant::now();
    let solved = par::map_slice(&samples, |vs| lifted_solve(lab, vs, &kmu, tol));
    let mut fields = Vec::with_capacity(solved.len());
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    let mut method = operator::SolveMethod::Direct;
    for s in solved {
        let (f, rep) = s?;
        residual = residual.max(rep.residual);
        iterations += rep.iterations;
        if rep.method == operator::SolveMethod::Iterative {
            method = rep.method;
        }
        fields.push(f);
    }
    let kh = fields.pop().expect("harmonic level");
    let g = &lab.grid;
    let scale = kmu.interior_sup().max(1.0);
    let tol = 1e-9 * scale;
    let interior: Vec<usize> = (0..g.len()).filter(|&n| !g.is_boundary(n)).collect();
    let mut gap = f64::NEG_INFINITY;
    for n in &interior {
        gap = gap.max(fields[0].values[*n] - kh.values[*n]);
        gap = gap.max(-fields[fields.len() - 1].values[*n]);
    }
    for w in fields.windows(2) {
        for n in &interior {
            gap = gap.max(w[1].values[*n] - w[0].values[*n]);
        }
    }
    if gap > tol {
        return Err(Error::Invariant(format!(
            "truncation chain not monotone: gap {gap:.3e} exceeds {tol:.3e}"
        )));
    }
    let last = fields.len() - 1;
    let cauchy_gap = if last == 0 {
        0.0
    } else {
        interior
            .iter()
            .map(|&n| (fields[last].values[n] - fields[last - 1].values[n]).abs())
            .fold(0.0, f64::max)
    };
    let report = SolveReport {
        method,
        residual,
        iterations,
        wall_seconds: t0.elapsed().as_secs_f64(),
        monotonicity_gap: Some(gap),
    };
    Ok(MeasureSolution { levels, limit: fields[last].clone(), fields, poisson: kmu, cauchy_gap, report, data })
}

/// Outward normal derivative of a field at each boundary node, from a
/// one-sided 5-point stencil along the ray.
pub fn normal_derivative(f: &Field) -> Vec<f64> {
    let g = &f.grid;
    let m = g.m();
    let rn = &g.radial_nodes;
    let xs: Vec<f64> = (m - 4..=m).map(|i| rn[i]).collect();
    let w = fornberg(rn[m], &xs, 1);
    (0..g.k())
        .map(|j| (0..5).map(|p| w[1][p] * f.at(m - 4 + p, j)).sum())
        .collect()
}

fn boundary_pair(grid: &PolarGrid, mu: &BoundaryMeasure, dn: &[f64]) -> f64 {
    let mut s: f64 = mu.density.iter().zip(dn).zip(&grid.boundary_weights).map(|((a, b), w)| a * b * w).sum();
    let k = grid.k();
    for a in &mu.atoms {
        let t = a.theta / grid.dtheta;
        let j0 = t.floor() as usize % k;
        let fr = t - t.floor();
        s += a.mass * ((1.0 - fr) * dn[j0] + fr * dn[(j0 + 1) % k]);
    }
    s
}

/// |∫(-u Δζ + V u ζ) dx + ∫ ∂ζ/∂n dμ| with ζ = G_h[ψ].
pub fn weak_form_residual(lab: &Lab, u: &Field, v: &Potential, mu: &BoundaryMeasure, psi: &Field) -> Result<f64> {
    let (zeta, _) = green_apply(&lab.op, psi)?;
    let vs = v.sample(&lab.grid);
    let vals: Vec<f64> = (0..u.values.len())
        .map(|n| u.values[n] * psi.values[n] + vs[n] * u.values[n] * zeta.values[n])
        .collect();
    let vol = lab.grid.integrate(&vals);
    let dn = normal_derivative(&zeta);
    Ok((vol + boundary_pair(&lab.grid, mu, &dn)).abs())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RepresentationResidual {
    pub absolute: f64,
    /// Divided by sup of K[μ] over the same nodes.
    pub relative: f64,
}

/// sup over interior nodes of |u + G_h[V u] - K[μ]|.
pub fn representation_residual(lab: &Lab, u: &Field, v: &Potential, mu: &BoundaryMeasure) -> Result<RepresentationResidual> {
    let vs = v.sample(&lab.grid);
    let f = Field::new(lab.grid.clone(), u.values.iter().zip(&vs).map(|(a, b)| a * b).collect())?;
    let (gvu, _) = green_apply(&lab.op, &f)?;
    let kmu = poisson_extend(&lab.grid, mu)?;
    let g = &lab.grid;
    let mut abs: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for n in 0..g.len() {
        if g.is_boundary(n) {
            continue;
        }
        abs = abs.max((u.values[n] + gvu.values[n] - kmu.values[n]).abs());
        sup = sup.max(kmu.values[n].abs());
    }
    Ok(RepresentationResidual { absolute: abs, relative: if sup > 0.0 { abs / sup } else { abs } })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BrezisCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c: f64,
    pub holds: bool,
}

/// ‖u‖_{L¹} + ‖V u‖_{L¹_φ} against c ‖μ‖ with c = 1 / min(-∂η/∂n),
/// η = G_h[1].
pub fn brezis_check(lab: &Lab, u: &Field, v: &Potential, mu: &BoundaryMeasure) -> Result<BrezisCheck> {
    let g = &lab.grid;
    let one = Field::new(g.clone(), vec![1.0; g.len()])?;
    let (eta, _) = green_apply(&lab.op, &one)?;
    let dn = normal_derivative(&eta);
    let min_flux = dn.iter().map(|d| -d).fold(f64::INFINITY, f64::min);
    if !(min_flux > 0.0) {
        return Err(Error::numerical("normal derivative of G[1] is not negative", dn));
    }
    let c = 1.0 / min_flux;
    let vs = v.sample(g);
    let phi = lab.phi_field();
    let l1 = g.integrate(&u.values.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let lphi = g.integrate(&(0..g.len()).map(|n| vs[n] * u.values[n].abs() * phi[n]).collect::<Vec<_>>());
    let lhs = l1 + lphi;
    let rhs = c * mu.total_variation(g);
    Ok(BrezisCheck { lhs, rhs, c, holds: lhs <= rhs * (1.0 + 1e-9) + 1e-14 })
}

/// Fixed point of u(r) = a + c ∫_0^r s^{1-N} ∫_0^s u(t) t^{N-1} / (R-t)^2 dt ds
/// on the given nodes (trapezoid rule, first node must be 0).
pub fn radial_volterra(a: f64, c: f64, domain: &BallDomain, r_nodes: &[f64]) -> Result<Vec<f64>> {
    let rr = domain.radius;
    if !(a > 0.0) || c < 0.0 {
        return Err(Error::domain("radial_volterra needs a > 0 and c >= 0"));
    }
    if r_nodes.is_empty() || r_nodes[0] != 0.0 || r_nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("radial nodes must start at 0 and increase"));
    }
    if r_nodes.iter().any(|&r| r >= rr) {
        return Err(Error::domain("radial nodes must stay below R"));
    }
    let n = domain.dimension as i32;
    let nn = r_nodes.len();
    let mut u = vec![a; nn];
    let mut trace = vec![];
    for _ in 0..10_000 {
        let g: Vec<f64> = r_nodes.iter().zip(&u).map(|(&t, &v)| v * t.powi(n - 1) / (rr - t).powi(2)).collect();
        let mut inner = vec![0.0; nn];
        for i in 1..nn {
            inner[i] = inner[i - 1] + 0.5 * (r_nodes[i] - r_nodes[i - 1]) * (g[i] + g[i - 1]);
        }
        // s^{1-N} ∫_0^s ~ u(0) s / (N R^2) near 0
        let h: Vec<f64> = (0..nn)
            .map(|i| {
                let s = r_nodes[i];
                if s == 0.0 {
                    0.0
                } else {
                    inner[i] / s.powi(n - 1)
                }
            })
            .collect();
        let mut next = vec![a; nn];
        let mut acc = 0.0;
        for i in 1..nn {
            acc += 0.5 * (r_nodes[i] - r_nodes[i - 1]) * (h[i] + h[i - 1]);
            next[i] = a + c * acc;
        }
        let change = next.iter().zip(&u).map(|(x, y)| ((x - y) / x).abs()).fold(0.0, f64::max);
        trace.push(change);
        u = next;
        if change <= 1e-12 {
            return Ok(u);
        }
    }
    Err(Error::numerical("Volterra iteration did not converge", trace))
}

/// Nodes for `radial_volterra`: uniform on [0, R/2], then geometric in the
/// distance to R down to `delta_min`.
pub fn volterra_nodes(domain: &BallDomain, n: usize, delta_min: f64) -> Vec<f64> {
    let rr = domain.radius;
    let half = n / 2;
    let mut r: Vec<f64> = (0..half).map(|i| 0.5 * rr * i as f64 / half as f64).collect();
    let ratio = (delta_min / (0.5 * rr)).ln();
    for i in 0..=(n - half) {
        let t = i as f64 / (n - half) as f64;
        r.push(rr - 0.5 * rr * (ratio * t).exp());
    }
    r
}

/// The radial solution of (−Δ + c δ^{-2})u = 0 with u(0) = a, sampled on
/// the grid. It is infinite on ∂Ω for c > 0; the boundary ring carries the
/// value at a tenth of the last cell.
pub fn volterra_field(lab: &Lab, a: f64, c: f64) -> Result<Field> {
    let g = &lab.grid;
    let d = g.domain;
    let h = g.min_radial_spacing();
    let nodes = volterra_nodes(&d, 4000, 0.1 * h);
    let u = radial_volterra(a, c, &d, &nodes)?;
    let ring: Vec<f64> = (0..=g.m())
        .map(|i| {
            let r = g.radial_nodes[i].min(d.radius - 0.1 * h);
            interpolate_near_boundary(&d, &nodes, &u, r)
        })
        .collect();
    let values = (0..g.len()).map(|n| ring[g.ring_of(n)]).collect();
    Field::new(g.clone(), values)
}

/// Linear interpolation of nodal values in log(R - r).
pub fn interpolate_near_boundary(domain: &BallDomain, r_nodes: &[f64], u: &[f64], r: f64) -> f64 {
    let rr = domain.radius;
    let i = r_nodes.partition_point(|&x| x <= r).clamp(1, r_nodes.len() - 1);
    let (a, b) = (r_nodes[i - 1], r_nodes[i]);
    let (la, lb, l) = ((rr - a).ln(), (rr - b).ln(), (rr - r).ln());
    let t = ((l - la) / (lb - la)).clamp(0.0, 1.0);
    (1.0 - t) * u[i - 1] + t * u[i]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridSpec;

    fn lab() -> Lab {
        Lab::new(GridSpec::disk(64, 64)).unwrap()
    }

    #[test]
    fn constants_solve_laplace() {
        let lab = lab();
        let (u, rep) = solve_dirichlet(&lab, &Potential::zero(), &BoundaryMeasure::uniform(&lab.grid, 1.0)).unwrap();
        assert!(u.values.iter().all(|x| (x - 1.0).abs() < 1e-13));
        assert!(rep.residual <= 1e-10);
    }

    #[test]
    fn mollified_mass_is_preserved() {
        let lab = lab();
        let g = &lab.grid;
        let mu = BoundaryMeasure::dirac(g, 0.37, 2.5);
        let m = mollify_atoms(g, &mu, 4.0 * g.dtheta).unwrap();
        assert!((m.total_variation(g) - 2.5).abs() < 1e-12);
        assert!(m.density.iter().all(|x| *x >= 0.0));
        assert!(mollify_atoms(g, &mu, 0.5 * g.dtheta).is_err());
    }

    #[test]
    fn volterra_without_source_is_constant() {
        let r: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let u = radial_volterra(1.5, 0.0, &BallDomain::unit_disk(), &r).unwrap();
        assert!(u.iter().all(|x| (x - 1.5).abs() < 1e-12));
    }

    #[test]
    fn hat_cdf_is_a_distribution() {
        assert_eq!(hat_cdf(-2.0, 1.0), 0.0);
        assert_eq!(hat_cdf(2.0, 1.0), 1.0);
        assert!((hat_cdf(0.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
