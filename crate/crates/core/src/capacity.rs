//! Adjoint Poisson operator ǩ_V, the energy and 𝔐^V norm, boundary
//! capacities (primal, dual, closed form) and detection of the singular
//! boundary set Z_V.

use std::f64::consts::PI;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{arc_harmonic_measure, green_apply, poisson_cell_weights, poisson_extend, Atom, BoundaryMeasure, Field};
use crate::lab::Lab;
use crate::par;
use crate::potentials::{delta_shell_samples, Potential};
use crate::solver::{self, normal_derivative, MeasureSolution};
use crate::verdict::{self, Classification, DivergenceVerdict};

/// Capacities scale with the eigenfunction normalisation.
pub const NORMALIZATION: &str = "phi(0)=1";

/// Boundary mesh nodes, sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundarySet {
    pub nodes: Vec<usize>,
}

impl BoundarySet {
    pub fn empty() -> Self {
        BoundarySet { nodes: vec![] }
    }

    pub fn full(lab: &Lab) -> Self {
        BoundarySet { nodes: (0..lab.grid.k()).collect() }
    }

    pub fn from_nodes(k: usize, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = nodes.into_iter().collect();
        if let Some(&bad) = v.iter().find(|&&j| j >= k) {
            return Err(Error::domain(format!("boundary node {bad} outside 0..{k}")));
        }
        v.sort_unstable();
        v.dedup();
        Ok(BoundarySet { nodes: v })
    }

    /// Nodes whose angle lies on the arc from t0 counterclockwise to t1.
    pub fn arc(lab: &Lab, t0: f64, t1: f64) -> Self {
        let len = (t1 - t0).rem_euclid(2.0 * PI);
        let nodes = (0..lab.grid.k())
            .filter(|&j| (lab.grid.angular_nodes[j] - t0).rem_euclid(2.0 * PI) <= len + 1e-12)
            .collect();
        BoundarySet { nodes }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v = self.nodes.clone();
        v.extend_from_slice(&other.nodes);
        v.sort_unstable();
        v.dedup();
        BoundarySet { nodes: v }
    }

    pub fn contains(&self, j: usize) -> bool {
        self.nodes.binary_search(&j).is_ok()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Integrand f V φ at every node; V is taken as grid values.
fn weighted(lab: &Lab, v: &[f64], f: &[f64]) -> Vec<f64> {
    let g = &lab.grid;
    (0..g.len()).map(|n| f[n] * v[n] * lab.eigen.phi[g.ring_of(n)]).collect()
}

/// ǩ[h](y) = ∫ K(x, y) h(x) dx at every boundary node, by product
/// integration: radial weights times exact harmonic measure of angular cells.
pub fn kcheck_density(lab: &Lab, h: &[f64]) -> Vec<f64> {
    let g = &lab.grid;
    let rr = g.domain.radius;
    let (m, k) = (g.m(), g.k());
    if g.domain.dimension == 3 {
        let s: f64 = (0..m).map(|i| g.radial_weights[i] * h[g.idx(i, 0)]).sum();
        return vec![s / (rr * rr)];
    }
    let rings: Vec<Vec<f64>> = par::map_range(m - 1, |ii| {
        let i = ii + 1;
        let w = poisson_cell_weights(g, g.radial_nodes[i]);
        let base = g.idx(i, 0);
        let row = &h[base..base + k];
        let nz: Vec<usize> = (0..k).filter(|&j| row[j] != 0.0).collect();
        (0..k)
            .map(|y| nz.iter().map(|&j| w[(j + k - y) % k] * row[j]).sum::<f64>() * g.radial_weights[i] / rr)
            .collect()
    });
    let centre = g.radial_weights[0] * h[0] / rr;
    (0..k).map(|y| centre + rings.iter().map(|r| r[y]).sum::<f64>()).collect()
}

/// ǩ[h] at an arbitrary boundary angle with the same product rule.
pub fn kcheck_density_at(lab: &Lab, h: &[f64], theta: f64) -> f64 {
    let g = &lab.grid;
    let rr = g.domain.radius;
    let (m, k) = (g.m(), g.k());
    if g.domain.dimension == 3 {
        return kcheck_density(lab, h)[0];
    }
    let dt = g.dtheta;
    let mut s = g.radial_weights[0] * h[0] / rr;
    for i in 1..m {
        let r = g.radial_nodes[i];
        let mut ring = 0.0;
        for j in 0..k {
            let hv = h[g.idx(i, j)];
            if hv != 0.0 {
                let c = (g.angular_nodes[j] - theta + PI).rem_euclid(2.0 * PI) - PI;
                ring += hv * arc_harmonic_measure(rr, r, c - 0.5 * dt, c + 0.5 * dt);
            }
        }
        s += ring * g.radial_weights[i] / rr;
    }
    s
}

/// ǩ_V[f](y) = ∫ K(x, y) f V φ dx per boundary node.
pub fn kcheck(lab: &Lab, v: &Potential, f: &Field) -> Vec<f64> {
    let vs = v.sample(&lab.grid);
    kcheck_density(lab, &weighted(lab, &vs, &f.values))
}

/// Same quantity through -∂G[fVφ]/∂n.
pub fn kcheck_normal(lab: &Lab, v: &Potential, f: &Field) -> Result<Vec<f64>> {
    let vs = v.sample(&lab.grid);
    let h = Field::new(lab.grid.clone(), weighted(lab, &vs, &f.values))?;
    let (w, _) = green_apply(&lab.op, &h)?;
    Ok(normal_derivative(&w).into_iter().map(|d| -d).collect())
}

/// ℰ(f, μ) = ∫ K[μ] f V φ dx. Atoms are paired with ǩ_V[f] at their angle.
pub fn energy(lab: &Lab, v: &Potential, f: &Field, mu: &BoundaryMeasure) -> Result<f64> {
    let vs = v.sample(&lab.grid);
    let h = weighted(lab, &vs, &f.values);
    let dens = BoundaryMeasure { atoms: vec![], density: mu.density.clone(), nonnegative: mu.nonnegative };
    let k = poisson_extend(&lab.grid, &dens)?;
    let g = &lab.grid;
    let mut s: f64 = (0..g.len()).filter(|&n| !g.is_boundary(n)).map(|n| k.values[n] * h[n] * g.cell_volumes[n]).sum();
    for a in &mu.atoms {
        s += a.mass * kcheck_density_at(lab, &h, a.theta);
    }
    Ok(s)
}

pub fn mv_norm(lab: &Lab, v: &Potential, mu: &BoundaryMeasure) -> Result<f64> {
    let one = Field::new(lab.grid.clone(), vec![1.0; lab.grid.len()])?;
    energy(lab, v, &one, mu)
}

/// ∫ ǩ[f] dμ, the other side of the Fubini identity.
pub fn kcheck_pairing(lab: &Lab, v: &Potential, f: &Field, mu: &BoundaryMeasure) -> f64 {
    let vs = v.sample(&lab.grid);
    let h = weighted(lab, &vs, &f.values);
    let kc = kcheck_density(lab, &h);
    let g = &lab.grid;
    let mut s: f64 = mu.density.iter().zip(&kc).zip(&g.boundary_weights).map(|((a, b), w)| a * b * w).sum();
    for a in &mu.atoms {
        s += a.mass * kcheck_density_at(lab, &h, a.theta);
    }
    s
}

/// Per-node singularity verdicts for a_y(ε) = ∫_{δ>ε} K(x, y) V φ dx.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZvResult {
    pub verdicts: Vec<DivergenceVerdict>,
    pub singular: BoundarySet,
    pub inconclusive: BoundarySet,
}

impl ZvResult {
    pub fn is_singular(&self, j: usize) -> bool {
        self.singular.contains(j)
    }
}

fn ay_verdict(lab: &Lab, v: &Potential, j: usize) -> Result<DivergenceVerdict> {
    let d = lab.domain();
    let rr = d.radius;
    let n = d.dimension as i32;
    let area = d.unit_sphere_area();
    let radial = |r: f64| v.eval_delta(rr - r).unwrap_or(0.0) * lab.phi(r) * (r / rr).powi(n - 1);
    let y = lab.grid.boundary_point(j);
    let local = |x: [f64; 2], _rho: f64| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let r = r2.sqrt();
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        let kern = (rr * rr - r2) / (area * rr * d2);
        kern * v.eval_unchecked(&d, &x) * lab.phi(r)
    };
    let samples = delta_shell_samples(lab, v, j, radial, local)?;
    verdict::classify(samples)
}

/// Classify every boundary node; Z_V is the set of divergent nodes.
pub fn zv_detect(lab: &Lab, v: &Potential) -> Result<ZvResult> {
    let k = lab.grid.k();
    let cut = verdict::dyadic_cutoffs(0.25 * lab.domain().radius, crate::potentials::LEVELS);
    let verdicts: Vec<DivergenceVerdict> = if v.is_zero() {
        vec![DivergenceVerdict::zero(&cut); k]
    } else if v.is_radial() {
        vec![ay_verdict(lab, v, 0)?; k]
    } else {
        par::map_range(k, |j| ay_verdict(lab, v, j)).into_iter().collect::<Result<_>>()?
    };
    let singular = (0..k).filter(|&j| verdicts[j].is_divergent());
    let singular = BoundarySet::from_nodes(k, singular)?;
    let inconclusive = (0..k).filter(|&j| verdicts[j].classification == Classification::Inconclusive);
    let inconclusive = BoundarySet::from_nodes(k, inconclusive)?;
    Ok(ZvResult { verdicts, singular, inconclusive })
}

/// a_y = ǩ_V[1](y) per boundary node; +inf on detected singular nodes.
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    pub a: Vec<f64>,
    /// ǩ_V of each dual basis function (band × sector indicators) per node.
    basis_kcheck: Vec<Vec<f64>>,
    basis: Vec<Vec<usize>>,
    lab: Lab,
}

const DUAL_SECTORS: usize = 16;

impl CapacityProblem {
    pub fn new(lab: &Lab, v: &Potential) -> Result<Self> {
        let g = &lab.grid;
        let vs = v.sample(g);
        let (m, k) = (g.m(), g.k());
        let sectors = if g.domain.dimension == 3 { 1 } else { DUAL_SECTORS.min(k) };
        let mut basis: Vec<Vec<usize>> = vec![vec![]; 2 * sectors];
        for n in 0..g.len() {
            if g.is_boundary(n) {
                continue;
            }
            let i = g.ring_of(n);
            let band = usize::from(i > m / 2);
            let s = if i == 0 { 0 } else { g.angle_of(n) * sectors / k };
            basis[band * sectors + s].push(n);
        }
        let phi = lab.phi_field();
        let basis_kcheck: Vec<Vec<f64>> = par::map_slice(&basis, |nodes| {
            let mut h = vec![0.0; g.len()];
            for &n in nodes {
                h[n] = vs[n] * phi[n];
            }
            kcheck_density(lab, &h)
        });
        let a: Vec<f64> = (0..k).map(|y| basis_kcheck.iter().map(|b| b[y]).sum()).collect();
        let a = if g.domain.dimension == 3 { vec![a[0]; k] } else { a };
        Ok(CapacityProblem { a, basis_kcheck, basis, lab: lab.clone() })
    }

    /// Mark detected singular nodes (a_y = +inf).
    pub fn with_singular(mut self, zv: &ZvResult) -> Self {
        for &j in &zv.singular.nodes {
            self.a[j] = f64::INFINITY;
        }
        self
    }

    fn kc(&self, b: usize, y: usize) -> f64 {
        let col = &self.basis_kcheck[b];
        if col.len() == 1 {
            col[0]
        } else {
            col[y]
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub primal_value: f64,
    /// Value of the primal LP solved by simplex.
    pub primal_simplex: f64,
    pub dual_value: f64,
    pub optimal_measure: BoundaryMeasure,
    pub optimal_f: Field,
    pub duality_gap: f64,
    /// Every node of E is singular; the dual is infeasible.
    pub dual_unbounded: bool,
    pub normalization: &'static str,
}

/// max over E of 1/a_y (divergent nodes contribute 0).
pub fn capacity_compact_formula(p: &CapacityProblem, e: &BoundarySet) -> f64 {
    e.nodes
        .iter()
        .map(|&j| if p.a[j].is_finite() && p.a[j] > 0.0 { 1.0 / p.a[j] } else { 0.0 })
        .fold(0.0, f64::max)
}

fn lp_error(e: microlp::Error) -> Error {
    Error::numerical(format!("linear program failed: {e:?}"), vec![])
}

/// max Σ μ_y over μ ≥ 0 on E with Σ μ_y a_y ≤ 1. The single-constraint LP
/// is solved in closed form; the simplex value is kept alongside.
pub fn capacity_primal(p: &CapacityProblem, e: &BoundarySet) -> Result<CapacityResult> {
    let lab = &p.lab;
    let g = &lab.grid;
    let finite: Vec<usize> = e.nodes.iter().copied().filter(|&j| p.a[j].is_finite()).collect();
    if finite.iter().any(|&j| !(p.a[j] > 0.0)) {
        return Err(Error::domain("capacity needs ǩ_V[1] > 0 on E (V vanishes near some node)"));
    }
    let zero_f = Field::zeros(g.clone());
    if finite.is_empty() {
        return Ok(CapacityResult {
            primal_value: 0.0,
            primal_simplex: 0.0,
            dual_value: if e.is_empty() { 0.0 } else { f64::INFINITY },
            optimal_measure: BoundaryMeasure::zero(g),
            optimal_f: zero_f,
            duality_gap: 0.0,
            dual_unbounded: !e.is_empty(),
            normalization: NORMALIZATION,
        });
    }
    let best = *finite.iter().min_by(|&&x, &&y| p.a[x].partial_cmp(&p.a[y]).unwrap()).unwrap();
    let primal_value = 1.0 / p.a[best];
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = finite.iter().map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let row: Vec<_> = vars.iter().zip(&finite).map(|(&x, &j)| (x, p.a[j])).collect();
    lp.add_constraint(row.as_slice(), ComparisonOp::Le, 1.0);
    let sol = lp.solve().map_err(lp_error)?.into_solution().map_err(|_| Error::numerical("simplex interrupted", vec![]))?;
    let mut measure = BoundaryMeasure::zero(g);
    measure.atoms = vec![Atom { theta: g.angular_nodes[best], mass: primal_value }];
    Ok(CapacityResult {
        primal_value,
        primal_simplex: sol.objective(),
        dual_value: f64::NAN,
        optimal_measure: measure,
        optimal_f: zero_f,
        duality_gap: f64::NAN,
        dual_unbounded: false,
        normalization: NORMALIZATION,
    })
}

/// min ‖f‖∞ over f ≥ 0 with ǩ_V[f] ≥ 1 on E, f piecewise constant on
/// radial bands × angular sectors (constants included).
pub fn capacity_dual(p: &CapacityProblem, e: &BoundarySet) -> Result<(f64, Field, bool)> {
    let g = &p.lab.grid;
    let finite: Vec<usize> = e.nodes.iter().copied().filter(|&j| p.a[j].is_finite()).collect();
    if e.is_empty() {
        return Ok((0.0, Field::zeros(g.clone()), false));
    }
    if finite.is_empty() {
        return Ok((f64::INFINITY, Field::zeros(g.clone()), true));
    }
    let nb = p.basis.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    let fb: Vec<_> = (0..nb).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for &y in &finite {
        let row: Vec<_> = fb.iter().enumerate().map(|(b, &x)| (x, p.kc(b, y))).filter(|(_, c)| *c != 0.0).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 1.0);
    }
    for &x in &fb {
        lp.add_constraint([(x, 1.0), (t, -1.0)].as_slice(), ComparisonOp::Le, 0.0);
    }
    let sol = lp.solve().map_err(lp_error)?.into_solution().map_err(|_| Error::numerical("simplex interrupted", vec![]))?;
    let mut f = vec![0.0; g.len()];
    for (b, nodes) in p.basis.iter().enumerate() {
        let val = sol.var_value(fb[b]);
        for &n in nodes {
            f[n] = val;
        }
    }
    Ok((sol.objective(), Field::new(g.clone(), f)?, false))
}

/// Primal, dual and their gap in one result.
pub fn capacity(p: &CapacityProblem, e: &BoundarySet) -> Result<CapacityResult> {
    let mut r = capacity_primal(p, e)?;
    let (dual, f, unbounded) = capacity_dual(p, e)?;
    r.dual_value = dual;
    r.optimal_f = f;
    r.dual_unbounded = unbounded;
    r.duality_gap = if dual.is_finite() { dual - r.primal_value } else { 0.0 };
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct GoodMeasureStage {
    pub level: f64,
    /// μ restricted to K_n = {a_y ≤ n}.
    pub measure: BoundaryMeasure,
    pub mass: f64,
    pub mv_norm: f64,
    pub solution: MeasureSolution,
    pub representation: f64,
}

#[derive(Debug, Clone)]
pub struct GoodMeasureLimit {
    pub stages: Vec<GoodMeasureStage>,
    /// mv_norm(μ_n) ≤ n μ_n(K_n) at every stage (1e-6 relative slack).
    pub norm_bound_holds: bool,
    /// u_{μ_n} nondecreasing in n within 1e-9.
    pub increasing: bool,
}

/// Approximate μ from inside by its restrictions to the sublevel sets of
/// ǩ_V[1]. μ must not charge Z_V.
pub fn good_measure_limit(
    lab: &Lab,
    v: &Potential,
    mu: &BoundaryMeasure,
    problem: &CapacityProblem,
    levels: &[f64],
) -> Result<GoodMeasureLimit> {
    let g = &lab.grid;
    let k = g.k();
    let node_of = |theta: f64| g.nearest_angle(theta);
    let mut bad: Vec<usize> = (0..k).filter(|&j| !problem.a[j].is_finite() && mu.density[j] != 0.0).collect();
    bad.extend(mu.atoms.iter().map(|a| node_of(a.theta)).filter(|&j| !problem.a[j].is_finite()));
    if !bad.is_empty() {
        bad.sort_unstable();
        bad.dedup();
        return Err(Error::Precondition(format!("measure charges singular boundary nodes {bad:?}")));
    }
    let width = solver::default_atom_width(g);
    let mut stages = vec![];
    let mut norm_ok = true;
    for &n in levels {
        let keep = |j: usize| problem.a[j] <= n;
        let density = (0..k).map(|j| if keep(j) { mu.density[j] } else { 0.0 }).collect();
        let atoms = mu.atoms.iter().filter(|a| keep(node_of(a.theta))).copied().collect();
        let m = BoundaryMeasure { atoms, density, nonnegative: mu.nonnegative };
        let mass = m.total_mass(g);
        let norm = mv_norm(lab, v, &m)?;
        norm_ok &= norm <= n * mass * (1.0 + 1e-6) + 1e-14;
        let sol = solver::solve_measure(lab, v, &m, &solver::default_schedule(), width)?;
        let representation = solver::representation_residual(lab, &sol.limit, v, &sol.data)?.relative;
        stages.push(GoodMeasureStage { level: n, measure: m, mass, mv_norm: norm, solution: sol, representation });
    }
    let increasing = stages.windows(2).all(|w| {
        w[0].solution.limit.values.iter().zip(&w[1].solution.limit.values).all(|(a, b)| *b >= a - 1e-9)
    });
    Ok(GoodMeasureLimit { stages, norm_bound_holds: norm_ok, increasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridSpec;

    #[test]
    fn boundary_sets() {
        let lab = Lab::new(GridSpec::disk(16, 16)).unwrap();
        let a = BoundarySet::arc(&lab, -0.1, 0.5);
        assert_eq!(a.nodes, vec![0, 1]);
        let b = BoundarySet::arc(&lab, 5.8, 0.1);
        assert_eq!(b.nodes, vec![0, 15]);
        assert_eq!(a.union(&b).nodes, vec![0, 1, 15]);
        assert!(BoundarySet::from_nodes(16, [16]).is_err());
    }

    #[test]
    fn zero_inputs_give_zero() {
        let lab = Lab::new(GridSpec::disk(32, 32)).unwrap();
        let one = Field::new(lab.grid.clone(), vec![1.0; lab.grid.len()]).unwrap();
        assert!(kcheck(&lab, &Potential::zero(), &one).iter().all(|x| *x == 0.0));
        let z = Field::zeros(lab.grid.clone());
        assert!(kcheck(&lab, &Potential::bounded(1.0), &z).iter().all(|x| *x == 0.0));
        assert_eq!(mv_norm(&lab, &Potential::bounded(1.0), &BoundaryMeasure::zero(&lab.grid)).unwrap(), 0.0);
    }
}
