//! Boundary traces of positive solutions: layer integrals, regular and
//! singular boundary sets, sweeping γ_u(μ) and the extended trace ν(u).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::capacity::{good_measure_limit, BoundarySet, CapacityProblem};
use crate::domain::layer;
use crate::error::{Error, Result};
use crate::kernels::{BoundaryMeasure, Field};
use crate::lab::Lab;
use crate::par;
use crate::potentials::{Potential, LEVELS};
use crate::reduced::{fejer_density, layer_measure, HarmonicRecovery};
use crate::solver;
use crate::verdict::{self, DivergenceVerdict};

/// Highest degree of the trigonometric test dictionary.
pub const TRIG_DEGREE: usize = 16;
/// Cauchy criterion for regular arcs: gap ratio over the last levels.
pub const CAUCHY_RATIO: f64 = 0.7;
const CAUCHY_WINDOW: usize = 3;
/// Layer integrals growing at least this fast per halving of ε blow up.
const BLOWUP_RATIO: f64 = 1.2;

/// ε_j = 0.1 R 2^{-j} down to four cells of the finest radial spacing.
pub fn default_eps(lab: &Lab) -> Vec<f64> {
    let h = lab.grid.min_radial_spacing();
    verdict::dyadic_cutoffs(0.1 * lab.domain().radius, 40).into_iter().take_while(|&e| e >= 4.0 * h).collect()
}

/// 1, cos nθ, sin nθ for n ≤ degree, sampled at the boundary nodes.
pub fn trig_dictionary(lab: &Lab, degree: usize) -> Vec<(String, Vec<f64>)> {
    let th = &lab.grid.angular_nodes;
    let mut out = vec![("1".to_string(), vec![1.0; th.len()])];
    for n in 1..=degree {
        let nf = n as f64;
        out.push((format!("cos{n}"), th.iter().map(|t| (nf * t).cos()).collect()));
        out.push((format!("sin{n}"), th.iter().map(|t| (nf * t).sin()).collect()));
    }
    out
}

/// ∫_{Σ_ε} ζ(σ(x)) u(x) dS(x) for each ε, with u interpolated radially.
pub fn layer_trace(lab: &Lab, u: &Field, zeta: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    let g = &lab.grid;
    if zeta.len() != g.k() {
        return Err(Error::domain(format!("test function has {} samples, boundary has {}", zeta.len(), g.k())));
    }
    let h = g.min_radial_spacing();
    eps.iter()
        .map(|&e| {
            if e < h {
                return Err(Error::domain(format!("layer depth {e:.3e} below the grid resolution {h:.3e}")));
            }
            let l = layer(&g.domain, g, e)?;
            let w = |j: usize| if l.weights.len() == 1 { l.weights[0] } else { l.weights[j] };
            Ok((0..g.k()).map(|j| zeta[j] * u.interpolate_polar(l.radius, g.angular_nodes[j]) * w(j)).sum())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcClass {
    Regular,
    Singular,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcReport {
    pub arc: usize,
    pub nodes: Vec<usize>,
    pub class: ArcClass,
    /// Layer integrals of u against a bump on the arc, per ε.
    pub layer: Vec<f64>,
    pub cauchy: bool,
    pub blowup: bool,
    /// Cutoff-refined ∫ V u φ over the sector under the arc.
    pub local_mass: DivergenceVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceReport {
    pub eps: Vec<f64>,
    /// (ζ label, layer integrals per ε) for the trigonometric dictionary.
    pub dictionary: Vec<(String, Vec<f64>)>,
    pub arcs: Vec<ArcReport>,
    pub regular_set: BoundarySet,
    pub singular_set: BoundarySet,
    pub inconclusive: BoundarySet,
    /// Trace density on regular nodes (zero elsewhere).
    pub trace: BoundaryMeasure,
}

fn cauchy(seq: &[f64]) -> bool {
    let scale = seq.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let gaps: Vec<f64> = seq.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if gaps.len() < CAUCHY_WINDOW {
        return false;
    }
    let tail = &gaps[gaps.len() - CAUCHY_WINDOW..];
    tail.iter().all(|g| *g <= 1e-10 * scale) || tail.windows(2).all(|w| w[1] <= 1e-10 * scale || w[1] <= CAUCHY_RATIO * w[0])
}

fn blowup(seq: &[f64]) -> bool {
    if seq.len() < CAUCHY_WINDOW + 1 {
        return false;
    }
    let tail = &seq[seq.len() - CAUCHY_WINDOW - 1..];
    tail.windows(2).all(|w| w[0] > 0.0 && w[1] >= BLOWUP_RATIO * w[0])
}

/// Cosine-squared bump centred on the arc, support one arc width either side.
fn arc_bump(lab: &Lab, centre: f64, width: f64) -> Vec<f64> {
    lab.grid
        .angular_nodes
        .iter()
        .map(|&t| {
            let d = (t - centre + PI).rem_euclid(2.0 * PI) - PI;
            if d.abs() < width {
                (0.5 * PI * d / width).cos().powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

/// Classify boundary arcs as regular (Cauchy layer integrals and finite
/// local mass ∫Vuφ) or singular (blow-up of both), and extrapolate the
/// trace density on regular nodes.
pub fn regular_set(lab: &Lab, u: &Field, v: &Potential, arcs: usize) -> Result<TraceReport> {
    let g = &lab.grid;
    let k = g.k();
    if g.domain.dimension != 2 {
        return Err(Error::domain("boundary arcs need the disk"));
    }
    if arcs == 0 || k % arcs != 0 {
        return Err(Error::domain(format!("{arcs} arcs do not divide {k} boundary nodes")));
    }
    if u.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("field is not finite"));
    }
    let eps = default_eps(lab);
    if eps.len() < CAUCHY_WINDOW + 2 {
        return Err(Error::domain("grid too coarse for layer integrals"));
    }
    let dictionary = trig_dictionary(lab, TRIG_DEGREE)
        .into_iter()
        .map(|(name, z)| Ok((name, layer_trace(lab, u, &z, &eps)?)))
        .collect::<Result<Vec<_>>>()?;
    let vs = v.sample(g);
    let phi = lab.phi_field();
    let vu: Vec<f64> = (0..g.len()).map(|n| vs[n] * u.values[n] * phi[n] * g.cell_volumes[n]).collect();
    let per = k / arcs;
    let width = 2.0 * PI / arcs as f64;
    let cut = verdict::dyadic_cutoffs(0.25 * g.domain.radius, LEVELS);
    let reports = par::map_range(arcs, |a| -> Result<ArcReport> {
        let nodes: Vec<usize> = (a * per..(a + 1) * per).collect();
        let centre = g.angular_nodes[nodes[0]] + 0.5 * (per as f64 - 1.0) * g.dtheta;
        let zeta = arc_bump(lab, centre, width);
        let layer = layer_trace(lab, u, &zeta, &eps)?;
        let in_sector = |n: usize| -> bool {
            let d = (g.angular_nodes[g.angle_of(n)] - centre + PI).rem_euclid(2.0 * PI) - PI;
            d.abs() < width
        };
        let samples: Vec<(f64, f64)> = cut
            .iter()
            .map(|&c| {
                let s: f64 = (1..g.len()).filter(|&n| !g.is_boundary(n) && g.delta_of(n) > c && in_sector(n)).map(|n| vu[n]).sum();
                (c, s)
            })
            .collect();
        let local_mass = verdict::classify(samples)?;
        let (c, b) = (cauchy(&layer), blowup(&layer));
        let class = if c && local_mass.is_convergent() {
            ArcClass::Regular
        } else if b && local_mass.is_divergent() {
            ArcClass::Singular
        } else {
            ArcClass::Inconclusive
        };
        Ok(ArcReport { arc: a, nodes, class, layer, cauchy: c, blowup: b, local_mass })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pick = |c: ArcClass| BoundarySet::from_nodes(k, reports.iter().filter(|r| r.class == c).flat_map(|r| r.nodes.clone()));
    let regular_set = pick(ArcClass::Regular)?;
    let singular_set = pick(ArcClass::Singular)?;
    let inconclusive = pick(ArcClass::Inconclusive)?;
    // linear extrapolation of u(R − ε, θ) from the two thinnest layers
    let n = eps.len();
    let (e1, e2) = (eps[n - 1], eps[n - 2]);
    let rr = g.domain.radius;
    let density: Vec<f64> = (0..k)
        .map(|j| {
            if !regular_set.contains(j) {
                return 0.0;
            }
            let t = g.angular_nodes[j];
            let (u1, u2) = (u.interpolate_polar(rr - e1, t), u.interpolate_polar(rr - e2, t));
            u1 + (u1 - u2) * e1 / (e2 - e1)
        })
        .collect();
    let nonnegative = density.iter().all(|x| *x >= 0.0);
    Ok(TraceReport {
        eps,
        dictionary,
        arcs: reports,
        regular_set,
        singular_set,
        inconclusive,
        trace: BoundaryMeasure { atoms: vec![], density, nonnegative },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepRoute {
    /// v_μ is a discrete supersolution: h = v_μ + G_h[V v_μ] has boundary
    /// values v_μ|∂Ω exactly, so γ is read off the boundary.
    Discrete,
    /// η-cutoff extrapolation of the harmonic part, as in reduce.
    Layer,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub u_mu: Field,
    /// v_μ = min(u, u_μ) nodewise.
    pub v_mu: Field,
    pub gamma: BoundaryMeasure,
    pub route: SweepRoute,
    /// min over interior nodes of (-Δ_h + V)v_μ relative to (diag + V)|v_μ|.
    pub supersolution_defect: f64,
    pub mass: f64,
    /// Layer-route mass and its extrapolation error (cross-check).
    pub layer_mass: f64,
    pub layer_error: f64,
    /// Grid data of u_μ (atoms mollified).
    pub data: BoundaryMeasure,
}

const SUPERSOLUTION_TOL: f64 = 1e-8;

fn sweep_core(lab: &Lab, rec: &HarmonicRecovery, v: &Potential, u: &Field, u_mu: Field, data: BoundaryMeasure, good: bool) -> Result<SweepResult> {
    let g = &lab.grid;
    let v_mu = u.zip(&u_mu, f64::min);
    let vs = v.sample(g);
    let lv = lab.op.apply(&v_mu.values, Some(&vs));
    let supersolution_defect = (0..g.len())
        .filter(|&n| !g.is_boundary(n))
        .map(|n| lv[n] / ((lab.op.diag(n) + vs[n]) * v_mu.values[n].abs()).max(1e-300))
        .fold(f64::INFINITY, f64::min);
    let lm = layer_measure(lab, rec, &v_mu)?;
    // grid boundary values carry the trace only for good data: on Z_V they
    // sit above a boundary layer that the continuum limit removes
    let (route, gamma) = if good && supersolution_defect >= -SUPERSOLUTION_TOL {
        let off = g.len() - g.k();
        let density = (0..g.k()).map(|j| v_mu.values[off + j].max(0.0)).collect();
        (SweepRoute::Discrete, BoundaryMeasure { atoms: vec![], density, nonnegative: true })
    } else {
        let density = fejer_density(lab, &lm.coefficients).into_iter().map(|x| x.max(0.0)).collect();
        (SweepRoute::Layer, BoundaryMeasure { atoms: vec![], density, nonnegative: true })
    };
    let mass = match route {
        SweepRoute::Discrete => gamma.total_mass(g),
        SweepRoute::Layer => lm.mass.max(0.0),
    };
    Ok(SweepResult { u_mu, v_mu, gamma, route, supersolution_defect, mass, layer_mass: lm.mass, layer_error: lm.mass_error, data })
}

fn check_positive(u: &Field) -> Result<()> {
    if u.values.iter().any(|x| !(*x >= -1e-12)) {
        return Err(Error::domain("sweeping needs a nonnegative field"));
    }
    Ok(())
}

/// γ_u(μ): trace of the harmonic part of v_μ = min(u, u_μ). μ must pass the
/// good-measure construction (it may not charge Z_V).
pub fn sweep(lab: &Lab, rec: &HarmonicRecovery, v: &Potential, problem: &CapacityProblem, u: &Field, mu: &BoundaryMeasure) -> Result<SweepResult> {
    check_positive(u)?;
    let g = &lab.grid;
    let support: Vec<usize> = (0..g.k())
        .filter(|&j| mu.density[j] != 0.0)
        .chain(mu.atoms.iter().filter(|a| a.mass != 0.0).map(|a| g.nearest_angle(a.theta)))
        .collect();
    // the whole support lies in one sublevel set; infinite levels are rejected inside
    let level = support.iter().map(|&j| problem.a[j]).fold(0.0, f64::max);
    let lim = good_measure_limit(lab, v, mu, problem, &[level])?;
    let stage = lim.stages.into_iter().next().expect("one stage");
    sweep_core(lab, rec, v, u, stage.solution.limit, stage.solution.data, true)
}

/// Sweeping without the goodness precondition, for diagnostics on
/// measures that charge Z_V. γ always comes from the layer route.
pub fn sweep_unchecked(lab: &Lab, rec: &HarmonicRecovery, v: &Potential, u: &Field, mu: &BoundaryMeasure) -> Result<SweepResult> {
    check_positive(u)?;
    let sol = solver::solve_measure(lab, v, mu, &solver::default_schedule(), solver::default_atom_width(&lab.grid))?;
    sweep_core(lab, rec, v, u, sol.limit, sol.data, false)
}

/// sup over interior nodes of u_γ − v_μ (the sweep contract asks ≤ 1e-3).
pub fn sweep_excess(lab: &Lab, v: &Potential, s: &SweepResult) -> Result<f64> {
    let g = &lab.grid;
    let sol = solver::solve_measure(lab, v, &s.gamma, &solver::default_schedule(), solver::default_atom_width(g))?;
    Ok((0..g.len()).filter(|&n| !g.is_boundary(n)).map(|n| sol.limit.values[n] - s.v_mu.values[n]).fold(f64::NEG_INFINITY, f64::max))
}

/// Candidate measures for the extended trace: Diracs at `n_dirac` equally
/// spaced nodes with the given masses, and uniform densities on `n_arcs`
/// equal arcs.
pub fn trace_dictionary(lab: &Lab, n_dirac: usize, masses: &[f64], n_arcs: usize) -> Vec<(String, BoundaryMeasure)> {
    let g = &lab.grid;
    let k = g.k();
    let mut out = vec![];
    for i in 0..n_dirac {
        let t = g.angular_nodes[i * k / n_dirac];
        for &m in masses {
            out.push((format!("dirac({t:.4},{m})"), BoundaryMeasure::dirac(g, t, m)));
        }
    }
    for a in 0..n_arcs {
        let (lo, hi) = (a * k / n_arcs, (a + 1) * k / n_arcs);
        let density = (0..k).map(|j| if (lo..hi).contains(&j) { 1.0 } else { 0.0 }).collect();
        out.push((format!("arc[{lo},{hi})"), BoundaryMeasure { atoms: vec![], density, nonnegative: true }));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateSweep {
    pub label: String,
    pub good: bool,
    /// γ mass (for rejected candidates: the unchecked sweep, if run).
    pub gamma_mass: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtendedTrace {
    /// ν(u) on the dyadic partitions: level ℓ has 2^ℓ cells.
    pub levels: Vec<Vec<f64>>,
    /// max |ν(A) − ν(A₁) − ν(A₂)| over refinements, relative to ν(∂Ω).
    pub additivity_gap: f64,
    pub candidates: Vec<CandidateSweep>,
    pub total: f64,
    /// ν(∂Ω) from every other candidate, and the relative change.
    pub half_dictionary_total: f64,
    pub sensitivity: f64,
    pub note: String,
}

/// ν(u)(A) = μ_u(A ∩ ℛ(u)) + sup_μ γ_u(μ)(A ∩ 𝒮(u)) over the good
/// candidates of a finite dictionary, on dyadic boundary partitions.
#[allow(clippy::too_many_arguments)]
pub fn extended_trace(
    lab: &Lab,
    rec: &HarmonicRecovery,
    v: &Potential,
    problem: &CapacityProblem,
    u: &Field,
    report: &TraceReport,
    dictionary: &[(String, BoundaryMeasure)],
    diagnose_rejected: bool,
) -> Result<ExtendedTrace> {
    let g = &lab.grid;
    let k = g.k();
    let swept: Vec<(CandidateSweep, Option<Vec<f64>>)> = par::map_slice(dictionary, |(label, mu)| -> Result<_> {
        match sweep(lab, rec, v, problem, u, mu) {
            Ok(s) => Ok((CandidateSweep { label: label.clone(), good: true, gamma_mass: Some(s.mass) }, Some(s.gamma.density))),
            Err(Error::Precondition(_)) => {
                let gamma_mass = if diagnose_rejected { Some(sweep_unchecked(lab, rec, v, u, mu)?.mass) } else { None };
                Ok((CandidateSweep { label: label.clone(), good: false, gamma_mass }, None))
            }
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let w = &g.boundary_weights;
    let mut max_level = 0;
    while (1 << (max_level + 1)) <= k && k % (1 << (max_level + 1)) == 0 {
        max_level += 1;
    }
    let cell_value = |lo: usize, hi: usize, every: usize| -> f64 {
        let regular: f64 = (lo..hi).filter(|&j| report.regular_set.contains(j)).map(|j| report.trace.density[j] * w[j]).sum();
        let singular = swept
            .iter()
            .enumerate()
            .filter(|(i, _)| i % every == 0)
            .filter_map(|(_, (_, d))| d.as_ref())
            .map(|d| (lo..hi).filter(|&j| report.singular_set.contains(j)).map(|j| d[j] * w[j]).sum::<f64>())
            .fold(0.0, f64::max);
        regular + singular
    };
    let levels: Vec<Vec<f64>> = (0..=max_level)
        .map(|l| {
            let cells = 1usize << l;
            let per = k / cells;
            (0..cells).map(|c| cell_value(c * per, (c + 1) * per, 1)).collect()
        })
        .collect();
    let total = levels[0][0];
    let additivity_gap = levels
        .windows(2)
        .flat_map(|p| (0..p[0].len()).map(move |c| (p[0][c] - p[1][2 * c] - p[1][2 * c + 1]).abs()))
        .fold(0.0, f64::max)
        / total.abs().max(1e-300);
    let half_dictionary_total = cell_value(0, k, 2);
    let sensitivity = (total - half_dictionary_total).abs() / total.abs().max(1e-300);
    Ok(ExtendedTrace {
        levels,
        additivity_gap,
        candidates: swept.into_iter().map(|s| s.0).collect(),
        total,
        half_dictionary_total,
        sensitivity,
        note: "sup over a finite dictionary of good measures: an approximation from below".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridSpec;

    fn lab() -> Lab {
        Lab::new(GridSpec::disk(64, 64)).unwrap()
    }

    #[test]
    fn constant_field_layers_give_circle_lengths() {
        let lab = lab();
        let one = Field::new(lab.grid.clone(), vec![1.0; lab.grid.len()]).unwrap();
        let eps = default_eps(&lab);
        let l = layer_trace(&lab, &one, &vec![1.0; lab.grid.k()], &eps).unwrap();
        for (e, x) in eps.iter().zip(&l) {
            assert!((x - 2.0 * PI * (1.0 - e)).abs() < 1e-12);
        }
    }

    #[test]
    fn layers_below_resolution_are_rejected() {
        let lab = lab();
        let one = Field::new(lab.grid.clone(), vec![1.0; lab.grid.len()]).unwrap();
        let h = lab.grid.min_radial_spacing();
        assert!(layer_trace(&lab, &one, &vec![1.0; lab.grid.k()], &[0.5 * h]).is_err());
    }

    #[test]
    fn cauchy_and_blowup_tests() {
        let conv: Vec<f64> = (0..8).map(|j| 1.0 - 0.5f64.powi(j)).collect();
        assert!(cauchy(&conv) && !blowup(&conv));
        let div: Vec<f64> = (0..8).map(|j| 2f64.powi(j)).collect();
        assert!(!cauchy(&div) && blowup(&div));
    }

    #[test]
    fn bump_peaks_at_the_arc_centre() {
        let lab = lab();
        let z = arc_bump(&lab, lab.grid.angular_nodes[5], 0.3);
        assert_eq!(z[5], 1.0);
        assert_eq!(z[40], 0.0);
    }
}
