use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use bvpm::capacity::{capacity, capacity_compact_formula, zv_detect, BoundarySet, CapacityProblem, ZvResult};
use bvpm::kernels::{BoundaryMeasure, Field};
use bvpm::lab::Lab;
use bvpm::potentials::{distance_moment, boundary_kernel_integral, uniform_kernel_tail, Potential};
use bvpm::reduced::{reduce_with, sing_detect_green_ratio, sing_detect_kernel, tilde_zv, ConeRegion, HarmonicRecovery};
use bvpm::solver::{representation_residual, solve_measure_tol, volterra_field, MeasureSolution};
use bvpm::trace::{extended_trace, regular_set, trace_dictionary, trig_dictionary, TRIG_DEGREE};
use bvpm::verdict::DivergenceVerdict;

use crate::config::{ExperimentConfig, TraceField};
use crate::output::RunDir;
use crate::CliError;

type Res = Result<(), CliError>;

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn lab(cfg: &ExperimentConfig) -> Result<Lab, CliError> {
    Ok(Lab::new(cfg.grid.clone())?)
}

fn at(f: &Field, x: [f64; 2]) -> f64 {
    f.interpolate_polar(x[0].hypot(x[1]), x[1].atan2(x[0]))
}

fn solve_chain(cfg: &ExperimentConfig, lab: &Lab, v: &Potential, mu: &BoundaryMeasure) -> Result<MeasureSolution, CliError> {
    let s = &cfg.solver;
    Ok(solve_measure_tol(lab, v, mu, &s.kschedule, s.width(&lab.grid), s.tol)?)
}

/// u_k(x0) against k; the untruncated level is written as k = inf.
fn write_levels(out: &mut RunDir, s: &MeasureSolution, x0: [f64; 2]) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = s.fields.iter().map(|f| at(f, x0)).collect();
    out.csv("u_k_x0.csv", &["k", "u_k_x0"], s.levels.iter().zip(&values).map(|(k, u)| [num(*k), num(*u)]))?;
    Ok(values)
}

#[derive(Serialize)]
struct SolveSummary {
    potential: String,
    levels: Vec<f64>,
    u_k_x0: Vec<f64>,
    cauchy_gap: f64,
    monotonicity_gap: Option<f64>,
    max_residual: f64,
    iterations: usize,
    representation_absolute: f64,
    representation_relative: f64,
    data_mass: f64,
}

pub fn solve(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let lab = lab(cfg)?;
    let g = &lab.grid;
    let v = cfg.potential.build()?;
    let mu = cfg.measure.build(g);
    let s = solve_chain(cfg, &lab, &v, &mu)?;
    out.csv(
        "field.csv",
        &["node", "r", "theta", "delta", "u", "poisson"],
        (0..g.len()).map(|n| {
            let (i, j) = (g.ring_of(n), g.angle_of(n));
            [n.to_string(), num(g.radial_nodes[i]), num(if i == 0 { 0.0 } else { g.angular_nodes[j] }), num(g.delta_of(n)), num(s.limit.values[n]), num(s.poisson.values[n])]
        }),
    )?;
    let series = write_levels(out, &s, cfg.x0)?;
    let rep = representation_residual(&lab, &s.limit, &v, &s.data)?;
    let gap = s.report.monotonicity_gap.unwrap_or(0.0);
    let scale = s.poisson.interior_sup().max(1.0);
    out.check("truncation chain nonincreasing", gap <= 1e-9 * scale, format!("gap {gap:.3e}"));
    let nonincreasing = series.windows(2).all(|w| w[1] <= w[0] + 1e-9 * scale);
    out.check("u_k(x0) nonincreasing in k", nonincreasing, format!("{} levels", series.len()));
    out.json(
        "summary.json",
        &SolveSummary {
            potential: v.label.clone(),
            levels: s.levels.clone(),
            u_k_x0: series,
            cauchy_gap: s.cauchy_gap,
            monotonicity_gap: s.report.monotonicity_gap,
            max_residual: s.report.residual,
            iterations: s.report.iterations,
            representation_absolute: rep.absolute,
            representation_relative: rep.relative,
            data_mass: s.data.total_mass(g),
        },
    )
}

fn arcs(cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>, CliError> {
    if !cfg.capacity.arcs.is_empty() {
        return cfg.capacity.arcs.iter().map(|a| a.bounds().map_err(CliError::Config)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.capacity.random_arcs)
        .map(|_| {
            let t0 = rng.gen_range(0.0..TAU);
            (t0, t0 + rng.gen_range(0.02..PI))
        })
        .collect())
}

#[derive(Serialize)]
struct CapacitySummary {
    potential: String,
    normalization: &'static str,
    /// Values for the first arc.
    primal: f64,
    dual: f64,
    gap: f64,
    witness_measure_csv: &'static str,
    arcs: usize,
    max_gap: f64,
    z_v_nodes: Vec<usize>,
}

pub fn capacity_cmd(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let lab = lab(cfg)?;
    let g = &lab.grid;
    let v = cfg.potential.build()?;
    let zv = zv_detect(&lab, &v)?;
    let p = CapacityProblem::new(&lab, &v)?.with_singular(&zv);
    let arcs = arcs(cfg)?;
    if arcs.is_empty() {
        return Err(CliError::Config("capacity: no arcs configured".into()));
    }
    let mut rows = vec![];
    let mut gaps = vec![];
    let mut first = None;
    for (i, &(t0, t1)) in arcs.iter().enumerate() {
        let e = BoundarySet::arc(&lab, t0, t1);
        let r = capacity(&p, &e)?;
        let compact = capacity_compact_formula(&p, &e);
        let gap = if r.dual_unbounded { 0.0 } else { (r.primal_value - r.dual_value).abs() };
        rows.push([i.to_string(), num(t0), num(t1), e.len().to_string(), num(r.primal_value), num(r.primal_simplex), num(r.dual_value), num(gap), num(compact)]);
        gaps.push(gap);
        first.get_or_insert(r);
    }
    out.csv("capacity.csv", &["arc", "theta0", "theta1", "nodes", "primal", "primal_simplex", "dual", "abs_gap", "compact_formula"], rows)?;
    out.csv("duality_gap.csv", &["arc", "abs_gap"], gaps.iter().enumerate().map(|(i, x)| [i.to_string(), num(*x)]))?;
    let r = first.expect("at least one arc");
    let w = &r.optimal_measure;
    out.csv(
        "witness_measure.csv",
        &["node", "theta", "density", "atom_mass"],
        (0..g.k()).map(|j| {
            let atom: f64 = w.atoms.iter().filter(|a| g.nearest_angle(a.theta) == j).map(|a| a.mass).sum();
            [j.to_string(), num(g.angular_nodes[j]), num(w.density[j]), num(atom)]
        }),
    )?;
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    out.check("duality gap <= 1e-8", max_gap <= 1e-8, format!("max |primal - dual| {max_gap:.3e} over {} arcs", arcs.len()));
    out.json(
        "summary.json",
        &CapacitySummary {
            potential: v.label.clone(),
            normalization: r.normalization,
            primal: r.primal_value,
            dual: r.dual_value,
            gap: r.duality_gap,
            witness_measure_csv: "witness_measure.csv",
            arcs: arcs.len(),
            max_gap,
            z_v_nodes: zv.singular.nodes.clone(),
        },
    )
}

#[derive(Serialize)]
struct NodeSummary {
    z_v_nodes: Vec<usize>,
    sing_nodes: Vec<usize>,
    inconclusive_nodes: Vec<usize>,
    /// Nodes where the two Sing_V detectors disagree.
    detector_disagreements: Vec<usize>,
}

fn verdict_label(v: &DivergenceVerdict) -> String {
    v.classification.label()
}

/// Per-node detector table plus the a_y(ε) and kernel-ratio series.
fn node_table(cfg: &ExperimentConfig, lab: &Lab, v: &Potential, zv: &ZvResult, out: &mut RunDir) -> Result<NodeSummary, CliError> {
    let g = &lab.grid;
    let mut rows = vec![];
    let mut ay = vec![];
    let mut ratios = vec![];
    let mut sing = vec![];
    let mut inconclusive = vec![];
    let mut disagree = vec![];
    let centre = 0;
    for &j in &cfg.nodes {
        let theta = g.angular_nodes[j];
        let kd = sing_detect_kernel(lab, v, theta, &cfg.x0)?;
        let gd = sing_detect_green_ratio(lab, v, j, centre)?;
        let cone = tilde_zv(lab, v, &ConeRegion::new(theta, cfg.cone_aperture)?)?;
        use bvpm::reduced::Membership::*;
        match (kd.membership, gd.membership) {
            (Singular, Singular) => sing.push(j),
            (Regular, Regular) => {}
            _ => inconclusive.push(j),
        }
        if kd.membership != gd.membership {
            disagree.push(j);
        }
        let m = |x| serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        rows.push([
            j.to_string(),
            num(theta),
            verdict_label(&zv.verdicts[j]),
            zv.is_singular(j).to_string(),
            num(kd.estimate.value),
            num(kd.ratio),
            m(kd.membership),
            m(gd.membership),
            num(gd.limit),
            num(gd.exponent),
            verdict_label(&cone),
        ]);
        ay.extend(zv.verdicts[j].samples.iter().map(|(e, a)| [j.to_string(), num(*e), num(*a)]));
        ratios.extend(gd.samples.iter().map(|(d, r)| [j.to_string(), num(*d), num(*r)]));
    }
    out.csv(
        "nodes.csv",
        &["node", "theta", "a_y_verdict", "in_z_v", "kv_estimate", "kv_ratio", "kv_membership", "green_membership", "green_ratio_limit", "green_ratio_exponent", "cone_verdict"],
        rows,
    )?;
    out.csv("a_y.csv", &["node", "eps", "a_y"], ay)?;
    out.csv("kernel_ratio.csv", &["node", "distance", "ratio"], ratios)?;
    out.check("Sing_V detectors agree", disagree.is_empty(), format!("disagree at {disagree:?}"));
    Ok(NodeSummary { z_v_nodes: zv.singular.nodes.clone(), sing_nodes: sing, inconclusive_nodes: inconclusive, detector_disagreements: disagree })
}

pub fn singular_set(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let lab = lab(cfg)?;
    let v = cfg.potential.build()?;
    let zv = zv_detect(&lab, &v)?;
    let s = node_table(cfg, &lab, &v, &zv, out)?;
    out.json("summary.json", &s)
}

#[derive(Serialize)]
struct ReducedSummary {
    #[serde(flatten)]
    nodes: NodeSummary,
    data_mass: f64,
    reduced_mass: f64,
    mass_error: f64,
    mass_loss: f64,
    harmonic_residual: f64,
    layer_model: String,
}

pub fn reduced(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let lab = lab(cfg)?;
    let g = &lab.grid;
    let v = cfg.potential.build()?;
    let mu = cfg.measure.build(g);
    let rec = HarmonicRecovery::new(&lab)?;
    let r = reduce_with(&lab, &rec, &v, &mu, &cfg.solver.kschedule, cfg.solver.width(g))?;
    write_levels(out, &r.solution, cfg.x0)?;
    out.csv(
        "reduced_density.csv",
        &["node", "theta", "data_density", "reduced_density"],
        (0..g.k()).map(|j| [j.to_string(), num(g.angular_nodes[j]), num(r.data_density[j]), num(r.reduced_density[j])]),
    )?;
    out.csv("mass_trace.csv", &["eta", "reduced_mass"], r.mass_trace.iter().map(|(e, m)| [num(*e), num(*m)]))?;
    let excess = (0..g.k()).map(|j| r.reduced_density[j] - r.data_density[j]).fold(f64::NEG_INFINITY, f64::max);
    let scale = r.data_density.iter().cloned().fold(0.0, f64::max).max(1e-300);
    out.check("μ* <= μ (Fejér densities)", excess <= 1e-4 * scale, format!("max excess {excess:.3e}"));
    let zv = zv_detect(&lab, &v)?;
    let nodes = node_table(cfg, &lab, &v, &zv, out)?;
    out.json(
        "summary.json",
        &ReducedSummary {
            nodes,
            data_mass: r.data_mass,
            reduced_mass: r.reduced_mass,
            mass_error: r.mass_error,
            mass_loss: r.mass_loss,
            harmonic_residual: r.harmonic_residual,
            layer_model: format!("{:?}", r.fit.model),
        },
    )
}

#[derive(Serialize)]
struct TraceSummary {
    field: TraceField,
    regular_nodes: usize,
    singular_nodes: usize,
    inconclusive_nodes: usize,
    trace_mass: f64,
    extended_total: Option<f64>,
    final_trace_error: Option<f64>,
    note: &'static str,
}

pub fn trace(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let lab = lab(cfg)?;
    let g = &lab.grid;
    let v = cfg.potential.build()?;
    let (u, data) = match cfg.trace.field {
        TraceField::Solution => {
            let s = solve_chain(cfg, &lab, &v, &cfg.measure.build(g))?;
            (s.limit, Some(s.data))
        }
        TraceField::Hardy => {
            let c = match cfg.potential {
                crate::config::PotentialSpec::DistancePower { c, .. } => c,
                _ => unreachable!("validated"),
            };
            (volterra_field(&lab, 1.0, c)?, None)
        }
    };
    let report = regular_set(&lab, &u, &v, cfg.trace.arcs)?;
    out.json("trace_report.json", &report)?;
    let mean = |nodes: &[usize]| nodes.iter().map(|&j| report.trace.density[j]).sum::<f64>() / nodes.len().max(1) as f64;
    out.csv(
        "arcs.csv",
        &["arc", "classification", "trace_density", "cauchy", "blowup", "local_mass", "last_layer"],
        report.arcs.iter().map(|a| {
            let class = serde_json::to_value(a.class).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            [
                a.arc.to_string(),
                class,
                num(mean(&a.nodes)),
                a.cauchy.to_string(),
                a.blowup.to_string(),
                verdict_label(&a.local_mass),
                num(*a.layer.last().unwrap_or(&f64::NAN)),
            ]
        }),
    )?;
    let mut final_error = None;
    if let Some(data) = &data {
        let mut rows = vec![];
        let mut monotone = true;
        let mut worst = 0.0f64;
        // ζ whose pairing with μ is already exact to rounding has nothing to converge
        let floor = 1e-10 * data.total_variation(g).max(1.0);
        for (name, z) in trig_dictionary(&lab, TRIG_DEGREE) {
            let exact: f64 = (0..g.k()).map(|j| z[j] * data.density[j] * g.boundary_weights[j]).sum();
            let layer = &report.dictionary.iter().find(|d| d.0 == name).expect("dictionary entry").1;
            let err: Vec<f64> = layer.iter().map(|x| (x - exact).abs()).collect();
            monotone &= err.windows(2).all(|w| w[1] < w[0] || w[0].max(w[1]) <= floor);
            worst = worst.max(*err.last().unwrap_or(&0.0));
            rows.extend(report.eps.iter().zip(&err).map(|(e, x)| [name.clone(), num(*e), num(*x)]));
        }
        out.csv("trace_error.csv", &["zeta", "eps", "abs_error"], rows)?;
        out.check("layer-trace error decreasing in ε", monotone, format!("final {worst:.3e}"));
        final_error = Some(worst);
    }
    let mut extended_total = None;
    if cfg.trace.extended {
        let zv = zv_detect(&lab, &v)?;
        let p = CapacityProblem::new(&lab, &v)?.with_singular(&zv);
        let rec = HarmonicRecovery::new(&lab)?;
        let dict = trace_dictionary(&lab, cfg.trace.diracs, &cfg.trace.dirac_masses, cfg.trace.uniform_arcs);
        let ext = extended_trace(&lab, &rec, &v, &p, &u, &report, &dict, false)?;
        out.json("extended_trace.json", &ext)?;
        // -0.0 from an empty sum would otherwise print as "-0.0"
        extended_total = Some(ext.total + 0.0);
    }
    if cfg.trace.field == TraceField::Hardy {
        let k = g.k();
        out.check("Hardy arcs all singular", report.singular_set.len() == k, format!("{} of {k}", report.singular_set.len()));
        if let Some(t) = extended_total {
            let min_u = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
            out.check("Hardy extended trace vanishes while u > 0", t == 0.0 && min_u > 0.0, format!("ν(∂Ω) = {t}, min u = {min_u:.3e}"));
        }
    }
    out.json(
        "summary.json",
        &TraceSummary {
            field: cfg.trace.field,
            regular_nodes: report.regular_set.len(),
            singular_nodes: report.singular_set.len(),
            inconclusive_nodes: report.inconclusive.len(),
            trace_mass: report.trace.total_mass(g),
            extended_total,
            final_trace_error: final_error,
            note: "arc-local classification at a fixed number of arcs; structure finer than one arc is not resolved",
        },
    )
}

pub fn criteria(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let lab = lab(cfg)?;
    let rr = lab.domain().radius;
    let mut rows = vec![];
    for &alpha in &cfg.alphas {
        let v = Potential::distance_power(1.0, alpha);
        let moment = distance_moment(|t| t.powf(-alpha), rr)?;
        let (kernel_integral, _) = boundary_kernel_integral(&v, &lab, 0)?;
        let tail = uniform_kernel_tail(&v, &lab)?;
        let zv = zv_detect(&lab, &v)?;
        let cone = bvpm::reduced::cone_criterion(&lab, &v, &ConeRegion::new(0.0, cfg.cone_aperture)?)?;
        rows.push([
            num(alpha),
            verdict_label(&moment),
            verdict_label(&kernel_integral),
            tail.vanishes.to_string(),
            zv.singular.len().to_string(),
            verdict_label(&zv.verdicts[0]),
            verdict_label(&cone),
        ]);
    }
    out.csv("criteria.csv", &["alpha", "distance_moment", "kernel_integral", "uniform_tail_vanishes", "z_v_nodes", "a_y_verdict", "cone_verdict"], rows)
}

pub fn suite(cfg: &ExperimentConfig, out: &mut RunDir) -> Res {
    let ctx = bvpm_suite::Context::new(cfg.grid.clone(), cfg.seed).map_err(|e| CliError::Config(format!("{e:#}")))?;
    let mut outcomes = vec![];
    for &id in &cfg.criteria {
        let o = bvpm_suite::run(&ctx, id).ok_or_else(|| CliError::Config(format!("criteria: unknown criterion {id}")))?;
        println!("{}", o.line());
        outcomes.push(o);
    }
    out.csv("suite.csv", &["criterion", "name", "pass", "budget_seconds"], outcomes.iter().map(|o| [o.id.to_string(), o.name.to_string(), o.pass.to_string(), num(o.budget_seconds)]))?;
    // wall-clock values stay out of the CSV so reruns are byte-identical
    let rows = outcomes.iter().flat_map(|o| {
        o.checks.iter().map(move |c| {
            let value = if c.name == "runtime" { format!("budget {}s", o.budget_seconds) } else { c.value.clone() };
            [o.id.to_string(), c.name.clone(), c.pass.to_string(), value]
        })
    });
    out.csv("checks.csv", &["criterion", "check", "pass", "value"], rows.collect::<Vec<_>>())?;
    out.json("outcomes.json", &serde_json::json!({ "outcomes": outcomes }))?;
    for o in &outcomes {
        let detail = o.error.clone().unwrap_or_else(|| o.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect::<Vec<_>>().join(", "));
        out.check(format!("criterion {} {}", o.id, o.name), o.pass, detail);
    }
    Ok(())
}
