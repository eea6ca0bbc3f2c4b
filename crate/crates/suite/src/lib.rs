//! Acceptance criteria for the laboratory. Each criterion runs at the
//! default 256×256 disk grid and reports its checks with measured values.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use bvpm::capacity::{capacity, capacity_compact_formula, capacity_primal, zv_detect, BoundarySet, CapacityProblem};
use bvpm::domain::{BallDomain, GridSpec};
use bvpm::kernels::{green_kernel, harmonic_measure_total, poisson_extend, Atom, BoundaryMeasure};
use bvpm::lab::Lab;
use bvpm::potentials::Potential;
use bvpm::reduced::{
    cone_criterion, kv_kernel, reduce_with, sing_detect_green_ratio, sing_detect_kernel, ConeRegion, HarmonicRecovery, Membership,
    SING_THRESHOLD,
};
use bvpm::solver::{
    default_atom_width, default_schedule, interpolate_near_boundary, radial_volterra, representation_residual, solve_dirichlet,
    solve_measure, volterra_field, volterra_nodes,
};
use bvpm::trace::{extended_trace, regular_set, sweep, sweep_excess, trace_dictionary, trig_dictionary, TRIG_DEGREE};
use bvpm::verdict::power_exponent;
use bvpm_oracles as oracle;

pub const CRITERIA: [(u32, &str, f64); 13] = [
    (1, "kernel normalization", 5.0),
    (2, "zero-potential oracle", 10.0),
    (3, "constant-potential Bessel oracle", 10.0),
    (4, "representation identity", 30.0),
    (5, "truncation monotonicity", 60.0),
    (6, "capacity duality", 30.0),
    (7, "singular boundary set classification", 120.0),
    (8, "Hardy reduced measure", 120.0),
    (9, "Volterra blow-up", 5.0),
    (10, "cone criterion soundness", 120.0),
    (11, "stability under mollification", 30.0),
    (12, "trace recovery", 120.0),
    (13, "sweeping properties", 60.0),
];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let mut s = format!("{} criterion {:>2} {} ({:.1}s)", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.seconds);
        if let Some(e) = &self.error {
            s += &format!(": error: {e}");
        } else if !failed.is_empty() {
            s += &format!(": failed {}", failed.join(", "));
        }
        s
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, value: impl Into<String>, pass: bool) {
        self.0.push(Check { name: name.into(), value: value.into(), pass });
    }

    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.add(name, format!("{value:.3e} <= {bound:.1e}"), value <= bound);
    }
}

/// Shared state for one suite run.
pub struct Context {
    pub lab: Lab,
    rec: std::sync::OnceLock<HarmonicRecovery>,
    pub seed: u64,
}

impl Context {
    pub fn new(spec: GridSpec, seed: u64) -> anyhow::Result<Self> {
        Ok(Context { lab: Lab::new(spec)?, rec: Default::default(), seed })
    }

    fn rec(&self) -> bvpm::Result<&HarmonicRecovery> {
        if let Some(r) = self.rec.get() {
            return Ok(r);
        }
        let r = HarmonicRecovery::new(&self.lab)?;
        Ok(self.rec.get_or_init(|| r))
    }
}

type Run = fn(&Context, &mut Checks) -> bvpm::Result<()>;

fn runner(id: u32) -> Option<Run> {
    let f: Run = match id {
        1 => kernel_normalization,
        2 => zero_potential,
        3 => bessel,
        4 => representation,
        5 => truncation,
        6 => duality,
        7 => singular_set,
        8 => hardy,
        9 => volterra,
        10 => cone_soundness,
        11 => stability,
        12 => trace_recovery,
        13 => sweeping,
        _ => return None,
    };
    Some(f)
}

pub fn run(ctx: &Context, id: u32) -> Option<Outcome> {
    let (_, name, budget) = *CRITERIA.iter().find(|c| c.0 == id)?;
    let f = runner(id)?;
    let t = Instant::now();
    let mut checks = Checks::default();
    let res = f(ctx, &mut checks);
    let seconds = t.elapsed().as_secs_f64();
    let mut checks = checks.0;
    checks.push(Check { name: "runtime".into(), value: format!("{seconds:.1}s <= {budget}s"), pass: seconds <= budget });
    let error = res.err().map(|e| e.to_string());
    let pass = error.is_none() && checks.iter().all(|c| c.pass);
    Some(Outcome { id, name, pass, seconds, budget_seconds: budget, checks, error })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn kernel_normalization(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let d = BallDomain::unit_disk();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (r, t) = (rng.gen_range(0.0..0.999f64), rng.gen_range(0.0..TAU));
        worst = worst.max((harmonic_measure_total(&d, &[r * t.cos(), r * t.sin()])? - 1.0).abs());
    }
    c.at_most("max |∫K(x,·)dS - 1| over 50 points", worst, 1e-6);
    let mut sym = 0.0f64;
    for _ in 0..50 {
        let p = |rng: &mut ChaCha8Rng| {
            let (r, t) = (rng.gen_range(0.0..0.99f64), rng.gen_range(0.0..TAU));
            [r * t.cos(), r * t.sin()]
        };
        let (x, y) = (p(&mut rng), p(&mut rng));
        let (a, b) = (green_kernel(&d, &x, &y)?, green_kernel(&d, &y, &x)?);
        sym = sym.max((a - b).abs() / a.abs().max(1e-300));
    }
    c.at_most("Green symmetry", sym, 1e-12);
    Ok(())
}

/// Signed data is solved as μ⁺ and μ⁻ separately (the solver takes μ ≥ 0)
/// and recombined by linearity.
fn v0_error(lab: &Lab, mu: &BoundaryMeasure) -> bvpm::Result<f64> {
    let g = &lab.grid;
    let part = |sign: f64| {
        let atoms = mu.atoms.iter().filter(|a| sign * a.mass > 0.0).map(|a| Atom { theta: a.theta, mass: sign * a.mass }).collect();
        let density = mu.density.iter().map(|x| (sign * x).max(0.0)).collect();
        let m = BoundaryMeasure { atoms, density, nonnegative: true };
        solve_measure(lab, &Potential::zero(), &m, &[1.0], default_atom_width(g))
    };
    let pos = part(1.0)?;
    let (u, data) = if mu.nonnegative {
        (pos.limit.values, pos.data)
    } else {
        let neg = part(-1.0)?;
        let u = pos.limit.values.iter().zip(&neg.limit.values).map(|(a, b)| a - b).collect();
        (u, pos.data.plus(&neg.data.scaled(-1.0)))
    };
    let k = poisson_extend(g, &data)?;
    Ok((0..g.len()).filter(|&n| g.delta_of(n) >= 0.05).map(|n| (u[n] - k.values[n]).abs()).fold(0.0, f64::max))
}

fn zero_potential(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let g = &ctx.lab.grid;
    c.at_most("dS", v0_error(&ctx.lab, &BoundaryMeasure::uniform(g, 1.0))?, 1e-4);
    c.at_most("cosθ·dS", v0_error(&ctx.lab, &BoundaryMeasure::from_density(g, |t| t.cos()))?, 1e-4);
    c.at_most("mollified Dirac", v0_error(&ctx.lab, &BoundaryMeasure::dirac(g, 1.0, 1.0))?, 1e-4);
    Ok(())
}

fn bessel(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let g = &ctx.lab.grid;
    for k in [1.0, 10.0, 100.0] {
        let (u, _) = solve_dirichlet(&ctx.lab, &Potential::bounded(k), &BoundaryMeasure::uniform(g, 1.0))?;
        let exact: Vec<f64> = (0..g.len()).map(|n| oracle::constant_v_solution(k, g.radial_nodes[g.ring_of(n)])).collect();
        let sup = exact.iter().cloned().fold(0.0, f64::max);
        c.at_most(&format!("k={k} relative sup error"), sup_diff(&u.values, &exact) / sup, 1e-4);
    }
    Ok(())
}

fn representation(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let g = &ctx.lab.grid;
    let mu = BoundaryMeasure::uniform(g, 1.0);
    for v in [Potential::bounded(1.0), Potential::distance_power(1.0, 1.5)] {
        let s = solve_measure(&ctx.lab, &v, &mu, &default_schedule(), default_atom_width(g))?;
        let r = representation_residual(&ctx.lab, &s.limit, &v, &s.data)?;
        c.at_most(&format!("{} residual", v.label), r.relative, 1e-3);
    }
    Ok(())
}

fn truncation(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let g = &ctx.lab.grid;
    let w = default_atom_width(g);
    let other: Vec<f64> = (0..6).map(|j| 2.0 * 8f64.powi(j)).collect();
    for (v, mu) in [
        (Potential::distance_power(2.0, 2.0), BoundaryMeasure::uniform(g, 1.0)),
        (Potential::distance_power(1.0, 1.5), BoundaryMeasure::dirac(g, 0.3, 1.0)),
    ] {
        let a = solve_measure(&ctx.lab, &v, &mu, &default_schedule(), w)?;
        let b = solve_measure(&ctx.lab, &v, &mu, &other, w)?;
        let inc = |s: &bvpm::solver::MeasureSolution| {
            s.fields.windows(2).map(|p| p[1].values.iter().zip(&p[0].values).map(|(x, y)| x - y).fold(f64::MIN, f64::max)).fold(f64::MIN, f64::max)
        };
        c.at_most(&format!("{} max increment, 4^j schedule", v.label), inc(&a), 1e-9);
        c.at_most(&format!("{} max increment, 2·8^j schedule", v.label), inc(&b), 1e-9);
        c.at_most(&format!("{} schedules agree", v.label), sup_diff(&a.limit.values, &b.limit.values), 1e-3);
    }
    Ok(())
}

fn duality(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let lab = &ctx.lab;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut gap, mut compact, mut maxitive) = (0.0f64, 0.0f64, 0.0f64);
    for v in [Potential::bounded(1.0), Potential::distance_power(1.0, 1.5)] {
        let p = CapacityProblem::new(lab, &v)?;
        for _ in 0..20 {
            let t0 = rng.gen_range(0.0..TAU);
            let e = BoundarySet::arc(lab, t0, t0 + rng.gen_range(0.02..PI));
            let r = capacity(&p, &e)?;
            gap = gap.max((r.primal_value - r.dual_value).abs()).max((r.primal_simplex - r.primal_value).abs());
            compact = compact.max((capacity_compact_formula(&p, &e) - r.primal_value).abs());
            let t1 = rng.gen_range(0.0..TAU);
            let e2 = BoundarySet::arc(lab, t1, t1 + 0.2);
            let u = capacity_primal(&p, &e.union(&e2))?.primal_value;
            maxitive = maxitive.max((u - r.primal_value.max(capacity_primal(&p, &e2)?.primal_value)).abs());
        }
    }
    c.at_most("|primal - dual| (and simplex)", gap, 1e-8);
    c.at_most("primal vs compact-set formula", compact, 1e-8);
    c.at_most("union-max", maxitive, 1e-12);
    let p = CapacityProblem::new(lab, &Potential::bounded(1.0))?;
    let exact = oracle::disk_kcheck_one();
    let a = p.a[0];
    c.at_most("ǩ[1](y) vs J1(j0)/j0 (relative)", (a - exact).abs() / exact, 1e-2);
    let single = capacity(&p, &BoundarySet { nodes: vec![0] })?;
    c.at_most("singleton capacity = 1/ǩ[1](y)", (single.primal_value - 1.0 / a).abs(), 1e-12);
    Ok(())
}

fn cone_nodes(zv: &bvpm::capacity::ZvResult, k: usize, vertex: usize) -> bool {
    !zv.singular.is_empty() && zv.singular.nodes.iter().all(|&j| (j + k - vertex) % k <= 1 || (vertex + k - j) % k <= 1)
}

fn singular_set(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let fine_spec = GridSpec::disk(ctx.lab.grid.m() * 2, ctx.lab.grid.k() * 2);
    let fine = Lab::new(fine_spec)?;
    let cases = [
        ("Bounded(1)", Potential::bounded(1.0), false),
        ("DistancePower(1,1.5)", Potential::distance_power(1.0, 1.5), false),
        ("DistancePower(1,1)", Potential::distance_power(1.0, 1.0), false),
        ("DistancePower(1,2)", Potential::distance_power(1.0, 2.0), true),
        ("DistancePower(1,2.5)", Potential::distance_power(1.0, 2.5), true),
    ];
    for (name, v, full) in cases {
        let mut counts = vec![];
        for lab in [&ctx.lab, &fine] {
            let zv = zv_detect(lab, &v)?;
            let ok = if full { zv.singular.len() == lab.grid.k() } else { zv.singular.is_empty() };
            counts.push((ok, zv.singular.len(), lab.grid.k()));
        }
        c.add(format!("{name} Z_V"), format!("{:?}", counts.iter().map(|x| (x.1, x.2)).collect::<Vec<_>>()), counts.iter().all(|x| x.0));
    }
    let cone = Potential::cone_singular(0.0, 0.5, 1.0, 2.5)?;
    let div = cone_criterion(&ctx.lab, &cone, &ConeRegion::new(0.0, 0.5)?)?;
    let mut vals = vec![];
    let mut ok = div.is_divergent();
    for lab in [&ctx.lab, &fine] {
        let zv = zv_detect(lab, &cone)?;
        ok &= cone_nodes(&zv, lab.grid.k(), 0);
        vals.push(zv.singular.nodes.clone());
    }
    c.add("ConeSingular vertex only (± one node), both grids", format!("{} {:?}", div.classification.label(), vals), ok);
    Ok(())
}

fn hardy(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let lab = &ctx.lab;
    let g = &lab.grid;
    let v = Potential::distance_power(2.0, 2.0);
    let s = solve_measure(lab, &v, &BoundaryMeasure::uniform(g, 1.0), &default_schedule(), default_atom_width(g))?;
    let u0: Vec<f64> = s.fields.iter().map(|f| f.values[0]).collect();
    c.add("u_k(0) strictly decreasing", format!("{:.4e}..{:.4e}", u0[0], u0[u0.len() - 1]), u0.windows(2).all(|w| w[1] < w[0]));
    let fin = s.levels.len() - 1;
    let p = power_exponent(&s.levels[fin - 4..fin], &u0[fin - 4..fin]);
    c.add("fitted exponent of u_k(0)", format!("{p:.3} in [-0.65, -0.35]"), (p + 0.5).abs() <= 0.15);
    let rec = ctx.rec()?;
    for (name, mu) in [("dS", BoundaryMeasure::uniform(g, 1.0)), ("δ_y", BoundaryMeasure::dirac(g, 0.0, 1.0))] {
        let r = reduce_with(lab, rec, &v, &mu, &default_schedule(), default_atom_width(g))?;
        c.at_most(&format!("μ*(∂Ω)/μ(∂Ω) for {name}"), r.reduced_mass.abs() / r.data_mass, 1e-2);
    }
    // the grid and V are invariant under rotation by one angular cell, so
    // K_V(0, y) is the same at every boundary node; sample 16 of them
    let widths = [4.0, 2.0, 1.0].map(|w| w * g.dtheta * g.domain.radius);
    let mut ratios = vec![];
    for j in (0..g.k()).step_by(g.k() / 16) {
        let e = kv_kernel(lab, &v, g.angular_nodes[j], &[0.0, 0.0], &default_schedule(), &widths)?;
        ratios.push(e.value / e.poisson);
    }
    let worst = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let spread = ratios.iter().cloned().fold(f64::MAX, f64::min);
    c.at_most("K_V/K at sampled nodes (threshold)", worst, SING_THRESHOLD);
    c.at_most("K_V/K spread across nodes", worst - spread, 1e-9);
    Ok(())
}

fn volterra(_ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let d = BallDomain::unit_disk();
    let nodes = volterra_nodes(&d, 4000, 1e-6);
    let u = radial_volterra(1.0, 2.0, &d, &nodes)?;
    let ratio = interpolate_near_boundary(&d, &nodes, &u, 1.0 - 1e-4) / interpolate_near_boundary(&d, &nodes, &u, 1.0 - 1e-3);
    c.add("u(1-1e-4)/u(1-1e-3), c=2", format!("{ratio:.4} in [8, 12]"), (8.0..=12.0).contains(&ratio));
    let u0 = radial_volterra(1.5, 0.0, &d, &nodes)?;
    c.at_most("c=0 gives u ≡ a", u0.iter().map(|x| (x - 1.5).abs()).fold(0.0, f64::max), 1e-12);
    Ok(())
}

fn cone_soundness(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let lab = &ctx.lab;
    let cone = ConeRegion::new(0.0, 0.5)?;
    let mut agree = true;
    let mut rows = vec![];
    for alpha in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let v = Potential::distance_power(1.0, alpha);
        let div = cone_criterion(lab, &v, &cone)?.is_divergent();
        let k = sing_detect_kernel(lab, &v, 0.0, &[0.0, 0.0])?.membership;
        let gr = sing_detect_green_ratio(lab, &v, 0, 0)?.membership;
        let ok = div == (alpha >= 2.0) && (!div || (k == Membership::Singular && gr == Membership::Singular));
        agree &= k == gr;
        c.add(format!("α={alpha}"), format!("cone {div}, kernel {k:?}, green {gr:?}"), ok);
        rows.push((alpha, k, gr));
    }
    // a non-radial case: the vertex of a singular cone
    let v = Potential::cone_singular(0.0, 0.5, 1.0, 2.0)?;
    let k = sing_detect_kernel(lab, &v, 0.0, &[0.0, 0.0])?.membership;
    let gr = sing_detect_green_ratio(lab, &v, 0, 0)?.membership;
    let div = cone_criterion(lab, &v, &cone)?.is_divergent();
    c.add("ConeSingular vertex", format!("cone {div}, kernel {k:?}, green {gr:?}"), div && k == Membership::Singular && gr == Membership::Singular);
    agree &= k == gr;
    c.add("detectors agree", format!("{rows:?}"), agree);
    Ok(())
}

fn stability(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let lab = &ctx.lab;
    let g = &lab.grid;
    let v = Potential::distance_power(1.0, 1.5);
    let mu = BoundaryMeasure::dirac(g, 0.0, 1.0);
    let x0 = (0.5, 0.0);
    let cell = g.dtheta * g.domain.radius;
    let mut vals = vec![];
    for w in [8.0, 4.0, 2.0] {
        let s = solve_measure(lab, &v, &mu, &default_schedule(), w * cell)?;
        vals.push(s.limit.interpolate_polar(x0.0, x0.1));
    }
    let (d1, d2) = (vals[1] - vals[0], vals[2] - vals[1]);
    let q = d2 / d1;
    c.add("difference ratio", format!("{q:.4} in (0, 1)"), q > 0.0 && q < 1.0);
    let limit = vals[2] + d2 * q / (1.0 - q);
    c.at_most("extrapolated limit vs width-w/4 value (relative)", (limit - vals[2]).abs() / vals[2].abs(), 2e-2);
    Ok(())
}

fn trace_recovery(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let lab = &ctx.lab;
    let g = &lab.grid;
    let v = Potential::bounded(1.0);
    let mu = BoundaryMeasure::dirac(g, 0.7, 1.0);
    let s = solve_measure(lab, &v, &mu, &default_schedule(), default_atom_width(g))?;
    let r = regular_set(lab, &s.limit, &v, 16)?;
    let (mut monotone, mut worst) = (true, 0.0f64);
    for (name, z) in trig_dictionary(lab, TRIG_DEGREE) {
        let exact: f64 = (0..g.k()).map(|j| z[j] * s.data.density[j] * g.boundary_weights[j]).sum();
        let l = &r.dictionary.iter().find(|d| d.0 == name).expect("dictionary entry").1;
        let err: Vec<f64> = l.iter().map(|x| (x - exact).abs()).collect();
        monotone &= err.windows(2).all(|w| w[1] < w[0]);
        worst = worst.max(*err.last().unwrap());
    }
    c.add("layer-trace error decreasing in ε, all ζ", format!("{monotone}"), monotone);
    c.at_most("final error (‖μ‖ = 1)", worst, 2e-2);
    c.add("u_μ all regular", format!("{} of {}", r.regular_set.len(), g.k()), r.regular_set.len() == g.k());

    let hv = Potential::distance_power(2.0, 2.0);
    let hu = volterra_field(lab, 1.0, 2.0)?;
    let hr = regular_set(lab, &hu, &hv, 16)?;
    c.add("Hardy arcs singular", format!("{} of {}", hr.singular_set.len(), g.k()), hr.singular_set.len() == g.k());
    let zv = zv_detect(lab, &hv)?;
    let p = CapacityProblem::new(lab, &hv)?.with_singular(&zv);
    let dict = trace_dictionary(lab, 8, &[0.5, 1.0], 8);
    let ext = extended_trace(lab, ctx.rec()?, &hv, &p, &hu, &hr, &dict, false)?;
    let min_u = hu.values.iter().cloned().fold(f64::INFINITY, f64::min);
    c.add("Hardy ν(u) = 0 while u > 0", format!("ν(∂Ω) = {}, min u = {min_u:.3}", ext.total), ext.total == 0.0 && min_u > 0.0);
    Ok(())
}

fn random_bump(g: &bvpm::domain::PolarGrid, rng: &mut ChaCha8Rng) -> BoundaryMeasure {
    let (c, w, h) = (rng.gen_range(0.0..TAU), rng.gen_range(0.1..1.5), rng.gen_range(0.1..3.0));
    BoundaryMeasure::from_density(g, move |t| {
        let d = (t - c + PI).rem_euclid(TAU) - PI;
        if d.abs() < w {
            h * (1.0 - (d / w).powi(2))
        } else {
            0.0
        }
    })
}

fn sweeping(ctx: &Context, c: &mut Checks) -> bvpm::Result<()> {
    let lab = &ctx.lab;
    let g = &lab.grid;
    let rec = ctx.rec()?;
    let v = Potential::bounded(1.0);
    let p = CapacityProblem::new(lab, &v)?;
    let u = solve_measure(lab, &v, &BoundaryMeasure::from_density(g, |t| 1.0 + 0.5 * t.cos()), &default_schedule(), default_atom_width(g))?.limit;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (mut dominated, mut monotone, mut subadd, mut excess) = (f64::MIN, f64::MIN, f64::MIN, f64::MIN);
    let sweep_of = |mu: &BoundaryMeasure| sweep(lab, rec, &v, &p, &u, mu);
    for _ in 0..20 {
        let (a, b) = (random_bump(g, &mut rng), random_bump(g, &mut rng));
        let ab = a.plus(&b);
        let (sa, sb, sab) = (sweep_of(&a)?, sweep_of(&b)?, sweep_of(&ab)?);
        let norm = ab.total_mass(g);
        for j in 0..g.k() {
            dominated = dominated.max((sa.gamma.density[j] - a.density[j]) / norm);
            monotone = monotone.max((sa.gamma.density[j] - sab.gamma.density[j]) / norm);
            subadd = subadd.max((sab.gamma.density[j] - sa.gamma.density[j] - sb.gamma.density[j]) / norm);
        }
        excess = excess.max(sweep_excess(lab, &v, &sab)?);
    }
    c.at_most("γ ≤ μ (relative to ‖μ‖)", dominated, 1e-6);
    c.at_most("monotone in μ", monotone, 1e-6);
    c.at_most("sub-additive on 20 pairs", subadd, 1e-6);
    c.at_most("u_γ - v_μ", excess, 1e-3);
    Ok(())
}

pub fn default_context() -> anyhow::Result<Context> {
    Context::new(GridSpec::default_disk(), 20241019)
}
