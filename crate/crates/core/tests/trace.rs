use bvpm::capacity::{zv_detect, CapacityProblem};
use bvpm::domain::GridSpec;
use bvpm::kernels::{BoundaryMeasure, Field};
use bvpm::lab::Lab;
use bvpm::potentials::Potential;
use bvpm::reduced::HarmonicRecovery;
use bvpm::solver::{default_atom_width, default_schedule, solve_measure, volterra_field};
use bvpm::trace::*;
use proptest::prelude::*;
use std::sync::OnceLock;

struct Setup {
    lab: Lab,
    rec: HarmonicRecovery,
    problem: CapacityProblem,
    v: Potential,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let lab = Lab::new(GridSpec::disk(128, 128)).unwrap();
        let rec = HarmonicRecovery::new(&lab).unwrap();
        let v = Potential::bounded(1.0);
        let problem = CapacityProblem::new(&lab, &v).unwrap();
        Setup { lab, rec, problem, v }
    })
}

fn solution(lab: &Lab, v: &Potential, mu: &BoundaryMeasure) -> Field {
    solve_measure(lab, v, mu, &default_schedule(), default_atom_width(&lab.grid)).unwrap().limit
}

#[test]
fn zero_field_is_regular_with_zero_trace() {
    let s = setup();
    let z = Field::zeros(s.lab.grid.clone());
    let r = regular_set(&s.lab, &z, &s.v, 16).unwrap();
    assert_eq!(r.regular_set.len(), s.lab.grid.k());
    assert!(r.trace.density.iter().all(|x| *x == 0.0));
    let sw = sweep(&s.lab, &s.rec, &s.v, &s.problem, &z, &BoundaryMeasure::uniform(&s.lab.grid, 1.0)).unwrap();
    assert_eq!(sw.mass, 0.0);
}

#[test]
fn layer_integrals_converge_to_the_data() {
    let lab = Lab::default_disk().unwrap();
    let g = &lab.grid;
    let v = Potential::bounded(1.0);
    let mu = BoundaryMeasure::dirac(g, 0.7, 1.0);
    let sol = solve_measure(&lab, &v, &mu, &default_schedule(), default_atom_width(g)).unwrap();
    let r = regular_set(&lab, &sol.limit, &v, 16).unwrap();
    assert!(r.singular_set.is_empty() && r.inconclusive.is_empty());
    for (name, z) in trig_dictionary(&lab, TRIG_DEGREE) {
        let exact: f64 = (0..g.k()).map(|j| z[j] * sol.data.density[j] * g.boundary_weights[j]).sum();
        let l = &r.dictionary.iter().find(|d| d.0 == name).unwrap().1;
        let err: Vec<f64> = l.iter().map(|x| (x - exact).abs()).collect();
        assert!(err.windows(2).all(|w| w[1] < w[0]), "{name}: {err:?}");
        assert!(*err.last().unwrap() <= 2e-2, "{name}");
    }
    let w = &g.boundary_weights;
    let trace_mass: f64 = r.trace.density.iter().zip(w).map(|(a, b)| a * b).sum();
    assert!((trace_mass - 1.0).abs() < 1e-6);
}

#[test]
fn poisson_kernel_layers_vanish_away_from_the_pole() {
    let lab = Lab::default_disk().unwrap();
    let g = &lab.grid;
    let u = solution(&lab, &Potential::zero(), &BoundaryMeasure::dirac(g, 0.0, 1.0));
    let z: Vec<f64> = g.angular_nodes.iter().map(|t| if (t - std::f64::consts::PI).abs() < 1.0 { 1.0 } else { 0.0 }).collect();
    let l = layer_trace(&lab, &u, &z, &default_eps(&lab)).unwrap();
    assert!(l.windows(2).all(|w| w[1] < w[0]));
    assert!(*l.last().unwrap() < 1e-3);
}

#[test]
fn hardy_solution_is_singular_everywhere_and_has_no_extended_trace() {
    let lab = Lab::default_disk().unwrap();
    let v = Potential::distance_power(2.0, 2.0);
    let u = volterra_field(&lab, 1.0, 2.0).unwrap();
    assert!(u.values.iter().all(|x| *x > 0.0));
    let r = regular_set(&lab, &u, &v, 16).unwrap();
    assert_eq!(r.singular_set.len(), lab.grid.k());
    let zv = zv_detect(&lab, &v).unwrap();
    let p = CapacityProblem::new(&lab, &v).unwrap().with_singular(&zv);
    let rec = HarmonicRecovery::new(&lab).unwrap();
    let dict = trace_dictionary(&lab, 4, &[1.0], 4);
    let ext = extended_trace(&lab, &rec, &v, &p, &u, &r, &dict, true).unwrap();
    assert_eq!(ext.total, 0.0);
    assert!(ext.candidates.iter().all(|c| !c.good));
    // sweeping the rejected candidates anyway finds nothing either
    for c in &ext.candidates {
        assert!(c.gamma_mass.unwrap().abs() < 2e-2, "{c:?}");
    }
}

#[test]
fn extended_trace_of_a_regular_solution_is_its_data() {
    let s = setup();
    let g = &s.lab.grid;
    let mu = BoundaryMeasure::from_density(g, |t| 1.0 + 0.5 * (2.0 * t).cos());
    let u = solution(&s.lab, &s.v, &mu);
    let r = regular_set(&s.lab, &u, &s.v, 16).unwrap();
    let dict = trace_dictionary(&s.lab, 4, &[1.0], 4);
    let ext = extended_trace(&s.lab, &s.rec, &s.v, &s.problem, &u, &r, &dict, false).unwrap();
    assert!((ext.total - mu.total_mass(g)).abs() < 1e-6 * mu.total_mass(g), "{}", ext.total);
    assert!(ext.additivity_gap < 1e-12);
    assert!(ext.sensitivity < 0.05);
}

#[test]
fn sweep_of_a_dominating_solution_returns_the_measure() {
    let s = setup();
    let g = &s.lab.grid;
    let mu = BoundaryMeasure::from_density(g, |t| 0.5 + 0.2 * t.sin());
    let u = solution(&s.lab, &s.v, &BoundaryMeasure::uniform(g, 2.0));
    let sw = sweep(&s.lab, &s.rec, &s.v, &s.problem, &u, &mu).unwrap();
    assert_eq!(sw.route, SweepRoute::Discrete);
    assert!((sw.mass - mu.total_mass(g)).abs() < 1e-9);
    assert!((sw.layer_mass - sw.mass).abs() <= 3.0 * sw.layer_error.max(1e-3));
}

fn bump_measure(g: &bvpm::domain::PolarGrid, c: f64, w: f64, h: f64) -> BoundaryMeasure {
    BoundaryMeasure::from_density(g, move |t| {
        let d = (t - c + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        if d.abs() < w { h * (1.0 - (d / w).powi(2)) } else { 0.0 }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn sweeping_is_dominated_monotone_and_subadditive(
        c1 in 0.0..6.28f64, c2 in 0.0..6.28f64, w1 in 0.2..1.5f64, w2 in 0.2..1.5f64,
        h1 in 0.1..3.0f64, h2 in 0.1..3.0f64, level in 0.2..2.0f64,
    ) {
        let s = setup();
        let g = &s.lab.grid;
        let u = solution(&s.lab, &s.v, &BoundaryMeasure::from_density(g, |t| level * (1.0 + 0.5 * t.cos())));
        let a = bump_measure(g, c1, w1, h1);
        let b = bump_measure(g, c2, w2, h2);
        let ab = a.plus(&b);
        let sa = sweep(&s.lab, &s.rec, &s.v, &s.problem, &u, &a).unwrap();
        let sb = sweep(&s.lab, &s.rec, &s.v, &s.problem, &u, &b).unwrap();
        let sab = sweep(&s.lab, &s.rec, &s.v, &s.problem, &u, &ab).unwrap();
        let tol = 1e-6 * ab.total_mass(g);
        for j in 0..g.k() {
            prop_assert!(sa.gamma.density[j] <= a.density[j] + tol);
            prop_assert!(sa.gamma.density[j] <= sab.gamma.density[j] + tol);
            prop_assert!(sab.gamma.density[j] <= sa.gamma.density[j] + sb.gamma.density[j] + tol);
        }
        prop_assert!(sweep_excess(&s.lab, &s.v, &sab).unwrap() <= 1e-3);
    }
}
