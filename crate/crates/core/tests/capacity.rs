use bvpm::capacity::*;
use bvpm::domain::GridSpec;
use bvpm::kernels::{BoundaryMeasure, Field};
use bvpm::lab::Lab;
use bvpm::potentials::Potential;
use bvpm_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn singleton_capacity_for_unit_potential_matches_eigen_identity() {
    let lab = Lab::default_disk().unwrap();
    let p = CapacityProblem::new(&lab, &Potential::bounded(1.0)).unwrap();
    let exact = oracle::disk_kcheck_one();
    for j in [0, 77, 200] {
        assert!((p.a[j] - exact).abs() / exact < 1e-2, "{} vs {exact}", p.a[j]);
        let c = capacity(&p, &BoundarySet { nodes: vec![j] }).unwrap();
        assert!((c.primal_value - 1.0 / p.a[j]).abs() < 1e-12);
        assert!(c.duality_gap.abs() < 1e-8);
    }
}

#[test]
fn adjoint_operator_agrees_with_normal_derivative_route() {
    let lab = Lab::new(GridSpec::disk(128, 128)).unwrap();
    let v = Potential::distance_power(1.0, 1.5);
    let f = Field::from_fn(lab.grid.clone(), |r, t| 1.0 + 0.5 * r * t.cos());
    let a = kcheck(&lab, &v, &f);
    let b = kcheck_normal(&lab, &v, &f).unwrap();
    let scale = a.iter().cloned().fold(0.0, f64::max);
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err / scale < 2e-2, "{}", err / scale);
}

#[test]
fn energy_equals_adjoint_pairing() {
    let lab = Lab::new(GridSpec::disk(96, 96)).unwrap();
    let g = &lab.grid;
    let v = Potential::bounded(2.0);
    let f = Field::from_fn(lab.grid.clone(), |r, t| 1.0 + r * r * (2.0 * t).sin());
    let mu = BoundaryMeasure::from_density(g, |t| 1.0 + 0.3 * t.cos()).plus(&BoundaryMeasure::dirac(g, 0.4, 0.7));
    let e = energy(&lab, &v, &f, &mu).unwrap();
    let p = kcheck_pairing(&lab, &v, &f, &mu);
    assert!((e - p).abs() / p.abs() < 1e-3, "{e} {p}");
}

#[test]
fn duality_on_random_arcs() {
    let lab = Lab::new(GridSpec::disk(128, 128)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for v in [Potential::bounded(1.0), Potential::distance_power(1.0, 1.5)] {
        let p = CapacityProblem::new(&lab, &v).unwrap();
        for _ in 0..10 {
            let t0 = rng.gen_range(0.0..std::f64::consts::TAU);
            let e = BoundarySet::arc(&lab, t0, t0 + rng.gen_range(0.05..2.0));
            let c = capacity(&p, &e).unwrap();
            assert!((c.primal_value - c.dual_value).abs() <= 1e-8, "{} {}", c.primal_value, c.dual_value);
            assert!((c.primal_simplex - c.primal_value).abs() <= 1e-8);
            assert!((capacity_compact_formula(&p, &e) - c.primal_value).abs() <= 1e-8);
            let e2 = BoundarySet::arc(&lab, t0 + 2.5, t0 + 3.0);
            let u = capacity(&p, &e.union(&e2)).unwrap().primal_value;
            let m = c.primal_value.max(capacity(&p, &e2).unwrap().primal_value);
            assert!((u - m).abs() <= 1e-12);
        }
    }
}

#[test]
fn singular_set_of_power_family() {
    let lab = Lab::new(GridSpec::disk(128, 128)).unwrap();
    assert!(zv_detect(&lab, &Potential::bounded(1.0)).unwrap().singular.is_empty());
    assert!(zv_detect(&lab, &Potential::distance_power(1.0, 1.5)).unwrap().singular.is_empty());
    assert_eq!(zv_detect(&lab, &Potential::distance_power(1.0, 2.0)).unwrap().singular.len(), lab.grid.k());
}

#[test]
fn capacity_vanishes_on_singular_sets() {
    let lab = Lab::new(GridSpec::disk(64, 64)).unwrap();
    let v = Potential::distance_power(1.0, 2.0);
    let zv = zv_detect(&lab, &v).unwrap();
    let p = CapacityProblem::new(&lab, &v).unwrap().with_singular(&zv);
    let c = capacity(&p, &BoundarySet::arc(&lab, 0.0, 1.0)).unwrap();
    assert_eq!(c.primal_value, 0.0);
    assert!(c.dual_unbounded);
}

#[test]
fn good_measure_restrictions_increase() {
    let lab = Lab::new(GridSpec::disk(128, 128)).unwrap();
    let g = &lab.grid;
    let v = Potential::cone_singular(0.0, 0.5, 1.0, 2.5).unwrap();
    let zv = zv_detect(&lab, &v).unwrap();
    assert!(!zv.singular.is_empty() && zv.singular.len() < g.k());
    let p = CapacityProblem::new(&lab, &v).unwrap().with_singular(&zv);
    let mu = BoundaryMeasure::from_density(g, |t| if zv.singular.contains(g.nearest_angle(t)) { 0.0 } else { 1.0 });
    let finite: Vec<f64> = p.a.iter().cloned().filter(|a| a.is_finite()).collect();
    let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().cloned().fold(0.0, f64::max);
    let levels = [lo * 1.01, 0.5 * (lo + hi), hi];
    let lim = good_measure_limit(&lab, &v, &mu, &p, &levels).unwrap();
    assert!(lim.increasing && lim.norm_bound_holds);
    assert!(lim.stages.windows(2).all(|w| w[0].mass <= w[1].mass));
    assert!((lim.stages[2].mass - mu.total_mass(g)).abs() < 1e-12);
    assert!(good_measure_limit(&lab, &v, &BoundaryMeasure::uniform(g, 1.0), &p, &levels).is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn problem() -> &'static (Lab, CapacityProblem) {
        static P: OnceLock<(Lab, CapacityProblem)> = OnceLock::new();
        P.get_or_init(|| {
            let lab = Lab::new(GridSpec::disk(64, 64)).unwrap();
            let p = CapacityProblem::new(&lab, &Potential::cone_singular(1.0, 0.5, 1.0, 1.5).unwrap()).unwrap();
            (lab, p)
        })
    }

    proptest! {
        #[test]
        fn capacity_is_monotone_and_maxitive(t0 in 0.0..6.28f64, l1 in 0.01..3.0f64, extra in 0.0..2.0f64, t2 in 0.0..6.28f64) {
            let (lab, p) = problem();
            let small = BoundarySet::arc(lab, t0, t0 + l1);
            let big = BoundarySet::arc(lab, t0, t0 + l1 + extra);
            let other = BoundarySet::arc(lab, t2, t2 + 0.3);
            let c = |e: &BoundarySet| capacity_primal(p, e).unwrap().primal_value;
            prop_assert!(c(&small) <= c(&big));
            prop_assert_eq!(c(&small.union(&other)), c(&small).max(c(&other)));
        }
    }
}
