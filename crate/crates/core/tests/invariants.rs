use bvpm::domain::GridSpec;
use bvpm::kernels::BoundaryMeasure;
use bvpm::lab::Lab;
use bvpm::potentials::Potential;
use bvpm::solver::{default_atom_width, solve_dirichlet, solve_measure};
use proptest::prelude::*;
use std::sync::OnceLock;

fn lab() -> &'static Lab {
    static L: OnceLock<Lab> = OnceLock::new();
    L.get_or_init(|| Lab::new(GridSpec::disk(48, 48)).unwrap())
}

fn data(a: f64, b: f64, n: u32) -> BoundaryMeasure {
    BoundaryMeasure::from_density(&lab().grid, move |t| a + b * (n as f64 * t).cos())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn solutions_are_linear_in_the_data(a in 1.0..3.0f64, b in -0.9..0.9f64, n in 1u32..6, s in 0.1..5.0f64, c in 0.0..10.0f64) {
        let v = Potential::bounded(c);
        let (u, _) = solve_dirichlet(lab(), &v, &data(a, b, n)).unwrap();
        let (us, _) = solve_dirichlet(lab(), &v, &data(a, b, n).scaled(s)).unwrap();
        for (x, y) in u.values.iter().zip(&us.values) {
            prop_assert!((s * x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn larger_data_gives_larger_solutions(a in 1.0..3.0f64, b in -0.9..0.9f64, extra in 0.0..1.0f64, alpha in 0.0..2.5f64) {
        let v = Potential::distance_power(1.0, alpha);
        let (u, _) = solve_dirichlet(lab(), &v, &data(a, b, 2)).unwrap();
        let (u2, _) = solve_dirichlet(lab(), &v, &data(a + extra, b, 2)).unwrap();
        prop_assert!(u.values.iter().zip(&u2.values).all(|(x, y)| *y >= x - 1e-12));
    }

    #[test]
    fn larger_potentials_give_smaller_solutions(c in 0.0..5.0f64, dc in 0.0..5.0f64, alpha in 0.0..2.5f64) {
        let mu = data(1.0, 0.5, 3);
        let (u, _) = solve_dirichlet(lab(), &Potential::distance_power(c, alpha), &mu).unwrap();
        let (u2, _) = solve_dirichlet(lab(), &Potential::distance_power(c + dc, alpha), &mu).unwrap();
        prop_assert!(u.values.iter().zip(&u2.values).all(|(x, y)| *y <= x + 1e-12));
        prop_assert!(u2.values.iter().all(|x| *x >= -1e-12));
    }

    #[test]
    fn truncation_chains_decrease(alpha in 1.0..3.0f64, theta in 0.0..6.28f64) {
        let g = &lab().grid;
        let s = solve_measure(lab(), &Potential::distance_power(1.0, alpha), &BoundaryMeasure::dirac(g, theta, 1.0), &[1.0, 4.0, 16.0, 64.0], default_atom_width(g)).unwrap();
        for w in s.fields.windows(2) {
            prop_assert!(w[0].values.iter().zip(&w[1].values).all(|(a, b)| *b <= a + 1e-9));
        }
    }
}
