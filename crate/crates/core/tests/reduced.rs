use bvpm::kernels::BoundaryMeasure;
use bvpm::lab::Lab;
use bvpm::potentials::Potential;
use bvpm::reduced::*;
use bvpm::solver::{default_atom_width, default_schedule};
use bvpm::verdict::Classification;
use std::f64::consts::TAU;

#[test]
fn bounded_potential_keeps_the_whole_measure() {
    let lab = Lab::default_disk().unwrap();
    let g = &lab.grid;
    let rec = HarmonicRecovery::new(&lab).unwrap();
    let v = Potential::bounded(1.0);
    let r = reduce_with(&lab, &rec, &v, &BoundaryMeasure::uniform(g, 1.0), &default_schedule(), default_atom_width(g)).unwrap();
    assert!((r.reduced_mass - TAU).abs() < 1e-4, "{}", r.reduced_mass);
    let r = reduce_with(&lab, &rec, &v, &BoundaryMeasure::dirac(g, 0.0, 1.0), &default_schedule(), default_atom_width(g)).unwrap();
    assert!((r.reduced_mass - 1.0).abs() < 1e-4, "{}", r.reduced_mass);
    // μ* ≤ μ up to the coefficient noise of the extrapolation
    let excess = r.reduced_density.iter().zip(&r.data_density).map(|(a, b)| a - b).fold(f64::MIN, f64::max);
    assert!(excess < 1e-4, "{excess}");
}

#[test]
fn hardy_potential_annihilates_the_measure() {
    let lab = Lab::default_disk().unwrap();
    let g = &lab.grid;
    let rec = HarmonicRecovery::new(&lab).unwrap();
    let v = Potential::distance_power(2.0, 2.0);
    for mu in [BoundaryMeasure::uniform(g, 1.0), BoundaryMeasure::dirac(g, 0.0, 1.0)] {
        let r = reduce_with(&lab, &rec, &v, &mu, &default_schedule(), default_atom_width(g)).unwrap();
        assert!(r.reduced_mass.abs() <= 1e-2 * r.data_mass, "{} of {}", r.reduced_mass, r.data_mass);
    }
}

#[test]
fn subcritical_power_loses_no_mass() {
    // α < 2 keeps every boundary point regular, so μ* = μ
    let lab = Lab::default_disk().unwrap();
    let g = &lab.grid;
    let rec = HarmonicRecovery::new(&lab).unwrap();
    let v = Potential::distance_power(1.0, 1.5);
    let r = reduce_with(&lab, &rec, &v, &BoundaryMeasure::uniform(g, 1.0), &default_schedule(), default_atom_width(g)).unwrap();
    assert!((r.reduced_mass - TAU).abs() <= 3.0 * r.mass_error.max(0.01), "{} ± {}", r.reduced_mass, r.mass_error);
}

#[test]
fn layer_fit_recovers_synthetic_limits() {
    let eta: Vec<f64> = (0..20).map(|j| 0.1 * 2f64.powf(-j as f64 / 2.0)).collect();
    let x0 = eta[0];
    let smooth: Vec<f64> = eta.iter().map(|e| 3.0 + 0.7 * (e / x0).powf(1.3)).collect();
    let f = fit_layer_trace(&eta, &smooth);
    assert!((f.limit - 3.0).abs() < 1e-6, "{f:?}");
    let xmin = eta[19] / x0;
    let layered: Vec<f64> = eta.iter().map(|e| 1.0 + 0.5 * (e / x0) + 2.0 * (xmin * x0 / e).powf(0.6)).collect();
    let f = fit_layer_trace(&eta, &layered);
    assert_eq!(f.model, LayerModel::Layer);
    assert!((f.limit - 1.0).abs() < 1e-3, "{f:?}");
}

#[test]
fn detectors_agree_on_the_power_family() {
    let lab = Lab::default_disk().unwrap();
    for (alpha, singular) in [(1.0, false), (1.5, false), (2.0, true), (2.5, true)] {
        let v = Potential::distance_power(1.0, alpha);
        let k = sing_detect_kernel(&lab, &v, 0.0, &[0.0, 0.0]).unwrap();
        let gr = sing_detect_green_ratio(&lab, &v, 0, 0).unwrap();
        assert_eq!(k.membership, gr.membership, "α={alpha}");
        assert_eq!(k.membership == Membership::Singular, singular, "α={alpha}");
        let cone = cone_criterion(&lab, &v, &ConeRegion::new(0.0, 0.5).unwrap()).unwrap();
        assert_eq!(cone.is_divergent(), singular, "α={alpha}");
    }
}

#[test]
fn path_criterion_is_logarithmic_at_the_hardy_exponent() {
    let lab = Lab::default_disk().unwrap();
    let v = Potential::distance_power(1.0, 2.0);
    let p = path_criterion(&lab, &v, radial_path(&lab, 1.0)).unwrap();
    assert_eq!(p.classification, Classification::DivergentLog);
}
