//! Independent reference computations checked against the library.

mod common;

use common::{gl, scaled_bessel_i, uniformized, watson_time_domain};
use latticesir::first_moments::{m1_inhomogeneous, m1_ode_oracle, Rates};
use latticesir::kernel::{build_kernel_asymmetric, kernel_gaussian, kernel_nearest_neighbor};
use latticesir::lattice::LatticeSpec;
use latticesir::torus::{green_function, p00, transition_probability, Propagator};

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

#[test]
fn propagator_matches_uniformization_in_the_tails() {
    let k = kernel_nearest_neighbor(1).unwrap();
    let l = LatticeSpec::new(1, 16).unwrap();
    for t in [0.5, 1.0, 2.0] {
        let p = transition_probability(&k, 1.0, t, &l).unwrap();
        let oracle = uniformized(&k, 1.0, t, &l);
        assert!(max_rel(&p.values, &oracle) < 1e-12, "t = {t}");
    }
    let g = kernel_gaussian(2, 2.0, 3).unwrap();
    let l2 = LatticeSpec::new(2, 12).unwrap();
    let p = transition_probability(&g, 0.7, 1.5, &l2).unwrap();
    assert!(max_rel(&p.values, &uniformized(&g, 0.7, 1.5, &l2)) < 1e-10);
}

#[test]
fn asymmetric_propagator_matches_uniformization() {
    let k = build_kernel_asymmetric(2, &[(vec![1, 0], 0.6), (vec![0, 1], 0.1), (vec![-1, -1], 0.3)]).unwrap();
    let l = LatticeSpec::new(2, 8).unwrap();
    let p = Propagator::extended(&k, &l).unwrap().field(1.0, 2.0);
    assert!(max_rel(&p, &uniformized(&k, 1.0, 2.0, &l)) < 1e-12);
    let fast = Propagator::fast(&k, &l).unwrap().field(1.0, 2.0);
    let abs = fast.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(abs < 1e-15);
}

#[test]
fn one_dimensional_walk_is_a_bessel_function() {
    // On Z, p(t,0,x) = e^{-t} I_x(t) for kappa = 1; on the torus sum the images.
    let k = kernel_nearest_neighbor(1).unwrap();
    let n = 40;
    let l = LatticeSpec::new(1, n).unwrap();
    let t = 3.0;
    let p = transition_probability(&k, 1.0, t, &l).unwrap();
    for x in 0..n as i64 {
        let mut expect = 0.0;
        for j in -3i64..=3 {
            let m = (x + j * n as i64).unsigned_abs() as u32;
            if m < 200 {
                expect += scaled_bessel_i(m, t);
            }
        }
        let got = p.at(l.index(&[x, 0, 0]));
        assert!(((got - expect) / expect).abs() < 1e-11, "x = {x}: {got} vs {expect}");
    }
}

#[test]
fn chapman_kolmogorov() {
    let k = build_kernel_asymmetric(1, &[(vec![1], 0.7), (vec![-2], 0.3)]).unwrap();
    let l = LatticeSpec::new(1, 11).unwrap();
    let prop = Propagator::new(&k, &l).unwrap();
    let (a, b) = (prop.field(1.0, 0.8), prop.field(1.0, 1.7));
    let ab = prop.field(1.0, 2.5);
    for x in 0..l.sites() {
        let conv: f64 = (0..l.sites()).map(|u| a[u] * b[l.index(&[x as i64 - u as i64, 0, 0])]).sum();
        assert!((conv - ab[x]).abs() < 1e-15 + 1e-12 * ab[x]);
    }
}

#[test]
fn resolvent_matches_closed_form_in_one_dimension() {
    // (1/2pi) int dk / (lambda + kappa (1 - cos k)) = 1 / sqrt((lambda+kappa)^2 - kappa^2).
    let k = kernel_nearest_neighbor(1).unwrap();
    let l = LatticeSpec::new(1, 256).unwrap();
    for (kappa, lambda) in [(1.0, 0.5), (2.0, 0.1), (0.3, 2.0)] {
        let g = green_function(&k, kappa, lambda, &l).unwrap().value.unwrap();
        let exact = 1.0 / ((lambda + kappa) * (lambda + kappa) - kappa * kappa).sqrt();
        assert!(((g - exact) / exact).abs() < 1e-10, "{kappa} {lambda}");
    }
}

#[test]
fn resolvent_is_the_laplace_transform_of_p00() {
    let k = kernel_nearest_neighbor(2).unwrap();
    let l = LatticeSpec::new(2, 32).unwrap();
    let lambda = 0.8;
    let rule = gl(20);
    let mut acc = 0.0;
    let mut a = 0.0;
    let mut b = 0.25;
    while a < 80.0 {
        acc += rule.integrate(a, b, |t| (-lambda * t).exp() * p00(&k, 1.0, t, &l).unwrap());
        a = b;
        b *= 2.0;
    }
    let g = green_function(&k, 1.0, lambda, &l).unwrap().value.unwrap();
    assert!(((g - acc) / g).abs() < 1e-10, "{g} vs {acc}");
}

#[test]
fn watson_integral_from_two_sides() {
    let oracle = watson_time_domain();
    // Watson's closed form for the simple cubic lattice.
    let closed = 1.516_386_059_151_978;
    assert!((oracle - closed).abs() < 1e-8, "time-domain oracle {oracle}");
    let k = kernel_nearest_neighbor(3).unwrap();
    let g = green_function(&k, 1.0, 0.0, &LatticeSpec::new(3, 64).unwrap()).unwrap();
    assert!((g.value.unwrap() - oracle).abs() < 1e-3);
}

#[test]
fn first_moment_oracle_is_conservative_and_agrees() {
    let k = kernel_gaussian(1, 1.5, 3).unwrap();
    let l = LatticeSpec::new(1, 12).unwrap();
    let r = Rates::new(0.8, 0.7, 0.2, 2.0).unwrap();
    let spectral = m1_inhomogeneous(&k, &r, 1.7, &l).unwrap();
    let ode = m1_ode_oracle(&k, &r, 1.7, &l).unwrap();
    assert!(max_rel(&spectral.i.values, &ode.i.values) < 1e-9);
    assert!(max_rel(&spectral.s.values, &ode.s.values) < 1e-12);
    assert!((spectral.total() - (12.0 * 2.0 + 1.0)).abs() < 1e-11);
}
