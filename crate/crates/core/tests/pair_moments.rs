use latticesir::first_moments::Rates;
use latticesir::kernel::{build_kernel_asymmetric, kernel_nearest_neighbor};
use latticesir::lattice::LatticeSpec;
use latticesir::second_moments::{m2_inhomogeneous, m2_ode_oracle, CompartmentPair, PairKind};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn duhamel_matches_oracle_nearest_neighbor() {
    let k = kernel_nearest_neighbor(1).unwrap();
    let l = LatticeSpec::new(1, 8).unwrap();
    for (beta, gamma) in [(0.4, 0.6), (0.6, 0.4), (0.5, 0.5)] {
        let r = Rates::new(1.0, beta, gamma, 1.0).unwrap();
        for t in [0.5, 1.0, 3.0] {
            let oracle = m2_ode_oracle(&k, &r, t, &l).unwrap();
            let same = m2_inhomogeneous(&k, &r, t, &l, PairKind::SameSite, None, None).unwrap();
            let pair = m2_inhomogeneous(&k, &r, t, &l, PairKind::Pair, Some([1, 0, 0]), None).unwrap();
            assert!(rel(same.value, oracle.get(CompartmentPair::II, 0, 0)) < 1e-8, "{beta} {t}");
            assert!(rel(pair.value, oracle.get(CompartmentPair::II, 0, 1)) < 1e-8, "{beta} {t}");
        }
    }
}

#[test]
fn duhamel_matches_oracle_off_origin_and_asymmetric() {
    let k = build_kernel_asymmetric(2, &[(vec![1, 0], 0.5), (vec![0, -1], 0.3), (vec![-1, 1], 0.2)]).unwrap();
    let l = LatticeSpec::new(2, 5).unwrap();
    let r = Rates::new(0.7, 0.5, 0.3, 1.0).unwrap();
    let t = 1.3;
    let oracle = m2_ode_oracle(&k, &r, t, &l).unwrap();
    let site = [1, 2, 0];
    let x = l.index(&site);
    let y = l.index(&[2, 1, 0]);
    let same = m2_inhomogeneous(&k, &r, t, &l, PairKind::SameSite, None, Some(site)).unwrap();
    let pair = m2_inhomogeneous(&k, &r, t, &l, PairKind::Pair, Some([1, -1, 0]), Some(site)).unwrap();
    assert!(same.conjectural);
    assert!(rel(same.value, oracle.get(CompartmentPair::II, x, x)) < 1e-8);
    assert!(rel(pair.value, oracle.get(CompartmentPair::II, x, y)) < 1e-8);
}

#[test]
fn oracle_pair_fields_are_consistent() {
    let k = kernel_nearest_neighbor(1).unwrap();
    let l = LatticeSpec::new(1, 6).unwrap();
    let r = Rates::new(1.0, 0.6, 0.4, 1.0).unwrap();
    let f = m2_ode_oracle(&k, &r, 1.5, &l).unwrap();
    let n = l.sites();
    // Total infected squared: sum_xy II = E[I_tot^2]; I_tot is a birth-death
    // process with E[I^2]' = 2c E[I^2] + (beta+gamma) E[I].
    let c = 0.2f64;
    let t = 1.5f64;
    let e1 = (c * t).exp();
    let e2 = (2.0 * c * t).exp() + (1.0 / c) * e1 * (c * t).exp_m1();
    let total: f64 = f.ii.iter().sum();
    assert!(rel(total, e2) < 1e-10);
    // Symmetry in (x, y) for every symmetric pair block.
    for x in 0..n {
        for y in 0..n {
            for b in [CompartmentPair::II, CompartmentPair::SS, CompartmentPair::RR] {
                assert!((f.get(b, x, y) - f.get(b, y, x)).abs() < 1e-12);
            }
        }
    }
}
