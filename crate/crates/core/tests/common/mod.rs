//! Reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use latticesir::kernel::MobilityKernel;
use latticesir::lattice::LatticeSpec;

/// `p(t, 0, x)` by uniformization: Poisson-weighted powers of the jump chain.
pub fn uniformized(kernel: &MobilityKernel, kappa: f64, t: f64, lattice: &LatticeSpec) -> Vec<f64> {
    let n = lattice.sites();
    let mut dist = vec![0.0; n];
    dist[0] = 1.0;
    let mut out = vec![0.0; n];
    let lam = kappa * t;
    let mut log_w = -lam;
    let mut k = 0u32;
    loop {
        let w = log_w.exp();
        for x in 0..n {
            out[x] += w * dist[x];
        }
        if k as f64 > lam && w < 1e-40 {
            break;
        }
        let mut next = vec![0.0; n];
        for x in 0..n {
            if dist[x] == 0.0 {
                continue;
            }
            for (z, a) in kernel.support() {
                next[lattice.shift(x, z)] += a * dist[x];
            }
        }
        dist = next;
        k += 1;
        log_w += lam.ln() - (k as f64).ln();
    }
    out
}

/// `e^{-x} I_nu(x)` by its power series.
pub fn scaled_bessel_i(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut log_term = nu as f64 * half.ln() - x - ln_factorial(nu);
    let mut sum = 0.0;
    for k in 0..400u32 {
        sum += log_term.exp();
        log_term += 2.0 * half.ln() - ((k + 1) as f64).ln() - ((k + 1 + nu) as f64).ln();
    }
    sum
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `e^{-x} I_0(x)`: series below 20, asymptotic expansion above.
fn scaled_i0(x: f64) -> f64 {
    if x <= 20.0 {
        return scaled_bessel_i(0, x);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let odd = (2 * k - 1) as f64;
        term *= odd * odd / (k as f64 * 8.0 * x);
        sum += term;
        if term < 1e-17 {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

pub fn gl(order: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(order).unwrap())
}

/// `kappa G_0(0,0)` for the nearest-neighbour walk on Z^3 as
/// `3 int_0^inf (e^{-x} I_0(x))^3 dx`, with an asymptotic tail.
pub fn watson_time_domain() -> f64 {
    let rule = gl(30);
    let f = |x: f64| scaled_i0(x).powi(3);
    let mut acc = rule.integrate(0.0, 1.0, f);
    let mut a = 1.0;
    let cut = (1u64 << 22) as f64;
    while a < cut {
        let b = 2.0 * a;
        // Split each octave so the series/asymptotic switch is resolved.
        for p in 0..4 {
            let lo = a + (b - a) * p as f64 / 4.0;
            let hi = a + (b - a) * (p + 1) as f64 / 4.0;
            acc += rule.integrate(lo, hi, f);
        }
        a = b;
    }
    // (1 + c1/x + c2/x^2)^3 (2 pi x)^{-3/2}, integrated from the cut.
    let (c1, c2) = (1.0 / 8.0, 9.0 / 128.0);
    let cube = [1.0, 3.0 * c1, 3.0 * c2 + 3.0 * c1 * c1];
    let tail: f64 = cube.iter().enumerate().map(|(j, c)| c * cut.powf(-0.5 - j as f64) / (0.5 + j as f64)).sum::<f64>()
        / (2.0 * PI).powf(1.5);
    3.0 * (acc + tail)
}
