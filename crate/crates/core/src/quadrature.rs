//! Composite Gauss-Legendre quadrature with panel doubling.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::summation::Neumaier;

/// Nodes per panel.
const ORDER: usize = 10;

/// Result of a converged integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub nodes: usize,
}

/// Integrates `f` over `[a, b]`, doubling the panel count until two
/// successive estimates agree to `rel_tol` relative to `|offset + value|`.
///
/// `offset` lets the caller measure convergence against the full quantity
/// the integral contributes to.
pub fn integrate_doubling<F>(f: F, a: f64, b: f64, rel_tol: f64, offset: f64, max_nodes: usize) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    integrate_pieces(f, &[a, b], rel_tol, offset, max_nodes)
}

/// Breakpoints of `[0, t]` refined geometrically towards both ends, with the
/// innermost pieces of length `scale` (or `t/2` if smaller).
pub fn graded_breaks(t: f64, scale: f64) -> Vec<f64> {
    if !(t > 0.0) {
        return vec![0.0, t];
    }
    let half = 0.5 * t;
    let mut left = vec![0.0];
    let mut h = scale.min(half);
    while h < half {
        left.push(h);
        h *= 2.0;
    }
    let mut out = left.clone();
    out.push(half);
    out.extend(left.iter().rev().map(|x| t - x));
    out
}

/// Composite rule over consecutive pieces `breaks[i]..breaks[i+1]`, every
/// piece refined together.
pub fn integrate_pieces<F>(mut f: F, breaks: &[f64], rel_tol: f64, offset: f64, max_nodes: usize) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    let pieces: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| a != b).collect();
    if pieces.is_empty() {
        return Ok(Quadrature { value: 0.0, nodes: 0 });
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(ORDER).expect("nonzero order"));
    let composite = |panels: usize, f: &mut F| -> f64 {
        let mut acc = Neumaier::default();
        for &(a, b) in &pieces {
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + h * p as f64;
                acc.add(rule.integrate(lo, lo + h, &mut *f));
            }
        }
        acc.value()
    };
    let per_round = pieces.len() * ORDER;
    let mut panels = 1;
    let mut prev = composite(panels, &mut f);
    let mut change = f64::INFINITY;
    while 2 * panels * per_round <= max_nodes {
        panels *= 2;
        let next = composite(panels, &mut f);
        change = (next - prev).abs();
        let scale = (offset + next).abs();
        if change <= rel_tol * scale || change == 0.0 {
            return Ok(Quadrature { value: next, nodes: panels * per_round });
        }
        prev = next;
    }
    Err(Error::QuadratureStall {
        nodes: panels * per_round,
        change: change / (offset + prev).abs().max(f64::MIN_POSITIVE),
    })
}
