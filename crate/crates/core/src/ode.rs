//! Linear ODE integration on the torus for the oracle solvers.

use ode_solvers::dop853::Dop853;
use ode_solvers::dop_shared::OutputType;
use ode_solvers::{DVector, System};

use crate::error::{Error, Result};
use crate::kernel::MobilityKernel;
use crate::lattice::LatticeSpec;

/// Relative tolerance used by every oracle integration.
pub const ORACLE_RTOL: f64 = 1e-13;
/// Absolute tolerance; small enough that tails near 1e-20 keep relative accuracy.
pub const ORACLE_ATOL: f64 = 1e-28;

/// The forward jump operator `f -> sum_z a(z) [f(x - z) - f(x)]` on one copy of the torus.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    sites: usize,
    weights: Vec<f64>,
    /// `sources[x * m + j]` is the index of `x - z_j`.
    sources: Vec<usize>,
}

impl JumpOperator {
    pub fn new(kernel: &MobilityKernel, lattice: &LatticeSpec) -> Result<Self> {
        if kernel.d() != lattice.d() {
            return Err(Error::DimensionMismatch { kernel: kernel.d(), lattice: lattice.d() });
        }
        let sites = lattice.sites();
        let support = kernel.support();
        let mut sources = Vec::with_capacity(sites * support.len());
        for x in 0..sites {
            for (z, _) in support {
                sources.push(lattice.shift(x, &[-z[0], -z[1], -z[2]]));
            }
        }
        Ok(JumpOperator { sites, weights: support.iter().map(|(_, w)| *w).collect(), sources })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// `(x - z_j, a(z_j))` pairs for site `x`.
    pub fn sources(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let m = self.weights.len();
        self.sources[x * m..(x + 1) * m].iter().copied().zip(self.weights.iter().copied())
    }

    /// `sum_z a(z) f(x - z)` without the diagonal term.
    #[inline]
    pub fn gather(&self, f: &[f64], x: usize) -> f64 {
        self.sources(x).map(|(s, w)| w * f[s]).sum()
    }

    /// `out += scale * L* f`.
    pub fn apply_add(&self, f: &[f64], scale: f64, out: &mut [f64]) {
        for x in 0..self.sites {
            out[x] += scale * (self.gather(f, x) - f[x]);
        }
    }
}

struct Linear<F> {
    rhs: F,
}

impl<F: Fn(&[f64], &mut [f64])> System<f64, DVector<f64>> for Linear<F> {
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        (self.rhs)(y.as_slice(), dy.as_mut_slice());
    }
}

/// Integrates `y' = rhs(y)` from 0 to `t` with an adaptive 8th-order
/// Runge-Kutta method and returns `y(t)`.
pub fn integrate<F>(rhs: F, y0: Vec<f64>, t: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    integrate_with(rhs, y0, t, ORACLE_RTOL, ORACLE_ATOL)
}

/// [`integrate`] with explicit tolerances.
pub fn integrate_with<F>(rhs: F, y0: Vec<f64>, t: f64, rtol: f64, atol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    if t == 0.0 {
        return Ok(y0);
    }
    let mut solver = Dop853::new(Linear { rhs }, 0.0, t, t, DVector::from_vec(y0), rtol, atol);
    // Dense output is not used: only the end state matters.
    solver.set_output(OutputType::Sparse);
    solver.integrate().map_err(|e| Error::IntegratorFailure(format!("{e:?}")))?;
    solver
        .y_out()
        .last()
        .map(|y| y.as_slice().to_vec())
        .ok_or_else(|| Error::IntegratorFailure("no output state".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_nearest_neighbor;

    #[test]
    fn exponential_decay() {
        let y = integrate(|y, dy| dy[0] = -0.7 * y[0], vec![2.0], 3.0).unwrap();
        assert!((y[0] - 2.0 * (-2.1f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn jump_operator_conserves_mass() {
        let k = kernel_nearest_neighbor(2).unwrap();
        let l = LatticeSpec::new(2, 5).unwrap();
        let op = JumpOperator::new(&k, &l).unwrap();
        let f: Vec<f64> = (0..l.sites()).map(|i| (i as f64).sin() + 2.0).collect();
        let mut out = vec![0.0; l.sites()];
        op.apply_add(&f, 1.0, &mut out);
        assert!(out.iter().sum::<f64>().abs() < 1e-13);
    }
}
