//! First moments of the S, I, R fields, reproduction numbers and the
//! first-moment regime table.
//!
//! Initial data: `S = rho0` everywhere, `I = delta_0`, `R = 0`. Every
//! compartment's transform is a scalar times `e^{kappa a^(k) t}` (plus the
//! constant `rho0` in the zero mode for S), so one inverse transform per
//! time gives all three fields:
//!
//! ```text
//! I = e^{ct} p,   S = rho0 - beta J p,   R = gamma J p,
//! c = beta - gamma,   J = int_0^t e^{cs} ds.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{symbol, symbol_grid, MobilityKernel};
use crate::lattice::LatticeSpec;
use crate::ode::{integrate, JumpOperator};
use crate::torus::Propagator;

/// Relative threshold for treating `beta = gamma`.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    S,
    I,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho0: f64,
}

impl Rates {
    pub fn new(kappa: f64, beta: f64, gamma: f64, rho0: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("beta", beta), ("gamma", gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidRates(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(rho0.is_finite() && rho0 >= 0.0) {
            return Err(Error::InvalidRates(format!("rho0 = {rho0} must be finite and >= 0")));
        }
        Ok(Rates { kappa, beta, gamma, rho0 })
    }

    /// Net growth rate `beta - gamma`.
    pub fn growth(&self) -> f64 {
        self.beta - self.gamma
    }

    pub fn is_critical(&self) -> bool {
        (self.beta - self.gamma).abs() <= CRITICAL_TOLERANCE * self.beta.max(self.gamma)
    }

    /// `int_0^t e^{(beta-gamma)s} ds`.
    pub fn growth_integral(&self, t: f64) -> f64 {
        if self.is_critical() {
            t
        } else {
            let c = self.growth();
            (c * t).exp_m1() / c
        }
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// Site-local first moment with the mobility term dropped.
pub fn m1_homogeneous(rates: &Rates, t: f64, target: Compartment, at_origin: bool) -> Result<f64> {
    check_time(t)?;
    let j = rates.growth_integral(t);
    let delta = if at_origin { 1.0 } else { 0.0 };
    Ok(match target {
        Compartment::S => rates.rho0 - rates.beta * j * delta,
        Compartment::I => {
            if rates.is_critical() {
                delta
            } else {
                (rates.growth() * t).exp() * delta
            }
        }
        Compartment::R => rates.gamma * j * delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentField {
    pub t: f64,
    pub compartment: Compartment,
    pub lattice: LatticeSpec,
    pub values: Vec<f64>,
    pub conjectural: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMomentFields {
    pub s: MomentField,
    pub i: MomentField,
    pub r: MomentField,
}

impl FirstMomentFields {
    fn from_values(t: f64, lattice: &LatticeSpec, conjectural: bool, s: Vec<f64>, i: Vec<f64>, r: Vec<f64>) -> Self {
        let field = |compartment, values| MomentField { t, compartment, lattice: lattice.clone(), values, conjectural };
        FirstMomentFields { s: field(Compartment::S, s), i: field(Compartment::I, i), r: field(Compartment::R, r) }
    }

    pub fn get(&self, c: Compartment) -> &MomentField {
        match c {
            Compartment::S => &self.s,
            Compartment::I => &self.i,
            Compartment::R => &self.r,
        }
    }

    /// `sum_x (S + I + R)`.
    pub fn total(&self) -> f64 {
        crate::summation::neumaier_sum(self.s.values.iter().chain(&self.i.values).chain(&self.r.values).copied())
    }
}

/// First-moment fields from a precomputed propagator.
pub fn m1_from_propagator(prop: &Propagator, rates: &Rates, t: f64, conjectural: bool) -> Result<FirstMomentFields> {
    check_time(t)?;
    let p = prop.field(rates.kappa, t);
    let gain = if rates.is_critical() { 1.0 } else { (rates.growth() * t).exp() };
    let j = rates.growth_integral(t);
    let i = p.iter().map(|v| gain * v).collect();
    let s = p.iter().map(|v| rates.rho0 - rates.beta * j * v).collect();
    let r = p.iter().map(|v| rates.gamma * j * v).collect();
    Ok(FirstMomentFields::from_values(t, prop.lattice(), conjectural, s, i, r))
}

/// Spectral evaluation of the three first-moment fields on the torus.
pub fn m1_inhomogeneous(
    kernel: &MobilityKernel,
    rates: &Rates,
    t: f64,
    lattice: &LatticeSpec,
) -> Result<FirstMomentFields> {
    check_time(t)?;
    let prop = Propagator::new(kernel, lattice)?;
    m1_from_propagator(&prop, rates, t, !kernel.is_symmetric())
}

/// Direct integration of the first-moment ODE system on the torus.
pub fn m1_ode_oracle(
    kernel: &MobilityKernel,
    rates: &Rates,
    t: f64,
    lattice: &LatticeSpec,
) -> Result<FirstMomentFields> {
    check_time(t)?;
    let op = JumpOperator::new(kernel, lattice)?;
    let n = lattice.sites();
    let mut y0 = vec![0.0; 3 * n];
    y0[..n].fill(rates.rho0);
    y0[n] = 1.0;
    let Rates { kappa, beta, gamma, .. } = *rates;
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let (s, rest) = y.split_at(n);
        let (i, r) = rest.split_at(n);
        dy.fill(0.0);
        {
            let (ds, rest) = dy.split_at_mut(n);
            let (di, dr) = rest.split_at_mut(n);
            op.apply_add(s, kappa, ds);
            op.apply_add(i, kappa, di);
            op.apply_add(r, kappa, dr);
            for x in 0..n {
                ds[x] -= beta * i[x];
                di[x] += (beta - gamma) * i[x];
                dr[x] += gamma * i[x];
            }
        }
    };
    let y = integrate(rhs, y0, t)?;
    Ok(FirstMomentFields::from_values(
        t,
        lattice,
        !kernel.is_symmetric(),
        y[..n].to_vec(),
        y[n..2 * n].to_vec(),
        y[2 * n..].to_vec(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproductionNumbers {
    pub r0: f64,
    /// `(kappa Re a^(k) + beta) / gamma` per grid mode.
    pub per_mode: Vec<f64>,
    pub max: f64,
    pub conjectural: bool,
}

pub fn reproduction_numbers(
    kernel: &MobilityKernel,
    rates: &Rates,
    lattice: &LatticeSpec,
) -> Result<ReproductionNumbers> {
    if rates.gamma <= 0.0 {
        return Err(Error::ZeroRecovery);
    }
    let sym = symbol_grid(kernel, lattice)?;
    let r0 = rates.beta / rates.gamma;
    let per_mode: Vec<f64> = sym.re.iter().map(|a| (rates.kappa * a + rates.beta) / rates.gamma).collect();
    let max_re = sym.re.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ReproductionNumbers {
        r0,
        per_mode,
        max: r0 + rates.kappa / rates.gamma * max_re,
        conjectural: !kernel.is_symmetric(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstMomentLabel {
    Vanish,
    SteadyDelta,
    GrowOriginOnly,
    GrowEverywhere,
}

impl FirstMomentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FirstMomentLabel::Vanish => "vanish",
            FirstMomentLabel::SteadyDelta => "steady_delta",
            FirstMomentLabel::GrowOriginOnly => "grow_origin_only",
            FirstMomentLabel::GrowEverywhere => "grow_everywhere",
        }
    }
}

/// Labels for the site-local (mobility-free) first moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneousLabel {
    Vanish,
    SteadyState,
    Grow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub k: Vec<f64>,
    pub alpha: f64,
    pub theta: f64,
    pub mu: f64,
    pub r0: f64,
    pub r0m: f64,
    pub label: FirstMomentLabel,
    pub conjectural: bool,
}

/// Sign with zero band `|x| <= tol`.
pub(crate) fn sign(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}

/// Zero band used for sign decisions, relative to the rate scale.
pub(crate) fn zero_band(rates: &Rates) -> f64 {
    1e-12 * rates.kappa.max(rates.beta).max(rates.gamma).max(f64::MIN_POSITIVE)
}

pub fn classify_first_moment(kernel: &MobilityKernel, rates: &Rates, k: &[f64]) -> Result<RegimeReport> {
    if rates.gamma <= 0.0 {
        return Err(Error::ZeroRecovery);
    }
    if k.len() != kernel.d() {
        return Err(Error::InvalidArgument(format!(
            "frequency has {} components, kernel dimension is {}",
            k.len(),
            kernel.d()
        )));
    }
    let a = symbol(kernel, k).re;
    let alpha = rates.kappa * a;
    let theta = alpha + rates.beta - rates.gamma;
    let mu = alpha + rates.beta + rates.gamma;
    let tol = zero_band(rates);
    let label = match (sign(theta, tol), sign(alpha, tol)) {
        (-1, _) => FirstMomentLabel::Vanish,
        (0, _) => FirstMomentLabel::SteadyDelta,
        (_, 0) => FirstMomentLabel::GrowOriginOnly,
        _ => FirstMomentLabel::GrowEverywhere,
    };
    Ok(RegimeReport {
        k: k.to_vec(),
        alpha,
        theta,
        mu,
        r0: rates.beta / rates.gamma,
        r0m: (alpha + rates.beta) / rates.gamma,
        label,
        conjectural: !kernel.is_symmetric(),
    })
}

pub fn classify_first_moment_homogeneous(rates: &Rates) -> HomogeneousLabel {
    if rates.is_critical() {
        HomogeneousLabel::SteadyState
    } else if rates.beta < rates.gamma {
        HomogeneousLabel::Vanish
    } else {
        HomogeneousLabel::Grow
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_nearest_neighbor;
    use std::f64::consts::PI;

    fn rates(beta: f64, gamma: f64) -> Rates {
        Rates::new(1.0, beta, gamma, 1.0).unwrap()
    }

    #[test]
    fn homogeneous_values() {
        let r = rates(0.5, 0.5);
        for t in [0.0, 1.0, 7.0] {
            assert_eq!(m1_homogeneous(&r, t, Compartment::I, true).unwrap(), 1.0);
        }
        assert_eq!(m1_homogeneous(&r, 3.0, Compartment::R, true).unwrap(), 1.5);
        let r = rates(0.4, 0.6);
        let i = m1_homogeneous(&r, 2.0, Compartment::I, true).unwrap();
        assert!((i - (-0.4f64).exp()).abs() < 1e-15);
        assert_eq!(m1_homogeneous(&r, 2.0, Compartment::S, false).unwrap(), 1.0);
        assert!(matches!(m1_homogeneous(&r, -1.0, Compartment::S, true), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn initial_fields() {
        let k = kernel_nearest_neighbor(1).unwrap();
        let l = LatticeSpec::new(1, 8).unwrap();
        let f = m1_inhomogeneous(&k, &rates(0.4, 0.6), 0.0, &l).unwrap();
        assert!(f.s.values.iter().all(|&v| v == 1.0));
        assert_eq!(f.i.values[0], 1.0);
        assert!(f.i.values[1..].iter().all(|&v| v == 0.0));
        assert!(f.r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reproduction_number_grid() {
        let k = kernel_nearest_neighbor(1).unwrap();
        let l = LatticeSpec::new(1, 8).unwrap();
        let r = rates(0.4, 0.6);
        let rn = reproduction_numbers(&k, &r, &l).unwrap();
        assert_eq!(rn.max, rn.r0);
        assert!((rn.per_mode[4] + 8.0 / 3.0).abs() < 1e-14);
        let r0 = Rates::new(0.0, 0.4, 0.6, 1.0).unwrap();
        let rn = reproduction_numbers(&k, &r0, &l).unwrap();
        assert!(rn.per_mode.iter().all(|&v| v == rn.r0));
        assert!(matches!(reproduction_numbers(&k, &rates(0.4, 0.0), &l), Err(Error::ZeroRecovery)));
    }

    #[test]
    fn regime_labels() {
        let k = kernel_nearest_neighbor(1).unwrap();
        let rep = classify_first_moment(&k, &rates(0.4, 0.6), &[PI / 2.0]).unwrap();
        assert!((rep.theta + 1.2).abs() < 1e-15);
        assert_eq!(rep.label, FirstMomentLabel::Vanish);
        let still = Rates::new(0.0, 0.6, 0.4, 1.0).unwrap();
        assert_eq!(classify_first_moment(&k, &still, &[1.0]).unwrap().label, FirstMomentLabel::GrowOriginOnly);
        assert_eq!(classify_first_moment(&k, &rates(0.5, 0.5), &[0.0]).unwrap().label, FirstMomentLabel::SteadyDelta);
        assert_eq!(
            classify_first_moment(&k, &rates(0.9, 0.1), &[0.3]).unwrap().label,
            FirstMomentLabel::GrowEverywhere
        );
    }
}
