//! Second moments of the infected field, the coupled pair-moment ODE
//! system, and the second-moment regime tables.
//!
//! The pair moments obey
//!
//! ```text
//! d/dt M(x,y) = kappa (L*_x + L*_y) M + drift terms + Gamma(x,y)
//! ```
//!
//! where `Gamma` collects the same-event covariances. For the infected
//! field the solution is the Duhamel integral of the pair equation:
//!
//! ```text
//! M(t,x,y) = rho0 e^{2ct} p_t(x) p_t(y)
//!          + int_0^t e^{2c(t-s)} sum_{u,w} p_{t-s}(x-u) p_{t-s}(y-w) Q(s,u,w) ds
//! ```
//!
//! with `Q = Gamma_mig + (beta+gamma) delta_uw m1_I(s,u)`. The initial value
//! at the origin pair is `rho0`, which equals `I(0,0)^2 = 1` for `rho0 = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::first_moments::{check_time, sign, zero_band, Rates};
use crate::kernel::{symbol, symbol_grid, MobilityKernel};
use crate::lattice::{Coord, LatticeSpec};
use crate::ode::{integrate_with, JumpOperator};
use crate::quadrature::{graded_breaks, integrate_pieces};
use crate::torus::{inverse_transform, Propagator};

/// Relative agreement required between successive quadrature refinements.
pub const QUADRATURE_RTOL: f64 = 1e-8;
/// Node budget for the time convolution.
pub const QUADRATURE_MAX_NODES: usize = 10 << 13;
/// Largest pair count handled by the ODE oracle.
pub const MAX_PAIRS: usize = 4096;
/// Tolerances of the pair oracle. Off-diagonal pair entries start from exact
/// cancellations, so an absolute floor far below roundoff stalls the step control.
pub const PAIR_ORACLE_RTOL: f64 = 1e-12;
pub const PAIR_ORACLE_ATOL: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    SameSite,
    Pair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompartmentPair {
    II,
    SS,
    RR,
    SI,
    RI,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMoment {
    pub t: f64,
    pub kind: PairKind,
    /// Separation `y - x`; zero for the same-site kind.
    pub v: Coord,
    /// First site `x`.
    pub site: Coord,
    pub value: f64,
    pub compartment_pair: CompartmentPair,
    pub conjectural: bool,
}

/// Width of the boundary layers of the time convolution near `s = 0` and `s = t`.
fn layer_scale(rates: &Rates) -> f64 {
    1.0 / (1.0 + rates.kappa + rates.beta + rates.gamma)
}

fn homogeneous_decay(rates: &Rates, t: f64) -> (f64, f64) {
    let g = if rates.is_critical() { 1.0 } else { (rates.growth() * t).exp() };
    (g, rates.growth_integral(t))
}

/// `E[I(t,x)^2]` with the mobility term dropped.
pub fn m2_homogeneous_same_site(rates: &Rates, t: f64) -> Result<f64> {
    check_time(t)?;
    let (g, j) = homogeneous_decay(rates, t);
    let b = rates.beta + rates.gamma + 2.0 * rates.kappa;
    Ok(rates.rho0 * g * g + b * g * j)
}

/// `E[I(t,x) I(t,x+v)]` with the mobility term dropped; `a(v)` read from the kernel.
pub fn m2_homogeneous_pair(rates: &Rates, kernel: &MobilityKernel, v: &Coord, t: f64) -> Result<f64> {
    check_time(t)?;
    if *v == [0, 0, 0] {
        return Err(Error::ZeroSeparation);
    }
    let (g, j) = homogeneous_decay(rates, t);
    let a = kernel.weight(v);
    Ok(rates.rho0 * g * g - 2.0 * rates.kappa * a * g * j)
}

/// Largest torus on which the pair solver uses the extended-precision
/// propagator. Beyond it the time convolution only needs the fields near the
/// evaluation sites, where plain FFT accuracy is ample.
pub const EXTENDED_PAIR_SITES: usize = 128;

/// Duhamel evaluation of `E[I(t,x) I(t,y)]` on the torus.
pub struct InfectedPairSolver<'a> {
    kernel: &'a MobilityKernel,
    rates: Rates,
    lattice: LatticeSpec,
    prop: Propagator,
    /// `(u + z_j, a(z_j))` for every site `u`, jumps that wrap onto `u` removed.
    jumps: Vec<Vec<(usize, f64)>>,
}

impl<'a> InfectedPairSolver<'a> {
    pub fn new(kernel: &'a MobilityKernel, rates: &Rates, lattice: &LatticeSpec) -> Result<Self> {
        let prop = if lattice.sites() <= EXTENDED_PAIR_SITES {
            Propagator::new(kernel, lattice)?
        } else {
            Propagator::fast(kernel, lattice)?
        };
        let jumps = (0..lattice.sites())
            .map(|u| kernel.support().iter().map(|(z, w)| (lattice.shift(u, z), *w)).filter(|&(v, _)| v != u).collect())
            .collect();
        Ok(InfectedPairSolver { kernel, rates: *rates, lattice: lattice.clone(), prop, jumps })
    }

    pub fn kernel(&self) -> &MobilityKernel {
        self.kernel
    }

    pub fn first_moment(&self, t: f64, x: usize) -> f64 {
        let c = self.rates.growth();
        (c * t).exp() * self.prop.field(self.rates.kappa, t)[x]
    }

    /// Source term of the pair equation propagated to `(x, y)`, where
    /// `px[u] = p(x - u)` and `py[u] = p(y - u)`.
    fn propagated_source(&self, px: &[f64], py: &[f64], m1: &[f64]) -> f64 {
        let react = self.rates.beta + self.rates.gamma;
        let mut acc = 0.0;
        for (u, jumps) in self.jumps.iter().enumerate() {
            if m1[u] == 0.0 {
                continue;
            }
            let (pxu, pyu) = (px[u], py[u]);
            let mut mig = 0.0;
            for &(v, w) in jumps {
                mig += w * (pxu - px[v]) * (pyu - py[v]);
            }
            acc += m1[u] * (react * pxu * pyu + self.rates.kappa * mig);
        }
        acc
    }

    /// `E[I(t,x) I(t,y)]`.
    pub fn value(&self, t: f64, x: usize, y: usize) -> Result<f64> {
        check_time(t)?;
        let c = self.rates.growth();
        let kappa = self.rates.kappa;
        let pt = self.prop.field(kappa, t);
        let lead = self.rates.rho0 * (2.0 * c * t).exp() * pt[x] * pt[y];
        if t == 0.0 {
            return Ok(lead);
        }
        let l = &self.lattice;
        let rx: Vec<usize> = (0..l.sites()).map(|u| l.index(&sub(l, x, u))).collect();
        let ry: Vec<usize> = (0..l.sites()).map(|u| l.index(&sub(l, y, u))).collect();
        let integrand = |s: f64| {
            let growth = (c * s).exp();
            let m1: Vec<f64> = self.prop.field(kappa, s).iter().map(|v| growth * v).collect();
            let back = self.prop.field(kappa, t - s);
            let px: Vec<f64> = rx.iter().map(|&i| back[i]).collect();
            let py: Vec<f64> = ry.iter().map(|&i| back[i]).collect();
            (2.0 * c * (t - s)).exp() * self.propagated_source(&px, &py, &m1)
        };
        let breaks = graded_breaks(t, layer_scale(&self.rates));
        let q = integrate_pieces(integrand, &breaks, QUADRATURE_RTOL, lead, QUADRATURE_MAX_NODES)?;
        Ok(lead + q.value)
    }
}

/// Coordinates of `x - u`.
fn sub(l: &LatticeSpec, x: usize, u: usize) -> Coord {
    let a = l.coords(x);
    let b = l.coords(u);
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// `E[I(t,x) I(t,x+v)]` with `x = site` (the origin unless given).
pub fn m2_inhomogeneous(
    kernel: &MobilityKernel,
    rates: &Rates,
    t: f64,
    lattice: &LatticeSpec,
    kind: PairKind,
    v: Option<Coord>,
    site: Option<Coord>,
) -> Result<PairMoment> {
    check_time(t)?;
    let v = match kind {
        PairKind::SameSite => [0, 0, 0],
        PairKind::Pair => {
            let v = v.ok_or(Error::ZeroSeparation)?;
            if lattice.index(&v) == 0 {
                return Err(Error::ZeroSeparation);
            }
            v
        }
    };
    let site = site.unwrap_or([0, 0, 0]);
    let x = lattice.index(&site);
    let y = lattice.index(&[site[0] + v[0], site[1] + v[1], site[2] + v[2]]);
    let solver = InfectedPairSolver::new(kernel, rates, lattice)?;
    Ok(PairMoment {
        t,
        kind,
        v,
        site,
        value: solver.value(t, x, y)?,
        compartment_pair: CompartmentPair::II,
        conjectural: !kernel.is_symmetric(),
    })
}

/// All pair fields on the torus, row-major in `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFields {
    pub t: f64,
    pub lattice: LatticeSpec,
    pub ii: Vec<f64>,
    pub ss: Vec<f64>,
    pub rr: Vec<f64>,
    pub si: Vec<f64>,
    pub ri: Vec<f64>,
    pub m1_s: Vec<f64>,
    pub m1_i: Vec<f64>,
    pub m1_r: Vec<f64>,
}

impl PairFields {
    pub fn get(&self, which: CompartmentPair, x: usize, y: usize) -> f64 {
        let n = self.lattice.sites();
        let f = match which {
            CompartmentPair::II => &self.ii,
            CompartmentPair::SS => &self.ss,
            CompartmentPair::RR => &self.rr,
            CompartmentPair::SI => &self.si,
            CompartmentPair::RI => &self.ri,
        };
        f[x * n + y]
    }
}

/// Direct integration of the coupled first- and second-moment system.
pub fn m2_ode_oracle(kernel: &MobilityKernel, rates: &Rates, t: f64, lattice: &LatticeSpec) -> Result<PairFields> {
    check_time(t)?;
    let n = lattice.sites();
    let pairs = n * n;
    if pairs > MAX_PAIRS {
        return Err(Error::SystemTooLarge { pairs, limit: MAX_PAIRS });
    }
    let op = JumpOperator::new(kernel, lattice)?;
    // Migration covariance stencil: for every (u, z) with u + z != u,
    // Gamma gains +a m(u) at (u,u) and (v,v), and -a m(u) at (u,v) and (v,u).
    let mut stencil: Vec<(usize, usize, f64)> = Vec::new();
    for u in 0..n {
        for (z, w) in kernel.support() {
            let v = lattice.shift(u, z);
            if v != u {
                stencil.push((u, v, *w));
            }
        }
    }
    let Rates { kappa, beta, gamma, rho0 } = *rates;
    let c = beta - gamma;

    // Layout: m1 S, I, R (n each) then II, SS, RR, SI, RI (pairs each).
    let mut y0 = vec![0.0; 3 * n + 5 * pairs];
    y0[..n].fill(rho0);
    y0[n] = 1.0;
    let base = 3 * n;
    y0[base] = rho0; // II at (0,0)
    y0[base + pairs..base + 2 * pairs].fill(rho0 * rho0); // SS
    for x in 0..n {
        y0[base + 3 * pairs + x * n] = rho0; // SI(x, 0)
    }

    let pair_jump = |f: &[f64], out: &mut [f64]| {
        for x in 0..n {
            for y in 0..n {
                let here = f[x * n + y];
                let mut acc = 0.0;
                for (sx, w) in op.sources(x) {
                    acc += w * (f[sx * n + y] - here);
                }
                for (sy, w) in op.sources(y) {
                    acc += w * (f[x * n + sy] - here);
                }
                out[x * n + y] = kappa * acc;
            }
        }
    };
    let add_migration = |m: &[f64], out: &mut [f64]| {
        for &(u, v, w) in &stencil {
            let g = kappa * w * m[u];
            out[u * n + u] += g;
            out[v * n + v] += g;
            out[u * n + v] -= g;
            out[v * n + u] -= g;
        }
    };

    let rhs = |y: &[f64], dy: &mut [f64]| {
        let (m1, m2) = y.split_at(base);
        let (dm1, dm2) = dy.split_at_mut(base);
        let (s, i, r) = (&m1[..n], &m1[n..2 * n], &m1[2 * n..]);
        dm1.fill(0.0);
        {
            let (ds, rest) = dm1.split_at_mut(n);
            let (di, dr) = rest.split_at_mut(n);
            op.apply_add(s, kappa, ds);
            op.apply_add(i, kappa, di);
            op.apply_add(r, kappa, dr);
            for x in 0..n {
                ds[x] -= beta * i[x];
                di[x] += c * i[x];
                dr[x] += gamma * i[x];
            }
        }
        let f = |k: usize| &m2[k * pairs..(k + 1) * pairs];
        let (ii, ss, rr, si, ri) = (f(0), f(1), f(2), f(3), f(4));
        let mut blocks: Vec<&mut [f64]> = dm2.chunks_mut(pairs).collect();
        let [dii, dss, drr, dsi, dri] = blocks.as_mut_slice() else { unreachable!() };

        pair_jump(ii, dii);
        pair_jump(ss, dss);
        pair_jump(rr, drr);
        pair_jump(si, dsi);
        pair_jump(ri, dri);
        add_migration(i, dii);
        add_migration(s, dss);
        add_migration(r, drr);
        #[allow(clippy::needless_range_loop)]
        for x in 0..n {
            for yy in 0..n {
                let p = x * n + yy;
                let q = yy * n + x;
                dii[p] += 2.0 * c * ii[p];
                dss[p] -= beta * (si[p] + si[q]);
                drr[p] += gamma * (ri[p] + ri[q]);
                dsi[p] += c * si[p] - beta * ii[p];
                dri[p] += c * ri[p] + gamma * ii[p];
            }
            let p = x * n + x;
            dii[p] += (beta + gamma) * i[x];
            dss[p] += beta * i[x];
            drr[p] += gamma * i[x];
            dsi[p] -= beta * i[x];
            dri[p] -= gamma * i[x];
        }
    };
    let y = integrate_with(rhs, y0, t, PAIR_ORACLE_RTOL, PAIR_ORACLE_ATOL)?;
    let block = |k: usize| y[base + k * pairs..base + (k + 1) * pairs].to_vec();
    Ok(PairFields {
        t,
        lattice: lattice.clone(),
        ii: block(0),
        ss: block(1),
        rr: block(2),
        si: block(3),
        ri: block(4),
        m1_s: y[..n].to_vec(),
        m1_i: y[n..2 * n].to_vec(),
        m1_r: y[2 * n..base].to_vec(),
    })
}

/// Expressions printed for the explicit spectral second moments, evaluated
/// exactly as written. Kept only to compare against the ground truth.
pub mod paper_verbatim {
    use super::*;

    /// `(e^{at} - e^{2at}) / a` with its `a -> 0` limit.
    fn split_difference(a: f64, t: f64) -> f64 {
        if a == 0.0 {
            -t
        } else {
            -(a * t).exp() * (a * t).exp_m1() / a
        }
    }

    fn mode_value(kind: PairKind, rates: &Rates, a: f64, t: f64) -> f64 {
        let Rates { kappa, beta, gamma, .. } = *rates;
        let alpha = kappa * a;
        let sum = beta + gamma;
        let critical = rates.is_critical();
        match (kind, critical) {
            (PairKind::SameSite, true) => {
                (2.0 * alpha * t).exp() - (alpha + 2.0 * kappa + sum) * split_difference(alpha, t)
            }
            (PairKind::SameSite, false) => {
                let big = (2.0 * (alpha * t + sum) * t).exp();
                big - (alpha + 2.0 * kappa + sum) / (alpha + 2.0 * sum)
                    * ((alpha * t).exp() - (2.0 * (alpha + sum) * t).exp())
            }
            (PairKind::Pair, true) => (2.0 * alpha * t).exp() + 2.0 * ((alpha * t).exp() - (2.0 * alpha * t).exp()),
            (PairKind::Pair, false) => {
                let big = (2.0 * (alpha * t + sum) * t).exp();
                big + 2.0 * alpha / (alpha + 2.0 * sum) * ((alpha * t).exp() - (2.0 * (alpha + sum) * t).exp())
            }
        }
    }

    /// Inverse transform of the printed symbol at `x` (same-site) or `v` (pair).
    pub fn m2_matrix_form(
        kernel: &MobilityKernel,
        rates: &Rates,
        t: f64,
        lattice: &LatticeSpec,
        kind: PairKind,
        at: Coord,
    ) -> Result<f64> {
        check_time(t)?;
        let sym = symbol_grid(kernel, lattice)?;
        let grid: Vec<Complex64> = sym.re.iter().map(|&a| Complex64::new(mode_value(kind, rates, a, t), 0.0)).collect();
        Ok(inverse_transform(lattice, &grid)?[lattice.index(&at)].re)
    }

    /// Same-site Duhamel form that treats the diagonal as a closed field:
    /// leading term `rho0 e^{(2 kappa a^ + 2c) t}` and source
    /// `sum_z p(t-s, x-z) [kappa L m1 + (beta+gamma+2 kappa) m1](s,z) e^{2cs}`.
    pub fn m2_closed_diagonal(
        kernel: &MobilityKernel,
        rates: &Rates,
        t: f64,
        lattice: &LatticeSpec,
        at: Coord,
    ) -> Result<f64> {
        check_time(t)?;
        let Rates { kappa, beta, gamma, rho0 } = *rates;
        let c = beta - gamma;
        let x = lattice.index(&at);
        let prop = Propagator::new(kernel, lattice)?;
        let op = JumpOperator::new(kernel, lattice)?;
        let lead = rho0 * (2.0 * c * t).exp() * prop.field(2.0 * kappa, t)[x];
        let integrand = |s: f64| {
            let m1: Vec<f64> = prop.field(kappa, s).iter().map(|v| (c * s).exp() * v).collect();
            let mut src: Vec<f64> = m1.iter().map(|v| (beta + gamma + 2.0 * kappa) * v).collect();
            op.apply_add(&m1, kappa, &mut src);
            let back = prop.field(kappa, t - s);
            let conv: f64 = (0..lattice.sites()).map(|z| back[lattice.index(&sub(lattice, x, z))] * src[z]).sum();
            (2.0 * c * t).exp() * conv * (2.0 * c * s).exp()
        };
        let breaks = graded_breaks(t, layer_scale(rates));
        let q = integrate_pieces(integrand, &breaks, QUADRATURE_RTOL, lead, QUADRATURE_MAX_NODES)?;
        Ok(lead + q.value)
    }
}

/// Long-time behaviour of a second moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Asymptote {
    Zero,
    Infinite,
    /// `delta_0`.
    Delta,
    /// `(kappa+beta+gamma)/(2 beta + 2 gamma) delta_0`.
    ScaledDelta,
}

impl Asymptote {
    pub fn as_str(self) -> &'static str {
        match self {
            Asymptote::Zero => "0",
            Asymptote::Infinite => "infinity",
            Asymptote::Delta => "delta_0",
            Asymptote::ScaledDelta => "scaled_delta_0",
        }
    }
}

/// Sign condition used by the inhomogeneous table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCondition {
    Negative,
    Zero,
    Positive,
    NonPositive,
}

impl SignCondition {
    fn holds(self, s: i8) -> bool {
        match self {
            SignCondition::Negative => s < 0,
            SignCondition::Zero => s == 0,
            SignCondition::Positive => s > 0,
            SignCondition::NonPositive => s <= 0,
        }
    }
}

/// Which rate combination a table row conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCombination {
    /// `beta - gamma`, paired with a condition on `theta`.
    Difference,
    /// `beta + gamma`, paired with a condition on `mu`.
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InhomogeneousRow {
    pub combination: RateCombination,
    pub combination_sign: SignCondition,
    pub alpha: SignCondition,
    /// Condition on `theta` for `Difference` rows, on `mu` for `Sum` rows.
    pub exponent: SignCondition,
    pub same_site: Asymptote,
    pub pair: Asymptote,
    /// False when the row needs `beta + gamma < 0`.
    pub feasible: bool,
}

/// The inhomogeneous second-moment table, in lookup order.
pub const INHOMOGENEOUS_ROWS: [InhomogeneousRow; 6] = {
    use Asymptote as A;
    use RateCombination::*;
    use SignCondition::*;
    const fn row(
        combination: RateCombination,
        combination_sign: SignCondition,
        alpha: SignCondition,
        exponent: SignCondition,
        same_site: Asymptote,
        pair: Asymptote,
    ) -> InhomogeneousRow {
        let feasible = !matches!((combination, combination_sign), (Sum, Negative));
        InhomogeneousRow { combination, combination_sign, alpha, exponent, same_site, pair, feasible }
    }
    [
        row(Difference, Zero, Negative, Negative, A::Zero, A::Zero),
        row(Difference, Zero, Zero, Zero, A::Delta, A::Delta),
        row(Sum, Negative, Negative, Negative, A::Zero, A::Zero),
        row(Sum, Negative, Zero, Negative, A::ScaledDelta, A::Zero),
        row(Sum, Positive, Negative, Negative, A::Zero, A::Zero),
        row(Sum, Positive, NonPositive, Positive, A::Infinite, A::Infinite),
    ]
};

/// Homogeneous table keyed by the sign of `beta - gamma`: (same-site, pair).
pub fn homogeneous_second_moment_labels(rates: &Rates) -> (Asymptote, Asymptote) {
    if rates.is_critical() {
        (Asymptote::Infinite, Asymptote::Zero)
    } else if rates.beta > rates.gamma {
        (Asymptote::Infinite, Asymptote::Infinite)
    } else {
        (Asymptote::Zero, Asymptote::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentRegime {
    pub k: Vec<f64>,
    pub alpha: f64,
    pub theta: f64,
    pub mu: f64,
    pub homogeneous_same_site: Asymptote,
    pub homogeneous_pair: Asymptote,
    /// 1-based row of the inhomogeneous table; `None` when no row applies.
    pub inhomogeneous_row: Option<usize>,
    pub inhomogeneous_same_site: Option<Asymptote>,
    pub inhomogeneous_pair: Option<Asymptote>,
    pub conjectural: bool,
}

pub fn classify_second_moment(kernel: &MobilityKernel, rates: &Rates, k: &[f64]) -> Result<SecondMomentRegime> {
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
    let diff = if rates.is_critical() { 0 } else { sign(rates.beta - rates.gamma, tol) };
    let signs = (sign(alpha, tol), sign(theta, tol), sign(mu, tol));
    let sum = sign(rates.beta + rates.gamma, tol);
    let row = INHOMOGENEOUS_ROWS.iter().position(|r| {
        let (comb, exp) = match r.combination {
            RateCombination::Difference => (diff, signs.1),
            RateCombination::Sum => (sum, signs.2),
        };
        r.combination_sign.holds(comb) && r.alpha.holds(signs.0) && r.exponent.holds(exp)
    });
    let (hs, hp) = homogeneous_second_moment_labels(rates);
    Ok(SecondMomentRegime {
        k: k.to_vec(),
        alpha,
        theta,
        mu,
        homogeneous_same_site: hs,
        homogeneous_pair: hp,
        inhomogeneous_row: row.map(|i| i + 1),
        inhomogeneous_same_site: row.map(|i| INHOMOGENEOUS_ROWS[i].same_site),
        inhomogeneous_pair: row.map(|i| INHOMOGENEOUS_ROWS[i].pair),
        conjectural: !kernel.is_symmetric(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_nearest_neighbor;
    use std::f64::consts::PI;

    fn rates(kappa: f64, beta: f64, gamma: f64) -> Rates {
        Rates::new(kappa, beta, gamma, 1.0).unwrap()
    }

    #[test]
    fn homogeneous_same_site_values() {
        assert_eq!(m2_homogeneous_same_site(&rates(1.0, 0.6, 0.4), 0.0).unwrap(), 1.0);
        assert!((m2_homogeneous_same_site(&rates(1.0, 0.5, 0.5), 2.0).unwrap() - 7.0).abs() < 1e-14);
        let v = m2_homogeneous_same_site(&rates(1.0, 0.6, 0.4), 1.0).unwrap();
        let c = 0.2f64;
        let printed = (2.0 * c).exp() + 3.0 / (-c) * (c.exp() - (2.0 * c).exp());
        assert!((v - printed).abs() < 1e-13);
        assert!((v - 5.548).abs() < 1e-3);
    }

    #[test]
    fn homogeneous_pair_values() {
        let k = kernel_nearest_neighbor(1).unwrap();
        let r = rates(1.0, 0.4, 0.6);
        let v = m2_homogeneous_pair(&r, &k, &[1, 0, 0], 1.0).unwrap();
        let c = -0.2f64;
        let printed = (2.0 * c).exp() + (2.0 * 0.5 / c) * (c.exp() - (2.0 * c).exp());
        assert!((v - printed).abs() < 1e-14);
        let far = m2_homogeneous_pair(&r, &k, &[3, 0, 0], 1.0).unwrap();
        assert!((far - (2.0 * c).exp()).abs() < 1e-15);
        assert!(matches!(m2_homogeneous_pair(&r, &k, &[0, 0, 0], 1.0), Err(Error::ZeroSeparation)));
    }

    #[test]
    fn table_rows() {
        let k = kernel_nearest_neighbor(1).unwrap();
        let reg = classify_second_moment(&k, &rates(1.0, 0.5, 0.5), &[1.0]).unwrap();
        assert_eq!(reg.inhomogeneous_row, Some(1));
        assert_eq!(reg.inhomogeneous_same_site, Some(Asymptote::Zero));
        let reg = classify_second_moment(&k, &rates(1.0, 0.5, 0.5), &[0.0]).unwrap();
        assert_eq!(reg.inhomogeneous_row, Some(2));
        let reg = classify_second_moment(&k, &rates(1.0, 0.6, 0.4), &[PI / 4.0]).unwrap();
        assert_eq!(reg.inhomogeneous_row, Some(6));
        assert_eq!(reg.homogeneous_pair, Asymptote::Infinite);
        let reg = classify_second_moment(&k, &rates(1.0, 0.3, 0.4), &[PI]).unwrap();
        assert_eq!(reg.inhomogeneous_row, Some(5));
        assert!(!INHOMOGENEOUS_ROWS[2].feasible && !INHOMOGENEOUS_ROWS[3].feasible);
    }

    #[test]
    fn oracle_initial_state() {
        let k = kernel_nearest_neighbor(1).unwrap();
        let l = LatticeSpec::new(1, 4).unwrap();
        let f = m2_ode_oracle(&k, &rates(1.0, 0.4, 0.6), 0.0, &l).unwrap();
        assert_eq!(f.ii[0], 1.0);
        assert!(f.ii[1..].iter().all(|&v| v == 0.0));
        let big = LatticeSpec::new(1, 65).unwrap();
        assert!(matches!(m2_ode_oracle(&k, &rates(1.0, 0.4, 0.6), 1.0, &big), Err(Error::SystemTooLarge { .. })));
    }
}
