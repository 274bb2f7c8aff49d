//! Intermittency ratios `m2 / m1^2` and their long-time classification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::first_moments::{check_time, Rates};
use crate::kernel::{kernel_variance, MobilityKernel};
use crate::lattice::{Coord, LatticeSpec};
use crate::second_moments::InfectedPairSolver;

/// Means below this are treated as zero when forming a ratio.
pub const MEAN_FLOOR: f64 = 1e-300;
/// Number of doublings in the witness time grid.
pub const WITNESS_STEPS: u32 = 10;
/// Growth factor across the last decade that counts as divergence.
pub const WITNESS_FACTOR: f64 = 10.0;
/// Smallest torus side used for automatically sized lattices.
const MIN_SIDE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Homogeneous,
    Inhomogeneous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitLabel {
    Intermittent,
    Bounded,
}

impl LimitLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitLabel::Intermittent => "intermittent",
            LimitLabel::Bounded => "bounded",
        }
    }
}

/// `(1 - e^{-ct}) / c`, equal to `t` in the critical case.
fn decay_integral(rates: &Rates, t: f64) -> f64 {
    if rates.is_critical() {
        t
    } else {
        let c = rates.growth();
        (-c * t).exp_m1() / -c
    }
}

/// `E_1 = rho0 + (beta+gamma+2 kappa)/(beta-gamma)` for `beta > gamma`.
pub fn same_site_limit(rates: &Rates) -> Option<f64> {
    (rates.beta > rates.gamma && !rates.is_critical())
        .then(|| rates.rho0 + (rates.beta + rates.gamma + 2.0 * rates.kappa) / rates.growth())
}

/// `E_2 = rho0 - 2 kappa a(v)/(beta-gamma)` for `beta > gamma`.
pub fn pair_limit(rates: &Rates, kernel: &MobilityKernel, v: &Coord) -> Option<f64> {
    (rates.beta > rates.gamma && !rates.is_critical())
        .then(|| rates.rho0 - 2.0 * rates.kappa * kernel.weight(v) / rates.growth())
}

fn ratio(m2: f64, m1x: f64, m1y: f64) -> Result<f64> {
    let floor = m1x.abs().min(m1y.abs());
    if !(floor >= MEAN_FLOOR) {
        return Err(Error::VanishingMean { value: floor });
    }
    Ok(m2 / (m1x * m1y))
}

/// Side of a torus wide enough that a walk run for `t_max` does not wrap.
pub fn witness_lattice(kernel: &MobilityKernel, kappa: f64, t_max: f64) -> Result<LatticeSpec> {
    let spread = (kappa * kernel_variance(kernel) * t_max).sqrt();
    let drift = kernel.drift();
    let shift = kappa * t_max * drift.iter().map(|v| v * v).sum::<f64>().sqrt();
    let reach =
        kernel.support().iter().map(|(z, _)| z.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)).max().unwrap_or(1)
            as f64;
    let need = (8.0 * spread + 2.0 * shift + 2.0 * reach).ceil() as usize;
    LatticeSpec::new(kernel.d(), need.max(MIN_SIDE).next_power_of_two())
}

/// Same-site ratio at the origin.
///
/// Homogeneous space uses the closed form; inhomogeneous space divides the
/// computed second moment by the squared first moment on an automatically
/// sized torus.
pub fn ratio_same_site(rates: &Rates, kernel: Option<&MobilityKernel>, t: f64, space: Space) -> Result<f64> {
    check_time(t)?;
    match space {
        Space::Homogeneous => {
            Ok(rates.rho0 + (rates.beta + rates.gamma + 2.0 * rates.kappa) * decay_integral(rates, t))
        }
        Space::Inhomogeneous => {
            let kernel =
                kernel.ok_or_else(|| Error::InvalidArgument("inhomogeneous ratios need a mobility kernel".into()))?;
            let lattice = witness_lattice(kernel, rates.kappa, t)?;
            ratio_same_site_on(rates, kernel, t, &lattice, [0, 0, 0])
        }
    }
}

/// Inhomogeneous same-site ratio at `site` on a given torus.
pub fn ratio_same_site_on(
    rates: &Rates,
    kernel: &MobilityKernel,
    t: f64,
    lattice: &LatticeSpec,
    site: Coord,
) -> Result<f64> {
    check_time(t)?;
    let solver = InfectedPairSolver::new(kernel, rates, lattice)?;
    let x = lattice.index(&site);
    let m1 = solver.first_moment(t, x);
    ratio(solver.value(t, x, x)?, m1, m1)
}

/// Pair ratio `m2(t, x, x+v) / (m1(t,x) m1(t,x+v))` at the origin.
pub fn ratio_pair(rates: &Rates, kernel: &MobilityKernel, v: &Coord, t: f64, space: Space) -> Result<f64> {
    check_time(t)?;
    if *v == [0, 0, 0] {
        return Err(Error::ZeroSeparation);
    }
    match space {
        Space::Homogeneous => Ok(rates.rho0 - 2.0 * rates.kappa * kernel.weight(v) * decay_integral(rates, t)),
        Space::Inhomogeneous => {
            let lattice = witness_lattice(kernel, rates.kappa, t)?;
            ratio_pair_on(rates, kernel, v, t, &lattice, [0, 0, 0])
        }
    }
}

/// Inhomogeneous pair ratio between `site` and `site + v` on a given torus.
pub fn ratio_pair_on(
    rates: &Rates,
    kernel: &MobilityKernel,
    v: &Coord,
    t: f64,
    lattice: &LatticeSpec,
    site: Coord,
) -> Result<f64> {
    check_time(t)?;
    let x = lattice.index(&site);
    let y = lattice.index(&[site[0] + v[0], site[1] + v[1], site[2] + v[2]]);
    if x == y {
        return Err(Error::ZeroSeparation);
    }
    let solver = InfectedPairSolver::new(kernel, rates, lattice)?;
    ratio(solver.value(t, x, y)?, solver.first_moment(t, x), solver.first_moment(t, y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub t: f64,
    pub same_site: f64,
    pub pair: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntermittencyReport {
    pub space: Space,
    pub rates: Rates,
    /// Separation used for the pair series.
    pub v: Coord,
    pub series: Vec<RatioPoint>,
    pub limit_label: LimitLabel,
    /// `E_1` when bounded; in inhomogeneous space the last value of the series.
    pub limit_value: Option<f64>,
    /// `E_2` when bounded; in inhomogeneous space the last value of the series.
    pub pair_limit_value: Option<f64>,
    /// Earliest grid time after which the same-site series is monotone.
    pub t_star: f64,
    /// Same-site ratio growth between the witness times.
    pub witness_growth: f64,
    /// Torus side used in inhomogeneous space.
    pub lattice_n: Option<usize>,
    pub conjectural: bool,
}

/// Geometric grid `2^j / (|beta-gamma| + kappa + 1)`, `j = 0..=10`.
pub fn witness_grid(rates: &Rates) -> Vec<f64> {
    let scale = rates.growth().abs() + rates.kappa + 1.0;
    (0..=WITNESS_STEPS).map(|j| (1u64 << j) as f64 / scale).collect()
}

/// Index of the largest grid time not above a tenth of the last one.
fn decade_start(grid: &[f64]) -> usize {
    let last = *grid.last().expect("nonempty grid");
    grid.iter().rposition(|&t| t <= last / 10.0).unwrap_or(0)
}

/// Earliest index after which `values` is monotone (either direction).
fn monotone_from(values: &[f64]) -> usize {
    let n = values.len();
    if n < 3 {
        return 0;
    }
    let dir = (values[n - 1] - values[n - 2]).signum();
    let mut start = n - 2;
    while start > 0 {
        let step = values[start] - values[start - 1];
        if step * dir < 0.0 {
            break;
        }
        start -= 1;
    }
    start
}

/// Offset of largest weight, used as the default pair separation.
fn default_separation(kernel: &MobilityKernel) -> Coord {
    kernel
        .support()
        .iter()
        .fold(None::<(Coord, f64)>, |best, &(z, w)| match best {
            Some((_, bw)) if bw >= w => best,
            _ => Some((z, w)),
        })
        .map(|(z, _)| z)
        .unwrap_or([1, 0, 0])
}

/// Classification with an automatically sized torus.
pub fn classify_intermittency(rates: &Rates, kernel: &MobilityKernel, space: Space) -> Result<IntermittencyReport> {
    classify_intermittency_with(rates, kernel, space, None)
}

/// Classification on a given torus (inhomogeneous space only).
///
/// Homogeneous space is decided analytically: bounded iff `beta > gamma`.
/// Inhomogeneous space evaluates the ratio on the witness grid and calls the
/// ratio intermittent when it grows by at least [`WITNESS_FACTOR`] from the
/// largest grid time below `t_max / 10` to `t_max`.
pub fn classify_intermittency_with(
    rates: &Rates,
    kernel: &MobilityKernel,
    space: Space,
    lattice: Option<LatticeSpec>,
) -> Result<IntermittencyReport> {
    let grid = witness_grid(rates);
    let v = default_separation(kernel);
    let (series, lattice_n) = match space {
        Space::Homogeneous => {
            let series = grid
                .iter()
                .map(|&t| {
                    Ok(RatioPoint {
                        t,
                        same_site: ratio_same_site(rates, Some(kernel), t, space)?,
                        pair: ratio_pair(rates, kernel, &v, t, space)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (series, None)
        }
        Space::Inhomogeneous => {
            let lattice = match lattice {
                Some(l) => l,
                None => witness_lattice(kernel, rates.kappa, *grid.last().expect("grid"))?,
            };
            let solver = InfectedPairSolver::new(kernel, rates, &lattice)?;
            let y = lattice.index(&v);
            let series = grid
                .par_iter()
                .map(|&t| {
                    let m0 = solver.first_moment(t, 0);
                    let mv = solver.first_moment(t, y);
                    Ok(RatioPoint {
                        t,
                        same_site: ratio(solver.value(t, 0, 0)?, m0, m0)?,
                        pair: ratio(solver.value(t, 0, y)?, m0, mv)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (series, Some(lattice.n()))
        }
    };
    let same: Vec<f64> = series.iter().map(|p| p.same_site).collect();
    let k = decade_start(&grid);
    let witness_growth = same[same.len() - 1] / same[k];
    let limit_label = match space {
        Space::Homogeneous if rates.beta > rates.gamma && !rates.is_critical() => LimitLabel::Bounded,
        Space::Homogeneous => LimitLabel::Intermittent,
        Space::Inhomogeneous if witness_growth >= WITNESS_FACTOR => LimitLabel::Intermittent,
        Space::Inhomogeneous => LimitLabel::Bounded,
    };
    let (limit_value, pair_limit_value) = match (limit_label, space) {
        (LimitLabel::Intermittent, _) => (None, None),
        (LimitLabel::Bounded, Space::Homogeneous) => (same_site_limit(rates), pair_limit(rates, kernel, &v)),
        (LimitLabel::Bounded, Space::Inhomogeneous) => {
            let last = series.last().expect("grid");
            (Some(last.same_site), Some(last.pair))
        }
    };
    Ok(IntermittencyReport {
        space,
        rates: *rates,
        v,
        t_star: grid[monotone_from(&same)],
        series,
        limit_label,
        limit_value,
        pair_limit_value,
        witness_growth,
        lattice_n,
        conjectural: !kernel.is_symmetric(),
    })
}

/// Ratio expressions printed for inhomogeneous space, evaluated as written
/// from `p = p(t,0,0)` (same-site) or `p = p(t,0,y)` (pair). Kept only for
/// comparison with the assembled ratios.
pub mod printed {
    use super::*;

    fn growth_term(rates: &Rates, t: f64) -> f64 {
        let c = rates.growth();
        if rates.is_critical() {
            t
        } else {
            (3.0 * c * t).exp_m1() / (3.0 * c)
        }
    }

    pub fn ratio_same_site(rates: &Rates, p: f64, t: f64) -> f64 {
        let g = growth_term(rates, t);
        rates.rho0 / p + rates.kappa * g / (p * p) + (rates.beta + rates.gamma + 2.0 * rates.kappa) * g / p
    }

    pub fn ratio_pair(rates: &Rates, a_v: f64, p: f64, t: f64) -> f64 {
        rates.rho0 / p - 2.0 * rates.kappa * a_v * growth_term(rates, t) / p
    }
}
