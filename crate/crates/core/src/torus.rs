//! Spectral quadrature on the torus: transition probabilities, Green
//! functions and the return-probability decay fit.
//!
//! Transforms use the convention `f^(k) = sum_x f(x) e^{ik.x}`, so the
//! inverse is `f(x) = n^-d sum_k f^(k) e^{-ik.x}`. For this convention the
//! multiplier `e^{kappa a^(k) t}` propagates the forward (mass) equation
//! `df/dt = kappa sum_z a(z) [f(x - z) - f(x)]`.
//!
//! Small grids are transformed in double-double arithmetic so that far
//! tails keep full relative accuracy; large grids use an f64 FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::ddouble::{Dd, DdComplex};
use crate::error::{Error, Result};
use crate::kernel::{kernel_variance, phase_index, symbol_grid, FourierSymbol, MobilityKernel};
use crate::lattice::LatticeSpec;
use crate::summation::Neumaier;

/// Grids with `sites * n * d` up to this many operations use the extended path.
pub const EXTENDED_WORK_LIMIT: usize = 1 << 22;

/// `n^-d sum grid`, the periodic trapezoidal rule.
pub fn torus_integrate(grid: &[Complex64]) -> Result<Complex64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    for v in grid {
        re.add(v.re);
        im.add(v.im);
    }
    let n = grid.len() as f64;
    Ok(Complex64::new(re.value() / n, im.value() / n))
}

/// `f(x) = n^-d sum_k g(k) e^{-ik.x}` over a grid laid out like the lattice.
pub fn inverse_transform(lattice: &LatticeSpec, grid: &[Complex64]) -> Result<Vec<Complex64>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.len() != lattice.sites() {
        return Err(Error::InvalidArgument(format!(
            "grid has {} values, lattice has {} sites",
            grid.len(),
            lattice.sites()
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(lattice.n());
    let mut data = grid.to_vec();
    fft_all_axes(lattice, &fft, &mut data);
    let scale = 1.0 / lattice.sites() as f64;
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}

fn fft_all_axes(lattice: &LatticeSpec, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
    let n = lattice.n();
    let d = lattice.d();
    let mut line = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// `p(t, 0, x)` for every torus site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionField {
    pub t: f64,
    pub lattice: LatticeSpec,
    pub values: Vec<f64>,
    /// Set when the kernel is asymmetric.
    pub conjectural: bool,
}

impl TransitionField {
    pub fn at(&self, site: usize) -> f64 {
        self.values[site]
    }
}

enum Engine {
    Extended { symbol: Vec<DdComplex>, cos: Vec<Dd>, twiddle: Vec<DdComplex> },
    Fast { symbol: FourierSymbol, fft: Arc<dyn Fft<f64>> },
}

/// Precomputed machinery for evaluating `p(t, 0, .)` at many times.
pub struct Propagator {
    lattice: LatticeSpec,
    symmetric: bool,
    engine: Engine,
}

impl Propagator {
    pub fn new(kernel: &MobilityKernel, lattice: &LatticeSpec) -> Result<Self> {
        let work = lattice.sites().saturating_mul(lattice.n()).saturating_mul(lattice.d());
        if work <= EXTENDED_WORK_LIMIT {
            Self::extended(kernel, lattice)
        } else {
            Self::fast(kernel, lattice)
        }
    }

    /// Always use the f64 FFT engine.
    pub fn fast(kernel: &MobilityKernel, lattice: &LatticeSpec) -> Result<Self> {
        let symbol = symbol_grid(kernel, lattice)?;
        let fft = FftPlanner::new().plan_fft_forward(lattice.n());
        Ok(Propagator {
            lattice: lattice.clone(),
            symmetric: kernel.is_symmetric(),
            engine: Engine::Fast { symbol, fft },
        })
    }

    /// Always use the double-double engine.
    pub fn extended(kernel: &MobilityKernel, lattice: &LatticeSpec) -> Result<Self> {
        if kernel.d() != lattice.d() {
            return Err(Error::DimensionMismatch { kernel: kernel.d(), lattice: lattice.d() });
        }
        let n = lattice.n();
        let mut vers = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        let mut cos = Vec::with_capacity(n);
        for m in 0..n {
            let (sh, _) = Dd::turn_fraction(m, 2 * n).sin_cos();
            vers.push((sh * sh).mul_f64(2.0));
            let (s, c) = Dd::turn_fraction(m, n).sin_cos();
            sin.push(s);
            cos.push(c);
        }
        let twiddle = (0..n).map(|m| DdComplex::new(cos[m], -sin[m])).collect();
        let symmetric = kernel.is_symmetric();
        let symbol = (0..lattice.sites())
            .map(|idx| {
                let j = lattice.coords(idx);
                let mut re = Dd::ZERO;
                let mut im = Dd::ZERO;
                for (z, w) in kernel.support() {
                    let m = phase_index(&j, z, n);
                    re = re - vers[m].mul_f64(*w);
                    if !symmetric {
                        im = im + sin[m].mul_f64(*w);
                    }
                }
                DdComplex::new(re, im)
            })
            .collect();
        Ok(Propagator { lattice: lattice.clone(), symmetric, engine: Engine::Extended { symbol, cos, twiddle } })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn is_extended(&self) -> bool {
        matches!(self.engine, Engine::Extended { .. })
    }

    /// `p(t, 0, x)` for all sites, given the product `kappa * t`.
    pub fn field(&self, kappa: f64, t: f64) -> Vec<f64> {
        if kappa * t == 0.0 {
            let mut delta = vec![0.0; self.lattice.sites()];
            delta[0] = 1.0;
            return delta;
        }
        match &self.engine {
            Engine::Fast { symbol, fft } => {
                let kt = kappa * t;
                let mut data: Vec<Complex64> =
                    symbol.re.iter().zip(&symbol.im).map(|(&r, &i)| (Complex64::new(r, i) * kt).exp()).collect();
                fft_all_axes(&self.lattice, fft, &mut data);
                let scale = 1.0 / self.lattice.sites() as f64;
                data.iter().map(|v| v.re * scale).collect()
            }
            Engine::Extended { symbol, cos, twiddle } => {
                let kt = Dd::prod(kappa, t);
                let n = self.lattice.n();
                let d = self.lattice.d();
                let total = self.lattice.sites();
                let out = if self.symmetric {
                    let mut data: Vec<Dd> = symbol.iter().map(|s| (kt * s.re).exp()).collect();
                    let mut line = vec![Dd::ZERO; n];
                    for_each_line(n, d, total, |idx: &[usize]| {
                        for (x, slot) in line.iter_mut().enumerate() {
                            let mut acc = Dd::ZERO;
                            for (j, &i) in idx.iter().enumerate() {
                                acc = acc + data[i] * cos[(j * x) % n];
                            }
                            *slot = acc;
                        }
                        for (x, &i) in idx.iter().enumerate() {
                            data[i] = line[x];
                        }
                    });
                    data.into_iter().map(|v| v.div_f64(total as f64).to_f64()).collect()
                } else {
                    let mut data: Vec<DdComplex> =
                        symbol.iter().map(|s| DdComplex::new(kt * s.re, kt * s.im).exp()).collect();
                    let mut line = vec![DdComplex::ZERO; n];
                    for_each_line(n, d, total, |idx: &[usize]| {
                        for (x, slot) in line.iter_mut().enumerate() {
                            let mut acc = DdComplex::ZERO;
                            for (j, &i) in idx.iter().enumerate() {
                                acc = data[i].mul_add(twiddle[(j * x) % n], acc);
                            }
                            *slot = acc;
                        }
                        for (x, &i) in idx.iter().enumerate() {
                            data[i] = line[x];
                        }
                    });
                    data.into_iter().map(|v| v.re.div_f64(total as f64).to_f64()).collect()
                };
                out
            }
        }
    }
}

/// Calls `f` with the flat indices of every grid line, axis by axis.
fn for_each_line<F: FnMut(&[usize])>(n: usize, d: usize, total: usize, mut f: F) {
    let mut idx = vec![0usize; n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                for (j, slot) in idx.iter_mut().enumerate() {
                    *slot = start + offset + j * stride;
                }
                f(&idx);
            }
        }
    }
}

fn check_rates(kappa: f64, t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidRates(format!("kappa = {kappa} must be nonnegative")));
    }
    Ok(())
}

/// Inverse transform of `e^{kappa a^(k) t}` over the torus grid.
pub fn transition_probability(
    kernel: &MobilityKernel,
    kappa: f64,
    t: f64,
    lattice: &LatticeSpec,
) -> Result<TransitionField> {
    check_rates(kappa, t)?;
    let prop = Propagator::new(kernel, lattice)?;
    Ok(TransitionField {
        t,
        lattice: lattice.clone(),
        values: prop.field(kappa, t),
        conjectural: !kernel.is_symmetric(),
    })
}

/// `p(t, 0, 0)`, computed as the grid average of the propagator symbol.
pub fn p00(kernel: &MobilityKernel, kappa: f64, t: f64, lattice: &LatticeSpec) -> Result<f64> {
    check_rates(kappa, t)?;
    let sym = symbol_grid(kernel, lattice)?;
    Ok(p00_from_symbol(&sym, kappa * t))
}

fn p00_from_symbol(sym: &FourierSymbol, kt: f64) -> f64 {
    let mut acc = Neumaier::default();
    for (r, i) in sym.re.iter().zip(&sym.im) {
        acc.add((kt * r).exp() * (kt * i).cos());
    }
    acc.value() / sym.re.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `E_3` in `p(t,0,0) ~ E_3 t^{-exponent}`.
    pub amplitude: f64,
    pub exponent: f64,
    pub points_used: usize,
}

/// Least-squares fit of `log p00` against `log t`.
pub fn p00_decay_fit(kernel: &MobilityKernel, kappa: f64, t_grid: &[f64], lattice: &LatticeSpec) -> Result<DecayFit> {
    const MIN_POINTS: usize = 4;
    if t_grid.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints { needed: MIN_POINTS, got: t_grid.len() });
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument("t_grid must be positive and increasing".into()));
    }
    check_rates(kappa, t_grid[0])?;
    let t_max = *t_grid.last().unwrap();
    let spread = (kappa * kernel_variance(kernel) * t_max).sqrt();
    if (lattice.n() as f64) < 8.0 * spread {
        return Err(Error::TorusSaturated(format!(
            "n = {} is below 8 sqrt(kappa sigma^2 t_max) = {:.1}",
            lattice.n(),
            8.0 * spread
        )));
    }
    let sym = symbol_grid(kernel, lattice)?;
    let floor = 1.0 / lattice.sites() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &t in t_grid {
        let p = p00_from_symbol(&sym, kappa * t);
        if p - floor < 0.5 * p {
            return Err(Error::TorusSaturated(format!("p00({t}) = {p:e} is within a factor 2 of 1/n^d = {floor:e}")));
        }
        if p < 0.5 {
            xs.push(t.ln());
            ys.push(p.ln());
        }
    }
    if xs.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints { needed: MIN_POINTS, got: xs.len() });
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(DecayFit { amplitude: (my - slope * mx).exp(), exponent: -slope, points_used: xs.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkRegime {
    Transient,
    Recurrent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenResult {
    pub lambda: f64,
    /// `None` stands for `+infinity`.
    pub value: Option<f64>,
    pub regime: WalkRegime,
    /// Order of the zero of `a^(k)` at `k = 0`.
    pub smallk_order: u32,
    pub resolutions_used: Vec<usize>,
    pub conjectural: bool,
}

/// Recurrence class from the small-k behaviour of the symbol.
///
/// With zero drift `a^(k) ~ -k.Sigma.k / 2`; the walk is transient iff the
/// second-moment matrix has rank at least 3. A nonzero drift gives a
/// first-order zero and a transient walk.
pub fn walk_regime(kernel: &MobilityKernel) -> (WalkRegime, u32) {
    let drift = kernel.drift();
    if drift.iter().any(|m| m.abs() > 1e-12) {
        return (WalkRegime::Transient, 1);
    }
    if kernel.covariance_rank() >= 3 {
        (WalkRegime::Transient, 2)
    } else {
        (WalkRegime::Recurrent, 2)
    }
}

/// Sum of `1/(-kappa a^(k))` over grid modes where the symbol does not vanish.
fn excluded_mode_sum(kernel: &MobilityKernel, kappa: f64, lattice: &LatticeSpec) -> Result<f64> {
    let sym = symbol_grid(kernel, lattice)?;
    let mut acc = Neumaier::default();
    for (r, i) in sym.re.iter().zip(&sym.im) {
        let z = Complex64::new(*r, *i);
        if z.norm() > 1e-13 {
            acc.add((1.0 / (-kappa * z)).re);
        }
    }
    Ok(acc.value() / lattice.sites() as f64)
}

/// `G_lambda(0,0)`.
pub fn green_function(kernel: &MobilityKernel, kappa: f64, lambda: f64, lattice: &LatticeSpec) -> Result<GreenResult> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be nonnegative")));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidRates(format!("kappa = {kappa} must be nonnegative")));
    }
    let (regime, order) = walk_regime(kernel);
    let conjectural = !kernel.is_symmetric();
    if lambda > 0.0 {
        let sym = symbol_grid(kernel, lattice)?;
        let grid: Vec<Complex64> =
            sym.re.iter().zip(&sym.im).map(|(&r, &i)| 1.0 / (lambda - kappa * Complex64::new(r, i))).collect();
        let value = torus_integrate(&grid)?.re;
        return Ok(GreenResult {
            lambda,
            value: Some(value),
            regime,
            smallk_order: order,
            resolutions_used: vec![lattice.n()],
            conjectural,
        });
    }
    if kappa == 0.0 {
        return Err(Error::ZeroMobility);
    }
    if regime == WalkRegime::Recurrent {
        return Ok(GreenResult {
            lambda,
            value: None,
            regime,
            smallk_order: order,
            resolutions_used: vec![],
            conjectural,
        });
    }
    let coarse = lattice.clone();
    let fine = LatticeSpec::with_spacing(lattice.d(), 2 * lattice.n(), lattice.h())?;
    let s1 = excluded_mode_sum(kernel, kappa, &coarse)?;
    let s2 = excluded_mode_sum(kernel, kappa, &fine)?;
    Ok(GreenResult {
        lambda,
        value: Some(2.0 * s2 - s1),
        regime,
        smallk_order: order,
        resolutions_used: vec![coarse.n(), fine.n()],
        conjectural,
    })
}

/// Grid frequency helper re-exported for callers building their own grids.
pub fn frequencies(lattice: &LatticeSpec) -> Vec<[f64; 3]> {
    (0..lattice.sites()).map(|i| crate::kernel::grid_frequency(lattice, i)).collect()
}

/// Phase `e^{i k.x}` sampled on the grid, for orthogonality checks.
pub fn plane_wave(lattice: &LatticeSpec, site: usize) -> Vec<Complex64> {
    let x = lattice.coords(site);
    frequencies(lattice)
        .iter()
        .map(|k| {
            let ph: f64 = (0..3).map(|i| k[i] * x[i] as f64).sum();
            Complex64::from_polar(1.0, ph)
        })
        .collect()
}
