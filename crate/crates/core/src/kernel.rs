//! Jump kernels `a(z)` on `Z^d` and their Fourier symbols.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{pad, Coord, LatticeSpec};
use crate::summation::neumaier_sum;

/// Tolerance on the total jump mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Jump distribution with finite support on `Z^d \ {0}`; `a(0) = -1` is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityKernel {
    d: usize,
    support: Vec<(Coord, f64)>,
    symmetric: bool,
}

/// Validated kernel. Rejects asymmetric input.
pub fn build_kernel(d: usize, entries: &[(Vec<i64>, f64)]) -> Result<MobilityKernel> {
    let k = build_unchecked_symmetry(d, entries)?;
    if !k.symmetric {
        return Err(Error::AsymmetricKernel);
    }
    Ok(k)
}

/// Like [`build_kernel`] but admits `a(z) != a(-z)`. Results derived from
/// such kernels are flagged as conjectural downstream.
pub fn build_kernel_asymmetric(d: usize, entries: &[(Vec<i64>, f64)]) -> Result<MobilityKernel> {
    build_unchecked_symmetry(d, entries)
}

fn build_unchecked_symmetry(d: usize, entries: &[(Vec<i64>, f64)]) -> Result<MobilityKernel> {
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if entries.is_empty() {
        return Err(Error::EmptyKernel);
    }
    let mut support = Vec::with_capacity(entries.len());
    let mut seen: HashMap<Coord, f64> = HashMap::with_capacity(entries.len());
    for (offset, w) in entries {
        let z = pad(d, offset)?;
        if z == [0, 0, 0] {
            return Err(Error::ZeroOffset);
        }
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("weight {w} at {offset:?} is not finite")));
        }
        if *w < 0.0 {
            return Err(Error::NegativeWeight { offset: offset.clone(), weight: *w });
        }
        if seen.insert(z, *w).is_some() {
            return Err(Error::DuplicateOffset { offset: offset.clone() });
        }
        support.push((z, *w));
    }
    let sum = neumaier_sum(support.iter().map(|(_, w)| *w));
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::NonUnitMass { sum });
    }
    let symmetric = support.iter().all(|(z, w)| seen.get(&[-z[0], -z[1], -z[2]]).copied().unwrap_or(0.0) == *w);
    Ok(MobilityKernel { d, support, symmetric })
}

/// Weight `1/(2d)` on each unit offset.
pub fn kernel_nearest_neighbor(d: usize) -> Result<MobilityKernel> {
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let w = 1.0 / (2 * d) as f64;
    let mut entries = Vec::with_capacity(2 * d);
    for axis in 0..d {
        for s in [1i64, -1] {
            let mut z = vec![0i64; d];
            z[axis] = s;
            entries.push((z, w));
        }
    }
    build_kernel(d, &entries)
}

/// Product-Gaussian weights on the cube `[-radius, radius]^d \ {0}`, renormalized.
pub fn kernel_gaussian(d: usize, variance: f64, radius: u32) -> Result<MobilityKernel> {
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::InvalidArgument(format!("variance {variance} must be positive")));
    }
    if radius == 0 {
        return Err(Error::DegenerateTruncation);
    }
    let r = radius as i64;
    let side = (2 * r + 1) as usize;
    let mut offsets = Vec::new();
    for flat in 0..side.pow(d as u32) {
        let mut z = vec![0i64; d];
        let mut rem = flat;
        for c in z.iter_mut() {
            *c = (rem % side) as i64 - r;
            rem /= side;
        }
        if z.iter().any(|&c| c != 0) {
            offsets.push(z);
        }
    }
    // Exponents are shifted by the nearest shell so tiny variances do not underflow.
    let raw: Vec<f64> = offsets
        .iter()
        .map(|z| {
            let r2: i64 = z.iter().map(|c| c * c).sum();
            (-((r2 - 1) as f64) / (2.0 * variance)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateTruncation);
    }
    let entries: Vec<(Vec<i64>, f64)> =
        offsets.into_iter().zip(raw).map(|(z, w)| (z, w / total)).filter(|(_, w)| *w > 0.0).collect();
    if entries.is_empty() {
        return Err(Error::DegenerateTruncation);
    }
    build_kernel(d, &entries)
}

impl MobilityKernel {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn support(&self) -> &[(Coord, f64)] {
        &self.support
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `a(z)` for `z != 0`; zero off the support.
    pub fn weight(&self, z: &Coord) -> f64 {
        self.support.iter().find(|(o, _)| o == z).map_or(0.0, |(_, w)| *w)
    }

    /// `a(v)` read on the torus: sums every support offset congruent to `v`.
    pub fn weight_on_torus(&self, lattice: &LatticeSpec, v: &Coord) -> f64 {
        let target = lattice.index(v);
        self.support.iter().filter(|(z, _)| lattice.index(z) == target).map(|(_, w)| w).sum()
    }

    pub fn mass(&self) -> f64 {
        neumaier_sum(self.support.iter().map(|(_, w)| *w))
    }

    /// Mean jump `sum z a(z)`.
    pub fn drift(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (z, w) in &self.support {
            for i in 0..3 {
                m[i] += w * z[i] as f64;
            }
        }
        m
    }

    /// Second-moment matrix `sum z z^T a(z)`.
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut s = [[0.0; 3]; 3];
        for (z, w) in &self.support {
            for i in 0..3 {
                for j in 0..3 {
                    s[i][j] += w * (z[i] * z[j]) as f64;
                }
            }
        }
        s
    }

    /// Numerical rank of the second-moment matrix.
    pub fn covariance_rank(&self) -> usize {
        let s = self.covariance();
        let d = self.d;
        let mut m: Vec<Vec<f64>> = (0..d).map(|i| s[i][..d].to_vec()).collect();
        let scale = (0..d).map(|i| m[i][i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut rank = 0;
        for col in 0..d {
            let Some(piv) = (rank..d).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())) else {
                break;
            };
            if m[piv][col].abs() <= 1e-12 * scale {
                continue;
            }
            m.swap(rank, piv);
            let pivot = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank {
                    let f = row[col] / pivot[col];
                    for (v, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                        *v -= f * p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn check_lattice(&self, lattice: &LatticeSpec) -> Result<()> {
        if lattice.d() != self.d {
            return Err(Error::DimensionMismatch { kernel: self.d, lattice: lattice.d() });
        }
        Ok(())
    }
}

/// `sum_z a(z) e^{i k.z}` including the `a(0) = -1` term.
///
/// Evaluated as `sum a(z) (e^{i k.z} - 1)` with the real part written as
/// `-2 sin^2(k.z/2)`, which is exact at `k = 0` and accurate near it.
pub fn symbol(kernel: &MobilityKernel, k: &[f64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (z, w) in &kernel.support {
        let phase: f64 = k.iter().zip(z.iter()).map(|(ki, &zi)| ki * zi as f64).sum();
        let h = (0.5 * phase).sin();
        re -= 2.0 * w * h * h;
        im += w * phase.sin();
    }
    if kernel.symmetric {
        im = 0.0;
    }
    Complex64::new(re, im)
}

/// Symbol values on the `n^d` frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSymbol {
    pub lattice: LatticeSpec,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl FourierSymbol {
    /// Grid frequency of a row-major grid index: `2 pi j / n` wrapped into `[-pi, pi)`.
    pub fn frequency(&self, index: usize) -> [f64; 3] {
        grid_frequency(&self.lattice, index)
    }

    pub fn value(&self, index: usize) -> Complex64 {
        Complex64::new(self.re[index], self.im[index])
    }
}

pub fn grid_frequency(lattice: &LatticeSpec, index: usize) -> [f64; 3] {
    let n = lattice.n() as i64;
    let c = lattice.coords(index);
    let mut k = [0.0; 3];
    for i in 0..lattice.d() {
        let j = if 2 * c[i] < n { c[i] } else { c[i] - n };
        k[i] = 2.0 * PI * j as f64 / n as f64;
    }
    k
}

/// Phase index `(j . z) mod n` for a grid multi-index `j`.
pub(crate) fn phase_index(j: &Coord, z: &Coord, n: usize) -> usize {
    let n = n as i64;
    (j[0] * z[0] + j[1] * z[1] + j[2] * z[2]).rem_euclid(n) as usize
}

pub fn symbol_grid(kernel: &MobilityKernel, lattice: &LatticeSpec) -> Result<FourierSymbol> {
    kernel.check_lattice(lattice)?;
    let n = lattice.n();
    // Tables indexed by the phase 2 pi m / n: versine 2 sin^2(pi m/n) and sine.
    let vers: Vec<f64> = (0..n)
        .map(|m| {
            let s = (PI * m as f64 / n as f64).sin();
            2.0 * s * s
        })
        .collect();
    let sine: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).sin()).collect();
    let total = lattice.sites();
    let mut re = vec![0.0; total];
    let mut im = vec![0.0; total];
    for idx in 0..total {
        let j = lattice.coords(idx);
        let (mut r, mut i) = (0.0, 0.0);
        for (z, w) in &kernel.support {
            let m = phase_index(&j, z, n);
            r -= w * vers[m];
            i += w * sine[m];
        }
        re[idx] = r;
        im[idx] = if kernel.symmetric { 0.0 } else { i };
    }
    Ok(FourierSymbol { lattice: lattice.clone(), re, im })
}

/// `sum |z|^2 a(z)`.
pub fn kernel_variance(kernel: &MobilityKernel) -> f64 {
    neumaier_sum(kernel.support.iter().map(|(z, w)| w * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) as f64))
}

/// Continuum diffusion coefficient `kappa h^2 sigma^2 / 2`.
pub fn effective_diffusion(kernel: &MobilityKernel, kappa: f64, h: f64) -> f64 {
    kappa * h * h * kernel_variance(kernel) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn1() -> MobilityKernel {
        kernel_nearest_neighbor(1).unwrap()
    }

    #[test]
    fn nearest_neighbor_weights() {
        for d in 1..=3 {
            let k = kernel_nearest_neighbor(d).unwrap();
            assert_eq!(k.support().len(), 2 * d);
            assert!(k.support().iter().all(|(_, w)| *w == 1.0 / (2 * d) as f64));
            assert!(k.is_symmetric());
            assert_eq!(kernel_variance(&k), 1.0);
        }
        assert!(matches!(kernel_nearest_neighbor(0), Err(Error::UnsupportedDimension(0))));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(build_kernel(1, &[(vec![1], 0.6), (vec![-1], 0.5)]), Err(Error::NonUnitMass { .. })));
        assert!(matches!(build_kernel(1, &[(vec![1], 1.5), (vec![-1], -0.5)]), Err(Error::NegativeWeight { .. })));
        assert!(matches!(build_kernel(1, &[(vec![0], 1.0)]), Err(Error::ZeroOffset)));
        assert!(matches!(build_kernel(1, &[]), Err(Error::EmptyKernel)));
        assert!(matches!(build_kernel(1, &[(vec![1], 0.5), (vec![1], 0.5)]), Err(Error::DuplicateOffset { .. })));
        assert!(matches!(build_kernel(1, &[(vec![1], 0.7), (vec![-1], 0.3)]), Err(Error::AsymmetricKernel)));
        let a = build_kernel_asymmetric(1, &[(vec![1], 0.7), (vec![-1], 0.3)]).unwrap();
        assert!(!a.is_symmetric());
    }

    #[test]
    fn gaussian_kernels() {
        let g = kernel_gaussian(2, 16.0, 12).unwrap();
        assert!(g.is_symmetric());
        assert!((g.mass() - 1.0).abs() < 1e-12);
        let tight = kernel_gaussian(1, 1e-6, 1).unwrap();
        assert_eq!(tight.weight(&[1, 0, 0]), 0.5);
        assert_eq!(tight.weight(&[-1, 0, 0]), 0.5);
        // Direct summation of the unnormalized discrete Gaussian.
        let (mut num, mut den) = (0.0, 0.0);
        for z in -8i64..=8 {
            if z != 0 {
                let w = (-(z * z) as f64 / 8.0).exp();
                num += w * (z * z) as f64;
                den += w;
            }
        }
        let g1 = kernel_gaussian(1, 4.0, 8).unwrap();
        assert!((kernel_variance(&g1) - num / den).abs() < 1e-12);
        // Dropping the origin scales the discrete-Gaussian variance (4 up to
        // tail and e^{-2 pi^2 v} corrections) by T / (T - 1), T = total unnormalized mass.
        let t = den + 1.0;
        assert!((kernel_variance(&g1) - 4.0 * t / (t - 1.0)).abs() < 0.02);
        assert!(matches!(kernel_gaussian(1, 1.0, 0), Err(Error::DegenerateTruncation)));
    }

    #[test]
    fn symbol_values() {
        let k = nn1();
        assert_eq!(symbol(&k, &[0.0]), Complex64::new(0.0, 0.0));
        assert!((symbol(&k, &[PI]).re + 2.0).abs() < 1e-15);
        assert!((symbol(&k, &[PI / 2.0]).re + 1.0).abs() < 1e-15);
        let a = build_kernel_asymmetric(1, &[(vec![1], 0.7), (vec![-1], 0.3)]).unwrap();
        let s = symbol(&a, &[0.4]);
        assert!((s.im - 0.4 * 0.4f64.sin()).abs() < 1e-15);
        assert_eq!(symbol(&a, &[0.0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn grid_matches_pointwise() {
        let l = LatticeSpec::new(1, 4).unwrap();
        let g = symbol_grid(&nn1(), &l).unwrap();
        let expected = [0.0, -1.0, -2.0, -1.0];
        for (v, e) in g.re.iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
        let a = build_kernel_asymmetric(2, &[(vec![1, 0], 0.4), (vec![0, -2], 0.6)]).unwrap();
        let l = LatticeSpec::new(2, 6).unwrap();
        let g = symbol_grid(&a, &l).unwrap();
        for idx in 0..l.sites() {
            let k = g.frequency(idx);
            let p = symbol(&a, &k[..2]);
            assert!((p - g.value(idx)).norm() < 1e-14);
        }
        assert!(matches!(symbol_grid(&nn1(), &LatticeSpec::new(2, 4).unwrap()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn diffusion_mapping() {
        let k = nn1();
        assert_eq!(effective_diffusion(&k, 1.0, 1.0), 0.5);
        assert_eq!(effective_diffusion(&k, 0.0, 1.0), 0.0);
        let h: f64 = 0.1;
        assert!((effective_diffusion(&k, 2.0 / (h * h), h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_rank_counts_spanned_axes() {
        assert_eq!(kernel_nearest_neighbor(3).unwrap().covariance_rank(), 3);
        let flat = build_kernel(3, &[(vec![1, 0, 0], 0.5), (vec![-1, 0, 0], 0.5)]).unwrap();
        assert_eq!(flat.covariance_rank(), 1);
    }
}
