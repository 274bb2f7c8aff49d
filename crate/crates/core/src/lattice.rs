use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offsets and site coordinates are stored padded to three axes.
pub type Coord = [i64; 3];

/// Largest supported site count.
const MAX_SITES: usize = 1 << 32;

/// Periodic lattice `Z_n^d` with spacing `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    d: usize,
    n: usize,
    h: f64,
}

impl LatticeSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_spacing(d, n, 1.0)
    }

    pub fn with_spacing(d: usize, n: usize, h: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if n < 2 {
            return Err(Error::InvalidLattice(format!("n = {n}, need n >= 2")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidLattice(format!("spacing h = {h} must be positive")));
        }
        match n.checked_pow(d as u32) {
            Some(s) if s <= MAX_SITES => Ok(LatticeSpec { d, n, h }),
            _ => Err(Error::InvalidLattice(format!("{n}^{d} sites is too many"))),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Coordinates in `[0, n)` of a row-major site index (axis 0 slowest).
    pub fn coords(&self, index: usize) -> Coord {
        let mut c = [0i64; 3];
        let mut rem = index;
        for axis in (0..self.d).rev() {
            c[axis] = (rem % self.n) as i64;
            rem /= self.n;
        }
        c
    }

    /// Minimal-image coordinates in `(-n/2, n/2]`.
    pub fn centered(&self, index: usize) -> Coord {
        let half = (self.n / 2) as i64;
        let n = self.n as i64;
        let mut c = self.coords(index);
        for v in c.iter_mut().take(self.d) {
            if *v > half {
                *v -= n;
            }
        }
        c
    }

    /// Row-major index of a coordinate, wrapped onto the torus.
    pub fn index(&self, x: &Coord) -> usize {
        let n = self.n as i64;
        x.iter().take(self.d).fold(0usize, |acc, &v| acc * self.n + v.rem_euclid(n) as usize)
    }

    /// Index of `site + z`.
    pub fn shift(&self, site: usize, z: &Coord) -> usize {
        let c = self.coords(site);
        self.index(&[c[0] + z[0], c[1] + z[1], c[2] + z[2]])
    }

    /// Index of `-site`.
    pub fn negate(&self, site: usize) -> usize {
        let c = self.coords(site);
        self.index(&[-c[0], -c[1], -c[2]])
    }

    /// Squared minimal-image distance between two sites, in lattice units.
    pub fn torus_distance2(&self, a: usize, b: usize) -> i64 {
        let ca = self.coords(a);
        let cb = self.coords(b);
        let n = self.n as i64;
        (0..self.d)
            .map(|i| {
                let mut dx = (ca[i] - cb[i]).rem_euclid(n);
                if dx > n / 2 {
                    dx -= n;
                }
                dx * dx
            })
            .sum()
    }
}

/// Pads a coordinate slice of length `d` to three axes.
pub fn pad(d: usize, x: &[i64]) -> Result<Coord> {
    if x.len() != d {
        return Err(Error::OffsetArity { offset: x.to_vec(), expected: d, got: x.len() });
    }
    let mut c = [0i64; 3];
    c[..d].copy_from_slice(x);
    Ok(c)
}
