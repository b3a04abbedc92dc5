//! Integer multi-indices and small combinatorial helpers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest supported dimensionality.
///
/// The algorithms are dimension-agnostic; the inline storage below trades
/// unbounded generality for allocation-free hot loops.
pub const MAX_DIM: usize = 4;

/// A point of `Z^D`, used both for grid cells and lattice points.
///
/// Components beyond `dim` are kept at zero so that derived comparisons give
/// a plain lexicographic order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dim: u8,
    c: [i64; MAX_DIM],
}

impl MultiIndex {
    pub fn new(components: &[i64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&components.len()),
            "dimension must be 1..={MAX_DIM}"
        );
        let mut c = [0i64; MAX_DIM];
        c[..components.len()].copy_from_slice(components);
        Self {
            dim: components.len() as u8,
            c,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(&vec![0; dim])
    }

    /// All components set to `v`.
    pub fn splat(dim: usize, v: i64) -> Self {
        Self::new(&vec![v; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn get(&self, axis: usize) -> i64 {
        debug_assert!(axis < self.dim());
        self.c[axis]
    }

    #[inline]
    pub fn set(&mut self, axis: usize, v: i64) {
        debug_assert!(axis < self.dim());
        self.c[axis] = v;
    }

    #[inline]
    pub fn components(&self) -> &[i64] {
        &self.c[..self.dim()]
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut r = *self;
        for i in 0..self.dim() {
            r.c[i] += other.c[i];
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut r = *self;
        for i in 0..self.dim() {
            r.c[i] -= other.c[i];
        }
        r
    }

    pub fn offset(&self, axis: usize, delta: i64) -> Self {
        let mut r = *self;
        r.c[axis] += delta;
        r
    }

    pub fn sum(&self) -> i64 {
        self.components().iter().sum()
    }

    pub fn norm1(&self) -> i64 {
        self.components().iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> i64 {
        self.components().iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    pub fn norm2_sq(&self) -> i64 {
        self.components().iter().map(|v| v * v).sum()
    }

    /// True iff every component lies in `0..=n`.
    pub fn in_cube(&self, n: usize) -> bool {
        self.components().iter().all(|&v| v >= 0 && v <= n as i64)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.components().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.components().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        if !(1..=MAX_DIM).contains(&v.len()) {
            return Err(serde::de::Error::custom("dimension must be 1..=4"));
        }
        Ok(MultiIndex::new(&v))
    }
}

/// `C(a, b)` with overflow detection.
pub fn binomial(a: u64, b: u64) -> Result<u64> {
    if b > a {
        return Ok(0);
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for k in 0..b {
        acc = acc
            .checked_mul((a - k) as u128)
            .ok_or_else(|| Error::Overflow(format!("C({a},{b})")))?;
        acc /= (k + 1) as u128;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("C({a},{b})")))
}

/// Iterate the integer box `lo..=hi` per axis in lexicographic order.
pub fn iter_box(lo: &MultiIndex, hi: &MultiIndex) -> Vec<MultiIndex> {
    let d = lo.dim();
    let mut out = Vec::new();
    let mut cur = *lo;
    loop {
        out.push(cur);
        // increment from the last axis, lexicographic order
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur.get(axis) < hi.get(axis) {
                cur.set(axis, cur.get(axis) + 1);
                for a in axis + 1..d {
                    cur.set(a, lo.get(a));
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_order() {
        let a = MultiIndex::new(&[0, 1]);
        let b = MultiIndex::new(&[0, 2]);
        let c = MultiIndex::new(&[1, 0]);
        assert!(a < b && b < c);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2).unwrap(), 6);
        assert_eq!(binomial(7, 3).unwrap(), 35);
        assert_eq!(binomial(7, 2).unwrap(), 21);
        assert_eq!(binomial(3, 5).unwrap(), 0);
        assert!(binomial(120, 60).is_err());
    }

    #[test]
    fn box_iteration_is_lexicographic() {
        let pts = iter_box(&MultiIndex::new(&[0, 0]), &MultiIndex::new(&[1, 2]));
        assert_eq!(pts.len(), 6);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pts[0], MultiIndex::new(&[0, 0]));
        assert_eq!(pts[5], MultiIndex::new(&[1, 2]));
    }
}
