//! Fixed-size bitsets over the cube `{0..n}^D`.
//!
//! Bit order is the lexicographic order of cube points, so subset checks in
//! the backtracking search reduce to word-wise `AND`/`ANDNOT`.

use crate::index::MultiIndex;

/// Upper bound on cube size in bits: covers `(n+1)^D` up to D=2 n=26,
/// D=3 n=8, D=4 n=4.
pub const MAX_CUBE_WORDS: usize = 12;
pub const MAX_CUBE_BITS: usize = MAX_CUBE_WORDS * 64;

/// A subset of `{0..n}^D` as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct CubeSet {
    pub d: usize,
    pub n: usize,
    nbits: usize,
    words: [u64; MAX_CUBE_WORDS],
}

impl CubeSet {
    pub fn cube_bits(d: usize, n: usize) -> usize {
        (n + 1).pow(d as u32)
    }

    pub fn empty(d: usize, n: usize) -> Self {
        let nbits = Self::cube_bits(d, n);
        assert!(nbits <= MAX_CUBE_BITS, "cube too large for bitset");
        Self {
            d,
            n,
            nbits,
            words: [0; MAX_CUBE_WORDS],
        }
    }

    pub fn full(d: usize, n: usize) -> Self {
        let mut s = Self::empty(d, n);
        for b in 0..s.nbits {
            s.words[b >> 6] |= 1u64 << (b & 63);
        }
        s
    }

    /// Lexicographic bit index of a cube point (first axis most significant).
    #[inline]
    pub fn bit_index(&self, p: &MultiIndex) -> usize {
        let mut idx = 0usize;
        for i in 0..self.d {
            idx = idx * (self.n + 1) + p.get(i) as usize;
        }
        idx
    }

    pub fn point_of_bit(&self, mut bit: usize) -> MultiIndex {
        let mut c = vec![0i64; self.d];
        for i in (0..self.d).rev() {
            c[i] = (bit % (self.n + 1)) as i64;
            bit /= self.n + 1;
        }
        MultiIndex::new(&c)
    }

    #[inline]
    pub fn insert(&mut self, p: &MultiIndex) {
        let b = self.bit_index(p);
        self.words[b >> 6] |= 1u64 << (b & 63);
    }

    #[inline]
    pub fn remove(&mut self, p: &MultiIndex) {
        let b = self.bit_index(p);
        self.words[b >> 6] &= !(1u64 << (b & 63));
    }

    #[inline]
    pub fn contains(&self, p: &MultiIndex) -> bool {
        if !p.in_cube(self.n) || p.dim() != self.d {
            return false;
        }
        let b = self.bit_index(p);
        self.words[b >> 6] & (1u64 << (b & 63)) != 0
    }

    #[inline]
    pub fn contains_bit(&self, b: usize) -> bool {
        self.words[b >> 6] & (1u64 << (b & 63)) != 0
    }

    /// True iff `self ⊆ other`.
    #[inline]
    pub fn subset_of(&self, other: &Self) -> bool {
        for w in 0..MAX_CUBE_WORDS {
            if self.words[w] & !other.words[w] != 0 {
                return false;
            }
        }
        true
    }

    #[inline]
    pub fn intersect_assign(&mut self, other: &Self) {
        for w in 0..MAX_CUBE_WORDS {
            self.words[w] &= other.words[w];
        }
    }

    /// `self := self \ other`.
    #[inline]
    pub fn and_not_assign(&mut self, other: &Self) {
        for w in 0..MAX_CUBE_WORDS {
            self.words[w] &= !other.words[w];
        }
    }

    pub fn union_assign(&mut self, other: &Self) {
        for w in 0..MAX_CUBE_WORDS {
            self.words[w] |= other.words[w];
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter_points(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.nbits).filter_map(move |b| {
            if self.contains_bit(b) {
                Some(self.point_of_bit(b))
            } else {
                None
            }
        })
    }

    /// Mask as lowercase hex, most significant word first, for serialization.
    pub fn to_hex(&self) -> String {
        let nwords = self.nbits.div_ceil(64);
        let mut s = String::new();
        for w in (0..nwords).rev() {
            s.push_str(&format!("{:016x}", self.words[w]));
        }
        s
    }

    pub fn from_hex(d: usize, n: usize, hex: &str) -> Option<Self> {
        let mut s = Self::empty(d, n);
        let nwords = s.nbits.div_ceil(64);
        if hex.len() != nwords * 16 {
            return None;
        }
        for w in 0..nwords {
            let off = (nwords - 1 - w) * 16;
            s.words[w] = u64::from_str_radix(&hex[off..off + 16], 16).ok()?;
        }
        Some(s)
    }
}

impl std::fmt::Debug for CubeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CubeSet(d={}, n={}, #{})", self.d, self.n, self.count())
    }
}

/// Per-axis slab masks: `slab(i, v)` holds every cube point with `p_i = v`.
#[derive(Clone)]
pub struct SlabMasks {
    pub d: usize,
    pub n: usize,
    slabs: Vec<CubeSet>,
}

impl SlabMasks {
    pub fn new(d: usize, n: usize) -> Self {
        let mut slabs = vec![CubeSet::empty(d, n); d * (n + 1)];
        let full = CubeSet::full(d, n);
        for p in full.iter_points() {
            for i in 0..d {
                slabs[i * (n + 1) + p.get(i) as usize].insert(&p);
            }
        }
        Self { d, n, slabs }
    }

    #[inline]
    pub fn slab(&self, axis: usize, v: usize) -> &CubeSet {
        &self.slabs[axis * (self.n + 1) + v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_round_trip() {
        let mut s = CubeSet::empty(2, 2);
        let p = MultiIndex::new(&[1, 2]);
        s.insert(&p);
        assert!(s.contains(&p));
        assert_eq!(s.count(), 1);
        assert_eq!(s.point_of_bit(s.bit_index(&p)), p);
        s.remove(&p);
        assert!(s.is_empty());
    }

    #[test]
    fn subset_and_slabs() {
        let full = CubeSet::full(2, 2);
        assert_eq!(full.count(), 9);
        let slabs = SlabMasks::new(2, 2);
        let s = slabs.slab(0, 1);
        assert_eq!(s.count(), 3);
        assert!(s.subset_of(&full));
        assert!(!full.subset_of(s));
    }

    #[test]
    fn hex_round_trip() {
        let mut s = CubeSet::empty(3, 4);
        s.insert(&MultiIndex::new(&[4, 0, 3]));
        s.insert(&MultiIndex::new(&[0, 0, 0]));
        let h = s.to_hex();
        assert_eq!(CubeSet::from_hex(3, 4, &h).unwrap(), s);
    }
}
