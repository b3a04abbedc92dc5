//! Triangular lattices in `Z^D` and the permutation algebra acting on them.
//!
//! A triangular lattice of degree `n` is a set of `C(n+D, D)` points whose
//! per-axis coordinates admit a numbering with index sums at most `n`.  The
//! canonical representative is the principal lattice (all coordinate
//! numberings increasing); every other triangular lattice inside the cube
//! `{0..n}^D` is the image of the principal lattice under a unique
//! D-permutation, its *formation*.  The inverse map, the *restoration*, is
//! computable directly from slice cardinalities, which is what makes
//! membership testing cheap.

use crate::error::{Error, Result};
use crate::index::{binomial, iter_box, MultiIndex, MAX_DIM};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default upper bound on the polynomial degree.  Interpolation on uniform
/// grids degrades rapidly beyond this point, so higher degrees must be
/// requested explicitly.
pub const DEGREE_CAP: usize = 6;

/// Check `(d, n)` argument validity; `cap` enforces the default degree guard.
pub(crate) fn check_dn(d: usize, n: usize, capped: bool) -> Result<()> {
    if d < 1 || d > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {d} outside 1..={MAX_DIM}"
        )));
    }
    if capped && n > DEGREE_CAP {
        return Err(Error::DegreeCap { n, cap: DEGREE_CAP });
    }
    Ok(())
}

/// Number of points of a triangular lattice of degree `n` in `d` dimensions:
/// `C(n+d, d)`.
pub fn lattice_cardinality(d: usize, n: usize) -> Result<u64> {
    check_dn(d, n, false)?;
    binomial((n + d) as u64, d as u64)
}

/// Number of points with coordinate-index sum exactly `m`: `C(m+d-1, d-1)`.
pub fn slice_cardinality(d: usize, m: usize) -> Result<u64> {
    check_dn(d, 0, false)?;
    binomial((m + d - 1) as u64, (d - 1) as u64)
}

/// The principal lattice `{ j : j_k >= 0, sum j_k <= n }`, in lexicographic
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrincipalLattice {
    pub d: usize,
    pub n: usize,
    points: Vec<MultiIndex>,
}

/// Construct the principal lattice of degree `n` in `d` dimensions.
///
/// Degrees above [`DEGREE_CAP`] are refused; use
/// [`principal_lattice_uncapped`] when a larger degree is intentional.
pub fn principal_lattice(d: usize, n: usize) -> Result<PrincipalLattice> {
    check_dn(d, n, true)?;
    Ok(principal_lattice_uncapped(d, n))
}

/// As [`principal_lattice`] without the degree guard.
pub fn principal_lattice_uncapped(d: usize, n: usize) -> PrincipalLattice {
    check_dn(d, 0, false).expect("dimension");
    let lo = MultiIndex::zero(d);
    let hi = MultiIndex::splat(d, n as i64);
    let points: Vec<MultiIndex> = iter_box(&lo, &hi)
        .into_iter()
        .filter(|p| p.sum() <= n as i64)
        .collect();
    debug_assert_eq!(
        points.len() as u64,
        lattice_cardinality(d, n).unwrap_or(u64::MAX)
    );
    PrincipalLattice { d, n, points }
}

impl PrincipalLattice {
    pub fn points(&self) -> &[MultiIndex] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &MultiIndex) -> bool {
        p.dim() == self.d && p.in_cube(self.n) && p.sum() <= self.n as i64
    }
}

/// D independent permutations of `{0..n}`, acting componentwise on the cube.
///
/// Row `i` of the matrix lists the images `a_i(0), ..., a_i(n)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DPermutation {
    d: usize,
    n: usize,
    rows: Vec<Vec<u8>>,
}

impl DPermutation {
    /// Build from a `d x (n+1)` matrix; every row must be a bijection of
    /// `{0..n}`.
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() || rows.len() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "row count {} outside 1..={MAX_DIM}",
                rows.len()
            )));
        }
        let n = rows[0].len().checked_sub(1).ok_or_else(|| {
            Error::InvalidArgument("permutation rows must be nonempty".into())
        })?;
        for row in &rows {
            if row.len() != n + 1 {
                return Err(Error::DimensionMismatch("ragged permutation matrix".into()));
            }
            let mut seen = vec![false; n + 1];
            for &v in row {
                if (v as usize) > n || seen[v as usize] {
                    return Err(Error::InvalidArgument(format!(
                        "row {row:?} is not a permutation of 0..={n}"
                    )));
                }
                seen[v as usize] = true;
            }
        }
        Ok(Self {
            d: rows.len(),
            n,
            rows,
        })
    }

    pub fn identity(d: usize, n: usize) -> Self {
        let row: Vec<u8> = (0..=n as u8).collect();
        Self {
            d,
            n,
            rows: vec![row; d],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix entry `a_i(j)`; `axis` is 0-based.
    #[inline]
    pub fn entry(&self, axis: usize, j: usize) -> u8 {
        self.rows[axis][j]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// Componentwise application `A p = (a_1(p_1), ..., a_D(p_D))`.
    pub fn apply_point(&self, p: &MultiIndex) -> Result<MultiIndex> {
        if p.dim() != self.d {
            return Err(Error::DimensionMismatch("point dimension".into()));
        }
        if !p.in_cube(self.n) {
            return Err(Error::InvalidArgument(format!(
                "point {p:?} outside cube 0..={}",
                self.n
            )));
        }
        let mut out = *p;
        for i in 0..self.d {
            out.set(i, self.rows[i][p.get(i) as usize] as i64);
        }
        Ok(out)
    }

    /// Image of a point set; cardinality is preserved.
    pub fn apply_lattice(&self, points: &[MultiIndex]) -> Result<Vec<MultiIndex>> {
        let mut out = points
            .iter()
            .map(|p| self.apply_point(p))
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        Ok(out)
    }

    /// Row-wise function composition: row `i` of the result is `a_i ∘ b_i`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::DimensionMismatch("composing D-permutations".into()));
        }
        let rows = (0..self.d)
            .map(|i| {
                (0..=self.n)
                    .map(|j| self.rows[i][other.rows[i][j] as usize])
                    .collect()
            })
            .collect();
        Ok(Self {
            d: self.d,
            n: self.n,
            rows,
        })
    }

    pub fn inverse(&self) -> Self {
        let mut rows = vec![vec![0u8; self.n + 1]; self.d];
        for i in 0..self.d {
            for j in 0..=self.n {
                rows[i][self.rows[i][j] as usize] = j as u8;
            }
        }
        Self {
            d: self.d,
            n: self.n,
            rows,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().enumerate().all(|(j, &v)| v as usize == j))
    }
}

impl fmt::Debug for DPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DPermutation{:?}", self.rows)
    }
}

/// A triangular lattice stored in cube coordinates `{0..n}^D` together with
/// an optional shift into global grid coordinates.
///
/// The point set is the source of truth; the formation is a cached derived
/// value (the D-permutation mapping the principal lattice onto `points`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangularLattice {
    pub d: usize,
    pub n: usize,
    /// Shift from cube coordinates into the caller's grid coordinates.
    pub origin: MultiIndex,
    points: Vec<MultiIndex>,
    formation: DPermutation,
}

impl TriangularLattice {
    /// Validate a point set (cube coordinates) as a triangular lattice.
    pub fn from_points(d: usize, n: usize, mut points: Vec<MultiIndex>) -> Result<Self> {
        points.sort_unstable();
        points.dedup();
        let r = restoration(d, n, &points)?;
        let formation = r.inverse();
        Ok(Self {
            d,
            n,
            origin: MultiIndex::zero(d),
            points,
            formation,
        })
    }

    /// The image `A P` of the principal lattice under `formation`.
    pub fn from_formation(formation: DPermutation) -> Result<Self> {
        let d = formation.d();
        let n = formation.n();
        let principal = principal_lattice_uncapped(d, n);
        let points = formation.apply_lattice(principal.points())?;
        Ok(Self {
            d,
            n,
            origin: MultiIndex::zero(d),
            points,
            formation,
        })
    }

    pub fn with_origin(mut self, origin: MultiIndex) -> Self {
        self.origin = origin;
        self
    }

    /// Points in cube coordinates, lexicographically sorted.
    pub fn points(&self) -> &[MultiIndex] {
        &self.points
    }

    /// Points shifted by `origin` into global grid coordinates.
    pub fn points_global(&self) -> Vec<MultiIndex> {
        self.points.iter().map(|p| p.add(&self.origin)).collect()
    }

    pub fn formation(&self) -> &DPermutation {
        &self.formation
    }

    pub fn restoration(&self) -> DPermutation {
        self.formation.inverse()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The numbered coordinate `p_{axis, j}` (here always the integer
    /// `formation(axis, j)`, possibly shifted by the origin).
    pub fn coordinate(&self, axis: usize, j: usize) -> i64 {
        self.formation.entry(axis, j) as i64 + self.origin.get(axis)
    }

    /// Serialize as the line-oriented text form: header `D n`, one point per
    /// line, then the formation matrix.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.d, self.n);
        for p in self.points_global() {
            let comps: Vec<String> = p.components().iter().map(|v| v.to_string()).collect();
            s.push_str(&comps.join(" "));
            s.push('\n');
        }
        s.push_str("formation\n");
        for row in self.formation.rows() {
            let comps: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&comps.join(" "));
            s.push('\n');
        }
        s
    }
}

/// The `m`-slice of a point set across `axis` (0-based): all points whose
/// `axis` component equals `m`.
pub fn slice(points: &[MultiIndex], axis: usize, m: i64) -> Vec<MultiIndex> {
    points
        .iter()
        .filter(|p| p.get(axis) == m)
        .copied()
        .collect()
}

/// The restoration of a triangular lattice embedded in `{0..n}^D`: row `i`
/// maps coordinate `m` to the number of slices along axis `i` strictly larger
/// than the `m`-slice.  Applying it to the lattice yields the principal
/// lattice; inputs that fail this are rejected.
pub fn restoration(d: usize, n: usize, points: &[MultiIndex]) -> Result<DPermutation> {
    check_dn(d, 0, false)?;
    let expect = lattice_cardinality(d, n)?;
    if points.len() as u64 != expect {
        return Err(Error::NotTriangularLattice(format!(
            "{} points, expected {expect}",
            points.len()
        )));
    }
    for p in points {
        if p.dim() != d || !p.in_cube(n) {
            return Err(Error::NotTriangularLattice(format!(
                "point {p:?} outside cube 0..={n}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(d);
    for axis in 0..d {
        let mut counts = vec![0u64; n + 1];
        for p in points {
            counts[p.get(axis) as usize] += 1;
        }
        if d == 1 {
            // One-dimensional lattices are exactly the full coordinate range;
            // every slice is a single point and the restoration is trivial.
            if counts.iter().any(|&c| c != 1) {
                return Err(Error::NotTriangularLattice(
                    "one-dimensional lattice must hit every coordinate once".into(),
                ));
            }
            rows.push((0..=n as u8).collect());
            continue;
        }
        // Slice cardinalities along each axis must be pairwise distinct for
        // the counting rule to define a bijection.
        let mut sorted = counts.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::NotTriangularLattice(format!(
                "slice cardinalities along axis {axis} are not pairwise distinct"
            )));
        }
        let row: Vec<u8> = (0..=n)
            .map(|m| counts.iter().filter(|&&c| c > counts[m]).count() as u8)
            .collect();
        rows.push(row);
    }
    let r = DPermutation::new(rows)?;
    // The counting rule can produce a valid D-permutation on subsets that are
    // still not triangular; verify the image is precisely the principal
    // lattice.
    let image = r.apply_lattice(points)?;
    let principal = principal_lattice_uncapped(d, n);
    if image != principal.points() {
        return Err(Error::NotTriangularLattice(
            "restoration image differs from the principal lattice".into(),
        ));
    }
    Ok(r)
}

/// The formation (inverse restoration) of a triangular lattice.
pub fn formation(d: usize, n: usize, points: &[MultiIndex]) -> Result<DPermutation> {
    Ok(restoration(d, n, points)?.inverse())
}

/// True iff `points` is a triangular lattice of degree `n` inside the cube.
pub fn is_triangular_lattice(points: &[MultiIndex], d: usize, n: usize) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len() == points.len() && restoration(d, n, &sorted).is_ok()
}

/// Uniformly random D-permutation (test helper, shared across modules).
#[cfg(test)]
pub(crate) fn random_dpermutation(
    d: usize,
    n: usize,
    rng: &mut crate::rng::SplitMix64,
) -> DPermutation {
    let rows = (0..d)
        .map(|_| {
            let mut row: Vec<u8> = (0..=n as u8).collect();
            for i in (1..row.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                row.swap(i, j);
            }
            row
        })
        .collect();
    DPermutation::new(rows).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::new(c)
    }

    /// The running six-point example lattice of degree 2 in the plane.
    fn example_lattice() -> Vec<MultiIndex> {
        vec![
            mi(&[0, 0]),
            mi(&[0, 2]),
            mi(&[1, 0]),
            mi(&[1, 1]),
            mi(&[1, 2]),
            mi(&[2, 0]),
        ]
    }

    fn example_formation() -> DPermutation {
        DPermutation::new(vec![vec![1, 0, 2], vec![0, 2, 1]]).unwrap()
    }

    #[test]
    fn principal_lattice_2_2() {
        let p = principal_lattice(2, 2).unwrap();
        let expect = vec![
            mi(&[0, 0]),
            mi(&[0, 1]),
            mi(&[0, 2]),
            mi(&[1, 0]),
            mi(&[1, 1]),
            mi(&[2, 0]),
        ];
        assert_eq!(p.points(), expect.as_slice());
    }

    #[test]
    fn principal_lattice_edge_cases() {
        let p = principal_lattice(1, 0).unwrap();
        assert_eq!(p.points(), &[mi(&[0])]);
        let p = principal_lattice(3, 4).unwrap();
        assert_eq!(p.len(), 35);
        assert!(principal_lattice(2, 7).is_err());
        assert_eq!(principal_lattice_uncapped(2, 7).len(), 36);
    }

    #[test]
    fn cardinality_examples() {
        assert_eq!(lattice_cardinality(2, 2).unwrap(), 6);
        assert_eq!(lattice_cardinality(3, 4).unwrap(), 35);
        assert_eq!(lattice_cardinality(2, 5).unwrap(), 21);
        assert_eq!(slice_cardinality(2, 3).unwrap(), 4);
        assert!(lattice_cardinality(0, 1).is_err());
    }

    #[test]
    fn apply_point_examples() {
        let a = example_formation();
        assert_eq!(a.apply_point(&mi(&[0, 0])).unwrap(), mi(&[1, 0]));
        assert_eq!(a.apply_point(&mi(&[1, 1])).unwrap(), mi(&[0, 2]));
        let e = DPermutation::identity(2, 2);
        for p in principal_lattice(2, 2).unwrap().points() {
            assert_eq!(e.apply_point(p).unwrap(), *p);
        }
        assert!(a.apply_point(&mi(&[3, 0])).is_err());
    }

    #[test]
    fn apply_lattice_examples() {
        let a = example_formation();
        let p = principal_lattice(2, 2).unwrap();
        let image = a.apply_lattice(p.points()).unwrap();
        assert_eq!(image, example_lattice());
        // E fixes any set; A then A^{-1} restores it.
        let e = DPermutation::identity(2, 2);
        assert_eq!(e.apply_lattice(p.points()).unwrap(), p.points());
        let back = a.inverse().apply_lattice(&image).unwrap();
        assert_eq!(back, p.points());
    }

    #[test]
    fn compose_and_inverse() {
        let a = example_formation();
        let e = DPermutation::identity(2, 2);
        assert_eq!(a.compose(&e).unwrap(), a);
        assert!(a.compose(&a.inverse()).unwrap().is_identity());
        assert_eq!(e.inverse(), e);
        assert_eq!(a.inverse().inverse(), a);
        // Brute-force componentwise composition check: (A*A)(i,j) = a_i(a_i(j)).
        let aa = a.compose(&a).unwrap();
        for i in 0..2 {
            for j in 0..=2usize {
                let expect = a.entry(i, a.entry(i, j) as usize);
                assert_eq!(aa.entry(i, j), expect);
            }
        }
        assert!(aa.is_identity()); // both rows are involutions
    }

    #[test]
    fn compose_dimension_mismatch() {
        let a = example_formation();
        let b = DPermutation::identity(2, 3);
        assert!(a.compose(&b).is_err());
    }

    #[test]
    fn restoration_example() {
        let r = restoration(2, 2, &example_lattice()).unwrap();
        assert_eq!(r, example_formation()); // this lattice's R equals its A
        let p = principal_lattice(2, 2).unwrap();
        assert!(restoration(2, 2, p.points()).unwrap().is_identity());
    }

    #[test]
    fn formation_examples() {
        let f = formation(2, 2, &example_lattice()).unwrap();
        assert_eq!(f, example_formation());
        let lat = TriangularLattice::from_formation(f.clone()).unwrap();
        assert_eq!(lat.points(), example_lattice().as_slice());
        assert_eq!(lat.formation(), &f);
    }

    /// Enumerate all D-permutations of degree n (rows = independent
    /// permutations of 0..=n).
    pub(crate) fn all_dpermutations(d: usize, n: usize) -> Vec<DPermutation> {
        fn perms(n: usize) -> Vec<Vec<u8>> {
            let mut out = Vec::new();
            let mut items: Vec<u8> = (0..=n as u8).collect();
            fn rec(items: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
                if k == items.len() {
                    out.push(items.clone());
                    return;
                }
                for i in k..items.len() {
                    items.swap(k, i);
                    rec(items, k + 1, out);
                    items.swap(k, i);
                }
            }
            rec(&mut items, 0, &mut out);
            out
        }
        let rows = perms(n);
        let mut result = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let chosen: Vec<Vec<u8>> = idx.iter().map(|&i| rows[i].clone()).collect();
            result.push(DPermutation::new(chosen).unwrap());
            let mut axis = d;
            loop {
                if axis == 0 {
                    return result;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < rows.len() {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    #[test]
    fn formation_is_bijection_on_small_groups() {
        // formation(A P) = A exhaustively for D=2, n<=2; the image count is
        // the group order ((n+1)!)^D
        for (d, n) in [(2, 1), (2, 2)] {
            let p = principal_lattice(d, n).unwrap();
            let mut images = std::collections::BTreeSet::new();
            for a in all_dpermutations(d, n) {
                let t = a.apply_lattice(p.points()).unwrap();
                assert_eq!(formation(d, n, &t).unwrap(), a);
                images.insert(t);
            }
            let fact: usize = (1..=n + 1).product();
            assert_eq!(images.len(), fact.pow(d as u32));
        }
        // In one dimension every permutation fixes the lattice as a set, so
        // all images collapse onto the principal lattice itself.
        for n in 1..=3usize {
            let p = principal_lattice(1, n).unwrap();
            for a in all_dpermutations(1, n) {
                let t = a.apply_lattice(p.points()).unwrap();
                assert_eq!(t, p.points());
                assert!(formation(1, n, &t).unwrap().is_identity());
            }
        }
    }

    #[test]
    fn exhaustive_membership_count_d2n2() {
        // Of the C(9,6) = 84 six-point subsets of the 3x3 cube, exactly
        // ((n+1)!)^D = 36 are triangular lattices (the images of the
        // principal lattice under the permutation group).
        let cube: Vec<MultiIndex> = crate::index::iter_box(
            &MultiIndex::zero(2),
            &MultiIndex::splat(2, 2),
        )
        .into_iter()
        .collect();
        let mut count = 0;
        let mut subset = [0usize; 6];
        fn rec(
            cube: &[MultiIndex],
            start: usize,
            k: usize,
            subset: &mut [usize; 6],
            count: &mut usize,
        ) {
            if k == 6 {
                let pts: Vec<MultiIndex> = subset.iter().map(|&i| cube[i]).collect();
                if is_triangular_lattice(&pts, 2, 2) {
                    *count += 1;
                }
                return;
            }
            for i in start..cube.len() {
                subset[k] = i;
                rec(cube, i + 1, k + 1, subset, count);
            }
        }
        rec(&cube, 0, 0, &mut subset, &mut count);
        assert_eq!(count, 36);
    }

    #[test]
    fn restoration_of_random_images() {
        let mut rng = crate::rng::SplitMix64::new(7);
        for _ in 0..200 {
            let d = 2 + (rng.next_u64() % 2) as usize;
            let n = 1 + (rng.next_u64() % 4) as usize;
            let a = random_dpermutation(d, n, &mut rng);
            let p = principal_lattice(d, n).unwrap();
            let t = a.apply_lattice(p.points()).unwrap();
            assert_eq!(restoration(d, n, &t).unwrap(), a.inverse());
            assert!(is_triangular_lattice(&t, d, n));
        }
    }

    use super::random_dpermutation;

    #[test]
    fn group_axioms_sampled() {
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..100 {
            let d = 1 + (rng.next_u64() % 3) as usize;
            let n = 1 + (rng.next_u64() % 6) as usize;
            let a = random_dpermutation(d, n, &mut rng);
            let b = random_dpermutation(d, n, &mut rng);
            let c = random_dpermutation(d, n, &mut rng);
            let ab_c = a.compose(&b).unwrap().compose(&c).unwrap();
            let a_bc = a.compose(&b.compose(&c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc);
            let e = DPermutation::identity(d, n);
            assert_eq!(a.compose(&e).unwrap(), a);
            assert_eq!(e.compose(&a).unwrap(), a);
            assert!(a.compose(&a.inverse()).unwrap().is_identity());
        }
    }

    #[test]
    fn slices() {
        let t = example_lattice();
        assert_eq!(
            slice(&t, 0, 1),
            vec![mi(&[1, 0]), mi(&[1, 1]), mi(&[1, 2])]
        );
        let p = principal_lattice(2, 2).unwrap();
        assert_eq!(
            slice(p.points(), 1, 0),
            vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[2, 0])]
        );
        assert!(slice(&[], 0, 0).is_empty());
    }

    #[test]
    fn every_slice_is_lower_degree_lattice() {
        // A slice of a triangular lattice, with the fixed axis dropped, is a
        // triangular lattice of the reduced degree in one fewer dimension.
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..40 {
            let n = 1 + (rng.next_u64() % 4) as usize;
            let a = random_dpermutation(3, n, &mut rng);
            let p = principal_lattice(3, n).unwrap();
            let t = a.apply_lattice(p.points()).unwrap();
            let r = restoration(3, n, &t).unwrap();
            for axis in 0..3usize {
                for m in 0..=n as i64 {
                    let s = slice(&t, axis, m);
                    assert!(!s.is_empty());
                    let keep: Vec<usize> = (0..3).filter(|&i| i != axis).collect();
                    let reduced: Vec<MultiIndex> = s
                        .iter()
                        .map(|q| MultiIndex::new(&[q.get(keep[0]), q.get(keep[1])]))
                        .collect();
                    // reduced degree = n minus the numbering of coordinate m
                    let k = r.entry(axis, m as usize) as usize;
                    assert!(
                        crate::lattice::is_triangular_lattice_any_embed(&reduced, 2, n - k),
                        "slice axis {axis} m {m} of degree-{n} lattice"
                    );
                }
            }
        }
    }

    #[test]
    fn triangular_membership() {
        assert!(is_triangular_lattice(&example_lattice(), 2, 2));
        let p = principal_lattice(2, 2).unwrap();
        assert!(is_triangular_lattice(p.points(), 2, 2));
        // Swapping (1,1) for (2,2) keeps the set triangular: renumbering both
        // axes as (0,2,1) restores the principal index pattern.
        let mut swapped = p.points().to_vec();
        swapped[4] = mi(&[2, 2]);
        assert!(is_triangular_lattice(&swapped, 2, 2));
        // Two full columns of height two tie the slice cardinalities, which
        // no numbering can repair.
        let broken = vec![
            mi(&[0, 0]),
            mi(&[0, 1]),
            mi(&[1, 0]),
            mi(&[1, 1]),
            mi(&[2, 0]),
            mi(&[2, 1]),
        ];
        assert!(!is_triangular_lattice(&broken, 2, 2));
        // duplicate points are rejected
        let dup = vec![
            mi(&[0, 0]),
            mi(&[0, 0]),
            mi(&[0, 2]),
            mi(&[1, 0]),
            mi(&[1, 1]),
            mi(&[2, 0]),
        ];
        assert!(!is_triangular_lattice(&dup, 2, 2));
        // out-of-cube points are rejected
        let outside = vec![
            mi(&[0, 0]),
            mi(&[0, 3]),
            mi(&[0, 2]),
            mi(&[1, 0]),
            mi(&[1, 1]),
            mi(&[2, 0]),
        ];
        assert!(!is_triangular_lattice(&outside, 2, 2));
    }

    #[test]
    fn text_round_trip() {
        let lat = TriangularLattice::from_points(2, 2, example_lattice()).unwrap();
        let text = lat.to_text();
        assert!(text.starts_with("2 2\n"));
        assert!(text.contains("formation"));
    }
}

/// Membership test up to per-axis relabeling: compresses the distinct
/// coordinate values of each axis onto `0..count-1` first.  Triangularity
/// only constrains coordinate *indices*, so any injective relabeling
/// preserves it; this covers point sets (such as slices of a larger lattice)
/// whose raw coordinates do not fill a cube.
pub fn is_triangular_lattice_any_embed(points: &[MultiIndex], d: usize, n: usize) -> bool {
    if points.is_empty() {
        return false;
    }
    let mut compressed = points.to_vec();
    for axis in 0..d {
        let mut vals: Vec<i64> = points.iter().map(|p| p.get(axis)).collect();
        vals.sort_unstable();
        vals.dedup();
        if vals.len() != n + 1 {
            return false;
        }
        for p in &mut compressed {
            let rank = vals.binary_search(&p.get(axis)).unwrap();
            p.set(axis, rank as i64);
        }
    }
    is_triangular_lattice(&compressed, d, n)
}
