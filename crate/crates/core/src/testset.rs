//! Stagewise partitions of the principal lattice used by the lattice search.
//!
//! The search determines the formation matrix one entry at a time, column by
//! column.  Entry `t = s(l, m)` settles the image of coordinate `m` along
//! axis `l`, and the table cell `W_(l,m)` lists the principal-lattice points
//! that become checkable at that stage.  Type I cells are the raw filtration
//! differences; type II cells are built from orbits under the subgroup fixing
//! the already-determined coordinates, which front-loads the feasibility
//! checks and prunes far larger subtrees.

use crate::cube::{CubeSet, SlabMasks};
use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::lattice::{check_dn, principal_lattice_uncapped};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Column-wise linear ordering of matrix positions: `s(i, j) = i + j*D` with
/// 1-based `i` and `k`.
pub fn linear_index(i: usize, j: usize, d: usize, n: usize) -> Result<usize> {
    if i < 1 || i > d || j > n {
        return Err(Error::InvalidArgument(format!(
            "pair ({i},{j}) outside [1,{d}] x [0,{n}]"
        )));
    }
    Ok(i + j * d)
}

/// Inverse of [`linear_index`].
pub fn linear_index_inv(k: usize, d: usize, n: usize) -> Result<(usize, usize)> {
    if k < 1 || k > d * (n + 1) {
        return Err(Error::InvalidArgument(format!(
            "scalar index {k} outside 1..={}",
            d * (n + 1)
        )));
    }
    Ok((1 + (k - 1) % d, (k - 1) / d))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum TestSetKind {
    TypeI,
    TypeII,
}

/// One cell of the partition, with the data needed for the stage-`t` reject
/// check.
#[derive(Clone, Debug)]
pub struct TestCell {
    /// 1-based axis of the entry determined at this stage.
    pub ell: usize,
    /// Column of the entry determined at this stage.
    pub m: usize,
    /// Points of the principal lattice first checked at this stage.
    pub points: Vec<MultiIndex>,
    /// Per-axis count of determined columns at this stage minus one:
    /// axis `i` (0-based) has columns `0..=fixed[i]` determined (`-1`: none).
    pub fixed: [i32; crate::index::MAX_DIM],
    /// True iff every point has all components within the determined columns
    /// (always true for type I cells), enabling the pointwise fast path.
    pub all_fixed: bool,
}

/// The full partition `{W_(l,m)}` for one `(kind, D, n)`, plus slab masks.
#[derive(Clone)]
pub struct TestSetTable {
    pub kind: TestSetKind,
    pub d: usize,
    pub n: usize,
    /// Cells indexed by `t - 1` for stages `t = 1..=D(n+1)`.
    pub cells: Vec<TestCell>,
    pub slabs: SlabMasks,
}

impl TestSetTable {
    pub fn stages(&self) -> usize {
        self.d * (self.n + 1)
    }

    pub fn cell(&self, t: usize) -> &TestCell {
        &self.cells[t - 1]
    }
}

fn fixed_columns(ell: usize, m: usize, d: usize) -> [i32; crate::index::MAX_DIM] {
    let mut fixed = [-1i32; crate::index::MAX_DIM];
    for (i, f) in fixed.iter_mut().enumerate().take(d) {
        // axis i (0-based) has columns 0..=m determined if i+1 <= ell,
        // otherwise 0..=m-1
        *f = if i + 1 <= ell { m as i32 } else { m as i32 - 1 };
    }
    fixed
}

/// Orbit of `p` under the D-permutations fixing, per axis `i`, the
/// coordinates in `lambda[i]`: the Cartesian product of `{p_i}` (when fixed)
/// and the complement of `lambda[i]` (when free).
pub fn orbit(p: &MultiIndex, lambda: &[Vec<usize>], n: usize) -> Vec<MultiIndex> {
    let d = p.dim();
    debug_assert_eq!(lambda.len(), d);
    let mut axes: Vec<Vec<i64>> = Vec::with_capacity(d);
    for i in 0..d {
        if lambda[i].contains(&(p.get(i) as usize)) {
            axes.push(vec![p.get(i)]);
        } else {
            axes.push(
                (0..=n as i64)
                    .filter(|v| !lambda[i].contains(&(*v as usize)))
                    .collect(),
            );
        }
    }
    let mut out = vec![MultiIndex::zero(d)];
    for (i, vals) in axes.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for base in &out {
            for &v in vals {
                let mut q = *base;
                q.set(i, v);
                next.push(q);
            }
        }
        out = next;
    }
    out.sort_unstable();
    out
}

/// `W(Λ)` for the stagewise `Λ` given by `fixed`: all cube points whose orbit
/// under the fixing subgroup stays inside the principal lattice.  The orbit
/// is a box, so containment reduces to its max-corner sum.
fn w_lambda(d: usize, n: usize, fixed: &[i32]) -> CubeSet {
    let mut w = CubeSet::empty(d, n);
    let full = CubeSet::full(d, n);
    for p in full.iter_points() {
        let mut max_sum = 0i64;
        for i in 0..d {
            if p.get(i) <= fixed[i] as i64 {
                max_sum += p.get(i);
            } else {
                max_sum += n as i64;
            }
        }
        if max_sum <= n as i64 {
            w.insert(&p);
        }
    }
    w
}

fn build_table(kind: TestSetKind, d: usize, n: usize) -> TestSetTable {
    let stages = d * (n + 1);
    let principal = principal_lattice_uncapped(d, n);
    let mut pmask = CubeSet::empty(d, n);
    for p in principal.points() {
        pmask.insert(p);
    }

    let mut cells = Vec::with_capacity(stages);
    let mut prev = CubeSet::empty(d, n);
    for t in 1..=stages {
        let (ell, m) = linear_index_inv(t, d, n).unwrap();
        let fixed = fixed_columns(ell, m, d);
        let cur = match kind {
            TestSetKind::TypeI => {
                // primitive: p_i within the determined columns for every axis
                let mut w = CubeSet::empty(d, n);
                for p in principal.points() {
                    if (0..d).all(|i| p.get(i) <= fixed[i] as i64) {
                        w.insert(p);
                    }
                }
                w
            }
            TestSetKind::TypeII => {
                let mut w = w_lambda(d, n, &fixed[..d]);
                w.intersect_assign(&pmask); // orbit points are cube points; keep P members
                w
            }
        };
        let mut cell_mask = cur;
        for pt in prev.iter_points() {
            cell_mask.remove(&pt);
        }
        let points: Vec<MultiIndex> = cell_mask.iter_points().collect();
        let all_fixed = points
            .iter()
            .all(|p| (0..d).all(|i| p.get(i) <= fixed[i] as i64));
        cells.push(TestCell {
            ell,
            m,
            points,
            fixed,
            all_fixed,
        });
        prev = cur;
    }
    TestSetTable {
        kind,
        d,
        n,
        cells,
        slabs: SlabMasks::new(d, n),
    }
}

/// Partition tables are pure functions of `(kind, D, n)`; build each once and
/// memoize process-wide.
pub fn test_sets(kind: TestSetKind, d: usize, n: usize) -> Result<&'static TestSetTable> {
    check_dn(d, 0, false)?;
    if CubeSet::cube_bits(d, n) > crate::cube::MAX_CUBE_BITS {
        return Err(Error::InvalidArgument(format!(
            "cube (n+1)^D too large for (d={d}, n={n})"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<(TestSetKind, usize, usize), &'static TestSetTable>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("test-set cache poisoned");
    if let Some(t) = guard.get(&(kind, d, n)) {
        return Ok(t);
    }
    let table: &'static TestSetTable = Box::leak(Box::new(build_table(kind, d, n)));
    guard.insert((kind, d, n), table);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::new(c)
    }

    fn cell_points(t: &TestSetTable, ell: usize, m: usize) -> Vec<MultiIndex> {
        let k = linear_index(ell, m, t.d, t.n).unwrap();
        t.cell(k).points.clone()
    }

    #[test]
    fn linear_index_examples() {
        assert_eq!(linear_index(1, 0, 2, 2).unwrap(), 1);
        assert_eq!(linear_index_inv(3, 2, 2).unwrap(), (1, 1));
        for d in 1..=3 {
            for n in 0..=6 {
                for i in 1..=d {
                    for j in 0..=n {
                        let k = linear_index(i, j, d, n).unwrap();
                        assert_eq!(linear_index_inv(k, d, n).unwrap(), (i, j));
                    }
                }
            }
        }
        assert!(linear_index(0, 0, 2, 2).is_err());
        assert!(linear_index_inv(7, 2, 2).is_err());
    }

    #[test]
    fn type1_d2n2_exact() {
        let t = test_sets(TestSetKind::TypeI, 2, 2).unwrap();
        assert!(cell_points(t, 1, 0).is_empty());
        assert_eq!(cell_points(t, 1, 1), vec![mi(&[1, 0])]);
        assert_eq!(cell_points(t, 1, 2), vec![mi(&[2, 0])]);
        assert_eq!(cell_points(t, 2, 0), vec![mi(&[0, 0])]);
        assert_eq!(cell_points(t, 2, 1), vec![mi(&[0, 1]), mi(&[1, 1])]);
        assert_eq!(cell_points(t, 2, 2), vec![mi(&[0, 2])]);
    }

    #[test]
    fn type1_one_dimensional() {
        let t = test_sets(TestSetKind::TypeI, 1, 4).unwrap();
        for m in 0..=4 {
            assert_eq!(cell_points(t, 1, m), vec![mi(&[m as i64])]);
        }
    }

    #[test]
    fn type2_d2n2_exact() {
        let t = test_sets(TestSetKind::TypeII, 2, 2).unwrap();
        assert_eq!(
            cell_points(t, 1, 0),
            vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[0, 2])]
        );
        assert!(cell_points(t, 1, 1).is_empty());
        assert!(cell_points(t, 1, 2).is_empty());
        assert_eq!(cell_points(t, 2, 0), vec![mi(&[1, 0]), mi(&[2, 0])]);
        assert_eq!(cell_points(t, 2, 1), vec![mi(&[1, 1])]);
        assert!(cell_points(t, 2, 2).is_empty());
    }

    #[test]
    fn orbit_examples() {
        // all coordinates held fixed: the orbit is the point itself
        let lam_full: Vec<Vec<usize>> = vec![(0..=2).collect(), (0..=2).collect()];
        assert_eq!(orbit(&mi(&[1, 2]), &lam_full, 2), vec![mi(&[1, 2])]);
        // nothing fixed: the whole cube
        let lam_none: Vec<Vec<usize>> = vec![vec![], vec![]];
        assert_eq!(orbit(&mi(&[1, 1]), &lam_none, 2).len(), 9);
        // the worked degree-2 cases
        let lam = vec![vec![0], vec![]];
        assert_eq!(
            orbit(&mi(&[0, 1]), &lam, 2),
            vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[0, 2])]
        );
        let o = orbit(&mi(&[1, 1]), &lam, 2);
        assert_eq!(
            o,
            vec![
                mi(&[1, 0]),
                mi(&[1, 1]),
                mi(&[1, 2]),
                mi(&[2, 0]),
                mi(&[2, 1]),
                mi(&[2, 2])
            ]
        );
    }

    #[test]
    fn partitions_are_disjoint_and_complete() {
        for kind in [TestSetKind::TypeI, TestSetKind::TypeII] {
            for d in 1..=3usize {
                for n in 0..=6usize {
                    let t = test_sets(kind, d, n).unwrap();
                    let principal = principal_lattice_uncapped(d, n);
                    let mut seen = std::collections::BTreeSet::new();
                    for cell in &t.cells {
                        for p in &cell.points {
                            assert!(seen.insert(*p), "{kind:?} ({d},{n}): dup {p:?}");
                            assert!(principal.contains(p));
                        }
                    }
                    assert_eq!(
                        seen.len(),
                        principal.len(),
                        "{kind:?} ({d},{n}): union != principal lattice"
                    );
                }
            }
        }
    }

    #[test]
    fn type1_cells_are_always_pointwise() {
        for d in 1..=3usize {
            for n in 0..=6usize {
                let t = test_sets(TestSetKind::TypeI, d, n).unwrap();
                assert!(t.cells.iter().all(|c| c.all_fixed));
            }
        }
    }
}
