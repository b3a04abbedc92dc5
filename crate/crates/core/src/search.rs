//! Depth-first generation of poised lattices inside a feasible node set.
//!
//! The solver enumerates formation matrices entry by entry in the column-wise
//! stage order.  A stage is pruned as soon as the image of its test-set cell
//! leaves the feasible set; for type II cells the image of a whole orbit is
//! determined by the partial matrix (fixed axes map through their entries,
//! free axes map onto the complement of the already-used row values), so one
//! containment check eliminates every completion at once.  A completed matrix
//! is accepted iff the final cell stays feasible and the starting point lies
//! on the lattice.

use crate::cube::CubeSet;
use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::lattice::{check_dn, principal_lattice_uncapped, TriangularLattice, DEGREE_CAP};
use crate::testset::{test_sets, TestCell, TestSetKind, TestSetTable};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

/// Feasible nodes: a bitmask over the cube `{0..n}^D` shifted by `origin`
/// into global grid coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSet {
    pub d: usize,
    pub n: usize,
    pub origin: MultiIndex,
    pub mask: CubeSet,
}

impl FeasibleSet {
    pub fn empty(d: usize, n: usize, origin: MultiIndex) -> Self {
        Self {
            d,
            n,
            origin,
            mask: CubeSet::empty(d, n),
        }
    }

    pub fn full_cube(d: usize, n: usize, origin: MultiIndex) -> Self {
        Self {
            d,
            n,
            origin,
            mask: CubeSet::full(d, n),
        }
    }

    /// Cube-local coordinates of a global point, if it lies in the cube.
    pub fn to_cube(&self, global: &MultiIndex) -> Option<MultiIndex> {
        let local = global.sub(&self.origin);
        local.in_cube(self.n).then_some(local)
    }

    pub fn insert_global(&mut self, global: &MultiIndex) -> bool {
        match self.to_cube(global) {
            Some(local) => {
                self.mask.insert(&local);
                true
            }
            None => false,
        }
    }

    pub fn contains_global(&self, global: &MultiIndex) -> bool {
        self.to_cube(global)
            .map(|l| self.mask.contains(&l))
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.mask.count()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum OrderingRule {
    /// Try coordinates closest to the starting point first; break ties by
    /// larger feasible slice, then by ascending value.
    CompactnessFirst,
    /// Try coordinates with the largest feasible slice first; break ties by
    /// distance to the starting point, then by ascending value.
    FeasibilityFirst,
}

#[derive(Clone, Debug)]
pub struct TlgProblem {
    pub feasible: FeasibleSet,
    /// Starting point in global coordinates; must be feasible.
    pub q: MultiIndex,
    pub kind: TestSetKind,
    pub ordering: OrderingRule,
    pub stop_at_first: bool,
    pub allow_degree_above_cap: bool,
}

impl TlgProblem {
    pub fn new(feasible: FeasibleSet, q: MultiIndex) -> Self {
        Self {
            feasible,
            q,
            kind: TestSetKind::TypeII,
            ordering: OrderingRule::CompactnessFirst,
            stop_at_first: true,
            allow_degree_above_cap: false,
        }
    }

    pub fn with_kind(mut self, kind: TestSetKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_ordering(mut self, ordering: OrderingRule) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn all_solutions(mut self) -> Self {
        self.stop_at_first = false;
        self
    }

    pub fn allow_high_degree(mut self) -> Self {
        self.allow_degree_above_cap = true;
        self
    }
}

/// Wire form of a problem: `{D, n, origin, mask(hex), q, ordering, test_sets}`.
#[derive(Serialize, Deserialize)]
struct ProblemJson {
    #[serde(rename = "D")]
    d: usize,
    n: usize,
    origin: MultiIndex,
    mask: String,
    q: MultiIndex,
    ordering: OrderingRule,
    test_sets: TestSetKind,
    #[serde(default)]
    stop_at_first: bool,
}

impl TlgProblem {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ProblemJson {
            d: self.feasible.d,
            n: self.feasible.n,
            origin: self.feasible.origin,
            mask: self.feasible.mask.to_hex(),
            q: self.q,
            ordering: self.ordering,
            test_sets: self.kind,
            stop_at_first: self.stop_at_first,
        })
        .expect("problem serialization")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let p: ProblemJson = serde_json::from_value(v.clone())
            .map_err(|e| Error::Parse(format!("problem json: {e}")))?;
        let mask = CubeSet::from_hex(p.d, p.n, &p.mask)
            .ok_or_else(|| Error::Parse("bad feasible-set mask".into()))?;
        Ok(Self {
            feasible: FeasibleSet {
                d: p.d,
                n: p.n,
                origin: p.origin,
                mask,
            },
            q: p.q,
            kind: p.test_sets,
            ordering: p.ordering,
            stop_at_first: p.stop_at_first,
            allow_degree_above_cap: true,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub prunings: u64,
    pub solutions_found: u64,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Total order on candidate coordinate values along one axis, returned in
/// try-first-to-try-last order (greatest first).
pub fn order_candidates(
    j: &[usize],
    axis: usize,
    k: &FeasibleSet,
    q_global: &MultiIndex,
    rule: OrderingRule,
) -> Vec<usize> {
    let q_axis = q_global.get(axis) - k.origin.get(axis);
    let table = test_sets(TestSetKind::TypeI, k.d, k.n).expect("slab masks");
    let slice_count = |v: usize| -> usize {
        let mut m = *table.slabs.slab(axis, v);
        m.intersect_assign(&k.mask);
        m.count()
    };
    let mut vals: Vec<usize> = j.to_vec();
    match rule {
        OrderingRule::CompactnessFirst => vals.sort_by_key(|&v| {
            (
                (v as i64 - q_axis).abs(),
                usize::MAX - slice_count(v),
                v,
            )
        }),
        OrderingRule::FeasibilityFirst => vals.sort_by_key(|&v| {
            (
                usize::MAX - slice_count(v),
                (v as i64 - q_axis).abs(),
                v,
            )
        }),
    }
    vals
}

struct SearchCtx<'a> {
    d: usize,
    n: usize,
    stages: usize,
    table: &'a TestSetTable,
    k_mask: CubeSet,
    q_cube: MultiIndex,
    /// Per-axis candidate values in try order.
    try_order: Vec<Vec<u8>>,
    stop_at_first: bool,
    prune: bool,
    // mutable search state
    rows: Vec<Vec<i16>>,
    used: Vec<Vec<bool>>,
    /// Per-axis mask of cube points whose axis coordinate is not yet used in
    /// that row; the image of a free coordinate lies inside it.
    comp: Vec<CubeSet>,
    stats: SearchStats,
    solutions: Vec<TriangularLattice>,
    origin: MultiIndex,
}

impl SearchCtx<'_> {
    fn reject_cell(&self, cell: &TestCell) -> bool {
        if cell.all_fixed {
            for p in &cell.points {
                let mut idx = 0usize;
                for i in 0..self.d {
                    idx = idx * (self.n + 1) + self.rows[i][p.get(i) as usize] as usize;
                }
                if !self.k_mask.contains_bit(idx) {
                    return true;
                }
            }
            return false;
        }
        for p in &cell.points {
            // Image of the orbit of p: a box combining determined entries and
            // complements of used row values.
            let mut boxm = CubeSet::full(self.d, self.n);
            for i in 0..self.d {
                if p.get(i) <= cell.fixed[i] as i64 {
                    boxm.intersect_assign(self.table.slabs.slab(i, self.rows[i][p.get(i) as usize] as usize));
                } else {
                    boxm.intersect_assign(&self.comp[i]);
                }
            }
            if !boxm.subset_of(&self.k_mask) {
                return true;
            }
        }
        false
    }

    fn q_on_lattice(&self) -> bool {
        // q in A P  <=>  sum of preimage indices <= n
        let mut sum = 0i64;
        for i in 0..self.d {
            let v = self.q_cube.get(i) as i16;
            match self.rows[i].iter().position(|&x| x == v) {
                Some(j) => sum += j as i64,
                None => return false,
            }
        }
        sum <= self.n as i64
    }

    fn full_image_feasible(&self) -> bool {
        // Exhaustive acceptance check, used when pruning is disabled.
        let principal = principal_lattice_uncapped(self.d, self.n);
        principal.points().iter().all(|p| {
            let mut idx = 0usize;
            for i in 0..self.d {
                idx = idx * (self.n + 1) + self.rows[i][p.get(i) as usize] as usize;
            }
            self.k_mask.contains_bit(idx)
        })
    }

    fn record_solution(&mut self) {
        let rows: Vec<Vec<u8>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| v as u8).collect())
            .collect();
        let a = crate::lattice::DPermutation::new(rows).expect("search rows are permutations");
        let lat = TriangularLattice::from_formation(a)
            .expect("formation image is triangular")
            .with_origin(self.origin);
        self.solutions.push(lat);
        self.stats.solutions_found += 1;
    }

    /// Returns true when the search should stop entirely.
    fn visit(&mut self, t: usize) -> bool {
        self.stats.nodes_expanded += 1;
        if t == self.stages {
            let ok = if self.prune {
                !self.reject_cell(self.table.cell(t)) && self.q_on_lattice()
            } else {
                self.full_image_feasible() && self.q_on_lattice()
            };
            if ok {
                self.record_solution();
                return self.stop_at_first;
            }
            self.stats.prunings += 1;
            return false;
        }
        if self.prune && t >= 1 && self.reject_cell(self.table.cell(t)) {
            self.stats.prunings += 1;
            return false;
        }
        let (ell, m) = crate::testset::linear_index_inv(t + 1, self.d, self.n).unwrap();
        let axis = ell - 1;
        for pos in 0..self.try_order[axis].len() {
            let v = self.try_order[axis][pos];
            if self.used[axis][v as usize] {
                continue;
            }
            self.rows[axis][m] = v as i16;
            self.used[axis][v as usize] = true;
            let slab = *self.table.slabs.slab(axis, v as usize);
            self.comp[axis].and_not_assign(&slab);
            let stop = self.visit(t + 1);
            self.comp[axis].union_assign(&slab);
            self.used[axis][v as usize] = false;
            self.rows[axis][m] = -1;
            if stop {
                return true;
            }
        }
        false
    }
}

/// Solve the lattice-generation problem: find triangular lattices `T` with
/// `q ∈ T ⊆ K`.  An empty result is a normal outcome; `q ∉ K` is an error.
pub fn tlg_solve(problem: &TlgProblem) -> Result<(Vec<TriangularLattice>, SearchStats)> {
    solve_inner(problem, true)
}

/// Test hook: identical traversal with the stagewise reject disabled, i.e. a
/// brute-force enumeration with full acceptance checks.
#[cfg(test)]
pub(crate) fn tlg_solve_unpruned(
    problem: &TlgProblem,
) -> Result<(Vec<TriangularLattice>, SearchStats)> {
    solve_inner(problem, false)
}

fn solve_inner(
    problem: &TlgProblem,
    prune: bool,
) -> Result<(Vec<TriangularLattice>, SearchStats)> {
    let d = problem.feasible.d;
    let n = problem.feasible.n;
    check_dn(d, n, !problem.allow_degree_above_cap)?;
    if n > DEGREE_CAP && !problem.allow_degree_above_cap {
        return Err(Error::DegreeCap { n, cap: DEGREE_CAP });
    }
    let q_cube = problem
        .feasible
        .to_cube(&problem.q)
        .ok_or(Error::StartNotFeasible)?;
    if !problem.feasible.mask.contains(&q_cube) {
        return Err(Error::StartNotFeasible);
    }
    let table = test_sets(problem.kind, d, n)?;

    let all: Vec<usize> = (0..=n).collect();
    let try_order: Vec<Vec<u8>> = (0..d)
        .map(|axis| {
            order_candidates(&all, axis, &problem.feasible, &problem.q, problem.ordering)
                .into_iter()
                .map(|v| v as u8)
                .collect()
        })
        .collect();

    let start = Instant::now();
    let mut ctx = SearchCtx {
        d,
        n,
        stages: d * (n + 1),
        table,
        k_mask: problem.feasible.mask,
        q_cube,
        try_order,
        stop_at_first: problem.stop_at_first,
        prune,
        rows: vec![vec![-1i16; n + 1]; d],
        used: vec![vec![false; n + 1]; d],
        comp: (0..d).map(|_| CubeSet::full(d, n)).collect(),
        stats: SearchStats::default(),
        solutions: Vec::new(),
        origin: problem.feasible.origin,
    };
    ctx.visit(0);
    ctx.stats.elapsed = start.elapsed();
    let mut solutions = ctx.solutions;
    if !problem.stop_at_first {
        solutions.sort_by(|a, b| a.points().cmp(b.points()));
        solutions.dedup_by(|a, b| a.points() == b.points());
    }
    Ok((solutions, ctx.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::is_triangular_lattice;
    use crate::rng::SplitMix64;

    fn mi(c: &[i64]) -> MultiIndex {
        MultiIndex::new(c)
    }

    /// The six feasible nodes left of the curved boundary in the worked
    /// degree-2 scenario, with the start at (1,0).
    fn curved_scenario() -> TlgProblem {
        let mut k = FeasibleSet::empty(2, 2, MultiIndex::zero(2));
        for p in [
            [0, 0],
            [0, 2],
            [1, 0],
            [1, 1],
            [1, 2],
            [2, 0],
        ] {
            assert!(k.insert_global(&mi(&p)));
        }
        TlgProblem::new(k, mi(&[1, 0]))
    }

    #[test]
    fn curved_scenario_first_solution() {
        let problem = curved_scenario()
            .with_kind(TestSetKind::TypeII)
            .with_ordering(OrderingRule::CompactnessFirst);
        let (sols, stats) = tlg_solve(&problem).unwrap();
        assert_eq!(sols.len(), 1);
        let lat = &sols[0];
        let expect = vec![
            mi(&[0, 0]),
            mi(&[0, 2]),
            mi(&[1, 0]),
            mi(&[1, 1]),
            mi(&[1, 2]),
            mi(&[2, 0]),
        ];
        assert_eq!(lat.points(), expect.as_slice());
        assert_eq!(
            lat.formation().rows(),
            &[vec![1, 0, 2], vec![0, 2, 1]]
        );
        assert!(stats.nodes_expanded > 0 && stats.solutions_found == 1);
    }

    #[test]
    fn full_cube_degree_one_all_solutions() {
        let k = FeasibleSet::full_cube(2, 1, MultiIndex::zero(2));
        let problem = TlgProblem::new(k, mi(&[0, 0])).all_solutions();
        let (sols, _) = tlg_solve(&problem).unwrap();
        assert_eq!(sols.len(), 3);
        for s in &sols {
            assert!(s.points().contains(&mi(&[0, 0])));
            assert!(is_triangular_lattice(s.points(), 2, 1));
        }
    }

    #[test]
    fn principal_only_feasible_set() {
        let mut k = FeasibleSet::empty(2, 2, MultiIndex::zero(2));
        for p in crate::lattice::principal_lattice(2, 2).unwrap().points() {
            k.insert_global(p);
        }
        let problem = TlgProblem::new(k, mi(&[0, 0])).all_solutions();
        let (sols, _) = tlg_solve(&problem).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(
            sols[0].points(),
            crate::lattice::principal_lattice(2, 2).unwrap().points()
        );
    }

    #[test]
    fn infeasible_start_is_error() {
        let mut problem = curved_scenario();
        problem.q = mi(&[2, 2]); // not in K
        assert!(matches!(tlg_solve(&problem), Err(Error::StartNotFeasible)));
    }

    #[test]
    fn empty_result_is_normal() {
        // only q itself feasible: no 6-point lattice fits
        let mut k = FeasibleSet::empty(2, 2, MultiIndex::zero(2));
        k.insert_global(&mi(&[1, 1]));
        let problem = TlgProblem::new(k, mi(&[1, 1]));
        let (sols, _) = tlg_solve(&problem).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn ordering_examples() {
        // equal slice counts: plain distance order
        let k = FeasibleSet::full_cube(2, 2, MultiIndex::zero(2));
        let order = order_candidates(&[0, 1, 2], 0, &k, &mi(&[0, 0]), OrderingRule::CompactnessFirst);
        assert_eq!(order, vec![0, 1, 2]);

        // distance tie broken by larger slice
        let mut k2 = FeasibleSet::empty(2, 2, MultiIndex::zero(2));
        for p in [[0, 0], [0, 1], [0, 2], [2, 0]] {
            k2.insert_global(&mi(&p));
        }
        let order = order_candidates(&[0, 2], 0, &k2, &mi(&[1, 0]), OrderingRule::CompactnessFirst);
        assert_eq!(order, vec![0, 2]);

        // feasibility-first: descending slice count
        let mut k3 = FeasibleSet::empty(2, 4, MultiIndex::zero(2));
        for j in 0..5 {
            k3.insert_global(&mi(&[0, j]));
        }
        for j in 0..3 {
            k3.insert_global(&mi(&[1, j]));
        }
        k3.insert_global(&mi(&[2, 0]));
        let order = order_candidates(&[0, 1, 2], 0, &k3, &mi(&[0, 0]), OrderingRule::FeasibilityFirst);
        assert_eq!(order, vec![0, 1, 2]);
    }

    fn random_problem(rng: &mut SplitMix64, d: usize, n: usize, density: f64) -> Option<TlgProblem> {
        let mut k = FeasibleSet::empty(d, n, MultiIndex::zero(d));
        let full = CubeSet::full(d, n);
        let mut pts: Vec<MultiIndex> = Vec::new();
        for p in full.iter_points() {
            if rng.next_f64() < density {
                k.mask.insert(&p);
                pts.push(p);
            }
        }
        if pts.is_empty() {
            return None;
        }
        let q = pts[rng.below(pts.len())];
        Some(TlgProblem::new(k, q))
    }

    #[test]
    fn solution_set_independent_of_strategy() {
        let mut rng = SplitMix64::new(2024);
        let mut nonempty = 0;
        for _ in 0..60 {
            let d = 2;
            let n = 1 + rng.below(2);
            let Some(base) = random_problem(&mut rng, d, n, 0.75) else {
                continue;
            };
            let mut all: Option<Vec<Vec<MultiIndex>>> = None;
            for kind in [TestSetKind::TypeI, TestSetKind::TypeII] {
                for ordering in [OrderingRule::CompactnessFirst, OrderingRule::FeasibilityFirst] {
                    let p = base
                        .clone()
                        .with_kind(kind)
                        .with_ordering(ordering)
                        .all_solutions();
                    let (sols, _) = tlg_solve(&p).unwrap();
                    let sets: Vec<Vec<MultiIndex>> =
                        sols.iter().map(|s| s.points().to_vec()).collect();
                    match &all {
                        None => all = Some(sets),
                        Some(prev) => assert_eq!(prev, &sets, "{kind:?} {ordering:?}"),
                    }
                }
            }
            if all.map(|a| !a.is_empty()).unwrap_or(false) {
                nonempty += 1;
            }
        }
        assert!(nonempty > 5, "too few solvable instances sampled");
    }

    /// Oracle: enumerate every size-C(n+D,D) subset of K containing q and
    /// keep the triangular ones.
    fn brute_force_solutions(problem: &TlgProblem) -> Vec<Vec<MultiIndex>> {
        let d = problem.feasible.d;
        let n = problem.feasible.n;
        let size = crate::lattice::lattice_cardinality(d, n).unwrap() as usize;
        let nodes: Vec<MultiIndex> = problem.feasible.mask.iter_points().collect();
        let q = problem.feasible.to_cube(&problem.q).unwrap();
        let mut out = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        fn rec(
            nodes: &[MultiIndex],
            size: usize,
            start: usize,
            chosen: &mut Vec<usize>,
            q: &MultiIndex,
            d: usize,
            n: usize,
            out: &mut Vec<Vec<MultiIndex>>,
        ) {
            if chosen.len() == size {
                let pts: Vec<MultiIndex> = chosen.iter().map(|&i| nodes[i]).collect();
                if pts.contains(q) && is_triangular_lattice(&pts, d, n) {
                    out.push(pts);
                }
                return;
            }
            if start >= nodes.len() || nodes.len() - start < size - chosen.len() {
                return;
            }
            for i in start..nodes.len() {
                chosen.push(i);
                rec(nodes, size, i + 1, chosen, q, d, n, out);
                chosen.pop();
            }
        }
        rec(&nodes, size, 0, &mut chosen, &q, d, n, &mut out);
        out.sort();
        out
    }

    #[test]
    fn exhaustive_completeness_degree_two() {
        // every K over the 3x3 cube containing (0,0), all solutions vs oracle
        let d = 2;
        let n = 2;
        let full: Vec<MultiIndex> = CubeSet::full(d, n).iter_points().collect();
        let q = mi(&[0, 0]);
        let qbit = full.iter().position(|p| *p == q).unwrap();
        for mask_bits in 0u32..512 {
            if mask_bits & (1 << qbit) == 0 {
                continue;
            }
            if (mask_bits.count_ones() as usize) < 6 {
                continue;
            }
            let mut k = FeasibleSet::empty(d, n, MultiIndex::zero(d));
            for (i, p) in full.iter().enumerate() {
                if mask_bits & (1 << i) != 0 {
                    k.mask.insert(p);
                }
            }
            let problem = TlgProblem::new(k, q).all_solutions();
            let (sols, _) = tlg_solve(&problem).unwrap();
            let got: Vec<Vec<MultiIndex>> = sols.iter().map(|s| s.points().to_vec()).collect();
            let want = brute_force_solutions(&problem);
            assert_eq!(got, want, "mask {mask_bits:09b}");
        }
    }

    #[test]
    fn pruning_is_sound() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..40 {
            let d = if rng.below(2) == 0 { 2 } else { 3 };
            let n = if d == 2 { 1 + rng.below(2) } else { 1 };
            let Some(base) = random_problem(&mut rng, d, n, 0.8) else {
                continue;
            };
            let p = base.all_solutions();
            let (pruned, _) = tlg_solve(&p).unwrap();
            let (unpruned, _) = tlg_solve_unpruned(&p).unwrap();
            let a: Vec<_> = pruned.iter().map(|s| s.points().to_vec()).collect();
            let b: Vec<_> = unpruned.iter().map(|s| s.points().to_vec()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn type2_never_expands_more_nodes() {
        let mut rng = SplitMix64::new(5150);
        for _ in 0..40 {
            let n = 2 + rng.below(2);
            let Some(base) = random_problem(&mut rng, 2, n, 0.7) else {
                continue;
            };
            let (_, s1) = tlg_solve(&base.clone().with_kind(TestSetKind::TypeI)).unwrap();
            let (_, s2) = tlg_solve(&base.clone().with_kind(TestSetKind::TypeII)).unwrap();
            assert!(
                s2.nodes_expanded <= s1.nodes_expanded,
                "typeII {} > typeI {}",
                s2.nodes_expanded,
                s1.nodes_expanded
            );
        }
    }

    #[test]
    fn problem_json_round_trip() {
        let p = curved_scenario();
        let v = p.to_json();
        let back = TlgProblem::from_json(&v).unwrap();
        assert_eq!(back.feasible, p.feasible);
        assert_eq!(back.q, p.q);
        assert_eq!(back.kind, p.kind);
    }

    #[test]
    fn solutions_lie_on_shifted_cube() {
        let mut k = FeasibleSet::full_cube(2, 2, mi(&[10, -5]));
        k.mask.remove(&mi(&[2, 2]));
        let problem = TlgProblem::new(k, mi(&[11, -4]));
        let (sols, _) = tlg_solve(&problem).unwrap();
        assert_eq!(sols.len(), 1);
        for p in sols[0].points_global() {
            assert!(p.get(0) >= 10 && p.get(1) >= -5);
        }
        assert!(sols[0].points_global().contains(&mi(&[11, -4])));
    }
}
