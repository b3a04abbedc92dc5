//! One discrete equation per FD node.
//!
//! Regular nodes (whose tensor-stencil box stays inside the FD set) use
//! order-matched central differences; every other node gets a least-squares
//! stencil: a poised lattice is generated from a sequence of shifted feasible
//! cubes (centered rings for diffusion-like operators, an upwinded cell chain
//! for advection), a polynomial of total degree `n` is fitted over the
//! lattice plus a few extra nodes, the boundary condition is appended as an
//! extra row at the boundary point, and the operator is applied to the fit.


use crate::error::{Error, Result};
use crate::geom::{BoundaryHit, BoundaryPiece, Grid, NodeClassification};
use crate::index::{iter_box, MultiIndex};
use crate::interp::{least_squares_fit, monomial_basis, MonomialBasis, WeightMap};
use crate::lattice::TriangularLattice;
use crate::search::{tlg_solve, FeasibleSet, OrderingRule, TlgProblem};
use crate::testset::TestSetKind;
use std::sync::Arc;

/// Spatially varying coefficient of one operator term.
#[derive(Clone)]
pub enum Coeff {
    Const(f64),
    Fn(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Coeff {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Coeff::Const(c) => *c,
            Coeff::Fn(f) => f(x),
        }
    }
}

/// A linear spatial operator: a sum of coefficient-weighted partial
/// derivatives (each axis order at most 2 for the tensor path).
#[derive(Clone)]
pub struct OperatorSpec {
    pub d: usize,
    pub terms: Vec<(MultiIndex, Coeff)>,
    pub kind: OperatorKind,
}

/// Drives the choice of feasible cubes for lattice generation.
#[derive(Clone)]
pub enum OperatorKind {
    /// Diffusion-like: cubes centered on the node, growing rings.
    Centered,
    /// Advection-dominated: cubes along the upwind cell chain when the local
    /// speed is above `threshold`.
    Advection {
        velocity: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        threshold: f64,
    },
}

impl OperatorSpec {
    pub fn laplacian(d: usize) -> Self {
        let terms = (0..d)
            .map(|i| {
                let mut alpha = MultiIndex::zero(d);
                alpha.set(i, 2);
                (alpha, Coeff::Const(1.0))
            })
            .collect();
        Self {
            d,
            terms,
            kind: OperatorKind::Centered,
        }
    }

    /// `a u_xx + b u_xy + c u_yy` in the plane.
    pub fn second_order_2d(a: f64, b: f64, c: f64) -> Self {
        Self {
            d: 2,
            terms: vec![
                (MultiIndex::new(&[2, 0]), Coeff::Const(a)),
                (MultiIndex::new(&[1, 1]), Coeff::Const(b)),
                (MultiIndex::new(&[0, 2]), Coeff::Const(c)),
            ],
            kind: OperatorKind::Centered,
        }
    }

    /// `v(x) · grad u` with the upwinded cube strategy.
    pub fn advection(d: usize, velocity: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>, threshold: f64) -> Self {
        let terms = (0..d)
            .map(|i| {
                let mut alpha = MultiIndex::zero(d);
                alpha.set(i, 1);
                let v = velocity.clone();
                (
                    alpha,
                    Coeff::Fn(Arc::new(move |x: &[f64]| v(x)[i])),
                )
            })
            .collect();
        Self {
            d,
            terms,
            kind: OperatorKind::Advection {
                velocity,
                threshold,
            },
        }
    }

    pub fn max_axis_order(&self) -> usize {
        self.terms
            .iter()
            .map(|(a, _)| (0..self.d).map(|i| a.get(i)).max().unwrap_or(0))
            .max()
            .unwrap_or(0) as usize
    }
}

/// Boundary condition `alpha u + beta du/dn = g` on one boundary piece.
#[derive(Clone)]
pub struct BcSpec {
    pub alpha: f64,
    pub beta: f64,
    /// Data `g(x, t)`; elliptic problems evaluate at `t = 0`.
    pub data: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
}

impl BcSpec {
    pub fn dirichlet(g: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>) -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            data: g,
        }
    }

    pub fn neumann(g: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>) -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            data: g,
        }
    }

    /// `a u + nu du/dn = g`; reduces to Neumann at `a = 0`.
    pub fn robin(a: f64, nu: f64, g: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>) -> Self {
        Self {
            alpha: a,
            beta: nu,
            data: g,
        }
    }
}

/// Boundary conditions routed by boundary piece.
#[derive(Clone)]
pub struct BcSet {
    pub shape: Option<BcSpec>,
    pub clip: Option<BcSpec>,
}

impl BcSet {
    pub fn uniform(bc: BcSpec) -> Self {
        Self {
            shape: Some(bc.clone()),
            clip: Some(bc),
        }
    }

    pub fn for_piece(&self, piece: BoundaryPiece) -> Option<&BcSpec> {
        match piece {
            BoundaryPiece::Shape => self.shape.as_ref(),
            BoundaryPiece::ClipBox => self.clip.as_ref(),
        }
    }
}

/// One discretized equation: weights over FD-node unknowns plus the weight
/// multiplying the boundary datum at this node's boundary point, plus any
/// fixed contribution from aligned-face ghost closures.
#[derive(Clone, Debug)]
pub struct StencilRow {
    pub center: usize,
    pub entries: Vec<(usize, f64)>,
    pub bc_weight: f64,
    /// Contribution of static Dirichlet data folded in through ghost cells.
    pub rhs_fixed: f64,
    pub meta: RowMeta,
}

/// Classical closure for domain faces that coincide with grid lines: stencil
/// cells beyond such a face are filled by one-dimensional extrapolation
/// through the face value and the cells inward of it, so nodes near aligned
/// Dirichlet boundaries keep their tensor stencils and no lattice generation
/// is invoked there.
#[derive(Clone)]
pub struct AlignedClosure {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Static Dirichlet data on the aligned faces.
    pub data: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

/// Number of interior cells feeding one ghost extrapolation.
const GHOST_SUPPORT: usize = 5;

impl AlignedClosure {
    /// Face cell-boundary index along `axis`: cells with index < lo_face or
    /// >= hi_face are outside.  `None` when the box is not grid-aligned.
    fn face_indices(&self, axis: usize, h: f64) -> Option<(i64, i64)> {
        let lo = self.lo[axis] / h;
        let hi = self.hi[axis] / h;
        let (lo_r, hi_r) = (lo.round(), hi.round());
        if (lo - lo_r).abs() > 1e-9 * (1.0 + lo.abs())
            || (hi - hi_r).abs() > 1e-9 * (1.0 + hi.abs())
        {
            return None;
        }
        Some((lo_r as i64, hi_r as i64))
    }
}

/// Lagrange extrapolation weights: polynomial through `(nodes[k], y_k)`
/// evaluated at `x`.
fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|k| {
            let mut w = 1.0;
            for j in 0..m {
                if j != k {
                    w *= (x - nodes[j]) / (nodes[k] - nodes[j]);
                }
            }
            w
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct RowMeta {
    pub regular: bool,
    /// Fitting degree actually used (after any reduction).
    pub n_used: usize,
    pub extras: usize,
    pub lattice: Option<Vec<MultiIndex>>,
}

// ---------------------------------------------------------------------------
// tensor-product stencils for regular nodes

/// Centered 1-D finite-difference weights of accuracy `order` for the `k`-th
/// derivative, unscaled by `h`.
pub fn stencil_1d(order: usize, k: usize) -> (Vec<i64>, Vec<f64>) {
    match (order, k) {
        (_, 0) => (vec![0], vec![1.0]),
        (4, 1) => (
            vec![-2, -1, 1, 2],
            vec![1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0],
        ),
        (4, 2) => (
            vec![-2, -1, 0, 1, 2],
            vec![
                -1.0 / 12.0,
                16.0 / 12.0,
                -30.0 / 12.0,
                16.0 / 12.0,
                -1.0 / 12.0,
            ],
        ),
        (6, 1) => (
            vec![-3, -2, -1, 1, 2, 3],
            vec![
                -1.0 / 60.0,
                9.0 / 60.0,
                -45.0 / 60.0,
                45.0 / 60.0,
                -9.0 / 60.0,
                1.0 / 60.0,
            ],
        ),
        (6, 2) => (
            vec![-3, -2, -1, 0, 1, 2, 3],
            vec![
                2.0 / 180.0,
                -27.0 / 180.0,
                270.0 / 180.0,
                -490.0 / 180.0,
                270.0 / 180.0,
                -27.0 / 180.0,
                2.0 / 180.0,
            ],
        ),
        _ => panic!("unsupported stencil order {order} / derivative {k}"),
    }
}

/// Stencil radius of the order-`order` tensor box.
pub fn regular_radius(order: usize) -> i64 {
    (order / 2) as i64
}

/// All cells of the inf-norm box of `radius` around `cell` are FD nodes.
pub fn is_regular(class: &NodeClassification, cell: &MultiIndex, radius: i64) -> bool {
    let lo = MultiIndex::new(
        &(0..class.grid.d)
            .map(|i| cell.get(i) - radius)
            .collect::<Vec<_>>(),
    );
    let hi = MultiIndex::new(
        &(0..class.grid.d)
            .map(|i| cell.get(i) + radius)
            .collect::<Vec<_>>(),
    );
    iter_box(&lo, &hi).iter().all(|c| class.is_fd(c))
}

/// Tensor-product central-difference row at a regular node.
pub fn regular_row(
    class: &NodeClassification,
    fd_id: usize,
    op: &OperatorSpec,
    order: usize,
) -> Result<StencilRow> {
    regular_row_closed(class, fd_id, op, order, None)?.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "regular stencil leaves the FD set at node {:?}",
            class.fd_cells[fd_id]
        ))
    })
}

/// Tensor row with aligned-face ghost closure; `None` when some stencil cell
/// is neither an FD node nor closable through an aligned Dirichlet face
/// (cross-derivative terms never use ghosts).
pub fn regular_row_closed(
    class: &NodeClassification,
    fd_id: usize,
    op: &OperatorSpec,
    order: usize,
    closure: Option<&AlignedClosure>,
) -> Result<Option<StencilRow>> {
    let grid = &class.grid;
    let d = grid.d;
    let cell = class.fd_cells[fd_id];
    let x = grid.center(&cell);
    let faces: Vec<Option<(i64, i64)>> = (0..d)
        .map(|i| closure.and_then(|c| c.face_indices(i, grid.h)))
        .collect();
    let mut acc: std::collections::HashMap<MultiIndex, f64> = std::collections::HashMap::new();
    let mut rhs_fixed = 0.0;
    for (alpha, coeff) in &op.terms {
        let c = coeff.eval(&x);
        if c == 0.0 {
            continue;
        }
        let total: i64 = alpha.sum();
        let scale = c / grid.h.powi(total as i32);
        let active: Vec<usize> = (0..d).filter(|i| alpha.get(*i) > 0).collect();
        if active.len() <= 1 {
            // one-dimensional stencil along a single axis; ghosts allowed
            let axis = active.first().copied().unwrap_or(0);
            let (offs, ws) = stencil_1d(order, alpha.get(axis) as usize);
            for (o, w) in offs.iter().zip(&ws) {
                let c2 = cell.offset(axis, *o);
                if class.is_fd(&c2) {
                    *acc.entry(c2).or_insert(0.0) += scale * w;
                    continue;
                }
                let Some((lof, hif)) = faces[axis] else {
                    return Ok(None);
                };
                let idx = c2.get(axis);
                let (depth, start, dir) = if idx < lof {
                    (lof - 1 - idx, lof, 1i64)
                } else if idx >= hif {
                    (idx - hif, hif - 1, -1i64)
                } else {
                    return Ok(None); // hole inside the box: a shape boundary
                };
                let mut support = Vec::with_capacity(GHOST_SUPPORT);
                for k in 0..GHOST_SUPPORT as i64 {
                    let mut cc = c2;
                    cc.set(axis, start + dir * k);
                    if !class.is_fd(&cc) {
                        return Ok(None);
                    }
                    support.push(cc);
                }
                let nodes = [0.0, 0.5, 1.5, 2.5, 3.5, 4.5];
                let gw = lagrange_weights(&nodes, -(depth as f64 + 0.5));
                let mut face_pt = x.clone();
                face_pt[axis] = (if dir == 1 { lof } else { hif }) as f64 * grid.h;
                let g = (closure.expect("faces imply closure").data)(&face_pt);
                rhs_fixed += scale * w * gw[0] * g;
                for (k, cc) in support.iter().enumerate() {
                    *acc.entry(*cc).or_insert(0.0) += scale * w * gw[k + 1];
                }
            }
        } else {
            // cross term: full tensor product, every cell must be FD
            let axis_stencils: Vec<(Vec<i64>, Vec<f64>)> = (0..d)
                .map(|i| stencil_1d(order, alpha.get(i) as usize))
                .collect();
            let mut offsets = vec![MultiIndex::zero(d)];
            let mut weights = vec![scale];
            for (i, (offs, ws)) in axis_stencils.iter().enumerate() {
                let mut new_off = Vec::with_capacity(offsets.len() * offs.len());
                let mut new_w = Vec::with_capacity(offsets.len() * offs.len());
                for (o, w) in offsets.iter().zip(&weights) {
                    for (oo, ww) in offs.iter().zip(ws) {
                        let mut q = *o;
                        q.set(i, *oo);
                        new_off.push(q);
                        new_w.push(w * ww);
                    }
                }
                offsets = new_off;
                weights = new_w;
            }
            for (o, w) in offsets.iter().zip(&weights) {
                let c2 = cell.add(o);
                if !class.is_fd(&c2) {
                    return Ok(None);
                }
                *acc.entry(c2).or_insert(0.0) += w;
            }
        }
    }
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
    for (c, w) in acc {
        let id = class.fd_id(&c).expect("accumulated cells are FD nodes");
        entries.push((id, w));
    }
    entries.sort_by_key(|e| e.0);
    Ok(Some(StencilRow {
        center: fd_id,
        entries,
        bc_weight: 0.0,
        rhs_fixed,
        meta: RowMeta {
            regular: true,
            n_used: order,
            extras: 0,
            lattice: None,
        },
    }))
}

// ---------------------------------------------------------------------------
// feasible-cube strategy for irregular nodes

/// A shifted cube `{lo..lo+n}^D` of candidate cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PivotCube {
    pub lo: MultiIndex,
}

/// The sequence of pivot sets for one irregular node: cubes are tried one
/// ring at a time, every pivot of a ring competing on lattice quality.
#[derive(Clone, Debug)]
pub struct CfsPlan {
    pub rings: Vec<Vec<PivotCube>>,
}

fn ring_cubes_centered(q: &MultiIndex, n: usize, j: usize) -> Vec<PivotCube> {
    let d = q.dim();
    let mut cubes = Vec::new();
    if n % 2 == 0 {
        // pivots are cell centers at Chebyshev distance j-1
        let r = (j - 1) as i64;
        let lo = MultiIndex::new(&(0..d).map(|i| q.get(i) - r).collect::<Vec<_>>());
        let hi = MultiIndex::new(&(0..d).map(|i| q.get(i) + r).collect::<Vec<_>>());
        for c in iter_box(&lo, &hi) {
            if c.sub(q).norm_inf() == r {
                cubes.push(PivotCube {
                    lo: MultiIndex::new(
                        &(0..d)
                            .map(|i| c.get(i) - (n / 2) as i64)
                            .collect::<Vec<_>>(),
                    ),
                });
            }
        }
    } else {
        // pivots are cell corners k with |2(k-q)-1| <= 2j-1, attained
        let jj = j as i64;
        let lo = MultiIndex::new(&(0..d).map(|i| q.get(i) + 1 - jj).collect::<Vec<_>>());
        let hi = MultiIndex::new(&(0..d).map(|i| q.get(i) + jj).collect::<Vec<_>>());
        for k in iter_box(&lo, &hi) {
            let attained = (0..d).any(|i| {
                let delta = k.get(i) - q.get(i);
                delta == jj || delta == 1 - jj
            });
            if attained {
                cubes.push(PivotCube {
                    lo: MultiIndex::new(
                        &(0..d)
                            .map(|i| k.get(i) - ((n + 1) / 2) as i64)
                            .collect::<Vec<_>>(),
                    ),
                });
            }
        }
    }
    cubes
}

fn corners_of_cell(cell: &MultiIndex, n: usize) -> Vec<PivotCube> {
    let d = cell.dim();
    if n % 2 == 0 {
        return vec![PivotCube {
            lo: MultiIndex::new(
                &(0..d)
                    .map(|i| cell.get(i) - (n / 2) as i64)
                    .collect::<Vec<_>>(),
            ),
        }];
    }
    // the 2^D corners of the cell, each centering an even-sided cube
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1u32 << d) {
        let k = MultiIndex::new(
            &(0..d)
                .map(|i| cell.get(i) + ((mask >> i) & 1) as i64)
                .collect::<Vec<_>>(),
        );
        out.push(PivotCube {
            lo: MultiIndex::new(
                &(0..d)
                    .map(|i| k.get(i) - ((n + 1) / 2) as i64)
                    .collect::<Vec<_>>(),
            ),
        });
    }
    out
}

/// Cells traversed by the segment from `p1` to `p2` (physical coordinates),
/// in order.
fn segment_cells(grid: &Grid, p1: &[f64], p2: &[f64]) -> Vec<MultiIndex> {
    let d = grid.d;
    let h = grid.h;
    let cell_of = |x: &[f64]| -> MultiIndex {
        MultiIndex::new(
            &(0..d)
                .map(|i| (x[i] / h - 0.5).round() as i64)
                .collect::<Vec<_>>(),
        )
    };
    // conservative parametric walk with a fine step; duplicates pruned
    let len: f64 = p1
        .iter()
        .zip(p2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let steps = ((len / h) * 8.0).ceil() as usize + 1;
    let mut out: Vec<MultiIndex> = Vec::new();
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| a + t * (b - a)).collect();
        let c = cell_of(&x);
        if out.last() != Some(&c) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Pivot-set sequence for the node `q` (cell index).
pub fn cfs_plan(
    class: &NodeClassification,
    fd_id: usize,
    n: usize,
    kind: &OperatorKind,
) -> CfsPlan {
    cfs_plan_with_rings(class, fd_id, n, kind, (n / 2).max(1))
}

fn cfs_plan_with_rings(
    class: &NodeClassification,
    fd_id: usize,
    n: usize,
    kind: &OperatorKind,
    ring_count: usize,
) -> CfsPlan {
    let q = class.fd_cells[fd_id];
    let alpha_n = ring_count;
    match kind {
        OperatorKind::Centered => CfsPlan {
            rings: (1..=alpha_n)
                .map(|j| ring_cubes_centered(&q, n, j))
                .collect(),
        },
        OperatorKind::Advection {
            velocity,
            threshold,
        } => {
            let xq = class.grid.center(&q);
            let v = velocity(&xq);
            let speed = v.iter().map(|u| u * u).sum::<f64>().sqrt();
            if speed <= *threshold {
                return cfs_plan_with_rings(class, fd_id, n, &OperatorKind::Centered, ring_count);
            }
            let h = class.grid.h;
            let a = alpha_n as f64 * h;
            let p1: Vec<f64> = xq.iter().zip(&v).map(|(x, u)| x - a * u / speed).collect();
            // march away from the boundary at boundary nodes, along -v with a
            // shorter reach otherwise
            let p2: Vec<f64> = match class.hits[fd_id].as_ref() {
                Some(hit) => xq
                    .iter()
                    .zip(&hit.normal)
                    .map(|(x, nb)| x - a * nb)
                    .collect(),
                None => xq
                    .iter()
                    .zip(&v)
                    .map(|(x, u)| x - 0.5 * a * u / speed)
                    .collect(),
            };
            let chain: Vec<MultiIndex> = segment_cells(&class.grid, &p1, &p2)
                .into_iter()
                .filter(|c| class.is_fd(c))
                .collect();
            if chain.is_empty() {
                return cfs_plan_with_rings(class, fd_id, n, &OperatorKind::Centered, ring_count);
            }
            let mut rings: Vec<Vec<PivotCube>> = chain
                .iter()
                .map(|c| corners_of_cell(c, n))
                .collect();
            // widened fallbacks recenter on the node like the diffusive plan
            let base = (n / 2).max(1);
            for j in 1..=ring_count.saturating_sub(base) {
                rings.push(ring_cubes_centered(&q, n, j));
            }
            CfsPlan { rings }
        }
    }
}

/// Feasible set of one shifted cube: the FD nodes it contains.
pub fn cube_feasible_set(class: &NodeClassification, cube: &PivotCube, n: usize) -> FeasibleSet {
    let d = class.grid.d;
    let mut k = FeasibleSet::empty(d, n, cube.lo);
    let hi = MultiIndex::new(
        &(0..d)
            .map(|i| cube.lo.get(i) + n as i64)
            .collect::<Vec<_>>(),
    );
    for c in iter_box(&cube.lo, &hi) {
        if class.is_fd(&c) {
            k.insert_global(&c);
        }
    }
    k
}

/// Search configuration threaded through row construction.
#[derive(Clone, Copy, Debug)]
pub struct TlgConfig {
    pub kind: TestSetKind,
    pub ordering: OrderingRule,
}

impl Default for TlgConfig {
    fn default() -> Self {
        Self {
            kind: TestSetKind::TypeII,
            ordering: OrderingRule::CompactnessFirst,
        }
    }
}

/// Extra nodes appended to the generated lattice before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtrasRule {
    /// The `k` nearest FD nodes by Manhattan distance (then lexicographic).
    Count(usize),
    /// Every FD node within the closed 1-norm ball of this radius.
    L1Ball(i64),
}

/// Counters accumulated during assembly.
#[derive(Clone, Copy, Debug, Default)]
pub struct AssemblyStats {
    pub tlg_calls: u64,
    pub tlg_nodes_expanded: u64,
    pub irregular_rows: usize,
    pub regular_rows: usize,
    pub degree_reductions: u64,
}

/// Generate the poised lattice for an irregular node per the cube strategy.
///
/// Escalation when every pivot of every ring fails: first reduce the degree
/// (never below `min_degree`, so the operator stays representable), then
/// retry the whole ladder with widened rings.
pub fn generate_lattice(
    class: &NodeClassification,
    fd_id: usize,
    n: usize,
    min_degree: usize,
    kind: &OperatorKind,
    tlg: &TlgConfig,
    stats: &mut AssemblyStats,
) -> Result<TriangularLattice> {
    let q = class.fd_cells[fd_id];
    let floor = min_degree.clamp(1, n);
    for deg in (floor..=n).rev() {
        for expand in [0usize, 2, 4, 8] {
            let rings = (deg / 2).max(1) + expand;
            let plan = cfs_plan_with_rings(class, fd_id, deg, kind, rings);
            for ring in &plan.rings {
                let mut best: Option<(i64, TriangularLattice)> = None;
                for cube in ring {
                    // q must lie inside the shifted cube
                    let inside = (0..q.dim()).all(|i| {
                        q.get(i) >= cube.lo.get(i) && q.get(i) <= cube.lo.get(i) + deg as i64
                    });
                    if !inside {
                        continue;
                    }
                    let feasible = cube_feasible_set(class, cube, deg);
                    if !feasible.contains_global(&q) {
                        continue;
                    }
                    let problem = TlgProblem {
                        feasible,
                        q,
                        kind: tlg.kind,
                        ordering: tlg.ordering,
                        stop_at_first: true,
                        allow_degree_above_cap: true,
                    };
                    stats.tlg_calls += 1;
                    let (sols, st) = tlg_solve(&problem)?;
                    stats.tlg_nodes_expanded += st.nodes_expanded;
                    if let Some(lat) = sols.into_iter().next() {
                        let cost: i64 = lat
                            .points_global()
                            .iter()
                            .map(|p| p.sub(&q).norm2_sq())
                            .sum();
                        let better = match &best {
                            None => true,
                            Some((c, cur)) => {
                                cost < *c
                                    || (cost == *c && lat.points_global() < cur.points_global())
                            }
                        };
                        if better {
                            best = Some((cost, lat));
                        }
                    }
                }
                if let Some((_, lat)) = best {
                    if deg < n {
                        stats.degree_reductions += 1;
                    }
                    return Ok(lat);
                }
            }
        }
    }
    Err(Error::NoLatticeFound(format!(
        "node {q:?}: every pivot cube exhausted down to degree {floor}"
    )))
}

/// Everything needed to evaluate linear functionals of the local fit.
pub struct LatticeFit {
    /// Site cells (lattice then extras), global indices.
    pub cells: Vec<MultiIndex>,
    pub basis: MonomialBasis,
    pub weights: WeightMap,
    /// Scaled local coordinates of the sites.
    pub sites_local: Vec<Vec<f64>>,
    pub n_used: usize,
    pub extras: usize,
    pub has_bc_row: bool,
    pub lattice_points: Vec<MultiIndex>,
}

/// Fit a degree-`n` polynomial at the irregular node in lattice-local
/// coordinates `(cell - q)`, optionally appending the boundary-condition row.
pub fn lattice_fit(
    class: &NodeClassification,
    fd_id: usize,
    n: usize,
    min_degree: usize,
    kind: &OperatorKind,
    bc: Option<(f64, f64, &BoundaryHit)>,
    extras: ExtrasRule,
    tlg: &TlgConfig,
    stats: &mut AssemblyStats,
) -> Result<LatticeFit> {
    let lat = generate_lattice(class, fd_id, n, min_degree, kind, tlg, stats)?;
    let n_used = lat.n;
    let q = class.fd_cells[fd_id];
    let mut cells = lat.points_global();
    cells.sort_unstable();
    let lattice_points = cells.clone();

    // extra nodes by Manhattan distance, nearest first
    let (reach, want) = match extras {
        ExtrasRule::Count(k) => ((n_used + 2) as i64, k),
        ExtrasRule::L1Ball(r) => (r, usize::MAX),
    };
    if want > 0 {
        let lo = MultiIndex::new(
            &(0..q.dim()).map(|i| q.get(i) - reach).collect::<Vec<_>>(),
        );
        let hi = MultiIndex::new(
            &(0..q.dim()).map(|i| q.get(i) + reach).collect::<Vec<_>>(),
        );
        let mut candidates: Vec<MultiIndex> = iter_box(&lo, &hi)
            .into_iter()
            .filter(|c| c.sub(&q).norm1() <= reach && class.is_fd(c) && !cells.contains(c))
            .collect();
        candidates.sort_by_key(|c| (c.sub(&q).norm1(), *c));
        candidates.truncate(want);
        cells.extend(candidates);
    }
    let extras_used = cells.len() - lattice_points.len();

    let basis = monomial_basis(q.dim(), n_used);
    let sites_local: Vec<Vec<f64>> = cells
        .iter()
        .map(|c| {
            (0..q.dim())
                .map(|i| (c.get(i) - q.get(i)) as f64)
                .collect()
        })
        .collect();
    let mut extra_rows: Vec<Vec<f64>> = Vec::new();
    if let Some((alpha, beta, hit)) = bc {
        let h = class.grid.h;
        let xq = class.grid.center(&q);
        let xi_b: Vec<f64> = hit
            .point
            .iter()
            .zip(&xq)
            .map(|(b, x)| (b - x) / h)
            .collect();
        let mut row = basis.eval_row(&xi_b);
        row.iter_mut().for_each(|v| *v *= alpha);
        if beta != 0.0 {
            for i in 0..q.dim() {
                let mut e = MultiIndex::zero(q.dim());
                e.set(i, 1);
                let dr = basis.derivative_row(&e, &xi_b, h);
                for (r, dv) in row.iter_mut().zip(&dr) {
                    *r += beta * hit.normal[i] * dv;
                }
            }
        }
        extra_rows.push(row);
    }
    let weights = least_squares_fit(&sites_local, &basis, &extra_rows)?;
    Ok(LatticeFit {
        cells,
        basis,
        weights,
        sites_local,
        n_used,
        extras: extras_used,
        has_bc_row: bc.is_some(),
        lattice_points,
    })
}

impl LatticeFit {
    /// Stencil weights of a linear functional given by its coefficient-space
    /// row; returns (per-cell weights, boundary-row weight).
    pub fn functional(&self, frow: &[f64]) -> (Vec<f64>, f64) {
        let w = self.weights.functional_weights(frow);
        let bc = if self.has_bc_row {
            w[w.len() - 1]
        } else {
            0.0
        };
        (w[..self.cells.len()].to_vec(), bc)
    }
}

/// Least-squares stencil row for the operator at an irregular node.
pub fn irregular_row(
    class: &NodeClassification,
    fd_id: usize,
    op: &OperatorSpec,
    bc: Option<(f64, f64, &BoundaryHit)>,
    n: usize,
    extras: ExtrasRule,
    tlg: &TlgConfig,
    stats: &mut AssemblyStats,
) -> Result<StencilRow> {
    let min_degree = op
        .terms
        .iter()
        .map(|(a, _)| a.sum() as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    let fit = lattice_fit(class, fd_id, n, min_degree, &op.kind, bc, extras, tlg, stats)?;
    let q = class.fd_cells[fd_id];
    let xq = class.grid.center(&q);
    let h = class.grid.h;
    let origin = vec![0.0; op.d];
    let mut frow = vec![0.0; fit.basis.len()];
    for (alpha, coeff) in &op.terms {
        let c = coeff.eval(&xq);
        if c == 0.0 {
            continue;
        }
        if alpha.sum() as usize > fit.n_used {
            return Err(Error::InvalidArgument(format!(
                "operator order {} exceeds fit degree {}",
                alpha.sum(),
                fit.n_used
            )));
        }
        let dr = fit.basis.derivative_row(alpha, &origin, h);
        for (f, dv) in frow.iter_mut().zip(&dr) {
            *f += c * dv;
        }
    }
    let (ws, bc_weight) = fit.functional(&frow);
    let mut entries: Vec<(usize, f64)> = fit
        .cells
        .iter()
        .zip(&ws)
        .map(|(c, w)| (class.fd_id(c).expect("sites are FD nodes"), *w))
        .collect();
    entries.sort_by_key(|e| e.0);
    Ok(StencilRow {
        center: fd_id,
        entries,
        bc_weight,
        rhs_fixed: 0.0,
        meta: RowMeta {
            regular: false,
            n_used: fit.n_used,
            extras: fit.extras,
            lattice: Some(fit.lattice_points),
        },
    })
}

/// Assembly configuration.
#[derive(Clone, Debug)]
pub struct DiscConfig {
    /// Fitting degree at irregular nodes.
    pub n: usize,
    /// Accuracy order of the tensor stencils at regular nodes.
    pub regular_order: usize,
    pub extras: ExtrasRule,
    pub tlg: TlgConfig,
}

impl DiscConfig {
    pub fn fourth_order_2d() -> Self {
        Self {
            n: 4,
            regular_order: 4,
            extras: ExtrasRule::Count(0),
            tlg: TlgConfig::default(),
        }
    }
}

pub struct Discretization {
    pub rows: Vec<StencilRow>,
    pub stats: AssemblyStats,
}

/// Build one row per FD node: tensor stencils wherever the full box fits or
/// an aligned-face ghost closure completes it, least-squares lattice stencils
/// elsewhere (boundary nodes append their boundary-condition row).
pub fn assemble_operator(
    class: &NodeClassification,
    op: &OperatorSpec,
    bcs: Option<&BcSet>,
    cfg: &DiscConfig,
) -> Result<Discretization> {
    assemble_operator_closed(class, op, bcs, cfg, None)
}

pub fn assemble_operator_closed(
    class: &NodeClassification,
    op: &OperatorSpec,
    bcs: Option<&BcSet>,
    cfg: &DiscConfig,
    closure: Option<&AlignedClosure>,
) -> Result<Discretization> {
    let radius = regular_radius(cfg.regular_order);
    let mut rows = Vec::with_capacity(class.n_fd());
    let mut stats = AssemblyStats::default();
    for fd_id in 0..class.n_fd() {
        let cell = class.fd_cells[fd_id];
        let row = if is_regular(class, &cell, radius) {
            stats.regular_rows += 1;
            regular_row(class, fd_id, op, cfg.regular_order)?
        } else if let Some(row) = match closure {
            Some(_) => regular_row_closed(class, fd_id, op, cfg.regular_order, closure)?,
            None => None,
        } {
            stats.regular_rows += 1;
            row
        } else {
            stats.irregular_rows += 1;
            let bc = match (&class.hits[fd_id], bcs) {
                (Some(hit), Some(set)) => set
                    .for_piece(hit.piece)
                    .map(|spec| (spec.alpha, spec.beta, hit)),
                _ => None,
            };
            irregular_row(class, fd_id, op, bc, cfg.n, cfg.extras, &cfg.tlg, &mut stats)
                .map_err(|e| {
                    Error::SolverFailure(format!("row for node {cell:?}: {e}"))
                })?
        };
        rows.push(row);
    }
    Ok(Discretization { rows, stats })
}

impl Discretization {
    /// Sparse operator matrix, the per-row boundary-datum weight, and the
    /// fixed ghost-closure contribution.
    pub fn to_matrix(&self, n_fd: usize) -> (crate::sparse::Csr, Vec<f64>, Vec<f64>) {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_fd];
        let mut bcw = vec![0.0; n_fd];
        let mut fixed = vec![0.0; n_fd];
        for row in &self.rows {
            rows[row.center] = row.entries.clone();
            bcw[row.center] = row.bc_weight;
            fixed[row.center] = row.rhs_fixed;
        }
        (crate::sparse::Csr::from_rows(n_fd, rows), bcw, fixed)
    }

    /// Evaluate every row against nodal samples:
    /// `out_i = sum w u + bcw g_i + rhs_fixed_i`.
    pub fn apply(&self, u: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for row in &self.rows {
            let mut s = 0.0;
            for (j, w) in &row.entries {
                s += w * u[*j];
            }
            out[row.center] = s + row.bc_weight * g[row.center] + row.rhs_fixed;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{classify_nodes, Domain, Grid, Shape};

    fn everything_class(d: usize, h: f64, extent: i64) -> NodeClassification {
        let grid = Grid::new(
            d,
            h,
            MultiIndex::splat(d, -extent),
            MultiIndex::splat(d, extent),
        )
        .unwrap();
        classify_nodes(&Domain::everything(), &grid, 0.25).unwrap()
    }

    #[test]
    fn regular_laplacian_is_exact_on_quadratics() {
        let class = everything_class(2, 0.125, 8);
        let op = OperatorSpec::laplacian(2);
        let center = class
            .fd_id(&MultiIndex::new(&[0, 0]))
            .expect("origin cell is FD");
        let row = regular_row(&class, center, &op, 4).unwrap();
        // u = x^2 + y^2 has Laplacian 4 exactly
        let u: Vec<f64> = class
            .fd_cells
            .iter()
            .map(|c| {
                let x = class.grid.center(c);
                x[0] * x[0] + x[1] * x[1]
            })
            .collect();
        let val: f64 = row.entries.iter().map(|(j, w)| w * u[*j]).sum();
        assert!((val - 4.0).abs() < 1e-9, "got {val}");
    }

    #[test]
    fn regular_cross_derivative_exact_on_xy() {
        let class = everything_class(2, 0.25, 8);
        let op = OperatorSpec::second_order_2d(0.0, 1.0, 0.0);
        let center = class.fd_id(&MultiIndex::new(&[1, -2])).unwrap();
        let row = regular_row(&class, center, &op, 4).unwrap();
        let u: Vec<f64> = class
            .fd_cells
            .iter()
            .map(|c| {
                let x = class.grid.center(c);
                x[0] * x[1]
            })
            .collect();
        let val: f64 = row.entries.iter().map(|(j, w)| w * u[*j]).sum();
        assert!((val - 1.0).abs() < 1e-9);
        // the 4th-order cross stencil touches a sparse 4x4-of-16 pattern
        // inside the 5x5 box
        assert!(row.entries.len() <= 25);
    }

    #[test]
    fn regular_truncation_is_fourth_order() {
        // Richardson on the Laplacian of sin(2 pi x) cos(2 pi y): the max
        // truncation over a fixed physical patch drops by ~2^4 per halving
        let f = |x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).sin()
            * (2.0 * std::f64::consts::PI * x[1]).cos();
        let lap = |x: &[f64]| {
            -8.0 * std::f64::consts::PI
                * std::f64::consts::PI
                * (2.0 * std::f64::consts::PI * x[0]).sin()
                * (2.0 * std::f64::consts::PI * x[1]).cos()
        };
        let mut errs = Vec::new();
        for &(h, extent) in &[(1.0 / 64.0, 8i64), (1.0 / 128.0, 16)] {
            let class = everything_class(2, h, extent + 2);
            let op = OperatorSpec::laplacian(2);
            let u: Vec<f64> = class
                .fd_cells
                .iter()
                .map(|c| f(&class.grid.center(c)))
                .collect();
            let mut worst = 0.0f64;
            for (id, cell) in class.fd_cells.iter().enumerate() {
                if cell.norm_inf() > extent {
                    continue;
                }
                let row = regular_row(&class, id, &op, 4).unwrap();
                let val: f64 = row.entries.iter().map(|(j, w)| w * u[*j]).sum();
                let x = class.grid.center(cell);
                worst = worst.max((val - lap(&x)).abs());
            }
            errs.push(worst);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (ratio / 16.0 - 1.0).abs() < 0.1,
            "truncation ratio {ratio} not ~ 2^4 within 10%"
        );
    }

    #[test]
    fn centered_plan_first_ring_is_single_cube_for_even_degree() {
        let class = everything_class(2, 0.5, 6);
        let id = class.fd_id(&MultiIndex::new(&[0, 0])).unwrap();
        let plan = cfs_plan(&class, id, 4, &OperatorKind::Centered);
        assert_eq!(plan.rings[0].len(), 1);
        assert_eq!(plan.rings[0][0].lo, MultiIndex::new(&[-2, -2]));
        // odd degree: first ring holds the four corner-centered cubes
        let plan3 = cfs_plan(&class, id, 3, &OperatorKind::Centered);
        assert_eq!(plan3.rings[0].len(), 4);
    }

    #[test]
    fn advection_plan_points_upwind() {
        let class = everything_class(2, 0.5, 8);
        let id = class.fd_id(&MultiIndex::new(&[0, 0])).unwrap();
        let vel = Arc::new(|_: &[f64]| vec![1.0, 0.0]);
        let kind = OperatorKind::Advection {
            velocity: vel.clone(),
            threshold: 0.1,
        };
        let plan = cfs_plan(&class, id, 4, &kind);
        // first pivot cube is centered at q - 2h*(1,0) = cell (-2, 0)
        assert_eq!(plan.rings[0][0].lo, MultiIndex::new(&[-4, -2]));
        // below the speed threshold the plan collapses to the centered one
        let slow = OperatorKind::Advection {
            velocity: Arc::new(|_: &[f64]| vec![1e-6, 0.0]),
            threshold: 0.1,
        };
        let plan_slow = cfs_plan(&class, id, 4, &slow);
        let plan_centered = cfs_plan(&class, id, 4, &OperatorKind::Centered);
        assert_eq!(plan_slow.rings[0], plan_centered.rings[0]);
    }

    #[test]
    fn irregular_row_consistency_full_cube() {
        // deep interior: lattice fit reproduces the Laplacian of every
        // degree-4 monomial exactly
        let class = everything_class(2, 0.25, 10);
        let id = class.fd_id(&MultiIndex::new(&[0, 0])).unwrap();
        let op = OperatorSpec::laplacian(2);
        let mut stats = AssemblyStats::default();
        let row = irregular_row(
            &class,
            id,
            &op,
            None,
            4,
            ExtrasRule::Count(0),
            &TlgConfig::default(),
            &mut stats,
        )
        .unwrap();
        let basis = monomial_basis(2, 4);
        let xq = class.grid.center(&class.fd_cells[id]);
        for e in basis.exponents() {
            let u: Vec<f64> = class
                .fd_cells
                .iter()
                .map(|c| {
                    let x = class.grid.center(c);
                    x[0].powi(e.get(0) as i32) * x[1].powi(e.get(1) as i32)
                })
                .collect();
            let got: f64 = row.entries.iter().map(|(j, w)| w * u[*j]).sum();
            // exact Laplacian of the monomial at xq
            let lap = |x: &[f64]| {
                let (p, q) = (e.get(0), e.get(1));
                let mut v = 0.0;
                if p >= 2 {
                    v += (p * (p - 1)) as f64
                        * x[0].powi(p as i32 - 2)
                        * x[1].powi(q as i32);
                }
                if q >= 2 {
                    v += (q * (q - 1)) as f64
                        * x[0].powi(p as i32)
                        * x[1].powi(q as i32 - 2);
                }
                v
            };
            let want = lap(&xq);
            assert!(
                (got - want).abs() < 1e-8 * (1.0 + want.abs()),
                "monomial {e:?}: {got} vs {want}"
            );
        }
        assert_eq!(stats.tlg_calls, 1);
        assert_eq!(row.meta.lattice.as_ref().unwrap().len(), 15);
    }

    #[test]
    fn dirichlet_row_annihilates_constants() {
        // boundary node with constant field and matching Dirichlet data:
        // weights * c + bc_weight * c reproduces Laplacian(c) = 0
        let h = 1.0 / 16.0;
        let domain = Domain::shape_only(Shape::Ellipsoid {
            center: vec![0.5, 0.5],
            semi: vec![0.35, 0.3],
        });
        let grid = Grid::covering(2, h, &[0.0, 0.0], &[1.0, 1.0], 2).unwrap();
        let class = classify_nodes(&domain, &grid, 0.25).unwrap();
        let op = OperatorSpec::laplacian(2);
        let cfg = DiscConfig::fourth_order_2d();
        let disc = assemble_operator(
            &class,
            &op,
            Some(&BcSet::uniform(BcSpec::dirichlet(Arc::new(|_, _| 1.0)))),
            &cfg,
        )
        .unwrap();
        assert!(disc.stats.irregular_rows > 0 && disc.stats.regular_rows > 0);
        let u = vec![1.0; class.n_fd()];
        let g = vec![1.0; class.n_fd()];
        let vals = disc.apply(&u, &g);
        for (i, v) in vals.iter().enumerate() {
            assert!(
                v.abs() < 1e-7 / (h * h),
                "row {i} does not annihilate constants: {v}"
            );
        }
    }

    #[test]
    fn row_locality() {
        let class = everything_class(2, 0.25, 10);
        let id = class.fd_id(&MultiIndex::new(&[0, 0])).unwrap();
        let op = OperatorSpec::laplacian(2);
        let row = regular_row(&class, id, &op, 4).unwrap();
        assert!(row.entries.len() <= 9);
        let mut stats = AssemblyStats::default();
        let row_i = irregular_row(
            &class,
            id,
            &op,
            None,
            4,
            ExtrasRule::Count(4),
            &TlgConfig::default(),
            &mut stats,
        )
        .unwrap();
        assert!(row_i.entries.len() <= 15 + 4);
    }
}
