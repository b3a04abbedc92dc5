//! Implicit domain shapes, Cartesian grid embedding, and node
//! classification.
//!
//! Domains are an analytic shape (optionally complemented) intersected with
//! an axis-aligned clip box.  Every shape answers three queries: containment,
//! approximate signed distance (negative inside), and closest boundary point
//! with outward normal.  Cell centers are classified as exterior, boundary,
//! or interior; boundary and interior nodes carry the unknowns.

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use serde::{Deserialize, Serialize};

pub const MAX_D: usize = 3;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Which part of a composed domain a boundary point belongs to, used to route
/// boundary conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryPiece {
    Shape,
    ClipBox,
}

#[derive(Clone, Debug)]
pub struct BoundaryHit {
    pub point: Vec<f64>,
    /// Unit normal pointing out of the domain.
    pub normal: Vec<f64>,
    pub piece: BoundaryPiece,
    pub distance: f64,
}

/// Analytic shapes with exact or Newton-polished closest-point queries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Shape {
    /// Solid ellipsoid (ellipse in 2-D): `sum ((x_i-c_i)/a_i)^2 <= 1`.
    Ellipsoid { center: Vec<f64>, semi: Vec<f64> },
    /// Solid box, optionally rotated: 2-D rotation by `angle`, 3-D by Euler
    /// angles (z-y-x convention), about `lo`.
    RotatedBox {
        lo: Vec<f64>,
        size: Vec<f64>,
        angles: Vec<f64>,
    },
    /// Region inside the polar curve `r <= r0 + amp*cos(k*theta)` (2-D).
    Flower {
        center: Vec<f64>,
        r0: f64,
        amp: f64,
        k: u32,
    },
    /// Solid annulus `r_inner <= r <= r_outer` (2-D).
    Annulus {
        center: Vec<f64>,
        r_inner: f64,
        r_outer: f64,
    },
    /// Entire space (no boundary).
    Everything,
}

pub fn make_shape(shape: Shape) -> Result<Shape> {
    match &shape {
        Shape::Ellipsoid { center, semi } => {
            if semi.iter().any(|&a| a <= 0.0) || semi.len() != center.len() {
                return Err(Error::InvalidArgument("ellipsoid semiaxes".into()));
            }
        }
        Shape::RotatedBox { lo, size, .. } => {
            if size.iter().any(|&a| a <= 0.0) || size.len() != lo.len() {
                return Err(Error::InvalidArgument("box size".into()));
            }
        }
        Shape::Flower { r0, amp, .. } => {
            if *r0 <= 0.0 || *amp < 0.0 || *amp >= *r0 {
                return Err(Error::InvalidArgument("flower radii".into()));
            }
        }
        Shape::Annulus {
            r_inner, r_outer, ..
        } => {
            if *r_inner <= 0.0 || *r_outer <= *r_inner {
                return Err(Error::InvalidArgument("annulus radii".into()));
            }
        }
        Shape::Everything => {}
    }
    Ok(shape)
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Ellipsoid { center, .. } => center.len(),
            Shape::RotatedBox { lo, .. } => lo.len(),
            Shape::Flower { .. } | Shape::Annulus { .. } => 2,
            Shape::Everything => 0,
        }
    }

    /// Map into the box's local frame (inverse rotation about `lo`).
    fn box_local(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Shape::RotatedBox { lo, angles, .. } => {
                let mut v: Vec<f64> = x.iter().zip(lo).map(|(a, b)| a - b).collect();
                rotate(&mut v, angles, true);
                v
            }
            _ => unreachable!(),
        }
    }

    fn box_global(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Shape::RotatedBox { lo, angles, .. } => {
                let mut v = y.to_vec();
                rotate(&mut v, angles, false);
                v.iter_mut().zip(lo).for_each(|(a, b)| *a += b);
                v
            }
            _ => unreachable!(),
        }
    }

    pub fn inside(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ellipsoid { center, semi } => {
                x.iter()
                    .zip(center)
                    .zip(semi)
                    .map(|((xi, ci), ai)| ((xi - ci) / ai).powi(2))
                    .sum::<f64>()
                    <= 1.0
            }
            Shape::RotatedBox { size, .. } => {
                let y = self.box_local(x);
                y.iter().zip(size).all(|(v, s)| *v >= 0.0 && *v <= *s)
            }
            Shape::Flower { center, r0, amp, k } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                let theta = dy.atan2(dx);
                r <= r0 + amp * (*k as f64 * theta).cos()
            }
            Shape::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let r = dist(x, center);
                r >= *r_inner && r <= *r_outer
            }
            Shape::Everything => true,
        }
    }

    /// Signed distance, negative inside.  Exact for boxes, annuli, and
    /// ellipsoids (via the projection); a tight evaluation for flowers.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Everything => f64::NEG_INFINITY,
            _ => {
                let hit = self.closest(x).expect("bounded shape has a boundary");
                if self.inside(x) {
                    -hit.distance
                } else {
                    hit.distance
                }
            }
        }
    }

    /// Closest boundary point and the shape's outward normal there.
    pub fn closest(&self, x: &[f64]) -> Option<BoundaryHit> {
        match self {
            Shape::Everything => None,
            Shape::Ellipsoid { center, semi } => {
                Some(ellipsoid_closest(center, semi, x))
            }
            Shape::RotatedBox { size, angles, .. } => {
                let y = self.box_local(x);
                let (foot_local, mut normal_local) = box_boundary_closest(&y, size);
                let foot = self.box_global(&foot_local);
                rotate(&mut normal_local, angles, false);
                let d = dist(x, &foot);
                Some(BoundaryHit {
                    point: foot,
                    normal: normal_local,
                    piece: BoundaryPiece::Shape,
                    distance: d,
                })
            }
            Shape::Flower { center, r0, amp, k } => {
                Some(flower_closest(center, *r0, *amp, *k, x))
            }
            Shape::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let r = dist(x, center);
                let mut dir: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                if r == 0.0 {
                    dir = vec![1.0, 0.0];
                } else {
                    normalize(&mut dir);
                }
                // nearer circle wins
                let (radius, sign) = if (r - r_inner).abs() <= (r - r_outer).abs() {
                    (*r_inner, -1.0)
                } else {
                    (*r_outer, 1.0)
                };
                let point: Vec<f64> = center
                    .iter()
                    .zip(&dir)
                    .map(|(c, d)| c + radius * d)
                    .collect();
                let normal: Vec<f64> = dir.iter().map(|d| d * sign).collect();
                let d = dist(x, &point);
                Some(BoundaryHit {
                    point,
                    normal,
                    piece: BoundaryPiece::Shape,
                    distance: d,
                })
            }
        }
    }
}

/// Apply the rotation (or its inverse) given by `angles` in place: one angle
/// in 2-D, three Euler angles (applied z, then y, then x) in 3-D.
fn rotate(v: &mut [f64], angles: &[f64], inverse: bool) {
    let rot2 = |v: &mut [f64], i: usize, j: usize, a: f64| {
        let (s, c) = a.sin_cos();
        let (vi, vj) = (v[i], v[j]);
        v[i] = c * vi - s * vj;
        v[j] = s * vi + c * vj;
    };
    match (v.len(), angles.len()) {
        (2, 1) => {
            let a = if inverse { -angles[0] } else { angles[0] };
            rot2(v, 0, 1, a);
        }
        (3, 3) => {
            if inverse {
                rot2(v, 1, 2, -angles[2]);
                rot2(v, 0, 2, -angles[1]);
                rot2(v, 0, 1, -angles[0]);
            } else {
                rot2(v, 0, 1, angles[0]);
                rot2(v, 0, 2, angles[1]);
                rot2(v, 1, 2, angles[2]);
            }
        }
        (_, 0) => {}
        _ => panic!("angle count does not match dimension"),
    }
}

/// Closest point on the *boundary* of the axis box `[0, size]` from a local
/// point, with outward normal.  Interior points project to the nearest face.
fn box_boundary_closest(y: &[f64], size: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = y.len();
    let inside = y.iter().zip(size).all(|(v, s)| *v >= 0.0 && *v <= *s);
    if inside {
        // nearest face, lowest axis and low side first on ties
        let mut best = (f64::INFINITY, 0usize, 0.0f64, -1.0f64);
        for i in 0..d {
            if y[i] < best.0 {
                best = (y[i], i, 0.0, -1.0);
            }
            if size[i] - y[i] < best.0 {
                best = (size[i] - y[i], i, size[i], 1.0);
            }
        }
        let mut foot = y.to_vec();
        foot[best.1] = best.2;
        let mut normal = vec![0.0; d];
        normal[best.1] = best.3;
        (foot, normal)
    } else {
        let foot: Vec<f64> = y
            .iter()
            .zip(size)
            .map(|(v, s)| v.clamp(0.0, *s))
            .collect();
        let mut normal: Vec<f64> = y.iter().zip(&foot).map(|(a, b)| a - b).collect();
        if normal.iter().all(|v| *v == 0.0) {
            normal[0] = 1.0;
        }
        normalize(&mut normal);
        (foot, normal)
    }
}

/// Closest point on an axis-aligned ellipsoid via the Lagrange-multiplier
/// root: solve `sum (a_i^2 u_i / (t + a_i^2))^2 / a_i^2 = 1` for `t`, which
/// is monotone on the admissible interval.  Works from either side.
fn ellipsoid_closest(center: &[f64], semi: &[f64], x: &[f64]) -> BoundaryHit {
    let d = center.len();
    let mut u: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    // keep the iteration away from the exact center/axes
    let tiny = 1e-14 * semi.iter().cloned().fold(0.0, f64::max);
    for ui in u.iter_mut() {
        if ui.abs() < tiny {
            *ui = tiny;
        }
    }
    let g = |t: f64| -> f64 {
        u.iter()
            .zip(semi)
            .map(|(ui, ai)| {
                let w = ai * ai * ui / (t + ai * ai);
                (w / ai) * (w / ai)
            })
            .sum::<f64>()
            - 1.0
    };
    // g is decreasing in t on (-min a_i^2, inf); bracket the root
    let amin2 = semi.iter().map(|a| a * a).fold(f64::INFINITY, f64::min);
    let mut lo = -amin2 * (1.0 - 1e-12);
    let mut hi = amin2.max(1.0);
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e30 {
            break;
        }
    }
    if g(lo) < 0.0 {
        // pathological (x essentially at the center); nudge the bracket
        lo = -amin2 * (1.0 - 1e-6);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let foot: Vec<f64> = (0..d)
        .map(|i| center[i] + semi[i] * semi[i] * u[i] / (t + semi[i] * semi[i]))
        .collect();
    let mut normal: Vec<f64> = (0..d)
        .map(|i| (foot[i] - center[i]) / (semi[i] * semi[i]))
        .collect();
    normalize(&mut normal);
    let dd = dist(x, &foot);
    BoundaryHit {
        point: foot,
        normal,
        piece: BoundaryPiece::Shape,
        distance: dd,
    }
}

/// Closest point on the polar curve `rho(theta) = r0 + amp cos(k theta)`:
/// dense angular scan seeds a Newton polish of `d/dtheta |x - c(theta)|^2`.
fn flower_closest(center: &[f64], r0: f64, amp: f64, k: u32, x: &[f64]) -> BoundaryHit {
    let dx = x[0] - center[0];
    let dy = x[1] - center[1];
    let (rp, phi) = ((dx * dx + dy * dy).sqrt(), dy.atan2(dx));
    let kf = k as f64;
    let rho = |t: f64| r0 + amp * (kf * t).cos();
    let drho = |t: f64| -amp * kf * (kf * t).sin();
    let ddrho = |t: f64| -amp * kf * kf * (kf * t).cos();
    // squared distance in polar form: rp^2 + rho^2 - 2 rp rho cos(t - phi)
    let f = |t: f64| rp * rp + rho(t) * rho(t) - 2.0 * rp * rho(t) * (t - phi).cos();
    let df = |t: f64| {
        2.0 * rho(t) * drho(t) - 2.0 * rp * (drho(t) * (t - phi).cos() - rho(t) * (t - phi).sin())
    };
    let ddf = |t: f64| {
        2.0 * (drho(t) * drho(t) + rho(t) * ddrho(t))
            - 2.0 * rp
                * (ddrho(t) * (t - phi).cos() - 2.0 * drho(t) * (t - phi).sin()
                    - rho(t) * (t - phi).cos())
    };
    let n_scan = 720;
    let mut best_t = phi;
    let mut best_f = f64::INFINITY;
    for i in 0..n_scan {
        let t = phi - std::f64::consts::PI
            + 2.0 * std::f64::consts::PI * i as f64 / n_scan as f64;
        let v = f(t);
        if v < best_f {
            best_f = v;
            best_t = t;
        }
    }
    let mut t = best_t;
    for _ in 0..50 {
        let d1 = df(t);
        let d2 = ddf(t);
        if d2.abs() < 1e-30 {
            break;
        }
        let step = d1 / d2;
        t -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if f(t) > best_f {
        t = best_t; // Newton wandered; keep the scan minimum
    }
    let foot = [center[0] + rho(t) * t.cos(), center[1] + rho(t) * t.sin()];
    // outward normal of {r <= rho}: perpendicular to the curve tangent,
    // oriented away from the center
    let tx = drho(t) * t.cos() - rho(t) * t.sin();
    let ty = drho(t) * t.sin() + rho(t) * t.cos();
    let mut normal = vec![ty, -tx];
    normalize(&mut normal);
    if normal[0] * t.cos() + normal[1] * t.sin() < 0.0 {
        normal[0] = -normal[0];
        normal[1] = -normal[1];
    }
    let dd = dist(x, &foot);
    BoundaryHit {
        point: foot.to_vec(),
        normal,
        piece: BoundaryPiece::Shape,
        distance: dd,
    }
}

/// A computational domain: an optional clip box intersected with an optional
/// (possibly complemented) shape.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Domain {
    pub clip: Option<(Vec<f64>, Vec<f64>)>,
    pub shape: Option<Shape>,
    /// Use the complement of the shape region.
    #[serde(default)]
    pub complement: bool,
}

impl Domain {
    pub fn shape_only(shape: Shape) -> Self {
        Self {
            clip: None,
            shape: Some(shape),
            complement: false,
        }
    }

    pub fn everything() -> Self {
        Self {
            clip: None,
            shape: None,
            complement: false,
        }
    }

    pub fn empty() -> Self {
        Self {
            clip: None,
            shape: Some(Shape::Everything),
            complement: true,
        }
    }

    pub fn with_clip(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.clip = Some((lo, hi));
        self
    }

    pub fn complemented(mut self) -> Self {
        self.complement = !self.complement;
        self
    }

    fn shape_inside(&self, x: &[f64]) -> bool {
        match &self.shape {
            None => true,
            Some(s) => s.inside(x) != self.complement,
        }
    }

    fn clip_inside(&self, x: &[f64]) -> bool {
        match &self.clip {
            None => true,
            Some((lo, hi)) => x
                .iter()
                .zip(lo)
                .zip(hi)
                .all(|((v, l), h)| *v >= *l && *v <= *h),
        }
    }

    pub fn inside(&self, x: &[f64]) -> bool {
        self.clip_inside(x) && self.shape_inside(x)
    }

    /// Signed distance to the domain boundary (max of the two pieces'
    /// signed distances; exact when the pieces are separated).
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let mut sd = f64::NEG_INFINITY;
        if let Some((lo, hi)) = &self.clip {
            let mut outside = 0.0f64;
            let mut inside = f64::INFINITY;
            for i in 0..x.len() {
                let lo_gap = lo[i] - x[i];
                let hi_gap = x[i] - hi[i];
                if lo_gap > 0.0 {
                    outside += lo_gap * lo_gap;
                }
                if hi_gap > 0.0 {
                    outside += hi_gap * hi_gap;
                }
                inside = inside.min((x[i] - lo[i]).min(hi[i] - x[i]));
            }
            let sd_box = if outside > 0.0 {
                outside.sqrt()
            } else {
                -inside
            };
            sd = sd.max(sd_box);
        }
        if let Some(s) = &self.shape {
            let mut s_sd = s.signed_distance(x);
            if self.complement {
                s_sd = -s_sd;
            }
            sd = sd.max(s_sd);
        }
        if sd == f64::NEG_INFINITY {
            -f64::INFINITY
        } else {
            sd
        }
    }

    /// Closest boundary point; prefers candidates that genuinely lie on the
    /// domain boundary when the pieces overlap.
    pub fn closest_boundary(&self, x: &[f64]) -> Option<BoundaryHit> {
        let mut candidates: Vec<BoundaryHit> = Vec::new();
        if let Some(s) = &self.shape {
            if let Some(mut hit) = s.closest(x) {
                if self.complement {
                    hit.normal.iter_mut().for_each(|v| *v = -*v);
                }
                if self.clip_inside(&hit.point) {
                    candidates.push(hit);
                }
            }
        }
        if let Some((lo, hi)) = &self.clip {
            let size: Vec<f64> = hi.iter().zip(lo).map(|(h, l)| h - l).collect();
            let local: Vec<f64> = x.iter().zip(lo).map(|(v, l)| v - l).collect();
            let (foot_local, normal) = box_boundary_closest(&local, &size);
            let foot: Vec<f64> = foot_local.iter().zip(lo).map(|(v, l)| v + l).collect();
            if self.shape_inside(&foot) {
                let d = dist(x, &foot);
                candidates.push(BoundaryHit {
                    point: foot,
                    normal,
                    piece: BoundaryPiece::ClipBox,
                    distance: d,
                });
            }
        }
        candidates
            .into_iter()
            .min_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap())
    }
}

/// Uniform Cartesian grid of cells `lo..=hi` per axis with spacing `h`; the
/// center of cell `i` is `h*i + h/2`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub d: usize,
    pub h: f64,
    pub lo: MultiIndex,
    pub hi: MultiIndex,
    dims: Vec<usize>,
}

impl Grid {
    pub fn new(d: usize, h: f64, lo: MultiIndex, hi: MultiIndex) -> Result<Self> {
        if h <= 0.0 {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        let dims: Vec<usize> = (0..d)
            .map(|i| {
                let w = hi.get(i) - lo.get(i) + 1;
                assert!(w > 0, "empty grid axis");
                w as usize
            })
            .collect();
        Ok(Self { d, h, lo, hi, dims })
    }

    /// Grid whose cells cover `[lo_x, hi_x]` inflated by `pad` cells.
    pub fn covering(d: usize, h: f64, lo_x: &[f64], hi_x: &[f64], pad: i64) -> Result<Self> {
        let lo = MultiIndex::new(
            &(0..d)
                .map(|i| (lo_x[i] / h).floor() as i64 - pad)
                .collect::<Vec<_>>(),
        );
        let hi = MultiIndex::new(
            &(0..d)
                .map(|i| (hi_x[i] / h).ceil() as i64 - 1 + pad)
                .collect::<Vec<_>>(),
        );
        Self::new(d, h, lo, hi)
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn contains(&self, cell: &MultiIndex) -> bool {
        (0..self.d).all(|i| cell.get(i) >= self.lo.get(i) && cell.get(i) <= self.hi.get(i))
    }

    #[inline]
    pub fn flat(&self, cell: &MultiIndex) -> usize {
        let mut idx = 0usize;
        for i in 0..self.d {
            idx = idx * self.dims[i] + (cell.get(i) - self.lo.get(i)) as usize;
        }
        idx
    }

    pub fn unflat(&self, mut idx: usize) -> MultiIndex {
        let mut c = vec![0i64; self.d];
        for i in (0..self.d).rev() {
            c[i] = self.lo.get(i) + (idx % self.dims[i]) as i64;
            idx /= self.dims[i];
        }
        MultiIndex::new(&c)
    }

    pub fn center(&self, cell: &MultiIndex) -> Vec<f64> {
        (0..self.d)
            .map(|i| self.h * cell.get(i) as f64 + 0.5 * self.h)
            .collect()
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.cell_count()).map(|i| self.unflat(i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeLabel {
    Exterior,
    Boundary,
    Interior,
}

/// Classification of every cell center plus the FD-node numbering
/// (lexicographic over cells).
pub struct NodeClassification {
    pub grid: Grid,
    pub labels: Vec<NodeLabel>,
    /// FD-node id per cell (u32::MAX for exterior).
    pub fd_ids: Vec<u32>,
    /// Cell of each FD node.
    pub fd_cells: Vec<MultiIndex>,
    /// Closest boundary point for each boundary node, indexed by FD id.
    pub hits: Vec<Option<BoundaryHit>>,
}

impl NodeClassification {
    pub fn n_fd(&self) -> usize {
        self.fd_cells.len()
    }

    pub fn label(&self, cell: &MultiIndex) -> NodeLabel {
        if !self.grid.contains(cell) {
            return NodeLabel::Exterior;
        }
        self.labels[self.grid.flat(cell)]
    }

    pub fn is_fd(&self, cell: &MultiIndex) -> bool {
        self.label(cell) != NodeLabel::Exterior
    }

    pub fn fd_id(&self, cell: &MultiIndex) -> Option<usize> {
        if !self.grid.contains(cell) {
            return None;
        }
        let id = self.fd_ids[self.grid.flat(cell)];
        (id != u32::MAX).then_some(id as usize)
    }
}

/// Classify cell centers: a center outside the domain and farther than
/// `eta*h` from the boundary is exterior; a non-exterior center with an
/// exterior face neighbor is a boundary node (and records its closest
/// boundary point); the rest are interior.  Cells beyond the grid count as
/// exterior neighbors.
pub fn classify_nodes(domain: &Domain, grid: &Grid, eta: f64) -> Result<NodeClassification> {
    if !(0.0 < eta && eta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} outside (0, 1/2)"
        )));
    }
    let n_cells = grid.cell_count();
    let mut labels = vec![NodeLabel::Interior; n_cells];
    for idx in 0..n_cells {
        let cell = grid.unflat(idx);
        let x = grid.center(&cell);
        if !domain.inside(&x) {
            let sd = domain.signed_distance(&x);
            if sd > eta * grid.h {
                labels[idx] = NodeLabel::Exterior;
            }
        }
    }
    // boundary pass; out-of-grid neighbors are classified by the same
    // predicate so an unbounded domain has no spurious boundary at the grid
    // edge
    let exterior_predicate = |cell: &MultiIndex| -> bool {
        let x = grid.center(cell);
        !domain.inside(&x) && domain.signed_distance(&x) > eta * grid.h
    };
    let mut fd_ids = vec![u32::MAX; n_cells];
    let mut fd_cells = Vec::new();
    let mut hits = Vec::new();
    for idx in 0..n_cells {
        if labels[idx] == NodeLabel::Exterior {
            continue;
        }
        let cell = grid.unflat(idx);
        let mut is_boundary = false;
        for axis in 0..grid.d {
            for dir in [-1i64, 1] {
                let nb = cell.offset(axis, dir);
                let ext = if grid.contains(&nb) {
                    labels[grid.flat(&nb)] == NodeLabel::Exterior
                } else {
                    exterior_predicate(&nb)
                };
                if ext {
                    is_boundary = true;
                }
            }
        }
        let id = fd_cells.len() as u32;
        fd_ids[idx] = id;
        fd_cells.push(cell);
        if is_boundary {
            labels[idx] = NodeLabel::Boundary;
            let x = grid.center(&cell);
            hits.push(domain.closest_boundary(&x));
        } else {
            hits.push(None);
        }
    }
    Ok(NodeClassification {
        grid: grid.clone(),
        labels,
        fd_ids,
        fd_cells,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_boundary_examples() {
        // figure parameters: (a, b) = (16, 12) centered (-8.40, -6.28); the
        // point (7.6, -6.28) lies on the boundary
        let shape = make_shape(Shape::Ellipsoid {
            center: vec![-8.40, -6.28],
            semi: vec![16.0, 12.0],
        })
        .unwrap();
        let sd = shape.signed_distance(&[7.6, -6.28]);
        assert!(sd.abs() < 1e-10, "sd = {sd}");
        // projection of an outside point lands on the curve
        let hit = shape.closest(&[20.0, 5.0]).unwrap();
        let r = ((hit.point[0] + 8.40) / 16.0).powi(2) + ((hit.point[1] + 6.28) / 12.0).powi(2);
        assert!((r - 1.0).abs() < 1e-10);
        assert!((hit.normal.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_closest_is_radial() {
        let shape = make_shape(Shape::Ellipsoid {
            center: vec![1.0, 2.0],
            semi: vec![3.0, 3.0],
        })
        .unwrap();
        let x = [5.0, 2.0];
        let hit = shape.closest(&x).unwrap();
        assert!((hit.point[0] - 4.0).abs() < 1e-9 && (hit.point[1] - 2.0).abs() < 1e-9);
        assert!((hit.normal[0] - 1.0).abs() < 1e-9);
        assert!((hit.distance - 1.0).abs() < 1e-9);
    }

    #[test]
    fn box_examples() {
        let shape = make_shape(Shape::RotatedBox {
            lo: vec![0.0, 0.0],
            size: vec![1.0, 1.0],
            angles: vec![0.0],
        })
        .unwrap();
        assert!(shape.inside(&[0.5, 0.5]));
        assert!(!shape.inside(&[1.2, 0.5]));
        let hit = shape.closest(&[1.5, 0.5]).unwrap();
        assert!((hit.point[0] - 1.0).abs() < 1e-12 && (hit.point[1] - 0.5).abs() < 1e-12);
        assert_eq!(hit.normal, vec![1.0, 0.0]);
    }

    #[test]
    fn annulus_example() {
        let shape = make_shape(Shape::Annulus {
            center: vec![1.0, 1.0],
            r_inner: 0.25,
            r_outer: 0.8,
        })
        .unwrap();
        assert!(shape.inside(&[1.5, 1.0]));
        assert!(!shape.inside(&[1.1, 1.0]));
        assert!(!shape.inside(&[1.9, 1.0]));
        // outward normal on the inner circle points toward the center
        let hit = shape.closest(&[1.3, 1.0]).unwrap();
        assert!((hit.point[0] - 1.25).abs() < 1e-12);
        assert!((hit.normal[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flower_projection_oracle() {
        // residual and gradient-orthogonality against a dense parameter scan
        let (r0, amp, k) = (0.25, 0.05, 6u32);
        let shape = make_shape(Shape::Flower {
            center: vec![0.0, 0.0],
            r0,
            amp,
            k,
        })
        .unwrap();
        let mut rng = crate::rng::SplitMix64::new(9);
        for _ in 0..50 {
            let x = [rng.next_f64() * 0.9 - 0.45, rng.next_f64() * 0.9 - 0.45];
            let hit = shape.closest(&x).unwrap();
            // the returned point is on the curve
            let (px, py) = (hit.point[0], hit.point[1]);
            let theta = py.atan2(px);
            let rho = (px * px + py * py).sqrt();
            assert!((rho - (r0 + amp * (k as f64 * theta).cos())).abs() < 1e-10);
            // no scanned point is meaningfully closer
            let mut best = f64::INFINITY;
            for i in 0..20000 {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 20000.0;
                let r = r0 + amp * (k as f64 * t).cos();
                let d = ((x[0] - r * t.cos()).powi(2) + (x[1] - r * t.sin()).powi(2)).sqrt();
                best = best.min(d);
            }
            assert!(hit.distance <= best + 1e-8, "{} vs {}", hit.distance, best);
            // gradient orthogonality: (x - foot) parallel to the normal
            let gx = x[0] - px;
            let gy = x[1] - py;
            let cross = (gx * hit.normal[1] - gy * hit.normal[0]).abs();
            assert!(cross < 1e-8 * (hit.distance + 1e-8), "cross = {cross}");
        }
    }

    #[test]
    fn whole_plane_and_empty_classification() {
        let grid = Grid::new(
            2,
            0.25,
            MultiIndex::new(&[0, 0]),
            MultiIndex::new(&[7, 7]),
        )
        .unwrap();
        let all = classify_nodes(&Domain::everything(), &grid, 0.25).unwrap();
        assert!(all.labels.iter().all(|&l| l == NodeLabel::Interior));
        assert_eq!(all.n_fd(), 64);
        let none = classify_nodes(&Domain::empty(), &grid, 0.25).unwrap();
        assert!(none.labels.iter().all(|&l| l == NodeLabel::Exterior));
        assert_eq!(none.n_fd(), 0);
    }

    #[test]
    fn classification_matches_brute_force() {
        // unit square minus an ellipse, h = 1/32: labels equal a per-center
        // evaluation of the defining predicates
        let h = 1.0 / 32.0;
        let eta = 0.25;
        let domain = Domain {
            clip: Some((vec![0.0, 0.0], vec![1.0, 1.0])),
            shape: Some(Shape::Ellipsoid {
                center: vec![0.5, 0.5],
                semi: vec![0.25, 0.125],
            }),
            complement: true,
        };
        let grid = Grid::covering(2, h, &[0.0, 0.0], &[1.0, 1.0], 3).unwrap();
        let cls = classify_nodes(&domain, &grid, eta).unwrap();
        let mut n_boundary = 0;
        for cell in grid.iter_cells() {
            let x = grid.center(&cell);
            let inside = domain.inside(&x);
            let dist_b = domain.closest_boundary(&x).unwrap().distance;
            let expect_ext = !inside && dist_b > eta * h;
            let got = cls.label(&cell);
            assert_eq!(
                got == NodeLabel::Exterior,
                expect_ext,
                "cell {cell:?} x {x:?} dist {dist_b}"
            );
            if got == NodeLabel::Boundary {
                n_boundary += 1;
                // boundary nodes are non-exterior with an exterior face
                // neighbor and carry a hit on the boundary
                let id = cls.fd_id(&cell).unwrap();
                let hit = cls.hits[id].as_ref().unwrap();
                assert!(hit.distance < 2.0 * h * (2.0f64).sqrt());
            }
        }
        assert!(n_boundary > 0);
        // no boundary node is exterior; every exterior-adjacent non-exterior
        // center is boundary
        for cell in grid.iter_cells() {
            if cls.label(&cell) == NodeLabel::Interior {
                for axis in 0..2 {
                    for dir in [-1, 1] {
                        let nb = cell.offset(axis, dir);
                        assert_ne!(cls.label(&nb), NodeLabel::Exterior);
                    }
                }
            }
        }
    }

    #[test]
    fn classification_stability_under_eta() {
        let h = 1.0 / 16.0;
        let domain = Domain::shape_only(Shape::Ellipsoid {
            center: vec![0.5, 0.5],
            semi: vec![0.3, 0.2],
        });
        let grid = Grid::covering(2, h, &[0.0, 0.0], &[1.0, 1.0], 2).unwrap();
        let a = classify_nodes(&domain, &grid, 0.25).unwrap();
        // minimum gap between |dist - eta h| over outside centers bounds the
        // stable perturbation; probe a tiny one
        let b = classify_nodes(&domain, &grid, 0.2500001).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn rotated_box_inside() {
        let angle = std::f64::consts::PI / 6.0;
        let shape = make_shape(Shape::RotatedBox {
            lo: vec![0.0, 0.0],
            size: vec![1.0, 1.0],
            angles: vec![angle],
        })
        .unwrap();
        // the rotated unit square contains the image of (0.5, 0.5)
        let (s, c) = angle.sin_cos();
        let p = [0.5 * c - 0.5 * s, 0.5 * s + 0.5 * c];
        assert!(shape.inside(&p));
        assert!(!shape.inside(&[1.0, 0.0]));
        // closest point from a point just outside a rotated face
        let q = [1.2 * c - 0.5 * s, 1.2 * s + 0.5 * c];
        let hit = shape.closest(&q).unwrap();
        assert!((hit.distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn grid_round_trip() {
        let grid = Grid::new(
            3,
            0.5,
            MultiIndex::new(&[-2, 0, 1]),
            MultiIndex::new(&[3, 4, 2]),
        )
        .unwrap();
        for (i, cell) in grid.iter_cells().enumerate() {
            assert_eq!(grid.flat(&cell), i);
            assert_eq!(grid.unflat(i), cell);
        }
        let c = grid.center(&MultiIndex::new(&[0, 0, 1]));
        assert_eq!(c, vec![0.25, 0.25, 0.75]);
    }
}
