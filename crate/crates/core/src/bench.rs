//! The benchmark experiment suite: scenario definitions, runners, and
//! machine-readable reports.
//!
//! Each experiment reproduces one study: lattice generation near irregular
//! boundaries, condition-number sweeps over extra stencil points, test-set
//! timing comparisons, truncation convergence of a nonlinear flux divergence,
//! and full elliptic/parabolic solves with manufactured or closed-form
//! solutions.

use crate::disc::{
    assemble_operator, AlignedClosure, BcSet, BcSpec, DiscConfig, ExtrasRule, OperatorKind,
    OperatorSpec, TlgConfig,
};
use crate::error::{Error, Result};
use crate::geom::{classify_nodes, Domain, Grid, NodeClassification, Shape};
use crate::index::MultiIndex;
use crate::interp::{condition_number, monomial_basis, sample_matrix, CondNorm};
use crate::lattice::TriangularLattice;
use crate::search::{tlg_solve, OrderingRule, SearchStats, TlgProblem};
use crate::solver::{
    error_norms, rate, richardson_errors, run_advection_diffusion, run_heat,
    solve_elliptic_closed, EllipticReport,
};
use crate::testset::TestSetKind;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

// ---------------------------------------------------------------------------
// configuration and reporting plumbing

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: String,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Grid sizes as denominators: 32 means h = 1/32.
    #[serde(default)]
    pub grids: Vec<u32>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_extras")]
    pub extras: usize,
    /// 1 or 2.
    #[serde(default = "default_test_sets")]
    pub test_sets: u8,
    /// "compact" or "feasible".
    #[serde(default = "default_ordering")]
    pub ordering: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_d() -> usize {
    2
}
fn default_n() -> usize {
    4
}
fn default_eta() -> f64 {
    0.25
}
fn default_extras() -> usize {
    4
}
fn default_test_sets() -> u8 {
    2
}
fn default_ordering() -> String {
    "compact".into()
}

impl RunConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            d: 2,
            n: 4,
            grids: Vec::new(),
            eta: 0.25,
            extras: 4,
            test_sets: 2,
            ordering: "compact".into(),
            seed: 0,
            out: None,
        }
    }

    pub fn tlg_kind(&self) -> TestSetKind {
        if self.test_sets == 1 {
            TestSetKind::TypeI
        } else {
            TestSetKind::TypeII
        }
    }

    pub fn ordering_rule(&self) -> OrderingRule {
        if self.ordering.starts_with("feas") {
            OrderingRule::FeasibilityFirst
        } else {
            OrderingRule::CompactnessFirst
        }
    }

    pub fn disc_config(&self) -> DiscConfig {
        DiscConfig {
            n: self.n,
            regular_order: if self.n >= 6 { 6 } else { 4 },
            extras: ExtrasRule::Count(self.extras),
            tlg: TlgConfig {
                kind: self.tlg_kind(),
                ordering: self.ordering_rule(),
            },
        }
    }

    /// FNV-1a hash of the canonical JSON form, for reproducibility stamps.
    pub fn content_hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// One grid row of a convergence table; rates are against the previous row.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub grid: u32,
    pub linf: f64,
    pub rate_linf: Option<f64>,
    pub l1: f64,
    pub rate_l1: Option<f64>,
    pub l2: f64,
    pub rate_l2: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn push(&mut self, grid: u32, norms: (f64, f64, f64)) {
        let prev = self.rows.last().map(|r| (r.linf, r.l1, r.l2));
        let (linf, l1, l2) = norms;
        let rates = prev.map(|(pi, p1, p2)| (rate(pi, linf), rate(p1, l1), rate(p2, l2)));
        self.rows.push(ConvergenceRow {
            grid,
            linf,
            rate_linf: rates.map(|r| r.0),
            l1,
            rate_l1: rates.map(|r| r.1),
            l2,
            rate_l2: rates.map(|r| r.2),
        });
    }

    /// CSV in the table layout `h, Linf, rate, L1, rate, L2, rate`.
    pub fn to_csv(&self, config: &RunConfig, kind: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# config: {}\n# hash: {:016x}\n# kind: {kind}\n",
            serde_json::to_string(config).unwrap(),
            config.content_hash()
        ));
        s.push_str("h,Linf,rate,L1,rate,L2,rate\n");
        for r in &self.rows {
            let fr = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
            s.push_str(&format!(
                "1/{},{:.6e},{},{:.6e},{},{:.6e},{}\n",
                r.grid,
                r.linf,
                fr(r.rate_linf),
                r.l1,
                fr(r.rate_l1),
                r.l2,
                fr(r.rate_l2),
            ));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// velocity fields and closed-form solutions

fn vel_2d(x: &[f64]) -> [f64; 2] {
    use std::f64::consts::PI;
    [
        (PI * x[0]).sin().powi(2) * (2.0 * PI * x[1]).sin(),
        -(2.0 * PI * x[0]).sin() * (PI * x[1]).sin().powi(2),
    ]
}

/// `d(vel_2d_i)/dx_j`.
fn dvel_2d(i: usize, j: usize, x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
    match (i, j) {
        (0, 0) => 2.0 * PI * sx * cx * s2y,
        (0, 1) => 2.0 * PI * sx * sx * c2y,
        (1, 0) => -2.0 * PI * c2x * sy * sy,
        (1, 1) => -2.0 * PI * s2x * sy * cy,
        _ => unreachable!(),
    }
}

fn vel_3d(x: &[f64]) -> [f64; 3] {
    use std::f64::consts::PI;
    let s = |v: f64| (PI * v).sin();
    let s2 = |v: f64| (2.0 * PI * v).sin();
    [
        0.5 * s(x[0]).powi(2) * s2(x[1]) * s2(x[2]),
        0.5 * s2(x[0]) * s(x[1]).powi(2) * s2(x[2]),
        -1.0 * s2(x[0]) * s2(x[1]) * s(x[2]).powi(2),
    ]
}

fn dvel_3d(i: usize, j: usize, x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let s = |v: f64| (PI * v).sin();
    let c = |v: f64| (PI * v).cos();
    let s2 = |v: f64| (2.0 * PI * v).sin();
    let c2 = |v: f64| (2.0 * PI * v).cos();
    let deriv_sq = |v: f64| 2.0 * PI * s(v) * c(v); // d/dv sin^2(pi v)
    let deriv_s2 = |v: f64| 2.0 * PI * c2(v); // d/dv sin(2 pi v)
    match i {
        0 => {
            let parts = [s(x[0]).powi(2), s2(x[1]), s2(x[2])];
            0.5 * match j {
                0 => deriv_sq(x[0]) * parts[1] * parts[2],
                1 => parts[0] * deriv_s2(x[1]) * parts[2],
                _ => parts[0] * parts[1] * deriv_s2(x[2]),
            }
        }
        1 => {
            let parts = [s2(x[0]), s(x[1]).powi(2), s2(x[2])];
            0.5 * match j {
                0 => deriv_s2(x[0]) * parts[1] * parts[2],
                1 => parts[0] * deriv_sq(x[1]) * parts[2],
                _ => parts[0] * parts[1] * deriv_s2(x[2]),
            }
        }
        _ => {
            let parts = [s2(x[0]), s2(x[1]), s(x[2]).powi(2)];
            -1.0 * match j {
                0 => deriv_s2(x[0]) * parts[1] * parts[2],
                1 => parts[0] * deriv_s2(x[1]) * parts[2],
                _ => parts[0] * parts[1] * deriv_sq(x[2]),
            }
        }
    }
}

fn velocity(d: usize, x: &[f64]) -> Vec<f64> {
    if d == 2 {
        vel_2d(x).to_vec()
    } else {
        vel_3d(x).to_vec()
    }
}

fn dvelocity(d: usize, i: usize, j: usize, x: &[f64]) -> f64 {
    if d == 2 {
        dvel_2d(i, j, x)
    } else {
        dvel_3d(i, j, x)
    }
}

/// Exact `k`-th component of `div(u u) = sum_i d/dx_i (u_i u_k)`.
fn exact_flux_div(d: usize, k: usize, x: &[f64]) -> f64 {
    let u = velocity(d, x);
    (0..d)
        .map(|i| dvelocity(d, i, i, x) * u[k] + u[i] * dvelocity(d, k, i, x))
        .sum()
}

// ---------------------------------------------------------------------------
// truncation of the flux divergence (the Table-2 style study)

pub struct TruncationReport {
    pub table: ConvergenceTable,
    pub tlg_calls: Vec<u64>,
    pub elapsed: f64,
}

/// Domain of the truncation study: the unit box minus an ellipse/ellipsoid,
/// with the exterior extended through the padding so only the curved shape
/// produces irregular nodes.
fn truncation_domain(d: usize) -> Domain {
    let (center, semi) = if d == 2 {
        (vec![0.5, 0.5], vec![0.25, 0.125])
    } else {
        (vec![0.5, 0.5, 0.5], vec![0.25, 0.125, 0.25])
    };
    Domain {
        clip: None,
        shape: Some(Shape::Ellipsoid { center, semi }),
        complement: true,
    }
}

pub fn truncation_experiment(config: &RunConfig) -> Result<TruncationReport> {
    let d = config.d;
    let n = config.n;
    let start = Instant::now();
    let domain = truncation_domain(d);
    let cfg = config.disc_config();
    let mut table = ConvergenceTable::default();
    let mut calls = Vec::new();
    for &nref in &config.grids {
        let h = 1.0 / nref as f64;
        let lo = vec![0.0; d];
        let hi = vec![1.0; d];
        let grid = Grid::covering(d, h, &lo, &hi, 4)?;
        let class = classify_nodes(&domain, &grid, config.eta)?;
        let mut stats = crate::disc::AssemblyStats::default();
        // one gradient-functional fit per node, shared by all components
        let mut errors: Vec<f64> = Vec::new();
        let radius = crate::disc::regular_radius(cfg.regular_order);
        for fd_id in 0..class.n_fd() {
            let cell = class.fd_cells[fd_id];
            let x = class.grid.center(&cell);
            if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                continue; // padding nodes carry no norm contribution
            }
            // derivative rows d/dx_i as (cells, weights) pairs
            let rows_di: Vec<Vec<(MultiIndex, f64)>> = if crate::disc::is_regular(
                &class, &cell, radius,
            ) {
                (0..d)
                    .map(|axis| {
                        let (offs, ws) = crate::disc::stencil_1d(cfg.regular_order, 1);
                        offs.iter()
                            .zip(&ws)
                            .map(|(o, w)| (cell.offset(axis, *o), w / h))
                            .collect()
                    })
                    .collect()
            } else {
                let fit = crate::disc::lattice_fit(
                    &class,
                    fd_id,
                    n,
                    1,
                    &OperatorKind::Centered,
                    None,
                    cfg.extras,
                    &cfg.tlg,
                    &mut stats,
                )?;
                (0..d)
                    .map(|axis| {
                        let mut alpha = MultiIndex::zero(d);
                        alpha.set(axis, 1);
                        let frow = fit.basis.derivative_row(&alpha, &vec![0.0; d], h);
                        let (ws, _) = fit.functional(&frow);
                        fit.cells.iter().cloned().zip(ws).collect()
                    })
                    .collect()
            };
            for k in 0..d {
                let mut approx = 0.0;
                for (axis, row) in rows_di.iter().enumerate() {
                    for (c2, w) in row {
                        let x2 = class.grid.center(c2);
                        let u2 = velocity(d, &x2);
                        approx += w * u2[axis] * u2[k];
                    }
                }
                errors.push(approx - exact_flux_div(d, k, &x));
            }
        }
        table.push(nref, error_norms(&errors, h, d));
        calls.push(stats.tlg_calls);
    }
    Ok(TruncationReport {
        table,
        tlg_calls: calls,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// elliptic experiments

pub struct EllipticExperimentReport {
    pub solution: ConvergenceTable,
    pub truncation: ConvergenceTable,
    pub tlg_calls: Vec<u64>,
    pub elapsed: f64,
}

/// Poisson with Dirichlet data on the aligned square and a Neumann condition
/// on the curved inner boundary; exact solution `r^4 cos(3 theta)`.
pub fn poisson2d_experiment(config: &RunConfig) -> Result<EllipticExperimentReport> {
    let start = Instant::now();
    let exact = |x: &[f64]| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let th = x[1].atan2(x[0]);
        r.powi(4) * (3.0 * th).cos()
    };
    let f = |x: &[f64]| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let th = x[1].atan2(x[0]);
        7.0 * r * r * (3.0 * th).cos()
    };
    let grad = |x: &[f64]| -> [f64; 2] {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let th = x[1].atan2(x[0]);
        let (s, c) = th.sin_cos();
        let ur = 4.0 * r.powi(3) * (3.0 * th).cos();
        let ut = -3.0 * r.powi(3) * (3.0 * th).sin();
        [ur * c - ut * s, ur * s + ut * c]
    };
    let domain = Domain {
        clip: Some((vec![-0.5, -0.5], vec![0.5, 0.5])),
        shape: Some(Shape::Flower {
            center: vec![0.0, 0.0],
            r0: 0.25,
            amp: 0.05,
            k: 6,
        }),
        complement: true,
    };
    let closure = AlignedClosure {
        lo: vec![-0.5, -0.5],
        hi: vec![0.5, 0.5],
        data: Arc::new(move |x: &[f64]| exact(x)),
    };
    let bcs = BcSet {
        shape: Some(BcSpec::neumann(Arc::new(move |x: &[f64], _| {
            // outward normal of the domain on the flower piece is computed by
            // the classifier; the data here is du/dn with that normal, which
            // the solver evaluates at the boundary point.  Supply grad·n via a
            // closure over the hit normal: the BC data receives the boundary
            // point only, so bake the normal from the flower geometry.
            let hit = Shape::Flower {
                center: vec![0.0, 0.0],
                r0: 0.25,
                amp: 0.05,
                k: 6,
            }
            .closest(x)
            .expect("flower has a boundary");
            let gv = grad(x);
            // domain lies outside the flower: outward normal of the domain
            // is the negated flower normal
            -(gv[0] * hit.normal[0] + gv[1] * hit.normal[1])
        }))),
        clip: Some(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x)))),
    };
    let cfg = config.disc_config();
    let mut solution = ConvergenceTable::default();
    let mut truncation = ConvergenceTable::default();
    let mut calls = Vec::new();
    for &nref in &config.grids {
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.5, -0.5], &[0.5, 0.5], 3)?;
        let rep = solve_elliptic_closed(
            &domain,
            &grid,
            &OperatorSpec::laplacian(2),
            &bcs,
            &f,
            &cfg,
            config.eta,
            Some(&exact),
            Some(&closure),
        )?;
        solution.push(nref, rep.solution_errors.unwrap());
        truncation.push(nref, rep.truncation_errors.unwrap());
        calls.push(rep.stats.tlg_calls);
    }
    Ok(EllipticExperimentReport {
        solution,
        truncation,
        tlg_calls: calls,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Elliptic equation with a cross-derivative term on the rotated unit square
/// (or the axis-aligned unit square with `(a,b,c) = (1,0,2)` when
/// `rotated = false`); exact solution `sin(2 pi x) cos(2 pi y)`.
pub fn elliptic_cross_experiment(
    config: &RunConfig,
    rotated: bool,
) -> Result<EllipticExperimentReport> {
    use std::f64::consts::PI;
    let start = Instant::now();
    let exact = |x: &[f64]| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos();
    let (a, b, c) = if rotated {
        (1.25, -(3.0f64).sqrt() / 2.0, 1.75)
    } else {
        (1.0, 0.0, 2.0)
    };
    let f = move |x: &[f64]| {
        let s2x = (2.0 * PI * x[0]).sin();
        let c2x = (2.0 * PI * x[0]).cos();
        let s2y = (2.0 * PI * x[1]).sin();
        let c2y = (2.0 * PI * x[1]).cos();
        -4.0 * PI * PI * ((a + c) * s2x * c2y + b * c2x * s2y)
    };
    let op = OperatorSpec::second_order_2d(a, b, c);
    let cfg = config.disc_config();
    let mut solution = ConvergenceTable::default();
    let mut truncation = ConvergenceTable::default();
    let mut calls = Vec::new();
    for &nref in &config.grids {
        let h = 1.0 / nref as f64;
        let rep: EllipticReport = if rotated {
            let angle = PI / 6.0;
            let (s, co) = angle.sin_cos();
            // unit square rotated about its center
            let lo = vec![0.5 + (-0.5 * co + 0.5 * s), 0.5 + (-0.5 * s - 0.5 * co)];
            let domain = Domain::shape_only(Shape::RotatedBox {
                lo,
                size: vec![1.0, 1.0],
                angles: vec![angle],
            });
            let grid = Grid::covering(2, h, &[-0.19, -0.19], &[1.19, 1.19], 3)?;
            let bcs = BcSet {
                shape: Some(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x)))),
                clip: None,
            };
            solve_elliptic_closed(
                &domain,
                &grid,
                &op,
                &bcs,
                &f,
                &cfg,
                config.eta,
                Some(&exact),
                None,
            )?
        } else {
            let domain = Domain {
                clip: Some((vec![0.0, 0.0], vec![1.0, 1.0])),
                shape: None,
                complement: false,
            };
            let closure = AlignedClosure {
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
                data: Arc::new(move |x: &[f64]| exact(x)),
            };
            let grid = Grid::covering(2, h, &[0.0, 0.0], &[1.0, 1.0], 3)?;
            let bcs = BcSet {
                shape: None,
                clip: Some(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x)))),
            };
            solve_elliptic_closed(
                &domain,
                &grid,
                &op,
                &bcs,
                &f,
                &cfg,
                config.eta,
                Some(&exact),
                Some(&closure),
            )?
        };
        solution.push(nref, rep.solution_errors.unwrap());
        truncation.push(nref, rep.truncation_errors.unwrap());
        calls.push(rep.stats.tlg_calls);
    }
    Ok(EllipticExperimentReport {
        solution,
        truncation,
        tlg_calls: calls,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Three-dimensional Poisson on the unit cube minus an ellipsoid, Dirichlet
/// on both boundaries; exact `sin(2 pi x) cos(2 pi y) sin(2 pi z)`.
pub fn poisson3d_experiment(config: &RunConfig) -> Result<EllipticExperimentReport> {
    use std::f64::consts::PI;
    let start = Instant::now();
    let exact = |x: &[f64]| {
        (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() * (2.0 * PI * x[2]).sin()
    };
    let f = move |x: &[f64]| -12.0 * PI * PI * exact(x);
    let domain = Domain {
        clip: Some((vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0])),
        shape: Some(Shape::Ellipsoid {
            center: vec![0.5, 0.5, 0.5],
            semi: vec![0.25, 0.125, 0.25],
        }),
        complement: true,
    };
    let closure = AlignedClosure {
        lo: vec![0.0, 0.0, 0.0],
        hi: vec![1.0, 1.0, 1.0],
        data: Arc::new(move |x: &[f64]| exact(x)),
    };
    let bcs = BcSet {
        shape: Some(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x)))),
        clip: Some(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x)))),
    };
    let mut cfg = config.disc_config();
    cfg.extras = ExtrasRule::L1Ball(2);
    let mut solution = ConvergenceTable::default();
    let mut truncation = ConvergenceTable::default();
    let mut calls = Vec::new();
    for &nref in &config.grids {
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(3, h, &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 3)?;
        let rep = solve_elliptic_closed(
            &domain,
            &grid,
            &OperatorSpec::laplacian(3),
            &bcs,
            &f,
            &cfg,
            config.eta,
            Some(&exact),
            Some(&closure),
        )?;
        solution.push(nref, rep.solution_errors.unwrap());
        truncation.push(nref, rep.truncation_errors.unwrap());
        calls.push(rep.stats.tlg_calls);
    }
    Ok(EllipticExperimentReport {
        solution,
        truncation,
        tlg_calls: calls,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// parabolic experiments

pub struct ParabolicExperimentReport {
    pub solution: ConvergenceTable,
    pub elapsed: f64,
}

/// Heat equation with a Robin condition on a disk; the exact solution is a
/// spreading Gaussian, so the forcing vanishes identically.
pub fn heat_experiment(config: &RunConfig) -> Result<ParabolicExperimentReport> {
    let start = Instant::now();
    let nu = 0.1;
    let a_robin = 1.0;
    let center = [1.0, 1.0];
    let radius = 0.8;
    let phi = move |x: &[f64], t: f64| -> f64 {
        let s = t + 0.5;
        let rho2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
        10.0 / (4.0 * nu * s) * (-rho2 / (4.0 * nu * s)).exp()
    };
    let grad_phi = move |x: &[f64], t: f64| -> [f64; 2] {
        let s = t + 0.5;
        let p = phi(x, t);
        [
            -p * (x[0] - center[0]) / (2.0 * nu * s),
            -p * (x[1] - center[1]) / (2.0 * nu * s),
        ]
    };
    let domain = Domain::shape_only(Shape::Ellipsoid {
        center: center.to_vec(),
        semi: vec![radius, radius],
    });
    let g = move |x: &[f64], t: f64| -> f64 {
        // nu dphi/dn + a phi with the outward radial normal
        let nx = (x[0] - center[0]) / radius;
        let ny = (x[1] - center[1]) / radius;
        let gv = grad_phi(x, t);
        nu * (gv[0] * nx + gv[1] * ny) + a_robin * phi(x, t)
    };
    let bcs = BcSet {
        shape: Some(BcSpec::robin(a_robin, nu, Arc::new(g))),
        clip: None,
    };
    let cfg = config.disc_config();
    let mut solution = ConvergenceTable::default();
    for &nref in &config.grids {
        let h = 1.0 / nref as f64;
        let dt = 2.0 * h;
        let grid = Grid::covering(2, h, &[0.2, 0.2], &[1.8, 1.8], 3)?;
        let rep = run_heat(
            &domain,
            &grid,
            nu,
            &bcs,
            &|x| phi(x, 0.0),
            &|_, _| 0.0,
            1.0,
            dt,
            &cfg,
            config.eta,
        )?;
        let diffs: Vec<f64> = (0..rep.class.n_fd())
            .map(|i| {
                let x = rep.class.grid.center(&rep.class.fd_cells[i]);
                rep.field[i] - phi(&x, rep.t_end)
            })
            .collect();
        solution.push(nref, error_norms(&diffs, h, 2));
    }
    Ok(ParabolicExperimentReport {
        solution,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

pub struct RichardsonReport {
    /// One row per grid pair: errors between successive solutions.
    pub pair_errors: Vec<(u32, u32, f64, f64, f64, usize)>,
    /// Rates between successive pair errors.
    pub rates: Vec<(f64, f64, f64)>,
    pub elapsed: f64,
}

/// Advection-diffusion of a smeared front on an annulus with homogeneous
/// Neumann walls, advanced by the additive integrator; convergence measured
/// by Richardson comparison of successive grids at `T = 1`.
pub fn advdiff_experiment(config: &RunConfig) -> Result<RichardsonReport> {
    let start = Instant::now();
    let nu: f64 = 0.01;
    let center = [1.0, 1.0];
    let (r1, r2) = (0.25, 0.8);
    let omega = 0.4 * std::f64::consts::PI;
    let domain = Domain::shape_only(Shape::Annulus {
        center: center.to_vec(),
        r_inner: r1,
        r_outer: r2,
    });
    let vel = Arc::new(move |x: &[f64]| -> Vec<f64> {
        vec![-omega * (x[1] - center[1]), omega * (x[0] - center[0])]
    });
    let vmax = omega * r2;
    let adv = OperatorSpec::advection(2, vel, 0.1 * vmax);
    let bcs = BcSet {
        shape: Some(BcSpec::neumann(Arc::new(|_: &[f64], _| 0.0))),
        clip: None,
    };
    let u0 = move |x: &[f64]| -> f64 {
        let th = (x[1] - center[1]).atan2(x[0] - center[0]);
        let w = 6.0 * (4.0 * nu).sqrt();
        0.5 * libm::erf((std::f64::consts::PI - 6.0 * th) / w)
            + 0.5 * libm::erf((std::f64::consts::PI + 6.0 * th) / w)
    };
    let cfg = config.disc_config();
    let mut runs: Vec<(u32, NodeClassification, Vec<f64>)> = Vec::new();
    for &nref in &config.grids {
        let h = 1.0 / nref as f64;
        let dt = h;
        let grid = Grid::covering(2, h, &[0.2, 0.2], &[1.8, 1.8], 3)?;
        let rep = run_advection_diffusion(
            &domain, &grid, nu, &adv, &bcs, &u0, 1.0, dt, &cfg, config.eta,
        )?;
        runs.push((nref, rep.class, rep.field));
    }
    let mut pair_errors = Vec::new();
    for w in runs.windows(2) {
        let (gc, cc, uc) = (&w[0].0, &w[0].1, &w[0].2);
        let (gf, cf, uf) = (&w[1].0, &w[1].1, &w[1].2);
        let (linf, l1, l2, count) = richardson_errors((cc, uc), (cf, uf))?;
        pair_errors.push((*gc, *gf, linf, l1, l2, count));
    }
    let rates = pair_errors
        .windows(2)
        .map(|p| {
            (
                rate(p[0].2, p[1].2),
                rate(p[0].3, p[1].3),
                rate(p[0].4, p[1].4),
            )
        })
        .collect();
    Ok(RichardsonReport {
        pair_errors,
        rates,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// lattice-generation scenarios (gallery, conditioning, timing)

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Inside an ellipse: the boundary curves around the feasible nodes.
    Concave,
    /// Outside an ellipse clipped into view: boundary bulges into the nodes.
    Convex,
    /// Near the corner of a rotated box.
    BoxCorner,
    /// Inside an ellipsoid (three-dimensional).
    Ellipsoid3d,
    /// Near the corner of a rotated cube (three-dimensional).
    BoxCorner3d,
}

pub struct Scenario {
    pub kind: ScenarioKind,
    pub class: NodeClassification,
    /// The starting node: a representative irregular FD node.
    pub q: MultiIndex,
}

/// Build a unit-spacing classification for a gallery scenario and pick the
/// starting node deterministically (the irregular FD node nearest the
/// scenario's anchor point).
pub fn build_scenario(kind: ScenarioKind, n: usize) -> Result<Scenario> {
    let (domain, lo, hi, anchor): (Domain, Vec<f64>, Vec<f64>, Vec<f64>) = match kind {
        ScenarioKind::Concave => (
            Domain::shape_only(Shape::Ellipsoid {
                center: vec![-8.40, -6.28],
                semi: vec![16.0, 12.0],
            }),
            vec![-6.0, -6.0],
            vec![8.0, 6.0],
            vec![6.5, 4.5],
        ),
        ScenarioKind::Convex => (
            Domain::shape_only(Shape::Ellipsoid {
                center: vec![-10.88, -6.88],
                semi: vec![16.0, 12.0],
            }),
            vec![-6.0, -6.0],
            vec![8.0, 7.0],
            vec![4.0, 3.5],
        ),
        ScenarioKind::BoxCorner => (
            Domain::shape_only(Shape::RotatedBox {
                lo: vec![0.80, -0.32],
                size: vec![24.0, 24.0],
                angles: vec![std::f64::consts::PI / 6.0],
            }),
            vec![-6.0, -4.0],
            vec![10.0, 10.0],
            vec![0.80, -0.32],
        ),
        ScenarioKind::Ellipsoid3d => (
            Domain::shape_only(Shape::Ellipsoid {
                center: vec![0.0, 0.0, 0.0],
                semi: vec![4.8, 4.8, 4.8],
            }),
            vec![-6.0, -6.0, -6.0],
            vec![6.0, 6.0, 6.0],
            vec![3.0, 2.5, 2.0],
        ),
        ScenarioKind::BoxCorner3d => (
            Domain::shape_only(Shape::RotatedBox {
                lo: vec![2.0, 2.0, -0.5],
                size: vec![20.0, 20.0, 20.0],
                angles: vec![
                    std::f64::consts::FRAC_PI_4,
                    std::f64::consts::FRAC_PI_4,
                    std::f64::consts::FRAC_PI_4,
                ],
            }),
            vec![-4.0, -4.0, -4.0],
            vec![8.0, 8.0, 8.0],
            vec![2.0, 2.0, -0.5],
        ),
    };
    let d = lo.len();
    let grid = Grid::covering(d, 1.0, &lo, &hi, 2)?;
    let class = classify_nodes(&domain, &grid, 0.25)?;
    let radius = crate::disc::regular_radius(4);
    let mut best: Option<(f64, MultiIndex)> = None;
    for fd_id in 0..class.n_fd() {
        let cell = class.fd_cells[fd_id];
        if crate::disc::is_regular(&class, &cell, radius) {
            continue;
        }
        let x = class.grid.center(&cell);
        let dist: f64 = x
            .iter()
            .zip(&anchor)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if best.map(|(bd, bc)| dist < bd || (dist == bd && cell < bc)).unwrap_or(true) {
            best = Some((dist, cell));
        }
    }
    let q = best
        .ok_or_else(|| Error::NoLatticeFound("scenario has no irregular nodes".into()))?
        .1;
    let _ = n;
    Ok(Scenario { kind, class, q })
}

pub struct GalleryResult {
    pub lattice: TriangularLattice,
    pub stats: SearchStats,
    pub n: usize,
}

/// Generate the lattice for a scenario with the cube strategy.
pub fn run_gallery(scenario: &Scenario, n: usize, tlg: &TlgConfig) -> Result<GalleryResult> {
    let fd_id = scenario
        .class
        .fd_id(&scenario.q)
        .expect("scenario start is an FD node");
    let mut stats = crate::disc::AssemblyStats::default();
    let lattice = crate::disc::generate_lattice(
        &scenario.class,
        fd_id,
        n,
        1,
        &OperatorKind::Centered,
        tlg,
        &mut stats,
    )?;
    Ok(GalleryResult {
        lattice,
        stats: SearchStats {
            nodes_expanded: stats.tlg_nodes_expanded,
            prunings: 0,
            solutions_found: 1,
            elapsed: std::time::Duration::default(),
        },
        n,
    })
}

/// Condition-number sweep: the scenario's lattice plus 0..=max_extras nearest
/// feasible nodes in Manhattan order.
pub fn condnum_sweep(
    scenario: &Scenario,
    n: usize,
    max_extras: usize,
    tlg: &TlgConfig,
) -> Result<Vec<(usize, f64)>> {
    let gallery = run_gallery(scenario, n, tlg)?;
    let class = &scenario.class;
    let d = class.grid.d;
    let q = scenario.q;
    let mut cells = gallery.lattice.points_global();
    cells.sort_unstable();
    let reach = (n + 3) as i64;
    let lo = MultiIndex::new(&(0..d).map(|i| q.get(i) - reach).collect::<Vec<_>>());
    let hi = MultiIndex::new(&(0..d).map(|i| q.get(i) + reach).collect::<Vec<_>>());
    let mut candidates: Vec<MultiIndex> = crate::index::iter_box(&lo, &hi)
        .into_iter()
        .filter(|c| c.sub(&q).norm1() <= reach && class.is_fd(c) && !cells.contains(c))
        .collect();
    candidates.sort_by_key(|c| (c.sub(&q).norm1(), *c));
    let basis = monomial_basis(d, n);
    let mut out = Vec::new();
    for extras in 0..=max_extras {
        let mut sites: Vec<Vec<f64>> = cells
            .iter()
            .map(|c| (0..d).map(|i| (c.get(i) - q.get(i)) as f64).collect())
            .collect();
        for c in candidates.iter().take(extras) {
            sites.push((0..d).map(|i| (c.get(i) - q.get(i)) as f64).collect());
        }
        let m = sample_matrix(&sites, &basis);
        out.push((extras, condition_number(&m, CondNorm::Two)));
    }
    Ok(out)
}

pub struct TimingReport {
    pub calls: usize,
    pub seconds_type1: f64,
    pub seconds_type2: f64,
    pub ratio: f64,
    pub nodes_type1: Vec<u64>,
    pub nodes_type2: Vec<u64>,
}

/// Identical lattice-generation call set under both table kinds on the
/// truncation geometry.
pub fn timing_experiment(config: &RunConfig, nref: u32) -> Result<TimingReport> {
    let d = config.d;
    let n = config.n;
    let domain = truncation_domain(d);
    let h = 1.0 / nref as f64;
    let grid = Grid::covering(d, h, &vec![0.0; d], &vec![1.0; d], 4)?;
    let class = classify_nodes(&domain, &grid, config.eta)?;
    let radius = crate::disc::regular_radius(if n >= 6 { 6 } else { 4 });
    // the call set: one centered first-ring cube per irregular node
    let mut problems = Vec::new();
    for fd_id in 0..class.n_fd() {
        let cell = class.fd_cells[fd_id];
        let x = class.grid.center(&cell);
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            continue;
        }
        if crate::disc::is_regular(&class, &cell, radius) {
            continue;
        }
        let plan = crate::disc::cfs_plan(&class, fd_id, n, &OperatorKind::Centered);
        for cube in plan.rings.concat() {
            let inside = (0..d)
                .all(|i| cell.get(i) >= cube.lo.get(i) && cell.get(i) <= cube.lo.get(i) + n as i64);
            if !inside {
                continue;
            }
            let feasible = crate::disc::cube_feasible_set(&class, &cube, n);
            if feasible.contains_global(&cell) {
                problems.push((feasible, cell));
                break;
            }
        }
    }
    let run = |kind: TestSetKind| -> Result<(f64, Vec<u64>)> {
        // warm the table cache outside the timed region
        crate::testset::test_sets(kind, d, n)?;
        let mut nodes = Vec::with_capacity(problems.len());
        let start = Instant::now();
        for (feasible, q) in &problems {
            let problem = TlgProblem {
                feasible: feasible.clone(),
                q: *q,
                kind,
                ordering: config.ordering_rule(),
                stop_at_first: true,
                allow_degree_above_cap: true,
            };
            let (_sols, st) = tlg_solve(&problem)?;
            nodes.push(st.nodes_expanded);
        }
        Ok((start.elapsed().as_secs_f64(), nodes))
    };
    let (t1, n1) = run(TestSetKind::TypeI)?;
    let (t2, n2) = run(TestSetKind::TypeII)?;
    Ok(TimingReport {
        calls: problems.len(),
        seconds_type1: t1,
        seconds_type2: t2,
        ratio: t1 / t2.max(1e-12),
        nodes_type1: n1,
        nodes_type2: n2,
    })
}
