//! End-to-end drivers: elliptic solves, parabolic time marching, error
//! norms, and Richardson comparisons between nested grids.

use crate::disc::{assemble_operator, assemble_operator_closed, AlignedClosure, AssemblyStats, BcSet, DiscConfig, Discretization, OperatorSpec};
use crate::error::{Error, Result};
use crate::geom::{classify_nodes, Domain, Grid, NodeClassification};
use crate::sparse::{solve_linear, Csr, PreparedSolver, SolveMethod, SparseSystem};
use crate::timestep::{ark_step, esdirk_step, ButcherTableau, AffineRhs, ESDIRK_GAMMA};

/// Low-order structural surrogate of a second-order operator, used to
/// precondition the fourth-order systems: `shift*I + op_scale * sum_i
/// a_i(x) D2_i` with absorbing closure at missing neighbors.  For elliptic
/// coefficients this is (up to sign) an M-matrix, so its incomplete
/// factorization is stable where the high-order matrix's own is not.
pub fn operator_surrogate(
    class: &NodeClassification,
    op: &OperatorSpec,
    shift: f64,
    op_scale: f64,
) -> Csr {
    let d = class.grid.d;
    let h2 = class.grid.h * class.grid.h;
    let n = class.n_fd();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let cell = class.fd_cells[i];
        let x = class.grid.center(&cell);
        // per-axis second-derivative coefficients; cross and lower-order
        // terms do not contribute to the surrogate
        let mut axis_coeff = vec![0.0; d];
        for (alpha, coeff) in &op.terms {
            for (a, ac) in axis_coeff.iter_mut().enumerate() {
                if alpha.get(a) == 2 && alpha.sum() == 2 {
                    *ac += coeff.eval(&x);
                }
            }
        }
        let mut row = Vec::with_capacity(2 * d + 1);
        let mut center = shift;
        for axis in 0..d {
            let c = op_scale * axis_coeff[axis] / h2;
            if c == 0.0 {
                continue;
            }
            center -= 2.0 * c;
            for dir in [-1i64, 1] {
                if let Some(j) = class.fd_id(&cell.offset(axis, dir)) {
                    row.push((j, c));
                }
            }
        }
        row.push((i, center));
        rows.push(row);
    }
    Csr::from_rows(n, rows)
}

/// Per-unknown flags marking the least-squares stencil rows.
pub fn irregular_flags(disc: &Discretization, n: usize) -> Vec<bool> {
    let mut flags = vec![false; n];
    for row in &disc.rows {
        flags[row.center] = !row.meta.regular;
    }
    flags
}

/// `(L_inf, L1, L2)` over FD nodes: `L1 = h^D sum|e|`, `L2 = (h^D sum e^2)^1/2`.
pub fn error_norms(errors: &[f64], h: f64, d: usize) -> (f64, f64, f64) {
    let hd = h.powi(d as i32);
    let linf = errors.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let l1 = hd * errors.iter().map(|e| e.abs()).sum::<f64>();
    let l2 = (hd * errors.iter().map(|e| e * e).sum::<f64>()).sqrt();
    (linf, l1, l2)
}

/// Pick the plain solve method by system size: dense direct for small
/// systems, preconditioned Krylov beyond (for diagonally dominant matrices;
/// elliptic drivers use the surrogate-preconditioned path instead).
pub fn auto_method(n: usize) -> SolveMethod {
    if n <= 1500 {
        SolveMethod::Direct
    } else {
        SolveMethod::Krylov
    }
}

pub struct EllipticReport {
    pub class: NodeClassification,
    pub field: Vec<f64>,
    pub stats: AssemblyStats,
    /// Solution error norms against the exact solution, when provided.
    pub solution_errors: Option<(f64, f64, f64)>,
    /// Truncation norms of the assembled operator on the exact solution.
    pub truncation_errors: Option<(f64, f64, f64)>,
}

/// Assemble and solve `L u = f` with the given boundary conditions.
#[allow(clippy::too_many_arguments)]
pub fn solve_elliptic(
    domain: &Domain,
    grid: &Grid,
    op: &OperatorSpec,
    bcs: &BcSet,
    f: &dyn Fn(&[f64]) -> f64,
    cfg: &DiscConfig,
    eta: f64,
    exact: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<EllipticReport> {
    solve_elliptic_closed(domain, grid, op, bcs, f, cfg, eta, exact, None)
}

/// As [`solve_elliptic`] with an optional aligned-face ghost closure.
#[allow(clippy::too_many_arguments)]
pub fn solve_elliptic_closed(
    domain: &Domain,
    grid: &Grid,
    op: &OperatorSpec,
    bcs: &BcSet,
    f: &dyn Fn(&[f64]) -> f64,
    cfg: &DiscConfig,
    eta: f64,
    exact: Option<&dyn Fn(&[f64]) -> f64>,
    closure: Option<&AlignedClosure>,
) -> Result<EllipticReport> {
    let class = classify_nodes(domain, grid, eta)?;
    if class.n_fd() == 0 {
        return Err(Error::InvalidArgument("no FD nodes in the domain".into()));
    }
    let disc = assemble_operator_closed(&class, op, Some(bcs), cfg, closure)?;
    let (a, bcw, fixed) = disc.to_matrix(class.n_fd());
    let g = boundary_data(&class, bcs, 0.0);
    let rhs: Vec<f64> = (0..class.n_fd())
        .map(|i| f(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i] - fixed[i])
        .collect();
    let surrogate = operator_surrogate(&class, op, 0.0, 1.0);
    let irregular = irregular_flags(&disc, class.n_fd());
    let solver = PreparedSolver::with_surrogate(a, Some(surrogate), Some(&irregular))?;
    let field = solver.solve_with_guess(&rhs, &vec![0.0; class.n_fd()])?;

    let (solution_errors, truncation_errors) = match exact {
        None => (None, None),
        Some(u) => {
            let u_ex: Vec<f64> = (0..class.n_fd())
                .map(|i| u(&class.grid.center(&class.fd_cells[i])))
                .collect();
            let diff: Vec<f64> = field.iter().zip(&u_ex).map(|(a, b)| a - b).collect();
            let sol = error_norms(&diff, grid.h, grid.d);
            let lu = disc.apply(&u_ex, &g);
            let tr: Vec<f64> = (0..class.n_fd())
                .map(|i| lu[i] - f(&class.grid.center(&class.fd_cells[i])))
                .collect();
            let trn = error_norms(&tr, grid.h, grid.d);
            (Some(sol), Some(trn))
        }
    };
    Ok(EllipticReport {
        class,
        field,
        stats: disc.stats,
        solution_errors,
        truncation_errors,
    })
}

/// Boundary datum per FD node at time `t` (zero away from boundary nodes).
pub fn boundary_data(class: &NodeClassification, bcs: &BcSet, t: f64) -> Vec<f64> {
    (0..class.n_fd())
        .map(|i| match &class.hits[i] {
            Some(hit) => match bcs.for_piece(hit.piece) {
                Some(spec) => (spec.data)(&hit.point, t),
                None => 0.0,
            },
            None => 0.0,
        })
        .collect()
}

/// Identity-minus-scaled-operator matrix `I - scale * A`.
pub fn shifted_identity(a: &Csr, scale: f64) -> Csr {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); a.n];
    for i in 0..a.n {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for k in a.indptr[i]..a.indptr[i + 1] {
            row.push((a.indices[k] as usize, -scale * a.data[k]));
        }
        row.push((i, 1.0));
        rows[i] = row;
    }
    Csr::from_rows(a.n, rows)
}

fn scaled(a: &Csr, s: f64) -> Csr {
    let mut out = a.clone();
    for v in &mut out.data {
        *v *= s;
    }
    out
}

pub struct ParabolicReport {
    pub class: NodeClassification,
    pub field: Vec<f64>,
    pub t_end: f64,
    pub steps: usize,
    pub stats: AssemblyStats,
}

/// March `du/dt = nu * Lap u + f` to `t_end` with the ESDIRK integrator;
/// boundary conditions may carry time-dependent data.
#[allow(clippy::too_many_arguments)]
pub fn run_heat(
    domain: &Domain,
    grid: &Grid,
    nu: f64,
    bcs: &BcSet,
    u0: &dyn Fn(&[f64]) -> f64,
    forcing: &dyn Fn(&[f64], f64) -> f64,
    t_end: f64,
    dt: f64,
    cfg: &DiscConfig,
    eta: f64,
) -> Result<ParabolicReport> {
    let class = classify_nodes(domain, grid, eta)?;
    let op = OperatorSpec::laplacian(grid.d);
    let disc = assemble_operator(&class, &op, Some(bcs), cfg)?;
    let n = class.n_fd();
    let (a, bcw, fixed) = disc.to_matrix(n);
    let a_nu = scaled(&a, nu);
    let m = shifted_identity(&a_nu, dt * ESDIRK_GAMMA);
    let m_surrogate = operator_surrogate(&class, &op, 1.0, -dt * ESDIRK_GAMMA * nu);
    let irregular = irregular_flags(&disc, n);
    let solver = PreparedSolver::with_surrogate(m, Some(m_surrogate), Some(&irregular))?;
    let tableau = crate::timestep::esdirk4();

    let centers: Vec<Vec<f64>> = (0..n)
        .map(|i| class.grid.center(&class.fd_cells[i]))
        .collect();
    let source = |t: f64| -> Vec<f64> {
        let g = boundary_data(&class, bcs, t);
        (0..n)
            .map(|i| nu * (bcw[i] * g[i] + fixed[i]) + forcing(&centers[i], t))
            .collect()
    };
    let rhs = AffineRhs {
        matrix: &a_nu,
        source: &source,
    };
    let mut u: Vec<f64> = centers.iter().map(|x| u0(x)).collect();
    let steps = (t_end / dt).round() as usize;
    if ((steps as f64) * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidArgument(
            "t_end must be an integer multiple of dt".into(),
        ));
    }
    let mut t = 0.0;
    for k in 0..steps {
        u = esdirk_step(&tableau, &rhs, &solver, &u, t, dt)?;
        t = (k + 1) as f64 * dt;
    }
    Ok(ParabolicReport {
        class,
        field: u,
        t_end: t,
        steps,
        stats: disc.stats,
    })
}

/// March `du/dt + v·grad u = nu * Lap u` (advection explicit, diffusion
/// implicit) to `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn run_advection_diffusion(
    domain: &Domain,
    grid: &Grid,
    nu: f64,
    adv: &OperatorSpec,
    bcs: &BcSet,
    u0: &dyn Fn(&[f64]) -> f64,
    t_end: f64,
    dt: f64,
    cfg: &DiscConfig,
    eta: f64,
) -> Result<ParabolicReport> {
    let class = classify_nodes(domain, grid, eta)?;
    let n = class.n_fd();
    let lap = OperatorSpec::laplacian(grid.d);
    let disc_i = assemble_operator(&class, &lap, Some(bcs), cfg)?;
    let disc_e = assemble_operator(&class, adv, Some(bcs), cfg)?;
    let mut stats = disc_i.stats;
    stats.tlg_calls += disc_e.stats.tlg_calls;
    stats.irregular_rows += disc_e.stats.irregular_rows;
    let (a_i, bcw_i, fixed_i) = disc_i.to_matrix(n);
    let (a_e, bcw_e, fixed_e) = disc_e.to_matrix(n);
    let a_diff = scaled(&a_i, nu);
    let a_adv = scaled(&a_e, -1.0);
    let m = shifted_identity(&a_diff, dt * ESDIRK_GAMMA);
    let m_surrogate = operator_surrogate(&class, &lap, 1.0, -dt * ESDIRK_GAMMA * nu);
    let irregular = irregular_flags(&disc_i, n);
    let solver = PreparedSolver::with_surrogate(m, Some(m_surrogate), Some(&irregular))?;
    let tableau = crate::timestep::ark4();

    let src_i = |t: f64| -> Vec<f64> {
        let g = boundary_data(&class, bcs, t);
        (0..n).map(|i| nu * (bcw_i[i] * g[i] + fixed_i[i])).collect()
    };
    let src_e = |t: f64| -> Vec<f64> {
        let g = boundary_data(&class, bcs, t);
        (0..n).map(|i| -(bcw_e[i] * g[i] + fixed_e[i])).collect()
    };
    let rhs_i = AffineRhs {
        matrix: &a_diff,
        source: &src_i,
    };
    let rhs_e = AffineRhs {
        matrix: &a_adv,
        source: &src_e,
    };
    let centers: Vec<Vec<f64>> = (0..n)
        .map(|i| class.grid.center(&class.fd_cells[i]))
        .collect();
    let mut u: Vec<f64> = centers.iter().map(|x| u0(x)).collect();
    let steps = (t_end / dt).round() as usize;
    let mut t = 0.0;
    for k in 0..steps {
        u = ark_step(&tableau, &rhs_e, &rhs_i, &solver, &u, t, dt)?;
        t = (k + 1) as f64 * dt;
    }
    Ok(ParabolicReport {
        class,
        field: u,
        t_end: t,
        steps,
        stats,
    })
}

/// Richardson comparison of a field with the same problem solved at half the
/// spacing: the fine field is brought to each coarse center by fourth-order
/// tensor midpoint interpolation, and the difference is measured over the
/// coarse FD nodes whose full interpolation support is available.
pub fn richardson_errors(
    coarse: (&NodeClassification, &[f64]),
    fine: (&NodeClassification, &[f64]),
) -> Result<(f64, f64, f64, usize)> {
    let (cc, uc) = coarse;
    let (cf, uf) = fine;
    let d = cc.grid.d;
    if (cf.grid.h * 2.0 - cc.grid.h).abs() > 1e-12 * cc.grid.h {
        return Err(Error::InvalidArgument(
            "grids are not nested with ratio 2".into(),
        ));
    }
    // 1-D midpoint weights at offsets 2i-1 .. 2i+2
    let w4 = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];
    let mut diffs = Vec::new();
    'next_cell: for (i, cell) in cc.fd_cells.iter().enumerate() {
        // tensor support on the fine grid
        let mut support: Vec<(crate::index::MultiIndex, f64)> =
            vec![(crate::index::MultiIndex::zero(d), 1.0)];
        for axis in 0..d {
            let base = 2 * cell.get(axis);
            let mut next = Vec::with_capacity(support.len() * 4);
            for (off, w) in &support {
                for (k, wk) in w4.iter().enumerate() {
                    let mut q = *off;
                    q.set(axis, base - 1 + k as i64);
                    next.push((q, w * wk));
                }
            }
            support = next;
        }
        let mut val = 0.0;
        for (fc, w) in &support {
            match cf.fd_id(fc) {
                Some(j) => val += w * uf[j],
                None => continue 'next_cell,
            }
        }
        diffs.push(uc[i] - val);
    }
    if diffs.is_empty() {
        return Err(Error::InvalidArgument(
            "no comparable nodes between the grids".into(),
        ));
    }
    let (linf, l1, l2) = error_norms(&diffs, cc.grid.h, d);
    Ok((linf, l1, l2, diffs.len()))
}

/// `log2(err_coarse / err_fine)` convergence rate.
pub fn rate(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).log2()
}

pub use crate::timestep::esdirk4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{BcSpec, ExtrasRule};
    use crate::geom::Shape;
    use crate::index::MultiIndex;
    use std::sync::Arc;

    #[test]
    fn error_norm_oracle() {
        // cross-check against a naive double loop on a 10x10 grid
        let mut vals = Vec::new();
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..100 {
            vals.push(rng.next_f64() * 2.0 - 1.0);
        }
        let h = 0.1;
        let (linf, l1, l2) = error_norms(&vals, h, 2);
        let mut nl1 = 0.0;
        let mut nl2 = 0.0;
        let mut nli = 0.0f64;
        for v in &vals {
            nl1 += v.abs() * h * h;
            nl2 += v * v * h * h;
            nli = nli.max(v.abs());
        }
        assert!((l1 - nl1).abs() < 1e-14);
        assert!((l2 - nl2.sqrt()).abs() < 1e-14);
        assert_eq!(linf, nli);
        // constants: L_inf = c, L1 = N h^D c
        let cvals = vec![0.5; 7];
        let (ci, c1, _) = error_norms(&cvals, 0.5, 1);
        assert_eq!(ci, 0.5);
        assert!((c1 - 7.0 * 0.5 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let domain = Domain::shape_only(Shape::Ellipsoid {
            center: vec![0.5, 0.5],
            semi: vec![0.3, 0.25],
        });
        let grid = Grid::covering(2, 1.0 / 16.0, &[0.0, 0.0], &[1.0, 1.0], 2).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(|_, _| 0.0)));
        let rep = solve_elliptic(
            &domain,
            &grid,
            &OperatorSpec::laplacian(2),
            &bcs,
            &|_| 0.0,
            &DiscConfig::fourth_order_2d(),
            0.25,
            None,
        )
        .unwrap();
        for v in &rep.field {
            assert!(v.abs() < 1e-11);
        }
    }

    #[test]
    fn elliptic_fourth_order_on_disk() {
        // manufactured Laplace problem on a disk: two grids, rate ~ 4
        let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
        let f = |x: &[f64]| {
            // Laplacian of the exact solution
            let sx = (x[0] * 1.3 + 0.2).sin();
            let cy = (x[1] * 1.1 - 0.4).cos();
            -(1.3f64 * 1.3 + 1.1 * 1.1) * sx * cy
        };
        let domain = Domain::shape_only(Shape::Ellipsoid {
            center: vec![0.0, 0.0],
            semi: vec![0.8, 0.8],
        });
        let mut errs = Vec::new();
        for &nref in &[16usize, 32] {
            let h = 1.0 / nref as f64;
            let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
            let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| {
                exact(x)
            })));
            let rep = solve_elliptic(
                &domain,
                &grid,
                &OperatorSpec::laplacian(2),
                &bcs,
                &f,
                &DiscConfig::fourth_order_2d(),
                0.25,
                Some(&exact),
            )
            .unwrap();
            errs.push(rep.solution_errors.unwrap().0);
        }
        let r = rate(errs[0], errs[1]);
        assert!(r > 3.2 && r < 5.2, "observed rate {r} (errs {errs:?})");
    }

    #[test]
    fn discrete_maximum_principle_sanity() {
        // harmonic exact solution with boundary data in [-1, 1]: interior
        // values stay within the data range up to 10x the solution error
        let exact = |x: &[f64]| x[0] * x[0] - x[1] * x[1];
        let domain = Domain::shape_only(Shape::Ellipsoid {
            center: vec![0.0, 0.0],
            semi: vec![0.9, 0.85],
        });
        let grid = Grid::covering(2, 1.0 / 24.0, &[-0.9, -0.85], &[0.9, 0.85], 3).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
        let rep = solve_elliptic(
            &domain,
            &grid,
            &OperatorSpec::laplacian(2),
            &bcs,
            &|_| 0.0,
            &DiscConfig::fourth_order_2d(),
            0.25,
            Some(&exact),
        )
        .unwrap();
        let linf = rep.solution_errors.unwrap().0;
        let eps = 10.0 * linf;
        for v in &rep.field {
            assert!(*v >= -1.0 - eps && *v <= 1.0 + eps);
        }
    }

    #[test]
    fn richardson_constructed_rates() {
        // identical fields give zero error; a c*h^4 pattern gives rate 4
        let domain = Domain::everything();
        let mk = |h: f64| {
            let grid = Grid::new(
                2,
                h,
                MultiIndex::new(&[0, 0]),
                MultiIndex::new(&[(1.0 / h) as i64 - 1, (1.0 / h) as i64 - 1]),
            )
            .unwrap();
            classify_nodes(&domain, &grid, 0.25).unwrap()
        };
        let smooth = |x: &[f64]| (x[0] * 2.1).sin() + (x[1] * 1.7).cos();
        let c0 = mk(1.0 / 8.0);
        let c1 = mk(1.0 / 16.0);
        let c2 = mk(1.0 / 32.0);
        // perturbation large enough that the transfer error of the smooth
        // part stays negligible against the h^4 pattern being measured
        let field = |c: &NodeClassification, h: f64| -> Vec<f64> {
            c.fd_cells
                .iter()
                .map(|cell| {
                    let x = c.grid.center(cell);
                    smooth(&x) + 400.0 * h.powi(4) * (x[0] * 3.0).sin()
                })
                .collect()
        };
        let u0 = field(&c0, 1.0 / 8.0);
        let u1 = field(&c1, 1.0 / 16.0);
        let u2 = field(&c2, 1.0 / 32.0);
        // samples of one cubic are reproduced exactly by the transfer
        let cubic = |x: &[f64]| 1.0 + x[0] - 2.0 * x[1] + x[0] * x[0] * x[1] + x[1].powi(3);
        let cube_on = |c: &NodeClassification| -> Vec<f64> {
            c.fd_cells
                .iter()
                .map(|cell| cubic(&c.grid.center(cell)))
                .collect()
        };
        let (zi, _, _, _) = richardson_errors((&c1, &cube_on(&c1)), (&c2, &cube_on(&c2))).unwrap();
        assert!(zi < 1e-12, "cubic transfer residual {zi}");
        let (_, e01, _, n01) = richardson_errors((&c0, &u0), (&c1, &u1)).unwrap();
        let (_, e12, _, n12) = richardson_errors((&c1, &u1), (&c2, &u2)).unwrap();
        assert!(n01 > 0 && n12 > 0);
        let r = rate(e01, e12);
        assert!((r - 4.0).abs() < 0.35, "rate {r}");
    }

    #[test]
    fn heat_step_reduces_to_exact_decay() {
        // spatially uniform initial data with Robin data chosen so the field
        // stays uniform: du/dt = 0 recovers the initial value
        let domain = Domain::shape_only(Shape::Ellipsoid {
            center: vec![0.0, 0.0],
            semi: vec![0.6, 0.6],
        });
        let grid = Grid::covering(2, 1.0 / 12.0, &[-0.6, -0.6], &[0.6, 0.6], 2).unwrap();
        let bcs = BcSet::uniform(BcSpec::robin(1.0, 0.1, Arc::new(|_, _| 2.0)));
        let rep = run_heat(
            &domain,
            &grid,
            0.1,
            &bcs,
            &|_| 2.0,
            &|_, _| 0.0,
            0.25,
            0.125,
            &DiscConfig {
                n: 4,
                regular_order: 4,
                extras: ExtrasRule::Count(4),
                tlg: Default::default(),
            },
            0.25,
        )
        .unwrap();
        for v in &rep.field {
            assert!((v - 2.0).abs() < 1e-8, "drifted to {v}");
        }
    }
}
