use plg_core::disc::{BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{bicgstab, ilu0, solve_linear, SolveMethod, SparseSystem};
use plg_core::solver::boundary_data;
use std::sync::Arc;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| {
        let sx = (x[0] * 1.3 + 0.2).sin();
        let cy = (x[1] * 1.1 - 0.4).cos();
        -(1.3f64 * 1.3 + 1.1 * 1.1) * sx * cy
    };
    let domain = Domain::shape_only(Shape::Ellipsoid {
        center: vec![0.0, 0.0],
        semi: vec![0.8, 0.8],
    });
    let h = 1.0 / 32.0;
    let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
    let class = classify_nodes(&domain, &grid, 0.25).unwrap();
    println!("n_fd = {}", class.n_fd());
    let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
    let disc = plg_core::disc::assemble_operator(&class, &OperatorSpec::laplacian(2), Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
    let (a, bcw) = disc.to_matrix(class.n_fd());
    let g = boundary_data(&class, &bcs, 0.0);
    let rhs: Vec<f64> = (0..class.n_fd())
        .map(|i| f(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i])
        .collect();
    // diag stats
    let mut min_diag = f64::INFINITY;
    let mut zero_diag = 0;
    for i in 0..a.n {
        let mut dv = 0.0;
        let mut rowmax: f64 = 0.0;
        for k in a.indptr[i]..a.indptr[i + 1] {
            if a.indices[k] as usize == i { dv = a.data[k]; }
            rowmax = rowmax.max(a.data[k].abs());
        }
        if dv == 0.0 { zero_diag += 1; }
        min_diag = min_diag.min(dv.abs() / rowmax);
    }
    println!("zero diags: {zero_diag}, min |diag|/rowmax = {min_diag:.3e}");
    // direct (dense) for truth
    let sys = SparseSystem { a: a.clone(), rhs: rhs.clone() };
    match solve_linear(&sys, SolveMethod::Direct) {
        Ok(x) => {
            let mut linf: f64 = 0.0;
            for (i, cell) in class.fd_cells.iter().enumerate() {
                linf = linf.max((x[i] - exact(&class.grid.center(cell))).abs());
            }
            println!("direct ok, Linf err = {linf:.3e}");
        }
        Err(e) => println!("direct failed: {e}"),
    }
    // ILU-BiCGStab trace on the equilibrated system
    let norms = a.row_inf_norms();
    let scale: Vec<f64> = norms.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect();
    let mut a_s = a.clone();
    a_s.scale_rows(&scale);
    let b: Vec<f64> = rhs.iter().zip(&scale).map(|(v, s)| v * s).collect();
    let pre = ilu0(&a_s).unwrap();
    let mut x = vec![0.0; a.n];
    match bicgstab(&a_s, &b, &mut x, &pre, 1e-12, 500) {
        Ok(rep) => println!("bicgstab: it {} res {:.3e}", rep.iterations, rep.residual),
        Err(e) => println!("bicgstab err: {e}"),
    }
}
