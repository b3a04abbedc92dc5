use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, NodeLabel, Shape};
use plg_core::solver::{boundary_data, operator_surrogate, irregular_flags};
use plg_core::sparse::PreparedSolver;
use std::sync::Arc;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let lap = |x: &[f64]| -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let nref = 64usize;
    let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
    let h = 1.0 / nref as f64;
    let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
    let class = classify_nodes(&domain, &grid, 0.25).unwrap();
    let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
    let op = OperatorSpec::laplacian(2);
    let disc = assemble_operator(&class, &op, Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
    let n = class.n_fd();
    let (a, bcw, fixed) = disc.to_matrix(n);
    let g = boundary_data(&class, &bcs, 0.0);
    let rhs: Vec<f64> = (0..n)
        .map(|i| lap(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i] - fixed[i])
        .collect();
    let surr = operator_surrogate(&class, &op, 0.0, 1.0);
    let flags = irregular_flags(&disc, n);
    let solver = PreparedSolver::with_surrogate(a, Some(surr), Some(&flags)).unwrap();
    let x = solver.solve_with_guess(&rhs, &vec![0.0; n]).unwrap();
    let mut errs: Vec<(f64, usize)> = (0..n)
        .map(|i| ((x[i] - exact(&class.grid.center(&class.fd_cells[i]))).abs(), i))
        .collect();
    errs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for (e, i) in errs.iter().take(6) {
        let cell = class.fd_cells[*i];
        let xc = class.grid.center(&cell);
        let inside = domain.inside(&xc);
        let sd = domain.signed_distance(&xc);
        eprintln!("err {e:.3e} at {:?} label {:?} inside={inside} sd/h={:.3}", cell, class.label(&cell), sd / h);
    }
}
