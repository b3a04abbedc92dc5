use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::PreparedSolver;
use plg_core::solver::{boundary_data, operator_surrogate};
use std::sync::Arc;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| {
        -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos()
    };
    for nref in [64usize, 128, 256] {
        let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let class = classify_nodes(&domain, &grid, 0.25).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
        let op = OperatorSpec::laplacian(2);
        let disc = assemble_operator(&class, &op, Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let n = class.n_fd();
        let (a, bcw) = disc.to_matrix(n);
        let g = boundary_data(&class, &bcs, 0.0);
        let rhs: Vec<f64> = (0..n)
            .map(|i| f(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i])
            .collect();
        let surr = operator_surrogate(&class, &op, 0.0, 1.0);
        let t0 = std::time::Instant::now();
        let disc_flags = {
            let mut f = vec![false; n];
            for row in &disc.rows { f[row.center] = !row.meta.regular; }
            f
        };
        let solver = PreparedSolver::with_surrogate(a, Some(surr), Some(&disc_flags)).unwrap();
        if let PreparedSolver::Iterative { pre, .. } = &solver {
            eprintln!("nref {nref}: n={n} band={}", pre.band_size());
        }
        let tprep = t0.elapsed();
        let t1 = std::time::Instant::now();
        match solver.solve_with_guess(&rhs, &vec![0.0; n]) {
            Ok(x) => {
                let mut linf: f64 = 0.0;
                for (i, cell) in class.fd_cells.iter().enumerate() {
                    linf = linf.max((x[i] - exact(&class.grid.center(cell))).abs());
                }
                eprintln!("  prep {tprep:?} solve {:?} Linf={linf:.2e}", t1.elapsed());
            }
            Err(e) => eprintln!("  FAILED: {e}"),
        }
    }
}
