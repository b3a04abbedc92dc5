use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::solver::{irregular_flags, operator_surrogate};
use plg_core::sparse::PreparedSolver;
use std::sync::Arc;

fn main() {
    for nref in [32usize, 64, 128] {
        let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let class = classify_nodes(&domain, &grid, 0.25).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(|_: &[f64], _| 0.0)));
        let op = OperatorSpec::laplacian(2);
        let disc = assemble_operator(&class, &op, Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let n = class.n_fd();
        let (a, _, _) = disc.to_matrix(n);
        let surr = operator_surrogate(&class, &op, 0.0, 1.0);
        let flags = irregular_flags(&disc, n);
        let solver = PreparedSolver::with_surrogate(a.clone(), Some(surr), Some(&flags)).unwrap();
        // inverse power iteration for the smallest singular-ish mode of A
        let mut rng = plg_core::rng::SplitMix64::new(5);
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let mut inv_norm = 0.0;
        for _ in 0..8 {
            let w = solver.solve_with_guess(&v, &vec![0.0; n]).unwrap();
            let nw = w.iter().map(|q| q * q).sum::<f64>().sqrt();
            inv_norm = nw;
            v = w.iter().map(|q| q / nw).collect();
        }
        // |A^{-1}| along dominant mode; also locate the mode's peak
        let (mut peak, mut pid) = (0.0f64, 0usize);
        for (i, q) in v.iter().enumerate() {
            if q.abs() > peak { peak = q.abs(); pid = i; }
        }
        let cell = class.fd_cells[pid];
        let x = class.grid.center(&cell);
        let sd = domain.signed_distance(&x);
        eprintln!("nref {nref}: |A^-1| ~= {inv_norm:.3e}  mode peak at {:?} ({:?}) sd/h={:.3}",
            cell, class.label(&cell), sd / h);
    }
}
