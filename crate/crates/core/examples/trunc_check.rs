use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, NodeLabel, Shape};
use plg_core::solver::{boundary_data, error_norms};
use std::sync::Arc;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let lap = |x: &[f64]| -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    for nref in [32usize, 64, 128] {
        let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let class = classify_nodes(&domain, &grid, 0.25).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
        let disc = assemble_operator(&class, &OperatorSpec::laplacian(2), Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let n = class.n_fd();
        let u: Vec<f64> = (0..n).map(|i| exact(&class.grid.center(&class.fd_cells[i]))).collect();
        let g = boundary_data(&class, &bcs, 0.0);
        let lu = disc.apply(&u, &g);
        let tr: Vec<f64> = (0..n)
            .map(|i| lu[i] - lap(&class.grid.center(&class.fd_cells[i])))
            .collect();
        let (tinf, t1, _) = error_norms(&tr, h, 2);
        // worst node details
        let (mut worst, mut wid) = (0.0f64, 0usize);
        for (i, e) in tr.iter().enumerate() {
            if e.abs() > worst { worst = e.abs(); wid = i; }
        }
        let wcell = class.fd_cells[wid];
        let wrow = &disc.rows[wid];
        eprintln!("nref {nref}: trunc Linf={tinf:.3e} L1={t1:.3e} worst at {:?} label {:?} regular={} extras={} n_used={}",
            wcell, class.label(&wcell), wrow.meta.regular, wrow.meta.extras, wrow.meta.n_used);
    }
}
