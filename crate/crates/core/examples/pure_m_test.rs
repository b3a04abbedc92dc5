use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{bicgstab, ilu0, Csr};

fn main() {
    for nref in [64usize, 256] {
        let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let class = classify_nodes(&domain, &grid, 0.25).unwrap();
        let n = class.n_fd();
        let d = class.grid.d;
        let h2 = h * h;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        for i in 0..n {
            let cell = class.fd_cells[i];
            let mut row = vec![(i, -2.0 * d as f64 / h2)];
            for axis in 0..d {
                for dir in [-1i64, 1] {
                    if let Some(j) = class.fd_id(&cell.offset(axis, dir)) {
                        row.push((j, 1.0 / h2));
                    }
                }
            }
            rows.push(row);
        }
        let m = Csr::from_rows(n, rows);
        let pre = ilu0(&m).unwrap();
        let b: Vec<f64> = (0..n).map(|i| ((i % 19) as f64 / 19.0) - 0.5).collect();
        let mut x = vec![0.0; n];
        let t = std::time::Instant::now();
        match bicgstab(&m, &b, &mut x, &pre, 1e-11, 4000) {
            Ok(r) => eprintln!("nref {nref}: n={n} its={} res={:.2e} [{:?}]", r.iterations, r.residual, t.elapsed()),
            Err(e) => eprintln!("nref {nref}: err {e}"),
        }
    }
}
