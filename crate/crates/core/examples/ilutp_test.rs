use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{fgmres, ilutp, Csr};
use plg_core::solver::boundary_data;
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
        let disc = assemble_operator(&class, &OperatorSpec::laplacian(2), Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let n = class.n_fd();
        let (a, bcw) = disc.to_matrix(n);
        let g = boundary_data(&class, &bcs, 0.0);
        let rhs: Vec<f64> = (0..n)
            .map(|i| f(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i])
            .collect();
        let norms = a.row_inf_norms();
        let scale: Vec<f64> = norms.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect();
        let mut a_s = a.clone();
        a_s.scale_rows(&scale);
        let b: Vec<f64> = rhs.iter().zip(&scale).map(|(v, s)| v * s).collect();
        let t0 = std::time::Instant::now();
        let pre = ilutp(&a_s, 1e-5, 60, 1.0).unwrap();
        let tfac = t0.elapsed();
        // amplification sniff
        let r0: Vec<f64> = (0..n).map(|i| ((i * 131) % 17) as f64 / 17.0 - 0.5).collect();
        let mut z0 = vec![0.0; n];
        pre.apply(&r0, &mut z0);
        let amp = z0.iter().map(|v| v * v).sum::<f64>().sqrt() / r0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        let t1 = std::time::Instant::now();
        let mut pcall = |r: &[f64]| -> Vec<f64> {
            let mut z = vec![0.0; n];
            pre.apply(r, &mut z);
            z
        };
        let rep = fgmres(&a_s, &b, &mut x, &mut pcall, 1e-12, 60, 30).unwrap();
        let mut linf: f64 = 0.0;
        for (i, cell) in class.fd_cells.iter().enumerate() {
            linf = linf.max((x[i] - exact(&class.grid.center(cell))).abs());
        }
        eprintln!("nref {nref}: n={n} fill/n={:.1} amp={amp:.2e} fac {tfac:?} its={} res={:.2e} Linf={linf:.2e} solve {:?}",
                 pre.fill() as f64 / n as f64, rep.iterations, rep.residual, t1.elapsed());
    }
}
