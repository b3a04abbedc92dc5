use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{fgmres, ilu0, Csr};
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
        let mut is_irr = vec![false; n];
        for row in &disc.rows { is_irr[row.center] = !row.meta.regular; }
        let mut perm: Vec<usize> = (0..n).filter(|&i| !is_irr[i]).collect();
        perm.extend((0..n).filter(|&i| is_irr[i]));
        let mut inv = vec![0usize; n];
        for (newi, &old) in perm.iter().enumerate() { inv[old] = newi; }
        let mut arows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for row in &disc.rows {
            arows[inv[row.center]] = row.entries.iter().map(|(j, w)| (inv[*j], *w * scale[row.center])).collect();
        }
        let ap = Csr::from_rows(n, arows);
        let bp: Vec<f64> = (0..n).map(|newi| rhs[perm[newi]] * scale[perm[newi]]).collect();
        let pre = ilu0(&ap).unwrap();
        let mut x = vec![0.0; n];
        let t0 = std::time::Instant::now();
        let mut pcall = |r: &[f64]| -> Vec<f64> {
            let mut z = vec![0.0; n];
            pre.apply(r, &mut z);
            z
        };
        let rep = fgmres(&ap, &bp, &mut x, &mut pcall, 1e-12, 80, 40).unwrap();
        let mut linf: f64 = 0.0;
        for (newi, &old) in perm.iter().enumerate() {
            linf = linf.max((x[newi] - exact(&class.grid.center(&class.fd_cells[old]))).abs());
        }
        eprintln!("nref {nref}: n={n} its={} res={:.2e} Linf={linf:.2e} [{:?}]", rep.iterations, rep.residual, t0.elapsed());
    }
}
