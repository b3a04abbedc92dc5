use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{bicgstab, fgmres, ilu0, Csr};
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

        // hybrid surrogate in an irregular-last ordering
        let d = class.grid.d;
        let h2 = h * h;
        let mut perm: Vec<usize> = Vec::with_capacity(n); // new -> old
        let mut is_irr = vec![false; n];
        for row in &disc.rows { is_irr[row.center] = !row.meta.regular; }
        for i in 0..n { if !is_irr[i] { perm.push(i); } }
        for i in 0..n { if is_irr[i] { perm.push(i); } }
        let mut inv = vec![0usize; n]; // old -> new
        for (new, &old) in perm.iter().enumerate() { inv[old] = new; }
        let mut mrows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        for new in 0..n {
            let old = perm[new];
            if is_irr[old] {
                let row = &disc.rows[old];
                mrows.push(row.entries.iter().map(|(j, w)| (inv[*j], *w)).collect());
            } else {
                let cell = class.fd_cells[old];
                let mut row = vec![(new, -2.0 * d as f64 / h2)];
                for axis in 0..d {
                    for dir in [-1i64, 1] {
                        if let Some(j) = class.fd_id(&cell.offset(axis, dir)) {
                            row.push((inv[j], 1.0 / h2));
                        }
                    }
                }
                mrows.push(row);
            }
        }
        let m = Csr::from_rows(n, mrows);
        let m_ilu = match ilu0(&m) { Ok(p) => p, Err(e) => { println!("ilu0(M) failed: {e}"); continue; } };
        // permuted A and rhs
        let mut arows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for row in &disc.rows {
            arows[inv[row.center]] = row.entries.iter().map(|(j, w)| (inv[*j], *w)).collect();
        }
        let ap = Csr::from_rows(n, arows);
        let bp: Vec<f64> = (0..n).map(|newi| rhs[perm[newi]]).collect();
        let mut x = vec![0.0; n];
        let mut inner_total = 0usize;
        let t0 = std::time::Instant::now();
        let mut pre = |r: &[f64]| -> Vec<f64> {
            let mut z = vec![0.0; n];
            match bicgstab(&m, r, &mut z, &m_ilu, 1e-2, 400) {
                Ok(rep) => inner_total += rep.iterations,
                Err(_) => { m_ilu.apply(r, &mut z); }
            }
            z
        };
        let rep = fgmres(&ap, &bp, &mut x, &mut pre, 1e-12, 40, 50).unwrap();
        let mut linf: f64 = 0.0;
        for (newi, &old) in perm.iter().enumerate() {
            let cell = class.fd_cells[old];
            linf = linf.max((x[newi] - exact(&class.grid.center(&cell))).abs());
        }
        println!("nref {nref}: n={n} outer={} inner={} res={:.2e} Linf={linf:.2e} [{:?}]",
                 rep.iterations, inner_total, rep.residual, t0.elapsed());
    }
}
