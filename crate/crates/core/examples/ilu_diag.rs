use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{bicgstab, ilu0, Csr};
use plg_core::solver::boundary_data;
use std::sync::Arc;

fn amp(pre: &plg_core::sparse::Ilu0, n: usize) -> f64 {
    // amplification of the preconditioner on a random unit vector
    let mut rng = plg_core::rng::SplitMix64::new(3);
    let r: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    z.iter().map(|v| v * v).sum::<f64>().sqrt() / rn
}

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| {
        -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos()
    };
    let nref = 64usize;
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
    eprintln!("plain ILU0(A): amp = {:.3e}", amp(&ilu0(&a_s).unwrap(), n));

    // permuted: regular-lex first, irregular last
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
    let pre_p = ilu0(&ap).unwrap();
    eprintln!("band-last ILU0(A): amp = {:.3e}", amp(&pre_p, n));
    let bp: Vec<f64> = (0..n).map(|newi| rhs[perm[newi]] * scale[perm[newi]]).collect();
    let mut x = vec![0.0; n];
    let t0 = std::time::Instant::now();
    match bicgstab(&ap, &bp, &mut x, &pre_p, 1e-12, 3000) {
        Ok(rep) => {
            let mut linf: f64 = 0.0;
            for (newi, &old) in perm.iter().enumerate() {
                linf = linf.max((x[newi] - exact(&class.grid.center(&class.fd_cells[old]))).abs());
            }
            eprintln!("band-last bicgstab: its {} res {:.2e} Linf {:.2e} [{:?}]", rep.iterations, rep.residual, linf, t0.elapsed());
        }
        Err(e) => eprintln!("band-last bicgstab err: {e}"),
    }
    // hybrid M, band-last
    let d = class.grid.d;
    let h2 = h * h;
    let mut mrows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for newi in 0..n {
        let old = perm[newi];
        if is_irr[old] {
            let row = &disc.rows[old];
            mrows.push(row.entries.iter().map(|(j, w)| (inv[*j], *w * scale[old])).collect());
        } else {
            let cell = class.fd_cells[old];
            let sc = scale[old];
            let mut row = vec![(newi, -2.0 * d as f64 / h2 * sc)];
            for axis in 0..d {
                for dir in [-1i64, 1] {
                    if let Some(j) = class.fd_id(&cell.offset(axis, dir)) {
                        row.push((inv[j], sc / h2));
                    }
                }
            }
            mrows.push(row);
        }
    }
    let m = Csr::from_rows(n, mrows);
    match ilu0(&m) {
        Ok(pre_m) => {
            eprintln!("hybrid band-last ILU0(M): amp = {:.3e}", amp(&pre_m, n));
            let mut z = vec![0.0; n];
            let r: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
            let t1 = std::time::Instant::now();
            match bicgstab(&m, &r, &mut z, &pre_m, 1e-2, 400) {
                Ok(rep) => eprintln!("inner M-solve: its {} res {:.2e} [{:?}]", rep.iterations, rep.residual, t1.elapsed()),
                Err(e) => eprintln!("inner M-solve err: {e}"),
            }
        }
        Err(e) => eprintln!("ilu0(M) failed: {e}"),
    }
}
