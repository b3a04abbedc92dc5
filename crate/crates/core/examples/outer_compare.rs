use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{fgmres, BlockPrecond, Csr};
use plg_core::solver::{boundary_data, operator_surrogate};
use std::sync::Arc;

// preconditioned BiCGStab with a callback preconditioner
fn bicg_cb(a: &Csr, b: &[f64], x: &mut [f64], pre: &mut dyn FnMut(&[f64]) -> Vec<f64>, tol: f64, maxit: usize) -> (usize, f64) {
    let n = a.n;
    let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(p, q)| p * q).sum() };
    let bnorm = dot(b, b).sqrt().max(1e-300);
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n { r[i] = b[i] - r[i]; }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 0..maxit {
        let rho1 = dot(&r0, &r);
        if rho1.abs() < 1e-300 { break; }
        let beta = (rho1 / rho) * (alpha / omega);
        rho = rho1;
        for i in 0..n { p[i] = r[i] + beta * (p[i] - omega * v[i]); }
        let phat = pre(&p);
        a.matvec(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n { s[i] = r[i] - alpha * v[i]; }
        let shat = pre(&s);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 { break; }
        omega = dot(&t, &s) / tt;
        for i in 0..n { x[i] += alpha * phat[i] + omega * shat[i]; r[i] = s[i] - omega * t[i]; }
        if dot(&r, &r).sqrt() / bnorm < tol {
            a.matvec(x, &mut r);
            for i in 0..n { r[i] = b[i] - r[i]; }
            return (it + 1, dot(&r, &r).sqrt() / bnorm);
        }
        if omega == 0.0 { break; }
    }
    a.matvec(x, &mut r);
    for i in 0..n { r[i] = b[i] - r[i]; }
    (maxit, dot(&r, &r).sqrt() / bnorm)
}

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| {
        -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos()
    };
    for nref in [128usize, 256] {
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
        let mut flags = vec![false; n];
        for row in &disc.rows { flags[row.center] = !row.meta.regular; }
        let pre = BlockPrecond::new(&a, &surr, Some(&flags)).unwrap();
        let errf = |x: &Vec<f64>| -> f64 {
            let mut linf: f64 = 0.0;
            for (i, cell) in class.fd_cells.iter().enumerate() {
                linf = linf.max((x[i] - exact(&class.grid.center(cell))).abs());
            }
            linf
        };
        // BiCGStab outer
        let mut x = vec![0.0; n];
        let t0 = std::time::Instant::now();
        let mut pcall = |r: &[f64]| -> Vec<f64> { pre.apply(r) };
        let (its, res) = bicg_cb(&a, &rhs, &mut x, &mut pcall, 1e-12, 1500);
        eprintln!("nref {nref} bicgstab-outer: its={its} res={res:.2e} Linf={:.2e} [{:?}]", errf(&x), t0.elapsed());
        // FGMRES(200) outer
        let mut x2 = vec![0.0; n];
        let t1 = std::time::Instant::now();
        let mut pcall2 = |r: &[f64]| -> Vec<f64> { pre.apply(r) };
        let rep = fgmres(&a, &rhs, &mut x2, &mut pcall2, 1e-12, 200, 10).unwrap();
        eprintln!("nref {nref} fgmres200:    its={} res={:.2e} Linf={:.2e} [{:?}]", rep.iterations, rep.residual, errf(&x2), t1.elapsed());
    }
}
