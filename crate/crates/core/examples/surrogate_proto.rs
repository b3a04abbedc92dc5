use plg_core::disc::{BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape, NodeClassification};
use plg_core::sparse::{ilu0, Csr, Ilu0};
use plg_core::solver::boundary_data;
use std::sync::Arc;

// second-order graph-Laplacian surrogate with absorbing closure, unit rows
fn surrogate(class: &NodeClassification) -> Csr {
    let n = class.n_fd();
    let d = class.grid.d;
    let deg = (2 * d) as f64;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let cell = class.fd_cells[i];
        let mut row = vec![(i, 1.0)];
        for axis in 0..d {
            for dir in [-1i64, 1] {
                if let Some(j) = class.fd_id(&cell.offset(axis, dir)) {
                    row.push((j, -1.0 / deg));
                }
            }
        }
        rows.push(row);
    }
    Csr::from_rows(n, rows)
}

fn gmres_precond(a: &Csr, b: &[f64], x: &mut Vec<f64>, pre: &Ilu0, tol: f64, m: usize, max_restart: usize) -> (usize, f64) {
    let n = a.n;
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut total = 0;
    for _r in 0..max_restart {
        let mut r = vec![0.0; n];
        a.matvec(x, &mut r);
        for i in 0..n { r[i] = b[i] - r[i]; }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm < tol { break; }
        let mut z = vec![0.0; n];
        pre.apply(&r, &mut z);
        let beta = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v: Vec<Vec<f64>> = vec![z.iter().map(|q| q / beta).collect()];
        let mut h: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        for j in 0..m {
            total += 1;
            let mut w = vec![0.0; n];
            a.matvec(&v[j], &mut w);
            let mut zw = vec![0.0; n];
            pre.apply(&w, &mut zw);
            let mut hj = vec![0.0; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let dprod: f64 = zw.iter().zip(vi).map(|(p, q)| p * q).sum();
                hj[i] = dprod;
                for k in 0..n { zw[k] -= dprod * vi[k]; }
            }
            let wn = zw.iter().map(|q| q * q).sum::<f64>().sqrt();
            hj[j + 1] = wn;
            for i in 0..j {
                let t = cs[i] * hj[i] + sn[i] * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            let denom = (hj[j] * hj[j] + hj[j + 1] * hj[j + 1]).sqrt();
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (hj[j] / denom, hj[j + 1] / denom) };
            cs.push(c); sn.push(s);
            hj[j] = denom;
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(hj);
            let stop = wn < 1e-14 || j + 1 == m || (g[j + 1].abs() / bnorm) < 0.05 * tol;
            if stop {
                let jj = j + 1;
                let mut y = vec![0.0; jj];
                for i in (0..jj).rev() {
                    let mut s2 = g[i];
                    for k in i + 1..jj { s2 -= h[k][i] * y[k]; }
                    y[i] = s2 / h[i][i];
                }
                for (k, vk) in v.iter().take(jj).enumerate() {
                    for i in 0..n { x[i] += y[k] * vk[i]; }
                }
                break;
            }
            v.push(zw.iter().map(|q| q / wn).collect());
        }
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n { r[i] = b[i] - r[i]; }
    (total, r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm)
}

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
        let disc = plg_core::disc::assemble_operator(&class, &OperatorSpec::laplacian(2), Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let (a, bcw) = disc.to_matrix(class.n_fd());
        let g = boundary_data(&class, &bcs, 0.0);
        let rhs: Vec<f64> = (0..class.n_fd())
            .map(|i| f(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i])
            .collect();
        // equilibrate rows of A so its scale matches the unit-row surrogate
        let norms = a.row_inf_norms();
        let scale: Vec<f64> = norms.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect();
        let mut a_s = a.clone();
        a_s.scale_rows(&scale);
        let b: Vec<f64> = rhs.iter().zip(&scale).map(|(v, s)| v * s).collect();
        let t0 = std::time::Instant::now();
        let m = surrogate(&class);
        let pre = ilu0(&m).unwrap();
        let mut x = vec![0.0; a.n];
        let (its, res) = gmres_precond(&a_s, &b, &mut x, &pre, 1e-12, 120, 60);
        let mut linf: f64 = 0.0;
        for (i, cell) in class.fd_cells.iter().enumerate() {
            linf = linf.max((x[i] - exact(&class.grid.center(cell))).abs());
        }
        println!("nref {nref}: n={} its={its} res={res:.2e} Linf={linf:.2e} [{:?}]", a.n, t0.elapsed());
    }
}
