use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{bicgstab, fgmres, ilu0, Csr};
use plg_core::solver::{boundary_data, operator_surrogate};
use std::sync::Arc;
use std::cell::RefCell;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| {
        -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos()
    };
    let nref = 128usize;
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
    // manual block precond with instrumentation
    let band: Vec<usize> = (0..n).filter(|&i| flags[i]).collect();
    let mut band_pos = vec![usize::MAX; n];
    for (p, &i) in band.iter().enumerate() { band_pos[i] = p; }
    let bulk: Vec<usize> = (0..n).filter(|&i| !flags[i]).collect();
    let mut bulk_pos = vec![usize::MAX; n];
    for (p, &i) in bulk.iter().enumerate() { bulk_pos[i] = p; }
    let mut m_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for &i in &bulk {
        let mut row = Vec::new();
        for k in surr.indptr[i]..surr.indptr[i + 1] {
            let j = surr.indices[k] as usize;
            if bulk_pos[j] != usize::MAX { row.push((bulk_pos[j], surr.data[k])); }
        }
        m_rows.push(row);
    }
    let m_rr = Csr::from_rows(bulk.len(), m_rows);
    let m_ilu = ilu0(&m_rr).unwrap();
    let nb = band.len();
    let mut bb = plg_core::dense::Mat::zeros(nb, nb);
    let mut a_br: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (p, &i) in band.iter().enumerate() {
        for k in a.indptr[i]..a.indptr[i + 1] {
            let j = a.indices[k] as usize;
            if band_pos[j] != usize::MAX { bb[(p, band_pos[j])] += a.data[k]; }
            else { a_br[p].push((bulk_pos[j], a.data[k])); }
        }
    }
    let bb_lu = plg_core::dense::lu_factor(&bb);
    eprintln!("n={n} bulk={} band={nb} bb singular={}", bulk.len(), bb_lu.singular);
    let stats = RefCell::new((0usize, 0usize, 0usize)); // calls, its, fails
    let mut pre = |r: &[f64]| -> Vec<f64> {
        let r_r: Vec<f64> = bulk.iter().map(|&i| r[i]).collect();
        let mut z_r = vec![0.0; bulk.len()];
        match bicgstab(&m_rr, &r_r, &mut z_r, &m_ilu, 3e-3, 500) {
            Ok(rep) => { let mut s = stats.borrow_mut(); s.0 += 1; s.1 += rep.iterations; if rep.residual > 3e-3 { s.2 += 1; } }
            Err(_) => { stats.borrow_mut().2 += 1; m_ilu.apply(&r_r, &mut z_r); }
        }
        let mut z = vec![0.0; n];
        for (p, &i) in bulk.iter().enumerate() { z[i] = z_r[p]; }
        let mut w: Vec<f64> = band.iter().map(|&i| r[i]).collect();
        for (p, row) in a_br.iter().enumerate() {
            for &(jr, v) in row { w[p] -= v * z_r[jr]; }
        }
        let z_b = bb_lu.solve(&w).unwrap();
        for (p, &i) in band.iter().enumerate() { z[i] = z_b[p]; }
        z
    };
    let mut x = vec![0.0; n];
    let t = std::time::Instant::now();
    let rep = fgmres(&a, &rhs, &mut x, &mut pre, 1e-12, 200, 10).unwrap();
    let s = stats.borrow();
    eprintln!("outer its={} res={:.2e} inner calls={} avg inner={} weak/fails={} [{:?}]",
        rep.iterations, rep.residual, s.0, if s.0 > 0 { s.1 / s.0 } else { 0 }, s.2, t.elapsed());
    let mut linf: f64 = 0.0;
    for (i, cell) in class.fd_cells.iter().enumerate() {
        linf = linf.max((x[i] - exact(&class.grid.center(cell))).abs());
    }
    eprintln!("Linf={linf:.2e}");
}
