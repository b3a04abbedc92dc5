use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use plg_core::sparse::{fgmres, ilu0, ilutp, Csr};
use plg_core::solver::boundary_data;
use std::sync::Arc;

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
        let disc = assemble_operator(&class, &OperatorSpec::laplacian(2), Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let n = class.n_fd();
        let (a, bcw) = disc.to_matrix(n);
        let g = boundary_data(&class, &bcs, 0.0);
        let rhs: Vec<f64> = (0..n)
            .map(|i| f(&class.grid.center(&class.fd_cells[i])) - bcw[i] * g[i])
            .collect();
        // Ruiz symmetric equilibration (5 sweeps)
        let mut rsc = vec![1.0f64; n];
        let mut csc = vec![1.0f64; n];
        let mut work = a.clone();
        for _ in 0..5 {
            let rn = work.row_inf_norms();
            for i in 0..n {
                let s = 1.0 / rn[i].sqrt().max(1e-150);
                rsc[i] *= s;
            }
            // column norms
            let mut cn = vec![0.0f64; n];
            for i in 0..n {
                for k in work.indptr[i]..work.indptr[i + 1] {
                    let j = work.indices[k] as usize;
                    cn[j] = cn[j].max(work.data[k].abs());
                }
            }
            for j in 0..n {
                let s = 1.0 / cn[j].sqrt().max(1e-150);
                csc[j] *= s;
            }
            // rebuild scaled matrix
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for i in 0..n {
                for k in a.indptr[i]..a.indptr[i + 1] {
                    let j = a.indices[k] as usize;
                    rows[i].push((j, a.data[k] * rsc[i] * csc[j]));
                }
            }
            work = Csr::from_rows(n, rows);
        }
        let b: Vec<f64> = rhs.iter().zip(&rsc).map(|(v, s)| v * s).collect();
        for (name, pre_kind) in [("ruiz+ilu0", 0), ("ruiz+ilutp", 1)] {
            let t0 = std::time::Instant::now();
            let apply: Box<dyn Fn(&[f64], &mut Vec<f64>)> = match pre_kind {
                0 => match ilu0(&work) {
                    Ok(p) => Box::new(move |r: &[f64], z: &mut Vec<f64>| p.apply(r, z)),
                    Err(e) => { eprintln!("{name}: ilu0 failed {e}"); continue; }
                },
                _ => match ilutp(&work, 1e-4, 40, 1.0) {
                    Ok(p) => Box::new(move |r: &[f64], z: &mut Vec<f64>| p.apply(r, z)),
                    Err(e) => { eprintln!("{name}: ilutp failed {e}"); continue; }
                },
            };
            let mut x = vec![0.0; n];
            let mut pcall = |r: &[f64]| -> Vec<f64> {
                let mut z = vec![0.0; n];
                apply(r, &mut z);
                z
            };
            let rep = fgmres(&work, &b, &mut x, &mut pcall, 1e-12, 60, 25).unwrap();
            // unscale: x_true = csc .* x
            let mut linf: f64 = 0.0;
            for (i, cell) in class.fd_cells.iter().enumerate() {
                let xv = x[i] * csc[i];
                linf = linf.max((xv - exact(&class.grid.center(cell))).abs());
            }
            eprintln!("nref {nref} {name}: its={} res={:.2e} Linf={linf:.2e} [{:?}]", rep.iterations, rep.residual, t0.elapsed());
        }
    }
}
