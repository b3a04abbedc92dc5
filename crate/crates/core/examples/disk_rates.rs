use plg_core::disc::{BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{Domain, Grid, Shape};
use plg_core::solver::solve_elliptic;
use std::sync::Arc;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let mut prev: Option<(f64, f64)> = None;
    for nref in [32usize, 64, 128, 256] {
        let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
        let t = std::time::Instant::now();
        let rep = solve_elliptic(&domain, &grid, &OperatorSpec::laplacian(2), &bcs, &f,
                                  &DiscConfig::fourth_order_2d(), 0.25, Some(&exact)).unwrap();
        let (li, l1, _) = rep.solution_errors.unwrap();
        let rates = prev.map(|(pi, p1)| ((pi / li).log2(), (p1 / l1).log2()));
        eprintln!("nref {nref}: Linf={li:.3e} L1={l1:.3e} rates={rates:?} [{:?}]", t.elapsed());
        prev = Some((li, l1));
    }
}
