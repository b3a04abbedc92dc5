use plg_core::disc::{BcSet, BcSpec, DiscConfig, ExtrasRule, OperatorSpec, TlgConfig};
use plg_core::geom::{Domain, Grid, Shape};
use plg_core::search::OrderingRule;
use plg_core::solver::solve_elliptic;
use plg_core::testset::TestSetKind;
use std::sync::Arc;

fn main() {
    let exact = |x: &[f64]| (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let f = |x: &[f64]| -(1.3f64 * 1.3 + 1.1 * 1.1) * (x[0] * 1.3 + 0.2).sin() * (x[1] * 1.1 - 0.4).cos();
    let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
    let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(move |x: &[f64], _| exact(x))));
    let run = |nref: usize, extras: usize, ord: OrderingRule, eta: f64| -> (f64, f64, f64) {
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let cfg = DiscConfig {
            n: 4,
            regular_order: 4,
            extras: ExtrasRule::Count(extras),
            tlg: TlgConfig { kind: TestSetKind::TypeII, ordering: ord },
        };
        let rep = solve_elliptic(&domain, &grid, &OperatorSpec::laplacian(2), &bcs, &f, &cfg, eta, Some(&exact)).unwrap();
        let (li, l1, _) = rep.solution_errors.unwrap();
        let (ti, _, _) = rep.truncation_errors.unwrap();
        (li, l1, ti)
    };
    for nref in [32usize, 64] {
        for (label, extras, ord, eta) in [
            ("e0 compact eta.25", 0usize, OrderingRule::CompactnessFirst, 0.25),
            ("e2 compact eta.25", 2, OrderingRule::CompactnessFirst, 0.25),
            ("e4 compact eta.25", 4, OrderingRule::CompactnessFirst, 0.25),
            ("e6 compact eta.25", 6, OrderingRule::CompactnessFirst, 0.25),
            ("e4 feasib  eta.25", 4, OrderingRule::FeasibilityFirst, 0.25),
            ("e4 compact eta.10", 4, OrderingRule::CompactnessFirst, 0.10),
            ("e4 compact eta.45", 4, OrderingRule::CompactnessFirst, 0.45),
        ] {
            let (li, l1, ti) = run(nref, extras, ord, eta);
            eprintln!("nref {nref} {label}: Linf={li:.3e} L1={l1:.3e} truncInf={ti:.3e}");
        }
        eprintln!("--");
    }
}
