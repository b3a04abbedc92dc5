use plg_core::disc::{assemble_operator, BcSet, BcSpec, DiscConfig, OperatorSpec};
use plg_core::geom::{classify_nodes, Domain, Grid, Shape};
use std::sync::Arc;

fn main() {
    for nref in [32usize, 64, 128] {
        let domain = Domain::shape_only(Shape::Ellipsoid { center: vec![0.0, 0.0], semi: vec![0.8, 0.8] });
        let h = 1.0 / nref as f64;
        let grid = Grid::covering(2, h, &[-0.8, -0.8], &[0.8, 0.8], 3).unwrap();
        let class = classify_nodes(&domain, &grid, 0.25).unwrap();
        let bcs = BcSet::uniform(BcSpec::dirichlet(Arc::new(|_: &[f64], _| 0.0)));
        let disc = assemble_operator(&class, &OperatorSpec::laplacian(2), Some(&bcs), &DiscConfig::fourth_order_2d()).unwrap();
        let mut reduced = 0;
        let mut min_deg = 99;
        for row in &disc.rows {
            if !row.meta.regular && row.meta.n_used < 4 {
                reduced += 1;
                min_deg = min_deg.min(row.meta.n_used);
            }
        }
        eprintln!("nref {nref}: irregular={} reduced_rows={reduced} min_degree={} stats_reductions={}",
            disc.stats.irregular_rows, if reduced > 0 { min_deg } else { 4 }, disc.stats.degree_reductions);
    }
}
