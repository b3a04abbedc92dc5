use plg_core::bench::{poisson2d_experiment, RunConfig};
fn main() {
    let mut config = RunConfig::new("poisson2d");
    config.grids = vec![40, 80, 160];
    config.extras = 0;
    let rep = poisson2d_experiment(&config).unwrap();
    for r in &rep.solution.rows {
        eprintln!("sol 1/{}: Linf={:.3e} rate={:?} L1={:.3e} rate={:?}", r.grid, r.linf, r.rate_linf, r.l1, r.rate_l1);
    }
    for r in &rep.truncation.rows {
        eprintln!("trn 1/{}: Linf={:.3e} L1={:.3e}", r.grid, r.linf, r.l1);
    }
    eprintln!("tlg calls: {:?} elapsed {:.1}s", rep.tlg_calls, rep.elapsed);
}
