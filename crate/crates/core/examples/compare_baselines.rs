//! Proposed routing against shortest-path and greedy geographic routing on
//! a handful of random grids.

use v2x_delivery::optimizer::{build_normalization, solve_global, RateModel};
use v2x_delivery::routing::{global_routing_in, gpsr_route, spr_route};
use v2x_delivery::scenario::{Scenario, ScenarioConfig};

fn main() -> v2x_delivery::Result<()> {
    let alpha = 0.5;
    println!("{:>4} {:>9} {:>9} {:>9}", "seed", "proposed", "spr", "gpsr");
    for seed in 0..8 {
        let s = Scenario::from_config(&ScenarioConfig {
            seed,
            ..ScenarioConfig::default()
        })?;
        let p = s.params;
        let set = s.routes()?;
        let spr = spr_route(&s.topology, s.source, s.destination)?;
        let gpsr = gpsr_route(&s.topology, s.source, s.destination)?;
        let mut basis = set.routes.clone();
        basis.extend([spr.clone(), gpsr.clone()]);
        let norm = build_normalization(&basis, &p, RateModel::Scenario)?;
        let g = global_routing_in(&set, &p, alpha, norm.clone())?;
        let a = solve_global(&spr, &p, alpha, &norm)?;
        let b = solve_global(&gpsr, &p, alpha, &norm)?;
        println!(
            "{seed:>4} {:>9.4} {:>9.4} {:>9.4}",
            g.objective(),
            a.objective,
            b.objective
        );
    }
    Ok(())
}
