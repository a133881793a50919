//! Distributed routing: every RSU picks its own discovery duration.

use v2x_delivery::optimizer::{build_normalization, solve_distributed_detailed, HopNormalization, RateModel};
use v2x_delivery::routing::distributed_routing;
use v2x_delivery::scenario::Scenario;

fn main() -> v2x_delivery::Result<()> {
    let s = Scenario::default();
    let p = s.params;
    let routes = s.routes()?;
    let alpha = 0.5;
    let d = distributed_routing(&routes, &p, alpha)?;
    println!("winner {:?}, objective {:.4}", d.route.nodes(), d.objective());

    // The same route with hop objectives judged on the route-level scale.
    let norm = build_normalization(&routes.routes, &p, RateModel::WeakestHop)?;
    for scale in [HopNormalization::Own, HopNormalization::Shared] {
        let (o, hops) = solve_distributed_detailed(&d.route, &p, alpha, &norm, scale)?;
        println!("{scale:?}: objective {:.4}", o.objective);
        for (h, sol) in d.route.hops().iter().zip(&hops) {
            println!(
                "  hop {}->{} lambda {:.3} deg {}: t = {:.3} s, latency {:.2}, rate {:.4}",
                h.rsu_id, h.next_rsu_id, h.lambda, h.deg, sol.t_hat, sol.latency, sol.rate
            );
        }
    }
    Ok(())
}
