//! Global routing: one discovery duration shared by every hop.

use v2x_delivery::optimizer::kkt_stationarity_check;
use v2x_delivery::routing::global_routing;
use v2x_delivery::scenario::Scenario;

fn main() -> v2x_delivery::Result<()> {
    let s = Scenario::default();
    let routes = s.routes()?;
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = global_routing(&routes, &s.params, alpha)?;
        let t = g.outcome.t_star().unwrap_or(0.0);
        let kkt = kkt_stationarity_check(t, &g.route, &s.params, alpha, &g.normalization)?;
        println!(
            "alpha {alpha:.2}: route {:?} t* = {t:.3} s, objective {:.4}, latency {:.2} s, rate {:.4} (kkt ok: {kkt})",
            g.route.nodes(),
            g.objective(),
            g.outcome.latency,
            g.outcome.rate
        );
    }
    Ok(())
}
