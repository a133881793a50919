//! Monte Carlo run of the global winner next to the analytical model.

use v2x_delivery::model::DeliveryEstimate;
use v2x_delivery::routing::global_routing;
use v2x_delivery::scenario::Scenario;
use v2x_delivery::simulator::{simulate_route, Branch, SamplingMode, SimConfig};

fn main() -> v2x_delivery::Result<()> {
    let s = Scenario::default();
    let p = s.params;
    let route = global_routing(&s.routes()?, &p, 0.5)?.route;
    for mode in [SamplingMode::Coupled, SamplingMode::Independent] {
        let cfg = SimConfig {
            n_snapshots: 20_000,
            seed: 1,
            mode,
            ..SimConfig::default()
        };
        println!("{mode:?}");
        for t in [0.0, 1.0, 5.0, 15.0] {
            let sim = simulate_route(&route, t, &p, &cfg)?;
            let model = DeliveryEstimate::global(&route, t, &p);
            let succ: f64 = model.per_hop_events.iter().map(|e| e.success).sum::<f64>() / route.len() as f64;
            println!(
                "  t {t:>4}: latency {:.2} ± {:.2} (model {:.2}), success share {:.4} (model {:.4})",
                sim.latency.mean,
                sim.latency.std_error,
                model.e2e_latency,
                sim.frequency(Branch::DiscoverySuccess),
                succ
            );
        }
    }
    Ok(())
}
