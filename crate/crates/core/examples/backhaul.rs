//! Effect of RSU-to-RSU backhaul on the simulated end-to-end latency.

use v2x_delivery::routing::global_routing;
use v2x_delivery::scenario::Scenario;
use v2x_delivery::simulator::{simulate_with_backhaul, Branch, SimConfig};

fn main() -> v2x_delivery::Result<()> {
    let s = Scenario::default();
    let p = s.params;
    let route = global_routing(&s.routes()?, &p, 0.5)?.route;
    let mesh = s.topology.clone().with_full_backhaul();
    println!("{:>5} {:>16} {:>16} {:>9}", "t", "no backhaul", "backhaul", "used");
    for t in [0.0, 2.0, 5.0, 10.0, 19.0] {
        let run = |on: bool| {
            let cfg = SimConfig {
                n_snapshots: 5000,
                seed: 3,
                backhaul_enabled: on,
                ..SimConfig::default()
            };
            simulate_with_backhaul(&route, t, &p, &cfg, &mesh)
        };
        let (off, on) = (run(false)?, run(true)?);
        println!(
            "{t:>5} {:>9.2} ± {:<4.2} {:>9.2} ± {:<4.2} {:>9.4}",
            off.latency.mean,
            off.latency.std_error,
            on.latency.mean,
            on.latency.std_error,
            on.frequency(Branch::BackhaulForward)
        );
    }
    Ok(())
}
