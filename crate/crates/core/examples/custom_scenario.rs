//! A scenario file with a hand-written topology: a ring of four RSUs with
//! one backhaul link.

use v2x_delivery::routing::{distributed_routing, global_routing};
use v2x_delivery::scenario::{Scenario, ScenarioConfig};

const RING: &str = r#"
source = 0
destination = 2

[params]
hop_duration = 15.0
trial_duration = 0.2
decode_error = 0.01
rate_v2v = 3.0
rate_v2i = 1.5
rate_cellular = 1.0
alpha = 0.5

[topology]
backhaul_links = [[1, 2]]
nodes = [
  { id = 0, x = 0.0, y = 0.0 },
  { id = 1, x = 300.0, y = 0.0 },
  { id = 2, x = 300.0, y = 300.0 },
  { id = 3, x = 0.0, y = 300.0 },
]
edges = [
  { from = 0, to = 1, lambda = 0.08 }, { from = 1, to = 0, lambda = 0.08 },
  { from = 1, to = 2, lambda = 0.2 },  { from = 2, to = 1, lambda = 0.2 },
  { from = 2, to = 3, lambda = 0.15 }, { from = 3, to = 2, lambda = 0.15 },
  { from = 3, to = 0, lambda = 0.05 }, { from = 0, to = 3, lambda = 0.05 },
]
"#;

fn main() -> v2x_delivery::Result<()> {
    let s = Scenario::from_config(&ScenarioConfig::from_toml(RING)?)?;
    let routes = s.routes()?;
    for (i, r) in routes.routes.iter().enumerate() {
        println!("route {i}: {:?}", r.nodes());
    }
    let g = global_routing(&routes, &s.params, s.params.alpha)?;
    let d = distributed_routing(&routes, &s.params, s.params.alpha)?;
    println!(
        "global:      {:?} t* = {:.3}",
        g.route.nodes(),
        g.outcome.t_star().unwrap_or(0.0)
    );
    println!(
        "distributed: {:?} t = {:?}",
        d.route.nodes(),
        d.outcome.t_hat().unwrap_or(&[])
    );
    Ok(())
}
