//! Expected latency and rate of every corner-to-corner route on the default
//! grid, at a few discovery durations.

use v2x_delivery::closed_form::ClosedFormRoute;
use v2x_delivery::model::DeliveryEstimate;
use v2x_delivery::scenario::Scenario;

fn main() -> v2x_delivery::Result<()> {
    let s = Scenario::default();
    let p = s.params;
    let routes = s.routes()?;
    println!(
        "{} candidate routes from {} to {}",
        routes.len(),
        s.source,
        s.destination
    );
    println!(
        "{:>3} {:<20} {:>5} {:>10} {:>8} {:>8}",
        "#", "nodes", "t", "latency", "rate", "weakest"
    );
    for (i, r) in routes.routes.iter().enumerate() {
        let cf = ClosedFormRoute::new(r, &p)?;
        let label: Vec<String> = r.nodes().iter().map(|n| n.to_string()).collect();
        for t in [0.0, 5.0, 20.0] {
            let est = DeliveryEstimate::global(r, t, &p);
            println!(
                "{i:>3} {:<20} {t:>5.1} {:>10.3} {:>8.4} {:>8.4}",
                label.join("-"),
                cf.latency(t),
                cf.rate(t)?,
                est.e2e_rate
            );
        }
    }
    Ok(())
}
