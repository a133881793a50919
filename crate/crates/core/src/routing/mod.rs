//! RSU graphs, the route sets built on them, and route selection.

mod algorithms;
mod paths;
mod topology;

pub use algorithms::{distributed_routing, distributed_routing_in, global_routing, global_routing_in, RoutingOutcome};
pub use paths::{
    enumerate_routes, gpsr_path, gpsr_route, gpsr_walk, hop_distances, simple_paths, spr_path, spr_route, RouteSet,
};
pub use topology::{Edge, Node, Topology};
