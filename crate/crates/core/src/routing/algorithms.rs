use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RouteSet;
use crate::error::Result;
use crate::optimizer::{
    build_normalization, solve_distributed_detailed, solve_global, HopNormalization, NormalizationContext,
    OptimizationOutcome, RateModel,
};
use crate::params::{Route, SystemParams};

/// The winning route of a routing algorithm and its optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingOutcome {
    pub route: Route,
    pub outcome: OptimizationOutcome,
    /// Optimum of every candidate, in route-set order.
    pub per_route: Vec<OptimizationOutcome>,
    pub normalization: NormalizationContext,
}

impl RoutingOutcome {
    pub fn objective(&self) -> f64 {
        self.outcome.objective
    }

    pub fn route_index(&self) -> usize {
        self.outcome.route_index
    }
}

/// Index of the largest objective; the earliest route wins ties.
fn pick(outcomes: &[OptimizationOutcome]) -> usize {
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate().skip(1) {
        if o.objective > outcomes[best].objective {
            best = i;
        }
    }
    best
}

fn finish(
    set: &RouteSet,
    mut per_route: Vec<OptimizationOutcome>,
    normalization: NormalizationContext,
) -> RoutingOutcome {
    for (i, o) in per_route.iter_mut().enumerate() {
        o.route_index = i;
    }
    let best = pick(&per_route);
    RoutingOutcome {
        route: set.routes[best].clone(),
        outcome: per_route[best].clone(),
        per_route,
        normalization,
    }
}

/// One shared duration per route, routes compared under one normalization.
pub fn global_routing_in(
    set: &RouteSet,
    params: &SystemParams,
    alpha: f64,
    normalization: NormalizationContext,
) -> Result<RoutingOutcome> {
    let per_route = set
        .routes
        .par_iter()
        .map(|r| solve_global(r, params, alpha, &normalization))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(set, per_route, normalization))
}

/// Global routing with the scenario-weighted end-to-end rate.
pub fn global_routing(set: &RouteSet, params: &SystemParams, alpha: f64) -> Result<RoutingOutcome> {
    let norm = build_normalization(&set.routes, params, RateModel::Scenario)?;
    global_routing_in(set, params, alpha, norm)
}

/// Per-hop durations per route; routes scored by summed latency and
/// weakest-hop rate under one normalization.
pub fn distributed_routing_in(
    set: &RouteSet,
    params: &SystemParams,
    alpha: f64,
    normalization: NormalizationContext,
    hop_scale: HopNormalization,
) -> Result<RoutingOutcome> {
    let per_route = set
        .routes
        .par_iter()
        .map(|r| solve_distributed_detailed(r, params, alpha, &normalization, hop_scale).map(|(o, _)| o))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(set, per_route, normalization))
}

pub fn distributed_routing(set: &RouteSet, params: &SystemParams, alpha: f64) -> Result<RoutingOutcome> {
    let norm = build_normalization(&set.routes, params, RateModel::WeakestHop)?;
    distributed_routing_in(set, params, alpha, norm, HopNormalization::Own)
}
