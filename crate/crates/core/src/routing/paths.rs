use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::Topology;
use crate::error::{Error, Result};
use crate::params::{NodeId, Route};

/// The candidate routes `Γ` between one source and one destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSet {
    pub routes: Vec<Route>,
}

impl RouteSet {
    pub fn new(routes: Vec<Route>) -> Result<Self> {
        let Some(first) = routes.first() else {
            return Err(Error::InvalidParameter("route set is empty".into()));
        };
        let (s, d) = (first.source, first.destination);
        if routes.iter().any(|r| r.source != s || r.destination != d) {
            return Err(Error::InvalidParameter(
                "routes in a set must share source and destination".into(),
            ));
        }
        Ok(Self { routes })
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn position(&self, nodes: &[NodeId]) -> Option<usize> {
        self.routes.iter().position(|r| r.nodes() == nodes)
    }
}

fn check_endpoints(topology: &Topology, source: NodeId, destination: NodeId) -> Result<()> {
    if source == destination {
        return Err(Error::InvalidParameter(format!(
            "source and destination are both {source}"
        )));
    }
    for id in [source, destination] {
        if !topology.contains(id) {
            return Err(Error::InvalidParameter(format!("unknown node {id}")));
        }
    }
    Ok(())
}

/// All simple paths from `source` to `destination` with at most `max_hops`
/// hops, in lexicographic order of their node sequences.
pub fn simple_paths(
    topology: &Topology,
    source: NodeId,
    destination: NodeId,
    max_hops: Option<usize>,
) -> Result<Vec<Vec<NodeId>>> {
    check_endpoints(topology, source, destination)?;
    let adjacency: HashMap<NodeId, Vec<NodeId>> = topology
        .nodes
        .iter()
        .map(|n| (n.id, topology.neighbors(n.id)))
        .collect();
    let limit = max_hops.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    let mut path = vec![source];
    let mut on_path = HashSet::from([source]);
    // Each frame holds the index of the next neighbour to try.
    let mut stack: Vec<usize> = vec![0];
    while let Some(next_idx) = stack.last_mut() {
        let here = *path.last().expect("path tracks the stack");
        let nbrs = &adjacency[&here];
        if *next_idx >= nbrs.len() || path.len() > limit {
            stack.pop();
            on_path.remove(&here);
            path.pop();
            continue;
        }
        let n = nbrs[*next_idx];
        *next_idx += 1;
        if on_path.contains(&n) {
            continue;
        }
        if n == destination {
            let mut p = path.clone();
            p.push(n);
            out.push(p);
            continue;
        }
        path.push(n);
        on_path.insert(n);
        stack.push(0);
    }
    out.sort();
    Ok(out)
}

/// Every loop-free route between the endpoints, each hop annotated with its
/// street's arrival rate and exit count.
pub fn enumerate_routes(
    topology: &Topology,
    source: NodeId,
    destination: NodeId,
    max_hops: Option<usize>,
) -> Result<RouteSet> {
    let paths = simple_paths(topology, source, destination, max_hops)?;
    if paths.is_empty() {
        return Err(Error::NoRoute {
            origin: source,
            destination,
        });
    }
    let routes = paths
        .iter()
        .map(|p| topology.route_from_path(p))
        .collect::<Result<Vec<_>>>()?;
    RouteSet::new(routes)
}

/// Hop counts to `destination` along directed edges.
pub fn hop_distances(topology: &Topology, destination: NodeId) -> HashMap<NodeId, usize> {
    let mut dist = HashMap::from([(destination, 0usize)]);
    let mut queue = VecDeque::from([destination]);
    while let Some(n) = queue.pop_front() {
        let d = dist[&n];
        for e in topology.edges.iter().filter(|e| e.to == n) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(e.from) {
                slot.insert(d + 1);
                queue.push_back(e.from);
            }
        }
    }
    dist
}

/// Minimum-hop path; among equally short paths the lexicographically
/// smallest node sequence.
pub fn spr_path(topology: &Topology, source: NodeId, destination: NodeId) -> Result<Vec<NodeId>> {
    check_endpoints(topology, source, destination)?;
    let dist = hop_distances(topology, destination);
    let Some(&total) = dist.get(&source) else {
        return Err(Error::NoRoute {
            origin: source,
            destination,
        });
    };
    let mut path = Vec::with_capacity(total + 1);
    path.push(source);
    let mut here = source;
    while here != destination {
        let want = dist[&here] - 1;
        here = topology
            .neighbors(here)
            .into_iter()
            .find(|n| dist.get(n) == Some(&want))
            .expect("a node at distance d has a neighbour at d - 1");
        path.push(here);
    }
    Ok(path)
}

pub fn spr_route(topology: &Topology, source: NodeId, destination: NodeId) -> Result<Route> {
    topology.route_from_path(&spr_path(topology, source, destination)?)
}

fn bearing(topology: &Topology, from: NodeId, to: NodeId) -> f64 {
    let (a, b) = (topology.node(from).unwrap(), topology.node(to).unwrap());
    (b.y - a.y).atan2(b.x - a.x)
}

/// First neighbour of `at` counterclockwise from the direction `reference`.
/// A neighbour lying exactly on the reference comes last.
fn counterclockwise_from(topology: &Topology, at: NodeId, reference: f64) -> Option<NodeId> {
    topology
        .neighbors(at)
        .into_iter()
        .map(|n| {
            let mut turn = (bearing(topology, at, n) - reference).rem_euclid(TAU);
            if turn <= 1e-12 {
                turn = TAU;
            }
            (turn, n)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, n)| n)
}

/// Drops the cycles a perimeter walk may leave behind.
fn strip_cycles(walk: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    for &n in walk {
        if let Some(pos) = out.iter().position(|&m| m == n) {
            out.truncate(pos + 1);
        } else {
            out.push(n);
        }
    }
    out
}

/// The node walk of greedy perimeter stateless routing on the RSU graph.
///
/// Greedy mode moves to the neighbour closest to the destination as long as
/// it is strictly closer than the current node. At a local minimum the walk
/// switches to perimeter mode and follows the right-hand rule, returning to
/// greedy mode at the first node closer to the destination than the node
/// where perimeter mode started.
/// Distance at which perimeter mode began, previous node, edges used.
type Perimeter = (f64, NodeId, HashSet<(NodeId, NodeId)>);

pub fn gpsr_walk(topology: &Topology, source: NodeId, destination: NodeId) -> Result<Vec<NodeId>> {
    check_endpoints(topology, source, destination)?;
    if !hop_distances(topology, destination).contains_key(&source) {
        return Err(Error::NoRoute {
            origin: source,
            destination,
        });
    }
    let dist = |n: NodeId| topology.distance(n, destination);
    let mut walk = vec![source];
    let mut here = source;
    let mut perimeter: Option<Perimeter> = None;
    let step_limit = 4 * topology.edges.len() + topology.nodes.len();
    for _ in 0..step_limit {
        if here == destination {
            return Ok(walk);
        }
        if let Some((entry, _, _)) = &perimeter {
            if dist(here) < *entry {
                perimeter = None;
            }
        }
        let next = match perimeter.as_mut() {
            None => {
                let best = topology
                    .neighbors(here)
                    .into_iter()
                    .min_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
                match best {
                    Some(n) if dist(n) < dist(here) => n,
                    _ => {
                        let first = counterclockwise_from(topology, here, bearing(topology, here, destination)).ok_or(
                            Error::NoRoute {
                                origin: source,
                                destination,
                            },
                        )?;
                        let mut used = HashSet::new();
                        used.insert((here, first));
                        perimeter = Some((dist(here), here, used));
                        walk.push(first);
                        here = first;
                        continue;
                    }
                }
            }
            Some((_, prev, used)) => {
                let n = counterclockwise_from(topology, here, bearing(topology, here, *prev))
                    .expect("a node reached over an edge has a neighbour");
                if !used.insert((here, n)) {
                    return Err(Error::LoopDetected { from: here, to: n });
                }
                *prev = here;
                n
            }
        };
        walk.push(next);
        here = next;
    }
    Err(Error::NoRoute {
        origin: source,
        destination,
    })
}

pub fn gpsr_path(topology: &Topology, source: NodeId, destination: NodeId) -> Result<Vec<NodeId>> {
    Ok(strip_cycles(&gpsr_walk(topology, source, destination)?))
}

pub fn gpsr_route(topology: &Topology, source: NodeId, destination: NodeId) -> Result<Route> {
    topology.route_from_path(&gpsr_path(topology, source, destination)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::{Edge, Node};

    fn line() -> Topology {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0 },
            Node {
                id: 1,
                x: 250.0,
                y: 0.0,
            },
        ];
        let edges = vec![
            Edge {
                from: 0,
                to: 1,
                lambda: 0.1,
            },
            Edge {
                from: 1,
                to: 0,
                lambda: 0.2,
            },
        ];
        Topology::new(nodes, edges, vec![]).unwrap()
    }

    fn both_ways(pairs: &[(NodeId, NodeId)]) -> Vec<Edge> {
        pairs
            .iter()
            .flat_map(|&(a, b)| {
                [
                    Edge {
                        from: a,
                        to: b,
                        lambda: 0.1,
                    },
                    Edge {
                        from: b,
                        to: a,
                        lambda: 0.1,
                    },
                ]
            })
            .collect()
    }

    /// Source in a pocket: both neighbours are farther from the destination.
    fn pocket() -> Topology {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0 },
            Node { id: 1, x: 0.0, y: 2.0 },
            Node { id: 2, x: 2.0, y: 3.0 },
            Node { id: 3, x: 4.0, y: 2.0 },
            Node { id: 4, x: 4.0, y: 0.0 },
            Node {
                id: 5,
                x: -1.0,
                y: -1.0,
            },
        ];
        Topology::new(nodes, both_ways(&[(0, 1), (1, 2), (2, 3), (3, 4), (0, 5)]), vec![]).unwrap()
    }

    #[test]
    fn line_graph() {
        let t = line();
        assert_eq!(enumerate_routes(&t, 0, 1, None).unwrap().len(), 1);
        assert_eq!(spr_path(&t, 0, 1).unwrap(), vec![0, 1]);
        assert_eq!(gpsr_path(&t, 0, 1).unwrap(), vec![0, 1]);
    }

    #[test]
    fn two_by_two_has_two_routes() {
        let t = Topology::grid(2, 2, 250.0, (0.05, 0.3), 0).unwrap();
        let set = enumerate_routes(&t, 0, 3, None).unwrap();
        let nodes: Vec<_> = set.routes.iter().map(|r| r.nodes()).collect();
        assert_eq!(nodes, vec![vec![0, 1, 3], vec![0, 2, 3]]);
    }

    #[test]
    fn three_by_three_corner_to_corner() {
        let t = Topology::grid(3, 3, 250.0, (0.05, 0.3), 0).unwrap();
        let set = enumerate_routes(&t, 0, 8, None).unwrap();
        assert_eq!(set.len(), 12);
        let shortest = enumerate_routes(&t, 0, 8, Some(4)).unwrap();
        assert_eq!(shortest.len(), 6);
        let mut sorted = set.routes.iter().map(|r| r.nodes()).collect::<Vec<_>>();
        sorted.sort();
        assert_eq!(sorted, set.routes.iter().map(|r| r.nodes()).collect::<Vec<_>>());
        for r in &set.routes {
            assert_eq!(r.source, 0);
            assert_eq!(r.destination, 8);
        }
    }

    #[test]
    fn spr_on_grid() {
        let t = Topology::grid(3, 3, 250.0, (0.05, 0.3), 0).unwrap();
        assert_eq!(spr_path(&t, 0, 8).unwrap(), vec![0, 1, 2, 5, 8]);
        assert_eq!(spr_path(&t, 8, 0).unwrap(), vec![8, 5, 2, 1, 0]);
    }

    #[test]
    fn gpsr_on_grid_is_monotone() {
        let t = Topology::grid(3, 3, 250.0, (0.05, 0.3), 0).unwrap();
        let p = gpsr_path(&t, 0, 8).unwrap();
        assert_eq!(p.len(), 5);
        let d: Vec<f64> = p.iter().map(|&n| t.distance(n, 8)).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
        // Hand trace: from 0 the neighbours 1 and 3 tie, the smaller id wins.
        assert_eq!(p, vec![0, 1, 4, 5, 8]);
    }

    #[test]
    fn gpsr_recovers_from_local_minimum() {
        let t = pocket();
        assert_eq!(gpsr_walk(&t, 0, 4).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn gpsr_strips_cycles() {
        assert_eq!(strip_cycles(&[0, 1, 2, 1, 3]), vec![0, 1, 3]);
    }

    #[test]
    fn errors() {
        let t = line();
        assert!(enumerate_routes(&t, 0, 0, None).is_err());
        assert!(enumerate_routes(&t, 0, 9, None).is_err());
        // One-way street: 1 cannot reach 0.
        let nodes = vec![Node { id: 0, x: 0.0, y: 0.0 }, Node { id: 1, x: 1.0, y: 0.0 }];
        let t = Topology::new(
            nodes,
            vec![Edge {
                from: 0,
                to: 1,
                lambda: 0.1,
            }],
            vec![],
        )
        .unwrap();
        assert!(matches!(enumerate_routes(&t, 1, 0, None), Err(Error::NoRoute { .. })));
        assert!(matches!(spr_path(&t, 1, 0), Err(Error::NoRoute { .. })));
        assert!(matches!(gpsr_path(&t, 1, 0), Err(Error::NoRoute { .. })));
    }

    #[test]
    fn spr_length_matches_bfs() {
        for seed in 0..5 {
            let t = Topology::grid(3, 4, 250.0, (0.05, 0.3), seed).unwrap();
            for (s, d) in [(0, 11), (3, 8), (5, 6)] {
                let p = spr_path(&t, s, d).unwrap();
                assert_eq!(p.len() - 1, hop_distances(&t, d)[&s]);
                let min = simple_paths(&t, s, d, None).unwrap().iter().map(|q| q.len()).min();
                assert_eq!(Some(p.len()), min);
            }
        }
    }
}
