use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Hop, NodeId, Route};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: NodeId,
    /// Metres.
    pub x: f64,
    pub y: f64,
}

/// A directed street segment with the arrival rate of vehicles travelling
/// along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// Vehicles per second.
    pub lambda: f64,
}

/// RSU graph. RSUs sit at crossroads; streets are directed edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Undirected RSU-to-RSU wireless backhaul links.
    #[serde(default)]
    pub backhaul_links: Vec<(NodeId, NodeId)>,
}

impl Topology {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, backhaul_links: Vec<(NodeId, NodeId)>) -> Result<Self> {
        let t = Self {
            nodes,
            edges,
            backhaul_links,
        };
        t.validate()?;
        Ok(t)
    }

    /// `rows × cols` crossroads spaced `block_m` apart, row-major ids with
    /// id 0 at the upper-left corner. Every street gets one arrival rate per
    /// direction, drawn uniformly from `arrival` with a generator seeded by
    /// `seed`.
    pub fn grid(rows: usize, cols: usize, block_m: f64, arrival: (f64, f64), seed: u64) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidDimensions { rows, cols });
        }
        let (lo, hi) = arrival;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "arrival interval must satisfy 0 < min <= max, got [{lo}, {hi}]"
            )));
        }
        let id = |r: usize, c: usize| (r * cols + c) as NodeId;
        let nodes = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| Node {
                    id: id(r, c),
                    x: c as f64 * block_m,
                    y: -(r as f64) * block_m,
                })
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let mut edges = Vec::with_capacity(4 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push(Edge {
                        from: id(r, c),
                        to: id(r, c + 1),
                        lambda: draw(),
                    });
                    edges.push(Edge {
                        from: id(r, c + 1),
                        to: id(r, c),
                        lambda: draw(),
                    });
                }
                if r + 1 < rows {
                    edges.push(Edge {
                        from: id(r, c),
                        to: id(r + 1, c),
                        lambda: draw(),
                    });
                    edges.push(Edge {
                        from: id(r + 1, c),
                        to: id(r, c),
                        lambda: draw(),
                    });
                }
            }
        }
        Self::new(nodes, edges, Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTopology(m));
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return bad(format!("duplicate node {}", n.id));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return bad(format!("node {} has non-finite coordinates", n.id));
            }
        }
        let mut seen = HashSet::new();
        for e in &self.edges {
            if !ids.contains(&e.from) || !ids.contains(&e.to) {
                return bad(format!("edge {} -> {} references an unknown node", e.from, e.to));
            }
            if e.from == e.to {
                return bad(format!("self loop at {}", e.from));
            }
            if !(e.lambda > 0.0 && e.lambda.is_finite()) {
                return bad(format!("edge {} -> {} needs lambda > 0", e.from, e.to));
            }
            if !seen.insert((e.from, e.to)) {
                return bad(format!("duplicate edge {} -> {}", e.from, e.to));
            }
        }
        for &(a, b) in &self.backhaul_links {
            if !ids.contains(&a) || !ids.contains(&b) {
                return bad(format!("backhaul link {a} - {b} references an unknown node"));
            }
        }
        if !self.is_connected() {
            return bad("graph is not connected".into());
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let Some(first) = self.nodes.first() else {
            return false;
        };
        let mut undirected: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for e in &self.edges {
            undirected.entry(e.from).or_default().insert(e.to);
            undirected.entry(e.to).or_default().insert(e.from);
        }
        let mut seen = HashSet::from([first.id]);
        let mut stack = vec![first.id];
        while let Some(n) = stack.pop() {
            for &m in undirected.get(&n).into_iter().flatten() {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    /// Out-neighbours in ascending id order.
    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.edges.iter().filter(|e| e.from == id).map(|e| e.to).collect();
        v.sort_unstable();
        v
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.edges.iter().filter(|e| e.from == id).count()
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        match (self.node(a), self.node(b)) {
            (Some(p), Some(q)) => (p.x - q.x).hypot(p.y - q.y),
            _ => f64::INFINITY,
        }
    }

    pub fn has_backhaul(&self, a: NodeId, b: NodeId) -> bool {
        self.backhaul_links
            .iter()
            .any(|&(u, v)| (u == a && v == b) || (u == b && v == a))
    }

    /// Links every pair of RSUs joined by a street.
    pub fn with_full_backhaul(mut self) -> Self {
        let mut links: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for e in &self.edges {
            links.insert((e.from.min(e.to), e.from.max(e.to)));
        }
        self.backhaul_links = links.into_iter().collect();
        self
    }

    /// Multiplies every arrival rate by `factor`.
    pub fn scale_lambda(&self, factor: f64) -> Result<Self> {
        let mut t = self.clone();
        for e in &mut t.edges {
            e.lambda *= factor;
        }
        t.validate()?;
        Ok(t)
    }

    /// Exit directions at `node` for a vehicle arriving there, U-turn
    /// excluded; at least one.
    pub fn exit_directions(&self, node: NodeId) -> u32 {
        (self.out_degree(node).saturating_sub(1)).max(1) as u32
    }

    /// Converts a node path into a [`Route`]. Hop `h` is the street from
    /// `path[h]` to `path[h+1]`: its arrival rate is that street's, and its
    /// `Deg` is the number of exits at the crossroad the street leads into.
    pub fn route_from_path(&self, path: &[NodeId]) -> Result<Route> {
        if path.len() < 2 {
            return Err(Error::InvalidParameter("a route needs at least two nodes".into()));
        }
        let hops = path
            .windows(2)
            .map(|w| {
                let e = self
                    .edge(w[0], w[1])
                    .ok_or_else(|| Error::InvalidTopology(format!("no street {} -> {}", w[0], w[1])))?;
                Hop::new(w[0], w[1], e.lambda, self.exit_directions(w[1]))
            })
            .collect::<Result<Vec<_>>>()?;
        Route::new(hops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let t = Topology::grid(3, 3, 250.0, (0.05, 0.3), 7).unwrap();
        assert_eq!(t.nodes.len(), 9);
        assert_eq!(t.edges.len(), 24);
        let t = Topology::grid(2, 2, 250.0, (0.05, 0.3), 7).unwrap();
        assert_eq!(t.nodes.len(), 4);
        assert_eq!(t.edges.len(), 8);
        assert!(matches!(
            Topology::grid(1, 3, 250.0, (0.05, 0.3), 7),
            Err(Error::InvalidDimensions { rows: 1, cols: 3 })
        ));
    }

    #[test]
    fn grid_is_seeded() {
        let a = Topology::grid(3, 3, 250.0, (0.05, 0.3), 11).unwrap();
        let b = Topology::grid(3, 3, 250.0, (0.05, 0.3), 11).unwrap();
        let c = Topology::grid(3, 3, 250.0, (0.05, 0.3), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.edges.iter().all(|e| (0.05..=0.3).contains(&e.lambda)));
    }

    #[test]
    fn exits_exclude_u_turn() {
        let t = Topology::grid(3, 3, 250.0, (0.05, 0.3), 1).unwrap();
        assert_eq!(t.exit_directions(0), 1);
        assert_eq!(t.exit_directions(1), 2);
        assert_eq!(t.exit_directions(4), 3);
    }

    #[test]
    fn route_from_path_uses_street_rates() {
        let t = Topology::grid(3, 3, 250.0, (0.05, 0.3), 3).unwrap();
        let r = t.route_from_path(&[0, 1, 4, 7, 8]).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.hops()[1].lambda, t.edge(1, 4).unwrap().lambda);
        assert_eq!(r.hops()[1].deg, 3);
        assert_eq!(r.hops()[3].deg, 1);
        assert!(t.route_from_path(&[0, 4]).is_err());
    }

    #[test]
    fn rejects_disconnected() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0 },
            Node { id: 1, x: 1.0, y: 0.0 },
            Node { id: 2, x: 2.0, y: 0.0 },
        ];
        let edges = vec![Edge {
            from: 0,
            to: 1,
            lambda: 0.1,
        }];
        assert!(Topology::new(nodes, edges, vec![]).is_err());
    }

    #[test]
    fn full_backhaul_mesh() {
        let t = Topology::grid(2, 3, 250.0, (0.1, 0.1), 0).unwrap().with_full_backhaul();
        assert_eq!(t.backhaul_links.len(), 7);
        assert!(t.has_backhaul(1, 0));
        assert!(!t.has_backhaul(0, 4));
    }
}
