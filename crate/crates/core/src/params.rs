//! Scenario-independent parameters and the route/hop description shared by
//! every model in the crate.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// RSU identifier. RSUs sit at crossroads, so this is also the node id in a
/// [`Topology`](crate::routing::Topology).
pub type NodeId = u32;

/// Global constants of the delivery model.
///
/// Rates are in arbitrary but consistent units per second; only their ratios
/// matter to the normalized objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Dwell time `T` of a vehicle inside one hop, seconds.
    pub hop_duration: f64,
    /// Duration `Δt` of one beacon/feedback discovery trial, seconds.
    pub trial_duration: f64,
    /// Per-message decode error probability `ε`.
    pub decode_error: f64,
    /// V2V link rate `r_V2V`.
    pub rate_v2v: f64,
    /// V2I link rate `r_V2I`.
    pub rate_v2i: f64,
    /// Rate `r_O` the RSU delivers to cellular users when it is not busy
    /// relaying.
    pub rate_cellular: f64,
    /// Default weight between rate and latency in the objective.
    pub alpha: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            hop_duration: 20.0,
            trial_duration: 0.1,
            decode_error: 1e-3,
            rate_v2v: 2.0,
            rate_v2i: 1.5,
            rate_cellular: 1.0,
            alpha: 0.5,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.hop_duration.is_finite() && self.hop_duration > 0.0) {
            return bad(format!("hop_duration must be > 0, got {}", self.hop_duration));
        }
        if !(self.trial_duration > 0.0 && self.trial_duration <= self.hop_duration) {
            return bad(format!(
                "trial_duration must lie in (0, hop_duration], got {}",
                self.trial_duration
            ));
        }
        if !(0.0..1.0).contains(&self.decode_error) {
            return bad(format!("decode_error must lie in [0, 1), got {}", self.decode_error));
        }
        for (name, r) in [
            ("rate_v2v", self.rate_v2v),
            ("rate_v2i", self.rate_v2i),
            ("rate_cellular", self.rate_cellular),
        ] {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {r}"));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        Ok(())
    }

    /// Probability that a single discovery trial succeeds, `(1-ε)²`
    /// (beacon and feedback both decoded).
    pub fn trial_success_prob(&self) -> f64 {
        (1.0 - self.decode_error).powi(2)
    }

    /// `1 - (1-ε)²`.
    pub fn trial_failure_prob(&self) -> f64 {
        1.0 - self.trial_success_prob()
    }

    pub fn max_trials(&self, t: f64) -> u32 {
        max_trials(t, self.trial_duration)
    }

    /// Left ends of the smooth pieces of every `t`-dependent quantity:
    /// `0, Δt, 2Δt, …` up to but excluding `T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.max_trials(self.hop_duration);
        (0..=n)
            .map(|j| j as f64 * self.trial_duration)
            .filter(|&b| b < self.hop_duration && !is_close(b, self.hop_duration))
            .collect()
    }
}

/// Number of whole discovery trials that fit in `t`: `floor(t / Δt)`.
///
/// Quotients within `1e-9` of an integer snap to it so that grid points
/// produced as `j * Δt` land on the piece they name.
pub fn max_trials(t: f64, delta_t: f64) -> u32 {
    if t <= 0.0 {
        return 0;
    }
    let q = t / delta_t;
    let r = q.round();
    let m = if (q - r).abs() <= 1e-9 { r } else { q.floor() };
    m as u32
}

pub(crate) fn is_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// One hop of a route: the road segment covered by RSU `rsu_id`, travelled
/// towards `next_rsu_id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub rsu_id: NodeId,
    pub next_rsu_id: NodeId,
    /// Arrival rate of vehicles entering this hop and heading to the next
    /// one, vehicles/s.
    pub lambda: f64,
    /// Exit directions available to the courier, U-turn excluded.
    pub deg: u32,
}

impl Hop {
    pub fn new(rsu_id: NodeId, next_rsu_id: NodeId, lambda: f64, deg: u32) -> Result<Self> {
        let hop = Self {
            rsu_id,
            next_rsu_id,
            lambda,
            deg,
        };
        hop.validate()?;
        Ok(hop)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hop {} arrival rate must be > 0, got {}",
                self.rsu_id, self.lambda
            )));
        }
        if self.deg == 0 {
            return Err(Error::InvalidParameter(format!(
                "hop {} must have at least one exit direction",
                self.rsu_id
            )));
        }
        Ok(())
    }

    /// Mean wait for the next candidate, `1/λ`.
    pub fn mean_wait(&self) -> f64 {
        1.0 / self.lambda
    }
}

/// An ordered, loop-free sequence of hops from `source` to `destination`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub source: NodeId,
    pub destination: NodeId,
    hops: Vec<Hop>,
}

impl Route {
    pub fn new(hops: Vec<Hop>) -> Result<Self> {
        let (first, last) = match (hops.first(), hops.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::InvalidParameter("route has no hops".into())),
        };
        let mut seen = HashSet::with_capacity(hops.len() + 1);
        for (i, hop) in hops.iter().enumerate() {
            hop.validate()?;
            if i > 0 && hops[i - 1].next_rsu_id != hop.rsu_id {
                return Err(Error::InvalidParameter(format!(
                    "hop {i} starts at {} but previous hop ends at {}",
                    hop.rsu_id,
                    hops[i - 1].next_rsu_id
                )));
            }
            if !seen.insert(hop.rsu_id) {
                return Err(Error::InvalidParameter(format!("route revisits RSU {}", hop.rsu_id)));
            }
        }
        if !seen.insert(last.next_rsu_id) {
            return Err(Error::InvalidParameter(format!(
                "route revisits RSU {}",
                last.next_rsu_id
            )));
        }
        Ok(Self {
            source: first.rsu_id,
            destination: last.next_rsu_id,
            hops,
        })
    }

    /// Builds a chain `0 -> 1 -> … -> k` from `(λ, Deg)` pairs. Handy for
    /// synthetic routes that do not come from a topology.
    pub fn from_rates(hops: &[(f64, u32)]) -> Result<Self> {
        let hops = hops
            .iter()
            .enumerate()
            .map(|(i, &(lambda, deg))| Hop::new(i as NodeId, i as NodeId + 1, lambda, deg))
            .collect::<Result<Vec<_>>>()?;
        Self::new(hops)
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// RSU sequence `source, …, destination`.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.hops.iter().map(|h| h.rsu_id).collect();
        v.push(self.destination);
        v
    }

    pub fn min_lambda(&self) -> f64 {
        self.hops.iter().map(|h| h.lambda).fold(f64::INFINITY, f64::min)
    }

    /// Returns a copy with every arrival rate multiplied by `factor`.
    pub fn scale_lambda(&self, factor: f64) -> Result<Self> {
        let hops = self
            .hops
            .iter()
            .map(|h| Hop::new(h.rsu_id, h.next_rsu_id, h.lambda * factor, h.deg))
            .collect::<Result<Vec<_>>>()?;
        Self::new(hops)
    }
}
