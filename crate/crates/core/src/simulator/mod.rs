//! Monte Carlo simulation of store-carry-and-forward delivery.
//!
//! Every (snapshot, hop) pair draws from its own ChaCha8 stream, so results
//! do not depend on how snapshots are spread over threads.

mod broadcast;

pub use broadcast::{delta_t_for_scheme, BroadcastTable, Scheme};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{max_trials, Hop, Route, SystemParams};
use crate::routing::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    CourierForward,
    DiscoverySuccess,
    DiscoveryFailure,
    BackhaulForward,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch::CourierForward,
        Branch::DiscoverySuccess,
        Branch::DiscoveryFailure,
        Branch::BackhaulForward,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// How the candidate's arrival and the discovery trials interact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Trials only start once a candidate has arrived.
    #[default]
    Coupled,
    /// Arrival and trial outcomes drawn independently, matching the
    /// analytical success probability exactly.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopOutcome {
    pub branch: Branch,
    pub latency: f64,
    /// Vehicle discovery time on success, RSU wait on failure, 0 otherwise.
    pub discovery_time: f64,
    pub hop_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotResult {
    pub e2e_latency: f64,
    pub e2e_rate: f64,
    pub per_hop: Vec<HopOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_snapshots: usize,
    pub seed: u64,
    #[serde(default)]
    pub backhaul_enabled: bool,
    /// When set, `Δt` comes from the broadcast table instead of the system
    /// parameters.
    #[serde(default)]
    pub scheme: Option<Scheme>,
    #[serde(default = "one")]
    pub beams: u32,
    #[serde(default)]
    pub table: BroadcastTable,
    #[serde(default)]
    pub mode: SamplingMode,
    /// Backhaul link rate; defaults to four times the V2I rate.
    #[serde(default)]
    pub backhaul_rate: Option<f64>,
}

fn one() -> u32 {
    1
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_snapshots: 1000,
            seed: 0,
            backhaul_enabled: false,
            scheme: None,
            beams: 1,
            table: BroadcastTable::default(),
            mode: SamplingMode::Coupled,
            backhaul_rate: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_snapshots == 0 {
            return Err(Error::InvalidParameter("need at least one snapshot".into()));
        }
        if let Some(s) = self.scheme {
            delta_t_for_scheme(s, self.beams, &self.table)?;
        }
        if let Some(r) = self.backhaul_rate {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "backhaul rate must be finite and >= 0, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// System parameters with `Δt` taken from the broadcast table when a
    /// scheme is configured.
    pub fn effective_params(&self, params: &SystemParams) -> Result<SystemParams> {
        let mut p = *params;
        if let Some(s) = self.scheme {
            p.trial_duration = delta_t_for_scheme(s, self.beams, &self.table)?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn backhaul_rate(&self, params: &SystemParams) -> f64 {
        self.backhaul_rate.unwrap_or(4.0 * params.rate_v2i)
    }
}

/// The generator for one hop of one snapshot.
pub fn substream(seed: u64, snapshot: u64, hop: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((snapshot << 16) | (hop & 0xffff));
    rng
}

/// Index of the first successful trial among `first..=last`, if any.
fn first_success<R: Rng>(rng: &mut R, first: u32, last: u32, p: f64) -> Option<u32> {
    (first..=last).find(|_| rng.random::<f64>() < p)
}

/// One hop. Draws happen in a fixed order (direction, arrival, trials, RSU
/// wait) and the RSU wait is drawn on every failure, with or without
/// backhaul, so that runs with and without backhaul stay coupled.
pub fn simulate_hop<R: Rng>(
    hop: &Hop,
    t: f64,
    params: &SystemParams,
    mode: SamplingMode,
    backhaul_rate: Option<f64>,
    rng: &mut R,
) -> HopOutcome {
    let big_t = params.hop_duration;
    let dt = params.trial_duration;
    let r_o = params.rate_cellular;
    let courier_forwards = rng.random_range(0..hop.deg) == 0;
    if courier_forwards {
        return HopOutcome {
            branch: Branch::CourierForward,
            latency: big_t,
            discovery_time: 0.0,
            hop_rate: r_o,
        };
    }
    let wait = Exp::new(hop.lambda).expect("validated hop has lambda > 0");
    let arrival = wait.sample(rng);
    let m = max_trials(t, dt);
    let p = params.trial_success_prob();
    let success = match mode {
        SamplingMode::Coupled if arrival <= t => {
            let first = max_trials(arrival, dt) + u32::from(!is_grid_point(arrival, dt));
            first_success(rng, first.max(1), m, p)
        }
        SamplingMode::Coupled => None,
        SamplingMode::Independent => {
            let trial = first_success(rng, 1, m, p);
            trial.filter(|_| arrival <= t)
        }
    };
    if let Some(i) = success {
        let tau = i as f64 * dt;
        return HopOutcome {
            branch: Branch::DiscoverySuccess,
            latency: big_t,
            discovery_time: tau,
            hop_rate: (params.rate_v2v * (big_t - tau) + r_o * (big_t - t)) / big_t,
        };
    }
    let rsu_wait = wait.sample(rng);
    match backhaul_rate {
        Some(r_bh) => HopOutcome {
            branch: Branch::BackhaulForward,
            latency: big_t,
            discovery_time: 0.0,
            hop_rate: (r_bh * (big_t - t) + r_o * t) / big_t,
        },
        None => {
            let latency = 2.0 * big_t + rsu_wait;
            HopOutcome {
                branch: Branch::DiscoveryFailure,
                latency,
                discovery_time: rsu_wait,
                hop_rate: (params.rate_v2i * (big_t - t) + r_o * t) / latency,
            }
        }
    }
}

fn is_grid_point(x: f64, dt: f64) -> bool {
    let r = x / dt;
    (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)
}

/// One end-to-end delivery; `durations` holds the discovery duration of
/// every hop and `backhaul[h]` whether hop `h` may use the backhaul.
pub fn simulate_snapshot(
    route: &Route,
    durations: &[f64],
    params: &SystemParams,
    config: &SimConfig,
    backhaul: &[bool],
    snapshot: u64,
) -> SnapshotResult {
    let r_bh = config.backhaul_rate(params);
    let per_hop: Vec<HopOutcome> = route
        .hops()
        .iter()
        .enumerate()
        .map(|(h, hop)| {
            let mut rng = substream(config.seed, snapshot, h as u64);
            let link = backhaul[h].then_some(r_bh);
            simulate_hop(hop, durations[h], params, config.mode, link, &mut rng)
        })
        .collect();
    SnapshotResult {
        e2e_latency: per_hop.iter().map(|o| o.latency).sum(),
        e2e_rate: per_hop.iter().map(|o| o.hop_rate).fold(f64::INFINITY, f64::min),
        per_hop,
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl MeanEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in samples {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let std_error = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopStats {
    pub latency: MeanEstimate,
    pub rate: MeanEstimate,
    /// Frequencies of forward, success, failure and backhaul, in that order.
    pub branch_frequencies: [f64; 4],
}

impl HopStats {
    fn from_outcomes<'a, I: Iterator<Item = &'a HopOutcome> + Clone>(outcomes: I) -> Self {
        let mut counts = [0usize; 4];
        let mut n = 0usize;
        for o in outcomes.clone() {
            counts[o.branch.index()] += 1;
            n += 1;
        }
        Self {
            latency: MeanEstimate::from_samples(outcomes.clone().map(|o| o.latency)),
            rate: MeanEstimate::from_samples(outcomes.map(|o| o.hop_rate)),
            branch_frequencies: counts.map(|c| c as f64 / n.max(1) as f64),
        }
    }

    pub fn frequency(&self, branch: Branch) -> f64 {
        self.branch_frequencies[branch.index()]
    }

    /// Standard error of a branch frequency.
    pub fn frequency_error(&self, branch: Branch, n: usize) -> f64 {
        let p = self.frequency(branch);
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Empirical counterpart of the analytical delivery estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub n_snapshots: usize,
    pub latency: MeanEstimate,
    pub rate: MeanEstimate,
    pub per_hop: Vec<HopStats>,
    /// Branch frequencies pooled over all hops.
    pub branch_frequencies: [f64; 4],
}

impl EmpiricalEstimate {
    pub fn from_snapshots(snapshots: &[SnapshotResult]) -> Self {
        let hops = snapshots.first().map_or(0, |s| s.per_hop.len());
        let per_hop = (0..hops)
            .map(|h| HopStats::from_outcomes(snapshots.iter().map(move |s| &s.per_hop[h])))
            .collect();
        let pooled = HopStats::from_outcomes(snapshots.iter().flat_map(|s| s.per_hop.iter()));
        Self {
            n_snapshots: snapshots.len(),
            latency: MeanEstimate::from_samples(snapshots.iter().map(|s| s.e2e_latency)),
            rate: MeanEstimate::from_samples(snapshots.iter().map(|s| s.e2e_rate)),
            per_hop,
            branch_frequencies: pooled.branch_frequencies,
        }
    }

    pub fn frequency(&self, branch: Branch) -> f64 {
        self.branch_frequencies[branch.index()]
    }
}

fn check_durations(route: &Route, durations: &[f64], params: &SystemParams) -> Result<()> {
    if durations.len() != route.len() {
        return Err(Error::InvalidParameter(format!(
            "{} durations for a route of {} hops",
            durations.len(),
            route.len()
        )));
    }
    if let Some(t) = durations.iter().find(|&&t| !(0.0..=params.hop_duration).contains(&t)) {
        return Err(Error::InvalidParameter(format!(
            "discovery duration {t} outside [0, {}]",
            params.hop_duration
        )));
    }
    Ok(())
}

fn run(
    route: &Route,
    durations: &[f64],
    params: &SystemParams,
    config: &SimConfig,
    backhaul: &[bool],
) -> Result<Vec<SnapshotResult>> {
    config.validate()?;
    let p = config.effective_params(params)?;
    check_durations(route, durations, &p)?;
    Ok((0..config.n_snapshots as u64)
        .into_par_iter()
        .map(|s| simulate_snapshot(route, durations, &p, config, backhaul, s))
        .collect())
}

/// Per-snapshot results for one shared duration or one per hop.
pub fn simulate_snapshots(
    route: &Route,
    durations: &[f64],
    params: &SystemParams,
    config: &SimConfig,
) -> Result<Vec<SnapshotResult>> {
    run(route, durations, params, config, &vec![false; route.len()])
}

/// Shared duration `t` on every hop.
pub fn simulate_route(route: &Route, t: f64, params: &SystemParams, config: &SimConfig) -> Result<EmpiricalEstimate> {
    simulate_route_per_hop(route, &vec![t; route.len()], params, config)
}

pub fn simulate_route_per_hop(
    route: &Route,
    durations: &[f64],
    params: &SystemParams,
    config: &SimConfig,
) -> Result<EmpiricalEstimate> {
    Ok(EmpiricalEstimate::from_snapshots(&simulate_snapshots(
        route, durations, params, config,
    )?))
}

/// Like [`simulate_route`], but a failed discovery at a hop whose RSU has a
/// backhaul link to the next RSU hands the data over that link instead of
/// waiting for a candidate. Backhaul is only used when
/// `config.backhaul_enabled` is set.
pub fn simulate_with_backhaul(
    route: &Route,
    t: f64,
    params: &SystemParams,
    config: &SimConfig,
    topology: &Topology,
) -> Result<EmpiricalEstimate> {
    let backhaul: Vec<bool> = route
        .hops()
        .iter()
        .map(|h| config.backhaul_enabled && topology.has_backhaul(h.rsu_id, h.next_rsu_id))
        .collect();
    let snapshots = run(route, &vec![t; route.len()], params, config, &backhaul)?;
    Ok(EmpiricalEstimate::from_snapshots(&snapshots))
}

/// `n` independent draws of a single hop, for checking branch frequencies
/// and the hop latency against the analytical model.
pub fn simulate_hop_trials(
    hop: &Hop,
    t: f64,
    params: &SystemParams,
    mode: SamplingMode,
    n: usize,
    seed: u64,
) -> Result<HopStats> {
    params.validate()?;
    hop.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let outcomes: Vec<HopOutcome> = (0..n as u64)
        .into_par_iter()
        .map(|i| simulate_hop(hop, t, params, mode, None, &mut substream(seed, i, 0)))
        .collect();
    Ok(HopStats::from_outcomes(outcomes.iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn single_exit_always_forwards() {
        let p = params();
        let r = Route::from_rates(&[(0.1, 1), (0.2, 1), (0.3, 1)]).unwrap();
        let est = simulate_route(
            &r,
            5.0,
            &p,
            &SimConfig {
                n_snapshots: 200,
                ..SimConfig::default()
            },
        )
        .unwrap();
        assert_eq!(est.latency.mean, 60.0);
        assert_eq!(est.latency.std_error, 0.0);
        assert_eq!(est.rate.mean, p.rate_cellular);
        assert_eq!(est.frequency(Branch::CourierForward), 1.0);
    }

    #[test]
    fn zero_window_never_succeeds() {
        let p = params();
        let hop = Route::from_rates(&[(0.3, 3)]).unwrap().hops()[0];
        for mode in [SamplingMode::Coupled, SamplingMode::Independent] {
            let s = simulate_hop_trials(&hop, 0.0, &p, mode, 5000, 3).unwrap();
            assert_eq!(s.frequency(Branch::DiscoverySuccess), 0.0);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let p = params();
        let r = Route::from_rates(&[(0.1, 3), (0.2, 2)]).unwrap();
        let c = SimConfig {
            n_snapshots: 1,
            seed: 42,
            ..SimConfig::default()
        };
        let a = simulate_snapshots(&r, &[3.0, 3.0], &p, &c).unwrap();
        let b = simulate_snapshots(&r, &[3.0, 3.0], &p, &c).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = SimConfig { n_snapshots: 300, ..c };
        let serial = pool.install(|| simulate_route(&r, 3.0, &p, &c)).unwrap();
        assert_eq!(serial, simulate_route(&r, 3.0, &p, &c).unwrap());
    }

    #[test]
    fn snapshot_latency_is_sum_of_hops() {
        let p = params();
        let r = Route::from_rates(&[(0.1, 3), (0.05, 2), (0.2, 3)]).unwrap();
        let c = SimConfig {
            n_snapshots: 50,
            seed: 9,
            ..SimConfig::default()
        };
        for s in simulate_snapshots(&r, &[1.0, 2.0, 3.0], &p, &c).unwrap() {
            let sum: f64 = s.per_hop.iter().map(|o| o.latency).sum();
            assert_eq!(s.e2e_latency, sum);
            let min = s.per_hop.iter().map(|o| o.hop_rate).fold(f64::INFINITY, f64::min);
            assert_eq!(s.e2e_rate, min);
            for o in &s.per_hop {
                match o.branch {
                    Branch::CourierForward | Branch::DiscoverySuccess => assert_eq!(o.latency, p.hop_duration),
                    Branch::DiscoveryFailure => assert_eq!(o.latency, 2.0 * p.hop_duration + o.discovery_time),
                    Branch::BackhaulForward => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn independent_mode_matches_branch_probabilities() {
        let p = params();
        let hop = Route::from_rates(&[(0.1, 3)]).unwrap().hops()[0];
        let n = 200_000;
        let s = simulate_hop_trials(&hop, 8.0, &p, SamplingMode::Independent, n, 1).unwrap();
        let e = model::event_probabilities(&hop, 8.0, &p);
        for (b, want) in [
            (Branch::CourierForward, e.forward),
            (Branch::DiscoverySuccess, e.success),
            (Branch::DiscoveryFailure, e.failure),
        ] {
            let got = s.frequency(b);
            assert!(
                (got - want).abs() < 4.0 * s.frequency_error(b, n).max(1e-6),
                "{b:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn backhaul_without_links_is_identical() {
        let p = params();
        let topo = Topology::grid(2, 2, 250.0, (0.05, 0.3), 1).unwrap();
        let r = topo.route_from_path(&[0, 1, 3]).unwrap();
        let c = SimConfig {
            n_snapshots: 500,
            seed: 5,
            backhaul_enabled: true,
            ..SimConfig::default()
        };
        let with = simulate_with_backhaul(&r, 1.0, &p, &c, &topo).unwrap();
        assert_eq!(with, simulate_route(&r, 1.0, &p, &c).unwrap());
    }

    #[test]
    fn backhaul_only_shortens_paths() {
        let p = params();
        let topo = Topology::grid(3, 3, 250.0, (0.05, 0.3), 1).unwrap();
        let mesh = topo.clone().with_full_backhaul();
        let r = topo.route_from_path(&[0, 1, 4, 7, 8]).unwrap();
        let c = SimConfig {
            n_snapshots: 2000,
            seed: 5,
            backhaul_enabled: true,
            ..SimConfig::default()
        };
        let base = simulate_route(&r, 0.0, &p, &c).unwrap();
        let bh = simulate_with_backhaul(&r, 0.0, &p, &c, &mesh).unwrap();
        assert!(bh.latency.mean < base.latency.mean);
        assert!(bh.frequency(Branch::BackhaulForward) > 0.0);
        assert_eq!(bh.frequency(Branch::DiscoveryFailure), 0.0);
    }

    #[test]
    fn scheme_overrides_trial_duration() {
        let p = params();
        let c = SimConfig {
            scheme: Some(Scheme::Fd),
            beams: 4,
            ..SimConfig::default()
        };
        assert!((c.effective_params(&p).unwrap().trial_duration - 0.14).abs() < 1e-15);
        let bad = SimConfig {
            scheme: Some(Scheme::Td),
            beams: 3,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SimConfig {
            n_snapshots: 0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn rejects_mismatched_durations() {
        let p = params();
        let r = Route::from_rates(&[(0.1, 3), (0.2, 2)]).unwrap();
        let c = SimConfig::default();
        assert!(simulate_route_per_hop(&r, &[1.0], &p, &c).is_err());
        assert!(simulate_route_per_hop(&r, &[1.0, 25.0], &p, &c).is_err());
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanEstimate::from_samples([7.0]).std_error, 0.0);
    }
}
