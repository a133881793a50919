//! Hop-wise probabilistic delivery model: event probabilities, expected
//! latency and expected data rate per hop and end to end.
//!
//! Each hop ends in exactly one of three events: the courier itself drives
//! on towards the next hop, it discovers a candidate within the discovery
//! window `t`, or it fails and hands the data to the RSU, which then waits
//! for a candidate.
//!
//! The data rate of the success and failure branches depends on random
//! discovery times. The expectations below substitute the mean candidate
//! wait `1/λ` for them, which is exactly the coefficient form used by
//! [`closed_form`](crate::closed_form) and the optimizers. The simulator
//! reports the gap to the realized rates.

use serde::{Deserialize, Serialize};

use crate::params::{max_trials, Hop, Route, SystemParams};

/// Probabilities of the three mutually exclusive hop events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventProbabilities {
    pub forward: f64,
    pub success: f64,
    pub failure: f64,
}

impl EventProbabilities {
    pub fn total(&self) -> f64 {
        self.forward + self.success + self.failure
    }
}

/// Probability that the courier heads to the next hop itself: `1/Deg`.
pub fn p_courier_forward(hop: &Hop) -> f64 {
    1.0 / hop.deg as f64
}

/// Probability that a candidate heading to the next hop shows up within `t`
/// while the courier turns elsewhere.
pub fn p_candidate_arrives(hop: &Hop, t: f64) -> f64 {
    (1.0 - p_courier_forward(hop)) * -(-hop.lambda * t).exp_m1()
}

/// Probability that `m` consecutive discovery trials all fail.
pub(crate) fn all_trials_fail(params: &SystemParams, m: u32) -> f64 {
    params.trial_failure_prob().powi(m as i32)
}

pub fn p_success(hop: &Hop, t: f64, params: &SystemParams) -> f64 {
    debug_assert!((0.0..=params.hop_duration * (1.0 + 1e-12)).contains(&t));
    let m = max_trials(t, params.trial_duration);
    p_candidate_arrives(hop, t) * (1.0 - all_trials_fail(params, m))
}

pub fn p_failure(hop: &Hop, t: f64, params: &SystemParams) -> f64 {
    debug_assert!((0.0..=params.hop_duration * (1.0 + 1e-12)).contains(&t));
    let m = max_trials(t, params.trial_duration);
    let no_arrival = (-hop.lambda * t).exp();
    let turn_away = 1.0 - p_courier_forward(hop);
    turn_away * (-(-hop.lambda * t).exp_m1() * all_trials_fail(params, m) + no_arrival)
}

pub fn event_probabilities(hop: &Hop, t: f64, params: &SystemParams) -> EventProbabilities {
    EventProbabilities {
        forward: p_courier_forward(hop),
        success: p_success(hop, t, params),
        failure: p_failure(hop, t, params),
    }
}

/// Mean latency of the failure branch: the courier's own pass, the RSU's
/// wait for a candidate, and the candidate's pass, `2T + 1/λ`.
pub fn expected_failure_latency(hop: &Hop, params: &SystemParams) -> f64 {
    2.0 * params.hop_duration + hop.mean_wait()
}

pub fn expected_hop_latency(hop: &Hop, t: f64, params: &SystemParams) -> f64 {
    let p = event_probabilities(hop, t, params);
    let big_t = params.hop_duration;
    p.forward * big_t + p.success * big_t + p.failure * expected_failure_latency(hop, params)
}

pub fn expected_e2e_latency(route: &Route, t: f64, params: &SystemParams) -> f64 {
    route.hops().iter().map(|h| expected_hop_latency(h, t, params)).sum()
}

/// Rate of the success branch with the vehicle discovery time replaced by
/// `1/λ`: the V2V transfer over the rest of the hop plus the cellular
/// traffic the RSU serves outside the reserved window.
pub fn expected_success_rate(hop: &Hop, t: f64, params: &SystemParams) -> f64 {
    let big_t = params.hop_duration;
    (params.rate_v2v * (big_t - hop.mean_wait()) + params.rate_cellular * (big_t - t)) / big_t
}

/// Rate of the failure branch with the RSU discovery time replaced by `1/λ`.
pub fn expected_failure_rate(hop: &Hop, t: f64, params: &SystemParams) -> f64 {
    let big_t = params.hop_duration;
    (params.rate_v2i * (big_t - t) + params.rate_cellular * t) / expected_failure_latency(hop, params)
}

pub fn expected_hop_rate(hop: &Hop, t: f64, params: &SystemParams) -> f64 {
    let p = event_probabilities(hop, t, params);
    p.forward * params.rate_cellular
        + p.success * expected_success_rate(hop, t, params)
        + p.failure * expected_failure_rate(hop, t, params)
}

/// End-to-end rate as the weakest hop's expected rate.
pub fn e2e_rate_min_of_means(route: &Route, t: f64, params: &SystemParams) -> f64 {
    route
        .hops()
        .iter()
        .map(|h| expected_hop_rate(h, t, params))
        .fold(f64::INFINITY, f64::min)
}

/// True when `T < 1/λ`, where the mean-substituted success rate can turn
/// negative. Values are reported as computed, not clamped.
pub fn rate_regime_warning(hop: &Hop, params: &SystemParams) -> bool {
    params.hop_duration < hop.mean_wait()
}

/// Expected per-hop and end-to-end figures for one route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryEstimate {
    pub e2e_latency: f64,
    pub e2e_rate: f64,
    pub per_hop_latency: Vec<f64>,
    pub per_hop_rate: Vec<f64>,
    pub per_hop_events: Vec<EventProbabilities>,
}

impl DeliveryEstimate {
    /// Evaluates every hop with the same discovery duration `t`.
    pub fn global(route: &Route, t: f64, params: &SystemParams) -> Self {
        let durations = vec![t; route.len()];
        Self::per_hop(route, &durations, params)
    }

    /// Evaluates hop `h` with its own duration `durations[h]`; the end-to-end
    /// rate is the weakest hop.
    pub fn per_hop(route: &Route, durations: &[f64], params: &SystemParams) -> Self {
        assert_eq!(durations.len(), route.len(), "one duration per hop");
        let mut per_hop_latency = Vec::with_capacity(route.len());
        let mut per_hop_rate = Vec::with_capacity(route.len());
        let mut per_hop_events = Vec::with_capacity(route.len());
        for (hop, &t) in route.hops().iter().zip(durations) {
            per_hop_latency.push(expected_hop_latency(hop, t, params));
            per_hop_rate.push(expected_hop_rate(hop, t, params));
            per_hop_events.push(event_probabilities(hop, t, params));
        }
        Self {
            e2e_latency: per_hop_latency.iter().sum(),
            e2e_rate: per_hop_rate.iter().copied().fold(f64::INFINITY, f64::min),
            per_hop_latency,
            per_hop_rate,
            per_hop_events,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hop(lambda: f64, deg: u32) -> Hop {
        Hop::new(0, 1, lambda, deg).unwrap()
    }

    fn params() -> SystemParams {
        SystemParams::default()
    }

    #[test]
    fn forward_probability() {
        assert_eq!(p_courier_forward(&hop(0.1, 1)), 1.0);
        assert_eq!(p_courier_forward(&hop(0.1, 4)), 0.25);
        assert!((p_courier_forward(&hop(0.1, 3)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn success_edge_cases() {
        let p = params();
        for t in [0.0, 3.3, 20.0] {
            assert_eq!(p_success(&hop(0.2, 1), t, &p), 0.0);
        }
        assert_eq!(p_success(&hop(0.2, 3), 0.0, &p), 0.0);
    }

    #[test]
    fn failure_edge_cases() {
        let p = params();
        assert_eq!(p_failure(&hop(0.1, 2), 0.0, &p), 0.5);
        assert_eq!(p_failure(&hop(0.1, 1), 7.0, &p), 0.0);
    }

    #[test]
    fn latency_examples() {
        let p = params();
        assert_eq!(expected_hop_latency(&hop(0.13, 1), 5.0, &p), 20.0);
        assert!((expected_hop_latency(&hop(0.1, 2), 0.0, &p) - 35.0).abs() < 1e-12);
    }

    #[test]
    fn e2e_latency_is_sum() {
        let p = params();
        let single = Route::from_rates(&[(0.15, 3)]).unwrap();
        let h = single.hops()[0];
        assert_eq!(
            expected_e2e_latency(&single, 8.0, &p),
            expected_hop_latency(&h, 8.0, &p)
        );
        let triple = Route::from_rates(&[(0.15, 3); 3]).unwrap();
        let l3 = expected_e2e_latency(&triple, 8.0, &p);
        assert!((l3 - 3.0 * expected_hop_latency(&h, 8.0, &p)).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        let p = params();
        assert_eq!(expected_hop_rate(&hop(0.1, 1), 4.0, &p), p.rate_cellular);
        let got = expected_hop_rate(&hop(0.1, 2), 0.0, &p);
        let want = 0.5 * p.rate_cellular + 0.5 * (p.rate_v2i * 20.0) / (40.0 + 10.0);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn min_of_means_picks_weakest_hop() {
        let p = params();
        let r = Route::from_rates(&[(0.15, 3); 4]).unwrap();
        let one = expected_hop_rate(&r.hops()[0], 6.0, &p);
        assert!((e2e_rate_min_of_means(&r, 6.0, &p) - one).abs() < 1e-15);

        let r = Route::from_rates(&[(5.0, 2), (0.06, 2)]).unwrap();
        let a = expected_hop_rate(&r.hops()[0], 6.0, &p);
        let b = expected_hop_rate(&r.hops()[1], 6.0, &p);
        assert_eq!(e2e_rate_min_of_means(&r, 6.0, &p), a.min(b));
    }

    #[test]
    fn regime_warning() {
        let p = params();
        assert!(rate_regime_warning(&hop(0.04, 2), &p));
        assert!(!rate_regime_warning(&hop(0.05, 2), &p));
    }

    #[test]
    fn estimate_matches_pieces() {
        let p = params();
        let r = Route::from_rates(&[(0.1, 2), (0.3, 3), (0.05, 2)]).unwrap();
        let est = DeliveryEstimate::global(&r, 8.0, &p);
        assert!((est.e2e_latency - expected_e2e_latency(&r, 8.0, &p)).abs() < 1e-12);
        assert_eq!(est.e2e_rate, e2e_rate_min_of_means(&r, 8.0, &p));
        assert!(est.e2e_latency >= 3.0 * p.hop_duration);
    }

    fn grid_with_breakpoints(p: &SystemParams) -> Vec<f64> {
        let mut g: Vec<f64> = (0..=400).map(|i| i as f64 * p.hop_duration / 400.0).collect();
        g.extend(p.breakpoints());
        g.extend(p.breakpoints().iter().skip(1).map(|b| b - 1e-7));
        g.sort_by(f64::total_cmp);
        g
    }

    proptest! {
        #[test]
        fn probabilities_complete(lambda in 0.01f64..2.0, deg in 1u32..6, t in 0.0f64..=20.0,
                                  eps in 0.0f64..0.5) {
            let p = SystemParams { decode_error: eps, ..params() };
            let total = event_probabilities(&hop(lambda, deg), t, &p).total();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn latency_within_bounds_and_monotone(lambda in 0.02f64..1.0, deg in 1u32..5) {
            let p = params();
            let h = hop(lambda, deg);
            let hi = 2.0 * p.hop_duration + 1.0 / lambda;
            let mut prev = f64::INFINITY;
            for t in grid_with_breakpoints(&p) {
                let l = expected_hop_latency(&h, t, &p);
                prop_assert!(l >= p.hop_duration - 1e-12 && l <= hi + 1e-12);
                prop_assert!(l <= prev + 1e-12, "latency rose at t = {}", t);
                prev = l;
            }
        }

        #[test]
        fn rate_within_bounds(lambda in 0.05f64..2.0, deg in 1u32..5, t in 0.0f64..=20.0) {
            let p = params();
            let r = expected_hop_rate(&hop(lambda, deg), t, &p);
            let hi = p.rate_cellular.max(p.rate_v2v + p.rate_cellular).max(p.rate_v2i);
            prop_assert!(r >= -1e-12 && r <= hi + 1e-12);
        }

        #[test]
        fn success_monotone(lambda in 0.02f64..1.0, deg in 2u32..5, t in 0.0f64..19.0,
                            dt in 0.0f64..1.0, eps in 0.0f64..0.4, de in 0.0f64..0.1) {
            let p = SystemParams { decode_error: eps, ..params() };
            let h = hop(lambda, deg);
            let base = p_success(&h, t, &p);
            prop_assert!(p_success(&h, t + dt, &p) >= base - 1e-15);
            prop_assert!(p_success(&hop(lambda * 1.5, deg), t, &p) >= base - 1e-15);
            let worse = SystemParams { decode_error: eps + de, ..p };
            prop_assert!(p_success(&h, t, &worse) <= base + 1e-15);
        }
    }
}
