//! Closed-form reformulation of the delivery model.
//!
//! The end-to-end latency becomes a sum of per-hop coefficient terms. The
//! end-to-end rate is decomposed into three scenarios (every hop succeeds in
//! discovery, every hop fails, or a mixture) whose rates follow from order
//! statistics: the weakest successful hop is the one with the most
//! discovery trials (maximum of geometric variables), the weakest failed hop
//! is the one whose RSU waits longest (maximum of exponential variables).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::p_courier_forward;
use crate::params::{max_trials, Hop, Route, SystemParams};
use crate::quadrature::{integrate, integrate_with_breaks, Tolerance};

/// Survival level below which the exponential-maximum integrals are cut.
pub const SURVIVAL_CUTOFF: f64 = 1e-9;

/// Probability mass under which a trial count is dropped from the success
/// CDF breakpoints. The CDF values themselves stay exact.
const NEGLIGIBLE_MASS: f64 = 1e-16;

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-10,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

/// Per-hop shorthand of the reformulated latency and rate.
///
/// `alpha_h = 1/Deg`, `phi_h = T + 1/λ`, `zeta_h = alpha_h·r_O` (rate of
/// the forwarding branch), `iota_h = r_V2V(T - 1/λ)/T + r_O`,
/// `kappa_h = r_V2I·T/(2T + 1/λ)`; the `t`-dependent pieces are methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub alpha_h: f64,
    pub phi_h: f64,
    pub zeta_h: f64,
    pub iota_h: f64,
    pub kappa_h: f64,
    lambda: f64,
    hop_duration: f64,
    trial_duration: f64,
    trial_failure: f64,
    rate_cellular: f64,
    rate_v2i: f64,
}

impl CoefficientSet {
    pub fn new(hop: &Hop, params: &SystemParams) -> Self {
        let big_t = params.hop_duration;
        let wait = hop.mean_wait();
        let alpha_h = p_courier_forward(hop);
        Self {
            alpha_h,
            phi_h: big_t + wait,
            zeta_h: alpha_h * params.rate_cellular,
            iota_h: params.rate_v2v * (big_t - wait) / big_t + params.rate_cellular,
            kappa_h: params.rate_v2i * big_t / (2.0 * big_t + wait),
            lambda: hop.lambda,
            hop_duration: big_t,
            trial_duration: params.trial_duration,
            trial_failure: params.trial_failure_prob(),
            rate_cellular: params.rate_cellular,
            rate_v2i: params.rate_v2i,
        }
    }

    /// `e^{-λt}`: no candidate within `t`.
    pub fn beta(&self, t: f64) -> f64 {
        (-self.lambda * t).exp()
    }

    /// `(1-(1-ε)²)^m`: every trial within `t` fails.
    pub fn theta(&self, t: f64) -> f64 {
        self.trial_failure.powi(max_trials(t, self.trial_duration) as i32)
    }

    /// Probability that discovery fails given the courier turns away.
    pub fn z(&self, t: f64) -> f64 {
        let b = self.beta(t);
        let th = self.theta(t);
        b + th - b * th
    }

    pub fn nu(&self, t: f64) -> f64 {
        -self.rate_cellular / self.hop_duration * t
    }

    pub fn chi(&self, t: f64) -> f64 {
        (self.rate_cellular - self.rate_v2i) * t / (2.0 * self.hop_duration + 1.0 / self.lambda)
    }

    pub fn hop_latency(&self, t: f64) -> f64 {
        self.hop_duration + (1.0 - self.alpha_h) * self.phi_h * self.z(t)
    }

    pub fn hop_rate(&self, t: f64) -> f64 {
        let z = self.z(t);
        let turn = 1.0 - self.alpha_h;
        self.zeta_h + turn * (1.0 - z) * (self.iota_h + self.nu(t)) + turn * z * (self.kappa_h + self.chi(t))
    }
}

pub fn coefficients(route: &Route, params: &SystemParams) -> Vec<CoefficientSet> {
    route.hops().iter().map(|h| CoefficientSet::new(h, params)).collect()
}

pub fn e2e_latency_closed(route: &Route, t: f64, params: &SystemParams) -> f64 {
    let k = route.len() as f64;
    k * params.hop_duration
        + coefficients(route, params)
            .iter()
            .map(|c| (1.0 - c.alpha_h) * c.phi_h * c.z(t))
            .sum::<f64>()
}

/// PMF at `x` of the maximum of `n` i.i.d. geometric variables with success
/// probability `p` (support `1, 2, …`).
pub fn geometric_max_pmf(p: f64, n: u32, x: u32) -> f64 {
    debug_assert!(p > 0.0 && p <= 1.0 && n >= 1 && x >= 1);
    geometric_max_cdf(p, n, x) - geometric_max_cdf(p, n, x - 1)
}

pub fn geometric_max_cdf(p: f64, n: u32, x: u32) -> f64 {
    (1.0 - (1.0 - p).powi(x as i32)).powi(n as i32)
}

/// Expected largest vehicle discovery time over `k` hops when every hop
/// succeeds: `Σ_{ξ=1..m} ξ·f(ξ)·Δt`. The sum stops at `m` and is not
/// renormalized.
pub fn expected_max_discovery_time(k: u32, m: u32, params: &SystemParams) -> f64 {
    let p = params.trial_success_prob();
    (1..=m).map(|xi| xi as f64 * geometric_max_pmf(p, k, xi)).sum::<f64>() * params.trial_duration
}

/// Expected end-to-end rate when discovery succeeds at every hop.
pub fn e_c_all_success(route: &Route, t: f64, params: &SystemParams) -> Result<f64> {
    let m = max_trials(t, params.trial_duration);
    if m == 0 {
        return Err(Error::InvalidRegime(format!(
            "no discovery trial fits in t = {t}; the all-success scenario has probability 0"
        )));
    }
    Ok(all_success_rate(route.len() as u32, m, t, params))
}

fn all_success_rate(k: u32, m: u32, t: f64, params: &SystemParams) -> f64 {
    let big_t = params.hop_duration;
    let e_max = expected_max_discovery_time(k, m, params);
    (params.rate_v2v * (big_t - e_max) + params.rate_cellular * (big_t - t)) / big_t
}

/// Density at `eta` of the maximum of independent exponentials with rates
/// `mu`.
pub fn exponential_max_pdf(mu: &[f64], eta: f64) -> f64 {
    if eta < 0.0 {
        return 0.0;
    }
    (0..mu.len())
        .map(|h| {
            let others: f64 = mu
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != h)
                .map(|(_, &m)| -(-m * eta).exp_m1())
                .product();
            mu[h] * (-mu[h] * eta).exp() * others
        })
        .sum()
}

pub fn exponential_max_cdf(mu: &[f64], eta: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    mu.iter().map(|&m| -(-m * eta).exp_m1()).product()
}

/// Point beyond which the survival of the exponential maximum is below
/// `survival`; uses the union bound `1 - Π(1-e^{-μx}) ≤ Σ e^{-μx}`.
pub fn exponential_max_horizon(mu: &[f64], survival: f64) -> f64 {
    let mu_min = mu.iter().copied().fold(f64::INFINITY, f64::min);
    (mu.len() as f64 / survival).ln() / mu_min
}

/// Expected maximum of independent exponentials, by integrating
/// `η·f(η)` up to the point where the survival falls below `1e-12`.
pub fn expected_max_exponential(mu: &[f64]) -> Result<f64> {
    if mu.is_empty() || mu.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidParameter(
            "exponential rates must be finite and > 0".into(),
        ));
    }
    let upper = exponential_max_horizon(mu, 1e-12);
    let r = integrate(|eta| eta * exponential_max_pdf(mu, eta), 0.0, upper, quad_tol())?;
    Ok(r.value)
}

fn route_lambdas(route: &Route) -> Vec<f64> {
    route.hops().iter().map(|h| h.lambda).collect()
}

/// Expected end-to-end rate when discovery fails at every hop.
pub fn e_c_all_failure(route: &Route, t: f64, params: &SystemParams) -> Result<f64> {
    let e_max = expected_max_exponential(&route_lambdas(route))?;
    Ok(all_failure_rate(e_max, t, params))
}

fn all_failure_rate(e_max_wait: f64, t: f64, params: &SystemParams) -> f64 {
    let big_t = params.hop_duration;
    failure_payload(t, params) / (2.0 * big_t + e_max_wait)
}

/// Data moved in a failed hop, `r_V2I(T-t) + r_O·t`.
fn failure_payload(t: f64, params: &SystemParams) -> f64 {
    params.rate_v2i * (params.hop_duration - t) + params.rate_cellular * t
}

/// `E(X) = ∫₀^∞ (1 - F(x)) dx` for a non-negative variable, truncated at
/// `upper`. Fails with [`Error::InvalidParameter`] if the survival at
/// `upper` is not below `1e-9`.
pub fn expectation_from_survival<F: Fn(f64) -> f64>(cdf: F, upper: f64) -> Result<f64> {
    expectation_from_survival_with_breaks(cdf, upper, &[])
}

/// As [`expectation_from_survival`], with the jump points of `cdf` supplied.
pub fn expectation_from_survival_with_breaks<F: Fn(f64) -> f64>(cdf: F, upper: f64, breaks: &[f64]) -> Result<f64> {
    if !(upper >= 0.0 && upper.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "truncation point must be finite and >= 0, got {upper}"
        )));
    }
    let tail = 1.0 - cdf(upper);
    if tail >= SURVIVAL_CUTOFF {
        return Err(Error::InvalidParameter(format!(
            "survival at truncation point {upper} is {tail:e}, not below {SURVIVAL_CUTOFF:e}"
        )));
    }
    let tol = Tolerance {
        abs: 1e-10,
        rel: 1e-12,
        max_intervals: 20_000,
    };
    Ok(integrate_with_breaks(|x| 1.0 - cdf(x), 0.0, upper, breaks, tol)?.value)
}

/// Distribution of the weakest success-branch rate over `k` hops: the rate
/// is `(r_V2V(T - ξΔt) + r_O(T-t))/T` where `ξ` is the largest trial count,
/// conditioned on every hop succeeding within `m` trials.
#[derive(Debug, Clone)]
struct SuccessFamily {
    // (rate, probability) sorted by rate ascending.
    atoms: Vec<(f64, f64)>,
}

impl SuccessFamily {
    fn new(k: u32, m: u32, t: f64, params: &SystemParams) -> Self {
        if m == 0 {
            return Self { atoms: Vec::new() };
        }
        let p = params.trial_success_prob();
        let big_t = params.hop_duration;
        let norm = geometric_max_cdf(p, k, m);
        let mut atoms: Vec<(f64, f64)> = (1..=m)
            .map(|xi| {
                let rate = (params.rate_v2v * (big_t - xi as f64 * params.trial_duration)
                    + params.rate_cellular * (big_t - t))
                    / big_t;
                (rate, geometric_max_pmf(p, k, xi) / norm)
            })
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { atoms }
    }

    fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|(r, _)| *r <= x)
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }

    fn breaks(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .filter(|(_, w)| *w > NEGLIGIBLE_MASS)
            .map(|(r, _)| *r)
            .collect()
    }
}

/// Distribution of the weakest failure-branch rate
/// `(r_V2I(T-t) + r_O·t)/(2T + η)` where `η` is the largest RSU wait.
#[derive(Debug, Clone)]
struct FailureFamily {
    payload: f64,
    two_t: f64,
    mu: Vec<f64>,
}

impl FailureFamily {
    fn new(route: &Route, t: f64, params: &SystemParams) -> Self {
        Self {
            payload: failure_payload(t, params),
            two_t: 2.0 * params.hop_duration,
            mu: route_lambdas(route),
        }
    }

    /// Largest attainable rate (zero wait).
    fn sup(&self) -> f64 {
        (self.payload / self.two_t).max(0.0)
    }

    fn survival(&self, x: f64) -> f64 {
        if self.payload <= 0.0 {
            return 0.0;
        }
        if x <= 0.0 {
            return 1.0;
        }
        // min rate > x  <=>  η < payload/x - 2T
        exponential_max_cdf(&self.mu, self.payload / x - self.two_t)
    }

    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }
}

struct MixtureParts {
    success: SuccessFamily,
    failure: FailureFamily,
}

impl MixtureParts {
    fn new(route: &Route, t: f64, params: &SystemParams) -> Self {
        let m = max_trials(t, params.trial_duration);
        Self {
            success: SuccessFamily::new(route.len() as u32, m, t, params),
            failure: FailureFamily::new(route, t, params),
        }
    }

    /// `P(ρ > x)` with the two families independent.
    fn survival(&self, x: f64) -> f64 {
        (1.0 - self.success.cdf(x)) * self.failure.survival(x)
    }

    /// `∫₀^cap P(ρ > x) dx`.
    fn truncated_mean(&self, cap: f64) -> Result<f64> {
        let upper = cap.min(self.failure.sup());
        if upper <= 0.0 {
            return Ok(0.0);
        }
        let r = integrate_with_breaks(|x| self.survival(x), 0.0, upper, &self.success.breaks(), quad_tol())?;
        Ok(r.value)
    }
}

/// Expected end-to-end rate of the mixture scenario,
/// `E[min(r_O, ρ)]` with `ρ = min(min_h C_Success,h, min_l C_Failure,l)`.
///
/// Uses `E[min(r_O, ρ)] = ∫₀^{r_O} P(ρ > x) dx` with the two families
/// treated as independent. Requires at least two hops.
pub fn e_c_mixture(route: &Route, t: f64, params: &SystemParams) -> Result<f64> {
    if route.len() < 2 {
        return Err(Error::InvalidRegime(
            "the mixture scenario needs at least two hops".into(),
        ));
    }
    MixtureParts::new(route, t, params).truncated_mean(params.rate_cellular)
}

/// The product-weighted variant
/// `(1 - F_s(r_O)F_f(r_O))·r_O + F_s(r_O)F_f(r_O)·E(ρ)`.
///
/// It agrees with [`e_c_mixture`] when `r_O` is zero or exceeds every
/// attainable rate; in between it is not the expectation of the minimum.
pub fn e_c_mixture_product_weighted(route: &Route, t: f64, params: &SystemParams) -> Result<f64> {
    if route.len() < 2 {
        return Err(Error::InvalidRegime(
            "the mixture scenario needs at least two hops".into(),
        ));
    }
    let parts = MixtureParts::new(route, t, params);
    let r_o = params.rate_cellular;
    let weight = parts.success.cdf(r_o) * parts.failure.cdf(r_o);
    let e_rho = parts.truncated_mean(f64::INFINITY)?;
    Ok((1.0 - weight) * r_o + weight * e_rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProbabilities {
    pub p_all_success: f64,
    pub p_all_failure: f64,
    pub p_mixture: f64,
}

pub fn scenario_probabilities(route: &Route, t: f64, params: &SystemParams) -> ScenarioProbabilities {
    let coeffs = coefficients(route, params);
    scenario_probabilities_from(&coeffs, t)
}

fn scenario_probabilities_from(coeffs: &[CoefficientSet], t: f64) -> ScenarioProbabilities {
    let mut all_success = 1.0;
    let mut all_failure = 1.0;
    for c in coeffs {
        let turn = 1.0 - c.alpha_h;
        let z = c.z(t);
        all_success *= turn * (1.0 - z);
        all_failure *= turn * z;
    }
    ScenarioProbabilities {
        p_all_success: all_success,
        p_all_failure: all_failure,
        p_mixture: (1.0 - all_success - all_failure).max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDecomposition {
    pub p_all_success: f64,
    pub p_all_failure: f64,
    pub p_mixture: f64,
    pub c_all_success: f64,
    pub c_all_failure: f64,
    pub c_mixture: f64,
}

impl ScenarioDecomposition {
    pub fn expected_rate(&self) -> f64 {
        self.p_all_success * self.c_all_success
            + self.p_all_failure * self.c_all_failure
            + self.p_mixture * self.c_mixture
    }
}

/// A route with the `t`-independent parts of the closed forms precomputed,
/// for repeated evaluation along a `t` axis.
#[derive(Debug, Clone)]
pub struct ClosedFormRoute {
    route: Route,
    params: SystemParams,
    coeffs: Vec<CoefficientSet>,
    e_max_wait: f64,
    all_forward: bool,
}

impl ClosedFormRoute {
    pub fn new(route: &Route, params: &SystemParams) -> Result<Self> {
        Ok(Self {
            route: route.clone(),
            params: *params,
            coeffs: coefficients(route, params),
            e_max_wait: expected_max_exponential(&route_lambdas(route))?,
            all_forward: route.hops().iter().all(|h| h.deg == 1),
        })
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn coefficients(&self) -> &[CoefficientSet] {
        &self.coeffs
    }

    /// `E(max_h τ^{RSU}_h)`.
    pub fn expected_max_wait(&self) -> f64 {
        self.e_max_wait
    }

    pub fn latency(&self, t: f64) -> f64 {
        self.route.len() as f64 * self.params.hop_duration
            + self
                .coeffs
                .iter()
                .map(|c| (1.0 - c.alpha_h) * c.phi_h * c.z(t))
                .sum::<f64>()
    }

    pub fn decomposition(&self, t: f64) -> Result<ScenarioDecomposition> {
        let probs = scenario_probabilities_from(&self.coeffs, t);
        let r_o = self.params.rate_cellular;
        let m = max_trials(t, self.params.trial_duration);
        let c_all_success = if probs.p_all_success > 0.0 && m > 0 {
            all_success_rate(self.route.len() as u32, m, t, &self.params)
        } else {
            0.0
        };
        let c_all_failure = if probs.p_all_failure > 0.0 {
            all_failure_rate(self.e_max_wait, t, &self.params)
        } else {
            0.0
        };
        let c_mixture = if probs.p_mixture <= 0.0 {
            0.0
        } else if self.route.len() < 2 {
            // A single hop outside both pure scenarios is the forwarding branch.
            r_o
        } else {
            MixtureParts::new(&self.route, t, &self.params).truncated_mean(r_o)?
        };
        Ok(ScenarioDecomposition {
            p_all_success: probs.p_all_success,
            p_all_failure: probs.p_all_failure,
            p_mixture: probs.p_mixture,
            c_all_success,
            c_all_failure,
            c_mixture,
        })
    }

    pub fn rate(&self, t: f64) -> Result<f64> {
        if self.all_forward {
            return Ok(self.params.rate_cellular);
        }
        Ok(self.decomposition(t)?.expected_rate())
    }
}

/// Expected end-to-end rate as the probability-weighted sum of the three
/// scenario rates. A route where every hop has a single exit never runs
/// discovery and yields `r_O`.
pub fn e2e_rate_closed(route: &Route, t: f64, params: &SystemParams) -> Result<f64> {
    ClosedFormRoute::new(route, params)?.rate(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;
    use proptest::prelude::*;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn default_like_route() -> Route {
        Route::from_rates(&[(0.12, 2), (0.27, 3), (0.08, 2), (0.19, 1)]).unwrap()
    }

    #[test]
    fn latency_closed_examples() {
        let p = params();
        let flat = Route::from_rates(&[(0.1, 1), (0.2, 1)]).unwrap();
        assert_eq!(e2e_latency_closed(&flat, 7.0, &p), 40.0);

        let r = default_like_route();
        let want: f64 = 4.0 * 20.0
            + r.hops()
                .iter()
                .map(|h| (1.0 - 1.0 / h.deg as f64) * (20.0 + 1.0 / h.lambda))
                .sum::<f64>();
        assert!((e2e_latency_closed(&r, 0.0, &p) - want).abs() < 1e-9);
        let direct = model::expected_e2e_latency(&r, 8.0, &p);
        assert!((e2e_latency_closed(&r, 8.0, &p) - direct).abs() < 1e-9);
    }

    #[test]
    fn coefficient_rate_matches_direct_rate() {
        let p = params();
        let h = Hop::new(0, 1, 0.15, 3).unwrap();
        let c = CoefficientSet::new(&h, &p);
        assert!((c.hop_rate(8.0) - model::expected_hop_rate(&h, 8.0, &p)).abs() < 1e-9);
        for t in [0.0, 0.05, 0.1, 3.0, 19.95, 20.0] {
            assert!((c.hop_rate(t) - model::expected_hop_rate(&h, t, &p)).abs() < 1e-12);
            assert!((c.hop_latency(t) - model::expected_hop_latency(&h, t, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_max_pmf_examples() {
        assert!((geometric_max_pmf(0.5, 1, 3) - 0.125).abs() < 1e-15);
        let total: f64 = (1..=200).map(|x| geometric_max_pmf(0.36, 3, x)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_success_examples() {
        let p = SystemParams {
            decode_error: 0.0,
            ..params()
        };
        let one = Route::from_rates(&[(0.1, 2)]).unwrap();
        let two = Route::from_rates(&[(0.1, 2), (0.2, 3)]).unwrap();
        let want = (p.rate_v2v * (20.0 - 0.1) + p.rate_cellular * (20.0 - 6.0)) / 20.0;
        assert!((e_c_all_success(&one, 6.0, &p).unwrap() - want).abs() < 1e-12);
        assert!((e_c_all_success(&two, 6.0, &p).unwrap() - want).abs() < 1e-12);
        assert!(matches!(e_c_all_success(&one, 0.05, &p), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn exponential_max_pdf_examples() {
        let mu = [0.3];
        for eta in [0.0, 1.0, 7.5] {
            assert!((exponential_max_pdf(&mu, eta) - 0.3 * (-0.3 * eta).exp()).abs() < 1e-15);
        }
        let iid = [0.1; 3];
        let e = expected_max_exponential(&iid).unwrap();
        assert!((e - 10.0 * (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-6);
    }

    #[test]
    fn all_failure_examples() {
        let p = params();
        let one = Route::from_rates(&[(0.1, 2)]).unwrap();
        assert!((e_c_all_failure(&one, 0.0, &p).unwrap() - 0.6).abs() < 1e-9);
        let two = Route::from_rates(&[(0.1, 2), (0.1, 3)]).unwrap();
        let want = failure_payload(5.0, &p) / (40.0 + 15.0);
        assert!((e_c_all_failure(&two, 5.0, &p).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn survival_expectation_examples() {
        let e = expectation_from_survival(|x| 1.0 - (-0.2 * x).exp(), 200.0).unwrap();
        assert!((e - 5.0).abs() < 1e-8);
        let step = expectation_from_survival_with_breaks(|x| if x < 3.25 { 0.0 } else { 1.0 }, 10.0, &[3.25]).unwrap();
        assert!((step - 3.25).abs() < 1e-12);
        let blind = expectation_from_survival(|x| if x < 3.25 { 0.0 } else { 1.0 }, 10.0).unwrap();
        assert!((blind - 3.25).abs() < 1e-8);
        let mu = [0.1, 0.1];
        let e = expectation_from_survival(|x| exponential_max_cdf(&mu, x), 400.0).unwrap();
        assert!((e - 15.0).abs() < 1e-8);
        assert!(expectation_from_survival(|x| 1.0 - (-0.2 * x).exp(), 10.0).is_err());
    }

    #[test]
    fn mixture_saturation_cases() {
        let r = Route::from_rates(&[(0.12, 2), (0.27, 3)]).unwrap();
        let zero = SystemParams {
            rate_cellular: 0.0,
            ..params()
        };
        assert_eq!(e_c_mixture(&r, 8.0, &zero).unwrap(), 0.0);
        assert_eq!(e_c_mixture_product_weighted(&r, 8.0, &zero).unwrap(), 0.0);

        // r_O above every attainable success and failure rate.
        let big = SystemParams {
            rate_cellular: 50.0,
            rate_v2v: 0.5,
            ..params()
        };
        let a = e_c_mixture(&r, 8.0, &big).unwrap();
        let b = e_c_mixture_product_weighted(&r, 8.0, &big).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        assert!(e_c_mixture(&Route::from_rates(&[(0.1, 2)]).unwrap(), 8.0, &big).is_err());
    }

    #[test]
    fn scenario_probability_examples() {
        let p = params();
        let r = Route::from_rates(&[(0.12, 2), (0.27, 1), (0.08, 3)]).unwrap();
        let s = scenario_probabilities(&r, 8.0, &p);
        assert_eq!(s.p_all_success, 0.0);
        assert_eq!(s.p_all_failure, 0.0);
        assert_eq!(s.p_mixture, 1.0);

        let r = Route::from_rates(&[(0.12, 2), (0.27, 4), (0.08, 3)]).unwrap();
        let s = scenario_probabilities(&r, 0.0, &p);
        assert_eq!(s.p_all_success, 0.0);
        assert!((s.p_all_failure - 0.5 * 0.75 * (2.0 / 3.0)).abs() < 1e-15);

        let s = scenario_probabilities(&r, 8.0, &p);
        let succ: f64 = r.hops().iter().map(|h| model::p_success(h, 8.0, &p)).product();
        let fail: f64 = r.hops().iter().map(|h| model::p_failure(h, 8.0, &p)).product();
        assert!((s.p_all_success - succ).abs() < 1e-12);
        assert!((s.p_all_failure - fail).abs() < 1e-12);
        assert!((s.p_all_success + s.p_all_failure + s.p_mixture - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_closed_corner_cases() {
        let p = params();
        let flat = Route::from_rates(&[(0.1, 1), (0.2, 1)]).unwrap();
        assert_eq!(e2e_rate_closed(&flat, 9.0, &p).unwrap(), p.rate_cellular);

        let r = Route::from_rates(&[(0.12, 2), (0.27, 3), (0.08, 2)]).unwrap();
        let d = ClosedFormRoute::new(&r, &p).unwrap().decomposition(0.0).unwrap();
        assert_eq!(d.p_all_success, 0.0);
        assert!(d.c_all_failure > 0.0);
    }

    #[test]
    fn e_c_all_success_non_increasing_in_hops() {
        let p = SystemParams {
            decode_error: 0.2,
            trial_duration: 0.5,
            ..params()
        };
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let r = Route::from_rates(&vec![(0.1, 2); k]).unwrap();
            let c = e_c_all_success(&r, 10.0, &p).unwrap();
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    proptest! {
        #[test]
        fn exponential_max_normalizes(mu in prop::collection::vec(0.05f64..5.0, 1..=6)) {
            let upper = exponential_max_horizon(&mu, 1e-13);
            let r = integrate(|x| exponential_max_pdf(&mu, x), 0.0, upper, Tolerance::default()).unwrap();
            prop_assert!((r.value - 1.0).abs() < 1e-8);
        }

        #[test]
        fn exponential_max_dominates_means(mu in prop::collection::vec(0.05f64..5.0, 1..=6)) {
            let e = expected_max_exponential(&mu).unwrap();
            let biggest = mu.iter().map(|m| 1.0 / m).fold(0.0, f64::max);
            prop_assert!(e >= biggest - 1e-9);
            // Same expectation through the survival integral.
            let s = expectation_from_survival(|x| exponential_max_cdf(&mu, x),
                                              exponential_max_horizon(&mu, 1e-12)).unwrap();
            prop_assert!((e - s).abs() < 1e-7 * e.max(1.0));
        }

        #[test]
        fn geometric_max_normalizes(p in 0.05f64..0.999, n in 1u32..8) {
            let mut x_max = 1;
            while (1.0 - p).powi(x_max) >= 1e-12 { x_max += 1; }
            let total: f64 = (1..=x_max as u32).map(|x| geometric_max_pmf(p, n, x)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn latency_identity(lams in prop::collection::vec((0.05f64..0.3, 1u32..4), 1..6),
                            t in 0.0f64..=20.0) {
            let p = params();
            let r = Route::from_rates(&lams).unwrap();
            let a = e2e_latency_closed(&r, t, &p);
            let b = model::expected_e2e_latency(&r, t, &p);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
