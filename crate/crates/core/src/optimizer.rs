//! Weighted-sum objective, min-max normalization and the solvers for the
//! global discovery duration `t*` and the per-hop durations `t̂_h*`.
//!
//! Every analytical series is piecewise smooth in `t`: the number of
//! discovery trials `floor(t/Δt)` jumps at each multiple of `Δt`. The solvers
//! work piece by piece. Inside a piece they look for stationary points with a
//! central-difference derivative and bisection. The candidate set is
//! `{0, T}`, every breakpoint, the left limit at every piece end, and every
//! stationary point. Ties go to the smallest `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{ClosedFormRoute, CoefficientSet};
use crate::error::{Error, Result};
use crate::model;
use crate::params::{Hop, Route, SystemParams};

/// Derivative step as a fraction of `Δt`.
const DERIVATIVE_STEP: f64 = 1e-4;
/// Offset used for the left limit at a piece end, as a fraction of `Δt`.
const LEFT_LIMIT: f64 = 1e-7;
/// Bisection stops once the bracket is narrower than this fraction of `T`.
const BRACKET: f64 = 1e-6;
/// Derivative samples per piece when scanning for sign changes.
const SAMPLES_PER_PIECE: usize = 6;
/// Stationarity tolerance of the KKT check, relative to the objective scale.
const KKT_TOLERANCE: f64 = 1e-6;
/// Second differences up to this value still count as concave.
const CONCAVITY_TOLERANCE: f64 = 1e-9;

/// How the end-to-end rate of a route is computed for a shared duration `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// Probability-weighted all-success / all-failure / mixture form.
    #[default]
    Scenario,
    /// Expected rate of the weakest hop.
    WeakestHop,
}

/// Latency and rate of one route as functions of a shared duration `t`.
#[derive(Debug, Clone)]
pub enum RouteSeries {
    Scenario(Box<ClosedFormRoute>),
    WeakestHop { route: Route, params: SystemParams },
}

impl RouteSeries {
    pub fn new(route: &Route, params: &SystemParams, model: RateModel) -> Result<Self> {
        Ok(match model {
            RateModel::Scenario => Self::Scenario(Box::new(ClosedFormRoute::new(route, params)?)),
            RateModel::WeakestHop => Self::WeakestHop {
                route: route.clone(),
                params: *params,
            },
        })
    }

    pub fn latency(&self, t: f64) -> f64 {
        match self {
            Self::Scenario(cf) => cf.latency(t),
            Self::WeakestHop { route, params } => model::expected_e2e_latency(route, t, params),
        }
    }

    pub fn rate(&self, t: f64) -> Result<f64> {
        match self {
            Self::Scenario(cf) => cf.rate(t),
            Self::WeakestHop { route, params } => Ok(model::e2e_rate_min_of_means(route, t, params)),
        }
    }
}

/// Min-max bounds for latency and rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationContext {
    pub latency_min: f64,
    pub latency_max: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub rate_model: RateModel,
    pub grid: Vec<f64>,
}

fn min_max_normalize(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

impl NormalizationContext {
    /// Latency in `[0, 1]`; values outside the bounds are clamped and a
    /// constant series maps to 0.
    pub fn norm_latency(&self, latency: f64) -> f64 {
        min_max_normalize(latency, self.latency_min, self.latency_max)
    }

    pub fn norm_rate(&self, rate: f64) -> f64 {
        min_max_normalize(rate, self.rate_min, self.rate_max)
    }

    pub fn objective(&self, alpha: f64, latency: f64, rate: f64) -> f64 {
        weighted_sum(alpha, self.norm_rate(rate), self.norm_latency(latency))
    }

    /// The same affine maps without clamping, for values that live on a
    /// different scale than the bounds (a single hop against route bounds).
    pub fn objective_unclamped(&self, alpha: f64, latency: f64, rate: f64) -> f64 {
        let affine = |x: f64, lo: f64, hi: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
        weighted_sum(
            alpha,
            affine(rate, self.rate_min, self.rate_max),
            affine(latency, self.latency_min, self.latency_max),
        )
    }
}

/// Which bounds a hop uses when picking its own duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopNormalization {
    /// Min-max bounds of the hop's own latency and rate series.
    #[default]
    Own,
    /// The route-level bounds, applied as plain affine maps.
    Shared,
}

/// `α·C − (1 − α)·L` over normalized rate and latency.
pub fn weighted_sum(alpha: f64, norm_rate: f64, norm_latency: f64) -> f64 {
    alpha * norm_rate - (1.0 - alpha) * norm_latency
}

/// The normalization grid: 0, every multiple of `Δt` below `T`, and `T`.
pub fn duration_grid(params: &SystemParams) -> Vec<f64> {
    let mut g = params.breakpoints();
    g.push(params.hop_duration);
    g
}

/// Smooth pieces `[jΔt, (j+1)Δt)`; the last one is closed at `T`.
pub fn pieces(params: &SystemParams) -> Vec<(f64, f64)> {
    duration_grid(params).windows(2).map(|w| (w[0], w[1])).collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

/// A point found by [`maximize_piecewise`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub t: f64,
    pub value: f64,
}

struct PieceGeometry {
    step: f64,
    left_limit: f64,
    horizon: f64,
}

impl PieceGeometry {
    fn new(params: &SystemParams) -> Self {
        Self {
            step: DERIVATIVE_STEP * params.trial_duration,
            left_limit: LEFT_LIMIT * params.trial_duration,
            horizon: params.hop_duration,
        }
    }

    /// Rightmost point that still belongs to the piece `[a, e)`.
    fn last_point(&self, e: f64) -> f64 {
        if e >= self.horizon {
            self.horizon
        } else {
            e - self.left_limit
        }
    }
}

/// Central difference of `f` at `t`, with both sample points kept inside
/// the piece `[a, e)`.
fn derivative<F>(f: &F, t: f64, (a, e): (f64, f64), g: &PieceGeometry) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let lo = (t - g.step).max(a);
    let hi = (t + g.step).min(g.last_point(e));
    Ok((f(hi)? - f(lo)?) / (hi - lo))
}

fn stationary_maxima<F>(f: &F, piece: (f64, f64), g: &PieceGeometry, out: &mut Vec<f64>) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let (a, e) = piece;
    let lo = a + 2.0 * g.step;
    let hi = g.last_point(e) - 2.0 * g.step;
    if hi <= lo {
        return Ok(());
    }
    let xs: Vec<f64> = (0..=SAMPLES_PER_PIECE)
        .map(|i| lo + (hi - lo) * i as f64 / SAMPLES_PER_PIECE as f64)
        .collect();
    let ds = xs
        .iter()
        .map(|&x| derivative(f, x, piece, g))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..SAMPLES_PER_PIECE {
        if !(ds[i] > 0.0 && ds[i + 1] <= 0.0) {
            continue;
        }
        let (mut l, mut r) = (xs[i], xs[i + 1]);
        while r - l > BRACKET * g.horizon {
            let mid = 0.5 * (l + r);
            if derivative(f, mid, piece, g)? > 0.0 {
                l = mid;
            } else {
                r = mid;
            }
        }
        out.push(0.5 * (l + r));
    }
    Ok(())
}

/// Maximizes a piecewise-smooth `f` over `[0, T]`.
pub fn maximize_piecewise<F>(f: F, params: &SystemParams) -> Result<Maximum>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = PieceGeometry::new(params);
    let mut candidates = vec![0.0, params.hop_duration];
    for piece in pieces(params) {
        candidates.push(piece.0);
        candidates.push(g.last_point(piece.1));
        stationary_maxima(&f, piece, &g, &mut candidates)?;
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = Maximum {
        t: candidates[0],
        value: f(candidates[0])?,
    };
    for &t in &candidates[1..] {
        let value = f(t)?;
        if value > best.value {
            best = Maximum { t, value };
        }
    }
    Ok(best)
}

fn extend_range(range: &mut (f64, f64), x: f64) {
    range.0 = range.0.min(x);
    range.1 = range.1.max(x);
}

/// Latency and rate bounds of a pair of series: the grid values plus the
/// rate's extreme points found by the piecewise search, so that a solver
/// never meets a value outside the bounds.
fn series_bounds<L, C>(latency: L, rate: C, params: &SystemParams) -> Result<[(f64, f64); 2]>
where
    L: Fn(f64) -> f64,
    C: Fn(f64) -> Result<f64>,
{
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rat = (f64::INFINITY, f64::NEG_INFINITY);
    for t in duration_grid(params) {
        extend_range(&mut lat, latency(t));
        extend_range(&mut rat, rate(t)?);
    }
    // Latency is non-increasing in t, so the grid already holds its extremes.
    extend_range(&mut rat, maximize_piecewise(&rate, params)?.value);
    extend_range(&mut rat, -maximize_piecewise(|t| rate(t).map(|c| -c), params)?.value);
    Ok([lat, rat])
}

/// Shared min-max bounds over every route and every grid duration.
pub fn build_normalization(
    routes: &[Route],
    params: &SystemParams,
    rate_model: RateModel,
) -> Result<NormalizationContext> {
    if routes.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot normalize over an empty route set".into(),
        ));
    }
    params.validate()?;
    let bounds = routes
        .par_iter()
        .map(|r| {
            let s = RouteSeries::new(r, params, rate_model)?;
            series_bounds(|t| s.latency(t), |t| s.rate(t), params)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rat = (f64::INFINITY, f64::NEG_INFINITY);
    for [l, c] in bounds {
        extend_range(&mut lat, l.0);
        extend_range(&mut lat, l.1);
        extend_range(&mut rat, c.0);
        extend_range(&mut rat, c.1);
    }
    Ok(NormalizationContext {
        latency_min: lat.0,
        latency_max: lat.1,
        rate_min: rat.0,
        rate_max: rat.1,
        rate_model,
        grid: duration_grid(params),
    })
}

/// Own min-max bounds of a single hop's latency and rate series.
pub fn hop_normalization(hop: &Hop, params: &SystemParams) -> Result<NormalizationContext> {
    params.validate()?;
    let c = CoefficientSet::new(hop, params);
    let [lat, rat] = series_bounds(|t| c.hop_latency(t), |t| Ok(c.hop_rate(t)), params)?;
    Ok(NormalizationContext {
        latency_min: lat.0,
        latency_max: lat.1,
        rate_min: rat.0,
        rate_max: rat.1,
        rate_model: RateModel::WeakestHop,
        grid: duration_grid(params),
    })
}

/// Discovery durations chosen by a solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Durations {
    Global(f64),
    PerHop(Vec<f64>),
}

impl Durations {
    /// Duration used at hop `h`.
    pub fn at(&self, h: usize) -> f64 {
        match self {
            Self::Global(t) => *t,
            Self::PerHop(v) => v[h],
        }
    }

    pub fn as_vec(&self, hops: usize) -> Vec<f64> {
        (0..hops).map(|h| self.at(h)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationOutcome {
    pub objective: f64,
    pub durations: Durations,
    pub route_index: usize,
    pub latency: f64,
    pub rate: f64,
    pub norm_latency: f64,
    pub norm_rate: f64,
}

impl OptimizationOutcome {
    pub fn t_star(&self) -> Option<f64> {
        match self.durations {
            Durations::Global(t) => Some(t),
            Durations::PerHop(_) => None,
        }
    }

    pub fn t_hat(&self) -> Option<&[f64]> {
        match &self.durations {
            Durations::Global(_) => None,
            Durations::PerHop(v) => Some(v),
        }
    }
}

/// Normalized weighted sum of a route at a shared duration `t`.
pub fn global_objective(series: &RouteSeries, alpha: f64, norm: &NormalizationContext, t: f64) -> Result<f64> {
    Ok(norm.objective(alpha, series.latency(t), series.rate(t)?))
}

/// Best shared duration for one route.
pub fn solve_global(
    route: &Route,
    params: &SystemParams,
    alpha: f64,
    norm: &NormalizationContext,
) -> Result<OptimizationOutcome> {
    check_alpha(alpha)?;
    let series = RouteSeries::new(route, params, norm.rate_model)?;
    let best = maximize_piecewise(|t| global_objective(&series, alpha, norm, t), params)?;
    let (latency, rate) = (series.latency(best.t), series.rate(best.t)?);
    Ok(OptimizationOutcome {
        objective: best.value,
        durations: Durations::Global(best.t),
        route_index: 0,
        latency,
        rate,
        norm_latency: norm.norm_latency(latency),
        norm_rate: norm.norm_rate(rate),
    })
}

/// Weighted sum of one hop under its own normalization.
pub fn hop_objective(hop: &Hop, params: &SystemParams, alpha: f64, norm: &NormalizationContext, t: f64) -> f64 {
    let c = CoefficientSet::new(hop, params);
    norm.objective(alpha, c.hop_latency(t), c.hop_rate(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopSolution {
    pub t_hat: f64,
    pub objective: f64,
    pub latency: f64,
    pub rate: f64,
    pub normalization: NormalizationContext,
}

/// Best discovery duration for a single hop, judged by the hop's own
/// latency and rate.
pub fn solve_hop(hop: &Hop, params: &SystemParams, alpha: f64) -> Result<HopSolution> {
    check_alpha(alpha)?;
    let normalization = hop_normalization(hop, params)?;
    let best = maximize_piecewise(|t| Ok(hop_objective(hop, params, alpha, &normalization, t)), params)?;
    let c = CoefficientSet::new(hop, params);
    Ok(HopSolution {
        t_hat: best.t,
        objective: best.value,
        latency: c.hop_latency(best.t),
        rate: c.hop_rate(best.t),
        normalization,
    })
}

/// Per-hop durations for one route. Each hop is solved on its own; the
/// route is then scored with the summed latency and the weakest hop's rate
/// under `norm`.
pub fn solve_distributed(
    route: &Route,
    params: &SystemParams,
    alpha: f64,
    norm: &NormalizationContext,
) -> Result<OptimizationOutcome> {
    Ok(solve_distributed_detailed(route, params, alpha, norm, HopNormalization::Own)?.0)
}

/// Best duration for a hop judged on the route-level scale of `norm`.
pub fn solve_hop_shared(
    hop: &Hop,
    params: &SystemParams,
    alpha: f64,
    norm: &NormalizationContext,
) -> Result<HopSolution> {
    check_alpha(alpha)?;
    let c = CoefficientSet::new(hop, params);
    let best = maximize_piecewise(
        |t| Ok(norm.objective_unclamped(alpha, c.hop_latency(t), c.hop_rate(t))),
        params,
    )?;
    Ok(HopSolution {
        t_hat: best.t,
        objective: best.value,
        latency: c.hop_latency(best.t),
        rate: c.hop_rate(best.t),
        normalization: norm.clone(),
    })
}

pub fn solve_distributed_detailed(
    route: &Route,
    params: &SystemParams,
    alpha: f64,
    norm: &NormalizationContext,
    hop_scale: HopNormalization,
) -> Result<(OptimizationOutcome, Vec<HopSolution>)> {
    check_alpha(alpha)?;
    let hops = route
        .hops()
        .iter()
        .map(|h| match hop_scale {
            HopNormalization::Own => solve_hop(h, params, alpha),
            HopNormalization::Shared => solve_hop_shared(h, params, alpha, norm),
        })
        .collect::<Result<Vec<_>>>()?;
    let latency: f64 = hops.iter().map(|h| h.latency).sum();
    let rate = hops.iter().map(|h| h.rate).fold(f64::INFINITY, f64::min);
    let outcome = OptimizationOutcome {
        objective: norm.objective(alpha, latency, rate),
        durations: Durations::PerHop(hops.iter().map(|h| h.t_hat).collect()),
        route_index: 0,
        latency,
        rate,
        norm_latency: norm.norm_latency(latency),
        norm_rate: norm.norm_rate(rate),
    };
    Ok((outcome, hops))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    /// Share of interior sample points whose second difference is at most
    /// the tolerance.
    pub fraction_concave: f64,
    pub points_checked: usize,
    pub worst_second_difference: f64,
}

impl ConcavityReport {
    pub fn holds(&self) -> bool {
        self.fraction_concave == 1.0
    }
}

/// Samples the raw objective `α·C − (1 − α)·L` densely inside every smooth
/// piece and checks the sign of its second differences.
pub fn verify_concavity(
    route: &Route,
    params: &SystemParams,
    alpha: f64,
    rate_model: RateModel,
    samples_per_piece: usize,
) -> Result<ConcavityReport> {
    check_alpha(alpha)?;
    let series = RouteSeries::new(route, params, rate_model)?;
    let raw = |t: f64| -> Result<f64> { Ok(alpha * series.rate(t)? - (1.0 - alpha) * series.latency(t)) };
    let g = PieceGeometry::new(params);
    let n = samples_per_piece.max(3);
    let mut checked = 0usize;
    let mut concave = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for (a, e) in pieces(params) {
        let last = g.last_point(e);
        let h = (last - a) / (n - 1) as f64;
        let values = (0..n).map(|i| raw(a + h * i as f64)).collect::<Result<Vec<_>>>()?;
        for w in values.windows(3) {
            let d2 = w[0] - 2.0 * w[1] + w[2];
            checked += 1;
            if d2 <= CONCAVITY_TOLERANCE {
                concave += 1;
            }
            worst = worst.max(d2);
        }
    }
    Ok(ConcavityReport {
        fraction_concave: concave as f64 / checked as f64,
        points_checked: checked,
        worst_second_difference: worst,
    })
}

/// Where `t` sits relative to the smooth piece that contains it.
enum Position {
    LeftEnd,
    RightEnd,
    Interior,
    LeftAndRight,
}

fn locate(t: f64, params: &SystemParams, g: &PieceGeometry) -> ((f64, f64), Position) {
    let ps = pieces(params);
    let idx = ps.iter().rposition(|&(a, _)| a <= t).unwrap_or(0);
    let piece = ps[idx];
    let near_left = t - piece.0 < 2.0 * g.step;
    let near_right = g.last_point(piece.1) - t < 2.0 * g.step;
    let pos = match (near_left, near_right) {
        (true, true) => Position::LeftAndRight,
        (true, false) => Position::LeftEnd,
        (false, true) => Position::RightEnd,
        (false, false) => Position::Interior,
    };
    (piece, pos)
}

/// First-order optimality of `t` for `f` within its smooth piece: a zero
/// derivative inside the piece, a non-increasing start at a left end, and
/// a non-decreasing approach at a right end. Piece boundaries are where
/// `floor(t/Δt)` jumps, so they act as the box constraints of the KKT
/// conditions.
pub fn kkt_conditions_hold<F>(f: F, t: f64, params: &SystemParams, scale: f64) -> Result<bool>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(0.0..=params.hop_duration).contains(&t) {
        return Ok(false);
    }
    let g = PieceGeometry::new(params);
    let tol = KKT_TOLERANCE * scale.max(1.0);
    let ((a, e), pos) = locate(t, params, &g);
    let last = g.last_point(e);
    let forward = |x: f64| -> Result<f64> {
        let hi = (x + g.step).min(last);
        Ok((f(hi)? - f(x)?) / (hi - x))
    };
    let backward = |x: f64| -> Result<f64> {
        let lo = (x - g.step).max(a);
        Ok((f(x)? - f(lo)?) / (x - lo))
    };
    Ok(match pos {
        Position::Interior => derivative(&f, t, (a, e), &g)?.abs() <= tol,
        Position::LeftEnd => forward(t)? <= tol,
        Position::RightEnd => backward(t)? >= -tol,
        // A piece too short to tell its ends apart.
        Position::LeftAndRight => true,
    })
}

/// KKT check of a shared duration for the route's normalized objective.
pub fn kkt_stationarity_check(
    t_star: f64,
    route: &Route,
    params: &SystemParams,
    alpha: f64,
    norm: &NormalizationContext,
) -> Result<bool> {
    check_alpha(alpha)?;
    let series = RouteSeries::new(route, params, norm.rate_model)?;
    kkt_conditions_hold(|t| global_objective(&series, alpha, norm, t), t_star, params, 1.0)
}

/// KKT check of a per-hop duration under the hop's own normalization.
pub fn kkt_hop_check(t_hat: f64, hop: &Hop, params: &SystemParams, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    let norm = hop_normalization(hop, params)?;
    kkt_conditions_hold(|t| Ok(hop_objective(hop, params, alpha, &norm, t)), t_hat, params, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn route() -> Route {
        Route::from_rates(&[(0.27, 2), (0.2, 3), (0.23, 2), (0.24, 1)]).unwrap()
    }

    fn dense_argmax<F: Fn(f64) -> f64>(f: F, t_max: f64, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| t_max * i as f64 / (n - 1) as f64)
            .map(|t| (t, f(t)))
            .fold((0.0, f64::NEG_INFINITY), |b, (t, v)| if v > b.1 { (t, v) } else { b })
    }

    #[test]
    fn weighted_sum_examples() {
        assert_eq!(weighted_sum(0.0, 0.9, 0.1), -0.1);
        assert_eq!(weighted_sum(1.0, 0.9, 0.1), 0.9);
        assert!((weighted_sum(0.5, 0.9, 0.1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn degenerate_range_maps_to_zero() {
        let p = params();
        let flat = Route::from_rates(&[(0.1, 1), (0.2, 1)]).unwrap();
        let ctx = build_normalization(&[flat], &p, RateModel::Scenario).unwrap();
        assert_eq!(ctx.norm_latency(40.0), 0.0);
        assert_eq!(ctx.norm_rate(1.0), 0.0);
    }

    #[test]
    fn context_brackets_grid_values() {
        let p = params();
        let routes = [route(), Route::from_rates(&[(0.1, 3), (0.06, 2)]).unwrap()];
        for model in [RateModel::Scenario, RateModel::WeakestHop] {
            let ctx = build_normalization(&routes, &p, model).unwrap();
            assert_eq!(ctx.grid.first(), Some(&0.0));
            assert_eq!(ctx.grid.last(), Some(&p.hop_duration));
            for r in &routes {
                let s = RouteSeries::new(r, &p, model).unwrap();
                for &t in &ctx.grid {
                    let (l, c) = (s.latency(t), s.rate(t).unwrap());
                    assert!(ctx.latency_min <= l && l <= ctx.latency_max);
                    assert!(ctx.rate_min <= c && c <= ctx.rate_max);
                }
            }
        }
    }

    #[test]
    fn alpha_zero_picks_hop_duration() {
        let p = params();
        let r = route();
        let ctx = build_normalization(std::slice::from_ref(&r), &p, RateModel::Scenario).unwrap();
        let out = solve_global(&r, &p, 0.0, &ctx).unwrap();
        assert_eq!(out.t_star(), Some(p.hop_duration));
        assert!(kkt_stationarity_check(p.hop_duration, &r, &p, 0.0, &ctx).unwrap());
    }

    #[test]
    fn flat_route_ties_to_zero() {
        let p = params();
        let r = Route::from_rates(&[(0.1, 1), (0.2, 1)]).unwrap();
        let ctx = build_normalization(std::slice::from_ref(&r), &p, RateModel::Scenario).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let out = solve_global(&r, &p, alpha, &ctx).unwrap();
            assert_eq!(out.t_star(), Some(0.0));
            assert!(kkt_stationarity_check(0.0, &r, &p, alpha, &ctx).unwrap());
            let d = solve_distributed(&r, &p, alpha, &ctx).unwrap();
            assert_eq!(d.t_hat(), Some(&[0.0, 0.0][..]));
        }
        assert!(verify_concavity(&r, &p, 0.5, RateModel::Scenario, 8).unwrap().holds());
    }

    #[test]
    fn global_matches_dense_grid() {
        let p = params();
        let r = route();
        let ctx = build_normalization(std::slice::from_ref(&r), &p, RateModel::Scenario).unwrap();
        let s = RouteSeries::new(&r, &p, RateModel::Scenario).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let out = solve_global(&r, &p, alpha, &ctx).unwrap();
            let (tg, vg) = dense_argmax(
                |t| global_objective(&s, alpha, &ctx, t).unwrap(),
                p.hop_duration,
                10_001,
            );
            assert!(out.objective >= vg - 1e-12, "alpha {alpha}: {} < {vg}", out.objective);
            let step = p.hop_duration / 10_000.0;
            let t = out.t_star().unwrap();
            assert!(
                (t - tg).abs() <= step + 1e-9 || out.objective - vg < 1e-9,
                "alpha {alpha}: {t} vs {tg}"
            );
            assert!(kkt_stationarity_check(t, &r, &p, alpha, &ctx).unwrap());
        }
    }

    #[test]
    fn interior_optimum_is_stationary() {
        let p = params();
        let r = route();
        let ctx = build_normalization(std::slice::from_ref(&r), &p, RateModel::Scenario).unwrap();
        let out = solve_global(&r, &p, 0.5, &ctx).unwrap();
        let t = out.t_star().unwrap();
        assert!(t > 0.0 && t < p.hop_duration);
        // A point away from the optimum fails the check.
        assert!(!kkt_stationarity_check(t + 2.05, &r, &p, 0.5, &ctx).unwrap());
    }

    #[test]
    fn identical_hops_share_the_single_hop_solution() {
        let p = params();
        let hop = (0.15, 3);
        let r = Route::from_rates(&[hop, hop, hop]).unwrap();
        let single = Route::from_rates(&[hop]).unwrap();
        let ctx = build_normalization(std::slice::from_ref(&single), &p, RateModel::WeakestHop).unwrap();
        let g = solve_global(&single, &p, 0.5, &ctx).unwrap().t_star().unwrap();
        let ctx3 = build_normalization(std::slice::from_ref(&r), &p, RateModel::WeakestHop).unwrap();
        let d = solve_distributed(&r, &p, 0.5, &ctx3).unwrap();
        for &t in d.t_hat().unwrap() {
            assert_eq!(t, g);
        }
    }

    #[test]
    fn hop_solutions_dominate_hop_grid() {
        let p = params();
        for (lambda, deg) in [(0.05, 2), (0.12, 3), (0.3, 2), (0.2, 1)] {
            let hop = Route::from_rates(&[(lambda, deg)]).unwrap().hops()[0];
            for alpha in [0.0, 0.5, 1.0] {
                let sol = solve_hop(&hop, &p, alpha).unwrap();
                let norm = &sol.normalization;
                let (_, vg) = dense_argmax(|t| hop_objective(&hop, &p, alpha, norm, t), p.hop_duration, 10_001);
                assert!(sol.objective >= vg - 1e-12);
                assert!(kkt_hop_check(sol.t_hat, &hop, &p, alpha).unwrap());
                if deg == 1 {
                    assert_eq!(sol.t_hat, 0.0);
                }
            }
        }
    }

    #[test]
    fn latency_term_is_concave() {
        let p = params();
        let rep = verify_concavity(&route(), &p, 0.0, RateModel::Scenario, 12).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert_eq!(rep.points_checked, 200 * 10);
    }

    #[test]
    fn argmax_survives_rate_rescaling() {
        let p = params();
        let r = route();
        let mut q = p;
        q.rate_v2v *= 3.0;
        q.rate_v2i *= 3.0;
        q.rate_cellular *= 3.0;
        for model in [RateModel::Scenario, RateModel::WeakestHop] {
            let a = solve_global(
                &r,
                &p,
                0.5,
                &build_normalization(std::slice::from_ref(&r), &p, model).unwrap(),
            )
            .unwrap();
            let b = solve_global(
                &r,
                &q,
                0.5,
                &build_normalization(std::slice::from_ref(&r), &q, model).unwrap(),
            )
            .unwrap();
            let (ta, tb) = (a.t_star().unwrap(), b.t_star().unwrap());
            assert!((ta - tb).abs() < 1e-4, "{model:?}: {ta} vs {tb}");
            assert!((a.objective - b.objective).abs() < 1e-8);
        }
    }

    #[test]
    fn shared_scale_weighs_hops_like_the_route() {
        let p = params();
        let r = route();
        let ctx = build_normalization(std::slice::from_ref(&r), &p, RateModel::WeakestHop).unwrap();
        let (own, _) = solve_distributed_detailed(&r, &p, 0.5, &ctx, HopNormalization::Own).unwrap();
        let (shared, hops) = solve_distributed_detailed(&r, &p, 0.5, &ctx, HopNormalization::Shared).unwrap();
        assert_eq!(own.t_hat().unwrap().len(), shared.t_hat().unwrap().len());
        for (h, sol) in r.hops().iter().zip(&hops) {
            let c = CoefficientSet::new(h, &p);
            let (_, vg) = dense_argmax(
                |t| ctx.objective_unclamped(0.5, c.hop_latency(t), c.hop_rate(t)),
                p.hop_duration,
                4001,
            );
            assert!(sol.objective >= vg - 1e-12);
        }
        // The single-exit hop stays at zero either way.
        assert_eq!(shared.t_hat().unwrap()[3], 0.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let p = params();
        let r = route();
        let ctx = build_normalization(std::slice::from_ref(&r), &p, RateModel::WeakestHop).unwrap();
        assert!(solve_global(&r, &p, 1.5, &ctx).is_err());
        assert!(solve_hop(&r.hops()[0], &p, -0.1).is_err());
    }
}
