//! Command-line front end. The binary only parses arguments and calls
//! [`execute`]; everything else lives here so it can be tested in-process.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::closed_form::{scenario_probabilities, ClosedFormRoute};
use crate::error::{Error, Result};
use crate::model::{self, DeliveryEstimate};
use crate::optimizer::{
    build_normalization, global_objective, solve_global, HopNormalization, NormalizationContext, RateModel, RouteSeries,
};
use crate::params::Route;
use crate::report::{join_nums, Cell, Table};
use crate::routing::{distributed_routing_in, global_routing_in, gpsr_route, spr_route, RouteSet, RoutingOutcome};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::simulator::{
    delta_t_for_scheme, simulate_route_per_hop, simulate_with_backhaul, Branch, EmpiricalEstimate, SamplingMode,
    Scheme, SimConfig,
};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "v2x-delivery",
    version,
    about = "Latency/rate analysis, route selection and Monte Carlo validation for multihop V2X data delivery"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Expected latency and rate of every candidate route.
    Analyze,
    /// Best route and shared discovery duration.
    OptimizeGlobal,
    /// Best route with one discovery duration per hop.
    OptimizeDistributed,
    /// Monte Carlo run next to the analytical values.
    Simulate,
    /// Proposed routing against shortest-path and greedy geographic routing.
    Compare,
    /// Optimum over a grid of one input variable.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[value(rename_all = "snake_case")]
pub enum SweepVariable {
    T,
    Alpha,
    LambdaScale,
    SchemeBeams,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: SweepVariable,
    /// Comma-separated grid values, ascending.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "steps"])]
    pub grid: Vec<f64>,
    /// Evenly spaced grid: first value.
    #[arg(long, requires_all = ["to", "steps"])]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    /// Number of grid points including both ends.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Mode {
    #[default]
    Coupled,
    Independent,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Scenario file (TOML). The built-in 3×3 grid when omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Weight of the rate term; defaults to the scenario's `params.alpha`.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Discovery duration(s) in seconds, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t: Vec<f64>,
    #[arg(long, global = true, default_value_t = 1000)]
    pub snapshots: usize,
    /// Simulation seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Hand failed discoveries to the next RSU over backhaul. Uses the
    /// scenario's links, or a full mesh when it defines none.
    #[arg(long, global = true)]
    pub backhaul: bool,
    /// Broadcast scheme (TD, FD, CD, SD) that sets the trial duration.
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    #[arg(long, global = true, default_value_t = 1)]
    pub beams: u32,
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Only consider routes with at most this many hops.
    #[arg(long, global = true)]
    pub max_hops: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Coupled)]
    pub mode: Mode,
    /// Route index in the candidate set (simulate). Defaults to the global
    /// routing winner.
    #[arg(long, global = true)]
    pub route: Option<usize>,
    /// Simulate with per-hop durations from distributed routing.
    #[arg(long, global = true)]
    pub distributed: bool,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    execute(&cli, out)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let table = match cli.opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| dispatch(cli))?,
        None => dispatch(cli)?,
    };
    let text = match cli.opts.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json()?,
    };
    match &cli.opts.out {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

struct Context {
    scenario: Scenario,
    alpha: f64,
    scheme: Option<Scheme>,
}

fn load(opts: &Options) -> Result<Context> {
    let cfg = match &opts.scenario {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let mut scenario = Scenario::from_config(&cfg)?;
    if opts.max_hops.is_some() {
        scenario.route_filter = opts.max_hops;
    }
    if let Some(s) = opts.scheme {
        scenario.params.trial_duration = delta_t_for_scheme(s, opts.beams, &scenario.broadcast)?;
    }
    if opts.backhaul && scenario.topology.backhaul_links.is_empty() {
        scenario.topology = scenario.topology.with_full_backhaul();
    }
    scenario.validate()?;
    let alpha = opts.alpha.unwrap_or(scenario.params.alpha);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(Context {
        scenario,
        alpha,
        scheme: opts.scheme,
    })
}

fn dispatch(cli: &Cli) -> Result<Table> {
    let ctx = load(&cli.opts)?;
    match &cli.command {
        Command::Analyze => analyze(&ctx, &cli.opts),
        Command::OptimizeGlobal => optimize_global(&ctx),
        Command::OptimizeDistributed => optimize_distributed(&ctx),
        Command::Simulate => simulate(&ctx, &cli.opts),
        Command::Compare => compare(&ctx),
        Command::Sweep(args) => sweep(&ctx, args),
    }
}

fn nodes_label(route: &Route) -> String {
    route
        .nodes()
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn durations_or_default(opts: &Options, default: f64) -> Vec<f64> {
    if opts.t.is_empty() {
        vec![default]
    } else {
        opts.t.clone()
    }
}

fn analyze(ctx: &Context, opts: &Options) -> Result<Table> {
    let p = &ctx.scenario.params;
    let set = ctx.scenario.routes()?;
    let mut table = Table::new(&[
        "route_index",
        "nodes",
        "hops",
        "t",
        "latency",
        "rate",
        "rate_weakest_hop",
        "p_all_success",
        "p_all_failure",
        "p_mixture",
    ]);
    for t in durations_or_default(opts, 0.5 * p.hop_duration) {
        for (i, r) in set.routes.iter().enumerate() {
            let cf = ClosedFormRoute::new(r, p)?;
            let probs = scenario_probabilities(r, t, p);
            table.push(vec![
                i.into(),
                nodes_label(r).into(),
                r.len().into(),
                t.into(),
                cf.latency(t).into(),
                cf.rate(t)?.into(),
                model::e2e_rate_min_of_means(r, t, p).into(),
                probs.p_all_success.into(),
                probs.p_all_failure.into(),
                probs.p_mixture.into(),
            ]);
        }
    }
    Ok(table)
}

const OUTCOME_HEADER: [&str; 11] = [
    "algorithm",
    "hop_normalization",
    "alpha",
    "route_index",
    "nodes",
    "durations",
    "objective",
    "latency",
    "rate",
    "norm_latency",
    "norm_rate",
];

fn outcome_row(
    algorithm: &str,
    hop_scale: &str,
    alpha: f64,
    route_index: Option<usize>,
    route: &Route,
    o: &crate::optimizer::OptimizationOutcome,
) -> Vec<Cell> {
    vec![
        algorithm.into(),
        hop_scale.into(),
        alpha.into(),
        route_index.map_or(Cell::Text(String::new()), Cell::from),
        nodes_label(route).into(),
        join_nums(&o.durations.as_vec(route.len()), ";").into(),
        o.objective.into(),
        o.latency.into(),
        o.rate.into(),
        o.norm_latency.into(),
        o.norm_rate.into(),
    ]
}

fn global(ctx: &Context, set: &RouteSet) -> Result<RoutingOutcome> {
    let p = &ctx.scenario.params;
    let norm = build_normalization(&set.routes, p, RateModel::Scenario)?;
    global_routing_in(set, p, ctx.alpha, norm)
}

fn distributed(ctx: &Context, set: &RouteSet, hop_scale: HopNormalization) -> Result<RoutingOutcome> {
    let p = &ctx.scenario.params;
    let norm = build_normalization(&set.routes, p, RateModel::WeakestHop)?;
    distributed_routing_in(set, p, ctx.alpha, norm, hop_scale)
}

fn optimize_global(ctx: &Context) -> Result<Table> {
    let set = ctx.scenario.routes()?;
    let g = global(ctx, &set)?;
    let mut table = Table::new(&OUTCOME_HEADER);
    table.push(outcome_row(
        "global",
        "",
        ctx.alpha,
        Some(g.route_index()),
        &g.route,
        &g.outcome,
    ));
    Ok(table)
}

fn optimize_distributed(ctx: &Context) -> Result<Table> {
    let set = ctx.scenario.routes()?;
    let mut table = Table::new(&OUTCOME_HEADER);
    for (label, scale) in [("own", HopNormalization::Own), ("shared", HopNormalization::Shared)] {
        let d = distributed(ctx, &set, scale)?;
        table.push(outcome_row(
            "distributed",
            label,
            ctx.alpha,
            Some(d.route_index()),
            &d.route,
            &d.outcome,
        ));
    }
    Ok(table)
}

fn relative_error(empirical: f64, analytic: f64) -> f64 {
    (empirical - analytic) / analytic
}

fn simulate(ctx: &Context, opts: &Options) -> Result<Table> {
    let s = &ctx.scenario;
    let p = &s.params;
    let set = s.routes()?;
    let config = SimConfig {
        n_snapshots: opts.snapshots,
        seed: opts.seed,
        backhaul_enabled: opts.backhaul,
        mode: match opts.mode {
            Mode::Coupled => SamplingMode::Coupled,
            Mode::Independent => SamplingMode::Independent,
        },
        ..SimConfig::default()
    };
    let (route_index, route) = match opts.route {
        Some(i) => (
            i,
            set.routes
                .get(i)
                .cloned()
                .ok_or_else(|| Error::InvalidParameter(format!("route index {i} out of range 0..{}", set.len())))?,
        ),
        None if opts.distributed => {
            let d = distributed(ctx, &set, HopNormalization::Own)?;
            (d.route_index(), d.route)
        }
        None => {
            let g = global(ctx, &set)?;
            (g.route_index(), g.route)
        }
    };
    let plans: Vec<Vec<f64>> = if opts.distributed {
        let norm = build_normalization(&set.routes, p, RateModel::WeakestHop)?;
        let (o, _) = crate::optimizer::solve_distributed_detailed(&route, p, ctx.alpha, &norm, HopNormalization::Own)?;
        vec![o.durations.as_vec(route.len())]
    } else if opts.t.is_empty() {
        let norm = build_normalization(&set.routes, p, RateModel::Scenario)?;
        vec![vec![
            solve_global(&route, p, ctx.alpha, &norm)?.t_star().unwrap_or(0.0);
            route.len()
        ]]
    } else {
        opts.t.iter().map(|&t| vec![t; route.len()]).collect()
    };
    let mut table = Table::new(&[
        "t",
        "mean_latency",
        "se_latency",
        "mean_rate",
        "se_rate",
        "p_fwd",
        "p_succ",
        "p_fail",
        "p_backhaul",
        "route_index",
        "model_latency",
        "latency_rel_error",
        "model_rate",
        "rate_rel_error",
        "model_rate_weakest_hop",
        "model_p_fwd",
        "model_p_succ",
        "model_p_fail",
    ]);
    for durations in plans {
        let shared = durations.iter().all(|&t| t == durations[0]);
        let est: EmpiricalEstimate = if shared && opts.backhaul {
            simulate_with_backhaul(&route, durations[0], p, &config, &s.topology)?
        } else {
            simulate_route_per_hop(&route, &durations, p, &config)?
        };
        let analytic = DeliveryEstimate::per_hop(&route, &durations, p);
        let model_rate = if shared {
            ClosedFormRoute::new(&route, p)?.rate(durations[0])?
        } else {
            analytic.e2e_rate
        };
        let k = route.len() as f64;
        let pooled = |f: fn(&model::EventProbabilities) -> f64| analytic.per_hop_events.iter().map(f).sum::<f64>() / k;
        let t_cell: Cell = if shared {
            durations[0].into()
        } else {
            join_nums(&durations, ";").into()
        };
        table.push(vec![
            t_cell,
            est.latency.mean.into(),
            est.latency.std_error.into(),
            est.rate.mean.into(),
            est.rate.std_error.into(),
            est.frequency(Branch::CourierForward).into(),
            est.frequency(Branch::DiscoverySuccess).into(),
            est.frequency(Branch::DiscoveryFailure).into(),
            est.frequency(Branch::BackhaulForward).into(),
            route_index.into(),
            analytic.e2e_latency.into(),
            relative_error(est.latency.mean, analytic.e2e_latency).into(),
            model_rate.into(),
            relative_error(est.rate.mean, model_rate).into(),
            analytic.e2e_rate.into(),
            pooled(|e| e.forward).into(),
            pooled(|e| e.success).into(),
            pooled(|e| e.failure).into(),
        ]);
    }
    Ok(table)
}

fn compare(ctx: &Context) -> Result<Table> {
    let s = &ctx.scenario;
    let p = &s.params;
    let set = s.routes()?;
    let spr = spr_route(&s.topology, s.source, s.destination)?;
    let gpsr = gpsr_route(&s.topology, s.source, s.destination)?;
    // Baselines may fall outside a hop-limited route set; keep them inside
    // the normalization bounds all the same.
    let mut basis = set.routes.clone();
    basis.extend([spr.clone(), gpsr.clone()]);
    let norm = build_normalization(&basis, p, RateModel::Scenario)?;
    let g = global_routing_in(&set, p, ctx.alpha, norm.clone())?;
    let mut table = Table::new(&OUTCOME_HEADER);
    table.push(outcome_row(
        "global",
        "",
        ctx.alpha,
        Some(g.route_index()),
        &g.route,
        &g.outcome,
    ));
    let d = distributed(ctx, &set, HopNormalization::Own)?;
    table.push(outcome_row(
        "distributed",
        "own",
        ctx.alpha,
        Some(d.route_index()),
        &d.route,
        &d.outcome,
    ));
    for (name, route) in [("spr", &spr), ("gpsr", &gpsr)] {
        let o = solve_global(route, p, ctx.alpha, &norm)?;
        table.push(outcome_row(
            name,
            "",
            ctx.alpha,
            set.position(&route.nodes()),
            route,
            &o,
        ));
    }
    Ok(table)
}

fn sweep_grid(args: &SweepArgs) -> Result<Vec<f64>> {
    let grid = match (args.from, args.to, args.steps) {
        (Some(a), Some(b), Some(n)) => {
            if n == 0 {
                Vec::new()
            } else if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        }
        _ => args.grid.clone(),
    };
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "sweep grid must be finite and ascending".into(),
        ));
    }
    Ok(grid)
}

pub const SWEEP_HEADER: [&str; 10] = [
    "variable",
    "value",
    "route_index",
    "t_star",
    "latency",
    "rate",
    "norm_latency",
    "norm_rate",
    "objective",
    "t_hat",
];

/// Best route at a fixed shared duration `t`.
fn best_at(
    set: &RouteSet,
    p: &crate::params::SystemParams,
    alpha: f64,
    norm: &NormalizationContext,
    t: f64,
) -> Result<(usize, f64, f64, f64)> {
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for (i, r) in set.routes.iter().enumerate() {
        let series = RouteSeries::new(r, p, norm.rate_model)?;
        let obj = global_objective(&series, alpha, norm, t)?;
        if best.is_none_or(|b| obj > b.1) {
            best = Some((i, obj, series.latency(t), series.rate(t)?));
        }
    }
    Ok(best.expect("route set is non-empty"))
}

fn sweep(ctx: &Context, args: &SweepArgs) -> Result<Table> {
    let grid = sweep_grid(args)?;
    let variable = args
        .variable
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let mut table = Table::new(&SWEEP_HEADER);
    let push_routing = |table: &mut Table, value: f64, c: &Context| -> Result<()> {
        let set = c.scenario.routes()?;
        let g = global(c, &set)?;
        let d = distributed(c, &set, HopNormalization::Own)?;
        let o = &g.outcome;
        table.push(vec![
            variable.as_str().into(),
            value.into(),
            g.route_index().into(),
            o.t_star().unwrap_or(0.0).into(),
            o.latency.into(),
            o.rate.into(),
            o.norm_latency.into(),
            o.norm_rate.into(),
            o.objective.into(),
            join_nums(d.outcome.t_hat().unwrap_or(&[]), ";").into(),
        ]);
        Ok(())
    };
    match args.variable {
        SweepVariable::T => {
            let p = &ctx.scenario.params;
            let set = ctx.scenario.routes()?;
            let norm = build_normalization(&set.routes, p, RateModel::Scenario)?;
            for &t in &grid {
                if !(0.0..=p.hop_duration).contains(&t) {
                    return Err(Error::InvalidParameter(format!(
                        "t = {t} outside [0, {}]",
                        p.hop_duration
                    )));
                }
                let (i, obj, latency, rate) = best_at(&set, p, ctx.alpha, &norm, t)?;
                table.push(vec![
                    variable.as_str().into(),
                    t.into(),
                    i.into(),
                    t.into(),
                    latency.into(),
                    rate.into(),
                    norm.norm_latency(latency).into(),
                    norm.norm_rate(rate).into(),
                    obj.into(),
                    "".into(),
                ]);
            }
        }
        SweepVariable::Alpha => {
            for &a in &grid {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidParameter(format!("alpha = {a} outside [0, 1]")));
                }
                let c = Context {
                    scenario: ctx.scenario.clone(),
                    alpha: a,
                    scheme: ctx.scheme,
                };
                push_routing(&mut table, a, &c)?;
            }
        }
        SweepVariable::LambdaScale => {
            for &f in &grid {
                let mut scenario = ctx.scenario.clone();
                scenario.topology = scenario.topology.scale_lambda(f)?;
                let c = Context {
                    scenario,
                    alpha: ctx.alpha,
                    scheme: ctx.scheme,
                };
                push_routing(&mut table, f, &c)?;
            }
        }
        SweepVariable::SchemeBeams => {
            let scheme = ctx
                .scheme
                .ok_or_else(|| Error::InvalidParameter("sweeping beam counts needs --scheme".into()))?;
            for &m in &grid {
                if m < 1.0 || m.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "beam count {m} is not a positive integer"
                    )));
                }
                let mut scenario = ctx.scenario.clone();
                scenario.params.trial_duration = delta_t_for_scheme(scheme, m as u32, &scenario.broadcast)?;
                scenario.validate()?;
                let c = Context {
                    scenario,
                    alpha: ctx.alpha,
                    scheme: ctx.scheme,
                };
                push_routing(&mut table, m, &c)?;
            }
        }
    }
    Ok(table)
}
