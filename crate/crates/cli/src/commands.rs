//! One function per subcommand, each returning a renderable [`Output`].

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use tariff_nash::equilibrium::{rate_sensitivities, solve_rate};
use tariff_nash::gains::gain_report;
use tariff_nash::montecarlo::{empirical_demands, sample_commodities};
use tariff_nash::nash::{best_response_iteration, solve_exponential_family, solve_nash, solve_symmetric, verify};
use tariff_nash::roots::{linear_grid, log_grid};
use tariff_nash::{EquilibriumTriple, Family, MarketModel, ModelSpec, ScenarioSpec, SolverConfig, TariffPair};

use crate::output::{Cell, Output};
use crate::{error_code, CliError, Command, Context, EXIT_MISMATCH, EXIT_OK, EXIT_SOLVER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Newton,
    BestResponse,
    Symmetric,
    ExpFamily,
}

pub struct CommandResult {
    pub output: Output,
    pub status: u8,
    /// Seed actually used, when it differs from the solver config's.
    pub rng_seed: Option<u64>,
}

impl CommandResult {
    fn ok(output: Output) -> Self {
        Self { output, status: EXIT_OK, rng_seed: None }
    }
}

pub fn execute(command: &Command, ctx: &mut Context) -> Result<CommandResult, CliError> {
    let m = &ctx.model;
    let c = &ctx.config;
    match command {
        Command::SolveRate { theta, theta_star } => solve_rate_cmd(m, c, TariffPair::new(*theta, *theta_star)),
        Command::Gains { theta, theta_star, rate } => gains_cmd(m, c, TariffPair::new(*theta, *theta_star), *rate),
        Command::Sweep { grid } => sweep(m, c, *grid).map(CommandResult::ok),
        Command::Nash { method, start } => nash(m, c, *method, TariffPair::new(start.0, start.1)),
        Command::Verify { triple } => verify_cmd(m, c, *triple),
        Command::Simulate { spec, bound } => simulate(ctx, spec.clone(), *bound),
        Command::Curves { range, points } => curves(m, *range, *points).map(CommandResult::ok),
        Command::RateSurface { grid } => rate_surface(m, c, *grid).map(CommandResult::ok),
        Command::ReproducePaper => Ok(reproduce_paper(c)),
        Command::DefaultConfig => Ok(CommandResult::ok(Output::Object(to_json(&SolverConfig::<f64>::default())))),
    }
}

fn to_json<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn solve_rate_cmd(m: &MarketModel<f64>, c: &SolverConfig<f64>, t: TariffPair<f64>) -> Result<CommandResult, CliError> {
    let s = solve_rate(m, t, c)?;
    let (de_dtheta, de_dtheta_star) = match rate_sensitivities(m, s.rate_e, t) {
        Ok(d) => (Some(d.de_dtheta), Some(d.de_dtheta_star)),
        Err(_) => (None, None),
    };
    Ok(CommandResult::ok(Output::Object(json!({
        "e": s.rate_e,
        "residual": s.residual,
        "de_dtheta": de_dtheta,
        "de_dtheta_star": de_dtheta_star,
        "unique": s.multiplicity == tariff_nash::RootMultiplicity::Unique,
        "at_boundary": s.at_boundary,
    }))))
}

fn gains_cmd(
    m: &MarketModel<f64>,
    c: &SolverConfig<f64>,
    t: TariffPair<f64>,
    rate: Option<f64>,
) -> Result<CommandResult, CliError> {
    let e = match rate {
        Some(e) => e,
        None => solve_rate(m, t, c)?.rate_e,
    };
    let r = gain_report(m, e, t)?;
    Ok(CommandResult::ok(Output::Object(merge(json!({ "rate_e": e }), to_json(&r)))))
}

/// Grid `lo + (1 - lo) i / (k - 1)` over each tariff axis, row-major in
/// `(theta, theta_star)`.
fn tariff_grid(m: &MarketModel<f64>, k: usize) -> Result<Vec<TariffPair<f64>>, CliError> {
    if k < 2 {
        return Err(CliError::config("grid must be at least 2"));
    }
    let axis = linear_grid(m.lower_bound(), 1.0, k);
    Ok(axis.iter().flat_map(|&a| axis.iter().map(move |&b| TariffPair::new(a, b))).collect())
}

fn sweep(m: &MarketModel<f64>, c: &SolverConfig<f64>, k: usize) -> Result<Output, CliError> {
    let rows = tariff_grid(m, k)?
        .par_iter()
        .map(|&t| {
            let cells = solve_rate(m, t, c).and_then(|s| gain_report(m, s.rate_e, t).map(|g| (s.rate_e, g)));
            let (e, g, gs) = match cells {
                Ok((e, g)) => (Some(e), Some(g.gain_domestic), Some(g.gain_foreign)),
                Err(_) => (None, None, None),
            };
            vec![t.theta.into(), t.theta_star.into(), e.into(), g.into(), gs.into()]
        })
        .collect();
    Ok(Output::Table { header: vec!["theta", "theta_star", "e", "G", "Gstar"], rows })
}

fn triple_json(t: &EquilibriumTriple<f64>, c: &SolverConfig<f64>) -> Value {
    merge(to_json(t), json!({ "residual_norm": t.residual_norm(), "accepted": t.is_accepted(c) }))
}

/// Derivative-based solvers need smooth demands, so raw step estimates
/// are kernel-smoothed first.
fn smooth_for_derivatives(m: &MarketModel<f64>) -> (MarketModel<f64>, bool) {
    if m.domestic.family.is_empirical() || m.foreign.family.is_empirical() {
        let s = m.smoothed();
        let changed = s != *m;
        (s, changed)
    } else {
        (m.clone(), false)
    }
}

fn exp_family_params(m: &MarketModel<f64>) -> Result<(f64, f64, f64), CliError> {
    match (&m.domestic.family, &m.foreign.family) {
        (Family::Exponential { delta }, Family::ClippedExpGrowth { alpha, beta, .. }) => Ok((*alpha, *beta, *delta)),
        _ => Err(CliError::config("exp-family needs an exponential domestic and clipped_exp_growth foreign demand")),
    }
}

fn nash(
    m: &MarketModel<f64>,
    c: &SolverConfig<f64>,
    method: Method,
    start: TariffPair<f64>,
) -> Result<CommandResult, CliError> {
    let (model, smoothed) = smooth_for_derivatives(m);
    let mut extra = json!({ "method": method, "smoothed": smoothed });
    let triple = match method {
        Method::Newton => solve_nash(&model, c)?,
        Method::Symmetric => solve_symmetric(&model, c)?,
        Method::ExpFamily => {
            let (a, b, d) = exp_family_params(&model)?;
            if (model.bound() - tariff_nash::demand::DEFAULT_BOUND).abs() > 0.0 {
                return Err(CliError::config("exp-family solves on the default truncation bound only"));
            }
            solve_exponential_family(a, b, d, c)?
        }
        Method::BestResponse => {
            let run = best_response_iteration(&model, start, c)?;
            extra = merge(extra, json!({ "rounds": run.rounds, "trajectory": run.trajectory }));
            run.triple
        }
    };
    let accepted = triple.is_accepted(c);
    let status = if accepted { EXIT_OK } else { EXIT_SOLVER };
    Ok(CommandResult { output: Output::Object(merge(triple_json(&triple, c), extra)), status, rng_seed: None })
}

fn verify_cmd(
    m: &MarketModel<f64>,
    c: &SolverConfig<f64>,
    (e, th, ts): (f64, f64, f64),
) -> Result<CommandResult, CliError> {
    let (model, smoothed) = smooth_for_derivatives(m);
    let triple = verify(&model, e, TariffPair::new(th, ts), c)?;
    let status = if triple.is_accepted(c) { EXIT_OK } else { EXIT_SOLVER };
    let out = merge(triple_json(&triple, c), json!({ "smoothed": smoothed }));
    Ok(CommandResult { output: Output::Object(out), status, rng_seed: None })
}

fn simulate(ctx: &mut Context, path: std::path::PathBuf, bound: f64) -> Result<CommandResult, CliError> {
    let bytes = ctx.read("spec", &path)?;
    let mut spec: ScenarioSpec =
        serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("invalid scenario JSON: {e}")))?;
    if let Some(seed) = ctx.seed_override {
        spec.rng_seed = seed;
    }
    let model = empirical_demands(&sample_commodities(&spec)?, bound)?;
    // full precision: the breakpoints are model data, not a report
    let text = serde_json::to_string(&ModelSpec::from_model(&model)).expect("model serializes") + "\n";
    Ok(CommandResult { output: Output::Document(text), status: EXIT_OK, rng_seed: Some(spec.rng_seed) })
}

fn curves(m: &MarketModel<f64>, range: Option<(f64, f64)>, points: usize) -> Result<Output, CliError> {
    if points < 2 {
        return Err(CliError::config("points must be at least 2"));
    }
    let (lo, hi) = range.unwrap_or((m.lower_bound(), m.bound()));
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(CliError::config(format!("range needs 0 < lo < hi, got {lo},{hi}")));
    }
    let mut xs = vec![0.0];
    xs.extend(if points == 2 { vec![lo] } else { log_grid(lo, hi, points - 1) });
    let rows = xs
        .iter()
        .map(|&x| {
            Ok(vec![
                x.into(),
                m.domestic.eval(x)?.into(),
                m.foreign.eval(x)?.into(),
                m.foreign.eval_reciprocal(x)?.into(),
            ])
        })
        .collect::<Result<Vec<Vec<Cell>>, tariff_nash::Error>>()?;
    Ok(Output::Table { header: vec!["x", "D", "Dstar", "Dstar_recip"], rows })
}

fn rate_surface(m: &MarketModel<f64>, c: &SolverConfig<f64>, k: usize) -> Result<Output, CliError> {
    let rows = tariff_grid(m, k)?
        .par_iter()
        .map(|&t| {
            let (e, err) = match solve_rate(m, t, c) {
                Ok(s) => (Cell::Num(s.rate_e), Cell::Empty),
                Err(e) => (Cell::Empty, Cell::from(error_code(&e))),
            };
            vec![t.theta.into(), t.theta_star.into(), e, err]
        })
        .collect();
    Ok(Output::Table { header: vec!["theta", "theta_star", "e", "error"], rows })
}

struct Check {
    block: String,
    quantity: &'static str,
    expected: f64,
    computed: Option<f64>,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.computed.is_some_and(|v| (v - self.expected).abs() <= self.tolerance)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn triple_checks(
    block: &str,
    r: &tariff_nash::Result<EquilibriumTriple<f64>>,
    target: (f64, f64, f64),
    tol: f64,
) -> Vec<Check> {
    let ok = r.as_ref().ok();
    let row = |quantity, expected, computed: Option<f64>, tolerance| Check {
        block: block.to_string(),
        quantity,
        expected,
        computed,
        tolerance,
    };
    vec![
        row("e", target.0, ok.map(|t| t.e_hat), tol),
        row("theta", target.1, ok.map(|t| t.theta_hat), tol),
        row("theta_star", target.2, ok.map(|t| t.theta_star_hat), tol),
        row("soc_pass", 1.0, ok.map(|t| flag(t.soc_pass == (true, true))), 0.0),
    ]
}

/// The three worked examples against their reference values.
pub fn reproduce_paper(c: &SolverConfig<f64>) -> CommandResult {
    let mut checks = Vec::new();
    let third = 1.0 / 3.0;
    let rs = MarketModel::rational_square();
    checks.extend(triple_checks("rational_square", &solve_nash(&rs, c), (1.0, third, third), 1e-8));

    for alpha in [0.25, 0.5, 0.8] {
        let theta = 2.0 * alpha / (1.0 + alpha);
        let r = MarketModel::clipped_linear(alpha).and_then(|m| solve_symmetric(&m, c));
        checks.extend(triple_checks(&format!("clipped_linear_{alpha}"), &r, (1.0, theta, theta), 1e-8));
    }

    let block = "exponential_0.01_2_2.5";
    let closed = solve_exponential_family(0.01, 2.0, 2.5, c);
    let newton = MarketModel::exponential_asymmetric(0.01, 2.0, 2.5).and_then(|m| solve_nash(&m, c));
    checks.extend(triple_checks(block, &closed, (0.81, 0.54, 0.73), 5e-3));
    let sens = closed.as_ref().ok().map(|t| t.sensitivities);
    let gap = match (&closed, &newton) {
        (Ok(a), Ok(b)) => Some(
            [(a.e_hat, b.e_hat), (a.theta_hat, b.theta_hat), (a.theta_star_hat, b.theta_star_hat)]
                .iter()
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
        ),
        _ => None,
    };
    let row = |quantity, expected, computed, tolerance| Check {
        block: block.into(),
        quantity,
        expected,
        computed,
        tolerance,
    };
    checks.push(row("e_theta", 1.13, sens.map(|s| s.de_dtheta), 1e-2));
    checks.push(row("e_theta_star", -0.49, sens.map(|s| s.de_dtheta_star), 1e-2));
    checks.push(row("newton_gap", 0.0, gap, 1e-6));

    let all = checks.iter().all(Check::pass);
    let rows = checks
        .iter()
        .map(|k| {
            vec![
                k.block.clone().into(),
                k.quantity.into(),
                k.expected.into(),
                k.computed.into(),
                k.tolerance.into(),
                k.pass().into(),
            ]
        })
        .collect();
    CommandResult {
        output: Output::Table { header: vec!["block", "quantity", "expected", "computed", "tolerance", "pass"], rows },
        status: if all { EXIT_OK } else { EXIT_MISMATCH },
        rng_seed: None,
    }
}
