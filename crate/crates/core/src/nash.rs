//! Nash-equilibrium tariffs.
//!
//! An interior Nash point `(e, theta, theta*)` solves
//!
//! ```text
//! r1 = e D(e/theta) - D*(theta* e)                       = 0
//! r2 = D(e/theta) - theta* (1 - theta) D*'(theta* e)     = 0
//! r3 = D(e/theta) - (e/theta) (theta* - 1) D'(e/theta)   = 0
//! ```
//!
//! and passes the second-order conditions. [`solve_nash`] attacks the system
//! with multi-start damped Newton; [`best_response_iteration`] is an
//! independent derivative-free oracle that maximizes the gains directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::MarketModel;
use crate::equilibrium::{self, RateSensitivities, TariffPair};
use crate::error::{Error, Result};
use crate::gains;
use crate::roots::{self, Bracket};
use crate::scalar::Scalar;

/// Solver tolerances and grid sizes. Every field has a default; a JSON
/// config may override any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Scalar"))]
pub struct SolverConfig<T> {
    /// Absolute bisection tolerance on the exchange rate.
    pub tol_root: T,
    /// Max-norm tolerance on the first-order residuals.
    pub tol_nash: T,
    pub max_newton_iters: usize,
    /// Step shrink factor of the Newton line search.
    pub newton_damping: T,
    /// Central-difference step for the Newton Jacobian.
    pub fd_step: T,
    /// Log-spaced scan points for rate brackets.
    pub scan_points: usize,
    /// Seeds per axis of the (theta, theta*) start grid.
    pub seed_grid: usize,
    /// Number of best-ranked seeds refined by Newton.
    pub newton_starts: usize,
    /// Candidates this close to a box edge are flagged as boundary points.
    pub boundary_tol: T,
    /// Grid points of the best-response search before golden-section refinement.
    pub best_response_grid: usize,
    pub max_best_response_rounds: usize,
    /// Stop best-response iteration when both tariffs move less than this.
    pub tol_best_response: T,
    pub rng_seed: u64,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tol_root: T::tol_floor(1e-10, 64.0),
            tol_nash: T::tol_floor(1e-8, 64.0),
            max_newton_iters: 100,
            newton_damping: T::lit(0.5),
            fd_step: T::tol_floor(1e-6, 1e4),
            scan_points: 2048,
            seed_grid: 12,
            newton_starts: 8,
            boundary_tol: T::tol_floor(1e-9, 64.0),
            best_response_grid: 256,
            max_best_response_rounds: 200,
            tol_best_response: T::tol_floor(1e-6, 1e3),
            rng_seed: 20_240_917,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol_root, self.tol_nash, self.fd_step, self.boundary_tol, self.tol_best_response];
        if positive.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::InvalidParameter("all tolerances must be positive".into()));
        }
        if !(self.newton_damping > T::zero() && self.newton_damping < T::one()) {
            return Err(Error::InvalidParameter("newton_damping must lie in (0, 1)".into()));
        }
        if self.seed_grid < 8 {
            return Err(Error::InvalidParameter(format!("seed_grid must be at least 8, got {}", self.seed_grid)));
        }
        if self.scan_points < 2 || self.best_response_grid < 3 || self.newton_starts == 0 {
            return Err(Error::InvalidParameter("grid sizes too small".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumTriple<T> {
    pub e_hat: T,
    pub theta_hat: T,
    pub theta_star_hat: T,
    pub foc_residuals: [T; 3],
    pub soc_pass: (bool, bool),
    /// Left-hand sides of the two second-order inequalities.
    pub soc_values: (T, T),
    pub sensitivities: RateSensitivities<T>,
    pub boundary_flag: bool,
}

impl<T: Scalar> EquilibriumTriple<T> {
    pub fn tariffs(&self) -> TariffPair<T> {
        TariffPair::new(self.theta_hat, self.theta_star_hat)
    }

    pub fn residual_norm(&self) -> T {
        self.foc_residuals.iter().fold(T::zero(), |m, r| m.max(r.abs()))
    }

    /// Evaluates residuals, sensitivities and second-order conditions at a point.
    pub fn evaluate(model: &MarketModel<T>, e: T, t: TariffPair<T>, cfg: &SolverConfig<T>) -> Result<Self> {
        let foc_residuals = foc_residuals(model, e, t)?;
        let sensitivities = equilibrium::rate_sensitivities(model, e, t)?;
        let soc_values = second_order_values(model, e, t, &sensitivities)?;
        let lo = model.lower_bound();
        let near = |v: T, edge: T| (v - edge).abs() <= cfg.boundary_tol;
        let boundary_flag = [t.theta, t.theta_star].iter().any(|&v| near(v, lo) || near(v, T::one()))
            || near(e, lo)
            || near(e, model.bound());
        Ok(Self {
            e_hat: e,
            theta_hat: t.theta,
            theta_star_hat: t.theta_star,
            foc_residuals,
            soc_pass: (soc_values.0 < T::zero(), soc_values.1 > T::zero()),
            soc_values,
            sensitivities,
            boundary_flag,
        })
    }

    /// Interior point with residuals within `tol_nash` and both second-order
    /// conditions strict.
    pub fn is_accepted(&self, cfg: &SolverConfig<T>) -> bool {
        self.residual_norm() <= cfg.tol_nash && self.soc_pass.0 && self.soc_pass.1 && !self.boundary_flag
    }
}

fn residuals_unchecked<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<[T; 3]> {
    let g = e / t.theta;
    let u = t.theta_star * e;
    let d = model.domestic.eval(g)?;
    let r1 = e * d - model.foreign.eval(u)?;
    let r2 = d - t.theta_star * (T::one() - t.theta) * model.foreign.eval_deriv(u, 1)?;
    let r3 = d - g * (t.theta_star - T::one()) * model.domestic.eval_deriv(g, 1)?;
    Ok([r1, r2, r3])
}

/// First-order residuals `(r1, r2, r3)` at `(e, theta, theta*)`.
pub fn foc_residuals<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<[T; 3]> {
    let (lo, hi) = (model.lower_bound(), model.bound());
    if !(e >= lo && e <= hi) {
        return Err(Error::Domain { x: e.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    t.validate(model)?;
    residuals_unchecked(model, e, t)
}

/// Left-hand sides of the second-order conditions.
///
/// The first must be negative:
/// `theta*^2 (1-theta) e_theta D*''(theta* e) - theta* D*'(theta* e) - (e_theta theta - e)/theta^2 D'(e/theta)`.
///
/// The second must be positive:
/// `theta ((2-theta*) e_theta* - e) D'(e/theta) + (1-theta*) e_theta* e D''(e/theta)`,
/// which is `theta^2 / (e_theta* / (theta* e))` times the second derivative of
/// the foreign gain in `theta*` at a stationary point.
pub fn second_order_values<T: Scalar>(
    model: &MarketModel<T>,
    e: T,
    t: TariffPair<T>,
    s: &RateSensitivities<T>,
) -> Result<(T, T)> {
    let (th, ts) = (t.theta, t.theta_star);
    let g = e / th;
    let u = ts * e;
    let one = T::one();
    let dp = model.domestic.eval_deriv(g, 1)?;
    let dpp = model.domestic.eval_deriv(g, 2)?;
    let dsp = model.foreign.eval_deriv(u, 1)?;
    let dspp = model.foreign.eval_deriv(u, 2)?;
    let ine1 = ts * ts * (one - th) * s.de_dtheta * dspp - ts * dsp - (s.de_dtheta * th - e) / (th * th) * dp;
    let ine2 = th * ((T::lit(2.0) - ts) * s.de_dtheta_star - e) * dp + (one - ts) * s.de_dtheta_star * e * dpp;
    Ok((ine1, ine2))
}

/// Strict second-order flags `(ine1 < 0, ine2 > 0)` for a triple.
pub fn check_second_order<T: Scalar>(model: &MarketModel<T>, triple: &EquilibriumTriple<T>) -> Result<(bool, bool)> {
    let (a, b) = second_order_values(model, triple.e_hat, triple.tariffs(), &triple.sensitivities)?;
    Ok((a < T::zero(), b > T::zero()))
}

fn max_norm<T: Scalar>(r: &[T; 3]) -> T {
    r.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Solves `a x = b` for a 3x3 system by Gaussian elimination with partial pivoting.
fn solve3<T: Scalar>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if !(a[pivot][col].abs() > T::epsilon() * T::lit(1e-3)) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] = a[row][k] - factor * a[col][k];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct NewtonBox<T> {
    lo: [T; 3],
    hi: [T; 3],
}

impl<T: Scalar> NewtonBox<T> {
    fn of(model: &MarketModel<T>) -> Self {
        let lo = model.lower_bound();
        Self { lo: [lo; 3], hi: [model.bound(), T::one(), T::one()] }
    }

    fn clamp(&self, z: [T; 3]) -> [T; 3] {
        [0, 1, 2].map(|i| z[i].max(self.lo[i]).min(self.hi[i]))
    }
}

/// Residuals at `z`, or `None` where they cannot be evaluated or where no
/// trade happens (there the residuals vanish identically and the rate
/// sensitivities are singular).
fn eval_point<T: Scalar>(model: &MarketModel<T>, z: [T; 3]) -> Option<[T; 3]> {
    let t = TariffPair::new(z[1], z[2]);
    equilibrium::rate_sensitivities(model, z[0], t).ok()?;
    residuals_unchecked(model, z[0], t).ok().filter(|r| r.iter().all(|v| v.is_finite()))
}

/// Damped Newton on `(e, theta, theta*)` with a central-difference Jacobian.
fn newton<T: Scalar>(model: &MarketModel<T>, start: [T; 3], cfg: &SolverConfig<T>) -> Option<[T; 3]> {
    let bx = NewtonBox::of(model);
    let mut z = bx.clamp(start);
    let mut f = eval_point(model, z)?;
    let floor = T::epsilon() * T::lit(16.0);
    'outer: for _ in 0..cfg.max_newton_iters {
        if max_norm(&f) <= floor {
            break;
        }
        let mut jac = [[T::zero(); 3]; 3];
        for j in 0..3 {
            let h = cfg.fd_step * z[j].abs().max(T::one());
            let (mut zp, mut zm) = (z, z);
            zp[j] = (z[j] + h).min(bx.hi[j]);
            zm[j] = (z[j] - h).max(bx.lo[j]);
            let (Some(fp), Some(fm)) = (eval_point(model, zp), eval_point(model, zm)) else { break 'outer };
            let width = zp[j] - zm[j];
            for i in 0..3 {
                jac[i][j] = (fp[i] - fm[i]) / width;
            }
        }
        let Some(step) = solve3(jac, f.map(|v| -v)) else { break };
        let norm = max_norm(&f);
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial = bx.clamp([0, 1, 2].map(|i| z[i] + lambda * step[i]));
            if let Some(ft) = eval_point(model, trial) {
                if max_norm(&ft) < norm {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda = lambda * cfg.newton_damping;
        }
        let Some((zn, fnew)) = accepted else { break };
        z = zn;
        f = fnew;
    }
    (max_norm(&f) <= cfg.tol_nash).then_some(z)
}

fn seed_axis<T: Scalar>(lo: T, n: usize) -> Vec<T> {
    let span = T::one() - lo;
    (0..n).map(|i| lo + span * (T::from_usize(i).unwrap() + T::lit(0.5)) / T::from_usize(n).unwrap()).collect()
}

/// Every distinct stationary point reached from the best seeds, ranked by
/// (second-order pass, residual norm, total gain descending).
pub fn nash_candidates<T: Scalar>(model: &MarketModel<T>, cfg: &SolverConfig<T>) -> Result<Vec<EquilibriumTriple<T>>> {
    cfg.validate()?;
    let axis = seed_axis(model.lower_bound(), cfg.seed_grid);
    let pairs: Vec<(T, T)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    let mut seeds: Vec<(T, [T; 3])> = pairs
        .par_iter()
        .filter_map(|&(th, ts)| {
            let t = TariffPair::new(th, ts);
            let e = equilibrium::solve_rate(model, t, cfg).ok()?.rate_e;
            let r = eval_point(model, [e, th, ts])?;
            let score = (r[1] * r[1] + r[2] * r[2]).sqrt();
            score.is_finite().then_some((score, [e, th, ts]))
        })
        .collect();
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    seeds.truncate(cfg.newton_starts);

    let converged: Vec<[T; 3]> = seeds.par_iter().filter_map(|(_, z)| newton(model, *z, cfg)).collect();

    let mut distinct: Vec<[T; 3]> = Vec::new();
    let same = T::lit(1e-6).max(cfg.tol_nash * T::lit(10.0));
    for z in converged {
        if !distinct.iter().any(|d| (0..3).all(|i| (d[i] - z[i]).abs() <= same)) {
            distinct.push(z);
        }
    }

    let mut ranked: Vec<(EquilibriumTriple<T>, T)> = distinct
        .into_iter()
        .filter_map(|z| {
            let t = TariffPair::new(z[1], z[2]);
            let triple = EquilibriumTriple::evaluate(model, z[0], t, cfg).ok()?;
            let welfare = gains::gain_domestic(model, z[0], t).ok()? + gains::gain_foreign(model, z[0], t).ok()?;
            Some((triple, welfare))
        })
        .collect();
    ranked.sort_by(|(a, wa), (b, wb)| {
        let soc = |t: &EquilibriumTriple<T>| !(t.soc_pass.0 && t.soc_pass.1);
        soc(a)
            .cmp(&soc(b))
            .then(a.residual_norm().partial_cmp(&b.residual_norm()).unwrap())
            .then(wb.partial_cmp(wa).unwrap())
    });
    Ok(ranked.into_iter().map(|(t, _)| t).collect())
}

/// Best interior Nash point of a smooth model.
pub fn solve_nash<T: Scalar>(model: &MarketModel<T>, cfg: &SolverConfig<T>) -> Result<EquilibriumTriple<T>> {
    if !model.is_smooth() {
        return Err(Error::InvalidParameter(
            "solve_nash needs a smooth model; call MarketModel::smoothed first".into(),
        ));
    }
    let candidates = nash_candidates(model, cfg)?;
    let best = candidates
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoNashFound(format!("no Newton start converged to {:e}", cfg.tol_nash)))?;
    if !(best.soc_pass.0 && best.soc_pass.1) {
        return Err(Error::SaddleRejected {
            e: best.e_hat.as_f64(),
            theta: best.theta_hat.as_f64(),
            theta_star: best.theta_star_hat.as_f64(),
            soc: best.soc_pass,
        });
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Domestic,
    Foreign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse<T> {
    pub tariff: T,
    pub gain: T,
    /// Grid tariffs at which the rate or gain could not be computed.
    pub skipped: Vec<T>,
}

fn own_gain<T: Scalar>(model: &MarketModel<T>, side: Side, own: T, opponent: T, scan: usize) -> Option<T> {
    let t = match side {
        Side::Domestic => TariffPair::new(own, opponent),
        Side::Foreign => TariffPair::new(opponent, own),
    };
    let e = equilibrium::solve_rate_with_tol(model, t, scan, T::zero()).ok()?.rate_e;
    let g = match side {
        Side::Domestic => gains::gain_domestic(model, e, t),
        Side::Foreign => gains::gain_foreign(model, e, t),
    };
    g.ok().filter(|v| v.is_finite())
}

/// Gain-maximizing own tariff against a fixed opponent tariff, with the
/// rate re-solved at every evaluation. Grid search then golden section.
pub fn best_response_detailed<T: Scalar>(
    model: &MarketModel<T>,
    side: Side,
    opponent_tariff: T,
    cfg: &SolverConfig<T>,
) -> Result<BestResponse<T>> {
    let lo = model.lower_bound();
    if !(opponent_tariff >= lo && opponent_tariff <= T::one()) {
        let (theta, theta_star) = match side {
            Side::Domestic => (T::one(), opponent_tariff),
            Side::Foreign => (opponent_tariff, T::one()),
        };
        return Err(Error::TariffOutOfBox { theta: theta.as_f64(), theta_star: theta_star.as_f64(), lo: lo.as_f64() });
    }
    let grid = roots::linear_grid(lo, T::one(), cfg.best_response_grid);
    let values: Vec<Option<T>> =
        grid.par_iter().map(|&x| own_gain(model, side, x, opponent_tariff, cfg.scan_points)).collect();
    let skipped: Vec<T> = grid.iter().zip(&values).filter(|(_, v)| v.is_none()).map(|(x, _)| *x).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .ok_or(Error::BestResponseFailed)?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let objective = |x: T| own_gain(model, side, x, opponent_tariff, cfg.scan_points).unwrap_or(T::neg_infinity());
    let tol = (T::epsilon().sqrt() * T::lit(2.0)).min(T::lit(1e-6));
    let mut tariff = roots::golden_max(objective, a, b, tol);
    let mut gain = objective(tariff);
    if let Some(grid_best) = values[best] {
        if grid_best > gain {
            tariff = grid[best];
            gain = grid_best;
        }
    }
    Ok(BestResponse { tariff, gain, skipped })
}

pub fn best_response<T: Scalar>(
    model: &MarketModel<T>,
    side: Side,
    opponent_tariff: T,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    best_response_detailed(model, side, opponent_tariff, cfg).map(|b| b.tariff)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseRun<T> {
    pub triple: EquilibriumTriple<T>,
    pub rounds: usize,
    /// Tariff pairs after each round, starting with the initial pair.
    pub trajectory: Vec<(T, T)>,
}

/// Alternating best responses (domestic, then foreign) until both tariffs
/// move less than `cfg.tol_best_response`.
pub fn best_response_iteration<T: Scalar>(
    model: &MarketModel<T>,
    start: TariffPair<T>,
    cfg: &SolverConfig<T>,
) -> Result<BestResponseRun<T>> {
    cfg.validate()?;
    start.validate(model)?;
    let (mut th, mut ts) = (start.theta, start.theta_star);
    let mut trajectory = vec![(th, ts)];
    for round in 1..=cfg.max_best_response_rounds {
        let th_new = best_response(model, Side::Domestic, ts, cfg)?;
        let ts_new = best_response(model, Side::Foreign, th_new, cfg)?;
        let moved = (th_new - th).abs().max((ts_new - ts).abs());
        th = th_new;
        ts = ts_new;
        trajectory.push((th, ts));
        if moved < cfg.tol_best_response {
            let t = TariffPair::new(th, ts);
            let e = equilibrium::solve_rate(model, t, cfg)?.rate_e;
            let triple = EquilibriumTriple::evaluate(model, e, t, cfg)?;
            return Ok(BestResponseRun { triple, rounds: round, trajectory });
        }
    }
    Err(Error::NonConvergent {
        rounds: cfg.max_best_response_rounds,
        trajectory: trajectory.iter().map(|(a, b)| (a.as_f64(), b.as_f64())).collect(),
    })
}

/// Symmetric fast path: with `e = 1` and `theta = theta*` the system reduces
/// to `theta D(1/theta) = (theta - 1) D'(1/theta)`.
///
/// When the scan finds several roots the one closest to free trade is used.
pub fn solve_symmetric<T: Scalar>(model: &MarketModel<T>, cfg: &SolverConfig<T>) -> Result<EquilibriumTriple<T>> {
    if !model.is_symmetric() {
        return Err(Error::InvalidParameter("solve_symmetric needs a symmetric model".into()));
    }
    let d = &model.domestic;
    let h = |th: T| -> Option<T> {
        let x = T::one() / th;
        Some(th * d.eval(x).ok()? - (th - T::one()) * d.eval_deriv(x, 1).ok()?)
    };
    let grid = roots::linear_grid(model.lower_bound(), T::one(), cfg.scan_points);
    let brackets = roots::sign_changes(h, &grid);
    let bracket = brackets
        .iter()
        .rev()
        .find(|b| b.lo < b.hi)
        .or(brackets.last())
        .copied()
        .ok_or_else(|| Error::NoNashFound("symmetric equation has no sign change on the tariff box".into()))?;
    let theta = roots::bisect(h, bracket, T::zero());
    EquilibriumTriple::evaluate(model, T::one(), TariffPair::equal(theta), cfg)
}

/// Closed-form path for `D(x) = exp(-delta x)`, `D*(x) = min(alpha x exp(beta x), 1)`.
///
/// Solves the scalar equation in `theta*`
/// `beta theta* (theta* - 1) = (theta* beta - (theta* - 1) delta ln(alpha theta*) + delta)(theta* - (theta* - 1) ln(alpha theta*))`,
/// then `theta = ((theta* - 1) delta ln(alpha theta*) - delta) / (theta* beta)` and
/// `e = -theta ln(alpha theta*) / (theta theta* beta + delta)`.
pub fn solve_exponential_family<T: Scalar>(
    alpha: T,
    beta: T,
    delta: T,
    cfg: &SolverConfig<T>,
) -> Result<EquilibriumTriple<T>> {
    if !(alpha > T::zero() && alpha < T::one() && beta > T::zero() && delta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "exponential family needs 0 < alpha < 1, beta > 0, delta > 0; got ({alpha}, {beta}, {delta})"
        )));
    }
    let model = MarketModel::exponential_asymmetric(alpha, beta, delta)?;
    let one = T::one();
    let f = |ts: T| -> Option<T> {
        let l = (alpha * ts).ln();
        let v = beta * ts * (ts - one) - (ts * beta - (ts - one) * delta * l + delta) * (ts - (ts - one) * l);
        v.is_finite().then_some(v)
    };
    let lo = model.lower_bound();
    let grid = roots::linear_grid(lo, one, cfg.scan_points);
    let brackets: Vec<Bracket<T>> =
        roots::sign_changes(f, &grid).into_iter().filter(|b| b.lo > lo && b.hi < one).collect();
    if brackets.is_empty() {
        return Err(Error::NoNashFound("no root of the theta* equation in (1/M, 1)".into()));
    }
    let clip = model.foreign.kink().unwrap_or(T::infinity());
    let mut outside = None;
    for b in brackets {
        let ts = roots::bisect(f, b, T::zero());
        let l = (alpha * ts).ln();
        let theta = ((ts - one) * delta * l - delta) / (ts * beta);
        let e = -theta * l / (theta * ts * beta + delta);
        let in_box = theta >= lo && theta <= one && e >= lo && e <= model.bound() && ts * e < clip;
        if !in_box {
            outside.get_or_insert((e, theta, ts));
            continue;
        }
        let triple = EquilibriumTriple::evaluate(&model, e, TariffPair::new(theta, ts), cfg)?;
        if triple.residual_norm() > cfg.tol_nash {
            return Err(Error::NoNashFound(format!(
                "closed form residual {:e} exceeds tolerance",
                triple.residual_norm()
            )));
        }
        return Ok(triple);
    }
    let (e, theta, ts) = outside.unwrap();
    Err(Error::Boundary { e: e.as_f64(), theta: theta.as_f64(), theta_star: ts.as_f64() })
}

/// Residuals and second-order flags at a user-supplied triple.
pub fn verify<T: Scalar>(
    model: &MarketModel<T>,
    e: T,
    t: TariffPair<T>,
    cfg: &SolverConfig<T>,
) -> Result<EquilibriumTriple<T>> {
    foc_residuals(model, e, t)?;
    EquilibriumTriple::evaluate(model, e, t, cfg)
}
