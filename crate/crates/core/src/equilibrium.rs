//! Tariff-distorted currency balance and the equilibrium exchange rate.

use serde::Serialize;

use crate::demand::MarketModel;
use crate::error::{Error, Result};
use crate::nash::SolverConfig;
use crate::roots;
use crate::scalar::Scalar;

/// Retained fractions `(theta, theta*)`; the tariff rates are `1 - theta`
/// and `1 - theta*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TariffPair<T> {
    pub theta: T,
    pub theta_star: T,
}

impl<T: Scalar> TariffPair<T> {
    pub fn new(theta: T, theta_star: T) -> Self {
        Self { theta, theta_star }
    }

    /// Same tariff on both sides.
    pub fn equal(theta: T) -> Self {
        Self { theta, theta_star: theta }
    }

    /// Swaps the roles of the two nations.
    pub fn swapped(self) -> Self {
        Self { theta: self.theta_star, theta_star: self.theta }
    }

    /// Checks `1/M <= theta, theta* <= 1`.
    pub fn validate(&self, model: &MarketModel<T>) -> Result<()> {
        let lo = model.lower_bound();
        let inside = |v: T| v >= lo && v <= T::one();
        if inside(self.theta) && inside(self.theta_star) {
            Ok(())
        } else {
            Err(Error::TariffOutOfBox {
                theta: self.theta.as_f64(),
                theta_star: self.theta_star.as_f64(),
                lo: lo.as_f64(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootMultiplicity {
    Unique,
    MultipleDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSolution<T> {
    pub rate_e: T,
    pub residual: T,
    pub bracket: (T, T),
    pub multiplicity: RootMultiplicity,
    /// Root within one scan cell of `1/M` or `M`.
    pub at_boundary: bool,
}

/// Partial derivatives of the equilibrium rate with respect to the tariffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSensitivities<T> {
    pub de_dtheta: T,
    pub de_dtheta_star: T,
    /// `D(e/theta) + (e/theta) D'(e/theta) - theta* D*'(theta* e)`, the slope
    /// of the balance in `x` at the root.
    pub denominator: T,
}

/// `x D(x/theta) - D*(theta* x)` without the box check.
pub(crate) fn balance_unchecked<T: Scalar>(model: &MarketModel<T>, x: T, t: TariffPair<T>) -> Result<T> {
    Ok(x * model.domestic.eval(x / t.theta)? - model.foreign.eval(t.theta_star * x)?)
}

/// Currency balance `x D(x/theta) - D*(theta* x)`; zero at an equilibrium rate.
pub fn currency_balance<T: Scalar>(model: &MarketModel<T>, x: T, t: TariffPair<T>) -> Result<T> {
    let (lo, hi) = (model.lower_bound(), model.bound());
    if !(x >= lo && x <= hi) {
        return Err(Error::Domain { x: x.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    t.validate(model)?;
    balance_unchecked(model, x, t)
}

/// Finds the equilibrium rate on `[1/M, M]`.
///
/// Scans `cfg.scan_points` log-spaced points for sign changes and bisects
/// each one to `cfg.tol_root`. The smallest root is returned; more than one
/// crossing sets [`RootMultiplicity::MultipleDetected`].
pub fn solve_rate<T: Scalar>(
    model: &MarketModel<T>,
    t: TariffPair<T>,
    cfg: &SolverConfig<T>,
) -> Result<RateSolution<T>> {
    solve_rate_with_tol(model, t, cfg.scan_points, cfg.tol_root)
}

pub(crate) fn solve_rate_with_tol<T: Scalar>(
    model: &MarketModel<T>,
    t: TariffPair<T>,
    scan_points: usize,
    tol: T,
) -> Result<RateSolution<T>> {
    t.validate(model)?;
    let (lo, hi) = (model.lower_bound(), model.bound());
    let grid = roots::log_grid(lo, hi, scan_points.max(2));
    let f = |x: T| balance_unchecked(model, x, t).ok();
    let brackets = roots::sign_changes(f, &grid);
    let Some(&first) = brackets.first() else {
        return Err(Error::NoEquilibriumInBox {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            f_lo: f(lo).map_or(f64::NAN, |v| v.as_f64()),
            f_hi: f(hi).map_or(f64::NAN, |v| v.as_f64()),
        });
    };
    let rate_e = roots::bisect(f, first, tol);
    let residual = balance_unchecked(model, rate_e, t)?;
    let multiplicity = if brackets.len() > 1 { RootMultiplicity::MultipleDetected } else { RootMultiplicity::Unique };
    let at_boundary = first.lo <= grid[0] || first.hi >= grid[grid.len() - 1];
    Ok(RateSolution { rate_e, residual, bracket: (first.lo, first.hi), multiplicity, at_boundary })
}

/// `e_theta` and `e_theta*` by implicit differentiation of the balance.
pub fn rate_sensitivities<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<RateSensitivities<T>> {
    let g = e / t.theta;
    let u = t.theta_star * e;
    let d = model.domestic.eval(g)?;
    let dp = model.domestic.eval_deriv(g, 1)?;
    let dsp = model.foreign.eval_deriv(u, 1)?;
    let denominator = d + g * dp - t.theta_star * dsp;
    if !(denominator.abs() >= T::lit(1e-12)) {
        return Err(Error::SingularDenominator(denominator.as_f64()));
    }
    Ok(RateSensitivities { de_dtheta: g * g * dp / denominator, de_dtheta_star: e * dsp / denominator, denominator })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReciprocalReport<T> {
    pub rate: T,
    pub swapped_rate: T,
    /// `|e(theta*, theta) e(theta, theta*) - 1|`
    pub product_defect: T,
}

/// For symmetric models the rate with swapped tariffs is the reciprocal rate.
pub fn reciprocal_rate_check<T: Scalar>(
    model: &MarketModel<T>,
    t: TariffPair<T>,
    cfg: &SolverConfig<T>,
) -> Result<ReciprocalReport<T>> {
    if !model.is_symmetric() {
        return Err(Error::InvalidParameter("reciprocal-rate check needs a symmetric model".into()));
    }
    let rate = solve_rate(model, t, cfg)?.rate_e;
    let swapped_rate = solve_rate(model, t.swapped(), cfg)?.rate_e;
    Ok(ReciprocalReport { rate, swapped_rate, product_defect: (rate * swapped_rate - T::one()).abs() })
}
