//! Currency-demand functions and the two-nation market model.
//!
//! `D` (domestic demand for foreign currency) is nonincreasing with `D(0) = 1`;
//! `D*` (foreign demand for domestic currency) is nondecreasing with `D*(0) = 0`.
//! Each analytic family has a native orientation. When it is used in the
//! opposite role it is evaluated at the reciprocal argument, so that
//! `RationalSquare` in both roles gives `D(x) = D*(1/x)` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{self, Bracket};
use crate::scalar::Scalar;

/// Default truncation bound for the exchange-rate and tariff box.
pub const DEFAULT_BOUND: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Domestic,
    Foreign,
}

/// Normalized step function built from price ratios and their value weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    breakpoints: Vec<T>,
    weights: Vec<T>,
    /// `cumulative[i]` is the total weight of `breakpoints[..i]`.
    cumulative: Vec<T>,
    log_breakpoints: Vec<T>,
    /// Kernel bandwidth on the log-ratio axis.
    bandwidth: T,
}

impl<T: Scalar> StepFunction<T> {
    /// Builds a step function from (ratio, weight) pairs. Weights are
    /// normalized to sum to one; equal ratios are merged.
    pub fn new(breakpoints: Vec<T>, weights: Vec<T>) -> Result<Self> {
        Self::with_bandwidth(breakpoints, weights, None)
    }

    pub fn with_bandwidth(breakpoints: Vec<T>, weights: Vec<T>, bandwidth: Option<T>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "step function needs equal, nonzero numbers of breakpoints and weights ({} vs {})",
                breakpoints.len(),
                weights.len()
            )));
        }
        if breakpoints.iter().any(|&r| !(r > T::zero()) || !r.is_finite()) {
            return Err(Error::InvalidParameter("breakpoints must be positive and finite".into()));
        }
        if weights.iter().any(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be nonnegative and finite".into()));
        }
        let total = weights.iter().fold(T::zero(), |s, &w| s + w);
        if !(total > T::zero()) {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        let count = breakpoints.len();
        let mut pairs: Vec<(T, T)> = breakpoints.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(T, T)> = Vec::with_capacity(pairs.len());
        for (r, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == r => last.1 = last.1 + w,
                _ => merged.push((r, w)),
            }
        }
        let breakpoints: Vec<T> = merged.iter().map(|p| p.0).collect();
        let log_breakpoints: Vec<T> = breakpoints.iter().map(|r| r.ln()).collect();
        let weights: Vec<T> = merged.iter().map(|p| p.1 / total).collect();
        let mut cumulative = Vec::with_capacity(weights.len() + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for &w in &weights {
            acc = acc + w;
            cumulative.push(acc);
        }
        for c in cumulative.iter_mut() {
            *c = (*c / acc).min(T::one());
        }
        let bandwidth = match bandwidth {
            Some(h) if h > T::zero() => h,
            Some(_) => return Err(Error::InvalidParameter("bandwidth must be positive".into())),
            None => silverman_bandwidth(&log_breakpoints, &weights, count),
        };
        Ok(Self { breakpoints, log_breakpoints, weights, cumulative, bandwidth })
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    /// Total weight of breakpoints strictly below `x`.
    pub fn mass_below(&self, x: T) -> T {
        let i = self.breakpoints.partition_point(|&r| r < x);
        self.cumulative[i]
    }

    /// Total weight of breakpoints strictly above `x`.
    pub fn mass_above(&self, x: T) -> T {
        let i = self.breakpoints.partition_point(|&r| r <= x);
        T::one() - self.cumulative[i]
    }

    /// Iterates (ratio, weight) pairs with ratio in the open/closed window
    /// selected by the caller.
    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.breakpoints.iter().copied().zip(self.weights.iter().copied())
    }

    fn kernel_window(&self, lx: T) -> std::ops::Range<usize> {
        let reach = self.bandwidth * T::lit(9.0);
        let lo = self.log_breakpoints.partition_point(|&r| r < lx - reach);
        let hi = self.log_breakpoints.partition_point(|&r| r <= lx + reach);
        lo..hi
    }

    /// Gaussian-smoothed CDF in the log ratio,
    /// `F_h(x) = sum w_k Phi((ln x - ln r_k) / h)`, and its first two
    /// derivatives in `x`. `F_h(0) = 0` exactly.
    fn smoothed_cdf(&self, x: T) -> [T; 3] {
        if !(x > T::zero()) {
            return [T::zero(); 3];
        }
        let h = self.bandwidth;
        let lx = x.ln();
        let window = self.kernel_window(lx);
        let inv_sqrt_2pi = T::lit(0.398_942_280_401_432_7);
        let (mut value, mut pdf_sum, mut zpdf_sum) = (self.cumulative[window.start], T::zero(), T::zero());
        for k in window {
            let z = (lx - self.log_breakpoints[k]) / h;
            let w = self.weights[k];
            let pdf = inv_sqrt_2pi * (-(z * z) * T::lit(0.5)).exp();
            value = value + w * normal_cdf(z);
            pdf_sum = pdf_sum + w * pdf;
            zpdf_sum = zpdf_sum + w * pdf * z;
        }
        let d1 = pdf_sum / (h * x);
        let d2 = -(zpdf_sum + h * pdf_sum) / (h * h * x * x);
        [value.min(T::one()).max(T::zero()), d1, d2]
    }
}

fn normal_cdf<T: Scalar>(z: T) -> T {
    T::lit(0.5 * libm::erfc(-z.as_f64() / std::f64::consts::SQRT_2))
}

/// Rule-of-thumb bandwidth `1.06 * min(sigma, IQR / 1.34) * n^(-1/5)` on
/// the weighted log-ratio distribution.
fn silverman_bandwidth<T: Scalar>(log_ratios: &[T], weights: &[T], count: usize) -> T {
    let mean = log_ratios.iter().zip(weights).fold(T::zero(), |s, (&r, &w)| s + r * w);
    let var = log_ratios.iter().zip(weights).fold(T::zero(), |s, (&r, &w)| s + w * (r - mean) * (r - mean));
    let quantile = |q: T| {
        let mut acc = T::zero();
        for (&r, &w) in log_ratios.iter().zip(weights) {
            acc = acc + w;
            if acc >= q {
                return r;
            }
        }
        *log_ratios.last().unwrap()
    };
    let iqr = quantile(T::lit(0.75)) - quantile(T::lit(0.25));
    let mut spread = var.sqrt();
    if iqr > T::zero() {
        spread = spread.min(iqr / T::lit(1.34));
    }
    let n = T::from_usize(count.max(1)).unwrap();
    let h = T::lit(1.06) * spread * n.powf(T::lit(-0.2));
    if h > T::zero() && h.is_finite() {
        h
    } else {
        T::lit(0.01)
    }
}

/// Analytic and empirical demand families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    /// `(1 + x)^-2`, natively decreasing.
    RationalSquare,
    /// `max(1 - alpha x, 0)`, natively decreasing.
    ClippedLinear { alpha: T },
    /// `exp(-delta x)`, natively decreasing.
    Exponential { delta: T },
    /// `min(alpha x exp(beta x), 1)`, natively increasing. `clip` is the
    /// argument at which the product reaches one.
    ClippedExpGrowth { alpha: T, beta: T, clip: T },
    /// Raw step-function estimate from a commodity sample.
    EmpiricalStep(StepFunction<T>),
    /// Gaussian-kernel smoothing of an empirical step function.
    KernelSmoothed(StepFunction<T>),
}

impl<T: Scalar> Family<T> {
    pub fn rational_square() -> Self {
        Family::RationalSquare
    }

    pub fn clipped_linear(alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("clipped_linear alpha must be positive, got {alpha}")));
        }
        Ok(Family::ClippedLinear { alpha })
    }

    pub fn exponential(delta: T) -> Result<Self> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("exponential delta must be positive, got {delta}")));
        }
        Ok(Family::Exponential { delta })
    }

    pub fn clipped_exp_growth(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() || !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "clipped_exp_growth needs alpha > 0 and beta >= 0, got ({alpha}, {beta})"
            )));
        }
        let g = |x: T| Some(alpha * x * (beta * x).exp() - T::one());
        let mut hi = T::one();
        while g(hi).unwrap() < T::zero() {
            hi = hi * T::lit(2.0);
        }
        let bracket = Bracket { lo: T::zero(), hi, f_lo: -T::one(), f_hi: g(hi).unwrap() };
        let clip = roots::bisect(g, bracket, T::zero());
        Ok(Family::ClippedExpGrowth { alpha, beta, clip })
    }

    fn natively_decreasing(&self) -> bool {
        !matches!(self, Family::ClippedExpGrowth { .. })
    }

    /// Value and first two derivatives in native orientation. Returns the
    /// kink location instead when `x` sits exactly on it.
    fn native(&self, x: T) -> std::result::Result<[T; 3], T> {
        let one = T::one();
        let two = T::lit(2.0);
        Ok(match *self {
            Family::RationalSquare => {
                let s = one + x;
                [one / (s * s), -two / (s * s * s), T::lit(6.0) / (s * s * s * s)]
            }
            Family::ClippedLinear { alpha } => {
                let kink = one / alpha;
                if x == kink {
                    return Err(kink);
                }
                if x < kink {
                    [(one - alpha * x).max(T::zero()), -alpha, T::zero()]
                } else {
                    [T::zero(); 3]
                }
            }
            Family::Exponential { delta } => {
                let v = (-delta * x).exp();
                [v, -delta * v, delta * delta * v]
            }
            Family::ClippedExpGrowth { alpha, beta, clip } => {
                if x == clip {
                    return Err(clip);
                }
                let ex = (beta * x).exp();
                let v = alpha * x * ex;
                if x < clip && v < one {
                    [v, (alpha * beta * x + alpha) * ex, (alpha * beta * beta * x + two * alpha * beta) * ex]
                } else {
                    [one, T::zero(), T::zero()]
                }
            }
            Family::EmpiricalStep(_) | Family::KernelSmoothed(_) => unreachable!("not an analytic family"),
        })
    }

    fn native_kink(&self) -> Option<T> {
        match *self {
            Family::ClippedLinear { alpha } => Some(T::one() / alpha),
            Family::ClippedExpGrowth { clip, .. } => Some(clip),
            _ => None,
        }
    }

    /// Value of the native function as its argument tends to infinity.
    fn native_limit(&self) -> T {
        if self.natively_decreasing() {
            T::zero()
        } else {
            T::one()
        }
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self, Family::EmpiricalStep(_) | Family::KernelSmoothed(_))
    }

    pub fn step_function(&self) -> Option<&StepFunction<T>> {
        match self {
            Family::EmpiricalStep(s) | Family::KernelSmoothed(s) => Some(s),
            _ => None,
        }
    }
}

/// A demand family bound to the role it plays in the market.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandFunction<T> {
    pub family: Family<T>,
    pub role: Role,
}

impl<T: Scalar> DemandFunction<T> {
    pub fn new(family: Family<T>, role: Role) -> Self {
        Self { family, role }
    }

    fn reciprocal(&self) -> bool {
        match self.role {
            Role::Domestic => !self.family.natively_decreasing(),
            Role::Foreign => self.family.natively_decreasing(),
        }
    }

    fn check_arg(x: T) -> Result<()> {
        if x >= T::zero() {
            Ok(())
        } else {
            Err(Error::Domain { x: x.as_f64(), lo: 0.0, hi: f64::INFINITY })
        }
    }

    /// Evaluates the demand function at `x >= 0`.
    pub fn eval(&self, x: T) -> Result<T> {
        Self::check_arg(x)?;
        match &self.family {
            Family::EmpiricalStep(s) => Ok(match self.role {
                Role::Domestic => s.mass_above(x),
                Role::Foreign => s.mass_below(x),
            }),
            Family::KernelSmoothed(s) => {
                let cdf = s.smoothed_cdf(x)[0];
                Ok(match self.role {
                    Role::Domestic => T::one() - cdf,
                    Role::Foreign => cdf,
                })
            }
            _ => Ok(self.analytic(x, 0)),
        }
    }

    /// `order`-th derivative (1 or 2). Empirical steps use the kernel-smoothed
    /// estimate; clipped families return [`Error::Kink`] exactly at the clip.
    pub fn eval_deriv(&self, x: T, order: u8) -> Result<T> {
        Self::check_arg(x)?;
        if !(1..=2).contains(&order) {
            return Err(Error::InvalidParameter(format!("derivative order must be 1 or 2, got {order}")));
        }
        if let Some(s) = self.family.step_function() {
            let cdf = s.smoothed_cdf(x);
            let d = cdf[order as usize];
            return Ok(match self.role {
                Role::Domestic => -d,
                Role::Foreign => d,
            });
        }
        if let Some(kink) = self.kink() {
            if x == kink {
                let left = self.analytic(x * (T::one() - T::lit(1e-9)), order as usize);
                let right = self.analytic(x * (T::one() + T::lit(1e-9)), order as usize);
                return Err(Error::Kink { at: x.as_f64(), left: left.as_f64(), right: right.as_f64() });
            }
        }
        Ok(self.analytic(x, order as usize))
    }

    /// Kink location in this function's own argument, if any.
    pub fn kink(&self) -> Option<T> {
        let k = self.family.native_kink()?;
        Some(if self.reciprocal() { T::one() / k } else { k })
    }

    /// Value at `1/x`, with `x = 0` mapped to the limit at infinity.
    pub fn eval_reciprocal(&self, x: T) -> Result<T> {
        Self::check_arg(x)?;
        let inv = T::one() / x;
        if x == T::zero() || !inv.is_finite() {
            return Ok(match self.role {
                Role::Domestic => T::zero(),
                Role::Foreign => T::one(),
            });
        }
        self.eval(inv)
    }

    /// Analytic value/derivative ignoring the kink check (kinks resolve to
    /// the right-hand branch).
    fn analytic(&self, x: T, order: usize) -> T {
        let native = |y: T| match self.family.native(y) {
            Ok(v) => v,
            Err(k) => self.family.native(k * (T::one() + T::epsilon())).unwrap(),
        };
        if !self.reciprocal() {
            return native(x)[order];
        }
        if let Family::RationalSquare = self.family {
            // x^2 / (1 + x)^2 written directly so that x = 0 is regular.
            let s = T::one() + x;
            let two = T::lit(2.0);
            return match order {
                0 => x * x / (s * s),
                1 => two * x / (s * s * s),
                _ => (two - T::lit(4.0) * x) / (s * s * s * s),
            };
        }
        let y = T::one() / x;
        if x == T::zero() || !(y * y).is_finite() {
            return if order == 0 { self.family.native_limit() } else { T::zero() };
        }
        let v = native(y);
        let r = match order {
            0 => v[0],
            1 => -v[1] * y * y,
            _ => v[2] * y * y * y * y + T::lit(2.0) * v[1] * y * y * y,
        };
        if r.is_finite() {
            r
        } else {
            T::zero()
        }
    }

    /// Checks bounds and role monotonicity on a uniform grid over `[0, upper]`.
    pub fn check_monotone(&self, upper: T, grid_n: usize) -> Result<MonotoneReport> {
        if grid_n < 2 {
            return Err(Error::InvalidParameter("grid_n must be at least 2".into()));
        }
        let grid = roots::linear_grid(T::zero(), upper, grid_n);
        let mut prev: Option<(T, T)> = None;
        for &x in &grid {
            let v = self.eval(x)?;
            if !(v >= T::zero() && v <= T::one()) {
                return Ok(MonotoneReport::fail(x, v, x, v));
            }
            if let Some((xp, vp)) = prev {
                let bad = match self.role {
                    Role::Domestic => v > vp,
                    Role::Foreign => v < vp,
                };
                if bad {
                    return Ok(MonotoneReport::fail(xp, vp, x, v));
                }
            }
            prev = Some((x, v));
        }
        Ok(MonotoneReport { pass: true, first_violation: None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub pass: bool,
    /// `(x_i, D(x_i), x_j, D(x_j))` for the first offending pair.
    pub first_violation: Option<(f64, f64, f64, f64)>,
}

impl MonotoneReport {
    fn fail<T: Scalar>(x0: T, v0: T, x1: T, v1: T) -> Self {
        Self { pass: false, first_violation: Some((x0.as_f64(), v0.as_f64(), x1.as_f64(), v1.as_f64())) }
    }
}

/// The pair `(D, D*)` together with the box bound `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel<T> {
    pub domestic: DemandFunction<T>,
    pub foreign: DemandFunction<T>,
    bound: T,
    symmetric: bool,
}

impl<T: Scalar> MarketModel<T> {
    /// Builds a model; the symmetry flag is detected on a log grid over the box.
    pub fn new(domestic: Family<T>, foreign: Family<T>, bound: T) -> Result<Self> {
        if !(bound > T::one()) || !bound.is_finite() {
            return Err(Error::InvalidParameter(format!("truncation bound M must exceed 1, got {bound}")));
        }
        let mut model = Self {
            domestic: DemandFunction::new(domestic, Role::Domestic),
            foreign: DemandFunction::new(foreign, Role::Foreign),
            bound,
            symmetric: false,
        };
        model.symmetric = model.symmetry_defect(1000)? <= T::tol_floor(1e-12, 64.0);
        Ok(model)
    }

    /// Symmetric rational-square model `D(x) = D*(1/x) = (1 + x)^-2`.
    pub fn rational_square() -> Self {
        Self::new(Family::RationalSquare, Family::RationalSquare, T::lit(DEFAULT_BOUND)).unwrap()
    }

    /// Symmetric model `D(x) = D*(1/x) = (1 - alpha x)^+`.
    pub fn clipped_linear(alpha: T) -> Result<Self> {
        Self::new(Family::clipped_linear(alpha)?, Family::clipped_linear(alpha)?, T::lit(DEFAULT_BOUND))
    }

    /// Asymmetric model `D(x) = exp(-delta x)`, `D*(x) = min(alpha x exp(beta x), 1)`.
    pub fn exponential_asymmetric(alpha: T, beta: T, delta: T) -> Result<Self> {
        Self::new(Family::exponential(delta)?, Family::clipped_exp_growth(alpha, beta)?, T::lit(DEFAULT_BOUND))
    }

    pub fn with_bound(&self, bound: T) -> Result<Self> {
        Self::new(self.domestic.family.clone(), self.foreign.family.clone(), bound)
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn lower_bound(&self) -> T {
        T::one() / self.bound
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// True when neither side is a raw step function.
    pub fn is_smooth(&self) -> bool {
        !matches!(self.domestic.family, Family::EmpiricalStep(_))
            && !matches!(self.foreign.family, Family::EmpiricalStep(_))
    }

    /// Replaces raw empirical steps by their kernel-smoothed counterparts.
    pub fn smoothed(&self) -> Self {
        let smooth = |f: &Family<T>| match f {
            Family::EmpiricalStep(s) => Family::KernelSmoothed(s.clone()),
            other => other.clone(),
        };
        Self {
            domestic: DemandFunction::new(smooth(&self.domestic.family), Role::Domestic),
            foreign: DemandFunction::new(smooth(&self.foreign.family), Role::Foreign),
            bound: self.bound,
            symmetric: self.symmetric,
        }
    }

    /// `max |D(x) - D*(1/x)|` over a log grid on `[1/M, M]`.
    pub fn symmetry_defect(&self, grid_n: usize) -> Result<T> {
        let grid = roots::log_grid(self.lower_bound(), self.bound, grid_n);
        let mut worst = T::zero();
        for x in grid {
            let d = (self.domestic.eval(x)? - self.foreign.eval_reciprocal(x)?).abs();
            worst = worst.max(d);
        }
        Ok(worst)
    }

    pub fn check_monotone(&self, grid_n: usize) -> Result<(MonotoneReport, MonotoneReport)> {
        Ok((self.domestic.check_monotone(self.bound, grid_n)?, self.foreign.check_monotone(self.bound, grid_n)?))
    }
}

/// JSON description of one side of the market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    RationalSquare {},
    ClippedLinear {
        alpha: f64,
    },
    Exponential {
        delta: f64,
    },
    ClippedExpGrowth {
        alpha: f64,
        beta: f64,
    },
    Empirical {
        breakpoints: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
}

fn default_bound() -> f64 {
    DEFAULT_BOUND
}

/// JSON model document: `{"domestic": {...}, "foreign": {...}, "M": 100}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub domestic: FamilySpec,
    pub foreign: FamilySpec,
    #[serde(rename = "M", default = "default_bound")]
    pub bound: f64,
}

impl FamilySpec {
    pub fn to_family<T: Scalar>(&self) -> Result<Family<T>> {
        let cast = |v: f64| T::from_f64(v).ok_or_else(|| Error::InvalidParameter(format!("{v} not representable")));
        match self {
            FamilySpec::RationalSquare {} => Ok(Family::RationalSquare),
            FamilySpec::ClippedLinear { alpha } => Family::clipped_linear(cast(*alpha)?),
            FamilySpec::Exponential { delta } => Family::exponential(cast(*delta)?),
            FamilySpec::ClippedExpGrowth { alpha, beta } => Family::clipped_exp_growth(cast(*alpha)?, cast(*beta)?),
            FamilySpec::Empirical { breakpoints, weights, bandwidth } => {
                let b = breakpoints.iter().map(|&v| cast(v)).collect::<Result<Vec<T>>>()?;
                let w = weights.iter().map(|&v| cast(v)).collect::<Result<Vec<T>>>()?;
                let h = bandwidth.map(cast).transpose()?;
                Ok(Family::EmpiricalStep(StepFunction::with_bandwidth(b, w, h)?))
            }
        }
    }

    pub fn from_family<T: Scalar>(family: &Family<T>) -> Self {
        match family {
            Family::RationalSquare => FamilySpec::RationalSquare {},
            Family::ClippedLinear { alpha } => FamilySpec::ClippedLinear { alpha: alpha.as_f64() },
            Family::Exponential { delta } => FamilySpec::Exponential { delta: delta.as_f64() },
            Family::ClippedExpGrowth { alpha, beta, .. } => {
                FamilySpec::ClippedExpGrowth { alpha: alpha.as_f64(), beta: beta.as_f64() }
            }
            Family::EmpiricalStep(s) | Family::KernelSmoothed(s) => FamilySpec::Empirical {
                breakpoints: s.breakpoints.iter().map(|v| v.as_f64()).collect(),
                weights: s.weights.iter().map(|v| v.as_f64()).collect(),
                bandwidth: Some(s.bandwidth.as_f64()),
            },
        }
    }
}

impl ModelSpec {
    pub fn to_model<T: Scalar>(&self) -> Result<MarketModel<T>> {
        let bound = T::from_f64(self.bound)
            .ok_or_else(|| Error::InvalidParameter(format!("M = {} not representable", self.bound)))?;
        MarketModel::new(self.domestic.to_family()?, self.foreign.to_family()?, bound)
    }

    pub fn from_model<T: Scalar>(model: &MarketModel<T>) -> Self {
        Self {
            domestic: FamilySpec::from_family(&model.domestic.family),
            foreign: FamilySpec::from_family(&model.foreign.family),
            bound: model.bound.as_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(f: Family<f64>) -> DemandFunction<f64> {
        DemandFunction::new(f, Role::Domestic)
    }

    fn fgn(f: Family<f64>) -> DemandFunction<f64> {
        DemandFunction::new(f, Role::Foreign)
    }

    #[test]
    fn family_values() {
        assert_eq!(dom(Family::RationalSquare).eval(1.0).unwrap(), 0.25);
        assert_eq!(dom(Family::RationalSquare).eval(0.0).unwrap(), 1.0);
        let growth = Family::clipped_exp_growth(0.01, 2.0).unwrap();
        assert_eq!(fgn(growth).eval(0.0).unwrap(), 0.0);
        assert_eq!(dom(Family::clipped_linear(0.5).unwrap()).eval(3.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_argument_is_a_domain_error() {
        let d = dom(Family::RationalSquare);
        assert!(matches!(d.eval(-1e-3), Err(Error::Domain { .. })));
        assert!(matches!(d.eval_deriv(-1.0, 1), Err(Error::Domain { .. })));
    }

    #[test]
    fn family_derivatives() {
        let e = dom(Family::exponential(2.5).unwrap());
        assert_eq!(e.eval_deriv(0.0, 1).unwrap(), -2.5);
        assert_eq!(dom(Family::RationalSquare).eval_deriv(1.0, 1).unwrap(), -0.25);
        let g = fgn(Family::clipped_exp_growth(0.01, 2.0).unwrap());
        let expected = 0.01 * 1f64.exp() * (2.0 * 0.5 + 1.0);
        assert!((g.eval_deriv(0.5, 1).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.0543656).abs() < 1e-7);
        // central difference cross-check
        let h = 1e-6;
        let fd = (g.eval(0.5 + h).unwrap() - g.eval(0.5 - h).unwrap()) / (2.0 * h);
        assert!((fd - expected).abs() < 1e-8);
    }

    #[test]
    fn kink_is_reported_with_one_sided_values() {
        let d = dom(Family::clipped_linear(0.5).unwrap());
        match d.eval_deriv(2.0, 1) {
            Err(Error::Kink { at, left, right }) => {
                assert_eq!(at, 2.0);
                assert_eq!(left, -0.5);
                assert_eq!(right, 0.0);
            }
            other => panic!("expected kink, got {other:?}"),
        }
        let g = fgn(Family::clipped_exp_growth(0.01, 2.0).unwrap());
        let clip = g.kink().unwrap();
        assert!((0.01 * clip * (2.0 * clip).exp() - 1.0).abs() < 1e-12);
        assert!(matches!(g.eval_deriv(clip, 2), Err(Error::Kink { .. })));
    }

    #[test]
    fn clipped_growth_is_continuous_at_clip() {
        let g = fgn(Family::clipped_exp_growth(0.01, 2.0).unwrap());
        let clip = g.kink().unwrap();
        let below = g.eval(clip * (1.0 - 1e-12)).unwrap();
        let above = g.eval(clip * (1.0 + 1e-12)).unwrap();
        assert!((below - 1.0).abs() < 1e-10);
        assert_eq!(above, 1.0);
    }

    #[test]
    fn reciprocal_orientation() {
        let dstar = fgn(Family::RationalSquare);
        let d = dom(Family::RationalSquare);
        for &x in &[0.01, 0.3, 1.0, 2.5, 70.0] {
            assert!((d.eval(x).unwrap() - dstar.eval(1.0 / x).unwrap()).abs() < 1e-15);
        }
        assert_eq!(dstar.eval(0.0).unwrap(), 0.0);
        assert_eq!(dstar.eval_deriv(0.0, 2).unwrap(), 2.0);
        let lin = fgn(Family::clipped_linear(0.5).unwrap());
        assert_eq!(lin.eval(0.25).unwrap(), 0.0);
        assert!((lin.eval(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(lin.kink(), Some(0.5));
        let growth_dom = dom(Family::clipped_exp_growth(0.01, 2.0).unwrap());
        assert_eq!(growth_dom.eval(0.0).unwrap(), 1.0);
        assert!(growth_dom.check_monotone(100.0, 1000).unwrap().pass);
    }

    #[test]
    fn monotone_checks_pass_for_example_families() {
        assert!(dom(Family::RationalSquare).check_monotone(100.0, 1000).unwrap().pass);
        let g = fgn(Family::clipped_exp_growth(0.01, 2.0).unwrap());
        assert!(g.check_monotone(100.0, 1000).unwrap().pass);
        assert!(matches!(dom(Family::RationalSquare).check_monotone(100.0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn smoothed_empirical_stays_bounded() {
        let s = StepFunction::new(vec![0.5, 1.0, 4.0], vec![1.0, 2.0, 1.0]).unwrap();
        let d = dom(Family::KernelSmoothed(s.clone()));
        let ds = fgn(Family::KernelSmoothed(s));
        assert!(d.check_monotone(10.0, 500).unwrap().pass);
        assert!(ds.check_monotone(10.0, 500).unwrap().pass);
    }

    #[test]
    fn step_function_is_strict_at_breakpoints() {
        let s = StepFunction::new(vec![1.0, 2.0, 2.0, 3.0], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let d = dom(Family::EmpiricalStep(s.clone()));
        let ds = fgn(Family::EmpiricalStep(s));
        assert_eq!(d.eval(0.0).unwrap(), 1.0);
        assert_eq!(d.eval(2.0).unwrap(), 0.25);
        assert_eq!(ds.eval(2.0).unwrap(), 0.25);
        assert_eq!(d.eval(3.0).unwrap(), 0.0);
        assert_eq!(ds.eval(3.5).unwrap(), 1.0);
    }

    #[test]
    fn smoothed_derivative_matches_smoothed_value() {
        let b: Vec<f64> = (1..200).map(|k| 0.02 * k as f64).collect();
        let w = vec![1.0; b.len()];
        let s = StepFunction::new(b, w).unwrap();
        let d = dom(Family::KernelSmoothed(s));
        let x = 1.7;
        let h = 1e-5;
        let fd = (d.eval(x + h).unwrap() - d.eval(x - h).unwrap()) / (2.0 * h);
        assert!((d.eval_deriv(x, 1).unwrap() - fd).abs() < 1e-6);
        let fd2 = (d.eval_deriv(x + h, 1).unwrap() - d.eval_deriv(x - h, 1).unwrap()) / (2.0 * h);
        assert!((d.eval_deriv(x, 2).unwrap() - fd2).abs() < 1e-5);
    }

    #[test]
    fn symmetry_detection() {
        assert!(MarketModel::<f64>::rational_square().is_symmetric());
        assert!(MarketModel::<f64>::clipped_linear(0.5).unwrap().is_symmetric());
        assert!(!MarketModel::<f64>::exponential_asymmetric(0.01, 2.0, 2.5).unwrap().is_symmetric());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Family::<f64>::clipped_linear(0.0).is_err());
        assert!(Family::<f64>::exponential(-1.0).is_err());
        assert!(Family::<f64>::clipped_exp_growth(0.0, 1.0).is_err());
        assert!(MarketModel::new(Family::<f64>::RationalSquare, Family::RationalSquare, 1.0).is_err());
        assert!(StepFunction::<f64>::new(vec![], vec![]).is_err());
        assert!(StepFunction::new(vec![-1.0], vec![1.0]).is_err());
    }

    #[test]
    fn model_json_schema() {
        let text = r#"{"domestic": {"family": "exponential", "params": {"delta": 2.5}},
                       "foreign": {"family": "clipped_exp_growth", "params": {"alpha": 0.01, "beta": 2}},
                       "M": 100}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let model: MarketModel<f64> = spec.to_model().unwrap();
        assert_eq!(model, MarketModel::exponential_asymmetric(0.01, 2.0, 2.5).unwrap());
        let rs: ModelSpec = serde_json::from_str(
            r#"{"domestic": {"family": "rational_square", "params": {}},
                                    "foreign": {"family": "rational_square", "params": {}}}"#,
        )
        .unwrap();
        assert_eq!(rs.bound, 100.0);
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
