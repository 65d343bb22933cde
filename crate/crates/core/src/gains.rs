//! Gains from trade for both nations.
//!
//! The import terms are improper integrals over the price-ratio axis. Both
//! are evaluated on the ratio box `[1/M, M]`:
//!
//! ```text
//! G  = -int_{e/theta}^{M} y D'(y) dy          - D*(theta* e)
//! G* =  int_{1/M}^{theta* e} D*'(u) / u du    - D(e/theta)
//! ```
//!
//! The foreign integral is the `u = 1/y` form of
//! `int_{1/(theta* e)}^{M} (1/y) D*'(1/y) dy`. Raw empirical steps use the
//! matching Stieltjes sums over the sample instead of quadrature.

use serde::Serialize;

use crate::demand::{Family, MarketModel};
use crate::equilibrium::{self, TariffPair};
use crate::error::{Error, Result};
use crate::nash::SolverConfig;
use crate::quadrature::{integrate, integrate_with_breaks};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GainMethod {
    Quadrature,
    ExpectationSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport<T> {
    pub gain_domestic: T,
    pub gain_foreign: T,
    pub method: GainMethod,
    /// Import value lying outside the ratio box, i.e. what truncation at
    /// `[1/M, M]` drops. Infinite when the untruncated integral diverges.
    pub truncation_error_bound: T,
    /// Monte Carlo standard errors of `(G, G*)`, when sample-based.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<(T, T)>,
}

fn quad_tol<T: Scalar>() -> T {
    T::tol_floor(1e-13, 256.0)
}

fn check_point<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<()> {
    let (lo, hi) = (model.lower_bound(), model.bound());
    if !(e >= lo && e <= hi) {
        return Err(Error::Domain { x: e.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    t.validate(model)
}

fn kinks_inside<T: Scalar>(kink: Option<T>, a: T, b: T) -> Vec<T> {
    kink.into_iter().filter(|&k| k > a && k < b).collect()
}

/// Domestic import value `-int_a^M y D'(y) dy` (zero when `a >= M`).
pub fn domestic_import_value<T: Scalar>(model: &MarketModel<T>, a: T) -> Result<T> {
    let m = model.bound();
    if a >= m {
        return Ok(T::zero());
    }
    if let Family::EmpiricalStep(s) = &model.domestic.family {
        return Ok(s.iter().filter(|&(r, _)| r > a && r <= m).fold(T::zero(), |acc, (r, w)| acc + r * w));
    }
    let d = &model.domestic;
    let f = |y: T| -y * d.eval_deriv(y, 1).unwrap_or(T::nan());
    let breaks = kinks_inside(d.kink(), a, m);
    Ok(integrate_with_breaks(f, a, m, &breaks, quad_tol())?.value)
}

/// Foreign import value `int_{1/M}^b D*'(u)/u du` (zero when `b <= 1/M`).
pub fn foreign_import_value<T: Scalar>(model: &MarketModel<T>, b: T) -> Result<T> {
    let lo = model.lower_bound();
    if b <= lo {
        return Ok(T::zero());
    }
    if let Family::EmpiricalStep(s) = &model.foreign.family {
        return Ok(s.iter().filter(|&(r, _)| r >= lo && r < b).fold(T::zero(), |acc, (r, w)| acc + w / r));
    }
    let ds = &model.foreign;
    let f = |u: T| ds.eval_deriv(u, 1).unwrap_or(T::nan()) / u;
    let breaks = kinks_inside(ds.kink(), lo, b);
    Ok(integrate_with_breaks(f, lo, b, &breaks, quad_tol())?.value)
}

/// Domestic gain `G(e, theta, theta*)`.
pub fn gain_domestic<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<T> {
    check_point(model, e, t)?;
    Ok(domestic_import_value(model, e / t.theta)? - model.foreign.eval(t.theta_star * e)?)
}

/// Foreign gain `G*(e, theta, theta*)`.
pub fn gain_foreign<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<T> {
    check_point(model, e, t)?;
    Ok(foreign_import_value(model, t.theta_star * e)? - model.domestic.eval(e / t.theta)?)
}

/// Domestic gain through integration by parts,
/// `a D(a) - M D(M) + int_a^M D(y) dy - D*(theta* e)`. Analytic families only.
pub fn gain_domestic_by_parts<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<T> {
    check_point(model, e, t)?;
    let d = &model.domestic;
    let (a, m) = (e / t.theta, model.bound());
    let export = model.foreign.eval(t.theta_star * e)?;
    if a >= m {
        return Ok(-export);
    }
    let breaks = kinks_inside(d.kink(), a, m);
    let area = integrate_with_breaks(|y: T| d.eval(y).unwrap_or(T::nan()), a, m, &breaks, quad_tol())?.value;
    Ok(a * d.eval(a)? - m * d.eval(m)? + area - export)
}

/// Foreign gain through integration by parts,
/// `D*(b)/b - M D*(1/M) + int_{1/M}^b D*(u)/u^2 du - D(e/theta)`.
pub fn gain_foreign_by_parts<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<T> {
    check_point(model, e, t)?;
    let ds = &model.foreign;
    let (lo, b) = (model.lower_bound(), t.theta_star * e);
    let export = model.domestic.eval(e / t.theta)?;
    if b <= lo {
        return Ok(-export);
    }
    let breaks = kinks_inside(ds.kink(), lo, b);
    let area =
        integrate_with_breaks(|u: T| ds.eval(u).unwrap_or(T::nan()) / (u * u), lo, b, &breaks, quad_tol())?.value;
    Ok(ds.eval(b)? / b - ds.eval(lo)? / lo + area - export)
}

/// Import value dropped by the ratio box: `-int_M^inf y D'(y) dy` plus
/// `int_0^{1/M} D*'(u)/u du`.
pub fn truncation_tail<T: Scalar>(model: &MarketModel<T>) -> T {
    let m = model.bound();
    let lo = model.lower_bound();
    let dom_tail = match &model.domestic.family {
        Family::EmpiricalStep(s) => s.iter().filter(|&(r, _)| r > m).fold(T::zero(), |acc, (r, w)| acc + r * w),
        _ => {
            // y = M / s maps [M, inf) onto (0, 1].
            let d = &model.domestic;
            let f = |s: T| {
                let y = m / s;
                let v = -y * d.eval_deriv(y, 1).unwrap_or(T::nan()) * m / (s * s);
                if v.is_finite() || y.is_infinite() {
                    v
                } else {
                    T::zero()
                }
            };
            integrate(f, T::zero(), T::one(), quad_tol()).map_or(T::infinity(), |r| r.value)
        }
    };
    let for_tail = match &model.foreign.family {
        Family::EmpiricalStep(s) => s.iter().filter(|&(r, _)| r < lo).fold(T::zero(), |acc, (r, w)| acc + w / r),
        _ => {
            let ds = &model.foreign;
            let f = |u: T| ds.eval_deriv(u, 1).unwrap_or(T::nan()) / u;
            integrate(f, T::zero(), lo, quad_tol()).map_or(T::infinity(), |r| r.value)
        }
    };
    dom_tail.abs() + for_tail.abs()
}

/// Both gains at `(e, theta, theta*)`.
pub fn gain_report<T: Scalar>(model: &MarketModel<T>, e: T, t: TariffPair<T>) -> Result<GainReport<T>> {
    let method = if model.is_smooth() { GainMethod::Quadrature } else { GainMethod::ExpectationSum };
    Ok(GainReport {
        gain_domestic: gain_domestic(model, e, t)?,
        gain_foreign: gain_foreign(model, e, t)?,
        method,
        truncation_error_bound: truncation_tail(model),
        standard_error: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryGainReport<T> {
    pub rate: T,
    pub gain: T,
    pub mirrored_gain: T,
    /// `|G*(1/e, theta*, theta) - G(e, theta, theta*)|`
    pub difference: T,
}

/// Checks that the foreign gain in the role-swapped game equals the domestic gain.
pub fn symmetry_gain_check<T: Scalar>(
    model: &MarketModel<T>,
    t: TariffPair<T>,
    cfg: &SolverConfig<T>,
) -> Result<SymmetryGainReport<T>> {
    if !model.is_symmetric() {
        return Err(Error::InvalidParameter("gain symmetry check needs a symmetric model".into()));
    }
    let rate = equilibrium::solve_rate(model, t, cfg)?.rate_e;
    let gain = gain_domestic(model, rate, t)?;
    let mirrored_gain = gain_foreign(model, T::one() / rate, t.swapped())?;
    Ok(SymmetryGainReport { rate, gain, mirrored_gain, difference: (gain - mirrored_gain).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::StepFunction;

    fn cfg() -> SolverConfig<f64> {
        SolverConfig::default()
    }

    #[test]
    fn exponential_import_integral_closed_form() {
        // -int_a^inf y D'(y) dy = (a + 1/delta) exp(-delta a)
        let m = MarketModel::<f64>::exponential_asymmetric(0.01, 2.0, 2.5).unwrap();
        let v = domestic_import_value(&m, 1.5).unwrap();
        let closed = (1.5 + 0.4) * (-3.75f64).exp();
        assert!((closed - 0.0446837).abs() < 1e-7);
        assert!((v - closed).abs() < 1e-12);
        // gain subtracts D*(theta* e) at e = 0.81, theta = 0.54
        let t = TariffPair::new(0.54, 0.73);
        let g = gain_domestic(&m, 0.81, t).unwrap();
        let expected = domestic_import_value(&m, 0.81 / 0.54).unwrap() - m.foreign.eval(0.73 * 0.81).unwrap();
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn rational_import_integral_closed_form() {
        // -int_a^M y D'(y) dy = [ -2/(1+y) + 1/(1+y)^2 ]_a^M  with D = (1+y)^-2
        let m = MarketModel::<f64>::rational_square();
        let anti = |y: f64| -2.0 / (1.0 + y) + 1.0 / ((1.0 + y) * (1.0 + y));
        let v = domestic_import_value(&m, 3.0).unwrap();
        assert!((v - (anti(100.0) - anti(3.0))).abs() < 1e-12);
    }

    #[test]
    fn saturated_limits() {
        // e/theta beyond the support of D and D* saturated: G = -1.
        let m = MarketModel::new(
            Family::clipped_linear(0.5).unwrap(),
            Family::clipped_exp_growth(0.01, 2.0).unwrap(),
            100.0,
        )
        .unwrap();
        assert_eq!(gain_domestic(&m, 50.0, TariffPair::equal(1.0)).unwrap(), -1.0);
    }

    #[test]
    fn empty_foreign_import_region() {
        let m = MarketModel::<f64>::rational_square();
        let t = TariffPair::new(0.5, 0.01);
        let e = 0.5;
        let g = gain_foreign(&m, e, t).unwrap();
        assert_eq!(g, -m.domestic.eval(e / 0.5).unwrap());
    }

    #[test]
    fn symmetric_gains_coincide_at_unit_rate() {
        let m = MarketModel::<f64>::rational_square();
        let t = TariffPair::equal(0.6);
        let g = gain_domestic(&m, 1.0, t).unwrap();
        let gs = gain_foreign(&m, 1.0, t).unwrap();
        assert!((g - gs).abs() < 1e-12);
    }

    #[test]
    fn free_trade_symmetric_gains_equal() {
        let m = MarketModel::<f64>::rational_square();
        let t = TariffPair::equal(1.0);
        let e = equilibrium::solve_rate(&m, t, &cfg()).unwrap().rate_e;
        assert!((e - 1.0).abs() < 1e-10);
        let r = gain_report(&m, e, t).unwrap();
        assert!((r.gain_domestic - r.gain_foreign).abs() < 1e-9);
    }

    #[test]
    fn integration_by_parts_agrees() {
        let models = [
            MarketModel::<f64>::rational_square(),
            MarketModel::clipped_linear(0.5).unwrap(),
            MarketModel::exponential_asymmetric(0.01, 2.0, 2.5).unwrap(),
        ];
        for m in &models {
            for &(th, ts) in &[(0.3, 0.4), (0.54, 0.73), (0.9, 0.6), (1.0, 1.0)] {
                let t = TariffPair::new(th, ts);
                let e = equilibrium::solve_rate(m, t, &cfg()).unwrap().rate_e;
                let a = gain_domestic(m, e, t).unwrap();
                let b = gain_domestic_by_parts(m, e, t).unwrap();
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                let a = gain_foreign(m, e, t).unwrap();
                let b = gain_foreign_by_parts(m, e, t).unwrap();
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn symmetry_identity() {
        let m = MarketModel::<f64>::rational_square();
        for t in [TariffPair::new(0.4, 0.9), TariffPair::equal(1.0 / 3.0)] {
            assert!(symmetry_gain_check(&m, t, &cfg()).unwrap().difference <= 1e-8);
        }
        let lin = MarketModel::<f64>::clipped_linear(0.5).unwrap();
        assert!(symmetry_gain_check(&lin, TariffPair::equal(2.0 / 3.0), &cfg()).unwrap().difference <= 1e-8);
    }

    #[test]
    fn step_models_use_sums() {
        let s = StepFunction::<f64>::new(vec![0.5, 2.0], vec![1.0, 1.0]).unwrap();
        let m = MarketModel::new(Family::EmpiricalStep(s.clone()), Family::EmpiricalStep(s), 100.0).unwrap();
        let r = gain_report(&m, 1.0, TariffPair::equal(1.0)).unwrap();
        assert_eq!(r.method, GainMethod::ExpectationSum);
        // G = 2 * 0.5 - D*(1) = 1 - 0.5; G* = 0.5 / 0.5 - D(1) = 1 - 0.5
        assert!((r.gain_domestic - 0.5).abs() < 1e-15);
        assert!((r.gain_foreign - 0.5).abs() < 1e-15);
        assert_eq!(r.truncation_error_bound, 0.0);
    }

    #[test]
    fn truncation_tails() {
        let lin = MarketModel::<f64>::clipped_linear(0.5).unwrap();
        assert!(truncation_tail(&lin) < 1e-12);
        // Rational: -int_M^inf y D' dy = 2/(1+M) - 1/(1+M)^2 and
        // int_0^{1/M} 2/(1+u)^3 du = 1 - (1 + 1/M)^-2.
        let rs = MarketModel::<f64>::rational_square();
        let expected = 2.0 / 101.0 - 1.0 / (101.0f64 * 101.0) + 1.0 - (1.01f64).powi(-2);
        assert!((truncation_tail(&rs) - expected).abs() < 1e-9);
        // D*'(u)/u ~ alpha/u near zero: the untruncated foreign import value diverges.
        let ex = MarketModel::<f64>::exponential_asymmetric(0.01, 2.0, 2.5).unwrap();
        assert!(truncation_tail(&ex).is_infinite());
    }

    #[test]
    fn out_of_box_rate_rejected() {
        let m = MarketModel::<f64>::rational_square();
        assert!(matches!(gain_domestic(&m, 1000.0, TariffPair::equal(0.5)), Err(Error::Domain { .. })));
    }
}
