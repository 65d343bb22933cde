//! Invariant checks shared by the property tests and the acceptance run.
#![allow(dead_code)]

use tariff_nash::equilibrium::{currency_balance, rate_sensitivities, reciprocal_rate_check, solve_rate};
use tariff_nash::gains::{self, symmetry_gain_check};
use tariff_nash::nash::solve_nash;
use tariff_nash::{MarketModel, SolverConfig, TariffPair};

pub type Check = Result<(), String>;

pub fn cfg() -> SolverConfig<f64> {
    SolverConfig::default()
}

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// D nonincreasing from 1, D* nondecreasing from 0, both within [0, 1].
pub fn demand_shape(model: &MarketModel<f64>, probes: &[f64]) -> Check {
    let (dom, fgn) = model.check_monotone(400).map_err(|e| e.to_string())?;
    ensure(dom.pass && fgn.pass, || format!("monotonicity violated: {dom:?} {fgn:?}"))?;
    ensure(model.domestic.eval(0.0).unwrap() == 1.0, || "D(0) != 1".into())?;
    ensure(model.foreign.eval(0.0).unwrap() == 0.0, || "D*(0) != 0".into())?;
    for &x in probes {
        let d = model.domestic.eval(x).map_err(|e| e.to_string())?;
        let s = model.foreign.eval(x).map_err(|e| e.to_string())?;
        ensure((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&s), || format!("out of [0,1] at {x}: {d} {s}"))?;
    }
    Ok(())
}

/// The solved rate lies in the box and balances currency demand.
pub fn balance_residual(model: &MarketModel<f64>, t: TariffPair<f64>) -> Check {
    let c = cfg();
    let sol = solve_rate(model, t, &c).map_err(|e| e.to_string())?;
    let e = sol.rate_e;
    ensure(e >= model.lower_bound() && e <= model.bound(), || format!("rate {e} outside box"))?;
    let r = currency_balance(model, e, t).map_err(|er| er.to_string())?;
    // bisection stops within tol_root of the root; the slope bounds the residual
    let h = c.tol_root;
    let slope = ((currency_balance(model, (e + h).min(model.bound()), t).unwrap()
        - currency_balance(model, (e - h).max(model.lower_bound()), t).unwrap())
        / (2.0 * h))
        .abs();
    ensure(r.abs() <= (slope + 1.0) * 2.0 * c.tol_root, || format!("balance residual {r:e} at e = {e}"))
}

pub fn symmetric_unit_rate(model: &MarketModel<f64>, theta: f64) -> Check {
    let e = solve_rate(model, TariffPair::equal(theta), &cfg()).map_err(|e| e.to_string())?.rate_e;
    ensure((e - 1.0).abs() <= 1e-9, || format!("e({theta}, {theta}) = {e}"))
}

pub fn reciprocal_product(model: &MarketModel<f64>, t: TariffPair<f64>) -> Check {
    let r = reciprocal_rate_check(model, t, &cfg()).map_err(|e| e.to_string())?;
    ensure(r.product_defect <= 1e-8, || format!("e * e_swapped - 1 = {:e} at {t:?}", r.product_defect))
}

pub fn gain_symmetry(model: &MarketModel<f64>, t: TariffPair<f64>) -> Check {
    let r = symmetry_gain_check(model, t, &cfg()).map_err(|e| e.to_string())?;
    ensure(r.difference <= 1e-8, || format!("gain symmetry defect {:e} at {t:?}", r.difference))
}

/// For symmetric models the Newton solution has equal tariffs and unit rate.
pub fn symmetric_nash(model: &MarketModel<f64>) -> Check {
    let n = solve_nash(model, &cfg()).map_err(|e| e.to_string())?;
    ensure((n.theta_hat - n.theta_star_hat).abs() <= 1e-6 && (n.e_hat - 1.0).abs() <= 1e-6, || {
        format!("asymmetric Nash point on symmetric model: {n:?}")
    })
}

pub fn by_parts_agreement(model: &MarketModel<f64>, t: TariffPair<f64>) -> Check {
    let e = solve_rate(model, t, &cfg()).map_err(|e| e.to_string())?.rate_e;
    let g = gains::gain_domestic(model, e, t).map_err(|e| e.to_string())?;
    let gp = gains::gain_domestic_by_parts(model, e, t).map_err(|e| e.to_string())?;
    let f = gains::gain_foreign(model, e, t).map_err(|e| e.to_string())?;
    let fp = gains::gain_foreign_by_parts(model, e, t).map_err(|e| e.to_string())?;
    ensure((g - gp).abs() <= 1e-9 && (f - fp).abs() <= 1e-9, || {
        format!("integration by parts mismatch at {t:?}: G {g} vs {gp}, G* {f} vs {fp}")
    })
}

/// Closed-form rate sensitivities against central differences of the solved rate.
pub fn sensitivities_match_differences(model: &MarketModel<f64>, t: TariffPair<f64>, rel: f64) -> Check {
    let c = SolverConfig { tol_root: 1e-14, ..cfg() };
    let rate = |t: TariffPair<f64>| solve_rate(model, t, &c).map(|s| s.rate_e).map_err(|e| e.to_string());
    let e = rate(t)?;
    let s = rate_sensitivities(model, e, t).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let fd_theta = (rate(TariffPair::new(t.theta + h, t.theta_star))?
        - rate(TariffPair::new(t.theta - h, t.theta_star))?)
        / (2.0 * h);
    let fd_star = (rate(TariffPair::new(t.theta, t.theta_star + h))?
        - rate(TariffPair::new(t.theta, t.theta_star - h))?)
        / (2.0 * h);
    let close = |a: f64, b: f64| (a - b).abs() <= rel * b.abs().max(1e-3);
    ensure(close(s.de_dtheta, fd_theta) && close(s.de_dtheta_star, fd_star), || {
        format!(
            "sensitivities at {t:?}: ({}, {}) vs differences ({fd_theta}, {fd_star})",
            s.de_dtheta, s.de_dtheta_star
        )
    })
}
