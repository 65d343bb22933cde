mod common;

use common::cfg;
use tariff_nash::equilibrium::solve_rate;
use tariff_nash::gains::{gain_domestic, gain_foreign};
use tariff_nash::nash::{
    best_response, best_response_iteration, foc_residuals, nash_candidates, solve_exponential_family, solve_nash,
    solve_symmetric,
};
use tariff_nash::{EquilibriumTriple, MarketModel, Side, SolverConfig, TariffPair};

fn exponential() -> MarketModel<f64> {
    MarketModel::exponential_asymmetric(0.01, 2.0, 2.5).unwrap()
}

fn examples() -> Vec<(&'static str, MarketModel<f64>)> {
    vec![
        ("rational_square", MarketModel::rational_square()),
        ("clipped_linear_0.5", MarketModel::clipped_linear(0.5).unwrap()),
        ("exponential", exponential()),
    ]
}

fn own_gain(model: &MarketModel<f64>, side: Side, own: f64, other: f64) -> f64 {
    let t = match side {
        Side::Domestic => TariffPair::new(own, other),
        Side::Foreign => TariffPair::new(other, own),
    };
    let c = SolverConfig { tol_root: 1e-14, ..cfg() };
    let e = solve_rate(model, t, &c).unwrap().rate_e;
    match side {
        Side::Domestic => gain_domestic(model, e, t).unwrap(),
        Side::Foreign => gain_foreign(model, e, t).unwrap(),
    }
}

#[test]
fn stored_residuals_are_reproducible() {
    for (name, m) in examples() {
        let n = solve_nash(&m, &cfg()).unwrap();
        assert_eq!(foc_residuals(&m, n.e_hat, n.tariffs()).unwrap(), n.foc_residuals, "{name}");
        assert!(n.is_accepted(&cfg()), "{name}: {n:?}");
    }
}

#[test]
fn fast_paths_agree_with_newton() {
    for alpha in [0.25, 0.5, 0.8] {
        let m = MarketModel::clipped_linear(alpha).unwrap();
        let a = solve_symmetric(&m, &cfg()).unwrap();
        let b = solve_nash(&m, &cfg()).unwrap();
        for (x, y) in [(a.e_hat, b.e_hat), (a.theta_hat, b.theta_hat), (a.theta_star_hat, b.theta_star_hat)] {
            assert!((x - y).abs() < 1e-6, "alpha {alpha}: {a:?} vs {b:?}");
        }
    }
    let a = solve_exponential_family(0.01, 2.0, 2.5, &cfg()).unwrap();
    let b = solve_nash(&exponential(), &cfg()).unwrap();
    for (x, y) in [(a.e_hat, b.e_hat), (a.theta_hat, b.theta_hat), (a.theta_star_hat, b.theta_star_hat)] {
        assert!((x - y).abs() < 1e-6, "{a:?} vs {b:?}");
    }
}

#[test]
fn candidates_are_ranked_and_distinct() {
    let m = exponential();
    let all = nash_candidates(&m, &cfg()).unwrap();
    assert!(!all.is_empty());
    assert_eq!(all[0].soc_pass, (true, true));
    for w in all.windows(2) {
        let d = (w[0].theta_hat - w[1].theta_hat).abs() + (w[0].theta_star_hat - w[1].theta_star_hat).abs();
        assert!(d > 1e-7);
    }
}

#[test]
fn best_responses_at_example_points() {
    let rs = MarketModel::rational_square();
    let br = best_response(&rs, Side::Domestic, 1.0 / 3.0, &cfg()).unwrap();
    assert!((br - 1.0 / 3.0).abs() < 1e-4, "{br}");
    let ex = exponential();
    let br = best_response(&ex, Side::Foreign, 0.54, &cfg()).unwrap();
    assert!((br - 0.73).abs() < 5e-3, "{br}");
    let br = best_response(&ex, Side::Domestic, 0.73, &cfg()).unwrap();
    assert!((br - 0.54).abs() < 5e-3, "{br}");
}

#[test]
fn best_response_rejects_out_of_box_opponent() {
    let rs = MarketModel::rational_square();
    assert!(best_response(&rs, Side::Domestic, 1.5, &cfg()).is_err());
    assert!(best_response(&rs, Side::Foreign, 0.001, &cfg()).is_err());
}

#[test]
fn iteration_from_upper_start() {
    let rs = MarketModel::rational_square();
    let run = best_response_iteration(&rs, TariffPair::equal(0.9), &cfg()).unwrap();
    let t = run.triple;
    assert!((t.e_hat - 1.0).abs() < 1e-3 && (t.theta_hat - 1.0 / 3.0).abs() < 1e-3);
    assert!((t.theta_star_hat - 1.0 / 3.0).abs() < 1e-3);
    assert_eq!(run.trajectory.len(), run.rounds + 1);

    let run = best_response_iteration(&exponential(), TariffPair::equal(0.9), &cfg()).unwrap();
    let t = run.triple;
    for (x, y) in [(t.e_hat, 0.81), (t.theta_hat, 0.54), (t.theta_star_hat, 0.73)] {
        assert!((x - y).abs() < 5e-3, "{t:?}");
    }
}

#[test]
fn iteration_started_at_nash_stops_after_one_round() {
    for (name, m) in examples() {
        let n = solve_nash(&m, &cfg()).unwrap();
        let run = best_response_iteration(&m, n.tariffs(), &cfg()).unwrap();
        assert_eq!(run.rounds, 1, "{name}");
        assert!((run.triple.theta_hat - n.theta_hat).abs() < 1e-6, "{name}");
        assert!((run.triple.theta_star_hat - n.theta_star_hat).abs() < 1e-6, "{name}");
    }
}

#[test]
fn iteration_reports_trajectory_when_out_of_rounds() {
    let c = SolverConfig { max_best_response_rounds: 1, ..cfg() };
    match best_response_iteration(&exponential(), TariffPair::equal(0.9), &c) {
        Err(tariff_nash::Error::NonConvergent { rounds, trajectory }) => {
            assert_eq!(rounds, 1);
            assert_eq!(trajectory.len(), 2);
            assert_eq!(trajectory[0], (0.9, 0.9));
        }
        other => panic!("expected NonConvergent, got {other:?}"),
    }
}

/// Each nation's gain at its Nash tariff beats 40 perturbed own tariffs.
#[test]
fn nash_tariffs_are_local_maxima() {
    for (name, m) in examples() {
        let n = solve_nash(&m, &cfg()).unwrap();
        let lo = m.lower_bound();
        for (side, own, other) in
            [(Side::Domestic, n.theta_hat, n.theta_star_hat), (Side::Foreign, n.theta_star_hat, n.theta_hat)]
        {
            let best = own_gain(&m, side, own, other);
            for k in 1..=20 {
                for sign in [-1.0, 1.0] {
                    let x = (own + sign * 0.01 * k as f64).clamp(lo, 1.0);
                    let g = own_gain(&m, side, x, other);
                    assert!(g <= best + 1e-12, "{name} {side:?}: gain {g} at {x} beats {best} at {own}");
                }
            }
        }
    }
}

/// The second-order flags agree with central second differences of each
/// nation's gain in its own tariff.
#[test]
fn second_order_flags_match_gain_curvature() {
    let h = 1e-3;
    for (name, m) in examples() {
        let n: EquilibriumTriple<f64> = solve_nash(&m, &cfg()).unwrap();
        let curv = |side: Side, own: f64, other: f64| {
            (own_gain(&m, side, own + h, other) - 2.0 * own_gain(&m, side, own, other)
                + own_gain(&m, side, own - h, other))
                / (h * h)
        };
        let c_dom = curv(Side::Domestic, n.theta_hat, n.theta_star_hat);
        let c_for = curv(Side::Foreign, n.theta_star_hat, n.theta_hat);
        assert!(c_dom < 0.0 && c_for < 0.0, "{name}: curvatures {c_dom} {c_for}");
        assert_eq!(n.soc_pass, (true, true), "{name}");
    }
}

#[test]
fn single_precision_pipeline() {
    let m = MarketModel::<f32>::exponential_asymmetric(0.01, 2.0, 2.5).unwrap();
    let c = SolverConfig::<f32>::default();
    let n = solve_nash(&m, &c).unwrap();
    assert!((n.e_hat - 0.8096561).abs() < 1e-3, "{n:?}");
    assert!((n.theta_hat - 0.5424139).abs() < 1e-3);
    assert!((n.theta_star_hat - 0.7320275).abs() < 1e-3);
    let lin = MarketModel::<f32>::clipped_linear(0.5).unwrap();
    let s = solve_symmetric(&lin, &c).unwrap();
    assert!((s.theta_hat - 2.0 / 3.0).abs() < 1e-5);
}
