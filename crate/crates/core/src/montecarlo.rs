//! Random-commodity model: sampling price/demand vectors, the empirical
//! currency demands they induce, and expectation-form gains.
//!
//! Commodity `k` has prices `p_k` (domestic currency), `p*_k` (foreign
//! currency) and demands `d_k` (domestic), `d*_k` (foreign). With ratios
//! `r_k = p_k / p*_k`,
//!
//! ```text
//! D(x)  = sum p*_k d_k  1{r_k > x} / C_N,    C_N  = sum p*_k d_k
//! D*(x) = sum p_k  d*_k 1{r_k < x} / C*_N,   C*_N = sum p_k  d*_k
//! ```
//!
//! Sampling uses ChaCha20 with one stream per array, so every array is
//! reproducible from the seed alone and the four can be drawn in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{Family, MarketModel};
use crate::equilibrium::TariffPair;
use crate::error::{Error, Result};
use crate::gains::{GainMethod, GainReport};
use crate::roots::{self, Bracket};

/// Name recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha), stream per array: p=0 p_star=1 d=2 d_star=3";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Lognormal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    Constant { c: f64 },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law::Lognormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma >= 0.0,
            Law::Uniform { a, b } => a > 0.0 && b > a && b.is_finite(),
            Law::Constant { c } => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("law {self:?} does not have a strictly positive support")))
        }
    }

    fn draw(&self, n: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let bad = |e: &dyn std::fmt::Display| Error::InvalidParameter(e.to_string());
        let values: Vec<f64> = match *self {
            Law::Lognormal { mu, sigma } => {
                let law = LogNormal::new(mu, sigma).map_err(|e| bad(&e))?;
                (0..n).map(|_| law.sample(&mut rng)).collect()
            }
            Law::Uniform { a, b } => {
                let law = Uniform::new(a, b).map_err(|e| bad(&e))?;
                (0..n).map(|_| law.sample(&mut rng)).collect()
            }
            Law::Constant { c } => vec![c; n],
        };
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSample(format!("nonpositive or non-finite draw {v} from {self:?}")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: Law,
    pub p_star: Law,
    pub d: Law,
    pub d_star: Law,
    pub rng_seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSample("scenario needs at least one commodity".into()));
        }
        for law in [&self.p, &self.p_star, &self.d, &self.d_star] {
            law.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommoditySample {
    pub n: usize,
    pub p: Vec<f64>,
    pub p_star: Vec<f64>,
    pub d: Vec<f64>,
    pub d_star: Vec<f64>,
    pub c_n: f64,
    pub c_n_star: f64,
}

impl CommoditySample {
    /// Validates the arrays and computes the normalizing constants.
    ///
    /// Prices must be strictly positive. Demands may be zero (a commodity
    /// nobody in one nation buys) as long as both constants stay positive.
    pub fn new(p: Vec<f64>, p_star: Vec<f64>, d: Vec<f64>, d_star: Vec<f64>) -> Result<Self> {
        let n = p.len();
        if n == 0 || p_star.len() != n || d.len() != n || d_star.len() != n {
            return Err(Error::InvalidSample(format!(
                "arrays must share a nonzero length (p {}, p* {}, d {}, d* {})",
                n,
                p_star.len(),
                d.len(),
                d_star.len()
            )));
        }
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        let nonnegative = |v: &[f64]| v.iter().all(|x| *x >= 0.0 && x.is_finite());
        if !positive(&p) || !positive(&p_star) {
            return Err(Error::InvalidSample("prices must be positive and finite".into()));
        }
        if !nonnegative(&d) || !nonnegative(&d_star) {
            return Err(Error::InvalidSample("demands must be nonnegative and finite".into()));
        }
        let c_n: f64 = p_star.iter().zip(&d).map(|(a, b)| a * b).sum();
        let c_n_star: f64 = p.iter().zip(&d_star).map(|(a, b)| a * b).sum();
        if !(c_n > 0.0 && c_n_star > 0.0) {
            return Err(Error::InvalidSample("both normalizing constants must be positive".into()));
        }
        Ok(Self { n, p, p_star, d, d_star, c_n, c_n_star })
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.p.iter().zip(&self.p_star).map(|(a, b)| a / b).collect()
    }
}

pub fn sample_commodities(spec: &ScenarioSpec) -> Result<CommoditySample> {
    spec.validate()?;
    let laws = [spec.p, spec.p_star, spec.d, spec.d_star];
    let mut arrays = (0..4u64)
        .into_par_iter()
        .map(|stream| laws[stream as usize].draw(spec.n, spec.rng_seed, stream))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let mut next = || arrays.next().unwrap();
    CommoditySample::new(next(), next(), next(), next())
}

/// Empirical step-function demands of a sample, on the box `[1/M, M]`.
pub fn empirical_demands(sample: &CommoditySample, bound: f64) -> Result<MarketModel<f64>> {
    use crate::demand::StepFunction;
    let ratios = sample.ratios();
    let w_dom: Vec<f64> = sample.p_star.iter().zip(&sample.d).map(|(a, b)| a * b).collect();
    let w_for: Vec<f64> = sample.p.iter().zip(&sample.d_star).map(|(a, b)| a * b).collect();
    MarketModel::new(
        Family::EmpiricalStep(StepFunction::new(ratios.clone(), w_dom)?),
        Family::EmpiricalStep(StepFunction::new(ratios, w_for)?),
        bound,
    )
}

/// Mean and delta-method standard error of `sum(a)/sum(c) - sum(b)/sum(k)`.
fn ratio_difference(a: &[f64], c: &[f64], b: &[f64], k: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (ma, mc, mb, mk) = (mean(a), mean(c), mean(b), mean(k));
    let value = ma / mc - mb / mk;
    let psi: Vec<f64> =
        (0..a.len()).map(|i| a[i] / mc - ma * c[i] / (mc * mc) - b[i] / mk + mb * k[i] / (mk * mk)).collect();
    let m = mean(&psi);
    let var = psi.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (value, (var / n).sqrt())
}

/// Expectation-form gains on the ratio box `[1/M, M]`.
///
/// The domestic nation imports commodity `k` when `r_k > e/theta`, the
/// foreign nation when `r_k < theta* e`; ties import nowhere. Each value
/// term is normalized by the constant of the demand it comes from
/// (`d` terms by `C_N`, `d*` terms by `C*_N`), which makes these sums
/// coincide with the integral form applied to the empirical demands.
pub fn expectation_gain(sample: &CommoditySample, e: f64, t: TariffPair<f64>, bound: f64) -> Result<GainReport<f64>> {
    let lo = 1.0 / bound;
    if !(e >= lo && e <= bound) {
        return Err(Error::Domain { x: e, lo, hi: bound });
    }
    if !(t.theta >= lo && t.theta <= 1.0 && t.theta_star >= lo && t.theta_star <= 1.0) {
        return Err(Error::TariffOutOfBox { theta: t.theta, theta_star: t.theta_star, lo });
    }
    let ratios = sample.ratios();
    let a = e / t.theta;
    let b = t.theta_star * e;
    let dom_in = |r: f64| r > a && r <= bound;
    let for_in = |r: f64| r < b && r >= lo;
    let n = sample.n;
    let pick = |cond: &dyn Fn(f64) -> bool, v: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..n).map(|i| if cond(ratios[i]) { v(i) } else { 0.0 }).collect()
    };
    let c: Vec<f64> = (0..n).map(|i| sample.p_star[i] * sample.d[i]).collect();
    let k: Vec<f64> = (0..n).map(|i| sample.p[i] * sample.d_star[i]).collect();

    // G = E(p d; dom) / C_N - E(p d*; r < theta* e) / C*_N
    let g_a = pick(&dom_in, &|i| sample.p[i] * sample.d[i]);
    let g_b = pick(&|r| r < b, &|i| sample.p[i] * sample.d_star[i]);
    // G* = E(p* d*; for) / C*_N - E(p* d; r > e/theta) / C_N
    let f_a = pick(&for_in, &|i| sample.p_star[i] * sample.d_star[i]);
    let f_b = pick(&|r| r > a, &|i| sample.p_star[i] * sample.d[i]);

    let (gain_domestic, se_d) = ratio_difference(&g_a, &c, &g_b, &k);
    let (gain_foreign, se_f) = ratio_difference(&f_a, &k, &f_b, &c);
    let outside = |cond: &dyn Fn(f64) -> bool, v: &dyn Fn(usize) -> f64, norm: f64| {
        (0..n).filter(|&i| cond(ratios[i])).map(v).sum::<f64>() / norm
    };
    let truncation_error_bound = outside(&|r| r > bound.max(a), &|i| sample.p[i] * sample.d[i], sample.c_n)
        + outside(&|r| r < lo.min(b), &|i| sample.p_star[i] * sample.d_star[i], sample.c_n_star);
    Ok(GainReport {
        gain_domestic,
        gain_foreign,
        method: GainMethod::ExpectationSum,
        truncation_error_bound,
        standard_error: Some((se_d, se_f)),
    })
}

/// Sample matched to an analytic model by importance sampling.
///
/// Ratios are drawn from the mixture `q = (f_D + f_D*)/2` of the two demand
/// densities `f_D = -D'`, `f_D* = D*'`; with `p* = 1`, `p = r`,
/// `d = f_D(r)/q(r)` and `d* = f_D*(r)/(r q(r))` the empirical demands are
/// self-normalized estimates of `D` and `D*`.
pub fn matched_sample(model: &MarketModel<f64>, n: usize, seed: u64) -> Result<CommoditySample> {
    if n == 0 {
        return Err(Error::InvalidSample("matched sample needs n >= 1".into()));
    }
    if model.domestic.family.is_empirical() || model.foreign.family.is_empirical() {
        return Err(Error::InvalidParameter("matched sampling needs analytic demand families".into()));
    }
    let (dom, forg) = (&model.domestic, &model.foreign);
    let cdf = |s: f64| -> Option<f64> {
        let r = s.exp();
        Some(0.5 * (1.0 - dom.eval(r).ok()?) + 0.5 * forg.eval(r).ok()?)
    };
    let (s_lo, s_hi) = (-60.0, 60.0);
    let (c_lo, c_hi) = (cdf(s_lo).unwrap_or(0.0), cdf(s_hi).unwrap_or(1.0));

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let us: Vec<f64> = (0..n).map(|_| unit.sample(&mut rng)).collect();
    let ratios: Vec<f64> = us
        .par_iter()
        .map(|&u| {
            let target = c_lo + u * (c_hi - c_lo);
            let g = |s: f64| cdf(s).map(|c| c - target);
            let bracket = Bracket { lo: s_lo, hi: s_hi, f_lo: c_lo - target, f_hi: c_hi - target };
            roots::bisect(g, bracket, 1e-13).exp()
        })
        .collect();

    let density = |f: &crate::demand::DemandFunction<f64>, r: f64, sign: f64| -> f64 {
        match f.eval_deriv(r, 1) {
            Ok(v) => (sign * v).max(0.0),
            Err(Error::Kink { left, right, .. }) => (sign * 0.5 * (left + right)).max(0.0),
            Err(_) => 0.0,
        }
    };
    let mut p = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut d_star = Vec::with_capacity(n);
    for &r in &ratios {
        let fd = density(dom, r, -1.0);
        let fs = density(forg, r, 1.0);
        let q = 0.5 * (fd + fs);
        let (wd, ws) = if q > 0.0 { (fd / q, fs / q) } else { (0.0, 0.0) };
        p.push(r);
        d.push(wd);
        d_star.push(ws / r);
    }
    CommoditySample::new(p, vec![1.0; n], d, d_star)
}

/// Largest absolute difference between two demand functions on a log grid
/// over `[lo, hi]`, checking both one-sided limits at every grid point.
pub fn sup_distance(
    a: &crate::demand::DemandFunction<f64>,
    b: &crate::demand::DemandFunction<f64>,
    lo: f64,
    hi: f64,
    grid_n: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in roots::log_grid(lo, hi, grid_n) {
        for y in [x * (1.0 - 1e-12), x, x * (1.0 + 1e-12)] {
            worst = worst.max((a.eval(y)? - b.eval(y)?).abs());
        }
    }
    Ok(worst)
}

/// Largest gap between an empirical step demand and an analytic one,
/// evaluated at every breakpoint from both sides (where the supremum of a
/// step-minus-monotone difference is attained).
pub fn step_sup_distance(model: &MarketModel<f64>, reference: &MarketModel<f64>) -> Result<(f64, f64)> {
    let mut out = [0.0f64; 2];
    for (slot, (emp, ana)) in
        [(&model.domestic, &reference.domestic), (&model.foreign, &reference.foreign)].into_iter().enumerate()
    {
        let steps = emp
            .family
            .step_function()
            .ok_or_else(|| Error::InvalidParameter("first model must be empirical".into()))?;
        let mut worst: f64 = 0.0;
        for &r in steps.breakpoints() {
            let exact = ana.eval(r)?;
            for y in [r, r * (1.0 + 1e-12), r * (1.0 - 1e-12)] {
                let gap = (emp.eval(y)? - exact).abs();
                worst = worst.max(gap);
            }
        }
        out[slot] = worst;
    }
    Ok((out[0], out[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(n: usize) -> ScenarioSpec {
        let one = Law::Constant { c: 1.0 };
        ScenarioSpec { n, p: one, p_star: one, d: one, d_star: one, rng_seed: 1 }
    }

    #[test]
    fn constant_laws() {
        let s = sample_commodities(&constant(5)).unwrap();
        assert!(s.p.iter().chain(&s.p_star).chain(&s.d).chain(&s.d_star).all(|v| *v == 1.0));
        assert_eq!((s.c_n, s.c_n_star), (5.0, 5.0));
    }

    #[test]
    fn empty_scenario_rejected() {
        assert!(matches!(sample_commodities(&constant(0)), Err(Error::InvalidSample(_))));
        let mut bad = constant(3);
        bad.d = Law::Uniform { a: 0.0, b: 1.0 };
        assert!(sample_commodities(&bad).is_err());
    }

    #[test]
    fn deterministic_streams() {
        let spec = ScenarioSpec {
            n: 1000,
            p: Law::Lognormal { mu: 0.0, sigma: 0.5 },
            p_star: Law::Lognormal { mu: 0.0, sigma: 0.5 },
            d: Law::Uniform { a: 0.5, b: 1.5 },
            d_star: Law::Uniform { a: 0.5, b: 1.5 },
            rng_seed: 42,
        };
        let a = sample_commodities(&spec).unwrap();
        let b = sample_commodities(&spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.p, a.p_star);
        let other = sample_commodities(&ScenarioSpec { rng_seed: 43, ..spec }).unwrap();
        assert_ne!(a.p, other.p);
    }

    #[test]
    fn constant_sample_gains() {
        // r = 2; C_N = p* d = 1, C*_N = p d* = 2.
        let s = CommoditySample::new(vec![2.0], vec![1.0], vec![1.0], vec![1.0]).unwrap();
        let g = expectation_gain(&s, 1.0, TariffPair::equal(1.0), 100.0).unwrap();
        assert_eq!(g.gain_domestic, 2.0);
        assert_eq!(g.gain_foreign, -1.0);
    }

    #[test]
    fn empty_trade() {
        let s = CommoditySample::new(vec![2.0], vec![1.0], vec![1.0], vec![1.0]).unwrap();
        // e / theta = 2 equals the ratio, theta* e = 1 lies below it.
        let g = expectation_gain(&s, 1.0, TariffPair::new(0.5, 1.0), 100.0).unwrap();
        assert_eq!((g.gain_domestic, g.gain_foreign), (0.0, 0.0));
    }

    #[test]
    fn empirical_boundary_values() {
        let spec = ScenarioSpec {
            n: 500,
            p: Law::Lognormal { mu: 0.0, sigma: 1.0 },
            p_star: Law::Constant { c: 1.0 },
            d: Law::Uniform { a: 0.1, b: 2.0 },
            d_star: Law::Uniform { a: 0.1, b: 2.0 },
            rng_seed: 7,
        };
        let s = sample_commodities(&spec).unwrap();
        let m = empirical_demands(&s, 100.0).unwrap();
        assert_eq!(m.domestic.eval(0.0).unwrap(), 1.0);
        assert_eq!(m.foreign.eval(0.0).unwrap(), 0.0);
        let top = s.ratios().iter().cloned().fold(0.0, f64::max);
        assert_eq!(m.domestic.eval(top * 1.01).unwrap(), 0.0);
        assert!((m.foreign.eval(top * 1.01).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_law_single_step() {
        let mut spec = constant(10);
        spec.p = Law::Constant { c: 3.0 };
        let m = empirical_demands(&sample_commodities(&spec).unwrap(), 100.0).unwrap();
        let steps = m.domestic.family.step_function().unwrap();
        assert_eq!(steps.breakpoints(), &[3.0]);
        assert_eq!(m.domestic.eval(3.0).unwrap(), 0.0);
        assert_eq!(m.domestic.eval(2.999).unwrap(), 1.0);
    }

    #[test]
    fn expectation_gain_matches_step_quadrature() {
        let spec = ScenarioSpec {
            n: 2000,
            p: Law::Lognormal { mu: 0.0, sigma: 0.7 },
            p_star: Law::Lognormal { mu: 0.0, sigma: 0.3 },
            d: Law::Uniform { a: 0.2, b: 1.0 },
            d_star: Law::Uniform { a: 0.2, b: 1.0 },
            rng_seed: 11,
        };
        let s = sample_commodities(&spec).unwrap();
        let m = empirical_demands(&s, 100.0).unwrap();
        for (e, th, ts) in [(1.0, 0.5, 0.5), (0.8, 0.9, 0.3), (1.3, 0.2, 0.7)] {
            let t = TariffPair::new(th, ts);
            let g = expectation_gain(&s, e, t, 100.0).unwrap();
            let gd = crate::gains::gain_domestic(&m, e, t).unwrap();
            let gf = crate::gains::gain_foreign(&m, e, t).unwrap();
            assert!((g.gain_domestic - gd).abs() < 1e-12, "{} vs {gd}", g.gain_domestic);
            assert!((g.gain_foreign - gf).abs() < 1e-12, "{} vs {gf}", g.gain_foreign);
        }
    }

    #[test]
    fn matched_sample_tracks_rational_square() {
        let model = MarketModel::<f64>::rational_square();
        let s = matched_sample(&model, 20_000, 3).unwrap();
        let emp = empirical_demands(&s, 100.0).unwrap();
        let (dd, df) = step_sup_distance(&emp, &model).unwrap();
        assert!(dd < 0.03 && df < 0.03, "{dd} {df}");
    }
}
