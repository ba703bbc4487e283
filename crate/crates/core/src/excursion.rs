//! Return times, excursions out of a compact window, excursion peaks along
//! the diagonal flow, tail statistics and the exponent budget.

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::step_time;
use crate::ifs::{IfsSystem, SymbolWord};
use crate::lattice::{shortest_vector_basis, CompactWindow};
use crate::orbit::{diagonal_heights, walk_heights};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Walk,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub index: usize,
    pub start_step: usize,
    pub end_step: usize,
    pub length: usize,
    /// Upper bound for the continuous-time peak (diagonal only).
    pub peak: Option<f64>,
    /// Lipschitz correction already included in `peak`.
    pub peak_slack: f64,
    pub flavor: Flavor,
}

/// All `n ∈ [1, max_steps]` with `heights[n] ≤ L`; `heights[0]` is the start.
pub fn return_times(heights: &[f64], window: &CompactWindow, max_steps: usize) -> Vec<usize> {
    let last = max_steps.min(heights.len().saturating_sub(1));
    (1..=last).filter(|&n| window.contains_height(heights[n])).collect()
}

/// `σ⁰ = τ¹`, `σⁿ = τⁿ⁺¹ − τⁿ`.
pub fn excursions(returns: &[usize]) -> Result<Vec<ExcursionRecord>> {
    let mut out = Vec::with_capacity(returns.len());
    let mut prev = 0usize;
    for (i, &tau) in returns.iter().enumerate() {
        if tau <= prev && !(i == 0 && tau > 0) {
            return Err(Error::NonMonotone(i));
        }
        out.push(ExcursionRecord {
            index: i,
            start_step: prev,
            end_step: tau,
            length: tau - prev,
            peak: None,
            peak_slack: 0.0,
            flavor: Flavor::Walk,
        });
        prev = tau;
    }
    Ok(out)
}

/// `max(1, 1/d)`, the Lipschitz constant of `t ↦ l(a_t g)`.
pub fn height_lipschitz(d: usize) -> f64 {
    (1.0f64).max(1.0 / d as f64)
}

/// Excursions of `a_t u_x` sampled at `t_n = n t_1`, `t_1 = −d log κ/(d+1)`,
/// with peaks bounded on a grid refined `grid_refine` times.
pub fn diagonal_excursions(
    x: &[BigRational],
    kappa: f64,
    window: &CompactWindow,
    n_max: usize,
    grid_refine: usize,
) -> Result<Vec<ExcursionRecord>> {
    if grid_refine == 0 {
        return Err(Error::InvalidArgument("grid_refine must be at least 1".into()));
    }
    let d = x.len();
    let t1 = step_time(kappa, d);
    let total = n_max * grid_refine;
    let spacing = t1 / grid_refine as f64;
    let times: Vec<f64> = (0..=total).map(|k| k as f64 * spacing).collect();
    let grid = diagonal_heights(x, &times)?;
    let sampled: Vec<f64> = (0..=n_max).map(|n| grid[n * grid_refine]).collect();
    let returns = return_times(&sampled, window, n_max);
    let slack = spacing / 2.0 * height_lipschitz(d);
    let mut records = excursions(&returns)?;
    for r in &mut records {
        let lo = r.start_step * grid_refine;
        let hi = r.end_step * grid_refine;
        let max = grid[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        r.peak = Some(max + slack);
        r.peak_slack = slack;
        r.flavor = Flavor::Diagonal;
    }
    Ok(records)
}

/// `−σ d log κ/(d+1)² + Q`.
pub fn growth_bound(length: usize, kappa: f64, d: usize, q_const: f64) -> f64 {
    let df = d as f64;
    -(length as f64) * df * kappa.ln() / ((df + 1.0) * (df + 1.0)) + q_const
}

/// Records whose peak exceeds the growth bound plus slack.
pub fn growth_bound_check(records: &[ExcursionRecord], window: &CompactWindow, kappa: f64, d: usize) -> Vec<ExcursionRecord> {
    records
        .iter()
        .filter(|r| match r.peak {
            Some(peak) => peak > growth_bound(r.length, kappa, d, window.q_const) + r.peak_slack + 1e-6,
            None => false,
        })
        .cloned()
        .collect()
}

/// Largest `|l(h_{b_1^n}Γ) − l(a_{t_n} u_{π(b)}Γ)|` for `n ≤ word.len() − extra`,
/// where `π(b)` is truncated at the full word.
pub fn walk_diagonal_gap(sys: &IfsSystem, word: &SymbolWord, n: usize) -> Result<f64> {
    if word.len() < n {
        return Err(Error::InvalidArgument("word shorter than n".into()));
    }
    let walk = walk_heights(sys, &word.prefix(n))?;
    let x = crate::orbit::stream_point(sys, word)?;
    let t1 = step_time(sys.ratio(), sys.dimension());
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * t1).collect();
    let diag = diagonal_heights(&x, &times)?;
    Ok(walk.heights.iter().zip(&diag).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub thresholds: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub fitted_rate: f64,
    pub fitted_rate_se: f64,
    pub theta_hat: f64,
    pub log_theta_hat: f64,
    pub chebyshev_bound: Vec<f64>,
    pub m: usize,
    pub delta: f64,
    pub samples: usize,
    pub censored: usize,
    pub start_points: usize,
}

impl TailReport {
    /// Whether the fitted exponential rate is positive at 95% confidence.
    pub fn rate_significant(&self) -> bool {
        self.fitted_rate - 1.96 * self.fitted_rate_se > 0.0
    }

    /// Whether the empirical tail lies under the Chebyshev bound everywhere.
    pub fn dominated(&self) -> bool {
        self.empirical_tail
            .iter()
            .zip(&self.chebyshev_bound)
            .all(|(e, b)| *e <= b * (1.0 + 1e-12))
    }
}

const WALKS_PER_START: usize = 10;
const MAX_BURN_IN: usize = 30;

struct WalkSample {
    group: usize,
    first_return: Option<usize>,
    lengths: Vec<usize>,
    censored: bool,
}

fn log_mean_exp(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = v.iter().map(|x| (x - max).exp()).sum();
    Some(max + (s / v.len() as f64).ln())
}

/// Pooled excursion lengths of random walks started inside the window,
/// against the bound `e^{−(δ/m)s} θ̂`.
///
/// Walks come in groups of ten sharing a start point, reached by a random
/// burn-in from the identity that ends inside the window. `θ̂` is the larger
/// of the per-start means of `e^{(δ/m)τ¹}` and the pooled mean of
/// `e^{(δ/m)σ}`, so the bound is a Markov bound for the same sample.
pub fn tail_report(
    sys: &IfsSystem,
    window: &CompactWindow,
    walks: usize,
    steps: usize,
    seed: u64,
    m: usize,
    delta: f64,
) -> Result<TailReport> {
    if !(delta > 0.0) || m == 0 {
        return Err(Error::InvalidArgument("tail_report needs delta > 0 and m >= 1".into()));
    }
    if walks == 0 || steps == 0 {
        return Err(Error::NoData(window.level));
    }
    let groups = walks.div_ceil(WALKS_PER_START);
    let burn_ins: Vec<Option<SymbolWord>> = (0..groups)
        .into_par_iter()
        .map(|g| -> Result<Option<SymbolWord>> {
            let mut rng = seeds::task_rng(seed, g as u64);
            let b0 = rng.gen_range(0..=MAX_BURN_IN);
            let word = sys.random_word(b0 + 200, &mut rng);
            let h = walk_heights(sys, &word)?;
            Ok((b0..h.heights.len()).find(|&k| window.contains_height(h.heights[k])).map(|k| word.prefix(k)))
        })
        .collect::<Result<_>>()?;

    let samples: Vec<WalkSample> = (0..walks)
        .into_par_iter()
        .filter_map(|w| {
            let g = w / WALKS_PER_START;
            let prefix = burn_ins[g].as_ref()?;
            Some((w, g, prefix))
        })
        .map(|(w, g, prefix)| -> Result<WalkSample> {
            let mut rng = seeds::task_rng(seeds::derive_seed(seed, 1 << 32), w as u64);
            let word = prefix.concat(&sys.random_word(steps, &mut rng));
            let h = walk_heights(sys, &word)?;
            let rel = &h.heights[prefix.len()..];
            let returns = return_times(rel, window, steps);
            let records = excursions(&returns)?;
            Ok(WalkSample {
                group: g,
                first_return: returns.first().copied(),
                lengths: records.iter().map(|r| r.length).collect(),
                censored: returns.last().copied().unwrap_or(0) < steps,
            })
        })
        .collect::<Result<_>>()?;

    let rate = delta / m as f64;
    let pooled: Vec<usize> = samples.iter().flat_map(|s| s.lengths.iter().copied()).collect();
    if pooled.is_empty() {
        return Err(Error::NoData(window.level));
    }
    let censored = samples.iter().filter(|s| s.censored).count();
    let start_points = burn_ins.iter().filter(|b| b.is_some()).count();

    let mut log_theta = log_mean_exp(pooled.iter().map(|&s| rate * s as f64)).unwrap();
    for g in 0..groups {
        // walks that never return contribute τ = steps + 1 as a floor
        let taus = samples
            .iter()
            .filter(|s| s.group == g)
            .map(|s| rate * s.first_return.unwrap_or(steps + 1) as f64);
        if let Some(v) = log_mean_exp(taus) {
            log_theta = log_theta.max(v);
        }
    }

    let max_len = *pooled.iter().max().unwrap();
    let n = pooled.len() as f64;
    let mut counts = vec![0usize; max_len + 2];
    for &s in &pooled {
        counts[s] += 1;
    }
    let mut thresholds = Vec::with_capacity(max_len);
    let mut empirical_tail = Vec::with_capacity(max_len);
    let mut chebyshev_bound = Vec::with_capacity(max_len);
    let mut at_least = pooled.len();
    for s in 1..=max_len {
        thresholds.push(s as f64);
        empirical_tail.push(at_least as f64 / n);
        chebyshev_bound.push((log_theta - rate * s as f64).exp());
        at_least -= counts[s];
    }
    let (fitted_rate, fitted_rate_se) = fit_tail_rate(&thresholds, &empirical_tail, pooled.len());
    Ok(TailReport {
        thresholds,
        empirical_tail,
        fitted_rate,
        fitted_rate_se,
        theta_hat: log_theta.exp(),
        log_theta_hat: log_theta,
        chebyshev_bound,
        m,
        delta,
        samples: pooled.len(),
        censored,
        start_points,
    })
}

/// Slope of `−log P(σ ≥ s)` against `s` over thresholds backed by at least
/// ten samples, with its standard error.
fn fit_tail_rate(s: &[f64], tail: &[f64], n: usize) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = s
        .iter()
        .zip(tail)
        .filter(|(_, &p)| p * n as f64 >= 10.0)
        .map(|(&s, &p)| (s, -p.ln()))
        .collect();
    match linear_fit(&pts) {
        Some(fit) => (fit.slope, fit.slope_se),
        None => (f64::NAN, f64::INFINITY),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Ordinary least squares with classical standard errors.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<LinearFit> {
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let sigma2 = rss / (nf - 2.0);
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    Some(LinearFit { slope, intercept, slope_se, intercept_se })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftFit {
    pub a_hat: f64,
    pub a_ci: (f64, f64),
    pub b_hat: f64,
    pub b_ci: (f64, f64),
    pub m: usize,
    pub beta_exp: f64,
    pub samples: usize,
}

const DRIFT_INNER: usize = 32;
const DRIFT_MAX_HEIGHT: f64 = 5.0;

/// Affine fit of `Ê[f(g_{κ^m} u_x y)]` (over `x ~ μ_K`) against `f(y)` for
/// `f = Δ^{−β}`.
///
/// Test points are `y = u_z a_s` with `z` uniform in the unit cube and `s`
/// spread over `[0, 5]`, which puts `y` at height exactly `s`.
pub fn drift_estimate(sys: &IfsSystem, beta_exp: f64, m: usize, samples: usize, seed: u64) -> Result<DriftFit> {
    if !(beta_exp > 0.0) || m == 0 {
        return Err(Error::InvalidArgument("drift_estimate needs beta_exp > 0 and m >= 1".into()));
    }
    let d = sys.dimension();
    let t = m as f64 * step_time(sys.ratio(), d);
    let depth = sys.default_depth();
    let pts: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let mut rng = seeds::task_rng(seed, i as u64);
            let s = DRIFT_MAX_HEIGHT * i as f64 / (samples.max(2) - 1) as f64;
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let fy = (beta_exp * s).exp();
            let mut acc = 0.0;
            for _ in 0..DRIFT_INNER {
                let w = sys.random_word(depth, &mut rng);
                let x = sys.apply_word(&w, sys.base_point());
                // lattice of a_t u_{x+z} a_s: (q e^{-s-t}, e^{t/d}(e^{s/d} p + q e^{-s}(x+z)))
                let basis = drift_basis(&x, &z, s, t);
                let delta = shortest_vector_basis(&basis)?.0;
                acc += delta.powf(-beta_exp);
            }
            Ok((fy, acc / DRIFT_INNER as f64))
        })
        .collect::<Result<_>>()?;
    let first = pts.first().map(|p| p.0);
    if first.is_none() || pts.iter().all(|p| Some(p.0) == first) {
        return Err(Error::DegenerateSample("all f(y) values are equal".into()));
    }
    let fit = linear_fit(&pts).ok_or_else(|| Error::DegenerateSample("too few points for a fit".into()))?;
    Ok(DriftFit {
        a_hat: fit.slope,
        a_ci: (fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se),
        b_hat: fit.intercept,
        b_ci: (fit.intercept - 1.96 * fit.intercept_se, fit.intercept + 1.96 * fit.intercept_se),
        m,
        beta_exp,
        samples,
    })
}

fn drift_basis(x: &[f64], z: &[f64], s: f64, t: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let df = d as f64;
    let mut rows = Vec::with_capacity(d + 1);
    let mut first = vec![(-s - t).exp()];
    first.extend((0..d).map(|j| (t / df - s).exp() * (x[j] + z[j])));
    rows.push(first);
    for i in 0..d {
        let mut r = vec![0.0; d + 1];
        r[i + 1] = (t / df + s / df).exp();
        rows.push(r);
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    pub kappa: f64,
    pub d: usize,
    pub varpi: f64,
    pub log_cc: f64,
    pub eps: f64,
    pub rho: f64,
    pub eta: f64,
    pub m: usize,
    pub delta: f64,
    pub delta_range: f64,
    #[serde(rename = "D")]
    pub d_const: f64,
    pub gamma_max: f64,
    /// Smallest `m` with `D/m < (ε/2)·γ_max`.
    pub m_threshold: usize,
    /// `δ(d+1)²/(m d log κ)`.
    pub chain_lhs: f64,
    /// `−(1−ε) γ_max`.
    pub chain_rhs: f64,
    /// `chain_lhs ≤ chain_rhs`, checked only when `m ≥ m_threshold`.
    pub chain_holds: Option<bool>,
}

/// The `δ, m, ϱ, η, D` budget.
pub fn rate_budget(kappa: f64, d: usize, varpi: f64, log_cc: f64, eps: f64, m: usize) -> Result<RateBudget> {
    if !(eps > 0.0 && eps < 1.0) || m == 0 || !(varpi > 0.0) || d == 0 || !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidArgument("rate_budget needs eps in (0,1), m >= 1, varpi > 0, kappa in (0,1)".into()));
    }
    let df = d as f64;
    let lk = kappa.ln();
    let rho = 1.0 - eps / 2.0;
    let range = -(m as f64) * rho * varpi * lk / (df + 1.0) - log_cc;
    if !(range > 0.0) {
        return Err(Error::InfeasibleBudget(format!("delta range is empty for m = {m} (upper end {range})")));
    }
    let eta = (0.5f64).min(range / 2.0);
    let delta = range - eta;
    let d_const = (df + 1.0).powi(2) * (log_cc + 1.0) / (-df * lk);
    let gamma_max = varpi * (df + 1.0) / df;
    let m_threshold = (d_const / (eps / 2.0 * gamma_max)).floor() as usize + 1;
    let chain_lhs = delta * (df + 1.0).powi(2) / (m as f64 * df * lk);
    let chain_rhs = -(1.0 - eps) * gamma_max;
    let chain_holds = (m >= m_threshold).then_some(chain_lhs <= chain_rhs);
    Ok(RateBudget {
        kappa,
        d,
        varpi,
        log_cc,
        eps,
        rho,
        eta,
        m,
        delta,
        delta_range: range,
        d_const,
        gamma_max,
        m_threshold: m_threshold.max(1),
        chain_lhs,
        chain_rhs,
        chain_holds,
    })
}

/// The budget at `ε = 1/2`, `log C = 0` and the smallest admissible `m`;
/// supplies the default `δ` and `m` of [`tail_report`].
pub fn default_budget(kappa: f64, d: usize, varpi: f64) -> Result<RateBudget> {
    let probe = rate_budget(kappa, d, varpi, 0.0, 0.5, 1)?;
    rate_budget(kappa, d, varpi, 0.0, 0.5, probe.m_threshold)
}
