//! The correspondence between an approximation function `ψ` and a rate
//! function `r`, given by `ψ(e^{t−r(t)}) = e^{−t/d − r(t)}`, and the series
//! classifications it transports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BISECT_TOL: f64 = 1e-13;
const MAX_DOUBLINGS: usize = 200;
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PsiFamily {
    /// `c x^{-a} (log(e + x))^{-b}`.
    PowerLog { c: f64, a: f64, b: f64 },
    /// Log-log piecewise-linear through `(x, ψ(x))` nodes, extended past the
    /// last node along the last segment.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxFunction {
    #[serde(flatten)]
    pub family: PsiFamily,
    pub x0: f64,
}

impl ApproxFunction {
    pub fn power_log(c: f64, a: f64, b: f64, x0: f64) -> Result<Self> {
        let f = ApproxFunction { family: PsiFamily::PowerLog { c, a, b }, x0 };
        f.validate()?;
        Ok(f)
    }

    /// `c x^{-a}` on `[1, ∞)`.
    pub fn power(c: f64, a: f64) -> Result<Self> {
        Self::power_log(c, a, 0.0, 1.0)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let x0 = points.first().map(|p| p.0).unwrap_or(f64::NAN);
        let f = ApproxFunction { family: PsiFamily::Tabulated { points }, x0 };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0) || !self.x0.is_finite() {
            return Err(Error::InvalidPsi(format!("domain start {} must be positive", self.x0)));
        }
        match &self.family {
            PsiFamily::PowerLog { c, a, b } => {
                if !(*c > 0.0) || !(*a >= 0.0) || !(*b >= 0.0) || !(c.is_finite() && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidPsi("power_log needs c > 0, a >= 0, b >= 0".into()));
                }
            }
            PsiFamily::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidPsi("tabulated psi needs at least two nodes".into()));
                }
                for (i, w) in points.windows(2).enumerate() {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidPsi(format!("nodes not strictly increasing at {}", i + 1)));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::InvalidPsi(format!("psi increases at node {}", i + 1)));
                    }
                }
                if points.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite())) {
                    return Err(Error::InvalidPsi("nodes must be positive and finite".into()));
                }
                if (points[0].0 - self.x0).abs() > 0.0 {
                    return Err(Error::InvalidPsi("tabulated psi starts at its first node".into()));
                }
            }
        }
        Ok(())
    }

    /// `log ψ(e^u)`.
    pub fn log_eval(&self, u: f64) -> Result<f64> {
        if u < self.x0.ln() - 1e-15 * self.x0.ln().abs().max(1.0) {
            return Err(Error::OutOfDomain { x: u.exp(), start: self.x0 });
        }
        Ok(self.log_eval_unchecked(u))
    }

    fn log_eval_unchecked(&self, u: f64) -> f64 {
        match &self.family {
            PsiFamily::PowerLog { c, a, b } => {
                let mut v = c.ln() - a * u;
                if *b != 0.0 {
                    v -= b * log_log_e_plus(u);
                }
                v
            }
            PsiFamily::Tabulated { points } => {
                let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
                let k = match lx.iter().rposition(|&v| v <= u) {
                    Some(k) => k.min(points.len() - 2),
                    None => 0,
                };
                let (x1, x2) = (lx[k], lx[k + 1]);
                let (y1, y2) = (points[k].1.ln(), points[k + 1].1.ln());
                y1 + (y2 - y1) * (u - x1) / (x2 - x1)
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= self.x0) {
            return Err(Error::OutOfDomain { x, start: self.x0 });
        }
        Ok(self.log_eval_unchecked(x.ln()).exp())
    }

    /// `ψ(x)` with `ψ` continued as the constant `ψ(x₀)` left of `x₀`.
    fn log_eval_continued(&self, u: f64) -> f64 {
        self.log_eval_unchecked(u.max(self.x0.ln()))
    }
}

/// `log log(e + e^u)` without overflow for large `u`.
fn log_log_e_plus(u: f64) -> f64 {
    let inner = if u > 30.0 { u + (1.0 + std::f64::consts::E * (-u).exp()).ln() } else { (std::f64::consts::E + u.exp()).ln() };
    inner.ln()
}

/// `t₀ = d/(d+1) log x₀ − log ψ(x₀)/(d+1)`.
pub fn t0_of(psi: &ApproxFunction, d: usize) -> f64 {
    let df = d as f64;
    let lx = psi.x0.ln();
    df / (df + 1.0) * lx - psi.log_eval_unchecked(lx) / (df + 1.0)
}

/// The root `r` of `ψ(e^{t−r}) = e^{−t/d−r}` for `t ≥ t₀`.
///
/// `G(r) = log ψ(e^{t−r}) + t/d + r` is strictly increasing, so the root is
/// bracketed below by stepping down geometrically and refined by bisection.
/// For `d ≥ 2` the root at times just after `t₀` can need `e^{t−r} < x₀`; there
/// `ψ` is continued as the constant `ψ(x₀)`.
pub fn r_from_psi(psi: &ApproxFunction, d: usize, t: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    let t0 = t0_of(psi, d);
    if t < t0 - 1e-12 * t0.abs().max(1.0) {
        return Err(Error::OutOfDomain { x: t, start: t0 });
    }
    let df = d as f64;
    let g = |r: f64| psi.log_eval_continued(t - r) + t / df + r;
    let hi = t - psi.x0.ln();
    let g_hi = g(hi);
    if g_hi < 0.0 {
        // root lies where ψ is continued as a constant
        return Ok(-t / df - psi.log_eval_unchecked(psi.x0.ln()));
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    let mut width = t.abs() + 1.0;
    let mut lo = hi - width;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        let v = g(lo);
        if !v.is_finite() {
            break;
        }
        if v < 0.0 {
            found = true;
            break;
        }
        width *= 2.0;
        lo = hi - width;
    }
    if !found {
        return Err(Error::InvalidPsi(format!("could not bracket r at t = {t}")));
    }
    let mut a = lo;
    let mut b = hi;
    while b - a > BISECT_TOL * b.abs().max(1.0) * 0.5 && b - a > BISECT_TOL {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Closed form for `ψ(x) = c x^{-a}`: `r = (a − 1/d) t/(1+a) − log c/(1+a)`.
pub fn r_closed_form(c: f64, a: f64, d: usize, t: f64) -> f64 {
    let df = d as f64;
    (a - 1.0 / df) * t / (1.0 + a) - c.ln() / (1.0 + a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateKind {
    /// `slope · t + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `coef · log(1 + t)`.
    Log { coef: f64 },
    /// Piecewise linear through nodes, extended along the last segment.
    Nodes { t: Vec<f64>, r: Vec<f64> },
    /// Evaluated from `ψ` by root finding.
    Psi { psi: ApproxFunction, d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub t_start: f64,
    #[serde(flatten)]
    pub kind: RateKind,
}

impl RateFunction {
    pub fn affine(slope: f64, intercept: f64, t_start: f64) -> Self {
        RateFunction { t_start, kind: RateKind::Affine { slope, intercept } }
    }

    pub fn log(coef: f64) -> Self {
        RateFunction { t_start: 0.0, kind: RateKind::Log { coef } }
    }

    pub fn nodes(t: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if t.len() != r.len() || t.len() < 2 {
            return Err(Error::InvalidArgument("rate nodes need matching lengths of at least 2".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("rate node times must increase strictly".into()));
        }
        Ok(RateFunction { t_start: t[0], kind: RateKind::Nodes { t, r } })
    }

    pub fn from_psi(psi: &ApproxFunction, d: usize) -> Self {
        RateFunction { t_start: t0_of(psi, d), kind: RateKind::Psi { psi: psi.clone(), d } }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < self.t_start - 1e-12 * self.t_start.abs().max(1.0) {
            return Err(Error::OutOfDomain { x: t, start: self.t_start });
        }
        Ok(match &self.kind {
            RateKind::Affine { slope, intercept } => slope * t + intercept,
            RateKind::Log { coef } => coef * (1.0 + t).ln(),
            RateKind::Nodes { t: ts, r } => {
                let k = ts.iter().rposition(|&v| v <= t).unwrap_or(0).min(ts.len() - 2);
                r[k] + (r[k + 1] - r[k]) * (t - ts[k]) / (ts[k + 1] - ts[k])
            }
            RateKind::Psi { psi, d } => r_from_psi(psi, *d, t)?,
        })
    }

    /// Checks that `t − r` increases strictly and `t/d + r` does not decrease
    /// over consecutive sample times.
    pub fn check_monotonicity(&self, d: usize, times: &[f64]) -> Result<()> {
        let df = d as f64;
        let vals: Vec<f64> = times.iter().map(|&t| self.eval(t)).collect::<Result<_>>()?;
        for i in 1..times.len() {
            let (t1, t2) = (times[i - 1], times[i]);
            let tol = 1e-9 * (t2.abs() + 1.0);
            if !(t2 - vals[i] > t1 - vals[i - 1]) {
                return Err(Error::InvalidArgument(format!("t - r(t) fails to increase at t = {t2}")));
            }
            if t2 / df + vals[i] < t1 / df + vals[i - 1] - tol {
                return Err(Error::InvalidArgument(format!("t/d + r(t) decreases at t = {t2}")));
            }
        }
        Ok(())
    }
}

/// `ψ(x) = e^{−t/d − r(t)}` where `e^{t − r(t)} = x`.
pub fn psi_from_r(rate: &RateFunction, d: usize, x: f64) -> Result<f64> {
    let df = d as f64;
    let t0 = rate.t_start;
    let r0 = rate.eval(t0)?;
    let x0 = (t0 - r0).exp();
    if !(x >= x0 * (1.0 - 1e-14)) {
        return Err(Error::OutOfDomain { x, start: x0 });
    }
    let target = x.ln();
    let h = |t: f64| -> Result<f64> { Ok(t - rate.eval(t)? - target) };
    let mut lo = t0;
    let mut width = target.abs() + 1.0;
    let mut hi = t0 + width;
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        if h(hi)? >= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        width *= 2.0;
        hi = t0 + width;
    }
    if !found {
        return Err(Error::InvalidArgument(format!("could not bracket t for x = {x}")));
    }
    if h(lo)? > 0.0 {
        // x within rounding of x₀
        hi = lo;
    }
    while hi - lo > BISECT_TOL * hi.abs().max(1.0) * 0.5 && hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((-t / df - rate.eval(t)?).exp())
}

/// The tabulated `ψ` whose rate function is exactly the given piecewise
/// linear `r` (nodes map to nodes).
pub fn psi_nodes_from_rate(t: &[f64], r: &[f64], d: usize) -> Result<ApproxFunction> {
    let df = d as f64;
    let points = t.iter().zip(r).map(|(&t, &r)| ((t - r).exp(), (-t / df - r).exp())).collect();
    ApproxFunction::tabulated(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Numeric { converging_partial_sums: bool },
}

impl Verdict {
    pub fn converges(&self) -> bool {
        match self {
            Verdict::Converges => true,
            Verdict::Diverges => false,
            Verdict::Numeric { converging_partial_sums } => *converging_partial_sums,
        }
    }
}

/// `Σ x^{α/d − 1} ψ^α(x)`.
pub fn classify_khintchine_series(psi: &ApproxFunction, d: usize, alpha: f64) -> Verdict {
    let df = d as f64;
    match &psi.family {
        PsiFamily::PowerLog { a, b, .. } => {
            let e = alpha / df - 1.0 - a * alpha;
            if (e + 1.0).abs() <= BOUNDARY_TOL {
                if b * alpha > 1.0 {
                    Verdict::Converges
                } else {
                    Verdict::Diverges
                }
            } else if e < -1.0 {
                Verdict::Converges
            } else {
                Verdict::Diverges
            }
        }
        PsiFamily::Tabulated { .. } => {
            // Cauchy condensation: 2^k f(2^k), in logs
            let log_term = |k: f64| -> f64 {
                let u = k * std::f64::consts::LN_2;
                u + (alpha / df - 1.0) * u + alpha * psi.log_eval_continued(u)
            };
            let k0 = (psi.x0.log2().ceil()).max(0.0) + 40.0;
            let ratios: Vec<f64> = (0..10).map(|i| log_term(k0 + i as f64 + 1.0) - log_term(k0 + i as f64)).collect();
            Verdict::Numeric { converging_partial_sums: ratios.iter().all(|&r| r < -1e-9) }
        }
    }
}

/// `Σ exp(−γ r(t))`.
pub fn classify_rate_series(rate: &RateFunction, gamma: f64) -> Verdict {
    let by_slope = |slope: f64, log_coef: f64| {
        if slope.abs() <= BOUNDARY_TOL {
            if gamma * log_coef > 1.0 {
                Verdict::Converges
            } else {
                Verdict::Diverges
            }
        } else if slope > 0.0 {
            Verdict::Converges
        } else {
            Verdict::Diverges
        }
    };
    match &rate.kind {
        RateKind::Affine { slope, .. } => by_slope(*slope, 0.0),
        RateKind::Log { coef } => by_slope(0.0, *coef),
        RateKind::Psi { psi, d } => match &psi.family {
            PsiFamily::PowerLog { a, b, .. } => {
                let df = *d as f64;
                by_slope((a - 1.0 / df) / (1.0 + a), b / (1.0 + a))
            }
            PsiFamily::Tabulated { .. } => numeric_rate_verdict(rate, gamma),
        },
        RateKind::Nodes { .. } => numeric_rate_verdict(rate, gamma),
    }
}

/// Local power exponent of `exp(−γ r)` on `[T, 2T]`: faster than `1/t` means
/// converging partial sums.
fn numeric_rate_verdict(rate: &RateFunction, gamma: f64) -> Verdict {
    let t = rate.t_start.abs() + 1e4;
    let converging = match (rate.eval(t), rate.eval(2.0 * t)) {
        (Ok(a), Ok(b)) => gamma * (b - a) / std::f64::consts::LN_2 > 1.0,
        _ => false,
    };
    Verdict::Numeric { converging_partial_sums: converging }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalencePoint {
    pub t: f64,
    pub x: f64,
    pub i_psi: f64,
    pub i_r: f64,
    /// `d/(α(d+1)) (e^{−γ r(T)} − e^{−γ r(t₀)})`.
    pub boundary: f64,
    pub residual: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub t0: f64,
    pub x0: f64,
    pub points: Vec<EquivalencePoint>,
    pub max_residual: f64,
    /// Relative change of the truncated ratio over the last grid step.
    pub ratio_drift: f64,
    pub khintchine: Verdict,
    pub rate: Verdict,
    pub verdicts_agree: bool,
    /// `∫ ψ^d dx` against `∫ e^{−(d+1) r(t)} dt`.
    pub q0_psi: Verdict,
    pub q0_rate: Verdict,
    pub q0_agree: bool,
}

/// Gauss–Legendre on `[a, b]` with panels of width at most `h`.
fn integrate(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, h: f64) -> Result<f64> {
    const NODES: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
    const WEIGHTS: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
    if b <= a {
        return Ok(0.0);
    }
    let panels = ((b - a) / h).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        let half = 0.5 * w;
        for (x, wt) in NODES.iter().zip(WEIGHTS) {
            total += wt * half * (f(mid - half * x)? + f(mid + half * x)?);
        }
    }
    Ok(total)
}

/// Compares the two partial integrals of the main change of variables on
/// matched truncations `x = e^{T − r(T)}`.
pub fn equivalence_check(psi: &ApproxFunction, d: usize, alpha: f64, grid: &[f64]) -> Result<EquivalenceReport> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let df = d as f64;
    let gamma = alpha * (df + 1.0) / df;
    let rate = RateFunction::from_psi(psi, d);
    let t0 = rate.t_start;
    let r0 = rate.eval(t0)?;
    let x0 = (t0 - r0).exp();
    let u0 = x0.ln();

    let f_psi = |u: f64| -> Result<f64> { Ok((u * alpha / df + alpha * psi.log_eval_continued(u)).exp()) };
    let f_r = |t: f64| -> Result<f64> { Ok((-gamma * rate.eval(t)?).exp()) };

    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(sorted.len());
    let (mut acc_psi, mut acc_r, mut prev_u, mut prev_t) = (0.0, 0.0, u0, t0);
    for &t in &sorted {
        if t < t0 {
            continue;
        }
        let r = rate.eval(t)?;
        let u = t - r;
        acc_psi += integrate(&f_psi, prev_u, u, 0.02)?;
        acc_r += integrate(&f_r, prev_t, t, 0.02)?;
        prev_u = u;
        prev_t = t;
        let boundary = df / (alpha * (df + 1.0)) * ((-gamma * r).exp() - (-gamma * r0).exp());
        let residual = (acc_psi - acc_r - boundary).abs() / acc_psi.abs().max(1.0);
        points.push(EquivalencePoint {
            t,
            x: u.exp(),
            i_psi: acc_psi,
            i_r: acc_r,
            boundary,
            residual,
            ratio: if acc_r != 0.0 { acc_psi / acc_r } else { f64::NAN },
        });
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let ratio_drift = match points.len() {
        n if n >= 2 => ((points[n - 1].ratio - points[n - 2].ratio) / points[n - 1].ratio).abs(),
        _ => f64::NAN,
    };
    let khintchine = classify_khintchine_series(psi, d, alpha);
    let rate_v = classify_rate_series(&rate, gamma);
    let q0_psi = classify_khintchine_series(psi, d, df);
    let q0_rate = classify_rate_series(&rate, df + 1.0);
    Ok(EquivalenceReport {
        d,
        alpha,
        gamma,
        t0,
        x0,
        points,
        max_residual,
        ratio_drift,
        khintchine,
        rate: rate_v,
        verdicts_agree: khintchine.converges() == rate_v.converges(),
        q0_psi,
        q0_rate,
        q0_agree: q0_psi.converges() == q0_rate.converges(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t0_examples() {
        assert_eq!(t0_of(&ApproxFunction::power(1.0, 2.0).unwrap(), 1), 0.0);
        for d in 1..5 {
            assert_eq!(t0_of(&ApproxFunction::power(1.0, 0.0).unwrap(), d), 0.0);
        }
        let psi = ApproxFunction::power_log(1.0, 1.0, 0.0, std::f64::consts::E).unwrap();
        assert!((t0_of(&psi, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn r_examples() {
        for d in 1..5 {
            let psi = ApproxFunction::power(1.0, 1.0 / d as f64).unwrap();
            for t in [0.0, 1.0, 10.0, 100.0] {
                assert!(r_from_psi(&psi, d, t).unwrap().abs() < 1e-9);
            }
        }
        let r = r_from_psi(&ApproxFunction::power(1.0, 2.0).unwrap(), 1, 3.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = r_from_psi(&ApproxFunction::power(1.0, 1.0).unwrap(), 2, 4.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_sign_of_log_c() {
        // ψ = c x^{-a}: log c enters r with a minus sign
        for (c, a, d, t) in [(0.44, 1.0, 1, 5.0_f64), (2.0, 1.5, 2, 7.0), (0.1, 0.5, 3, 12.0)] {
            let psi = ApproxFunction::power(c, a).unwrap();
            let t = t.max(t0_of(&psi, d));
            let r = r_from_psi(&psi, d, t).unwrap();
            assert!((r - r_closed_form(c, a, d, t)).abs() < 1e-9, "c={c} a={a} d={d}");
            // defining identity
            let lhs = psi.log_eval_continued(t - r);
            assert!((lhs + t / d as f64 + r).abs() < 1e-11);
        }
    }

    #[test]
    fn out_of_domain() {
        let psi = ApproxFunction::power(1.0, 2.0).unwrap();
        assert!(matches!(r_from_psi(&psi, 1, -1.0), Err(Error::OutOfDomain { .. })));
        let rate = RateFunction::affine(1.0 / 3.0, 0.0, 0.0);
        assert!(matches!(psi_from_r(&rate, 1, 0.5), Err(Error::OutOfDomain { .. })));
        assert!(ApproxFunction::power_log(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(ApproxFunction::tabulated(vec![(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn psi_from_r_examples() {
        let zero = RateFunction::affine(0.0, 0.0, 0.0);
        assert!((psi_from_r(&zero, 1, 4.0).unwrap() - 0.25).abs() < 1e-12);
        let third = RateFunction::affine(1.0 / 3.0, 0.0, 0.0);
        let e2 = 2f64.exp();
        assert!((psi_from_r(&third, 1, e2).unwrap() - (-4f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn tabulated_round_trips() {
        let t = vec![0.0, 1.0, 2.5, 4.0, 7.0, 10.0];
        let r = vec![0.0, 0.2, 0.2, 0.9, 1.0, 2.5];
        let d = 2;
        let rate = RateFunction::nodes(t.clone(), r.clone()).unwrap();
        rate.check_monotonicity(d, &(0..1000).map(|i| i as f64 * 0.02).collect::<Vec<_>>()).unwrap();
        let psi = psi_nodes_from_rate(&t, &r, d).unwrap();
        for i in 0..200 {
            let tt = i as f64 * 0.07;
            let back = r_from_psi(&psi, d, tt.max(t0_of(&psi, d))).unwrap();
            if tt >= t0_of(&psi, d) && tt >= 0.0 {
                assert!((back - rate.eval(tt).unwrap()).abs() < 1e-8, "t={tt}");
            }
        }
        for i in 0..100 {
            let x = psi.x0 * (1.0 + i as f64 * 0.5);
            assert!((psi_from_r(&rate, d, x).unwrap() / psi.eval(x).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn khintchine_examples() {
        assert_eq!(classify_khintchine_series(&ApproxFunction::power(1.0, 2.0).unwrap(), 1, 0.5), Verdict::Converges);
        assert_eq!(classify_khintchine_series(&ApproxFunction::power(1.0, 1.0).unwrap(), 1, 0.63), Verdict::Diverges);
        assert_eq!(classify_khintchine_series(&ApproxFunction::power(1.0, 0.0).unwrap(), 2, 1.0), Verdict::Diverges);
        let boundary = ApproxFunction::power_log(1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(classify_khintchine_series(&boundary, 1, 0.6), Verdict::Converges);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(classify_rate_series(&RateFunction::affine(1.0 / 3.0, 0.0, 0.0), 1.2), Verdict::Converges);
        assert_eq!(classify_rate_series(&RateFunction::affine(0.0, 0.0, 0.0), 5.0), Verdict::Diverges);
        assert_eq!(classify_rate_series(&RateFunction::log(1.0), 1.2), Verdict::Converges);
        assert_eq!(classify_rate_series(&RateFunction::log(1.0), 0.8), Verdict::Diverges);
    }

    #[test]
    fn tabulated_verdicts_are_numeric() {
        let psi = ApproxFunction::tabulated(vec![(1.0, 1.0), (10.0, 0.01)]).unwrap();
        let v = classify_khintchine_series(&psi, 1, 0.5);
        assert_eq!(v, Verdict::Numeric { converging_partial_sums: true });
        let rate = RateFunction::from_psi(&psi, 1);
        assert_eq!(classify_rate_series(&rate, 1.0), Verdict::Numeric { converging_partial_sums: true });
    }

    #[test]
    fn equivalence_examples() {
        let psi = ApproxFunction::power(1.0, 2.0).unwrap();
        let grid: Vec<f64> = (1..=6).map(|k| 10.0 * k as f64).collect();
        let rep = equivalence_check(&psi, 1, 0.5, &grid).unwrap();
        assert!(rep.khintchine.converges() && rep.rate.converges());
        assert!(rep.ratio_drift < 0.05);
        assert!(rep.max_residual < 1e-8);
        assert!(rep.q0_agree);
        let crit = ApproxFunction::power(1.0, 0.5).unwrap();
        let rep = equivalence_check(&crit, 2, 1.0, &grid).unwrap();
        assert!(!rep.khintchine.converges() && !rep.rate.converges());
        assert!(rep.max_residual < 1e-8);
    }
}
