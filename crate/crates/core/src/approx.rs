//! Brute-force rational approximation: which `q` satisfy
//! `‖x − p/q‖_∞ < ψ(q)/q`, and the cross-check of those hits against
//! heights of `a_t u_x`.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dani::{classify_khintchine_series, ApproxFunction, RateFunction, Verdict};
use crate::error::{Error, Result};
use crate::ifs::{coding_point, sample_words, IfsSystem};
use crate::orbit::DaniLattice;

/// `(√5 − 1)/2`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// A point to scan: exact rationals or doubles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScanPoint {
    Rational { num: Vec<i128>, den: Vec<i128> },
    Float { x: Vec<f64> },
}

impl ScanPoint {
    pub fn float(x: Vec<f64>) -> Self {
        ScanPoint::Float { x }
    }

    pub fn rational(pairs: &[(i128, i128)]) -> Result<Self> {
        if pairs.iter().any(|&(_, b)| b <= 0) {
            return Err(Error::InvalidArgument("denominators must be positive".into()));
        }
        Ok(ScanPoint::Rational { num: pairs.iter().map(|p| p.0).collect(), den: pairs.iter().map(|p| p.1).collect() })
    }

    /// Comma-separated coordinates, each `golden`, `p/q`, or a decimal
    /// (decimals are read exactly when they fit).
    pub fn parse(text: &str) -> Result<Self> {
        let mut exact = Vec::new();
        let mut floats = Vec::new();
        let mut all_exact = true;
        for part in text.split(',').map(str::trim) {
            if part.is_empty() {
                return Err(Error::InvalidArgument(format!("empty coordinate in {text:?}")));
            }
            let parsed = parse_coordinate(part)?;
            floats.push(parsed.0);
            match parsed.1 {
                Some(r) => exact.push(r),
                None => all_exact = false,
            }
        }
        Ok(if all_exact { ScanPoint::Rational { num: exact.iter().map(|r| r.0).collect(), den: exact.iter().map(|r| r.1).collect() } } else { ScanPoint::Float { x: floats } })
    }

    pub fn dimension(&self) -> usize {
        match self {
            ScanPoint::Rational { num, .. } => num.len(),
            ScanPoint::Float { x } => x.len(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            ScanPoint::Rational { num, den } => num.iter().zip(den).map(|(&a, &b)| a as f64 / b as f64).collect(),
            ScanPoint::Float { x } => x.clone(),
        }
    }

    /// Exact value (a double is its own dyadic rational).
    pub fn to_exact(&self) -> Result<Vec<BigRational>> {
        match self {
            ScanPoint::Rational { num, den } => {
                Ok(num.iter().zip(den).map(|(&a, &b)| BigRational::new(BigInt::from(a), BigInt::from(b))).collect())
            }
            ScanPoint::Float { x } => crate::orbit::exact_point(x),
        }
    }
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn parse_coordinate(s: &str) -> Result<(f64, Option<(i128, i128)>)> {
    let bad = || Error::InvalidArgument(format!("cannot parse coordinate {s:?}"));
    if s.eq_ignore_ascii_case("golden") {
        return Ok((GOLDEN, None));
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: i128 = a.trim().parse().map_err(|_| bad())?;
        let b: i128 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        let (a, b) = if b < 0 { (-a, -b) } else { (a, b) };
        let g = gcd_i128(a, b).max(1);
        return Ok((a as f64 / b as f64, Some((a / g, b / g))));
    }
    let v: f64 = s.parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(bad());
    }
    // exact decimal: digits with an optional point and no exponent
    let exact = (|| {
        if s.contains(['e', 'E']) {
            return None;
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if frac.len() > 18 || int.len() > 18 {
            return None;
        }
        let den = 10i128.pow(frac.len() as u32);
        let int_v: i128 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let frac_v: i128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        let mut num = int_v * den + frac_v;
        if neg {
            num = -num;
        }
        let g = gcd_i128(num, den).max(1);
        Some((num / g, den / g))
    })();
    Ok((v, exact))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub q: u64,
    pub p: Vec<i64>,
    /// `‖x − p/q‖_∞`.
    pub error: f64,
    /// `ψ(q)/q − error`.
    pub margin: f64,
    /// `d/(d+1)(log q − log ‖qx − p‖_∞)`; `None` when `qx` is an integer vector.
    pub witness_time: Option<f64>,
}

fn round_half_even_rational(n: i128, den: i128) -> i128 {
    let f = n.div_euclid(den);
    let rem = n - f * den;
    match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Greater => f + 1,
        std::cmp::Ordering::Less => f,
        std::cmp::Ordering::Equal => f + (f & 1),
    }
}

/// Nearest integer to `q x` and `|q x − p|`, correctly rounded.
fn nearest_float(q: f64, x: f64) -> (i64, f64) {
    let mut p = (q * x).round_ties_even();
    let mut res = q.mul_add(x, -p);
    if res > 0.5 {
        p += 1.0;
        res = q.mul_add(x, -p);
    } else if res < -0.5 {
        p -= 1.0;
        res = q.mul_add(x, -p);
    }
    if res.abs() == 0.5 && p % 2.0 != 0.0 {
        p += res.signum();
        res = q.mul_add(x, -p);
    }
    (p as i64, res.abs())
}

/// `(p, ‖q x − p‖_∞)` for the coordinatewise nearest `p`.
pub fn nearest(point: &ScanPoint, q: u64) -> (Vec<i64>, f64) {
    match point {
        ScanPoint::Rational { num, den } => {
            let mut p = Vec::with_capacity(num.len());
            let mut e = 0.0f64;
            for (&a, &b) in num.iter().zip(den) {
                let n = q as i128 * a;
                let pi = round_half_even_rational(n, b);
                p.push(pi as i64);
                e = e.max((n - pi * b).abs() as f64 / b as f64);
            }
            (p, e)
        }
        ScanPoint::Float { x } => {
            let mut p = Vec::with_capacity(x.len());
            let mut e = 0.0f64;
            for &xi in x {
                let (pi, ei) = nearest_float(q as f64, xi);
                p.push(pi);
                e = e.max(ei);
            }
            (p, e)
        }
    }
}

fn witness_time(d: usize, q: u64, big_e: f64) -> Option<f64> {
    let df = d as f64;
    (big_e > 0.0).then(|| df / (df + 1.0) * ((q as f64).ln() - big_e.ln()))
}

/// Every `q ≤ q_max` with `‖q x − p‖_∞ < ψ(q)`.
pub fn scan_hits(point: &ScanPoint, psi: &ApproxFunction, q_max: u64) -> Result<Vec<HitRecord>> {
    if q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be at least 1".into()));
    }
    if psi.x0 > 1.0 {
        return Err(Error::InvalidPsi("psi must be defined from q = 1".into()));
    }
    let d = point.dimension();
    let mut hits = Vec::new();
    for q in 1..=q_max {
        let (p, big_e) = nearest(point, q);
        let bound = psi.eval(q as f64)?;
        if big_e < bound {
            let qf = q as f64;
            hits.push(HitRecord { q, p, error: big_e / qf, margin: (bound - big_e) / qf, witness_time: witness_time(d, q, big_e) });
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossViolation {
    pub q: u64,
    pub t: f64,
    pub height: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaniCrossReport {
    pub hits: usize,
    pub checked: usize,
    /// Hits with `q x` integral: the height is unbounded along the orbit.
    pub degenerate: usize,
    /// Hits whose witness time precedes `t₀`.
    pub before_t0: usize,
    pub violations: Vec<CrossViolation>,
    pub converse_times: usize,
    /// Sample times with `l(t) ≥ r(t) + tol`.
    pub crossings: usize,
    /// Crossings whose minimal vector is not a hit.
    pub converse_failures: Vec<CrossViolation>,
    /// Crossings whose minimal vector has `|q| > q_max`.
    pub converse_unchecked: usize,
}

/// For each hit, `l(a_{t*} u_x) ≥ r(t*) − tol` at the balancing time `t*`;
/// conversely, at sample times in `converse` where `l ≥ r + tol`, the minimal
/// vector `(q, p)` must be a hit.
pub fn dani_cross_check(
    point: &ScanPoint,
    psi: &ApproxFunction,
    q_max: u64,
    tol: f64,
    converse: Option<(f64, f64, usize)>,
) -> Result<DaniCrossReport> {
    let d = point.dimension();
    let hits = scan_hits(point, psi, q_max)?;
    let rate = RateFunction::from_psi(psi, d);
    let t0 = rate.t_start;
    let exact = point.to_exact()?;
    let mut lattice = DaniLattice::new(&exact, 0.0)?;

    let mut report = DaniCrossReport {
        hits: hits.len(),
        checked: 0,
        degenerate: 0,
        before_t0: 0,
        violations: Vec::new(),
        converse_times: 0,
        crossings: 0,
        converse_failures: Vec::new(),
        converse_unchecked: 0,
    };
    for h in &hits {
        let Some(t) = h.witness_time else {
            report.degenerate += 1;
            continue;
        };
        if t < t0 {
            report.before_t0 += 1;
            continue;
        }
        lattice.set_time(t);
        let height = lattice.height()?;
        let r = rate.eval(t)?;
        report.checked += 1;
        if height < r - tol {
            report.violations.push(CrossViolation { q: h.q, t, height, rate: r });
        }
    }

    let (lo, hi, n) = converse.unwrap_or((t0.max(0.0), (q_max as f64).ln().max(t0.max(0.0)), 200));
    let lo = lo.max(t0);
    for i in 0..n {
        let t = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
        report.converse_times += 1;
        lattice.set_time(t);
        let (delta, coeffs) = lattice.shortest_coefficients()?;
        let height = -delta.ln();
        let r = rate.eval(t)?;
        if height < r + tol {
            continue;
        }
        report.crossings += 1;
        let q = coeffs[0].magnitude();
        let q: Option<u64> = num_traits::ToPrimitive::to_u64(q);
        match q {
            Some(0) => {}
            Some(q) if q <= q_max => {
                if !hits.iter().any(|h| h.q == q) {
                    report.converse_failures.push(CrossViolation { q, t, height, rate: r });
                }
            }
            _ => report.converse_unchecked += 1,
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyBand {
    pub k: u32,
    pub q_lo: u64,
    pub q_hi: u64,
    pub with_hit: usize,
    pub n_uncertain: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyTable {
    pub points: usize,
    pub q_max: u64,
    pub depth: usize,
    pub bands: Vec<SurveyBand>,
    /// Convergence of the series at the similarity dimension of the system.
    pub khintchine: Verdict,
}

/// Per dyadic band `[2^k, 2^{k+1})`, the fraction of sampled fractal points
/// with a hit in the band. Points whose only candidates in a band sit within
/// the coding truncation error of the threshold are counted as uncertain and
/// left out of that band's fraction.
pub fn survey(sys: &IfsSystem, psi: &ApproxFunction, sample_count: usize, q_max: u64, depth: usize, seed: u64) -> Result<SurveyTable> {
    if q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be at least 1".into()));
    }
    let alpha = sys.similarity_dimension();
    let khintchine = classify_khintchine_series(psi, sys.dimension(), alpha);
    let n_bands = 64 - q_max.leading_zeros();
    if sample_count == 0 {
        return Ok(SurveyTable { points: 0, q_max, depth, bands: Vec::new(), khintchine });
    }
    let thresholds: Vec<f64> = (1..=q_max).map(|q| psi.eval(q as f64)).collect::<Result<_>>()?;
    let words = sample_words(sys, depth, seed, sample_count)?;
    // per point and band: 0 = no hit, 1 = hit, 2 = uncertain
    let status: Vec<Vec<u8>> = words
        .par_iter()
        .map(|w| -> Result<Vec<u8>> {
            let cp = coding_point(sys, w, sys.base_point())?;
            let point = ScanPoint::float(cp.point);
            let mut out = vec![0u8; n_bands as usize];
            for q in 1..=q_max {
                let band = (63 - q.leading_zeros()) as usize;
                if out[band] == 1 {
                    continue;
                }
                let (_, big_e) = nearest(&point, q);
                let qf = q as f64;
                let slack = cp.error_bound + 4.0 * f64::EPSILON;
                let err = big_e / qf;
                let bound = thresholds[(q - 1) as usize] / qf;
                if (err - bound).abs() <= slack {
                    out[band] = 2;
                } else if err < bound {
                    out[band] = 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let bands = (0..n_bands)
        .map(|k| {
            let with_hit = status.iter().filter(|s| s[k as usize] == 1).count();
            let n_uncertain = status.iter().filter(|s| s[k as usize] == 2).count();
            let certain = sample_count - n_uncertain;
            SurveyBand {
                k,
                q_lo: 1u64 << k,
                q_hi: ((1u64 << k) * 2 - 1).min(q_max),
                with_hit,
                n_uncertain,
                fraction: if certain > 0 { with_hit as f64 / certain as f64 } else { f64::NAN },
            }
        })
        .collect();
    Ok(SurveyTable { points: sample_count, q_max, depth, bands, khintchine })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(h: &[HitRecord]) -> Vec<u64> {
        h.iter().map(|r| r.q).collect()
    }

    #[test]
    fn scan_examples() {
        let psi = ApproxFunction::power(1.0, 1.0).unwrap();
        let zero = ScanPoint::parse("0").unwrap();
        assert_eq!(qs(&scan_hits(&zero, &psi, 10).unwrap()), (1..=10).collect::<Vec<_>>());
        let half = ScanPoint::parse("1/2").unwrap();
        assert_eq!(qs(&scan_hits(&half, &psi, 10).unwrap()), vec![1, 2, 4, 6, 8, 10]);
        let dec = ScanPoint::parse("0.5").unwrap();
        assert_eq!(dec, half);
        let golden = ScanPoint::parse("golden").unwrap();
        let psi = ApproxFunction::power(0.44, 1.0).unwrap();
        assert_eq!(qs(&scan_hits(&golden, &psi, 100_000).unwrap()), vec![1, 3]);
    }

    #[test]
    fn ties_round_to_even() {
        let half = ScanPoint::parse("1/2").unwrap();
        assert_eq!(nearest(&half, 1).0, vec![0]);
        assert_eq!(nearest(&half, 3).0, vec![2]);
        let f = ScanPoint::float(vec![0.5]);
        assert_eq!(nearest(&f, 1).0, vec![0]);
        assert_eq!(nearest(&f, 3).0, vec![2]);
        let neg = ScanPoint::parse("-1/2").unwrap();
        assert_eq!(nearest(&neg, 1).0, vec![0]);
    }

    #[test]
    fn nearest_is_optimal() {
        let pts = [ScanPoint::parse("3/7,-2/9").unwrap(), ScanPoint::float(vec![GOLDEN, 0.1234567])];
        for pt in &pts {
            let x = pt.to_f64();
            for q in 1..500u64 {
                let (p, e) = nearest(pt, q);
                let qf = q as f64;
                let res: Vec<f64> = x.iter().zip(&p).map(|(xi, &pi)| (qf * xi - pi as f64).abs()).collect();
                assert!((res.iter().cloned().fold(0.0, f64::max) - e).abs() < 1e-9);
                for (i, xi) in x.iter().enumerate() {
                    for dp in [-1i64, 1] {
                        assert!(res[i] <= (qf * xi - (p[i] + dp) as f64).abs() + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn cross_check_half() {
        let psi = ApproxFunction::power(1.0, 1.0).unwrap();
        let half = ScanPoint::parse("1/2").unwrap();
        let rep = dani_cross_check(&half, &psi, 1000, 1e-6, None).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.converse_failures.is_empty());
        let zero = ScanPoint::parse("0").unwrap();
        let rep = dani_cross_check(&zero, &psi, 100, 1e-6, None).unwrap();
        assert_eq!(rep.degenerate, rep.hits);
        assert!(rep.converse_failures.is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(ScanPoint::parse("1/0").is_err());
        assert!(ScanPoint::parse("abc").is_err());
        assert!(ScanPoint::parse("").is_err());
        assert_eq!(ScanPoint::parse("2/-4").unwrap(), ScanPoint::rational(&[(-1, 2)]).unwrap());
    }
}
