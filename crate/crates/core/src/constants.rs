//! Decay exponents `α_l` of neighbourhoods of affine subspaces and
//! `ϖ = min_l α_l (d − l + 1)`.
//!
//! For the Cantor product `𝒞^d` hyperplane neighbourhoods are covered exactly
//! by level-`n` triadic cubes; for general systems the exponents are only
//! estimated by Monte Carlo.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::linear_fit;
use crate::ifs::{sample_fractal, IfsSystem};
use crate::linalg::{dot, Matrix};
use crate::seeds;

const MAX_CUBES: f64 = 5.0e6;

/// An affine subspace `{x : N x = offset}` (orthonormal rows of `N`) and a
/// neighbourhood radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceQuery {
    pub normal_rows: Matrix,
    pub offset: Vec<f64>,
    pub epsilon: f64,
}

impl SubspaceQuery {
    pub fn new(normal_rows: Matrix, offset: Vec<f64>, epsilon: f64) -> Result<Self> {
        if normal_rows.rows() != offset.len() {
            return Err(Error::DimensionMismatch { expected: normal_rows.rows(), got: offset.len() });
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if normal_rows.orthogonality_defect() > 1e-12 {
            return Err(Error::InvalidArgument("normal rows must be orthonormal".into()));
        }
        Ok(SubspaceQuery { normal_rows, offset, epsilon })
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn distance(&self, x: &[f64]) -> f64 {
        (0..self.normal_rows.rows())
            .map(|i| (dot(self.normal_rows.row(i), x) - self.offset[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance(x) < self.epsilon
    }
}

/// `C_1 = 3`, `C_d = 2 C_{d−1}`.
pub fn cover_constant(d: usize) -> f64 {
    3.0 * 2f64.powi(d as i32 - 1)
}

/// Level-`n` triadic cubes, each given by per-coordinate indices in
/// `[0, 3^n)` whose base-3 digits are all 0 or 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub n: u32,
    pub d: usize,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub cubes: Vec<Vec<u64>>,
    pub count: usize,
    pub bound_constant: f64,
}

impl CoverCertificate {
    pub fn count_bound(&self) -> f64 {
        self.bound_constant * 2f64.powi(((self.d - 1) as u32 * self.n) as i32)
    }

    /// Digits of each cube, level by level: `words[c][level][coord]`.
    pub fn words(&self) -> Vec<Vec<Vec<u8>>> {
        self.cubes
            .iter()
            .map(|cube| {
                (0..self.n)
                    .map(|level| {
                        let shift = 3u64.pow(self.n - 1 - level);
                        cube.iter().map(|&k| ((k / shift) % 3) as u8).collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn all_admissible(&self) -> bool {
        self.cubes.iter().all(|c| c.iter().all(|&k| is_admissible(k, self.n)))
    }

    /// Whether `x` lies in one of the (closed) cubes. A coordinate within
    /// rounding distance of a cube boundary may belong to either side.
    pub fn covers(&self, set: &HashSet<Vec<u64>>, x: &[f64]) -> bool {
        let scale = 3f64.powi(self.n as i32);
        let top = 3u64.pow(self.n) - 1;
        let index = |v: f64| (v.floor().max(0.0) as u64).min(top);
        let options: Vec<[u64; 2]> = x
            .iter()
            .map(|&v| {
                let u = v * scale;
                [index(u - 1e-9 * scale), index(u + 1e-9 * scale)]
            })
            .collect();
        let mut idx = vec![0u64; x.len()];
        (0..1usize << x.len()).any(|mask| {
            for (i, o) in options.iter().enumerate() {
                idx[i] = o[(mask >> i) & 1];
            }
            set.contains(&idx)
        })
    }
}

pub fn is_admissible(mut k: u64, n: u32) -> bool {
    for _ in 0..n {
        if k % 3 == 1 {
            return false;
        }
        k /= 3;
    }
    k == 0
}

fn admissible(n: u32) -> Vec<u64> {
    let mut out = vec![0u64];
    for _ in 0..n {
        out = out.iter().flat_map(|&k| [3 * k, 3 * k + 2]).collect();
    }
    out
}

fn pow3(n: u32) -> BigInt {
    BigInt::from(3u8).pow(n)
}

fn floor_rat(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

fn ceil_rat(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}

/// Cubes meeting `{x : |a·x − c| < 3^{−n} |a|}` in `𝒞^{len(a)}`.
fn cover_rec(a: &[BigRational], c: &BigRational, n: u32) -> Vec<Vec<u64>> {
    let d = a.len();
    if n == 0 {
        return vec![vec![0; d]];
    }
    let p3 = pow3(n);
    if d == 1 {
        // k/3^n < c/a + ε and (k+1)/3^n > c/a − ε  ⇔  s − 2 < k < s + 1
        let s = c / &a[0] * BigRational::from_integer(p3.clone());
        let lo: BigInt = floor_rat(&s) - 1;
        let hi = ceil_rat(&s);
        let top = 3u64.pow(n);
        let mut out = Vec::new();
        let mut k = lo.max(BigInt::zero());
        while k <= hi {
            if let Some(kk) = k.to_u64() {
                if kk < top && BigRational::from_integer(k.clone()) > &s - BigRational::from_integer(BigInt::from(2)) && is_admissible(kk, n) {
                    out.push(vec![kk]);
                }
            }
            k += 1;
        }
        return out;
    }
    // slice along the coordinate with the smallest |coefficient|
    let j = (0..d).rev().min_by(|&x, &y| a[x].abs().cmp(&a[y].abs())).unwrap();
    let rest: Vec<BigRational> = (0..d).filter(|&i| i != j).map(|i| a[i].clone()).collect();
    let children: Vec<Vec<u64>> = {
        let mut ch = vec![Vec::new()];
        for _ in 0..d - 1 {
            ch = ch.into_iter().flat_map(|v: Vec<u64>| [0u64, 2].map(|e| { let mut w = v.clone(); w.push(e); w })).collect();
        }
        ch
    };
    let mut out = Vec::new();
    for kj in admissible(n) {
        let shift = &a[j] * BigRational::new(BigInt::from(kj), p3.clone());
        let c2 = c - shift;
        for cube in cover_rec(&rest, &c2, n - 1) {
            for digits in &children {
                let mut full = Vec::with_capacity(d);
                let mut it = cube.iter().zip(digits).map(|(k, e)| 3 * k + e);
                for i in 0..d {
                    if i == j {
                        full.push(kj);
                    } else {
                        full.push(it.next().unwrap());
                    }
                }
                out.push(full);
            }
        }
    }
    out
}

/// Triadic cubes of level `n` covering `𝓛^{(3^{−n})} ∩ 𝒞^d` for the hyperplane
/// `coeffs · x = rhs`, built by slicing along the smallest coefficient and
/// recursing one dimension down at radius `3ε`.
pub fn cover_hyperplane(coeffs: &[f64], rhs: f64, n: u32) -> Result<CoverCertificate> {
    let d = coeffs.len();
    if d == 0 || coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidArgument("hyperplane coefficients must not all vanish".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("level n must be at least 1".into()));
    }
    let bound = cover_constant(d) * 2f64.powi(((d - 1) as u32 * n) as i32);
    if bound > MAX_CUBES {
        return Err(Error::ResourceLimit(format!("certificate could hold {bound:e} cubes")));
    }
    let to_rat = |v: f64| BigRational::from_float(v).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {v}")));
    let a: Vec<BigRational> = coeffs.iter().map(|&v| to_rat(v)).collect::<Result<_>>()?;
    let c = to_rat(rhs)?;
    let mut cubes = cover_rec(&a, &c, n);
    cubes.sort();
    cubes.dedup();
    let count = cubes.len();
    Ok(CoverCertificate { n, d, coeffs: coeffs.to_vec(), rhs, cubes, count, bound_constant: cover_constant(d) })
}

/// `count · 2^{−dn}`.
pub fn measure_upper_bound(cert: &CoverCertificate, d: usize) -> f64 {
    cert.count as f64 * 2f64.powi(-((d as u32 * cert.n) as i32))
}

/// Samples points of `𝓛^{(3^{−n})} ∩ 𝒞^d` and counts those outside every
/// certificate cube. Points are drawn by choosing all but the last sliced
/// coordinate at random and steering that coordinate's digits toward the
/// hyperplane. Returns `(tested, uncovered)`.
pub fn verify_certificate(cert: &CoverCertificate, samples: usize, seed: u64) -> Result<(usize, usize)> {
    let d = cert.d;
    let set: HashSet<Vec<u64>> = cert.cubes.iter().cloned().collect();
    let norm = dot(&cert.coeffs, &cert.coeffs).sqrt();
    let eps = 3f64.powi(-(cert.n as i32));
    let j = (0..d).rev().max_by(|&x, &y| cert.coeffs[x].abs().total_cmp(&cert.coeffs[y].abs())).unwrap();
    let depth = 40;
    let results: Vec<(bool, bool)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::task_rng(seed, i as u64);
            let mut x: Vec<f64> = (0..d).map(|_| cantor_digits(&mut rng, depth, None)).collect();
            if rng.gen_bool(0.8) {
                // steer coordinate j toward the hyperplane (plus a small offset)
                let others: f64 = (0..d).filter(|&k| k != j).map(|k| cert.coeffs[k] * x[k]).sum();
                let target = (cert.rhs - others) / cert.coeffs[j] + rng.gen_range(-1.0..1.0) * eps * norm / cert.coeffs[j].abs();
                x[j] = cantor_digits(&mut rng, depth, Some(target));
            }
            let inside = (dot(&cert.coeffs, &x) - cert.rhs).abs() < eps * norm;
            (inside, inside && !cert.covers(&set, &x))
        })
        .collect();
    let tested = results.iter().filter(|r| r.0).count();
    let uncovered = results.iter().filter(|r| r.1).count();
    Ok((tested, uncovered))
}

/// A point of the middle-thirds Cantor set; with a target, the digits
/// follow the Cantor point nearest to it.
fn cantor_digits<R: Rng + ?Sized>(rng: &mut R, depth: usize, target: Option<f64>) -> f64 {
    let mut x = 0.0;
    let mut scale = 1.0;
    let mut t = target.map(|v| v.clamp(0.0, 1.0));
    for _ in 0..depth {
        scale /= 3.0;
        let two = match t {
            Some(tv) => {
                let rel = (tv - x) / scale;
                if rel >= 1.5 {
                    true
                } else if rel <= 1.5 && rel > 1.0 {
                    rng.gen_bool(0.5)
                } else {
                    false
                }
            }
            None => rng.gen_bool(0.5),
        };
        if two {
            x += 2.0 * scale;
        }
        if t.is_some() && depth > 0 && scale < 1e-12 {
            t = None;
        }
    }
    x
}

/// Exact bounds on `μ(𝓛^{(ε)})` for `𝓛 = 𝒞^{d−l} × {0}^l`, `ε ∈ (3^{−(n+1)}, 3^{−n}]`.
pub fn axis_subspace_measure(d: usize, l: usize, n: u32) -> Result<(f64, f64)> {
    if l == 0 || l > d {
        return Err(Error::InvalidArgument(format!("need 1 <= l <= d, got l = {l}, d = {d}")));
    }
    let l = l as i32;
    let n = n as i32;
    Ok((2f64.powi(-l * (n + 1)), 2f64.powi(-l * n)))
}

/// Empirical `μ̂(𝓛^{(ε)})` for the axis subspace `{x_{d−l+1} = … = x_d = 0}`.
pub fn axis_mass(points: &[Vec<f64>], l: usize, epsilon: f64) -> f64 {
    let d = points.first().map_or(0, Vec::len);
    let hit = points
        .iter()
        .filter(|p| p[d - l..].iter().map(|v| v * v).sum::<f64>().sqrt() < epsilon)
        .count();
    hit as f64 / points.len().max(1) as f64
}

/// `α_l` for `𝒞^d`: `l log 2 / log 3`.
pub fn cantor_alphas(d: usize) -> Vec<f64> {
    let s = 2f64.ln() / 3f64.ln();
    (1..=d).map(|l| l as f64 * s).collect()
}

/// `ϖ = min_l α_l (d − l + 1)`.
pub fn varpi_of(alphas: &[f64], d: usize) -> Result<f64> {
    if alphas.len() != d || d == 0 {
        return Err(Error::DimensionMismatch { expected: d, got: alphas.len() });
    }
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(i, a)| a * (d - i) as f64)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub n: u32,
    pub epsilon: f64,
    /// Best empirical neighbourhood mass found by the search.
    pub mass: f64,
    /// `log μ̂ / log ε`.
    pub ratio: f64,
    /// 95% binomial interval of the ratio.
    pub ratio_ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub l: usize,
    pub samples: usize,
    pub rows: Vec<AlphaRow>,
    /// Slope of `log μ̂` against `log ε` over the rows.
    pub alpha_hat: f64,
    pub alpha_se: f64,
    pub evaluations: usize,
}

/// Largest fraction of sorted values in a half-open window of width `w`.
fn max_window(sorted: &[f64], w: f64) -> usize {
    let mut best = 0;
    let mut j = 0;
    for i in 0..sorted.len() {
        if j < i {
            j = i;
        }
        while j < sorted.len() && sorted[j] < sorted[i] + w {
            j += 1;
        }
        best = best.max(j - i);
    }
    best
}

/// Masses of the best neighbourhood of a subspace with the given normal
/// rows, one per radius.
fn best_masses(points: &[Vec<f64>], normal: &Matrix, radii: &[f64], centers: usize, seed: u64) -> Vec<usize> {
    let l = normal.rows();
    if l == 1 {
        let mut proj: Vec<f64> = points.iter().map(|p| dot(normal.row(0), p)).collect();
        proj.sort_by(f64::total_cmp);
        return radii.iter().map(|&r| max_window(&proj, 2.0 * r)).collect();
    }
    let proj: Vec<Vec<f64>> = points.iter().map(|p| (0..l).map(|i| dot(normal.row(i), p)).collect()).collect();
    let mut rng = seeds::task_rng(seed, 0);
    let mut best = vec![0usize; radii.len()];
    for _ in 0..centers {
        let c = &proj[rng.gen_range(0..proj.len())];
        let dists: Vec<f64> = proj.iter().map(|q| q.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).collect();
        for (b, &r) in best.iter_mut().zip(radii) {
            *b = (*b).max(dists.iter().filter(|&&v| v < r).count());
        }
    }
    best
}

fn random_orthonormal<R: Rng + ?Sized>(l: usize, d: usize, rng: &mut R) -> Matrix {
    let rot = crate::linalg::random_rotation(d, rng);
    let rows: Vec<Vec<f64>> = (0..l).map(|i| rot.row(i).to_vec()).collect();
    Matrix::from_rows(&rows).expect("rectangular")
}

fn axis_normals(l: usize, d: usize) -> Vec<Matrix> {
    // every choice of l coordinate axes
    let mut out = Vec::new();
    let mut pick = vec![0usize; l];
    fn rec(start: usize, depth: usize, l: usize, d: usize, pick: &mut Vec<usize>, out: &mut Vec<Matrix>) {
        if depth == l {
            let rows: Vec<Vec<f64>> = pick.iter().map(|&i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
            out.push(Matrix::from_rows(&rows).unwrap());
            return;
        }
        for i in start..d {
            pick[depth] = i;
            rec(i + 1, depth + 1, l, d, pick, out);
        }
    }
    rec(0, 0, l, d, &mut pick, &mut out);
    out
}

/// Monte Carlo estimate of `α_l`: for each `n`, the largest neighbourhood
/// mass at `ε = 3^{−n}` over axis-aligned, random and hill-climbed subspaces
/// of codimension `l`, from `samples` points of the invariant measure.
pub fn alpha_estimate(
    sys: &IfsSystem,
    l: usize,
    n_range: (u32, u32),
    search_budget: usize,
    samples: usize,
    seed: u64,
) -> Result<AlphaEstimate> {
    let d = sys.dimension();
    if l == 0 || l > d {
        return Err(Error::InvalidArgument(format!("need 1 <= l <= d, got l = {l}")));
    }
    if n_range.0 > n_range.1 || samples == 0 {
        return Err(Error::InvalidArgument("empty n range or sample set".into()));
    }
    let depth = sys.default_depth();
    let points = sample_fractal(sys, depth, seeds::derive_seed(seed, 0), samples)?;
    let ns: Vec<u32> = (n_range.0..=n_range.1).collect();
    let radii: Vec<f64> = ns.iter().map(|&n| 3f64.powi(-(n as i32))).collect();
    let centers = 64;

    let mut rng = seeds::task_rng(seed, 1);
    let mut candidates = axis_normals(l, d);
    let n_random = search_budget.saturating_sub(candidates.len()) / 2;
    for _ in 0..n_random {
        candidates.push(random_orthonormal(l, d, &mut rng));
    }
    let evals: Vec<Vec<usize>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, nrm)| best_masses(&points, nrm, &radii, centers, seeds::derive_seed(seed, 100 + i as u64)))
        .collect();
    let mut best: Vec<usize> = vec![0; ns.len()];
    let last = ns.len() - 1;
    let mut leader = 0;
    for (i, e) in evals.iter().enumerate() {
        for k in 0..ns.len() {
            best[k] = best[k].max(e[k]);
        }
        if e[last] > evals[leader][last] {
            leader = i;
        }
    }
    let mut evaluations = candidates.len();
    // hill-climb around the leader at the finest scale
    let mut current = candidates[leader].clone();
    let mut current_val = evals[leader].clone();
    let mut step = 0.2;
    while evaluations < search_budget.max(candidates.len()) {
        let mut rows = current.to_rows();
        for r in rows.iter_mut() {
            for v in r.iter_mut() {
                *v += step * rng.gen_range(-1.0..1.0);
            }
        }
        let trial = gram_schmidt_rows(rows);
        evaluations += 1;
        let Some(trial) = trial else { continue };
        let val = best_masses(&points, &trial, &radii, centers, seeds::derive_seed(seed, 10_000 + evaluations as u64));
        for k in 0..ns.len() {
            best[k] = best[k].max(val[k]);
        }
        if val[last] > current_val[last] {
            current = trial;
            current_val = val;
        } else {
            step *= 0.8;
        }
    }

    let nf = samples as f64;
    let rows: Vec<AlphaRow> = ns
        .iter()
        .zip(&radii)
        .zip(&best)
        .map(|((&n, &eps), &count)| {
            let p = count as f64 / nf;
            let se = (p * (1.0 - p) / nf).sqrt();
            let le = eps.ln();
            let ratio = p.ln() / le;
            let hi_p = (p + 1.96 * se).min(1.0);
            let lo_p = (p - 1.96 * se).max(f64::MIN_POSITIVE);
            AlphaRow { n, epsilon: eps, mass: p, ratio, ratio_ci: (hi_p.ln() / le, lo_p.ln() / le) }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.mass > 0.0).map(|r| (r.epsilon.ln(), r.mass.ln())).collect();
    let (alpha_hat, alpha_se) = match linear_fit(&pts) {
        Some(f) => (f.slope, f.slope_se),
        None if pts.len() == 2 => ((pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0), f64::NAN),
        None => (rows.last().map_or(f64::NAN, |r| r.ratio), f64::NAN),
    };
    Ok(AlphaEstimate { l, samples, rows, alpha_hat, alpha_se, evaluations })
}

fn gram_schmidt_rows(rows: Vec<Vec<f64>>) -> Option<Matrix> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut r in rows {
        for o in &out {
            let c = dot(&r, o);
            for (ri, oi) in r.iter_mut().zip(o) {
                *ri -= c * oi;
            }
        }
        let n = dot(&r, &r).sqrt();
        if !(n > 1e-9) {
            return None;
        }
        out.push(r.into_iter().map(|v| v / n).collect());
    }
    Matrix::from_rows(&out).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cover_examples() {
        let c = cover_hyperplane(&[1.0], 0.5, 3).unwrap();
        assert!(c.count <= 3 && c.all_admissible());
        let c = cover_hyperplane(&[1.0, 1.0], 1.0, 3).unwrap();
        assert!(c.count as f64 <= 48.0 && c.all_admissible());
        let c = cover_hyperplane(&[0.3, -1.0, 0.7], 0.2, 2).unwrap();
        assert!(c.count as f64 <= 192.0);
        assert_eq!(cover_constant(3), 12.0);
    }

    #[test]
    fn cover_is_sound() {
        for (coeffs, rhs, n) in [(vec![1.0, 1.0], 1.0, 4), (vec![1.0, -2.0], 0.1, 5), (vec![0.0, 1.0], 0.25, 4), (vec![1.0, 0.5, -0.25], 0.5, 3)] {
            let c = cover_hyperplane(&coeffs, rhs, n).unwrap();
            assert!((c.count as f64) <= c.count_bound());
            let (tested, uncovered) = verify_certificate(&c, 4000, 3).unwrap();
            assert!(tested > 100, "{coeffs:?}: only {tested} points near the hyperplane");
            assert_eq!(uncovered, 0, "{coeffs:?}");
        }
    }

    #[test]
    fn measure_bound_examples() {
        let mut c = cover_hyperplane(&[1.0, 1.0], 1.0, 3).unwrap();
        c.count = 48;
        assert_eq!(measure_upper_bound(&c, 2), 0.75);
        let mut c = cover_hyperplane(&[1.0], 0.5, 4).unwrap();
        c.count = 3;
        assert_eq!(measure_upper_bound(&c, 1), 3.0 / 16.0);
        c.count = 0;
        assert_eq!(measure_upper_bound(&c, 1), 0.0);
    }

    #[test]
    fn axis_examples() {
        assert_eq!(axis_subspace_measure(2, 1, 2).unwrap(), (0.125, 0.25));
        assert_eq!(axis_subspace_measure(1, 1, 5).unwrap(), (2f64.powi(-6), 2f64.powi(-5)));
        assert_eq!(axis_subspace_measure(3, 3, 0).unwrap(), (0.125, 1.0));
        assert!(axis_subspace_measure(2, 3, 1).is_err());
    }

    #[test]
    fn varpi_examples() {
        let s = 2f64.ln() / 3f64.ln();
        assert!((varpi_of(&[s, 2.0 * s], 2).unwrap() - 1.2618595).abs() < 1e-7);
        assert!((varpi_of(&[s], 1).unwrap() - 0.6309298).abs() < 1e-7);
        assert_eq!(varpi_of(&[1.0, 1.0, 1.0], 3).unwrap(), 1.0);
        assert!(varpi_of(&[1.0], 2).is_err());
        for d in 1..=4 {
            assert_eq!(varpi_of(&cantor_alphas(d), d).unwrap(), d as f64 * s);
        }
    }

    #[test]
    fn window_counts() {
        assert_eq!(max_window(&[0.0, 0.1, 0.2, 0.5], 0.25), 3);
        assert_eq!(max_window(&[0.0, 0.1, 0.2, 0.5], 0.2), 2);
        assert_eq!(max_window(&[], 1.0), 0);
    }

    #[test]
    fn admissibility() {
        assert!(is_admissible(0, 3) && is_admissible(2, 1) && is_admissible(8, 2));
        assert!(!is_admissible(1, 1) && !is_admissible(3, 2) && !is_admissible(9, 2));
        assert_eq!(admissible(3).len(), 8);
    }
}
