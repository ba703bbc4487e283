//! Similarity iterated function systems with a common contraction ratio.
//!
//! Points are row vectors and maps act as `φ(x) = κ x O + y`. The coding map
//! sends a word `b_1 … b_n` to `φ_{b_1} ∘ … ∘ φ_{b_n}(α₀)` where the base point
//! `α₀` is the fixed point of the first map.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seeds;

const ORTHO_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-14;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMap {
    ratio: f64,
    rotation: Matrix,
    translation: Vec<f64>,
}

impl SimilarityMap {
    pub fn new(ratio: f64, rotation: Matrix, translation: Vec<f64>) -> Result<Self> {
        let d = translation.len();
        if d == 0 {
            return Err(Error::InvalidMap("dimension must be positive".into()));
        }
        if rotation.rows() != d || rotation.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rotation.rows() });
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidMap(format!("ratio {ratio} is not in (0, 1)")));
        }
        let defect = rotation.orthogonality_defect();
        if defect > ORTHO_TOL {
            return Err(Error::InvalidMap(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        Ok(SimilarityMap { ratio, rotation, translation })
    }

    /// `x ↦ ratio·x + translation`.
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Result<Self> {
        let d = translation.len();
        Self::new(ratio, Matrix::identity(d), translation)
    }

    /// The identity map. It is not contracting, so it is only useful as a
    /// composition unit.
    pub fn identity(d: usize) -> Self {
        SimilarityMap { ratio: 1.0, rotation: Matrix::identity(d), translation: vec![0.0; d] }
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn dimension(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.rotation.left_apply(x).expect("dimension checked by caller");
        for (o, y) in out.iter_mut().zip(&self.translation) {
            *o = self.ratio * *o + y;
        }
        out
    }

    /// The unique fixed point, solving `x (I - κO) = y`.
    pub fn fixed_point(&self) -> Vec<f64> {
        let d = self.dimension();
        let mut m = Matrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] -= self.ratio * self.rotation[(i, j)];
            }
        }
        let inv = m.inverse().expect("I - κO is invertible for κ < 1");
        inv.left_apply(&self.translation).expect("dimension")
    }
}

/// `outer ∘ inner`: the map applying `inner` first.
pub fn compose(outer: &SimilarityMap, inner: &SimilarityMap) -> Result<SimilarityMap> {
    if outer.dimension() != inner.dimension() {
        return Err(Error::DimensionMismatch { expected: outer.dimension(), got: inner.dimension() });
    }
    // κ₁(κ₂ x O₂ + y₂)O₁ + y₁
    let rotation = inner.rotation.mul(&outer.rotation)?;
    let moved = outer.rotation.left_apply(&inner.translation)?;
    let translation = moved
        .iter()
        .zip(&outer.translation)
        .map(|(m, y)| outer.ratio * m + y)
        .collect();
    Ok(SimilarityMap { ratio: outer.ratio * inner.ratio, rotation, translation })
}

/// A finite word over the alphabet of an [`IfsSystem`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolWord(pub Vec<usize>);

impl SymbolWord {
    pub fn new(symbols: Vec<usize>) -> Self {
        SymbolWord(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &SymbolWord) -> SymbolWord {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        SymbolWord(s)
    }

    /// The shift `T^k`: drops the first `k` symbols.
    pub fn shift(&self, k: usize) -> SymbolWord {
        SymbolWord(self.0[k.min(self.0.len())..].to_vec())
    }

    pub fn prefix(&self, n: usize) -> SymbolWord {
        SymbolWord(self.0[..n.min(self.0.len())].to_vec())
    }
}

/// Exact rational form of a system whose ratio and translations are
/// recognisable rationals and whose rotations have entries in `{-1, 0, 1}`.
#[derive(Debug, Clone)]
pub struct ExactIfs {
    pub ratio: BigRational,
    pub translations: Vec<Vec<BigRational>>,
    pub rotations: Vec<Vec<Vec<i8>>>,
    pub base: Vec<BigRational>,
}

/// Integer state of `Φ_n = φ_{b_1} ∘ … ∘ φ_{b_n}`, `Φ_n(x) = κ^n x R_n + y_n`.
///
/// With `κ = a/b` and `c` the common denominator of the translations,
/// `y_n = Y_n / (c b^{n−1})` and `Y_{n+1} = b Y_n + a^n c t_s R_n`, so no
/// gcd is taken along the way.
#[derive(Debug, Clone)]
pub struct ExactPrefix<'a> {
    ex: &'a ExactIfs,
    a: BigInt,
    b: BigInt,
    c: BigInt,
    scaled: Vec<Vec<BigInt>>,
    numer: Vec<BigInt>,
    den: BigInt,
    a_pow: BigInt,
    rot: Vec<Vec<i8>>,
    len: usize,
}

impl<'a> ExactPrefix<'a> {
    pub fn new(ex: &'a ExactIfs) -> Self {
        let d = ex.base.len();
        let c = ex.translations.iter().flatten().fold(BigInt::one(), |l, v| num_integer::Integer::lcm(&l, v.denom()));
        let scaled = ex.translations.iter().map(|t| t.iter().map(|v| v.numer() * (&c / v.denom())).collect()).collect();
        ExactPrefix {
            ex,
            a: ex.ratio.numer().clone(),
            b: ex.ratio.denom().clone(),
            c: c.clone(),
            scaled,
            numer: vec![BigInt::zero(); d],
            den: c,
            a_pow: BigInt::one(),
            rot: (0..d).map(|i| (0..d).map(|j| i8::from(i == j)).collect()).collect(),
            len: 0,
        }
    }

    pub fn push(&mut self, s: usize) {
        if self.len > 0 {
            self.den *= &self.b;
        }
        let inc = int_row_times(&self.scaled[s], &self.rot);
        for (y, v) in self.numer.iter_mut().zip(inc) {
            *y *= &self.b;
            *y += &self.a_pow * v;
        }
        self.a_pow *= &self.a;
        self.rot = int_mat_mul(&self.ex.rotations[s], &self.rot);
        self.len += 1;
    }

    /// `y_n` as an unnormalised numerator vector over a common denominator.
    pub fn translation(&self) -> (&[BigInt], &BigInt) {
        (&self.numer, &self.den)
    }

    /// `Φ_n(x)`, reduced.
    pub fn image(&self, x: &[BigRational]) -> Vec<BigRational> {
        let e = x.iter().fold(BigInt::one(), |l, v| num_integer::Integer::lcm(&l, v.denom()));
        let xs: Vec<BigInt> = x.iter().map(|v| v.numer() * (&e / v.denom())).collect();
        let rotated = int_row_times(&xs, &self.rot);
        // y_n = Y/(c b^{n−1}) = b e Y/(c e b^n), κ^n x R_n = c a^n X R_n/(c e b^n)
        let (scale_y, den) = if self.len == 0 {
            (e.clone(), &self.c * &e)
        } else {
            (&self.b * &e, &self.den * &self.b * &e)
        };
        self.numer
            .iter()
            .zip(rotated)
            .map(|(y, r)| BigRational::new(y * &scale_y + &self.c * &self.a_pow * r, den.clone()))
            .collect()
    }
}

fn int_row_times(x: &[BigInt], rot: &[Vec<i8>]) -> Vec<BigInt> {
    let d = x.len();
    let mut out = vec![BigInt::zero(); d];
    for i in 0..d {
        for j in 0..d {
            match rot[i][j] {
                1 => out[j] += &x[i],
                -1 => out[j] -= &x[i],
                _ => {}
            }
        }
    }
    out
}

fn int_mat_mul(a: &[Vec<i8>], b: &[Vec<i8>]) -> Vec<Vec<i8>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

#[derive(Debug, Clone)]
pub struct IfsSystem {
    dimension: usize,
    maps: Vec<SimilarityMap>,
    weights: Vec<f64>,
    ratio: f64,
    base: Vec<f64>,
    diam: f64,
    exact: Option<ExactIfs>,
}

impl IfsSystem {
    pub fn new(maps: Vec<SimilarityMap>, weights: Vec<f64>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::InvalidSystem("no maps".into()))?;
        let dimension = first.dimension();
        let ratio = first.ratio;
        for (s, m) in maps.iter().enumerate() {
            if m.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: m.dimension() });
            }
            if (m.ratio - ratio).abs() > RATIO_TOL {
                return Err(Error::InvalidSystem(format!(
                    "map {s} has ratio {} but the common ratio is {ratio}; per-map ratios are not supported",
                    m.ratio
                )));
            }
        }
        if weights.len() != maps.len() {
            return Err(Error::InvalidSystem(format!(
                "{} weights for {} maps",
                weights.len(),
                maps.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidSystem("weights must be strictly positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidSystem(format!("weights sum to {total}, not 1")));
        }
        let base = first.fixed_point();
        let mut sys = IfsSystem { dimension, maps, weights, ratio, base, diam: 0.0, exact: None };
        sys.diam = sys.compute_diam_estimate();
        sys.exact = sys.recognise_exact();
        Ok(sys)
    }

    /// Uniform weights.
    pub fn uniform(maps: Vec<SimilarityMap>) -> Result<Self> {
        let n = maps.len().max(1);
        Self::new(maps, vec![1.0 / n as f64; n])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn maps(&self) -> &[SimilarityMap] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn alphabet_size(&self) -> usize {
        self.maps.len()
    }

    /// The base point `α₀` of the coding map.
    pub fn base_point(&self) -> &[f64] {
        &self.base
    }

    /// Certified over-estimate of the attractor's diameter.
    pub fn diam_estimate(&self) -> f64 {
        self.diam
    }

    pub fn exact(&self) -> Option<&ExactIfs> {
        self.exact.as_ref()
    }

    /// Hausdorff dimension `log|E| / log(1/κ)` (valid under the open set
    /// condition).
    pub fn similarity_dimension(&self) -> f64 {
        (self.maps.len() as f64).ln() / (1.0 / self.ratio).ln()
    }

    pub fn validate_word(&self, word: &SymbolWord) -> Result<()> {
        match word.0.iter().find(|&&s| s >= self.maps.len()) {
            Some(&s) => Err(Error::InvalidArgument(format!(
                "symbol {s} outside alphabet of size {}",
                self.maps.len()
            ))),
            None => Ok(()),
        }
    }

    /// Default truncation depth `2⌈52 log 2 / |log κ|⌉`.
    pub fn default_depth(&self) -> usize {
        2 * (52.0 * std::f64::consts::LN_2 / self.ratio.ln().abs()).ceil() as usize
    }

    /// `φ_{b_1} ∘ … ∘ φ_{b_n}(base)`.
    pub fn apply_word(&self, word: &SymbolWord, base: &[f64]) -> Vec<f64> {
        word.0.iter().rev().fold(base.to_vec(), |z, &s| self.maps[s].apply(&z))
    }

    pub fn random_word<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> SymbolWord {
        let dist = WeightedIndex::new(&self.weights).expect("weights validated");
        SymbolWord((0..len).map(|_| dist.sample(rng)).collect())
    }

    fn compute_diam_estimate(&self) -> f64 {
        // depth-k cylinder points, capped so that |E|^k stays small
        let e = self.maps.len();
        let mut depth = 0;
        let mut count = 1usize;
        while depth < 8 && count.saturating_mul(e) <= 100_000 {
            depth += 1;
            count *= e;
        }
        let mut points = vec![self.base.clone()];
        for _ in 0..depth {
            points = points
                .iter()
                .flat_map(|p| self.maps.iter().map(move |m| m.apply(p)))
                .collect();
        }
        let d = self.dimension;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in &points {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let span = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        // every attractor point lies within κ^k R of a depth-k cylinder point,
        // R = max_s |φ_s(α₀) − α₀| / (1 − κ)
        let step = self
            .maps
            .iter()
            .map(|m| {
                let img = m.apply(&self.base);
                img.iter().zip(&self.base).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        let radius = step / (1.0 - self.ratio);
        span + 2.0 * self.ratio.powi(depth as i32) * radius
    }

    fn recognise_exact(&self) -> Option<ExactIfs> {
        let ratio = recognise_rational(self.ratio)?;
        let mut translations = Vec::with_capacity(self.maps.len());
        let mut rotations = Vec::with_capacity(self.maps.len());
        for m in &self.maps {
            let t: Option<Vec<BigRational>> = m.translation.iter().map(|&v| recognise_rational(v)).collect();
            translations.push(t?);
            let d = self.dimension;
            let mut rot = vec![vec![0i8; d]; d];
            for i in 0..d {
                for j in 0..d {
                    let v = m.rotation[(i, j)];
                    rot[i][j] = if v == 0.0 {
                        0
                    } else if v == 1.0 {
                        1
                    } else if v == -1.0 {
                        -1
                    } else {
                        return None;
                    };
                }
            }
            rotations.push(rot);
        }
        let base = exact_fixed_point(&ratio, &rotations[0], &translations[0])?;
        Some(ExactIfs { ratio, translations, rotations, base })
    }

    /// Exact coding point `φ_{b_1} ∘ … ∘ φ_{b_n}(α₀)` when the system has an
    /// exact form.
    pub fn exact_coding_point(&self, word: &SymbolWord) -> Option<Vec<BigRational>> {
        let ex = self.exact.as_ref()?;
        let mut walk = ExactPrefix::new(ex);
        for &s in word.symbols() {
            walk.push(s);
        }
        Some(walk.image(&ex.base))
    }

    pub fn to_description(&self) -> IfsDescription {
        IfsDescription {
            dimension: self.dimension,
            ratio: self.ratio,
            maps: self
                .maps
                .iter()
                .map(|m| MapDescription {
                    rotation: m.rotation.as_slice().to_vec(),
                    translation: m.translation.clone(),
                })
                .collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn check_hypotheses(&self, depth: usize) -> HypothesisReport {
        check_hypotheses(&self.maps, depth)
    }
}

fn exact_fixed_point(ratio: &BigRational, rot: &[Vec<i8>], y: &[BigRational]) -> Option<Vec<BigRational>> {
    // solve x M = y with M = I - κO, i.e. Mᵀ xᵀ = yᵀ
    let d = y.len();
    let mut a: Vec<Vec<BigRational>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let delta = if i == j { BigRational::one() } else { BigRational::zero() };
                    delta - ratio * BigRational::from_integer(BigInt::from(rot[j][i]))
                })
                .collect()
        })
        .collect();
    let mut b = y.to_vec();
    for col in 0..d {
        let pivot = (col..d).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot, col);
        b.swap(pivot, col);
        let p = a[col][col].clone();
        for j in 0..d {
            a[col][j] = &a[col][j] / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..d {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..d {
                    let v = &f * &a[col][j];
                    a[r][j] -= v;
                }
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    Some(b)
}

/// Finds a rational with denominator at most 10⁶ that rounds to `v`.
pub fn recognise_rational(v: f64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    const MAX_DEN: i128 = 1_000_000;
    let tol = 4.0 * f64::EPSILON * v.abs().max(1.0);
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > MAX_DEN {
            return None;
        }
        if ((p2 as f64) / (q2 as f64) - v).abs() <= tol {
            return Some(BigRational::new(BigInt::from(p2), BigInt::from(q2)));
        }
        let frac = x - a;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    None
}

/// Result of [`coding_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct CodedPoint {
    pub point: Vec<f64>,
    pub error_bound: f64,
}

pub fn coding_point(sys: &IfsSystem, word: &SymbolWord, base: &[f64]) -> Result<CodedPoint> {
    if word.is_empty() {
        return Err(Error::InvalidArgument("word must be nonempty".into()));
    }
    if base.len() != sys.dimension {
        return Err(Error::DimensionMismatch { expected: sys.dimension, got: base.len() });
    }
    sys.validate_word(word)?;
    let point = sys.apply_word(word, base);
    let error_bound = sys.ratio.powi(word.len() as i32) * sys.diam;
    Ok(CodedPoint { point, error_bound })
}

/// Samples of the Bernoulli measure `μ_K`: each point is the coding point
/// of an i.i.d. word of length `depth` drawn with the system's weights.
pub fn sample_fractal(sys: &IfsSystem, depth: usize, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
    Ok(sample_words(sys, depth, seed, count)?
        .par_iter()
        .map(|w| sys.apply_word(w, &sys.base))
        .collect())
}

/// The words behind [`sample_fractal`].
pub fn sample_words(sys: &IfsSystem, depth: usize, seed: u64, count: usize) -> Result<Vec<SymbolWord>> {
    if depth == 0 || count == 0 {
        return Err(Error::InvalidArgument("depth and count must be at least 1".into()));
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::task_rng(seed, i);
            sys.random_word(depth, &mut rng)
        })
        .collect())
}

/// The product Cantor system `x ↦ (x + v)/3`, `v ∈ {0, 2}^d`, with uniform
/// weights.
pub fn cantor_product(d: usize) -> Result<IfsSystem> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let maps = (0..1usize << d)
        .map(|mask| {
            let t = (0..d).map(|i| if mask >> i & 1 == 1 { 2.0 / 3.0 } else { 0.0 }).collect();
            SimilarityMap::scaling(1.0 / 3.0, t)
        })
        .collect::<Result<Vec<_>>>()?;
    IfsSystem::uniform(maps)
}

/// Builtin names: `cantor:d`.
pub fn builtin(name: &str) -> Result<IfsSystem> {
    match name.split_once(':') {
        Some(("cantor", d)) => {
            let d: usize = d.parse().map_err(|_| Error::InvalidArgument(format!("bad dimension in {name:?}")))?;
            cantor_product(d)
        }
        _ => Err(Error::InvalidArgument(format!("unknown builtin system {name:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub common_ratio: Verdict,
    pub open_set: Verdict,
    pub irreducible: Verdict,
    pub notes: Vec<String>,
}

pub fn check_hypotheses(maps: &[SimilarityMap], depth: usize) -> HypothesisReport {
    let mut notes = Vec::new();
    let ratio_ok = !maps.is_empty()
        && maps.iter().all(|m| m.ratio > 0.0 && m.ratio < 1.0)
        && maps.iter().all(|m| (m.ratio - maps[0].ratio).abs() <= RATIO_TOL)
        && maps.iter().all(|m| m.dimension() == maps[0].dimension());
    let common_ratio = if ratio_ok { Verdict::Pass } else { Verdict::Fail };
    if !ratio_ok {
        notes.push("maps do not share a single contraction ratio in (0, 1)".into());
        return HypothesisReport {
            common_ratio,
            open_set: Verdict::Inconclusive,
            irreducible: Verdict::Inconclusive,
            notes,
        };
    }
    let open_set = open_set_verdict(maps, depth, &mut notes);
    let irreducible = irreducibility_verdict(maps, depth, &mut notes);
    HypothesisReport { common_ratio, open_set, irreducible, notes }
}

fn is_signed_permutation(m: &Matrix) -> bool {
    m.as_slice().iter().all(|v| *v == 0.0 || v.abs() == 1.0)
}

/// Exact bounding box of the attractor for signed-permutation rotations, by
/// value iteration of the support function on `±e_i`.
fn attractor_box(maps: &[SimilarityMap]) -> Option<(Vec<f64>, Vec<f64>)> {
    if !maps.iter().all(|m| is_signed_permutation(&m.rotation)) {
        return None;
    }
    let d = maps[0].dimension();
    let kappa = maps[0].ratio;
    // h[2i] = max z_i, h[2i+1] = max -z_i
    let dir_index = |u: &[f64]| -> usize {
        let i = u.iter().position(|v| *v != 0.0).unwrap();
        2 * i + usize::from(u[i] < 0.0)
    };
    let dirs: Vec<Vec<f64>> = (0..2 * d)
        .map(|k| {
            let mut u = vec![0.0; d];
            u[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            u
        })
        .collect();
    // h(u) = max_s [ y_s·u + κ h(u O_sᵀ) ]
    let rotated: Vec<Vec<usize>> = maps
        .iter()
        .map(|m| {
            let ot = m.rotation.transpose();
            dirs.iter().map(|u| dir_index(&ot.left_apply(u).unwrap())).collect()
        })
        .collect();
    let mut h = vec![0.0; 2 * d];
    let iterations = ((1e-17f64).ln() / kappa.ln()).ceil() as usize + 10;
    for _ in 0..iterations {
        let next: Vec<f64> = (0..2 * d)
            .map(|k| {
                maps.iter()
                    .zip(&rotated)
                    .map(|(m, rot)| crate::linalg::dot(&m.translation, &dirs[k]) + kappa * h[rot[k]])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        h = next;
    }
    let lo = (0..d).map(|i| -h[2 * i + 1]).collect();
    let hi = (0..d).map(|i| h[2 * i]).collect();
    Some((lo, hi))
}

fn image_box(m: &SimilarityMap, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = m.apply(lo);
    let b = m.apply(hi);
    let l = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
    let h = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
    (l, h)
}

fn open_set_verdict(maps: &[SimilarityMap], depth: usize, notes: &mut Vec<String>) -> Verdict {
    const EPS: f64 = 1e-12;
    if let Some((lo, hi)) = attractor_box(maps) {
        let degenerate = lo.iter().zip(&hi).any(|(l, h)| h - l <= EPS);
        if !degenerate {
            let images: Vec<_> = maps.iter().map(|m| image_box(m, &lo, &hi)).collect();
            let inside = images.iter().all(|(l, h)| {
                l.iter().zip(&lo).all(|(a, b)| *a >= b - EPS) && h.iter().zip(&hi).all(|(a, b)| *a <= b + EPS)
            });
            // open boxes are disjoint iff some coordinate interval pair is
            // disjoint up to touching
            let disjoint = (0..images.len()).all(|i| {
                (i + 1..images.len()).all(|j| {
                    (0..lo.len()).any(|k| images[i].1[k] <= images[j].0[k] + EPS || images[j].1[k] <= images[i].0[k] + EPS)
                })
            });
            if inside && disjoint {
                notes.push("open bounding box of the attractor is an open-set witness".into());
                return Verdict::Pass;
            }
        } else {
            notes.push("attractor bounding box is degenerate".into());
        }
    } else {
        notes.push("bounding-box candidate requires signed-permutation rotations".into());
    }
    // look for exactly overlapping cylinders, which rule the condition out
    let e = maps.len();
    let mut level = 0;
    let mut count = 1usize;
    while level < depth && count.saturating_mul(e) <= 4096 {
        level += 1;
        count *= e;
    }
    let mut cylinders = vec![SimilarityMap::identity(maps[0].dimension())];
    for _ in 0..level {
        cylinders = cylinders
            .iter()
            .flat_map(|c| maps.iter().map(move |m| compose(c, m).unwrap()))
            .collect();
    }
    for i in 0..cylinders.len() {
        for j in i + 1..cylinders.len() {
            let (a, b) = (&cylinders[i], &cylinders[j]);
            let same_translation = a.translation.iter().zip(&b.translation).all(|(x, y)| (x - y).abs() <= 1e-12);
            if same_translation && a.rotation.max_abs_diff(&b.rotation) <= 1e-12 {
                notes.push(format!("two distinct depth-{level} cylinders coincide"));
                return Verdict::Fail;
            }
        }
    }
    notes.push(format!("no coincident cylinders up to depth {level}"));
    Verdict::Inconclusive
}

fn affine_rank(points: &[Vec<f64>]) -> usize {
    let Some(origin) = points.first() else { return 0 };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in points.iter().skip(1) {
        let mut v: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
        for b in &basis {
            let c = crate::linalg::dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let n = crate::linalg::euclid_norm(&v);
        if n > 1e-9 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

fn irreducibility_verdict(maps: &[SimilarityMap], depth: usize, notes: &mut Vec<String>) -> Verdict {
    let d = maps[0].dimension();
    let start = maps[0].fixed_point();
    let mut orbit = vec![start.clone()];
    let mut frontier = vec![start];
    for _ in 0..depth.max(1) {
        if orbit.len() > 20_000 {
            break;
        }
        frontier = frontier.iter().flat_map(|p| maps.iter().map(move |m| m.apply(p))).collect();
        orbit.extend(frontier.iter().cloned());
        if affine_rank(&orbit) == d {
            notes.push("orbit of the base point spans the ambient space".into());
            return Verdict::Pass;
        }
    }
    notes.push(format!("orbit of the base point spans an affine subspace of dimension {}", affine_rank(&orbit)));
    Verdict::Inconclusive
}

/// JSON description `{dimension, ratio, maps: [{rotation, translation}], weights}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsDescription {
    pub dimension: usize,
    pub ratio: f64,
    pub maps: Vec<MapDescription>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDescription {
    /// Row-major `d × d`.
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
}

impl IfsDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }

    pub fn to_system(&self) -> Result<IfsSystem> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::Schema("dimension must be positive".into()));
        }
        if self.maps.is_empty() {
            return Err(Error::Schema("maps must be nonempty".into()));
        }
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(s, m)| {
                if m.rotation.len() != d * d {
                    return Err(Error::Schema(format!("map {s}: rotation needs {} entries", d * d)));
                }
                if m.translation.len() != d {
                    return Err(Error::Schema(format!("map {s}: translation needs {d} entries")));
                }
                let rot = Matrix::from_row_major(d, d, m.rotation.clone())?;
                SimilarityMap::new(self.ratio, rot, m.translation.clone())
                    .map_err(|e| Error::Schema(format!("map {s}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        IfsSystem::new(maps, self.weights.clone()).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Rational → `f64`, robust to huge numerators and denominators.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let ln = crate::orbit::ln_abs_big(r.numer()) - crate::orbit::ln_abs_big(r.denom());
    sign * ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn third(t: f64) -> SimilarityMap {
        SimilarityMap::scaling(1.0 / 3.0, vec![t]).unwrap()
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let phi = third(2.0 / 3.0);
        let c = compose(&SimilarityMap::identity(1), &phi).unwrap();
        assert_eq!(c, phi);
    }

    #[test]
    fn compose_thirds_by_hand() {
        // x/3 ∘ (x+2)/3 = x/9 + 2/9
        let c = compose(&third(0.0), &third(2.0 / 3.0)).unwrap();
        assert!((c.ratio() - 1.0 / 9.0).abs() < 1e-16);
        assert!((c.translation()[0] - 2.0 / 9.0).abs() < 1e-16);
        for x in [0.0, 0.3, 1.0] {
            assert!((c.apply(&[x])[0] - (x / 9.0 + 2.0 / 9.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_dimension_mismatch() {
        let a = third(0.0);
        let b = SimilarityMap::scaling(0.5, vec![0.0, 0.0]).unwrap();
        assert!(matches!(compose(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn map_invariants_enforced() {
        assert!(SimilarityMap::scaling(1.0, vec![0.0]).is_err());
        assert!(SimilarityMap::scaling(0.0, vec![0.0]).is_err());
        let skew = Matrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(SimilarityMap::new(0.5, skew, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn coding_point_cantor_examples() {
        let c = cantor_product(1).unwrap();
        let zeros = SymbolWord(vec![0; 25]);
        let p = coding_point(&c, &zeros, &[0.0]).unwrap();
        assert_eq!(p.point[0], 0.0);
        assert!((p.error_bound / (3f64.powi(-25) * c.diam_estimate()) - 1.0).abs() < 1e-12);

        let twos = SymbolWord(vec![1; 20]);
        let p = coding_point(&c, &twos, &[0.0]).unwrap();
        // Σ_{k≤20} 2·3^{-k} = 1 − 3^{-20}
        assert!((p.point[0] - 1.0).abs() <= 3f64.powi(-20) + 1e-15);

        let alt = SymbolWord((0..30).map(|k| 1 - k % 2).collect());
        let p = coding_point(&c, &alt, &[0.0]).unwrap();
        assert!((p.point[0] - 0.75).abs() <= 3f64.powi(-30) + 1e-15);
    }

    #[test]
    fn coding_point_rejects_empty_word() {
        let c = cantor_product(1).unwrap();
        assert!(coding_point(&c, &SymbolWord(vec![]), &[0.0]).is_err());
    }

    #[test]
    fn cantor_product_structure() {
        let c1 = cantor_product(1).unwrap();
        assert_eq!(c1.alphabet_size(), 2);
        assert_eq!(c1.maps()[1].translation(), &[2.0 / 3.0]);
        let c2 = cantor_product(2).unwrap();
        assert_eq!(c2.alphabet_size(), 4);
        assert!(c2.weights().iter().all(|w| *w == 0.25));
        assert!((c1.diam_estimate() - 1.0).abs() < 1e-3 && c1.diam_estimate() >= 1.0);
        assert!(cantor_product(0).is_err());
        assert!(c2.exact().is_some());
        assert!((c1.similarity_dimension() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn samples_carry_cantor_digits() {
        let c = cantor_product(1).unwrap();
        let pts = sample_fractal(&c, 40, 11, 3).unwrap();
        assert_eq!(pts.len(), 3);
        for p in pts {
            let x = p[0];
            assert!((0.0..=1.0).contains(&x));
            // first 25 base-3 digits must avoid 1 (float resolution limits the rest)
            let mut y = x;
            for _ in 0..25 {
                y *= 3.0;
                let digit = y.floor();
                assert_ne!(digit as i64, 1, "digit 1 in {x}");
                y -= digit;
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = cantor_product(2).unwrap();
        assert_eq!(sample_fractal(&c, 30, 5, 50).unwrap(), sample_fractal(&c, 30, 5, 50).unwrap());
        assert_ne!(sample_fractal(&c, 30, 5, 50).unwrap(), sample_fractal(&c, 30, 6, 50).unwrap());
    }

    #[test]
    fn cantor_mean_is_one_half() {
        let c = cantor_product(1).unwrap();
        let pts = sample_fractal(&c, 40, 1, 100_000).unwrap();
        let mean = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn hypotheses_for_cantor_square() {
        let r = cantor_product(2).unwrap().check_hypotheses(4);
        assert_eq!((r.common_ratio, r.open_set, r.irreducible), (Verdict::Pass, Verdict::Pass, Verdict::Pass));
    }

    #[test]
    fn mixed_ratios_fail_common_ratio() {
        let maps = vec![
            SimilarityMap::scaling(0.5, vec![0.0]).unwrap(),
            SimilarityMap::scaling(1.0 / 3.0, vec![0.5]).unwrap(),
        ];
        assert_eq!(check_hypotheses(&maps, 3).common_ratio, Verdict::Fail);
        assert!(IfsSystem::uniform(maps).is_err());
    }

    #[test]
    fn single_map_is_not_certified_irreducible() {
        // fixes the line y = 0 (and every point's orbit is its own trajectory)
        let maps = vec![SimilarityMap::scaling(0.5, vec![0.5, 0.0]).unwrap()];
        assert_eq!(check_hypotheses(&maps, 5).irreducible, Verdict::Inconclusive);
    }

    #[test]
    fn overlapping_cylinders_fail_open_set() {
        // a repeated map makes two cylinders coincide
        let m = SimilarityMap::scaling(0.5, vec![0.0]).unwrap();
        let maps = vec![m.clone(), m, SimilarityMap::scaling(0.5, vec![0.5]).unwrap()];
        assert_eq!(check_hypotheses(&maps, 2).open_set, Verdict::Fail);
    }

    #[test]
    fn weights_validated() {
        let maps = cantor_product(1).unwrap().maps().to_vec();
        assert!(IfsSystem::new(maps.clone(), vec![0.5, 0.6]).is_err());
        assert!(IfsSystem::new(maps.clone(), vec![1.0, 0.0]).is_err());
        assert!(IfsSystem::new(maps, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn json_round_trip_and_strictness() {
        let c = cantor_product(2).unwrap();
        let text = c.to_description().to_json();
        let back = IfsDescription::from_json(&text).unwrap().to_system().unwrap();
        assert_eq!(back.maps(), c.maps());
        let bad = text.replacen("\"weights\"", "\"wieghts\"", 1);
        assert!(IfsDescription::from_json(&bad).is_err());
        let extra = text.replacen('{', "{\"colour\": 1,", 1);
        assert!(IfsDescription::from_json(&extra).is_err());
    }

    #[test]
    fn exact_coding_point_matches_float() {
        let c = cantor_product(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let w = c.random_word(30, &mut rng);
        let exact = c.exact_coding_point(&w).unwrap();
        let float = c.apply_word(&w, c.base_point());
        for (e, f) in exact.iter().zip(&float) {
            assert!((rational_to_f64(e) - f).abs() < 1e-15);
        }
    }

    #[test]
    fn recognises_simple_rationals() {
        assert_eq!(recognise_rational(1.0 / 3.0).unwrap(), BigRational::new(1.into(), 3.into()));
        assert_eq!(recognise_rational(-0.75).unwrap(), BigRational::new((-3).into(), 4.into()));
        assert!(recognise_rational(std::f64::consts::PI).is_none());
    }

    #[test]
    fn histogram_matches_weights() {
        // χ² over depth-2 cylinders of a non-uniform system
        let maps = cantor_product(1).unwrap().maps().to_vec();
        let sys = IfsSystem::new(maps, vec![0.3, 0.7]).unwrap();
        let words = sample_words(&sys, 10, 4, 100_000).unwrap();
        let mut counts = [0f64; 4];
        for w in &words {
            counts[w.0[0] * 2 + w.0[1]] += 1.0;
        }
        let n = words.len() as f64;
        let chi2: f64 = (0..4)
            .map(|k| {
                let p = sys.weights()[k / 2] * sys.weights()[k % 2];
                (counts[k] - n * p).powi(2) / (n * p)
            })
            .sum();
        // 3 degrees of freedom, 99.9% quantile 16.27
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }

    proptest::proptest! {
        #[test]
        fn coding_point_concatenation(u in proptest::collection::vec(0usize..4, 1..30),
                                      v in proptest::collection::vec(0usize..4, 1..30)) {
            let c = cantor_product(2).unwrap();
            let (u, v) = (SymbolWord(u), SymbolWord(v));
            let base = c.base_point().to_vec();
            let inner = coding_point(&c, &v, &base).unwrap().point;
            let lhs = coding_point(&c, &u.concat(&v), &base).unwrap().point;
            let rhs = coding_point(&c, &u, &inner).unwrap().point;
            for (a, b) in lhs.iter().zip(&rhs) {
                proptest::prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }
}
