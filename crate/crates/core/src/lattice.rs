//! Sup-norm shortest vectors and the height function on the space of
//! unimodular lattices.
//!
//! A coset `gΓ` is modelled by the lattice spanned by the rows of `g⁻¹`; for
//! `g = a_t u_x` these are the vectors `(e^{-t} q, e^{t/d}(q x + p))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::GroupElement;
use crate::linalg::{dot, sup_norm, Matrix};

/// Largest lattice rank for which enumeration is certified.
pub const MAX_CERTIFIED_RANK: usize = 6;

const LLL_DELTA: f64 = 0.99;
const MAX_LLL_ITERATIONS: usize = 100_000;
const MAX_ENUM_NODES: u64 = 50_000_000;
const TIE_REL: f64 = 1e-12;

/// Gram–Schmidt data: `mu[i][j]` for `j < i` and `|b*_i|²`.
fn gram_schmidt(b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = b.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = if norms[j] > 0.0 { dot(&b[i], &star[j]) / norms[j] } else { 0.0 };
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= mu[i][j] * sk;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (mu, norms)
}

fn check_basis(basis: &[Vec<f64>]) -> Result<usize> {
    let n = basis.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    if n > MAX_CERTIFIED_RANK {
        return Err(Error::UncertifiedDimension(n));
    }
    for row in basis {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularBasis);
        }
    }
    Ok(n)
}

fn sub_scaled_i64(target: &mut [i64], src: &[i64], q: i64) -> Result<()> {
    for (t, s) in target.iter_mut().zip(src) {
        *t = s
            .checked_mul(q)
            .and_then(|v| t.checked_sub(v))
            .ok_or_else(|| Error::ResourceLimit("basis transform overflowed i64".into()))?;
    }
    Ok(())
}

/// An LLL-reduced basis together with the unimodular transform `U`
/// satisfying `reduced = U · original`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub basis: Vec<Vec<f64>>,
    pub transform: Vec<Vec<i64>>,
}

/// Floating-point LLL reduction with parameter `0.99`.
pub fn lll_reduce(basis: &[Vec<f64>]) -> Result<Reduction> {
    let n = check_basis(basis)?;
    let mut b = basis.to_vec();
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let (mut mu, mut norms) = gram_schmidt(&b);
    let scale = b.iter().map(|r| dot(r, r)).fold(0.0, f64::max);
    if !scale.is_finite() || norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::SingularBasis);
    }
    let mut k = 1;
    let mut iterations = 0;
    while k < n {
        iterations += 1;
        if iterations > MAX_LLL_ITERATIONS {
            return Err(Error::ResourceLimit("LLL did not terminate".into()));
        }
        // size reduction, repeated while rounding leaves large coefficients
        for _ in 0..64 {
            let mut changed = false;
            for j in (0..k).rev() {
                let q = mu[k][j].round();
                if q != 0.0 {
                    if q.abs() > 9.0e15 {
                        return Err(Error::ResourceLimit("size-reduction coefficient too large".into()));
                    }
                    let (head, tail) = b.split_at_mut(k);
                    for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= q * y;
                    }
                    let (uh, ut) = u.split_at_mut(k);
                    sub_scaled_i64(&mut ut[0], &uh[j], q as i64)?;
                    for l in 0..j {
                        mu[k][l] -= q * mu[j][l];
                    }
                    mu[k][j] -= q;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let gs = gram_schmidt(&b);
            mu = gs.0;
            norms = gs.1;
            if (0..k).all(|j| mu[k][j].abs() <= 0.5 + 1e-9) {
                break;
            }
        }
        if norms[k] >= (LLL_DELTA - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            let gs = gram_schmidt(&b);
            mu = gs.0;
            norms = gs.1;
            k = (k - 1).max(1);
        }
    }
    if norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::SingularBasis);
    }
    Ok(Reduction { basis: b, transform: u })
}

/// `c · B` for an integer coefficient row.
pub fn combine(coeffs: &[i64], basis: &[Vec<f64>]) -> Vec<f64> {
    let n = basis[0].len();
    let mut v = vec![0.0; n];
    for (&c, row) in coeffs.iter().zip(basis) {
        if c != 0 {
            let c = c as f64;
            for (vi, bi) in v.iter_mut().zip(row) {
                *vi += c * bi;
            }
        }
    }
    v
}

/// Flip the sign so that the first nonzero entry is positive.
pub fn canonical_sign(w: &mut [i64]) {
    if w.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
        for c in w.iter_mut() {
            *c = -*c;
        }
    }
}

/// Exact sup-norm minimum `Δ` of a lattice given by basis rows, with a
/// witness coefficient vector relative to that basis.
///
/// The basis is LLL-reduced, then every lattice vector of Euclidean length
/// at most `√n · (best sup norm so far)` is enumerated (Fincke–Pohst), so
/// nothing shorter in sup norm can be missed.
pub fn shortest_vector_basis(basis: &[Vec<f64>]) -> Result<(f64, Vec<i64>)> {
    let n = check_basis(basis)?;
    let red = lll_reduce(basis)?;
    let (mu, norms) = gram_schmidt(&red.basis);

    let mut best = f64::INFINITY;
    for row in &red.basis {
        best = best.min(sup_norm(row));
    }
    let mut candidates: Vec<Vec<i64>> = Vec::new();

    let mut x = vec![0i64; n];
    let mut nodes = 0u64;
    let radius_sq = |best: f64| (n as f64) * best * best * (1.0 + 1e-9);
    enumerate(
        n - 1,
        0.0,
        &mut x,
        &mu,
        &norms,
        &red.basis,
        &mut best,
        &radius_sq,
        &mut candidates,
        &mut nodes,
    )?;

    // re-evaluate near-ties on the original basis, then pick the canonical one
    let to_original = |c: &[i64]| -> Result<Vec<i64>> {
        let mut w = vec![0i64; n];
        for (i, &ci) in c.iter().enumerate() {
            if ci != 0 {
                for j in 0..n {
                    w[j] = red.transform[i][j]
                        .checked_mul(ci)
                        .and_then(|v| w[j].checked_add(v))
                        .ok_or_else(|| Error::ResourceLimit("witness overflowed i64".into()))?;
                }
            }
        }
        canonical_sign(&mut w);
        Ok(w)
    };
    for (i, row) in red.basis.iter().enumerate() {
        if sup_norm(row) <= best * (1.0 + 1e-9) {
            let mut c = vec![0i64; n];
            c[i] = 1;
            candidates.push(c);
        }
    }
    let mut scored: Vec<(f64, Vec<i64>)> = Vec::new();
    for c in &candidates {
        let w = to_original(c)?;
        if w.iter().all(|&v| v == 0) {
            continue;
        }
        scored.push((sup_norm(&combine(&w, basis)), w));
    }
    let min = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if !min.is_finite() || min <= 0.0 {
        return Err(Error::SingularBasis);
    }
    let chosen = scored
        .into_iter()
        .filter(|s| s.0 <= min * (1.0 + TIE_REL))
        .min_by(|a, b| a.1.cmp(&b.1))
        .unwrap();
    Ok(chosen)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    level: usize,
    partial: f64,
    x: &mut Vec<i64>,
    mu: &[Vec<f64>],
    norms: &[f64],
    basis: &[Vec<f64>],
    best: &mut f64,
    radius_sq: &dyn Fn(f64) -> f64,
    candidates: &mut Vec<Vec<i64>>,
    nodes: &mut u64,
) -> Result<()> {
    let n = x.len();
    let center: f64 = -(level + 1..n).map(|j| x[j] as f64 * mu[j][level]).sum::<f64>();
    let r2 = radius_sq(*best);
    let slack = r2 - partial;
    if slack < 0.0 {
        return Ok(());
    }
    let width = (slack / norms[level]).sqrt();
    let lo = (center - width).ceil() as i64;
    let hi = (center + width).floor() as i64;
    for xi in lo..=hi {
        *nodes += 1;
        if *nodes > MAX_ENUM_NODES {
            return Err(Error::ResourceLimit("enumeration node budget exhausted".into()));
        }
        let off = xi as f64 - center;
        let p = partial + off * off * norms[level];
        if p > radius_sq(*best) {
            continue;
        }
        x[level] = xi;
        if level == 0 {
            if x.iter().all(|&c| c == 0) {
                continue;
            }
            let s = sup_norm(&combine(x, basis));
            if s <= *best * (1.0 + 1e-9) {
                if s < *best {
                    *best = s;
                    let cut = *best * (1.0 + 1e-9);
                    candidates.retain(|c| sup_norm(&combine(c, basis)) <= cut);
                }
                candidates.push(x.clone());
            }
        } else {
            enumerate(level - 1, p, x, mu, norms, basis, best, radius_sq, candidates, nodes)?;
        }
    }
    x[level] = 0;
    Ok(())
}

/// Brute-force sup-norm minimum over coefficient vectors with entries in
/// `[-bound, bound]` (an oracle for tests).
pub fn brute_force_shortest(basis: &[Vec<f64>], bound: i64) -> (f64, Vec<i64>) {
    let n = basis.len();
    let mut c = vec![-bound; n];
    let mut best = (f64::INFINITY, vec![0; n]);
    loop {
        if c.iter().any(|&v| v != 0) {
            let s = sup_norm(&combine(&c, basis));
            if s < best.0 {
                best = (s, c.clone());
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            if c[i] < bound {
                c[i] += 1;
                break;
            }
            c[i] = -bound;
            i += 1;
        }
    }
}

/// Rows of `g⁻¹`.
pub fn dual_basis(g: &GroupElement) -> Result<Matrix> {
    g.matrix().inverse()
}

/// `Δ(gΓ)` and a witness `c` with `Δ = |c g⁻¹|_∞`.
pub fn shortest_vector(g: &GroupElement) -> Result<(f64, Vec<i64>)> {
    let n = g.size();
    if n > MAX_CERTIFIED_RANK {
        return Err(Error::UncertifiedDimension(n));
    }
    let dual = dual_basis(g)?;
    shortest_vector_basis(&dual.to_rows())
}

/// `l(gΓ) = log Δ⁻¹`.
pub fn height(g: &GroupElement) -> Result<f64> {
    Ok(-shortest_vector(g)?.0.ln())
}

/// Height of the lattice spanned by the given rows.
pub fn height_of_basis(basis: &[Vec<f64>]) -> Result<f64> {
    Ok(-shortest_vector_basis(basis)?.0.ln())
}

/// A point of `X` with its cached minimal vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub element: GroupElement,
    pub dual_basis: Matrix,
    pub delta: f64,
    pub height: f64,
    pub witness: Vec<i64>,
}

impl LatticePoint {
    pub fn new(element: GroupElement) -> Result<Self> {
        let dual = dual_basis(&element)?;
        let residual = element.matrix().mul(&dual)?.max_abs_diff(&Matrix::identity(element.size()));
        if !(residual <= 1e-9 * element.matrix().max_abs().max(1.0) * dual.max_abs().max(1.0)) {
            return Err(Error::SingularBasis);
        }
        let (delta, witness) = shortest_vector_basis(&dual.to_rows())?;
        Ok(LatticePoint { element, dual_basis: dual, delta, height: -delta.ln(), witness })
    }
}

/// The sublevel set `Y_L = {l ≤ L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactWindow {
    pub level: f64,
    pub min_delta: f64,
    pub q_const: f64,
}

impl CompactWindow {
    pub fn new(level: f64) -> Self {
        CompactWindow { level, min_delta: (-level).exp(), q_const: level }
    }

    pub fn contains_height(&self, h: f64) -> bool {
        h <= self.level
    }
}

pub fn in_window(point: &GroupElement, window: &CompactWindow) -> Result<bool> {
    Ok(window.contains_height(height(point)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::diagonal_point;

    #[test]
    fn identity_lattice() {
        for n in 2..=6 {
            let (delta, w) = shortest_vector(&GroupElement::identity(n)).unwrap();
            assert_eq!(delta, 1.0);
            assert_eq!(w.iter().filter(|&&c| c != 0).count(), 1);
            assert_eq!(height(&GroupElement::identity(n)).unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_examples() {
        let (delta, _) = shortest_vector(&diagonal_point(&[0.0], 1.0)).unwrap();
        assert!((delta - 0.3678794).abs() < 1e-7);
        let t = 2f64.ln() / 2.0;
        let g = diagonal_point(&[0.5], t);
        let (delta, w) = shortest_vector(&g).unwrap();
        let oracle = brute_force_shortest(&dual_basis(&g).unwrap().to_rows(), 50);
        assert!((delta - oracle.0).abs() < 1e-12);
        assert!((delta - 0.7071068).abs() < 1e-7);
        // (1, 0) and (1, -1) tie at 2^{-1/2}
        assert!(w == vec![1, 0] || w == vec![1, -1]);
        for d in 1..4 {
            for t in [0.0, 0.5, 3.0, 7.5] {
                let h = height(&diagonal_point(&vec![0.0; d], t)).unwrap();
                assert!((h - t).abs() < 1e-10, "d={d} t={t} h={h}");
            }
        }
    }

    #[test]
    fn windows() {
        assert!(in_window(&GroupElement::identity(2), &CompactWindow::new(0.1)).unwrap());
        assert!(!in_window(&diagonal_point(&[0.0], 5.0), &CompactWindow::new(1.0)).unwrap());
        assert!(CompactWindow::new(2.0).contains_height(2.0));
        let w = CompactWindow::new(1.7);
        assert!((w.min_delta * w.level.exp() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_limit() {
        assert!(matches!(shortest_vector(&GroupElement::identity(7)), Err(Error::UncertifiedDimension(7))));
    }

    #[test]
    fn lll_transform_is_consistent() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![1000.3, 1.0, 0.0], vec![-77.0, 55.5, 0.01]];
        let red = lll_reduce(&basis).unwrap();
        for (row, u) in red.basis.iter().zip(&red.transform) {
            let v = combine(u, &basis);
            for (a, b) in row.iter().zip(&v) {
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn singular_basis_rejected() {
        let basis = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(shortest_vector_basis(&basis), Err(Error::SingularBasis)));
    }
}
