//! Similarity maps as elements of `SL(d+1, R)`.
//!
//! The parabolic group `P = AKU` consists of matrices
//! `[[e^t, -e^t α], [0, e^{-t/d} O]] = a_t · O' · u_α` and acts on row vectors
//! `β ∈ R^d` by similarities:
//!
//! * `ρ(u_α) β = β − α`
//! * `ρ(a_t) β = e^{t + t/d} β`
//! * `ρ(O') β = β O⁻¹`
//!
//! A similarity `φ` is sent to `h = φ⁻¹`, i.e. the element with `ρ(h⁻¹) = φ`,
//! so that a word `b_1 … b_n` gives `h_{b_1^n} = h_{b_n} ⋯ h_{b_1}` with
//! `ρ(h_{b_1^n}⁻¹) = φ_{b_1} ∘ … ∘ φ_{b_n}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{IfsSystem, SimilarityMap, SymbolWord};
use crate::linalg::Matrix;
use crate::seeds;

const DET_TOL: f64 = 1e-9;
const RENORM_TRIGGER: f64 = 1e-11;
const P_TOL: f64 = 1e-10;
const OVERFLOW_LIMIT: f64 = 1e300;

/// A unimodular matrix together with the accumulated size of the
/// determinant corrections applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    matrix: Matrix,
    log_det_drift: f64,
}

impl GroupElement {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() < 2 {
            return Err(Error::InvalidArgument("group elements are square of size at least 2".into()));
        }
        let det = matrix.det();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidArgument(format!("determinant {det} is not 1")));
        }
        Ok(GroupElement { matrix, log_det_drift: 0.0 }.renormalized())
    }

    /// Scales a matrix with positive determinant onto `SL`.
    pub fn from_unnormalized(matrix: Matrix) -> Result<Self> {
        let det = matrix.det();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvalidArgument(format!("determinant {det} is not positive")));
        }
        let n = matrix.rows() as f64;
        Ok(GroupElement { matrix: matrix.scale(det.powf(-1.0 / n)), log_det_drift: 0.0 })
    }

    pub fn identity(size: usize) -> Self {
        GroupElement { matrix: Matrix::identity(size), log_det_drift: 0.0 }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn log_det_drift(&self) -> f64 {
        self.log_det_drift
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// The `d` of `SL(d+1)`.
    pub fn d(&self) -> usize {
        self.matrix.rows() - 1
    }

    fn renormalized(mut self) -> Self {
        let det = self.matrix.det();
        if (det - 1.0).abs() > RENORM_TRIGGER && det > 0.0 {
            let n = self.matrix.rows() as f64;
            self.matrix = self.matrix.scale(det.powf(-1.0 / n));
            self.log_det_drift += det.ln().abs();
        }
        self
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        let matrix = self.matrix.mul(&other.matrix)?;
        Ok(GroupElement { matrix, log_det_drift: self.log_det_drift + other.log_det_drift }.renormalized())
    }

    fn mul_compensated(&self, other: &GroupElement) -> Result<GroupElement> {
        let n = self.size();
        if other.size() != n {
            return Err(Error::DimensionMismatch { expected: n, got: other.size() });
        }
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = dot2((0..n).map(|k| (self.matrix[(i, k)], other.matrix[(k, j)])));
            }
        }
        Ok(GroupElement { matrix: out, log_det_drift: self.log_det_drift + other.log_det_drift }.renormalized())
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        Ok(GroupElement { matrix: self.matrix.inverse()?, log_det_drift: self.log_det_drift })
    }

    /// Whether the matrix has the block shape of `P` to tolerance `tol`
    /// (relative to the largest entry).
    pub fn is_parabolic(&self, tol: f64) -> bool {
        p_structure_defect(&self.matrix).is_some_and(|defect| defect <= tol)
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Twice-working-precision dot product.
fn dot2(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in terms {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let (s2, se) = two_sum(s, p);
        s = s2;
        c += se + pe;
    }
    s + c
}

/// Relative distance of `m` from the shape `[[λ, w], [0, λ^{-1/d} O]]`,
/// or `None` when `λ ≤ 0`.
fn p_structure_defect(m: &Matrix) -> Option<f64> {
    let n = m.rows();
    let d = (n - 1) as f64;
    let lambda = m[(0, 0)];
    if !(lambda > 0.0) {
        return None;
    }
    let scale = m.max_abs().max(1.0);
    let mut defect: f64 = (1..n).map(|i| m[(i, 0)].abs()).fold(0.0, f64::max) / scale;
    let o = m.lower_block().scale(lambda.powf(1.0 / d));
    defect = defect.max(o.orthogonality_defect());
    Some(defect)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FlowElement {
    /// `a_t = diag(e^t, e^{-t/d} I_d)`.
    Diag { t: f64 },
    /// `u_α = [[1, -α], [0, I_d]]`.
    Unipotent { alpha: Vec<f64> },
    /// `O' = [[1, 0], [0, O]]`.
    Rotation { rotation: Matrix },
    /// `g_u = a_{-d log u / (d+1)}`.
    Gt { u: f64 },
}

impl FlowElement {
    pub fn to_group(&self, d: usize) -> Result<GroupElement> {
        match self {
            FlowElement::Diag { t } => Ok(diag_element(d, *t)),
            FlowElement::Unipotent { alpha } => {
                if alpha.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: alpha.len() });
                }
                Ok(unipotent(alpha))
            }
            FlowElement::Rotation { rotation } => {
                if rotation.rows() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: rotation.rows() });
                }
                if rotation.orthogonality_defect() > 1e-12 {
                    return Err(Error::InvalidArgument("rotation is not orthogonal".into()));
                }
                GroupElement::new(Matrix::block_diag_one(rotation))
            }
            FlowElement::Gt { u } => {
                if !(*u > 0.0) {
                    return Err(Error::InvalidArgument("g_u needs u > 0".into()));
                }
                Ok(diag_element(d, gt_time(d, *u)))
            }
        }
    }
}

/// The diagonal time of `g_u`: `-d log u / (d+1)`.
pub fn gt_time(d: usize, u: f64) -> f64 {
    let d = d as f64;
    -d * u.ln() / (d + 1.0)
}

/// `a_t`.
pub fn diag_element(d: usize, t: f64) -> GroupElement {
    let mut diag = vec![(-t / d as f64).exp(); d + 1];
    diag[0] = t.exp();
    GroupElement { matrix: Matrix::diagonal(&diag), log_det_drift: 0.0 }
}

/// `u_α`.
pub fn unipotent(alpha: &[f64]) -> GroupElement {
    let n = alpha.len() + 1;
    let mut m = Matrix::identity(n);
    for (j, a) in alpha.iter().enumerate() {
        m[(0, j + 1)] = -a;
    }
    GroupElement { matrix: m, log_det_drift: 0.0 }
}

/// `ρ(p) β` for `p ∈ P`.
pub fn rho_apply(p: &GroupElement, beta: &[f64]) -> Result<Vec<f64>> {
    let d = p.d();
    if beta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: beta.len() });
    }
    match p_structure_defect(p.matrix()) {
        Some(defect) if defect <= P_TOL => {}
        _ => return Err(Error::NotParabolic("rho is only defined on P".into())),
    }
    // p u_{-β} = u_{-β'} · (AK part)  ⇒  β' = (λβ + w) M⁻¹
    let m = p.matrix();
    let lambda = m[(0, 0)];
    let shifted: Vec<f64> = (0..d).map(|j| lambda * beta[j] + m[(0, j + 1)]).collect();
    let lower = m.lower_block();
    let lower_inv = lower.inverse()?;
    lower_inv.left_apply(&shifted)
}

/// `h = φ⁻¹` as a group element.
pub fn similarity_to_group(phi: &SimilarityMap) -> Result<GroupElement> {
    let kappa = phi.ratio();
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidMap(format!("ratio {kappa} is not contracting")));
    }
    let o = phi.rotation();
    if o.det() < 0.0 {
        return Err(Error::InvalidMap("orientation-reversing rotation does not lift to SL(d+1)".into()));
    }
    let d = phi.dimension();
    let df = d as f64;
    // h⁻¹ = [[λ, y M], [0, M]], λ = κ^{d/(d+1)}, M = λ^{-1/d} Oᵀ, so
    // h = [[1/λ, -y/λ], [0, λ^{1/d} O]]
    let lambda = kappa.powf(df / (df + 1.0));
    let n = d + 1;
    let mut m = Matrix::zeros(n, n);
    m[(0, 0)] = 1.0 / lambda;
    for j in 0..d {
        m[(0, j + 1)] = -phi.translation()[j] / lambda;
    }
    let s = lambda.powf(1.0 / df);
    for i in 0..d {
        for j in 0..d {
            m[(i + 1, j + 1)] = s * o[(i, j)];
        }
    }
    Ok(GroupElement { matrix: m, log_det_drift: 0.0 })
}

/// One step of the random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStep {
    pub symbol: usize,
    pub element: GroupElement,
    pub diag_time: f64,
}

/// `t = -d log κ / (d+1)`, the diagonal part of every `h_s`.
pub fn step_time(kappa: f64, d: usize) -> f64 {
    let d = d as f64;
    -d * kappa.ln() / (d + 1.0)
}

pub fn walk_steps(sys: &IfsSystem) -> Result<Vec<WalkStep>> {
    let t = step_time(sys.ratio(), sys.dimension());
    sys.maps()
        .iter()
        .enumerate()
        .map(|(symbol, phi)| Ok(WalkStep { symbol, element: similarity_to_group(phi)?, diag_time: t }))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkOptions {
    /// Accumulate each matrix entry with a compensated dot product.
    pub compensated: bool,
}

/// `h_{b_1^k}` for `k = 0, …, n`.
pub fn walk_prefix_products(steps: &[WalkStep], word: &SymbolWord, opts: WalkOptions) -> Result<Vec<GroupElement>> {
    let size = steps
        .first()
        .map(|s| s.element.size())
        .ok_or_else(|| Error::InvalidArgument("empty step set".into()))?;
    let mut out = Vec::with_capacity(word.len() + 1);
    out.push(GroupElement::identity(size));
    for (k, &s) in word.symbols().iter().enumerate() {
        let step = steps
            .get(s)
            .ok_or_else(|| Error::InvalidArgument(format!("symbol {s} outside the alphabet")))?;
        let prev = out.last().unwrap();
        let next = if opts.compensated { step.element.mul_compensated(prev)? } else { step.element.mul(prev)? };
        if !(next.matrix.max_abs() <= OVERFLOW_LIMIT) {
            return Err(Error::TrajectoryTooLong { steps: k + 1, limit: OVERFLOW_LIMIT });
        }
        out.push(next);
    }
    Ok(out)
}

/// The ordered product `h_{b_n} ⋯ h_{b_1}`.
pub fn walk_matrix(steps: &[WalkStep], word: &SymbolWord) -> Result<GroupElement> {
    let opts = WalkOptions { compensated: word.len() > 1000 };
    Ok(walk_prefix_products(steps, word, opts)?.pop().unwrap())
}

/// `g = a_t · O' · u_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct PDecomposition {
    pub t: f64,
    pub rotation: Matrix,
    pub alpha: Vec<f64>,
}

impl PDecomposition {
    pub fn reassemble(&self) -> Result<GroupElement> {
        let d = self.alpha.len();
        let k = Matrix::block_diag_one(&self.rotation);
        let ak = diag_element(d, self.t).matrix.mul(&k)?;
        Ok(GroupElement { matrix: ak.mul(unipotent(&self.alpha).matrix())?, log_det_drift: 0.0 })
    }
}

pub fn decompose_p(g: &GroupElement) -> Result<PDecomposition> {
    let m = g.matrix();
    let defect = p_structure_defect(m).ok_or_else(|| Error::NotParabolic("(0,0) entry must be positive".into()))?;
    if defect > 1e-8 {
        return Err(Error::NotParabolic(format!("structure defect {defect:e}")));
    }
    let d = g.d();
    let t = m[(0, 0)].ln();
    let rotation = m.lower_block().scale((t / d as f64).exp());
    let e = m[(0, 0)];
    let alpha = (0..d).map(|j| -m[(0, j + 1)] / e).collect();
    Ok(PDecomposition { t, rotation, alpha })
}

/// `π_A(g)` for `g ∈ P`.
pub fn diag_projection(g: &GroupElement) -> Result<f64> {
    Ok(decompose_p(g)?.t)
}

/// `a_t · u_x`.
pub fn diagonal_point(x: &[f64], t: f64) -> GroupElement {
    let a = diag_element(x.len(), t);
    GroupElement { matrix: a.matrix.mul(unipotent(x).matrix()).expect("sizes agree"), log_det_drift: 0.0 }
}

/// Largest relative residual of `h_{b_1^n} = u_{-β_n} a_{t_n} k_n u_{π(b)}`
/// for a random stream `b`, with `β_n = π(T^n b)` and both coding points
/// truncated at depth `n + 40`.
pub fn appendix_identity_check(sys: &IfsSystem, seed: u64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = seeds::task_rng(seed, 0);
    let word = sys.random_word(n + 40, &mut rng);
    appendix_residual(sys, &word, n)
}

/// As [`appendix_identity_check`] for a given stream prefix (length > n).
pub fn appendix_residual(sys: &IfsSystem, word: &SymbolWord, n: usize) -> Result<f64> {
    if word.len() <= n {
        return Err(Error::InvalidArgument("stream prefix must extend past n".into()));
    }
    let steps = walk_steps(sys)?;
    let h = walk_matrix(&steps, &word.prefix(n))?;
    let dec = decompose_p(&h)?;
    let base = sys.base_point();
    let pi_b = sys.apply_word(word, base);
    let beta_n = sys.apply_word(&word.shift(n), base);
    let d = sys.dimension();
    let k = GroupElement { matrix: Matrix::block_diag_one(&dec.rotation), log_det_drift: 0.0 };
    let neg_beta: Vec<f64> = beta_n.iter().map(|b| -b).collect();
    let rhs = unipotent(&neg_beta)
        .matrix
        .mul(diag_element(d, dec.t).matrix())?
        .mul(k.matrix())?
        .mul(unipotent(&pi_b).matrix())?;
    Ok(rhs.max_rel_diff(h.matrix()))
}

/// Random element `a_t O' u_α` of `P` (test and diagnostic helper).
pub fn random_parabolic<R: Rng + ?Sized>(d: usize, rng: &mut R) -> GroupElement {
    let t = rng.gen_range(-2.0..2.0);
    let o = crate::linalg::random_rotation(d, rng);
    let alpha: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    PDecomposition { t, rotation: o, alpha }.reassemble().expect("sizes agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::cantor_product;
    use rand::SeedableRng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rho_formulas() {
        let u = unipotent(&[1.0, 2.0]);
        assert!(close(&rho_apply(&u, &[0.0, 0.0]).unwrap(), &[-1.0, -2.0], 1e-15));
        let t = 2.0 * 2f64.ln() / 3.0;
        let a = diag_element(2, t);
        assert!(close(&rho_apply(&a, &[0.3, -1.5]).unwrap(), &[0.6, -3.0], 1e-14));
        let id = GroupElement::identity(3);
        assert_eq!(rho_apply(&id, &[0.25, 4.0]).unwrap(), vec![0.25, 4.0]);
        let rot = crate::linalg::givens(2, 0, 1, 0.7);
        let k = FlowElement::Rotation { rotation: rot.clone() }.to_group(2).unwrap();
        let beta = [1.0, 0.5];
        let expected = rot.transpose().left_apply(&beta).unwrap();
        assert!(close(&rho_apply(&k, &beta).unwrap(), &expected, 1e-14));
    }

    #[test]
    fn rho_rejects_non_parabolic() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let g = GroupElement::new(m).unwrap();
        assert!(matches!(rho_apply(&g, &[0.0]), Err(Error::NotParabolic(_))));
    }

    #[test]
    fn rho_is_a_left_action() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = random_parabolic(2, &mut rng);
            let q = random_parabolic(2, &mut rng);
            let beta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let lhs = rho_apply(&p.mul(&q).unwrap(), &beta).unwrap();
            let rhs = rho_apply(&p, &rho_apply(&q, &beta).unwrap()).unwrap();
            assert!(close(&lhs, &rhs, 1e-9));
        }
    }

    #[test]
    fn similarity_lift_diag_time() {
        let c1 = cantor_product(1).unwrap();
        let h = similarity_to_group(&c1.maps()[0]).unwrap();
        let t = diag_projection(&h).unwrap();
        assert!((t - 3f64.ln() / 2.0).abs() < 1e-12);
        assert!((t - 0.5493061).abs() < 1e-7);
        let c2 = cantor_product(2).unwrap();
        let h = similarity_to_group(&c2.maps()[3]).unwrap();
        assert!((diag_projection(&h).unwrap() - 0.7324082).abs() < 1e-7);
        assert!(similarity_to_group(&SimilarityMap::identity(2)).is_err());
    }

    #[test]
    fn similarity_lift_inverse_encodes_map() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let o = crate::linalg::random_rotation(3, &mut rng);
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let phi = SimilarityMap::new(rng.gen_range(0.1..0.9), o, y).unwrap();
            let h = similarity_to_group(&phi).unwrap();
            assert!((h.matrix().det() - 1.0).abs() < 1e-12);
            let hinv = h.inverse().unwrap();
            for _ in 0..5 {
                let beta: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
                assert!(close(&rho_apply(&hinv, &beta).unwrap(), &phi.apply(&beta), 1e-10));
            }
        }
    }

    #[test]
    fn walk_matrix_basics() {
        let c = cantor_product(1).unwrap();
        let steps = walk_steps(&c).unwrap();
        let e = walk_matrix(&steps, &SymbolWord(vec![])).unwrap();
        assert_eq!(e, GroupElement::identity(2));
        let one = walk_matrix(&steps, &SymbolWord(vec![1])).unwrap();
        assert_eq!(one.matrix(), steps[1].element.matrix());
        let w = SymbolWord(vec![0, 1, 1, 0, 1, 0, 0, 1]);
        let g = walk_matrix(&steps, &w).unwrap();
        assert!((diag_projection(&g).unwrap() - 8.0 * 3f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn walk_overflow_is_reported() {
        let c = cantor_product(1).unwrap();
        let steps = walk_steps(&c).unwrap();
        let w = SymbolWord(vec![0; 1400]);
        assert!(matches!(walk_matrix(&steps, &w), Err(Error::TrajectoryTooLong { .. })));
    }

    #[test]
    fn decompose_examples() {
        let a = diag_element(2, 2.0);
        let dec = decompose_p(&a).unwrap();
        assert!((dec.t - 2.0).abs() < 1e-15);
        assert!(dec.rotation.max_abs_diff(&Matrix::identity(2)) < 1e-14);
        assert!(close(&dec.alpha, &[0.0, 0.0], 0.0));
        let u = unipotent(&[0.5, -1.25]);
        let dec = decompose_p(&u).unwrap();
        assert_eq!(dec.t, 0.0);
        assert!(close(&dec.alpha, &[0.5, -1.25], 1e-15));
        let bad = GroupElement::new(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0]]).unwrap()).unwrap();
        assert!(decompose_p(&bad).is_err());
    }

    #[test]
    fn decompose_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for d in 1..4 {
            for _ in 0..50 {
                let g = random_parabolic(d, &mut rng);
                let back = decompose_p(&g).unwrap().reassemble().unwrap();
                assert!(back.matrix().max_abs_diff(g.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn gt_is_multiplicative() {
        for (s, t) in [(0.5, 0.25), (3.0, 1.0 / 9.0), (1.7, 2.2)] {
            let lhs = FlowElement::Gt { u: s }.to_group(2).unwrap().mul(&FlowElement::Gt { u: t }.to_group(2).unwrap()).unwrap();
            let rhs = FlowElement::Gt { u: s * t }.to_group(2).unwrap();
            assert!(lhs.matrix().max_abs_diff(rhs.matrix()) < 1e-10);
        }
        // g_{κ^n} = a_{t_n}
        let n = 7;
        let g = FlowElement::Gt { u: (1.0f64 / 3.0).powi(n) }.to_group(1).unwrap();
        let a = diag_element(1, n as f64 * step_time(1.0 / 3.0, 1));
        assert!(g.matrix().max_rel_diff(a.matrix()) < 1e-12);
    }

    #[test]
    fn walk_identity_small_cases() {
        let c1 = cantor_product(1).unwrap();
        assert!(appendix_identity_check(&c1, 3, 1).unwrap() <= 1e-12);
        assert!(appendix_identity_check(&c1, 3, 10).unwrap() <= 1e-8);
        let c2 = cantor_product(2).unwrap();
        assert!(appendix_identity_check(&c2, 5, 25).unwrap() <= 1e-6);
    }

    #[test]
    fn diagonal_point_examples() {
        assert_eq!(diagonal_point(&[0.0], 0.0).matrix(), &Matrix::identity(2));
        let e = std::f64::consts::E;
        let g = diagonal_point(&[0.0], 1.0);
        assert!(g.matrix().max_abs_diff(&Matrix::diagonal(&[e, 1.0 / e])) < 1e-15);
        let g = diagonal_point(&[0.5], 1.0);
        let expected = Matrix::from_rows(&[vec![e, -0.5 * e], vec![0.0, 1.0 / e]]).unwrap();
        assert!(g.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn renormalization_keeps_det_one() {
        let m = Matrix::diagonal(&[2.0, 0.5 * (1.0 + 5e-11)]);
        let g = GroupElement::new(m).unwrap();
        assert!((g.matrix().det() - 1.0).abs() < 1e-14);
        assert!(g.log_det_drift() > 0.0);
    }
}
