use khintchine_core::approx::{nearest, ScanPoint};
use khintchine_core::constants::{axis_mass, axis_subspace_measure, cover_hyperplane, verify_certificate};
use khintchine_core::dani::{
    classify_khintchine_series, classify_rate_series, r_closed_form, r_from_psi, t0_of, ApproxFunction, RateFunction,
};
use khintchine_core::excursion::{linear_fit, walk_diagonal_gap};
use khintchine_core::flow::{diag_element, random_parabolic, rho_apply, step_time, unipotent};
use khintchine_core::ifs::{cantor_product, sample_fractal};
use khintchine_core::lattice::{combine, shortest_vector_basis};
use khintchine_core::linalg::{random_rotation, Matrix};
use khintchine_core::seeds::task_rng;
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / (1.0 + y.abs())).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn rho_is_a_left_action(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = task_rng(seed, 0);
        let p = random_parabolic(d, &mut rng);
        let q = random_parabolic(d, &mut rng);
        let beta: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = rho_apply(&p.mul(&q).unwrap(), &beta).unwrap();
        let rhs = rho_apply(&p, &rho_apply(&q, &beta).unwrap()).unwrap();
        prop_assert!(rel(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn unipotents_translate(x in prop::collection::vec(-2.0f64..2.0, 1..=3), y in -1.0f64..1.0) {
        let d = x.len();
        let beta = vec![y; d];
        // u_x acts on the fractal side by a translation
        let moved = rho_apply(&unipotent(&x), &beta).unwrap();
        let back = rho_apply(&unipotent(&x.iter().map(|v| -v).collect::<Vec<_>>()), &moved).unwrap();
        prop_assert!(rel(&back, &beta) < 1e-12);
    }

    #[test]
    fn diagonal_flow_is_additive(d in 1usize..=3, s in -5.0f64..5.0, t in -5.0f64..5.0) {
        let prod = diag_element(d, s).mul(&diag_element(d, t)).unwrap();
        prop_assert!(prod.matrix().max_rel_diff(diag_element(d, s + t).matrix()) < 1e-12);
    }

    #[test]
    fn shortest_vector_ignores_basis_choice(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = task_rng(seed, 1);
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5f64..0.5).exp()).collect();
        let g = random_rotation(n, &mut rng).mul(&Matrix::diagonal(&s)).unwrap();
        let basis = g.to_rows();
        let (len, w) = shortest_vector_basis(&basis).unwrap();
        // the witness realises the sup-norm minimum
        let v = combine(&w, &basis);
        prop_assert!((v.iter().fold(0.0f64, |m, x| m.max(x.abs())) - len).abs() < 1e-9 * len);
        // an elementary change of basis leaves the length alone
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n - 1));
        let j = if j >= i { j + 1 } else { j };
        let c = rng.gen_range(-3i32..=3) as f64;
        let mut other = basis.clone();
        for k in 0..n {
            other[i][k] += c * basis[j][k];
        }
        let (len2, _) = shortest_vector_basis(&other).unwrap();
        prop_assert!((len - len2).abs() <= 1e-9 * len);
    }

    #[test]
    fn rate_of_a_power_law_is_affine(c in 0.2f64..3.0, a in 0.1f64..3.0, d in 1usize..=3, dt in 0.5f64..50.0) {
        let psi = ApproxFunction::power(c, a).unwrap();
        let t = t0_of(&psi, d).max(0.0) + dt;
        let r = r_from_psi(&psi, d, t).unwrap();
        // the closed form holds once e^{t−r} is past x0 = 1
        let closed = r_closed_form(c, a, d, t);
        if t - closed >= 0.0 {
            prop_assert!((r - closed).abs() < 1e-8 * (1.0 + t));
        }
        // t + d·r is non-decreasing in t
        let later = r_from_psi(&psi, d, t + 1.0).unwrap();
        let df = d as f64;
        prop_assert!((t + 1.0 + df * later) - (t + df * r) >= -1e-9);
    }

    #[test]
    fn series_verdicts_agree_on_power_laws(a in 0.05f64..2.0, d in 1usize..=3, off in 0usize..2) {
        let df = d as f64;
        let alpha = df * 2f64.ln() / 3f64.ln();
        // stay away from the boundary exponent, where the verdict depends on b
        let a = if (a - 1.0 / df).abs() < 0.02 { a + 0.05 } else { a };
        let psi = ApproxFunction::power_log(1.0, a, 0.0, 1.0 + off as f64).unwrap();
        let gamma = alpha * (df + 1.0) / df;
        let kh = classify_khintchine_series(&psi, d, alpha).converges();
        let rate = classify_rate_series(&RateFunction::from_psi(&psi, d), gamma).converges();
        prop_assert_eq!(kh, rate);
        prop_assert_eq!(kh, a > 1.0 / df);
    }

    #[test]
    fn nearest_residual_is_at_most_half(x in prop::collection::vec(-3.0f64..3.0, 1..=3), q in 1u64..100_000) {
        let (p, res) = nearest(&ScanPoint::float(x.clone()), q);
        prop_assert!((0.0..=0.5).contains(&res));
        let direct = x.iter().zip(&p).map(|(xi, pi)| (q as f64 * xi - *pi as f64).abs()).fold(0.0, f64::max);
        prop_assert!((direct - res).abs() < 1e-9 * q as f64);
    }

    #[test]
    fn line_fit_recovers_lines(m in -5.0f64..5.0, b in -5.0f64..5.0, n in 3usize..30) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, m * i as f64 + b)).collect();
        let fit = linear_fit(&pts).unwrap();
        prop_assert!((fit.slope - m).abs() < 1e-9 && (fit.intercept - b).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn covers_are_sound_and_small(
        coeffs in prop::collection::vec(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], 1..=3),
        n in 1u32..=6,
        seed in any::<u64>(),
    ) {
        let d = coeffs.len();
        // a hyperplane through a point of the set, so there is something to cover
        let x = &sample_fractal(&cantor_product(d).unwrap(), 30, seed, 1).unwrap()[0];
        let rhs: f64 = coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let cert = cover_hyperplane(&coeffs, rhs, n).unwrap();
        prop_assert!(cert.all_admissible());
        prop_assert!(cert.count > 0);
        prop_assert!(cert.count as f64 <= cert.count_bound());
        prop_assert!(cert.count as f64 <= 3.0 * 2f64.powi(d as i32 - 1) * 2f64.powi(((d - 1) as i32) * n as i32));
        let (tested, uncovered) = verify_certificate(&cert, 300, seed).unwrap();
        prop_assert!(tested > 0);
        prop_assert_eq!(uncovered, 0);
    }

    #[test]
    fn axis_masses_sit_between_the_exact_bounds(d in 1usize..=2, n in 1u32..=4, seed in any::<u64>()) {
        let sys = cantor_product(d).unwrap();
        let points = sample_fractal(&sys, 30, seed, 20_000).unwrap();
        let eps = 3f64.powi(-(n as i32)) * 0.999;
        for l in 1..=d {
            let (lower, upper) = axis_subspace_measure(d, l, n).unwrap();
            prop_assert!(0.0 < lower && lower <= upper && upper <= 1.0);
            let mass = axis_mass(&points, l, eps);
            // loose enough for sampling noise at 20k points
            prop_assert!(mass >= 0.7 * lower && mass <= 1.3 * upper, "l={l} mass={mass} [{lower}, {upper}]");
        }
    }

    #[test]
    fn walks_shadow_the_diagonal_orbit(seed in any::<u64>(), d in 1usize..=2) {
        let sys = cantor_product(d).unwrap();
        let mut rng = task_rng(seed, 2);
        let word = sys.random_word(120, &mut rng);
        let gap = walk_diagonal_gap(&sys, &word, 80).unwrap();
        // the walk and the diagonal orbit differ by a bounded element
        let t1 = step_time(sys.ratio(), d);
        prop_assert!(gap.is_finite() && gap < 2.0 + t1, "gap {gap}");
    }
}
