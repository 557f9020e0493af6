use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use cantor_lab::combinatorics::{collision_atlas, d2k, d2k_with, trig_decomposition, CollisionRecord, Truncation};
use cantor_lab::identities::check_swap;
use cantor_lab::measure::{build_atoms, nu_hat_empirical, strichartz_partial, wick_constants, CantorSpec, Target};
use cantor_lab::moments::{mv_fourth, od_t};
use cantor_lab::profiler::{
    convexity_ceiling, dyadic_windows, exponent_formulas, fit_profile, sample_envelope, slope_level, Sampling,
};
use cantor_lab::special::{
    hurwitz_zeta, j_sum, partial_sums, periodic_direct, periodic_fe, periodic_zeta, ComplexPoint, LFunction,
    PartialSumKind, PartialSumSpec,
};
use cantor_lab::LabError;

fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
    (a - b).norm() <= rel * b.norm().max(1.0)
}

fn spec_strategy() -> impl Strategy<Value = CantorSpec> {
    (0.1f64..2.5, 0.3f64..3.0, 4u32..9).prop_map(|(t0, w, level)| CantorSpec::new(t0, t0 + w, level, 2, 3).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficients_bounded(spec in spec_strategy(), n in 0u64..1_000_000) {
        let z = spec.nu_hat(n);
        prop_assert!(z.norm() <= 1.0 + 1e-15);
        if n == 0 {
            prop_assert_eq!(z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn self_similarity(spec in spec_strategy(), n in 1u64..100) {
        let w = spec.width();
        let r = |m: u64| spec.nu_hat(m) * Complex64::from_polar(1.0, -(m as f64) * spec.centre());
        let lhs = r(3 * n);
        let rhs = r(n) * (w * n as f64).cos();
        prop_assert!((lhs - rhs).norm() < 1e-13, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn atoms_match_truncated_product(n in 0i64..10_000) {
        let spec = CantorSpec::default();
        let atoms = build_atoms(&spec, Target::Native).unwrap();
        let emp = nu_hat_empirical(&atoms, n).unwrap();
        let prod = spec.nu_hat_level(n as u64, spec.level);
        prop_assert!((emp - prod).norm() < 1e-13, "n = {}: {} vs {}", n, emp, prod);
    }

    #[test]
    fn hurwitz_shift(sigma in 0.1f64..3.0, t in -200.0f64..200.0, alpha in 0.05f64..4.0) {
        prop_assume!((sigma - 1.0).abs() > 1e-3 || t.abs() > 1e-3);
        let s = ComplexPoint::new(sigma, t);
        let a = hurwitz_zeta(s, alpha).unwrap();
        let b = hurwitz_zeta(s, alpha + 1.0).unwrap();
        let term = (-s.s() * alpha.ln()).exp();
        prop_assert!(close(a - b, term, 1e-10), "{} vs {}", a - b, term);
    }

    #[test]
    fn periodic_conjugation(theta in 0.2f64..6.0, sigma in 0.1f64..2.0, t in 1.0f64..300.0) {
        let f = periodic_zeta(theta, ComplexPoint::new(sigma, t)).unwrap();
        let g = periodic_zeta(2.0 * PI - theta, ComplexPoint::new(sigma, -t)).unwrap();
        prop_assert!(close(g, f.conj(), 1e-9), "{} vs {}", g, f.conj());
    }

    #[test]
    fn periodic_branches_agree(theta in 0.3f64..6.0, sigma in 1.3f64..1.95, t in -100.0f64..100.0) {
        let s = ComplexPoint::new(sigma, t);
        let r = theta.min(2.0 * PI - theta);
        let d = periodic_direct(theta, s.s(), cantor_lab::special::direct_length(s.s(), r));
        let f = periodic_fe(theta, s).unwrap();
        prop_assert!(close(d, f, 1e-9), "{} vs {}", d, f);
    }

    #[test]
    fn partial_sums_conjugate(x in 0.0f64..6.3, t in 1.0f64..1e4, m in 1u64..200) {
        let s = ComplexPoint::critical(t);
        let spec = PartialSumSpec::lerch(m);
        let p = partial_sums(x, s, spec, PartialSumKind::P);
        let q = partial_sums(x, s, spec, PartialSumKind::Q);
        prop_assert_eq!(q, p.conj());
    }

    #[test]
    fn swap_identity(k in 1u64..8, m in 20u64..317, t in 1e3f64..1e4) {
        let r = check_swap(k, t, m).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn empty_ranges_vanish(h in 0u64..50, lo in 21u64..100, gap in 1u64..20, t in 1.0f64..1e3) {
        let s = ComplexPoint::critical(t);
        prop_assert_eq!(j_sum(h, s, lo, lo - gap), Complex64::new(0.0, 0.0));
        let empty = PartialSumSpec { m: lo, lo, hi: lo - gap };
        prop_assert_eq!(partial_sums(0.7, s, empty, PartialSumKind::Q), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn collision_records_verify(m1 in 1u64..400, m2 in 1u64..400, m3 in 1u64..400, m4 in 1u64..400) {
        match CollisionRecord::new([m1, m2, m3, m4]) {
            Ok(r) => {
                prop_assert!(r.verify());
                prop_assert_eq!(r.h, m3 as i64 + m4 as i64 - m1 as i64 - m2 as i64);
            }
            Err(LabError::Domain(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn slope_level_increasing(a in 0.01f64..0.98, gap in 0.001f64..0.01) {
        prop_assert!(slope_level(a + gap).unwrap() > slope_level(a).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mv_diagonal_closed_form(alpha in 0.08f64..0.32, bound in 8u64..60) {
        match mv_fourth(alpha, bound, 0) {
            Ok(b) => prop_assert!(b.diagonal_residual() < 1e-12, "{}", b.diagonal_residual()),
            Err(LabError::Collision(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn trig_reconstruction(centre in 1.0f64..2.2, n in 10u64..80) {
        let spec = CantorSpec::new(centre - 0.75, centre + 0.75, 12, 2, 3).unwrap();
        let dec = trig_decomposition(&spec, 2, n, 2 * n).unwrap();
        let direct = d2k_with(&spec, 2, n, Truncation::PerIndex).unwrap();
        prop_assert!((dec.evaluate(spec.centre()) - direct).abs() < 1e-8 * direct.abs().max(1.0));
    }

    #[test]
    fn fit_is_idempotent(bp1 in 2usize..6, bp2 in 7usize..11, c in -0.3f64..0.6) {
        let sig: Vec<f64> = (0..=12).map(|i| i as f64 * 0.125).collect();
        // slopes -2, -1, 0 with breaks on grid points, continuous
        let (b1, b2) = (sig[bp1], sig[bp2]);
        let mu: Vec<f64> = sig
            .iter()
            .map(|&s| {
                let at_b1 = c + 2.0 * 1.0 - 2.0 * b1; // value of c + 2 - 2 s at b1
                let at_b2 = at_b1 - (b2 - b1);
                if s <= b1 { c + 2.0 - 2.0 * s } else if s <= b2 { at_b1 - (s - b1) } else { at_b2 }
            })
            .map(|v| v.max(-0.05))
            .collect();
        prop_assume!(mu.iter().all(|&v| v > -0.05));
        let p = fit_profile(&sig, &mu).unwrap();
        prop_assert!(p.rms < 1e-12, "rms {}", p.rms);
        for (s, m) in sig.iter().zip(&mu) {
            prop_assert!((p.fitted(*s) - m).abs() < 1e-12);
        }
        let again = fit_profile(&sig, &sig.iter().map(|&s| p.fitted(s)).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(again.fit_slopes, p.fit_slopes);
    }
}

#[test]
fn unit_weights_and_support() {
    let spec = CantorSpec::default();
    let atoms = build_atoms(&spec, Target::Unit).unwrap();
    assert_eq!(atoms.len(), 4096);
    let total: f64 = atoms.weights.iter().sum();
    assert!((total - 1.0).abs() <= 1e-15);
    let (lo, hi) = (1.0 / (4.0 * PI), 1.0 / PI);
    assert!(atoms.points.iter().all(|&p| p >= lo && p <= hi));
}

#[test]
fn strichartz_and_wick_monotone() {
    let spec = CantorSpec::default();
    let mut prev = 0.0;
    for n in [1, 10, 100, 1000, 10_000] {
        let v = strichartz_partial(&spec, n);
        assert!(v >= prev);
        prev = v;
    }
    let (a, b) = (wick_constants(&spec, 1000), wick_constants(&spec, 10_000));
    assert!(b.c_nu >= a.c_nu && b.c4 >= a.c4 && b.c6 >= a.c6);
    assert!(b.c_nu > 0.0 && b.c4 > 0.0 && b.c4 < b.c_nu && b.c6 > 0.0 && b.c6 < b.c4);
}

#[test]
fn no_decay_of_coefficients() {
    let spec = CantorSpec::default();
    let mut n = 1u64;
    while n <= 100_000 {
        let best = (n + 1..=3 * n).map(|m| spec.nu_hat(m).norm()).fold(0.0, f64::max);
        assert!(best >= 0.1, "max over ({}, {}] is {}", n, 3 * n, best);
        n *= 2;
    }
}

#[test]
fn hurwitz_dyadic_split() {
    for s in [ComplexPoint::new(2.0, 0.0), ComplexPoint::new(3.0, 0.0), ComplexPoint::new(0.5, 5.0)] {
        let half = hurwitz_zeta(s, 0.5).unwrap();
        let one = hurwitz_zeta(s, 1.0).unwrap();
        let factor = (s.s() * 2f64.ln()).exp() - 1.0;
        assert!(close(half, factor * one, 1e-10), "{:?}: {} vs {}", s, half, factor * one);
    }
}

#[test]
fn periodic_fe_at_integer_exponent() {
    // Gamma(1 - s) is singular at s = 2; the value must still be the alternating Basel sum
    let v = periodic_fe(PI, ComplexPoint::new(2.0, 0.0)).unwrap();
    assert!((v.re + PI * PI / 12.0).abs() < 1e-12 && v.im.abs() < 1e-12, "{}", v);
}

#[test]
fn od_reconstruction() {
    let atoms = build_atoms(&CantorSpec::default(), Target::Unit).unwrap();
    for t in [200.0, 1500.0, 9000.0] {
        let r = od_t(t, &atoms).unwrap();
        assert!(r.reconstruction_residual < 1e-9, "t = {}: {}", t, r.reconstruction_residual);
    }
}

#[test]
fn first_moment_sum_is_carlson_constant() {
    let spec = CantorSpec::default();
    let n = 2000;
    let d2 = d2k_with(&spec, 1, n, Truncation::Product).unwrap();
    let tab = spec.coefficient_table(n as usize, None);
    let c: f64 = tab[1..].iter().enumerate().map(|(i, z)| z.norm_sqr() / (i + 1) as f64).sum();
    assert!((d2 - c).abs() < 1e-12 * c, "{} vs {}", d2, c);
}

#[test]
fn deterministic_across_thread_counts() {
    let run = || {
        let spec = CantorSpec::default();
        let tab = spec.coefficient_table(40_000, None);
        let d4 = d2k(&spec, 2, 400).unwrap();
        let atlas = collision_atlas(60, 3).unwrap().to_csv();
        let atoms = build_atoms(&spec, Target::Unit).unwrap();
        let od = od_t(3000.0, &atoms).unwrap();
        (tab, d4.to_bits(), atlas, od.od.to_bits())
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(run);
    let three = pool(3).install(run);
    assert!(one == three);
}

#[test]
fn envelope_under_convexity_ceiling() {
    let lf = LFunction::new(CantorSpec::default()).unwrap();
    let windows = dyadic_windows(100.0, 5000.0);
    let env = sample_envelope(&lf, 0.5, &windows, Sampling::default()).unwrap();
    let ceiling = convexity_ceiling(&windows, &env);
    for ((w, e), c) in windows.iter().zip(&env).zip(&ceiling) {
        assert!(e <= c, "window {:?}: {} > {}", w, e, c);
    }
}

#[test]
fn subconvex_branches_meet() {
    let d_star = exponent_formulas(0.5, 13.0 / 84.0, 0.0).unwrap().d_star;
    let f = exponent_formulas(d_star, 13.0 / 84.0, 0.0).unwrap();
    assert!((f.subconvex - 13.0 / 84.0).abs() < 1e-12);
    for (lo, hi) in [(d_star - 1e-9, d_star + 1e-9)] {
        let a = exponent_formulas(lo, 13.0 / 84.0, 0.0).unwrap().subconvex;
        let b = exponent_formulas(hi, 13.0 / 84.0, 0.0).unwrap().subconvex;
        assert!((a - b).abs() < 1e-8);
    }
    assert!((slope_level(0.5).unwrap() - 0.5).abs() < 1e-12);
    assert!((slope_level(2.0 / 3.0).unwrap() - 1.0).abs() < 1e-12);
}
