use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;
use qfeedback::model::build_params;
use qfeedback::spectrum::{
    char_fn, critical_r, default_log2_grid, default_roots, dimer_equivalent_phase, find_roots,
    product_table, sweep, CharEqn, Kernel, RESIDUAL_TOLERANCE,
};

fn eqn(n: u32, r: f64, dphi: f64, kernel: Kernel) -> CharEqn {
    CharEqn::new(build_params(1.0, n, r, dphi).unwrap(), kernel)
}

/// Sign changes of `f` on a uniform grid much finer than the library scan.
fn brute_force_roots(e: &CharEqn, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let h = (hi - lo) / samples as f64;
    let mut out = Vec::new();
    let mut prev = char_fn(e, lo);
    for i in 1..=samples {
        let w = lo + i as f64 * h;
        let v = char_fn(e, w);
        if v == 0.0 || (v < 0.0) != (prev < 0.0) && prev != 0.0 {
            out.push(w);
        }
        prev = v;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn roots_match_a_fine_sign_scan(n in 1u32..=3, r in 0.01f64..20.0, dphi in 0.0f64..TAU) {
        let e = eqn(n, r, dphi, Kernel::Sin);
        let set = default_roots(&e).unwrap();
        let (lo, hi) = set.range;
        let samples = 400_000;
        let h = (hi - lo) / samples as f64;
        // tangent pairs closer than the oracle grid cannot be seen by it
        prop_assume!(set.roots.windows(2).all(|w| w[1] - w[0] > 10.0 * h));
        prop_assume!(set.roots.iter().all(|x| x - lo > 10.0 * h && hi - x > 10.0 * h));
        let oracle = brute_force_roots(&e, lo, hi, samples);
        prop_assert_eq!(set.roots.len(), oracle.len(), "{:?} vs {:?}", set.roots, oracle);
        for (a, b) in set.roots.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1.01 * h);
        }
    }

    #[test]
    fn every_root_is_polished(n in 1u32..=4, r in 0.001f64..64.0, dphi in 0.0f64..TAU, cos in any::<bool>()) {
        let kernel = if cos { Kernel::Cos } else { Kernel::Sin };
        let set = default_roots(&eqn(n, r, dphi, kernel)).unwrap();
        prop_assert!(set.max_residual < RESIDUAL_TOLERANCE, "{}", set.max_residual);
        prop_assert!(set.roots.windows(2).all(|w| w[1] - w[0] >= set.bracket_resolution));
    }

    #[test]
    fn constructive_phase_keeps_baseline_roots(n in 1u32..=4, r in 0.001f64..64.0) {
        let set = default_roots(&eqn(n, r, 0.0, Kernel::Sin)).unwrap();
        prop_assert!(set.roots.iter().any(|x| x.abs() < 1e-9));
        prop_assert!(set.roots.iter().any(|x| (x - 2.0).abs() < 1e-9));
    }

    #[test]
    fn roots_are_symmetric_about_the_coupling(n in 1u32..=4, r in 0.001f64..64.0, destructive in any::<bool>()) {
        let dphi = if destructive { PI } else { 0.0 };
        let set = default_roots(&eqn(n, r, dphi, Kernel::Sin)).unwrap();
        let (lo, hi) = set.range;
        for x in &set.roots {
            let m = 2.0 - x;
            if m < lo + 1e-6 || m > hi - 1e-6 {
                continue;
            }
            let d = set.roots.iter().map(|y| (y - m).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-8, "no mirror for {} (gap {})", x, d);
        }
    }

    #[test]
    fn dimer_kernel_is_a_phase_shift(n in 1u32..=4, r in 0.001f64..64.0, dphi in 0.0f64..TAU) {
        let cos = default_roots(&eqn(n, r, dphi, Kernel::Cos)).unwrap();
        let sin = default_roots(&eqn(n, r, dimer_equivalent_phase(dphi), Kernel::Sin)).unwrap();
        prop_assert_eq!(cos.roots.len(), sin.roots.len());
        for (a, b) in cos.roots.iter().zip(&sin.roots) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let w = 1.234;
        let direct = char_fn(&eqn(n, r, dphi, Kernel::Cos), w);
        let shifted = char_fn(&eqn(n, r, dphi - FRAC_PI_2, Kernel::Sin), w);
        prop_assert!((direct - shifted).abs() < 1e-9 * (1.0 + direct.abs()));
    }
}

#[test]
fn weak_coupling_below_threshold_has_two_roots() {
    let e = eqn(1, 0.05, 0.0, Kernel::Sin);
    let set = find_roots(&e, (-2.0, 4.0), 2000).unwrap();
    assert_eq!(set.roots.len(), 2);
    assert_eq!(brute_force_roots(&e, -2.0 + 1e-7, 4.0, 1_000_000).len(), 2);
}

#[test]
fn strong_coupling_above_threshold_has_six_or_more_roots() {
    let set = default_roots(&eqn(1, 0.5, 0.0, Kernel::Sin)).unwrap();
    assert!(set.roots.len() >= 6, "{:?}", set.roots);
}

#[test]
fn destructive_phase_pair_emerges_near_the_upper_branch() {
    let c = critical_r(1, PI, Kernel::Sin).unwrap();
    let (w, r) = c.tangency.expect("fold located");
    let e = eqn(1, r, PI, Kernel::Sin);
    assert!(char_fn(&e, w).abs() < 1e-10);
    assert!(e.derivative(w).abs() < 1e-9);
    // the new pair appears close to 2.75 ω_g
    assert!(
        (w - 2.75).abs() < 0.05 || (2.0 - w - 2.75).abs() < 0.05,
        "ω* = {w}"
    );
}

#[test]
fn fold_agrees_with_count_bisection() {
    for (n, dphi) in [(1, 0.0), (2, 0.0), (1, PI), (1, FRAC_PI_2)] {
        let c = critical_r(n, dphi, Kernel::Sin).unwrap();
        assert!(c.tangency_agrees(), "{c:?}");
        assert!(c.bracket.1 - c.bracket.0 <= 1e-4);
        assert!(c.count_above > c.baseline_count);
    }
}

#[test]
fn branch_count_grows_with_commensurability() {
    for r in [0.5, 2.0, 8.0] {
        let counts: Vec<usize> = (1..=4)
            .map(|n| {
                default_roots(&eqn(n, r, 0.0, Kernel::Sin))
                    .unwrap()
                    .roots
                    .len()
            })
            .collect();
        assert!(
            counts.windows(2).all(|w| w[0] <= w[1]) && counts[3] > counts[0],
            "R = {r}: {counts:?}"
        );
    }
}

#[test]
fn root_count_never_drops_along_the_sweep() {
    for n in 1..=4 {
        for dphi in [0.0, PI] {
            let t = sweep(n, dphi, Kernel::Sin, &default_log2_grid(), None).unwrap();
            assert!(
                t.monotonicity_violations.is_empty(),
                "{:?}",
                t.monotonicity_violations
            );
            assert_eq!(t.rows.len(), 193);
        }
    }
}

#[test]
fn product_table_is_close_to_the_inverse_circumference() {
    let rows = product_table(2).unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!((row.product - 1.0 / TAU).abs() < 0.02 / TAU, "{row:?}");
    }
}
