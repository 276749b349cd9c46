use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qfeedback::dynamics::{derivative, energy, integrate, max_step, WaveFunction};
use qfeedback::model::{build_grid, build_params, Generator};
use qfeedback::Error;

fn random_state(dim: usize, seed: u64) -> WaveFunction {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    WaveFunction::from_vec(amps).unwrap().normalized().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generator_is_hermitian_on_random_states(
        seed in any::<u64>(),
        r in 0.02f64..1.5,
        dphi in 0.0f64..TAU,
        n in 1u32..=3,
    ) {
        let p = build_params(1.0, n, r, dphi).unwrap();
        let w = 12.0f64.max(4.0 * p.kappa());
        let pairs = (w * 4.0 * p.tau() / PI).ceil() as usize + 1;
        let g = build_grid(&p, w, pairs).unwrap();
        let c = random_state(g.state_dim(), seed);
        let dc = derivative(&c, &p, &g).unwrap();
        let ip = c.inner(&dc);
        prop_assert!(ip.re.abs() < 1e-12 * dc.norm(), "Re⟨c, ċ⟩ = {}", ip.re);
    }

    #[test]
    fn short_runs_conserve_norm_and_energy(seed in any::<u64>(), dphi in 0.0f64..TAU) {
        let p = build_params(1.0, 1, 0.5, dphi).unwrap();
        let g = build_grid(&p, 12.0, 200).unwrap();
        let c = random_state(g.state_dim(), seed);
        let tr = integrate(&c, &p, &g, 2.0, 1e-3).unwrap();
        prop_assert!(tr.max_norm_drift() < 1e-10);
        prop_assert!(tr.max_energy_drift() < 1e-9);
        let e0 = energy(&c, &Generator::new(&p, &g)).unwrap();
        prop_assert!((tr.energy[0] - e0).abs() < 1e-12);
    }
}

#[test]
fn probabilities_stay_in_unit_interval() {
    let p = build_params(1.0, 1, 0.5, 0.0).unwrap();
    let g = build_grid(&p, 12.0, 600).unwrap();
    let tr = integrate(
        &WaveFunction::excited(g.len()),
        &p,
        &g,
        3.0 * p.tau(),
        max_step(&p, &g),
    )
    .unwrap();
    for i in 0..tr.len() {
        for x in [tr.p_e[i], tr.p_c[i], tr.p_bath[i]] {
            assert!((-1e-12..=1.0 + 1e-12).contains(&x));
        }
        assert!((tr.p_e[i] + tr.p_c[i] + tr.p_bath[i] - 1.0).abs() < 1e-8);
    }
}

#[test]
fn excited_emitter_leaks_into_the_external_cavity() {
    let p = build_params(1.0, 1, 0.5, 0.0).unwrap();
    let g = build_grid(&p, 12.0, 1500).unwrap();
    let tr = integrate(
        &WaveFunction::excited(g.len()),
        &p,
        &g,
        10.0 * p.tau(),
        max_step(&p, &g),
    )
    .unwrap();
    let late = tr.len() - 1;
    let local = tr.p_e[late] + tr.p_c[late];
    assert!(local < 0.1, "p_e + p_c = {local} at 10τ");
    assert!(tr.p_bath[late] > 0.9);
    // p_c oscillates with no single period: several distinct gaps between maxima
    let maxima: Vec<f64> = (1..late)
        .filter(|&i| tr.p_c[i] > tr.p_c[i - 1] && tr.p_c[i] >= tr.p_c[i + 1])
        .map(|i| tr.times[i])
        .collect();
    let gaps: Vec<f64> = maxima.windows(2).map(|w| w[1] - w[0]).collect();
    let spread = gaps.iter().cloned().fold(0.0, f64::max)
        - gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(gaps.len() > 5 && spread > 0.1, "gaps {gaps:?}");
}

#[test]
fn drift_guard_rejects_a_bad_step() {
    let p = build_params(1.0, 1, 0.5, 0.0).unwrap();
    let g = build_grid(&p, 12.0, 200).unwrap();
    let c = random_state(g.state_dim(), 7);
    // at the largest allowed step broadband states drift, but not beyond the guard
    match integrate(&c, &p, &g, 4.0 * p.tau(), max_step(&p, &g)) {
        Ok(tr) => assert!(tr.max_norm_drift() <= 1e-6),
        Err(e) => assert!(matches!(e, Error::IntegrationDiagnostic { .. })),
    }
}
