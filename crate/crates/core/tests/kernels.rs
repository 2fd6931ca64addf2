use genai_abm::model::*;
use genai_abm::validation::{education_max_error, regulation_max_error};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

/// (rate, dt) with rate * dt <= 1.
fn stable_rate() -> impl Strategy<Value = (f64, f64)> {
    (0.01..=2.0f64, 0.0..=1.0f64).prop_map(|(dt, frac)| (frac / dt, dt))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn kernels_stay_in_range(
        e in unit(), a in unit(), r in unit(), s in 0.0..1.0f64,
        (rate, dt) in stable_rate(),
        beta in 0.0..50.0f64,
        scale in 0.0..100.0f64,
    ) {
        let e1 = education_step(e, rate, dt).unwrap();
        prop_assert!((e..=1.0).contains(&e1));

        let sk = skill_of(e, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&sk));

        let a1 = adoption_step(a, s, rate, dt).unwrap();
        prop_assert!((a..=1.0).contains(&a1));

        let r1 = regulation_step(r, a, rate, dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&r1));
        prop_assert!(r1 >= r.min(a) && r1 <= r.max(a));

        let d = demand_factor(a, rate, scale).unwrap();
        prop_assert!(d >= 0.0);
    }

    #[test]
    fn employment_within_floor_and_ceiling(
        supply in 0.0..2.0f64, demand in 0.0..5.0f64, ceiling in unit(), frac in unit(),
    ) {
        let floor = frac * ceiling;
        let emp = employment_level(supply, demand, ceiling, floor).unwrap();
        prop_assert!(emp >= floor && emp <= ceiling);
    }

    #[test]
    fn sigmoid_matches_tanh(e in unit(), beta in 0.0..100.0f64) {
        let s = skill_of(e, beta).unwrap();
        prop_assert!((s - (beta * e / 2.0).tanh()).abs() <= 1e-12);
    }

    #[test]
    fn skill_monotone(e1 in unit(), e2 in unit(), b1 in 0.0..50.0f64, b2 in 0.0..50.0f64) {
        let (elo, ehi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (blo, bhi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(skill_of(elo, blo).unwrap() <= skill_of(ehi, blo).unwrap());
        prop_assert!(skill_of(elo, blo).unwrap() <= skill_of(elo, bhi).unwrap());
    }

    #[test]
    fn demand_non_increasing_in_adoption(a1 in unit(), a2 in unit(), gamma in 0.0..1.0f64, scale in 0.0..50.0f64) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(demand_factor(hi, gamma, scale).unwrap() <= demand_factor(lo, gamma, scale).unwrap());
    }

    #[test]
    fn kernels_are_pure(e in unit(), a in unit(), (rate, dt) in stable_rate(), beta in 0.0..20.0f64) {
        prop_assert_eq!(education_step(e, rate, dt).unwrap().to_bits(), education_step(e, rate, dt).unwrap().to_bits());
        prop_assert_eq!(skill_of(e, beta).unwrap().to_bits(), skill_of(e, beta).unwrap().to_bits());
        prop_assert_eq!(regulation_step(e, a, rate, dt).unwrap().to_bits(), regulation_step(e, a, rate, dt).unwrap().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn iterated_education_and_adoption_monotone(
        e0 in unit(), a0 in unit(), (rate, dt) in stable_rate(), s_bar in 0.01..1.0f64,
    ) {
        prop_assume!(rate > 1e-3);
        let (mut e, mut a) = (e0, a0);
        for _ in 0..2000 {
            let e1 = education_step(e, rate, dt).unwrap();
            let a1 = adoption_step(a, s_bar, rate, dt).unwrap();
            prop_assert!(e1 >= e && a1 >= a);
            e = e1;
            a = a1;
        }
        // rate * dt >= 2e-6 here, so 2000 steps may not reach 1; check the
        // remaining gap shrank by the exact factor instead
        let factor = (1.0 - rate * dt).powi(2000);
        prop_assert!(1.0 - e <= (1.0 - e0) * factor + 1e-9);
    }

    #[test]
    fn regulation_tracks_rising_adoption(
        r0 in unit(), a_start in unit(), (delta, dt) in stable_rate(), increments in prop::collection::vec(0.0..0.05f64, 300),
    ) {
        let mut a = a_start.max(r0);
        let mut r = r0;
        for inc in increments {
            a = (a + inc).min(1.0);
            r = regulation_step(r, a, delta, dt).unwrap();
            prop_assert!(r <= a);
        }
    }
}

#[test]
fn converges_to_one() {
    let mut e = 0.0;
    let mut a = 0.0;
    for _ in 0..5000 {
        e = education_step(e, 0.05, 1.0).unwrap();
        a = adoption_step(a, 0.5, 0.05, 1.0).unwrap();
    }
    assert!(1.0 - e < 1e-12);
    assert!(1.0 - a < 1e-12);
}

#[test]
fn euler_error_halves_with_dt() {
    // max over t in [0, 50]
    for (alpha, e0) in [(0.05, 0.0), (0.1, 0.3), (0.3, 0.01)] {
        let errs: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&dt| education_max_error(alpha, e0, dt, 50.0).unwrap())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..=2.2).contains(&ratio), "alpha {alpha}: ratio {ratio}");
        }
    }
    for (delta, r0, a) in [(0.02, 0.0, 1.0), (0.1, 0.9, 0.2), (0.3, 0.0, 0.6)] {
        let errs: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&dt| regulation_max_error(delta, r0, a, dt, 50.0).unwrap())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..=2.2).contains(&ratio), "delta {delta}: ratio {ratio}");
        }
    }
}
