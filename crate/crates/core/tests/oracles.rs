mod support;

use proptest::prelude::*;
use sleepsense::optimizer::{
    closed_form_metrics, line_search_cap, optimal_theta_r, optimize, stationary_distribution,
    weighted_cost, TwoThresholdPolicy,
};
use sleepsense::params::SystemParams;
use support::{brute_theta_r, exhaustive_optimum, random_params, random_triple, rng, stationary_moments};

fn params(p: f64, e_s: f64, e_t: f64, omega: f64) -> SystemParams {
    SystemParams::new(p, e_s, e_t, omega).unwrap()
}

#[test]
fn closed_form_matches_linear_algebra() {
    let mut r = rng(0x5eed);
    for _ in 0..30 {
        let (t, tr, p) = random_triple(&mut r);
        let pol = TwoThresholdPolicy::new(t, tr).unwrap();
        let par = params(p, 1.3, 0.7, 1.0);
        let cf = closed_form_metrics(pol, &par).unwrap();
        let lu = stationary_moments(t, tr, p, 1.3, 0.7, 10 * tr);
        assert!(lu.mass_at_cap < 1e-10, "{t} {tr} {p}: {}", lu.mass_at_cap);
        assert!((cf.avg_aoi - lu.avg_aoi).abs() < 1e-8, "{t} {tr} {p}: {} vs {}", cf.avg_aoi, lu.avg_aoi);
        assert!((cf.avg_energy - lu.avg_energy).abs() < 1e-8, "{t} {tr} {p}");
    }
}

#[test]
fn hand_computed_stationary_chain() {
    // (1, 3) at p = 0.2: cycle of two sleeps then attempts until success
    let lu = stationary_moments(1, 3, 0.2, 1.0, 1.0, 60);
    let cf = closed_form_metrics(TwoThresholdPolicy::new(1, 3).unwrap(), &params(0.2, 1.0, 1.0, 2.0)).unwrap();
    assert!((lu.avg_energy - 2.0 / 2.6).abs() < 1e-12);
    assert!((lu.avg_aoi - cf.avg_aoi).abs() < 1e-12);
    assert_eq!(lu.states, 60);
}

#[test]
fn theta_r_rule_matches_brute_force() {
    let mut r = rng(41);
    for _ in 0..40 {
        let par = random_params(&mut r);
        for t in [1, 2, 3, 5, 8, 13] {
            assert_eq!(optimal_theta_r(t, &par).unwrap(), brute_theta_r(t, &par, 1000).0, "{par:?} t={t}");
        }
    }
}

#[test]
fn optimizer_matches_exhaustive_search() {
    let mut r = rng(42);
    for _ in 0..20 {
        let par = random_params(&mut r);
        let (pol, m) = optimize(&par).unwrap();
        let (ex, f) = exhaustive_optimum(&par, 200, 1000);
        assert_eq!(pol, ex, "{par:?}");
        assert_eq!(m.weighted_cost, f);
    }
}

#[test]
fn worked_optima() {
    assert_eq!(optimize(&params(0.2, 1.0, 1.0, 2.0)).unwrap().0, TwoThresholdPolicy::new(1, 3).unwrap());
    assert_eq!(optimize(&params(0.2, 1.0, 1.0, 15.0)).unwrap().0, TwoThresholdPolicy::new(3, 8).unwrap());
    assert_eq!(line_search_cap(&params(0.9, 5.0, 5.0, 100.0)), 210);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_equals_stationary_sums(t in 1u32..30, extra in 0u32..40, p in 0.01f64..0.95,
                                          e_s in 0.0f64..4.0, e_t in 0.0f64..4.0) {
        let pol = TwoThresholdPolicy::new(t, t + extra).unwrap();
        let par = params(p, e_s, e_t, 1.0);
        let cf = closed_form_metrics(pol, &par).unwrap();
        let st = stationary_distribution(pol, &par).unwrap();
        prop_assert!((st.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!((st.mean_age() + 0.5 - cf.avg_aoi).abs() < 1e-10 * cf.avg_aoi.max(1.0));
        prop_assert!((st.mean_energy(e_s, e_t) - cf.avg_energy).abs() < 1e-10 * cf.avg_energy.max(1.0));
    }

    #[test]
    fn cost_unimodal_in_theta_r(t in 1u32..20, p in 0.01f64..0.95, e_s in 0.0f64..4.0,
                                e_t in 0.01f64..4.0, omega in 0.1f64..100.0) {
        let par = params(p, e_s, e_t, omega);
        let f: Vec<f64> = (t..t + 400)
            .map(|r| weighted_cost(TwoThresholdPolicy::new(t, r).unwrap(), &par))
            .collect();
        // strictly decreasing then non-decreasing, up to rounding
        let k = f.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let slack = 1e-12 * f[k].abs();
        for w in f[..=k].windows(2) {
            prop_assert!(w[1] <= w[0] + slack);
        }
        for w in f[k..].windows(2) {
            prop_assert!(w[1] >= w[0] - slack);
        }
    }

    #[test]
    fn no_improvement_past_the_cap(p in 0.01f64..0.95, e_s in 0.0f64..4.0,
                                   e_t in 0.01f64..4.0, omega in 0.1f64..100.0) {
        let par = params(p, e_s, e_t, omega);
        let cap = line_search_cap(&par);
        let (_, m) = optimize(&par).unwrap();
        for t in cap..=cap + 50 {
            let r = optimal_theta_r(t, &par).unwrap();
            prop_assert!(weighted_cost(TwoThresholdPolicy::new(t, r).unwrap(), &par) >= m.weighted_cost);
        }
    }

    #[test]
    fn free_sensing_means_no_retransmissions(p in 0.01f64..0.95, e_t in 0.0f64..5.0, omega in 0.01f64..200.0) {
        let (pol, _) = optimize(&params(p, 0.0, e_t, omega)).unwrap();
        prop_assert_eq!(pol.theta_t, 1);
    }

    #[test]
    fn joint_energy_and_weight_scaling_is_invariant(p in 0.01f64..0.95, e_s in 0.0f64..4.0,
                                                    e_t in 0.01f64..4.0, omega in 0.1f64..50.0,
                                                    c in 0.1f64..10.0) {
        // same omega * energy products, so the same optimizer
        let a = optimize(&params(p, e_s, e_t, omega)).unwrap();
        let b = optimize(&params(p, e_s * c, e_t * c, omega / c)).unwrap();
        prop_assert!((a.1.weighted_cost - b.1.weighted_cost).abs() < 1e-9 * a.1.weighted_cost);
        if a.0 != b.0 {
            // only a floating-point tie may separate them
            let fa = weighted_cost(a.0, &params(p, e_s, e_t, omega));
            let fb = weighted_cost(b.0, &params(p, e_s, e_t, omega));
            prop_assert!((fa - fb).abs() < 1e-12 * fa);
        }
    }
}
