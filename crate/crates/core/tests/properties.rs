use proptest::prelude::*;

use eb_core::calculus::{self, Evidence, RuleName};
use eb_core::catalog::get_default;
use eb_core::certify::{self, CertKind, Certificate, Locality};
use eb_core::envelope::{brute_force_all, envelope_grid};
use eb_core::fnmodel::{sample, FunctionSpec, Gap, GridSpec, SamplePlan};

fn grid_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![9 => -5.0..5.0f64, 1 => Just(f64::INFINITY)], 2..80).prop_map(|mut v| {
        if v.iter().all(|x| x.is_infinite()) {
            v[0] = 0.0;
        }
        v
    })
}

fn lseb(gamma: f64, mu: f64) -> Certificate {
    Certificate {
        kind: CertKind::Lseb,
        gamma,
        mu,
        locality: Locality::Point(0.0),
        eta: 1.0,
        nu: Gap::Unbounded,
        fbar: 0.0,
        rho: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fast_envelope_matches_brute_force(values in grid_values(), x0 in -2.0..2.0f64, h in 1e-3..0.5f64, lambda in 1e-3..10.0f64) {
        let g = GridSpec::new(x0, h, values).unwrap();
        let fast = envelope_grid(&g, lambda).unwrap();
        let slow = brute_force_all(&g, lambda).unwrap();
        for (i, (v, set)) in slow.iter().enumerate() {
            prop_assert!((fast.env[i] - v).abs() <= 1e-12 * v.abs().max(1e-300), "node {}: {} vs {}", i, fast.env[i], v);
            prop_assert_eq!(&fast.prox_sets[i], set);
        }
    }

    #[test]
    fn envelope_minorizes(values in grid_values(), h in 1e-3..0.5f64, lambda in 1e-3..10.0f64) {
        let g = GridSpec::new(0.0, h, values).unwrap();
        let e = envelope_grid(&g, lambda).unwrap();
        for i in 0..g.len() {
            prop_assert!(e.env[i] <= g.values()[i]);
            prop_assert!(!e.prox_sets[i].is_empty());
        }
    }

    #[test]
    fn envelope_decreases_in_lambda(values in grid_values(), h in 1e-3..0.5f64, l1 in 1e-3..5.0f64, dl in 0.0..5.0f64) {
        let g = GridSpec::new(0.0, h, values).unwrap();
        let a = envelope_grid(&g, l1).unwrap();
        let b = envelope_grid(&g, l1 + dl).unwrap();
        for i in 0..g.len() {
            prop_assert!(b.env[i] <= a.env[i] + 1e-12 * a.env[i].abs().max(1.0));
        }
    }

    #[test]
    fn transfers_are_deterministic(gamma in 0.0..3.0f64, mu in 0.01..10.0f64, lambda in 0.01..5.0f64) {
        let ev = Evidence { lambda: Some(lambda), ..Evidence::default() };
        for rule in [RuleName::LsebToLheb, RuleName::LsebEnvelope] {
            let a = calculus::apply(rule, &lseb(gamma, mu), &ev).unwrap();
            let b = calculus::apply(rule, &lseb(gamma, mu), &ev).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn exponent_round_trip(gamma in 0.0..1.0f64, mu in 0.01..10.0f64) {
        let up = calculus::lseb_to_lheb(gamma, mu).unwrap();
        prop_assert!((up.gamma - (gamma + 1.0)).abs() <= 1e-12);
        let down = calculus::lheb_to_lseb_proxreg(up.gamma, up.mu, 0.0, 0.01).unwrap();
        prop_assert!((down.gamma - gamma).abs() <= 1e-12);
    }

    #[test]
    fn envelope_transfer_monotone(gamma in 0.0..3.0f64, mu in 0.01..10.0f64, l1 in 0.01..5.0f64, dl in 0.0..5.0f64, dm in 0.0..5.0f64) {
        let a = calculus::lseb_envelope_transfer(gamma, mu, l1).unwrap();
        let b = calculus::lseb_envelope_transfer(gamma, mu, l1 + dl).unwrap();
        let c = calculus::lseb_envelope_transfer(gamma, mu + dm, l1).unwrap();
        if gamma >= 1.0 {
            prop_assert!(b.mu >= a.mu * (1.0 - 1e-12));
        }
        prop_assert!(c.mu >= a.mu * (1.0 - 1e-12));
    }

    #[test]
    fn sampling_is_pure_and_in_region(seed in any::<u64>(), radius in 0.01..0.5f64, gap in 0.5..1.0f64, count in 1usize..100) {
        let f: FunctionSpec = get_default("absval").unwrap().spec.into();
        let plan = SamplePlan::new(0.0, radius, Gap::from_f64(gap), count, seed);
        let a = sample(&f, &plan).unwrap();
        let b = sample(&f, &plan).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.len() <= count);
        for (x, fx) in a {
            prop_assert!(x.abs() > 0.0 && x.abs() < radius);
            prop_assert!(fx > 0.0 && fx < gap);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn validation_monotone_in_mu(seed in 0u64..1000, mu in 0.1..3.0f64, dm in 0.0..3.0f64) {
        let f: FunctionSpec = get_default("quadratic").unwrap().spec.into();
        let cert = Certificate { kind: CertKind::Lheb, gamma: 2.0, mu, locality: Locality::Point(0.0), eta: 0.5, nu: Gap::Unbounded, fbar: 0.0, rho: None };
        let r = certify::validate(&f, &cert, &SamplePlan::new(0.0, 0.5, Gap::Unbounded, 50, seed)).unwrap();
        if r.passed {
            prop_assert!(r.rejudge(mu + dm).passed);
        }
        prop_assert!(r.rejudge(r.tight_mu).passed);
    }
}
