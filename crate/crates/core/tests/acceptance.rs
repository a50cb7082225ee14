//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eb_core::calculus::{self, Evidence, RuleName, H_PROX_BOUNDED, H_STATIONARY};
use eb_core::catalog::{self, get_default};
use eb_core::certify::{self, CertKind, Certificate, Locality};
use eb_core::envelope::{self, brute_force_all, brute_force_envelope, envelope_grid, Threshold};
use eb_core::fnmodel::{derivative, FunctionSpec, Gap, GridSpec, SamplePlan};
use eb_core::Error;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn cat(name: &str) -> FunctionSpec {
    get_default(name).unwrap().spec.into()
}

fn grid_of(name: &str, a: f64, b: f64, h: f64) -> GridSpec {
    let spec = get_default(name).unwrap().spec;
    GridSpec::covering(a, b, h, |x| spec.eval(x)).unwrap()
}

fn c1_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut nodes = 0usize;
    for g in 0..200 {
        let n = rng.random_range(2..=4096);
        let mut values: Vec<f64> =
            (0..n).map(|_| if rng.random::<f64>() < 0.1 { f64::INFINITY } else { rng.random::<f64>() }).collect();
        if values.iter().all(|v| v.is_infinite()) {
            values[0] = 0.5;
        }
        let h = 10f64.powf(rng.random_range(-4.0..0.0));
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let grid = GridSpec::new(rng.random_range(-1.0..1.0), h, values).unwrap();
        let fast = envelope_grid(&grid, lambda).unwrap();
        let slow = brute_force_all(&grid, lambda).unwrap();
        for (i, (v, set)) in slow.iter().enumerate() {
            if (fast.env[i] - v).abs() > 1e-12 * v.abs().max(1e-300) || &fast.prox_sets[i] != set {
                return Err(format!("grid {g}, node {i}: {} vs {v}", fast.env[i]));
            }
        }
        nodes += n;
    }
    Ok(format!("200 grids, {nodes} nodes, envelopes and proximal sets identical"))
}

fn c2_analytic_envelopes() -> Outcome {
    let q = grid_of("quadratic", -1.0, 1.0, 1e-3);
    let eq = envelope_grid(&q, 0.5).unwrap();
    let err_q = (0..q.len()).map(|i| (eq.env[i] - q.node(i).powi(2) / 2.0).abs()).fold(0.0, f64::max);
    let a = grid_of("absval", -1.0, 1.0, 1e-3);
    let ea = envelope_grid(&a, 0.5).unwrap();
    let huber = |x: f64| if x.abs() <= 0.5 { x * x } else { x.abs() - 0.25 };
    let err_a = (0..a.len()).map(|i| (ea.env[i] - huber(a.node(i))).abs()).fold(0.0, f64::max);
    let msg = format!("quadratic max error {err_q:.3e}, Huber max error {err_a:.3e}");
    check(err_q <= 1e-5 && err_a <= 1e-5, msg.clone(), msg)
}

fn c3_staircase_lseb() -> Outcome {
    let f = cat("staircase");
    let cert = Certificate {
        kind: CertKind::Lseb,
        gamma: 1.0,
        mu: 0.501,
        locality: Locality::Point(0.0),
        eta: 0.2,
        nu: Gap::Unbounded,
        fbar: 0.0,
        rho: None,
    };
    let r = certify::validate(&f, &cert, &SamplePlan::new(0.0, 0.2, Gap::Unbounded, 200, 7)).map_err(|e| e.to_string())?;
    let plan = SamplePlan::new(0.0, 0.2, Gap::Unbounded, 200, 8);
    let (fit, _) = certify::estimate(&f, CertKind::Lseb, 0.0, &plan).map_err(|e| e.to_string())?;
    let msg = format!(
        "{} samples, {} violations, tightMu {:.4}, gamma_hat {:.4}",
        r.samples,
        r.failures.len(),
        r.tight_mu,
        fit.gamma_hat
    );
    let ok = r.samples == 200
        && r.passed
        && (0.9..=1.1).contains(&fit.gamma_hat)
        && (0.45..=0.55).contains(&r.tight_mu);
    check(ok, msg.clone(), msg)
}

fn c4_kl_failure() -> Outcome {
    let pts: Vec<f64> = (10..=200).map(|n| 1.0 / (n as f64 - 1.0) - 1e-9).collect();
    let s = certify::kl_failure_scan(&cat("staircase"), 0.0, &[0.0, 0.25, 0.5, 0.75], &pts).map_err(|e| e.to_string())?;
    for row in &s.rows {
        for (k, q) in row.quotients.iter().enumerate() {
            let n = (k + 10) as f64;
            let bound = 2.0 * n.powf(row.alpha) / (n - 1.0);
            if *q > bound * (1.0 + 1e-6) {
                return Err(format!("alpha {}: q = {q} > {bound} at n = {n}", row.alpha));
            }
        }
        if !row.vanishing {
            return Err(format!("alpha {} not flagged vanishing (slope {:.3})", row.alpha, row.slope));
        }
    }
    Ok("all quotients within 2n^a/(n-1); vanishing flagged for a = 0, 0.25, 0.5, 0.75".into())
}

fn c5_oscillatory() -> Outcome {
    let f = cat("oscillatory");
    let mut worst: f64 = 0.0;
    for k in 1..=20 {
        let x = 1.0 / (2.0 * k as f64 * PI);
        let (dm, dp) = derivative(&f, x).map_err(|e| e.to_string())?;
        let want = 3.0 / (k as f64 * PI);
        worst = worst.max((dm - want).abs()).max((dp - want).abs());
    }
    let scan = certify::stationary_scan(&f, 0.001, 0.1, 1e-6).map_err(|e| e.to_string())?;
    let cert = Certificate {
        kind: CertKind::Lheb,
        gamma: 2.0,
        mu: 1.0,
        locality: Locality::Point(0.0),
        eta: 0.3,
        nu: Gap::Unbounded,
        fbar: 0.0,
        rho: None,
    };
    let r = certify::validate(&f, &cert, &SamplePlan::new(0.0, 0.3, Gap::Unbounded, 500, 11)).map_err(|e| e.to_string())?;
    let msg = format!(
        "derivative error {worst:.2e}, {} stationary brackets, LHEB {} samples / {} violations",
        scan.count,
        r.samples,
        r.failures.len()
    );
    check(worst <= 1e-12 && scan.count >= 10 && r.samples == 500 && r.passed, msg.clone(), msg)
}

fn c6_transfers() -> Outcome {
    let cases: Vec<(&str, eb_core::Result<calculus::Transfer>, f64, f64)> = vec![
        ("kl2lseb(0.5,1)", calculus::kl_to_lseb(0.5, 1.0), 1.0, 2.0),
        ("kl2lseb(0,3)", calculus::kl_to_lseb(0.0, 3.0), 0.0, 3.0),
        ("kl2lseb(2/3,1)", calculus::kl_to_lseb(2.0 / 3.0, 1.0), 2.0, 9.0),
        ("lseb2lheb(1,0.5)", calculus::lseb_to_lheb(1.0, 0.5), 2.0, 2.0),
        ("lseb2lheb(0,0.7)", calculus::lseb_to_lheb(0.0, 0.7), 1.0, 0.7),
        ("lseb2lheb(2,1)", calculus::lseb_to_lheb(2.0, 1.0), 3.0, 6.75),
        ("lheb2lseb(2,1,1)", calculus::lheb_to_lseb_proxreg(2.0, 1.0, 1.0, 0.01), 1.0, 2.0),
        ("lheb2lseb(2,1,0)", calculus::lheb_to_lseb_proxreg(2.0, 1.0, 0.0, 0.01), 1.0, 1.0),
        ("lheb2lseb(1.5,3)", calculus::lheb_to_lseb_proxreg(1.5, 3.0, 5.0, 0.01), 0.5, 3.03),
        ("lseb2kl(1,1,0)", calculus::lseb_to_kl_proxreg(1.0, 1.0, 0.0), 0.5, 1.0),
        ("lseb2kl(1,2,2)", calculus::lseb_to_kl_proxreg(1.0, 2.0, 2.0), 0.5, 6f64.sqrt()),
        ("lseb2kl(0.5,1,0)", calculus::lseb_to_kl_proxreg(0.5, 1.0, 0.0), 1.0 / 3.0, 1.0),
        ("env-lseb(1,0.5,0.5)", calculus::lseb_envelope_transfer(1.0, 0.5, 0.5), 1.0, 1.0),
        ("env-lseb(0,0.3,0.2)", calculus::lseb_envelope_transfer(0.0, 0.3, 0.2), 1.0, 0.5),
        ("env-lseb(2,2,0.5)", calculus::lseb_envelope_transfer(2.0, 2.0, 0.5), 2.0, 4.5),
        ("env-lheb(2,1,0.5)", calculus::lheb_envelope_transfer(2.0, 1.0, 0.5), 2.0, 2.0),
        ("env-lheb(1,0.6,0.3)", calculus::lheb_envelope_transfer(1.0, 0.6, 0.3), 2.0, 1.2),
        ("env-lheb(3,4,1)", calculus::lheb_envelope_transfer(3.0, 4.0, 1.0), 3.0, 16.0),
    ];
    for (name, got, g, m) in &cases {
        let t = got.as_ref().map_err(|e| format!("{name}: {e}"))?;
        if (t.gamma - g).abs() > 1e-12 || (t.mu - m).abs() > 1e-12 * m.max(1.0) {
            return Err(format!("{name}: got ({}, {}), want ({g}, {m})", t.gamma, t.mu));
        }
    }
    let errors = [
        matches!(calculus::kl_to_lseb(1.0, 1.0), Err(Error::ExponentOutOfRange { .. })),
        matches!(calculus::lheb_to_lseb_proxreg(2.5, 1.0, 0.0, 0.01), Err(Error::ExponentOutOfRange { .. })),
        matches!(calculus::lheb_to_lseb_proxreg(2.0, 1.0, 2.0, 0.01), Err(Error::ConstantTooLarge { .. })),
        matches!(calculus::lseb_to_kl_proxreg(2.0, 1.0, 0.0), Err(Error::ExponentOutOfRange { .. })),
        matches!(calculus::lseb_to_kl_proxreg(0.0, 1.0, 0.0), Err(Error::ExponentOutOfRange { .. })),
        matches!(calculus::lheb_envelope_transfer(2.0, 0.5, 0.5), Err(Error::HypothesisViolated(_))),
    ];
    check(
        errors.iter().all(|&b| b),
        format!("{} formula instances exact to 1e-12, {} domain errors raised", cases.len(), errors.len()),
        format!("domain errors: {errors:?}"),
    )
}

fn c7_envelope_soundness() -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    for name in ["quadratic", "absval"] {
        let entry = get_default(name).unwrap();
        let base = entry.known_certificates.iter().find(|c| c.kind == CertKind::Lseb).unwrap().clone();
        for lambda in [0.25, 0.5] {
            let g = grid_of(name, -1.0, 1.0, 1e-3);
            let i0 = g.index_of(0.0).unwrap();
            let env = envelope_grid(&g, lambda).unwrap();
            let stationary = env.stationary_at(&g, i0, 1e-12);
            let bounded = envelope::prox_bounded_probe(&entry.spec.clone().into(), lambda, 1e12, false)
                .map(|r| r.finite_everywhere)
                .unwrap_or(false);
            let mut ev = Evidence { lambda: Some(lambda), ..Evidence::default() };
            if stationary {
                ev.verified.push(H_STATIONARY.into());
            }
            if bounded {
                ev.verified.push(H_PROX_BOUNDED.into());
            }
            let d = calculus::apply(RuleName::LsebEnvelope, &base, &ev).map_err(|e| e.to_string())?;
            let ef: FunctionSpec = env.to_grid().unwrap().into();
            let plan = SamplePlan::new(0.0, d.cert.eta, d.cert.nu, 200, 17);
            let r = certify::validate(&ef, &d.cert, &plan).map_err(|e| e.to_string())?;
            let ok = r.passed && r.samples == 200 && stationary;
            all &= ok;
            lines.push(format!(
                "{name} lambda={lambda}: cert ({}, {}) {} samples, {} violations, tightMu {:.6}",
                d.cert.gamma,
                d.cert.mu,
                r.samples,
                r.failures.len(),
                r.tight_mu
            ));
        }
    }
    check(all, lines.join("; "), lines.join("; "))
}

fn c8_audit() -> Outcome {
    let g = grid_of("staircase", -1.0, 1.0, 1e-4);
    let i = g.nearest_index(0.4);
    let (bf, argmins) = brute_force_envelope(&g, 0.5, i).unwrap();
    let entry = get_default("staircase").unwrap();
    let formula = (entry.known_envelopes[0].eval)(0.4, 0.5);
    let audit = catalog::audit_paper_formula("staircase", 0.5, -1.0, 1.0, 1e-4).map_err(|e| e.to_string())?;
    let msg = format!(
        "brute force at x = {:.6} is {bf:.6} (argmin x = {}), formula = {formula:.6}, max discrepancy {:.4} at x = {:.4}",
        g.node(i),
        g.node(argmins[0]),
        audit.max_discrepancy,
        audit.witness_x
    );
    check(
        bf <= 0.160001 && (formula - (0.08 + 2.0 / 9.0)).abs() < 1e-12 && audit.max_discrepancy >= 0.14,
        msg.clone(),
        msg,
    )
}

fn c9_prox_boundedness() -> Outcome {
    let nq = envelope::prox_bounded_probe(&cat("neg_quadratic"), 0.6, 1e12, true).map_err(|e| e.to_string())?;
    let q = envelope::prox_bounded_probe(&cat("quadratic"), 0.6, 1e12, true).map_err(|e| e.to_string())?;
    let t = match nq.threshold_estimate {
        Some(Threshold::Finite(t)) => t,
        other => return Err(format!("neg_quadratic threshold {other:?}")),
    };
    let msg = format!("neg_quadratic threshold {t:.6}, quadratic {:?}", q.threshold_estimate);
    check((0.49..=0.51).contains(&t) && q.threshold_estimate == Some(Threshold::Infinite), msg.clone(), msg)
}

fn c10_uniformize() -> Outcome {
    let point = |gamma, mu, at, eta, nu| Certificate {
        kind: CertKind::Lseb,
        gamma,
        mu,
        locality: Locality::Point(at),
        eta,
        nu: Gap::Finite(nu),
        fbar: 0.0,
        rho: None,
    };
    let a = point(1.0, 1.0, 0.0, 0.4, 0.2);
    let b = point(2.0, 3.0, 0.3, 0.2, 0.1);
    let u = calculus::uniformize(&[a.clone(), b.clone()], &[0.0, 0.1, 0.3], None, None).map_err(|e| e.to_string())?;
    let exact = u.gamma == 2.0 && u.mu == 3.0 && u.eta == 0.1 && u.nu == Gap::Finite(0.1);
    let missing = calculus::uniformize(&[a, b], &[0.0, 0.45], None, None);
    let msg = format!("({}, {}, {}, {:?}); incomplete cover -> {:?}", u.gamma, u.mu, u.eta, u.nu, missing);
    check(exact && matches!(missing, Err(Error::CoverIncomplete { .. })), msg.clone(), msg)
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("envelope oracle equivalence", c1_oracle_equivalence),
        ("analytic envelopes", c2_analytic_envelopes),
        ("staircase LSEB at 0", c3_staircase_lseb),
        ("staircase KL failure", c4_kl_failure),
        ("oscillatory example", c5_oscillatory),
        ("transfer calculus", c6_transfers),
        ("envelope LSEB soundness", c7_envelope_soundness),
        ("staircase envelope audit", c8_audit),
        ("prox-boundedness", c9_prox_boundedness),
        ("uniformize", c10_uniformize),
    ];
    let start = Instant::now();
    let mut failed = BTreeSet::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed.insert(k + 1);
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1}s", criteria.len() - failed.len(), criteria.len(), start.elapsed().as_secs_f64());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
