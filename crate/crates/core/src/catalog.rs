//! Built-in functions with known certificates and closed-form envelopes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::certify::{CertKind, Certificate, Locality};
use crate::envelope::brute_force_envelope;
use crate::error::{Error, Result};
use crate::fnmodel::{AnalyticSpec, Breakpoints, Gap, GridSpec};

pub const NAMES: [&str; 6] = ["staircase", "oscillatory", "quadratic", "absval", "neg_quadratic", "two_well"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed form checked against the envelope engine.
    Verified,
    /// Stated in the literature but not reproduced by direct minimization.
    PaperDisputed,
}

/// Closed-form Moreau envelope `(x, lambda) -> e_lambda f(x)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KnownEnvelope {
    /// `None` when the formula holds for every `lambda > 0`.
    pub lambda: Option<f64>,
    pub provenance: Provenance,
    pub formula: &'static str,
    #[serde(skip)]
    pub eval: fn(f64, f64) -> f64,
}

impl KnownEnvelope {
    pub fn applies_to(&self, lambda: f64) -> bool {
        self.lambda.is_none_or(|l| l == lambda)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub spec: AnalyticSpec,
    pub known_certificates: Vec<Certificate>,
    pub known_envelopes: Vec<KnownEnvelope>,
    pub notes: String,
}

fn point_cert(kind: CertKind, gamma: f64, mu: f64, at: f64, eta: f64, nu: Gap, fbar: f64) -> Certificate {
    Certificate { kind, gamma, mu, locality: Locality::Point(at), eta, nu, fbar, rho: None }
}

/// Piece index `n` with `1/n < x <= 1/(n-1)`, for `0 < x <= 1/2`.
fn staircase_piece(x: f64) -> f64 {
    let mut n = (1.0 / x).floor() + 1.0;
    if n > 1e15 {
        // consecutive pieces are no longer separable in f64
        return n;
    }
    while 1.0 / n >= x {
        n += 1.0;
    }
    while n > 3.0 && x > 1.0 / (n - 1.0) {
        n -= 1.0;
    }
    n
}

fn staircase(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x > 0.5 {
        x * x + 0.25
    } else {
        let n = staircase_piece(x);
        x * x + 1.0 / n - 1.0 / (n * n)
    }
}

fn staircase_deriv(x: f64) -> Option<(f64, f64)> {
    if x < 0.0 {
        Some((0.0, 0.0))
    } else if x == 0.0 || x == 0.5 {
        None
    } else if x > 0.5 {
        Some((2.0 * x, 2.0 * x))
    } else {
        let n = staircase_piece(x);
        // right end of a piece: the function jumps up just after it
        if x == 1.0 / (n - 1.0) {
            None
        } else {
            Some((2.0 * x, 2.0 * x))
        }
    }
}

/// The formula printed for `e_{1/2} f` of the staircase; it overestimates
/// the envelope (see `audit_paper_formula`).
fn staircase_disputed_envelope(x: f64, _lambda: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x > 0.5 {
        0.5 * x * x + 0.25
    } else {
        let n = staircase_piece(x);
        0.5 * x * x + 1.0 / n - 1.0 / (n * n)
    }
}

fn oscillatory(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x * (2.0 + (1.0 / x).cos())
    }
}

fn oscillatory_deriv(x: f64) -> Option<(f64, f64)> {
    if x == 0.0 {
        return Some((0.0, 0.0));
    }
    let t = 1.0 / x;
    let d = 4.0 * x + 2.0 * x * t.cos() + t.sin();
    Some((d, d))
}

fn quadratic_envelope(x: f64, lambda: f64) -> f64 {
    x * x / (1.0 + 2.0 * lambda)
}

fn huber(x: f64, lambda: f64) -> f64 {
    if x.abs() <= lambda {
        x * x / (2.0 * lambda)
    } else {
        x.abs() - lambda / 2.0
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn check_params(name: &str, params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidArgument(format!("`{name}` has no parameter `{k}`"))),
        None => Ok(()),
    }
}

pub fn get(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let entry = match name {
        "staircase" => {
            check_params(name, params, &[])?;
            CatalogEntry {
                spec: AnalyticSpec::new(name, staircase)
                    .with_derivative(staircase_deriv)
                    .with_breakpoints(Breakpoints::Reciprocal),
                known_certificates: vec![point_cert(CertKind::Lseb, 1.0, 0.5, 0.0, 0.2, Gap::Unbounded, 0.0)],
                known_envelopes: vec![KnownEnvelope {
                    lambda: Some(0.5),
                    provenance: Provenance::PaperDisputed,
                    formula: "0 (x<=0); x^2/2 + 1/n - 1/n^2 (1/n < x <= 1/(n-1), n>=3); x^2/2 + 1/4 (x>1/2)",
                    eval: staircase_disputed_envelope,
                }],
                notes: "Lower semicontinuous staircase with jumps at 1/n. Satisfies the level-set \
                        subdifferential bound at 0 but no KL inequality there."
                    .into(),
            }
        }
        "oscillatory" => {
            check_params(name, params, &[])?;
            CatalogEntry {
                spec: AnalyticSpec::new(name, oscillatory)
                    .with_derivative(oscillatory_deriv)
                    .with_breakpoints(Breakpoints::Points(vec![0.0])),
                known_certificates: vec![point_cert(CertKind::Lheb, 2.0, 1.0, 0.0, 0.3, Gap::Unbounded, 0.0)],
                known_envelopes: vec![],
                notes: "x^2 (2 + cos(1/x)); stationary points accumulate at the global minimizer 0, \
                        so no level-set subdifferential bound holds there."
                    .into(),
            }
        }
        "quadratic" => {
            check_params(name, params, &[])?;
            CatalogEntry {
                spec: AnalyticSpec::new(name, |x| x * x).with_derivative(|x| Some((2.0 * x, 2.0 * x))),
                known_certificates: vec![
                    point_cert(CertKind::Kl, 0.5, 0.5, 0.0, 1.0, Gap::Finite(1.0), 0.0),
                    point_cert(CertKind::Lseb, 1.0, 0.5, 0.0, 1.0, Gap::Unbounded, 0.0),
                    point_cert(CertKind::Lheb, 2.0, 1.0, 0.0, 1.0, Gap::Unbounded, 0.0),
                ],
                known_envelopes: vec![KnownEnvelope {
                    lambda: None,
                    provenance: Provenance::Verified,
                    formula: "x^2 / (1 + 2 lambda)",
                    eval: quadratic_envelope,
                }],
                notes: "x^2".into(),
            }
        }
        "absval" => {
            check_params(name, params, &[])?;
            CatalogEntry {
                spec: AnalyticSpec::new(name, f64::abs)
                    .with_derivative(|x: f64| {
                        if x == 0.0 {
                            Some((-1.0, 1.0))
                        } else {
                            Some((x.signum(), x.signum()))
                        }
                    })
                    .with_breakpoints(Breakpoints::Points(vec![0.0])),
                known_certificates: vec![
                    point_cert(CertKind::Kl, 0.0, 1.0, 0.0, 1.0, Gap::Finite(1.0), 0.0),
                    point_cert(CertKind::Lseb, 0.0, 1.0, 0.0, 1.0, Gap::Unbounded, 0.0),
                    point_cert(CertKind::Lheb, 1.0, 1.0, 0.0, 1.0, Gap::Unbounded, 0.0),
                ],
                known_envelopes: vec![KnownEnvelope {
                    lambda: None,
                    provenance: Provenance::Verified,
                    formula: "x^2/(2 lambda) (|x| <= lambda); |x| - lambda/2 otherwise",
                    eval: huber,
                }],
                notes: "|x|; its envelope is the Huber function.".into(),
            }
        }
        "neg_quadratic" => {
            check_params(name, params, &[])?;
            CatalogEntry {
                spec: AnalyticSpec::new(name, |x| -x * x).with_derivative(|x| Some((-2.0 * x, -2.0 * x))),
                known_certificates: vec![],
                known_envelopes: vec![],
                notes: "-x^2; prox-bounded with threshold 1/2.".into(),
            }
        }
        "two_well" => {
            check_params(name, params, &["sep", "depth"])?;
            let a = param(params, "sep", 1.0);
            let d = param(params, "depth", 1.0);
            if !(a > 0.0) || !(d > 0.0) {
                return Err(Error::InvalidArgument("two_well needs sep > 0 and depth > 0".into()));
            }
            // the wells cross where (x+a)^2 = (x-a)^2 - d
            let kink = -d / (4.0 * a);
            let mut p = BTreeMap::new();
            p.insert("sep".to_string(), a);
            p.insert("depth".to_string(), d);
            let spec = AnalyticSpec::new(name, move |x| ((x + a) * (x + a)).min((x - a) * (x - a) - d))
                .with_derivative(move |x| {
                    let left = 2.0 * (x + a);
                    let right = 2.0 * (x - a);
                    if x < kink {
                        Some((left, left))
                    } else if x > kink {
                        Some((right, right))
                    } else {
                        Some((left, right))
                    }
                })
                .with_breakpoints(Breakpoints::Points(vec![kink]))
                .with_params(p);
            let local_eta = (kink + a).min(a);
            CatalogEntry {
                spec,
                known_certificates: vec![
                    point_cert(CertKind::Kl, 0.5, 0.5, -a, local_eta, Gap::Finite(local_eta * local_eta), 0.0),
                    point_cert(CertKind::Lheb, 2.0, 1.0, -a, local_eta, Gap::Unbounded, 0.0),
                    point_cert(CertKind::Lheb, 2.0, 1.0, a, a - kink, Gap::Unbounded, -d),
                ],
                known_envelopes: vec![],
                notes: "Invented: min((x+sep)^2, (x-sep)^2 - depth). The shallow well at -sep is a \
                        local minimizer whose proximal points jump to the deeper well for large lambda."
                    .into(),
            }
        }
        other => return Err(Error::UnknownEntry(other.to_string())),
    };
    Ok(entry)
}

pub fn get_default(name: &str) -> Result<CatalogEntry> {
    get(name, &BTreeMap::new())
}

/// Node-by-node comparison of a disputed closed-form envelope with brute force.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub name: String,
    pub lambda: f64,
    pub formula: String,
    pub nodes: usize,
    pub max_discrepancy: f64,
    pub mean_discrepancy: f64,
    pub witness_x: f64,
    pub witness_formula: f64,
    pub witness_brute_force: f64,
}

/// Audits the entry's disputed envelope formula on the grid `[a, b]` with spacing `h`.
pub fn audit_paper_formula(name: &str, lambda: f64, a: f64, b: f64, h: f64) -> Result<AuditReport> {
    let entry = get_default(name)?;
    let known = entry
        .known_envelopes
        .iter()
        .find(|k| k.provenance == Provenance::PaperDisputed)
        .ok_or_else(|| Error::NothingToAudit(name.to_string()))?;
    if !known.applies_to(lambda) {
        return Err(Error::InvalidArgument(format!(
            "the disputed formula for `{name}` is stated for lambda = {:?}, not {lambda}",
            known.lambda
        )));
    }
    let spec = entry.spec.clone();
    let grid = GridSpec::covering(a, b, h, |x| spec.eval(x))?;
    let diffs: Vec<(f64, f64, f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let (bf, _) = brute_force_envelope(&grid, lambda, i)?;
            let fm = (known.eval)(x, lambda);
            Ok(((fm - bf).abs(), x, fm, bf))
        })
        .collect::<Result<_>>()?;
    let mut worst = diffs[0];
    let mut sum = 0.0;
    for d in &diffs {
        sum += d.0;
        if d.0 > worst.0 {
            worst = *d;
        }
    }
    Ok(AuditReport {
        name: name.to_string(),
        lambda,
        formula: known.formula.to_string(),
        nodes: grid.len(),
        max_discrepancy: worst.0,
        mean_discrepancy: sum / diffs.len() as f64,
        witness_x: worst.1,
        witness_formula: worst.2,
        witness_brute_force: worst.3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::envelope_grid;
    use crate::fnmodel::{derivative, FunctionSpec};

    #[test]
    fn named_certificates() {
        let s = get_default("staircase").unwrap();
        let c = &s.known_certificates[0];
        assert_eq!((c.kind, c.gamma, c.mu), (CertKind::Lseb, 1.0, 0.5));
        let o = get_default("oscillatory").unwrap();
        let c = &o.known_certificates[0];
        assert_eq!((c.kind, c.gamma, c.mu), (CertKind::Lheb, 2.0, 1.0));
        let q = get_default("quadratic").unwrap();
        let env = q.known_envelopes[0];
        for x in [-1.0, -0.3, 0.0, 0.7] {
            assert_eq!((env.eval)(x, 0.5), x * x / 2.0);
        }
        assert!(matches!(get_default("cubic"), Err(Error::UnknownEntry(_))));
    }

    #[test]
    fn staircase_is_lsc_at_piece_ends() {
        let e = get_default("staircase").unwrap().spec;
        for n in 3..200 {
            let n = n as f64;
            let right = 1.0 / (n - 1.0);
            // value at the right end belongs to piece n
            let expect = right * right + 1.0 / n - 1.0 / (n * n);
            assert!((e.eval(right) - expect).abs() < 1e-15, "n = {n}");
            // just beyond the end the next piece takes over with a larger value
            assert!(e.eval(right + 1e-12) > e.eval(right));
        }
        assert!((e.eval(0.5) - (0.25 + 1.0 / 3.0 - 1.0 / 9.0)).abs() < 1e-15);
        assert!((e.eval(1e-6) - (1e-12 + 1.0 / 1_000_001.0 - 1.0 / 1_000_001.0f64.powi(2))).abs() < 1e-18);
    }

    #[test]
    fn oscillatory_derivative_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let f = FunctionSpec::Analytic(get_default("oscillatory").unwrap().spec);
        let a = f.as_analytic().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let delta = 1e-7;
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.01..1.0);
            let fd = (a.eval(x + delta) - a.eval(x - delta)) / (2.0 * delta);
            let (d, _) = derivative(&f, x).unwrap();
            assert!((fd - d).abs() < 1e-5, "x = {x}: {fd} vs {d}");
        }
    }

    #[test]
    fn catalog_derivatives_match_central_differences() {
        let delta = 1e-6;
        for name in NAMES {
            let entry = get_default(name).unwrap();
            let spec = entry.spec.clone();
            let f = FunctionSpec::Analytic(entry.spec);
            for k in 0..400 {
                let x = -0.97 + k as f64 * 0.0049;
                if let Some(b) = spec.breakpoints().nearest(x) {
                    if (x - b).abs() < 1e-4 {
                        continue;
                    }
                }
                if name == "oscillatory" && x.abs() < 0.05 {
                    // 1/x oscillates faster than delta resolves
                    continue;
                }
                let (dm, dp) = derivative(&f, x).unwrap();
                assert_eq!(dm, dp, "{name} at {x}");
                let fd = (spec.eval(x + delta) - spec.eval(x - delta)) / (2.0 * delta);
                assert!((fd - dm).abs() < 1e-5, "{name} at {x}: {fd} vs {dm}");
            }
        }
    }

    #[test]
    fn verified_envelopes_match_engine() {
        let h: f64 = 1e-3;
        for name in ["quadratic", "absval"] {
            let entry = get_default(name).unwrap();
            let g = entry.spec.to_grid(-1.0, h, 2001).unwrap();
            for lambda in [0.1, 0.25, 0.5, 1.0] {
                let env = envelope_grid(&g, lambda).unwrap();
                let known = entry.known_envelopes[0];
                for i in 0..g.len() {
                    let want = (known.eval)(g.node(i), lambda);
                    let tol = 5.0 * h * h / lambda + 1e-10;
                    assert!((env.env[i] - want).abs() <= tol, "{name} lambda={lambda} node {i}");
                }
            }
        }
    }

    #[test]
    fn audit_contract_cases() {
        assert!(matches!(audit_paper_formula("quadratic", 0.5, -1.0, 1.0, 1e-2), Err(Error::NothingToAudit(_))));
        let flat = audit_paper_formula("staircase", 0.5, -1.0, 0.0, 1e-3).unwrap();
        assert_eq!(flat.max_discrepancy, 0.0);
        assert!(audit_paper_formula("staircase", 0.3, -1.0, 1.0, 1e-2).is_err());
    }

    #[test]
    fn audit_finds_discrepancy() {
        let r = audit_paper_formula("staircase", 0.5, 0.01, 1.0, 1e-4).unwrap();
        assert!(r.max_discrepancy >= 0.14, "{r:?}");
    }
}
