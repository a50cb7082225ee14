//! Closed-form transfers between KL, LSEB and LHEB certificates, the
//! envelope transfers, and finite-cover uniformization.
//!
//! Every rule carries a hypothesis ledger. A derived certificate is marked
//! `derived` only when each hypothesis was verified by a checker or asserted
//! by the caller, and `conditional` otherwise.

use std::collections::VecDeque;

use serde::Serialize;

use crate::certify::{CertKind, Certificate, Locality};
use crate::error::{Error, Result};
use crate::fnmodel::{FunctionSpec, Gap};

/// Exponent and constant produced by a transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transfer {
    pub gamma: f64,
    pub mu: f64,
    /// The source only bounds `mu` from below; any larger value is admissible.
    pub open_bound: bool,
}

impl Transfer {
    fn exact(gamma: f64, mu: f64) -> Self {
        Transfer { gamma, mu, open_bound: false }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be nonnegative, got {v}")))
    }
}

pub fn kl_to_lseb(g1: f64, mu1: f64) -> Result<Transfer> {
    if !(0.0..1.0).contains(&g1) {
        return Err(Error::ExponentOutOfRange { gamma: g1, range: "[0, 1)" });
    }
    positive("mu", mu1)?;
    let g2 = g1 / (1.0 - g1);
    let mu2 = (1.0 - g1).powf(-g2) * mu1.powf(1.0 / (1.0 - g1));
    Ok(Transfer::exact(g2, mu2))
}

pub fn lseb_to_lheb(g2: f64, mu2: f64) -> Result<Transfer> {
    if !(g2 >= 0.0) || !g2.is_finite() {
        return Err(Error::ExponentOutOfRange { gamma: g2, range: "[0, inf)" });
    }
    positive("mu", mu2)?;
    // powf gives 0^0 = 1
    let mu3 = (g2 + 1.0).powf(g2 + 1.0) / g2.powf(g2) * mu2;
    Ok(Transfer::exact(g2 + 1.0, mu3))
}

/// Reverse transfer under prox-regularity with modulus `rho`. For
/// `γ₃ ∈ [1, 2)` only `μ₂ > μ₃` is known, materialized as `μ₃ (1 + δ)`.
pub fn lheb_to_lseb_proxreg(g3: f64, mu3: f64, rho: f64, delta: f64) -> Result<Transfer> {
    positive("mu", mu3)?;
    nonneg("rho", rho)?;
    if (1.0..2.0).contains(&g3) {
        positive("delta", delta)?;
        Ok(Transfer { gamma: g3 - 1.0, mu: mu3 * (1.0 + delta), open_bound: true })
    } else if g3 == 2.0 {
        let p = rho * mu3;
        if p >= 2.0 {
            return Err(Error::ConstantTooLarge { product: p });
        }
        Ok(Transfer::exact(1.0, 2.0 * mu3 / (2.0 - p)))
    } else {
        Err(Error::ExponentOutOfRange { gamma: g3, range: "[1, 2]" })
    }
}

pub fn lseb_to_kl_proxreg(g2: f64, mu2: f64, rho: f64) -> Result<Transfer> {
    if !(g2 > 0.0 && g2 < 2.0) {
        return Err(Error::ExponentOutOfRange { gamma: g2, range: "(0, 2)" });
    }
    positive("mu", mu2)?;
    nonneg("rho", rho)?;
    let g1 = (g2 / (1.0 + g2)).max(g2 / 2.0);
    let mu1 = (mu2.powf(1.0 / g2) + 0.5 * rho * mu2.powf(2.0 / g2)).powf(g1);
    Ok(Transfer::exact(g1, mu1))
}

/// LSEB of `e_λf` from an LSEB of `f` at a point where `0 ∈ ∂e_λf(x̄)`.
pub fn lseb_envelope_transfer(gamma: f64, mu: f64, lambda: f64) -> Result<Transfer> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::ExponentOutOfRange { gamma, range: "[0, inf)" });
    }
    positive("mu", mu)?;
    positive("lambda", lambda)?;
    if gamma == 0.0 {
        return Ok(Transfer::exact(1.0, mu + lambda));
    }
    let g = gamma.max(1.0);
    Ok(Transfer::exact(g, lambda * (1.0 + (mu / lambda).powf(1.0 / gamma)).powf(g)))
}

/// LHEB of `e_λf` from an LHEB of `f`; needs `μ ≥ 2λ`.
pub fn lheb_envelope_transfer(gamma: f64, mu: f64, lambda: f64) -> Result<Transfer> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::ExponentOutOfRange { gamma, range: "(0, inf)" });
    }
    positive("mu", mu)?;
    positive("lambda", lambda)?;
    if mu < 2.0 * lambda {
        return Err(Error::HypothesisViolated(format!("mu = {mu} < 2 lambda = {}", 2.0 * lambda)));
    }
    Ok(Transfer::exact(gamma.max(2.0), 2f64.powf((gamma - 1.0).max(1.0)) * mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HypStatus {
    Verified,
    Asserted,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: HypStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivationStatus {
    Derived,
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    KlToLseb,
    LsebToLheb,
    LhebToLsebProxreg,
    LsebToKlProxreg,
    LsebEnvelope,
    LhebEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferRule {
    pub name: RuleName,
    pub input: CertKind,
    pub output: CertKind,
    pub hypotheses: &'static [&'static str],
}

pub const H_PROXREG: &str = "prox-regular with modulus rho";
pub const H_PROX_BOUNDED: &str = "lambda below the prox-boundedness threshold";
pub const H_STATIONARY: &str = "0 in the subdifferential of the envelope at the base point";
pub const H_MU_2LAMBDA: &str = "mu >= 2 lambda";
pub const H_COND_III: &str = "condition (iii): some proximal point y has f(y) >= f(x_bar)";

pub const RULES: [TransferRule; 6] = [
    TransferRule { name: RuleName::KlToLseb, input: CertKind::Kl, output: CertKind::Lseb, hypotheses: &[] },
    TransferRule { name: RuleName::LsebToLheb, input: CertKind::Lseb, output: CertKind::Lheb, hypotheses: &[] },
    TransferRule {
        name: RuleName::LhebToLsebProxreg,
        input: CertKind::Lheb,
        output: CertKind::Lseb,
        hypotheses: &[H_PROXREG],
    },
    TransferRule { name: RuleName::LsebToKlProxreg, input: CertKind::Lseb, output: CertKind::Kl, hypotheses: &[H_PROXREG] },
    TransferRule {
        name: RuleName::LsebEnvelope,
        input: CertKind::Lseb,
        output: CertKind::Lseb,
        hypotheses: &[H_PROX_BOUNDED, H_STATIONARY],
    },
    TransferRule {
        name: RuleName::LhebEnvelope,
        input: CertKind::Lheb,
        output: CertKind::Lheb,
        hypotheses: &[H_PROX_BOUNDED, H_MU_2LAMBDA, H_COND_III],
    },
];

pub fn rule(name: RuleName) -> &'static TransferRule {
    RULES.iter().find(|r| r.name == name).expect("every rule name is registered")
}

/// Side-condition evidence and parameters for [`apply`].
#[derive(Debug, Clone, Default)]
pub struct Evidence {
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub verified: Vec<String>,
    pub asserted: Vec<String>,
}

impl Evidence {
    fn status(&self, h: &str) -> HypStatus {
        if self.verified.iter().any(|v| v == h) {
            HypStatus::Verified
        } else if self.asserted.iter().any(|v| v == h) {
            HypStatus::Asserted
        } else {
            HypStatus::Unchecked
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedCertificate {
    pub rule: RuleName,
    pub cert: Certificate,
    pub ledger: Vec<Hypothesis>,
    pub status: DerivationStatus,
    pub flags: Vec<String>,
}

fn status_of(ledger: &[Hypothesis]) -> DerivationStatus {
    if ledger.iter().all(|h| h.status != HypStatus::Unchecked) {
        DerivationStatus::Derived
    } else {
        DerivationStatus::Conditional
    }
}

fn need(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidArgument(format!("this rule needs {what}")))
}

/// Applies one rule to a certificate, keeping its locality and kind family
/// (pointwise or uniform).
pub fn apply(name: RuleName, src: &Certificate, ev: &Evidence) -> Result<DerivedCertificate> {
    let r = rule(name);
    if src.kind.base() != r.input {
        return Err(Error::InvalidArgument(format!("rule {name:?} takes {:?}, got {:?}", r.input, src.kind)));
    }
    let rho = || ev.rho.or(src.rho);
    let mut flags = Vec::new();
    let t = match name {
        RuleName::KlToLseb => kl_to_lseb(src.gamma, src.mu)?,
        RuleName::LsebToLheb => lseb_to_lheb(src.gamma, src.mu)?,
        RuleName::LhebToLsebProxreg => {
            let t = lheb_to_lseb_proxreg(src.gamma, src.mu, need(rho(), "rho")?, ev.delta.unwrap_or(0.01))?;
            if t.open_bound {
                flags.push(format!("open bound: any constant above {} is admissible", src.mu));
            } else {
                flags.push("the uniform statement has a strict inequality for this constant; equality used".into());
            }
            t
        }
        RuleName::LsebToKlProxreg => lseb_to_kl_proxreg(src.gamma, src.mu, need(rho(), "rho")?)?,
        RuleName::LsebEnvelope => lseb_envelope_transfer(src.gamma, src.mu, need(ev.lambda, "lambda")?)?,
        RuleName::LhebEnvelope => lheb_envelope_transfer(src.gamma, src.mu, need(ev.lambda, "lambda")?)?,
    };
    let mut ledger: Vec<Hypothesis> =
        r.hypotheses.iter().map(|h| Hypothesis { name: h.to_string(), status: ev.status(h) }).collect();
    if name == RuleName::LhebEnvelope {
        // the transfer itself checked mu >= 2 lambda
        for h in ledger.iter_mut().filter(|h| h.name == H_MU_2LAMBDA) {
            h.status = HypStatus::Verified;
        }
    }
    let envelope = matches!(name, RuleName::LsebEnvelope | RuleName::LhebEnvelope);
    let kind = if src.kind.is_uniform() { r.output.uniform() } else { r.output };
    let cert = Certificate {
        kind,
        gamma: t.gamma,
        mu: t.mu,
        locality: src.locality.clone(),
        eta: if envelope { src.eta.min(1.0) / 2.0 } else { src.eta },
        nu: if r.output == CertKind::Lheb { Gap::Unbounded } else { src.nu },
        fbar: src.fbar,
        rho: if matches!(name, RuleName::LhebToLsebProxreg | RuleName::LsebToKlProxreg) { rho() } else { src.rho },
    };
    Ok(DerivedCertificate { rule: name, status: status_of(&ledger), cert, ledger, flags })
}

/// Combines local certificates of one kind into a uniform certificate on
/// Ω: `γ = max γᵢ`, `μ = max μᵢ`, `ε = min εᵢ / 2`, `ν = min νᵢ`. Every node
/// of Ω must lie in some half-radius ball `B(zᵢ, εᵢ/2)`. With `f`, constancy
/// on Ω is also checked by evaluation.
pub fn uniformize(
    certs: &[Certificate],
    omega: &[f64],
    cover_radii: Option<&[f64]>,
    f: Option<&FunctionSpec>,
) -> Result<Certificate> {
    let first = certs.first().ok_or_else(|| Error::InvalidArgument("no certificates to uniformize".into()))?;
    if omega.is_empty() {
        return Err(Error::InvalidArgument("empty node set".into()));
    }
    let radii: Vec<f64> = match cover_radii {
        Some(r) if r.len() == certs.len() => r.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("one cover radius per certificate".into())),
        None => certs.iter().map(|c| c.eta).collect(),
    };
    let mut centers = Vec::with_capacity(certs.len());
    for c in certs {
        c.check()?;
        if c.kind.is_uniform() || c.kind != first.kind {
            return Err(Error::InvalidArgument("uniformize takes pointwise certificates of one kind".into()));
        }
        if (c.fbar - first.fbar).abs() > 1e-9 {
            return Err(Error::NonConstantOnSet(format!("fbar {} vs {}", c.fbar, first.fbar)));
        }
        match c.locality {
            Locality::Point(z) => centers.push(z),
            Locality::Set(_) => unreachable!("checked by Certificate::check"),
        }
    }
    if let Some(f) = f {
        for &w in omega {
            let v = crate::fnmodel::evaluate(f, w)?;
            if (v - first.fbar).abs() > 1e-9 {
                return Err(Error::NonConstantOnSet(format!("f({w}) = {v}, expected {}", first.fbar)));
            }
        }
    }
    for &w in omega {
        if !centers.iter().zip(&radii).any(|(z, e)| (w - z).abs() < e / 2.0) {
            return Err(Error::CoverIncomplete { node: w });
        }
    }
    let gamma = certs.iter().map(|c| c.gamma).fold(f64::NEG_INFINITY, f64::max);
    let mu = certs.iter().map(|c| c.mu).fold(f64::NEG_INFINITY, f64::max);
    let eps = radii.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
    let nu = certs.iter().map(|c| c.nu).fold(Gap::Unbounded, Gap::min);
    let rho = certs.iter().map(|c| c.rho).try_fold(0.0_f64, |m, r| r.map(|r| m.max(r)));
    Ok(Certificate {
        kind: first.kind.uniform(),
        gamma,
        mu,
        locality: Locality::Set(omega.to_vec()),
        eta: eps,
        nu: if first.kind == CertKind::Lheb { Gap::Unbounded } else { nu },
        fbar: first.fbar,
        rho,
    })
}

/// Every certificate reachable from a uniform `start` through the forward
/// rules and, when `rho` is given, the reverse prox-regular rules. Ledgers
/// accumulate along each path.
pub fn equivalence_chain(start: &Certificate, rho: Option<f64>) -> Result<Vec<DerivedCertificate>> {
    start.check()?;
    if !start.kind.is_uniform() {
        return Err(Error::InvalidArgument("the equivalence chain starts from a uniform certificate".into()));
    }
    let ev = Evidence {
        rho,
        asserted: if rho.is_some() { vec![H_PROXREG.to_string()] } else { vec![] },
        ..Evidence::default()
    };
    let mut seen = vec![start.kind];
    let mut out: Vec<DerivedCertificate> = Vec::new();
    let mut queue: VecDeque<(Certificate, Vec<Hypothesis>)> = VecDeque::from([(start.clone(), vec![])]);
    while let Some((c, ledger)) = queue.pop_front() {
        for r in RULES.iter().filter(|r| r.input == c.kind.base() && r.input != r.output) {
            if !r.hypotheses.is_empty() && rho.is_none() {
                continue;
            }
            let target = r.output.uniform();
            if seen.contains(&target) {
                continue;
            }
            let mut d = apply(r.name, &c, &ev)?;
            let mut full = ledger.clone();
            full.extend(d.ledger);
            d.ledger = full;
            d.status = status_of(&d.ledger);
            seen.push(target);
            queue.push_back((d.cert.clone(), d.ledger.clone()));
            out.push(d);
        }
    }
    Ok(out)
}
