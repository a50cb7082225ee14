//! Error-bound certificates: validation by sampling, exponent estimation,
//! and the two failure scans (vanishing KL quotients, stationary sequences).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnmodel::{derivative, evaluate, sample, FunctionSpec, Gap, SamplePlan};
use crate::varanalysis::{levelset_distance_hinted, subgrad_distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CertKind {
    #[serde(rename = "KL")]
    Kl,
    #[serde(rename = "LSEB")]
    Lseb,
    #[serde(rename = "LHEB")]
    Lheb,
    #[serde(rename = "uKL")]
    UKl,
    #[serde(rename = "uLSEB")]
    ULseb,
    #[serde(rename = "uHEB")]
    UHeb,
}

impl CertKind {
    pub fn is_uniform(self) -> bool {
        matches!(self, CertKind::UKl | CertKind::ULseb | CertKind::UHeb)
    }

    /// The pointwise kind behind a uniform one.
    pub fn base(self) -> CertKind {
        match self {
            CertKind::UKl => CertKind::Kl,
            CertKind::ULseb => CertKind::Lseb,
            CertKind::UHeb => CertKind::Lheb,
            k => k,
        }
    }

    pub fn uniform(self) -> CertKind {
        match self {
            CertKind::Kl => CertKind::UKl,
            CertKind::Lseb => CertKind::ULseb,
            CertKind::Lheb => CertKind::UHeb,
            k => k,
        }
    }

    pub fn parse(s: &str) -> Result<CertKind> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "kl" => CertKind::Kl,
            "lseb" => CertKind::Lseb,
            "lheb" => CertKind::Lheb,
            "ukl" => CertKind::UKl,
            "ulseb" => CertKind::ULseb,
            "uheb" => CertKind::UHeb,
            _ => return Err(Error::InvalidArgument(format!("unknown certificate kind `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locality {
    Point(f64),
    Set(Vec<f64>),
}

impl Locality {
    pub fn centers(&self) -> Vec<f64> {
        match self {
            Locality::Point(x) => vec![*x],
            Locality::Set(v) => v.clone(),
        }
    }
}

fn unbounded() -> Gap {
    Gap::Unbounded
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub gamma: f64,
    pub mu: f64,
    pub locality: Locality,
    pub eta: f64,
    /// Level gap; ignored by LHEB and uHEB.
    #[serde(default = "unbounded")]
    pub nu: Gap,
    pub fbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl Certificate {
    pub fn check(&self) -> Result<()> {
        let g = self.gamma;
        match self.kind.base() {
            CertKind::Kl if !(0.0..1.0).contains(&g) => {
                return Err(Error::ExponentOutOfRange { gamma: g, range: "[0, 1)" })
            }
            CertKind::Lheb if !(g > 0.0) || !g.is_finite() => {
                return Err(Error::ExponentOutOfRange { gamma: g, range: "(0, inf)" })
            }
            CertKind::Lseb if !(g >= 0.0) || !g.is_finite() => {
                return Err(Error::ExponentOutOfRange { gamma: g, range: "[0, inf)" })
            }
            _ => {}
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidCertificate(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidCertificate(format!("eta must be positive, got {}", self.eta)));
        }
        if self.rho.is_some_and(|r| !(r >= 0.0)) {
            return Err(Error::InvalidCertificate("rho must be nonnegative".into()));
        }
        match (&self.locality, self.kind.is_uniform()) {
            (Locality::Set(v), true) if !v.is_empty() => Ok(()),
            (Locality::Point(_), false) => Ok(()),
            _ => Err(Error::InvalidCertificate(format!(
                "{:?} certificates need a {} locality",
                self.kind,
                if self.kind.is_uniform() { "nonempty set" } else { "point" }
            ))),
        }
    }

    fn gap(&self) -> Gap {
        match self.kind.base() {
            CertKind::Lheb => Gap::Unbounded,
            _ => self.nu,
        }
    }
}

/// `d^γ` with `d^0 = 1` for `d > 0` and `0` at `d = 0`.
pub fn pow_gamma(d: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        if d > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        d.powf(gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub x: f64,
    pub fx: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl SampleRecord {
    fn violation(&self, mu: f64) -> f64 {
        self.lhs - mu * self.rhs
    }

    fn fails(&self, mu: f64) -> bool {
        self.violation(mu) > 1e-9 * (1.0 + self.lhs.abs()) || self.violation(mu).is_nan()
    }

    fn quotient(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub cert: Certificate,
    pub samples: usize,
    pub worst_violation: f64,
    pub tight_mu: f64,
    pub passed: bool,
    /// `(x, lhs, rhs)` for each failing sample.
    pub failures: Vec<(f64, f64, f64)>,
    pub records: Vec<SampleRecord>,
}

impl ValidationReport {
    fn judge(cert: Certificate, records: Vec<SampleRecord>) -> Self {
        let mu = cert.mu;
        let worst = records.iter().map(|r| r.violation(mu)).fold(f64::NEG_INFINITY, f64::max);
        let tight = records.iter().map(SampleRecord::quotient).fold(0.0, f64::max);
        let failures: Vec<_> = records.iter().filter(|r| r.fails(mu)).map(|r| (r.x, r.lhs, r.rhs)).collect();
        ValidationReport {
            samples: records.len(),
            worst_violation: worst,
            tight_mu: tight,
            passed: failures.is_empty(),
            failures,
            cert,
            records,
        }
    }

    /// The same samples judged against another constant.
    pub fn rejudge(&self, mu: f64) -> ValidationReport {
        let mut cert = self.cert.clone();
        cert.mu = mu;
        ValidationReport::judge(cert, self.records.clone())
    }
}

fn record(f: &FunctionSpec, kind: CertKind, gamma: f64, fbar: f64, centers: &[f64], x: f64, fx: f64) -> Result<SampleRecord> {
    let lev = || {
        let window = centers.iter().map(|c| (x - c).abs()).fold(f64::INFINITY, f64::min);
        levelset_distance_hinted(f, fbar, x, window, centers).value
    };
    let (lhs, rhs) = match kind.base() {
        CertKind::Kl => (pow_gamma(fx - fbar, gamma), subgrad_distance(f, x)?.value),
        CertKind::Lseb => (pow_gamma(lev(), gamma), subgrad_distance(f, x)?.value),
        _ => (pow_gamma(lev(), gamma), fx - fbar),
    };
    Ok(SampleRecord { x, fx, lhs, rhs })
}

fn collect_samples(f: &FunctionSpec, cert: &Certificate, plan: &SamplePlan) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for (k, c) in cert.locality.centers().into_iter().enumerate() {
        let p = SamplePlan { center: c, radius: cert.eta, gap: cert.gap(), seed: plan.seed.wrapping_add(k as u64), ..*plan };
        match sample(f, &p) {
            Ok(s) => pts.extend(s),
            Err(Error::EmptyRegion { .. }) if cert.kind.is_uniform() => {}
            Err(e) => return Err(e),
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptyRegion { attempts: plan.count * 10 });
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    Ok(pts)
}

/// Samples `B(x̄, η) ∩ [f̄ < f < f̄ + ν]` (around every node of Ω for uniform
/// kinds) and checks the certificate's inequality at each sample. The plan
/// supplies count, seed, and breakpoint offset; center, radius, and gap come
/// from the certificate.
pub fn validate(f: &FunctionSpec, cert: &Certificate, plan: &SamplePlan) -> Result<ValidationReport> {
    cert.check()?;
    for c in cert.locality.centers() {
        let v = evaluate(f, c)?;
        if (v - cert.fbar).abs() > 1e-9 * (1.0 + cert.fbar.abs()) {
            return Err(Error::NonConstantOnSet(format!("f({c}) = {v} but the certificate has fbar = {}", cert.fbar)));
        }
    }
    let pts = collect_samples(f, cert, plan)?;
    let centers = cert.locality.centers();
    let records = pts
        .par_iter()
        .map(|&(x, fx)| record(f, cert.kind, cert.gamma, cert.fbar, &centers, x, fx))
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport::judge(cert.clone(), records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub kind: CertKind,
    pub gamma_hat: f64,
    pub intercept_hat: f64,
    /// RMS of the log-scale residuals.
    pub residual: f64,
    pub samples: usize,
}

/// Ordinary least squares `y ≈ slope x + intercept`; returns (slope, intercept, rms).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - icpt).powi(2)).sum();
    Ok((slope, icpt, (rss / n).sqrt()))
}

/// Fits the exponent of `kind` at `x̄` and suggests a certificate with `γ`
/// rounded to a multiple of 1/12 and `μ = 1.05 · tightMu`.
///
/// KL: slope of `log d(0,∂f)` against `log(f - f̄)`. LSEB: slope of
/// `log d(0,∂f)` against `log d(x, lev)`. LHEB: slope of `log(f - f̄)`
/// against `log d(x, lev)`.
pub fn estimate(f: &FunctionSpec, kind: CertKind, x_bar: f64, plan: &SamplePlan) -> Result<(ExponentFit, Certificate)> {
    let kind = kind.base();
    let fbar = evaluate(f, x_bar)?;
    let plan = SamplePlan { center: x_bar, ..*plan };
    let pts = sample(f, &plan)?;
    let centers = [x_bar];
    let raw: Vec<(f64, f64, f64, f64)> = pts
        .par_iter()
        .map(|&(x, fx)| -> Result<_> {
            // (x, fx, regressor, response)
            let sub = || subgrad_distance(f, x).map(|d| d.value);
            let lev = || levelset_distance_hinted(f, fbar, x, (x - x_bar).abs(), &centers).value;
            Ok(match kind {
                CertKind::Kl => (x, fx, fx - fbar, sub()?),
                CertKind::Lseb => (x, fx, lev(), sub()?),
                _ => (x, fx, lev(), fx - fbar),
            })
        })
        .collect::<Result<_>>()?;
    let usable: Vec<_> = raw
        .iter()
        .filter(|r| r.2 > 0.0 && r.3 > 0.0 && r.2.is_finite() && r.3.is_finite())
        .collect();
    if usable.len() < 8 {
        return Err(Error::InvalidArgument(format!("only {} admissible samples, need 8", usable.len())));
    }
    let xs: Vec<f64> = usable.iter().map(|r| r.2.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.3.ln()).collect();
    let (slope, icpt, rms) = fit_line(&xs, &ys)?;
    let fit = ExponentFit { kind, gamma_hat: slope, intercept_hat: icpt, residual: rms, samples: usable.len() };

    let mut gamma = (slope * 12.0).round() / 12.0;
    match kind {
        CertKind::Kl => gamma = gamma.clamp(0.0, 11.0 / 12.0),
        CertKind::Lheb => gamma = gamma.max(1.0 / 12.0),
        _ => gamma = gamma.max(0.0),
    }
    let records: Vec<SampleRecord> = raw
        .iter()
        .map(|&(x, fx, a, b)| SampleRecord { x, fx, lhs: pow_gamma(a, gamma), rhs: b })
        .collect();
    let tight = records.iter().map(SampleRecord::quotient).fold(0.0, f64::max);
    let cert = Certificate {
        kind,
        gamma,
        mu: 1.05 * tight,
        locality: Locality::Point(x_bar),
        eta: plan.radius,
        nu: if kind == CertKind::Lheb { Gap::Unbounded } else { plan.gap },
        fbar,
        rho: None,
    };
    Ok((fit, cert))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlScanRow {
    pub alpha: f64,
    pub quotients: Vec<f64>,
    /// Slope of `log q` against `log(f - f̄)`.
    pub slope: f64,
    pub vanishing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlScan {
    pub x_bar: f64,
    pub points: Vec<f64>,
    pub gaps: Vec<f64>,
    pub subgrad: Vec<f64>,
    pub rows: Vec<KlScanRow>,
}

/// Decides whether quotients tend to 0 as the gap `f - f̄` shrinks.
///
/// Flags vanishing when `log q` grows with `log(f - f̄)` at slope at least
/// 0.1, the quotient at the smallest gap is below the one at the largest,
/// and along the second half (ordered by decreasing gap) no quotient exceeds
/// its predecessor by more than 10%. A zero final quotient always counts.
pub fn vanishing(gaps: &[f64], quotients: &[f64]) -> (f64, bool) {
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&a, &b| gaps[b].total_cmp(&gaps[a]));
    let q: Vec<f64> = order.iter().map(|&i| quotients[i]).collect();
    let g: Vec<f64> = order.iter().map(|&i| gaps[i]).collect();
    let (Some(&first), Some(&last)) = (q.first(), q.last()) else {
        return (f64::NAN, false);
    };
    let pos: Vec<usize> = (0..q.len()).filter(|&i| q[i] > 0.0 && q[i].is_finite() && g[i] > 0.0).collect();
    let xs: Vec<f64> = pos.iter().map(|&i| g[i].ln()).collect();
    let ys: Vec<f64> = pos.iter().map(|&i| q[i].ln()).collect();
    let slope = fit_line(&xs, &ys).map(|r| r.0).unwrap_or(f64::NAN);
    if last == 0.0 && first > 0.0 {
        return (slope, true);
    }
    let tail = &q[q.len() / 2..];
    let monotone = tail.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    (slope, slope >= 0.1 && last < first && monotone)
}

/// Quotients `q(α, x) = (f(x) - f(x̄))^{-α} · d(0, ∂f(x))`.
pub fn kl_failure_scan(f: &FunctionSpec, x_bar: f64, alphas: &[f64], points: &[f64]) -> Result<KlScan> {
    let fbar = evaluate(f, x_bar)?;
    let mut gaps = Vec::with_capacity(points.len());
    let mut sub = Vec::with_capacity(points.len());
    for &x in points {
        let gap = evaluate(f, x)? - fbar;
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument(format!("f({x}) does not exceed f(x̄)")));
        }
        gaps.push(gap);
        sub.push(subgrad_distance(f, x)?.value);
    }
    let mut rows = Vec::new();
    for &alpha in alphas {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::ExponentOutOfRange { gamma: alpha, range: "[0, 1)" });
        }
        let quotients: Vec<f64> = gaps.iter().zip(&sub).map(|(g, d)| g.powf(-alpha) * d).collect();
        let (slope, v) = vanishing(&gaps, &quotients);
        rows.push(KlScanRow { alpha, quotients, slope, vanishing: v });
    }
    Ok(KlScan { x_bar, points: points.to_vec(), gaps, subgrad: sub, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryScan {
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub count: usize,
    pub brackets: Vec<Bracket>,
}

fn slope_at(f: &FunctionSpec, x: f64) -> Option<f64> {
    derivative(f, x).ok().map(|(a, b)| 0.5 * (a + b))
}

/// Sign changes of the derivative (secants on grids) across `(a, b)`.
/// Analytic brackets are refined by 50 bisection steps; an exact zero is
/// reported once as a degenerate bracket.
pub fn stationary_scan(f: &FunctionSpec, a: f64, b: f64, step: f64) -> Result<StationaryScan> {
    if !(step > 0.0) || !(b > a) {
        return Err(Error::InvalidArgument("need a < b and a positive step".into()));
    }
    let mut brackets = Vec::new();
    match f {
        FunctionSpec::Grid(g) => {
            // secant j lives on [x_j, x_{j+1}]
            let v = g.values();
            let lo = g.nearest_index(a);
            let hi = g.nearest_index(b);
            let s: Vec<(usize, f64)> = (lo..hi).map(|j| (j, (v[j + 1] - v[j]) / g.h())).collect();
            for w in s.windows(2) {
                let ((j, s0), (_, s1)) = (w[0], w[1]);
                if s0 * s1 < 0.0 || (s0 != 0.0 && s1 == 0.0) {
                    let x = g.node(j + 1);
                    brackets.push(Bracket { lo: g.node(j), hi: g.node(j + 2).min(g.last_node()), root: x });
                }
            }
        }
        FunctionSpec::Analytic(_) => {
            let n = ((b - a) / step).floor() as usize;
            let xs: Vec<f64> = (0..=n).map(|k| a + k as f64 * step).filter(|&x| x < b).collect();
            let ds: Vec<Option<f64>> = xs.par_iter().map(|&x| slope_at(f, x)).collect();
            let mut k = 0;
            while k + 1 < xs.len() {
                match (ds[k], ds[k + 1]) {
                    (Some(0.0), _) => {
                        brackets.push(Bracket { lo: xs[k], hi: xs[k], root: xs[k] });
                        // skip the rest of a run of zeros
                        while k + 1 < xs.len() && ds[k + 1] == Some(0.0) {
                            k += 1;
                        }
                    }
                    (Some(d0), Some(d1)) if d0 * d1 < 0.0 => {
                        let (mut l, mut r) = (xs[k], xs[k + 1]);
                        for _ in 0..50 {
                            let m = 0.5 * (l + r);
                            match slope_at(f, m) {
                                Some(0.0) => {
                                    l = m;
                                    r = m;
                                    break;
                                }
                                Some(dm) if (dm < 0.0) == (d0 < 0.0) => l = m,
                                _ => r = m,
                            }
                        }
                        brackets.push(Bracket { lo: xs[k], hi: xs[k + 1], root: 0.5 * (l + r) });
                    }
                    _ => {}
                }
                k += 1;
            }
        }
    }
    Ok(StationaryScan { from: a, to: b, step, count: brackets.len(), brackets })
}
