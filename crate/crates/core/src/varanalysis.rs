//! Estimators for `d(0, ∂f(x))`, `d(x, lev_{≤c} f)`, the prox-regularity
//! modulus, and the proximal-point level condition used by the LHEB
//! envelope transfer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::envelope::envelope_grid;
use crate::error::{Error, Result};
use crate::fnmodel::{derivative, AnalyticSpec, FunctionSpec, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubgradMethod {
    DerivativeOracle,
    GridSecant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubgradDistance {
    pub x: f64,
    pub value: f64,
    pub method: SubgradMethod,
    /// Grid spacing, 0 for the derivative oracle.
    pub spacing: f64,
}

/// Distance from 0 to the interval spanned by two one-sided slopes.
fn interval_distance(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo <= 0.0 && 0.0 <= hi {
        0.0
    } else {
        a.abs().min(b.abs())
    }
}

pub fn subgrad_distance(f: &FunctionSpec, x: f64) -> Result<SubgradDistance> {
    match f {
        FunctionSpec::Analytic(_) => {
            let (dm, dp) = derivative(f, x)?;
            Ok(SubgradDistance { x, value: interval_distance(dm, dp), method: SubgradMethod::DerivativeOracle, spacing: 0.0 })
        }
        FunctionSpec::Grid(g) => {
            let i = g.index_of(x)?;
            grid_subgrad(g, i)
        }
    }
}

pub(crate) fn grid_subgrad(g: &GridSpec, i: usize) -> Result<SubgradDistance> {
    if i == 0 || i + 1 >= g.len() {
        return Err(Error::BoundaryNode { index: i });
    }
    let v = g.values();
    let sm = (v[i] - v[i - 1]) / g.h();
    let sp = (v[i + 1] - v[i]) / g.h();
    let value = if sm <= 0.0 && 0.0 <= sp { 0.0 } else { sm.abs().min(sp.abs()) };
    Ok(SubgradDistance { x: g.node(i), value, method: SubgradMethod::GridSecant, spacing: g.h() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetDistance {
    pub x: f64,
    pub level: f64,
    /// `+inf` when no level-set point lies in the window.
    #[serde(serialize_with = "ser_ext")]
    pub value: f64,
    pub witness: Option<f64>,
}

fn ser_ext<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

impl LevelSetDistance {
    fn found(x: f64, level: f64, w: Option<f64>) -> Self {
        match w {
            Some(w) => LevelSetDistance { x, level, value: (x - w).abs(), witness: Some(w) },
            None => LevelSetDistance { x, level, value: f64::INFINITY, witness: None },
        }
    }
}

const SCAN_STEPS: f64 = 1e5;
const BISECT_STEPS: usize = 60;
const GOLDEN_BUDGET: usize = 4000;

/// `d(x, lev_{≤c} f)` restricted to `[x - window, x + window]`.
pub fn levelset_distance(f: &FunctionSpec, c: f64, x: f64, window: f64) -> LevelSetDistance {
    levelset_distance_hinted(f, c, x, window, &[])
}

/// As [`levelset_distance`], with known candidate members of the level set
/// (for example the base point of a certificate). Hints cap the scan radius.
pub fn levelset_distance_hinted(f: &FunctionSpec, c: f64, x: f64, window: f64, hints: &[f64]) -> LevelSetDistance {
    match f {
        FunctionSpec::Grid(g) => grid_levelset(g, c, x, window),
        FunctionSpec::Analytic(a) => analytic_levelset(a, c, x, window, hints),
    }
}

fn grid_levelset(g: &GridSpec, c: f64, x: f64, window: f64) -> LevelSetDistance {
    let lo = ((x - window - g.x0()) / g.h()).floor().max(0.0) as usize;
    let hi = (((x + window - g.x0()) / g.h()).ceil().max(0.0) as usize).min(g.len() - 1);
    let mut best: Option<(f64, f64)> = None;
    for j in lo..=hi {
        let xj = g.node(j);
        let d = (x - xj).abs();
        if d <= window && g.values()[j] <= c && best.is_none_or(|b| d < b.0) {
            best = Some((d, xj));
        }
    }
    LevelSetDistance::found(x, c, best.map(|b| b.1))
}

fn analytic_levelset(a: &AnalyticSpec, c: f64, x: f64, window: f64, hints: &[f64]) -> LevelSetDistance {
    let inside = |p: f64| a.eval(p) <= c;
    if inside(x) {
        return LevelSetDistance::found(x, c, Some(x));
    }
    let mut best: Option<f64> = None;
    let consider = |p: f64, best: &mut Option<f64>| {
        if (p - x).abs() <= window && best.is_none_or(|b| (p - x).abs() < (b - x).abs()) {
            *best = Some(p);
        }
    };
    for &h in hints {
        if inside(h) {
            consider(h, &mut best);
        }
    }
    for b in a.breakpoints().near(x, window, 64) {
        if inside(b) {
            consider(b, &mut best);
        }
    }

    let step = window / SCAN_STEPS;
    let accept = c + 1e-12 * (1.0 + c.abs());
    let mut golden_left = GOLDEN_BUDGET;
    for dir in [-1.0, 1.0] {
        let mut prev = (x, a.eval(x));
        let mut prev2: Option<(f64, f64)> = None;
        let mut k = 1.0;
        loop {
            let r = k * step;
            if r > window || best.is_some_and(|b| r >= (b - x).abs()) {
                break;
            }
            let p = x + dir * r;
            let fp = a.eval(p);
            if fp <= c {
                // boundary between the last outside point and p
                let (mut out, mut inn) = (prev.0, p);
                for _ in 0..BISECT_STEPS {
                    let mid = 0.5 * (out + inn);
                    if inside(mid) {
                        inn = mid;
                    } else {
                        out = mid;
                    }
                }
                consider(inn, &mut best);
                break;
            }
            if let Some(pp) = prev2 {
                if prev.1 < pp.1 && prev.1 <= fp && golden_left > 0 {
                    let (m, fm, used) = golden_min(a, pp.0.min(p), pp.0.max(p), golden_left);
                    golden_left = golden_left.saturating_sub(used);
                    if fm <= accept {
                        consider(m, &mut best);
                    }
                }
            }
            prev2 = Some(prev);
            prev = (p, fp);
            k += 1.0;
        }
    }
    LevelSetDistance::found(x, c, best)
}

/// Golden-section minimization on `[lo, hi]`, at most `budget` evaluations.
fn golden_min(a: &AnalyticSpec, mut lo: f64, mut hi: f64, budget: usize) -> (f64, f64, usize) {
    const R: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - R * (hi - lo);
    let mut x2 = lo + R * (hi - lo);
    let (mut f1, mut f2) = (a.eval(x1), a.eval(x2));
    let mut used = 2;
    while used < budget.min(120) && hi - lo > f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - R * (hi - lo);
            f1 = a.eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + R * (hi - lo);
            f2 = a.eval(x2);
        }
        used += 1;
    }
    if f1 <= f2 {
        (x1, f1, used)
    } else {
        (x2, f2, used)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxRegularityEstimate {
    pub x_bar: f64,
    pub epsilon: f64,
    pub rho_hat: f64,
    pub sample_pairs: usize,
    /// `(x, y, f(x) + v (y - x) - f(y))` at the pair attaining `rho_hat`.
    pub worst_pair: (f64, f64, f64),
}

fn shift_off_breakpoints(a: &AnalyticSpec, x: f64, offset: f64) -> f64 {
    match a.breakpoints().nearest(x) {
        Some(b) if (x - b).abs() < offset => {
            if x >= b {
                b + offset
            } else {
                b - offset
            }
        }
        _ => x,
    }
}

/// Sampled prox-regularity modulus at `x_bar` for `v̄ = 0`, with the gates
/// `f(x) < f(x̄) + ε` and `|v| < ε`.
pub fn prox_regularity_modulus(
    f: &FunctionSpec,
    x_bar: f64,
    epsilon: f64,
    pair_count: usize,
    seed: u64,
) -> Result<ProxRegularityEstimate> {
    let a = match f {
        FunctionSpec::Analytic(a) if a.has_derivative() => a,
        _ => return Err(Error::NoDerivativeOracle),
    };
    if !(epsilon > 0.0) || pair_count == 0 {
        return Err(Error::InvalidArgument("epsilon and pair count must be positive".into()));
    }
    let fbar = a.eval(x_bar);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = 0;
    let mut rho: f64 = 0.0;
    let mut worst = (f64::NAN, f64::NAN, f64::NAN);
    for _ in 0..pair_count * 10 {
        if pairs == pair_count {
            break;
        }
        let x = shift_off_breakpoints(a, x_bar + epsilon * (2.0 * rng.random::<f64>() - 1.0), 1e-9);
        let y = shift_off_breakpoints(a, x_bar + epsilon * (2.0 * rng.random::<f64>() - 1.0), 1e-9);
        if (x - x_bar).abs() >= epsilon || (y - x_bar).abs() >= epsilon || x == y {
            continue;
        }
        let fx = a.eval(x);
        if !(fx < fbar + epsilon) {
            continue;
        }
        let v = match derivative(f, x) {
            Ok((dm, dp)) if dm == dp => dm,
            _ => continue,
        };
        if v.abs() >= epsilon {
            continue;
        }
        let fy = a.eval(y);
        if !fy.is_finite() {
            continue;
        }
        pairs += 1;
        let deficit = fx + v * (y - x) - fy;
        let r = 2.0 * deficit / ((y - x) * (y - x));
        if worst.0.is_nan() || r > rho {
            rho = rho.max(r);
            worst = (x, y, deficit);
        }
    }
    if pairs == 0 {
        return Err(Error::NoAdmissiblePairs);
    }
    Ok(ProxRegularityEstimate { x_bar, epsilon, rho_hat: rho, sample_pairs: pairs, worst_pair: worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CondMode {
    Direct,
    Sufficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondWitness {
    pub x: f64,
    pub fx: f64,
    /// Largest `f(y)` over the proximal set of `x`.
    pub prox_max_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub mode: CondMode,
    pub lambda: f64,
    pub x_bar: f64,
    pub holds: Tri,
    pub tested: usize,
    pub witnesses: Vec<CondWitness>,
}

/// Grid used when checking an analytic function.
#[derive(Debug, Clone, Copy)]
pub struct CondGrid {
    pub h: f64,
    /// Extra half-width around `B(x̄, ε̄)`; proximal points may lie far away.
    pub margin: f64,
}

impl CondGrid {
    pub fn default_for(lambda: f64) -> Self {
        CondGrid { h: 1e-3, margin: 2.0 + 2.0 * lambda }
    }
}

/// Checks that every `x ∈ B(x̄, ε̄)` with `f(x) > f(x̄)` has a proximal point
/// `y` with `f(y) ≥ f(x̄)`.
///
/// Direct mode tests sampled nodes against the grid proximal sets. Sufficient
/// mode only looks for global-minimum evidence on the grid window and answers
/// `unknown` otherwise.
pub fn check_condition_iii(
    f: &FunctionSpec,
    lambda: f64,
    x_bar: f64,
    eps_bar: f64,
    sample_count: usize,
    mode: CondMode,
) -> Result<ConditionReport> {
    check_condition_iii_on(f, lambda, x_bar, eps_bar, sample_count, mode, CondGrid::default_for(lambda))
}

pub fn check_condition_iii_on(
    f: &FunctionSpec,
    lambda: f64,
    x_bar: f64,
    eps_bar: f64,
    sample_count: usize,
    mode: CondMode,
    grid: CondGrid,
) -> Result<ConditionReport> {
    if !(eps_bar > 0.0) || sample_count == 0 {
        return Err(Error::InvalidArgument("eps and sample count must be positive".into()));
    }
    let (g, fbar) = match f {
        FunctionSpec::Grid(g) => (g.clone(), g.values()[g.index_of(x_bar)?]),
        FunctionSpec::Analytic(a) => {
            let r = eps_bar + grid.margin;
            (GridSpec::covering(x_bar - r, x_bar + r, grid.h, |x| a.eval(x))?, a.eval(x_bar))
        }
    };
    let tol = 1e-9 * (1.0 + fbar.abs());
    let mut report = ConditionReport { mode, lambda, x_bar, holds: Tri::Unknown, tested: 0, witnesses: vec![] };

    match mode {
        CondMode::Sufficient => {
            report.tested = g.len();
            let below = g.values().iter().enumerate().find(|(_, v)| **v < fbar - tol);
            match below {
                None => report.holds = Tri::True,
                Some((j, v)) => {
                    report.witnesses.push(CondWitness { x: g.node(j), fx: *v, prox_max_f: f64::NAN });
                }
            }
        }
        CondMode::Direct => {
            let env = envelope_grid(&g, lambda)?;
            let nodes: Vec<usize> = (0..g.len())
                .filter(|&j| (g.node(j) - x_bar).abs() < eps_bar && g.values()[j] > fbar)
                .collect();
            let stride = nodes.len().div_ceil(sample_count).max(1);
            for &j in nodes.iter().step_by(stride) {
                report.tested += 1;
                let m = env.prox_sets[j].iter().map(|&k| g.values()[k]).fold(f64::NEG_INFINITY, f64::max);
                if m < fbar - tol {
                    report.witnesses.push(CondWitness { x: g.node(j), fx: g.values()[j], prox_max_f: m });
                }
            }
            report.holds = if report.tested == 0 {
                Tri::Unknown
            } else if report.witnesses.is_empty() {
                Tri::True
            } else {
                Tri::False
            };
        }
    }
    Ok(report)
}
