//! Closed proper extended-real functions on the line.
//!
//! A [`FunctionSpec`] is either an analytic catalog member, carrying an
//! evaluation closure and an optional one-sided derivative oracle, or a
//! function sampled on a uniform grid. `+inf` is an ordinary `f64::INFINITY`
//! value; grid functions are never interpolated, the node set is the object.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide that a real coincides with a grid node.
pub const NODE_TOL: f64 = 1e-12;

type EvalFn = dyn Fn(f64) -> f64 + Send + Sync;
type DerivFn = dyn Fn(f64) -> Option<(f64, f64)> + Send + Sync;

/// Where an analytic function is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Real,
    Interval { lo: f64, hi: f64 },
}

impl Domain {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Real => x.is_finite(),
            Domain::Interval { lo, hi } => lo <= x && x <= hi,
        }
    }
}

/// Points where an analytic function is non-smooth or jumps.
#[derive(Debug, Clone, PartialEq)]
pub enum Breakpoints {
    None,
    Points(Vec<f64>),
    /// `{0} ∪ {1/n : n >= 2}`, generated on demand.
    Reciprocal,
}

impl Breakpoints {
    /// Breakpoints within `radius` of `x`, closest first, at most `max` of them.
    pub fn near(&self, x: f64, radius: f64, max: usize) -> Vec<f64> {
        let mut out: Vec<f64> = match self {
            Breakpoints::None => Vec::new(),
            Breakpoints::Points(p) => p.iter().copied().filter(|b| (b - x).abs() <= radius).collect(),
            Breakpoints::Reciprocal => {
                let mut v = Vec::new();
                if x.abs() <= radius {
                    v.push(0.0);
                }
                let lo = (x - radius).max(0.0);
                let hi = (x + radius).min(0.5);
                if hi > 0.0 && hi >= lo {
                    // 1/n in [lo, hi]  <=>  n in [1/hi, 1/lo]
                    let centre = if x > 0.0 { (1.0 / x).round().max(2.0) } else { 2.0 };
                    let n_min = (1.0 / hi).ceil().max(2.0);
                    let n_max = if lo > 0.0 { (1.0 / lo).floor() } else { f64::INFINITY };
                    let half = max as f64;
                    let a = (centre - half).max(n_min);
                    let b = (centre + half).min(n_max);
                    let mut n = a;
                    while n <= b {
                        let p = 1.0 / n;
                        if (p - x).abs() <= radius {
                            v.push(p);
                        }
                        n += 1.0;
                    }
                }
                v
            }
        };
        out.sort_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()));
        out.truncate(max);
        out
    }

    pub fn nearest(&self, x: f64) -> Option<f64> {
        match self {
            Breakpoints::None => None,
            Breakpoints::Points(p) => p.iter().copied().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs())),
            Breakpoints::Reciprocal => {
                let mut best = 0.0_f64;
                if x > 0.0 {
                    let n = (1.0 / x).round().max(2.0);
                    for m in [n - 1.0, n, n + 1.0] {
                        if m >= 2.0 {
                            let p = 1.0 / m;
                            if (p - x).abs() < (best - x).abs() {
                                best = p;
                            }
                        }
                    }
                }
                Some(best)
            }
        }
    }
}

/// An analytic univariate function with optional derivative oracle.
#[derive(Clone)]
pub struct AnalyticSpec {
    name: String,
    params: BTreeMap<String, f64>,
    eval: Arc<EvalFn>,
    deriv: Option<Arc<DerivFn>>,
    breakpoints: Breakpoints,
    domain: Domain,
}

impl fmt::Debug for AnalyticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("has_deriv", &self.deriv.is_some())
            .field("breakpoints", &self.breakpoints)
            .field("domain", &self.domain)
            .finish()
    }
}

impl AnalyticSpec {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        AnalyticSpec {
            name: name.into(),
            params: BTreeMap::new(),
            eval: Arc::new(eval),
            deriv: None,
            breakpoints: Breakpoints::None,
            domain: Domain::Real,
        }
    }

    /// The oracle returns `None` where the derivative is undefined.
    pub fn with_derivative<D>(mut self, deriv: D) -> Self
    where
        D: Fn(f64) -> Option<(f64, f64)> + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn with_breakpoints(mut self, breakpoints: Breakpoints) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.breakpoints
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn has_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !self.domain.contains(x) {
            return f64::INFINITY;
        }
        (self.eval)(x)
    }

    /// Samples the function at the nodes of a uniform grid.
    pub fn to_grid(&self, x0: f64, h: f64, len: usize) -> Result<GridSpec> {
        let values = (0..len).map(|i| self.eval(x0 + i as f64 * h)).collect();
        GridSpec::new(x0, h, values)
    }
}

/// A function known only at the nodes `x0 + i*h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl GridSpec {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidGrid("x0 must be finite".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidGrid("need at least two values".into()));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidGrid("values must be finite or +inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("improper: no finite value".into()));
        }
        Ok(GridSpec { x0, h, values })
    }

    /// Grid covering `[a, b]` with spacing as close to `h` as the interval allows.
    pub fn covering(a: f64, b: f64, h: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        let steps = ((b - a) / h).round().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        let values = (0..=steps).map(|i| f(a + i as f64 * h)).collect();
        GridSpec::new(a, h, values)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn last_node(&self) -> f64 {
        self.node(self.len() - 1)
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = ((x - self.x0) / self.h).round();
        t.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    pub fn index_of(&self, x: f64) -> Result<usize> {
        let t = ((x - self.x0) / self.h).round();
        if t < 0.0 || t > (self.len() - 1) as f64 {
            return Err(Error::OffGridQuery { x });
        }
        let i = t as usize;
        if (self.node(i) - x).abs() <= NODE_TOL * self.h {
            Ok(i)
        } else {
            Err(Error::OffGridQuery { x })
        }
    }

    /// Signed distance between two nodes, computed from the index difference
    /// so that it is exact up to one rounding.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        (j as f64 - i as f64) * self.h
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        GridSpec::new(self.x0, self.h, values)
    }
}

/// Either an analytic function or grid samples.
#[derive(Debug, Clone)]
pub enum FunctionSpec {
    Analytic(AnalyticSpec),
    Grid(GridSpec),
}

impl From<GridSpec> for FunctionSpec {
    fn from(g: GridSpec) -> Self {
        FunctionSpec::Grid(g)
    }
}

impl From<AnalyticSpec> for FunctionSpec {
    fn from(a: AnalyticSpec) -> Self {
        FunctionSpec::Analytic(a)
    }
}

impl FunctionSpec {
    pub fn as_grid(&self) -> Option<&GridSpec> {
        match self {
            FunctionSpec::Grid(g) => Some(g),
            FunctionSpec::Analytic(_) => None,
        }
    }

    pub fn as_analytic(&self) -> Option<&AnalyticSpec> {
        match self {
            FunctionSpec::Analytic(a) => Some(a),
            FunctionSpec::Grid(_) => None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn name(&self) -> &str {
        match self {
            FunctionSpec::Analytic(a) => a.name(),
            FunctionSpec::Grid(_) => "grid",
        }
    }
}

/// `f(x)`; grid queries must land on a node.
pub fn evaluate(f: &FunctionSpec, x: f64) -> Result<f64> {
    match f {
        FunctionSpec::Analytic(a) => Ok(a.eval(x)),
        FunctionSpec::Grid(g) => Ok(g.values[g.index_of(x)?]),
    }
}

/// One-sided derivatives `(d-, d+)` from the analytic oracle.
pub fn derivative(f: &FunctionSpec, x: f64) -> Result<(f64, f64)> {
    match f {
        FunctionSpec::Grid(_) => Err(Error::NoDerivativeOracle),
        FunctionSpec::Analytic(a) => {
            let d = a.deriv.as_ref().ok_or(Error::NoDerivativeOracle)?;
            if !a.domain.contains(x) {
                return Err(Error::UndefinedAt { x });
            }
            d(x).ok_or(Error::UndefinedAt { x })
        }
    }
}

/// Upper limit of a function-value window: a positive real or unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gap {
    Finite(f64),
    Unbounded,
}

impl Gap {
    pub fn value(&self) -> f64 {
        match *self {
            Gap::Finite(v) => v,
            Gap::Unbounded => f64::INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            Gap::Unbounded
        } else {
            Gap::Finite(v)
        }
    }

    pub fn min(self, other: Gap) -> Gap {
        Gap::from_f64(self.value().min(other.value()))
    }
}

impl Serialize for Gap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Gap::Finite(v) => s.serialize_f64(v),
            Gap::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Gap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Gap::from_f64(v)),
            Raw::Word(w) if matches!(w.as_str(), "unbounded" | "inf" | "infinity") => Ok(Gap::Unbounded),
            Raw::Word(w) => Err(de::Error::custom(format!("expected number or \"unbounded\", got {w:?}"))),
        }
    }
}

/// Describes the sampled region `B(center, radius) ∩ [f(center) < f < f(center) + gap]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub center: f64,
    pub radius: f64,
    pub gap: Gap,
    pub count: usize,
    pub offset: f64,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(center: f64, radius: f64, gap: Gap, count: usize, seed: u64) -> Self {
        SamplePlan { center, radius, gap, count, offset: 1e-9, seed }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidArgument(format!("sample radius must be positive, got {}", self.radius)));
        }
        if self.gap.value() < 0.0 || self.gap.value().is_nan() {
            return Err(Error::InvalidArgument("sample gap must be nonnegative".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        if !(self.offset > 0.0) {
            return Err(Error::InvalidArgument("breakpoint offset must be positive".into()));
        }
        Ok(())
    }
}

/// Deterministic stratified samples of the region described by `plan`,
/// returned sorted by `x`.
///
/// Candidates are drawn in rounds of `count` strata over the open ball; at
/// most `count * 10` candidates are tried. Analytic samples within `offset`
/// of a declared breakpoint are pushed `offset` away from it. Grid samples
/// are interior nodes.
pub fn sample(f: &FunctionSpec, plan: &SamplePlan) -> Result<Vec<(f64, f64)>> {
    plan.check()?;
    let fbar = evaluate(f, plan.center)?;
    if !fbar.is_finite() {
        return Err(Error::InvalidArgument(format!("f is infinite at the center {}", plan.center)));
    }
    let upper = fbar + plan.gap.value();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let max_attempts = plan.count * 10;
    let mut attempts = 0;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(plan.count);
    let mut seen_nodes = std::collections::HashSet::new();

    'rounds: while out.len() < plan.count && attempts < max_attempts {
        for k in 0..plan.count {
            if attempts >= max_attempts || out.len() >= plan.count {
                break 'rounds;
            }
            attempts += 1;
            let u: f64 = rng.random();
            let mut x = plan.center - plan.radius + 2.0 * plan.radius * (k as f64 + u) / plan.count as f64;
            let fx = match f {
                FunctionSpec::Analytic(a) => {
                    if let Some(b) = a.breakpoints.nearest(x) {
                        if (x - b).abs() < plan.offset {
                            x = if x >= b { b + plan.offset } else { b - plan.offset };
                        }
                    }
                    a.eval(x)
                }
                FunctionSpec::Grid(g) => {
                    let i = g.nearest_index(x);
                    if i == 0 || i + 1 == g.len() || !seen_nodes.insert(i) {
                        continue;
                    }
                    x = g.node(i);
                    g.values[i]
                }
            };
            let dist = (x - plan.center).abs();
            if dist > 0.0 && dist < plan.radius && fx.is_finite() && fbar < fx && fx < upper {
                out.push((x, fx));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion { attempts });
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    Ok(out)
}

// --- JSON -----------------------------------------------------------------

fn serialize_ext_values<S: Serializer>(values: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for v in values {
        if v.is_infinite() {
            seq.serialize_element("inf")?;
        } else {
            seq.serialize_element(v)?;
        }
    }
    seq.end()
}

fn deserialize_ext_values<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Word(String),
    }
    let raw = Vec::<Ext>::deserialize(d)?;
    raw.into_iter()
        .map(|e| match e {
            Ext::Num(v) => Ok(v),
            Ext::Word(w) if matches!(w.as_str(), "inf" | "+inf" | "Infinity") => Ok(f64::INFINITY),
            Ext::Word(w) => Err(de::Error::custom(format!("expected number or \"inf\", got {w:?}"))),
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    x0: f64,
    h: f64,
    #[serde(serialize_with = "serialize_ext_values", deserialize_with = "deserialize_ext_values")]
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawAnalytic {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSpec {
    Grid(RawGrid),
    Analytic(RawAnalytic),
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawGrid { x0: self.x0, h: self.h, values: self.values.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGrid::deserialize(d)?;
        GridSpec::new(raw.x0, raw.h, raw.values).map_err(de::Error::custom)
    }
}

impl Serialize for AnalyticSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawAnalytic { name: self.name.clone(), params: self.params.clone() }.serialize(s)
    }
}

impl Serialize for FunctionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FunctionSpec::Analytic(a) => a.serialize(s),
            FunctionSpec::Grid(g) => g.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawSpec::deserialize(d)? {
            RawSpec::Grid(g) => GridSpec::new(g.x0, g.h, g.values).map(FunctionSpec::Grid).map_err(de::Error::custom),
            RawSpec::Analytic(a) => crate::catalog::get(&a.name, &a.params)
                .map(|e| FunctionSpec::Analytic(e.spec))
                .map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn entry(name: &str) -> FunctionSpec {
        FunctionSpec::Analytic(catalog::get(name, &BTreeMap::new()).unwrap().spec)
    }

    #[test]
    fn staircase_values() {
        let f = entry("staircase");
        let v = evaluate(&f, 0.4).unwrap();
        assert!((v - (0.16 + 1.0 / 3.0 - 1.0 / 9.0)).abs() < 1e-15);
        assert_eq!(evaluate(&f, -1.0).unwrap(), 0.0);
        assert_eq!(evaluate(&entry("absval"), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn oscillatory_derivative_points() {
        let f = entry("oscillatory");
        let k = 5.0;
        let pi = std::f64::consts::PI;
        let (dm, dp) = derivative(&f, 1.0 / (2.0 * k * pi)).unwrap();
        assert_eq!(dm, dp);
        assert!((dm - 3.0 / (k * pi)).abs() < 1e-12);
        let (d, _) = derivative(&f, 1.0 / (2.0 * k * pi + 1.5 * pi)).unwrap();
        assert!((d - (4.0 / (2.0 * k * pi + 1.5 * pi) - 1.0)).abs() < 1e-12);
        assert!((d + 0.88928).abs() < 1e-4);
        assert_eq!(derivative(&entry("quadratic"), 1.0).unwrap(), (2.0, 2.0));
    }

    #[test]
    fn derivative_errors() {
        let g = GridSpec::new(0.0, 0.1, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(derivative(&g.into(), 0.1), Err(Error::NoDerivativeOracle));
        let f = entry("staircase");
        assert!(matches!(derivative(&f, 0.25), Err(Error::UndefinedAt { .. })));
        assert!(matches!(derivative(&f, 0.5), Err(Error::UndefinedAt { .. })));
        assert!(derivative(&f, 0.3).is_ok());
    }

    #[test]
    fn grid_queries_must_hit_nodes() {
        let g: FunctionSpec = GridSpec::new(-1.0, 0.5, vec![1.0, f64::INFINITY, 0.0, 2.0, 3.0]).unwrap().into();
        assert_eq!(evaluate(&g, 0.0).unwrap(), 0.0);
        assert_eq!(evaluate(&g, -0.5).unwrap(), f64::INFINITY);
        assert_eq!(evaluate(&g, 0.25), Err(Error::OffGridQuery { x: 0.25 }));
        assert_eq!(evaluate(&g, 7.0), Err(Error::OffGridQuery { x: 7.0 }));
    }

    #[test]
    fn grid_invariants_enforced() {
        assert!(GridSpec::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(GridSpec::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(GridSpec::new(0.0, 1.0, vec![f64::INFINITY, f64::INFINITY]).is_err());
        assert!(GridSpec::new(0.0, 1.0, vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn sampled_grid_agrees_with_analytic() {
        let a = catalog::get("oscillatory", &BTreeMap::new()).unwrap().spec;
        let g = a.to_grid(-0.5, 1e-3, 1001).unwrap();
        let gf = FunctionSpec::Grid(g.clone());
        for i in 0..g.len() {
            let x = g.node(i);
            assert_eq!(evaluate(&gf, x).unwrap().to_bits(), a.eval(x).to_bits());
        }
    }

    #[test]
    fn quadratic_window_samples() {
        let f = entry("quadratic");
        let plan = SamplePlan::new(0.0, 1.0, Gap::Finite(0.25), 8, 1);
        let s = sample(&f, &plan).unwrap();
        assert_eq!(s.len(), 8);
        for (x, fx) in s {
            assert!(x != 0.0 && x.abs() < 0.5);
            assert!(fx > 0.0 && fx < 0.25);
        }
    }

    #[test]
    fn staircase_samples_avoid_breakpoints() {
        let f = entry("staircase");
        let plan = SamplePlan::new(0.0, 0.3, Gap::Unbounded, 16, 1);
        let s = sample(&f, &plan).unwrap();
        assert_eq!(s.len(), 16);
        for (x, fx) in s {
            assert!(x > 0.0 && x < 0.3);
            assert_eq!(fx, evaluate(&f, x).unwrap());
            let n = (1.0 / x).round();
            assert!(x != 1.0 / n && x != 1.0 / (n - 1.0) && x != 1.0 / (n + 1.0));
        }
    }

    #[test]
    fn empty_window_is_reported() {
        let f = entry("quadratic");
        let plan = SamplePlan::new(0.0, 1.0, Gap::Finite(0.0), 8, 1);
        assert!(matches!(sample(&f, &plan), Err(Error::EmptyRegion { .. })));
    }

    #[test]
    fn sampling_is_pure() {
        let f = entry("oscillatory");
        let plan = SamplePlan::new(0.0, 0.3, Gap::Unbounded, 50, 9);
        assert_eq!(sample(&f, &plan).unwrap(), sample(&f, &plan).unwrap());
    }

    #[test]
    fn json_forms() {
        let g = FunctionSpec::from_json_str(r#"{"x0": 0, "h": 0.5, "values": [1, "inf", 2]}"#).unwrap();
        let g = g.as_grid().unwrap();
        assert_eq!(g.values()[1], f64::INFINITY);
        let back = serde_json::to_string(g).unwrap();
        assert!(back.contains("\"inf\""));
        let a = FunctionSpec::from_json_str(r#"{"name": "staircase"}"#).unwrap();
        assert_eq!(a.name(), "staircase");
        assert!(FunctionSpec::from_json_str(r#"{"name": "nope"}"#).is_err());
        let gap: Gap = serde_json::from_str("\"unbounded\"").unwrap();
        assert_eq!(gap, Gap::Unbounded);
    }

    #[test]
    fn reciprocal_breakpoints_near() {
        let b = Breakpoints::Reciprocal;
        let near = b.near(0.26, 0.02, 8);
        assert_eq!(near[0], 0.25);
        assert!(near.iter().all(|p| (p - 0.26).abs() <= 0.02));
        assert_eq!(b.nearest(0.34), Some(1.0 / 3.0));
        assert_eq!(b.nearest(-3.0), Some(0.0));
    }
}
