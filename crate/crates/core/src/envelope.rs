//! Moreau envelopes and proximal mappings of grid functions.
//!
//! The engine computes the envelope of the grid-restricted function
//!
//! ```text
//! env[i] = min_j  values[j] + (x_j - x_i)^2 / (2 lambda)
//! ```
//!
//! which bounds the continuous envelope from above; for a function with
//! modulus of continuity `w` the gap is at most `h^2 / (8 lambda) + w(h)`.
//!
//! The first pass is the linear-time lower envelope of parabolas (the 1-D
//! distance transform of sampled functions). A second pass collects every
//! node whose cost is within `tol_prox` of the minimum, pruned with running
//! minima of `values`, and re-evaluates each cost with the same expression
//! the brute-force oracle uses, so the two agree exactly.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fnmodel::{FunctionSpec, GridSpec};

/// Default tie tolerance for proximal sets: `1e-10 * (1 + |env|)`.
pub fn default_tol_prox(env: f64) -> f64 {
    1e-10 * (1.0 + env.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeResult {
    pub lambda: f64,
    pub x0: f64,
    pub h: f64,
    pub env: Vec<f64>,
    /// All minimizing node indices per node, ascending.
    pub prox_sets: Vec<Vec<usize>>,
    /// Tie tolerance used at each node.
    pub tol_prox: Vec<f64>,
}

impl EnvelopeResult {
    pub fn len(&self) -> usize {
        self.env.len()
    }

    pub fn is_empty(&self) -> bool {
        self.env.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// The envelope values as a grid function on the same nodes.
    pub fn to_grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.x0, self.h, self.env.clone())
    }

    /// `0 ∈ ∂e_λf(x_i)` test: the node is its own proximal point and the
    /// envelope touches `f` there.
    pub fn stationary_at(&self, f: &GridSpec, i: usize, tol: f64) -> bool {
        (self.env[i] - f.values()[i]).abs() <= tol && self.prox_sets[i].binary_search(&i).is_ok()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be positive and finite, got {lambda}")))
    }
}

#[inline]
fn cost(f: &GridSpec, lambda: f64, i: usize, j: usize) -> f64 {
    let d = f.gap(i, j);
    f.values()[j] + d * d / (2.0 * lambda)
}

/// Lower envelope of the parabolas `values[j] + c (t - j)^2` in index units,
/// `c = h^2 / (2 lambda)`. Returns, per node, the index of the parabola that
/// attains the minimum. Infinite values contribute no parabola.
fn lower_envelope(f: &GridSpec, lambda: f64) -> Vec<usize> {
    let vals = f.values();
    let n = vals.len();
    let c = f.h() * f.h() / (2.0 * lambda);
    let mut verts: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);

    let key = |j: usize| vals[j] + c * (j as f64) * (j as f64);
    for q in (0..n).filter(|&q| vals[q].is_finite()) {
        loop {
            let Some(&p) = verts.last() else {
                verts.push(q);
                bounds.push(f64::NEG_INFINITY);
                break;
            };
            let s = (key(q) - key(p)) / (2.0 * c * (q as f64 - p as f64));
            if s > *bounds.last().unwrap() {
                verts.push(q);
                bounds.push(s);
                break;
            }
            verts.pop();
            bounds.pop();
        }
    }

    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for q in 0..n {
        while k + 1 < verts.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        out.push(verts[k]);
    }
    out
}

/// Moreau envelope and proximal sets of a grid function.
pub fn envelope_grid(f: &GridSpec, lambda: f64) -> Result<EnvelopeResult> {
    check_lambda(lambda)?;
    let vals = f.values();
    if !vals.iter().any(|v| v.is_finite()) {
        return Err(Error::AllInfinite);
    }
    let n = vals.len();
    let owner = lower_envelope(f, lambda);

    // running minima bound every cost beyond a scan position from below
    let mut prefix_min = vec![f64::INFINITY; n];
    let mut suffix_min = vec![f64::INFINITY; n];
    let mut m = f64::INFINITY;
    for i in 0..n {
        m = m.min(vals[i]);
        prefix_min[i] = m;
    }
    m = f64::INFINITY;
    for i in (0..n).rev() {
        m = m.min(vals[i]);
        suffix_min[i] = m;
    }

    let mut env = Vec::with_capacity(n);
    let mut prox_sets = Vec::with_capacity(n);
    let mut tols = Vec::with_capacity(n);
    let mut cand: Vec<(usize, f64)> = Vec::new();
    for i in 0..n {
        let first = cost(f, lambda, i, owner[i]);
        // j = i is always a candidate, so env[i] <= values[i] exactly
        let threshold = first.min(vals[i]) + default_tol_prox(first.min(vals[i]));
        cand.clear();
        let mut j = i;
        loop {
            let d = f.gap(i, j);
            if d * d / (2.0 * lambda) + suffix_min[j] > threshold {
                break;
            }
            let cj = cost(f, lambda, i, j);
            if cj <= threshold {
                cand.push((j, cj));
            }
            j += 1;
            if j == n {
                break;
            }
        }
        let mut j = i;
        while j > 0 {
            j -= 1;
            let d = f.gap(i, j);
            if d * d / (2.0 * lambda) + prefix_min[j] > threshold {
                break;
            }
            let cj = cost(f, lambda, i, j);
            if cj <= threshold {
                cand.push((j, cj));
            }
        }
        let best = cand.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let tol = default_tol_prox(best);
        let mut set: Vec<usize> = cand.iter().filter(|c| c.1 <= best + tol).map(|c| c.0).collect();
        set.sort_unstable();
        env.push(best);
        prox_sets.push(set);
        tols.push(tol);
    }

    Ok(EnvelopeResult { lambda, x0: f.x0(), h: f.h(), env, prox_sets, tol_prox: tols })
}

/// Exhaustive `O(n)` evaluation of the envelope and proximal set at node `i`.
pub fn brute_force_envelope(f: &GridSpec, lambda: f64, i: usize) -> Result<(f64, Vec<usize>)> {
    check_lambda(lambda)?;
    if i >= f.len() {
        return Err(Error::InvalidArgument(format!("node {i} outside grid of {} nodes", f.len())));
    }
    if !f.values().iter().any(|v| v.is_finite()) {
        return Err(Error::AllInfinite);
    }
    let costs: Vec<f64> = (0..f.len()).map(|j| cost(f, lambda, i, j)).collect();
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = default_tol_prox(best);
    let set = (0..f.len()).filter(|&j| costs[j] <= best + tol).collect();
    Ok((best, set))
}

/// Brute force at every node, in parallel.
pub fn brute_force_all(f: &GridSpec, lambda: f64) -> Result<Vec<(f64, Vec<usize>)>> {
    (0..f.len()).into_par_iter().map(|i| brute_force_envelope(f, lambda, i)).collect()
}

/// Whether `0 ∈ ∂e_λf` at the node `node`, per [`EnvelopeResult::stationary_at`].
pub fn envelope_stationary(f: &GridSpec, lambda: f64, node: usize, tol: f64) -> Result<bool> {
    if node >= f.len() {
        return Err(Error::InvalidArgument(format!("node {node} outside grid")));
    }
    let env = envelope_grid(f, lambda)?;
    Ok(env.stationary_at(f, node, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxBoundednessReport {
    pub lambda: f64,
    pub finite_everywhere: bool,
    /// Probe point and the value of `f(y) + y^2/(2 lambda)` there.
    pub divergence_witness: Option<(f64, f64)>,
    pub threshold_estimate: Option<Threshold>,
    /// Raw `(y, f(y) + y^2/(2 lambda))` probe trace.
    pub trace: Vec<(f64, f64)>,
}

const DIVERGENCE_LEVEL: f64 = -1e12;
const MONOTONE_PROBES: usize = 10;

fn probe_side(f: &FunctionSpec, lambda: f64, radius: f64, sign: f64, trace: &mut Vec<(f64, f64)>) -> Option<(f64, f64)> {
    let a = match f {
        FunctionSpec::Analytic(a) => a,
        FunctionSpec::Grid(_) => return None,
    };
    let mut seq: Vec<(f64, f64)> = Vec::new();
    let mut y = 1e-3;
    while y <= radius {
        let p = sign * y;
        let g = a.eval(p) + p * p / (2.0 * lambda);
        trace.push((p, g));
        seq.push((p, g));
        y *= 1.5;
    }
    if seq.len() <= MONOTONE_PROBES {
        return None;
    }
    let tail = &seq[seq.len() - MONOTONE_PROBES - 1..];
    let decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
    let last = *seq.last().unwrap();
    (decreasing && last.1 < DIVERGENCE_LEVEL).then_some(last)
}

fn diverges(f: &FunctionSpec, lambda: f64, radius: f64, trace: &mut Vec<(f64, f64)>) -> Option<(f64, f64)> {
    probe_side(f, lambda, radius, 1.0, trace).or_else(|| probe_side(f, lambda, radius, -1.0, trace))
}

/// Probes whether `y ↦ f(y) + y²/(2λ)` stays bounded below on geometrically
/// spaced points up to `probe_radius`. Divergence means the last ten probes on
/// one side decrease monotonically and end below `-1e12`. Grid functions are
/// finite sets and always bounded.
///
/// With `estimate_threshold`, the prox-boundedness threshold is bracketed by
/// geometric bisection on `λ ∈ [1e-9, 1e9]`.
pub fn prox_bounded_probe(
    f: &FunctionSpec,
    lambda: f64,
    probe_radius: f64,
    estimate_threshold: bool,
) -> Result<ProxBoundednessReport> {
    check_lambda(lambda)?;
    if !(probe_radius > 1e-3) {
        return Err(Error::InvalidArgument("probe radius must exceed 1e-3".into()));
    }
    let mut trace = Vec::new();
    let witness = diverges(f, lambda, probe_radius, &mut trace);
    let threshold_estimate = estimate_threshold.then(|| {
        let mut scratch = Vec::new();
        let (mut lo, mut hi) = (1e-9_f64, 1e9_f64);
        if diverges(f, hi, probe_radius, &mut scratch).is_none() {
            return Threshold::Infinite;
        }
        if diverges(f, lo, probe_radius, &mut scratch).is_some() {
            return Threshold::Finite(0.0);
        }
        for _ in 0..80 {
            let mid = (lo * hi).sqrt();
            scratch.clear();
            if diverges(f, mid, probe_radius, &mut scratch).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Threshold::Finite((lo * hi).sqrt())
    });
    Ok(ProxBoundednessReport {
        lambda,
        finite_everywhere: witness.is_none(),
        divergence_witness: witness,
        threshold_estimate,
        trace,
    })
}
