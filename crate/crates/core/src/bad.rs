//! Monte Carlo estimation of the small-ball quantity `bad`.
//!
//! For a pair `u, v` and a coordinate set `S`, `bad` is the largest
//! probability, over centres `c`, that `X = E[d^S(u)] - E[d^S(v)]` lands in
//! `[c - 1, c + 1]` when `p` is drawn from a distribution. Estimates sort the
//! sampled `X` values and slide a closed window of length 2 across them; the
//! best window on a finite sample always has a sample at its left end, so no
//! grid over `c` is needed.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{expected_degree_dense, DistributionSpec};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::rng;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;
pub const MIN_SAMPLES: usize = 100;
/// Window length in the definition of `bad`.
pub const WINDOW: f64 = 2.0;
// samples per substream; fixes the stream layout independent of threads
const CHUNK: usize = 1024;
// slack for values that sit on a window boundary up to rounding
const EDGE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BadEstimate {
    pub point: f64,
    pub samples: usize,
    pub half_width: f64,
    pub window_center: f64,
}

impl BadEstimate {
    fn exact_one(samples: usize, center: f64) -> Self {
        BadEstimate {
            point: 1.0,
            samples,
            half_width: wilson_half_width(samples, samples, Z99),
            window_center: center,
        }
    }
}

/// Half the width of the Wilson score interval for `k` successes in `n`.
pub fn wilson_half_width(k: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 0.5;
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt()
}

/// Largest number of sorted values inside a closed window of the given
/// length, and the window's centre.
pub fn max_window(sorted: &[f64], width: f64) -> (usize, f64) {
    let mut best = (0, 0.0);
    let mut j = 0;
    for i in 0..sorted.len() {
        if j < i {
            j = i;
        }
        let hi = sorted[i] + width + EDGE_EPS;
        while j < sorted.len() && sorted[j] <= hi {
            j += 1;
        }
        if j - i > best.0 {
            best = (j - i, sorted[i] + width / 2.0);
        }
    }
    best
}

/// Estimate from raw samples of `X`; the slice is sorted in place.
pub fn estimate_from_samples(xs: &mut [f64]) -> BadEstimate {
    xs.sort_unstable_by(f64::total_cmp);
    let (count, center) = max_window(xs, WINDOW);
    BadEstimate {
        point: count as f64 / xs.len().max(1) as f64,
        samples: xs.len(),
        half_width: wilson_half_width(count, xs.len(), Z99),
        window_center: center,
    }
}

fn check_inputs(g: &Graph, spec: &DistributionSpec, s: &VertexSet, n_samples: usize) -> Result<()> {
    spec.validate()?;
    if spec.universe() != g.n() || s.universe() != g.n() {
        return Err(Error::arg("spec, S and graph disagree on the vertex count"));
    }
    if !s.is_subset(&spec.domain()) {
        return Err(Error::arg("S is not inside the distribution's domain"));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::arg(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Expected degrees into `s` of `vertices`, one row per sample:
/// entry `k * vertices.len() + j` belongs to sample `k` and `vertices[j]`.
///
/// Sample `k` is drawn from substream `k / 1024` of `seed`, so the output
/// does not depend on the thread count.
pub fn sample_expected_degrees(
    g: &Graph,
    spec: &DistributionSpec,
    vertices: &[usize],
    s: &VertexSet,
    n_samples: usize,
    seed: u64,
) -> Vec<f64> {
    let m = vertices.len();
    let mut out = vec![0.0; n_samples * m];
    if m == 0 {
        return out;
    }
    out.par_chunks_mut(CHUNK * m)
        .enumerate()
        .for_each(|(c, block)| {
            let mut src = rng::stream(seed, c as u64);
            let mut p = vec![0.0; g.n()];
            for row in block.chunks_mut(m) {
                spec.fill(g, &mut src, &mut p);
                for (slot, &w) in row.iter_mut().zip(vertices) {
                    *slot = expected_degree_dense(g, w, &p, s);
                }
            }
        });
    out
}

pub fn bad_pair(
    g: &Graph,
    spec: &DistributionSpec,
    u: usize,
    v: usize,
    s: &VertexSet,
    n_samples: usize,
    seed: u64,
) -> Result<BadEstimate> {
    if u == v {
        return Err(Error::arg("bad is defined for distinct vertices"));
    }
    if u >= g.n() || v >= g.n() {
        return Err(Error::arg("vertex out of range"));
    }
    check_inputs(g, spec, s, n_samples)?;
    if s.is_empty() {
        return Ok(BadEstimate::exact_one(n_samples, 0.0));
    }
    let e = sample_expected_degrees(g, spec, &[u, v], s, n_samples, seed);
    let mut xs: Vec<f64> = e.chunks(2).map(|r| r[0] - r[1]).collect();
    Ok(estimate_from_samples(&mut xs))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairBad {
    pub u: usize,
    pub v: usize,
    #[serde(flatten)]
    pub estimate: BadEstimate,
}

/// Aggregate of pairwise estimates.
#[derive(Clone, Debug, Serialize)]
pub struct BadSetReport {
    /// Sum of the pairwise points.
    pub total: f64,
    /// `total / |U|`.
    pub alpha: f64,
    pub half_width_sum: f64,
    pub samples: usize,
    pub pairs: Vec<PairBad>,
}

impl BadSetReport {
    pub fn max_point(&self) -> f64 {
        self.pairs.iter().map(|p| p.estimate.point).fold(0.0, f64::max)
    }
}

fn estimate_pairs(
    g: &Graph,
    spec: &DistributionSpec,
    pairs: Vec<(usize, usize)>,
    s: &VertexSet,
    n_samples: usize,
    seed: u64,
) -> Vec<PairBad> {
    if s.is_empty() {
        return pairs
            .into_iter()
            .map(|(u, v)| PairBad {
                u,
                v,
                estimate: BadEstimate::exact_one(n_samples, 0.0),
            })
            .collect();
    }
    let mut vertices: Vec<usize> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    vertices.sort_unstable();
    vertices.dedup();
    let mut slot = vec![usize::MAX; g.n()];
    for (j, &w) in vertices.iter().enumerate() {
        slot[w] = j;
    }
    let m = vertices.len();
    let e = sample_expected_degrees(g, spec, &vertices, s, n_samples, seed);
    pairs
        .into_par_iter()
        .map(|(u, v)| {
            let (a, b) = (slot[u], slot[v]);
            let mut xs: Vec<f64> = e.chunks(m).map(|r| r[a] - r[b]).collect();
            PairBad {
                u,
                v,
                estimate: estimate_from_samples(&mut xs),
            }
        })
        .collect()
}

fn summarize(pairs: Vec<PairBad>, size: usize, n_samples: usize) -> BadSetReport {
    let total: f64 = pairs.iter().map(|p| p.estimate.point).sum();
    BadSetReport {
        total,
        alpha: total / size.max(1) as f64,
        half_width_sum: pairs.iter().map(|p| p.estimate.half_width).sum(),
        samples: n_samples,
        pairs,
    }
}

/// `bad(U)`: sum over unordered pairs of `U`. All pairs share the same
/// sampled vectors.
pub fn bad_set(
    g: &Graph,
    spec: &DistributionSpec,
    u_set: &VertexSet,
    s: &VertexSet,
    n_samples: usize,
    seed: u64,
) -> Result<BadSetReport> {
    if u_set.len() < 2 {
        return Err(Error::arg("bad(U) needs at least two vertices"));
    }
    check_inputs(g, spec, s, n_samples)?;
    let us = u_set.to_vec();
    let mut pairs = Vec::with_capacity(us.len() * (us.len() - 1) / 2);
    for (i, &a) in us.iter().enumerate() {
        for &b in &us[i + 1..] {
            pairs.push((a, b));
        }
    }
    let est = estimate_pairs(g, spec, pairs, s, n_samples, seed);
    Ok(summarize(est, us.len(), n_samples))
}

/// `bad(U, V)`: sum over ordered pairs of `U x V` with distinct entries.
/// `alpha` is reported against `|U|`.
pub fn bad_cross(
    g: &Graph,
    spec: &DistributionSpec,
    a: &VertexSet,
    b: &VertexSet,
    s: &VertexSet,
    n_samples: usize,
    seed: u64,
) -> Result<BadSetReport> {
    check_inputs(g, spec, s, n_samples)?;
    let mut pairs = Vec::new();
    for u in a.iter() {
        for v in b.iter() {
            if u != v {
                pairs.push((u, v));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::arg("bad(U, V) has no pairs of distinct vertices"));
    }
    let est = estimate_pairs(g, spec, pairs, s, n_samples, seed);
    Ok(summarize(est, a.len(), n_samples))
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub product: BadEstimate,
    pub components: Vec<BadEstimate>,
    /// Index of the component with the smallest point.
    pub best: usize,
    pub holds: bool,
}

/// Checks that `bad` under the product of `specs` on `s` is at most the
/// smallest `bad` under a single factor `D_i` on `S ∩ domain(D_i)`, within
/// the two half-widths.
pub fn check_product_domination(
    g: &Graph,
    specs: &[DistributionSpec],
    u: usize,
    v: usize,
    s: &VertexSet,
    n_samples: usize,
    seed: u64,
) -> Result<DominationReport> {
    let product = DistributionSpec::product(specs.to_vec())?;
    let est = bad_pair(g, &product, u, v, s, n_samples, rng::derive(seed, 0))?;
    let mut components = Vec::with_capacity(specs.len());
    for (i, d) in specs.iter().enumerate() {
        let si = s.intersection(&d.domain());
        components.push(bad_pair(
            g,
            d,
            u,
            v,
            &si,
            n_samples,
            rng::derive(seed, 1 + i as u64),
        )?);
    }
    let best = (0..components.len())
        .min_by(|&i, &j| components[i].point.total_cmp(&components[j].point))
        .unwrap_or(0);
    let holds = est.point <= components[best].point + est.half_width + components[best].half_width;
    Ok(DominationReport {
        product: est,
        components,
        best,
        holds,
    })
}

/// Bound for a uniformly constant factor on `S` when `d^S(u) - d^S(v) >= D`.
pub fn uniform_constant_bound(d: f64) -> f64 {
    3.0 / d
}

/// Bound for a blended factor `B_beta(U, S)` on `D`-separated, `gamma`-balanced
/// families.
pub fn blended_bound(beta: f64, d: f64, max_ds: f64, gamma: f64, u_len: usize) -> f64 {
    2.0 / (beta * d) + 2.0 * max_ds * (-0.045 / (gamma * beta * beta * u_len as f64)).exp()
}

/// `beta` chosen for the pressure bound: `1 / (10 sqrt(gamma |U| ln |U|))`.
pub fn pressure_beta(gamma: f64, u_len: usize) -> f64 {
    let x = u_len as f64;
    1.0 / (10.0 * (gamma * x * x.ln()).sqrt())
}

/// Per-pair target `40 sqrt(gamma |U| ln |U|) / D`.
pub fn pressure_target(gamma: f64, u_len: usize, d: f64) -> f64 {
    let x = u_len as f64;
    40.0 * (gamma * x * x.ln()).sqrt() / d
}

/// Star-like gadget for uniformly constant control: vertex 0 is joined to
/// `d` leaves `2..d+2`, vertex 1 is isolated, and `S` is the leaf set.
pub fn gap_gadget(d: usize) -> (Graph, VertexSet) {
    let edges: Vec<(usize, usize)> = (2..d + 2).map(|l| (0, l)).collect();
    let g = Graph::from_edges(d + 2, &edges).expect("gadget edges are valid");
    let s = VertexSet::from_vertices(d + 2, 2..d + 2).expect("in range");
    (g, s)
}

/// A family `u_1..u_t` with clusters `V_i` around each `u_i`, built to meet
/// the hypotheses of the blended-control bound.
#[derive(Clone, Debug)]
pub struct SeparatedFamily {
    pub g: Graph,
    pub u: Vec<usize>,
    pub v_sets: Vec<VertexSet>,
    pub s: VertexSet,
    /// `d_i = max_{v in V_i} div^S(u_i, v)`, at least 1.
    pub d: Vec<f64>,
    /// Largest `D` with `div^S(u_i, u_j) >= D + d_i + d_j` for all `i != j`.
    pub sep: f64,
    /// Smallest `gamma` for which `U` is `gamma`-balanced to `S`.
    pub gamma: f64,
}

impl SeparatedFamily {
    /// Random instance. `S` has `s_size` vertices. With `private` set, `S`
    /// is split into `t` blocks and `u_i` only sees its own block (so every
    /// `S` vertex has at most one neighbour in `U`); otherwise each `u_i`
    /// sees each `S` vertex with probability `q`. Every `V_i` holds `u_i`
    /// and `extra` copies of its `S`-neighbourhood with `flips` coordinates
    /// toggled.
    #[allow(clippy::too_many_arguments)]
    pub fn random(
        t: usize,
        extra: usize,
        s_size: usize,
        q: f64,
        flips: usize,
        private: bool,
        seed: u64,
    ) -> Self {
        let mut rng = rng::stream(seed, 0);
        let base = t * (1 + extra);
        let n = base + s_size;
        let mut edges = Vec::new();
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(t);
        for i in 0..t {
            let (lo, hi) = if private {
                (i * s_size / t, (i + 1) * s_size / t)
            } else {
                (0, s_size)
            };
            let row: Vec<usize> = (lo..hi).filter(|_| rng.gen::<f64>() < q).map(|x| base + x).collect();
            rows.push(row);
        }
        let mut u = Vec::with_capacity(t);
        let mut members = Vec::with_capacity(t);
        for (i, row) in rows.iter().enumerate() {
            let ui = i * (1 + extra);
            u.push(ui);
            for &x in row {
                edges.push((ui, x));
            }
            let mut vi = vec![ui];
            for e in 0..extra {
                let w = ui + 1 + e;
                vi.push(w);
                let mut nb: Vec<bool> = vec![false; s_size];
                for &x in row {
                    nb[x - base] = true;
                }
                for _ in 0..flips {
                    let x = rng.gen_range(0..s_size);
                    nb[x] = !nb[x];
                }
                for (x, &on) in nb.iter().enumerate() {
                    if on {
                        edges.push((w, base + x));
                    }
                }
            }
            members.push(vi);
        }
        let g = Graph::from_edges(n, &edges).expect("family edges are valid");
        let s = VertexSet::from_vertices(n, base..n).expect("in range");
        let v_sets = members
            .iter()
            .map(|m| VertexSet::from_vertices(n, m.iter().copied()).expect("in range"))
            .collect();
        Self::measure(g, u, v_sets, s)
    }

    /// Wraps given sets, measuring `d_i`, the separation and `gamma`.
    pub fn measure(g: Graph, u: Vec<usize>, v_sets: Vec<VertexSet>, s: VertexSet) -> Self {
        let d: Vec<f64> = u
            .iter()
            .zip(&v_sets)
            .map(|(&ui, vi)| {
                vi.iter()
                    .filter(|&w| w != ui)
                    .map(|w| g.div_in(ui, w, &s))
                    .max()
                    .unwrap_or(0)
                    .max(1) as f64
            })
            .collect();
        let mut sep = f64::INFINITY;
        for i in 0..u.len() {
            for j in i + 1..u.len() {
                let x = g.div_in(u[i], u[j], &s) as f64 - d[i] - d[j];
                sep = sep.min(x);
            }
        }
        let uset = VertexSet::from_vertices(g.n(), u.iter().copied()).expect("in range");
        let worst = s.iter().map(|x| g.degree_in(x, &uset)).max().unwrap_or(0);
        let gamma = (worst as f64 / u.len() as f64).max(1.0 / u.len() as f64);
        SeparatedFamily {
            g,
            u,
            v_sets,
            s,
            d,
            sep,
            gamma,
        }
    }

    pub fn u_set(&self) -> VertexSet {
        VertexSet::from_vertices(self.g.n(), self.u.iter().copied()).expect("in range")
    }

    /// `B_beta(U, S)` on `S` times the trivial distribution elsewhere.
    pub fn blended_spec(&self, beta: f64) -> Result<DistributionSpec> {
        Ok(DistributionSpec::blended(self.u.clone(), self.s.clone(), beta)?.complete_with_trivial())
    }

    pub fn bound(&self, beta: f64, i: usize, j: usize) -> f64 {
        let ds = self.g.degree_in(self.u[i], &self.s).max(self.g.degree_in(self.u[j], &self.s));
        blended_bound(beta, self.sep, ds as f64, self.gamma, self.u.len())
    }
}
