//! The randomized cluster partition.
//!
//! From a set `A` of vertices with small clusters, the construction picks
//! `u_1..u_t ∈ A`, pairwise disjoint sets `V_i ∋ u_i` and a set `S` such
//! that neighbourhoods inside each `V_i` are close on `S`, neighbourhoods
//! of different `u_i` are far apart on `S`, and `U` puts little pressure on
//! `S`. Each attempt draws a random split `V = R ∪ S` and a random sample
//! `U' ⊆ R`, and is kept when three events hold:
//!
//! * A1: `|U|` is within a constant factor of `p|B|`;
//! * A2: no vertex has too many neighbours in `U`;
//! * A3: large diversities shrink to about a quarter on `S`.
//!
//! The constants that make these events likely only kick in for enormous
//! `n`, so the thresholds of A2, A3, the degree floor and the bounds in
//! conclusions (ii) and (v) carry relaxation factors. Conclusions (i),
//! (iii) and (iv) are always checked exactly.

use rand::Rng;
use serde::Serialize;

use crate::clusters::{all_views, ClusterParams, ClusterView};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::rng;

#[derive(Clone, Debug, Serialize)]
pub struct PartitionConfig {
    pub k: usize,
    pub m: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub max_attempts: usize,
    /// Reject hypothesis violations instead of recording them.
    pub strict: bool,
    pub relax_ii: f64,
    pub relax_v: f64,
    pub relax_a2: f64,
    /// Scales the A3 diversity threshold `2^15 ln n`.
    pub relax_a3: f64,
    /// Scales the degree floor `M ln^2 n`.
    pub relax_floor: f64,
}

impl PartitionConfig {
    /// Literal constants.
    pub fn strict(k: usize, m: f64, lambda: f64, alpha: f64) -> Self {
        PartitionConfig {
            k,
            m,
            lambda,
            alpha,
            max_attempts: 200,
            strict: true,
            relax_ii: 1.0,
            relax_v: 1.0,
            relax_a2: 1.0,
            relax_a3: 1.0,
            relax_floor: 1.0,
        }
    }

    /// Constants for graphs of a few thousand vertices: the A3 threshold is
    /// scaled by `2^-10`, everything else is literal, and hypothesis
    /// violations are recorded rather than rejected.
    pub fn desk(k: usize, m: f64, lambda: f64, alpha: f64) -> Self {
        PartitionConfig {
            strict: false,
            relax_a3: 1.0 / 1024.0,
            ..Self::strict(k, m, lambda, alpha)
        }
    }

    pub fn cluster_params(&self, g: &Graph) -> Result<ClusterParams> {
        ClusterParams::full(g, self.m, self.lambda)
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2.0 || self.lambda < 2.0 {
            return Err(Error::arg("the partition needs M, lambda >= 2"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::arg(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if self.k == 0 || self.max_attempts == 0 {
            return Err(Error::arg("k and max_attempts must be positive"));
        }
        Ok(())
    }

    /// Hypotheses on `k` and `alpha` that fail for an `n`-vertex graph.
    pub fn hypothesis_gaps(&self, n: usize) -> Vec<String> {
        let l = ln(n);
        let mut out = Vec::new();
        let k = self.k as f64;
        if k < l * l {
            out.push(format!("k = {} below ln^2 n = {:.1}", self.k, l * l));
        }
        if k > n as f64 / l.powi(3) {
            out.push(format!("k = {} above n / ln^3 n = {:.1}", self.k, n as f64 / l.powi(3)));
        }
        let amax = 1.0 / (self.lambda * l.powi(5));
        if self.alpha > amax {
            out.push(format!("alpha = {} above 1/(lambda ln^5 n) = {amax:.2e}", self.alpha));
        }
        out
    }

    fn degree_floor(&self, n: usize) -> f64 {
        self.relax_floor * self.m * ln(n).powi(2)
    }

    fn a3_threshold(&self, n: usize) -> f64 {
        self.relax_a3 * 32768.0 * ln(n)
    }
}

fn ln(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

/// `{ v : M ln^2 n <= d(v) <= n/2, |W_*(v)| <= alpha n }` with clusters taken
/// in the whole graph.
pub fn eligible_set(g: &Graph, cfg: &PartitionConfig) -> Result<VertexSet> {
    let params = cfg.cluster_params(g)?;
    let views = all_views(g, &params);
    Ok(eligible_from_views(g, cfg, &views))
}

fn eligible_from_views(g: &Graph, cfg: &PartitionConfig, views: &[ClusterView]) -> VertexSet {
    let n = g.n();
    let floor = cfg.degree_floor(n);
    let mut out = VertexSet::new(n);
    for v in 0..n {
        let d = g.degree(v) as f64;
        if d >= floor && 2.0 * d <= n as f64 && views[v].w_star.len() as f64 <= cfg.alpha * n as f64 {
            out.insert(v);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct AttemptLog {
    pub attempt: usize,
    pub u_size: usize,
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    /// Conclusions (i), (iii), (iv) checked after truncation; `None` when
    /// an event failed first.
    pub conclusions: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bucket {
    /// Dyadic level: `|W_*(v)| ∈ [L, 2L)`.
    pub l: usize,
    pub t_moment: u32,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionResult {
    pub u_list: Vec<usize>,
    pub v_sets: Vec<VertexSet>,
    pub s: VertexSet,
    pub d_list: Vec<f64>,
    /// Measured `max_{v ∈ S} |N(v) ∩ U| / t`.
    pub gamma: f64,
    pub t: usize,
    pub p: f64,
    pub bucket: Bucket,
    pub event_log: Vec<AttemptLog>,
    pub attempts_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionRun {
    pub result: Option<PartitionResult>,
    pub event_log: Vec<AttemptLog>,
    /// Hypotheses that failed in relaxed mode.
    pub notes: Vec<String>,
}

impl PartitionRun {
    pub fn into_result(self) -> Result<PartitionResult> {
        let attempts = self.event_log.len();
        self.result.ok_or_else(|| {
            let hits = |f: fn(&AttemptLog) -> bool| self.event_log.iter().filter(|a| f(a)).count();
            Error::Construction(format!(
                "no attempt succeeded in {attempts}: A1 held {} times, A2 {}, A3 {}",
                hits(|a| a.a1),
                hits(|a| a.a2),
                hits(|a| a.a3)
            ))
        })
    }
}

/// Runs the construction on `a`, with clusters and degrees taken in `g`.
pub fn run_partition(g: &Graph, a: &VertexSet, cfg: &PartitionConfig, seed: u64) -> Result<PartitionRun> {
    cfg.validate()?;
    let n = g.n();
    if a.universe() != n {
        return Err(Error::arg("A lives in a different vertex universe"));
    }
    if a.is_empty() {
        return Err(Error::pre("A is empty"));
    }
    let params = cfg.cluster_params(g)?;
    let views = all_views(g, &params);
    let eligible = eligible_from_views(g, cfg, &views);

    let mut notes = cfg.hypothesis_gaps(n);
    if 8 * a.len() < n {
        notes.push(format!("|A| = {} below n/8", a.len()));
    }
    let outside = a.difference(&eligible);
    if !outside.is_empty() {
        notes.push(format!(
            "{} vertices of A are not eligible (first: {})",
            outside.len(),
            outside.iter().next().unwrap_or(0)
        ));
    }
    if cfg.strict && !notes.is_empty() {
        return Err(Error::pre(notes.join("; ")));
    }

    let bucket = largest_bucket(a, &views);
    let l2 = ln(n).powi(2);
    if (bucket.0.len() as f64) < a.len() as f64 / l2 {
        notes.push("largest bucket below |A| / ln^2 n".into());
    }
    let (b, info) = bucket;
    let bsize = b.len() as f64;
    let p = (32.0 * cfg.k as f64 / bsize).min(1.0 / (4.0 * cfg.lambda * info.l as f64));
    let p_prime = (4.0 * p / 3.0).min(1.0);
    let t_target = (p * bsize / 32.0).ceil().max(1.0) as usize;
    let a2_cap = cfg.relax_a2 * l2 * (p * g.max_degree() as f64).max(1.0);
    let a3_min = cfg.a3_threshold(n);

    let mut log = Vec::new();
    for attempt in 0..cfg.max_attempts {
        let mut src = rng::stream(seed, attempt as u64);
        let mut r = VertexSet::new(n);
        for v in 0..n {
            if src.gen::<f64>() < 0.75 {
                r.insert(v);
            }
        }
        let s = r.complement();
        let mut u_prime = VertexSet::new(n);
        for v in r.iter() {
            if src.gen::<f64>() < p_prime {
                u_prime.insert(v);
            }
        }
        let mut u = VertexSet::new(n);
        for v in b.intersection(&u_prime).iter() {
            let view = &views[v];
            if view.w_plus.intersection_len(&u_prime) == 1
                && 2 * view.w_star.intersection_len(&r) >= view.w_star.len()
            {
                u.insert(v);
            }
        }
        let us = u.len() as f64;
        let a1 = us >= p * bsize / 32.0 && us <= 2.0 * p * bsize;
        let a2 = (0..n).all(|v| g.degree_in(v, &u) as f64 <= a2_cap);
        let a3 = a3_on_pairs(g, &s, &u, &views, a3_min);
        let mut entry = AttemptLog {
            attempt,
            u_size: u.len(),
            a1,
            a2,
            a3,
            conclusions: None,
        };
        if !(a1 && a2 && a3) {
            log.push(entry);
            continue;
        }
        let u_list: Vec<usize> = u.iter().take(t_target).collect();
        let t = u_list.len();
        let v_sets: Vec<VertexSet> = u_list.iter().map(|&x| views[x].w_star.intersection(&r)).collect();
        let scale = 0.3 * 4f64.powi(info.t_moment as i32) / cfg.m;
        let d_list: Vec<f64> = u_list.iter().map(|&x| scale * g.degree(x) as f64).collect();
        let gamma = measured_gamma(g, &u_list, &s);
        let res = PartitionResult {
            u_list,
            v_sets,
            s,
            d_list,
            gamma,
            t,
            p,
            bucket: Bucket {
                l: info.l,
                t_moment: info.t_moment,
                size: b.len(),
            },
            event_log: Vec::new(),
            attempts_used: attempt + 1,
        };
        let report = verify_partition(g, &res, cfg);
        let exact = report.exact_ok();
        entry.conclusions = Some(exact);
        log.push(entry);
        if exact {
            return Ok(PartitionRun {
                result: Some(PartitionResult {
                    event_log: log.clone(),
                    ..res
                }),
                event_log: log,
                notes,
            });
        }
        if cfg.strict {
            return Err(Error::Construction(format!(
                "events held but the conclusions failed: {}",
                report.violations.join("; ")
            )));
        }
    }
    Ok(PartitionRun {
        result: None,
        event_log: log,
        notes,
    })
}

struct BucketKey {
    l: usize,
    t_moment: u32,
}

/// Groups `a` by `(dyadic level of |W_*|, moment)` and returns the largest
/// group; ties go to the smallest key.
fn largest_bucket(a: &VertexSet, views: &[ClusterView]) -> (VertexSet, BucketKey) {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for v in a.iter() {
        let w = views[v].w_star.len().max(1);
        let l = 1usize << (usize::BITS - 1 - w.leading_zeros());
        groups.entry((l, views[v].t_moment)).or_default().push(v);
    }
    let (&(l, t_moment), members) = groups
        .iter()
        .max_by(|x, y| x.1.len().cmp(&y.1.len()).then(y.0.cmp(x.0)))
        .expect("A is nonempty");
    let set = VertexSet::from_vertices(a.universe(), members.iter().copied()).expect("in range");
    (set, BucketKey { l, t_moment })
}

/// A3 over the pairs used downstream: `u ∈ U` against `U` and against
/// `W_*(u)`. Pairs with diversity at least `threshold` must keep a
/// `[0.2, 0.3]` fraction of it on `S`.
fn a3_on_pairs(g: &Graph, s: &VertexSet, u: &VertexSet, views: &[ClusterView], threshold: f64) -> bool {
    let full = g.vertices();
    let ok = |x: usize, y: usize| {
        let d = g.div_in(x, y, &full) as f64;
        if d < threshold {
            return true;
        }
        let ds = g.div_in(x, y, s) as f64;
        (0.2 * d..=0.3 * d).contains(&ds)
    };
    let us = u.to_vec();
    for (i, &x) in us.iter().enumerate() {
        if !us[i + 1..].iter().all(|&y| ok(x, y)) {
            return false;
        }
        if !views[x].w_star.iter().filter(|&y| y != x).all(|y| ok(x, y)) {
            return false;
        }
    }
    true
}

/// Exhaustive A3 check over `U x U`, for use on returned results.
pub fn a3_holds_on_u(g: &Graph, res: &PartitionResult, threshold: f64) -> bool {
    let full = g.vertices();
    let u = &res.u_list;
    u.iter().enumerate().all(|(i, &x)| {
        u[i + 1..].iter().all(|&y| {
            let d = g.div_in(x, y, &full) as f64;
            d < threshold || (0.2 * d..=0.3 * d).contains(&(g.div_in(x, y, &res.s) as f64))
        })
    })
}

fn measured_gamma(g: &Graph, u_list: &[usize], s: &VertexSet) -> f64 {
    if u_list.is_empty() {
        return 0.0;
    }
    let u = VertexSet::from_vertices(g.n(), u_list.iter().copied()).expect("in range");
    let worst = s.iter().map(|v| g.degree_in(v, &u)).max().unwrap_or(0);
    worst as f64 / u_list.len() as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub applies: bool,
    pub measured: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub i: bool,
    pub ii: BoundCheck,
    pub iii: bool,
    pub iv: bool,
    pub v: BoundCheck,
    pub gamma_recomputed: f64,
    pub violations: Vec<String>,
}

impl PartitionReport {
    /// Conclusions (i), (iii) and (iv), which are never relaxed.
    pub fn exact_ok(&self) -> bool {
        self.i && self.iii && self.iv
    }

    pub fn all_ok(&self) -> bool {
        self.exact_ok() && self.ii.ok && self.v.ok
    }
}

/// Checks conclusions (i) to (v) from scratch.
pub fn verify_partition(g: &Graph, res: &PartitionResult, cfg: &PartitionConfig) -> PartitionReport {
    let n = g.n();
    let mut violations = Vec::new();
    let t = res.u_list.len();
    if res.v_sets.len() != t || res.d_list.len() != t {
        violations.push("u_list, v_sets and d_list differ in length".into());
        return PartitionReport {
            i: false,
            ii: BoundCheck { applies: false, measured: 0.0, bound: 0.0, ok: false },
            iii: false,
            iv: false,
            v: BoundCheck { applies: false, measured: 0.0, bound: 0.0, ok: false },
            gamma_recomputed: 0.0,
            violations,
        };
    }

    let mut i_ok = true;
    let mut covered = res.s.clone();
    for (i, (&u, vi)) in res.u_list.iter().zip(&res.v_sets).enumerate() {
        if !vi.contains(u) {
            i_ok = false;
            violations.push(format!("(i) u_{i} = {u} not in V_{i}"));
        }
        if vi.len() as f64 > cfg.alpha * n as f64 {
            i_ok = false;
            violations.push(format!("(i) |V_{i}| = {} above alpha n", vi.len()));
        }
        if !covered.is_disjoint(vi) {
            i_ok = false;
            violations.push(format!("(i) V_{i} meets S or an earlier V_j"));
        }
        covered = covered.union(vi);
    }

    let l2 = ln(n).powi(2);
    let total: usize = res.v_sets.iter().map(VertexSet::len).sum();
    let ii_bound = cfg.relax_ii * n as f64 / (1000.0 * cfg.lambda * l2);
    let ii_applies = t < cfg.k;
    let ii_ok = t <= cfg.k && (!ii_applies || total as f64 >= ii_bound);
    if !ii_ok {
        violations.push(format!("(ii) t = {t}, sum |V_i| = {total}, bound {ii_bound:.2}"));
    }

    let s = &res.s;
    let mut iii = true;
    for (i, (&u, vi)) in res.u_list.iter().zip(&res.v_sets).enumerate() {
        for w in vi.iter() {
            let d = g.div_in(u, w, s) as f64;
            if d > res.d_list[i] {
                iii = false;
                violations.push(format!("(iii) div^S(u_{i}, {w}) = {d} above d_{i} = {:.3}", res.d_list[i]));
            }
        }
    }

    let mut iv = true;
    for i in 0..t {
        for j in i + 1..t {
            let (a, b) = (res.u_list[i], res.u_list[j]);
            let need = g.degree(a).max(g.degree(b)) as f64 / (5.0 * cfg.m) + res.d_list[i] + res.d_list[j];
            let d = g.div_in(a, b, s) as f64;
            if d < need {
                iv = false;
                violations.push(format!("(iv) pair ({a}, {b}): div^S = {d} below {need:.3}"));
            }
        }
    }

    let gamma = measured_gamma(g, &res.u_list, s);
    let v_bound = cfg.relax_v * ln(n).powi(5) * (g.max_degree() as f64 / n as f64).max(1.0 / t.max(1) as f64);
    let v_ok = (gamma - res.gamma).abs() < 1e-12 && gamma <= v_bound;
    if !v_ok {
        violations.push(format!("(v) gamma {gamma:.4} (stored {:.4}), bound {v_bound:.3}", res.gamma));
    }

    PartitionReport {
        i: i_ok,
        ii: BoundCheck {
            applies: ii_applies,
            measured: total as f64,
            bound: ii_bound,
            ok: ii_ok,
        },
        iii,
        iv,
        v: BoundCheck {
            applies: true,
            measured: gamma,
            bound: v_bound,
            ok: v_ok,
        },
        gamma_recomputed: gamma,
        violations,
    }
}
