//! Best-effort recursive synthesis of a controlled set.
//!
//! Each node holds a vertex set `V` of the input graph and a target `k`.
//! Vertices of degree below `|V|/2` are split into `A1` (large cluster),
//! `A2` (small cluster, moderate degree) and `A3` (low degree), and the
//! first applicable case runs:
//!
//! 1. some `v0 ∈ A1`: split along `N(v0)` after trimming the vertices that
//!    look wrong on a `4k`-subset `S0` of its cluster, recurse into both
//!    sides and merge under a uniformly constant distribution on `S0`;
//! 2. `|A2| >= |V|/4`: run the cluster partition on `A2` and either keep
//!    its `U` under a blended distribution, or recurse into the parts and
//!    merge them under that distribution;
//! 3. `|A3| >= |V|/4`: regularize `G[A3]` first, then proceed as in 2 with
//!    the measured balance.
//!
//! Subproblems large enough for the full-size route recurse; the others,
//! and nodes past the depth cap, use the pressure pipeline on `G[V]`. Tiny
//! nodes use the exact `f` oracle. Every step is logged in the trace, and
//! every merge measures `bad` again.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{
    merge_controlled, pressure_pipeline, realize_witness, ControlledSet, GrowthFn, PressureInstance, Provenance,
};
use crate::clusters::{all_views, ClusterParams};
use crate::distributions::{DistributionSpec, BETA_MAX};
use crate::error::{Error, Result};
use crate::graph::{Graph, Induced, VertexSet};
use crate::oracles::{self, DistinctDegreeWitness, F_EXACT_LIMIT};
use crate::partition::{run_partition, PartitionConfig, PartitionResult};
use crate::rng;

/// `(lambda, T, M)` from `log2 lambda = (log2 k)^(4/9)`,
/// `log2 T = (log2 k)^(5/9)` and `log2 M = (log2 k)^(2/3)`, with `lambda` and
/// `M` at least 2 and `T` at least 1.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Schedule {
    pub lambda: f64,
    pub t: f64,
    pub m: f64,
}

impl Schedule {
    pub fn exact(k: f64) -> Self {
        let l = k.max(1.0).log2();
        Schedule {
            lambda: 2f64.powf(l.powf(4.0 / 9.0)),
            t: 2f64.powf(l.powf(5.0 / 9.0)),
            m: 2f64.powf(l.powf(2.0 / 3.0)),
        }
    }

    pub fn for_k(k: f64) -> Self {
        let e = Self::exact(k);
        Schedule {
            lambda: e.lambda.max(2.0),
            t: e.t.max(1.0),
            m: e.m.max(2.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisBudget {
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
    /// Constant of `g2(x) = C (log2 x)^2`.
    pub c: f64,
    pub depth_cap: usize,
    /// Nodes of at most this size use the exact `f` oracle.
    pub base_size: usize,
    pub n_samples: usize,
    pub realize_trials: usize,
    pub partition_attempts: usize,
    /// Size constant for pressure nodes: `|U| = c (|V|^2 q)^(1/3)` with `q`
    /// the edge density of `G[V]`.
    pub pressure_c: f64,
}

impl SynthesisBudget {
    /// Desk defaults for an `n`-vertex graph with `k = sqrt(n)`.
    pub fn for_n(n: usize) -> Self {
        SynthesisBudget {
            k: (n as f64).sqrt(),
            c1: 1.0,
            c2: 1.0,
            c: 1.0,
            depth_cap: 3,
            base_size: 20,
            n_samples: 400,
            realize_trials: 10,
            partition_attempts: 50,
            pressure_c: 1.0,
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::for_k(self.k)
    }

    pub fn g1(&self) -> GrowthFn {
        GrowthFn::G1 {
            c1: self.c1,
            c2: self.c2,
        }
    }

    pub fn g2(&self) -> GrowthFn {
        GrowthFn::G2 { c: self.c }
    }

    fn validate(&self) -> Result<()> {
        if !(self.k >= 1.0) {
            return Err(Error::arg("k must be at least 1"));
        }
        if self.n_samples < crate::bad::MIN_SAMPLES {
            return Err(Error::arg(format!("need at least {} samples", crate::bad::MIN_SAMPLES)));
        }
        if self.base_size > F_EXACT_LIMIT {
            return Err(Error::arg(format!("base size above {F_EXACT_LIMIT}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Root,
    Base,
    Case1,
    Case2a,
    Case2b,
    Case3a,
    Case3b,
    /// Pressure pipeline on `G[V]`, standing in for the small-set route.
    Pressure,
    Memo,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub node: usize,
    pub depth: usize,
    pub size: usize,
    pub k: f64,
    pub case: Case,
    pub note: String,
    pub result_size: usize,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisResult {
    pub controlled: ControlledSet,
    pub witness: DistinctDegreeWitness,
    pub trace: Vec<TraceEntry>,
    /// The construction ran on the complement (witnesses carry over).
    pub complemented: bool,
    pub schedule: Schedule,
}

/// Runs the recursion on `g` and realizes a witness from the result. Never
/// fails on a valid budget: when every case fails the best partial set is
/// returned with the reasons in the trace.
pub fn synthesize(g: &Graph, budget: &SynthesisBudget, seed: u64) -> Result<SynthesisResult> {
    budget.validate()?;
    let n = g.n();
    if n == 0 {
        return Err(Error::arg("empty graph"));
    }
    let mut trace = Vec::new();
    let mut notes = Vec::new();
    if (n as f64) > budget.k * budget.k {
        notes.push(format!("n = {n} above k^2 = {:.1}", budget.k * budget.k));
    }
    if n <= oracles::HOM_EXACT_LIMIT {
        let hom = oracles::hom_exact(g)?.value as f64;
        let cap = (n * n) as f64 / budget.k.powi(3);
        if hom > cap {
            notes.push(format!("hom = {hom} above n^2/k^3 = {cap:.2}"));
        }
    } else {
        notes.push("hom bound taken on faith".into());
    }
    let low = (0..n).filter(|&v| 2 * g.degree(v) < n).count();
    let complemented = 2 * low < n;
    let owned;
    let gg = if complemented {
        owned = g.complement();
        notes.push("fewer than n/2 vertices of degree below n/2: working in the complement".into());
        &owned
    } else {
        g
    };
    trace.push(TraceEntry {
        node: 0,
        depth: 0,
        size: n,
        k: budget.k,
        case: Case::Root,
        note: notes.join("; "),
        result_size: 0,
        alpha: 0.0,
    });

    let mut s = Synth {
        g: gg,
        budget,
        seed,
        next_node: 1,
        memo: HashMap::new(),
        trace,
    };
    let all = gg.vertices();
    if n <= budget.base_size {
        let controlled = s.base_node(&all, 0, 0, budget.k).unwrap_or_else(|| s.singleton(&all));
        let witness = oracles::f_exact(gg)?;
        return Ok(SynthesisResult {
            controlled,
            witness,
            trace: s.trace,
            complemented,
            schedule: budget.schedule(),
        });
    }
    let main = s.solve(&all, budget.k, 0);
    let fallback = s.pressure_node(&all, 0, 0, "top-level comparison");
    let controlled = match (main, fallback) {
        (Some(a), Some(b)) if b.len() > a.len() => b,
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => s.singleton(&all),
    };
    // degrees in the complement of G[host] are |host| - 1 - d, so a witness
    // found there is also one in G
    let witness = realize_witness(gg, &controlled, budget.realize_trials, rng::derive(seed, 0x5157)).witness;
    debug_assert!(witness.verify(g));
    Ok(SynthesisResult {
        controlled,
        witness,
        trace: s.trace,
        complemented,
        schedule: budget.schedule(),
    })
}

struct Synth<'a> {
    g: &'a Graph,
    budget: &'a SynthesisBudget,
    seed: u64,
    next_node: usize,
    memo: HashMap<Vec<u64>, ControlledSet>,
    trace: Vec<TraceEntry>,
}

/// `k(V)` from a node with `n` vertices and target `k`, and whether the
/// full-size route applies.
fn child_k(size: usize, n: usize, k: f64) -> (f64, bool) {
    let (v, n) = (size as f64, n as f64);
    if v >= n.powi(4) / k.powi(6) {
        (k * (v / n).powf(2.0 / 3.0), true)
    } else {
        (v * k.powi(3) / (n * n), false)
    }
}

impl<'a> Synth<'a> {
    fn node_id(&mut self) -> usize {
        let id = self.next_node;
        self.next_node += 1;
        id
    }

    fn log(&mut self, node: usize, depth: usize, size: usize, k: f64, case: Case, note: String, cs: Option<&ControlledSet>) {
        self.trace.push(TraceEntry {
            node,
            depth,
            size,
            k,
            case,
            note,
            result_size: cs.map_or(0, ControlledSet::len),
            alpha: cs.map_or(0.0, |c| c.alpha),
        });
    }

    fn sub_seed(&self, node: usize, purpose: u64) -> u64 {
        rng::derive(self.seed, (node as u64) << 8 | purpose)
    }

    fn singleton(&self, v: &VertexSet) -> ControlledSet {
        let mut u = VertexSet::new(self.g.n());
        if let Some(x) = v.iter().next() {
            u.insert(x);
        }
        ControlledSet {
            u_set: u,
            spec: DistributionSpec::trivial(self.g.vertices()),
            alpha: 0.0,
            alpha_half_width: 0.0,
            provenance: Provenance::Singleton,
        }
    }

    /// Full case analysis on `G[v]` with target `k`.
    fn solve(&mut self, v: &VertexSet, k: f64, depth: usize) -> Option<ControlledSet> {
        let node = self.node_id();
        let size = v.len();
        if size == 0 {
            return None;
        }
        if size <= self.budget.base_size {
            return self.base_node(v, node, depth, k);
        }
        let key = v.words().to_vec();
        if let Some(hit) = self.memo.get(&key).cloned() {
            self.log(node, depth, size, k, Case::Memo, "repeated subproblem".into(), Some(&hit));
            return Some(hit);
        }
        if depth >= self.budget.depth_cap {
            return self.pressure_node(v, node, depth, "depth cap");
        }
        let out = self.cases(v, k, node, depth);
        let out = match out {
            Some(cs) if cs.len() >= 2 => Some(cs),
            other => {
                let p = self.pressure_node(v, node, depth, "cases gave fewer than two vertices");
                match (other, p) {
                    (a, Some(b)) if b.len() > a.as_ref().map_or(0, ControlledSet::len) => Some(b),
                    (a, _) => a,
                }
            }
        };
        if let Some(cs) = &out {
            self.memo.insert(key, cs.clone());
        }
        out
    }

    /// Child solve: full route for large parts, pressure otherwise.
    fn child(&mut self, part: &VertexSet, n: usize, k: f64, depth: usize) -> Option<ControlledSet> {
        let (kc, full) = child_k(part.len(), n, k);
        if part.len() <= self.budget.base_size {
            let node = self.node_id();
            return self.base_node(part, node, depth, kc);
        }
        if full {
            self.solve(part, kc.max(1.0), depth)
        } else {
            let node = self.node_id();
            self.pressure_node(part, node, depth, &format!("small part, k(V) = {kc:.2}"))
        }
    }

    fn base_node(&mut self, v: &VertexSet, node: usize, depth: usize, k: f64) -> Option<ControlledSet> {
        let h = self.g.induced(v).ok()?;
        let w = oracles::f_exact(&h.graph).ok()?;
        let u = h.lift(&w.marked, self.g.n());
        let cs = ControlledSet::measure(
            self.g,
            u,
            DistributionSpec::trivial(self.g.vertices()),
            Provenance::ExactBase,
            self.budget.n_samples,
            self.sub_seed(node, 1),
        )
        .ok()?;
        self.log(node, depth, v.len(), k, Case::Base, format!("exact f = {}", w.value), Some(&cs));
        Some(cs)
    }

    /// Pressure pipeline on `G[v]` with `S = v`, a greedy separated `U` and
    /// the measured balance.
    fn pressure_node(&mut self, v: &VertexSet, node: usize, depth: usize, why: &str) -> Option<ControlledSet> {
        let g = self.g;
        let m = v.len();
        if m < 2 {
            return None;
        }
        let h = g.induced(v).ok()?;
        let avg = h.graph.average_degree();
        let d = (avg.min(m as f64 - 1.0 - avg) / 4.0).max(1.0);
        let q = (avg / (m as f64 - 1.0)).clamp(1.0 / m as f64, 1.0);
        let size = PressureInstance::gnp_size(m, q, self.budget.pressure_c);
        let mut order = v.to_vec();
        order.shuffle(&mut rng::stream(self.sub_seed(node, 2), 0));
        let mut picked: Vec<usize> = Vec::new();
        for x in order {
            if picked.len() == size {
                break;
            }
            if picked.iter().all(|&y| g.div_in(x, y, v) as f64 >= d) {
                picked.push(x);
            }
        }
        if picked.len() < 2 {
            self.log(node, depth, m, 0.0, Case::Failed, format!("{why}: no separated pair at D = {d:.1}"), None);
            return None;
        }
        let u = VertexSet::from_vertices(g.n(), picked).ok()?;
        let worst = v.iter().map(|x| g.degree_in(x, &u)).max().unwrap_or(0);
        let gamma = worst as f64 / u.len() as f64;
        let inst = PressureInstance::new(g, u, v.clone(), d, gamma).ok()?;
        let rep = pressure_pipeline(g, &inst, self.budget.n_samples, self.sub_seed(node, 3)).ok()?;
        let cs = rep.controlled;
        let note = format!(
            "{why}: D = {d:.1}, gamma = {:.3}, {}/{} pairs within target {:.4}",
            inst.gamma, rep.pairs_ok, rep.pairs, rep.target
        );
        self.log(node, depth, m, 0.0, Case::Pressure, note, Some(&cs));
        Some(cs)
    }

    fn cases(&mut self, v: &VertexSet, k: f64, node: usize, depth: usize) -> Option<ControlledSet> {
        let g = self.g;
        let n = v.len();
        let sched = Schedule::for_k(k);
        let h = g.induced(v).ok()?;
        let hg = &h.graph;
        let params = ClusterParams::full(hg, sched.m, sched.lambda).ok()?;
        let views = all_views(hg, &params);
        let lo = k.powf(1.5) / sched.t;
        let (mut a1, mut a2, mut a3) = (Vec::new(), Vec::new(), Vec::new());
        for x in 0..n {
            let d = hg.degree(x) as f64;
            if 2.0 * d >= n as f64 {
                continue;
            }
            if d < lo {
                a3.push(x);
            } else if views[x].w_star.len() as f64 >= 4.0 * k {
                a1.push(x);
            } else {
                a2.push(x);
            }
        }
        let summary = format!(
            "|A1| = {}, |A2| = {}, |A3| = {}, lambda = {:.2}, T = {:.2}, M = {:.2}",
            a1.len(),
            a2.len(),
            a3.len(),
            sched.lambda,
            sched.t,
            sched.m
        );
        if 2 * (a1.len() + a2.len() + a3.len()) < n {
            self.log(node, depth, n, k, Case::Failed, format!("{summary}; |A| below n/2"), None);
        }

        if let Some(&v0) = a1.iter().max_by_key(|&&x| (views[x].w_star.len(), std::cmp::Reverse(x))) {
            let r = self.case1(&h, v0, &views[v0].w_star, k, sched, node, depth);
            match r {
                Ok(cs) => {
                    self.log(node, depth, n, k, Case::Case1, format!("{summary}; v0 = {}", h.map[v0]), Some(&cs));
                    return Some(cs);
                }
                Err(e) => self.log(node, depth, n, k, Case::Failed, format!("case 1: {e}"), None),
            }
        }
        if 4 * a2.len() >= n {
            let a = VertexSet::from_vertices(n, a2.iter().copied()).ok()?;
            let alpha = (4.0 * k / n as f64).min(1.0);
            match self.partition_case(&h, &h, &a, alpha, k, sched, node, depth, 2) {
                Ok((cs, case)) => {
                    self.log(node, depth, n, k, case, summary, Some(&cs));
                    return Some(cs);
                }
                Err(e) => self.log(node, depth, n, k, Case::Failed, format!("case 2: {e}"), None),
            }
        }
        if 4 * a3.len() >= n {
            match self.case3(&h, &a3, k, sched, node, depth) {
                Ok((cs, case)) => {
                    self.log(node, depth, n, k, case, summary, Some(&cs));
                    return Some(cs);
                }
                Err(e) => self.log(node, depth, n, k, Case::Failed, format!("case 3: {e}"), None),
            }
        }
        self.log(node, depth, n, k, Case::Failed, format!("{summary}; no case applied"), None);
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn case1(
        &mut self,
        h: &Induced,
        v0: usize,
        cluster: &VertexSet,
        k: f64,
        sched: Schedule,
        node: usize,
        depth: usize,
    ) -> Result<ControlledSet> {
        let hg = &h.graph;
        let n = hg.n();
        let size = (4.0 * k).ceil() as usize;
        // S0: the lowest-labelled 4k vertices of the cluster
        let s0 = VertexSet::from_vertices(n, cluster.iter().take(size))?;
        let nb = hg.neighbours(v0);
        let kk = k;
        let mut v1 = VertexSet::new(n);
        let mut v2 = VertexSet::new(n);
        let (mut y, mut ybar) = (0, 0);
        for x in 0..n {
            if s0.contains(x) {
                continue;
            }
            let ds = hg.degree_in(x, &s0) as f64;
            if nb.contains(x) {
                if ds <= 3.0 * kk {
                    y += 1;
                } else {
                    v1.insert(x);
                }
            } else if ds >= kk {
                ybar += 1;
            } else {
                v2.insert(x);
            }
        }
        let d0 = hg.degree(v0) as f64;
        let nf = n as f64;
        let split = 2.0 * nf.powi(4) / k.powi(6);
        if d0 < split {
            let cap = (nf.powi(4) / k.powi(6)).floor().max(1.0) as usize;
            if v1.len() > cap {
                v1 = VertexSet::from_vertices(n, v1.iter().take(cap))?;
            }
        }
        let host_n = self.g.n();
        let parts = [h.lift(&v1, host_n), h.lift(&v2, host_n)];
        let mut sets = Vec::new();
        for p in &parts {
            if p.is_empty() {
                continue;
            }
            if let Some(cs) = self.child(p, n, k, depth + 1) {
                if !cs.is_empty() {
                    sets.push(cs);
                }
            }
        }
        if sets.is_empty() {
            return Err(Error::Construction(format!(
                "both sides empty after trimming (|Y| = {y}, |Y'| = {ybar})"
            )));
        }
        let cross = DistributionSpec::uniform_constant(h.lift(&s0, host_n));
        let target = self.merge_target(k);
        let rep = merge_controlled(
            self.g,
            &sets,
            &cross,
            self.budget_g1(),
            target,
            self.budget.n_samples,
            self.sub_seed(node, 4),
        )?;
        self.log(
            node,
            depth,
            n,
            k,
            Case::Case1,
            format!(
                "control set read as S0 (|S0| = {}), |Y| = {y}, |Y'| = {ybar}, |V1| = {}, |V2| = {}, merge holds = {}, M = {:.2}",
                s0.len(),
                parts[0].len(),
                parts[1].len(),
                rep.holds,
                sched.m
            ),
            Some(&rep.merged),
        );
        Ok(rep.merged)
    }

    fn case3(&mut self, h: &Induced, a3: &[usize], k: f64, sched: Schedule, node: usize, depth: usize) -> Result<(ControlledSet, Case)> {
        let hg = &h.graph;
        let a = VertexSet::from_vertices(hg.n(), a3.iter().copied())?;
        let sub = hg.induced(&a)?;
        let keep = oracles::regularize(&sub.graph)?;
        let reg = sub.graph.induced(&keep)?;
        // compose maps: regularized local -> G[A3] local -> node local
        let map: Vec<usize> = reg.map.iter().map(|&i| sub.map[i]).collect();
        let composed = Induced {
            graph: reg.graph,
            map: map.iter().map(|&i| h.map[i]).collect(),
        };
        let m = composed.graph.n();
        let alpha = (2.0 * k.powf(1.5) / (sched.t * m as f64)).min(1.0);
        let all = composed.graph.vertices();
        self.partition_case(h, &composed, &all, alpha, k, sched, node, depth, 3)
    }

    /// Cases 2 and 3 after choosing the graph: partition `a` in `space`,
    /// then keep `U` or recurse into the parts.
    #[allow(clippy::too_many_arguments)]
    fn partition_case(
        &mut self,
        h: &Induced,
        space: &Induced,
        a: &VertexSet,
        alpha: f64,
        k: f64,
        sched: Schedule,
        node: usize,
        depth: usize,
        case_no: u8,
    ) -> Result<(ControlledSet, Case)> {
        let sg = &space.graph;
        let mut cfg = PartitionConfig::desk((k.round() as usize).max(1), sched.m, sched.lambda, alpha);
        cfg.max_attempts = self.budget.partition_attempts;
        let run = run_partition(sg, a, &cfg, self.sub_seed(node, 5))?;
        let res: PartitionResult = run.into_result()?;
        let host_n = self.g.n();
        let lift = |set: &VertexSet| space.lift(set, host_n);
        let u_list: Vec<usize> = res.u_list.iter().map(|&x| space.map[x]).collect();
        let s = lift(&res.s);
        let t = u_list.len();
        // case 2 uses gamma = 1; case 3 the measured balance
        let beta_inv = if case_no == 2 {
            10.0 * (k * k.max(2.0).ln()).sqrt()
        } else {
            10.0 * (res.gamma.max(1.0 / t.max(1) as f64) * t as f64 * k.max(2.0).ln().powi(4)).sqrt()
        };
        let beta = (1.0 / beta_inv).min(BETA_MAX);
        let blended = DistributionSpec::blended(u_list.clone(), s.clone(), beta)?;
        let direct = t as f64 >= k / sched.lambda.powi(3);
        let (case_a, case_b) = if case_no == 2 {
            (Case::Case2a, Case::Case2b)
        } else {
            (Case::Case3a, Case::Case3b)
        };
        if direct || t < 2 && res.v_sets.iter().all(|x| x.len() <= 1) {
            let u = VertexSet::from_vertices(host_n, u_list.iter().copied())?;
            let cs = ControlledSet::measure(
                self.g,
                u,
                blended,
                Provenance::Partition,
                self.budget.n_samples,
                self.sub_seed(node, 6),
            )?;
            let note = format!("t = {t}, beta = {beta:.4}, attempts = {}", res.attempts_used);
            self.log(node, depth, h.graph.n(), k, case_a, note, Some(&cs));
            return Ok((cs, case_a));
        }
        // split the parts by the full-size threshold and keep the heavier side
        let n = h.graph.n() as f64;
        let thresh = n.powi(4) / k.powi(6);
        let (big, small): (Vec<usize>, Vec<usize>) = (0..t).partition(|&i| res.v_sets[i].len() as f64 >= thresh);
        let weight = |ix: &[usize]| ix.iter().map(|&i| res.v_sets[i].len()).sum::<usize>();
        let chosen = if weight(&big) >= weight(&small) { big } else { small };
        let mut sets = Vec::new();
        for &i in &chosen {
            let part = lift(&res.v_sets[i]);
            if let Some(cs) = self.child(&part, h.graph.n(), k, depth + 1) {
                if !cs.is_empty() {
                    sets.push(cs);
                }
            }
        }
        if sets.is_empty() {
            return Err(Error::Construction("every part came back empty".into()));
        }
        let rep = merge_controlled(
            self.g,
            &sets,
            &blended,
            self.budget_g1(),
            self.merge_target(k),
            self.budget.n_samples,
            self.sub_seed(node, 7),
        )?;
        let note = format!(
            "t = {t}, parts used = {}, merge holds = {}, beta = {beta:.4}",
            rep.used.len(),
            rep.holds
        );
        self.log(node, depth, h.graph.n(), k, case_b, note, Some(&rep.merged));
        Ok((rep.merged, case_b))
    }

    fn budget_g1(&self) -> GrowthFn {
        self.budget.g1()
    }

    /// `k / g1(k)`, at least 1.
    fn merge_target(&self, k: f64) -> usize {
        (k / self.budget.g1().value(k)).ceil().max(1.0) as usize
    }
}
