//! Exact and greedy oracles for `hom(G)` and `f(G)`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, Ones, VertexSet};
use crate::rng;

/// Default guard for [`hom_exact`].
pub const HOM_EXACT_LIMIT: usize = 128;
/// Default guard for [`f_exact`].
pub const F_EXACT_LIMIT: usize = 20;
/// Hard ceiling for the subset enumeration: masks are `u32`.
const F_EXACT_CEILING: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HomKind {
    Clique,
    Independent,
}

#[derive(Clone, Debug, Serialize)]
pub struct HomResult {
    pub value: usize,
    pub witness: VertexSet,
    pub kind: HomKind,
}

impl HomResult {
    pub fn verify(&self, g: &Graph) -> bool {
        self.witness.len() == self.value
            && match self.kind {
                HomKind::Clique => g.is_clique(&self.witness),
                HomKind::Independent => g.is_independent(&self.witness),
            }
    }
}

/// A host set `U` and marked vertices of `U` whose degrees in `G[U]` are
/// pairwise distinct.
#[derive(Clone, Debug, Serialize)]
pub struct DistinctDegreeWitness {
    pub value: usize,
    pub host: VertexSet,
    #[serde(rename = "witness")]
    pub marked: VertexSet,
}

impl DistinctDegreeWitness {
    /// Marks the lowest-labelled vertex of every degree value in `G[host]`.
    pub fn from_host(g: &Graph, host: VertexSet) -> Self {
        let mut first: BTreeMap<usize, usize> = BTreeMap::new();
        for v in host.iter() {
            first.entry(g.degree_in(v, &host)).or_insert(v);
        }
        Self::with_marked(g.n(), host, first.into_values())
    }

    /// Marks, among `candidates ⊆ host`, the lowest-labelled vertex of every
    /// degree value they realize in `G[host]`.
    pub fn from_candidates(g: &Graph, host: VertexSet, candidates: &[usize]) -> Self {
        let mut first: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in candidates {
            debug_assert!(host.contains(v));
            let d = g.degree_in(v, &host);
            let e = first.entry(d).or_insert(v);
            *e = (*e).min(v);
        }
        Self::with_marked(g.n(), host, first.into_values())
    }

    fn with_marked(n: usize, host: VertexSet, marked: impl Iterator<Item = usize>) -> Self {
        let mut set = VertexSet::new(n);
        for v in marked {
            set.insert(v);
        }
        DistinctDegreeWitness {
            value: set.len(),
            host,
            marked: set,
        }
    }

    /// Recomputes induced degrees and checks they are pairwise distinct.
    pub fn verify(&self, g: &Graph) -> bool {
        if self.marked.len() != self.value || !self.marked.is_subset(&self.host) {
            return false;
        }
        let mut degs: Vec<usize> = self
            .marked
            .iter()
            .map(|v| {
                self.host
                    .iter()
                    .filter(|&w| g.has_edge(v, w))
                    .count()
            })
            .collect();
        degs.sort_unstable();
        degs.windows(2).all(|w| w[0] != w[1])
    }
}

// ---------------------------------------------------------------------------
// hom(G)
// ---------------------------------------------------------------------------

pub fn hom_exact(g: &Graph) -> Result<HomResult> {
    hom_exact_with_limit(g, HOM_EXACT_LIMIT)
}

/// `max(ω(G), α(G))` by branch and bound; `α` is `ω` of the complement.
pub fn hom_exact_with_limit(g: &Graph, limit: usize) -> Result<HomResult> {
    if g.n() > limit {
        return Err(Error::SizeLimit {
            what: "hom_exact",
            n: g.n(),
            limit,
        });
    }
    let clique = max_clique(g);
    let indep = max_clique(&g.complement());
    let res = if clique.len() >= indep.len() {
        HomResult {
            value: clique.len(),
            witness: clique,
            kind: HomKind::Clique,
        }
    } else {
        HomResult {
            value: indep.len(),
            witness: indep,
            kind: HomKind::Independent,
        }
    };
    debug_assert!(res.verify(g));
    Ok(res)
}

/// Maximum clique by branch and bound with a greedy colouring bound.
pub fn max_clique(g: &Graph) -> VertexSet {
    let mut best = Vec::new();
    let mut cur = Vec::new();
    let cand = g.vertices().words().to_vec();
    expand(g, &mut cur, cand, &mut best);
    VertexSet::from_vertices(g.n(), best).expect("clique vertices are in range")
}

fn expand(g: &Graph, cur: &mut Vec<usize>, mut cand: Vec<u64>, best: &mut Vec<usize>) {
    let (order, colours) = colour_sort(g, &cand);
    for i in (0..order.len()).rev() {
        if cur.len() + colours[i] <= best.len() {
            return;
        }
        let v = order[i];
        cur.push(v);
        let next: Vec<u64> = cand.iter().zip(g.row(v)).map(|(a, b)| a & b).collect();
        if next.iter().all(|&w| w == 0) {
            if cur.len() > best.len() {
                best.clone_from(cur);
            }
        } else {
            expand(g, cur, next, best);
        }
        cur.pop();
        cand[v >> 6] &= !(1u64 << (v & 63));
    }
}

/// Greedy sequential colouring of the candidate set. Returns vertices in
/// colour order and the (1-based) colour of each position.
fn colour_sort(g: &Graph, cand: &[u64]) -> (Vec<usize>, Vec<usize>) {
    let mut uncoloured = cand.to_vec();
    let mut order = Vec::new();
    let mut colours = Vec::new();
    let mut colour = 0;
    while uncoloured.iter().any(|&w| w != 0) {
        colour += 1;
        let mut q = uncoloured.clone();
        while let Some(v) = Ones::new(&q).next() {
            order.push(v);
            colours.push(colour);
            uncoloured[v >> 6] &= !(1u64 << (v & 63));
            for (qw, rw) in q.iter_mut().zip(g.row(v)) {
                *qw &= !rw;
            }
            q[v >> 6] &= !(1u64 << (v & 63));
        }
    }
    (order, colours)
}

// ---------------------------------------------------------------------------
// f(G)
// ---------------------------------------------------------------------------

pub fn f_exact(g: &Graph) -> Result<DistinctDegreeWitness> {
    f_exact_with_limit(g, F_EXACT_LIMIT)
}

/// Exhaustive search over all nonempty hosts, counting distinct degree
/// values of each induced subgraph. Ties go to the smallest host mask.
pub fn f_exact_with_limit(g: &Graph, limit: usize) -> Result<DistinctDegreeWitness> {
    let n = g.n();
    let limit = limit.min(F_EXACT_CEILING);
    if n > limit {
        return Err(Error::SizeLimit {
            what: "f_exact",
            n,
            limit,
        });
    }
    if n == 0 {
        return Err(Error::arg("f_exact on the empty vertex set"));
    }
    let rows: Vec<u32> = (0..n).map(|v| g.row(v)[0] as u32).collect();
    let total: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let chunk = 1u32 << 14;
    let chunks = total / chunk + 1;
    let (count, mask) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * chunk).max(1);
            let hi = c.saturating_mul(chunk).saturating_add(chunk - 1).min(total);
            let mut best = (0u32, 0u32);
            for mask in lo..=hi {
                let mut seen = 0u64;
                let mut m = mask;
                while m != 0 {
                    let v = m.trailing_zeros() as usize;
                    m &= m - 1;
                    seen |= 1u64 << (rows[v] & mask).count_ones();
                }
                let k = seen.count_ones();
                if k > best.0 {
                    best = (k, mask);
                }
            }
            best
        })
        .reduce(
            || (0, u32::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let host = VertexSet::from_vertices(n, (0..n).filter(|&v| mask >> v & 1 == 1))?;
    let w = DistinctDegreeWitness::from_host(g, host);
    debug_assert_eq!(w.value, count as usize);
    debug_assert!(w.verify(g));
    Ok(w)
}

/// Randomized local search over hosts; restart 0 starts from `V(G)`.
/// Always returns a verified witness, so `value <= f(G)`.
pub fn f_lower_greedy(g: &Graph, effort: usize, seed: u64) -> Result<DistinctDegreeWitness> {
    if effort == 0 {
        return Err(Error::arg("effort must be at least 1"));
    }
    let n = g.n();
    if n == 0 {
        return Err(Error::arg("empty graph"));
    }
    let mut best: Option<(usize, VertexSet)> = None;
    for restart in 0..effort {
        let mut rng = rng::stream(seed, restart as u64);
        let host = if restart == 0 {
            g.vertices()
        } else {
            let density = rng.gen_range(0.3..=1.0);
            let mut h = VertexSet::new(n);
            for v in 0..n {
                if rng.gen::<f64>() < density {
                    h.insert(v);
                }
            }
            if h.is_empty() {
                h.insert(rng.gen_range(0..n));
            }
            h
        };
        let mut search = LocalSearch::new(g, host);
        let mut order: Vec<usize> = (0..n).collect();
        for _pass in 0..3 {
            order.shuffle(&mut rng);
            let mut improved = false;
            for &v in &order {
                let before = search.distinct;
                if search.host.contains(v) && search.host.len() == 1 {
                    continue;
                }
                search.toggle(v);
                if search.distinct < before {
                    search.toggle(v);
                } else if search.distinct > before {
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| search.distinct > *b) {
            best = Some((search.distinct, search.host));
        }
    }
    let (_, host) = best.expect("effort >= 1");
    let w = DistinctDegreeWitness::from_host(g, host);
    assert!(w.verify(g), "local search produced an invalid witness");
    Ok(w)
}

/// Host set with incrementally maintained induced degrees and a histogram
/// of the degree values present among host vertices.
struct LocalSearch<'g> {
    g: &'g Graph,
    host: VertexSet,
    deg: Vec<usize>,
    hist: Vec<usize>,
    distinct: usize,
}

impl<'g> LocalSearch<'g> {
    fn new(g: &'g Graph, host: VertexSet) -> Self {
        let n = g.n();
        let deg: Vec<usize> = (0..n).map(|v| g.degree_in(v, &host)).collect();
        let mut hist = vec![0usize; n + 1];
        for v in host.iter() {
            hist[deg[v]] += 1;
        }
        let distinct = hist.iter().filter(|&&c| c > 0).count();
        LocalSearch {
            g,
            host,
            deg,
            hist,
            distinct,
        }
    }

    fn bump(&mut self, v: usize, up: bool) {
        let in_host = self.host.contains(v);
        if in_host {
            self.dec_hist(self.deg[v]);
        }
        if up {
            self.deg[v] += 1;
        } else {
            self.deg[v] -= 1;
        }
        if in_host {
            self.inc_hist(self.deg[v]);
        }
    }

    fn inc_hist(&mut self, d: usize) {
        self.hist[d] += 1;
        if self.hist[d] == 1 {
            self.distinct += 1;
        }
    }

    fn dec_hist(&mut self, d: usize) {
        self.hist[d] -= 1;
        if self.hist[d] == 0 {
            self.distinct -= 1;
        }
    }

    fn toggle(&mut self, w: usize) {
        let adding = !self.host.contains(w);
        if adding {
            self.host.insert(w);
            self.inc_hist(self.deg[w]);
        } else {
            self.dec_hist(self.deg[w]);
            self.host.remove(w);
        }
        let g = self.g;
        for x in Ones::new(g.row(w)) {
            self.bump(x, adding);
        }
    }
}

// ---------------------------------------------------------------------------
// Turán greedy and degree regularization
// ---------------------------------------------------------------------------

/// Independent set of size at least `n / (d̄ + 1)` by repeatedly taking a
/// minimum-degree vertex of what remains and deleting its closed neighbourhood.
pub fn turan_independent_set(g: &Graph) -> VertexSet {
    let n = g.n();
    let mut alive = g.vertices();
    let mut deg = g.degrees();
    let mut out = VertexSet::new(n);
    while !alive.is_empty() {
        let v = alive
            .iter()
            .min_by_key(|&v| (deg[v], v))
            .expect("nonempty");
        out.insert(v);
        let mut dead: Vec<usize> = Ones::new(g.row(v)).filter(|&x| alive.contains(x)).collect();
        dead.push(v);
        for &x in &dead {
            alive.remove(x);
        }
        for &x in &dead {
            for y in Ones::new(g.row(x)) {
                if alive.contains(y) {
                    deg[y] -= 1;
                }
            }
        }
    }
    assert!(g.is_independent(&out), "greedy produced a dependent set");
    out
}

/// Degree profile of `G[A]`: `(δ, Δ)`.
pub fn induced_degree_range(g: &Graph, a: &VertexSet) -> (usize, usize) {
    let mut lo = usize::MAX;
    let mut hi = 0;
    for v in a.iter() {
        let d = g.degree_in(v, a);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if a.is_empty() {
        (0, 0)
    } else {
        (lo, hi)
    }
}

/// Whether `A` certifies the regularization bounds:
/// `|A| >= n / (30 log₂ n)` and `Δ(G[A]) <= 5 log₂ n · δ(G[A])`.
pub fn regularization_certified(g: &Graph, a: &VertexSet) -> bool {
    let n = g.n() as f64;
    let l = n.log2();
    if a.is_empty() || (a.len() as f64) < n / (30.0 * l) {
        return false;
    }
    let (lo, hi) = induced_degree_range(g, a);
    hi as f64 <= 5.0 * l * lo as f64
}

/// Large induced subgraph whose degrees are within a `5 log₂ n` factor.
///
/// Candidates: the whole graph; for each dyadic level `2^j`, the fixpoint
/// of alternately peeling vertices of induced degree `< 2^j` and
/// `> 5 log₂ n · 2^j`; and a Turán independent set. The largest candidate
/// that certifies is returned.
pub fn regularize(g: &Graph) -> Result<VertexSet> {
    let n = g.n();
    if n < 2 {
        return Err(Error::arg("regularize needs n >= 2"));
    }
    let ratio = 5.0 * (n as f64).log2();
    let mut candidates = vec![g.vertices()];
    let max_deg = g.max_degree();
    let mut lo = 1usize;
    while lo <= max_deg.max(1) {
        let hi = (ratio * lo as f64).floor() as usize;
        candidates.push(peel(g, lo, hi));
        lo *= 2;
    }
    candidates.push(turan_independent_set(g));
    candidates
        .into_iter()
        .filter(|a| regularization_certified(g, a))
        .max_by_key(|a| a.len())
        .ok_or_else(|| {
            Error::Construction(format!(
                "no candidate set certified the degree-ratio bound on n = {n}"
            ))
        })
}

fn peel(g: &Graph, lo: usize, hi: usize) -> VertexSet {
    let mut a = g.vertices();
    let mut deg = g.degrees();
    loop {
        let drop: Vec<usize> = a.iter().filter(|&v| deg[v] < lo || deg[v] > hi).collect();
        if drop.is_empty() {
            return a;
        }
        for &v in &drop {
            a.remove(v);
        }
        for &v in &drop {
            for y in Ones::new(g.row(v)) {
                if a.contains(y) {
                    deg[y] -= 1;
                }
            }
        }
    }
}
