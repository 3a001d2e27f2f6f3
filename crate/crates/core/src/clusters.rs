//! Cluster neighbourhoods and moments.
//!
//! `W_t(v)` is the set of vertices whose `S`-diversity to `v` is at most
//! `4^t d^S(v) / M`. The moment `T(v)` is the first level at which the
//! cluster stops growing by more than a factor `lambda`:
//! `T = min { t : |W_{t+1}| <= lambda |W_t| }`, and `W_* = W_T`,
//! `W_+ = W_{T+1}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::oracles::turan_independent_set;
use crate::rng;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterParams {
    pub m: f64,
    pub lambda: f64,
    pub s: VertexSet,
}

impl ClusterParams {
    pub fn new(m: f64, lambda: f64, s: VertexSet) -> Result<Self> {
        if !(m > 1.0) || !(lambda > 1.0) {
            return Err(Error::arg(format!(
                "cluster parameters need M > 1 and lambda > 1, got M = {m}, lambda = {lambda}"
            )));
        }
        Ok(ClusterParams { m, lambda, s })
    }

    /// Parameters with `S = V(G)`.
    pub fn full(g: &Graph, m: f64, lambda: f64) -> Result<Self> {
        Self::new(m, lambda, g.vertices())
    }

    /// Whether a vertex at diversity `div` from `v` lies in `W_t(v)`, where
    /// `ds = d^S(v)`.
    #[inline]
    pub fn admits(&self, div: usize, t: u32, ds: usize) -> bool {
        div as f64 * self.m <= 4f64.powi(t as i32) * ds as f64
    }
}

/// `div^S(u, v)` for every `u`.
pub fn diversity_profile(g: &Graph, v: usize, s: &VertexSet) -> Vec<usize> {
    (0..g.n()).map(|u| g.div_in(u, v, s)).collect()
}

pub fn cluster_neighbourhood(g: &Graph, v: usize, t: u32, params: &ClusterParams) -> VertexSet {
    let ds = g.degree_in(v, &params.s);
    let mut out = VertexSet::new(g.n());
    for u in 0..g.n() {
        if params.admits(g.div_in(u, v, &params.s), t, ds) {
            out.insert(u);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterView {
    pub v: usize,
    pub t_moment: u32,
    pub w_star: VertexSet,
    pub w_plus: VertexSet,
    /// `|W_0|, ..., |W_{T+1}|`.
    pub level_sizes: Vec<usize>,
    /// `d^S(v) = 0`: every threshold is zero and `W_t` is the set of
    /// `S`-twins of `v` at every level.
    pub degenerate: bool,
}

pub fn theta_moment(g: &Graph, v: usize, params: &ClusterParams) -> ClusterView {
    let ds = g.degree_in(v, &params.s);
    let divs = diversity_profile(g, v, &params.s);
    let level = |t: u32| -> usize { divs.iter().filter(|&&d| params.admits(d, t, ds)).count() };
    let mut sizes = vec![level(0)];
    let mut t = 0u32;
    loop {
        let next = level(t + 1);
        sizes.push(next);
        if next as f64 <= params.lambda * sizes[t as usize] as f64 {
            break;
        }
        t += 1;
    }
    let collect = |t: u32| {
        let mut w = VertexSet::new(g.n());
        for (u, &d) in divs.iter().enumerate() {
            if params.admits(d, t, ds) {
                w.insert(u);
            }
        }
        w
    };
    ClusterView {
        v,
        t_moment: t,
        w_star: collect(t),
        w_plus: collect(t + 1),
        level_sizes: sizes,
        degenerate: ds == 0,
    }
}

/// Views for every vertex, computed in parallel.
pub fn all_views(g: &Graph, params: &ClusterParams) -> Vec<ClusterView> {
    (0..g.n())
        .into_par_iter()
        .map(|v| theta_moment(g, v, params))
        .collect()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ViewCheck {
    pub nesting: bool,
    pub lower_bound: bool,
    /// `T <= log_lambda n`.
    pub moment_bound: bool,
    /// `T <= log_lambda |S|`; implied by the rest only when `S = V`.
    pub moment_bound_s: bool,
    pub growth_cap: bool,
}

impl ViewCheck {
    pub fn all(&self) -> bool {
        self.nesting && self.lower_bound && self.moment_bound && self.growth_cap
    }
}

/// Recomputes a view's levels from scratch and checks its four structural
/// properties.
pub fn check_view(g: &Graph, view: &ClusterView, params: &ClusterParams) -> ViewCheck {
    let t = view.t_moment;
    let mut nesting = view.w_star.is_subset(&view.w_plus) && view.w_star.contains(view.v);
    let mut prev = cluster_neighbourhood(g, view.v, 0, params);
    for level in 1..=t + 1 {
        let cur = cluster_neighbourhood(g, view.v, level, params);
        nesting &= prev.is_subset(&cur);
        prev = cur;
    }
    nesting &= prev == view.w_plus;
    let tf = t as f64;
    let lam = params.lambda;
    let tol = 1e-9;
    ViewCheck {
        nesting,
        lower_bound: view.w_star.len() as f64 >= lam.powf(tf) * (1.0 - tol),
        moment_bound: tf <= (g.n() as f64).ln() / lam.ln() + tol,
        moment_bound_s: !params.s.is_empty() && tf <= (params.s.len() as f64).ln() / lam.ln() + tol,
        growth_cap: view.w_plus.len() as f64 <= lam * view.w_star.len() as f64 * (1.0 + tol),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterBoundVerdict {
    /// `t < log_4 M - 1` and `d^S(v) > 0`.
    pub applicable: bool,
    pub size: usize,
    pub bound: usize,
    pub holds: bool,
}

/// `|W_t(v)| <= 2 Delta(G)` when `t < log_4 M - 1`.
pub fn check_cluster_bound(g: &Graph, v: usize, t: u32, params: &ClusterParams) -> ClusterBoundVerdict {
    let applicable = (t as f64) < params.m.ln() / 4f64.ln() - 1.0 && g.degree_in(v, &params.s) > 0;
    let size = cluster_neighbourhood(g, v, t, params).len();
    let bound = 2 * g.max_degree();
    ClusterBoundVerdict {
        applicable,
        size,
        bound,
        holds: size <= bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DisjointRoute {
    /// `v2 ∉ W_{t1+1}(v1)` and `3 4^t1 d(v1) >= 4^t2 d(v2)`.
    Direct,
    /// The same with the two vertices exchanged.
    Swapped,
    /// `v2 ∉ W_{t1+1}(v1)` and `v1 ∉ W_{t2+1}(v2)`.
    Mutual,
    Inapplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointnessVerdict {
    pub route: DisjointRoute,
    pub intersection: usize,
    /// False only when a hypothesis applied and the clusters still meet.
    pub holds: bool,
}

pub fn check_disjointness(
    g: &Graph,
    v1: usize,
    t1: u32,
    v2: usize,
    t2: u32,
    params: &ClusterParams,
) -> DisjointnessVerdict {
    let s = &params.s;
    let d1 = g.degree_in(v1, s) as f64;
    let d2 = g.degree_in(v2, s) as f64;
    let div = g.div_in(v1, v2, s);
    let out1 = !params.admits(div, t1 + 1, g.degree_in(v1, s));
    let out2 = !params.admits(div, t2 + 1, g.degree_in(v2, s));
    let w1 = 4f64.powi(t1 as i32) * d1;
    let w2 = 4f64.powi(t2 as i32) * d2;
    let route = if out1 && 3.0 * w1 >= w2 {
        DisjointRoute::Direct
    } else if out2 && 3.0 * w2 >= w1 {
        DisjointRoute::Swapped
    } else if out1 && out2 {
        DisjointRoute::Mutual
    } else {
        DisjointRoute::Inapplicable
    };
    let a = cluster_neighbourhood(g, v1, t1, params);
    let b = cluster_neighbourhood(g, v2, t2, params);
    let intersection = a.intersection_len(&b);
    DisjointnessVerdict {
        route,
        intersection,
        holds: route == DisjointRoute::Inapplicable || intersection == 0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiverseSet {
    pub u: VertexSet,
    /// `m / n`.
    pub delta: f64,
    pub m: usize,
    /// `4^t d / M`.
    pub threshold: f64,
}

/// Picks `U ⊆ A` with pairwise `S`-diversity at least `4^t d / M` and
/// `|U| >= delta m / 2`, through a Turán independent set in the graph of
/// close pairs.
pub fn extract_diverse_set(
    g: &Graph,
    a: &VertexSet,
    t: u32,
    d: f64,
    params: &ClusterParams,
) -> Result<DiverseSet> {
    let n = g.n();
    let m = a.len();
    if m == 0 {
        return Err(Error::pre("A is empty"));
    }
    let s = &params.s;
    for v in a.iter() {
        let w = cluster_neighbourhood(g, v, t, params).len();
        if w * m > n {
            return Err(Error::pre(format!(
                "vertex {v}: |W_t| = {w} exceeds n/|A| = {:.3}",
                n as f64 / m as f64
            )));
        }
        if (g.degree_in(v, s) as f64) < d {
            return Err(Error::pre(format!(
                "vertex {v}: d^S = {} is below d = {d}",
                g.degree_in(v, s)
            )));
        }
    }
    let threshold = 4f64.powi(t as i32) * d / params.m;
    let verts = a.to_vec();
    let mut edges = Vec::new();
    for (i, &x) in verts.iter().enumerate() {
        for (j, &y) in verts.iter().enumerate().skip(i + 1) {
            if (g.div_in(x, y, s) as f64) < threshold {
                edges.push((i, j));
            }
        }
    }
    let h = Graph::from_edges(m, &edges)?;
    let local = turan_independent_set(&h);
    let mut u = VertexSet::new(n);
    for i in local.iter() {
        u.insert(verts[i]);
    }
    let delta = m as f64 / n as f64;
    let out = DiverseSet {
        u,
        delta,
        m,
        threshold,
    };
    if !diverse_set_verifies(g, &out, s) {
        return Err(Error::Construction(
            "diverse set failed its own recheck".into(),
        ));
    }
    Ok(out)
}

/// Independent recheck of pairwise diversity and size.
pub fn diverse_set_verifies(g: &Graph, ds: &DiverseSet, s: &VertexSet) -> bool {
    let u = ds.u.to_vec();
    let size_ok = u.len() as f64 >= ds.delta * ds.m as f64 / 2.0;
    size_ok
        && u.iter().enumerate().all(|(i, &x)| {
            u[i + 1..]
                .iter()
                .all(|&y| g.div_in(x, y, s) as f64 >= ds.threshold)
        })
}

/// Groups of `S`-twins: `groups * size` vertices split into groups sharing
/// one random neighbourhood in `S` (the last `s_size` vertices, each edge
/// present with probability 1/2). Returns the graph and `S`.
pub fn twin_groups(groups: usize, size: usize, s_size: usize, seed: u64) -> (Graph, VertexSet) {
    let mut rng = rng::stream(seed, 0);
    let base = groups * size;
    let n = base + s_size;
    let mut edges = Vec::new();
    for gi in 0..groups {
        let nb: Vec<usize> = (base..n).filter(|_| rng.gen::<bool>()).collect();
        for member in gi * size..(gi + 1) * size {
            for &x in &nb {
                edges.push((member, x));
            }
        }
    }
    let g = Graph::from_edges(n, &edges).expect("twin edges are valid");
    let s = VertexSet::from_vertices(n, base..n).expect("in range");
    (g, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_thresholds_keep_twins_only() {
        // 0 and 1 are twins (both adjacent to 2 and 3), 4 sees only 2
        let g = Graph::from_edges(5, &[(0, 2), (0, 3), (1, 2), (1, 3), (4, 2)]).unwrap();
        let p = ClusterParams::full(&g, 1000.0, 2.0).unwrap();
        let w = cluster_neighbourhood(&g, 0, 0, &p);
        assert_eq!(w.to_vec(), vec![0, 1]);
    }

    #[test]
    fn complete_graph_full_cluster() {
        let n = 9;
        let g = Graph::complete(n);
        let p = ClusterParams::full(&g, (n as f64 - 1.0) / 4.0, 2.0).unwrap();
        assert_eq!(cluster_neighbourhood(&g, 0, 0, &p).len(), n);
    }

    #[test]
    fn levels_nest_on_random_graph() {
        let g = Graph::gnp(128, 0.5, 1).unwrap();
        let p = ClusterParams::full(&g, 16.0, 2.0).unwrap();
        for v in [0, 17, 99] {
            let mut prev = cluster_neighbourhood(&g, v, 0, &p);
            for t in 1..=5 {
                let cur = cluster_neighbourhood(&g, v, t, &p);
                assert!(prev.is_subset(&cur));
                prev = cur;
            }
        }
    }

    #[test]
    fn empty_graph_is_degenerate() {
        let g = Graph::empty(6);
        let p = ClusterParams::full(&g, 8.0, 2.0).unwrap();
        let view = theta_moment(&g, 2, &p);
        assert!(view.degenerate);
        assert_eq!(view.t_moment, 0);
        assert_eq!(view.w_star.len(), 6);
    }

    #[test]
    fn private_neighbourhood_gives_singleton_cluster() {
        // vertex 0 sees 10..20; every other vertex sees a disjoint block or
        // nothing, so its diversity to 0 is at least 10
        let mut edges: Vec<(usize, usize)> = (10..20).map(|x| (0, x)).collect();
        edges.extend((20..30).map(|x| (1, x)));
        let g = Graph::from_edges(30, &edges).unwrap();
        let p = ClusterParams::full(&g, 64.0, 2.0).unwrap();
        let view = theta_moment(&g, 0, &p);
        assert_eq!(view.t_moment, 0);
        assert_eq!(view.w_star.to_vec(), vec![0]);
        assert!(check_view(&g, &view, &p).all());
    }

    #[test]
    fn views_pass_checks_on_random_graph() {
        let g = Graph::gnp(256, 0.5, 2).unwrap();
        let p = ClusterParams::full(&g, 16.0, 2.0).unwrap();
        for view in all_views(&g, &p) {
            let c = check_view(&g, &view, &p);
            assert!(c.all() && c.moment_bound_s, "{c:?}");
        }
    }

    #[test]
    fn cluster_bound_examples() {
        let g = Graph::complete(5);
        let p = ClusterParams::full(&g, 64.0, 2.0).unwrap();
        let r = check_cluster_bound(&g, 0, 0, &p);
        assert!(r.applicable && r.holds);
        // threshold 4/64 < 2 = every diversity in K5, so only v itself
        assert_eq!((r.size, r.bound), (1, 8));
        let e = Graph::empty(5);
        assert!(!check_cluster_bound(&e, 0, 0, &ClusterParams::full(&e, 64.0, 2.0).unwrap()).applicable);
        let g = Graph::gnp(128, 0.5, 3).unwrap();
        let p = ClusterParams::full(&g, 256.0, 2.0).unwrap();
        for v in 0..128 {
            for t in 0..3 {
                let r = check_cluster_bound(&g, v, t, &p);
                assert!(r.applicable && r.holds);
            }
        }
    }

    #[test]
    fn disjointness_examples() {
        // 0 sees 4..8, 1 sees 8..12: diversity 8 against thresholds 4/M
        let mut edges: Vec<(usize, usize)> = (4..8).map(|x| (0, x)).collect();
        edges.extend((8..12).map(|x| (1, x)));
        let g = Graph::from_edges(12, &edges).unwrap();
        let p = ClusterParams::full(&g, 100.0, 2.0).unwrap();
        let r = check_disjointness(&g, 0, 0, 1, 0, &p);
        assert_eq!(r.route, DisjointRoute::Direct);
        assert!(r.holds && r.intersection == 0);
        // a vertex is inside its own next level
        let r = check_disjointness(&g, 0, 0, 0, 0, &p);
        assert_eq!(r.route, DisjointRoute::Inapplicable);
    }

    #[test]
    fn extraction_on_singletons_and_twins() {
        let mut edges: Vec<(usize, usize)> = (4..8).map(|x| (0, x)).collect();
        edges.extend((8..12).map(|x| (1, x)));
        edges.extend([(2, 4), (2, 8), (3, 5), (3, 9)]);
        let g = Graph::from_edges(12, &edges).unwrap();
        let p = ClusterParams::full(&g, 100.0, 2.0).unwrap();
        let a = VertexSet::from_vertices(12, [0, 1]).unwrap();
        let r = extract_diverse_set(&g, &a, 0, 2.0, &p).unwrap();
        assert_eq!(r.u, a);

        let (g, s) = twin_groups(6, 2, 200, 4);
        let p = ClusterParams::new(8.0, 2.0, s).unwrap();
        let a = VertexSet::from_vertices(g.n(), 0..12).unwrap();
        let r = extract_diverse_set(&g, &a, 0, 60.0, &p).unwrap();
        // one representative per group
        assert_eq!(r.u.len(), 6);
        assert!(diverse_set_verifies(&g, &r, &p.s));
    }

    #[test]
    fn extraction_names_offending_vertex() {
        let g = Graph::empty(4);
        let p = ClusterParams::full(&g, 8.0, 2.0).unwrap();
        let a = VertexSet::from_vertices(4, [0, 1]).unwrap();
        let e = extract_diverse_set(&g, &a, 0, 1.0, &p).unwrap_err();
        assert!(e.to_string().contains("vertex 0"), "{e}");
    }

    proptest! {
        #[test]
        fn membership_monotone(seed in 0u64..500, v in 0usize..40, t in 0u32..4) {
            let g = Graph::gnp(40, 0.4, seed).unwrap();
            let p = ClusterParams::full(&g, 16.0, 2.0).unwrap();
            let smaller_m = ClusterParams::full(&g, 8.0, 2.0).unwrap();
            let w = cluster_neighbourhood(&g, v, t, &p);
            prop_assert!(w.contains(v));
            prop_assert!(w.is_subset(&cluster_neighbourhood(&g, v, t + 1, &p)));
            prop_assert!(w.is_subset(&cluster_neighbourhood(&g, v, t, &smaller_m)));
        }

        #[test]
        fn hypotheses_imply_disjoint(seed in 0u64..200, a in 0usize..48, b in 0usize..48, t1 in 0u32..3, t2 in 0u32..3) {
            prop_assume!(a != b);
            let g = Graph::gnp(48, 0.5, seed).unwrap();
            let p = ClusterParams::full(&g, 16.0, 2.0).unwrap();
            prop_assert!(check_disjointness(&g, a, t1, b, t2, &p).holds);
        }
    }
}
