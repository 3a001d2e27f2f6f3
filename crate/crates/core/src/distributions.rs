//! Distributions on probability vectors and the `G(p)` model.
//!
//! A [`DistributionSpec`] is plain data: it can be serialized into an
//! experiment log and sampled later against the same graph. Sampling draws
//! from a [`UnitSource`], so tests can pin every coefficient with a
//! [`ForcedStream`](crate::rng::ForcedStream).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::rng::UnitSource;

pub const P_MIN: f64 = 0.1;
pub const P_MAX: f64 = 0.9;
/// Largest admissible blending amplitude.
pub const BETA_MAX: f64 = 0.4;
pub const SPEC_VERSION: u32 = 1;

/// A vector `p` in `[0.1, 0.9]^T` over a coordinate set `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    domain: VertexSet,
    // indexed by vertex; entries outside the domain are unused
    values: Vec<f64>,
}

impl ProbVector {
    pub fn constant(domain: VertexSet, value: f64) -> Result<Self> {
        check_coord(value)?;
        let mut values = vec![0.0; domain.universe()];
        for v in domain.iter() {
            values[v] = value;
        }
        Ok(ProbVector { domain, values })
    }

    /// Builds a vector from `(vertex, value)` pairs; the domain is the set of
    /// listed vertices.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut domain = VertexSet::new(n);
        let mut values = vec![0.0; n];
        for (v, x) in pairs {
            if v >= n {
                return Err(Error::arg(format!("vertex {v} out of range 0..{n}")));
            }
            check_coord(x)?;
            domain.insert(v);
            values[v] = x;
        }
        Ok(ProbVector { domain, values })
    }

    pub fn domain(&self) -> &VertexSet {
        &self.domain
    }

    pub fn get(&self, v: usize) -> Result<f64> {
        if self.domain.contains(v) {
            Ok(self.values[v])
        } else {
            Err(Error::arg(format!("vertex {v} outside the vector's domain")))
        }
    }

    /// Dense view indexed by vertex. Coordinates outside the domain read 0.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Coordinatewise average of two vectors on the same domain.
    pub fn midpoint(&self, other: &ProbVector) -> Result<ProbVector> {
        if self.domain != other.domain {
            return Err(Error::arg("midpoint of vectors on different domains"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Ok(ProbVector {
            domain: self.domain.clone(),
            values,
        })
    }
}

fn check_coord(x: f64) -> Result<()> {
    if (P_MIN..=P_MAX).contains(&x) {
        Ok(())
    } else {
        Err(Error::arg(format!("coordinate {x} outside [{P_MIN}, {P_MAX}]")))
    }
}

/// The truncation applied to blended vectors.
#[inline]
pub fn truncate(x: f64) -> f64 {
    x.clamp(P_MIN, P_MAX)
}

/// A distribution on `[0.1, 0.9]^T`.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    /// Constant `1/2` on the domain.
    Trivial { domain: VertexSet },
    /// `alpha * 1` with `alpha` uniform on `[0.1, 0.9]`.
    UniformConstant { domain: VertexSet },
    /// `1/2 + sum_i alpha_i proj_S(u_i)` truncated to `[0.1, 0.9]`, with
    /// `alpha_i` uniform on `[-beta, beta]`. The order of `u` fixes which
    /// draw goes to which vertex.
    Blended {
        u: Vec<usize>,
        s: VertexSet,
        beta: f64,
    },
    /// Independent product over pairwise disjoint domains.
    Product(Vec<DistributionSpec>),
}

impl DistributionSpec {
    pub fn trivial(domain: VertexSet) -> Self {
        DistributionSpec::Trivial { domain }
    }

    pub fn uniform_constant(domain: VertexSet) -> Self {
        DistributionSpec::UniformConstant { domain }
    }

    pub fn blended(u: Vec<usize>, s: VertexSet, beta: f64) -> Result<Self> {
        let spec = DistributionSpec::Blended { u, s, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn product(children: Vec<DistributionSpec>) -> Result<Self> {
        let spec = DistributionSpec::Product(children);
        spec.validate()?;
        Ok(spec)
    }

    /// Size of the vertex universe the spec refers to.
    pub fn universe(&self) -> usize {
        match self {
            DistributionSpec::Trivial { domain } | DistributionSpec::UniformConstant { domain } => {
                domain.universe()
            }
            DistributionSpec::Blended { s, .. } => s.universe(),
            DistributionSpec::Product(children) => {
                children.first().map_or(0, DistributionSpec::universe)
            }
        }
    }

    pub fn domain(&self) -> VertexSet {
        match self {
            DistributionSpec::Trivial { domain } | DistributionSpec::UniformConstant { domain } => {
                domain.clone()
            }
            DistributionSpec::Blended { s, .. } => s.clone(),
            DistributionSpec::Product(children) => {
                let mut d = VertexSet::new(self.universe());
                for c in children {
                    d = d.union(&c.domain());
                }
                d
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Trivial { .. } | DistributionSpec::UniformConstant { .. } => Ok(()),
            DistributionSpec::Blended { u, s, beta } => {
                if u.is_empty() {
                    return Err(Error::arg("blended distribution needs a nonempty U"));
                }
                if !(*beta > 0.0 && *beta <= BETA_MAX) {
                    return Err(Error::arg(format!("beta {beta} outside (0, {BETA_MAX}]")));
                }
                let mut seen = VertexSet::new(s.universe());
                for &x in u {
                    if x >= s.universe() {
                        return Err(Error::arg(format!("vertex {x} out of range")));
                    }
                    if !seen.insert(x) {
                        return Err(Error::arg(format!("vertex {x} repeated in U")));
                    }
                }
                Ok(())
            }
            DistributionSpec::Product(children) => {
                if children.is_empty() {
                    return Err(Error::arg("empty product"));
                }
                let n = children[0].universe();
                let mut covered = VertexSet::new(n);
                for c in children {
                    c.validate()?;
                    if c.universe() != n {
                        return Err(Error::arg("product factors over different universes"));
                    }
                    let d = c.domain();
                    if !covered.is_disjoint(&d) {
                        return Err(Error::arg("product factors have overlapping domains"));
                    }
                    covered = covered.union(&d);
                }
                Ok(())
            }
        }
    }

    /// Extends the spec to all of `V` by a trivial factor on the uncovered
    /// coordinates.
    pub fn complete_with_trivial(self) -> Self {
        let rest = self.domain().complement();
        if rest.is_empty() {
            return self;
        }
        let mut children = match self {
            DistributionSpec::Product(children) => children,
            other => vec![other],
        };
        children.push(DistributionSpec::trivial(rest));
        DistributionSpec::Product(children)
    }

    pub fn sample(&self, g: &Graph, src: &mut impl UnitSource) -> Result<ProbVector> {
        if self.universe() != g.n() {
            return Err(Error::arg(format!(
                "spec over {} vertices used with a graph on {}",
                self.universe(),
                g.n()
            )));
        }
        let mut values = vec![0.0; g.n()];
        self.fill(g, src, &mut values);
        Ok(ProbVector {
            domain: self.domain(),
            values,
        })
    }

    /// Writes one sample into `out` (indexed by vertex). The spec must be
    /// valid and `out.len() == g.n()`.
    pub fn fill(&self, g: &Graph, src: &mut impl UnitSource, out: &mut [f64]) {
        match self {
            DistributionSpec::Trivial { domain } => {
                for v in domain.iter() {
                    out[v] = 0.5;
                }
            }
            DistributionSpec::UniformConstant { domain } => {
                let a = P_MIN + (P_MAX - P_MIN) * src.next_unit();
                for v in domain.iter() {
                    out[v] = a;
                }
            }
            DistributionSpec::Blended { u, s, beta } => {
                for v in s.iter() {
                    out[v] = 0.5;
                }
                for &ui in u {
                    let a = -beta + 2.0 * beta * src.next_unit();
                    for v in g.neighbours(ui).intersection(s).iter() {
                        out[v] += a;
                    }
                }
                for v in s.iter() {
                    out[v] = truncate(out[v]);
                }
            }
            DistributionSpec::Product(children) => {
                for c in children {
                    c.fill(g, src, out);
                }
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_repr()).expect("spec serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let repr: SpecRepr = serde_json::from_value(value.clone())?;
        let spec = Self::from_repr(&repr)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    fn to_repr(&self) -> SpecRepr {
        let (variant, params, children) = match self {
            DistributionSpec::Trivial { .. } => ("trivial", Params::default(), vec![]),
            DistributionSpec::UniformConstant { .. } => {
                ("uniform_constant", Params::default(), vec![])
            }
            DistributionSpec::Blended { u, beta, .. } => (
                "blended",
                Params {
                    beta: Some(*beta),
                    u: u.clone(),
                },
                vec![],
            ),
            DistributionSpec::Product(children) => (
                "product",
                Params::default(),
                children.iter().map(DistributionSpec::to_repr).collect(),
            ),
        };
        SpecRepr {
            version: SPEC_VERSION,
            n: self.universe(),
            variant: variant.to_string(),
            domain: self.domain().to_vec(),
            params,
            children,
        }
    }

    fn from_repr(r: &SpecRepr) -> Result<Self> {
        if r.version != SPEC_VERSION {
            return Err(Error::arg(format!("unsupported spec version {}", r.version)));
        }
        let domain = VertexSet::from_vertices(r.n, r.domain.iter().copied())?;
        Ok(match r.variant.as_str() {
            "trivial" => DistributionSpec::Trivial { domain },
            "uniform_constant" => DistributionSpec::UniformConstant { domain },
            "blended" => DistributionSpec::Blended {
                u: r.params.u.clone(),
                s: domain,
                beta: r
                    .params
                    .beta
                    .ok_or_else(|| Error::arg("blended spec without beta"))?,
            },
            "product" => {
                let children = r
                    .children
                    .iter()
                    .map(Self::from_repr)
                    .collect::<Result<Vec<_>>>()?;
                let spec = DistributionSpec::Product(children);
                if spec.domain() != domain {
                    return Err(Error::arg("product domain differs from its factors"));
                }
                spec
            }
            other => return Err(Error::arg(format!("unknown variant {other:?}"))),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    version: u32,
    n: usize,
    variant: String,
    domain: Vec<usize>,
    #[serde(default)]
    params: Params,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<SpecRepr>,
}

#[derive(Default, Serialize, Deserialize)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    u: Vec<usize>,
}

/// `E[d^S_{G(p)}(u)] = u . proj_S(p)`.
pub fn expected_degree(g: &Graph, u: usize, p: &ProbVector, s: &VertexSet) -> Result<f64> {
    if u >= g.n() || p.domain.universe() != g.n() {
        return Err(Error::arg("vertex or vector does not match the graph"));
    }
    if !s.is_subset(&p.domain) {
        return Err(Error::arg("S is not inside the vector's domain"));
    }
    Ok(expected_degree_dense(g, u, &p.values, s))
}

/// Unchecked form over a dense vertex-indexed slice.
#[inline]
pub fn expected_degree_dense(g: &Graph, u: usize, p: &[f64], s: &VertexSet) -> f64 {
    let mut acc = 0.0;
    for (i, (&r, &m)) in g.row(u).iter().zip(s.words()).enumerate() {
        let mut w = r & m;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            acc += p[i * 64 + b];
        }
    }
    acc
}

/// Samples `G(p)`: each vertex is kept when its draw falls below `p_v`.
pub fn realize_subgraph(g: &Graph, p: &ProbVector, src: &mut impl UnitSource) -> Result<VertexSet> {
    if p.domain.universe() != g.n() || p.domain.len() != g.n() {
        return Err(Error::arg("G(p) needs a vector defined on every vertex"));
    }
    let mut out = VertexSet::new(g.n());
    for v in 0..g.n() {
        if src.next_unit() < p.values[v] {
            out.insert(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, ForcedStream};
    use proptest::prelude::*;

    fn full(n: usize) -> VertexSet {
        VertexSet::full(n)
    }

    #[test]
    fn trivial_is_one_half() {
        let g = Graph::gnp(30, 0.5, 1).unwrap();
        let p = DistributionSpec::trivial(full(30))
            .sample(&g, &mut stream(1, 0))
            .unwrap();
        assert!((0..30).all(|v| p.get(v).unwrap() == 0.5));
    }

    #[test]
    fn blended_with_zero_coefficients_is_constant() {
        let g = Graph::gnp(20, 0.5, 3).unwrap();
        let spec = DistributionSpec::blended(vec![0, 1, 2], full(20), 0.3).unwrap();
        // unit 0.5 maps to alpha = 0
        let p = spec.sample(&g, &mut ForcedStream::constant(0.5)).unwrap();
        assert!((0..20).all(|v| p.get(v).unwrap() == 0.5));
        assert!(DistributionSpec::blended(vec![], full(20), 0.3).is_err());
        assert!(DistributionSpec::blended(vec![0], full(20), 0.5).is_err());
        assert!(DistributionSpec::blended(vec![0], full(20), 0.0).is_err());
    }

    #[test]
    fn blended_single_neighbour_hits_upper_clip() {
        // 0 - 1, with 2 and 3 isolated
        let g = Graph::from_edges(4, &[(0, 1)]).unwrap();
        let spec = DistributionSpec::blended(vec![0], full(4), 0.4).unwrap();
        let p = spec.sample(&g, &mut ForcedStream::constant(1.0)).unwrap();
        assert_eq!(p.get(1).unwrap(), 0.9);
        for v in [0, 2, 3] {
            assert_eq!(p.get(v).unwrap(), 0.5);
        }
    }

    #[test]
    fn blended_truncation_cases() {
        // 3 is adjacent to 0, 1, 2; coefficients add up past both clips
        let g = Graph::from_edges(5, &[(0, 3), (1, 3), (2, 3), (0, 4)]).unwrap();
        let spec = DistributionSpec::blended(vec![0, 1, 2], full(5), 0.4).unwrap();
        let p = spec.sample(&g, &mut ForcedStream::constant(1.0)).unwrap();
        assert_eq!(p.get(3).unwrap(), 0.9);
        assert_eq!(p.get(4).unwrap(), 0.9);
        let p = spec.sample(&g, &mut ForcedStream::constant(0.0)).unwrap();
        assert_eq!(p.get(3).unwrap(), 0.1);
        // 0.5 - 0.4 = 0.1 lands exactly on the clip
        assert!((p.get(4).unwrap() - 0.1).abs() < 1e-12);
        // in range: alpha = 0.4 * (2u - 1) with u = 0.6 gives 0.08
        let p = spec.sample(&g, &mut ForcedStream::new(vec![0.6, 0.5, 0.5])).unwrap();
        assert!((p.get(4).unwrap() - 0.58).abs() < 1e-12);
        assert!((p.get(3).unwrap() - 0.58).abs() < 1e-12);
    }

    #[test]
    fn forced_draws_reproduce() {
        let g = Graph::gnp(40, 0.3, 9).unwrap();
        let spec = DistributionSpec::blended(vec![1, 5, 7, 11], full(40), 0.2).unwrap();
        let draws = vec![0.1, 0.9, 0.33, 0.71];
        let a = spec.sample(&g, &mut ForcedStream::new(draws.clone())).unwrap();
        let b = spec.sample(&g, &mut ForcedStream::new(draws)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coordinates_stay_in_range() {
        let g = Graph::gnp(24, 0.5, 2).unwrap();
        let half = VertexSet::from_vertices(24, 0..12).unwrap();
        let specs = [
            DistributionSpec::trivial(full(24)),
            DistributionSpec::uniform_constant(full(24)),
            DistributionSpec::blended((0..24).collect(), full(24), 0.4).unwrap(),
            DistributionSpec::product(vec![
                DistributionSpec::uniform_constant(half.clone()),
                DistributionSpec::blended(vec![0, 1, 2, 3], half.complement(), 0.4).unwrap(),
            ])
            .unwrap(),
        ];
        let mut rng = stream(5, 0);
        for spec in &specs {
            for _ in 0..2500 {
                let p = spec.sample(&g, &mut rng).unwrap();
                for v in p.domain().iter() {
                    let x = p.get(v).unwrap();
                    assert!((P_MIN..=P_MAX).contains(&x), "{x}");
                }
            }
        }
    }

    #[test]
    fn product_factors_are_uncorrelated() {
        let g = Graph::empty(4);
        let a = VertexSet::from_vertices(4, [0, 1]).unwrap();
        let b = VertexSet::from_vertices(4, [2, 3]).unwrap();
        let spec = DistributionSpec::product(vec![
            DistributionSpec::uniform_constant(a),
            DistributionSpec::uniform_constant(b),
        ])
        .unwrap();
        let mut rng = stream(11, 0);
        let n = 10_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let p = spec.sample(&g, &mut rng).unwrap();
                (p.get(0).unwrap(), p.get(3).unwrap())
            })
            .collect();
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for &(x, y) in &pairs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn product_rejects_overlap() {
        let a = VertexSet::from_vertices(4, [0, 1]).unwrap();
        let b = VertexSet::from_vertices(4, [1, 2]).unwrap();
        assert!(DistributionSpec::product(vec![
            DistributionSpec::trivial(a),
            DistributionSpec::trivial(b),
        ])
        .is_err());
    }

    #[test]
    fn expected_degree_examples() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let p = ProbVector::constant(full(4), 0.3).unwrap();
        assert_eq!(expected_degree(&g, 3, &p, &full(4)).unwrap(), 0.0);
        let half = ProbVector::constant(full(4), 0.5).unwrap();
        assert_eq!(expected_degree(&g, 1, &half, &full(4)).unwrap(), 1.0);

        let k3 = Graph::complete(3);
        let p = ProbVector::from_pairs(3, [(0, 0.1), (1, 0.2), (2, 0.3)]).unwrap();
        assert!((expected_degree(&k3, 0, &p, &full(3)).unwrap() - 0.5).abs() < 1e-12);

        let partial = ProbVector::constant(VertexSet::from_vertices(4, [0]).unwrap(), 0.5).unwrap();
        assert!(expected_degree(&g, 1, &partial, &full(4)).is_err());
    }

    #[test]
    fn realize_examples() {
        let g = Graph::empty(1000);
        let p = DistributionSpec::trivial(full(1000))
            .sample(&g, &mut stream(0, 0))
            .unwrap();
        let all = realize_subgraph(&g, &p, &mut ForcedStream::constant(0.0)).unwrap();
        assert_eq!(all.len(), 1000);
        let none = realize_subgraph(&g, &p, &mut ForcedStream::constant(0.95)).unwrap();
        assert!(none.is_empty());
        let s = realize_subgraph(&g, &p, &mut stream(4, 0)).unwrap();
        let sigma = (1000.0f64 * 0.25).sqrt();
        assert!((s.len() as f64 - 500.0).abs() <= 4.0 * sigma);

        let partial = ProbVector::constant(VertexSet::from_vertices(1000, [0]).unwrap(), 0.5).unwrap();
        assert!(realize_subgraph(&g, &partial, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn lower_clip_empty_frequency() {
        // all coordinates 0.1 on 5 vertices: P(empty) = 0.9^5
        let g = Graph::empty(5);
        let p = ProbVector::constant(full(5), 0.1).unwrap();
        let mut rng = stream(21, 0);
        let trials = 20_000;
        let empty = (0..trials)
            .filter(|_| realize_subgraph(&g, &p, &mut rng).unwrap().is_empty())
            .count() as f64
            / trials as f64;
        let expect = 0.9f64.powi(5);
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((empty - expect).abs() < 4.0 * sd, "{empty} vs {expect}");
    }

    #[test]
    fn json_round_trip() {
        let g = Graph::gnp(10, 0.5, 1).unwrap();
        let s = VertexSet::from_vertices(10, 0..6).unwrap();
        let spec = DistributionSpec::blended(vec![0, 7, 8], s, 0.05)
            .unwrap()
            .complete_with_trivial();
        assert_eq!(spec.domain(), full(10));
        let text = spec.to_json().to_string();
        let back = DistributionSpec::from_json_str(&text).unwrap();
        assert_eq!(back, spec);
        let mut a = stream(3, 0);
        let mut b = stream(3, 0);
        assert_eq!(spec.sample(&g, &mut a).unwrap(), back.sample(&g, &mut b).unwrap());
        assert!(DistributionSpec::from_json_str(r#"{"version":2,"n":3,"variant":"trivial","domain":[]}"#).is_err());
    }

    proptest! {
        #[test]
        fn expected_degree_is_linear(seed in 0u64..1000, u in 0usize..16) {
            let g = Graph::gnp(16, 0.5, seed).unwrap();
            let spec = DistributionSpec::uniform_constant(full(16));
            let mut rng = stream(seed, 1);
            let p1 = spec.sample(&g, &mut rng).unwrap();
            let p2 = DistributionSpec::blended(vec![0, 1, 2], full(16), 0.4).unwrap().sample(&g, &mut rng).unwrap();
            let mid = p1.midpoint(&p2).unwrap();
            let s = full(16);
            let lhs = expected_degree(&g, u, &mid, &s).unwrap();
            let rhs = 0.5 * (expected_degree(&g, u, &p1, &s).unwrap() + expected_degree(&g, u, &p2, &s).unwrap());
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
