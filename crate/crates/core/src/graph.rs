//! Bitset graphs.
//!
//! A [`Graph`] stores one adjacency row per vertex as a run of `u64` words,
//! row width rounded up to whole words. All set algebra on vertices goes
//! through [`VertexSet`], which uses the same word layout so masks can be
//! applied to rows without conversion.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub(crate) fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

#[inline]
pub(crate) fn popcount_xor_and(a: &[u64], b: &[u64], mask: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .zip(mask)
        .map(|((x, y), m)| ((x ^ y) & m).count_ones() as usize)
        .sum()
}

/// Iterator over the set bits of a word slice, ascending.
pub struct Ones<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl<'a> Ones<'a> {
    pub(crate) fn new(words: &'a [u64]) -> Self {
        Ones {
            words,
            idx: 0,
            cur: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let b = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * 64 + b);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

/// A subset of `0..n` with cached cardinality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    n: usize,
    words: Vec<u64>,
    len: usize,
}

impl VertexSet {
    pub fn new(n: usize) -> Self {
        VertexSet {
            n,
            words: vec![0; words_for(n)],
            len: 0,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut words = vec![u64::MAX; words_for(n)];
        if n % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        VertexSet { n, words, len: n }
    }

    pub fn from_vertices(n: usize, vertices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = VertexSet::new(n);
        for v in vertices {
            if v >= n {
                return Err(Error::arg(format!("vertex {v} out of range 0..{n}")));
            }
            s.insert(v);
        }
        Ok(s)
    }

    pub(crate) fn from_words(n: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(n));
        let len = words.iter().map(|w| w.count_ones() as usize).sum();
        VertexSet { n, words, len }
    }

    /// Size of the universe `0..n` this set lives in.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.n && self.words[v >> 6] >> (v & 63) & 1 == 1
    }

    /// Inserts `v`; returns whether it was absent. Panics if `v >= n`.
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.n, "vertex {v} out of range 0..{}", self.n);
        let w = &mut self.words[v >> 6];
        let bit = 1u64 << (v & 63);
        let fresh = *w & bit == 0;
        *w |= bit;
        self.len += fresh as usize;
        fresh
    }

    pub fn remove(&mut self, v: usize) -> bool {
        if v >= self.n {
            return false;
        }
        let w = &mut self.words[v >> 6];
        let bit = 1u64 << (v & 63);
        let present = *w & bit != 0;
        *w &= !bit;
        self.len -= present as usize;
        present
    }

    pub fn iter(&self) -> Ones<'_> {
        Ones::new(&self.words)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn zip_with(&self, other: &VertexSet, f: impl Fn(u64, u64) -> u64) -> VertexSet {
        assert_eq!(self.n, other.n, "vertex sets over different universes");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| f(a, b))
            .collect();
        VertexSet::from_words(self.n, words)
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> VertexSet {
        VertexSet::full(self.n).difference(self)
    }

    pub fn intersection_len(&self, other: &VertexSet) -> usize {
        popcount_and(&self.words, &other.words)
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.n == other.n
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.intersection_len(other) == 0
    }
}

impl std::fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for VertexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// The neighbourhood of a vertex as a 0/1 vector over `V(G)`.
#[derive(Clone, Debug)]
pub struct NeighbourhoodVector {
    pub vertex: usize,
    bits: VertexSet,
}

impl NeighbourhoodVector {
    pub fn get(&self, v: usize) -> bool {
        self.bits.contains(v)
    }

    pub fn as_set(&self) -> &VertexSet {
        &self.bits
    }

    /// Projection onto the coordinate set `s`: coordinates outside `s` are zeroed.
    pub fn project(&self, s: &VertexSet) -> VertexSet {
        self.bits.intersection(s)
    }
}

/// An induced subgraph together with the map from its labels back to the host.
#[derive(Clone, Debug)]
pub struct Induced {
    pub graph: Graph,
    /// `map[i]` is the host vertex carrying local label `i`.
    pub map: Vec<usize>,
}

impl Induced {
    pub fn lift(&self, local: &VertexSet, host_n: usize) -> VertexSet {
        let mut out = VertexSet::new(host_n);
        for v in local.iter() {
            out.insert(self.map[v]);
        }
        out
    }
}

/// Immutable simple undirected graph on `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    stride: usize,
    adj: Vec<u64>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.edge_count())
    }
}

/// Builder that only ever holds a symmetric loop-free adjacency.
struct Builder {
    n: usize,
    stride: usize,
    adj: Vec<u64>,
}

impl Builder {
    fn new(n: usize) -> Self {
        let stride = words_for(n);
        Builder {
            n,
            stride,
            adj: vec![0; n * stride],
        }
    }

    #[inline]
    fn has(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.stride + (v >> 6)] >> (v & 63) & 1 == 1
    }

    #[inline]
    fn add(&mut self, u: usize, v: usize) {
        debug_assert!(u != v);
        self.adj[u * self.stride + (v >> 6)] |= 1 << (v & 63);
        self.adj[v * self.stride + (u >> 6)] |= 1 << (u & 63);
    }

    fn build(self) -> Graph {
        Graph {
            n: self.n,
            stride: self.stride,
            adj: self.adj,
        }
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Builder::new(n).build()
    }

    pub fn complete(n: usize) -> Self {
        Graph::empty(n).complement()
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let mut b = Builder::new(n);
        for v in 1..n {
            b.add(v - 1, v);
        }
        b.build()
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least three vertices");
        let mut b = Builder::new(n);
        for v in 0..n {
            b.add(v, (v + 1) % n);
        }
        b.build()
    }

    /// Star `K_{1,leaves}` with centre 0.
    pub fn star(leaves: usize) -> Self {
        let mut b = Builder::new(leaves + 1);
        for v in 1..=leaves {
            b.add(0, v);
        }
        b.build()
    }

    /// Disjoint union of cliques of the given sizes, labelled consecutively.
    pub fn disjoint_cliques(sizes: &[usize]) -> Self {
        let n = sizes.iter().sum();
        let mut b = Builder::new(n);
        let mut start = 0;
        for &s in sizes {
            for u in start..start + s {
                for v in u + 1..start + s {
                    b.add(u, v);
                }
            }
            start += s;
        }
        b.build()
    }

    /// Builds a graph from an edge list, rejecting loops, duplicates and
    /// out-of-range labels.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut b = Builder::new(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::arg(format!("edge ({u}, {v}) out of range 0..{n}")));
            }
            if u == v {
                return Err(Error::arg(format!("loop at vertex {u}")));
            }
            if b.has(u, v) {
                return Err(Error::arg(format!("duplicate edge ({u}, {v})")));
            }
            b.add(u, v);
        }
        Ok(b.build())
    }

    /// Erdős–Rényi `G(n, p)`.
    ///
    /// Pairs `(u, v)` with `u < v` are visited in lexicographic order and the
    /// edge is kept when the next `f64` of substream 0 of `seed` is `< p`.
    pub fn gnp(n: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        if n == 0 {
            return Err(Error::arg("G(n, p) needs n >= 1"));
        }
        let mut rng = rng::stream(seed, 0);
        let mut b = Builder::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < p {
                    b.add(u, v);
                }
            }
        }
        Ok(b.build())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    /// Adjacency row of `u` as words.
    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.stride..(u + 1) * self.stride]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.row(u)[v >> 6] >> (v & 63) & 1 == 1
    }

    pub fn neighbourhood(&self, u: usize) -> NeighbourhoodVector {
        NeighbourhoodVector {
            vertex: u,
            bits: self.neighbours(u),
        }
    }

    pub fn neighbours(&self, u: usize) -> VertexSet {
        VertexSet::from_words(self.n, self.row(u).to_vec())
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `d^S(u) = |N(u) ∩ S|`.
    #[inline]
    pub fn degree_in(&self, u: usize, s: &VertexSet) -> usize {
        popcount_and(self.row(u), s.words())
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.degree(u)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).min().unwrap_or(0)
    }

    pub fn average_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.n as f64
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            Ones::new(self.row(u))
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// `|N^S(u) △ N^S(v)|`. Rejects `u == v`.
    pub fn diversity(&self, u: usize, v: usize, s: &VertexSet) -> Result<usize> {
        if u == v {
            return Err(Error::arg("diversity of a vertex with itself"));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::arg(format!("vertex out of range 0..{}", self.n)));
        }
        if s.universe() != self.n {
            return Err(Error::arg("coordinate set over a different vertex set"));
        }
        Ok(self.div_in(u, v, s))
    }

    /// Unchecked S-diversity; `div(u, u) = 0`.
    #[inline]
    pub fn div_in(&self, u: usize, v: usize, s: &VertexSet) -> usize {
        popcount_xor_and(self.row(u), self.row(v), s.words())
    }

    /// Unchecked diversity over all of `V(G)`.
    #[inline]
    pub fn div(&self, u: usize, v: usize) -> usize {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn complement(&self) -> Graph {
        let full = VertexSet::full(self.n);
        let mut adj = Vec::with_capacity(self.adj.len());
        for u in 0..self.n {
            for (i, (&w, &f)) in self.row(u).iter().zip(full.words()).enumerate() {
                let mut x = !w & f;
                if i == u >> 6 {
                    x &= !(1u64 << (u & 63));
                }
                adj.push(x);
            }
        }
        Graph {
            n: self.n,
            stride: self.stride,
            adj,
        }
    }

    /// Subgraph induced on `s`, relabelled `0..|s|` in increasing order of `s`.
    pub fn induced(&self, s: &VertexSet) -> Result<Induced> {
        if s.is_empty() {
            return Err(Error::arg("induced subgraph on an empty vertex set"));
        }
        if s.universe() != self.n {
            return Err(Error::arg("vertex set over a different universe"));
        }
        let map = s.to_vec();
        let m = map.len();
        let mut b = Builder::new(m);
        for (i, &u) in map.iter().enumerate() {
            for (j, &v) in map.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    b.add(i, j);
                }
            }
        }
        Ok(Induced {
            graph: b.build(),
            map,
        })
    }

    /// Degree of `v` inside `G[host]`.
    #[inline]
    pub fn induced_degree(&self, v: usize, host: &VertexSet) -> usize {
        self.degree_in(v, host)
    }

    pub fn is_clique(&self, s: &VertexSet) -> bool {
        s.iter().all(|u| self.degree_in(u, s) + 1 == s.len())
    }

    pub fn is_independent(&self, s: &VertexSet) -> bool {
        s.iter().all(|u| self.degree_in(u, s) == 0)
    }

    /// Text form: `"n m"` then one `"u v"` line per edge with `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let nums = parse_pair(header, hl + 1)?;
        let (n, m) = nums;
        let mut b = Builder::new(n);
        let mut count = 0usize;
        for (i, line) in lines {
            let (u, v) = parse_pair(line, i + 1)?;
            let fail = |msg: String| Error::Parse { line: i + 1, msg };
            if u >= n || v >= n {
                return Err(fail(format!("label out of range 0..{n}")));
            }
            if u == v {
                return Err(fail(format!("loop at vertex {u}")));
            }
            if u > v {
                return Err(fail(format!("edge ({u}, {v}) must be written with u < v")));
            }
            if b.has(u, v) {
                return Err(fail(format!("duplicate edge ({u}, {v})")));
            }
            b.add(u, v);
            count += 1;
        }
        if count != m {
            return Err(Error::Parse {
                line: hl + 1,
                msg: format!("header declares {m} edges, found {count}"),
            });
        }
        Ok(b.build())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Graph> {
        Graph::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        let tok = it.next().ok_or(Error::Parse {
            line: lineno,
            msg: "expected two integers".into(),
        })?;
        tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("not a vertex label: {tok:?}"),
        })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: lineno,
            msg: "trailing tokens".into(),
        });
    }
    Ok((a, b))
}
