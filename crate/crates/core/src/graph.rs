//! Simple undirected graphs on dense vertex ids `0..n` with bit-set rows.
//!
//! Rows are [`FixedBitSet`]s so that common neighbourhoods, clique counts and
//! candidate sets reduce to word-parallel intersections.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A set of vertices of some graph, one bit per vertex id.
pub type VertexSet = FixedBitSet;

/// Builds a [`VertexSet`] of capacity `n` from ids.
pub fn vertex_set(n: usize, members: impl IntoIterator<Item = usize>) -> VertexSet {
    let mut s = FixedBitSet::with_capacity(n);
    for v in members {
        s.insert(v);
    }
    s
}

/// The full vertex set `0..n`.
pub fn full_set(n: usize) -> VertexSet {
    let mut s = FixedBitSet::with_capacity(n);
    s.insert_range(..);
    s
}

/// Immutable simple undirected graph.
///
/// Serialises as `{"n": .., "edges": [[u, v], ..]}`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "EdgeListRepr", try_from = "EdgeListRepr")]
pub struct Graph {
    rows: Vec<FixedBitSet>,
    edges: usize,
}

#[derive(Serialize, Deserialize)]
struct EdgeListRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl From<Graph> for EdgeListRepr {
    fn from(g: Graph) -> Self {
        EdgeListRepr { n: g.n(), edges: g.edges().collect() }
    }
}

impl TryFrom<EdgeListRepr> for Graph {
    type Error = Error;
    fn try_from(r: EdgeListRepr) -> Result<Self> {
        Graph::from_edges(r.n, r.edges)
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n(), self.edge_count())
    }
}

/// Mutable staging area for a [`Graph`].
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    rows: Vec<FixedBitSet>,
    edges: usize,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder { rows: (0..n).map(|_| FixedBitSet::with_capacity(n)).collect(), edges: 0 }
    }

    pub fn from_graph(g: &Graph) -> Self {
        GraphBuilder { rows: g.rows.clone(), edges: g.edges }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Adds `{u, v}`; returns `false` if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        let n = self.n();
        for w in [u, v] {
            if w >= n {
                return Err(Error::VertexOutOfRange { vertex: w, n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if self.rows[u].contains(v) {
            return Ok(false);
        }
        self.rows[u].insert(v);
        self.rows[v].insert(u);
        self.edges += 1;
        Ok(true)
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if u >= self.n() || v >= self.n() || !self.rows[u].contains(v) {
            return false;
        }
        self.rows[u].set(v, false);
        self.rows[v].set(u, false);
        self.edges -= 1;
        true
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].count_ones(..)
    }

    pub fn neighbours(&self, v: usize) -> &VertexSet {
        &self.rows[v]
    }

    pub fn build(self) -> Graph {
        Graph { rows: self.rows, edges: self.edges }
    }
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        GraphBuilder::new(n).build()
    }

    pub fn complete(n: usize) -> Self {
        let mut b = GraphBuilder::new(n);
        for u in 0..n {
            for v in u + 1..n {
                b.add_edge(u, v).expect("in range");
            }
        }
        b.build()
    }

    /// Builds a graph from an edge list. Duplicate edges collapse; self-loops
    /// and out-of-range ids are errors.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut b = GraphBuilder::new(n);
        for (u, v) in edges {
            b.add_edge(u, v)?;
        }
        Ok(b.build())
    }

    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    /// The `power`-th power of the cycle `C_n`.
    pub fn cycle_power(n: usize, power: usize) -> Self {
        assert!(n > 2 * power, "cycle power needs n > 2*power");
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            for d in 1..=power {
                b.add_edge(i, (i + d) % n).expect("valid");
            }
        }
        b.build()
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        Self::from_edges(a + b, (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v)))).expect("valid")
    }

    pub fn petersen() -> Self {
        let mut e = Vec::new();
        for i in 0..5 {
            e.push((i, (i + 1) % 5));
            e.push((i, i + 5));
            e.push((5 + i, 5 + (i + 2) % 5));
        }
        Self::from_edges(10, e).expect("valid")
    }

    /// Vertex-disjoint union, second graph's ids shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let off = self.n();
        let mut b = GraphBuilder::new(off + other.n());
        for (u, v) in self.edges().chain(other.edges().map(|(u, v)| (u + off, v + off))) {
            b.add_edge(u, v).expect("valid");
        }
        b.build()
    }

    /// `copies` disjoint copies of `self`; copy `t` occupies ids
    /// `t*n .. (t+1)*n`.
    pub fn copies(&self, copies: usize) -> Graph {
        let n = self.n();
        let mut b = GraphBuilder::new(n * copies);
        for t in 0..copies {
            for (u, v) in self.edges() {
                b.add_edge(t * n + u, t * n + v).expect("valid");
            }
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].count_ones(..)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn neighbours(&self, v: usize) -> &VertexSet {
        &self.rows[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.rows[u].contains(v)
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(u, row)| row.ones().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Minimum degree; `0` for the empty graph.
    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Number of neighbours of `v` inside `set`.
    pub fn degree_into(&self, v: usize, set: &VertexSet) -> usize {
        self.rows[v].intersection_count(set)
    }

    /// `e(X, Y)` counted over ordered pairs `x ∈ X, y ∈ Y`.
    pub fn edges_between(&self, x: &VertexSet, y: &VertexSet) -> usize {
        x.ones().map(|u| self.rows[u].intersection_count(y)).sum()
    }

    /// Number of edges with both ends in `set`.
    pub fn edges_within(&self, set: &VertexSet) -> usize {
        self.edges_between(set, set) / 2
    }

    /// `⋂_{w ∈ W} N(w)`; the full vertex set when `W` is empty.
    pub fn common_neighbourhood(&self, w: impl IntoIterator<Item = usize>) -> VertexSet {
        let mut acc = full_set(self.n());
        for v in w {
            acc.intersect_with(&self.rows[v]);
        }
        acc
    }

    /// Whether every edge of `self` is an edge of `other` (same vertex count).
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n() == other.n() && self.rows.iter().zip(&other.rows).all(|(a, b)| a.is_subset(b))
    }

    /// Induced subgraph on `vertices` (in the given order); vertex `i` of the
    /// result is `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut b = GraphBuilder::new(vertices.len());
        for (i, &u) in vertices.iter().enumerate() {
            for (j, &v) in vertices.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    b.add_edge(i, j).expect("valid");
                }
            }
        }
        b.build()
    }

    /// BFS distances from `src`; `None` for unreachable vertices.
    pub fn distances_from(&self, src: usize) -> Vec<Option<usize>> {
        self.distances_from_set(std::iter::once(src))
    }

    /// Multi-source BFS distances.
    pub fn distances_from_set(&self, sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices have distances");
            for w in self.rows[u].ones() {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for w in self.rows[u].ones() {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Two-colouring `(side_a, side_b)` if the graph is bipartite.
    pub fn bipartition(&self) -> Option<Vec<bool>> {
        let mut side: Vec<Option<bool>> = vec![None; self.n()];
        for s in 0..self.n() {
            if side[s].is_some() {
                continue;
            }
            side[s] = Some(false);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let su = side[u].expect("coloured");
                for w in self.rows[u].ones() {
                    match side[w] {
                        None => {
                            side[w] = Some(!su);
                            queue.push_back(w);
                        }
                        Some(sw) if sw == su => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(side.into_iter().map(|s| s.unwrap_or(false)).collect())
    }
}

/// Parameters of the binomial random graph `G(n, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnpParams {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl GnpParams {
    pub fn new(n: usize, p: f64, seed: u64) -> Result<Self> {
        let params = GnpParams { n, p, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!("p = {} not in [0,1]", self.p)));
        }
        Ok(())
    }
}

/// Samples `G(n, p)`.
///
/// Pairs `(u, v)`, `u < v`, are visited in lexicographic order; each consumes
/// one `u64` from the seeded stream and is kept iff the draw is below
/// `⌊p·2^64⌋` (every pair is kept when `p = 1`).
pub fn generate_gnp(params: GnpParams) -> Graph {
    let GnpParams { n, p, seed } = params;
    let mut b = GraphBuilder::new(n);
    if p <= 0.0 || n <= 1 {
        return b.build();
    }
    let mut rng = rng::stream(seed);
    let threshold = if p >= 1.0 { None } else { Some((p * 18_446_744_073_709_551_616.0) as u64) };
    for u in 0..n {
        for v in u + 1..n {
            let draw = rng.next_u64();
            if threshold.is_none_or(|t| draw < t) {
                b.add_edge(u, v).expect("valid");
            }
        }
    }
    b.build()
}

/// Number of `s`-cliques inside `G[N(v)]`.
///
/// Exact backtracking over bit-set candidate sets, for `1 ≤ s ≤ 8`. Use
/// [`estimate_cliques_in_neighbourhood`] for larger `s`.
pub fn count_cliques_in_neighbourhood(g: &Graph, v: usize, s: usize) -> Result<u64> {
    if s < 1 {
        return Err(Error::InvalidParameter("clique size must be at least 1".into()));
    }
    if s > 8 {
        return Err(Error::InvalidParameter(format!("exact clique counting supports s ≤ 8, got {s}; use the estimator")));
    }
    check_vertex(g, v)?;
    Ok(count_cliques_in(g, g.neighbours(v), s))
}

/// Number of `s`-cliques of `G[set]`.
pub fn count_cliques_in(g: &Graph, set: &VertexSet, s: usize) -> u64 {
    fn rec(g: &Graph, cand: &VertexSet, s: usize) -> u64 {
        if s == 1 {
            return cand.count_ones(..) as u64;
        }
        let mut total = 0;
        let mut next = cand.clone();
        for u in cand.ones() {
            next.clone_from(cand);
            next.intersect_with(g.neighbours(u));
            // only extend with larger ids so each clique is counted once
            next.remove_range(..u + 1);
            if next.count_ones(..) + 1 >= s {
                total += rec(g, &next, s - 1);
            }
        }
        total
    }
    if s == 0 {
        return 1;
    }
    rec(g, set, s)
}

/// Whether `G[set]` contains an `s`-clique; stops at the first one.
pub fn has_clique_in(g: &Graph, set: &VertexSet, s: usize) -> bool {
    fn rec(g: &Graph, cand: &VertexSet, s: usize) -> bool {
        if s == 0 {
            return true;
        }
        if cand.count_ones(..) < s {
            return false;
        }
        let mut next = cand.clone();
        cand.ones().any(|u| {
            next.clone_from(cand);
            next.intersect_with(g.neighbours(u));
            next.remove_range(..u + 1);
            rec(g, &next, s - 1)
        })
    }
    rec(g, set, s)
}

/// Monte-Carlo estimate `(estimate, standard error)` of the number of
/// `s`-cliques in `G[N(v)]`: uniform `s`-subsets are sampled and the hit rate
/// is scaled by `C(deg v, s)`.
pub fn estimate_cliques_in_neighbourhood(g: &Graph, v: usize, s: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    use rand::seq::SliceRandom;
    if s < 1 || samples == 0 {
        return Err(Error::InvalidParameter("need s ≥ 1 and samples ≥ 1".into()));
    }
    check_vertex(g, v)?;
    let nbrs: Vec<usize> = g.neighbours(v).ones().collect();
    if nbrs.len() < s {
        return Ok((0.0, 0.0));
    }
    let mut rng = rng::stream(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let pick: Vec<usize> = nbrs.choose_multiple(&mut rng, s).copied().collect();
        let clique = pick.iter().enumerate().all(|(i, &a)| pick[i + 1..].iter().all(|&b| g.has_edge(a, b)));
        hits += clique as usize;
    }
    let total = binomial(nbrs.len(), s);
    let rate = hits as f64 / samples as f64;
    let se = (rate * (1.0 - rate) / samples as f64).sqrt();
    Ok((rate * total, se * total))
}

/// `C(n, k)` as a float (exact for the small values used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn check_vertex(g: &Graph, v: usize) -> Result<()> {
    if v >= g.n() {
        return Err(Error::VertexOutOfRange { vertex: v, n: g.n() });
    }
    Ok(())
}

pub(crate) fn check_set(g: &Graph, set: &[usize]) -> Result<()> {
    set.iter().try_for_each(|&v| check_vertex(g, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_extremes() {
        let k4 = generate_gnp(GnpParams::new(4, 1.0, 3).unwrap());
        assert_eq!(k4.edge_count(), 6);
        let empty = generate_gnp(GnpParams::new(100, 0.0, 3).unwrap());
        assert_eq!(empty.edge_count(), 0);
        assert!(GnpParams::new(5, 1.5, 0).is_err());
    }

    #[test]
    fn gnp_is_pure_in_seed() {
        let a = generate_gnp(GnpParams { n: 80, p: 0.3, seed: 11 });
        let b = generate_gnp(GnpParams { n: 80, p: 0.3, seed: 11 });
        let c = generate_gnp(GnpParams { n: 80, p: 0.3, seed: 12 });
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gnp_edge_count_concentrates() {
        let g = generate_gnp(GnpParams { n: 1000, p: 0.1, seed: 7 });
        let mean = 0.1 * 499_500.0;
        let sd = (499_500.0 * 0.1 * 0.9f64).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() <= 3.0 * sd);
    }

    #[test]
    fn min_degree_cases() {
        assert_eq!(Graph::complete(4).min_degree(), 3);
        assert_eq!(Graph::empty(5).min_degree(), 0);
        assert_eq!(Graph::empty(0).min_degree(), 0);
    }

    #[test]
    fn clique_counts() {
        let k5 = Graph::complete(5);
        assert_eq!(count_cliques_in_neighbourhood(&k5, 0, 3).unwrap(), 4);
        assert_eq!(count_cliques_in_neighbourhood(&k5, 2, 1).unwrap(), 4);
        assert!(count_cliques_in_neighbourhood(&k5, 0, 0).is_err());
        assert!(count_cliques_in_neighbourhood(&k5, 0, 9).is_err());
        let g = generate_gnp(GnpParams { n: 40, p: 0.5, seed: 1 });
        for v in 0..g.n() {
            assert_eq!(count_cliques_in_neighbourhood(&g, v, 1).unwrap() as usize, g.degree(v));
        }
        for s in 1..=5 {
            for v in 0..10 {
                let set = g.neighbours(v);
                assert_eq!(has_clique_in(&g, set, s), count_cliques_in(&g, set, s) > 0);
            }
        }
    }

    #[test]
    fn common_neighbourhoods() {
        let k4 = Graph::complete(4);
        let c = k4.common_neighbourhood([0, 1]);
        assert_eq!(c.ones().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(Graph::empty(5).common_neighbourhood([1, 2]).count_ones(..), 0);
        assert_eq!(k4.common_neighbourhood([]).count_ones(..), 4);
        let g = generate_gnp(GnpParams { n: 50, p: 0.4, seed: 2 });
        for v in 0..50 {
            assert_eq!(&g.common_neighbourhood([v]), g.neighbours(v));
        }
    }

    #[test]
    fn common_neighbourhood_concentrates() {
        let (n, p) = (200usize, 0.3f64);
        let g = generate_gnp(GnpParams { n, p, seed: 5 });
        let expect = n as f64 * p * p;
        let sizes: Vec<usize> = (0..20).map(|i| g.common_neighbourhood([2 * i, 2 * i + 1]).count_ones(..)).collect();
        for s in sizes {
            assert!((s as f64 - expect).abs() <= 4.0 * expect.sqrt(), "{s} vs {expect}");
        }
    }

    #[test]
    fn estimator_tracks_exact_count() {
        let g = generate_gnp(GnpParams { n: 60, p: 0.6, seed: 4 });
        let exact = count_cliques_in_neighbourhood(&g, 0, 3).unwrap() as f64;
        let (est, se) = estimate_cliques_in_neighbourhood(&g, 0, 3, 20_000, 9).unwrap();
        assert!((est - exact).abs() <= 5.0 * se.max(1.0), "{est} ± {se} vs {exact}");
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::from_edges(3, [(1, 1)]), Err(Error::SelfLoop(1)));
        assert!(matches!(Graph::from_edges(3, [(0, 3)]), Err(Error::VertexOutOfRange { .. })));
        assert_eq!(Graph::from_edges(3, [(0, 1), (1, 0)]).unwrap().edge_count(), 1);
    }

    #[test]
    fn bipartite_detection() {
        assert!(Graph::cycle(6).bipartition().is_some());
        assert!(Graph::cycle(5).bipartition().is_none());
    }
}
