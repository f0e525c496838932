//! The bipartite-neighbourhood counterexample family and the
//! neighbourhood-clearing adversary.
//!
//! Vertex ids of `F`: `1, 2, 3, 4` are 0..=3, `a..f` are 4..=9 and `r` is
//! 10. `F_k` appends the vertices `5, …, k` as 11, 12, ….

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colouring::{chromatic_number, for_each_colouring};
use crate::embed::{find_rooted_copy_with, quotient_domains, RootedSearch};
use crate::error::{Error, Result};
use crate::graph::{count_cliques_in, generate_gnp, vertex_set, GnpParams, Graph, GraphBuilder, VertexSet};
use crate::rng;

pub const F_ROOT: usize = 10;
/// The cycle `a, b, c, d, e, f` in order.
pub const F_CYCLE: [usize; 6] = [4, 5, 6, 7, 8, 9];
/// Proper 4-colourings of `F`, fixed by exhaustive enumeration.
pub const F_COLOURING_COUNT: usize = 24;
/// Resampling attempts for the typicality checks.
pub const RETRY_CAP: usize = 20;

/// The 11-vertex graph `F`.
pub fn build_f() -> Graph {
    build_f_k(4).expect("k = 4 is valid")
}

/// `F` with extra vertices `5, …, k` joined to everything except `r`.
pub fn build_f_k(k: usize) -> Result<Graph> {
    if k < 4 {
        return Err(Error::InvalidParameter("F_k needs k ≥ 4".into()));
    }
    let [a, b, c, d, e, f] = F_CYCLE;
    let mut edges = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            edges.push((i, j));
        }
    }
    for w in 0..6 {
        edges.push((F_CYCLE[w], F_CYCLE[(w + 1) % 6]));
    }
    edges.extend(F_CYCLE.iter().map(|&v| (3, v)));
    edges.extend([b, c, e, f].map(|v| (0, v)));
    edges.extend([a, c, d, f].map(|v| (1, v)));
    edges.extend([a, b, d, e].map(|v| (2, v)));
    edges.extend(F_CYCLE.iter().map(|&v| (F_ROOT, v)));
    let n = 11 + (k - 4);
    for extra in 11..n {
        for v in 0..extra {
            if v != F_ROOT {
                edges.push((v, extra));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Outcome of the exhaustive self-test of `F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FReport {
    pub chromatic_number: usize,
    pub proper_4_colourings: usize,
    pub forced_classes: bool,
    pub k4_cover: bool,
    pub root_neighbourhood_is_c6: bool,
}

/// Enumerates every proper 4-colouring of `F` and checks its four stated
/// properties; the first failing one is returned as `AssertionFailed`.
pub fn analyze_f() -> Result<FReport> {
    let f = build_f();
    let chi = chromatic_number(&f).ok_or_else(|| Error::AssertionFailed("F too large for exact colouring".into()))?;
    if chi != 4 {
        return Err(Error::AssertionFailed(format!("χ(F) = {chi}, expected 4")));
    }
    let classes = [[0, 4, 7], [1, 5, 8], [2, 6, 9]];
    let mut count = 0;
    let mut forced = true;
    for_each_colouring(&f, 4, |c| {
        count += 1;
        forced &= classes.iter().all(|cl| cl.iter().all(|&v| c[v] == c[cl[0]]));
    });
    if !forced {
        return Err(Error::AssertionFailed("a 4-colouring splits {1,a,d}, {2,b,e} or {3,c,f}".into()));
    }
    let k4_cover = (0..f.n()).filter(|&v| v != F_ROOT).all(|v| count_cliques_in(&f, f.neighbours(v), 3) > 0);
    if !k4_cover {
        return Err(Error::AssertionFailed("some vertex other than r is in no K_4".into()));
    }
    if count_cliques_in(&f, f.neighbours(F_ROOT), 3) > 0 {
        return Err(Error::AssertionFailed("r lies in a K_4".into()));
    }
    let nr: Vec<usize> = f.neighbours(F_ROOT).ones().collect();
    let sub = f.induced(&nr);
    let c6 = nr.len() == 6 && sub.edge_count() == 6 && sub.degrees().iter().all(|&d| d == 2) && sub.components().len() == 1;
    if !c6 || sub.bipartition().is_none() {
        return Err(Error::AssertionFailed("N(r) is not a 6-cycle".into()));
    }
    Ok(FReport {
        chromatic_number: chi,
        proper_4_colourings: count,
        forced_classes: forced,
        k4_cover,
        root_neighbourhood_is_c6: c6,
    })
}

/// Which permission rule admits an edge of the adversarial graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeRule {
    XY,
    Y1Y2,
    YZ,
    ZZ,
}

/// Position of a vertex in the instance layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    X,
    Y(usize),
    Z(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdversaryInstance {
    pub n: usize,
    pub p: f64,
    pub eps: f64,
    /// The seed the instance was requested with.
    pub seed: u64,
    /// Resampling attempts used (1 on first success).
    pub attempts: usize,
    /// Chromatic parameter; `Z` has `k + 1` parts.
    pub k: usize,
    pub gamma: Graph,
    pub g: Graph,
    pub x: Vec<usize>,
    pub y1: Vec<usize>,
    pub y2: Vec<usize>,
    pub z: Vec<Vec<usize>>,
}

impl AdversaryInstance {
    pub fn sides(&self) -> Vec<Side> {
        let mut out = vec![Side::X; self.n];
        for &v in &self.y1 {
            out[v] = Side::Y(1);
        }
        for &v in &self.y2 {
            out[v] = Side::Y(2);
        }
        for (i, part) in self.z.iter().enumerate() {
            for &v in part {
                out[v] = Side::Z(i + 1);
            }
        }
        out
    }

    /// `X, Y1, Y2, Z1, …` as a list of parts.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut out = vec![self.x.clone(), self.y1.clone(), self.y2.clone()];
        out.extend(self.z.iter().cloned());
        out
    }

    /// The pattern this instance is built against.
    pub fn pattern(&self) -> Graph {
        build_f_k(self.k).expect("instance k ≥ 4")
    }
}

/// The rule admitting `uv`, if any.
pub fn permitted(su: Side, sv: Side) -> Option<EdgeRule> {
    use Side::*;
    match (su, sv) {
        (X, Y(_)) | (Y(_), X) => Some(EdgeRule::XY),
        (Y(a), Y(b)) if a != b => Some(EdgeRule::Y1Y2),
        (Y(a), Z(b)) | (Z(b), Y(a)) if a != b => Some(EdgeRule::YZ),
        (Z(a), Z(b)) if a != b => Some(EdgeRule::ZZ),
        _ => None,
    }
}

/// Counterexample instance for `F` (`Z` in five parts).
pub fn build_adversarial_instance(n: usize, p: f64, eps: f64, seed: u64) -> Result<AdversaryInstance> {
    build_adversarial_instance_k(n, p, eps, 4, seed)
}

/// Counterexample instance for `F_k` (`Z` in `k + 1` parts).
///
/// `X` is a uniform set of `⌈ε/p⌉` vertices, `Γ = G(n, p)`, `Y = N_Γ(X) ∖ X`
/// and `Z` the rest, both split uniformly at random. Samples whose `X` has a
/// vertex with more than `ln n` neighbours in `X`, or whose `|Y|` exceeds
/// `2εn`, are redrawn.
pub fn build_adversarial_instance_k(n: usize, p: f64, eps: f64, k: usize, seed: u64) -> Result<AdversaryInstance> {
    GnpParams::new(n, p, seed)?;
    if k < 4 {
        return Err(Error::InvalidParameter("k must be at least 4".into()));
    }
    if !(eps > 0.0 && p > 0.0) {
        return Err(Error::InvalidParameter("eps and p must be positive".into()));
    }
    let x_size = (eps / p - 1e-9).ceil().max(1.0) as usize;
    if x_size >= n {
        return Err(Error::InvalidParameter(format!("|X| = {x_size} leaves no room in n = {n}")));
    }
    for attempt in 0..RETRY_CAP {
        let s = rng::derive_seed(seed, attempt as u64);
        let mut rng = rng::stream(rng::derive_seed(s, 1));
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let mut x = all[..x_size].to_vec();
        x.sort_unstable();
        let gamma = generate_gnp(GnpParams { n, p, seed: s });
        let xs = vertex_set(n, x.iter().copied());
        let x_degree_ok = x.iter().all(|&v| gamma.degree_into(v, &xs) as f64 <= (n as f64).ln());
        let mut y_set = VertexSet::with_capacity(n);
        for &v in &x {
            y_set.union_with(gamma.neighbours(v));
        }
        y_set.difference_with(&xs);
        let mut y: Vec<usize> = y_set.ones().collect();
        if !x_degree_ok || y.len() as f64 > 2.0 * eps * n as f64 {
            continue;
        }
        y.shuffle(&mut rng);
        let (mut y1, mut y2) = (y[..y.len() / 2].to_vec(), y[y.len() / 2..].to_vec());
        y1.sort_unstable();
        y2.sort_unstable();
        let mut z: Vec<usize> = (0..n).filter(|&v| !xs.contains(v) && !y_set.contains(v)).collect();
        z.shuffle(&mut rng);
        let mut parts = vec![Vec::new(); k + 1];
        for (i, v) in z.into_iter().enumerate() {
            parts[i % (k + 1)].push(v);
        }
        for part in parts.iter_mut() {
            part.sort_unstable();
        }
        let mut inst =
            AdversaryInstance { n, p, eps, seed, attempts: attempt + 1, k, g: Graph::empty(n), gamma, x, y1, y2, z: parts };
        let sides = inst.sides();
        let mut b = GraphBuilder::new(n);
        for (u, v) in inst.gamma.edges() {
            if permitted(sides[u], sides[v]).is_some() {
                b.add_edge(u, v)?;
            }
        }
        inst.g = b.build();
        return Ok(inst);
    }
    Err(Error::RetriesExhausted(RETRY_CAP))
}

/// `(sound, complete)`: every g-edge is admitted by a rule and lies in Γ;
/// every admitted Γ-edge is in g.
pub fn check_edge_rules(inst: &AdversaryInstance) -> (bool, bool) {
    let sides = inst.sides();
    let sound = inst.g.is_subgraph_of(&inst.gamma) && inst.g.edges().all(|(u, v)| permitted(sides[u], sides[v]).is_some());
    let complete = inst.gamma.edges().all(|(u, v)| permitted(sides[u], sides[v]).is_none() || inst.g.has_edge(u, v));
    (sound, complete)
}

/// g-edge count per rule, in the order XY, Y1Y2, YZ, ZZ.
pub fn rule_edge_counts(inst: &AdversaryInstance) -> [usize; 4] {
    let sides = inst.sides();
    let mut out = [0; 4];
    for (u, v) in inst.g.edges() {
        match permitted(sides[u], sides[v]) {
            Some(EdgeRule::XY) => out[0] += 1,
            Some(EdgeRule::Y1Y2) => out[1] += 1,
            Some(EdgeRule::YZ) => out[2] += 1,
            Some(EdgeRule::ZZ) => out[3] += 1,
            None => {}
        }
    }
    out
}

/// Edges inside `N(v)` for every `v`.
pub fn neighbourhood_edge_counts(g: &Graph) -> Vec<usize> {
    (0..g.n()).into_par_iter().map(|v| g.edges_within(g.neighbours(v))).collect()
}

/// Rooted searches for a pattern at a set of anchors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootedCertificate {
    pub anchors: Vec<usize>,
    pub searches: usize,
    /// `(anchor, pattern vertex)` pairs where a copy was found.
    pub found: Vec<(usize, usize)>,
    /// Pairs whose search hit the node budget.
    pub undecided: Vec<(usize, usize)>,
    /// Searches settled by an empty quotient domain.
    pub settled_by_quotient: usize,
}

impl RootedCertificate {
    /// No copy anywhere and every search decided.
    pub fn all_absent(&self) -> bool {
        self.found.is_empty() && self.undecided.is_empty()
    }
}

/// For every anchor and every pattern vertex, an exact rooted search in
/// `g`, pruned by [`quotient_domains`] over `parts` when given. Searches
/// run in parallel.
pub fn certify_rooted_absence(
    g: &Graph,
    pattern: &Graph,
    anchors: &[usize],
    parts: Option<&[Vec<usize>]>,
    node_budget: Option<u64>,
) -> Result<RootedCertificate> {
    let jobs: Vec<(usize, usize)> = anchors.iter().flat_map(|&x| (0..pattern.n()).map(move |w| (x, w))).collect();
    let results: Vec<Result<(usize, usize, RootedSearch, bool)>> = jobs
        .par_iter()
        .map(|&(x, w)| {
            let domains: Option<Vec<VertexSet>> = parts.map(|ps| quotient_domains(g, pattern, w, x, ps)).transpose()?;
            let empty = domains.as_ref().is_some_and(|d| d.iter().any(|s| s.count_ones(..) == 0));
            if empty {
                return Ok((x, w, RootedSearch::Absent, true));
            }
            let r = find_rooted_copy_with(g, pattern, w, x, domains.as_deref(), node_budget)?;
            Ok((x, w, r, false))
        })
        .collect();
    let mut cert = RootedCertificate {
        anchors: anchors.to_vec(),
        searches: jobs.len(),
        found: Vec::new(),
        undecided: Vec::new(),
        settled_by_quotient: 0,
    };
    for r in results {
        let (x, w, outcome, quick) = r?;
        cert.settled_by_quotient += quick as usize;
        match outcome {
            RootedSearch::Found(_) => cert.found.push((x, w)),
            RootedSearch::BudgetExhausted => cert.undecided.push((x, w)),
            RootedSearch::Absent => {}
        }
    }
    Ok(cert)
}

/// No copy of the instance's pattern in g uses a vertex of `X`.
pub fn verify_no_f_on_x(inst: &AdversaryInstance) -> Result<bool> {
    let parts = inst.parts();
    Ok(certify_rooted_absence(&inst.g, &inst.pattern(), &inst.x, Some(&parts), None)?.all_absent())
}

/// Instance summary written by the `adversary` subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub n: usize,
    pub p: f64,
    pub eps: f64,
    pub k: usize,
    pub seed: u64,
    pub attempts: usize,
    pub x_size: usize,
    pub y1_size: usize,
    pub y2_size: usize,
    pub z_sizes: Vec<usize>,
    pub min_degree: usize,
    /// `δ(g)/(pn)`.
    pub min_degree_fraction: f64,
    /// Edges per rule: XY, Y1Y2, YZ, ZZ.
    pub rule_edges: [usize; 4],
    pub rules_sound: bool,
    pub rules_complete: bool,
    pub min_neighbourhood_edges: usize,
    pub certificate: RootedCertificate,
    pub certified_absent: bool,
}

pub fn adversary_report(inst: &AdversaryInstance) -> Result<AdversaryReport> {
    let (sound, complete) = check_edge_rules(inst);
    let parts = inst.parts();
    let certificate = certify_rooted_absence(&inst.g, &inst.pattern(), &inst.x, Some(&parts), None)?;
    let min_degree = inst.g.min_degree();
    Ok(AdversaryReport {
        n: inst.n,
        p: inst.p,
        eps: inst.eps,
        k: inst.k,
        seed: inst.seed,
        attempts: inst.attempts,
        x_size: inst.x.len(),
        y1_size: inst.y1.len(),
        y2_size: inst.y2.len(),
        z_sizes: inst.z.iter().map(Vec::len).collect(),
        min_degree,
        min_degree_fraction: min_degree as f64 / (inst.p * inst.n as f64),
        rule_edges: rule_edge_counts(inst),
        rules_sound: sound,
        rules_complete: complete,
        min_neighbourhood_edges: neighbourhood_edge_counts(&inst.g).into_iter().min().unwrap_or(0),
        certified_absent: certificate.all_absent(),
        certificate,
    })
}

/// Per-target and per-vertex deletion counts of [`neighbourhood_clearing`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClearingReport {
    pub deleted_per_target: Vec<usize>,
    pub deleted_total: usize,
    /// Largest `deleted incident edges / deg_{g0}` over vertices that lost any.
    pub max_vertex_fraction: f64,
    /// Mean of the same ratio over vertices that lost any.
    pub mean_vertex_fraction: f64,
}

/// Deletes every edge inside `N(v)` for each target `v`, in the given
/// order, so each target's neighbourhood ends up independent.
pub fn neighbourhood_clearing(gamma: &Graph, g0: &Graph, targets: &[usize]) -> Result<(Graph, ClearingReport)> {
    if gamma.n() != g0.n() || !g0.is_subgraph_of(gamma) {
        return Err(Error::InvalidParameter("g0 must be a spanning subgraph of gamma".into()));
    }
    crate::graph::check_set(g0, targets)?;
    let n = g0.n();
    let mut b = GraphBuilder::from_graph(g0);
    let mut lost = vec![0usize; n];
    let mut per_target = Vec::with_capacity(targets.len());
    for &v in targets {
        let nb: Vec<usize> = b.neighbours(v).ones().collect();
        let mut deleted = 0;
        for (i, &u) in nb.iter().enumerate() {
            for &w in &nb[i + 1..] {
                if b.remove_edge(u, w) {
                    deleted += 1;
                    lost[u] += 1;
                    lost[w] += 1;
                }
            }
        }
        per_target.push(deleted);
    }
    let out = b.build();
    let fractions: Vec<f64> = (0..n).filter(|&u| lost[u] > 0).map(|u| lost[u] as f64 / g0.degree(u) as f64).collect();
    let report = ClearingReport {
        deleted_total: per_target.iter().sum(),
        deleted_per_target: per_target,
        max_vertex_fraction: fractions.iter().copied().fold(0.0, f64::max),
        mean_vertex_fraction: if fractions.is_empty() { 0.0 } else { fractions.iter().sum::<f64>() / fractions.len() as f64 },
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_shape() {
        let f = build_f();
        assert_eq!(f.n(), 11);
        assert_eq!(f.edge_count(), 36);
        assert_eq!(f.degree(F_ROOT), 6);
        assert_eq!(build_f_k(4).unwrap(), f);
        let f5 = build_f_k(5).unwrap();
        assert_eq!(f5.n(), 12);
        assert_eq!(f5.degree(11), 10);
        assert!(!f5.has_edge(11, F_ROOT));
        assert_eq!(chromatic_number(&f5), Some(5));
    }

    #[test]
    fn f_self_test() {
        let r = analyze_f().unwrap();
        assert_eq!(r.chromatic_number, 4);
        assert_eq!(r.proper_4_colourings, F_COLOURING_COUNT);
        assert!(r.forced_classes && r.k4_cover && r.root_neighbourhood_is_c6);
    }

    #[test]
    fn degenerate_instance() {
        // p = 1 and |X| = 1: Y is everything else and Z is empty
        let inst = build_adversarial_instance(12, 1.0, 0.5, 3).unwrap();
        assert_eq!(inst.x.len(), 1);
        assert_eq!(inst.y1.len() + inst.y2.len(), 11);
        assert!(inst.z.iter().all(Vec::is_empty));
        assert_eq!(check_edge_rules(&inst), (true, true));
        assert_eq!(inst.g.degree(inst.x[0]), 11);
    }

    #[test]
    fn small_instance_certifies() {
        let inst = build_adversarial_instance(300, 0.5, 0.5, 7).unwrap();
        assert_eq!(check_edge_rules(&inst), (true, true));
        assert!(verify_no_f_on_x(&inst).unwrap());
        // Γ itself has F at X
        let cert = certify_rooted_absence(&inst.gamma, &build_f(), &inst.x, None, Some(1_000_000)).unwrap();
        assert!(!cert.found.is_empty());
        assert!(neighbourhood_edge_counts(&inst.g).iter().all(|&c| c >= 1));
    }

    #[test]
    fn clearing_k5() {
        let k5 = Graph::complete(5);
        let (g, rep) = neighbourhood_clearing(&k5, &k5, &[0]).unwrap();
        assert_eq!(rep.deleted_total, 6);
        assert_eq!(g.edges_within(g.neighbours(0)), 0);
        let star = Graph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        let (g, rep) = neighbourhood_clearing(&star, &star, &[0]).unwrap();
        assert_eq!(rep.deleted_total, 0);
        assert_eq!(g, star);
    }
}
