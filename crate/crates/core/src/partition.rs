//! The G-side cluster partition, the H-side assignment and balancing.
//!
//! Cluster `(i, j)` is 0-based in memory; files use 1-based indices with
//! `0,0` standing for the exceptional set `V_0`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backbone::{backbone_graph, cell, column_hubs, IntegerPartition};
use crate::bandwidth::Labelling;
use crate::colouring::Colouring;
use crate::error::{Error, Result};
use crate::graph::{vertex_set, Graph, VertexSet};
use crate::regularity::{
    build_regular_partition, super_regular_vertex_violation, test_lower_regular_exhaustive, test_lower_regular_randomized,
    PairParams, PartitionConfig, EXHAUSTIVE_LIMIT,
};
use crate::rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub r: usize,
    pub k: usize,
    pub v0: Vec<usize>,
    /// `clusters[i][j]`, each sorted.
    pub clusters: Vec<Vec<Vec<usize>>>,
    /// `R^k_r` on flattened cells `i·k + j`.
    pub reduced: Graph,
    pub params: PairParams,
}

impl ClusterPartition {
    pub fn cluster(&self, i: usize, j: usize) -> &[usize] {
        &self.clusters[i][j]
    }

    pub fn sizes(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|row| row.iter().map(Vec::len).collect()).collect()
    }

    /// Cluster of each vertex; `None` for `V_0`.
    pub fn owners(&self, n: usize) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![None; n];
        for (i, row) in self.clusters.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                for &v in c {
                    out[v] = Some((i, j));
                }
            }
        }
        out
    }

    /// Clusters and `V_0` partition `0..n`; columns are k-equitable;
    /// `B^k_r ⊆ R`.
    pub fn check_invariants(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &v in self.v0.iter().chain(self.clusters.iter().flatten().flatten()) {
            if v >= n || seen[v] {
                return Err(Error::AssertionFailed(format!("vertex {v} repeated or out of range")));
            }
            seen[v] = true;
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::AssertionFailed(format!("vertex {v} not covered")));
        }
        if !IntegerPartition::new(self.sizes())?.is_k_equitable() {
            return Err(Error::AssertionFailed("clusters are not k-equitable".into()));
        }
        if !backbone_graph(self.r, self.k)?.is_subgraph_of(&self.reduced) {
            return Err(Error::AssertionFailed("reduced graph misses a backbone edge".into()));
        }
        Ok(())
    }
}

/// Which of the host partition guarantees held on the built partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionReport {
    /// `n/(4kr) ≤ |V_{i,j}| ≤ 4n/(kr)` everywhere.
    pub g1_sizes: bool,
    /// No lower-regularity witness on `R` edges and no super-regularity
    /// witness on `K^k_r` edges.
    pub g2_regular: bool,
    /// Sampled one-sided inheritance on `K^k_r` edges; `None` if not sampled.
    pub g3_inheritance: Option<bool>,
    /// `|N_Γ(v, V_{i,j})| = (1 ± ε)p|V_{i,j}|` for every clustered vertex.
    pub g4_gamma_degrees: bool,
    pub exiled_bad: usize,
    pub exiled_for_equitability: usize,
    pub reduced_min_degree: usize,
    /// `δ(G)/(pn)`.
    pub min_degree_fraction: f64,
    pub witness_fraction: f64,
    pub warnings: Vec<String>,
}

/// Desk-scale host partitioner with the usual regular-partition guarantees.
///
/// Builds a regular partition with `k·r0` parts, groups its parts into
/// backbone columns, moves vertices that break the Γ-degree balance or
/// super-regularity on their own column into `V_0`, then trims columns
/// back to k-equitable sizes.
pub fn build_cluster_partition(
    g: &Graph,
    gamma: &Graph,
    k: usize,
    r0: usize,
    pp: PairParams,
    gamma_slack: f64,
    inheritance_samples: usize,
    cfg: &PartitionConfig,
) -> Result<(ClusterPartition, PartitionReport)> {
    pp.validate()?;
    let n = g.n();
    if gamma.n() != n || !g.is_subgraph_of(gamma) {
        return Err(Error::InvalidParameter("g must be a spanning subgraph of gamma".into()));
    }
    if k < 1 || r0 < 1 {
        return Err(Error::InvalidParameter("k and r0 must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let min_degree_fraction = if n == 0 { 0.0 } else { g.min_degree() as f64 / (pp.p * n as f64) };
    let needed = (k as f64 - 1.0) / k as f64 + gamma_slack;
    if min_degree_fraction < needed {
        warnings.push(format!("δ(G)/(pn) = {min_degree_fraction:.3} is below ((k−1)/k + γ) = {needed:.3}"));
    }
    let raw = build_regular_partition(g, pp.p, pp.eps, pp.d, k * r0, cfg)?;
    let columns =
        group_columns(&raw.reduced, k).ok_or(Error::ColumnGroupingFailed { reduced_min_degree: raw.reduced_min_degree })?;
    let r = columns.len();
    let mut clusters: Vec<Vec<Vec<usize>>> =
        columns.iter().map(|col| col.iter().map(|&part| raw.parts[part].clone()).collect()).collect();
    let reduced = Graph::from_edges(
        r * k,
        (0..r * k).flat_map(|a| (a + 1..r * k).map(move |b| (a, b))).filter(|&(a, b)| {
            let pa = columns[a / k][a % k];
            let pb = columns[b / k][b % k];
            raw.reduced.has_edge(pa, pb)
        }),
    )?;
    let mut v0: Vec<usize> = raw.exceptional.clone();

    // exile vertices failing the Γ-degree balance or column super-regularity
    let sets = cluster_sets(n, &clusters);
    let mut bad = BTreeSet::new();
    for i in 0..r {
        for j in 0..k {
            for &v in &clusters[i][j] {
                if !gamma_balanced(gamma, &pp, v, &clusters, &sets)
                    || !column_super_regular(g, gamma, &pp, v, i, j, &clusters, &sets)
                {
                    bad.insert(v);
                }
            }
        }
    }
    for row in clusters.iter_mut() {
        for c in row.iter_mut() {
            c.retain(|v| !bad.contains(v));
        }
    }
    v0.extend(bad.iter().copied());
    let exiled_bad = bad.len();

    // trim each column to sizes within one of its smallest cluster
    let mut exiled_for_equitability = 0;
    for row in clusters.iter_mut() {
        let lo = row.iter().map(Vec::len).min().unwrap_or(0);
        let col_set = vertex_set(n, row.iter().flatten().copied());
        for c in row.iter_mut() {
            while c.len() > lo + 1 {
                // drop the vertex with fewest neighbours in its column
                let (idx, _) = c.iter().enumerate().min_by_key(|&(_, &v)| (g.degree_into(v, &col_set), v)).expect("nonempty");
                v0.push(c.remove(idx));
                exiled_for_equitability += 1;
            }
        }
    }
    v0.sort_unstable();
    let part = ClusterPartition { r, k, v0, clusters, reduced, params: pp };
    part.check_invariants(n)?;
    let report = partition_report(
        g,
        gamma,
        &part,
        inheritance_samples,
        cfg,
        PartialReport {
            exiled_bad,
            exiled_for_equitability,
            min_degree_fraction,
            witness_fraction: raw.witness_fraction,
            warnings,
        },
    )?;
    Ok((part, report))
}

struct PartialReport {
    exiled_bad: usize,
    exiled_for_equitability: usize,
    min_degree_fraction: f64,
    witness_fraction: f64,
    warnings: Vec<String>,
}

fn cluster_sets(n: usize, clusters: &[Vec<Vec<usize>>]) -> Vec<Vec<VertexSet>> {
    clusters.iter().map(|row| row.iter().map(|c| vertex_set(n, c.iter().copied())).collect()).collect()
}

fn gamma_balanced(gamma: &Graph, pp: &PairParams, v: usize, clusters: &[Vec<Vec<usize>>], sets: &[Vec<VertexSet>]) -> bool {
    clusters.iter().zip(sets).all(|(row, srow)| {
        row.iter().zip(srow).all(|(c, s)| {
            let expect = pp.p * c.len() as f64;
            let got = gamma.degree_into(v, s) as f64;
            (got - expect).abs() <= pp.eps * expect
        })
    })
}

fn column_super_regular(
    g: &Graph,
    gamma: &Graph,
    pp: &PairParams,
    v: usize,
    i: usize,
    j: usize,
    clusters: &[Vec<Vec<usize>>],
    sets: &[Vec<VertexSet>],
) -> bool {
    (0..clusters[i].len()).filter(|&j2| j2 != j).all(|j2| {
        let size = clusters[i][j2].len();
        let bound = crate::regularity::super_regular_bound(pp, size, gamma.degree_into(v, &sets[i][j2]));
        g.degree_into(v, &sets[i][j2]) as f64 >= bound
    })
}

/// Orders a `K_k`-factor of `reduced` into columns so that consecutive
/// columns carry the backbone cross edges. Depth-first with a node budget.
fn group_columns(reduced: &Graph, k: usize) -> Option<Vec<Vec<usize>>> {
    let t = reduced.n();
    if !t.is_multiple_of(k) || t == 0 {
        return None;
    }
    struct Search<'a> {
        reduced: &'a Graph,
        k: usize,
        used: Vec<bool>,
        columns: Vec<Vec<usize>>,
        nodes: u64,
    }
    impl Search<'_> {
        fn fill(&mut self) -> bool {
            self.nodes += 1;
            if self.nodes > 2_000_000 {
                return false;
            }
            if self.used.iter().all(|&u| u) {
                return true;
            }
            self.columns.push(Vec::with_capacity(self.k));
            if self.extend() {
                return true;
            }
            self.columns.pop();
            false
        }

        fn extend(&mut self) -> bool {
            let c = self.columns.len() - 1;
            let j = self.columns[c].len();
            if j == self.k {
                return self.fill();
            }
            for w in 0..self.reduced.n() {
                if self.used[w] {
                    continue;
                }
                // first member of the first column: lowest free id only
                if c == 0 && j == 0 && w > 0 {
                    break;
                }
                let col = &self.columns[c];
                let fits_col = col.iter().all(|&u| self.reduced.has_edge(u, w));
                let fits_prev =
                    c == 0 || self.columns[c - 1].iter().enumerate().all(|(j2, &u)| j2 == j || self.reduced.has_edge(u, w));
                if !(fits_col && fits_prev) {
                    continue;
                }
                self.used[w] = true;
                self.columns[c].push(w);
                if self.extend() {
                    return true;
                }
                self.columns[c].pop();
                self.used[w] = false;
                if self.nodes > 2_000_000 {
                    return false;
                }
            }
            false
        }
    }
    let mut s = Search { reduced, k, used: vec![false; t], columns: Vec::new(), nodes: 0 };
    s.fill().then_some(s.columns)
}

fn partition_report(
    g: &Graph,
    gamma: &Graph,
    part: &ClusterPartition,
    inheritance_samples: usize,
    cfg: &PartitionConfig,
    partial: PartialReport,
) -> Result<PartitionReport> {
    let n = g.n();
    let (r, k, pp) = (part.r, part.k, part.params);
    let lo = n as f64 / (4.0 * (k * r) as f64);
    let hi = 4.0 * n as f64 / (k * r) as f64;
    let g1_sizes = part.clusters.iter().flatten().all(|c| (c.len() as f64) >= lo && (c.len() as f64) <= hi);
    let flat: Vec<&[usize]> = part.clusters.iter().flatten().map(Vec::as_slice).collect();
    let mut g2_regular = true;
    for (a, b) in part.reduced.edges() {
        if flat[a].is_empty() || flat[b].is_empty() {
            g2_regular = false;
            continue;
        }
        let seed = rng::derive_seed(cfg.seed, (a * r * k + b) as u64);
        let v = pair_test(g, &pp, flat[a], flat[b], cfg.trials, seed)?;
        let same_column = a / k == b / k;
        if v || (same_column && super_regular_vertex_violation(g, gamma, &pp, flat[a], flat[b]).is_some()) {
            g2_regular = false;
        }
    }
    let sets = cluster_sets(n, &part.clusters);
    let g4_gamma_degrees =
        part.clusters.iter().flatten().flatten().all(|&v| gamma_balanced(gamma, &pp, v, &part.clusters, &sets));
    let g3_inheritance = if inheritance_samples == 0 {
        None
    } else {
        let mut ok = true;
        let clustered: Vec<usize> = part.clusters.iter().flatten().flatten().copied().collect();
        let step = (clustered.len() / inheritance_samples).max(1);
        for &v in clustered.iter().step_by(step).take(inheritance_samples) {
            for i in 0..r {
                for j in 0..k {
                    for j2 in 0..k {
                        if j == j2 {
                            continue;
                        }
                        let nv: Vec<usize> = part.clusters[i][j].iter().copied().filter(|&u| gamma.has_edge(v, u)).collect();
                        if nv.is_empty() {
                            ok = false;
                            continue;
                        }
                        let seed = rng::derive_seed(cfg.seed ^ 0x5eed, (v * r * k + cell(i, j2, k)) as u64);
                        if pair_test(g, &pp, &nv, &part.clusters[i][j2], cfg.trials, seed)? {
                            ok = false;
                        }
                    }
                }
            }
        }
        Some(ok)
    };
    Ok(PartitionReport {
        g1_sizes,
        g2_regular,
        g3_inheritance,
        g4_gamma_degrees,
        exiled_bad: partial.exiled_bad,
        exiled_for_equitability: partial.exiled_for_equitability,
        reduced_min_degree: part.reduced.min_degree(),
        min_degree_fraction: partial.min_degree_fraction,
        witness_fraction: partial.witness_fraction,
        warnings: partial.warnings,
    })
}

/// `true` when a lower-regularity witness was found.
fn pair_test(g: &Graph, pp: &PairParams, x: &[usize], y: &[usize], trials: usize, seed: u64) -> Result<bool> {
    let v = if x.len() <= EXHAUSTIVE_LIMIT && y.len() <= EXHAUSTIVE_LIMIT {
        test_lower_regular_exhaustive(g, pp, x, y)?
    } else {
        test_lower_regular_randomized(g, pp, x, y, trials, seed)?
    };
    Ok(v.is_witness())
}

/// The map `f: V(H) → [r]×[k]` and the special set `X`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub r: usize,
    pub k: usize,
    /// 0-based `(i, j)` per vertex of `H`.
    pub f: Vec<(usize, usize)>,
    /// Sorted.
    pub special: Vec<usize>,
}

impl Assignment {
    pub fn class_sizes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![0; self.k]; self.r];
        for &(i, j) in &self.f {
            out[i][j] += 1;
        }
        out
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AssignmentReport {
    pub h1_sizes: bool,
    pub h2_special: bool,
    pub h3_edges: bool,
    pub h4_locality: bool,
    pub h5_start: bool,
    /// Human-readable violations, at most a few per item.
    pub violations: Vec<String>,
}

impl AssignmentReport {
    pub fn all_ok(&self) -> bool {
        self.h1_sizes && self.h2_special && self.h3_edges && self.h4_locality && self.h5_start
    }

    /// The first failing item, as `"H1"` … `"H5"`.
    pub fn first_failure(&self) -> Option<&'static str> {
        [(self.h1_sizes, "H1"), (self.h2_special, "H2"), (self.h3_edges, "H3"), (self.h4_locality, "H4"), (self.h5_start, "H5")]
            .into_iter()
            .find(|(ok, _)| !ok)
            .map(|(_, name)| name)
    }
}

const MAX_LISTED: usize = 5;

/// Number of leading vertices of the labelling constrained by H5: `⌊√β·n⌋`.
pub fn h5_prefix(beta: f64, n: usize) -> usize {
    ((beta.sqrt() * n as f64).floor() as usize).min(n)
}

/// Checks the five assignment guarantees (H1 to H5) of `a` against `reduced` (`R^k_r` on
/// flattened cells) and the targets `m`.
pub fn verify_assignment(
    h: &Graph,
    a: &Assignment,
    reduced: &Graph,
    m: &IntegerPartition,
    xi: f64,
    lab: &Labelling,
    col: &Colouring,
    beta: f64,
) -> AssignmentReport {
    let n = h.n();
    let k = a.k;
    let mut rep = AssignmentReport::default();
    let note = |list: &mut Vec<String>, count: &mut usize, msg: String| {
        if *count < MAX_LISTED {
            list.push(msg);
        }
        *count += 1;
    };
    let mut violations = Vec::new();
    let shape_ok = a.f.len() == n && m.r() == a.r && m.k() == k && reduced.n() == a.r * k;
    if !shape_ok {
        violations.push("assignment, targets and reduced graph disagree in shape".into());
        rep.violations = violations;
        return rep;
    }
    let slack = xi * n as f64;

    let sizes = a.class_sizes();
    let mut c1 = 0;
    for i in 0..a.r {
        for j in 0..k {
            let (s, t) = (sizes[i][j] as f64, m.get(i, j) as f64);
            if s < t - slack || s > t + slack {
                note(&mut violations, &mut c1, format!("H1: |f⁻¹({},{})| = {} vs m = {}", i + 1, j + 1, s, t));
            }
        }
    }
    rep.h1_sizes = c1 == 0;

    rep.h2_special = a.special.len() as f64 <= slack;
    if !rep.h2_special {
        violations.push(format!("H2: |X| = {} exceeds ξn = {slack}", a.special.len()));
    }

    let mut c3 = 0;
    for (x, y) in h.edges() {
        let (fx, fy) = (a.f[x], a.f[y]);
        if !reduced.has_edge(cell(fx.0, fx.1, k), cell(fy.0, fy.1, k)) {
            note(&mut violations, &mut c3, format!("H3: edge {x}-{y} maps to non-edge {fx:?}-{fy:?}"));
        }
    }
    rep.h3_edges = c3 == 0;

    let special = vertex_set(n, a.special.iter().copied());
    let mut c4 = 0;
    for x in 0..n {
        if special.contains(x) {
            continue;
        }
        let i = a.f[x].0;
        let leaves = h.neighbours(x).ones().any(|y| a.f[y].0 != i || h.neighbours(y).ones().any(|z| a.f[z].0 != i));
        if leaves {
            note(&mut violations, &mut c4, format!("H4: vertex {x} in column {} reaches another column", i + 1));
        }
    }
    rep.h4_locality = c4 == 0;

    let mut c5 = 0;
    for &x in &lab.order()[..h5_prefix(beta, n).min(lab.n())] {
        let c = col.colour(x);
        if c == 0 || a.f[x] != (0, c - 1) {
            note(&mut violations, &mut c5, format!("H5: vertex {x} of colour {c} mapped to {:?}", a.f[x]));
        }
    }
    rep.h5_start = c5 == 0;
    rep.violations = violations;
    rep
}

/// Same as [`verify_assignment`] with the reduced graph of `part`.
pub fn verify_assignment_for(
    h: &Graph,
    a: &Assignment,
    part: &ClusterPartition,
    m: &IntegerPartition,
    xi: f64,
    lab: &Labelling,
    col: &Colouring,
    beta: f64,
) -> AssignmentReport {
    verify_assignment(h, a, &part.reduced, m, xi, lab, col, beta)
}

/// Contract-directed construction of the pattern-to-cell mapping.
///
/// Walks the labelling and fills backbone columns in order: column `i`
/// takes the next `Σ_j m_{i,j}` vertices and a vertex of colour `c ≥ 1`
/// goes to `(i, c)`. A colour-0 vertex takes a cell of its own column that
/// is adjacent in `R` to the cells of all its neighbours when there is one,
/// and otherwise the hub cluster `z_i` adjacent to the whole of column `i`.
/// Column changes happen between consecutive
/// vertices, not at block boundaries. `X` is then exactly the set of
/// vertices with a two-step path leaving their column. The result is
/// checked with [`verify_assignment`] and any failing item is returned as
/// [`Error::AssignmentFailed`].
pub fn assign_h(
    h: &Graph,
    lab: &Labelling,
    col: &Colouring,
    reduced: &Graph,
    m: &IntegerPartition,
    xi: f64,
    beta: f64,
) -> Result<Assignment> {
    let n = h.n();
    let (r, k) = (m.r(), m.k());
    let fail = |item: &str, detail: String| Error::AssignmentFailed { item: item.into(), detail };
    if lab.n() != n || col.len() != n {
        return Err(Error::InvalidParameter("labelling or colouring size differs from H".into()));
    }
    if col.k() != k {
        return Err(Error::InvalidParameter(format!("colouring uses k = {}, targets k = {k}", col.k())));
    }
    col.check(h)?;
    if m.total() != n {
        return Err(fail("targets", format!("targets sum to {}, H has {n} vertices", m.total())));
    }
    if !(xi > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter("xi and beta must be positive".into()));
    }
    if (lab.bandwidth() as f64) > beta * n as f64 {
        return Err(fail("bandwidth", format!("labelling bandwidth {} exceeds βn = {}", lab.bandwidth(), beta * n as f64)));
    }
    if reduced.n() != r * k || !backbone_graph(r, k)?.is_subgraph_of(reduced) {
        return Err(fail("backbone", "reduced graph does not contain B^k_r".into()));
    }
    let hubs = column_hubs(reduced, r, k)?;
    let hub = |i: usize| hubs[i].ok_or_else(|| fail("hub", format!("column {} has no vertex z_i adjacent to all of it", i + 1)));

    let mut f = vec![(0, 0); n];
    let mut zeros = Vec::new();
    let mut column = 0;
    let mut filled = 0;
    let quota: Vec<usize> = (0..r).map(|i| (0..k).map(|j| m.get(i, j)).sum()).collect();
    for &x in lab.order() {
        while column + 1 < r && filled >= quota[column] {
            column += 1;
            filled = 0;
        }
        match col.colour(x) {
            0 => zeros.push((x, column)),
            c => f[x] = (column, c - 1),
        }
        filled += 1;
    }
    // colour-0 vertices (pairwise non-adjacent) take a cell of their own
    // column compatible with all neighbours, else the column hub
    for (x, i) in zeros {
        let fits = |z: usize| h.neighbours(x).ones().all(|y| reduced.has_edge(z, cell(f[y].0, f[y].1, k)));
        let z = match (0..k).map(|j| cell(i, j, k)).find(|&z| fits(z)) {
            Some(z) => z,
            None => hub(i)?,
        };
        f[x] = (z / k, z % k);
    }

    let special: Vec<usize> = (0..n)
        .filter(|&x| {
            let i = f[x].0;
            h.neighbours(x).ones().any(|y| f[y].0 != i || h.neighbours(y).ones().any(|z| f[z].0 != i))
        })
        .collect();
    let a = Assignment { r, k, f, special };
    let report = verify_assignment(h, &a, reduced, m, xi, lab, col, beta);
    match report.first_failure() {
        None => Ok(a),
        Some(item) => {
            let detail = report.violations.first().map_or("", |v| v.strip_prefix(item).unwrap_or(v).trim_start_matches(": "));
            Err(fail(item, detail.to_string()))
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RebalanceReport {
    pub moves: usize,
    /// Lower bound `Σ max(0, |V_{i,j}| − n_{i,j})`.
    pub lower_bound: usize,
    /// `R` edges touching a changed cluster where a witness was found.
    pub irregular_touched_pairs: Vec<(usize, usize)>,
    pub touched_pairs: usize,
}

/// Moves vertices between clusters until `|V'_{i,j}| = n_{i,j}` exactly.
///
/// Surplus clusters give their vertex with the most neighbours in the
/// receiving cluster first. `V_0` is never touched. Each cluster may
/// change by at most `budget·n` vertices.
pub fn rebalance(
    g: &Graph,
    part: &ClusterPartition,
    targets: &IntegerPartition,
    budget: f64,
    cfg: &PartitionConfig,
) -> Result<(ClusterPartition, RebalanceReport)> {
    let (r, k) = (part.r, part.k);
    if targets.r() != r || targets.k() != k {
        return Err(Error::InvalidParameter("targets shape differs from the partition".into()));
    }
    let sizes = part.sizes();
    let total: usize = sizes.iter().flatten().sum();
    if targets.total() != total {
        return Err(Error::InvalidParameter(format!("targets sum to {}, clusters hold {total}", targets.total())));
    }
    let cap = (budget * g.n() as f64).floor() as usize;
    for i in 0..r {
        for j in 0..k {
            let needed = sizes[i][j].abs_diff(targets.get(i, j));
            if needed > cap {
                return Err(Error::BudgetExceeded { i: i + 1, j: j + 1, needed, budget: cap });
            }
        }
    }
    let mut clusters = part.clusters.clone();
    let cells: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let mut moves = 0;
    let mut touched = vec![false; r * k];
    for &(di, dj) in &cells {
        while clusters[di][dj].len() < targets.get(di, dj) {
            let dest = vertex_set(g.n(), clusters[di][dj].iter().copied());
            // best vertex over all surplus clusters
            let mut best: Option<(usize, usize, usize, usize)> = None;
            for &(si, sj) in &cells {
                if clusters[si][sj].len() <= targets.get(si, sj) {
                    continue;
                }
                for (idx, &v) in clusters[si][sj].iter().enumerate() {
                    let score = g.degree_into(v, &dest);
                    if best.is_none_or(|b| score > b.0) {
                        best = Some((score, cell(si, sj, k), idx, v));
                    }
                }
            }
            let (_, src, idx, v) = best.expect("totals match, so a surplus cluster exists");
            clusters[src / k][src % k].remove(idx);
            clusters[di][dj].push(v);
            touched[src] = true;
            touched[cell(di, dj, k)] = true;
            moves += 1;
        }
    }
    for row in clusters.iter_mut() {
        for c in row.iter_mut() {
            c.sort_unstable();
        }
    }
    let out = ClusterPartition { clusters, ..part.clone() };
    let flat: Vec<&[usize]> = out.clusters.iter().flatten().map(Vec::as_slice).collect();
    let mut irregular = Vec::new();
    let mut touched_pairs = 0;
    for (a, b) in out.reduced.edges() {
        if !(touched[a] || touched[b]) || flat[a].is_empty() || flat[b].is_empty() {
            continue;
        }
        touched_pairs += 1;
        let seed = rng::derive_seed(cfg.seed, (a * r * k + b) as u64);
        if pair_test(g, &out.params, flat[a], flat[b], cfg.trials, seed)? {
            irregular.push((a, b));
        }
    }
    let lower_bound = cells.iter().map(|&(i, j)| sizes[i][j].saturating_sub(targets.get(i, j))).sum();
    Ok((out, RebalanceReport { moves, lower_bound, irregular_touched_pairs: irregular, touched_pairs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::k_equitable_targets;
    use crate::graph::{generate_gnp, GnpParams};

    fn pp(eps: f64, d: f64, p: f64) -> PairParams {
        PairParams::new(eps, d, p).unwrap()
    }

    #[test]
    fn complete_graph_partition() {
        let g = Graph::complete(40);
        let (part, rep) = build_cluster_partition(&g, &g, 2, 2, pp(0.25, 0.5, 1.0), 0.0, 0, &PartitionConfig::default()).unwrap();
        assert!(part.v0.is_empty());
        assert_eq!(part.r * part.k, 4);
        assert!(rep.g1_sizes && rep.g2_regular && rep.g4_gamma_degrees);
        part.check_invariants(40).unwrap();
    }

    #[test]
    fn bipartite_columns_align_with_sides() {
        let g = Graph::complete_bipartite(30, 30);
        let (part, _) =
            build_cluster_partition(&g, &Graph::complete(60), 2, 2, pp(0.25, 0.5, 1.0), 0.0, 0, &PartitionConfig::default())
                .unwrap();
        for row in &part.clusters {
            let sides: Vec<bool> = row.iter().map(|c| c[0] < 30).collect();
            for c in row {
                assert!(c.iter().all(|&v| (v < 30) == (c[0] < 30)), "cluster mixes sides");
            }
            assert_ne!(sides[0], sides[1], "column holds both sides");
        }
    }

    #[test]
    fn trivial_assignment() {
        // disjoint edges, k = 2, r = 2 on a complete reduced graph
        let h = Graph::from_edges(8, (0..4).map(|i| (2 * i, 2 * i + 1))).unwrap();
        let lab = Labelling::identity(&h);
        let col = Colouring::new((0..8).map(|v| 1 + v % 2).collect(), 2);
        let reduced = Graph::complete(4);
        let m = IntegerPartition::equal(2, 2, 8);
        let a = assign_h(&h, &lab, &col, &reduced, &m, 0.25, 0.2).unwrap();
        assert!(a.special.is_empty());
        assert_eq!(a.f[0], (0, 0));
        assert_eq!(a.f[1], (0, 1));
        assert_eq!(a.f[7], (1, 1));
    }

    #[test]
    fn verifier_flags_bad_edge() {
        let h = Graph::path(4);
        let lab = Labelling::identity(&h);
        let col = Colouring::new(vec![1, 2, 1, 2], 2);
        let reduced = backbone_graph(2, 2).unwrap();
        let m = IntegerPartition::equal(2, 2, 4);
        let a = Assignment { r: 2, k: 2, f: vec![(0, 0), (0, 0), (1, 0), (1, 1)], special: vec![] };
        let rep = verify_assignment(&h, &a, &reduced, &m, 0.5, &lab, &col, 0.01);
        assert!(!rep.h3_edges);
        assert!(rep.violations.iter().any(|v| v.contains("edge 0-1")));
        let edgeless = Graph::empty(4);
        let constant = Assignment { r: 2, k: 2, f: vec![(0, 0); 4], special: vec![] };
        let rep = verify_assignment(&edgeless, &constant, &reduced, &m, 0.5, &lab, &Colouring::new(vec![1; 4], 2), 0.01);
        assert!(rep.h3_edges && rep.h4_locality && rep.h5_start);
    }

    #[test]
    fn path_assignment_round_trip() {
        let n = 400;
        let h = Graph::path(n);
        let lab = Labelling::identity(&h);
        let col = Colouring::new((0..n).map(|v| 1 + v % 2).collect(), 2);
        let reduced = Graph::complete(8);
        let m = IntegerPartition::equal(4, 2, n);
        let a = assign_h(&h, &lab, &col, &reduced, &m, 0.05, 0.01).unwrap();
        let rep = verify_assignment(&h, &a, &reduced, &m, 0.05, &lab, &col, 0.01);
        assert!(rep.all_ok(), "{:?}", rep.violations);
        assert!(a.special.len() <= 12);
    }

    #[test]
    fn rebalance_moves() {
        let g = generate_gnp(GnpParams { n: 60, p: 0.5, seed: 2 });
        let part = ClusterPartition {
            r: 1,
            k: 2,
            v0: vec![],
            clusters: vec![vec![(0..30).collect(), (30..60).collect()]],
            reduced: Graph::complete(2),
            params: pp(0.3, 0.2, 0.5),
        };
        let same = IntegerPartition::new(part.sizes()).unwrap();
        let (out, rep) = rebalance(&g, &part, &same, 0.1, &PartitionConfig::default()).unwrap();
        assert_eq!(rep.moves, 0);
        assert_eq!(out.clusters, part.clusters);
        let shifted = IntegerPartition::new(vec![vec![31, 29]]).unwrap();
        let (out, rep) = rebalance(&g, &part, &shifted, 0.1, &PartitionConfig::default()).unwrap();
        assert_eq!(rep.moves, 1);
        assert_eq!(out.sizes(), vec![vec![31, 29]]);
        let far = IntegerPartition::new(vec![vec![50, 10]]).unwrap();
        assert!(matches!(rebalance(&g, &part, &far, 0.1, &PartitionConfig::default()), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn targets_from_partition_sizes() {
        let t = k_equitable_targets(&[vec![20, 20], vec![19, 20]], 5).unwrap();
        assert_eq!(t.total(), 84);
        assert!(t.is_k_equitable());
    }
}
