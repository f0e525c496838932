//! Backbone graphs `B^k_r`, their clique factors `K^k_r`, k-equitable
//! integer partitions and clique walks in reduced graphs.
//!
//! Vertex `(i, j)` of `[r] × [k]` is stored 0-based as `i·k + j`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{binomial, check_vertex, Graph, GraphBuilder};

/// Flattened id of `(i, j)`, both 0-based.
pub fn cell(i: usize, j: usize, k: usize) -> usize {
    i * k + j
}

/// `(i, j)` of a flattened id.
pub fn uncell(v: usize, k: usize) -> (usize, usize) {
    (v / k, v % k)
}

fn check_rk(r: usize, k: usize) -> Result<()> {
    if r == 0 || k == 0 {
        return Err(Error::InvalidParameter("r and k must be at least 1".into()));
    }
    Ok(())
}

/// `(i,j) ~ (i',j')` iff `|i − i'| ≤ 1` and `j ≠ j'`.
pub fn backbone_graph(r: usize, k: usize) -> Result<Graph> {
    check_rk(r, k)?;
    let mut b = GraphBuilder::new(r * k);
    for i in 0..r {
        for i2 in i..(i + 2).min(r) {
            for j in 0..k {
                for j2 in 0..k {
                    if j != j2 {
                        b.add_edge(cell(i, j, k), cell(i2, j2, k))?;
                    }
                }
            }
        }
    }
    Ok(b.build())
}

/// `r` disjoint copies of `K_k`, one per column `{(i,1), …, (i,k)}`.
pub fn kkr_graph(r: usize, k: usize) -> Result<Graph> {
    check_rk(r, k)?;
    Ok(Graph::complete(k).copies(r))
}

/// A matrix `n_{i,j}` over `[r] × [k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerPartition {
    pub values: Vec<Vec<usize>>,
}

impl IntegerPartition {
    pub fn new(values: Vec<Vec<usize>>) -> Result<Self> {
        let k = values.first().map_or(0, Vec::len);
        if values.is_empty() || k == 0 || values.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidParameter("partition must be a nonempty r×k matrix".into()));
        }
        Ok(IntegerPartition { values })
    }

    /// Every cell equal to `value`.
    pub fn uniform(r: usize, k: usize, value: usize) -> Self {
        IntegerPartition { values: vec![vec![value; k]; r] }
    }

    /// `total` split as evenly as possible over `[r] × [k]`, larger cells first.
    pub fn equal(r: usize, k: usize, total: usize) -> Self {
        let cells = r * k;
        let values =
            (0..r).map(|i| (0..k).map(|j| total / cells + usize::from(cell(i, j, k) < total % cells)).collect()).collect();
        IntegerPartition { values }
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    pub fn k(&self) -> usize {
        self.values[0].len()
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.values[i][j]
    }

    pub fn total(&self) -> usize {
        self.values.iter().flatten().sum()
    }

    pub fn is_k_equitable(&self) -> bool {
        self.values.iter().all(|row| {
            let lo = row.iter().min().copied().unwrap_or(0);
            let hi = row.iter().max().copied().unwrap_or(0);
            hi - lo <= 1
        })
    }
}

/// `m_{i,j} = |V_{i,j}| + |V_0|/(kr)`, rounded so the result is k-equitable,
/// sums to `Σ|V_{i,j}| + |V_0|` and stays within 1 of the real target.
///
/// The `|V_0| mod kr` leftover units go to the smallest cells first (ties by
/// position), which keeps every already-equitable row equitable. Rows that
/// are not equitable to begin with cannot meet both constraints and are
/// rejected.
pub fn k_equitable_targets(cluster_sizes: &[Vec<usize>], v0_size: usize) -> Result<IntegerPartition> {
    let base = IntegerPartition::new(cluster_sizes.to_vec())?;
    if !base.is_k_equitable() {
        return Err(Error::InvalidParameter("cluster sizes are not k-equitable".into()));
    }
    let (r, k) = (base.r(), base.k());
    let cells = r * k;
    let (q, rem) = (v0_size / cells, v0_size % cells);
    let mut values: Vec<Vec<usize>> = base.values.iter().map(|row| row.iter().map(|&s| s + q).collect()).collect();
    let mut order: Vec<(usize, usize, usize)> =
        (0..r).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| (values[i][j], i, j)).collect();
    order.sort_unstable();
    for &(_, i, j) in order.iter().take(rem) {
        values[i][j] += 1;
    }
    let out = IntegerPartition { values };
    debug_assert!(out.is_k_equitable());
    debug_assert_eq!(out.total(), base.total() + v0_size);
    Ok(out)
}

/// A `k`-clique of a reduced graph; `members[l]` carries label `l + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelledClique {
    pub members: Vec<usize>,
}

impl LabelledClique {
    pub fn new(members: Vec<usize>) -> Self {
        LabelledClique { members }
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    /// Members distinct, in range and pairwise adjacent in `r`.
    pub fn is_valid_in(&self, r: &Graph) -> bool {
        let m = &self.members;
        m.iter().all(|&v| v < r.n()) && m.iter().enumerate().all(|(a, &u)| m[a + 1..].iter().all(|&v| u != v && r.has_edge(u, v)))
    }
}

/// Every cluster of `next` is adjacent in `r` to every differently-labelled
/// cluster of `prev`.
pub fn is_walk_step(r: &Graph, prev: &LabelledClique, next: &LabelledClique) -> bool {
    next.members.iter().enumerate().all(|(a, &u)| prev.members.iter().enumerate().all(|(b, &v)| a == b || r.has_edge(u, v)))
}

/// Number of cliques in a walk for clique size `k`: `C(k+1, 2)`.
pub fn walk_length(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Largest reduced graph on which the breadth-first fallback runs.
const BFS_VERTEX_LIMIT: usize = 40;
const BFS_STATE_LIMIT: usize = 200_000;

/// A walk `Z_1 = start, …, Z_{C(k+1,2)} = end` of labelled `k`-cliques in
/// which each clique is joined to its predecessor across labels.
///
/// Runs the replacement construction: for each label `j < k` and each
/// `i > j`, swap label `i` for the lowest-id common neighbour of the other
/// labels and of `end`'s label-`j` cluster, then swap in `end`'s label-`j`
/// cluster. That produces one clique more than `C(k+1,2)` (the final
/// clique of the construction already connects to `end`), so the walk is
/// shortened by dropping cliques whose neighbours connect directly, falling
/// back to a breadth-first search over labelled cliques on small `R`.
/// Walks that come out shorter are padded by repeating `start`.
pub fn clique_walk(r: &Graph, start: &LabelledClique, end: &LabelledClique, k: usize) -> Result<Vec<LabelledClique>> {
    for (name, z) in [("start", start), ("end", end)] {
        if z.k() != k || !z.is_valid_in(r) {
            return Err(Error::InvalidParameter(format!("{name} is not a labelled {k}-clique of R")));
        }
    }
    let target = walk_length(k);
    let mut walk = vec![start.clone()];
    let mut cur = start.members.clone();
    for j in 0..k.saturating_sub(1) {
        for i in j + 1..k {
            let mut required: Vec<usize> = cur.iter().enumerate().filter(|&(l, _)| l != i).map(|(_, &v)| v).collect();
            required.push(end.members[j]);
            required.sort_unstable();
            required.dedup();
            let w = r
                .common_neighbourhood(required.iter().copied())
                .ones()
                .next()
                .ok_or(Error::NoCommonNeighbour { step: walk.len() + 1, blocking: required })?;
            cur[i] = w;
            walk.push(LabelledClique::new(cur.clone()));
        }
        cur[j] = end.members[j];
        walk.push(LabelledClique::new(cur.clone()));
    }
    walk.push(end.clone());
    walk.dedup();
    debug_assert!(walk.windows(2).all(|w| is_walk_step(r, &w[0], &w[1])));

    // drop interior cliques while the walk is too long
    while walk.len() > target {
        match (1..walk.len() - 1).find(|&t| is_walk_step(r, &walk[t - 1], &walk[t + 1])) {
            Some(t) => {
                walk.remove(t);
            }
            None => break,
        }
    }
    if walk.len() > target {
        let found = walk.len();
        walk = shortest_walk(r, start, end, target).ok_or(Error::WalkTooLong { target, found })?;
    }
    while walk.len() < target {
        walk.insert(0, start.clone());
    }
    Ok(walk)
}

/// Breadth-first search for a shortest walk of at most `max_len` cliques.
fn shortest_walk(r: &Graph, start: &LabelledClique, end: &LabelledClique, max_len: usize) -> Option<Vec<LabelledClique>> {
    if r.n() > BFS_VERTEX_LIMIT || max_len == 0 {
        return None;
    }
    if start == end {
        return Some(vec![start.clone()]);
    }
    let mut parent: HashMap<LabelledClique, Option<LabelledClique>> = HashMap::new();
    let mut depth: HashMap<LabelledClique, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert(start.clone(), None);
    depth.insert(start.clone(), 1);
    queue.push_back(start.clone());
    while let Some(z) = queue.pop_front() {
        let dz = depth[&z];
        if is_walk_step(r, &z, end) {
            if dz + 1 > max_len {
                return None;
            }
            let mut path = vec![end.clone(), z.clone()];
            let mut at = z;
            while let Some(Some(p)) = parent.get(&at) {
                path.push(p.clone());
                at = p.clone();
            }
            path.reverse();
            return Some(path);
        }
        if dz + 2 > max_len || parent.len() > BFS_STATE_LIMIT {
            continue;
        }
        for next in successors(r, &z) {
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some(z.clone()));
                depth.insert(next.clone(), dz + 1);
                queue.push_back(next);
            }
        }
    }
    None
}

/// Every labelled clique that may follow `z` in a walk.
fn successors(r: &Graph, z: &LabelledClique) -> Vec<LabelledClique> {
    let k = z.k();
    let cands: Vec<Vec<usize>> = (0..k)
        .map(|a| r.common_neighbourhood(z.members.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &v)| v)).ones().collect())
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    fn rec(r: &Graph, cands: &[Vec<usize>], chosen: &mut Vec<usize>, out: &mut Vec<LabelledClique>) {
        if chosen.len() == cands.len() {
            out.push(LabelledClique::new(chosen.clone()));
            return;
        }
        for &w in &cands[chosen.len()] {
            if chosen.iter().all(|&u| u != w && r.has_edge(u, w)) {
                chosen.push(w);
                rec(r, cands, chosen, out);
                chosen.pop();
            }
        }
    }
    rec(r, &cands, &mut chosen, &mut out);
    out
}

/// Length `C(k+1,2)`, endpoints, clique validity and every step's cross
/// adjacency.
pub fn verify_clique_walk(r: &Graph, walk: &[LabelledClique], start: &LabelledClique, end: &LabelledClique) -> bool {
    let k = start.k();
    walk.len() == walk_length(k)
        && walk.first() == Some(start)
        && walk.last() == Some(end)
        && walk.iter().all(|z| z.k() == k && z.is_valid_in(r))
        && walk.windows(2).all(|w| is_walk_step(r, &w[0], &w[1]))
}

/// Edge count of `B^k_r`: `r·C(k,2) + (r−1)·k(k−1)`.
pub fn backbone_edge_count(r: usize, k: usize) -> usize {
    r * (binomial(k, 2) as usize) + r.saturating_sub(1) * k * (k - 1)
}

/// Some vertex `z_i` outside column `i` adjacent to the whole column, per
/// column; `None` where a column has no such vertex.
pub fn column_hubs(reduced: &Graph, r: usize, k: usize) -> Result<Vec<Option<usize>>> {
    if reduced.n() != r * k {
        return Err(Error::InvalidParameter("reduced graph is not on [r]×[k]".into()));
    }
    (0..r)
        .map(|i| {
            for j in 0..k {
                check_vertex(reduced, cell(i, j, k))?;
            }
            Ok(reduced.common_neighbourhood((0..k).map(|j| cell(i, j, k))).ones().find(|&z| uncell(z, k).0 != i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backbone_counts() {
        assert_eq!(backbone_graph(1, 2).unwrap().edge_count(), 1);
        assert_eq!(backbone_graph(2, 2).unwrap().edge_count(), 4);
        for r in 1..=8 {
            for k in 1..=8 {
                let b = backbone_graph(r, k).unwrap();
                let kk = kkr_graph(r, k).unwrap();
                assert_eq!(b.n(), r * k);
                assert_eq!(b.edge_count(), backbone_edge_count(r, k));
                assert_eq!(kk.edge_count(), r * k * (k - 1) / 2);
                assert!(kk.is_subgraph_of(&b));
            }
        }
        assert_eq!(kkr_graph(3, 1).unwrap().edge_count(), 0);
        assert_eq!(kkr_graph(2, 3).unwrap().edge_count(), 6);
    }

    #[test]
    fn backbone_adjacency_rule() {
        let (r, k) = (4, 3);
        let b = backbone_graph(r, k).unwrap();
        for u in 0..r * k {
            for v in 0..r * k {
                let ((i, j), (i2, j2)) = (uncell(u, k), uncell(v, k));
                assert_eq!(b.has_edge(u, v), i.abs_diff(i2) <= 1 && j != j2);
            }
        }
    }

    #[test]
    fn equitable_targets() {
        let same = k_equitable_targets(&[vec![4, 4], vec![5, 4]], 0).unwrap();
        assert_eq!(same.values, vec![vec![4, 4], vec![5, 4]]);
        let t = k_equitable_targets(&[vec![5, 5, 5]], 2).unwrap();
        assert_eq!(t.total(), 17);
        assert!(t.is_k_equitable());
        let t = k_equitable_targets(&[vec![10, 10], vec![10, 10]], 3).unwrap();
        assert_eq!(t.total(), 43);
        assert!(t.is_k_equitable());
        assert!(k_equitable_targets(&[vec![5, 9]], 1).is_err());
    }

    #[test]
    fn walks_in_complete_graph() {
        // a one-clique walk cannot join two different cliques
        let k1 = clique_walk(&Graph::complete(3), &LabelledClique::new(vec![0]), &LabelledClique::new(vec![2]), 1);
        assert!(matches!(k1, Err(Error::WalkTooLong { target: 1, found: 2 })));
        for k in 2..=5 {
            let r = Graph::complete(3 * k);
            let start = LabelledClique::new((0..k).collect());
            let end = LabelledClique::new((2 * k..3 * k).rev().collect());
            let walk = clique_walk(&r, &start, &end, k).unwrap();
            assert_eq!(walk.len(), walk_length(k));
            assert!(verify_clique_walk(&r, &walk, &start, &end));
            let same = clique_walk(&r, &start, &start, k).unwrap();
            assert!(verify_clique_walk(&r, &same, &start, &start));
        }
    }

    #[test]
    fn k2_walk_has_three_cliques() {
        let r = Graph::complete(6);
        let walk = clique_walk(&r, &LabelledClique::new(vec![0, 1]), &LabelledClique::new(vec![4, 5]), 2).unwrap();
        assert_eq!(walk.len(), 3);
    }

    #[test]
    fn verifier_rejects_missing_adjacency() {
        let r = Graph::complete(6);
        let start = LabelledClique::new(vec![0, 1]);
        let end = LabelledClique::new(vec![2, 3]);
        let walk = vec![start.clone(), LabelledClique::new(vec![4, 5]), end.clone()];
        assert!(verify_clique_walk(&r, &walk, &start, &end));
        let mut gb = GraphBuilder::from_graph(&r);
        gb.remove_edge(4, 1);
        assert!(!verify_clique_walk(&gb.build(), &walk, &start, &end));
    }

    #[test]
    fn missing_common_neighbour_is_reported() {
        // two disjoint triangles: no vertex sees both 0 and 3
        let r = Graph::complete(3).disjoint_union(&Graph::complete(3));
        let err = clique_walk(&r, &LabelledClique::new(vec![0, 1]), &LabelledClique::new(vec![3, 4]), 2).unwrap_err();
        assert!(matches!(err, Error::NoCommonNeighbour { .. }));
    }

    #[test]
    fn column_hub_lookup() {
        let b = backbone_graph(3, 2).unwrap();
        let hubs = column_hubs(&b, 3, 2).unwrap();
        assert!(hubs.iter().all(Option::is_none));
        let full = Graph::complete(6);
        assert!(column_hubs(&full, 3, 2).unwrap().iter().all(Option::is_some));
    }
}
