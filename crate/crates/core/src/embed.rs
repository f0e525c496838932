//! Partial embeddings, the bad-vertex pre-embedding, candidate-set greedy
//! embedding with backtracking and exact rooted subgraph search.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::backbone::{cell, column_hubs};
use crate::bandwidth::Labelling;
use crate::colouring::{neighbourhood_colour_count, Colouring};
use crate::error::{Error, Result};
use crate::graph::{check_set, full_set, has_clique_in, vertex_set, Graph, VertexSet};
use crate::partition::{Assignment, ClusterPartition};
use crate::rng;

/// A partial injective map `V(H) → V(G)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "EmbeddingRepr", try_from = "EmbeddingRepr")]
pub struct Embedding {
    map: Vec<Option<usize>>,
    inverse: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRepr {
    h_vertices: usize,
    g_vertices: usize,
    pairs: Vec<(usize, usize)>,
}

impl From<Embedding> for EmbeddingRepr {
    fn from(e: Embedding) -> Self {
        EmbeddingRepr { h_vertices: e.map.len(), g_vertices: e.inverse.len(), pairs: e.pairs() }
    }
}

impl TryFrom<EmbeddingRepr> for Embedding {
    type Error = Error;

    fn try_from(r: EmbeddingRepr) -> Result<Self> {
        Embedding::from_pairs(r.h_vertices, r.g_vertices, r.pairs)
    }
}

impl Embedding {
    pub fn new(h_vertices: usize, g_vertices: usize) -> Self {
        Embedding { map: vec![None; h_vertices], inverse: vec![None; g_vertices] }
    }

    pub fn from_pairs(h_vertices: usize, g_vertices: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e = Embedding::new(h_vertices, g_vertices);
        for (x, v) in pairs {
            e.assign(x, v)?;
        }
        Ok(e)
    }

    pub fn h_vertices(&self) -> usize {
        self.map.len()
    }

    pub fn g_vertices(&self) -> usize {
        self.inverse.len()
    }

    pub fn get(&self, x: usize) -> Option<usize> {
        self.map.get(x).copied().flatten()
    }

    pub fn preimage(&self, v: usize) -> Option<usize> {
        self.inverse.get(v).copied().flatten()
    }

    pub fn is_used(&self, v: usize) -> bool {
        self.preimage(v).is_some()
    }

    /// Maps `x ↦ v`; fails if either side is taken or out of range.
    pub fn assign(&mut self, x: usize, v: usize) -> Result<()> {
        if x >= self.map.len() {
            return Err(Error::VertexOutOfRange { vertex: x, n: self.map.len() });
        }
        if v >= self.inverse.len() {
            return Err(Error::VertexOutOfRange { vertex: v, n: self.inverse.len() });
        }
        if let Some(old) = self.map[x] {
            return Err(Error::InvalidParameter(format!("H-vertex {x} already mapped to {old}")));
        }
        if let Some(other) = self.inverse[v] {
            return Err(Error::InvalidParameter(format!("G-vertex {v} already the image of {other}")));
        }
        self.map[x] = Some(v);
        self.inverse[v] = Some(x);
        Ok(())
    }

    pub fn unassign(&mut self, x: usize) -> Option<usize> {
        let v = self.map.get_mut(x)?.take()?;
        self.inverse[v] = None;
        Some(v)
    }

    /// Mapped H-vertices, ascending.
    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.iter().enumerate().filter_map(|(x, v)| v.map(|_| x))
    }

    /// Used G-vertices, ascending.
    pub fn image(&self) -> impl Iterator<Item = usize> + '_ {
        self.inverse.iter().enumerate().filter_map(|(v, x)| x.map(|_| v))
    }

    pub fn len(&self) -> usize {
        self.map.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_total(&self) -> bool {
        self.map.iter().all(Option::is_some)
    }

    /// `(h_vertex, g_vertex)` sorted by H-vertex.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.map.iter().enumerate().filter_map(|(x, v)| v.map(|v| (x, v))).collect()
    }
}

/// Injective on its domain and every H-edge inside the domain lands on a
/// G-edge.
pub fn verify_embedding(h: &Graph, g: &Graph, e: &Embedding) -> bool {
    if e.h_vertices() != h.n() || e.g_vertices() != g.n() {
        return false;
    }
    // recheck injectivity from the forward map alone
    let mut seen = vec![false; g.n()];
    for (_, v) in e.pairs() {
        if std::mem::replace(&mut seen[v], true) {
            return false;
        }
    }
    h.edges().all(|(x, y)| match (e.get(x), e.get(y)) {
        (Some(a), Some(b)) => g.has_edge(a, b),
        _ => true,
    })
}

/// [`verify_embedding`] plus `Dom(φ) = V(H)`.
pub fn verify_total_embedding(h: &Graph, g: &Graph, e: &Embedding) -> bool {
    e.is_total() && verify_embedding(h, g, e)
}

/// Image restriction of a boundary vertex `y`: it must land in `i`, which
/// lies in the common G-neighbourhood of the restricting images `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionRecord {
    pub y: usize,
    pub j: Vec<usize>,
    pub i: Vec<usize>,
    /// Target cluster `(i, j)`, 0-based; `None` without a partition.
    pub target: Option<(usize, usize)>,
}

impl RestrictionRecord {
    /// `I ⊆ N_G(J) ∩ cluster`, `I` nonempty and `|J| + deg_H(y into the
    /// unembedded part) ≤ Δ(H)`.
    pub fn holds(&self, g: &Graph, h: &Graph, e: &Embedding, part: Option<&ClusterPartition>) -> bool {
        let common = g.common_neighbourhood(self.j.iter().copied());
        let in_cluster = |v: usize| match (self.target, part) {
            (Some((ti, tj)), Some(p)) => p.cluster(ti, tj).binary_search(&v).is_ok(),
            (None, _) => true,
            (Some(_), None) => false,
        };
        let free_degree = h.neighbours(self.y).ones().filter(|&z| e.get(z).is_none()).count();
        !self.i.is_empty()
            && self.i.iter().all(|&v| common.contains(v) && in_cluster(v))
            && self.j.len() + free_degree <= h.max_degree()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreEmbedConfig {
    /// Colour budget on the neighbourhood of each root.
    pub s: usize,
    /// Minimum H-distance from a new root to everything embedded so far.
    pub separation: usize,
    /// Fraction of V(G) sampled into `S`.
    pub mu: f64,
    pub seed: u64,
    /// Backtracks allowed while embedding one ball.
    pub ball_budget: u64,
}

impl PreEmbedConfig {
    pub fn new(s: usize, mu: f64, seed: u64) -> Self {
        PreEmbedConfig { s, separation: 2 * s + 2, mu, seed, ball_budget: 100_000 }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.s < 1 || self.s + 1 > k.max(2) {
            return Err(Error::InvalidParameter(format!("s = {} must lie in [1, k−1] with k = {k}", self.s)));
        }
        if self.separation < 2 * self.s + 2 {
            return Err(Error::InvalidParameter("separation must be at least 2s + 2".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidParameter("mu must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// A uniform `⌊μn⌋`-subset of `0..n`, sorted.
pub fn sample_set(n: usize, mu: f64, seed: u64) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    let take = ((mu * n as f64).floor() as usize).min(n);
    let mut out: Vec<usize> = all.partial_shuffle(&mut rng::stream(seed), take).0.to_vec();
    out.sort_unstable();
    out
}

/// One iteration of the pre-embedding loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreEmbedStep {
    /// The bad vertex covered in this step.
    pub v: usize,
    /// `|N_G(v) ∩ S ∩ Im(φ)|` when `v` was chosen.
    pub score: usize,
    pub root: usize,
    /// `Im(φ)` before the step, sorted.
    pub image_before: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreEmbedding {
    pub embedding: Embedding,
    pub records: Vec<RestrictionRecord>,
    pub steps: Vec<PreEmbedStep>,
}

/// Covers every vertex of `v0` by the root of a small ball of H.
///
/// Each step picks the uncovered bad vertex with most G-neighbours in
/// `S ∩ Im(φ)` (ties to the lowest id), a root of H whose neighbourhood
/// sees at most `s` colours and which is far from everything embedded,
/// maps the root onto the bad vertex and the radius-`s` ball into `S` by
/// backtracking over candidate sets. Vertices at distance `s + 1` get a
/// [`RestrictionRecord`]. With a partition, the records target the column
/// whose clusters see most of `N_G(v)`, colour `c ≥ 1` going to `(i, c)`
/// and colour 0 to the column's hub.
pub fn pre_embed(
    g: &Graph,
    h: &Graph,
    v0: &[usize],
    s_set: &[usize],
    col: &Colouring,
    part: Option<&ClusterPartition>,
    cfg: &PreEmbedConfig,
) -> Result<PreEmbedding> {
    cfg.validate(col.k())?;
    check_set(g, v0)?;
    check_set(g, s_set)?;
    col.check(h)?;
    let n = g.n();
    let sample = vertex_set(n, s_set.iter().copied());
    for &v in v0 {
        let mut nb = g.neighbours(v).clone();
        nb.intersect_with(&sample);
        if !has_clique_in(g, &nb, cfg.s) {
            return Err(Error::InvalidParameter(format!("bad vertex {v} has no {}-clique in N(v) ∩ S", cfg.s)));
        }
    }
    let hubs = match part {
        Some(p) => column_hubs(&p.reduced, p.r, p.k)?,
        None => Vec::new(),
    };
    let mut e = Embedding::new(h.n(), n);
    let mut records = Vec::new();
    let mut steps = Vec::new();
    let mut pending: Vec<usize> = v0.to_vec();
    pending.sort_unstable();
    pending.dedup();

    loop {
        pending.retain(|&v| !e.is_used(v));
        if pending.is_empty() {
            break;
        }
        let image: VertexSet = vertex_set(n, e.image());
        let score = |v: usize| {
            let mut s = g.neighbours(v).clone();
            s.intersect_with(&sample);
            s.intersect_with(&image);
            s.count_ones(..)
        };
        let mut v = pending[0];
        let mut best = score(v);
        for &u in &pending[1..] {
            let su = score(u);
            if su > best {
                best = su;
                v = u;
            }
        }

        let dist_dom = h.distances_from_set(e.domain());
        let root = (0..h.n())
            .find(|&x| {
                e.get(x).is_none()
                    && dist_dom[x].is_none_or(|d| d >= cfg.separation)
                    && neighbourhood_colour_count(h, col, x).is_ok_and(|c| c <= cfg.s)
            })
            .ok_or(Error::NoEligibleRoot)?;

        let allowed = {
            let mut a = sample.clone();
            a.insert(v);
            a.difference_with(&image);
            a
        };
        let dist = h.distances_from(root);
        let mut ball: Vec<usize> = (0..h.n()).filter(|&y| dist[y].is_some_and(|d| d <= cfg.s)).collect();
        ball.sort_by_key(|&y| (dist[y], y));
        let boundary: Vec<usize> = (0..h.n()).filter(|&y| dist[y] == Some(cfg.s + 1)).collect();

        // targets per colour
        let column = part.map(|p| {
            (0..p.r)
                .max_by_key(|&i| {
                    let hits: usize = (0..p.k)
                        .map(|j| p.cluster(i, j).iter().filter(|&&u| g.has_edge(v, u) && allowed.contains(u)).count())
                        .sum();
                    (hits, std::cmp::Reverse(i))
                })
                .expect("r ≥ 1")
        });
        let target_of = |y: usize| -> Option<(usize, usize)> {
            let (p, i) = (part?, column?);
            match col.colour(y) {
                0 => hubs[i].map(|z| (z / p.k, z % p.k)),
                c => Some((i, c - 1)),
            }
        };
        let cluster_set = |t: Option<(usize, usize)>| -> VertexSet {
            match (t, part) {
                (Some((i, j)), Some(p)) => vertex_set(n, p.cluster(i, j).iter().copied()),
                _ => full_set(n),
            }
        };
        let boundary_targets: Vec<(usize, Option<(usize, usize)>, VertexSet)> =
            boundary.iter().map(|&y| (y, target_of(y), cluster_set(target_of(y)))).collect();

        e.assign(root, v)?;
        let placed = embed_ball(
            g,
            h,
            &mut e,
            &ball[1..],
            &allowed,
            &boundary_targets,
            cfg.ball_budget,
            rng::derive_seed(cfg.seed, steps.len() as u64),
        );
        if let Err(y) = placed {
            return Err(Error::EmptyCandidates(y));
        }
        for (y, t, cl) in &boundary_targets {
            let j: Vec<usize> = h.neighbours(*y).ones().filter_map(|z| e.get(z)).collect();
            let mut i = g.common_neighbourhood(j.iter().copied());
            i.intersect_with(cl);
            i.intersect_with(&allowed);
            let used = vertex_set(n, e.image());
            i.difference_with(&used);
            records.push(RestrictionRecord { y: *y, j, i: i.ones().collect(), target: *t });
        }
        steps.push(PreEmbedStep { v, score: best, root, image_before: image.ones().collect() });
    }

    // roots pairwise far apart
    for (a, sa) in steps.iter().enumerate() {
        let d = h.distances_from(sa.root);
        if let Some(sb) = steps[a + 1..].iter().find(|sb| d[sb.root].is_some_and(|x| x < cfg.separation)) {
            return Err(Error::AssertionFailed(format!("roots {} and {} are too close", sa.root, sb.root)));
        }
    }
    Ok(PreEmbedding { embedding: e, records, steps })
}

/// Backtracking embedding of `order` into `allowed`, keeping every boundary
/// vertex's restriction set nonempty. `Err(y)` names the first vertex whose
/// candidate set emptied.
fn embed_ball(
    g: &Graph,
    h: &Graph,
    e: &mut Embedding,
    order: &[usize],
    allowed: &VertexSet,
    boundary: &[(usize, Option<(usize, usize)>, VertexSet)],
    budget: u64,
    seed: u64,
) -> std::result::Result<(), usize> {
    let mut rng = rng::stream(seed);
    let mut first_empty = None;
    let mut backtracks = 0u64;
    let candidates = |e: &Embedding, y: usize| -> Vec<usize> {
        let mut c = allowed.clone();
        for z in h.neighbours(y).ones() {
            if let Some(v) = e.get(z) {
                c.intersect_with(g.neighbours(v));
            }
        }
        c.ones().filter(|&v| !e.is_used(v)).collect()
    };
    let boundary_ok = |e: &Embedding| {
        boundary.iter().all(|(y, _, cl)| {
            let mut c = allowed.clone();
            c.intersect_with(cl);
            for z in h.neighbours(*y).ones() {
                if let Some(v) = e.get(z) {
                    c.intersect_with(g.neighbours(v));
                }
            }
            c.ones().any(|v| !e.is_used(v))
        })
    };
    let mut frames: Vec<(Vec<usize>, usize)> = Vec::new();
    loop {
        let depth = frames.len();
        let advance = if depth == order.len() {
            if boundary_ok(e) {
                return Ok(());
            }
            false
        } else {
            let mut c = candidates(e, order[depth]);
            if c.is_empty() {
                first_empty.get_or_insert(order[depth]);
                false
            } else {
                c.shuffle(&mut rng);
                e.assign(order[depth], c[0]).expect("candidate is free");
                frames.push((c, 1));
                true
            }
        };
        if advance {
            continue;
        }
        // backtrack to the deepest frame with an untried candidate
        loop {
            let top = frames.len();
            let Some((c, next)) = frames.last_mut() else {
                return Err(first_empty.unwrap_or(order.first().copied().unwrap_or(0)));
            };
            let y = order[top - 1];
            e.unassign(y);
            backtracks += 1;
            if backtracks > budget {
                // leave the embedding as it was before the ball
                for &z in order {
                    e.unassign(z);
                }
                return Err(first_empty.unwrap_or(y));
            }
            if *next < c.len() {
                e.assign(y, c[*next]).expect("candidate is free");
                *next += 1;
                break;
            }
            frames.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub backtrack_budget: u64,
    pub seed: u64,
}

/// Why the greedy embedder stopped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCert {
    /// First vertex whose candidate set emptied.
    pub vertex: usize,
    /// Search depth at which it emptied.
    pub depth: usize,
    pub backtracks: u64,
    /// `"budget"` or `"exhausted"`.
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum EmbedResult {
    Embedded { embedding: Embedding, backtracks: u64 },
    Failed(FailureCert),
}

impl EmbedResult {
    pub fn embedding(&self) -> Option<&Embedding> {
        match self {
            EmbedResult::Embedded { embedding, .. } => Some(embedding),
            EmbedResult::Failed(_) => None,
        }
    }

    pub fn backtracks(&self) -> u64 {
        match self {
            EmbedResult::Embedded { backtracks, .. } => *backtracks,
            EmbedResult::Failed(c) => c.backtracks,
        }
    }
}

/// Candidate-set greedy embedding of `h` into `g` with chronological
/// backtracking.
///
/// Restricted vertices go first, then the rest in labelling order. A
/// vertex's candidates are the free G-vertices adjacent to the images of
/// its embedded neighbours, cut down to `I` for restricted vertices. With
/// an assignment, vertices of the assigned cluster are tried first.
/// Candidates are shuffled by the seed, then tried least-constraining
/// first, and any choice that would empty a neighbour's candidate set is
/// skipped.
pub fn greedy_embed(
    h: &Graph,
    g: &Graph,
    lab: &Labelling,
    assignment: Option<(&Assignment, &ClusterPartition)>,
    restrictions: &[RestrictionRecord],
    start: Option<&Embedding>,
    cfg: &GreedyConfig,
) -> Result<EmbedResult> {
    let (nh, ng) = (h.n(), g.n());
    if lab.n() != nh {
        return Err(Error::InvalidParameter("labelling size differs from H".into()));
    }
    let mut e = match start {
        Some(s) if s.h_vertices() == nh && s.g_vertices() == ng => s.clone(),
        Some(_) => return Err(Error::InvalidParameter("start embedding has the wrong shape".into())),
        None => Embedding::new(nh, ng),
    };
    let mut base: Vec<Option<VertexSet>> = vec![None; nh];
    for rec in restrictions {
        if rec.i.is_empty() {
            return Err(Error::InvalidParameter(format!("restriction of {} is empty", rec.y)));
        }
        check_set(g, &rec.i)?;
        let set = vertex_set(ng, rec.i.iter().copied());
        match &mut base[rec.y] {
            Some(b) => b.intersect_with(&set),
            slot => *slot = Some(set),
        }
    }
    let preferred: Option<Vec<VertexSet>> = match assignment {
        Some((a, p)) => {
            if a.f.len() != nh || a.r != p.r || a.k != p.k {
                return Err(Error::InvalidParameter("assignment does not match H and the partition".into()));
            }
            let sets: Vec<VertexSet> = p.clusters.iter().flatten().map(|c| vertex_set(ng, c.iter().copied())).collect();
            Some(a.f.iter().map(|&(i, j)| sets[cell(i, j, p.k)].clone()).collect())
        }
        None => None,
    };
    let mut order: Vec<usize> = lab.order().iter().copied().filter(|&x| base[x].is_some()).collect();
    order.extend(lab.order().iter().copied().filter(|&x| base[x].is_none()));
    order.retain(|&x| e.get(x).is_none());

    let mut free = full_set(ng);
    for v in e.image() {
        free.set(v, false);
    }
    let mut rng = rng::stream(cfg.seed);
    let domain = |e: &Embedding, free: &VertexSet, y: usize| -> VertexSet {
        let mut d = base[y].clone().unwrap_or_else(|| full_set(ng));
        d.intersect_with(free);
        for z in h.neighbours(y).ones() {
            if let Some(v) = e.get(z) {
                d.intersect_with(g.neighbours(v));
            }
        }
        d
    };

    struct Frame {
        cands: Vec<usize>,
        next: usize,
    }
    let mut frames: Vec<Frame> = Vec::new();
    let mut backtracks = 0u64;
    let mut first_empty: Option<(usize, usize)> = None;
    let mut touched = vec![0usize; nh];
    for x in e.domain().collect::<Vec<_>>() {
        for z in h.neighbours(x).ones() {
            touched[z] += 1;
        }
    }
    let place = |e: &mut Embedding, free: &mut VertexSet, touched: &mut [usize], y: usize, v: usize| {
        e.assign(y, v).expect("candidate is free");
        free.set(v, false);
        for z in h.neighbours(y).ones() {
            touched[z] += 1;
        }
    };
    let unplace = |e: &mut Embedding, free: &mut VertexSet, touched: &mut [usize], y: usize| {
        let v = e.unassign(y).expect("frame vertex is placed");
        free.insert(v);
        for z in h.neighbours(y).ones() {
            touched[z] -= 1;
        }
    };

    loop {
        let depth = frames.len();
        if depth == order.len() {
            debug_assert!(verify_total_embedding(h, g, &e));
            return Ok(EmbedResult::Embedded { embedding: e, backtracks });
        }
        let y = order[depth];
        let dom = domain(&e, &free, y);
        // vertices already constrained by the embedding, and y's free neighbours
        let watch: Vec<(usize, bool, VertexSet)> = (0..nh)
            .filter(|&w| w != y && e.get(w).is_none() && (touched[w] > 0 || h.has_edge(w, y) || base[w].is_some()))
            .map(|w| (w, h.has_edge(w, y), domain(&e, &free, w)))
            .collect();
        let mut cands: Vec<(bool, usize, usize)> = dom
            .ones()
            .filter(|&c| {
                watch.iter().all(
                    |(_, adj, d)| {
                        if *adj {
                            d.ones().any(|u| u != c && g.has_edge(c, u))
                        } else {
                            d.ones().any(|u| u != c)
                        }
                    },
                )
            })
            .map(|c| {
                let off_cluster = preferred.as_ref().is_some_and(|p| !p[y].contains(c));
                let load = watch.iter().filter(|(_, adj, d)| !adj && d.contains(c)).count();
                (off_cluster, load, c)
            })
            .collect();
        cands.shuffle(&mut rng);
        cands.sort_by_key(|&(off, load, _)| (off, load));
        let cands: Vec<usize> = cands.into_iter().map(|(_, _, c)| c).collect();
        if let Some(&c) = cands.first() {
            place(&mut e, &mut free, &mut touched, y, c);
            frames.push(Frame { cands, next: 1 });
            continue;
        }
        first_empty.get_or_insert((y, depth));
        loop {
            let level = frames.len();
            let Some(top) = frames.last_mut() else {
                let (vertex, depth) = first_empty.unwrap_or((y, depth));
                return Ok(EmbedResult::Failed(FailureCert { vertex, depth, backtracks, reason: "exhausted".into() }));
            };
            let ty = order[level - 1];
            unplace(&mut e, &mut free, &mut touched, ty);
            backtracks += 1;
            if backtracks > cfg.backtrack_budget {
                let (vertex, depth) = first_empty.unwrap_or((ty, level - 1));
                return Ok(EmbedResult::Failed(FailureCert { vertex, depth, backtracks, reason: "budget".into() }));
            }
            if top.next < top.cands.len() {
                let c = top.cands[top.next];
                top.next += 1;
                place(&mut e, &mut free, &mut touched, ty, c);
                break;
            }
            frames.pop();
        }
    }
}

/// Outcome of a rooted search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootedSearch {
    Found(Vec<usize>),
    Absent,
    BudgetExhausted,
}

/// Largest pattern accepted by the rooted search.
pub const PATTERN_LIMIT: usize = 16;

/// A copy of `pattern` in `g` with `root ↦ anchor`, or `None` after an
/// exhausted search.
pub fn find_rooted_copy(g: &Graph, pattern: &Graph, root: usize, anchor: usize) -> Result<Option<Vec<usize>>> {
    match find_rooted_copy_with(g, pattern, root, anchor, None, None)? {
        RootedSearch::Found(m) => Ok(Some(m)),
        RootedSearch::Absent => Ok(None),
        RootedSearch::BudgetExhausted => unreachable!("no budget was set"),
    }
}

/// Rooted search with optional per-pattern-vertex domains (which must be
/// supersets of every copy's images to keep the search exact) and an
/// optional node budget.
///
/// Forward checking on bit sets; the next pattern vertex is the one with
/// the smallest candidate set.
pub fn find_rooted_copy_with(
    g: &Graph,
    pattern: &Graph,
    root: usize,
    anchor: usize,
    domains: Option<&[VertexSet]>,
    node_budget: Option<u64>,
) -> Result<RootedSearch> {
    let k = pattern.n();
    if k > PATTERN_LIMIT {
        return Err(Error::TooLarge { n: k, limit: PATTERN_LIMIT });
    }
    if root >= k {
        return Err(Error::VertexOutOfRange { vertex: root, n: k });
    }
    crate::graph::check_vertex(g, anchor)?;
    if domains.is_some_and(|d| d.len() != k) {
        return Err(Error::InvalidParameter("one domain per pattern vertex is required".into()));
    }
    let n = g.n();
    if k > n {
        return Ok(RootedSearch::Absent);
    }
    let base: Vec<VertexSet> = (0..k)
        .map(|w| {
            let mut d = domains.map_or_else(|| full_set(n), |ds| ds[w].clone());
            let need = pattern.degree(w);
            for v in 0..n {
                if g.degree(v) < need {
                    d.set(v, false);
                }
            }
            d
        })
        .collect();
    if !base[root].contains(anchor) {
        return Ok(RootedSearch::Absent);
    }
    struct Search<'a> {
        g: &'a Graph,
        pattern: &'a Graph,
        base: Vec<VertexSet>,
        map: Vec<Option<usize>>,
        used: VertexSet,
        nodes: u64,
        budget: Option<u64>,
    }
    impl Search<'_> {
        fn domain(&self, w: usize) -> VertexSet {
            let mut d = self.base[w].clone();
            d.difference_with(&self.used);
            for z in self.pattern.neighbours(w).ones() {
                if let Some(v) = self.map[z] {
                    d.intersect_with(self.g.neighbours(v));
                }
            }
            d
        }

        fn rec(&mut self, placed: usize) -> Option<bool> {
            if placed == self.map.len() {
                return Some(true);
            }
            self.nodes += 1;
            if self.budget.is_some_and(|b| self.nodes > b) {
                return None;
            }
            let mut best: Option<(usize, VertexSet)> = None;
            for w in 0..self.map.len() {
                if self.map[w].is_some() {
                    continue;
                }
                let d = self.domain(w);
                let size = d.count_ones(..);
                if size == 0 {
                    return Some(false);
                }
                if best.as_ref().is_none_or(|(_, b)| size < b.count_ones(..)) {
                    best = Some((w, d));
                }
            }
            let (w, d) = best.expect("an unplaced pattern vertex remains");
            for v in d.ones() {
                self.map[w] = Some(v);
                self.used.insert(v);
                let r = self.rec(placed + 1);
                self.used.set(v, false);
                if r != Some(false) {
                    return r;
                }
            }
            self.map[w] = None;
            Some(false)
        }
    }
    let mut s = Search { g, pattern, base, map: vec![None; k], used: VertexSet::with_capacity(n), nodes: 0, budget: node_budget };
    s.map[root] = Some(anchor);
    s.used.insert(anchor);
    Ok(match s.rec(1) {
        Some(true) => RootedSearch::Found(s.map.into_iter().map(|v| v.expect("complete")).collect()),
        Some(false) => RootedSearch::Absent,
        None => RootedSearch::BudgetExhausted,
    })
}

/// Domains for a rooted search derived from a vertex partition of `g`.
///
/// Any copy of `pattern` in `g` projects onto a homomorphism into the
/// quotient of `g` by `parts` (a loop wherever a part has an inner edge).
/// A pattern vertex can therefore only land in parts whose type some such
/// homomorphism with `root ↦ type(anchor)` assigns to it. The result is the
/// union of those parts per pattern vertex; an empty set proves absence.
pub fn quotient_domains(g: &Graph, pattern: &Graph, root: usize, anchor: usize, parts: &[Vec<usize>]) -> Result<Vec<VertexSet>> {
    let n = g.n();
    let t = parts.len();
    let mut type_of = vec![usize::MAX; n];
    for (i, p) in parts.iter().enumerate() {
        for &v in p {
            crate::graph::check_vertex(g, v)?;
            if type_of[v] != usize::MAX {
                return Err(Error::BadVertexSets(format!("vertex {v} is in two parts")));
            }
            type_of[v] = i;
        }
    }
    if let Some(v) = type_of.iter().position(|&x| x == usize::MAX) {
        return Err(Error::BadVertexSets(format!("vertex {v} is in no part")));
    }
    crate::graph::check_vertex(g, anchor)?;
    let mut q = vec![vec![false; t]; t];
    for (u, v) in g.edges() {
        q[type_of[u]][type_of[v]] = true;
        q[type_of[v]][type_of[u]] = true;
    }
    let k = pattern.n();
    let start: Vec<Vec<bool>> = (0..k).map(|w| (0..t).map(|x| w != root || x == type_of[anchor]).collect()).collect();
    let mut feasible = vec![vec![false; t]; k];
    for w in 0..k {
        for x in 0..t {
            if feasible[w][x] || !start[w][x] {
                continue;
            }
            let mut doms = start.clone();
            doms[w] = (0..t).map(|y| y == x).collect();
            if let Some(hom) = find_hom(pattern, &q, doms) {
                for (w2, &x2) in hom.iter().enumerate() {
                    feasible[w2][x2] = true;
                }
            }
        }
    }
    Ok((0..k)
        .map(|w| {
            if w == root {
                return if feasible[w][type_of[anchor]] { vertex_set(n, [anchor]) } else { VertexSet::with_capacity(n) };
            }
            vertex_set(n, (0..n).filter(|&v| feasible[w][type_of[v]]))
        })
        .collect())
}

/// A homomorphism `pattern → q` within the given type domains.
fn find_hom(pattern: &Graph, q: &[Vec<bool>], doms: Vec<Vec<bool>>) -> Option<Vec<usize>> {
    fn rec(pattern: &Graph, q: &[Vec<bool>], doms: &[Vec<bool>], map: &mut Vec<Option<usize>>) -> bool {
        let k = map.len();
        // most constrained unplaced vertex
        let mut best: Option<(usize, Vec<usize>)> = None;
        for w in 0..k {
            if map[w].is_some() {
                continue;
            }
            let opts: Vec<usize> = (0..q.len())
                .filter(|&x| doms[w][x] && pattern.neighbours(w).ones().all(|z| map[z].is_none_or(|y| q[x][y])))
                .collect();
            if opts.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|(_, b)| opts.len() < b.len()) {
                best = Some((w, opts));
            }
        }
        let Some((w, opts)) = best else { return true };
        for x in opts {
            map[w] = Some(x);
            if rec(pattern, q, doms, map) {
                return true;
            }
        }
        map[w] = None;
        false
    }
    let mut map = vec![None; pattern.n()];
    rec(pattern, q, &doms, &mut map).then(|| map.into_iter().map(|x| x.expect("complete")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::heuristic_labelling;
    use crate::graph::{generate_gnp, GnpParams};

    fn cfg(seed: u64) -> GreedyConfig {
        GreedyConfig { backtrack_budget: 100_000, seed }
    }

    #[test]
    fn embedding_bookkeeping() {
        let mut e = Embedding::new(3, 5);
        e.assign(0, 4).unwrap();
        assert!(e.assign(1, 4).is_err());
        assert!(e.assign(0, 3).is_err());
        e.assign(2, 1).unwrap();
        assert_eq!(e.pairs(), vec![(0, 4), (2, 1)]);
        assert_eq!(e.preimage(1), Some(2));
        assert_eq!(e.unassign(0), Some(4));
        assert!(!e.is_used(4));
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<Embedding>(&json).unwrap(), e);
    }

    #[test]
    fn verifier_basics() {
        let g = Graph::petersen();
        let id = Embedding::from_pairs(10, 10, (0..10).map(|v| (v, v))).unwrap();
        assert!(verify_total_embedding(&g, &g, &id));
        let mut bad = id.clone();
        bad.map[1] = Some(0);
        assert!(!verify_embedding(&g, &g, &bad));
        let half = Embedding::from_pairs(10, 10, [(0, 0)]).unwrap();
        assert!(verify_embedding(&g, &g, &half) && !verify_total_embedding(&g, &g, &half));
    }

    #[test]
    fn greedy_small_cases() {
        let c4 = Graph::cycle(4);
        let k4 = Graph::complete(4);
        let r = greedy_embed(&c4, &k4, &Labelling::identity(&c4), None, &[], None, &cfg(1)).unwrap();
        assert!(verify_total_embedding(&c4, &k4, r.embedding().unwrap()));
        let g = Graph::petersen();
        let r = greedy_embed(&g, &g, &heuristic_labelling(&g), None, &[], None, &cfg(2)).unwrap();
        assert!(verify_total_embedding(&g, &g, r.embedding().unwrap()));
        // a triangle does not fit in a bipartite host
        let r = greedy_embed(
            &Graph::complete(3),
            &Graph::complete_bipartite(2, 2),
            &Labelling::identity(&Graph::complete(3)),
            None,
            &[],
            None,
            &cfg(3),
        )
        .unwrap();
        assert!(matches!(r, EmbedResult::Failed(ref c) if c.reason == "exhausted"));
    }

    #[test]
    fn greedy_respects_restrictions() {
        let h = Graph::path(3);
        let g = Graph::complete(6);
        let rec = RestrictionRecord { y: 1, j: vec![], i: vec![5], target: None };
        let r = greedy_embed(&h, &g, &Labelling::identity(&h), None, &[rec], None, &cfg(4)).unwrap();
        assert_eq!(r.embedding().unwrap().get(1), Some(5));
    }

    #[test]
    fn rooted_copy_cases() {
        let k3 = Graph::complete(3);
        assert!(find_rooted_copy(&Graph::complete(5), &k3, 0, 2).unwrap().is_some());
        assert!(find_rooted_copy(&Graph::complete_bipartite(4, 4), &k3, 0, 1).unwrap().is_none());
        let m = find_rooted_copy(&Graph::petersen(), &Graph::cycle(5), 2, 7).unwrap().unwrap();
        assert_eq!(m[2], 7);
    }

    #[test]
    fn quotient_domains_prove_absence() {
        // K_{4,4}: quotient is a single edge, so no triangle anywhere
        let g = Graph::complete_bipartite(4, 4);
        let parts = vec![(0..4).collect(), (4..8).collect()];
        let d = quotient_domains(&g, &Graph::complete(3), 0, 0, &parts).unwrap();
        assert!(d.iter().all(|s| s.count_ones(..) == 0));
        // an even cycle maps, so the domains stay nonempty
        let d = quotient_domains(&g, &Graph::cycle(4), 0, 0, &parts).unwrap();
        assert!(d.iter().all(|s| s.count_ones(..) > 0));
        let found = find_rooted_copy_with(&g, &Graph::cycle(4), 0, 0, Some(&d), None).unwrap();
        assert!(matches!(found, RootedSearch::Found(_)));
    }

    #[test]
    fn pre_embed_empty_and_single() {
        let g = Graph::complete(30);
        let h = Graph::complete(4).copies(3);
        let col = Colouring::new((0..12).map(|v| 1 + v % 4).collect(), 4);
        let c = PreEmbedConfig::new(3, 0.5, 1);
        let s = sample_set(30, 0.5, 1);
        let out = pre_embed(&g, &h, &[], &s, &col, None, &c).unwrap();
        assert!(out.embedding.is_empty() && out.records.is_empty());
        let v = (0..30).find(|v| !s.contains(v)).unwrap();
        let out = pre_embed(&g, &h, &[v], &s, &col, None, &c).unwrap();
        assert_eq!(out.embedding.get(out.steps[0].root), Some(v));
        assert!(verify_embedding(&h, &g, &out.embedding));
        assert!(out.embedding.image().all(|u| u == v || s.contains(&u)));
    }

    #[test]
    fn pre_embed_boundary_records() {
        // paths of length 6: root 0 with s = 1 leaves vertex 2 on the boundary
        let h = Graph::path(6).copies(4);
        let g = generate_gnp(GnpParams { n: 60, p: 0.7, seed: 9 });
        let col = Colouring::new((0..24).map(|v| 1 + v % 2).collect(), 2);
        let mut c = PreEmbedConfig::new(1, 0.5, 3);
        c.separation = 4;
        let s = sample_set(60, 0.5, 3);
        let v0: Vec<usize> = (0..60).filter(|v| !s.contains(v)).take(2).collect();
        let out = pre_embed(&g, &h, &v0, &s, &col, None, &c).unwrap();
        assert_eq!(out.steps.len(), 2);
        assert!(!out.records.is_empty());
        for rec in &out.records {
            assert!(rec.holds(&g, &h, &out.embedding, None), "{rec:?}");
        }
    }
}
