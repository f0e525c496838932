//! Bandwidth labellings and the block structure used by zero-free colourings.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::colouring::Colouring;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest graph accepted by [`exact_bandwidth`].
pub const EXACT_BANDWIDTH_LIMIT: usize = 12;

/// A bijection from vertices to positions `0..n` with its realised bandwidth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labelling {
    order: Vec<usize>,
    position: Vec<usize>,
    bandwidth: usize,
}

impl Labelling {
    /// Builds the labelling that puts `order[i]` at position `i`.
    pub fn from_order(g: &Graph, order: Vec<usize>) -> Result<Self> {
        let n = g.n();
        if order.len() != n {
            return Err(Error::InvalidParameter(format!("labelling has {} entries for {} vertices", order.len(), n)));
        }
        let mut position = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(Error::InvalidParameter(format!("labelling is not a bijection at vertex {v}")));
            }
            position[v] = i;
        }
        let bandwidth = stretch(g, &position);
        Ok(Labelling { order, position, bandwidth })
    }

    /// Builds the labelling from a vertex → position map.
    pub fn from_positions(g: &Graph, position: &[usize]) -> Result<Self> {
        let n = g.n();
        let mut order = vec![usize::MAX; n];
        for (v, &p) in position.iter().enumerate() {
            if p >= n || order[p] != usize::MAX {
                return Err(Error::InvalidParameter(format!("position {p} repeated or out of range")));
            }
            order[p] = v;
        }
        Self::from_order(g, order)
    }

    pub fn identity(g: &Graph) -> Self {
        Self::from_order(g, (0..g.n()).collect()).expect("identity is a bijection")
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Vertices in position order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn positions(&self) -> &[usize] {
        &self.position
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Recomputes the maximum edge stretch against `g`.
    pub fn recompute_bandwidth(&self, g: &Graph) -> usize {
        stretch(g, &self.position)
    }
}

fn stretch(g: &Graph, position: &[usize]) -> usize {
    g.edges().map(|(u, v)| position[u].abs_diff(position[v])).max().unwrap_or(0)
}

/// Minimum bandwidth and a witness labelling, for graphs on at most
/// [`EXACT_BANDWIDTH_LIMIT`] vertices.
///
/// Tries bandwidths upward from `⌈Δ/2⌉` up to the heuristic's value; each
/// decision problem is a depth-first placement of vertices into positions
/// `0, 1, …` that prunes when a placed vertex forces an unplaced neighbour
/// past its deadline.
pub fn exact_bandwidth(g: &Graph) -> Result<(usize, Labelling)> {
    let n = g.n();
    if n > EXACT_BANDWIDTH_LIMIT {
        return Err(Error::TooLarge { n, limit: EXACT_BANDWIDTH_LIMIT });
    }
    let best = heuristic_labelling(g);
    let lower = if g.edge_count() == 0 { 0 } else { g.max_degree().div_ceil(2).max(1) };
    for b in lower..best.bandwidth() {
        let mut placer = Placer::new(g, b);
        if placer.place(0) {
            let lab = Labelling::from_order(g, placer.order)?;
            debug_assert!(lab.bandwidth() <= b);
            return Ok((lab.bandwidth(), lab));
        }
    }
    Ok((best.bandwidth(), best))
}

struct Placer<'a> {
    g: &'a Graph,
    b: usize,
    pos: Vec<Option<usize>>,
    order: Vec<usize>,
}

impl<'a> Placer<'a> {
    fn new(g: &'a Graph, b: usize) -> Self {
        Placer { g, b, pos: vec![None; g.n()], order: Vec::with_capacity(g.n()) }
    }

    fn place(&mut self, i: usize) -> bool {
        let n = self.g.n();
        if i == n {
            return true;
        }
        if !self.deadlines_feasible(i) {
            return false;
        }
        for v in 0..n {
            if self.pos[v].is_some() {
                continue;
            }
            let ok = self.g.neighbours(v).ones().all(|u| self.pos[u].is_none_or(|pu| i - pu <= self.b));
            if !ok {
                continue;
            }
            self.pos[v] = Some(i);
            self.order.push(v);
            if self.place(i + 1) {
                return true;
            }
            self.order.pop();
            self.pos[v] = None;
        }
        false
    }

    /// Every unplaced vertex with a placed neighbour at `p` must land by
    /// `p + b`; the `t`-th earliest deadline must be at least `i + t`.
    fn deadlines_feasible(&self, i: usize) -> bool {
        let mut deadlines: Vec<usize> = (0..self.g.n())
            .filter(|&v| self.pos[v].is_none())
            .filter_map(|v| self.g.neighbours(v).ones().filter_map(|u| self.pos[u]).min().map(|p| p + self.b))
            .collect();
        deadlines.sort_unstable();
        deadlines.iter().enumerate().all(|(t, &d)| d >= i + t)
    }
}

/// Reverse Cuthill–McKee labelling, components laid out consecutively.
///
/// Each component is tried from a pseudo-peripheral vertex and from its
/// minimum-degree vertices; the narrowest ordering wins.
pub fn heuristic_labelling(g: &Graph) -> Labelling {
    let degrees = g.degrees();
    let mut order = Vec::with_capacity(g.n());
    for comp in g.components() {
        let mut starts = vec![pseudo_peripheral(g, comp[0], &degrees)];
        let min_deg = comp.iter().map(|&v| degrees[v]).min().unwrap_or(0);
        starts.extend(comp.iter().copied().filter(|&v| degrees[v] == min_deg).take(8));
        starts.dedup();
        let best = starts
            .into_iter()
            .map(|s| {
                let mut o = cuthill_mckee(g, s, &degrees);
                o.reverse();
                let w = local_stretch(g, &o);
                (w, o)
            })
            .min_by_key(|(w, _)| *w)
            .map(|(_, o)| o)
            .expect("component is nonempty");
        order.extend(best);
    }
    Labelling::from_order(g, order).expect("ordering covers every vertex once")
}

fn cuthill_mckee(g: &Graph, start: usize, degrees: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; g.n()];
    let mut order = vec![start];
    seen[start] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        let mut next: Vec<usize> = g.neighbours(u).ones().filter(|&w| !seen[w]).collect();
        next.sort_by_key(|&w| (degrees[w], w));
        for w in next {
            seen[w] = true;
            order.push(w);
        }
    }
    order
}

fn pseudo_peripheral(g: &Graph, start: usize, degrees: &[usize]) -> usize {
    let mut v = start;
    let mut ecc = 0;
    for _ in 0..10 {
        let dist = g.distances_from(v);
        let far = dist.iter().filter_map(|d| *d).max().unwrap_or(0);
        if far <= ecc && ecc > 0 {
            break;
        }
        ecc = far;
        v = (0..g.n()).filter(|&w| dist[w] == Some(far)).min_by_key(|&w| (degrees[w], w)).unwrap_or(v);
    }
    v
}

fn local_stretch(g: &Graph, order: &[usize]) -> usize {
    let mut pos = std::collections::HashMap::with_capacity(order.len());
    for (i, &v) in order.iter().enumerate() {
        pos.insert(v, i);
    }
    order
        .iter()
        .flat_map(|&u| g.neighbours(u).ones().map(move |w| (u, w)))
        .map(|(u, w)| pos[&u].abs_diff(pos[&w]))
        .max()
        .unwrap_or(0)
}

/// The consecutive position blocks `{(t−1)·s, …, t·s − 1}` with
/// `s = ⌊4kβn⌋`; the last block may be shorter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub block_size: usize,
    pub blocks: Vec<Range<usize>>,
    /// Indices of blocks containing a colour-0 vertex.
    pub zero_blocks: Vec<usize>,
}

impl BlockDecomposition {
    pub fn new(col: &Colouring, lab: &Labelling, beta: f64, k: usize) -> Result<Self> {
        let n = lab.n();
        let raw = 4.0 * k as f64 * beta * n as f64;
        if !raw.is_finite() || raw < 1.0 {
            return Err(Error::InvalidParameter(format!("block size 4kβn = {raw} is below 1")));
        }
        let block_size = raw.floor() as usize;
        let blocks: Vec<Range<usize>> = (0..n).step_by(block_size).map(|s| s..(s + block_size).min(n)).collect();
        let zero_blocks = blocks
            .iter()
            .enumerate()
            .filter(|(_, r)| lab.order()[(*r).clone()].iter().any(|&v| col.colour(v) == 0))
            .map(|(t, _)| t)
            .collect();
        Ok(BlockDecomposition { block_size, blocks, zero_blocks })
    }

    /// Whether any `z` consecutive blocks contain at most one zero block.
    pub fn is_zero_free(&self, z: usize) -> bool {
        // two zero blocks share a window of z consecutive blocks iff their
        // indices differ by less than z
        self.zero_blocks.windows(2).all(|w| w[1] - w[0] >= z)
    }
}

/// Whether `col` is `(z, β)`-zero-free with respect to `lab`.
///
/// Properness of `col` is the caller's responsibility. A trailing partial
/// block counts as an ordinary block.
pub fn check_zero_free(col: &Colouring, lab: &Labelling, z: usize, beta: f64, k: usize) -> Result<bool> {
    if col.len() != lab.n() {
        return Err(Error::InvalidParameter("colouring and labelling sizes differ".into()));
    }
    if z == 0 {
        return Err(Error::InvalidParameter("window length z must be positive".into()));
    }
    Ok(BlockDecomposition::new(col, lab, beta, k)?.is_zero_free(z))
}

/// A random graph of bandwidth at most `bandwidth` under the identity
/// labelling, with a planted proper colouring.
///
/// Vertex colours are uniform in `1..=k`, except that `zeros` vertices taken
/// at random from the positions `zero_window` get colour 0. Each pair
/// `u < v` with `v − u ≤ bandwidth` and different colours is an edge with
/// probability `q`.
pub fn planted_banded_graph(
    n: usize,
    bandwidth: usize,
    k: usize,
    q: f64,
    zeros: usize,
    zero_window: Range<usize>,
    seed: u64,
) -> Result<(Graph, Colouring)> {
    use rand::seq::index::sample;
    use rand::Rng as _;
    if k < 1 || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter("need k ≥ 1 and q in [0,1]".into()));
    }
    if zero_window.end > n || zeros > zero_window.len() {
        return Err(Error::InvalidParameter("zero window does not fit".into()));
    }
    let mut rng = crate::rng::stream(seed);
    let mut colours: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=k)).collect();
    for i in sample(&mut rng, zero_window.len(), zeros) {
        colours[zero_window.start + i] = 0;
    }
    let mut b = crate::graph::GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..(u + bandwidth + 1).min(n) {
            if colours[u] != colours[v] && rng.gen_bool(q) {
                b.add_edge(u, v)?;
            }
        }
    }
    Ok((b.build(), Colouring::new(colours, k)))
}
