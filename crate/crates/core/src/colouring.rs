//! Proper colourings with colours `0..=k`; colour 0 is the zero colour.

use serde::{Deserialize, Serialize};

use crate::bandwidth::Labelling;
use crate::error::{Error, Result};
use crate::graph::{check_vertex, Graph};

/// Node budget for the exact backtracking colourer on large graphs.
const EXACT_NODE_BUDGET: u64 = 2_000_000;
/// Up to this size the exact colourer runs without a budget.
pub const EXACT_COLOURING_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Colouring {
    colours: Vec<usize>,
    k: usize,
}

impl Colouring {
    /// Wraps a colour vector; values above `k` are allowed here and caught
    /// by [`Colouring::check`].
    pub fn new(colours: Vec<usize>, k: usize) -> Self {
        Colouring { colours, k }
    }

    pub fn colour(&self, v: usize) -> usize {
        self.colours[v]
    }

    pub fn colours(&self) -> &[usize] {
        &self.colours
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    /// First monochromatic edge, if any.
    pub fn conflict(&self, g: &Graph) -> Option<(usize, usize)> {
        g.edges().find(|&(u, v)| self.colours[u] == self.colours[v])
    }

    /// Size matches, colours lie in `0..=k` and no edge is monochromatic.
    pub fn check(&self, g: &Graph) -> Result<()> {
        if self.colours.len() != g.n() {
            return Err(Error::InvalidParameter(format!(
                "colouring covers {} vertices, graph has {}",
                self.colours.len(),
                g.n()
            )));
        }
        if let Some(v) = self.colours.iter().position(|&c| c > self.k) {
            return Err(Error::InvalidParameter(format!("vertex {v} has colour above {}", self.k)));
        }
        if let Some((u, v)) = self.conflict(g) {
            return Err(Error::InvalidParameter(format!("edge {u}-{v} is monochromatic")));
        }
        Ok(())
    }

    /// Vertices of each colour `0..=k`.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k + 1];
        for (v, &c) in self.colours.iter().enumerate() {
            if c <= self.k {
                out[c].push(v);
            }
        }
        out
    }
}

/// Number of distinct colours on `N(v)`.
pub fn neighbourhood_colour_count(h: &Graph, col: &Colouring, v: usize) -> Result<usize> {
    check_vertex(h, v)?;
    let mut seen = std::collections::BTreeSet::new();
    for u in h.neighbours(v).ones() {
        seen.insert(col.colour(u));
    }
    Ok(seen.len())
}

/// A proper colouring of `h` with colours `0..=k`.
///
/// Greedy first-fit in labelling order, preferring colours `1..=k` so that
/// the zero colour is used only when forced. Falls back to DSATUR, then to
/// exact backtracking (unbudgeted up to [`EXACT_COLOURING_LIMIT`] vertices).
pub fn proper_colouring(h: &Graph, k: usize, lab: &Labelling) -> Result<Colouring> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if lab.n() != h.n() {
        return Err(Error::InvalidParameter("labelling size differs from graph".into()));
    }
    let palette: Vec<usize> = (1..=k).chain(std::iter::once(0)).collect();
    let found =
        greedy(h, lab.order(), &palette).or_else(|| dsatur(h, k + 1).map(|c| c.into_iter().map(|x| palette[x]).collect()));
    let colours = match found {
        Some(c) => c,
        None => {
            let budget = (h.n() > EXACT_COLOURING_LIMIT).then_some(EXACT_NODE_BUDGET);
            match exact_colouring(h, k + 1, budget) {
                Exact::Found(c) => c.into_iter().map(|x| palette[x]).collect(),
                Exact::Infeasible => {
                    return Err(Error::ColouringNotFound {
                        k,
                        reason: format!("exact search proves chromatic number exceeds {}", k + 1),
                    })
                }
                Exact::BudgetExhausted => return Err(Error::ColouringNotFound { k, reason: "search budget exhausted".into() }),
            }
        }
    };
    let col = Colouring::new(colours, k);
    assert!(col.check(h).is_ok(), "colourer returned an improper colouring");
    Ok(col)
}

fn greedy(h: &Graph, order: &[usize], palette: &[usize]) -> Option<Vec<usize>> {
    let mut colours = vec![usize::MAX; h.n()];
    let mut used = vec![false; palette.len()];
    for &v in order {
        used.iter_mut().for_each(|u| *u = false);
        for u in h.neighbours(v).ones() {
            if let Some(idx) = palette.iter().position(|&c| c == colours[u]) {
                used[idx] = true;
            }
        }
        let idx = used.iter().position(|&u| !u)?;
        colours[v] = palette[idx];
    }
    Some(colours)
}

/// DSATUR with colours `0..limit`; `None` if it needs more.
fn dsatur(h: &Graph, limit: usize) -> Option<Vec<usize>> {
    let n = h.n();
    let mut colours = vec![usize::MAX; n];
    let mut sat: Vec<Vec<bool>> = vec![vec![false; limit]; n];
    let mut sat_count = vec![0usize; n];
    for _ in 0..n {
        let v =
            (0..n).filter(|&v| colours[v] == usize::MAX).max_by_key(|&v| (sat_count[v], h.degree(v), std::cmp::Reverse(v)))?;
        let c = (0..limit).find(|&c| !sat[v][c])?;
        colours[v] = c;
        for u in h.neighbours(v).ones() {
            if !sat[u][c] {
                sat[u][c] = true;
                sat_count[u] += 1;
            }
        }
    }
    Some(colours)
}

enum Exact {
    Found(Vec<usize>),
    Infeasible,
    BudgetExhausted,
}

/// Backtracking over colours `0..limit`, DSATUR vertex order, new colours
/// opened one at a time to break the palette symmetry.
fn exact_colouring(h: &Graph, limit: usize, budget: Option<u64>) -> Exact {
    struct State<'a> {
        h: &'a Graph,
        limit: usize,
        colours: Vec<usize>,
        nodes: u64,
        budget: Option<u64>,
    }
    fn rec(s: &mut State, placed: usize, opened: usize) -> Option<bool> {
        let n = s.h.n();
        if placed == n {
            return Some(true);
        }
        s.nodes += 1;
        if s.budget.is_some_and(|b| s.nodes > b) {
            return None;
        }
        // most saturated uncoloured vertex
        let mut best = None;
        let mut best_key = (0, 0);
        for v in 0..n {
            if s.colours[v] != usize::MAX {
                continue;
            }
            let mut seen = vec![false; s.limit];
            for u in s.h.neighbours(v).ones() {
                if s.colours[u] != usize::MAX {
                    seen[s.colours[u]] = true;
                }
            }
            let key = (seen.iter().filter(|&&b| b).count(), s.h.degree(v));
            if best.is_none() || key > best_key {
                best = Some((v, seen));
                best_key = key;
            }
        }
        let (v, seen) = best.expect("an uncoloured vertex remains");
        for c in 0..(opened + 1).min(s.limit) {
            if seen[c] {
                continue;
            }
            s.colours[v] = c;
            match rec(s, placed + 1, opened.max(c + 1)) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            s.colours[v] = usize::MAX;
        }
        Some(false)
    }
    let mut s = State { h, limit, colours: vec![usize::MAX; h.n()], nodes: 0, budget };
    match rec(&mut s, 0, 0) {
        Some(true) => Exact::Found(s.colours),
        Some(false) => Exact::Infeasible,
        None => Exact::BudgetExhausted,
    }
}

/// Chromatic number by exact search; `None` above [`EXACT_COLOURING_LIMIT`].
pub fn chromatic_number(h: &Graph) -> Option<usize> {
    if h.n() > EXACT_COLOURING_LIMIT {
        return None;
    }
    (0..=h.n()).find(|&c| matches!(exact_colouring(h, c, None), Exact::Found(_)))
}

/// Calls `visit` on every proper colouring of `h` with colours `0..q`.
pub fn for_each_colouring(h: &Graph, q: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(h: &Graph, q: usize, v: usize, colours: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if v == h.n() {
            visit(colours);
            return;
        }
        for c in 0..q {
            if h.neighbours(v).ones().filter(|&u| u < v).all(|u| colours[u] != c) {
                colours[v] = c;
                rec(h, q, v + 1, colours, visit);
            }
        }
        colours[v] = usize::MAX;
    }
    let mut colours = vec![usize::MAX; h.n()];
    rec(h, q, 0, &mut colours, &mut visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::heuristic_labelling;

    #[test]
    fn bipartite_cycle_two_colours() {
        let g = Graph::cycle(6);
        let col = proper_colouring(&g, 1, &Labelling::identity(&g)).unwrap();
        assert!(col.colours().iter().all(|&c| c <= 1));
        assert!(col.check(&g).is_ok());
    }

    #[test]
    fn petersen_needs_three() {
        let g = Graph::petersen();
        assert_eq!(chromatic_number(&g), Some(3));
        let col = proper_colouring(&g, 2, &heuristic_labelling(&g)).unwrap();
        assert!(col.check(&g).is_ok());
        assert!(proper_colouring(&g, 1, &heuristic_labelling(&g)).is_err());
    }

    #[test]
    fn exact_fallback_finds_hard_colouring() {
        // greedy in identity order on a crown graph uses many colours
        let n = 6;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((i, n + j));
                }
            }
        }
        let crown = Graph::from_edges(2 * n, edges).unwrap();
        let order: Vec<usize> = (0..n).flat_map(|i| [i, n + i]).collect();
        let lab = Labelling::from_order(&crown, order).unwrap();
        let col = proper_colouring(&crown, 1, &lab).unwrap();
        assert!(col.check(&crown).is_ok());
    }

    #[test]
    fn clique_needs_k_plus_one() {
        let g = Graph::complete(5);
        let lab = Labelling::identity(&g);
        assert!(proper_colouring(&g, 4, &lab).is_ok());
        assert!(matches!(proper_colouring(&g, 3, &lab), Err(Error::ColouringNotFound { .. })));
    }

    #[test]
    fn neighbourhood_colours() {
        let star = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        let col = proper_colouring(&star, 1, &Labelling::identity(&star)).unwrap();
        assert_eq!(neighbourhood_colour_count(&star, &col, 0).unwrap(), 1);
        let g = Graph::empty(3);
        assert_eq!(neighbourhood_colour_count(&g, &Colouring::new(vec![0; 3], 1), 1).unwrap(), 0);
    }

    #[test]
    fn colouring_count_of_triangle() {
        let mut count = 0;
        for_each_colouring(&Graph::complete(3), 3, |_| count += 1);
        assert_eq!(count, 6);
    }
}
