//! The MATCHSEQ game: blind conditional swaps that must force two hidden
//! defects on a graph to become adjacent.
//!
//! The player does not know where the defects are, so a strategy is judged
//! against every placement at once. [`PairState`] is the set of placements
//! that have not fused yet; a strategy wins when that set becomes empty.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple, connected, undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacent: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, normalizing edges to `(low, high)` and sorting them.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut list = Vec::new();
        let mut adjacent = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            if adjacent[a * n + b] {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            adjacent[a * n + b] = true;
            adjacent[b * n + a] = true;
            neighbors[a].push(b);
            neighbors[b].push(a);
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        let g = Graph {
            n,
            edges: list,
            adjacent,
            neighbors,
        };
        if g.bfs_order(0).len() != n {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Open chain `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("cycle needs 3 vertices, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        a < self.n && b < self.n && self.adjacent[a * self.n + b]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// Vertices in breadth-first order from `root`, neighbors ascending.
    pub fn bfs_order(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut order = vec![root];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
            i += 1;
        }
        order
    }

    /// All-pairs shortest path lengths.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|s| {
                let mut d = vec![usize::MAX; self.n];
                d[s] = 0;
                let mut q = VecDeque::from([s]);
                while let Some(v) = q.pop_front() {
                    for &w in &self.neighbors[v] {
                        if d[w] == usize::MAX {
                            d[w] = d[v] + 1;
                            q.push_back(w);
                        }
                    }
                }
                d
            })
            .collect()
    }

    /// Parses the edge-list text format: a vertex count, then one `u v`
    /// pair per line. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("missing vertex count".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => return Err(Error::Parse(format!("bad edge line {line:?}"))),
            }
        }
        Self::new(n, edges)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for (a, b) in &self.edges {
            writeln!(f, "{a} {b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    BfsMinimal,
    Constructive,
    Imported,
}

/// Ordered list of conditional swaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub edges: Vec<(usize, usize)>,
    pub provenance: Provenance,
}

impl Strategy {
    /// Edges are stored as `(min, max)`.
    pub fn new(edges: Vec<(usize, usize)>, provenance: Provenance) -> Self {
        let edges = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        Strategy { edges, provenance }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Indices into `graph.edges()`; fails on a non-edge.
    pub fn edge_indices(&self, graph: &Graph) -> Result<Vec<usize>> {
        self.edges
            .iter()
            .map(|&(a, b)| graph.edge_index(a, b).ok_or(Error::NotAnEdge(a, b)))
            .collect()
    }

    pub fn from_edge_indices(graph: &Graph, indices: &[usize], provenance: Provenance) -> Result<Self> {
        let edges = indices
            .iter()
            .map(|&i| {
                graph
                    .edges()
                    .get(i)
                    .copied()
                    .ok_or(Error::OutOfRange { index: i, len: graph.edges().len() })
            })
            .collect::<Result<_>>()?;
        Ok(Strategy { edges, provenance })
    }
}

/// Set of surviving (not yet fused) nonadjacent defect placements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairState {
    bits: Box<[u64]>,
}

impl PairState {
    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn contains(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let t = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + t)
            })
        })
    }
}

const FUSED: u32 = u32::MAX;

/// A graph with precomputed swap actions on every defect placement.
#[derive(Debug, Clone)]
pub struct PairGame {
    graph: Graph,
    pairs: Vec<(usize, usize)>,
    index: Vec<u32>,
    /// `transitions[e][p]`: image of placement `p` under swap `e`, or `FUSED`.
    transitions: Vec<Vec<u32>>,
}

impl PairGame {
    pub fn new(graph: &Graph) -> Self {
        let n = graph.vertex_count();
        let mut pairs = Vec::new();
        let mut index = vec![FUSED; n * n];
        for a in 0..n {
            for b in a + 1..n {
                if !graph.is_adjacent(a, b) {
                    index[a * n + b] = pairs.len() as u32;
                    index[b * n + a] = pairs.len() as u32;
                    pairs.push((a, b));
                }
            }
        }
        let transitions = graph
            .edges()
            .iter()
            .map(|&(u, v)| {
                let swap = |x: usize| if x == u { v } else if x == v { u } else { x };
                pairs
                    .iter()
                    .map(|&(a, b)| index[swap(a) * n + swap(b)])
                    .collect()
            })
            .collect();
        PairGame {
            graph: graph.clone(),
            pairs,
            index,
            transitions,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    fn empty_state(&self) -> PairState {
        PairState {
            bits: vec![0u64; self.pairs.len().div_ceil(64).max(1)].into_boxed_slice(),
        }
    }

    /// Every nonadjacent placement; adjacent placements fuse at `t = 0`.
    pub fn initial(&self) -> PairState {
        let mut s = self.empty_state();
        for i in 0..self.pairs.len() {
            s.insert(i);
        }
        s
    }

    pub fn state_of(&self, placements: &[(usize, usize)]) -> Result<PairState> {
        let n = self.graph.vertex_count();
        let mut s = self.empty_state();
        for &(a, b) in placements {
            if a >= n || b >= n || a == b {
                return Err(Error::OutOfRange { index: a.max(b), len: n });
            }
            let i = self.index[a * n + b];
            if i != FUSED {
                s.insert(i as usize);
            }
        }
        Ok(s)
    }

    /// Surviving placements in ascending order.
    pub fn placements(&self, state: &PairState) -> Vec<(usize, usize)> {
        state.iter().map(|i| self.pairs[i]).collect()
    }

    pub fn step_index(&self, state: &PairState, edge: usize) -> PairState {
        let table = &self.transitions[edge];
        let mut next = self.empty_state();
        for i in state.iter() {
            let j = table[i];
            if j != FUSED {
                next.insert(j as usize);
            }
        }
        next
    }

    /// Applies the conditional swap on `edge` to every surviving placement.
    pub fn step(&self, state: &PairState, edge: (usize, usize)) -> Result<PairState> {
        let e = self
            .graph
            .edge_index(edge.0, edge.1)
            .ok_or(Error::NotAnEdge(edge.0, edge.1))?;
        Ok(self.step_index(state, e))
    }

    /// Placements that survive the whole strategy.
    pub fn survivors(&self, strategy: &Strategy) -> Result<PairState> {
        let mut s = self.initial();
        for e in strategy.edge_indices(&self.graph)? {
            if s.is_empty() {
                break;
            }
            s = self.step_index(&s, e);
        }
        Ok(s)
    }

    pub fn wins(&self, strategy: &Strategy) -> Result<bool> {
        Ok(self.survivors(strategy)?.is_empty())
    }

    pub fn wins_indices(&self, edges: &[usize]) -> bool {
        let mut s = self.initial();
        for &e in edges {
            if s.is_empty() {
                return true;
            }
            s = self.step_index(&s, e);
        }
        s.is_empty()
    }

    fn contains(&self, state: &PairState, a: usize, b: usize) -> bool {
        let i = self.index[a * self.graph.vertex_count() + b];
        i != FUSED && state.contains(i as usize)
    }
}

/// Whether `strategy` fuses every nonadjacent placement on `graph`.
pub fn winning(graph: &Graph, strategy: &Strategy) -> Result<bool> {
    PairGame::new(graph).wins(strategy)
}

/// Minimum-length winning strategy by breadth-first search over
/// [`PairState`]s. Among equal-length strategies the lexicographically
/// smallest edge-index sequence is returned.
pub fn pairing_number_bfs(graph: &Graph, budget: usize) -> Result<(usize, Strategy)> {
    let game = PairGame::new(graph);
    let start = game.initial();
    if start.is_empty() {
        return Ok((0, Strategy::new(Vec::new(), Provenance::BfsMinimal)));
    }
    // Node list in discovery order: (state, parent, edge taken).
    let mut nodes: Vec<(PairState, usize, usize)> = vec![(start.clone(), usize::MAX, usize::MAX)];
    let mut visited: HashMap<PairState, usize> = HashMap::from([(start, 0)]);
    let mut head = 0;
    while head < nodes.len() {
        let current = nodes[head].0.clone();
        for e in 0..graph.edges().len() {
            let next = game.step_index(&current, e);
            if visited.contains_key(&next) {
                continue;
            }
            if next.is_empty() {
                let mut path = vec![e];
                let mut at = head;
                while nodes[at].1 != usize::MAX {
                    path.push(nodes[at].2);
                    at = nodes[at].1;
                }
                path.reverse();
                let strategy = Strategy::from_edge_indices(graph, &path, Provenance::BfsMinimal)?;
                return Ok((path.len(), strategy));
            }
            if nodes.len() >= budget {
                return Err(Error::OutOfBudget(budget));
            }
            visited.insert(next.clone(), nodes.len());
            nodes.push((next, head, e));
        }
        head += 1;
    }
    Err(Error::InvalidGraph("no winning strategy exists".into()))
}

/// Shortest path from `from` to `to` using only vertices in `allowed`.
fn path_within(graph: &Graph, allowed: &[bool], from: usize, to: usize) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut prev = vec![usize::MAX; n];
    prev[from] = from;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        if v == to {
            break;
        }
        for &w in graph.neighbors(v) {
            if allowed[w] && prev[w] == usize::MAX {
                prev[w] = v;
                q.push_back(w);
            }
        }
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

/// Winning strategy built one vertex at a time.
///
/// Vertices are added in breadth-first order from vertex 0, so each new
/// vertex `v*` has a neighbor `u` among those already present. After the
/// strategy for the old graph has run, at most one defect can remain
/// outside `v*`. For each old vertex `v'` the defect (if it sits on `v'`)
/// is walked along a shortest path to `u`, where it meets `v*`, and the
/// walk is undone so the next candidate starts from an unchanged
/// configuration. The undo after the last candidate is dropped.
pub fn constructive_strategy(graph: &Graph) -> Strategy {
    let order = graph.bfs_order(0);
    let mut present = vec![false; graph.vertex_count()];
    let mut edges = Vec::new();
    for (k, &new) in order.iter().enumerate() {
        if k >= 2 {
            let anchor = *order[..k]
                .iter()
                .find(|&&w| graph.is_adjacent(w, new))
                .expect("breadth-first order keeps the added vertices connected");
            let candidates: Vec<usize> = order[..k]
                .iter()
                .copied()
                .filter(|&w| w != anchor && !graph.is_adjacent(w, new))
                .collect();
            for (i, &start) in candidates.iter().enumerate() {
                let path = path_within(graph, &present, start, anchor);
                let walk: Vec<(usize, usize)> = path.windows(2).map(|w| (w[0], w[1])).collect();
                edges.extend(walk.iter().copied());
                if i + 1 < candidates.len() {
                    edges.extend(walk.iter().rev().copied());
                }
            }
        }
        present[new] = true;
    }
    Strategy::new(edges, Provenance::Constructive)
}

/// Largest graph distance any lone defect reaches from its start.
pub fn mixing_distance(graph: &Graph, strategy: &Strategy) -> usize {
    let dist = graph.distances();
    (0..graph.vertex_count())
        .map(|start| {
            let mut at = start;
            let mut far = 0;
            for &(a, b) in &strategy.edges {
                if at == a {
                    at = b;
                } else if at == b {
                    at = a;
                }
                far = far.max(dist[start][at]);
            }
            far
        })
        .max()
        .unwrap_or(0)
}

/// Smallest surviving placement, if any.
pub fn first_survivor(game: &PairGame, state: &PairState) -> Option<(usize, usize)> {
    state.iter().next().map(|i| game.pairs[i])
}

#[doc(hidden)]
pub fn survives(game: &PairGame, state: &PairState, a: usize, b: usize) -> bool {
    game.contains(state, a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strat(edges: &[(usize, usize)]) -> Strategy {
        Strategy::new(edges.to_vec(), Provenance::Imported)
    }

    #[test]
    fn single_swap_fuses_path_three() {
        let g = Graph::path(3).unwrap();
        let game = PairGame::new(&g);
        let s = game.state_of(&[(0, 2)]).unwrap();
        assert!(game.step(&s, (0, 1)).unwrap().is_empty());
    }

    #[test]
    fn untouched_placement_is_unchanged() {
        let g = Graph::path(6).unwrap();
        let game = PairGame::new(&g);
        let s = game.state_of(&[(0, 2)]).unwrap();
        assert_eq!(game.step(&s, (4, 5)).unwrap(), s);
    }

    #[test]
    fn step_on_path_four() {
        let g = Graph::path(4).unwrap();
        let game = PairGame::new(&g);
        let s = game.state_of(&[(0, 2), (0, 3), (1, 3)]).unwrap();
        let next = game.step(&s, (1, 2)).unwrap();
        assert_eq!(game.placements(&next), vec![(0, 3)]);
    }

    #[test]
    fn step_rejects_non_edges() {
        let g = Graph::path(4).unwrap();
        let game = PairGame::new(&g);
        assert_eq!(game.step(&game.initial(), (0, 2)), Err(Error::NotAnEdge(0, 2)));
        assert!(winning(&g, &strat(&[(0, 3)])).is_err());
    }

    #[test]
    fn complete_graph_is_won_vacuously() {
        let g = Graph::complete(3).unwrap();
        assert!(winning(&g, &strat(&[])).unwrap());
        assert_eq!(pairing_number_bfs(&Graph::complete(4).unwrap(), 10).unwrap().0, 0);
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(3, [(0, 1)]).is_err());
        assert!(Graph::new(2, [(0, 0)]).is_err());
        assert!(Graph::new(2, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
        let g = Graph::parse("# square\n4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
        assert_eq!(g, Graph::cycle(4).unwrap());
        assert_eq!(Graph::parse(&g.to_string()).unwrap(), g);
        assert!(Graph::parse("3\n0 1 2\n").is_err());
    }

    #[test]
    fn bfs_small_paths() {
        for (n, expected) in [(3, 1), (4, 3), (5, 6)] {
            let g = Graph::path(n).unwrap();
            let (len, s) = pairing_number_bfs(&g, 1 << 20).unwrap();
            assert_eq!(len, expected, "path {n}");
            assert!(winning(&g, &s).unwrap());
        }
    }

    #[test]
    fn bfs_budget_is_reported() {
        let g = Graph::path(7).unwrap();
        assert_eq!(pairing_number_bfs(&g, 10), Err(Error::OutOfBudget(10)));
    }

    #[test]
    fn single_edge_needs_nothing() {
        let g = Graph::path(2).unwrap();
        assert!(constructive_strategy(&g).is_empty());
        assert!(constructive_strategy(&Graph::path(1).unwrap()).is_empty());
    }

    #[test]
    fn constructive_grid_wins() {
        let g = Graph::grid(3, 3).unwrap();
        let s = constructive_strategy(&g);
        assert!(winning(&g, &s).unwrap());
        assert!(s.len() <= 9 * 9 * 9);
    }

    #[test]
    fn mixing_distance_basics() {
        let g = Graph::path(6).unwrap();
        assert_eq!(mixing_distance(&g, &strat(&[])), 0);
        assert_eq!(mixing_distance(&g, &strat(&[(0, 1), (1, 2), (2, 3)])), 3);
    }

    #[test]
    fn strategy_edge_index_round_trip() {
        let g = Graph::grid(2, 3).unwrap();
        let s = constructive_strategy(&g);
        let idx = s.edge_indices(&g).unwrap();
        let back = Strategy::from_edge_indices(&g, &idx, Provenance::Constructive).unwrap();
        assert_eq!(back, s);
        assert!(Strategy::from_edge_indices(&g, &[99], Provenance::Imported).is_err());
    }
}
