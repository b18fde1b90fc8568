//! Sparse undirected graphs in compressed sparse row form, plus the
//! elementary passes everything else is built on: connected components,
//! induced subgraphs, unions and degrees.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// A sorted, duplicate-free set of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet(members)
    }

    /// Caller guarantees `members` is strictly ascending.
    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        VertexSet(members)
    }

    pub fn full(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn min_vertex(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        VertexSet(out)
    }

    pub fn intersects(&self, other: &VertexSet) -> bool {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&v) if v >= n => Err(Error::InvalidParameter(format!(
                "vertex {v} out of range for graph with {n} vertices"
            ))),
            _ => Ok(()),
        }
    }
}

impl From<Vec<usize>> for VertexSet {
    fn from(v: Vec<usize>) -> Self {
        VertexSet::new(v)
    }
}

/// Undirected graph with sorted CSR neighbor lists and optional weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            offsets: vec![0; n + 1],
            targets: Vec::new(),
            weights: None,
        }
    }

    /// Builds an unweighted graph. Self-loops, out-of-range endpoints and
    /// repeated edges (in either orientation) are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let canon = canonicalize(n, edges.iter().map(|&(u, v)| (u, v, 1.0)))?;
        Ok(Self::from_canonical(n, canon, false))
    }

    /// Builds a weighted graph; weights must be finite and nonnegative.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        for &(u, v, w) in edges {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) has invalid weight {w}"
                )));
            }
        }
        let canon = canonicalize(n, edges.iter().copied())?;
        Ok(Self::from_canonical(n, canon, true))
    }

    /// `edges` must be `(u, v, w)` with `u < v < n`, sorted and unique.
    pub(crate) fn from_canonical(n: usize, edges: Vec<(usize, usize, f64)>, weighted: bool) -> Self {
        let mut deg = vec![0usize; n + 1];
        for &(u, v, _) in &edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        let mut weights = if weighted {
            Some(vec![0.0; offsets[n]])
        } else {
            None
        };
        // Sorted (u, v) input keeps every neighbor list ascending.
        for &(u, v, w) in &edges {
            targets[fill[u]] = v;
            targets[fill[v]] = u;
            if let Some(ws) = weights.as_mut() {
                ws[fill[u]] = w;
                ws[fill[v]] = w;
            }
            fill[u] += 1;
            fill[v] += 1;
        }
        let g = Graph {
            n,
            offsets,
            targets,
            weights,
        };
        debug_assert!((0..n).all(|u| g.neighbors(u).windows(2).all(|w| w[0] < w[1])));
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Neighbors of `u` paired with edge weights (1.0 when unweighted).
    pub fn weighted_neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        let ws = self.weights.as_ref().map(|w| &w[range.clone()]);
        self.targets[range]
            .iter()
            .enumerate()
            .map(move |(i, &v)| (v, ws.map_or(1.0, |w| w[i])))
    }

    pub fn degree_count(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.n {
            return None;
        }
        let i = self.neighbors(u).binary_search(&v).ok()?;
        Some(self.weights.as_ref().map_or(1.0, |w| w[self.offsets[u] + i]))
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.weighted_neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }
}

fn canonicalize(
    n: usize,
    edges: impl Iterator<Item = (usize, usize, f64)>,
) -> Result<Vec<(usize, usize, f64)>> {
    let mut canon = Vec::new();
    for (u, v, w) in edges {
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u},{v}) has an endpoint outside [0, {n})"
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
        }
        canon.push((u.min(v), u.max(v), w));
    }
    canon.sort_unstable_by_key(|a| (a.0, a.1));
    if let Some(w) = canon.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(Error::InvalidGraph(format!(
            "duplicate edge ({},{})",
            w[0].0, w[0].1
        )));
    }
    Ok(canon)
}

/// Per-vertex component ids over a (sub)graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Aligned with the restricting set's members, or with `0..n` when unrestricted.
    pub label: Vec<usize>,
    pub count: usize,
}

impl ComponentLabeling {
    /// Members of each component as indices into `label`.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (i, &c) in self.label.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Reusable scratch space for repeated component searches on subsets of
/// one graph. Each search costs O(|subset| + edges touching it).
#[derive(Debug)]
pub struct ComponentFinder {
    mark: Vec<u32>,
    stamp: u32,
    queue: VecDeque<usize>,
}

impl ComponentFinder {
    pub fn new(n: usize) -> Self {
        ComponentFinder {
            mark: vec![0; n],
            stamp: 0,
            queue: VecDeque::new(),
        }
    }

    fn next_stamp(&mut self) -> u32 {
        if self.stamp >= u32::MAX - 2 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 0;
        }
        self.stamp += 2;
        self.stamp
    }

    /// Connected components of the subgraph induced by `members`
    /// (ascending, unique), each sorted, ordered by smallest vertex.
    pub fn components(&mut self, g: &Graph, members: &[usize]) -> Vec<VertexSet> {
        let inside = self.next_stamp();
        let seen = inside + 1;
        for &v in members {
            self.mark[v] = inside;
        }
        let mut out = Vec::new();
        for &start in members {
            if self.mark[start] != inside {
                continue;
            }
            let mut comp = vec![start];
            self.mark[start] = seen;
            self.queue.push_back(start);
            while let Some(u) = self.queue.pop_front() {
                for &w in g.neighbors(u) {
                    if self.mark[w] == inside {
                        self.mark[w] = seen;
                        comp.push(w);
                        self.queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(VertexSet::from_sorted(comp));
        }
        out
    }

    /// Whether the subgraph induced by `members` is connected (empty counts as connected).
    pub fn is_connected(&mut self, g: &Graph, members: &[usize]) -> bool {
        members.is_empty() || self.components(g, members).len() == 1
    }
}

pub fn connected_components(g: &Graph, restrict: Option<&VertexSet>) -> Result<ComponentLabeling> {
    let all;
    let members = match restrict {
        Some(s) => {
            s.check(g.n())?;
            s.as_slice()
        }
        None => {
            all = VertexSet::full(g.n());
            all.as_slice()
        }
    };
    let comps = ComponentFinder::new(g.n()).components(g, members);
    let mut label = vec![0usize; members.len()];
    for (c, comp) in comps.iter().enumerate() {
        for v in comp.iter() {
            let pos = members.binary_search(&v).expect("component member comes from the set");
            label[pos] = c;
        }
    }
    Ok(ComponentLabeling {
        label,
        count: comps.len(),
    })
}

/// Subgraph on a vertex subset; vertex `i` of `graph` is `original[i]` in the parent.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedSubgraph {
    pub graph: Graph,
    pub original: Vec<usize>,
}

pub fn induced_subgraph(g: &Graph, s: &VertexSet) -> Result<InducedSubgraph> {
    s.check(g.n())?;
    let members = s.as_slice();
    let mut edges = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        for (v, w) in g.weighted_neighbors(u) {
            if v <= u {
                continue;
            }
            if let Ok(j) = members.binary_search(&v) {
                edges.push((i, j, w));
            }
        }
    }
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    Ok(InducedSubgraph {
        graph: Graph::from_canonical(members.len(), edges, g.is_weighted()),
        original: members.to_vec(),
    })
}

/// Union of two edge sets over the same vertices; shared edges keep the larger weight.
pub fn union_graphs(g1: &Graph, g2: &Graph) -> Result<Graph> {
    if g1.n() != g2.n() {
        return Err(Error::DimensionMismatch(format!(
            "cannot union graphs with {} and {} vertices",
            g1.n(),
            g2.n()
        )));
    }
    let mut a = g1.edges().peekable();
    let mut b = g2.edges().peekable();
    let mut out = Vec::with_capacity(g1.num_edges() + g2.num_edges());
    loop {
        let next = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(_), None) => a.next(),
            (None, Some(_)) => b.next(),
            (Some(x), Some(y)) => match (x.0, x.1).cmp(&(y.0, y.1)) {
                std::cmp::Ordering::Less => a.next(),
                std::cmp::Ordering::Greater => b.next(),
                std::cmp::Ordering::Equal => {
                    let (x, y) = (a.next().unwrap(), b.next().unwrap());
                    Some((x.0, x.1, x.2.max(y.2)))
                }
            },
        };
        out.extend(next);
    }
    Ok(Graph::from_canonical(
        g1.n(),
        out,
        g1.is_weighted() || g2.is_weighted(),
    ))
}

/// Weighted degree of every vertex.
pub fn degrees(g: &Graph) -> Vec<f64> {
    (0..g.n())
        .map(|u| g.weighted_neighbors(u).map(|(_, w)| w).sum())
        .collect()
}

/// Parses `u v [w]` lines (whitespace or comma separated, 0-based ids,
/// `#` comments). With `n = None` the vertex count is one past the largest id.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut weighted = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(Error::parse(
                lineno + 1,
                format!("expected `u v [w]`, found {} fields", toks.len()),
            ));
        }
        let id = |t: &str| {
            t.parse::<usize>()
                .map_err(|e| Error::parse(lineno + 1, format!("bad vertex id {t:?}: {e}")))
        };
        let (u, v) = (id(toks[0])?, id(toks[1])?);
        let w = match toks.get(2) {
            Some(t) => {
                weighted = true;
                let w: f64 = t
                    .parse()
                    .map_err(|e| Error::parse(lineno + 1, format!("bad weight {t:?}: {e}")))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::parse(lineno + 1, format!("invalid weight {w}")));
                }
                w
            }
            None => 1.0,
        };
        edges.push((u, v, w));
    }
    let n = match n {
        Some(n) => n,
        None => edges
            .iter()
            .map(|&(u, v, _)| u.max(v) + 1)
            .max()
            .unwrap_or(0),
    };
    if weighted {
        Graph::from_weighted_edges(n, &edges)
    } else {
        let plain: Vec<_> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
        Graph::from_edges(n, &plain)
    }
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("# vertices {}\n", g.n());
    for (u, v, w) in g.edges() {
        if g.is_weighted() {
            let _ = writeln!(out, "{u} {v} {w}");
        } else {
            let _ = writeln!(out, "{u} {v}");
        }
    }
    out
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Dense labels `0..count`, numbered by first appearance.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut count = 0;
        for i in 0..n {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = count;
                count += 1;
            }
            labels[i] = map[r];
        }
        (labels, count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize) -> Graph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    e.push((u, v));
                }
            }
        }
        Graph::from_edges(n, &e).unwrap()
    }

    // Flood fill over an adjacency matrix, independent of the CSR code path.
    fn bfs_oracle(n: usize, adj: &[Vec<bool>], restrict: &[usize]) -> Vec<usize> {
        let inside: Vec<bool> = (0..n).map(|v| restrict.contains(&v)).collect();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for &s in restrict {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = next;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if adj[u][v] && inside[v] && label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        restrict.iter().map(|&v| label[v]).collect()
    }

    fn adjacency(g: &Graph) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; g.n()]; g.n()];
        for (u, v, _) in g.edges() {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        adj
    }

    #[test]
    fn path_plus_isolated_vertex() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let cc = connected_components(&g, None).unwrap();
        assert_eq!(cc.count, 2);
        assert_eq!(cc.label[0], cc.label[1]);
        assert_eq!(cc.label[1], cc.label[2]);
        assert_ne!(cc.label[0], cc.label[3]);
    }

    #[test]
    fn restriction_drops_edges_through_excluded_vertex() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cc = connected_components(&g, Some(&VertexSet::new(vec![0, 2]))).unwrap();
        assert_eq!(cc.count, 2);
        let empty = connected_components(&g, Some(&VertexSet::default())).unwrap();
        assert_eq!(empty.count, 0);
    }

    #[test]
    fn components_match_bfs_oracle_on_random_graph() {
        let g = random_graph(200, 0.02, 7);
        let cc = connected_components(&g, None).unwrap();
        let oracle = bfs_oracle(200, &adjacency(&g), &(0..200).collect::<Vec<_>>());
        assert_same_partition(&cc.label, &oracle);
    }

    fn assert_same_partition(a: &[usize], b: &[usize]) {
        assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            for j in 0..a.len() {
                assert_eq!(a[i] == a[j], b[i] == b[j], "vertices {i},{j}");
            }
        }
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(3, &[(1, 1)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        assert!(Graph::from_weighted_edges(3, &[(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn induced_subgraph_of_triangle() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let sub = induced_subgraph(&g, &VertexSet::new(vec![0, 1])).unwrap();
        assert_eq!(sub.graph.num_edges(), 1);
        let all = induced_subgraph(&g, &VertexSet::full(3)).unwrap();
        assert_eq!(all.graph, g);
    }

    #[test]
    fn induced_subgraph_matches_filter_oracle() {
        let g = random_graph(120, 0.05, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = VertexSet::new((0..120).filter(|_| rng.gen_bool(0.4)).collect());
        let sub = induced_subgraph(&g, &s).unwrap();
        let mut got: Vec<_> = sub
            .graph
            .edges()
            .map(|(a, b, _)| (sub.original[a], sub.original[b]))
            .collect();
        got.sort();
        let mut want: Vec<_> = g
            .edges()
            .filter(|&(u, v, _)| s.contains(u) && s.contains(v))
            .map(|(u, v, _)| (u, v))
            .collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn union_rules() {
        let g = path(5);
        assert_eq!(union_graphs(&g, &g).unwrap(), g);
        let a = Graph::from_edges(4, &[(0, 1)]).unwrap();
        let b = Graph::from_edges(4, &[(2, 3)]).unwrap();
        assert_eq!(union_graphs(&a, &b).unwrap().num_edges(), 2);
        let w1 = Graph::from_weighted_edges(3, &[(0, 1, 1.0), (1, 2, 5.0)]).unwrap();
        let w2 = Graph::from_weighted_edges(3, &[(0, 1, 3.0)]).unwrap();
        let u = union_graphs(&w1, &w2).unwrap();
        assert_eq!(u.edge_weight(0, 1), Some(3.0));
        assert_eq!(u.edge_weight(1, 0), Some(3.0));
        assert_eq!(u.edge_weight(1, 2), Some(5.0));
        assert!(union_graphs(&a, &path(3)).is_err());
    }

    #[test]
    fn degree_sequences() {
        assert_eq!(degrees(&path(3)), vec![1.0, 2.0, 1.0]);
        assert_eq!(degrees(&Graph::empty(4)), vec![0.0; 4]);
        let star =
            Graph::from_weighted_edges(4, &[(0, 1, 0.5), (0, 2, 2.0), (0, 3, 1.25)]).unwrap();
        let d = degrees(&star);
        assert_eq!(d[0], 0.5 + 2.0 + 1.25);
        assert_eq!(d[3], 1.25);
    }

    #[test]
    fn edge_list_parsing() {
        let g = parse_edge_list("# header\n0 1\n1,2\n\n 2\t3 \n", None).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.num_edges(), 3);
        assert!(!g.is_weighted());
        let w = parse_edge_list("0 1 2.5\n1 2\n", Some(5)).unwrap();
        assert_eq!(w.n(), 5);
        assert_eq!(w.edge_weight(0, 1), Some(2.5));
        assert_eq!(w.edge_weight(1, 2), Some(1.0));
        assert!(parse_edge_list("0 1 2 3\n", None).is_err());
        assert!(parse_edge_list("0 x\n", None).is_err());
        assert!(parse_edge_list("0 9\n", Some(5)).is_err());
        let round = parse_edge_list(&write_edge_list(&w), Some(5)).unwrap();
        assert_eq!(round, w);
    }

    #[test]
    fn long_path_does_not_overflow_stack() {
        let g = path(200_000);
        assert_eq!(connected_components(&g, None).unwrap().count, 1);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..60, any::<u64>(), 0.0f64..0.2).prop_map(|(n, seed, p)| random_graph(n, p, seed))
    }

    proptest! {
        #[test]
        fn components_agree_with_oracle(g in arb_graph(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<usize> = (0..g.n()).filter(|_| rng.gen_bool(0.7)).collect();
            let cc = connected_components(&g, Some(&VertexSet::new(s.clone()))).unwrap();
            let oracle = bfs_oracle(g.n(), &adjacency(&g), &s);
            for i in 0..s.len() {
                for j in 0..s.len() {
                    prop_assert_eq!(cc.label[i] == cc.label[j], oracle[i] == oracle[j]);
                }
            }
        }

        #[test]
        fn induced_subgraph_is_monotone(g in arb_graph(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s1 = VertexSet::new((0..g.n()).filter(|_| rng.gen_bool(0.5)).collect());
            let s2 = VertexSet::new((0..g.n()).filter(|_| rng.gen_bool(0.5)).collect());
            let small = induced_subgraph(&g, &s1).unwrap();
            let big = induced_subgraph(&g, &s1.union(&s2)).unwrap();
            for (a, b, _) in small.graph.edges() {
                let found = big.graph.edges().any(|(x, y, _)| {
                    big.original[x] == small.original[a] && big.original[y] == small.original[b]
                });
                prop_assert!(found);
            }
        }

        #[test]
        fn union_is_commutative(a in arb_graph(), seed in any::<u64>()) {
            let b = random_graph(a.n(), 0.1, seed);
            prop_assert_eq!(union_graphs(&a, &b).unwrap(), union_graphs(&b, &a).unwrap());
            let ab = union_graphs(&a, &b).unwrap();
            prop_assert_eq!(union_graphs(&ab, &b).unwrap(), ab);
        }
    }
}
