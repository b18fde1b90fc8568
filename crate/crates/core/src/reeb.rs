//! The Reeb network: one node per finalized vertex set, an edge wherever
//! two sets share a datapoint, plus the extra bridging edges added by
//! component merging. Also projects the network back onto the data graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, ComponentLabeling, Graph, VertexSet};

/// An extra Reeb edge and the datapoint-level edge that realizes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraEdge {
    /// Node pair, smaller index first.
    pub nodes: (usize, usize),
    /// Graph edge `(x, y)` with `x` in node `nodes.0` and `y` in node `nodes.1`.
    pub bridge: (usize, usize),
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReebNet {
    pub nodes: Vec<VertexSet>,
    /// Pairs `(i, j)`, `i < j`, of nodes sharing at least one datapoint; sorted.
    pub overlap_edges: Vec<(usize, usize)>,
    pub extra_edges: Vec<ExtraEdge>,
    /// Datapoints dropped from the net along with their components.
    pub excluded: VertexSet,
}

impl ReebNet {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// The net as a graph over node indices (overlap and extra edges).
    pub fn node_graph(&self) -> Graph {
        let mut edges: Vec<(usize, usize, f64)> = self
            .overlap_edges
            .iter()
            .map(|&(a, b)| (a, b, 1.0))
            .chain(self.extra_edges.iter().map(|e| (e.nodes.0, e.nodes.1, 1.0)))
            .collect();
        edges.sort_unstable_by_key(|e| (e.0, e.1));
        edges.dedup_by_key(|e| (e.0, e.1));
        Graph::from_canonical(self.nodes.len(), edges, false)
    }

    pub fn components(&self) -> ComponentLabeling {
        connected_components(&self.node_graph(), None).expect("unrestricted labeling cannot fail")
    }

    /// Number of Reeb nodes in each connected component of the net.
    pub fn component_sizes(&self) -> Vec<usize> {
        let labels = self.components();
        let mut sizes = vec![0; labels.count];
        for &l in &labels.label {
            sizes[l] += 1;
        }
        sizes
    }

    /// One past the largest datapoint id referenced anywhere in the net.
    pub fn vertex_bound(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|s| s.as_slice().last())
            .chain(self.excluded.as_slice().last())
            .map(|&v| v + 1)
            .max()
            .unwrap_or(0)
    }
}

/// For every datapoint, the indices of the nodes containing it (CSR).
pub(crate) struct Membership {
    offsets: Vec<usize>,
    ids: Vec<usize>,
}

impl Membership {
    pub(crate) fn new(n: usize, nodes: &[VertexSet]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for s in nodes {
            for v in s.iter() {
                offsets[v + 1] += 1;
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut ids = vec![0usize; offsets[n]];
        for (i, s) in nodes.iter().enumerate() {
            for v in s.iter() {
                ids[fill[v]] = i;
                fill[v] += 1;
            }
        }
        Membership { offsets, ids }
    }

    /// Ascending node indices containing `v`.
    pub(crate) fn of(&self, v: usize) -> &[usize] {
        if v + 1 >= self.offsets.len() {
            return &[];
        }
        &self.ids[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Overlap edges via the node/datapoint incidence structure: two nodes are
/// adjacent iff they are two hops apart through a shared datapoint.
pub fn overlap_edges(nodes: &[VertexSet]) -> Vec<(usize, usize)> {
    let n = nodes
        .iter()
        .filter_map(|s| s.as_slice().last())
        .map(|&v| v + 1)
        .max()
        .unwrap_or(0);
    let member = Membership::new(n, nodes);
    let per_node: Vec<Vec<(usize, usize)>> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let mut hits: Vec<usize> = nodes[i]
                .iter()
                .flat_map(|v| member.of(v).iter().copied())
                .filter(|&j| j > i)
                .collect();
            hits.sort_unstable();
            hits.dedup();
            hits.into_iter().map(|j| (i, j)).collect()
        })
        .collect();
    per_node.concat()
}

/// Reeb net with one node per set and overlap edges only.
pub fn build_reeb_net(sets: &[VertexSet]) -> ReebNet {
    ReebNet {
        nodes: sets.to_vec(),
        overlap_edges: overlap_edges(sets),
        extra_edges: Vec::new(),
        excluded: VertexSet::default(),
    }
}

/// Datapoint-level graph of the net: every node's internal edges of `g`
/// plus the bridge edge of each extra Reeb edge.
pub fn project(reeb: &ReebNet, g: &Graph) -> Result<Graph> {
    if reeb.vertex_bound() > g.n() {
        return Err(Error::DimensionMismatch(format!(
            "Reeb net references vertex {} but graph has {} vertices",
            reeb.vertex_bound() - 1,
            g.n()
        )));
    }
    let chunks: Vec<Vec<(usize, usize, f64)>> = reeb
        .nodes
        .par_iter()
        .map(|node| {
            let mut out = Vec::new();
            for v in node.iter() {
                for (u, w) in g.weighted_neighbors(v) {
                    if v < u && node.contains(u) {
                        out.push((v, u, w));
                    }
                }
            }
            out
        })
        .collect();
    let mut edges = chunks.concat();
    for e in &reeb.extra_edges {
        let (x, y) = e.bridge;
        let w = g.edge_weight(x, y).ok_or_else(|| {
            Error::InvalidGraph(format!("bridge ({x},{y}) is not an edge of the graph"))
        })?;
        edges.push((x.min(y), x.max(y), w));
    }
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    edges.dedup_by_key(|e| (e.0, e.1));
    Ok(Graph::from_canonical(g.n(), edges, g.is_weighted()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Every member carries a predicted class.
    Predicted,
    /// Only training members carry a class; the rest are skipped.
    Training,
}

/// Pie-chart data for one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub size: usize,
    pub mixture: Vec<f64>,
    pub dominant: Option<usize>,
    /// No member had a label (training mode only).
    pub empty: bool,
}

pub fn summarize(
    reeb: &ReebNet,
    labels: &[Option<usize>],
    classes: usize,
    mode: LabelMode,
) -> Result<Vec<NodeSummary>> {
    reeb.nodes
        .iter()
        .map(|node| {
            let mut counts = vec![0usize; classes];
            for v in node.iter() {
                match labels.get(v).copied().flatten() {
                    Some(c) if c < classes => counts[c] += 1,
                    Some(c) => {
                        return Err(Error::InvalidClass {
                            vertex: v,
                            class: c,
                            classes,
                        })
                    }
                    None if mode == LabelMode::Training => {}
                    None => {
                        return Err(Error::InvalidParameter(format!(
                            "vertex {v} has no predicted label"
                        )))
                    }
                }
            }
            let total: usize = counts.iter().sum();
            let mixture: Vec<f64> = counts
                .iter()
                .map(|&c| if total > 0 { c as f64 / total as f64 } else { 0.0 })
                .collect();
            let dominant = (total > 0).then(|| {
                (0..classes)
                    .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                    .unwrap_or(0)
            });
            Ok(NodeSummary {
                size: node.len(),
                mixture,
                dominant,
                empty: total == 0,
            })
        })
        .collect()
}
