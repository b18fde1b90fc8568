//! Boruvka-style cleanup after splitting: undersized vertex sets are merged
//! into their closest neighbor set, then undersized Reeb components are
//! joined to the rest of the net through extra edges.
//!
//! Candidate edges are compared by `(distance, u, v)` so every choice is
//! deterministic. Sets or components with no edge leaving them are flagged
//! as unmergeable instead of looping forever; flagged components are
//! dropped from the final net.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DisjointSet, Graph, VertexSet};
use crate::reeb::{ExtraEdge, Membership, ReebNet};
use crate::splitter::{FinalSet, FinalSets};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeDecision {
    pub round: usize,
    /// Set (node merging) or Reeb node (component merging) index at that round.
    pub source: usize,
    pub target: usize,
    pub bridge: (usize, usize),
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub rounds: usize,
    pub decisions: Vec<MergeDecision>,
}

/// Closest edge `(v, u)` with `v` inside and `u` outside, as judged by
/// `outside(u)`. Ties fall to the lexicographically smaller `(v, u)`.
fn cheapest_exit<D, O>(g: &Graph, inside: &[usize], outside: O, dist: &D) -> Option<(usize, usize, f64)>
where
    D: Fn(usize, usize) -> f64,
    O: Fn(usize) -> bool,
{
    let mut best: Option<(usize, usize, f64)> = None;
    for &v in inside {
        for &u in g.neighbors(v) {
            if !outside(u) {
                continue;
            }
            let d = dist(v, u);
            let better = match best {
                None => true,
                Some((bv, bu, bd)) => match d.total_cmp(&bd) {
                    Ordering::Less => true,
                    Ordering::Equal => (v, u) < (bv, bu),
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((v, u, d));
            }
        }
    }
    best
}

fn check_cover(g: &Graph, sets: &[VertexSet]) -> Result<()> {
    for s in sets {
        s.check(g.n())?;
    }
    Ok(())
}

/// Merges every set with at most `s1` vertices into the set across its
/// cheapest boundary edge (smallest target set on ties), unioning whole
/// chains of choices per round.
pub fn node_merging<D>(f_sets: FinalSets, g: &Graph, s1: usize, dist: D) -> Result<(FinalSets, MergeTrace)>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    let FinalSets { mut sets, stats } = f_sets;
    check_cover(g, &sets.iter().map(|s| s.members.clone()).collect::<Vec<_>>())?;
    let mut trace = MergeTrace::default();

    loop {
        let small: Vec<usize> = (0..sets.len())
            .filter(|&i| sets[i].members.len() <= s1 && !sets[i].unmergeable)
            .collect();
        if small.is_empty() {
            break;
        }
        trace.rounds += 1;
        let members: Vec<VertexSet> = sets.iter().map(|s| s.members.clone()).collect();
        let belongs = Membership::new(g.n(), &members);

        let exits: Vec<Option<(usize, usize, f64)>> = small
            .par_iter()
            .map(|&i| {
                let own = &members[i];
                cheapest_exit(g, own.as_slice(), |u| !own.contains(u), &dist)
            })
            .collect();

        let mut dsu = DisjointSet::new(sets.len());
        let mut joined = false;
        for (&i, exit) in small.iter().zip(exits) {
            let Some((v, u, d)) = exit else {
                sets[i].unmergeable = true;
                continue;
            };
            let target = belongs
                .of(u)
                .iter()
                .copied()
                .min_by_key(|&j| (members[j].len(), j))
                .expect("every vertex belongs to some set");
            trace.decisions.push(MergeDecision {
                round: trace.rounds,
                source: i,
                target,
                bridge: (v, u),
                distance: d,
            });
            dsu.union(i, target);
            joined = true;
        }
        if !joined {
            continue;
        }

        let (labels, count) = dsu.labels();
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        // Labels are numbered by first member, so groups come out ordered by
        // their smallest set index.
        let mut next: Vec<FinalSet> = Vec::with_capacity(count);
        let mut old = sets.into_iter().map(Some).collect::<Vec<_>>();
        for group in groups {
            let mut head = old[group[0]].take().expect("each set is in one group");
            for &j in &group[1..] {
                let other = old[j].take().expect("each set is in one group");
                head.members = head.members.union(&other.members);
                head.generation = head.generation.min(other.generation);
                head.forced = false;
                head.unmergeable = false;
            }
            next.push(head);
        }
        let mut seen = std::collections::HashSet::new();
        next.retain(|s| seen.insert(s.members.clone()));
        sets = next;
    }
    Ok((FinalSets { sets, stats }, trace))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentMerge {
    /// Final net; flagged components removed and node indices compacted.
    pub net: ReebNet,
    /// For each node of `net`, its index in the input net.
    pub kept: Vec<usize>,
    pub trace: MergeTrace,
    /// Number of components dropped as unmergeable.
    pub excluded_components: usize,
}

/// Adds extra edges until every Reeb component has more than `s2` nodes,
/// dropping components that no graph edge leaves.
pub fn component_merging<D>(reeb: &ReebNet, g: &Graph, s2: usize, dist: D) -> Result<ComponentMerge>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    check_cover(g, &reeb.nodes)?;
    let k = reeb.nodes.len();
    let belongs = Membership::new(g.n(), &reeb.nodes);
    let mut dsu = DisjointSet::new(k);
    for &(a, b) in &reeb.overlap_edges {
        if a >= k || b >= k {
            return Err(Error::InvalidParameter(format!(
                "overlap edge ({a},{b}) references a missing node"
            )));
        }
        dsu.union(a, b);
    }
    let mut extra = reeb.extra_edges.clone();
    for e in &extra {
        dsu.union(e.nodes.0, e.nodes.1);
    }
    let mut flagged = vec![false; k];
    let mut trace = MergeTrace::default();
    let mut excluded_components = 0;

    loop {
        let (labels, count) = dsu.labels();
        let mut comp_nodes: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            comp_nodes[l].push(i);
        }
        let small: Vec<usize> = (0..count)
            .filter(|&c| comp_nodes[c].len() <= s2 && !flagged[comp_nodes[c][0]])
            .collect();
        if small.is_empty() {
            break;
        }
        trace.rounds += 1;

        // Overlapping nodes share a component, so each datapoint has one.
        let comp_of = |v: usize| belongs.of(v).first().map(|&i| labels[i]);
        let exits: Vec<Option<(usize, usize, f64)>> = small
            .par_iter()
            .map(|&c| {
                let mut verts: Vec<usize> = comp_nodes[c]
                    .iter()
                    .flat_map(|&i| reeb.nodes[i].iter())
                    .collect();
                verts.sort_unstable();
                verts.dedup();
                cheapest_exit(g, &verts, |u| matches!(comp_of(u), Some(o) if o != c), &dist)
            })
            .collect();

        for (&c, exit) in small.iter().zip(exits) {
            let Some((v, u, d)) = exit else {
                comp_nodes[c].iter().for_each(|&i| flagged[i] = true);
                excluded_components += 1;
                continue;
            };
            let source = belongs.of(v)[0];
            let target = belongs
                .of(u)
                .iter()
                .copied()
                .min_by_key(|&j| (reeb.nodes[j].len(), j))
                .expect("checked by comp_of");
            trace.decisions.push(MergeDecision {
                round: trace.rounds,
                source,
                target,
                bridge: (v, u),
                distance: d,
            });
            // A partner may already have reached this component earlier in the round.
            if dsu.union(source, target) {
                let (nodes, bridge) = if source < target {
                    ((source, target), (v, u))
                } else {
                    ((target, source), (u, v))
                };
                extra.push(ExtraEdge {
                    nodes,
                    bridge,
                    distance: d,
                });
            }
        }
    }

    let kept: Vec<usize> = (0..k).filter(|&i| !flagged[i]).collect();
    let mut new_id = vec![usize::MAX; k];
    for (new, &old) in kept.iter().enumerate() {
        new_id[old] = new;
    }
    let dropped: Vec<usize> = (0..k)
        .filter(|&i| flagged[i])
        .flat_map(|i| reeb.nodes[i].iter())
        .collect();
    let net = ReebNet {
        nodes: kept.iter().map(|&i| reeb.nodes[i].clone()).collect(),
        overlap_edges: reeb
            .overlap_edges
            .iter()
            .filter(|&&(a, b)| !flagged[a] && !flagged[b])
            .map(|&(a, b)| (new_id[a], new_id[b]))
            .collect(),
        extra_edges: extra
            .into_iter()
            .filter(|e| !flagged[e.nodes.0])
            .map(|e| ExtraEdge {
                nodes: (new_id[e.nodes.0], new_id[e.nodes.1]),
                ..e
            })
            .collect(),
        excluded: reeb.excluded.union(&VertexSet::new(dropped)),
    };
    Ok(ComponentMerge {
        net,
        kept,
        trace,
        excluded_components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reeb::build_reeb_net;

    fn vs(v: &[usize]) -> VertexSet {
        VertexSet::new(v.to_vec())
    }

    fn path(n: usize) -> Graph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    fn by_value(vals: Vec<f64>) -> impl Fn(usize, usize) -> f64 + Sync {
        move |a, b| (vals[a] - vals[b]).abs()
    }

    fn member_lists(f: &FinalSets) -> Vec<Vec<usize>> {
        f.members().map(|s| s.as_slice().to_vec()).collect()
    }

    #[test]
    fn large_sets_are_left_alone() {
        let g = path(12);
        let input = FinalSets::from_sets(vec![vs(&[0, 1, 2, 3, 4, 5]), vs(&[6, 7, 8, 9, 10, 11])]);
        let (out, trace) = node_merging(input.clone(), &g, 5, |_, _| 0.0).unwrap();
        assert_eq!(out, input);
        assert_eq!(trace.rounds, 0);
    }

    #[test]
    fn two_small_sets_merge_then_flag() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let input = FinalSets::from_sets(vec![vs(&[0, 1]), vs(&[2, 3])]);
        let (out, trace) = node_merging(input, &g, 5, |_, _| 1.0).unwrap();
        assert_eq!(member_lists(&out), vec![vec![0, 1, 2, 3]]);
        assert!(out.sets[0].unmergeable);
        assert_eq!(trace.decisions[0].bridge, (1, 2));
    }

    #[test]
    fn singleton_chain_merges_in_one_round() {
        let g = path(4);
        let input = FinalSets::from_sets((0..4).map(|i| vs(&[i])).collect());
        let (out, trace) =
            node_merging(input, &g, 5, by_value(vec![0.0, 1.0, 3.0, 6.0])).unwrap();
        assert_eq!(member_lists(&out), vec![vec![0, 1, 2, 3]]);
        // One union round, then one round that discovers there is nowhere left to go.
        assert_eq!(trace.decisions.iter().filter(|d| d.round == 1).count(), 4);
        assert!(trace.decisions.iter().all(|d| d.round == 1));
    }

    #[test]
    fn prefers_smallest_target_set() {
        // Vertex 2 sits in both {1,2,...} (big) and {2,3} (small).
        let g = Graph::from_edges(8, &[(0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 7)]).unwrap();
        let input = FinalSets::from_sets(vec![
            vs(&[0]),
            vs(&[1, 2, 5, 6, 7, 4, 3]),
            vs(&[2, 3]),
        ]);
        let (_, trace) = node_merging(input, &g, 1, |_, _| 0.0).unwrap();
        assert_eq!(trace.decisions[0].source, 0);
        assert_eq!(trace.decisions[0].target, 2);
    }

    #[test]
    fn recorded_distance_is_frontier_minimum() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let vals = vec![0.5, 0.9, 0.1, 0.45, 0.0];
        let input = FinalSets::from_sets(vec![vs(&[0]), vs(&[1]), vs(&[2]), vs(&[3, 4])]);
        let (_, trace) = node_merging(input, &g, 1, by_value(vals.clone())).unwrap();
        let first = &trace.decisions[0];
        assert_eq!(first.bridge, (0, 3));
        assert!((first.distance - 0.05).abs() < 1e-12);
    }

    #[test]
    fn components_above_threshold_unchanged() {
        let g = path(6);
        let net = build_reeb_net(&(0..5).map(|i| vs(&[i, i + 1])).collect::<Vec<_>>());
        let out = component_merging(&net, &g, 4, |_, _| 0.0).unwrap();
        assert!(out.net.extra_edges.is_empty());
        assert_eq!(out.net, net);
    }

    #[test]
    fn two_singletons_joined_by_one_edge() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let net = build_reeb_net(&[vs(&[0]), vs(&[1])]);
        let out = component_merging(&net, &g, 1, |_, _| 0.25).unwrap();
        assert_eq!(
            out.net.extra_edges,
            vec![ExtraEdge {
                nodes: (0, 1),
                bridge: (0, 1),
                distance: 0.25
            }]
        );
        assert_eq!(out.net.components().count, 1);
        assert!(out.net.excluded.is_empty());
    }

    #[test]
    fn isolated_component_is_excluded() {
        // Path 0..5 in six singleton nodes, plus a separate triangle 6,7,8.
        let mut e: Vec<_> = (1..6).map(|i| (i - 1, i)).collect();
        e.extend([(6, 7), (7, 8), (6, 8)]);
        let g = Graph::from_edges(9, &e).unwrap();
        let mut nodes: Vec<VertexSet> = (0..6).map(|i| vs(&[i])).collect();
        nodes.push(vs(&[6, 7, 8]));
        let net = build_reeb_net(&nodes);
        let out = component_merging(&net, &g, 5, |_, _| 1.0).unwrap();
        assert_eq!(out.excluded_components, 1);
        assert_eq!(out.net.excluded.as_slice(), &[6, 7, 8]);
        assert_eq!(out.net.num_nodes(), 6);
        assert_eq!(out.kept, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(out.net.components().count, 1);
        for e in &out.net.extra_edges {
            assert!(!out.net.overlap_edges.contains(&e.nodes));
            assert!(out.net.nodes[e.nodes.0].contains(e.bridge.0));
            assert!(out.net.nodes[e.nodes.1].contains(e.bridge.1));
        }
    }

    #[test]
    fn mutual_choices_add_one_edge() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let net = build_reeb_net(&[vs(&[0]), vs(&[1])]);
        let out = component_merging(&net, &g, 1, |_, _| 0.0).unwrap();
        assert_eq!(out.net.extra_edges.len(), 1);
        assert_eq!(out.trace.decisions.len(), 2);

        // With a higher threshold the joined pair still has nowhere to go
        // and is dropped together with its extra edge.
        let out = component_merging(&net, &g, 5, |_, _| 0.0).unwrap();
        assert_eq!(out.excluded_components, 1);
        assert_eq!(out.net.num_nodes(), 0);
        assert!(out.net.extra_edges.is_empty());
        assert_eq!(out.net.excluded.as_slice(), &[0, 1]);
    }
}
