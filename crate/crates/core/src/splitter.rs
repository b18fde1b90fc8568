//! Recursive bisection of vertex sets along their widest lens.
//!
//! The worklist starts as the connected components of the graph. Each
//! generation takes every pending set, picks the lens with the largest
//! spread on it, cuts that lens' interval at the midpoint with the lower
//! bin stretched by the overlap ratio, and re-splits both bins into
//! connected components. Children that are still larger than `max_size`
//! and still wider than `min_diff` on some lens go back on the worklist;
//! everything else is finalized.

use std::collections::HashSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ComponentFinder, Graph, VertexSet};
use crate::lens::{max_diff_lens, max_spread, spreads, LensMatrix, SmoothingParams};

/// Distance used to pick bridging edges while merging.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeDistance {
    /// l-infinity difference between rows of the smoothed, normalized lens.
    #[default]
    LensLinf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtdaParams {
    /// Sets with at most this many vertices are not split further (K).
    pub max_size: usize,
    /// Sets whose widest lens spans at most this much are not split further (d).
    pub min_diff: f64,
    /// Fraction of the interval the lower bin is stretched by (r).
    pub overlap: f64,
    /// Finalized sets with at most this many vertices get merged (s1).
    pub min_node: usize,
    /// Reeb components with at most this many nodes get connected (s2).
    pub min_component: usize,
    pub smoothing: SmoothingParams,
    pub merge_distance: MergeDistance,
}

impl GtdaParams {
    /// Suggested defaults for a given component size threshold.
    pub fn suggested(max_size: usize) -> Self {
        GtdaParams {
            max_size,
            min_diff: 0.0,
            overlap: 0.01,
            min_node: 5,
            min_component: 5,
            smoothing: SmoothingParams::default(),
            merge_distance: MergeDistance::LensLinf,
        }
    }

    /// Settings of the three-class Swiss roll walkthrough.
    pub fn swiss_roll_reference() -> Self {
        GtdaParams {
            max_size: 20,
            overlap: 0.1,
            ..Self::suggested(20)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.max_size < 1 {
            return bad("max_size (K) must be at least 1".into());
        }
        if !(self.min_diff >= 0.0 && self.min_diff.is_finite()) {
            return bad(format!("min_diff (d) must be >= 0, got {}", self.min_diff));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return bad(format!("overlap (r) must lie in [0, 1), got {}", self.overlap));
        }
        if self.min_node < 1 || self.min_component < 1 {
            return bad("min_node (s1) and min_component (s2) must be at least 1".into());
        }
        self.smoothing.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStep {
    pub lens: usize,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinalSet {
    pub members: VertexSet,
    /// Lens cuts that produced this set, outermost first.
    pub path: Vec<SplitStep>,
    /// Worklist generation that emitted the set; 0 for untouched components.
    pub generation: usize,
    /// Finalized only because a split could not shrink it.
    pub forced: bool,
    /// No graph edge leaves the set, so node merging had nothing to join it to.
    pub unmergeable: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    /// Worklist generations executed.
    pub generations: usize,
    /// Individual bisections performed.
    pub splits: usize,
    /// Children force-finalized because they equalled their parent.
    pub stalled: usize,
    /// Identical finalized sets collapsed into one.
    pub duplicates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinalSets {
    pub sets: Vec<FinalSet>,
    pub stats: SplitStats,
}

impl FinalSets {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = &VertexSet> {
        self.sets.iter().map(|s| &s.members)
    }

    /// Wraps plain vertex sets, e.g. for feeding merging directly.
    pub fn from_sets(sets: Vec<VertexSet>) -> Self {
        FinalSets {
            sets: sets
                .into_iter()
                .map(|members| FinalSet {
                    members,
                    path: Vec::new(),
                    generation: 0,
                    forced: false,
                    unmergeable: false,
                })
                .collect(),
            stats: SplitStats::default(),
        }
    }
}

/// Lower and upper bin of one bisection, each already broken into
/// connected components.
fn bisect(
    finder: &mut ComponentFinder,
    g: &Graph,
    p: &LensMatrix,
    s: &[usize],
    c: usize,
    r: f64,
) -> (Vec<VertexSet>, Vec<VertexSet>) {
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        let x = p.get(v, c);
        (lo.min(x), hi.max(x))
    });
    let span = hi - lo;
    // Offsets from the minimum, so a tiny span cannot round the cut onto `hi`.
    let left_cut = (0.5 + r) * span;
    let right_floor = 0.5 * span;
    let left: Vec<usize> = s.iter().copied().filter(|&v| p.get(v, c) - lo <= left_cut).collect();
    let right: Vec<usize> = s.iter().copied().filter(|&v| p.get(v, c) - lo > right_floor).collect();
    (finder.components(g, &left), finder.components(g, &right))
}

/// One bisection of `s` along lens `c`: the lower bin holds values up to
/// `min + (0.5 + r) * spread`, the upper bin values above the midpoint.
/// Returns the components of the lower bin followed by those of the upper.
pub fn split_once(
    g: &Graph,
    p: &LensMatrix,
    s: &VertexSet,
    c: usize,
    r: f64,
) -> Result<Vec<VertexSet>> {
    s.check(g.n())?;
    if p.n() != g.n() || c >= p.m() {
        return Err(Error::DimensionMismatch(format!(
            "lens {c} of a {}x{} matrix on a {}-vertex graph",
            p.n(),
            p.m(),
            g.n()
        )));
    }
    if s.len() < 2 {
        return Err(Error::InvalidParameter(
            "a split needs at least two vertices".into(),
        ));
    }
    if spreads(p, s.as_slice())[c] <= 0.0 {
        return Err(Error::ZeroSpread(c));
    }
    let mut finder = ComponentFinder::new(g.n());
    let (mut left, right) = bisect(&mut finder, g, p, s.as_slice(), c, r);
    left.extend(right);
    Ok(left)
}

struct Pending {
    members: VertexSet,
    path: Vec<SplitStep>,
}

/// Runs the splitting loop on an already smoothed and normalized lens matrix.
pub fn gtda_split(g: &Graph, p: &LensMatrix, params: &GtdaParams) -> Result<FinalSets> {
    params.validate()?;
    if p.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "lens has {} rows but graph has {} vertices",
            p.n(),
            g.n()
        )));
    }
    let keep_splitting =
        |s: &VertexSet| s.len() > params.max_size && max_spread(p, s.as_slice()) > params.min_diff;

    let mut stats = SplitStats::default();
    let mut finalized = Vec::new();
    let mut worklist = Vec::new();
    for comp in ComponentFinder::new(g.n()).components(g, VertexSet::full(g.n()).as_slice()) {
        if keep_splitting(&comp) {
            worklist.push(Pending {
                members: comp,
                path: Vec::new(),
            });
        } else {
            finalized.push(FinalSet {
                members: comp,
                path: Vec::new(),
                generation: 0,
                forced: false,
                unmergeable: false,
            });
        }
    }

    while !worklist.is_empty() {
        stats.generations += 1;
        let generation = stats.generations;
        let mut seen = HashSet::new();
        worklist.retain(|w| seen.insert(w.members.clone()));
        stats.splits += worklist.len();

        let children: Vec<Vec<(VertexSet, SplitStep)>> = worklist
            .par_iter()
            .map_init(
                || ComponentFinder::new(g.n()),
                |finder, w| {
                    let c = max_diff_lens(p, &w.members);
                    let (left, right) = bisect(finder, g, p, w.members.as_slice(), c, params.overlap);
                    let tag = |side| SplitStep { lens: c, side };
                    left.into_iter()
                        .map(|s| (s, tag(Side::Left)))
                        .chain(right.into_iter().map(|s| (s, tag(Side::Right))))
                        .collect()
                },
            )
            .collect();

        let mut next = Vec::new();
        for (parent, kids) in worklist.iter().zip(children) {
            for (members, step) in kids {
                let mut path = parent.path.clone();
                path.push(step);
                let stalled = members == parent.members;
                if stalled {
                    stats.stalled += 1;
                    warn!(
                        "split of a {}-vertex set along lens {} did not shrink it; finalizing as is",
                        members.len(),
                        step.lens
                    );
                }
                if !stalled && keep_splitting(&members) {
                    next.push(Pending { members, path });
                } else {
                    finalized.push(FinalSet {
                        members,
                        path,
                        generation,
                        forced: stalled,
                        unmergeable: false,
                    });
                }
            }
        }
        worklist = next;
    }

    finalized.sort_by(|a, b| {
        (a.generation, a.members.min_vertex(), a.members.as_slice())
            .cmp(&(b.generation, b.members.min_vertex(), b.members.as_slice()))
    });
    let before = finalized.len();
    let mut seen = HashSet::new();
    finalized.retain(|f| seen.insert(f.members.clone()));
    stats.duplicates = before - finalized.len();

    Ok(FinalSets {
        sets: finalized,
        stats,
    })
}
