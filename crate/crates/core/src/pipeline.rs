//! The end-to-end GTDA pass and the diagnosis built on top of it.

use log::info;

use crate::diagnose::{auc, error_estimation, AucSummary, ErrorReport, LabelData};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::layout::layout_reeb;
use crate::lens::{lens_distance, minmax_normalize, smooth, LensMatrix};
use crate::merging::{component_merging, node_merging, ComponentMerge, MergeTrace};
use crate::reeb::{build_reeb_net, project, summarize, LabelMode, NodeSummary, ReebNet};
use crate::report::{build_document, DocumentParts, ReebNetDocument};
use crate::splitter::{gtda_split, FinalSet, FinalSets, GtdaParams, MergeDistance, SplitStats};

/// Everything produced by one GTDA run.
#[derive(Clone, Debug)]
pub struct GtdaRun {
    /// Smoothed and column-normalized lens.
    pub lens: LensMatrix,
    pub split_stats: SplitStats,
    /// Number of sets finalized by the splitter, before any merging.
    pub split_sets: usize,
    /// Sets after node merging; the Reeb nodes before component merging.
    pub merged: FinalSets,
    pub node_trace: MergeTrace,
    pub components: ComponentMerge,
    /// Datapoint-level graph of the final net.
    pub projection: Graph,
}

impl GtdaRun {
    pub fn net(&self) -> &ReebNet {
        &self.components.net
    }

    /// Splitter record behind each node of the final net.
    pub fn node_origin(&self, node: usize) -> &FinalSet {
        &self.merged.sets[self.components.kept[node]]
    }
}

pub fn run_gtda(g: &Graph, p: &LensMatrix, params: &GtdaParams) -> Result<GtdaRun> {
    params.validate().map_err(Error::in_stage("parameters"))?;
    if p.n() != g.n() {
        return Err(Error::in_stage("lens")(Error::DimensionMismatch(format!(
            "lens has {} rows but graph has {} vertices",
            p.n(),
            g.n()
        ))));
    }
    let smoothed = smooth(p, g, params.smoothing).map_err(Error::in_stage("smooth"))?;
    let lens = minmax_normalize(&smoothed);

    let split = gtda_split(g, &lens, params).map_err(Error::in_stage("split"))?;
    let split_sets = split.len();
    let split_stats = split.stats.clone();
    info!(
        "split: {} sets in {} generations ({} bisections, {} stalled, {} duplicates)",
        split_sets, split_stats.generations, split_stats.splits, split_stats.stalled, split_stats.duplicates
    );

    let dist = |u: usize, v: usize| match params.merge_distance {
        MergeDistance::LensLinf => lens_distance(&lens, u, v),
    };
    let (merged, node_trace) =
        node_merging(split, g, params.min_node, dist).map_err(Error::in_stage("node merging"))?;
    info!(
        "node merging: {} sets after {} merges in {} rounds ({} unmergeable)",
        merged.len(),
        node_trace.decisions.len(),
        node_trace.rounds,
        merged.sets.iter().filter(|s| s.unmergeable).count()
    );

    let nodes: Vec<_> = merged.members().cloned().collect();
    let reeb = build_reeb_net(&nodes);
    let components = component_merging(&reeb, g, params.min_component, dist)
        .map_err(Error::in_stage("component merging"))?;
    info!(
        "component merging: {} nodes, {} overlap edges, {} extra edges, {} rounds, {} components excluded ({} datapoints)",
        components.net.num_nodes(),
        components.net.overlap_edges.len(),
        components.net.extra_edges.len(),
        components.trace.rounds,
        components.excluded_components,
        components.net.excluded.len()
    );
    let projection = project(&components.net, g).map_err(Error::in_stage("project"))?;
    info!("projection: {} edges of {}", projection.num_edges(), g.num_edges());
    Ok(GtdaRun {
        lens,
        split_stats,
        split_sets,
        merged,
        node_trace,
        components,
        projection,
    })
}

/// Error estimates on the run's projected graph. With ground truth, AUC of
/// both scores at finding mistakes is computed over the non-training
/// datapoints.
pub fn diagnose(
    run: &GtdaRun,
    labels: &LabelData,
    steps: usize,
    alpha: f64,
    truth: Option<&[usize]>,
) -> Result<(ErrorReport, AucSummary)> {
    let mut report =
        error_estimation(&run.projection, labels, steps, alpha).map_err(Error::in_stage("diagnose"))?;
    let mut summary = AucSummary {
        unsupported: report.unsupported.iter().filter(|&&u| u).count(),
        ..AucSummary::default()
    };
    if let Some(truth) = truth {
        if truth.len() != labels.n() {
            return Err(Error::in_stage("diagnose")(Error::DimensionMismatch(format!(
                "{} truth labels for {} datapoints",
                truth.len(),
                labels.n()
            ))));
        }
        let eval: Vec<usize> = (0..labels.n()).filter(|&i| labels.training[i].is_none()).collect();
        let wrong: Vec<bool> = eval.iter().map(|&i| truth[i] != labels.predicted[i]).collect();
        summary.evaluated = eval.len();
        let pick = |s: &[f64]| eval.iter().map(|&i| s[i]).collect::<Vec<_>>();
        match auc(&pick(&report.estimated_error), &wrong) {
            Ok(a) => report.auc_gtda = Some(a),
            Err(Error::DegenerateTruth) => {
                log::warn!("AUC skipped: predictions are all right or all wrong")
            }
            Err(e) => return Err(Error::in_stage("diagnose")(e)),
        }
        if let (Some(base), Some(_)) = (&report.baseline_uncertainty, report.auc_gtda) {
            report.auc_baseline = Some(auc(&pick(base), &wrong).map_err(Error::in_stage("diagnose"))?);
        }
        summary.auc_gtda = report.auc_gtda;
        summary.auc_baseline = report.auc_baseline;
        info!(
            "AUC over {} datapoints: gtda {:?}, baseline {:?}",
            summary.evaluated, summary.auc_gtda, summary.auc_baseline
        );
    }
    Ok((report, summary))
}

/// Pie data per node: predicted classes when labels are known, otherwise
/// each datapoint's largest lens column.
pub fn node_summaries(net: &ReebNet, lens: &LensMatrix, labels: Option<&LabelData>) -> Result<Vec<NodeSummary>> {
    let (classes, per_vertex): (usize, Vec<Option<usize>>) = match labels {
        Some(l) => (l.num_classes, l.predicted.iter().map(|&c| Some(c)).collect()),
        None => (lens.m(), lens.argmax_rows().0.into_iter().map(Some).collect()),
    };
    summarize(net, &per_vertex, classes, LabelMode::Predicted).map_err(Error::in_stage("summarize"))
}

/// Lays out the final net and assembles its JSON document.
pub fn gtda_document(
    run: &GtdaRun,
    lens: &LensMatrix,
    labels: Option<&LabelData>,
    errors: Option<&ErrorReport>,
    seed: u64,
) -> Result<ReebNetDocument> {
    let net = run.net();
    let layout = layout_reeb(net, seed);
    Ok(build_document(DocumentParts {
        net,
        num_vertices: run.projection.n(),
        projection: &run.projection,
        layout: &layout,
        summaries: node_summaries(net, lens, labels)?,
        paths: (0..net.num_nodes()).map(|i| run.node_origin(i).path.clone()).collect(),
        errors,
    }))
}
