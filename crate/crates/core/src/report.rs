//! Static artifacts for a Reeb net: a versioned JSON document (with a
//! reader), DOT, GraphML and a self-contained HTML page of pie-chart nodes.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnose::{write_errors_csv, AucSummary, ErrorReport, LabelData};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::layout::Layout;
use crate::reeb::{ExtraEdge, NodeSummary, ReebNet};
use crate::splitter::SplitStep;

pub const FORMAT: &str = "reebnet/1";

/// Datapoints chosen to stand for the two ends of a Reeb edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeMembers {
    pub nodes: (usize, usize),
    pub members: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebNetDocument {
    pub format: String,
    pub num_vertices: usize,
    pub nodes: Vec<Vec<usize>>,
    pub overlap_edges: Vec<(usize, usize)>,
    pub extra_edges: Vec<ExtraEdge>,
    pub excluded: Vec<usize>,
    #[serde(default)]
    pub summaries: Vec<NodeSummary>,
    /// Lens cuts behind each node, when the net came from the splitter.
    #[serde(default)]
    pub paths: Vec<Vec<SplitStep>>,
    /// Representatives of overlap edges followed by extra edges.
    #[serde(default)]
    pub edge_members: Vec<EdgeMembers>,
    #[serde(default)]
    pub layout: Vec<[f64; 2]>,
    /// Mean estimated error of each node's members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_errors: Option<Vec<f64>>,
}

impl ReebNetDocument {
    pub fn to_net(&self) -> ReebNet {
        ReebNet {
            nodes: self.nodes.iter().map(|n| VertexSet::new(n.clone())).collect(),
            overlap_edges: self.overlap_edges.clone(),
            extra_edges: self.extra_edges.clone(),
            excluded: VertexSet::new(self.excluded.clone()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and checks a document: version, index ranges and aligned arrays.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReebNetDocument = serde_json::from_str(text)?;
        doc.check()?;
        Ok(doc)
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.format != FORMAT {
            return bad(format!("unsupported format {:?}, expected {FORMAT:?}", self.format));
        }
        let k = self.nodes.len();
        let vertex_ok = |v: &usize| *v < self.num_vertices;
        if !self.nodes.iter().flatten().chain(&self.excluded).all(vertex_ok) {
            return bad("vertex id out of range".into());
        }
        let pairs = self
            .overlap_edges
            .iter()
            .copied()
            .chain(self.extra_edges.iter().map(|e| e.nodes))
            .chain(self.edge_members.iter().map(|e| e.nodes));
        for (a, b) in pairs {
            if a >= k || b >= k || a == b {
                return bad(format!("edge ({a},{b}) is not a pair of distinct nodes"));
            }
        }
        for e in &self.extra_edges {
            if !vertex_ok(&e.bridge.0) || !vertex_ok(&e.bridge.1) {
                return bad("bridge vertex out of range".into());
            }
        }
        for (name, len) in [
            ("summaries", self.summaries.len()),
            ("paths", self.paths.len()),
            ("layout", self.layout.len()),
            ("node_errors", self.node_errors.as_ref().map_or(0, Vec::len)),
        ] {
            if len != 0 && len != k {
                return bad(format!("{name} has {len} entries for {k} nodes"));
            }
        }
        if !self.edge_members.is_empty() && self.edge_members.len() != self.overlap_edges.len() + self.extra_edges.len() {
            return bad("edge_members does not match the edge lists".into());
        }
        Ok(())
    }
}

/// Member of `from` closest to `to` in `proj` restricted to both nodes;
/// ties go to the larger degree, then the smaller id.
fn closest_member(proj: &Graph, from: &VertexSet, to: &VertexSet) -> usize {
    let inside = |v: usize| from.contains(v) || to.contains(v);
    let mut dist: std::collections::HashMap<usize, usize> = to.iter().map(|v| (v, 0)).collect();
    let mut queue: VecDeque<usize> = to.iter().collect();
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &u in proj.neighbors(v) {
            if inside(u) && !dist.contains_key(&u) {
                dist.insert(u, d + 1);
                queue.push_back(u);
            }
        }
    }
    from.iter()
        .min_by_key(|&v| {
            (
                dist.get(&v).copied().unwrap_or(usize::MAX),
                std::cmp::Reverse(proj.degree_count(v)),
                v,
            )
        })
        .expect("Reeb nodes are nonempty")
}

pub fn edge_members(net: &ReebNet, proj: &Graph) -> Vec<EdgeMembers> {
    let pairs: Vec<(usize, usize)> = net
        .overlap_edges
        .iter()
        .copied()
        .chain(net.extra_edges.iter().map(|e| e.nodes))
        .collect();
    pairs
        .par_iter()
        .map(|&(a, b)| EdgeMembers {
            nodes: (a, b),
            members: (
                closest_member(proj, &net.nodes[a], &net.nodes[b]),
                closest_member(proj, &net.nodes[b], &net.nodes[a]),
            ),
        })
        .collect()
}

/// Mean of `errors` over each node's members.
pub fn node_errors(net: &ReebNet, errors: &[f64]) -> Vec<f64> {
    net.nodes
        .iter()
        .map(|n| n.iter().map(|v| errors[v]).sum::<f64>() / n.len().max(1) as f64)
        .collect()
}

pub struct DocumentParts<'a> {
    pub net: &'a ReebNet,
    pub num_vertices: usize,
    pub projection: &'a Graph,
    pub layout: &'a Layout,
    pub summaries: Vec<NodeSummary>,
    pub paths: Vec<Vec<SplitStep>>,
    pub errors: Option<&'a ErrorReport>,
}

pub fn build_document(parts: DocumentParts<'_>) -> ReebNetDocument {
    let net = parts.net;
    ReebNetDocument {
        format: FORMAT.to_string(),
        num_vertices: parts.num_vertices,
        nodes: net.nodes.iter().map(|n| n.as_slice().to_vec()).collect(),
        overlap_edges: net.overlap_edges.clone(),
        extra_edges: net.extra_edges.clone(),
        excluded: net.excluded.as_slice().to_vec(),
        summaries: parts.summaries,
        paths: parts.paths,
        edge_members: edge_members(net, parts.projection),
        layout: parts.layout.coords.clone(),
        node_errors: parts.errors.map(|r| node_errors(net, &r.estimated_error)),
    }
}

pub fn to_dot(doc: &ReebNetDocument) -> String {
    let mut out = String::from("graph reebnet {\n  node [shape=circle, style=filled];\n");
    for (i, n) in doc.nodes.iter().enumerate() {
        let _ = write!(out, "  n{i} [label=\"{i}\", size={}", n.len());
        if let Some(s) = doc.summaries.get(i).and_then(|s| s.dominant) {
            let _ = write!(out, ", fillcolor=\"{}\"", PALETTE[s % PALETTE.len()]);
        }
        if let Some(p) = doc.layout.get(i) {
            let _ = write!(out, ", pos=\"{},{}!\"", p[0], p[1]);
        }
        out.push_str("];\n");
    }
    for &(a, b) in &doc.overlap_edges {
        let _ = writeln!(out, "  n{a} -- n{b};");
    }
    for e in &doc.extra_edges {
        let _ = writeln!(out, "  n{} -- n{} [style=dashed];", e.nodes.0, e.nodes.1);
    }
    out.push_str("}\n");
    out
}

pub fn to_graphml(doc: &ReebNetDocument) -> String {
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        "  <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"int\"/>\n",
        "  <key id=\"x\" for=\"node\" attr.name=\"x\" attr.type=\"double\"/>\n",
        "  <key id=\"y\" for=\"node\" attr.name=\"y\" attr.type=\"double\"/>\n",
        "  <key id=\"dominant\" for=\"node\" attr.name=\"dominant\" attr.type=\"int\"/>\n",
        "  <key id=\"error\" for=\"node\" attr.name=\"error\" attr.type=\"double\"/>\n",
        "  <key id=\"kind\" for=\"edge\" attr.name=\"kind\" attr.type=\"string\"/>\n",
        "  <graph id=\"reebnet\" edgedefault=\"undirected\">\n",
    ));
    for (i, n) in doc.nodes.iter().enumerate() {
        let _ = write!(out, "    <node id=\"n{i}\"><data key=\"size\">{}</data>", n.len());
        if let Some(p) = doc.layout.get(i) {
            let _ = write!(out, "<data key=\"x\">{}</data><data key=\"y\">{}</data>", p[0], p[1]);
        }
        if let Some(d) = doc.summaries.get(i).and_then(|s| s.dominant) {
            let _ = write!(out, "<data key=\"dominant\">{d}</data>");
        }
        if let Some(e) = doc.node_errors.as_ref().map(|e| e[i]) {
            let _ = write!(out, "<data key=\"error\">{e}</data>");
        }
        out.push_str("</node>\n");
    }
    let edges = doc
        .overlap_edges
        .iter()
        .map(|&e| (e, "overlap"))
        .chain(doc.extra_edges.iter().map(|e| (e.nodes, "extra")));
    for (k, ((a, b), kind)) in edges.enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{k}\" source=\"n{a}\" target=\"n{b}\"><data key=\"kind\">{kind}</data></edge>"
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

const PIXELS_PER_UNIT: f64 = 40.0;
const MARGIN: f64 = 30.0;

fn radius(size: usize) -> f64 {
    4.0 + 1.5 * (size as f64).sqrt()
}

fn pie(out: &mut String, cx: f64, cy: f64, r: f64, mixture: &[f64]) {
    let filled: Vec<(usize, f64)> = mixture.iter().copied().enumerate().filter(|&(_, w)| w > 0.0).collect();
    if filled.len() <= 1 {
        let color = filled.first().map_or("#cccccc", |&(c, _)| PALETTE[c % PALETTE.len()]);
        let _ = writeln!(out, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" fill=\"{color}\"/>");
        return;
    }
    let mut angle = -std::f64::consts::FRAC_PI_2;
    for (c, w) in filled {
        let sweep = w * std::f64::consts::TAU;
        let (x0, y0) = (cx + r * angle.cos(), cy + r * angle.sin());
        angle += sweep;
        let (x1, y1) = (cx + r * angle.cos(), cy + r * angle.sin());
        let large = u8::from(sweep > std::f64::consts::PI);
        let _ = writeln!(
            out,
            "<path d=\"M{cx:.2},{cy:.2} L{x0:.2},{y0:.2} A{r:.2},{r:.2} 0 {large} 1 {x1:.2},{y1:.2} Z\" fill=\"{}\"/>",
            PALETTE[c % PALETTE.len()]
        );
    }
}

/// Self-contained page with one SVG drawing of the net. Node area follows
/// member count, slices follow label mixture, and when error estimates are
/// present a red ring shows each node's mean estimated error.
pub fn to_html(doc: &ReebNetDocument) -> String {
    let k = doc.nodes.len();
    let pts: Vec<[f64; 2]> = (0..k)
        .map(|i| {
            let p = doc.layout.get(i).copied().unwrap_or([i as f64, 0.0]);
            [MARGIN + PIXELS_PER_UNIT * p[0], MARGIN + PIXELS_PER_UNIT * p[1]]
        })
        .collect();
    let width = pts.iter().map(|p| p[0]).fold(0.0, f64::max) + 2.0 * MARGIN;
    let height = pts.iter().map(|p| p[1]).fold(0.0, f64::max) + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    );
    svg.push_str("<g stroke=\"#888888\" stroke-width=\"1\">\n");
    for &(a, b) in &doc.overlap_edges {
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>",
            pts[a][0], pts[a][1], pts[b][0], pts[b][1]
        );
    }
    for e in &doc.extra_edges {
        let (a, b) = e.nodes;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke-dasharray=\"4 3\"/>",
            pts[a][0], pts[a][1], pts[b][0], pts[b][1]
        );
    }
    svg.push_str("</g>\n<g>\n");
    for (i, n) in doc.nodes.iter().enumerate() {
        let r = radius(n.len());
        let [cx, cy] = pts[i];
        let mixture = doc.summaries.get(i).map(|s| s.mixture.clone()).unwrap_or_default();
        pie(&mut svg, cx, cy, r, &mixture);
        if let Some(errs) = &doc.node_errors {
            let _ = writeln!(
                svg,
                "<circle class=\"error\" cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#ff0000\" stroke-width=\"3\" stroke-opacity=\"{:.3}\"/>",
                r + 2.0,
                errs[i].clamp(0.0, 1.0)
            );
        }
    }
    svg.push_str("</g>\n</svg>\n");
    let mut html = String::from("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Reeb net</title>\n</head>\n<body>\n");
    let _ = writeln!(
        html,
        "<p>{} nodes, {} overlap edges, {} extra edges, {} excluded datapoints</p>",
        k,
        doc.overlap_edges.len(),
        doc.extra_edges.len(),
        doc.excluded.len()
    );
    html.push_str(&svg);
    html.push_str("</body>\n</html>\n");
    html
}

/// Error estimates written next to the net.
pub struct ErrorArtifacts<'a> {
    pub report: &'a ErrorReport,
    pub labels: &'a LabelData,
    pub corrected: Option<&'a [usize]>,
    pub summary: &'a AucSummary,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `reebnet.json`, `reebnet.dot`, `reebnet.graphml` and `map.html`,
/// plus `errors.csv` and `summary.json` when error estimates are given.
pub fn emit_report(dir: &Path, doc: &ReebNetDocument, errors: Option<ErrorArtifacts<'_>>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir, "reebnet.json", &doc.to_json()?)?,
        write(dir, "reebnet.dot", &to_dot(doc))?,
        write(dir, "reebnet.graphml", &to_graphml(doc))?,
        write(dir, "map.html", &to_html(doc))?,
    ];
    if let Some(e) = errors {
        written.push(write(dir, "errors.csv", &write_errors_csv(e.report, e.labels, e.corrected))?);
        let mut summary = serde_json::to_string_pretty(e.summary)?;
        summary.push('\n');
        written.push(write(dir, "summary.json", &summary)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::layout_reeb;
    use crate::reeb::{build_reeb_net, project, summarize, LabelMode};

    /// Checks a DOT document against the subset grammar the writer uses and
    /// returns the declared node ids and edges.
    fn parse_dot(text: &str) -> std::result::Result<(Vec<String>, Vec<(String, String)>), String> {
        let body = text
            .trim()
            .strip_prefix("graph reebnet {")
            .and_then(|b| b.strip_suffix('}'))
            .ok_or("missing graph header or closing brace")?;
        let ident = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        let attrs = |s: &str| -> std::result::Result<(), String> {
            let inner = s.strip_prefix('[').and_then(|s| s.strip_suffix(']')).ok_or("bad attribute list")?;
            let mut in_quote = false;
            let mut parts = vec![String::new()];
            for c in inner.chars() {
                match c {
                    '"' => in_quote = !in_quote,
                    ',' if !in_quote => parts.push(String::new()),
                    _ => parts.last_mut().unwrap().push(c),
                }
            }
            if in_quote {
                return Err("unterminated string".into());
            }
            for p in parts {
                let (k, v) = p.split_once('=').ok_or(format!("attribute without value: {p}"))?;
                if !ident(k.trim()) || v.trim().is_empty() {
                    return Err(format!("bad attribute {p}"));
                }
            }
            Ok(())
        };
        let (mut nodes, mut edges) = (Vec::new(), Vec::new());
        for stmt in body.split(";\n").map(str::trim).filter(|s| !s.is_empty()) {
            let stmt = stmt.trim_end_matches(';');
            let (head, tail) = match stmt.find('[') {
                Some(i) => (stmt[..i].trim(), Some(&stmt[i..])),
                None => (stmt, None),
            };
            if let Some(t) = tail {
                attrs(t)?;
            }
            if let Some((a, b)) = head.split_once("--") {
                let (a, b) = (a.trim(), b.trim());
                if !ident(a) || !ident(b) {
                    return Err(format!("bad edge {head}"));
                }
                edges.push((a.to_string(), b.to_string()));
            } else if head == "node" {
                continue;
            } else if ident(head) {
                nodes.push(head.to_string());
            } else {
                return Err(format!("bad statement {stmt}"));
            }
        }
        for (a, b) in &edges {
            if !nodes.contains(a) || !nodes.contains(b) {
                return Err(format!("edge {a} -- {b} uses an undeclared node"));
            }
        }
        Ok((nodes, edges))
    }

    fn sample() -> (ReebNetDocument, Graph) {
        let g = Graph::from_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (5, 6), (4, 5)]).unwrap();
        let mut net = build_reeb_net(&[
            VertexSet::new(vec![0, 1, 2]),
            VertexSet::new(vec![2, 3]),
            VertexSet::new(vec![5, 6]),
        ]);
        net.extra_edges.push(ExtraEdge {
            nodes: (1, 2),
            bridge: (4, 5),
            distance: 0.25,
        });
        net.nodes[1] = VertexSet::new(vec![2, 3, 4]);
        let proj = project(&net, &g).unwrap();
        let labels: Vec<Option<usize>> = vec![Some(0), Some(0), Some(1), Some(1), Some(1), Some(0), None];
        let doc = build_document(DocumentParts {
            net: &net,
            num_vertices: 7,
            projection: &proj,
            layout: &layout_reeb(&net, 0),
            summaries: summarize(&net, &labels, 2, LabelMode::Training).unwrap(),
            paths: vec![Vec::new(); 3],
            errors: None,
        });
        (doc, proj)
    }

    #[test]
    fn json_round_trip() {
        let (doc, _) = sample();
        let text = doc.to_json().unwrap();
        assert_eq!(ReebNetDocument::from_json(&text).unwrap(), doc);
        assert_eq!(doc.to_net().num_nodes(), 3);
        let wrong = text.replace("reebnet/1", "reebnet/2");
        assert!(ReebNetDocument::from_json(&wrong).is_err());
    }

    #[test]
    fn dot_is_well_formed() {
        let (doc, _) = sample();
        let (nodes, edges) = parse_dot(&to_dot(&doc)).unwrap();
        assert_eq!(nodes, ["n0", "n1", "n2"]);
        assert_eq!(edges.len(), 2);
        assert!(parse_dot("graph reebnet {\n  n0 -- n1;\n}\n").is_err());
    }

    #[test]
    fn graphml_lists_every_node_and_edge() {
        let (doc, _) = sample();
        let xml = to_graphml(&doc);
        assert_eq!(xml.matches("<node ").count(), 3);
        assert_eq!(xml.matches("<edge ").count(), 2);
        assert_eq!(xml.matches("<node").count(), xml.matches("</node>").count());
        assert!(xml.contains("<data key=\"kind\">extra</data>"));
    }

    #[test]
    fn html_overlay_only_with_errors() {
        let (mut doc, _) = sample();
        let plain = to_html(&doc);
        assert!(!plain.contains("class=\"error\""));
        assert!(plain.contains("<path"));
        doc.node_errors = Some(vec![0.0, 0.5, 1.0]);
        assert_eq!(to_html(&doc).matches("class=\"error\"").count(), 3);
    }

    #[test]
    fn representatives_prefer_shared_and_bridging_members() {
        let (doc, _) = sample();
        assert_eq!(doc.edge_members[0].nodes, (0, 1));
        assert_eq!(doc.edge_members[0].members, (2, 2));
        // Extra edge 1-2 is realized by bridge 4-5.
        assert_eq!(doc.edge_members[1].members, (4, 5));
    }

    #[test]
    fn emits_all_files() {
        let (doc, _) = sample();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(dir.path(), &doc, None).unwrap();
        assert_eq!(files.len(), 4);
        let back = fs::read_to_string(dir.path().join("reebnet.json")).unwrap();
        assert_eq!(ReebNetDocument::from_json(&back).unwrap(), doc);
        let blocked = dir.path().join("reebnet.json").join("sub");
        assert!(emit_report(&blocked, &doc, None).is_err());
    }
}
