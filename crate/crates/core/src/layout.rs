//! 2-D drawing of a Reeb net: stress majorization over shortest-path
//! distances per component, components packed on shelves.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::preprocess::power_iteration;
use crate::reeb::ReebNet;

const GRADIENT_TOL: f64 = 1e-4;
const MAX_SWEEPS: usize = 1000;
/// Components above this size keep only edge and pivot terms.
const EXACT_LIMIT: usize = 1000;
const PIVOTS: usize = 64;
const GAP: f64 = 1.0;
const JITTER: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// One point per Reeb node.
    pub coords: Vec<[f64; 2]>,
}

fn bfs(g: &Graph, local: &[usize], index: &[usize], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; local.len()];
    let mut queue = VecDeque::from([src]);
    dist[src] = 0.0;
    while let Some(a) = queue.pop_front() {
        for &u in g.neighbors(local[a]) {
            let b = index[u];
            if dist[b].is_infinite() {
                dist[b] = dist[a] + 1.0;
                queue.push_back(b);
            }
        }
    }
    dist
}

/// Farthest-point pivots (first one seeded) with their BFS distance rows.
fn pivots(g: &Graph, local: &[usize], index: &[usize], first: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    let k = local.len();
    let mut chosen = vec![first];
    let mut rows = vec![bfs(g, local, index, first)];
    let mut nearest = rows[0].clone();
    while chosen.len() < PIVOTS.min(k) {
        let next = (0..k)
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        if nearest[next] == 0.0 {
            break;
        }
        let d = bfs(g, local, index, next);
        for (x, &y) in nearest.iter_mut().zip(&d) {
            *x = x.min(y);
        }
        chosen.push(next);
        rows.push(d);
    }
    (chosen, rows)
}

/// Pivot MDS: double-centered squared pivot distances projected onto their
/// two leading directions. Exact classical MDS when every node is a pivot.
fn mds_init(rows: &[Vec<f64>], k: usize) -> Vec<[f64; 2]> {
    let p = rows.len();
    let sq: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|d| d * d).collect()).collect();
    let pivot_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let node_mean: Vec<f64> = (0..k).map(|i| sq.iter().map(|r| r[i]).sum::<f64>() / p as f64).collect();
    let total = pivot_mean.iter().sum::<f64>() / p as f64;
    // c is k x p, row-major.
    let c: Vec<f64> = (0..k)
        .flat_map(|i| {
            let (sq, pivot_mean, node_mean) = (&sq, &pivot_mean, &node_mean);
            (0..p).map(move |j| -0.5 * (sq[j][i] - pivot_mean[j] - node_mean[i] + total))
        })
        .collect();
    let mut m = vec![0.0; p * p];
    for i in 0..k {
        let r = &c[i * p..(i + 1) * p];
        for a in 0..p {
            for b in 0..p {
                m[a * p + b] += r[a] * r[b];
            }
        }
    }
    let mut out = vec![[0.0; 2]; k];
    for axis in 0..2 {
        let Some((lambda, v)) = power_iteration(&m, p) else {
            break;
        };
        if lambda <= 1e-12 {
            break;
        }
        let scale = lambda.powf(-0.25);
        for (i, pt) in out.iter_mut().enumerate() {
            pt[axis] = scale * c[i * p..(i + 1) * p].iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        for a in 0..p {
            for b in 0..p {
                m[a * p + b] -= lambda * v[a] * v[b];
            }
        }
    }
    out
}

/// Distance terms `(j, d_ij)` for every node of one component: all pairs
/// for small components, graph edges plus pivots otherwise.
fn terms(g: &Graph, local: &[usize], index: &[usize], pivots: &[usize], rows: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
    let k = local.len();
    if k <= EXACT_LIMIT {
        return (0..k)
            .map(|a| {
                bfs(g, local, index, a)
                    .into_iter()
                    .enumerate()
                    .filter(|&(b, _)| b != a)
                    .collect()
            })
            .collect();
    }
    (0..k)
        .map(|a| {
            let mut t: Vec<(usize, f64)> = g.neighbors(local[a]).iter().map(|&u| (index[u], 1.0)).collect();
            for (p, row) in pivots.iter().zip(rows) {
                if *p != a && !t.iter().any(|&(b, _)| b == *p) {
                    t.push((*p, row[a]));
                }
            }
            t
        })
        .collect()
}

fn gradient_norm(x: &[[f64; 2]], terms: &[Vec<(usize, f64)>]) -> f64 {
    let mut total = 0.0;
    for (a, t) in terms.iter().enumerate() {
        let mut grad = [0.0; 2];
        for &(b, d) in t {
            let dx = [x[a][0] - x[b][0], x[a][1] - x[b][1]];
            let len = dx[0].hypot(dx[1]);
            if len > 0.0 {
                let w = 1.0 / (d * d);
                let f = 2.0 * w * (len - d) / len;
                grad[0] += f * dx[0];
                grad[1] += f * dx[1];
            }
        }
        total += grad[0] * grad[0] + grad[1] * grad[1];
    }
    total.sqrt()
}

/// Majorization sweeps until the stress gradient falls below tolerance.
fn majorize(x: &mut [[f64; 2]], terms: &[Vec<(usize, f64)>]) {
    for _ in 0..MAX_SWEEPS {
        for (a, t) in terms.iter().enumerate() {
            let (mut num, mut den) = ([0.0; 2], 0.0);
            for &(b, d) in t {
                let w = 1.0 / (d * d);
                let dx = [x[a][0] - x[b][0], x[a][1] - x[b][1]];
                let len = dx[0].hypot(dx[1]);
                let s = if len > 0.0 { d / len } else { 0.0 };
                num[0] += w * (x[b][0] + s * dx[0]);
                num[1] += w * (x[b][1] + s * dx[1]);
                den += w;
            }
            if den > 0.0 {
                x[a] = [num[0] / den, num[1] / den];
            }
        }
        if gradient_norm(x, terms) < GRADIENT_TOL {
            break;
        }
    }
}

/// Lays out every connected component of the net independently and packs
/// them left to right in rows, largest first.
pub fn layout_reeb(reeb: &ReebNet, seed: u64) -> Layout {
    let g = reeb.node_graph();
    let labels = reeb.components();
    let mut groups = labels.groups();
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut index = vec![0usize; g.n()];
    let mut boxes: Vec<(Vec<usize>, Vec<[f64; 2]>, [f64; 2])> = Vec::new();
    for group in groups {
        for (a, &v) in group.iter().enumerate() {
            index[v] = a;
        }
        let k = group.len();
        let mut x = vec![[0.0; 2]; k];
        if k > 1 {
            let (piv, rows) = pivots(&g, &group, &index, rng.gen_range(0..k));
            x = mds_init(&rows, k);
            // Separates nodes the initial projection put on top of each other.
            for p in &mut x {
                p[0] += JITTER * rng.gen::<f64>();
                p[1] += JITTER * rng.gen::<f64>();
            }
            majorize(&mut x, &terms(&g, &group, &index, &piv, &rows));
        }
        let lo = x.iter().fold([f64::INFINITY; 2], |m, p| [m[0].min(p[0]), m[1].min(p[1])]);
        x.iter_mut().for_each(|p| *p = [p[0] - lo[0], p[1] - lo[1]]);
        let size = x.iter().fold([0.0f64; 2], |m, p| [m[0].max(p[0]), m[1].max(p[1])]);
        boxes.push((group, x, size));
    }
    let area: f64 = boxes.iter().map(|b| (b.2[0] + GAP) * (b.2[1] + GAP)).sum();
    let widest = boxes.iter().map(|b| b.2[0]).fold(0.0, f64::max);
    let row_limit = widest.max(area.sqrt() * 1.2);
    let mut coords = vec![[0.0; 2]; g.n()];
    let (mut cx, mut cy, mut row_h) = (0.0, 0.0, 0.0f64);
    for (group, x, size) in boxes {
        if cx > 0.0 && cx + size[0] > row_limit {
            cx = 0.0;
            cy += row_h + GAP;
            row_h = 0.0;
        }
        for (v, p) in group.into_iter().zip(x) {
            coords[v] = [p[0] + cx, p[1] + cy];
        }
        cx += size[0] + GAP;
        row_h = row_h.max(size[1]);
    }
    Layout { coords }
}
