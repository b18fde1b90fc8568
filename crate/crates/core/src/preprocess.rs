//! Embeddings to graphs: PCA whitening, row normalization and exact
//! k-nearest-neighbor graphs.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITERS: usize = 1000;
/// Eigenvalues below this fraction of the leading one count as rank loss.
const RANK_TOL: f64 = 1e-10;

/// Dense row-major `n x dim` matrix of per-datapoint embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * dim {
            return Err(Error::DimensionMismatch(format!(
                "embedding {n}x{dim} needs {} values, got {}",
                n * dim,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: i / dim.max(1),
                col: i % dim.max(1),
            });
        }
        Ok(EmbeddingMatrix { n, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Whitened {
    pub embedding: EmbeddingMatrix,
    /// Variances along the kept principal directions, descending.
    pub variances: Vec<f64>,
    /// Requested dimensions dropped because the data has lower rank.
    pub dropped: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `a x = b` for a dense `d x d` system by partial pivoting.
/// Returns `None` when a pivot vanishes.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, d: usize) -> Option<Vec<f64>> {
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i * d + col].abs().total_cmp(&a[j * d + col].abs()))?;
        if a[piv * d + col] == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..d {
                a.swap(piv * d + k, col * d + k);
            }
            b.swap(piv, col);
        }
        for i in col + 1..d {
            let f = a[i * d + col] / a[col * d + col];
            if f != 0.0 {
                for k in col..d {
                    a[i * d + k] -= f * a[col * d + k];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|k| a[i * d + k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i * d + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Polishes an approximate eigenpair by Rayleigh quotient iteration.
fn refine(c: &[f64], d: usize, mut v: Vec<f64>) -> (f64, Vec<f64>) {
    let rayleigh = |v: &[f64]| -> f64 { (0..d).map(|i| v[i] * dot(&c[i * d..(i + 1) * d], v)).sum() };
    let mut lambda = rayleigh(&v);
    for _ in 0..5 {
        let mut shifted = c.to_vec();
        for i in 0..d {
            shifted[i * d + i] -= lambda;
        }
        let Some(mut w) = solve(shifted, v.clone(), d) else {
            break;
        };
        let s = norm(&w);
        if !(s > 0.0) {
            break;
        }
        w.iter_mut().for_each(|x| *x /= s);
        if dot(&w, &v) < 0.0 {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        let next = rayleigh(&w);
        let done = (next - lambda).abs() <= POWER_TOL * next.abs().max(1.0) * 1e-3;
        v = w;
        lambda = next;
        if done {
            break;
        }
    }
    (lambda, v)
}

/// Leading eigenpair of a symmetric PSD matrix by power iteration.
pub(crate) fn power_iteration(c: &[f64], d: usize) -> Option<(f64, Vec<f64>)> {
    // Start from the column with the largest norm.
    let start = (0..d)
        .map(|j| (j, (0..d).map(|i| c[i * d + j].powi(2)).sum::<f64>()))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if start.1 <= 0.0 {
        return None;
    }
    let mut v: Vec<f64> = (0..d).map(|i| c[i * d + start.0]).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let mut w: Vec<f64> = (0..d).map(|i| dot(&c[i * d..(i + 1) * d], &v)).collect();
        lambda = norm(&w);
        if lambda <= 0.0 {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= lambda);
        let diff = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        v = w;
        if diff < POWER_TOL {
            break;
        }
    }
    Some((lambda, v))
}

/// Centers the rows, projects onto the top `target_dim` principal
/// directions and rescales each to unit (sample) variance.
pub fn pca_whiten(e: &EmbeddingMatrix, target_dim: usize) -> Result<Whitened> {
    let (n, d) = (e.n, e.dim);
    if target_dim == 0 || target_dim > n.min(d) {
        return Err(Error::InvalidParameter(format!(
            "target dimension {target_dim} must lie in [1, {}]",
            n.min(d)
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("PCA needs at least two rows".into()));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(e.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<f64> = (0..n)
        .flat_map(|i| e.row(i).iter().zip(&mean).map(|(x, m)| x - m).collect::<Vec<_>>())
        .collect();
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let r = &centered[i * d..(i + 1) * d];
        for a in 0..d {
            for b in a..d {
                cov[a * d + b] += r[a] * r[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let x = cov[a * d + b] / (n - 1) as f64;
            cov[a * d + b] = x;
            cov[b * d + a] = x;
        }
    }

    // Deflated power iteration, each pair polished against the full covariance.
    let mut deflated = cov.clone();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut variances = Vec::new();
    for _ in 0..target_dim {
        let Some((_, v)) = power_iteration(&deflated, d) else {
            break;
        };
        let (lambda, mut dir) = refine(&cov, d, v);
        for prev in &directions {
            let p = dot(&dir, prev);
            dir.iter_mut().zip(prev).for_each(|(x, y)| *x -= p * y);
        }
        let s = norm(&dir);
        if !(s > 1e-8) || lambda <= RANK_TOL * variances.first().copied().unwrap_or(lambda).max(f64::MIN_POSITIVE) {
            break;
        }
        dir.iter_mut().for_each(|x| *x /= s);
        for a in 0..d {
            for b in 0..d {
                deflated[a * d + b] -= lambda * dir[a] * dir[b];
            }
        }
        directions.push(dir);
        variances.push(lambda);
    }
    for dir in &mut directions {
        if let Some(first) = dir.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                dir.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let kept = directions.len();
    let dropped = target_dim - kept;
    if dropped > 0 {
        warn!("data has rank {kept} below the requested {target_dim} dimensions; dropping {dropped}");
    }
    let mut out = Vec::with_capacity(n * kept);
    for i in 0..n {
        let r = &centered[i * d..(i + 1) * d];
        for (dir, var) in directions.iter().zip(&variances) {
            out.push(dot(r, dir) / var.sqrt());
        }
    }
    Ok(Whitened {
        embedding: EmbeddingMatrix::new(n, kept, out)?,
        variances,
        dropped,
    })
}

/// Scales every nonzero row to unit length. Returns the indices of zero rows.
pub fn l2_normalize(e: &EmbeddingMatrix) -> (EmbeddingMatrix, Vec<usize>) {
    let mut values = e.values.clone();
    let mut zero = Vec::new();
    for i in 0..e.n {
        let row = &mut values[i * e.dim..(i + 1) * e.dim];
        let s = norm(row);
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        } else {
            zero.push(i);
        }
    }
    if !zero.is_empty() {
        warn!("{} zero rows left unnormalized", zero.len());
    }
    (
        EmbeddingMatrix {
            n: e.n,
            dim: e.dim,
            values,
        },
        zero,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cosine,
    Euclidean,
}

/// The `k` nearest rows of `i` (self excluded), ties to smaller index.
pub fn nearest(e: &EmbeddingMatrix, norms: &[f64], i: usize, k: usize, metric: Metric) -> Vec<usize> {
    let a = e.row(i);
    let mut cand: Vec<(f64, usize)> = (0..e.n)
        .filter(|&j| j != i)
        .map(|j| {
            let b = e.row(j);
            let d = match metric {
                Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
                Metric::Cosine => {
                    let den = norms[i] * norms[j];
                    if den > 0.0 {
                        1.0 - dot(a, b) / den
                    } else {
                        1.0
                    }
                }
            };
            (d, j)
        })
        .collect();
    let cmp = |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Exact kNN graph, symmetrized by union.
pub fn knn_graph(e: &EmbeddingMatrix, k: usize, metric: Metric) -> Result<Graph> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if e.n < 2 {
        return Err(Error::InvalidParameter("kNN needs at least two rows".into()));
    }
    let norms: Vec<f64> = (0..e.n).map(|i| norm(e.row(i))).collect();
    let lists: Vec<Vec<usize>> = (0..e.n)
        .into_par_iter()
        .map(|i| nearest(e, &norms, i, k, metric))
        .collect();
    let mut edges: Vec<(usize, usize, f64)> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i.min(j), i.max(j), 1.0)))
        .collect();
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    edges.dedup_by_key(|e| (e.0, e.1));
    Ok(Graph::from_canonical(e.n, edges, false))
}

/// Headerless CSV (or with a non-numeric header row), one row per datapoint.
pub fn parse_embedding_csv(text: &str) -> Result<EmbeddingMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                    return Err(Error::parse(i + 1, format!("non-finite value {x}")));
                }
                if rows.first().is_some_and(|r| r.len() != row.len()) {
                    return Err(Error::parse(
                        i + 1,
                        format!("expected {} fields, found {}", rows[0].len(), row.len()),
                    ));
                }
                rows.push(row);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::parse(i + 1, e.to_string())),
        }
    }
    EmbeddingMatrix::from_rows(&rows)
}

/// Little-endian binary: `u64 n`, `u64 dim`, then `n * dim` `f64` values row by row.
pub fn parse_embedding_bin(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let word = |k: usize| -> Option<u64> {
        bytes
            .get(k * 8..k * 8 + 8)
            .map(|b| u64::from_le_bytes(b.try_into().expect("8-byte slice")))
    };
    let (n, dim) = match (word(0), word(1)) {
        (Some(n), Some(d)) => (n, d),
        _ => return Err(Error::parse(0, "truncated header")),
    };
    let count = n
        .checked_mul(dim)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::parse(0, "header dimensions overflow"))?;
    let body = &bytes[16..];
    if count.checked_mul(8) != Some(body.len()) {
        return Err(Error::parse(
            0,
            format!("header promises {n}x{dim} values but body has {} bytes", body.len()),
        ));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    EmbeddingMatrix::new(n as usize, dim as usize, values)
}

pub fn write_embedding_bin(e: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + e.values.len() * 8);
    out.extend_from_slice(&(e.n as u64).to_le_bytes());
    out.extend_from_slice(&(e.dim as u64).to_le_bytes());
    for x in &e.values {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}
