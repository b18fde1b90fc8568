//! Ground-truth-free error estimates: diffuse training labels over the
//! projected Reeb graph and score each prediction by how little of the
//! arriving label mass agrees with it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diffusion::diffuse;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq)]
pub struct LabelData {
    pub num_classes: usize,
    /// Predicted class of every datapoint.
    pub predicted: Vec<usize>,
    /// Known label for training datapoints, `None` elsewhere.
    pub training: Vec<Option<usize>>,
    /// Probability the model assigned to its prediction.
    pub prediction_probs: Option<Vec<f64>>,
}

impl LabelData {
    pub fn n(&self) -> usize {
        self.predicted.len()
    }

    pub fn training_mask(&self) -> Vec<bool> {
        self.training.iter().map(Option::is_some).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.training.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} predictions but {} training entries",
                n,
                self.training.len()
            )));
        }
        if let Some(p) = &self.prediction_probs {
            if p.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} predictions but {} probabilities",
                    n,
                    p.len()
                )));
            }
        }
        let classes = self.num_classes;
        for (vertex, &class) in self.predicted.iter().enumerate() {
            if class >= classes {
                return Err(Error::InvalidClass {
                    vertex,
                    class,
                    classes,
                });
            }
        }
        for (vertex, t) in self.training.iter().enumerate() {
            if let Some(class) = *t {
                if class >= classes {
                    return Err(Error::InvalidClass {
                        vertex,
                        class,
                        classes,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorReport {
    /// Estimated error in `[0, 1]` per datapoint.
    pub estimated_error: Vec<f64>,
    /// No training mass reached the datapoint at all.
    pub unsupported: Vec<bool>,
    /// `1 - probability` of each prediction, when probabilities are known.
    pub baseline_uncertainty: Option<Vec<f64>>,
    pub auc_gtda: Option<f64>,
    pub auc_baseline: Option<f64>,
}

/// Diffuses one-hot training labels over `proj` for `steps` rounds, row
/// normalizes, and reports `1 - mass on the predicted class`.
pub fn error_estimation(proj: &Graph, labels: &LabelData, steps: usize, alpha: f64) -> Result<ErrorReport> {
    labels.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if steps < 1 {
        return Err(Error::InvalidParameter("diffusion needs at least one step".into()));
    }
    let n = proj.n();
    if labels.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "labels cover {} datapoints but the graph has {n}",
            labels.n()
        )));
    }
    let m = labels.num_classes;
    let mut seed = vec![0.0; n * m];
    for (i, t) in labels.training.iter().enumerate() {
        if let Some(c) = *t {
            seed[i * m + c] = 1.0;
        }
    }
    let mass = diffuse(proj, &seed, m, steps, alpha);
    let mut estimated_error = Vec::with_capacity(n);
    let mut unsupported = Vec::with_capacity(n);
    for i in 0..n {
        let row = &mass[i * m..(i + 1) * m];
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            let e = 1.0 - row[labels.predicted[i]] / total;
            estimated_error.push(e.clamp(0.0, 1.0));
            unsupported.push(false);
        } else {
            estimated_error.push(1.0);
            unsupported.push(true);
        }
    }
    Ok(ErrorReport {
        estimated_error,
        unsupported,
        baseline_uncertainty: labels
            .prediction_probs
            .as_ref()
            .map(|p| p.iter().map(|x| 1.0 - x).collect()),
        auc_gtda: None,
        auc_baseline: None,
    })
}

/// `1 - probability` of each prediction.
pub fn uncertainty_baseline(labels: &LabelData) -> Result<Vec<f64>> {
    let probs = labels
        .prediction_probs
        .as_ref()
        .ok_or(Error::MissingProbabilities)?;
    Ok(probs.iter().map(|p| 1.0 - p).collect())
}

/// ROC AUC via the rank-sum statistic: the chance a random positive
/// scores above a random negative, ties counting one half.
pub fn auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateTruth);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of (doubled) midranks of the positives, kept in integers so ties are exact.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u128;
        let tied_pos = order[i..=j].iter().filter(|&&k| truth[k]).count() as u128;
        rank_sum2 += mid2 * tied_pos;
        i = j + 1;
    }
    let (p, q) = (pos as u128, neg as u128);
    // U = R - p(p+1)/2, doubled throughout.
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

/// Binary tasks only: flips a prediction when its estimated error exceeds
/// the model's probability for it.
pub fn correct_binary_labels(labels: &LabelData, report: &ErrorReport) -> Result<Vec<usize>> {
    if labels.num_classes != 2 {
        return Err(Error::NonBinary(labels.num_classes));
    }
    let probs = labels
        .prediction_probs
        .as_ref()
        .ok_or(Error::MissingProbabilities)?;
    if report.estimated_error.len() != labels.n() || probs.len() != labels.n() {
        return Err(Error::DimensionMismatch(
            "report, labels and probabilities must cover the same datapoints".into(),
        ));
    }
    Ok(labels
        .predicted
        .iter()
        .zip(&report.estimated_error)
        .zip(probs)
        .map(|((&l, &e), &p)| if e > p { 1 - l } else { l })
        .collect())
}

/// Summary of AUC values, written next to the per-datapoint CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub auc_gtda: Option<f64>,
    pub auc_baseline: Option<f64>,
    pub evaluated: usize,
    pub unsupported: usize,
}

/// One parsed row of an errors CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub vertex: usize,
    pub estimated_error: f64,
    pub baseline_uncertainty: Option<f64>,
    pub predicted: usize,
    pub corrected: Option<usize>,
}

pub fn write_errors_csv(report: &ErrorReport, labels: &LabelData, corrected: Option<&[usize]>) -> String {
    let mut out = String::from("vertex_id,estimated_error,baseline_uncertainty,predicted,corrected\n");
    for i in 0..report.estimated_error.len() {
        let base = report
            .baseline_uncertainty
            .as_ref()
            .map(|b| b[i].to_string())
            .unwrap_or_default();
        let fixed = corrected.map(|c| c[i].to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{i},{},{base},{},{fixed}",
            report.estimated_error[i], labels.predicted[i]
        );
    }
    out
}

pub fn parse_errors_csv(text: &str) -> Result<Vec<ErrorRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != 5 {
            return Err(Error::parse(line, format!("expected 5 fields, found {}", rec.len())));
        }
        let num = |k: usize| -> Result<Option<f64>> {
            let f = &rec[k];
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<f64>()
                .map(Some)
                .map_err(|e| Error::parse(line, format!("bad number {f:?}: {e}")))
        };
        let int = |k: usize| -> Result<Option<usize>> {
            let f = &rec[k];
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<usize>()
                .map(Some)
                .map_err(|e| Error::parse(line, format!("bad integer {f:?}: {e}")))
        };
        let required = |x: Option<usize>, what: &str| {
            x.ok_or_else(|| Error::parse(line, format!("missing {what}")))
        };
        rows.push(ErrorRow {
            vertex: required(int(0)?, "vertex_id")?,
            estimated_error: num(1)?.ok_or_else(|| Error::parse(line, "missing estimated_error"))?,
            baseline_uncertainty: num(2)?,
            predicted: required(int(3)?, "predicted")?,
            corrected: int(4)?,
        });
    }
    Ok(rows)
}

/// Labels file contents: the model's outputs plus optional ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelFile {
    pub labels: LabelData,
    pub truth: Option<Vec<usize>>,
}

impl LabelFile {
    /// Per-datapoint "prediction is wrong" flags, when truth is known.
    pub fn mistakes(&self) -> Option<Vec<bool>> {
        self.truth
            .as_ref()
            .map(|t| t.iter().zip(&self.labels.predicted).map(|(a, b)| a != b).collect())
    }
}

const LABEL_COLUMNS: [&str; 5] = ["vertex", "predicted", "training_label", "probability", "truth"];

/// Reads `vertex,predicted,training_label[,probability][,truth]`, one row per
/// datapoint in vertex order. Empty `training_label` cells mark unlabeled
/// datapoints. With `num_classes` unset, the class count is inferred.
pub fn parse_labels_csv(text: &str, num_classes: Option<usize>) -> Result<LabelFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(c_vertex), Some(c_pred), Some(c_train)) =
        (col("vertex"), col("predicted"), col("training_label"))
    else {
        return Err(Error::parse(
            1,
            "header must name vertex, predicted and training_label columns",
        ));
    };
    if let Some(bad) = header.iter().find(|h| !LABEL_COLUMNS.contains(&h.as_str())) {
        return Err(Error::parse(1, format!("unknown column {bad:?}")));
    }
    let (c_prob, c_truth) = (col("probability"), col("truth"));
    let mut predicted = Vec::new();
    let mut training = Vec::new();
    let mut probs = Vec::new();
    let mut truth = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        let int = |k: usize| -> Result<Option<usize>> {
            let f = rec.get(k).unwrap_or("");
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<usize>()
                .map(Some)
                .map_err(|e| Error::parse(line, format!("bad integer {f:?}: {e}")))
        };
        match int(c_vertex)? {
            Some(v) if v == i => {}
            other => {
                return Err(Error::parse(
                    line,
                    format!("expected vertex {i}, found {other:?}"),
                ))
            }
        }
        predicted.push(int(c_pred)?.ok_or_else(|| Error::parse(line, "missing predicted"))?);
        training.push(int(c_train)?);
        if let Some(c) = c_prob {
            let f = rec.get(c).unwrap_or("");
            let p: f64 = f
                .parse()
                .map_err(|e| Error::parse(line, format!("bad probability {f:?}: {e}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parse(line, format!("probability {p} outside [0, 1]")));
            }
            probs.push(p);
        }
        if let Some(c) = c_truth {
            truth.push(int(c)?.ok_or_else(|| Error::parse(line, "missing truth"))?);
        }
    }
    let inferred = predicted
        .iter()
        .chain(training.iter().flatten())
        .chain(&truth)
        .max()
        .map_or(0, |&c| c + 1);
    let num_classes = num_classes.unwrap_or(inferred);
    if let Some((vertex, &class)) = truth.iter().enumerate().find(|(_, &c)| c >= num_classes) {
        return Err(Error::InvalidClass {
            vertex,
            class,
            classes: num_classes,
        });
    }
    let labels = LabelData {
        num_classes,
        predicted,
        training,
        prediction_probs: c_prob.map(|_| probs),
    };
    labels.validate()?;
    Ok(LabelFile {
        labels,
        truth: c_truth.map(|_| truth),
    })
}

pub fn write_labels_csv(file: &LabelFile) -> String {
    let l = &file.labels;
    let mut out = String::from("vertex,predicted,training_label");
    if l.prediction_probs.is_some() {
        out.push_str(",probability");
    }
    if file.truth.is_some() {
        out.push_str(",truth");
    }
    out.push('\n');
    for i in 0..l.n() {
        let train = l.training[i].map(|c| c.to_string()).unwrap_or_default();
        let _ = write!(out, "{i},{},{train}", l.predicted[i]);
        if let Some(p) = &l.prediction_probs {
            let _ = write!(out, ",{}", p[i]);
        }
        if let Some(t) = &file.truth {
            let _ = write!(out, ",{}", t[i]);
        }
        out.push('\n');
    }
    out
}
