//! Synthetic data: a three-class Swiss roll and a diffusion-based stand-in
//! for a trained classifier.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnose::{LabelData, LabelFile};
use crate::error::{Error, Result};
use crate::graph::{union_graphs, Graph};
use crate::lens::{smooth, LensMatrix, SmoothingParams};
use crate::preprocess::{knn_graph, EmbeddingMatrix, Metric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwissRollInstance {
    /// First and third coordinates of the roll, `n x 2`.
    pub features: EmbeddingMatrix,
    /// Full 3-D points, `n x 3`.
    pub points: EmbeddingMatrix,
    /// Spiral parameter of each point, ascending.
    pub t: Vec<f64>,
    pub labels: Vec<usize>,
    pub split: Vec<Split>,
    /// 5-NN Euclidean graph on the 3-D points.
    pub graph: Graph,
}

impl SwissRollInstance {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn mask(&self, which: Split) -> Vec<bool> {
        self.split.iter().map(|&s| s == which).collect()
    }

    /// The 5-NN graph combined with a 2-NN cosine graph on the 2-D features.
    pub fn combined_graph(&self) -> Result<Graph> {
        union_graphs(&self.graph, &knn_graph(&self.features, 2, Metric::Cosine)?)
    }
}

pub const SWISS_ROLL_CLASSES: usize = 3;

/// Samples `t` uniformly on `[1.5 pi, 4.5 pi]` and height uniformly on
/// `[0, 21]`, places points at `(t cos t, h, t sin t)` plus Gaussian noise of
/// scale `noise`, sorts by `t` and labels consecutive thirds. Ten percent of
/// the points are marked for training and ten percent for validation.
pub fn swiss_roll(n: usize, noise: f64, seed: u64) -> Result<SwissRollInstance> {
    if n < 30 {
        return Err(Error::InvalidParameter(format!("Swiss roll needs n >= 30, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be nonnegative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw: Vec<(f64, [f64; 3])> = (0..n)
        .map(|_| {
            let t = 1.5 * PI * (1.0 + 2.0 * rng.gen::<f64>());
            let h = 21.0 * rng.gen::<f64>();
            let mut p = [t * t.cos(), h, t * t.sin()];
            for x in &mut p {
                *x += noise * rng.sample::<f64, _>(StandardNormal);
            }
            (t, p)
        })
        .collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let t: Vec<f64> = raw.iter().map(|r| r.0).collect();
    let points: Vec<f64> = raw.iter().flat_map(|r| r.1).collect();
    let features: Vec<f64> = raw.iter().flat_map(|r| [r.1[0], r.1[2]]).collect();
    let labels: Vec<usize> = (0..n).map(|i| i * SWISS_ROLL_CLASSES / n).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let tenth = (n as f64 * 0.1).round() as usize;
    let mut split = vec![Split::Test; n];
    for &i in &order[..tenth] {
        split[i] = Split::Train;
    }
    for &i in &order[tenth..2 * tenth] {
        split[i] = Split::Validation;
    }

    let points = EmbeddingMatrix::new(n, 3, points)?;
    let graph = knn_graph(&points, 5, Metric::Euclidean)?;
    Ok(SwissRollInstance {
        features: EmbeddingMatrix::new(n, 2, features)?,
        points,
        t,
        labels,
        split,
        graph,
    })
}

/// Propagation used by the surrogate predictor.
pub const SURROGATE_SMOOTHING: SmoothingParams = SmoothingParams {
    alpha: 0.85,
    steps: 20,
};

/// Stand-in for a trained classifier. One-hot vectors are seeded at the
/// training and validation points, a `label_noise` fraction of those seeds
/// is switched to a wrong class, and the seeds are propagated over the
/// instance graph. Rows are normalized into probabilities; rows the
/// propagation never reached become uniform. Each seed's one-hot vector is
/// added back before normalizing, so seeds predict their seed class. Training datapoints keep their
/// true labels in the returned [`LabelData`].
pub fn surrogate_predictor(
    inst: &SwissRollInstance,
    label_noise: f64,
    seed: u64,
) -> Result<(LensMatrix, LabelData)> {
    if !(0.0..1.0).contains(&label_noise) {
        return Err(Error::InvalidParameter(format!(
            "label_noise must lie in [0, 1), got {label_noise}"
        )));
    }
    let n = inst.n();
    let k = SWISS_ROLL_CLASSES;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<usize> = (0..n).filter(|&i| inst.split[i] != Split::Test).collect();
    let mut seed_class: Vec<Option<usize>> = vec![None; n];
    for &i in &seeds {
        seed_class[i] = Some(inst.labels[i]);
    }
    seeds.shuffle(&mut rng);
    let flips = (seeds.len() as f64 * label_noise).round() as usize;
    for &i in &seeds[..flips] {
        let shift = rng.gen_range(1..k);
        seed_class[i] = Some((inst.labels[i] + shift) % k);
    }
    let mut init = vec![0.0; n * k];
    for (i, c) in seed_class.iter().enumerate() {
        if let Some(c) = c {
            init[i * k + c] = 1.0;
        }
    }
    let names = (0..k).map(|c| format!("class{c}")).collect();
    let onehot = LensMatrix::new(n, k, init, names)?;
    let spread = smooth(&onehot, &inst.graph, SURROGATE_SMOOTHING)?;
    let mut probs = Vec::with_capacity(n * k);
    for i in 0..n {
        // Seeds get their one-hot vector back, so each predicts its own seed class.
        let row: Vec<f64> = spread.row(i).iter().zip(onehot.row(i)).map(|(a, b)| a + b).collect();
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            probs.extend(row.iter().map(|x| x / total));
        } else {
            probs.extend(std::iter::repeat_n(1.0 / k as f64, k));
        }
    }
    let lens = LensMatrix::new(n, k, probs, spread.column_names().to_vec())?;
    let (predicted, top) = lens.argmax_rows();
    let training = (0..n)
        .map(|i| (inst.split[i] == Split::Train).then_some(inst.labels[i]))
        .collect();
    Ok((
        lens,
        LabelData {
            num_classes: k,
            predicted,
            training,
            prediction_probs: Some(top),
        },
    ))
}

/// Bundles surrogate outputs with the instance's true labels.
pub fn label_file(inst: &SwissRollInstance, labels: LabelData) -> LabelFile {
    LabelFile {
        labels,
        truth: Some(inst.labels.clone()),
    }
}
