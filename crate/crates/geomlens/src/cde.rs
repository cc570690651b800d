//! Cosine distance encoding: represent every word by its vector of cosine
//! distances to the most frequent anchor words, then compress back to the
//! source dimensionality with a single-hidden-layer ReLU autoencoder.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::embio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::par::{map_indexed, parallel_enabled};

pub const DEFAULT_ANCHORS: usize = 10_000;
pub const DEFAULT_EPOCHS: usize = 50;

/// Cosine distance 1 - a.b / (|a||b|), in [0, 2].
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Data("cosine distance undefined for zero-norm vector".into()));
    }
    Ok(1.0 - dot(a, b) / (na * nb))
}

/// |V| x m matrix of cosine distances from every word to the first m
/// (most frequent) words.
#[derive(Debug, Clone)]
pub struct DistanceProfileMatrix {
    pub anchors: usize,
    pub rows: usize,
    profiles: Vec<f64>,
}

impl DistanceProfileMatrix {
    pub fn profile(&self, i: usize) -> &[f64] {
        &self.profiles[i * self.anchors..(i + 1) * self.anchors]
    }

    pub fn data(&self) -> &[f64] {
        &self.profiles
    }
}

/// Distance profiles against the first `m` rows as anchors.
pub fn build_distance_profiles(set: &EmbeddingSet, m: usize) -> Result<DistanceProfileMatrix> {
    build_distance_profiles_with(set, m, parallel_enabled())
}

#[doc(hidden)]
pub fn build_distance_profiles_with(set: &EmbeddingSet, m: usize, parallel: bool) -> Result<DistanceProfileMatrix> {
    if m == 0 || m > set.len() {
        return Err(Error::InvalidArg(format!(
            "anchor count {m} out of range 1..={}",
            set.len()
        )));
    }
    let d = set.dim();
    // normalize once; inner products of unit rows give cosine similarities
    let mut normalized = vec![0.0; set.len() * d];
    for (i, row) in set.rows().enumerate() {
        let n = norm(row);
        if n == 0.0 {
            return Err(Error::Data(format!(
                "zero-norm vector for word '{}'",
                set.word(i)
            )));
        }
        for (o, v) in normalized[i * d..(i + 1) * d].iter_mut().zip(row) {
            *o = v / n;
        }
    }
    let anchors = &normalized[..m * d];
    let rows = map_indexed(set.len(), parallel, |i| {
        let q = &normalized[i * d..(i + 1) * d];
        let mut out = vec![0.0; m];
        for (j, o) in out.iter_mut().enumerate() {
            let sim = dot(q, &anchors[j * d..(j + 1) * d]);
            *o = (1.0 - sim).clamp(0.0, 2.0);
        }
        out
    });
    Ok(DistanceProfileMatrix {
        anchors: m,
        rows: set.len(),
        profiles: rows.into_iter().flatten().collect(),
    })
}

/// Training hyperparameters for the autoencoder. Defaults are Adam with
/// learning rate 1e-3 and batch size 128.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
        }
    }
}

/// Single-hidden-layer ReLU autoencoder with untied m x d weights.
///
/// Encode: h = relu(v W1). Decode: v_hat = relu(h W2^T).
#[derive(Debug, Clone)]
pub struct AutoencoderModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    w1: Vec<f64>, // m x d
    w2: Vec<f64>, // m x d
    pub epoch_losses: Vec<f64>,
}

impl AutoencoderModel {
    fn init(m: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Non-negative init: inputs (cosine distances) are non-negative, so a
        // symmetric init leaves some relu units negative for every input and
        // therefore permanently dead. W1 stays at O(1/sqrt(m)) so Adam's
        // fixed-size steps cannot flip whole columns negative (a dead hidden
        // unit never recovers without biases); W2 absorbs the remaining
        // 1/(d sqrt(m)) magnitude correction so initial outputs are O(1) for
        // any anchor count. Sign flips in W2 are benign because the output
        // relu gates the summed activation, not individual weights.
        let s1 = 2.0 / (m as f64).sqrt();
        let s2 = 2.0 / (d as f64 * (m as f64).sqrt());
        let mut sample = |len: usize, scale: f64| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(0.0..scale)).collect()
        };
        AutoencoderModel {
            input_dim: m,
            hidden_dim: d,
            w1: sample(m * d, s1),
            w2: sample(m * d, s2),
            epoch_losses: Vec::new(),
        }
    }

    /// Build a model from explicit weight matrices (both m x d, row-major).
    pub fn from_weights(input_dim: usize, hidden_dim: usize, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        if w1.len() != input_dim * hidden_dim || w2.len() != input_dim * hidden_dim {
            return Err(Error::DimMismatch {
                expected: input_dim * hidden_dim,
                got: w1.len().max(w2.len()),
            });
        }
        Ok(AutoencoderModel {
            input_dim,
            hidden_dim,
            w1,
            w2,
            epoch_losses: Vec::new(),
        })
    }

    /// h = relu(v W1)
    pub fn encode(&self, v: &[f64]) -> Vec<f64> {
        let (m, d) = (self.input_dim, self.hidden_dim);
        debug_assert_eq!(v.len(), m);
        let mut h = vec![0.0; d];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let w = &self.w1[i * d..(i + 1) * d];
            for (hj, wj) in h.iter_mut().zip(w) {
                *hj += vi * wj;
            }
        }
        for hj in &mut h {
            *hj = hj.max(0.0);
        }
        h
    }

    /// v_hat = relu(h W2^T)
    pub fn decode(&self, h: &[f64]) -> Vec<f64> {
        let (m, d) = (self.input_dim, self.hidden_dim);
        debug_assert_eq!(h.len(), d);
        (0..m)
            .map(|j| dot(h, &self.w2[j * d..(j + 1) * d]).max(0.0))
            .collect()
    }

    pub fn reconstruct(&self, v: &[f64]) -> Vec<f64> {
        self.decode(&self.encode(v))
    }

    /// Mean squared reconstruction error over all elements of `data`
    /// (row-major, rows of length input_dim).
    pub fn mse(&self, data: &[f64]) -> f64 {
        let m = self.input_dim;
        let n = data.len() / m;
        let mut total = 0.0;
        for row in data.chunks_exact(m) {
            let rec = self.reconstruct(row);
            total += rec.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        total / (n * m) as f64
    }

    pub fn weights(&self) -> (&[f64], &[f64]) {
        (&self.w1, &self.w2)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, weights: &mut [f64], grads: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t as i32);
        let c2 = 1.0 - B2.powi(self.t as i32);
        for i in 0..weights.len() {
            let g = grads[i];
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g;
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            weights[i] -= lr * mh / (vh.sqrt() + EPS);
        }
    }
}

/// Gradients of the mean-squared reconstruction loss over one batch.
/// Returns (grad_w1, grad_w2, batch loss). Exposed for the finite-difference
/// check in tests.
pub fn loss_and_gradients(
    model: &AutoencoderModel,
    batch: &[f64],
) -> (Vec<f64>, Vec<f64>, f64) {
    let m = model.input_dim;
    let d = model.hidden_dim;
    let n = batch.len() / m;
    let mut gw1 = vec![0.0; m * d];
    let mut gw2 = vec![0.0; m * d];
    let mut loss = 0.0;
    let denom = (n * m) as f64;
    for row in batch.chunks_exact(m) {
        // forward, keeping pre-activations implicitly via the relu masks
        let h = model.encode(row);
        let rec = model.decode(&h);
        // delta on the output layer: dL/d pre2_j, L = sum (rec - x)^2 / (n m)
        let mut dh = vec![0.0; d];
        for j in 0..m {
            let diff = rec[j] - row[j];
            loss += diff * diff;
            if rec[j] <= 0.0 {
                continue; // relu gate closed
            }
            let delta2 = 2.0 * diff / denom;
            let w2row = &model.w2[j * d..(j + 1) * d];
            let g2 = &mut gw2[j * d..(j + 1) * d];
            for k in 0..d {
                g2[k] += delta2 * h[k];
                dh[k] += delta2 * w2row[k];
            }
        }
        // hidden relu gate, then accumulate into W1
        for k in 0..d {
            if h[k] <= 0.0 {
                dh[k] = 0.0;
            }
        }
        for (i, &xi) in row.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let g1 = &mut gw1[i * d..(i + 1) * d];
            for k in 0..d {
                g1[k] += xi * dh[k];
            }
        }
    }
    (gw1, gw2, loss / denom)
}

/// Train the autoencoder on the profile matrix with mini-batch Adam.
/// Deterministic for a fixed seed.
pub fn train_autoencoder(profiles: &DistanceProfileMatrix, d: usize, config: &TrainConfig) -> Result<AutoencoderModel> {
    train_autoencoder_raw(profiles.data(), profiles.anchors, d, config)
}

pub fn train_autoencoder_raw(data: &[f64], m: usize, d: usize, config: &TrainConfig) -> Result<AutoencoderModel> {
    if d == 0 {
        return Err(Error::InvalidArg("target dimension must be >= 1".into()));
    }
    let n = data.len() / m;
    if n == 0 || data.is_empty() {
        return Err(Error::InvalidArg("empty training data".into()));
    }
    let mut model = AutoencoderModel::init(m, d, config.seed);
    let mut adam1 = Adam::new(m * d);
    let mut adam2 = Adam::new(m * d);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let bs = config.batch_size.max(1);
    let mut batch = vec![0.0; bs * m];
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(bs) {
            let b = &mut batch[..chunk.len() * m];
            for (slot, &idx) in chunk.iter().enumerate() {
                b[slot * m..(slot + 1) * m].copy_from_slice(&data[idx * m..(idx + 1) * m]);
            }
            let (gw1, gw2, loss) = loss_and_gradients(&model, b);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    lr: config.learning_rate,
                });
            }
            adam1.step(&mut model.w1, &gw1, config.learning_rate);
            adam2.step(&mut model.w2, &gw2, config.learning_rate);
            epoch_loss += loss;
            batches += 1;
        }
        model.epoch_losses.push(epoch_loss / batches as f64);
    }
    Ok(model)
}

/// Map every profile row through the encoder, producing a new embedding set
/// over the same vocabulary.
pub fn encode_profiles(
    model: &AutoencoderModel,
    profiles: &DistanceProfileMatrix,
    set: &EmbeddingSet,
) -> Result<EmbeddingSet> {
    if profiles.anchors != model.input_dim {
        return Err(Error::DimMismatch {
            expected: model.input_dim,
            got: profiles.anchors,
        });
    }
    if profiles.rows != set.len() {
        return Err(Error::DimMismatch {
            expected: set.len(),
            got: profiles.rows,
        });
    }
    let rows = map_indexed(profiles.rows, parallel_enabled(), |i| model.encode(profiles.profile(i)));
    let matrix: Vec<f64> = rows.into_iter().flatten().collect();
    // the hidden layer becomes the new vector space, so dim may differ from set.dim()
    EmbeddingSet::new(
        format!("{}-cde", set.name),
        set.words().to_vec(),
        matrix,
        model.hidden_dim,
    )
}

/// Full CDE transform: profiles -> autoencoder -> encoded set with the
/// source dimensionality.
pub fn cde_encode(set: &EmbeddingSet, m: usize, config: &TrainConfig) -> Result<EmbeddingSet> {
    let m = m.min(set.len());
    let profiles = build_distance_profiles(set, m)?;
    let model = train_autoencoder(&profiles, set.dim(), config)?;
    encode_profiles(&model, &profiles, set)
}
