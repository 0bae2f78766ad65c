//! Mini-batch ADAM training on the MSE loss.
//!
//! Training is sequential and fully deterministic for a given
//! `TrainConfig::seed`: the train/validation split, weight init, and every
//! epoch's batch order come from fixed RNG streams derived from that seed.
//! Normalization statistics are computed from the training split only and
//! the network is fitted in the normalized input/target domain; the stats
//! ride along inside the returned model.

use serde::{Deserialize, Serialize};

use super::{arch_tag, DnnError, DnnModel, ModelMeta, NormStats};
use crate::channel::SnrSpec;
use crate::numerics::RngStream;
use crate::real::Real;

/// Stream ids used with the training seed.
const STREAM_SPLIT: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_EPOCH_BASE: u64 = 16;

/// Training hyperparameters. Defaults: 500 epochs, batch 128, ADAM with
/// lr 1e−3 / β₁ 0.9 / β₂ 0.999 / ε 1e−8, 80:20 split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub split_ratio: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 128,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            split_ratio: 0.8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), DnnError> {
        if self.epochs < 1 {
            return Err(DnnError::BadConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(DnnError::BadConfig("batch_size must be >= 1".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(DnnError::BadConfig("split_ratio must be in (0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(DnnError::BadConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Dataset provenance carried into model metadata and manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub snr: SnrSpec,
    pub channel_model: String,
    pub rows: usize,
    pub seed: u64,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self { snr: SnrSpec::Single(0.0), channel_model: "synthetic".into(), rows: 0, seed: 0 }
    }
}

/// In-memory training data: row-major input and target matrices plus the
/// per-row SNR actually used to synthesize each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub dim_in: usize,
    pub dim_out: usize,
    pub inputs: Vec<T>,
    pub targets: Vec<T>,
    pub snr_db: Vec<f64>,
    pub meta: DatasetMeta,
}

impl<T: Real> Dataset<T> {
    pub fn rows(&self) -> usize {
        self.inputs.len() / self.dim_in.max(1)
    }

    pub fn input_row(&self, r: usize) -> &[T] {
        &self.inputs[r * self.dim_in..(r + 1) * self.dim_in]
    }

    pub fn target_row(&self, r: usize) -> &[T] {
        &self.targets[r * self.dim_out..(r + 1) * self.dim_out]
    }

    /// Internal consistency of the stored dimensions.
    pub fn validate(&self) -> Result<(), DnnError> {
        let rows = self.rows();
        if self.inputs.len() != rows * self.dim_in
            || self.targets.len() != rows * self.dim_out
            || self.snr_db.len() != rows
        {
            return Err(DnnError::ShapeInconsistency(format!(
                "dataset arrays disagree: {} inputs, {} targets, {} snr rows",
                self.inputs.len(),
                self.targets.len(),
                self.snr_db.len()
            )));
        }
        Ok(())
    }
}

/// Losses recorded at the end of each epoch (means of per-sample MSE in the
/// normalized domain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// First-moment/second-moment accumulators for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self { m: vec![T::zero(); len], v: vec![T::zero(); len] }
    }
}

/// One ADAM update with bias correction; `t` is the 1-based global step.
pub fn adam_step<T: Real>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
    t: u64,
) {
    debug_assert!(t >= 1);
    debug_assert_eq!(params.len(), grads.len());
    let b1 = T::of(cfg.adam_beta1);
    let b2 = T::of(cfg.adam_beta2);
    let lr = T::of(cfg.learning_rate);
    let eps = T::of(cfg.adam_eps);
    let one = T::one();
    let corr1 = one - b1.powi(t as i32);
    let corr2 = one - b2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (one - b1) * g;
        state.v[i] = b2 * state.v[i] + (one - b2) * g * g;
        let m_hat = state.m[i] / corr1;
        let v_hat = state.v[i] / corr2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Trains a fresh network of the given shape on the dataset.
///
/// Returns the final-epoch model (normalization stats and provenance
/// embedded) and the full per-epoch loss history.
pub fn train<T: Real>(
    dataset: &Dataset<T>,
    layer_sizes: &[usize],
    cfg: &TrainConfig,
) -> Result<(DnnModel<T>, Vec<EpochStats>), DnnError> {
    cfg.validate()?;
    dataset.validate()?;
    let rows = dataset.rows();
    if rows < 2 {
        return Err(DnnError::EmptyDataset);
    }
    if layer_sizes[0] != dataset.dim_in {
        return Err(DnnError::WidthMismatch { expected: dataset.dim_in, got: layer_sizes[0] });
    }
    if *layer_sizes.last().unwrap() != dataset.dim_out {
        return Err(DnnError::WidthMismatch {
            expected: dataset.dim_out,
            got: *layer_sizes.last().unwrap(),
        });
    }
    let din = dataset.dim_in;
    let dout = dataset.dim_out;

    // Seeded split.
    let mut idx: Vec<usize> = (0..rows).collect();
    RngStream::new(cfg.seed, STREAM_SPLIT).shuffle(&mut idx);
    let n_train = ((rows as f64 * cfg.split_ratio).floor() as usize).clamp(1, rows - 1);
    let (train_idx, val_idx) = idx.split_at(n_train);

    // Gather the split rows, then normalize with training-split statistics.
    let gather = |rows_idx: &[usize], src: &[T], dim: usize| -> Vec<T> {
        let mut out = Vec::with_capacity(rows_idx.len() * dim);
        for &r in rows_idx {
            out.extend_from_slice(&src[r * dim..(r + 1) * dim]);
        }
        out
    };
    let mut train_x = gather(train_idx, &dataset.inputs, din);
    let mut train_t = gather(train_idx, &dataset.targets, dout);
    let mut val_x = gather(val_idx, &dataset.inputs, din);
    let mut val_t = gather(val_idx, &dataset.targets, dout);

    let norm_in = NormStats::from_rows(&train_x, n_train, din);
    let norm_out = NormStats::from_rows(&train_t, n_train, dout);
    normalize_rows(&mut train_x, &norm_in);
    normalize_rows(&mut train_t, &norm_out);
    normalize_rows(&mut val_x, &norm_in);
    normalize_rows(&mut val_t, &norm_out);

    let mut model = DnnModel::init(layer_sizes, &mut RngStream::new(cfg.seed, STREAM_INIT));
    let mut adam: Vec<(AdamState<T>, AdamState<T>)> = model
        .layers
        .iter()
        .map(|l| (AdamState::new(l.weights.len()), AdamState::new(l.bias.len())))
        .collect();

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut t_step: u64 = 0;

    for epoch in 0..cfg.epochs {
        RngStream::new(cfg.seed, STREAM_EPOCH_BASE + epoch as u64).shuffle(&mut order);
        let mut loss_sum = T::zero();

        for chunk in order.chunks(cfg.batch_size) {
            let b = chunk.len();
            let bx = gather(chunk, &train_x, din);
            let bt = gather(chunk, &train_t, dout);

            let (pres, posts) = forward_batch(&model, &bx, b);
            let y = posts.last().unwrap();

            // dL/dY for the batch-mean of per-sample MSE, plus the loss.
            let mut dy = vec![T::zero(); b * dout];
            let scale = T::of(2.0) / (T::of(dout as f64) * T::of(b as f64));
            let mut batch_sq = T::zero();
            for i in 0..b * dout {
                let diff = y[i] - bt[i];
                batch_sq += diff * diff;
                dy[i] = scale * diff;
            }
            loss_sum += batch_sq / T::of(dout as f64);

            let grads = backward_batch(&model, &bx, &pres, &posts, &dy, b);

            t_step += 1;
            for (layer, ((gw, gb), (sw, sb))) in
                model.layers.iter_mut().zip(grads.into_iter().zip(adam.iter_mut()))
            {
                adam_step(&mut layer.weights, &gw, sw, cfg, t_step);
                adam_step(&mut layer.bias, &gb, sb, cfg, t_step);
            }
        }

        let train_mse = (loss_sum / T::of(n_train as f64)).as_f64();
        let val_mse = eval_mse(&model, &val_x, &val_t, val_idx.len(), cfg.batch_size);
        history.push(EpochStats { epoch, train_mse, val_mse });
    }

    model.norm_in = norm_in;
    model.norm_out = norm_out;
    model.meta = ModelMeta {
        training_snr_db: dataset.meta.snr.nominal_db(),
        training_snr_range: match dataset.meta.snr {
            SnrSpec::Single(_) => None,
            SnrSpec::Range { lo, hi } => Some((lo, hi)),
        },
        channel_model: dataset.meta.channel_model.clone(),
        epochs: cfg.epochs,
        arch_tag: arch_tag(layer_sizes),
        seed: cfg.seed,
        init: "xavier-uniform".into(),
    };
    Ok((model, history))
}

fn normalize_rows<T: Real>(data: &mut [T], stats: &NormStats<T>) {
    let dim = stats.dim();
    for row in data.chunks_mut(dim) {
        for (v, (m, s)) in row.iter_mut().zip(stats.mu.iter().zip(&stats.sigma)) {
            *v = (*v - *m) / *s;
        }
    }
}

/// Mean per-sample MSE of the model over already normalized rows.
fn eval_mse<T: Real>(model: &DnnModel<T>, x: &[T], t: &[T], rows: usize, batch: usize) -> f64 {
    if rows == 0 {
        return 0.0;
    }
    let din = model.input_dim();
    let dout = model.output_dim();
    let mut sq = T::zero();
    let mut done = 0usize;
    while done < rows {
        let b = batch.min(rows - done);
        let bx = &x[done * din..(done + b) * din];
        let bt = &t[done * dout..(done + b) * dout];
        let (_, posts) = forward_batch(model, bx, b);
        let y = posts.last().unwrap();
        for i in 0..b * dout {
            let d = y[i] - bt[i];
            sq += d * d;
        }
        done += b;
    }
    (sq / T::of(dout as f64) / T::of(rows as f64)).as_f64()
}

/// `C[m×n] += A[m×k]·B[k×n]`, all row-major. Zero entries of A are skipped;
/// post-ReLU activations make A roughly half zeros in the backward pass.
fn matmul_acc<T: Real>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(c.len(), m * n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (p, &av) in arow.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
}

fn transposed<T: Real>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut dst = vec![T::zero(); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
    dst
}

/// Batched forward pass over `batch` row-major samples; returns per-layer
/// pre-activations and activations (the last entry of `posts` is the
/// network output).
fn forward_batch<T: Real>(
    model: &DnnModel<T>,
    x: &[T],
    batch: usize,
) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let n_layers = model.layers.len();
    let mut pres = Vec::with_capacity(n_layers);
    let mut posts: Vec<Vec<T>> = Vec::with_capacity(n_layers);
    for (l, layer) in model.layers.iter().enumerate() {
        let (din, dout) = (layer.in_dim, layer.out_dim);
        let wt = transposed(&layer.weights, dout, din);
        let mut z = vec![T::zero(); batch * dout];
        for row in z.chunks_mut(dout) {
            row.copy_from_slice(&layer.bias);
        }
        let input: &[T] = if l == 0 { x } else { &posts[l - 1] };
        matmul_acc(&mut z, input, &wt, batch, din, dout);
        let post = if l + 1 < n_layers {
            z.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
        } else {
            z.clone()
        };
        pres.push(z);
        posts.push(post);
    }
    (pres, posts)
}

/// Batched reverse pass; `dy` is dL/d(output). Returns per-layer
/// (weight, bias) gradients.
fn backward_batch<T: Real>(
    model: &DnnModel<T>,
    x: &[T],
    pres: &[Vec<T>],
    posts: &[Vec<T>],
    dy: &[T],
    batch: usize,
) -> Vec<(Vec<T>, Vec<T>)> {
    let n_layers = model.layers.len();
    let mut grads: Vec<(Vec<T>, Vec<T>)> = model
        .layers
        .iter()
        .map(|l| (vec![T::zero(); l.weights.len()], vec![T::zero(); l.out_dim]))
        .collect();
    let mut delta = dy.to_vec();

    for l in (0..n_layers).rev() {
        let layer = &model.layers[l];
        let (din, dout) = (layer.in_dim, layer.out_dim);
        let input: &[T] = if l == 0 { x } else { &posts[l - 1] };
        let (gw, gb) = &mut grads[l];
        // dW = deltaᵀ·input as rank-1 updates per sample; db = column sums.
        for bi in 0..batch {
            let drow = &delta[bi * dout..(bi + 1) * dout];
            let xrow = &input[bi * din..(bi + 1) * din];
            for (j, &d) in drow.iter().enumerate() {
                gb[j] += d;
                if d == T::zero() {
                    continue;
                }
                let wrow = &mut gw[j * din..(j + 1) * din];
                for (g, &v) in wrow.iter_mut().zip(xrow) {
                    *g += d * v;
                }
            }
        }
        if l > 0 {
            // delta_prev = delta·W, masked by the ReLU derivative.
            let mut prev = vec![T::zero(); batch * din];
            matmul_acc(&mut prev, &delta, &layer.weights, batch, dout, din);
            for (p, &z) in prev.iter_mut().zip(pres[l - 1].iter()) {
                if z <= T::zero() {
                    *p = T::zero();
                }
            }
            delta = prev;
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnn::{backprop, forward};

    /// Targets equal inputs. Samples live in a low-dimensional subspace
    /// (rank 2), mirroring the structure of the real denoising task where a
    /// bottleneck layer is narrower than the ambient dimension.
    fn identity_dataset(rows: usize, dim: usize, seed: u64) -> Dataset<f64> {
        let mut rng = RngStream::new(seed, 0);
        let mut basis = vec![0.0f64; 2 * dim];
        for v in &mut basis {
            let (a, _): (f64, f64) = crate::numerics::gaussian_pair(&mut rng);
            *v = a;
        }
        let mut data = Vec::with_capacity(rows * dim);
        for _ in 0..rows {
            let (u0, u1): (f64, f64) = crate::numerics::gaussian_pair(&mut rng);
            for j in 0..dim {
                data.push(u0 * basis[j] + u1 * basis[dim + j]);
            }
        }
        Dataset {
            dim_in: dim,
            dim_out: dim,
            inputs: data.clone(),
            targets: data,
            snr_db: vec![0.0; rows],
            meta: DatasetMeta::default(),
        }
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut params = vec![1.0f64, -2.0, 3.0];
        let grads = vec![0.0; 3];
        let mut st = AdamState::new(3);
        adam_step(&mut params, &grads, &mut st, &TrainConfig::default(), 1);
        assert_eq!(params, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn adam_first_step_magnitude() {
        // With g=1 at t=1 the bias-corrected update is lr·1/(1+eps') ≈ lr.
        let mut params = vec![0.0f64];
        let mut st = AdamState::new(1);
        adam_step(&mut params, &[1.0], &mut st, &TrainConfig::default(), 1);
        assert!((params[0] + 1e-3).abs() < 1e-6, "step {}", params[0]);
    }

    #[test]
    fn adam_constant_gradient_monotone() {
        let mut params = vec![0.0f64];
        let mut st = AdamState::new(1);
        let cfg = TrainConfig::default();
        let mut last = 0.0;
        for t in 1..=50 {
            adam_step(&mut params, &[1.0], &mut st, &cfg, t);
            assert!(params[0] < last, "t={t}");
            last = params[0];
        }
    }

    #[test]
    fn batch_forward_matches_single() {
        let model: DnnModel<f64> = DnnModel::init(&[6, 4, 6], &mut RngStream::new(21, 0));
        let mut rng = RngStream::new(21, 1);
        let b = 5;
        let mut x = Vec::new();
        for _ in 0..b * 6 {
            let (a, _): (f64, f64) = crate::numerics::gaussian_pair(&mut rng);
            x.push(a);
        }
        let (_, posts) = forward_batch(&model, &x, b);
        let y = posts.last().unwrap();
        for bi in 0..b {
            let (ys, _) = forward(&model, &x[bi * 6..(bi + 1) * 6]).unwrap();
            for j in 0..6 {
                assert!((y[bi * 6 + j] - ys[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_backward_matches_single_sample_backprop() {
        let model: DnnModel<f64> = DnnModel::init(&[5, 3, 5], &mut RngStream::new(22, 0));
        let mut rng = RngStream::new(22, 1);
        let mut x = Vec::new();
        let mut t = Vec::new();
        for _ in 0..5 {
            let (a, b): (f64, f64) = crate::numerics::gaussian_pair(&mut rng);
            x.push(a);
            t.push(b);
        }
        // Batch of one: dy scaling matches the per-sample MSE derivative.
        let (pres, posts) = forward_batch(&model, &x, 1);
        let y = posts.last().unwrap();
        let dy: Vec<f64> = y.iter().zip(&t).map(|(a, b)| 2.0 * (a - b) / 5.0).collect();
        let batch_grads = backward_batch(&model, &x, &pres, &posts, &dy, 1);
        let single = backprop(&model, &x, &t).unwrap();
        for (l, (gw, gb)) in batch_grads.iter().enumerate() {
            for (a, b) in gw.iter().zip(&single.layers[l].dw) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in gb.iter().zip(&single.layers[l].db) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn split_counts() {
        let ds = identity_dataset(30, 4, 1);
        let cfg = TrainConfig { epochs: 1, batch_size: 8, seed: 3, ..TrainConfig::default() };
        let (_, hist) = train(&ds, &[4, 4], &cfg).unwrap();
        assert_eq!(hist.len(), 1);
        // 30 rows at 0.8 -> 24 train / 6 val; indirectly checked through
        // determinism of the recorded losses.
        assert!(hist[0].train_mse.is_finite() && hist[0].val_mse.is_finite());
    }

    #[test]
    fn identity_task_converges() {
        let ds = identity_dataset(600, 8, 5);
        let sizes = [8, 4, 8];
        let cfg = TrainConfig { epochs: 200, batch_size: 32, seed: 7, ..TrainConfig::default() };
        let (model, hist) = train(&ds, &sizes, &cfg).unwrap();
        let first = hist.first().unwrap().val_mse;
        let last = hist.last().unwrap().val_mse;
        assert!(last < first * 1e-3, "val mse did not converge: first {first}, last {last}");
        assert_eq!(model.meta.epochs, 200);

        // Smoothed loss is non-increasing over 10-epoch windows (small
        // relative and absolute slack for ADAM jitter near convergence).
        let smooth: Vec<f64> =
            hist.windows(10).map(|w| w.iter().map(|e| e.train_mse).sum::<f64>() / 10.0).collect();
        let mut vio = 0;
        for w in smooth.windows(2) {
            if w[1] > w[0] * 1.10 + 1e-9 {
                vio += 1;
            }
        }
        assert!(vio == 0, "{vio} smoothed-loss increases");
    }

    #[test]
    fn training_is_deterministic() {
        let ds = identity_dataset(100, 6, 9);
        let cfg = TrainConfig { epochs: 5, batch_size: 16, seed: 11, ..TrainConfig::default() };
        let (m1, h1) = train(&ds, &[6, 3, 6], &cfg).unwrap();
        let (m2, h2) = train(&ds, &[6, 3, 6], &cfg).unwrap();
        assert_eq!(h1, h2, "loss history must be bitwise identical");
        assert_eq!(m1.layers, m2.layers);
    }

    #[test]
    fn norm_stats_from_train_split_only() {
        // Skewed dataset: recomputing stats from the val split must differ.
        let mut ds = identity_dataset(50, 3, 13);
        for r in 0..50 {
            for j in 0..3 {
                ds.inputs[r * 3 + j] += r as f64; // strong row trend
                ds.targets[r * 3 + j] += r as f64;
            }
        }
        let cfg = TrainConfig { epochs: 1, batch_size: 8, seed: 17, ..TrainConfig::default() };
        let (model, _) = train(&ds, &[3, 3], &cfg).unwrap();

        let mut idx: Vec<usize> = (0..50).collect();
        RngStream::new(cfg.seed, STREAM_SPLIT).shuffle(&mut idx);
        let n_train = 40;
        let gather: Vec<f64> =
            idx[n_train..].iter().flat_map(|&r| ds.inputs[r * 3..(r + 1) * 3].to_vec()).collect();
        let val_stats = NormStats::from_rows(&gather, 10, 3);
        let train_gather: Vec<f64> =
            idx[..n_train].iter().flat_map(|&r| ds.inputs[r * 3..(r + 1) * 3].to_vec()).collect();
        let train_stats: NormStats<f64> = NormStats::from_rows(&train_gather, 40, 3);
        assert_eq!(model.norm_in.mu, train_stats.mu, "model stats must come from train split");
        assert_ne!(model.norm_in.mu, val_stats.mu, "train and val stats must differ here");
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = identity_dataset(1, 4, 0);
        let cfg = TrainConfig::default();
        assert!(matches!(train(&ds, &[4, 4], &cfg), Err(DnnError::EmptyDataset)));

        let ds = identity_dataset(10, 4, 0);
        assert!(matches!(train(&ds, &[5, 4], &cfg), Err(DnnError::WidthMismatch { .. })));
        let bad = TrainConfig { split_ratio: 1.0, ..TrainConfig::default() };
        assert!(matches!(train(&ds, &[4, 4], &bad), Err(DnnError::BadConfig(_))));
    }
}
