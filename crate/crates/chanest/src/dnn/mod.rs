//! Fully connected network: definition, forward pass, backpropagation,
//! ADAM training with MSE loss, gradient checking, and JSON serialization.
//!
//! Hidden layers use ReLU, the output layer is linear. The two stock
//! architectures mirror the estimator variants: `lsdnn1` is
//! `[2k, k, 2k]` and `lsdnn2` is `[2k, 2k, 2k, 2k]` for `k` active
//! subcarriers.

mod io;
mod train;

pub use io::{load_model, save_model, FORMAT_VERSION};
pub use train::{train, Dataset, DatasetMeta, EpochStats, TrainConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::RngStream;
use crate::real::Real;

#[derive(Debug, Error)]
pub enum DnnError {
    #[error("input width {got}, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("dataset must contain at least 2 rows")]
    EmptyDataset,
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error("model format version {found}, this build reads {expected}")]
    FormatVersionMismatch { expected: u32, found: u32 },
    #[error("model shape inconsistency: {0}")]
    ShapeInconsistency(String),
    #[error("model file corrupt: {0}")]
    CorruptFile(String),
    #[error("model file i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-feature normalization statistics `(x − mu) / sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> NormStats<T> {
    /// The do-nothing statistics (mu 0, sigma 1).
    pub fn identity(dim: usize) -> Self {
        Self { mu: vec![T::zero(); dim], sigma: vec![T::one(); dim] }
    }

    /// Population mean and standard deviation per feature column over
    /// row-major `rows × dim` data. Degenerate columns get a floored sigma
    /// so normalization stays finite.
    pub fn from_rows(data: &[T], rows: usize, dim: usize) -> Self {
        assert_eq!(data.len(), rows * dim);
        assert!(rows > 0);
        let mut mu = vec![T::zero(); dim];
        for r in 0..rows {
            for (m, &v) in mu.iter_mut().zip(&data[r * dim..(r + 1) * dim]) {
                *m += v;
            }
        }
        let n = T::of(rows as f64);
        for m in &mut mu {
            *m /= n;
        }
        let mut var = vec![T::zero(); dim];
        for r in 0..rows {
            for j in 0..dim {
                let d = data[r * dim + j] - mu[j];
                var[j] += d * d;
            }
        }
        let floor = T::of(1e-12);
        let sigma = var
            .iter()
            .map(|&v| {
                let s = (v / n).sqrt();
                if s > floor {
                    s
                } else {
                    floor
                }
            })
            .collect();
        Self { mu, sigma }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn normalize(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(self.mu.iter().zip(&self.sigma)).map(|(&v, (&m, &s))| (v - m) / s).collect()
    }

    pub fn denormalize(&self, y: &[T]) -> Vec<T> {
        y.iter().zip(self.mu.iter().zip(&self.sigma)).map(|(&v, (&m, &s))| v * s + m).collect()
    }
}

/// One dense layer; `weights` is `out_dim × in_dim` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Training provenance carried inside the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub training_snr_db: f64,
    /// Present when the training SNR was a mixture range rather than a
    /// single point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_snr_range: Option<(f64, f64)>,
    pub channel_model: String,
    pub epochs: usize,
    pub arch_tag: String,
    pub seed: u64,
    pub init: String,
}

impl Default for ModelMeta {
    fn default() -> Self {
        Self {
            training_snr_db: 0.0,
            training_snr_range: None,
            channel_model: String::new(),
            epochs: 0,
            arch_tag: String::new(),
            seed: 0,
            init: "xavier-uniform".into(),
        }
    }
}

/// A multilayer perceptron with its normalization statistics and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnModel<T> {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<DenseLayer<T>>,
    pub norm_in: NormStats<T>,
    pub norm_out: NormStats<T>,
    pub meta: ModelMeta,
}

/// Stock architecture variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchVariant {
    Lsdnn1,
    Lsdnn2,
}

impl std::str::FromStr for ArchVariant {
    type Err = DnnError;
    fn from_str(s: &str) -> Result<Self, DnnError> {
        match s.to_ascii_lowercase().as_str() {
            "lsdnn1" => Ok(Self::Lsdnn1),
            "lsdnn2" => Ok(Self::Lsdnn2),
            other => Err(DnnError::BadConfig(format!("unknown architecture '{other}'"))),
        }
    }
}

impl std::fmt::Display for ArchVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lsdnn1 => "lsdnn1",
            Self::Lsdnn2 => "lsdnn2",
        })
    }
}

/// Layer sizes for a stock variant at `k_on` active subcarriers.
pub fn build_arch(k_on: usize, variant: ArchVariant) -> Vec<usize> {
    match variant {
        ArchVariant::Lsdnn1 => vec![2 * k_on, k_on, 2 * k_on],
        ArchVariant::Lsdnn2 => vec![2 * k_on; 4],
    }
}

/// Tag for a layer-size vector: a stock variant name when it matches one,
/// otherwise the sizes spelled out.
pub fn arch_tag(layer_sizes: &[usize]) -> String {
    let k2 = layer_sizes.first().copied().unwrap_or(0);
    if k2 % 2 == 0 && k2 > 0 {
        let k = k2 / 2;
        if layer_sizes == build_arch(k, ArchVariant::Lsdnn1).as_slice() {
            return "lsdnn1".into();
        }
        if layer_sizes == build_arch(k, ArchVariant::Lsdnn2).as_slice() {
            return "lsdnn2".into();
        }
    }
    let parts: Vec<String> = layer_sizes.iter().map(|s| s.to_string()).collect();
    format!("mlp-{}", parts.join("-"))
}

impl<T: Real> DnnModel<T> {
    /// Fresh model with Xavier-uniform weights (`±√(6/(fan_in+fan_out))`)
    /// and zero biases, drawn from `rng`. Normalization starts as identity.
    pub fn init(layer_sizes: &[usize], rng: &mut RngStream) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
        assert!(layer_sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights =
                (0..fan_in * fan_out).map(|_| T::of((rng.uniform() * 2.0 - 1.0) * bound)).collect();
            layers.push(DenseLayer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                bias: vec![T::zero(); fan_out],
            });
        }
        Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            norm_in: NormStats::identity(layer_sizes[0]),
            norm_out: NormStats::identity(*layer_sizes.last().unwrap()),
            meta: ModelMeta { arch_tag: arch_tag(layer_sizes), ..ModelMeta::default() },
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total number of weights and biases.
    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Checks that layer shapes chain correctly and match `layer_sizes`.
    pub fn validate_shapes(&self) -> Result<(), DnnError> {
        if self.layers.len() + 1 != self.layer_sizes.len() {
            return Err(DnnError::ShapeInconsistency(format!(
                "{} layers for {} sizes",
                self.layers.len(),
                self.layer_sizes.len()
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let (want_in, want_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if layer.in_dim != want_in || layer.out_dim != want_out {
                return Err(DnnError::ShapeInconsistency(format!(
                    "layer {l} is {}x{}, expected {}x{}",
                    layer.out_dim, layer.in_dim, want_out, want_in
                )));
            }
            if layer.weights.len() != want_in * want_out {
                return Err(DnnError::ShapeInconsistency(format!(
                    "layer {l} has {} weights, expected {}",
                    layer.weights.len(),
                    want_in * want_out
                )));
            }
            if layer.bias.len() != want_out {
                return Err(DnnError::ShapeInconsistency(format!(
                    "layer {l} has {} biases, expected {}",
                    layer.bias.len(),
                    want_out
                )));
            }
        }
        if self.norm_in.dim() != self.input_dim()
            || self.norm_in.sigma.len() != self.input_dim()
            || self.norm_out.dim() != self.output_dim()
            || self.norm_out.sigma.len() != self.output_dim()
        {
            return Err(DnnError::ShapeInconsistency(
                "normalization statistics do not match input/output widths".into(),
            ));
        }
        Ok(())
    }
}

/// Per-layer activations retained by [`forward`] for backpropagation:
/// `pre[l]` is the affine result, `post[l]` the value after the layer's
/// activation (identity on the last layer, so `post` ends with the output).
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub pre: Vec<Vec<T>>,
    pub post: Vec<Vec<T>>,
}

/// Runs the network on one raw (already normalized) input vector.
pub fn forward<T: Real>(
    model: &DnnModel<T>,
    x: &[T],
) -> Result<(Vec<T>, ForwardCache<T>), DnnError> {
    if x.len() != model.input_dim() {
        return Err(DnnError::WidthMismatch { expected: model.input_dim(), got: x.len() });
    }
    let n_layers = model.layers.len();
    let mut cache =
        ForwardCache { pre: Vec::with_capacity(n_layers), post: Vec::with_capacity(n_layers) };
    let mut cur = x.to_vec();
    for (l, layer) in model.layers.iter().enumerate() {
        let mut z = Vec::with_capacity(layer.out_dim);
        for j in 0..layer.out_dim {
            let row = &layer.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
            let mut acc = layer.bias[j];
            for (&w, &v) in row.iter().zip(&cur) {
                acc += w * v;
            }
            z.push(acc);
        }
        let is_hidden = l + 1 < n_layers;
        let a: Vec<T> = if is_hidden {
            z.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
        } else {
            z.clone()
        };
        cache.pre.push(z);
        cache.post.push(a.clone());
        cur = a;
    }
    Ok((cur, cache))
}

/// Per-sample MSE loss `(1/N_L)·‖y − target‖²` of the network output.
pub fn loss<T: Real>(model: &DnnModel<T>, x: &[T], target: &[T]) -> Result<T, DnnError> {
    let (y, _) = forward(model, x)?;
    if target.len() != y.len() {
        return Err(DnnError::WidthMismatch { expected: y.len(), got: target.len() });
    }
    let n = T::of(y.len() as f64);
    let sq = y.iter().zip(target).map(|(&a, &b)| (a - b) * (a - b)).fold(T::zero(), |s, v| s + v);
    Ok(sq / n)
}

/// Gradients with the same shapes as the model's weights and biases.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrads<T>>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads<T> {
    pub dw: Vec<T>,
    pub db: Vec<T>,
}

/// Exact gradients of the per-sample MSE loss by reverse accumulation.
/// The ReLU subgradient at exactly 0 is taken as 0.
pub fn backprop<T: Real>(
    model: &DnnModel<T>,
    x: &[T],
    target: &[T],
) -> Result<Gradients<T>, DnnError> {
    if target.len() != model.output_dim() {
        return Err(DnnError::WidthMismatch { expected: model.output_dim(), got: target.len() });
    }
    let (y, cache) = forward(model, x)?;
    let n_layers = model.layers.len();
    let scale = T::of(2.0) / T::of(y.len() as f64);
    // Delta of the linear output layer.
    let mut delta: Vec<T> = y.iter().zip(target).map(|(&a, &b)| scale * (a - b)).collect();

    let mut grads: Vec<LayerGrads<T>> = model
        .layers
        .iter()
        .map(|l| LayerGrads {
            dw: vec![T::zero(); l.weights.len()],
            db: vec![T::zero(); l.out_dim],
        })
        .collect();

    for l in (0..n_layers).rev() {
        let layer = &model.layers[l];
        let input: &[T] = if l == 0 { x } else { &cache.post[l - 1] };
        let g = &mut grads[l];
        for j in 0..layer.out_dim {
            let d = delta[j];
            g.db[j] = d;
            let row = &mut g.dw[j * layer.in_dim..(j + 1) * layer.in_dim];
            for (w, &v) in row.iter_mut().zip(input) {
                *w = d * v;
            }
        }
        if l > 0 {
            // delta_{l-1} = (Wᵀ delta_l) ∘ relu'(pre_{l-1})
            let mut prev = vec![T::zero(); layer.in_dim];
            for j in 0..layer.out_dim {
                let d = delta[j];
                let row = &layer.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            for (p, &z) in prev.iter_mut().zip(&cache.pre[l - 1]) {
                if z <= T::zero() {
                    *p = T::zero();
                }
            }
            delta = prev;
        }
    }
    Ok(Gradients { layers: grads })
}

/// Result of comparing backpropagation against central finite differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub samples: usize,
    pub tolerance: f64,
    /// Largest scale-floored relative error over all parameters and
    /// samples: `|g − fd| / max(|g| + |fd|, 1e−4·max|g|)`. The floor keeps
    /// near-zero entries from turning roundoff into a fake blowup.
    pub max_rel_error: f64,
    pub pass: bool,
}

/// Compares backprop gradients against central finite differences
/// (`ε = 1e−5`) on `samples` random input/target pairs.
///
/// Inputs are redrawn if any hidden pre-activation sits within 1e−3 of the
/// ReLU kink, where the two-sided difference quotient genuinely disagrees
/// with the one-sided derivative.
pub fn grad_check<T: Real>(
    model: &DnnModel<T>,
    samples: usize,
    tolerance: f64,
    rng: &mut RngStream,
) -> Result<GradCheckReport, DnnError> {
    assert!(samples >= 1);
    let eps = 1e-5;
    let kink_margin = 1e-3;
    let mut max_rel = 0.0f64;
    let mut work = model.clone();

    for _ in 0..samples {
        let (x, target) = loop {
            let x: Vec<T> = (0..model.input_dim()).map(|_| gaussian_scalar(rng)).collect();
            let target: Vec<T> = (0..model.output_dim()).map(|_| gaussian_scalar(rng)).collect();
            let (_, cache) = forward(model, &x)?;
            let n_layers = model.layers.len();
            let near_kink =
                cache.pre[..n_layers - 1].iter().flatten().any(|z| z.as_f64().abs() < kink_margin);
            if !near_kink {
                break (x, target);
            }
        };

        let grads = backprop(model, &x, &target)?;
        let gmax = grads
            .layers
            .iter()
            .flat_map(|g| g.dw.iter().chain(&g.db))
            .map(|v| v.as_f64().abs())
            .fold(0.0f64, f64::max);
        let floor = 1e-4 * gmax;

        for l in 0..model.layers.len() {
            let nw = model.layers[l].weights.len();
            for p in 0..nw + model.layers[l].bias.len() {
                let analytic = if p < nw {
                    grads.layers[l].dw[p].as_f64()
                } else {
                    grads.layers[l].db[p - nw].as_f64()
                };
                let orig = *param_slot(&mut work, l, p);
                *param_slot(&mut work, l, p) = orig + T::of(eps);
                let lp = loss(&work, &x, &target)?.as_f64();
                *param_slot(&mut work, l, p) = orig - T::of(eps);
                let lm = loss(&work, &x, &target)?.as_f64();
                *param_slot(&mut work, l, p) = orig;
                let fd = (lp - lm) / (2.0 * eps);
                let denom = (analytic.abs() + fd.abs()).max(floor);
                if denom > 0.0 {
                    let rel = (analytic - fd).abs() / denom;
                    if rel > max_rel {
                        max_rel = rel;
                    }
                }
            }
        }
    }
    Ok(GradCheckReport { samples, tolerance, max_rel_error: max_rel, pass: max_rel < tolerance })
}

fn gaussian_scalar<T: Real>(rng: &mut RngStream) -> T {
    let (a, _): (T, T) = crate::numerics::gaussian_pair(rng);
    a
}

/// Flat parameter addressing for `grad_check`: weights first, then biases.
fn param_slot<T>(model: &mut DnnModel<T>, layer: usize, p: usize) -> &mut T {
    let nw = model.layers[layer].weights.len();
    if p < nw {
        &mut model.layers[layer].weights[p]
    } else {
        &mut model.layers[layer].bias[p - nw]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model() -> DnnModel<f64> {
        // 2-2-1 net: W1 = I, b1 = 0, W2 = [1, -1], b2 = 0.5.
        let mut m = DnnModel::init(&[2, 2, 1], &mut RngStream::new(0, 0));
        m.layers[0].weights = vec![1.0, 0.0, 0.0, 1.0];
        m.layers[0].bias = vec![0.0, 0.0];
        m.layers[1].weights = vec![1.0, -1.0];
        m.layers[1].bias = vec![0.5];
        m
    }

    #[test]
    fn arch_shapes() {
        assert_eq!(build_arch(52, ArchVariant::Lsdnn1), vec![104, 52, 104]);
        assert_eq!(build_arch(52, ArchVariant::Lsdnn2), vec![104, 104, 104, 104]);
        assert_eq!(arch_tag(&[104, 52, 104]), "lsdnn1");
        assert_eq!(arch_tag(&[104, 104, 104, 104]), "lsdnn2");
        assert_eq!(arch_tag(&[10, 7, 3]), "mlp-10-7-3");
    }

    #[test]
    fn lsdnn1_parameter_count() {
        let m: DnnModel<f64> =
            DnnModel::init(&build_arch(52, ArchVariant::Lsdnn1), &mut RngStream::new(1, 0));
        assert_eq!(m.param_count(), 10_972);
        let listed: usize = m.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum();
        assert_eq!(listed, 10_972);
    }

    #[test]
    fn forward_hand_example() {
        let m = tiny_model();
        let (y, cache) = forward(&m, &[2.0, -3.0]).unwrap();
        assert_eq!(cache.post[0], vec![2.0, 0.0]);
        assert_eq!(y, vec![2.5]);
    }

    #[test]
    fn forward_zero_weights_passes_bias() {
        let mut m = tiny_model();
        m.layers[0].weights = vec![0.0; 4];
        m.layers[0].bias = vec![-1.0, 2.0];
        m.layers[1].weights = vec![0.0, 0.0];
        m.layers[1].bias = vec![0.25];
        let (y, cache) = forward(&m, &[5.0, 7.0]).unwrap();
        assert_eq!(cache.post[0], vec![0.0, 2.0]); // max(b, 0)
        assert_eq!(y, vec![0.25]);
    }

    #[test]
    fn forward_width_checked() {
        let m = tiny_model();
        assert!(matches!(
            forward(&m, &[1.0]),
            Err(DnnError::WidthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn relu_positive_homogeneity() {
        // Through hidden layers only (zero bias): hidden(a*x) = a*hidden(x).
        let mut m: DnnModel<f64> = DnnModel::init(&[6, 5, 4], &mut RngStream::new(3, 0));
        for l in &mut m.layers {
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        let x: Vec<f64> = vec![0.3, -1.2, 0.7, 2.0, -0.4, 0.1];
        let ax: Vec<f64> = x.iter().map(|v| v * 3.5).collect();
        let (_, c1) = forward(&m, &x).unwrap();
        let (_, c2) = forward(&m, &ax).unwrap();
        for (a, b) in c1.post[0].iter().zip(&c2.post[0]) {
            assert!((b - a * 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn backprop_zero_at_optimum() {
        let m = tiny_model();
        let (y, _) = forward(&m, &[2.0, -3.0]).unwrap();
        let g = backprop(&m, &[2.0, -3.0], &y).unwrap();
        for lg in &g.layers {
            assert!(lg.dw.iter().chain(&lg.db).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn backprop_single_linear_neuron() {
        // y = w*x + b with w=1, b=0, x=1, target=0 -> dL/dw = 2.
        let mut m: DnnModel<f64> = DnnModel::init(&[1, 1], &mut RngStream::new(0, 0));
        m.layers[0].weights = vec![1.0];
        m.layers[0].bias = vec![0.0];
        let g = backprop(&m, &[1.0], &[0.0]).unwrap();
        assert!((g.layers[0].dw[0] - 2.0).abs() < 1e-15);
        assert!((g.layers[0].db[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn grad_check_random_model() {
        let m: DnnModel<f64> = DnnModel::init(&[8, 5, 8], &mut RngStream::new(9, 0));
        let mut rng = RngStream::new(9, 1);
        let report = grad_check(&m, 5, 1e-5, &mut rng).unwrap();
        assert!(report.pass, "max rel error {}", report.max_rel_error);
    }

    #[test]
    fn grad_check_rejects_corrupted_gradient() {
        // Negative control: a gradient off by 1% must exceed the tolerance
        // under the same comparison rule grad_check applies.
        let m: DnnModel<f64> = DnnModel::init(&[3, 3], &mut RngStream::new(4, 0));
        let x = [0.5, -1.0, 2.0];
        let t = [0.0, 0.0, 0.0];
        let g = backprop(&m, &x, &t).unwrap();
        let fd = g.layers[0].dw[0]; // exact for a linear model
        let corrupted = fd * 1.01;
        let rel = (corrupted - fd).abs() / (corrupted.abs() + fd.abs());
        assert!(rel > 1e-5, "corruption must be detectable, rel {rel}");
    }

    #[test]
    fn grad_check_linear_model_machine_precision() {
        let mut m: DnnModel<f64> = DnnModel::init(&[4, 4], &mut RngStream::new(5, 0));
        m.layers[0].bias = vec![0.1, -0.2, 0.3, 0.0];
        let mut rng = RngStream::new(5, 1);
        let report = grad_check(&m, 3, 1e-5, &mut rng).unwrap();
        assert!(report.max_rel_error < 1e-7, "linear model error {}", report.max_rel_error);
    }

    #[test]
    fn norm_stats_round_trip() {
        let data = vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0];
        let stats: NormStats<f64> = NormStats::from_rows(&data, 4, 2);
        assert!((stats.mu[0] - 2.5).abs() < 1e-15);
        assert!((stats.mu[1] - 25.0).abs() < 1e-15);
        let x = [3.0, 10.0];
        let back = stats.denormalize(&stats.normalize(&x));
        assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn norm_stats_degenerate_column() {
        let data = vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0];
        let stats: NormStats<f64> = NormStats::from_rows(&data, 3, 2);
        assert_eq!(stats.sigma[0], 1e-12);
        let z = stats.normalize(&[5.0, 2.0]);
        assert_eq!(z[0], 0.0);
    }

    #[test]
    fn validate_shapes_catches_mismatch() {
        let mut m: DnnModel<f64> = DnnModel::init(&[4, 3, 4], &mut RngStream::new(6, 0));
        m.validate_shapes().unwrap();
        m.layers[0].weights.pop();
        assert!(matches!(m.validate_shapes(), Err(DnnError::ShapeInconsistency(_))));
    }
}
