//! Finite word-length emulation.
//!
//! Fixed-point `Q(W, I)` is modeled on a double-precision carrier: a value is
//! snapped to the grid `step = 2^-(W-I)` inside the two's-complement range
//! `[-2^(I-1), 2^(I-1) - step]`. Arithmetic between quantization points runs
//! in `f64` and results are re-quantized at operation boundaries, which is the
//! usual software emulation of a fixed-point datapath with double-width
//! accumulators. The emulation is exact as long as `|x| / step < 2^53`; all
//! practical formats here (W <= 32) are well inside that.
//!
//! `fp64` is the identity policy: running the quantized pipeline with every
//! format set to `fp64` reproduces the floating-point pipeline bit for bit,
//! which pins the emulation overhead at zero and anchors word-length sweeps.

use std::fmt;
use std::str::FromStr;

use half::f16;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dnn::DnnModel;
use crate::estimators::{nmse, EstimatorError, LsEstimate};
use crate::numerics::Cplx;
use crate::phy::{
    bit_errors, demap, equalize_or_zero, FrameConfig, ModScheme, PhyError, PreambleSpec,
};
use crate::real::Real;
use crate::sim::SimFrame;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("bad numeric format `{0}`")]
    BadFormat(String),
    #[error("model expects input width {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

/// Tie-breaking rule for values exactly between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round to nearest, ties to even (convergent rounding).
    NearestEven,
    /// Round to nearest, ties away from zero.
    #[default]
    NearestAway,
    /// Round toward negative infinity (two's-complement truncation).
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Overflow {
    /// Clamp to the representable range.
    #[default]
    Saturate,
    /// Two's-complement wrap-around.
    Wrap,
}

/// A `Q(W, I)` signed fixed-point format: `total_bits` including sign,
/// `integer_bits` including sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub total_bits: u32,
    pub integer_bits: u32,
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default)]
    pub overflow: Overflow,
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, integer_bits: u32) -> Result<Self, QuantError> {
        let f = FixedPointFormat {
            total_bits,
            integer_bits,
            rounding: Rounding::default(),
            overflow: Overflow::default(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), QuantError> {
        if self.total_bits == 0 || self.total_bits > 64 {
            return Err(QuantError::BadFormat(format!(
                "total bits must be in 1..=64, got {}",
                self.total_bits
            )));
        }
        if self.integer_bits == 0 || self.integer_bits > self.total_bits {
            return Err(QuantError::BadFormat(format!(
                "integer bits must be in 1..=W, got {} with W={}",
                self.integer_bits, self.total_bits
            )));
        }
        Ok(())
    }

    /// Grid spacing `2^-(W-I)`.
    pub fn step(&self) -> f64 {
        (2.0f64).powi(-((self.total_bits - self.integer_bits) as i32))
    }

    /// Most negative representable value `-2^(I-1)`.
    pub fn min_value(&self) -> f64 {
        -(2.0f64).powi(self.integer_bits as i32 - 1)
    }

    /// Most positive representable value `2^(I-1) - step`.
    pub fn max_value(&self) -> f64 {
        (2.0f64).powi(self.integer_bits as i32 - 1) - self.step()
    }
}

/// Snaps `x` to the fixed-point grid.
pub fn quantize<T: Real>(x: T, fmt: &FixedPointFormat) -> T {
    let step = fmt.step();
    let u = x.as_f64() / step;
    let r = match fmt.rounding {
        Rounding::NearestAway => u.round(),
        Rounding::NearestEven => u.round_ties_even(),
        Rounding::Truncate => u.floor(),
    };
    // Bounds in grid units. For W near 64 these exceed f64 integer precision,
    // but every intermediate is integer-valued so the clamp stays consistent.
    let lo = -(2.0f64).powi(fmt.total_bits as i32 - 1);
    let hi = (2.0f64).powi(fmt.total_bits as i32 - 1) - 1.0;
    let bounded = match fmt.overflow {
        Overflow::Saturate => r.clamp(lo, hi),
        Overflow::Wrap => {
            let span = (2.0f64).powi(fmt.total_bits as i32);
            lo + (r - lo).rem_euclid(span)
        }
    };
    T::of(bounded * step)
}

/// A numeric format for one stage of the pipeline: a float width or a
/// fixed-point spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericFormat {
    Fp64,
    Fp32,
    Fp16,
    Fixed(FixedPointFormat),
}

impl NumericFormat {
    /// Applies the format to one scalar.
    pub fn apply<T: Real>(&self, x: T) -> T {
        match self {
            NumericFormat::Fp64 => x,
            NumericFormat::Fp32 => T::of(x.as_f64() as f32 as f64),
            NumericFormat::Fp16 => T::of(f16::from_f64(x.as_f64()).to_f64()),
            NumericFormat::Fixed(f) => quantize(x, f),
        }
    }

    pub fn apply_cplx<T: Real>(&self, x: Cplx<T>) -> Cplx<T> {
        Cplx::new(self.apply(x.re), self.apply(x.im))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, NumericFormat::Fp64)
    }
}

/// Convenience alias used throughout: `quantize_value(x, fmt)`.
pub fn quantize_value<T: Real>(x: T, fmt: &NumericFormat) -> T {
    fmt.apply(x)
}

impl fmt::Display for NumericFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericFormat::Fp64 => write!(f, "fp64"),
            NumericFormat::Fp32 => write!(f, "fp32"),
            NumericFormat::Fp16 => write!(f, "fp16"),
            NumericFormat::Fixed(q) => {
                write!(f, "q{}_{}", q.total_bits, q.integer_bits)?;
                let round = match q.rounding {
                    Rounding::NearestAway => None,
                    Rounding::NearestEven => Some("even"),
                    Rounding::Truncate => Some("trunc"),
                };
                let over = match q.overflow {
                    Overflow::Saturate => None,
                    Overflow::Wrap => Some("wrap"),
                };
                // Emit suffixes only off the defaults; an explicit rounding tag
                // is required whenever overflow is tagged so parsing stays
                // positional.
                match (round, over) {
                    (None, None) => Ok(()),
                    (Some(r), None) => write!(f, ":{r}"),
                    (r, Some(o)) => write!(f, ":{}:{o}", r.unwrap_or("away")),
                }
            }
        }
    }
}

impl FromStr for NumericFormat {
    type Err = QuantError;

    /// Accepts `fp64 | fp32 | fp16 | q<W>_<I>[:<round>[:<overflow>]]` with
    /// `round` in `{away, even, trunc}` and `overflow` in `{sat, wrap}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || QuantError::BadFormat(s.to_string());
        match s {
            "fp64" => return Ok(NumericFormat::Fp64),
            "fp32" => return Ok(NumericFormat::Fp32),
            "fp16" => return Ok(NumericFormat::Fp16),
            _ => {}
        }
        let rest = s.strip_prefix('q').ok_or_else(bad)?;
        let mut parts = rest.split(':');
        let wi = parts.next().ok_or_else(bad)?;
        let (w, i) = wi.split_once('_').ok_or_else(bad)?;
        let total_bits: u32 = w.parse().map_err(|_| bad())?;
        let integer_bits: u32 = i.parse().map_err(|_| bad())?;
        let mut fmt = FixedPointFormat::new(total_bits, integer_bits).map_err(|_| bad())?;
        if let Some(r) = parts.next() {
            fmt.rounding = match r {
                "away" => Rounding::NearestAway,
                "even" => Rounding::NearestEven,
                "trunc" => Rounding::Truncate,
                _ => return Err(bad()),
            };
        }
        if let Some(o) = parts.next() {
            fmt.overflow = match o {
                "sat" => Overflow::Saturate,
                "wrap" => Overflow::Wrap,
                _ => return Err(bad()),
            };
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(NumericFormat::Fixed(fmt))
    }
}

impl Serialize for NumericFormat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NumericFormat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Formats for each stage of the quantized estimator datapath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantPolicy {
    /// Estimator inputs (received samples, stacked LS estimate).
    pub input_fmt: NumericFormat,
    /// Stored constants: weights, biases, normalization statistics.
    pub weight_fmt: NumericFormat,
    /// Hidden-layer activations after the nonlinearity.
    pub activation_fmt: NumericFormat,
    /// Network outputs and the denormalized estimate.
    pub output_fmt: NumericFormat,
}

impl QuantPolicy {
    /// One format everywhere; this is how word-length sweeps run.
    pub fn uniform(fmt: NumericFormat) -> Self {
        QuantPolicy { input_fmt: fmt, weight_fmt: fmt, activation_fmt: fmt, output_fmt: fmt }
    }

    pub fn float64() -> Self {
        QuantPolicy::uniform(NumericFormat::Fp64)
    }
}

/// Runs the network with the datapath emulated under `policy`.
///
/// Weights and biases are read through `weight_fmt`, the input through
/// `input_fmt`; each neuron accumulates in double precision and the result is
/// quantized after the activation (`activation_fmt` for hidden layers,
/// `output_fmt` for the last). With an all-`fp64` policy this reproduces the
/// float forward pass exactly, including accumulation order.
pub fn quantized_forward<T: Real>(
    model: &DnnModel<T>,
    x: &[T],
    policy: &QuantPolicy,
) -> Result<Vec<T>, QuantError> {
    if x.len() != model.input_dim() {
        return Err(QuantError::WidthMismatch { expected: model.input_dim(), got: x.len() });
    }
    let n_layers = model.layers.len();
    let mut cur: Vec<T> = x.iter().map(|&v| policy.input_fmt.apply(v)).collect();
    for (l, layer) in model.layers.iter().enumerate() {
        let last = l + 1 == n_layers;
        let out_fmt = if last { &policy.output_fmt } else { &policy.activation_fmt };
        let mut next = vec![T::zero(); layer.out_dim];
        for (j, out) in next.iter_mut().enumerate() {
            let mut acc = policy.weight_fmt.apply(layer.bias[j]);
            let row = &layer.weights[j * layer.in_dim..(j + 1) * layer.in_dim];
            for (w, v) in row.iter().zip(&cur) {
                acc += policy.weight_fmt.apply(*w) * *v;
            }
            if !last && acc < T::zero() {
                acc = T::zero();
            }
            *out = out_fmt.apply(acc);
        }
        cur = next;
    }
    Ok(cur)
}

/// A model with its constants pre-quantized, for repeated inference under one
/// policy without re-quantizing weights every call.
#[derive(Debug, Clone)]
pub struct QuantizedModel<T> {
    model: DnnModel<T>,
    policy: QuantPolicy,
}

impl<T: Real> QuantizedModel<T> {
    pub fn new(model: &DnnModel<T>, policy: QuantPolicy) -> Self {
        let mut m = model.clone();
        for layer in &mut m.layers {
            for w in &mut layer.weights {
                *w = policy.weight_fmt.apply(*w);
            }
            for b in &mut layer.bias {
                *b = policy.weight_fmt.apply(*b);
            }
        }
        for v in m.norm_in.mu.iter_mut().chain(m.norm_in.sigma.iter_mut()) {
            *v = policy.weight_fmt.apply(*v);
        }
        for v in m.norm_out.mu.iter_mut().chain(m.norm_out.sigma.iter_mut()) {
            *v = policy.weight_fmt.apply(*v);
        }
        // Constants are on-grid now; the identity weight format in the inner
        // loop keeps them there without a second rounding.
        let run_policy = QuantPolicy { weight_fmt: NumericFormat::Fp64, ..policy };
        QuantizedModel { model: m, policy: run_policy }
    }

    pub fn policy(&self) -> &QuantPolicy {
        &self.policy
    }

    /// Quantized analog of the floating-point preamble-estimate refinement:
    /// stack, normalize, forward, denormalize, unstack.
    pub fn refine(&self, h_ls: &[Cplx<T>]) -> Result<Vec<Cplx<T>>, QuantError> {
        let k_on = h_ls.len();
        if 2 * k_on != self.model.input_dim() {
            return Err(QuantError::WidthMismatch {
                expected: self.model.input_dim(),
                got: 2 * k_on,
            });
        }
        let mut stacked = Vec::with_capacity(2 * k_on);
        stacked.extend(h_ls.iter().map(|v| self.policy.input_fmt.apply(v.re)));
        stacked.extend(h_ls.iter().map(|v| self.policy.input_fmt.apply(v.im)));
        let normalized: Vec<T> = stacked
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                self.policy
                    .input_fmt
                    .apply((v - self.model.norm_in.mu[i]) / self.model.norm_in.sigma[i])
            })
            .collect();
        let y = quantized_forward(&self.model, &normalized, &self.policy)?;
        let denorm: Vec<T> = y
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                self.policy
                    .output_fmt
                    .apply(v * self.model.norm_out.sigma[i] + self.model.norm_out.mu[i])
            })
            .collect();
        let mut out = Vec::with_capacity(k_on);
        for k in 0..k_on {
            out.push(Cplx::new(denorm[k], denorm[k + k_on]));
        }
        Ok(out)
    }
}

/// Preamble averaging with every intermediate held in `fmt`: the received
/// samples, each partial sum, the average, and the per-bin division result.
/// With `fmt = fp64` this matches the floating-point estimator bit for bit.
pub fn quantized_ls<T: Real>(
    y_preamble: &[Vec<Cplx<T>>],
    preamble: &PreambleSpec<T>,
    fmt: &NumericFormat,
) -> Result<LsEstimate<T>, QuantError> {
    if y_preamble.is_empty() {
        return Err(EstimatorError::EmptyPreamble.into());
    }
    let k_on = preamble.symbols[0].len();
    for y in y_preamble {
        if y.len() != k_on {
            return Err(EstimatorError::LengthMismatch { expected: k_on, got: y.len() }.into());
        }
    }
    let k_p = T::of(y_preamble.len() as f64);
    let mut h_hat = Vec::with_capacity(k_on);
    for k in 0..k_on {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for y in y_preamble {
            acc = fmt.apply_cplx(acc + fmt.apply_cplx(y[k]));
        }
        let avg = fmt.apply_cplx(Cplx::new(acc.re / k_p, acc.im / k_p));
        let dk = preamble.symbols[0][k];
        let est = if dk.im == T::zero() && (dk.re == T::one() || dk.re == -T::one()) {
            if dk.re > T::zero() {
                avg
            } else {
                -avg
            }
        } else {
            let q = crate::numerics::cplx_div(avg, dk)
                .map_err(|_| EstimatorError::ZeroPreambleEntry { bin: k })?;
            fmt.apply_cplx(q)
        };
        h_hat.push(est);
    }
    Ok(LsEstimate { h_hat })
}

/// One row of a word-length sweep.
#[derive(Debug, Clone, Serialize)]
pub struct WlRow {
    pub format: String,
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub ber: f64,
    pub bits_total: u64,
}

/// Evaluates the quantized LS-plus-network estimator over the same frames for
/// every format in `formats`. The receiver chain past the estimate (equalize,
/// slice) stays floating point; the sweep isolates the estimator datapath.
pub fn wl_sweep<T: Real>(
    model: &DnnModel<T>,
    frames: &[SimFrame<T>],
    cfg: &FrameConfig,
    preamble: &PreambleSpec<T>,
    scheme: &ModScheme<T>,
    formats: &[NumericFormat],
) -> Result<Vec<WlRow>, QuantError> {
    let mut rows = Vec::with_capacity(formats.len());
    for fmt in formats {
        let qm = QuantizedModel::new(model, QuantPolicy::uniform(*fmt));
        let mut nmse_sum = 0.0f64;
        let mut nmse_sq = 0.0f64;
        let mut errors = 0u64;
        let mut bits = 0u64;
        for frame in frames {
            let ls = quantized_ls(&frame.y_preamble, preamble, fmt)?;
            let h = qm.refine(&ls.h_hat)?;
            let e = nmse(&h, &frame.h.h)?.as_f64();
            nmse_sum += e;
            nmse_sq += e * e;
            let bits_per_sym = cfg.data_count() * scheme.bits_per_symbol;
            for (s, y) in frame.y_data.iter().enumerate() {
                // Zero-tolerant: narrow formats round whole bins to zero and
                // those bit errors are the point of the sweep.
                let xeq = equalize_or_zero(y, &h)?;
                let rx = demap(&xeq, scheme, cfg)?;
                let tx = &frame.tx_bits[s * bits_per_sym..(s + 1) * bits_per_sym];
                let (e, n) = bit_errors(tx, &rx)?;
                errors += e;
                bits += n;
            }
        }
        let n = frames.len() as f64;
        let mean = nmse_sum / n;
        let var = (nmse_sq / n - mean * mean).max(0.0);
        let stderr = (var / n).sqrt();
        rows.push(WlRow {
            format: fmt.to_string(),
            nmse_mean: mean,
            nmse_stderr: stderr,
            ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
            bits_total: bits,
        });
    }
    Ok(rows)
}
