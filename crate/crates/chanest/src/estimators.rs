//! The three channel estimators (LS, LMMSE, DNN-augmented LS) and the NMSE
//! metric.

pub use crate::dnn::NormStats;

use thiserror::Error;

use crate::channel::{draw_channel, ChannelError, ChannelModel};
use crate::dnn::{forward, DnnError, DnnModel};
use crate::numerics::{cplx_div, Cplx, CplxMatrix, NumericsError, RngStream};
use crate::phy::{FrameConfig, PreambleSpec};
use crate::real::Real;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("preamble entry at active position {bin} is zero")]
    ZeroPreambleEntry { bin: usize },
    #[error("no preamble symbols")]
    EmptyPreamble,
    #[error("vector length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("autocorrelation matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("model input width {got}, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("reference channel has zero energy")]
    ZeroReference,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Dnn(#[from] DnnError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Least-squares channel estimate at the active subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct LsEstimate<T> {
    pub h_hat: Vec<Cplx<T>>,
}

/// Inputs of the LMMSE filter: the channel autocorrelation prior, the
/// operating noise variance, preamble energy, and total subcarrier count.
#[derive(Debug, Clone)]
pub struct LmmseParams<T> {
    pub r_h: CplxMatrix<T>,
    pub n0: f64,
    pub e_p: f64,
    pub k_total: usize,
}

impl<T: Real> LmmseParams<T> {
    /// Validates that `r_h` is square and Hermitian to within
    /// `1e−9·max|entry|`.
    pub fn new(
        r_h: CplxMatrix<T>,
        n0: f64,
        e_p: f64,
        k_total: usize,
    ) -> Result<Self, EstimatorError> {
        if r_h.rows() != r_h.cols() {
            return Err(EstimatorError::LengthMismatch { expected: r_h.rows(), got: r_h.cols() });
        }
        let scale = r_h.max_abs().as_f64();
        let mut worst = 0.0f64;
        for i in 0..r_h.rows() {
            for j in 0..=i {
                let d = (r_h[(i, j)] - r_h[(j, i)].conj()).norm().as_f64();
                if d > worst {
                    worst = d;
                }
            }
        }
        if scale > 0.0 && worst > 1e-9 * scale {
            return Err(EstimatorError::NotHermitian { asymmetry: worst });
        }
        Ok(Self { r_h, n0, e_p, k_total })
    }

    /// Noise-loading coefficient `K·n0/E_p` of the LMMSE filter.
    pub fn loading(&self) -> f64 {
        self.k_total as f64 * self.n0 / self.e_p
    }
}

/// Least-squares estimate: `Ĥ[k] = (Σ_q Y[k,q]) / (K_p · D[k])`.
///
/// For ±1 BPSK preambles the division collapses to a conditional sign flip
/// of the symbol average, which is the path actually taken; the general
/// complex division is used for any other preamble.
pub fn ls_estimate<T: Real>(
    y_preamble: &[Vec<Cplx<T>>],
    preamble: &PreambleSpec<T>,
) -> Result<LsEstimate<T>, EstimatorError> {
    if y_preamble.is_empty() || preamble.symbols.is_empty() {
        return Err(EstimatorError::EmptyPreamble);
    }
    let k_on = preamble.symbols[0].len();
    for y in y_preamble {
        if y.len() != k_on {
            return Err(EstimatorError::LengthMismatch { expected: k_on, got: y.len() });
        }
    }
    let k_p = T::of(y_preamble.len() as f64);
    let d = &preamble.symbols[0];
    let mut h_hat = Vec::with_capacity(k_on);
    for k in 0..k_on {
        let mut sum = Cplx::new(T::zero(), T::zero());
        for y in y_preamble {
            sum += y[k];
        }
        let avg = Cplx::new(sum.re / k_p, sum.im / k_p);
        let dk = d[k];
        let est = if dk.im == T::zero() && (dk.re == T::one() || dk.re == -T::one()) {
            // BPSK shortcut: the received average or its negation.
            if dk.re == T::one() {
                avg
            } else {
                -avg
            }
        } else {
            cplx_div(avg, dk).map_err(|_| EstimatorError::ZeroPreambleEntry { bin: k })?
        };
        h_hat.push(est);
    }
    Ok(LsEstimate { h_hat })
}

/// Empirical channel autocorrelation `R̂ = (1/N)·Σ H Hᴴ` from the provided
/// realizations, Hermitian-symmetrized.
pub fn estimate_rh_from<T: Real>(
    realizations: &[Vec<Cplx<T>>],
) -> Result<CplxMatrix<T>, EstimatorError> {
    let n = realizations.len();
    if n == 0 {
        return Err(EstimatorError::EmptyPreamble);
    }
    let k_on = realizations[0].len();
    let mut r = CplxMatrix::<T>::zeros(k_on, k_on);
    for h in realizations {
        if h.len() != k_on {
            return Err(EstimatorError::LengthMismatch { expected: k_on, got: h.len() });
        }
        for i in 0..k_on {
            let hi = h[i];
            for j in 0..k_on {
                r[(i, j)] += hi * h[j].conj();
            }
        }
    }
    let scale = T::of(1.0 / n as f64);
    let mut sym = CplxMatrix::<T>::zeros(k_on, k_on);
    for i in 0..k_on {
        for j in 0..k_on {
            let a = r[(i, j)].scale(scale);
            let b = r[(j, i)].conj().scale(scale);
            sym[(i, j)] = (a + b).scale(T::of(0.5));
        }
    }
    Ok(sym)
}

/// Draws `draws` channels from the model and accumulates their empirical
/// autocorrelation.
pub fn estimate_rh<T: Real>(
    model: &ChannelModel,
    cfg: &FrameConfig,
    draws: usize,
    rng: &mut RngStream,
) -> Result<CplxMatrix<T>, EstimatorError> {
    assert!(draws >= 1, "draws must be >= 1");
    let k_on = cfg.active_count();
    let mut r = CplxMatrix::<T>::zeros(k_on, k_on);
    for _ in 0..draws {
        let h = draw_channel::<T>(model, cfg, rng)?;
        for i in 0..k_on {
            let hi = h.h[i];
            for j in 0..k_on {
                r[(i, j)] += hi * h.h[j].conj();
            }
        }
    }
    let scale = T::of(1.0 / draws as f64);
    let mut sym = CplxMatrix::<T>::zeros(k_on, k_on);
    for i in 0..k_on {
        for j in 0..k_on {
            let a = r[(i, j)].scale(scale);
            let b = r[(j, i)].conj().scale(scale);
            sym[(i, j)] = (a + b).scale(T::of(0.5));
        }
    }
    Ok(sym)
}

/// The LMMSE smoothing matrix `R_h · (R_h + (K·n0/E_p)·I)⁻¹`.
///
/// Precompute this once per (prior, SNR) operating point; the estimate
/// itself is then one matrix-vector product. The inversion runs in double
/// precision regardless of `T`.
pub fn lmmse_filter<T: Real>(p: &LmmseParams<T>) -> Result<CplxMatrix<T>, EstimatorError> {
    let n = p.r_h.rows();
    // Lift to f64 for the inverse.
    let mut r64 = CplxMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = p.r_h[(i, j)];
            r64[(i, j)] = Cplx::new(v.re.as_f64(), v.im.as_f64());
        }
    }
    let loaded = r64.add_scaled_identity(Cplx::new(p.loading(), 0.0));
    let inv = loaded.lu_invert()?;
    let filter64 = r64.mul(&inv);
    let mut filter = CplxMatrix::<T>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = filter64[(i, j)];
            filter[(i, j)] = Cplx::new(T::of(v.re), T::of(v.im));
        }
    }
    Ok(filter)
}

/// LMMSE estimate `R_h (R_h + (K·n0/E_p) I)⁻¹ Ĥ_LS`.
pub fn lmmse_estimate<T: Real>(
    ls: &LsEstimate<T>,
    p: &LmmseParams<T>,
) -> Result<Vec<Cplx<T>>, EstimatorError> {
    if ls.h_hat.len() != p.r_h.rows() {
        return Err(EstimatorError::LengthMismatch { expected: p.r_h.rows(), got: ls.h_hat.len() });
    }
    let filter = lmmse_filter(p)?;
    Ok(filter.mul_vec(&ls.h_hat))
}

/// Splits a complex vector into `[all real parts, all imaginary parts]`.
pub fn stack_complex<T: Real>(h: &[Cplx<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(2 * h.len());
    out.extend(h.iter().map(|v| v.re));
    out.extend(h.iter().map(|v| v.im));
    out
}

/// Inverse of [`stack_complex`]; `v.len()` must be even.
pub fn unstack_complex<T: Real>(v: &[T]) -> Vec<Cplx<T>> {
    assert!(v.len() % 2 == 0, "stacked vector length must be even");
    let k = v.len() / 2;
    (0..k).map(|i| Cplx::new(v[i], v[k + i])).collect()
}

/// DNN-augmented LS: stack → normalize → forward → denormalize → unstack.
pub fn lsdnn_estimate<T: Real>(
    ls: &LsEstimate<T>,
    model: &DnnModel<T>,
) -> Result<Vec<Cplx<T>>, EstimatorError> {
    if model.input_dim() != 2 * ls.h_hat.len() {
        return Err(EstimatorError::WidthMismatch {
            expected: model.input_dim(),
            got: 2 * ls.h_hat.len(),
        });
    }
    let stacked = stack_complex(&ls.h_hat);
    let normalized = model.norm_in.normalize(&stacked);
    let (y, _) = forward(model, &normalized)?;
    let denorm = model.norm_out.denormalize(&y);
    Ok(unstack_complex(&denorm))
}

/// Per-frame normalized mean square error `‖ĥ − h‖² / ‖h‖²`.
pub fn nmse<T: Real>(h_hat: &[Cplx<T>], h_true: &[Cplx<T>]) -> Result<T, EstimatorError> {
    if h_hat.len() != h_true.len() {
        return Err(EstimatorError::LengthMismatch { expected: h_true.len(), got: h_hat.len() });
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for (a, b) in h_hat.iter().zip(h_true) {
        num += (*a - *b).norm_sqr();
        den += b.norm_sqr();
    }
    if den == T::zero() {
        return Err(EstimatorError::ZeroReference);
    }
    Ok(num / den)
}
