//! Channel models and the frequency-domain input-output relation
//! `Y[k] = H[k]·X[k] + V[k]` with calibrated AWGN.
//!
//! SNR convention: unit average symbol energy per active subcarrier, so the
//! per-subcarrier complex noise variance is `n0 = 10^(−snr_db/10)`. One
//! channel realization is reused for the preamble and all data symbols of a
//! frame (the channel is static over a frame).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{gaussian_pair, taps_to_freq, Cplx, NumericsError, RngStream};
use crate::phy::FrameConfig;
use crate::real::Real;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid channel model: {0}")]
    InvalidModel(String),
    #[error("vector length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("channel profile file: {0}")]
    Io(#[from] std::io::Error),
    #[error("channel profile parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Training/evaluation SNR specification: a single operating point or a
/// uniform range (used for mixture-SNR datasets).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrSpec {
    Single(f64),
    Range { lo: f64, hi: f64 },
}

impl SnrSpec {
    /// Draws an SNR from the spec (constant for `Single`).
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            SnrSpec::Single(s) => s,
            SnrSpec::Range { lo, hi } => lo + (hi - lo) * rng.uniform(),
        }
    }

    /// Nominal value recorded in model metadata: the point itself, or the
    /// range midpoint for mixtures.
    pub fn nominal_db(&self) -> f64 {
        match *self {
            SnrSpec::Single(s) => s,
            SnrSpec::Range { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

impl std::fmt::Display for SnrSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnrSpec::Single(s) => write!(f, "{s}"),
            SnrSpec::Range { lo, hi } => write!(f, "{lo}..{hi}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Ideal,
    FlatRayleigh,
    TappedDelayLine,
}

/// One tap of a sample-spaced power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapSpec {
    pub delay: usize,
    pub power: f64,
}

/// A channel family to draw realizations from.
///
/// The bundled tapped-delay-line profiles are illustrative stand-ins with
/// plausible delay spreads, not measured vehicular profiles; real profiles
/// can be supplied as JSON documents `{name, kind, taps:[{delay, power}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub name: String,
    pub kind: ChannelKind,
    #[serde(default)]
    pub taps: Vec<TapSpec>,
    #[serde(default = "default_true")]
    pub normalize_power: bool,
}

fn default_true() -> bool {
    true
}

impl ChannelModel {
    pub fn ideal() -> Self {
        Self { name: "ideal".into(), kind: ChannelKind::Ideal, taps: vec![], normalize_power: true }
    }

    pub fn flat_rayleigh() -> Self {
        Self {
            name: "flat".into(),
            kind: ChannelKind::FlatRayleigh,
            taps: vec![],
            normalize_power: true,
        }
    }

    pub fn tdl(name: &str, taps: Vec<TapSpec>) -> Self {
        Self { name: name.into(), kind: ChannelKind::TappedDelayLine, taps, normalize_power: true }
    }

    /// Looks up a bundled profile by name: `ideal`, `flat`, `urban-3tap`
    /// (delays 0,1,2), `hilly-3tap` (delays 0,5,11), `rural-2tap`
    /// (delays 0,1).
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ideal" => Some(Self::ideal()),
            "flat" => Some(Self::flat_rayleigh()),
            "urban-3tap" => Some(Self::tdl(
                "urban-3tap",
                vec![
                    TapSpec { delay: 0, power: 0.5 },
                    TapSpec { delay: 1, power: 0.3 },
                    TapSpec { delay: 2, power: 0.2 },
                ],
            )),
            "hilly-3tap" => Some(Self::tdl(
                "hilly-3tap",
                vec![
                    TapSpec { delay: 0, power: 0.6 },
                    TapSpec { delay: 5, power: 0.25 },
                    TapSpec { delay: 11, power: 0.15 },
                ],
            )),
            "rural-2tap" => Some(Self::tdl(
                "rural-2tap",
                vec![TapSpec { delay: 0, power: 0.85 }, TapSpec { delay: 1, power: 0.15 }],
            )),
            _ => None,
        }
    }

    /// Loads a profile from a JSON document.
    pub fn from_json_file(path: &Path) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        Ok(model)
    }

    /// Resolves a name to a builtin profile or, failing that, a JSON file
    /// path.
    pub fn resolve(name_or_path: &str) -> Result<Self, ChannelError> {
        if let Some(m) = Self::builtin(name_or_path) {
            return Ok(m);
        }
        let p = Path::new(name_or_path);
        if p.exists() {
            return Self::from_json_file(p);
        }
        Err(ChannelError::InvalidModel(format!(
            "unknown channel '{name_or_path}' (not a builtin, not a file)"
        )))
    }

    /// Checks model invariants against a frame geometry: TDL taps present,
    /// powers positive and summing to 1 when `normalize_power`, delays
    /// within the cyclic prefix.
    pub fn validate(&self, cfg: &FrameConfig) -> Result<(), ChannelError> {
        if self.kind != ChannelKind::TappedDelayLine {
            return Ok(());
        }
        if self.taps.is_empty() {
            return Err(ChannelError::InvalidModel(format!("TDL '{}' has no taps", self.name)));
        }
        let mut total = 0.0;
        for t in &self.taps {
            if t.power <= 0.0 {
                return Err(ChannelError::InvalidModel(format!(
                    "tap at delay {} has non-positive power",
                    t.delay
                )));
            }
            if t.delay >= cfg.cp_len {
                return Err(ChannelError::InvalidModel(format!(
                    "tap delay {} exceeds cyclic prefix {}",
                    t.delay, cfg.cp_len
                )));
            }
            total += t.power;
        }
        if self.normalize_power && (total - 1.0).abs() > 1e-9 {
            return Err(ChannelError::InvalidModel(format!(
                "tap powers sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// One drawn channel: per-active-subcarrier gains, plus the generating tap
/// draw for TDL models.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub h: Vec<Cplx<T>>,
    pub source_taps: Option<Vec<(usize, Cplx<T>)>>,
}

/// Operating noise level; `n0` is the per-subcarrier complex noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub n0: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self { snr_db, n0: snr_to_n0(snr_db) }
    }

    /// Exactly zero noise (the noiseless limit, not +inf dB rounding).
    pub fn noiseless() -> Self {
        Self { snr_db: f64::INFINITY, n0: 0.0 }
    }
}

/// Per-subcarrier noise variance under the unit-symbol-energy convention.
pub fn snr_to_n0(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Draws one channel realization.
///
/// `Ideal` is the all-ones channel; `FlatRayleigh` draws a single CN(0,1)
/// scalar and replicates it; `TappedDelayLine` draws each tap gain as
/// CN(0, power) and evaluates the DFT at the active bins.
pub fn draw_channel<T: Real>(
    model: &ChannelModel,
    cfg: &FrameConfig,
    rng: &mut RngStream,
) -> Result<ChannelRealization<T>, ChannelError> {
    let k_on = cfg.active_count();
    match model.kind {
        ChannelKind::Ideal => Ok(ChannelRealization {
            h: vec![Cplx::new(T::one(), T::zero()); k_on],
            source_taps: None,
        }),
        ChannelKind::FlatRayleigh => {
            let (a, b) = gaussian_pair::<T>(rng);
            let scale = T::of(0.5f64.sqrt());
            let h = Cplx::new(a * scale, b * scale);
            Ok(ChannelRealization { h: vec![h; k_on], source_taps: None })
        }
        ChannelKind::TappedDelayLine => {
            model.validate(cfg)?;
            let total: f64 = self_power_sum(model);
            let mut taps = Vec::with_capacity(model.taps.len());
            for t in &model.taps {
                let power = if model.normalize_power { t.power / total } else { t.power };
                let sigma = T::of((power / 2.0).sqrt());
                let (a, b) = gaussian_pair::<T>(rng);
                taps.push((t.delay, Cplx::new(a * sigma, b * sigma)));
            }
            let h = taps_to_freq(&taps, &cfg.active_indices, cfg.fft_size)?;
            Ok(ChannelRealization { h, source_taps: Some(taps) })
        }
    }
}

fn self_power_sum(model: &ChannelModel) -> f64 {
    model.taps.iter().map(|t| t.power).sum()
}

/// Applies the channel and adds complex Gaussian noise of variance `n0`
/// (split equally between real and imaginary parts).
pub fn apply_channel<T: Real>(
    x: &[Cplx<T>],
    h: &ChannelRealization<T>,
    noise: &NoiseSpec,
    rng: &mut RngStream,
) -> Result<Vec<Cplx<T>>, ChannelError> {
    if x.len() != h.h.len() {
        return Err(ChannelError::LengthMismatch { expected: h.h.len(), got: x.len() });
    }
    let sigma = T::of((noise.n0 / 2.0).sqrt());
    let mut y = Vec::with_capacity(x.len());
    for (xv, hv) in x.iter().zip(&h.h) {
        let (a, b) = gaussian_pair::<T>(rng);
        y.push(hv * xv + Cplx::new(a * sigma, b * sigma));
    }
    Ok(y)
}

/// Analytic frequency correlation of a TDL profile:
/// `R[a,b] = Σ_l p_l · exp(−j2π(k_a−k_b)·d_l / N)`. Used as the test oracle
/// for empirical autocorrelation estimates.
pub fn analytic_tdl_correlation<T: Real>(
    model: &ChannelModel,
    cfg: &FrameConfig,
) -> Result<crate::numerics::CplxMatrix<T>, ChannelError> {
    if model.kind != ChannelKind::TappedDelayLine {
        return Err(ChannelError::InvalidModel("analytic correlation needs a TDL model".into()));
    }
    model.validate(cfg)?;
    let total = self_power_sum(model);
    let k_on = cfg.active_count();
    let mut r = crate::numerics::CplxMatrix::<T>::zeros(k_on, k_on);
    for a in 0..k_on {
        for b in 0..k_on {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for t in &model.taps {
                let p = if model.normalize_power { t.power / total } else { t.power };
                let dk = cfg.active_indices[a] as f64 - cfg.active_indices[b] as f64;
                let phase = -2.0 * std::f64::consts::PI * dk * t.delay as f64 / cfg.fft_size as f64;
                acc += Cplx::from_polar(T::of(p), T::of(phase));
            }
            r[(a, b)] = acc;
        }
    }
    Ok(r)
}
