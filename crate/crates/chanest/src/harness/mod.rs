//! Run orchestration: resolved configuration, Monte Carlo evaluation over an
//! SNR grid, training entry points, and report writing.
//!
//! Everything here works on `f64`; the generic core stays underneath. All
//! randomness flows through the per-frame stream scheme in [`crate::sim`],
//! so results are independent of worker count and reruns are byte-identical.

pub mod dataset;
pub mod registry;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelModel, NoiseSpec, SnrSpec};
use crate::dnn::{load_model, DnnError, DnnModel, TrainConfig};
use crate::estimators::{
    estimate_rh, lmmse_filter, ls_estimate, lsdnn_estimate, nmse, EstimatorError, LmmseParams,
};
use crate::numerics::{CplxMatrix, NumericsError, RngStream};
use crate::phy::{
    bit_errors, build_default_frame, build_preamble, demap, equalize_or_zero, ModScheme, Modulation,
    PhyError,
};
use crate::quant::{quantized_ls, NumericFormat, QuantError, QuantPolicy, QuantizedModel};
use crate::sim::{
    simulate_frame, stream_id, FrameContext, SimError, SimFrame, PURPOSE_EVAL, PURPOSE_RH,
};

/// Harness failures, grouped by the process exit code they map to:
/// configuration problems (2), missing or unreadable artifacts (3), and
/// numerical failures (4).
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    Missing(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Missing(_) => 3,
            HarnessError::Numerical(_) => 4,
        }
    }
}

impl From<PhyError> for HarnessError {
    fn from(e: PhyError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<ChannelError> for HarnessError {
    fn from(e: ChannelError) -> Self {
        match &e {
            ChannelError::Io(_) => HarnessError::Missing(e.to_string()),
            ChannelError::Numerics(_) => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<DnnError> for HarnessError {
    fn from(e: DnnError) -> Self {
        match &e {
            DnnError::Io(_) | DnnError::CorruptFile(_) | DnnError::FormatVersionMismatch { .. } => {
                HarnessError::Missing(e.to_string())
            }
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<EstimatorError> for HarnessError {
    fn from(e: EstimatorError) -> Self {
        match &e {
            EstimatorError::Numerics(_) => HarnessError::Numerical(e.to_string()),
            EstimatorError::Dnn(
                DnnError::Io(_) | DnnError::CorruptFile(_) | DnnError::FormatVersionMismatch { .. },
            ) => HarnessError::Missing(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Phy(p) => p.into(),
            SimError::Channel(c) => c.into(),
        }
    }
}

impl From<QuantError> for HarnessError {
    fn from(e: QuantError) -> Self {
        match e {
            QuantError::Estimator(inner) => inner.into(),
            QuantError::Phy(inner) => inner.into(),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

impl From<NumericsError> for HarnessError {
    fn from(e: NumericsError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

/// I/O helper: wrap a filesystem error with the path it concerns.
pub(crate) fn miss(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Missing(format!("{}: {e}", path.display()))
}

/// An SNR grid: explicit points or an inclusive start/stop/step range in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    Points(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl SnrGrid {
    pub fn points(&self) -> Result<Vec<f64>, HarnessError> {
        match self {
            SnrGrid::Points(p) => {
                if p.is_empty() {
                    return Err(HarnessError::Config("snr grid is empty".into()));
                }
                Ok(p.clone())
            }
            SnrGrid::Range { start, stop, step } => {
                if !(*step > 0.0) {
                    return Err(HarnessError::Config(format!("snr step must be > 0, got {step}")));
                }
                if stop < start {
                    return Err(HarnessError::Config(format!(
                        "snr range stop {stop} < start {start}"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|i| start + *step * i as f64).collect())
            }
        }
    }
}

impl Default for SnrGrid {
    fn default() -> Self {
        SnrGrid::Points(vec![0.0, 5.0, 10.0, 15.0, 20.0])
    }
}

/// The estimators the evaluation loop can run. `Ideal` equalizes with the
/// true channel and serves as the BER floor reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Ls,
    Lmmse,
    Lsdnn,
    Ideal,
}

impl FromStr for EstimatorKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(Self::Ls),
            "lmmse" => Ok(Self::Lmmse),
            "lsdnn" => Ok(Self::Lsdnn),
            "ideal" => Ok(Self::Ideal),
            other => Err(HarnessError::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ls => "ls",
            Self::Lmmse => "lmmse",
            Self::Lsdnn => "lsdnn",
            Self::Ideal => "ideal",
        })
    }
}

/// One run's complete configuration. A JSON config file mirrors these field
/// names exactly; command-line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Channel name (builtin) or path to a channel JSON file.
    pub channel: String,
    /// Evaluation SNR grid in dB.
    pub snr_db: SnrGrid,
    /// Monte Carlo frames per SNR point.
    pub frames: usize,
    /// Master seed; every stream in the run derives from it.
    pub seed: u64,
    /// Estimators to evaluate: subset of ls, lmmse, lsdnn, ideal.
    pub estimators: Vec<String>,
    /// Data modulation: bpsk, qpsk, or qam16.
    pub modulation: String,
    /// Data OFDM symbols per frame.
    pub data_symbols: usize,
    /// Pilot signs in pilot-bin order.
    pub pilot_values: Vec<i8>,
    /// Trained model file for the lsdnn estimator.
    pub model: Option<PathBuf>,
    /// LMMSE prior source: a channel name to sample, or a saved matrix JSON.
    /// Defaults to the run channel.
    pub rh_source: Option<String>,
    /// Draws used when the LMMSE prior is sampled from a channel model.
    pub rh_draws: usize,
    /// Numeric format emulated on the ls/lsdnn estimator datapath
    /// (lmmse and ideal always run in native f64).
    pub quant: Option<NumericFormat>,
    /// Training hyperparameters; the `seed` field inside is ignored in favor
    /// of the run seed.
    pub train: TrainConfig,
    /// Dataset CSV consumed by the train command.
    pub dataset: Option<PathBuf>,
    /// Rows generated by the gen-dataset command.
    pub dataset_rows: usize,
    /// SNR at which dataset frames are synthesized.
    pub train_snr_db: SnrSpec,
    /// Network architecture: lsdnn1 or lsdnn2.
    pub arch: String,
    /// Training SNRs swept by sweep-train-snr.
    pub train_snrs: Vec<f64>,
    /// Optional (lo, hi) mixture-SNR training row for the sweep.
    pub mixture: Option<(f64, f64)>,
    /// Numeric formats swept by sweep-wl.
    pub formats: Vec<String>,
    /// Output directory for reports and artifacts.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            channel: "flat".into(),
            snr_db: SnrGrid::default(),
            frames: 1000,
            seed: 0,
            estimators: vec!["ls".into()],
            modulation: "qpsk".into(),
            data_symbols: 1,
            pilot_values: vec![1, 1, 1, -1],
            model: None,
            rh_source: None,
            rh_draws: 50_000,
            quant: None,
            train: TrainConfig::default(),
            dataset: None,
            dataset_rows: 30_000,
            train_snr_db: SnrSpec::Single(10.0),
            arch: "lsdnn1".into(),
            train_snrs: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
            mixture: None,
            formats: vec!["fp64".into()],
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parses a JSON config document; unknown fields are rejected.
    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.frames == 0 {
            return Err(HarnessError::Config("frames must be >= 1".into()));
        }
        if self.data_symbols == 0 {
            return Err(HarnessError::Config("data_symbols must be >= 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::Config("estimator list is empty".into()));
        }
        self.snr_db.points()?;
        self.parsed_estimators()?;
        Modulation::from_str(&self.modulation)?;
        Ok(())
    }

    pub fn parsed_estimators(&self) -> Result<Vec<EstimatorKind>, HarnessError> {
        let kinds: Vec<EstimatorKind> =
            self.estimators.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        Ok(kinds)
    }

    /// Builds the frame context shared by every frame of the run.
    pub fn frame_context(&self) -> Result<FrameContext<f64>, HarnessError> {
        let cfg = build_default_frame();
        let preamble = build_preamble(&cfg, None)?;
        let modulation = Modulation::from_str(&self.modulation)?;
        let channel = ChannelModel::resolve(&self.channel)?;
        channel.validate(&cfg)?;
        if self.pilot_values.len() != cfg.pilot_count() {
            return Err(HarnessError::Config(format!(
                "{} pilot values for {} pilot bins",
                self.pilot_values.len(),
                cfg.pilot_count()
            )));
        }
        Ok(FrameContext {
            cfg,
            preamble,
            scheme: ModScheme::new(modulation),
            pilot_values: self.pilot_values.clone(),
            channel,
            data_symbols: self.data_symbols,
        })
    }
}

/// One SNR point of an evaluation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub snr_db: f64,
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub ber: f64,
    pub bits_total: u64,
}

/// Per-estimator evaluation results plus the metadata needed to rerun them.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub estimator: EstimatorKind,
    pub model_id: Option<String>,
    pub quant: Option<NumericFormat>,
    pub seed: u64,
    pub frames: usize,
    pub rows: Vec<EvalRow>,
}

/// Loads the LMMSE prior: a saved matrix file, or the autocorrelation of a
/// (possibly different) channel model sampled with `rh_draws` draws on the
/// run's dedicated prior stream.
pub fn resolve_rh(cfg: &RunConfig) -> Result<CplxMatrix<f64>, HarnessError> {
    let frame = build_default_frame();
    let source = cfg.rh_source.as_deref().unwrap_or(&cfg.channel);
    if let Ok(model) = ChannelModel::resolve(source) {
        let mut rng = RngStream::new(cfg.seed, stream_id(PURPOSE_RH, 0, 0, 0));
        return Ok(estimate_rh(&model, &frame, cfg.rh_draws, &mut rng)?);
    }
    let path = Path::new(source);
    if path.exists() {
        return load_rh_matrix(path);
    }
    Err(HarnessError::Missing(format!(
        "rh source '{source}' is neither a channel model nor a matrix file"
    )))
}

#[derive(Serialize, Deserialize)]
struct RhFile {
    k_on: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Saves an autocorrelation matrix as row-major JSON.
pub fn save_rh_matrix(r: &CplxMatrix<f64>, path: &Path) -> Result<(), HarnessError> {
    let n = r.rows();
    let mut re = Vec::with_capacity(n * n);
    let mut im = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            re.push(r[(i, j)].re);
            im.push(r[(i, j)].im);
        }
    }
    let text = serde_json::to_string(&RhFile { k_on: n, re, im })
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| miss(path, e))
}

pub fn load_rh_matrix(path: &Path) -> Result<CplxMatrix<f64>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| miss(path, e))?;
    let file: RhFile = serde_json::from_str(&text).map_err(|e| miss(path, e))?;
    let n = file.k_on;
    if file.re.len() != n * n || file.im.len() != n * n {
        return Err(miss(path, format!("matrix arrays do not match k_on = {n}")));
    }
    let mut r = CplxMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = crate::C64::new(file.re[i * n + j], file.im[i * n + j]);
        }
    }
    Ok(r)
}

/// Per-frame tallies of one estimator.
#[derive(Debug, Clone, Copy, Default)]
struct FrameTally {
    nmse: f64,
    errors: u64,
    bits: u64,
}

/// Everything resolved once per run for the evaluation loop.
struct EvalSetup {
    ctx: FrameContext<f64>,
    kinds: Vec<EstimatorKind>,
    model: Option<DnnModel<f64>>,
    qmodel: Option<QuantizedModel<f64>>,
    quant: Option<NumericFormat>,
    r_h: Option<CplxMatrix<f64>>,
}

impl EvalSetup {
    fn build(cfg: &RunConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let ctx = cfg.frame_context()?;
        let kinds = cfg.parsed_estimators()?;
        let model = if kinds.contains(&EstimatorKind::Lsdnn) {
            let path = cfg.model.as_deref().ok_or_else(|| {
                HarnessError::Config("lsdnn estimator requires a model file".into())
            })?;
            let m: DnnModel<f64> = load_model(path)?;
            if m.input_dim() != 2 * ctx.cfg.active_count() {
                return Err(HarnessError::Config(format!(
                    "model input width {} does not match 2*K_on = {}",
                    m.input_dim(),
                    2 * ctx.cfg.active_count()
                )));
            }
            Some(m)
        } else {
            None
        };
        let qmodel = match (&model, cfg.quant) {
            (Some(m), Some(fmt)) => Some(QuantizedModel::new(m, QuantPolicy::uniform(fmt))),
            _ => None,
        };
        let r_h = if kinds.contains(&EstimatorKind::Lmmse) { Some(resolve_rh(cfg)?) } else { None };
        Ok(Self { ctx, kinds, model, qmodel, quant: cfg.quant, r_h })
    }
}

/// Runs the Monte Carlo evaluation: for every SNR point, all requested
/// estimators see the same synthesized frames, so comparisons are paired.
pub fn run_eval(cfg: &RunConfig) -> Result<Vec<EvalReport>, HarnessError> {
    let setup = EvalSetup::build(cfg)?;
    let snrs = cfg.snr_db.points()?;
    let n_est = setup.kinds.len();
    let mut per_est_rows: Vec<Vec<EvalRow>> = vec![Vec::with_capacity(snrs.len()); n_est];

    for (snr_idx, &snr_db) in snrs.iter().enumerate() {
        let noise = NoiseSpec::from_snr_db(snr_db);
        // The LMMSE smoothing matrix depends only on (prior, n0): build once.
        let filter = match &setup.r_h {
            Some(r) => {
                let p = LmmseParams::new(
                    r.clone(),
                    noise.n0,
                    setup.ctx.preamble.per_symbol_energy,
                    setup.ctx.cfg.fft_size,
                )?;
                Some(lmmse_filter(&p)?)
            }
            None => None,
        };

        let tallies: Vec<Vec<FrameTally>> = (0..cfg.frames)
            .into_par_iter()
            .map(|frame_idx| -> Result<Vec<FrameTally>, HarnessError> {
                let frame =
                    simulate_frame(&setup.ctx, &noise, cfg.seed, PURPOSE_EVAL, snr_idx, frame_idx)?;
                eval_one_frame(&setup, filter.as_ref(), &frame)
            })
            .collect::<Result<Vec<_>, _>>()?;

        // Frame-ordered reduction keeps sums byte-identical across workers.
        for (e, rows) in per_est_rows.iter_mut().enumerate() {
            let mut sum = 0.0f64;
            let mut sumsq = 0.0f64;
            let mut errors = 0u64;
            let mut bits = 0u64;
            for t in &tallies {
                sum += t[e].nmse;
                sumsq += t[e].nmse * t[e].nmse;
                errors += t[e].errors;
                bits += t[e].bits;
            }
            let n = cfg.frames as f64;
            let mean = sum / n;
            let var = (sumsq / n - mean * mean).max(0.0);
            rows.push(EvalRow {
                snr_db,
                nmse_mean: mean,
                nmse_stderr: (var / n).sqrt(),
                ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
                bits_total: bits,
            });
        }
    }

    let model_id = setup.model.as_ref().map(|m| m.meta.arch_tag.clone());
    Ok(setup
        .kinds
        .iter()
        .zip(per_est_rows)
        .map(|(&estimator, rows)| EvalReport {
            estimator,
            model_id: if estimator == EstimatorKind::Lsdnn { model_id.clone() } else { None },
            quant: setup.quant,
            seed: cfg.seed,
            frames: cfg.frames,
            rows,
        })
        .collect())
}

/// Runs every requested estimator on one frame and tallies NMSE plus data
/// bit errors after zero-forcing equalization.
fn eval_one_frame(
    setup: &EvalSetup,
    filter: Option<&CplxMatrix<f64>>,
    frame: &SimFrame<f64>,
) -> Result<Vec<FrameTally>, HarnessError> {
    let ctx = &setup.ctx;
    // The LS estimate feeds both the ls and lsdnn paths; compute it once.
    let ls_float = ls_estimate(&frame.y_preamble, &ctx.preamble)?;
    let ls_quant = match setup.quant {
        Some(fmt) => Some(quantized_ls(&frame.y_preamble, &ctx.preamble, &fmt)?),
        None => None,
    };

    let mut out = Vec::with_capacity(setup.kinds.len());
    for kind in &setup.kinds {
        let h_hat: Vec<crate::C64> = match kind {
            EstimatorKind::Ls => ls_quant.as_ref().unwrap_or(&ls_float).h_hat.clone(),
            EstimatorKind::Lmmse => {
                let f = filter.expect("filter prepared for lmmse");
                f.mul_vec(&ls_float.h_hat)
            }
            EstimatorKind::Lsdnn => match (&setup.qmodel, &ls_quant) {
                (Some(qm), Some(lsq)) => qm.refine(&lsq.h_hat)?,
                _ => {
                    let m = setup.model.as_ref().expect("model loaded for lsdnn");
                    lsdnn_estimate(&ls_float, m)?
                }
            },
            EstimatorKind::Ideal => frame.h.h.clone(),
        };

        let e = match kind {
            // By definition zero; skips the 0/0 hazard on degenerate draws.
            EstimatorKind::Ideal => 0.0,
            _ => nmse(&h_hat, &frame.h.h)?,
        };

        let mut errors = 0u64;
        let mut bits = 0u64;
        let bits_per_sym = ctx.cfg.data_count() * ctx.scheme.bits_per_symbol;
        for (s, y) in frame.y_data.iter().enumerate() {
            // Zero-tolerant: narrow quantization can round estimate bins to
            // exactly zero, and those frames still count toward BER.
            let xeq = equalize_or_zero(y, &h_hat)?;
            let rx = demap(&xeq, &ctx.scheme, &ctx.cfg)?;
            let tx = &frame.tx_bits[s * bits_per_sym..(s + 1) * bits_per_sym];
            let (err, n) = bit_errors(tx, &rx)?;
            errors += err;
            bits += n;
        }
        out.push(FrameTally { nmse: e, errors, bits });
    }
    Ok(out)
}

/// Training results bundled with where they were written.
pub struct TrainOutcome {
    pub model: DnnModel<f64>,
    pub history: Vec<crate::dnn::EpochStats>,
}

/// Trains the configured architecture on an in-memory dataset. The training
/// seed is the run seed; `train.seed` in the config is overridden.
pub fn run_train(
    cfg: &RunConfig,
    dataset: &crate::dnn::Dataset<f64>,
) -> Result<TrainOutcome, HarnessError> {
    let variant: crate::dnn::ArchVariant = cfg.arch.parse()?;
    if dataset.dim_in % 2 != 0 {
        return Err(HarnessError::Config(format!(
            "dataset input width {} is not 2*K_on",
            dataset.dim_in
        )));
    }
    let sizes = crate::dnn::build_arch(dataset.dim_in / 2, variant);
    let mut tc = cfg.train;
    tc.seed = cfg.seed;
    let (model, history) = crate::dnn::train(dataset, &sizes, &tc)?;
    Ok(TrainOutcome { model, history })
}

/// Sidecar document written next to every CSV: the exact resolved config
/// plus the seed, so any output can be regenerated.
#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    seed: u64,
    estimator: Option<String>,
    config: &'a RunConfig,
}

pub(crate) fn write_sidecar(
    csv_path: &Path,
    command: &str,
    estimator: Option<String>,
    cfg: &RunConfig,
) -> Result<PathBuf, HarnessError> {
    let path = csv_path.with_extension("meta.json");
    let doc = Sidecar { command, seed: cfg.seed, estimator, config: cfg };
    let text =
        serde_json::to_string_pretty(&doc).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| miss(&path, e))?;
    Ok(path)
}

pub(crate) fn ensure_out_dir(cfg: &RunConfig) -> Result<(), HarnessError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| miss(&cfg.out_dir, e))
}

/// Writes one CSV per estimator (`eval_<estimator>.csv` with a `.meta.json`
/// sidecar) into the output directory; returns the CSV paths.
pub fn write_eval_reports(
    reports: &[EvalReport],
    cfg: &RunConfig,
) -> Result<Vec<PathBuf>, HarnessError> {
    ensure_out_dir(cfg)?;
    let mut paths = Vec::with_capacity(reports.len());
    for report in reports {
        let path = cfg.out_dir.join(format!("eval_{}.csv", report.estimator));
        let mut w = csv::Writer::from_path(&path).map_err(|e| miss(&path, e))?;
        for row in &report.rows {
            w.serialize(row).map_err(|e| miss(&path, e))?;
        }
        w.flush().map_err(|e| miss(&path, e))?;
        write_sidecar(&path, "eval", Some(report.estimator.to_string()), cfg)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes the trained model and its per-epoch loss history.
pub fn write_train_outputs(
    outcome: &TrainOutcome,
    cfg: &RunConfig,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    ensure_out_dir(cfg)?;
    let model_path = cfg.out_dir.join("model.json");
    crate::dnn::save_model(&outcome.model, &model_path)?;
    let history_path = cfg.out_dir.join("history.csv");
    let mut w = csv::Writer::from_path(&history_path).map_err(|e| miss(&history_path, e))?;
    for row in &outcome.history {
        w.serialize(row).map_err(|e| miss(&history_path, e))?;
    }
    w.flush().map_err(|e| miss(&history_path, e))?;
    write_sidecar(&history_path, "train", None, cfg)?;
    Ok((model_path, history_path))
}
