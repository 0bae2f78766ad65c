//! Training-SNR and word-length sweeps.

use std::path::PathBuf;

use rayon::prelude::*;

use super::dataset::generate_dataset;
use super::{ensure_out_dir, miss, run_train, write_sidecar, HarnessError, RunConfig};
use crate::channel::{NoiseSpec, SnrSpec};
use crate::dnn::{load_model, DnnModel};
use crate::estimators::{ls_estimate, lsdnn_estimate, nmse};
use crate::quant::{wl_sweep, NumericFormat, WlRow};
use crate::sim::{simulate_frame, FrameContext, PURPOSE_EVAL};

/// One row of the training-SNR matrix: the model trained at `label`
/// evaluated across the shared test grid.
#[derive(Debug, Clone)]
pub struct TrainSnrRow {
    pub label: String,
    /// `None` for the mixture row.
    pub train_snr_db: Option<f64>,
    pub nmse: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainSnrSweep {
    pub test_snrs: Vec<f64>,
    pub rows: Vec<TrainSnrRow>,
}

impl TrainSnrSweep {
    /// Row label with the lowest average NMSE over the test grid.
    pub fn argmin_mean(&self) -> Option<&TrainSnrRow> {
        self.rows.iter().min_by(|a, b| {
            let ma = a.nmse.iter().sum::<f64>() / a.nmse.len() as f64;
            let mb = b.nmse.iter().sum::<f64>() / b.nmse.len() as f64;
            ma.partial_cmp(&mb).unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// Mean LSDNN NMSE of one model per test SNR point over shared eval frames.
fn eval_model_nmse(
    cfg: &RunConfig,
    ctx: &FrameContext<f64>,
    model: &DnnModel<f64>,
    test_snrs: &[f64],
) -> Result<Vec<f64>, HarnessError> {
    let mut out = Vec::with_capacity(test_snrs.len());
    for (snr_idx, &snr_db) in test_snrs.iter().enumerate() {
        let noise = NoiseSpec::from_snr_db(snr_db);
        let sum: f64 = (0..cfg.frames)
            .into_par_iter()
            .map(|frame_idx| -> Result<f64, HarnessError> {
                let frame =
                    simulate_frame(ctx, &noise, cfg.seed, PURPOSE_EVAL, snr_idx, frame_idx)?;
                let ls = ls_estimate(&frame.y_preamble, &ctx.preamble)?;
                let h = lsdnn_estimate(&ls, model)?;
                Ok(nmse(&h, &frame.h.h)?)
            })
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .sum();
        out.push(sum / cfg.frames as f64);
    }
    Ok(out)
}

fn train_at(cfg: &RunConfig, spec: SnrSpec) -> Result<DnnModel<f64>, HarnessError> {
    let mut dcfg = cfg.clone();
    dcfg.train_snr_db = spec;
    let ds = generate_dataset(&dcfg)?;
    Ok(run_train(&dcfg, &ds)?.model)
}

/// Trains one model per configured training SNR (plus the optional mixture
/// range) and evaluates each across the test grid. All models share the
/// dataset generator streams and the evaluation frames, so rows differ only
/// in training SNR.
pub fn sweep_train_snr(cfg: &RunConfig) -> Result<TrainSnrSweep, HarnessError> {
    if cfg.train_snrs.is_empty() && cfg.mixture.is_none() {
        return Err(HarnessError::Config("train_snrs is empty".into()));
    }
    let test_snrs = cfg.snr_db.points()?;
    let ctx = cfg.frame_context()?;
    let mut rows = Vec::new();
    for &tsnr in &cfg.train_snrs {
        let model = train_at(cfg, SnrSpec::Single(tsnr))?;
        let row = eval_model_nmse(cfg, &ctx, &model, &test_snrs)?;
        rows.push(TrainSnrRow { label: format!("{tsnr}"), train_snr_db: Some(tsnr), nmse: row });
    }
    if let Some((lo, hi)) = cfg.mixture {
        let model = train_at(cfg, SnrSpec::Range { lo, hi })?;
        let row = eval_model_nmse(cfg, &ctx, &model, &test_snrs)?;
        rows.push(TrainSnrRow { label: format!("mix{lo}..{hi}"), train_snr_db: None, nmse: row });
    }
    Ok(TrainSnrSweep { test_snrs, rows })
}

/// Writes the sweep matrix as CSV (`train_snr_db` column plus one `nmse@snr`
/// column per test point) with a sidecar.
pub fn write_train_snr_sweep(
    sweep: &TrainSnrSweep,
    cfg: &RunConfig,
) -> Result<PathBuf, HarnessError> {
    ensure_out_dir(cfg)?;
    let path = cfg.out_dir.join("sweep_train_snr.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| miss(&path, e))?;
    let mut header = vec!["train_snr_db".to_string()];
    header.extend(sweep.test_snrs.iter().map(|s| format!("nmse@{s}")));
    w.write_record(&header).map_err(|e| miss(&path, e))?;
    for row in &sweep.rows {
        let mut rec = vec![row.label.clone()];
        rec.extend(row.nmse.iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(|e| miss(&path, e))?;
    }
    w.flush().map_err(|e| miss(&path, e))?;
    write_sidecar(&path, "sweep-train-snr", None, cfg)?;
    Ok(path)
}

/// Evaluates the configured formats at every SNR point over shared frames.
/// Returns `(snr_db, row)` pairs in grid-then-format order.
pub fn sweep_wl(cfg: &RunConfig) -> Result<Vec<(f64, WlRow)>, HarnessError> {
    cfg.validate()?;
    let formats: Vec<NumericFormat> = cfg
        .formats
        .iter()
        .map(|s| s.parse::<NumericFormat>())
        .collect::<Result<_, _>>()
        .map_err(HarnessError::from)?;
    if formats.is_empty() {
        return Err(HarnessError::Config("formats list is empty".into()));
    }
    let path = cfg
        .model
        .as_deref()
        .ok_or_else(|| HarnessError::Config("sweep-wl requires a model file".into()))?;
    let model: DnnModel<f64> = load_model(path)?;
    let ctx = cfg.frame_context()?;
    let snrs = cfg.snr_db.points()?;

    let mut out = Vec::with_capacity(snrs.len() * formats.len());
    for (snr_idx, &snr_db) in snrs.iter().enumerate() {
        let noise = NoiseSpec::from_snr_db(snr_db);
        let frames = (0..cfg.frames)
            .into_par_iter()
            .map(|frame_idx| {
                simulate_frame(&ctx, &noise, cfg.seed, PURPOSE_EVAL, snr_idx, frame_idx)
                    .map_err(HarnessError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows = wl_sweep(&model, &frames, &ctx.cfg, &ctx.preamble, &ctx.scheme, &formats)?;
        out.extend(rows.into_iter().map(|r| (snr_db, r)));
    }
    Ok(out)
}

#[derive(serde::Serialize)]
struct WlCsvRow<'a> {
    snr_db: f64,
    format: &'a str,
    nmse_mean: f64,
    nmse_stderr: f64,
    ber: f64,
    bits_total: u64,
}

pub fn write_wl_sweep(rows: &[(f64, WlRow)], cfg: &RunConfig) -> Result<PathBuf, HarnessError> {
    ensure_out_dir(cfg)?;
    let path = cfg.out_dir.join("sweep_wl.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| miss(&path, e))?;
    for (snr_db, row) in rows {
        w.serialize(WlCsvRow {
            snr_db: *snr_db,
            format: &row.format,
            nmse_mean: row.nmse_mean,
            nmse_stderr: row.nmse_stderr,
            ber: row.ber,
            bits_total: row.bits_total,
        })
        .map_err(|e| miss(&path, e))?;
    }
    w.flush().map_err(|e| miss(&path, e))?;
    write_sidecar(&path, "sweep-wl", None, cfg)?;
    Ok(path)
}
