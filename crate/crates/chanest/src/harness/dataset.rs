//! Dataset generation and CSV persistence.
//!
//! Each row pairs a noisy least-squares preamble estimate with the true
//! channel it came from, both stacked `[re; im]`, plus the SNR the frame was
//! synthesized at. On disk that is one CSV with `4*K_on + 1` columns
//! (`snr_db`, `2*K_on` inputs, `2*K_on` targets) and a JSON manifest holding
//! the provenance.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_out_dir, miss, HarnessError, RunConfig};
use crate::channel::{NoiseSpec, SnrSpec};
use crate::dnn::{Dataset, DatasetMeta};
use crate::estimators::{ls_estimate, stack_complex};
use crate::phy::FrameConfig;
use crate::sim::{sample_snr, simulate_frame, PURPOSE_DATASET};

/// Provenance written next to the dataset CSV; doubles as the metadata
/// sidecar for reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub rows: usize,
    pub snr: SnrSpec,
    pub channel: String,
    pub seed: u64,
    pub frame: FrameConfig,
    pub config: RunConfig,
}

/// Synthesizes the configured number of dataset rows in memory.
pub fn generate_dataset(cfg: &RunConfig) -> Result<Dataset<f64>, HarnessError> {
    cfg.validate()?;
    if cfg.dataset_rows < 2 {
        return Err(HarnessError::Config("dataset_rows must be >= 2".into()));
    }
    let ctx = cfg.frame_context()?;
    let k_on = ctx.cfg.active_count();
    let spec = cfg.train_snr_db;

    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..cfg.dataset_rows)
        .into_par_iter()
        .map(|m| -> Result<(Vec<f64>, Vec<f64>, f64), HarnessError> {
            let snr_db = sample_snr(&spec, cfg.seed, PURPOSE_DATASET, m);
            let noise = NoiseSpec::from_snr_db(snr_db);
            let frame = simulate_frame(&ctx, &noise, cfg.seed, PURPOSE_DATASET, 0, m)?;
            let ls = ls_estimate(&frame.y_preamble, &ctx.preamble)?;
            Ok((stack_complex(&ls.h_hat), stack_complex(&frame.h.h), snr_db))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut inputs = Vec::with_capacity(cfg.dataset_rows * 2 * k_on);
    let mut targets = Vec::with_capacity(cfg.dataset_rows * 2 * k_on);
    let mut snr_db = Vec::with_capacity(cfg.dataset_rows);
    for (x, t, s) in rows {
        inputs.extend(x);
        targets.extend(t);
        snr_db.push(s);
    }
    Ok(Dataset {
        dim_in: 2 * k_on,
        dim_out: 2 * k_on,
        inputs,
        targets,
        snr_db,
        meta: DatasetMeta {
            snr: spec,
            channel_model: ctx.channel.name.clone(),
            rows: cfg.dataset_rows,
            seed: cfg.seed,
        },
    })
}

fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Writes the dataset CSV and its manifest; returns `(csv, manifest)` paths.
pub fn write_dataset(
    ds: &Dataset<f64>,
    cfg: &RunConfig,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    ensure_out_dir(cfg)?;
    let csv_path = cfg.out_dir.join("dataset.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| miss(&csv_path, e))?;

    let k_on = ds.dim_in / 2;
    let mut header = Vec::with_capacity(1 + 2 * ds.dim_in);
    header.push("snr_db".to_string());
    for part in ["ls_re", "ls_im"] {
        header.extend((0..k_on).map(|k| format!("{part}_{k}")));
    }
    for part in ["h_re", "h_im"] {
        header.extend((0..k_on).map(|k| format!("{part}_{k}")));
    }
    w.write_record(&header).map_err(|e| miss(&csv_path, e))?;

    let mut record = Vec::with_capacity(header.len());
    for r in 0..ds.rows() {
        record.clear();
        record.push(format!("{}", ds.snr_db[r]));
        record.extend(ds.input_row(r).iter().map(|v| format!("{v}")));
        record.extend(ds.target_row(r).iter().map(|v| format!("{v}")));
        w.write_record(&record).map_err(|e| miss(&csv_path, e))?;
    }
    w.flush().map_err(|e| miss(&csv_path, e))?;

    let manifest = DatasetManifest {
        rows: ds.rows(),
        snr: ds.meta.snr,
        channel: ds.meta.channel_model.clone(),
        seed: ds.meta.seed,
        frame: crate::phy::build_default_frame(),
        config: cfg.clone(),
    };
    let mpath = manifest_path(&csv_path);
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Config(e.to_string()))?;
    std::fs::write(&mpath, text + "\n").map_err(|e| miss(&mpath, e))?;
    Ok((csv_path, mpath))
}

/// Reads a dataset CSV back; provenance comes from the sibling manifest when
/// present, otherwise placeholder metadata is attached.
pub fn read_dataset(csv_path: &Path) -> Result<Dataset<f64>, HarnessError> {
    let mut r = csv::Reader::from_path(csv_path).map_err(|e| miss(csv_path, e))?;
    let width = r.headers().map_err(|e| miss(csv_path, e))?.len();
    if width < 5 || (width - 1) % 4 != 0 {
        return Err(miss(csv_path, format!("{width} columns do not fit 4*K_on + 1")));
    }
    let dim = (width - 1) / 2;

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut snr_db = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| miss(csv_path, e))?;
        if record.len() != width {
            return Err(miss(
                csv_path,
                format!("row {} has {} columns", snr_db.len(), record.len()),
            ));
        }
        let parse = |i: usize| -> Result<f64, HarnessError> {
            record[i].parse::<f64>().map_err(|e| miss(csv_path, format!("column {i}: {e}")))
        };
        snr_db.push(parse(0)?);
        for i in 0..dim {
            inputs.push(parse(1 + i)?);
        }
        for i in 0..dim {
            targets.push(parse(1 + dim + i)?);
        }
    }
    if snr_db.len() < 2 {
        return Err(miss(csv_path, "dataset has fewer than 2 rows"));
    }

    let meta = match std::fs::read_to_string(manifest_path(csv_path)) {
        Ok(text) => {
            let m: DatasetManifest =
                serde_json::from_str(&text).map_err(|e| miss(&manifest_path(csv_path), e))?;
            DatasetMeta { snr: m.snr, channel_model: m.channel, rows: m.rows, seed: m.seed }
        }
        Err(_) => DatasetMeta {
            snr: SnrSpec::Single(snr_db[0]),
            channel_model: "unknown".into(),
            rows: snr_db.len(),
            ..DatasetMeta::default()
        },
    };
    let ds = Dataset { dim_in: dim, dim_out: dim, inputs, targets, snr_db, meta };
    ds.validate()?;
    Ok(ds)
}
