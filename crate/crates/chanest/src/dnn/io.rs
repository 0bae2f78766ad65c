//! Model file format: a single JSON document with version tag, layer sizes,
//! row-major weights, biases, both normalization stats, and metadata.
//!
//! Numbers are written with serde_json's shortest round-trip decimal
//! representation, so save→load is value-exact for `f64` (and for `f32`
//! models, which widen losslessly on save and round back exactly on load).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DenseLayer, DnnError, DnnModel, ModelMeta, NormStats};
use crate::real::Real;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    layer_sizes: Vec<usize>,
    layers: Vec<LayerFile>,
    norm_in: StatsFile,
    norm_out: StatsFile,
    meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StatsFile {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

/// Writes the model as pretty-printed JSON.
pub fn save_model<T: Real>(model: &DnnModel<T>, path: &Path) -> Result<(), DnnError> {
    model.validate_shapes()?;
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        layer_sizes: model.layer_sizes.clone(),
        layers: model
            .layers
            .iter()
            .map(|l| LayerFile {
                weights: l.weights.iter().map(|w| w.as_f64()).collect(),
                bias: l.bias.iter().map(|b| b.as_f64()).collect(),
            })
            .collect(),
        norm_in: stats_out(&model.norm_in),
        norm_out: stats_out(&model.norm_out),
        meta: model.meta.clone(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| DnnError::CorruptFile(format!("serialize: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn stats_out<T: Real>(s: &NormStats<T>) -> StatsFile {
    StatsFile {
        mu: s.mu.iter().map(|v| v.as_f64()).collect(),
        sigma: s.sigma.iter().map(|v| v.as_f64()).collect(),
    }
}

fn stats_in<T: Real>(s: StatsFile) -> NormStats<T> {
    NormStats {
        mu: s.mu.into_iter().map(T::of).collect(),
        sigma: s.sigma.into_iter().map(T::of).collect(),
    }
}

/// Reads and validates a model file.
pub fn load_model<T: Real>(path: &Path) -> Result<DnnModel<T>, DnnError> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| DnnError::CorruptFile(format!("{}: {e}", path.display())))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DnnError::CorruptFile(format!("{}: no format_version", path.display())))?;
    if found as u32 != FORMAT_VERSION {
        return Err(DnnError::FormatVersionMismatch {
            expected: FORMAT_VERSION,
            found: found as u32,
        });
    }
    let file: ModelFile = serde_json::from_value(value)
        .map_err(|e| DnnError::CorruptFile(format!("{}: {e}", path.display())))?;

    let mut layers = Vec::with_capacity(file.layers.len());
    for (l, lf) in file.layers.iter().enumerate() {
        let in_dim = *file
            .layer_sizes
            .get(l)
            .ok_or_else(|| DnnError::ShapeInconsistency(format!("no size for layer {l}")))?;
        let out_dim = *file
            .layer_sizes
            .get(l + 1)
            .ok_or_else(|| DnnError::ShapeInconsistency(format!("no size after layer {l}")))?;
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            weights: lf.weights.iter().copied().map(T::of).collect(),
            bias: lf.bias.iter().copied().map(T::of).collect(),
        });
    }
    let model = DnnModel {
        layer_sizes: file.layer_sizes,
        layers,
        norm_in: stats_in(file.norm_in),
        norm_out: stats_in(file.norm_out),
        meta: file.meta,
    };
    model.validate_shapes()?;
    for s in model.norm_in.sigma.iter().chain(&model.norm_out.sigma) {
        if !(*s > T::zero()) {
            return Err(DnnError::CorruptFile(format!(
                "{}: non-positive normalization sigma",
                path.display()
            )));
        }
    }
    Ok(model)
}
