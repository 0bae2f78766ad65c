//! Registry of trained models, selectable by channel condition and
//! operating SNR.
//!
//! The registry is a directory of model JSON files plus an `index.json`
//! listing id, training SNR, channel, and architecture per model. Selection
//! is metadata-driven: the caller declares the channel name and operating
//! SNR, and the closest-matching stored model wins.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{miss, HarnessError};
use crate::dnn::{load_model, DnnModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub model_id: String,
    pub training_snr_db: f64,
    pub channel_model: String,
    pub arch_tag: String,
    /// Model file name relative to the registry directory.
    pub file: String,
}

#[derive(Debug, Clone)]
pub struct ModelRegistry {
    dir: PathBuf,
    entries: Vec<RegistryEntry>,
}

const INDEX_NAME: &str = "index.json";

impl ModelRegistry {
    /// Opens a registry directory, reading `index.json` when present. A
    /// nonexistent directory opens as an empty registry; it is created on
    /// the first `add`.
    pub fn open(dir: &Path) -> Result<Self, HarnessError> {
        let index = dir.join(INDEX_NAME);
        let entries = if index.exists() {
            let text = std::fs::read_to_string(&index).map_err(|e| miss(&index, e))?;
            serde_json::from_str(&text).map_err(|e| miss(&index, e))?
        } else {
            Vec::new()
        };
        Ok(Self { dir: dir.to_path_buf(), entries })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    /// Validates and copies a model file into the registry under
    /// `<model_id>.json`, then reindexes. Fails on duplicate ids.
    pub fn add(
        &mut self,
        model_id: &str,
        model_path: &Path,
    ) -> Result<RegistryEntry, HarnessError> {
        if model_id.is_empty()
            || !model_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(HarnessError::Config(format!(
                "model id '{model_id}' must be nonempty [A-Za-z0-9_-]"
            )));
        }
        if self.entries.iter().any(|e| e.model_id == model_id) {
            return Err(HarnessError::Config(format!("duplicate model id '{model_id}'")));
        }
        let model: DnnModel<f64> = load_model(model_path)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| miss(&self.dir, e))?;
        let file = format!("{model_id}.json");
        let dest = self.dir.join(&file);
        std::fs::copy(model_path, &dest).map_err(|e| miss(&dest, e))?;
        let entry = RegistryEntry {
            model_id: model_id.to_string(),
            training_snr_db: model.meta.training_snr_db,
            channel_model: model.meta.channel_model.clone(),
            arch_tag: model.meta.arch_tag.clone(),
            file,
        };
        self.entries.push(entry.clone());
        self.entries.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        self.write_index()?;
        Ok(entry)
    }

    fn write_index(&self) -> Result<(), HarnessError> {
        let index = self.dir.join(INDEX_NAME);
        let text = serde_json::to_string_pretty(&self.entries)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        std::fs::write(&index, text + "\n").map_err(|e| miss(&index, e))
    }

    /// Picks the stored model for the declared operating point: first by
    /// channel match, then by smallest |training SNR − operating SNR|, with
    /// ties broken by model id so the choice is deterministic.
    pub fn select(&self, channel: &str, snr_db: f64) -> Result<&RegistryEntry, HarnessError> {
        self.entries
            .iter()
            .min_by(|a, b| {
                let key = |e: &RegistryEntry| {
                    (e.channel_model != channel, (e.training_snr_db - snr_db).abs())
                };
                let (ma, da) = key(a);
                let (mb, db) = key(b);
                ma.cmp(&mb)
                    .then(da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal))
                    .then(a.model_id.cmp(&b.model_id))
            })
            .ok_or_else(|| HarnessError::Missing("registry has no models".into()))
    }

    /// Loads the model behind an entry.
    pub fn load(&self, entry: &RegistryEntry) -> Result<DnnModel<f64>, HarnessError> {
        Ok(load_model(&self.dir.join(&entry.file))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnn::{build_arch, save_model, ArchVariant, DnnModel, ModelMeta};
    use crate::numerics::RngStream;

    fn stub_model(dir: &Path, snr: f64, channel: &str, seed: u64) -> PathBuf {
        let mut m: DnnModel<f64> =
            DnnModel::init(&build_arch(4, ArchVariant::Lsdnn1), &mut RngStream::new(seed, 0));
        m.meta = ModelMeta {
            training_snr_db: snr,
            channel_model: channel.into(),
            arch_tag: "lsdnn1".into(),
            seed,
            ..ModelMeta::default()
        };
        let path = dir.join(format!("stub_{seed}.json"));
        save_model(&m, &path).unwrap();
        path
    }

    #[test]
    fn add_list_select_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let reg_dir = tmp.path().join("registry");
        let mut reg = ModelRegistry::open(&reg_dir).unwrap();
        assert!(reg.entries().is_empty());

        let m1 = stub_model(tmp.path(), 10.0, "flat", 1);
        let m2 = stub_model(tmp.path(), 0.0, "flat", 2);
        let m3 = stub_model(tmp.path(), 10.0, "urban-3tap", 3);
        reg.add("flat-10db", &m1).unwrap();
        reg.add("flat-0db", &m2).unwrap();
        reg.add("urban-10db", &m3).unwrap();
        assert_eq!(reg.entries().len(), 3);

        // Reopen from disk and select.
        let reg = ModelRegistry::open(&reg_dir).unwrap();
        assert_eq!(reg.select("flat", 10.0).unwrap().model_id, "flat-10db");
        assert_eq!(reg.select("flat", 2.0).unwrap().model_id, "flat-0db");
        assert_eq!(reg.select("urban-3tap", 30.0).unwrap().model_id, "urban-10db");
        // No channel match: nearest SNR wins regardless of channel.
        assert_eq!(reg.select("hilly-3tap", 1.0).unwrap().model_id, "flat-0db");

        let model = reg.load(reg.select("flat", 10.0).unwrap()).unwrap();
        assert_eq!(model.meta.training_snr_db, 10.0);
    }

    #[test]
    fn select_tie_breaks_by_id() {
        let tmp = tempfile::tempdir().unwrap();
        let mut reg = ModelRegistry::open(&tmp.path().join("r")).unwrap();
        let a = stub_model(tmp.path(), 10.0, "flat", 4);
        let b = stub_model(tmp.path(), 10.0, "flat", 5);
        reg.add("zeta", &a).unwrap();
        reg.add("alpha", &b).unwrap();
        assert_eq!(reg.select("flat", 10.0).unwrap().model_id, "alpha");
    }

    #[test]
    fn duplicate_id_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let mut reg = ModelRegistry::open(&tmp.path().join("r")).unwrap();
        let m = stub_model(tmp.path(), 10.0, "flat", 6);
        reg.add("twice", &m).unwrap();
        match reg.add("twice", &m) {
            Err(HarnessError::Config(msg)) => assert!(msg.contains("duplicate")),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn select_on_empty_registry_fails() {
        let tmp = tempfile::tempdir().unwrap();
        let reg = ModelRegistry::open(&tmp.path().join("empty")).unwrap();
        assert!(matches!(reg.select("flat", 10.0), Err(HarnessError::Missing(_))));
    }

    #[test]
    fn add_validates_model_file() {
        let tmp = tempfile::tempdir().unwrap();
        let mut reg = ModelRegistry::open(&tmp.path().join("r")).unwrap();
        let garbage = tmp.path().join("garbage.json");
        std::fs::write(&garbage, "not a model").unwrap();
        assert!(matches!(reg.add("bad", &garbage), Err(HarnessError::Missing(_))));
        assert!(reg.entries().is_empty());
    }
}
