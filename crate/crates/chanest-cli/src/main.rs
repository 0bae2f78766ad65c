//! `chanest` command-line harness.
//!
//! Every subcommand operates on one [`RunConfig`]: loaded from `--config`
//! when given, otherwise defaults, with individual fields overridable by
//! flags. Exit codes: 0 success, 2 config error, 3 missing artifact,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chanest::channel::SnrSpec;
use chanest::harness::dataset::{generate_dataset, read_dataset, write_dataset};
use chanest::harness::registry::ModelRegistry;
use chanest::harness::sweep::{sweep_train_snr, sweep_wl, write_train_snr_sweep, write_wl_sweep};
use chanest::harness::{
    run_eval, run_train, write_eval_reports, write_train_outputs, HarnessError, RunConfig, SnrGrid,
};

#[derive(Parser)]
#[command(
    name = "chanest",
    version,
    about = "OFDM channel estimation harness",
    max_term_width = 100
)]
struct Cli {
    /// JSON run config; any flag below overrides the matching field.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every stream in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate frames and write a training dataset (CSV + manifest)
    GenDataset(Overrides),
    /// Train a model on a dataset CSV; writes model.json and history.csv
    Train(Overrides),
    /// Monte Carlo NMSE/BER evaluation; one report CSV per estimator
    Eval(Overrides),
    /// Train one model per training SNR and tabulate NMSE over a test grid
    SweepTrainSnr(Overrides),
    /// Evaluate one trained model under several numeric formats
    SweepWl(Overrides),
    /// Manage the trained-model registry
    Registry {
        #[command(subcommand)]
        action: RegistryAction,
    },
}

#[derive(Subcommand)]
enum RegistryAction {
    /// Validate a model file and copy it into the registry
    Add {
        /// Registry directory (created if missing).
        #[arg(long, default_value = "registry")]
        dir: PathBuf,
        /// Unique model id (letters, digits, '-', '_').
        id: String,
        /// Model JSON file to import.
        file: PathBuf,
    },
    /// Print the registry index
    List {
        #[arg(long, default_value = "registry")]
        dir: PathBuf,
    },
    /// Print the id of the model best matching a channel and SNR
    Select {
        #[arg(long, default_value = "registry")]
        dir: PathBuf,
        /// Operating channel model name.
        channel: String,
        /// Operating SNR in dB.
        #[arg(allow_hyphen_values = true)]
        snr_db: f64,
    },
}

/// Field-by-field overrides of the run config. Shared by all run
/// subcommands; flags irrelevant to a given command are simply unused,
/// mirroring how the config file carries every field at once.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Channel model name or channel JSON file path.
    #[arg(long)]
    channel: Option<String>,
    /// Evaluation SNR grid in dB: "start:stop:step" or a comma list.
    #[arg(long, allow_hyphen_values = true, value_name = "GRID")]
    snr: Option<String>,
    /// Monte Carlo frames per SNR point.
    #[arg(long)]
    frames: Option<usize>,
    /// Comma list from ls, lmmse, lsdnn, ideal.
    #[arg(long, value_name = "LIST")]
    estimators: Option<String>,
    /// Data modulation: bpsk, qpsk or qam16.
    #[arg(long)]
    modulation: Option<String>,
    /// Data OFDM symbols per frame.
    #[arg(long)]
    data_symbols: Option<usize>,
    /// Trained model file (lsdnn estimator, sweep-wl).
    #[arg(long)]
    model: Option<PathBuf>,
    /// LMMSE prior: channel name to sample or a saved matrix JSON.
    #[arg(long)]
    rh_source: Option<String>,
    /// Channel draws when the LMMSE prior is sampled.
    #[arg(long)]
    rh_draws: Option<usize>,
    /// Numeric format emulated on the ls/lsdnn datapath, e.g. q16_8.
    #[arg(long)]
    quant: Option<String>,
    /// Dataset CSV consumed by train.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Rows generated by gen-dataset.
    #[arg(long)]
    rows: Option<usize>,
    /// Dataset SNR: single "10" or mixture range "lo:hi".
    #[arg(long, allow_hyphen_values = true)]
    train_snr: Option<String>,
    /// Architecture: lsdnn1 or lsdnn2.
    #[arg(long)]
    arch: Option<String>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch: Option<usize>,
    /// ADAM learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Training SNRs swept by sweep-train-snr (comma list).
    #[arg(long, allow_hyphen_values = true, value_name = "LIST")]
    train_snrs: Option<String>,
    /// Extra mixture training row "lo:hi" for sweep-train-snr.
    #[arg(long, allow_hyphen_values = true)]
    mixture: Option<String>,
    /// Numeric formats swept by sweep-wl (comma list).
    #[arg(long, value_name = "LIST")]
    formats: Option<String>,
}

fn bad(msg: String) -> HarnessError {
    HarnessError::Config(msg)
}

fn parse_f64(s: &str, what: &str) -> Result<f64, HarnessError> {
    s.trim().parse().map_err(|_| bad(format!("bad {what} value {s:?}")))
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(',').map(|p| parse_f64(p, what)).collect()
}

/// "start:stop:step" becomes an inclusive range, anything else a comma list.
fn parse_snr_grid(s: &str) -> Result<SnrGrid, HarnessError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => Ok(SnrGrid::Points(parse_f64_list(s, "snr")?)),
        3 => Ok(SnrGrid::Range {
            start: parse_f64(parts[0], "snr")?,
            stop: parse_f64(parts[1], "snr")?,
            step: parse_f64(parts[2], "snr")?,
        }),
        _ => Err(bad(format!("bad snr grid {s:?}: want \"start:stop:step\" or a comma list"))),
    }
}

/// "10" is a fixed SNR, "lo:hi" a uniform mixture.
fn parse_snr_spec(s: &str) -> Result<SnrSpec, HarnessError> {
    match *s.split(':').collect::<Vec<_>>() {
        [v] => Ok(SnrSpec::Single(parse_f64(v, "train-snr")?)),
        [lo, hi] => {
            Ok(SnrSpec::Range { lo: parse_f64(lo, "train-snr")?, hi: parse_f64(hi, "train-snr")? })
        }
        _ => Err(bad(format!("bad snr spec {s:?}: want \"db\" or \"lo:hi\""))),
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), HarnessError> {
    match *s.split(':').collect::<Vec<_>>() {
        [lo, hi] => Ok((parse_f64(lo, what)?, parse_f64(hi, what)?)),
        _ => Err(bad(format!("bad {what} {s:?}: want \"lo:hi\""))),
    }
}

fn parse_str_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).collect()
}

impl Overrides {
    fn apply(self, cfg: &mut RunConfig) -> Result<(), HarnessError> {
        if let Some(v) = self.channel {
            cfg.channel = v;
        }
        if let Some(s) = self.snr {
            cfg.snr_db = parse_snr_grid(&s)?;
        }
        if let Some(v) = self.frames {
            cfg.frames = v;
        }
        if let Some(s) = self.estimators {
            cfg.estimators = parse_str_list(&s);
        }
        if let Some(v) = self.modulation {
            cfg.modulation = v;
        }
        if let Some(v) = self.data_symbols {
            cfg.data_symbols = v;
        }
        if let Some(v) = self.model {
            cfg.model = Some(v);
        }
        if let Some(v) = self.rh_source {
            cfg.rh_source = Some(v);
        }
        if let Some(v) = self.rh_draws {
            cfg.rh_draws = v;
        }
        if let Some(s) = self.quant {
            cfg.quant = Some(s.parse::<chanest::quant::NumericFormat>()?);
        }
        if let Some(v) = self.dataset {
            cfg.dataset = Some(v);
        }
        if let Some(v) = self.rows {
            cfg.dataset_rows = v;
        }
        if let Some(s) = self.train_snr {
            cfg.train_snr_db = parse_snr_spec(&s)?;
        }
        if let Some(v) = self.arch {
            cfg.arch = v;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.batch {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.lr {
            cfg.train.learning_rate = v;
        }
        if let Some(s) = self.train_snrs {
            cfg.train_snrs = parse_f64_list(&s, "train-snrs")?;
        }
        if let Some(s) = self.mixture {
            cfg.mixture = Some(parse_pair(&s, "mixture")?);
        }
        if let Some(s) = self.formats {
            cfg.formats = parse_str_list(&s);
        }
        Ok(())
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::GenDataset(ov) => {
            ov.apply(&mut cfg)?;
            let ds = generate_dataset(&cfg)?;
            let (csv, _) = write_dataset(&ds, &cfg)?;
            println!("wrote {} ({} rows)", csv.display(), ds.rows());
        }
        Command::Train(ov) => {
            ov.apply(&mut cfg)?;
            let path = cfg
                .dataset
                .clone()
                .ok_or_else(|| bad("train requires a dataset (--dataset or config)".into()))?;
            let ds = read_dataset(&path)?;
            let outcome = run_train(&cfg, &ds)?;
            let (model_path, _) = write_train_outputs(&outcome, &cfg)?;
            let last = outcome.history.last().expect("at least one epoch");
            println!(
                "wrote {} ({} epochs, val mse {:.3e})",
                model_path.display(),
                outcome.history.len(),
                last.val_mse
            );
        }
        Command::Eval(ov) => {
            ov.apply(&mut cfg)?;
            let reports = run_eval(&cfg)?;
            for path in write_eval_reports(&reports, &cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::SweepTrainSnr(ov) => {
            ov.apply(&mut cfg)?;
            let sweep = sweep_train_snr(&cfg)?;
            let path = write_train_snr_sweep(&sweep, &cfg)?;
            println!("wrote {}", path.display());
            if let Some(best) = sweep.argmin_mean() {
                println!("lowest mean nmse: training snr {}", best.label);
            }
        }
        Command::SweepWl(ov) => {
            ov.apply(&mut cfg)?;
            let rows = sweep_wl(&cfg)?;
            let path = write_wl_sweep(&rows, &cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Registry { action } => run_registry(action)?,
    }
    Ok(())
}

fn run_registry(action: RegistryAction) -> Result<(), HarnessError> {
    match action {
        RegistryAction::Add { dir, id, file } => {
            let mut reg = ModelRegistry::open(&dir)?;
            let entry = reg.add(&id, &file)?;
            println!(
                "added {} ({} @ {} dB, {})",
                entry.model_id, entry.channel_model, entry.training_snr_db, entry.arch_tag
            );
        }
        RegistryAction::List { dir } => {
            let reg = ModelRegistry::open(&dir)?;
            for e in reg.entries() {
                println!(
                    "{}\t{}\t{}\t{}\t{}",
                    e.model_id, e.channel_model, e.training_snr_db, e.arch_tag, e.file
                );
            }
        }
        RegistryAction::Select { dir, channel, snr_db } => {
            let reg = ModelRegistry::open(&dir)?;
            let entry = reg.select(&channel, snr_db)?;
            println!("{}", entry.model_id);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
