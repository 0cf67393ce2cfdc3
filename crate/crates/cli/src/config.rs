//! Pipeline configuration: defaults, key=value file parsing, and flag
//! overrides. Flags win over the file, the file wins over defaults, and
//! unknown keys are hard errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use corrnet_core::dataset::SyntheticConfig;
use corrnet_core::snn::SimParams;
use corrnet_core::svm::SvmConfig;

use crate::error::{CliError, Result};

/// Decoders the pipeline can run. The pure variants are the same code
/// paths with every pixel's bin set to all voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoder {
    Svm,
    Snn,
    PureSvm,
    PureSnn,
}

impl Decoder {
    pub fn name(self) -> &'static str {
        match self {
            Decoder::Svm => "svm",
            Decoder::Snn => "snn",
            Decoder::PureSvm => "pure-svm",
            Decoder::PureSnn => "pure-snn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Decoder::Svm),
            "snn" => Ok(Decoder::Snn),
            "pure-svm" => Ok(Decoder::PureSvm),
            "pure-snn" => Ok(Decoder::PureSnn),
            other => Err(CliError::Config(format!(
                "decoders: unknown decoder `{other}` (expected svm, snn, pure-svm, pure-snn)"
            ))),
        }
    }

    pub fn uses_bins(self) -> bool {
        matches!(self, Decoder::Svm | Decoder::Snn)
    }

    pub fn is_snn(self) -> bool {
        matches!(self, Decoder::Snn | Decoder::PureSnn)
    }
}

/// Every tunable of the pipeline with its default.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub eps_cv: f64,
    pub eps_corr: f64,
    pub decoders: Vec<Decoder>,
    pub svm: SvmConfig,
    pub snn: SimParams,
    pub synth: SyntheticConfig,
    pub rows: usize,
    pub cols: usize,
    pub train_trials: usize,
    pub test_repetitions: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eps_cv: 0.1,
            eps_corr: 0.5,
            decoders: vec![
                Decoder::Svm,
                Decoder::Snn,
                Decoder::PureSvm,
                Decoder::PureSnn,
            ],
            svm: SvmConfig::default(),
            snn: SimParams::default(),
            synth: SyntheticConfig::default(),
            rows: 12,
            cols: 12,
            train_trials: 352,
            test_repetitions: 4,
            seed: 42,
            out: PathBuf::from("out"),
        }
    }
}

/// Fixed key order used by the config echo so it is byte-stable.
pub const CONFIG_KEYS: &[&str] = &[
    "eps_cv",
    "eps_corr",
    "decoders",
    "svm_c",
    "svm_tol",
    "snn_tau_m",
    "snn_tau_s",
    "snn_v_thre",
    "snn_v_rest",
    "snn_window",
    "snn_dt",
    "snn_lr",
    "snn_max_epochs",
    "grid_x",
    "grid_y",
    "grid_z",
    "pitch_x",
    "pitch_y",
    "pitch_z",
    "jitter",
    "rf_sigma",
    "surround_amp",
    "surround_scale",
    "gain",
    "snr",
    "noise_global",
    "irrelevant_frac",
    "center_weight",
    "rows",
    "cols",
    "train_trials",
    "test_repetitions",
    "seed",
    "out",
];

impl PipelineConfig {
    /// Apply one key=value assignment. Unknown keys and unparsable values
    /// are configuration errors naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: cannot parse value `{value}`")))
        }
        match key {
            "eps_cv" => self.eps_cv = num(key, value)?,
            "eps_corr" => self.eps_corr = num(key, value)?,
            "decoders" => {
                let mut decoders = Vec::new();
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let d = Decoder::parse(part)?;
                    if !decoders.contains(&d) {
                        decoders.push(d);
                    }
                }
                self.decoders = decoders;
            }
            "svm_c" => self.svm.c = num(key, value)?,
            "svm_tol" => self.svm.tolerance = num(key, value)?,
            "snn_tau_m" => self.snn.tau_m = num(key, value)?,
            "snn_tau_s" => self.snn.tau_s = num(key, value)?,
            "snn_v_thre" => self.snn.v_thre = num(key, value)?,
            "snn_v_rest" => self.snn.v_rest = num(key, value)?,
            "snn_window" => self.snn.window = num(key, value)?,
            "snn_dt" => self.snn.dt = num(key, value)?,
            "snn_lr" => self.snn.lr = num(key, value)?,
            "snn_max_epochs" => self.snn.max_epochs = num(key, value)?,
            "grid_x" => self.synth.grid[0] = num(key, value)?,
            "grid_y" => self.synth.grid[1] = num(key, value)?,
            "grid_z" => self.synth.grid[2] = num(key, value)?,
            "pitch_x" => self.synth.pitch[0] = num(key, value)?,
            "pitch_y" => self.synth.pitch[1] = num(key, value)?,
            "pitch_z" => self.synth.pitch[2] = num(key, value)?,
            "jitter" => self.synth.jitter = num(key, value)?,
            "rf_sigma" => self.synth.rf_sigma = num(key, value)?,
            "surround_amp" => self.synth.surround_amp = num(key, value)?,
            "surround_scale" => self.synth.surround_scale = num(key, value)?,
            "gain" => self.synth.gain = num(key, value)?,
            "snr" => self.synth.snr = num(key, value)?,
            "noise_global" => self.synth.noise_global = num(key, value)?,
            "irrelevant_frac" => self.synth.irrelevant = num(key, value)?,
            "center_weight" => {
                self.synth.center_weight = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(CliError::Config(format!(
                            "center_weight: expected true or false, got `{other}`"
                        )))
                    }
                }
            }
            "rows" => self.rows = num(key, value)?,
            "cols" => self.cols = num(key, value)?,
            "train_trials" => self.train_trials = num(key, value)?,
            "test_repetitions" => self.test_repetitions = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => {
                return Err(CliError::Config(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// Read a key=value file ('#' starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected key=value, got `{line}`",
                    path.display(),
                    idx + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Range and consistency checks, each naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(CliError::Config(format!("{key}: {v} is outside [0, 1]")))
            }
        };
        unit("eps_cv", self.eps_cv)?;
        unit("eps_corr", self.eps_corr)?;
        if self.decoders.is_empty() {
            return Err(CliError::Config(
                "decoders: nothing to run (empty decoder list)".into(),
            ));
        }
        self.svm
            .validate()
            .map_err(|e| CliError::Config(format!("svm: {e}")))?;
        self.snn
            .validate()
            .map_err(|e| CliError::Config(format!("snn: {e}")))?;
        self.synth
            .validate()
            .map_err(|e| CliError::Config(format!("synth: {e}")))?;
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Config("rows/cols must be positive".into()));
        }
        if self.train_trials < 2 {
            return Err(CliError::Config(
                "train_trials: need at least 2 trials for standardization".into(),
            ));
        }
        if self.test_repetitions == 0 {
            return Err(CliError::Config("test_repetitions must be positive".into()));
        }
        Ok(())
    }

    /// The effective configuration as key=value text in fixed key order.
    pub fn echo(&self) -> String {
        let decoders = self
            .decoders
            .iter()
            .map(|d| d.name())
            .collect::<Vec<_>>()
            .join(",");
        let mut s = String::new();
        for &key in CONFIG_KEYS {
            let value = match key {
                "eps_cv" => self.eps_cv.to_string(),
                "eps_corr" => self.eps_corr.to_string(),
                "decoders" => decoders.clone(),
                "svm_c" => self.svm.c.to_string(),
                "svm_tol" => self.svm.tolerance.to_string(),
                "snn_tau_m" => self.snn.tau_m.to_string(),
                "snn_tau_s" => self.snn.tau_s.to_string(),
                "snn_v_thre" => self.snn.v_thre.to_string(),
                "snn_v_rest" => self.snn.v_rest.to_string(),
                "snn_window" => self.snn.window.to_string(),
                "snn_dt" => self.snn.dt.to_string(),
                "snn_lr" => self.snn.lr.to_string(),
                "snn_max_epochs" => self.snn.max_epochs.to_string(),
                "grid_x" => self.synth.grid[0].to_string(),
                "grid_y" => self.synth.grid[1].to_string(),
                "grid_z" => self.synth.grid[2].to_string(),
                "pitch_x" => self.synth.pitch[0].to_string(),
                "pitch_y" => self.synth.pitch[1].to_string(),
                "pitch_z" => self.synth.pitch[2].to_string(),
                "jitter" => self.synth.jitter.to_string(),
                "rf_sigma" => self.synth.rf_sigma.to_string(),
                "surround_amp" => self.synth.surround_amp.to_string(),
                "surround_scale" => self.synth.surround_scale.to_string(),
                "gain" => self.synth.gain.to_string(),
                "snr" => self.synth.snr.to_string(),
                "noise_global" => self.synth.noise_global.to_string(),
                "irrelevant_frac" => self.synth.irrelevant.to_string(),
                "center_weight" => self.synth.center_weight.to_string(),
                "rows" => self.rows.to_string(),
                "cols" => self.cols.to_string(),
                "train_trials" => self.train_trials.to_string(),
                "test_repetitions" => self.test_repetitions.to_string(),
                "seed" => self.seed.to_string(),
                "out" => self.out.display().to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "{key}={value}");
        }
        s
    }
}

/// Resolve the final configuration from an optional file plus flag
/// overrides, in precedence order defaults < file < flags.
pub fn parse_config(file: Option<&Path>, flags: &[(String, String)]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    for (key, value) in flags {
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
