//! Resolved per-command parameters.
//!
//! Values come from defaults, then the JSON config file, then flags. The
//! resolved record is echoed as `config.json`; it holds only values that
//! affect results, so `--out` and `--threads` are left out.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use framedrop::dae::{Objective, OptimizerKind, TrainConfig, DEFAULT_KEEP_PROB};
use framedrop::EtfLossVariant;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    Simplex,
    Conference,
    Gaussian,
    ApproxEtf,
    Lowpass,
    /// Read a frame CSV given by `--input`.
    File,
}

/// Where a command gets its frame from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSource {
    pub kind: FrameKind,
    pub m: usize,
    pub n: usize,
    /// Field size for the conference construction.
    pub q: u64,
    /// Alternating-projection sweeps for `approx-etf`.
    pub iters: usize,
    pub input: Option<PathBuf>,
}

impl Default for FrameSource {
    fn default() -> Self {
        FrameSource { kind: FrameKind::Gaussian, m: 8, n: 16, q: 5, iters: 1000, input: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FrameCommand {
    #[serde(flatten)]
    pub source: FrameSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelCommand {
    #[serde(flatten)]
    pub source: FrameSource,
    pub p: f64,
    pub sigma_w: f64,
    pub trials: usize,
    pub decoder_iters: usize,
}

impl Default for ChannelCommand {
    fn default() -> Self {
        ChannelCommand { source: FrameSource::default(), p: 0.7, sigma_w: 1e-3, trials: 10_000, decoder_iters: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraCommand {
    #[serde(flatten)]
    pub source: FrameSource,
    pub p: f64,
    pub trials: usize,
    pub bins: usize,
    pub moment_trials: usize,
    pub exhaustive: bool,
}

impl Default for SpectraCommand {
    fn default() -> Self {
        SpectraCommand {
            source: FrameSource::default(),
            p: 0.5,
            trials: 2000,
            bins: 50,
            moment_trials: 10_000,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    OnlineMse,
    OnlineCoherence,
    Finite,
    Sweep,
}

impl TrainMode {
    pub fn objective(self) -> Objective {
        match self {
            TrainMode::OnlineCoherence => Objective::CoherenceOnly,
            _ => Objective::Mse,
        }
    }

    pub fn is_online(self) -> bool {
        matches!(self, TrainMode::OnlineMse | TrainMode::OnlineCoherence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCommand {
    pub mode: TrainMode,
    pub m: usize,
    pub n: usize,
    pub p: f64,
    pub sigma_w: f64,
    pub decoder_iters: usize,
    pub beta: f64,
    pub betas: Vec<f64>,
    pub variant: EtfLossVariant,
    pub batch_size: usize,
    /// Batches (online) or epochs (finite, sweep).
    pub steps: usize,
    pub train_set_size: usize,
    pub test_set_size: usize,
    pub test_patterns: usize,
    pub eval_every: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub final_learning_rate: Option<f64>,
    /// Alternating-projection sweeps for the sweep's ETF reference.
    pub etf_iters: usize,
}

impl Default for TrainCommand {
    fn default() -> Self {
        let finite = TrainConfig::default();
        TrainCommand {
            mode: TrainMode::Finite,
            m: framedrop::dae::DEFAULT_M,
            n: framedrop::dae::DEFAULT_N,
            p: DEFAULT_KEEP_PROB,
            sigma_w: framedrop::channel::DEFAULT_SIGMA_W,
            decoder_iters: framedrop::channel::DEFAULT_DECODER_ITERS,
            beta: 0.0,
            betas: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0],
            variant: finite.variant,
            batch_size: finite.batch_size,
            steps: finite.steps,
            train_set_size: 100,
            test_set_size: finite.test_set_size,
            test_patterns: finite.test_patterns,
            eval_every: finite.eval_every,
            optimizer: finite.optimizer,
            learning_rate: finite.learning_rate,
            final_learning_rate: None,
            etf_iters: 200,
        }
    }
}

impl TrainCommand {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            beta: self.beta,
            variant: self.variant,
            batch_size: self.batch_size,
            steps: self.steps,
            train_set_size: (!self.mode.is_online()).then_some(self.train_set_size),
            test_set_size: self.test_set_size,
            test_patterns: self.test_patterns,
            eval_every: self.eval_every,
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            final_learning_rate: self.final_learning_rate.unwrap_or(self.learning_rate),
            seed,
        }
    }
}

/// The JSON config file split into global settings and command parameters.
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    params: Map<String, Value>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile { seed: None, threads: None, params: Map::new() }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(mut params) = value else {
            return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
        };
        let seed = take_global(&mut params, "seed")?;
        let threads = take_global(&mut params, "threads")?;
        Ok(ConfigFile { seed, threads, params })
    }

    /// Command parameters: defaults overlaid with the file's values.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.params.clone())).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn take_global<T: DeserializeOwned>(params: &mut Map<String, Value>, key: &str) -> Result<Option<T>, CliError> {
    params
        .remove(key)
        .map(|v| serde_json::from_value(v).map_err(|e| CliError::Config(format!("{key}: {e}"))))
        .transpose()
}

/// The echoed record: command name, seed and resolved parameters.
#[derive(Serialize)]
pub struct Resolved<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    #[serde(flatten)]
    pub params: &'a T,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_overlay_defaults() {
        let mut params = Map::new();
        params.insert("p".into(), Value::from(0.9));
        params.insert("kind".into(), Value::from("simplex"));
        let file = ConfigFile { seed: Some(3), threads: None, params };
        let cmd: ChannelCommand = file.params().unwrap();
        assert_eq!(cmd.p, 0.9);
        assert_eq!(cmd.source.kind, FrameKind::Simplex);
        assert_eq!(cmd.trials, ChannelCommand::default().trials);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut params = Map::new();
        params.insert("bogus".into(), Value::from(1));
        let file = ConfigFile { seed: None, threads: None, params };
        assert!(file.params::<FrameCommand>().is_err());
    }

    #[test]
    fn online_modes_drop_the_training_set() {
        let cmd = TrainCommand { mode: TrainMode::OnlineMse, ..TrainCommand::default() };
        assert_eq!(cmd.train_config(1).train_set_size, None);
        assert_eq!(TrainCommand::default().train_config(1).train_set_size, Some(100));
    }
}
