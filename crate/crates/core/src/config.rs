//! The JSON run configuration: one file describes the code, the channel,
//! a training recipe, and a sweep. Flags may override individual fields at
//! the CLI; the fully resolved configuration is hashed into every report.
//!
//! Parsing is strict: unknown keys anywhere in the document are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::NoiseSpec;
use crate::codebook::{CodeSpec, InfoSetMethod};
use crate::error::{Error, Result};
use crate::eval::{StopRule, SweepConfig};
use crate::nnd::{
    default_hidden, LossConfig, MessageSource, ScheduleConfig, TrainConfig, TrainScheme,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "CodeBlock::default_16_8")]
    pub code: CodeBlock,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub train: TrainBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

fn default_seed() -> u64 {
    1234
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::UniformDb { lo: 0.0, hi: 10.0, seed: None }
}

/// The code definition block: `{"n": 4, "K": 8, "info_set": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeBlock {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_info_set")]
    pub info_set: InfoSetMethod,
}

fn default_info_set() -> InfoSetMethod {
    InfoSetMethod::Bhattacharyya { p0: 0.5 }
}

impl CodeBlock {
    pub fn default_16_8() -> Self {
        CodeBlock { n: 4, k: 8, info_set: default_info_set() }
    }

    pub fn build(&self) -> Result<CodeSpec> {
        CodeSpec::construct(self.n, self.k, &self.info_set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainBlock {
    #[serde(default = "default_scheme")]
    pub scheme: TrainScheme,
    /// For the self-supervised scheme an epoch is one batch; the baseline
    /// passes its whole (sub)codebook once per epoch.
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_message_source")]
    pub message_source: MessageSource,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub optimizer: crate::nn::AdamParams,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
}

fn default_scheme() -> TrainScheme {
    TrainScheme::SelfSupervised
}
fn default_epochs() -> usize {
    1 << 15
}
fn default_batch_size() -> usize {
    1 << 8
}
fn default_message_source() -> MessageSource {
    MessageSource::Random
}

impl Default for TrainBlock {
    fn default() -> Self {
        TrainBlock {
            scheme: default_scheme(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            message_source: default_message_source(),
            loss: LossConfig::default(),
            optimizer: crate::nn::AdamParams::default(),
            schedule: ScheduleConfig::default(),
            hidden: default_hidden(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "default_ebn0_points")]
    pub ebn0_points: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    /// Decoder name: map | sc | bp | bdd | nnd.
    #[serde(default = "default_decoder")]
    pub decoder: String,
    #[serde(default = "default_bp_iters")]
    pub bp_iters: usize,
}

fn default_ebn0_points() -> Vec<f64> {
    (0..=8).map(f64::from).collect()
}
fn default_decoder() -> String {
    "map".to_string()
}
fn default_bp_iters() -> usize {
    30
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            ebn0_points: default_ebn0_points(),
            stop: StopRule::default(),
            decoder: default_decoder(),
            bp_iters: default_bp_iters(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_output_dir")]
    pub dir: String,
}

fn default_output_dir() -> String {
    "reports".to_string()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: default_output_dir() }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            code: CodeBlock::default_16_8(),
            noise: default_noise(),
            train: TrainBlock::default(),
            sweep: SweepBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

impl RunConfig {
    /// Parse and validate a run configuration, rejecting unknown keys
    /// anywhere in the document.
    pub fn parse(text: &str) -> Result<Self> {
        let input: serde_json::Value = serde_json::from_str(text)?;
        let config: RunConfig = serde_json::from_value(input.clone())?;
        let echo = serde_json::to_value(&config)?;
        reject_unknown_keys(&input, &echo, "$")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.code.build()?;
        self.noise.validate()?;
        self.sweep.stop.validate()?;
        if self.sweep.ebn0_points.is_empty() {
            return Err(Error::validation("sweep.ebn0_points must not be empty"));
        }
        self.train_config().validate()
    }

    /// The training recipe with the run-level noise and seed folded in.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            scheme: self.train.scheme,
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            message_source: self.train.message_source.clone(),
            noise: self.noise.clone(),
            loss: self.train.loss,
            optimizer: self.train.optimizer,
            schedule: self.train.schedule,
            hidden: self.train.hidden.clone(),
            seed: self.seed,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig::new(self.sweep.ebn0_points.clone(), self.sweep.stop, self.seed)
    }

    /// SHA-256 of the resolved configuration; embedded in reports so every
    /// figure traces back to exact settings.
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Recursively require every input key to exist in the echoed (resolved)
/// document. Defaults only ever *add* keys, so input must be a subset.
fn reject_unknown_keys(
    input: &serde_json::Value,
    echo: &serde_json::Value,
    path: &str,
) -> Result<()> {
    match (input, echo) {
        (serde_json::Value::Object(in_map), serde_json::Value::Object(echo_map)) => {
            for (key, in_val) in in_map {
                match echo_map.get(key) {
                    Some(echo_val) => {
                        reject_unknown_keys(in_val, echo_val, &format!("{path}.{key}"))?
                    }
                    None => {
                        return Err(Error::validation(format!("unknown key {path}.{key}")));
                    }
                }
            }
            Ok(())
        }
        (serde_json::Value::Array(in_arr), serde_json::Value::Array(echo_arr))
            if in_arr.len() == echo_arr.len() =>
        {
            for (i, (iv, ev)) in in_arr.iter().zip(echo_arr).enumerate() {
                reject_unknown_keys(iv, ev, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}
