//! The neural decoder: model construction, self-supervised training, the
//! conventional supervised baseline, one-shot decoding, and checkpoints.
//!
//! The self-supervised loop never uses message bits as labels. Messages are
//! moved into a [`LabelVault`] immediately after encoding; every access
//! after that point goes through the vault and is counted, so a training
//! run can *prove* it was label-free (`label_reads == 0`). The supervised
//! baseline reads the vault every epoch (that is its definition) and serves
//! as the negative control.

use std::cell::Cell;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{awgn, bpsk_modulate, ebn0_to_sigma, NoiseSpec};
use crate::codebook::{message_from_index, BitWord, CodeSpec};
use crate::error::{Error, Result};
use crate::nn::{
    adam_update_slice, bce_with_logits, AdamParams, AdamState, Activation, MlpModel,
    OneCycleSchedule, ReencodeOp, Tensor2,
};
use crate::rng::{derive_rng, stream};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Default hidden-layer widths for the (16, 8) decoder.
pub fn default_hidden() -> Vec<usize> {
    vec![128, 64, 32]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainScheme {
    /// Train as a bounded-distance decoder from (re-encoding, channel
    /// output) pairs only.
    SelfSupervised,
    /// The conventional scheme: logistic head, binary cross-entropy against
    /// the true message bits, fixed training SNR.
    SupervisedBaseline,
}

/// Where training messages come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MessageSource {
    /// Fresh uniform random messages every draw.
    Random,
    /// A fixed subset holding `floor(percent/100 * 2^K)` messages, chosen
    /// once by `subset_seed`. Used by the generalization experiments.
    CodebookSubset { percent: f64, subset_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// Regularizer weight; fixed unless `learnable_w` is set.
    #[serde(default = "default_w")]
    pub w: f64,
    /// Guard added to |v| inside the regularizer.
    #[serde(default = "default_loss_eps")]
    pub eps: f64,
    /// Parameterize w = softplus(omega) and train omega alongside the
    /// network. Off by default: the plain gradient on a free w is strictly
    /// positive and would push it to -infinity.
    #[serde(default)]
    pub learnable_w: bool,
}

fn default_w() -> f64 {
    0.01
}
fn default_loss_eps() -> f64 {
    1e-6
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { w: default_w(), eps: default_loss_eps(), learnable_w: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_max_lr")]
    pub max_lr: f64,
    #[serde(default = "default_warmup")]
    pub warmup_frac: f64,
    #[serde(default = "default_div_initial")]
    pub div_initial: f64,
    #[serde(default = "default_div_final")]
    pub div_final: f64,
}

fn default_max_lr() -> f64 {
    1e-3
}
fn default_warmup() -> f64 {
    0.3
}
fn default_div_initial() -> f64 {
    25.0
}
fn default_div_final() -> f64 {
    1e4
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            max_lr: default_max_lr(),
            warmup_frac: default_warmup(),
            div_initial: default_div_initial(),
            div_final: default_div_final(),
        }
    }
}

impl ScheduleConfig {
    pub fn with_total_steps(&self, total_steps: usize) -> Result<OneCycleSchedule> {
        OneCycleSchedule::new(
            self.max_lr,
            total_steps,
            self.warmup_frac,
            self.div_initial,
            self.div_final,
        )
    }
}

/// One training run's full recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub scheme: TrainScheme,
    pub epochs: usize,
    /// Samples per epoch for the self-supervised scheme. The baseline
    /// passes its whole (sub)codebook once per epoch instead.
    pub batch_size: usize,
    pub message_source: MessageSource,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub optimizer: AdamParams,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be >= 1"));
        }
        if self.hidden.is_empty() {
            return Err(Error::validation("at least one hidden layer is required"));
        }
        if self.loss.eps <= 0.0 {
            return Err(Error::validation("loss eps must be positive"));
        }
        if let MessageSource::CodebookSubset { percent, .. } = self.message_source {
            if !(percent > 0.0 && percent <= 100.0) {
                return Err(Error::validation(format!(
                    "subset percent must be in (0, 100], got {percent}"
                )));
            }
        }
        self.noise.validate()
    }
}

/// Messages moved behind an access counter right after encoding. Reads are
/// what "using labels" means; a label-free run finishes with zero.
pub struct LabelVault {
    bits: Vec<BitWord>,
    reads: Cell<u64>,
}

impl LabelVault {
    pub fn new(bits: Vec<BitWord>) -> Self {
        LabelVault { bits, reads: Cell::new(0) }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn read(&self, i: usize) -> &BitWord {
        self.reads.set(self.reads.get() + 1);
        &self.bits[i]
    }

    pub fn reads(&self) -> u64 {
        self.reads.get()
    }
}

/// The fixed message-index subset for `CodebookSubset`: a seeded partial
/// shuffle of all 2^K indices, truncated to `floor(percent/100 * 2^K)`,
/// returned sorted.
pub fn codebook_subset(msg_len: usize, percent: f64, subset_seed: u64) -> Result<Vec<u64>> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::validation(format!("subset percent must be in (0, 100], got {percent}")));
    }
    if msg_len == 0 || msg_len > 32 {
        return Err(Error::config(format!("subset selection supports 1 <= K <= 32, got {msg_len}")));
    }
    let total = 1u64 << msg_len;
    let count = ((percent / 100.0) * total as f64).floor() as u64;
    let count = count.max(1).min(total);
    let mut indices: Vec<u64> = (0..total).collect();
    let mut rng = derive_rng(subset_seed, &[stream::SUBSET]);
    // Partial Fisher-Yates: only the first `count` slots matter.
    for i in 0..count as usize {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    let mut subset: Vec<u64> = indices[..count as usize].to_vec();
    subset.sort_unstable();
    Ok(subset)
}

/// Complement of a sorted subset within `0..2^K`.
pub fn subset_complement(msg_len: usize, subset: &[u64]) -> Vec<u64> {
    let total = 1u64 << msg_len;
    let mut inside = vec![false; total as usize];
    for &i in subset {
        inside[i as usize] = true;
    }
    (0..total).filter(|&i| !inside[i as usize]).collect()
}

/// Build the decoder network: `N -> hidden... -> K`, ReLU after each hidden
/// layer and Tanh after the output layer (so outputs live in (-1, 1)).
pub fn build_model<R: Rng>(code: &CodeSpec, hidden: &[usize], rng: &mut R) -> Result<MlpModel> {
    build_with_head(code, hidden, Activation::Tanh, rng)
}

fn build_with_head<R: Rng>(
    code: &CodeSpec,
    hidden: &[usize],
    head: Activation,
    rng: &mut R,
) -> Result<MlpModel> {
    if hidden.is_empty() {
        return Err(Error::validation("at least one hidden layer is required"));
    }
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(code.block_len());
    dims.extend_from_slice(hidden);
    dims.push(code.msg_len());
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(head);
    MlpModel::new(dims, acts, rng)
}

/// A persisted training result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub code: CodeSpec,
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
    /// Row-major weight matrices, one per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub train_config: TrainConfig,
    /// Per-epoch training loss.
    pub loss_trace: Vec<f64>,
    /// The regularizer weight in effect at the end of training (differs
    /// from the configured value only in learnable-w mode).
    pub final_w: f64,
    pub final_epoch: usize,
    pub seed: u64,
}

impl Checkpoint {
    fn from_model(
        model: &MlpModel,
        code: &CodeSpec,
        config: &TrainConfig,
        loss_trace: Vec<f64>,
        final_w: f64,
    ) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            code: code.clone(),
            dims: model.dims().to_vec(),
            activations: model.activations().to_vec(),
            weights: model.weights().iter().map(|w| w.data().to_vec()).collect(),
            biases: model.biases().to_vec(),
            train_config: config.clone(),
            loss_trace,
            final_w,
            final_epoch: config.epochs,
            seed: config.seed,
        }
    }

    /// Reconstruct the trained network.
    pub fn model(&self) -> Result<MlpModel> {
        if self.dims.len() < 2 || self.weights.len() != self.dims.len() - 1 {
            return Err(Error::Checkpoint("inconsistent layer counts".to_string()));
        }
        let mut weights = Vec::with_capacity(self.weights.len());
        for (l, flat) in self.weights.iter().enumerate() {
            weights.push(Tensor2::from_vec(self.dims[l], self.dims[l + 1], flat.clone())?);
        }
        MlpModel::from_parts(
            self.dims.clone(),
            weights,
            self.biases.clone(),
            self.activations.clone(),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(&path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
            Some(v) => {
                return Err(Error::Checkpoint(format!(
                    "unsupported checkpoint version {v}, expected {CHECKPOINT_VERSION}"
                )))
            }
            None => return Err(Error::Checkpoint("missing version field".to_string())),
        }
        let ckpt: Checkpoint = serde_json::from_value(value)?;
        Ok(ckpt)
    }
}

/// What a training run produced, plus its instrumentation counters.
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Message reads after encoding. Zero for a label-free run.
    pub label_reads: u64,
    /// Total training samples consumed.
    pub samples_consumed: u64,
}

enum ResolvedSource {
    Uniform,
    Subset(Vec<u64>),
}

impl ResolvedSource {
    fn resolve(source: &MessageSource, msg_len: usize) -> Result<Self> {
        match source {
            MessageSource::Random => Ok(ResolvedSource::Uniform),
            MessageSource::CodebookSubset { percent, subset_seed } => Ok(ResolvedSource::Subset(
                codebook_subset(msg_len, *percent, *subset_seed)?,
            )),
        }
    }

    fn draw<R: Rng>(&self, msg_len: usize, rng: &mut R) -> u64 {
        match self {
            ResolvedSource::Uniform => rng.random::<u64>() & ((1u64 << msg_len) - 1),
            ResolvedSource::Subset(list) => list[rng.random_range(0..list.len())],
        }
    }
}

/// Draw one training message index from a message source.
pub fn draw_message_index<R: Rng>(
    source: &MessageSource,
    msg_len: usize,
    rng: &mut R,
) -> Result<u64> {
    Ok(ResolvedSource::resolve(source, msg_len)?.draw(msg_len, rng))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of softplus, for initializing omega from the configured w.
fn softplus_inverse(w: f64) -> f64 {
    // log(exp(w) - 1), stable for small w.
    if w > 20.0 {
        w
    } else {
        (w.exp() - 1.0).ln()
    }
}

/// Train the self-supervised decoder.
///
/// Each epoch draws `batch_size` messages, encodes and modulates them, draws
/// one Eb/N0 per codeword, adds AWGN, and descends the re-encoder loss.
/// Gradients flow from `(r, y)` only; the vault proves no label reads.
pub fn train_selfsupervised(config: &TrainConfig, code: &CodeSpec) -> Result<TrainOutcome> {
    if config.scheme != TrainScheme::SelfSupervised {
        return Err(Error::validation("config scheme is not self-supervised"));
    }
    config.validate()?;

    let op = ReencodeOp::new(code);
    let mut model = build_model(code, &config.hidden, &mut derive_rng(config.seed, &[stream::INIT]))?;
    let mut adam = AdamState::new(&model);
    let schedule = config.schedule.with_total_steps(config.epochs)?;
    let source = ResolvedSource::resolve(&config.message_source, code.msg_len())?;
    let mut rng = derive_rng(config.noise.seed().unwrap_or(config.seed), &[stream::TRAIN]);

    // Learnable-w mode state: w = softplus(omega).
    let mut omega = softplus_inverse(config.loss.w);
    let mut omega_m = 0.0;
    let mut omega_v = 0.0;

    let batch = config.batch_size;
    let n = code.block_len();
    let rate = code.rate();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut label_reads = 0u64;
    let mut samples = 0u64;

    for epoch in 0..config.epochs {
        let mut y = Tensor2::zeros(batch, n);
        let mut drawn = Vec::with_capacity(batch);
        for b in 0..batch {
            let msg = message_from_index(source.draw(code.msg_len(), &mut rng), code.msg_len());
            let x = code.encode(&msg)?;
            drawn.push(msg);
            let s = bpsk_modulate(&x);
            let ebn0 = config.noise.draw_ebn0_db(&mut rng);
            let sigma = ebn0_to_sigma(ebn0, rate)?;
            y.row_mut(b).copy_from_slice(&awgn(&s, sigma, &mut rng));
        }
        // Encoding is done; messages go behind the counter and are never
        // read again on this path.
        let vault = LabelVault::new(drawn);
        samples += batch as u64;

        let w = if config.loss.learnable_w { softplus(omega) } else { config.loss.w };
        let (_, cache) = model.forward(&y)?;
        let v = cache.output();
        let (loss, v_grad, reg_mean) = op.selfsup_loss_parts(&v, &y, w, config.loss.eps)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let (grads, _) = model.backward(&cache, &v_grad)?;
        let lr = schedule.lr_at(epoch)?;
        crate::nn::adam_step(&mut model, &grads, &mut adam, lr, &config.optimizer)?;
        if config.loss.learnable_w {
            let d_omega = sigmoid(omega) * reg_mean;
            adam_update_slice(
                std::slice::from_mut(&mut omega),
                &[d_omega],
                std::slice::from_mut(&mut omega_m),
                std::slice::from_mut(&mut omega_v),
                adam.step_count(),
                lr,
                &config.optimizer,
            );
        }
        loss_trace.push(loss);
        label_reads += vault.reads();
    }

    let final_w = if config.loss.learnable_w { softplus(omega) } else { config.loss.w };
    Ok(TrainOutcome {
        checkpoint: Checkpoint::from_model(&model, code, config, loss_trace, final_w),
        label_reads,
        samples_consumed: samples,
    })
}

/// Train the conventional supervised baseline: the full codebook (or the
/// fixed subset) is passed once per epoch, the output head is logistic, and
/// the loss is binary cross-entropy against the true message bits.
pub fn train_supervised_baseline(config: &TrainConfig, code: &CodeSpec) -> Result<TrainOutcome> {
    if config.scheme != TrainScheme::SupervisedBaseline {
        return Err(Error::validation("config scheme is not the supervised baseline"));
    }
    config.validate()?;
    if code.msg_len() > crate::codebook::MAX_ENUM_MSG_LEN {
        return Err(Error::config(format!(
            "the baseline enumerates the codebook; K={} exceeds {}",
            code.msg_len(),
            crate::codebook::MAX_ENUM_MSG_LEN
        )));
    }

    let mut model = build_with_head(
        code,
        &config.hidden,
        Activation::Logistic,
        &mut derive_rng(config.seed, &[stream::INIT]),
    )?;
    let mut adam = AdamState::new(&model);
    let schedule = config.schedule.with_total_steps(config.epochs)?;
    let mut rng = derive_rng(config.noise.seed().unwrap_or(config.seed), &[stream::TRAIN]);

    let indices: Vec<u64> = match &config.message_source {
        MessageSource::Random => (0..(1u64 << code.msg_len())).collect(),
        MessageSource::CodebookSubset { percent, subset_seed } => {
            codebook_subset(code.msg_len(), *percent, *subset_seed)?
        }
    };
    let batch = indices.len();
    let n = code.block_len();
    let k = code.msg_len();
    let rate = code.rate();

    // Codewords and symbol rows are fixed across epochs.
    let messages: Vec<BitWord> = indices.iter().map(|&m| message_from_index(m, k)).collect();
    let symbols: Vec<Vec<f64>> = messages
        .iter()
        .map(|msg| Ok(bpsk_modulate(&code.encode(msg)?)))
        .collect::<Result<_>>()?;
    let vault = LabelVault::new(messages);

    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut samples = 0u64;
    for epoch in 0..config.epochs {
        let mut y = Tensor2::zeros(batch, n);
        for (b, s) in symbols.iter().enumerate() {
            let ebn0 = config.noise.draw_ebn0_db(&mut rng);
            let sigma = ebn0_to_sigma(ebn0, rate)?;
            y.row_mut(b).copy_from_slice(&awgn(s, sigma, &mut rng));
        }
        samples += batch as u64;

        // Supervision: targets are the true message bits, via the vault.
        let mut targets = Tensor2::zeros(batch, k);
        for b in 0..batch {
            let bits = vault.read(b);
            for (t, &bit) in targets.row_mut(b).iter_mut().zip(bits) {
                *t = f64::from(bit);
            }
        }

        let (_, cache) = model.forward(&y)?;
        let (loss, dz) = bce_with_logits(cache.last_preact(), &targets)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let (grads, _) = model.backward_from_logits(&cache, &dz)?;
        let lr = schedule.lr_at(epoch)?;
        crate::nn::adam_step(&mut model, &grads, &mut adam, lr, &config.optimizer)?;
        loss_trace.push(loss);
    }

    let label_reads = vault.reads();
    Ok(TrainOutcome {
        checkpoint: Checkpoint::from_model(&model, code, config, loss_trace, config.loss.w),
        label_reads,
        samples_consumed: samples,
    })
}

/// Dispatch on the configured scheme.
pub fn train(config: &TrainConfig, code: &CodeSpec) -> Result<TrainOutcome> {
    match config.scheme {
        TrainScheme::SelfSupervised => train_selfsupervised(config, code),
        TrainScheme::SupervisedBaseline => train_supervised_baseline(config, code),
    }
}

/// Threshold a network output row into message bits, respecting the head:
/// a Tanh head decides bit 0 on non-negative values; a logistic head
/// decides bit 1 at probabilities >= 1/2.
pub fn decide_bits(values: &[f64], head: Activation) -> BitWord {
    match head {
        Activation::Logistic => values.iter().map(|&o| u8::from(o >= 0.5)).collect(),
        _ => values.iter().map(|&v| u8::from(v < 0.0)).collect(),
    }
}

/// One-shot neural decoding: a single forward pass, then the threshold rule.
pub fn nnd_decode(model: &MlpModel, y: &[f64]) -> Result<BitWord> {
    if y.len() != model.input_dim() {
        return Err(Error::validation(format!(
            "received word has {} values, model expects {}",
            y.len(),
            model.input_dim()
        )));
    }
    let input = Tensor2::from_vec(1, y.len(), y.to_vec())?;
    let out = model.infer(&input)?;
    Ok(decide_bits(out.row(0), model.output_activation()))
}

/// Batched one-shot decoding: one forward pass for all rows, order
/// preserving, identical to decoding each row alone.
pub fn nnd_decode_batch(model: &MlpModel, y: &Tensor2) -> Result<Vec<BitWord>> {
    let out = model.infer(y)?;
    let head = model.output_activation();
    Ok((0..out.rows()).map(|b| decide_bits(out.row(b), head)).collect())
}
