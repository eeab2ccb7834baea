//! Monte Carlo BER/BLER sweeps, the generalization experiment protocol,
//! and report emission.
//!
//! Every block owns an RNG stream keyed by `(seed, point index, block
//! index)`, and chunk boundaries are fixed constants, so reports are
//! invariant to the worker count and to scheduling. Counters merge by
//! integer addition, which is order-independent.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    awgn, bpsk_modulate, ebn0_to_sigma, hard_decision, llr_from_awgn, SIGMA_CONVENTION,
};
use crate::codebook::{hamming_distance, message_from_index, BitWord, CodeSpec, Codebook};
use crate::decoders::{bp_decode, map_decode, sc_decode, DecoderKind};
use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::nnd::{nnd_decode, Checkpoint};
use crate::rng::{derive_rng, stream};

/// Fixed evaluation chunk; results are checked against the stop rule only
/// at chunk boundaries so that early stopping cannot depend on scheduling.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    /// Simulate at least this many blocks per point.
    #[serde(default = "default_min_blocks")]
    pub min_blocks: u64,
    /// Hard cap on blocks per point.
    #[serde(default = "default_max_blocks")]
    pub max_blocks: u64,
    /// Stop once this many block errors have been observed (after
    /// `min_blocks`).
    #[serde(default = "default_target_errors")]
    pub target_block_errors: u64,
}

fn default_min_blocks() -> u64 {
    10_000
}
fn default_max_blocks() -> u64 {
    1_000_000
}
fn default_target_errors() -> u64 {
    100
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_blocks: default_min_blocks(),
            max_blocks: default_max_blocks(),
            target_block_errors: default_target_errors(),
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_blocks == 0 || self.min_blocks > self.max_blocks {
            return Err(Error::validation(format!(
                "stop rule requires 1 <= min_blocks <= max_blocks, got {} and {}",
                self.min_blocks, self.max_blocks
            )));
        }
        Ok(())
    }
}

/// Where evaluation messages come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalMessageSource {
    /// Uniform over all 2^K messages.
    Uniform,
    /// Uniform over a fixed list of message indices (generalization runs).
    FromSet(Vec<u64>),
}

impl EvalMessageSource {
    fn draw<R: Rng>(&self, msg_len: usize, rng: &mut R) -> u64 {
        match self {
            EvalMessageSource::Uniform => rng.random::<u64>() & ((1u64 << msg_len) - 1),
            EvalMessageSource::FromSet(list) => list[rng.random_range(0..list.len())],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub ebn0_points: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
    pub message_source: EvalMessageSource,
}

impl SweepConfig {
    pub fn new(ebn0_points: Vec<f64>, stop: StopRule, seed: u64) -> Self {
        SweepConfig { ebn0_points, stop, seed, message_source: EvalMessageSource::Uniform }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ebn0_points.is_empty() {
            return Err(Error::validation("sweep needs at least one Eb/N0 point"));
        }
        if let EvalMessageSource::FromSet(list) = &self.message_source {
            if list.is_empty() {
                return Err(Error::validation("evaluation message set is empty"));
            }
        }
        self.stop.validate()
    }
}

/// Counters and derived rates for one Eb/N0 point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub ebn0_db: f64,
    pub blocks: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub bler: f64,
}

/// One decoder's sweep results plus everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub decoder: String,
    pub code: CodeSpec,
    pub seed: u64,
    pub sigma_convention: String,
    /// Checkpoint reference for neural decoders.
    pub checkpoint: Option<String>,
    /// Hash of the resolved run configuration, when driven by the CLI.
    pub config_hash: Option<String>,
    /// Generalization label: "random", "unseen", or "seen".
    pub label: Option<String>,
    /// True when the sweep was skipped (e.g. the unseen set is empty).
    pub skipped: bool,
    pub points: Vec<PointReport>,
}

impl EvalReport {
    fn new(decoder: String, code: &CodeSpec, seed: u64) -> Self {
        EvalReport {
            decoder,
            code: code.clone(),
            seed,
            sigma_convention: SIGMA_CONVENTION.to_string(),
            checkpoint: None,
            config_hash: None,
            label: None,
            skipped: false,
            points: Vec::new(),
        }
    }
}

/// A decoder kind resolved against a concrete code: brute-force tables
/// built, checkpoints loaded. Immutable and shareable across workers.
pub struct ResolvedDecoder {
    label: String,
    checkpoint: Option<String>,
    code: CodeSpec,
    imp: DecoderImpl,
}

enum DecoderImpl {
    Map(Codebook),
    Sc,
    Bp { iterations: usize },
    Bdd(Codebook),
    Nnd(MlpModel),
}

/// A decode attempt: the message estimate plus whether the decoder reported
/// a detected failure (bounded-distance "error" outcome). A detected
/// failure always counts as a block error; its bit errors are counted
/// against the uncorrected hard-decision estimate.
struct DecodeOutcome {
    message: BitWord,
    detected_failure: bool,
}

impl ResolvedDecoder {
    pub fn resolve(kind: &DecoderKind, code: &CodeSpec) -> Result<Self> {
        kind.validate()?;
        let imp = match kind {
            DecoderKind::Map => DecoderImpl::Map(Codebook::new(code)?),
            DecoderKind::Sc => DecoderImpl::Sc,
            DecoderKind::Bp { iterations } => DecoderImpl::Bp { iterations: *iterations },
            DecoderKind::BoundedDistance => DecoderImpl::Bdd(Codebook::new(code)?),
            DecoderKind::Nnd { checkpoint } => {
                let ckpt = Checkpoint::load(checkpoint)?;
                if ckpt.code != *code {
                    return Err(Error::config(format!(
                        "checkpoint {checkpoint} was trained for a different code"
                    )));
                }
                return Ok(ResolvedDecoder {
                    label: kind.label(),
                    checkpoint: Some(checkpoint.clone()),
                    code: code.clone(),
                    imp: DecoderImpl::Nnd(ckpt.model()?),
                });
            }
        };
        Ok(ResolvedDecoder { label: kind.label(), checkpoint: None, code: code.clone(), imp })
    }

    /// Wrap an in-memory model (used by the generalization driver).
    pub fn from_model(model: MlpModel, code: &CodeSpec, label: impl Into<String>) -> Self {
        ResolvedDecoder {
            label: label.into(),
            checkpoint: None,
            code: code.clone(),
            imp: DecoderImpl::Nnd(model),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn decode(&self, y: &[f64], sigma: f64) -> Result<DecodeOutcome> {
        let message = match &self.imp {
            DecoderImpl::Map(cb) => map_decode(y, cb)?,
            DecoderImpl::Sc => sc_decode(&llr_from_awgn(y, sigma), &self.code)?,
            DecoderImpl::Bp { iterations } => {
                bp_decode(&llr_from_awgn(y, sigma), &self.code, *iterations)?
            }
            DecoderImpl::Bdd(cb) => {
                let hard = hard_decision(y);
                match cb.bounded_distance_decode(&hard)? {
                    Some(msg) => msg,
                    None => {
                        return Ok(DecodeOutcome {
                            message: self.code.raw_message_estimate(&hard)?,
                            detected_failure: true,
                        })
                    }
                }
            }
            DecoderImpl::Nnd(model) => nnd_decode(model, y)?,
        };
        Ok(DecodeOutcome { message, detected_failure: false })
    }
}

/// Simulate one block end to end and tally it against the truth.
fn run_block(
    code: &CodeSpec,
    decoder: &ResolvedDecoder,
    source: &EvalMessageSource,
    sigma: f64,
    seed: u64,
    point: u64,
    block: u64,
) -> Result<(u64, u64)> {
    let mut rng = derive_rng(seed, &[stream::SWEEP_BLOCK, point, block]);
    let msg = message_from_index(source.draw(code.msg_len(), &mut rng), code.msg_len());
    let x = code.encode(&msg)?;
    let y = awgn(&bpsk_modulate(&x), sigma, &mut rng);
    let outcome = decoder.decode(&y, sigma)?;
    let bit_errors = hamming_distance(&outcome.message, &msg)? as u64;
    let block_error = u64::from(bit_errors > 0 || outcome.detected_failure);
    Ok((bit_errors, block_error))
}

/// Run a full sweep for one decoder.
pub fn run_sweep(
    code: &CodeSpec,
    decoder: &ResolvedDecoder,
    config: &SweepConfig,
) -> Result<EvalReport> {
    config.validate()?;
    let mut report = EvalReport::new(decoder.label().to_string(), code, config.seed);
    report.checkpoint = decoder.checkpoint.clone();
    for (p, &ebn0) in config.ebn0_points.iter().enumerate() {
        let sigma = ebn0_to_sigma(ebn0, code.rate())?;
        let mut blocks = 0u64;
        let mut bit_errors = 0u64;
        let mut block_errors = 0u64;
        while blocks < config.stop.max_blocks {
            let end = (blocks + CHUNK).min(config.stop.max_blocks);
            let (bits, blks) = (blocks..end)
                .into_par_iter()
                .map(|b| {
                    run_block(code, decoder, &config.message_source, sigma, config.seed, p as u64, b)
                        .expect("block simulation cannot fail on validated inputs")
                })
                .reduce(|| (0, 0), |a, c| (a.0 + c.0, a.1 + c.1));
            bit_errors += bits;
            block_errors += blks;
            blocks = end;
            if blocks >= config.stop.min_blocks
                && block_errors >= config.stop.target_block_errors
            {
                break;
            }
        }
        report.points.push(point_report(ebn0, blocks, bit_errors, block_errors, code.msg_len()));
    }
    Ok(report)
}

/// Run several decoders over common random numbers: every block's message
/// and noise realization is shared across decoders, which sharpens BLER
/// comparisons. Each point runs exactly `stop.min_blocks` blocks.
pub fn run_paired_sweep(
    code: &CodeSpec,
    decoders: &[ResolvedDecoder],
    config: &SweepConfig,
) -> Result<Vec<EvalReport>> {
    config.validate()?;
    if decoders.is_empty() {
        return Err(Error::validation("paired sweep needs at least one decoder"));
    }
    let mut reports: Vec<EvalReport> = decoders
        .iter()
        .map(|d| {
            let mut r = EvalReport::new(d.label().to_string(), code, config.seed);
            r.checkpoint = d.checkpoint.clone();
            r
        })
        .collect();
    let blocks = config.stop.min_blocks;
    for (p, &ebn0) in config.ebn0_points.iter().enumerate() {
        let sigma = ebn0_to_sigma(ebn0, code.rate())?;
        let zero = || vec![(0u64, 0u64); decoders.len()];
        let tallies = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = derive_rng(config.seed, &[stream::SWEEP_BLOCK, p as u64, b]);
                let msg = message_from_index(
                    config.message_source.draw(code.msg_len(), &mut rng),
                    code.msg_len(),
                );
                let x = code.encode(&msg).expect("validated code");
                let y = awgn(&bpsk_modulate(&x), sigma, &mut rng);
                decoders
                    .iter()
                    .map(|d| {
                        let out = d.decode(&y, sigma).expect("validated decoder");
                        let bits = hamming_distance(&out.message, &msg).unwrap() as u64;
                        (bits, u64::from(bits > 0 || out.detected_failure))
                    })
                    .collect::<Vec<_>>()
            })
            .reduce(zero, |mut a, c| {
                for (ai, ci) in a.iter_mut().zip(&c) {
                    ai.0 += ci.0;
                    ai.1 += ci.1;
                }
                a
            });
        for (report, (bits, blks)) in reports.iter_mut().zip(&tallies) {
            report.points.push(point_report(ebn0, blocks, *bits, *blks, code.msg_len()));
        }
    }
    Ok(reports)
}

fn point_report(
    ebn0_db: f64,
    blocks: u64,
    bit_errors: u64,
    block_errors: u64,
    msg_len: usize,
) -> PointReport {
    debug_assert!(block_errors <= blocks);
    debug_assert!(bit_errors <= block_errors * msg_len as u64);
    PointReport {
        ebn0_db,
        blocks,
        bit_errors,
        block_errors,
        ber: bit_errors as f64 / (blocks as f64 * msg_len as f64),
        bler: block_errors as f64 / blocks as f64,
    }
}

/// The three evaluations of a generalization experiment.
pub struct GeneralizationReports {
    /// Uniform random messages.
    pub random: EvalReport,
    /// Only messages the model never saw during training (skipped at
    /// p = 100).
    pub unseen: EvalReport,
    /// Only messages from the training subset (extra diagnostic).
    pub seen: EvalReport,
}

/// Train (per the given config, whose message source must be a codebook
/// subset) and evaluate on random / unseen / seen message sets.
pub fn run_generalization(
    code: &CodeSpec,
    train_config: &crate::nnd::TrainConfig,
    stop: &StopRule,
    ebn0_points: &[f64],
    eval_seed: u64,
) -> Result<(crate::nnd::TrainOutcome, GeneralizationReports)> {
    let (percent, subset_seed) = match train_config.message_source {
        crate::nnd::MessageSource::CodebookSubset { percent, subset_seed } => {
            (percent, subset_seed)
        }
        crate::nnd::MessageSource::Random => {
            return Err(Error::validation(
                "generalization runs need a codebook-subset message source",
            ))
        }
    };
    let outcome = crate::nnd::train(train_config, code)?;
    let model = outcome.checkpoint.model()?;
    let seen_set = crate::nnd::codebook_subset(code.msg_len(), percent, subset_seed)?;
    let unseen_set = crate::nnd::subset_complement(code.msg_len(), &seen_set);
    let decoder = ResolvedDecoder::from_model(model, code, "nnd");

    let sweep = |source: EvalMessageSource| -> Result<EvalReport> {
        let config = SweepConfig {
            ebn0_points: ebn0_points.to_vec(),
            stop: *stop,
            seed: eval_seed,
            message_source: source,
        };
        run_sweep(code, &decoder, &config)
    };

    let mut random = sweep(EvalMessageSource::Uniform)?;
    random.label = Some("random".to_string());
    let mut unseen = if unseen_set.is_empty() {
        let mut r = EvalReport::new("nnd".to_string(), code, eval_seed);
        r.skipped = true;
        r
    } else {
        sweep(EvalMessageSource::FromSet(unseen_set))?
    };
    unseen.label = Some("unseen".to_string());
    let mut seen = sweep(EvalMessageSource::FromSet(seen_set))?;
    seen.label = Some("seen".to_string());

    Ok((outcome, GeneralizationReports { random, unseen, seen }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Serialize a report. CSV columns are fixed:
/// `decoder,ebn0_db,blocks,bit_errors,block_errors,ber,bler,seed,code,info_set,checkpoint`.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut out = String::from(
                "decoder,ebn0_db,blocks,bit_errors,block_errors,ber,bler,seed,code,info_set,checkpoint\n",
            );
            let code_tag = format!("N{}K{}", report.code.block_len(), report.code.msg_len());
            let info_tag = report
                .code
                .info_set()
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("-");
            let ckpt = report.checkpoint.as_deref().unwrap_or("-");
            for p in &report.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    report.decoder,
                    p.ebn0_db,
                    p.blocks,
                    p.bit_errors,
                    p.block_errors,
                    p.ber,
                    p.bler,
                    report.seed,
                    code_tag,
                    info_tag,
                    ckpt
                ));
            }
            Ok(out)
        }
    }
}

/// Write a report to disk.
pub fn emit_report(report: &EvalReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let rendered = render_report(report, format)?;
    let mut file = fs::File::create(path)?;
    file.write_all(rendered.as_bytes())?;
    Ok(())
}

/// Load a JSON report back.
pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::InfoSetMethod;

    fn code_16_8() -> CodeSpec {
        CodeSpec::construct(4, 8, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap()
    }

    fn quick_stop(blocks: u64) -> StopRule {
        StopRule { min_blocks: blocks, max_blocks: blocks, target_block_errors: u64::MAX }
    }

    #[test]
    fn map_is_exact_in_the_noiseless_limit() {
        let code = code_16_8();
        let decoder = ResolvedDecoder::resolve(&DecoderKind::Map, &code).unwrap();
        let config = SweepConfig::new(vec![60.0], quick_stop(10_000), 7);
        let report = run_sweep(&code, &decoder, &config).unwrap();
        assert_eq!(report.points[0].block_errors, 0);
        assert_eq!(report.points[0].bit_errors, 0);
        assert_eq!(report.points[0].blocks, 10_000);
    }

    #[test]
    fn reports_are_deterministic_and_worker_invariant() {
        let code = code_16_8();
        let decoder = ResolvedDecoder::resolve(&DecoderKind::Sc, &code).unwrap();
        let config = SweepConfig::new(vec![2.0, 4.0], quick_stop(4096), 99);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool3 = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = pool1.install(|| run_sweep(&code, &decoder, &config)).unwrap();
        let b = pool3.install(|| run_sweep(&code, &decoder, &config)).unwrap();
        let c = pool3.install(|| run_sweep(&code, &decoder, &config)).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!(
            render_report(&a, ReportFormat::Csv).unwrap(),
            render_report(&b, ReportFormat::Csv).unwrap()
        );
    }

    #[test]
    fn counters_stay_consistent() {
        let code = code_16_8();
        for kind in [
            DecoderKind::Sc,
            DecoderKind::Bp { iterations: 8 },
            DecoderKind::BoundedDistance,
        ] {
            let decoder = ResolvedDecoder::resolve(&kind, &code).unwrap();
            let config = SweepConfig::new(vec![1.0, 4.0], quick_stop(2048), 3);
            let report = run_sweep(&code, &decoder, &config).unwrap();
            for p in &report.points {
                assert!(p.block_errors <= p.blocks);
                assert!(p.bit_errors <= p.block_errors * 8);
                assert!(p.ber <= p.bler);
                assert!((0.0..=1.0).contains(&p.bler));
            }
        }
    }

    #[test]
    fn stop_rule_halts_after_enough_errors() {
        let code = code_16_8();
        let decoder = ResolvedDecoder::resolve(&DecoderKind::Sc, &code).unwrap();
        // At 0 dB errors are frequent; one chunk should already satisfy the
        // target, so the sweep must stop at min_blocks, not max_blocks.
        let stop = StopRule { min_blocks: 8192, max_blocks: 1 << 20, target_block_errors: 50 };
        let mut config = SweepConfig::new(vec![0.0], stop, 5);
        config.stop = stop;
        let report = run_sweep(&code, &decoder, &config).unwrap();
        assert_eq!(report.points[0].blocks, 8192);
        assert!(report.points[0].block_errors >= 50);
    }

    #[test]
    fn paired_sweep_orders_map_before_sc() {
        let code = code_16_8();
        let decoders = vec![
            ResolvedDecoder::resolve(&DecoderKind::Map, &code).unwrap(),
            ResolvedDecoder::resolve(&DecoderKind::Sc, &code).unwrap(),
        ];
        let config = SweepConfig::new(vec![4.0], quick_stop(20_000), 11);
        let reports = run_paired_sweep(&code, &decoders, &config).unwrap();
        assert_eq!(reports[0].seed, reports[1].seed);
        let (map, sc) = (&reports[0].points[0], &reports[1].points[0]);
        assert!(map.blocks == sc.blocks);
        assert!(
            map.block_errors <= sc.block_errors,
            "MAP {} vs SC {}",
            map.block_errors,
            sc.block_errors
        );
        assert!(sc.block_errors > 0, "expected SC errors at 4 dB");
    }

    #[test]
    fn bdd_failures_count_as_block_errors() {
        let code = code_16_8();
        let decoder = ResolvedDecoder::resolve(&DecoderKind::BoundedDistance, &code).unwrap();
        let config = SweepConfig::new(vec![2.0], quick_stop(4096), 13);
        let report = run_sweep(&code, &decoder, &config).unwrap();
        // r = 1 for this code, so failures are common at 2 dB.
        assert!(report.points[0].block_errors > 0);
    }

    #[test]
    fn csv_shape_and_empty_report() {
        let code = code_16_8();
        let mut report = EvalReport::new("map".to_string(), &code, 1);
        let csv = render_report(&report, ReportFormat::Csv).unwrap();
        assert_eq!(
            csv,
            "decoder,ebn0_db,blocks,bit_errors,block_errors,ber,bler,seed,code,info_set,checkpoint\n"
        );
        report.points.push(point_report(4.0, 1000, 16, 8, 8));
        let csv = render_report(&report, ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "map,4,1000,16,8,0.002,0.008,1,N16K8,8-10-11-12-13-14-15-16,-");
    }

    #[test]
    fn json_report_round_trips() {
        let code = code_16_8();
        let decoder = ResolvedDecoder::resolve(&DecoderKind::Sc, &code).unwrap();
        let config = SweepConfig::new(vec![3.0], quick_stop(1024), 21);
        let report = run_sweep(&code, &decoder, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        emit_report(&report, ReportFormat::Json, &path).unwrap();
        assert_eq!(load_report(&path).unwrap(), report);
    }

    #[test]
    fn sweep_config_validation() {
        let code = code_16_8();
        let decoder = ResolvedDecoder::resolve(&DecoderKind::Sc, &code).unwrap();
        let empty = SweepConfig::new(vec![], quick_stop(10), 0);
        assert!(run_sweep(&code, &decoder, &empty).is_err());
        let bad_stop = SweepConfig::new(
            vec![1.0],
            StopRule { min_blocks: 10, max_blocks: 5, target_block_errors: 1 },
            0,
        );
        assert!(run_sweep(&code, &decoder, &bad_stop).is_err());
    }
}
