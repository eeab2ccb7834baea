//! Polar code laboratory: encoding, classic decoders, a self-supervised
//! neural decoder, and a deterministic Monte Carlo BER/BLER harness.
//!
//! The crate is organized around the transmission pipeline
//!
//! ```text
//! message --encode--> codeword --BPSK--> symbols --AWGN--> noisy word --decode--> message
//! ```
//!
//! - [`codebook`]: generator matrix construction, information-set selection,
//!   encoding, Hamming metrics, and the bounded-distance reference decoder.
//! - [`channel`]: BPSK, Eb/N0-parameterized AWGN, hard decisions, LLRs.
//! - [`decoders`]: brute-force MAP, successive cancellation, min-sum belief
//!   propagation.
//! - [`nn`]: a small dense-tensor engine with reverse-mode gradients, the
//!   differentiable re-encoder, Adam, and a one-cycle LR schedule.
//! - [`nnd`]: the neural decoder itself -- self-supervised training (no
//!   message labels), a conventional supervised baseline, checkpoints.
//! - [`eval`]: Monte Carlo sweeps, the generalization experiment protocol,
//!   and CSV/JSON report emission.
//! - [`config`]: the JSON run configuration shared by the CLI and tests.

pub mod channel;
pub mod codebook;
pub mod config;
pub mod decoders;
pub mod error;
pub mod eval;
pub mod gencheck;
pub mod nn;
pub mod nnd;
pub mod rng;

pub use error::{Error, Result};
