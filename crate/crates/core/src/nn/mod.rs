//! A minimal dense-tensor engine with reverse-mode gradients.
//!
//! Exactly the operations the neural decoder needs: batched affine layers
//! with ReLU/Tanh/Logistic activations, the differentiable re-encoder and
//! its self-supervised loss, Adam, and a one-cycle learning-rate schedule.
//! Everything runs in f64; reductions use fixed summation order so results
//! are bit-identical across runs and worker counts.

mod mlp;
mod optim;
mod reencoder;
mod tensor;

pub use mlp::{
    forward_call_count, reset_forward_call_count, Activation, ForwardCache, Gradients, MlpModel,
};
pub use optim::{adam_step, adam_update_slice, AdamParams, AdamState, OneCycleSchedule};
pub use reencoder::{bce_with_logits, reencode_backward, reencode_real, selfsup_loss, ReencodeOp};
pub use tensor::Tensor2;
