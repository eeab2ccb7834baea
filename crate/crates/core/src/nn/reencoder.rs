//! The differentiable re-encoder and the self-supervised loss.
//!
//! Binarizing the network output and re-encoding it over GF(2) would block
//! gradients, so the re-encoder works directly on real values: for output
//! column `j`, take the entries of `v` selected by the ones in column `j`
//! of the generator sub-matrix and multiply them together (an empty
//! selection yields 1). Because each `v_i` lies in (-1, 1) and signs encode
//! parity, the sign pattern of the result equals the BPSK image of the
//! GF(2) re-encoding — but the map stays differentiable everywhere.

use crate::codebook::CodeSpec;
use crate::error::{Error, Result};

use super::tensor::Tensor2;

/// Precomputed column supports of the generator sub-matrix: for each of the
/// N output positions, the (0-based) message indices whose generator rows
/// have a one there.
#[derive(Debug, Clone)]
pub struct ReencodeOp {
    supports: Vec<Vec<usize>>,
    msg_len: usize,
}

impl ReencodeOp {
    pub fn new(code: &CodeSpec) -> Self {
        let k = code.msg_len();
        let n = code.block_len();
        let mut supports = vec![Vec::new(); n];
        for (i, row) in code.gen_rows().iter().enumerate() {
            for (j, &bit) in row.iter().enumerate() {
                if bit == 1 {
                    supports[j].push(i);
                }
            }
        }
        ReencodeOp { supports, msg_len: k }
    }

    pub fn block_len(&self) -> usize {
        self.supports.len()
    }

    pub fn msg_len(&self) -> usize {
        self.msg_len
    }

    fn check_v(&self, v: &Tensor2) -> Result<()> {
        if v.cols() != self.msg_len {
            return Err(Error::validation(format!(
                "re-encoder input has {} columns, expected K={}",
                v.cols(),
                self.msg_len
            )));
        }
        Ok(())
    }

    /// Forward map: `r[b][j] = prod over i in support(j) of v[b][i]`.
    pub fn forward(&self, v: &Tensor2) -> Result<Tensor2> {
        self.check_v(v)?;
        let mut r = Tensor2::zeros(v.rows(), self.supports.len());
        for b in 0..v.rows() {
            let vb = v.row(b);
            let rb = r.row_mut(b);
            for (j, support) in self.supports.iter().enumerate() {
                rb[j] = support.iter().map(|&i| vb[i]).product();
            }
        }
        Ok(r)
    }

    /// Backward map. The leave-one-out products are recomputed via prefix
    /// and suffix products rather than by dividing out `v_i`, so zeros in
    /// `v` are handled exactly.
    pub fn backward(&self, v: &Tensor2, r_grad: &Tensor2) -> Result<Tensor2> {
        self.check_v(v)?;
        if r_grad.rows() != v.rows() || r_grad.cols() != self.supports.len() {
            return Err(Error::validation("re-encoder gradient shape mismatch".to_string()));
        }
        let mut v_grad = Tensor2::zeros(v.rows(), self.msg_len);
        let mut prefix: Vec<f64> = Vec::new();
        for b in 0..v.rows() {
            let vb = v.row(b);
            let gb = r_grad.row(b);
            let out = v_grad.row_mut(b);
            for (j, support) in self.supports.iter().enumerate() {
                let g = gb[j];
                if g == 0.0 || support.is_empty() {
                    continue;
                }
                // prefix[t] = product of the first t selected entries
                prefix.clear();
                prefix.push(1.0);
                for &i in support {
                    let last = *prefix.last().unwrap();
                    prefix.push(last * vb[i]);
                }
                let mut suffix = 1.0;
                for (t, &i) in support.iter().enumerate().rev() {
                    out[i] += g * prefix[t] * suffix;
                    suffix *= vb[i];
                }
            }
        }
        Ok(v_grad)
    }

    /// The self-supervised loss and its gradient with respect to `v`:
    ///
    /// `mean over batch of [ (1/N) Σ_j (r_j - y_j)^2  +  w (1/K) Σ_i 1/(|v_i| + eps) ]`
    ///
    /// The second term keeps the network away from the trivial all-zero
    /// output; `eps` guards its singularity. No message bits are involved:
    /// the only inputs are the network output and the channel output.
    pub fn selfsup_loss(
        &self,
        v: &Tensor2,
        y: &Tensor2,
        w: f64,
        eps: f64,
    ) -> Result<(f64, Tensor2)> {
        let (loss, v_grad, _) = self.selfsup_loss_parts(v, y, w, eps)?;
        Ok((loss, v_grad))
    }

    /// Like [`Self::selfsup_loss`] but also returns the mean regularizer
    /// value `(1/K) Σ 1/(|v_i| + eps)` before weighting, which is the
    /// gradient of the loss with respect to `w` (used by the learnable-`w`
    /// training mode).
    pub fn selfsup_loss_parts(
        &self,
        v: &Tensor2,
        y: &Tensor2,
        w: f64,
        eps: f64,
    ) -> Result<(f64, Tensor2, f64)> {
        self.check_v(v)?;
        if y.rows() != v.rows() || y.cols() != self.supports.len() {
            return Err(Error::validation(format!(
                "channel batch is {}x{}, expected {}x{}",
                y.rows(),
                y.cols(),
                v.rows(),
                self.supports.len()
            )));
        }
        if eps <= 0.0 {
            return Err(Error::validation("loss eps must be positive".to_string()));
        }
        let batch = v.rows() as f64;
        let n = self.supports.len() as f64;
        let k = self.msg_len as f64;

        let r = self.forward(v)?;
        let mut mse = 0.0;
        let mut r_grad = Tensor2::zeros(r.rows(), r.cols());
        for (i, (&ri, &yi)) in r.data().iter().zip(y.data()).enumerate() {
            let diff = ri - yi;
            mse += diff * diff;
            r_grad.data_mut()[i] = 2.0 * diff / (n * batch);
        }
        mse /= n * batch;

        let mut v_grad = self.backward(v, &r_grad)?;
        let mut reg_mean = 0.0;
        for (g, &vi) in v_grad.data_mut().iter_mut().zip(v.data()) {
            let denom = vi.abs() + eps;
            reg_mean += 1.0 / denom;
            // d/dv of 1/(|v|+eps) is -sign(v)/(|v|+eps)^2, zero at v = 0.
            *g += w * (-vi.signum_or_zero()) / (denom * denom) / (k * batch);
        }
        reg_mean /= k * batch;
        Ok((mse + w * reg_mean, v_grad, reg_mean))
    }
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }
}

/// Free-function form of [`ReencodeOp::forward`].
pub fn reencode_real(v: &Tensor2, code: &CodeSpec) -> Result<Tensor2> {
    ReencodeOp::new(code).forward(v)
}

/// Free-function form of [`ReencodeOp::backward`].
pub fn reencode_backward(v: &Tensor2, code: &CodeSpec, r_grad: &Tensor2) -> Result<Tensor2> {
    ReencodeOp::new(code).backward(v, r_grad)
}

/// Free-function form of [`ReencodeOp::selfsup_loss`].
pub fn selfsup_loss(
    v: &Tensor2,
    y: &Tensor2,
    code: &CodeSpec,
    w: f64,
    eps: f64,
) -> Result<(f64, Tensor2)> {
    ReencodeOp::new(code).selfsup_loss(v, y, w, eps)
}

/// Binary cross-entropy against targets, fused with the logistic head:
/// takes the last layer's *pre-activation* values and returns the loss and
/// the gradient with respect to those logits. Stable in both tails via
/// `softplus(z) - t z`.
pub fn bce_with_logits(logits: &Tensor2, targets: &Tensor2) -> Result<(f64, Tensor2)> {
    if logits.rows() != targets.rows() || logits.cols() != targets.cols() {
        return Err(Error::validation("cross-entropy shape mismatch".to_string()));
    }
    let count = (logits.rows() * logits.cols()) as f64;
    let mut loss = 0.0;
    let mut dz = Tensor2::zeros(logits.rows(), logits.cols());
    for (i, (&z, &t)) in logits.data().iter().zip(targets.data()).enumerate() {
        let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += softplus - t * z;
        dz.data_mut()[i] = (sigmoid(z) - t) / count;
    }
    Ok((loss / count, dz))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
