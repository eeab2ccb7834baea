//! Finite-difference verification of every analytic gradient, plus the
//! re-encoder/encoder sign-consistency battery.
//!
//! The central-difference oracle is deliberately independent of the
//! backward-pass code paths it checks: it only ever calls forward
//! evaluations with perturbed inputs.

use rand::Rng;

use crate::channel::{bpsk_modulate, hard_decision};
use crate::codebook::{CodeSpec, InfoSetMethod};
use crate::nn::{Activation, MlpModel, ReencodeOp, Tensor2};
use crate::rng::derive_rng;

/// Relative tolerance for analytic-vs-numeric gradient agreement.
pub const GRAD_TOL: f64 = 1e-6;
/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Relative error with the denominator floored at 0.01, so entries near
/// zero are compared absolutely (the finite-difference noise floor sits
/// around 1e-10 for O(1) losses).
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(0.01)
}

/// Central finite differences of a scalar function at `x`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub points: usize,
    pub max_rel_err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checks: Vec<CheckOutcome>,
    pub max_rel_err: f64,
    pub all_passed: bool,
}

impl GradCheckReport {
    fn push(&mut self, name: &str, points: usize, max_rel_err: f64) {
        let passed = max_rel_err <= GRAD_TOL;
        self.checks.push(CheckOutcome { name: name.to_string(), points, max_rel_err, passed });
        self.max_rel_err = self.max_rel_err.max(max_rel_err);
        self.all_passed &= passed;
    }
}

fn code_8_4() -> CodeSpec {
    CodeSpec::construct(3, 4, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap()
}

fn code_16_8() -> CodeSpec {
    CodeSpec::construct(4, 8, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap()
}

/// Random value with magnitude in [0.1, 1): keeps sample points away from
/// the |v| = 0 kink of the regularizer and the product map's zero locus.
fn bounded_away_from_zero<R: Rng>(rng: &mut R) -> f64 {
    let mag = 0.1 + 0.9 * rng.random::<f64>();
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Run the full battery. `corrupt` deliberately perturbs one analytic
/// gradient so callers can verify the battery actually fails (negative
/// control).
pub fn run_gradient_checks(seed: u64, corrupt: bool) -> GradCheckReport {
    let mut report =
        GradCheckReport { checks: Vec::new(), max_rel_err: 0.0, all_passed: true };
    check_mlp_backward(seed, corrupt, &mut report);
    check_reencode_backward(seed, &mut report);
    check_selfsup_loss(seed, &mut report);
    check_sign_consistency(&mut report);
    report
}

/// Every MLP parameter gradient and input gradient against central
/// differences, for a weighted-sum loss over the batch output.
fn check_mlp_backward(seed: u64, corrupt: bool, report: &mut GradCheckReport) {
    let mut rng = derive_rng(seed, &[11]);
    let dims = vec![6, 8, 5, 3];
    let acts = vec![Activation::Relu, Activation::Relu, Activation::Tanh];
    let model = MlpModel::new(dims.clone(), acts.clone(), &mut rng).unwrap();
    let batch = 3;
    let input = Tensor2::from_vec(
        batch,
        dims[0],
        (0..batch * dims[0]).map(|_| bounded_away_from_zero(&mut rng)).collect(),
    )
    .unwrap();
    let coeffs = Tensor2::from_vec(
        batch,
        3,
        (0..batch * 3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
    )
    .unwrap();
    let weighted_loss = |m: &MlpModel, x: &Tensor2| -> f64 {
        let (out, _) = m.forward(x).unwrap();
        out.data().iter().zip(coeffs.data()).map(|(o, c)| o * c).sum()
    };

    let (_, cache) = model.forward(&input).unwrap();
    let (mut grads, d_input) = model.backward(&cache, &coeffs).unwrap();
    if corrupt {
        grads.d_weights[0].data_mut()[0] += 1e-3;
    }

    let mut points = 0usize;
    let mut max_err = 0.0f64;
    for l in 0..grads.d_weights.len() {
        let w = &model.weights()[l];
        let mut fd = |flat: &[f64]| {
            let mut ws: Vec<Tensor2> = model.weights().to_vec();
            ws[l] = Tensor2::from_vec(w.rows(), w.cols(), flat.to_vec()).unwrap();
            let m =
                MlpModel::from_parts(dims.clone(), ws, model.biases().to_vec(), acts.clone())
                    .unwrap();
            weighted_loss(&m, &input)
        };
        let numeric = central_difference(&mut fd, w.data(), FD_STEP);
        for (a, n) in grads.d_weights[l].data().iter().zip(&numeric) {
            max_err = max_err.max(relative_error(*a, *n));
            points += 1;
        }

        let b = &model.biases()[l];
        let mut fd = |flat: &[f64]| {
            let mut bs = model.biases().to_vec();
            bs[l] = flat.to_vec();
            let m =
                MlpModel::from_parts(dims.clone(), model.weights().to_vec(), bs, acts.clone())
                    .unwrap();
            weighted_loss(&m, &input)
        };
        let numeric = central_difference(&mut fd, b, FD_STEP);
        for (a, n) in grads.d_biases[l].iter().zip(&numeric) {
            max_err = max_err.max(relative_error(*a, *n));
            points += 1;
        }
    }

    let mut fd = |flat: &[f64]| {
        let x = Tensor2::from_vec(batch, dims[0], flat.to_vec()).unwrap();
        weighted_loss(&model, &x)
    };
    let numeric = central_difference(&mut fd, input.data(), FD_STEP);
    for (a, n) in d_input.data().iter().zip(&numeric) {
        max_err = max_err.max(relative_error(*a, *n));
        points += 1;
    }
    report.push("mlp_backward", points, max_err);
}

/// Re-encoder backward against central differences, loss = sum(c .* r).
fn check_reencode_backward(seed: u64, report: &mut GradCheckReport) {
    let mut rng = derive_rng(seed, &[12]);
    let mut points = 0usize;
    let mut max_err = 0.0f64;
    for (code, trials) in [(code_8_4(), 10usize), (code_16_8(), 8usize)] {
        let op = ReencodeOp::new(&code);
        let (k, n) = (code.msg_len(), code.block_len());
        for _ in 0..trials {
            let batch = 2;
            let v = Tensor2::from_vec(
                batch,
                k,
                (0..batch * k).map(|_| bounded_away_from_zero(&mut rng)).collect(),
            )
            .unwrap();
            let coeffs = Tensor2::from_vec(
                batch,
                n,
                (0..batch * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
            )
            .unwrap();
            let analytic = op.backward(&v, &coeffs).unwrap();
            let mut fd = |flat: &[f64]| {
                let vv = Tensor2::from_vec(batch, k, flat.to_vec()).unwrap();
                let r = op.forward(&vv).unwrap();
                r.data().iter().zip(coeffs.data()).map(|(a, b)| a * b).sum()
            };
            let numeric = central_difference(&mut fd, v.data(), FD_STEP);
            for (a, nu) in analytic.data().iter().zip(&numeric) {
                max_err = max_err.max(relative_error(*a, *nu));
                points += 1;
            }
        }
    }
    report.push("reencode_backward", points, max_err);
}

/// Full self-supervised loss gradient (MSE through the re-encoder plus the
/// regularizer) against central differences.
fn check_selfsup_loss(seed: u64, report: &mut GradCheckReport) {
    let mut rng = derive_rng(seed, &[13]);
    let code = code_8_4();
    let op = ReencodeOp::new(&code);
    let (k, n) = (code.msg_len(), code.block_len());
    let (w, eps) = (0.01, 1e-6);
    let mut points = 0usize;
    let mut max_err = 0.0f64;
    for _ in 0..8 {
        let batch = 4;
        let v = Tensor2::from_vec(
            batch,
            k,
            (0..batch * k).map(|_| bounded_away_from_zero(&mut rng)).collect(),
        )
        .unwrap();
        let y = Tensor2::from_vec(
            batch,
            n,
            (0..batch * n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect(),
        )
        .unwrap();
        let (_, analytic) = op.selfsup_loss(&v, &y, w, eps).unwrap();
        let mut fd = |flat: &[f64]| {
            let vv = Tensor2::from_vec(batch, k, flat.to_vec()).unwrap();
            op.selfsup_loss(&vv, &y, w, eps).unwrap().0
        };
        let numeric = central_difference(&mut fd, v.data(), FD_STEP);
        for (a, nu) in analytic.data().iter().zip(&numeric) {
            max_err = max_err.max(relative_error(*a, *nu));
            points += 1;
        }
    }
    report.push("selfsup_loss", points, max_err);
}

/// Exhaustive sign-pattern consistency: sign(reencode(v)) must equal the
/// BPSK image of encoding the binarized v, over all 2^K patterns.
fn check_sign_consistency(report: &mut GradCheckReport) {
    let mut worst = 0.0f64;
    let mut points = 0usize;
    for code in [code_8_4(), code_16_8()] {
        let op = ReencodeOp::new(&code);
        let k = code.msg_len();
        for pattern in 0..(1u32 << k) {
            let v_row: Vec<f64> = (0..k)
                .map(|i| if (pattern >> i) & 1 == 0 { 0.5 } else { -0.5 })
                .collect();
            let v = Tensor2::from_vec(1, k, v_row.clone()).unwrap();
            let r = op.forward(&v).unwrap();
            let expected = bpsk_modulate(&code.encode(&hard_decision(&v_row)).unwrap());
            points += 1;
            for (rj, ej) in r.data().iter().zip(&expected) {
                if rj * ej <= 0.0 {
                    worst = 1.0;
                }
            }
        }
    }
    report.push("reencoder_sign_consistency", points, worst);
}
