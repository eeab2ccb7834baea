use polarlab::codebook::{CodeSpec, InfoSetMethod};
use polarlab::nn::*;
use polarlab::rng::derive_rng;
use rand::Rng;

// End-to-end: d loss / d params for loss = selfsup(model(y), y).
#[test]
#[ignore]
fn probe_end_to_end_grad() {
    let code = CodeSpec::construct(4, 8, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap();
    let op = ReencodeOp::new(&code);
    let mut rng = derive_rng(5, &[50]);
    let dims = vec![16usize, 12, 8];
    let acts = vec![Activation::Relu, Activation::Tanh];
    let model = MlpModel::new(dims.clone(), acts.clone(), &mut rng).unwrap();
    let batch = 4;
    let y = Tensor2::from_vec(batch, 16, (0..batch*16).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect()).unwrap();
    let (w, eps) = (0.01, 1e-6);

    let loss_of = |weights: &[Tensor2], biases: &[Vec<f64>]| -> f64 {
        let m = MlpModel::from_parts(dims.clone(), weights.to_vec(), biases.to_vec(), acts.clone()).unwrap();
        let (v, _) = m.forward(&y).unwrap();
        op.selfsup_loss(&v, &y, w, eps).unwrap().0
    };

    let (_, cache) = model.forward(&y).unwrap();
    let v = cache.output();
    let (_, v_grad) = op.selfsup_loss(&v, &y, w, eps).unwrap();
    let (grads, _) = model.backward(&cache, &v_grad).unwrap();

    let mut worst = 0.0f64;
    for l in 0..2 {
        for probe_idx in [0usize, 3, 17, 40] {
            if probe_idx >= model.weights()[l].data().len() { continue; }
            let mut ws = model.weights().to_vec();
            let orig = ws[l].data()[probe_idx];
            ws[l].data_mut()[probe_idx] = orig + 1e-6;
            let up = loss_of(&ws, model.biases());
            ws[l].data_mut()[probe_idx] = orig - 1e-6;
            let down = loss_of(&ws, model.biases());
            let numeric = (up - down) / 2e-6;
            let analytic = grads.d_weights[l].data()[probe_idx];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(0.01);
            worst = worst.max(err);
            eprintln!("layer {l} idx {probe_idx}: analytic {analytic:.6e} numeric {numeric:.6e} rel {err:.2e}");
        }
    }
    assert!(worst < 1e-6, "worst {worst}");
}
