use polarlab::channel::NoiseSpec;
use polarlab::codebook::{CodeSpec, InfoSetMethod, Codebook, message_from_index};
use polarlab::nn::AdamParams;
use polarlab::nnd::*;

fn noiseless_score(code: &CodeSpec, model: &polarlab::nn::MlpModel) -> usize {
    let cb = Codebook::new(code).unwrap();
    (0..256u64).filter(|&m| {
        let y = polarlab::channel::bpsk_modulate(cb.codeword(m));
        nnd_decode(model, &y).unwrap() == message_from_index(m, 8)
    }).count()
}

#[test]
#[ignore]
fn probe_clean_selfsup() {
    let code = CodeSpec::construct(4, 8, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap();
    for (label, noise, epochs, max_lr) in [
        ("clean-lr1e-3", NoiseSpec::FixedDb { value: 20.0, seed: None }, 4096usize, 1e-3),
        ("clean-lr1e-2", NoiseSpec::FixedDb { value: 20.0, seed: None }, 4096, 1e-2),
    ] {
        let config = TrainConfig {
            scheme: TrainScheme::SelfSupervised,
            epochs,
            batch_size: 256,
            message_source: MessageSource::Random,
            noise,
            loss: LossConfig::default(),
            optimizer: AdamParams::default(),
            schedule: ScheduleConfig { max_lr, ..Default::default() },
            hidden: vec![128, 64, 32],
            seed: 9000,
        };
        let outcome = train_selfsupervised(&config, &code).unwrap();
        let trace = &outcome.checkpoint.loss_trace;
        let model = outcome.checkpoint.model().unwrap();
        eprintln!("{label}: loss {:.4} -> {:.4}, noiseless {}/256",
            trace[0], trace[trace.len()-1], noiseless_score(&code, &model));
    }
}

#[test]
#[ignore]
fn probe_baseline() {
    let code = CodeSpec::construct(4, 8, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap();
    let config = TrainConfig {
        scheme: TrainScheme::SupervisedBaseline,
        epochs: 4096,
        batch_size: 1,
        message_source: MessageSource::Random,
        noise: NoiseSpec::FixedDb { value: 1.0, seed: None },
        loss: LossConfig::default(),
        optimizer: AdamParams::default(),
        schedule: ScheduleConfig::default(),
        hidden: vec![128, 64, 32],
        seed: 9000,
    };
    let outcome = train_supervised_baseline(&config, &code).unwrap();
    let trace = &outcome.checkpoint.loss_trace;
    let model = outcome.checkpoint.model().unwrap();
    eprintln!("baseline: loss {:.4} -> {:.4}, noiseless {}/256",
        trace[0], trace[trace.len()-1], noiseless_score(&code, &model));
}
