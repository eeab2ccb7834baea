use polarlab::channel::{awgn, bpsk_modulate, llr_from_awgn};
use polarlab::codebook::{polar_transform, BitWord, CodeSpec, Codebook, InfoSetMethod};
use polarlab::decoders::sc_decode;
use polarlab::rng::derive_rng;
use rand::Rng;

fn oracle_llrs(y: &[f64], sigma: f64, code: &CodeSpec) -> (BitWord, Vec<f64>) {
    let n = code.block_len();
    let frozen = code.frozen_mask();
    let log_w: Vec<f64> = (0..(1u64 << n))
        .map(|raw| {
            let mut u: BitWord = (0..n).map(|i| ((raw >> i) & 1) as u8).collect();
            polar_transform(&mut u);
            let s = bpsk_modulate(&u);
            -y.iter().zip(&s).map(|(yi, si)| (yi - si) * (yi - si)).sum::<f64>() / (2.0 * sigma * sigma)
        })
        .collect();
    let mut alive: Vec<u64> = (0..(1u64 << n)).collect();
    let mut decided = vec![0u8; n];
    let mut llrs = vec![f64::NAN; n];
    for i in 0..n {
        let lse = |target: u64| -> f64 {
            let terms: Vec<f64> = alive.iter().filter(|&&raw| (raw >> i) & 1 == target).map(|&raw| log_w[raw as usize]).collect();
            let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
        };
        llrs[i] = lse(0) - lse(1);
        let bit = if frozen[i] { 0 } else { u8::from(llrs[i] < 0.0) };
        decided[i] = bit;
        alive.retain(|&raw| (raw >> i) & 1 == u64::from(bit));
    }
    (code.info_set().iter().map(|&idx| decided[idx - 1]).collect(), llrs)
}

#[test]
fn dump_failing_trial() {
    let code = CodeSpec::construct(3, 4, &InfoSetMethod::Bhattacharyya { p0: 0.5 }).unwrap();
    let codebook = Codebook::new(&code).unwrap();
    let mut rng = derive_rng(31337, &[3]);
    for trial in 0..300 {
        let m = rng.random::<u64>() & 0xf;
        let x = codebook.codeword(m).clone();
        let sigma = 0.4 + 0.8 * rng.random::<f64>();
        let y = awgn(&bpsk_modulate(&x), sigma, &mut rng);
        let llr = llr_from_awgn(&y, sigma);
        let via_graph = sc_decode(&llr, &code).unwrap();
        let (via_oracle, ollrs) = oracle_llrs(&y, sigma, &code);
        if via_graph != via_oracle {
            eprintln!("trial {trial} sigma {sigma}");
            eprintln!("y = {y:?}");
            eprintln!("llr = {llr:?}");
            eprintln!("graph  = {via_graph:?}");
            eprintln!("oracle = {via_oracle:?}  u-llrs {ollrs:?}");
            panic!("disagree");
        }
    }
}
