use num_complex::Complex64 as C64;
use qotp::crot::{d_len, Crot, SimMode};
use qotp::hebackend::{keychain_gen, Backend, CipherBit, KeyChain};
use qotp::lattice::LweParams;
use qotp::qsim::StateVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn mock_chain(p: &LweParams, k: u32) -> KeyChain {
    keychain_gen(p, 1, k, Backend::Mock, &mut ChaCha20Rng::seed_from_u64(5)).unwrap()
}

fn random_qubit(rng: &mut ChaCha20Rng) -> StateVector {
    let v: Vec<C64> = (0..2).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::from_unnormalized(v).unwrap()
}

#[test]
fn hadamard_outcome_bits_are_uniform() {
    let p = LweParams::small_nand();
    let chain = mock_chain(&p, 1);
    let mut crot = Crot::new(&chain, SimMode::ExactSampling, 1);
    let mut r = ChaCha20Rng::seed_from_u64(2);
    let runs = 10_000;
    let len = d_len(&p);
    let mut ones = vec![0u32; len];
    let mut d1_ones = 0u32;
    for _ in 0..runs {
        let zeta = CipherBit::Mock { slot: 1, bit: r.gen(), depth: 0 };
        let mut st = random_qubit(&mut r);
        let t = crot.alg1(0.125, &zeta, 1, &mut st, 0).unwrap();
        for (i, c) in ones.iter_mut().enumerate() {
            *c += t.d_bit(i) as u32;
        }
        d1_ones += t.d1 as u32;
        // bits past the declared length stay clear
        assert!(t.d.len() * 64 - len < 64);
        assert!((len..t.d.len() * 64).all(|i| !t.d_bit(i)));
    }
    for (i, &c) in ones.iter().enumerate() {
        let f = c as f64 / runs as f64;
        assert!((f - 0.5).abs() <= 0.02, "bit {i}: {f}");
    }
    let f1 = d1_ones as f64 / runs as f64;
    assert!((f1 - 0.5).abs() <= 0.02, "d1 frequency {f1}");
}

#[test]
fn exact_sampling_converges_as_eta_grows() {
    let mut medians = Vec::new();
    for eta in 1..=3 {
        let p = LweParams::toy_s().with_eta(eta);
        p.validate().unwrap();
        let chain = mock_chain(&p, 1);
        let mut crot = Crot::new(&chain, SimMode::ExactSampling, 10 + eta as u64);
        let mut r = ChaCha20Rng::seed_from_u64(20);
        let mut gaps: Vec<f64> = (0..200)
            .map(|_| {
                let zeta = CipherBit::Mock { slot: 1, bit: r.gen(), depth: 0 };
                let mut st = random_qubit(&mut r);
                crot.alg1(r.gen(), &zeta, 1, &mut st, 0).unwrap().mode_gap
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        medians.push((gaps[99] + gaps[100]) / 2.0);
    }
    eprintln!("median mode gap for eta 1..=3: {medians:?}");
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn slot_progression() {
    let m = 5;
    let chain = mock_chain(&LweParams::toy_s(), m);
    let mut crot = Crot::new(&chain, SimMode::Idealized, 30);
    let mut r = ChaCha20Rng::seed_from_u64(31);
    let word = chain.enc_word(1, &[true, false, true, true, false], &mut r).unwrap();
    let angle = qotp::crot::EncAngle::new(word.clone(), 1).unwrap();
    let mut st = random_qubit(&mut r);
    crot.record = true;
    let out = crot.enc_crot(&angle, &mut st, 0).unwrap();
    let slots: Vec<u32> = crot.transcripts.iter().map(|t| t.slot).collect();
    assert_eq!(slots, vec![1, 2, 3, 4]);
    assert_eq!(out.slot, m);

    crot.transcripts.clear();
    let words = [word.clone(), word.clone(), word];
    let pad = crot.enc_cunitary(&words, 1, &mut st, 0).unwrap();
    let used: std::collections::BTreeSet<u32> = crot.transcripts.iter().map(|t| t.slot).collect();
    assert!(used.iter().all(|&s| (1..=3 * m).contains(&s)));
    assert_eq!(pad.slot, 3 * m);
}

#[test]
fn transcript_dump_roundtrips_as_json() {
    let p = LweParams::small_nand();
    let chain = mock_chain(&p, 1);
    let mut crot = Crot::new(&chain, SimMode::ExactSampling, 40);
    let mut st = StateVector::zero(1).unwrap();
    let t = crot.alg1(0.5, &CipherBit::Public(true), 1, &mut st, 0).unwrap();
    let text = serde_json::to_string(&t).unwrap();
    let back: qotp::crot::CrotTranscript = serde_json::from_str(&text).unwrap();
    assert_eq!(back, t);
    assert!(back.is_consistent(chain.keypair(1).unwrap()));
}
