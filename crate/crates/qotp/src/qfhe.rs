//! The assembled scheme: quaternion one-time pad, gate-key updates for
//! single-qubit gates, and CNOTs through a detour via Pauli keys.
//!
//! A qubit is held as `U_t|ψ⟩` together with `Enc(t)`. A single-qubit gate
//! `g` only changes the key (`t ← t·g⁻¹`). A CNOT first turns each involved
//! pad into a Pauli pad with the encrypted conditional unitary, applies the
//! CNOT, updates the Pauli keys, and re-embeds them as gate keys.
//!
//! Every level moves all keys forward by `3k` slots, so after level `l` every
//! key sits at slot `3kl + 1`.

use crate::circuit::BitEngine;
use crate::crot::{Crot, PauliPad, SimMode};
use crate::error::{Error, Result};
use crate::eulerconv::{euler_to_matrix, he_euler_from_quat, EulerConfig};
use crate::hebackend::{self, Backend, CipherBit, CipherWord, EncQuat, HeEngine, KeyChain};
use crate::lattice::LweParams;
use crate::qsim::{ApplyMode, DensityAccumulator, StateVector};
use crate::su2core::{matrix_to_quat, quat_inv, quat_to_matrix, unitary_approx, FixedFrac, Mat2, Quat4, UnitQuat4};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// A gate key: four `k`-bit sign-magnitude components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateKey(pub [FixedFrac; 4]);

impl GateKey {
    pub fn quat(&self) -> Quat4 {
        Quat4::from_fixed(&self.0)
    }

    pub fn k(&self) -> u32 {
        self.0[0].k
    }
}

/// Samples a pad key. Three `k`-bit fractions `h₁..h₃ ∈ [0, 1)` are drawn
/// until `Σh² ≤ 1`, `h₄ = ⌊√(1 − Σh²)⌋_k`, then the four are shuffled and
/// given random signs. `k = 1` returns a signed unit vector: the Pauli pad.
pub fn qotp_keygen<R: Rng + ?Sized>(k: u32, rng: &mut R) -> Result<GateKey> {
    if !(1..=60).contains(&k) {
        return Err(Error::Params(format!("key precision {k} not in 1..=60")));
    }
    let one = 1u64 << k;
    let mut mags = if k == 1 {
        [one, 0, 0, 0]
    } else {
        let one2 = 1u128 << (2 * k);
        loop {
            let h: [u64; 3] = [0; 3].map(|_| rng.gen_range(0..one));
            let sum: u128 = h.iter().map(|&x| x as u128 * x as u128).sum();
            if sum <= one2 {
                break [h[0], h[1], h[2], (one2 - sum).isqrt() as u64];
            }
        }
    };
    mags.shuffle(rng);
    Ok(GateKey(mags.map(|m| FixedFrac::from_parts(rng.gen(), m, k))))
}

/// How a near-unit key vector becomes a unitary pad.
///
/// Truncated keys have norm slightly below one. [`PadApprox::CoordinateFill`]
/// is the construction of [`unitary_approx`]: it puts the whole deficit into
/// the fourth coordinate, which moves the vector by up to `√(3δ)` for a norm
/// gap `δ` when that coordinate is near zero. [`PadApprox::Normalize`] scales
/// radially and moves it by exactly `δ`; it is the default because it keeps
/// end-to-end error at the `2⁻ᵏ` scale instead of `2^{−k/2}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PadApprox {
    #[default]
    Normalize,
    CoordinateFill,
}

impl PadApprox {
    pub fn unit(self, t: &Quat4) -> Result<UnitQuat4> {
        match self {
            PadApprox::Normalize => {
                if (t.norm() - 1.0).abs() > 1.0 {
                    return Err(Error::Domain(format!("key norm {} too far from 1", t.norm())));
                }
                UnitQuat4::normalize(*t)
            }
            PadApprox::CoordinateFill => unitary_approx(t),
        }
    }

    pub fn matrix(self, t: &Quat4) -> Result<Mat2> {
        Ok(quat_to_matrix(self.unit(t)?.quat()))
    }
}

impl std::str::FromStr for PadApprox {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalize" => Ok(PadApprox::Normalize),
            "coordinate-fill" => Ok(PadApprox::CoordinateFill),
            _ => Err(Error::Params(format!("unknown pad approximation {s:?} (normalize, coordinate-fill)"))),
        }
    }
}

/// Applies the pad `U_key` to `qubit`.
pub fn qotp_enc(key: &GateKey, state: &mut StateVector, qubit: usize) -> Result<()> {
    qotp_enc_with(key, PadApprox::default(), state, qubit)
}

/// Applies the inverse pad `U_{key⁻¹}`.
pub fn qotp_dec(key: &GateKey, state: &mut StateVector, qubit: usize) -> Result<()> {
    qotp_dec_with(key, PadApprox::default(), state, qubit)
}

pub fn qotp_enc_with(key: &GateKey, approx: PadApprox, state: &mut StateVector, qubit: usize) -> Result<()> {
    state.apply_1q(qubit, &approx.matrix(&key.quat())?, ApplyMode::Unitary)
}

pub fn qotp_dec_with(key: &GateKey, approx: PadApprox, state: &mut StateVector, qubit: usize) -> Result<()> {
    state.apply_1q(qubit, &approx.matrix(&quat_inv(&key.quat()))?, ApplyMode::Unitary)
}

/// Gate key of `Z^{x₁} X^{x₂}` (up to phase):
/// `((1−x₁)(1−x₂), x₂(1−x₁), x₁(1−x₂), −x₁x₂)`.
pub fn pauli_embed(x1: bool, x2: bool) -> Quat4 {
    let (a, b) = (x1 as u8 as f64, x2 as u8 as f64);
    Quat4::new((1.0 - a) * (1.0 - b), b * (1.0 - a), a * (1.0 - b), -a * b)
}

/// [`pauli_embed`] on encrypted bits with four AND gates; each component's
/// magnitude is the bit at weight 1 and the last component's sign is `x₁x₂`.
pub fn he_pauli_embed<E: BitEngine<Bit = CipherBit>>(e: &mut E, x1: &CipherBit, x2: &CipherBit, k: u32) -> EncQuat {
    let (n1, n2) = (e.not(x1), e.not(x2));
    let vals = [e.and(&n1, &n2), e.and(x2, &n1), e.and(x1, &n2), e.and(x1, x2)];
    let comp = |v: &CipherBit, signed: bool| {
        let mut bits = vec![CipherBit::Public(false); k as usize + 1];
        bits[k as usize] = v.clone();
        CipherWord { bits, sign: Some(if signed { v.clone() } else { CipherBit::Public(false) }) }
    };
    EncQuat { k, comps: [comp(&vals[0], false), comp(&vals[1], false), comp(&vals[2], false), comp(&vals[3], true)] }
}

/// Mean of `U ρ U†` over fresh pads for a fixed one-qubit `ψ`.
pub fn security_trial<R: Rng + ?Sized>(k: u32, psi: &StateVector, trials: u64, rng: &mut R) -> Result<Mat2> {
    if psi.n_qubits() != 1 {
        return Err(Error::Dimension(psi.n_qubits(), 1));
    }
    let mut acc = DensityAccumulator::new();
    for _ in 0..trials {
        let mut s = psi.clone();
        qotp_enc(&qotp_keygen(k, rng)?, &mut s, 0)?;
        acc.accumulate(&s)?;
    }
    Ok(acc.mean())
}

/// Largest entrywise deviation of a density matrix from `I/2`.
pub fn deviation_from_mixed(rho: &Mat2) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 0.5 } else { 0.0 };
            worst = worst.max((rho.0[i][j] - target).norm());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate1 {
    /// Index vector; normalized before use.
    Quat(Quat4),
    /// `R_α·T_β·R_γ`.
    Euler { alpha: f64, beta: f64, gamma: f64 },
}

impl Gate1 {
    pub fn matrix(&self) -> Result<Mat2> {
        match self {
            Gate1::Quat(t) => PadApprox::Normalize.matrix(t),
            Gate1::Euler { alpha, beta, gamma } => Ok(euler_to_matrix(*alpha, *beta, *gamma)),
        }
    }

    /// The gate as a `k`-bit key, truncated toward zero.
    pub fn key(&self, k: u32) -> Result<GateKey> {
        let t = match self {
            Gate1::Quat(t) => *UnitQuat4::normalize(*t)?.quat(),
            Gate1::Euler { .. } => *matrix_to_quat(&self.matrix()?)?.0.quat(),
        };
        Ok(GateKey(t.to_fixed(k)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub gates: Vec<(usize, Gate1)>,
    pub cnots: Vec<(usize, usize)>,
}

/// Levels of single-qubit gates each followed by one layer of disjoint CNOTs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub levels: Vec<Level>,
}

impl Circuit {
    /// Smallest register the circuit fits on.
    pub fn width(&self) -> usize {
        self.levels
            .iter()
            .flat_map(|l| l.gates.iter().map(|g| g.0).chain(l.cnots.iter().flat_map(|c| [c.0, c.1])))
            .max()
            .map_or(0, |q| q + 1)
    }

    pub fn cnot_count(&self) -> usize {
        self.levels.iter().map(|l| l.cnots.len()).sum()
    }

    pub fn gate_count(&self) -> usize {
        self.levels.iter().map(|l| l.gates.len()).sum()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        for (i, l) in self.levels.iter().enumerate() {
            if let Some((q, _)) = l.gates.iter().find(|g| g.0 >= n_qubits) {
                return Err(Error::QubitRange(*q));
            }
            let mut used = BTreeSet::new();
            for &(c, t) in &l.cnots {
                if c >= n_qubits || t >= n_qubits {
                    return Err(Error::QubitRange(c.max(t)));
                }
                if c == t || !used.insert(c) || !used.insert(t) {
                    return Err(Error::Domain(format!("level {i}: CNOT layer is not disjoint")));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        let mut cur = Level::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(format!("bad number {s:?}")));
            let qubit = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad qubit {s:?}")));
            match toks.as_slice() {
                ["LEVEL"] => {
                    if !cur.gates.is_empty() || !cur.cnots.is_empty() {
                        levels.push(std::mem::take(&mut cur));
                    }
                }
                ["U", q, "quat", a, b, c, d] => {
                    if !cur.cnots.is_empty() {
                        return Err(err("single-qubit gate after the CNOT layer; start a new LEVEL".into()));
                    }
                    cur.gates.push((qubit(q)?, Gate1::Quat(Quat4::new(num(a)?, num(b)?, num(c)?, num(d)?))));
                }
                ["U", q, "euler", a, b, c] => {
                    if !cur.cnots.is_empty() {
                        return Err(err("single-qubit gate after the CNOT layer; start a new LEVEL".into()));
                    }
                    cur.gates.push((qubit(q)?, Gate1::Euler { alpha: num(a)?, beta: num(b)?, gamma: num(c)? }));
                }
                ["CNOT", c, t] => cur.cnots.push((qubit(c)?, qubit(t)?)),
                _ => return Err(err(format!("unrecognized line {line:?}"))),
            }
        }
        if !cur.gates.is_empty() || !cur.cnots.is_empty() {
            levels.push(cur);
        }
        Ok(Circuit { levels })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                out.push_str("LEVEL\n");
            }
            for (q, g) in &l.gates {
                match g {
                    Gate1::Quat(t) => writeln!(out, "U {q} quat {} {} {} {}", t.0[0], t.0[1], t.0[2], t.0[3]),
                    Gate1::Euler { alpha, beta, gamma } => writeln!(out, "U {q} euler {alpha} {beta} {gamma}"),
                }
                .expect("writing to a String");
            }
            for (c, t) in &l.cnots {
                writeln!(out, "CNOT {c} {t}").expect("writing to a String");
            }
        }
        out
    }

    /// Plaintext reference run with exact gates.
    pub fn simulate(&self, state: &StateVector) -> Result<StateVector> {
        self.validate(state.n_qubits())?;
        let mut s = state.clone();
        for l in &self.levels {
            for (q, g) in &l.gates {
                s.apply_1q(*q, &g.matrix()?, ApplyMode::Unitary)?;
            }
            for &(c, t) in &l.cnots {
                s.apply_cnot(c, t)?;
            }
        }
        Ok(s)
    }
}

/// `H` as an index vector: `U_t = i·H`.
pub fn hadamard_quat() -> Quat4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Quat4::new(0.0, h, h, 0.0)
}

/// `R_w` up to phase: `(cos πw, 0, −sin πw, 0)`.
pub fn phase_quat(w: f64) -> Quat4 {
    let a = std::f64::consts::PI * w;
    Quat4::new(a.cos(), 0.0, -a.sin(), 0.0)
}

/// Controlled `R_w` as two levels:
/// `R_{w/2}(c)·R_{w/2}(t)`, CNOT, then `R_{−w/2}(t)`, CNOT.
fn controlled_phase(levels: &mut Vec<Level>, pre: Vec<(usize, Gate1)>, c: usize, t: usize, w: f64) {
    let mut gates = pre;
    gates.push((c, Gate1::Quat(phase_quat(w / 2.0))));
    gates.push((t, Gate1::Quat(phase_quat(w / 2.0))));
    levels.push(Level { gates, cnots: vec![(c, t)] });
    levels.push(Level { gates: vec![(t, Gate1::Quat(phase_quat(-w / 2.0)))], cnots: vec![(c, t)] });
}

/// Quantum Fourier transform on `n` qubits without the final reversal:
/// qubit `n − 1` is processed first. The output amplitude of `|x⟩` at index
/// `y` is `e^{2πi·x·rev(y)/2ⁿ}/√2ⁿ`, `rev` reversing the `n` bits.
pub fn qft_circuit(n: usize) -> Circuit {
    let mut levels = Vec::new();
    let mut pending: Vec<(usize, Gate1)> = Vec::new();
    for j in (0..n).rev() {
        pending.push((j, Gate1::Quat(hadamard_quat())));
        for (dist, c) in (0..j).rev().enumerate() {
            let w = 1.0 / (1u64 << (dist + 2)) as f64;
            controlled_phase(&mut levels, std::mem::take(&mut pending), c, j, w);
        }
    }
    if !pending.is_empty() {
        levels.push(Level { gates: pending, cnots: vec![] });
    }
    Circuit { levels }
}

/// Direct formula for the QFT output of basis state `x` on `n` qubits, in
/// the bit order produced by [`qft_circuit`].
pub fn qft_reference(n: usize, x: usize) -> Result<StateVector> {
    let dim = 1usize << n;
    let rev = |y: usize| (0..n).fold(0, |acc, b| acc | (((y >> b) & 1) << (n - 1 - b)));
    let amps = (0..dim)
        .map(|y| {
            let ph = 2.0 * std::f64::consts::PI * ((x * rev(y)) % dim) as f64 / dim as f64;
            num_complex::Complex64::from_polar(1.0 / (dim as f64).sqrt(), ph)
        })
        .collect();
    StateVector::from_amplitudes(amps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QheParams {
    pub kbits: u32,
    pub levels: u32,
    pub euler: EulerConfig,
}

impl QheParams {
    pub fn new(kbits: u32, levels: u32) -> Self {
        QheParams { kbits, levels, euler: EulerConfig::for_target(kbits) }
    }

    pub fn validate(&self, chain: &KeyChain) -> Result<()> {
        if chain.kbits != self.kbits || chain.levels != self.levels {
            return Err(Error::Params(format!(
                "chain is for k={}, L={}; evaluation asks k={}, L={}",
                chain.kbits, chain.levels, self.kbits, self.levels
            )));
        }
        if self.euler.angle_bits != self.kbits {
            return Err(Error::Params("Euler angle width must equal k".into()));
        }
        self.euler.validate(self.kbits)
    }

    /// First slot of level `l` (0-based).
    pub fn level_slot(&self, l: u32) -> u32 {
        3 * self.kbits * l + 1
    }
}

/// Picks the preset whose `λ` matches.
pub fn params_for_lambda(lambda: u32) -> Result<LweParams> {
    [LweParams::small_nand(), LweParams::toy_s(), LweParams::toy_m()]
        .into_iter()
        .find(|p| p.lambda == lambda)
        .ok_or_else(|| Error::Params(format!("no preset for λ = {lambda} (have 8, 16, 32)")))
}

pub fn qhe_keygen<R: Rng + ?Sized>(lambda: u32, levels: u32, kbits: u32, backend: Backend, rng: &mut R) -> Result<(KeyChain, QheParams)> {
    let p = params_for_lambda(lambda)?;
    p.validate()?;
    let chain = hebackend::keychain_gen(&p, levels, kbits, backend, rng)?;
    Ok((chain, QheParams::new(kbits, levels)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QotpCiphertext {
    pub qubit: usize,
    pub key: EncQuat,
    /// Single-qubit gates folded into this key so far.
    pub gates_applied: u64,
}

/// The quantum register (already padded) with its encrypted gate keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncryptedState {
    pub state: StateVector,
    pub cts: Vec<QotpCiphertext>,
    /// Levels evaluated so far.
    pub level: u32,
    #[serde(default)]
    pub approx: PadApprox,
}

impl EncryptedState {
    pub fn slot(&self) -> Result<Option<u32>> {
        let mut found = None;
        for ct in &self.cts {
            match (found, ct.key.slot()?) {
                (None, s) => found = s,
                (Some(f), Some(s)) if f != s => return Err(Error::SlotMismatch(f as usize, s as usize)),
                _ => {}
            }
        }
        Ok(found)
    }
}

/// Pads every qubit with an independent key and encrypts the keys at slot 1.
pub fn qhe_enc<R: Rng + ?Sized>(chain: &KeyChain, state: &StateVector, rng: &mut R) -> Result<EncryptedState> {
    qhe_enc_with(chain, state, PadApprox::default(), rng)
}

pub fn qhe_enc_with<R: Rng + ?Sized>(chain: &KeyChain, state: &StateVector, approx: PadApprox, rng: &mut R) -> Result<EncryptedState> {
    let mut s = state.clone();
    let mut cts = Vec::with_capacity(state.n_qubits());
    for q in 0..state.n_qubits() {
        let key = qotp_keygen(chain.kbits, rng)?;
        qotp_enc_with(&key, approx, &mut s, q)?;
        cts.push(QotpCiphertext { qubit: q, key: chain.enc_quat(1, &key.0, rng)?, gates_applied: 0 });
    }
    Ok(EncryptedState { state: s, cts, level: 0, approx })
}

/// Decrypts each key with the secret key of the slot it sits at and removes
/// the pads.
pub fn qhe_dec(chain: &KeyChain, enc: &EncryptedState) -> Result<StateVector> {
    enc.slot()?;
    let mut s = enc.state.clone();
    for ct in &enc.cts {
        let key = GateKey(chain.dec_quat(&ct.key)?);
        qotp_dec_with(&key, enc.approx, &mut s, ct.qubit)?;
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub levels: u64,
    pub gates_1q: u64,
    pub cnots: u64,
    pub key_switches: u64,
}

/// Evaluation session over one key chain.
pub struct Evaluator<'a> {
    pub crot: Crot<'a>,
    pub params: QheParams,
    pub counters: EvalCounters,
}

impl<'a> Evaluator<'a> {
    pub fn new(chain: &'a KeyChain, params: QheParams, mode: SimMode, seed: u64) -> Result<Self> {
        params.validate(chain)?;
        Ok(Evaluator { crot: Crot::new(chain, mode, seed), params, counters: EvalCounters::default() })
    }

    fn chain(&self) -> &'a KeyChain {
        self.crot.chain
    }

    fn engine(&mut self) -> &mut HeEngine {
        &mut self.crot.engine
    }

    /// `t ← t·g⁻¹`; the quantum state is not touched.
    pub fn eval_1q(&mut self, ct: &mut QotpCiphertext, gate: &GateKey) -> Result<()> {
        let inv = quat_inv(&gate.quat()).to_fixed(gate.k());
        ct.key = hebackend::eval_quat_mul_encrypted(self.engine(), &ct.key, &inv)?;
        ct.gates_applied += 1;
        self.counters.gates_1q += 1;
        Ok(())
    }

    /// Converts the pad of `qubit` to a Pauli pad: `X^x Z^z|ψ⟩`.
    pub fn to_pauli(&mut self, enc: &mut EncryptedState, qubit: usize, slot: u32) -> Result<PauliPad> {
        let key = enc.cts[qubit].key.clone();
        let cfg = self.params.euler;
        let angles = he_euler_from_quat(self.engine(), &key.sign_mag(), key.k, &cfg)?;
        self.engine().finish()?;
        let words = angles.map(CipherWord::unsigned);
        self.crot.enc_cunitary(&words, slot, &mut enc.state, qubit)
    }

    fn embed(&mut self, x: &CipherBit, z: &CipherBit) -> Result<EncQuat> {
        let k = self.params.kbits;
        let q = he_pauli_embed(self.engine(), z, x, k);
        self.engine().finish()?;
        Ok(q)
    }

    /// CNOT on two padded qubits. Keys enter at `slot` and leave at
    /// `slot + 3k − 1`.
    pub fn eval_cnot(&mut self, enc: &mut EncryptedState, c: usize, t: usize, slot: u32) -> Result<()> {
        let pc = self.to_pauli(enc, c, slot)?;
        let pt = self.to_pauli(enc, t, slot)?;
        enc.state.apply_cnot(c, t)?;
        let (zc, xt) = {
            let e = self.engine();
            let zc = e.xor(&pc.z, &pt.z);
            let xt = e.xor(&pt.x, &pc.x);
            (zc, xt)
        };
        self.engine().finish()?;
        enc.cts[c].key = self.embed(&pc.x, &zc)?;
        enc.cts[t].key = self.embed(&xt, &pt.z)?;
        self.counters.cnots += 1;
        Ok(())
    }

    pub fn eval_level(&mut self, enc: &mut EncryptedState, level: &Level) -> Result<()> {
        if enc.level >= self.params.levels {
            return Err(Error::Params(format!("circuit needs more than L = {} levels", self.params.levels)));
        }
        let start = self.params.level_slot(enc.level);
        let next = self.params.level_slot(enc.level + 1);
        if let Some(s) = enc.slot()? {
            if s != start {
                return Err(Error::SlotMismatch(s as usize, start as usize));
            }
        }
        for (q, g) in &level.gates {
            let key = g.key(self.params.kbits)?;
            let mut ct = enc.cts[*q].clone();
            self.eval_1q(&mut ct, &key)?;
            enc.cts[*q] = ct;
        }
        for &(c, t) in &level.cnots {
            self.eval_cnot(enc, c, t, start)?;
        }
        let chain = self.chain();
        for ct in enc.cts.iter_mut() {
            let before = ct.key.slot()?.unwrap_or(next);
            ct.key = chain.switch_quat_to(&ct.key, next, self.crot.rng())?;
            self.counters.key_switches += (next - before) as u64;
        }
        enc.level += 1;
        self.counters.levels += 1;
        Ok(())
    }

    pub fn eval_circuit(&mut self, enc: &mut EncryptedState, circuit: &Circuit) -> Result<()> {
        circuit.validate(enc.state.n_qubits())?;
        if enc.level as usize + circuit.levels.len() > self.params.levels as usize {
            return Err(Error::Params(format!(
                "circuit has {} levels, {} of L = {} remain",
                circuit.levels.len(),
                self.params.levels - enc.level.min(self.params.levels),
                self.params.levels
            )));
        }
        for l in &circuit.levels {
            self.eval_level(enc, l)?;
        }
        Ok(())
    }
}

/// `(previous / ours)` cost ratio for a circuit whose CNOT fraction is `p`:
/// `((1−p)λ²T_Q + p·T_Q) / ((1−p)λT_C + pλT_Q)`.
pub fn cost_ratio(p: f64, lambda: f64, t_q: f64, t_c: f64) -> f64 {
    let prev = (1.0 - p) * lambda * lambda * t_q + p * t_q;
    let ours = (1.0 - p) * lambda * t_c + p * lambda * t_q;
    prev / ours
}

/// One-bit primitive calls per evaluated CNOT at angle width `m`: two qubits,
/// three angle stages of `m − 1` calls each.
pub fn alg1_calls_per_cnot(m: u32) -> u64 {
    2 * 3 * m.saturating_sub(1) as u64
}
