//! Encrypted conditional rotations on simulated qubits.
//!
//! The one-bit primitive rotates a qubit by `R_w^{−ζ}` where `ζ` is only
//! available encrypted. Physically it entangles the qubit with a masking
//! register holding `AltEnc(u; s, e) ⊕ j·Enc(ζ)` (`j` the qubit's basis
//! value), measures that register, and Hadamard-measures the preimage
//! register. The registers are exponentially large, so they are not
//! simulated: the measurement outcomes are sampled classically instead.
//!
//! Sampling: pick the branch `j` with the Born probability of the qubit,
//! draw `(u, s, e)` for that branch (bit and `s` uniform, `e` from the
//! truncated Gaussian of width `β_f`), and solve for the other branch's
//! preimage through the additive relation with `Enc(ζ)`. The measured value
//! `y` then has exactly the distribution of the quantum process, and the
//! post-measurement qubit is
//! `(√ρ(e₀)·e^{−2πi w u₀}·k₀, √ρ(e₁)·e^{−2πi w u₁}·k₁)`.
//! The Hadamard outcome `d` is uniform and contributes `(−1)^{⟨d, x_j⟩}` per
//! branch. If the other preimage falls outside the Gaussian support the run
//! is an S-event; it is counted and resampled.
//!
//! Up to a global phase the result is `Z^{d₁}·R_{2w}^{d₂}·R_w^{−ζ}|k⟩` with
//! `d₁ = ⟨d, x₀ ⊕ x₁⟩` and `d₂ = u₀·ζ`. [`SimMode::Idealized`] applies that
//! operator directly; [`SimMode::ExactSampling`] keeps the `√ρ` weights.

use crate::circuit::{self, BitEngine};
use crate::error::{Error, Result};
use crate::hebackend::{self, CipherBit, CipherWord, HeEngine, KeyChain};
use crate::lattice::{self, AltCiphertext, AltOpening, LweParams, TrapdoorKeypair};
use crate::qsim::{ApplyMode, StateVector};
use crate::su2core::Mat2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    /// Apply the closed-form output operator.
    #[default]
    Idealized,
    /// Keep the Gaussian weights of the sampled branches.
    ExactSampling,
}

impl FromStr for SimMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idealized" => Ok(SimMode::Idealized),
            "exact" | "exact-sampling" => Ok(SimMode::ExactSampling),
            _ => Err(Error::Params(format!("unknown simulation mode {s}"))),
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Idealized => "idealized",
            SimMode::ExactSampling => "exact",
        })
    }
}

/// One preimage `(u, s, e)` of the measured masking value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub u: bool,
    pub s: Vec<u64>,
    pub e: Vec<i64>,
}

impl Branch {
    /// `u`, then each `s` entry, then each `e` entry mod `q`, `log q` bits
    /// apiece, LSB first; packed into words.
    pub fn bits(&self, p: &LweParams) -> Vec<u64> {
        let l = p.log_q as usize;
        let mut w = BitWriter::default();
        w.push(self.u as u64, 1);
        for &s in &self.s {
            w.push(s, l);
        }
        for &e in &self.e {
            w.push((e as u64) & p.mask(), l);
        }
        w.words
    }
}

#[derive(Default)]
struct BitWriter {
    words: Vec<u64>,
    len: usize,
}

impl BitWriter {
    fn push(&mut self, v: u64, width: usize) {
        for i in 0..width {
            if self.len % 64 == 0 {
                self.words.push(0);
            }
            self.words[self.len / 64] |= ((v >> i) & 1) << (self.len % 64);
            self.len += 1;
        }
    }
}

fn parity_and(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum::<u32>() % 2 == 1
}

/// Bit length of the Hadamard outcome: `1 + (n + M)·log q`.
pub fn d_len(p: &LweParams) -> usize {
    1 + (p.n + p.rows()) * p.log_q as usize
}

/// Everything a run of the one-bit primitive produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrotTranscript {
    pub slot: u32,
    pub w: f64,
    /// `Convert(Enc(ζ))`.
    pub c_zeta: AltCiphertext,
    /// The measured masking value.
    pub y: AltCiphertext,
    /// Hadamard outcome, packed little-endian, [`d_len`] bits.
    pub d: Vec<u64>,
    pub branches: [Branch; 2],
    /// Basis value of the qubit on the sampled branch.
    pub sampled_branch: bool,
    pub d1: bool,
    pub d2: bool,
    /// `ln(ρ(e₁)/ρ(e₀))`.
    pub ln_ratio: f64,
    /// Trace distance between the two simulation modes' outputs for this run.
    pub mode_gap: f64,
    /// Discarded global phase, in turns.
    pub global_phase: f64,
    pub s_events: u32,
}

impl CrotTranscript {
    /// `AltEnc(u₀; s₀, e₀) = AltEnc(u₁; s₁, e₁) ⊕ c_ζ` and `y` is the first.
    pub fn is_consistent(&self, kp: &TrapdoorKeypair) -> bool {
        let [b0, b1] = &self.branches;
        let lhs = lattice::alt_enc_with(kp, b0.u, &b0.s, &b0.e);
        let rhs = lattice::alt_xor(&lattice::alt_enc_with(kp, b1.u, &b1.s, &b1.e), &self.c_zeta, &kp.params);
        rhs.map(|r| r == lhs && lhs == self.y).unwrap_or(false)
    }

    pub fn d_bit(&self, i: usize) -> bool {
        (self.d[i / 64] >> (i % 64)) & 1 == 1
    }
}

/// `ρ(x) = exp(−π‖x‖²/B²)` on `[−B, B]^M`, zero outside.
fn in_support(e: &[i64], bound: i64) -> bool {
    e.iter().all(|x| x.abs() <= bound)
}

fn sq_norm(e: &[i64]) -> i128 {
    e.iter().map(|&x| x as i128 * x as i128).sum()
}

/// The Gaussian bound `β_f` as an integer.
pub fn sampling_bound(p: &LweParams) -> Result<i64> {
    let b = p.beta_f().floor();
    if !(1.0..4.0e18).contains(&b) {
        return Err(Error::Params(format!("β_f = {b:e} does not fit the sampler")));
    }
    Ok(b as i64)
}

/// Weighted state `(√ρ(ω)·c₀, √ρ(ω + shift)·c₁)`, normalized, plus the ratio
/// `ρ(ω + shift)/ρ(ω)` (infinite when only the shifted point is supported).
pub fn branch_state_exact(omega: &[i64], shift: &[i64], c0: C64, c1: C64, beta_f: f64) -> Result<(StateVector, f64)> {
    if omega.len() != shift.len() {
        return Err(Error::Dimension(omega.len(), shift.len()));
    }
    let bound = beta_f.floor() as i64;
    let moved: Vec<i64> = omega.iter().zip(shift).map(|(a, b)| a + b).collect();
    let (in0, in1) = (in_support(omega, bound), in_support(&moved, bound));
    let (w0, w1, ratio) = match (in0, in1) {
        (false, false) => return Err(Error::SupportMismatch),
        (true, false) => (1.0, 0.0, 0.0),
        (false, true) => (0.0, 1.0, f64::INFINITY),
        (true, true) => {
            let ln = ln_ratio(omega, &moved, beta_f);
            (1.0, (0.5 * ln).exp(), ln.exp())
        }
    };
    let st = StateVector::from_unnormalized(vec![c0 * w0, c1 * w1])?;
    Ok((st, ratio))
}

fn ln_ratio(e0: &[i64], e1: &[i64], beta_f: f64) -> f64 {
    let diff = sq_norm(e1) - sq_norm(e0);
    -PI * diff as f64 / (beta_f * beta_f)
}

/// Trace distance between `(k₀, k₁)` and `(k₀, √r·k₁)` after normalization,
/// where `p1 = |k₁|²`: `|√r − 1|·√(p₀p₁)/N`, `N² = 1 + (r − 1)·p₁`.
pub fn weight_gap(ln_r: f64, p1: f64) -> f64 {
    let p0 = 1.0 - p1;
    let x = (0.5 * ln_r).exp_m1();
    let n2 = 1.0 + ln_r.exp_m1() * p1;
    x.abs() * (p0 * p1).max(0.0).sqrt() / n2.sqrt()
}

/// The opened control: `Convert(Enc(ζ))` and its `(ζ, s', e')`.
pub fn control_opening<R: Rng + ?Sized>(
    chain: &KeyChain,
    zeta: &CipherBit,
    slot: u32,
    rng: &mut R,
) -> Result<(AltCiphertext, AltOpening)> {
    let kp = chain.keypair(slot)?;
    let p = &chain.params;
    if let Some(s) = zeta.slot().filter(|&s| s != slot) {
        return Err(Error::SlotMismatch(s as usize, slot as usize));
    }
    match zeta {
        CipherBit::Lattice { ct, .. } => {
            let c = lattice::mhe_convert(ct, p);
            let open = lattice::alt_invert(kp, &c)?;
            Ok((c, open))
        }
        _ => {
            // the mock backend has no ciphertext; materialize a fresh one
            let bit = chain.dec(zeta)?;
            let s: Vec<u64> = (0..p.n).map(|_| rng.gen::<u64>() & p.mask()).collect();
            let e = lattice::gaussian_vector(p.beta_init, p.rows(), rng);
            let c = lattice::alt_enc_with(kp, bit, &s, &e);
            Ok((c, AltOpening { mu: bit, s, e }))
        }
    }
}

/// Samples the measurement outcomes of one run and applies the resulting
/// operator to `qubit`.
#[allow(clippy::too_many_arguments)]
pub fn run_alg1<R: Rng + ?Sized>(
    kp: &TrapdoorKeypair,
    slot: u32,
    c_zeta: AltCiphertext,
    open: &AltOpening,
    w: f64,
    state: &mut StateVector,
    qubit: usize,
    mode: SimMode,
    rng: &mut R,
) -> Result<CrotTranscript> {
    let p = &kp.params;
    let bound = sampling_bound(p)?;
    let mask = p.mask();
    let p1 = state.prob_one(qubit)?;
    let mut s_events = 0u32;
    let (j, b0, b1) = loop {
        let j = rng.gen::<f64>() < p1;
        let u: bool = rng.gen();
        let s: Vec<u64> = (0..p.n).map(|_| rng.gen::<u64>() & mask).collect();
        let e = lattice::gaussian_vector(bound as u64, p.rows(), rng);
        let sign: i64 = if j { 1 } else { -1 };
        let other = Branch {
            u: u ^ open.mu,
            s: s.iter().zip(&open.s).map(|(a, b)| a.wrapping_add(b.wrapping_mul(sign as u64)) & mask).collect(),
            e: e.iter().zip(&open.e).map(|(a, b)| a + sign * b).collect(),
        };
        if !in_support(&other.e, bound) {
            s_events += 1;
            if s_events > 10_000 {
                return Err(Error::SupportMismatch);
            }
            continue;
        }
        let drawn = Branch { u, s, e };
        break if j { (j, other, drawn) } else { (j, drawn, other) };
    };
    let y = lattice::alt_enc_with(kp, b0.u, &b0.s, &b0.e);
    let (x0, x1) = (b0.bits(p), b1.bits(p));
    let dl = d_len(p);
    let mut d: Vec<u64> = (0..x0.len()).map(|_| rng.gen()).collect();
    if dl % 64 != 0 {
        *d.last_mut().expect("d has at least one word") &= (1u64 << (dl % 64)) - 1;
    }
    let (dx0, dx1) = (parity_and(&d, &x0), parity_and(&d, &x1));
    let d1 = dx0 ^ dx1;
    let d2 = b0.u && open.mu;
    let ln_r = ln_ratio(&b0.e, &b1.e, bound as f64);
    let mode_gap = weight_gap(ln_r, p1);
    let sgn = |b: bool| if b { -1.0 } else { 1.0 };
    let global_phase = -w * b0.u as u8 as f64 + if dx0 { 0.5 } else { 0.0 };
    match mode {
        SimMode::Idealized => {
            let zeta = open.mu as u8 as f64;
            let g = Mat2::pauli_z().pow_bit(d1).mul(&Mat2::phase_rot(2.0 * w * d2 as u8 as f64 - w * zeta));
            state.apply_1q(qubit, &g, ApplyMode::Unitary)?;
        }
        SimMode::ExactSampling => {
            let ph = |u: bool| C64::from_polar(1.0, -2.0 * PI * w * u as u8 as f64);
            let a0 = ph(b0.u) * sgn(dx0);
            let a1 = ph(b1.u) * sgn(dx1) * (0.5 * ln_r).exp();
            state.apply_1q(qubit, &Mat2::diag(a0, a1), ApplyMode::NonUnitary)?;
            state.normalize()?;
        }
    }
    Ok(CrotTranscript {
        slot,
        w,
        c_zeta,
        y,
        d,
        branches: [b0, b1],
        sampled_branch: j,
        d1,
        d2,
        ln_ratio: ln_r,
        mode_gap,
        global_phase,
        s_events,
    })
}

/// An `m`-bit angle word (little-endian, index `m − 1` has weight ½) at a slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncAngle {
    pub word: CipherWord,
    pub slot: u32,
}

impl EncAngle {
    pub fn new(word: CipherWord, slot: u32) -> Result<Self> {
        if word.bits.is_empty() {
            return Err(Error::Params("angle needs at least one bit".into()));
        }
        match word.slot()? {
            Some(s) if s != slot => Err(Error::SlotMismatch(s as usize, slot as usize)),
            _ => Ok(EncAngle { word, slot }),
        }
    }

    pub fn bits(&self) -> usize {
        self.word.bits.len()
    }
}

/// Per-step record of the multi-bit loop: the consumed low bit of a
/// `width`-bit angle and the correction `b` folded into the next one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerStep {
    pub width: u32,
    pub lsb: bool,
    pub b: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleLedger {
    pub steps: Vec<LedgerStep>,
    /// The single bit left when the loop ends (weight ½).
    pub last: bool,
}

impl AngleLedger {
    /// `Σ (lsb·2^{−width} − b·2^{−(width−1)}) + last/2 mod 1`, over `2^m`.
    pub fn reconstruct(&self, m: u32) -> u64 {
        let modulus = 1i128 << m;
        let mut acc: i128 = (self.last as i128) << (m - 1);
        for s in &self.steps {
            acc += (s.lsb as i128) << (m - s.width);
            acc -= (s.b as i128) << (m - s.width + 1);
        }
        acc.rem_euclid(modulus) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrotOutput {
    /// Pauli bit `d` of the output `Z^d·R_α^{−1}|k⟩`.
    pub d: CipherBit,
    pub slot: u32,
    pub ledger: AngleLedger,
}

/// Pauli bits of a state `X^x Z^z·U^{−1}|k⟩`, at `slot`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliPad {
    pub x: CipherBit,
    pub z: CipherBit,
    pub slot: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrotStats {
    pub alg1_calls: u64,
    pub s_events: u64,
    pub max_mode_gap: f64,
    pub sum_mode_gap: f64,
}

/// `S = (1/√2)[[1, 1], [i, −i]]`, with `T_α = e^{−iπα}·S·R_α·S^{−1}`.
pub fn s_matrix() -> Mat2 {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let hi = C64::new(0.0, FRAC_1_SQRT_2);
    Mat2::new(h, h, hi, -hi)
}

/// Runs the encrypted-rotation algorithms against one key chain.
pub struct Crot<'a> {
    pub chain: &'a KeyChain,
    pub mode: SimMode,
    pub engine: HeEngine,
    pub stats: CrotStats,
    /// Transcripts are kept only when this is set.
    pub record: bool,
    pub transcripts: Vec<CrotTranscript>,
    rng: ChaCha20Rng,
}

impl<'a> Crot<'a> {
    pub fn new(chain: &'a KeyChain, mode: SimMode, seed: u64) -> Self {
        Crot {
            chain,
            mode,
            engine: chain.engine(),
            stats: CrotStats::default(),
            record: false,
            transcripts: Vec::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    fn gate<T>(&mut self, f: impl FnOnce(&mut HeEngine) -> T) -> Result<T> {
        let out = f(&mut self.engine);
        self.engine.finish()?;
        Ok(out)
    }

    fn switch_bit(&mut self, x: &CipherBit, target: u32) -> Result<CipherBit> {
        self.chain.switch_bit_to(x, target, &mut self.rng)
    }

    fn switch_word(&mut self, w: &CipherWord, target: u32) -> Result<CipherWord> {
        self.chain.switch_word_to(w, target, &mut self.rng)
    }

    /// The one-bit primitive with control `ζ` at `slot`.
    pub fn alg1(&mut self, w: f64, zeta: &CipherBit, slot: u32, state: &mut StateVector, qubit: usize) -> Result<CrotTranscript> {
        if !(0.0..1.0).contains(&w) {
            return Err(Error::Domain(format!("rotation fraction {w} not in [0, 1)")));
        }
        let (c, open) = control_opening(self.chain, zeta, slot, &mut self.rng)?;
        let kp = self.chain.keypair(slot)?;
        let t = run_alg1(kp, slot, c, &open, w, state, qubit, self.mode, &mut self.rng)?;
        self.stats.alg1_calls += 1;
        self.stats.s_events += t.s_events as u64;
        self.stats.max_mode_gap = self.stats.max_mode_gap.max(t.mode_gap);
        self.stats.sum_mode_gap += t.mode_gap;
        if self.record {
            self.transcripts.push(t.clone());
        }
        Ok(t)
    }

    /// [`Crot::alg1`] with `d₁` and `d₂` delivered encrypted at `slot + 1`.
    ///
    /// `d₁` is a fresh encryption of the transcript value; `d₂ = u₀ ∧ ζ` is
    /// evaluated homomorphically from a fresh `Enc(u₀)` and the key-switched
    /// control.
    pub fn alg1_keyed(
        &mut self,
        w: f64,
        zeta: &CipherBit,
        slot: u32,
        state: &mut StateVector,
        qubit: usize,
    ) -> Result<(CrotTranscript, CipherBit, CipherBit)> {
        if slot as usize >= self.chain.slots() {
            return Err(Error::MissingSlot(slot as usize + 1));
        }
        let t = self.alg1(w, zeta, slot, state, qubit)?;
        let next = slot + 1;
        let zeta_next = self.switch_bit(zeta, next)?;
        let u0 = self.chain.enc(next, t.branches[0].u, &mut self.rng)?;
        let d1 = self.chain.enc(next, t.d1, &mut self.rng)?;
        let d2 = self.gate(|e| e.and(&u0, &zeta_next))?;
        Ok((t, d1, d2))
    }

    /// `Z^d·R_α^{−1}|k⟩` for an encrypted `m`-bit angle; consumes slots
    /// `slot..slot + m − 1`.
    pub fn enc_crot(&mut self, alpha: &EncAngle, state: &mut StateVector, qubit: usize) -> Result<CrotOutput> {
        let mut word = alpha.word.bits.clone();
        if word.is_empty() {
            return Err(Error::Params("angle needs at least one bit".into()));
        }
        let mut slot = alpha.slot;
        let mut d_acc = CipherBit::Public(false);
        let mut ledger = AngleLedger::default();
        while word.len() > 1 {
            let width = word.len();
            let w = 1.0 / (1u64 << width) as f64;
            let lsb = word[0].clone();
            let (_, d1, d2) = self.alg1_keyed(w, &lsb, slot, state, qubit)?;
            slot += 1;
            ledger.steps.push(LedgerStep { width: width as u32, lsb: self.chain.dec(&lsb)?, b: self.chain.dec(&d2)? });
            let rest = self.switch_word(&CipherWord::unsigned(word[1..].to_vec()), slot)?.bits;
            let acc = self.switch_bit(&d_acc, slot)?;
            let mut b = vec![CipherBit::Public(false); width - 1];
            b[0] = d2;
            word = self.gate(|e| hebackend::add_mod1(e, &rest, &b))??;
            d_acc = self.gate(|e| e.xor(&acc, &d1))?;
        }
        ledger.last = self.chain.dec(&word[0])?;
        let d = self.gate(|e| e.xor(&d_acc, &word[0]))?;
        Ok(CrotOutput { d, slot, ledger })
    }

    /// `Z^d X^d·T_α^{−1}|k⟩` up to global phase: [`Crot::enc_crot`]
    /// conjugated by `S`.
    pub fn enc_ctrot(&mut self, alpha: &EncAngle, state: &mut StateVector, qubit: usize) -> Result<CrotOutput> {
        let s = s_matrix();
        state.apply_1q(qubit, &s.adjoint(), ApplyMode::Unitary)?;
        let out = self.enc_crot(alpha, state, qubit)?;
        state.apply_1q(qubit, &s, ApplyMode::Unitary)?;
        Ok(out)
    }

    /// `X^x Z^z·U^{−1}|k⟩` for `U = R_α·T_β·R_γ` given as three encrypted
    /// `m`-bit angles at `slot`; consumes slots `slot..slot + 3m − 1`.
    pub fn enc_cunitary(&mut self, angles: &[CipherWord; 3], slot: u32, state: &mut StateVector, qubit: usize) -> Result<PauliPad> {
        let m = angles[0].bits.len() as u32;
        if m == 0 || angles.iter().any(|a| a.bits.len() as u32 != m) {
            return Err(Error::Params("Euler angles must share a positive width".into()));
        }
        let alpha = EncAngle::new(angles[0].clone(), slot)?;
        let w1 = self.enc_crot(&alpha, state, qubit)?.d;

        let s2 = slot + m;
        let w1 = self.switch_bit(&w1, s2)?;
        let beta = self.switch_word(&angles[1], s2)?.bits;
        let beta = self.gate(|e| hebackend::negate_mod1(e, &beta, &w1))?;
        let w2 = self.enc_ctrot(&EncAngle::new(CipherWord::unsigned(beta), s2)?, state, qubit)?.d;

        let s3 = slot + 2 * m;
        let (w1, w2) = (self.switch_bit(&w1, s3)?, self.switch_bit(&w2, s3)?);
        let gamma = self.switch_word(&angles[2], s3)?.bits;
        let gamma = self.gate(|e| hebackend::negate_mod1(e, &gamma, &w2))?;
        let w3 = self.enc_crot(&EncAngle::new(CipherWord::unsigned(gamma), s3)?, state, qubit)?.d;

        let end = slot + 3 * m - 1;
        let (w1, w2) = (self.switch_bit(&w1, end)?, self.switch_bit(&w2, end)?);
        let z = self.gate(|e| {
            let t = e.xor(&w1, &w2);
            e.xor(&t, &w3)
        })?;
        Ok(PauliPad { x: w2, z, slot: end })
    }

    /// Encrypted `P^a`: the output is `Z^{d'}·P^a|k⟩`. Uses the two-bit
    /// angle `a/4`; consumes slots `slot..slot + 1`.
    pub fn enc_p_gate(&mut self, a: &CipherBit, slot: u32, state: &mut StateVector, qubit: usize) -> Result<(CipherBit, u32)> {
        let angle = EncAngle::new(CipherWord::unsigned(vec![a.clone(), CipherBit::Public(false)]), slot)?;
        let out = self.enc_crot(&angle, state, qubit)?;
        let a_next = self.switch_bit(a, out.slot)?;
        let d = self.gate(|e| e.xor(&out.d, &a_next))?;
        Ok((d, out.slot))
    }

    /// Applies `T` to a Pauli-encrypted qubit `X^a Z^b|ψ⟩` and removes the
    /// stray `P^a` with [`Crot::enc_p_gate`]. Returns the new pad of `T|ψ⟩`.
    pub fn eval_t_gate(&mut self, pad: &PauliPad, state: &mut StateVector, qubit: usize) -> Result<PauliPad> {
        state.apply_1q(qubit, &t_gate(), ApplyMode::Unitary)?;
        let (d, slot) = self.enc_p_gate(&pad.x, pad.slot, state, qubit)?;
        let a = self.switch_bit(&pad.x, slot)?;
        let b = self.switch_bit(&pad.z, slot)?;
        let z = self.gate(|e| {
            let t = e.xor(&b, &d);
            e.xor(&t, &a)
        })?;
        Ok(PauliPad { x: a, z, slot })
    }
}

/// `T = diag(1, e^{iπ/4})`.
pub fn t_gate() -> Mat2 {
    Mat2::phase_rot(0.125)
}

/// `X^x Z^z` as a matrix.
pub fn pauli_pad(x: bool, z: bool) -> Mat2 {
    Mat2::pauli_x().pow_bit(x).mul(&Mat2::pauli_z().pow_bit(z))
}

/// Number of one-bit primitive calls for an `m`-bit angle.
pub fn alg1_calls_per_crot(m: u32) -> u64 {
    m.saturating_sub(1) as u64
}

/// Reads a plaintext angle as an `m`-bit little-endian word.
pub fn angle_word(num: u64, m: u32) -> Vec<bool> {
    (0..m).map(|i| (num >> i) & 1 == 1).collect()
}

/// Plaintext value of an angle word over `2^m`.
pub fn word_value(bits: &[bool]) -> u64 {
    circuit::word_to_u128(bits) as u64
}
