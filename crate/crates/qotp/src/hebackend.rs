//! Bit-level homomorphic backend with a key chain.
//!
//! Two backends share one contract. `Mock` carries the plaintext bit and a
//! noise-depth counter that follows the lattice growth rules; `Lattice` holds
//! real [`MheCiphertext`]s. Public constants fold away before reaching either.
//!
//! The chain has slots `1..=3kL+1`. Moving a bit from slot `i` to `i+1` goes
//! through [`KeyChain::key_switch`]; on the lattice backend this is a
//! recryption with slot `i`'s trapdoor in the clear, on the mock backend it is
//! a relabel with the depth reset.

use crate::circuit::{self, BitEngine};
use crate::error::{Error, Result};
use crate::eulerconv::SignMagBits;
use crate::lattice::{self, AltCiphertext, LweParams, MheCiphertext, TrapdoorKeypair};
use crate::su2core::FixedFrac;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Mock,
    Lattice,
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(Backend::Mock),
            "lattice" => Ok(Backend::Lattice),
            _ => Err(Error::Params(format!("unknown backend {s}"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Mock => "mock",
            Backend::Lattice => "lattice",
        })
    }
}

/// One encrypted (or public) bit. Slots are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CipherBit {
    Public(bool),
    Mock { slot: u32, bit: bool, depth: u32 },
    Lattice { slot: u32, ct: Arc<MheCiphertext> },
}

impl CipherBit {
    pub fn slot(&self) -> Option<u32> {
        match self {
            CipherBit::Public(_) => None,
            CipherBit::Mock { slot, .. } | CipherBit::Lattice { slot, .. } => Some(*slot),
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            CipherBit::Public(_) => 0,
            CipherBit::Mock { depth, .. } => *depth,
            CipherBit::Lattice { ct, .. } => ct.depth,
        }
    }
}

/// Little-endian bits plus an optional sign bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CipherWord {
    pub bits: Vec<CipherBit>,
    pub sign: Option<CipherBit>,
}

impl CipherWord {
    pub fn unsigned(bits: Vec<CipherBit>) -> Self {
        CipherWord { bits, sign: None }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// The common slot of all non-public bits, if any.
    pub fn slot(&self) -> Result<Option<u32>> {
        let mut found = None;
        for b in self.bits.iter().chain(self.sign.iter()) {
            if let Some(s) = b.slot() {
                match found {
                    None => found = Some(s),
                    Some(f) if f != s => return Err(Error::SlotMismatch(f as usize, s as usize)),
                    _ => {}
                }
            }
        }
        Ok(found)
    }

    pub fn to_sign_mag(&self) -> SignMagBits<CipherBit> {
        (self.bits.clone(), self.sign.clone().unwrap_or(CipherBit::Public(false)))
    }

    pub fn from_sign_mag(v: SignMagBits<CipherBit>) -> Self {
        CipherWord { bits: v.0, sign: Some(v.1) }
    }
}

/// Encrypted gate key: four sign-magnitude components with `k + 1`
/// magnitude bits each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncQuat {
    pub k: u32,
    pub comps: [CipherWord; 4],
}

impl EncQuat {
    pub fn slot(&self) -> Result<Option<u32>> {
        let mut found = None;
        for c in &self.comps {
            match (found, c.slot()?) {
                (None, s) => found = s,
                (Some(f), Some(s)) if f != s => return Err(Error::SlotMismatch(f as usize, s as usize)),
                _ => {}
            }
        }
        Ok(found)
    }

    pub fn sign_mag(&self) -> [SignMagBits<CipherBit>; 4] {
        [0, 1, 2, 3].map(|i| self.comps[i].to_sign_mag())
    }
}

/// Cross-encryptions of slot `i`'s secret key and trapdoor under `pk_{i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChainLink {
    Mock { sk_bits: Vec<bool>, trapdoor_bits: Vec<bool> },
    Lattice { sk_bits: Vec<AltCiphertext>, trapdoor_bits: Vec<AltCiphertext> },
}

/// Keys `pk_1 … pk_{3kL+1}` with their secrets and trapdoors, plus the links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyChain {
    pub backend: Backend,
    pub params: LweParams,
    pub levels: u32,
    pub kbits: u32,
    pub keys: Vec<TrapdoorKeypair>,
    pub links: Vec<ChainLink>,
}

/// `3kL + 1`.
pub fn slot_count(kbits: u32, levels: u32) -> usize {
    3 * kbits as usize * levels as usize + 1
}

fn secret_bits(kp: &TrapdoorKeypair) -> (Vec<bool>, Vec<bool>) {
    (kp.e_sk.iter().map(|&b| b == 1).collect(), kp.r.iter().map(|&r| r > 0).collect())
}

pub fn keychain_gen<R: Rng + ?Sized>(
    params: &LweParams,
    levels: u32,
    kbits: u32,
    backend: Backend,
    rng: &mut R,
) -> Result<KeyChain> {
    if kbits == 0 || levels == 0 {
        return Err(Error::Params("k and L must be positive".into()));
    }
    let n = slot_count(kbits, levels);
    let keys = (0..n).map(|_| lattice::gen_trap(params, rng)).collect::<Result<Vec<_>>>()?;
    let links = keys
        .windows(2)
        .map(|w| {
            let (sk, td) = secret_bits(&w[0]);
            match backend {
                Backend::Mock => ChainLink::Mock { sk_bits: sk, trapdoor_bits: td },
                Backend::Lattice => {
                    let mut enc = |bits: Vec<bool>| bits.into_iter().map(|b| lattice::alt_enc(&w[1], b, rng)).collect();
                    ChainLink::Lattice { sk_bits: enc(sk), trapdoor_bits: enc(td) }
                }
            }
        })
        .collect();
    Ok(KeyChain { backend, params: params.clone(), levels, kbits, keys, links })
}

impl KeyChain {
    pub fn slots(&self) -> usize {
        self.keys.len()
    }

    pub fn keypair(&self, slot: u32) -> Result<&TrapdoorKeypair> {
        if slot == 0 {
            return Err(Error::MissingSlot(0));
        }
        self.keys.get(slot as usize - 1).ok_or(Error::MissingSlot(slot as usize))
    }

    pub fn engine(&self) -> HeEngine {
        HeEngine::new(&self.params)
    }

    pub fn enc<R: Rng + ?Sized>(&self, slot: u32, bit: bool, rng: &mut R) -> Result<CipherBit> {
        let kp = self.keypair(slot)?;
        Ok(match self.backend {
            Backend::Mock => CipherBit::Mock { slot, bit, depth: 0 },
            Backend::Lattice => CipherBit::Lattice { slot, ct: Arc::new(lattice::mhe_enc(kp, bit, rng)) },
        })
    }

    pub fn dec(&self, x: &CipherBit) -> Result<bool> {
        match x {
            CipherBit::Public(b) => Ok(*b),
            CipherBit::Mock { slot, bit, .. } => {
                self.keypair(*slot)?;
                Ok(*bit)
            }
            CipherBit::Lattice { slot, ct } => Ok(lattice::mhe_dec(self.keypair(*slot)?, ct)),
        }
    }

    pub fn enc_bits<R: Rng + ?Sized>(&self, slot: u32, bits: &[bool], rng: &mut R) -> Result<Vec<CipherBit>> {
        bits.iter().map(|&b| self.enc(slot, b, rng)).collect()
    }

    pub fn dec_bits(&self, bits: &[CipherBit]) -> Result<Vec<bool>> {
        bits.iter().map(|b| self.dec(b)).collect()
    }

    pub fn enc_word<R: Rng + ?Sized>(&self, slot: u32, bits: &[bool], rng: &mut R) -> Result<CipherWord> {
        Ok(CipherWord::unsigned(self.enc_bits(slot, bits, rng)?))
    }

    /// Encrypts a fixed-point component as `k + 1` magnitude bits and a sign.
    pub fn enc_fixed<R: Rng + ?Sized>(&self, slot: u32, x: &FixedFrac, rng: &mut R) -> Result<CipherWord> {
        let mag: Vec<bool> = (0..=x.k).map(|i| (x.mag >> i) & 1 == 1).collect();
        Ok(CipherWord { bits: self.enc_bits(slot, &mag, rng)?, sign: Some(self.enc(slot, x.neg, rng)?) })
    }

    pub fn dec_fixed(&self, w: &CipherWord, k: u32) -> Result<FixedFrac> {
        if w.bits.len() != k as usize + 1 {
            return Err(Error::WidthMismatch(w.bits.len(), k as usize + 1));
        }
        let mag = self.dec_bits(&w.bits)?.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        let neg = match &w.sign {
            Some(s) => self.dec(s)?,
            None => false,
        };
        Ok(FixedFrac::from_parts(neg, mag, k))
    }

    pub fn enc_quat<R: Rng + ?Sized>(&self, slot: u32, t: &[FixedFrac; 4], rng: &mut R) -> Result<EncQuat> {
        let k = t[0].k;
        let comps = [
            self.enc_fixed(slot, &t[0], rng)?,
            self.enc_fixed(slot, &t[1], rng)?,
            self.enc_fixed(slot, &t[2], rng)?,
            self.enc_fixed(slot, &t[3], rng)?,
        ];
        Ok(EncQuat { k, comps })
    }

    pub fn dec_quat(&self, q: &EncQuat) -> Result<[FixedFrac; 4]> {
        Ok([
            self.dec_fixed(&q.comps[0], q.k)?,
            self.dec_fixed(&q.comps[1], q.k)?,
            self.dec_fixed(&q.comps[2], q.k)?,
            self.dec_fixed(&q.comps[3], q.k)?,
        ])
    }

    /// Moves a bit from slot `i` to slot `i + 1`.
    pub fn key_switch<R: Rng + ?Sized>(&self, x: &CipherBit, rng: &mut R) -> Result<CipherBit> {
        let slot = match x.slot() {
            None => return Ok(x.clone()),
            Some(s) => s,
        };
        if slot as usize >= self.slots() {
            return Err(Error::MissingSlot(slot as usize + 1));
        }
        match x {
            CipherBit::Mock { bit, .. } => Ok(CipherBit::Mock { slot: slot + 1, bit: *bit, depth: 0 }),
            CipherBit::Lattice { ct, .. } => {
                let alt = lattice::mhe_convert(ct, &self.params);
                let open = lattice::alt_invert(self.keypair(slot)?, &alt)?;
                self.enc(slot + 1, open.mu, rng)
            }
            CipherBit::Public(_) => unreachable!("public bits returned above"),
        }
    }

    pub fn key_switch_word<R: Rng + ?Sized>(&self, w: &CipherWord, rng: &mut R) -> Result<CipherWord> {
        Ok(CipherWord {
            bits: w.bits.iter().map(|b| self.key_switch(b, rng)).collect::<Result<_>>()?,
            sign: w.sign.as_ref().map(|s| self.key_switch(s, rng)).transpose()?,
        })
    }

    /// Switches a word forward until it sits at `target`.
    pub fn switch_word_to<R: Rng + ?Sized>(&self, w: &CipherWord, target: u32, rng: &mut R) -> Result<CipherWord> {
        let mut w = w.clone();
        while let Some(s) = w.slot()? {
            if s >= target {
                if s > target {
                    return Err(Error::SlotMismatch(s as usize, target as usize));
                }
                break;
            }
            w = self.key_switch_word(&w, rng)?;
        }
        Ok(w)
    }

    pub fn switch_bit_to<R: Rng + ?Sized>(&self, x: &CipherBit, target: u32, rng: &mut R) -> Result<CipherBit> {
        let w = self.switch_word_to(&CipherWord::unsigned(vec![x.clone()]), target, rng)?;
        Ok(w.bits.into_iter().next().expect("one bit in, one bit out"))
    }

    pub fn switch_quat_to<R: Rng + ?Sized>(&self, q: &EncQuat, target: u32, rng: &mut R) -> Result<EncQuat> {
        Ok(EncQuat {
            k: q.k,
            comps: [
                self.switch_word_to(&q.comps[0], target, rng)?,
                self.switch_word_to(&q.comps[1], target, rng)?,
                self.switch_word_to(&q.comps[2], target, rng)?,
                self.switch_word_to(&q.comps[3], target, rng)?,
            ],
        })
    }

    /// A copy without secret keys or trapdoors in the clear.
    pub fn public_view(&self) -> PublicChain {
        PublicChain {
            backend: self.backend,
            params: self.params.clone(),
            levels: self.levels,
            kbits: self.kbits,
            public_keys: self.keys.iter().map(|k| k.a_prime.clone()).collect(),
            links: self.links.clone(),
        }
    }
}

/// What an evaluator is handed: public keys and the encrypted links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicChain {
    pub backend: Backend,
    pub params: LweParams,
    pub levels: u32,
    pub kbits: u32,
    pub public_keys: Vec<Vec<u64>>,
    pub links: Vec<ChainLink>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    /// Homomorphic NANDs actually evaluated (constant-folded gates excluded).
    pub nands: u64,
    pub max_depth: u32,
    /// Gates whose output exceeded the `η_c` depth budget.
    pub over_budget: u64,
}

/// [`BitEngine`] over [`CipherBit`]s. Errors are sticky: the first one is
/// kept and later gates return placeholders until [`HeEngine::finish`].
pub struct HeEngine {
    params: LweParams,
    pub stats: EngineStats,
    error: Option<Error>,
}

impl HeEngine {
    pub fn new(params: &LweParams) -> Self {
        HeEngine { params: params.clone(), stats: EngineStats::default(), error: None }
    }

    pub fn finish(&mut self) -> Result<()> {
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn fail(&mut self, e: Error) -> CipherBit {
        if self.error.is_none() {
            self.error = Some(e);
        }
        CipherBit::Public(false)
    }

    fn note_depth(&mut self, d: u32) {
        self.stats.max_depth = self.stats.max_depth.max(d);
        if d > self.params.eta_c {
            self.stats.over_budget += 1;
        }
    }

    fn cipher_nand(&mut self, a: &CipherBit, b: &CipherBit) -> CipherBit {
        self.stats.nands += 1;
        match (a, b) {
            (CipherBit::Mock { slot: sa, bit: x, depth: da }, CipherBit::Mock { slot: sb, bit: y, depth: db }) => {
                if sa != sb {
                    return self.fail(Error::SlotMismatch(*sa as usize, *sb as usize));
                }
                let depth = da.max(db) + 1;
                self.note_depth(depth);
                CipherBit::Mock { slot: *sa, bit: !(x & y), depth }
            }
            (CipherBit::Lattice { slot: sa, ct: x }, CipherBit::Lattice { slot: sb, ct: y }) => {
                if sa != sb {
                    return self.fail(Error::SlotMismatch(*sa as usize, *sb as usize));
                }
                let depth = x.depth.max(y.depth) + 1;
                if depth > self.params.depth_capacity() {
                    return self.fail(Error::NoiseBudget(depth));
                }
                match lattice::mhe_eval_nand(x, y, &self.params) {
                    Ok(ct) => {
                        self.note_depth(ct.depth);
                        CipherBit::Lattice { slot: *sa, ct: Arc::new(ct) }
                    }
                    Err(e) => self.fail(e),
                }
            }
            _ => self.fail(Error::Unsupported("mixing mock and lattice bits".into())),
        }
    }
}

impl BitEngine for HeEngine {
    type Bit = CipherBit;

    fn lit(&mut self, b: bool) -> CipherBit {
        CipherBit::Public(b)
    }

    fn nand(&mut self, a: &CipherBit, b: &CipherBit) -> CipherBit {
        match (a, b) {
            (CipherBit::Public(false), _) | (_, CipherBit::Public(false)) => CipherBit::Public(true),
            (CipherBit::Public(true), x) | (x, CipherBit::Public(true)) => self.not(x),
            _ => self.cipher_nand(a, b),
        }
    }

    /// `G − C` on the lattice side: free, and no noise growth.
    fn not(&mut self, a: &CipherBit) -> CipherBit {
        match a {
            CipherBit::Public(b) => CipherBit::Public(!b),
            CipherBit::Mock { slot, bit, depth } => CipherBit::Mock { slot: *slot, bit: !bit, depth: *depth },
            CipherBit::Lattice { slot, ct } => {
                CipherBit::Lattice { slot: *slot, ct: Arc::new(lattice::mhe_not(ct, &self.params)) }
            }
        }
    }

    fn and(&mut self, a: &CipherBit, b: &CipherBit) -> CipherBit {
        match (a, b) {
            (CipherBit::Public(false), _) | (_, CipherBit::Public(false)) => CipherBit::Public(false),
            (CipherBit::Public(true), x) | (x, CipherBit::Public(true)) => x.clone(),
            _ => {
                let n = self.cipher_nand(a, b);
                self.not(&n)
            }
        }
    }

    fn or(&mut self, a: &CipherBit, b: &CipherBit) -> CipherBit {
        match (a, b) {
            (CipherBit::Public(true), _) | (_, CipherBit::Public(true)) => CipherBit::Public(true),
            (CipherBit::Public(false), x) | (x, CipherBit::Public(false)) => x.clone(),
            _ => {
                let (na, nb) = (self.not(a), self.not(b));
                self.cipher_nand(&na, &nb)
            }
        }
    }

    /// Two NAND levels: `nand(nand(a, ¬b), nand(¬a, b))`.
    fn xor(&mut self, a: &CipherBit, b: &CipherBit) -> CipherBit {
        match (a, b) {
            (CipherBit::Public(false), x) | (x, CipherBit::Public(false)) => x.clone(),
            (CipherBit::Public(true), x) | (x, CipherBit::Public(true)) => self.not(x),
            _ => {
                let (na, nb) = (self.not(a), self.not(b));
                let l = self.cipher_nand(a, &nb);
                let r = self.cipher_nand(&na, b);
                self.cipher_nand(&l, &r)
            }
        }
    }

    fn mux(&mut self, sel: &CipherBit, a: &CipherBit, b: &CipherBit) -> CipherBit {
        match sel {
            CipherBit::Public(true) => a.clone(),
            CipherBit::Public(false) => b.clone(),
            _ => {
                let ns = self.not(sel);
                let l = self.nand(sel, a);
                let r = self.nand(&ns, b);
                self.nand(&l, &r)
            }
        }
    }
}

/// XOR of two Alt-form ciphertexts: plain vector addition, no NAND.
pub fn alt_xor(a: &AltCiphertext, b: &AltCiphertext, params: &LweParams) -> Result<AltCiphertext> {
    lattice::alt_xor(a, b, params)
}

/// `a + b mod 1` on little-endian fraction words; the carry out of the
/// `2^{-1}` position is dropped.
pub fn add_mod1<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &[E::Bit]) -> Result<Vec<E::Bit>> {
    if a.len() != b.len() {
        return Err(Error::WidthMismatch(a.len(), b.len()));
    }
    Ok(circuit::add(e, a, b))
}

/// `(−1)^sel · a mod 1`: XOR every bit with `sel`, then add `sel` at the
/// least significant position.
pub fn negate_mod1<E: BitEngine>(e: &mut E, a: &[E::Bit], sel: &E::Bit) -> Vec<E::Bit> {
    let flipped: Vec<E::Bit> = a.iter().map(|x| e.xor(x, sel)).collect();
    let zeros = circuit::lit_word(e, 0, a.len());
    circuit::add_carry(e, &flipped, &zeros, sel).0
}

/// Output component `r` of `a·b` is `Σ sign · a_i · b_j` over these terms.
const QUAT_TERMS: [[(usize, usize, i8); 4]; 4] = [
    [(0, 0, 1), (1, 1, -1), (2, 2, -1), (3, 3, -1)],
    [(0, 1, 1), (1, 0, 1), (2, 3, 1), (3, 2, -1)],
    [(0, 2, 1), (2, 0, 1), (3, 1, 1), (1, 3, -1)],
    [(0, 3, 1), (3, 0, 1), (1, 2, 1), (2, 1, -1)],
];

/// Plaintext reference: `a·b` with every component truncated toward zero to
/// `k` bits. Exact integer arithmetic.
pub fn quat_mul_fixed(a: &[FixedFrac; 4], b: &[FixedFrac; 4]) -> Result<[FixedFrac; 4]> {
    let k = a[0].k;
    if a.iter().chain(b.iter()).any(|x| x.k != k) {
        return Err(Error::Domain("components have different precisions".into()));
    }
    Ok([0, 1, 2, 3].map(|r| {
        let s: i128 = QUAT_TERMS[r]
            .iter()
            .map(|&(i, j, sg)| sg as i128 * a[i].numerator() as i128 * b[j].numerator() as i128)
            .sum();
        let q = s / (1i128 << k);
        FixedFrac::from_parts(q < 0, q.unsigned_abs() as u64, k)
    }))
}

/// `enc_t · c` for a public `c`, truncated to `k` bits. Linear in the
/// encrypted input, so only shifts, additions and public-sign negations occur.
pub fn quat_mul_public<E: BitEngine>(
    e: &mut E,
    t: &[SignMagBits<E::Bit>; 4],
    c: &[FixedFrac; 4],
    k: u32,
) -> Result<[SignMagBits<E::Bit>; 4]> {
    let ku = k as usize;
    if c.iter().any(|x| x.k != k) {
        return Err(Error::Domain("public factor has a different precision".into()));
    }
    if let Some((m, _)) = t.iter().find(|(m, _)| m.len() != ku + 1) {
        return Err(Error::WidthMismatch(m.len(), ku + 1));
    }
    let w = 2 * ku + 4;
    let signed: Vec<Vec<E::Bit>> = t
        .iter()
        .map(|(mag, sign)| {
            let z = circuit::zero_extend(e, mag, w);
            circuit::cond_neg(e, &z, sign)
        })
        .collect();
    let mut out: Vec<SignMagBits<E::Bit>> = Vec::with_capacity(4);
    for terms in &QUAT_TERMS {
        let mut acc = circuit::lit_word(e, 0, w);
        for &(i, j, sg) in terms {
            let coef = sg as i64 * c[j].numerator();
            if coef == 0 {
                continue;
            }
            let mut prod = circuit::lit_word(e, 0, w);
            let mag = coef.unsigned_abs();
            for bit in 0..=ku {
                if (mag >> bit) & 1 == 1 {
                    let shifted = circuit::shl(e, &signed[i], bit);
                    prod = circuit::add(e, &prod, &shifted);
                }
            }
            acc = if coef < 0 { circuit::sub(e, &acc, &prod) } else { circuit::add(e, &acc, &prod) };
        }
        let neg = acc[w - 1].clone();
        let abs = circuit::cond_neg(e, &acc, &neg);
        let mag: Vec<E::Bit> = abs[ku..2 * ku + 1].to_vec();
        let nz = circuit::or_reduce(e, &mag);
        let sign = e.and(&neg, &nz);
        out.push((mag, sign));
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()])
}

/// New gate key `enc_t · k_inv` for a public gate inverse.
pub fn eval_quat_mul_encrypted(e: &mut HeEngine, enc_t: &EncQuat, k_inv: &[FixedFrac; 4]) -> Result<EncQuat> {
    enc_t.slot()?;
    let out = quat_mul_public(e, &enc_t.sign_mag(), k_inv, enc_t.k)?;
    e.finish()?;
    Ok(EncQuat { k: enc_t.k, comps: out.map(CipherWord::from_sign_mag) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Plain;
    use crate::su2core::{quat_inv, quat_mul, truncate_quat, Quat4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn mock_chain(k: u32, l: u32) -> KeyChain {
        keychain_gen(&LweParams::toy_s(), l, k, Backend::Mock, &mut rng(99)).unwrap()
    }

    fn frac_word(v: u64, m: usize) -> Vec<bool> {
        (0..m).map(|i| (v >> i) & 1 == 1).collect()
    }

    fn word_val(bits: &[bool]) -> u64 {
        bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    #[test]
    fn slot_count_formula() {
        assert_eq!(slot_count(2, 1), 7);
        assert_eq!(mock_chain(2, 1).slots(), 7);
        assert_eq!(mock_chain(2, 1).links.len(), 6);
    }

    fn truth_tables(chain: &KeyChain, seed: u64) {
        let mut r = rng(seed);
        let mut e = chain.engine();
        for a in [false, true] {
            for b in [false, true] {
                for s in [false, true] {
                    let (ca, cb, cs) = (chain.enc(1, a, &mut r).unwrap(), chain.enc(1, b, &mut r).unwrap(), chain.enc(1, s, &mut r).unwrap());
                    let outs = [
                        (e.nand(&ca, &cb), !(a && b)),
                        (e.and(&ca, &cb), a && b),
                        (e.or(&ca, &cb), a || b),
                        (e.xor(&ca, &cb), a ^ b),
                        (e.not(&ca), !a),
                        (e.mux(&cs, &ca, &cb), if s { a } else { b }),
                    ];
                    for (i, (c, want)) in outs.iter().enumerate() {
                        assert_eq!(chain.dec(c).unwrap(), *want, "gate {i} on ({a},{b},{s})");
                    }
                }
            }
        }
        e.finish().unwrap();
    }

    #[test]
    fn gate_truth_tables_mock() {
        truth_tables(&mock_chain(1, 1), 1);
    }

    #[test]
    fn gate_truth_tables_lattice() {
        let chain = keychain_gen(&LweParams::small_nand(), 1, 1, Backend::Lattice, &mut rng(2)).unwrap();
        truth_tables(&chain, 3);
    }

    #[test]
    fn derived_gate_depths() {
        let chain = mock_chain(1, 1);
        let mut r = rng(4);
        let mut e = chain.engine();
        let (a, b) = (chain.enc(1, true, &mut r).unwrap(), chain.enc(1, false, &mut r).unwrap());
        assert_eq!(e.not(&a).depth(), 0);
        assert_eq!(e.and(&a, &b).depth(), 1);
        assert_eq!(e.or(&a, &b).depth(), 1);
        assert_eq!(e.xor(&a, &b).depth(), 2);
        assert_eq!(e.mux(&a, &a, &b).depth(), 2);
        assert_eq!(e.xor(&a, &CipherBit::Public(true)).depth(), 0);
    }

    #[test]
    fn slot_mismatch_is_reported() {
        let chain = mock_chain(1, 1);
        let mut r = rng(5);
        let mut e = chain.engine();
        let (a, b) = (chain.enc(1, true, &mut r).unwrap(), chain.enc(2, true, &mut r).unwrap());
        e.nand(&a, &b);
        assert_eq!(e.finish(), Err(Error::SlotMismatch(1, 2)));
    }

    #[test]
    fn alt_xor_needs_no_nand() {
        let p = LweParams::toy_s();
        let mut r = rng(6);
        let kp = lattice::gen_trap(&p, &mut r).unwrap();
        for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
            let x = alt_xor(&lattice::alt_enc(&kp, a, &mut r), &lattice::alt_enc(&kp, b, &mut r), &p).unwrap();
            assert_eq!(lattice::alt_dec(&kp, &x), a ^ b);
        }
    }

    /// Random 8-gate circuits over 3 inputs, kept within `max_depth` NAND
    /// levels (gates that would exceed it become NOTs). Returns decrypted
    /// wires and depths for each backend.
    fn run_random_circuits(p: &LweParams, count: usize, max_depth: u32, seed: u64) {
        let mut r = rng(seed);
        let lat = keychain_gen(p, 1, 1, Backend::Lattice, &mut r).unwrap();
        let mock = keychain_gen(p, 1, 1, Backend::Mock, &mut r).unwrap();
        let gate_depth = [1u32, 1, 1, 2, 2];
        for _ in 0..count {
            let inputs: Vec<bool> = (0..3).map(|_| r.gen()).collect();
            let mut depths = vec![0u32; 3];
            let mut ops = Vec::new();
            for g in 0..8 {
                let (op, i, j, s) = (r.gen_range(0..5usize), r.gen_range(0..3 + g), r.gen_range(0..3 + g), r.gen_range(0..3 + g));
                let d = depths[i].max(depths[j]).max(if op == 4 { depths[s] } else { 0 }) + gate_depth[op];
                if d > max_depth {
                    ops.push((5, i, j, s));
                    depths.push(depths[i]);
                } else {
                    ops.push((op, i, j, s));
                    depths.push(d);
                }
            }
            let mut results = Vec::new();
            for chain in [&mock, &lat] {
                let mut e = chain.engine();
                let mut wires: Vec<CipherBit> = inputs.iter().map(|&b| chain.enc(1, b, &mut r).unwrap()).collect();
                for &(op, i, j, s) in &ops {
                    let w = match op {
                        0 => e.nand(&wires[i], &wires[j]),
                        1 => e.and(&wires[i], &wires[j]),
                        2 => e.or(&wires[i], &wires[j]),
                        3 => e.xor(&wires[i], &wires[j]),
                        4 => e.mux(&wires[s], &wires[i], &wires[j]),
                        _ => e.not(&wires[i]),
                    };
                    wires.push(w);
                }
                e.finish().unwrap();
                results.push((chain.dec_bits(&wires).unwrap(), wires.iter().map(CipherBit::depth).collect::<Vec<_>>()));
            }
            assert_eq!(results[0], results[1], "ops {ops:?} inputs {inputs:?}");
        }
    }

    #[test]
    fn mock_and_lattice_agree_small_nand() {
        let p = LweParams::small_nand();
        assert_eq!(p.depth_capacity(), 3);
        run_random_circuits(&p, 300, p.depth_capacity(), 7);
    }

    #[test]
    fn mock_and_lattice_agree_toy_s() {
        let p = LweParams::toy_s();
        assert_eq!(p.depth_capacity(), 5);
        run_random_circuits(&p, 12, p.depth_capacity(), 17);
    }

    #[test]
    fn lattice_refuses_gates_past_capacity() {
        let p = LweParams::small_nand();
        let chain = keychain_gen(&p, 1, 1, Backend::Lattice, &mut rng(18)).unwrap();
        let mut r = rng(19);
        let mut e = chain.engine();
        let mut x = chain.enc(1, true, &mut r).unwrap();
        let y = chain.enc(1, true, &mut r).unwrap();
        for _ in 0..p.depth_capacity() {
            x = e.nand(&x, &y);
        }
        e.finish().unwrap();
        e.nand(&x, &y);
        assert_eq!(e.finish(), Err(Error::NoiseBudget(p.depth_capacity() + 1)));
    }

    #[test]
    fn key_switch_roundtrip_and_chain() {
        for backend in [Backend::Mock, Backend::Lattice] {
            let mut r = rng(8);
            let chain = keychain_gen(&LweParams::toy_s(), 1, 1, backend, &mut r).unwrap();
            for bit in [false, true] {
                let mut x = chain.enc(1, bit, &mut r).unwrap();
                for slot in 2..=4 {
                    x = chain.key_switch(&x, &mut r).unwrap();
                    assert_eq!(x.slot(), Some(slot));
                    assert_eq!(x.depth(), 0);
                    assert_eq!(chain.dec(&x).unwrap(), bit);
                }
                assert!(matches!(chain.key_switch(&x, &mut r), Err(Error::MissingSlot(5))));
            }
        }
    }

    #[test]
    fn switched_word_feeds_adder() {
        let chain = mock_chain(2, 1);
        let mut r = rng(9);
        let a = chain.enc_word(1, &frac_word(5, 4), &mut r).unwrap();
        let b = chain.enc_word(2, &frac_word(6, 4), &mut r).unwrap();
        let a2 = chain.switch_word_to(&a, 2, &mut r).unwrap();
        let mut e = chain.engine();
        let s = add_mod1(&mut e, &a2.bits, &b.bits).unwrap();
        e.finish().unwrap();
        assert_eq!(word_val(&chain.dec_bits(&s).unwrap()), 11);
        assert!(chain.switch_word_to(&b, 1, &mut r).is_err());
    }

    #[test]
    fn add_mod1_examples() {
        let mut e = Plain;
        // 0.101 + 0.011 = 1.000 ≡ 0; words are LSB first
        assert_eq!(add_mod1(&mut e, &[true, false, true], &[true, true, false]).unwrap(), vec![false; 3]);
        assert_eq!(add_mod1(&mut e, &[true, false], &[true, false]).unwrap(), vec![false, true]);
        assert_eq!(add_mod1(&mut e, &[false, true], &[false, true]).unwrap(), vec![false, false]);
        assert!(add_mod1(&mut e, &[true], &[true, false]).is_err());
        let mut r = rng(10);
        for _ in 0..1000 {
            let m = r.gen_range(1..20);
            let (x, y) = (r.gen_range(0..1u64 << m), r.gen_range(0..1u64 << m));
            let s = add_mod1(&mut e, &frac_word(x, m), &frac_word(y, m)).unwrap();
            assert_eq!(word_val(&s), (x + y) % (1 << m));
        }
    }

    #[test]
    fn negate_mod1_examples() {
        let mut e = Plain;
        let w = frac_word(3, 3); // 0.011
        assert_eq!(negate_mod1(&mut e, &w, &false), w);
        assert_eq!(word_val(&negate_mod1(&mut e, &w, &true)), 5);
        assert_eq!(word_val(&negate_mod1(&mut e, &frac_word(0, 3), &true)), 0);
    }

    #[test]
    fn add_mod1_assoc_commute() {
        let mut e = Plain;
        let mut r = rng(11);
        for _ in 0..10_000 {
            let m = 12;
            let [a, b, c] = [0; 3].map(|_| frac_word(r.gen_range(0..1 << m), m));
            let ab = add_mod1(&mut e, &a, &b).unwrap();
            assert_eq!(ab, add_mod1(&mut e, &b, &a).unwrap());
            let bc = add_mod1(&mut e, &b, &c).unwrap();
            assert_eq!(add_mod1(&mut e, &ab, &c).unwrap(), add_mod1(&mut e, &a, &bc).unwrap());
        }
    }

    fn plain_in(t: &[FixedFrac; 4]) -> [SignMagBits<bool>; 4] {
        t.map(|x| ((0..=x.k).map(|i| (x.mag >> i) & 1 == 1).collect(), x.neg))
    }

    fn plain_out(v: &[SignMagBits<bool>; 4], k: u32) -> [FixedFrac; 4] {
        [0, 1, 2, 3].map(|i| FixedFrac::from_parts(v[i].1, word_val(&v[i].0), k))
    }

    #[test]
    fn encrypted_quat_mul_examples() {
        let chain = mock_chain(8, 1);
        let mut r = rng(12);
        let k = 8;
        let fx = |q: Quat4| q.to_fixed(k);
        let t = fx(Quat4::new(0.5, 0.5, 0.5, 0.5));
        let enc = chain.enc_quat(1, &t, &mut r).unwrap();
        let mut e = chain.engine();
        let id = eval_quat_mul_encrypted(&mut e, &enc, &fx(Quat4::IDENTITY)).unwrap();
        assert_eq!(chain.dec_quat(&id).unwrap(), t);
        let s1 = chain.enc_quat(1, &fx(Quat4::new(0.0, 1.0, 0.0, 0.0)), &mut r).unwrap();
        let out = eval_quat_mul_encrypted(&mut e, &s1, &fx(Quat4::new(0.0, 0.0, 1.0, 0.0))).unwrap();
        assert_eq!(Quat4::from_fixed(&chain.dec_quat(&out).unwrap()), Quat4::new(0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn encrypted_quat_mul_vs_float_oracle() {
        let chain = mock_chain(16, 1);
        let mut r = rng(13);
        let k = 16;
        for _ in 0..100 {
            let mut v = || {
                let q = Quat4::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                let n = q.norm();
                truncate_quat(&Quat4::new(q.0[0] / n, q.0[1] / n, q.0[2] / n, q.0[3] / n), k)
            };
            let (a, b) = (v(), v());
            let want = truncate_quat(&quat_mul(&a, &quat_inv(&b)), k);
            let enc = chain.enc_quat(1, &a.to_fixed(k), &mut r).unwrap();
            let mut e = chain.engine();
            let got = eval_quat_mul_encrypted(&mut e, &enc, &quat_inv(&b).to_fixed(k)).unwrap();
            assert_eq!(Quat4::from_fixed(&chain.dec_quat(&got).unwrap()), want);
        }
    }

    proptest! {
        #[test]
        fn quat_mul_circuit_matches_integer_reference(
            k in 1u32..20,
            raw in proptest::array::uniform8(-1.0f64..1.0),
        ) {
            let half = |o: usize| {
                let q = Quat4::new(raw[o], raw[o + 1], raw[o + 2], raw[o + 3]);
                let n = q.norm().max(1e-9);
                Quat4::new(q.0[0] / n, q.0[1] / n, q.0[2] / n, q.0[3] / n).to_fixed(k)
            };
            let (a, b) = (half(0), half(4));
            let want = quat_mul_fixed(&a, &b).unwrap();
            let got = quat_mul_public(&mut Plain, &plain_in(&a), &b, k).unwrap();
            prop_assert_eq!(plain_out(&got, k), want);
        }
    }

    #[test]
    fn chain_serialization_roundtrip() {
        let chain = mock_chain(2, 1);
        let bytes = serde_json::to_vec(&chain).unwrap();
        let back: KeyChain = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, chain);
        let public = chain.public_view();
        assert_eq!(public.public_keys.len(), 7);
    }

    #[test]
    fn every_adjacent_pair_switches() {
        let chain = mock_chain(2, 1);
        let mut r = rng(14);
        for slot in 1..chain.slots() as u32 {
            let x = chain.enc(slot, true, &mut r).unwrap();
            let y = chain.key_switch(&x, &mut r).unwrap();
            assert_eq!((y.slot(), chain.dec(&y).unwrap()), (Some(slot + 1), true));
        }
    }
}
