//! Toy GSW-style encryption with a gadget trapdoor.
//!
//! Two ciphertext shapes share one key: `MheCiphertext` (an `M × N` matrix,
//! NAND-homomorphic) and `AltCiphertext` (an `M`-vector, XOR-homomorphic),
//! where `M = m + 1` and `N = M·log q`. The key matrix `A` carries a gadget
//! trapdoor, so anyone holding it can recover `(s, e)` from `A·s + e`.
//!
//! `q` is a power of two up to `2^64`; all arithmetic is wrapping `u64`
//! followed by a mask.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Size and noise parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LweParams {
    pub preset: String,
    pub lambda: u32,
    /// LWE secret dimension.
    pub n: usize,
    /// Rows of the uniform block `Ā`.
    pub nbar: usize,
    /// `log₂ q`.
    pub log_q: u32,
    /// Rows of `A`: `nbar + n·log_q`.
    pub m: usize,
    pub beta_init: u64,
    pub eta_c: u32,
    pub eta: u32,
}

impl LweParams {
    pub fn toy_s() -> Self {
        Self::build("toy_s", 16, 1, 8, 64, 2, 1, 1)
    }

    pub fn toy_m() -> Self {
        Self::build("toy_m", 32, 2, 8, 64, 3, 1, 1)
    }

    /// Small modulus for fast NAND-heavy tests. Not a named preset.
    pub fn small_nand() -> Self {
        Self::build("small_nand", 8, 1, 4, 32, 2, 1, 1)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(preset: &str, lambda: u32, n: usize, nbar: usize, log_q: u32, beta_init: u64, eta_c: u32, eta: u32) -> Self {
        LweParams {
            preset: preset.to_string(),
            lambda,
            n,
            nbar,
            log_q,
            m: nbar + n * log_q as usize,
            beta_init,
            eta_c,
            eta,
        }
    }

    /// Shape dictated by `λ`: `n = λ`, `η_c = η = ⌈log₂ λ⌉`, `β_init = ⌈2√n⌉`
    /// and the smallest `log q` meeting `q > 4(m+1)β_f`. These are usually far
    /// beyond 64-bit words and exist for inspection only.
    pub fn paper_shaped(lambda: u32) -> Self {
        let lg = (lambda.max(2) as f64).log2().ceil() as u32;
        let n = lambda as usize;
        let beta = (2.0 * (n as f64).sqrt()).ceil() as u64;
        let mut log_q = 8;
        loop {
            let p = Self::build("paper_shaped", lambda, n, n, log_q, beta, lg, lg);
            if p.constraint_slack_bits() > 0.0 {
                return p;
            }
            log_q += 8;
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "toy_s" => Ok(Self::toy_s()),
            "toy_m" => Ok(Self::toy_m()),
            "small_nand" => Ok(Self::small_nand()),
            _ => match name.strip_prefix("paper_shaped:") {
                Some(l) => Ok(Self::paper_shaped(l.parse().map_err(|_| Error::Params(format!("bad λ in {name}")))?)),
                None => Err(Error::Params(format!("unknown preset {name}"))),
            },
        }
    }

    pub fn with_eta(mut self, eta: u32) -> Self {
        self.eta = eta;
        self
    }

    /// NAND depth the lattice backend will evaluate. Noise grows by about
    /// `N/2` per level (measured), so this is
    /// `⌊(log q − 2 − log₂ β_init) / log₂(N/2)⌋`.
    pub fn depth_capacity(&self) -> u32 {
        let head = self.log_q as f64 - 2.0 - (self.beta_init as f64).log2();
        (head / (self.cols() as f64 / 2.0).log2()).floor().max(0.0) as u32
    }

    /// `M = m + 1`.
    pub fn rows(&self) -> usize {
        self.m + 1
    }

    /// `N = (m + 1)·log q`.
    pub fn cols(&self) -> usize {
        self.rows() * self.log_q as usize
    }

    pub fn mask(&self) -> u64 {
        if self.log_q == 64 {
            u64::MAX
        } else {
            (1u64 << self.log_q) - 1
        }
    }

    pub fn half_q(&self) -> u64 {
        1u64 << (self.log_q - 1)
    }

    pub fn q_f64(&self) -> f64 {
        2f64.powi(self.log_q as i32)
    }

    /// `β_f = β_init·(N+1)^{η_c+η}` as a float (it may exceed 64 bits).
    pub fn beta_f(&self) -> f64 {
        self.beta_init as f64 * ((self.cols() + 1) as f64).powi((self.eta_c + self.eta) as i32)
    }

    /// `log₂ q − log₂(4(m+1)β_f)`; positive iff the modulus constraint holds.
    pub fn constraint_slack_bits(&self) -> f64 {
        self.log_q as f64 - (4.0 * self.rows() as f64 * self.beta_f()).log2()
    }

    /// Inversion radius on `‖e‖₂`: `q / (4(1 + √nbar))`.
    pub fn invert_radius(&self) -> f64 {
        self.q_f64() / (4.0 * (1.0 + (self.nbar as f64).sqrt()))
    }

    /// `C_T` such that the radius equals `q / (C_T·√(n log q))`.
    pub fn c_t(&self) -> f64 {
        4.0 * (1.0 + (self.nbar as f64).sqrt()) / ((self.n * self.log_q as usize) as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.nbar == 0 {
            return Err(Error::Params("dimensions must be positive".into()));
        }
        if !(16..=64).contains(&self.log_q) || self.log_q % 8 != 0 {
            return Err(Error::Params(format!("log q = {} must be a multiple of 8 in 16..=64", self.log_q)));
        }
        if self.m != self.nbar + self.n * self.log_q as usize {
            return Err(Error::Params("m must equal nbar + n·log q".into()));
        }
        if (self.beta_init as f64) < 2.0 * (self.n as f64).sqrt() {
            return Err(Error::Params(format!("β_init = {} below 2√n", self.beta_init)));
        }
        if self.constraint_slack_bits() <= 0.0 {
            return Err(Error::Params(format!(
                "q = 2^{} does not exceed 4(m+1)β_f = 2^{:.1}",
                self.log_q,
                (4.0 * self.rows() as f64 * self.beta_f()).log2()
            )));
        }
        Ok(())
    }

    /// Canonical `key=value` text; the params hash is taken over it.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "preset={}", self.preset);
        let _ = writeln!(s, "lambda={}", self.lambda);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "nbar={}", self.nbar);
        let _ = writeln!(s, "log_q={}", self.log_q);
        let _ = writeln!(s, "m={}", self.m);
        let _ = writeln!(s, "beta_init={}", self.beta_init);
        let _ = writeln!(s, "eta_c={}", self.eta_c);
        let _ = writeln!(s, "eta={}", self.eta);
        let _ = writeln!(s, "c_t={:.6}", self.c_t());
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected key=value".into() })?;
            kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        fn get<T: std::str::FromStr>(kv: &BTreeMap<String, (usize, String)>, key: &str) -> Result<T> {
            let (line, v) = kv.get(key).ok_or_else(|| Error::Params(format!("missing key {key}")))?;
            v.parse().map_err(|_| Error::Parse { line: *line, msg: format!("bad value for {key}") })
        }
        let p = LweParams {
            preset: get(&kv, "preset")?,
            lambda: get(&kv, "lambda")?,
            n: get(&kv, "n")?,
            nbar: get(&kv, "nbar")?,
            log_q: get(&kv, "log_q")?,
            m: get(&kv, "m")?,
            beta_init: get(&kv, "beta_init")?,
            eta_c: get(&kv, "eta_c")?,
            eta: get(&kv, "eta")?,
        };
        p.validate()?;
        Ok(p)
    }

    /// First eight bytes of SHA-256 over [`Self::to_text`], little-endian.
    pub fn hash(&self) -> u64 {
        let d = Sha256::digest(self.to_text().as_bytes());
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Centered representative in `(−q/2, q/2]`.
pub fn centered(x: u64, p: &LweParams) -> i64 {
    let x = x & p.mask();
    if p.log_q == 64 {
        return x as i64;
    }
    let half = p.half_q();
    if x > half {
        (x as i128 - (1i128 << p.log_q)) as i64
    } else {
        x as i64
    }
}

fn lift(x: i64, p: &LweParams) -> u64 {
    (x as u64) & p.mask()
}

/// One draw from the discrete Gaussian truncated to `[−B, B]`, density
/// `∝ exp(−π x² / B²)`.
pub fn sample_gaussian<R: Rng + ?Sized>(b: u64, q_log: u32, rng: &mut R) -> Result<i64> {
    if q_log < 64 && b > 1u64 << (q_log - 1) {
        return Err(Error::Params(format!("Gaussian bound {b} exceeds q/2")));
    }
    Ok(gaussian(b, rng))
}

pub(crate) fn gaussian<R: Rng + ?Sized>(b: u64, rng: &mut R) -> i64 {
    if b == 0 {
        return 0;
    }
    let bi = b as i64;
    let bf = b as f64;
    loop {
        let x = rng.gen_range(-bi..=bi);
        let xf = x as f64 / bf;
        if rng.gen::<f64>() < (-std::f64::consts::PI * xf * xf).exp() {
            return x;
        }
    }
}

pub fn gaussian_vector<R: Rng + ?Sized>(b: u64, len: usize, rng: &mut R) -> Vec<i64> {
    (0..len).map(|_| gaussian(b, rng)).collect()
}

/// Key material of one slot: `A` with its trapdoor, and the derived
/// public/secret pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapdoorKeypair {
    pub params: LweParams,
    /// `A`, `m × n`, row-major.
    pub a: Vec<u64>,
    /// Trapdoor `R ∈ {±1}^{n·log q × nbar}`, row-major.
    pub r: Vec<i8>,
    /// `e_sk ∈ {0,1}^m`; the secret key is `(−e_sk, 1)`.
    pub e_sk: Vec<u8>,
    /// `A' = [A; e_skᵀA]`, `(m+1) × n`, row-major.
    pub a_prime: Vec<u64>,
}

/// Samples `A = [Ā; R·Ā + G_n]` and the secret key.
pub fn gen_trap<R: Rng + ?Sized>(params: &LweParams, rng: &mut R) -> Result<TrapdoorKeypair> {
    params.validate()?;
    let (n, nbar, l) = (params.n, params.nbar, params.log_q as usize);
    let mask = params.mask();
    let abar: Vec<u64> = (0..nbar * n).map(|_| rng.gen::<u64>() & mask).collect();
    let r: Vec<i8> = (0..n * l * nbar).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let mut a = abar.clone();
    for i in 0..n * l {
        for j in 0..n {
            let mut v: u64 = if i / l == j { 1u64 << (i % l) } else { 0 };
            for k in 0..nbar {
                let term = abar[k * n + j];
                v = if r[i * nbar + k] > 0 { v.wrapping_add(term) } else { v.wrapping_sub(term) };
            }
            a.push(v & mask);
        }
    }
    let m = params.m;
    let e_sk: Vec<u8> = (0..m).map(|_| rng.gen_range(0..=1)).collect();
    let mut a_prime = a.clone();
    for j in 0..n {
        let mut v = 0u64;
        for i in 0..m {
            if e_sk[i] == 1 {
                v = v.wrapping_add(a[i * n + j]);
            }
        }
        a_prime.push(v & mask);
    }
    Ok(TrapdoorKeypair { params: params.clone(), a, r, e_sk, a_prime })
}

impl TrapdoorKeypair {
    /// `skᵀ·v` for an `M`-vector.
    pub fn sk_dot(&self, v: &[u64]) -> u64 {
        let m = self.params.m;
        let mut acc = v[m];
        for i in 0..m {
            if self.e_sk[i] == 1 {
                acc = acc.wrapping_sub(v[i]);
            }
        }
        acc & self.params.mask()
    }

    /// `A'·s` as an `M`-vector.
    pub fn a_prime_times(&self, s: &[u64]) -> Vec<u64> {
        let n = self.params.n;
        let mask = self.params.mask();
        (0..self.params.rows())
            .map(|i| (0..n).fold(0u64, |acc, j| acc.wrapping_add(self.a_prime[i * n + j].wrapping_mul(s[j]))) & mask)
            .collect()
    }
}

/// Reads a bit encoded as `μ·q/2 + small`.
fn round_bit(x: u64, p: &LweParams) -> bool {
    let quarter = p.half_q() >> 1;
    (x.wrapping_add(quarter) & p.mask()) >= p.half_q()
}

/// Recovers `(s, e)` from `c = A·s + e` (an `m`-vector).
pub fn invert(kp: &TrapdoorKeypair, c: &[u64]) -> Result<(Vec<u64>, Vec<i64>)> {
    let p = &kp.params;
    let (n, nbar, l, m) = (p.n, p.nbar, p.log_q as usize, p.m);
    if c.len() != m {
        return Err(Error::Dimension(c.len(), m));
    }
    let mask = p.mask();
    let c1 = &c[..nbar];
    let c2 = &c[nbar..];
    // v = c2 − R·c1 = G_n·s + (e2 − R·e1)
    let v: Vec<u64> = (0..n * l)
        .map(|i| {
            let mut x = c2[i];
            for k in 0..nbar {
                x = if kp.r[i * nbar + k] > 0 { x.wrapping_sub(c1[k]) } else { x.wrapping_add(c1[k]) };
            }
            x & mask
        })
        .collect();
    let mut s = vec![0u64; n];
    for (j, sj) in s.iter_mut().enumerate() {
        for t in 0..l {
            let row = l - 1 - t;
            let known = sj.wrapping_shl(row as u32);
            let rest = v[j * l + row].wrapping_sub(known) & mask;
            if round_bit(rest, p) {
                *sj |= 1u64 << t;
            }
        }
    }
    let e: Vec<i64> = (0..m)
        .map(|i| {
            let as_i = (0..n).fold(0u64, |acc, j| acc.wrapping_add(kp.a[i * n + j].wrapping_mul(s[j])));
            centered(c[i].wrapping_sub(as_i), p)
        })
        .collect();
    let norm = e.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if norm > p.invert_radius() {
        return Err(Error::InversionFailed(format!("‖e‖₂ = {norm:.3e} exceeds radius {:.3e}", p.invert_radius())));
    }
    Ok((s, e))
}

/// Vector ciphertext `A'·s + e + (0,…,0, μ·q/2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AltCiphertext {
    pub c: Vec<u64>,
}

/// Result of inverting an [`AltCiphertext`] with the trapdoor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AltOpening {
    pub mu: bool,
    pub s: Vec<u64>,
    /// All `M` error coordinates.
    pub e: Vec<i64>,
}

pub fn alt_enc_with(kp: &TrapdoorKeypair, mu: bool, s: &[u64], e: &[i64]) -> AltCiphertext {
    let p = &kp.params;
    let mut c = kp.a_prime_times(s);
    for (ci, &ei) in c.iter_mut().zip(e) {
        *ci = ci.wrapping_add(lift(ei, p)) & p.mask();
    }
    if mu {
        let last = c.len() - 1;
        c[last] = c[last].wrapping_add(p.half_q()) & p.mask();
    }
    AltCiphertext { c }
}

pub fn alt_enc<R: Rng + ?Sized>(kp: &TrapdoorKeypair, mu: bool, rng: &mut R) -> AltCiphertext {
    let p = &kp.params;
    let s: Vec<u64> = (0..p.n).map(|_| rng.gen::<u64>() & p.mask()).collect();
    let e = gaussian_vector(p.beta_init, p.rows(), rng);
    alt_enc_with(kp, mu, &s, &e)
}

pub fn alt_dec(kp: &TrapdoorKeypair, c: &AltCiphertext) -> bool {
    round_bit(kp.sk_dot(&c.c), &kp.params)
}

pub fn alt_xor(a: &AltCiphertext, b: &AltCiphertext, p: &LweParams) -> Result<AltCiphertext> {
    if a.c.len() != b.c.len() {
        return Err(Error::Dimension(a.c.len(), b.c.len()));
    }
    Ok(AltCiphertext { c: a.c.iter().zip(&b.c).map(|(x, y)| x.wrapping_add(*y) & p.mask()).collect() })
}

/// Opens an Alt ciphertext: trapdoor inversion on the first `m` entries, then
/// the plaintext and last error coordinate from entry `M`.
pub fn alt_invert(kp: &TrapdoorKeypair, c: &AltCiphertext) -> Result<AltOpening> {
    let p = &kp.params;
    if c.c.len() != p.rows() {
        return Err(Error::Dimension(c.c.len(), p.rows()));
    }
    let (s, mut e) = invert(kp, &c.c[..p.m])?;
    let n = p.n;
    let last_as = (0..n).fold(0u64, |acc, j| acc.wrapping_add(kp.a_prime[p.m * n + j].wrapping_mul(s[j])));
    let r = c.c[p.m].wrapping_sub(last_as) & p.mask();
    let mu = round_bit(r, p);
    let em = centered(if mu { r.wrapping_sub(p.half_q()) } else { r }, p);
    if em.unsigned_abs() >= p.half_q() >> 1 {
        return Err(Error::InversionFailed("last error coordinate too large".into()));
    }
    e.push(em);
    Ok(AltOpening { mu, s, e })
}

/// Matrix ciphertext `A'·S + E + μ·G`, stored column-major (`M` entries per
/// column). `depth` counts NAND levels since fresh encryption.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MheCiphertext {
    pub data: Vec<u64>,
    pub depth: u32,
}

impl MheCiphertext {
    pub fn column(&self, j: usize, rows: usize) -> &[u64] {
        &self.data[j * rows..(j + 1) * rows]
    }
}

pub fn mhe_enc<R: Rng + ?Sized>(kp: &TrapdoorKeypair, mu: bool, rng: &mut R) -> MheCiphertext {
    let p = &kp.params;
    let (rows, cols, l, n) = (p.rows(), p.cols(), p.log_q as usize, p.n);
    let mask = p.mask();
    let mut data = Vec::with_capacity(rows * cols);
    for j in 0..cols {
        let s: Vec<u64> = (0..n).map(|_| rng.gen::<u64>() & mask).collect();
        for i in 0..rows {
            let mut v = (0..n).fold(0u64, |acc, t| acc.wrapping_add(kp.a_prime[i * n + t].wrapping_mul(s[t])));
            v = v.wrapping_add(lift(gaussian(p.beta_init, rng), p));
            if mu && j / l == i {
                v = v.wrapping_add(1u64 << (j % l));
            }
            data.push(v & mask);
        }
    }
    MheCiphertext { data, depth: 0 }
}

/// Column `N` as an Alt ciphertext.
pub fn mhe_convert(c: &MheCiphertext, p: &LweParams) -> AltCiphertext {
    AltCiphertext { c: c.column(p.cols() - 1, p.rows()).to_vec() }
}

pub fn mhe_dec(kp: &TrapdoorKeypair, c: &MheCiphertext) -> bool {
    let p = &kp.params;
    round_bit(kp.sk_dot(c.column(p.cols() - 1, p.rows())), p)
}

/// `G − C0·G⁻¹(C1)`.
///
/// `G⁻¹(C1)` is the bit decomposition of `C1`'s entries, so the product is a
/// subset sum of `C0`'s columns; it is evaluated eight columns at a time
/// through a 256-entry table of partial sums.
pub fn mhe_eval_nand(c0: &MheCiphertext, c1: &MheCiphertext, p: &LweParams) -> Result<MheCiphertext> {
    let (rows, cols, l) = (p.rows(), p.cols(), p.log_q as usize);
    if c0.data.len() != rows * cols || c1.data.len() != rows * cols {
        return Err(Error::Dimension(c0.data.len().min(c1.data.len()), rows * cols));
    }
    let mut acc = vec![0u64; rows * cols];
    let mut table = vec![0u64; 256 * rows];
    for blk in 0..cols / 8 {
        let base = blk * 8;
        for pat in 1..256usize {
            let t = pat.trailing_zeros() as usize;
            let prev = pat & (pat - 1);
            let src = c0.column(base + t, rows);
            let (lo, hi) = table.split_at_mut(pat * rows);
            let dst = &mut hi[..rows];
            let from = &lo[prev * rows..prev * rows + rows];
            for i in 0..rows {
                dst[i] = from[i].wrapping_add(src[i]);
            }
        }
        // decomposition index base..base+8 = bits (base % l).. of row base / l
        let (row, shift) = (base / l, base % l);
        for j in 0..cols {
            let pat = ((c1.data[j * rows + row] >> shift) & 0xff) as usize;
            if pat != 0 {
                let dst = &mut acc[j * rows..(j + 1) * rows];
                let src = &table[pat * rows..(pat + 1) * rows];
                for i in 0..rows {
                    dst[i] = dst[i].wrapping_add(src[i]);
                }
            }
        }
    }
    let mask = p.mask();
    for j in 0..cols {
        let g_row = j / l;
        for i in 0..rows {
            let g = if i == g_row { 1u64 << (j % l) } else { 0 };
            let v = &mut acc[j * rows + i];
            *v = g.wrapping_sub(*v) & mask;
        }
    }
    Ok(MheCiphertext { data: acc, depth: c0.depth.max(c1.depth) + 1 })
}

/// `G − C`: NOT costs no noise growth.
pub fn mhe_not(c: &MheCiphertext, p: &LweParams) -> MheCiphertext {
    let (rows, l) = (p.rows(), p.log_q as usize);
    let mask = p.mask();
    let data = c
        .data
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let (j, i) = (idx / rows, idx % rows);
            let g = if i == j / l { 1u64 << (j % l) } else { 0 };
            g.wrapping_sub(v) & mask
        })
        .collect();
    MheCiphertext { data, depth: c.depth }
}

/// Hellinger distance between the truncated Gaussian `D_{β_f}^M` and its
/// shift by `shift`, computed coordinate-wise. Small bounds are summed
/// exactly; large ones use the wide-Gaussian expansion
/// `ln BC ≈ −π e²/(4β²) + ln(1 − |e|·e^{−π}/Z)`, `Z = Σ ρ`.
pub fn hellinger_shifted(beta_f: f64, shift: &[i64]) -> f64 {
    let mut log_bc = 0.0;
    for &e in shift {
        let e = e.unsigned_abs() as f64;
        if e == 0.0 {
            continue;
        }
        if beta_f <= 2.0e5 {
            let b = beta_f.floor() as i64;
            let g = |x: f64| (-std::f64::consts::PI * x * x / (beta_f * beta_f)).exp();
            let z: f64 = (-b..=b).map(|x| g(x as f64)).sum();
            let ei = e as i64;
            let ov: f64 = ((ei - b).max(-b)..=b).map(|x| (g(x as f64) * g((x - ei) as f64)).sqrt()).sum();
            log_bc += (ov / z).ln();
        } else {
            let z = beta_f * 0.987_580_669_348_447_7; // ∫ over [−β, β] = β·erf(√π)
            log_bc += -std::f64::consts::PI * e * e / (4.0 * beta_f * beta_f) + (-(e * (-std::f64::consts::PI).exp()) / z).ln_1p();
        }
    }
    (-log_bc.exp_m1()).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn presets_satisfy_constraint() {
        for p in [LweParams::toy_s(), LweParams::toy_m(), LweParams::small_nand()] {
            p.validate().unwrap();
            assert!(p.log_q <= 64);
        }
        for eta in 1..=3 {
            LweParams::toy_s().with_eta(eta).validate().unwrap();
        }
        assert!(LweParams::toy_s().with_eta(4).validate().is_err());
        let mut bad = LweParams::toy_s();
        bad.log_q = 16;
        bad.m = bad.nbar + 16;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn paper_shaped_uses_log_lambda() {
        let p = LweParams::paper_shaped(16);
        assert_eq!((p.eta_c, p.eta), (4, 4));
        assert!(p.constraint_slack_bits() > 0.0);
        assert!(p.log_q > 64);
        assert!(gen_trap(&p, &mut rng(0)).is_err());
    }

    #[test]
    fn params_text_roundtrip_and_hash() {
        let p = LweParams::toy_s();
        let back = LweParams::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.hash(), p.hash());
        assert_ne!(p.hash(), LweParams::toy_m().hash());
        assert!(LweParams::from_text("n=1\n").is_err());
    }

    #[test]
    fn gaussian_b1_ratio() {
        let mut r = rng(1);
        let draws = 1_000_000;
        let mut counts = [0u64; 3];
        for _ in 0..draws {
            let x = sample_gaussian(1, 64, &mut r).unwrap();
            counts[(x + 1) as usize] += 1;
        }
        let z = 1.0 + 2.0 * (-std::f64::consts::PI).exp();
        let p1 = (-std::f64::consts::PI).exp() / z;
        for (i, &c) in counts.iter().enumerate() {
            let p = if i == 1 { 1.0 / z } else { p1 };
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - draws as f64 * p).abs() < 4.0 * sigma, "bucket {i}");
        }
    }

    #[test]
    fn gaussian_b8_symmetric() {
        let mut r = rng(2);
        let draws = 1_000_000;
        let xs: Vec<i64> = (0..draws).map(|_| gaussian(8, &mut r)).collect();
        assert!(xs.iter().all(|x| x.abs() <= 8));
        let mean = xs.iter().sum::<i64>() as f64 / draws as f64;
        let var = xs.iter().map(|&x| (x * x) as f64).sum::<f64>() / draws as f64;
        assert!(mean.abs() < 4.0 * (var / draws as f64).sqrt());
        assert!(sample_gaussian(1 << 20, 16, &mut r).is_err());
    }

    #[test]
    fn secret_key_annihilates_public_key() {
        let mut r = rng(3);
        for p in [LweParams::toy_s(), LweParams::toy_m()] {
            let kp = gen_trap(&p, &mut r).unwrap();
            for j in 0..p.n {
                let col: Vec<u64> = (0..p.rows()).map(|i| kp.a_prime[i * p.n + j]).collect();
                assert_eq!(kp.sk_dot(&col), 0);
            }
        }
    }

    #[test]
    fn key_entries_uniform_chi_square() {
        // top nibble of every A entry, pooled over key draws
        let mut r = rng(4);
        let p = LweParams::toy_s();
        let mut counts = [0u64; 16];
        let mut total = 0u64;
        for _ in 0..200 {
            let kp = gen_trap(&p, &mut r).unwrap();
            for &v in &kp.a {
                counts[(v >> 60) as usize] += 1;
                total += 1;
            }
        }
        let exp = total as f64 / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - exp).powi(2) / exp).sum();
        // 15 degrees of freedom, 0.1% critical value
        assert!(chi2 < 37.7, "χ² = {chi2}");
    }

    #[test]
    fn invert_zero_error_and_gaussian_error() {
        let mut r = rng(5);
        let p = LweParams::toy_s();
        let kp = gen_trap(&p, &mut r).unwrap();
        let n = p.n;
        let times_a = |s: &[u64], e: &[i64]| -> Vec<u64> {
            (0..p.m)
                .map(|i| {
                    let v = (0..n).fold(0u64, |acc, j| acc.wrapping_add(kp.a[i * n + j].wrapping_mul(s[j])));
                    v.wrapping_add(e[i] as u64) & p.mask()
                })
                .collect()
        };
        let s: Vec<u64> = (0..n).map(|_| r.gen()).collect();
        let (s2, e2) = invert(&kp, &times_a(&s, &vec![0; p.m])).unwrap();
        assert_eq!(s2, s);
        assert!(e2.iter().all(|&x| x == 0));
        for _ in 0..1000 {
            let s: Vec<u64> = (0..n).map(|_| r.gen()).collect();
            let e = gaussian_vector(p.beta_init, p.m, &mut r);
            assert_eq!(invert(&kp, &times_a(&s, &e)).unwrap(), (s, e));
        }
        // error beyond the radius is reported
        let big = (p.invert_radius() * 1.5) as i64;
        let mut e = vec![0i64; p.m];
        e[0] = big;
        e[1] = -big;
        assert!(matches!(invert(&kp, &times_a(&s, &e)), Err(Error::InversionFailed(_))));
    }

    #[test]
    fn alt_roundtrip_xor_and_noise_additivity() {
        let mut r = rng(6);
        let p = LweParams::toy_s();
        let kp = gen_trap(&p, &mut r).unwrap();
        for mu in [false, true] {
            let c = alt_enc(&kp, mu, &mut r);
            assert_eq!(alt_dec(&kp, &c), mu);
            assert_eq!(alt_invert(&kp, &c).unwrap().mu, mu);
        }
        for a in [false, true] {
            for b in [false, true] {
                let ca = alt_enc(&kp, a, &mut r);
                let cb = alt_enc(&kp, b, &mut r);
                let x = alt_xor(&ca, &cb, &p).unwrap();
                assert_eq!(alt_dec(&kp, &x), a ^ b);
                let (oa, ob, ox) =
                    (alt_invert(&kp, &ca).unwrap(), alt_invert(&kp, &cb).unwrap(), alt_invert(&kp, &x).unwrap());
                let sum: Vec<i64> = oa.e.iter().zip(&ob.e).map(|(x, y)| x + y).collect();
                assert_eq!(ox.e, sum);
            }
        }
    }

    #[test]
    fn mhe_fresh_decrypts_and_converts() {
        let mut r = rng(7);
        let p = LweParams::toy_s();
        let kp = gen_trap(&p, &mut r).unwrap();
        for mu in [false, true] {
            let c = mhe_enc(&kp, mu, &mut r);
            assert_eq!(mhe_dec(&kp, &c), mu);
            let alt = mhe_convert(&c, &p);
            assert_eq!(alt_dec(&kp, &alt), mu);
            let open = alt_invert(&kp, &alt).unwrap();
            assert_eq!(open.mu, mu);
            assert!(open.e.iter().all(|x| x.unsigned_abs() <= p.beta_init));
            let fresh = alt_enc(&kp, true, &mut r);
            assert_eq!(alt_dec(&kp, &alt_xor(&fresh, &alt, &p).unwrap()), !mu);
        }
    }

    #[test]
    fn nand_truth_table_over_keys() {
        let mut r = rng(8);
        let p = LweParams::small_nand();
        for _ in 0..100 {
            let kp = gen_trap(&p, &mut r).unwrap();
            for a in [false, true] {
                for b in [false, true] {
                    let ca = mhe_enc(&kp, a, &mut r);
                    let cb = mhe_enc(&kp, b, &mut r);
                    let c = mhe_eval_nand(&ca, &cb, &p).unwrap();
                    assert_eq!(mhe_dec(&kp, &c), !(a && b));
                    assert_eq!(c.depth, 1);
                    assert_eq!(mhe_dec(&kp, &mhe_not(&c, &p)), a && b);
                }
            }
        }
    }

    #[test]
    fn nand_on_toy_s() {
        let mut r = rng(9);
        let p = LweParams::toy_s();
        let kp = gen_trap(&p, &mut r).unwrap();
        let (c0, c1) = (mhe_enc(&kp, true, &mut r), mhe_enc(&kp, true, &mut r));
        let c = mhe_eval_nand(&c0, &c1, &p).unwrap();
        assert!(!mhe_dec(&kp, &c));
        let open = alt_invert(&kp, &mhe_convert(&c, &p)).unwrap();
        let bound = p.beta_init as f64 * (p.cols() + 1) as f64;
        assert!(open.e.iter().all(|&x| (x.unsigned_abs() as f64) <= bound));
    }

    #[test]
    fn depth_four_chain_decrypts() {
        let mut r = rng(10);
        let p = LweParams::toy_s();
        let kp = gen_trap(&p, &mut r).unwrap();
        let mut bits = [true, false, true, true, false];
        let mut cts: Vec<MheCiphertext> = bits.iter().map(|&b| mhe_enc(&kp, b, &mut r)).collect();
        for _ in 0..4 {
            let c = mhe_eval_nand(&cts[0], &cts[1], &p).unwrap();
            bits[0] = !(bits[0] && bits[1]);
            cts[0] = c;
            bits.rotate_left(1);
            cts.rotate_left(1);
        }
        for (c, &b) in cts.iter().zip(&bits) {
            assert_eq!(mhe_dec(&kp, c), b);
        }
    }

    #[test]
    fn hellinger_decreases_with_eta() {
        let shift: Vec<i64> = (0..73).map(|i| (i % 5) - 2).collect();
        let h: Vec<f64> = (1..=3).map(|eta| hellinger_shifted(LweParams::toy_s().with_eta(eta).beta_f(), &shift)).collect();
        assert!(h[0] > h[1] && h[1] > h[2] && h[2] > 0.0, "{h:?}");
        // the two evaluation paths agree where both apply
        let exact = hellinger_shifted(1.9e5, &[3, -2]);
        let approx = hellinger_shifted(2.1e5, &[3, -2]) * (2.1e5f64 / 1.9e5).sqrt();
        assert!((exact - approx).abs() / exact < 0.02);
    }
}
