//! Euler angles for SU(2) and the fixed-point numerics that compute them.
//!
//! `U(α, β, γ) = R_α · T_β · R_γ` with `R_w = diag(1, e^{2πiw})` and `T_β` the
//! real rotation by `πβ`. Angles are fractions of a turn (`R`) or half-turn
//! (`T`), so bitwise encryptions of them can drive encrypted rotations.
//!
//! The approximate conversion runs one arithmetic pipeline written against
//! [`FxArith`]. [`NativeFx`] evaluates it on integers; [`CircuitFx`] evaluates
//! the very same sequence of operations as a boolean circuit on any
//! [`BitEngine`], so encrypted and cleartext results agree bit for bit.

use crate::circuit::{self, BitEngine};
use crate::error::{Error, Result};
use crate::su2core::{quat_to_matrix, FixedFrac, Mat2, Quat4, UnitQuat4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Below this magnitude `cos πβ` or `sin πβ` is treated as zero.
pub const DEGENERATE_TOL: f64 = 1.0 / (1u64 << 20) as f64;
/// Integer bits above the binary point (sign included) in pipeline words.
pub const INT_BITS: u32 = 6;
pub const MAX_FRAC_BITS: u32 = 57;

const PRESCALE_STEPS: usize = 20;
const SQRT_ITERS: usize = 12;
const INV_ITERS: usize = 8;

pub fn euler_to_matrix(alpha: f64, beta: f64, gamma: f64) -> Mat2 {
    Mat2::phase_rot(alpha).mul(&Mat2::real_rot(beta)).mul(&Mat2::phase_rot(gamma))
}

/// Real-valued angles in `[0, 1)`, used by the exact conversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerReal {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerReal {
    pub fn matrix(&self) -> Mat2 {
        euler_to_matrix(self.alpha, self.beta, self.gamma)
    }

    /// Brings `β ∈ (½, 1)` back to `[0, ½]`, using `T_β ∝ Z·T_{1−β}·Z`.
    pub fn canonical(self) -> Self {
        let m1 = |x: f64| x.rem_euclid(1.0);
        let (a, b, g) = (m1(self.alpha), m1(self.beta), m1(self.gamma));
        if b > 0.5 {
            EulerReal { alpha: m1(a + 0.5), beta: 1.0 - b, gamma: m1(g + 0.5) }
        } else {
            EulerReal { alpha: a, beta: b, gamma: g }
        }
    }
}

/// Angles as `m`-bit binary fractions: `alpha / 2^m` etc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EulerAngles {
    pub m: u32,
    pub alpha: u64,
    pub beta: u64,
    pub gamma: u64,
}

impl EulerAngles {
    pub fn zero(m: u32) -> Self {
        EulerAngles { m, alpha: 0, beta: 0, gamma: 0 }
    }

    /// Rounds each real angle to the nearest `m`-bit fraction mod 1.
    pub fn quantize(e: &EulerReal, m: u32) -> Self {
        let q = |x: f64| ((x.rem_euclid(1.0) * (1u64 << m) as f64).round() as u64) & ((1u64 << m) - 1);
        EulerAngles { m, alpha: q(e.alpha), beta: q(e.beta), gamma: q(e.gamma) }
    }

    pub fn to_real(&self) -> EulerReal {
        let s = (1u64 << self.m) as f64;
        EulerReal { alpha: self.alpha as f64 / s, beta: self.beta as f64 / s, gamma: self.gamma as f64 / s }
    }

    pub fn matrix(&self) -> Mat2 {
        self.to_real().matrix()
    }

    /// Little-endian bits of the three angles.
    pub fn words(&self) -> [Vec<bool>; 3] {
        [self.alpha, self.beta, self.gamma].map(|v| (0..self.m).map(|i| (v >> i) & 1 == 1).collect())
    }

    pub fn from_words(words: &[Vec<bool>; 3]) -> Self {
        let m = words[0].len() as u32;
        let v = |w: &Vec<bool>| circuit::word_to_u128(w) as u64;
        EulerAngles { m, alpha: v(&words[0]), beta: v(&words[1]), gamma: v(&words[2]) }
    }
}

/// Exact conversion: returns angles and the phase `φ` with
/// `U(α,β,γ) = φ · U_t`.
pub fn quat_to_euler_exact(t: &UnitQuat4) -> (EulerReal, C64) {
    let [t1, t2, t3, t4] = t.comps();
    let x = C64::new(t1, t3);
    let y = C64::new(t4, t2);
    let (c, s) = (x.norm(), y.norm());
    let beta = s.atan2(c) / PI;
    let turn = |z: C64| (z.arg() / (2.0 * PI)).rem_euclid(1.0);
    if c < DEGENERATE_TOL {
        // β = ½: only R_γ carries phase
        let phase = s / (-y.conj());
        let e = EulerReal { alpha: 0.0, beta, gamma: turn(y * y) };
        return (e, phase);
    }
    let phase = x.conj() / c;
    if s < DEGENERATE_TOL {
        let e = EulerReal { alpha: turn(x.conj() * x.conj()), beta, gamma: 0.0 };
        return (e, phase);
    }
    let alpha = turn(C64::new(-t4, t2) * x.conj());
    let gamma = turn(-(y * x.conj()));
    (EulerReal { alpha, beta, gamma }, phase)
}

/// One of the four expansion discs, centred at `e^{iπ(s/2 − 1/4)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscIndex(u8);

impl DiscIndex {
    pub fn new(s: u8) -> Result<Self> {
        if (1..=4).contains(&s) {
            Ok(DiscIndex(s))
        } else {
            Err(Error::Domain(format!("disc index {s} not in 1..=4")))
        }
    }

    /// `l = δa − δb − 2δaδb + 1 (mod 4)`, with 0 read as 4.
    pub fn from_signs(a_neg: bool, b_neg: bool) -> Self {
        let (da, db) = (a_neg as i32, b_neg as i32);
        let l = (da - db - 2 * da * db + 1).rem_euclid(4);
        DiscIndex(if l == 0 { 4 } else { l as u8 })
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn theta(self) -> f64 {
        match self.0 {
            1 => PI / 4.0,
            2 => 3.0 * PI / 4.0,
            3 => -3.0 * PI / 4.0,
            _ => -PI / 4.0,
        }
    }

    pub fn center(self) -> C64 {
        C64::from_polar(1.0, self.theta())
    }
}

pub const DISC_RADIUS: f64 = 0.9;

/// Degree-`degree` Taylor polynomial of `ln` around the disc centre.
pub fn taylor_ln_eval(z: C64, degree: usize, s: DiscIndex) -> Result<C64> {
    let a = s.center();
    let w = z - a;
    if w.norm() >= DISC_RADIUS {
        return Err(Error::Domain(format!("{z} lies outside disc {}", s.0)));
    }
    let ratio = w / a;
    let mut pow = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, s.theta());
    for n in 1..=degree {
        pow *= ratio;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += pow * (sign / n as f64);
    }
    Ok(sum)
}

/// Two's-complement scaled integer `raw / 2^frac`, `|value| < 2^{INT_BITS-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointNumber {
    pub raw: i128,
    pub frac: u32,
}

impl FixedPointNumber {
    pub fn from_f64(x: f64, frac: u32) -> Self {
        FixedPointNumber { raw: (x * 2f64.powi(frac as i32)).round() as i128, frac }
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / 2f64.powi(self.frac as i32)
    }
}

/// The arithmetic vocabulary of the Euler pipeline. `V` is a word of
/// `width()` bits holding `frac()` fractional bits; `F` is a single flag.
pub trait FxArith {
    type V: Clone;
    type F: Clone;

    fn frac(&self) -> u32;
    fn konst(&mut self, raw: i128) -> Self::V;
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn neg(&mut self, a: &Self::V) -> Self::V;
    /// `floor(a·b / 2^frac)`, wrapped.
    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Self::V;
    fn shl(&mut self, a: &Self::V, s: usize) -> Self::V;
    fn shr(&mut self, a: &Self::V, s: usize) -> Self::V;
    fn is_neg(&mut self, a: &Self::V) -> Self::F;
    fn flag_and(&mut self, a: &Self::F, b: &Self::F) -> Self::F;
    fn flag_not(&mut self, a: &Self::F) -> Self::F;
    /// `f ? a : b`.
    fn select(&mut self, f: &Self::F, a: &Self::V, b: &Self::V) -> Self::V;
    /// Sign-extends the low `n` bits of `a`.
    fn sext_low(&mut self, a: &Self::V, n: usize) -> Self::V;
    /// The low `n` bits of `a`, least significant first.
    fn low_bits(&mut self, a: &Self::V, n: usize) -> Vec<Self::F>;
    /// Sign-magnitude input with `k_in` fractional bits; `mag` has `k_in+1` bits.
    fn input(&mut self, mag: &[Self::F], sign: &Self::F, k_in: u32) -> Self::V;

    fn konst_f64(&mut self, x: f64) -> Self::V {
        let raw = (x * 2f64.powi(self.frac() as i32)).round() as i128;
        self.konst(raw)
    }
}

/// Integer evaluation of [`FxArith`].
#[derive(Clone, Copy, Debug)]
pub struct NativeFx {
    frac: u32,
    width: u32,
}

impl NativeFx {
    pub fn new(frac: u32) -> Self {
        assert!((1..=MAX_FRAC_BITS).contains(&frac), "fraction bits {frac} out of range");
        NativeFx { frac, width: frac + INT_BITS }
    }

    fn wrap(&self, v: i128) -> i128 {
        let s = 128 - self.width;
        (v << s) >> s
    }
}

impl FxArith for NativeFx {
    type V = i128;
    type F = bool;

    fn frac(&self) -> u32 {
        self.frac
    }
    fn konst(&mut self, raw: i128) -> i128 {
        self.wrap(raw)
    }
    fn add(&mut self, a: &i128, b: &i128) -> i128 {
        self.wrap(a + b)
    }
    fn sub(&mut self, a: &i128, b: &i128) -> i128 {
        self.wrap(a - b)
    }
    fn neg(&mut self, a: &i128) -> i128 {
        self.wrap(-a)
    }
    fn mul(&mut self, a: &i128, b: &i128) -> i128 {
        self.wrap((a * b) >> self.frac)
    }
    fn shl(&mut self, a: &i128, s: usize) -> i128 {
        self.wrap(a << s)
    }
    fn shr(&mut self, a: &i128, s: usize) -> i128 {
        a >> s
    }
    fn is_neg(&mut self, a: &i128) -> bool {
        *a < 0
    }
    fn flag_and(&mut self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
    fn flag_not(&mut self, a: &bool) -> bool {
        !*a
    }
    fn select(&mut self, f: &bool, a: &i128, b: &i128) -> i128 {
        if *f {
            *a
        } else {
            *b
        }
    }
    fn sext_low(&mut self, a: &i128, n: usize) -> i128 {
        let s = 128 - n as u32;
        (a << s) >> s
    }
    fn low_bits(&mut self, a: &i128, n: usize) -> Vec<bool> {
        (0..n).map(|i| (a >> i) & 1 == 1).collect()
    }
    fn input(&mut self, mag: &[bool], sign: &bool, k_in: u32) -> i128 {
        let m = circuit::word_to_u128(mag) as i128;
        let v = self.wrap(m << (self.frac - k_in));
        if *sign {
            self.wrap(-v)
        } else {
            v
        }
    }
}

/// Boolean-circuit evaluation of [`FxArith`] on a [`BitEngine`].
pub struct CircuitFx<'e, E: BitEngine> {
    pub engine: &'e mut E,
    frac: u32,
    width: usize,
}

impl<'e, E: BitEngine> CircuitFx<'e, E> {
    pub fn new(engine: &'e mut E, frac: u32) -> Self {
        assert!((1..=MAX_FRAC_BITS).contains(&frac), "fraction bits {frac} out of range");
        CircuitFx { engine, frac, width: (frac + INT_BITS) as usize }
    }
}

impl<E: BitEngine> FxArith for CircuitFx<'_, E> {
    type V = Vec<E::Bit>;
    type F = E::Bit;

    fn frac(&self) -> u32 {
        self.frac
    }
    fn konst(&mut self, raw: i128) -> Self::V {
        circuit::lit_signed(self.engine, raw, self.width)
    }
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Self::V {
        circuit::add(self.engine, a, b)
    }
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Self::V {
        circuit::sub(self.engine, a, b)
    }
    fn neg(&mut self, a: &Self::V) -> Self::V {
        circuit::neg(self.engine, a)
    }
    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Self::V {
        circuit::mul_fixed(self.engine, a, b, self.frac as usize)
    }
    fn shl(&mut self, a: &Self::V, s: usize) -> Self::V {
        circuit::shl(self.engine, a, s)
    }
    fn shr(&mut self, a: &Self::V, s: usize) -> Self::V {
        circuit::shr_arith::<E>(a, s)
    }
    fn is_neg(&mut self, a: &Self::V) -> E::Bit {
        a[self.width - 1].clone()
    }
    fn flag_and(&mut self, a: &E::Bit, b: &E::Bit) -> E::Bit {
        self.engine.and(a, b)
    }
    fn flag_not(&mut self, a: &E::Bit) -> E::Bit {
        self.engine.not(a)
    }
    fn select(&mut self, f: &E::Bit, a: &Self::V, b: &Self::V) -> Self::V {
        circuit::mux_word(self.engine, f, a, b)
    }
    fn sext_low(&mut self, a: &Self::V, n: usize) -> Self::V {
        circuit::sign_extend::<E>(&a[..n], self.width)
    }
    fn low_bits(&mut self, a: &Self::V, n: usize) -> Vec<E::Bit> {
        a[..n].to_vec()
    }
    fn input(&mut self, mag: &[E::Bit], sign: &E::Bit, k_in: u32) -> Self::V {
        let shift = (self.frac - k_in) as usize;
        let mut w: Vec<E::Bit> = (0..shift).map(|_| self.engine.lit(false)).collect();
        w.extend_from_slice(mag);
        let w = circuit::zero_extend(self.engine, &w, self.width);
        circuit::cond_neg(self.engine, &w, sign)
    }
}

fn lt_const<A: FxArith>(ar: &mut A, x: &A::V, raw: i128) -> A::F {
    let c = ar.konst(raw);
    let d = ar.sub(x, &c);
    ar.is_neg(&d)
}

/// Coupled iteration `a ← a(1 − b/2)`, `b ← b²(b − 3)/4` from `a = x`, `b = x − 1`.
fn sqrt_iter<A: FxArith>(ar: &mut A, x: &A::V, iters: usize) -> A::V {
    let one = ar.konst(1i128 << ar.frac());
    let three = ar.konst(3i128 << ar.frac());
    let mut a = x.clone();
    let mut b = ar.sub(x, &one);
    for _ in 0..iters {
        let hb = ar.shr(&b, 1);
        let ahb = ar.mul(&a, &hb);
        a = ar.sub(&a, &ahb);
        let b2 = ar.mul(&b, &b);
        let bm3 = ar.sub(&b, &three);
        let p = ar.mul(&b2, &bm3);
        b = ar.shr(&p, 2);
    }
    a
}

/// Coupled iteration `e ← e²`, `a ← a(1 + e)` from `e = 1 − x`, `a = 1 + e`.
/// After `iters` rounds `a = (1 − (1 − x)^{2^{iters+1}}) / x`.
fn inv_iter<A: FxArith>(ar: &mut A, x: &A::V, iters: usize) -> A::V {
    let one = ar.konst(1i128 << ar.frac());
    let mut e = ar.sub(&one, x);
    let mut a = ar.add(&one, &e);
    for _ in 0..iters {
        e = ar.mul(&e, &e);
        let ae = ar.mul(&a, &e);
        a = ar.add(&a, &ae);
    }
    a
}

/// Square root on `[0, ~1]`: scale small inputs by 4 until they reach 1/16,
/// iterate, then undo the scaling.
fn sqrt_scaled<A: FxArith>(ar: &mut A, x: &A::V) -> A::V {
    let sixteenth = 1i128 << (ar.frac() - 4);
    let mut x = x.clone();
    let mut flags = Vec::with_capacity(PRESCALE_STEPS);
    for _ in 0..PRESCALE_STEPS {
        let f = lt_const(ar, &x, sixteenth);
        let up = ar.shl(&x, 2);
        x = ar.select(&f, &up, &x);
        flags.push(f);
    }
    let mut r = sqrt_iter(ar, &x, SQRT_ITERS);
    for f in flags.iter().rev() {
        let down = ar.shr(&r, 1);
        r = ar.select(f, &down, &r);
    }
    r
}

/// Rescales `z` to (approximately) unit modulus.
fn normalize<A: FxArith>(ar: &mut A, zr: &A::V, zi: &A::V) -> (A::V, A::V) {
    let sixteenth = 1i128 << (ar.frac() - 4);
    let rr = ar.mul(zr, zr);
    let ii = ar.mul(zi, zi);
    let mut n2 = ar.add(&rr, &ii);
    let (mut zr, mut zi) = (zr.clone(), zi.clone());
    for _ in 0..PRESCALE_STEPS {
        let f = lt_const(ar, &n2, sixteenth);
        let zr2 = ar.shl(&zr, 1);
        let zi2 = ar.shl(&zi, 1);
        let n4 = ar.shl(&n2, 2);
        zr = ar.select(&f, &zr2, &zr);
        zi = ar.select(&f, &zi2, &zi);
        n2 = ar.select(&f, &n4, &n2);
    }
    let r = sqrt_iter(ar, &n2, SQRT_ITERS);
    let inv = inv_iter(ar, &r, INV_ITERS);
    (ar.mul(&zr, &inv), ar.mul(&zi, &inv))
}

/// `(ar + i·ai)(wr + i·wi)` with three multiplications.
fn cmul<A: FxArith>(ar_: &mut A, a: &(A::V, A::V), w: &(A::V, A::V)) -> (A::V, A::V) {
    let s1 = ar_.add(&a.0, &a.1);
    let k1 = ar_.mul(&w.0, &s1);
    let s2 = ar_.sub(&w.1, &w.0);
    let k2 = ar_.mul(&a.0, &s2);
    let s3 = ar_.add(&w.0, &w.1);
    let k3 = ar_.mul(&a.1, &s3);
    (ar_.sub(&k1, &k3), ar_.add(&k1, &k2))
}

/// `(−1)^{n−1} e^{−inπ/4} / (nπ)`: the Taylor coefficients of `ln` around
/// `e^{iπ/4}`, pre-divided by π.
fn arg_coefficients(degree: usize) -> Vec<C64> {
    (1..=degree)
        .map(|n| {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            C64::from_polar(sign / (n as f64 * PI), -(n as f64) * PI / 4.0)
        })
        .collect()
}

/// `Arg(zr + i·zi)/π` wrapped to `[−1, 1)`.
///
/// The point is rotated by a multiple of π/2 into the first quadrant (disc
/// 1), which is the same as evaluating the disc-`l` polynomial there, since
/// `P_l(z) = P_1(z·e^{−i(θ_l−θ_1)}) + i(θ_l − θ_1)`.
fn arg_over_pi<A: FxArith>(ar: &mut A, zr: &A::V, zi: &A::V, degree: usize) -> A::V {
    let f = ar.frac();
    let da = ar.is_neg(zr);
    let db = ar.is_neg(zi);
    let na = ar.neg(zr);
    let nb = ar.neg(zi);
    // disc 2: (b, −a), +½   disc 3: (−a, −b), −1   disc 4: (−b, a), −½
    let re_neg_a = ar.select(&db, &na, zi);
    let re_pos_a = ar.select(&db, &nb, zr);
    let re = ar.select(&da, &re_neg_a, &re_pos_a);
    let im_neg_a = ar.select(&db, &nb, &na);
    let im_pos_a = ar.select(&db, zr, zi);
    let im = ar.select(&da, &im_neg_a, &im_pos_a);
    let off_m1 = ar.konst(-(1i128 << f));
    let off_h = ar.konst(1i128 << (f - 1));
    let off_mh = ar.konst(-(1i128 << (f - 1)));
    let off_0 = ar.konst(0);
    let off_neg_a = ar.select(&db, &off_m1, &off_h);
    let off_pos_a = ar.select(&db, &off_mh, &off_0);
    let off = ar.select(&da, &off_neg_a, &off_pos_a);

    let r = ar.konst_f64(FRAC_1_SQRT_2);
    let w = (ar.sub(&re, &r), ar.sub(&im, &r));
    let coeffs = arg_coefficients(degree);
    let last = coeffs.last().expect("degree must be positive");
    let mut acc = (ar.konst_f64(last.re), ar.konst_f64(last.im));
    for q in coeffs.iter().rev().skip(1) {
        let p = cmul(ar, &acc, &w);
        let (qr, qi) = (ar.konst_f64(q.re), ar.konst_f64(q.im));
        acc = (ar.add(&p.0, &qr), ar.add(&p.1, &qi));
    }
    let s = cmul(ar, &acc, &w);
    let quarter = ar.konst(1i128 << (f - 2));
    let d = ar.add(&s.1, &quarter);
    let d = ar.add(&d, &off);
    ar.sext_low(&d, f as usize + 1)
}

/// Rounds a fraction of a turn held in the low `f+1` bits of `v` (weight of
/// bit `i` is `2^{i−f−1}`) to `m` bits, mod 1.
fn round_turn<A: FxArith>(ar: &mut A, v: &A::V, m: u32) -> Vec<A::F> {
    let f = ar.frac();
    let half_ulp = ar.konst(1i128 << (f - m));
    let t = ar.add(v, &half_ulp);
    let bits = ar.low_bits(&t, f as usize + 1);
    bits[(f + 1 - m) as usize..].to_vec()
}

/// Knobs of the approximate conversion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerConfig {
    /// Fractional bits of pipeline words.
    pub frac_bits: u32,
    /// Taylor degree of the `Arg` polynomial.
    pub degree: usize,
    /// Output angle precision.
    pub angle_bits: u32,
}

impl EulerConfig {
    pub const DEFAULT_DEGREE: usize = 256;
    pub const DEFAULT_FRAC: u32 = 52;

    /// Full double-precision-scale pipeline.
    pub fn precise(degree: usize) -> Self {
        EulerConfig { frac_bits: Self::DEFAULT_FRAC, degree, angle_bits: 48 }
    }

    /// The configuration used for `k`-bit gate keys: `k + 8` fractional bits
    /// and `k`-bit angles.
    pub fn for_target(k: u32) -> Self {
        EulerConfig { frac_bits: k + 8, degree: Self::DEFAULT_DEGREE, angle_bits: k }
    }

    pub fn validate(&self, k_in: u32) -> Result<()> {
        if !(5..=MAX_FRAC_BITS).contains(&self.frac_bits) {
            return Err(Error::Params(format!("fraction bits {} not in 5..={MAX_FRAC_BITS}", self.frac_bits)));
        }
        if self.degree == 0 {
            return Err(Error::Params("Taylor degree must be positive".into()));
        }
        if self.angle_bits == 0 || self.angle_bits > self.frac_bits || self.angle_bits > 63 {
            return Err(Error::Params(format!("angle bits {} out of range", self.angle_bits)));
        }
        if k_in > self.frac_bits {
            return Err(Error::Params(format!("input has {k_in} bits, pipeline only {}", self.frac_bits)));
        }
        Ok(())
    }
}

/// The conversion itself. Inputs are the four components as pipeline words;
/// outputs are the little-endian bits of α, β, γ.
pub fn euler_pipeline<A: FxArith>(ar: &mut A, cfg: &EulerConfig, t: &[A::V; 4]) -> [Vec<A::F>; 3] {
    let f = ar.frac();
    let [t1, t2, t3, t4] = t;
    let (t11, t33, t22, t44) = (ar.mul(t1, t1), ar.mul(t3, t3), ar.mul(t2, t2), ar.mul(t4, t4));
    let c2 = ar.add(&t11, &t33);
    let s2 = ar.add(&t22, &t44);
    let c = sqrt_scaled(ar, &c2);
    let s = sqrt_scaled(ar, &s2);

    let db = arg_over_pi(ar, &c, &s, cfg.degree);
    let zero = ar.konst(0);
    let db_neg = ar.is_neg(&db);
    let db = ar.select(&db_neg, &zero, &db);
    let beta_turn = ar.shl(&db, 1);

    let thresh = 1i128 << f.saturating_sub(40);
    let deg_c = lt_const(ar, &c2, thresh);
    let deg_s = lt_const(ar, &s2, thresh);

    let (t14, t23, t12, t34, t13, t24) =
        (ar.mul(t1, t4), ar.mul(t2, t3), ar.mul(t1, t2), ar.mul(t3, t4), ar.mul(t1, t3), ar.mul(t2, t4));
    // e^{2πiα} ∝ (−t4 + t2 i)(t1 − t3 i);  e^{2πiγ} ∝ −(t4 + t2 i)(t1 − t3 i)
    let za_r = ar.sub(&t23, &t14);
    let za_i = ar.add(&t12, &t34);
    let ng = ar.add(&t14, &t23);
    let zg_r = ar.neg(&ng);
    let zg_i = ar.sub(&t34, &t12);
    // degenerate substitutes: (t1 − t3 i)² for α, (t4 + t2 i)² for γ
    let xa_r = ar.sub(&t11, &t33);
    let x13 = ar.shl(&t13, 1);
    let xa_i = ar.neg(&x13);
    let yg_r = ar.sub(&t44, &t22);
    let yg_i = ar.shl(&t24, 1);
    let za_r = ar.select(&deg_s, &xa_r, &za_r);
    let za_i = ar.select(&deg_s, &xa_i, &za_i);
    let zg_r = ar.select(&deg_c, &yg_r, &zg_r);
    let zg_i = ar.select(&deg_c, &yg_i, &zg_i);

    let (ua_r, ua_i) = normalize(ar, &za_r, &za_i);
    let (ug_r, ug_i) = normalize(ar, &zg_r, &zg_i);
    let da = arg_over_pi(ar, &ua_r, &ua_i, cfg.degree);
    let dg = arg_over_pi(ar, &ug_r, &ug_i, cfg.degree);
    // d ∈ [−1, 1) read as f+1 unsigned fraction bits is d/2 mod 1
    let alpha = ar.select(&deg_c, &zero, &da);
    let gamma = ar.select(&deg_s, &zero, &dg);

    let m = cfg.angle_bits;
    [round_turn(ar, &alpha, m), round_turn(ar, &beta_turn, m), round_turn(ar, &gamma, m)]
}

fn fixed_inputs(t: &[FixedFrac; 4]) -> Result<u32> {
    let k = t[0].k;
    if t.iter().any(|x| x.k != k) {
        return Err(Error::Domain("components have different precisions".into()));
    }
    if t.iter().any(|x| x.mag > 1u64 << k) {
        return Err(Error::Domain("component magnitude exceeds 1".into()));
    }
    Ok(k)
}

fn mag_bits(x: &FixedFrac) -> Vec<bool> {
    (0..=x.k).map(|i| (x.mag >> i) & 1 == 1).collect()
}

/// Cleartext evaluation of the pipeline on fixed-point components.
pub fn euler_from_fixed(t: &[FixedFrac; 4], cfg: &EulerConfig) -> Result<EulerAngles> {
    let k = fixed_inputs(t)?;
    cfg.validate(k)?;
    let mut ar = NativeFx::new(cfg.frac_bits);
    let words = t.map(|x| ar.input(&mag_bits(&x), &x.neg, k));
    let out = euler_pipeline(&mut ar, cfg, &words);
    Ok(EulerAngles::from_words(&out))
}

/// Approximate conversion at the default precision with the given Taylor
/// degree. The input is truncated to the pipeline precision first.
pub fn euler_from_quat_approx(t: &Quat4, degree: usize) -> Result<EulerAngles> {
    let cfg = EulerConfig::precise(degree);
    if t.0.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
        return Err(Error::Domain("components must lie in [−1, 1]".into()));
    }
    let fx = t.to_fixed(cfg.frac_bits);
    euler_from_fixed(&fx, &cfg)
}

/// Sign-magnitude input word: `k_in + 1` magnitude bits (LSB first) and a sign.
pub type SignMagBits<B> = (Vec<B>, B);

/// Evaluates the pipeline as a circuit on `engine`. Outputs α, β, γ as
/// little-endian `angle_bits`-bit words.
pub fn he_euler_from_quat<E: BitEngine>(
    engine: &mut E,
    enc_t: &[SignMagBits<E::Bit>; 4],
    k_in: u32,
    cfg: &EulerConfig,
) -> Result<[Vec<E::Bit>; 3]> {
    cfg.validate(k_in)?;
    if enc_t.iter().any(|(m, _)| m.len() != k_in as usize + 1) {
        return Err(Error::WidthMismatch(enc_t[0].0.len(), k_in as usize + 1));
    }
    let mut ar = CircuitFx::new(engine, cfg.frac_bits);
    let words = [0, 1, 2, 3].map(|i| ar.input(&enc_t[i].0, &enc_t[i].1, k_in));
    Ok(euler_pipeline(&mut ar, cfg, &words))
}

/// `Arg(a + bi)/π` in `[−1, 1)` via the disc-selected Taylor polynomial.
pub fn arg_over_pi_mod2(a: FixedPointNumber, b: FixedPointNumber, degree: usize) -> Result<FixedPointNumber> {
    if a.frac != b.frac {
        return Err(Error::Domain("operands have different precisions".into()));
    }
    let z = C64::new(a.to_f64(), b.to_f64());
    let disc = DiscIndex::from_signs(a.raw < 0, b.raw < 0);
    if (z - disc.center()).norm() >= DISC_RADIUS {
        return Err(Error::Domain(format!("{z} is outside disc {}", disc.0)));
    }
    if degree == 0 {
        return Err(Error::Params("Taylor degree must be positive".into()));
    }
    let mut ar = NativeFx::new(a.frac);
    let d = arg_over_pi(&mut ar, &a.raw, &b.raw, degree);
    Ok(FixedPointNumber { raw: d, frac: a.frac })
}

/// Reciprocal by `d` rounds of the coupled iteration. Inputs at or below
/// 2⁻⁵ are refused: the result would not fit the word's integer range.
pub fn fp_inverse(x: FixedPointNumber, d: usize) -> Result<FixedPointNumber> {
    let v = x.to_f64();
    if v <= 1.0 / 32.0 || v >= 2.0 {
        return Err(Error::Domain(format!("inverse needs x in (2^-5, 2), got {v}")));
    }
    let mut ar = NativeFx::new(x.frac);
    Ok(FixedPointNumber { raw: inv_iter(&mut ar, &x.raw, d), frac: x.frac })
}

pub fn fp_sqrt(x: FixedPointNumber, d: usize) -> Result<FixedPointNumber> {
    let v = x.to_f64();
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("sqrt needs x in [0, 1], got {v}")));
    }
    let mut ar = NativeFx::new(x.frac);
    Ok(FixedPointNumber { raw: sqrt_iter(&mut ar, &x.raw, d), frac: x.frac })
}

/// Reconstruction error `min_φ ‖U(α,β,γ) − φ·U_t‖₂`.
pub fn reconstruction_error(e: &EulerReal, t: &Quat4) -> f64 {
    crate::su2core::distance_up_to_phase(&e.matrix(), &quat_to_matrix(t))
}
