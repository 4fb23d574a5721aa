//! Boolean circuits over an abstract bit engine.
//!
//! Words are little-endian bit vectors (index 0 = least significant). Every
//! routine is written once against [`BitEngine`] and runs unchanged on
//! plaintext booleans or on encrypted bits.

/// A NAND-complete gate set. Only `lit` and `nand` are required; engines that
/// can do better (constant folding, native XOR) override the rest.
pub trait BitEngine {
    type Bit: Clone;

    /// A public constant bit.
    fn lit(&mut self, b: bool) -> Self::Bit;
    fn nand(&mut self, a: &Self::Bit, b: &Self::Bit) -> Self::Bit;

    fn not(&mut self, a: &Self::Bit) -> Self::Bit {
        self.nand(a, a)
    }
    fn and(&mut self, a: &Self::Bit, b: &Self::Bit) -> Self::Bit {
        let n = self.nand(a, b);
        self.not(&n)
    }
    fn or(&mut self, a: &Self::Bit, b: &Self::Bit) -> Self::Bit {
        let na = self.not(a);
        let nb = self.not(b);
        self.nand(&na, &nb)
    }
    fn xor(&mut self, a: &Self::Bit, b: &Self::Bit) -> Self::Bit {
        let n = self.nand(a, b);
        let l = self.nand(a, &n);
        let r = self.nand(b, &n);
        self.nand(&l, &r)
    }
    /// `sel ? a : b`.
    fn mux(&mut self, sel: &Self::Bit, a: &Self::Bit, b: &Self::Bit) -> Self::Bit {
        let ns = self.not(sel);
        let l = self.nand(sel, a);
        let r = self.nand(&ns, b);
        self.nand(&l, &r)
    }
}

/// Cleartext engine, used as the oracle for every encrypted evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Plain;

impl BitEngine for Plain {
    type Bit = bool;
    fn lit(&mut self, b: bool) -> bool {
        b
    }
    fn nand(&mut self, a: &bool, b: &bool) -> bool {
        !(*a && *b)
    }
    fn not(&mut self, a: &bool) -> bool {
        !*a
    }
    fn and(&mut self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
    fn or(&mut self, a: &bool, b: &bool) -> bool {
        *a || *b
    }
    fn xor(&mut self, a: &bool, b: &bool) -> bool {
        *a ^ *b
    }
    fn mux(&mut self, s: &bool, a: &bool, b: &bool) -> bool {
        if *s {
            *a
        } else {
            *b
        }
    }
}

/// Counts NANDs-equivalent gates without computing anything meaningful.
#[derive(Clone, Copy, Debug, Default)]
pub struct GateCounter {
    pub gates: u64,
}

impl BitEngine for GateCounter {
    type Bit = ();
    fn lit(&mut self, _: bool) {}
    fn nand(&mut self, _: &(), _: &()) {
        self.gates += 1;
    }
}

pub fn lit_word<E: BitEngine>(e: &mut E, value: u128, width: usize) -> Vec<E::Bit> {
    (0..width).map(|i| e.lit(i < 128 && (value >> i) & 1 == 1)).collect()
}

/// Two's complement view of `value` truncated to `width` bits.
pub fn lit_signed<E: BitEngine>(e: &mut E, value: i128, width: usize) -> Vec<E::Bit> {
    lit_word(e, value as u128, width)
}

fn full_adder<E: BitEngine>(e: &mut E, a: &E::Bit, b: &E::Bit, c: &E::Bit) -> (E::Bit, E::Bit) {
    let t = e.xor(a, c);
    let u = e.xor(b, c);
    let sum = e.xor(&t, b);
    let tu = e.and(&t, &u);
    let carry = e.xor(&tu, c);
    (sum, carry)
}

/// `a + b + carry_in`, returning the sum (same width) and the carry out.
pub fn add_carry<E: BitEngine>(
    e: &mut E,
    a: &[E::Bit],
    b: &[E::Bit],
    carry_in: &E::Bit,
) -> (Vec<E::Bit>, E::Bit) {
    assert_eq!(a.len(), b.len(), "adder width mismatch");
    let mut c = carry_in.clone();
    let mut out = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let (s, nc) = full_adder(e, x, y, &c);
        out.push(s);
        c = nc;
    }
    (out, c)
}

/// Modular sum, carry out discarded.
pub fn add<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &[E::Bit]) -> Vec<E::Bit> {
    let z = e.lit(false);
    add_carry(e, a, b, &z).0
}

pub fn not_word<E: BitEngine>(e: &mut E, a: &[E::Bit]) -> Vec<E::Bit> {
    a.iter().map(|x| e.not(x)).collect()
}

pub fn sub<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &[E::Bit]) -> Vec<E::Bit> {
    let nb = not_word(e, b);
    let one = e.lit(true);
    add_carry(e, a, &nb, &one).0
}

pub fn neg<E: BitEngine>(e: &mut E, a: &[E::Bit]) -> Vec<E::Bit> {
    let zero = lit_word(e, 0, a.len());
    sub(e, &zero, a)
}

/// Adds the single bit `b` at the least significant position.
pub fn increment_by<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &E::Bit) -> Vec<E::Bit> {
    let mut c = b.clone();
    let mut out = Vec::with_capacity(a.len());
    for x in a {
        out.push(e.xor(x, &c));
        c = e.and(x, &c);
    }
    out
}

/// `sel ? -a : a` in two's complement.
pub fn cond_neg<E: BitEngine>(e: &mut E, a: &[E::Bit], sel: &E::Bit) -> Vec<E::Bit> {
    let flipped: Vec<_> = a.iter().map(|x| e.xor(x, sel)).collect();
    increment_by(e, &flipped, sel)
}

/// `sel ? a : b` bitwise.
pub fn mux_word<E: BitEngine>(e: &mut E, sel: &E::Bit, a: &[E::Bit], b: &[E::Bit]) -> Vec<E::Bit> {
    assert_eq!(a.len(), b.len(), "mux width mismatch");
    a.iter().zip(b).map(|(x, y)| e.mux(sel, x, y)).collect()
}

pub fn shl<E: BitEngine>(e: &mut E, a: &[E::Bit], s: usize) -> Vec<E::Bit> {
    let w = a.len();
    (0..w).map(|i| if i >= s { a[i - s].clone() } else { e.lit(false) }).collect()
}

/// Arithmetic right shift (floor division by 2^s).
pub fn shr_arith<E: BitEngine>(a: &[E::Bit], s: usize) -> Vec<E::Bit> {
    let w = a.len();
    (0..w).map(|i| a[(i + s).min(w - 1)].clone()).collect()
}

pub fn sign_extend<E: BitEngine>(a: &[E::Bit], width: usize) -> Vec<E::Bit> {
    let top = a.last().expect("empty word").clone();
    let mut out = a.to_vec();
    out.resize(width, top);
    out
}

pub fn zero_extend<E: BitEngine>(e: &mut E, a: &[E::Bit], width: usize) -> Vec<E::Bit> {
    let mut out = a.to_vec();
    while out.len() < width {
        out.push(e.lit(false));
    }
    out
}

pub fn or_reduce<E: BitEngine>(e: &mut E, a: &[E::Bit]) -> E::Bit {
    let mut acc = e.lit(false);
    for x in a {
        acc = e.or(&acc, x);
    }
    acc
}

/// Low `width` bits of `a·b` for unsigned (already extended) operands.
pub fn mul_low<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &[E::Bit], width: usize) -> Vec<E::Bit> {
    let mut acc = lit_word(e, 0, width);
    for (i, bi) in b.iter().enumerate().take(width) {
        // partial product (a << i) & bi, only the bits that land below `width`
        let span = width - i;
        let pp: Vec<_> = (0..span).map(|j| if j < a.len() { e.and(&a[j], bi) } else { e.lit(false) }).collect();
        let (hi, _) = add_carry_fold(e, &acc[i..], &pp);
        acc.splice(i.., hi);
    }
    acc
}

fn add_carry_fold<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &[E::Bit]) -> (Vec<E::Bit>, E::Bit) {
    let z = e.lit(false);
    add_carry(e, a, b, &z)
}

/// Signed fixed-point product: `wrap_W(floor(a·b / 2^f))` for W-bit operands.
pub fn mul_fixed<E: BitEngine>(e: &mut E, a: &[E::Bit], b: &[E::Bit], frac: usize) -> Vec<E::Bit> {
    let w = a.len();
    assert_eq!(w, b.len(), "multiplier width mismatch");
    let full = frac + w;
    let ax = sign_extend::<E>(a, full);
    let bx = sign_extend::<E>(b, full);
    let p = mul_low(e, &ax, &bx, full);
    p[frac..].to_vec()
}

pub fn word_to_u128(bits: &[bool]) -> u128 {
    bits.iter().enumerate().fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i))
}

pub fn word_to_i128(bits: &[bool]) -> i128 {
    let w = bits.len();
    let u = word_to_u128(bits) as i128;
    if w < 128 && bits.last().copied().unwrap_or(false) {
        u - (1i128 << w)
    } else {
        u
    }
}
