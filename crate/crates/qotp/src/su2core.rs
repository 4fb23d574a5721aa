//! Quaternion index vectors for SU(2).
//!
//! A 4-vector `t` indexes the operator
//! `U_t = t1·I + t2·σ1 + t3·σ2 + t4·σ3` with `σ1 = iX`, `σ2 = iZ`, `σ3 = iY`,
//! i.e. `[[t1 + t3·i, t4 + t2·i], [−t4 + t2·i, t1 − t3·i]]`.
//! Reference arithmetic is f64; k-bit keys are dyadic and therefore exact.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Tolerance under which a vector counts as already unit.
pub const UNIT_TOL: f64 = 1.0 / (1u64 << 50) as f64;

/// Sign plus `k` fractional bits, `value = (−1)^neg · mag / 2^k`.
///
/// `mag` may equal `2^k` so that ±1 is representable; a negative zero is
/// never produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedFrac {
    pub neg: bool,
    pub mag: u64,
    pub k: u32,
}

impl FixedFrac {
    /// Truncates `x` toward zero to `k` fractional bits.
    pub fn from_f64(x: f64, k: u32) -> Self {
        assert!((1..=60).contains(&k), "precision {k} out of range");
        let scale = (1u64 << k) as f64;
        let mag = (x.abs() * scale).floor().min(scale) as u64;
        FixedFrac { neg: x < 0.0 && mag != 0, mag, k }
    }

    pub fn from_parts(neg: bool, mag: u64, k: u32) -> Self {
        FixedFrac { neg: neg && mag != 0, mag, k }
    }

    pub fn to_f64(self) -> f64 {
        let v = self.mag as f64 / (1u64 << self.k) as f64;
        if self.neg {
            -v
        } else {
            v
        }
    }

    /// Signed integer numerator over `2^k`.
    pub fn numerator(self) -> i64 {
        if self.neg {
            -(self.mag as i64)
        } else {
            self.mag as i64
        }
    }

    /// Fractional bits, index 0 = weight 2^{-1}.
    pub fn frac_bits(self) -> Vec<bool> {
        (0..self.k).map(|j| (self.mag >> (self.k - 1 - j)) & 1 == 1).collect()
    }
}

/// General index vector (no norm constraint).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quat4(pub [f64; 4]);

/// Index vector on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitQuat4(Quat4);

impl Quat4 {
    pub const IDENTITY: Quat4 = Quat4([1.0, 0.0, 0.0, 0.0]);

    pub fn new(t1: f64, t2: f64, t3: f64, t4: f64) -> Self {
        Quat4([t1, t2, t3, t4])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &Quat4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Quat4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_fixed(&self, k: u32) -> [FixedFrac; 4] {
        self.0.map(|x| FixedFrac::from_f64(x, k))
    }

    pub fn from_fixed(f: &[FixedFrac; 4]) -> Self {
        Quat4(f.map(|x| x.to_f64()))
    }
}

impl UnitQuat4 {
    /// Accepts `t` when `|‖t‖ − 1| ≤ tol`.
    pub fn new(t: Quat4, tol: f64) -> Result<Self> {
        let n = t.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::Domain(format!("norm {n} is not 1")));
        }
        Ok(UnitQuat4(t))
    }

    /// Normalizes a non-zero vector.
    pub fn normalize(t: Quat4) -> Result<Self> {
        let n = t.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain("cannot normalize zero vector".into()));
        }
        Ok(UnitQuat4(Quat4(t.0.map(|x| x / n))))
    }

    pub fn quat(&self) -> &Quat4 {
        &self.0
    }

    pub fn comps(&self) -> [f64; 4] {
        self.0 .0
    }
}

/// 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Mat2([[o, z], [z, o]])
    }

    pub fn pauli_x() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Mat2([[z, o], [o, z]])
    }

    pub fn pauli_z() -> Self {
        Mat2::diag(C64::new(1.0, 0.0), C64::new(-1.0, 0.0))
    }

    pub fn pauli_y() -> Self {
        let z = C64::new(0.0, 0.0);
        Mat2([[z, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), z]])
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Mat2([[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Mat2([[a, z], [z, d]])
    }

    /// `diag(1, e^{2πi·w})`.
    pub fn phase_rot(w: f64) -> Self {
        Mat2::diag(C64::new(1.0, 0.0), C64::from_polar(1.0, 2.0 * std::f64::consts::PI * w))
    }

    /// Real rotation `[[cos πβ, −sin πβ], [sin πβ, cos πβ]]`.
    pub fn real_rot(beta: f64) -> Self {
        let (s, c) = (std::f64::consts::PI * beta).sin_cos();
        Mat2([[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }

    pub fn adjoint(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let mut r = self.0;
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] -= o.0[i][j];
            }
        }
        Mat2(r)
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2(self.0.map(|row| row.map(|x| x * s)))
    }

    pub fn pow_bit(&self, bit: bool) -> Mat2 {
        if bit {
            *self
        } else {
            Mat2::identity()
        }
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).sub(&Mat2::identity()).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

/// Spectral distance minimized over a global phase on `b`.
pub fn distance_up_to_phase(a: &Mat2, b: &Mat2) -> f64 {
    // tr(b† a) gives the optimal phase for the Frobenius fit; good enough as a
    // witness since both norms agree within a factor √2.
    let mut ip = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            ip += b.0[i][j].conj() * a.0[i][j];
        }
    }
    let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
    spectral_distance(a, &b.scale(phase))
}

/// Product `a·b` realizing `U_a U_b`.
pub fn quat_mul(a: &Quat4, b: &Quat4) -> Quat4 {
    let [a1, a2, a3, a4] = a.0;
    let [b1, b2, b3, b4] = b.0;
    Quat4([
        a1 * b1 - a2 * b2 - a3 * b3 - a4 * b4,
        a1 * b2 + a2 * b1 + a3 * b4 - a4 * b3,
        a1 * b3 + a3 * b1 + a4 * b2 - a2 * b4,
        a1 * b4 + a4 * b1 + a2 * b3 - a3 * b2,
    ])
}

/// Negates the three imaginary components.
pub fn quat_inv(a: &Quat4) -> Quat4 {
    Quat4([a.0[0], -a.0[1], -a.0[2], -a.0[3]])
}

pub fn quat_to_matrix(t: &Quat4) -> Mat2 {
    let [t1, t2, t3, t4] = t.0;
    Mat2([[C64::new(t1, t3), C64::new(t4, t2)], [C64::new(-t4, t2), C64::new(t1, -t3)]])
}

/// Inverse of [`quat_to_matrix`] for phase-times-SU(2) matrices.
///
/// Returns `(t, φ)` with `m = φ · U_t`. The sign of `t` is fixed by `t1 ≥ 0`
/// when possible.
pub fn matrix_to_quat(m: &Mat2) -> Result<(UnitQuat4, C64)> {
    let det = m.det();
    if (det.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitary((det.norm() - 1.0).abs()));
    }
    let mut phase = det.sqrt();
    let mut x = m.0[0][0] / phase;
    let mut y = m.0[0][1] / phase;
    if x.re < 0.0 || (x.re == 0.0 && x.im < 0.0) {
        phase = -phase;
        x = -x;
        y = -y;
    }
    let t = UnitQuat4::normalize(Quat4([x.re, y.im, x.im, y.re]))?;
    Ok((t, phase))
}

/// Re-approximates a near-unit vector by a unit one.
///
/// Norm above one: keep leading coordinates until the squared prefix reaches
/// one, fix that coordinate, zero the rest. Norm below one: absorb the deficit
/// in coordinate 4. The adjusted coordinate keeps its sign, with sgn(0) = +1.
pub fn unitary_approx(t: &Quat4) -> Result<UnitQuat4> {
    let n2: f64 = t.0.iter().map(|x| x * x).sum();
    let n = n2.sqrt();
    if (n - 1.0).abs() > 1.0 {
        return Err(Error::Domain(format!("‖t‖ = {n} is farther than 1 from the sphere")));
    }
    if (n - 1.0).abs() <= UNIT_TOL {
        return Ok(UnitQuat4(*t));
    }
    let sgn = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    let mut out = [0.0; 4];
    if n >= 1.0 {
        let mut prefix = 0.0;
        for l in 0..4 {
            let next = prefix + t.0[l] * t.0[l];
            if next >= 1.0 {
                out[l] = sgn(t.0[l]) * (1.0 - prefix).max(0.0).sqrt();
                break;
            }
            out[l] = t.0[l];
            prefix = next;
        }
    } else {
        let head: f64 = t.0[..3].iter().map(|x| x * x).sum();
        out[..3].copy_from_slice(&t.0[..3]);
        out[3] = sgn(t.0[3]) * (1.0 - head).max(0.0).sqrt();
    }
    Ok(UnitQuat4(Quat4(out)))
}

/// Keeps the sign and the `k` leading fractional bits of each component.
pub fn truncate_k(t: &UnitQuat4, k: u32) -> Quat4 {
    truncate_quat(t.quat(), k)
}

/// [`truncate_k`] for an arbitrary vector.
pub fn truncate_quat(t: &Quat4, k: u32) -> Quat4 {
    Quat4(t.0.map(|x| FixedFrac::from_f64(x, k).to_f64()))
}

/// Largest singular value of `a − b`.
pub fn spectral_distance(a: &Mat2, b: &Mat2) -> f64 {
    let d = a.sub(b);
    let h = d.adjoint().mul(&d);
    let tr = h.0[0][0].re + h.0[1][1].re;
    let gap = h.0[0][0].re - h.0[1][1].re;
    let off = h.0[0][1].norm_sqr();
    let top = 0.5 * (tr + (gap * gap + 4.0 * off).sqrt());
    top.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(i: usize) -> Quat4 {
        let mut t = [0.0; 4];
        t[i] = 1.0;
        Quat4(t)
    }

    // Oracle: the 2x2 product computed entrywise by hand.
    fn naive_mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut r = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r[i][j] += a.0[i][k] * b.0[k][j];
                }
            }
        }
        Mat2(r)
    }

    fn unit() -> impl Strategy<Value = Quat4> {
        prop::array::uniform4(-1.0f64..1.0)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
            .prop_map(|v| *UnitQuat4::normalize(Quat4(v)).unwrap().quat())
    }

    #[test]
    fn sigma_products() {
        assert_eq!(quat_mul(&e(1), &e(2)), e(3));
        assert_eq!(quat_mul(&e(2), &e(3)), e(1));
        assert_eq!(quat_mul(&e(3), &e(1)), e(2));
        let t = Quat4::new(0.3, -0.1, 0.5, 0.2);
        assert_eq!(quat_mul(&Quat4::IDENTITY, &t), t);
    }

    #[test]
    fn inverse_of_sigma() {
        assert_eq!(quat_inv(&e(1)), Quat4::new(0.0, -1.0, 0.0, 0.0));
        assert_eq!(quat_inv(&Quat4::IDENTITY), Quat4::IDENTITY);
    }

    #[test]
    fn sigma2_is_i_z() {
        let m = quat_to_matrix(&e(2));
        assert_eq!(m, Mat2::pauli_z().scale(C64::new(0.0, 1.0)));
        assert_eq!(quat_to_matrix(&Quat4::IDENTITY), Mat2::identity());
    }

    #[test]
    fn worked_examples_are_exact() {
        let a = unitary_approx(&Quat4::new(0.5, 0.75, 0.5, 0.5)).unwrap();
        assert_eq!(a.comps(), [0.5, 0.75, 3f64.sqrt() / 4.0, 0.0]);
        let b = unitary_approx(&Quat4::new(0.5, 0.5, 0.5, 0.0)).unwrap();
        assert_eq!(b.comps(), [0.5, 0.5, 0.5, 0.5]);
        let m = quat_to_matrix(a.quat());
        assert!((m.det() - C64::new(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn unit_input_unchanged_and_far_input_rejected() {
        let t = Quat4::new(0.6, 0.0, 0.8, 0.0);
        assert_eq!(unitary_approx(&t).unwrap().comps(), t.0);
        assert!(unitary_approx(&Quat4::new(2.5, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn truncation_bit_oracle() {
        // 0.1011011 in binary, truncated to 4 bits -> 0.1011
        let x = 0.5 + 0.125 + 0.0625 + 1.0 / 64.0 + 1.0 / 128.0;
        let f = FixedFrac::from_f64(-x, 4);
        assert_eq!(f.frac_bits(), vec![true, false, true, true]);
        assert!(f.neg);
        assert_eq!(f.to_f64(), -(0.5 + 0.125 + 0.0625));
        let id = UnitQuat4::new(Quat4::IDENTITY, 0.0).unwrap();
        assert_eq!(truncate_k(&id, 8), Quat4::IDENTITY);
        assert!(!FixedFrac::from_f64(-1e-9, 8).neg);
    }

    #[test]
    fn spectral_norm_examples() {
        let h = Mat2::hadamard();
        assert_eq!(spectral_distance(&h, &h), 0.0);
        assert!((spectral_distance(&h.scale(C64::new(2.0, 0.0)), &h) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_to_quat_roundtrip() {
        let t = UnitQuat4::normalize(Quat4::new(0.2, -0.4, 0.1, 0.7)).unwrap();
        let m = quat_to_matrix(t.quat()).scale(C64::from_polar(1.0, 0.7));
        let (back, ph) = matrix_to_quat(&m).unwrap();
        assert!(spectral_distance(&quat_to_matrix(back.quat()).scale(ph), &m) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn product_is_matrix_product(a in unit(), b in unit()) {
            let lhs = quat_to_matrix(&quat_mul(&a, &b));
            let rhs = naive_mul(&quat_to_matrix(&a), &quat_to_matrix(&b));
            prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
        }

        #[test]
        fn associative(a in unit(), b in unit(), c in unit()) {
            let l = quat_to_matrix(&quat_mul(&quat_mul(&a, &b), &c));
            let r = quat_to_matrix(&quat_mul(&a, &quat_mul(&b, &c)));
            prop_assert!(l.sub(&r).max_abs() <= 1e-10);
        }

        #[test]
        fn inverse_cancels(a in unit()) {
            let p = quat_mul(&a, &quat_inv(&a));
            prop_assert!(p.dist(&Quat4::IDENTITY) <= 1e-12);
        }

        #[test]
        fn operator_distance_equals_vector_distance(a in unit(), b in unit()) {
            let d = spectral_distance(&quat_to_matrix(&a), &quat_to_matrix(&b));
            prop_assert!((d - a.dist(&b)).abs() <= 1e-12);
        }

        #[test]
        fn approx_obeys_both_bounds(a in unit(), dir in prop::array::uniform4(-1.0f64..1.0), e in 0usize..3) {
            let m = [1.0 / 16.0, 1.0 / 256.0, 1.0 / 4096.0][e];
            let dn = Quat4(dir).norm();
            prop_assume!(dn > 1e-3);
            // push a along dir until |‖t‖ − 1| = m
            let scale = if dir[0] > 0.0 { 1.0 + m } else { 1.0 - m };
            let t = Quat4(a.0.map(|x| x * scale));
            let out = unitary_approx(&t).unwrap();
            let bound = (3.0 * m).sqrt();
            prop_assert!((out.quat().norm() - 1.0).abs() < 1e-12);
            prop_assert!(t.dist(out.quat()) <= bound + 1e-12);
            let d = spectral_distance(&quat_to_matrix(&t), &quat_to_matrix(out.quat()));
            prop_assert!(d <= bound + 1e-12);
        }

        #[test]
        fn truncation_error_one_sided(a in unit(), k in 1u32..30) {
            let tr = truncate_quat(&a, k);
            for i in 0..4 {
                prop_assert!((a.0[i] - tr.0[i]).abs() <= (2f64).powi(-(k as i32)));
                prop_assert!(tr.0[i].abs() <= a.0[i].abs());
            }
        }

        #[test]
        fn truncate_then_approx_within_sqrt3m_bound(a in unit(), k in 8u32..=24) {
            let u = UnitQuat4::new(a, 1e-12).unwrap();
            let t2 = unitary_approx(&truncate_k(&u, k)).unwrap();
            let d = spectral_distance(&quat_to_matrix(&a), &quat_to_matrix(t2.quat()));
            prop_assert!(d <= 4.0 / (2f64).powf(k as f64 / 2.0));
        }
    }
}
