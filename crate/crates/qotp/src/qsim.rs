//! Dense statevector simulation for a handful of message qubits.
//!
//! Qubit 0 is the least significant bit of the amplitude index. Basis labels
//! such as `|101>` are written most significant qubit first, so the rightmost
//! character is qubit 0.

use crate::error::{Error, Result};
use crate::su2core::Mat2;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const MAX_QUBITS: usize = 12;
const UNITARY_TOL: f64 = 1e-8;
const NORM_TOL: f64 = 1e-8;

/// How [`StateVector::apply_1q`] treats its gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApplyMode {
    /// Gate must be unitary within 1e-8; the state is renormalized afterwards.
    Unitary,
    /// Any finite matrix; no renormalization.
    NonUnitary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitRange(n));
        }
        if index >= 1 << n {
            return Err(Error::Domain(format!("basis index {index} needs more than {n} qubits")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Parses `|0110>` (or the bare digits).
    pub fn from_label(label: &str) -> Result<Self> {
        let s = label.trim();
        let s = s.strip_prefix('|').unwrap_or(s);
        let s = s.strip_suffix('>').or_else(|| s.strip_suffix('⟩')).unwrap_or(s);
        if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::Domain(format!("malformed basis label {label:?}")));
        }
        let idx = usize::from_str_radix(s, 2).map_err(|e| Error::Domain(e.to_string()))?;
        Self::basis(s.len(), idx)
    }

    /// Builds a state from raw amplitudes; the length must be a power of two
    /// and the vector must be normalized within 1e-8.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Domain(format!("{len} amplitudes is not a qubit register")));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::QubitRange(n));
        }
        let st = StateVector { n_qubits: n, amps };
        let norm = st.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(st)
    }

    /// Same as [`Self::from_amplitudes`] but rescales instead of rejecting.
    pub fn from_unnormalized(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Domain(format!("{len} amplitudes is not a qubit register")));
        }
        let mut st = StateVector { n_qubits: len.trailing_zeros() as usize, amps };
        st.normalize()?;
        Ok(st)
    }

    /// Parses the text dump format: one `index real imag` line per amplitude,
    /// `#` comments allowed, missing indices are zero.
    pub fn parse_dump(text: &str, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitRange(n));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(perr("expected `index real imag`"));
            }
            let i: usize = f[0].parse().map_err(|_| perr("bad index"))?;
            let re: f64 = f[1].parse().map_err(|_| perr("bad real part"))?;
            let im: f64 = f[2].parse().map_err(|_| perr("bad imaginary part"))?;
            if i >= amps.len() {
                return Err(perr("index out of range"));
            }
            amps[i] = C64::new(re, im);
        }
        Self::from_amplitudes(amps)
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e}", a.re, a.im);
        }
        out
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        let inv = 1.0 / n;
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::QubitRange(q))
        } else {
            Ok(())
        }
    }

    pub fn apply_1q(&mut self, target: usize, g: &Mat2, mode: ApplyMode) -> Result<()> {
        self.check_qubit(target)?;
        if !g.is_finite() {
            return Err(Error::Domain("gate has non-finite entries".into()));
        }
        if mode == ApplyMode::Unitary {
            let defect = g.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        let bit = 1usize << target;
        let [[a, b], [c, d]] = g.0;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let x0 = self.amps[i];
                let x1 = self.amps[i | bit];
                self.amps[i] = a * x0 + b * x1;
                self.amps[i | bit] = c * x0 + d * x1;
            }
        }
        if mode == ApplyMode::Unitary {
            self.normalize()?;
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, ctrl: usize, tgt: usize) -> Result<()> {
        self.check_qubit(ctrl)?;
        self.check_qubit(tgt)?;
        if ctrl == tgt {
            return Err(Error::Domain(format!("control and target are both qubit {ctrl}")));
        }
        let (cb, tb) = (1usize << ctrl, 1usize << tgt);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
        Ok(())
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Projects qubit `q` onto `value` and renormalizes.
    pub fn project(&mut self, q: usize, value: bool) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) != value {
                *a = C64::new(0.0, 0.0);
            }
        }
        self.normalize()
    }

    /// Born-rule measurement of qubit `q`; the state collapses in place.
    pub fn measure_qubit<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool> {
        let p1 = self.prob_one(q)?;
        let outcome = rng.gen::<f64>() < p1;
        self.project(q, outcome)?;
        Ok(outcome)
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::Dimension(self.amps.len(), other.amps.len()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

/// `√(½ Σ |f₁ − f₂|²)`.
pub fn h_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.amps.len() != b.amps.len() {
        return Err(Error::Dimension(a.amps.len(), b.amps.len()));
    }
    let s: f64 = a.amps.iter().zip(&b.amps).map(|(x, y)| (x - y).norm_sqr()).sum();
    Ok((0.5 * s).sqrt())
}

/// `√(1 − |⟨a|b⟩|²)` for normalized pure states.
///
/// Evaluated as `‖b − ⟨a|b⟩a‖`, which keeps full relative precision when the
/// states nearly coincide.
pub fn trace_distance_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    for s in [a, b] {
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
    }
    let ov = a.inner(b)?;
    let r: f64 = a.amps.iter().zip(&b.amps).map(|(x, y)| (y - ov * x).norm_sqr()).sum();
    Ok(r.sqrt().min(1.0))
}

/// Upper bound on trace distance from H-distance for pure states.
pub fn trace_bound_from_h(h: f64) -> f64 {
    2.0 * h.sqrt() + std::f64::consts::SQRT_2 * h
}

/// H-distance bound after `m` gates each replaced by its `k`-bit truncation:
/// `(2^{1−k} + ½)(1 + 2^{2−k})^{m−1} − ½`.
pub fn truncation_drift_bound(m: u64, k: u32) -> f64 {
    let kf = k as f64;
    let grow = (1.0 + 2f64.powf(2.0 - kf)).powf(m.saturating_sub(1) as f64);
    (2f64.powf(1.0 - kf) + 0.5) * grow - 0.5
}

/// Running mean of single-qubit density matrices.
#[derive(Clone, Debug, Default)]
pub struct DensityAccumulator {
    sum: [[C64; 2]; 2],
    trials: u64,
}

impl DensityAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&mut self, psi: &StateVector) -> Result<()> {
        if psi.n_qubits != 1 {
            return Err(Error::Dimension(psi.amps.len(), 2));
        }
        let v = &psi.amps;
        for i in 0..2 {
            for j in 0..2 {
                self.sum[i][j] += v[i] * v[j].conj();
            }
        }
        self.trials += 1;
        Ok(())
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn mean(&self) -> Mat2 {
        let t = self.trials.max(1) as f64;
        Mat2(self.sum.map(|r| r.map(|x| x / t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2core::{quat_to_matrix, truncate_quat, Quat4, UnitQuat4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(n: usize, rng: &mut ChaCha20Rng) -> StateVector {
        let amps = (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        StateVector::from_unnormalized(amps).unwrap()
    }

    fn random_unitary(rng: &mut ChaCha20Rng) -> Mat2 {
        let t = Quat4(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let t = UnitQuat4::normalize(t).unwrap();
        quat_to_matrix(t.quat()).scale(C64::from_polar(1.0, rng.gen_range(0.0..6.3)))
    }

    // Oracle: explicit 2^n x 2^n kron product, qubit 0 rightmost factor.
    fn dense_1q(n: usize, target: usize, g: &Mat2) -> Vec<Vec<C64>> {
        let dim = 1 << n;
        let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
        for (r, row) in m.iter_mut().enumerate() {
            for (col, cell) in row.iter_mut().enumerate() {
                let others = !(1usize << target);
                if r & others == col & others {
                    *cell = g.0[(r >> target) & 1][(col >> target) & 1];
                }
            }
        }
        m
    }

    fn matvec(m: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn x_flips_zero() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_1q(0, &Mat2::pauli_x(), ApplyMode::Unitary).unwrap();
        assert_eq!(s, StateVector::from_label("|1>").unwrap());
        s.apply_1q(0, &Mat2::identity(), ApplyMode::Unitary).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0, 0.0));
    }

    #[test]
    fn labels_are_little_endian() {
        let s = StateVector::from_label("|10>").unwrap();
        assert_eq!(s.amplitudes()[2], c(1.0, 0.0));
        assert_eq!(s.prob_one(1).unwrap(), 1.0);
        assert!(StateVector::from_label("|12>").is_err());
    }

    #[test]
    fn cnot_truth_table() {
        let mut s = StateVector::from_label("|10>").unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_eq!(s, StateVector::from_label("|11>").unwrap());
        let mut z = StateVector::zero(2).unwrap();
        z.apply_cnot(1, 0).unwrap();
        assert_eq!(z, StateVector::zero(2).unwrap());
        assert!(z.apply_cnot(1, 1).is_err());
    }

    #[test]
    fn non_unitary_rejected_in_unitary_mode() {
        let mut s = StateVector::zero(1).unwrap();
        let g = Mat2::identity().scale(c(1.1, 0.0));
        assert!(matches!(s.apply_1q(0, &g, ApplyMode::Unitary), Err(Error::NotUnitary(_))));
        s.apply_1q(0, &g, ApplyMode::NonUnitary).unwrap();
        assert!((s.norm() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn dense_oracle_three_qubits() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let psi = random_state(3, &mut rng);
            let g = random_unitary(&mut rng);
            let t = rng.gen_range(0..3);
            let want = matvec(&dense_1q(3, t, &g), psi.amplitudes());
            let mut got = psi.clone();
            got.apply_1q(t, &g, ApplyMode::NonUnitary).unwrap();
            for (a, b) in got.amplitudes().iter().zip(&want) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let z = StateVector::zero(1).unwrap();
        let o = StateVector::from_label("|1>").unwrap();
        assert_eq!(h_distance(&z, &z).unwrap(), 0.0);
        assert!((h_distance(&z, &o).unwrap() - 1.0).abs() < 1e-15);
        assert!((trace_distance_pure(&z, &o).unwrap() - 1.0).abs() < 1e-15);
        let mut ph = z.clone();
        ph.apply_1q(0, &Mat2::identity().scale(C64::from_polar(1.0, 0.9)), ApplyMode::Unitary).unwrap();
        assert!(trace_distance_pure(&z, &ph).unwrap() < 1e-15);
        let bad = StateVector { n_qubits: 1, amps: vec![c(2.0, 0.0), c(0.0, 0.0)] };
        assert!(trace_distance_pure(&bad, &z).is_err());
        assert!(h_distance(&z, &StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn measurement_statistics() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut plus = StateVector::zero(1).unwrap();
        plus.apply_1q(0, &Mat2::hadamard(), ApplyMode::Unitary).unwrap();
        let trials = 100_000;
        let ones = (0..trials).filter(|_| plus.clone().measure_qubit(0, &mut rng).unwrap()).count();
        assert!((ones as f64 / trials as f64 - 0.5).abs() < 0.01);
        for _ in 0..100 {
            assert!(!StateVector::zero(1).unwrap().measure_qubit(0, &mut rng).unwrap());
        }
        for _ in 0..100 {
            let mut bell = StateVector::zero(2).unwrap();
            bell.apply_1q(1, &Mat2::hadamard(), ApplyMode::Unitary).unwrap();
            bell.apply_cnot(1, 0).unwrap();
            let a = bell.measure_qubit(0, &mut rng).unwrap();
            let b = bell.measure_qubit(1, &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn density_accumulator() {
        let mut acc = DensityAccumulator::new();
        acc.accumulate(&StateVector::zero(1).unwrap()).unwrap();
        assert_eq!(acc.mean().0[0][0], c(1.0, 0.0));
        acc.accumulate(&StateVector::from_label("|1>").unwrap()).unwrap();
        let m = acc.mean();
        assert!(m.sub(&Mat2::identity().scale(c(0.5, 0.0))).max_abs() < 1e-15);
        assert!(acc.accumulate(&StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let s = random_state(2, &mut rng);
        let back = StateVector::parse_dump(&s.dump(), 2).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn cnot_pauli_conjugation() {
        // CNOT (X^a1 Z^b1 ⊗ X^a2 Z^b2) = (X^a1 Z^(b1^b2) ⊗ X^(a1^a2) Z^b2) CNOT up to phase,
        // with qubit 1 the control.
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let pad = |s: &mut StateVector, q: usize, a: bool, b: bool| {
            s.apply_1q(q, &Mat2::pauli_z().pow_bit(b), ApplyMode::Unitary).unwrap();
            s.apply_1q(q, &Mat2::pauli_x().pow_bit(a), ApplyMode::Unitary).unwrap();
        };
        for bits in 0..16u8 {
            let [a1, b1, a2, b2] = [0, 1, 2, 3].map(|i| bits >> i & 1 == 1);
            for _ in 0..20 {
                let psi = random_state(2, &mut rng);
                let mut lhs = psi.clone();
                pad(&mut lhs, 1, a1, b1);
                pad(&mut lhs, 0, a2, b2);
                lhs.apply_cnot(1, 0).unwrap();
                let mut rhs = psi.clone();
                rhs.apply_cnot(1, 0).unwrap();
                pad(&mut rhs, 1, a1, b1 ^ b2);
                pad(&mut rhs, 0, a1 ^ a2, b2);
                assert!(trace_distance_pure(&lhs, &rhs).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_drift_within_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for (m, k) in [(100u64, 16u32), (1000, 20)] {
            let psi = random_state(2, &mut rng);
            let mut exact = psi.clone();
            let mut trunc = psi.clone();
            for _ in 0..m {
                let t = UnitQuat4::normalize(Quat4(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))).unwrap();
                let q = rng.gen_range(0..2);
                exact.apply_1q(q, &quat_to_matrix(t.quat()), ApplyMode::NonUnitary).unwrap();
                let tk = quat_to_matrix(&truncate_quat(t.quat(), k));
                trunc.apply_1q(q, &tk, ApplyMode::NonUnitary).unwrap();
            }
            let h = h_distance(&exact, &trunc).unwrap();
            assert!(h <= truncation_drift_bound(m, k), "m={m} k={k} h={h}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn unitary_apply_preserves_norm(seed in any::<u64>(), t in 0usize..3) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut s = random_state(3, &mut rng);
            s.apply_1q(t, &random_unitary(&mut rng), ApplyMode::Unitary).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn trace_bounded_by_h(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = random_state(2, &mut rng);
            let b = random_state(2, &mut rng);
            let tr = trace_distance_pure(&a, &b).unwrap();
            let h = h_distance(&a, &b).unwrap();
            prop_assert!(tr <= trace_bound_from_h(h) + 1e-12);
        }

        #[test]
        fn h_is_scaled_l2(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = random_state(2, &mut rng);
            let b = random_state(2, &mut rng);
            let l2: f64 = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((h_distance(&a, &b).unwrap() - l2 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }
}
