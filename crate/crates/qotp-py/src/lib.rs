//! Python bindings: key generation, encryption, homomorphic circuit
//! evaluation and decryption over the simulated register.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qotp::codec;
use qotp::crot::SimMode;
use qotp::hebackend::{Backend, KeyChain};
use qotp::qfhe::{self, Circuit, EncryptedState, Evaluator, PadApprox, QheParams};
use qotp::qsim::{trace_distance_pure, StateVector};
use qotp::su2core::{quat_mul, unitary_approx, Quat4};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::path::PathBuf;

fn err(e: qotp::Error) -> PyErr {
    match e {
        qotp::Error::Io(_) | qotp::Error::NoiseBudget(_) | qotp::Error::InversionFailed(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = qotp::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn state(amplitudes: Vec<Complex64>) -> PyResult<StateVector> {
    StateVector::from_amplitudes(amplitudes).map_err(err)
}

/// Secret key chain plus the per-qubit gate-key parameters.
#[pyclass(module = "pyqotp")]
struct Keys {
    chain: KeyChain,
    params: QheParams,
}

#[pymethods]
impl Keys {
    #[staticmethod]
    #[pyo3(signature = (kbits, levels, security=16, backend="mock", seed=0))]
    fn generate(kbits: u32, levels: u32, security: u32, backend: &str, seed: u64) -> PyResult<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (chain, params) = qfhe::qhe_keygen(security, levels, kbits, parse::<Backend>(backend)?, &mut rng).map_err(err)?;
        Ok(Keys { chain, params })
    }

    /// Loads a key chain written by `save` or by the command-line tool.
    #[staticmethod]
    #[pyo3(signature = (path, levels=None))]
    fn load(path: PathBuf, levels: Option<u32>) -> PyResult<Self> {
        let chain: KeyChain = codec::load(&path).map_err(err)?;
        let params = QheParams::new(chain.kbits, levels.unwrap_or(chain.levels));
        Ok(Keys { chain, params })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        codec::save(&path, &self.chain).map_err(err)
    }

    #[getter]
    fn kbits(&self) -> u32 {
        self.params.kbits
    }

    #[getter]
    fn levels(&self) -> u32 {
        self.params.levels
    }

    #[getter]
    fn params_hash(&self) -> String {
        format!("{:016x}", self.chain.params.hash())
    }

    /// Pads each qubit of `amplitudes` with a fresh random gate key.
    #[pyo3(signature = (amplitudes, seed=0, pad_approx="normalize"))]
    fn encrypt(&self, amplitudes: Vec<Complex64>, seed: u64, pad_approx: &str) -> PyResult<Ciphertext> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let enc = qfhe::qhe_enc_with(&self.chain, &state(amplitudes)?, parse::<PadApprox>(pad_approx)?, &mut rng).map_err(err)?;
        Ok(Ciphertext { enc })
    }

    fn decrypt(&self, ct: &Ciphertext) -> PyResult<Vec<Complex64>> {
        Ok(qfhe::qhe_dec(&self.chain, &ct.enc).map_err(err)?.amplitudes().to_vec())
    }

    /// Evaluates a circuit in the text format on `ct`. Returns the new
    /// ciphertext and a dict of operation counters.
    #[pyo3(signature = (ct, circuit, mode="idealized", seed=0))]
    fn evaluate<'py>(&self, py: Python<'py>, ct: &Ciphertext, circuit: &str, mode: &str, seed: u64) -> PyResult<(Ciphertext, Bound<'py, PyDict>)> {
        let circuit = Circuit::parse(circuit).map_err(err)?;
        let mut enc = ct.enc.clone();
        let mut ev = Evaluator::new(&self.chain, self.params, parse::<SimMode>(mode)?, seed).map_err(err)?;
        ev.eval_circuit(&mut enc, &circuit).map_err(err)?;
        let counters = PyDict::new(py);
        counters.set_item("levels", ev.counters.levels)?;
        counters.set_item("gates_1q", ev.counters.gates_1q)?;
        counters.set_item("cnots", ev.counters.cnots)?;
        counters.set_item("key_switches", ev.counters.key_switches)?;
        counters.set_item("alg1_calls", ev.crot.stats.alg1_calls)?;
        counters.set_item("s_events", ev.crot.stats.s_events)?;
        Ok((Ciphertext { enc }, counters))
    }
}

/// Padded register with its encrypted gate keys.
#[pyclass(module = "pyqotp")]
struct Ciphertext {
    enc: EncryptedState,
}

#[pymethods]
impl Ciphertext {
    /// Amplitudes of the padded register as an untrusted party sees them.
    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.enc.state.amplitudes().to_vec()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.enc.state.n_qubits()
    }

    #[getter]
    fn level(&self) -> u32 {
        self.enc.level
    }

    #[getter]
    fn slot(&self) -> PyResult<Option<u32>> {
        self.enc.slot().map_err(err)
    }
}

/// Plaintext reference run of a circuit.
#[pyfunction]
fn simulate(circuit: &str, amplitudes: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let circuit = Circuit::parse(circuit).map_err(err)?;
    Ok(circuit.simulate(&state(amplitudes)?).map_err(err)?.amplitudes().to_vec())
}

/// Text form of the n-qubit quantum Fourier transform.
#[pyfunction]
fn qft_circuit(n: usize) -> String {
    qfhe::qft_circuit(n).to_text()
}

#[pyfunction]
fn trace_distance(a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<f64> {
    trace_distance_pure(&state(a)?, &state(b)?).map_err(err)
}

#[pyfunction]
fn quaternion_product(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    quat_mul(&Quat4(a), &Quat4(b)).0
}

/// Nearest-unit completion of a truncated quaternion.
#[pyfunction]
fn unit_approximation(t: [f64; 4]) -> PyResult<[f64; 4]> {
    Ok(unitary_approx(&Quat4(t)).map_err(err)?.comps())
}

#[pyfunction]
fn cost_ratio(p: f64, security: f64, t_quantum: f64, t_classical: f64) -> f64 {
    qfhe::cost_ratio(p, security, t_quantum, t_classical)
}

#[pymodule]
fn pyqotp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Keys>()?;
    m.add_class::<Ciphertext>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(qft_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(quaternion_product, m)?)?;
    m.add_function(wrap_pyfunction!(unit_approximation, m)?)?;
    m.add_function(wrap_pyfunction!(cost_ratio, m)?)?;
    Ok(())
}
