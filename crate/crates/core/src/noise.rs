//! Depolarizing noise by trajectory sampling, global gate folding and
//! zero-noise extrapolation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::NOISE_PRESETS;
use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::hamiltonian::TaskSpec;
use crate::sim::{self, Observable, PackedObservable, Pauli, PauliString, StateVector};
use crate::train;

const MAX_ERROR_PROB: f64 = 0.25;

/// Per-gate depolarizing probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
}

impl NoiseModel {
    pub const NOISELESS: NoiseModel = NoiseModel { p1: 0.0, p2: 0.0 };

    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        let m = NoiseModel { p1, p2 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=MAX_ERROR_PROB).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, {MAX_ERROR_PROB}]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Bundled presets: `kol-like`, `cai-like`.
    pub fn preset(name: &str) -> Result<Self> {
        let presets: BTreeMap<String, NoiseModel> = serde_json::from_str(NOISE_PRESETS)?;
        let m = presets
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown noise preset '{name}'")))?;
        m.validate()?;
        Ok(m)
    }
}

/// Uniformly random non-identity Pauli on `qubits`.
fn random_pauli<R: Rng>(num_qubits: usize, qubits: &[usize], rng: &mut R) -> PauliString {
    let k = qubits.len() as u32;
    let code = rng.gen_range(1..4usize.pow(k));
    let mut letters = vec![Pauli::I; num_qubits];
    for (pos, &q) in qubits.iter().enumerate() {
        letters[q] = Pauli::ALL[(code >> (2 * pos)) & 3];
    }
    PauliString::new(letters)
}

/// Final state of one noisy trajectory.
fn trajectory(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
    model: NoiseModel,
    seed: u64,
) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = circuit.num_qubits();
    let mut state = input.clone();
    for g in circuit.gates() {
        state.apply_gate(g.kind, &g.qubits, g.angle(theta).unwrap_or(0.0));
        let p = if g.qubits.len() == 1 { model.p1 } else { model.p2 };
        if p > 0.0 && rng.gen::<f64>() < p {
            state.apply_pauli(&random_pauli(n, &g.qubits, &mut rng))?;
        }
    }
    Ok(state)
}

fn check_run(circuit: &ParamCircuit, theta: &[f64], input: &StateVector, model: NoiseModel, shots: usize) -> Result<()> {
    model.validate()?;
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    circuit.check_theta(theta)?;
    if input.num_qubits() != circuit.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: circuit.num_qubits(),
            actual: input.num_qubits(),
        });
    }
    Ok(())
}

/// Mean and standard error of `value(t)` over trajectories `0..shots`.
fn sample<F>(shots: usize, value: F) -> Result<(f64, f64)>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let values = (0..shots).into_par_iter().map(value).collect::<Result<Vec<f64>>>()?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

/// Mean and standard error of `⟨obs⟩` over `shots` noisy trajectories.
///
/// After each gate, with probability `p1` (one-qubit gate) or `p2`
/// (two-qubit gate), a uniformly random non-identity Pauli hits the gate's
/// wires. Trajectory `t` draws from its own generator seeded `seed + t`, so
/// the result does not depend on scheduling. Each trajectory contributes its
/// exact expectation value. A noiseless model returns the exact value with
/// zero error.
pub fn noisy_expectation(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
    obs: &Observable,
    model: NoiseModel,
    shots: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_run(circuit, theta, input, model, shots)?;
    if model.is_noiseless() {
        let out = sim::run_circuit(circuit, theta, input)?;
        return Ok((sim::expectation(&out, obs)?, 0.0));
    }
    let packed = PackedObservable::new(obs);
    sample(shots, |t| {
        packed.expectation(&trajectory(circuit, theta, input, model, seed.wrapping_add(t as u64))?)
    })
}

/// Base loss of `task` under noise, deflation overlaps included, sampled
/// like [`noisy_expectation`]. Noiseless models give the exact base loss.
pub fn noisy_task_loss(task: &TaskSpec, theta: &[f64], model: NoiseModel, shots: usize, seed: u64) -> Result<(f64, f64)> {
    let input = task.base_state();
    check_run(&task.circuit, theta, input, model, shots)?;
    if model.is_noiseless() {
        return Ok((train::base_loss(task, theta)?, 0.0));
    }
    let packed = PackedObservable::new(&task.base_obs);
    sample(shots, |t| {
        let psi = trajectory(&task.circuit, theta, input, model, seed.wrapping_add(t as u64))?;
        let mut loss = packed.expectation(&psi)?;
        for d in &task.deflation {
            loss += d.weight * d.state.fidelity(&psi)?;
        }
        Ok(loss)
    })
}

/// Global folding `C (C† C)^k` with `factor = 2k + 1`.
pub fn fold_circuit(circuit: &ParamCircuit, factor: usize) -> Result<ParamCircuit> {
    if factor % 2 == 0 {
        return Err(Error::Config(format!("fold factor must be odd, got {factor}")));
    }
    let inverse = circuit.inverse();
    let mut folded = circuit.clone();
    for _ in 0..factor / 2 {
        folded.append(&inverse)?;
        folded.append(circuit)?;
    }
    Ok(folded)
}

/// Zero-noise extrapolations of one set of `(factor, value)` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZneFit {
    pub linear: f64,
    pub quadratic: Option<f64>,
}

/// Least-squares polynomial fit of the given degree, evaluated at 0.
fn fit_at_zero(points: &[(f64, f64)], degree: usize) -> Result<f64> {
    let cols = degree + 1;
    let a = DMatrix::from_fn(points.len(), cols, |r, c| points[r].0.powi(c as i32));
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coeffs = (a.transpose() * &a)
        .lu()
        .solve(&(a.transpose() * b))
        .ok_or_else(|| Error::Internal("singular extrapolation system".into()))?;
    Ok(coeffs[0])
}

/// Linear fit at zero always; quadratic too when at least three points are
/// given.
pub fn zne_fit(points: &[(f64, f64)]) -> Result<ZneFit> {
    for (i, a) in points.iter().enumerate() {
        if points[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::Config(format!("duplicate fold factor {}", a.0)));
        }
    }
    if points.len() < 2 {
        return Err(Error::Config("extrapolation needs at least two distinct factors".into()));
    }
    Ok(ZneFit {
        linear: fit_at_zero(points, 1)?,
        quadratic: if points.len() >= 3 {
            Some(fit_at_zero(points, 2)?)
        } else {
            None
        },
    })
}

/// Linear (order-1 Richardson) zero-noise estimate.
pub fn zne_extrapolate(points: &[(f64, f64)]) -> Result<f64> {
    Ok(zne_fit(points)?.linear)
}
