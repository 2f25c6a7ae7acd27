//! The six benchmark tasks with their bundled data.
//!
//! | id      | qubits | ansatz              | observable                       |
//! |---------|--------|---------------------|----------------------------------|
//! | vqe-h2  | 4      | HEA, 2 layers       | H2 (STO-3G)                      |
//! | vqe-h3p | 6      | HEA, 4 layers       | H3+ (STO-3G)                     |
//! | qaoa-4  | 4      | QAOA p=4, 5 edges   | MaxCut                           |
//! | qaoa-6  | 6      | QAOA p=4, 6 edges   | MaxCut                           |
//! | vqd-h2  | 9      | HEA, 2 layers       | H2 padded to 9 qubits, deflated  |
//! | vqd-h3p | 13     | HEA, 2 layers       | H3+ padded to 13 qubits, deflated|
//!
//! Padded observables act as the molecule on the first qubits and carry a
//! penalty `λ Σ_a (I − Z_a)/2` on every padding qubit, with `λ` twice the
//! coefficient 1-norm of the molecular Hamiltonian. The penalty exceeds the
//! molecular spectral width, so the low end of the padded spectrum is the
//! molecular spectrum with padding qubits in `|0⟩`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_hea, build_qaoa, ParamCircuit};
use crate::error::{Error, Result};
use crate::hamiltonian::{maxcut_hamiltonian, optimal_value, parse_observable, Deflation, InputState, MaxCutGraph, TaskSpec};
use crate::sim::{self, Observable, Pauli, PauliString, StateVector};
use crate::train::TrainConfig;
use crate::transpile::CouplingMap;

pub const H2_PAULI: &str = include_str!("../data/h2.pauli");
pub const H3P_PAULI: &str = include_str!("../data/h3plus.pauli");
pub const QAOA4_GRAPH: &str = include_str!("../data/qaoa4.json");
pub const QAOA6_GRAPH: &str = include_str!("../data/qaoa6.json");
pub const NOISE_PRESETS: &str = include_str!("../data/noise_presets.json");

const COUPLING_LINE4: &str = include_str!("../data/coupling_line4.json");
const COUPLING_LINE6: &str = include_str!("../data/coupling_line6.json");
const COUPLING_LINE9: &str = include_str!("../data/coupling_line9.json");
const COUPLING_LINE13: &str = include_str!("../data/coupling_line13.json");
const COUPLING_HEAVYHEX27: &str = include_str!("../data/coupling_heavyhex27.json");

/// Hartree–Fock occupation `|0011⟩` / `|000011⟩`: the two lowest
/// spin-orbitals filled.
const HF_INDEX: usize = 0b11;


/// Basis state that the ansatz maps to `|target⟩` when every angle is zero.
///
/// At θ = 0 the rotations vanish and the CNOT rings act as a permutation of
/// basis states, so a chemistry ansatz fed `|HF⟩` directly would start from
/// some other occupation (for two HEA layers on four qubits, `|1011⟩`).
/// Feeding the preimage instead makes θ = 0 reproduce the Hartree–Fock
/// state.
pub fn zero_angle_preimage(circuit: &ParamCircuit, target: usize) -> Result<usize> {
    let n = circuit.num_qubits();
    let zeros = vec![0.0; circuit.num_params()];
    let back = sim::run_circuit(&circuit.inverse(), &zeros, &StateVector::basis(n, target)?)?;
    back.amplitudes()
        .iter()
        .position(|a| (a.norm() - 1.0).abs() < 1e-9)
        .ok_or_else(|| Error::Internal("zero-angle circuit is not a basis permutation".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Benchmark {
    #[serde(rename = "vqe-h2")]
    VqeH2,
    #[serde(rename = "vqe-h3p")]
    VqeH3p,
    #[serde(rename = "qaoa-4")]
    Qaoa4,
    #[serde(rename = "qaoa-6")]
    Qaoa6,
    #[serde(rename = "vqd-h2")]
    VqdH2,
    #[serde(rename = "vqd-h3p")]
    VqdH3p,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] = [
        Benchmark::VqeH2,
        Benchmark::VqeH3p,
        Benchmark::Qaoa4,
        Benchmark::Qaoa6,
        Benchmark::VqdH2,
        Benchmark::VqdH3p,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Benchmark::VqeH2 => "vqe-h2",
            Benchmark::VqeH3p => "vqe-h3p",
            Benchmark::Qaoa4 => "qaoa-4",
            Benchmark::Qaoa6 => "qaoa-6",
            Benchmark::VqdH2 => "vqd-h2",
            Benchmark::VqdH3p => "vqd-h3p",
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            Benchmark::VqeH2 | Benchmark::Qaoa4 => 4,
            Benchmark::VqeH3p | Benchmark::Qaoa6 => 6,
            Benchmark::VqdH2 => 9,
            Benchmark::VqdH3p => 13,
        }
    }

    /// Default training hyperparameters (shared by every benchmark).
    pub fn train_config(self) -> TrainConfig {
        TrainConfig::default()
    }

    /// Coupling map used by the re-compilation attack.
    pub fn coupling(self) -> CouplingMap {
        let text = match self {
            Benchmark::VqeH2 | Benchmark::Qaoa4 => COUPLING_LINE4,
            Benchmark::VqeH3p | Benchmark::Qaoa6 => COUPLING_LINE6,
            Benchmark::VqdH2 => COUPLING_LINE9,
            Benchmark::VqdH3p => COUPLING_LINE13,
        };
        CouplingMap::from_json(text).expect("bundled coupling map is valid")
    }

    pub fn task(self) -> Result<TaskSpec> {
        match self {
            Benchmark::VqeH2 => molecular_task(&h2()?, 2),
            Benchmark::VqeH3p => molecular_task(&h3p()?, 4),
            Benchmark::Qaoa4 => qaoa_task(&qaoa4_graph()?),
            Benchmark::Qaoa6 => qaoa_task(&qaoa6_graph()?),
            Benchmark::VqdH2 => vqd_task(&h2()?, 9),
            Benchmark::VqdH3p => vqd_task(&h3p()?, 13),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown benchmark '{s}'")))
    }
}

pub fn h2() -> Result<Observable> {
    parse_observable(H2_PAULI)
}

pub fn h3p() -> Result<Observable> {
    parse_observable(H3P_PAULI)
}

pub fn qaoa4_graph() -> Result<MaxCutGraph> {
    MaxCutGraph::from_json(QAOA4_GRAPH)
}

pub fn qaoa6_graph() -> Result<MaxCutGraph> {
    MaxCutGraph::from_json(QAOA6_GRAPH)
}

/// Bundled coupling maps by name: `line-4`, `line-6`, `line-9`, `line-13`,
/// `heavy-hex-27`.
pub fn coupling_map(name: &str) -> Result<CouplingMap> {
    let text = match name {
        "line-4" => COUPLING_LINE4,
        "line-6" => COUPLING_LINE6,
        "line-9" => COUPLING_LINE9,
        "line-13" => COUPLING_LINE13,
        "heavy-hex-27" => COUPLING_HEAVYHEX27,
        _ => return Err(Error::Config(format!("unknown coupling map '{name}'"))),
    };
    CouplingMap::from_json(text)
}

fn molecular_task(h: &Observable, layers: usize) -> Result<TaskSpec> {
    let circuit = build_hea(h.num_qubits(), layers)?;
    let optimal = optimal_value(h, 0)?;
    let input = zero_angle_preimage(&circuit, HF_INDEX)?;
    TaskSpec::new(circuit, InputState::Basis(input), h.clone(), optimal, vec![])
}

fn qaoa_task(graph: &MaxCutGraph) -> Result<TaskSpec> {
    let circuit = build_qaoa(graph, 4)?;
    let h = maxcut_hamiltonian(graph)?;
    let optimal = optimal_value(&h, 0)?;
    TaskSpec::new(circuit, InputState::Basis(0), h, optimal, vec![])
}

/// Molecular observable on `width` qubits: the molecule on the leading
/// qubits plus the padding penalty described in the module docs.
pub fn padded_observable(h: &Observable, width: usize) -> Result<Observable> {
    let n = h.num_qubits();
    if width < n {
        return Err(Error::WidthMismatch {
            expected: n,
            actual: width,
        });
    }
    let placement: Vec<usize> = (0..n).collect();
    let mut padded = h.placed(width, &placement)?;
    let penalty = 2.0 * h.coeff_l1();
    let mut extra = Vec::new();
    for a in n..width {
        extra.push((penalty / 2.0, PauliString::identity(width)));
        extra.push((-penalty / 2.0, PauliString::on(width, &[a], Pauli::Z)));
    }
    if !extra.is_empty() {
        padded = padded.plus(&Observable::new(width, extra)?)?;
    }
    Ok(padded)
}

/// First-excited-state task: deflate the molecular ground state (padding
/// qubits in `|0⟩`) with weight `3·‖H‖₁`; the target is the second-lowest
/// molecular eigenvalue.
///
/// The circuit starts from the lowest-energy computational basis state that
/// is orthogonal to the deflated ground state, so training begins outside
/// the ground-state basin.
fn vqd_task(h: &Observable, width: usize) -> Result<TaskSpec> {
    let n = h.num_qubits();
    let eig = sim::exact_eigensolve(h, 2)?;
    let ground = &eig[0].1;
    let first_excited = eig[1].0;
    let start = (0..1usize << n)
        .filter(|&b| ground.amplitudes()[b].norm_sqr() < 1e-10)
        .min_by(|&a, &b| h.diagonal_value(a).total_cmp(&h.diagonal_value(b)))
        .ok_or_else(|| Error::Internal("ground state has full support".into()))?;
    let padding = width - n;
    let ground = if padding > 0 {
        ground.tensor(&StateVector::basis(padding, 0)?)?
    } else {
        ground.clone()
    };
    let obs = padded_observable(h, width)?;
    let circuit = build_hea(width, 2)?;
    let deflation = vec![Deflation {
        weight: 3.0 * h.coeff_l1(),
        state: ground,
    }];
    let input = zero_angle_preimage(&circuit, start << padding)?;
    TaskSpec::new(circuit, InputState::Basis(input), obs, first_excited, deflation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gate_counts;

    #[test]
    fn ids_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(b.id().parse::<Benchmark>().unwrap(), b);
            assert_eq!(serde_json::to_string(&b).unwrap(), format!("\"{}\"", b.id()));
        }
        assert!("vqe-h4".parse::<Benchmark>().is_err());
    }

    #[test]
    fn bundled_data_parses() {
        assert_eq!(h2().unwrap().terms().len(), 15);
        assert_eq!(h2().unwrap().num_qubits(), 4);
        assert_eq!(h3p().unwrap().num_qubits(), 6);
        assert_eq!(qaoa4_graph().unwrap().edges.len(), 5);
        assert_eq!(qaoa6_graph().unwrap().edges.len(), 6);
        for name in ["line-4", "line-6", "line-9", "line-13", "heavy-hex-27"] {
            coupling_map(name).unwrap();
        }
        assert!(coupling_map("ring-5").is_err());
    }

    #[test]
    fn h2_ground_energy_near_reported_optimum() {
        let e0 = optimal_value(&h2().unwrap(), 0).unwrap();
        assert!((e0 - (-1.127)).abs() < 0.05, "{e0}");
        assert!((e0 - (-1.137_270_17)).abs() < 1e-6);
    }

    #[test]
    fn hf_state_energy_matches_dense_oracle() {
        let h = h2().unwrap();
        let s = sim::init_state(4, 3).unwrap();
        let dense = h.to_dense();
        assert!((sim::expectation(&s, &h).unwrap() - dense[(3, 3)].re).abs() < 1e-12);
        assert!((dense[(3, 3)].re - (-1.116_684_387)).abs() < 1e-6);
    }

    #[test]
    fn gate_counts_of_all_benchmarks() {
        let expected = [(24, 8), (72, 24), (40, 40), (54, 48), (54, 18), (78, 26)];
        for (b, counts) in Benchmark::ALL.into_iter().zip(expected) {
            let task = b.task().unwrap();
            assert_eq!(task.num_qubits(), b.num_qubits());
            assert_eq!(gate_counts(&task.circuit), counts, "{b}");
        }
    }

    #[test]
    fn padded_spectrum_keeps_molecular_low_end() {
        let h = h2().unwrap();
        let padded = padded_observable(&h, 6).unwrap();
        let small = sim::exact_eigensolve(&h, 3).unwrap();
        let big = sim::exact_eigensolve(&padded, 3).unwrap();
        for (a, b) in small.iter().zip(&big) {
            assert!((a.0 - b.0).abs() < 1e-9);
        }
        let task = Benchmark::VqdH2.task().unwrap();
        assert!((task.optimal - small[1].0).abs() < 1e-12);
        assert!((optimal_value(&h, 1).unwrap() - small[1].0).abs() < 1e-12);
    }
}
