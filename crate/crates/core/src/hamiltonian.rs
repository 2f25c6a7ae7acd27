//! Observables for the benchmark tasks and their ground-truth optima.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{ParamCircuit, PrepSpec};
use crate::error::{Error, Result};
use crate::sim::{self, Observable, PauliString, StateVector, MAX_EIGEN_QUBITS, MAX_QUBITS};

/// Weighted undirected graph. JSON: `{"num_nodes": n, "edges": [[i, j, w], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCutGraph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl MaxCutGraph {
    pub fn unweighted(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let g = MaxCutGraph {
            num_nodes,
            edges: edges.iter().map(|&(i, j)| (i, j, 1.0)).collect(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: MaxCutGraph = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for &(i, j, w) in &self.edges {
            if i == j {
                return Err(Error::Graph(format!("self-loop on node {i}")));
            }
            if i >= self.num_nodes || j >= self.num_nodes {
                return Err(Error::Graph(format!(
                    "edge ({i}, {j}) out of range for {} nodes",
                    self.num_nodes
                )));
            }
            if !w.is_finite() {
                return Err(Error::Graph(format!("edge ({i}, {j}) has non-finite weight")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Graph(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(())
    }

    /// Total weight of edges cut by `bits`, where node `q` sits on bit
    /// `num_nodes - 1 - q` (qubit-0-most-significant).
    pub fn cut_value(&self, bits: usize) -> f64 {
        let side = |q: usize| (bits >> (self.num_nodes - 1 - q)) & 1;
        self.edges
            .iter()
            .filter(|&&(i, j, _)| side(i) != side(j))
            .map(|&(_, _, w)| w)
            .sum()
    }

    /// Maximum cut weight by enumeration of all bipartitions.
    pub fn brute_force_max_cut(&self) -> f64 {
        (0..1usize << self.num_nodes)
            .map(|b| self.cut_value(b))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Parses the `.pauli` text format: one `<coefficient> <word>` per line,
/// `#` starts a comment.
pub fn parse_observable(text: &str) -> Result<Observable> {
    let mut terms = Vec::new();
    let mut width = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            line: line_no,
            reason,
        };
        let mut fields = line.split_whitespace();
        let (Some(coeff), Some(word), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err("expected '<coefficient> <pauli word>'".into()));
        };
        let coeff: f64 = coeff
            .parse()
            .map_err(|_| err(format!("malformed coefficient '{coeff}'")))?;
        if !coeff.is_finite() {
            return Err(err("non-finite coefficient".into()));
        }
        let pauli: PauliString = word.parse().map_err(err)?;
        match width {
            None => width = Some(pauli.num_qubits()),
            Some(w) if w != pauli.num_qubits() => {
                return Err(err(format!(
                    "ragged width: word has {} letters, expected {w}",
                    pauli.num_qubits()
                )))
            }
            _ => {}
        }
        terms.push((coeff, pauli));
    }
    let width = width.ok_or_else(|| Error::Parse {
        line: 0,
        reason: "no terms".into(),
    })?;
    if width > MAX_QUBITS {
        return Err(Error::WidthOutOfRange {
            num_qubits: width,
            min: 1,
            max: MAX_QUBITS,
        });
    }
    Observable::new(width, terms)
}

/// `H = Σ (w/2)(Z_i Z_j − I)`; `⟨b|H|b⟩ = −cut(b)`, so minimizing energy
/// maximizes the cut. Identity contributions are folded into one term.
pub fn maxcut_hamiltonian(graph: &MaxCutGraph) -> Result<Observable> {
    graph.validate()?;
    if graph.edges.is_empty() {
        return Err(Error::Graph("graph has no edges".into()));
    }
    let n = graph.num_nodes;
    let mut terms: Vec<(f64, PauliString)> = graph
        .edges
        .iter()
        .map(|&(i, j, w)| (w / 2.0, PauliString::on(n, &[i, j], sim::Pauli::Z)))
        .collect();
    let offset: f64 = graph.edges.iter().map(|&(_, _, w)| w / 2.0).sum();
    terms.push((-offset, PauliString::identity(n)));
    Observable::new(n, terms)
}

/// The `level`-th lowest eigenvalue of `obs` counted with multiplicity
/// (`level = 0` is the ground energy).
///
/// Diagonal observables are solved by enumerating bitstrings at any
/// supported width; others go through the dense eigensolver.
pub fn optimal_value(obs: &Observable, level: usize) -> Result<f64> {
    let n = obs.num_qubits();
    if level >= 1usize << n {
        return Err(Error::Config(format!("level {level} exceeds the {n}-qubit spectrum")));
    }
    if obs.is_diagonal() {
        let mut values: Vec<f64> = (0..1usize << n).map(|b| obs.diagonal_value(b)).collect();
        values.sort_by(f64::total_cmp);
        return Ok(values[level]);
    }
    if n > MAX_EIGEN_QUBITS {
        return Err(Error::TooLarge {
            what: "eigensolve",
            num_qubits: n,
            max: MAX_EIGEN_QUBITS,
        });
    }
    Ok(sim::exact_eigensolve(obs, level + 1)?[level].0)
}

/// Where the circuit input comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputState {
    Basis(usize),
    Prepared(PrepSpec),
}

impl InputState {
    pub fn prepare(&self, num_qubits: usize) -> Result<StateVector> {
        match self {
            InputState::Basis(idx) => StateVector::basis(num_qubits, *idx),
            InputState::Prepared(prep) => {
                if prep.circuit.num_qubits() != num_qubits {
                    return Err(Error::WidthMismatch {
                        expected: num_qubits,
                        actual: prep.circuit.num_qubits(),
                    });
                }
                sim::run_circuit(&prep.circuit, &[], &StateVector::basis(num_qubits, 0)?)
            }
        }
    }
}

/// Overlap penalty `weight · |⟨state|ψ⟩|²` used by VQD.
#[derive(Clone, Debug, PartialEq)]
pub struct Deflation {
    pub weight: f64,
    pub state: StateVector,
}

/// A base task: ansatz, input, measured observable and its optimum.
#[derive(Clone, Debug)]
pub struct TaskSpec {
    pub circuit: ParamCircuit,
    pub base_input: InputState,
    pub base_obs: Observable,
    pub optimal: f64,
    pub deflation: Vec<Deflation>,
    base_state: StateVector,
}

impl TaskSpec {
    pub fn new(
        circuit: ParamCircuit,
        base_input: InputState,
        base_obs: Observable,
        optimal: f64,
        deflation: Vec<Deflation>,
    ) -> Result<Self> {
        let n = circuit.num_qubits();
        if base_obs.num_qubits() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                actual: base_obs.num_qubits(),
            });
        }
        if !optimal.is_finite() {
            return Err(Error::Config("task optimum must be finite".into()));
        }
        for d in &deflation {
            if d.state.num_qubits() != n {
                return Err(Error::WidthMismatch {
                    expected: n,
                    actual: d.state.num_qubits(),
                });
            }
            if !(d.weight.is_finite() && d.weight >= 0.0) {
                return Err(Error::Config("deflation weight must be finite and non-negative".into()));
            }
        }
        let base_state = base_input.prepare(n)?;
        Ok(TaskSpec {
            circuit,
            base_input,
            base_obs,
            optimal,
            deflation,
            base_state,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    pub fn num_params(&self) -> usize {
        self.circuit.num_params()
    }

    pub fn base_state(&self) -> &StateVector {
        &self.base_state
    }
}
