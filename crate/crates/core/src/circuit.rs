//! Parameterized circuit representation and the benchmark ansatz builders.
//!
//! A [`ParamCircuit`] is an ordered gate list over `num_qubits` wires. Rotation
//! gates take their angle either from the trainable vector θ
//! ([`Param::Free`], optionally scaled) or from a fixed constant
//! ([`Param::Bound`]).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::MaxCutGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    H,
    X,
    SX,
    RX,
    RY,
    RZ,
    CX,
    SWAP,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CX | GateKind::SWAP => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }
}

/// Angle source of a rotation gate.
///
/// Serialized as `{"free": i}` (plus `"scale"` when it is not 1) or
/// `{"bound": radians}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamRepr", into = "ParamRepr")]
pub enum Param {
    /// Angle is `scale * theta[index]`.
    Free { index: usize, scale: f64 },
    Bound(f64),
}

impl Param {
    pub fn free(index: usize) -> Self {
        Param::Free { index, scale: 1.0 }
    }

    pub fn scaled(index: usize, scale: f64) -> Self {
        Param::Free { index, scale }
    }

    pub fn resolve(&self, theta: &[f64]) -> f64 {
        match *self {
            Param::Free { index, scale } => scale * theta[index],
            Param::Bound(angle) => angle,
        }
    }

    pub fn negated(&self) -> Self {
        match *self {
            Param::Free { index, scale } => Param::Free {
                index,
                scale: -scale,
            },
            Param::Bound(angle) => Param::Bound(-angle),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Param::Free { .. })
    }
}

#[derive(Serialize, Deserialize)]
struct ParamRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    free: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

impl From<Param> for ParamRepr {
    fn from(p: Param) -> Self {
        match p {
            Param::Free { index, scale } => ParamRepr {
                free: Some(index),
                scale: (scale != 1.0).then_some(scale),
                bound: None,
            },
            Param::Bound(angle) => ParamRepr {
                free: None,
                scale: None,
                bound: Some(angle),
            },
        }
    }
}

impl TryFrom<ParamRepr> for Param {
    type Error = String;

    fn try_from(r: ParamRepr) -> std::result::Result<Self, String> {
        match (r.free, r.bound) {
            (Some(index), None) => Ok(Param::Free {
                index,
                scale: r.scale.unwrap_or(1.0),
            }),
            (None, Some(angle)) if r.scale.is_none() => Ok(Param::Bound(angle)),
            _ => Err("param must be exactly one of {\"free\": i} or {\"bound\": radians}".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param: Option<Param>,
}

impl Gate {
    pub fn fixed(kind: GateKind, qubits: &[usize]) -> Self {
        Gate {
            kind,
            qubits: qubits.to_vec(),
            param: None,
        }
    }

    pub fn rotation(kind: GateKind, qubit: usize, param: Param) -> Self {
        Gate {
            kind,
            qubits: vec![qubit],
            param: Some(param),
        }
    }

    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, &[q])
    }

    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, &[q])
    }

    pub fn sx(q: usize) -> Self {
        Self::fixed(GateKind::SX, &[q])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::CX, &[control, target])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::fixed(GateKind::SWAP, &[a, b])
    }

    pub fn rx(q: usize, p: Param) -> Self {
        Self::rotation(GateKind::RX, q, p)
    }

    pub fn ry(q: usize, p: Param) -> Self {
        Self::rotation(GateKind::RY, q, p)
    }

    pub fn rz(q: usize, p: Param) -> Self {
        Self::rotation(GateKind::RZ, q, p)
    }

    pub fn angle(&self, theta: &[f64]) -> Option<f64> {
        self.param.map(|p| p.resolve(theta))
    }

    pub fn has_free_param(&self) -> bool {
        self.param.is_some_and(|p| p.is_free())
    }

    /// Gate sequence implementing the inverse of this gate.
    pub fn inverse(&self) -> Vec<Gate> {
        match self.kind {
            // SX^4 = I
            GateKind::SX => vec![self.clone(), self.clone(), self.clone()],
            k if k.is_rotation() => {
                let mut g = self.clone();
                g.param = self.param.map(|p| p.negated());
                vec![g]
            }
            _ => vec![self.clone()],
        }
    }

    fn validate(&self, num_qubits: usize, num_params: usize) -> std::result::Result<(), String> {
        if self.qubits.len() != self.kind.arity() {
            return Err(format!(
                "{:?} acts on {} qubits, got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            ));
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= num_qubits) {
            return Err(format!("qubit {q} out of range for width {num_qubits}"));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err("two-qubit gate on a single wire".into());
        }
        match (self.kind.is_rotation(), self.param) {
            (true, None) => return Err(format!("{:?} requires a parameter", self.kind)),
            (false, Some(_)) => return Err(format!("{:?} takes no parameter", self.kind)),
            _ => {}
        }
        match self.param {
            Some(Param::Free { index, scale }) => {
                if index >= num_params {
                    return Err(format!("free index {index} >= num_params {num_params}"));
                }
                if !scale.is_finite() {
                    return Err("non-finite parameter scale".into());
                }
            }
            Some(Param::Bound(a)) if !a.is_finite() => {
                return Err("non-finite bound angle".into());
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct ParamCircuit {
    num_qubits: usize,
    num_params: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct RawCircuit {
    num_qubits: usize,
    num_params: usize,
    gates: Vec<Gate>,
}

impl TryFrom<RawCircuit> for ParamCircuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        ParamCircuit::from_gates(raw.num_qubits, raw.num_params, raw.gates)
    }
}

impl ParamCircuit {
    pub fn new(num_qubits: usize, num_params: usize) -> Self {
        ParamCircuit {
            num_qubits,
            num_params,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, num_params: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = ParamCircuit::new(num_qubits, num_params);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits, self.num_params)
            .map_err(|reason| Error::InvalidGate {
                index: self.gates.len(),
                reason,
            })?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Same gate list, different declared parameter count. Used when a
    /// circuit is rebuilt gate-by-gate by a pass.
    pub(crate) fn with_gates(&self, num_qubits: usize, gates: Vec<Gate>) -> ParamCircuit {
        ParamCircuit {
            num_qubits,
            num_params: self.num_params,
            gates,
        }
    }

    pub fn unused_params(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_params];
        for g in &self.gates {
            if let Some(Param::Free { index, .. }) = g.param {
                used[index] = true;
            }
        }
        used.iter()
            .enumerate()
            .filter(|(_, &u)| !u)
            .map(|(i, _)| i)
            .collect()
    }

    fn check_params_used(self) -> Result<Self> {
        let unused = self.unused_params();
        if unused.is_empty() {
            Ok(self)
        } else {
            Err(Error::UnusedParams(unused))
        }
    }

    /// Gate list of U† (reverse order, each gate inverted).
    pub fn inverse(&self) -> ParamCircuit {
        let gates = self.gates.iter().rev().flat_map(Gate::inverse).collect();
        self.with_gates(self.num_qubits, gates)
    }

    /// Appends `other` after `self`. Widths and parameter counts must agree.
    pub fn append(&mut self, other: &ParamCircuit) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::WidthMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        if other.num_params != self.num_params {
            return Err(Error::ParamCount {
                expected: self.num_params,
                actual: other.num_params,
            });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// All parameters resolved against `theta` into bound angles.
    pub fn bind(&self, theta: &[f64]) -> Result<ParamCircuit> {
        self.check_theta(theta)?;
        let gates = self
            .gates
            .iter()
            .map(|g| Gate {
                kind: g.kind,
                qubits: g.qubits.clone(),
                param: g.param.map(|p| Param::Bound(p.resolve(theta))),
            })
            .collect();
        Ok(ParamCircuit {
            num_qubits: self.num_qubits,
            num_params: 0,
            gates,
        })
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::ParamCount {
                expected: self.num_params,
                actual: theta.len(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `(one_qubit, two_qubit)` gate counts.
pub fn gate_counts(circuit: &ParamCircuit) -> (usize, usize) {
    circuit
        .gates
        .iter()
        .fold((0, 0), |(one, two), g| match g.kind.arity() {
            1 => (one + 1, two),
            _ => (one, two + 1),
        })
}

/// Hardware-efficient ansatz: each layer applies fresh RX, RY, RZ on every
/// qubit followed by a CNOT ring `q -> q+1 mod n`.
pub fn build_hea(num_qubits: usize, layers: usize) -> Result<ParamCircuit> {
    if num_qubits < 2 {
        return Err(Error::Config(format!(
            "hardware-efficient ansatz needs at least 2 qubits, got {num_qubits}"
        )));
    }
    if layers == 0 {
        return Err(Error::Config("ansatz needs at least one layer".into()));
    }
    let mut c = ParamCircuit::new(num_qubits, 3 * num_qubits * layers);
    let mut next = 0;
    for _ in 0..layers {
        for q in 0..num_qubits {
            for kind in [GateKind::RX, GateKind::RY, GateKind::RZ] {
                c.push(Gate::rotation(kind, q, Param::free(next)))?;
                next += 1;
            }
        }
        for q in 0..num_qubits {
            c.push(Gate::cx(q, (q + 1) % num_qubits))?;
        }
    }
    c.check_params_used()
}

/// QAOA circuit for MaxCut with `p` layers.
///
/// Parameters are `(γ_1..γ_p, β_1..β_p)`. Each edge term is realized as
/// `CX(i,j) · RZ_j(2γ) · CX(i,j)` and the mixer as `RX(2β)` on every qubit.
pub fn build_qaoa(graph: &MaxCutGraph, p: usize) -> Result<ParamCircuit> {
    graph.validate()?;
    if graph.edges.is_empty() {
        return Err(Error::Graph("graph has no edges".into()));
    }
    if p == 0 {
        return Err(Error::Config("QAOA needs p >= 1".into()));
    }
    let n = graph.num_nodes;
    let mut c = ParamCircuit::new(n, 2 * p);
    for q in 0..n {
        c.push(Gate::h(q))?;
    }
    for layer in 0..p {
        let gamma = Param::scaled(layer, 2.0);
        let beta = Param::scaled(p + layer, 2.0);
        for &(i, j, _) in &graph.edges {
            c.push(Gate::cx(i, j))?;
            c.push(Gate::rz(j, gamma))?;
            c.push(Gate::cx(i, j))?;
        }
        for q in 0..n {
            c.push(Gate::rx(q, beta))?;
        }
    }
    c.check_params_used()
}

/// Fully bound state-preparation circuit for a watermark input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepSpec {
    pub circuit: ParamCircuit,
    pub seed: u64,
}

/// Seeded preparation circuit: RY and RZ with uniform `[0, 2π)` angles on
/// every qubit, then one CNOT ring. Applied to `|0…0⟩`.
pub fn build_prep(seed: u64, num_qubits: usize) -> Result<PrepSpec> {
    if num_qubits < 2 {
        return Err(Error::Config(format!(
            "prep circuit needs at least 2 qubits, got {num_qubits}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = ParamCircuit::new(num_qubits, 0);
    for q in 0..num_qubits {
        c.push(Gate::ry(q, Param::Bound(rng.gen_range(0.0..2.0 * PI))))?;
        c.push(Gate::rz(q, Param::Bound(rng.gen_range(0.0..2.0 * PI))))?;
    }
    for q in 0..num_qubits {
        c.push(Gate::cx(q, (q + 1) % num_qubits))?;
    }
    Ok(PrepSpec { circuit: c, seed })
}
