//! Re-compilation harness: basis decomposition, SWAP routing, peephole
//! optimization and equivalence certification.
//!
//! Layouts map *virtual* qubits to *physical* ones. Virtual qubits
//! `0..num_logical` are the circuit's own wires; any further virtual qubits
//! are idle ancillas that start (and therefore stay) in `|0⟩`.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{gate_counts, Gate, GateKind, Param, ParamCircuit};
use crate::error::{Error, Result};
use crate::sim::{self, Observable, StateVector, MAX_QUBITS, MAX_UNITARY_QUBITS};
use crate::watermark::ProbeTarget;

/// Fidelity below which a compiled variant is considered broken.
pub const EQUIVALENCE_TOL: f64 = 1e-9;

const RANDOM_PROBE_STATES: usize = 20;
const FOUR_PI: f64 = 4.0 * PI;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCoupling")]
pub struct CouplingMap {
    num_physical: usize,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawCoupling {
    num_physical: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawCoupling> for CouplingMap {
    type Error = Error;

    fn try_from(raw: RawCoupling) -> Result<Self> {
        CouplingMap::new(raw.num_physical, raw.edges)
    }
}

impl CouplingMap {
    pub fn new(num_physical: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if num_physical == 0 {
            return Err(Error::Graph("coupling map has no qubits".into()));
        }
        let mut adjacency = vec![Vec::new(); num_physical];
        for &(a, b) in &edges {
            if a >= num_physical || b >= num_physical {
                return Err(Error::Graph(format!("edge ({a}, {b}) out of range for {num_physical} qubits")));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop on qubit {a}")));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let map = CouplingMap {
            num_physical,
            edges,
            adjacency,
        };
        if map.bfs(0).iter().any(|d| d.is_none()) {
            return Err(Error::Disconnected);
        }
        Ok(map)
    }

    /// Line `0 - 1 - ... - (n-1)`.
    pub fn line(n: usize) -> Result<Self> {
        CouplingMap::new(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    /// Every pair coupled.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        CouplingMap::new(n, edges)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn num_physical(&self) -> usize {
        self.num_physical
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn are_coupled(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    fn bfs(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_physical];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Neighbour of `from` that starts a shortest path to `to`, lowest index
    /// first among ties.
    fn next_hop(&self, from: usize, to: usize) -> usize {
        let dist = self.bfs(to);
        let here = dist[from].expect("connected");
        self.adjacency[from]
            .iter()
            .copied()
            .find(|&v| dist[v] == Some(here - 1))
            .expect("connected")
    }

    /// Random connected set of `size` physical qubits, grown from a random
    /// seed qubit.
    fn random_region<R: Rng>(&self, size: usize, rng: &mut R) -> Vec<usize> {
        let mut region = vec![rng.gen_range(0..self.num_physical)];
        while region.len() < size {
            let mut frontier: Vec<usize> = region
                .iter()
                .flat_map(|&u| self.adjacency[u].iter().copied())
                .filter(|v| !region.contains(v))
                .collect();
            frontier.sort_unstable();
            frontier.dedup();
            region.push(*frontier.choose(rng).expect("connected"));
        }
        region.sort_unstable();
        region
    }

    /// Induced subgraph on `qubits`, relabelled `0..qubits.len()` in the
    /// given order.
    fn induced(&self, qubits: &[usize]) -> Result<CouplingMap> {
        let index = |p: usize| qubits.iter().position(|&q| q == p);
        let edges = self
            .edges
            .iter()
            .filter_map(|&(a, b)| Some((index(a)?, index(b)?)))
            .collect();
        CouplingMap::new(qubits.len(), edges)
    }
}

/// Virtual→physical assignments before and after a compiled circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub initial: Vec<usize>,
    #[serde(rename = "final")]
    pub final_: Vec<usize>,
}

impl Layout {
    pub fn identity(n: usize) -> Self {
        let id: Vec<usize> = (0..n).collect();
        Layout {
            initial: id.clone(),
            final_: id,
        }
    }

    pub fn width(&self) -> usize {
        self.initial.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial.len() != self.final_.len() {
            return Err(Error::Config("layout permutations differ in length".into()));
        }
        for perm in [&self.initial, &self.final_] {
            if !is_permutation(perm) {
                return Err(Error::Config(format!("layout {perm:?} is not a permutation")));
            }
        }
        Ok(())
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || std::mem::replace(&mut seen[x], true) {
            return false;
        }
    }
    true
}

/// Rewrites every gate into `{RZ, SX, X, CX}`.
///
/// * `H → RZ(π/2) SX RZ(π/2)`
/// * `RX(θ) → H RZ(θ) H`
/// * `RY(θ) → RZ(−π/2) RX(θ) RZ(π/2)`
/// * `SWAP → CX(a,b) CX(b,a) CX(a,b)`
///
/// Free parameters survive as free `RZ` angles. Equality holds up to global
/// phase.
pub fn decompose_to_basis(circuit: &ParamCircuit) -> ParamCircuit {
    let mut out = Vec::with_capacity(circuit.len() * 3);
    for g in circuit.gates() {
        decompose_gate(g, &mut out);
    }
    circuit.with_gates(circuit.num_qubits(), out)
}

fn push_h(q: usize, out: &mut Vec<Gate>) {
    out.push(Gate::rz(q, Param::Bound(FRAC_PI_2)));
    out.push(Gate::sx(q));
    out.push(Gate::rz(q, Param::Bound(FRAC_PI_2)));
}

fn push_rx(q: usize, p: Param, out: &mut Vec<Gate>) {
    push_h(q, out);
    out.push(Gate::rz(q, p));
    push_h(q, out);
}

fn decompose_gate(g: &Gate, out: &mut Vec<Gate>) {
    let q = g.qubits[0];
    match g.kind {
        GateKind::RZ | GateKind::SX | GateKind::X | GateKind::CX => out.push(g.clone()),
        GateKind::H => push_h(q, out),
        GateKind::RX => push_rx(q, g.param.expect("validated rotation"), out),
        GateKind::RY => {
            out.push(Gate::rz(q, Param::Bound(-FRAC_PI_2)));
            push_rx(q, g.param.expect("validated rotation"), out);
            out.push(Gate::rz(q, Param::Bound(FRAC_PI_2)));
        }
        GateKind::SWAP => {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            out.push(Gate::cx(a, b));
            out.push(Gate::cx(b, a));
            out.push(Gate::cx(a, b));
        }
    }
}

/// Maps `circuit` onto `coupling`, inserting SWAPs so that every two-qubit
/// gate acts on a coupled pair.
///
/// The moving qubit is always the first operand: it steps along a shortest
/// path toward the second until they are adjacent. `initial` defaults to the
/// identity; it must be a permutation of `0..num_physical`. The output has
/// `num_physical` wires.
pub fn route(
    circuit: &ParamCircuit,
    coupling: &CouplingMap,
    initial: Option<&[usize]>,
) -> Result<(ParamCircuit, Layout)> {
    let p = coupling.num_physical();
    if circuit.num_qubits() > p {
        return Err(Error::WidthMismatch {
            expected: p,
            actual: circuit.num_qubits(),
        });
    }
    let v2p: Vec<usize> = match initial {
        Some(l) if l.len() == p && is_permutation(l) => l.to_vec(),
        Some(l) => return Err(Error::Config(format!("initial layout {l:?} is not a permutation of 0..{p}"))),
        None => (0..p).collect(),
    };
    let mut v2p = v2p;
    let mut p2v = vec![0; p];
    for (v, &ph) in v2p.iter().enumerate() {
        p2v[ph] = v;
    }
    let initial = v2p.clone();
    let mut out = Vec::with_capacity(circuit.len());
    for g in circuit.gates() {
        if g.qubits.len() == 2 {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            while !coupling.are_coupled(v2p[a], v2p[b]) {
                let here = v2p[a];
                let next = coupling.next_hop(here, v2p[b]);
                out.push(Gate::swap(here, next));
                let other = p2v[next];
                p2v.swap(here, next);
                v2p[a] = next;
                v2p[other] = here;
            }
        }
        out.push(Gate {
            kind: g.kind,
            qubits: g.qubits.iter().map(|&v| v2p[v]).collect(),
            param: g.param,
        });
    }
    Ok((
        circuit.with_gates(p, out),
        Layout {
            initial,
            final_: v2p,
        },
    ))
}

fn same_axis(a: GateKind, b: GateKind) -> bool {
    a == b && a.is_rotation()
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    /// Diagonal in the computational basis on this wire.
    Z,
    /// Diagonal in the X basis on this wire.
    X,
    Other,
}

fn role(g: &Gate, q: usize) -> Role {
    match g.kind {
        GateKind::RZ => Role::Z,
        GateKind::X | GateKind::SX | GateKind::RX => Role::X,
        GateKind::CX if g.qubits[0] == q => Role::Z,
        GateKind::CX => Role::X,
        _ => Role::Other,
    }
}

/// Sufficient commutation test: on every shared wire both gates are diagonal
/// in the same basis.
fn commutes(a: &Gate, b: &Gate) -> bool {
    a.qubits.iter().all(|&q| {
        if !b.qubits.contains(&q) {
            return true;
        }
        let r = role(a, q);
        r != Role::Other && r == role(b, q)
    })
}

fn shares_wire(a: &Gate, b: &Gate) -> bool {
    a.qubits.iter().any(|q| b.qubits.contains(q))
}

enum Rewrite {
    /// Both gates disappear.
    Cancel,
    /// The first gate becomes this one, the second disappears.
    Merge(Gate),
}

fn pair_rewrite(a: &Gate, b: &Gate) -> Option<Rewrite> {
    if a.kind != b.kind {
        return None;
    }
    match a.kind {
        GateKind::X | GateKind::H if a.qubits == b.qubits => Some(Rewrite::Cancel),
        GateKind::CX if a.qubits == b.qubits => Some(Rewrite::Cancel),
        GateKind::SWAP if a.qubits == b.qubits || (a.qubits[0] == b.qubits[1] && a.qubits[1] == b.qubits[0]) => {
            Some(Rewrite::Cancel)
        }
        GateKind::SX if a.qubits == b.qubits => Some(Rewrite::Merge(Gate::x(a.qubits[0]))),
        k if same_axis(k, b.kind) && a.qubits == b.qubits => match (a.param, b.param) {
            (Some(Param::Bound(x)), Some(Param::Bound(y))) => {
                Some(Rewrite::Merge(Gate::rotation(k, a.qubits[0], Param::Bound((x + y).rem_euclid(FOUR_PI)))))
            }
            _ => None,
        },
        _ => None,
    }
}

fn is_trivial_rotation(g: &Gate) -> bool {
    match g.param {
        Some(Param::Bound(a)) => {
            let r = a.rem_euclid(FOUR_PI);
            r.abs() < 1e-12 || (FOUR_PI - r).abs() < 1e-12
        }
        _ => false,
    }
}

/// One sweep over the gate list. Returns whether anything changed.
fn optimize_sweep(gates: &mut Vec<Option<Gate>>) -> bool {
    let mut changed = false;
    for i in 0..gates.len() {
        let Some(a) = gates[i].clone() else { continue };
        if a.has_free_param() {
            continue;
        }
        if is_trivial_rotation(&a) {
            gates[i] = None;
            changed = true;
            continue;
        }
        for j in i + 1..gates.len() {
            let Some(b) = gates[j].as_ref() else { continue };
            if !shares_wire(&a, b) {
                continue;
            }
            if !b.has_free_param() {
                if let Some(rw) = pair_rewrite(&a, b) {
                    match rw {
                        Rewrite::Cancel => gates[i] = None,
                        Rewrite::Merge(g) => gates[i] = Some(g),
                    }
                    gates[j] = None;
                    changed = true;
                    break;
                }
            }
            if !commutes(&a, b) {
                break;
            }
        }
    }
    changed
}

/// Peephole optimization to a fixed point.
///
/// Commutation-aware cancellation of `X·X`, `H·H`, `CX·CX`, `SWAP·SWAP`;
/// `SX·SX → X`; merging of bound same-axis rotations (angles summed mod 4π);
/// removal of bound rotations with angle ≡ 0 mod 4π. Gates with free
/// parameters are never rewritten.
pub fn optimize_passes(circuit: &ParamCircuit) -> ParamCircuit {
    let mut gates: Vec<Option<Gate>> = circuit.gates().iter().cloned().map(Some).collect();
    while optimize_sweep(&mut gates) {
        gates.retain(Option::is_some);
    }
    circuit.with_gates(circuit.num_qubits(), gates.into_iter().flatten().collect())
}

/// Moves virtual qubit `v`'s amplitude bit to physical position `map[v]`.
fn permute_state(state: &StateVector, map: &[usize]) -> Result<StateVector> {
    let n = state.num_qubits();
    let amps = state.amplitudes();
    let mut out = vec![num_complex::Complex64::new(0.0, 0.0); amps.len()];
    for (idx, &a) in amps.iter().enumerate() {
        let mut target = 0usize;
        for (v, &ph) in map.iter().enumerate() {
            if idx & sim::bit_of(n, v) != 0 {
                target |= sim::bit_of(n, ph);
            }
        }
        out[target] = a;
    }
    StateVector::from_amplitudes(out)
}

fn inverse_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// `Π_final† · U2 · Π_initial` applied to a virtual-space state.
fn run_compiled(compiled: &ParamCircuit, theta: &[f64], layout: &Layout, input: &StateVector) -> Result<StateVector> {
    let physical = permute_state(input, &layout.initial)?;
    let out = sim::run_circuit(compiled, theta, &physical)?;
    permute_state(&out, &inverse_perm(&layout.final_))
}

/// How closely `c2` (under `layout`) implements `c1`, up to global phase.
///
/// `c1` acts on the leading virtual qubits; any extra wires of `c2` are idle
/// ancillas. Up to [`MAX_UNITARY_QUBITS`] wires this is
/// `|tr(U1† Π_f† U2 Π_0)| / 2^n`; beyond that it is the worst overlap
/// `|⟨U1 ψ | Π_f† U2 Π_0 ψ⟩|` over 20 seeded random states.
pub fn equivalence_fidelity(
    c1: &ParamCircuit,
    theta1: &[f64],
    c2: &ParamCircuit,
    theta2: &[f64],
    layout: &Layout,
) -> Result<f64> {
    let width = c2.num_qubits();
    if layout.width() != width || c1.num_qubits() > width {
        return Err(Error::WidthMismatch {
            expected: width,
            actual: layout.width(),
        });
    }
    layout.validate()?;
    let wide = c1.with_gates(width, c1.gates().to_vec());
    c1.check_theta(theta1)?;
    if width <= MAX_UNITARY_QUBITS {
        let dim = 1usize << width;
        let trace: num_complex::Complex64 = (0..dim)
            .into_par_iter()
            .map(|j| -> Result<num_complex::Complex64> {
                let basis = StateVector::basis(width, j)?;
                let a = sim::run_circuit(&wide, theta1, &basis)?;
                let b = run_compiled(c2, theta2, layout, &basis)?;
                a.inner(&b)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        Ok(trace.norm() / dim as f64)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let states: Vec<StateVector> = (0..RANDOM_PROBE_STATES)
            .map(|_| StateVector::random(width, &mut rng))
            .collect::<Result<_>>()?;
        let overlaps = states
            .par_iter()
            .map(|s| -> Result<f64> {
                let a = sim::run_circuit(&wide, theta1, s)?;
                let b = run_compiled(c2, theta2, layout, s)?;
                Ok(a.inner(&b)?.norm())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(overlaps.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// A compiled circuit together with the layout needed to talk to it in
/// logical terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub circuit: ParamCircuit,
    pub layout: Layout,
    pub num_logical: usize,
}

impl Variant {
    /// Embeds a logical input (ancillas in `|0⟩`) into physical wires.
    pub fn embed(&self, input: &StateVector) -> Result<StateVector> {
        let pad = self.layout.width() - self.num_logical;
        let virt = if pad > 0 {
            input.tensor(&StateVector::basis(pad, 0)?)?
        } else {
            input.clone()
        };
        permute_state(&virt, &self.layout.initial)
    }

    /// Logical observable moved onto the physical wires holding the logical
    /// qubits at the end of the circuit.
    pub fn place_observable(&self, obs: &Observable) -> Result<Observable> {
        obs.placed(self.layout.width(), &self.layout.final_[..self.num_logical])
    }
}

impl ProbeTarget for Variant {
    fn probe_expectation(&self, theta: &[f64], input: &StateVector, obs: &Observable) -> Result<f64> {
        if input.num_qubits() != self.num_logical {
            return Err(Error::WidthMismatch {
                expected: self.num_logical,
                actual: input.num_qubits(),
            });
        }
        let out = sim::run_circuit(&self.circuit, theta, &self.embed(input)?)?;
        sim::expectation(&out, &self.place_observable(obs)?)
    }
}

/// Drops physical wires that no gate touches and that hold no logical
/// qubit, relabelling the rest in increasing order.
fn compact(routed: &ParamCircuit, layout: &Layout, num_logical: usize) -> (ParamCircuit, Layout) {
    let p = routed.num_qubits();
    let mut active = vec![false; p];
    for &ph in &layout.initial[..num_logical] {
        active[ph] = true;
    }
    for g in routed.gates() {
        for &q in &g.qubits {
            active[q] = true;
        }
    }
    let mut relabel = vec![usize::MAX; p];
    let mut next = 0;
    for (ph, &on) in active.iter().enumerate() {
        if on {
            relabel[ph] = next;
            next += 1;
        }
    }
    let gates = routed
        .gates()
        .iter()
        .map(|g| Gate {
            kind: g.kind,
            qubits: g.qubits.iter().map(|&q| relabel[q]).collect(),
            param: g.param,
        })
        .collect();
    // Virtual qubits whose starting wire is dropped never move, so the kept
    // virtuals are exactly those starting on active wires.
    let keep: Vec<usize> = (0..p).filter(|&v| active[layout.initial[v]]).collect();
    let initial = keep.iter().map(|&v| relabel[layout.initial[v]]).collect();
    let final_ = keep.iter().map(|&v| relabel[layout.final_[v]]).collect();
    (routed.with_gates(next, gates), Layout { initial, final_ })
}

/// decompose → route → decompose → optimize, then compaction to the wires
/// actually used.
pub fn compile(circuit: &ParamCircuit, coupling: &CouplingMap, initial: Option<&[usize]>) -> Result<Variant> {
    let native = decompose_to_basis(circuit);
    let (routed, layout) = route(&native, coupling, initial)?;
    let optimized = optimize_passes(&decompose_to_basis(&routed));
    let (circuit_c, layout_c) = compact(&optimized, &layout, circuit.num_qubits());
    if circuit_c.num_qubits() > MAX_QUBITS {
        return Err(Error::TooLarge {
            what: "compiled variant",
            num_qubits: circuit_c.num_qubits(),
            max: MAX_QUBITS,
        });
    }
    Ok(Variant {
        circuit: circuit_c,
        layout: layout_c,
        num_logical: circuit.num_qubits(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackVariant {
    pub seed: u64,
    pub variant: Variant,
    pub fidelity: f64,
    pub one_qubit: usize,
    pub two_qubit: usize,
}

/// Seeded random initial layout. Maps wider than the simulator limit are
/// first cut down to a random connected region just large enough.
fn randomized_target(
    coupling: &CouplingMap,
    num_logical: usize,
    seed: u64,
) -> Result<(CouplingMap, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = if coupling.num_physical() > MAX_QUBITS {
        let region = coupling.random_region(num_logical, &mut rng);
        coupling.induced(&region)?
    } else {
        coupling.clone()
    };
    let mut perm: Vec<usize> = (0..target.num_physical()).collect();
    perm.shuffle(&mut rng);
    Ok((target, perm))
}

/// Re-compiles `circuit` once per seed with a randomized initial layout and
/// certifies each variant against the original at `theta`.
///
/// A variant below `1 − 1e-9` fidelity is a transpiler bug and is reported
/// as [`Error::Internal`].
pub fn recompile_attack(
    circuit: &ParamCircuit,
    theta: &[f64],
    coupling: &CouplingMap,
    seeds: &[u64],
) -> Result<Vec<AttackVariant>> {
    circuit.check_theta(theta)?;
    if circuit.num_qubits() > coupling.num_physical() {
        return Err(Error::WidthMismatch {
            expected: coupling.num_physical(),
            actual: circuit.num_qubits(),
        });
    }
    seeds
        .par_iter()
        .map(|&seed| {
            let (target, initial) = randomized_target(coupling, circuit.num_qubits(), seed)?;
            let variant = compile(circuit, &target, Some(&initial))?;
            let fidelity = equivalence_fidelity(circuit, theta, &variant.circuit, theta, &variant.layout)?;
            if fidelity < 1.0 - EQUIVALENCE_TOL {
                return Err(Error::Internal(format!(
                    "variant for seed {seed} fails equivalence (fidelity {fidelity:.12})"
                )));
            }
            let (one_qubit, two_qubit) = gate_counts(&variant.circuit);
            Ok(AttackVariant {
                seed,
                variant,
                fidelity,
                one_qubit,
                two_qubit,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_hea;

    fn single(kind: GateKind, qubits: &[usize]) -> ParamCircuit {
        ParamCircuit::from_gates(qubits.len().max(2), 0, vec![Gate::fixed(kind, qubits)]).unwrap()
    }

    fn fidelity_same_width(c1: &ParamCircuit, c2: &ParamCircuit, theta: &[f64]) -> f64 {
        equivalence_fidelity(c1, theta, c2, theta, &Layout::identity(c2.num_qubits())).unwrap()
    }

    #[test]
    fn basis_rewrites_are_exact() {
        for (kind, qubits) in [
            (GateKind::H, vec![0]),
            (GateKind::SWAP, vec![0, 1]),
            (GateKind::SWAP, vec![1, 0]),
        ] {
            let c = single(kind, &qubits);
            let d = decompose_to_basis(&c);
            assert!(d
                .gates()
                .iter()
                .all(|g| matches!(g.kind, GateKind::RZ | GateKind::SX | GateKind::X | GateKind::CX)));
            assert!((fidelity_same_width(&c, &d, &[]) - 1.0).abs() < 1e-12);
        }
        assert_eq!(decompose_to_basis(&single(GateKind::SWAP, &[0, 1])).len(), 3);
        for kind in [GateKind::RX, GateKind::RY, GateKind::RZ] {
            let c = ParamCircuit::from_gates(1, 1, vec![Gate::rotation(kind, 0, Param::free(0))]).unwrap();
            let d = decompose_to_basis(&c);
            for theta in [0.0, 0.37, -2.1, 5.0] {
                assert!((fidelity_same_width(&c, &d, &[theta]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn route_compatible_circuit_untouched() {
        let mut c = ParamCircuit::new(4, 0);
        for q in 0..3 {
            c.push(Gate::cx(q, q + 1)).unwrap();
        }
        let (routed, layout) = route(&c, &CouplingMap::line(4).unwrap(), None).unwrap();
        assert_eq!(routed.gates(), c.gates());
        assert_eq!(layout, Layout::identity(4));
    }

    #[test]
    fn route_long_range_cx_inserts_swaps() {
        let c = ParamCircuit::from_gates(4, 0, vec![Gate::h(0), Gate::cx(0, 3)]).unwrap();
        let line = CouplingMap::line(4).unwrap();
        let (routed, layout) = route(&c, &line, None).unwrap();
        let swaps = routed.gates().iter().filter(|g| g.kind == GateKind::SWAP).count();
        assert!(swaps >= 1);
        for g in routed.gates().iter().filter(|g| g.qubits.len() == 2) {
            assert!(line.are_coupled(g.qubits[0], g.qubits[1]));
        }
        assert!((equivalence_fidelity(&c, &[], &routed, &[], &layout).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimizer_examples() {
        let xx = ParamCircuit::from_gates(1, 0, vec![Gate::x(0), Gate::x(0)]).unwrap();
        assert!(optimize_passes(&xx).is_empty());
        let rz = ParamCircuit::from_gates(
            1,
            0,
            vec![Gate::rz(0, Param::Bound(0.3)), Gate::rz(0, Param::Bound(-0.3))],
        )
        .unwrap();
        assert!(optimize_passes(&rz).is_empty());
        let sx = ParamCircuit::from_gates(1, 0, vec![Gate::sx(0), Gate::sx(0)]).unwrap();
        assert_eq!(optimize_passes(&sx).gates(), &[Gate::x(0)]);
        // RZ on the control commutes through CX.
        let through = ParamCircuit::from_gates(
            2,
            0,
            vec![Gate::cx(0, 1), Gate::rz(0, Param::Bound(1.0)), Gate::cx(0, 1)],
        )
        .unwrap();
        assert_eq!(optimize_passes(&through).len(), 1);
        // ...but not on the target.
        let blocked = ParamCircuit::from_gates(
            2,
            0,
            vec![Gate::cx(0, 1), Gate::rz(1, Param::Bound(1.0)), Gate::cx(0, 1)],
        )
        .unwrap();
        assert_eq!(optimize_passes(&blocked).len(), 3);
    }

    #[test]
    fn free_parameter_gates_survive_optimization() {
        let c = ParamCircuit::from_gates(
            1,
            2,
            vec![Gate::rz(0, Param::free(0)), Gate::rz(0, Param::free(1))],
        )
        .unwrap();
        assert_eq!(optimize_passes(&c), c);
    }

    #[test]
    fn extra_x_breaks_equivalence() {
        let c = build_hea(3, 1).unwrap();
        let mut d = c.clone();
        d.push(Gate::x(1)).unwrap();
        let theta: Vec<f64> = (0..c.num_params()).map(|i| 0.1 * i as f64).collect();
        assert!((fidelity_same_width(&c, &c, &theta) - 1.0).abs() < 1e-12);
        assert!(fidelity_same_width(&c, &d, &theta) < 1.0 - 1e-3);
    }

    #[test]
    fn disconnected_map_rejected() {
        assert!(matches!(CouplingMap::new(4, vec![(0, 1), (2, 3)]), Err(Error::Disconnected)));
        assert!(CouplingMap::from_json(r#"{"num_physical": 2, "edges": [[0, 2]]}"#).is_err());
    }

    #[test]
    fn compaction_keeps_only_used_wires() {
        let c = build_hea(3, 1).unwrap();
        let big = CouplingMap::line(6).unwrap();
        let v = compile(&c, &big, None).unwrap();
        assert_eq!(v.circuit.num_qubits(), 3);
        let theta = vec![0.2; c.num_params()];
        let f = equivalence_fidelity(&c, &theta, &v.circuit, &theta, &v.layout).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }
}
