//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of the amplitude index: on `n`
//! qubits, qubit `q` corresponds to bit `n - 1 - q`. Global phase is never
//! tracked; states are compared by fidelity and unitaries by trace overlap.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{GateKind, ParamCircuit};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 13;
pub const MAX_EIGEN_QUBITS: usize = 10;
pub const MAX_UNITARY_QUBITS: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::WidthOutOfRange {
            num_qubits,
            min: 1,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn bit_of(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|basis_index⟩`.
    pub fn basis(num_qubits: usize, basis_index: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        if basis_index >= dim {
            return Err(Error::BasisIndex {
                index: basis_index,
                num_qubits,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[basis_index] = ONE;
        Ok(StateVector { num_qubits, amps })
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Config(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_width(num_qubits)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config("amplitude vector has zero norm".into()));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { num_qubits, amps })
    }

    /// Normalized state with independent Gaussian real and imaginary parts.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        check_width(num_qubits)?;
        let amps = (0..1usize << num_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.same_width(other.num_qubits)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `self ⊗ other`; the qubits of `self` come first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        check_width(self.num_qubits + other.num_qubits)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        })
    }

    fn same_width(&self, n: usize) -> Result<()> {
        if n != self.num_qubits {
            return Err(Error::WidthMismatch {
                expected: self.num_qubits,
                actual: n,
            });
        }
        Ok(())
    }

    fn apply_1q(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = bit_of(self.num_qubits, qubit);
        for block in self.amps.chunks_exact_mut(2 * bit) {
            let (lo, hi) = block.split_at_mut(bit);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let cb = bit_of(self.num_qubits, control);
        let tb = bit_of(self.num_qubits, target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let ab = bit_of(self.num_qubits, a);
        let bb = bit_of(self.num_qubits, b);
        for i in 0..self.amps.len() {
            if i & ab != 0 && i & bb == 0 {
                self.amps.swap(i, i ^ ab ^ bb);
            }
        }
    }

    /// Applies one gate with an already-resolved angle (ignored by
    /// non-rotation kinds).
    pub(crate) fn apply_gate(&mut self, kind: GateKind, qubits: &[usize], angle: f64) {
        match kind {
            GateKind::CX => self.apply_cx(qubits[0], qubits[1]),
            GateKind::SWAP => self.apply_swap(qubits[0], qubits[1]),
            _ => self.apply_1q(qubits[0], single_qubit_matrix(kind, angle)),
        }
    }

    /// In-place `P|ψ⟩`.
    pub fn apply_pauli(&mut self, pauli: &PauliString) -> Result<()> {
        self.same_width(pauli.num_qubits())?;
        let (x, z, ny) = pauli.masks();
        let phase = I.powu(ny);
        let src = self.amps.clone();
        for (b, a) in src.iter().enumerate() {
            let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            self.amps[b ^ x] = phase * sign * a;
        }
        Ok(())
    }
}

pub(crate) fn single_qubit_matrix(kind: GateKind, angle: f64) -> [[Complex64; 2]; 2] {
    let r = |x: f64| Complex64::new(x, 0.0);
    match kind {
        GateKind::H => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [[r(s), r(s)], [r(s), r(-s)]]
        }
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::SX => {
            let p = Complex64::new(0.5, 0.5);
            let m = Complex64::new(0.5, -0.5);
            [[p, m], [m, p]]
        }
        GateKind::RX => {
            let (s, c) = (angle / 2.0).sin_cos();
            [[r(c), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), r(c)]]
        }
        GateKind::RY => {
            let (s, c) = (angle / 2.0).sin_cos();
            [[r(c), r(-s)], [r(s), r(c)]]
        }
        GateKind::RZ => [
            [Complex64::from_polar(1.0, -angle / 2.0), ZERO],
            [ZERO, Complex64::from_polar(1.0, angle / 2.0)],
        ],
        GateKind::CX | GateKind::SWAP => unreachable!("two-qubit gate has no 2x2 matrix"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; the first letter acts on qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        PauliString { letters }
    }

    pub fn identity(num_qubits: usize) -> Self {
        PauliString {
            letters: vec![Pauli::I; num_qubits],
        }
    }

    /// Identity everywhere except `letter` on each of `qubits`.
    pub fn on(num_qubits: usize, qubits: &[usize], letter: Pauli) -> Self {
        let mut p = Self::identity(num_qubits);
        for &q in qubits {
            p.letters[q] = letter;
        }
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub fn is_diagonal(&self) -> bool {
        self.letters.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Bit masks `(x, z)` and the number of `Y` letters, such that
    /// `P|b⟩ = i^ny (-1)^popcount(b & z) |b ^ x⟩`.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let n = self.letters.len();
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = bit_of(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// Letters placed at new positions: qubit `q` of `self` lands on
    /// `placement[q]` of a `width`-qubit string; remaining letters are `I`.
    pub fn placed(&self, width: usize, placement: &[usize]) -> PauliString {
        let mut p = Self::identity(width);
        for (q, &letter) in self.letters.iter().enumerate() {
            p.letters[placement[q]] = letter;
        }
        p
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let (x, z, ny) = self.masks();
        let dim = 1usize << self.num_qubits();
        let phase = I.powu(ny);
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(b ^ x, b)] = phase * sign;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.letters.iter().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

impl FromStr for PauliString {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.is_empty() {
            return Err("empty Pauli word".into());
        }
        s.chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| format!("illegal Pauli letter '{c}'")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(PauliString::new)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub pauli: PauliString,
}

/// Real-weighted sum of Pauli strings of a common width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservable")]
pub struct Observable {
    num_qubits: usize,
    terms: Vec<Term>,
}

#[derive(Deserialize)]
struct RawObservable {
    num_qubits: usize,
    terms: Vec<Term>,
}

impl TryFrom<RawObservable> for Observable {
    type Error = Error;

    fn try_from(raw: RawObservable) -> Result<Self> {
        Observable::new(
            raw.num_qubits,
            raw.terms.into_iter().map(|t| (t.coeff, t.pauli)).collect(),
        )
    }
}

impl Observable {
    pub fn new(num_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        check_width(num_qubits)?;
        let mut out = Vec::with_capacity(terms.len());
        for (coeff, pauli) in terms {
            if pauli.num_qubits() != num_qubits {
                return Err(Error::WidthMismatch {
                    expected: num_qubits,
                    actual: pauli.num_qubits(),
                });
            }
            if !coeff.is_finite() {
                return Err(Error::Config("non-finite observable coefficient".into()));
            }
            out.push(Term { coeff, pauli });
        }
        Ok(Observable {
            num_qubits,
            terms: out,
        })
    }

    /// Single term `coeff · pauli`.
    pub fn single(coeff: f64, pauli: &str) -> Result<Self> {
        let p: PauliString = pauli.parse().map_err(Error::Config)?;
        Self::new(p.num_qubits(), vec![(coeff, p)])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `Σ|w_i|`, an upper bound on `|⟨O⟩|`.
    pub fn coeff_l1(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.pauli.is_diagonal())
    }

    pub fn scaled(&self, factor: f64) -> Observable {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff * factor,
                pauli: t.pauli.clone(),
            })
            .collect();
        Observable {
            num_qubits: self.num_qubits,
            terms,
        }
    }

    /// Concatenated term list (no folding of equal words).
    pub fn plus(&self, other: &Observable) -> Result<Observable> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::WidthMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Observable {
            num_qubits: self.num_qubits,
            terms,
        })
    }

    /// Observable re-expressed on `width` qubits with qubit `q` moved to
    /// `placement[q]`.
    pub fn placed(&self, width: usize, placement: &[usize]) -> Result<Observable> {
        if placement.len() != self.num_qubits {
            return Err(Error::WidthMismatch {
                expected: self.num_qubits,
                actual: placement.len(),
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|t| (t.coeff, t.pauli.placed(width, placement)))
            .collect();
        Observable::new(width, terms)
    }

    /// Diagonal matrix element `⟨b|O|b⟩`.
    pub fn diagonal_value(&self, b: usize) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let (x, z, _) = t.pauli.masks();
                if x != 0 {
                    0.0
                } else if (b & z).count_ones() % 2 == 1 {
                    -t.coeff
                } else {
                    t.coeff
                }
            })
            .sum()
    }

    /// Dense `2^n × 2^n` matrix. Intended for oracles and small widths.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            m += t.pauli.dense() * Complex64::new(t.coeff, 0.0);
        }
        m
    }
}

/// `|basis_index⟩` on `num_qubits` qubits.
pub fn init_state(num_qubits: usize, basis_index: usize) -> Result<StateVector> {
    StateVector::basis(num_qubits, basis_index)
}

/// Applies every gate of `circuit` in order to a copy of `input`.
pub fn run_circuit(circuit: &ParamCircuit, theta: &[f64], input: &StateVector) -> Result<StateVector> {
    circuit.check_theta(theta)?;
    if input.num_qubits != circuit.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: circuit.num_qubits(),
            actual: input.num_qubits,
        });
    }
    let mut state = input.clone();
    apply_gates(&mut state, circuit, theta, 0, None);
    Ok(state)
}

/// Applies gates `start..` of `circuit` in place, offsetting the angle of
/// gate `shift.0` by `shift.1`.
pub(crate) fn apply_gates(
    state: &mut StateVector,
    circuit: &ParamCircuit,
    theta: &[f64],
    start: usize,
    shift: Option<(usize, f64)>,
) {
    for (idx, g) in circuit.gates().iter().enumerate().skip(start) {
        let mut angle = g.angle(theta).unwrap_or(0.0);
        if let Some((at, delta)) = shift {
            if at == idx {
                angle += delta;
            }
        }
        state.apply_gate(g.kind, &g.qubits, angle);
    }
}

/// States just before each of the gates listed in `at` (ascending).
pub(crate) fn prefix_states(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
    at: &[usize],
) -> Result<Vec<StateVector>> {
    circuit.check_theta(theta)?;
    if input.num_qubits != circuit.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: circuit.num_qubits(),
            actual: input.num_qubits,
        });
    }
    let mut out = Vec::with_capacity(at.len());
    let mut state = input.clone();
    let mut next = 0;
    for &gi in at {
        for g in &circuit.gates()[next..gi] {
            state.apply_gate(g.kind, &g.qubits, g.angle(theta).unwrap_or(0.0));
        }
        next = gi;
        out.push(state.clone());
    }
    Ok(out)
}

/// `⟨P⟩` for one Pauli word, without materializing `P|ψ⟩`.
fn pauli_expectation(state: &StateVector, pauli: &PauliString) -> Complex64 {
    let (x, z, ny) = pauli.masks();
    let amps = &state.amps;
    let mut acc = ZERO;
    for (b, a) in amps.iter().enumerate() {
        let v = amps[b ^ x].conj() * a;
        if (b & z).count_ones() % 2 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    acc * I.powu(ny)
}

/// `Σ_i w_i ⟨ψ|P_i|ψ⟩`; the imaginary residue is discarded.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    state.same_width(obs.num_qubits)?;
    Ok(obs
        .terms
        .iter()
        .map(|t| t.coeff * pauli_expectation(state, &t.pauli).re)
        .sum())
}

/// An observable regrouped for repeated evaluation: terms sharing an X-mask
/// are folded into one phase-weighted diagonal, so each evaluation costs one
/// pass over the state per distinct mask rather than per term.
pub(crate) struct PackedObservable {
    num_qubits: usize,
    groups: Vec<(usize, Vec<Complex64>)>,
}

impl PackedObservable {
    pub(crate) fn new(obs: &Observable) -> Self {
        let dim = 1usize << obs.num_qubits;
        let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
        for t in &obs.terms {
            let (x, z, ny) = t.pauli.masks();
            let pos = match groups.iter().position(|g| g.0 == x) {
                Some(p) => p,
                None => {
                    groups.push((x, vec![ZERO; dim]));
                    groups.len() - 1
                }
            };
            let phase = I.powu(ny) * t.coeff;
            for (b, w) in groups[pos].1.iter_mut().enumerate() {
                if (b & z).count_ones() % 2 == 1 {
                    *w -= phase;
                } else {
                    *w += phase;
                }
            }
        }
        PackedObservable {
            num_qubits: obs.num_qubits,
            groups,
        }
    }

    pub(crate) fn expectation(&self, state: &StateVector) -> Result<f64> {
        state.same_width(self.num_qubits)?;
        let amps = &state.amps;
        let mut acc = ZERO;
        for (x, weights) in &self.groups {
            if *x == 0 {
                acc += amps
                    .iter()
                    .zip(weights)
                    .map(|(a, w)| w * a.norm_sqr())
                    .sum::<Complex64>();
            } else {
                acc += amps
                    .iter()
                    .enumerate()
                    .zip(weights)
                    .map(|((b, a), w)| amps[b ^ x].conj() * a * w)
                    .sum::<Complex64>();
            }
        }
        Ok(acc.re)
    }
}

/// The `k` lowest eigenpairs of `obs`, ascending.
pub fn exact_eigensolve(obs: &Observable, k: usize) -> Result<Vec<(f64, StateVector)>> {
    let n = obs.num_qubits;
    if n > MAX_EIGEN_QUBITS {
        return Err(Error::TooLarge {
            what: "eigensolve",
            num_qubits: n,
            max: MAX_EIGEN_QUBITS,
        });
    }
    let dim = 1usize << n;
    if k > dim {
        return Err(Error::Config(format!("requested {k} eigenpairs of a {dim}-dimensional operator")));
    }
    let dense = obs.to_dense();
    let pairs = hermitian_eigen(&dense)?;
    pairs
        .into_iter()
        .take(k)
        .map(|(lambda, v)| {
            let residual = (&dense * &v - &v * Complex64::new(lambda, 0.0)).norm();
            if residual > 1e-8 {
                return Err(Error::Internal(format!(
                    "eigenpair residual {residual:e} exceeds 1e-8"
                )));
            }
            Ok((lambda, StateVector::from_amplitudes(v.iter().copied().collect())?))
        })
        .collect()
}

/// Ascending eigenpairs of a Hermitian matrix.
///
/// nalgebra's `SymmetricEigen::new` occasionally stops on a wrong
/// decomposition when eigenvalues are highly degenerate (common for Pauli
/// sums), and whether it does depends on the convergence threshold. Each
/// attempt is checked by recomposing the matrix.
fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<Vec<(f64, DVector<Complex64>)>> {
    let scale = m.norm().max(1.0);
    for eps in [f64::EPSILON, 1e-15, 4e-15, 1e-14, 1e-13] {
        let Some(eig) = SymmetricEigen::try_new(m.clone(), eps, 0) else {
            continue;
        };
        if (eig.recompose() - m).norm() > 1e-10 * scale {
            continue;
        }
        let mut order: Vec<usize> = (0..m.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        return Ok(order
            .into_iter()
            .map(|c| (eig.eigenvalues[c], eig.eigenvectors.column(c).into_owned()))
            .collect());
    }
    Err(Error::Internal("Hermitian eigensolver did not converge".into()))
}

/// Full unitary of the circuit at `theta`; column `j` is the image of `|j⟩`.
pub fn circuit_unitary(circuit: &ParamCircuit, theta: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = circuit.num_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::TooLarge {
            what: "unitary",
            num_qubits: n,
            max: MAX_UNITARY_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut u = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let out = run_circuit(circuit, theta, &StateVector::basis(n, j)?)?;
        u.set_column(j, &nalgebra::DVector::from_column_slice(&out.amps));
    }
    Ok(u)
}
