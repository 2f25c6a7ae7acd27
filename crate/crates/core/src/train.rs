//! Losses, parameter-shift gradients and the Adam training loop.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::hamiltonian::{Deflation, TaskSpec};
use crate::sim::{self, expectation, Observable, PackedObservable, StateVector};
use crate::watermark::WatermarkBundle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Base-task weight.
    pub alpha: f64,
    /// Watermark-task weight.
    pub beta: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Parameter-shift offset in radians.
    pub shift: f64,
    /// Initial parameters are drawn uniformly from `[-init_range, init_range]`.
    pub init_range: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1.0,
            beta: 1.0,
            lr: 5e-3,
            weight_decay: 1e-4,
            epochs: 300,
            seed: 0,
            shift: FRAC_PI_2,
            init_range: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("alpha and beta must be non-negative");
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return bad("alpha and beta cannot both be zero");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight decay must be non-negative");
        }
        let s = self.shift.sin();
        if !(self.shift.is_finite() && s.abs() > 1e-6) {
            return bad("parameter shift must have non-zero sine");
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return bad("init range must be non-negative");
        }
        Ok(())
    }

    /// Initial parameter vector for `num_params` parameters.
    pub fn init_theta(&self, num_params: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..num_params)
            .map(|_| {
                if self.init_range > 0.0 {
                    rng.gen_range(-self.init_range..=self.init_range)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total_loss: f64,
    pub base_loss: f64,
    pub wm_loss: Option<f64>,
}

/// Losses after every optimizer step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// CSV with header `epoch,total_loss,base_loss,wm_loss`; `wm_loss` is
    /// empty when no watermark was present.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(["epoch", "total_loss", "base_loss", "wm_loss"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `f(θ, ρ, M)`: expectation of `obs` after running the circuit on `input`.
pub fn task_loss(circuit: &ParamCircuit, theta: &[f64], input: &StateVector, obs: &Observable) -> Result<f64> {
    expectation(&sim::run_circuit(circuit, theta, input)?, obs)
}

fn deflation_penalty(state: &StateVector, deflation: &[Deflation]) -> Result<f64> {
    deflation
        .iter()
        .map(|d| Ok(d.weight * d.state.fidelity(state)?))
        .sum()
}

/// Task loss plus `Σ β_i |⟨state_i|ψ(θ)⟩|²`.
pub fn vqd_loss(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
    obs: &Observable,
    deflation: &[Deflation],
) -> Result<f64> {
    let psi = sim::run_circuit(circuit, theta, input)?;
    Ok(expectation(&psi, obs)? + deflation_penalty(&psi, deflation)?)
}

/// Base loss of a task (deflated when the task carries deflation states).
pub fn base_loss(task: &TaskSpec, theta: &[f64]) -> Result<f64> {
    vqd_loss(&task.circuit, theta, task.base_state(), &task.base_obs, &task.deflation)
}

/// `α·f(θ,ρ_b,M_b) + β·[f(θ,ρ_pre,M_pre) − L_pre]²`.
pub fn bvqc_loss(theta: &[f64], task: &TaskSpec, wm: &WatermarkBundle, cfg: &TrainConfig) -> Result<f64> {
    let base = base_loss(task, theta)?;
    let dev = wm.probe_value(&task.circuit, theta)? - wm.l_pre;
    Ok(cfg.alpha * base + cfg.beta * dev * dev)
}

/// The three loss components at one θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Losses {
    pub total: f64,
    pub base: f64,
    pub wm: Option<f64>,
}

struct BaseTerm<'a> {
    input: &'a StateVector,
    obs: PackedObservable,
    deflation: &'a [Deflation],
    weight: f64,
}

impl BaseTerm<'_> {
    fn measure(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.obs.expectation(psi)? + deflation_penalty(psi, self.deflation)?)
    }
}

struct WatermarkTerm {
    input: StateVector,
    obs: PackedObservable,
    target: f64,
    weight: f64,
}

/// A differentiable objective over the parameters of one circuit.
///
/// Both terms are expectation values of Hermitian operators (the deflation
/// projectors included), so every gradient component comes from the
/// parameter-shift rule applied per gate occurrence.
pub struct Objective<'a> {
    circuit: &'a ParamCircuit,
    base: Option<BaseTerm<'a>>,
    wm: Option<WatermarkTerm>,
    shift: f64,
}

impl<'a> Objective<'a> {
    /// Base task alone.
    pub fn base(task: &'a TaskSpec) -> Self {
        Objective {
            circuit: &task.circuit,
            base: Some(BaseTerm {
                input: task.base_state(),
                obs: PackedObservable::new(&task.base_obs),
                deflation: &task.deflation,
                weight: 1.0,
            }),
            wm: None,
            shift: FRAC_PI_2,
        }
    }

    /// Watermark step loss `|f(θ,ρ_pre,M_pre) − L_pre|²` alone.
    pub fn watermark(circuit: &'a ParamCircuit, wm: &'a WatermarkBundle) -> Result<Self> {
        Ok(Objective {
            circuit,
            base: None,
            wm: Some(WatermarkTerm {
                input: wm.prep_state()?,
                obs: PackedObservable::new(&wm.obs),
                target: wm.l_pre,
                weight: 1.0,
            }),
            shift: FRAC_PI_2,
        })
    }

    /// The combined BVQC loss. A zero weight drops that term from the
    /// gradient but it is still reported by [`Objective::evaluate`].
    pub fn bvqc(task: &'a TaskSpec, wm: Option<&'a WatermarkBundle>, alpha: f64, beta: f64) -> Result<Self> {
        let mut obj = Objective::base(task);
        if let Some(b) = obj.base.as_mut() {
            b.weight = alpha;
        }
        if let Some(wm) = wm {
            if wm.obs.num_qubits() != task.num_qubits() {
                return Err(Error::WidthMismatch {
                    expected: task.num_qubits(),
                    actual: wm.obs.num_qubits(),
                });
            }
            obj.wm = Some(WatermarkTerm {
                input: wm.prep_state()?,
                obs: PackedObservable::new(&wm.obs),
                target: wm.l_pre,
                weight: beta,
            });
        }
        Ok(obj)
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<Losses> {
        let base = match &self.base {
            Some(b) => Some(b.measure(&sim::run_circuit(self.circuit, theta, b.input)?)?),
            None => None,
        };
        let wm = match &self.wm {
            Some(w) => {
                let dev = w.obs.expectation(&sim::run_circuit(self.circuit, theta, &w.input)?)? - w.target;
                Some(dev * dev)
            }
            None => None,
        };
        let total = self.base.as_ref().map_or(0.0, |b| b.weight) * base.unwrap_or(0.0)
            + self.wm.as_ref().map_or(0.0, |w| w.weight) * wm.unwrap_or(0.0);
        Ok(Losses {
            total,
            base: base.unwrap_or(0.0),
            wm,
        })
    }

    /// `∂L/∂θ` by the parameter-shift rule, one shifted pair per gate
    /// occurrence of each free parameter. Occurrences are evaluated in
    /// parallel and reduced in gate order.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.circuit.check_theta(theta)?;
        let base = self.base.as_ref().filter(|b| b.weight != 0.0);
        let wm = self.wm.as_ref().filter(|w| w.weight != 0.0);

        // chain rule factor for the squared watermark deviation
        let wm_factor = match wm {
            Some(w) => {
                let f = w.obs.expectation(&sim::run_circuit(self.circuit, theta, &w.input)?)?;
                2.0 * w.weight * (f - w.target)
            }
            None => 0.0,
        };

        let occurrences: Vec<(usize, usize, f64)> = self
            .circuit
            .gates()
            .iter()
            .enumerate()
            .filter_map(|(gi, g)| match g.param {
                Some(crate::circuit::Param::Free { index, scale }) => Some((gi, index, scale)),
                _ => None,
            })
            .collect();

        let denom = 2.0 * self.shift.sin();
        let gate_idx: Vec<usize> = occurrences.iter().map(|o| o.0).collect();
        let base_prefix = match base {
            Some(b) => sim::prefix_states(self.circuit, theta, b.input, &gate_idx)?,
            None => Vec::new(),
        };
        let wm_prefix = match wm {
            Some(w) => sim::prefix_states(self.circuit, theta, &w.input, &gate_idx)?,
            None => Vec::new(),
        };
        let shifted = |gi: usize, prefix: &StateVector, sign: f64| {
            let mut s = prefix.clone();
            sim::apply_gates(&mut s, self.circuit, theta, gi, Some((gi, sign * self.shift)));
            s
        };
        let parts: Vec<(usize, f64)> = occurrences
            .par_iter()
            .enumerate()
            .map(|(k, &(gi, index, scale))| -> Result<(usize, f64)> {
                let mut d = 0.0;
                if let Some(b) = base {
                    let plus = b.measure(&shifted(gi, &base_prefix[k], 1.0))?;
                    let minus = b.measure(&shifted(gi, &base_prefix[k], -1.0))?;
                    d += b.weight * (plus - minus) / denom;
                }
                if let Some(w) = wm {
                    let plus = w.obs.expectation(&shifted(gi, &wm_prefix[k], 1.0))?;
                    let minus = w.obs.expectation(&shifted(gi, &wm_prefix[k], -1.0))?;
                    d += wm_factor * (plus - minus) / denom;
                }
                Ok((index, scale * d))
            })
            .collect::<Result<_>>()?;

        let mut grad = vec![0.0; theta.len()];
        for (index, d) in parts {
            grad[index] += d;
        }
        Ok(grad)
    }
}

/// Gradient of `objective` at `theta`.
pub fn gradient(objective: &Objective<'_>, theta: &[f64]) -> Result<Vec<f64>> {
    objective.gradient(theta)
}

/// Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64, weight_decay: f64) -> Self {
        Adam {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let decay = 1.0 - self.lr * self.weight_decay;
        for (i, (p, &g)) in theta.iter_mut().zip(grad).enumerate() {
            *p *= decay;
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Trains from the seeded initialization described by `cfg`.
pub fn train_loop(
    task: &TaskSpec,
    wm: Option<&WatermarkBundle>,
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, TrainTrace)> {
    cfg.validate()?;
    train_from(task, wm, cfg, cfg.init_theta(task.num_params()))
}

/// Trains starting at `theta0`. With `cfg.epochs == 0` returns `theta0`
/// untouched and an empty trace.
pub fn train_from(
    task: &TaskSpec,
    wm: Option<&WatermarkBundle>,
    cfg: &TrainConfig,
    theta0: Vec<f64>,
) -> Result<(Vec<f64>, TrainTrace)> {
    cfg.validate()?;
    task.circuit.check_theta(&theta0)?;
    let objective = Objective::bvqc(task, wm, cfg.alpha, cfg.beta)?.with_shift(cfg.shift);
    let mut theta = theta0;
    let mut adam = Adam::new(theta.len(), cfg.lr, cfg.weight_decay);
    let mut trace = TrainTrace::default();
    for epoch in 0..cfg.epochs {
        let grad = objective.gradient(&theta)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { epoch });
        }
        adam.step(&mut theta, &grad);
        let losses = objective.evaluate(&theta)?;
        if !losses.total.is_finite() {
            return Err(Error::NonFinite { epoch });
        }
        trace.records.push(EpochRecord {
            epoch,
            total_loss: losses.total,
            base_loss: losses.base,
            wm_loss: losses.wm,
        });
    }
    Ok((theta, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_hea, Gate, Param};
    use crate::hamiltonian::InputState;
    use crate::sim::init_state;

    fn ry_task() -> TaskSpec {
        let mut c = ParamCircuit::new(1, 1);
        c.push(Gate::ry(0, Param::free(0))).unwrap();
        TaskSpec::new(c, InputState::Basis(0), Observable::single(1.0, "Z").unwrap(), -1.0, vec![]).unwrap()
    }

    #[test]
    fn identity_circuit_loss() {
        let c = ParamCircuit::new(1, 0);
        let z = Observable::single(1.0, "Z").unwrap();
        assert_eq!(task_loss(&c, &[], &init_state(1, 0).unwrap(), &z).unwrap(), 1.0);
    }

    #[test]
    fn ry_gradient_examples() {
        let task = ry_task();
        let obj = Objective::base(&task);
        assert!(obj.gradient(&[0.0]).unwrap()[0].abs() < 1e-15);
        assert!((obj.gradient(&[FRAC_PI_2]).unwrap()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_rejects_wrong_length() {
        let task = ry_task();
        assert!(matches!(
            Objective::base(&task).gradient(&[0.0, 1.0]),
            Err(Error::ParamCount { .. })
        ));
    }

    #[test]
    fn scaled_and_shared_parameters() {
        // RY(2θ) then RY(θ): ⟨Z⟩ = cos 3θ, derivative −3 sin 3θ
        let mut c = ParamCircuit::new(1, 1);
        c.push(Gate::ry(0, Param::scaled(0, 2.0))).unwrap();
        c.push(Gate::ry(0, Param::free(0))).unwrap();
        let task =
            TaskSpec::new(c, InputState::Basis(0), Observable::single(1.0, "Z").unwrap(), -1.0, vec![]).unwrap();
        let g = Objective::base(&task).gradient(&[0.3]).unwrap()[0];
        assert!((g + 3.0 * (0.9f64).sin()).abs() < 1e-12);
    }

    #[test]
    fn vqd_with_empty_deflation_equals_task_loss() {
        let c = build_hea(2, 1).unwrap();
        let theta: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let s = init_state(2, 1).unwrap();
        let o = Observable::single(0.7, "XZ").unwrap();
        assert_eq!(
            vqd_loss(&c, &theta, &s, &o, &[]).unwrap(),
            task_loss(&c, &theta, &s, &o).unwrap()
        );
    }

    #[test]
    fn vqd_penalty_at_full_overlap() {
        // ψ(θ=0) = |0⟩, the ground state of Z; full overlap adds the weight
        let task = ry_task();
        let ground = init_state(1, 0).unwrap();
        let d = [Deflation {
            weight: 50.0,
            state: ground.clone(),
        }];
        let z = Observable::single(1.0, "Z").unwrap();
        let l = vqd_loss(&task.circuit, &[0.0], &ground, &z, &d).unwrap();
        assert!((l - (1.0 + 50.0)).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut adam = Adam::new(2, 0.01, 0.0);
        let mut theta = vec![1.0, -1.0];
        adam.step(&mut theta, &[3.0, -0.5]);
        assert!((theta[0] - 0.99).abs() < 1e-9);
        assert!((theta[1] + 0.99).abs() < 1e-9);
    }

    #[test]
    fn adam_weight_decay_is_decoupled() {
        let mut adam = Adam::new(1, 0.1, 0.5);
        let mut theta = vec![2.0];
        adam.step(&mut theta, &[0.0]);
        assert!((theta[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn zero_epochs_returns_initial_theta() {
        let task = ry_task();
        let cfg = TrainConfig {
            epochs: 0,
            seed: 4,
            ..TrainConfig::default()
        };
        let (theta, trace) = train_loop(&task, None, &cfg).unwrap();
        assert_eq!(theta, cfg.init_theta(1));
        assert!(trace.records.is_empty());
        assert_eq!(trace.to_csv_string().unwrap(), "epoch,total_loss,base_loss,wm_loss\n");
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { alpha: 0.0, beta: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { lr: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { alpha: -1.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { shift: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let trace = TrainTrace {
            records: vec![
                EpochRecord { epoch: 0, total_loss: 1.5, base_loss: 1.0, wm_loss: Some(0.5) },
                EpochRecord { epoch: 1, total_loss: 1.0, base_loss: 1.0, wm_loss: None },
            ],
        };
        assert_eq!(
            trace.to_csv_string().unwrap(),
            "epoch,total_loss,base_loss,wm_loss\n0,1.5,1.0,0.5\n1,1.0,1.0,\n"
        );
    }

    #[test]
    fn short_training_reduces_loss() {
        let task = ry_task();
        let cfg = TrainConfig { epochs: 200, lr: 0.05, seed: 1, ..TrainConfig::default() };
        let (theta, trace) = train_loop(&task, None, &cfg).unwrap();
        assert_eq!(trace.records.len(), 200);
        assert!(trace.last().unwrap().base_loss < -0.9);
        assert!((base_loss(&task, &theta).unwrap() - trace.last().unwrap().base_loss).abs() < 1e-15);
    }
}
