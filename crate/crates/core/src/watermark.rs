//! Backdoor-style watermark: secret probe bundles, candidate grouping,
//! ownership verification and the detectability metrics.
//!
//! A [`WatermarkBundle`] holds a predefined input (a bound preparation
//! circuit applied to `|0…0⟩`), a predefined measurement and the target
//! probe loss. A model carries the watermark when running the probe yields
//! a value within `tau` of that target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_prep, ParamCircuit, PrepSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{InputState, TaskSpec};
use crate::sim::{Observable, Pauli, PauliString, StateVector};
use crate::train::{self, Adam, Objective, TrainConfig};

/// The owner's secret: `(ρ_pre, M_pre, L_pre)` plus the verification tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WatermarkBundle {
    pub prep: PrepSpec,
    pub obs: Observable,
    pub l_pre: f64,
    pub tau: f64,
    pub seed: u64,
}

impl WatermarkBundle {
    pub fn new(prep: PrepSpec, obs: Observable, l_pre: f64, tau: f64, seed: u64) -> Result<Self> {
        let b = WatermarkBundle {
            prep,
            obs,
            l_pre,
            tau,
            seed,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config("watermark tolerance must be positive".into()));
        }
        if !self.l_pre.is_finite() {
            return Err(Error::Config("watermark target must be finite".into()));
        }
        if self.prep.circuit.num_qubits() != self.obs.num_qubits() {
            return Err(Error::WidthMismatch {
                expected: self.prep.circuit.num_qubits(),
                actual: self.obs.num_qubits(),
            });
        }
        if self.prep.circuit.num_params() != 0 {
            return Err(Error::Config("prep circuit must be fully bound".into()));
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.obs.num_qubits()
    }

    /// `ρ_pre` as a state vector.
    pub fn prep_state(&self) -> Result<StateVector> {
        InputState::Prepared(self.prep.clone()).prepare(self.num_qubits())
    }

    /// `f(θ, ρ_pre, M_pre)` on a logical circuit.
    pub fn probe_value(&self, circuit: &ParamCircuit, theta: &[f64]) -> Result<f64> {
        circuit.probe_expectation(theta, &self.prep_state()?, &self.obs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: WatermarkBundle = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }
}

/// Anything that can be asked for a probe expectation: a logical circuit,
/// or a compiled variant that carries its own qubit layout.
pub trait ProbeTarget {
    fn probe_expectation(&self, theta: &[f64], input: &StateVector, obs: &Observable) -> Result<f64>;
}

impl ProbeTarget for ParamCircuit {
    fn probe_expectation(&self, theta: &[f64], input: &StateVector, obs: &Observable) -> Result<f64> {
        train::task_loss(self, theta, input, obs)
    }
}

/// Which sign of the aggregate score lets a candidate proceed to joint
/// training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptSign {
    /// Aggregate ≥ 0: watermark steps do not push the base loss away from
    /// its optimum.
    BenignPositive,
    /// Aggregate < 0: only candidates whose probe steps move the base loss
    /// away from its optimum proceed.
    Negative,
}

impl AcceptSign {
    pub fn passes(self, aggregate: f64) -> bool {
        match self {
            AcceptSign::BenignPositive => aggregate >= 0.0,
            AcceptSign::Negative => aggregate < 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingConfig {
    /// Watermark-only optimizer steps per candidate.
    pub probe_steps: usize,
    /// Number of leading per-step scores averaged into the aggregate.
    pub score_steps: usize,
    /// Offset added to the reference probe value to form `L_pre`.
    pub delta: f64,
    /// Maximum tolerated increase of base GTD after joint training.
    pub accuracy_threshold: f64,
    pub max_candidates: usize,
    pub accept_sign: AcceptSign,
    /// Verification tolerance written into generated bundles.
    pub tau: f64,
    /// Seed of candidate 0; candidate `i` uses `seed + i`.
    pub seed: u64,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            probe_steps: 20,
            score_steps: 10,
            delta: 0.3,
            accuracy_threshold: 0.01,
            max_candidates: 20,
            accept_sign: AcceptSign::BenignPositive,
            tau: 0.05,
            seed: 0,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.score_steps == 0 || self.probe_steps < self.score_steps {
            return Err(Error::Config("need probe_steps >= score_steps >= 1".into()));
        }
        if self.delta == 0.0 || !self.delta.is_finite() {
            return Err(Error::Config("delta must be finite and non-zero".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.max_candidates == 0 {
            return Err(Error::Config("max_candidates must be at least 1".into()));
        }
        if !(self.accuracy_threshold > 0.0) {
            return Err(Error::Config("accuracy threshold must be positive".into()));
        }
        Ok(())
    }
}

fn random_measurement(rng: &mut ChaCha8Rng, num_qubits: usize) -> Result<Observable> {
    let terms = (0..3)
        .map(|_| {
            let coeff = rng.gen_range(-0.5..=0.5);
            let word = loop {
                let letters: Vec<Pauli> = (0..num_qubits).map(|_| Pauli::ALL[rng.gen_range(0..4)]).collect();
                let p = PauliString::new(letters);
                if !p.is_identity() {
                    break p;
                }
            };
            (coeff, word)
        })
        .collect();
    Observable::new(num_qubits, terms)
}

/// A candidate bundle whose target sits `delta` away from the probe value
/// of the watermark-free trained circuit. Deterministic in `seed`.
///
/// `cfg.delta = 0` is accepted here (it yields the degenerate bundle whose
/// target equals the reference point); [`GroupingConfig::validate`] rejects
/// it for grouping runs.
pub fn generate_candidate(
    seed: u64,
    trained_theta: &[f64],
    task: &TaskSpec,
    cfg: &GroupingConfig,
) -> Result<WatermarkBundle> {
    let n = task.num_qubits();
    let prep = build_prep(seed, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let obs = random_measurement(&mut rng, n)?;
    let mut bundle = WatermarkBundle::new(prep, obs, 0.0, cfg.tau, seed)?;
    bundle.l_pre = bundle.probe_value(&task.circuit, trained_theta)? + cfg.delta;
    Ok(bundle)
}

/// `|f(θ, ρ_pre, M_pre) − L_pre|²`.
pub fn watermark_step_loss(circuit: &ParamCircuit, theta: &[f64], wm: &WatermarkBundle) -> Result<f64> {
    let dev = wm.probe_value(circuit, theta)? - wm.l_pre;
    Ok(dev * dev)
}

/// Per-step score from the base losses before and after an update.
/// Returns 0 when the starting distance to the optimum is below 1e-14.
pub fn score_from_losses(before: f64, after: f64, optimal: f64) -> f64 {
    let d0 = (before - optimal).powi(2);
    if d0 < 1e-14 {
        return 0.0;
    }
    1.0 - (after - optimal).powi(2) / d0
}

/// `1 − |f(θ^{k+1}) − L_opt|² / |f(θ^k) − L_opt|²` on the base task.
pub fn step_score(theta_k: &[f64], theta_k1: &[f64], task: &TaskSpec) -> Result<f64> {
    if theta_k.len() != theta_k1.len() {
        return Err(Error::ParamCount {
            expected: theta_k.len(),
            actual: theta_k1.len(),
        });
    }
    let before = train::base_loss(task, theta_k)?;
    let after = train::base_loss(task, theta_k1)?;
    Ok(score_from_losses(before, after, task.optimal))
}

/// Mean of the first `score_steps` per-step scores.
pub fn aggregate_score(scores: &[f64], score_steps: usize) -> f64 {
    let s = score_steps.min(scores.len());
    if s == 0 {
        return 0.0;
    }
    scores[..s].iter().sum::<f64>() / s as f64
}

/// Per-step scores of `probe_steps` watermark-only Adam steps taken from
/// `theta0`.
pub fn probe_scores(
    task: &TaskSpec,
    theta0: &[f64],
    wm: &WatermarkBundle,
    probe_steps: usize,
    train_cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let objective = Objective::watermark(&task.circuit, wm)?.with_shift(train_cfg.shift);
    let mut adam = Adam::new(theta0.len(), train_cfg.lr, train_cfg.weight_decay);
    let mut theta = theta0.to_vec();
    let mut before = train::base_loss(task, &theta)?;
    let mut scores = Vec::with_capacity(probe_steps);
    for _ in 0..probe_steps {
        let grad = objective.gradient(&theta)?;
        adam.step(&mut theta, &grad);
        let after = train::base_loss(task, &theta)?;
        scores.push(score_from_losses(before, after, task.optimal));
        before = after;
    }
    Ok(scores)
}

/// Jointly trains base and watermark tasks from `theta0`.
pub fn joint_train(
    task: &TaskSpec,
    theta0: &[f64],
    wm: &WatermarkBundle,
    train_cfg: &TrainConfig,
) -> Result<(Vec<f64>, train::TrainTrace)> {
    train::train_from(task, Some(wm), train_cfg, theta0.to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedOutcome {
    pub base_gtd: f64,
    pub wm_gtd: f64,
    pub accuracy_drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub index: usize,
    pub bundle: WatermarkBundle,
    pub step_scores: Vec<f64>,
    pub aggregate_score: f64,
    pub passed_sign: bool,
    pub trained: Option<TrainedOutcome>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupingReport {
    /// Base GTD of the watermark-free starting point.
    pub reference_base_gtd: f64,
    pub candidates: Vec<CandidateReport>,
    pub accepted_index: Option<usize>,
}

/// Outcome of a successful grouping run.
#[derive(Clone, Debug)]
pub struct Grouping {
    pub bundle: WatermarkBundle,
    /// Jointly trained parameters carrying the accepted watermark.
    pub theta: Vec<f64>,
    pub report: GroupingReport,
}

/// Candidate search: score each candidate by watermark-only probe steps,
/// jointly train those that pass the sign test, and accept the first whose
/// base GTD rises by less than `accuracy_threshold` while its probe lands
/// within `tau` of the target. Candidates are visited in index order.
///
/// `trained_theta` (a watermark-free optimum) supplies the reference probe
/// values and the reference base GTD. Probe steps and joint training both
/// start from the training initialization `train_cfg.init_theta`: at an
/// optimum every update moves the base loss away from it, so scores taken
/// there are uniformly negative and carry no information.
pub fn run_grouping(
    task: &TaskSpec,
    trained_theta: &[f64],
    cfg: &GroupingConfig,
    train_cfg: &TrainConfig,
) -> Result<Grouping> {
    cfg.validate()?;
    train_cfg.validate()?;
    task.circuit.check_theta(trained_theta)?;
    let reference = gtd(train::base_loss(task, trained_theta)?, task.optimal);
    let mut report = GroupingReport {
        reference_base_gtd: reference,
        candidates: Vec::new(),
        accepted_index: None,
    };
    let theta0 = train_cfg.init_theta(task.num_params());
    let mut best_score = f64::NEG_INFINITY;
    for index in 0..cfg.max_candidates {
        let seed = cfg.seed.wrapping_add(index as u64);
        let bundle = generate_candidate(seed, trained_theta, task, cfg)?;
        let step_scores = probe_scores(task, &theta0, &bundle, cfg.probe_steps, train_cfg)?;
        let aggregate = aggregate_score(&step_scores, cfg.score_steps);
        best_score = best_score.max(aggregate);
        let passed_sign = cfg.accept_sign.passes(aggregate);
        let mut entry = CandidateReport {
            index,
            bundle,
            step_scores,
            aggregate_score: aggregate,
            passed_sign,
            trained: None,
            accepted: false,
        };
        if passed_sign {
            let (theta, _) = joint_train(task, &theta0, &entry.bundle, train_cfg)?;
            let base_gtd = gtd(train::base_loss(task, &theta)?, task.optimal);
            let v = verify(&task.circuit, &theta, &entry.bundle)?;
            let accuracy_drop = base_gtd - reference;
            entry.accepted = accuracy_drop < cfg.accuracy_threshold && v.confirmed;
            entry.trained = Some(TrainedOutcome {
                base_gtd,
                wm_gtd: v.wm_gtd,
                accuracy_drop,
            });
            if entry.accepted {
                let bundle = entry.bundle.clone();
                report.accepted_index = Some(index);
                report.candidates.push(entry);
                return Ok(Grouping { bundle, theta, report });
            }
        }
        report.candidates.push(entry);
    }
    Err(Error::NoCandidate {
        tried: cfg.max_candidates,
        best_score,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub confirmed: bool,
    pub wm_gtd: f64,
}

/// Runs the probe and confirms ownership when `|f − L_pre| ≤ tau`.
pub fn verify<T: ProbeTarget + ?Sized>(target: &T, theta: &[f64], wm: &WatermarkBundle) -> Result<Verification> {
    let value = target.probe_expectation(theta, &wm.prep_state()?, &wm.obs)?;
    let wm_gtd = gtd(value, wm.l_pre);
    Ok(Verification {
        confirmed: wm_gtd <= wm.tau,
        wm_gtd,
    })
}

/// Ground truth distance `|estimated − optimal|`.
pub fn gtd(estimated: f64, optimal: f64) -> f64 {
    (estimated - optimal).abs()
}

/// `P(x ≤ b) = Σ_{i=0}^{b} C(c,i) p^{c−i} (1−p)^i`: probability that at
/// most `b` of `c` independent constraints fail when each is satisfied by
/// chance with probability `p`.
pub fn ppa(p: f64, b: u64, c: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("probability {p} outside [0, 1]")));
    }
    if b > c {
        return Err(Error::Config(format!("b = {b} exceeds c = {c}")));
    }
    if b == c {
        return Ok(1.0);
    }
    let q = 1.0 - p;
    if c <= 60 {
        let total: f64 = (0..=b)
            .map(|i| binomial_exact(c, i) * p.powi((c - i) as i32) * q.powi(i as i32))
            .sum();
        return Ok(total.min(1.0));
    }
    // x^k with 0^0 = 1, in the log domain
    let ln_pow = |x: f64, k: u64| if k == 0 { 0.0 } else { k as f64 * x.ln() };
    let mut ln_binom = 0.0;
    let mut total = 0.0;
    for i in 0..=b {
        if i > 0 {
            ln_binom += ((c - i + 1) as f64 / i as f64).ln();
        }
        total += (ln_binom + ln_pow(p, c - i) + ln_pow(q, i)).exp();
    }
    Ok(total.min(1.0))
}

fn binomial_exact(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64).round()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PEstimate {
    pub p_hat: f64,
    pub low: f64,
    pub high: f64,
    pub hits: usize,
    pub trials: usize,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // the closed form is exact at the edges; rounding is not
    let low = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if hits == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Monte Carlo estimate of the chance that a random parameter vector
/// (drawn like a training initialization) satisfies the probe within `tau`.
pub fn estimate_p(
    circuit: &ParamCircuit,
    wm: &WatermarkBundle,
    trials: usize,
    seed: u64,
    init_range: f64,
) -> Result<PEstimate> {
    if trials < 100 {
        return Err(Error::Config(format!("estimate_p needs at least 100 trials, got {trials}")));
    }
    let input = wm.prep_state()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..trials {
        let theta: Vec<f64> = (0..circuit.num_params())
            .map(|_| rng.gen_range(-init_range..=init_range))
            .collect();
        let value = circuit.probe_expectation(&theta, &input, &wm.obs)?;
        if gtd(value, wm.l_pre) <= wm.tau {
            hits += 1;
        }
    }
    let (low, high) = wilson_interval(hits, trials);
    Ok(PEstimate {
        p_hat: hits as f64 / trials as f64,
        low,
        high,
        hits,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneOutcome {
    pub theta: Vec<f64>,
    pub base_gtd: f64,
    pub wm_gtd: f64,
}

/// Continues training on the base task alone (β = 0) from `theta_star`.
pub fn finetune_attack(
    theta_star: &[f64],
    task: &TaskSpec,
    wm: &WatermarkBundle,
    budget_epochs: usize,
    train_cfg: &TrainConfig,
) -> Result<FinetuneOutcome> {
    if budget_epochs == 0 {
        return Err(Error::Config("fine-tune budget must be at least one epoch".into()));
    }
    let cfg = TrainConfig {
        alpha: if train_cfg.alpha > 0.0 { train_cfg.alpha } else { 1.0 },
        beta: 0.0,
        epochs: budget_epochs,
        ..train_cfg.clone()
    };
    let (theta, _) = train::train_from(task, None, &cfg, theta_star.to_vec())?;
    let base_gtd = gtd(train::base_loss(task, &theta)?, task.optimal);
    let wm_gtd = verify(&task.circuit, &theta, wm)?.wm_gtd;
    Ok(FinetuneOutcome { theta, base_gtd, wm_gtd })
}

/// Probe value through the logical circuit, exposed for tests and reports.
pub fn probe_value(circuit: &ParamCircuit, theta: &[f64], wm: &WatermarkBundle) -> Result<f64> {
    wm.probe_value(circuit, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_hea;
    use crate::hamiltonian::InputState;
    use proptest::prelude::*;

    fn small_task() -> TaskSpec {
        let obs = Observable::new(
            2,
            vec![(1.0, "ZZ".parse().unwrap()), (0.5, "XI".parse().unwrap())],
        )
        .unwrap();
        let optimal = crate::hamiltonian::optimal_value(&obs, 0).unwrap();
        TaskSpec::new(build_hea(2, 1).unwrap(), InputState::Basis(0), obs, optimal, vec![]).unwrap()
    }

    #[test]
    fn gtd_examples() {
        assert_eq!(gtd(0.7, 0.7), 0.0);
        assert!((gtd(-1.114, -1.127) - 0.013).abs() < 1e-12);
        assert_eq!(gtd(2.0, -1.0), gtd(-1.0, 2.0));
    }

    #[test]
    fn ppa_examples() {
        assert!((ppa(0.3, 0, 7).unwrap() - 0.3f64.powi(7)).abs() < 1e-15);
        assert_eq!(ppa(0.3, 7, 7).unwrap(), 1.0);
        // 16 equally likely outcomes of 4 fair constraints; at most one
        // unsatisfied: 1 (none) + 4 (exactly one)
        assert_eq!(ppa(0.5, 1, 4).unwrap(), 5.0 / 16.0);
        assert!(ppa(0.5, 5, 4).is_err());
        assert!(ppa(1.5, 0, 4).is_err());
        assert_eq!(ppa(0.0, 0, 3).unwrap(), 0.0);
        assert_eq!(ppa(1.0, 0, 3).unwrap(), 1.0);
    }

    #[test]
    fn ppa_large_c_uses_log_domain() {
        let c = 10_000;
        let v = ppa(0.999, 10, c).unwrap();
        assert!(v > 0.0 && v < 1.0);
        // matches the normal-free recurrence of term ratios
        let mut term = 0.999f64.powi(c as i32);
        let mut sum = term;
        for i in 0..10u64 {
            term *= (c - i) as f64 / (i + 1) as f64 * (0.001 / 0.999);
            sum += term;
        }
        assert!((v - sum).abs() < 1e-12 * sum.max(1e-300) + 1e-15);
    }

    proptest! {
        #[test]
        fn ppa_monotone_in_b(p in 0.0f64..=1.0, c in 1u64..200) {
            let mut prev = 0.0;
            for b in 0..=c {
                let v = ppa(p, b, c).unwrap();
                prop_assert!(v + 1e-12 >= prev);
                prev = v;
            }
            prop_assert!((prev - 1.0).abs() < 1e-12);
            prop_assert!((ppa(p, 0, c).unwrap() - p.powi(c as i32)).abs() < 1e-12);
        }

        #[test]
        fn step_score_sign(before in -3.0f64..3.0, after in -3.0f64..3.0, opt in -3.0f64..3.0) {
            prop_assume!((before - opt).abs() > 1e-6);
            let s = score_from_losses(before, after, opt);
            prop_assert_eq!(s > 0.0, (after - opt).abs() < (before - opt).abs());
            prop_assert_eq!(score_from_losses(before, before, opt), 0.0);
        }
    }

    #[test]
    fn step_score_examples() {
        assert_eq!(score_from_losses(1.0, 0.5, 0.0), 0.75);
        assert_eq!(score_from_losses(1.0, 2.0, 0.0), -3.0);
        assert_eq!(score_from_losses(1e-8, 2.0, 0.0), 0.0);
        let task = small_task();
        let theta = vec![0.2; 6];
        assert_eq!(step_score(&theta, &theta, &task).unwrap(), 0.0);
        assert!(step_score(&theta, &[0.0; 5], &task).is_err());
    }

    #[test]
    fn aggregate_with_single_step() {
        let task = small_task();
        let a = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let b = vec![0.0, 0.2, 0.3, 0.4, 0.5, 0.7];
        let s = step_score(&a, &b, &task).unwrap();
        assert_eq!(aggregate_score(&[s], 1), s);
        assert!((aggregate_score(&[1.0, 2.0, 3.0, 100.0], 3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn candidate_is_deterministic_and_offset() {
        let task = small_task();
        let theta = vec![0.3, -0.2, 0.1, 0.5, 0.0, -0.4];
        let a = generate_candidate(11, &theta, &task, &GroupingConfig::default()).unwrap();
        let b = generate_candidate(11, &theta, &task, &GroupingConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.obs.terms().len(), 3);
        assert!(a.obs.terms().iter().all(|t| !t.pauli.is_identity() && t.coeff.abs() <= 0.5));
        let v = verify(&task.circuit, &theta, &a).unwrap();
        assert!((v.wm_gtd - 0.3).abs() < 1e-12);
        assert!(!v.confirmed);

        let cfg = GroupingConfig { delta: 0.0, ..GroupingConfig::default() };
        let degenerate = generate_candidate(11, &theta, &task, &cfg).unwrap();
        assert_eq!(degenerate.l_pre, a.probe_value(&task.circuit, &theta).unwrap());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn step_loss_examples() {
        let task = small_task();
        let theta = vec![0.1; 6];
        let mut wm = generate_candidate(3, &theta, &task, &GroupingConfig { delta: 0.0, ..GroupingConfig::default() }).unwrap();
        assert_eq!(watermark_step_loss(&task.circuit, &theta, &wm).unwrap(), 0.0);
        wm.l_pre -= 0.5;
        assert!((watermark_step_loss(&task.circuit, &theta, &wm).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn infinite_tolerance_always_confirms() {
        let task = small_task();
        let mut wm = generate_candidate(5, &[0.0; 6], &task, &GroupingConfig::default()).unwrap();
        wm.tau = f64::INFINITY;
        assert!(verify(&task.circuit, &[1.0; 6], &wm).unwrap().confirmed);
    }

    #[test]
    fn estimate_p_extremes() {
        let task = small_task();
        let mut wm = generate_candidate(5, &[0.0; 6], &task, &GroupingConfig::default()).unwrap();
        wm.tau = f64::INFINITY;
        let est = estimate_p(&task.circuit, &wm, 100, 1, 0.1).unwrap();
        assert_eq!(est.p_hat, 1.0);
        wm.tau = f64::MIN_POSITIVE;
        let est = estimate_p(&task.circuit, &wm, 100, 1, 0.1).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert!(est.high > 0.0 && est.high < 0.05);
        assert!(estimate_p(&task.circuit, &wm, 99, 1, 0.1).is_err());
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        // no hits: [0, z²/(n + z²)]
        let z2 = 1.959_963_984_540_054f64.powi(2);
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!((hi - z2 / (1000.0 + z2)).abs() < 1e-12);
        assert_eq!(wilson_interval(50, 50).1, 1.0);
    }

    #[test]
    fn bundle_json_round_trip() {
        let task = small_task();
        let wm = generate_candidate(9, &[0.0; 6], &task, &GroupingConfig::default()).unwrap();
        let back = WatermarkBundle::from_json(&wm.to_json().unwrap()).unwrap();
        assert_eq!(back, wm);
    }

    #[test]
    fn accept_sign_modes() {
        assert!(AcceptSign::BenignPositive.passes(0.0));
        assert!(!AcceptSign::BenignPositive.passes(-0.1));
        assert!(AcceptSign::Negative.passes(-0.1));
        assert!(!AcceptSign::Negative.passes(0.2));
    }
}
