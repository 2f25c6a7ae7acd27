use std::path::Path;

use bvqc::benchmarks::{coupling_map, Benchmark};
use bvqc::hamiltonian::TaskSpec;
use bvqc::noise::{noisy_expectation, noisy_task_loss, NoiseModel};
use bvqc::train::{self, TrainConfig};
use bvqc::transpile::recompile_attack;
use bvqc::watermark::{self, gtd, ppa, GroupingConfig, WatermarkBundle};

use crate::args::{AttackArgs, Command, GroupArgs, PpaArgs, ReportArgs, TrainArgs, VerifyArgs};
use crate::artifacts::*;
use crate::{report, CliError, CliResult};

pub fn execute(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Train(a) => train_cmd(a),
        Command::Group(a) => group_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Attack(a) => attack_cmd(a),
        Command::Ppa(a) => ppa_cmd(a),
        Command::Report(a) => report_cmd(a),
    }
}

fn train_cmd(a: &TrainArgs) -> CliResult<()> {
    let bench = a.opts.benchmark;
    let cfg = a.opts.train_config();
    let task = bench.task()?;
    let bundle = a.bundle.as_deref().map(read_bundle).transpose()?;
    let (theta, trace) = train::train_loop(&task, bundle.as_ref(), &cfg)?;

    ensure_dir(&a.out)?;
    write_json(
        &a.out.join("manifest.json"),
        &ExperimentManifest {
            benchmark: bench,
            seed: a.opts.seed,
            train: cfg.clone(),
            grouping: None,
            noise: vec![],
            shots: None,
            out: a.out.clone(),
        },
    )?;
    write_json(
        &a.out.join("theta.json"),
        &ThetaFile {
            benchmark: bench,
            seed: a.opts.seed,
            watermarked: bundle.is_some(),
            theta: theta.clone(),
        },
    )?;
    write_atomic(&a.out.join("trace.csv"), trace.to_csv_string()?.as_bytes())?;

    let base = train::base_loss(&task, &theta)?;
    println!(
        "{bench}: base loss {base:.6} (optimum {:.6}, GTD {:.3e}) after {} epochs",
        task.optimal,
        gtd(base, task.optimal),
        cfg.epochs
    );
    Ok(())
}

/// Noise settings in the order given, noiseless first and without repeats.
fn noise_settings(names: &[String]) -> CliResult<Vec<(String, NoiseModel)>> {
    let mut out = vec![("none".to_string(), NoiseModel::NOISELESS)];
    for name in names {
        let name = name.trim();
        if out.iter().any(|(n, _)| n == name) {
            continue;
        }
        out.push((name.to_string(), NoiseModel::preset(name)?));
    }
    Ok(out)
}

/// Base and watermark GTD of one parameter vector under `model`.
pub fn evaluate(
    task: &TaskSpec,
    theta: &[f64],
    wm: &WatermarkBundle,
    model: NoiseModel,
    shots: usize,
    seed: u64,
) -> CliResult<(f64, f64)> {
    let (base, _) = noisy_task_loss(task, theta, model, shots, seed)?;
    let (probe, _) = noisy_expectation(&task.circuit, theta, &wm.prep_state()?, &wm.obs, model, shots, seed)?;
    Ok((gtd(base, task.optimal), gtd(probe, wm.l_pre)))
}

fn group_cmd(a: &GroupArgs) -> CliResult<()> {
    let bench = a.opts.benchmark;
    let cfg = a.opts.train_config();
    let noise = noise_settings(&a.noise)?;
    if a.shots == 0 {
        return Err(CliError::Data("--shots must be at least 1".into()));
    }
    let mut gcfg = GroupingConfig {
        seed: a.opts.seed,
        ..GroupingConfig::default()
    };
    if let Some(t) = a.tau {
        gcfg.tau = t;
    }
    if let Some(d) = a.delta {
        gcfg.delta = d;
    }
    if let Some(n) = a.candidates {
        gcfg.max_candidates = n;
    }
    if let Some(t) = a.threshold {
        gcfg.accuracy_threshold = t;
    }
    if let Some(sign) = a.accept_sign {
        gcfg.accept_sign = sign.into();
    }
    gcfg.validate()?;
    cfg.validate()?;

    let task = bench.task()?;
    let (theta_nw, trace_nw) = train::train_loop(&task, None, &cfg)?;
    let grouping = watermark::run_grouping(&task, &theta_nw, &gcfg, &cfg)?;
    let accepted = grouping
        .report
        .accepted_index
        .ok_or_else(|| CliError::Internal("grouping returned without an accepted candidate".into()))?;

    let mut rows = Vec::with_capacity(noise.len());
    for (name, model) in &noise {
        let (base_nw, wm_nw) = evaluate(&task, &theta_nw, &grouping.bundle, *model, a.shots, a.opts.seed)?;
        let (base_bvqc, wm_bvqc) = evaluate(&task, &grouping.theta, &grouping.bundle, *model, a.shots, a.opts.seed)?;
        rows.push(SummaryRow {
            noise: name.clone(),
            base_gtd_nw: base_nw,
            base_gtd_bvqc: base_bvqc,
            wm_gtd_nw: wm_nw,
            wm_gtd_bvqc: wm_bvqc,
        });
    }

    let dir = a.out.join(bench.id());
    ensure_dir(&dir)?;
    write_json(
        &dir.join("manifest.json"),
        &ExperimentManifest {
            benchmark: bench,
            seed: a.opts.seed,
            train: cfg.clone(),
            grouping: Some(gcfg.clone()),
            noise: noise.iter().map(|(n, _)| n.clone()).collect(),
            shots: Some(a.shots),
            out: a.out.clone(),
        },
    )?;
    write_atomic(&dir.join("bundle.json"), grouping.bundle.to_json()?.as_bytes())?;
    let theta_file = |theta: &[f64], watermarked| ThetaFile {
        benchmark: bench,
        seed: a.opts.seed,
        watermarked,
        theta: theta.to_vec(),
    };
    write_json(&dir.join("theta.json"), &theta_file(&grouping.theta, true))?;
    write_json(&dir.join("theta_nw.json"), &theta_file(&theta_nw, false))?;
    write_atomic(&dir.join("trace_nw.csv"), trace_nw.to_csv_string()?.as_bytes())?;
    write_json(
        &dir.join("grouping_report.json"),
        &PublicGroupingReport::new(bench, &grouping.report),
    )?;
    write_json(
        &a.out.join(summary_name(bench)),
        &SummaryFile {
            benchmark: bench,
            seed: a.opts.seed,
            optimal: task.optimal,
            accepted_index: accepted,
            shots: a.shots,
            rows: rows.clone(),
        },
    )?;

    println!("{bench}: accepted candidate {accepted}");
    for r in &rows {
        println!(
            "  [{}] base GTD NW {:.3e} BVQC {:.3e} | wm GTD NW {:.3e} BVQC {:.3e}",
            r.noise, r.base_gtd_nw, r.base_gtd_bvqc, r.wm_gtd_nw, r.wm_gtd_bvqc
        );
    }
    Ok(())
}

fn load_model(theta_path: &Path) -> CliResult<(ThetaFile, TaskSpec)> {
    let tf: ThetaFile = read_json(theta_path)?;
    let task = tf.benchmark.task()?;
    task.circuit
        .check_theta(&tf.theta)
        .map_err(|e| CliError::Data(format!("{}: {e}", theta_path.display())))?;
    Ok((tf, task))
}

fn check_bundle_width(wm: &WatermarkBundle, task: &TaskSpec, bench: Benchmark) -> CliResult<()> {
    if wm.num_qubits() != task.num_qubits() {
        return Err(CliError::Data(format!(
            "bundle acts on {} qubits but {bench} has {}",
            wm.num_qubits(),
            task.num_qubits()
        )));
    }
    Ok(())
}

fn verify_cmd(a: &VerifyArgs) -> CliResult<()> {
    let mut wm = read_bundle(&a.bundle)?;
    if let Some(t) = a.tau {
        wm.tau = t;
        wm.validate()?;
    }
    let (tf, task) = load_model(&a.theta)?;
    check_bundle_width(&wm, &task, tf.benchmark)?;
    let verdict = Verdict::from(watermark::verify(&task.circuit, &tf.theta, &wm)?);
    write_json(&a.out.join("verdict.json"), &verdict)?;
    println!(
        "{}: {} (wm GTD {:.3e}, tau {})",
        tf.benchmark,
        if verdict.confirmed { "confirmed" } else { "rejected" },
        verdict.wm_gtd,
        wm.tau
    );
    Ok(())
}

fn attack_cmd(a: &AttackArgs) -> CliResult<()> {
    if a.seeds == 0 {
        return Err(CliError::Data("--seeds must be at least 1".into()));
    }
    let wm = read_bundle(&a.bundle)?;
    let (tf, task) = load_model(&a.theta)?;
    check_bundle_width(&wm, &task, tf.benchmark)?;
    let (coupling_name, coupling) = match &a.coupling {
        Some(name) => (name.clone(), coupling_map(name)?),
        None => (format!("line-{}", tf.benchmark.num_qubits()), tf.benchmark.coupling()),
    };
    let original = Verdict::from(watermark::verify(&task.circuit, &tf.theta, &wm)?);
    let seeds: Vec<u64> = (0..a.seeds).map(|k| a.seed.wrapping_add(k)).collect();
    let variants = recompile_attack(&task.circuit, &tf.theta, &coupling, &seeds)?;

    let vdir = a.out.join("variants");
    ensure_dir(&vdir)?;
    let mut entries = Vec::with_capacity(variants.len());
    for v in &variants {
        let name = format!("variant_{}.json", v.seed);
        write_json(&vdir.join(&name), &v.variant)?;
        let check = watermark::verify(&v.variant, &tf.theta, &wm)?;
        entries.push(AttackEntry {
            seed: v.seed,
            variant_file: format!("variants/{name}"),
            fidelity: v.fidelity,
            one_qubit: v.one_qubit,
            two_qubit: v.two_qubit,
            confirmed: check.confirmed,
            wm_gtd: check.wm_gtd,
            wm_gtd_change: (check.wm_gtd - original.wm_gtd).abs(),
        });
    }
    let confirmed = entries.iter().filter(|e| e.confirmed).count();
    let worst = entries.iter().map(|e| e.wm_gtd_change).fold(0.0, f64::max);
    write_json(
        &a.out.join("attack.json"),
        &AttackReport {
            benchmark: tf.benchmark,
            coupling: coupling_name,
            original,
            variants: entries,
        },
    )?;
    println!(
        "{}: {confirmed}/{} variants confirmed, max wm GTD change {worst:.3e}",
        tf.benchmark,
        variants.len()
    );
    Ok(())
}

fn ppa_cmd(a: &PpaArgs) -> CliResult<()> {
    let wm = read_bundle(&a.bundle)?;
    let task = a.benchmark.task()?;
    check_bundle_width(&wm, &task, a.benchmark)?;
    let init_range = TrainConfig::default().init_range;
    let est = watermark::estimate_p(&task.circuit, &wm, a.trials, a.seed, init_range)?;
    let ppa_curve = (0..=a.constraints)
        .map(|b| {
            Ok(PpaPoint {
                b,
                ppa: ppa(est.p_hat, b, a.constraints)?,
                ppa_upper: ppa(est.high, b, a.constraints)?,
            })
        })
        .collect::<bvqc::Result<Vec<_>>>()?;
    write_json(
        &a.out.join("ppa.json"),
        &PpaReport {
            benchmark: a.benchmark,
            p_hat: est.p_hat,
            interval: [est.low, est.high],
            hits: est.hits,
            trials: est.trials,
            constraints: a.constraints,
            ppa_curve,
        },
    )?;
    println!(
        "{}: p_hat {:.4} ({} / {}), 95% interval [{:.4}, {:.4}]",
        a.benchmark, est.p_hat, est.hits, est.trials, est.low, est.high
    );
    Ok(())
}

fn report_cmd(a: &ReportArgs) -> CliResult<()> {
    let summaries = report::load_summaries(&a.out)?;
    let (md, csv) = report::render(&summaries)?;
    write_atomic(&a.out.join("report.md"), md.as_bytes())?;
    write_atomic(&a.out.join("report.csv"), csv.as_bytes())?;
    println!("report over {} benchmarks written to {}", summaries.len(), a.out.display());
    Ok(())
}
