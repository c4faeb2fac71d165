use std::fs;

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::json;

use noisy_qst::gates::{standard_mub_params, QuorumParams};
use noisy_qst::noise::{cnot_gate_fidelity, NoiseModel};
use noisy_qst::optimize::{optimize_quorum, OptimizerOptions, Strategy};
use noisy_qst::quality::{estimate_log_coefficient, evaluate, single_qubit_optimal_angle, single_qubit_quality};
use noisy_qst::tomography::{run_experiment, ExperimentOptions, Scheme};
use noisy_qst::Execution;

use crate::config::*;
use crate::output::fmt_g;

/// Failure classes, mapped to exit codes 2 and 1.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

/// What a command produces: the main document, an optional CSV companion
/// and an optional short stdout form.
pub struct Output {
    pub document: String,
    pub csv: Option<String>,
    pub brief: Option<String>,
}

fn json_doc<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn csv_doc(config: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    format!(
        "# config: {}\n{body}",
        serde_json::to_string(config).expect("config serializes")
    )
}

fn noise_model(n: &NoiseArgs) -> Outcome<NoiseModel> {
    NoiseModel::new(n.channel, n.interaction, n.strength).map_err(usage)
}

pub fn run(config: &RunConfig) -> Outcome<Output> {
    match &config.command {
        Command::Quality(a) => quality(config, a),
        Command::Optimize(a) => optimize(config, a),
        Command::Sweep(a) => sweep(config, a),
        Command::GateFidelity(a) => gate_fidelity(config, a),
        Command::Coeff(a) => coeff(config, a),
        Command::SingleQubit(a) => single_qubit(config, a),
    }
}

fn quality(config: &RunConfig, a: &QualityArgs) -> Outcome<Output> {
    let quorum = match (&a.quorum, a.mub) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(usage)?;
            QuorumParams::from_json(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(usage)?
        }
        (None, Some(i)) => standard_mub_params(i),
        (None, None) => return Err(usage(anyhow!("either --quorum or --mub is required"))),
    };
    let noise = NoiseModel::new(a.channel, quorum.interaction(), a.strength).map_err(usage)?;
    let report = evaluate(&quorum, &noise).map_err(runtime)?;
    Ok(Output {
        document: json_doc(&json!({ "config": config, "noise": noise, "report": report })),
        csv: None,
        brief: None,
    })
}

fn optimize(config: &RunConfig, a: &OptimizeArgs) -> Outcome<Output> {
    let noise = noise_model(&a.noise)?;
    let strategy = match a.strategy {
        StrategyKind::MubSeeded => Strategy::MubSeeded,
        StrategyKind::Multistart => Strategy::Multistart { starts: a.starts },
        StrategyKind::Annealing => Strategy::Annealing { runs: a.starts },
    };
    let opts = OptimizerOptions {
        max_iters: a.max_iters,
        seed: config.seed,
        execution: Execution::Parallel,
        ..OptimizerOptions::default()
    };
    opts.validate().map_err(usage)?;
    let results = optimize_quorum(&noise, strategy, &opts).map_err(runtime)?;
    let header = [
        "rank",
        "start_label",
        "q_noisy",
        "q_geometric",
        "entangling_time_total",
        "evaluations",
    ];
    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.start_label.clone(),
                fmt_g(r.q_noisy),
                fmt_g(r.q_geometric),
                fmt_g(r.entangling_time_total),
                r.evaluations.to_string(),
            ]
        })
        .collect();
    Ok(Output {
        document: json_doc(&json!({ "config": config, "strategy": strategy.to_string(), "results": results })),
        csv: Some(csv_doc(config, &header, &rows)),
        brief: None,
    })
}

fn sweep(config: &RunConfig, a: &SweepArgs) -> Outcome<Output> {
    if a.grid.is_empty() || a.schemes.is_empty() {
        return Err(usage(anyhow!("the noise grid and the scheme list must be non-empty")));
    }
    let opts = ExperimentOptions {
        n_states: a.states,
        total_shots: a.shots,
        seed: config.seed,
        noise_aware: !a.noise_ignorant,
        execution: Execution::Parallel,
    };
    let mut rows = Vec::new();
    for &strength in &a.grid {
        let noise = NoiseModel::new(a.channel, a.interaction, strength).map_err(usage)?;
        let mut schemes = Vec::with_capacity(a.schemes.len());
        for kind in &a.schemes {
            schemes.push(match kind {
                SchemeKind::Mub => Scheme::mub(a.interaction),
                SchemeKind::Pauli => Scheme::pauli(a.interaction),
                SchemeKind::Optimized => {
                    let o = OptimizerOptions {
                        seed: config.seed,
                        ..OptimizerOptions::default()
                    };
                    let best = optimize_quorum(&noise, Strategy::MubSeeded, &o).map_err(runtime)?;
                    Scheme::from_quorum("optimized", &best[0].params)
                }
            });
        }
        for r in run_experiment(&schemes, &noise, &opts).map_err(runtime)? {
            rows.push(vec![
                r.scheme_label,
                fmt_g(strength),
                r.n_states.to_string(),
                r.total_shots.to_string(),
                fmt_g(r.mean_infidelity),
                fmt_g(r.sem),
                r.seed.to_string(),
            ]);
        }
    }
    let header = [
        "scheme",
        "zeta_or_r",
        "n_states",
        "total_shots",
        "mean_infidelity",
        "sem",
        "seed",
    ];
    Ok(Output {
        document: csv_doc(config, &header, &rows),
        csv: None,
        brief: None,
    })
}

fn gate_fidelity(config: &RunConfig, a: &GateFidelityArgs) -> Outcome<Output> {
    let noise = noise_model(&a.noise)?;
    let f = cnot_gate_fidelity(&noise).map_err(runtime)?;
    Ok(Output {
        document: json_doc(&json!({ "config": config, "gate": "cnot", "fidelity": f })),
        csv: None,
        brief: Some(format!("{}\n", fmt_g(f))),
    })
}

fn coeff(config: &RunConfig, a: &CoeffArgs) -> Outcome<Output> {
    let fit = estimate_log_coefficient(a.dim, a.samples, config.seed, Execution::Parallel).map_err(usage)?;
    Ok(Output {
        document: json_doc(&json!({ "config": config, "fit": fit })),
        csv: None,
        brief: None,
    })
}

fn single_qubit(config: &RunConfig, a: &SingleQubitArgs) -> Outcome<Output> {
    if !(a.r >= 0.0 && a.r.is_finite()) {
        return Err(usage(anyhow!("r must be a finite non-negative number, got {}", a.r)));
    }
    let theta = single_qubit_optimal_angle(a.r);
    let q = single_qubit_quality(theta, a.r);
    Ok(Output {
        document: json_doc(&json!({ "config": config, "theta_opt": theta, "quality": q })),
        csv: None,
        brief: None,
    })
}
