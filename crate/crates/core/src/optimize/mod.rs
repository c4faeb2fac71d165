//! Numerical maximization of `Q_N` over the 75 quorum parameters.
//!
//! The objective is `−ln Q_N`. Angles are left unconstrained (the gates are
//! periodic in them); Heisenberg exchange times are folded into `[0, 2]` by a
//! triangle wave before evaluation, and stored folded in the results.

pub mod anneal;
pub mod diversity;
pub mod powell;

use std::fmt;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

pub use anneal::{simulated_annealing, AnnealSchedule};
pub use diversity::{diverse_starts, quorum_distance, random_quorum, DiverseStarts};
pub use powell::{powell_minimize, Minimum, PowellOptions};

use crate::error::{Error, Result};
use crate::gates::{standard_mub_params, Interaction, QuorumParams, PARAMS_PER_MEASUREMENT};
use crate::noise::NoiseModel;
use crate::par::{map_slice, substream, Execution};
use crate::quality::{evaluate, neg_log_noisy_quality};

/// Settings shared by all strategies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub sa_schedule: AnnealSchedule,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        let p = PowellOptions::default();
        Self {
            max_iters: p.max_iters,
            f_tol: p.f_tol,
            x_tol: p.x_tol,
            sa_schedule: AnnealSchedule::default(),
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl OptimizerOptions {
    pub fn powell(&self) -> PowellOptions {
        PowellOptions {
            max_iters: self.max_iters,
            f_tol: self.f_tol,
            x_tol: self.x_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.powell().validate()?;
        self.sa_schedule.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// Powell from the standard MUB quorum.
    MubSeeded,
    /// Powell from `starts` diversity-filtered random quorums.
    Multistart { starts: usize },
    /// Annealing plus Powell polish from `runs` random quorums.
    Annealing { runs: usize },
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::MubSeeded => write!(f, "mub-seeded"),
            Strategy::Multistart { starts } => write!(f, "multistart({starts})"),
            Strategy::Annealing { runs } => write!(f, "annealing({runs})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub start_label: String,
    pub params: QuorumParams,
    pub q_geometric: f64,
    pub q_noisy: f64,
    pub entangling_time_total: f64,
    pub entangling_times: Vec<f64>,
    pub evaluations: usize,
    /// `(iteration, −ln Q_N)`.
    pub trajectory: Vec<(usize, f64)>,
}

/// Reflects `a` into `[0, 2]` (period 4).
pub fn fold_time(a: f64) -> f64 {
    if (0.0..=2.0).contains(&a) {
        return a;
    }
    2.0 - (a.rem_euclid(4.0) - 2.0).abs()
}

fn fold_vector(interaction: Interaction, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    if interaction == Interaction::Heisenberg {
        for (i, v) in y.iter_mut().enumerate() {
            if (6..9).contains(&(i % PARAMS_PER_MEASUREMENT)) {
                *v = fold_time(*v);
            }
        }
    }
    y
}

/// `x ↦ −ln Q_N` over the parameter vector.
pub fn quorum_objective(noise: NoiseModel) -> impl Fn(&[f64]) -> f64 + Sync + Send {
    move |x: &[f64]| match QuorumParams::from_vector(noise.interaction, &fold_vector(noise.interaction, x)) {
        Ok(q) => neg_log_noisy_quality(&q, &noise),
        Err(_) => f64::NAN,
    }
}

fn finish(label: String, m: Minimum, noise: &NoiseModel) -> Result<OptimizationResult> {
    let params = QuorumParams::from_vector(noise.interaction, &fold_vector(noise.interaction, &m.x))?;
    let report = evaluate(&params, noise)?;
    Ok(OptimizationResult {
        start_label: label,
        entangling_time_total: report.entangling_times.iter().sum(),
        entangling_times: report.entangling_times,
        q_geometric: report.q_geometric,
        q_noisy: report.q_noisy,
        params,
        evaluations: m.evaluations,
        trajectory: m.trajectory,
    })
}

/// Powell refinement of one starting quorum.
pub fn optimize_from(
    start: &QuorumParams,
    noise: &NoiseModel,
    opts: &OptimizerOptions,
    label: &str,
) -> Result<OptimizationResult> {
    if start.interaction() != noise.interaction {
        return Err(crate::error::invalid(
            "start quorum",
            "interaction differs from noise model",
        ));
    }
    let m = powell_minimize(quorum_objective(*noise), &start.to_vector(), &opts.powell())?;
    debug!("{label}: -ln Q_N = {:.6} after {} evaluations", m.f, m.evaluations);
    finish(label.to_string(), m, noise)
}

/// Runs `strategy` and returns the results ordered by `Q_N`, best first.
/// Starts that fail are logged and skipped; if all fail the diagnostics are
/// returned as an error.
pub fn optimize_quorum(
    noise: &NoiseModel,
    strategy: Strategy,
    opts: &OptimizerOptions,
) -> Result<Vec<OptimizationResult>> {
    opts.validate()?;
    let exec = opts.execution;
    let outcomes: Vec<(String, Result<OptimizationResult>)> = match strategy {
        Strategy::MubSeeded => {
            let label = "mub".to_string();
            let r = optimize_from(&standard_mub_params(noise.interaction), noise, opts, &label);
            vec![(label, r)]
        }
        Strategy::Multistart { starts } => {
            let starts = diverse_starts(starts, noise, opts.seed, exec)?;
            let labelled: Vec<(String, QuorumParams)> = starts
                .quorums
                .into_iter()
                .enumerate()
                .map(|(i, q)| (format!("start-{i}"), q))
                .collect();
            map_slice(exec, &labelled, |(label, q)| {
                (label.clone(), optimize_from(q, noise, opts, label))
            })
        }
        Strategy::Annealing { runs } => {
            let idx: Vec<usize> = (0..runs).collect();
            map_slice(exec, &idx, |&i| {
                let label = format!("anneal-{i}");
                let mut rng = substream(opts.seed, i as u64);
                let start = random_quorum(noise.interaction, &mut rng);
                let r = simulated_annealing(
                    quorum_objective(*noise),
                    &start.to_vector(),
                    &opts.sa_schedule,
                    &mut rng,
                    Some(&opts.powell()),
                )
                .and_then(|m| finish(label.clone(), m, noise));
                (label, r)
            })
        }
    };
    let count = outcomes.len();
    let mut results = Vec::with_capacity(count);
    let mut failures = Vec::new();
    for (label, r) in outcomes {
        match r {
            Ok(r) => results.push(r),
            Err(e) => {
                warn!("{label} failed: {e}");
                failures.push(format!("{label}: {e}"));
            }
        }
    }
    if results.is_empty() {
        return Err(Error::AllStartsFailed {
            count,
            diagnostics: failures.join("; "),
        });
    }
    results.sort_by(|a, b| {
        b.q_noisy
            .total_cmp(&a.q_noisy)
            .then_with(|| a.start_label.cmp(&b.start_label))
    });
    Ok(results)
}
