//! Monte-Carlo tomography: multinomial sampling of measurement outcomes and
//! maximum-likelihood reconstruction.
//!
//! Reconstruction uses the `RρR` fixed-point iteration. A full step is taken
//! when it does not lower the log-likelihood; otherwise the diluted update
//! `(1+εR)ρ(1+εR)` is used with `ε` halved until the likelihood does not
//! decrease.

use log::{info, warn};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gates::{
    measurement_unitary, standard_mub_params, Interaction, MeasurementParams, QuorumParams, SingleQubitParams,
    PAULI_BASIS_LABELS,
};
use crate::noise::{effective_povm, NoiseModel, Povm};
use crate::par::{map_indexed, substream, Execution};
use crate::quantum::{identity, random_density, state_fidelity, trace_product, CMat, DensityMatrix, TracelessVector};

/// Tolerance on raw outcome probabilities before clamping.
pub const PROBABILITY_TOL: f64 = 1e-10;
/// Stopping threshold on the per-shot log-likelihood improvement.
pub const ML_TOL: f64 = 1e-12;
/// Iteration cap of the fixed-point reconstruction.
pub const ML_MAX_ITERS: usize = 5000;
const MAX_DILUTIONS: usize = 40;

/// A labelled list of basis measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub label: String,
    pub interaction: Interaction,
    #[serde(skip)]
    pub measurements: Vec<MeasurementParams>,
}

impl Scheme {
    pub fn new(
        label: impl Into<String>,
        interaction: Interaction,
        measurements: Vec<MeasurementParams>,
    ) -> Result<Self> {
        if measurements.is_empty() {
            return Err(invalid("scheme", "no measurements"));
        }
        if let Some(m) = measurements.iter().find(|m| m.entangler.interaction() != interaction) {
            return Err(invalid(
                "scheme",
                format!("{} entangler in a {interaction} scheme", m.entangler.interaction()),
            ));
        }
        Ok(Self {
            label: label.into(),
            interaction,
            measurements,
        })
    }

    /// The nine local Pauli-product bases; no entangling gate is used.
    pub fn pauli(interaction: Interaction) -> Self {
        let gate = |c: char| match c {
            'x' => SingleQubitParams::new(std::f64::consts::FRAC_PI_4, 0.0, 0.0),
            'y' => SingleQubitParams::new(std::f64::consts::FRAC_PI_4, 0.0, std::f64::consts::FRAC_PI_2),
            _ => SingleQubitParams::default(),
        };
        let ms = PAULI_BASIS_LABELS
            .iter()
            .map(|l| {
                let mut c = l.chars();
                let (a, b) = (c.next().unwrap(), c.next().unwrap());
                MeasurementParams::local(interaction, gate(a), gate(b))
            })
            .collect();
        Self::new("pauli", interaction, ms).expect("local bases")
    }

    /// The standard MUB quorum.
    pub fn mub(interaction: Interaction) -> Self {
        Self::from_quorum("mub", &standard_mub_params(interaction))
    }

    pub fn from_quorum(label: impl Into<String>, q: &QuorumParams) -> Self {
        Self::new(label, q.interaction(), q.measurements().to_vec()).expect("quorum is consistent")
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    /// Effective POVMs under `noise`.
    pub fn povms(&self, noise: &NoiseModel) -> Result<Vec<Povm>> {
        self.measurements.iter().map(|m| effective_povm(m, noise)).collect()
    }

    /// Noise-free POVMs of the same circuits.
    pub fn ideal_povms(&self) -> Vec<Povm> {
        self.measurements
            .iter()
            .map(|m| Povm::ideal(&measurement_unitary(m)))
            .collect()
    }
}

/// Outcome probabilities `Tr(F_k ρ)`, clamped to `[0, 1]` and renormalized.
pub fn outcome_probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    let raw = povm.probabilities(rho);
    let sum: f64 = raw.iter().sum();
    if raw
        .iter()
        .any(|p| !(*p >= -PROBABILITY_TOL && *p <= 1.0 + PROBABILITY_TOL))
        || (sum - 1.0).abs() > PROBABILITY_TOL
    {
        return Err(Error::InvalidProbabilities(format!("{raw:?}")));
    }
    let clamped: Vec<f64> = raw.iter().map(|p| p.clamp(0.0, 1.0)).collect();
    let total: f64 = clamped.iter().sum();
    Ok(clamped.iter().map(|p| p / total).collect())
}

/// Multinomial outcome counts of `n_shots` repetitions.
pub fn sample_measurement<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    povm: &Povm,
    n_shots: u64,
    rng: &mut R,
) -> Result<[u64; 4]> {
    if n_shots == 0 {
        return Err(invalid("shot count", "must be at least 1"));
    }
    let p = outcome_probabilities(rho, povm)?;
    let mut counts = [0u64; 4];
    let mut left = n_shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if left == 0 {
            break;
        }
        let pk = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, pk).expect("probability in [0, 1]").sample(rng);
        counts[k] = c;
        left -= c;
        mass -= p[k];
    }
    counts[3] = left;
    Ok(counts)
}

/// Real coordinates `(Tr F, traceless part)` of an effect.
fn effect_coords(f: &CMat) -> Vec<f64> {
    let mut v = vec![f.trace().re / 2.0];
    v.extend_from_slice(TracelessVector::from_hermitian_unchecked(f).coords());
    v
}

/// Dimension of the real span of all effects.
pub fn effect_rank(povms: &[Povm]) -> usize {
    let rows: Vec<Vec<f64>> = povms
        .iter()
        .flat_map(|p| p.effects().iter().map(effect_coords))
        .collect();
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > 1e-9 * max.max(1.0)).count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// `Σ f_jk ln p_jk` with `f_jk = n_jk/N`.
    pub log_likelihood: f64,
    /// Log-likelihood after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
}

struct Data<'a> {
    effects: Vec<&'a CMat>,
    freqs: Vec<f64>,
}

impl Data<'_> {
    fn log_likelihood(&self, rho: &CMat) -> f64 {
        self.effects
            .iter()
            .zip(&self.freqs)
            .filter(|(_, f)| **f > 0.0)
            .map(|(e, f)| f * trace_product(e, rho).re.ln())
            .sum()
    }

    fn r_operator(&self, rho: &CMat) -> CMat {
        let mut r = CMat::zeros(4, 4);
        for (e, f) in self.effects.iter().zip(&self.freqs) {
            if *f > 0.0 {
                let p = trace_product(e, rho).re;
                r += e.scale(f / p);
            }
        }
        r
    }
}

fn conjugate_normalized(a: &CMat, rho: &CMat) -> CMat {
    let m = a * rho * a.adjoint();
    let m = (&m + m.adjoint()).scale(0.5);
    let t = m.trace().re;
    m.unscale(t)
}

/// Maximum-likelihood state for the observed counts.
pub fn ml_reconstruct(counts: &[[u64; 4]], povms: &[Povm]) -> Result<Reconstruction> {
    if counts.len() != povms.len() {
        return Err(Error::DimensionMismatch(counts.len(), povms.len()));
    }
    let rank = effect_rank(povms);
    if rank < 16 {
        return Err(Error::NotInformationallyComplete { rank, required: 16 });
    }
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(invalid("counts", "no shots recorded"));
    }
    let data = Data {
        effects: povms.iter().flat_map(|p| p.effects().iter()).collect(),
        freqs: counts.iter().flatten().map(|&n| n as f64 / total as f64).collect(),
    };
    let one = identity(4);
    let mut rho = one.scale(0.25);
    let mut ll = data.log_likelihood(&rho);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < ML_MAX_ITERS {
        iterations += 1;
        let r = data.r_operator(&rho);
        let mut next = conjugate_normalized(&r, &rho);
        let mut next_ll = data.log_likelihood(&next);
        let mut eps = 1.0;
        let mut dilutions = 0;
        while !(next_ll >= ll) && dilutions < MAX_DILUTIONS {
            let a = &one + r.scale(eps);
            next = conjugate_normalized(&a, &rho);
            next_ll = data.log_likelihood(&next);
            eps *= 0.5;
            dilutions += 1;
        }
        if !(next_ll >= ll) {
            converged = true;
            break;
        }
        let gain = next_ll - ll;
        rho = next;
        ll = next_ll;
        history.push(ll);
        if gain < ML_TOL {
            converged = true;
            break;
        }
    }
    Ok(Reconstruction {
        rho: DensityMatrix::from_numerical(rho)?,
        iterations,
        log_likelihood: ll,
        history,
        converged,
    })
}

/// Settings of a reconstruction experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentOptions {
    pub n_states: usize,
    pub total_shots: u64,
    pub seed: u64,
    /// Reconstruct with the noisy effects (`true`) or the ideal ones.
    #[serde(default = "noise_aware_default")]
    pub noise_aware: bool,
    #[serde(default)]
    pub execution: Execution,
}

fn noise_aware_default() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scheme_label: String,
    pub noise: NoiseModel,
    pub n_states: usize,
    pub mean_infidelity: f64,
    pub sem: f64,
    pub total_shots: u64,
    pub shots_per_measurement: u64,
    pub seed: u64,
}

/// Streams: the state of trial `i` comes from `substream(seed, i)`, the
/// outcomes of scheme `s` on it from `substream(seed + 1 + s, i)`.
pub fn run_experiment(
    schemes: &[Scheme],
    noise: &NoiseModel,
    opts: &ExperimentOptions,
) -> Result<Vec<ExperimentReport>> {
    if opts.n_states == 0 {
        return Err(invalid("state count", "must be at least 1"));
    }
    let mut prepared = Vec::with_capacity(schemes.len());
    for s in schemes {
        let povms = s.povms(noise)?;
        let recon = if opts.noise_aware {
            povms.clone()
        } else {
            s.ideal_povms()
        };
        let per = opts.total_shots / s.len() as u64;
        if per == 0 {
            return Err(invalid(
                "shot budget",
                format!("{} shots for {} measurements", opts.total_shots, s.len()),
            ));
        }
        let rem = opts.total_shots % s.len() as u64;
        if rem != 0 {
            warn!(
                "{}: {} shots left over after splitting {} over {} measurements",
                s.label,
                rem,
                opts.total_shots,
                s.len()
            );
        }
        prepared.push((povms, recon, per));
    }
    let trials: Vec<Result<Vec<f64>>> = map_indexed(opts.execution, opts.n_states, |i| {
        let rho = random_density(4, &mut substream(opts.seed, i as u64))?;
        prepared
            .iter()
            .enumerate()
            .map(|(s, (povms, recon, per))| {
                let mut rng = substream(opts.seed.wrapping_add(1 + s as u64), i as u64);
                let counts = povms
                    .iter()
                    .map(|p| sample_measurement(&rho, p, *per, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let est = ml_reconstruct(&counts, recon)?;
                Ok(1.0 - state_fidelity(&est.rho, &rho)?)
            })
            .collect()
    });
    let mut per_scheme = vec![Vec::with_capacity(opts.n_states); schemes.len()];
    for t in trials {
        for (s, v) in t?.into_iter().enumerate() {
            per_scheme[s].push(v);
        }
    }
    let reports = schemes
        .iter()
        .zip(&prepared)
        .zip(per_scheme)
        .map(|((s, (_, _, per)), xs)| {
            let (mean, sem) = mean_sem(&xs);
            info!("{}: mean infidelity {mean:.4e} ± {sem:.1e}", s.label);
            ExperimentReport {
                scheme_label: s.label.clone(),
                noise: *noise,
                n_states: opts.n_states,
                mean_infidelity: mean,
                sem,
                total_shots: opts.total_shots,
                shots_per_measurement: *per,
                seed: opts.seed,
            }
        })
        .collect();
    Ok(reports)
}

/// Mean and standard error of the mean.
pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
