//! Geometric quality of a quorum and its noise-penalized extension.
//!
//! `Q` is the Gram volume spanned by the traceless parts of three nominal
//! effects per measurement (15 vectors for two qubits). Noise enters as
//! `Q_N = Q·∏_jk q_jk^{κ/2}` where `κ ≈ 1.195` is the slope of the averaged
//! log-probability `⟨ln(p + (1−q)/(4q))⟩` against `1 − q`. For a
//! measurement with a single scale `q_j` this reads `Q·∏_j q_j^s` with
//! `s = 2κ = 2.39`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gates::{
    standard_mub_params, CanonicalParams, Entangler, HeisenbergTimes, Interaction, QuorumParams, QUORUM_SIZE,
};
use crate::noise::{effective_povm, NoiseModel, Povm};
use crate::par::{map_indexed, substream, Execution};
use crate::quantum::{
    bloch_volume, gram_volume_unchecked, haar_matrix, random_spectrum, traceless_part, Projector, TracelessVector,
};

/// Slope of the two-qubit log-average, from a Haar Monte-Carlo fit.
pub const LOG_COEFFICIENT_TWO_QUBIT: f64 = 1.195;
/// Exponent applied to each effect's scale factor.
pub const PER_EFFECT_EXPONENT: f64 = LOG_COEFFICIENT_TWO_QUBIT / 2.0;
/// Exponent of a measurement-wide scale factor, two qubits.
pub const S_TWO_QUBIT: f64 = 2.0 * LOG_COEFFICIENT_TWO_QUBIT;
/// Exponent of a measurement-wide scale factor, one qubit.
pub const S_QUBIT: f64 = 1.5;
/// Effects per measurement entering the volume.
pub const EFFECTS_IN_VOLUME: usize = 3;

/// Quality figures of one quorum under one noise model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub q_geometric: f64,
    pub q_noisy: f64,
    pub per_measurement_q: Vec<[f64; 4]>,
    pub entangling_times: Vec<f64>,
}

/// Traceless parts of the nominal effects, skipping `dropped[j]` in
/// measurement `j`.
fn volume_vectors(povms: &[Povm], dropped: &[usize]) -> Vec<TracelessVector> {
    povms
        .iter()
        .zip(dropped)
        .flat_map(|(p, &skip)| (0..4).filter(move |k| *k != skip).map(move |k| p.nominal_traceless(k)))
        .collect()
}

fn check_quorum(povms: &[Povm]) -> Result<()> {
    if povms.len() != QUORUM_SIZE {
        return Err(invalid(
            "quorum",
            format!("{} measurements, expected {QUORUM_SIZE}", povms.len()),
        ));
    }
    Ok(())
}

/// `Q` from the first three nominal effects of each of the five
/// measurements.
pub fn geometric_quality(povms: &[Povm]) -> Result<f64> {
    geometric_quality_dropping(povms, &[3; QUORUM_SIZE])
}

/// `Q` with effect `dropped[j]` left out of measurement `j`.
pub fn geometric_quality_dropping(povms: &[Povm], dropped: &[usize; QUORUM_SIZE]) -> Result<f64> {
    check_quorum(povms)?;
    if let Some(&k) = dropped.iter().find(|&&k| k >= 4) {
        return Err(invalid("dropped effect", format!("index {k} out of 0..4")));
    }
    Ok(gram_volume_unchecked(&volume_vectors(povms, dropped)))
}

/// `Q` of ideal bases given as projector lists (four rank-1 projectors each).
pub fn geometric_quality_of_bases(bases: &[Vec<Projector>]) -> Result<f64> {
    if bases.len() != QUORUM_SIZE || bases.iter().any(|b| b.len() != 4) {
        return Err(invalid("quorum", "expected five bases of four projectors"));
    }
    let vs: Vec<_> = bases
        .iter()
        .flat_map(|b| b[..EFFECTS_IN_VOLUME].iter().map(traceless_part))
        .collect();
    Ok(gram_volume_unchecked(&vs))
}

/// `Q·∏_jk q_jk^{κ/2}`.
pub fn noisy_quality(q_geometric: f64, qs: &[[f64; 4]]) -> f64 {
    let log_penalty: f64 = qs.iter().flatten().map(|q| q.ln()).sum::<f64>() * PER_EFFECT_EXPONENT;
    q_geometric * log_penalty.exp()
}

/// `Q·∏_j q_j^s` for measurement-wide scale factors.
pub fn noisy_quality_global(q_geometric: f64, q_per_measurement: &[f64], s: f64) -> f64 {
    q_geometric * q_per_measurement.iter().map(|q| q.powf(s)).product::<f64>()
}

fn povms_of(quorum: &QuorumParams, noise: &NoiseModel) -> Result<Vec<Povm>> {
    if quorum.interaction() != noise.interaction {
        return Err(invalid(
            "quorum",
            format!("{} quorum with {} noise", quorum.interaction(), noise.interaction),
        ));
    }
    quorum.measurements().iter().map(|m| effective_povm(m, noise)).collect()
}

/// Full quality report of a quorum.
pub fn evaluate(quorum: &QuorumParams, noise: &NoiseModel) -> Result<QualityReport> {
    let povms = povms_of(quorum, noise)?;
    let q_geometric = geometric_quality(&povms)?;
    let per_measurement_q: Vec<[f64; 4]> = povms
        .iter()
        .map(|p| {
            let q = p.qs();
            [q[0], q[1], q[2], q[3]]
        })
        .collect();
    Ok(QualityReport {
        q_geometric,
        q_noisy: noisy_quality(q_geometric, &per_measurement_q),
        per_measurement_q,
        entangling_times: quorum.entangling_times().to_vec(),
    })
}

/// `−ln Q_N`, or `+∞` when the quorum is degenerate.
pub fn neg_log_noisy_quality(quorum: &QuorumParams, noise: &NoiseModel) -> f64 {
    let Ok(povms) = povms_of(quorum, noise) else {
        return f64::INFINITY;
    };
    let q = gram_volume_unchecked(&volume_vectors(&povms, &[3; QUORUM_SIZE]));
    if !(q > 0.0) {
        return f64::INFINITY;
    }
    let penalty: f64 = povms.iter().flat_map(|p| p.qs().iter()).map(|q| q.ln()).sum();
    -(q.ln() + PER_EFFECT_EXPONENT * penalty)
}

/// Least-squares fit of the averaged log-probability against `1 − q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogCoefficientFit {
    pub dim: usize,
    pub samples: usize,
    pub slope: f64,
    pub intercept: f64,
    /// `(1 − q, ⟨ln(p + (1−q)/(dq))⟩)` at each grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Grid points in `q` used for the fit.
pub const LOG_FIT_POINTS: usize = 40;
/// Lower end of the `q` grid (the upper end is 1).
pub const LOG_FIT_Q_MIN: f64 = 0.9;
/// Smallest accepted sample count.
pub const MIN_LOG_SAMPLES: usize = 100_000;
const CHUNK: usize = 4096;

/// The fit grid `q_i`, evenly spaced on `[0.9, 1]`.
pub fn log_fit_grid() -> Vec<f64> {
    (0..LOG_FIT_POINTS)
        .map(|i| LOG_FIT_Q_MIN + (1.0 - LOG_FIT_Q_MIN) * i as f64 / (LOG_FIT_POINTS - 1) as f64)
        .collect()
}

/// Ordinary least-squares slope and intercept.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Monte-Carlo estimate of the log-average slope over Haar-random mixed
/// states and the `d` projectors of a fixed basis.
///
/// Work is split into fixed-size chunks, each with its own substream of
/// `seed`, so the result does not depend on `exec`.
pub fn estimate_log_coefficient(d: usize, n_samples: usize, seed: u64, exec: Execution) -> Result<LogCoefficientFit> {
    if d != 2 && d != 4 {
        return Err(Error::UnsupportedDimension(d));
    }
    if n_samples < MIN_LOG_SAMPLES {
        return Err(invalid("sample count", format!("{n_samples} < {MIN_LOG_SAMPLES}")));
    }
    let grid = log_fit_grid();
    let shifts: Vec<f64> = grid.iter().map(|q| (1.0 - q) / (d as f64 * q)).collect();
    let chunks = n_samples.div_ceil(CHUNK);
    let partial = map_indexed(exec, chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let count = CHUNK.min(n_samples - c * CHUNK);
        let mut sums = vec![0.0; shifts.len()];
        for _ in 0..count {
            let u = haar_matrix(d, &mut rng);
            let spectrum = random_spectrum(d, &mut rng);
            for k in 0..d {
                let p: f64 = (0..d).map(|i| spectrum[i] * u[(k, i)].norm_sqr()).sum();
                for (s, e) in sums.iter_mut().zip(&shifts) {
                    *s += (p + e).ln();
                }
            }
        }
        sums
    });
    let mut totals = vec![0.0; shifts.len()];
    for sums in partial {
        for (t, s) in totals.iter_mut().zip(sums) {
            *t += s;
        }
    }
    let norm = (n_samples * d) as f64;
    let curve: Vec<(f64, f64)> = grid.iter().zip(&totals).map(|(q, t)| (1.0 - q, t / norm)).collect();
    let (slope, intercept) = linear_fit(&curve);
    Ok(LogCoefficientFit {
        dim: d,
        samples: n_samples,
        slope,
        intercept,
        curve,
    })
}

/// Qubit average `⟨ln(p + c)⟩` with states uniform in the Bloch ball and
/// `p = ⟨0|ρ|0⟩`:
/// `−5/6 + 2c(1+c) + c²(3+2c)ln c − (1+c)²(2c−1)ln(1+c)`.
pub fn qubit_log_average_shift(c: f64) -> f64 {
    let clnc = if c > 0.0 { c * c * (3.0 + 2.0 * c) * c.ln() } else { 0.0 };
    -5.0 / 6.0 + 2.0 * c * (1.0 + c) + clnc - (1.0 + c).powi(2) * (2.0 * c - 1.0) * c.ln_1p()
}

/// [`qubit_log_average_shift`] at the depolarizing shift `c = (1−q)/(2q)`.
pub fn qubit_log_average(q: f64) -> f64 {
    qubit_log_average_shift((1.0 - q) / (2.0 * q))
}

/// Slope of [`qubit_log_average`] against `1 − q` at `q = 1`.
pub const QUBIT_LOG_SLOPE: f64 = 1.5;

/// Single-qubit scheme: three measurement directions at polar angle `θ` and
/// azimuths `0, 2π/3, 4π/3`, each rotated by `|θ|` and suffering rotation
/// noise `q = e^{−r|θ|}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitScheme {
    pub theta: f64,
    pub phases: [f64; 3],
    pub r: f64,
}

impl SingleQubitScheme {
    pub fn new(theta: f64, r: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= PI / 2.0) {
            return Err(Error::OutOfRange {
                name: "theta",
                value: theta,
            });
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::OutOfRange { name: "r", value: r });
        }
        Ok(Self {
            theta,
            phases: [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
            r,
        })
    }

    pub fn bloch_vectors(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.theta.sin_cos();
        self.phases.map(|p| [s * p.cos(), s * p.sin(), c])
    }

    /// Traceless parts of the projectors `(1 + n·σ)/2`.
    pub fn traceless_vectors(&self) -> Vec<TracelessVector> {
        let f = std::f64::consts::FRAC_1_SQRT_2;
        self.bloch_vectors()
            .iter()
            .map(|n| TracelessVector::from_coords(2, n.iter().map(|x| x * f).collect()).expect("three coordinates"))
            .collect()
    }

    pub fn q(&self) -> f64 {
        (-self.r * self.theta.abs()).exp()
    }

    /// Bloch-convention volume times `q^{3s}`.
    pub fn quality(&self) -> f64 {
        let v = bloch_volume(&self.traceless_vectors()).expect("qubit vectors");
        noisy_quality_global(v, &[self.q(); 3], S_QUBIT)
    }
}

/// `(3√3/2)·e^{−9r|θ|/2}·cosθ·sin²θ`.
pub fn single_qubit_quality(theta: f64, r: f64) -> f64 {
    1.5 * 3f64.sqrt() * (-4.5 * r * theta.abs()).exp() * theta.cos() * theta.sin().powi(2)
}

/// `arctan(√(81r²/16 + 2) − 9r/4)`.
pub fn single_qubit_optimal_angle(r: f64) -> f64 {
    ((81.0 * r * r / 16.0 + 2.0).sqrt() - 2.25 * r).atan()
}

/// Optimal Heisenberg exchange time `(1/π)·arctan(1/(ζs))`.
pub fn analytic_alpha_max(zeta: f64, s: f64) -> f64 {
    (1.0 / (zeta * s)).atan() / PI
}

/// Optimal Ising phase `(1/2)·arctan(4/(ζs))`.
pub fn analytic_beta_max(zeta: f64, s: f64) -> f64 {
    0.5 * (4.0 / (zeta * s)).atan()
}

/// MUB quorum with `U₄`, `U₅` entanglers `α = (a41, 0, a43)`, `(a51, 0, a53)`.
pub fn heisenberg_family(alphas: [f64; 4]) -> QuorumParams {
    let mut ms = *standard_mub_params(Interaction::Heisenberg).measurements();
    ms[3].entangler = Entangler::Heisenberg(HeisenbergTimes::new(alphas[0], 0.0, alphas[1]));
    ms[4].entangler = Entangler::Heisenberg(HeisenbergTimes::new(alphas[2], 0.0, alphas[3]));
    QuorumParams::new(Interaction::Heisenberg, ms).expect("finite parameters")
}

/// MUB quorum with `U₄`, `U₅` entanglers `β = (0, b4, 0)`, `(0, b5, 0)`.
pub fn ising_family(b4: f64, b5: f64) -> QuorumParams {
    let mut ms = *standard_mub_params(Interaction::Ising).measurements();
    ms[3].entangler = Entangler::Ising(CanonicalParams::new(0.0, b4, 0.0));
    ms[4].entangler = Entangler::Ising(CanonicalParams::new(0.0, b5, 0.0));
    QuorumParams::new(Interaction::Ising, ms).expect("finite parameters")
}

/// Closed-form depolarized `Q_N` of [`heisenberg_family`].
pub fn heisenberg_family_quality(alphas: [f64; 4], zeta: f64, s: f64) -> f64 {
    let [a41, a43, a51, a53] = alphas;
    (a41 * PI).sin() * (a43 * PI).sin() / 32.0
        * ((a51 - a53) * PI / 2.0).cos().powi(4)
        * ((a51 + a53) * PI / 2.0).sin().powi(2)
        * (-zeta * s * PI * (a41 + a43 + a51 + a53)).exp()
}

/// Closed-form depolarized `Q_N` of [`ising_family`].
pub fn ising_family_quality(b4: f64, b5: f64, zeta: f64, s: f64) -> f64 {
    (2.0 * b4).sin().powi(2) * (2.0 * b5).sin().powi(2) / 32.0 * (-zeta * s * (b4.abs() + b5.abs())).exp()
}
