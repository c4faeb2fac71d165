//! Noise on the entangling gate and the resulting measurement POVMs.
//!
//! Single-qubit gates are ideal; the channel acts once per measurement at the
//! position of the two-qubit gate. Three channel families are supported:
//!
//! * depolarizing, `ρ ↦ q(ρ − 1/4) + 1/4` with `q = exp(−ζπT)` for normalized
//!   entangling time `T`;
//! * over/under-rotation of the Heisenberg pulses, which dephases coherences in
//!   the sorted Bell basis with `γ_k = exp(−rα_kπ)`;
//! * over/under-rotation of the Ising pulses, dephasing in the Bell basis with
//!   `γ_k = exp(−2r|β_k|)`.
//!
//! The three Heisenberg activations are treated as independent, so their
//! dephasing factors multiply.
//!
//! All three channels are unital with Hermitian Kraus operators, so each is its
//! own adjoint; the effective POVM element for outcome `k` is
//! `F_k = W† 𝓔(pre†|k⟩⟨k|pre) W` with `W = U_tq·post`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gates::{
    bell_basis, entangling_time, measurement_layers, sorted_bell_basis, CanonicalParams, Entangler, HeisenbergTimes,
    Interaction, MeasurementParams,
};
use crate::quantum::{
    hermitian_deviation, hermitian_eigen, identity, max_abs_diff, paulis, trace_product, CMat, DensityMatrix,
    Projector, TracelessVector, UnitaryMatrix, C64, STATE_TOL,
};

/// Extracted scale factors at or below this value mark a degenerate POVM.
pub const DEGENERATE_Q: f64 = 1e-12;
/// Tolerance used when checking whether a nominal effect is a projector.
pub const PROJECTOR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "depolarizing")]
    Depolarizing,
    #[serde(rename = "ou")]
    OverUnderRotation,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Depolarizing => "depolarizing",
            Channel::OverUnderRotation => "ou",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depolarizing" => Ok(Self::Depolarizing),
            "ou" => Ok(Self::OverUnderRotation),
            other => Err(invalid("channel", format!("unknown value {other:?}"))),
        }
    }
}

/// Channel family, interaction and strength (`ζ` or `r`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub channel: Channel,
    pub interaction: Interaction,
    pub strength: f64,
}

impl NoiseModel {
    pub fn new(channel: Channel, interaction: Interaction, strength: f64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::OutOfRange {
                name: "noise strength",
                value: strength,
            });
        }
        Ok(Self {
            channel,
            interaction,
            strength,
        })
    }

    pub fn noiseless(interaction: Interaction) -> Self {
        Self {
            channel: Channel::Depolarizing,
            interaction,
            strength: 0.0,
        }
    }

    /// The channel this model induces on a given entangler.
    pub fn gate_noise(&self, entangler: &Entangler) -> Result<GateNoise> {
        if entangler.interaction() != self.interaction {
            return Err(invalid(
                "noise model",
                format!(
                    "{} noise applied to a {} entangler",
                    self.interaction,
                    entangler.interaction()
                ),
            ));
        }
        let noise = match (self.channel, entangler) {
            (Channel::Depolarizing, e) => {
                let t = entangling_time_of(e);
                GateNoise::Depolarizing {
                    q: depolarizing_q(self.strength, t),
                }
            }
            (Channel::OverUnderRotation, Entangler::Heisenberg(a)) => GateNoise::OuHeisenberg {
                gammas: ou_gammas_heisenberg(self.strength, a),
            },
            (Channel::OverUnderRotation, Entangler::Ising(b)) => GateNoise::OuIsing {
                gammas: ou_gammas_ising(self.strength, b),
            },
        };
        Ok(noise)
    }
}

fn entangling_time_of(e: &Entangler) -> f64 {
    let interaction = e.interaction();
    let mut m = MeasurementParams::identity(interaction);
    m.entangler = *e;
    entangling_time(&m)
}

/// Survival factor `exp(−ζπT)` of the depolarizing channel.
pub fn depolarizing_q(zeta: f64, t: f64) -> f64 {
    (-zeta * PI * t).exp()
}

/// `q(ρ − 1/d) + 1/d`.
pub fn apply_depolarizing(rho: &DensityMatrix, q: f64) -> Result<DensityMatrix> {
    check_q(q)?;
    DensityMatrix::new(depolarize(rho.matrix(), q))
}

fn check_q(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name: "q", value: q })
    }
}

fn depolarize(x: &CMat, q: f64) -> CMat {
    let d = x.nrows();
    let tr = x.trace();
    x.scale(q) + identity(d) * (tr * ((1.0 - q) / d as f64))
}

/// `γ_k = exp(−rα_kπ)` with the times of [`HeisenbergTimes::effective`].
pub fn ou_gammas_heisenberg(r: f64, a: &HeisenbergTimes) -> [f64; 3] {
    a.effective().as_array().map(|x| (-r * x * PI).exp())
}

/// `γ_k = exp(−2r|β_k|)`.
pub fn ou_gammas_ising(r: f64, b: &CanonicalParams) -> [f64; 3] {
    b.as_array().map(|x| (-2.0 * r * x.abs()).exp())
}

fn heisenberg_mask(g: &[f64; 3]) -> [[f64; 4]; 4] {
    let f = [1.0, g[0], g[1], g[2]];
    let mut m = [[1.0; 4]; 4];
    for (k, row) in m.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            if k != l {
                *v = f[k] * f[l];
            }
        }
    }
    m
}

fn ising_mask(g: &[f64; 3]) -> [[f64; 4]; 4] {
    let [gx, gy, gz] = *g;
    let (a, b, c) = (gy * gz, gx * gy, gx * gz);
    [[1.0, a, b, c], [a, 1.0, c, b], [b, c, 1.0, a], [c, b, a, 1.0]]
}

fn dephase_in(frame: &CMat, mask: &[[f64; 4]; 4], x: &CMat) -> CMat {
    let mut y = frame.adjoint() * x * frame;
    for (k, row) in mask.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            y[(k, l)] *= *v;
        }
    }
    frame * y * frame.adjoint()
}

fn check_gammas(g: &[f64; 3]) -> Result<()> {
    for &v in g {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: v,
            });
        }
    }
    Ok(())
}

/// Over/under-rotation map of the Heisenberg gate.
pub fn apply_ou_heisenberg(rho: &DensityMatrix, gammas: &[f64; 3]) -> Result<DensityMatrix> {
    check_gammas(gammas)?;
    DensityMatrix::new(dephase_in(&sorted_bell_basis(), &heisenberg_mask(gammas), rho.matrix()))
}

/// Over/under-rotation map of the Ising gate.
pub fn apply_ou_ising(rho: &DensityMatrix, gammas: &[f64; 3]) -> Result<DensityMatrix> {
    check_gammas(gammas)?;
    DensityMatrix::new(dephase_in(&bell_basis(), &ising_mask(gammas), rho.matrix()))
}

/// Noise channel attached to one two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateNoise {
    Depolarizing { q: f64 },
    OuHeisenberg { gammas: [f64; 3] },
    OuIsing { gammas: [f64; 3] },
}

impl GateNoise {
    /// Applies the channel (equivalently its adjoint) to any 4×4 operator.
    pub fn apply(&self, x: &CMat) -> CMat {
        match self {
            Self::Depolarizing { q } => depolarize(x, *q),
            Self::OuHeisenberg { gammas } => dephase_in(&sorted_bell_basis(), &heisenberg_mask(gammas), x),
            Self::OuIsing { gammas } => dephase_in(&bell_basis(), &ising_mask(gammas), x),
        }
    }

    pub fn kraus(&self) -> Result<KrausSet> {
        match self {
            Self::Depolarizing { q } => kraus_depolarizing(*q),
            Self::OuHeisenberg { gammas } => kraus_ou_heisenberg(gammas),
            Self::OuIsing { gammas } => kraus_ou_ising(gammas),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Self::Depolarizing { q } => *q == 1.0,
            Self::OuHeisenberg { gammas } | Self::OuIsing { gammas } => gammas.iter().all(|g| *g == 1.0),
        }
    }
}

/// Kraus operators `{M_k}` with `Σ M_k†M_k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<CMat>,
}

impl KrausSet {
    pub fn new(operators: Vec<CMat>) -> Result<Self> {
        let set = Self { operators };
        let dev = set.completeness_deviation();
        if !(dev <= STATE_TOL) {
            return Err(Error::IncompleteKraus(dev));
        }
        Ok(set)
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators.first().map_or(0, |m| m.nrows())
    }

    pub fn completeness_deviation(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMat::zeros(d, d);
        for m in &self.operators {
            sum += m.adjoint() * m;
        }
        max_abs_diff(&sum, &identity(d))
    }

    /// `Σ M X M†`.
    pub fn apply_matrix(&self, x: &CMat) -> CMat {
        let d = x.nrows();
        let mut out = CMat::zeros(d, d);
        for m in &self.operators {
            out += m * x * m.adjoint();
        }
        out
    }

    /// `Σ M† X M`, the Heisenberg-picture channel.
    pub fn adjoint_apply(&self, x: &CMat) -> CMat {
        let d = x.nrows();
        let mut out = CMat::zeros(d, d);
        for m in &self.operators {
            out += m.adjoint() * x * m;
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), self.dim()));
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }
}

/// Sixteen Pauli-product Kraus operators of the two-qubit depolarizing
/// channel.
pub fn kraus_depolarizing(q: f64) -> Result<KrausSet> {
    check_q(q)?;
    let p = paulis();
    let mut ops = Vec::with_capacity(16);
    for k in 0..4 {
        for l in 0..4 {
            let w = if k == 0 && l == 0 {
                (15.0 * q + 1.0).sqrt() / 4.0
            } else {
                (1.0 - q).sqrt() / 4.0
            };
            ops.push(p[k].kronecker(&p[l]).scale(w));
        }
    }
    KrausSet::new(ops)
}

fn diagonal_kraus(frame: &CMat, weight: f64, signs: [f64; 4]) -> CMat {
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        signs.iter().map(|s| C64::new(*s, 0.0)),
    ));
    frame * d * frame.adjoint() * C64::new(weight.max(0.0).sqrt(), 0.0)
}

fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Eight diagonal (sorted Bell basis) Kraus operators of the Heisenberg
/// over/under-rotation map.
pub fn kraus_ou_heisenberg(gammas: &[f64; 3]) -> Result<KrausSet> {
    check_gammas(gammas)?;
    let frame = sorted_bell_basis();
    let [g1, g2, g3] = *gammas;
    let mut ops = Vec::with_capacity(8);
    for m in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                let (sm, sk, sl) = (sign(m), sign(k), sign(l));
                let w = (1.0 + sm * g1) * (1.0 + sk * g2) * (1.0 + sl * g3) / 8.0;
                ops.push(diagonal_kraus(&frame, w, [1.0, sm, sk, sl]));
            }
        }
    }
    KrausSet::new(ops)
}

/// Four diagonal (Bell basis) Kraus operators of the Ising
/// over/under-rotation map.
pub fn kraus_ou_ising(gammas: &[f64; 3]) -> Result<KrausSet> {
    check_gammas(gammas)?;
    let frame = bell_basis();
    let [gx, gy, gz] = *gammas;
    let mut ops = Vec::with_capacity(4);
    for k in 0..2 {
        for l in 0..2 {
            let (sk, sl) = (sign(k), sign(l));
            let w = (1.0 + sk * gy * gz + sl * gx * gy + sk * sl * gx * gz) / 4.0;
            ops.push(diagonal_kraus(&frame, w, [1.0, sk, sl, sk * sl]));
        }
    }
    KrausSet::new(ops)
}

/// Average gate fidelity `(Σ|Tr M_k|² + d)/(d² + d)` of the residual noise
/// channel.
pub fn average_gate_fidelity(ks: &KrausSet) -> Result<f64> {
    let dev = ks.completeness_deviation();
    if !(dev <= STATE_TOL) {
        return Err(Error::IncompleteKraus(dev));
    }
    let d = ks.dim() as f64;
    let s: f64 = ks.operators().iter().map(|m| m.trace().norm_sqr()).sum();
    Ok(((s + d) / (d * d + d)).clamp(0.0, 1.0))
}

/// CNOT-equivalent entangler: `α = (½, 0, ½)` or `β_z = π/4`.
pub fn cnot_entangler(interaction: Interaction) -> Entangler {
    match interaction {
        Interaction::Heisenberg => Entangler::Heisenberg(HeisenbergTimes::new(0.5, 0.0, 0.5)),
        Interaction::Ising => Entangler::Ising(CanonicalParams::new(0.0, 0.0, FRAC_PI_4)),
    }
}

/// Average gate fidelity of a CNOT-equivalent gate under `noise`.
pub fn cnot_gate_fidelity(noise: &NoiseModel) -> Result<f64> {
    let gate = noise.gate_noise(&cnot_entangler(noise.interaction))?;
    average_gate_fidelity(&gate.kraus()?)
}

/// Four effects `F_k` of a (possibly noisy) basis measurement together with
/// the decomposition `F_k = q_k(P′_k − 1/4) + 1/4`.
///
/// `P′_k` has the trace and traceless norm of a rank-1 projector. It is an
/// exact projector for ideal and depolarized measurements; under
/// over/under-rotation it is in general only Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<CMat>,
    qs: Vec<f64>,
    nominal: Vec<CMat>,
}

impl Povm {
    /// Validates `ΣF = 1`, Hermiticity and positivity, then extracts
    /// `q_k = √(4/3 Tr[(F_k − 1/4)²])` and `P′_k`.
    pub fn from_effects(effects: Vec<CMat>) -> Result<Self> {
        if effects.len() != 4 || effects.iter().any(|f| f.nrows() != 4 || f.ncols() != 4) {
            return Err(invalid("POVM", "expected four 4x4 effects"));
        }
        let mut sum = CMat::zeros(4, 4);
        for (k, f) in effects.iter().enumerate() {
            let herm = hermitian_deviation(f);
            if herm > STATE_TOL {
                return Err(invalid("POVM", format!("effect {k} not Hermitian ({herm:.3e})")));
            }
            let (vals, _) = hermitian_eigen(f);
            if vals[0] < -STATE_TOL {
                return Err(invalid("POVM", format!("effect {k} has eigenvalue {:.3e}", vals[0])));
            }
            sum += f;
        }
        let dev = max_abs_diff(&sum, &identity(4));
        if dev > STATE_TOL {
            return Err(invalid("POVM", format!("effects sum to 1 only within {dev:.3e}")));
        }
        Self::decompose(effects)
    }

    fn decompose(effects: Vec<CMat>) -> Result<Self> {
        let quarter = identity(4).scale(0.25);
        let mut qs = Vec::with_capacity(4);
        let mut nominal = Vec::with_capacity(4);
        for (k, f) in effects.iter().enumerate() {
            let t = f - &quarter;
            let q = (4.0 / 3.0 * trace_product(&t, &t).re).max(0.0).sqrt();
            if q <= DEGENERATE_Q {
                return Err(Error::DegeneratePovm { effect: k, q });
            }
            qs.push(q.min(1.0));
            nominal.push(t.unscale(q) + &quarter);
        }
        Ok(Self { effects, qs, nominal })
    }

    /// Noise-free measurement in the basis `U†|k⟩`.
    pub fn ideal(u: &UnitaryMatrix) -> Self {
        let effects = u.basis_projectors().into_iter().map(|p| p.matrix().clone()).collect();
        Self::decompose(effects).expect("rank-1 projectors are never degenerate")
    }

    pub fn effects(&self) -> &[CMat] {
        &self.effects
    }

    pub fn qs(&self) -> &[f64] {
        &self.qs
    }

    /// The operators `P′_k`.
    pub fn nominal_effects(&self) -> &[CMat] {
        &self.nominal
    }

    /// `P′_k` as validated projectors, when they are projectors within
    /// [`PROJECTOR_TOL`].
    pub fn nominal_projectors(&self) -> Result<Vec<Projector>> {
        self.nominal
            .iter()
            .map(|p| Projector::with_tolerance(p.clone(), PROJECTOR_TOL))
            .collect()
    }

    /// Traceless part of `P′_k`.
    pub fn nominal_traceless(&self, k: usize) -> TracelessVector {
        TracelessVector::from_hermitian_unchecked(&self.nominal[k])
    }

    /// Outcome probabilities `Tr(F_k ρ)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.effects.iter().map(|f| trace_product(f, rho.matrix()).re).collect()
    }
}

/// Effective POVM of a measurement whose entangling gate suffers `noise`.
pub fn effective_povm(m: &MeasurementParams, noise: &NoiseModel) -> Result<Povm> {
    let gate = noise.gate_noise(&m.entangler)?;
    let (pre, w) = measurement_layers(m);
    let effects = (0..4)
        .map(|k| {
            let row = pre.row(k);
            let x = row.adjoint() * row;
            let x = if gate.is_identity() { x } else { gate.apply(&x) };
            let f = w.adjoint() * x * &w;
            (&f + f.adjoint()).scale(0.5)
        })
        .collect();
    Povm::decompose(effects)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{measurement_unitary, standard_mub_params, SingleQubitParams};
    use crate::par::substream;
    use crate::quantum::random_density;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_gammas<R: Rng>(rng: &mut R) -> [f64; 3] {
        [0; 3].map(|_| rng.random_range(0.05..1.0))
    }

    #[test]
    fn depolarizing_q_examples() {
        assert_eq!(depolarizing_q(0.3, 0.0), 1.0);
        assert_abs_diff_eq!(depolarizing_q(0.07, 1.0), (-0.07 * PI).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(depolarizing_q(0.07, 0.25), (-0.07 * PI / 4.0).exp(), epsilon = 1e-15);
    }

    #[test]
    fn apply_depolarizing_examples() {
        let rho = random_density(4, &mut substream(1, 0)).unwrap();
        let same = apply_depolarizing(&rho, 1.0).unwrap();
        assert!(max_abs_diff(same.matrix(), rho.matrix()) < 1e-15);
        let mixed = apply_depolarizing(&rho, 0.0).unwrap();
        assert!(max_abs_diff(mixed.matrix(), &identity(4).scale(0.25)) < 1e-15);
        assert!(apply_depolarizing(&rho, 1.2).is_err());

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[C64::new(s, 0.0), C64::default(), C64::default(), C64::new(s, 0.0)]).unwrap();
        let out = apply_depolarizing(&bell, 0.5).unwrap();
        let expected = (bell.matrix() + identity(4).scale(0.25)).scale(0.5);
        assert!(max_abs_diff(out.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn ou_gamma_examples() {
        assert_eq!(
            ou_gammas_heisenberg(0.0, &HeisenbergTimes::new(0.3, 1.0, 1.7)),
            [1.0; 3]
        );
        let g = ou_gammas_heisenberg(0.1, &HeisenbergTimes::new(0.5, 0.0, 0.5));
        assert_abs_diff_eq!(g[0], (-0.05 * PI).exp(), epsilon = 1e-15);
        assert_eq!(g[1], 1.0);
        assert_abs_diff_eq!(g[2], (-0.05 * PI).exp(), epsilon = 1e-15);
        let g = ou_gammas_heisenberg(0.3, &HeisenbergTimes::new(2.0, 0.0, 0.0));
        assert_abs_diff_eq!(g[0], (-0.6 * PI).exp(), epsilon = 1e-15);
        assert_eq!(&g[1..], &[1.0, 1.0]);
        let g = ou_gammas_heisenberg(0.3, &HeisenbergTimes::new(-0.5, 2.5, 0.0));
        assert_abs_diff_eq!(g[0], (-0.45 * PI).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], (-0.15 * PI).exp(), epsilon = 1e-15);

        assert_eq!(ou_gammas_ising(0.0, &CanonicalParams::new(0.2, 0.4, 0.9)), [1.0; 3]);
        let g = ou_gammas_ising(0.2, &CanonicalParams::new(0.0, 0.0, FRAC_PI_4));
        assert_eq!(&g[..2], &[1.0, 1.0]);
        assert_abs_diff_eq!(g[2], (-0.1 * PI).exp(), epsilon = 1e-15);
    }

    #[test]
    fn heisenberg_and_ising_cnot_channels_coincide_on_same_gate() {
        // SWAP^{1/2}-type α = (0, 0, 1) and Ising β = (π/4, π/4, π/4)·... differ in
        // general; the common special case is the identity gate.
        let h = GateNoise::OuHeisenberg {
            gammas: ou_gammas_heisenberg(0.4, &HeisenbergTimes::default()),
        };
        let i = GateNoise::OuIsing {
            gammas: ou_gammas_ising(0.4, &CanonicalParams::default()),
        };
        let rho = random_density(4, &mut substream(5, 0)).unwrap();
        assert!(max_abs_diff(&h.apply(rho.matrix()), &i.apply(rho.matrix())) < 1e-15);
    }

    #[test]
    fn identity_maps() {
        let rho = random_density(4, &mut substream(2, 0)).unwrap();
        let a = apply_ou_heisenberg(&rho, &[1.0; 3]).unwrap();
        let b = apply_ou_ising(&rho, &[1.0; 3]).unwrap();
        assert!(max_abs_diff(a.matrix(), rho.matrix()) < 1e-14);
        assert!(max_abs_diff(b.matrix(), rho.matrix()) < 1e-14);
    }

    #[test]
    fn maps_agree_with_kraus_and_keep_bell_diagonal() {
        let mut rng = substream(3, 0);
        for _ in 0..100 {
            let rho = random_density(4, &mut rng).unwrap();
            let g = random_gammas(&mut rng);
            let q: f64 = rng.random_range(0.0..1.0);

            let map = apply_ou_heisenberg(&rho, &g).unwrap();
            let kraus = kraus_ou_heisenberg(&g).unwrap().apply(&rho).unwrap();
            assert!(max_abs_diff(map.matrix(), kraus.matrix()) < 1e-12);
            let f = sorted_bell_basis();
            let (before, after) = (f.adjoint() * rho.matrix() * &f, f.adjoint() * map.matrix() * &f);
            for k in 0..4 {
                assert!((before[(k, k)] - after[(k, k)]).norm() < 1e-12);
            }

            let map = apply_ou_ising(&rho, &g).unwrap();
            let kraus = kraus_ou_ising(&g).unwrap().apply(&rho).unwrap();
            assert!(max_abs_diff(map.matrix(), kraus.matrix()) < 1e-12);
            let f = bell_basis();
            let (before, after) = (f.adjoint() * rho.matrix() * &f, f.adjoint() * map.matrix() * &f);
            for k in 0..4 {
                assert!((before[(k, k)] - after[(k, k)]).norm() < 1e-12);
            }

            let map = apply_depolarizing(&rho, q).unwrap();
            let kraus = kraus_depolarizing(q).unwrap().apply(&rho).unwrap();
            assert!(max_abs_diff(map.matrix(), kraus.matrix()) < 1e-12);
        }
    }

    #[test]
    fn kraus_edge_cases() {
        let k = kraus_depolarizing(1.0).unwrap();
        assert!(max_abs_diff(&k.operators()[0], &identity(4)) < 1e-15);
        assert!(k.operators()[1..].iter().all(|m| m.iter().all(|z| z.norm() == 0.0)));
        assert!(kraus_depolarizing(0.7).unwrap().completeness_deviation() < 1e-12);

        let k = kraus_ou_heisenberg(&[1.0; 3]).unwrap();
        assert!(max_abs_diff(&k.operators()[0], &identity(4)) < 1e-14);
        assert!(k.operators()[1..].iter().all(|m| m.iter().all(|z| z.norm() < 1e-15)));

        let k = kraus_ou_ising(&[1.0; 3]).unwrap();
        assert_eq!(k.operators().len(), 4);
        assert!(max_abs_diff(&k.operators()[0], &identity(4)) < 1e-14);

        assert!(matches!(
            KrausSet::new(vec![identity(4).scale(0.5)]),
            Err(Error::IncompleteKraus(_))
        ));
        assert!(kraus_ou_ising(&[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn gate_fidelity_examples() {
        let id = KrausSet::new(vec![identity(4)]).unwrap();
        assert_abs_diff_eq!(average_gate_fidelity(&id).unwrap(), 1.0, epsilon = 1e-15);
        for q in [0.0, 0.3, 0.9] {
            let f = average_gate_fidelity(&kraus_depolarizing(q).unwrap()).unwrap();
            assert_abs_diff_eq!(f, (1.0 + 3.0 * q) / 4.0, epsilon = 1e-14);
        }
        let noise = NoiseModel::new(Channel::OverUnderRotation, Interaction::Heisenberg, 0.2).unwrap();
        let f = cnot_gate_fidelity(&noise).unwrap();
        let closed = 0.5 + 0.4 * (-0.1 * PI).exp() + 0.1 * (-0.2 * PI).exp();
        assert_abs_diff_eq!(f, closed, epsilon = 1e-12);
        assert!((f - 0.85).abs() < 0.005);
    }

    #[test]
    fn zero_entangling_time_gives_ideal_effects() {
        for channel in [Channel::Depolarizing, Channel::OverUnderRotation] {
            for interaction in [Interaction::Heisenberg, Interaction::Ising] {
                let noise = NoiseModel::new(channel, interaction, 0.3).unwrap();
                let m = MeasurementParams::local(
                    interaction,
                    SingleQubitParams::new(0.3, 0.1, -0.4),
                    SingleQubitParams::new(1.1, 0.7, 0.2),
                );
                let povm = effective_povm(&m, &noise).unwrap();
                let ideal = Povm::ideal(&measurement_unitary(&m));
                for k in 0..4 {
                    assert_abs_diff_eq!(povm.qs()[k], 1.0, epsilon = 1e-12);
                    assert!(max_abs_diff(&povm.effects()[k], &ideal.effects()[k]) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn depolarized_mub_measurement() {
        let mub = standard_mub_params(Interaction::Heisenberg);
        let noise = NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, 0.05).unwrap();
        let povm = effective_povm(&mub.measurements()[3], &noise).unwrap();
        for q in povm.qs() {
            assert_abs_diff_eq!(*q, (-0.05 * PI).exp(), epsilon = 1e-12);
        }
        let projectors = povm.nominal_projectors().unwrap();
        assert!(projectors.iter().all(|p| p.rank() == 1));
    }

    #[test]
    fn effects_via_kraus_conjugation_agree() {
        let mub = standard_mub_params(Interaction::Heisenberg);
        let m = mub.measurements()[3];
        let noise = NoiseModel::new(Channel::OverUnderRotation, Interaction::Heisenberg, 0.1).unwrap();
        let povm = effective_povm(&m, &noise).unwrap();

        let kraus = noise.gate_noise(&m.entangler).unwrap().kraus().unwrap();
        let (pre, w) = measurement_layers(&m);
        for k in 0..4 {
            let row = pre.row(k);
            let f = w.adjoint() * kraus.adjoint_apply(&(row.adjoint() * row)) * &w;
            assert!(max_abs_diff(&f, &povm.effects()[k]) < 1e-12);
        }
    }

    #[test]
    fn ou_noise_acts_unevenly_on_a_basis() {
        // Standard-basis readout after a bare SWAP^{1/2}-type pulse: |00⟩ and |11⟩
        // are untouched by the exchange, |01⟩ and |10⟩ are not.
        let mut m = MeasurementParams::identity(Interaction::Heisenberg);
        m.entangler = Entangler::Heisenberg(HeisenbergTimes::new(0.0, 0.0, 0.5));
        let noise = NoiseModel::new(Channel::OverUnderRotation, Interaction::Heisenberg, 0.2).unwrap();
        let povm = effective_povm(&m, &noise).unwrap();
        let max = povm.qs().iter().cloned().fold(f64::MIN, f64::max);
        let min = povm.qs().iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min > 1e-3, "{:?}", povm.qs());
    }

    #[test]
    fn noisy_nominal_effects_are_not_projectors_in_general() {
        let mub = standard_mub_params(Interaction::Heisenberg);
        let noise = NoiseModel::new(Channel::OverUnderRotation, Interaction::Heisenberg, 0.1).unwrap();
        let povm = effective_povm(&mub.measurements()[3], &noise).unwrap();
        assert!(povm.nominal_projectors().is_err());
        for k in 0..4 {
            assert_abs_diff_eq!(povm.nominal_effects()[k].trace().re, 1.0, epsilon = 1e-12);
            let v = povm.nominal_traceless(k);
            assert_abs_diff_eq!(v.dot(&v), 0.75, epsilon = 1e-12);
        }
    }

    #[test]
    fn povm_validation() {
        let bad = vec![identity(4).scale(0.3); 4];
        assert!(Povm::from_effects(bad).is_err());
        let degenerate = vec![identity(4).scale(0.25); 4];
        assert!(matches!(
            Povm::from_effects(degenerate),
            Err(Error::DegeneratePovm { effect: 0, .. })
        ));
    }

    #[test]
    fn mismatched_interaction_is_rejected() {
        let m = standard_mub_params(Interaction::Ising).measurements()[3];
        let noise = NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, 0.1).unwrap();
        assert!(effective_povm(&m, &noise).is_err());
        assert!(NoiseModel::new(Channel::Depolarizing, Interaction::Heisenberg, -0.1).is_err());
    }

    #[test]
    fn noise_model_json() {
        let n = NoiseModel::new(Channel::OverUnderRotation, Interaction::Ising, 0.25).unwrap();
        let s = serde_json::to_string(&n).unwrap();
        assert_eq!(s, r#"{"channel":"ou","interaction":"ising","strength":0.25}"#);
        assert_eq!(serde_json::from_str::<NoiseModel>(&s).unwrap(), n);
    }
}
