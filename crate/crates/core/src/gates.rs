//! Parametrized measurement circuits.
//!
//! A measurement applies `U = (pre₁⊗pre₂)·U_tq·(post₁⊗post₂)` to the state and
//! then reads out the standard basis, so its projectors are `U†|k⟩⟨k|U`. The
//! two-qubit factor `U_tq` is realized either by three Heisenberg exchange
//! pulses (`SWAP^α` with interleaved Pauli flips) or by three conjugated Ising
//! `ZZ` evolutions; both reproduce the canonical gate `exp(−i Σ β_a σ_a⊗σ_a)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{identity, paulis, CMat, UnitaryMatrix, C64, I};

/// Number of measurements in a non-degenerate two-qubit quorum.
pub const QUORUM_SIZE: usize = 5;
/// Real parameters per measurement.
pub const PARAMS_PER_MEASUREMENT: usize = 15;
/// Real parameters per quorum.
pub const QUORUM_PARAMS: usize = QUORUM_SIZE * PARAMS_PER_MEASUREMENT;

/// Angles `(φ, ψ, χ)` of a local gate
/// `[[cosφ e^{iψ}, sinφ e^{iχ}], [−sinφ e^{−iχ}, cosφ e^{−iψ}]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct SingleQubitParams {
    pub phi: f64,
    pub psi: f64,
    pub chi: f64,
}

impl SingleQubitParams {
    pub const fn new(phi: f64, psi: f64, chi: f64) -> Self {
        Self { phi, psi, chi }
    }
}

impl From<[f64; 3]> for SingleQubitParams {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<SingleQubitParams> for [f64; 3] {
    fn from(p: SingleQubitParams) -> Self {
        [p.phi, p.psi, p.chi]
    }
}

/// Coefficients of `H_p = Σ_a β_a σ_a⊗σ_a`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub beta_x: f64,
    pub beta_y: f64,
    pub beta_z: f64,
}

impl CanonicalParams {
    pub const fn new(beta_x: f64, beta_y: f64, beta_z: f64) -> Self {
        Self { beta_x, beta_y, beta_z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.beta_x, self.beta_y, self.beta_z]
    }
}

/// Normalized exchange times (unit `π/λ_H`) of the three `SWAP^α` pulses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergTimes {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl HeisenbergTimes {
    pub const fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Self {
        Self { alpha1, alpha2, alpha3 }
    }

    /// Times reduced mod 2, the period of `SWAP^α`.
    pub fn canonical(&self) -> Self {
        let m = |a: f64| a.rem_euclid(2.0);
        Self::new(m(self.alpha1), m(self.alpha2), m(self.alpha3))
    }

    /// Times entering the noise exponent: values in `[0, 2]` unchanged, all
    /// others reduced mod 2.
    pub fn effective(&self) -> Self {
        let m = |a: f64| if (0.0..=2.0).contains(&a) { a } else { a.rem_euclid(2.0) };
        Self::new(m(self.alpha1), m(self.alpha2), m(self.alpha3))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha1, self.alpha2, self.alpha3]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    Heisenberg,
    Ising,
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interaction::Heisenberg => "heisenberg",
            Interaction::Ising => "ising",
        })
    }
}

impl FromStr for Interaction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" => Ok(Self::Heisenberg),
            "ising" => Ok(Self::Ising),
            other => Err(invalid("interaction", format!("unknown value {other:?}"))),
        }
    }
}

/// The two-qubit factor of a measurement, tagged by the interaction that
/// realizes it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entangler {
    Heisenberg(HeisenbergTimes),
    Ising(CanonicalParams),
}

impl Entangler {
    pub fn zero(interaction: Interaction) -> Self {
        Self::from_array(interaction, [0.0; 3])
    }

    pub fn from_array(interaction: Interaction, a: [f64; 3]) -> Self {
        match interaction {
            Interaction::Heisenberg => Self::Heisenberg(HeisenbergTimes::new(a[0], a[1], a[2])),
            Interaction::Ising => Self::Ising(CanonicalParams::new(a[0], a[1], a[2])),
        }
    }

    pub fn interaction(&self) -> Interaction {
        match self {
            Self::Heisenberg(_) => Interaction::Heisenberg,
            Self::Ising(_) => Interaction::Ising,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        match self {
            Self::Heisenberg(a) => a.as_array(),
            Self::Ising(b) => b.as_array(),
        }
    }

    pub fn unitary(&self) -> UnitaryMatrix {
        match self {
            Self::Heisenberg(a) => heisenberg_two_qubit(a),
            Self::Ising(b) => ising_two_qubit(b),
        }
    }
}

/// Parameters of one measurement: local layers around a two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementParams {
    pub pre1: SingleQubitParams,
    pub pre2: SingleQubitParams,
    pub entangler: Entangler,
    pub post1: SingleQubitParams,
    pub post2: SingleQubitParams,
}

impl MeasurementParams {
    pub fn identity(interaction: Interaction) -> Self {
        Self::local(interaction, SingleQubitParams::default(), SingleQubitParams::default())
    }

    /// A product-basis measurement with the entangler switched off.
    pub fn local(interaction: Interaction, q1: SingleQubitParams, q2: SingleQubitParams) -> Self {
        Self {
            pre1: q1,
            pre2: q2,
            entangler: Entangler::zero(interaction),
            post1: SingleQubitParams::default(),
            post2: SingleQubitParams::default(),
        }
    }

    /// Layout: `pre1, pre2, entangler, post1, post2`, three reals each.
    pub fn to_array(&self) -> [f64; PARAMS_PER_MEASUREMENT] {
        let mut out = [0.0; PARAMS_PER_MEASUREMENT];
        let parts: [[f64; 3]; 5] = [
            self.pre1.into(),
            self.pre2.into(),
            self.entangler.as_array(),
            self.post1.into(),
            self.post2.into(),
        ];
        for (chunk, part) in out.chunks_mut(3).zip(parts) {
            chunk.copy_from_slice(&part);
        }
        out
    }

    pub fn from_slice(interaction: Interaction, x: &[f64]) -> Result<Self> {
        if x.len() != PARAMS_PER_MEASUREMENT {
            return Err(Error::DimensionMismatch(x.len(), PARAMS_PER_MEASUREMENT));
        }
        let t = |i: usize| [x[3 * i], x[3 * i + 1], x[3 * i + 2]];
        Ok(Self {
            pre1: t(0).into(),
            pre2: t(1).into(),
            entangler: Entangler::from_array(interaction, t(2)),
            post1: t(3).into(),
            post2: t(4).into(),
        })
    }
}

/// Five measurements forming a quorum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuorumDoc", into = "QuorumDoc")]
pub struct QuorumParams {
    interaction: Interaction,
    measurements: [MeasurementParams; QUORUM_SIZE],
}

impl QuorumParams {
    pub fn new(interaction: Interaction, measurements: [MeasurementParams; QUORUM_SIZE]) -> Result<Self> {
        for (j, m) in measurements.iter().enumerate() {
            if m.entangler.interaction() != interaction {
                return Err(invalid(
                    "quorum",
                    format!("measurement {j} uses a {} entangler", m.entangler.interaction()),
                ));
            }
            if m.to_array().iter().any(|v| !v.is_finite()) {
                return Err(invalid("quorum", format!("measurement {j} has a non-finite parameter")));
            }
        }
        Ok(Self {
            interaction,
            measurements,
        })
    }

    pub fn interaction(&self) -> Interaction {
        self.interaction
    }

    pub fn measurements(&self) -> &[MeasurementParams; QUORUM_SIZE] {
        &self.measurements
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.measurements.iter().flat_map(|m| m.to_array()).collect()
    }

    pub fn from_vector(interaction: Interaction, x: &[f64]) -> Result<Self> {
        if x.len() != QUORUM_PARAMS {
            return Err(Error::DimensionMismatch(x.len(), QUORUM_PARAMS));
        }
        let mut ms = [MeasurementParams::identity(interaction); QUORUM_SIZE];
        for (m, chunk) in ms.iter_mut().zip(x.chunks(PARAMS_PER_MEASUREMENT)) {
            *m = MeasurementParams::from_slice(interaction, chunk)?;
        }
        Self::new(interaction, ms)
    }

    pub fn unitaries(&self) -> Vec<UnitaryMatrix> {
        self.measurements.iter().map(measurement_unitary).collect()
    }

    pub fn entangling_times(&self) -> [f64; QUORUM_SIZE] {
        self.measurements.map(|m| entangling_time(&m))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("quorum serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementDoc {
    pre1: [f64; 3],
    pre2: [f64; 3],
    entangler: [f64; 3],
    post1: [f64; 3],
    post2: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuorumDoc {
    interaction: Interaction,
    measurements: Vec<MeasurementDoc>,
}

impl TryFrom<QuorumDoc> for QuorumParams {
    type Error = Error;
    fn try_from(doc: QuorumDoc) -> Result<Self> {
        if doc.measurements.len() != QUORUM_SIZE {
            return Err(invalid(
                "quorum",
                format!("expected {QUORUM_SIZE} measurements, found {}", doc.measurements.len()),
            ));
        }
        let mut ms = [MeasurementParams::identity(doc.interaction); QUORUM_SIZE];
        for (m, d) in ms.iter_mut().zip(&doc.measurements) {
            *m = MeasurementParams {
                pre1: d.pre1.into(),
                pre2: d.pre2.into(),
                entangler: Entangler::from_array(doc.interaction, d.entangler),
                post1: d.post1.into(),
                post2: d.post2.into(),
            };
        }
        Self::new(doc.interaction, ms)
    }
}

impl From<QuorumParams> for QuorumDoc {
    fn from(q: QuorumParams) -> Self {
        QuorumDoc {
            interaction: q.interaction,
            measurements: q
                .measurements
                .iter()
                .map(|m| MeasurementDoc {
                    pre1: m.pre1.into(),
                    pre2: m.pre2.into(),
                    entangler: m.entangler.as_array(),
                    post1: m.post1.into(),
                    post2: m.post2.into(),
                })
                .collect(),
        }
    }
}

pub(crate) fn single_qubit_matrix(p: &SingleQubitParams) -> CMat {
    let (s, c) = p.phi.sin_cos();
    let e = |x: f64| C64::from_polar(1.0, x);
    CMat::from_row_slice(2, 2, &[e(p.psi) * c, e(p.chi) * s, -e(-p.chi) * s, e(-p.psi) * c])
}

pub fn single_qubit_gate(p: &SingleQubitParams) -> UnitaryMatrix {
    UnitaryMatrix::from_trusted(single_qubit_matrix(p))
}

fn bell_columns(order: [[f64; 4]; 4]) -> CMat {
    CMat::from_fn(4, 4, |i, j| C64::new(order[j][i] * FRAC_1_SQRT_2, 0.0))
}

const PHI_PLUS: [f64; 4] = [1.0, 0.0, 0.0, 1.0];
const PSI_PLUS: [f64; 4] = [0.0, 1.0, 1.0, 0.0];
const PHI_MINUS: [f64; 4] = [1.0, 0.0, 0.0, -1.0];
const PSI_MINUS: [f64; 4] = [0.0, 1.0, -1.0, 0.0];

/// Columns `|Φ+⟩, |Ψ+⟩, |Φ−⟩, |Ψ−⟩`: the eigenbasis of the canonical gate
/// and of the Ising dephasing map.
pub fn bell_basis() -> CMat {
    bell_columns([PHI_PLUS, PSI_PLUS, PHI_MINUS, PSI_MINUS])
}

/// Columns `|Ψ+⟩, |Φ+⟩, |Φ−⟩, |Ψ−⟩`: the order in which the Heisenberg
/// sequence is `diag(1, e^{iα₁π}, e^{iα₂π}, e^{iα₃π})`.
pub fn sorted_bell_basis() -> CMat {
    bell_columns([PSI_PLUS, PHI_PLUS, PHI_MINUS, PSI_MINUS])
}

/// Eigenphases `η` of `H_p` in [`bell_basis`] order.
pub fn canonical_eigenphases(b: &CanonicalParams) -> [f64; 4] {
    let (x, y, z) = (b.beta_x, b.beta_y, b.beta_z);
    [x - y + z, x + y - z, -x + y + z, -x - y - z]
}

fn diagonal_in(basis: &CMat, phases: impl Iterator<Item = C64>) -> CMat {
    let d = CMat::from_diagonal(&DVector::from_iterator(4, phases));
    basis * d * basis.adjoint()
}

/// `exp(−i Σ β_a σ_a⊗σ_a)`, assembled from its Bell-basis eigenphases.
pub fn canonical_two_qubit(b: &CanonicalParams) -> UnitaryMatrix {
    let eta = canonical_eigenphases(b);
    UnitaryMatrix::from_trusted(diagonal_in(
        &bell_basis(),
        eta.iter().map(|&e| C64::from_polar(1.0, -e)),
    ))
}

/// `SWAP^α = 1 − P + e^{iαπ} P` with `P` the singlet projector.
pub fn swap_power(alpha: f64) -> CMat {
    let v = DVector::from_iterator(4, PSI_MINUS.iter().map(|&x| C64::new(x * FRAC_1_SQRT_2, 0.0)));
    let p = &v * v.adjoint();
    identity(4) - &p + p * C64::from_polar(1.0, alpha * PI)
}

/// `σz⊗σx · SWAP^{α₁} · σz⊗1 · SWAP^{α₂} · 1⊗σx · SWAP^{α₃}`.
pub fn heisenberg_two_qubit(a: &HeisenbergTimes) -> UnitaryMatrix {
    let p = paulis();
    let zx = p[3].kronecker(&p[1]);
    let z1 = p[3].kronecker(&p[0]);
    let x2 = p[0].kronecker(&p[1]);
    let u = zx * swap_power(a.alpha1) * z1 * swap_power(a.alpha2) * x2 * swap_power(a.alpha3);
    UnitaryMatrix::from_trusted(u)
}

/// The Heisenberg gate from its diagonal form in [`sorted_bell_basis`].
pub fn heisenberg_diagonal(a: &HeisenbergTimes) -> UnitaryMatrix {
    let phases = [0.0, a.alpha1, a.alpha2, a.alpha3].map(|x| C64::from_polar(1.0, x * PI));
    UnitaryMatrix::from_trusted(diagonal_in(&sorted_bell_basis(), phases.into_iter()))
}

fn zz_evolution(beta: f64) -> CMat {
    let (m, p) = (C64::from_polar(1.0, -beta), C64::from_polar(1.0, beta));
    CMat::from_diagonal(&DVector::from_row_slice(&[m, p, p, m]))
}

/// Local rotation `exp(−iθσ/2)` for a Pauli matrix `σ`.
fn rotation(sigma: &CMat, theta: f64) -> CMat {
    let (s, c) = (theta / 2.0).sin_cos();
    identity(2).scale(c) - sigma * (I * s)
}

/// Product of three `ZZ` evolutions, conjugated so that they act as
/// `exp(−iβ_x σx⊗σx)`, `exp(−iβ_y σy⊗σy)` and `exp(−iβ_z σz⊗σz)`.
pub fn ising_two_qubit(b: &CanonicalParams) -> UnitaryMatrix {
    let p = paulis();
    let ux = rotation(&p[2], FRAC_PI_2);
    let uy = rotation(&p[1], -FRAC_PI_2);
    let uz = identity(2);
    let mut u = identity(4);
    for (local, beta) in [(ux, b.beta_x), (uy, b.beta_y), (uz, b.beta_z)] {
        let l = local.kronecker(&local);
        u *= l.adjoint() * zz_evolution(beta) * l;
    }
    UnitaryMatrix::from_trusted(u)
}

pub(crate) fn measurement_layers(m: &MeasurementParams) -> (CMat, CMat) {
    let pre = single_qubit_matrix(&m.pre1).kronecker(&single_qubit_matrix(&m.pre2));
    let post = single_qubit_matrix(&m.post1).kronecker(&single_qubit_matrix(&m.post2));
    let w = m.entangler.unitary().matrix() * post;
    (pre, w)
}

/// `U = (pre₁⊗pre₂)·U_tq·(post₁⊗post₂)`.
pub fn measurement_unitary(m: &MeasurementParams) -> UnitaryMatrix {
    let (pre, w) = measurement_layers(m);
    UnitaryMatrix::from_trusted(pre * w)
}

/// Normalized time the interaction is switched on: `Σα_k` (Heisenberg, see
/// [`HeisenbergTimes::effective`]) or `Σ|β_k|/π` (Ising).
pub fn entangling_time(m: &MeasurementParams) -> f64 {
    match m.entangler {
        Entangler::Heisenberg(a) => a.effective().as_array().iter().sum(),
        Entangler::Ising(b) => b.as_array().iter().map(|x| x.abs()).sum::<f64>() / PI,
    }
}

/// The standard MUB quorum, with the entangling gates of `U₄` and `U₅`
/// realized by `α = (½, 0, ½)` (Heisenberg) or `β_y = π/4` (Ising).
pub fn standard_mub_params(interaction: Interaction) -> QuorumParams {
    let sq = SingleQubitParams::new;
    let zero = SingleQubitParams::default();
    let cnot = match interaction {
        Interaction::Heisenberg => Entangler::Heisenberg(HeisenbergTimes::new(0.5, 0.0, 0.5)),
        Interaction::Ising => Entangler::Ising(CanonicalParams::new(0.0, FRAC_PI_4, 0.0)),
    };
    let ms = [
        MeasurementParams::identity(interaction),
        MeasurementParams::local(interaction, sq(FRAC_PI_4, 0.0, 0.0), sq(FRAC_PI_4, 0.0, 0.0)),
        MeasurementParams::local(
            interaction,
            sq(FRAC_PI_4, 0.0, FRAC_PI_2),
            sq(FRAC_PI_4, 0.0, FRAC_PI_2),
        ),
        MeasurementParams {
            pre1: sq(0.0, FRAC_PI_4, 0.0),
            pre2: sq(-FRAC_PI_2, 0.0, FRAC_PI_4),
            entangler: cnot,
            post1: zero,
            post2: sq(FRAC_PI_4, PI, -PI),
        },
        MeasurementParams {
            pre1: sq(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4),
            pre2: sq(0.0, FRAC_PI_4, 0.0),
            entangler: cnot,
            post1: zero,
            post2: zero,
        },
    ];
    QuorumParams::new(interaction, ms).expect("standard MUB parameters are valid")
}

/// Local basis changes for reading out σx, σy, σz.
fn pauli_readout(axis: usize) -> SingleQubitParams {
    match axis {
        0 => SingleQubitParams::new(FRAC_PI_4, 0.0, 0.0),
        1 => SingleQubitParams::new(FRAC_PI_4, 0.0, FRAC_PI_2),
        _ => SingleQubitParams::default(),
    }
}

/// Labels of [`nine_pauli_bases`], in the same order.
pub const PAULI_BASIS_LABELS: [&str; 9] = ["xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz"];

/// The nine product bases measuring every pair of Pauli observables.
pub fn nine_pauli_bases() -> Vec<UnitaryMatrix> {
    let mut out = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            let u = single_qubit_matrix(&pauli_readout(a)).kronecker(&single_qubit_matrix(&pauli_readout(b)));
            out.push(UnitaryMatrix::from_trusted(u));
        }
    }
    out
}

/// Gates equal up to a global phase, gauged by the largest entry of `a`.
pub fn equal_up_to_phase(a: &CMat, b: &CMat, tol: f64) -> bool {
    let (idx, _) = a
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("non-empty matrix");
    let (ai, bi) = (a.as_slice()[idx], b.as_slice()[idx]);
    if bi.norm() < 1e-12 {
        return false;
    }
    let phase = ai / bi;
    let phase = phase / phase.norm();
    a.iter().zip(b.iter()).all(|(x, y)| (x - y * phase).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::substream;
    use crate::quantum::max_abs_diff;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_angles<R: Rng>(rng: &mut R) -> [f64; 3] {
        [0; 3].map(|_| rng.random_range(-PI..PI))
    }

    /// `exp(−iH)` by scaling and squaring of a Taylor series; independent of
    /// the Bell-basis construction.
    fn expm_minus_i(h: &CMat) -> CMat {
        let s = 10;
        let a = h * (-I / f64::from(1 << s));
        let mut term = identity(4);
        let mut sum = identity(4);
        for k in 1..30 {
            term = &term * &a / C64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn hp(b: &CanonicalParams) -> CMat {
        let p = paulis();
        p[1].kronecker(&p[1]).scale(b.beta_x)
            + p[2].kronecker(&p[2]).scale(b.beta_y)
            + p[3].kronecker(&p[3]).scale(b.beta_z)
    }

    #[test]
    fn single_qubit_examples() {
        let u = single_qubit_gate(&SingleQubitParams::default());
        assert!(max_abs_diff(u.matrix(), &identity(2)) < 1e-15);
        let h = single_qubit_gate(&SingleQubitParams::new(FRAC_PI_4, 0.0, 0.0));
        assert!(max_abs_diff(&(h.matrix().adjoint() * h.matrix()), &identity(2)) < 1e-15);
        let s = FRAC_1_SQRT_2;
        let u3 = single_qubit_gate(&SingleQubitParams::new(FRAC_PI_4, 0.0, FRAC_PI_2));
        let expected = CMat::from_row_slice(2, 2, &[C64::new(s, 0.0), I * s, I * s, C64::new(s, 0.0)]);
        assert!(max_abs_diff(u3.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn canonical_gate_examples() {
        let u = canonical_two_qubit(&CanonicalParams::default());
        assert!(max_abs_diff(u.matrix(), &identity(4)) < 1e-15);

        let u = canonical_two_qubit(&CanonicalParams::new(0.0, 0.0, FRAC_PI_4));
        let d = bell_basis().adjoint() * u.matrix() * bell_basis();
        let expected = [-FRAC_PI_4, FRAC_PI_4, -FRAC_PI_4, FRAC_PI_4];
        for (k, e) in expected.iter().enumerate() {
            assert!((d[(k, k)] - C64::from_polar(1.0, *e)).norm() < 1e-14);
        }

        let xx = paulis()[1].kronecker(&paulis()[1]);
        let mut rng = substream(21, 0);
        for _ in 0..100 {
            let b = CanonicalParams::from_array_for_test(random_angles(&mut rng));
            let u = canonical_two_qubit(&b);
            let comm = u.matrix() * &xx - &xx * u.matrix();
            assert!(comm.iter().all(|z| z.norm() < 1e-12));
            assert!(max_abs_diff(u.matrix(), &expm_minus_i(&hp(&b))) < 1e-12);
        }
    }

    impl CanonicalParams {
        fn from_array_for_test(a: [f64; 3]) -> Self {
            Self::new(a[0], a[1], a[2])
        }
    }

    #[test]
    fn heisenberg_sequence_matches_diagonal_form() {
        let u = heisenberg_two_qubit(&HeisenbergTimes::default());
        assert!(max_abs_diff(u.matrix(), &identity(4)) < 1e-14);
        let mut rng = substream(22, 0);
        for _ in 0..100 {
            let a = HeisenbergTimes::new(
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..2.0),
            );
            let seq = heisenberg_two_qubit(&a);
            let diag = heisenberg_diagonal(&a);
            assert!(max_abs_diff(seq.matrix(), diag.matrix()) < 1e-12);
        }
    }

    #[test]
    fn heisenberg_cnot_entangler_matches_ising_realization() {
        let h = heisenberg_two_qubit(&HeisenbergTimes::new(0.5, 0.0, 0.5));
        let i = ising_two_qubit(&CanonicalParams::new(0.0, FRAC_PI_4, 0.0));
        assert!(equal_up_to_phase(h.matrix(), i.matrix(), 1e-12));
    }

    #[test]
    fn ising_sequence_matches_canonical_gate() {
        let u = ising_two_qubit(&CanonicalParams::default());
        assert!(max_abs_diff(u.matrix(), &identity(4)) < 1e-14);
        let mut rng = substream(23, 0);
        for _ in 0..100 {
            let b = CanonicalParams::from_array_for_test(random_angles(&mut rng));
            let a = ising_two_qubit(&b);
            let c = canonical_two_qubit(&b);
            assert!(equal_up_to_phase(a.matrix(), c.matrix(), 1e-12));
        }
    }

    #[test]
    fn measurement_unitary_examples() {
        let u = measurement_unitary(&MeasurementParams::identity(Interaction::Heisenberg));
        assert!(max_abs_diff(u.matrix(), &identity(4)) < 1e-15);

        let mub = standard_mub_params(Interaction::Heisenberg);
        let u2 = measurement_unitary(&mub.measurements()[1]);
        assert!(u2.matrix().iter().all(|z| (z.norm() - 0.5).abs() < 1e-14));

        let mut rng = substream(24, 0);
        for interaction in [Interaction::Heisenberg, Interaction::Ising] {
            for _ in 0..50 {
                let x: Vec<f64> = (0..15).map(|_| rng.random_range(-PI..PI)).collect();
                let m = MeasurementParams::from_slice(interaction, &x).unwrap();
                UnitaryMatrix::new(measurement_unitary(&m).matrix().clone()).unwrap();
            }
        }
    }

    #[test]
    fn standard_mubs_are_mutually_unbiased() {
        for interaction in [Interaction::Heisenberg, Interaction::Ising] {
            let bases: Vec<_> = standard_mub_params(interaction)
                .unitaries()
                .iter()
                .map(|u| u.basis_vectors())
                .collect();
            for j in 0..5 {
                for l in (j + 1)..5 {
                    for a in &bases[j] {
                        for b in &bases[l] {
                            let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                            assert_abs_diff_eq!(ov.norm_sqr(), 0.25, epsilon = 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mub_entangling_times() {
        let h = standard_mub_params(Interaction::Heisenberg);
        assert_abs_diff_eq!(h.entangling_times().iter().sum::<f64>(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(entangling_time(&h.measurements()[3]), 1.0, epsilon = 1e-15);
        let i = standard_mub_params(Interaction::Ising);
        assert_abs_diff_eq!(i.entangling_times().iter().sum::<f64>(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(entangling_time(&i.measurements()[3]), 0.25, epsilon = 1e-15);
        assert_eq!(entangling_time(&MeasurementParams::identity(Interaction::Ising)), 0.0);
    }

    #[test]
    fn pauli_bases_are_product_bases() {
        let bases = nine_pauli_bases();
        assert_eq!(bases.len(), 9);
        assert!(max_abs_diff(bases[8].matrix(), &identity(4)) < 1e-15);
        for u in &bases {
            for v in u.basis_vectors() {
                // Reshape to 2x2; product states have a single nonzero singular value.
                let m = nalgebra::DMatrix::from_row_slice(2, 2, &v);
                let sv = m.singular_values();
                assert!(sv.iter().filter(|s| **s > 1e-12).count() == 1, "{sv}");
            }
        }
    }

    #[test]
    fn quorum_json_round_trip_and_validation() {
        let q = standard_mub_params(Interaction::Ising);
        let back = QuorumParams::from_json(&q.to_json()).unwrap();
        assert_eq!(q, back);

        let bad = r#"{"interaction":"heisenberg","measurements":[]}"#;
        assert!(QuorumParams::from_json(bad).is_err());
        let bad = r#"{"interaction":"xy","measurements":[]}"#;
        assert!(QuorumParams::from_json(bad).is_err());
    }

    #[test]
    fn vector_layout_round_trip() {
        let q = standard_mub_params(Interaction::Heisenberg);
        let x = q.to_vector();
        assert_eq!(x.len(), QUORUM_PARAMS);
        assert_eq!(
            &x[45..54],
            &[0.0, FRAC_PI_4, 0.0, -FRAC_PI_2, 0.0, FRAC_PI_4, 0.5, 0.0, 0.5]
        );
        assert_eq!(QuorumParams::from_vector(Interaction::Heisenberg, &x).unwrap(), q);
    }

    #[test]
    fn canonical_times_reduce_mod_two() {
        let a = HeisenbergTimes::new(2.5, -0.5, 4.0).canonical();
        assert_abs_diff_eq!(a.alpha1, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.alpha2, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.alpha3, 0.0, epsilon = 1e-15);
        let u = heisenberg_two_qubit(&HeisenbergTimes::new(2.5, -0.5, 4.0));
        let v = heisenberg_two_qubit(&a);
        assert!(max_abs_diff(u.matrix(), v.matrix()) < 1e-12);
    }
}
