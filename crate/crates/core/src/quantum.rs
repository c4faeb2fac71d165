//! Small-dimension complex linear algebra for one and two qubits.
//!
//! Matrices are `nalgebra` dynamic matrices restricted to dimension 2 or 4 at
//! the public constructors. Traceless Hermitian operators are represented by
//! real coordinates in the orthonormal basis `σ_k/√2` (one qubit) or
//! `σ_k⊗σ_l/2` (two qubits), so the trace inner product `Tr(AB)` becomes the
//! Euclidean dot product of coordinates and Gram volumes are plain
//! determinants.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Tolerance applied to the Hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

fn check_dim(d: usize) -> Result<()> {
    match d {
        2 | 4 => Ok(()),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// The four Pauli matrices `[1, σx, σy, σz]`.
pub fn paulis() -> [CMat; 4] {
    [
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

pub(crate) fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// `Tr(AB)` without forming the product.
pub(crate) fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub(crate) fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitian_deviation(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Square root of a positive semi-definite matrix, clamping negative
/// eigenvalues to zero.
pub(crate) fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let n = vals.len();
    let d = CMat::from_diagonal(&DVector::from_iterator(
        n,
        vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Square complex matrix of dimension 2 or 4 with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(CMat);

impl ComplexMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        check_dim(m.nrows())?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("matrix", "non-finite entry"));
        }
        Ok(Self(m))
    }

    pub fn identity(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self(identity(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.0) <= tol
    }
}

/// Unit-trace, Hermitian, positive semi-definite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let m = ComplexMatrix::new(m)?;
        let herm = hermitian_deviation(m.matrix());
        if herm > STATE_TOL {
            return Err(invalid("density matrix", format!("not Hermitian ({herm:.3e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(invalid("density matrix", format!("trace {tr}")));
        }
        let (vals, _) = hermitian_eigen(m.matrix());
        if vals[0] < -STATE_TOL {
            return Err(invalid(
                "density matrix",
                format!("negative eigenvalue {:.3e}", vals[0]),
            ));
        }
        Ok(Self(m))
    }

    /// Symmetrizes, clips negative eigenvalues and renormalizes before
    /// validating. Used for outputs of numerical procedures whose PSD-ness
    /// holds only up to rounding.
    pub fn from_numerical(m: CMat) -> Result<Self> {
        let (vals, vecs) = hermitian_eigen(&m);
        let n = vals.len();
        let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("density matrix", "zero trace after clipping"));
        }
        let d = CMat::from_diagonal(&DVector::from_iterator(
            n,
            clipped.iter().map(|&v| C64::new(v / total, 0.0)),
        ));
        let mut out = &vecs * d * vecs.adjoint();
        for i in 0..n {
            out[(i, i)].im = 0.0;
        }
        Self::new((&out + out.adjoint()).scale(0.5))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        check_dim(psi.len())?;
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(invalid("state vector", "zero norm"));
        }
        let v = v.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self(ComplexMatrix(identity(d).unscale(d as f64))))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMat {
        self.0.matrix()
    }

    pub fn purity(&self) -> f64 {
        trace_product(self.matrix(), self.matrix()).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(self.matrix()).0.iter().copied().collect()
    }
}

/// Matrix with `U†U = 1` within `1e-10`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let m = ComplexMatrix::new(m)?;
        let d = m.dim();
        let dev = max_abs_diff(&(m.matrix().adjoint() * m.matrix()), &identity(d));
        if dev > STATE_TOL {
            return Err(invalid("unitary", format!("U†U deviates by {dev:.3e}")));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_trusted(m: CMat) -> Self {
        debug_assert!(max_abs_diff(&(m.adjoint() * &m), &identity(m.nrows())) < 1e-8);
        Self(ComplexMatrix(m))
    }

    pub fn identity(d: usize) -> Result<Self> {
        Ok(Self(ComplexMatrix::identity(d)?))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMat {
        self.0.matrix()
    }

    pub fn adjoint(&self) -> Self {
        Self(ComplexMatrix(self.matrix().adjoint()))
    }

    /// `U₁·U₂`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self(ComplexMatrix(self.matrix() * other.matrix())))
    }

    /// `U₁ ⊗ U₂` for two single-qubit gates.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self(ComplexMatrix(self.matrix().kronecker(other.matrix()))))
    }

    /// Measurement basis realized by applying `U` and then measuring in the
    /// standard basis: the vectors `U†|k⟩`.
    pub fn basis_vectors(&self) -> Vec<Vec<C64>> {
        let u = self.matrix();
        (0..self.dim())
            .map(|k| (0..self.dim()).map(|i| u[(k, i)].conj()).collect())
            .collect()
    }

    /// Projectors `U†|k⟩⟨k|U` of the measurement basis.
    pub fn basis_projectors(&self) -> Vec<Projector> {
        self.basis_vectors()
            .into_iter()
            .map(|v| Projector::from_unit_vector(&v))
            .collect()
    }
}

/// Orthogonal projector of a given rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    mat: ComplexMatrix,
    rank: usize,
}

impl Projector {
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, STATE_TOL)
    }

    /// Validates Hermiticity and idempotency within `tol`, and the trace
    /// against the integer rank within `10·tol`.
    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        let m = ComplexMatrix::new(m)?;
        let herm = hermitian_deviation(m.matrix());
        if herm > tol {
            return Err(invalid("projector", format!("not Hermitian ({herm:.3e})")));
        }
        let idem = max_abs_diff(&(m.matrix() * m.matrix()), m.matrix());
        if idem > tol {
            return Err(invalid("projector", format!("not idempotent ({idem:.3e})")));
        }
        let tr = m.trace().re;
        let rank = tr.round().max(0.0) as usize;
        if (tr - rank as f64).abs() > 10.0 * tol || rank == 0 {
            return Err(invalid("projector", format!("trace {tr}")));
        }
        Ok(Self { mat: m, rank })
    }

    pub(crate) fn from_unit_vector(v: &[C64]) -> Self {
        let v = DVector::from_column_slice(v);
        Self {
            mat: ComplexMatrix(&v * v.adjoint()),
            rank: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMat {
        self.mat.matrix()
    }
}

fn traceless_basis(d: usize) -> &'static [CMat] {
    static QUBIT: OnceLock<Vec<CMat>> = OnceLock::new();
    static TWO_QUBIT: OnceLock<Vec<CMat>> = OnceLock::new();
    match d {
        2 => QUBIT.get_or_init(|| {
            paulis()[1..]
                .iter()
                .map(|p| p.unscale(std::f64::consts::SQRT_2))
                .collect()
        }),
        4 => TWO_QUBIT.get_or_init(|| {
            let p = paulis();
            let mut out = Vec::with_capacity(15);
            for k in 0..4 {
                for l in 0..4 {
                    if k == 0 && l == 0 {
                        continue;
                    }
                    out.push(p[k].kronecker(&p[l]).unscale(2.0));
                }
            }
            out
        }),
        _ => unreachable!("dimension checked by caller"),
    }
}

/// Real coordinates of a traceless Hermitian operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracelessVector {
    dim: usize,
    coords: Vec<f64>,
}

impl TracelessVector {
    /// Coordinates of the traceless part of a Hermitian matrix (the identity
    /// component is dropped).
    pub fn from_hermitian(m: &CMat) -> Result<Self> {
        let d = m.nrows();
        check_dim(d)?;
        Ok(Self::from_hermitian_unchecked(m))
    }

    pub(crate) fn from_hermitian_unchecked(m: &CMat) -> Self {
        let d = m.nrows();
        let coords = traceless_basis(d).iter().map(|b| trace_product(m, b).re).collect();
        Self { dim: d, coords }
    }

    pub fn from_coords(dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coords.len() != dim * dim - 1 {
            return Err(Error::DimensionMismatch(coords.len(), dim * dim - 1));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum()
    }

    /// The traceless Hermitian matrix these coordinates encode.
    pub fn to_matrix(&self) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (c, b) in self.coords.iter().zip(traceless_basis(self.dim)) {
            out += b.scale(*c);
        }
        out
    }
}

/// Coordinates of `P − rank·1/d`.
pub fn traceless_part(p: &Projector) -> TracelessVector {
    TracelessVector::from_hermitian_unchecked(p.matrix())
}

/// `√det G` with `G_mn = Tr(v_m v_n)`; zero for a singular Gram matrix.
pub fn gram_volume(vs: &[TracelessVector]) -> Result<f64> {
    let Some(first) = vs.first() else {
        return Ok(1.0);
    };
    let d = first.dim;
    if let Some(v) = vs.iter().find(|v| v.dim != d) {
        return Err(Error::DimensionMismatch(d, v.dim));
    }
    if vs.len() > d * d - 1 {
        return Err(invalid(
            "gram volume",
            format!("{} vectors in a {}-dimensional space", vs.len(), d * d - 1),
        ));
    }
    Ok(gram_volume_unchecked(vs))
}

pub(crate) fn gram_volume_unchecked(vs: &[TracelessVector]) -> f64 {
    let n = vs.len();
    let g = DMatrix::<f64>::from_fn(n, n, |i, j| vs[i].dot(&vs[j]));
    g.determinant().max(0.0).sqrt()
}

/// Volume in the unit-Bloch-vector convention used for one qubit:
/// `2^{3/2}` times [`gram_volume`] for three vectors.
pub fn bloch_volume(vs: &[TracelessVector]) -> Result<f64> {
    if let Some(v) = vs.iter().find(|v| v.dim != 2) {
        return Err(Error::DimensionMismatch(2, v.dim));
    }
    Ok(gram_volume(vs)? * 2f64.powf(vs.len() as f64 / 2.0))
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre
/// matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    check_dim(d)?;
    Ok(UnitaryMatrix(ComplexMatrix(haar_matrix(d, rng))))
}

pub(crate) fn haar_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let z = CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random state `U D U†` with Haar `U` and spectrum given by the gaps of
/// `d−1` sorted uniforms on `[0, 1]`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<DensityMatrix> {
    check_dim(d)?;
    let u = haar_matrix(d, rng);
    let spectrum = random_spectrum(d, rng);
    let diag = CMat::from_diagonal(&DVector::from_iterator(d, spectrum.iter().map(|&x| C64::new(x, 0.0))));
    let rho = &u * diag * u.adjoint();
    let rho = (&rho + rho.adjoint()).scale(0.5);
    Ok(DensityMatrix(ComplexMatrix(rho)))
}

pub(crate) fn random_spectrum<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..d - 1).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(d);
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let sr = psd_sqrt(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let (vals, _) = hermitian_eigen(&inner);
    // Round-off eigenvalues would otherwise contribute O(√ε) to the trace.
    let floor = 64.0 * f64::EPSILON * vals.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let tr: f64 = vals.iter().filter(|v| **v > floor).map(|v| v.sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}
