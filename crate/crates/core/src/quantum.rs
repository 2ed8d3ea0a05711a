//! Dense simulation of small n-qubit systems: pure states, POVMs, the Born
//! rule, Haar-uniform state sampling and the first and second moments of
//! Haar-random states.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::bits::BitString;
use crate::codec::{self, CodecError, PovmFile, StateFile};
use crate::info::{FiniteProbability, InfoCalcError};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default cap on qubit count; second moments live in dimension `4^n`.
pub const MAX_QUBITS: usize = 5;
pub const STATE_NORM_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-9;
pub const PSD_FLOOR: f64 = -1e-8;
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Eigenvalue floor when forming `S^{-1/2}` for random POVMs.
pub const INV_SQRT_FLOOR: f64 = 1e-12;

/// Haar samples drawn per RNG stream. Streams are reduced in index order,
/// so results do not depend on the number of worker threads.
pub const SAMPLES_PER_STREAM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("dimension {0} is not a power of two")]
    NotQubits(usize),
    #[error("{0} qubits exceeds the cap of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("state norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("density matrix: {0}")]
    InvalidDensity(String),
    #[error("invalid povm: {0}")]
    Povm(#[from] PovmError),
    #[error("random draw was degenerate (eigenvalue {0:e}) in every attempt")]
    Degenerate(f64),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Probability(#[from] InfoCalcError),
}

/// The first violated POVM condition.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PovmError {
    #[error("empty: no elements")]
    Empty,
    #[error(
        "shape: element {index} is {rows}x{cols}, expected {dim}x{dim} with dim a power of two"
    )]
    Shape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("hermiticity: element {index} deviates from its adjoint by {deviation:e}")]
    Hermiticity { index: usize, deviation: f64 },
    #[error("positivity: element {index} has eigenvalue {min_eigenvalue:e}")]
    Positivity { index: usize, min_eigenvalue: f64 },
    #[error("completeness: elements sum to the identity only within {deviation:e}")]
    Completeness { deviation: f64 },
}

impl PovmError {
    /// Short name of the failed check.
    pub fn condition(&self) -> &'static str {
        match self {
            PovmError::Empty => "empty",
            PovmError::Shape { .. } => "shape",
            PovmError::Hermiticity { .. } => "hermiticity",
            PovmError::Positivity { .. } => "positivity",
            PovmError::Completeness { .. } => "completeness",
        }
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize, QuantumError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QuantumError::NotQubits(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_qubits(n: usize) -> Result<usize, QuantumError> {
    if n > MAX_QUBITS {
        return Err(QuantumError::TooManyQubits(n));
    }
    Ok(1 << n)
}

/// Unit vector in `C^{2^n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self, QuantumError> {
        let n = qubits_for_dim(amplitudes.len())?;
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_NORM_TOL {
            return Err(QuantumError::NotNormalized(norm_sq.sqrt()));
        }
        Ok(PureState { n, amplitudes })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(v: CVector) -> Result<Self, QuantumError> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::NotNormalized(norm));
        }
        Self::new(v.unscale(norm))
    }

    /// `|index>` in the computational basis.
    pub fn basis(n: usize, index: usize) -> Result<Self, QuantumError> {
        let d = check_qubits(n)?;
        if index >= d {
            return Err(QuantumError::Dimension {
                expected: d,
                got: index,
            });
        }
        let mut v = CVector::zeros(d);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// `|psi> (x) |psi>`.
    pub fn doubled(&self) -> CVector {
        self.amplitudes.kronecker(&self.amplitudes)
    }

    pub fn to_file(&self) -> StateFile {
        StateFile {
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_file(f: &StateFile) -> Result<Self, QuantumError> {
        Self::new(CVector::from_iterator(
            f.amplitudes.len(),
            f.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)),
        ))
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        codec::canonical_vector(self.amplitudes.as_slice())
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, QuantumError> {
        let v = codec::parse_canonical_vector(bytes)?;
        Self::new(CVector::from_vec(v))
    }
}

/// Largest `|a_ij - conj(a_ji)|`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix. Only the
/// lower triangle is read.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0[0]
}

/// `A^{-1/2}` for Hermitian positive definite `A`; fails when an
/// eigenvalue is below `floor`.
pub fn inverse_sqrt(a: &CMatrix, floor: f64) -> Result<CMatrix, f64> {
    let (values, vectors) = hermitian_eigen(a);
    if values[0] < floor {
        return Err(values[0]);
    }
    let scale = CVector::from_iterator(
        values.len(),
        values.iter().map(|v| Complex64::new(v.sqrt().recip(), 0.0)),
    );
    let mut scaled = vectors.clone();
    for (mut col, s) in scaled.column_iter_mut().zip(scale.iter()) {
        col *= *s;
    }
    Ok(&scaled * vectors.adjoint())
}

fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).unscale(2.0)
}

/// Hermitian, PSD, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self, QuantumError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QuantumError::InvalidDensity("not square".into()));
        }
        let n = qubits_for_dim(matrix.nrows())?;
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(QuantumError::InvalidDensity(format!(
                "not Hermitian ({dev:e})"
            )));
        }
        let min = min_eigenvalue(&matrix);
        if min < PSD_FLOOR {
            return Err(QuantumError::InvalidDensity(format!("eigenvalue {min:e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_NORM_TOL || tr.im.abs() > STATE_NORM_TOL {
            return Err(QuantumError::InvalidDensity(format!("trace {tr}")));
        }
        Ok(DensityMatrix { n, matrix })
    }

    pub fn pure(psi: &PureState) -> Self {
        DensityMatrix {
            n: psi.n,
            matrix: psi.projector(),
        }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self, QuantumError> {
        let d = check_qubits(n)?;
        Self::new(CMatrix::identity(d, d).unscale(d as f64))
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Outcome labels `0..m` written with `ceil(log2 m)` bits.
pub fn outcome_labels(m: usize) -> Vec<BitString> {
    let width = if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    };
    (0..m as u64)
        .map(|k| BitString::from_index(k, width))
        .collect()
}

/// Validated measurement: PSD elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    n: usize,
    elements: Vec<CMatrix>,
    labels: Vec<BitString>,
}

/// Checks shape, Hermiticity, positivity and completeness in that order.
pub fn validate_povm(elements: Vec<CMatrix>) -> Result<Povm, PovmError> {
    let first = elements.first().ok_or(PovmError::Empty)?;
    let dim = first.nrows();
    let n = match qubits_for_dim(dim) {
        Ok(n) => n,
        Err(_) => {
            return Err(PovmError::Shape {
                index: 0,
                rows: first.nrows(),
                cols: first.ncols(),
                dim,
            })
        }
    };
    for (index, e) in elements.iter().enumerate() {
        if e.nrows() != dim || e.ncols() != dim {
            return Err(PovmError::Shape {
                index,
                rows: e.nrows(),
                cols: e.ncols(),
                dim,
            });
        }
    }
    for (index, e) in elements.iter().enumerate() {
        let deviation = hermitian_deviation(e);
        if deviation > HERMITIAN_TOL {
            return Err(PovmError::Hermiticity { index, deviation });
        }
    }
    for (index, e) in elements.iter().enumerate() {
        let min_eigenvalue = min_eigenvalue(e);
        if min_eigenvalue < PSD_FLOOR {
            return Err(PovmError::Positivity {
                index,
                min_eigenvalue,
            });
        }
    }
    let sum = elements
        .iter()
        .fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
    let deviation = max_abs_diff(&sum, &CMatrix::identity(dim, dim));
    if deviation > COMPLETENESS_TOL {
        return Err(PovmError::Completeness { deviation });
    }
    let labels = outcome_labels(elements.len());
    Ok(Povm {
        n,
        elements,
        labels,
    })
}

impl Povm {
    /// Projectors onto the computational basis; outcome `k` is `|k><k|`.
    pub fn computational_basis(n: usize) -> Result<Self, QuantumError> {
        let d = check_qubits(n)?;
        let elements = (0..d)
            .map(|k| {
                let mut e = CMatrix::zeros(d, d);
                e[(k, k)] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();
        Ok(validate_povm(elements)?)
    }

    /// `m` copies of `I/m`.
    pub fn uniform(n: usize, m: usize) -> Result<Self, QuantumError> {
        let d = check_qubits(n)?;
        let e = CMatrix::identity(d, d).unscale(m as f64);
        Ok(validate_povm(vec![e; m])?)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[BitString] {
        &self.labels
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        codec::canonical_matrices(&self.elements)
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, QuantumError> {
        Ok(validate_povm(codec::parse_canonical_matrices(bytes)?)?)
    }

    pub fn to_file(&self) -> PovmFile {
        PovmFile {
            elements: self.elements.iter().map(codec::matrix_to_json).collect(),
        }
    }

    pub fn from_file(f: &PovmFile) -> Result<Self, QuantumError> {
        let elements = f
            .elements
            .iter()
            .map(codec::matrix_from_json)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(validate_povm(elements)?)
    }

    /// The aux tape that conditions complexities on this measurement.
    pub fn aux(&self) -> BitString {
        codec::aux_for_matrices(&self.elements)
    }

    /// `<psi|E_k|psi>` for every outcome, clamped at zero and divided by
    /// their sum.
    pub fn outcome_probabilities(&self, psi: &PureState) -> Result<Vec<f64>, QuantumError> {
        if psi.dim() != self.dim() {
            return Err(QuantumError::Dimension {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        let v = psi.amplitudes();
        Ok(normalize(
            self.elements
                .iter()
                .map(|e| v.dotc(&(e * v)).re.max(0.0))
                .collect(),
        ))
    }

    /// `Tr(E_k sigma)` for every outcome, clamped and normalized as above.
    pub fn outcome_probabilities_mixed(
        &self,
        sigma: &DensityMatrix,
    ) -> Result<Vec<f64>, QuantumError> {
        if sigma.matrix.nrows() != self.dim() {
            return Err(QuantumError::Dimension {
                expected: self.dim(),
                got: sigma.matrix.nrows(),
            });
        }
        Ok(normalize(
            self.elements
                .iter()
                .map(|e| (e * &sigma.matrix).trace().re.max(0.0))
                .collect(),
        ))
    }

    fn labelled(&self, probs: Vec<f64>) -> Result<FiniteProbability, QuantumError> {
        Ok(FiniteProbability::new(
            self.labels.iter().cloned().zip(probs),
        )?)
    }
}

// Rounding leaves the Born-rule total within ~1e-15 of one, and completeness
// is only checked to 1e-8; dividing by the total keeps a single-outcome
// measurement exactly a point mass.
fn normalize(mut probs: Vec<f64>) -> Vec<f64> {
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    probs
}

/// Born-rule distribution of outcome labels.
pub fn measure(povm: &Povm, psi: &PureState) -> Result<FiniteProbability, QuantumError> {
    let probs = povm.outcome_probabilities(psi)?;
    povm.labelled(probs)
}

pub fn measure_mixed(
    povm: &Povm,
    sigma: &DensityMatrix,
) -> Result<FiniteProbability, QuantumError> {
    let probs = povm.outcome_probabilities_mixed(sigma)?;
    povm.labelled(probs)
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-uniform unit vector: normalized i.i.d. complex Gaussians.
pub fn haar_sample_with<R: Rng>(n: usize, rng: &mut R) -> Result<PureState, QuantumError> {
    let d = check_qubits(n)?;
    loop {
        let v = CVector::from_fn(d, |_, _| complex_gaussian(rng));
        if v.norm() > 0.0 {
            return PureState::normalized(v);
        }
    }
}

pub fn haar_sample(n: usize, seed: u64) -> Result<PureState, QuantumError> {
    haar_sample_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// RNG for stream `stream` of a seeded computation.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sizes of the fixed-size streams that cover `samples`.
pub fn stream_sizes(samples: usize) -> Vec<usize> {
    let full = samples / SAMPLES_PER_STREAM;
    let mut sizes = vec![SAMPLES_PER_STREAM; full];
    if !samples.is_multiple_of(SAMPLES_PER_STREAM) {
        sizes.push(samples % SAMPLES_PER_STREAM);
    }
    sizes
}

/// Averages `term(psi)` over `samples` Haar states.
fn haar_average<F>(
    n: usize,
    samples: usize,
    seed: u64,
    dim: usize,
    term: F,
) -> Result<CMatrix, QuantumError>
where
    F: Fn(&PureState, &mut CMatrix) + Sync,
{
    check_qubits(n)?;
    let partials: Vec<Result<CMatrix, QuantumError>> = stream_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(stream, count)| {
            let mut rng = stream_rng(seed, stream as u64);
            let mut acc = CMatrix::zeros(dim, dim);
            for _ in 0..count {
                let psi = haar_sample_with(n, &mut rng)?;
                term(&psi, &mut acc);
            }
            Ok(acc)
        })
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for p in partials {
        total += p?;
    }
    Ok(total.unscale(samples.max(1) as f64))
}

/// Monte Carlo average of `|psi><psi|`.
pub fn first_moment_estimate(n: usize, samples: usize, seed: u64) -> Result<CMatrix, QuantumError> {
    let d = 1 << n.min(MAX_QUBITS);
    haar_average(n, samples, seed, d, |psi, acc| {
        let v = psi.amplitudes();
        acc.gerc(Complex64::new(1.0, 0.0), v, v, Complex64::new(1.0, 0.0));
    })
}

/// Monte Carlo average of `|psi psi><psi psi|` on the doubled space.
pub fn second_moment_estimate(
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<CMatrix, QuantumError> {
    let d = 1 << n.min(MAX_QUBITS);
    haar_average(n, samples, seed, d * d, |psi, acc| {
        let v = psi.doubled();
        acc.gerc(Complex64::new(1.0, 0.0), &v, &v, Complex64::new(1.0, 0.0));
    })
}

/// `SWAP |i>|j> = |j>|i>` on `C^d (x) C^d`.
pub fn swap_operator(n: usize) -> Result<CMatrix, QuantumError> {
    let d = check_qubits(n)?;
    let mut s = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(s)
}

/// `(I + SWAP) / 2`, the projector onto the symmetric subspace.
pub fn symmetric_projector(n: usize) -> Result<CMatrix, QuantumError> {
    let s = swap_operator(n)?;
    let dd = s.nrows();
    Ok((CMatrix::identity(dd, dd) + s).unscale(2.0))
}

/// `binom(2^n + 1, 2)`, the dimension of the symmetric subspace.
pub fn symmetric_dimension(n: usize) -> usize {
    let d = 1usize << n;
    d * (d + 1) / 2
}

/// Number of eigenvalues above `threshold`.
pub fn numerical_rank(a: &CMatrix, threshold: f64) -> usize {
    hermitian_eigen(a)
        .0
        .iter()
        .filter(|v| **v > threshold)
        .count()
}

/// POVM from `E_k = S^{-1/2} G_k G_k^* S^{-1/2}` with complex Gaussian `G_k`
/// and `S = sum_k G_k G_k^*`. A single outcome gives the identity.
pub fn random_povm(n: usize, outcomes: usize, seed: u64) -> Result<Povm, QuantumError> {
    random_povm_with(n, outcomes, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_povm_with<R: Rng>(
    n: usize,
    outcomes: usize,
    rng: &mut R,
) -> Result<Povm, QuantumError> {
    let d = check_qubits(n)?;
    if outcomes == 0 {
        return Err(PovmError::Empty.into());
    }
    if outcomes == 1 {
        return Ok(validate_povm(vec![CMatrix::identity(d, d)])?);
    }
    const ATTEMPTS: usize = 16;
    let mut worst = 0.0;
    for _ in 0..ATTEMPTS {
        let parts: Vec<CMatrix> = (0..outcomes)
            .map(|_| {
                let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
                &g * g.adjoint()
            })
            .collect();
        let total = parts.iter().fold(CMatrix::zeros(d, d), |acc, a| acc + a);
        match inverse_sqrt(&symmetrize(&total), INV_SQRT_FLOOR) {
            Ok(root) => {
                let elements = parts
                    .iter()
                    .map(|a| symmetrize(&(&root * a * &root)))
                    .collect();
                return Ok(validate_povm(elements)?);
            }
            Err(v) => worst = v,
        }
    }
    Err(QuantumError::Degenerate(worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn proj(d: usize, k: usize) -> CMatrix {
        let mut e = CMatrix::zeros(d, d);
        e[(k, k)] = c(1.0, 0.0);
        e
    }

    #[test]
    fn labels_have_fixed_width() {
        assert_eq!(outcome_labels(1), vec![BitString::new()]);
        let l: Vec<String> = outcome_labels(3).iter().map(|b| b.to_string()).collect();
        assert_eq!(l, ["00", "01", "10"]);
        assert_eq!(outcome_labels(8)[7].to_string(), "111");
    }

    #[test]
    fn validate_examples() {
        assert!(validate_povm(vec![proj(2, 0), proj(2, 1)]).is_ok());
        let err = validate_povm(vec![proj(2, 0), proj(2, 0)]).unwrap_err();
        assert_eq!(err.condition(), "completeness");
        let e1 = proj(2, 0).scale(2.0) - proj(2, 1);
        let e2 = CMatrix::identity(2, 2) - &e1;
        let err = validate_povm(vec![e1, e2]).unwrap_err();
        assert_eq!(err.condition(), "positivity");
        let mut h = CMatrix::identity(2, 2).unscale(2.0);
        h[(0, 1)] = c(0.0, 0.1);
        let err = validate_povm(vec![h.clone(), CMatrix::identity(2, 2) - h]).unwrap_err();
        assert_eq!(err.condition(), "hermiticity");
        assert_eq!(validate_povm(vec![]).unwrap_err(), PovmError::Empty);
        assert_eq!(
            validate_povm(vec![CMatrix::identity(3, 3)])
                .unwrap_err()
                .condition(),
            "shape"
        );
        assert_eq!(
            validate_povm(vec![proj(2, 0), CMatrix::identity(4, 4)])
                .unwrap_err()
                .condition(),
            "shape"
        );
    }

    #[test]
    fn born_rule_examples() {
        let basis = Povm::computational_basis(2).unwrap();
        let p = measure(&basis, &PureState::basis(2, 0).unwrap()).unwrap();
        assert_eq!(
            p,
            crate::info::FiniteProbability::point("00".parse().unwrap())
        );

        let plus =
            PureState::normalized(CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        let p = measure(&Povm::computational_basis(1).unwrap(), &plus).unwrap();
        assert!((p.mass(&"0".parse().unwrap()) - 0.5).abs() < 1e-15);
        assert!((p.mass(&"1".parse().unwrap()) - 0.5).abs() < 1e-15);

        let psi = haar_sample(2, 9).unwrap();
        let p = measure(&Povm::uniform(2, 3).unwrap(), &psi).unwrap();
        for x in outcome_labels(3) {
            assert!((p.mass(&x) - 1.0 / 3.0).abs() < 1e-12);
        }
        let err = measure(&basis, &plus).unwrap_err();
        assert!(matches!(err, QuantumError::Dimension { .. }));
    }

    #[test]
    fn mixed_measurement() {
        let sigma = DensityMatrix::maximally_mixed(1).unwrap();
        let p = measure_mixed(&Povm::computational_basis(1).unwrap(), &sigma).unwrap();
        assert!((p.mass(&"1".parse().unwrap()) - 0.5).abs() < 1e-15);
        let psi = haar_sample(1, 4).unwrap();
        let a = measure(&random_povm(1, 3, 5).unwrap(), &psi).unwrap();
        let b = measure_mixed(&random_povm(1, 3, 5).unwrap(), &DensityMatrix::pure(&psi)).unwrap();
        for x in outcome_labels(3) {
            assert!((a.mass(&x) - b.mass(&x)).abs() < 1e-12);
        }
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn haar_samples_are_unit_and_seeded() {
        for seed in 0..20 {
            let psi = haar_sample(3, seed).unwrap();
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-9);
        }
        assert_eq!(haar_sample(2, 1).unwrap(), haar_sample(2, 1).unwrap());
        assert_ne!(haar_sample(2, 1).unwrap(), haar_sample(2, 2).unwrap());
        assert!(haar_sample(MAX_QUBITS + 1, 0).is_err());
    }

    #[test]
    fn projector_structure() {
        for n in 0..=2 {
            let p = symmetric_projector(n).unwrap();
            assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
            assert!(hermitian_deviation(&p) < 1e-15);
            assert_eq!(numerical_rank(&p, 0.5), symmetric_dimension(n));
            assert!((p.trace().re - symmetric_dimension(n) as f64).abs() < 1e-12);
        }
        assert_eq!(symmetric_dimension(1), 3);
    }

    #[test]
    fn doubled_states_are_symmetric() {
        let psi = haar_sample(2, 3).unwrap();
        let v = psi.doubled();
        let p = symmetric_projector(2).unwrap();
        assert!((&p * &v - &v).norm() < 1e-12);
    }

    #[test]
    fn second_moment_is_psd_with_unit_trace() {
        for samples in [1, 7, 100] {
            let m = second_moment_estimate(1, samples, 11).unwrap();
            assert!(hermitian_deviation(&m) < 1e-12);
            assert!(min_eigenvalue(&m) > -1e-12);
            assert!((m.trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn random_povms() {
        let one = random_povm(2, 1, 3).unwrap();
        assert_eq!(one.elements()[0], CMatrix::identity(4, 4));
        for seed in 0..5 {
            let e = random_povm(2, 3, seed).unwrap();
            assert_eq!(e.outcomes(), 3);
            assert!(validate_povm(e.elements().to_vec()).is_ok());
        }
        assert_ne!(random_povm(1, 2, 0).unwrap(), random_povm(1, 2, 1).unwrap());
    }

    #[test]
    fn inverse_square_root() {
        let a =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let r = inverse_sqrt(&a, INV_SQRT_FLOOR).unwrap();
        assert!(max_abs_diff(&(&r * &a * &r), &CMatrix::identity(2, 2)) < 1e-12);
        assert!(inverse_sqrt(&CMatrix::zeros(2, 2), INV_SQRT_FLOOR).is_err());
    }

    #[test]
    fn eigen_reconstructs() {
        let g = CMatrix::from_fn(4, 4, |i, j| {
            c((i * 3 + j) as f64 * 0.1, i as f64 - j as f64)
        });
        let a = &g * g.adjoint();
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&CVector::from_iterator(4, vals.iter().map(|v| c(*v, 0.0))));
        assert!(max_abs_diff(&(&vecs * d * vecs.adjoint()), &a) < 1e-9);
    }

    #[test]
    fn file_round_trips() {
        let e = random_povm(1, 2, 8).unwrap();
        assert_eq!(Povm::from_canonical_bytes(&e.canonical_bytes()).unwrap(), e);
        let json = serde_json::to_string(&e.to_file()).unwrap();
        assert_eq!(
            Povm::from_file(&serde_json::from_str(&json).unwrap()).unwrap(),
            e
        );
        let psi = haar_sample(2, 8).unwrap();
        assert_eq!(
            PureState::from_canonical_bytes(&psi.canonical_bytes()).unwrap(),
            psi
        );
        assert_eq!(PureState::from_file(&psi.to_file()).unwrap(), psi);
    }
}
