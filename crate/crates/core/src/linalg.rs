//! Dense complex linear algebra and entropy primitives.
//!
//! All matrices are `DMatrix<Complex64>`. Tensor products follow the usual
//! Kronecker convention: the first listed factor is the slowest-varying
//! index, so `tensor(a, b)[(i*nb + k, j*mb + l)] = a[(i, j)] * b[(k, l)]`.
//! Every routine that takes a list of factor dimensions (partial traces,
//! channel output layouts) uses this same ordering.
//!
//! Entropies are in bits (base-2 logarithm).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Numerical tolerances shared by validation and certification routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max entrywise deviation from Hermiticity.
    pub herm: f64,
    /// Allowed deviation of a state's trace from 1.
    pub trace: f64,
    /// Most negative eigenvalue accepted for a PSD operator.
    pub psd: f64,
    /// Slack for scalar domain checks (entropy arguments, probabilities).
    pub num: f64,
    /// Eigenvalues with magnitude below this are treated as exactly zero.
    pub eig_floor: f64,
    /// Trace-preservation residual accepted for channels.
    pub tp: f64,
    /// Choi-distance threshold for degradability certificates.
    pub cert: f64,
    /// Allowed excess of an optimizer result over a closed form.
    pub opt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            trace: 1e-10,
            psd: 1e-10,
            num: 1e-9,
            eig_floor: 1e-12,
            tp: 1e-10,
            cert: 1e-9,
            opt: 1e-6,
        }
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `|i><j|` in dimension `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c64(1.0, 0.0);
    m
}

/// Computational basis vector `|i>` in dimension `n`.
pub fn ket(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = c64(1.0, 0.0);
    v
}

/// Normalized maximally entangled vector `sum_i |i>|i> / sqrt(d)`.
pub fn max_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = c64(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// Projector `|v><v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Kronecker product with `a`'s indices major.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of factors, first factor slowest.
pub fn tensor_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Largest entrywise modulus of `a - a^dagger`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Splits a flat index into per-factor digits (first factor slowest).
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Reduced operator on the factors listed in `keep` (zero-based, any order;
/// kept factors appear in their original order in the result).
pub fn partial_trace(a: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    let total: usize = dims.iter().product();
    if total != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: a.nrows(),
        });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            found: bad,
        });
    }
    let kept: Vec<bool> = (0..dims.len()).map(|f| keep.contains(&f)).collect();
    let kept_dim: usize = dims
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d)
        .product();

    // For every flat index: (index within the kept factors, index within the traced ones).
    let mut split = Vec::with_capacity(total);
    let mut buf = vec![0usize; dims.len()];
    for idx in 0..total {
        digits(idx, dims, &mut buf);
        let (mut k, mut t) = (0usize, 0usize);
        for (f, &dgt) in buf.iter().enumerate() {
            if kept[f] {
                k = k * dims[f] + dgt;
            } else {
                t = t * dims[f] + dgt;
            }
        }
        split.push((k, t));
    }

    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for r in 0..total {
        let (kr, tr) = split[r];
        for c in 0..total {
            let (kc, tc) = split[c];
            if tr == tc {
                out[(kr, kc)] += a[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigenvalues_tol(a, Tolerances::default().herm)
}

pub fn hermitian_eigenvalues_tol(a: &CMatrix, herm_tol: f64) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    let defect = hermiticity_defect(a);
    if defect > herm_tol {
        return Err(Error::NotHermitian(defect));
    }
    Ok(eigenvalues_of_hermitian_part(a))
}

/// Eigenvalues of `(a + a^dagger)/2`, ascending. No validation.
pub(crate) fn eigenvalues_of_hermitian_part(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let h = (a + a.adjoint()) * c64(0.5, 0.0);
    let mut eig: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

fn check_unit_interval(what: &'static str, x: f64, slack: f64) -> Result<f64> {
    if !(x >= -slack && x <= 1.0 + slack) {
        return Err(Error::OutOfDomain {
            what,
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `eta(x) = -x log2 x`, with `eta(0) = 0`.
pub fn eta(x: f64) -> Result<f64> {
    let x = check_unit_interval("eta argument", x, Tolerances::default().num)?;
    Ok(eta_clamped(x))
}

/// `eta` for arguments already known to lie in [0, 1].
pub(crate) fn eta_clamped(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Binary entropy `h(x) = eta(x) + eta(1 - x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let x = check_unit_interval("binary entropy argument", x, Tolerances::default().num)?;
    Ok(eta_clamped(x) + eta_clamped(1.0 - x))
}

/// Shannon entropy (bits) of a spectrum; entries within `floor` of zero
/// contribute nothing.
pub fn spectrum_entropy(eigenvalues: &[f64], floor: f64) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > floor)
        .map(|&l| eta_clamped(l))
        .sum()
}

/// Entropy of a Hermitian PSD matrix (not necessarily unit trace).
pub fn matrix_entropy(a: &CMatrix) -> f64 {
    spectrum_entropy(
        &eigenvalues_of_hermitian_part(a),
        Tolerances::default().eig_floor,
    )
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        if matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let defect = hermiticity_defect(&matrix);
        if defect > tol.herm {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::BadTrace(tr.re));
        }
        let min = eigenvalues_of_hermitian_part(&matrix)[0];
        if min < -tol.psd {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix the caller has already established to be a state.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: identity(d) / c64(d as f64, 0.0),
        }
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::BadTrace(0.0));
        }
        let v = psi / c64(norm, 0.0);
        Ok(Self {
            matrix: projector(&v),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_of_hermitian_part(&self.matrix)
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self {
            matrix: u * &self.matrix * u.adjoint(),
        }
    }

    pub fn tensor(&self, other: &DensityOperator) -> Self {
        Self {
            matrix: tensor(&self.matrix, &other.matrix),
        }
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    spectrum_entropy(&rho.eigenvalues(), Tolerances::default().eig_floor)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

/// Haar-random unit vector (normalized complex Gaussian).
pub fn random_state_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v / c64(n, 0.0)
}

/// Haar-random rank-one state, deterministic in `seed`.
pub fn random_pure_state(d: usize, seed: u64) -> Result<DensityOperator> {
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DensityOperator::pure(&random_state_vector(d, &mut rng))
}

/// Complex Ginibre matrix (i.i.d. standard complex Gaussian entries).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal moved into Q.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            c64(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random full-rank mixed state `G G^dagger / tr(G G^dagger)`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator::from_matrix_unchecked(m / tr)
}
