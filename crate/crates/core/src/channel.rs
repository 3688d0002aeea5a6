//! Kraus-form channels: depolarizing, flagged depolarizing (mixed diagonal
//! or pure flags), complementary channels and the degrading map.
//!
//! Output spaces carry labelled tensor factors. The flagged channels output
//! on `[A:d, flag:2]` with the flag basis `|e1> = |0>`, `|e1_perp> = |1>`.
//! The explicit complement lives on `[E2:2, E3:d, E4:d, E5:2]`.

use serde::{Deserialize, Serialize};

use crate::capacity::degrading_params;
use crate::error::{Error, Result};
use crate::linalg::{
    c64, eigenvalues_of_hermitian_part, hermiticity_defect, identity, ket, matrix_unit,
    max_entangled, partial_trace, tensor, CMatrix, CVector, DensityOperator, Tolerances,
};
use nalgebra::SymmetricEigen;

/// A labelled tensor factor of a channel's output space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

impl Factor {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }
}

fn factors(parts: &[(&str, usize)]) -> Vec<Factor> {
    parts.iter().map(|&(l, d)| Factor::new(l, d)).collect()
}

/// Completely positive map given by Kraus operators `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    in_dim: usize,
    out_factors: Vec<Factor>,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    /// Validates shapes and trace preservation.
    pub fn new(in_dim: usize, out_factors: Vec<Factor>, kraus: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(in_dim, out_factors, kraus, Tolerances::default().tp)
    }

    pub fn with_tolerance(
        in_dim: usize,
        out_factors: Vec<Factor>,
        kraus: Vec<CMatrix>,
        tp_tol: f64,
    ) -> Result<Self> {
        if in_dim == 0 || out_factors.is_empty() || out_factors.iter().any(|f| f.dim == 0) {
            return Err(Error::InvalidChannel("empty input or output space".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        }
        let out_dim: usize = out_factors.iter().map(|f| f.dim).product();
        for k in &kraus {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    out_dim,
                    in_dim
                )));
            }
        }
        let ch = Self {
            in_dim,
            out_factors,
            kraus,
        };
        let residual = ch.tp_residual();
        if residual > tp_tol {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (residual {residual:.3e})"
            )));
        }
        Ok(ch)
    }

    fn from_parts(in_dim: usize, out_factors: Vec<Factor>, kraus: Vec<CMatrix>) -> Self {
        debug_assert!(kraus.iter().all(|k| k.ncols() == in_dim));
        Self {
            in_dim,
            out_factors,
            kraus,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_parts(d, factors(&[("A", d)]), vec![identity(d)])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_factors.iter().map(|f| f.dim).product()
    }

    pub fn out_factors(&self) -> &[Factor] {
        &self.out_factors
    }

    pub fn out_dims(&self) -> Vec<usize> {
        self.out_factors.iter().map(|f| f.dim).collect()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `|| sum_k K_k^dagger K_k - I ||_F`.
    pub fn tp_residual(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        (acc - identity(self.in_dim)).norm()
    }

    /// Applies the map to an arbitrary operator (not necessarily a state).
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.out_dim(), self.out_dim());
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: rho.dim(),
            });
        }
        Ok(DensityOperator::from_matrix_unchecked(
            self.apply_matrix(rho.matrix()),
        ))
    }

    /// Normalized Choi matrix `(ch (x) id)(|Phi><Phi|)`, output factor first.
    pub fn choi(&self) -> ChoiMatrix {
        let (din, dout) = (self.in_dim, self.out_dim());
        // Columns are vec(K) with vec(K)[o*din + i] = K[(o, i)].
        let mut stacked = CMatrix::zeros(dout * din, self.kraus.len());
        for (col, k) in self.kraus.iter().enumerate() {
            for o in 0..dout {
                for i in 0..din {
                    stacked[(o * din + i, col)] = k[(o, i)];
                }
            }
        }
        let matrix = &stacked * stacked.adjoint() / c64(din as f64, 0.0);
        ChoiMatrix {
            in_dim: din,
            out_dim: dout,
            matrix,
        }
    }

    pub fn cptp_report(&self, tol: f64) -> CptpReport {
        self.choi().cptp_report(tol)
    }

    /// Canonical complement from the dilation `V|psi> = sum_k K_k|psi> (x) |k>_E`.
    pub fn complementary(&self) -> KrausChannel {
        let n = self.kraus.len();
        let kraus = (0..self.out_dim())
            .map(|j| {
                let mut f = CMatrix::zeros(n, self.in_dim);
                for (k, op) in self.kraus.iter().enumerate() {
                    for i in 0..self.in_dim {
                        f[(k, i)] = op[(j, i)];
                    }
                }
                f
            })
            .collect();
        Self::from_parts(self.in_dim, factors(&[("E", n)]), kraus)
    }

    /// `next o self`.
    pub fn then(&self, next: &KrausChannel) -> Result<KrausChannel> {
        if next.in_dim != self.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim(),
                found: next.in_dim,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        Ok(Self::from_parts(self.in_dim, next.out_factors.clone(), kraus))
    }

    /// Kraus decomposition read off a Choi matrix's spectrum.
    pub fn from_choi(choi: &ChoiMatrix, out_factors: Vec<Factor>, tol: f64) -> Result<Self> {
        let out_dim: usize = out_factors.iter().map(|f| f.dim).product();
        if out_dim != choi.out_dim {
            return Err(Error::DimensionMismatch {
                expected: choi.out_dim,
                found: out_dim,
            });
        }
        let defect = hermiticity_defect(&choi.matrix);
        if defect > tol {
            return Err(Error::NotHermitian(defect));
        }
        let h = (&choi.matrix + choi.matrix.adjoint()) * c64(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let din = choi.in_dim;
        let mut kraus = Vec::new();
        for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -tol {
                return Err(Error::NotCompletelyPositive(lambda));
            }
            if lambda <= tol {
                continue;
            }
            let scale = (din as f64 * lambda).sqrt();
            let v = eig.eigenvectors.column(idx);
            kraus.push(CMatrix::from_fn(out_dim, din, |o, i| v[o * din + i] * scale));
        }
        Self::with_tolerance(din, out_factors, kraus, tol.max(Tolerances::default().tp))
    }

    /// Channel obtained from an isometry `V: C^in -> (x) factors` by tracing out
    /// every factor not listed in `keep`.
    pub fn from_isometry(
        v: &CMatrix,
        all_factors: &[Factor],
        keep: &[usize],
    ) -> Result<KrausChannel> {
        let dims: Vec<usize> = all_factors.iter().map(|f| f.dim).collect();
        let total: usize = dims.iter().product();
        if v.nrows() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: v.nrows(),
            });
        }
        let kept: Vec<bool> = (0..dims.len()).map(|i| keep.contains(&i)).collect();
        let kept_dim: usize = dims.iter().zip(&kept).filter(|p| *p.1).map(|p| p.0).product();
        let traced_dim = total / kept_dim;
        let mut kraus = vec![CMatrix::zeros(kept_dim, v.ncols()); traced_dim];
        let mut digit = vec![0usize; dims.len()];
        for row in 0..total {
            let mut rem = row;
            for f in (0..dims.len()).rev() {
                digit[f] = rem % dims[f];
                rem /= dims[f];
            }
            let (mut k, mut t) = (0usize, 0usize);
            for f in 0..dims.len() {
                if kept[f] {
                    k = k * dims[f] + digit[f];
                } else {
                    t = t * dims[f] + digit[f];
                }
            }
            for col in 0..v.ncols() {
                kraus[t][(k, col)] = v[(row, col)];
            }
        }
        kraus.retain(|k| k.iter().any(|z| z.norm() > 0.0));
        let out: Vec<Factor> = all_factors
            .iter()
            .zip(&kept)
            .filter(|p| *p.1)
            .map(|p| p.0.clone())
            .collect();
        Self::new(v.ncols(), out, kraus)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ChannelDoc {
            in_dim: self.in_dim,
            out_factors: self.out_factors.clone(),
            kraus: self
                .kraus
                .iter()
                .map(|k| {
                    (0..k.nrows())
                        .map(|r| (0..k.ncols()).map(|c| [k[(r, c)].re, k[(r, c)].im]).collect())
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChannelDoc = serde_json::from_str(text)?;
        let mut kraus = Vec::with_capacity(doc.kraus.len());
        for rows in &doc.kraus {
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::InvalidChannel("ragged Kraus matrix".into()));
            }
            kraus.push(CMatrix::from_fn(nrows, ncols, |r, c| {
                c64(rows[r][c][0], rows[r][c][1])
            }));
        }
        Self::new(doc.in_dim, doc.out_factors, kraus)
    }
}

/// JSON layout: `{in_dim, out_factors: [{label, dim}], kraus: [[[re, im], ...], ...]}`
/// with each Kraus operator stored row by row.
#[derive(Serialize, Deserialize)]
struct ChannelDoc {
    in_dim: usize,
    out_factors: Vec<Factor>,
    kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Normalized Choi matrix on `out (x) in`, output index major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    in_dim: usize,
    out_dim: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    /// `(1/d) sum_ij map(|i><j|) (x) |i><j|` for a linear map given pointwise.
    pub fn from_map<F>(in_dim: usize, out_dim: usize, map: F) -> Self
    where
        F: Fn(&CMatrix) -> CMatrix,
    {
        let mut matrix = CMatrix::zeros(out_dim * in_dim, out_dim * in_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let img = map(&matrix_unit(in_dim, i, j));
                for a in 0..out_dim {
                    for b in 0..out_dim {
                        matrix[(a * in_dim + i, b * in_dim + j)] = img[(a, b)];
                    }
                }
            }
        }
        matrix /= c64(in_dim as f64, 0.0);
        Self {
            in_dim,
            out_dim,
            matrix,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_of_hermitian_part(&self.matrix)
    }

    /// Distance of the input marginal from `I/in_dim`.
    pub fn tp_residual(&self) -> f64 {
        let marginal = partial_trace(&self.matrix, &[self.out_dim, self.in_dim], &[1])
            .expect("Choi dimensions are consistent by construction");
        (marginal - identity(self.in_dim) / c64(self.in_dim as f64, 0.0)).norm()
    }

    pub fn cptp_report(&self, tol: f64) -> CptpReport {
        let min_eigenvalue = self.eigenvalues()[0];
        let tp_residual = self.tp_residual();
        let hermitian = hermiticity_defect(&self.matrix) <= tol;
        CptpReport {
            cptp: hermitian && min_eigenvalue >= -tol && tp_residual <= tol,
            min_eigenvalue,
            tp_residual,
        }
    }

    pub fn distance(&self, other: &ChoiMatrix) -> Result<f64> {
        if self.matrix.shape() != other.matrix.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: other.matrix.nrows(),
            });
        }
        Ok((&self.matrix - &other.matrix).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpReport {
    pub cptp: bool,
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
}

/// `true` iff the Choi matrix is PSD and trace preserving within `tol`.
pub fn is_cptp(choi: &ChoiMatrix, tol: f64) -> CptpReport {
    choi.cptp_report(tol)
}

/// Parameters `(d, p, c)` of the flagged depolarizing channel with
/// `sigma0 = c^2|e1><e1| + (1-c^2)|e1_perp><e1_perp|` and `sigma1 = |e1><e1|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdcParams {
    pub d: usize,
    pub p: f64,
    pub c: f64,
}

impl FdcParams {
    pub fn new(d: usize, p: f64, c: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: d,
            });
        }
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "p",
                value: p,
                domain: "[0, inf)",
            });
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::OutOfDomain {
                what: "c",
                value: c,
                domain: "[0, 1]",
            });
        }
        Ok(Self { d, p, c })
    }

    /// Flag overlap at the degradability threshold `c(p)`.
    pub fn at_threshold(d: usize, p: f64) -> Result<Self> {
        Self::new(d, p, crate::capacity::c_threshold(p)?)
    }

    pub fn sigma0(&self) -> CMatrix {
        diag2(self.c * self.c, 1.0 - self.c * self.c)
    }

    pub fn sigma1(&self) -> CMatrix {
        diag2(1.0, 0.0)
    }
}

fn diag2(a: f64, b: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(a, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(b, 0.0)])
}

fn check_p_range(p: f64, max: f64, domain: &'static str) -> Result<()> {
    let slack = Tolerances::default().num;
    if !(p >= -slack && p <= max + slack) {
        return Err(Error::OutOfDomain {
            what: "p",
            value: p,
            domain,
        });
    }
    Ok(())
}

/// Choi matrix of `rho -> (1-p) rho + p tr(rho) I/d`, for any real `p`.
pub fn depolarizing_choi(d: usize, p: f64) -> ChoiMatrix {
    let mixed = identity(d) / c64(d as f64, 0.0);
    ChoiMatrix::from_map(d, d, |x| x * c64(1.0 - p, 0.0) + &mixed * (x.trace() * p))
}

/// Depolarizing channel for `0 <= p <= d^2/(d^2-1)`.
pub fn make_depolarizing(d: usize, p: f64) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    let d2 = (d * d) as f64;
    check_p_range(p, d2 / (d2 - 1.0), "[0, d^2/(d^2-1)]")?;
    let p = p.max(0.0);
    if p > 1.0 {
        let tol = Tolerances::default().psd;
        return KrausChannel::from_choi(&depolarizing_choi(d, p), factors(&[("A", d)]), tol);
    }
    let mut kraus = vec![identity(d) * c64((1.0 - p).sqrt(), 0.0)];
    let w = c64((p / d as f64).sqrt(), 0.0);
    for i in 0..d {
        for j in 0..d {
            kraus.push(matrix_unit(d, i, j) * w);
        }
    }
    kraus.retain(|k| k.iter().any(|z| z.norm() > 0.0));
    KrausChannel::new(d, factors(&[("A", d)]), kraus)
}

/// `X -> (1-p) X (x) sigma0 + p tr(X) I/d (x) sigma1`, evaluated directly.
pub fn fdc_map(params: &FdcParams, x: &CMatrix) -> CMatrix {
    let d = params.d;
    let mixed = identity(d) / c64(d as f64, 0.0);
    tensor(x, &params.sigma0()) * c64(1.0 - params.p, 0.0)
        + tensor(&mixed, &params.sigma1()) * (x.trace() * params.p)
}

pub fn fdc_choi(params: &FdcParams) -> ChoiMatrix {
    ChoiMatrix::from_map(params.d, 2 * params.d, |x| fdc_map(params, x))
}

/// Smallest eigenvalue of `(1-p) sigma0 + p/d^2 sigma1`, the Choi block on
/// the maximally entangled subspace (the other block is `p/d^2 sigma1 >= 0`).
pub fn fdc_choi_condition(params: &FdcParams) -> f64 {
    let d2 = (params.d * params.d) as f64;
    let c2 = params.c * params.c;
    let e1 = (1.0 - params.p) * c2 + params.p / d2;
    let e1_perp = (1.0 - params.p) * (1.0 - c2);
    e1.min(e1_perp)
}

/// Flagged depolarizing channel on `[A:d, flag:2]`.
pub fn make_fdc(params: &FdcParams) -> Result<KrausChannel> {
    let FdcParams { d, p, c } = *params;
    let out = factors(&[("A", d), ("flag", 2)]);
    if p > 1.0 {
        let min = fdc_choi_condition(params);
        let tol = Tolerances::default().psd;
        if min < -tol {
            return Err(Error::NotCompletelyPositive(min));
        }
        return KrausChannel::from_choi(&fdc_choi(params), out, tol);
    }
    let e1 = CMatrix::from_column_slice(2, 1, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
    let e1_perp = CMatrix::from_column_slice(2, 1, &[c64(0.0, 0.0), c64(1.0, 0.0)]);
    let id = identity(d);
    let c2 = c * c;
    let mut kraus = vec![
        tensor(&id, &e1) * c64(((1.0 - p) * c2).sqrt(), 0.0),
        tensor(&id, &e1_perp) * c64(((1.0 - p) * (1.0 - c2)).sqrt(), 0.0),
    ];
    let w = c64((p / d as f64).sqrt(), 0.0);
    for i in 0..d {
        for j in 0..d {
            kraus.push(tensor(&matrix_unit(d, i, j), &e1) * w);
        }
    }
    kraus.retain(|k| k.iter().any(|z| z.norm() > 0.0));
    KrausChannel::new(d, out, kraus)
}

/// Flagged channel with pure flags `|e0>` (no error) and `|e1>` (depolarized),
/// `<e1|e0> = cos(theta/2)`.
pub fn make_pure_flag_fdc(d: usize, p: f64, theta: f64) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    check_p_range(p, 1.0, "[0, 1]")?;
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::OutOfDomain {
            what: "theta",
            value: theta,
            domain: "[0, pi]",
        });
    }
    let p = p.clamp(0.0, 1.0);
    let (s, co) = (theta / 2.0).sin_cos();
    let e1 = CMatrix::from_column_slice(2, 1, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
    let e0 = CMatrix::from_column_slice(2, 1, &[c64(co, 0.0), c64(s, 0.0)]);
    let mut kraus = vec![tensor(&identity(d), &e0) * c64((1.0 - p).sqrt(), 0.0)];
    let w = c64((p / d as f64).sqrt(), 0.0);
    for i in 0..d {
        for j in 0..d {
            kraus.push(tensor(&matrix_unit(d, i, j), &e1) * w);
        }
    }
    kraus.retain(|k| k.iter().any(|z| z.norm() > 0.0));
    KrausChannel::new(d, factors(&[("A", d), ("flag", 2)]), kraus)
}

/// Stinespring factors `[A:d, 1:2, 2:2, 3:d, 4:d, 5:2]`.
pub fn fdc_dilation_factors(d: usize) -> Vec<Factor> {
    factors(&[("A", d), ("1", 2), ("2", 2), ("3", d), ("4", d), ("5", 2)])
}

/// Isometry `V|psi> = sqrt(1-p)|psi>_A |sigma0>>_12 |Phi>_34 |0>_5
///                  + sqrt(p) |Phi>_A4 |e1>_1 |e1>_2 |psi>_3 |1>_5`,
/// with the purification `|sigma0>> = c|e1 e1> + sqrt(1-c^2)|e1_perp e1_perp>`.
pub fn fdc_stinespring_isometry(params: &FdcParams) -> Result<CMatrix> {
    let FdcParams { d, p, c } = *params;
    check_p_range(p, 1.0, "[0, 1]")?;
    let p = p.clamp(0.0, 1.0);
    let idx = |a: usize, f1: usize, f2: usize, s3: usize, s4: usize, s5: usize| {
        ((((a * 2 + f1) * 2 + f2) * d + s3) * d + s4) * 2 + s5
    };
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    let keep = (1.0 - p).sqrt() * inv_sqrt_d;
    let flip = p.sqrt() * inv_sqrt_d;
    let purification = [(0usize, c), (1usize, (1.0 - c * c).max(0.0).sqrt())];
    let mut v = CMatrix::zeros(8 * d * d * d, d);
    for j in 0..d {
        for &(f, amp) in &purification {
            for k in 0..d {
                v[(idx(j, f, f, k, k, 0), j)] += c64(keep * amp, 0.0);
            }
        }
        for k in 0..d {
            v[(idx(k, 0, 0, j, k, 1), j)] += c64(flip, 0.0);
        }
    }
    Ok(v)
}

/// Complement of the flagged channel obtained by tracing `A` and `1` out of
/// the Stinespring dilation; output factors `[E2:2, E3:d, E4:d, E5:2]`.
pub fn fdc_complementary_explicit(params: &FdcParams) -> Result<KrausChannel> {
    let v = fdc_stinespring_isometry(params)?;
    let mut all = fdc_dilation_factors(params.d);
    for f in all.iter_mut().skip(2) {
        f.label = format!("E{}", f.label);
    }
    KrausChannel::from_isometry(&v, &all, &[2, 3, 4, 5])
}

/// Degrading map `W: [A:d, flag:2] -> [E2, E3, E4, E5]`: measure the flag in
/// `{|e1>, |e1_perp>}`; on `e1` prepare `|e1_perp><e1_perp| (x) Phi (x) |0><0|`,
/// on `e1_perp` apply the explicit complement with parameters `(q, c')`.
pub fn degrading_map(params: &FdcParams) -> Result<KrausChannel> {
    let d = params.d;
    let dp = degrading_params(params.p, params.c)?;
    let inner = fdc_complementary_explicit(&FdcParams::new(d, dp.q, dp.c_prime)?)?;
    let omega: CVector = ket(2, 1).kronecker(&max_entangled(d)).kronecker(&ket(2, 0));
    let env_dim = 4 * d * d;
    let mut kraus = Vec::with_capacity(d + inner.kraus().len());
    for a in 0..d {
        let mut k = CMatrix::zeros(env_dim, 2 * d);
        for r in 0..env_dim {
            k[(r, a * 2)] = omega[r];
        }
        kraus.push(k);
    }
    for kt in inner.kraus() {
        let mut k = CMatrix::zeros(env_dim, 2 * d);
        for r in 0..env_dim {
            for a in 0..d {
                k[(r, a * 2 + 1)] = kt[(r, a)];
            }
        }
        kraus.push(k);
    }
    KrausChannel::new(2 * d, inner.out_factors().to_vec(), kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        frobenius_distance, projector, random_density, random_pure_state, random_state_vector,
        von_neumann_entropy,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Super-operator `S = sum_k conj(K) (x) K` acting on row-major vec(rho).
    fn superop(ch: &KrausChannel) -> CMatrix {
        let mut s = CMatrix::zeros(ch.out_dim() * ch.out_dim(), ch.in_dim() * ch.in_dim());
        for k in ch.kraus() {
            s += tensor(k, &k.map(|z| z.conj()));
        }
        s
    }

    fn vec_row_major(m: &CMatrix) -> CVector {
        CVector::from_iterator(
            m.nrows() * m.ncols(),
            (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]),
        )
    }

    #[test]
    fn depolarizing_endpoints() {
        let mut r = rng(1);
        let rho = random_density(3, &mut r);
        let id = make_depolarizing(3, 0.0).unwrap();
        assert!(frobenius_distance(id.apply(&rho).unwrap().matrix(), rho.matrix()) < 1e-14);
        let full = make_depolarizing(3, 1.0).unwrap();
        let mixed = DensityOperator::maximally_mixed(3);
        assert!(frobenius_distance(full.apply(&rho).unwrap().matrix(), mixed.matrix()) < 1e-14);
    }

    #[test]
    fn depolarizing_on_basis_state() {
        let ch = make_depolarizing(2, 0.5).unwrap();
        let zero = DensityOperator::pure(&ket(2, 0)).unwrap();
        let out = ch.apply(&zero).unwrap();
        assert!((out.matrix()[(0, 0)].re - 0.75).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_choi_spectrum() {
        // (1-p) + p/d^2 once, p/d^2 three times.
        let e = make_depolarizing(2, 0.4).unwrap().choi().eigenvalues();
        let want = [0.1, 0.1, 0.1, 0.7];
        for (g, w) in e.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn depolarizing_above_one() {
        let ok = is_cptp(&depolarizing_choi(2, 1.2), 1e-10);
        assert!(ok.cptp);
        assert!((ok.min_eigenvalue - 0.1).abs() < 1e-12);
        let bad = is_cptp(&depolarizing_choi(2, 1.4), 1e-10);
        assert!(!bad.cptp);
        assert!((bad.min_eigenvalue + 0.05).abs() < 1e-12);

        let ch = make_depolarizing(2, 1.2).unwrap();
        assert!(ch.cptp_report(1e-10).cptp);
        let mut r = rng(2);
        let rho = random_density(2, &mut r);
        let direct = rho.matrix() * c64(-0.2, 0.0) + identity(2) * c64(0.6, 0.0);
        assert!(frobenius_distance(ch.apply(&rho).unwrap().matrix(), &direct) < 1e-12);
        assert!(make_depolarizing(2, 1.4).is_err());
        assert!(make_depolarizing(2, -0.1).is_err());
    }

    #[test]
    fn apply_matches_superoperator() {
        let mut r = rng(3);
        for ch in [
            make_depolarizing(3, 0.3).unwrap(),
            make_fdc(&FdcParams::new(2, 0.2, 0.6).unwrap()).unwrap(),
            make_pure_flag_fdc(2, 0.3, 1.0).unwrap(),
        ] {
            let s = superop(&ch);
            let rho = random_density(ch.in_dim(), &mut r);
            let out = ch.apply(&rho).unwrap();
            let via_s = &s * vec_row_major(rho.matrix());
            assert!((vec_row_major(out.matrix()) - via_s).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let ch = make_depolarizing(2, 0.1).unwrap();
        let rho = DensityOperator::maximally_mixed(3);
        assert!(matches!(ch.apply(&rho), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identity_choi_is_bell_state() {
        let j = KrausChannel::identity(3).choi();
        let phi = projector(&max_entangled(3));
        assert!(frobenius_distance(j.matrix(), &phi) < 1e-14);
    }

    #[test]
    fn fdc_reduces_to_depolarizing() {
        let mut r = rng(4);
        for d in 2..5 {
            for &(p, c) in &[(0.1, 0.3), (0.45, 0.0), (0.8, 1.0), (0.3, 0.65)] {
                let fdc = make_fdc(&FdcParams::new(d, p, c).unwrap()).unwrap();
                let dep = make_depolarizing(d, p).unwrap();
                for _ in 0..50 {
                    let rho = random_density(d, &mut r);
                    let out = fdc.apply(&rho).unwrap();
                    let reduced = partial_trace(out.matrix(), &[d, 2], &[0]).unwrap();
                    let want = dep.apply(&rho).unwrap();
                    let worst = (reduced - want.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    assert!(worst <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn fdc_at_zero_noise_appends_sigma0() {
        let params = FdcParams::new(3, 0.0, 0.4).unwrap();
        let ch = make_fdc(&params).unwrap();
        let psi = random_pure_state(3, 9).unwrap();
        let want = tensor(psi.matrix(), &params.sigma0());
        assert!(frobenius_distance(ch.apply(&psi).unwrap().matrix(), &want) < 1e-14);
    }

    #[test]
    fn fdc_kraus_matches_direct_map() {
        let params = FdcParams::new(3, 0.35, 0.5).unwrap();
        let ch = make_fdc(&params).unwrap();
        assert!(ch.choi().distance(&fdc_choi(&params)).unwrap() < 1e-13);
    }

    #[test]
    fn fdc_with_orthogonal_flags_output_entropy() {
        // c = 0: blocks (1-p)psi (x) |1><1| and p I/d (x) |0><0| have orthogonal support.
        let params = FdcParams::new(2, 0.3, 0.0).unwrap();
        let ch = make_fdc(&params).unwrap();
        let psi = random_pure_state(2, 11).unwrap();
        let s = von_neumann_entropy(&ch.apply(&psi).unwrap());
        let expect = crate::linalg::binary_entropy(0.3).unwrap() + 0.3;
        assert!((s - expect).abs() < 1e-10);
    }

    #[test]
    fn fdc_mixed_flags_cptp_on_unit_square() {
        for &p in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            for &c in &[0.0, 0.3, 0.7, 1.0] {
                let ch = make_fdc(&FdcParams::new(3, p, c).unwrap()).unwrap();
                assert!(ch.cptp_report(1e-10).cptp);
            }
        }
    }

    #[test]
    fn fdc_above_one_requires_choi_condition() {
        // With c = 1 the flags coincide and the depolarizing range applies.
        let params = FdcParams::new(2, 1.2, 1.0).unwrap();
        assert!(fdc_choi_condition(&params) >= 0.0);
        let ch = make_fdc(&params).unwrap();
        assert!(ch.choi().distance(&fdc_choi(&params)).unwrap() < 1e-12);

        let params = FdcParams::new(2, 1.1, 0.9).unwrap();
        assert!(fdc_choi_condition(&params) < 0.0);
        assert!(!is_cptp(&fdc_choi(&params), 1e-10).cptp);
        assert!(matches!(make_fdc(&params), Err(Error::NotCompletelyPositive(_))));
    }

    #[test]
    fn fdc_choi_condition_matches_spectrum() {
        for &(p, c) in &[(0.3, 0.2), (1.05, 1.0), (1.2, 0.95), (1.0, 0.5)] {
            let params = FdcParams::new(3, p, c).unwrap();
            let min = fdc_choi(&params).eigenvalues()[0];
            let predicted = fdc_choi_condition(&params).min(0.0);
            assert!((min.min(0.0) - predicted).abs() < 1e-12, "p={p} c={c}: {min} vs {predicted}");
        }
    }

    #[test]
    fn pure_flags() {
        let mut r = rng(5);
        let d = 3;
        let same = make_pure_flag_fdc(d, 0.3, 0.0).unwrap();
        let dep = make_depolarizing(d, 0.3).unwrap();
        let rho = random_density(d, &mut r);
        let out = same.apply(&rho).unwrap();
        let reduced = partial_trace(out.matrix(), &[d, 2], &[0]).unwrap();
        assert!(frobenius_distance(&reduced, dep.apply(&rho).unwrap().matrix()) < 1e-12);
        let flag = partial_trace(out.matrix(), &[d, 2], &[1]).unwrap();
        assert!(frobenius_distance(&flag, &matrix_unit(2, 0, 0)) < 1e-12);

        // Orthogonal flags: reading the flag separates the two branches.
        let erasure = make_pure_flag_fdc(d, 0.3, std::f64::consts::PI).unwrap();
        let out = erasure.apply(&rho).unwrap();
        let branch_keep = tensor(&identity(d), &matrix_unit(2, 1, 1));
        let kept = &branch_keep * out.matrix() * &branch_keep;
        let want = tensor(rho.matrix(), &matrix_unit(2, 1, 1)) * c64(0.7, 0.0);
        assert!(frobenius_distance(&kept, &want) < 1e-12);

        for seed in 0..10u64 {
            let mut r = rng(seed);
            use rand::Rng;
            let d = r.random_range(2..5);
            let p: f64 = r.random();
            let theta = r.random::<f64>() * std::f64::consts::PI;
            assert!(make_pure_flag_fdc(d, p, theta).unwrap().tp_residual() < 1e-10);
        }
        assert!(make_pure_flag_fdc(2, 1.5, 0.3).is_err());
        assert!(make_pure_flag_fdc(2, 0.5, 4.0).is_err());
    }

    #[test]
    fn canonical_complement_of_identity_is_trivial() {
        let comp = KrausChannel::identity(3).complementary();
        assert_eq!(comp.out_dim(), 1);
        let mut r = rng(6);
        let rho = random_density(3, &mut r);
        let out = comp.apply(&rho).unwrap();
        assert!((out.matrix()[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn complement_entropy_identity() {
        let mut r = rng(7);
        let channels = [
            make_depolarizing(3, 0.4).unwrap(),
            make_fdc(&FdcParams::new(2, 0.1, 0.5).unwrap()).unwrap(),
            make_pure_flag_fdc(2, 0.2, 2.0).unwrap(),
        ];
        for ch in &channels {
            let comp = ch.complementary();
            for _ in 0..10 {
                let psi = DensityOperator::pure(&random_state_vector(ch.in_dim(), &mut r)).unwrap();
                let sb = von_neumann_entropy(&ch.apply(&psi).unwrap());
                let se = von_neumann_entropy(&comp.apply(&psi).unwrap());
                assert!((sb - se).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dilation_is_isometry_and_reproduces_fdc() {
        for d in 2..4 {
            let params = FdcParams::new(d, 0.27, 0.55).unwrap();
            let v = fdc_stinespring_isometry(&params).unwrap();
            assert!(frobenius_distance(&(v.adjoint() * &v), &identity(d)) < 1e-13);
            let system = KrausChannel::from_isometry(&v, &fdc_dilation_factors(d), &[0, 1]).unwrap();
            let direct = make_fdc(&params).unwrap();
            assert!(system.choi().distance(&direct.choi()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn explicit_complement_endpoints() {
        let d = 2;
        let mut r = rng(8);
        let rho = DensityOperator::pure(&random_state_vector(d, &mut r)).unwrap();
        let phi = projector(&max_entangled(d));

        let params = FdcParams::new(d, 0.0, 0.6).unwrap();
        let out = fdc_complementary_explicit(&params).unwrap().apply(&rho).unwrap();
        let want = tensor(&tensor(&params.sigma0(), &phi), &matrix_unit(2, 0, 0));
        assert!(frobenius_distance(out.matrix(), &want) < 1e-13);

        let params = FdcParams::new(d, 1.0, 0.6).unwrap();
        let out = fdc_complementary_explicit(&params).unwrap().apply(&rho).unwrap();
        let want = tensor(
            &tensor(&tensor(&matrix_unit(2, 0, 0), rho.matrix()), &(identity(d) / c64(d as f64, 0.0))),
            &matrix_unit(2, 1, 1),
        );
        assert!(frobenius_distance(out.matrix(), &want) < 1e-13);
    }

    #[test]
    fn explicit_complement_cross_terms() {
        // Oracle: the closed form with the sqrt(p(1-p)) c coherence written out.
        let (d, p, c) = (2, 0.3, 0.45);
        let params = FdcParams::new(d, p, c).unwrap();
        let mut r = rng(12);
        let psi = random_state_vector(d, &mut r);
        let rho = DensityOperator::pure(&psi).unwrap();
        let got = fdc_complementary_explicit(&params).unwrap().apply(&rho).unwrap();

        let phi = max_entangled(d);
        let mixed = identity(d) / c64(d as f64, 0.0);
        let e1 = matrix_unit(2, 0, 0);
        let mut want = tensor(&tensor(&params.sigma0(), &projector(&phi)), &matrix_unit(2, 0, 0))
            * c64(1.0 - p, 0.0)
            + tensor(&tensor(&tensor(&e1, &projector(&psi)), &mixed), &matrix_unit(2, 1, 1))
                * c64(p, 0.0);
        // tr_A(|psi>_A |Phi>_34 |0>_5 <Phi|_A4 <psi|_3 <1|_5)
        //   = sum_k conj(psi_k)/sqrt(d) |Phi>_34 <psi|_3 <k|_4 (x) |0><1|_5.
        let mut x = CMatrix::zeros(2 * d * d, 2 * d * d);
        for a in 0..d {
            for s3 in 0..d {
                let bra3 = psi[s3].conj();
                let ket34 = phi[a * d + a];
                for k in 0..d {
                    // |Phi>_34 amplitude for (a,a) times <psi|_3<k|_4 with k matching A index of bra.
                    let amp = psi[k] * ket34 * bra3 / (d as f64).sqrt();
                    let row = (a * d + a) * 2;
                    let col = (s3 * d + k) * 2 + 1;
                    // tr_A pairs |psi>_A index k with <Phi|_A4 index k.
                    x[(row, col)] += amp;
                }
            }
        }
        let coherence = (&x + x.adjoint()) * c64((p * (1.0 - p)).sqrt() * c, 0.0);
        want += tensor(&e1, &coherence);
        assert!(frobenius_distance(got.matrix(), &want) < 1e-12);
    }

    #[test]
    fn degrading_map_refuses_outside_region() {
        let params = FdcParams::new(2, 0.1, 0.7).unwrap();
        assert!(matches!(degrading_map(&params), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn degrading_map_at_zero_noise() {
        let params = FdcParams::new(2, 0.0, 0.5).unwrap();
        let w = degrading_map(&params).unwrap();
        let composed = make_fdc(&params).unwrap().then(&w).unwrap();
        let comp = fdc_complementary_explicit(&params).unwrap();
        assert!(composed.choi().distance(&comp.choi()).unwrap() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let ch = make_fdc(&FdcParams::new(2, 0.2, 0.3).unwrap()).unwrap();
        let text = ch.to_json().unwrap();
        let back = KrausChannel::from_json(&text).unwrap();
        assert_eq!(back.out_factors(), ch.out_factors());
        assert!(back.choi().distance(&ch.choi()).unwrap() < 1e-15);
    }

    #[test]
    fn json_rejects_non_trace_preserving() {
        let text = r#"{"in_dim": 1, "out_factors": [{"label": "A", "dim": 1}], "kraus": [[[[0.5, 0.0]]]]}"#;
        assert!(matches!(KrausChannel::from_json(text), Err(Error::InvalidChannel(_))));
        assert!(KrausChannel::from_json("{").is_err());
    }
}
