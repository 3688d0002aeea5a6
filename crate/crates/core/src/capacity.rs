//! Closed-form capacities and bounds for the flagged depolarizing channel.
//!
//! All logarithms are base 2, so values are in bits (qubits for quantum
//! capacities). `eta(x) = -x log2 x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{binary_entropy, c64, eta, matrix_entropy, CMatrix, Tolerances};

/// The two flag states: `sigma0` marks an untouched input, `sigma1` a
/// depolarized one.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagPair {
    sigma0: CMatrix,
    sigma1: CMatrix,
}

impl FlagPair {
    /// `sigma0 = diag(c^2, 1-c^2)`, `sigma1 = |e1><e1|`.
    pub fn diagonal(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::OutOfDomain {
                what: "c",
                value: c,
                domain: "[0, 1]",
            });
        }
        Ok(Self {
            sigma0: diag2(c * c, 1.0 - c * c),
            sigma1: diag2(1.0, 0.0),
        })
    }

    /// Pure flags with `<e1|e0> = cos(theta/2)`.
    pub fn pure(theta: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::OutOfDomain {
                what: "theta",
                value: theta,
                domain: "[0, pi]",
            });
        }
        let (s, c) = (theta / 2.0).sin_cos();
        let sigma0 = CMatrix::from_row_slice(
            2,
            2,
            &[c64(c * c, 0.0), c64(c * s, 0.0), c64(c * s, 0.0), c64(s * s, 0.0)],
        );
        Ok(Self {
            sigma0,
            sigma1: diag2(1.0, 0.0),
        })
    }

    pub fn sigma0(&self) -> &CMatrix {
        &self.sigma0
    }

    pub fn sigma1(&self) -> &CMatrix {
        &self.sigma1
    }

    /// `S((1-p) sigma0 + p sigma1)`, the flag entropy of the averaged output.
    pub fn mixture_entropy(&self, p: f64) -> f64 {
        matrix_entropy(&(&self.sigma0 * c64(1.0 - p, 0.0) + &self.sigma1 * c64(p, 0.0)))
    }
}

fn diag2(a: f64, b: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(a, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(b, 0.0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    QFdc,
    F1,
    F2,
    QLower,
    QPureFlag,
    Conv,
}

impl BoundName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::QFdc => "q_fdc",
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::QLower => "q_lower",
            Self::QPureFlag => "q_pure_flag",
            Self::Conv => "conv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub name: BoundName,
    pub d: usize,
    pub p: f64,
    pub value: f64,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    Ok(())
}

/// Checks `lo <= p <= hi` up to `tau_num` and returns `p` clamped into range.
fn check_p(p: f64, lo: f64, hi: f64, domain: &'static str) -> Result<f64> {
    let slack = Tolerances::default().num;
    if !(p >= lo - slack && p <= hi + slack) {
        return Err(Error::OutOfDomain {
            what: "p",
            value: p,
            domain,
        });
    }
    Ok(p.clamp(lo, hi))
}

fn check_degradable_p(p: f64) -> Result<f64> {
    if p > 0.5 + Tolerances::default().num {
        return Err(Error::OutsideDegradableRegion(p));
    }
    check_p(p, 0.0, 0.5, "[0, 1/2]")
}

/// Output entropy of a pure input: `S((1-p) psi (x) sigma0 + p I/dim (x) sigma1)`.
pub fn t_entropy(p: f64, dim: usize, flags: &FlagPair) -> Result<f64> {
    check_dim(dim)?;
    let p = check_p(p, 0.0, 1.0, "[0, 1]")?;
    let n = dim as f64;
    let w1 = (n * (1.0 - p) + p) / n;
    let w2 = p * (n - 1.0) / n;
    let block = flags.sigma0() * c64(1.0 - p, 0.0) + flags.sigma1() * c64(p / n, 0.0);
    let inner = if w1 > 0.0 {
        w1 * matrix_entropy(&(block / c64(w1, 0.0)))
    } else {
        0.0
    };
    Ok(binary_entropy(w1)? + w2 * (n - 1.0).log2() + inner + w2 * matrix_entropy(flags.sigma1()))
}

/// Product-state classical capacity.
pub fn c1_capacity(d: usize, p: f64, flags: &FlagPair) -> Result<f64> {
    let t = t_entropy(p, d, flags)?;
    Ok((d as f64).log2() + flags.mixture_entropy(p) - t)
}

/// Entanglement-assisted classical capacity.
pub fn ce_capacity(d: usize, p: f64, flags: &FlagPair) -> Result<f64> {
    let t = t_entropy(p, d * d, flags)?;
    Ok(2.0 * (d as f64).log2() + flags.mixture_entropy(p) - t)
}

/// Largest flag overlap `c(p) = sqrt((1-2p)/(2-2p))` for which the flagged
/// channel is degradable.
pub fn c_threshold(p: f64) -> Result<f64> {
    let p = check_degradable_p(p)?;
    Ok(((1.0 - 2.0 * p) / (2.0 - 2.0 * p)).sqrt())
}

/// Quantum capacity of the flagged channel at `c = c(p)`, an upper bound on
/// the depolarizing channel's quantum capacity.
pub fn q_fdc(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    let p = check_degradable_p(p)?;
    let n2 = (d * d) as f64;
    Ok((d as f64).log2() + eta(0.5)? - eta(0.5 - (n2 - 1.0) * p / n2)? - (n2 - 1.0) * eta(p / n2)?)
}

/// Coherent information at `I/d`: `log d + S((1-p) sigma0 + p sigma1) - t(p, d^2)`.
/// It is the quantum capacity whenever the flagged channel is degradable.
pub fn mixed_output_coherent_info(d: usize, p: f64, flags: &FlagPair) -> Result<f64> {
    check_dim(d)?;
    Ok((d as f64).log2() + flags.mixture_entropy(p) - t_entropy(p, d * d, flags)?)
}

/// `q_fdc` evaluated through the t-function with flags at `c(p)`.
pub fn q_fdc_via_t(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    mixed_output_coherent_info(d, p, &FlagPair::diagonal(c_threshold(p)?)?)
}

/// Coherent information of the depolarizing channel at `I/d`. Negative
/// values are returned unclipped.
pub fn q_lower(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    let p = check_p(p, 0.0, 1.0, "[0, 1]")?;
    let n2 = (d * d) as f64;
    Ok((d as f64).log2() - eta(1.0 - p + p / n2)? - (n2 - 1.0) * eta(p / n2)?)
}

/// Damping strength of the multi-level amplitude damping channel whose
/// unitary twirl is the depolarizing channel with parameter `p`.
pub fn f1_gamma(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    let p = check_p(p, 0.0, 1.0, "[0, 1]")?;
    let n = d as f64;
    let fidelity = 1.0 - p * (n * n - 1.0) / (n * n);
    let gamma = 2.0 * n / ((n - 1.0) * (n - 1.0))
        * (fidelity.sqrt() - (1.0 - p * (n * n - 1.0) / (2.0 * n)));
    let slack = Tolerances::default().num;
    if !(-slack..=1.0 + slack).contains(&gamma) {
        return Err(Error::OutOfDomain {
            what: "gamma",
            value: gamma,
            domain: "[0, 1]",
        });
    }
    Ok(gamma.clamp(0.0, 1.0))
}

/// Degradable-extension bound from multi-level amplitude damping: the
/// coherent information of `A_gamma` at `I/d`.
pub fn f1_bound(d: usize, p: f64) -> Result<f64> {
    let g = f1_gamma(d, p)?;
    let n = d as f64;
    Ok(eta((1.0 + (n - 1.0) * g) / n)? + (n - 1.0) * eta((1.0 - g) / n)?
        - eta(1.0 - (n - 1.0) * g / n)?
        - (n - 1.0) * eta(g / n)?)
}

/// Bound obtained from the anti-degradable point `p = d/(2(d+1))`; affine in
/// `p` and negative beyond that point.
pub fn f2_bound(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    if !p.is_finite() || p < -Tolerances::default().num {
        return Err(Error::OutOfDomain {
            what: "p",
            value: p,
            domain: "[0, inf)",
        });
    }
    let n = d as f64;
    Ok((1.0 - 2.0 * p * (n + 1.0) / n) * n.log2())
}

/// Quantum capacity of the pure-flag channel with `cos(theta) = 2c^2 - 1`,
/// valid while `c^2 <= (1-2p)/(2-2p)`. At `p = 0` the channel is an isometry
/// and every `theta` is accepted.
pub fn q_pure_flag(d: usize, p: f64, theta: f64) -> Result<f64> {
    check_dim(d)?;
    let p = check_degradable_p(p)?;
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::OutOfDomain {
            what: "theta",
            value: theta,
            domain: "[0, pi]",
        });
    }
    let cos = theta.cos();
    let c2 = (1.0 + cos) / 2.0;
    let limit = (1.0 - 2.0 * p) / (2.0 - 2.0 * p);
    if p > 0.0 && c2 > limit + Tolerances::default().num {
        return Err(Error::Inadmissible(format!(
            "c^2 = {c2} exceeds (1-2p)/(2-2p) = {limit}"
        )));
    }
    let n2 = (d * d) as f64;
    let r1 = (-2.0 * (p - 1.0) * p * cos + 2.0 * (p - 1.0) * p + 1.0).max(0.0).sqrt();
    let disc = n2 * n2 * p * p - 2.0 * n2 * n2 * p + n2 * n2 - 2.0 * n2 * p * p * cos
        + 2.0 * n2 * p * cos
        + p * p;
    let r2 = disc.max(0.0).sqrt();
    let base = n2 * (1.0 - p) + p;
    Ok((d as f64).log2() + eta((1.0 - r1) / 2.0)? + eta((1.0 + r1) / 2.0)?
        - eta((base - r2) / (2.0 * n2))?
        - eta((base + r2) / (2.0 * n2))?
        - (n2 - 1.0) * eta(p / n2)?)
}

/// Large-`d` limit of `q_fdc - q_lower`.
pub fn delta_gap(p: f64) -> Result<f64> {
    let p = check_p(p, 0.0, 0.5, "[0, 1/2]")?;
    Ok(eta(0.5)? - eta(0.5 - p)? + eta(1.0 - p)?)
}

/// Parameters `(q, c')` of the degrading map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradingParams {
    pub q: f64,
    pub c_prime: f64,
    /// Unclamped `c'^2`, kept for diagnostics.
    pub c_prime_sq: f64,
}

/// `q = p/((1-p)(1-c^2))`, `c'^2 = c^2(1-p)/(1-2p-c^2+pc^2)`; refuses
/// unless both lie in `[0, 1]`.
pub fn degrading_params(p: f64, c: f64) -> Result<DegradingParams> {
    let slack = Tolerances::default().num;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Inadmissible(format!("p = {p} must lie in [0, 1)")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Inadmissible(format!("c = {c} must lie in [0, 1]")));
    }
    let c2 = c * c;
    let den_q = (1.0 - p) * (1.0 - c2);
    if den_q <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "(1-p)(1-c^2) = {den_q} vanishes at p = {p}, c = {c}"
        )));
    }
    let q = p / den_q;
    let c_prime_sq = if c2 == 0.0 {
        0.0
    } else {
        let den_c = 1.0 - 2.0 * p - c2 + p * c2;
        if den_c <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "1-2p-c^2+pc^2 = {den_c} is not positive at p = {p}, c = {c}"
            )));
        }
        c2 * (1.0 - p) / den_c
    };
    if q > 1.0 + slack {
        return Err(Error::Inadmissible(format!("q = {q} > 1 at p = {p}, c = {c}")));
    }
    if c_prime_sq > 1.0 + slack {
        return Err(Error::Inadmissible(format!(
            "c'^2 = {c_prime_sq} > 1 at p = {p}, c = {c}"
        )));
    }
    Ok(DegradingParams {
        q: q.clamp(0.0, 1.0),
        c_prime: c_prime_sq.clamp(0.0, 1.0).sqrt(),
        c_prime_sq,
    })
}
