//! Numerical certificates: degradability via Choi matrices, unitary
//! covariance, optimizer checks of the maximally mixed input, Holevo
//! quantities and output-entropy cross-checks.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::capacity::{degrading_params, t_entropy, FlagPair};
use crate::channel::{degrading_map, fdc_complementary_explicit, make_fdc, FdcParams, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, frobenius_distance, identity, random_density, random_state_vector, random_unitary,
    tensor, von_neumann_entropy, CMatrix, DensityOperator, Tolerances,
};

/// Largest input dimension accepted by the degradability check by default.
pub const DEFAULT_MEMORY_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertTolerances {
    pub cert: f64,
}

/// Outcome of checking `W o Lambda = Lambda~` for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradabilityCertificate {
    pub d: usize,
    pub p: f64,
    pub c: f64,
    pub q: Option<f64>,
    pub c_prime: Option<f64>,
    /// Frobenius distance between the two Choi matrices.
    pub choi_residual: Option<f64>,
    pub certified: bool,
    pub reason: String,
    pub tolerances: CertTolerances,
    pub seed: Option<u64>,
}

impl DegradabilityCertificate {
    pub fn params(&self) -> FdcParams {
        FdcParams {
            d: self.d,
            p: self.p,
            c: self.c,
        }
    }
}

/// Checks the degrading map with the default memory cap.
pub fn verify_degradability(params: &FdcParams, tol: f64) -> Result<DegradabilityCertificate> {
    verify_degradability_capped(params, tol, DEFAULT_MEMORY_CAP)
}

/// Builds `W`, `Lambda` and the explicit complement and compares
/// `choi(W o Lambda)` with `choi(Lambda~)`. Inadmissible parameters yield an
/// uncertified certificate, not an error.
pub fn verify_degradability_capped(
    params: &FdcParams,
    tol: f64,
    memory_cap: usize,
) -> Result<DegradabilityCertificate> {
    if params.d > memory_cap {
        return Err(Error::MemoryCap {
            d: params.d,
            cap: memory_cap,
        });
    }
    let mut cert = DegradabilityCertificate {
        d: params.d,
        p: params.p,
        c: params.c,
        q: None,
        c_prime: None,
        choi_residual: None,
        certified: false,
        reason: String::new(),
        tolerances: CertTolerances { cert: tol },
        seed: None,
    };
    let dp = match degrading_params(params.p, params.c) {
        Ok(dp) => dp,
        Err(Error::Inadmissible(msg)) => {
            cert.reason = format!(
                "not certified by this construction: {msg}; whether another degrading map exists is unresolved"
            );
            return Ok(cert);
        }
        Err(e) => return Err(e),
    };
    cert.q = Some(dp.q);
    cert.c_prime = Some(dp.c_prime);

    let w = degrading_map(params)?;
    let lambda = make_fdc(params)?;
    let target = fdc_complementary_explicit(params)?;
    let residual = lambda.then(&w)?.choi().distance(&target.choi())?;
    cert.choi_residual = Some(residual);
    cert.certified = residual <= tol;
    cert.reason = if cert.certified {
        format!("degrading map reproduces the complement (residual {residual:.3e})")
    } else {
        format!("not certified by this construction: residual {residual:.3e} exceeds {tol:.1e}")
    };
    Ok(cert)
}

/// Largest `||ch(U rho U^dagger) - (U (x) I) ch(rho) (U^dagger (x) I)||_F` over
/// Haar-random `U` and random `rho`. The first output factor must be the
/// input system.
pub fn verify_covariance(ch: &KrausChannel, trials: usize, seed: u64) -> Result<f64> {
    let d = ch.in_dim();
    let first = ch.out_factors()[0].dim;
    if first != d {
        return Err(Error::InvalidChannel(format!(
            "first output factor has dimension {first}, input has {d}"
        )));
    }
    let rest = ch.out_dim() / d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_unitary(d, &mut rng);
        let rho = random_density(d, &mut rng);
        let lhs = ch.apply(&rho.conjugate(&u))?;
        let big = tensor(&u, &identity(rest));
        let rhs = &big * ch.apply(&rho)?.matrix() * big.adjoint();
        worst = worst.max(frobenius_distance(lhs.matrix(), &rhs));
    }
    Ok(worst)
}

/// `J(rho, ch) = S(ch(rho)) - S(ch~(rho))`.
pub fn coherent_information(ch: &KrausChannel, rho: &DensityOperator) -> Result<f64> {
    coherent_information_with(ch, &ch.complementary(), rho)
}

fn coherent_information_with(
    ch: &KrausChannel,
    comp: &KrausChannel,
    rho: &DensityOperator,
) -> Result<f64> {
    Ok(von_neumann_entropy(&ch.apply(rho)?) - von_neumann_entropy(&comp.apply(rho)?))
}

/// `I(rho, ch) = S(rho) + S(ch(rho)) - S(ch~(rho))`.
pub fn mutual_information(ch: &KrausChannel, rho: &DensityOperator) -> Result<f64> {
    Ok(von_neumann_entropy(rho) + coherent_information(ch, rho)?)
}

#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub best_state: DensityOperator,
    pub best_value: f64,
    /// Objective evaluations across all restarts.
    pub iterations: usize,
    pub distance_to_maximally_mixed: f64,
    /// Value of the objective at `I/d`, for reference.
    pub value_at_maximally_mixed: f64,
    pub restarts: usize,
    /// Whether the final polish met the simplex tolerances.
    pub converged: bool,
}

/// Smallest restart count used by the optimizers.
pub const MIN_RESTARTS: usize = 8;

/// Multi-restart Nelder-Mead maximization of the coherent information.
pub fn maximize_coherent_info(
    ch: &KrausChannel,
    restarts: usize,
    seed: u64,
) -> Result<OptimizationReport> {
    let comp = ch.complementary();
    maximize_over_states(ch.in_dim(), restarts, seed, |rho| {
        coherent_information_with(ch, &comp, rho)
    })
}

/// Multi-restart Nelder-Mead maximization of the mutual information.
pub fn maximize_mutual_info(
    ch: &KrausChannel,
    restarts: usize,
    seed: u64,
) -> Result<OptimizationReport> {
    let comp = ch.complementary();
    maximize_over_states(ch.in_dim(), restarts, seed, |rho| {
        Ok(von_neumann_entropy(rho) + coherent_information_with(ch, &comp, rho)?)
    })
}

/// `rho = G G^dagger / tr(G G^dagger)` with `G` read from `2 d^2` reals.
fn state_from_params(d: usize, x: &[f64]) -> DensityOperator {
    let g = CMatrix::from_fn(d, d, |r, c| {
        let k = 2 * (r * d + c);
        c64(x[k], x[k + 1])
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = if tr > 0.0 { m / c64(tr, 0.0) } else { identity(d) / c64(d as f64, 0.0) };
    DensityOperator::from_matrix_unchecked(m)
}

fn maximize_over_states<F>(
    d: usize,
    restarts: usize,
    seed: u64,
    objective: F,
) -> Result<OptimizationReport>
where
    F: Fn(&DensityOperator) -> Result<f64>,
{
    if d > DEFAULT_MEMORY_CAP {
        return Err(Error::MemoryCap {
            d,
            cap: DEFAULT_MEMORY_CAP,
        });
    }
    let n = 2 * d * d;
    let restarts = restarts.max(MIN_RESTARTS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Objective errors cannot occur for valid dimensions; treat them as the
    // worst possible value so the simplex moves away.
    let f = |x: &[f64]| -> f64 {
        objective(&state_from_params(d, x)).map_or(f64::INFINITY, |v| -v)
    };
    let settings = NelderMead::default();
    let mut evals = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..restarts {
        let x0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let run = settings.minimize(&f, &x0, 0.5);
        evals += run.evals;
        if best.as_ref().is_none_or(|b| run.value < b.1) {
            best = Some((run.x, run.value));
        }
    }
    let (mut x, mut value) = best.expect("at least one restart");
    let mut converged = false;
    // Restart from the incumbent with a fresh, smaller simplex until it
    // stops improving; this undoes premature simplex collapse.
    for _ in 0..50 {
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3) * 0.1;
        let run = settings.minimize(&f, &x, scale);
        evals += run.evals;
        let improved = run.value < value - 1e-15;
        if run.value <= value {
            x = run.x;
            value = run.value;
        }
        converged = run.converged;
        if !improved {
            break;
        }
    }
    let best_state = state_from_params(d, &x);
    let mixed = DensityOperator::maximally_mixed(d);
    Ok(OptimizationReport {
        distance_to_maximally_mixed: frobenius_distance(best_state.matrix(), mixed.matrix()),
        value_at_maximally_mixed: objective(&mixed)?,
        best_value: -value,
        best_state,
        iterations: evals,
        restarts,
        converged,
    })
}

struct NelderMead {
    max_evals: usize,
    ftol: f64,
    xtol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 40_000,
            ftol: 1e-14,
            xtol: 1e-9,
        }
    }
}

struct NmResult {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

impl NelderMead {
    /// Dimension-adaptive coefficients (Gao and Han).
    fn minimize<F: Fn(&[f64]) -> f64>(&self, f: &F, x0: &[f64], step: f64) -> NmResult {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
        let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
        simplex.push(DVector::from_column_slice(x0));
        for i in 0..n {
            let mut v = DVector::from_column_slice(x0);
            v[i] += step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v.as_slice())).collect();
        let mut evals = n + 1;
        let mut converged = false;
        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let fspread = values[n] - values[0];
            let xspread = simplex[1..]
                .iter()
                .map(|v| (v - &simplex[0]).amax())
                .fold(0.0, f64::max);
            if fspread <= self.ftol && xspread <= self.xtol {
                converged = true;
                break;
            }

            let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, v| acc + v) / nf;
            let worst = simplex[n].clone();
            let reflected = &centroid + (&centroid - &worst) * alpha;
            let fr = f(reflected.as_slice());
            evals += 1;
            if fr < values[0] {
                let expanded = &centroid + (&reflected - &centroid) * beta;
                let fe = f(expanded.as_slice());
                evals += 1;
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
                continue;
            }
            let (candidate, fc) = if fr < values[n] {
                let oc = &centroid + (&reflected - &centroid) * gamma;
                let v = f(oc.as_slice());
                (oc, v)
            } else {
                let ic = &centroid - (&centroid - &worst) * gamma;
                let v = f(ic.as_slice());
                (ic, v)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = candidate;
                values[n] = fc;
                continue;
            }
            let best = simplex[0].clone();
            for i in 1..=n {
                simplex[i] = &best + (&simplex[i] - &best) * delta;
                values[i] = f(simplex[i].as_slice());
            }
            evals += n;
        }
        let i = (0..=n)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("simplex is non-empty");
        NmResult {
            x: simplex[i].as_slice().to_vec(),
            value: values[i],
            evals,
            converged,
        }
    }
}

/// `S(sum p_i rho_i) - sum p_i S(rho_i)`.
pub fn holevo_chi(ensemble: &[(f64, DensityOperator)]) -> Result<f64> {
    let Some((_, first)) = ensemble.first() else {
        return Err(Error::InvalidEnsemble("empty ensemble".into()));
    };
    let d = first.dim();
    let mut total = 0.0;
    let mut avg = CMatrix::zeros(d, d);
    let mut mean_entropy = 0.0;
    for (p, rho) in ensemble {
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::InvalidEnsemble(format!("probability {p} is negative")));
        }
        if rho.dim() != d {
            return Err(Error::InvalidEnsemble(format!(
                "states of dimension {d} and {} mixed",
                rho.dim()
            )));
        }
        total += p;
        avg += rho.matrix() * c64(*p, 0.0);
        mean_entropy += p * von_neumann_entropy(rho);
    }
    if (total - 1.0).abs() > Tolerances::default().num {
        return Err(Error::InvalidEnsemble(format!("probabilities sum to {total}")));
    }
    let chi = von_neumann_entropy(&DensityOperator::from_matrix_unchecked(avg)) - mean_entropy;
    Ok(chi.max(0.0))
}

/// Equal-weight ensemble of at least `count` Haar-distributed pure states,
/// drawn as the columns of Haar-random unitaries so that each batch of `d`
/// states averages to exactly `I/d`.
pub fn haar_ensemble(d: usize, count: usize, seed: u64) -> Result<Vec<(f64, DensityOperator)>> {
    if d == 0 || count == 0 {
        return Err(Error::InvalidEnsemble("empty ensemble".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batches = count.div_ceil(d);
    let weight = 1.0 / (batches * d) as f64;
    let mut out = Vec::with_capacity(batches * d);
    for _ in 0..batches {
        let u = random_unitary(d, &mut rng);
        for col in 0..d {
            out.push((weight, DensityOperator::pure(&u.column(col).into_owned())?));
        }
    }
    Ok(out)
}

/// Largest `|S(Lambda(psi)) - t(p, d)|` over random pure inputs.
pub fn cross_check_t(params: &FdcParams, trials: usize, seed: u64) -> Result<f64> {
    let ch = make_fdc(params)?;
    let t = t_entropy(params.p, params.d, &FlagPair::diagonal(params.c)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let psi = DensityOperator::pure(&random_state_vector(params.d, &mut rng))?;
        worst = worst.max((von_neumann_entropy(&ch.apply(&psi)?) - t).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{c1_capacity, c_threshold, ce_capacity, q_fdc};
    use crate::channel::{make_depolarizing, Factor};
    use crate::linalg::{ket, matrix_unit};

    #[test]
    fn certificate_inside_region() {
        let cert = verify_degradability(&FdcParams::new(2, 0.1, 0.5).unwrap(), 1e-10).unwrap();
        assert!(cert.certified, "{cert:?}");
        assert!(cert.choi_residual.unwrap() <= 1e-10);
    }

    #[test]
    fn certificate_refused_above_threshold() {
        let cert = verify_degradability(&FdcParams::new(2, 0.1, 0.7).unwrap(), 1e-9).unwrap();
        assert!(!cert.certified);
        assert!(cert.reason.contains("c'^2"), "{}", cert.reason);
        assert!(cert.reason.contains("not certified by this construction"));
        assert!(cert.choi_residual.is_none());
    }

    #[test]
    fn certificate_at_boundary() {
        let params = FdcParams::at_threshold(3, 0.2).unwrap();
        assert!((params.c - (0.6f64 / 1.6).sqrt()).abs() < 1e-15);
        let cert = verify_degradability(&params, 1e-9).unwrap();
        assert!(cert.certified, "{cert:?}");
    }

    #[test]
    fn certificate_respects_memory_cap() {
        let params = FdcParams::new(7, 0.1, 0.2).unwrap();
        assert!(matches!(
            verify_degradability(&params, 1e-9),
            Err(Error::MemoryCap { d: 7, cap: 6 })
        ));
        assert!(matches!(
            verify_degradability_capped(&FdcParams::new(3, 0.1, 0.2).unwrap(), 1e-9, 2),
            Err(Error::MemoryCap { .. })
        ));
    }

    #[test]
    fn certificate_json_fields() {
        let cert = verify_degradability(&FdcParams::new(2, 0.2, 0.3).unwrap(), 1e-9).unwrap();
        let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
        for key in ["d", "p", "c", "q", "c_prime", "choi_residual", "certified", "reason", "tolerances", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn covariance_holds_for_constructors() {
        let fdc = make_fdc(&FdcParams::new(2, 0.3, 0.4).unwrap()).unwrap();
        assert!(verify_covariance(&fdc, 20, 1).unwrap() <= 1e-10);
        let dc = make_depolarizing(3, 0.5).unwrap();
        assert!(verify_covariance(&dc, 20, 2).unwrap() <= 1e-10);
    }

    #[test]
    fn covariance_negative_control() {
        // Identity on span{|0>, |1>}, the rest of the space dumped onto |0>.
        let d = 4;
        let mut kraus = vec![matrix_unit(d, 0, 0) + matrix_unit(d, 1, 1)];
        for j in 2..d {
            kraus.push(matrix_unit(d, 0, j));
        }
        let ch = KrausChannel::new(d, vec![Factor::new("A", d)], kraus).unwrap();
        assert!(verify_covariance(&ch, 20, 3).unwrap() > 0.1);
    }

    #[test]
    fn covariance_rejects_bad_layout() {
        let ch = make_depolarizing(2, 0.3).unwrap().complementary();
        assert!(verify_covariance(&ch, 2, 0).is_err());
    }

    #[test]
    fn optimizer_on_identity() {
        let id = KrausChannel::identity(2);
        let r = maximize_coherent_info(&id, 8, 5).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-8);
        assert!(r.distance_to_maximally_mixed < 1e-3);
        let r = maximize_mutual_info(&id, 8, 5).unwrap();
        assert!((r.best_value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn optimizer_reaches_closed_form() {
        let params = FdcParams::new(2, 0.1, 2.0 / 3.0).unwrap();
        let ch = make_fdc(&params).unwrap();
        let r = maximize_coherent_info(&ch, 8, 11).unwrap();
        assert!((r.best_value - q_fdc(2, 0.1).unwrap()).abs() < 1e-5, "{}", r.best_value);
        assert!(r.distance_to_maximally_mixed <= 1e-3, "{}", r.distance_to_maximally_mixed);
        assert!(r.best_value >= r.value_at_maximally_mixed - 1e-6);

        let flags = FlagPair::diagonal(2.0 / 3.0).unwrap();
        let r = maximize_mutual_info(&ch, 8, 12).unwrap();
        assert!((r.best_value - ce_capacity(2, 0.1, &flags).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn optimizer_on_constant_channel() {
        let ch = make_fdc(&FdcParams::new(2, 1.0, 0.3).unwrap()).unwrap();
        let r = maximize_mutual_info(&ch, 8, 13).unwrap();
        assert!(r.best_value.abs() < 1e-8);
    }

    #[test]
    fn holevo_basics() {
        let zero = DensityOperator::pure(&ket(2, 0)).unwrap();
        let one = DensityOperator::pure(&ket(2, 1)).unwrap();
        assert_eq!(holevo_chi(&[(1.0, zero.clone())]).unwrap(), 0.0);
        let chi = holevo_chi(&[(0.5, zero.clone()), (0.5, one.clone())]).unwrap();
        assert!((chi - 1.0).abs() < 1e-12);
        assert!(holevo_chi(&[]).is_err());
        assert!(holevo_chi(&[(0.4, zero.clone()), (0.4, one)]).is_err());
        let three = DensityOperator::maximally_mixed(3);
        assert!(holevo_chi(&[(0.5, zero), (0.5, three)]).is_err());
    }

    #[test]
    fn holevo_of_covariant_ensemble() {
        let (d, p, c) = (2, 0.1, 2.0 / 3.0);
        let ch = make_fdc(&FdcParams::new(d, p, c).unwrap()).unwrap();
        let ensemble: Vec<_> = haar_ensemble(d, 1000, 21)
            .unwrap()
            .into_iter()
            .map(|(w, rho)| (w, ch.apply(&rho).unwrap()))
            .collect();
        let chi = holevo_chi(&ensemble).unwrap();
        let c1 = c1_capacity(d, p, &FlagPair::diagonal(c).unwrap()).unwrap();
        assert!((chi - c1).abs() < 2e-3, "{chi} vs {c1}");
        assert!(chi <= (2 * d) as f64);
    }

    #[test]
    fn t_cross_checks() {
        let params = FdcParams::new(2, 0.1, 2.0 / 3.0).unwrap();
        assert!(cross_check_t(&params, 20, 1).unwrap() <= 1e-10);
        let params = FdcParams::new(3, 0.0, 0.4).unwrap();
        assert!(cross_check_t(&params, 5, 1).unwrap() <= 1e-12);
        let params = FdcParams::new(4, 0.35, 0.2).unwrap();
        assert!(cross_check_t(&params, 20, 2).unwrap() <= 1e-10);
    }

    #[test]
    fn certificate_grid_small() {
        for p in [0.05, 0.25, 0.45] {
            let cp = c_threshold(p).unwrap();
            for c in [0.0, cp / 2.0, cp] {
                let cert = verify_degradability(&FdcParams::new(2, p, c).unwrap(), 1e-9).unwrap();
                assert!(cert.certified, "{cert:?}");
            }
            let bad = FdcParams::new(2, p, (cp + 0.05).min(1.0)).unwrap();
            assert!(!verify_degradability(&bad, 1e-9).unwrap().certified);
        }
    }
}
