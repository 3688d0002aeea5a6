use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use flagcap::capacity::mixed_output_coherent_info;
use flagcap::{
    bounds_table, c_threshold, ce_capacity, cross_check_t, gap_table, is_cptp, make_depolarizing,
    make_fdc, make_pure_flag_fdc, maximize_coherent_info, maximize_mutual_info, uniform_grid,
    verify_covariance, verify_degradability_capped, DegradabilityCertificate, Error, FdcParams,
    FlagPair, KrausChannel, OptimizationReport,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::output::{bounds_csv, emit, gap_inset_csv, SCHEMA_VERSION};
use crate::Failure;

const COVARIANCE_TRIALS: usize = 20;
const T_TRIALS: usize = 20;
/// Residual allowed for the covariance and output-entropy checks.
const CHECK_TOL: f64 = 1e-10;

fn to_json(value: &impl Serialize) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn bounds(cfg: &RunConfig) -> Result<(), Failure> {
    let d = cfg.single_d(2)?;
    let grid = uniform_grid(cfg.p_min, cfg.p_max, cfg.steps).map_err(anyhow::Error::from)?;
    let rows = bounds_table(d, &grid).map_err(anyhow::Error::from)?;
    let text = match cfg.format {
        Format::Csv => bounds_csv(&rows),
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "bounds",
            "d": d,
            "conv_clipped_at_zero": true,
            "rows": rows,
        }))?,
    };
    emit(cfg.output_path.as_deref(), &text)?;
    Ok(())
}

#[derive(Serialize)]
struct CheckedCertificate {
    expected_certified: bool,
    #[serde(flatten)]
    certificate: DegradabilityCertificate,
}

fn expected_certified(p: f64, c: f64) -> bool {
    c_threshold(p).is_ok_and(|cp| c <= cp + 1e-12)
}

pub fn verify(cfg: &RunConfig) -> Result<(), Failure> {
    let d = cfg.single_d(2)?;
    if d > cfg.memory_cap {
        return Err(anyhow!(
            "d = {d} exceeds the memory cap {} (raise it with --memory-cap)",
            cfg.memory_cap
        )
        .into());
    }
    let mut points = Vec::new();
    if cfg.p.is_some() || cfg.c.is_some() {
        let p = cfg.p.unwrap_or(0.1);
        let c = match cfg.c {
            Some(c) => c,
            None => c_threshold(p).context("no --c given and p has no degradable threshold")?,
        };
        points.push((p, c));
    } else {
        for k in 1..=9 {
            let p = 0.05 * k as f64;
            let cp = c_threshold(p).map_err(anyhow::Error::from)?;
            points.extend([(p, 0.0), (p, cp / 2.0), (p, cp), (p, (cp + 0.05).min(1.0))]);
        }
    }

    let mut certificates = Vec::with_capacity(points.len());
    let mut t_residual = 0.0f64;
    for (i, &(p, c)) in points.iter().enumerate() {
        let params = FdcParams::new(d, p, c).map_err(anyhow::Error::from)?;
        let mut certificate = verify_degradability_capped(&params, cfg.tolerances.cert, cfg.memory_cap)
            .map_err(anyhow::Error::from)?;
        certificate.seed = Some(cfg.seed);
        if p <= 1.0 {
            t_residual = t_residual.max(
                cross_check_t(&params, T_TRIALS, cfg.seed + i as u64).map_err(anyhow::Error::from)?,
            );
        }
        certificates.push(CheckedCertificate {
            expected_certified: expected_certified(p, c),
            certificate,
        });
    }

    let (cov_p, cov_c) = match points.as_slice() {
        [(p, c)] if *p <= 1.0 => (*p, *c),
        _ => (0.3, 0.4),
    };
    let fdc = make_fdc(&FdcParams::new(d, cov_p, cov_c).map_err(anyhow::Error::from)?)
        .map_err(anyhow::Error::from)?;
    let dep = make_depolarizing(d, cov_p.min(1.0)).map_err(anyhow::Error::from)?;
    let covariance_residual = verify_covariance(&fdc, COVARIANCE_TRIALS, cfg.seed)
        .map_err(anyhow::Error::from)?
        .max(verify_covariance(&dep, COVARIANCE_TRIALS, cfg.seed + 1).map_err(anyhow::Error::from)?);

    let first_mismatch = certificates
        .iter()
        .find(|c| c.expected_certified != c.certificate.certified);
    let passed = first_mismatch.is_none() && covariance_residual <= CHECK_TOL && t_residual <= CHECK_TOL;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "d": d,
        "seed": cfg.seed,
        "tolerances": cfg.tolerances,
        "certificates": certificates,
        "covariance_residual": covariance_residual,
        "t_residual": t_residual,
        "passed": passed,
    });
    emit(cfg.output_path.as_deref(), &to_json(&report)?)?;

    if let Some(bad) = first_mismatch {
        let c = &bad.certificate;
        return Err(Failure::Check(format!(
            "d={} p={} c={}: expected certified={}, got {} ({})",
            c.d, c.p, c.c, bad.expected_certified, c.certified, c.reason
        )));
    }
    if covariance_residual > CHECK_TOL {
        return Err(Failure::Check(format!("covariance residual {covariance_residual:.3e}")));
    }
    if t_residual > CHECK_TOL {
        return Err(Failure::Check(format!("output entropy differs from t by {t_residual:.3e}")));
    }
    Ok(())
}

pub fn verify_channel(cfg: &RunConfig, path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let ch = match KrausChannel::from_json(&text) {
        Ok(ch) => ch,
        Err(e @ Error::InvalidChannel(_)) => return Err(Failure::Check(e.to_string())),
        Err(e) => return Err(anyhow::Error::from(e).context(format!("in {}", path.display())).into()),
    };
    if ch.in_dim() > cfg.memory_cap {
        return Err(anyhow!("input dimension {} exceeds the memory cap {}", ch.in_dim(), cfg.memory_cap).into());
    }
    let report = is_cptp(&ch.choi(), cfg.tolerances.psd.max(cfg.tolerances.tp));
    let covariance_residual = verify_covariance(&ch, COVARIANCE_TRIALS, cfg.seed).ok();
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "channel": path.display().to_string(),
        "in_dim": ch.in_dim(),
        "out_factors": ch.out_factors(),
        "cptp": report,
        "covariance_residual": covariance_residual,
        "passed": report.cptp,
    });
    emit(cfg.output_path.as_deref(), &to_json(&out)?)?;
    if !report.cptp {
        return Err(Failure::Check(format!(
            "channel is not CPTP (min Choi eigenvalue {:.3e}, TP residual {:.3e})",
            report.min_eigenvalue, report.tp_residual
        )));
    }
    Ok(())
}

fn optimizer_json(report: &OptimizationReport, reference: f64) -> serde_json::Value {
    json!({
        "best_value": report.best_value,
        "reference": reference,
        "discrepancy": (report.best_value - reference).abs(),
        "value_at_maximally_mixed": report.value_at_maximally_mixed,
        "distance_to_maximally_mixed": report.distance_to_maximally_mixed,
        "best_state_eigenvalues": report.best_state.eigenvalues(),
        "evaluations": report.iterations,
        "restarts": report.restarts,
        "converged": report.converged,
    })
}

pub fn optimize(cfg: &RunConfig) -> Result<(), Failure> {
    let d = cfg.single_d(2)?;
    if d > cfg.memory_cap {
        return Err(anyhow!("d = {d} exceeds the memory cap {}", cfg.memory_cap).into());
    }
    let p = cfg.p.unwrap_or(0.1);
    let (channel, flags, label) = match cfg.theta {
        Some(theta) => (
            make_pure_flag_fdc(d, p, theta),
            FlagPair::pure(theta),
            json!({ "flags": "pure", "theta": theta }),
        ),
        None => {
            let c = match cfg.c {
                Some(c) => c,
                None => c_threshold(p).context("no --c given and p has no degradable threshold")?,
            };
            let params = FdcParams::new(d, p, c).map_err(anyhow::Error::from)?;
            (make_fdc(&params), FlagPair::diagonal(c), json!({ "flags": "diagonal", "c": c }))
        }
    };
    let channel = channel.map_err(anyhow::Error::from)?;
    let flags = flags.map_err(anyhow::Error::from)?;
    let j_ref = mixed_output_coherent_info(d, p, &flags).map_err(anyhow::Error::from)?;
    let i_ref = ce_capacity(d, p, &flags).map_err(anyhow::Error::from)?;

    let coherent = maximize_coherent_info(&channel, cfg.restarts, cfg.seed).map_err(anyhow::Error::from)?;
    let mutual = maximize_mutual_info(&channel, cfg.restarts, cfg.seed + 1).map_err(anyhow::Error::from)?;
    let worst = (coherent.best_value - j_ref)
        .abs()
        .max((mutual.best_value - i_ref).abs());
    let passed = worst <= cfg.tolerances.opt;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "optimize",
        "d": d,
        "p": p,
        "channel": label,
        "seed": cfg.seed,
        "tol_opt": cfg.tolerances.opt,
        "coherent_information": optimizer_json(&coherent, j_ref),
        "mutual_information": optimizer_json(&mutual, i_ref),
        "passed": passed,
    });
    emit(cfg.output_path.as_deref(), &to_json(&report)?)?;
    if !passed {
        return Err(Failure::Check(format!(
            "optimizer differs from the closed form by {worst:.3e} (> {:.1e})",
            cfg.tolerances.opt
        )));
    }
    Ok(())
}

const FIGURE_README: &str = "\
# Figure data

- `bounds_d<d>.csv`: columns `p,q_fdc,f1,f2,q_lower,conv,delta,h` in bits.
  `q_fdc` and `delta` are left empty for p > 1/2, where they are undefined.
  `conv` is the lower convex envelope of min(q_fdc, f1, f2), each floored at 0,
  and is itself clipped at 0.
- `gap_inset.csv`: columns `p,delta,h`, the large-d gap of the flagged bound
  next to the binary entropy.

Bounds that come from external work without a closed form here are not
reproduced. Plot them from their own sources if needed.
";

pub fn figure_data(cfg: &RunConfig) -> Result<(), Failure> {
    let dims = if cfg.d.is_empty() { vec![4, 10] } else { cfg.d.clone() };
    let dir = cfg.output_path.clone().unwrap_or_else(|| ".".into());
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let grid = uniform_grid(cfg.p_min, cfg.p_max, cfg.steps).map_err(anyhow::Error::from)?;
    let mut written = Vec::new();
    for &d in &dims {
        let rows = bounds_table(d, &grid).map_err(anyhow::Error::from)?;
        let path = dir.join(format!("bounds_d{d}.csv"));
        emit(Some(&path), &bounds_csv(&rows))?;
        written.push(path);
    }
    let inset_grid: Vec<f64> = grid.iter().copied().filter(|&p| p <= 0.5).collect();
    if inset_grid.is_empty() {
        return Err(anyhow!("the p range has no points in [0, 1/2] for the gap inset").into());
    }
    // The inset columns do not depend on d; any valid d gives the same table.
    let rows: Vec<(f64, f64, f64)> = gap_table(2, &inset_grid)
        .map_err(anyhow::Error::from)?
        .into_iter()
        .map(|r| (r.p, r.delta, r.h))
        .collect();
    let inset = dir.join("gap_inset.csv");
    emit(Some(&inset), &gap_inset_csv(&rows))?;
    written.push(inset);
    let readme = dir.join("README_figure_data.md");
    emit(Some(&readme), FIGURE_README)?;
    written.push(readme);
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
