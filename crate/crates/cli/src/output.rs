//! Number formatting and file output.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use flagcap::BoundsRow;

pub const SCHEMA_VERSION: u32 = 1;

pub const BOUNDS_HEADER: &str = "p,q_fdc,f1,f2,q_lower,conv,delta,h";

/// `printf("%.{sig}g")`: `sig` significant digits, trailing zeros dropped.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| fmt_g(x, 12)).unwrap_or_default()
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for r in rows {
        let cols = [
            Some(r.p),
            r.q_fdc,
            r.f1,
            r.f2,
            r.q_lower,
            r.conv,
            r.delta,
            r.h,
        ];
        let line: Vec<String> = cols.into_iter().map(cell).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn gap_inset_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("p,delta,h\n");
    for &(p, delta, h) in rows {
        out.push_str(&format!("{},{},{}\n", fmt_g(p, 12), fmt_g(delta, 12), fmt_g(h, 12)));
    }
    out
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format() {
        assert_eq!(fmt_g(0.0, 12), "0");
        assert_eq!(fmt_g(2.0, 12), "2");
        assert_eq!(fmt_g(0.7, 12), "0.7");
        assert_eq!(fmt_g(0.576207660087713, 12), "0.576207660088");
        assert_eq!(fmt_g(-0.0625, 12), "-0.0625");
        assert_eq!(fmt_g(1.5e-7, 12), "1.5e-07");
        assert_eq!(fmt_g(1234567890123.0, 12), "1.23456789012e+12");
        assert_eq!(fmt_g(100.0, 3), "100");
    }

    #[test]
    fn round_trip_at_twelve_digits() {
        for x in [0.1, 1.0 / 3.0, 2.718281828459045, 1e-9, 123.456] {
            let s = fmt_g(x, 12);
            let back: f64 = s.parse().unwrap();
            assert_eq!(fmt_g(back, 12), s);
            assert!(((back - x) / x).abs() < 1e-11);
        }
    }
}
