//! Run configuration: defaults, then an optional `key = value` file, then
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flagcap::Tolerances;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub d: Vec<usize>,
    pub p_min: f64,
    pub p_max: f64,
    pub steps: usize,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub theta: Option<f64>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub memory_cap: usize,
    pub restarts: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: Vec::new(),
            p_min: 0.0,
            p_max: 0.5,
            steps: 2000,
            p: None,
            c: None,
            theta: None,
            tolerances: Tolerances::default(),
            seed: 0,
            output_path: None,
            format: Format::Csv,
            memory_cap: flagcap::certify::DEFAULT_MEMORY_CAP,
            restarts: flagcap::certify::MIN_RESTARTS,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .parse()
        .with_context(|| format!("invalid value {value:?} for {key}"))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", n + 1);
            };
            self.set(key.trim(), value.trim())
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.tolerances;
        match key.replace('-', "_").as_str() {
            "d" => {
                self.d = value
                    .split(',')
                    .map(|v| parse("d", v.trim()))
                    .collect::<Result<_>>()?
            }
            "p_min" => self.p_min = parse(key, value)?,
            "p_max" => self.p_max = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "p" => self.p = Some(parse(key, value)?),
            "c" => self.c = Some(parse(key, value)?),
            "theta" => self.theta = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "out" => self.output_path = Some(PathBuf::from(value)),
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => bail!("format must be csv or json, got {value:?}"),
                }
            }
            "memory_cap" => self.memory_cap = parse(key, value)?,
            "restarts" => self.restarts = parse(key, value)?,
            "tol_cert" => t.cert = parse(key, value)?,
            "tol_opt" => t.opt = parse(key, value)?,
            "tol_herm" => t.herm = parse(key, value)?,
            "tol_trace" => t.trace = parse(key, value)?,
            "tol_psd" => t.psd = parse(key, value)?,
            "tol_num" => t.num = parse(key, value)?,
            "tol_tp" => t.tp = parse(key, value)?,
            "eig_floor" => t.eig_floor = parse(key, value)?,
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min < self.p_max) {
            bail!("p_min ({}) must be below p_max ({})", self.p_min, self.p_max);
        }
        if self.p_min < 0.0 {
            bail!("p_min must be nonnegative");
        }
        if self.steps < 2 {
            bail!("steps must be at least 2");
        }
        if self.d.iter().any(|&d| d < 2) {
            bail!("dimensions must be at least 2");
        }
        let t = &self.tolerances;
        let all = [t.herm, t.trace, t.psd, t.num, t.eig_floor, t.tp, t.cert, t.opt];
        if all.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            bail!("tolerances must be positive");
        }
        if self.restarts == 0 {
            bail!("restarts must be positive");
        }
        Ok(())
    }

    /// The single dimension used by commands other than `figure-data`.
    pub fn single_d(&self, default: usize) -> Result<usize> {
        match self.d.as_slice() {
            [] => Ok(default),
            [d] => Ok(*d),
            _ => bail!("this command takes a single --d"),
        }
    }
}
