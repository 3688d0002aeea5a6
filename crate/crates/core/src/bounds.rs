//! Bound curves on a grid of `p`, their lower convex envelope and gap tables.

use serde::{Deserialize, Serialize};

use crate::capacity::{delta_gap, f1_bound, f2_bound, q_fdc, q_lower};
use crate::error::{Error, Result};
use crate::linalg::binary_entropy;

/// Grid points that differ by less than this are treated as duplicates.
const GRID_EPS: f64 = 1e-15;

/// `steps` equally spaced points from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(min < max) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need min < max and at least 2 steps, got [{min}, {max}] with {steps}"
        )));
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i + 1 == steps { max } else { min + h * i as f64 })
        .collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] - w[0] <= GRID_EPS) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Samples `(p, value)` of one named curve at a fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub name: String,
    pub d: usize,
    pub samples: Vec<(f64, f64)>,
    /// Set when grid points were dropped for lying outside the curve's domain.
    pub note: Option<String>,
}

impl BoundCurve {
    pub fn value_at(&self, p: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|(q, _)| (q - p).abs() <= GRID_EPS)
            .map(|&(_, v)| v)
    }
}

fn sample_curve<F>(name: &str, d: usize, grid: &[f64], f: F) -> BoundCurve
where
    F: Fn(f64) -> Result<f64>,
{
    let mut samples = Vec::with_capacity(grid.len());
    let mut skipped = 0;
    for &p in grid {
        match f(p) {
            Ok(v) => samples.push((p, v)),
            Err(_) => skipped += 1,
        }
    }
    let note = (skipped > 0).then(|| format!("{skipped} grid point(s) outside the domain of {name}"));
    BoundCurve {
        name: name.to_string(),
        d,
        samples,
        note,
    }
}

/// Curves `q_fdc`, `f1`, `f2`, `q_lower` and the asymptotic gap `delta`.
pub fn sample_bounds(d: usize, grid: &[f64]) -> Result<Vec<BoundCurve>> {
    check_grid(grid)?;
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    Ok(vec![
        sample_curve("q_fdc", d, grid, |p| q_fdc(d, p)),
        sample_curve("f1", d, grid, |p| f1_bound(d, p)),
        sample_curve("f2", d, grid, |p| f2_bound(d, p)),
        sample_curve("q_lower", d, grid, |p| q_lower(d, p)),
        sample_curve("delta", d, grid, delta_gap),
    ])
}

/// Piecewise-linear convex function given by its hull vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub vertices: Vec<(f64, f64)>,
}

impl Envelope {
    /// Linear interpolation between vertices; `None` outside the hull's span.
    pub fn eval(&self, p: f64) -> Option<f64> {
        let first = self.vertices.first()?;
        let last = self.vertices.last()?;
        if p < first.0 - GRID_EPS || p > last.0 + GRID_EPS {
            return None;
        }
        let i = self.vertices.partition_point(|v| v.0 < p);
        if i == 0 {
            return Some(first.1);
        }
        if i == self.vertices.len() {
            return Some(last.1);
        }
        let (x0, y0) = self.vertices[i - 1];
        let (x1, y1) = self.vertices[i];
        Some(y0 + (y1 - y0) * (p - x0) / (x1 - x0))
    }
}

/// Lower convex hull of points sorted by strictly increasing `p` (monotone chain).
pub fn convex_envelope(points: &[(f64, f64)]) -> Result<Envelope> {
    if points.len() < 2 {
        return Err(Error::InvalidGrid("envelope needs at least 2 points".into()));
    }
    if points.iter().any(|(p, v)| !p.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidGrid("non-finite point".into()));
    }
    if points.windows(2).any(|w| w[1].0 - w[0].0 <= GRID_EPS) {
        return Err(Error::InvalidGrid("points must have strictly increasing p".into()));
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &pt in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b unless a -> b -> pt turns strictly counter-clockwise.
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    Ok(Envelope { vertices: hull })
}

/// Pointwise minimum of the available upper bounds (each floored at 0), its
/// convex envelope, clipped at 0. Named `conv`.
pub fn composite_bound(d: usize, grid: &[f64]) -> Result<BoundCurve> {
    check_grid(grid)?;
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: d,
        });
    }
    // The zero of f2 is a hull vertex in the continuum; adding it as a knot
    // keeps the envelope from depending on where the grid happens to fall.
    let f2_root = d as f64 / (2.0 * (d as f64 + 1.0));
    let mut knots = grid.to_vec();
    let mut extra = None;
    if f2_root > grid[0] && f2_root < grid[grid.len() - 1] {
        let at = knots.partition_point(|&p| p < f2_root);
        if (knots[at] - f2_root).abs() > GRID_EPS && (knots[at - 1] - f2_root).abs() > GRID_EPS {
            knots.insert(at, f2_root);
            extra = Some(f2_root);
        }
    }
    let mut points = Vec::with_capacity(knots.len());
    for &p in &knots {
        let best = [q_fdc(d, p), f1_bound(d, p), f2_bound(d, p)]
            .into_iter()
            .filter_map(|r| r.ok())
            .map(|v| v.max(0.0))
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            points.push((p, best));
        }
    }
    let samples = match points.len() {
        0 => Vec::new(),
        1 => points,
        _ => {
            let env = convex_envelope(&points)?;
            points
                .iter()
                .filter(|&&(p, _)| Some(p) != extra)
                .map(|&(p, _)| (p, env.eval(p).expect("grid point lies in the hull").max(0.0)))
                .collect()
        }
    };
    let note = (samples.len() < grid.len()).then(|| "grid points with no upper bound dropped".to_string());
    Ok(BoundCurve {
        name: "conv".into(),
        d,
        samples,
        note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub p: f64,
    /// `q_fdc - q_lower`.
    pub gap: f64,
    pub delta: f64,
    /// Binary entropy, the large-`d` gap of the earlier bounds.
    pub h: f64,
}

pub fn gap_table(d: usize, grid: &[f64]) -> Result<Vec<GapRow>> {
    check_grid(grid)?;
    grid.iter()
        .map(|&p| {
            Ok(GapRow {
                p,
                gap: q_fdc(d, p)? - q_lower(d, p)?,
                delta: delta_gap(p)?,
                h: binary_entropy(p)?,
            })
        })
        .collect()
}

/// One row of the bounds table; `None` where `p` is outside a column's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub p: f64,
    pub q_fdc: Option<f64>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub q_lower: Option<f64>,
    pub conv: Option<f64>,
    pub delta: Option<f64>,
    pub h: Option<f64>,
}

/// All curves at every grid point, ordered by ascending `p`.
pub fn bounds_table(d: usize, grid: &[f64]) -> Result<Vec<BoundsRow>> {
    let curves = sample_bounds(d, grid)?;
    let conv = composite_bound(d, grid)?;
    let get = |name: &str, p: f64| {
        curves
            .iter()
            .find(|c| c.name == name)
            .and_then(|c| c.value_at(p))
    };
    Ok(grid
        .iter()
        .map(|&p| BoundsRow {
            p,
            q_fdc: get("q_fdc", p),
            f1: get("f1", p),
            f2: get("f2", p),
            q_lower: get("q_lower", p),
            conv: conv.value_at(p),
            delta: get("delta", p),
            h: binary_entropy(p).ok(),
        })
        .collect())
}
