//! Weight functions α on `[0, 1]` and the profile `φ(x) = ∫₀¹ α²(|x − y|) dy`.
//!
//! Every built-in weight is piecewise constant, so `α²` integrates exactly over
//! grid cells. [`CellKernel`] holds the exact cell-pair averages of
//! `α²(|x − y|)`; the φ profile, φ₀ and the tree integrals are all computed
//! from it, which keeps them mutually consistent.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_GRID: usize = 64;
pub const DEFAULT_GRID: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum WeightFn {
    Constant { c: f64 },
    /// `α(t) = 1` for `t ≤ ρ`, else 0.
    Band { rho: f64 },
    /// `α(t) = 1` for `t ≤ ρ` or `t ≥ 1 − ρ`, else 0.
    PeriodicBand { rho: f64 },
    /// `values[i]` on `[breakpoints[i-1], breakpoints[i])`, with implicit
    /// outer breakpoints 0 and 1. Right-continuous at each breakpoint.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

/// A maximal interval on which `α²` is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

fn check_rho(rho: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&rho) {
        Ok(rho)
    } else {
        Err(Error::out_of_range("rho", rho, "[0, 1]"))
    }
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n < MIN_GRID {
        return Err(Error::out_of_range("grid_n", grid_n, ">= 64"));
    }
    Ok(())
}

impl WeightFn {
    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::out_of_range("c", c, "finite"));
        }
        Ok(WeightFn::Constant { c })
    }

    pub fn band(rho: f64) -> Result<Self> {
        Ok(WeightFn::Band {
            rho: check_rho(rho)?,
        })
    }

    pub fn periodic_band(rho: f64) -> Result<Self> {
        Ok(WeightFn::PeriodicBand {
            rho: check_rho(rho)?,
        })
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidWeight {
                spec: "piecewise".into(),
                reason: format!(
                    "{} breakpoints need {} values, got {}",
                    breakpoints.len(),
                    breakpoints.len() + 1,
                    values.len()
                ),
            });
        }
        if breakpoints.iter().any(|b| !(0.0..=1.0).contains(b))
            || breakpoints.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::InvalidWeight {
                spec: "piecewise".into(),
                reason: "breakpoints must be sorted within [0, 1]".into(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeight {
                spec: "piecewise".into(),
                reason: "values must be finite".into(),
            });
        }
        Ok(WeightFn::PiecewiseConstant {
            breakpoints,
            values,
        })
    }

    /// Re-runs the constructor checks, for values built by deserialization.
    pub fn validated(self) -> Result<Self> {
        match self {
            WeightFn::Constant { c } => WeightFn::constant(c),
            WeightFn::Band { rho } => WeightFn::band(rho),
            WeightFn::PeriodicBand { rho } => WeightFn::periodic_band(rho),
            WeightFn::PiecewiseConstant {
                breakpoints,
                values,
            } => WeightFn::piecewise_constant(breakpoints, values),
        }
    }

    /// Parses `constant:<c>`, `band:<rho>`, `periodic:<rho>` or `table:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidWeight {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| bad("expected <kind>:<parameter>"))?;
        let number = || {
            arg.trim()
                .parse::<f64>()
                .map_err(|_| bad("parameter is not a number"))
        };
        let parsed = match kind.trim() {
            "constant" => WeightFn::constant(number()?),
            "band" => WeightFn::band(number()?),
            "periodic" | "periodic_band" | "periodic-band" => WeightFn::periodic_band(number()?),
            "table" => WeightFn::from_table_file(Path::new(arg)),
            _ => return Err(bad("unknown kind (constant, band, periodic, table)")),
        };
        parsed.map_err(|e| match e {
            Error::InvalidWeight { reason, .. } => bad(&reason),
            Error::OutOfRange { .. } => bad(&e.to_string()),
            other => other,
        })
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_table_str(&text)
    }

    /// Table format: one `start value` pair per line, starts increasing from 0.
    /// `#` starts a comment.
    pub fn from_table_str(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidWeight {
            spec: "table".into(),
            reason,
        };
        let mut starts = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("line {}: `{s}` is not a number", lineno + 1)))
            };
            match fields.as_slice() {
                [t, v] => {
                    starts.push(parse(t)?);
                    values.push(parse(v)?);
                }
                _ => return Err(bad(format!("line {}: expected `start value`", lineno + 1))),
            }
        }
        if starts.first() != Some(&0.0) {
            return Err(bad("the first segment must start at 0".into()));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("segment starts must increase strictly".into()));
        }
        Self::piecewise_constant(starts[1..].to_vec(), values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WeightFn::Constant { c } => *c,
            WeightFn::Band { rho } => indicator(t <= *rho),
            WeightFn::PeriodicBand { rho } => indicator(t <= *rho || t >= 1.0 - rho),
            WeightFn::PiecewiseConstant {
                breakpoints,
                values,
            } => values[breakpoints.partition_point(|&b| b <= t)],
        }
    }

    /// Upper bound on `|α|`.
    pub fn bound(&self) -> f64 {
        match self {
            WeightFn::Constant { c } => c.abs(),
            WeightFn::Band { .. } | WeightFn::PeriodicBand { .. } => 1.0,
            WeightFn::PiecewiseConstant { values, .. } => {
                values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    }

    /// Segments of `α²` covering `[0, 1]`; empty intervals are dropped.
    pub fn squared_segments(&self) -> Vec<Segment> {
        let raw: Vec<(f64, f64, f64)> = match self {
            WeightFn::Constant { c } => vec![(0.0, 1.0, c * c)],
            WeightFn::Band { rho } => vec![(0.0, *rho, 1.0), (*rho, 1.0, 0.0)],
            WeightFn::PeriodicBand { rho } if *rho >= 0.5 => vec![(0.0, 1.0, 1.0)],
            WeightFn::PeriodicBand { rho } => vec![
                (0.0, *rho, 1.0),
                (*rho, 1.0 - rho, 0.0),
                (1.0 - rho, 1.0, 1.0),
            ],
            WeightFn::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let edges: Vec<f64> = std::iter::once(0.0)
                    .chain(breakpoints.iter().copied())
                    .chain(std::iter::once(1.0))
                    .collect();
                edges
                    .windows(2)
                    .zip(values)
                    .map(|(w, v)| (w[0], w[1], v * v))
                    .collect()
            }
        };
        raw.into_iter()
            .filter(|&(s, e, _)| e > s)
            .map(|(start, end, value)| Segment { start, end, value })
            .collect()
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl fmt::Display for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFn::Constant { c } => write!(f, "constant:{c}"),
            WeightFn::Band { rho } => write!(f, "band:{rho}"),
            WeightFn::PeriodicBand { rho } => write!(f, "periodic:{rho}"),
            WeightFn::PiecewiseConstant { breakpoints, .. } => {
                write!(f, "table({} segments)", breakpoints.len() + 1)
            }
        }
    }
}

/// Midpoints `(i + 1/2) / n` of the equidistant grid on `[0, 1]`.
pub fn midpoints(grid_n: usize) -> impl Iterator<Item = f64> {
    let h = 1.0 / grid_n as f64;
    (0..grid_n).map(move |i| (i as f64 + 0.5) * h)
}

/// `φ(x)` by the midpoint rule in `y` with `grid_n` cells.
pub fn phi(w: &WeightFn, x: f64, grid_n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::out_of_range("x", x, "[0, 1]"));
    }
    check_grid(grid_n)?;
    let sum: f64 = midpoints(grid_n)
        .map(|y| {
            let a = w.eval((x - y).abs());
            a * a
        })
        .sum();
    Ok(sum / grid_n as f64)
}

/// Exact cell-pair averages of `α²(|x − y|)` on an equidistant grid.
///
/// The average over cells `a` and `b` depends only on `d = |a − b|`:
/// `K_d = ∫₋₁¹ α²(|d + s|·h) (1 − |s|) ds`, integrated segment by segment.
#[derive(Debug, Clone)]
pub struct CellKernel {
    grid_n: usize,
    by_offset: Vec<f64>,
}

impl CellKernel {
    pub fn new(w: &WeightFn, grid_n: usize) -> Result<Self> {
        check_grid(grid_n)?;
        let segments = w.squared_segments();
        let n = grid_n as f64;
        // Antiderivative of the hat weight 1 − |s|.
        let hat = |s: f64| s - s * s.abs() / 2.0;
        let hat_between = |a: f64, b: f64, lo: f64, hi: f64| {
            let (a, b) = (a.clamp(lo, hi), b.clamp(lo, hi));
            hat(b) - hat(a)
        };
        let by_offset = (0..grid_n)
            .map(|d| {
                if d == 0 {
                    2.0 * segments
                        .iter()
                        .map(|s| s.value * hat_between(s.start * n, s.end * n, 0.0, 1.0))
                        .sum::<f64>()
                } else {
                    let d = d as f64;
                    segments
                        .iter()
                        .map(|s| {
                            s.value * hat_between(s.start * n - d, s.end * n - d, -1.0, 1.0)
                        })
                        .sum()
                }
            })
            .collect();
        Ok(Self { grid_n, by_offset })
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.by_offset[a.abs_diff(b)]
    }

    pub fn by_offset(&self) -> &[f64] {
        &self.by_offset
    }

    /// Row-major `grid_n × grid_n` matrix.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.grid_n;
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            out.extend((0..n).map(|b| self.by_offset[a.abs_diff(b)]));
        }
        out
    }

    /// Row means: the average of φ over each grid cell.
    pub fn row_means(&self) -> Vec<f64> {
        let n = self.grid_n;
        let mut prefix = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &k in &self.by_offset {
            acc += k;
            prefix.push(acc);
        }
        let k0 = self.by_offset[0];
        (0..n)
            .map(|a| (prefix[a] + prefix[n - 1 - a] - k0) / n as f64)
            .collect()
    }
}

/// Cell averages of φ on the `grid_n`-cell grid.
pub fn phi_profile(w: &WeightFn, grid_n: usize) -> Result<Vec<f64>> {
    Ok(CellKernel::new(w, grid_n)?.row_means())
}

/// `φ₀ = ∫₀¹ φ(x) dx`.
pub fn phi0(w: &WeightFn, grid_n: usize) -> Result<f64> {
    let profile = phi_profile(w, grid_n)?;
    Ok(mean(&profile))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub grid_n: usize,
    /// Average of φ over the cell centred at each grid midpoint.
    pub phi_values: Vec<f64>,
    pub phi0: f64,
    pub max_deviation: f64,
    pub constant_verdict: bool,
}

impl PhiReport {
    pub fn grid(&self) -> Vec<f64> {
        midpoints(self.grid_n).collect()
    }
}

/// Decides whether φ is constant: `max |φ − φ₀| ≤ tol` over the grid.
pub fn is_phi_constant(w: &WeightFn, tol: f64, grid_n: usize) -> Result<PhiReport> {
    if !(tol > 0.0) {
        return Err(Error::out_of_range("tol", tol, "> 0"));
    }
    let phi_values = phi_profile(w, grid_n)?;
    let phi0 = mean(&phi_values);
    let max_deviation = phi_values
        .iter()
        .fold(0.0f64, |m, &p| m.max((p - phi0).abs()));
    Ok(PhiReport {
        grid_n,
        phi_values,
        phi0,
        max_deviation,
        constant_verdict: max_deviation <= tol,
    })
}
