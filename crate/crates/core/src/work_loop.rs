//! Work loops: the closed (x, load) curve traced over one period, stored as
//! an upper and a lower branch over a common x-grid.

use std::f64::consts::PI;
use std::io::{Read, Write};

use thiserror::Error;

use crate::io::fmt_num;
use crate::numerics::{bisect, interp_linear, trapezoid_samples, RootConfig};
use crate::signals::{PeriodicSignal, SignalError};

/// Default number of x-grid points per loop.
pub const DEFAULT_GRID_SIZE: usize = 513;
/// Default number of time samples per period for the power integrals.
pub const DEFAULT_QUAD_POINTS: usize = 4096;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("signal is not composed of two monotonic half-cycles")]
    NonMonotonicSignal,
    #[error("branches cross: the loop self-intersects")]
    SelfIntersecting,
    #[error("branches do not meet at the grid ends (gap {gap})")]
    NotClosed { gap: f64 },
    #[error("upper branch falls below lower branch at x = {x}")]
    NotBivalued { x: f64 },
    #[error("loop x-grid must be strictly increasing")]
    NotIncreasing,
    #[error("loop needs at least {min} grid points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed loop table: {0}")]
    Malformed(String),
}

/// Whether a loop's branches are total loads F± or inelastic loads G±.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    TotalLoad,
    InelasticLoad,
}

/// Uniform time samples over one period that produced a loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub period: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub velocity: Vec<f64>,
    pub load: Vec<f64>,
}

impl TimeSeries {
    /// Writes `t,x,load` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LoopError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "load"])?;
        for i in 0..self.t.len() {
            w.write_record([
                fmt_num(self.t[i]),
                fmt_num(self.x[i]),
                fmt_num(self.load[i]),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkLoop {
    x_grid: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
    kind: BranchKind,
    source: Option<TimeSeries>,
}

impl WorkLoop {
    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    /// Branch traversed with ẋ > 0.
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Branch traversed with ẋ < 0.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn kind(&self) -> BranchKind {
        self.kind
    }

    pub fn source(&self) -> Option<&TimeSeries> {
        self.source.as_ref()
    }

    pub fn min_x(&self) -> f64 {
        self.x_grid[0]
    }

    pub fn max_x(&self) -> f64 {
        self.x_grid[self.x_grid.len() - 1]
    }

    /// Largest branch magnitude; the force scale for tolerances.
    pub fn force_scale(&self) -> f64 {
        self.upper
            .iter()
            .chain(self.lower.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn upper_at(&self, x: f64) -> f64 {
        interp_linear(&self.x_grid, &self.upper, x)
    }

    pub fn lower_at(&self, x: f64) -> f64 {
        interp_linear(&self.x_grid, &self.lower, x)
    }

    /// Builds a loop from other branch values on the same grid.
    pub(crate) fn with_branches(
        &self,
        upper: Vec<f64>,
        lower: Vec<f64>,
        kind: BranchKind,
        source: Option<TimeSeries>,
    ) -> WorkLoop {
        WorkLoop {
            x_grid: self.x_grid.clone(),
            upper,
            lower,
            kind,
            source,
        }
    }

    /// Enclosed area `∫(upper − lower) dx`.
    ///
    /// On a Chebyshev–Lobatto grid the integral is taken in the grid angle
    /// `x = c − r cos θ`, where the trapezoid rule is spectrally accurate for
    /// the square-root endpoint behaviour of smooth loops. Other grids use the
    /// plain trapezoid rule in x.
    pub fn area(&self) -> f64 {
        let width: Vec<f64> = self
            .upper
            .iter()
            .zip(self.lower.iter())
            .map(|(u, l)| u - l)
            .collect();
        match chebyshev_params(&self.x_grid) {
            Some((_, r)) => {
                let n = self.x_grid.len() - 1;
                let h = PI / n as f64;
                // endpoint weights multiply sin(0) = sin(π) = 0
                (1..n)
                    .map(|k| width[k] * r * (k as f64 * h).sin())
                    .sum::<f64>()
                    * h
            }
            None => trapezoid_samples(&self.x_grid, &width),
        }
    }

    /// Writes `x,f_upper,f_lower` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LoopError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f_upper", "f_lower"])?;
        for i in 0..self.x_grid.len() {
            w.write_record([
                fmt_num(self.x_grid[i]),
                fmt_num(self.upper[i]),
                fmt_num(self.lower[i]),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads an `x,f_upper,f_lower` table and validates it as a loop.
    pub fn read_csv<R: Read>(input: R, kind: BranchKind) -> Result<WorkLoop, LoopError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| LoopError::Malformed(format!("missing column `{name}`")))
        };
        let (ix, iu, il) = (col("x")?, col("f_upper")?, col("f_lower")?);
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64, LoopError> {
                let s = rec.get(i).unwrap_or("").trim();
                s.parse::<f64>()
                    .map_err(|_| LoopError::Malformed(format!("not a number: `{s}`")))
            };
            rows.push((get(ix)?, get(iu)?, get(il)?));
        }
        let mut wl = import_loop(&rows)?;
        wl.kind = kind;
        Ok(wl)
    }
}

/// `(c, r)` if the grid is `x_k = c − r cos(kπ/n)` to within `1e-9·r`.
fn chebyshev_params(x: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().checked_sub(1)?;
    if n < 2 {
        return None;
    }
    let c = 0.5 * (x[0] + x[n]);
    let r = 0.5 * (x[n] - x[0]);
    if !(r > 0.0) {
        return None;
    }
    let tol = 1e-9 * r;
    x.iter()
        .enumerate()
        .all(|(k, &xk)| (xk - (c - r * (k as f64 * PI / n as f64).cos())).abs() <= tol)
        .then_some((c, r))
}

/// Chebyshev–Lobatto points on `[lo, hi]`, clustered at both ends.
pub fn chebyshev_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let n = points - 1;
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let mut grid: Vec<f64> = (0..=n)
        .map(|k| c - r * (k as f64 * PI / n as f64).cos())
        .collect();
    grid[0] = lo;
    grid[n] = hi;
    grid
}

/// Traces the loop of `(x(t), load(t))` over one period.
///
/// Each interior x-grid point is mapped back to its time on the rising and on
/// the falling half-cycle by bisection on the signal itself, so branch values
/// are the load evaluated exactly at the matching instants. The upper branch
/// is the rising half-cycle (ẋ > 0).
pub fn build_loop<F>(
    signal: &PeriodicSignal,
    load: F,
    kind: BranchKind,
    grid_size: usize,
) -> Result<WorkLoop, LoopError>
where
    F: Fn(f64) -> f64,
{
    if grid_size < 3 {
        return Err(LoopError::TooFewPoints {
            min: 3,
            got: grid_size,
        });
    }
    let halves = signal.decompose_half_cycles(grid_size.max(1024))?;
    if !halves.monotonic {
        return Err(LoopError::NonMonotonicSignal);
    }
    let period = signal.period();
    let t_min = halves.t_min;
    let mut t_max = halves.t_max;
    if t_max <= t_min {
        t_max += period;
    }
    let t_min_next = t_min + period;

    let x_grid = chebyshev_grid(halves.min_x, halves.max_x, grid_size);
    let cfg = RootConfig {
        abs_tol: 1e-15 * period,
        max_iterations: 200,
        scan_points: grid_size,
    };
    let time_of = |x: f64, lo: f64, hi: f64| -> f64 {
        bisect(|t| signal.position(t) - x, (lo, hi), &cfg).unwrap_or(0.5 * (lo + hi))
    };

    let n = grid_size - 1;
    let mut upper = Vec::with_capacity(grid_size);
    let mut lower = Vec::with_capacity(grid_size);
    let load_lo = load(t_min);
    let load_hi = load(t_max);
    upper.push(load_lo);
    lower.push(load_lo);
    for &x in &x_grid[1..n] {
        upper.push(load(time_of(x, t_min, t_max)));
        lower.push(load(time_of(x, t_max, t_min_next)));
    }
    upper.push(load_hi);
    lower.push(load_hi);

    let scale = upper
        .iter()
        .chain(lower.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let above = upper.iter().zip(&lower).any(|(u, l)| u - l > tol);
    let below = upper.iter().zip(&lower).any(|(u, l)| u - l < -tol);
    if above && below {
        return Err(LoopError::SelfIntersecting);
    }

    let samples = 2 * n;
    let h = period / samples as f64;
    let t: Vec<f64> = (0..samples).map(|i| i as f64 * h).collect();
    let source = TimeSeries {
        period,
        x: t.iter().map(|&t| signal.position(t)).collect(),
        velocity: t.iter().map(|&t| signal.velocity(t)).collect(),
        load: t.iter().map(|&t| load(t)).collect(),
        t,
    };

    Ok(WorkLoop {
        x_grid,
        upper,
        lower,
        kind,
        source: Some(source),
    })
}

/// Validates an externally supplied `(x, upper, lower)` table as a loop.
///
/// The result carries no time series and is labelled as a total-load loop.
pub fn import_loop(rows: &[(f64, f64, f64)]) -> Result<WorkLoop, LoopError> {
    if rows.len() < 2 {
        return Err(LoopError::TooFewPoints {
            min: 2,
            got: rows.len(),
        });
    }
    if rows
        .iter()
        .any(|r| !(r.0.is_finite() && r.1.is_finite() && r.2.is_finite()))
    {
        return Err(LoopError::Malformed("non-finite entry".into()));
    }
    if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(LoopError::NotIncreasing);
    }
    let scale = rows
        .iter()
        .fold(0.0f64, |m, r| m.max(r.1.abs()).max(r.2.abs()));
    let close_tol = 1e-6 * scale;
    let first = rows[0];
    let last = rows[rows.len() - 1];
    let gap = (first.1 - first.2).abs().max((last.1 - last.2).abs());
    if gap > close_tol {
        return Err(LoopError::NotClosed { gap });
    }
    let order_tol = 1e-12 * scale;
    if let Some(r) = rows.iter().find(|r| r.1 < r.2 - order_tol) {
        return Err(LoopError::NotBivalued { x: r.0 });
    }
    Ok(WorkLoop {
        x_grid: rows.iter().map(|r| r.0).collect(),
        upper: rows.iter().map(|r| r.1).collect(),
        lower: rows.iter().map(|r| r.2).collect(),
        kind: BranchKind::TotalLoad,
        source: None,
    })
}

/// Per-period actuator energy metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMetrics {
    /// `∫ Fẋ dt`
    pub p_net: f64,
    /// `∫ |Fẋ| dt`
    pub p_abs: f64,
    /// `∫ Fẋ·[Fẋ > 0] dt`
    pub p_pos: f64,
}

impl PowerMetrics {
    /// True when all three metrics agree to `rel_tol` of `p_abs`.
    pub fn collapsed(&self, rel_tol: f64) -> bool {
        let scale = self.p_abs.abs().max(f64::MIN_POSITIVE);
        (self.p_abs - self.p_net).abs() <= rel_tol * scale
            && (self.p_pos - self.p_net).abs() <= rel_tol * scale
    }
}

/// Net, absolute and positive-only power over one period, by the periodic
/// trapezoid rule on `quad_points` uniform samples.
pub fn power_metrics<F>(signal: &PeriodicSignal, load: F, quad_points: usize) -> PowerMetrics
where
    F: Fn(f64) -> f64,
{
    let n = quad_points.max(2);
    let h = signal.period() / n as f64;
    let (mut net, mut abs, mut pos) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let t = i as f64 * h;
        let p = load(t) * signal.velocity(t);
        net += p;
        abs += p.abs();
        if p > 0.0 {
            pos += p;
        }
    }
    PowerMetrics {
        p_net: net * h,
        p_abs: abs * h,
        p_pos: pos * h,
    }
}
