//! Shared numerical kernels: bracketed bisection, trapezoidal quadrature,
//! piecewise-linear interpolation and a cancellation-free quadratic solver.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("bisection did not converge after {iterations} iterations (last estimate {last})")]
    MaxIterations { iterations: usize, last: f64 },
    #[error("all quadratic coefficients are zero")]
    AllZeroCoefficients,
    #[error("invalid root configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Settings shared by the bracketing root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Width of the final bracket, in units of the search variable.
    pub abs_tol: f64,
    pub max_iterations: usize,
    /// Number of samples used when a caller scans for sign changes.
    pub scan_points: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_iterations: 200,
            scan_points: 1024,
        }
    }
}

impl RootConfig {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0) {
            return Err(NumericsError::InvalidConfig("abs_tol must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(NumericsError::InvalidConfig(
                "max_iterations must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Bisection on `[lo, hi]`.
///
/// The bracket must satisfy `f(lo) * f(hi) <= 0`. Iteration stops when the
/// bracket is narrower than `cfg.abs_tol`, or when it can no longer be split
/// in floating point. The midpoint of the final bracket is returned.
pub fn bisect<F>(f: F, bracket: (f64, f64), cfg: &RootConfig) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(NumericsError::NoSignChange { lo, hi });
    }

    for _ in 0..cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= cfg.abs_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= cfg.abs_tol {
        Ok(mid)
    } else {
        Err(NumericsError::MaxIterations {
            iterations: cfg.max_iterations,
            last: mid,
        })
    }
}

/// Uniform-grid trapezoid rule with `n` nodes (including both ends).
pub fn quad_trapezoid<F>(f: F, interval: (f64, f64), n: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    assert!(n >= 2, "trapezoid rule needs at least two nodes");
    let (a, b) = interval;
    let h = (b - a) / (n - 1) as f64;
    let interior: f64 = (1..n - 1).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + interior)
}

/// Trapezoid rule over tabulated samples on a (possibly non-uniform) grid.
pub fn trapezoid_samples(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Piecewise-linear interpolation on a strictly increasing grid.
///
/// Values outside the grid are clamped to the end values.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[i] > x; x is strictly inside so 1 <= i <= n-1
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (x - x0) / (x1 - x0);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

/// Real roots of `a x² + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadraticRoots {
    None,
    /// Linear equation (`a == 0`) with one root.
    Single(f64),
    /// Discriminant zero to within the reporting threshold.
    Double(f64),
    /// Two distinct roots, ascending.
    Pair(f64, f64),
}

impl QuadraticRoots {
    /// Roots as a list; a double root appears once.
    pub fn to_vec(self) -> Vec<f64> {
        match self {
            QuadraticRoots::None => vec![],
            QuadraticRoots::Single(r) | QuadraticRoots::Double(r) => vec![r],
            QuadraticRoots::Pair(r1, r2) => vec![r1, r2],
        }
    }
}

/// Discriminants within this fraction of `max(b², |4ac|)` count as zero.
pub const DOUBLE_ROOT_REL_TOL: f64 = 1e-12;

pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Result<QuadraticRoots, NumericsError> {
    if a == 0.0 && b == 0.0 && c == 0.0 {
        return Err(NumericsError::AllZeroCoefficients);
    }
    if a == 0.0 {
        if b == 0.0 {
            return Ok(QuadraticRoots::None);
        }
        return Ok(QuadraticRoots::Single(-c / b));
    }
    let b2 = b * b;
    let four_ac = 4.0 * a * c;
    let disc = b2 - four_ac;
    let threshold = DOUBLE_ROOT_REL_TOL * b2.max(four_ac.abs());
    if disc.abs() <= threshold {
        return Ok(QuadraticRoots::Double(-b / (2.0 * a)));
    }
    if disc < 0.0 {
        return Ok(QuadraticRoots::None);
    }
    // larger-magnitude root first, then Vieta for the other
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum_or_one() * sq);
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { -r1 };
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    Ok(QuadraticRoots::Pair(lo, hi))
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
///
/// Returns `(argmin, min)`. Used to refine sampled minima.
pub fn golden_min<F>(f: F, lo: f64, hi: f64, iterations: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
