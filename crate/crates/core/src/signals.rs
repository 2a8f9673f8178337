//! Periodic target outputs x(t) stored as truncated harmonic series.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{bisect, RootConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("fundamental frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("harmonic coefficients must be finite")]
    NonFiniteCoefficient,
    #[error("signal velocity vanishes identically")]
    DegenerateSignal,
    #[error("grid size {0} is below the minimum of 64")]
    GridTooSmall(usize),
    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(u8),
}

/// Which time derivative of the signal to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    Position,
    Velocity,
    Acceleration,
}

impl TryFrom<u8> for Derivative {
    type Error = SignalError;

    fn try_from(order: u8) -> Result<Self, Self::Error> {
        match order {
            0 => Ok(Derivative::Position),
            1 => Ok(Derivative::Velocity),
            2 => Ok(Derivative::Acceleration),
            other => Err(SignalError::UnsupportedOrder(other)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct SignalRecord {
    omega: f64,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

/// A periodic signal
/// `x(t) = Σ_k a_k cos(kΩt) + b_k sin(kΩt)`, `k = 0..K`.
///
/// `cos[k]` holds `a_k` and `sin[k]` holds `b_k`; `sin[0]` has no effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRecord")]
pub struct PeriodicSignal {
    omega: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TryFrom<SignalRecord> for PeriodicSignal {
    type Error = SignalError;

    fn try_from(r: SignalRecord) -> Result<Self, Self::Error> {
        PeriodicSignal::new(r.omega, r.cos, r.sin)
    }
}

impl PeriodicSignal {
    pub fn new(omega: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, SignalError> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(SignalError::InvalidFrequency(omega));
        }
        if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(SignalError::NonFiniteCoefficient);
        }
        let mut cos = cos;
        let mut sin = sin;
        let k = cos.len().max(sin.len());
        cos.resize(k, 0.0);
        sin.resize(k, 0.0);
        if let Some(s0) = sin.first_mut() {
            *s0 = 0.0;
        }
        Ok(Self { omega, cos, sin })
    }

    /// `x̂ cos(Ωt)`.
    pub fn simple_harmonic(amplitude: f64, omega: f64) -> Result<Self, SignalError> {
        Self::new(omega, vec![0.0, amplitude], vec![])
    }

    /// `x̂(1−ρ) cos(Ωt) + x̂ρ cos(3Ωt)`: the first/third harmonic family.
    pub fn multiharmonic(amplitude: f64, omega: f64, rho: f64) -> Result<Self, SignalError> {
        Self::new(
            omega,
            vec![0.0, amplitude * (1.0 - rho), 0.0, amplitude * rho],
            vec![],
        )
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Sum of absolute coefficient magnitudes; an upper bound on |x(t)|.
    pub fn amplitude_scale(&self) -> f64 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .map(|c| c.abs())
            .sum()
    }

    /// Upper bound on |ẋ(t)|.
    pub fn velocity_scale(&self) -> f64 {
        self.harmonics()
            .map(|(k, a, b)| k as f64 * self.omega * (a.abs() + b.abs()))
            .sum()
    }

    /// Upper bound on |ẍ(t)|.
    pub fn acceleration_scale(&self) -> f64 {
        self.harmonics()
            .map(|(k, a, b)| (k as f64 * self.omega).powi(2) * (a.abs() + b.abs()))
            .sum()
    }

    /// Amplitude of a pure `x̂ cos(Ωt)` signal, or `None` for anything else.
    pub fn simple_harmonic_amplitude(&self) -> Option<f64> {
        let amp = *self.cos.get(1)?;
        let others_zero = self
            .harmonics()
            .all(|(k, a, b)| b == 0.0 && (k == 1 || a == 0.0));
        (others_zero && self.cos[0] == 0.0 && amp > 0.0).then_some(amp)
    }

    fn harmonics(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.cos
            .iter()
            .zip(self.sin.iter())
            .enumerate()
            .map(|(k, (&a, &b))| (k, a, b))
    }

    /// Evaluates x, ẋ or ẍ by term-wise differentiation.
    pub fn eval(&self, t: f64, order: Derivative) -> f64 {
        let phase = self.omega * t.rem_euclid(self.period());
        let mut acc = match order {
            Derivative::Position => self.cos.first().copied().unwrap_or(0.0),
            _ => 0.0,
        };
        for (k, a, b) in self.harmonics().skip(1) {
            let w = k as f64 * self.omega;
            let (s, c) = (k as f64 * phase).sin_cos();
            acc += match order {
                Derivative::Position => a * c + b * s,
                Derivative::Velocity => w * (b * c - a * s),
                Derivative::Acceleration => -w * w * (a * c + b * s),
            };
        }
        acc
    }

    pub fn position(&self, t: f64) -> f64 {
        self.eval(t, Derivative::Position)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.eval(t, Derivative::Velocity)
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        self.eval(t, Derivative::Acceleration)
    }

    /// Locates every velocity reversal on one period and classifies the
    /// half-cycle structure.
    ///
    /// Sign changes of ẋ are found on a uniform scan of `grid_size` points
    /// (offset by half a step) and refined by bisection to `1e-12·T`.
    /// Grazing zeros of ẋ, where ẋ touches zero without changing sign, are
    /// picked up as roots of ẍ with `|ẋ|` below `1e-9` of the velocity scale;
    /// they make the signal non-monotonic.
    pub fn decompose_half_cycles(
        &self,
        grid_size: usize,
    ) -> Result<HalfCycleDecomposition, SignalError> {
        if grid_size < 64 {
            return Err(SignalError::GridTooSmall(grid_size));
        }
        let v_scale = self.velocity_scale();
        if v_scale == 0.0 {
            return Err(SignalError::DegenerateSignal);
        }
        let period = self.period();
        let h = period / grid_size as f64;
        let cfg = RootConfig::with_tol(1e-12 * period);

        let velocity = |t: f64| self.velocity(t);
        let acceleration = |t: f64| self.acceleration(t);
        let roots = scan_roots(&velocity, period, grid_size, &cfg);

        let mut grazing = Vec::new();
        for t in scan_roots(&acceleration, period, grid_size, &cfg) {
            let near_root = roots.iter().any(|&r| cyclic_distance(r, t, period) <= h);
            if !near_root && self.velocity(t).abs() <= 1e-9 * v_scale {
                grazing.push(t);
            }
        }

        let candidates: Vec<f64> = roots.iter().chain(grazing.iter()).copied().collect();
        if candidates.is_empty() {
            return Err(SignalError::DegenerateSignal);
        }
        let mut t_max = candidates[0];
        let mut t_min = candidates[0];
        let mut max_x = self.position(t_max);
        let mut min_x = max_x;
        for &t in &candidates[1..] {
            let x = self.position(t);
            if x > max_x {
                max_x = x;
                t_max = t;
            }
            if x < min_x {
                min_x = x;
                t_min = t;
            }
        }

        Ok(HalfCycleDecomposition {
            t_max,
            t_min,
            max_x,
            min_x,
            monotonic: roots.len() == 2 && grazing.is_empty(),
            velocity_roots: roots,
            grazing_roots: grazing,
        })
    }
}

fn cyclic_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Sign changes of a periodic function over one period, refined by bisection.
/// Returned times lie in `[0, period)`, ascending.
fn scan_roots<F>(f: &F, period: f64, n: usize, cfg: &RootConfig) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let h = period / n as f64;
    let samples: Vec<(f64, bool)> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            (t, f(t) > 0.0)
        })
        .collect();
    let mut roots = Vec::new();
    for i in 0..n {
        let (ta, sa) = samples[i];
        let sb = samples[(i + 1) % n].1;
        if sa != sb {
            let tb = ta + h;
            let root = bisect(f, (ta, tb), cfg).unwrap_or(0.5 * (ta + tb));
            let r = root.rem_euclid(period);
            // rem_euclid can round up to exactly `period`
            roots.push(if r >= period { 0.0 } else { r });
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

/// Half-cycle structure of a periodic signal over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCycleDecomposition {
    pub t_max: f64,
    pub t_min: f64,
    pub max_x: f64,
    pub min_x: f64,
    /// Exactly two velocity reversals per period and no grazing zeros.
    pub monotonic: bool,
    pub velocity_roots: Vec<f64>,
    pub grazing_roots: Vec<f64>,
}
