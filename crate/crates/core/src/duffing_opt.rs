//! Structural optimisation of the Duffing oscillator
//! `ẍ + δẋ + αx + βx³ = F(t)` for a simple-harmonic output `x̂ cos(Ωt)`.
//!
//! Matching peak inertial and elastic loads fixes `α = Ω² − βx̂²`, leaving a
//! one-parameter family in the normalised cubic stiffness `β* = β/Ω²`. The
//! family is energy resonant exactly for `|β*| ≤ 2δ/(x̂²Ω)`.

use thiserror::Error;

use crate::numerics::{bisect, solve_quadratic, NumericsError, RootConfig};
use crate::plants::{ElasticityProfile, PlantError, PlantModel};
use crate::resonance::{check_bounds, ResonanceError};
use crate::signals::PeriodicSignal;
use crate::work_loop::{build_loop, BranchKind, LoopError};

#[derive(Debug, Error)]
pub enum DuffingError {
    #[error("invalid Duffing parameter: {0}")]
    InvalidParameter(String),
    #[error("critical quartic is undefined for β* = 0")]
    ZeroBetaStar,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
}

/// A member of the peak-load-matched Duffing stiffness family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuffingDesign {
    pub delta: f64,
    pub omega: f64,
    pub amplitude: f64,
    pub beta_star: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl DuffingDesign {
    pub fn profile(&self) -> ElasticityProfile {
        ElasticityProfile::duffing(self.alpha, self.beta)
    }

    pub fn signal(&self) -> PeriodicSignal {
        PeriodicSignal::simple_harmonic(self.amplitude, self.omega)
            .expect("design parameters validated on construction")
    }

    pub fn beta_star_crit(&self) -> f64 {
        beta_star_crit(self.delta, self.omega, self.amplitude)
    }

    /// Inverse of [`optimal_family`]: the frequency and β* at which a given
    /// `(α, β)` pair is peak-load matched, `Ω² = α + βx̂²`.
    pub fn from_stiffness(
        alpha: f64,
        beta: f64,
        delta: f64,
        amplitude: f64,
    ) -> Result<Self, DuffingError> {
        let omega_sq = alpha + beta * amplitude * amplitude;
        if !(omega_sq > 0.0) {
            return Err(DuffingError::InvalidParameter(format!(
                "α + βx̂² must be positive, got {omega_sq}"
            )));
        }
        optimal_family(delta, omega_sq.sqrt(), amplitude, beta / omega_sq)
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), DuffingError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DuffingError::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `α = Ω²(1 − β*x̂²)`, `β = β*Ω²`. No validity check.
pub fn optimal_family(
    delta: f64,
    omega: f64,
    amplitude: f64,
    beta_star: f64,
) -> Result<DuffingDesign, DuffingError> {
    check_positive("Ω", omega)?;
    check_positive("x̂", amplitude)?;
    if !(delta >= 0.0) || !beta_star.is_finite() {
        return Err(DuffingError::InvalidParameter(format!(
            "need δ >= 0 and finite β*, got δ = {delta}, β* = {beta_star}"
        )));
    }
    let w2 = omega * omega;
    Ok(DuffingDesign {
        delta,
        omega,
        amplitude,
        beta_star,
        alpha: w2 * (1.0 - beta_star * amplitude * amplitude),
        beta: beta_star * w2,
    })
}

/// `2δ/(x̂²Ω)`.
pub fn beta_star_crit(delta: f64, omega: f64, amplitude: f64) -> f64 {
    2.0 * delta / (amplitude * amplitude * omega)
}

/// Real roots in `(−x̂, x̂)` of `x⁴ − x²x̂² + δ²/(β*²Ω²) = 0`, ascending.
/// A double root in x² appears once per sign.
pub fn critical_quartic_roots(design: &DuffingDesign) -> Result<Vec<f64>, DuffingError> {
    if design.beta_star == 0.0 {
        return Err(DuffingError::ZeroBetaStar);
    }
    let amp2 = design.amplitude * design.amplitude;
    let c = (design.delta / (design.beta_star * design.omega)).powi(2);
    let squares = solve_quadratic(1.0, -amp2, c)?.to_vec();
    let mut roots: Vec<f64> = squares
        .into_iter()
        .filter(|&y| y > 0.0 && y < amp2)
        .flat_map(|y| {
            let r = y.sqrt();
            [-r, r]
        })
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub valid: bool,
    /// `β*crit − |β*|`
    pub margin: f64,
}

pub fn is_valid(design: &DuffingDesign) -> Validity {
    let margin = design.beta_star_crit() - design.beta_star.abs();
    Validity {
        valid: margin >= 0.0,
        margin,
    }
}

/// Inverse dynamics `F(t) = ẍ + δẋ + αx + βx³` along the signal.
pub fn required_forcing<'a>(
    design: &DuffingDesign,
    signal: &'a PeriodicSignal,
) -> impl Fn(f64) -> f64 + 'a {
    let DuffingDesign {
        delta, alpha, beta, ..
    } = *design;
    move |t: f64| {
        let x = signal.position(t);
        signal.acceleration(t) + delta * signal.velocity(t) + alpha * x + beta * x * x * x
    }
}

/// Numeric counterpart of [`beta_star_crit`]: bisects over β* on
/// `[0, 4δ/(x̂²Ω)]` for the sign change of the elastic-bound margin on the
/// sampled inelastic loop, to `1e-10` absolute.
pub fn numeric_beta_star_crit(
    delta: f64,
    omega: f64,
    amplitude: f64,
    grid_size: usize,
) -> Result<f64, DuffingError> {
    check_positive("δ", delta)?;
    let signal = PeriodicSignal::simple_harmonic(amplitude, omega)
        .map_err(|e| DuffingError::InvalidParameter(e.to_string()))?;
    let plant = PlantModel::duffing(delta)?;
    let inelastic = build_loop(
        &signal,
        plant.inelastic_load_fn(&signal)?,
        BranchKind::InelasticLoad,
        grid_size,
    )?;
    let margin = |beta_star: f64| -> f64 {
        let design =
            optimal_family(delta, omega, amplitude, beta_star).expect("parameters checked above");
        check_bounds(&inelastic, &design.profile())
            .map(|r| r.margin)
            .unwrap_or(f64::NAN)
    };
    let hi = 4.0 * delta / (amplitude * amplitude * omega);
    let cfg = RootConfig {
        abs_tol: 1e-10,
        max_iterations: 200,
        scan_points: 0,
    };
    Ok(bisect(margin, (0.0, hi), &cfg)?)
}

/// Trajectory-tracking diagnostic for a forward simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardReport {
    pub periods: usize,
    pub steps_per_period: usize,
    pub max_deviation: f64,
}

/// Integrates `ẍ = F(t) − δẋ − αx − βx³` with the required forcing, from the
/// target's initial state, by classical RK4; reports `max |x_sim − x_target|`.
pub fn forward_verify(
    design: &DuffingDesign,
    signal: &PeriodicSignal,
    periods: usize,
    steps_per_period: usize,
) -> ForwardReport {
    let periods = periods.max(1);
    let steps_per_period = steps_per_period.max(2000);
    let forcing = required_forcing(design, signal);
    let DuffingDesign {
        delta, alpha, beta, ..
    } = *design;
    let rhs = |t: f64, x: f64, v: f64| -> (f64, f64) {
        (v, forcing(t) - delta * v - alpha * x - beta * x * x * x)
    };
    let h = signal.period() / steps_per_period as f64;
    let (mut x, mut v) = (signal.position(0.0), signal.velocity(0.0));
    let mut max_dev = 0.0f64;
    for step in 0..periods * steps_per_period {
        let t = step as f64 * h;
        let k1 = rhs(t, x, v);
        let k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = rhs(t + h, x + h * k3.0, v + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let target = signal.position((step + 1) as f64 * h);
        max_dev = max_dev.max((x - target).abs());
        if !x.is_finite() {
            max_dev = f64::INFINITY;
            break;
        }
    }
    ForwardReport {
        periods,
        steps_per_period,
        max_deviation: max_dev,
    }
}
