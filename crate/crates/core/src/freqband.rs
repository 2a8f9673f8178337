//! Frequency-band resonance of the Duffing oscillator.
//!
//! Away from the energy-resonant frequency `ωe = √(α + βx̂²)` a pure
//! sinusoid is no longer energy resonant, but mixing in a third harmonic,
//! `x = x̂(1−ρ)cos Ωt + x̂ρ cos 3Ωt`, with `ρ(Ω) = (ωe²/Ω² − 1)/8` restores
//! the peak-load equality at every Ω. The elastic-bound inequality then holds
//! over a finite window of Ω around ωe, whose edges are located here
//! numerically.

use std::fmt;

use thiserror::Error;

use crate::io::fmt_num;
use crate::numerics::{bisect, NumericsError, RootConfig};
use crate::plants::{ElasticityProfile, PlantError, PlantModel};
use crate::resonance::{check_bounds, check_time_domain, ResonanceError, ResonanceReport};
use crate::signals::{PeriodicSignal, SignalError};
use crate::work_loop::{build_loop, BranchKind, LoopError, WorkLoop, DEFAULT_GRID_SIZE};

/// Lower edge of the ρ-window where the waveform keeps two monotonic
/// half-cycles and extrema ±x̂.
pub const RHO_WINDOW_LO: f64 = -0.125;
/// Upper edge of the monotonic ρ-window (exclusive: ẋ grazes zero there).
pub const RHO_WINDOW_HI: f64 = 0.25;

#[derive(Debug, Error)]
pub enum BandError {
    #[error("α + βx̂² must be positive, got {0}")]
    NonPositiveStiffness(f64),
    #[error("ρ = {rho} at Ω = {omega} lies outside the monotonic window [-0.125, 0.25)")]
    OutsideRhoWindow { omega: f64, rho: f64 },
    #[error("no resonant band: margin at ωe is {margin}")]
    NoBand { margin: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `ωe = √(α + βx̂²)`.
pub fn resonant_frequency(alpha: f64, beta: f64, amplitude: f64) -> Result<f64, BandError> {
    let w2 = alpha + beta * amplitude * amplitude;
    if w2 > 0.0 && w2.is_finite() {
        Ok(w2.sqrt())
    } else {
        Err(BandError::NonPositiveStiffness(w2))
    }
}

/// `ρ(Ω) = (ωe²/Ω² − 1)/8`.
pub fn rho_of_omega(omega_e: f64, omega: f64) -> f64 {
    ((omega_e / omega).powi(2) - 1.0) / 8.0
}

/// Inverse of [`rho_of_omega`] for `ρ > −1/8`.
pub fn omega_of_rho(omega_e: f64, rho: f64) -> f64 {
    omega_e / (1.0 + 8.0 * rho).sqrt()
}

/// `x̂(1−ρ)cos(Ωt) + x̂ρ cos(3Ωt)`.
pub fn waveform(amplitude: f64, omega: f64, rho: f64) -> Result<PeriodicSignal, BandError> {
    Ok(PeriodicSignal::multiharmonic(amplitude, omega, rho)?)
}

/// Numerically located ρ-intervals of the waveform family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoWindows {
    /// Global extrema are exactly ±x̂ (at t = 0 and T/2).
    pub extrema: (f64, f64),
    /// Exactly two monotonic half-cycles.
    pub monotonic: (f64, f64),
}

/// Scans ρ outward from 0 in steps of 0.01 and bisects the edges of the
/// region where each property holds, to `1e-7` in ρ.
pub fn rho_validity_windows(amplitude: f64, samples: usize) -> Result<RhoWindows, BandError> {
    if !(amplitude > 0.0) {
        return Err(BandError::InvalidParameter(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    let samples = samples.max(1024);
    let monotonic = |rho: f64| -> bool {
        PeriodicSignal::multiharmonic(amplitude, 1.0, rho)
            .and_then(|s| s.decompose_half_cycles(samples))
            .map(|d| d.monotonic)
            .unwrap_or(false)
    };
    let extrema = |rho: f64| -> bool {
        let tol = 1e-9 * amplitude;
        PeriodicSignal::multiharmonic(amplitude, 1.0, rho)
            .and_then(|s| s.decompose_half_cycles(samples))
            .map(|d| d.max_x <= amplitude + tol && d.min_x >= -amplitude - tol)
            .unwrap_or(false)
    };
    Ok(RhoWindows {
        extrema: (edge(&extrema, -1.0)?, edge(&extrema, 1.0)?),
        monotonic: (edge(&monotonic, -1.0)?, edge(&monotonic, 1.0)?),
    })
}

/// Last ρ (from 0 in `direction`) where `holds` is true.
fn edge<P: Fn(f64) -> bool>(holds: &P, direction: f64) -> Result<f64, BandError> {
    const STEP: f64 = 0.01;
    const LIMIT: f64 = 5.0;
    let mut inside = 0.0;
    loop {
        let next = inside + direction * STEP;
        if next.abs() > LIMIT {
            return Ok(inside);
        }
        if !holds(next) {
            let f = |rho: f64| if holds(rho) { 1.0 } else { -1.0 };
            let cfg = RootConfig::with_tol(1e-7);
            return Ok(bisect(f, (inside, next), &cfg)?);
        }
        inside = next;
    }
}

/// Duffing parameters for a frequency-band analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandProblem {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub amplitude: f64,
}

impl BandProblem {
    pub fn new(alpha: f64, beta: f64, delta: f64, amplitude: f64) -> Result<Self, BandError> {
        if !(delta > 0.0) || !(amplitude > 0.0) {
            return Err(BandError::InvalidParameter(format!(
                "need δ > 0 and x̂ > 0, got δ = {delta}, x̂ = {amplitude}"
            )));
        }
        resonant_frequency(alpha, beta, amplitude)?;
        Ok(Self {
            alpha,
            beta,
            delta,
            amplitude,
        })
    }

    pub fn omega_e(&self) -> f64 {
        resonant_frequency(self.alpha, self.beta, self.amplitude)
            .expect("validated on construction")
    }

    pub fn rho(&self, omega: f64) -> f64 {
        rho_of_omega(self.omega_e(), omega)
    }

    pub fn profile(&self) -> ElasticityProfile {
        ElasticityProfile::duffing(self.alpha, self.beta)
    }

    pub fn plant(&self) -> PlantModel {
        PlantModel::DuffingInelastic { delta: self.delta }
    }

    /// The waveform `ρ(Ω)` selects at this frequency, if inside the window.
    pub fn signal(&self, omega: f64) -> Result<PeriodicSignal, BandError> {
        let rho = self.rho(omega);
        if !(RHO_WINDOW_LO..RHO_WINDOW_HI).contains(&rho) {
            return Err(BandError::OutsideRhoWindow { omega, rho });
        }
        waveform(self.amplitude, omega, rho)
    }

    pub fn inelastic_loop(&self, omega: f64, grid_size: usize) -> Result<WorkLoop, BandError> {
        let signal = self.signal(omega)?;
        let g = self.plant().inelastic_load_fn(&signal)?;
        Ok(build_loop(
            &signal,
            g,
            BranchKind::InelasticLoad,
            grid_size,
        )?)
    }

    /// Full elastic-bound report at Ω.
    pub fn report(&self, omega: f64, grid_size: usize) -> Result<ResonanceReport, BandError> {
        let wl = self.inelastic_loop(omega, grid_size)?;
        Ok(check_bounds(&wl, &self.profile())?)
    }

    /// Elastic-bound margin at Ω; positive inside the band.
    pub fn margin(&self, omega: f64, grid_size: usize) -> Result<f64, BandError> {
        Ok(self.report(omega, grid_size)?.margin)
    }
}

/// Elastic-bound margin of the ρ(Ω) waveform at frequency Ω.
pub fn band_margin(
    alpha: f64,
    beta: f64,
    delta: f64,
    amplitude: f64,
    omega: f64,
    grid_size: usize,
) -> Result<f64, BandError> {
    BandProblem::new(alpha, beta, delta, amplitude)?.margin(omega, grid_size)
}

/// What ends the band on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitingConstraint {
    ElasticBoundViolation,
    RhoMonotonicityWindow,
}

impl fmt::Display for LimitingConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitingConstraint::ElasticBoundViolation => "elastic-bound-violation",
            LimitingConstraint::RhoMonotonicityWindow => "rho-monotonicity-window",
        })
    }
}

/// One edge of the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdge {
    pub omega: f64,
    pub rho: f64,
    pub limit: LimitingConstraint,
    /// Most negative `Fẋ` at the edge relative to its peak, from a dense
    /// time-domain scan; close to zero at an elastic-bound edge.
    pub time_domain_worst: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqBandResult {
    pub omega_e: f64,
    pub lo: BandEdge,
    pub hi: BandEdge,
}

impl FreqBandResult {
    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.lo.omega && omega <= self.hi.omega
    }
}

impl fmt::Display for FreqBandResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "omega_e={}", fmt_num(self.omega_e))?;
        writeln!(f, "omega_lo={}", fmt_num(self.lo.omega))?;
        writeln!(f, "omega_hi={}", fmt_num(self.hi.omega))?;
        writeln!(f, "ratio_lo={}", fmt_num(self.lo.omega / self.omega_e))?;
        writeln!(f, "ratio_hi={}", fmt_num(self.hi.omega / self.omega_e))?;
        writeln!(f, "rho_at_lo={}", fmt_num(self.lo.rho))?;
        writeln!(f, "rho_at_hi={}", fmt_num(self.hi.rho))?;
        writeln!(f, "limit_lo={}", self.lo.limit)?;
        writeln!(f, "limit_hi={}", self.hi.limit)?;
        writeln!(
            f,
            "time_domain_worst_lo={}",
            fmt_num(self.lo.time_domain_worst)
        )?;
        write!(
            f,
            "time_domain_worst_hi={}",
            fmt_num(self.hi.time_domain_worst)
        )
    }
}

/// Search settings for [`find_band`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSearch {
    pub grid_size: usize,
    /// Outward bracket step, as a fraction of ωe.
    pub step: f64,
    /// Edge tolerance, as a fraction of ωe.
    pub tol: f64,
    /// Upward search stops at this multiple of ωe; ρ is then within
    /// `1/(8·ratio²)` of the window edge.
    pub max_ratio: f64,
}

impl Default for BandSearch {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            step: 0.01,
            tol: 1e-6,
            max_ratio: 10.0,
        }
    }
}

/// Locates the band of Ω around ωe over which the ρ(Ω) waveform is energy
/// resonant.
pub fn find_band(problem: &BandProblem, search: &BandSearch) -> Result<FreqBandResult, BandError> {
    let omega_e = problem.omega_e();
    let m0 = problem.margin(omega_e, search.grid_size)?;
    if !(m0 > 0.0) {
        return Err(BandError::NoBand { margin: m0 });
    }
    let lo = search_edge(problem, search, -1.0)?;
    let hi = search_edge(problem, search, 1.0)?;
    Ok(FreqBandResult { omega_e, lo, hi })
}

fn search_edge(
    problem: &BandProblem,
    search: &BandSearch,
    direction: f64,
) -> Result<BandEdge, BandError> {
    let omega_e = problem.omega_e();
    // frequency where ρ reaches the upper window edge (Ω below ωe)
    let window_floor = omega_of_rho(omega_e, RHO_WINDOW_HI);
    let window_ceiling = search.max_ratio * omega_e;
    let cfg = RootConfig {
        abs_tol: search.tol * omega_e,
        max_iterations: 200,
        scan_points: 0,
    };

    let mut inside = omega_e;
    let mut k = 1;
    loop {
        let next = omega_e * (1.0 + direction * search.step * k as f64);
        let beyond_window = next <= window_floor || next > window_ceiling;
        if beyond_window {
            let edge_omega = if direction < 0.0 {
                window_floor
            } else {
                window_ceiling
            };
            // the last admissible frequency before the edge may still fail
            let probe = edge_omega - direction * cfg.abs_tol;
            let m = problem.margin(probe, search.grid_size)?;
            if m > 0.0 {
                return edge_report(
                    problem,
                    edge_omega,
                    LimitingConstraint::RhoMonotonicityWindow,
                    search,
                );
            }
            let omega = bisect_margin(problem, search, inside, probe, &cfg)?;
            return edge_report(
                problem,
                omega,
                LimitingConstraint::ElasticBoundViolation,
                search,
            );
        }
        let m = problem.margin(next, search.grid_size)?;
        if !(m > 0.0) {
            let omega = bisect_margin(problem, search, inside, next, &cfg)?;
            return edge_report(
                problem,
                omega,
                LimitingConstraint::ElasticBoundViolation,
                search,
            );
        }
        inside = next;
        k += 1;
    }
}

fn bisect_margin(
    problem: &BandProblem,
    search: &BandSearch,
    inside: f64,
    outside: f64,
    cfg: &RootConfig,
) -> Result<f64, BandError> {
    let f = |omega: f64| {
        problem
            .margin(omega, search.grid_size)
            .map(|m| if m > 0.0 { 1.0 } else { -1.0 })
            .unwrap_or(-1.0)
    };
    Ok(bisect(f, (inside, outside), cfg)?)
}

fn edge_report(
    problem: &BandProblem,
    omega: f64,
    limit: LimitingConstraint,
    search: &BandSearch,
) -> Result<BandEdge, BandError> {
    let rho = problem.rho(omega);
    // confirm on the nearest admissible frequency inside the band
    let toward = if omega < problem.omega_e() { 1.0 } else { -1.0 };
    let probe = omega + toward * search.tol * problem.omega_e();
    let signal = problem.signal(probe)?;
    let plant = problem.plant();
    let profile = problem.profile();
    let load = plant.total_load_fn(&profile, &signal)?;
    let check = check_time_domain(&signal, load, 8192);
    let time_domain_worst = if check.power_scale > 0.0 {
        check.worst_power / check.power_scale
    } else {
        0.0
    };
    Ok(BandEdge {
        omega,
        rho,
        limit,
        time_domain_worst,
    })
}
