//! Plant dynamics D(·) and parallel elasticities Fs(x).
//!
//! A plant is split into its inelastic part, whose load along a prescribed
//! output is G(t), and an elasticity Fs(x); the total actuator load is
//! F(t) = G(t) + Fs(x(t)). The linear plant `ẍ + 2ζω0ẋ + ω0²x` is treated as
//! the inelastic part `ẍ + 2ζω0ẋ` plus the elasticity `ω0²x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::interp_linear;
use crate::signals::PeriodicSignal;
use crate::work_loop::WorkLoop;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("tabulated plants have no time-domain load evaluator")]
    UnsupportedPlant,
    #[error("x = {x} is outside the tabulated span [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("closed-form branches need a pure x̂ cos(Ωt) signal")]
    NotSimpleHarmonic,
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("invalid elasticity: {0}")]
    InvalidProfile(String),
}

/// Inelastic plant dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantModel {
    /// `ẍ + 2ζω0ẋ` (the `ω0²x` term belongs to the elasticity).
    Linear { zeta: f64, omega0: f64 },
    /// `ẍ + δẋ`.
    DuffingInelastic { delta: f64 },
    /// A loop supplied from outside, e.g. a measured or simulated load cycle.
    Tabulated(Box<WorkLoop>),
}

impl PlantModel {
    pub fn linear(zeta: f64, omega0: f64) -> Result<Self, PlantError> {
        if !(zeta >= 0.0) || !zeta.is_finite() {
            return Err(PlantError::InvalidPlant(format!(
                "zeta must be >= 0, got {zeta}"
            )));
        }
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(PlantError::InvalidPlant(format!(
                "omega0 must be > 0, got {omega0}"
            )));
        }
        Ok(PlantModel::Linear { zeta, omega0 })
    }

    pub fn duffing(delta: f64) -> Result<Self, PlantError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(PlantError::InvalidPlant(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        Ok(PlantModel::DuffingInelastic { delta })
    }

    /// Coefficient of ẋ in the inelastic dynamics.
    pub fn damping_coefficient(&self) -> Result<f64, PlantError> {
        match self {
            PlantModel::Linear { zeta, omega0 } => Ok(2.0 * zeta * omega0),
            PlantModel::DuffingInelastic { delta } => Ok(*delta),
            PlantModel::Tabulated(_) => Err(PlantError::UnsupportedPlant),
        }
    }

    /// G(t) along the signal.
    pub fn inelastic_load(&self, signal: &PeriodicSignal, t: f64) -> Result<f64, PlantError> {
        let c = self.damping_coefficient()?;
        Ok(signal.acceleration(t) + c * signal.velocity(t))
    }

    /// G as a time callable.
    pub fn inelastic_load_fn<'a>(
        &self,
        signal: &'a PeriodicSignal,
    ) -> Result<impl Fn(f64) -> f64 + 'a, PlantError> {
        let c = self.damping_coefficient()?;
        Ok(move |t: f64| signal.acceleration(t) + c * signal.velocity(t))
    }

    /// F(t) = G(t) + Fs(x(t)).
    pub fn total_load(
        &self,
        profile: &ElasticityProfile,
        signal: &PeriodicSignal,
        t: f64,
    ) -> Result<f64, PlantError> {
        let g = self.inelastic_load(signal, t)?;
        Ok(g + profile.eval(signal.position(t))?)
    }

    /// F as a time callable. The profile's span is checked against the
    /// signal's extrema once, up front.
    pub fn total_load_fn<'a>(
        &self,
        profile: &'a ElasticityProfile,
        signal: &'a PeriodicSignal,
    ) -> Result<impl Fn(f64) -> f64 + 'a, PlantError> {
        let c = self.damping_coefficient()?;
        if let Some((lo, hi)) = profile.span() {
            let d = signal
                .decompose_half_cycles(256)
                .map_err(|e| PlantError::InvalidProfile(e.to_string()))?;
            let slack = SPAN_SLACK * (hi - lo);
            if d.min_x < lo - slack || d.max_x > hi + slack {
                let x = if d.min_x < lo - slack {
                    d.min_x
                } else {
                    d.max_x
                };
                return Err(PlantError::OutOfRange { x, lo, hi });
            }
        }
        Ok(move |t: f64| {
            let x = signal.position(t);
            signal.acceleration(t) + c * signal.velocity(t) + profile.eval_clamped(x)
        })
    }

    /// Closed-form inelastic branches under `x̂ cos(Ωt)`:
    /// `G±(x) = −Ω²x ± c·Ω·√(x̂² − x²)` with `c` the ẋ coefficient.
    pub fn closed_form_branches(
        &self,
        signal: &PeriodicSignal,
    ) -> Result<ClosedFormBranches, PlantError> {
        let c = self.damping_coefficient()?;
        let amplitude = signal
            .simple_harmonic_amplitude()
            .ok_or(PlantError::NotSimpleHarmonic)?;
        let omega = signal.omega();
        Ok(ClosedFormBranches {
            omega,
            amplitude,
            half_width: c * omega,
        })
    }
}

/// Analytic work-loop branches for simple-harmonic motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormBranches {
    pub omega: f64,
    pub amplitude: f64,
    /// Damping coefficient times Ω; the half-width of the loop at x = 0 per unit x̂.
    pub half_width: f64,
}

impl ClosedFormBranches {
    fn root(&self, x: f64) -> f64 {
        (self.amplitude * self.amplitude - x * x).max(0.0).sqrt()
    }

    pub fn upper(&self, x: f64) -> f64 {
        -self.omega * self.omega * x + self.half_width * self.root(x)
    }

    pub fn lower(&self, x: f64) -> f64 {
        -self.omega * self.omega * x - self.half_width * self.root(x)
    }
}

/// Relative slack allowed when checking a tabulated span against a signal.
const SPAN_SLACK: f64 = 1e-9;

/// Parallel elasticity Fs(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElasticityProfile {
    /// `Σ coeffs[k]·x^k`; `coeffs[0]` is the constant term.
    Polynomial { coeffs: Vec<f64> },
    /// Piecewise-linear through `(x[i], f[i])`.
    Tabulated { x: Vec<f64>, f: Vec<f64> },
}

impl ElasticityProfile {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self, PlantError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(PlantError::InvalidProfile(
                "polynomial coefficients must be finite".into(),
            ));
        }
        Ok(ElasticityProfile::Polynomial { coeffs })
    }

    /// `αx + βx³`.
    pub fn duffing(alpha: f64, beta: f64) -> Self {
        ElasticityProfile::Polynomial {
            coeffs: vec![0.0, alpha, 0.0, beta],
        }
    }

    pub fn tabulated(x: Vec<f64>, f: Vec<f64>) -> Result<Self, PlantError> {
        if x.len() != f.len() || x.len() < 2 {
            return Err(PlantError::InvalidProfile(
                "table needs at least two (x, f) pairs of equal length".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PlantError::InvalidProfile(
                "table x-grid must be strictly increasing".into(),
            ));
        }
        if x.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(PlantError::InvalidProfile(
                "table entries must be finite".into(),
            ));
        }
        Ok(ElasticityProfile::Tabulated { x, f })
    }

    /// `−branch(x)`, the elasticity lying on a loop boundary.
    pub fn negated_branch(x_grid: &[f64], branch: &[f64]) -> Result<Self, PlantError> {
        Self::tabulated(x_grid.to_vec(), branch.iter().map(|v| -v).collect())
    }

    /// `[lo, hi]` for tabulated profiles, `None` for polynomials.
    pub fn span(&self) -> Option<(f64, f64)> {
        match self {
            ElasticityProfile::Polynomial { .. } => None,
            ElasticityProfile::Tabulated { x, .. } => Some((x[0], x[x.len() - 1])),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, PlantError> {
        if let Some((lo, hi)) = self.span() {
            let slack = SPAN_SLACK * (hi - lo);
            if x < lo - slack || x > hi + slack || x.is_nan() {
                return Err(PlantError::OutOfRange { x, lo, hi });
            }
        }
        Ok(self.eval_clamped(x))
    }

    /// Like [`eval`](Self::eval) but clamps tabulated profiles at their ends.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        match self {
            ElasticityProfile::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            ElasticityProfile::Tabulated { x: xs, f } => interp_linear(xs, f, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn duffing_inelastic_load_at_extremum() {
        let p = PlantModel::duffing(2.0).unwrap();
        let s = PeriodicSignal::simple_harmonic(1.0, 2.0).unwrap();
        assert!((p.inelastic_load(&s, 0.0).unwrap() + 4.0).abs() < 1e-14);
    }

    #[test]
    fn multiharmonic_peak_inelastic_load() {
        let p = PlantModel::duffing(2.0).unwrap();
        let s = PeriodicSignal::multiharmonic(1.0, 1.0, 0.05).unwrap();
        assert!((p.inelastic_load(&s, 0.0).unwrap() + 1.4).abs() < 1e-14);
    }

    #[test]
    fn linear_inelastic_load_quarter_period() {
        // direct substitution: ẍ(π/2) = -cos(π/2) ≈ 0, ẋ(π/2) = -sin(π/2) = -1,
        // G = ẍ + 2·0.1·1·ẋ = -0.2
        let p = PlantModel::linear(0.1, 1.0).unwrap();
        let s = PeriodicSignal::simple_harmonic(1.0, 1.0).unwrap();
        let t = PI / 2.0;
        let oracle = -(t.cos()) + 2.0 * 0.1 * 1.0 * (-(t.sin()));
        let g = p.inelastic_load(&s, t).unwrap();
        assert!((g - oracle).abs() < 1e-15);
        assert!((g + 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_plants() {
        assert!(PlantModel::duffing(0.0).is_err());
        assert!(PlantModel::linear(-0.1, 1.0).is_err());
        assert!(PlantModel::linear(0.1, 0.0).is_err());
    }

    #[test]
    fn polynomial_elasticity_values() {
        let fs = ElasticityProfile::duffing(1.0, 3.0);
        assert_eq!(fs.eval(1.0).unwrap(), 4.0);
        assert_eq!(fs.eval(0.0).unwrap(), 0.0);
        let omega = 2.0 * PI;
        let family = ElasticityProfile::duffing(omega * omega, 0.0);
        assert!((family.eval(1.0).unwrap() - 39.478_417_604_357_43).abs() < 1e-12);
    }

    #[test]
    fn tabulated_elasticity_range() {
        let fs = ElasticityProfile::tabulated(vec![-1.0, 0.0, 1.0], vec![-2.0, 0.0, 4.0]).unwrap();
        assert_eq!(fs.eval(0.5).unwrap(), 2.0);
        assert!(matches!(fs.eval(1.5), Err(PlantError::OutOfRange { .. })));
        assert!(ElasticityProfile::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn linear_resonance_cancels_stiffness() {
        let (zeta, w0) = (0.2, 3.0);
        let p = PlantModel::linear(zeta, w0).unwrap();
        let fs = ElasticityProfile::duffing(w0 * w0, 0.0);
        let s = PeriodicSignal::simple_harmonic(0.7, w0).unwrap();
        for i in 0..20 {
            let t = 0.137 * i as f64;
            let f = p.total_load(&fs, &s, t).unwrap();
            let expect = 2.0 * zeta * w0 * s.velocity(t);
            assert!((f - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn family_member_has_zero_load_at_extremum() {
        let (delta, omega, amp) = (4.0, 2.0 * PI, 1.0);
        let p = PlantModel::duffing(delta).unwrap();
        let s = PeriodicSignal::simple_harmonic(amp, omega).unwrap();
        for beta_star in [-1.0, 0.0, 0.5, 1.2] {
            let beta = beta_star * omega * omega;
            let alpha = omega * omega - beta * amp * amp;
            let fs = ElasticityProfile::duffing(alpha, beta);
            assert!(p.total_load(&fs, &s, 0.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_plant_is_unsupported() {
        use crate::work_loop::import_loop;
        let wl = import_loop(&[(-1.0, 0.0, 0.0), (0.0, 1.0, -1.0), (1.0, 0.0, 0.0)]).unwrap();
        let p = PlantModel::Tabulated(Box::new(wl));
        let s = PeriodicSignal::simple_harmonic(1.0, 1.0).unwrap();
        let fs = ElasticityProfile::duffing(1.0, 0.0);
        assert_eq!(
            p.total_load(&fs, &s, 0.0),
            Err(PlantError::UnsupportedPlant)
        );
        assert_eq!(
            p.closed_form_branches(&s).unwrap_err(),
            PlantError::UnsupportedPlant
        );
    }

    #[test]
    fn closed_form_branch_values() {
        let p = PlantModel::duffing(4.0).unwrap();
        let s = PeriodicSignal::simple_harmonic(1.0, 2.0 * PI).unwrap();
        let b = p.closed_form_branches(&s).unwrap();
        assert!((b.upper(0.0) - 8.0 * PI).abs() < 1e-12);
        assert!((b.lower(0.0) + 8.0 * PI).abs() < 1e-12);
        assert_eq!(b.upper(1.0), b.lower(1.0));
        assert_eq!(b.upper(-1.0), b.lower(-1.0));

        let p = PlantModel::duffing(2.0).unwrap();
        let s = PeriodicSignal::simple_harmonic(1.0, 2.0).unwrap();
        let b = p.closed_form_branches(&s).unwrap();
        assert!((b.upper(0.5) - (-2.0 + 4.0 * 0.75f64.sqrt())).abs() < 1e-14);
        assert!((b.upper(0.5) - 1.4641).abs() < 1e-4);

        let s = PeriodicSignal::multiharmonic(1.0, 2.0, 0.1).unwrap();
        assert_eq!(
            p.closed_form_branches(&s),
            Err(PlantError::NotSimpleHarmonic)
        );
    }

    #[test]
    fn closed_form_matches_time_domain() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for plant in [
            PlantModel::duffing(1.7).unwrap(),
            PlantModel::linear(0.15, 2.3).unwrap(),
        ] {
            let s = PeriodicSignal::simple_harmonic(0.8, 3.1).unwrap();
            let b = plant.closed_form_branches(&s).unwrap();
            let period = s.period();
            let scale =
                s.acceleration_scale() + plant.damping_coefficient().unwrap() * s.velocity_scale();
            for _ in 0..100 {
                // rising half-cycle is (T/2, T), falling is (0, T/2)
                let rise = period * (0.5 + 0.5 * rng.random::<f64>());
                let g = plant.inelastic_load(&s, rise).unwrap();
                assert!((b.upper(s.position(rise)) - g).abs() < 1e-10 * scale);
                let fall = period * 0.5 * rng.random::<f64>();
                let g = plant.inelastic_load(&s, fall).unwrap();
                assert!((b.lower(s.position(fall)) - g).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn linear_branch_identity() {
        let (zeta, w0, omega, amp) = (0.1, 1.3, 0.9, 1.1);
        let p = PlantModel::linear(zeta, w0).unwrap();
        let s = PeriodicSignal::simple_harmonic(amp, omega).unwrap();
        let fs = ElasticityProfile::duffing(w0 * w0, 0.0);
        let b = p.closed_form_branches(&s).unwrap();
        let period = s.period();
        for i in 1..50 {
            let t = period * (0.5 + 0.5 * i as f64 / 50.0);
            let x = s.position(t);
            let f = p.total_load(&fs, &s, t).unwrap();
            assert!((b.upper(x) + w0 * w0 * x - f).abs() < 1e-10);
        }
    }
}
