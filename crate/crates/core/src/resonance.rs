//! Energy-resonance tests in the time domain and in the work-loop plane,
//! and one-way-drive elasticities.

use std::fmt;

use thiserror::Error;

use crate::io::fmt_num;
use crate::numerics::golden_min;
use crate::plants::{ElasticityProfile, PlantError};
use crate::signals::PeriodicSignal;
use crate::work_loop::{BranchKind, LoopError, TimeSeries, WorkLoop};

/// Relative margin tolerance for counting a state as resonant.
pub const RESONANCE_REL_TOL: f64 = 1e-9;
/// Loads below this fraction of the peak load count as zero for duty cycles.
pub const DUTY_CYCLE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error("bound check needs an inelastic-load loop")]
    NotInelastic,
    #[error("tabulated elasticity spans [{lo}, {hi}], loop spans [{loop_lo}, {loop_hi}]")]
    GridMismatch {
        lo: f64,
        hi: f64,
        loop_lo: f64,
        loop_hi: f64,
    },
    #[error("one-way drive needs a loop built from a time series")]
    MissingTimeSeries,
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Loop(#[from] LoopError),
}

/// Outcome of the time-domain test `F(t)ẋ(t) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainCheck {
    pub resonant: bool,
    /// Time of the most negative instantaneous power.
    pub worst_t: f64,
    pub worst_power: f64,
    /// Largest |Fẋ| seen; the scale for the tolerance.
    pub power_scale: f64,
}

/// Samples `F(t)ẋ(t)` uniformly and refines every sampled local minimum by
/// golden-section search, so narrow negative dips between samples are found.
pub fn check_time_domain<F>(signal: &PeriodicSignal, load: F, samples: usize) -> TimeDomainCheck
where
    F: Fn(f64) -> f64,
{
    let n = samples.max(3);
    let period = signal.period();
    let h = period / n as f64;
    let power = |t: f64| load(t) * signal.velocity(t);
    let p: Vec<f64> = (0..n).map(|i| power(i as f64 * h)).collect();
    let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut worst_t = 0.0;
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let prev = p[(i + n - 1) % n];
        let next = p[(i + 1) % n];
        let mut cand = (i as f64 * h, p[i]);
        if p[i] <= prev && p[i] <= next {
            let t0 = i as f64 * h;
            let refined = golden_min(power, t0 - h, t0 + h, 60);
            if refined.1 < cand.1 {
                cand = (refined.0.rem_euclid(period), refined.1);
            }
        }
        if cand.1 < worst {
            worst = cand.1;
            worst_t = cand.0;
        }
    }
    TimeDomainCheck {
        resonant: worst >= -RESONANCE_REL_TOL * scale,
        worst_t,
        worst_power: worst,
        power_scale: scale,
    }
}

/// Elastic-bound evaluation of an inelastic loop against an elasticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceReport {
    pub resonant: bool,
    /// `min over interior x of min(G⁺ + Fs, −Fs − G⁻)`.
    pub margin: f64,
    pub violation_x: f64,
    /// `|G±(max x) + Fs(max x)|`, worst of the two branches.
    pub residual_at_max: f64,
    /// `|G±(min x) + Fs(min x)|`, worst of the two branches.
    pub residual_at_min: f64,
    /// Tolerance used for `resonant`.
    pub tolerance: f64,
}

impl ResonanceReport {
    /// Largest peak-load equality residual.
    pub fn equality_residual(&self) -> f64 {
        self.residual_at_max.max(self.residual_at_min)
    }
}

impl fmt::Display for ResonanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "resonant={}", self.resonant)?;
        writeln!(f, "margin={}", fmt_num(self.margin))?;
        writeln!(f, "violation_x={}", fmt_num(self.violation_x))?;
        writeln!(f, "residual_at_max={}", fmt_num(self.residual_at_max))?;
        write!(f, "residual_at_min={}", fmt_num(self.residual_at_min))
    }
}

/// Evaluates `G⁻(x) ≤ −Fs(x) ≤ G⁺(x)` on the loop's x-grid.
///
/// The margin is taken over interior grid points; at the two closure points
/// the branches meet and only the peak-load equality can hold, so those are
/// reported separately as residuals. Resonant iff
/// `margin ≥ −1e-9·max(|G⁺|, |G⁻|)`.
pub fn check_bounds(
    inelastic: &WorkLoop,
    profile: &ElasticityProfile,
) -> Result<ResonanceReport, ResonanceError> {
    if inelastic.kind() != BranchKind::InelasticLoad {
        return Err(ResonanceError::NotInelastic);
    }
    check_span(inelastic, profile)?;
    let xs = inelastic.x_grid();
    let (up, lo) = (inelastic.upper(), inelastic.lower());
    let n = xs.len();
    let fs: Vec<f64> = xs.iter().map(|&x| profile.eval_clamped(x)).collect();

    let mut margin = f64::INFINITY;
    let mut violation_x = xs[n / 2];
    let interior = if n > 2 { 1..n - 1 } else { 0..n };
    for i in interior {
        let m = (up[i] + fs[i]).min(-fs[i] - lo[i]);
        if m < margin {
            margin = m;
            violation_x = xs[i];
        }
    }
    let residual = |i: usize| (up[i] + fs[i]).abs().max((lo[i] + fs[i]).abs());
    let tolerance = RESONANCE_REL_TOL * inelastic.force_scale();
    Ok(ResonanceReport {
        resonant: margin >= -tolerance,
        margin,
        violation_x,
        residual_at_max: residual(n - 1),
        residual_at_min: residual(0),
        tolerance,
    })
}

fn check_span(wl: &WorkLoop, profile: &ElasticityProfile) -> Result<(), ResonanceError> {
    if let Some((lo, hi)) = profile.span() {
        let slack = 1e-9 * (wl.max_x() - wl.min_x());
        if lo > wl.min_x() + slack || hi < wl.max_x() - slack {
            return Err(ResonanceError::GridMismatch {
                lo,
                hi,
                loop_lo: wl.min_x(),
                loop_hi: wl.max_x(),
            });
        }
    }
    Ok(())
}

/// Which loop boundary the one-way elasticity follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `Fs = −G⁺`: zero load while ẋ > 0.
    Upper,
    /// `Fs = −G⁻`: zero load while ẋ < 0.
    Lower,
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper" => Ok(Side::Upper),
            "lower" => Ok(Side::Lower),
            other => Err(format!("side must be `upper` or `lower`, got `{other}`")),
        }
    }
}

/// A one-way-drive state: the elasticity, the resulting total-load loop and
/// the fraction of the period during which the actuator carries load.
#[derive(Debug, Clone)]
pub struct OneWayDrive {
    pub profile: ElasticityProfile,
    pub resultant: WorkLoop,
    pub duty_cycle: f64,
}

/// Builds the extremal elasticity lying on one boundary of the inelastic
/// loop. The resultant loop has one identically zero branch; the other is
/// `∓(G⁺ − G⁻)`.
pub fn one_way_drive(inelastic: &WorkLoop, side: Side) -> Result<OneWayDrive, ResonanceError> {
    if inelastic.kind() != BranchKind::InelasticLoad {
        return Err(ResonanceError::NotInelastic);
    }
    let source = inelastic
        .source()
        .ok_or(ResonanceError::MissingTimeSeries)?;
    let (up, lo) = (inelastic.upper(), inelastic.lower());
    let boundary = match side {
        Side::Upper => up,
        Side::Lower => lo,
    };
    let profile = ElasticityProfile::negated_branch(inelastic.x_grid(), boundary)?;
    let f_upper: Vec<f64> = up.iter().zip(boundary).map(|(g, b)| g - b).collect();
    let f_lower: Vec<f64> = lo.iter().zip(boundary).map(|(g, b)| g - b).collect();

    let resultant_stub = inelastic.with_branches(f_upper, f_lower, BranchKind::TotalLoad, None);
    // Load along time follows the branch selected by the velocity sign.
    let load: Vec<f64> = source
        .x
        .iter()
        .zip(&source.velocity)
        .map(|(&x, &v)| {
            if v > 0.0 {
                resultant_stub.upper_at(x)
            } else {
                resultant_stub.lower_at(x)
            }
        })
        .collect();
    let peak = load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // round-off floor relative to the inelastic loads, for zero-area loops
    let threshold = (DUTY_CYCLE_REL_TOL * peak).max(1e-12 * inelastic.force_scale());
    let duty_cycle = if peak > threshold {
        let active = load.iter().filter(|f| f.abs() > threshold).count();
        active as f64 / load.len() as f64
    } else {
        0.0
    };
    let series = TimeSeries {
        period: source.period,
        t: source.t.clone(),
        x: source.x.clone(),
        velocity: source.velocity.clone(),
        load,
    };
    let resultant = inelastic.with_branches(
        resultant_stub.upper().to_vec(),
        resultant_stub.lower().to_vec(),
        BranchKind::TotalLoad,
        Some(series),
    );
    Ok(OneWayDrive {
        profile,
        resultant,
        duty_cycle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::PlantModel;
    use crate::work_loop::{build_loop, import_loop, DEFAULT_GRID_SIZE};
    use std::f64::consts::PI;

    fn duffing_loop(delta: f64, omega: f64, amp: f64) -> (PeriodicSignal, WorkLoop) {
        let s = PeriodicSignal::simple_harmonic(amp, omega).unwrap();
        let g = PlantModel::duffing(delta).unwrap();
        let wl = build_loop(
            &s,
            g.inelastic_load_fn(&s).unwrap(),
            BranchKind::InelasticLoad,
            DEFAULT_GRID_SIZE,
        )
        .unwrap();
        (s, wl)
    }

    fn family(omega: f64, amp: f64, beta_star: f64) -> ElasticityProfile {
        let beta = beta_star * omega * omega;
        ElasticityProfile::duffing(omega * omega - beta * amp * amp, beta)
    }

    #[test]
    fn linear_time_domain_cases() {
        let (zeta, w0) = (0.1, 2.0);
        let p = PlantModel::linear(zeta, w0).unwrap();
        let fs = ElasticityProfile::duffing(w0 * w0, 0.0);
        let s = PeriodicSignal::simple_harmonic(1.0, w0).unwrap();
        let f = p.total_load_fn(&fs, &s).unwrap();
        assert!(check_time_domain(&s, &f, 1024).resonant);

        let s = PeriodicSignal::simple_harmonic(1.0, 0.5 * w0).unwrap();
        let f = p.total_load_fn(&fs, &s).unwrap();
        let check = check_time_domain(&s, &f, 1024);
        // dense-sampling oracle
        let dense_min = (0..100_000)
            .map(|i| {
                let t = s.period() * i as f64 / 100_000.0;
                f(t) * s.velocity(t)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(dense_min < 0.0);
        assert!(!check.resonant);
        assert!(check.worst_power <= dense_min + 1e-9);
    }

    #[test]
    fn duffing_simple_harmonic_at_energy_resonant_frequency() {
        let (alpha, beta, delta) = (1.0, 3.0, 2.0);
        let s = PeriodicSignal::simple_harmonic(1.0, 2.0).unwrap();
        let p = PlantModel::duffing(delta).unwrap();
        let fs = ElasticityProfile::duffing(alpha, beta);
        let f = p.total_load_fn(&fs, &s).unwrap();
        assert!(check_time_domain(&s, &f, 1024).resonant);
    }

    #[test]
    fn family_member_inside_bound_is_resonant() {
        let (_, wl) = duffing_loop(4.0, 2.0 * PI, 1.0);
        let r = check_bounds(&wl, &family(2.0 * PI, 1.0, 0.0)).unwrap();
        assert!(r.resonant);
        assert!(r.margin > 0.0);
        assert!(r.equality_residual() < 1e-9 * wl.force_scale());
    }

    #[test]
    fn family_member_outside_bound_fails_in_interior() {
        let omega = 2.0 * PI;
        let crit = 2.0 * 4.0 / omega;
        let (_, wl) = duffing_loop(4.0, omega, 1.0);
        let r = check_bounds(&wl, &family(omega, 1.0, 1.5 * crit)).unwrap();
        assert!(!r.resonant);
        assert!(r.violation_x.abs() > 0.05 && r.violation_x.abs() < 0.95);
        // violation lies between the real roots of the critical quartic
        let c = (4.0 / (1.5 * crit * omega)).powi(2);
        let disc = (1.0 - 4.0 * c).sqrt();
        let (r1, r2) = (((1.0 - disc) / 2.0).sqrt(), ((1.0 + disc) / 2.0).sqrt());
        assert!(r.violation_x.abs() >= r1 - 0.01 && r.violation_x.abs() <= r2 + 0.01);
    }

    #[test]
    fn zero_elasticity_is_not_resonant() {
        let (_, wl) = duffing_loop(1.0, 3.0, 1.0);
        let r = check_bounds(&wl, &ElasticityProfile::duffing(0.0, 0.0)).unwrap();
        assert!(!r.resonant);
        assert!(r.residual_at_max > 1.0);
    }

    #[test]
    fn bound_check_requires_inelastic_loop_and_span() {
        let wl = import_loop(&[(-1.0, 0.0, 0.0), (0.0, 1.0, -1.0), (1.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(
            check_bounds(&wl, &ElasticityProfile::duffing(1.0, 0.0)),
            Err(ResonanceError::NotInelastic)
        ));
        let (_, wl) = duffing_loop(1.0, 1.0, 1.0);
        let short = ElasticityProfile::tabulated(vec![-0.5, 0.5], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            check_bounds(&wl, &short),
            Err(ResonanceError::GridMismatch { .. })
        ));
    }

    #[test]
    fn one_way_drive_on_ellipse() {
        let (delta, omega) = (4.0, 2.0 * PI);
        let (s, wl) = duffing_loop(delta, omega, 1.0);
        let drive = one_way_drive(&wl, Side::Upper).unwrap();
        let scale = wl.force_scale();
        assert!(drive
            .resultant
            .upper()
            .iter()
            .all(|f| f.abs() < 1e-9 * scale));
        for (i, &x) in wl.x_grid().iter().enumerate() {
            let expect = -2.0 * delta * omega * (1.0 - x * x).max(0.0).sqrt();
            assert!((drive.resultant.lower()[i] - expect).abs() < 1e-9 * scale);
            assert!(drive.resultant.lower()[i] <= 0.0);
        }
        assert!((drive.duty_cycle - 0.5).abs() < 0.01);
        assert!(check_bounds(&wl, &drive.profile).unwrap().resonant);

        let p = PlantModel::duffing(delta).unwrap();
        let f = p.total_load_fn(&drive.profile, &s).unwrap();
        assert!(check_time_domain(&s, &f, 4096).resonant);

        let lower = one_way_drive(&wl, Side::Lower).unwrap();
        assert!(lower
            .resultant
            .lower()
            .iter()
            .all(|f| f.abs() < 1e-9 * scale));
        assert!(lower.resultant.upper().iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn one_way_drive_on_zero_area_loop() {
        let s = PeriodicSignal::simple_harmonic(1.0, 1.0).unwrap();
        // purely elastic "inelastic" load: both branches coincide
        let wl = build_loop(&s, |t| -3.0 * s.position(t), BranchKind::InelasticLoad, 65).unwrap();
        let drive = one_way_drive(&wl, Side::Upper).unwrap();
        assert!(drive.resultant.upper().iter().all(|&f| f == 0.0));
        assert!(drive.resultant.lower().iter().all(|f| f.abs() < 1e-12));
        assert_eq!(drive.duty_cycle, 0.0);
    }

    #[test]
    fn one_way_drive_needs_time_series() {
        let mut rows = vec![];
        for k in 0..=10 {
            let x = -1.0 + 0.2 * k as f64;
            rows.push((x, 0.0, 0.0));
        }
        let wl = import_loop(&rows).unwrap();
        let wl = wl.with_branches(
            wl.upper().to_vec(),
            wl.lower().to_vec(),
            BranchKind::InelasticLoad,
            None,
        );
        assert!(matches!(
            one_way_drive(&wl, Side::Upper),
            Err(ResonanceError::MissingTimeSeries)
        ));
    }

    #[test]
    fn driven_branch_is_unidirectional() {
        let (_, wl) = duffing_loop(0.7, 1.9, 1.3);
        let drive = one_way_drive(&wl, Side::Upper).unwrap();
        let lower = drive.resultant.lower();
        assert!(lower.iter().all(|&f| f <= 0.0) || lower.iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn report_is_key_value() {
        let (_, wl) = duffing_loop(4.0, 2.0 * PI, 1.0);
        let r = check_bounds(&wl, &family(2.0 * PI, 1.0, 0.0)).unwrap();
        let text = r.to_string();
        assert!(text.starts_with("resonant=true\nmargin="));
        assert!(text.contains("violation_x="));
    }
}
