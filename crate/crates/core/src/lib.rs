//! Work-loop analysis of forced nonlinear oscillators.
//!
//! A periodic output x(t) and the load that produces it trace a closed curve
//! in the (x, load) plane. When the curve is simple and at most bivalued it
//! splits into an upper branch (ẋ > 0) and a lower branch (ẋ < 0), and the
//! actuator never does negative work exactly when a parallel elasticity
//! Fs(x) satisfies `G⁻(x) ≤ −Fs(x) ≤ G⁺(x)` against the inelastic loop G±.
//!
//! Modules:
//! - [`signals`]: harmonic-series outputs and their half-cycle structure
//! - [`plants`]: inelastic dynamics and elasticities
//! - [`work_loop`]: loop construction, import/export, power metrics
//! - [`resonance`]: time-domain and elastic-bound tests, one-way drive
//! - [`duffing_opt`]: the energy-resonant Duffing stiffness family
//! - [`freqband`]: frequency-band resonance windows
//! - [`numerics`]: root finding, quadrature, interpolation
//! - [`cli`]: configuration, orchestration and CSV/SVG output
//! - [`svg`]: plots of loops and elasticities

// `!(x > 0.0)` is used deliberately so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod duffing_opt;
pub mod freqband;
pub mod io;
pub mod numerics;
pub mod plants;
pub mod resonance;
pub mod signals;
pub mod svg;
pub mod work_loop;

pub use duffing_opt::{beta_star_crit, optimal_family, DuffingDesign};
pub use freqband::{find_band, BandProblem, BandSearch, FreqBandResult};
pub use plants::{ElasticityProfile, PlantModel};
pub use resonance::{check_bounds, check_time_domain, one_way_drive, ResonanceReport, Side};
pub use signals::PeriodicSignal;
pub use work_loop::{build_loop, import_loop, power_metrics, BranchKind, PowerMetrics, WorkLoop};
