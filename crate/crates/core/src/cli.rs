//! `workloop <command> <config.toml> [--key.path value ...]`
//!
//! The config is a TOML file; every dotted `--key.path value` pair on the
//! command line overrides the matching entry before validation. Reports go to
//! stdout as `key=value` lines, files to the paths under `[output]`. Failures
//! print one `error kind=... reason=...` line on stderr and exit with 2
//! (config), 3 (numerical) or 4 (I/O).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::duffing_opt::{
    forward_verify, is_valid, numeric_beta_star_crit, optimal_family, required_forcing,
    DuffingDesign,
};
use crate::freqband::{find_band, omega_of_rho, BandProblem, BandSearch, RHO_WINDOW_HI};
use crate::io::fmt_num;
use crate::plants::{ElasticityProfile, PlantModel};
use crate::resonance::{check_bounds, check_time_domain, one_way_drive, Side};
use crate::signals::PeriodicSignal;
use crate::svg::{svg_document, LoopTrace, OverlayTrace};
use crate::work_loop::{
    build_loop, power_metrics, BranchKind, TimeSeries, WorkLoop, DEFAULT_GRID_SIZE,
    DEFAULT_QUAD_POINTS,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    ConfigInvalid(String),
    #[error("{0}")]
    NumericalFailure(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            CliError::NumericalFailure(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "config-invalid",
            CliError::NumericalFailure(_) => "numerical-failure",
            CliError::Io(_) => "io",
        }
    }

    /// Single-line diagnostic for stderr.
    pub fn diagnostic(&self) -> String {
        let reason: String = self
            .to_string()
            .chars()
            .map(|c| if c.is_control() { ' ' } else { c })
            .collect();
        format!(
            "error kind={} exit={} reason={}",
            self.kind(),
            self.exit_code(),
            reason
        )
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::ConfigInvalid(e.to_string())
}

fn numeric_err(e: impl std::fmt::Display) -> CliError {
    CliError::NumericalFailure(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Loop, power metrics and elastic-bound report for one state.
    Analyze,
    /// Sweep of the energy-resonant Duffing stiffness family.
    DuffingOpt,
    /// Elasticity on one loop boundary and its duty cycle.
    OneWay,
    /// Frequency band of the third-harmonic waveform family.
    FreqBand,
    /// Forward simulation of a Duffing design.
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::DuffingOpt => "duffing-opt",
            Command::OneWay => "one-way",
            Command::FreqBand => "freq-band",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "workloop",
    version,
    about = "Work-loop analysis of forced oscillators"
)]
struct Args {
    command: Command,
    config: PathBuf,
    /// `--section.key value` pairs overriding the config file.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantRecord {
    Linear {
        zeta: f64,
        omega0: f64,
    },
    Duffing {
        delta: f64,
    },
    /// Inelastic loop read from an `x,f_upper,f_lower` CSV file.
    Tabulated {
        table: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DuffingRecord {
    pub delta: Option<f64>,
    pub omega: Option<f64>,
    pub amplitude: Option<f64>,
    pub beta_star: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OneWayRecord {
    pub side: Option<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepRecord {
    pub variable: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SweepRecord {
    fn points(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|k| {
                if k == n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsRecord {
    pub grid_size: usize,
    pub quad_points: usize,
    pub time_samples: usize,
    pub band_step: f64,
    pub band_tol: f64,
    pub periods: usize,
    pub steps_per_period: usize,
}

impl Default for NumericsRecord {
    fn default() -> Self {
        let band = BandSearch::default();
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            quad_points: DEFAULT_QUAD_POINTS,
            time_samples: 8192,
            band_step: band.step,
            band_tol: band.tol,
            periods: 10,
            steps_per_period: 2000,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// Copy of the stdout report.
    pub report: Option<PathBuf>,
}

/// A parsed, not yet validated, job description.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub plant: Option<PlantRecord>,
    pub elasticity: Option<ElasticityProfile>,
    pub signal: Option<PeriodicSignal>,
    pub duffing: Option<DuffingRecord>,
    pub one_way: Option<OneWayRecord>,
    pub sweep: Option<SweepRecord>,
    #[serde(default)]
    pub numerics: NumericsRecord,
    #[serde(default)]
    pub output: OutputRecord,
}

impl JobConfig {
    /// Parses TOML text and applies `(dotted.key, value)` overrides.
    pub fn from_toml(text: &str, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for (key, value) in overrides {
            set_dotted(&mut table, key, parse_override(value))?;
        }
        let cfg: JobConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(s) = &self.sweep {
            if s.steps < 2 {
                return Err(CliError::ConfigInvalid(format!(
                    "sweep.steps must be at least 2, got {}",
                    s.steps
                )));
            }
            if !(s.lo.is_finite() && s.hi.is_finite() && s.hi > s.lo) {
                return Err(CliError::ConfigInvalid(format!(
                    "sweep needs finite lo < hi, got [{}, {}]",
                    s.lo, s.hi
                )));
            }
        }
        let n = &self.numerics;
        if n.grid_size < 3 || n.quad_points < 2 || n.time_samples < 3 {
            return Err(CliError::ConfigInvalid(
                "numerics: grid_size >= 3, quad_points >= 2 and time_samples >= 3 required".into(),
            ));
        }
        if !(n.band_step > 0.0 && n.band_tol > 0.0) {
            return Err(CliError::ConfigInvalid(
                "numerics: band_step and band_tol must be positive".into(),
            ));
        }
        Ok(())
    }

    fn sweep_for(&self, variable: &str) -> Result<Option<&SweepRecord>, CliError> {
        match &self.sweep {
            Some(s) if s.variable != variable => Err(CliError::ConfigInvalid(format!(
                "sweep.variable must be `{variable}` here, got `{}`",
                s.variable
            ))),
            other => Ok(other.as_ref()),
        }
    }

    fn require_signal(&self) -> Result<&PeriodicSignal, CliError> {
        self.signal
            .as_ref()
            .ok_or_else(|| CliError::ConfigInvalid("missing [signal] section".into()))
    }

    fn require_duffing(&self) -> Result<&DuffingRecord, CliError> {
        self.duffing
            .as_ref()
            .ok_or_else(|| CliError::ConfigInvalid("missing [duffing] section".into()))
    }
}

fn parse_override(raw: &str) -> toml::Value {
    // TOML literal if it parses as one, plain string otherwise
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::ConfigInvalid(format!(
            "malformed override key `{key}`"
        )));
    }
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            CliError::ConfigInvalid(format!("override `{key}`: `{p}` is not a table"))
        })?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn split_overrides(raw: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(flag) = it.next() {
        let key = flag.strip_prefix("--").ok_or_else(|| {
            CliError::ConfigInvalid(format!("expected `--key value`, got `{flag}`"))
        })?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            continue;
        }
        let value = it
            .next()
            .ok_or_else(|| CliError::ConfigInvalid(format!("override `{flag}` has no value")))?;
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}

/// Files produced by a run, written only once every computation succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    pub report: String,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

/// Executes one command and writes its files. Returns the report text.
pub fn run(command: Command, cfg: &JobConfig) -> Result<String, CliError> {
    let out = compute(command, cfg)?;
    let targets = [
        (&cfg.output.csv, &out.csv),
        (&cfg.output.svg, &out.svg),
        (&cfg.output.report, &Some(out.report.clone())),
    ];
    for (path, content) in targets {
        if let (Some(path), Some(content)) = (path, content) {
            write_file(path, content)?;
        }
    }
    Ok(out.report)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Executes one command without touching the file system.
pub fn compute(command: Command, cfg: &JobConfig) -> Result<Outputs, CliError> {
    let mut out = match command {
        Command::Analyze => analyze(cfg)?,
        Command::DuffingOpt => duffing_opt(cfg)?,
        Command::OneWay => one_way(cfg)?,
        Command::FreqBand => freq_band(cfg)?,
        Command::Simulate => simulate(cfg)?,
    };
    out.report = format!("command={}\n{}", command.name(), out.report);
    if !out.report.ends_with('\n') {
        out.report.push('\n');
    }
    Ok(out)
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(numeric_err)?;
    for r in rows {
        w.write_record(r).map_err(numeric_err)?;
    }
    let bytes = w.into_inner().map_err(|e| numeric_err(e.error()))?;
    String::from_utf8(bytes).map_err(numeric_err)
}

fn loop_csv(wl: &WorkLoop) -> Result<String, CliError> {
    let mut buf = Vec::new();
    wl.write_csv(&mut buf).map_err(numeric_err)?;
    String::from_utf8(buf).map_err(numeric_err)
}

fn plant_model(rec: &PlantRecord) -> Result<PlantModel, CliError> {
    match rec {
        PlantRecord::Linear { zeta, omega0 } => {
            PlantModel::linear(*zeta, *omega0).map_err(config_err)
        }
        PlantRecord::Duffing { delta } => PlantModel::duffing(*delta).map_err(config_err),
        PlantRecord::Tabulated { table } => {
            let file = fs::File::open(table)
                .map_err(|e| CliError::Io(format!("{}: {e}", table.display())))?;
            let wl = WorkLoop::read_csv(file, BranchKind::InelasticLoad).map_err(config_err)?;
            Ok(PlantModel::Tabulated(Box::new(wl)))
        }
    }
}

fn inelastic_loop(
    plant: &PlantModel,
    signal: &PeriodicSignal,
    grid_size: usize,
) -> Result<WorkLoop, CliError> {
    let g = plant.inelastic_load_fn(signal).map_err(config_err)?;
    build_loop(signal, g, BranchKind::InelasticLoad, grid_size).map_err(numeric_err)
}

fn analyze(cfg: &JobConfig) -> Result<Outputs, CliError> {
    let plant_rec = cfg
        .plant
        .as_ref()
        .ok_or_else(|| CliError::ConfigInvalid("missing [plant] section".into()))?;
    let plant = plant_model(plant_rec)?;
    let profile = cfg
        .elasticity
        .clone()
        .unwrap_or(ElasticityProfile::Polynomial { coeffs: vec![] });
    let n = &cfg.numerics;
    let mut report = String::new();

    if let PlantModel::Tabulated(table) = &plant {
        // no time base: only loop-plane quantities are available
        let wl = table.as_ref();
        let bounds = check_bounds(wl, &profile).map_err(numeric_err)?;
        let _ = writeln!(report, "p_net={}", fmt_num(wl.area()));
        let _ = writeln!(report, "{bounds}");
        let svg = svg_document(
            &[LoopTrace {
                label: "G (tabulated)",
                curve: wl,
            }],
            &[OverlayTrace {
                label: "-Fs",
                profile: &profile,
            }],
        )
        .map_err(numeric_err)?;
        return Ok(Outputs {
            report,
            csv: Some(loop_csv(wl)?),
            svg: Some(svg),
        });
    }

    let signal = cfg.require_signal()?;
    let inelastic = inelastic_loop(&plant, signal, n.grid_size)?;
    let total_fn = plant.total_load_fn(&profile, signal).map_err(config_err)?;
    let total =
        build_loop(signal, &total_fn, BranchKind::TotalLoad, n.grid_size).map_err(numeric_err)?;
    let metrics = power_metrics(signal, &total_fn, n.quad_points);
    let td = check_time_domain(signal, &total_fn, n.time_samples);
    let bounds = check_bounds(&inelastic, &profile).map_err(numeric_err)?;

    let _ = writeln!(report, "p_net={}", fmt_num(metrics.p_net));
    let _ = writeln!(report, "p_abs={}", fmt_num(metrics.p_abs));
    let _ = writeln!(report, "p_pos={}", fmt_num(metrics.p_pos));
    let _ = writeln!(report, "loop_area={}", fmt_num(total.area()));
    let _ = writeln!(report, "{bounds}");
    let _ = writeln!(report, "time_domain_resonant={}", td.resonant);
    let _ = writeln!(
        report,
        "time_domain_worst_power={}",
        fmt_num(td.worst_power)
    );

    let svg = svg_document(
        &[
            LoopTrace {
                label: "F (total)",
                curve: &total,
            },
            LoopTrace {
                label: "G (inelastic)",
                curve: &inelastic,
            },
        ],
        &[OverlayTrace {
            label: "-Fs",
            profile: &profile,
        }],
    )
    .map_err(numeric_err)?;
    Ok(Outputs {
        report,
        csv: Some(loop_csv(&total)?),
        svg: Some(svg),
    })
}

fn field(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::ConfigInvalid(format!("missing duffing.{name}")))
}

fn duffing_opt(cfg: &JobConfig) -> Result<Outputs, CliError> {
    let d = cfg.require_duffing()?;
    let (delta, omega, amp) = (
        field("delta", d.delta)?,
        field("omega", d.omega)?,
        field("amplitude", d.amplitude)?,
    );
    let base = optimal_family(delta, omega, amp, 0.0).map_err(config_err)?;
    let crit = base.beta_star_crit();
    let grid = cfg.numerics.grid_size;

    let default_sweep = SweepRecord {
        variable: "beta_star".into(),
        lo: -1.5 * crit,
        hi: 1.5 * crit,
        steps: 61,
    };
    let sweep = cfg.sweep_for("beta_star")?.unwrap_or(&default_sweep);
    let mut rows = Vec::with_capacity(sweep.steps);
    let mut valid_count = 0;
    for bs in sweep.points() {
        let design = optimal_family(delta, omega, amp, bs).map_err(config_err)?;
        let v = is_valid(&design);
        valid_count += usize::from(v.valid);
        rows.push(vec![
            fmt_num(bs),
            fmt_num(design.alpha),
            fmt_num(design.beta),
            v.valid.to_string(),
            fmt_num(v.margin),
        ]);
    }
    let numeric = numeric_beta_star_crit(delta, omega, amp, grid).map_err(numeric_err)?;

    let signal = base.signal();
    let plant = PlantModel::duffing(delta).map_err(config_err)?;
    let ellipse = inelastic_loop(&plant, &signal, grid)?;
    let members: Vec<(String, ElasticityProfile)> = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .map(|&f| {
            let d = optimal_family(delta, omega, amp, f * crit).map_err(config_err)?;
            Ok((format!("beta*={}", short(f * crit)), d.profile()))
        })
        .collect::<Result<_, CliError>>()?;
    let overlays: Vec<OverlayTrace> = members
        .iter()
        .map(|(label, profile)| OverlayTrace { label, profile })
        .collect();
    let svg = svg_document(
        &[LoopTrace {
            label: "G",
            curve: &ellipse,
        }],
        &overlays,
    )
    .map_err(numeric_err)?;

    let mut report = String::new();
    let _ = writeln!(report, "beta_star_crit={}", fmt_num(crit));
    let _ = writeln!(report, "beta_star_crit_numeric={}", fmt_num(numeric));
    let _ = writeln!(report, "sweep_points={}", rows.len());
    let _ = writeln!(report, "valid_points={valid_count}");
    Ok(Outputs {
        report,
        csv: Some(csv_text(
            &["beta_star", "alpha", "beta", "valid", "margin"],
            &rows,
        )?),
        svg: Some(svg),
    })
}

fn short(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn one_way(cfg: &JobConfig) -> Result<Outputs, CliError> {
    let plant_rec = cfg
        .plant
        .as_ref()
        .ok_or_else(|| CliError::ConfigInvalid("missing [plant] section".into()))?;
    if matches!(plant_rec, PlantRecord::Tabulated { .. }) {
        return Err(CliError::ConfigInvalid(
            "one-way needs a plant with time-domain dynamics".into(),
        ));
    }
    let plant = plant_model(plant_rec)?;
    let signal = cfg.require_signal()?;
    let side: Side = cfg
        .one_way
        .as_ref()
        .and_then(|o| o.side.as_deref())
        .unwrap_or("upper")
        .parse()
        .map_err(CliError::ConfigInvalid)?;
    let n = &cfg.numerics;
    let inelastic = inelastic_loop(&plant, signal, n.grid_size)?;
    let drive = one_way_drive(&inelastic, side).map_err(numeric_err)?;
    let total_fn = plant
        .total_load_fn(&drive.profile, signal)
        .map_err(numeric_err)?;
    let td = check_time_domain(signal, &total_fn, n.time_samples);
    let metrics = power_metrics(signal, &total_fn, n.quad_points);
    let bounds = check_bounds(&inelastic, &drive.profile).map_err(numeric_err)?;
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, f| m.max(f.abs()));

    let mut report = String::new();
    let _ = writeln!(
        report,
        "side={}",
        if side == Side::Upper {
            "upper"
        } else {
            "lower"
        }
    );
    let _ = writeln!(report, "duty_cycle={}", fmt_num(drive.duty_cycle));
    let _ = writeln!(
        report,
        "max_abs_f_upper={}",
        fmt_num(max_abs(drive.resultant.upper()))
    );
    let _ = writeln!(
        report,
        "max_abs_f_lower={}",
        fmt_num(max_abs(drive.resultant.lower()))
    );
    let _ = writeln!(report, "p_net={}", fmt_num(metrics.p_net));
    let _ = writeln!(report, "p_abs={}", fmt_num(metrics.p_abs));
    let _ = writeln!(report, "{bounds}");
    let _ = writeln!(report, "time_domain_resonant={}", td.resonant);

    let rows: Vec<Vec<String>> = match &drive.profile {
        ElasticityProfile::Tabulated { x, f } => x
            .iter()
            .zip(f)
            .map(|(x, f)| vec![fmt_num(*x), fmt_num(*f)])
            .collect(),
        ElasticityProfile::Polynomial { .. } => unreachable!("one-way profiles are tabulated"),
    };
    let svg = svg_document(
        &[
            LoopTrace {
                label: "G (inelastic)",
                curve: &inelastic,
            },
            LoopTrace {
                label: "F (one-way)",
                curve: &drive.resultant,
            },
        ],
        &[OverlayTrace {
            label: "-Fs",
            profile: &drive.profile,
        }],
    )
    .map_err(numeric_err)?;
    Ok(Outputs {
        report,
        csv: Some(csv_text(&["x", "fs"], &rows)?),
        svg: Some(svg),
    })
}

fn freq_band(cfg: &JobConfig) -> Result<Outputs, CliError> {
    let d = cfg.require_duffing()?;
    let problem = BandProblem::new(
        field("alpha", d.alpha)?,
        field("beta", d.beta)?,
        field("delta", d.delta)?,
        field("amplitude", d.amplitude)?,
    )
    .map_err(config_err)?;
    let n = &cfg.numerics;
    let search = BandSearch {
        grid_size: n.grid_size,
        step: n.band_step,
        tol: n.band_tol,
        ..BandSearch::default()
    };
    let band = find_band(&problem, &search).map_err(numeric_err)?;
    let we = band.omega_e;

    let default_sweep = SweepRecord {
        variable: "omega".into(),
        lo: omega_of_rho(we, RHO_WINDOW_HI) * 1.001,
        hi: 1.5 * band.hi.omega.min(2.0 * we),
        steps: 101,
    };
    let sweep = cfg.sweep_for("omega")?.unwrap_or(&default_sweep);
    let mut rows = Vec::with_capacity(sweep.steps);
    for omega in sweep.points() {
        if !(omega > 0.0) {
            return Err(CliError::ConfigInvalid(format!(
                "sweep omega must be positive, got {omega}"
            )));
        }
        let rho = problem.rho(omega);
        // frequencies whose waveform leaves the monotonic window have no loop
        let (margin, resonant) = match problem.report(omega, n.grid_size) {
            Ok(r) => (r.margin, r.resonant),
            Err(_) => (f64::NAN, false),
        };
        rows.push(vec![
            fmt_num(omega),
            fmt_num(rho),
            fmt_num(margin),
            resonant.to_string(),
        ]);
    }

    // loops just inside each edge, so the ρ-window edge itself stays admissible
    let inset = n.band_tol * we;
    let omegas = [band.lo.omega + inset, we, band.hi.omega - inset];
    let labels = [
        format!("Omega_lo={}", short(band.lo.omega)),
        format!("omega_e={}", short(we)),
        format!("Omega_hi={}", short(band.hi.omega)),
    ];
    let loops: Vec<WorkLoop> = omegas
        .iter()
        .map(|&w| problem.inelastic_loop(w, n.grid_size).map_err(numeric_err))
        .collect::<Result<_, _>>()?;
    let traces: Vec<LoopTrace> = loops
        .iter()
        .zip(&labels)
        .map(|(curve, label)| LoopTrace { label, curve })
        .collect();
    let profile = problem.profile();
    let svg = svg_document(
        &traces,
        &[OverlayTrace {
            label: "-Fs",
            profile: &profile,
        }],
    )
    .map_err(numeric_err)?;

    Ok(Outputs {
        report: format!("{band}\n"),
        csv: Some(csv_text(&["omega", "rho", "margin", "resonant"], &rows)?),
        svg: Some(svg),
    })
}

fn simulate(cfg: &JobConfig) -> Result<Outputs, CliError> {
    let d = cfg.require_duffing()?;
    let delta = field("delta", d.delta)?;
    let amp = field("amplitude", d.amplitude)?;
    let design: DuffingDesign = match (d.alpha, d.beta) {
        (Some(a), Some(b)) => DuffingDesign::from_stiffness(a, b, delta, amp),
        _ => optimal_family(
            delta,
            field("omega", d.omega)?,
            amp,
            d.beta_star.unwrap_or(0.0),
        ),
    }
    .map_err(config_err)?;
    let n = &cfg.numerics;
    let signal = design.signal();
    let fwd = forward_verify(&design, &signal, n.periods, n.steps_per_period);
    if !fwd.max_deviation.is_finite() {
        return Err(CliError::NumericalFailure(
            "forward simulation diverged".into(),
        ));
    }
    let validity = is_valid(&design);

    let forcing = required_forcing(&design, &signal);
    let h = signal.period() / n.quad_points as f64;
    let t: Vec<f64> = (0..n.quad_points).map(|i| i as f64 * h).collect();
    let series = TimeSeries {
        period: signal.period(),
        x: t.iter().map(|&t| signal.position(t)).collect(),
        velocity: t.iter().map(|&t| signal.velocity(t)).collect(),
        load: t.iter().map(|&t| forcing(t)).collect(),
        t,
    };
    let mut buf = Vec::new();
    series.write_csv(&mut buf).map_err(numeric_err)?;

    let mut report = String::new();
    let _ = writeln!(report, "omega={}", fmt_num(design.omega));
    let _ = writeln!(report, "beta_star={}", fmt_num(design.beta_star));
    let _ = writeln!(report, "alpha={}", fmt_num(design.alpha));
    let _ = writeln!(report, "beta={}", fmt_num(design.beta));
    let _ = writeln!(report, "valid={}", validity.valid);
    let _ = writeln!(report, "periods={}", fwd.periods);
    let _ = writeln!(report, "steps_per_period={}", fwd.steps_per_period);
    let _ = writeln!(report, "max_deviation={}", fmt_num(fwd.max_deviation));
    Ok(Outputs {
        report,
        csv: Some(String::from_utf8(buf).map_err(numeric_err)?),
        svg: None,
    })
}

/// Parses arguments, runs the command, prints the report and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!(
                "{}",
                CliError::ConfigInvalid(first.to_string()).diagnostic()
            );
            return 2;
        }
    };
    match execute(&args) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<String, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let overrides = split_overrides(&args.overrides)?;
    let cfg = JobConfig::from_toml(&text, &overrides)?;
    run(args.command, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUFFING_OPT: &str = r#"
[duffing]
delta = 4.0
omega = 6.283185307179586
amplitude = 1.0

[sweep]
variable = "beta_star"
lo = -2.0
hi = 2.0
steps = 9
"#;

    fn ov(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    #[test]
    fn overrides_take_precedence_and_create_tables() {
        let cfg = JobConfig::from_toml(
            DUFFING_OPT,
            &[
                ov("sweep.steps", "5"),
                ov("output.csv", "out.csv"),
                ov("numerics.grid_size", "129"),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sweep.unwrap().steps, 5);
        assert_eq!(cfg.output.csv, Some(PathBuf::from("out.csv")));
        assert_eq!(cfg.numerics.grid_size, 129);
    }

    #[test]
    fn single_step_sweep_is_invalid() {
        let err = JobConfig::from_toml(DUFFING_OPT, &[ov("sweep.steps", "1")]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err
            .diagnostic()
            .starts_with("error kind=config-invalid exit=2 reason="));
    }

    #[test]
    fn unknown_keys_and_bad_types_are_invalid() {
        assert!(JobConfig::from_toml(DUFFING_OPT, &[ov("duffing.gamma", "1")]).is_err());
        assert!(JobConfig::from_toml(DUFFING_OPT, &[ov("duffing.delta", "four")]).is_err());
        assert!(JobConfig::from_toml(DUFFING_OPT, &[ov("sweep..lo", "1")]).is_err());
    }

    #[test]
    fn override_flags_split() {
        let raw: Vec<String> = ["--a.b", "1", "--c=x"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            split_overrides(&raw).unwrap(),
            vec![ov("a.b", "1"), ov("c", "x")]
        );
        assert!(split_overrides(&["--a".to_string()]).is_err());
        assert!(split_overrides(&["a".to_string()]).is_err());
    }

    #[test]
    fn duffing_opt_sweep_marks_validity() {
        let cfg = JobConfig::from_toml(DUFFING_OPT, &[]).unwrap();
        let out = compute(Command::DuffingOpt, &cfg).unwrap();
        let csv = out.csv.unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("beta_star,alpha,beta,valid,margin"));
        let valid: Vec<bool> = lines.map(|l| l.split(',').nth(3) == Some("true")).collect();
        // β* = −2, −1.5, …, 2 against β*crit ≈ 1.273
        assert_eq!(
            valid,
            [false, false, true, true, true, true, true, false, false]
        );
        assert!(out.report.contains("beta_star_crit=1.27323954473516e0"));
    }

    #[test]
    fn simulate_needs_duffing_section() {
        let cfg = JobConfig::from_toml("", &[]).unwrap();
        assert_eq!(compute(Command::Simulate, &cfg).unwrap_err().exit_code(), 2);
    }
}
