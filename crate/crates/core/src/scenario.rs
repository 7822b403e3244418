//! Scenario files, the preset catalogue and the driver that turns a scenario
//! into CSV curves plus a `PASS`/`FAIL` summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    audit_mean_laws, build_report, extract_profile, fit_decay_exponent, random_spectrum, verify_balancing,
    verify_commutator, verify_convolution, verify_convolution_aniso, EnsembleSpec, RatePrediction, Window,
};
use crate::error::{Error, Result};
use crate::fields::{PeriodicDomain, PlaneQuadrature, ProfileShape, StripGrid, TorusGrid};
use crate::initial::InitialData;
use crate::propagator::{
    kernel_decay_ratio, linear_sweep, log_times, plane_norm_curve, CurveSet, DecayCurve, GaussianDensity, PlaneNorm,
    SharpnessWitness, WitnessSpec,
};
use crate::solver::{Domain, DtPolicy, RunStatus, Simulation, SolverConfig, Trajectory};

/// Ratio `N / ||theta0||_{H^m}` from which the energy ledger is enforced.
pub const SMALLNESS_RATIO: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Torus,
    Strip,
    PlaneBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerMode {
    /// A ledger violation fails the scenario.
    Enforce,
    /// Violations are reported only.
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanLawChecks {
    #[serde(default = "d_mean_tol")]
    pub mean_tolerance: f64,
    #[serde(default = "d_velocity_tol")]
    pub velocity_tolerance: f64,
    #[serde(default = "d_wall_tol")]
    pub wall_tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileChecks {
    #[serde(default = "d_route_tol")]
    pub route_tolerance: f64,
    /// Expected decay exponent of the horizontal-mean deviation; `-m/2` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default = "d_profile_tol")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

/// One solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "d_label")]
    pub label: String,
    pub domain: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    /// Sets `N = N_per_norm * ||theta0||_{H^m}`.
    #[serde(rename = "N_per_norm", default, skip_serializing_if = "Option::is_none")]
    pub n_per_norm: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    #[serde(rename = "Nt_final", default, skip_serializing_if = "Option::is_none")]
    pub nt_final: Option<f64>,
    #[serde(default = "d_m")]
    pub regularity: u32,
    #[serde(default = "d_true")]
    pub dealias: bool,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<DtPolicy>,
    #[serde(default = "d_initial")]
    pub initial: InitialData,
    #[serde(default = "d_profile", skip_serializing_if = "ProfileShape::is_zero")]
    pub profile: ProfileShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_laws: Option<MeanLawChecks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotic_profile: Option<ProfileChecks>,
}

/// Linear semigroup sweep on the torus or the strip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "N", default = "d_one")]
    pub n: f64,
    /// `[K1, K2]` on the torus, `[P, Q]` on the strip.
    pub modes: [usize; 2],
    #[serde(default = "d_tail")]
    pub initial: InitialData,
    #[serde(default = "d_orders")]
    pub orders: Vec<f64>,
    #[serde(rename = "Nt_min", default = "d_one")]
    pub nt_min: f64,
    #[serde(rename = "Nt_max", default = "d_sweep_max")]
    pub nt_max: f64,
    #[serde(default = "d_sweep_count")]
    pub count: usize,
}

/// `(1+Nt)^{1/4} ||e^{-tNL} f||_{L^1-multiplier} / ||f||_{H^s}` for a Gaussian `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "d_one")]
    pub amplitude: f64,
    #[serde(default = "d_one")]
    pub width: f64,
    #[serde(default = "d_two")]
    pub s: f64,
    #[serde(default = "d_kernel_xi")]
    pub xi_max: f64,
    #[serde(rename = "N", default = "d_one")]
    pub n: f64,
    #[serde(rename = "Nt_min", default = "d_one")]
    pub nt_min: f64,
    #[serde(rename = "Nt_max", default = "d_nt_plane")]
    pub nt_max: f64,
    #[serde(default = "d_plane_count")]
    pub count: usize,
    /// Allowed `max / min` of the scaled curve.
    #[serde(default = "d_factor")]
    pub factor_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSection {
    #[serde(default = "d_eps")]
    pub epsilon: f64,
    #[serde(default = "d_witness_s")]
    pub s: f64,
    #[serde(default = "d_witness_xi")]
    pub xi_max: f64,
    #[serde(rename = "N", default = "d_one")]
    pub n: f64,
    #[serde(rename = "Nt_min", default = "d_witness_lo")]
    pub nt_min: f64,
    #[serde(rename = "Nt_max", default = "d_nt_plane")]
    pub nt_max: f64,
    #[serde(default = "d_plane_count")]
    pub count: usize,
    #[serde(default = "d_js")]
    pub j: Vec<u32>,
    #[serde(default = "d_slack")]
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalancingSection {
    #[serde(default = "d_balancing_samples")]
    pub samples: usize,
    #[serde(default = "d_balancing_band")]
    pub band: usize,
    #[serde(default = "d_one")]
    pub decay: f64,
    #[serde(default = "d_m")]
    pub m: u32,
    #[serde(rename = "M", default = "d_ms")]
    pub ms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSection {
    #[serde(default = "d_ensemble")]
    pub samples: usize,
    #[serde(default = "d_ensemble_band")]
    pub band: usize,
    #[serde(default = "d_ensemble_decay")]
    pub decay: f64,
    #[serde(default = "d_three")]
    pub s: f64,
    #[serde(default = "d_drift")]
    pub drift_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionSection {
    #[serde(default = "d_ensemble")]
    pub samples: usize,
    #[serde(default = "d_ensemble_band")]
    pub band: usize,
    #[serde(default = "d_ensemble_decay")]
    pub decay: f64,
    #[serde(default = "d_two")]
    pub s: f64,
    #[serde(default = "d_two")]
    pub p: f64,
    #[serde(default = "d_two")]
    pub q: f64,
    #[serde(default = "d_one")]
    pub r: f64,
    #[serde(default = "d_drift")]
    pub drift_tolerance: f64,
    /// Also run the variant with a factor depending on `x2` only.
    #[serde(default = "d_true")]
    pub anisotropic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalitySection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balancing: Option<BalancingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutator: Option<CommutatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convolution: Option<ConvolutionSection>,
}

/// A runnable experiment with its expected outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// The statement this scenario reproduces.
    #[serde(default)]
    pub anchor: String,
    #[serde(rename = "simulation", default, skip_serializing_if = "Vec::is_empty")]
    pub simulations: Vec<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus_sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_decay: Option<KernelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<InequalitySection>,
    /// Curves are addressed as `<section>.<id>`, e.g. `torus_sweep.u2_H0`
    /// or `<simulation label>.u_H4`.
    #[serde(rename = "prediction", default, skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<RatePrediction>,
}

fn d_mean_tol() -> f64 {
    1e-8
}
fn d_velocity_tol() -> f64 {
    1e-12
}
fn d_wall_tol() -> f64 {
    1e-10
}
fn d_route_tol() -> f64 {
    1e-3
}
fn d_profile_tol() -> f64 {
    0.3
}
fn d_label() -> String {
    "sim".into()
}
fn d_m() -> u32 {
    4
}
fn d_true() -> bool {
    true
}
fn d_one() -> f64 {
    1.0
}
fn d_two() -> f64 {
    2.0
}
fn d_three() -> f64 {
    3.0
}
fn d_initial() -> InitialData {
    InitialData::BandLimited { seed: 0, band: 4, amplitude: 1e-2, mean_mode: 0.0 }
}
fn d_profile() -> ProfileShape {
    ProfileShape::Zero
}
fn d_tail() -> InitialData {
    InitialData::AlgebraicTail { seed: 0, amplitude: 1.0, regularity: 4.0, extra_decay: 0.5, horizontal_band: 2 }
}
fn d_orders() -> Vec<f64> {
    vec![0.0]
}
fn d_sweep_max() -> f64 {
    1e4
}
fn d_sweep_count() -> usize {
    81
}
fn d_kernel_xi() -> f64 {
    12.0
}
fn d_nt_plane() -> f64 {
    1e6
}
fn d_plane_count() -> usize {
    17
}
fn d_factor() -> f64 {
    3.0
}
fn d_eps() -> f64 {
    0.05
}
fn d_witness_s() -> f64 {
    4.0
}
fn d_witness_xi() -> f64 {
    256.0
}
fn d_witness_lo() -> f64 {
    1e2
}
fn d_js() -> Vec<u32> {
    vec![0, 1]
}
fn d_slack() -> f64 {
    0.02
}
fn d_balancing_samples() -> usize {
    1000
}
fn d_balancing_band() -> usize {
    12
}
fn d_ms() -> Vec<f64> {
    (0..11).map(|k| f64::from(1u32 << k)).collect()
}
fn d_ensemble() -> usize {
    100
}
fn d_ensemble_band() -> usize {
    32
}
fn d_ensemble_decay() -> f64 {
    5.0
}
fn d_drift() -> f64 {
    0.2
}

impl SimulationSection {
    /// Fills every defaulted field and returns the solver configuration.
    pub fn resolve(&mut self) -> Result<SolverConfig> {
        let ctx = |msg: String| Error::Config(format!("simulation '{}': {msg}", self.label));
        let domain = match (self.domain, self.side) {
            (DomainKind::PlaneBox, side) => Domain::PlaneBox { side: *self.side.get_or_insert(side.unwrap_or(32.0)) },
            (_, Some(_)) => return Err(ctx("key 'side' is only valid for domain = \"plane_box\"".into())),
            (DomainKind::Torus, None) => Domain::Torus,
            (DomainKind::Strip, None) => Domain::Strip,
        };
        let modes = match (self.k, self.modes) {
            (Some(k), Some(m)) if m != [k, k] => {
                return Err(ctx(format!("'K = {k}' conflicts with 'modes = {m:?}'")));
            }
            (_, Some(m)) => m,
            (Some(k), None) => [k, k],
            (None, None) => return Err(ctx("one of 'K' or 'modes' is required".into())),
        };
        self.modes = Some(modes);
        if !self.profile.is_zero() && self.domain != DomainKind::PlaneBox {
            return Err(ctx("a stratification profile is only allowed with domain = \"plane_box\"".into()));
        }
        let mut cfg = SolverConfig::new(domain, self.n.unwrap_or(1.0), self.initial.clone(), modes, 1.0);
        cfg.profile = self.profile;
        cfg.regularity = self.regularity;
        cfg.dealias = self.dealias;
        cfg.nonlinear = self.nonlinear;
        cfg.snapshot_every = self.snapshot_every;
        let hm = {
            let mut probe = cfg.clone();
            probe.n = 0.0;
            probe.profile = ProfileShape::Zero;
            Simulation::new(probe).map_err(|e| ctx(e.to_string()))?.initial_norm(f64::from(self.regularity))?
        };
        let n = match (self.n_per_norm, self.n) {
            (Some(r), _) => r * hm,
            (None, Some(n)) => n,
            (None, None) => return Err(ctx("one of 'N' or 'N_per_norm' is required".into())),
        };
        self.n = Some(n);
        cfg.n = n;
        let final_time = match (self.final_time, self.nt_final) {
            (Some(t), _) => t,
            (None, Some(nt)) if n > 0.0 => nt / n,
            (None, _) if n > 0.0 => Window::valid(modes[1]).hi / n,
            _ => return Err(ctx("with N = 0 an explicit 'final_time' is required".into())),
        };
        self.final_time = Some(final_time);
        cfg.final_time = final_time;
        cfg.dt = *self.dt.get_or_insert(DtPolicy::Cfl { safety: 0.5, dt_max: final_time / 200.0 });
        self.ledger.get_or_insert(if n >= SMALLNESS_RATIO * hm { LedgerMode::Enforce } else { LedgerMode::Report });
        cfg.validate().map_err(|e| ctx(e.to_string()))?;
        Ok(cfg)
    }

    fn default_window(&self) -> Window {
        Window::valid(self.modes.map_or(0, |m| m[1]))
    }
}

impl Scenario {
    /// Validates the scenario and fills defaults in place.
    pub fn resolve(&mut self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::Config("'id' must not be empty".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for sim in &mut self.simulations {
            if !labels.insert(sim.label.clone()) {
                return Err(Error::Config(format!("duplicate simulation label '{}'", sim.label)));
            }
            sim.resolve()?;
        }
        for reserved in ["torus_sweep", "strip_sweep", "kernel_decay", "witness"] {
            if labels.contains(reserved) {
                return Err(Error::Config(format!("simulation label '{reserved}' is reserved")));
            }
        }
        for sweep in [&self.torus_sweep, &self.strip_sweep].into_iter().flatten() {
            if !(sweep.nt_min > 0.0 && sweep.nt_max > sweep.nt_min && sweep.count >= 2 && sweep.n > 0.0) {
                return Err(Error::Config("sweep needs N > 0, 0 < Nt_min < Nt_max and count >= 2".into()));
            }
            sweep.initial.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        for p in &self.predictions {
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
            let section = p.curve.split_once('.').map(|(a, _)| a).unwrap_or("");
            let known = labels.contains(section)
                || (section == "torus_sweep" && self.torus_sweep.is_some())
                || (section == "strip_sweep" && self.strip_sweep.is_some());
            if !known {
                return Err(Error::Config(format!(
                    "prediction curve '{}' does not name a section of this scenario",
                    p.curve
                )));
            }
        }
        Ok(())
    }

    /// Replaces every random seed.
    pub fn reseed(&mut self, seed: u64) {
        for sim in &mut self.simulations {
            sim.initial = sim.initial.with_seed(seed);
        }
        for sweep in [&mut self.torus_sweep, &mut self.strip_sweep].into_iter().flatten() {
            sweep.initial = sweep.initial.with_seed(seed);
        }
        if let Some(ineq) = &mut self.inequalities {
            ineq.seed = seed;
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    s.resolve()?;
    Ok(s)
}

/// Reads a scenario file; errors carry the path plus the line and key toml reports.
pub fn parse_config(path: &Path) -> Result<Scenario> {
    let text =
        fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Serializes a scenario back to the file format.
pub fn emit(scenario: &Scenario) -> Result<String> {
    toml::to_string(scenario).map_err(|e| Error::Config(e.to_string()))
}

/// Catalogue entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PresetInfo {
    pub id: &'static str,
    pub anchor: &'static str,
}

const PRESETS: [(&str, &str); 8] = [
    ("torus-linear-rates", include_str!("../presets/torus-linear-rates.toml")),
    ("torus-nonlinear-profile", include_str!("../presets/torus-nonlinear-profile.toml")),
    ("strip-rates", include_str!("../presets/strip-rates.toml")),
    ("plane-quasilinear", include_str!("../presets/plane-quasilinear.toml")),
    ("sharpness-witness", include_str!("../presets/sharpness-witness.toml")),
    ("kernel-decay", include_str!("../presets/kernel-decay.toml")),
    ("inequalities", include_str!("../presets/inequalities.toml")),
    ("mean-laws", include_str!("../presets/mean-laws.toml")),
];

pub fn preset_ids() -> Vec<&'static str> {
    PRESETS.iter().map(|(id, _)| *id).collect()
}

pub fn preset_text(id: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(pid, _)| *pid == id)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::Config(format!("unknown preset '{id}'; known: {}", preset_ids().join(", "))))
}

pub fn preset(id: &str) -> Result<Scenario> {
    parse_scenario(preset_text(id)?)
}

/// Preset ids with the statement each reproduces.
pub fn list_scenarios() -> Result<Vec<(String, String)>> {
    PRESETS
        .iter()
        .map(|(id, text)| {
            let s = parse_scenario(text)?;
            Ok((id.to_string(), s.anchor))
        })
        .collect()
}

/// Exit status of a scenario run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    BlowUp,
    LedgerViolation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::BlowUp => 2,
            Outcome::LedgerViolation => 3,
        }
    }
}

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 4;

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    /// `(file stem, curves)`.
    pub curves: Vec<(String, CurveSet)>,
    pub summary: String,
    pub outcome: Outcome,
}

impl RunArtifacts {
    /// Writes `<stem>.csv` per curve set plus `summary.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (stem, set) in &self.curves {
            fs::write(dir.join(format!("{stem}.csv")), set.to_csv())?;
        }
        fs::write(dir.join("summary.txt"), &self.summary)?;
        Ok(())
    }
}

struct Summary {
    text: String,
    failed: bool,
}

impl Summary {
    fn check(&mut self, pass: bool, line: String) {
        self.failed |= !pass;
        let _ = writeln!(self.text, "{} {line}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&mut self, line: String) {
        let _ = writeln!(self.text, "# {line}");
    }
}

fn pm(value: f64) -> String {
    format!("{value:.3e}")
}

/// Runs every section of a resolved scenario.
pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts> {
    let mut sum = Summary { text: String::new(), failed: false };
    sum.info(format!("scenario {}", scenario.id));
    sum.info(format!("anchor: {}", scenario.anchor));
    if !scenario.description.is_empty() {
        sum.info(scenario.description.clone());
    }
    let mut curves: Vec<(String, CurveSet, Window)> = Vec::new();
    let mut blow_up = false;
    let mut ledger_broken = false;

    for sim in &scenario.simulations {
        let mut sec = sim.clone();
        let cfg = sec.resolve()?;
        let traj = Simulation::new(cfg)?.run()?;
        for w in &traj.warnings {
            sum.info(format!("{}: warning: {w}", sim.label));
        }
        sum.info(format!(
            "{}: N = {:.6e}, T = {:.6e}, steps = {}, ledger ratio = {:.6}",
            sim.label,
            traj.config.n,
            traj.config.final_time,
            traj.steps,
            traj.ledger.bound_ratio()
        ));
        match traj.status {
            RunStatus::BlowUp { t, last_good } => {
                blow_up = true;
                sum.check(false, format!("{}: blow-up at t = {t:e} (last good {last_good:e})", sim.label));
                continue;
            }
            RunStatus::LedgerViolation { t } if sec.ledger == Some(LedgerMode::Enforce) => {
                ledger_broken = true;
                sum.check(false, format!("{}: energy ledger exceeded 4 ||theta0||^2 at t = {t:e}", sim.label));
            }
            RunStatus::LedgerViolation { t } => {
                sum.info(format!("{}: ledger bound exceeded at t = {t:e} (outside the smallness regime)", sim.label));
            }
            RunStatus::Completed => {
                if sec.ledger == Some(LedgerMode::Enforce) {
                    sum.check(
                        true,
                        format!(
                            "{}: energy ledger sup + N int ||R1 theta||^2 <= 4 ||theta0||^2 (ratio {:.4})",
                            sim.label,
                            traj.ledger.bound_ratio()
                        ),
                    );
                }
            }
        }
        simulation_checks(&sec, &traj, &mut sum)?;
        curves.push((sim.label.clone(), traj.curves()?, sec.default_window()));
    }

    if let Some(sweep) = &scenario.torus_sweep {
        let grid = TorusGrid::rectangular(sweep.modes, PeriodicDomain::Torus);
        let theta0 = sweep.initial.torus(grid)?;
        let times = log_times(sweep.n, sweep.nt_min, sweep.nt_max, sweep.count);
        let set = linear_sweep(&theta0, sweep.n, &times, &sweep.orders)?;
        curves.push(("torus_sweep".into(), set, Window::valid(sweep.modes[1])));
    }
    if let Some(sweep) = &scenario.strip_sweep {
        let grid = StripGrid::new(sweep.modes[0], sweep.modes[1])?;
        let theta0 = sweep.initial.strip(grid)?;
        let times = log_times(sweep.n, sweep.nt_min, sweep.nt_max, sweep.count);
        let set = linear_sweep(&theta0, sweep.n, &times, &sweep.orders)?;
        curves.push(("strip_sweep".into(), set, Window::valid(sweep.modes[1] / 4)));
    }

    let mut extra: Vec<(String, CurveSet)> = Vec::new();
    if let Some(k) = &scenario.kernel_decay {
        let density = GaussianDensity { amplitude: k.amplitude, width: k.width };
        let quad = PlaneQuadrature::new(k.xi_max)?;
        let nts = log_times(1.0, k.nt_min, k.nt_max, k.count);
        let ratio = kernel_decay_ratio(&density, k.s, k.n, &nts, &quad)?;
        let (lo, hi) =
            ratio.samples().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.value), hi.max(s.value)));
        let factor = hi / lo;
        sum.check(
            factor < k.factor_bound,
            format!(
                "kernel_decay: (1+Nt)^(1/4) L1 norm varies by factor {factor:.4} over Nt in [{}, {}] (bound {})",
                k.nt_min, k.nt_max, k.factor_bound
            ),
        );
        extra.push(("kernel_decay".into(), single_curve("ratio", &ratio)?));
    }
    if let Some(w) = &scenario.witness {
        let spec = WitnessSpec { epsilon: w.epsilon, s: w.s, j: 0, xi_max: w.xi_max };
        spec.validate()?;
        let witness = SharpnessWitness { epsilon: w.epsilon, s: w.s };
        let quad = PlaneQuadrature::new(w.xi_max)?;
        let nts = log_times(1.0, w.nt_min, w.nt_max, w.count);
        let window = Window::new(w.nt_min, w.nt_max)?;
        let mut ids = Vec::new();
        let mut cols: Vec<DecayCurve> = Vec::new();
        for &j in &w.j {
            let jf = f64::from(j);
            for (norm, lo, hi) in [
                (PlaneNorm::l1(j), -(jf / 2.0 + 0.25 + 2.0 * w.epsilon), -(jf / 2.0 + 0.25)),
                (PlaneNorm::l2(j), -(jf / 2.0) - 2.0 * w.epsilon, -(jf / 2.0)),
            ] {
                let (lo, hi) = (lo - w.slack, hi + w.slack);
                match plane_norm_curve(&witness, w.n, &nts, norm, &quad)
                    .and_then(|c| fit_decay_exponent(&c, window).map(|f| (c, f)))
                {
                    Ok((curve, fit)) => {
                        sum.check(
                            fit.exponent >= lo && fit.exponent <= hi,
                            format!("witness {}: slope {:.4} in [{lo:.3}, {hi:.3}]", norm.id(), fit.exponent),
                        );
                        ids.push(norm.id());
                        cols.push(curve);
                    }
                    Err(e) => sum.check(false, format!("witness {}: {e}", norm.id())),
                }
            }
        }
        if !cols.is_empty() {
            extra.push(("witness".into(), merge_curves(ids, &cols)?));
        }
    }
    if let Some(ineq) = &scenario.inequalities {
        inequality_checks(ineq, &mut sum)?;
    }

    for p in &scenario.predictions {
        let (section, id) = p.curve.split_once('.').unwrap_or(("", &p.curve));
        let Some((_, set, window)) = curves.iter().find(|(name, _, _)| name == section) else {
            sum.check(false, format!("rate {}: section did not produce curves", p.curve));
            continue;
        };
        let mut local = p.clone();
        local.curve = id.to_string();
        let report = build_report(set, &[local], *window);
        for line in report.lines() {
            let pass = line.starts_with("PASS");
            let rest = line.split_once(' ').map_or("", |(_, r)| r).replacen(id, &p.curve, 1);
            sum.check(pass, rest);
        }
    }

    let outcome = if blow_up {
        Outcome::BlowUp
    } else if ledger_broken {
        Outcome::LedgerViolation
    } else if sum.failed {
        Outcome::Fail
    } else {
        Outcome::Pass
    };
    let _ = writeln!(sum.text, "RESULT {}", if outcome == Outcome::Pass { "PASS" } else { "FAIL" });
    let mut files: Vec<(String, CurveSet)> = curves.into_iter().map(|(n, c, _)| (n, c)).collect();
    files.extend(extra);
    Ok(RunArtifacts { curves: files, summary: sum.text, outcome })
}

fn single_curve(id: &str, c: &DecayCurve) -> Result<CurveSet> {
    CurveSet::from_rows(vec![id.into()], c.samples().iter().map(|s| (s.t, s.nt, vec![s.value])).collect())
}

fn merge_curves(ids: Vec<String>, cols: &[DecayCurve]) -> Result<CurveSet> {
    let rows = (0..cols[0].len())
        .map(|i| {
            let s = cols[0].samples()[i];
            (s.t, s.nt, cols.iter().map(|c| c.samples()[i].value).collect())
        })
        .collect();
    CurveSet::from_rows(ids, rows)
}

fn simulation_checks(sec: &SimulationSection, traj: &Trajectory, sum: &mut Summary) -> Result<()> {
    let label = &sec.label;
    if let Some(ml) = &sec.mean_laws {
        let rep = audit_mean_laws(traj);
        let law = if sec.domain == DomainKind::Torus { "e^{-Nt} int theta0" } else { "int theta0" };
        sum.check(
            rep.mean_error <= ml.mean_tolerance,
            format!(
                "{label}: int theta(t) = {law} to {} (max relative error {})",
                pm(ml.mean_tolerance),
                pm(rep.mean_error)
            ),
        );
        sum.check(
            rep.horizontal_velocity_mean <= ml.velocity_tolerance,
            format!(
                "{label}: int_T u dx1 = 0 to {} (max {})",
                pm(ml.velocity_tolerance),
                pm(rep.horizontal_velocity_mean)
            ),
        );
        if let Some(wall) = rep.wall_trace {
            sum.check(
                wall <= ml.wall_tolerance,
                format!("{label}: u2 = 0 on the walls to {} (max {})", pm(ml.wall_tolerance), pm(wall)),
            );
        }
    }
    if let Some(pc) = &sec.asymptotic_profile {
        let prof = extract_profile(traj)?;
        sum.check(
            prof.route_gap <= pc.route_tolerance,
            format!(
                "{label}: profile routes agree to {} (relative gap {})",
                pm(pc.route_tolerance),
                pm(prof.route_gap)
            ),
        );
        let expected = pc.exponent.unwrap_or(-0.5 * f64::from(sec.regularity));
        let window = pc.window.unwrap_or_else(|| {
            let w = sec.default_window();
            Window { lo: w.lo, hi: w.hi.min(0.5 * traj.config.n * traj.config.final_time) }
        });
        let thin = |c: &DecayCurve| c.log_thinned(window.lo, window.hi, crate::analysis::FIT_POINTS);
        match fit_decay_exponent(&thin(&prof.convergence), window) {
            Ok(fit) => sum.check(
                (fit.exponent - expected).abs() <= pc.tolerance,
                format!(
                    "{label}: ||mean_x1 theta - sigma|| exponent {:.4} expected {expected:.3} +- {} window [{}, {}]",
                    fit.exponent, pc.tolerance, window.lo, window.hi
                ),
            ),
            Err(e) => sum.check(false, format!("{label}: profile convergence fit: {e}")),
        }
        if let Ok(fit) = fit_decay_exponent(&thin(&prof.field_convergence), window) {
            sum.info(format!("{label}: ||theta - sigma|| exponent {:.4} over the same window", fit.exponent));
        }
    }
    Ok(())
}

fn inequality_checks(ineq: &InequalitySection, sum: &mut Summary) -> Result<()> {
    if let Some(b) = &ineq.balancing {
        let grid = TorusGrid::rectangular([b.band, b.band], PeriodicDomain::Torus);
        let spectra: Vec<_> =
            (0..b.samples).map(|i| random_spectrum(grid, ineq.seed.wrapping_add(i as u64 * 7919), b.decay)).collect();
        let rep = verify_balancing(&spectra, &b.ms, b.m)?;
        sum.check(
            rep.violations == 0,
            format!(
                "balancing: {} spectra x {} values of M, {} violations, max ratio {:.6}",
                b.samples,
                b.ms.len(),
                rep.violations,
                rep.max_ratio
            ),
        );
    }
    if let Some(c) = &ineq.commutator {
        let spec = EnsembleSpec { samples: c.samples, band: c.band, decay: c.decay, seed: ineq.seed };
        let rep = verify_commutator(&spec, c.s)?;
        let drift = rep.drift.unwrap_or(f64::INFINITY);
        sum.check(
            rep.all_finite() && drift < c.drift_tolerance,
            format!(
                "commutator: max constant {:.6e}, drift {:.4} (K = {} -> {}), bound {}",
                rep.max_ratio,
                drift,
                c.band,
                2 * c.band,
                c.drift_tolerance
            ),
        );
    }
    if let Some(c) = &ineq.convolution {
        let spec = EnsembleSpec { samples: c.samples, band: c.band, decay: c.decay, seed: ineq.seed };
        let mut reports = vec![verify_convolution(&spec, c.s, c.p, c.q, c.r)?];
        if c.anisotropic {
            reports.push(verify_convolution_aniso(&spec, c.s, c.p, c.q, c.r)?);
        }
        for rep in reports {
            let drift = rep.drift.unwrap_or(f64::INFINITY);
            sum.check(
                rep.all_finite() && drift < c.drift_tolerance,
                format!(
                    "{}: max constant {:.6e}, drift {:.4} (K = {} -> {}), bound {}",
                    rep.id,
                    rep.max_ratio,
                    drift,
                    c.band,
                    2 * c.band,
                    c.drift_tolerance
                ),
            );
        }
    }
    Ok(())
}
