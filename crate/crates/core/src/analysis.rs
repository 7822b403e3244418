//! Decay-exponent fits, asymptotic-profile extraction, mean-law audits and
//! ensemble checks of the functional inequalities behind the energy method.

use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ModeInfo, PeriodicDomain, SpectralField, TorusField, TorusGrid};
use crate::initial::gaussian;
use crate::operators::{
    biot_savart, convolution_bound_check, convolution_bound_check_aniso, derivative, norm, riesz1, NormSpec,
};
use crate::propagator::{CurveSet, DecayCurve};
use crate::solver::{Domain, RunStatus, Trajectory};

/// Closed range of `Nt` used for a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Parameter(format!("invalid window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[10, min(1e3, 0.1 n2_max^2)]`: where a truncated spectrum still
    /// behaves like an algebraic tail.
    pub fn valid(n2_max: usize) -> Self {
        let hi = (0.1 * (n2_max * n2_max) as f64).min(1e3);
        Self { lo: 10.0, hi: hi.max(10.0 + 1e-9) }
    }

    pub fn contains(&self, nt: f64) -> bool {
        nt >= self.lo && nt <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub stderr: f64,
    /// Root-mean-square residual in `log(value)`.
    pub residual: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares slope of `log(value)` against `log(1 + Nt)` inside `window`.
pub fn fit_decay_exponent(curve: &DecayCurve, window: Window) -> Result<ExponentFit> {
    let pts: Vec<_> = curve.samples().iter().filter(|s| window.contains(s.nt)).collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { found: pts.len(), required: MIN_FIT_SAMPLES });
    }
    if let Some(bad) = pts.iter().find(|s| !(s.value > 0.0 && s.value.is_finite())) {
        return Err(Error::NonPositive { nt: bad.nt, value: bad.value });
    }
    let xs: Vec<f64> = pts.iter().map(|s| s.nt.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|s| s.value.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples { found: 1, required: MIN_FIT_SAMPLES });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok(ExponentFit {
        exponent: slope,
        stderr: (sse / (n - 2.0) / sxx).sqrt(),
        residual: (sse / n).sqrt(),
        samples: pts.len(),
    })
}

/// Horizontal-mean profile estimated two ways.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEstimate {
    pub domain: Domain,
    /// Horizontal mean of `theta` at the final time.
    pub final_mean: Array1<Complex64>,
    /// Initial horizontal mean minus the time integral of the horizontal mean
    /// of `(u . grad) theta + N u2`.
    pub integrated: Array1<Complex64>,
    /// `||final_mean - integrated|| / ||final_mean||` in `L^2(dx2)`.
    pub route_gap: f64,
    /// `||mean_x1 theta(t) - final_mean||_{L^2}` before the final time.
    pub convergence: DecayCurve,
    /// `||theta(t) - final_mean||_{L^2}` over the whole domain.
    pub field_convergence: DecayCurve,
}

impl ProfileEstimate {
    /// Value of the final-time profile at height `x2`.
    pub fn evaluate(&self, x2: f64) -> f64 {
        evaluate_row(self.domain, &self.final_mean, x2)
    }
}

fn evaluate_row(domain: Domain, row: &Array1<Complex64>, x2: f64) -> f64 {
    use crate::fields::{Parity, XParity};
    use std::f64::consts::PI;
    match domain {
        Domain::Strip => row.iter().enumerate().map(|(q, c)| c.re * XParity::basis(q, x2)).sum(),
        Domain::Torus | Domain::PlaneBox { .. } => {
            let side = match domain {
                Domain::PlaneBox { side } => side,
                _ => 1.0,
            };
            let k = (row.len() / 2) as f64;
            row.iter()
                .enumerate()
                .map(|(j, c)| (c * Complex64::from_polar(1.0, 2.0 * PI * (j as f64 - k) * x2 / side)).re)
                .sum()
        }
    }
}

/// `L^2(dx2)` norm of a horizontal-mean coefficient row.
fn row_norm(domain: Domain, row: &Array1<Complex64>) -> f64 {
    let w = match domain {
        Domain::PlaneBox { side } => side,
        Domain::Torus | Domain::Strip => 1.0,
    };
    (w * row.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

pub fn extract_profile(traj: &Trajectory) -> Result<ProfileEstimate> {
    if let RunStatus::BlowUp { t, .. } = traj.status {
        return Err(Error::Incomplete(format!("run stopped by blow-up at t = {t}")));
    }
    let domain = traj.config.domain;
    let recs = &traj.records;
    let first = recs.first().ok_or_else(|| Error::Incomplete("empty trajectory".into()))?;
    let last = recs.last().expect("non-empty");
    let mut integrated = first.theta_hmean.clone();
    for w in recs.windows(2) {
        let dt = w[1].t - w[0].t;
        integrated = integrated - (&w[0].profile_integrand + &w[1].profile_integrand).mapv(|v| v * (0.5 * dt));
    }
    let final_mean = last.theta_hmean.clone();
    let scale = row_norm(domain, &final_mean);
    let gap = row_norm(domain, &(&final_mean - &integrated));
    let route_gap = if scale > 0.0 { gap / scale } else { gap };
    let mut convergence = DecayCurve::new();
    let mut field_convergence = DecayCurve::new();
    let width = match domain {
        Domain::PlaneBox { side } => side,
        Domain::Torus | Domain::Strip => 1.0,
    };
    for r in &recs[..recs.len() - 1] {
        let mean_gap = row_norm(domain, &(&r.theta_hmean - &final_mean));
        convergence.push(r.t, r.nt, mean_gap)?;
        // the horizontal mean is orthogonal to the oscillating part
        let osc = r.theta_osc_hs[0];
        field_convergence.push(r.t, r.nt, (osc * osc + width * mean_gap * mean_gap).sqrt())?;
    }
    Ok(ProfileEstimate { domain, final_mean, integrated, route_gap, convergence, field_convergence })
}

/// Largest violations of the mean-value laws over a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanLawReport {
    /// Relative deviation of `int theta` from `e^{-Nt} int theta0` (torus) or
    /// from `int theta0` (strip and box); absolute when `int theta0 = 0`.
    pub mean_error: f64,
    /// Largest `sup_{x2} |int_T u dx1|`.
    pub horizontal_velocity_mean: f64,
    /// Largest wall trace of `u2` over the snapshots (strip only).
    pub wall_trace: Option<f64>,
}

pub fn audit_mean_laws(traj: &Trajectory) -> MeanLawReport {
    let n = traj.config.n;
    let m0 = traj.records.first().map_or(0.0, |r| r.mean);
    let torus = matches!(traj.config.domain, Domain::Torus);
    let mut mean_error = 0.0f64;
    let mut hu = 0.0f64;
    for r in &traj.records {
        let expected = if torus { m0 * (-n * r.t).exp() } else { m0 };
        let err = if m0 != 0.0 { ((r.mean - expected) / expected).abs() } else { r.mean.abs() };
        mean_error = mean_error.max(err);
        hu = hu.max(r.hmean_u[0]);
        if matches!(traj.config.domain, Domain::Strip) {
            hu = hu.max(r.hmean_u[1]);
        }
    }
    let wall_trace = traj.snapshots.iter().filter_map(|s| s.wall_u2).reduce(f64::max);
    MeanLawReport { mean_error, horizontal_velocity_mean: hu, wall_trace }
}

/// Ensemble verdict on one inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub id: String,
    pub samples: usize,
    /// `LHS / RHS` per sample (per sample and parameter for the balancing check).
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Relative change of `max_ratio` when the band doubles.
    pub drift: Option<f64>,
    /// Cases with `LHS > RHS` beyond the slack (exact inequalities only).
    pub violations: usize,
}

impl InequalityReport {
    fn from_ratios(id: &str, ratios: Vec<f64>, violations: usize) -> Self {
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        Self { id: id.into(), samples: ratios.len(), ratios, max_ratio, drift: None, violations }
    }

    pub fn all_finite(&self) -> bool {
        self.ratios.iter().all(|r| r.is_finite() && *r >= 0.0)
    }
}

/// Random torus spectra `c_n = g_n (1 + |n|^2)^{-decay/2}` with Gaussian `g_n`
/// drawn per mode, so the same seed gives consistent truncations at any band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub samples: usize,
    pub band: usize,
    pub decay: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn sample(&self, index: usize, band: usize) -> TorusField {
        random_spectrum(
            TorusGrid::rectangular([band, band], PeriodicDomain::Torus),
            self.sample_seed(index),
            self.decay,
        )
    }

    fn sample_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.band == 0 || !(self.decay >= 0.0) {
            return Err(Error::Parameter("ensemble needs samples >= 1, band >= 1, decay >= 0".into()));
        }
        Ok(())
    }
}

pub fn random_spectrum(grid: TorusGrid, seed: u64, decay: f64) -> TorusField {
    let mut f = TorusField::zeros(grid);
    for (_, _, n1, n2) in grid.mode_indices() {
        if n1 > 0 || (n1 == 0 && n2 > 0) {
            let w = (1.0 + grid.sobolev_sq(n1, n2)).powf(-0.5 * decay);
            f.set_mode_real(n1, n2, gaussian(seed, n1, n2) * w).expect("mode in band");
        }
    }
    f
}

/// `(1/M) ||d1 R1 theta||^2_{H^{m-1}} - ||d1 R1^2 theta||^2_{H^{m-1}} <= M^{-2} ||R1 theta||^2_{H^m}`
/// (homogeneous norms) for every spectrum and every `M`.
pub fn verify_balancing(spectra: &[TorusField], ms: &[f64], m: u32) -> Result<InequalityReport> {
    if ms.iter().any(|&mm| !(mm >= 1.0)) {
        return Err(Error::Parameter("balancing parameter M must be >= 1".into()));
    }
    let sums: Vec<[f64; 3]> = spectra
        .par_iter()
        .map(|f| {
            let mut acc = [0.0; 3];
            f.for_each_mode(|mi, c| {
                let xi2 = mi.xi[0].powi(2) + mi.xi[1].powi(2);
                if xi2 == 0.0 {
                    return;
                }
                let r = mi.xi[0].powi(2) / xi2;
                let w = mi.l2_weight * xi2.powi(m as i32) * c.norm_sqr();
                acc[0] += r * r * w;
                acc[1] += r * r * r * w;
                acc[2] += r * w;
            });
            acc
        })
        .collect();
    let mut ratios = Vec::with_capacity(sums.len() * ms.len());
    let mut violations = 0;
    for [a, b, c] in sums {
        for &mm in ms {
            let lhs = a / mm - b;
            let rhs = c / (mm * mm);
            if lhs > rhs + 1e-12 * (rhs.abs() + a / mm + b) {
                violations += 1;
            }
            ratios.push(if rhs > 0.0 { lhs.max(0.0) / rhs } else { 0.0 });
        }
    }
    Ok(InequalityReport::from_ratios("balancing", ratios, violations))
}

/// LHS and constant-free RHS of the anisotropic commutator estimate for
/// `A = Lambda^{s-2} d2^2` and `u2 = -d1^2 (-Delta)^{-1} theta`:
/// `|int (A(u2 d2 theta) - u2 A d2 theta) A theta|` against
/// `|| |xi| F u2 ||_{l^1} ||theta||_{H^s}^2 + ||R1 theta||_{H^s}^2 ||theta||_{H^s}`.
pub fn commutator_terms(theta: &TorusField, s: f64) -> Result<(f64, f64)> {
    if !(s > 2.0) {
        return Err(Error::Parameter(format!("commutator estimate needs s > 2, got {s}")));
    }
    let symbol = |mi: &ModeInfo| {
        let r2 = mi.xi[0].powi(2) + mi.xi[1].powi(2);
        if r2 == 0.0 {
            0.0
        } else {
            -r2.powf(0.5 * (s - 2.0)) * mi.xi[1].powi(2)
        }
    };
    let u2 = biot_savart(theta).u2;
    let d2 = derivative(theta, 1)?;
    let a_d2 = d2.map_modes(|mi, c| c * symbol(mi));
    let a_theta = theta.map_modes(|mi, c| c * symbol(mi));
    let g = u2.product_full(&d2)?;
    let h = u2.product_full(&a_d2)?;
    let wide_a_theta = a_theta.resample(*g.grid());
    let mut lhs = 0.0;
    g.for_each_mode(|mi, c| {
        let [n1, n2] = mi.index;
        lhs += mi.l2_weight * ((c * symbol(mi) - h.coeff(n1, n2)) * wide_a_theta.coeff(n1, n2).conj()).re;
    });
    let mut u2_l1 = 0.0;
    u2.for_each_mode(|mi, c| u2_l1 += mi.xi[0].hypot(mi.xi[1]) * c.norm());
    let hs = norm(theta, NormSpec::sobolev(s))?;
    let r1 = norm(&riesz1(theta), NormSpec::sobolev(s))?;
    Ok((lhs.abs(), u2_l1 * hs * hs + r1 * r1 * hs))
}

fn drift(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

fn ensemble_report<F>(id: &str, spec: &EnsembleSpec, ratio: F) -> Result<InequalityReport>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    spec.validate()?;
    let run = |band: usize| -> Result<Vec<f64>> { (0..spec.samples).into_par_iter().map(|i| ratio(i, band)).collect() };
    let coarse = run(spec.band)?;
    let fine = run(2 * spec.band)?;
    let mut report = InequalityReport::from_ratios(id, fine, 0);
    let coarse_max = coarse.iter().copied().fold(0.0, f64::max);
    report.drift = Some(drift(coarse_max, report.max_ratio));
    Ok(report)
}

/// Empirical constants of the commutator estimate at `band` and `2 band`.
pub fn verify_commutator(spec: &EnsembleSpec, s: f64) -> Result<InequalityReport> {
    ensemble_report("commutator", spec, |i, band| {
        let (lhs, rhs) = commutator_terms(&spec.sample(i, band), s)?;
        Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
    })
}

/// Weighted Young inequality `||w F(fg)||_p <= C ||w F f||_q ||w F g||_r`
/// over independent pairs, at `band` and `2 band`.
pub fn verify_convolution(spec: &EnsembleSpec, s: f64, p: f64, q: f64, r: f64) -> Result<InequalityReport> {
    crate::operators::check_young(p, q, r)?;
    ensemble_report("convolution", spec, |i, band| {
        let f = spec.sample(2 * i, band);
        let g = spec.sample(2 * i + 1, band);
        Ok(convolution_bound_check(&f, &g, s, p, q, r)?.ratio)
    })
}

/// Anisotropic variant with a factor depending on `x2` only.
pub fn verify_convolution_aniso(spec: &EnsembleSpec, s: f64, p: f64, q: f64, r: f64) -> Result<InequalityReport> {
    crate::operators::check_young(p, q, r)?;
    ensemble_report("convolution_aniso", spec, |i, band| {
        let f = spec.sample(2 * i, band);
        let full = spec.sample(2 * i + 1, band);
        let sigma = full.map_modes(|mi, c| if mi.index[0] == 0 { c } else { Complex64::new(0.0, 0.0) });
        Ok(convolution_bound_check_aniso(&f, &sigma, s, p, q, r)?.ratio)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    /// `|fit - exponent| <= tolerance`.
    TwoSided,
    /// `fit <= exponent + tolerance`.
    UpperBound,
}

/// Expected decay exponent for one curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePrediction {
    pub curve: String,
    pub exponent: f64,
    pub tolerance: f64,
    #[serde(default = "two_sided")]
    pub kind: PredictionKind,
    /// Statement the prediction reproduces.
    #[serde(default)]
    pub anchor: String,
    /// Fit window overriding the report default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

fn two_sided() -> PredictionKind {
    PredictionKind::TwoSided
}

impl RatePrediction {
    pub fn new(curve: impl Into<String>, exponent: f64, tolerance: f64) -> Self {
        Self {
            curve: curve.into(),
            exponent,
            tolerance,
            kind: PredictionKind::TwoSided,
            anchor: String::new(),
            window: None,
        }
    }

    pub fn with_anchor(mut self, anchor: impl Into<String>) -> Self {
        self.anchor = anchor.into();
        self
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = Some(window);
        self
    }

    pub fn upper_bound(mut self) -> Self {
        self.kind = PredictionKind::UpperBound;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.exponent.is_finite()) {
            return Err(Error::Parameter(format!("prediction for {} needs tolerance > 0", self.curve)));
        }
        Ok(())
    }

    pub fn accepts(&self, exponent: f64) -> bool {
        match self.kind {
            PredictionKind::TwoSided => (exponent - self.exponent).abs() <= self.tolerance,
            PredictionKind::UpperBound => exponent <= self.exponent + self.tolerance,
        }
    }
}

/// Torus rate table at regularity `m`: `theta`, `u`, `u2` in `H^s` decay like
/// `(1+Nt)` to the powers `-(m-s)/2`, `-1/2-(m-s)/2`, `-1-(m-s)/2`.
pub fn torus_rate_table(m: u32, orders: &[u32], tolerance: f64) -> Vec<RatePrediction> {
    let mut out = Vec::new();
    for &s in orders.iter().filter(|&&s| s <= m) {
        let base = -0.5 * (m - s) as f64;
        let anchor = "(1+Nt)^{(m-s)/2} decay of theta - sigma, u, u2 in H^s";
        out.push(RatePrediction::new(format!("theta_H{s}"), base, tolerance).with_anchor(anchor));
        out.push(RatePrediction::new(format!("u_H{s}"), base - 0.5, tolerance).with_anchor(anchor));
        out.push(RatePrediction::new(format!("u2_H{s}"), base - 1.0, tolerance).with_anchor(anchor));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionOutcome {
    pub prediction: RatePrediction,
    pub fit: Option<ExponentFit>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub window: Window,
    pub outcomes: Vec<PredictionOutcome>,
}

impl DecayReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    /// One `PASS`/`FAIL` line per prediction.
    pub fn lines(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .map(|o| {
                let verdict = if o.pass { "PASS" } else { "FAIL" };
                let p = &o.prediction;
                let op = match p.kind {
                    PredictionKind::TwoSided => "+-",
                    PredictionKind::UpperBound => "<=",
                };
                let measured = match (&o.fit, &o.error) {
                    (Some(f), _) => format!("{:.4} (stderr {:.2e}, {} samples)", f.exponent, f.stderr, f.samples),
                    (None, Some(e)) => format!("error: {e}"),
                    _ => "n/a".into(),
                };
                let w = p.window.unwrap_or(self.window);
                format!(
                    "{verdict} rate {} expected {:.3} {op} {:.3} measured {measured} window [{}, {}]",
                    p.curve, p.exponent, p.tolerance, w.lo, w.hi
                )
            })
            .collect()
    }
}

/// Samples kept per fit, spread evenly in `log(1 + Nt)`.
pub const FIT_POINTS: usize = 48;

/// Fits every predicted curve of `curves` inside `window` (or the
/// prediction's own window) after log-uniform thinning.
pub fn build_report(curves: &CurveSet, predictions: &[RatePrediction], window: Window) -> DecayReport {
    let outcomes = predictions
        .iter()
        .map(|p| {
            let res = p.validate().and_then(|_| {
                let curve =
                    curves.get(&p.curve).ok_or_else(|| Error::Parameter(format!("no curve named {}", p.curve)))?;
                let w = p.window.unwrap_or(window);
                fit_decay_exponent(&curve.log_thinned(w.lo, w.hi, FIT_POINTS), w)
            });
            match res {
                Ok(fit) => PredictionOutcome {
                    prediction: p.clone(),
                    pass: p.accepts(fit.exponent),
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => {
                    PredictionOutcome { prediction: p.clone(), fit: None, error: Some(e.to_string()), pass: false }
                }
            }
        })
        .collect();
    DecayReport { window, outcomes }
}

/// Report for a solver run; blown-up runs fail every prediction.
pub fn build_trajectory_report(
    traj: &Trajectory,
    predictions: &[RatePrediction],
    window: Window,
) -> Result<DecayReport> {
    if let RunStatus::BlowUp { t, .. } = traj.status {
        return Err(Error::Incomplete(format!("run stopped by blow-up at t = {t}")));
    }
    Ok(build_report(&traj.curves()?, predictions, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn curve(f: impl Fn(f64) -> f64) -> DecayCurve {
        DecayCurve::from_samples((0..40).map(|k| {
            let nt = 10f64.powf(k as f64 / 13.0);
            (nt, nt, f(nt))
        }))
        .unwrap()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_decay_exponent(&curve(|nt| 5.0 * (1.0 + nt).powf(-2.0)), Window::new(1.0, 1e3).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.exponent, -2.0, epsilon = 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_curve_is_flat() {
        let fit = fit_decay_exponent(&curve(|_| 3.0), Window::new(1.0, 1e3).unwrap()).unwrap();
        assert_abs_diff_eq!(fit.exponent, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let err = fit_decay_exponent(&curve(|_| 1.0), Window::new(1.0, 2.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { .. }));
    }

    #[test]
    fn zero_value_rejected() {
        let err = fit_decay_exponent(&curve(|_| 0.0), Window::new(1.0, 1e3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonPositive { .. }));
    }

    #[test]
    fn valid_window_caps() {
        assert_eq!(Window::valid(1024).hi, 1e3);
        assert_abs_diff_eq!(Window::valid(64).hi, 409.6, epsilon = 1e-12);
    }

    #[test]
    fn single_mode_balancing() {
        let grid = TorusGrid::new(2, 5).unwrap();
        let mut f = TorusField::zeros(grid);
        f.set_mode_real(1, 1, Complex64::new(1.0, 0.0)).unwrap();
        let rep = verify_balancing(&[f], &[1.0], 3).unwrap();
        assert_eq!(rep.violations, 0);
        // r = 1/2: (1/M) r^2 - r^3 = 1/8 against r/M^2 = 1/2
        assert_abs_diff_eq!(rep.ratios[0], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn strongly_horizontal_spectrum_has_nonpositive_lhs() {
        let grid = TorusGrid::new(4, 9).unwrap();
        let mut f = TorusField::zeros(grid);
        f.set_mode_real(3, 1, Complex64::new(0.3, 0.1)).unwrap();
        f.set_mode_real(4, 0, Complex64::new(0.2, 0.0)).unwrap();
        // n1^2 >= |n|^2 / M for M >= 2
        let rep = verify_balancing(&[f], &[2.0, 4.0], 2).unwrap();
        assert!(rep.ratios.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn vertical_data_make_commutator_vanish() {
        let grid = TorusGrid::new(4, 9).unwrap();
        let mut f = TorusField::zeros(grid);
        f.set_mode_real(0, 2, Complex64::new(1.0, 0.0)).unwrap();
        let (lhs, rhs) = commutator_terms(&f, 3.0).unwrap();
        // |A theta| |A d2 theta| for the single mode n = (0, 2)
        let scale = (4.0 * std::f64::consts::PI).powi(7);
        assert!(lhs < 1e-11 * scale, "lhs {lhs}");
        assert_eq!(rhs, 0.0);
    }
}
