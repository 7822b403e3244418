//! Exact linear evolution `exp(-N xi1^2/|xi|^2 t)`, frequency-space plane
//! norms, and the decay curves they produce.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{PlaneQuadrature, SpectralField, StripFieldX, TorusField};
use crate::operators::{norm, velocity_norm, BiotSavart, NormSpec};

fn check_time(n: f64, t: f64) -> Result<()> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::Parameter(format!("N must be finite and non-negative, got {n}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Parameter(format!("time must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// Applies the linear semigroup for time `t` modewise.
pub fn semigroup_apply<F: SpectralField>(field: &F, n: f64, t: f64) -> Result<F> {
    check_time(n, t)?;
    Ok(field.map_modes(|m, c| c * (-n * m.damping * t).exp()))
}

/// One Duhamel integrand evaluation: the source propagated over `elapsed = t - tau`.
pub fn duhamel_source_apply<F: SpectralField>(source: &F, n: f64, elapsed: f64) -> Result<F> {
    semigroup_apply(source, n, elapsed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub t: f64,
    pub nt: f64,
    pub value: f64,
}

/// Samples `(t, Nt, value)` of one norm of one evolving object.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecayCurve {
    samples: Vec<DecaySample>,
}

impl DecayCurve {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample; times must increase strictly and values be non-negative.
    pub fn push(&mut self, t: f64, nt: f64, value: f64) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if t <= last.t {
                return Err(Error::Parameter(format!("times must increase: {t} after {}", last.t)));
            }
        }
        if !(value >= 0.0) {
            return Err(Error::Parameter(format!("curve value must be non-negative, got {value}")));
        }
        self.samples.push(DecaySample { t, nt, value });
        Ok(())
    }

    pub fn from_samples(samples: impl IntoIterator<Item = (f64, f64, f64)>) -> Result<Self> {
        let mut c = Self::new();
        for (t, nt, v) in samples {
            c.push(t, nt, v)?;
        }
        Ok(c)
    }

    pub fn samples(&self) -> &[DecaySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&DecaySample> {
        self.samples.last()
    }

    /// Value at the sample nearest to `nt`.
    pub fn value_near(&self, nt: f64) -> Option<f64> {
        self.samples.iter().min_by(|a, b| (a.nt - nt).abs().total_cmp(&(b.nt - nt).abs())).map(|s| s.value)
    }

    /// Subset of at most `count` samples in `[lo, hi]`, spread evenly in `log(1 + Nt)`.
    pub fn log_thinned(&self, lo: f64, hi: f64, count: usize) -> DecayCurve {
        let inside: Vec<&DecaySample> = self.samples.iter().filter(|s| s.nt >= lo && s.nt <= hi).collect();
        if inside.len() <= count || count < 2 {
            return DecayCurve { samples: inside.into_iter().copied().collect() };
        }
        let (a, b) = ((1.0 + lo).ln(), (1.0 + hi).ln());
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        let mut cursor = 0;
        for k in 0..count {
            let target = a + (b - a) * k as f64 / (count - 1) as f64;
            while cursor + 1 < inside.len()
                && ((1.0 + inside[cursor + 1].nt).ln() - target).abs()
                    <= ((1.0 + inside[cursor].nt).ln() - target).abs()
            {
                cursor += 1;
            }
            if picked.last() != Some(&cursor) {
                picked.push(cursor);
            }
        }
        DecayCurve { samples: picked.into_iter().map(|i| *inside[i]).collect() }
    }
}

/// Named decay curves sharing one time axis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurveSet {
    pub times: Vec<(f64, f64)>,
    pub curves: Vec<(String, DecayCurve)>,
}

impl CurveSet {
    pub fn get(&self, id: &str) -> Option<&DecayCurve> {
        self.curves.iter().find(|(k, _)| k == id).map(|(_, c)| c)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.curves.iter().map(|(k, _)| k.as_str()).collect()
    }

    /// Builds a set from rows of values aligned with `ids`.
    pub fn from_rows(ids: Vec<String>, rows: Vec<(f64, f64, Vec<f64>)>) -> Result<Self> {
        let mut curves: Vec<(String, DecayCurve)> = ids.into_iter().map(|k| (k, DecayCurve::new())).collect();
        let mut times = Vec::with_capacity(rows.len());
        for (t, nt, values) in rows {
            if values.len() != curves.len() {
                return Err(Error::Shape(format!("{} values for {} curves", values.len(), curves.len())));
            }
            for ((_, c), v) in curves.iter_mut().zip(values) {
                c.push(t, nt, v)?;
            }
            times.push((t, nt));
        }
        Ok(Self { times, curves })
    }

    /// CSV text with header `t,Nt,<ids>` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,Nt");
        for (id, _) in &self.curves {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (row, &(t, nt)) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.16e},{nt:.16e}"));
            for (_, c) in &self.curves {
                out.push_str(&format!(",{:.16e}", c.samples[row].value));
            }
            out.push('\n');
        }
        out
    }
}

/// `count` times with `Nt` spread logarithmically over `[lo, hi]`.
pub fn log_times(n: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count.max(2) - 1) as f64).exp() / n).collect()
}

/// Densities whose velocity norms can be read off spectrally.
pub trait DensityField: SpectralField + BiotSavart {
    /// `(||u||, ||u2||)` for the given norm.
    fn velocity_norms(&self, spec: NormSpec) -> Result<(f64, f64)>;
}

impl DensityField for TorusField {
    fn velocity_norms(&self, spec: NormSpec) -> Result<(f64, f64)> {
        let u = self.biot_savart();
        Ok((velocity_norm(&u.u1, &u.u2, spec)?, norm(&u.u2, spec)?))
    }
}

impl DensityField for StripFieldX {
    fn velocity_norms(&self, spec: NormSpec) -> Result<(f64, f64)> {
        let u = self.biot_savart();
        Ok((velocity_norm(&u.u1, &u.u2, spec)?, norm(&u.u2, spec)?))
    }
}

/// Linear evolution of `theta0` sampled at `times`, reporting `theta_H{s}`,
/// `u_H{s}` and `u2_H{s}` for every requested order.
pub fn linear_sweep<F: DensityField>(theta0: &F, n: f64, times: &[f64], orders: &[f64]) -> Result<CurveSet> {
    let mut ids = Vec::new();
    for s in orders {
        for name in ["theta", "u", "u2"] {
            ids.push(format!("{name}_H{s}"));
        }
    }
    let rows: Vec<Result<(f64, f64, Vec<f64>)>> = times
        .par_iter()
        .map(|&t| {
            let theta = semigroup_apply(theta0, n, t)?;
            let mut values = Vec::with_capacity(3 * orders.len());
            for &s in orders {
                let spec = NormSpec::sobolev(s);
                let (u, u2) = theta.velocity_norms(spec)?;
                values.extend([norm(&theta, spec)?, u, u2]);
            }
            Ok((t, n * t, values))
        })
        .collect();
    CurveSet::from_rows(ids, rows.into_iter().collect::<Result<_>>()?)
}

/// Modulus of a Fourier transform on the plane.
pub trait SpectralDensity: Sync {
    fn density(&self, xi1: f64, xi2: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64 + Sync> SpectralDensity for F {
    fn density(&self, xi1: f64, xi2: f64) -> f64 {
        self(xi1, xi2)
    }
}

/// `amplitude * exp(-|xi|^2 / width^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDensity {
    pub amplitude: f64,
    pub width: f64,
}

impl SpectralDensity for GaussianDensity {
    fn density(&self, xi1: f64, xi2: f64) -> f64 {
        self.amplitude * (-(xi1 * xi1 + xi2 * xi2) / (self.width * self.width)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSpec {
    pub epsilon: f64,
    pub s: f64,
    pub j: u32,
    pub xi_max: f64,
}

impl WitnessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.125) {
            return Err(Error::Parameter(format!("epsilon must lie in (0, 1/8], got {}", self.epsilon)));
        }
        if !(self.s >= 1.0) || !(self.xi_max > 0.0) {
            return Err(Error::Parameter("witness needs s >= 1 and xi_max > 0".into()));
        }
        Ok(())
    }
}

/// `|xi1|^{-1/2 + 2 eps} (1 + |xi|^2)^{-s/2 - 1/4 - 2 eps}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpnessWitness {
    pub epsilon: f64,
    pub s: f64,
}

impl SpectralDensity for SharpnessWitness {
    fn density(&self, xi1: f64, xi2: f64) -> f64 {
        let e = self.epsilon;
        xi1.abs().powf(-0.5 + 2.0 * e) * (1.0 + xi1 * xi1 + xi2 * xi2).powf(-0.5 * self.s - 0.25 - 2.0 * e)
    }
}

pub fn sharpness_witness(spec: &WitnessSpec) -> Result<SharpnessWitness> {
    spec.validate()?;
    Ok(SharpnessWitness { epsilon: spec.epsilon, s: spec.s })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanePower {
    L1,
    L2,
}

/// `|| (|xi1|/|xi|)^j exp(-N xi1^2/|xi|^2 t) F f ||_{L^p}` for `p = 1, 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneNorm {
    pub power: PlanePower,
    pub j: u32,
}

impl PlaneNorm {
    pub fn l1(j: u32) -> Self {
        Self { power: PlanePower::L1, j }
    }

    pub fn l2(j: u32) -> Self {
        Self { power: PlanePower::L2, j }
    }

    pub fn id(&self) -> String {
        let p = match self.power {
            PlanePower::L1 => "L1",
            PlanePower::L2 => "L2",
        };
        format!("{p}_j{}", self.j)
    }
}

/// Node data for repeated evaluation at many times: per first-quadrant node,
/// the weighted, quadrant-folded integrand at `t = 0` and `xi1^2/|xi|^2`.
struct PlaneTable {
    weight: Vec<f64>,
    ratio: Vec<f64>,
    exponent: f64,
    root: bool,
}

impl PlaneTable {
    fn build(density: &dyn SpectralDensity, norm: PlaneNorm, quad: &PlaneQuadrature) -> Self {
        let (nodes, w) = (quad.nodes(), quad.weights());
        let rows: Vec<(Vec<f64>, Vec<f64>)> = nodes
            .par_iter()
            .zip(w.par_iter())
            .map(|(&a, &wa)| {
                let mut weight = Vec::with_capacity(nodes.len());
                let mut ratio = Vec::with_capacity(nodes.len());
                for (&b, &wb) in nodes.iter().zip(w) {
                    let r2 = a * a / (a * a + b * b);
                    let folded = match norm.power {
                        PlanePower::L1 => {
                            density.density(a, b)
                                + density.density(-a, b)
                                + density.density(a, -b)
                                + density.density(-a, -b)
                        }
                        PlanePower::L2 => [(a, b), (-a, b), (a, -b), (-a, -b)]
                            .iter()
                            .map(|&(x, y)| density.density(x, y).powi(2))
                            .sum(),
                    };
                    let aniso = match norm.power {
                        PlanePower::L1 => r2.powf(0.5 * norm.j as f64),
                        PlanePower::L2 => r2.powi(norm.j as i32),
                    };
                    weight.push(wa * wb * folded * aniso);
                    ratio.push(r2);
                }
                (weight, ratio)
            })
            .collect();
        let (weight, ratio): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        let (exponent, root) = match norm.power {
            PlanePower::L1 => (1.0, false),
            PlanePower::L2 => (2.0, true),
        };
        Self { weight: weight.concat(), ratio: ratio.concat(), exponent, root }
    }

    fn eval(&self, nt: f64) -> f64 {
        let k = self.exponent * nt;
        let parts: Vec<f64> = self
            .weight
            .par_chunks(4096)
            .zip(self.ratio.par_chunks(4096))
            .map(|(w, r)| w.iter().zip(r).map(|(w, r)| w * (-k * r).exp()).sum())
            .collect();
        let v: f64 = parts.iter().sum();
        if self.root {
            v.sqrt()
        } else {
            v
        }
    }
}

/// Relative tolerance of the truncation and refinement checks.
pub const PLANE_TOLERANCE: f64 = 1e-6;

/// Plane norm of the evolved density at each `Nt`, validated by doubling the
/// cutoff and by refining every panel.
pub fn plane_norm_curve(
    density: &dyn SpectralDensity,
    n: f64,
    nts: &[f64],
    norm: PlaneNorm,
    quad: &PlaneQuadrature,
) -> Result<DecayCurve> {
    if !(n > 0.0) {
        return Err(Error::Parameter(format!("N must be positive, got {n}")));
    }
    let base = PlaneTable::build(density, norm, quad);
    let wide = PlaneTable::build(density, norm, &quad.extended());
    let fine = PlaneTable::build(density, norm, &quad.refined());
    let mut curve = DecayCurve::new();
    let mut worst = 0.0f64;
    for &nt in nts {
        let v = base.eval(nt);
        for other in [wide.eval(nt), fine.eval(nt)] {
            worst = worst.max((other - v).abs() / v.abs().max(f64::MIN_POSITIVE));
        }
        curve.push(nt / n, nt, v)?;
    }
    if worst > PLANE_TOLERANCE {
        return Err(Error::Quadrature { achieved: worst, tolerance: PLANE_TOLERANCE });
    }
    Ok(curve)
}

/// Single-time version of [`plane_norm_curve`].
pub fn plane_norm_quadrature(
    density: &dyn SpectralDensity,
    n: f64,
    t: f64,
    norm: PlaneNorm,
    quad: &PlaneQuadrature,
) -> Result<f64> {
    check_time(n, t)?;
    let nt = n * t;
    let curve = plane_norm_curve(density, n.max(f64::MIN_POSITIVE), &[nt], norm, quad)?;
    Ok(curve.samples()[0].value)
}

/// `sqrt(int (1 + |xi|^2)^s |F f|^2)`, validated like the decay curves.
pub fn plane_sobolev_norm(density: &dyn SpectralDensity, s: f64, quad: &PlaneQuadrature) -> Result<f64> {
    let integrand =
        |q: &PlaneQuadrature| q.integrate(|a, b| (1.0 + a * a + b * b).powf(s) * density.density(a, b).powi(2));
    let v = integrand(quad);
    let worst = [integrand(&quad.extended()), integrand(&quad.refined())]
        .iter()
        .fold(0.0f64, |m, w| m.max((w - v).abs() / v.max(f64::MIN_POSITIVE)));
    if worst > PLANE_TOLERANCE {
        return Err(Error::Quadrature { achieved: worst, tolerance: PLANE_TOLERANCE });
    }
    Ok(v.sqrt())
}

/// `(1 + Nt)^{1/4} ||exp(tL) F f||_{L^1} / ||f||_{H^s}` at each `Nt`.
pub fn kernel_decay_ratio(
    density: &dyn SpectralDensity,
    s: f64,
    n: f64,
    nts: &[f64],
    quad: &PlaneQuadrature,
) -> Result<DecayCurve> {
    if !(s > 1.0) {
        return Err(Error::Parameter(format!("kernel estimate needs s > 1, got {s}")));
    }
    let hs = plane_sobolev_norm(density, s, quad)?;
    let l1 = plane_norm_curve(density, n, nts, PlaneNorm::l1(0), quad)?;
    DecayCurve::from_samples(l1.samples().iter().map(|p| (p.t, p.nt, (1.0 + p.nt).powf(0.25) * p.value / hs)))
}

/// Coefficient multiplier of the semigroup for a single mode, exposed for tests
/// and diagnostics.
pub fn mode_factor(damping: f64, n: f64, t: f64) -> Complex64 {
    Complex64::new((-n * damping * t).exp(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TorusGrid;
    use approx::assert_relative_eq;

    #[test]
    fn semigroup_examples() {
        let grid = TorusGrid::dealiased(4);
        let mut f = TorusField::zeros(grid);
        f.set_mode_real(1, 1, Complex64::new(1.0, 0.0)).unwrap();
        f.set_mode_real(0, 3, Complex64::new(1.0, 0.0)).unwrap();
        f.set_coeff(0, 0, Complex64::new(1.0, 0.0)).unwrap();
        let g = semigroup_apply(&f, 1.0, 2f64.ln()).unwrap();
        assert_relative_eq!(g.coeff(1, 1).re, 0.5f64.sqrt(), max_relative = 1e-14);
        assert_eq!(g.coeff(0, 3).re, 1.0);
        let h = semigroup_apply(&f, 2.0, 1.0).unwrap();
        assert_relative_eq!(h.coeff(0, 0).re, (-2.0f64).exp(), max_relative = 1e-14);
        assert!(semigroup_apply(&f, 1.0, -1.0).is_err());
    }

    #[test]
    fn witness_value() {
        let w = sharpness_witness(&WitnessSpec { epsilon: 0.05, s: 1.0, j: 0, xi_max: 100.0 }).unwrap();
        assert_relative_eq!(w.density(1.0, 0.0), 2f64.powf(-0.85), max_relative = 1e-14);
        assert_eq!(w.density(0.3, 0.7), w.density(-0.3, 0.7));
        assert_eq!(w.density(0.3, 0.7), w.density(0.3, -0.7));
    }

    #[test]
    fn gaussian_l1_at_rest() {
        let g = GaussianDensity { amplitude: 1.0, width: 1.0 };
        let q = PlaneQuadrature::new(10.0).unwrap();
        let v = plane_norm_quadrature(&g, 1.0, 0.0, PlaneNorm::l1(0), &q).unwrap();
        assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-9);
    }

    #[test]
    fn curve_validation() {
        let mut c = DecayCurve::new();
        c.push(1.0, 1.0, 2.0).unwrap();
        assert!(c.push(1.0, 1.0, 1.0).is_err());
        assert!(c.push(2.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn thinning_spreads_in_log_time() {
        let c = DecayCurve::from_samples((1..=10000).map(|k| (k as f64, k as f64, 1.0))).unwrap();
        let t = c.log_thinned(10.0, 1000.0, 20);
        assert!(t.len() >= 15 && t.len() <= 20);
        assert!(t.samples()[0].nt >= 10.0 && t.last().unwrap().nt <= 1000.0);
    }
}
