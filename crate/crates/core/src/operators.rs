//! Spectral operators: Riesz transform, Biot-Savart law, derivatives,
//! discrete norms and the weighted convolution ratio.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ModeInfo, PeriodicDomain, SpectralField, StripFieldX, StripFieldY, TorusField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `||(1 + |xi|^2)^{s/2} F f||_{l^2}` with Parseval weights.
    Sobolev,
    /// `|| |xi|^s F f ||_{l^2}`.
    Homogeneous,
    /// `||(1 + |xi|^2)^{s/2} F f||_{l^1}`.
    WeightedL1,
    /// `l^1` over the vertical index of the `l^2` norm over the horizontal one.
    AnisoL1L2,
    L2,
    /// Weighted `l^1` sum, an upper bound for the sup norm of derivatives of order `s`.
    LinfProxy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub order: f64,
}

impl NormSpec {
    pub fn sobolev(s: f64) -> Self {
        Self { kind: NormKind::Sobolev, order: s }
    }

    pub fn homogeneous(s: f64) -> Self {
        Self { kind: NormKind::Homogeneous, order: s }
    }

    pub fn l2() -> Self {
        Self { kind: NormKind::L2, order: 0.0 }
    }

    pub fn weighted_l1(s: f64) -> Self {
        Self { kind: NormKind::WeightedL1, order: s }
    }

    pub fn aniso(s: f64) -> Self {
        Self { kind: NormKind::AnisoL1L2, order: s }
    }

    pub fn linf_proxy(s: f64) -> Self {
        Self { kind: NormKind::LinfProxy, order: s }
    }

    fn validate(&self) -> Result<()> {
        if !(self.order.is_finite() && self.order >= 0.0) {
            return Err(Error::Parameter(format!("norm order must be finite and >= 0, got {}", self.order)));
        }
        Ok(())
    }

    fn weight(&self, mode: &ModeInfo) -> f64 {
        let s = self.order;
        match self.kind {
            NormKind::L2 => 1.0,
            NormKind::Homogeneous if s == 0.0 => 1.0,
            NormKind::Homogeneous => mode.sobolev_sq.powf(0.5 * s),
            _ => (1.0 + mode.sobolev_sq).powf(0.5 * s),
        }
    }
}

/// Discrete norm of a spectral field.
pub fn norm<F: SpectralField>(field: &F, spec: NormSpec) -> Result<f64> {
    spec.validate()?;
    Ok(match spec.kind {
        NormKind::Sobolev | NormKind::Homogeneous | NormKind::L2 => {
            let mut acc = 0.0;
            field.for_each_mode(|m, c| acc += m.l2_weight * (spec.weight(m) * c.norm()).powi(2));
            acc.sqrt()
        }
        NormKind::WeightedL1 | NormKind::LinfProxy => {
            let mut acc = 0.0;
            field.for_each_mode(|m, c| acc += spec.weight(m) * c.norm());
            acc
        }
        NormKind::AnisoL1L2 => {
            let mut columns: BTreeMap<i64, f64> = BTreeMap::new();
            field.for_each_mode(|m, c| *columns.entry(m.index[1]).or_default() += (spec.weight(m) * c.norm()).powi(2));
            columns.values().map(|v| v.sqrt()).sum()
        }
    })
}

/// Horizontal Riesz transform: multiplier `-i xi1/|xi|`, zero where `xi1 = 0`.
pub fn riesz1<F: SpectralField>(field: &F) -> F {
    field.map_modes(|m, c| {
        let r = m.xi[0].hypot(m.xi[1]);
        if m.xi[0] == 0.0 || r == 0.0 {
            ZERO
        } else {
            c * Complex64::new(0.0, -m.xi[0] / r)
        }
    })
}

/// Derivative of a periodic field along `axis` (0 or 1).
pub fn derivative(field: &TorusField, axis: usize) -> Result<TorusField> {
    if axis > 1 {
        return Err(Error::Parameter(format!("axis must be 0 or 1, got {axis}")));
    }
    Ok(field.map_modes(|m, c| c * Complex64::new(0.0, m.xi[axis])))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusVelocity {
    pub u1: TorusField,
    pub u2: TorusField,
}

/// Strip velocity: `u1` lives in the Y basis, `u2` in the X basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StripVelocity {
    pub u1: StripFieldY,
    pub u2: StripFieldX,
}

/// Velocity induced by a density perturbation through Darcy's law.
pub trait BiotSavart {
    type Velocity;
    fn biot_savart(&self) -> Self::Velocity;
}

impl BiotSavart for TorusField {
    type Velocity = TorusVelocity;

    /// `u1 = -xi1 xi2/|xi|^2 theta`, `u2 = xi1^2/|xi|^2 theta`; on the torus the
    /// mean of `theta` also drives the mean of `u2`, on the box it does not.
    fn biot_savart(&self) -> TorusVelocity {
        let mean_to_u2 = matches!(self.grid().domain(), PeriodicDomain::Torus);
        let u1 = self.map_modes(|m, c| {
            let d = m.xi[0] * m.xi[0] + m.xi[1] * m.xi[1];
            if d == 0.0 {
                ZERO
            } else {
                c * (-m.xi[0] * m.xi[1] / d)
            }
        });
        let u2 = self.map_modes(|m, c| {
            let d = m.xi[0] * m.xi[0] + m.xi[1] * m.xi[1];
            if d == 0.0 {
                if mean_to_u2 {
                    c
                } else {
                    ZERO
                }
            } else {
                c * (m.xi[0] * m.xi[0] / d)
            }
        });
        TorusVelocity { u1, u2 }
    }
}

impl BiotSavart for StripFieldX {
    type Velocity = StripVelocity;

    /// `u2 = (2 pi p)^2/D theta` on `B_{p,q}` and `u1 = i (2 pi p)(pi q/2)/D theta`
    /// on `C_{p,q}`, which makes the field divergence free with `u2 = 0` on the walls.
    fn biot_savart(&self) -> StripVelocity {
        let grid = *self.grid();
        let mut u1 = StripFieldY::zeros(grid);
        let mut u2 = StripFieldX::zeros(grid);
        let pm = grid.p_max() as i64;
        for p in -pm..=pm {
            for q in 1..=grid.q_max() {
                let [a, b] = grid.frequency(p, q);
                let d = a * a + b * b;
                let c = self.coeff(p, q);
                let i = (p + pm) as usize;
                u2.coeffs_mut()[[i, q]] = c * (a * a / d);
                u1.coeffs_mut()[[i, q]] = c * Complex64::new(0.0, a * b / d);
            }
        }
        StripVelocity { u1, u2 }
    }
}

pub fn biot_savart<T: BiotSavart>(theta: &T) -> T::Velocity {
    theta.biot_savart()
}

/// Norm of a two-component velocity: `sqrt(|u1|^2 + |u2|^2)` for `l^2` kinds,
/// the sum for `l^1` kinds.
pub fn velocity_norm<A: SpectralField, B: SpectralField>(u1: &A, u2: &B, spec: NormSpec) -> Result<f64> {
    let (a, b) = (norm(u1, spec)?, norm(u2, spec)?);
    Ok(match spec.kind {
        NormKind::Sobolev | NormKind::Homogeneous | NormKind::L2 => a.hypot(b),
        _ => a + b,
    })
}

/// LHS, constant-free RHS and their quotient for a weighted Young inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvolutionRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

fn lp(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Checks `1/q + 1/r = 1 + 1/p` with `p, q, r in [1, inf]`.
pub fn check_young(p: f64, q: f64, r: f64) -> Result<()> {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    if [p, q, r].iter().any(|&x| !(x >= 1.0)) || (inv(q) + inv(r) - 1.0 - inv(p)).abs() > 1e-12 {
        return Err(Error::Parameter(format!("exponents (p, q, r) = ({p}, {q}, {r}) violate 1/q + 1/r = 1 + 1/p")));
    }
    Ok(())
}

/// `||w F(fg)||_p / (||w F f||_q ||w F g||_r)` with `w = (1 + |n|^2)^{s/2}`,
/// using the exact (untruncated) product spectrum.
pub fn convolution_bound_check(
    f: &TorusField,
    g: &TorusField,
    s: f64,
    p: f64,
    q: f64,
    r: f64,
) -> Result<ConvolutionRatio> {
    check_young(p, q, r)?;
    let spec = NormSpec::sobolev(s);
    let weighted = |h: &TorusField| {
        let mut v = Vec::new();
        h.for_each_mode(|m, c| v.push(spec.weight(m) * c.norm()));
        v
    };
    let fg = f.product_full(g)?;
    let lhs = lp(weighted(&fg).into_iter(), p);
    let rhs = lp(weighted(f).into_iter(), q) * lp(weighted(g).into_iter(), r);
    Ok(ConvolutionRatio { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 } })
}

/// Variant with a factor depending on `x2` only:
/// `||w F(f sigma)||_p / (||w F f||_{l^q_{n2} l^p_{n1}} ||(1+n2^2)^{s/2} F sigma||_r)`.
pub fn convolution_bound_check_aniso(
    f: &TorusField,
    sigma: &TorusField,
    s: f64,
    p: f64,
    q: f64,
    r: f64,
) -> Result<ConvolutionRatio> {
    check_young(p, q, r)?;
    let [k1, _] = sigma.grid().modes();
    if sigma.coeffs().indexed_iter().any(|((i, _), c)| i != k1 && c.norm() > 0.0) {
        return Err(Error::Parameter("sigma must not depend on x1".into()));
    }
    let spec = NormSpec::sobolev(s);
    let fs = f.product_full(sigma)?;
    let mut lhs_vals = Vec::new();
    fs.for_each_mode(|m, c| lhs_vals.push(spec.weight(m) * c.norm()));
    let mut columns: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    f.for_each_mode(|m, c| columns.entry(m.index[1]).or_default().push(spec.weight(m) * c.norm()));
    let f_mixed = lp(columns.into_values().map(|col| lp(col.into_iter(), p)), q);
    let sigma_vals = sigma.horizontal_mean();
    let k2 = sigma.grid().modes()[1] as i64;
    let sig = lp(
        sigma_vals.iter().enumerate().map(|(j, c)| {
            let n2 = (j as i64 - k2) as f64;
            (1.0 + n2 * n2).powf(0.5 * s) * c.norm()
        }),
        r,
    );
    let lhs = lp(lhs_vals.into_iter(), p);
    let rhs = f_mixed * sig;
    Ok(ConvolutionRatio { lhs, rhs, ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{StripGrid, TorusGrid};
    use approx::assert_abs_diff_eq;

    fn single(n1: i64, n2: i64) -> TorusField {
        let mut f = TorusField::zeros(TorusGrid::dealiased(4));
        f.set_mode_real(n1, n2, Complex64::new(1.0, 0.0)).unwrap();
        f
    }

    #[test]
    fn riesz_of_pure_horizontal_mode() {
        let r = riesz1(&single(1, 0));
        assert_abs_diff_eq!((r.coeff(1, 0) - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((r.coeff(-1, 0) - Complex64::new(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(riesz1(&single(0, 2)).coeff(0, 2), ZERO);
    }

    #[test]
    fn velocity_of_horizontal_mode_is_vertical() {
        let u = single(1, 0).biot_savart();
        assert_abs_diff_eq!(norm(&u.u1, NormSpec::l2()).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.u2.coeff(1, 0).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn torus_mean_drives_u2() {
        let mut f = TorusField::zeros(TorusGrid::dealiased(2));
        f.set_coeff(0, 0, Complex64::new(0.7, 0.0)).unwrap();
        assert_abs_diff_eq!(f.biot_savart().u2.coeff(0, 0).re, 0.7, epsilon = 1e-15);
        let g = f.resample(TorusGrid::rectangular([2, 2], PeriodicDomain::PlaneBox { side: 8.0 }));
        assert_eq!(g.biot_savart().u2.coeff(0, 0), ZERO);
    }

    #[test]
    fn strip_velocity_example() {
        let grid = StripGrid::new(2, 4).unwrap();
        let mut f = StripFieldX::zeros(grid);
        f.set_mode_real(1, 1, Complex64::new(1.0, 0.0)).unwrap();
        let u = f.biot_savart();
        let d = (2.0 * std::f64::consts::PI).powi(2) + (std::f64::consts::PI / 2.0).powi(2);
        let pi2 = std::f64::consts::PI.powi(2);
        assert_abs_diff_eq!(u.u2.coeff(1, 1).re, 4.0 * pi2 / d, epsilon = 1e-15);
        assert_abs_diff_eq!(u.u1.coeff(1, 1).im, pi2 / d, epsilon = 1e-15);
    }

    #[test]
    fn sobolev_of_single_mode() {
        let v = norm(&single(1, 0), NormSpec::sobolev(2.0)).unwrap();
        // two conjugate coefficients of modulus one, weight (1 + 1)^{2/2}
        assert_abs_diff_eq!(v, (2.0f64 * 4.0).sqrt(), epsilon = 1e-14);
        assert!(norm(&single(1, 0), NormSpec::sobolev(-1.0)).is_err());
    }

    #[test]
    fn young_relation() {
        assert!(check_young(1.0, 1.0, 1.0).is_ok());
        assert!(check_young(2.0, 1.0, 2.0).is_ok());
        assert!(check_young(f64::INFINITY, 2.0, 2.0).is_ok());
        assert!(check_young(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn delta_spectrum_factor() {
        let f = single(2, 1);
        let mut g = TorusField::zeros(*f.grid());
        g.set_coeff(0, 0, Complex64::new(1.0, 0.0)).unwrap();
        let r = convolution_bound_check(&f, &g, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(r.ratio, 1.0, epsilon = 1e-12);
    }
}
