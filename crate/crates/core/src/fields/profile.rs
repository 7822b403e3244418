//! Background stratification profiles `sigma(x2)` on a periodic box.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::plan;

/// Perturbation of the linear background, as a function of the box coordinate
/// `x2 in [0, L)`. Localized shapes are centred at `L/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileShape {
    Zero,
    /// `A cos(2 pi k x2 / L)`.
    Cosine {
        amplitude: f64,
        wavenumber: u32,
    },
    /// `A exp(-(x2 - L/2)^2 / w^2)`.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `A exp(1 - 1/(1 - r^2))` with `r = (x2 - L/2)/radius`, zero for `|r| >= 1`.
    Bump {
        amplitude: f64,
        radius: f64,
    },
}

impl ProfileShape {
    pub fn eval(&self, x2: f64, side: f64) -> f64 {
        match *self {
            ProfileShape::Zero => 0.0,
            ProfileShape::Cosine { amplitude, wavenumber } => {
                amplitude * (2.0 * PI * wavenumber as f64 * x2 / side).cos()
            }
            ProfileShape::Gaussian { amplitude, width } => {
                let r = (x2 - 0.5 * side) / width;
                amplitude * (-r * r).exp()
            }
            ProfileShape::Bump { amplitude, radius } => {
                let r = (x2 - 0.5 * side) / radius;
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProfileShape::Zero)
            || matches!(self, ProfileShape::Cosine { amplitude, .. }
                | ProfileShape::Gaussian { amplitude, .. }
                | ProfileShape::Bump { amplitude, .. } if *amplitude == 0.0)
    }

    /// `sup |sigma|`.
    pub fn sup(&self) -> f64 {
        match *self {
            ProfileShape::Zero => 0.0,
            ProfileShape::Cosine { amplitude, .. }
            | ProfileShape::Gaussian { amplitude, .. }
            | ProfileShape::Bump { amplitude, .. } => amplitude.abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProfileShape::Zero => true,
            ProfileShape::Cosine { amplitude, .. } => amplitude.is_finite(),
            ProfileShape::Gaussian { amplitude, width } => amplitude.is_finite() && width > 0.0,
            ProfileShape::Bump { amplitude, radius } => amplitude.is_finite() && radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid profile {self:?}")))
        }
    }
}

/// Strength `N` of the background together with the profile perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stratification {
    pub n: f64,
    pub profile: ProfileShape,
}

impl Stratification {
    /// Fails for `N <= 0`; returns a warning when `sup |sigma| > N/2`, where the
    /// total background may stop being monotone.
    pub fn check(&self) -> Result<Option<String>> {
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::Parameter(format!("N must be positive, got {}", self.n)));
        }
        self.profile.validate()?;
        let sup = self.profile.sup();
        Ok((sup > 0.5 * self.n).then(|| format!("sup|sigma| = {sup} exceeds N/2 = {}", 0.5 * self.n)))
    }
}

/// Profile samples on `M` uniform points of `[0, L)` and the Fourier
/// coefficients of `sigma(x2) = sum_k c_k exp(2 pi i k x2 / L)`, `|k| <= K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile {
    pub side: f64,
    pub samples: Array1<f64>,
    pub spectrum: Array1<Complex64>,
}

impl SampledProfile {
    pub fn new(shape: &ProfileShape, modes: usize, points: usize, side: f64) -> Result<Self> {
        shape.validate()?;
        if points < 2 * modes + 1 {
            return Err(Error::Parameter(format!("{points} points cannot resolve {modes} modes")));
        }
        let h = side / points as f64;
        let samples = Array1::from_shape_fn(points, |j| shape.eval(j as f64 * h, side));
        let mut work: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan(points, FftDirection::Forward).process(&mut work);
        let k = modes as i64;
        let spectrum = Array1::from_shape_fn(2 * modes + 1, |i| {
            let n = i as i64 - k;
            work[n.rem_euclid(points as i64) as usize] / points as f64
        });
        Ok(Self { side, samples, spectrum })
    }

    pub fn modes(&self) -> usize {
        (self.spectrum.len() - 1) / 2
    }

    /// `sum_k (1 + xi_k^2)^{(m+1)/2} |c_k|`, the discrete weighted `l^1` size
    /// that controls the quasilinear regime.
    pub fn weighted_l1(&self, m: f64) -> f64 {
        let k = self.modes() as i64;
        self.spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let xi = 2.0 * PI * (i as i64 - k) as f64 / self.side;
                (1.0 + xi * xi).powf(0.5 * (m + 1.0)) * c.norm()
            })
            .sum()
    }
}
