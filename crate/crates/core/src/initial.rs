//! Deterministic initial-data families.
//!
//! Random coefficients are drawn from a generator seeded per mode, so a field
//! built at a higher resolution keeps every low mode of the coarse one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{StripFieldX, StripGrid, TorusField, TorusGrid};

/// A prescribed coefficient, `(n1, n2)` on periodic domains, `(p, q)` on the strip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub n1: i64,
    pub n2: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn default_extra_decay() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Gaussian coefficients on `|n1|, |n2| <= band`, scaled to `L^2` norm
    /// `amplitude`; `mean_mode` is then added to the lowest horizontally
    /// uniform mode (the constant, or `cos(pi x2 / 2)` on the strip).
    BandLimited {
        seed: u64,
        band: usize,
        amplitude: f64,
        #[serde(default)]
        mean_mode: f64,
    },
    /// Random phases with modulus `(1 + |xi|^2)^{-m/2} (1 + |n|^2)^{-extra_decay/2}`
    /// on `1 <= |n1| <= horizontal_band` and every resolved vertical mode, scaled
    /// to `L^2` norm `amplitude`. Such data sit just inside `H^m` and realize
    /// the algebraic decay rates.
    AlgebraicTail {
        seed: u64,
        amplitude: f64,
        regularity: f64,
        #[serde(default = "default_extra_decay")]
        extra_decay: f64,
        horizontal_band: usize,
    },
    /// Explicit coefficients; conjugate partners are filled in.
    Modes { modes: Vec<ModeAmplitude> },
}

fn mode_rng(seed: u64, a: i64, b: i64) -> ChaCha8Rng {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [a as u64, b as u64] {
        h = (h ^ v).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
        h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 29;
    }
    ChaCha8Rng::seed_from_u64(h)
}

pub(crate) fn gaussian(seed: u64, a: i64, b: i64) -> Complex64 {
    let mut rng = mode_rng(seed, a, b);
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn phase(seed: u64, a: i64, b: i64) -> Complex64 {
    let mut rng = mode_rng(seed, a, b);
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

impl InitialData {
    pub fn seed(&self) -> Option<u64> {
        match self {
            InitialData::BandLimited { seed, .. } | InitialData::AlgebraicTail { seed, .. } => Some(*seed),
            InitialData::Modes { .. } => None,
        }
    }

    /// Same family with a different seed (no effect on explicit modes).
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitialData::BandLimited { seed, .. } | InitialData::AlgebraicTail { seed, .. } => *seed = new_seed,
            InitialData::Modes { .. } => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Parameter(msg.to_string()));
        match *self {
            InitialData::BandLimited { band, amplitude, mean_mode, .. } => {
                if band == 0 {
                    return bad("band-limited data need band >= 1");
                }
                if !(amplitude.is_finite() && amplitude >= 0.0 && mean_mode.is_finite()) {
                    return bad("amplitude must be finite and non-negative");
                }
            }
            InitialData::AlgebraicTail { amplitude, regularity, extra_decay, horizontal_band, .. } => {
                if horizontal_band == 0 {
                    return bad("algebraic-tail data need horizontal_band >= 1");
                }
                if !(amplitude.is_finite() && amplitude >= 0.0) || !(regularity >= 0.0) || !(extra_decay > 0.0) {
                    return bad("algebraic-tail data need amplitude >= 0, regularity >= 0, extra_decay > 0");
                }
            }
            InitialData::Modes { ref modes } => {
                if modes.iter().any(|m| !(m.re.is_finite() && m.im.is_finite())) {
                    return bad("mode amplitudes must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn torus(&self, grid: TorusGrid) -> Result<TorusField> {
        self.validate()?;
        let mut f = TorusField::zeros(grid);
        let [k1, k2] = [grid.modes()[0] as i64, grid.modes()[1] as i64];
        let canonical = |n1: i64, n2: i64| n1 > 0 || (n1 == 0 && n2 > 0);
        match *self {
            InitialData::BandLimited { seed, band, amplitude, mean_mode } => {
                let b = band as i64;
                for n1 in 0..=b.min(k1) {
                    for n2 in -b.min(k2)..=b.min(k2) {
                        if canonical(n1, n2) {
                            f.set_mode_real(n1, n2, gaussian(seed, n1, n2))?;
                        }
                    }
                }
                normalize_torus(&mut f, amplitude);
                let c = f.coeff(0, 0) + mean_mode / grid.area();
                f.set_coeff(0, 0, c)?;
            }
            InitialData::AlgebraicTail { seed, amplitude, regularity, extra_decay, horizontal_band } => {
                for n1 in 1..=(horizontal_band as i64).min(k1) {
                    for n2 in -k2..=k2 {
                        let modulus = (1.0 + grid.sobolev_sq(n1, n2)).powf(-0.5 * regularity)
                            * (1.0 + (n1 * n1 + n2 * n2) as f64).powf(-0.5 * extra_decay);
                        f.set_mode_real(n1, n2, phase(seed, n1, n2) * modulus)?;
                    }
                }
                normalize_torus(&mut f, amplitude);
            }
            InitialData::Modes { ref modes } => {
                for m in modes {
                    f.set_mode_real(m.n1, m.n2, Complex64::new(m.re, m.im))?;
                }
            }
        }
        Ok(f)
    }

    pub fn strip(&self, grid: StripGrid) -> Result<StripFieldX> {
        self.validate()?;
        let mut f = StripFieldX::zeros(grid);
        let (pm, qm) = (grid.p_max() as i64, grid.q_max());
        match *self {
            InitialData::BandLimited { seed, band, amplitude, mean_mode } => {
                for p in 0..=(band as i64).min(pm) {
                    for q in 1..=band.min(qm) {
                        f.set_mode_real(p, q, gaussian(seed, p, q as i64))?;
                    }
                }
                normalize_strip(&mut f, amplitude);
                let c = f.coeff(0, 1) + mean_mode;
                f.set_coeff(0, 1, c)?;
            }
            InitialData::AlgebraicTail { seed, amplitude, regularity, extra_decay, horizontal_band } => {
                for p in 1..=(horizontal_band as i64).min(pm) {
                    for q in 1..=qm {
                        let [a, b] = grid.frequency(p, q);
                        let modulus = (1.0 + a * a + b * b).powf(-0.5 * regularity)
                            * (1.0 + (p * p) as f64 + (q * q) as f64).powf(-0.5 * extra_decay);
                        f.set_mode_real(p, q, phase(seed, p, q as i64) * modulus)?;
                    }
                }
                normalize_strip(&mut f, amplitude);
            }
            InitialData::Modes { ref modes } => {
                for m in modes {
                    if m.n2 < 1 {
                        return Err(Error::Parity(format!("X fields carry q >= 1, got q = {}", m.n2)));
                    }
                    f.set_mode_real(m.n1, m.n2 as usize, Complex64::new(m.re, m.im))?;
                }
            }
        }
        Ok(f)
    }
}

fn normalize_torus(f: &mut TorusField, amplitude: f64) {
    let n = f.l2_norm_sq().sqrt();
    if n > 0.0 {
        *f = f.scaled(amplitude / n);
    }
}

fn normalize_strip(f: &mut StripFieldX, amplitude: f64) {
    let n = f.l2_norm_sq().sqrt();
    if n > 0.0 {
        *f = f.scaled(amplitude / n);
    }
}
