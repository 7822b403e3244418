//! Spectral containers for the three spatial settings.

pub mod plane;
pub mod profile;
pub mod strip;
pub mod torus;

use num_complex::Complex64;

pub use plane::PlaneQuadrature;
pub use profile::{ProfileShape, SampledProfile, Stratification};
pub use strip::{Parity, StripField, StripFieldX, StripFieldY, StripGrid, StripKind, XParity, YParity};
pub use torus::{PeriodicDomain, TorusField, TorusGrid};

/// Per-mode metadata handed to generic spectral operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeInfo {
    /// Integer labels `(n1, n2)` or `(p, q)`.
    pub index: [i64; 2],
    /// Frequencies that derivatives multiply by.
    pub xi: [f64; 2],
    /// Squared frequency inside the Sobolev weight `(1 + |.|^2)^{s/2}`.
    pub sobolev_sq: f64,
    /// Parseval weight: `||f||_2^2 = sum l2_weight * |c|^2`.
    pub l2_weight: f64,
    /// Linear damping rate of the mode per unit of `N`.
    pub damping: f64,
}

/// Common interface of coefficient-stored fields.
pub trait SpectralField: Clone + Send + Sync {
    fn for_each_mode(&self, f: impl FnMut(&ModeInfo, Complex64));

    /// New field with every coefficient replaced by `f(mode, c)`.
    fn map_modes(&self, f: impl Fn(&ModeInfo, Complex64) -> Complex64) -> Self;
}
