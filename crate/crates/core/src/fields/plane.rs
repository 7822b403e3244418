//! Graded Gauss-Legendre quadrature for frequency-space integrals over the plane.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tensor quadrature on `[-xi_max, xi_max]^2` built from geometric panels on
/// `[0, xi_max]` that cluster towards the coordinate axes, where the
/// anisotropic semigroup concentrates mass for large times.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneQuadrature {
    xi_max: f64,
    order: usize,
    panels: Vec<(f64, f64)>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PlaneQuadrature {
    /// Defaults: 20 nodes per panel, ratio 1/10, grading down to `1e-60 xi_max`.
    pub fn new(xi_max: f64) -> Result<Self> {
        Self::with_params(xi_max, 20, 0.1, 1e-60)
    }

    pub fn with_params(xi_max: f64, order: usize, ratio: f64, min_scale: f64) -> Result<Self> {
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return Err(Error::Parameter(format!("xi_max must be positive, got {xi_max}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) || !(min_scale > 0.0 && min_scale < 1.0) || order == 0 {
            return Err(Error::Parameter("panel ratio and minimum scale must lie in (0, 1)".into()));
        }
        let mut panels = Vec::new();
        let mut hi = xi_max;
        let floor = xi_max * min_scale;
        while hi > floor {
            let lo = (hi * ratio).max(floor);
            panels.push((lo, hi));
            hi = lo;
        }
        panels.push((0.0, hi));
        panels.reverse();
        Ok(Self::from_panels(xi_max, order, panels))
    }

    fn from_panels(xi_max: f64, order: usize, panels: Vec<(f64, f64)>) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order is positive"));
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(a, b) in &panels {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for &(x, w) in rule.as_node_weight_pairs() {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { xi_max, order, panels, nodes, weights }
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// Nodes on the half line `(0, xi_max)`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Every panel split in half.
    pub fn refined(&self) -> Self {
        let panels = self
            .panels
            .iter()
            .flat_map(|&(a, b)| {
                let m = 0.5 * (a + b);
                [(a, m), (m, b)]
            })
            .collect();
        Self::from_panels(self.xi_max, self.order, panels)
    }

    /// Same grading with the cutoff doubled (one extra outer panel).
    pub fn extended(&self) -> Self {
        let mut panels = self.panels.clone();
        panels.push((self.xi_max, 2.0 * self.xi_max));
        Self::from_panels(2.0 * self.xi_max, self.order, panels)
    }

    /// `int int f` over `[-xi_max, xi_max]^2`, folding the four quadrants.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let rows: Vec<f64> = self
            .nodes
            .par_iter()
            .zip(self.weights.par_iter())
            .map(|(&a, &wa)| {
                let mut acc = 0.0;
                for (&b, &wb) in self.nodes.iter().zip(&self.weights) {
                    acc += wb * (f(a, b) + f(-a, b) + f(a, -b) + f(-a, -b));
                }
                wa * acc
            })
            .collect();
        rows.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_mass() {
        let q = PlaneQuadrature::new(12.0).unwrap();
        let v = q.integrate(|a, b| (-(a * a + b * b)).exp());
        assert_relative_eq!(v, PI, max_relative = 1e-10);
    }

    #[test]
    fn integrable_axis_singularity() {
        // int_{-1}^{1} |x|^{-1/2} dx = 4
        let q = PlaneQuadrature::new(1.0).unwrap();
        let v = q.integrate(|a, _| a.abs().powf(-0.5));
        assert_relative_eq!(v, 8.0, max_relative = 1e-9);
    }

    #[test]
    fn refinement_and_extension() {
        let q = PlaneQuadrature::new(4.0).unwrap();
        assert_eq!(q.refined().nodes().len(), 2 * q.nodes().len());
        assert_eq!(q.extended().xi_max(), 8.0);
        assert!(q.nodes().iter().all(|&x| x > 0.0 && x < 4.0));
        assert!(PlaneQuadrature::new(-1.0).is_err());
    }
}
