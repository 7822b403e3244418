//! Linear semigroup, plane quadrature curves and fitted exponents.

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use strat_ipm::analysis::{fit_decay_exponent, Window};
use strat_ipm::fields::{PeriodicDomain, PlaneQuadrature, StripGrid, TorusField, TorusGrid};
use strat_ipm::initial::InitialData;
use strat_ipm::propagator::{
    kernel_decay_ratio, linear_sweep, log_times, plane_norm_curve, semigroup_apply, GaussianDensity, PlaneNorm,
};

fn tail(seed: u64) -> InitialData {
    InitialData::AlgebraicTail { seed, amplitude: 1.0, regularity: 4.0, extra_decay: 0.5, horizontal_band: 2 }
}

#[test]
fn single_mode_decays_at_its_damping_rate() {
    // theta = cos(2 pi (x1 + 2 x2)): damping 1/5.
    let mut theta = TorusField::zeros(TorusGrid::dealiased(3));
    theta.set_mode_real(1, 2, Complex64::new(0.5, 0.0)).unwrap();
    let out = semigroup_apply(&theta, 3.0, 2.0).unwrap();
    assert_relative_eq!(out.coeff(1, 2).re, 0.5 * (-3.0 * 2.0 / 5.0f64).exp(), epsilon = 1e-15);
    // Vertical modes are untouched, the torus mean decays like e^{-Nt}.
    theta.set_mode_real(0, 1, Complex64::new(0.25, 0.0)).unwrap();
    theta.set_mode_real(0, 0, Complex64::new(1.0, 0.0)).unwrap();
    let out = semigroup_apply(&theta, 3.0, 2.0).unwrap();
    assert_eq!(out.coeff(0, 1), Complex64::new(0.25, 0.0));
    assert_relative_eq!(out.coeff(0, 0).re, (-6.0f64).exp(), epsilon = 1e-15);
}

#[test]
fn negative_time_rejected() {
    let theta = TorusField::zeros(TorusGrid::dealiased(2));
    assert!(semigroup_apply(&theta, 1.0, -1.0).is_err());
}

#[test]
fn kernel_curve_at_rest_equals_gaussian_mass() {
    // int exp(-|xi|^2) = pi; at t = 0 the scaled curve divides by ||f||_{H^s}.
    let density = GaussianDensity { amplitude: 1.0, width: 1.0 };
    let quad = PlaneQuadrature::new(12.0).unwrap();
    let l1 = plane_norm_curve(&density, 1.0, &[0.0], PlaneNorm::l1(0), &quad).unwrap();
    assert_relative_eq!(l1.samples()[0].value, std::f64::consts::PI, max_relative = 1e-10);
    let ratio = kernel_decay_ratio(&density, 2.0, 1.0, &[0.0, 1.0], &quad).unwrap();
    assert!(ratio.samples().iter().all(|s| s.value.is_finite() && s.value > 0.0));
}

#[test]
fn strip_sweep_matches_torus_ids() {
    let theta = tail(3).strip(StripGrid::new(2, 64).unwrap()).unwrap();
    let set = linear_sweep(&theta, 1.0, &log_times(1.0, 1.0, 100.0, 5), &[0.0, 2.0]).unwrap();
    assert_eq!(set.ids(), vec!["theta_H0", "u_H0", "u2_H0", "theta_H2", "u_H2", "u2_H2"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn semigroup_property(seed in any::<u64>(), n in 0.1f64..10.0, t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let theta = tail(seed).torus(TorusGrid::rectangular([4, 32], PeriodicDomain::Torus)).unwrap();
        let two_steps = semigroup_apply(&semigroup_apply(&theta, n, t).unwrap(), n, s).unwrap();
        let one_step = semigroup_apply(&theta, n, t + s).unwrap();
        let err = (two_steps.coeffs() - one_step.coeffs()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-14);
    }

    #[test]
    fn exponents_invariant_under_scaling(seed in 0u64..1000, lambda in 1e-3f64..1e3) {
        let grid = TorusGrid::rectangular([2, 128], PeriodicDomain::Torus);
        let times = log_times(1.0, 1.0, 1e3, 33);
        let window = Window::new(10.0, 1e3).unwrap();
        let fit = |amp: f64| {
            let data = InitialData::AlgebraicTail { seed, amplitude: amp, regularity: 4.0, extra_decay: 0.5, horizontal_band: 2 };
            let set = linear_sweep(&data.torus(grid).unwrap(), 1.0, &times, &[0.0]).unwrap();
            fit_decay_exponent(set.get("u2_H0").unwrap(), window).unwrap().exponent
        };
        prop_assert!((fit(1.0) - fit(lambda)).abs() < 1e-9);
    }

    #[test]
    fn norms_never_increase(seed in any::<u64>()) {
        let theta = tail(seed).torus(TorusGrid::rectangular([4, 64], PeriodicDomain::Torus)).unwrap();
        let set = linear_sweep(&theta, 2.0, &log_times(2.0, 0.1, 1e3, 20), &[0.0, 4.0]).unwrap();
        for id in set.ids() {
            let c = set.get(id).unwrap().samples();
            prop_assert!(c.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + 1e-14)));
        }
    }
}
