//! Transforms, bases and operators against independent pointwise oracles.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use approx::assert_relative_eq;
use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use proptest::prelude::*;
use strat_ipm::fields::{
    Parity, PeriodicDomain, SpectralField, StripField, StripFieldX, StripFieldY, StripGrid, TorusField, TorusGrid,
    XParity, YParity,
};
use strat_ipm::initial::InitialData;
use strat_ipm::operators::{biot_savart, derivative, norm, riesz1, NormSpec};

fn band(seed: u64, band: usize, amplitude: f64) -> InitialData {
    InitialData::BandLimited { seed, band, amplitude, mean_mode: 0.0 }
}

fn max_diff(a: &ndarray::Array2<Complex64>, b: &ndarray::Array2<Complex64>) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn max_abs(a: &ndarray::Array2<Complex64>) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `int_0^1 int_{-1}^{1} f conj(e_p) b_q dx2 dx1 / ||b_q||^2` by uniform sums in
/// `x1` and Gauss-Legendre in `x2`.
fn strip_coeff_oracle<P: Parity>(f: impl Fn(f64, f64) -> f64, p: i64, q: usize, points: usize) -> Complex64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(160).unwrap());
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..points {
        let x1 = j as f64 / points as f64;
        let e = Complex64::from_polar(1.0, -2.0 * PI * p as f64 * x1);
        let mut inner = 0.0;
        for &(x2, w) in rule.as_node_weight_pairs() {
            inner += w * f(x1, x2) * P::basis(q, x2);
        }
        acc += e * inner;
    }
    acc / (points as f64 * P::norm_sq(q))
}

#[test]
fn torus_round_trip() {
    let theta = band(3, 10, 1.0).torus(TorusGrid::dealiased(12)).unwrap();
    let back = TorusField::forward(&theta.inverse().unwrap(), *theta.grid()).unwrap();
    assert!(max_diff(theta.coeffs(), back.coeffs()) <= 1e-12 * max_abs(theta.coeffs()));
}

#[test]
fn torus_samples_match_pointwise_sum() {
    let grid = TorusGrid::dealiased(5);
    let theta = band(4, 5, 1.0).torus(grid).unwrap();
    let samples = theta.inverse().unwrap();
    let [m1, m2] = grid.points();
    for (i, j) in [(0, 0), (3, 7), (m1 - 1, m2 / 2)] {
        let (x1, x2) = (i as f64 / m1 as f64, j as f64 / m2 as f64);
        let mut v = Complex64::new(0.0, 0.0);
        for n1 in -5i64..=5 {
            for n2 in -5i64..=5 {
                v += theta.coeff(n1, n2) * Complex64::from_polar(1.0, 2.0 * PI * (n1 as f64 * x1 + n2 as f64 * x2));
            }
        }
        assert!(v.im.abs() < 1e-12);
        assert_relative_eq!(samples[[i, j]], v.re, epsilon = 1e-12);
    }
}

#[test]
fn strip_round_trips() {
    let grid = StripGrid::new(6, 24).unwrap();
    let x = band(5, 6, 1.0).strip(grid).unwrap();
    let back = StripFieldX::forward(&x.inverse().unwrap(), grid).unwrap();
    assert!(max_diff(x.coeffs(), back.coeffs()) <= 1e-12 * max_abs(x.coeffs()));

    let y: StripFieldY = x.d2();
    let back = StripFieldY::forward(&y.inverse().unwrap(), grid).unwrap();
    assert!(max_diff(y.coeffs(), back.coeffs()) <= 1e-12 * max_abs(y.coeffs()));
}

#[test]
fn strip_traces() {
    let grid = StripGrid::new(4, 20).unwrap();
    let x = band(8, 4, 1.0).strip(grid).unwrap();
    // X fields vanish on the walls; the vertical derivative of a Y field is an X field.
    assert!(x.trace_max(1.0) < 1e-10 && x.trace_max(-1.0) < 1e-10);
    let y: StripFieldY = x.d2();
    let yy: StripFieldX = y.d2();
    assert!(yy.trace_max(1.0) < 1e-10 && yy.trace_max(-1.0) < 1e-10);
    assert!(y.trace_max(1.0) > 1e-3);
}

#[test]
fn strip_evaluation_matches_basis_sum() {
    let grid = StripGrid::new(3, 9).unwrap();
    let x = band(2, 3, 1.0).strip(grid).unwrap();
    let (x1, x2) = (0.37, -0.61);
    let mut v = Complex64::new(0.0, 0.0);
    for p in -3i64..=3 {
        for q in 1..=9 {
            v += x.coeff(p, q) * Complex64::from_polar(1.0, 2.0 * PI * p as f64 * x1) * XParity::basis(q, x2);
        }
    }
    assert_relative_eq!(x.evaluate(x1, x2), v.re, epsilon = 1e-12);
}

fn check_product<A: Parity, B: Parity, O: Parity>(a: &StripField<A>, b: &StripField<B>, prod: &StripField<O>) {
    let grid = *a.grid();
    let scale = max_abs(prod.coeffs());
    let mut worst = 0.0f64;
    for p in -(grid.p_max() as i64)..=grid.p_max() as i64 {
        for q in O::MIN_Q..=grid.q_max() {
            let oracle =
                strip_coeff_oracle::<O>(|x1, x2| a.evaluate(x1, x2) * b.evaluate(x1, x2), p, q, 4 * grid.p_max() + 4);
            worst = worst.max((prod.coeff(p, q) - oracle).norm());
        }
    }
    assert!(worst <= 1e-10 * scale, "product error {worst:e} vs scale {scale:e}");
}

#[test]
fn parity_products_match_quadrature() {
    let grid = StripGrid::new(3, 12).unwrap();
    let a = band(1, 3, 1.0).strip(grid).unwrap();
    let b = band(2, 3, 1.0).strip(grid).unwrap();
    let y: StripFieldY = b.d2();

    let xx: StripFieldY = a.product(&b).unwrap();
    check_product(&a, &b, &xx);
    let xy: StripFieldX = a.product(&y).unwrap();
    check_product(&a, &y, &xy);
    let yy: StripFieldY = y.product(&y).unwrap();
    check_product(&y, &y, &yy);
}

#[test]
fn strip_velocity_is_divergence_free_and_tangent() {
    let grid = StripGrid::new(5, 20).unwrap();
    let theta = band(6, 5, 1.0).strip(grid).unwrap();
    let u = biot_savart(&theta);
    let div: StripFieldY = u.u2.d2();
    let div = div.add(&u.u1.d1()).unwrap();
    assert!(max_abs(div.coeffs()) <= 1e-12 * max_abs(u.u1.d1().coeffs()));
    assert!(u.u2.trace_max(1.0) < 1e-10 && u.u2.trace_max(-1.0) < 1e-10);
}

#[test]
fn torus_velocity_matches_darcy_at_grid_points() {
    // u = -grad p + (0, theta), div u = 0: for theta = cos(k.x), p = k2/|k|^2 sin(k.x).
    let mut theta = TorusField::zeros(TorusGrid::dealiased(4));
    theta.set_mode_real(1, 2, Complex64::new(0.5, 0.0)).unwrap();
    let u = biot_savart(&theta);
    let (s1, s2) = (u.u1.to_physical([64, 64]), u.u2.to_physical([64, 64]));
    let (k1, k2) = (2.0 * PI, 4.0 * PI);
    let k_sq = k1 * k1 + k2 * k2;
    for (i, j) in [(0, 0), (13, 45), (40, 7)] {
        let phase = (k1 * i as f64 + k2 * j as f64) / 64.0;
        assert_relative_eq!(s1[[i, j]], -k1 * k2 / k_sq * phase.cos(), epsilon = 1e-12);
        assert_relative_eq!(s2[[i, j]], (1.0 - k2 * k2 / k_sq) * phase.cos(), epsilon = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riesz_is_a_contraction(seed in any::<u64>(), b in 1usize..8, s in 0.0f64..4.0) {
        let theta = band(seed, b, 1.0).torus(TorusGrid::dealiased(8)).unwrap();
        let r = riesz1(&theta);
        let spec = NormSpec::sobolev(s);
        prop_assert!(norm(&r, spec).unwrap() <= norm(&theta, spec).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn torus_velocity_is_divergence_free(seed in any::<u64>(), b in 1usize..8) {
        let theta = band(seed, b, 1.0).torus(TorusGrid::dealiased(8)).unwrap();
        let u = biot_savart(&theta);
        let div = derivative(&u.u1, 0).unwrap().add(&derivative(&u.u2, 1).unwrap()).unwrap();
        let scale = norm(&derivative(&u.u1, 0).unwrap(), NormSpec::l2()).unwrap().max(1e-300);
        prop_assert!(norm(&div, NormSpec::l2()).unwrap() <= 1e-13 * scale);
    }

    #[test]
    fn velocity_horizontal_mean_vanishes(seed in any::<u64>(), b in 1usize..6) {
        let theta = band(seed, b, 1.0).strip(StripGrid::new(6, 16).unwrap()).unwrap();
        let u = biot_savart(&theta);
        prop_assert!(u.u1.horizontal_mean().iter().all(|c| c.norm() == 0.0));
        let t = band(seed, b, 1.0).torus(TorusGrid::dealiased(6)).unwrap();
        prop_assert!(biot_savart(&t).u1.horizontal_mean().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn strip_round_trip_any_band(seed in any::<u64>(), p in 1usize..6, q in 1usize..40) {
        let grid = StripGrid::new(p, q).unwrap();
        let x = band(seed, p.min(q), 1.0).strip(grid).unwrap();
        let back = StripFieldX::forward(&x.inverse().unwrap(), grid).unwrap();
        prop_assert!(max_diff(x.coeffs(), back.coeffs()) <= 1e-12 * max_abs(x.coeffs()).max(1e-300));
    }

    #[test]
    fn box_damping_lies_in_unit_interval(seed in any::<u64>(), side in 1.0f64..64.0) {
        let grid = TorusGrid::rectangular([6, 6], PeriodicDomain::PlaneBox { side });
        let theta = band(seed, 4, 1.0).torus(grid).unwrap();
        let mut ok = true;
        theta.for_each_mode(|m, _| ok &= (0.0..=1.0).contains(&m.damping));
        prop_assert!(ok);
    }

    #[test]
    fn sobolev_norm_is_monotone_in_order(seed in any::<u64>(), s in 0.0f64..3.0) {
        let theta = band(seed, 5, 1.0).strip(StripGrid::new(5, 12).unwrap()).unwrap();
        prop_assert!(norm(&theta, NormSpec::sobolev(s)).unwrap() <= norm(&theta, NormSpec::sobolev(s + 1.0)).unwrap());
    }
}

#[test]
fn y_constant_has_unit_mean() {
    let grid = StripGrid::new(2, 4).unwrap();
    let mut c = StripFieldY::zeros(grid);
    c.set_mode_real(0, 0, Complex64::new(1.0, 0.0)).unwrap();
    assert_relative_eq!(c.evaluate(0.3, 0.9), 1.0, epsilon = 1e-15);
    assert_relative_eq!(YParity::basis(0, 0.4), 1.0);
}
