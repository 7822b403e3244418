//! Decay of the explicit witness density under the plane semigroup.

use strat_ipm::analysis::{fit_decay_exponent, Window};
use strat_ipm::fields::PlaneQuadrature;
use strat_ipm::propagator::{log_times, plane_norm_curve, sharpness_witness, PlaneNorm, WitnessSpec};

fn main() -> strat_ipm::Result<()> {
    let spec = WitnessSpec { epsilon: 0.05, s: 4.0, j: 0, xi_max: 256.0 };
    let witness = sharpness_witness(&spec)?;
    let quad = PlaneQuadrature::new(spec.xi_max)?;
    let nts = log_times(1.0, 1e2, 1e6, 17);
    let window = Window::new(1e2, 1e6)?;

    for j in [0, 1] {
        for norm in [PlaneNorm::l1(j), PlaneNorm::l2(j)] {
            let curve = plane_norm_curve(&witness, 1.0, &nts, norm, &quad)?;
            let fit = fit_decay_exponent(&curve, window)?;
            println!("{:6} slope {:+.4}", norm.id(), fit.exponent);
        }
    }
    Ok(())
}
