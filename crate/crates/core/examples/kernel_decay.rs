//! `(1+Nt)^{1/4}` times the Fourier-`L^1` norm of the plane semigroup
//! applied to a Gaussian, over six decades of `Nt`.

use strat_ipm::fields::PlaneQuadrature;
use strat_ipm::propagator::{kernel_decay_ratio, log_times, GaussianDensity};

fn main() -> strat_ipm::Result<()> {
    let density = GaussianDensity { amplitude: 1.0, width: 1.0 };
    let quad = PlaneQuadrature::new(12.0)?;
    let curve = kernel_decay_ratio(&density, 2.0, 1.0, &log_times(1.0, 1.0, 1e6, 13), &quad)?;
    for s in curve.samples() {
        println!("Nt = {:9.2e}  scaled norm = {:.6e}", s.nt, s.value);
    }
    Ok(())
}
