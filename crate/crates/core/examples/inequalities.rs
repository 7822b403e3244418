//! Balancing inequality and empirical constants of the commutator and
//! convolution estimates under resolution doubling.

use strat_ipm::analysis::{random_spectrum, verify_balancing, verify_commutator, verify_convolution, EnsembleSpec};
use strat_ipm::fields::{PeriodicDomain, TorusGrid};

fn main() -> strat_ipm::Result<()> {
    let grid = TorusGrid::rectangular([12, 12], PeriodicDomain::Torus);
    let spectra: Vec<_> = (0..200).map(|i| random_spectrum(grid, i, 1.0)).collect();
    let ms: Vec<f64> = (0..11).map(|k| f64::from(1u32 << k)).collect();
    let bal = verify_balancing(&spectra, &ms, 4)?;
    println!("balancing: {} checks, {} violations, max ratio {:.4}", bal.samples, bal.violations, bal.max_ratio);

    let spec = EnsembleSpec { samples: 20, band: 16, decay: 5.0, seed: 9 };
    for rep in [verify_commutator(&spec, 3.0)?, verify_convolution(&spec, 2.0, 2.0, 2.0, 1.0)?] {
        println!(
            "{}: max constant {:.4e}, drift under doubling {:.4}",
            rep.id,
            rep.max_ratio,
            rep.drift.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
