//! Linear decay rates on the torus for data just inside `H^4`.
//!
//! Evolves an algebraic-tail density with the exact semigroup and fits the
//! decay exponents of `theta`, `u` and `u2` in `H^s` for `s = 0..=4`.

use strat_ipm::analysis::{build_report, torus_rate_table, Window};
use strat_ipm::fields::{PeriodicDomain, TorusGrid};
use strat_ipm::initial::InitialData;
use strat_ipm::propagator::{linear_sweep, log_times};

fn main() -> strat_ipm::Result<()> {
    let m = 4;
    let data = InitialData::AlgebraicTail {
        seed: 1,
        amplitude: 1.0,
        regularity: f64::from(m),
        extra_decay: 0.5,
        horizontal_band: 2,
    };
    let theta0 = data.torus(TorusGrid::rectangular([4, 1024], PeriodicDomain::Torus))?;

    let n = 1.0;
    let times = log_times(n, 1.0, 1e4, 81);
    let orders: Vec<f64> = (0..=m).map(f64::from).collect();
    let curves = linear_sweep(&theta0, n, &times, &orders)?;

    let report = build_report(&curves, &torus_rate_table(m, &[0, 1, 2, 3, 4], 0.15), Window::valid(1024));
    for line in report.lines() {
        println!("{line}");
    }
    Ok(())
}
