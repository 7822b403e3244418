//! The strip `T x [-1, 1]`: parity bases, wall traces, velocity and linear decay.

use strat_ipm::analysis::{build_report, RatePrediction, Window};
use strat_ipm::fields::{StripFieldX, StripGrid};
use strat_ipm::initial::InitialData;
use strat_ipm::operators::biot_savart;
use strat_ipm::propagator::{linear_sweep, log_times};

fn main() -> strat_ipm::Result<()> {
    let grid = StripGrid::new(4, 32)?;
    let theta = InitialData::BandLimited { seed: 5, band: 3, amplitude: 1.0, mean_mode: 0.0 }.strip(grid)?;

    let samples = theta.inverse()?;
    let back = StripFieldX::forward(&samples, grid)?;
    let err = (theta.coeffs() - back.coeffs()).iter().map(|c| c.norm()).fold(0.0, f64::max);
    println!("round trip max error {err:.2e}");

    let u = biot_savart(&theta);
    println!("u2 on the walls: {:.2e} / {:.2e}", u.u2.trace_max(-1.0), u.u2.trace_max(1.0));
    println!("u1 horizontal mean: {:.2e}", u.u1.horizontal_mean().iter().map(|c| c.norm()).fold(0.0, f64::max));

    let tail =
        InitialData::AlgebraicTail { seed: 1, amplitude: 1.0, regularity: 4.0, extra_decay: 0.5, horizontal_band: 2 };
    let theta0 = tail.strip(StripGrid::new(2, 1024)?)?;
    let curves = linear_sweep(&theta0, 1.0, &log_times(1.0, 1.0, 1e4, 81), &[0.0])?;
    let report = build_report(&curves, &[RatePrediction::new("u2_H0", -3.0, 0.2)], Window::new(10.0, 1e3)?);
    for line in report.lines() {
        println!("{line}");
    }
    Ok(())
}
