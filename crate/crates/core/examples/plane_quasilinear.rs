//! Periodized plane box around `N x2 + sigma(x2)` with a compact bump `sigma`.

use strat_ipm::analysis::{build_trajectory_report, RatePrediction, Window};
use strat_ipm::fields::ProfileShape;
use strat_ipm::initial::InitialData;
use strat_ipm::solver::{Domain, DtPolicy, Simulation, SolverConfig};

fn main() -> strat_ipm::Result<()> {
    let data =
        InitialData::AlgebraicTail { seed: 2, amplitude: 0.01, regularity: 4.0, extra_decay: 0.5, horizontal_band: 2 };
    let mut config = SolverConfig::new(Domain::PlaneBox { side: 32.0 }, 1.0, data, [8, 128], 1000.0);
    config.profile = ProfileShape::Bump { amplitude: 0.1, radius: 4.0 };
    config.dt = DtPolicy::Fixed { dt: 0.5 };

    let sim = Simulation::new(config)?;
    for w in sim.config().validate()? {
        println!("warning: {w}");
    }
    let traj = sim.run()?;
    let predictions = [RatePrediction::new("u_H4", -0.5, 0.2), RatePrediction::new("grad_u2_H3", -1.0, 0.2)];
    for line in build_trajectory_report(&traj, &predictions, Window::valid(128))?.lines() {
        println!("{line}");
    }
    Ok(())
}
