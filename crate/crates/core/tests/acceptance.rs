//! Acceptance suite: every criterion at its stated tolerance, one `PASS`/`FAIL`
//! line each. Detail lines are indented below the verdict.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use strat_ipm::analysis::audit_mean_laws;
use strat_ipm::fields::{Parity, StripField, StripFieldX, StripFieldY, StripGrid};
use strat_ipm::initial::InitialData;
use strat_ipm::scenario::{preset, run_scenario, Outcome, Scenario};
use strat_ipm::solver::{run, Domain, DtPolicy, SolverConfig, StateField};

struct Verdict {
    pass: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { pass: true, details: Vec::new() }
    }

    fn check(&mut self, pass: bool, line: impl Into<String>) {
        self.pass &= pass;
        self.details.push(format!("{} {}", if pass { "ok  " } else { "FAIL" }, line.into()));
    }

    fn note(&mut self, line: impl Into<String>) {
        self.details.push(format!("     {}", line.into()));
    }

    /// Folds a scenario summary in, keeping its verdict lines.
    fn scenario(&mut self, s: &Scenario) {
        match run_scenario(s) {
            Ok(art) => {
                for line in art.summary.lines() {
                    if let Some(rest) = line.strip_prefix("PASS ") {
                        self.check(true, rest);
                    } else if let Some(rest) = line.strip_prefix("FAIL ") {
                        self.check(false, rest);
                    } else if let Some(rest) = line.strip_prefix("# ") {
                        if !rest.starts_with("scenario") && !rest.starts_with("anchor") && rest != s.description {
                            self.note(rest);
                        }
                    }
                }
                self.pass &= art.outcome == Outcome::Pass;
            }
            Err(e) => self.check(false, format!("scenario {}: {e}", s.id)),
        }
    }
}

fn only_simulation(id: &str, label: &str) -> Scenario {
    let mut s = preset(id).expect("preset");
    s.simulations.retain(|sim| sim.label == label);
    s.predictions.retain(|p| p.curve.starts_with(&format!("{label}.")));
    s
}

fn c1() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    v.scenario(&preset("torus-linear-rates").unwrap());
    let elapsed = start.elapsed();
    v.check(elapsed < Duration::from_secs(60), format!("runtime {elapsed:.2?} < 1 min"));
    v
}

fn c2() -> Verdict {
    let mut v = Verdict::new();
    v.scenario(&preset("kernel-decay").unwrap());
    v
}

fn c3() -> Verdict {
    let mut v = Verdict::new();
    v.scenario(&preset("sharpness-witness").unwrap());
    v
}

fn c4() -> Verdict {
    let mut v = Verdict::new();
    v.scenario(&preset("mean-laws").unwrap());
    // dt refinement of the torus law over Nt in [0, 20].
    let data = InitialData::BandLimited { seed: 7, band: 3, amplitude: 0.1, mean_mode: 0.3 };
    for dt in [0.05, 0.025] {
        let mut cfg = SolverConfig::new(Domain::Torus, 1.0, data.clone(), [16, 16], 20.0);
        cfg.dt = DtPolicy::Fixed { dt };
        cfg.snapshot_every = 10;
        match run(cfg) {
            Ok(traj) => {
                let rep = audit_mean_laws(&traj);
                v.check(
                    rep.mean_error <= 1e-8,
                    format!("torus dt = {dt}: mean law relative error {:.3e}", rep.mean_error),
                );
                let snap = traj
                    .snapshots
                    .iter()
                    .map(|s| match &s.theta {
                        StateField::Periodic(f) => strat_ipm::operators::biot_savart(f)
                            .u1
                            .horizontal_mean()
                            .iter()
                            .map(|c| c.norm())
                            .fold(0.0, f64::max),
                        StateField::Strip(_) => f64::NAN,
                    })
                    .fold(0.0, f64::max);
                v.check(
                    snap <= 1e-12,
                    format!("torus dt = {dt}: int u1 dx1 over {} snapshots, max {snap:.3e}", traj.snapshots.len()),
                );
            }
            Err(e) => v.check(false, format!("torus dt = {dt}: {e}")),
        }
    }
    v
}

fn c5() -> Verdict {
    let mut v = Verdict::new();
    let start = Instant::now();
    v.scenario(&only_simulation("torus-nonlinear-profile", "ledger"));
    let elapsed = start.elapsed();
    v.check(elapsed < Duration::from_secs(600), format!("runtime {elapsed:.2?} < 10 min at K = 128"));
    v
}

fn c6() -> Verdict {
    let mut v = Verdict::new();
    v.scenario(&only_simulation("torus-nonlinear-profile", "profile"));
    v
}

fn c7() -> Verdict {
    let mut v = Verdict::new();
    v.scenario(&preset("plane-quasilinear").unwrap());
    v
}

fn c8() -> Verdict {
    let mut v = Verdict::new();
    let mut s = preset("inequalities").unwrap();
    if let Some(ineq) = &mut s.inequalities {
        ineq.commutator = None;
        ineq.convolution = None;
    }
    let start = Instant::now();
    v.scenario(&s);
    v.note(format!("runtime {:.2?}", start.elapsed()));
    v
}

fn c9() -> Verdict {
    let mut v = Verdict::new();
    let mut s = preset("inequalities").unwrap();
    if let Some(ineq) = &mut s.inequalities {
        ineq.balancing = None;
    }
    v.scenario(&s);
    v
}

fn max_abs(a: &ndarray::Array2<Complex64>) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn product_oracle_error<A: Parity, B: Parity, O: Parity>(
    a: &StripField<A>,
    b: &StripField<B>,
    prod: &StripField<O>,
) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(160).unwrap());
    let grid = *a.grid();
    let points = 4 * grid.p_max() + 4;
    let mut worst = 0.0f64;
    for p in -(grid.p_max() as i64)..=grid.p_max() as i64 {
        for q in O::MIN_Q..=grid.q_max() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..points {
                let x1 = j as f64 / points as f64;
                let inner: f64 = rule
                    .as_node_weight_pairs()
                    .iter()
                    .map(|&(x2, w)| w * a.evaluate(x1, x2) * b.evaluate(x1, x2) * O::basis(q, x2))
                    .sum();
                acc += Complex64::from_polar(1.0, -2.0 * PI * p as f64 * x1) * inner;
            }
            let oracle = acc / (points as f64 * O::norm_sq(q));
            worst = worst.max((prod.coeff(p, q) - oracle).norm());
        }
    }
    worst / max_abs(prod.coeffs())
}

fn c10() -> Verdict {
    let mut v = Verdict::new();
    let grid = StripGrid::new(6, 48).unwrap();
    let x = InitialData::BandLimited { seed: 5, band: 6, amplitude: 1.0, mean_mode: 0.0 }.strip(grid).unwrap();
    let y: StripFieldY = x.d2();
    let rx = StripFieldX::forward(&x.inverse().unwrap(), grid)
        .map(|b| max_abs(&(x.coeffs() - b.coeffs())) / max_abs(x.coeffs()));
    let ry = StripFieldY::forward(&y.inverse().unwrap(), grid)
        .map(|b| max_abs(&(y.coeffs() - b.coeffs())) / max_abs(y.coeffs()));
    match (rx, ry) {
        (Ok(ex), Ok(ey)) => v.check(ex.max(ey) <= 1e-12, format!("round trips X {ex:.2e}, Y {ey:.2e} (relative)")),
        (a, b) => v.check(false, format!("round trip: {:?} {:?}", a.err(), b.err())),
    }
    let u = strat_ipm::operators::biot_savart(&x);
    let traces = [x.trace_max(1.0), x.trace_max(-1.0), u.u2.trace_max(1.0), u.u2.trace_max(-1.0)];
    let worst = traces.iter().copied().fold(0.0, f64::max);
    v.check(worst <= 1e-10, format!("wall traces of theta and u2: max {worst:.2e}"));

    v.scenario(&preset("strip-rates").unwrap());

    let pgrid = StripGrid::new(3, 12).unwrap();
    let a = InitialData::BandLimited { seed: 1, band: 3, amplitude: 1.0, mean_mode: 0.0 }.strip(pgrid).unwrap();
    let b = InitialData::BandLimited { seed: 2, band: 3, amplitude: 1.0, mean_mode: 0.0 }.strip(pgrid).unwrap();
    let yb: StripFieldY = b.d2();
    let xx: StripFieldY = a.product(&b).unwrap();
    let xy: StripFieldX = a.product(&yb).unwrap();
    let yy: StripFieldY = yb.product(&yb).unwrap();
    let errs =
        [product_oracle_error(&a, &b, &xx), product_oracle_error(&a, &yb, &xy), product_oracle_error(&yb, &yb, &yy)];
    v.check(
        errs.iter().all(|&e| e <= 1e-10),
        format!("parity products vs quadrature: XX->Y {:.2e}, XY->X {:.2e}, YY->Y {:.2e}", errs[0], errs[1], errs[2]),
    );
    v
}

fn c11() -> Verdict {
    let mut v = Verdict::new();
    let data = InitialData::BandLimited { seed: 3, band: 4, amplitude: 0.2, mean_mode: 0.0 };
    let finals: Vec<_> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let mut cfg = SolverConfig::new(Domain::Torus, 1.0, data.clone(), [16, 16], 0.4);
            cfg.dt = DtPolicy::Fixed { dt };
            run(cfg).map(|t| t.final_state().coeffs().clone())
        })
        .collect::<Result<_, _>>()
        .expect("order runs");
    let diff = |a: &ndarray::Array2<Complex64>, b: &ndarray::Array2<Complex64>| {
        (a - b).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    };
    let (e1, e2) = (diff(&finals[0], &finals[1]), diff(&finals[1], &finals[2]));
    let ratio = e1 / e2;
    v.check(
        (12.0..=20.0).contains(&ratio),
        format!("self-convergence ratio {ratio:.3} in [12, 20] (differences {e1:.3e}, {e2:.3e})"),
    );
    v
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("torus linear rate table", c1),
        ("plane kernel decay", c2),
        ("sharpness witness slopes", c3),
        ("mean laws", c4),
        ("energy ledger", c5),
        ("asymptotic profile", c6),
        ("quasi-linear plane regime", c7),
        ("balancing inequality", c8),
        ("commutator and convolution ensembles", c9),
        ("strip suite", c10),
        ("solver order", c11),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        println!("{} criterion {:2}: {name} ({:.1?})", if v.pass { "PASS" } else { "FAIL" }, k + 1, start.elapsed());
        for d in &v.details {
            println!("    {d}");
        }
        failed += usize::from(!v.pass);
    }
    println!("\n{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
