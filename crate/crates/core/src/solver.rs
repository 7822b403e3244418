//! Nonlinear time integration with the exact linear damping folded into a
//! fourth-order exponential Runge-Kutta scheme.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::strip::{basis_integral, cmul_real, hermitian_in_p, horizontal_synthesis, vertical_basis};
use crate::fields::torus::symmetrize;
use crate::fields::{
    PeriodicDomain, ProfileShape, Stratification, StripFieldX, StripGrid, StripKind, TorusField, TorusGrid,
};
use crate::initial::InitialData;
use crate::operators::{norm, NormSpec};
use crate::propagator::CurveSet;

type C64 = Complex64;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Torus,
    Strip,
    PlaneBox { side: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed {
        dt: f64,
    },
    /// `dt = safety * min(dx1/|u1|_inf, dx2/|u2|_inf)`, capped at `dt_max`.
    Cfl {
        safety: f64,
        dt_max: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub domain: Domain,
    pub n: f64,
    pub profile: ProfileShape,
    pub initial: InitialData,
    /// Band `[K1, K2]` (strip: `[P, Q]`).
    pub modes: [usize; 2],
    pub dt: DtPolicy,
    pub final_time: f64,
    /// Snapshot every this many steps; zero keeps only the first and last state.
    pub snapshot_every: usize,
    pub dealias: bool,
    /// Regularity index `m` used by diagnostics and the ledger.
    pub regularity: u32,
    pub nonlinear: bool,
}

impl SolverConfig {
    /// Defaults: no profile, CFL stepping, dealiased, `m = 4`, nonlinear.
    pub fn new(domain: Domain, n: f64, initial: InitialData, modes: [usize; 2], final_time: f64) -> Self {
        Self {
            domain,
            n,
            profile: ProfileShape::Zero,
            initial,
            modes,
            dt: DtPolicy::Cfl { safety: 0.5, dt_max: final_time / 200.0 },
            final_time,
            snapshot_every: 0,
            dealias: true,
            regularity: 4,
            nonlinear: true,
        }
    }

    /// Checks the invariants; returns warnings that do not prevent a run.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.n.is_finite() && self.n >= 0.0) {
            return Err(Error::Config(format!("N must be finite and non-negative, got {}", self.n)));
        }
        if !(self.final_time.is_finite() && self.final_time >= 0.0) {
            return Err(Error::Config(format!("final time must be >= 0, got {}", self.final_time)));
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
            DtPolicy::Cfl { safety, dt_max } if !(safety > 0.0 && dt_max > 0.0 && dt_max.is_finite()) => {
                return Err(Error::Config("CFL policy needs safety > 0 and dt_max > 0".into()));
            }
            _ => {}
        }
        if self.modes[0] == 0 && self.modes[1] == 0 {
            return Err(Error::Config("band must contain at least one nonzero mode".into()));
        }
        if let Domain::PlaneBox { side } = self.domain {
            if !(side > 0.0 && side.is_finite()) {
                return Err(Error::Config(format!("box side must be positive, got {side}")));
            }
        }
        self.initial.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !self.profile.is_zero() {
            if !matches!(self.domain, Domain::PlaneBox { .. }) {
                return Err(Error::Config("a stratification profile is only allowed on the plane box".into()));
            }
            let strat = Stratification { n: self.n, profile: self.profile };
            if let Some(w) = strat.check().map_err(|e| Error::Config(e.to_string()))? {
                warnings.push(w);
            }
        } else {
            self.profile.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(warnings)
    }
}

/// Density perturbation on one of the supported domains.
#[derive(Clone, Debug, PartialEq)]
pub enum StateField {
    Periodic(TorusField),
    Strip(StripFieldX),
}

impl StateField {
    pub fn coeffs(&self) -> &Array2<C64> {
        match self {
            StateField::Periodic(f) => f.coeffs(),
            StateField::Strip(f) => f.coeffs(),
        }
    }

    pub fn as_torus(&self) -> Option<&TorusField> {
        match self {
            StateField::Periodic(f) => Some(f),
            StateField::Strip(_) => None,
        }
    }

    pub fn as_strip(&self) -> Option<&StripFieldX> {
        match self {
            StateField::Strip(f) => Some(f),
            StateField::Periodic(_) => None,
        }
    }
}

/// Running energy bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Ledger {
    pub theta0_hm_sq: f64,
    /// `sup_tau ||theta||_{H^m}^2`.
    pub sup_hm_sq: f64,
    /// `N int ||R1 theta||_{H^m}^2`.
    pub r1_integral: f64,
    /// `N int ||(1+|xi|^2)^{1/2} F u2||_{l^1}`.
    pub u2_integral: f64,
    /// First time at which `sup + N int ||R1 theta||^2 > 4 ||theta0||^2`.
    pub violation: Option<f64>,
}

impl Ledger {
    fn start(first: &Record) -> Self {
        Self { theta0_hm_sq: first.theta_hm_sq, sup_hm_sq: first.theta_hm_sq, ..Self::default() }
    }

    fn advance(&mut self, prev: &Record, next: &Record, n: f64) {
        let dt = next.t - prev.t;
        self.sup_hm_sq = self.sup_hm_sq.max(next.theta_hm_sq);
        self.r1_integral += n * 0.5 * dt * (prev.r1_theta_hm_sq + next.r1_theta_hm_sq);
        self.u2_integral += n * 0.5 * dt * (prev.u2_proxy + next.u2_proxy);
        if self.violation.is_none() && self.bound_ratio() > 1.0 + 1e-12 {
            self.violation = Some(next.t);
        }
    }

    /// `(sup + N int ||R1 theta||^2) / (4 ||theta0||^2)`.
    pub fn bound_ratio(&self) -> f64 {
        if self.theta0_hm_sq == 0.0 {
            return 0.0;
        }
        (self.sup_hm_sq + self.r1_integral) / (4.0 * self.theta0_hm_sq)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub theta: StateField,
    pub ledger: Ledger,
}

/// Per-step diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub t: f64,
    pub nt: f64,
    /// `||theta||_{H^s}` for `s = 0..=m`.
    pub theta_hs: Vec<f64>,
    /// Same for the part with nonzero horizontal frequency.
    pub theta_osc_hs: Vec<f64>,
    pub u_hs: Vec<f64>,
    pub u2_hs: Vec<f64>,
    /// `||grad u2||_{H^{m-1}}`.
    pub grad_u2: f64,
    pub theta_hm_sq: f64,
    pub r1_theta_hm_sq: f64,
    /// `||(1 + |xi|^2)^{1/2} F u2||_{l^1}`.
    pub u2_proxy: f64,
    /// `int theta`.
    pub mean: f64,
    /// `l^1` size of the horizontal means of `u1` and `u2`, bounding their sup.
    pub hmean_u: [f64; 2],
    /// Horizontal-mean coefficients of `theta` (index `n2`, or `q` on the strip).
    pub theta_hmean: Array1<C64>,
    /// Horizontal mean of `(u . grad) theta + N u2`, the integrand of the profile formula.
    pub profile_integrand: Array1<C64>,
    pub max_velocity: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub theta: StateField,
    /// Largest sample of `|theta|` on the collocation grid.
    pub grid_max: f64,
    /// Largest `|u2|` on the walls (strip only).
    pub wall_u2: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    BlowUp { t: f64, last_good: f64 },
    LedgerViolation { t: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub ledger: Ledger,
    pub status: RunStatus,
    pub warnings: Vec<String>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateField {
        &self.snapshots.last().expect("a run keeps at least one snapshot").theta
    }

    pub fn reached_final_time(&self) -> bool {
        !matches!(self.status, RunStatus::BlowUp { .. })
    }

    /// Decay curves of the recorded norms (ids `theta_H{s}`, `theta_osc_H{s}`,
    /// `u_H{s}`, `u2_H{s}`, `grad_u2_H{m-1}`, `R1_theta_H{m}`, `u2_proxy`).
    pub fn curves(&self) -> Result<CurveSet> {
        let m = self.config.regularity as usize;
        let mut ids = Vec::new();
        for name in ["theta", "theta_osc", "u", "u2"] {
            for s in 0..=m {
                ids.push(format!("{name}_H{s}"));
            }
        }
        ids.push(format!("grad_u2_H{}", m.saturating_sub(1)));
        ids.push(format!("R1_theta_H{m}"));
        ids.push("u2_proxy".into());
        let rows = self
            .records
            .iter()
            .map(|r| {
                let mut v = Vec::with_capacity(ids.len());
                v.extend(&r.theta_hs);
                v.extend(&r.theta_osc_hs);
                v.extend(&r.u_hs);
                v.extend(&r.u2_hs);
                v.extend([r.grad_u2, r.r1_theta_hm_sq.sqrt(), r.u2_proxy]);
                (r.t, r.nt, v)
            })
            .collect();
        CurveSet::from_rows(ids, rows)
    }
}

/// `phi_1, phi_2, phi_3` with a series near zero.
pub fn phi123(z: f64) -> [f64; 3] {
    if z.abs() < 1.0 {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            // sum_j z^j / (j + k + 1)!
            let mut term = 1.0;
            for i in 1..=(k + 1) {
                term /= i as f64;
            }
            let mut acc = 0.0;
            for j in 0..30 {
                acc += term;
                term *= z / (j + k + 2) as f64;
            }
            *o = acc;
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - 1.0) / z;
        let p2 = (p1 - 1.0) / z;
        let p3 = (p2 - 0.5) / z;
        [p1, p2, p3]
    }
}

/// Diagonal ETDRK4 weights for one step size.
struct EtdCoefficients {
    h: f64,
    e: Array2<f64>,
    e2: Array2<f64>,
    q: Array2<f64>,
    f1: Array2<f64>,
    f2: Array2<f64>,
    f3: Array2<f64>,
}

impl EtdCoefficients {
    fn new(rate: &Array2<f64>, h: f64) -> Self {
        let shape = rate.dim();
        let mut c = Self {
            h,
            e: Array2::zeros(shape),
            e2: Array2::zeros(shape),
            q: Array2::zeros(shape),
            f1: Array2::zeros(shape),
            f2: Array2::zeros(shape),
            f3: Array2::zeros(shape),
        };
        for (ix, &l) in rate.indexed_iter() {
            let z = l * h;
            let [a1, _, _] = phi123(0.5 * z);
            let [p1, p2, p3] = phi123(z);
            c.e[ix] = z.exp();
            c.e2[ix] = (0.5 * z).exp();
            c.q[ix] = 0.5 * h * a1;
            c.f1[ix] = h * (p1 - 3.0 * p2 + 4.0 * p3);
            c.f2[ix] = h * (p2 - 2.0 * p3);
            c.f3[ix] = h * (4.0 * p3 - p2);
        }
        c
    }
}

/// Per-mode tables shared by diagnostics on every domain.
struct ModeTable {
    damping: Array2<f64>,
    u1: Array2<C64>,
    u2: Array2<f64>,
    sob: Array2<f64>,
    xi_sq: Array2<f64>,
    xi1_sq: Array2<f64>,
    l2w: Array2<f64>,
    center_row: usize,
    mean_weights: Array1<f64>,
}

trait Model: Send + Sync {
    fn table(&self) -> &ModeTable;
    /// `-u . grad theta - u2 sigma`, plus the horizontal mean of `u . grad theta`
    /// and the largest velocity components when requested.
    fn nonlinear(&self, c: &Array2<C64>, transport: bool, aux: Option<&mut Aux>) -> Array2<C64>;
    fn symmetrize(&self, c: &mut Array2<C64>);
    fn spacing(&self) -> [f64; 2];
    fn wrap(&self, c: Array2<C64>) -> StateField;
    fn snapshot_extras(&self, c: &Array2<C64>) -> (f64, Option<f64>);
}

#[derive(Default)]
struct Aux {
    max_u: [f64; 2],
    flux_row: Array1<C64>,
}

struct PeriodicModel {
    grid: TorusGrid,
    points: [usize; 2],
    table: ModeTable,
    k1: Array1<f64>,
    k2: Array1<f64>,
    sigma: Option<Array1<f64>>,
}

impl PeriodicModel {
    fn new(grid: TorusGrid, dealias: bool, profile: &ProfileShape) -> Result<Self> {
        let shape = grid.spectral_shape();
        let mut t = ModeTable {
            damping: Array2::zeros(shape),
            u1: Array2::zeros(shape),
            u2: Array2::zeros(shape),
            sob: Array2::zeros(shape),
            xi_sq: Array2::zeros(shape),
            xi1_sq: Array2::zeros(shape),
            l2w: Array2::from_elem(shape, grid.area()),
            center_row: grid.modes()[0],
            mean_weights: Array1::zeros(shape.1),
        };
        t.mean_weights[grid.modes()[1]] = grid.area();
        let torus = matches!(grid.domain(), PeriodicDomain::Torus);
        for (i, j, n1, n2) in grid.mode_indices() {
            let [a, b] = grid.wavenumber(n1, n2);
            let d = a * a + b * b;
            t.damping[[i, j]] = grid.damping(n1, n2);
            t.sob[[i, j]] = grid.sobolev_sq(n1, n2);
            t.xi_sq[[i, j]] = d;
            t.xi1_sq[[i, j]] = a * a;
            if d > 0.0 {
                t.u1[[i, j]] = C64::new(-a * b / d, 0.0);
                t.u2[[i, j]] = a * a / d;
            } else if torus {
                t.u2[[i, j]] = 1.0;
            }
        }
        let points = if dealias { grid.padded_points() } else { grid.points() };
        let k1 = Array1::from_iter((0..shape.0).map(|i| grid.wavenumber(i as i64 - grid.modes()[0] as i64, 0)[0]));
        let k2 = Array1::from_iter((0..shape.1).map(|j| grid.wavenumber(0, j as i64 - grid.modes()[1] as i64)[1]));
        let sigma = if profile.is_zero() {
            None
        } else {
            let side = grid.side();
            let h = side / points[1] as f64;
            Some(Array1::from_shape_fn(points[1], |j| profile.eval(j as f64 * h, side)))
        };
        Ok(Self { grid, points, table: t, k1, k2, sigma })
    }
}

impl Model for PeriodicModel {
    fn table(&self) -> &ModeTable {
        &self.table
    }

    /// Transport in divergence form `div(u theta)`, so the mean mode of the
    /// transport term vanishes identically.
    fn nonlinear(&self, c: &Array2<C64>, transport: bool, aux: Option<&mut Aux>) -> Array2<C64> {
        let modes = self.grid.modes();
        let u1 = c * &self.table.u1;
        let u2 = c * &self.table.u2;
        let (pu1, pu2) = TorusField::to_physical_pair(&u1, &u2, modes, self.points);
        let mut flux = Array2::zeros(c.dim());
        if transport {
            let (pth, _) = TorusField::to_physical_pair(c, &Array2::zeros(c.dim()), modes, self.points);
            let (f1, f2) = TorusField::from_physical_pair(&(&pu1 * &pth), &(&pu2 * &pth), modes);
            Zip::indexed(&mut flux).and(&f1).and(&f2).for_each(|(i, j), o, &a, &b| {
                *o = C64::new(0.0, self.k1[i]) * a + C64::new(0.0, self.k2[j]) * b;
            });
        }
        let mut total = flux.clone();
        if let Some(sigma) = &self.sigma {
            let mut forcing = pu2.clone();
            for mut row in forcing.rows_mut() {
                row *= sigma;
            }
            total = total + TorusField::from_physical(&forcing, self.grid).into_coeffs();
        }
        if let Some(aux) = aux {
            aux.max_u = [max_abs(&pu1), max_abs(&pu2)];
            aux.flux_row = flux.row(self.table.center_row).to_owned();
        }
        total.mapv_inplace(|v| -v);
        total
    }

    fn symmetrize(&self, c: &mut Array2<C64>) {
        symmetrize(c);
    }

    fn spacing(&self) -> [f64; 2] {
        self.grid.spacing()
    }

    fn wrap(&self, c: Array2<C64>) -> StateField {
        StateField::Periodic(TorusField::from_coeffs(self.grid, c, false).expect("band shape"))
    }

    fn snapshot_extras(&self, c: &Array2<C64>) -> (f64, Option<f64>) {
        let f = TorusField::from_coeffs(self.grid, c.clone(), false).expect("band shape");
        (max_abs(&f.to_physical(self.grid.points())), None)
    }
}

struct StripModel {
    grid: StripGrid,
    points: usize,
    intervals: usize,
    table: ModeTable,
    kp: Array1<f64>,
    half_q: Array1<f64>,
}

impl StripModel {
    fn new(grid: StripGrid, dealias: bool) -> Self {
        let shape = grid.spectral_shape();
        let pm = grid.p_max() as i64;
        let mut t = ModeTable {
            damping: Array2::zeros(shape),
            u1: Array2::zeros(shape),
            u2: Array2::zeros(shape),
            sob: Array2::zeros(shape),
            xi_sq: Array2::zeros(shape),
            xi1_sq: Array2::zeros(shape),
            l2w: Array2::from_elem(shape, 1.0),
            center_row: grid.p_max(),
            mean_weights: Array1::from_shape_fn(shape.1, |q| basis_integral(StripKind::X, q)),
        };
        for i in 0..shape.0 {
            let p = i as i64 - pm;
            for q in 1..shape.1 {
                let [a, b] = grid.frequency(p, q);
                let d = a * a + b * b;
                t.damping[[i, q]] = grid.damping(p, q);
                t.sob[[i, q]] = d;
                t.xi_sq[[i, q]] = d;
                t.xi1_sq[[i, q]] = a * a;
                t.u1[[i, q]] = C64::new(0.0, a * b / d);
                t.u2[[i, q]] = a * a / d;
            }
            t.l2w[[i, 0]] = 0.0;
        }
        let (points, intervals) = if dealias { grid.padded() } else { (grid.points_x1(), grid.intervals()) };
        let kp = Array1::from_shape_fn(shape.0, |i| 2.0 * PI * (i as i64 - pm) as f64);
        let half_q = Array1::from_shape_fn(shape.1, |q| 0.5 * PI * q as f64);
        Self { grid, points, intervals, table: t, kp, half_q }
    }
}

impl Model for StripModel {
    fn table(&self) -> &ModeTable {
        &self.table
    }

    fn nonlinear(&self, c: &Array2<C64>, transport: bool, aux: Option<&mut Aux>) -> Array2<C64> {
        let q = self.grid.q_max();
        let bx = vertical_basis(StripKind::X, q, self.intervals);
        let by = vertical_basis(StripKind::Y, q, self.intervals);
        let ex = bx.eval.t().to_owned();
        let ey = by.eval.t().to_owned();
        let u1 = &self.table.u1 * c;
        let u2 = c * &self.table.u2;
        let mut tx = c.clone();
        let mut ty = c.clone();
        Zip::indexed(&mut tx).for_each(|(i, _), v| *v *= C64::new(0.0, self.kp[i]));
        // d2 maps the X coefficient at (p, q) to the Y coefficient (pi q / 2) at (p, q)
        Zip::indexed(&mut ty).for_each(|(_, j), v| *v *= self.half_q[j]);
        let i_times = |a: Array2<C64>| a.mapv(|v| C64::new(-v.im, v.re));
        let pack1 = cmul_real(&u1, &ey) + i_times(cmul_real(&tx, &ex));
        let pack2 = cmul_real(&u2, &ex) + i_times(cmul_real(&ty, &ey));
        let w1 = horizontal_synthesis(&pack1, self.grid.p_max(), self.points);
        let w2 = horizontal_synthesis(&pack2, self.grid.p_max(), self.points);
        let mut out = if transport {
            let w = Zip::from(&w1).and(&w2).map_collect(|a, b| a.re * a.im + b.re * b.im);
            StripFieldX::project(&w, self.grid).coeffs().clone()
        } else {
            Array2::zeros(c.dim())
        };
        if let Some(aux) = aux {
            aux.max_u =
                [w1.iter().fold(0.0f64, |m, v| m.max(v.re.abs())), w2.iter().fold(0.0f64, |m, v| m.max(v.re.abs()))];
            aux.flux_row = out.row(self.table.center_row).to_owned();
        }
        out.mapv_inplace(|v| -v);
        out
    }

    fn symmetrize(&self, c: &mut Array2<C64>) {
        hermitian_in_p(c);
    }

    fn spacing(&self) -> [f64; 2] {
        [1.0 / self.grid.points_x1() as f64, 2.0 / self.grid.intervals() as f64]
    }

    fn wrap(&self, c: Array2<C64>) -> StateField {
        StateField::Strip(StripFieldX::from_coeffs(self.grid, c).expect("band shape"))
    }

    fn snapshot_extras(&self, c: &Array2<C64>) -> (f64, Option<f64>) {
        let f = StripFieldX::from_coeffs(self.grid, c.clone()).expect("band shape");
        let samples = f.to_physical(self.grid.points_x1(), self.grid.intervals());
        let u2 = StripFieldX::from_coeffs(self.grid, c * &self.table.u2).expect("band shape");
        let w = u2.to_physical(self.grid.points_x1(), self.grid.intervals());
        let last = w.ncols() - 1;
        let wall = w.column(0).iter().chain(w.column(last).iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        (max_abs(&samples), Some(wall))
    }
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// A configured simulation: models, linear rates and the initial state.
pub struct Simulation {
    config: SolverConfig,
    model: Box<dyn Model>,
    rate: Array2<f64>,
    warnings: Vec<String>,
    initial: StateField,
}

impl Simulation {
    pub fn new(config: SolverConfig) -> Result<Self> {
        let warnings = config.validate()?;
        let (model, initial): (Box<dyn Model>, StateField) = match config.domain {
            Domain::Torus | Domain::PlaneBox { .. } => {
                let domain = match config.domain {
                    Domain::PlaneBox { side } => PeriodicDomain::PlaneBox { side },
                    _ => PeriodicDomain::Torus,
                };
                let grid = TorusGrid::rectangular(config.modes, domain);
                let theta = config.initial.torus(grid)?;
                (Box::new(PeriodicModel::new(grid, config.dealias, &config.profile)?), StateField::Periodic(theta))
            }
            Domain::Strip => {
                let grid = StripGrid::new(config.modes[0], config.modes[1])?;
                let theta = config.initial.strip(grid)?;
                (Box::new(StripModel::new(grid, config.dealias)), StateField::Strip(theta))
            }
        };
        let rate = model.table().damping.mapv(|d| -config.n * d);
        Ok(Self { config, model, rate, warnings, initial })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `||theta0||_{H^s}`.
    pub fn initial_norm(&self, s: f64) -> Result<f64> {
        let spec = NormSpec::sobolev(s);
        match &self.initial {
            StateField::Periodic(f) => norm(f, spec),
            StateField::Strip(f) => norm(f, spec),
        }
    }

    pub fn initial_state(&self) -> SimState {
        SimState { t: 0.0, theta: self.initial.clone(), ledger: Ledger::default() }
    }

    /// `-u . grad theta - u2 sigma` for a state on this simulation's band.
    pub fn nonlinear_term(&self, theta: &StateField) -> Result<StateField> {
        self.check_shape(theta)?;
        Ok(self.model.wrap(self.model.nonlinear(theta.coeffs(), true, None)))
    }

    fn check_shape(&self, theta: &StateField) -> Result<()> {
        if theta.coeffs().dim() != self.rate.dim() {
            return Err(Error::Shape("state does not match the simulation band".into()));
        }
        Ok(())
    }

    /// Right-hand side beyond the linear damping. Without transport only the
    /// profile coupling `-u2 sigma` remains.
    fn eval(&self, c: &Array2<C64>, aux: Option<&mut Aux>) -> Array2<C64> {
        if self.config.nonlinear || self.has_profile() || aux.is_some() {
            self.model.nonlinear(c, self.config.nonlinear, aux)
        } else {
            Array2::zeros(c.dim())
        }
    }

    fn has_profile(&self) -> bool {
        !self.config.profile.is_zero()
    }

    /// Largest stable step for the current state under the CFL policy.
    pub fn cfl_dt(&self, state: &SimState) -> f64 {
        let mut aux = Aux::default();
        self.model.nonlinear(state.theta.coeffs(), false, Some(&mut aux));
        self.dt_from_velocity(aux.max_u)
    }

    fn dt_from_velocity(&self, max_u: [f64; 2]) -> f64 {
        match self.config.dt {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Cfl { safety, dt_max } => {
                let [h1, h2] = self.model.spacing();
                let mut dt = dt_max;
                if max_u[0] > 0.0 {
                    dt = dt.min(safety * h1 / max_u[0]);
                }
                if max_u[1] > 0.0 {
                    dt = dt.min(safety * h2 / max_u[1]);
                }
                dt
            }
        }
    }

    /// One ETDRK4 step of size `dt`.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        self.check_shape(&state.theta)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let coef = EtdCoefficients::new(&self.rate, dt);
        let nu = self.eval(state.theta.coeffs(), None);
        let next = self.advance(state.theta.coeffs(), &nu, &coef);
        self.finish_step(state, next, dt)
    }

    fn finish_step(&self, state: &SimState, next: Array2<C64>, dt: f64) -> Result<SimState> {
        if next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::BlowUp { t: state.t + dt, last_good: state.t, reason: "non-finite coefficient".into() });
        }
        Ok(SimState { t: state.t + dt, theta: self.model.wrap(next), ledger: state.ledger })
    }

    fn advance(&self, u: &Array2<C64>, nu: &Array2<C64>, c: &EtdCoefficients) -> Array2<C64> {
        let stage = |base: &Array2<C64>, n: &Array2<C64>| {
            let mut out = base * &c.e2;
            Zip::from(&mut out).and(n).and(&c.q).for_each(|o, &n, &q| *o += n * q);
            out
        };
        let a = stage(u, nu);
        let na = self.eval(&a, None);
        let b = stage(u, &na);
        let nb = self.eval(&b, None);
        let src = nb.mapv(|v| 2.0 * v) - nu;
        let cc = stage(&a, &src);
        let nc = self.eval(&cc, None);
        let mut out = u * &c.e;
        Zip::from(&mut out)
            .and(nu)
            .and(&c.f1)
            .and(&na)
            .and(&nb)
            .and(&c.f2)
            .for_each(|o, &n0, &f1, &n1, &n2, &f2| *o += n0 * f1 + (n1 + n2) * (2.0 * f2));
        Zip::from(&mut out).and(&nc).and(&c.f3).for_each(|o, &n3, &f3| *o += n3 * f3);
        self.model.symmetrize(&mut out);
        out
    }

    fn record(&self, t: f64, c: &Array2<C64>, aux: &Aux) -> Record {
        let tb = self.model.table();
        let m = self.config.regularity as i32;
        let ms = m as usize;
        let mut theta_hs = vec![0.0; ms + 1];
        let mut osc_hs = vec![0.0; ms + 1];
        let mut u_hs = vec![0.0; ms + 1];
        let mut u2_hs = vec![0.0; ms + 1];
        let (mut grad_u2, mut r1, mut proxy) = (0.0, 0.0, 0.0);
        for ((ix, &v), &sob) in c.indexed_iter().zip(tb.sob.iter()) {
            let w = tb.l2w[ix];
            if w == 0.0 {
                continue;
            }
            let a = v.norm_sqr();
            let u1 = tb.u1[ix].norm_sqr() * a;
            let u2 = tb.u2[ix] * tb.u2[ix] * a;
            let base = 1.0 + sob;
            let mut pw = 1.0;
            for s in 0..=ms {
                theta_hs[s] += w * pw * a;
                if ix.0 != tb.center_row {
                    osc_hs[s] += w * pw * a;
                }
                u_hs[s] += w * pw * (u1 + u2);
                u2_hs[s] += w * pw * u2;
                if s < ms {
                    pw *= base;
                }
            }
            let xi2 = tb.xi_sq[ix];
            grad_u2 += w * xi2 * base.powi(m - 1) * u2;
            if xi2 > 0.0 {
                r1 += w * tb.xi1_sq[ix] / xi2 * pw * a;
            }
            proxy += base.sqrt() * tb.u2[ix] * v.norm();
        }
        let row = c.row(tb.center_row);
        let mean = row.iter().zip(&tb.mean_weights).map(|(v, w)| v.re * w).sum();
        let hmean_u = [
            row.iter().zip(tb.u1.row(tb.center_row)).map(|(v, m)| (v * m).norm()).sum(),
            row.iter().zip(tb.u2.row(tb.center_row)).map(|(v, m)| (v * m).norm()).sum(),
        ];
        let n = self.config.n;
        let profile_integrand = Array1::from_shape_fn(row.len(), |j| {
            let flux = aux.flux_row.get(j).copied().unwrap_or(ZERO);
            flux + row[j] * (n * tb.u2[[tb.center_row, j]])
        });
        let sq = |v: Vec<f64>| v.into_iter().map(f64::sqrt).collect::<Vec<_>>();
        Record {
            t,
            nt: n * t,
            theta_hm_sq: theta_hs[ms],
            theta_hs: sq(theta_hs),
            theta_osc_hs: sq(osc_hs),
            u_hs: sq(u_hs),
            u2_hs: sq(u2_hs),
            grad_u2: grad_u2.sqrt(),
            r1_theta_hm_sq: r1,
            u2_proxy: proxy,
            mean,
            hmean_u,
            theta_hmean: row.to_owned(),
            profile_integrand,
            max_velocity: aux.max_u,
        }
    }

    fn snapshot(&self, t: f64, c: &Array2<C64>) -> Snapshot {
        let (grid_max, wall_u2) = self.model.snapshot_extras(c);
        Snapshot { t, theta: self.model.wrap(c.clone()), grid_max, wall_u2 }
    }

    /// Integrates to the final time, recording diagnostics after every step.
    pub fn run(&self) -> Result<Trajectory> {
        let cfg = &self.config;
        let mut c = self.initial.coeffs().clone();
        let mut t = 0.0;
        let mut aux = Aux::default();
        let mut nu = self.eval(&c, Some(&mut aux));
        let first = self.record(0.0, &c, &aux);
        let hm0 = first.theta_hm_sq.sqrt();
        let mut ledger = Ledger::start(&first);
        let mut records = vec![first];
        let mut snapshots = vec![self.snapshot(0.0, &c)];
        let mut status = RunStatus::Completed;
        let mut steps = 0usize;
        let mut cached: Option<EtdCoefficients> = None;
        let end = cfg.final_time;
        while t < end * (1.0 - 1e-14) {
            let mut dt = self.dt_from_velocity(aux.max_u).min(end - t);
            if end - t - dt < 1e-9 * dt {
                dt = end - t;
            }
            let coef = match cached.take() {
                Some(cf) if cf.h == dt => cf,
                _ => EtdCoefficients::new(&self.rate, dt),
            };
            let next = self.advance(&c, &nu, &coef);
            cached = Some(coef);
            let t_next = if dt == end - t { end } else { t + dt };
            let finite = next.iter().all(|v| v.re.is_finite() && v.im.is_finite());
            if !finite {
                status = RunStatus::BlowUp { t: t_next, last_good: t };
                break;
            }
            c = next;
            t = t_next;
            steps += 1;
            aux = Aux::default();
            nu = self.eval(&c, Some(&mut aux));
            let rec = self.record(t, &c, &aux);
            if hm0 > 0.0 && rec.theta_hm_sq.sqrt() > 1e3 * hm0 {
                status = RunStatus::BlowUp { t, last_good: records.last().map_or(0.0, |r| r.t) };
                records.push(rec);
                break;
            }
            ledger.advance(records.last().expect("non-empty"), &rec, cfg.n);
            records.push(rec);
            if cfg.snapshot_every > 0 && steps.is_multiple_of(cfg.snapshot_every) && t < end {
                snapshots.push(self.snapshot(t, &c));
            }
        }
        if snapshots.last().map(|s| s.t) != Some(t) {
            snapshots.push(self.snapshot(t, &c));
        }
        if let (RunStatus::Completed, Some(tv)) = (status, ledger.violation) {
            status = RunStatus::LedgerViolation { t: tv };
        }
        Ok(Trajectory {
            config: cfg.clone(),
            records,
            snapshots,
            ledger,
            status,
            warnings: self.warnings.clone(),
            steps,
        })
    }
}

/// Convenience wrapper: configure and integrate.
pub fn run(config: SolverConfig) -> Result<Trajectory> {
    Simulation::new(config)?.run()
}
