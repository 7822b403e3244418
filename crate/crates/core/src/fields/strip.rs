//! Fields on the strip `T x [-1, 1]` expanded in parity-adapted vertical bases.
//!
//! X fields use `b_q` (vanishing traces of even vertical derivatives), Y fields use
//! `c_q` (vanishing traces of odd vertical derivatives).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::marker::PhantomData;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rustfft::FftDirection;

use super::torus::{dealiased_points, symmetrize};
use super::{ModeInfo, SpectralField};
use crate::error::{Error, Result};
use crate::fft::fft_cols;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StripKind {
    X,
    Y,
}

/// Type-level tag for the vertical basis of a strip field.
pub trait Parity: Copy + Debug + Default + PartialEq + Send + Sync + 'static {
    const KIND: StripKind;

    /// Lowest vertical index carried by the basis.
    const MIN_Q: usize;

    fn basis(q: usize, x2: f64) -> f64;

    /// `int_{-1}^{1} basis_q^2`.
    fn norm_sq(q: usize) -> f64;
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct XParity;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct YParity;

impl Parity for XParity {
    const KIND: StripKind = StripKind::X;
    const MIN_Q: usize = 1;

    fn basis(q: usize, x2: f64) -> f64 {
        if q == 0 {
            return 0.0;
        }
        let a = 0.5 * PI * q as f64 * x2;
        if q.is_multiple_of(2) {
            a.sin()
        } else {
            a.cos()
        }
    }

    fn norm_sq(q: usize) -> f64 {
        if q == 0 {
            0.0
        } else {
            1.0
        }
    }
}

impl Parity for YParity {
    const KIND: StripKind = StripKind::Y;
    const MIN_Q: usize = 0;

    fn basis(q: usize, x2: f64) -> f64 {
        let a = 0.5 * PI * q as f64 * x2;
        if q.is_multiple_of(2) {
            a.cos()
        } else {
            -a.sin()
        }
    }

    fn norm_sq(q: usize) -> f64 {
        if q == 0 {
            2.0
        } else {
            1.0
        }
    }
}

/// Output parity of a pointwise product.
pub trait ParityProduct<B: Parity>: Parity {
    type Output: Parity;
}

impl ParityProduct<XParity> for XParity {
    type Output = YParity;
}
impl ParityProduct<YParity> for XParity {
    type Output = XParity;
}
impl ParityProduct<XParity> for YParity {
    type Output = XParity;
}
impl ParityProduct<YParity> for YParity {
    type Output = YParity;
}

/// Parity after one vertical derivative, with the sign of the coefficient map
/// `F_out(d2 f)(p, q) = SIGN * (pi q / 2) * F_in f(p, q)`.
pub trait VerticalDerivative: Parity {
    type Output: Parity;
    const SIGN: f64;
}

impl VerticalDerivative for XParity {
    type Output = YParity;
    const SIGN: f64 = 1.0;
}

impl VerticalDerivative for YParity {
    type Output = XParity;
    const SIGN: f64 = -1.0;
}

pub type StripFieldX = StripField<XParity>;
pub type StripFieldY = StripField<YParity>;

/// Truncation `|p| <= P`, `q <= Q` together with the sampling grid:
/// `points_x1` uniform points in `x1` and `intervals + 1` uniform nodes in `x2`
/// including both walls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripGrid {
    p_max: usize,
    q_max: usize,
    points_x1: usize,
    intervals: usize,
    parity_tolerance: f64,
}

fn dealiased_intervals(q_max: usize) -> usize {
    (3 * q_max).div_ceil(2) + 1
}

impl StripGrid {
    /// Grid sized for alias-free products.
    pub fn new(p_max: usize, q_max: usize) -> Result<Self> {
        Self::with_sampling(p_max, q_max, dealiased_points(p_max), dealiased_intervals(q_max))
    }

    pub fn with_sampling(p_max: usize, q_max: usize, points_x1: usize, intervals: usize) -> Result<Self> {
        if q_max == 0 {
            return Err(Error::Parameter("strip band needs at least one vertical mode".into()));
        }
        if points_x1 < 2 * p_max + 1 {
            return Err(Error::Parameter(format!("{points_x1} horizontal points cannot resolve {p_max} modes")));
        }
        if intervals < q_max + 1 {
            return Err(Error::Parameter(format!(
                "{intervals} vertical intervals cannot resolve {q_max} modes (need >= {})",
                q_max + 1
            )));
        }
        Ok(Self { p_max, q_max, points_x1, intervals, parity_tolerance: 1e-8 })
    }

    /// Relative tolerance used by the parity check of [`StripField::forward`].
    pub fn with_parity_tolerance(mut self, tol: f64) -> Self {
        self.parity_tolerance = tol;
        self
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn points_x1(&self) -> usize {
        self.points_x1
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn parity_tolerance(&self) -> f64 {
        self.parity_tolerance
    }

    /// Sample array shape `(points_x1, intervals + 1)`.
    pub fn sample_shape(&self) -> (usize, usize) {
        (self.points_x1, self.intervals + 1)
    }

    pub fn spectral_shape(&self) -> (usize, usize) {
        (2 * self.p_max + 1, self.q_max + 1)
    }

    pub fn nodes_x2(&self) -> Vec<f64> {
        nodes(self.intervals)
    }

    pub fn nodes_x1(&self) -> Vec<f64> {
        (0..self.points_x1).map(|i| i as f64 / self.points_x1 as f64).collect()
    }

    pub fn padded(&self) -> (usize, usize) {
        (self.points_x1.max(dealiased_points(self.p_max)), self.intervals.max(dealiased_intervals(self.q_max)))
    }

    /// Derivative frequencies `(2 pi p, pi q / 2)`.
    pub fn frequency(&self, p: i64, q: usize) -> [f64; 2] {
        [2.0 * PI * p as f64, 0.5 * PI * q as f64]
    }

    /// `(2 pi p)^2 / D` with `D = (2 pi p)^2 + (pi q / 2)^2`; zero for `p = 0`.
    pub fn damping(&self, p: i64, q: usize) -> f64 {
        let [a, b] = self.frequency(p, q);
        let d = a * a + b * b;
        if p == 0 || d == 0.0 {
            0.0
        } else {
            a * a / d
        }
    }

    pub fn index(&self, p: i64, q: usize) -> Option<(usize, usize)> {
        (p.unsigned_abs() as usize <= self.p_max && q <= self.q_max).then(|| ((p + self.p_max as i64) as usize, q))
    }
}

fn nodes(intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|j| -1.0 + 2.0 * j as f64 / intervals as f64).collect()
}

/// Evaluation and projection matrices of one vertical basis on a node set.
#[derive(Debug)]
pub(crate) struct VerticalBasis {
    /// `(intervals + 1) x (Q + 1)`: basis values at nodes.
    pub eval: Array2<f64>,
    /// `(Q + 1) x (intervals + 1)`: trapezoid projection onto each basis function.
    pub proj: Array2<f64>,
}

impl VerticalBasis {
    fn build(kind: StripKind, q_max: usize, intervals: usize) -> Self {
        let x = nodes(intervals);
        let h = 2.0 / intervals as f64;
        type BasisFns = (fn(usize, f64) -> f64, fn(usize) -> f64);
        let (basis, norm): BasisFns = match kind {
            StripKind::X => (XParity::basis, XParity::norm_sq),
            StripKind::Y => (YParity::basis, YParity::norm_sq),
        };
        let eval = Array2::from_shape_fn((intervals + 1, q_max + 1), |(j, q)| basis(q, x[j]));
        let proj = Array2::from_shape_fn((q_max + 1, intervals + 1), |(q, j)| {
            let n = norm(q);
            if n == 0.0 {
                return 0.0;
            }
            let w = if j == 0 || j == intervals { 0.5 * h } else { h };
            w * eval[[j, q]] / n
        });
        Self { eval, proj }
    }
}

pub(crate) fn vertical_basis(kind: StripKind, q_max: usize, intervals: usize) -> Arc<VerticalBasis> {
    type Cache = Mutex<HashMap<(StripKind, usize, usize), Arc<VerticalBasis>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry((kind, q_max, intervals))
        .or_insert_with(|| Arc::new(VerticalBasis::build(kind, q_max, intervals)))
        .clone()
}

/// Complex matrix times real matrix.
pub(crate) fn cmul_real(a: &Array2<Complex64>, b: &Array2<f64>) -> Array2<Complex64> {
    let re = a.mapv(|c| c.re).dot(b);
    let im = a.mapv(|c| c.im).dot(b);
    ndarray::Zip::from(&re).and(&im).map_collect(|&r, &i| Complex64::new(r, i))
}

/// Real field on the strip stored as coefficients of `exp(2 pi i p x1) basis_q(x2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StripField<P: Parity> {
    grid: StripGrid,
    coeffs: Array2<Complex64>,
    parity: PhantomData<P>,
}

impl<P: Parity> StripField<P> {
    pub fn zeros(grid: StripGrid) -> Self {
        Self { coeffs: Array2::zeros(grid.spectral_shape()), grid, parity: PhantomData }
    }

    pub fn from_coeffs(grid: StripGrid, mut coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.dim() != grid.spectral_shape() {
            return Err(Error::Shape(format!(
                "coefficients {:?} do not match band {:?}",
                coeffs.dim(),
                grid.spectral_shape()
            )));
        }
        if P::MIN_Q == 1 {
            coeffs.column_mut(0).fill(ZERO);
        }
        Ok(Self { grid, coeffs, parity: PhantomData })
    }

    pub fn kind(&self) -> StripKind {
        P::KIND
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn coeff(&self, p: i64, q: usize) -> Complex64 {
        self.grid.index(p, q).map_or(ZERO, |ix| self.coeffs[ix])
    }

    pub fn set_coeff(&mut self, p: i64, q: usize, value: Complex64) -> Result<()> {
        if q < P::MIN_Q {
            return Err(Error::Parity(format!("q = {q} is not carried by {:?} fields", P::KIND)));
        }
        let ix = self.grid.index(p, q).ok_or_else(|| Error::Shape(format!("mode ({p}, {q}) outside the band")))?;
        self.coeffs[ix] = value;
        Ok(())
    }

    /// Sets `(p, q)` and the conjugate partner `(-p, q)`.
    pub fn set_mode_real(&mut self, p: i64, q: usize, value: Complex64) -> Result<()> {
        if p == 0 {
            return self.set_coeff(0, q, Complex64::new(value.re, 0.0));
        }
        self.set_coeff(p, q, value)?;
        self.set_coeff(-p, q, value.conj())
    }

    /// Samples on the grid, checked against the parity of the target space.
    ///
    /// X samples must vanish on both walls; for both spaces the truncated
    /// expansion must reproduce the samples to the grid's parity tolerance.
    pub fn forward(samples: &Array2<f64>, grid: StripGrid) -> Result<Self> {
        if samples.dim() != grid.sample_shape() {
            return Err(Error::Shape(format!(
                "samples {:?} do not match grid {:?}",
                samples.dim(),
                grid.sample_shape()
            )));
        }
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(Self::zeros(grid));
        }
        let tol = grid.parity_tolerance * scale;
        if P::KIND == StripKind::X {
            let last = samples.ncols() - 1;
            let wall = samples.column(0).iter().chain(samples.column(last).iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            if wall > tol {
                return Err(Error::Parity(format!("X samples have wall trace {wall:.3e} (scale {scale:.3e})")));
            }
        }
        let field = Self::project(samples, grid);
        let back = field.to_physical(grid.points_x1, grid.intervals);
        let residual = (&back - samples).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual > tol {
            return Err(Error::Parity(format!(
                "samples are not representable in the {:?} basis: residual {residual:.3e} (scale {scale:.3e})",
                P::KIND
            )));
        }
        Ok(field)
    }

    /// Unchecked projection of samples on any `(points, intervals + 1)` grid
    /// fine enough for the band.
    pub fn project(samples: &Array2<f64>, grid: StripGrid) -> Self {
        let (m1, nv) = samples.dim();
        let mut work = samples.mapv(|v| Complex64::new(v, 0.0));
        fft_cols(&mut work, FftDirection::Forward);
        let pm = grid.p_max as i64;
        let scale = 1.0 / m1 as f64;
        let rows = Array2::from_shape_fn((2 * grid.p_max + 1, nv), |(i, j)| {
            let p = i as i64 - pm;
            if p.unsigned_abs() as usize * 2 >= m1 {
                ZERO
            } else {
                work[[p.rem_euclid(m1 as i64) as usize, j]] * scale
            }
        });
        let basis = vertical_basis(P::KIND, grid.q_max, nv - 1);
        let mut coeffs = cmul_real(&rows, &basis.proj.t().to_owned());
        hermitian_in_p(&mut coeffs);
        if P::MIN_Q == 1 {
            coeffs.column_mut(0).fill(ZERO);
        }
        Self { grid, coeffs, parity: PhantomData }
    }

    pub fn inverse(&self) -> Result<Array2<f64>> {
        let defect = self.hermitian_defect();
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Consistency(format!("Hermitian symmetry defect {defect:.3e}")));
        }
        Ok(self.to_physical(self.grid.points_x1, self.grid.intervals))
    }

    /// Vertical synthesis: rows indexed by `p`, columns by node.
    pub(crate) fn vertical_synthesis(&self, intervals: usize) -> Array2<Complex64> {
        let basis = vertical_basis(P::KIND, self.grid.q_max, intervals);
        cmul_real(&self.coeffs, &basis.eval.t().to_owned())
    }

    pub fn to_physical(&self, points: usize, intervals: usize) -> Array2<f64> {
        let rows = self.vertical_synthesis(intervals);
        horizontal_synthesis(&rows, self.grid.p_max, points).mapv(|c| c.re)
    }

    /// Pointwise evaluation by direct summation.
    pub fn evaluate(&self, x1: f64, x2: f64) -> f64 {
        let pm = self.grid.p_max as i64;
        let mut acc = 0.0;
        for p in -pm..=pm {
            let e = Complex64::from_polar(1.0, 2.0 * PI * p as f64 * x1);
            for q in P::MIN_Q..=self.grid.q_max {
                acc += (self.coeff(p, q) * e).re * P::basis(q, x2);
            }
        }
        acc
    }

    /// `max_x1 |f(x1, x2)|` over the horizontal grid.
    pub fn trace_max(&self, x2: f64) -> f64 {
        self.grid.nodes_x1().iter().fold(0.0f64, |m, &x1| m.max(self.evaluate(x1, x2).abs()))
    }

    pub fn hermitian_defect(&self) -> f64 {
        let r = self.coeffs.nrows();
        let mut worst = 0.0f64;
        for i in 0..r {
            for q in 0..self.coeffs.ncols() {
                worst = worst.max((self.coeffs[[i, q]] - self.coeffs[[r - 1 - i, q]].conj()).norm());
            }
        }
        worst
    }

    /// Alias-free product projected onto the parity of the result.
    pub fn product<B: Parity>(&self, other: &StripField<B>) -> Result<StripField<P::Output>>
    where
        P: ParityProduct<B>,
    {
        if (self.grid.p_max, self.grid.q_max) != (other.grid.p_max, other.grid.q_max) {
            return Err(Error::Shape("strip fields have different bands".into()));
        }
        let (m1, mv) = self.grid.padded();
        let a = self.to_physical(m1, mv);
        let b = other.to_physical(m1, mv);
        Ok(StripField::<P::Output>::project(&(a * b), self.grid))
    }

    /// `d/dx1`, parity preserving.
    pub fn d1(&self) -> Self {
        let pm = self.grid.p_max as i64;
        let mut out = self.clone();
        for (i, mut row) in out.coeffs.axis_iter_mut(Axis(0)).enumerate() {
            let k = Complex64::new(0.0, 2.0 * PI * (i as i64 - pm) as f64);
            row.mapv_inplace(|c| c * k);
        }
        out
    }

    /// `d/dx2`, switching between the X and Y bases.
    pub fn d2(&self) -> StripField<P::Output>
    where
        P: VerticalDerivative,
    {
        let mut coeffs = self.coeffs.clone();
        for (q, mut col) in coeffs.axis_iter_mut(Axis(1)).enumerate() {
            let k = P::SIGN * 0.5 * PI * q as f64;
            col.mapv_inplace(|c| c * k);
        }
        StripField::<P::Output>::from_coeffs(self.grid, coeffs).expect("same band")
    }

    /// Coefficients of the horizontal average `int f dx1` as a function of `q`.
    pub fn horizontal_mean(&self) -> Array1<Complex64> {
        self.coeffs.row(self.grid.p_max).to_owned()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.mapv_inplace(|c| c * factor);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.coeffs.dim() != other.coeffs.dim() {
            return Err(Error::Shape("strip fields have different bands".into()));
        }
        Ok(Self { grid: self.grid, coeffs: &self.coeffs + &other.coeffs, parity: PhantomData })
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for ((_, q), c) in self.coeffs.indexed_iter() {
            acc += P::norm_sq(q) * c.norm_sqr();
        }
        acc
    }

    /// `int_Omega f` using `int_{-1}^{1} basis_q`.
    pub fn integral(&self) -> f64 {
        let mean = self.horizontal_mean();
        (0..=self.grid.q_max).map(|q| mean[q].re * basis_integral(P::KIND, q)).sum()
    }
}

/// `int_{-1}^{1}` of the `q`-th basis function.
pub fn basis_integral(kind: StripKind, q: usize) -> f64 {
    match kind {
        StripKind::X if q % 2 == 1 => {
            let sign = if (q / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
            4.0 / (PI * q as f64) * sign
        }
        StripKind::Y if q == 0 => 2.0,
        _ => 0.0,
    }
}

impl<P: Parity> SpectralField for StripField<P> {
    fn for_each_mode(&self, mut f: impl FnMut(&ModeInfo, Complex64)) {
        let pm = self.grid.p_max as i64;
        for p in -pm..=pm {
            for q in P::MIN_Q..=self.grid.q_max {
                f(&mode_info::<P>(&self.grid, p, q), self.coeff(p, q));
            }
        }
    }

    fn map_modes(&self, f: impl Fn(&ModeInfo, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        let pm = self.grid.p_max as i64;
        for p in -pm..=pm {
            for q in P::MIN_Q..=self.grid.q_max {
                out.coeffs[[(p + pm) as usize, q]] = f(&mode_info::<P>(&self.grid, p, q), self.coeff(p, q));
            }
        }
        out
    }
}

fn mode_info<P: Parity>(grid: &StripGrid, p: i64, q: usize) -> ModeInfo {
    let xi = grid.frequency(p, q);
    ModeInfo {
        index: [p, q as i64],
        xi,
        sobolev_sq: xi[0] * xi[0] + xi[1] * xi[1],
        l2_weight: P::norm_sq(q),
        damping: grid.damping(p, q),
    }
}

/// Inverse horizontal transform of rows indexed by `p` to `points` samples.
pub(crate) fn horizontal_synthesis(rows: &Array2<Complex64>, p_max: usize, points: usize) -> Array2<Complex64> {
    let nv = rows.ncols();
    let mut work = Array2::zeros((points, nv));
    for (i, row) in rows.axis_iter(Axis(0)).enumerate() {
        let p = i as i64 - p_max as i64;
        work.row_mut(p.rem_euclid(points as i64) as usize).assign(&row);
    }
    fft_cols(&mut work, FftDirection::Inverse);
    work
}

pub(crate) fn hermitian_in_p(coeffs: &mut Array2<Complex64>) {
    // rows p and -p are conjugate; reuse the 2-D symmetrizer column by column
    for mut col in coeffs.axis_iter_mut(Axis(1)) {
        let mut tmp = col.to_owned().insert_axis(Axis(1));
        symmetrize(&mut tmp);
        col.assign(&tmp.column(0));
    }
}
