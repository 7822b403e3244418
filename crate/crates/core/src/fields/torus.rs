//! Periodic fields on the unit torus and on a square box of side `L`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;
use rustfft::FftDirection;

use super::{ModeInfo, SpectralField};
use crate::error::{Error, Result};
use crate::fft::{fft2, fft_friendly};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Geometry of a doubly periodic domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PeriodicDomain {
    /// `[0,1)^2`, Sobolev weights use integer wavenumbers.
    Torus,
    /// `[0,L)^2` standing in for the plane; weights use `2 pi n / L`.
    PlaneBox { side: f64 },
}

impl PeriodicDomain {
    pub fn side(&self) -> f64 {
        match self {
            PeriodicDomain::Torus => 1.0,
            PeriodicDomain::PlaneBox { side } => *side,
        }
    }
}

/// Smallest FFT-friendly point count that multiplies two `K`-band fields
/// without aliasing into the retained band.
pub fn dealiased_points(modes: usize) -> usize {
    fft_friendly((3 * (2 * modes + 1)).div_ceil(2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    modes: [usize; 2],
    points: [usize; 2],
    domain: PeriodicDomain,
}

impl TorusGrid {
    /// Square torus grid with `|n_i| <= modes` and `points` collocation points per axis.
    pub fn new(modes: usize, points: usize) -> Result<Self> {
        Self::with_domain([modes; 2], [points; 2], PeriodicDomain::Torus)
    }

    /// Square torus grid sized for alias-free products.
    pub fn dealiased(modes: usize) -> Self {
        Self::rectangular([modes; 2], PeriodicDomain::Torus)
    }

    /// Alias-free grid with independent band limits per axis.
    pub fn rectangular(modes: [usize; 2], domain: PeriodicDomain) -> Self {
        let points = [dealiased_points(modes[0]), dealiased_points(modes[1])];
        Self::with_domain(modes, points, domain).expect("dealiased sizes are valid")
    }

    pub fn with_domain(modes: [usize; 2], points: [usize; 2], domain: PeriodicDomain) -> Result<Self> {
        for axis in 0..2 {
            if points[axis] < 2 * modes[axis] + 1 {
                return Err(Error::Parameter(format!(
                    "axis {axis}: {} points cannot resolve {} modes (need >= {})",
                    points[axis],
                    modes[axis],
                    2 * modes[axis] + 1
                )));
            }
        }
        if let PeriodicDomain::PlaneBox { side } = domain {
            if !(side.is_finite() && side > 0.0) {
                return Err(Error::Parameter(format!("box side must be positive, got {side}")));
            }
        }
        Ok(Self { modes, points, domain })
    }

    pub fn modes(&self) -> [usize; 2] {
        self.modes
    }

    pub fn points(&self) -> [usize; 2] {
        self.points
    }

    pub fn domain(&self) -> PeriodicDomain {
        self.domain
    }

    pub fn side(&self) -> f64 {
        self.domain.side()
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }

    pub fn spacing(&self) -> [f64; 2] {
        [self.side() / self.points[0] as f64, self.side() / self.points[1] as f64]
    }

    /// Shape of the coefficient array, `(2 K1 + 1, 2 K2 + 1)`.
    pub fn spectral_shape(&self) -> (usize, usize) {
        (2 * self.modes[0] + 1, 2 * self.modes[1] + 1)
    }

    /// Point counts used for alias-free products.
    pub fn padded_points(&self) -> [usize; 2] {
        [self.points[0].max(dealiased_points(self.modes[0])), self.points[1].max(dealiased_points(self.modes[1]))]
    }

    pub fn supports_dealiasing(&self) -> bool {
        self.padded_points() == self.points
    }

    /// Derivative frequencies `2 pi n / L`.
    pub fn wavenumber(&self, n1: i64, n2: i64) -> [f64; 2] {
        let k = 2.0 * PI / self.side();
        [k * n1 as f64, k * n2 as f64]
    }

    /// Squared frequency in the Sobolev weight.
    pub fn sobolev_sq(&self, n1: i64, n2: i64) -> f64 {
        match self.domain {
            PeriodicDomain::Torus => (n1 * n1 + n2 * n2) as f64,
            PeriodicDomain::PlaneBox { .. } => {
                let [a, b] = self.wavenumber(n1, n2);
                a * a + b * b
            }
        }
    }

    /// Linear damping per unit `N`: `xi1^2/|xi|^2`; the torus mean decays at rate one,
    /// the box mean does not decay.
    pub fn damping(&self, n1: i64, n2: i64) -> f64 {
        if n1 == 0 && n2 == 0 {
            return match self.domain {
                PeriodicDomain::Torus => 1.0,
                PeriodicDomain::PlaneBox { .. } => 0.0,
            };
        }
        let a = (n1 * n1) as f64;
        a / (a + (n2 * n2) as f64)
    }

    pub fn mode_info(&self, n1: i64, n2: i64) -> ModeInfo {
        ModeInfo {
            index: [n1, n2],
            xi: self.wavenumber(n1, n2),
            sobolev_sq: self.sobolev_sq(n1, n2),
            l2_weight: self.area(),
            damping: self.damping(n1, n2),
        }
    }

    /// Array position of mode `(n1, n2)`, if inside the band.
    pub fn index(&self, n1: i64, n2: i64) -> Option<(usize, usize)> {
        let [k1, k2] = [self.modes[0] as i64, self.modes[1] as i64];
        (n1.abs() <= k1 && n2.abs() <= k2).then(|| ((n1 + k1) as usize, (n2 + k2) as usize))
    }

    /// Iterator over `(row, col, n1, n2)`.
    pub fn mode_indices(&self) -> impl Iterator<Item = (usize, usize, i64, i64)> + '_ {
        let [k1, k2] = [self.modes[0] as i64, self.modes[1] as i64];
        (-k1..=k1).flat_map(move |n1| (-k2..=k2).map(move |n2| ((n1 + k1) as usize, (n2 + k2) as usize, n1, n2)))
    }

    /// Same domain and points rule with a different band.
    pub fn with_modes(&self, modes: [usize; 2]) -> Self {
        Self::rectangular(modes, self.domain)
    }
}

/// Real scalar field stored through its Fourier coefficients
/// `f(x) = sum_n c_n exp(i xi_n . x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    coeffs: Array2<Complex64>,
    real: bool,
}

impl TorusField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { coeffs: Array2::zeros(grid.spectral_shape()), grid, real: true }
    }

    /// Wraps a coefficient array; with `real = true` Hermitian symmetry is checked.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Array2<Complex64>, real: bool) -> Result<Self> {
        if coeffs.dim() != grid.spectral_shape() {
            return Err(Error::Shape(format!(
                "coefficients {:?} do not match band {:?}",
                coeffs.dim(),
                grid.spectral_shape()
            )));
        }
        let field = Self { grid, coeffs, real };
        if real {
            field.check_hermitian()?;
        }
        Ok(field)
    }

    /// Samples a function of `(x1, x2)` on the collocation grid and transforms it.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let [m1, m2] = grid.points();
        let [h1, h2] = grid.spacing();
        let samples = Array2::from_shape_fn((m1, m2), |(i, j)| f(i as f64 * h1, j as f64 * h2));
        Self::from_physical(&samples, grid)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient of mode `(n1, n2)`; zero outside the band.
    pub fn coeff(&self, n1: i64, n2: i64) -> Complex64 {
        self.grid.index(n1, n2).map_or(ZERO, |ix| self.coeffs[ix])
    }

    pub fn set_coeff(&mut self, n1: i64, n2: i64, value: Complex64) -> Result<()> {
        let ix = self.grid.index(n1, n2).ok_or_else(|| Error::Shape(format!("mode ({n1}, {n2}) outside the band")))?;
        self.coeffs[ix] = value;
        Ok(())
    }

    /// Sets mode `n` and its conjugate partner `-n`, keeping the field real.
    pub fn set_mode_real(&mut self, n1: i64, n2: i64, value: Complex64) -> Result<()> {
        if n1 == 0 && n2 == 0 {
            return self.set_coeff(0, 0, Complex64::new(value.re, 0.0));
        }
        self.set_coeff(n1, n2, value)?;
        self.set_coeff(-n1, -n2, value.conj())
    }

    /// `max_n |c_n - conj(c_{-n})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let (r, c) = self.coeffs.dim();
        let mut worst = 0.0f64;
        for i in 0..r {
            for j in 0..c {
                let d = self.coeffs[[i, j]] - self.coeffs[[r - 1 - i, c - 1 - j]].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let defect = self.hermitian_defect();
        if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Consistency(format!(
                "Hermitian symmetry defect {defect:.3e} (coefficient scale {scale:.3e})"
            )));
        }
        Ok(())
    }

    /// Forward transform of samples on the grid's own collocation points.
    pub fn forward(samples: &Array2<f64>, grid: TorusGrid) -> Result<Self> {
        let [m1, m2] = grid.points();
        if samples.dim() != (m1, m2) {
            return Err(Error::Shape(format!("samples {:?} do not match grid points ({m1}, {m2})", samples.dim())));
        }
        Ok(Self::from_physical(samples, grid))
    }

    /// Projects samples on any uniform grid with at least `2K+1` points per
    /// axis onto the band of `grid`.
    pub fn from_physical(samples: &Array2<f64>, grid: TorusGrid) -> Self {
        let (m1, m2) = samples.dim();
        let mut work = samples.mapv(|v| Complex64::new(v, 0.0));
        fft2(&mut work, FftDirection::Forward);
        let scale = 1.0 / (m1 * m2) as f64;
        let mut coeffs = gather(&work, grid.modes(), scale);
        symmetrize(&mut coeffs);
        Self { grid, coeffs, real: true }
    }

    /// Inverse transform onto the grid's collocation points.
    pub fn inverse(&self) -> Result<Array2<f64>> {
        self.check_hermitian()?;
        Ok(self.to_physical(self.grid.points()))
    }

    /// Evaluates the (real part of the) series on a uniform grid with the given point counts.
    pub fn to_physical(&self, points: [usize; 2]) -> Array2<f64> {
        let mut work = scatter(&self.coeffs, self.grid.modes(), points);
        fft2(&mut work, FftDirection::Inverse);
        work.mapv(|c| c.re)
    }

    /// Evaluates two real fields with a single complex transform.
    pub(crate) fn to_physical_pair(
        a: &Array2<Complex64>,
        b: &Array2<Complex64>,
        modes: [usize; 2],
        points: [usize; 2],
    ) -> (Array2<f64>, Array2<f64>) {
        let packed = a + &b.mapv(|c| Complex64::new(-c.im, c.re));
        let mut work = scatter(&packed, modes, points);
        fft2(&mut work, FftDirection::Inverse);
        (work.mapv(|c| c.re), work.mapv(|c| c.im))
    }

    /// Projects two real sample arrays with a single complex transform.
    pub(crate) fn from_physical_pair(
        a: &Array2<f64>,
        b: &Array2<f64>,
        modes: [usize; 2],
    ) -> (Array2<Complex64>, Array2<Complex64>) {
        let (m1, m2) = a.dim();
        let mut work = Zip::from(a).and(b).map_collect(|&x, &y| Complex64::new(x, y));
        fft2(&mut work, FftDirection::Forward);
        let packed = gather(&work, modes, 1.0 / (m1 * m2) as f64);
        let (r, c) = packed.dim();
        let mut fa = Array2::zeros((r, c));
        let mut fb = Array2::zeros((r, c));
        for ((i, j), &v) in packed.indexed_iter() {
            let w = packed[[r - 1 - i, c - 1 - j]].conj();
            fa[[i, j]] = 0.5 * (v + w);
            fb[[i, j]] = Complex64::new(0.0, -0.5) * (v - w);
        }
        (fa, fb)
    }

    /// Alias-free product truncated to the common band.
    pub fn product(&self, other: &TorusField) -> Result<TorusField> {
        self.product_with(other, true)
    }

    /// Product evaluated on the padded grid (`dealias`) or on the base grid.
    pub fn product_with(&self, other: &TorusField, dealias: bool) -> Result<TorusField> {
        self.same_band(other)?;
        let points = if dealias { self.grid.padded_points() } else { self.grid.points() };
        let (a, b) = Self::to_physical_pair(&self.coeffs, &other.coeffs, self.grid.modes(), points);
        Ok(Self::from_physical(&(a * b), self.grid))
    }

    /// Exact product keeping every mode up to twice the band.
    pub fn product_full(&self, other: &TorusField) -> Result<TorusField> {
        self.same_band(other)?;
        let [k1, k2] = self.grid.modes();
        let wide = self.grid.with_modes([2 * k1, 2 * k2]);
        self.resample(wide).product(&other.resample(wide))
    }

    fn same_band(&self, other: &TorusField) -> Result<()> {
        if self.grid.modes() != other.grid.modes() || self.grid.domain() != other.grid.domain() {
            return Err(Error::Shape("fields live on different bands or domains".into()));
        }
        Ok(())
    }

    /// Copies the coefficients into another band, truncating or zero-padding.
    pub fn resample(&self, grid: TorusGrid) -> TorusField {
        let mut out = TorusField::zeros(grid);
        for (i, j, n1, n2) in grid.mode_indices() {
            out.coeffs[[i, j]] = self.coeff(n1, n2);
        }
        out.real = self.real;
        out
    }

    /// `int f` over the domain.
    pub fn mean_integral(&self) -> f64 {
        self.coeff(0, 0).re * self.grid.area()
    }

    /// Coefficients of the horizontal mean `int f dx1 / L` as a function of `x2`, indexed by `n2`.
    pub fn horizontal_mean(&self) -> Array1<Complex64> {
        self.coeffs.row(self.grid.modes()[0]).to_owned()
    }

    /// Field with the horizontally averaged part removed.
    pub fn without_horizontal_mean(&self) -> TorusField {
        let mut out = self.clone();
        out.coeffs.row_mut(self.grid.modes()[0]).fill(ZERO);
        out
    }

    pub fn scaled(&self, factor: f64) -> TorusField {
        let mut out = self.clone();
        out.coeffs.mapv_inplace(|c| c * factor);
        out
    }

    pub fn add(&self, other: &TorusField) -> Result<TorusField> {
        self.same_band(other)?;
        Ok(TorusField { grid: self.grid, coeffs: &self.coeffs + &other.coeffs, real: self.real && other.real })
    }

    pub fn sub(&self, other: &TorusField) -> Result<TorusField> {
        self.add(&other.scaled(-1.0))
    }

    /// `sum |c_n|^2 * area`, the squared `L^2` norm.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.area()
    }
}

impl SpectralField for TorusField {
    fn for_each_mode(&self, mut f: impl FnMut(&ModeInfo, Complex64)) {
        for (i, j, n1, n2) in self.grid.mode_indices() {
            f(&self.grid.mode_info(n1, n2), self.coeffs[[i, j]]);
        }
    }

    fn map_modes(&self, f: impl Fn(&ModeInfo, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (i, j, n1, n2) in self.grid.mode_indices() {
            out.coeffs[[i, j]] = f(&self.grid.mode_info(n1, n2), self.coeffs[[i, j]]);
        }
        out
    }
}

fn wrap(n: i64, m: usize) -> usize {
    n.rem_euclid(m as i64) as usize
}

/// Places band coefficients into FFT ordering on an `points` grid.
pub(crate) fn scatter(coeffs: &Array2<Complex64>, modes: [usize; 2], points: [usize; 2]) -> Array2<Complex64> {
    let [k1, k2] = [modes[0] as i64, modes[1] as i64];
    let mut work = Array2::zeros((points[0], points[1]));
    for n1 in -k1..=k1 {
        let r = wrap(n1, points[0]);
        for n2 in -k2..=k2 {
            work[[r, wrap(n2, points[1])]] = coeffs[[(n1 + k1) as usize, (n2 + k2) as usize]];
        }
    }
    work
}

/// Reads band coefficients out of an FFT-ordered array.
pub(crate) fn gather(work: &Array2<Complex64>, modes: [usize; 2], scale: f64) -> Array2<Complex64> {
    let (m1, m2) = work.dim();
    let [k1, k2] = [modes[0] as i64, modes[1] as i64];
    Array2::from_shape_fn((2 * modes[0] + 1, 2 * modes[1] + 1), |(i, j)| {
        let n1 = i as i64 - k1;
        let n2 = j as i64 - k2;
        if n1.unsigned_abs() as usize * 2 >= m1 || n2.unsigned_abs() as usize * 2 >= m2 {
            ZERO
        } else {
            work[[wrap(n1, m1), wrap(n2, m2)]] * scale
        }
    })
}

/// Replaces `c_n` by the average of `c_n` and `conj(c_{-n})`.
pub(crate) fn symmetrize(coeffs: &mut Array2<Complex64>) {
    let (r, c) = coeffs.dim();
    let src = coeffs.clone();
    for i in 0..r {
        for j in 0..c {
            coeffs[[i, j]] = 0.5 * (src[[i, j]] + src[[r - 1 - i, c - 1 - j]].conj());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_cosine_mode() {
        let grid = TorusGrid::new(8, 17).unwrap();
        let f = TorusField::from_fn(grid, |x1, x2| (2.0 * PI * (x1 + 2.0 * x2)).cos());
        assert_abs_diff_eq!(f.coeff(1, 2).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f.coeff(-1, -2).re, 0.5, epsilon = 1e-14);
        let total: f64 = f.coeffs().iter().map(|c| c.norm()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn constant_mean() {
        let grid = TorusGrid::new(4, 12).unwrap();
        let f = TorusField::from_fn(grid, |_, _| 3.0);
        assert_abs_diff_eq!(f.mean_integral(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(TorusGrid::new(8, 16).is_err());
        assert!(TorusGrid::new(8, 17).is_ok());
    }

    #[test]
    fn broken_symmetry_rejected() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let mut f = TorusField::zeros(grid);
        f.set_coeff(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(f.inverse(), Err(Error::Consistency(_))));
        let mut c = Array2::zeros(grid.spectral_shape());
        c[[3, 2]] = Complex64::new(0.0, 1.0);
        assert!(TorusField::from_coeffs(grid, c, true).is_err());
    }

    #[test]
    fn product_of_cosines_matches_identity() {
        let grid = TorusGrid::dealiased(4);
        let a = TorusField::from_fn(grid, |x, _| (2.0 * PI * 3.0 * x).cos());
        let b = TorusField::from_fn(grid, |x, y| (2.0 * PI * (2.0 * x + y)).cos());
        let p = a.product(&b).unwrap();
        // cos A cos B = (cos(A+B) + cos(A-B))/2, the (5,1) partner is outside the band
        assert_abs_diff_eq!(p.coeff(1, -1).re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(p.coeff(-1, 1).re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(p.coeff(5, 1).norm(), 0.0, epsilon = 1e-14);
        let full = a.product_full(&b).unwrap();
        assert_abs_diff_eq!(full.coeff(5, 1).re, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn aliasing_without_padding() {
        let grid = TorusGrid::new(4, 9).unwrap();
        let a = TorusField::from_fn(grid, |x, _| (2.0 * PI * 4.0 * x).cos());
        let p = a.product_with(&a, false).unwrap();
        // the n1 = 8 component folds back onto n1 = -1 on nine points
        assert!(p.coeff(1, 0).norm() > 0.1);
        let q = a.product_with(&a, true).unwrap();
        assert_abs_diff_eq!(q.coeff(1, 0).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn box_wavenumbers_scale_with_side() {
        let grid = TorusGrid::rectangular([2, 4], PeriodicDomain::PlaneBox { side: 32.0 });
        let [a, b] = grid.wavenumber(1, 2);
        assert_abs_diff_eq!(a, 2.0 * PI / 32.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 4.0 * PI / 32.0, epsilon = 1e-15);
        assert_eq!(grid.damping(0, 0), 0.0);
        assert_eq!(TorusGrid::dealiased(2).damping(0, 0), 1.0);
    }
}
