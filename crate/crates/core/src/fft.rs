//! Shared FFT plans and row/column passes over 2-D arrays.

use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    // the planner caches plans internally, so repeated lookups are cheap
    let mut planner = planner().lock().unwrap_or_else(|e| e.into_inner());
    planner.plan_fft(len, direction)
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Unnormalized in-place transform of every row of a standard-layout array.
pub(crate) fn fft_rows(data: &mut Array2<Complex64>, direction: FftDirection) {
    let (rows, cols) = data.dim();
    if rows == 0 || cols == 0 {
        return;
    }
    let fft = plan(cols, direction);
    let rows_per_task = (rows / (4 * rayon::current_num_threads())).max(1);
    let slice = data.as_slice_mut().expect("fft_rows requires a standard-layout array");
    slice.par_chunks_mut(cols * rows_per_task).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// Unnormalized in-place transform of every column.
pub(crate) fn fft_cols(data: &mut Array2<Complex64>, direction: FftDirection) {
    let mut transposed = data.t().as_standard_layout().into_owned();
    fft_rows(&mut transposed, direction);
    data.assign(&transposed.t());
}

pub(crate) fn fft2(data: &mut Array2<Complex64>, direction: FftDirection) {
    fft_rows(data, direction);
    fft_cols(data, direction);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friendly_sizes() {
        assert_eq!(fft_friendly(7), 8);
        assert_eq!(fft_friendly(386), 400);
        assert_eq!(fft_friendly(1), 1);
        assert_eq!(fft_friendly(97), 100);
    }

    #[test]
    fn fft2_of_delta_is_flat() {
        let mut a = Array2::<Complex64>::zeros((6, 10));
        a[[0, 0]] = Complex64::new(1.0, 0.0);
        fft2(&mut a, FftDirection::Forward);
        for v in a.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }
}
