//! Thin helpers over `rustfft` for row filtering and 2-D transforms.

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place 2-D FFT of a row-major complex array.
pub(crate) fn fft2(data: &mut Array2<Complex64>, inverse: bool) {
    let (h, w) = data.dim();
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for mut row in data.rows_mut() {
        let slice = row
            .as_slice_mut()
            .expect("rows of a standard-layout array are contiguous");
        row_fft.process(slice);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for (r, v) in column.iter_mut().enumerate() {
            *v = data[[r, c]];
        }
        col_fft.process(&mut column);
        for (r, v) in column.iter().enumerate() {
            data[[r, c]] = *v;
        }
    }
}

/// Convolves every row of `rows` with a kernel given by its (real) frequency
/// response of length `n_fft`; rows are zero-padded to `n_fft`.
pub(crate) fn filter_rows(rows: &Array2<f64>, response: &[f64]) -> Array2<f64> {
    let (n_rows, width) = rows.dim();
    let n_fft = response.len();
    assert!(n_fft >= width);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n_fft);
    let inv = planner.plan_fft_inverse(n_fft);
    let mut out = Array2::zeros((n_rows, width));
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let scale = 1.0 / n_fft as f64;
    for r in 0..n_rows {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = if k < width {
                Complex64::new(rows[[r, k]], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        fwd.process(&mut buf);
        for (b, h) in buf.iter_mut().zip(response) {
            *b *= h * scale;
        }
        inv.process(&mut buf);
        for k in 0..width {
            out[[r, k]] = buf[k].re;
        }
    }
    out
}

/// Frequency response of a real, symmetric spatial kernel `h[n]` defined for
/// `|n| < n_fft/2` (wrapped onto the FFT grid).
pub(crate) fn symmetric_kernel_response(n_fft: usize, kernel: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[0] = Complex64::new(kernel(0), 0.0);
    for n in 1..n_fft / 2 {
        let v = kernel(n);
        buf[n] = Complex64::new(v, 0.0);
        buf[n_fft - n] = Complex64::new(v, 0.0);
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n_fft).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}
