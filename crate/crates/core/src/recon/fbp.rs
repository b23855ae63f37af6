use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{filter_rows, symmetric_kernel_response};
use crate::phantom::ImageGrid;
use crate::projector::{linear, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    /// Band-limited ramp.
    #[default]
    #[serde(alias = "ramlak", alias = "ram-lak")]
    RamLak,
    /// Ramp times `sinc`.
    #[serde(alias = "shepp", alias = "shepp-logan")]
    SheppLogan,
}

impl std::str::FromStr for Filter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ramlak" | "ram-lak" | "ramp" => Ok(Filter::RamLak),
            "shepp" | "shepp-logan" | "shepplogan" => Ok(Filter::SheppLogan),
            other => Err(Error::param(format!("unknown filter {other:?}"))),
        }
    }
}

/// Output pixel lattice for backprojection.
///
/// `(x0, y0)` is the coordinate, relative to the rotation axis, of the center
/// of pixel `(0, 0)`; pixels are unit-spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputGrid {
    pub width: usize,
    pub height: usize,
    pub x0: f64,
    pub y0: f64,
}

impl OutputGrid {
    /// `size × size` pixels centered on the axis.
    pub fn centered(size: usize) -> Self {
        let h = -(size as f64) / 2.0 + 0.5;
        OutputGrid {
            width: size,
            height: size,
            x0: h,
            y0: h,
        }
    }
}

/// Spatial impulse response of the ramp filter at unit detector pitch.
fn ramlak_kernel(n: usize) -> f64 {
    if n == 0 {
        0.25
    } else if n % 2 == 1 {
        -1.0 / (PI * PI * (n * n) as f64)
    } else {
        0.0
    }
}

fn filter_response(n_fft: usize, filter: Filter) -> Vec<f64> {
    let mut response = symmetric_kernel_response(n_fft, ramlak_kernel);
    if filter == Filter::SheppLogan {
        for (k, r) in response.iter_mut().enumerate() {
            let k = if k <= n_fft / 2 {
                k as f64
            } else {
                k as f64 - n_fft as f64
            };
            let nu = k / n_fft as f64;
            if nu != 0.0 {
                *r *= (PI * nu).sin() / (PI * nu);
            }
        }
    }
    response
}

/// Ramp-filters every row of `sino`, zero padding to at least twice the width.
pub fn filter_sinogram(sino: &Sinogram, filter: Filter) -> Array2<f64> {
    let n_fft = (2 * sino.width()).next_power_of_two();
    filter_rows(sino.values(), &filter_response(n_fft, filter))
}

/// Filtered backprojection onto a `size × size` grid centered on the axis.
pub fn fbp(sino: &Sinogram, output_size: usize, filter: Filter) -> Result<ImageGrid> {
    fbp_on_grid(sino, OutputGrid::centered(output_size), filter)
}

/// Filtered backprojection onto an arbitrary unit-spaced grid.
///
/// Works for sinograms over 180° or 360°; both use the weight `π / N`.
pub fn fbp_on_grid(sino: &Sinogram, grid: OutputGrid, filter: Filter) -> Result<ImageGrid> {
    if sino.n_angles() < 2 {
        return Err(Error::param(format!(
            "backprojection needs >= 2 angles, got {}",
            sino.n_angles()
        )));
    }
    if grid.width == 0 || grid.height == 0 {
        return Err(Error::param("output grid must be at least 1x1"));
    }
    let filtered = filter_sinogram(sino, filter);
    Ok(backproject(&filtered, sino.angles(), sino.center(), grid))
}

/// Unfiltered linear-interpolation backprojection of `rows` (one per angle).
pub(crate) fn backproject(
    rows: &Array2<f64>,
    angles: &[f64],
    center: f64,
    grid: OutputGrid,
) -> ImageGrid {
    let weight = PI / angles.len() as f64;
    let trig: Vec<(f64, f64)> = angles.iter().map(|a| a.sin_cos()).collect();
    let mut out = Array2::<f64>::zeros((grid.height, grid.width));
    let n_rows = rows.nrows();
    out.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut line)| {
            let y = grid.y0 + j as f64;
            let line = line.as_slice_mut().expect("contiguous output row");
            for (r, &(sin, cos)) in trig.iter().enumerate().take(n_rows) {
                let row = rows.row(r);
                let row = row.as_slice().expect("contiguous filtered row");
                // column coordinate of pixel 0, advancing by sin per pixel
                let u0 = grid.x0 * sin + y * cos + center - 0.5;
                for (i, px) in line.iter_mut().enumerate() {
                    *px += linear(row, u0 + i as f64 * sin);
                }
            }
            for px in line.iter_mut() {
                *px *= weight;
            }
        });
    ImageGrid::from_signed(out)
}
