//! Image-quality and registration-error metrics.
//!
//! SSIM here drops the luminance term by default, so the score is
//! `c(A, B) · s(A, B)` and ignores global intensity offsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::{ImageGrid, Point};
use crate::recon::ReconTile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// One set of statistics over the whole mask.
    Global,
    /// Odd square windows; scores of windows whose center is masked are
    /// averaged.
    Square(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window: Window,
    pub luminance: bool,
}

impl SsimParams {
    pub fn new(dynamic_range: f64) -> Self {
        SsimParams {
            k1: 0.01,
            k2: 0.03,
            dynamic_range,
            window: Window::Global,
            luminance: false,
        }
    }

    /// Dynamic range taken as max − min of `reference` inside `mask`.
    pub fn for_reference(reference: &ImageGrid, mask: &ImageGrid) -> Result<Self> {
        let (lo, hi) = masked_range(reference, mask)?;
        let range = hi - lo;
        Ok(SsimParams::new(if range > 0.0 { range } else { 1.0 }))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::param("SSIM constants k1, k2 must be positive"));
        }
        if !(self.dynamic_range > 0.0 && self.dynamic_range.is_finite()) {
            return Err(Error::param("SSIM dynamic range must be positive"));
        }
        if let Window::Square(w) = self.window {
            if w < 3 || w % 2 == 0 {
                return Err(Error::param(format!(
                    "SSIM window {w} must be odd and >= 3"
                )));
            }
        }
        Ok(())
    }

    fn constants(&self) -> (f64, f64, f64) {
        let c1 = (self.k1 * self.dynamic_range).powi(2);
        let c2 = (self.k2 * self.dynamic_range).powi(2);
        (c1, c2, c2 / 2.0)
    }
}

fn masked_range(img: &ImageGrid, mask: &ImageGrid) -> Result<(f64, f64)> {
    check_shapes(img, img, mask)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (v, m) in img.values().iter().zip(mask.values()) {
        if *m != 0.0 {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if lo > hi {
        return Err(Error::param("empty evaluation mask"));
    }
    Ok((lo, hi))
}

fn check_shapes(a: &ImageGrid, b: &ImageGrid, mask: &ImageGrid) -> Result<()> {
    if a.values().dim() != b.values().dim() || a.values().dim() != mask.values().dim() {
        return Err(Error::param(format!(
            "shape mismatch: {:?}, {:?}, mask {:?}",
            a.values().dim(),
            b.values().dim(),
            mask.values().dim()
        )));
    }
    Ok(())
}

/// SSIM of two equally sized images over the non-zero pixels of `mask`.
pub fn ssim(a: &ImageGrid, b: &ImageGrid, mask: &ImageGrid, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    check_shapes(a, b, mask)?;
    let n_mask = mask.count_nonzero();
    if n_mask < 2 {
        return Err(Error::param(format!(
            "SSIM mask has {n_mask} pixels, need >= 2"
        )));
    }
    match params.window {
        Window::Global => {
            let pairs: Vec<(f64, f64)> = a
                .values()
                .iter()
                .zip(b.values())
                .zip(mask.values())
                .filter(|(_, m)| **m != 0.0)
                .map(|((x, y), _)| (*x, *y))
                .collect();
            Ok(ssim_of_pairs(&pairs, params))
        }
        Window::Square(w) => {
            let half = (w / 2) as isize;
            let (h, wd) = a.values().dim();
            let mut total = 0.0;
            let mut count = 0usize;
            let mut pairs = Vec::with_capacity(w * w);
            for j in 0..h {
                for i in 0..wd {
                    if mask.values()[[j, i]] == 0.0 {
                        continue;
                    }
                    pairs.clear();
                    for dj in -half..=half {
                        for di in -half..=half {
                            let (y, x) = (j as isize + dj, i as isize + di);
                            if y < 0 || x < 0 || y >= h as isize || x >= wd as isize {
                                continue;
                            }
                            let (y, x) = (y as usize, x as usize);
                            pairs.push((a.values()[[y, x]], b.values()[[y, x]]));
                        }
                    }
                    total += ssim_of_pairs(&pairs, params);
                    count += 1;
                }
            }
            Ok(total / count as f64)
        }
    }
}

fn ssim_of_pairs(pairs: &[(f64, f64)], params: &SsimParams) -> f64 {
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cov += dx * dy;
    }
    va /= n;
    vb /= n;
    cov /= n;
    let (c1, c2, c3) = params.constants();
    // sqrt of the product keeps sigma_a * sigma_b == var exactly when a == b
    let sab = (va * vb).sqrt();
    let c = (2.0 * sab + c2) / (va + vb + c2);
    let s = (cov + c3) / (sab + c3);
    let l = if params.luminance {
        (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1)
    } else {
        1.0
    };
    (l * c * s).clamp(-1.0, 1.0)
}

/// Mean SSIM over the inner disks (diameter `interior_fraction` times the
/// usable diameter) of tiles whose usable disk lies inside the object.
///
/// `object_diameter` is the object disk's diameter on the tiles' grid.
pub fn lta_interior_ssim(
    tiles: &[ReconTile],
    ground_truth: &ImageGrid,
    object_diameter: f64,
    interior_fraction: f64,
    params: &SsimParams,
) -> Result<f64> {
    if !(interior_fraction > 0.0 && interior_fraction < 1.0) {
        return Err(Error::param(format!(
            "interior fraction {interior_fraction} outside (0, 1)"
        )));
    }
    let mut scores = Vec::new();
    for tile in tiles {
        if tile.image_size != (ground_truth.width(), ground_truth.height()) {
            return Err(Error::param("tile grid does not match the ground truth"));
        }
        if tile.roi_center.norm() + tile.usable_diameter / 2.0 > object_diameter / 2.0 {
            continue;
        }
        let radius = interior_fraction * tile.usable_diameter / 2.0;
        let mut pairs = Vec::new();
        for row in 0..tile.height() {
            for col in 0..tile.width() {
                if tile.pixel_point(col, row).distance(tile.roi_center) > radius {
                    continue;
                }
                let gx = tile.origin.0 + col as i64;
                let gy = tile.origin.1 + row as i64;
                if gx < 0
                    || gy < 0
                    || gx >= ground_truth.width() as i64
                    || gy >= ground_truth.height() as i64
                {
                    continue;
                }
                pairs.push((
                    tile.image.get(col, row),
                    ground_truth.get(gx as usize, gy as usize),
                ));
            }
        }
        if pairs.len() < 2 {
            return Err(Error::param(format!(
                "interior region of {} pixels is too small",
                pairs.len()
            )));
        }
        scores.push(ssim_of_pairs(&pairs, params));
    }
    if scores.is_empty() {
        return Err(Error::param("no tile lies entirely inside the object"));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Mean Euclidean distance between estimated and true offsets.
pub fn mean_registration_error(estimated: &[(f64, f64)], truth: &[(f64, f64)]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::param(format!(
            "{} estimates but {} true offsets",
            estimated.len(),
            truth.len()
        )));
    }
    if estimated.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = estimated
        .iter()
        .zip(truth)
        .map(|(e, t)| (e.0 - t.0).hypot(e.1 - t.1))
        .sum();
    Ok(total / estimated.len() as f64)
}

/// Root-mean-square difference over the mask.
pub fn masked_rmse(a: &ImageGrid, b: &ImageGrid, mask: &ImageGrid) -> Result<f64> {
    check_shapes(a, b, mask)?;
    let mut sq = 0.0;
    let mut n = 0usize;
    for ((x, y), m) in a.values().iter().zip(b.values()).zip(mask.values()) {
        if *m != 0.0 {
            sq += (x - y).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::param("empty evaluation mask"));
    }
    Ok((sq / n as f64).sqrt())
}

/// Masked RMSE within a disk of `radius` around `center`.
pub fn roi_rmse(a: &ImageGrid, b: &ImageGrid, center: Point, radius: f64) -> Result<f64> {
    let mask = crate::phantom::disk_mask_at(a.width(), a.height(), center, 2.0 * radius);
    masked_rmse(a, b, &mask)
}

/// Smallest ROI RMSE between `recon` displaced by an integer shift of at
/// most `max_shift` pixels per axis and `truth`; returns the RMSE and the
/// shift, so rigid misplacement is not counted as error.
pub fn shift_compensated_rmse(
    recon: &ImageGrid,
    truth: &ImageGrid,
    center: Point,
    radius: f64,
    max_shift: i64,
) -> Result<(f64, (i64, i64))> {
    check_shapes(recon, truth, truth)?;
    let mask = crate::phantom::disk_mask_at(truth.width(), truth.height(), center, 2.0 * radius);
    let pixels: Vec<(usize, usize)> = mask
        .values()
        .indexed_iter()
        .filter(|(_, m)| **m != 0.0)
        .map(|((r, c), _)| (c, r))
        .collect();
    if pixels.is_empty() {
        return Err(Error::param("empty evaluation mask"));
    }
    let (w, h) = (truth.width() as i64, truth.height() as i64);
    let mut best = (f64::INFINITY, (0i64, 0i64));
    for dy in -max_shift..=max_shift {
        for dx in -max_shift..=max_shift {
            let mut sq = 0.0;
            for &(c, r) in &pixels {
                let (x, y) = (c as i64 + dx, r as i64 + dy);
                let v = if x >= 0 && y >= 0 && x < w && y < h {
                    recon.get(x as usize, y as usize)
                } else {
                    0.0
                };
                sq += (v - truth.get(c, r)).powi(2);
            }
            let rmse = (sq / pixels.len() as f64).sqrt();
            let closer = dx.abs() + dy.abs() < best.1 .0.abs() + best.1 .1.abs();
            if rmse < best.0 || (rmse == best.0 && closer) {
                best = (rmse, (dx, dy));
            }
        }
    }
    Ok(best)
}
