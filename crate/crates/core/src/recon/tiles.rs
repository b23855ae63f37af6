use ndarray::Array2;
use rayon::prelude::*;

use super::fbp::{fbp_on_grid, Filter, OutputGrid};
use super::stitch::pad_edges;
use crate::error::{Error, Result};
use crate::phantom::{ImageGrid, Point};
use crate::projector::Sinogram;

/// Edge padding applied to local sinograms before reconstruction, in units
/// of the sinogram width per side.
pub const TILE_PAD_FACTOR: f64 = 2.0;

/// A 360° local sinogram and where it sits in the object.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScan {
    /// Local frame: rotation axis at the ROI center.
    pub sinogram: Sinogram,
    pub roi_center: Point,
    /// Size of the global image grid the tile is reconstructed onto.
    pub image_width: usize,
    pub image_height: usize,
}

impl LocalScan {
    pub fn fov(&self) -> usize {
        self.sinogram.width()
    }
}

/// One reconstructed LTA tile on the global pixel lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconTile {
    pub image: ImageGrid,
    pub roi_center: Point,
    pub usable_diameter: f64,
    /// Global pixel (column, row) of tile pixel (0, 0).
    pub origin: (i64, i64),
    /// Pixels inside the usable disk.
    pub valid: Array2<bool>,
    /// Size of the global grid.
    pub image_size: (usize, usize),
}

impl ReconTile {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    /// Object coordinate of tile pixel `(col, row)`.
    pub fn pixel_point(&self, col: usize, row: usize) -> Point {
        let (w, h) = self.image_size;
        Point::new(
            (self.origin.0 + col as i64) as f64 + 0.5 - w as f64 / 2.0,
            (self.origin.1 + row as i64) as f64 + 0.5 - h as f64 / 2.0,
        )
    }
}

/// Pads, reconstructs and crops one local scan.
///
/// The reconstruction grid is `f × f` pixels snapped to the global lattice
/// nearest the ROI; pixels farther than `γ f / 2` from the ROI center are
/// flagged invalid.
pub fn reconstruct_tile(local: &LocalScan, gamma: f64) -> Result<ReconTile> {
    reconstruct_tile_with(local, gamma, TILE_PAD_FACTOR, Filter::RamLak)
}

pub fn reconstruct_tile_with(
    local: &LocalScan,
    gamma: f64,
    pad_factor: f64,
    filter: Filter,
) -> Result<ReconTile> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param(format!(
            "crop fraction {gamma} outside (0, 1]"
        )));
    }
    if !local.sinogram.spans_360() {
        return Err(Error::param("local scans must span 360°"));
    }
    let f = local.fov();
    let (w, h) = (local.image_width, local.image_height);
    let c = local.roi_center;
    let i0 = (c.x + w as f64 / 2.0 - f as f64 / 2.0).round() as i64;
    let j0 = (c.y + h as f64 / 2.0 - f as f64 / 2.0).round() as i64;
    let grid = OutputGrid {
        width: f,
        height: f,
        x0: i0 as f64 + 0.5 - w as f64 / 2.0 - c.x,
        y0: j0 as f64 + 0.5 - h as f64 / 2.0 - c.y,
    };
    let padded = pad_edges(&local.sinogram, pad_factor)?;
    let image = fbp_on_grid(&padded, grid, filter)?;
    let usable = gamma * f as f64;
    let mut tile = ReconTile {
        image,
        roi_center: c,
        usable_diameter: usable,
        origin: (i0, j0),
        valid: Array2::from_elem((f, f), false),
        image_size: (w, h),
    };
    for row in 0..f {
        for col in 0..f {
            tile.valid[[row, col]] = tile.pixel_point(col, row).distance(c) <= usable / 2.0;
        }
    }
    Ok(tile)
}

/// Reconstructs tiles in parallel.
pub fn reconstruct_tiles(locals: &[LocalScan], gamma: f64) -> Result<Vec<ReconTile>> {
    locals
        .par_iter()
        .map(|l| reconstruct_tile(l, gamma))
        .collect()
}

/// How tiles are placed into the mosaic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StitchLayout {
    /// Per-tile placement correction in pixels (column, row), e.g. from
    /// registration; `None` places every tile at its nominal origin.
    pub shifts: Option<Vec<(i64, i64)>>,
}

/// Result of tile assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Mosaic {
    pub image: ImageGrid,
    /// Sum of blending weights per pixel.
    pub weight: Array2<f64>,
    /// Object pixels (column, row) no tile covered.
    pub uncovered: Vec<(usize, usize)>,
}

/// Blends tiles with weights falling linearly to zero at each usable-disk
/// edge. Pixels no tile covers stay zero; those inside `object_mask` are
/// listed in [`Mosaic::uncovered`].
pub fn stitch_tiles(
    tiles: &[ReconTile],
    layout: &StitchLayout,
    object_mask: Option<&ImageGrid>,
) -> Result<Mosaic> {
    let first = tiles
        .first()
        .ok_or_else(|| Error::param("no tiles to stitch"))?;
    let (w, h) = first.image_size;
    if tiles.iter().any(|t| t.image_size != (w, h)) {
        return Err(Error::param("tiles are placed on different grids"));
    }
    let shifts: Vec<(i64, i64)> = match &layout.shifts {
        Some(s) if s.len() != tiles.len() => {
            return Err(Error::param(format!(
                "{} tiles but {} shifts",
                tiles.len(),
                s.len()
            )));
        }
        Some(s) => s.clone(),
        None => vec![(0, 0); tiles.len()],
    };
    check_connected(tiles, &shifts)?;
    let mut acc = Array2::<f64>::zeros((h, w));
    let mut weight = Array2::<f64>::zeros((h, w));
    for (tile, &(dx, dy)) in tiles.iter().zip(&shifts) {
        let r = tile.usable_diameter / 2.0;
        for row in 0..tile.height() {
            for col in 0..tile.width() {
                if !tile.valid[[row, col]] {
                    continue;
                }
                let gx = tile.origin.0 + col as i64 + dx;
                let gy = tile.origin.1 + row as i64 + dy;
                if gx < 0 || gy < 0 || gx >= w as i64 || gy >= h as i64 {
                    continue;
                }
                let wt = (r - tile.pixel_point(col, row).distance(tile.roi_center)).max(0.0);
                if wt > 0.0 {
                    acc[[gy as usize, gx as usize]] += wt * tile.image.get(col, row);
                    weight[[gy as usize, gx as usize]] += wt;
                }
            }
        }
    }
    let mut uncovered = Vec::new();
    for ((row, col), v) in acc.indexed_iter_mut() {
        let wt = weight[[row, col]];
        if wt > 0.0 {
            *v /= wt;
        } else if object_mask.is_some_and(|m| m.get(col, row) > 0.0) {
            uncovered.push((col, row));
        }
    }
    Ok(Mosaic {
        image: ImageGrid::from_signed(acc),
        weight,
        uncovered,
    })
}

fn check_connected(tiles: &[ReconTile], shifts: &[(i64, i64)]) -> Result<()> {
    let n = tiles.len();
    let centers: Vec<Point> = tiles
        .iter()
        .zip(shifts)
        .map(|(t, &(dx, dy))| Point::new(t.roi_center.x + dx as f64, t.roi_center.y + dy as f64))
        .collect();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let reach = (tiles[i].usable_diameter + tiles[j].usable_diameter) / 2.0;
            if !seen[j] && centers[i].distance(centers[j]) < reach {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(k) => Err(Error::param(format!(
            "tile {k} does not overlap the rest of the layout"
        ))),
        None => Ok(()),
    }
}

/// Histogram entropy of the reconstruction (lower is sharper), on a fixed
/// value range so candidates are comparable.
fn entropy(values: &[f64], lo: f64, hi: f64, bins: usize) -> f64 {
    let mut hist = vec![0usize; bins];
    let scale = bins as f64 / (hi - lo);
    for v in values {
        let b = ((v - lo) * scale).floor().clamp(0.0, (bins - 1) as f64) as usize;
        hist[b] += 1;
    }
    let n = values.len() as f64;
    hist.iter()
        .filter(|c| **c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Searches rotation-axis positions `nominal ± range` in `step` increments
/// and returns the one whose reconstruction of the central `region × region`
/// pixels has the lowest histogram entropy.
pub fn refine_center(
    sino: &Sinogram,
    nominal: f64,
    range: f64,
    step: f64,
    region: usize,
) -> Result<f64> {
    if !(range >= 0.0 && step > 0.0) || region < 4 {
        return Err(Error::param("invalid center search parameters"));
    }
    let grid = OutputGrid::centered(region);
    let reference = fbp_on_grid(&sino.clone().with_center(nominal), grid, Filter::RamLak)?;
    let (lo, hi) = (reference.min(), reference.max());
    if !(hi > lo) {
        return Ok(nominal);
    }
    let margin = 0.25 * (hi - lo);
    let n_steps = (range / step).round() as i64;
    let candidates: Vec<f64> = (-n_steps..=n_steps)
        .map(|i| nominal + i as f64 * step)
        .collect();
    let scores: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|&c| {
            let rec = fbp_on_grid(&sino.clone().with_center(c), grid, Filter::RamLak)?;
            let values: Vec<f64> = rec.values().iter().copied().collect();
            Ok(entropy(&values, lo - margin, hi + margin, 128))
        })
        .collect();
    let mut best = (f64::INFINITY, nominal);
    for (c, s) in candidates.iter().zip(scores) {
        let s = s?;
        // ties resolve toward the nominal axis
        if s < best.0 - 1e-12
            || ((s - best.0).abs() <= 1e-12 && (c - nominal).abs() < (best.1 - nominal).abs())
        {
            best = (s, *c);
        }
    }
    Ok(best.1)
}
