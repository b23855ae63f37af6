//! Porous-disk phantoms and raster grids.
//!
//! A phantom is a solid disk of diameter `L` pixels filled with a constant
//! attenuation, punched with randomly placed, non-overlapping circular pores of
//! lower attenuation. With `background_lac = 1/L` the central ray through a
//! pore-free disk is attenuated by exactly `exp(-1)`.
//!
//! Pore placement uses a ChaCha8 stream seeded from a `u64`, so a given
//! `(seed, params)` pair always reproduces the same pore list and raster.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D point in object coordinates (pixels, origin at the object center,
/// `x` to the right, `y` down the image rows).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Detector coordinate of this point at projection angle `theta`
    /// (relative to the rotation axis).
    #[inline]
    pub fn project(self, theta: f64) -> f64 {
        self.x * theta.sin() + self.y * theta.cos()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Row-major raster of per-pixel linear attenuation coefficients (1/pixel).
///
/// `values[[row, col]]`; pixel `(col, row)` sits at object coordinate
/// `(col + 0.5 - width/2, row + 0.5 - height/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    values: Array2<f64>,
    pixel_size: f64,
}

impl ImageGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        ImageGrid {
            values: Array2::zeros((height, width)),
            pixel_size: 1.0,
        }
    }

    /// Wraps an array, checking the grid invariants (non-empty, finite, ≥ 0).
    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        let grid = ImageGrid {
            values,
            pixel_size: 1.0,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Wraps an array without the non-negativity check. Reconstructions can
    /// legitimately undershoot below zero.
    pub fn from_signed(values: Array2<f64>) -> Self {
        ImageGrid {
            values,
            pixel_size: 1.0,
        }
    }

    pub fn with_pixel_size(mut self, pixel_size: f64) -> Self {
        self.pixel_size = pixel_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width() == 0 || self.height() == 0 {
            return Err(Error::param("image grid must be at least 1x1"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(format!(
                "image grid contains invalid value {v}"
            )));
        }
        if !(self.pixel_size > 0.0 && self.pixel_size.is_finite()) {
            return Err(Error::param("pixel size must be positive"));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[[row, col]]
    }

    /// Object coordinate of a pixel center.
    #[inline]
    pub fn pixel_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            col as f64 + 0.5 - self.width() as f64 / 2.0,
            row as f64 + 0.5 - self.height() as f64 / 2.0,
        )
    }

    pub fn sum(&self) -> f64 {
        self.values.sum()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Number of pixels with a non-zero value (masks).
    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Bilinear sample at object coordinate `p`; zero outside the grid.
    #[inline]
    pub fn sample(&self, p: Point) -> f64 {
        let u = p.x + self.width() as f64 / 2.0 - 0.5;
        let v = p.y + self.height() as f64 / 2.0 - 0.5;
        bilinear(&self.values, u, v)
    }
}

/// Bilinear interpolation on pixel-center coordinates `(u, v)` = (column,
/// row); samples beyond the outermost pixel centers fade linearly to zero.
#[inline]
pub(crate) fn bilinear(values: &Array2<f64>, u: f64, v: f64) -> f64 {
    let (h, w) = values.dim();
    let u0 = u.floor();
    let v0 = v.floor();
    let fu = u - u0;
    let fv = v - v0;
    let i0 = u0 as isize;
    let j0 = v0 as isize;
    if i0 < -1 || j0 < -1 || i0 >= w as isize || j0 >= h as isize {
        return 0.0;
    }
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= w as isize || j >= h as isize {
            0.0
        } else {
            values[[j as usize, i as usize]]
        }
    };
    let top = at(i0, j0) * (1.0 - fu) + at(i0 + 1, j0) * fu;
    let bottom = at(i0, j0 + 1) * (1.0 - fu) + at(i0 + 1, j0 + 1) * fu;
    top * (1.0 - fv) + bottom * fv
}

/// One circular pore, in object coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pore {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub lac: f64,
}

impl Pore {
    pub fn center(&self) -> Point {
        Point::new(self.center_x, self.center_y)
    }
}

/// Parameters for [`generate_phantom`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomParams {
    /// Outer disk diameter `L` (also the raster side length), pixels.
    pub diameter: usize,
    /// Attenuation of solid material, 1/pixel.
    pub background_lac: f64,
    /// Inclusive pore radius range, pixels.
    pub pore_radius_range: (f64, f64),
    /// Pore attenuation range, 1/pixel.
    pub pore_lac_range: (f64, f64),
    /// Target fraction of the disk area occupied by pores.
    pub target_pore_fraction: f64,
    pub seed: u64,
}

impl PhantomParams {
    /// Desk-scale phantom: `L` = 512, `µ` = 1/512, pore diameters 2–51 px.
    pub fn desk(seed: u64) -> Self {
        Self::scaled(512, seed)
    }

    /// The desk recipe at an arbitrary diameter: pore diameters span
    /// `L/256 .. 51·L/512` and solid attenuation is `1/L`.
    pub fn scaled(diameter: usize, seed: u64) -> Self {
        let l = diameter as f64;
        PhantomParams {
            diameter,
            background_lac: 1.0 / l,
            pore_radius_range: ((l / 512.0).max(0.5), 51.0 * l / 1024.0),
            pore_lac_range: (0.0, 1.0 / l),
            target_pore_fraction: 0.3,
            seed,
        }
    }

    /// The full-size recipe: `L` = 2048, pore diameters 8–205 px.
    pub fn full_size(seed: u64) -> Self {
        PhantomParams {
            diameter: 2048,
            background_lac: 1.0 / 2048.0,
            pore_radius_range: (4.0, 102.5),
            pore_lac_range: (0.0, 1.0 / 2048.0),
            target_pore_fraction: 0.3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.diameter as f64;
        if self.diameter < 16 {
            return Err(Error::param(format!(
                "phantom diameter {} < 16",
                self.diameter
            )));
        }
        let (rmin, rmax) = self.pore_radius_range;
        if !(rmin > 0.0 && rmin <= rmax && rmax < l / 2.0) {
            return Err(Error::param(format!(
                "pore radius range ({rmin}, {rmax}) must lie within (0, {})",
                l / 2.0
            )));
        }
        if !(self.background_lac >= 0.0 && self.background_lac.is_finite()) {
            return Err(Error::param("background_lac must be finite and >= 0"));
        }
        let (lmin, lmax) = self.pore_lac_range;
        if !(lmin >= 0.0 && lmin <= lmax && lmax <= self.background_lac) {
            return Err(Error::param(format!(
                "pore lac range ({lmin}, {lmax}) must lie within [0, background_lac]"
            )));
        }
        if !(0.0..=0.6).contains(&self.target_pore_fraction) {
            return Err(Error::param(format!(
                "target pore fraction {} outside [0, 0.6]",
                self.target_pore_fraction
            )));
        }
        Ok(())
    }
}

/// A generated phantom and the record of how it was made.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub grid: ImageGrid,
    pub params: PhantomParams,
    pub pores: Vec<Pore>,
    /// Pore area fraction actually reached.
    pub achieved_fraction: f64,
    /// Set when the attempt budget ran out before the target fraction.
    pub budget_exhausted: bool,
}

impl Phantom {
    pub fn diameter(&self) -> usize {
        self.params.diameter
    }

    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    /// Binary mask of the outer disk (the object support).
    pub fn object_mask(&self) -> ImageGrid {
        disk_mask(self.diameter(), 1.0)
    }

    /// Pore-free copy of this phantom (uniform disk).
    pub fn solid(&self) -> ImageGrid {
        let mut g = disk_mask(self.diameter(), 1.0);
        g.values_mut()
            .mapv_inplace(|v| v * self.params.background_lac);
        g
    }
}

/// Generates a porous-disk phantom by rejection sampling pore positions.
///
/// Radii and attenuations are drawn uniformly from their ranges, centers
/// uniformly over the disk. A candidate is rejected when it would leave the
/// outer disk or touch an accepted pore. Placement stops once the pore area
/// fraction reaches the target, or after 50 attempts per expected pore.
pub fn generate_phantom(params: &PhantomParams) -> Result<Phantom> {
    params.validate()?;
    let l = params.diameter as f64;
    let outer = l / 2.0;
    let disk_area = std::f64::consts::PI * outer * outer;
    let (rmin, rmax) = params.pore_radius_range;
    let (lmin, lmax) = params.pore_lac_range;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pores: Vec<Pore> = Vec::new();
    let mut pore_area = 0.0;
    let target_area = params.target_pore_fraction * disk_area;

    let mean_r2 = (rmin * rmin + rmin * rmax + rmax * rmax) / 3.0;
    let expected_count = (target_area / (std::f64::consts::PI * mean_r2)).ceil() as usize;
    let budget = 50 * expected_count;
    let mut attempts = 0;

    while pore_area < target_area && attempts < budget {
        attempts += 1;
        let r = if rmax > rmin {
            rng.random_range(rmin..=rmax)
        } else {
            rmin
        };
        let lac = if lmax > lmin {
            rng.random_range(lmin..=lmax)
        } else {
            lmin
        };
        // Uniform point in the bounding square, rejected outside the disk.
        let (cx, cy) = loop {
            let x = rng.random_range(-outer..outer);
            let y = rng.random_range(-outer..outer);
            if x * x + y * y <= outer * outer {
                break (x, y);
            }
        };
        let c = Point::new(cx, cy);
        if c.norm() + r > outer {
            continue;
        }
        if pores.iter().any(|p| p.center().distance(c) <= p.radius + r) {
            continue;
        }
        pores.push(Pore {
            center_x: cx,
            center_y: cy,
            radius: r,
            lac,
        });
        pore_area += std::f64::consts::PI * r * r;
    }
    let budget_exhausted = pore_area < target_area;

    let grid = rasterize(params.diameter, params.background_lac, &pores);
    Ok(Phantom {
        grid,
        params: params.clone(),
        pores,
        achieved_fraction: pore_area / disk_area,
        budget_exhausted,
    })
}

fn rasterize(diameter: usize, background: f64, pores: &[Pore]) -> ImageGrid {
    let outer = diameter as f64 / 2.0;
    let mut grid = ImageGrid::zeros(diameter, diameter);
    for row in 0..diameter {
        for col in 0..diameter {
            let p = grid.pixel_center(col, row);
            if p.norm() <= outer {
                grid.values[[row, col]] = background;
            }
        }
    }
    // Pores never overlap, so each pixel is claimed by at most one of them.
    for pore in pores {
        let c = pore.center();
        let lo = |v: f64| ((v + outer - pore.radius).floor().max(0.0)) as usize;
        let hi = |v: f64| ((v + outer + pore.radius).ceil() as usize).min(diameter);
        for row in lo(c.y)..hi(c.y) {
            for col in lo(c.x)..hi(c.x) {
                if grid.pixel_center(col, row).distance(c) <= pore.radius {
                    grid.values[[row, col]] = pore.lac;
                }
            }
        }
    }
    grid
}

/// A `size`×`size` binary mask: 1.0 where the pixel center lies inside the
/// centered disk of diameter `fraction·size`, else 0.0.
pub fn disk_mask(size: usize, fraction: f64) -> ImageGrid {
    assert!(
        fraction > 0.0 && fraction <= 1.0,
        "disk fraction must be in (0, 1]"
    );
    disk_mask_at(size, size, Point::ORIGIN, fraction * size as f64)
}

/// Binary mask of a disk of `diameter` centered at object coordinate `center`.
pub fn disk_mask_at(width: usize, height: usize, center: Point, diameter: f64) -> ImageGrid {
    let mut grid = ImageGrid::zeros(width, height);
    let r = diameter / 2.0;
    for row in 0..height {
        for col in 0..width {
            if grid.pixel_center(col, row).distance(center) <= r {
                grid.values[[row, col]] = 1.0;
            }
        }
    }
    grid
}
