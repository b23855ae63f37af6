//! Filtered backprojection, sinogram padding and stitching, and LTA tile
//! reconstruction and mosaicking.

mod fbp;
mod stitch;
mod tiles;

pub(crate) use fbp::backproject;
pub use fbp::{fbp, fbp_on_grid, filter_sinogram, Filter, OutputGrid};
pub use stitch::{band_offset, pad_edges, stitch_sinograms, synthesize_360, Blend};
pub use tiles::{
    reconstruct_tile, reconstruct_tile_with, reconstruct_tiles, refine_center, stitch_tiles,
    LocalScan, Mosaic, ReconTile, StitchLayout, TILE_PAD_FACTOR,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phantom::ImageGrid;
use crate::plan::{ScanPlan, Strategy};
use crate::projector::{add_noise, extract_band, local_from_full, NoiseModel, Sinogram};

/// Settings shared by the end-to-end pipelines. With noise on, every scan
/// gets `n_ph` photons and its own stream derived from the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acquisition {
    pub noise: Option<NoiseModel>,
    pub filter: Filter,
    pub blend: Blend,
}

impl Default for Acquisition {
    fn default() -> Self {
        Acquisition {
            noise: None,
            filter: Filter::RamLak,
            blend: Blend::Feather,
        }
    }
}

fn scan_noise(acq: &Acquisition, scan: usize) -> Option<NoiseModel> {
    acq.noise.map(|n| NoiseModel {
        n_ph: n.n_ph,
        seed: n.seed.wrapping_add(1 + scan as u64),
    })
}

/// SOA end to end: cut the plan's bands out of the full 180° sinogram, add
/// noise per band, stitch at the plan offsets and reconstruct `L × L`.
pub fn soa_reconstruct(
    full: &Sinogram,
    plan: &ScanPlan,
    acq: &Acquisition,
) -> Result<(Sinogram, ImageGrid)> {
    if plan.strategy != Strategy::Soa {
        return Err(Error::param("SOA reconstruction needs an SOA plan"));
    }
    if full.width() != plan.detector_width || (full.center() - plan.center).abs() > 1e-9 {
        return Err(Error::param(
            "full sinogram does not match the plan detector",
        ));
    }
    let starts = plan.band_starts();
    let bands: Vec<Sinogram> = starts
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let band = extract_band(full, s, plan.fov)?;
            match scan_noise(acq, i) {
                Some(n) => add_noise(&band, &n),
                None => Ok(band),
            }
        })
        .collect::<Result<_>>()?;
    let offsets: Vec<i64> = starts.iter().map(|s| (*s).max(0)).collect();
    let stitched = stitch_sinograms(&bands, &offsets, full.width(), full.center(), acq.blend)?;
    let image = fbp(&stitched, plan.diameter, acq.filter)?;
    Ok((stitched, image))
}

/// LTA end to end: resample each ROI's local 180° sinogram from the full
/// one, add noise, extend to 360°, and reconstruct the tiles.
pub fn lta_tiles(full: &Sinogram, plan: &ScanPlan, acq: &Acquisition) -> Result<Vec<ReconTile>> {
    if plan.strategy != Strategy::Lta {
        return Err(Error::param("LTA reconstruction needs an LTA plan"));
    }
    let l = plan.diameter;
    plan.roi_centers()
        .par_iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut local = local_from_full(full, c, plan.fov)?;
            if let Some(n) = scan_noise(acq, i) {
                local = add_noise(&local, &n)?;
            }
            let scan = LocalScan {
                sinogram: synthesize_360(&local)?,
                roi_center: c,
                image_width: l,
                image_height: l,
            };
            reconstruct_tile_with(&scan, plan.gamma, TILE_PAD_FACTOR, acq.filter)
        })
        .collect()
}
