//! Registration studies on a seeded phantom.
//!
//! The photon budget is the total photons per detector pixel and angle
//! spent on the object; each strategy splits it evenly over its scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chain_register, perturb_offsets, phase_correlate, taper, OffsetVector, STRIP_TAPER};
use crate::error::{Error, Result};
use crate::metrics::shift_compensated_rmse;
use crate::phantom::{generate_phantom, ImageGrid, PhantomParams, Point};
use crate::plan::{lta_scan_count, soa_scan_count, Strategy};
use crate::projector::{
    add_noise, angles_180, extract_band, local_from_full, radon, NoiseModel, Sinogram,
};
use crate::recon::{
    backproject, band_offset, fbp, filter_sinogram, pad_edges, reconstruct_tile, refine_center,
    stitch_sinograms, stitch_tiles, synthesize_360, Blend, Filter, LocalScan, OutputGrid,
    StitchLayout, TILE_PAD_FACTOR,
};

/// One point of a study curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    /// Photon budget or angle downsampling factor.
    pub axis: f64,
    pub strategy: Strategy,
    /// Median over trials of the per-trial mean pair error.
    pub mean_error_px: f64,
    /// Standard deviation of the per-trial means.
    pub std_error_px: f64,
    pub trials: usize,
}

/// Geometry and statistics of the registration studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetStudyConfig {
    pub diameter: usize,
    pub phantom_seed: u64,
    pub n_angles: usize,
    pub gamma: f64,
    /// Width of each SOA projection band.
    pub soa_tile: usize,
    /// Nominal column interval between SOA bands.
    pub soa_stride: usize,
    pub soa_tiles: usize,
    pub lta_fov: usize,
    /// Nominal x and y spacing between registered LTA ROIs.
    pub lta_offset: f64,
    /// True positions deviate from nominal by up to this many pixels.
    pub jitter: i64,
    pub budgets: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub downsample_factors: Vec<usize>,
    /// Photon budget used in the angle-downsampling study.
    pub downsample_budget: f64,
}

impl BudgetStudyConfig {
    /// 512-pixel object: 256-px bands at 212-px interval, 256-px LTA field of
    /// view with ROIs 175 px apart.
    pub fn desk(seed: u64) -> Self {
        Self::scaled(512, seed)
    }

    pub fn scaled(diameter: usize, seed: u64) -> Self {
        let k = diameter as f64 / 512.0;
        BudgetStudyConfig {
            diameter,
            phantom_seed: seed,
            n_angles: crate::projector::crowther_angles(diameter),
            gamma: 0.85,
            soa_tile: (256.0 * k).round() as usize,
            soa_stride: (212.0 * k).round() as usize,
            soa_tiles: 3,
            lta_fov: (256.0 * k).round() as usize,
            lta_offset: (175.0 * k).round(),
            jitter: (4.0 * k).round().max(1.0) as i64,
            budgets: vec![3e3, 1e4, 3e4, 1e5, 3e5, 1e6, 3e6],
            trials: 20,
            seed,
            downsample_factors: vec![1, 2, 4, 8, 16],
            downsample_budget: 1e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::param("photon budgets must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::param("at least one trial is required"));
        }
        if self.soa_stride >= self.soa_tile || self.soa_tiles < 2 {
            return Err(Error::param(
                "SOA bands must overlap and number at least two",
            ));
        }
        if self
            .downsample_factors
            .iter()
            .any(|f| *f == 0 || !f.is_power_of_two())
        {
            return Err(Error::param("downsampling factors must be powers of two"));
        }
        if !(self.downsample_budget > 0.0) {
            return Err(Error::param("downsampling budget must be positive"));
        }
        let lens = LtaPairGeometry::new(self.lta_fov, self.gamma, self.lta_offset);
        if lens.along < 8 || lens.across < 8 {
            return Err(Error::param(
                "LTA ROIs are too far apart for their usable overlap",
            ));
        }
        Ok(())
    }

    /// `n_ph` per SOA scan for a budget.
    pub fn soa_photons(&self, budget: f64) -> f64 {
        budget / soa_scan_count(self.diameter as f64, self.soa_tile as f64, self.gamma) as f64
    }

    /// `n_ph` per LTA scan for a budget.
    pub fn lta_photons(&self, budget: f64) -> f64 {
        budget
            / (lta_scan_count(self.diameter as f64, self.lta_fov as f64, self.gamma) as f64).powi(2)
    }
}

/// Overlap window between two LTA ROIs `offset` apart: the bounding box of
/// the lens where their usable disks intersect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtaPairGeometry {
    /// Window extent along the line joining the ROI centers.
    pub along: usize,
    /// Window extent across it.
    pub across: usize,
}

impl LtaPairGeometry {
    pub fn new(fov: usize, gamma: f64, offset: f64) -> Self {
        let r = gamma * fov as f64 / 2.0;
        let along = (2.0 * r - offset).floor().max(0.0) as usize;
        let across = if offset / 2.0 < r {
            (2.0 * (r * r - offset * offset / 4.0).sqrt()).floor() as usize
        } else {
            0
        };
        LtaPairGeometry { along, across }
    }
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn summarize(axis: f64, strategy: Strategy, mut means: Vec<f64>) -> StudyRow {
    let n = means.len();
    let avg = means.iter().sum::<f64>() / n as f64;
    let std = (means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / n as f64).sqrt();
    means.sort_by(|a, b| a.total_cmp(b));
    let median = if n % 2 == 1 {
        means[n / 2]
    } else {
        0.5 * (means[n / 2 - 1] + means[n / 2])
    };
    StudyRow {
        axis,
        strategy,
        mean_error_px: median,
        std_error_px: std,
        trials: n,
    }
}

struct SoaTrial {
    bands: Vec<Sinogram>,
    /// True `start_{i+1} − start_i − stride`.
    truth: Vec<i64>,
    noise_seed: u64,
}

fn soa_trial(full: &Sinogram, cfg: &BudgetStudyConfig, trial: usize) -> Result<SoaTrial> {
    let mut rng = trial_rng(cfg.seed, 2 * trial as u64);
    let span = (cfg.soa_tiles - 1) * cfg.soa_stride + cfg.soa_tile;
    let first = (full.center() - span as f64 / 2.0).round() as i64;
    let jitter: Vec<i64> = (0..cfg.soa_tiles)
        .map(|_| rng.random_range(-cfg.jitter..=cfg.jitter))
        .collect();
    let mut bands = Vec::with_capacity(cfg.soa_tiles);
    for (i, j) in jitter.iter().enumerate() {
        let start = first + (i * cfg.soa_stride) as i64 + j;
        if start < 0 || start as usize + cfg.soa_tile > full.width() {
            return Err(Error::param("SOA study bands do not fit on the detector"));
        }
        bands.push(extract_band(full, start, cfg.soa_tile)?);
    }
    let truth = jitter.windows(2).map(|p| p[1] - p[0]).collect();
    Ok(SoaTrial {
        bands,
        truth,
        noise_seed: rng.random(),
    })
}

fn soa_error(
    trial: &SoaTrial,
    cfg: &BudgetStudyConfig,
    n_ph: Option<f64>,
    salt: u64,
) -> Result<f64> {
    let images: Vec<ImageGrid> = trial
        .bands
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let b = match n_ph {
                Some(n) => add_noise(
                    b,
                    &NoiseModel::new(n, trial.noise_seed ^ salt.wrapping_mul(0x9E37) ^ i as u64)?,
                )?,
                None => b.clone(),
            };
            Ok(ImageGrid::from_signed(b.values().clone()))
        })
        .collect::<Result<_>>()?;
    let chain = chain_register(&images, cfg.soa_stride)?;
    let errs: Vec<f64> = chain
        .pairwise
        .iter()
        .zip(&trial.truth)
        .map(|(est, t)| est.distance(OffsetVector::new(*t, 0)))
        .collect();
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// LTA registration trial: three ROIs (`A`, `A + (d, 0)`, `A + (0, d)`)
/// with jittered true centers.
struct LtaTrial {
    /// Local 180° sinograms at the true centers, resampled from the full
    /// sinogram.
    locals: Vec<Sinogram>,
    nominal: Vec<Point>,
    jitter: Vec<OffsetVector>,
    noise_seed: u64,
}

const LTA_PAIRS: [(usize, usize); 2] = [(0, 1), (0, 2)];

fn lta_trial(full: &Sinogram, cfg: &BudgetStudyConfig, trial: usize) -> Result<LtaTrial> {
    let mut rng = trial_rng(cfg.seed, 2 * trial as u64 + 1);
    let d = cfg.lta_offset;
    let a = Point::new(-d / 2.0, -d / 2.0);
    let nominal = vec![a, Point::new(a.x + d, a.y), Point::new(a.x, a.y + d)];
    let jitter: Vec<OffsetVector> = (0..3)
        .map(|_| {
            OffsetVector::new(
                rng.random_range(-cfg.jitter..=cfg.jitter),
                rng.random_range(-cfg.jitter..=cfg.jitter),
            )
        })
        .collect();
    let locals = nominal
        .iter()
        .zip(&jitter)
        .map(|(c, j)| {
            local_from_full(
                full,
                Point::new(c.x + j.dx as f64, c.y + j.dy as f64),
                cfg.lta_fov,
            )
        })
        .collect::<Result<_>>()?;
    Ok(LtaTrial {
        locals,
        nominal,
        jitter,
        noise_seed: rng.random(),
    })
}

/// Filtered, padded 360° local sinogram ready for backprojection.
struct Filtered {
    rows: ndarray::Array2<f64>,
    angles: Vec<f64>,
    center: f64,
}

fn prepare_local(local: &Sinogram) -> Result<Filtered> {
    let padded = pad_edges(&synthesize_360(local)?, TILE_PAD_FACTOR)?;
    Ok(Filtered {
        rows: filter_sinogram(&padded, Filter::RamLak),
        angles: padded.angles().to_vec(),
        center: padded.center(),
    })
}

fn window_grid(center: Point, width: usize, height: usize) -> OutputGrid {
    OutputGrid {
        width,
        height,
        x0: center.x - (width as f64 - 1.0) / 2.0,
        y0: center.y - (height as f64 - 1.0) / 2.0,
    }
}

fn lta_error(
    trial: &LtaTrial,
    cfg: &BudgetStudyConfig,
    locals: &[Sinogram],
    salt: u64,
    n_ph: Option<f64>,
) -> Result<f64> {
    let prepared: Vec<Filtered> = locals
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let l = match n_ph {
                Some(n) => add_noise(
                    l,
                    &NoiseModel::new(n, trial.noise_seed ^ salt.wrapping_mul(0x9E37) ^ i as u64)?,
                )?,
                None => l.clone(),
            };
            prepare_local(&l)
        })
        .collect::<Result<_>>()?;
    let lens = LtaPairGeometry::new(cfg.lta_fov, cfg.gamma, cfg.lta_offset);
    let mut total = 0.0;
    for &(p, q) in &LTA_PAIRS {
        let (cp, cq) = (trial.nominal[p], trial.nominal[q]);
        let mid = Point::new((cp.x + cq.x) / 2.0, (cp.y + cq.y) / 2.0);
        let horizontal = (cq.x - cp.x).abs() > (cq.y - cp.y).abs();
        let (w, h) = if horizontal {
            (lens.along, lens.across)
        } else {
            (lens.across, lens.along)
        };
        let render = |f: &Filtered, c: Point| {
            let grid = window_grid(mid - c, w, h);
            taper(
                &backproject(&f.rows, &f.angles, f.center, grid),
                STRIP_TAPER,
            )
        };
        let ia = render(&prepared[p], cp);
        let ib = render(&prepared[q], cq);
        let est = match phase_correlate(&ia, &ib) {
            Ok(t) => OffsetVector::new(-t.dx, -t.dy),
            Err(Error::Degenerate(_)) => OffsetVector::default(),
            Err(e) => return Err(e),
        };
        let (jp, jq) = (trial.jitter[p], trial.jitter[q]);
        total += est.distance(OffsetVector::new(jq.dx - jp.dx, jq.dy - jp.dy));
    }
    Ok(total / LTA_PAIRS.len() as f64)
}

fn study_phantom(cfg: &BudgetStudyConfig) -> Result<ImageGrid> {
    Ok(generate_phantom(&PhantomParams::scaled(cfg.diameter, cfg.phantom_seed))?.grid)
}

/// Mean registration error against photon budget for SOA and LTA.
///
/// SOA registers noisy sinogram bands on their shared strips; LTA registers
/// FBP reconstructions of noisy local scans over the lens where neighboring
/// usable disks overlap.
pub fn budget_study(cfg: &BudgetStudyConfig, strategies: &[Strategy]) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let image = study_phantom(cfg)?;
    budget_study_on(&image, cfg, strategies)
}

/// [`budget_study`] on a given object.
pub fn budget_study_on(
    image: &ImageGrid,
    cfg: &BudgetStudyConfig,
    strategies: &[Strategy],
) -> Result<Vec<StudyRow>> {
    let nb = cfg.budgets.len();
    let full = radon(image, &angles_180(cfg.n_angles), Point::ORIGIN)?;
    let mut rows = Vec::new();
    for &strategy in strategies {
        // per trial, one mean error per budget
        let per_trial: Vec<Vec<f64>> = match strategy {
            Strategy::Soa => (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let trial = soa_trial(&full, cfg, t)?;
                    cfg.budgets
                        .iter()
                        .enumerate()
                        .map(|(bi, &b)| soa_error(&trial, cfg, Some(cfg.soa_photons(b)), bi as u64))
                        .collect()
                })
                .collect::<Result<_>>()?,
            Strategy::Lta => (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let trial = lta_trial(&full, cfg, t)?;
                    cfg.budgets
                        .iter()
                        .enumerate()
                        .map(|(bi, &b)| {
                            lta_error(
                                &trial,
                                cfg,
                                &trial.locals,
                                bi as u64,
                                Some(cfg.lta_photons(b)),
                            )
                        })
                        .collect()
                })
                .collect::<Result<_>>()?,
        };
        for bi in 0..nb {
            let means = per_trial.iter().map(|v| v[bi]).collect();
            rows.push(summarize(cfg.budgets[bi], strategy, means));
        }
    }
    Ok(rows)
}

/// LTA mean registration error against angular downsampling at a fixed
/// budget. Local scans use `max_factor · ceil(N / max_factor)` angles so
/// every factor keeps an exact half turn.
pub fn angle_downsampling_study(cfg: &BudgetStudyConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let image = study_phantom(cfg)?;
    angle_study_on(&image, cfg)
}

/// [`angle_downsampling_study`] on a given object.
pub fn angle_study_on(image: &ImageGrid, cfg: &BudgetStudyConfig) -> Result<Vec<StudyRow>> {
    let max_factor = cfg.downsample_factors.iter().copied().max().unwrap_or(1);
    let base = max_factor * cfg.n_angles.div_ceil(max_factor);
    let n_ph = cfg.lta_photons(cfg.downsample_budget);
    let full = radon(image, &angles_180(base), Point::ORIGIN)?;
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let trial = lta_trial(&full, cfg, t)?;
            let noisy: Vec<Sinogram> = trial
                .locals
                .iter()
                .enumerate()
                .map(|(i, l)| add_noise(l, &NoiseModel::new(n_ph, trial.noise_seed ^ i as u64)?))
                .collect::<Result<_>>()?;
            cfg.downsample_factors
                .iter()
                .map(|&f| {
                    let reduced: Vec<Sinogram> = noisy
                        .iter()
                        .map(|s| s.downsample_angles(f))
                        .collect::<Result<_>>()?;
                    lta_error(&trial, cfg, &reduced, 0, None)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .downsample_factors
        .iter()
        .enumerate()
        .map(|(fi, &f)| {
            summarize(
                f as f64,
                Strategy::Lta,
                per_trial.iter().map(|v| v[fi]).collect(),
            )
        })
        .collect())
}

/// Settings of the error-accumulation demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulativeConfig {
    pub diameter: usize,
    pub phantom_seed: u64,
    pub n_angles: usize,
    pub bands: usize,
    pub band_width: usize,
    pub stride: usize,
    /// Band whose placement is taken as exact; it is centered on the axis.
    pub anchor: usize,
    /// Standard deviation of each pair's offset error.
    pub sigma: f64,
    pub seed: u64,
    pub roi_radius: f64,
    pub off_center: Point,
    pub lta_fov: usize,
    pub gamma: f64,
    /// Rigid misplacement tolerated by the RMSE comparison.
    pub max_shift: i64,
    /// Tune the rotation center of the perturbed stitch before FBP.
    pub refine_center: bool,
    pub refine_range: f64,
    pub refine_step: f64,
    pub refine_region: usize,
}

impl AccumulativeConfig {
    pub fn desk(seed: u64) -> Self {
        Self::scaled(512, seed)
    }

    pub fn scaled(diameter: usize, seed: u64) -> Self {
        let k = diameter as f64 / 512.0;
        AccumulativeConfig {
            diameter,
            phantom_seed: seed,
            n_angles: crate::projector::crowther_angles(diameter),
            bands: 8,
            band_width: (128.0 * k).round() as usize,
            stride: (96.0 * k).round() as usize,
            anchor: 4,
            sigma: 4.0,
            seed,
            roi_radius: (24.0 * k).round(),
            off_center: Point::new(0.0, -(190.0 * k).round()),
            lta_fov: (128.0 * k).round() as usize,
            gamma: 0.85,
            max_shift: 12,
            refine_center: true,
            refine_range: 5.0,
            refine_step: 0.5,
            refine_region: (64.0 * k).round() as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands < 2 || self.anchor >= self.bands || self.stride >= self.band_width {
            return Err(Error::param("invalid band layout"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::param("sigma must be >= 0"));
        }
        if self.off_center.norm() < self.diameter as f64 / 3.0 {
            return Err(Error::param(
                "off-center ROI must lie at least L/3 from the axis",
            ));
        }
        if self.off_center.norm() + self.roi_radius > self.diameter as f64 / 2.0 {
            return Err(Error::param("off-center ROI must lie inside the object"));
        }
        Ok(())
    }
}

/// RMSE of one ROI with and without offset errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiReport {
    pub baseline: f64,
    pub perturbed: f64,
    pub ratio: f64,
}

impl RoiReport {
    fn new(baseline: f64, perturbed: f64) -> Self {
        RoiReport {
            baseline,
            perturbed,
            ratio: perturbed / baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccumulativeReport {
    /// Error added to each neighboring pair's relative offset.
    pub pair_errors: Vec<i64>,
    pub true_offsets: Vec<i64>,
    pub placed_offsets: Vec<i64>,
    pub nominal_center: f64,
    pub refined_center: f64,
    pub soa_central: RoiReport,
    pub soa_off_center: RoiReport,
    /// Rigid placement errors of the two LTA tiles (central, off-center).
    pub lta_errors: Vec<(i64, i64)>,
    pub lta_central: RoiReport,
    pub lta_off_center: RoiReport,
    pub soa_baseline: ImageGrid,
    pub soa_perturbed: ImageGrid,
}

/// SOA bands stitched at offsets carrying accumulated Gaussian pair errors,
/// reconstructed about a center tuned on the central region, compared with
/// the correctly placed stitch; LTA tiles over the same ROIs displaced by
/// errors of the same size.
pub fn accumulative_demo(cfg: &AccumulativeConfig) -> Result<AccumulativeReport> {
    cfg.validate()?;
    let phantom = generate_phantom(&PhantomParams::scaled(cfg.diameter, cfg.phantom_seed))?;
    let full = radon(&phantom.grid, &angles_180(cfg.n_angles), Point::ORIGIN)?;
    accumulative_demo_on(&phantom.grid, &full, cfg)
}

/// [`accumulative_demo`] on a given object and its full 180° sinogram.
pub fn accumulative_demo_on(
    truth: &ImageGrid,
    full: &Sinogram,
    cfg: &AccumulativeConfig,
) -> Result<AccumulativeReport> {
    cfg.validate()?;
    let l = cfg.diameter;
    if truth.width() != l || truth.height() != l || full.n_angles() != cfg.n_angles {
        return Err(Error::param(
            "object or sinogram does not match the demo configuration",
        ));
    }
    let c0 = full.center();

    let anchor_start = c0 - cfg.band_width as f64 / 2.0;
    let starts: Vec<i64> = (0..cfg.bands)
        .map(|k| (anchor_start + (k as f64 - cfg.anchor as f64) * cfg.stride as f64).round() as i64)
        .collect();
    let bands: Vec<Sinogram> = starts
        .iter()
        .map(|&s| extract_band(full, s, cfg.band_width))
        .collect::<Result<_>>()?;
    let true_offsets: Vec<i64> = bands.iter().map(|b| band_offset(c0, b)).collect();

    let pair_errors = perturb_offsets(&vec![0; cfg.bands - 1], cfg.sigma, cfg.seed)?;
    let placed_offsets = super::accumulate_from_anchor(&true_offsets, &pair_errors, cfg.anchor)?;

    let baseline_sino = stitch_sinograms(&bands, &true_offsets, full.width(), c0, Blend::Feather)?;
    let perturbed_sino =
        stitch_sinograms(&bands, &placed_offsets, full.width(), c0, Blend::Feather)?;
    let refined_center = if cfg.refine_center {
        refine_center(
            &perturbed_sino,
            c0,
            cfg.refine_range,
            cfg.refine_step,
            cfg.refine_region,
        )?
    } else {
        c0
    };
    let soa_baseline = fbp(&baseline_sino, l, Filter::RamLak)?;
    let soa_perturbed = fbp(
        &perturbed_sino.with_center(refined_center),
        l,
        Filter::RamLak,
    )?;

    let rois = [Point::ORIGIN, cfg.off_center];
    let score = |img: &ImageGrid, c: Point| -> Result<f64> {
        Ok(shift_compensated_rmse(img, truth, c, cfg.roi_radius, cfg.max_shift)?.0)
    };
    let soa: Vec<RoiReport> = rois
        .iter()
        .map(|&c| {
            Ok(RoiReport::new(
                score(&soa_baseline, c)?,
                score(&soa_perturbed, c)?,
            ))
        })
        .collect::<Result<_>>()?;

    let shifts = perturb_offsets(&[0; 4], cfg.sigma, cfg.seed ^ 0x5EED)?;
    let lta_errors = vec![(shifts[0], shifts[1]), (shifts[2], shifts[3])];
    let mut lta = Vec::new();
    for (&c, &err) in rois.iter().zip(&lta_errors) {
        let local = local_from_full(full, c, cfg.lta_fov)?;
        let scan = LocalScan {
            sinogram: synthesize_360(&local)?,
            roi_center: c,
            image_width: l,
            image_height: l,
        };
        let tile = reconstruct_tile(&scan, cfg.gamma)?;
        let tiles = std::slice::from_ref(&tile);
        let placed = stitch_tiles(tiles, &StitchLayout::default(), None)?.image;
        let moved = stitch_tiles(
            tiles,
            &StitchLayout {
                shifts: Some(vec![err]),
            },
            None,
        )?
        .image;
        lta.push(RoiReport::new(score(&placed, c)?, score(&moved, c)?));
    }

    Ok(AccumulativeReport {
        pair_errors,
        true_offsets,
        placed_offsets,
        nominal_center: c0,
        refined_center,
        soa_central: soa[0],
        soa_off_center: soa[1],
        lta_errors,
        lta_central: lta[0],
        lta_off_center: lta[1],
        soa_baseline,
        soa_perturbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BudgetStudyConfig {
        BudgetStudyConfig {
            trials: 3,
            budgets: vec![50.0, 1e6],
            ..BudgetStudyConfig::scaled(128, 7)
        }
    }

    #[test]
    fn lens_geometry() {
        let g = LtaPairGeometry::new(256, 0.85, 175.0);
        assert_eq!((g.along, g.across), (42, 129));
        assert_eq!(LtaPairGeometry::new(100, 0.85, 200.0).across, 0);
    }

    #[test]
    fn photon_split() {
        let cfg = BudgetStudyConfig::desk(1);
        assert_eq!(cfg.soa_photons(300.0), 100.0);
        assert_eq!(cfg.lta_photons(320.0), 20.0);
    }

    #[test]
    fn noiseless_registration_is_exact() {
        let cfg = small();
        let image = study_phantom(&cfg).unwrap();
        let full = radon(&image, &angles_180(cfg.n_angles), Point::ORIGIN).unwrap();
        for t in 0..3 {
            let trial = soa_trial(&full, &cfg, t).unwrap();
            assert_eq!(soa_error(&trial, &cfg, None, 0).unwrap(), 0.0);
            let trial = lta_trial(&full, &cfg, t).unwrap();
            assert_eq!(
                lta_error(&trial, &cfg, &trial.locals, 0, None).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn studies_are_deterministic_and_shaped() {
        let cfg = small();
        let a = budget_study(&cfg, &[Strategy::Soa, Strategy::Lta]).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(
            a,
            budget_study(&cfg, &[Strategy::Soa, Strategy::Lta]).unwrap()
        );
        assert!(a.iter().all(|r| r.mean_error_px >= 0.0 && r.trials == 3));
        // near-infinite budget recovers the planted offsets
        assert_eq!(a[1].mean_error_px, 0.0);
        assert_eq!(a[3].mean_error_px, 0.0);
    }

    #[test]
    fn median_and_spread() {
        let r = summarize(1.0, Strategy::Soa, vec![3.0, 1.0, 2.0, 10.0]);
        assert_eq!(r.mean_error_px, 2.5);
        assert!(r.std_error_px > 0.0);
    }

    #[test]
    fn bad_config_rejected() {
        let mut cfg = small();
        cfg.budgets = vec![0.0];
        assert!(budget_study(&cfg, &[Strategy::Soa]).is_err());
        let mut cfg = small();
        cfg.downsample_factors = vec![3];
        assert!(angle_downsampling_study(&cfg).is_err());
    }

    #[test]
    fn accumulative_demo_zero_sigma_is_baseline() {
        let cfg = AccumulativeConfig {
            sigma: 0.0,
            ..AccumulativeConfig::scaled(128, 3)
        };
        let r = accumulative_demo(&cfg).unwrap();
        assert_eq!(r.placed_offsets, r.true_offsets);
        assert_eq!(r.lta_central.ratio, 1.0);
        assert!((r.soa_central.ratio - 1.0).abs() < 0.05);
    }
}
