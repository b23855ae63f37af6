//! Stages behind the subcommands. `all` runs them in order on one shared
//! phantom and full sinogram.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{lta_interior_ssim, ssim, SsimParams};
use crate::phantom::{disk_mask, generate_phantom, ImageGrid, Phantom, Point};
use crate::plan::{
    build_plan, coverage_map, fov_for_truncation, sweep_truncation, Strategy, SweepRow,
};
use crate::projector::{angles_180, radon, NoiseModel, Sinogram};
use crate::recon::{fbp, lta_tiles, soa_reconstruct, stitch_tiles, Acquisition, StitchLayout};
use crate::register::{
    accumulative_demo_on, angle_study_on, budget_study_on, AccumulativeReport, StudyRow,
};

/// Files written by a run, relative to the output directory.
#[derive(Debug, Default)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Artifacts {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.claim(name);
        io::write_csv(p, rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.claim(name);
        io::write_json(p, value)
    }

    /// Raster plus an auto-scaled PGM preview.
    pub fn image(&mut self, stem: &str, image: &ImageGrid) -> Result<()> {
        let p = self.claim(&format!("{stem}.mtr"));
        io::write_image(p, image)?;
        let p = self.claim(&format!("{stem}.pgm"));
        io::export_pgm_auto(image, p)
    }

    pub fn sinogram(&mut self, stem: &str, sino: &Sinogram) -> Result<()> {
        let p = self.claim(&format!("{stem}.mtr"));
        io::write_sinogram(&p, sino, None)?;
        self.claim(&format!("{stem}.json"));
        Ok(())
    }

    pub fn records(&self) -> Result<Vec<ArtifactRecord>> {
        self.files
            .iter()
            .map(|f| {
                let p = self.dir.join(f);
                let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
                Ok(ArtifactRecord {
                    path: f.clone(),
                    bytes: bytes.len() as u64,
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect()
    }
}

/// Phantom and full 180° sinogram for one seed.
#[derive(Debug, Clone)]
pub struct Scene {
    pub phantom: Phantom,
    pub full: Sinogram,
}

impl Scene {
    pub fn build(cfg: &ExperimentConfig, seed: u64) -> Result<Scene> {
        let phantom = generate_phantom(&cfg.phantom_params(seed))?;
        let full = radon(&phantom.grid, &angles_180(cfg.n_angles()), Point::ORIGIN)?;
        Ok(Scene { phantom, full })
    }
}

/// Run state: the resolved configuration and the lazily built main scene.
pub struct Context {
    pub cfg: ExperimentConfig,
    scene: OnceLock<Scene>,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Self {
        Context {
            cfg,
            scene: OnceLock::new(),
        }
    }

    pub fn scene(&self) -> Result<&Scene> {
        if let Some(s) = self.scene.get() {
            return Ok(s);
        }
        let s = Scene::build(&self.cfg, self.cfg.seed)?;
        Ok(self.scene.get_or_init(|| s))
    }

    fn scene_for(&self, seed: u64) -> Result<std::borrow::Cow<'_, Scene>> {
        if seed == self.cfg.seed {
            Ok(std::borrow::Cow::Borrowed(self.scene()?))
        } else {
            Ok(std::borrow::Cow::Owned(Scene::build(&self.cfg, seed)?))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PhantomSummary<'a> {
    params: &'a crate::phantom::PhantomParams,
    pores: usize,
    achieved_fraction: f64,
    budget_exhausted: bool,
    n_angles: usize,
    detector_width: usize,
}

pub fn phantom_stage(ctx: &Context, art: &mut Artifacts) -> Result<()> {
    let scene = ctx.scene()?;
    let p = &scene.phantom;
    art.image("phantom", &p.grid)?;
    art.sinogram("sinogram_full", &scene.full)?;
    art.json(
        "phantom.json",
        &PhantomSummary {
            params: &p.params,
            pores: p.pores.len(),
            achieved_fraction: p.achieved_fraction,
            budget_exhausted: p.budget_exhausted,
            n_angles: scene.full.n_angles(),
            detector_width: scene.full.width(),
        },
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageSummary {
    pub strategy: Strategy,
    pub fov: usize,
    pub per_side: usize,
    pub n_scans: usize,
    pub total: u64,
    pub acquired_total: u64,
    pub max: u32,
}

pub fn coverage_stage(ctx: &Context, art: &mut Artifacts) -> Result<Vec<CoverageSummary>> {
    let cfg = &ctx.cfg;
    let mut out = Vec::new();
    for strategy in cfg.scan.strategy.strategies() {
        let plan = build_plan(
            strategy,
            cfg.diameter(),
            cfg.scan.fov,
            cfg.gamma(strategy),
            cfg.n_angles(),
        )?;
        let map = coverage_map(&plan);
        art.image(&format!("coverage_{strategy}"), &map.to_image())?;
        out.push(CoverageSummary {
            strategy,
            fov: plan.fov,
            per_side: plan.per_side,
            n_scans: plan.n_scans(),
            total: map.total(),
            acquired_total: map.acquired_total(),
            max: map.max(),
        });
    }
    art.csv("coverage.csv", &out)?;
    Ok(out)
}

/// Data size and dose over the truncation grid.
pub fn sweep_stage(ctx: &Context, art: &mut Artifacts) -> Result<Vec<SweepRow>> {
    let cfg = &ctx.cfg;
    let mask = disk_mask(cfg.diameter(), 1.0);
    let mut rows = Vec::new();
    // each strategy keeps its own gamma
    for strategy in cfg.scan.strategy.strategies() {
        rows.extend(sweep_truncation(
            &[strategy],
            &cfg.sweep.truncation_grid,
            &mask,
            cfg.gamma(strategy),
            cfg.n_angles(),
            cfg.sweep.physical.as_ref(),
        )?);
    }
    art.csv("sweep.csv", &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconRow {
    pub seed: u64,
    pub t: f64,
    pub strategy: Strategy,
    pub fov: usize,
    pub n_scans: usize,
    /// Photons per scan, when noisy.
    pub n_ph: Option<f64>,
    /// SSIM against the full-sinogram FBP over the object.
    pub ssim: f64,
    /// SSIM against the phantom over the object.
    pub ssim_phantom: f64,
    /// LTA: mean SSIM over tile interiors against the FBP reference.
    pub interior_ssim: Option<f64>,
    /// SOA: max |stitched − full| over the sinogram.
    pub reassembly_error: Option<f64>,
    /// LTA: object pixels no tile covered.
    pub uncovered: Option<usize>,
}

/// Output of [`reconstruct_study`]: the rows, plus the reference and per
/// `(strategy, t)` images for the first seed.
#[derive(Debug, Clone)]
pub struct ReconOutput {
    pub rows: Vec<ReconRow>,
    pub reference: Option<ImageGrid>,
    pub images: Vec<(Strategy, f64, ImageGrid)>,
}

fn noise_seed(seed: u64, t_index: usize, strategy: Strategy) -> u64 {
    let s = match strategy {
        Strategy::Soa => 0,
        Strategy::Lta => 1,
    };
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((t_index as u64) << 8 | s)
}

/// SOA and LTA reconstructions at each configured truncation ratio, scored
/// against the full-sinogram FBP and the phantom.
pub fn reconstruct_scene(
    cfg: &ExperimentConfig,
    scene: &Scene,
    strategies: &[Strategy],
    noisy: bool,
    keep_images: bool,
) -> Result<ReconOutput> {
    let l = cfg.diameter();
    let seed = scene.phantom.seed();
    let mask = scene.phantom.object_mask();
    let reference = fbp(&scene.full, l, cfg.reconstruct.filter)?;
    let ref_params = cfg.ssim_params(SsimParams::for_reference(&reference, &mask)?.dynamic_range);
    let ph_params =
        cfg.ssim_params(SsimParams::for_reference(&scene.phantom.grid, &mask)?.dynamic_range);
    let mut rows = Vec::new();
    let mut images = Vec::new();
    for &strategy in strategies {
        let gamma = cfg.gamma(strategy);
        for (ti, &t) in cfg.reconstruct.truncations.iter().enumerate() {
            let fov = fov_for_truncation(t, l, gamma);
            let plan = build_plan(strategy, l, fov, gamma, cfg.n_angles())?;
            let n_ph = noisy.then(|| match cfg.noise.budget {
                Some(b) => b / plan.n_scans() as f64,
                None => cfg.noise.n_ph,
            });
            let acq = Acquisition {
                noise: n_ph
                    .map(|n| NoiseModel::new(n, noise_seed(seed, ti, strategy)))
                    .transpose()?,
                filter: cfg.reconstruct.filter,
                blend: cfg.reconstruct.blend,
            };
            let (image, interior, reassembly, uncovered) = match strategy {
                Strategy::Soa => {
                    let (stitched, image) = soa_reconstruct(&scene.full, &plan, &acq)?;
                    let err = (stitched.values() - scene.full.values())
                        .iter()
                        .fold(0.0f64, |m, v| m.max(v.abs()));
                    (image, None, Some(err), None)
                }
                Strategy::Lta => {
                    let tiles = lta_tiles(&scene.full, &plan, &acq)?;
                    let mosaic = stitch_tiles(&tiles, &StitchLayout::default(), Some(&mask))?;
                    let interior = lta_interior_ssim(
                        &tiles,
                        &reference,
                        l as f64,
                        cfg.reconstruct.interior_fraction,
                        &ref_params,
                    )?;
                    (
                        mosaic.image,
                        Some(interior),
                        None,
                        Some(mosaic.uncovered.len()),
                    )
                }
            };
            rows.push(ReconRow {
                seed,
                t,
                strategy,
                fov,
                n_scans: plan.n_scans(),
                n_ph,
                ssim: ssim(&image, &reference, &mask, &ref_params)?,
                ssim_phantom: ssim(&image, &scene.phantom.grid, &mask, &ph_params)?,
                interior_ssim: interior,
                reassembly_error: reassembly,
                uncovered,
            });
            if keep_images {
                images.push((strategy, t, image));
            }
        }
    }
    Ok(ReconOutput {
        rows,
        reference: keep_images.then_some(reference),
        images,
    })
}

/// [`reconstruct_scene`] over every configured seed.
pub fn reconstruct_study(
    ctx: &Context,
    strategies: &[Strategy],
    noisy: bool,
) -> Result<ReconOutput> {
    let mut out: Option<ReconOutput> = None;
    for seed in ctx.cfg.reconstruct_seeds() {
        let scene = ctx.scene_for(seed)?;
        let r = reconstruct_scene(&ctx.cfg, &scene, strategies, noisy, out.is_none())?;
        match &mut out {
            None => out = Some(r),
            Some(o) => o.rows.extend(r.rows),
        }
    }
    out.ok_or_else(|| Error::param("no reconstruction seeds"))
}

pub fn reconstruct_stage(
    ctx: &Context,
    art: &mut Artifacts,
    strategies: &[Strategy],
    noisy: bool,
) -> Result<Vec<ReconRow>> {
    let out = reconstruct_study(ctx, strategies, noisy)?;
    if let Some(r) = &out.reference {
        art.image("recon_reference", r)?;
    }
    for (s, t, img) in &out.images {
        art.image(&format!("recon_{s}_t{t:.2}"), img)?;
    }
    art.csv("reconstruct.csv", &out.rows)?;
    Ok(out.rows)
}

pub fn register_budget_stage(
    ctx: &Context,
    art: &mut Artifacts,
    strategies: &[Strategy],
) -> Result<Vec<StudyRow>> {
    let cfg = ctx.cfg.budget_study();
    cfg.validate()?;
    let rows = budget_study_on(&ctx.scene()?.phantom.grid, &cfg, strategies)?;
    art.csv("register_budget.csv", &rows)?;
    Ok(rows)
}

pub fn register_angles_stage(ctx: &Context, art: &mut Artifacts) -> Result<Vec<StudyRow>> {
    let cfg = ctx.cfg.budget_study();
    cfg.validate()?;
    let rows = angle_study_on(&ctx.scene()?.phantom.grid, &cfg)?;
    art.csv("register_angles.csv", &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
struct PerturbRow {
    method: Strategy,
    roi: &'static str,
    center_x: f64,
    center_y: f64,
    baseline_rmse: f64,
    perturbed_rmse: f64,
    ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
struct PerturbSummary<'a> {
    sigma: f64,
    pair_errors: &'a [i64],
    true_offsets: &'a [i64],
    placed_offsets: &'a [i64],
    nominal_center: f64,
    refined_center: f64,
    lta_errors: &'a [(i64, i64)],
}

pub fn perturb_stage(ctx: &Context, art: &mut Artifacts) -> Result<AccumulativeReport> {
    let cfg = ctx.cfg.accumulative();
    let scene = ctx.scene()?;
    let r = accumulative_demo_on(&scene.phantom.grid, &scene.full, &cfg)?;
    let row = |method, roi, c: Point, rep: &crate::register::RoiReport| PerturbRow {
        method,
        roi,
        center_x: c.x,
        center_y: c.y,
        baseline_rmse: rep.baseline,
        perturbed_rmse: rep.perturbed,
        ratio: rep.ratio,
    };
    let rows = vec![
        row(Strategy::Soa, "central", Point::ORIGIN, &r.soa_central),
        row(
            Strategy::Soa,
            "off_center",
            cfg.off_center,
            &r.soa_off_center,
        ),
        row(Strategy::Lta, "central", Point::ORIGIN, &r.lta_central),
        row(
            Strategy::Lta,
            "off_center",
            cfg.off_center,
            &r.lta_off_center,
        ),
    ];
    art.csv("perturb.csv", &rows)?;
    art.json(
        "perturb.json",
        &PerturbSummary {
            sigma: cfg.sigma,
            pair_errors: &r.pair_errors,
            true_offsets: &r.true_offsets,
            placed_offsets: &r.placed_offsets,
            nominal_center: r.nominal_center,
            refined_center: r.refined_center,
            lta_errors: &r.lta_errors,
        },
    )?;
    art.image("perturb_soa_baseline", &r.soa_baseline)?;
    art.image("perturb_soa_perturbed", &r.soa_perturbed)?;
    Ok(r)
}
