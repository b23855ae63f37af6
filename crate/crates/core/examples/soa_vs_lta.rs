//! Reconstructs a 256-px phantom both ways at one truncation ratio and scores
//! each against the FBP of the untruncated sinogram.
//!
//! cargo run --example soa_vs_lta -- [T]

use tomostitch::metrics::{lta_interior_ssim, ssim, SsimParams};
use tomostitch::plan::{build_plan, fov_for_truncation};
use tomostitch::projector::{angles_180, crowther_angles, radon};
use tomostitch::recon::{
    fbp, lta_tiles, soa_reconstruct, stitch_tiles, Acquisition, Filter, StitchLayout,
};
use tomostitch::{generate_phantom, PhantomParams, Point, Strategy};

fn main() -> tomostitch::Result<()> {
    let t: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.3);
    let l = 256;
    let n = crowther_angles(l);
    let phantom = generate_phantom(&PhantomParams::scaled(l, 4))?;
    let full = radon(&phantom.grid, &angles_180(n), Point::ORIGIN)?;
    let mask = phantom.object_mask();
    let reference = fbp(&full, l, Filter::RamLak)?;
    let params = SsimParams::for_reference(&reference, &mask)?;
    let fov = fov_for_truncation(t, l, 0.85);
    let acq = Acquisition::default();

    let soa = build_plan(Strategy::Soa, l, fov, 0.85, n)?;
    let (_, image) = soa_reconstruct(&full, &soa, &acq)?;
    println!(
        "SOA  f = {fov}, {} bands: SSIM {:.4}",
        soa.n_scans(),
        ssim(&image, &reference, &mask, &params)?
    );

    let lta = build_plan(Strategy::Lta, l, fov, 0.85, n)?;
    let tiles = lta_tiles(&full, &lta, &acq)?;
    let mosaic = stitch_tiles(&tiles, &StitchLayout::default(), Some(&mask))?;
    println!(
        "LTA  f = {fov}, {} tiles: SSIM {:.4}, tile interiors {:.4}",
        lta.n_scans(),
        ssim(&mosaic.image, &reference, &mask, &params)?,
        lta_interior_ssim(&tiles, &reference, l as f64, 0.5, &params)?
    );
    Ok(())
}
