//! Round trip of a sinogram through the raster format and its JSON sidecar.

use tomostitch::io::{read_sinogram, write_sinogram, HEADER_LEN};
use tomostitch::projector::{angles_180, radon};
use tomostitch::{generate_phantom, PhantomParams, Point};

fn main() -> tomostitch::Result<()> {
    let dir = std::env::temp_dir().join("tomostitch-raster-example");
    let phantom = generate_phantom(&PhantomParams::scaled(64, 1))?;
    let sino = radon(&phantom.grid, &angles_180(101), Point::ORIGIN)?;
    let path = dir.join("sino.mtr");
    write_sinogram(&path, &sino, None)?;
    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    let (back, meta) = read_sinogram(&path)?;
    let worst = (back.values() - sino.values())
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    println!(
        "{} x {} sinogram, {bytes} bytes ({HEADER_LEN}-byte header)",
        back.n_angles(),
        back.width()
    );
    println!(
        "center {}, {} angles in sidecar, max f32 rounding error {worst:.2e}",
        meta.center,
        meta.angles.len()
    );
    Ok(())
}
