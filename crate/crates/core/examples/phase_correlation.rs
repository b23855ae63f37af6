//! Recovers a known translation between two crops of the phantom.

use ndarray::s;
use tomostitch::register::{phase_correlate, taper};
use tomostitch::{generate_phantom, ImageGrid, PhantomParams};

fn main() -> tomostitch::Result<()> {
    let phantom = generate_phantom(&PhantomParams::scaled(256, 6))?;
    let v = phantom.grid.values();
    let (dx, dy) = (7, -5);
    let a = ImageGrid::from_signed(v.slice(s![80..176, 80..176]).to_owned());
    // b(x) = a(x - t): b's window starts t earlier
    let b = ImageGrid::from_signed(v.slice(s![80 - dy..176 - dy, 80 - dx..176 - dx]).to_owned());
    let t = phase_correlate(&taper(&a, 0.25), &taper(&b, 0.25))?;
    println!("planted ({dx}, {dy}), recovered ({}, {})", t.dx, t.dy);
    Ok(())
}
