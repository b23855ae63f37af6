//! Generates the desk phantom and writes it as a raster and a PGM preview.
//!
//! cargo run --example phantom -- [seed] [out_dir]

use tomostitch::io::{export_pgm_auto, write_image};
use tomostitch::{generate_phantom, PhantomParams};

fn main() -> tomostitch::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "out/examples".into()));

    let phantom = generate_phantom(&PhantomParams::desk(seed))?;
    println!(
        "L = {}, {} pores, pore fraction {:.3}{}",
        phantom.diameter(),
        phantom.pores.len(),
        phantom.achieved_fraction,
        if phantom.budget_exhausted {
            " (attempt budget exhausted)"
        } else {
            ""
        }
    );
    println!(
        "LAC range [{:.5}, {:.5}] 1/px",
        phantom.grid.min(),
        phantom.grid.max()
    );

    write_image(out.join("phantom.mtr"), &phantom.grid)?;
    export_pgm_auto(&phantom.grid, out.join("phantom.pgm"))?;
    println!("wrote {}", out.join("phantom.{mtr,pgm}").display());
    Ok(())
}
