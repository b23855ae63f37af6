//! Sinogram coverage of SOA and LTA scan plans on the desk geometry.
//!
//! Each map counts how many scans expose every (angle, column) sample of the
//! full sinogram over 360°.

use tomostitch::io::export_pgm_auto;
use tomostitch::plan::{build_plan, coverage_map};
use tomostitch::Strategy;

fn main() -> tomostitch::Result<()> {
    let out = std::path::PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "out/examples".into()),
    );
    for strategy in [Strategy::Soa, Strategy::Lta] {
        let plan = build_plan(strategy, 512, 128, 0.85, 805)?;
        let map = coverage_map(&plan);
        println!(
            "{strategy}: {} scans, acquired samples {}, max overlap {}",
            plan.n_scans(),
            map.acquired_total(),
            map.max()
        );
        export_pgm_auto(
            &map.to_image(),
            out.join(format!("coverage_{strategy}.pgm")),
        )?;
    }
    Ok(())
}
