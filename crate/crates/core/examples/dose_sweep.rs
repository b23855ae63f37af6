//! Data size `A` and dose `D` of both strategies against truncation ratio.

use tomostitch::plan::{default_truncation_grid, sweep_truncation};
use tomostitch::{disk_mask, Strategy};

fn main() -> tomostitch::Result<()> {
    let mask = disk_mask(512, 1.0);
    let rows = sweep_truncation(
        &[Strategy::Soa, Strategy::Lta],
        &default_truncation_grid(),
        &mask,
        0.85,
        805,
        None,
    )?;
    println!(
        "{:>4} {:>5} {:>4} {:>4} {:>11} {:>11}",
        "", "T", "f", "n_f", "A", "D"
    );
    for r in &rows {
        println!(
            "{:>4} {:>5.2} {:>4} {:>4} {:>11} {:>11}",
            r.strategy, r.t, r.fov, r.per_side, r.data_size, r.dose
        );
    }
    Ok(())
}
