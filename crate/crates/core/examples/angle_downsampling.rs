//! LTA registration error as the number of projection angles drops.

use tomostitch::register::{angle_downsampling_study, BudgetStudyConfig};

fn main() -> tomostitch::Result<()> {
    let cfg = BudgetStudyConfig {
        trials: 5,
        downsample_factors: vec![1, 4, 16, 64],
        downsample_budget: 3e5,
        ..BudgetStudyConfig::scaled(256, 3)
    };
    for r in angle_downsampling_study(&cfg)? {
        println!("1/{:<2} of the angles: {:.2} px", r.axis, r.mean_error_px);
    }
    Ok(())
}
