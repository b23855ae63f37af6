//! Registration error against photon budget on a 256-px object.

use tomostitch::register::{budget_study, BudgetStudyConfig};
use tomostitch::Strategy;

fn main() -> tomostitch::Result<()> {
    let cfg = BudgetStudyConfig {
        trials: 5,
        budgets: vec![1e4, 1e5, 1e6],
        ..BudgetStudyConfig::scaled(256, 2)
    };
    println!("budget  strategy  median error (px)  spread");
    for r in budget_study(&cfg, &[Strategy::Soa, Strategy::Lta])? {
        println!(
            "{:>7.0e}  {:>8}  {:>17.2}  {:>6.2}",
            r.axis, r.strategy, r.mean_error_px, r.std_error_px
        );
    }
    Ok(())
}
