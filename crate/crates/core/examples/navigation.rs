//! Trains the three navigation demonstrations and prints their reports.
//!
//! cargo run --release --example navigation

use qglow::navigation::{demo_case_i, demo_case_ii, demo_case_iii, NavigationReport};

fn main() -> qglow::Result<()> {
    println!("{}", NavigationReport::CSV_HEADER);
    for report in [demo_case_i(2, 100_000)?, demo_case_ii(1, 20_000)?, demo_case_iii(2, 50_000)?] {
        println!("{}", report.csv_row());
    }
    Ok(())
}
