//! Two-symbol invasion game: final mean reward for 1, 4 and 16 controls.
//!
//! cargo run --release --example invasion_game

use qglow::runner::{preset, run_ensemble, Metric, Overrides};

fn main() -> qglow::Result<()> {
    let mut cfg = preset("fig5a")?.with_overrides(&Overrides { agents: Some(20), ..Default::default() });
    cfg.curves.retain(|c| ["controls_1", "controls_4", "controls_16"].contains(&c.label.as_str()));
    for result in run_ensemble(&cfg)? {
        let r = result.final_mean(Metric::Reward).unwrap_or(f64::NAN);
        println!("{:>12}  final reward {r:.3}", result.config.label);
    }
    Ok(())
}
