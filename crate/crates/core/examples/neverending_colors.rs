//! One agent facing a fresh random color every cycle; prints the running
//! reward and the control norm.
//!
//! cargo run --release --example neverending_colors

use qglow::runner::{preset, run_ensemble, Metric, Overrides};

fn main() -> qglow::Result<()> {
    let mut cfg = preset("fig9")?.with_overrides(&Overrides { budget: Some(20_000), ..Default::default() });
    cfg.record_every = 2000;
    let result = run_ensemble(&cfg)?.remove(0);
    let rewards = result.means(Metric::Reward).unwrap_or_default();
    let norms = result.means(Metric::ControlNorm).unwrap_or_default();
    for ((rec, r), h) in result.records.iter().zip(rewards).zip(norms) {
        println!("cycle {:>6}  reward {r:+.3}  |h| {h:.3}", rec.x);
    }
    Ok(())
}
