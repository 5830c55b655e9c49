//! Single glow agent in the 3x3 grid world with a boundary penalty, with and without glow.
//!
//! cargo run --release --example grid_world

use qglow::runner::{glow_tail_average, preset, run_curve, Overrides};

fn main() -> qglow::Result<()> {
    for name in ["fig11c", "fig11d"] {
        let cfg = preset(name)?.with_overrides(&Overrides { budget: Some(3000), ..Default::default() });
        let curve = &cfg.resolve()?[0];
        let result = run_curve(curve)?;
        let tail = glow_tail_average(&result.agents[0].episode_lengths, 500)?;
        println!("{name}: eta = {}, last-500 mean episode length {tail:.1}", curve.agent.eta);
    }
    Ok(())
}
