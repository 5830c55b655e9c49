//! Tabular projective simulation on the two-symbol invasion game.
//!
//! cargo run --release --example ps_baseline

use qglow::baselines::ps::{EdgeTable, PolicyKind};
use qglow::qmath::RngStream;

fn main() -> qglow::Result<()> {
    let mut rng = RngStream::new(1, 0);
    let mut table = EdgeTable::new(2, 2, 0.0, 1.0, 1.0, PolicyKind::Linear)?;
    let mut correct = 0;
    for cycle in 1..=2000 {
        let s = rng.index(2);
        let a = table.act(s, &mut rng)?;
        let r = if a == s { 1.0 } else { 0.0 };
        table.ps_update(s, a, r);
        correct += (a == s) as usize;
        if cycle % 400 == 0 {
            println!("cycle {cycle:>4}  success rate {:.3}  p(a=s|s=0) {:.3}", correct as f64 / 400.0, table.ps_policy(0)?[0]);
            correct = 0;
        }
    }
    Ok(())
}
