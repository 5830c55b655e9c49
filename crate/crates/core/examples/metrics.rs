//! Distance and fidelity between a random unitary and nearby perturbations.
//!
//! cargo run --release --example metrics

use qglow::metrics::{avg_fidelity, channel_fidelity, distance_sq, KrausChannel};
use qglow::qmath::{herm_expm, random_hermitian, random_unitary, RngStream};

fn main() -> qglow::Result<()> {
    let mut rng = RngStream::new(1, 0);
    let u_t = random_unitary(4, &mut rng);
    let h = random_hermitian(4, &mut rng);
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "D", "F", "F_channel");
    for t in [0.0, 0.01, 0.1, 0.5, 1.0] {
        let u = herm_expm(&h, t)? * &u_t;
        let ch = KrausChannel::unitary(u.clone())?;
        println!(
            "{t:>6} {:>10.5} {:>10.5} {:>10.5}",
            distance_sq(&u, &u_t)?,
            avg_fidelity(&u, &u_t)?,
            channel_fidelity(&ch, &u_t)?
        );
    }
    Ok(())
}
