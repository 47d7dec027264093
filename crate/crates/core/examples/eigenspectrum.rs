//! Ring eigenvalues across the protocol, and the midpoint doublet splitting.
//!
//!     cargo run --release --example eigenspectrum [delta]

use ctap::model::{build_ring, Detuning, PulseSchedule};
use ctap::spectrum::{eigendecompose, ring_midpoint_split, EigenLabel};

fn main() -> ctap::Result<()> {
    let delta: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let s = PulseSchedule::unit(100.0)?;
    let det = Detuning::antisymmetric(delta)?;

    println!("Δu = −Δd = {delta}");
    let labels: Vec<&str> = EigenLabel::RING.iter().map(|l| l.as_str()).collect();
    println!("{:>7} {}", "t", labels.iter().map(|l| format!("{l:>10}")).collect::<String>());
    for k in 0..=10 {
        let t = 10.0 * k as f64;
        let eig = eigendecompose(&build_ring(t, &s, det)?)?;
        let row: String = eig.eigenvalues.iter().map(|e| format!("{e:>10.5}")).collect();
        println!("{t:>7.1} {row}");
    }

    let eig = eigendecompose(&build_ring(50.0, &s, det)?)?;
    let numeric = eig.energy(EigenLabel::D0Plus).unwrap() - eig.energy(EigenLabel::D0Minus).unwrap();
    let split = ring_midpoint_split(s.omega_max(), delta);
    println!("\nmidpoint D0± gap: numeric {numeric:.8}, first order 2Δ/√5 = {:.8}", split.gap());
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:>9.5}")).collect::<String>();
    println!("D0+ numeric  {}", fmt(eig.vector(EigenLabel::D0Plus).unwrap().as_slice()));
    println!("D0+ analytic {}", fmt(split.plus.vector.as_slice()));
    Ok(())
}
