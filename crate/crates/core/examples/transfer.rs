//! Population transfer |1⟩ → |5⟩ through the ring.
//!
//!     cargo run --release --example transfer [omega_t] [delta_u] [delta_d]

use ctap::evolution::{propagate, transient_middle_population, Network, PropagateOptions, StateVector};
use ctap::model::{Detuning, PulseSchedule, RingSite, RING_DIM};

fn main() -> ctap::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let area = args.first().copied().unwrap_or(200.0);
    let det = Detuning::new(args.get(1).copied().unwrap_or(0.0), args.get(2).copied().unwrap_or(0.0))?;
    let s = PulseSchedule::unit(area)?;

    let opts = PropagateOptions { samples: 21, ..Default::default() };
    let traj = propagate(&s, Network::Ring(det), &opts, &StateVector::site(RING_DIM, 0)?)?;

    print!("{:>8}", "t");
    for site in RingSite::ALL {
        print!("{:>9}", format!("ρ{}", site.label()));
    }
    println!();
    for (t, p) in traj.times.iter().zip(&traj.populations) {
        println!("{t:>8.1}{}", p.iter().map(|x| format!("{x:>9.5}")).collect::<String>());
    }
    println!("\nfinal ρ55 = {:.9}", traj.final_population(RingSite::Five.index())?);
    println!("peak ρ3u + ρ3d = {:.4}", transient_middle_population(&traj)?);
    Ok(())
}
