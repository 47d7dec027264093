//! Charge sensitivity: ∂ρ55/∂Δu near the first fringe and its growth with t_max.
//!
//!     cargo run --release --example sensitivity

use ctap::model::PulseSchedule;
use ctap::sweeps::{default_sensitivity_step, sensitivity_map, sensitivity_vs_time, Axis, SweepOptions};

fn main() -> ctap::Result<()> {
    let opts = SweepOptions::default();

    let s = PulseSchedule::unit(1000.0)?;
    let ax = Axis::linear(-0.03, 0.03, 13)?;
    let map = sensitivity_map(&s, &ax, &ax, default_sensitivity_step(&s), &opts)?;
    println!("∂ρ55/∂Δu along Δu = −Δd at Ωt = 1000 (δ = {:.1e}):", map.step);
    for i in 0..13 {
        println!("  Δu = {:>6.3}  {:>9.3}", map.axis1[i], map.get(i, 12 - i));
    }

    let t: Vec<f64> = (1..=10).map(|k| 100.0 * k as f64).collect();
    let sc = sensitivity_vs_time(1.0, &t, &opts)?;
    println!("\n{:>7} {:>9} {:>10}", "t_max", "Δ*", "|∂ρ/∂Δu|");
    for k in 0..t.len() {
        println!("{:>7.0} {:>9.5} {:>10.4}", sc.t_max[k], sc.delta[k], sc.sensitivity[k]);
    }
    println!("linear fit: slope {:.5}, intercept {:.4}, R² = {:.7}", sc.fit.slope, sc.fit.intercept, sc.fit.r_squared);
    Ok(())
}
