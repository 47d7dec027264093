//! ρ55 over (t_max, Δ) on the antisymmetric line: fringes tighten as t_max grows.
//!
//!     cargo run --release --example time_sweep

use ctap::sweeps::{time_detuning_sweep, Axis, SweepOptions};

fn main() -> ctap::Result<()> {
    let t = Axis::linear(200.0, 2000.0, 10)?;
    let d = Axis::linear(0.0, 0.3, 301)?;
    let map = time_detuning_sweep(1.0, &t, &d, &SweepOptions::default())?;
    println!("{:>7} {:>8} {:>10} {:>10}", "t_max", "maxima", "first Δ1", "mean ρ55");
    for (i, t_max) in map.axis1.iter().enumerate() {
        let row = map.row(i);
        let maxima: Vec<usize> = (1..row.len() - 1).filter(|&j| row[j] > row[j - 1] && row[j] >= row[j + 1]).collect();
        let first = maxima.first().map(|&j| map.axis2[j]).unwrap_or(f64::NAN);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        println!("{t_max:>7.0} {:>8} {first:>10.4} {mean:>10.4}", maxima.len());
    }
    Ok(())
}
