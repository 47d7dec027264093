//! ρ55 over (Δu, Δd), written as long-format CSV.
//!
//!     cargo run --release --example population_map [omega_t] [resolution] [out.csv]

use ctap::model::PulseSchedule;
use ctap::sweeps::{population_map, Axis, SweepOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let area: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(400.0);
    let n: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(81);
    let path = args.next().unwrap_or_else(|| "population_map.csv".into());

    let s = PulseSchedule::unit(area)?;
    let ax = Axis::linear(-1.0, 1.0, n)?;
    let start = std::time::Instant::now();
    let map = population_map(&s, &ax, &ax, &SweepOptions::default())?;
    eprintln!("{n}×{n} map at Ωt = {area} in {:.1?}", start.elapsed());

    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["delta_u", "delta_d", "rho_55"])?;
    for (i, du) in map.axis1.iter().enumerate() {
        for (j, dd) in map.axis2.iter().enumerate() {
            w.write_record([du.to_string(), dd.to_string(), map.get(i, j).to_string()])?;
        }
    }
    w.flush()?;

    let anti = map.antidiagonal().unwrap();
    let dips = (1..n - 1).filter(|&i| anti[i] < anti[i - 1] && anti[i] <= anti[i + 1] && anti[i] < 0.5).count();
    println!("wrote {path}");
    println!("transpose asymmetry {:.1e}", map.transpose_asymmetry().unwrap());
    println!("centre ρ55 {:.6}, antidiagonal dips below 0.5: {dips}", map.get(n / 2, n / 2));
    Ok(())
}
