//! Maximum adiabaticity of the five-site chain against the middle detuning,
//! numeric versus the second-order series.
//!
//!     cargo run --release --example adiabaticity [omega_t]

use ctap::adiabaticity::{adiabaticity_closed_form, adiabaticity_series, max_adiabaticity};
use ctap::model::PulseSchedule;

fn main() -> ctap::Result<()> {
    let area: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let s = PulseSchedule::unit(area)?;
    println!("Ωt = {area}, zero-detuning closed form 𝒜 = {:.8}", adiabaticity_closed_form(&s));
    println!("{:>6} {:>12} {:>12} {:>10} {:>8}", "Δ", "numeric", "series", "rel.err", "t*/t");
    for k in 0..=10 {
        let delta = 0.01 * k as f64;
        let peak = max_adiabaticity(&s, delta)?;
        let series = adiabaticity_series(&s, delta);
        println!(
            "{delta:>6.2} {:>12.8} {series:>12.8} {:>10.2e} {:>8.4}",
            peak.value,
            (peak.value - series).abs() / peak.value,
            peak.t / s.t_max()
        );
    }
    Ok(())
}
