//! Interference maxima along Δu = −Δd and the fitted law Δn = f·n/t_max.
//!
//!     cargo run --release --example fringes

use ctap::model::PulseSchedule;
use ctap::sweeps::{antidiagonal_trace, fit_fringes, fringe_window, SweepOptions};

fn main() -> ctap::Result<()> {
    for area in [400.0, 1000.0, 2000.0] {
        let s = PulseSchedule::unit(area)?;
        let trace = antidiagonal_trace(&s, &fringe_window(area)?, &SweepOptions::default())?;
        let fit = fit_fringes(&trace, area)?;
        println!(
            "Ωt = {area:>6}: f = {:.3}, spacing {:.5}, worst residual {:.1}% of spacing",
            fit.factor,
            fit.mean_spacing,
            100.0 * fit.max_residual() / fit.mean_spacing
        );
        for (n, d) in fit.orders.iter().zip(&fit.positions) {
            println!("    n = {n}  Δn = {d:.6}  Δn·t_max = {:.3}", d * area);
        }
    }
    Ok(())
}
