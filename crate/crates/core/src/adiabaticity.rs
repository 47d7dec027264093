//! Adiabaticity of the five-site chain limit.
//!
//! `𝒜(t) = |⟨D+|∂H/∂t|D0⟩| / |E+ − E0|²`, with the eigenpairs taken from
//! the numeric decomposition and `∂H/∂t` assembled from the analytic pulse
//! derivatives. `𝒜 ≪ 1` means the transport state is followed adiabatically.

use std::f64::consts::PI;

use crate::error::{CtapError, Result};
use crate::model::{build_chain, ChainHamiltonian, PulseSchedule};
use crate::spectrum::{eigendecompose, EigenLabel};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Uniform samples used to bracket the maximum before refinement.
pub const MAX_SEARCH_POINTS: usize = 1001;
/// Golden-section refinement stops at this fraction of `t_max`.
pub const MAX_SEARCH_TOLERANCE: f64 = 1e-10;
/// Gaps below this fraction of `Ω_max` make the ratio undefined.
const GAP_FLOOR: f64 = 1e-12;

/// `𝒜(t)` sampled over the protocol.
#[derive(Clone, Debug)]
pub struct AdiabaticityTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Refined maximum over the protocol.
    pub max: AdiabaticityPeak,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticityPeak {
    pub t: f64,
    pub value: f64,
}

/// `𝒜` at time `t` for middle-site detuning `delta`.
pub fn adiabaticity_at(t: f64, schedule: &PulseSchedule, delta: f64) -> Result<f64> {
    let h = build_chain(t, schedule, delta)?;
    let eig = eigendecompose(&h)?;
    let (d1, d2) = schedule.derivatives(t)?;
    let dh = ChainHamiltonian::from_amplitudes(d1, d2, 0.0).0;

    let (e0, ep) = (eig.energy(EigenLabel::D0).unwrap(), eig.energy(EigenLabel::DPlus).unwrap());
    let gap = ep - e0;
    if gap.abs() < GAP_FLOOR * schedule.omega_max() {
        return Err(CtapError::DegenerateGap { t, gap });
    }
    let d0 = eig.vector(EigenLabel::D0).unwrap();
    let dp = eig.vector(EigenLabel::DPlus).unwrap();
    let coupling: f64 = (0..5).map(|i| (0..5).map(|j| dp[i] * dh[(i, j)] * d0[j]).sum::<f64>()).sum();
    Ok(coupling.abs() / (gap * gap))
}

/// Samples `𝒜` on `points` uniform times and refines the maximum.
pub fn adiabaticity_trace(schedule: &PulseSchedule, delta: f64, points: usize) -> Result<AdiabaticityTrace> {
    if points < 3 {
        return Err(CtapError::InvalidResolution(points));
    }
    let t_max = schedule.t_max();
    let times: Vec<f64> = (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect();
    let values = times.iter().map(|&t| adiabaticity_at(t, schedule, delta)).collect::<Result<Vec<_>>>()?;

    let (k, _) = values.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
        if v > best.1 {
            (k, v)
        } else {
            best
        }
    });
    let lo = times[k.saturating_sub(1)];
    let hi = times[(k + 1).min(points - 1)];
    let max = golden_max(|t| adiabaticity_at(t, schedule, delta), lo, hi, MAX_SEARCH_TOLERANCE * t_max)?;
    let max = if max.value >= values[k] { max } else { AdiabaticityPeak { t: times[k], value: values[k] } };
    Ok(AdiabaticityTrace { times, values, max })
}

/// Maximum of `𝒜` over the protocol.
pub fn max_adiabaticity(schedule: &PulseSchedule, delta: f64) -> Result<AdiabaticityPeak> {
    adiabaticity_trace(schedule, delta, MAX_SEARCH_POINTS).map(|tr| tr.max)
}

/// `4π / (√3 Ω_max t_max)`: the zero-detuning maximum, reached at `t_max/2`.
pub fn adiabaticity_closed_form(schedule: &PulseSchedule) -> f64 {
    4.0 * PI / (SQRT_3 * schedule.area())
}

/// Second-order expansion of the maximum in the detuning:
/// `4π/(√3Ωt) + 20πΔ/(3√3Ω²t) + 56πΔ²/(9√3Ω³t)`.
pub fn adiabaticity_series(schedule: &PulseSchedule, delta: f64) -> f64 {
    let x = delta / schedule.omega_max();
    adiabaticity_closed_form(schedule) * (1.0 + 5.0 * x / 3.0 + 14.0 * x * x / 9.0)
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<AdiabaticityPeak> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { AdiabaticityPeak { t: x1, value: f1 } } else { AdiabaticityPeak { t: x2, value: f2 } })
}
