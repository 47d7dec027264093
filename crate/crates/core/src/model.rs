//! Physical parameters and the tight-binding Hamiltonians of the interferometer.
//!
//! Units: ħ = 1, energies in units of `omega_max`, times in units of
//! `1/omega_max`. The ring basis is fixed as
//! `|1⟩, |2⟩, |3u⟩, |3d⟩, |4⟩, |5⟩` (indices 0..6) and the five-site
//! chain basis as `|1⟩..|5⟩` (indices 0..5). Every other module relies on
//! this ordering.

use std::f64::consts::PI;

use nalgebra::{Matrix5, Matrix6};

use crate::error::{CtapError, Result};

/// Number of sites in the ring.
pub const RING_DIM: usize = 6;
/// Number of sites in the chain limit.
pub const CHAIN_DIM: usize = 5;

/// Sites of the six-site ring, in basis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RingSite {
    One,
    Two,
    ThreeUp,
    ThreeDown,
    Four,
    Five,
}

impl RingSite {
    pub const ALL: [RingSite; RING_DIM] = [
        RingSite::One,
        RingSite::Two,
        RingSite::ThreeUp,
        RingSite::ThreeDown,
        RingSite::Four,
        RingSite::Five,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn label(self) -> &'static str {
        match self {
            RingSite::One => "1",
            RingSite::Two => "2",
            RingSite::ThreeUp => "3u",
            RingSite::ThreeDown => "3d",
            RingSite::Four => "4",
            RingSite::Five => "5",
        }
    }
}

/// Counter-intuitive squared-sinusoid pulse pair.
///
/// `Ω₁(t) = Ω_max sin²(πt / 2t_max)` drives the bonds (1,2), (3u,4), (3d,4);
/// `Ω₂(t) = Ω_max cos²(πt / 2t_max)` drives (2,3u), (2,3d), (4,5).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSchedule {
    omega_max: f64,
    t_max: f64,
}

impl PulseSchedule {
    pub fn new(omega_max: f64, t_max: f64) -> Result<Self> {
        let ok = omega_max.is_finite() && t_max.is_finite() && omega_max > 0.0 && t_max > 0.0;
        if !ok {
            return Err(CtapError::InvalidSchedule { omega_max, t_max });
        }
        Ok(Self { omega_max, t_max })
    }

    /// Schedule with `Ω_max = 1` and the given dimensionless product `Ω_max·t_max`.
    pub fn unit(omega_t: f64) -> Result<Self> {
        Self::new(1.0, omega_t)
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// The dimensionless adiabaticity knob `Ω_max·t_max`.
    pub fn area(&self) -> f64 {
        self.omega_max * self.t_max
    }

    /// Same `Ω_max`, different duration.
    pub fn with_t_max(&self, t_max: f64) -> Result<Self> {
        Self::new(self.omega_max, t_max)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && (0.0..=self.t_max).contains(&t) {
            Ok(())
        } else {
            Err(CtapError::TimeOutOfRange { t, t_max: self.t_max })
        }
    }

    /// `(Ω₁(t), Ω₂(t))`.
    pub fn amplitudes(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        Ok(self.amplitudes_unchecked(t))
    }

    /// `(dΩ₁/dt, dΩ₂/dt)`; the two always sum to zero.
    pub fn derivatives(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        let d1 = self.omega_max * PI / (2.0 * self.t_max) * (PI * t / self.t_max).sin();
        Ok((d1, -d1))
    }

    pub(crate) fn amplitudes_unchecked(&self, t: f64) -> (f64, f64) {
        let (s, c) = (PI * t / (2.0 * self.t_max)).sin_cos();
        (self.omega_max * s * s, self.omega_max * c * c)
    }
}

/// Middle-site detunings of the ring, `Δu` on |3u⟩ and `Δd` on |3d⟩.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Detuning {
    pub up: f64,
    pub down: f64,
}

impl Detuning {
    pub fn new(up: f64, down: f64) -> Result<Self> {
        for v in [up, down] {
            if !v.is_finite() {
                return Err(CtapError::InvalidDetuning(v));
            }
        }
        Ok(Self { up, down })
    }

    pub const fn zero() -> Self {
        Self { up: 0.0, down: 0.0 }
    }

    /// `Δu = Δ, Δd = −Δ`: the electrostatic Aharonov–Bohm line.
    pub fn antisymmetric(delta: f64) -> Result<Self> {
        Self::new(delta, -delta)
    }

    /// `Δu = Δd = Δ`.
    pub fn symmetric(delta: f64) -> Result<Self> {
        Self::new(delta, delta)
    }

    pub fn swapped(self) -> Self {
        Self { up: self.down, down: self.up }
    }
}

/// Instantaneous six-site Hamiltonian (real symmetric; all couplings are real).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingHamiltonian(pub Matrix6<f64>);

/// Instantaneous five-site chain Hamiltonian with a detuned middle site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainHamiltonian(pub Matrix5<f64>);

impl RingHamiltonian {
    /// Assembles the ring Hamiltonian from explicit pulse amplitudes.
    pub fn from_amplitudes(omega1: f64, omega2: f64, det: Detuning) -> Self {
        let mut h = Matrix6::zeros();
        let (s1, s2, s3u, s3d, s4, s5) = (0, 1, 2, 3, 4, 5);
        for (i, j, v) in [
            (s1, s2, omega1),
            (s3u, s4, omega1),
            (s3d, s4, omega1),
            (s2, s3u, omega2),
            (s2, s3d, omega2),
            (s4, s5, omega2),
        ] {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h[(s3u, s3u)] = det.up;
        h[(s3d, s3d)] = det.down;
        Self(h)
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }
}

impl ChainHamiltonian {
    pub fn from_amplitudes(omega1: f64, omega2: f64, delta: f64) -> Self {
        let mut h = Matrix5::zeros();
        for (i, j, v) in [(0, 1, omega1), (2, 3, omega1), (1, 2, omega2), (3, 4, omega2)] {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h[(2, 2)] = delta;
        Self(h)
    }

    pub fn matrix(&self) -> &Matrix5<f64> {
        &self.0
    }
}

/// Ring Hamiltonian at time `t` of the protocol.
pub fn build_ring(t: f64, schedule: &PulseSchedule, det: Detuning) -> Result<RingHamiltonian> {
    let (o1, o2) = schedule.amplitudes(t)?;
    Ok(RingHamiltonian::from_amplitudes(o1, o2, det))
}

/// Five-site chain Hamiltonian at time `t`, detuning `delta` on site 3.
///
/// This is the ring with one arm pushed infinitely far off resonance.
pub fn build_chain(t: f64, schedule: &PulseSchedule, delta: f64) -> Result<ChainHamiltonian> {
    if !delta.is_finite() {
        return Err(CtapError::InvalidDetuning(delta));
    }
    let (o1, o2) = schedule.amplitudes(t)?;
    Ok(ChainHamiltonian::from_amplitudes(o1, o2, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sched() -> PulseSchedule {
        PulseSchedule::new(1.0, 100.0).unwrap()
    }

    #[test]
    fn amplitudes_at_landmarks() {
        let s = PulseSchedule::new(2.5, 40.0).unwrap();
        assert_eq!(s.amplitudes(0.0).unwrap(), (0.0, 2.5));
        let (a, b) = s.amplitudes(40.0).unwrap();
        assert_relative_eq!(a, 2.5);
        assert!(b.abs() < 1e-15);
        let (a, b) = s.amplitudes(20.0).unwrap();
        assert_relative_eq!(a, 1.25, epsilon = 1e-15);
        assert_relative_eq!(b, 1.25, epsilon = 1e-15);
    }

    #[test]
    fn time_outside_window_is_rejected() {
        let s = sched();
        for t in [-1e-9, 100.0 + 1e-9, f64::NAN] {
            assert!(matches!(s.amplitudes(t), Err(CtapError::TimeOutOfRange { .. })));
            assert!(s.derivatives(t).is_err());
            assert!(build_ring(t, &s, Detuning::zero()).is_err());
        }
    }

    #[test]
    fn schedule_rejects_nonpositive() {
        assert!(PulseSchedule::new(0.0, 1.0).is_err());
        assert!(PulseSchedule::new(1.0, -1.0).is_err());
        assert!(PulseSchedule::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let s = PulseSchedule::new(1.3, 17.0).unwrap();
        let h = 1e-5;
        for &t in &[1.0, 4.25, 8.5, 12.0, 16.0] {
            let (d1, d2) = s.derivatives(t).unwrap();
            let fd1 = (s.amplitudes(t + h).unwrap().0 - s.amplitudes(t - h).unwrap().0) / (2.0 * h);
            let fd2 = (s.amplitudes(t + h).unwrap().1 - s.amplitudes(t - h).unwrap().1) / (2.0 * h);
            assert_relative_eq!(d1, fd1, max_relative = 1e-8);
            assert_relative_eq!(d2, fd2, max_relative = 1e-8);
        }
        assert_eq!(s.derivatives(0.0).unwrap(), (0.0, -0.0));
        let (d1, d2) = s.derivatives(8.5).unwrap();
        assert_relative_eq!(d1, PI * 1.3 / (2.0 * 17.0), max_relative = 1e-14);
        assert_eq!(d1 + d2, 0.0);
    }

    #[test]
    fn ring_entries() {
        let s = PulseSchedule::new(1.0, 10.0).unwrap();
        let det = Detuning::new(0.3, -0.7).unwrap();
        let h0 = build_ring(0.0, &s, det).unwrap();
        assert_eq!(h0.0[(0, 1)], 0.0);
        let hm = build_ring(5.0, &s, det).unwrap();
        assert_relative_eq!(hm.0[(1, 2)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(hm.0.trace(), -0.4, epsilon = 1e-15);
        // exactly the eight couplings of the ring, both triangles
        let nonzero_off = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && hm.0[(i, j)] != 0.0)
            .count();
        assert_eq!(nonzero_off, 12);
        for i in [0, 1, 4, 5] {
            assert_eq!(hm.0[(i, i)], 0.0);
        }
    }

    #[test]
    fn chain_entries() {
        let s = PulseSchedule::new(1.0, 10.0).unwrap();
        let h = build_chain(0.0, &s, 0.1).unwrap();
        assert_eq!(h.0[(0, 1)], 0.0);
        assert_eq!(h.0[(2, 2)], 0.1);
        assert_eq!(h.0, h.0.transpose());
    }

    proptest! {
        #[test]
        fn pulses_are_complementary(t in 0.0..1.0f64, om in 0.1..10.0f64, tm in 0.1..1000.0f64) {
            let s = PulseSchedule::new(om, tm).unwrap();
            let (a, b) = s.amplitudes(t * tm).unwrap();
            prop_assert!(((a + b) - om).abs() <= 1e-12 * om);
            let (da, db) = s.derivatives(t * tm).unwrap();
            prop_assert_eq!(da + db, 0.0);
        }

        #[test]
        fn ring_is_symmetric_and_swap_covariant(
            t in 0.0..1.0f64, du in -5.0..5.0f64, dd in -5.0..5.0f64,
        ) {
            let s = sched();
            let det = Detuning::new(du, dd).unwrap();
            let h = build_ring(t * 100.0, &s, det).unwrap().0;
            prop_assert_eq!(h, h.transpose());
            prop_assert!((h.trace() - (du + dd)).abs() < 1e-12);
            let mut p = h;
            p.swap_rows(2, 3);
            p.swap_columns(2, 3);
            prop_assert_eq!(p, build_ring(t * 100.0, &s, det.swapped()).unwrap().0);
        }
    }
}
