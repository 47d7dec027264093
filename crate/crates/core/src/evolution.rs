//! Time-dependent Schrödinger integration over the pulse protocol.
//!
//! Two integrators share one stepping loop:
//!
//! * [`Integrator::Magnus4`] (default): fourth-order commutator-free Magnus
//!   scheme. Each step applies two exponentials of Hamiltonians sampled at
//!   the Gauss–Legendre nodes; the exponentials act on the state through a
//!   Taylor series summed to machine precision, using the sparse hopping
//!   structure directly.
//! * [`Integrator::Midpoint`]: the Hamiltonian is frozen at each step
//!   midpoint and its exponential applied exactly through a dense symmetric
//!   eigendecomposition. Second order in `δt`.
//!
//! Both are unitary to rounding. The two exponential routes share no code,
//! so they check each other in the tests.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CtapError, Result};
use crate::model::{ChainHamiltonian, Detuning, PulseSchedule, RingHamiltonian, CHAIN_DIM, RING_DIM};

/// Output samples kept in a [`Trajectory`] by default.
pub const DEFAULT_SAMPLES: usize = 500;
/// Largest tolerated change of the final ρ₅₅ when the step count is doubled.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

const NORM_TOLERANCE: f64 = 1e-9;

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Integrator {
    #[default]
    Magnus4,
    Midpoint,
}

impl Integrator {
    /// `(minimum steps, steps per unit Ω_max·t_max)` of the automatic rule.
    pub const fn auto_rule(self) -> (usize, f64) {
        match self {
            Integrator::Magnus4 => (MAGNUS_MIN_STEPS, MAGNUS_STEPS_PER_AREA),
            Integrator::Midpoint => (2000, 40.0),
        }
    }
}

const MAGNUS_MIN_STEPS: usize = 400;
const MAGNUS_STEPS_PER_AREA: f64 = 4.0;

/// Which tight-binding network to evolve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Network {
    /// Six-site ring with detunings on |3u⟩, |3d⟩.
    Ring(Detuning),
    /// Five-site chain with detuning on the middle site.
    Chain(f64),
}

impl Network {
    pub fn dim(&self) -> usize {
        match self {
            Network::Ring(_) => RING_DIM,
            Network::Chain(_) => CHAIN_DIM,
        }
    }

    /// Index of the end-of-chain site |5⟩.
    pub fn target(&self) -> usize {
        self.dim() - 1
    }
}

impl From<Detuning> for Network {
    fn from(d: Detuning) -> Self {
        Network::Ring(d)
    }
}

/// Site amplitudes in the fixed basis order of [`crate::model`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    /// The particle localized on one site.
    pub fn site(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(CtapError::SiteOutOfRange { index, dim });
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn population(&self, index: usize) -> Result<f64> {
        self.0
            .get(index)
            .map(|a| a.norm_sqr())
            .ok_or(CtapError::SiteOutOfRange { index, dim: self.dim() })
    }
}

/// Step count policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Steps {
    /// `max(min, ceil(rate·Ω_max·t_max))` with the integrator's [`Integrator::auto_rule`].
    #[default]
    Auto,
    Fixed(usize),
}

/// Integrator plus step count: everything needed to turn a protocol into ρ₅₅.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Stepper {
    pub integrator: Integrator,
    pub steps: Steps,
}

impl Stepper {
    pub fn new(integrator: Integrator, steps: Steps) -> Self {
        Self { integrator, steps }
    }

    pub fn fixed(steps: usize) -> Self {
        Self { integrator: Integrator::default(), steps: Steps::Fixed(steps) }
    }

    pub fn resolve(&self, schedule: &PulseSchedule) -> usize {
        match self.steps {
            Steps::Auto => default_steps(self.integrator, schedule),
            Steps::Fixed(n) => n,
        }
    }

    /// Same integrator at twice the resolved step count.
    pub fn doubled(&self, schedule: &PulseSchedule) -> Self {
        Self { integrator: self.integrator, steps: Steps::Fixed(2 * self.resolve(schedule)) }
    }
}

pub fn default_steps(integrator: Integrator, schedule: &PulseSchedule) -> usize {
    let (min, rate) = integrator.auto_rule();
    min.max((rate * schedule.area()).ceil() as usize)
}

/// Sampled evolution over the whole protocol.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// `populations[k][site]` at `times[k]`.
    pub populations: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least two samples")
    }

    /// `|⟨site|ψ(t_max)⟩|²`.
    pub fn final_population(&self, site: usize) -> Result<f64> {
        final_population(self, site)
    }
}

/// `|⟨site|ψ(t_max)⟩|²` of a trajectory.
pub fn final_population(traj: &Trajectory, site: usize) -> Result<f64> {
    traj.final_state().population(site)
}

/// Peak over the trajectory samples of `ρ(3u) + ρ(3d)`.
pub fn transient_middle_population(traj: &Trajectory) -> Result<f64> {
    let dim = traj.final_state().dim();
    if dim != RING_DIM {
        return Err(CtapError::DimensionMismatch { expected: RING_DIM, found: dim });
    }
    Ok(traj.populations.iter().map(|p| p[2] + p[3]).fold(0.0, f64::max))
}

/// Options for [`propagate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropagateOptions {
    pub stepper: Stepper,
    /// Number of recorded samples, including `t = 0` and `t = t_max`.
    pub samples: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { stepper: Stepper::default(), samples: DEFAULT_SAMPLES }
    }
}

/// Evolves `psi0` through the full protocol and samples the trajectory.
pub fn propagate(
    schedule: &PulseSchedule,
    network: Network,
    opts: &PropagateOptions,
    psi0: &StateVector,
) -> Result<Trajectory> {
    let steps = opts.stepper.resolve(schedule);
    if steps < 2 {
        return Err(CtapError::TooFewSteps(steps));
    }
    if opts.samples < 2 {
        return Err(CtapError::InvalidResolution(opts.samples));
    }
    if psi0.dim() != network.dim() {
        return Err(CtapError::DimensionMismatch { expected: network.dim(), found: psi0.dim() });
    }
    let n2 = psi0.norm_sqr();
    if (n2 - 1.0).abs() > NORM_TOLERANCE {
        return Err(CtapError::NotNormalized { norm_sqr: n2 });
    }

    let dt = schedule.t_max() / steps as f64;
    let mut times = Vec::with_capacity(opts.samples);
    let mut states = Vec::with_capacity(opts.samples);
    let mut record = |k: usize, amps: &[Complex64]| {
        times.push(k as f64 * dt);
        states.push(StateVector(amps.to_vec()));
    };

    // Sample j is taken after step round(j·N/(S−1)).
    let last = (opts.samples - 1) as f64;
    let sample_at = |j: usize| ((j as f64) * steps as f64 / last).round() as usize;
    let mut next = 0usize;
    let mut observer = |k: usize, amps: &[Complex64]| {
        while next < opts.samples && sample_at(next) == k {
            record(k, amps);
            next += 1;
        }
    };

    match network {
        Network::Ring(det) => {
            let mut psi = to_array::<RING_DIM>(psi0);
            evolve(schedule, opts.stepper.integrator, steps, det, &mut psi, &mut observer);
        }
        Network::Chain(delta) => {
            let mut psi = to_array::<CHAIN_DIM>(psi0);
            evolve(schedule, opts.stepper.integrator, steps, ChainDetuning(delta), &mut psi, &mut observer);
        }
    }

    let populations = states.iter().map(StateVector::populations).collect();
    Ok(Trajectory { times, states, populations })
}

/// Final ρ₅₅ for a ring started on |1⟩, without recording a trajectory.
///
/// This is the inner loop of every sweep.
pub fn final_rho55(schedule: &PulseSchedule, det: Detuning, stepper: Stepper) -> Result<f64> {
    let steps = stepper.resolve(schedule);
    if steps < 2 {
        return Err(CtapError::TooFewSteps(steps));
    }
    let mut psi = [Complex64::new(0.0, 0.0); RING_DIM];
    psi[0] = Complex64::new(1.0, 0.0);
    evolve(schedule, stepper.integrator, steps, det, &mut psi, &mut |_, _| {});
    Ok(psi[RING_DIM - 1].norm_sqr())
}

/// Outcome of a step-doubling check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub steps: usize,
    pub rho55: f64,
    pub rho55_doubled: f64,
}

impl ConvergenceReport {
    pub fn change(&self) -> f64 {
        (self.rho55_doubled - self.rho55).abs()
    }

    pub fn converged(&self) -> bool {
        self.change() <= CONVERGENCE_TOLERANCE
    }
}

/// Runs the ring at `steps` and `2·steps` and compares the final ρ₅₅.
pub fn convergence_check(schedule: &PulseSchedule, det: Detuning, stepper: Stepper) -> Result<ConvergenceReport> {
    Ok(ConvergenceReport {
        steps: stepper.resolve(schedule),
        rho55: final_rho55(schedule, det, stepper)?,
        rho55_doubled: final_rho55(schedule, det, stepper.doubled(schedule))?,
    })
}

/// Like [`convergence_check`] but turns a failed check into an error.
pub fn ensure_converged(schedule: &PulseSchedule, det: Detuning, stepper: Stepper) -> Result<f64> {
    let r = convergence_check(schedule, det, stepper)?;
    if r.converged() {
        Ok(r.rho55)
    } else {
        Err(CtapError::NotConverged {
            delta_u: det.up,
            delta_d: det.down,
            t_max: schedule.t_max(),
            change: r.change(),
            tolerance: CONVERGENCE_TOLERANCE,
        })
    }
}

fn to_array<const D: usize>(psi: &StateVector) -> [Complex64; D] {
    let mut a = [Complex64::new(0.0, 0.0); D];
    a.copy_from_slice(&psi.0);
    a
}

/// Sparse action of a network Hamiltonian with pulse amplitudes `(o1, o2)`
/// and detunings scaled by `w`.
trait Couplings<const D: usize>: Copy {
    fn apply(&self, o1: f64, o2: f64, w: f64, x: &[Complex64; D], out: &mut [Complex64; D]);
    /// Upper bound on the ∞-norm of the Hamiltonian.
    fn norm_bound(&self, o1: f64, o2: f64, w: f64) -> f64;
    fn dense(&self, o1: f64, o2: f64, w: f64) -> DMatrix<f64>;
}

impl Couplings<RING_DIM> for Detuning {
    #[inline(always)]
    fn apply(&self, o1: f64, o2: f64, w: f64, x: &[Complex64; RING_DIM], out: &mut [Complex64; RING_DIM]) {
        let mid = x[2] + x[3];
        out[0] = x[1] * o1;
        out[1] = x[0] * o1 + mid * o2;
        let via = x[1] * o2 + x[4] * o1;
        out[2] = via + x[2] * (self.up * w);
        out[3] = via + x[3] * (self.down * w);
        out[4] = mid * o1 + x[5] * o2;
        out[5] = x[4] * o2;
    }

    fn norm_bound(&self, o1: f64, o2: f64, w: f64) -> f64 {
        2.0 * (o1.abs() + o2.abs()) + w.abs() * self.up.abs().max(self.down.abs())
    }

    fn dense(&self, o1: f64, o2: f64, w: f64) -> DMatrix<f64> {
        let det = Detuning { up: self.up * w, down: self.down * w };
        DMatrix::from_column_slice(RING_DIM, RING_DIM, RingHamiltonian::from_amplitudes(o1, o2, det).0.as_slice())
    }
}

#[derive(Clone, Copy)]
struct ChainDetuning(f64);

impl Couplings<CHAIN_DIM> for ChainDetuning {
    #[inline(always)]
    fn apply(&self, o1: f64, o2: f64, w: f64, x: &[Complex64; CHAIN_DIM], out: &mut [Complex64; CHAIN_DIM]) {
        out[0] = x[1] * o1;
        out[1] = x[0] * o1 + x[2] * o2;
        out[2] = x[1] * o2 + x[3] * o1 + x[2] * (self.0 * w);
        out[3] = x[2] * o1 + x[4] * o2;
        out[4] = x[3] * o2;
    }

    fn norm_bound(&self, o1: f64, o2: f64, w: f64) -> f64 {
        2.0 * (o1.abs() + o2.abs()) + (w * self.0).abs()
    }

    fn dense(&self, o1: f64, o2: f64, w: f64) -> DMatrix<f64> {
        DMatrix::from_column_slice(
            CHAIN_DIM,
            CHAIN_DIM,
            ChainHamiltonian::from_amplitudes(o1, o2, self.0 * w).0.as_slice(),
        )
    }
}

// Largest ∞-norm of τH handed to a single Taylor expansion.
const TAYLOR_MAX_NORM: f64 = 0.5;
// Terms are summed until their magnitude drops below this.
const TAYLOR_CUTOFF: f64 = 1e-18;
const TAYLOR_MAX_TERMS: usize = 40;

/// `ψ ← exp(−iτH)ψ` by a Taylor series summed to machine precision.
#[inline]
fn taylor_exp_apply<const D: usize, H: Couplings<D>>(
    h: &H,
    o1: f64,
    o2: f64,
    w: f64,
    tau: f64,
    psi: &mut [Complex64; D],
) {
    let bound = h.norm_bound(o1, o2, w) * tau.abs();
    let pieces = (bound / TAYLOR_MAX_NORM).ceil().max(1.0) as usize;
    let tau = tau / pieces as f64;
    let mut term = [Complex64::new(0.0, 0.0); D];
    let mut next = [Complex64::new(0.0, 0.0); D];
    for _ in 0..pieces {
        term.copy_from_slice(psi);
        let mut acc = *psi;
        for k in 1..=TAYLOR_MAX_TERMS {
            h.apply(o1, o2, w, &term, &mut next);
            let f = tau / k as f64;
            let mut largest = 0.0f64;
            for ((t, n), a) in term.iter_mut().zip(&next).zip(acc.iter_mut()) {
                // (−i f) · n
                *t = Complex64::new(n.im * f, -n.re * f);
                *a += *t;
                largest = largest.max(t.re.abs().max(t.im.abs()));
            }
            if largest < TAYLOR_CUTOFF {
                break;
            }
        }
        *psi = acc;
    }
}

/// `ψ ← V exp(−iEτ) Vᵀ ψ` from a dense symmetric eigendecomposition.
fn eigen_exp_apply<const D: usize>(h: DMatrix<f64>, tau: f64, psi: &mut [Complex64; D]) {
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let mut coeff = [Complex64::new(0.0, 0.0); D];
    for (m, c) in coeff.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, p) in psi.iter().enumerate() {
            acc += p * v[(i, m)];
        }
        *c = acc * Complex64::from_polar(1.0, -eig.eigenvalues[m] * tau);
    }
    for (i, p) in psi.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in coeff.iter().enumerate() {
            acc += c * v[(i, m)];
        }
        *p = acc;
    }
}

// Gauss–Legendre nodes and the commutator-free fourth-order weights.
const GAUSS_LO: f64 = 0.5 - SQRT3_6;
const GAUSS_HI: f64 = 0.5 + SQRT3_6;
const CF_BIG: f64 = 0.25 + SQRT3_6;
const CF_SMALL: f64 = 0.25 - SQRT3_6;
const SQRT3_6: f64 = 0.288_675_134_594_812_9; // √3/6

/// Steps the state through the protocol. `observer(k, ψ)` sees the state
/// after `k` steps, for `k = 0..=steps`.
fn evolve<const D: usize, H: Couplings<D>>(
    schedule: &PulseSchedule,
    integrator: Integrator,
    steps: usize,
    network: H,
    psi: &mut [Complex64; D],
    observer: &mut impl FnMut(usize, &[Complex64]),
) {
    let dt = schedule.t_max() / steps as f64;
    observer(0, psi);
    for k in 0..steps {
        let t = k as f64 * dt;
        match integrator {
            Integrator::Magnus4 => {
                let (a1, b1) = schedule.amplitudes_unchecked(t + GAUSS_LO * dt);
                let (a2, b2) = schedule.amplitudes_unchecked(t + GAUSS_HI * dt);
                // exp(−iδt(c₊H₁ + c₋H₂)) first, then exp(−iδt(c₋H₁ + c₊H₂)).
                // Each exponent is again a network Hamiltonian with half the detuning.
                let (o1, o2) = (CF_BIG * a1 + CF_SMALL * a2, CF_BIG * b1 + CF_SMALL * b2);
                taylor_exp_apply(&network, o1, o2, 0.5, dt, psi);
                let (o1, o2) = (CF_SMALL * a1 + CF_BIG * a2, CF_SMALL * b1 + CF_BIG * b2);
                taylor_exp_apply(&network, o1, o2, 0.5, dt, psi);
            }
            Integrator::Midpoint => {
                let (o1, o2) = schedule.amplitudes_unchecked(t + 0.5 * dt);
                eigen_exp_apply(network.dense(o1, o2, 1.0), dt, psi);
            }
        }
        observer(k + 1, psi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ring_start() -> StateVector {
        StateVector::site(RING_DIM, 0).unwrap()
    }

    fn run(area: f64, det: Detuning) -> Trajectory {
        let s = PulseSchedule::unit(area).unwrap();
        propagate(&s, Network::Ring(det), &PropagateOptions::default(), &ring_start()).unwrap()
    }

    #[test]
    fn adiabatic_transfer_at_zero_detuning() {
        let traj = run(200.0, Detuning::zero());
        assert!(final_population(&traj, 5).unwrap() >= 0.999);
        for st in &traj.states {
            assert!((st.norm_sqr() - 1.0).abs() < 1e-9);
        }
        assert_eq!(traj.times.len(), DEFAULT_SAMPLES);
        assert_eq!(traj.times[0], 0.0);
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 200.0, epsilon = 1e-9);
        assert_eq!(traj.populations[0], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sudden_limit_stays_on_site_one() {
        let traj = run(0.01, Detuning::zero());
        assert!(final_population(&traj, 0).unwrap() >= 0.99);
        let peak = transient_middle_population(&traj).unwrap();
        assert!(peak < 1e-3, "{peak}");
    }

    #[test]
    fn middle_sites_peak_at_one_fifth() {
        // Adiabatic following of the symmetric transport state
        // ∝ |1⟩ − (Ω₁/√2Ω₂)|s⟩ + (Ω₁/Ω₂)²|5⟩, s = (|3u⟩+|3d⟩)/√2,
        // whose |s⟩ weight peaks at 1/5 when Ω₁ = Ω₂.
        let traj = run(400.0, Detuning::zero());
        let peak = transient_middle_population(&traj).unwrap();
        assert!((peak - 0.2).abs() < 2e-3, "{peak}");
        let at = traj
            .populations
            .iter()
            .map(|p| p[2] + p[3])
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert!((traj.times[at] / 400.0 - 0.5).abs() < 0.02);
        assert!(peak <= 1.0);
    }

    #[test]
    fn final_population_of_hand_built_trajectories() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re| Complex64::new(re, 0.0);
        let mk = |amps: Vec<Complex64>| Trajectory {
            times: vec![0.0, 1.0],
            populations: vec![vec![], StateVector(amps.clone()).populations()],
            states: vec![ring_start(), StateVector(amps)],
        };
        let on5 = mk(vec![c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(1.0)]);
        assert_eq!(final_population(&on5, 5).unwrap(), 1.0);
        let split = mk(vec![c(h), c(0.0), c(0.0), c(0.0), c(0.0), Complex64::new(0.0, h)]);
        assert_abs_diff_eq!(final_population(&split, 5).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(final_population(&split, 6), Err(CtapError::SiteOutOfRange { .. })));
    }

    #[test]
    fn symmetric_detuning_never_populates_antisymmetric_branch() {
        let traj = run(150.0, Detuning::symmetric(0.3).unwrap());
        for st in &traj.states {
            let anti = (st.0[2] - st.0[3]) * std::f64::consts::FRAC_1_SQRT_2;
            assert!(anti.norm() < 1e-9);
        }
    }

    #[test]
    fn detuning_swap_leaves_rho55_unchanged() {
        let s = PulseSchedule::unit(120.0).unwrap();
        for (du, dd) in [(0.1, -0.35), (0.7, 0.2), (-0.05, 0.4)] {
            let det = Detuning::new(du, dd).unwrap();
            let a = final_rho55(&s, det, Stepper::default()).unwrap();
            let b = final_rho55(&s, det.swapped(), Stepper::default()).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn default_steps_are_converged() {
        for area in [50.0, 200.0, 600.0] {
            let s = PulseSchedule::unit(area).unwrap();
            for (du, dd) in [(0.0, 0.0), (0.3, -0.3), (1.0, -1.0), (0.5, 0.0), (-1.0, -1.0)] {
                let r = convergence_check(&s, Detuning::new(du, dd).unwrap(), Stepper::default()).unwrap();
                assert!(r.converged(), "area {area} ({du},{dd}): {:e}", r.change());
            }
        }
    }

    #[test]
    fn under_resolved_runs_are_flagged() {
        let s = PulseSchedule::unit(200.0).unwrap();
        let det = Detuning::antisymmetric(1.0).unwrap();
        let err = ensure_converged(&s, det, Stepper::fixed(20)).unwrap_err();
        assert!(matches!(err, CtapError::NotConverged { delta_u, .. } if delta_u == 1.0));
    }

    #[test]
    fn integrators_agree() {
        // Two independent exponential routes: sparse Taylor vs dense eigendecomposition.
        let s = PulseSchedule::unit(150.0).unwrap();
        for det in [Detuning::zero(), Detuning::new(0.4, -0.2).unwrap(), Detuning::antisymmetric(0.1).unwrap()] {
            let magnus = final_rho55(&s, det, Stepper::default()).unwrap();
            let mid = final_rho55(&s, det, Stepper::new(Integrator::Midpoint, Steps::Fixed(60_000))).unwrap();
            assert!((magnus - mid).abs() < 1e-7, "{magnus} vs {mid}");
        }
    }

    #[test]
    fn midpoint_integrator_is_second_order() {
        let s = PulseSchedule::unit(60.0).unwrap();
        let det = Detuning::new(0.5, -0.3).unwrap();
        let exact = final_rho55(&s, det, Stepper::fixed(4000)).unwrap();
        let e1 = (final_rho55(&s, det, Stepper::new(Integrator::Midpoint, Steps::Fixed(600))).unwrap() - exact).abs();
        let e2 = (final_rho55(&s, det, Stepper::new(Integrator::Midpoint, Steps::Fixed(1200))).unwrap() - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }

    #[test]
    fn adiabatic_limit_is_monotone() {
        let defect: Vec<f64> = [50.0, 100.0, 200.0, 400.0]
            .iter()
            .map(|&a| 1.0 - final_rho55(&PulseSchedule::unit(a).unwrap(), Detuning::zero(), Stepper::default()).unwrap())
            .collect();
        assert!(defect.windows(2).all(|w| w[1] <= w[0]), "{defect:?}");
        assert!(defect[3] < 1e-6);
    }

    #[test]
    fn chain_network_transfers() {
        let s = PulseSchedule::unit(200.0).unwrap();
        let psi0 = StateVector::site(CHAIN_DIM, 0).unwrap();
        let opts = PropagateOptions { samples: 3, ..Default::default() };
        let traj = propagate(&s, Network::Chain(0.0), &opts, &psi0).unwrap();
        assert_eq!(traj.times.len(), 3);
        assert!(traj.final_population(4).unwrap() > 0.999);
        assert!(transient_middle_population(&traj).is_err());
    }

    #[test]
    fn contract_violations() {
        let s = PulseSchedule::unit(10.0).unwrap();
        let net = Network::Ring(Detuning::zero());
        let opts = PropagateOptions::default();
        let mut bad = ring_start();
        bad.0[1] = Complex64::new(0.5, 0.0);
        assert!(matches!(propagate(&s, net, &opts, &bad), Err(CtapError::NotNormalized { .. })));
        let short = StateVector::site(CHAIN_DIM, 0).unwrap();
        assert!(matches!(propagate(&s, net, &opts, &short), Err(CtapError::DimensionMismatch { .. })));
        let one = PropagateOptions { stepper: Stepper::fixed(1), ..opts };
        assert!(matches!(propagate(&s, net, &one, &ring_start()), Err(CtapError::TooFewSteps(1))));
        assert!(StateVector::site(6, 6).is_err());
    }

    #[test]
    fn arbitrary_initial_state_keeps_norm() {
        let s = PulseSchedule::unit(80.0).unwrap();
        let v: Vec<Complex64> = (0..6).map(|k| Complex64::new(k as f64 + 1.0, 0.5 - k as f64)).collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let psi0 = StateVector(v.into_iter().map(|a| a / n).collect());
        let traj = propagate(&s, Network::Ring(Detuning::new(2.0, -0.7).unwrap()), &Default::default(), &psi0).unwrap();
        for st in &traj.states {
            assert!((st.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }
}
