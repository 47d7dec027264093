//! Parallel parameter sweeps over the ring.
//!
//! Every grid point is an independent propagation from |1⟩. Points are
//! evaluated on a rayon pool and written to preassigned slots, so results do
//! not depend on the worker count.

use rayon::prelude::*;

use crate::error::{CtapError, Result};
use crate::evolution::{ensure_converged, final_rho55, Stepper};
use crate::fit::{fit_through_origin, linear_fit, LinearFit};
use crate::model::{Detuning, PulseSchedule};

/// Working estimate of the fringe factor, used to size windows and steps.
pub const FRINGE_FACTOR_ESTIMATE: f64 = 20.0;
/// Minimum trace samples per expected fringe period.
pub const MIN_SAMPLES_PER_FRINGE: f64 = 8.0;
/// Fringe orders covered by [`fringe_window`].
pub const FRINGE_FIT_ORDERS: usize = 5;
/// Trace samples per expected fringe period in [`fringe_window`].
pub const FRINGE_WINDOW_DENSITY: usize = 16;
/// Antidiagonal samples used to locate the steepest point of the first fringe.
pub const TRACKING_POINTS: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Closed sampling interval with `n ≥ 2` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::build(lo, hi, n, Spacing::Linear)
    }

    pub fn log(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if lo <= 0.0 {
            return Err(CtapError::InvalidRange { lo, hi });
        }
        Self::build(lo, hi, n, Spacing::Log)
    }

    fn build(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if n < 2 {
            return Err(CtapError::InvalidResolution(n));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CtapError::InvalidRange { lo, hi });
        }
        Ok(Self { lo, hi, n, spacing })
    }

    /// Sample values; symmetric windows give exactly mirrored values.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        match self.spacing {
            Spacing::Linear => (0..self.n)
                .map(|k| {
                    let (a, b) = (k as f64 / last, (self.n - 1 - k) as f64 / last);
                    b * self.lo + a * self.hi
                })
                .collect(),
            Spacing::Log => {
                let (a, b) = (self.lo.ln(), self.hi.ln());
                (0..self.n).map(|k| (a + (b - a) * k as f64 / last).exp()).collect()
            }
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }
}

/// How many grid points get a step-doubling check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConvergenceCheck {
    Off,
    /// Corners and centre of the grid.
    #[default]
    Spot,
    Every,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SweepOptions {
    pub stepper: Stepper,
    /// `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub convergence: ConvergenceCheck,
}

impl SweepOptions {
    pub fn serial() -> Self {
        Self { workers: Some(1), ..Self::default() }
    }
}

/// Row-major grid: `grid[i * axis2.len() + j]` belongs to `(axis1[i], axis2[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationMap {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub grid: Vec<f64>,
}

impl PopulationMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid[i * self.axis2.len() + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    /// Largest `|grid(i,j) − grid(j,i)|`; `None` unless the grid is square.
    pub fn transpose_asymmetry(&self) -> Option<f64> {
        let n = self.axis1.len();
        if n != self.axis2.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n2 = self.axis2.len();
        &self.grid[i * n2..(i + 1) * n2]
    }

    /// `(i, j)` entries with `i + j = n − 1`, read from the first row down.
    pub fn antidiagonal(&self) -> Option<Vec<f64>> {
        let n = self.axis1.len();
        (n == self.axis2.len()).then(|| (0..n).map(|i| self.get(i, n - 1 - i)).collect())
    }
}

/// Grid of `∂ρ₅₅/∂Δu`, same layout as [`PopulationMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityMap {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub grid: Vec<f64>,
    /// Finite-difference step.
    pub step: f64,
}

impl SensitivityMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid[i * self.axis2.len() + j]
    }
}

/// ρ₅₅ along `Δu = −Δd = Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub deltas: Vec<f64>,
    pub rho55: Vec<f64>,
}

/// Fidelity maxima along the antidiagonal and the fitted law `Δₙ = f·n/t_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FringeFit {
    pub t_max: f64,
    pub orders: Vec<i64>,
    pub positions: Vec<f64>,
    pub factor: f64,
    /// `Δₙ − f·n/t_max` per maximum.
    pub residuals: Vec<f64>,
    /// Mean distance between neighbouring maxima.
    pub mean_spacing: f64,
}

impl FringeFit {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Peak first-fringe sensitivity against protocol time.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityScaling {
    pub t_max: Vec<f64>,
    /// Operating point Δ on the antidiagonal.
    pub delta: Vec<f64>,
    /// `|∂ρ₅₅/∂Δu|` at the operating point.
    pub sensitivity: Vec<f64>,
    pub fit: LinearFit,
}

/// Evaluates `f(0..n)` on the configured pool. The lowest-index error wins.
fn par_eval<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<Result<T>>>();
    let results = match workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    };
    results.into_iter().collect()
}

fn spot_indices(n1: usize, n2: usize) -> Vec<(usize, usize)> {
    let mut v = vec![(0, 0), (0, n2 - 1), (n1 - 1, 0), (n1 - 1, n2 - 1), (n1 / 2, n2 / 2)];
    v.sort_unstable();
    v.dedup();
    v
}

/// Fills a grid of ρ₅₅ with `point(i, j)` giving the schedule and detuning.
fn rho_grid<P>(n1: usize, n2: usize, opts: &SweepOptions, point: P) -> Result<Vec<f64>>
where
    P: Fn(usize, usize) -> Result<(PulseSchedule, Detuning)> + Sync + Send,
{
    let every = opts.convergence == ConvergenceCheck::Every;
    let grid = par_eval(n1 * n2, opts.workers, |k| {
        let (s, det) = point(k / n2, k % n2)?;
        if every {
            ensure_converged(&s, det, opts.stepper)
        } else {
            final_rho55(&s, det, opts.stepper)
        }
    })?;
    if opts.convergence == ConvergenceCheck::Spot {
        let spots = spot_indices(n1, n2);
        par_eval(spots.len(), opts.workers, |k| {
            let (s, det) = point(spots[k].0, spots[k].1)?;
            ensure_converged(&s, det, opts.stepper)
        })?;
    }
    Ok(grid)
}

/// ρ₅₅ over `Δu × Δd` for a fixed schedule.
pub fn population_map(schedule: &PulseSchedule, du: &Axis, dd: &Axis, opts: &SweepOptions) -> Result<PopulationMap> {
    let (axis1, axis2) = (du.values(), dd.values());
    let grid = rho_grid(axis1.len(), axis2.len(), opts, |i, j| Ok((*schedule, Detuning::new(axis1[i], axis2[j])?)))?;
    Ok(PopulationMap { axis1, axis2, grid })
}

/// ρ₅₅ along `Δu = −Δd = Δ`.
pub fn antidiagonal_trace(schedule: &PulseSchedule, delta: &Axis, opts: &SweepOptions) -> Result<Trace> {
    let deltas = delta.values();
    let rho55 = rho_grid(1, deltas.len(), opts, |_, j| Ok((*schedule, Detuning::antisymmetric(deltas[j])?)))?;
    Ok(Trace { deltas, rho55 })
}

/// ρ₅₅ over `t_max × Δ` along the antidiagonal; `axis1` holds `t_max`.
pub fn time_detuning_sweep(omega_max: f64, t_max: &Axis, delta: &Axis, opts: &SweepOptions) -> Result<PopulationMap> {
    let (axis1, axis2) = (t_max.values(), delta.values());
    let grid = rho_grid(axis1.len(), axis2.len(), opts, |i, j| {
        Ok((PulseSchedule::new(omega_max, axis1[i])?, Detuning::antisymmetric(axis2[j])?))
    })?;
    Ok(PopulationMap { axis1, axis2, grid })
}

/// Antidiagonal window `[0, (FRINGE_FIT_ORDERS + 1/4)·f/t_max]` holding the
/// central maximum and the first [`FRINGE_FIT_ORDERS`] fringes.
///
/// The fringe law is a small-detuning law: the spacing grows once Δ is no
/// longer small against Ω_max, so a fixed number of orders is fitted.
pub fn fringe_window(t_max: f64) -> Result<Axis> {
    let span = FRINGE_FIT_ORDERS as f64 + 0.25;
    let n = (span * FRINGE_WINDOW_DENSITY as f64).round() as usize + 1;
    Axis::linear(0.0, span * FRINGE_FACTOR_ESTIMATE / t_max, n)
}

/// Locates the fidelity maxima of an antidiagonal trace and fits `Δₙ = f·n/t_max`.
///
/// Interior maxima come from discrete comparison with three-point quadratic
/// refinement. A trace that starts at Δ = 0 counts its first sample as the
/// central maximum when it is not below its neighbour, since the trace is even.
/// Orders are consecutive ranks. A maximum at Δ ≈ 0 is order 0; otherwise the
/// first order is the nearest multiple of the mean spacing.
pub fn fit_fringes(trace: &Trace, t_max: f64) -> Result<FringeFit> {
    let (x, y) = (&trace.deltas, &trace.rho55);
    if x.len() < 3 || x.len() != y.len() {
        return Err(CtapError::InvalidResolution(x.len()));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let per_period = FRINGE_FACTOR_ESTIMATE / t_max / h;
    if per_period.is_nan() || per_period < MIN_SAMPLES_PER_FRINGE {
        return Err(CtapError::UnderResolved { samples_per_period: per_period, required: MIN_SAMPLES_PER_FRINGE });
    }

    let mut positions = Vec::new();
    if x[0] == 0.0 && y[0] >= y[1] {
        positions.push(0.0);
    }
    for i in 1..x.len() - 1 {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            let curv = y[i - 1] - 2.0 * y[i] + y[i + 1];
            let shift = if curv < 0.0 { 0.5 * (y[i - 1] - y[i + 1]) / curv } else { 0.0 };
            positions.push(x[i] + shift.clamp(-0.5, 0.5) * h);
        }
    }
    if positions.len() < 2 {
        return Err(CtapError::InsufficientFringes { found: positions.len() });
    }

    let mean_spacing = (positions[positions.len() - 1] - positions[0]) / (positions.len() - 1) as f64;
    let centre = (0..positions.len()).min_by(|&a, &b| positions[a].abs().total_cmp(&positions[b].abs())).unwrap();
    let offset = if positions[centre].abs() < 0.25 * FRINGE_FACTOR_ESTIMATE / t_max {
        -(centre as i64)
    } else {
        (positions[0] / mean_spacing).round() as i64
    };
    let orders: Vec<i64> = (0..positions.len() as i64).map(|k| k + offset).collect();

    let scaled: Vec<f64> = orders.iter().map(|&n| n as f64 / t_max).collect();
    let factor = fit_through_origin(&scaled, &positions).ok_or(CtapError::InsufficientFringes { found: 1 })?;
    let residuals = positions.iter().zip(&scaled).map(|(p, s)| p - factor * s).collect();
    Ok(FringeFit { t_max, orders, positions, factor, residuals, mean_spacing })
}

/// `max(1e-3·f/t_max, 1e-6·Ω_max)` with the working fringe-factor estimate.
pub fn default_sensitivity_step(schedule: &PulseSchedule) -> f64 {
    (1e-3 * FRINGE_FACTOR_ESTIMATE / schedule.t_max()).max(1e-6 * schedule.omega_max())
}

fn derivative_at(schedule: &PulseSchedule, du: f64, dd: f64, step: f64, stepper: Stepper) -> Result<f64> {
    let plus = final_rho55(schedule, Detuning::new(du + step, dd)?, stepper)?;
    let minus = final_rho55(schedule, Detuning::new(du - step, dd)?, stepper)?;
    Ok((plus - minus) / (2.0 * step))
}

/// Central difference `(ρ₅₅(Δu+δ) − ρ₅₅(Δu−δ)) / 2δ` over `Δu × Δd`.
pub fn sensitivity_map(
    schedule: &PulseSchedule,
    du: &Axis,
    dd: &Axis,
    step: f64,
    opts: &SweepOptions,
) -> Result<SensitivityMap> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CtapError::InvalidStep(step));
    }
    let (axis1, axis2) = (du.values(), dd.values());
    let n2 = axis2.len();
    let grid = par_eval(axis1.len() * n2, opts.workers, |k| {
        derivative_at(schedule, axis1[k / n2], axis2[k % n2], step, opts.stepper)
    })?;
    if opts.convergence != ConvergenceCheck::Off {
        let spots = spot_indices(axis1.len(), n2);
        par_eval(spots.len(), opts.workers, |k| {
            let (i, j) = spots[k];
            ensure_converged(schedule, Detuning::new(axis1[i], axis2[j])?, opts.stepper)
        })?;
    }
    Ok(SensitivityMap { axis1, axis2, grid, step })
}

/// Tracks the steepest point of the first fringe flank for each `t_max`.
///
/// The flank runs from the central maximum to the first minimum, near
/// `Δ ≈ f/(2 t_max)`. It is scanned on [`TRACKING_POINTS`] samples in
/// `(0, 0.75·f/t_max]`, then the largest `|∂ρ₅₅/∂Δu|` is refined by golden
/// section. A maximum on the scan boundary means the flank was lost.
pub fn sensitivity_vs_time(omega_max: f64, t_values: &[f64], opts: &SweepOptions) -> Result<SensitivityScaling> {
    if t_values.len() < 2 {
        return Err(CtapError::InvalidResolution(t_values.len()));
    }
    let points = par_eval(t_values.len(), opts.workers, |k| {
        let s = PulseSchedule::new(omega_max, t_values[k])?;
        track_first_flank(&s, opts.stepper)
    })?;
    let (delta, sensitivity): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let fit = linear_fit(t_values, &sensitivity).ok_or(CtapError::InvalidResolution(t_values.len()))?;
    Ok(SensitivityScaling { t_max: t_values.to_vec(), delta, sensitivity, fit })
}

fn track_first_flank(s: &PulseSchedule, stepper: Stepper) -> Result<(f64, f64)> {
    let step = default_sensitivity_step(s);
    let hi = 0.75 * FRINGE_FACTOR_ESTIMATE / s.t_max();
    let slope = |d: f64| derivative_at(s, d, -d, step, stepper).map(f64::abs);
    let grid: Vec<f64> = (1..=TRACKING_POINTS).map(|k| hi * k as f64 / TRACKING_POINTS as f64).collect();
    let values = grid.iter().map(|&d| slope(d)).collect::<Result<Vec<_>>>()?;
    let best = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    if best == 0 || best == values.len() - 1 {
        return Err(CtapError::FringeTrackingLost { t_max: s.t_max() });
    }
    let (mut lo, mut up) = (grid[best - 1], grid[best + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (up - g * (up - lo), lo + g * (up - lo));
    let (mut fa, mut fb) = (slope(a)?, slope(b)?);
    while up - lo > 1e-4 * hi {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (up - lo);
            fb = slope(b)?;
        } else {
            up = b;
            b = a;
            fb = fa;
            a = up - g * (up - lo);
            fa = slope(a)?;
        }
    }
    let (d, v) = if fa >= fb { (a, fa) } else { (b, fb) };
    if !(v.is_finite() && v > 0.0) {
        return Err(CtapError::FringeTrackingLost { t_max: s.t_max() });
    }
    Ok(if v >= values[best] { (d, v) } else { (grid[best], values[best]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_from(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Trace {
        let deltas = Axis::linear(lo, hi, n).unwrap().values();
        let rho55 = deltas.iter().map(|&d| f(d)).collect();
        Trace { deltas, rho55 }
    }

    #[test]
    fn axis_values() {
        let a = Axis::linear(-1.0, 1.0, 5).unwrap().values();
        assert_eq!(a, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let sym = Axis::linear(-1.0, 1.0, 201).unwrap().values();
        assert!((0..201).all(|k| sym[k] == -sym[200 - k]));
        let l = Axis::log(10.0, 1000.0, 3).unwrap().values();
        assert!((l[1] - 100.0).abs() < 1e-9);
        assert!(Axis::linear(0.0, 1.0, 1).is_err());
        assert!(Axis::linear(1.0, 1.0, 3).is_err());
        assert!(Axis::log(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn origin_of_small_map_is_high_fidelity() {
        let s = PulseSchedule::unit(200.0).unwrap();
        let ax = Axis::linear(-0.2, 0.2, 3).unwrap();
        let map = population_map(&s, &ax, &ax, &SweepOptions::default()).unwrap();
        assert_eq!(map.shape(), (3, 3));
        assert!(map.get(1, 1) >= 0.999);
        assert!(map.grid.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(map.transpose_asymmetry().unwrap() < 1e-9);
        assert_eq!(map.antidiagonal().unwrap().len(), 3);
    }

    #[test]
    fn zero_detuning_row_dips_near_the_origin_only() {
        // A small Δu mixes the transport state with the degenerate antisymmetric
        // middle mode; well away from the origin the single-arm pathway is adiabatic.
        let s = PulseSchedule::unit(200.0).unwrap();
        let du = Axis::linear(-0.2, 0.2, 41).unwrap();
        let dd = Axis::linear(-0.1, 0.1, 3).unwrap();
        let map = population_map(&s, &du, &dd, &SweepOptions::default()).unwrap();
        let row: Vec<f64> = (0..41).map(|i| map.get(i, 1)).collect();
        assert!(row[20] >= 0.999);
        assert!(row[26] < 0.7 && row[14] < 0.7, "{row:?}");
        assert!(row[..5].iter().chain(&row[36..]).all(|&p| p >= 0.99), "{row:?}");
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = PulseSchedule::unit(150.0).unwrap();
        let ax = Axis::linear(-0.5, 0.5, 6).unwrap();
        let serial = population_map(&s, &ax, &ax, &SweepOptions::serial()).unwrap();
        let par = population_map(&s, &ax, &ax, &SweepOptions { workers: Some(4), ..Default::default() }).unwrap();
        assert_eq!(serial, par);
    }

    #[test]
    fn trace_is_even_and_peaks_at_zero() {
        let s = PulseSchedule::unit(400.0).unwrap();
        let tr = antidiagonal_trace(&s, &Axis::linear(-0.1, 0.1, 21).unwrap(), &SweepOptions::default()).unwrap();
        for k in 0..21 {
            assert!((tr.rho55[k] - tr.rho55[20 - k]).abs() < 1e-9);
        }
        let top = tr.rho55.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(tr.rho55[10], top);
    }

    #[test]
    fn convergence_failures_carry_coordinates() {
        let s = PulseSchedule::unit(300.0).unwrap();
        let opts = SweepOptions { stepper: Stepper::fixed(30), ..Default::default() };
        let err = antidiagonal_trace(&s, &Axis::linear(0.5, 1.0, 3).unwrap(), &opts).unwrap_err();
        assert!(matches!(err, CtapError::NotConverged { delta_u, delta_d, .. } if delta_u == 0.5 && delta_d == -0.5));
        let off = SweepOptions { convergence: ConvergenceCheck::Off, ..opts };
        assert!(antidiagonal_trace(&s, &Axis::linear(0.5, 1.0, 3).unwrap(), &off).is_ok());
    }

    #[test]
    fn time_sweep_layout() {
        let t = Axis::linear(100.0, 200.0, 2).unwrap();
        let d = Axis::linear(0.0, 0.3, 4).unwrap();
        let map = time_detuning_sweep(1.0, &t, &d, &SweepOptions::default()).unwrap();
        assert_eq!(map.shape(), (2, 4));
        assert!(map.get(1, 0) >= 0.999);
        let det = Detuning::antisymmetric(map.axis2[2]).unwrap();
        let direct = final_rho55(&PulseSchedule::unit(100.0).unwrap(), det, Stepper::default()).unwrap();
        assert_eq!(map.get(0, 2), direct);
    }

    #[test]
    fn fringes_of_a_synthetic_cosine() {
        // Maxima at 0.02·n exactly, off-grid sampling.
        let tr = trace_from(|d| 0.5 + 0.5 * (2.0 * std::f64::consts::PI * d / 0.02).cos(), 0.0, 0.1013, 400);
        let fit = fit_fringes(&tr, 1000.0).unwrap();
        assert_eq!(fit.orders, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(fit.positions[0], 0.0);
        assert!((fit.factor - 20.0).abs() < 0.05, "{}", fit.factor);
        assert!(fit.max_residual() < 0.05 * fit.mean_spacing);
        assert!(fit.positions.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fringes_on_a_symmetric_window() {
        let tr = trace_from(|d| (std::f64::consts::PI * d / 0.04).cos().powi(2), -0.1, 0.1, 401);
        let fit = fit_fringes(&tr, 1000.0).unwrap();
        assert_eq!(fit.orders, vec![-2, -1, 0, 1, 2]);
        assert!((fit.factor - 40.0).abs() < 0.1);
    }

    #[test]
    fn fringes_off_centre_window_keeps_orders() {
        let tr = trace_from(|d| (std::f64::consts::PI * d / 0.02).cos().powi(2), 0.03, 0.1, 200);
        let fit = fit_fringes(&tr, 1000.0).unwrap();
        assert_eq!(fit.orders, vec![2, 3, 4]);
        assert!((fit.factor - 20.0).abs() < 0.1);
    }

    #[test]
    fn fringe_errors() {
        let coarse = trace_from(|d| d.cos(), 0.0, 1.0, 50);
        assert!(matches!(fit_fringes(&coarse, 1000.0), Err(CtapError::UnderResolved { .. })));
        let flat = trace_from(|d| 1.0 - d, 0.0, 0.01, 100);
        assert!(matches!(fit_fringes(&flat, 1000.0), Err(CtapError::InsufficientFringes { found: 1 })));
    }

    #[test]
    fn sensitivity_step_rule() {
        let s = PulseSchedule::unit(1000.0).unwrap();
        assert!((default_sensitivity_step(&s) - 2e-5).abs() < 1e-18);
        let long = PulseSchedule::new(1.0, 1e9).unwrap();
        assert_eq!(default_sensitivity_step(&long), 1e-6);
    }

    #[test]
    fn sensitivity_vanishes_at_origin_and_rejects_bad_steps() {
        let s = PulseSchedule::unit(300.0).unwrap();
        let ax = Axis::linear(-0.05, 0.05, 3).unwrap();
        let opts = SweepOptions::default();
        let map = sensitivity_map(&s, &ax, &ax, default_sensitivity_step(&s), &opts).unwrap();
        assert!(map.get(1, 1).abs() < 1e-4);
        assert!(matches!(sensitivity_map(&s, &ax, &ax, 0.0, &opts), Err(CtapError::InvalidStep(_))));
        assert!(matches!(sensitivity_map(&s, &ax, &ax, -1e-3, &opts), Err(CtapError::InvalidStep(_))));
    }

    #[test]
    fn sensitivity_changes_sign_across_a_fringe_maximum() {
        let s = PulseSchedule::unit(1000.0).unwrap();
        let opts = SweepOptions::default();
        let tr = antidiagonal_trace(&s, &Axis::linear(0.0, 0.06, 121).unwrap(), &opts).unwrap();
        let fit = fit_fringes(&tr, 1000.0).unwrap();
        let peak = fit.positions[1];
        let h = default_sensitivity_step(&s);
        let below = derivative_at(&s, peak - 0.004, -(peak - 0.004), h, opts.stepper).unwrap();
        let above = derivative_at(&s, peak + 0.004, -(peak + 0.004), h, opts.stepper).unwrap();
        assert!(below * above < 0.0, "{below} {above}");
    }

    #[test]
    fn sensitivity_grows_with_time() {
        let sc = sensitivity_vs_time(1.0, &[200.0, 400.0], &SweepOptions::default()).unwrap();
        assert!(sc.sensitivity.iter().all(|v| v.is_finite() && *v > 0.0));
        let ratio = sc.sensitivity[1] / sc.sensitivity[0];
        assert!((1.6..2.4).contains(&ratio), "{ratio}");
        assert!(sensitivity_vs_time(1.0, &[200.0], &SweepOptions::default()).is_err());
    }
}
