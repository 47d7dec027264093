//! Instantaneous eigenstructure: numeric decomposition with stable labels,
//! plus closed forms and perturbative series for the special points of the
//! protocol.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CtapError, Result};
use crate::model::{ChainHamiltonian, RingHamiltonian, CHAIN_DIM, RING_DIM};

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const SQRT_5: f64 = 2.236_067_977_499_79;

/// Largest tolerated `|H − Hᵀ|` entry relative to the matrix scale.
const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Eigenvalues closer than this (relative to the matrix scale) form a degenerate cluster.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Eigenstate names, ordered as the energies of the detuned ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EigenLabel {
    D2Minus,
    DMinus,
    /// Lower member of the split transport doublet of the ring.
    D0Minus,
    /// Transport state of the chain.
    D0,
    /// Upper member of the split transport doublet of the ring.
    D0Plus,
    DPlus,
    D2Plus,
}

impl EigenLabel {
    pub const RING: [EigenLabel; RING_DIM] = [
        EigenLabel::D2Minus,
        EigenLabel::DMinus,
        EigenLabel::D0Minus,
        EigenLabel::D0Plus,
        EigenLabel::DPlus,
        EigenLabel::D2Plus,
    ];
    pub const CHAIN: [EigenLabel; CHAIN_DIM] = [
        EigenLabel::D2Minus,
        EigenLabel::DMinus,
        EigenLabel::D0,
        EigenLabel::DPlus,
        EigenLabel::D2Plus,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            EigenLabel::D2Minus => "D2-",
            EigenLabel::DMinus => "D-",
            EigenLabel::D0Minus => "D0-",
            EigenLabel::D0 => "D0",
            EigenLabel::D0Plus => "D0+",
            EigenLabel::DPlus => "D+",
            EigenLabel::D2Plus => "D2+",
        }
    }
}

impl fmt::Display for EigenLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sorted, labelled eigendecomposition of a ring or chain Hamiltonian.
///
/// Eigenvectors are real (every coupling is real) and phase-fixed so that
/// their largest-magnitude component is positive.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<f64>>,
    pub labels: Vec<EigenLabel>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn index_of(&self, label: EigenLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn energy(&self, label: EigenLabel) -> Option<f64> {
        self.index_of(label).map(|k| self.eigenvalues[k])
    }

    pub fn vector(&self, label: EigenLabel) -> Option<&DVector<f64>> {
        self.index_of(label).map(|k| &self.eigenvectors[k])
    }
}

/// A Hamiltonian the decomposition knows how to label.
pub trait SiteHamiltonian {
    fn dense(&self) -> DMatrix<f64>;
    fn labels(&self) -> &'static [EigenLabel];
    /// Diagonal of the operator that lifts degeneracies within a cluster
    /// (see [`eigendecompose`]).
    fn splitting_diagonal(&self) -> Vec<f64>;
}

impl SiteHamiltonian for RingHamiltonian {
    fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(RING_DIM, RING_DIM, self.0.as_slice())
    }

    fn labels(&self) -> &'static [EigenLabel] {
        &EigenLabel::RING
    }

    /// `|3u⟩⟨3u| − |3d⟩⟨3d|`: the antisymmetric detuning direction.
    fn splitting_diagonal(&self) -> Vec<f64> {
        vec![0.0, 0.0, 1.0, -1.0, 0.0, 0.0]
    }
}

impl SiteHamiltonian for ChainHamiltonian {
    fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(CHAIN_DIM, CHAIN_DIM, self.0.as_slice())
    }

    fn labels(&self) -> &'static [EigenLabel] {
        &EigenLabel::CHAIN
    }

    /// The middle-site detuning direction.
    fn splitting_diagonal(&self) -> Vec<f64> {
        vec![0.0, 0.0, 1.0, 0.0, 0.0]
    }
}

/// Numerically diagonalizes a ring or chain Hamiltonian.
///
/// Eigenvalues come out ascending and labels follow the energy rank. Inside
/// a degenerate cluster the basis is chosen to diagonalize the splitting
/// operator of the network, ordered by its expectation value; for the ring's
/// zero-detuning transport doublet this picks the states that continue into
/// the `Δu = −Δd > 0` branches, with `D0+` the upper one.
pub fn eigendecompose<H: SiteHamiltonian + ?Sized>(h: &H) -> Result<EigenDecomposition> {
    let m = h.dense();
    let labels = h.labels();
    debug_assert_eq!(labels.len(), m.nrows());
    let scale = m.amax().max(1.0);
    let asym = (&m - m.transpose()).amax();
    if asym > SYMMETRY_TOLERANCE * scale {
        return Err(CtapError::NotHermitian { asymmetry: asym });
    }

    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors: Vec<DVector<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();

    let split = DVector::from_vec(h.splitting_diagonal());
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[start] <= DEGENERACY_TOLERANCE * scale {
            end += 1;
        }
        if end - start > 1 {
            resolve_cluster(&mut vectors[start..end], &split);
        }
        start = end;
    }

    for v in &mut vectors {
        fix_phase(v);
    }
    Ok(EigenDecomposition { eigenvalues: values, eigenvectors: vectors, labels: labels.to_vec() })
}

/// Rotates a degenerate cluster onto the eigenbasis of the splitting
/// operator restricted to it.
fn resolve_cluster(vectors: &mut [DVector<f64>], split: &DVector<f64>) {
    let n = vectors.len();
    let restricted = DMatrix::from_fn(n, n, |i, j| vectors[i].component_mul(split).dot(&vectors[j]));
    let sub = SymmetricEigen::new(restricted);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sub.eigenvalues[a].total_cmp(&sub.eigenvalues[b]));
    let rotated: Vec<DVector<f64>> = order
        .iter()
        .map(|&k| {
            let coeffs = sub.eigenvectors.column(k);
            let mut v = DVector::zeros(vectors[0].len());
            for (c, basis) in coeffs.iter().zip(vectors.iter()) {
                v += basis * *c;
            }
            v
        })
        .collect();
    // The cluster energies agree to the tolerance and stay as sorted.
    for (slot, v) in vectors.iter_mut().zip(rotated) {
        *slot = v;
    }
}

/// Makes the largest-magnitude component positive. Ties go to the lowest index.
fn fix_phase(v: &mut DVector<f64>) {
    let big = v.amax();
    if let Some(k) = v.iter().position(|x| x.abs() >= big - 1e-12) {
        if v[k] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Same phase convention as [`eigendecompose`], for comparing against it.
pub fn normalize_with_phase(v: &[f64]) -> DVector<f64> {
    let mut v = DVector::from_column_slice(v);
    v.normalize_mut();
    fix_phase(&mut v);
    v
}

/// Zero-detuning ring eigenvalues in closed form, ascending.
///
/// `0` (twice), `±√((3Ω₁² + 3Ω₂² ∓ √(Ω₁⁴ + 14Ω₁²Ω₂² + Ω₂⁴))/2)`.
pub fn analytic_ring_eigenvalues(omega1: f64, omega2: f64) -> [f64; RING_DIM] {
    let (a, b) = (omega1 * omega1, omega2 * omega2);
    let inner = (a * a + 14.0 * a * b + b * b).sqrt();
    let low = ((3.0 * a + 3.0 * b - inner).max(0.0) / 2.0).sqrt();
    let high = ((3.0 * a + 3.0 * b + inner) / 2.0).sqrt();
    [-high, -low, 0.0, 0.0, low, high]
}

/// An eigenpair given by a closed form or truncated series.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticState {
    pub label: EigenLabel,
    pub energy: f64,
    /// Normalized after truncation, phase-fixed like [`eigendecompose`].
    pub vector: DVector<f64>,
}

impl AnalyticState {
    fn new(label: EigenLabel, energy: f64, raw: &[f64]) -> Self {
        Self { label, energy, vector: normalize_with_phase(raw) }
    }
}

/// First-order split of the ring's transport doublet at `t = t_max/2` for
/// `Δu = −Δd = Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MidpointSplit {
    pub plus: AnalyticState,
    pub minus: AnalyticState,
}

impl MidpointSplit {
    pub fn gap(&self) -> f64 {
        self.plus.energy - self.minus.energy
    }
}

/// `E₀⁽±⁾ = ±Δ/√5` and the matching first-order ring states.
pub fn ring_midpoint_split(omega_max: f64, delta: f64) -> MidpointSplit {
    let state = |sign: f64, label| {
        let side = sign * 2.0 * delta / (SQRT_5 * omega_max);
        AnalyticState::new(
            label,
            sign * delta / SQRT_5,
            &[1.0, side, 0.5 * (-1.0 - sign * SQRT_5), 0.5 * (-1.0 + sign * SQRT_5), side, 1.0],
        )
    };
    MidpointSplit { plus: state(1.0, EigenLabel::D0Plus), minus: state(-1.0, EigenLabel::D0Minus) }
}

/// Which end of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// `t = 0`, `Ω₁ = 0`, `Ω₂ = Ω`.
    Start,
    /// `t = t_max`, `Ω₁ = Ω`, `Ω₂ = 0`.
    End,
}

/// Chain eigenpairs at either end of the protocol, to first order in `Δ`.
///
/// Returned in the order `D2−, D−, D0, D+, D2+`.
pub fn chain_boundary_states(endpoint: Endpoint, omega: f64, delta: f64) -> Vec<AnalyticState> {
    let r = delta / (2.0 * omega);
    let e2 = |s: f64| s * omega + delta / 2.0;
    // (D0 site, D± sites, D2± sites, sign of the Δ correction)
    let (d0, dpm, pair, sign) = match endpoint {
        Endpoint::Start => (0, [3, 4], [1, 2], -1.0),
        Endpoint::End => (4, [0, 1], [2, 3], 1.0),
    };
    let d2 = |s: f64| {
        let mut v = [0.0; CHAIN_DIM];
        v[pair[0]] = s + sign * r;
        v[pair[1]] = 1.0;
        v
    };
    let site = |k: usize| {
        let mut v = [0.0; CHAIN_DIM];
        v[k] = 1.0;
        v
    };
    let pm = |s: f64| {
        let mut v = [0.0; CHAIN_DIM];
        v[dpm[0]] = FRAC_1_SQRT_2;
        v[dpm[1]] = s * FRAC_1_SQRT_2;
        v
    };
    vec![
        AnalyticState::new(EigenLabel::D2Minus, e2(-1.0), &d2(-1.0)),
        AnalyticState::new(EigenLabel::DMinus, -omega, &pm(-1.0)),
        AnalyticState::new(EigenLabel::D0, 0.0, &site(d0)),
        AnalyticState::new(EigenLabel::DPlus, omega, &pm(1.0)),
        AnalyticState::new(EigenLabel::D2Plus, e2(1.0), &d2(1.0)),
    ]
}

/// Chain eigenpairs at `t = t_max/2` (`Ω₁ = Ω₂ = Ω_max/2`), to first order in `Δ`.
///
/// Returned in the order `D2−, D−, D0, D+, D2+`.
pub fn chain_midpoint_states(omega_max: f64, delta: f64) -> Vec<AnalyticState> {
    let x = delta / omega_max;
    let side0 = 2.0 * x / 3.0;
    let d2 = |s: f64| {
        let side = s * SQRT_3 + 2.0 * x / 3.0;
        [1.0, side, 2.0 + s * 4.0 * x / SQRT_3, side, 1.0]
    };
    vec![
        AnalyticState::new(EigenLabel::D2Minus, -SQRT_3 * omega_max / 2.0 + delta / 3.0, &d2(-1.0)),
        AnalyticState::new(EigenLabel::DMinus, -omega_max / 2.0, &[1.0, -1.0, 0.0, 1.0, -1.0]),
        AnalyticState::new(EigenLabel::D0, delta / 3.0, &[1.0, side0, -1.0, side0, 1.0]),
        AnalyticState::new(EigenLabel::DPlus, omega_max / 2.0, &[1.0, 1.0, 0.0, -1.0, -1.0]),
        AnalyticState::new(EigenLabel::D2Plus, SQRT_3 * omega_max / 2.0 + delta / 3.0, &d2(1.0)),
    ]
}
