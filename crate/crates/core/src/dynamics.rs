//! Single-instant collapse dynamics.
//!
//! At each discrete instant one branch is selected with its own probability
//! and receives a gain `k·(1 − P_i)` while every other branch shrinks pro
//! rata by `(1 − k)`. The strength `k = ΔE·t_P/ħ` is set by the energy
//! uncertainty of the current state,
//!
//! ```text
//! ΔE = ½ Σ_{i,j} P_i P_j |E_i − E_j|
//! ```
//!
//! summed per subsystem for entangled many-body states. Two exact
//! consequences drive the whole test strategy: the ensemble expectation of
//! every `P_i` is conserved (a martingale — the Born rule at the ensemble
//! level), and every cross moment `E[P_i P_j]` contracts by `(1 − k²)` per
//! instant.
//!
//! Energies here are fractions of `E_P`, so `k = 2π·ΔE` without any
//! constant lookups in the inner loop: `k = ΔE·t_P/ħ = (ΔE/E_P)·(h/ħ)`.

use rand::Rng;

use crate::constants::CollapseConstants;
use crate::distribution::BranchDistribution;
use crate::error::{Error, Result};
use crate::spectrum::{EnergySpectrum, ManyBodySpectrum, Spectrum};

/// Mean absolute pairwise energy spread of a superposition,
/// in fractions of `E_P`.
pub fn energy_uncertainty(dist: &BranchDistribution, spectrum: &EnergySpectrum) -> Result<f64> {
    if dist.len() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            context: "energy_uncertainty",
            expected: spectrum.len(),
            found: dist.len(),
        });
    }
    Ok(pairwise_spread(dist.probs(), spectrum.levels()))
}

/// Sum of the per-subsystem energy uncertainties of an entangled state,
/// in fractions of `E_P`.
///
/// This is the sum over rows of the single-system spread; it never falls
/// below the uncertainty of the total energy, and stays positive for
/// degenerate branches whose total energies coincide.
pub fn energy_uncertainty_many_body(
    dist: &BranchDistribution,
    spectrum: &ManyBodySpectrum,
) -> Result<f64> {
    if dist.len() != spectrum.branch_count() {
        return Err(Error::DimensionMismatch {
            context: "energy_uncertainty_many_body",
            expected: spectrum.branch_count(),
            found: dist.len(),
        });
    }
    let mut total = 0.0;
    for l in 0..spectrum.subsystem_count() {
        total += pairwise_spread(dist.probs(), spectrum.row(l));
    }
    Ok(total)
}

/// `½ Σ_{i,j} P_i P_j |E_i − E_j|`, exploiting symmetry over i<j.
fn pairwise_spread(probs: &[f64], levels: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..probs.len() {
        for j in (i + 1)..probs.len() {
            sum += probs[i] * probs[j] * (levels[i] - levels[j]).abs();
        }
    }
    sum
}

/// Per-instant collapse strength `k = ΔE·t_P/ħ`, clamped to `[0, 1]`,
/// with `ΔE` in eV.
///
/// A formal `k > 1` (uncertainty at the Planck scale) is clamped rather
/// than rejected: `k = 1` is instantaneous collapse. Negative uncertainty
/// is a domain error — a negative gain would drive probabilities negative.
pub fn collapse_strength(delta_e_ev: f64, constants: &CollapseConstants) -> Result<f64> {
    if !delta_e_ev.is_finite() || delta_e_ev < 0.0 {
        return Err(Error::NegativeEnergyUncertainty(delta_e_ev));
    }
    Ok((delta_e_ev * constants.planck_time_s() / constants.hbar_ev_s()).min(1.0))
}

/// Collapse strength from an uncertainty already in fractions of `E_P`.
pub fn strength_from_planck_fraction(delta_e: f64) -> f64 {
    (std::f64::consts::TAU * delta_e).min(1.0)
}

/// Closed-form collapse time `τ_c = ħ·E_P/ΔE²` in seconds, with `ΔE` in eV.
///
/// `ΔE = 0` means no collapse ever happens; that is reported as infinite
/// time, not as an error. The estimate equals `t_P/k²` up to the factor
/// `2π` the strength formula absorbs into its order-unity coefficient.
pub fn collapse_time_estimate(delta_e_ev: f64, constants: &CollapseConstants) -> Result<f64> {
    if !delta_e_ev.is_finite() || delta_e_ev < 0.0 {
        return Err(Error::NegativeEnergyUncertainty(delta_e_ev));
    }
    if delta_e_ev == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(constants.hbar_ev_s() * constants.planck_energy_ev() / (delta_e_ev * delta_e_ev))
}

/// Sample the branch where the instant's collapse happens: index `i` with
/// probability `P_i`, by cumulative-sum inversion of one uniform draw.
///
/// A draw landing exactly on a cumulative boundary belongs to the later
/// bucket; the final bucket absorbs any residual rounding mass.
pub fn sample_collapse_branch<R: Rng + ?Sized>(dist: &BranchDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, &p) in dist.probs().iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    dist.len() - 1
}

/// One tiny collapse: the chosen branch gains `k·(1 − P)`, all others
/// shrink by `(1 − k)`.
pub fn tiny_collapse_step(
    dist: &BranchDistribution,
    k: f64,
    chosen: usize,
) -> Result<BranchDistribution> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::StrengthOutOfRange(k));
    }
    if chosen >= dist.len() {
        return Err(Error::BranchOutOfRange {
            index: chosen,
            len: dist.len(),
        });
    }
    let mut next: Vec<f64> = dist.probs().iter().map(|p| p * (1.0 - k)).collect();
    next[chosen] = dist.probs()[chosen] + k * (1.0 - dist.probs()[chosen]);
    Ok(BranchDistribution::from_step(next))
}

/// How the per-instant strength is chosen during evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvolveMode {
    /// `k` recomputed each instant from the current energy uncertainty.
    ModelK,
    /// Constant `k`, for closed-form decay checks.
    FixedK(f64),
}

impl EvolveMode {
    pub fn validate(&self) -> Result<()> {
        if let EvolveMode::FixedK(k) = self {
            if !(0.0..=1.0).contains(k) || !k.is_finite() {
                return Err(Error::StrengthOutOfRange(*k));
            }
        }
        Ok(())
    }
}

/// One instant of stochastic evolution: compute `k`, sample the branch,
/// apply the tiny collapse. Returns the next state and the sampled branch.
///
/// `spectrum` is required in [`EvolveMode::ModelK`]; a vertex distribution
/// has zero uncertainty there, so vertices are absorbing states.
pub fn evolve_step<R: Rng + ?Sized>(
    dist: &BranchDistribution,
    spectrum: Option<&Spectrum>,
    mode: EvolveMode,
    rng: &mut R,
) -> Result<(BranchDistribution, usize)> {
    let k = match mode {
        EvolveMode::FixedK(k) => {
            mode.validate()?;
            k
        }
        EvolveMode::ModelK => {
            let spectrum = spectrum.ok_or_else(|| {
                Error::InvalidConfig("model-k evolution requires a spectrum".into())
            })?;
            let delta_e = match spectrum {
                Spectrum::Single(s) => energy_uncertainty(dist, s)?,
                Spectrum::ManyBody(s) => energy_uncertainty_many_body(dist, s)?,
            };
            strength_from_planck_fraction(delta_e)
        }
    };
    let chosen = sample_collapse_branch(dist, rng);
    let next = tiny_collapse_step(dist, k, chosen)?;
    Ok((next, chosen))
}
