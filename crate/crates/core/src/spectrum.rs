//! Energy spectra of the collapsing system.
//!
//! Internally every energy is stored as a dimensionless fraction of the
//! Planck energy `E_P`. Physical scenarios span ~60 orders of magnitude in
//! eV; keeping the inner loops in Planck fractions confines unit conversion
//! to the constructors and accessors here.

use crate::constants::CollapseConstants;
use crate::error::{Error, Result};

/// Relative tolerance for unit round-trips.
pub const UNIT_ROUNDTRIP_TOL: f64 = 1e-12;

fn check_levels(levels: &[f64], context: &str) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidSpectrum(format!(
            "{context}: at least one level required"
        )));
    }
    if let Some(bad) = levels.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidSpectrum(format!(
            "{context}: non-finite level {bad}"
        )));
    }
    Ok(())
}

/// The eigenvalues `E_i` of a multi-level system, in fractions of `E_P`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    levels: Vec<f64>,
}

impl EnergySpectrum {
    /// Levels already expressed as fractions of the Planck energy.
    pub fn from_planck_fractions(levels: Vec<f64>) -> Result<Self> {
        check_levels(&levels, "energy spectrum")?;
        Ok(Self { levels })
    }

    /// Levels in eV.
    pub fn from_ev(levels_ev: &[f64], constants: &CollapseConstants) -> Result<Self> {
        let ep = constants.planck_energy_ev();
        Self::from_planck_fractions(levels_ev.iter().map(|e| e / ep).collect())
    }

    /// Levels given as frequencies in Hz, converted via `E = hν`.
    pub fn from_frequencies_hz(levels_hz: &[f64], constants: &CollapseConstants) -> Result<Self> {
        let h = constants.planck_constant_ev_s();
        Self::from_ev(
            &levels_hz.iter().map(|f| f * h).collect::<Vec<_>>(),
            constants,
        )
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Levels back in eV.
    pub fn to_ev(&self, constants: &CollapseConstants) -> Vec<f64> {
        let ep = constants.planck_energy_ev();
        self.levels.iter().map(|e| e * ep).collect()
    }
}

/// Per-subsystem, per-branch energies `E_li` of an entangled many-body
/// state: `n` subsystems (rows) by `m` branches (columns), row-major,
/// in fractions of `E_P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodySpectrum {
    energies: Vec<f64>,
    subsystems: usize,
    branches: usize,
}

impl ManyBodySpectrum {
    /// One row per subsystem; all rows must share the branch count.
    pub fn from_planck_fractions(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSpectrum(
                "many-body spectrum: at least one subsystem required".into(),
            ));
        }
        let branches = rows[0].len();
        let mut energies = Vec::with_capacity(rows.len() * branches);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != branches {
                return Err(Error::DimensionMismatch {
                    context: "many-body spectrum rows",
                    expected: branches,
                    found: row.len(),
                });
            }
            check_levels(row, &format!("many-body spectrum row {l}"))?;
            energies.extend_from_slice(row);
        }
        Ok(Self {
            energies,
            subsystems: rows.len(),
            branches,
        })
    }

    pub fn from_ev(rows_ev: &[Vec<f64>], constants: &CollapseConstants) -> Result<Self> {
        let ep = constants.planck_energy_ev();
        Self::from_planck_fractions(
            rows_ev
                .iter()
                .map(|row| row.iter().map(|e| e / ep).collect())
                .collect(),
        )
    }

    pub fn subsystem_count(&self) -> usize {
        self.subsystems
    }

    pub fn branch_count(&self) -> usize {
        self.branches
    }

    /// The per-branch energies of subsystem `l`.
    pub fn row(&self, l: usize) -> &[f64] {
        &self.energies[l * self.branches..(l + 1) * self.branches]
    }

    /// Collapse the rows into the spectrum of total energies `Σ_l E_li`.
    pub fn total_energy_spectrum(&self) -> EnergySpectrum {
        let mut totals = vec![0.0; self.branches];
        for l in 0..self.subsystems {
            for (t, e) in totals.iter_mut().zip(self.row(l)) {
                *t += e;
            }
        }
        EnergySpectrum { levels: totals }
    }
}

/// Either spectrum shape, as accepted by the evolution driver.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    Single(EnergySpectrum),
    ManyBody(ManyBodySpectrum),
}

impl Spectrum {
    pub fn branch_count(&self) -> usize {
        match self {
            Spectrum::Single(s) => s.len(),
            Spectrum::ManyBody(s) => s.branch_count(),
        }
    }
}

impl From<EnergySpectrum> for Spectrum {
    fn from(s: EnergySpectrum) -> Self {
        Spectrum::Single(s)
    }
}

impl From<ManyBodySpectrum> for Spectrum {
    fn from(s: ManyBodySpectrum) -> Self {
        Spectrum::ManyBody(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ev_roundtrip() {
        let c = CollapseConstants::physical();
        let input = [0.0, 1.0, 2.5e11, 1e-33];
        let spec = EnergySpectrum::from_ev(&input, &c).unwrap();
        for (orig, back) in input.iter().zip(spec.to_ev(&c)) {
            if *orig == 0.0 {
                assert_eq!(back, 0.0);
            } else {
                assert!((back / orig - 1.0).abs() < UNIT_ROUNDTRIP_TOL);
            }
        }
    }

    #[test]
    fn frequency_construction() {
        let c = CollapseConstants::physical();
        // 1 Hz corresponds to h eV
        let spec = EnergySpectrum::from_frequencies_hz(&[1.0], &c).unwrap();
        let ev = spec.to_ev(&c)[0];
        assert!((ev / c.planck_constant_ev_s() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(EnergySpectrum::from_planck_fractions(vec![]).is_err());
        assert!(EnergySpectrum::from_planck_fractions(vec![f64::NAN]).is_err());
        assert!(ManyBodySpectrum::from_planck_fractions(vec![]).is_err());
        assert!(
            ManyBodySpectrum::from_planck_fractions(vec![vec![1.0, 2.0], vec![1.0]]).is_err()
        );
    }

    #[test]
    fn total_energy_spectrum_sums_rows() {
        let mb =
            ManyBodySpectrum::from_planck_fractions(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(mb.total_energy_spectrum().levels(), &[1.0, 1.0]);
    }
}
