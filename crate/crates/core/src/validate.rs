//! Statistical tests of the model's analytic predictions.
//!
//! Two exact properties anchor everything: per-branch means are conserved
//! (martingale) and cross moments contract geometrically at rate
//! `ln(1 − k²)` for constant k. The tests here score Monte Carlo output
//! against those predictions and against independent runs.

use serde::Serialize;

use crate::distribution::Partition;
use crate::dynamics::EvolveMode;
use crate::ensemble::{
    estimate_half_decay, fixed_k_half_decay, pair_list, run_ensemble, EnsembleStats, RunConfig,
};
use crate::error::{Error, Result};
use crate::oracle::{enumerate_exact, oracle_compare, DEFAULT_Z_THRESHOLD};
use crate::spectrum::{EnergySpectrum, Spectrum};
use crate::BranchDistribution;

/// Default relative tolerance on the fitted decay rate.
pub const DEFAULT_RATE_TOLERANCE: f64 = 0.02;

/// Drift of per-branch ensemble means from their initial values.
#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub max_abs_z: f64,
    /// `(recorded step, branch)` of the worst drift.
    pub worst: Option<(u64, usize)>,
    pub threshold: f64,
    /// Too few trajectories for a meaningful standard error.
    pub insufficient_statistics: bool,
    pub pass: bool,
}

/// z-score every recorded step's branch means against step 0.
pub fn martingale_test(stats: &EnsembleStats) -> MartingaleReport {
    martingale_test_with(stats, DEFAULT_Z_THRESHOLD)
}

pub fn martingale_test_with(stats: &EnsembleStats, threshold: f64) -> MartingaleReport {
    if stats.trajectories < 2 || stats.recorded_steps.is_empty() {
        return MartingaleReport {
            max_abs_z: f64::NAN,
            worst: None,
            threshold,
            insufficient_statistics: true,
            pass: false,
        };
    }
    let mut max_abs_z: f64 = 0.0;
    let mut worst = None;
    for r in 1..stats.recorded_steps.len() {
        for i in 0..stats.levels {
            let diff = stats.mean_diag[r][i] - stats.mean_diag[0][i];
            let se = stats.se_diag[r][i];
            let z = if se > 0.0 {
                diff / se
            } else if diff.abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            if z.abs() > max_abs_z {
                max_abs_z = z.abs();
                worst = Some((stats.recorded_steps[r], i));
            }
        }
    }
    MartingaleReport {
        max_abs_z,
        worst,
        threshold,
        insufficient_statistics: false,
        pass: max_abs_z < threshold,
    }
}

/// Log-linear fit of a cross-moment series against the `(1 − k²)ⁿ` law.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFitReport {
    /// Fitted slope of `ln E[P_i P_j]` per step.
    pub fitted_rate: f64,
    pub expected_rate: f64,
    pub rate_relative_error: f64,
    pub rate_tolerance: f64,
    pub intercept: f64,
    pub expected_intercept: f64,
    pub intercept_z: f64,
    pub pass: bool,
}

/// Fit `ln(mean P_i P_j)` against step count and check the rate matches
/// `ln(1 − k²)` and the intercept matches the initial cross moment.
pub fn decay_fit_test(stats: &EnsembleStats, i: usize, j: usize, k: f64) -> Result<DecayFitReport> {
    decay_fit_test_with(stats, i, j, k, DEFAULT_RATE_TOLERANCE)
}

pub fn decay_fit_test_with(
    stats: &EnsembleStats,
    i: usize,
    j: usize,
    k: f64,
    rate_tolerance: f64,
) -> Result<DecayFitReport> {
    if i == j {
        return Err(Error::DiagonalPair(i));
    }
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::StrengthOutOfRange(k));
    }
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    let slot = pair_list(stats.levels)
        .iter()
        .position(|&p| p == (a, b))
        .ok_or(Error::BranchOutOfRange {
            index: a.max(b),
            len: stats.levels,
        })?;
    let initial = stats
        .mean_cross
        .first()
        .map(|row| row[slot])
        .unwrap_or(0.0);
    if initial <= 0.0 {
        return Err(Error::DegenerateSeries(format!(
            "initial cross moment E[P{a}P{b}] is zero"
        )));
    }

    // Fit over the positive prefix of the series, carrying each point's
    // log-space standard error (delta method: se(ln y) ≈ se(y)/y).
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sigmas = Vec::new();
    for (r, &step) in stats.recorded_steps.iter().enumerate() {
        let value = stats.mean_cross[r][slot];
        if value <= 0.0 {
            break;
        }
        xs.push(step as f64);
        ys.push(value.ln());
        sigmas.push(stats.se_cross[r][slot] / value);
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateSeries(
            "fewer than two positive cross-moment samples".into(),
        ));
    }
    let (slope, intercept) = ols(&xs, &ys);

    let expected_rate = (1.0 - k * k).ln();
    let rate_err = (slope - expected_rate).abs();
    // Relative tolerance, with an absolute epsilon so the k = 0 rate of
    // exactly zero is accepted despite last-bit rounding in the fit.
    let rate_ok = rate_err <= rate_tolerance * expected_rate.abs() + 1e-12;

    // The intercept is a linear functional of the points. Series noise is
    // correlated across steps (the same trajectories), so residual-based
    // errors would be badly optimistic; bound the error instead by the
    // perfectly-correlated worst case Σ|w_i|·σ_i.
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let se_intercept: f64 = xs
        .iter()
        .zip(&sigmas)
        .map(|(x, sigma)| (1.0 / n - xbar * (x - xbar) / sxx).abs() * sigma)
        .sum();
    let expected_intercept = initial.ln();
    let intercept_diff = intercept - expected_intercept;
    let intercept_z = if se_intercept > 0.0 {
        intercept_diff / se_intercept
    } else if intercept_diff.abs() <= 1e-9 {
        // exact series: only rounding noise remains
        0.0
    } else {
        f64::INFINITY
    };
    let intercept_ok = intercept_z.abs() < DEFAULT_Z_THRESHOLD;
    Ok(DecayFitReport {
        fitted_rate: slope,
        expected_rate,
        rate_relative_error: if expected_rate == 0.0 {
            rate_err
        } else {
            rate_err / expected_rate.abs()
        },
        rate_tolerance,
        intercept,
        expected_intercept,
        intercept_z,
        pass: rate_ok && intercept_ok,
    })
}

/// Ordinary least squares `y = a + b·x`; returns `(b, a)`.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    (slope, ybar - slope * xbar)
}

/// Two-sample comparison of ensemble moment series.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleCompareReport {
    pub max_abs_z: f64,
    pub comparisons: usize,
    pub threshold: f64,
    pub pass: bool,
}

/// z-score two independent ensembles against each other, moment by moment
/// at every shared recorded step (two-sample z with pooled standard error).
pub fn compare_ensembles(a: &EnsembleStats, b: &EnsembleStats) -> Result<EnsembleCompareReport> {
    if a.levels != b.levels {
        return Err(Error::DimensionMismatch {
            context: "compare_ensembles levels",
            expected: a.levels,
            found: b.levels,
        });
    }
    if a.recorded_steps != b.recorded_steps {
        return Err(Error::DimensionMismatch {
            context: "compare_ensembles recorded steps",
            expected: a.recorded_steps.len(),
            found: b.recorded_steps.len(),
        });
    }
    let mut max_abs_z: f64 = 0.0;
    let mut comparisons = 0;
    let pairs = pair_count_of(a);
    for r in 0..a.recorded_steps.len() {
        for i in 0..a.levels {
            max_abs_z = max_abs_z.max(two_sample_z(
                a.mean_diag[r][i],
                a.se_diag[r][i],
                b.mean_diag[r][i],
                b.se_diag[r][i],
            ));
            comparisons += 1;
        }
        for p in 0..pairs {
            max_abs_z = max_abs_z.max(two_sample_z(
                a.mean_cross[r][p],
                a.se_cross[r][p],
                b.mean_cross[r][p],
                b.se_cross[r][p],
            ));
            comparisons += 1;
        }
    }
    Ok(EnsembleCompareReport {
        max_abs_z,
        comparisons,
        threshold: DEFAULT_Z_THRESHOLD,
        pass: max_abs_z < DEFAULT_Z_THRESHOLD,
    })
}

fn pair_count_of(stats: &EnsembleStats) -> usize {
    crate::ensemble::pair_count(stats.levels)
}

fn two_sample_z(m1: f64, se1: f64, m2: f64, se2: f64) -> f64 {
    let pooled = (se1 * se1 + se2 * se2).sqrt();
    let diff = m1 - m2;
    if pooled > 0.0 {
        (diff / pooled).abs()
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Outcome of one named check in the verification battery.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// The check's scalar statistic (max |z|, relative error, ratio…).
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

/// Sizes and seed for the verification battery.
#[derive(Debug, Clone)]
pub struct BatterySettings {
    pub trajectories: u64,
    pub steps: u64,
    pub base_seed: u64,
    pub threads: Option<usize>,
}

impl Default for BatterySettings {
    fn default() -> Self {
        Self {
            trajectories: 10_000,
            steps: 1000,
            base_seed: 2024,
            threads: None,
        }
    }
}

impl BatterySettings {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::InvalidConfig(
                "battery trajectories must be positive".into(),
            ));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("battery steps must be positive".into()));
        }
        Ok(())
    }
}

/// Run the full property battery: martingale conservation in fixed-k and
/// model-k modes, the exponential decay fit, half-decay laws, exact-oracle
/// agreement on small instances, scale invariance under coarse graining,
/// and Born absorption statistics.
pub fn run_battery(settings: &BatterySettings) -> Result<Vec<CheckOutcome>> {
    settings.validate()?;
    let mut outcomes = Vec::new();
    let seed = settings.base_seed;

    let uniform3 = BranchDistribution::uniform(3)?;

    // Martingale, fixed k.
    let mut cfg = RunConfig::new(uniform3.clone(), EvolveMode::FixedK(0.05));
    cfg.steps = settings.steps;
    cfg.trajectories = settings.trajectories;
    cfg.record_stride = (settings.steps / 100).max(1);
    cfg.base_seed = seed;
    cfg.threads = settings.threads;
    let stats = run_ensemble(&cfg)?;
    let report = martingale_test(&stats);
    outcomes.push(CheckOutcome {
        name: "martingale_fixed_k".into(),
        statistic: report.max_abs_z,
        threshold: report.threshold,
        pass: report.pass,
        detail: format!("3-level uniform, k = 0.05, worst drift at {:?}", report.worst),
    });

    // Martingale, model k (desk-scale spectrum in Planck fractions).
    let spectrum = Spectrum::Single(EnergySpectrum::from_planck_fractions(vec![
        0.0, 0.01, 0.02,
    ])?);
    let mut cfg = RunConfig::new(uniform3, EvolveMode::ModelK);
    cfg.spectrum = Some(spectrum);
    cfg.steps = settings.steps;
    cfg.trajectories = settings.trajectories;
    cfg.record_stride = (settings.steps / 100).max(1);
    cfg.base_seed = seed ^ 0x6d6b;
    cfg.threads = settings.threads;
    let stats = run_ensemble(&cfg)?;
    let report = martingale_test(&stats);
    outcomes.push(CheckOutcome {
        name: "martingale_model_k".into(),
        statistic: report.max_abs_z,
        threshold: report.threshold,
        pass: report.pass,
        detail: format!(
            "3-level uniform, spectrum (0, 0.01, 0.02)·E_P, worst drift at {:?}",
            report.worst
        ),
    });

    // Exponential decay fit, fixed k = 0.1 over 200 steps. The 2% rate
    // tolerance is calibrated for 1e5 trajectories; smaller settings
    // would fail on statistics alone, so this check has a floor.
    let half = BranchDistribution::new(vec![0.5, 0.5])?;
    let mut cfg = RunConfig::new(half.clone(), EvolveMode::FixedK(0.1));
    cfg.steps = 200;
    cfg.trajectories = settings.trajectories.max(100_000);
    cfg.base_seed = seed ^ 0xdecaf;
    cfg.threads = settings.threads;
    let stats = run_ensemble(&cfg)?;
    let fit = decay_fit_test(&stats, 0, 1, 0.1)?;
    outcomes.push(CheckOutcome {
        name: "decay_fit_fixed_k".into(),
        statistic: fit.rate_relative_error,
        threshold: fit.rate_tolerance,
        pass: fit.pass,
        detail: format!(
            "fitted rate {:.6}, expected ln(0.99) = {:.6}, intercept z = {:.2}",
            fit.fitted_rate, fit.expected_rate, fit.intercept_z
        ),
    });

    // Half-decay of the same series against the closed form.
    let measured = estimate_half_decay(&stats, 0, 1)?;
    let expected = fixed_k_half_decay(0.1);
    let (stat, pass, detail) = match measured {
        Some(m) => (
            (m / expected - 1.0).abs(),
            (m / expected - 1.0).abs() < DEFAULT_RATE_TOLERANCE,
            format!("measured {m:.2} steps vs closed form {expected:.2}"),
        ),
        None => (f64::NAN, false, "series never crossed one half".into()),
    };
    outcomes.push(CheckOutcome {
        name: "half_decay_fixed_k".into(),
        statistic: stat,
        threshold: DEFAULT_RATE_TOLERANCE,
        pass,
        detail,
    });

    // Model-k half decay: k shrinks as the state polarizes, so the decay
    // is no faster than fixed-k at the initial strength, and stays within
    // the 1/k² order estimate. Gap chosen so the initial k is 0.1.
    let gap = 0.1 / (0.25 * std::f64::consts::TAU);
    let spectrum = Spectrum::Single(EnergySpectrum::from_planck_fractions(vec![0.0, gap])?);
    let mut cfg = RunConfig::new(half.clone(), EvolveMode::ModelK);
    cfg.spectrum = Some(spectrum);
    cfg.steps = 400;
    cfg.trajectories = settings.trajectories;
    cfg.base_seed = seed ^ 0x11a1f;
    cfg.threads = settings.threads;
    let model_stats = run_ensemble(&cfg)?;
    let model_half = estimate_half_decay(&model_stats, 0, 1)?;
    let order_estimate = 1.0 / (0.1f64 * 0.1); // t_P/k² in steps
    let (stat, pass, detail) = match model_half {
        Some(m) => {
            let ratio = m / expected;
            (
                ratio,
                m >= expected * 0.98 && m >= order_estimate / 2.0 && m <= order_estimate * 2.0,
                format!(
                    "model-k n_half {m:.1} steps; fixed-k prediction {expected:.1}; ratio {ratio:.3} (reported, not asserted as a correction factor)"
                ),
            )
        }
        None => (f64::NAN, false, "series never crossed one half".into()),
    };
    outcomes.push(CheckOutcome {
        name: "half_decay_model_k_ratio".into(),
        statistic: stat,
        threshold: 2.0,
        pass,
        detail,
    });

    // Exact-oracle agreement on 2- and 3-level instances.
    for (name, probs) in [
        ("oracle_compare_2level", vec![0.3, 0.7]),
        ("oracle_compare_3level", vec![0.2, 0.3, 0.5]),
    ] {
        let initial = BranchDistribution::new(probs)?;
        let steps = 10;
        let moments = enumerate_exact(
            &initial,
            EvolveMode::FixedK(0.1),
            None,
            steps,
            crate::oracle::DEFAULT_NODE_BUDGET,
        )?;
        let mut cfg = RunConfig::new(initial, EvolveMode::FixedK(0.1));
        cfg.steps = steps;
        cfg.trajectories = settings.trajectories;
        cfg.base_seed = seed ^ 0x0c1e;
        cfg.threads = settings.threads;
        let stats = run_ensemble(&cfg)?;
        let report = oracle_compare(&moments, &stats)?;
        outcomes.push(CheckOutcome {
            name: name.into(),
            statistic: report.max_abs_z,
            threshold: report.threshold,
            pass: report.pass,
            detail: format!(
                "max |MC − exact| = {:.3e} over {} moments",
                report.max_abs_diff,
                report.rows.len()
            ),
        });
    }

    // Scale invariance: a grouped 4-level run is statistically the 2-level
    // run with the group probabilities and the same k.
    let mut coarse = RunConfig::new(
        BranchDistribution::new(vec![0.2, 0.3, 0.1, 0.4])?,
        EvolveMode::FixedK(0.1),
    );
    coarse.steps = 100;
    coarse.trajectories = settings.trajectories;
    coarse.base_seed = seed ^ 0x5ca1e;
    coarse.coarse_partition = Some(Partition::new(vec![vec![0, 1], vec![2, 3]], 4)?);
    coarse.threads = settings.threads;
    let grouped = run_ensemble(&coarse)?;
    let mut direct = RunConfig::new(half, EvolveMode::FixedK(0.1));
    direct.steps = 100;
    direct.trajectories = settings.trajectories;
    direct.base_seed = seed ^ 0xd12ec7;
    direct.threads = settings.threads;
    let two_level = run_ensemble(&direct)?;
    let report = compare_ensembles(&grouped, &two_level)?;
    outcomes.push(CheckOutcome {
        name: "scale_invariance".into(),
        statistic: report.max_abs_z,
        threshold: report.threshold,
        pass: report.pass,
        detail: format!(
            "4-level grouped {{0,1}},{{2,3}} vs direct 2-level, {} comparisons",
            report.comparisons
        ),
    });

    // Born statistics of absorbed trajectories.
    let mut cfg = RunConfig::new(BranchDistribution::new(vec![0.3, 0.7])?, EvolveMode::FixedK(0.1));
    cfg.steps = 2000;
    cfg.trajectories = settings.trajectories;
    cfg.record_stride = 2000;
    cfg.base_seed = seed ^ 0xb0b;
    cfg.threads = settings.threads;
    let stats = run_ensemble(&cfg)?;
    let n = stats.trajectories as f64;
    let fraction = stats.absorbed_histogram[0] as f64 / n;
    let se = (0.3f64 * 0.7 / n).sqrt();
    let z = (fraction - 0.3).abs() / se;
    outcomes.push(CheckOutcome {
        name: "born_absorption".into(),
        statistic: z,
        threshold: 3.0,
        pass: z < 3.0 && stats.unabsorbed == 0,
        detail: format!(
            "branch-0 fraction {fraction:.4} vs initial 0.3 ({} unabsorbed)",
            stats.unabsorbed
        ),
    });

    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> BranchDistribution {
        BranchDistribution::new(p.to_vec()).unwrap()
    }

    fn small_stats(k: f64, trajectories: u64, seed: u64) -> EnsembleStats {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(k));
        cfg.steps = 100;
        cfg.trajectories = trajectories;
        cfg.base_seed = seed;
        run_ensemble(&cfg).unwrap()
    }

    #[test]
    fn martingale_passes_on_honest_dynamics() {
        let stats = small_stats(0.05, 5000, 1);
        let report = martingale_test(&stats);
        assert!(!report.insufficient_statistics);
        assert!(report.pass, "max |z| = {}", report.max_abs_z);
    }

    #[test]
    fn martingale_flags_single_trajectory() {
        let stats = small_stats(0.05, 1, 1);
        let report = martingale_test(&stats);
        assert!(report.insufficient_statistics);
        assert!(!report.pass);
    }

    #[test]
    fn decay_fit_k_zero_rate_zero() {
        let stats = small_stats(0.0, 50, 3);
        let fit = decay_fit_test(&stats, 0, 1, 0.0).unwrap();
        assert_eq!(fit.expected_rate, 0.0);
        assert!(fit.pass, "rate {} z {}", fit.fitted_rate, fit.intercept_z);
    }

    #[test]
    fn decay_fit_rejects_diagonal_and_degenerate() {
        let stats = small_stats(0.1, 100, 4);
        assert!(matches!(
            decay_fit_test(&stats, 1, 1, 0.1),
            Err(Error::DiagonalPair(1))
        ));
        // Vertex start: zero initial cross moment.
        let mut cfg = RunConfig::new(BranchDistribution::delta(2, 0).unwrap(), EvolveMode::FixedK(0.1));
        cfg.steps = 10;
        cfg.trajectories = 100;
        let vstats = run_ensemble(&cfg).unwrap();
        assert!(matches!(
            decay_fit_test(&vstats, 0, 1, 0.1),
            Err(Error::DegenerateSeries(_))
        ));
    }

    #[test]
    fn compare_mismatched_shapes_errors() {
        let a = small_stats(0.1, 100, 5);
        let mut cfg = RunConfig::new(dist(&[0.2, 0.3, 0.5]), EvolveMode::FixedK(0.1));
        cfg.steps = 100;
        cfg.trajectories = 100;
        let b = run_ensemble(&cfg).unwrap();
        assert!(compare_ensembles(&a, &b).is_err());
    }

    #[test]
    fn battery_rejects_zero_sizes() {
        let settings = BatterySettings {
            trajectories: 0,
            ..Default::default()
        };
        assert!(run_battery(&settings).is_err());
    }
}
