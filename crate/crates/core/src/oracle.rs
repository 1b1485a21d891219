//! Exact enumeration of the event tree on small instances.
//!
//! The stochastic process branches m ways per instant; walking every event
//! sequence and weighting each path by its probability product gives the
//! ensemble moments exactly (up to float rounding). This is the reference
//! the Monte Carlo engine is validated against.

use crate::distribution::BranchDistribution;
use crate::dynamics::{
    energy_uncertainty, energy_uncertainty_many_body, strength_from_planck_fraction,
    tiny_collapse_step, EvolveMode,
};
use crate::ensemble::{pair_count, pair_list, EnsembleStats};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use serde::Serialize;

/// Default enumeration budget, in node visits (~seconds of runtime).
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Compensated (Kahan) accumulator; path counts reach ~1e7 and the
/// acceptance tolerances sit at 1e-12, so naive summation is too sloppy.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Exact per-step moments of the event tree.
#[derive(Debug, Clone, Serialize)]
pub struct EventTreeMoments {
    /// Branch count m.
    pub levels: usize,
    /// Tree depth (number of instants enumerated).
    pub steps: u64,
    /// `E[P_i]` for step 0..=steps, indexed `[step][i]`.
    pub mean_diag: Vec<Vec<f64>>,
    /// `E[P_i·P_j]` for i<j in lexicographic order, indexed `[step][pair]`.
    pub mean_cross: Vec<Vec<f64>>,
    /// Total path probability reaching each depth (≈ 1 everywhere).
    pub depth_weight: Vec<f64>,
    /// Nodes visited.
    pub node_count: u64,
}

/// Walk the full event tree to `steps` instants and return exact moments.
///
/// Fixed-k trees need no spectrum; model-k trees recompute the strength
/// from each node's distribution. Depth-first with an explicit stack; no
/// memoization, since distinct paths yield distinct distributions in
/// model-k mode. The budget counts node visits.
pub fn enumerate_exact(
    initial: &BranchDistribution,
    mode: EvolveMode,
    spectrum: Option<&Spectrum>,
    steps: u64,
    node_budget: u64,
) -> Result<EventTreeMoments> {
    mode.validate()?;
    if matches!(mode, EvolveMode::ModelK) && spectrum.is_none() {
        return Err(Error::InvalidConfig(
            "model-k enumeration requires a spectrum".into(),
        ));
    }
    if let Some(s) = spectrum {
        if s.branch_count() != initial.len() {
            return Err(Error::DimensionMismatch {
                context: "enumerate_exact",
                expected: initial.len(),
                found: s.branch_count(),
            });
        }
    }
    let m = initial.len();
    let pairs = pair_list(m);
    let rows = (steps + 1) as usize;
    let mut diag = vec![vec![Kahan::default(); m]; rows];
    let mut cross = vec![vec![Kahan::default(); pairs.len()]; rows];
    let mut weight = vec![Kahan::default(); rows];

    let mut node_count = 0u64;
    let mut stack: Vec<(BranchDistribution, u64, f64)> = vec![(initial.clone(), 0, 1.0)];
    while let Some((dist, depth, path_prob)) = stack.pop() {
        node_count += 1;
        if node_count > node_budget {
            return Err(Error::BudgetExceeded {
                context: "event-tree enumeration",
                needed: node_count,
                budget: node_budget,
            });
        }
        let row = depth as usize;
        weight[row].add(path_prob);
        let probs = dist.probs();
        for (i, &p) in probs.iter().enumerate() {
            diag[row][i].add(path_prob * p);
        }
        for (slot, &(i, j)) in pairs.iter().enumerate() {
            cross[row][slot].add(path_prob * probs[i] * probs[j]);
        }
        if depth == steps {
            continue;
        }
        let k = step_strength(&dist, mode, spectrum)?;
        for (i, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue; // zero-probability event contributes nothing
            }
            let child = tiny_collapse_step(&dist, k, i)?;
            stack.push((child, depth + 1, path_prob * p));
        }
    }

    Ok(EventTreeMoments {
        levels: m,
        steps,
        mean_diag: diag
            .into_iter()
            .map(|row| row.into_iter().map(|k| k.sum).collect())
            .collect(),
        mean_cross: cross
            .into_iter()
            .map(|row| row.into_iter().map(|k| k.sum).collect())
            .collect(),
        depth_weight: weight.into_iter().map(|k| k.sum).collect(),
        node_count,
    })
}

fn step_strength(
    dist: &BranchDistribution,
    mode: EvolveMode,
    spectrum: Option<&Spectrum>,
) -> Result<f64> {
    match mode {
        EvolveMode::FixedK(k) => Ok(k),
        EvolveMode::ModelK => {
            let delta = match spectrum.expect("checked above") {
                Spectrum::Single(s) => energy_uncertainty(dist, s)?,
                Spectrum::ManyBody(s) => energy_uncertainty_many_body(dist, s)?,
            };
            Ok(strength_from_planck_fraction(delta))
        }
    }
}

/// One moment's worth of Monte Carlo vs. exact comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub step: u64,
    pub moment: String,
    pub mc_mean: f64,
    pub exact: f64,
    pub diff: f64,
    pub z: f64,
}

/// Result of diffing an ensemble against the enumeration oracle.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCompareReport {
    pub rows: Vec<CompareRow>,
    pub max_abs_diff: f64,
    pub max_abs_z: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// z-score threshold shared by the statistical checks.
pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;

/// Compare Monte Carlo means against enumerated moments, z-scored by the
/// Monte Carlo standard errors. Passes iff every |z| stays under the
/// threshold. Empty recorded series yield an empty passing report.
pub fn oracle_compare(moments: &EventTreeMoments, stats: &EnsembleStats) -> Result<OracleCompareReport> {
    oracle_compare_with(moments, stats, DEFAULT_Z_THRESHOLD)
}

pub fn oracle_compare_with(
    moments: &EventTreeMoments,
    stats: &EnsembleStats,
    threshold: f64,
) -> Result<OracleCompareReport> {
    if stats.levels != moments.levels {
        return Err(Error::DimensionMismatch {
            context: "oracle_compare levels",
            expected: moments.levels,
            found: stats.levels,
        });
    }
    let pairs = pair_list(stats.levels);
    let mut rows = Vec::new();
    let mut max_abs_diff: f64 = 0.0;
    let mut max_abs_z: f64 = 0.0;
    for (r, &step) in stats.recorded_steps.iter().enumerate() {
        if step > moments.steps {
            return Err(Error::DimensionMismatch {
                context: "oracle_compare steps",
                expected: moments.steps as usize,
                found: step as usize,
            });
        }
        let row = step as usize;
        for i in 0..stats.levels {
            let (diff, z) = score(stats.mean_diag[r][i], moments.mean_diag[row][i], stats.se_diag[r][i]);
            max_abs_diff = max_abs_diff.max(diff.abs());
            max_abs_z = max_abs_z.max(z.abs());
            rows.push(CompareRow {
                step,
                moment: format!("P{i}"),
                mc_mean: stats.mean_diag[r][i],
                exact: moments.mean_diag[row][i],
                diff,
                z,
            });
        }
        for (slot, &(i, j)) in pairs.iter().enumerate() {
            let (diff, z) = score(
                stats.mean_cross[r][slot],
                moments.mean_cross[row][slot],
                stats.se_cross[r][slot],
            );
            max_abs_diff = max_abs_diff.max(diff.abs());
            max_abs_z = max_abs_z.max(z.abs());
            rows.push(CompareRow {
                step,
                moment: format!("P{i}P{j}"),
                mc_mean: stats.mean_cross[r][slot],
                exact: moments.mean_cross[row][slot],
                diff,
                z,
            });
        }
    }
    debug_assert_eq!(
        rows.len(),
        stats.recorded_steps.len() * (stats.levels + pair_count(stats.levels))
    );
    Ok(OracleCompareReport {
        pass: max_abs_z < threshold,
        rows,
        max_abs_diff,
        max_abs_z,
        threshold,
    })
}

/// Difference and z-score; a zero standard error demands (near-)exact
/// agreement and otherwise scores as infinite.
fn score(mc: f64, exact: f64, se: f64) -> (f64, f64) {
    let diff = mc - exact;
    let z = if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    (diff, z)
}
