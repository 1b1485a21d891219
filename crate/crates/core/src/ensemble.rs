//! Trajectory ensembles and density-matrix moment estimation.
//!
//! Trajectories are independent units of work: trajectory `t` of a run
//! draws from the counter-based stream `(base_seed, t)` and nothing else,
//! so results are identical regardless of execution order. Aggregation
//! happens over fixed-size trajectory chunks whose partial sums merge in
//! index order — the parallel schedule can change which thread computes a
//! chunk but never the arithmetic, making ensembles bit-reproducible for
//! any thread count.
//!
//! The recorded series estimate the diagonal density-matrix elements
//! `ρ_ii ≈ mean P_i` and the cross moments `ρ_ij ≈ mean P_i·P_j` with
//! sample standard errors.

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{coarse_grain, BranchDistribution, Partition};
use crate::dynamics::{evolve_step, EvolveMode};
use crate::error::{Error, Result};
use crate::seeding::trajectory_rng;
use crate::spectrum::Spectrum;

/// A trajectory is declared absorbed once some branch carries this much
/// probability; the exact vertex is only reached asymptotically for k < 1.
pub const DEFAULT_ABSORPTION_THRESHOLD: f64 = 1.0 - 1e-9;

/// Default guard on `steps × trajectories`.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000_000;

/// Trajectories per aggregation chunk. Fixed: the chunking (not the thread
/// count) defines the summation order.
const CHUNK_TRAJECTORIES: u64 = 1024;

/// Full description of an ensemble run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub initial: BranchDistribution,
    /// Required in model-k mode; ignored by fixed-k evolution.
    pub spectrum: Option<Spectrum>,
    pub mode: EvolveMode,
    pub steps: u64,
    pub trajectories: u64,
    pub base_seed: u64,
    /// Snapshots are recorded at steps 0, stride, 2·stride, …
    pub record_stride: u64,
    pub absorption_threshold: f64,
    /// Upper bound on `steps × trajectories`.
    pub step_budget: u64,
    /// When set, statistics are accumulated for the coarse-grained
    /// distribution instead of the fine one.
    pub coarse_partition: Option<Partition>,
    /// Worker threads for the parallel map; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(initial: BranchDistribution, mode: EvolveMode) -> Self {
        Self {
            initial,
            spectrum: None,
            mode,
            steps: 100,
            trajectories: 1000,
            base_seed: 0,
            record_stride: 1,
            absorption_threshold: DEFAULT_ABSORPTION_THRESHOLD,
            step_budget: DEFAULT_STEP_BUDGET,
            coarse_partition: None,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive".into()));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidConfig("trajectories must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be positive".into()));
        }
        if !(self.absorption_threshold > 0.0 && self.absorption_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "absorption_threshold must lie in (0, 1), got {}",
                self.absorption_threshold
            )));
        }
        let needed = self
            .steps
            .checked_mul(self.trajectories)
            .ok_or(Error::BudgetExceeded {
                context: "ensemble run",
                needed: u64::MAX,
                budget: self.step_budget,
            })?;
        if needed > self.step_budget {
            return Err(Error::BudgetExceeded {
                context: "ensemble run",
                needed,
                budget: self.step_budget,
            });
        }
        if matches!(self.mode, EvolveMode::ModelK) {
            match &self.spectrum {
                None => {
                    return Err(Error::InvalidConfig(
                        "model-k runs require a spectrum".into(),
                    ))
                }
                Some(s) if s.branch_count() != self.initial.len() => {
                    return Err(Error::DimensionMismatch {
                        context: "run config spectrum",
                        expected: self.initial.len(),
                        found: s.branch_count(),
                    });
                }
                _ => {}
            }
        }
        if let Some(p) = &self.coarse_partition {
            if p.len() != self.initial.len() {
                return Err(Error::DimensionMismatch {
                    context: "run config coarse partition",
                    expected: self.initial.len(),
                    found: p.len(),
                });
            }
        }
        Ok(())
    }

    /// Steps at which snapshots are recorded.
    pub fn recorded_steps(&self) -> Vec<u64> {
        (0..=self.steps)
            .step_by(self.record_stride as usize)
            .collect()
    }

    /// Branch count the statistics are reported over (after grouping).
    pub fn stat_levels(&self) -> usize {
        self.coarse_partition
            .as_ref()
            .map(|p| p.group_count())
            .unwrap_or_else(|| self.initial.len())
    }
}

/// One realized trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(step, state)` at stride intervals; after absorption the state is
    /// frozen but still recorded.
    pub snapshots: Vec<(u64, BranchDistribution)>,
    pub absorbed_branch: Option<usize>,
    pub absorption_step: Option<u64>,
}

/// Walk one trajectory, invoking `visit` at every recorded step.
fn drive_trajectory<F>(
    config: &RunConfig,
    trajectory_index: u64,
    mut visit: F,
) -> Result<(Option<usize>, Option<u64>)>
where
    F: FnMut(u64, &BranchDistribution),
{
    let mut rng = trajectory_rng(config.base_seed, trajectory_index);
    let mut dist = config.initial.clone();
    let mut absorbed: Option<(usize, u64)> = absorption_state(&dist, config.absorption_threshold, 0);
    visit(0, &dist);
    for step in 1..=config.steps {
        if absorbed.is_none() {
            let (next, _) = evolve_step(&dist, config.spectrum.as_ref(), config.mode, &mut rng)?;
            dist = next;
            absorbed = absorption_state(&dist, config.absorption_threshold, step);
        }
        if step % config.record_stride == 0 {
            visit(step, &dist);
        }
    }
    Ok((absorbed.map(|(b, _)| b), absorbed.map(|(_, s)| s)))
}

fn absorption_state(
    dist: &BranchDistribution,
    threshold: f64,
    step: u64,
) -> Option<(usize, u64)> {
    let (branch, p) = dist.max_branch();
    (p >= threshold).then_some((branch, step))
}

/// Run a single trajectory, recording snapshots at stride intervals.
pub fn run_trajectory(config: &RunConfig, trajectory_index: u64) -> Result<Trajectory> {
    config.validate()?;
    let mut snapshots = Vec::with_capacity(config.recorded_steps().len());
    let (absorbed_branch, absorption_step) = drive_trajectory(config, trajectory_index, |step, d| {
        snapshots.push((step, d.clone()));
    })?;
    Ok(Trajectory {
        snapshots,
        absorbed_branch,
        absorption_step,
    })
}

/// Lexicographic list of index pairs i<j.
pub fn pair_list(levels: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(pair_count(levels));
    for i in 0..levels {
        for j in (i + 1)..levels {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Number of i<j pairs.
pub fn pair_count(levels: usize) -> usize {
    levels * levels.saturating_sub(1) / 2
}

/// Ensemble moment estimates per recorded step.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    /// Branch count of the recorded statistics (group count when the run
    /// was coarse-grained).
    pub levels: usize,
    pub trajectories: u64,
    pub recorded_steps: Vec<u64>,
    /// `mean P_i`, indexed `[recorded][i]`.
    pub mean_diag: Vec<Vec<f64>>,
    pub se_diag: Vec<Vec<f64>>,
    /// `mean P_i·P_j` for i<j lexicographic, indexed `[recorded][pair]`.
    pub mean_cross: Vec<Vec<f64>>,
    pub se_cross: Vec<Vec<f64>>,
    /// Trajectories absorbed per branch.
    pub absorbed_histogram: Vec<u64>,
    pub unabsorbed: u64,
}

/// Partial sums for a chunk of trajectories. Merging is elementwise
/// addition, associative by construction.
struct ChunkStats {
    n: u64,
    sum_diag: Vec<f64>,
    sumsq_diag: Vec<f64>,
    sum_cross: Vec<f64>,
    sumsq_cross: Vec<f64>,
    absorbed: Vec<u64>,
    unabsorbed: u64,
}

impl ChunkStats {
    fn new(recorded: usize, levels: usize) -> Self {
        let pairs = pair_count(levels);
        Self {
            n: 0,
            sum_diag: vec![0.0; recorded * levels],
            sumsq_diag: vec![0.0; recorded * levels],
            sum_cross: vec![0.0; recorded * pairs],
            sumsq_cross: vec![0.0; recorded * pairs],
            absorbed: vec![0; levels],
            unabsorbed: 0,
        }
    }

    fn merge(&mut self, other: &ChunkStats) {
        self.n += other.n;
        for (a, b) in self.sum_diag.iter_mut().zip(&other.sum_diag) {
            *a += b;
        }
        for (a, b) in self.sumsq_diag.iter_mut().zip(&other.sumsq_diag) {
            *a += b;
        }
        for (a, b) in self.sum_cross.iter_mut().zip(&other.sum_cross) {
            *a += b;
        }
        for (a, b) in self.sumsq_cross.iter_mut().zip(&other.sumsq_cross) {
            *a += b;
        }
        for (a, b) in self.absorbed.iter_mut().zip(&other.absorbed) {
            *a += b;
        }
        self.unabsorbed += other.unabsorbed;
    }
}

fn run_chunk(config: &RunConfig, range: std::ops::Range<u64>) -> Result<ChunkStats> {
    let levels = config.stat_levels();
    let pairs = pair_list(levels);
    let recorded = config.recorded_steps().len();
    let stride = config.record_stride;
    let mut chunk = ChunkStats::new(recorded, levels);
    let mut grouped_buf: Option<BranchDistribution> = None;
    for t in range {
        let mut record_error: Option<Error> = None;
        let (absorbed_branch, _) = drive_trajectory(config, t, |step, dist| {
            let row = (step / stride) as usize;
            let view = match &config.coarse_partition {
                Some(p) => match coarse_grain(dist, p) {
                    Ok(g) => {
                        grouped_buf = Some(g);
                        grouped_buf.as_ref().unwrap()
                    }
                    Err(e) => {
                        record_error = Some(e);
                        return;
                    }
                },
                None => dist,
            };
            let probs = view.probs();
            for (i, &p) in probs.iter().enumerate() {
                let slot = row * levels + i;
                chunk.sum_diag[slot] += p;
                chunk.sumsq_diag[slot] += p * p;
            }
            for (slot, &(i, j)) in pairs.iter().enumerate() {
                let x = probs[i] * probs[j];
                let idx = row * pairs.len() + slot;
                chunk.sum_cross[idx] += x;
                chunk.sumsq_cross[idx] += x * x;
            }
        })?;
        if let Some(e) = record_error {
            return Err(e);
        }
        match absorbed_branch {
            Some(b) => {
                let group = config
                    .coarse_partition
                    .as_ref()
                    .map(|p| p.group_of(b))
                    .unwrap_or(b);
                chunk.absorbed[group] += 1;
            }
            None => chunk.unabsorbed += 1,
        }
        chunk.n += 1;
    }
    Ok(chunk)
}

/// Run the ensemble and estimate the per-step moments.
///
/// Chunks are mapped in parallel and merged in index order, so the result
/// bytes depend only on the configuration.
pub fn run_ensemble(config: &RunConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let ranges: Vec<std::ops::Range<u64>> = (0..config.trajectories)
        .step_by(CHUNK_TRAJECTORIES as usize)
        .map(|start| start..(start + CHUNK_TRAJECTORIES).min(config.trajectories))
        .collect();

    let partials: Result<Vec<ChunkStats>> = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| ranges.par_iter().map(|r| run_chunk(config, r.clone())).collect()),
        None => ranges.par_iter().map(|r| run_chunk(config, r.clone())).collect(),
    };
    let partials = partials?;

    let levels = config.stat_levels();
    let recorded_steps = config.recorded_steps();
    let mut total = ChunkStats::new(recorded_steps.len(), levels);
    for part in &partials {
        total.merge(part);
    }
    Ok(finalize(total, levels, recorded_steps))
}

fn finalize(total: ChunkStats, levels: usize, recorded_steps: Vec<u64>) -> EnsembleStats {
    let n = total.n;
    let pairs = pair_count(levels);
    let recorded = recorded_steps.len();
    let mut mean_diag = vec![vec![0.0; levels]; recorded];
    let mut se_diag = vec![vec![0.0; levels]; recorded];
    let mut mean_cross = vec![vec![0.0; pairs]; recorded];
    let mut se_cross = vec![vec![0.0; pairs]; recorded];
    for r in 0..recorded {
        for i in 0..levels {
            let slot = r * levels + i;
            let (m, se) = mean_se(total.sum_diag[slot], total.sumsq_diag[slot], n);
            mean_diag[r][i] = m;
            se_diag[r][i] = se;
        }
        for p in 0..pairs {
            let slot = r * pairs + p;
            let (m, se) = mean_se(total.sum_cross[slot], total.sumsq_cross[slot], n);
            mean_cross[r][p] = m;
            se_cross[r][p] = se;
        }
    }
    EnsembleStats {
        levels,
        trajectories: n,
        recorded_steps,
        mean_diag,
        se_diag,
        mean_cross,
        se_cross,
        absorbed_histogram: total.absorbed,
        unabsorbed: total.unabsorbed,
    }
}

/// Sample mean and standard error of the mean; `se = 0` when fewer than
/// two samples exist.
fn mean_se(sum: f64, sumsq: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Interpolated step count at which the cross moment `E[P_i P_j]` first
/// falls to half its initial value; `None` while the series has not yet
/// crossed (or started at zero).
pub fn estimate_half_decay(stats: &EnsembleStats, i: usize, j: usize) -> Result<Option<f64>> {
    if i == j {
        return Err(Error::DiagonalPair(i));
    }
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    let slot = pair_list(stats.levels)
        .iter()
        .position(|&p| p == (a, b))
        .ok_or(Error::BranchOutOfRange {
            index: a.max(b),
            len: stats.levels,
        })?;
    if stats.recorded_steps.is_empty() {
        return Ok(None);
    }
    let initial = stats.mean_cross[0][slot];
    if initial <= 0.0 {
        return Ok(None);
    }
    let target = 0.5 * initial;
    for r in 1..stats.recorded_steps.len() {
        let current = stats.mean_cross[r][slot];
        if current <= target {
            let prev = stats.mean_cross[r - 1][slot];
            let s0 = stats.recorded_steps[r - 1] as f64;
            let s1 = stats.recorded_steps[r] as f64;
            // Log interpolation is exact for pure exponential decay; fall
            // back to linear when the bracket touches zero.
            let frac = if current > 0.0 && prev > 0.0 {
                (prev.ln() - target.ln()) / (prev.ln() - current.ln())
            } else {
                (prev - target) / (prev - current)
            };
            return Ok(Some(s0 + frac * (s1 - s0)));
        }
    }
    Ok(None)
}

/// Closed-form half-decay step count for constant `k`:
/// `n_half = ln 2 / ln(1/(1−k²))`.
pub fn fixed_k_half_decay(k: f64) -> f64 {
    if k <= 0.0 {
        return f64::INFINITY;
    }
    if k >= 1.0 {
        return 0.0;
    }
    (2.0f64).ln() / (1.0 / (1.0 - k * k)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::EnergySpectrum;

    fn dist(p: &[f64]) -> BranchDistribution {
        BranchDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(0.1));
        cfg.validate().unwrap();
        cfg.steps = 0;
        assert!(cfg.validate().is_err());
        cfg.steps = 10;
        cfg.trajectories = 0;
        assert!(cfg.validate().is_err());
        cfg.trajectories = 10;
        cfg.absorption_threshold = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn budget_guard() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(0.1));
        cfg.steps = 1000;
        cfg.trajectories = 1000;
        cfg.step_budget = 100;
        assert!(matches!(
            cfg.validate(),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn model_k_needs_matching_spectrum() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::ModelK);
        assert!(cfg.validate().is_err());
        cfg.spectrum = Some(Spectrum::Single(
            EnergySpectrum::from_planck_fractions(vec![0.0, 0.01, 0.02]).unwrap(),
        ));
        assert!(cfg.validate().is_err());
        cfg.spectrum = Some(Spectrum::Single(
            EnergySpectrum::from_planck_fractions(vec![0.0, 0.01]).unwrap(),
        ));
        cfg.validate().unwrap();
    }

    #[test]
    fn vertex_absorbs_at_step_zero() {
        let mut cfg = RunConfig::new(BranchDistribution::delta(2, 0).unwrap(), EvolveMode::ModelK);
        cfg.spectrum = Some(Spectrum::Single(
            EnergySpectrum::from_planck_fractions(vec![0.0, 0.01]).unwrap(),
        ));
        cfg.steps = 5;
        cfg.trajectories = 1;
        let t = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(t.absorbed_branch, Some(0));
        assert_eq!(t.absorption_step, Some(0));
    }

    #[test]
    fn k_one_absorbs_at_step_one() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(1.0));
        cfg.steps = 3;
        for t in 0..20 {
            let tr = run_trajectory(&cfg, t).unwrap();
            assert_eq!(tr.absorption_step, Some(1));
            assert!(matches!(tr.absorbed_branch, Some(0) | Some(1)));
        }
    }

    #[test]
    fn snapshots_follow_stride() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(0.1));
        cfg.steps = 10;
        cfg.record_stride = 4;
        let t = run_trajectory(&cfg, 0).unwrap();
        let steps: Vec<u64> = t.snapshots.iter().map(|(s, _)| *s).collect();
        assert_eq!(steps, vec![0, 4, 8]);
    }

    #[test]
    fn single_trajectory_stats_equal_that_trajectory() {
        let mut cfg = RunConfig::new(dist(&[0.3, 0.7]), EvolveMode::FixedK(0.2));
        cfg.steps = 20;
        cfg.trajectories = 1;
        let stats = run_ensemble(&cfg).unwrap();
        let traj = run_trajectory(&cfg, 0).unwrap();
        for (r, (step, d)) in traj.snapshots.iter().enumerate() {
            assert_eq!(stats.recorded_steps[r], *step);
            for i in 0..2 {
                assert_eq!(stats.mean_diag[r][i], d.probs()[i]);
                assert_eq!(stats.se_diag[r][i], 0.0);
            }
            assert_eq!(stats.mean_cross[r][0], d.probs()[0] * d.probs()[1]);
        }
    }

    #[test]
    fn ensemble_reproducible_across_thread_counts() {
        let mut cfg = RunConfig::new(dist(&[0.3, 0.7]), EvolveMode::FixedK(0.1));
        cfg.steps = 50;
        cfg.trajectories = 3000; // spans multiple chunks
        cfg.base_seed = 99;
        let mut runs = Vec::new();
        for threads in [1usize, 4, 8] {
            let mut c = cfg.clone();
            c.threads = Some(threads);
            runs.push(run_ensemble(&c).unwrap());
        }
        for other in &runs[1..] {
            assert_eq!(runs[0].mean_diag, other.mean_diag);
            assert_eq!(runs[0].se_cross, other.se_cross);
            assert_eq!(runs[0].absorbed_histogram, other.absorbed_histogram);
        }
    }

    #[test]
    fn diagonal_means_sum_to_one() {
        let mut cfg = RunConfig::new(dist(&[0.2, 0.3, 0.5]), EvolveMode::FixedK(0.15));
        cfg.steps = 60;
        cfg.trajectories = 2000;
        let stats = run_ensemble(&cfg).unwrap();
        for row in &stats.mean_diag {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "diagonal sum {sum}");
        }
    }

    #[test]
    fn half_decay_matches_closed_form() {
        let k = 0.05f64;
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(k));
        cfg.steps = 600;
        cfg.trajectories = 20_000;
        cfg.base_seed = 5;
        let stats = run_ensemble(&cfg).unwrap();
        let measured = estimate_half_decay(&stats, 0, 1).unwrap().unwrap();
        let expected = fixed_k_half_decay(k); // ≈ 276.9
        assert!(
            (measured / expected - 1.0).abs() < 0.02,
            "measured {measured}, expected {expected}"
        );
    }

    #[test]
    fn half_decay_k_one_within_one_step() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(1.0));
        cfg.steps = 5;
        cfg.trajectories = 100;
        let stats = run_ensemble(&cfg).unwrap();
        let measured = estimate_half_decay(&stats, 0, 1).unwrap().unwrap();
        assert!(measured <= 1.0);
    }

    #[test]
    fn half_decay_not_crossed_is_none() {
        let mut cfg = RunConfig::new(dist(&[0.5, 0.5]), EvolveMode::FixedK(0.01));
        cfg.steps = 5;
        cfg.trajectories = 500;
        let stats = run_ensemble(&cfg).unwrap();
        assert_eq!(estimate_half_decay(&stats, 0, 1).unwrap(), None);
        assert!(estimate_half_decay(&stats, 1, 1).is_err());
    }

    #[test]
    fn absorption_fractions_near_born_weights() {
        let mut cfg = RunConfig::new(dist(&[0.3, 0.7]), EvolveMode::FixedK(0.2));
        cfg.steps = 400;
        cfg.trajectories = 4000;
        cfg.base_seed = 11;
        let stats = run_ensemble(&cfg).unwrap();
        assert_eq!(stats.unabsorbed, 0);
        let f0 = stats.absorbed_histogram[0] as f64 / cfg.trajectories as f64;
        let se = (0.3f64 * 0.7 / cfg.trajectories as f64).sqrt();
        assert!((f0 - 0.3).abs() < 3.0 * se, "fraction {f0}");
    }

    #[test]
    fn grouped_run_reports_group_moments() {
        let mut cfg = RunConfig::new(dist(&[0.2, 0.3, 0.1, 0.4]), EvolveMode::FixedK(0.1));
        cfg.steps = 30;
        cfg.trajectories = 500;
        cfg.coarse_partition = Some(Partition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap());
        let stats = run_ensemble(&cfg).unwrap();
        assert_eq!(stats.levels, 2);
        assert!((stats.mean_diag[0][0] - 0.5).abs() < 1e-12);
        assert!((stats.mean_cross[0][0] - 0.25).abs() < 1e-12);
    }
}
