//! Discrete energy-conserved branch collapse.
//!
//! A superposition over energy branches carries a probability vector
//! `P_i`. At every discrete instant (one Planck time) a tiny collapse
//! happens in branch `i` with probability `P_i`: that branch gains
//! `k·(1 − P_i)` and all others shrink pro rata, with the strength
//! `k = ΔE·t_P/ħ` set by the state's mean absolute energy spread. Per
//! trajectory the state random-walks to a vertex of the simplex; over the
//! ensemble the branch means never move (the Born rule as a martingale)
//! while every cross moment contracts by `(1 − k²)` per instant,
//! reproducing collapse to energy eigenstates with conserved ensemble
//! energy.
//!
//! The crate provides the single-step dynamics ([`dynamics`]), parallel
//! reproducible trajectory ensembles ([`ensemble`]), an exact event-tree
//! oracle for small instances ([`oracle`]), statistical validation of the
//! analytic laws ([`validate`]), and the physical case-study evaluator
//! ([`scenarios`]). The companion guide under `book/` walks through each
//! piece; its code snippets compile and run as doctests of this crate.

pub mod constants;
pub mod distribution;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod oracle;
pub mod output;
pub mod scenarios;
pub mod seeding;
pub mod spectrum;
pub mod validate;

pub use constants::{CollapseConstants, PhysicalConstants};
pub use distribution::{coarse_grain, BranchDistribution, Partition};
pub use dynamics::{
    collapse_strength, collapse_time_estimate, energy_uncertainty, energy_uncertainty_many_body,
    evolve_step, sample_collapse_branch, tiny_collapse_step, EvolveMode,
};
pub use ensemble::{
    estimate_half_decay, fixed_k_half_decay, run_ensemble, run_trajectory, EnsembleStats,
    RunConfig, Trajectory,
};
pub use error::{Error, Result};
pub use oracle::{enumerate_exact, oracle_compare, EventTreeMoments, OracleCompareReport};
pub use scenarios::{reproduction_table, ScenarioResult};
pub use spectrum::{EnergySpectrum, ManyBodySpectrum, Spectrum};
pub use validate::{
    compare_ensembles, decay_fit_test, martingale_test, run_battery, BatterySettings,
    CheckOutcome,
};

#[cfg(doctest)]
mod booktest {
    //! Runs every code snippet in the guide as a doctest.
    macro_rules! booktest {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    booktest!(ch01, "../../../book/src/ch01_collapse_dynamics.md");
    booktest!(ch02, "../../../book/src/ch02_ensembles.md");
    booktest!(ch03, "../../../book/src/ch03_exact_oracle.md");
    booktest!(ch04, "../../../book/src/ch04_scenarios.md");
    booktest!(ch05, "../../../book/src/ch05_cli.md");
}
