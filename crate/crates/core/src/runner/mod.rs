//! Configuration, seeded sampling, the experiments, and their CSV output.
//!
//! Every experiment draws `θ` number `i` from `(seed, i)` alone and collects
//! rows in `(theta_id, T)` order, so output bytes do not depend on the number
//! of workers.

mod config;
mod experiments;
mod sampling;
mod store;
mod verify;

pub use config::{ExperimentConfig, Synthetic};
pub use experiments::{
    counts_on_grid, run_clt, run_clt_with, run_correspondence, run_correspondence_with, run_lk, run_lk_with,
    CltOutcome, CorrespondenceOutcome, DeviationRow, FStats, LkOutcome, LkRow, LkSummaryRow,
};
pub use sampling::sample_theta;
pub use store::{Failure, ResultStore};
pub use verify::{
    definitional_best_approximations, oracle_bound, oracle_check, perturbation_trials, run_verify, run_verify_with,
    PerturbationSummary, Status, VerifyOutcome, VerifyRow,
};
