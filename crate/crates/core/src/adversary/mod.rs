//! The adversarial construction behind the sample-size lower bound.
//!
//! The support is cut into rectangles of mass about `lambda`, each further cut
//! into many sub-cells. A random classifier labels each sub-cell -1 with a
//! cell-specific probability drawn from one of two moment-matched lists. An
//! auditor seeing fewer than `2m` distinct sub-cells of any rectangle learns
//! nothing about which list was used, yet the two lists give explainability
//! losses about `4 eps2` apart.

pub mod experiment;
pub mod fstar;
pub mod likelihood;
pub mod moments;
pub mod partition;
pub mod permutation;

pub use experiment::{
    collision_frequency, run_lower_bound_experiment, world_separation, CollisionReport, FailureRateReport,
    LowerBoundSetup, TrialRecord, WorldSeparationReport,
};
pub use fstar::{sample_f_star, sample_f_star_in_world, FStarInstance, HonestExplainer};
pub use likelihood::{likelihood_ratio, log_likelihood_ratio};
pub use moments::{moment_matched_probs, MomentConditions, MomentMatchedProbs};
pub use partition::{build_partition, choose_k, split_rectangle, PartitionSpec};
