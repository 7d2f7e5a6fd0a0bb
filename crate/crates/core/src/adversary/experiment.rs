//! Experiment drivers for the adversarial construction.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fstar::{sample_f_star, sample_f_star_in_world, FStarInstance, HonestExplainer};
use super::moments::{moment_matched_probs, MomentMatchedProbs};
use super::partition::{build_partition, choose_k, PartitionSpec};
use crate::auditor::{accuracy_interval, lower_bound_gates, AuditInput, AuditView, Auditor, AuditorConfig};
use crate::distributions::{DistributionOracle, ProductDistribution};
use crate::error::Result;
use crate::explain::{Classifier, Explainer};
use crate::geometry::Point;
use crate::seed::trial_rng;

/// Everything fixed across trials: the partition with `alpha = lambda`, the
/// sub-cell count, and the probability lists.
#[derive(Debug, Clone)]
pub struct LowerBoundSetup {
    pub dist: ProductDistribution,
    pub cfg: AuditorConfig,
    pub lambda: f64,
    pub delta_c: f64,
    pub partition: Arc<PartitionSpec>,
    pub probs: Arc<MomentMatchedProbs>,
}

impl LowerBoundSetup {
    /// `k = None` picks the sub-cell count with [`choose_k`].
    pub fn new(dist: ProductDistribution, cfg: AuditorConfig, lambda: f64, delta_c: f64, k: Option<u64>) -> Result<Self> {
        cfg.validate()?;
        lower_bound_gates(&cfg, lambda)?;
        let probs = moment_matched_probs(cfg.gamma, cfg.eps1, cfg.eps2)?;
        let partition = build_partition(&dist, lambda, 1)?;
        let k = match k {
            Some(k) => k,
            None => choose_k(cfg.gamma, cfg.eps1, cfg.eps2, delta_c, partition.len())?,
        };
        let partition = partition.with_sub_cells(k)?;
        Ok(LowerBoundSetup { dist, cfg, lambda, delta_c, partition: Arc::new(partition), probs: Arc::new(probs) })
    }

    pub fn two_m(&self) -> usize {
        2 * self.probs.m
    }

    /// `(L_{gamma(1+eps1)}, L_{gamma(1-eps1)})` for an instance.
    pub fn threshold_losses(&self, inst: &FStarInstance) -> (f64, f64) {
        let prof = inst.exact_profile();
        let g = self.cfg.gamma;
        (prof.mass_at_least(g * (1.0 + self.cfg.eps1)), prof.mass_at_least(g * (1.0 - self.cfg.eps1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub world: u8,
    pub estimate: Option<f64>,
    pub error: Option<String>,
    pub interval: [f64; 2],
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRateReport {
    pub auditor: String,
    pub n: usize,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub records: Vec<TrialRecord>,
}

/// One audit trial: draw f*, draw and label `n` points, explain them
/// honestly, audit, and compare against the exact interval.
pub fn lower_bound_trial(
    setup: &LowerBoundSetup,
    n: usize,
    auditor: &dyn Auditor,
    master_seed: u64,
    index: u64,
) -> Result<TrialRecord> {
    let mut rng = trial_rng(master_seed, index);
    let inst = sample_f_star(setup.partition.clone(), setup.probs.clone(), &mut rng);
    let points: Vec<Point> = (0..n).map(|_| setup.dist.sample(&mut rng)).collect();
    let labels = points.iter().map(|x| inst.classify(x)).collect();
    let explainer = HonestExplainer::new(setup.partition.clone());
    let expls = points.iter().map(|x| explainer.explain(&inst, x)).collect::<Result<Vec<_>>>()?;
    let input = AuditInput::new(points, labels, expls)?;
    let truth = inst.exact_profile();
    let interval = accuracy_interval(&truth, &setup.cfg)?;
    let view = AuditView { input: &input, cfg: &setup.cfg, truth: Some(&truth) };
    let (estimate, error) = match auditor.audit(&view) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let failed = match estimate {
        Some(e) => !(interval[0] <= e && e <= interval[1]),
        None => true,
    };
    Ok(TrialRecord { index, world: inst.world, estimate, error, interval, failed })
}

/// Fraction of trials in which `auditor` misses the accuracy interval. An
/// auditor error counts as a miss.
pub fn run_lower_bound_experiment(
    setup: &LowerBoundSetup,
    n: usize,
    auditor: &dyn Auditor,
    trials: usize,
    master_seed: u64,
) -> Result<FailureRateReport> {
    let records = (0..trials as u64)
        .into_par_iter()
        .map(|t| lower_bound_trial(setup, n, auditor, master_seed, t))
        .collect::<Result<Vec<_>>>()?;
    let failures = records.iter().filter(|r| r.failed).count();
    Ok(FailureRateReport {
        auditor: auditor.name().to_string(),
        n,
        trials,
        failures,
        failure_rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationTrial {
    pub world: u8,
    pub loss_at_upper: f64,
    pub loss_at_lower: f64,
    pub max_deviation: f64,
    pub in_event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSeparationReport {
    pub trials_per_world: usize,
    pub k: u64,
    pub cells: usize,
    /// Frequency of `1/2 - eps2 < L_hi <= L_lo < 1/2 + eps2` in world 1.
    pub freq_world1: f64,
    /// Frequency of `1/2 + 3 eps2 < L_hi <= L_lo < 1/2 + 5 eps2` in world 0.
    pub freq_world0: f64,
    /// Frequency of every cell loss lying within `0.01 gamma min(eps)` of its
    /// label probability.
    pub freq_concentrated: f64,
    pub records: Vec<SeparationTrial>,
}

/// Draws `trials` instances in each world and checks that their exact
/// explainability losses land in the world's window.
pub fn world_separation(setup: &LowerBoundSetup, trials: usize, master_seed: u64) -> WorldSeparationReport {
    let e2 = setup.cfg.eps2;
    let slack = 0.01 * setup.cfg.gamma * setup.cfg.eps1.min(e2);
    let records: Vec<SeparationTrial> = (0..2 * trials as u64)
        .into_par_iter()
        .map(|t| {
            let world = t < trials as u64;
            let mut rng = trial_rng(master_seed, t);
            let inst = sample_f_star_in_world(setup.partition.clone(), setup.probs.clone(), world, &mut rng);
            let (hi, lo) = setup.threshold_losses(&inst);
            let (a, b) = if world { (0.5 - e2, 0.5 + e2) } else { (0.5 + 3.0 * e2, 0.5 + 5.0 * e2) };
            SeparationTrial {
                world: world as u8,
                loss_at_upper: hi,
                loss_at_lower: lo,
                max_deviation: inst.max_loss_deviation(),
                in_event: a < hi && hi <= lo && lo < b,
            }
        })
        .collect();
    let freq = |w: u8| {
        records.iter().filter(|r| r.world == w && r.in_event).count() as f64 / trials.max(1) as f64
    };
    let conc = records.iter().filter(|r| r.max_deviation <= slack).count() as f64 / records.len().max(1) as f64;
    WorldSeparationReport {
        trials_per_world: trials,
        k: setup.partition.k,
        cells: setup.partition.len(),
        freq_world1: freq(1),
        freq_world0: freq(0),
        freq_concentrated: conc,
        records,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub n: usize,
    pub threshold: usize,
    pub trials: usize,
    pub hits: usize,
    pub frequency: f64,
    pub max_load: usize,
}

/// Frequency with which some cell receives at least `threshold` of `n`
/// sample points.
pub fn collision_frequency(
    dist: &ProductDistribution,
    partition: &PartitionSpec,
    n: usize,
    threshold: usize,
    trials: usize,
    master_seed: u64,
) -> CollisionReport {
    let loads: Vec<usize> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t);
            let mut counts = vec![0usize; partition.len()];
            for _ in 0..n {
                if let Some(i) = partition.locate(&dist.sample(&mut rng)) {
                    counts[i] += 1;
                }
            }
            counts.into_iter().max().unwrap_or(0)
        })
        .collect();
    let hits = loads.iter().filter(|&&l| l >= threshold).count();
    CollisionReport {
        n,
        threshold,
        trials,
        hits,
        frequency: hits as f64 / trials.max(1) as f64,
        max_load: loads.into_iter().max().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auditor::{ConstantAuditor, OracleAuditor};

    fn small_setup() -> LowerBoundSetup {
        let cfg = AuditorConfig::new(0.02, 0.01, 0.01, 0.1).unwrap();
        LowerBoundSetup::new(ProductDistribution::unit_cube(2), cfg, 1e-5, 0.01, None).unwrap()
    }

    #[test]
    fn oracle_auditor_never_fails() {
        let s = small_setup();
        let r = run_lower_bound_experiment(&s, 200, &OracleAuditor, 20, 1).unwrap();
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn constant_auditor_misses_both_worlds() {
        let s = small_setup();
        let r = run_lower_bound_experiment(&s, 50, &ConstantAuditor(0.52), 20, 2).unwrap();
        assert_eq!(r.failure_rate, 1.0);
    }

    #[test]
    fn experiment_is_deterministic() {
        let s = small_setup();
        let a = run_lower_bound_experiment(&s, 100, &OracleAuditor, 8, 3).unwrap();
        let b = run_lower_bound_experiment(&s, 100, &OracleAuditor, 8, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gates_are_enforced() {
        let cfg = AuditorConfig::new(0.02, 0.05, 0.01, 0.1).unwrap();
        assert!(LowerBoundSetup::new(ProductDistribution::unit_cube(2), cfg, 5e-5, 0.01, None).is_err());
        let cfg = AuditorConfig::new(0.1, 0.01, 0.01, 0.1).unwrap();
        // Admissible for the bound but outside the construction's range.
        assert!(LowerBoundSetup::new(ProductDistribution::unit_cube(2), cfg, 5e-5, 0.01, None).is_err());
    }
}
