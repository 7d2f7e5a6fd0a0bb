//! Fixtures shared by the criterion benches in `benches/`.

use std::sync::Arc;

use locaudit_core::adversary::{sample_f_star, HonestExplainer, LowerBoundSetup};
use locaudit_core::auditor::{AuditInput, AuditorConfig};
use locaudit_core::distributions::{DistributionOracle, ProductDistribution};
use locaudit_core::seed::rng_from_seed;
use locaudit_core::{Classifier, Explainer, Label, Point};

/// The two-world construction on the unit square with about 32k rectangles.
pub fn lower_bound_setup() -> LowerBoundSetup {
    let cfg = AuditorConfig::new(0.02, 0.01, 0.01, 0.1).expect("valid config");
    LowerBoundSetup::new(ProductDistribution::unit_cube(2), cfg, 1e-5, 0.01, None).expect("valid setup")
}

/// `n` points on the unit square labelled by one draw of the adversarial
/// classifier over a coarse partition, with honest explanations.
pub fn audit_input(n: usize, seed: u64) -> (AuditInput, AuditorConfig) {
    let dist = ProductDistribution::unit_cube(2);
    let cfg = AuditorConfig::new(0.3, 0.2, 0.1, 0.1).expect("valid config");
    let part = Arc::new(locaudit_core::adversary::build_partition(&dist, 0.05, 1 << 30).expect("partition"));
    let probs = Arc::new(locaudit_core::adversary::moment_matched_probs(0.02, 0.02, 0.02).expect("probs"));
    let mut rng = rng_from_seed(seed);
    let inst = sample_f_star(part.clone(), probs, &mut rng);
    let xs: Vec<Point> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let ys: Vec<Label> = xs.iter().map(|x| inst.classify(x)).collect();
    let ex = HonestExplainer::new(part);
    let es = xs.iter().map(|x| ex.explain(&inst, x)).collect::<Result<Vec<_>, _>>().expect("explanations");
    (AuditInput::new(xs, ys, es).expect("input"), cfg)
}
