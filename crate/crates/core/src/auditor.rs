//! The sample-splitting auditor, the accuracy interval it is judged
//! against, and closed-form sample-size bounds.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{Label, LocalExplanation};
use crate::geometry::Point;
use crate::measures::LossProfile;

/// Tolerances for auditing `L_gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditorConfig {
    pub gamma: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
}

impl AuditorConfig {
    pub fn new(gamma: f64, eps1: f64, eps2: f64, delta: f64) -> Result<Self> {
        let c = AuditorConfig { gamma, eps1, eps2, delta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("eps1", self.eps1), ("eps2", self.eps2), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(format!("0 < {name} < 1")));
            }
        }
        if !(self.gamma * (1.0 + self.eps1) < 1.0) {
            return Err(Error::param("gamma * (1 + eps1) < 1"));
        }
        Ok(())
    }

    /// Size of the anchor half of the sample.
    pub fn m(&self) -> usize {
        (61.0 / (self.eps2 * self.eps2) * (12.0 / self.delta).ln()).ceil() as usize
    }

    /// Points needed in a region before its anchor is validated.
    pub fn k(&self) -> usize {
        let g = self.gamma * self.eps1;
        ((176.0 / (self.eps2 * self.delta)).ln() / (2.0 * g * g)).ceil() as usize
    }
}

/// What the auditor sees: sample points, their black-box labels, and the
/// explanation of every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditInput {
    points: Vec<Point>,
    labels: Vec<Label>,
    explanations: Vec<LocalExplanation>,
}

impl AuditInput {
    pub fn new(points: Vec<Point>, labels: Vec<Label>, explanations: Vec<LocalExplanation>) -> Result<Self> {
        if labels.len() != points.len() || explanations.len() != points.len() {
            return Err(Error::InvalidGeometry(format!(
                "got {} points, {} labels and {} explanations",
                points.len(),
                labels.len(),
                explanations.len()
            )));
        }
        if let Some(i) = (0..points.len()).find(|&i| explanations[i].anchor() != &points[i]) {
            return Err(Error::InvalidGeometry(format!("explanation {i} is anchored at a different point")));
        }
        Ok(AuditInput { points, labels, explanations })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn explanations(&self) -> &[LocalExplanation] {
        &self.explanations
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counted {
    /// Empirical loss strictly above gamma.
    Red,
    Blue,
    /// Fewer than k points of the second half fell in the region.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub anchor_index: usize,
    pub region_points: usize,
    pub empirical_loss: Option<f64>,
    pub counted_as: Counted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub version: u32,
    pub estimate: f64,
    pub m: usize,
    pub k: usize,
    pub n_validated: usize,
    pub n_skipped: usize,
    pub red: usize,
    pub blue: usize,
    pub target_interval: Option<[f64; 2]>,
    pub verdict: Verdict,
    pub per_anchor: Vec<AnchorRecord>,
}

impl AuditReport {
    /// Attach the target interval and decide the verdict.
    pub fn judge(mut self, interval: [f64; 2]) -> Self {
        self.target_interval = Some(interval);
        self.verdict = if interval[0] <= self.estimate && self.estimate <= interval[1] {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }
}

/// Counts how many second-half points fall in a region and how many of those
/// the local classifier gets wrong.
fn scan_region(expl: &LocalExplanation, points: &[Point], labels: &[Label]) -> (usize, usize) {
    let mut inside = 0;
    let mut wrong = 0;
    for (z, y) in points.iter().zip(labels) {
        if expl.region().contains(z) {
            inside += 1;
            if expl.local().predict(z) != *y {
                wrong += 1;
            }
        }
    }
    (inside, wrong)
}

/// Splits the sample into `m` anchors and a validation half. Every anchor
/// whose region holds at least `k` validation points is counted red when its
/// empirical local loss exceeds gamma and blue otherwise. The estimate is the
/// red fraction.
pub fn simple_audit(input: &AuditInput, cfg: &AuditorConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let (m, k) = (cfg.m(), cfg.k());
    if input.len() <= m {
        return Err(Error::InsufficientData { needed: m + 1, got: input.len() });
    }
    let (pts2, lab2) = (&input.points[m..], &input.labels[m..]);

    // Anchors sharing an explanation share the scan.
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for i in 0..m {
        groups.entry(input.explanations[i].key()).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let scanned: Vec<(usize, usize)> =
        groups.par_iter().map(|g| scan_region(&input.explanations[g[0]], pts2, lab2)).collect();

    let mut per_anchor: Vec<Option<AnchorRecord>> = vec![None; m];
    for (g, &(inside, wrong)) in groups.iter().zip(&scanned) {
        let (loss, counted) = if inside >= k {
            let l = wrong as f64 / inside as f64;
            (Some(l), if l > cfg.gamma { Counted::Red } else { Counted::Blue })
        } else {
            (None, Counted::Skipped)
        };
        for &i in g {
            per_anchor[i] =
                Some(AnchorRecord { anchor_index: i, region_points: inside, empirical_loss: loss, counted_as: counted });
        }
    }
    let per_anchor: Vec<AnchorRecord> = per_anchor.into_iter().map(|r| r.expect("every anchor is grouped")).collect();
    let red = per_anchor.iter().filter(|r| r.counted_as == Counted::Red).count();
    let blue = per_anchor.iter().filter(|r| r.counted_as == Counted::Blue).count();
    if red + blue == 0 {
        return Err(Error::InsufficientCoverage { k });
    }
    Ok(AuditReport {
        version: REPORT_VERSION,
        estimate: red as f64 / (red + blue) as f64,
        m,
        k,
        n_validated: red + blue,
        n_skipped: m - red - blue,
        red,
        blue,
        target_interval: None,
        verdict: Verdict::Unknown,
        per_anchor,
    })
}

/// `[L_{gamma(1+eps1)} - eps2, L_{gamma(1-eps1)} + eps2]` clamped to `[0, 1]`,
/// computed from an exact loss profile.
pub fn accuracy_interval(truth: &LossProfile, cfg: &AuditorConfig) -> Result<[f64; 2]> {
    if !truth.exact {
        return Err(Error::OracleUnavailable);
    }
    let lo = truth.mass_at_least(cfg.gamma * (1.0 + cfg.eps1)) - cfg.eps2;
    let hi = truth.mass_at_least(cfg.gamma * (1.0 - cfg.eps1)) + cfg.eps2;
    Ok([lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)])
}

/// Sample size sufficient for [`simple_audit`] when every explanation has
/// local mass at least `lambda`.
pub fn upper_bound_samples(cfg: &AuditorConfig, lambda: f64) -> Result<u64> {
    cfg.validate()?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::param("0 < lambda <= 1"));
    }
    let (g, e1, e2, d) = (cfg.gamma, cfg.eps1, cfg.eps2, cfg.delta);
    let ge = g * g * e1 * e1;
    let l176 = (176.0 / (e2 * d)).ln();
    let first = 61.0 / (e2 * e2) * (12.0 / d).ln();
    let second = l176 / (2.0 * lambda * ge) * (44.0 * l176 / (e2 * d * ge)).ln();
    Ok((first + second).ceil() as u64)
}

/// Sample size below which no auditor can be accurate on the adversarial
/// construction, for explanations of local mass `lambda`.
pub fn lower_bound_samples(cfg: &AuditorConfig, lambda: f64) -> Result<u64> {
    cfg.validate()?;
    lower_bound_gates(cfg, lambda)?;
    let e = cfg.eps1.max(cfg.eps2);
    Ok((1.0 / (2592.0 * e * lambda.powf(1.0 - 8.0 * e))).floor() as u64)
}

/// Parameter range of the adversarial construction.
pub fn lower_bound_gates(cfg: &AuditorConfig, lambda: f64) -> Result<()> {
    if !(cfg.eps1 < 1.0 / 48.0) {
        return Err(Error::param("ε₁ < 1/48"));
    }
    if !(cfg.eps2 < 1.0 / 48.0) {
        return Err(Error::param("ε₂ < 1/48"));
    }
    if !(cfg.gamma < 1.0 / 3.0) {
        return Err(Error::param("γ < 1/3"));
    }
    if !(lambda > 0.0 && lambda < cfg.eps2 * cfg.eps2) {
        return Err(Error::param("0 < λ < ε₂²"));
    }
    Ok(())
}

/// Second-half sample size after which a region of mass `lambda` receives
/// at least `k` points except with probability `delta * eps / 8`.
pub fn coverage_sample_size(k: usize, delta: f64, eps: f64, lambda: f64) -> u64 {
    let k = k as f64;
    (k * (8.0 * k / (delta * eps)).ln() / lambda).ceil() as u64
}

/// What an auditor sees, plus the exact loss profile for auditors allowed
/// to cheat.
pub struct AuditView<'a> {
    pub input: &'a AuditInput,
    pub cfg: &'a AuditorConfig,
    pub truth: Option<&'a LossProfile>,
}

/// Anything producing an estimate of `L_gamma` from an audit sample.
pub trait Auditor: Send + Sync {
    fn name(&self) -> &str;
    fn audit(&self, view: &AuditView<'_>) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleAuditor;

impl Auditor for SimpleAuditor {
    fn name(&self) -> &str {
        "simple_audit"
    }

    fn audit(&self, view: &AuditView<'_>) -> Result<f64> {
        simple_audit(view.input, view.cfg).map(|r| r.estimate)
    }
}

/// Ignores the data and always answers `value`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantAuditor(pub f64);

impl Auditor for ConstantAuditor {
    fn name(&self) -> &str {
        "constant"
    }

    fn audit(&self, _view: &AuditView<'_>) -> Result<f64> {
        Ok(self.0)
    }
}

/// Reads the answer off the exact loss profile.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleAuditor;

impl Auditor for OracleAuditor {
    fn name(&self) -> &str {
        "oracle"
    }

    fn audit(&self, view: &AuditView<'_>) -> Result<f64> {
        let t = view.truth.ok_or(Error::OracleUnavailable)?;
        Ok(t.mass_at_least(view.cfg.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DistributionOracle, ProductDistribution};
    use crate::explain::{Classifier, ConstantRule, Explainer, PartitionExplainer};
    use crate::geometry::HyperRectangle;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn cfg() -> AuditorConfig {
        AuditorConfig::new(0.3, 0.2, 0.1, 0.1).unwrap()
    }

    fn four_cell_input(n: usize, seed: u64, rule: ConstantRule) -> AuditInput {
        let d = ProductDistribution::unit_cube(1);
        let e = PartitionExplainer::slabs(&HyperRectangle::unit(1), 0, 4, rule).unwrap();
        let f = |x: &Point| Label::from_sign(x[0] > 0.5);
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Point> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let labels = pts.iter().map(|p| f.classify(p)).collect();
        let ex = pts.iter().map(|p| e.explain(&f, p).unwrap()).collect();
        AuditInput::new(pts, labels, ex).unwrap()
    }

    #[test]
    fn m_and_k_values() {
        let c = cfg();
        assert_eq!(c.m(), 29204);
        assert_eq!(c.k(), 1358);
        assert!(AuditorConfig::new(0.9, 0.2, 0.1, 0.1).is_err());
        assert!(AuditorConfig::new(0.3, 0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn exact_and_inverted_explanations() {
        let c = cfg();
        let good = four_cell_input(c.m() + 12_000, 1, ConstantRule::AgreeWithAnchor);
        // Agreeing with the anchor is exact on cells where f is constant.
        let r = simple_audit(&good, &c).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.n_validated + r.n_skipped, r.m);
        let bad = four_cell_input(c.m() + 12_000, 1, ConstantRule::DisagreeWithAnchor);
        assert_eq!(simple_audit(&bad, &c).unwrap().estimate, 1.0);
    }

    #[test]
    fn insufficient_data_and_coverage() {
        let c = cfg();
        let small = four_cell_input(c.m(), 2, ConstantRule::AgreeWithAnchor);
        assert_eq!(simple_audit(&small, &c).unwrap_err(), Error::InsufficientData { needed: c.m() + 1, got: c.m() });
        let thin = four_cell_input(c.m() + 100, 2, ConstantRule::AgreeWithAnchor);
        assert_eq!(simple_audit(&thin, &c).unwrap_err(), Error::InsufficientCoverage { k: c.k() });
    }

    #[test]
    fn empirical_loss_equal_to_gamma_counts_blue() {
        // gamma = 0.25 and a region where exactly a quarter of the points are negative.
        let c = AuditorConfig::new(0.25, 0.5, 0.5, 0.5).unwrap();
        let (m, k) = (c.m(), c.k());
        let region = crate::geometry::Region::Rectangle(HyperRectangle::unit(1));
        let local = crate::explain::LocalClassifier::Constant(Label::Pos);
        let n2 = 4 * k.max(1);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..(m + n2) {
            let x = (i as f64 + 0.5) / (m + n2) as f64;
            pts.push(Point::new(vec![x]).unwrap());
            labels.push(if i >= m && (i - m) % 4 == 0 { Label::Neg } else { Label::Pos });
        }
        let ex = pts
            .iter()
            .map(|p| LocalExplanation::new(p.clone(), region.clone(), local.clone()).unwrap())
            .collect();
        let r = simple_audit(&AuditInput::new(pts, labels, ex).unwrap(), &c).unwrap();
        assert_eq!(r.per_anchor[0].empirical_loss, Some(0.25));
        assert_eq!(r.red, 0);
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn estimate_invariant_to_second_half_order() {
        let c = cfg();
        let inp = four_cell_input(c.m() + 50_000, 3, ConstantRule::Fixed(Label::Pos));
        let base = simple_audit(&inp, &c).unwrap();
        let m = c.m();
        let mut idx: Vec<usize> = (m..inp.len()).collect();
        idx.shuffle(&mut rng_from_seed(4));
        let order: Vec<usize> = (0..m).chain(idx).collect();
        let shuffled = AuditInput::new(
            order.iter().map(|&i| inp.points[i].clone()).collect(),
            order.iter().map(|&i| inp.labels[i]).collect(),
            order.iter().map(|&i| inp.explanations[i].clone()).collect(),
        )
        .unwrap();
        let again = simple_audit(&shuffled, &c).unwrap();
        assert_eq!(base.estimate, again.estimate);
        assert_eq!(base.per_anchor, again.per_anchor);
    }

    #[test]
    fn report_serializes_with_per_anchor_records() {
        let c = cfg();
        let r = simple_audit(&four_cell_input(c.m() + 20_000, 5, ConstantRule::Fixed(Label::Pos)), &c).unwrap();
        let r = r.judge([0.4, 0.6]);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["version", "estimate", "m", "k", "n_validated", "n_skipped", "per_anchor"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: AuditReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let red = r.per_anchor.iter().filter(|a| a.counted_as == Counted::Red).count();
        assert_eq!(red as f64 / r.n_validated as f64, r.estimate);
    }

    #[test]
    fn accuracy_interval_examples() {
        let c = cfg();
        let perfect = LossProfile::exact([(1.0, 0.0)]);
        assert_eq!(accuracy_interval(&perfect, &c).unwrap(), [0.0, 0.1]);
        let atoms = LossProfile::exact([(0.25, 0.0), (0.25, 0.0), (0.25, 1.0), (0.25, 1.0)]);
        let [lo, hi] = accuracy_interval(&atoms, &c).unwrap();
        assert!((lo - 0.4).abs() < 1e-15 && (hi - 0.6).abs() < 1e-15);
        let sampled = LossProfile { exact: false, ..atoms };
        assert_eq!(accuracy_interval(&sampled, &c), Err(Error::OracleUnavailable));
    }

    #[test]
    fn upper_bound_regression_and_scaling() {
        let c = AuditorConfig::new(0.1, 0.1, 0.1, 0.1).unwrap();
        assert_eq!(upper_bound_samples(&c, 0.01).unwrap(), UPPER_REGRESSION);
        let first = 61.0 / 0.01 * 120f64.ln();
        let s1 = upper_bound_samples(&c, 1.0).unwrap() as f64 - first;
        let s100 = upper_bound_samples(&c, 0.01).unwrap() as f64 - first;
        assert!((s100 / s1 - 100.0).abs() < 1e-3);
    }

    #[test]
    fn lower_bound_regression_and_gates() {
        let e = 1.0 / 48.0 - 1e-12;
        let c = AuditorConfig::new(0.1, e, e, 0.1).unwrap();
        assert_eq!(lower_bound_samples(&c, e * e / 2.0).unwrap(), LOWER_REGRESSION);
        let c = AuditorConfig::new(0.02, 0.01, 0.01, 0.1).unwrap();
        assert_eq!(lower_bound_samples(&c, 1e-5).unwrap(), 1535);
        let err = lower_bound_samples(&c, 1e-4).unwrap_err();
        assert_eq!(err, Error::param("0 < λ < ε₂²"));
        let bad = AuditorConfig::new(0.1, 0.1, 0.01, 0.1).unwrap();
        assert_eq!(lower_bound_samples(&bad, 1e-5).unwrap_err(), Error::param("ε₁ < 1/48"));
        let bad = AuditorConfig::new(0.4, 0.01, 0.01, 0.1).unwrap();
        assert_eq!(lower_bound_samples(&bad, 1e-5).unwrap_err(), Error::param("γ < 1/3"));
    }

    #[test]
    fn oracle_and_constant_auditors() {
        let c = cfg();
        let inp = four_cell_input(10, 6, ConstantRule::Fixed(Label::Pos));
        let truth = LossProfile::exact([(0.5, 0.0), (0.5, 1.0)]);
        let view = AuditView { input: &inp, cfg: &c, truth: Some(&truth) };
        assert_eq!(OracleAuditor.audit(&view).unwrap(), 0.5);
        assert_eq!(ConstantAuditor(0.52).audit(&view).unwrap(), 0.52);
        let blind = AuditView { truth: None, ..view };
        assert_eq!(OracleAuditor.audit(&blind), Err(Error::OracleUnavailable));
        assert!(matches!(SimpleAuditor.audit(&blind), Err(Error::InsufficientData { .. })));
    }

    // Direct evaluations of the two closed forms, computed independently.
    const UPPER_REGRESSION: u64 = 97_197_228;
    const LOWER_REGRESSION: u64 = 20;

    proptest! {
        #[test]
        fn upper_bound_is_monotone(
            g in 0.05f64..0.5, e1 in 0.05f64..0.5, e2 in 0.05f64..0.5, d in 0.05f64..0.5,
            l in 0.001f64..1.0, shrink in 0.5f64..1.0, which in 0usize..5,
        ) {
            let base = AuditorConfig::new(g, e1, e2, d).unwrap();
            let mut small = base;
            let mut l2 = l;
            match which {
                0 => small.gamma *= shrink,
                1 => small.eps1 *= shrink,
                2 => small.eps2 *= shrink,
                3 => small.delta *= shrink,
                _ => l2 *= shrink,
            }
            prop_assert!(upper_bound_samples(&small, l2).unwrap() >= upper_bound_samples(&base, l).unwrap());
        }

        #[test]
        fn halving_lambda_grows_lower_bound(e in 0.001f64..0.0208, frac in 0.01f64..0.99) {
            let c = AuditorConfig::new(0.1, e, e, 0.1).unwrap();
            let lam = frac * e * e;
            let ratio = (1.0 / (2592.0 * e * (lam / 2.0).powf(1.0 - 8.0 * e)))
                / (1.0 / (2592.0 * e * lam.powf(1.0 - 8.0 * e)));
            prop_assert!(ratio >= 2f64.powf(1.0 - 8.0 * e) * (1.0 - 1e-12));
            prop_assert!(lower_bound_samples(&c, lam / 2.0).unwrap() >= lower_bound_samples(&c, lam).unwrap());
        }
    }
}
