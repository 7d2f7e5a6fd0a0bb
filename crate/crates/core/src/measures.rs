//! Local loss, explainability loss, local mass and locality.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{conditional_sample, region_mass, DistributionOracle, REJECTION_BUDGET};
use crate::error::{Error, Result};
use crate::explain::{Classifier, Explainer, LocalExplanation, PartitionExplainer};
use crate::geometry::Region;

/// A Monte Carlo (or exact) probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples_used: usize,
}

impl LossEstimate {
    pub fn from_counts(hits: usize, n: usize) -> Self {
        let v = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        LossEstimate { value: v, stderr: binomial_stderr(v, n), samples_used: n }
    }

    pub fn exact(value: f64) -> Self {
        LossEstimate { value, stderr: 0.0, samples_used: 0 }
    }
}

fn binomial_stderr(v: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (v * (1.0 - v) / n as f64).sqrt()
    }
}

/// Region mass, exact when an oracle exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub value: f64,
    /// Zero for exact values.
    pub stderr: f64,
    pub exact: bool,
}

/// Empirical disagreement rate between the local classifier and `f` on
/// `n_inner` samples drawn conditionally on the explanation's region.
pub fn local_loss(
    expl: &LocalExplanation,
    f: &dyn Classifier,
    dist: &dyn DistributionOracle,
    n_inner: usize,
    rng: &mut dyn RngCore,
) -> Result<LossEstimate> {
    local_loss_with_budget(expl, f, dist, n_inner, REJECTION_BUDGET, rng)
}

pub fn local_loss_with_budget(
    expl: &LocalExplanation,
    f: &dyn Classifier,
    dist: &dyn DistributionOracle,
    n_inner: usize,
    budget: usize,
    rng: &mut dyn RngCore,
) -> Result<LossEstimate> {
    if n_inner == 0 {
        return Err(Error::param("n_inner >= 1"));
    }
    let mut wrong = 0;
    for _ in 0..n_inner {
        let z = conditional_sample(dist, expl.region(), budget, rng)?;
        if expl.local().predict(&z) != f.classify(&z) {
            wrong += 1;
        }
    }
    Ok(LossEstimate::from_counts(wrong, n_inner))
}

/// One atom of a loss distribution: `weight` mass of anchors whose local
/// loss is `loss`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossAtom {
    pub weight: f64,
    pub loss: f64,
    /// The anchor's region had zero mass; `loss` was set to 1.
    #[serde(default)]
    pub zero_mass: bool,
}

/// The distribution of local losses over anchors, either sampled (equal
/// weights) or exact (mass-weighted cells).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossProfile {
    pub atoms: Vec<LossAtom>,
    pub exact: bool,
}

impl LossProfile {
    /// Exact profile from `(mass, loss)` pairs.
    pub fn exact(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        LossProfile {
            atoms: atoms.into_iter().map(|(weight, loss)| LossAtom { weight, loss, zero_mass: false }).collect(),
            exact: true,
        }
    }

    /// `Pr[L >= threshold]`.
    pub fn mass_at_least(&self, threshold: f64) -> f64 {
        let s: f64 = self.atoms.iter().filter(|a| a.loss >= threshold).map(|a| a.weight).sum();
        s.clamp(0.0, 1.0)
    }

    pub fn at_threshold(&self, gamma: f64) -> LossEstimate {
        let v = self.mass_at_least(gamma);
        if self.exact {
            LossEstimate::exact(v)
        } else {
            let n = self.atoms.len();
            LossEstimate { value: v, stderr: binomial_stderr(v, n), samples_used: n }
        }
    }

    pub fn zero_mass_anchors(&self) -> usize {
        self.atoms.iter().filter(|a| a.zero_mass).count()
    }
}

/// Per-anchor local losses for `n_outer` anchors drawn from `dist`.
/// Anchors whose region has zero mass are recorded with loss 1.
pub fn anchor_losses(
    e: &dyn Explainer,
    f: &dyn Classifier,
    dist: &dyn DistributionOracle,
    n_outer: usize,
    n_inner: usize,
    rng: &mut dyn RngCore,
) -> Result<LossProfile> {
    if n_outer == 0 {
        return Err(Error::param("n_outer >= 1"));
    }
    let w = 1.0 / n_outer as f64;
    let mut atoms = Vec::with_capacity(n_outer);
    for _ in 0..n_outer {
        let x = dist.sample(rng);
        let expl = e.explain(f, &x)?;
        let zero = matches!(region_mass(dist, expl.region()), Some(Ok(m)) if m <= 0.0);
        let atom = if zero {
            LossAtom { weight: w, loss: 1.0, zero_mass: true }
        } else {
            match local_loss(&expl, f, dist, n_inner, rng) {
                Ok(l) => LossAtom { weight: w, loss: l.value, zero_mass: false },
                Err(Error::RegionMassZero { .. }) | Err(Error::ZeroMassRectangle) | Err(Error::ZeroMassBall) => {
                    LossAtom { weight: w, loss: 1.0, zero_mass: true }
                }
                Err(err) => return Err(err),
            }
        };
        atoms.push(atom);
    }
    Ok(LossProfile { atoms, exact: false })
}

/// Estimate of `Pr_x[L(E, f, x) >= gamma]`, with the per-anchor profile it
/// was computed from.
pub fn explainability_loss(
    e: &dyn Explainer,
    f: &dyn Classifier,
    dist: &dyn DistributionOracle,
    gamma: f64,
    n_outer: usize,
    n_inner: usize,
    rng: &mut dyn RngCore,
) -> Result<(LossEstimate, LossProfile)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("0 < gamma < 1"));
    }
    let profile = anchor_losses(e, f, dist, n_outer, n_inner, rng)?;
    Ok((profile.at_threshold(gamma), profile))
}

/// Exact loss profile of a partition explainer, given the exact local loss
/// of every cell.
pub fn partition_profile(
    e: &PartitionExplainer,
    dist: &dyn DistributionOracle,
    cell_loss: impl Fn(usize) -> f64,
) -> Result<LossProfile> {
    let mut atoms = Vec::with_capacity(e.cells().len());
    for (i, c) in e.cells().iter().enumerate() {
        let m = dist.rect_mass(c).ok_or(Error::OracleUnavailable)??;
        atoms.push((m, cell_loss(i)));
    }
    Ok(LossProfile::exact(atoms))
}

/// Mass of a region: exact when `dist` has an oracle for its shape, else a
/// Monte Carlo estimate from `n_mc` samples.
pub fn local_mass(region: &Region, dist: &dyn DistributionOracle, n_mc: usize, rng: &mut dyn RngCore) -> MassEstimate {
    if let Some(Ok(m)) = region_mass(dist, region) {
        return MassEstimate { value: m.clamp(0.0, 1.0), stderr: 0.0, exact: true };
    }
    if region.dim() != dist.dim() || n_mc == 0 {
        return MassEstimate { value: 0.0, stderr: 0.0, exact: false };
    }
    let hits = (0..n_mc).filter(|_| region.contains(&dist.sample(rng))).count();
    let est = LossEstimate::from_counts(hits, n_mc);
    MassEstimate { value: est.value, stderr: est.stderr, exact: false }
}

/// Smallest local mass over `n_outer` sampled anchors. This over-estimates
/// the true infimum.
pub fn locality(
    e: &dyn Explainer,
    f: &dyn Classifier,
    dist: &dyn DistributionOracle,
    n_outer: usize,
    n_mc: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if n_outer == 0 {
        return Err(Error::param("n_outer >= 1"));
    }
    let mut best = 1.0f64;
    for _ in 0..n_outer {
        let x = dist.sample(rng);
        let expl = e.explain(f, &x)?;
        best = best.min(local_mass(expl.region(), dist, n_mc, rng).value);
    }
    Ok(best)
}
