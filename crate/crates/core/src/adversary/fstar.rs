//! The randomized two-world classifier over a partition.

use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::moments::MomentMatchedProbs;
use super::partition::PartitionSpec;
use super::permutation::FeistelPermutation;
use crate::error::{Error, Result};
use crate::explain::{Classifier, Explainer, ExplainerClass, Label, LocalClassifier, LocalExplanation};
use crate::geometry::{HyperRectangle, Point, Region};
use crate::measures::LossProfile;
use crate::seed::mix64;

pub const INSTANCE_VERSION: u32 = 1;

/// One draw of the classifier.
///
/// In world 1 the per-cell label probabilities come from `p`, in world 0
/// from `q`. Cell `i` uses the `k_i`-th probability, and exactly
/// `negatives[i]` of its sub-cells are labelled -1. Which ones is decided
/// by a keyed permutation of the sub-cell indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStarInstance {
    pub version: u32,
    pub partition: Arc<PartitionSpec>,
    pub probs: Arc<MomentMatchedProbs>,
    pub world: u8,
    /// One-based index into the probability list, per cell.
    pub ks: Vec<u32>,
    pub negatives: Vec<u64>,
    pub label_key: u64,
}

/// Draws the world bit uniformly, then an instance in that world.
pub fn sample_f_star(
    partition: Arc<PartitionSpec>,
    probs: Arc<MomentMatchedProbs>,
    rng: &mut dyn RngCore,
) -> FStarInstance {
    let world = rng.random_bool(0.5);
    sample_f_star_in_world(partition, probs, world, rng)
}

/// Draws an instance with a fixed world bit (`true` is world 1).
pub fn sample_f_star_in_world(
    partition: Arc<PartitionSpec>,
    probs: Arc<MomentMatchedProbs>,
    world: bool,
    rng: &mut dyn RngCore,
) -> FStarInstance {
    let r = probs.values(world);
    let two_m = r.len() as u32;
    let k = partition.k;
    let mut ks = Vec::with_capacity(partition.len());
    let mut negatives = Vec::with_capacity(partition.len());
    for _ in 0..partition.len() {
        let ki = rng.random_range(1..=two_m);
        let p = r[(ki - 1) as usize];
        let n = if p <= 0.0 {
            0
        } else if p >= 1.0 {
            k
        } else {
            Binomial::new(k, p).expect("probability in (0, 1)").sample(rng)
        };
        ks.push(ki);
        negatives.push(n);
    }
    FStarInstance {
        version: INSTANCE_VERSION,
        partition,
        probs,
        world: world as u8,
        ks,
        negatives,
        label_key: rng.random(),
    }
}

impl FStarInstance {
    pub fn positive_world(&self) -> bool {
        self.world == 1
    }

    /// Label probability of cell `i`.
    pub fn r(&self, i: usize) -> f64 {
        self.probs.values(self.positive_world())[(self.ks[i] - 1) as usize]
    }

    fn permutation(&self, cell: usize) -> FeistelPermutation {
        FeistelPermutation::new(self.partition.k, mix64(self.label_key ^ mix64(cell as u64)))
    }

    pub fn sub_label(&self, cell: usize, j: u64) -> Label {
        Label::from_sign(self.permutation(cell).apply(j) >= self.negatives[cell])
    }

    /// Exact local loss of the honest explainer on each cell.
    pub fn cell_losses(&self) -> Vec<f64> {
        let k = self.partition.k as f64;
        self.negatives.iter().map(|&n| n as f64 / k).collect()
    }

    /// Exact loss profile of the honest explainer. Mass outside every cell
    /// carries loss 0.
    pub fn exact_profile(&self) -> LossProfile {
        let cells = self.partition.cells();
        let outside = (1.0 - self.partition.covered_mass()).max(0.0);
        LossProfile::exact(
            cells.iter().map(|c| c.mass).zip(self.cell_losses()).chain(std::iter::once((outside, 0.0))),
        )
    }

    /// Largest gap between a cell's realised loss and its label probability.
    pub fn max_loss_deviation(&self) -> f64 {
        self.cell_losses().iter().enumerate().map(|(i, l)| (l - self.r(i)).abs()).fold(0.0, f64::max)
    }
}

impl Classifier for FStarInstance {
    fn classify(&self, x: &Point) -> Label {
        match self.partition.locate_sub(x) {
            Some((i, j)) => self.sub_label(i, j),
            None => Label::Pos,
        }
    }
}

/// Explains every point by its cell and the constant +1 classifier.
#[derive(Debug, Clone)]
pub struct HonestExplainer {
    partition: Arc<PartitionSpec>,
}

impl HonestExplainer {
    pub fn new(partition: Arc<PartitionSpec>) -> Self {
        HonestExplainer { partition }
    }
}

impl Explainer for HonestExplainer {
    fn explain(&self, _f: &dyn Classifier, x: &Point) -> Result<LocalExplanation> {
        let local = LocalClassifier::Constant(Label::Pos);
        let region = match self.partition.locate(x) {
            Some(i) => self.partition.cells()[i].rect.clone(),
            // Off the clipped support: a unit box with x as its top corner.
            None => {
                x.check_dim(self.partition.support().dim())?;
                let lo = x.coords().iter().map(|v| v - 1.0).collect();
                HyperRectangle::from_bounds(lo, x.coords().to_vec())
                    .map_err(|_| Error::InvalidGeometry("point too large to box".into()))?
            }
        };
        LocalExplanation::new(x.clone(), Region::Rectangle(region), local)
    }

    fn class_tag(&self) -> ExplainerClass {
        ExplainerClass::RectConstant
    }
}
