//! Data distributions with exact mass and conditional-sampling oracles.

mod product;
mod spheres;

pub use product::{Marginal, ProductDistribution};
pub use spheres::{sample_uniform_sphere, SpheresDistribution};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::geometry::{Ball, HyperRectangle, Point, Region};

/// Attempts allowed per accepted sample when a region has no exact
/// conditional sampler.
pub const REJECTION_BUDGET: usize = 1_000_000;

/// A probability distribution over `R^d`.
///
/// Only `dim` and `sample` are mandatory. The optional oracles return `None`
/// when the distribution cannot answer exactly for that region shape.
pub trait DistributionOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn sample(&self, rng: &mut dyn RngCore) -> Point;

    fn rect_mass(&self, _r: &HyperRectangle) -> Option<Result<f64>> {
        None
    }

    fn rect_conditional_sample(&self, _r: &HyperRectangle, _rng: &mut dyn RngCore) -> Option<Result<Point>> {
        None
    }

    fn ball_mass(&self, _b: &Ball) -> Option<Result<f64>> {
        None
    }

    fn ball_conditional_sample(&self, _b: &Ball, _rng: &mut dyn RngCore) -> Option<Result<Point>> {
        None
    }
}

/// Exact mass of `region` if the distribution has an oracle for its shape.
pub fn region_mass(dist: &dyn DistributionOracle, region: &Region) -> Option<Result<f64>> {
    if region.dim() != dist.dim() {
        return Some(Err(Error::DimensionMismatch { expected: dist.dim(), got: region.dim() }));
    }
    match region {
        Region::Rectangle(r) => dist.rect_mass(r),
        Region::Ball(b) => dist.ball_mass(b),
    }
}

/// One sample from `dist` conditioned on `region`.
///
/// Uses the exact sampler when there is one and otherwise falls back to
/// rejection sampling with at most `budget` attempts.
pub fn conditional_sample(
    dist: &dyn DistributionOracle,
    region: &Region,
    budget: usize,
    rng: &mut dyn RngCore,
) -> Result<Point> {
    if region.dim() != dist.dim() {
        return Err(Error::DimensionMismatch { expected: dist.dim(), got: region.dim() });
    }
    let exact = match region {
        Region::Rectangle(r) => dist.rect_conditional_sample(r, rng),
        Region::Ball(b) => dist.ball_conditional_sample(b, rng),
    };
    if let Some(res) = exact {
        return res;
    }
    for _ in 0..budget {
        let x = dist.sample(rng);
        if region.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::RegionMassZero { attempts: budget })
}
