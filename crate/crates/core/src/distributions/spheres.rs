use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DistributionOracle;
use crate::error::{Error, Result};
use crate::geometry::{Ball, Point};
use crate::spheres::caps;

/// A uniformly distributed point on the sphere of the given radius centred
/// at the origin.
pub fn sample_uniform_sphere(d: usize, radius: f64, rng: &mut dyn RngCore) -> Point {
    assert!(d >= 1 && radius > 0.0, "need d >= 1 and radius > 0");
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = crate::geometry::norm(&v);
        if n > 1e-150 {
            return Point::from_vec_unchecked(v.into_iter().map(|x| x / n * radius).collect());
        }
    }
}

/// Uniform mixture of three concentric spheres with radii `1 - alpha`, `1`
/// and `1 + beta`, where `alpha = 1/(3670016 d^4)` and `beta = 1/(3584 d^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpheresDistribution {
    d: usize,
    alpha: f64,
    beta: f64,
}

impl SpheresDistribution {
    pub fn new(d: usize) -> Result<Self> {
        if d < 5 {
            return Err(Error::param(format!("d >= 5 (got d = {d})")));
        }
        let df = d as f64;
        Ok(SpheresDistribution {
            d,
            alpha: 1.0 / (3_670_016.0 * df.powi(4)),
            beta: 1.0 / (3584.0 * df * df),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Radii of the inner, middle and outer sphere.
    pub fn radii(&self) -> [f64; 3] {
        [1.0 - self.alpha, 1.0, 1.0 + self.beta]
    }

    /// A sample together with the index of the sphere it was drawn from.
    pub fn sample_with_sphere(&self, rng: &mut dyn RngCore) -> (usize, Point) {
        let i = rng.random_range(0..3);
        (i, sample_uniform_sphere(self.d, self.radii()[i], rng))
    }
}

impl DistributionOracle for SpheresDistribution {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        self.sample_with_sphere(rng).1
    }

    fn ball_mass(&self, b: &Ball) -> Option<Result<f64>> {
        Some(caps::ball_cap_decomposition(self, b.center(), b.radius()).map(|c| c.mass(self.d)))
    }

    fn ball_conditional_sample(&self, b: &Ball, rng: &mut dyn RngCore) -> Option<Result<Point>> {
        Some(caps::BallSampler::new(self, b).and_then(|s| s.sample(rng).map(|(_, p)| p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn sphere_samples_have_exact_norm() {
        let mut rng = rng_from_seed(1);
        for d in [1, 2, 5, 17] {
            for r in [0.5, 1.0, 3.0] {
                let p = sample_uniform_sphere(d, r, &mut rng);
                assert!((p.norm() - r).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_sphere_is_two_points() {
        let mut rng = rng_from_seed(2);
        let n = 10_000;
        let pos = (0..n).filter(|_| sample_uniform_sphere(1, 1.0, &mut rng)[0] == 1.0).count();
        assert!((pos as f64 / n as f64 - 0.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt());
    }

    #[test]
    fn sphere_mean_is_near_origin() {
        let mut rng = rng_from_seed(3);
        let n = 100_000;
        let mut mean = vec![0.0; 5];
        for _ in 0..n {
            let p = sample_uniform_sphere(5, 1.0, &mut rng);
            for (m, x) in mean.iter_mut().zip(p.coords()) {
                *m += x / n as f64;
            }
        }
        assert!(crate::geometry::norm(&mean) <= 0.02);
    }

    #[test]
    fn spheres_constants_and_frequencies() {
        assert!(SpheresDistribution::new(4).is_err());
        let s = SpheresDistribution::new(6).unwrap();
        assert!((s.alpha() * 3_670_016.0 * 1296.0 - 1.0).abs() < 1e-15);
        assert!((s.beta() * 3584.0 * 36.0 - 1.0).abs() < 1e-15);
        let mut rng = rng_from_seed(4);
        let n = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let (i, p) = s.sample_with_sphere(&mut rng);
            assert!((p.norm() - s.radii()[i]).abs() <= 1e-12);
            counts[i] += 1;
        }
        let tol = 3.0 * (2.0 / (9.0 * n as f64)).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() <= tol);
        }
    }
}
