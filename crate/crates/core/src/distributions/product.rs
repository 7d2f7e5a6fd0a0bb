use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use super::DistributionOracle;
use crate::error::{Error, Result};
use crate::geometry::{HyperRectangle, Point};

/// A one-dimensional continuous marginal with a strictly increasing CDF on
/// its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl Marginal {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGeometry(format!("uniform marginal needs lo < hi, got ({lo}, {hi})")));
        }
        Ok(Marginal::Uniform { lo, hi })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidGeometry(format!("gaussian marginal needs sd > 0, got {sd}")));
        }
        Ok(Marginal::Gaussian { mean, sd })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { lo, hi } => Marginal::uniform(lo, hi).map(|_| ()),
            Marginal::Gaussian { mean, sd } => Marginal::gaussian(mean, sd).map(|_| ()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Gaussian { mean, sd } => 0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2)),
        }
    }

    /// `1 - cdf(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Gaussian { mean, sd } => 0.5 * erfc((x - mean) / (sd * std::f64::consts::SQRT_2)),
        }
    }

    fn center(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Gaussian { mean, .. } => mean,
        }
    }

    /// Probability of the interval `(a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        let c = self.center();
        let m = if a >= c {
            self.sf(a) - self.sf(b)
        } else if b <= c {
            self.cdf(b) - self.cdf(a)
        } else {
            1.0 - self.sf(b) - self.cdf(a)
        };
        m.clamp(0.0, 1.0)
    }

    /// The support, or for unbounded marginals the central interval that
    /// leaves `tail` mass on each side.
    pub fn support(&self, tail: f64) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::Gaussian { mean, sd } => {
                let std = Marginal::Gaussian { mean: 0.0, sd: 1.0 };
                let (mut a, mut b) = (0.0f64, 40.0f64);
                while b - a > 1e-13 {
                    let mid = 0.5 * (a + b);
                    if std.sf(mid) > tail {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                (mean - sd * b, mean + sd * b)
            }
        }
    }

    /// The point `x` in `(a, b]` with `mass(a, x) = t * mass(a, b)`.
    pub fn quantile_between(&self, a: f64, b: f64, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        if let Marginal::Uniform { lo, hi } = *self {
            let (a, b) = (a.max(lo), b.min(hi));
            return if t >= 1.0 { b } else { (a + (b - a) * t).clamp(a, b) };
        }
        let target = t * self.mass(a, b);
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-12 * mid.abs().max(1.0) {
                break;
            }
            if self.mass(a, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => hi - (hi - lo) * rng.random::<f64>(),
            Marginal::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

/// Independent coordinates, each with its own [`Marginal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    marginals: Vec<Marginal>,
}

impl ProductDistribution {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidGeometry("need at least one coordinate".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(ProductDistribution { marginals })
    }

    /// Uniform on `[0, 1]^dim`.
    pub fn unit_cube(dim: usize) -> Self {
        ProductDistribution { marginals: vec![Marginal::Uniform { lo: 0.0, hi: 1.0 }; dim.max(1)] }
    }

    pub fn standard_gaussian(dim: usize) -> Self {
        ProductDistribution { marginals: vec![Marginal::Gaussian { mean: 0.0, sd: 1.0 }; dim.max(1)] }
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Bounding box holding all but `outside` of the mass.
    pub fn support_box(&self, outside: f64) -> HyperRectangle {
        let tail = outside / (2.0 * self.marginals.len() as f64);
        let (lo, hi): (Vec<f64>, Vec<f64>) = self.marginals.iter().map(|m| m.support(tail)).unzip();
        HyperRectangle::from_bounds(lo, hi).expect("marginal supports are nonempty intervals")
    }

    /// Marginal mass of the rectangle's extent along `axis`.
    pub fn axis_mass(&self, r: &HyperRectangle, axis: usize) -> f64 {
        self.marginals[axis].mass(r.lo()[axis], r.hi()[axis])
    }

    /// Exact mass of a rectangle.
    pub fn mass(&self, r: &HyperRectangle) -> Result<f64> {
        if r.dim() != self.marginals.len() {
            return Err(Error::DimensionMismatch { expected: self.marginals.len(), got: r.dim() });
        }
        Ok((0..r.dim()).map(|i| self.axis_mass(r, i)).product())
    }

    /// A sample conditioned on the rectangle, drawn by per-coordinate
    /// inverse-CDF sampling.
    pub fn sample_in(&self, r: &HyperRectangle, rng: &mut dyn RngCore) -> Result<Point> {
        if self.mass(r)? <= 0.0 {
            return Err(Error::ZeroMassRectangle);
        }
        let coords = self
            .marginals
            .iter()
            .enumerate()
            .map(|(i, m)| {
                // 1 - u lies in (0, 1], so the result lands in (lo, hi].
                let t = 1.0 - rng.random::<f64>();
                m.quantile_between(r.lo()[i], r.hi()[i], t)
            })
            .collect();
        Ok(Point::from_vec_unchecked(coords))
    }
}

impl DistributionOracle for ProductDistribution {
    fn dim(&self) -> usize {
        self.marginals.len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        Point::from_vec_unchecked(self.marginals.iter().map(|m| m.sample(rng)).collect())
    }

    fn rect_mass(&self, r: &HyperRectangle) -> Option<Result<f64>> {
        Some(self.mass(r))
    }

    fn rect_conditional_sample(&self, r: &HyperRectangle, rng: &mut dyn RngCore) -> Option<Result<Point>> {
        Some(self.sample_in(r, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn rect(lo: &[f64], hi: &[f64]) -> HyperRectangle {
        HyperRectangle::from_bounds(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn uniform_masses() {
        let u = ProductDistribution::unit_cube(2);
        assert_eq!(u.mass(&rect(&[0.0, 0.0], &[0.25, 0.5])).unwrap(), 0.125);
        assert_eq!(u.mass(&rect(&[-1.0, -1.0], &[2.0, 2.0])).unwrap(), 1.0);
        assert_eq!(u.mass(&rect(&[0.0, 0.0], &[0.5, 1.0])).unwrap(), 0.5);
        assert!(matches!(u.mass(&HyperRectangle::unit(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gaussian_cdf_reference_values() {
        let g = Marginal::gaussian(0.0, 1.0).unwrap();
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((g.cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-13);
        assert!((g.sf(6.0) - 9.865_876_450_376_98e-10).abs() < 1e-20);
        assert!((g.mass(-1.96, 1.96) - 0.950_004_209_703_559).abs() < 1e-12);
    }

    #[test]
    fn gaussian_clip_box_leaves_requested_mass() {
        let d = ProductDistribution::standard_gaussian(3);
        let b = d.support_box(1e-9);
        let m = d.mass(&b).unwrap();
        assert!((1.0 - m - 1e-9).abs() < 1e-12, "outside mass {}", 1.0 - m);
    }

    #[test]
    fn quantile_inverts_mass() {
        let g = Marginal::gaussian(1.0, 2.0).unwrap();
        for &(a, b, t) in &[(-3.0, 4.0, 0.5), (2.0, 9.0, 0.1), (-20.0, -1.0, 0.9)] {
            let x = g.quantile_between(a, b, t);
            assert!(a < x && x <= b);
            assert!((g.mass(a, x) - t * g.mass(a, b)).abs() < 1e-12);
        }
    }

    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn conditional_samples_pass_ks_against_truncated_marginal() {
        // Critical value of the one-sample KS statistic at significance 1e-3.
        let n = 100_000;
        let crit = (-(0.5e-3f64).ln() / 2.0).sqrt() / (n as f64).sqrt();
        let d = ProductDistribution::new(vec![
            Marginal::gaussian(0.0, 1.0).unwrap(),
            Marginal::uniform(-1.0, 3.0).unwrap(),
        ])
        .unwrap();
        let r = rect(&[0.5, 0.0], &[2.5, 0.5]);
        let mut rng = rng_from_seed(11);
        let pts: Vec<Point> = (0..n).map(|_| d.sample_in(&r, &mut rng).unwrap()).collect();
        assert!(pts.iter().all(|p| r.contains(p)));
        for axis in 0..2 {
            let m = d.marginals()[axis];
            let (a, b) = (r.lo()[axis], r.hi()[axis]);
            let stat = ks_statistic(pts.iter().map(|p| p[axis]).collect(), |x| m.mass(a, x) / m.mass(a, b));
            assert!(stat < crit, "axis {axis}: KS {stat} >= {crit}");
        }
    }

    #[test]
    fn samples_agree_with_rect_mass() {
        // Chi-square over a 4x4 grid of the unit square, 15 dof, 1e-3 level.
        let d = ProductDistribution::new(vec![
            Marginal::gaussian(0.5, 0.3).unwrap(),
            Marginal::uniform(0.0, 1.0).unwrap(),
        ])
        .unwrap();
        let edges = [f64::NEG_INFINITY, 0.25, 0.5, 0.75, f64::INFINITY];
        let n = 40_000;
        let mut counts = [[0usize; 4]; 4];
        let mut rng = rng_from_seed(5);
        for _ in 0..n {
            let p = d.sample(&mut rng);
            let i = edges.windows(2).position(|w| w[0] < p[0] && p[0] <= w[1]).unwrap();
            let j = edges.windows(2).position(|w| w[0] < p[1] && p[1] <= w[1]).unwrap();
            counts[i][j] += 1;
        }
        let mut chi2 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let mi = d.marginals()[0].mass(edges[i], edges[i + 1]);
                let mj = d.marginals()[1].mass(edges[j], edges[j + 1]);
                let e = mi * mj * n as f64;
                chi2 += (counts[i][j] as f64 - e).powi(2) / e;
            }
        }
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn split_masses_are_additive(
            lo in prop::collection::vec(-3.0f64..0.0, 3),
            w in prop::collection::vec(0.01f64..3.0, 3),
            axis in 0usize..3,
            frac in 0.01f64..0.99,
        ) {
            let d = ProductDistribution::new(vec![
                Marginal::gaussian(0.0, 1.0).unwrap(),
                Marginal::uniform(-1.0, 1.0).unwrap(),
                Marginal::gaussian(-1.0, 0.5).unwrap(),
            ]).unwrap();
            let hi: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| a + b).collect();
            let r = HyperRectangle::from_bounds(lo.clone(), hi).unwrap();
            let at = r.lo()[axis] + frac * (r.hi()[axis] - r.lo()[axis]);
            let (a, b) = r.split(axis, at).unwrap();
            let (pa, pb, pr) = (d.mass(&a).unwrap(), d.mass(&b).unwrap(), d.mass(&r).unwrap());
            prop_assert!((pa + pb - pr).abs() <= 1e-12);
            prop_assert!(pa <= pr + 1e-15 && pb <= pr + 1e-15);
        }
    }
}
