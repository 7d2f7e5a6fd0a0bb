//! Balls intersected with the three spheres, as spherical caps.

use std::f64::consts::PI;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::psi::{psi, sin_power_panel};
use crate::distributions::SpheresDistribution;
use crate::error::{Error, Result};
use crate::geometry::{self, Ball, Point};

/// Angular radius of the cap cut from the sphere of radius `s` (centred at
/// the origin) by the ball of radius `r` centred at distance `a` from the
/// origin. The cap is centred on the ray through the ball's centre.
pub fn cap_angle(s: f64, a: f64, r: f64) -> f64 {
    if a == 0.0 {
        return if s <= r { PI } else { 0.0 };
    }
    // 1 - cos(theta) = (r^2 - (s - a)^2) / (2 s a), factored to avoid cancellation.
    let one_minus_h = (r - s + a) * (r + s - a) / (2.0 * s * a);
    if one_minus_h <= 0.0 {
        0.0
    } else if one_minus_h >= 2.0 {
        PI
    } else {
        2.0 * (one_minus_h / 2.0).sqrt().asin()
    }
}

/// Cap angles of a ball on the inner, middle and outer sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapDecomposition {
    /// Unit vector from the origin towards the ball centre; `e_1` when the
    /// ball is centred at the origin.
    pub axis: Vec<f64>,
    pub angles: [f64; 3],
}

impl CapDecomposition {
    /// Mass of the ball under the uniform three-sphere mixture.
    pub fn mass(&self, d: usize) -> f64 {
        self.angles.iter().map(|&t| psi(t, d)).sum::<f64>() / 3.0
    }

    pub fn sphere_masses(&self, d: usize) -> [f64; 3] {
        self.angles.map(|t| psi(t, d))
    }
}

pub fn ball_cap_decomposition(dist: &SpheresDistribution, a: &Point, r: f64) -> Result<CapDecomposition> {
    a.check_dim(dist.d())?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidGeometry(format!("invalid radius {r}")));
    }
    let an = a.norm();
    let axis = if an > 0.0 {
        a.coords().iter().map(|v| v / an).collect()
    } else {
        let mut e = vec![0.0; dist.d()];
        e[0] = 1.0;
        e
    };
    Ok(CapDecomposition { axis, angles: dist.radii().map(|s| cap_angle(s, an, r)) })
}

/// Inverse-CDF sampler for the polar angle of a uniform point in a cap:
/// density proportional to `sin^n(phi)` on `[0, theta]`.
#[derive(Debug, Clone)]
pub struct CapAngleSampler {
    n: u32,
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

const PANELS: usize = 64;

impl CapAngleSampler {
    pub fn new(d: usize, theta: f64) -> Self {
        let n = (d - 2) as u32;
        let nodes: Vec<f64> = (0..=PANELS).map(|i| theta * i as f64 / PANELS as f64).collect();
        let mut cum = vec![0.0; PANELS + 1];
        for i in 0..PANELS {
            cum[i + 1] = cum[i] + sin_power_panel(n, nodes[i], nodes[i + 1]);
        }
        CapAngleSampler { n, nodes, cum }
    }

    pub fn theta(&self) -> f64 {
        self.nodes[PANELS]
    }

    /// CDF of the polar angle at `phi`.
    pub fn cdf(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, self.theta());
        let k = self.panel_of(phi);
        ((self.cum[k] + sin_power_panel(self.n, self.nodes[k], phi)) / self.cum[PANELS]).clamp(0.0, 1.0)
    }

    fn panel_of(&self, phi: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x <= phi);
        k.clamp(1, PANELS) - 1
    }

    /// The angle at which the CDF equals `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.cum[PANELS];
        let k = self.cum.partition_point(|&c| c <= target).clamp(1, PANELS) - 1;
        let (mut lo, mut hi) = (self.nodes[k], self.nodes[k + 1]);
        let rest = target - self.cum[k];
        let mut x = 0.5 * (lo + hi);
        for _ in 0..60 {
            let g = sin_power_panel(self.n, self.nodes[k], x) - rest;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = x.sin().powi(self.n as i32);
            let mut next = if slope > 0.0 { x - g / slope } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Exact sampler for the three-sphere mixture conditioned on a ball.
#[derive(Debug, Clone)]
pub struct BallSampler {
    d: usize,
    radii: [f64; 3],
    axis: Vec<f64>,
    weights: [f64; 3],
    samplers: [Option<CapAngleSampler>; 3],
    decomposition: CapDecomposition,
}

impl BallSampler {
    pub fn new(dist: &SpheresDistribution, ball: &Ball) -> Result<Self> {
        let dec = ball_cap_decomposition(dist, ball.center(), ball.radius())?;
        let weights = dec.sphere_masses(dist.d());
        if weights.iter().all(|&w| w <= 0.0) {
            return Err(Error::ZeroMassBall);
        }
        let samplers = [0, 1, 2].map(|i| (weights[i] > 0.0).then(|| CapAngleSampler::new(dist.d(), dec.angles[i])));
        Ok(BallSampler { d: dist.d(), radii: dist.radii(), axis: dec.axis.clone(), weights, samplers, decomposition: dec })
    }

    pub fn decomposition(&self) -> &CapDecomposition {
        &self.decomposition
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() / 3.0
    }

    /// A point of the ball and the index of the sphere it lies on.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<(usize, Point)> {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut i = 0;
        for (j, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                i = j;
                if u < w {
                    break;
                }
                u -= w;
            }
        }
        let sampler = self.samplers[i].as_ref().expect("sampler exists for positive weight");
        let phi = sampler.quantile(rng.random::<f64>());
        // Uniform direction orthogonal to the axis.
        let ortho = loop {
            let g: Vec<f64> = (0..self.d).map(|_| StandardNormal.sample(rng)).collect();
            let proj = geometry::dot(&g, &self.axis);
            let v: Vec<f64> = g.iter().zip(&self.axis).map(|(g, a)| g - proj * a).collect();
            let n = geometry::norm(&v);
            if n > 1e-12 {
                break v.into_iter().map(|x| x / n).collect::<Vec<f64>>();
            }
        };
        let s = self.radii[i];
        let (c, sn) = (phi.cos(), phi.sin());
        let x: Vec<f64> = self.axis.iter().zip(&ortho).map(|(a, o)| s * (c * a + sn * o)).collect();
        // Restore the exact radius lost to rounding.
        let norm = geometry::norm(&x);
        Ok((i, Point::from_vec_unchecked(x.into_iter().map(|v| v * s / norm).collect())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionOracle;
    use crate::seed::rng_from_seed;

    #[test]
    fn origin_centred_balls() {
        let s = SpheresDistribution::new(6).unwrap();
        let o = Point::origin(6);
        let dec = ball_cap_decomposition(&s, &o, 1.0 - s.alpha() / 2.0).unwrap();
        assert_eq!(dec.angles, [PI, 0.0, 0.0]);
        assert!((dec.mass(6) - 1.0 / 3.0).abs() < 1e-15);
        let dec = ball_cap_decomposition(&s, &o, 2.0).unwrap();
        assert_eq!(dec.angles, [PI, PI, PI]);
        assert!((dec.mass(6) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cap_angle_matches_arccos_when_well_conditioned() {
        for &(s, a, r) in &[(1.0, 0.7, 0.5), (1.2, 0.3, 1.1), (0.9, 2.0, 1.5)] {
            let h: f64 = (s * s + a * a - r * r) / (2.0 * s * a);
            let want = h.clamp(-1.0, 1.0).acos();
            assert!((cap_angle(s, a, r) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposed_mass_matches_rejection_estimate() {
        let s = SpheresDistribution::new(6).unwrap();
        let mut rng = rng_from_seed(21);
        let n = 1_000_000;
        for _ in 0..3 {
            let a = crate::distributions::sample_uniform_sphere(6, rng.random_range(0.2..1.5), &mut rng);
            let r = rng.random_range(0.3..1.2);
            let ball = Ball::new(a.clone(), r).unwrap();
            let mass = ball_cap_decomposition(&s, &a, r).unwrap().mass(6);
            let hits = (0..n).filter(|_| ball.contains(&s.sample(&mut rng))).count();
            let p = hits as f64 / n as f64;
            let se = (mass * (1.0 - mass) / n as f64).sqrt();
            assert!((p - mass).abs() <= 4.0 * se, "mc {p} vs {mass}");
        }
    }

    #[test]
    fn ball_samples_are_inside_and_on_spheres() {
        let s = SpheresDistribution::new(8).unwrap();
        let mut rng = rng_from_seed(22);
        let a = Point::new(vec![0.9, 0.2, 0.0, 0.1, 0.0, 0.0, 0.0, -0.3]).unwrap();
        let ball = Ball::new(a, 0.4).unwrap();
        let bs = BallSampler::new(&s, &ball).unwrap();
        for _ in 0..5000 {
            let (i, x) = bs.sample(&mut rng).unwrap();
            assert!((x.norm() - s.radii()[i]).abs() < 1e-12);
            assert!(x.distance(ball.center()) <= ball.radius() + 1e-12);
        }
    }

    #[test]
    fn polar_angles_follow_sine_power_law() {
        // KS test of sampled angles against the quadrature CDF.
        let d = 7;
        let theta = 0.8;
        let cs = CapAngleSampler::new(d, theta);
        let mut rng = rng_from_seed(23);
        let n = 50_000;
        let mut xs: Vec<f64> = (0..n).map(|_| cs.quantile(rng.random::<f64>())).collect();
        xs.sort_by(f64::total_cmp);
        let full = super::super::psi::sin_power_integral(5, 0.0, theta);
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = super::super::psi::sin_power_integral(5, 0.0, x) / full;
            ks = ks.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let crit = (-(0.5e-3f64).ln() / 2.0).sqrt() / (n as f64).sqrt();
        assert!(ks < crit, "KS {ks} >= {crit}");
        for u in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((cs.cdf(cs.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_radius_ball_has_no_mass() {
        let s = SpheresDistribution::new(5).unwrap();
        let mut x = vec![0.0; 5];
        x[0] = 1.0 + s.beta();
        let b = Ball::new(Point::new(x).unwrap(), 0.0).unwrap();
        assert_eq!(s.ball_mass(&b).unwrap().unwrap(), 0.0);
        assert!(matches!(BallSampler::new(&s, &b), Err(Error::ZeroMassBall)));
    }
}
