//! Scanning balls around `x*` for the mass-versus-loss dichotomy.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::caps::ball_cap_decomposition;
use super::linear::best_linear_loss;
use super::SpheresInstance;
use crate::distributions::sample_uniform_sphere;
use crate::error::{Error, Result};
use crate::geometry::{Ball, Point};

/// One scanned ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub d: usize,
    pub ball_center_norm: f64,
    pub radius: f64,
    pub theta: [f64; 3],
    pub mass: f64,
    pub mass_threshold: f64,
    /// `None` for balls of zero mass.
    pub best_loss: Option<f64>,
    pub train_loss: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub d: usize,
    pub slack: f64,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// CSV with header `d,ball_center_norm,radius,theta1,theta2,theta3,mass,mass_threshold,best_loss,verdict`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("d,ball_center_norm,radius,theta1,theta2,theta3,mass,mass_threshold,best_loss,verdict\n");
        for r in &self.rows {
            let loss = r.best_loss.map(|l| format!("{l:?}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}\n",
                r.d,
                r.ball_center_norm,
                r.radius,
                r.theta[0],
                r.theta[1],
                r.theta[2],
                r.mass,
                r.mass_threshold,
                loss,
                if r.pass { "PASS" } else { "FAIL" }
            ));
        }
        s
    }
}

/// Balls containing `x*`: the whole space, the point itself, a ball inside
/// the outer shell's neighbourhood, then random centres and radii.
pub fn scan_balls(inst: &SpheresInstance, count: usize, rng: &mut dyn RngCore) -> Vec<Ball> {
    let d = inst.distribution().d();
    let xs = inst.x_star().clone();
    let beta = inst.distribution().beta();
    let mut balls = vec![
        Ball::new(Point::origin(d), 3.0).expect("valid"),
        Ball::new(xs.clone(), 0.0).expect("valid"),
        Ball::new(xs.clone(), beta / 2.0).expect("valid"),
    ];
    while balls.len() < count {
        // Log-uniform radius; the centre is within that radius of x*.
        let radius = 10f64.powf(rng.random_range(-4.0..0.4));
        let offset = radius * rng.random::<f64>();
        let dir = if rng.random_bool(0.3) {
            xs.coords().iter().map(|v| -v / xs.norm()).collect::<Vec<f64>>()
        } else {
            sample_uniform_sphere(d, 1.0, rng).into_coords()
        };
        let center: Vec<f64> = xs.coords().iter().zip(&dir).map(|(x, v)| x + offset * v).collect();
        balls.push(Ball::new(Point::from_vec_unchecked(center), radius).expect("valid"));
    }
    balls.truncate(count.max(1));
    balls
}

/// Verdict for each ball: PASS iff its mass is below `3^(1-d)` or its best
/// linear loss is at least `1/6 - slack`. The whole-space ball uses four
/// times as many points.
pub fn mass_loss_scan(
    inst: &SpheresInstance,
    balls: usize,
    n_points: usize,
    restarts: usize,
    slack: f64,
    rng: &mut dyn RngCore,
) -> Result<ScanReport> {
    if balls == 0 {
        return Err(Error::param("trials >= 1"));
    }
    let d = inst.distribution().d();
    let threshold = inst.mass_threshold();
    let mut rows = Vec::with_capacity(balls);
    for (i, ball) in scan_balls(inst, balls, rng).into_iter().enumerate() {
        let dec = ball_cap_decomposition(inst.distribution(), ball.center(), ball.radius())?;
        let mass = dec.mass(d);
        let n = if i == 0 { 4 * n_points } else { n_points };
        let fit = match best_linear_loss(inst, &ball, n, restarts, rng) {
            Ok(f) => Some(f),
            Err(Error::ZeroMassBall) => None,
            Err(e) => return Err(e),
        };
        let best_loss = fit.as_ref().map(|f| f.loss);
        let pass = mass < threshold || best_loss.is_some_and(|l| l >= 1.0 / 6.0 - slack);
        rows.push(ScanRow {
            d,
            ball_center_norm: ball.center().norm(),
            radius: ball.radius(),
            theta: dec.angles,
            mass,
            mass_threshold: threshold,
            best_loss,
            train_loss: fit.map(|f| f.train_loss),
            pass,
        });
    }
    Ok(ScanReport { d, slack, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn scanned_balls_contain_x_star() {
        let inst = SpheresInstance::new(6).unwrap();
        let mut rng = rng_from_seed(51);
        for b in scan_balls(&inst, 200, &mut rng) {
            assert!(b.contains(inst.x_star()) || b.radius() == 0.0);
        }
    }

    #[test]
    fn small_scan_passes_and_writes_csv() {
        let inst = SpheresInstance::new(5).unwrap();
        let mut rng = rng_from_seed(52);
        let rep = mass_loss_scan(&inst, 8, 1500, 2, 0.02, &mut rng).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert_eq!(rep.rows[1].mass, 0.0);
        assert_eq!(rep.rows[1].best_loss, None);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 10));
    }
}
