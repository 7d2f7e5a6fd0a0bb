//! Three concentric spheres: ball explanations with linear local classifiers
//! must either be tiny or suffer a large local loss.

pub mod caps;
pub mod linear;
pub mod psi;
pub mod scan;

pub use caps::{ball_cap_decomposition, cap_angle, BallSampler, CapDecomposition};
pub use linear::{best_linear_loss, LinearFit};
pub use psi::psi;
pub use scan::{mass_loss_scan, ScanReport, ScanRow};

use serde::{Deserialize, Serialize};

use crate::distributions::SpheresDistribution;
use crate::error::Result;
use crate::explain::{Classifier, Label};
use crate::geometry::Point;

/// The spheres distribution, its radial classifier, and the outer-shell
/// point `x* = (1 + beta) e_1` that explanations are built around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpheresInstance {
    dist: SpheresDistribution,
    x_star: Point,
}

impl SpheresInstance {
    pub fn new(d: usize) -> Result<Self> {
        let dist = SpheresDistribution::new(d)?;
        let mut x = vec![0.0; d];
        x[0] = 1.0 + dist.beta();
        Ok(SpheresInstance { dist, x_star: Point::from_vec_unchecked(x) })
    }

    pub fn distribution(&self) -> &SpheresDistribution {
        &self.dist
    }

    pub fn x_star(&self) -> &Point {
        &self.x_star
    }

    /// Balls with less mass than this are exempt from the loss bound.
    pub fn mass_threshold(&self) -> f64 {
        3f64.powi(1 - self.dist.d() as i32)
    }
}

/// `-1` on the middle shell `1 - alpha/2 < |x|^2 <= 1 + beta/2`, `+1` elsewhere.
pub fn f_spheres(inst: &SpheresInstance, x: &Point) -> Label {
    let n2 = x.norm_sq();
    let (a, b) = (inst.dist.alpha(), inst.dist.beta());
    Label::from_sign(!(n2 > 1.0 - a / 2.0 && n2 <= 1.0 + b / 2.0))
}

impl Classifier for SpheresInstance {
    fn classify(&self, x: &Point) -> Label {
        f_spheres(self, x)
    }
}
