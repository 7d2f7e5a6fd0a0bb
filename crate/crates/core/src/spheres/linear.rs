//! Fitting the best linear classifier to the radial labels inside a ball.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::caps::BallSampler;
use super::SpheresInstance;
use crate::error::Result;
use crate::explain::{Classifier, Label, LocalClassifier};
use crate::geometry::{self, Ball, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// 0-1 loss of the chosen classifier on an independent held-out sample.
    pub loss: f64,
    /// 0-1 loss on the sample used to choose it.
    pub train_loss: f64,
    pub classifier: LocalClassifier,
    pub mass: f64,
}

/// Best threshold for the rule `+1 iff t >= b` on sorted projections:
/// returns `(errors, b)`.
pub fn best_threshold(proj: &[f64], labels: &[Label]) -> (usize, f64) {
    let mut idx: Vec<usize> = (0..proj.len()).collect();
    idx.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
    // b below every point: everything predicted +1.
    let mut errors = labels.iter().filter(|&&l| l == Label::Neg).count();
    let first = idx.first().map_or(0.0, |&i| proj[i]);
    let mut best = (errors, first - 1.0);
    let mut k = 0;
    while k < idx.len() {
        let t = proj[idx[k]];
        while k < idx.len() && proj[idx[k]] == t {
            match labels[idx[k]] {
                Label::Pos => errors += 1,
                Label::Neg => errors -= 1,
            }
            k += 1;
        }
        if errors < best.0 {
            let b = if k < idx.len() { 0.5 * (t + proj[idx[k]]) } else { t + 1.0 };
            // Midpoints can round onto t itself; nudge above it.
            let b = if b <= t { t.next_up() } else { b };
            best = (errors, b);
        }
    }
    best
}

fn zero_one(c: &LocalClassifier, pts: &[Point], labels: &[Label]) -> f64 {
    let wrong = pts.iter().zip(labels).filter(|(p, l)| c.predict(p) != **l).count();
    wrong as f64 / pts.len().max(1) as f64
}

fn sweep(w: &[f64], pts: &[Point], labels: &[Label]) -> (usize, LocalClassifier) {
    let proj: Vec<f64> = pts.iter().map(|p| p.dot(w)).collect();
    let (e, b) = best_threshold(&proj, labels);
    (e, LocalClassifier::Linear { w: w.to_vec(), b })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Adam on the sigmoid-smoothed 0-1 loss in standardized coordinates.
/// Returns a direction in the original coordinates.
fn smoothed_descent(z: &[Vec<f64>], y: &[f64], init: Vec<f64>, iters: usize) -> Vec<f64> {
    let d = init.len();
    let n = z.len() as f64;
    let mut w = init;
    let mut b = 0.0;
    let (mut mw, mut vw) = (vec![0.0; d], vec![0.0; d]);
    let (mut mb, mut vb) = (0.0, 0.0);
    let (lr, b1, b2, eps) = (0.05, 0.9, 0.999, 1e-8);
    let mut gw = vec![0.0; d];
    for it in 1..=iters {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (zi, &yi) in z.iter().zip(y) {
            let s = geometry::dot(&w, zi) - b;
            // Loss sigmoid(-y s); derivative wrt s is -y sig (1 - sig).
            let sig = sigmoid(-yi * s);
            let ds = -yi * sig * (1.0 - sig) / n;
            for (g, x) in gw.iter_mut().zip(zi) {
                *g += ds * x;
            }
            gb -= ds;
        }
        let (c1, c2) = (1.0 - f64::powi(b1, it as i32), 1.0 - f64::powi(b2, it as i32));
        for k in 0..d {
            mw[k] = b1 * mw[k] + (1.0 - b1) * gw[k];
            vw[k] = b2 * vw[k] + (1.0 - b2) * gw[k] * gw[k];
            w[k] -= lr * (mw[k] / c1) / ((vw[k] / c2).sqrt() + eps);
        }
        mb = b1 * mb + (1.0 - b1) * gb;
        vb = b2 * vb + (1.0 - b2) * gb * gb;
        b -= lr * (mb / c1) / ((vb / c2).sqrt() + eps);
    }
    w
}

/// Searches for the linear classifier with the smallest 0-1 loss against the
/// radial labels on the ball.
///
/// Candidates come from an exact threshold sweep along the ball's axis (both
/// orientations) and from `restarts` smoothed-loss descents, each followed by
/// an exact threshold sweep along the found direction. The winner on the
/// training sample is scored on a fresh sample of the same size, so the
/// reported loss is not biased downwards by the search.
pub fn best_linear_loss(
    inst: &SpheresInstance,
    ball: &Ball,
    n_points: usize,
    restarts: usize,
    rng: &mut dyn RngCore,
) -> Result<LinearFit> {
    let sampler = BallSampler::new(inst.distribution(), ball)?;
    let draw = |rng: &mut dyn RngCore| -> Result<(Vec<Point>, Vec<Label>)> {
        let mut pts = Vec::with_capacity(n_points);
        for _ in 0..n_points.max(1) {
            pts.push(sampler.sample(rng)?.1);
        }
        let labels = pts.iter().map(|p| inst.classify(p)).collect();
        Ok((pts, labels))
    };
    let (train, train_y) = draw(rng)?;
    let d = inst.distribution().d();
    let axis = sampler.decomposition().axis.clone();
    let neg_axis: Vec<f64> = axis.iter().map(|v| -v).collect();

    let mut best = sweep(&axis, &train, &train_y);
    let cand = sweep(&neg_axis, &train, &train_y);
    if cand.0 < best.0 {
        best = cand;
    }

    if restarts > 0 && best.0 > 0 {
        let n = train.len() as f64;
        let mean: Vec<f64> = (0..d).map(|k| train.iter().map(|p| p[k]).sum::<f64>() / n).collect();
        let sd: Vec<f64> = (0..d)
            .map(|k| {
                let v = train.iter().map(|p| (p[k] - mean[k]).powi(2)).sum::<f64>() / n;
                v.sqrt().max(1e-300)
            })
            .collect();
        let z: Vec<Vec<f64>> =
            train.iter().map(|p| (0..d).map(|k| (p[k] - mean[k]) / sd[k]).collect()).collect();
        let y: Vec<f64> = train_y.iter().map(|l| l.sign() as f64).collect();
        for r in 0..restarts {
            let init: Vec<f64> = if r == 0 {
                axis.iter().zip(&sd).map(|(a, s)| a * s).collect()
            } else {
                (0..d).map(|_| StandardNormal.sample(rng)).collect()
            };
            let ws = smoothed_descent(&z, &y, init, 150 + rng.random_range(0..50));
            let w: Vec<f64> = ws.iter().zip(&sd).map(|(w, s)| w / s).collect();
            let norm = geometry::norm(&w);
            if !(norm > 0.0) || !norm.is_finite() {
                continue;
            }
            let w: Vec<f64> = w.iter().map(|v| v / norm).collect();
            let cand = sweep(&w, &train, &train_y);
            if cand.0 < best.0 {
                best = cand;
            }
        }
    }

    let (test, test_y) = draw(rng)?;
    Ok(LinearFit {
        loss: zero_one(&best.1, &test, &test_y),
        train_loss: best.0 as f64 / train.len() as f64,
        classifier: best.1,
        mass: sampler.mass(),
    })
}
