//! Exact posterior odds of the world bit given labelled sample points.

use std::collections::HashMap;

use super::moments::MomentMatchedProbs;
use super::partition::PartitionSpec;
use crate::error::{Error, Result};
use crate::explain::Label;
use crate::geometry::Point;

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln((1/2m) sum_j r_j^neg (1 - r_j)^pos)`.
fn log_mixture(r: &[f64], neg: u64, pos: u64) -> f64 {
    let terms: Vec<f64> = r
        .iter()
        .map(|&x| {
            let a = if neg == 0 { 0.0 } else { neg as f64 * x.ln() };
            let b = if pos == 0 { 0.0 } else { pos as f64 * (-x).ln_1p() };
            a + b
        })
        .collect();
    log_sum_exp(&terms) - (r.len() as f64).ln()
}

/// Per-cell counts of distinct labelled sub-cells, after merging points
/// that share a sub-cell.
pub fn sub_cell_counts(partition: &PartitionSpec, xs: &[Point], ys: &[Label]) -> Result<Vec<(usize, u64, u64)>> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidGeometry("points and labels differ in length".into()));
    }
    let mut seen: HashMap<(usize, u64), (Label, usize)> = HashMap::new();
    for (idx, (x, &y)) in xs.iter().zip(ys).enumerate() {
        match partition.locate_sub(x) {
            None if y == Label::Neg => return Err(Error::OutsideLabelViolation { index: idx }),
            None => {}
            Some(key) => match seen.get(&key) {
                Some(&(label, first)) if label != y => {
                    return Err(Error::InconsistentLabels { first, second: idx });
                }
                Some(_) => {}
                None => {
                    seen.insert(key, (y, idx));
                }
            },
        }
    }
    let mut per_cell: HashMap<usize, (u64, u64)> = HashMap::new();
    for ((cell, _), (label, _)) in seen {
        let e = per_cell.entry(cell).or_default();
        match label {
            Label::Neg => e.0 += 1,
            Label::Pos => e.1 += 1,
        }
    }
    let mut out: Vec<(usize, u64, u64)> = per_cell.into_iter().map(|(c, (n, p))| (c, n, p)).collect();
    out.sort_unstable();
    Ok(out)
}

/// `ln(Pr[Y | P = 1, X] / Pr[Y | P = 0, X])`.
pub fn log_likelihood_ratio(
    partition: &PartitionSpec,
    probs: &MomentMatchedProbs,
    xs: &[Point],
    ys: &[Label],
) -> Result<f64> {
    let counts = sub_cell_counts(partition, xs, ys)?;
    Ok(counts.iter().map(|&(_, n, p)| log_mixture(&probs.p, n, p) - log_mixture(&probs.q, n, p)).sum())
}

/// `Pr[Y | P = 1, X] / Pr[Y | P = 0, X]`.
pub fn likelihood_ratio(
    partition: &PartitionSpec,
    probs: &MomentMatchedProbs,
    xs: &[Point],
    ys: &[Label],
) -> Result<f64> {
    log_likelihood_ratio(partition, probs, xs, ys).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::moments::{moment_matched_probs, p_offsets, q_offsets};
    use crate::adversary::partition::build_partition;
    use crate::distributions::ProductDistribution;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn part(k: u64) -> PartitionSpec {
        build_partition(&ProductDistribution::unit_cube(2), 0.05, k).unwrap()
    }

    fn point_in(p: &PartitionSpec, i: usize, j: u64, rng: &mut impl Rng) -> Point {
        let d = ProductDistribution::unit_cube(2);
        d.sample_in(&p.sub_rectangle(i, j).unwrap(), rng).unwrap()
    }

    #[test]
    fn empty_sample_is_uninformative() {
        let probs = moment_matched_probs(0.02, 0.01, 0.01).unwrap();
        assert_eq!(likelihood_ratio(&part(10), &probs, &[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn label_errors() {
        let p = part(10);
        let probs = moment_matched_probs(0.02, 0.01, 0.01).unwrap();
        let mut rng = rng_from_seed(1);
        let a = point_in(&p, 0, 3, &mut rng);
        let b = point_in(&p, 0, 3, &mut rng);
        assert_eq!(
            likelihood_ratio(&p, &probs, &[a.clone(), b], &[Label::Pos, Label::Neg]),
            Err(Error::InconsistentLabels { first: 0, second: 1 })
        );
        let out = Point::new(vec![1.5, 0.2]).unwrap();
        assert_eq!(
            likelihood_ratio(&p, &probs, &[a, out], &[Label::Pos, Label::Neg]),
            Err(Error::OutsideLabelViolation { index: 1 })
        );
    }

    #[test]
    fn order_one_system_reveals_fourth_moment() {
        // Four distinct sub-cells in one cell, all labelled -1: the ratio is
        // sum p^4 / sum q^4.
        let p = part(100);
        let mut probs = moment_matched_probs(0.02, 0.01, 0.01).unwrap();
        let (c, s) = (0.3, 0.05);
        probs.p = p_offsets(1).iter().map(|o| c + s * o).collect();
        probs.q = q_offsets(1).unwrap().iter().map(|o| c + s * o).collect();
        let mut rng = rng_from_seed(2);
        let xs: Vec<Point> = (0..4).map(|j| point_in(&p, 0, j * 10, &mut rng)).collect();
        let ys = vec![Label::Neg; 4];
        let got = likelihood_ratio(&p, &probs, &xs, &ys).unwrap();
        let want = probs.p.iter().map(|v| v.powi(4)).sum::<f64>() / probs.q.iter().map(|v| v.powi(4)).sum::<f64>();
        assert!((got - want).abs() < 1e-12 && (got - 1.0).abs() > 1e-4);
        // Three points reveal nothing.
        let r3 = likelihood_ratio(&p, &probs, &xs[..3], &ys[..3]).unwrap();
        assert!((r3 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_within_a_sub_cell_are_merged() {
        let p = part(100);
        let probs = moment_matched_probs(0.02, 0.01, 0.01).unwrap();
        let mut rng = rng_from_seed(3);
        let xs: Vec<Point> = (0..40).map(|_| point_in(&p, 2, 7, &mut rng)).collect();
        let ys = vec![Label::Neg; 40];
        assert_eq!(sub_cell_counts(&p, &xs, &ys).unwrap(), vec![(2, 1, 0)]);
        assert!((likelihood_ratio(&p, &probs, &xs, &ys).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_samples_carry_no_information() {
        let p = part(1000);
        let probs = moment_matched_probs(0.02, 0.01, 0.01).unwrap();
        let two_m = 2 * probs.m as u64;
        let mut rng = rng_from_seed(4);
        for _ in 0..100 {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for i in 0..p.len() {
                let distinct = rng.random_range(0..two_m);
                for j in 0..distinct {
                    let label = if rng.random_bool(0.5) { Label::Neg } else { Label::Pos };
                    for _ in 0..rng.random_range(1..3) {
                        xs.push(point_in(&p, i, j * 7, &mut rng));
                        ys.push(label);
                    }
                }
            }
            let r = likelihood_ratio(&p, &probs, &xs, &ys).unwrap();
            assert!((r - 1.0).abs() <= 1e-9, "{r}");
        }
    }
}
