//! Black-box classifiers, local classifiers, local explanations and explainers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, exact, Ball, HyperRectangle, Point, Region};

/// A binary label in `{+1, -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-1")]
    Neg,
    #[serde(rename = "+1")]
    Pos,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    pub fn from_sign(positive: bool) -> Label {
        if positive {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

/// A deterministic black-box classifier.
pub trait Classifier: Send + Sync {
    fn classify(&self, x: &Point) -> Label;
}

impl<F> Classifier for F
where
    F: Fn(&Point) -> Label + Send + Sync,
{
    fn classify(&self, x: &Point) -> Label {
        self(x)
    }
}

/// Members of the two simple hypothesis classes used for local explanations:
/// the constant classifiers and the linear classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalClassifier {
    Constant(Label),
    /// Predicts `+1` iff `<w, z> >= b`. Ties go to `+1`.
    Linear {
        #[serde(with = "exact::vec_f64_str")]
        w: Vec<f64>,
        #[serde(with = "exact::f64_str")]
        b: f64,
    },
}

impl LocalClassifier {
    /// Linear classifier from a weight vector that is already unit norm.
    pub fn linear(w: Vec<f64>, b: f64) -> Result<Self> {
        let n = geometry::norm(&w);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGeometry(format!("weight vector has norm {n}, expected 1")));
        }
        if !b.is_finite() {
            return Err(Error::InvalidGeometry("linear offset must be finite".into()));
        }
        Ok(LocalClassifier::Linear { w, b })
    }

    /// Linear classifier from an arbitrary nonzero `w`; `w` and `b` are
    /// rescaled together so the decision rule is unchanged.
    pub fn linear_normalized(w: Vec<f64>, b: f64) -> Result<Self> {
        let n = geometry::norm(&w);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidGeometry("weight vector must be nonzero".into()));
        }
        if !b.is_finite() {
            return Err(Error::InvalidGeometry("linear offset must be finite".into()));
        }
        let w: Vec<f64> = w.iter().map(|v| v / n).collect();
        Ok(LocalClassifier::Linear { w, b: b / n })
    }

    pub fn predict(&self, z: &Point) -> Label {
        match self {
            LocalClassifier::Constant(l) => *l,
            LocalClassifier::Linear { w, b } => Label::from_sign(z.dot(w) >= *b),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, LocalClassifier::Constant(_))
    }

    pub(crate) fn key(&self, out: &mut Vec<u64>) {
        match self {
            LocalClassifier::Constant(l) => out.push(if *l == Label::Pos { 2 } else { 3 }),
            LocalClassifier::Linear { w, b } => {
                out.push(4);
                out.extend(w.iter().map(|v| v.to_bits()));
                out.push(b.to_bits());
            }
        }
    }
}

/// A region around an anchor point together with a local classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    anchor: Point,
    region: Region,
    local: LocalClassifier,
}

impl LocalExplanation {
    pub fn new(anchor: Point, region: Region, local: LocalClassifier) -> Result<Self> {
        anchor.check_dim(region.dim())?;
        if let LocalClassifier::Linear { w, .. } = &local {
            if w.len() != anchor.dim() {
                return Err(Error::DimensionMismatch { expected: anchor.dim(), got: w.len() });
            }
        }
        if !region.contains(&anchor) {
            return Err(Error::InvalidGeometry("anchor is not inside its region".into()));
        }
        Ok(LocalExplanation { anchor, region, local })
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn local(&self) -> &LocalClassifier {
        &self.local
    }

    /// Identity of the (region, local classifier) pair, ignoring the anchor.
    pub(crate) fn key(&self) -> Vec<u64> {
        let mut k = Vec::with_capacity(2 * self.region.dim() + 4);
        self.region.key(&mut k);
        self.local.key(&mut k);
        k
    }
}

/// Which explanation class an explainer guarantees to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainerClass {
    /// Hyper-rectangle regions with constant local classifiers.
    RectConstant,
    /// Ball regions with linear local classifiers.
    BallLinear,
    Other,
}

/// Maps `(f, x)` to a local explanation at `x`. Implementations must be
/// deterministic: the same query always yields the same explanation.
pub trait Explainer: Send + Sync {
    fn explain(&self, f: &dyn Classifier, x: &Point) -> Result<LocalExplanation>;
    fn class_tag(&self) -> ExplainerClass;
}

/// How a [`PartitionExplainer`] picks the constant classifier of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantRule {
    Fixed(Label),
    /// Predict `f(x)` everywhere in the cell, as Anchors does.
    AgreeWithAnchor,
    /// Predict `-f(x)`; a deliberately bad explainer.
    DisagreeWithAnchor,
}

impl ConstantRule {
    fn label(self, f: &dyn Classifier, x: &Point) -> Label {
        match self {
            ConstantRule::Fixed(l) => l,
            ConstantRule::AgreeWithAnchor => f.classify(x),
            ConstantRule::DisagreeWithAnchor => f.classify(x).flip(),
        }
    }
}

/// Explains every point by the cell of a fixed rectangle partition that
/// contains it.
#[derive(Debug, Clone)]
pub struct PartitionExplainer {
    cells: Vec<HyperRectangle>,
    rule: ConstantRule,
}

impl PartitionExplainer {
    pub fn new(cells: Vec<HyperRectangle>, rule: ConstantRule) -> Result<Self> {
        let Some(first) = cells.first() else {
            return Err(Error::InvalidGeometry("partition needs at least one cell".into()));
        };
        let d = first.dim();
        if let Some(c) = cells.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
        }
        Ok(PartitionExplainer { cells, rule })
    }

    /// `cells` equal slabs of `support` along `axis`, in coordinate order.
    pub fn slabs(support: &HyperRectangle, axis: usize, cells: usize, rule: ConstantRule) -> Result<Self> {
        if cells == 0 || axis >= support.dim() {
            return Err(Error::InvalidGeometry("need >= 1 slab on a valid axis".into()));
        }
        let (lo, hi) = (support.lo()[axis], support.hi()[axis]);
        let step = (hi - lo) / cells as f64;
        let bounds: Vec<f64> =
            (0..=cells).map(|i| if i == cells { hi } else { lo + step * i as f64 }).collect();
        let cells = bounds
            .windows(2)
            .map(|w| support.with_axis(axis, w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        PartitionExplainer::new(cells, rule)
    }

    pub fn cells(&self) -> &[HyperRectangle] {
        &self.cells
    }

    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(x))
    }
}

impl Explainer for PartitionExplainer {
    fn explain(&self, f: &dyn Classifier, x: &Point) -> Result<LocalExplanation> {
        let i = self.cell_of(x).ok_or(Error::NotCovered)?;
        let local = LocalClassifier::Constant(self.rule.label(f, x));
        LocalExplanation::new(x.clone(), Region::Rectangle(self.cells[i].clone()), local)
    }

    fn class_tag(&self) -> ExplainerClass {
        ExplainerClass::RectConstant
    }
}

/// Gradient-style explainer: a ball of fixed radius centred at the query
/// point with a linear local classifier.
#[derive(Debug, Clone)]
pub struct BallExplainer {
    radius: f64,
    w: Vec<f64>,
    offset: BallOffset,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BallOffset {
    /// Hyperplane pushed outside the ball so the whole ball gets `f(x)`.
    AgreeWithAnchor,
    /// Hyperplane through the anchor.
    ThroughAnchor,
}

impl BallExplainer {
    /// Linear local classifier that is constant (= `f(x)`) on the ball.
    pub fn agreeing(radius: f64, w: Vec<f64>) -> Result<Self> {
        BallExplainer::build(radius, w, BallOffset::AgreeWithAnchor)
    }

    /// Linear local classifier whose boundary passes through the anchor.
    pub fn through_anchor(radius: f64, w: Vec<f64>) -> Result<Self> {
        BallExplainer::build(radius, w, BallOffset::ThroughAnchor)
    }

    fn build(radius: f64, w: Vec<f64>, offset: BallOffset) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGeometry(format!("invalid radius {radius}")));
        }
        let n = geometry::norm(&w);
        if !(n > 0.0) {
            return Err(Error::InvalidGeometry("direction must be nonzero".into()));
        }
        Ok(BallExplainer { radius, w: w.into_iter().map(|v| v / n).collect(), offset })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Explainer for BallExplainer {
    fn explain(&self, f: &dyn Classifier, x: &Point) -> Result<LocalExplanation> {
        x.check_dim(self.w.len())?;
        let proj = x.dot(&self.w);
        let b = match self.offset {
            BallOffset::ThroughAnchor => proj,
            BallOffset::AgreeWithAnchor => match f.classify(x) {
                Label::Pos => proj - self.radius - 1.0,
                Label::Neg => proj + self.radius + 1.0,
            },
        };
        let ball = Ball::new(x.clone(), self.radius)?;
        let local = LocalClassifier::Linear { w: self.w.clone(), b };
        LocalExplanation::new(x.clone(), Region::Ball(ball), local)
    }

    fn class_tag(&self) -> ExplainerClass {
        ExplainerClass::BallLinear
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linear_tie_goes_positive() {
        let g = LocalClassifier::linear(vec![0.6, 0.8], 1.0).unwrap();
        // <w, z> = 0.6 * 1 + 0.8 * 0.5 = 1.0 exactly
        assert_eq!(g.predict(&p(&[1.0, 0.5])), Label::Pos);
        assert_eq!(g.predict(&p(&[1.0, 0.49])), Label::Neg);
    }

    #[test]
    fn linear_requires_unit_norm() {
        assert!(LocalClassifier::linear(vec![1.0, 1.0], 0.0).is_err());
        let g = LocalClassifier::linear_normalized(vec![3.0, 4.0], 5.0).unwrap();
        match g {
            LocalClassifier::Linear { w, b } => {
                assert!((w[0] - 0.6).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn explanation_anchor_must_be_inside() {
        let r = Region::Rectangle(HyperRectangle::unit(1));
        let g = LocalClassifier::Constant(Label::Pos);
        assert!(LocalExplanation::new(p(&[0.5]), r.clone(), g.clone()).is_ok());
        assert!(LocalExplanation::new(p(&[1.5]), r, g).is_err());
    }

    #[test]
    fn partition_explainer_is_deterministic_and_anchored() {
        let e = PartitionExplainer::slabs(&HyperRectangle::unit(2), 0, 4, ConstantRule::AgreeWithAnchor)
            .unwrap();
        let f = |x: &Point| Label::from_sign(x[1] > 0.5);
        let x = p(&[0.3, 0.7]);
        let a = e.explain(&f, &x).unwrap();
        let b = e.explain(&f, &x).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.anchor(), &x);
        assert_eq!(a.local(), &LocalClassifier::Constant(Label::Pos));
        assert_eq!(e.class_tag(), ExplainerClass::RectConstant);
        assert!(matches!(e.explain(&f, &p(&[1.5, 0.5])), Err(Error::NotCovered)));
    }

    #[test]
    fn agreeing_ball_explainer_is_constant_on_ball() {
        let e = BallExplainer::agreeing(0.5, vec![1.0, 1.0]).unwrap();
        let f = |_: &Point| Label::Neg;
        let x = p(&[0.2, 0.1]);
        let ex = e.explain(&f, &x).unwrap();
        for z in [[0.2, 0.6], [-0.3, 0.1], [0.55, 0.45]] {
            let z = p(&z);
            assert!(ex.region().contains(&z));
            assert_eq!(ex.local().predict(&z), Label::Neg);
        }
    }
}
