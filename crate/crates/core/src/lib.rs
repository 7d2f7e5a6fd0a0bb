//! Auditing local explanations of black-box classifiers.
//!
//! The crate is organised around the data model of a *local explanation*: a
//! region around a query point paired with a simple classifier that is meant
//! to mimic the black box on that region. On top of it sit
//!
//! * [`measures`]: local loss, explainability loss, local mass and locality;
//! * [`distributions`]: data-distribution oracles with exact rectangle masses
//!   and conditional samplers;
//! * [`auditor`]: the two-sample `simple_audit` estimator, the accuracy
//!   interval an auditor must hit, and closed-form sample-size bounds;
//! * [`adversary`]: the randomized two-world classifier over a rectangle
//!   partition whose labels are moment matched, so that sparse samples carry
//!   no information about the world;
//! * [`spheres`]: the three-concentric-spheres example where ball-shaped
//!   linear explanations must trade local mass against local loss.

// Negated comparisons below are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod auditor;
pub mod distributions;
pub mod error;
pub mod explain;
pub mod geometry;
pub mod measures;
pub mod seed;
pub mod spheres;

pub use error::{Error, Result};
pub use explain::{
    BallExplainer, Classifier, ConstantRule, Explainer, ExplainerClass, Label, LocalClassifier,
    LocalExplanation, PartitionExplainer,
};
pub use geometry::{Ball, HyperRectangle, Point, Region};
pub use measures::{LossEstimate, LossProfile, MassEstimate};
