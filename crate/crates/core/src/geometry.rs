//! Points, half-open hyper-rectangles and closed L2 balls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "exact::Coords", into = "exact::Coords")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidGeometry("point must have dimension >= 1".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry(format!("coordinate {i} is not finite")));
        }
        Ok(Point(coords))
    }

    /// Builds a point without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        dot(&self.0, w)
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got: self.dim() })
        }
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Product of half-open intervals `(lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RectRepr", into = "RectRepr")]
pub struct HyperRectangle {
    lo: Point,
    hi: Point,
}

#[derive(Serialize, Deserialize)]
struct RectRepr {
    lo: Point,
    hi: Point,
}

impl TryFrom<RectRepr> for HyperRectangle {
    type Error = Error;
    fn try_from(r: RectRepr) -> Result<Self> {
        HyperRectangle::new(r.lo, r.hi)
    }
}

impl From<HyperRectangle> for RectRepr {
    fn from(r: HyperRectangle) -> Self {
        RectRepr { lo: r.lo, hi: r.hi }
    }
}

impl HyperRectangle {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        hi.check_dim(lo.dim())?;
        for i in 0..lo.dim() {
            if !(lo[i] < hi[i]) {
                return Err(Error::InvalidGeometry(format!(
                    "empty interval on axis {i}: ({}, {}]",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(HyperRectangle { lo, hi })
    }

    pub fn from_bounds(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        HyperRectangle::new(Point::new(lo)?, Point::new(hi)?)
    }

    /// The unit cube `(0, 1]^d`.
    pub fn unit(dim: usize) -> Self {
        HyperRectangle { lo: Point(vec![0.0; dim]), hi: Point(vec![1.0; dim]) }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    /// Half-open membership: `lo_i < x_i <= hi_i` on every axis.
    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i] < x[i] && x[i] <= self.hi[i])
    }

    /// Splits at `at` along `axis` into `(lo, at]` and `(at, hi]`.
    pub fn split(&self, axis: usize, at: f64) -> Result<(HyperRectangle, HyperRectangle)> {
        if axis >= self.dim() {
            return Err(Error::InvalidGeometry(format!("axis {axis} out of range")));
        }
        if !(self.lo[axis] < at && at < self.hi[axis]) {
            return Err(Error::InvalidGeometry(format!(
                "split point {at} not strictly inside ({}, {}]",
                self.lo[axis], self.hi[axis]
            )));
        }
        let mut left_hi = self.hi.0.clone();
        left_hi[axis] = at;
        let mut right_lo = self.lo.0.clone();
        right_lo[axis] = at;
        Ok((
            HyperRectangle { lo: self.lo.clone(), hi: Point(left_hi) },
            HyperRectangle { lo: Point(right_lo), hi: self.hi.clone() },
        ))
    }

    /// Copy with the bounds of one axis replaced.
    pub fn with_axis(&self, axis: usize, lo: f64, hi: f64) -> Result<HyperRectangle> {
        let mut l = self.lo.0.clone();
        let mut h = self.hi.0.clone();
        l[axis] = lo;
        h[axis] = hi;
        HyperRectangle::from_bounds(l, h)
    }
}

/// Closed ball `{x : ||x - center|| <= radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Point,
    #[serde(with = "exact::f64_str")]
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGeometry(format!("invalid radius {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.dim() && self.center.distance(x) <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Rectangle(HyperRectangle),
    Ball(Ball),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Rectangle(r) => r.dim(),
            Region::Ball(b) => b.dim(),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Region::Rectangle(r) => r.contains(x),
            Region::Ball(b) => b.contains(x),
        }
    }

    /// Bit patterns of every defining number; equal keys mean equal regions.
    pub(crate) fn key(&self, out: &mut Vec<u64>) {
        match self {
            Region::Rectangle(r) => {
                out.push(0);
                out.extend(r.lo.0.iter().chain(&r.hi.0).map(|v| v.to_bits()));
            }
            Region::Ball(b) => {
                out.push(1);
                out.extend(b.center.0.iter().map(|v| v.to_bits()));
                out.push(b.radius.to_bits());
            }
        }
    }
}

impl From<HyperRectangle> for Region {
    fn from(r: HyperRectangle) -> Self {
        Region::Rectangle(r)
    }
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

/// Decimal-string encoding of floats. Rust prints the shortest string that
/// parses back to the same bits, so records replay exactly.
pub mod exact {
    use serde::{Deserialize, Serialize};

    use super::Point;
    use crate::error::Error;

    #[derive(Serialize, Deserialize)]
    #[serde(transparent)]
    pub(crate) struct Coords(#[serde(with = "vec_f64_str")] Vec<f64>);

    impl TryFrom<Coords> for Point {
        type Error = Error;
        fn try_from(c: Coords) -> Result<Self, Error> {
            Point::new(c.0)
        }
    }

    impl From<Point> for Coords {
        fn from(p: Point) -> Self {
            Coords(p.0)
        }
    }

    pub fn to_string(v: f64) -> String {
        format!("{v:?}")
    }

    pub fn parse(s: &str) -> Result<f64, String> {
        s.parse::<f64>().map_err(|e| format!("bad float {s:?}: {e}"))
    }

    pub mod f64_str {
        use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(&super::to_string(*v))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            let s = String::deserialize(d)?;
            super::parse(&s).map_err(D::Error::custom)
        }
    }

    pub mod vec_f64_str {
        use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&super::to_string(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter().map(|s| super::parse(s).map_err(D::Error::custom)).collect()
        }
    }
}
