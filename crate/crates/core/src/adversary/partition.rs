//! Mass-balanced axis-aligned partitions of a product distribution.

use serde::{Deserialize, Serialize};

use crate::distributions::{Marginal, ProductDistribution};
use crate::error::{Error, Result};
use crate::geometry::{exact, HyperRectangle, Point};

/// Mass left outside the partition when a marginal is unbounded.
pub const CLIP_MASS: f64 = 1e-9;

pub const PARTITION_VERSION: u32 = 1;

/// The axis along which the rectangle carries the most marginal mass. Ties
/// go to the lowest index.
pub fn widest_axis(dist: &ProductDistribution, r: &HyperRectangle) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..r.dim() {
        let w = dist.axis_mass(r, i);
        if w > best.1 {
            best = (i, w);
        }
    }
    best.0
}

/// Cuts a rectangle at the conditional median of its widest axis, so each
/// half carries half of the mass.
pub fn split_rectangle(dist: &ProductDistribution, r: &HyperRectangle) -> Result<(HyperRectangle, HyperRectangle)> {
    if dist.mass(r)? <= 0.0 {
        return Err(Error::ZeroMassRectangle);
    }
    let axis = widest_axis(dist, r);
    let at = dist.marginals()[axis].quantile_between(r.lo()[axis], r.hi()[axis], 0.5);
    r.split(axis, at).map_err(|_| Error::Numerical(format!("median of axis {axis} collapsed onto an edge")))
}

/// A top-level cell. Its sub-cells are `k` slabs of equal mass along
/// `slab_axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub rect: HyperRectangle,
    #[serde(with = "exact::f64_str")]
    pub mass: f64,
    pub slab_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Node {
    Leaf(usize),
    Split {
        axis: usize,
        #[serde(with = "exact::f64_str")]
        at: f64,
        left: usize,
        right: usize,
    },
}

/// Disjoint rectangles of mass in `[alpha, 4 alpha]` covering the support,
/// each cut into `k` equal-mass sub-cells.
///
/// Sub-cells are implicit: `k` is typically around `10^12`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub version: u32,
    #[serde(with = "exact::f64_str")]
    pub alpha: f64,
    pub k: u64,
    dist: ProductDistribution,
    support: HyperRectangle,
    cells: Vec<Cell>,
    nodes: Vec<Node>,
}

/// Splits every rectangle with mass above `4 alpha`, then divides each
/// resulting cell into `k` sub-cells.
pub fn build_partition(dist: &ProductDistribution, alpha: f64, k: u64) -> Result<PartitionSpec> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("0 < α < 1"));
    }
    if k == 0 {
        return Err(Error::param("K >= 1"));
    }
    let support = dist.support_box(CLIP_MASS);
    let mut spec = PartitionSpec {
        version: PARTITION_VERSION,
        alpha,
        k,
        dist: dist.clone(),
        support: support.clone(),
        cells: Vec::new(),
        nodes: Vec::new(),
    };
    let mass = dist.mass(&support)?;
    spec.grow(support, mass)?;
    Ok(spec)
}

impl PartitionSpec {
    fn grow(&mut self, r: HyperRectangle, mass: f64) -> Result<usize> {
        let id = self.nodes.len();
        if mass > 4.0 * self.alpha {
            let (a, b) = split_rectangle(&self.dist, &r)?;
            let axis = (0..r.dim()).find(|&i| a.hi()[i] != r.hi()[i]).expect("split changes one axis");
            let at = a.hi()[axis];
            self.nodes.push(Node::Leaf(usize::MAX));
            let (ma, mb) = (self.dist.mass(&a)?, self.dist.mass(&b)?);
            let left = self.grow(a, ma)?;
            let right = self.grow(b, mb)?;
            self.nodes[id] = Node::Split { axis, at, left, right };
        } else {
            if mass <= 0.0 {
                return Err(Error::ZeroMassRectangle);
            }
            let slab_axis = widest_axis(&self.dist, &r);
            self.nodes.push(Node::Leaf(self.cells.len()));
            self.cells.push(Cell { rect: r, mass, slab_axis });
        }
        Ok(id)
    }

    /// Same cells with a different sub-cell count.
    pub fn with_sub_cells(mut self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("K >= 1"));
        }
        self.k = k;
        Ok(self)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn distribution(&self) -> &ProductDistribution {
        &self.dist
    }

    pub fn support(&self) -> &HyperRectangle {
        &self.support
    }

    /// Total mass of the cells; below 1 only by the clipped tails.
    pub fn covered_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.mass).sum()
    }

    /// Index of the cell containing `x`.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        if x.dim() != self.support.dim() || !self.support.contains(x) {
            return None;
        }
        let mut node = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf(i) => return Some(i),
                Node::Split { axis, at, left, right } => node = if x[axis] <= at { left } else { right },
            }
        }
    }

    fn slab_marginal(&self, cell: usize) -> (Marginal, f64, f64) {
        let c = &self.cells[cell];
        let a = c.slab_axis;
        (self.dist.marginals()[a], c.rect.lo()[a], c.rect.hi()[a])
    }

    /// Index of the sub-cell of `cell` containing `x`; `x` must lie in the cell.
    pub fn sub_index(&self, cell: usize, x: &Point) -> u64 {
        let (m, lo, hi) = self.slab_marginal(cell);
        let t = m.mass(lo, x[self.cells[cell].slab_axis]) / m.mass(lo, hi);
        let j = (self.k as f64 * t).ceil() as u64;
        j.clamp(1, self.k) - 1
    }

    /// Cell and sub-cell containing `x`.
    pub fn locate_sub(&self, x: &Point) -> Option<(usize, u64)> {
        self.locate(x).map(|i| (i, self.sub_index(i, x)))
    }

    pub fn sub_mass(&self, cell: usize) -> f64 {
        self.cells[cell].mass / self.k as f64
    }

    /// Bounds of sub-cell `j` of `cell`.
    pub fn sub_rectangle(&self, cell: usize, j: u64) -> Result<HyperRectangle> {
        if j >= self.k {
            return Err(Error::param("sub-cell index < K"));
        }
        let (m, lo, hi) = self.slab_marginal(cell);
        let k = self.k as f64;
        let a = if j == 0 { lo } else { m.quantile_between(lo, hi, j as f64 / k) };
        let b = if j + 1 == self.k { hi } else { m.quantile_between(lo, hi, (j + 1) as f64 / k) };
        self.cells[cell].rect.with_axis(self.cells[cell].slab_axis, a, b)
    }
}

/// Sub-cell count that keeps every cell's realised loss within
/// `0.01 gamma min(eps1, eps2)` of its label probability, simultaneously over
/// `cells` cells with probability `1 - delta_c`.
pub fn choose_k(gamma: f64, eps1: f64, eps2: f64, delta_c: f64, cells: usize) -> Result<u64> {
    if !(delta_c > 0.0 && delta_c < 1.0) {
        return Err(Error::param("0 < δ_c < 1"));
    }
    if cells == 0 {
        return Err(Error::param("at least one cell"));
    }
    let slack = 0.01 * gamma * eps1.min(eps2);
    Ok(((2.0 * cells as f64 / delta_c).ln() / (2.0 * slack * slack)).ceil() as u64)
}
