//! Two lists of probabilities whose first `2m - 1` power sums agree.
//!
//! The `p` offsets are the roots of `P_l(x) = prod_{o odd, |o| < 4l} (x - o)`
//! and the `q` offsets the roots of `Q_l(x) = P_l(x) - P_l(0)`. Both
//! polynomials share every coefficient except the constant one, so by Newton's
//! identities their root power sums agree up to order `4l - 1`.

use num_bigint::{BigInt, Sign};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::exact;

/// Largest relative power-sum residual accepted for orders below `2m`.
pub const RESIDUAL_BUDGET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentMatchedProbs {
    #[serde(with = "exact::f64_str")]
    pub gamma: f64,
    #[serde(with = "exact::f64_str")]
    pub eps1: f64,
    #[serde(with = "exact::f64_str")]
    pub eps2: f64,
    pub l: usize,
    pub m: usize,
    #[serde(with = "exact::f64_str")]
    pub eps: f64,
    /// `gamma (1 + 2 eps1)`: the value at which `q` has its double entry.
    #[serde(with = "exact::f64_str")]
    pub center: f64,
    /// `2 gamma eps`: maps offsets to probabilities.
    #[serde(with = "exact::f64_str")]
    pub scale: f64,
    #[serde(with = "exact::vec_f64_str")]
    pub p_offsets: Vec<f64>,
    #[serde(with = "exact::vec_f64_str")]
    pub q_offsets: Vec<f64>,
    #[serde(with = "exact::vec_f64_str")]
    pub p: Vec<f64>,
    #[serde(with = "exact::vec_f64_str")]
    pub q: Vec<f64>,
}

/// `{±1, ±3, ..., ±(4l - 1)}` in increasing order.
pub fn p_offsets(l: usize) -> Vec<f64> {
    let pos: Vec<f64> = (0..2 * l).map(|i| (2 * i + 1) as f64).collect();
    pos.iter().rev().map(|v| -v).chain(pos.iter().copied()).collect()
}

/// `ln P_l(0) = 2 sum ln(2i - 1)`.
fn ln_p0(l: usize) -> f64 {
    (1..=2 * l).map(|i| 2.0 * ((2 * i - 1) as f64).ln()).sum()
}

/// Sign of `Q_l(x)` for `x > 0`.
fn q_sign(l: usize, x: f64, lnp0: f64) -> i8 {
    let mut negatives = 0;
    let mut log_abs = 0.0;
    for i in 1..=2 * l {
        let o = (2 * i - 1) as f64;
        let t = (x - o) * (x + o);
        if t == 0.0 {
            return -1;
        }
        if t < 0.0 {
            negatives += 1;
        }
        log_abs += t.abs().ln();
    }
    if negatives % 2 == 1 {
        return -1;
    }
    let d = log_abs - lnp0;
    if d.abs() > 1e-10 || l > 16 {
        return if d > 0.0 { 1 } else if d < 0.0 { -1 } else { 0 };
    }
    exact_q_sign(l, x)
}

/// Exact sign of `Q_l(x)` with big-integer arithmetic, writing `x = M / 2^e`.
fn exact_q_sign(l: usize, x: f64) -> i8 {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
    let (m, e) = if exp >= 0 { (BigInt::from(mant) << exp as usize, 0usize) } else { (BigInt::from(mant), (-exp) as usize) };
    let m2 = &m * &m;
    let mut px = BigInt::from(1u8);
    let mut p0 = BigInt::from(1u8);
    for i in 1..=2 * l {
        let o2 = BigInt::from(((2 * i - 1) * (2 * i - 1)) as u64);
        px *= &m2 - (&o2 << (2 * e));
        p0 *= &o2;
    }
    let diff = px - (p0 << (4 * l * e));
    match diff.sign() {
        Sign::Plus => 1,
        Sign::Minus => -1,
        Sign::NoSign => 0,
    }
}

fn bisect(l: usize, mut a: f64, mut b: f64, lnp0: f64) -> Result<f64> {
    let (sa, sb) = (q_sign(l, a, lnp0), q_sign(l, b, lnp0));
    if sa == 0 {
        return Ok(a);
    }
    if sb == 0 {
        return Ok(b);
    }
    if sa == sb {
        return Err(Error::Numerical(format!("Q_{l} does not change sign on ({a}, {b})")));
    }
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let s = q_sign(l, mid, lnp0);
        if s == 0 {
            return Ok(mid);
        }
        if s == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// The `4l` roots of `Q_l` in increasing order, including the double root
/// at zero.
pub fn q_offsets(l: usize) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::param("l >= 1"));
    }
    let lnp0 = ln_p0(l);
    let mut pos = Vec::with_capacity(2 * l - 1);
    for i in 1..l {
        let c = (4 * i) as f64;
        pos.push(bisect(l, c - 1.0, c, lnp0)?);
        pos.push(bisect(l, c, c + 1.0, lnp0)?);
    }
    let c = (4 * l) as f64;
    pos.push(bisect(l, c - 1.0, c, lnp0)?);
    Ok(pos.iter().rev().map(|v| -v).chain([0.0, 0.0]).chain(pos.iter().copied()).collect())
}

/// `l` for the given tolerances: the largest integer strictly below
/// `1 / (8 max(2 eps1, eps2))`.
pub fn order_for(eps1: f64, eps2: f64) -> usize {
    let x = 1.0 / (8.0 * (2.0 * eps1).max(eps2));
    let c = x.ceil();
    (c as usize).saturating_sub(1)
}

fn power_sum(v: &[f64], t: u32) -> f64 {
    v.iter().map(|x| x.powi(t as i32)).sum()
}

/// Power sums of `a` and `b` after dividing both by a common scale, so high
/// orders neither underflow nor overflow.
fn scaled_power_sums(a: &[f64], b: &[f64], t: u32) -> (f64, f64) {
    let (sa, sb, _) = scaled_power_sums_with_scale(a, b, t);
    (sa, sb)
}

fn scaled_power_sums_with_scale(a: &[f64], b: &[f64], t: u32) -> (f64, f64, f64) {
    let s = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    let sa = a.iter().map(|x| (x / s).powi(t as i32)).sum();
    let sb = b.iter().map(|x| (x / s).powi(t as i32)).sum();
    (sa, sb, s)
}

/// Relative power-sum gap `|sum a^t - sum b^t| / max(1, sum a^t)`.
pub fn relative_residual(a: &[f64], b: &[f64], t: u32) -> f64 {
    let sa = power_sum(a, t);
    (sa - power_sum(b, t)).abs() / sa.abs().max(1.0)
}

/// Outcome of checking the four defining conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConditions {
    /// `|sum p^t - sum q^t| / sum p^t` for `t = 0..2m-1`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Gap at `t = 2m`, normalised by `max(1, sum p^t)`.
    pub residual_at_2m: f64,
    /// Gap at `t = 2m` relative to `sum p^t`.
    pub relative_gap_at_2m: f64,
    /// `(sum rho^2m - sum sigma^2m) / (-2m P_l(0))`, which should be 1.
    pub offset_gap_ratio: f64,
    pub powers_match: bool,
    pub straddles_threshold: bool,
    pub double_center: bool,
    pub order_in_range: bool,
    pub in_unit_interval: bool,
}

impl MomentConditions {
    pub fn all_hold(&self) -> bool {
        self.powers_match && self.straddles_threshold && self.double_center && self.order_in_range && self.in_unit_interval
    }
}

impl MomentMatchedProbs {
    /// Sorted `p` if `positive_world` else sorted `q`.
    pub fn values(&self, positive_world: bool) -> &[f64] {
        if positive_world {
            &self.p
        } else {
            &self.q
        }
    }

    pub fn conditions(&self) -> MomentConditions {
        let two_m = 2 * self.m;
        let residuals: Vec<f64> = (0..two_m as u32)
            .map(|t| {
                let (sp, sq) = scaled_power_sums(&self.p, &self.q, t);
                (sp - sq).abs() / sp
            })
            .collect();
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        let t = two_m as u32;
        let sp = power_sum(&self.p, t);
        let gap = (sp - power_sum(&self.q, t)).abs();
        let (srel, qrel) = scaled_power_sums(&self.p, &self.q, t);
        let (so, qo, top) = scaled_power_sums_with_scale(&self.p_offsets, &self.q_offsets, t);
        let predicted = -(two_m as f64) * (ln_p0(self.l) - t as f64 * top.ln()).exp();
        let (g, e1, e2, m) = (self.gamma, self.eps1, self.eps2, self.m as f64);
        let eps_max = (2.0 * e1).max(e2);
        MomentConditions {
            max_residual,
            residuals,
            residual_at_2m: gap / sp.max(1.0),
            relative_gap_at_2m: (srel - qrel).abs() / srel,
            offset_gap_ratio: (so - qo) / predicted,
            powers_match: max_residual <= RESIDUAL_BUDGET,
            straddles_threshold: self.p[self.m - 1] < g * (1.0 - 2.0 * e1)
                && g * (1.0 - 2.0 * e1) < g * (1.0 + 2.0 * e1)
                && g * (1.0 + 2.0 * e1) < self.p[self.m],
            double_center: (self.q[self.m - 1] - self.center).abs() <= 1e-12
                && (self.q[self.m] - self.center).abs() <= 1e-12,
            order_in_range: 1.0 / (4.0 * e2) >= m && m >= 1.0 / (8.0 * eps_max) + 1.0,
            in_unit_interval: self.p.iter().chain(&self.q).all(|v| (0.0..=1.0).contains(v)),
        }
    }
}

/// Builds the two probability lists for `gamma (1 + 2 eps1)`-centred
/// threshold tests.
pub fn moment_matched_probs(gamma: f64, eps1: f64, eps2: f64) -> Result<MomentMatchedProbs> {
    let cap = 1.0 / 48.0;
    for (name, v) in [("γ", gamma), ("ε₁", eps1), ("ε₂", eps2)] {
        if !(v > 0.0 && v < cap) {
            return Err(Error::param(format!("0 < {name} < 1/48")));
        }
    }
    let l = order_for(eps1, eps2);
    let eps = 1.0 / (8 * l) as f64;
    let center = gamma * (1.0 + 2.0 * eps1);
    let scale = 2.0 * gamma * eps;
    let p_off = p_offsets(l);
    let q_off = q_offsets(l)?;
    let p = p_off.iter().map(|o| center + scale * o).collect();
    let q = q_off.iter().map(|o| if *o == 0.0 { center } else { center + scale * o }).collect();
    let probs = MomentMatchedProbs {
        gamma,
        eps1,
        eps2,
        l,
        m: 2 * l,
        eps,
        center,
        scale,
        p_offsets: p_off,
        q_offsets: q_off,
        p,
        q,
    };
    let c = probs.conditions();
    if !c.powers_match {
        return Err(Error::Numerical(format!("power-sum residual {} exceeds {RESIDUAL_BUDGET}", c.max_residual)));
    }
    if !c.straddles_threshold {
        return Err(Error::Numerical("p_m < γ(1-2ε₁) < γ(1+2ε₁) < p_(m+1) violated".into()));
    }
    if !(c.double_center && c.order_in_range && c.in_unit_interval) {
        return Err(Error::Numerical("moment-matched construction violates its defining conditions".into()));
    }
    Ok(probs)
}
