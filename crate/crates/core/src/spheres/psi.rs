//! Spherical-cap mass fractions.
//!
//! On the unit sphere in `R^d`, the cap of angular radius `theta` around any
//! axis holds the fraction `Psi(theta) = I_n(theta) / I_n(pi)` of the surface,
//! where `I_n(theta) = int_0^theta sin^n(phi) dphi` and `n = d - 2`.

use std::f64::consts::{FRAC_PI_2, PI};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// 15-point Kronrod estimate and its embedded 7-point Gauss estimate.
fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, g * h)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, depth: u32) -> f64 {
    let (k, g) = gauss_kronrod(f, a, b);
    if depth == 0 || (k - g).abs() <= rel * k.abs() || (k - g).abs() < f64::MIN_POSITIVE {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, rel, depth - 1) + adaptive(f, m, b, rel, depth - 1)
}

/// `int_a^b sin^n(phi) dphi` for `0 <= a <= b <= pi`, to relative accuracy
/// about `1e-14`.
pub fn sin_power_integral(n: u32, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    if n == 0 {
        return b - a;
    }
    adaptive(&|x: f64| x.sin().powi(n as i32), a, b, 1e-14, 40)
}

/// One-panel 15-point rule; accurate on panels where `sin^n` is smooth
/// relative to the panel width.
pub(crate) fn sin_power_panel(n: u32, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    gauss_kronrod(&|x: f64| x.sin().powi(n as i32), a, b).0
}

/// `int_0^pi sin^n(phi) dphi` by the Wallis recursion.
pub fn wallis(n: u32) -> f64 {
    let (mut z, start) = if n & 1 == 0 { (PI, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        z *= (k - 1) as f64 / k as f64;
        k += 2;
    }
    z
}

/// Fraction of the sphere in `R^d` covered by a cap of angle `theta`.
pub fn psi(theta: f64, d: usize) -> f64 {
    assert!(d >= 2, "caps need d >= 2");
    let theta = theta.clamp(0.0, PI);
    let n = (d - 2) as u32;
    let z = wallis(n);
    if theta <= FRAC_PI_2 {
        (sin_power_integral(n, 0.0, theta) / z).clamp(0.0, 1.0)
    } else {
        (1.0 - sin_power_integral(n, 0.0, PI - theta) / z).clamp(0.0, 1.0)
    }
}
