use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss–Chebyshev (first kind) rule of order `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub order: usize,
    /// `δ_m = cos((2m − 1)π / 2M)`, `m = 1..M`.
    pub nodes: Vec<T>,
    /// `√(1 − δ_m²)`, which undoes the Chebyshev weight for plain integrals.
    pub weight_factor: Vec<T>,
}

pub fn chebyshev_rule<T: Real>(order: usize) -> Result<QuadratureRule<T>> {
    if order == 0 {
        return Err(Error::InvalidParams("quadrature order must be >= 1".into()));
    }
    let m = T::lit(order as f64);
    let mut nodes = Vec::with_capacity(order);
    let mut weight_factor = Vec::with_capacity(order);
    for k in 1..=order {
        let angle = T::lit((2 * k - 1) as f64) * T::PI() / (T::two() * m);
        nodes.push(angle.cos());
        // sin(angle) equals √(1 − cos²) without the cancellation near ±1
        weight_factor.push(angle.sin());
    }
    Ok(QuadratureRule {
        order,
        nodes,
        weight_factor,
    })
}

impl<T: Real> QuadratureRule<T> {
    /// `(π/M) Σ f(δ_m)`, the rule for `∫₋₁¹ f(x) / √(1 − x²) dx`.
    pub fn weighted_sum<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        let sum: T = self.nodes.iter().map(|&x| f(x)).sum();
        T::PI() / T::lit(self.order as f64) * sum
    }

    /// Approximates `∫ₐᵇ f(u) du` via `u = a + (b − a)(δ + 1)/2`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::half();
        let sum: T = self
            .nodes
            .iter()
            .zip(&self.weight_factor)
            .map(|(&d, &w)| w * f(a + half * (d + T::one())))
            .sum();
        half * T::PI() / T::lit(self.order as f64) * sum
    }
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let center = (a + b) * T::half();
    let half = (b - a) * T::half();
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(center - dx) + f(center + dx);
        kronrod = kronrod + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration over consecutive `breakpoints`.
///
/// Subintervals are bisected until the summed error estimate falls below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive<T: Real, F: FnMut(T) -> T>(mut f: F, breakpoints: &[T], abs_tol: T, rel_tol: T) -> Result<T> {
    const MAX_INTERVALS: usize = 5_000;
    if breakpoints.len() < 2 {
        return Err(Error::InvalidParams("need at least two breakpoints".into()));
    }
    let mut intervals: Vec<(T, T, T, T)> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = kronrod15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total: T = intervals.iter().map(|iv| iv.2).sum();
        let err: T = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::NoConvergence {
                routine: "integrate_adaptive",
                iterations: intervals.len(),
            });
        }
        let (idx, _) = intervals.iter().enumerate().fold(
            (0, T::zero()),
            |best, (i, iv)| if iv.3 > best.1 { (i, iv.3) } else { best },
        );
        let (a, b, _, _) = intervals.swap_remove(idx);
        let mid = (a + b) * T::half();
        if !(mid > a && mid < b) {
            // interval collapsed to machine resolution
            return Ok(total);
        }
        let (v1, e1) = kronrod15(&mut f, a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, b);
        intervals.push((a, mid, v1, e1));
        intervals.push((mid, b, v2, e2));
    }
}
