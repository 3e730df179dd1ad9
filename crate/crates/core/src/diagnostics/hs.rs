//! Helffer–Sjöstrand bound for linear statistics of a signed measure.
//!
//! With `f̃(x + iy) = (f(x) + iy f'(x))χ(y)` and `m̄` the Stieltjes transform of
//! `ρ̄`,
//!
//! `∫f dρ̄ = (1/2π)∬ y f''(x) χ(y) Im m̄ − (1/2π) Re ∬ i(f + iyf')χ'(y) m̄`,
//!
//! so `|∫f dρ̄|` is at most the sum of the absolute first term and the second
//! term with absolute values taken inside.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fourier::SignedGridMeasure;
use super::statistic::LinearStatistic;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;

/// Even cutoff equal to 1 on `|y| ≤ D/2` and 0 on `|y| ≥ D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothCutoff {
    pub d: f64,
}

impl SmoothCutoff {
    /// `(ψ, ψ')` of the smooth step from 0 at `t = 0` to 1 at `t = 1`.
    fn step(t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        if t >= 1.0 {
            return (1.0, 0.0);
        }
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        let psi = a / (a + b);
        let dpsi = a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b));
        (psi, dpsi)
    }

    /// `(χ(y), χ'(y))`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let half = 0.5 * self.d;
        let (psi, dpsi) = Self::step((y.abs() - half) / half);
        (1.0 - psi, -dpsi / half * y.signum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Signed right-hand side of the identity; equals `∫f dρ̄` up to quadrature error.
    pub identity: f64,
    pub holds: bool,
}

/// Panels in `x` over the support of `f` and levels of the graded `y` rule.
const X_PANELS: usize = 48;
const Y_LEVELS: usize = 28;

/// Checks `lhs ≤ rhs·(1 + 1e−6)` for `f` with compact support and the
/// cutoff `χ`. Integrals over `y` use the symmetry `m̄(z̄) = conj m̄(z)`.
pub fn hs_bound_check(f: &LinearStatistic, rho: &SignedGridMeasure, chi: SmoothCutoff) -> Result<HsCheck> {
    let (a, b) = f
        .support()
        .ok_or_else(|| Error::InvalidArgument("test function must have compact support".into()))?;
    if !(chi.d > 0.0) {
        return Err(Error::InvalidArgument("cutoff width must be positive".into()));
    }
    let lhs_signed = rho.integrate(|x| f.value(x));
    let rule = gauss_legendre(12);
    // Panel breaks at cell edges, where Im m̄ jumps as y → 0.
    let mut breaks = vec![a, b];
    for &c in &rho.centres {
        for e in [c - rho.half_width, c + rho.half_width] {
            if a < e && e < b {
                breaks.push(e);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let max_len = (b - a) / X_PANELS as f64;
    let xs: Vec<(f64, f64, f64, f64, f64)> = breaks
        .windows(2)
        .flat_map(|w| {
            let k = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / k as f64;
            (0..k)
                .flat_map(|p| rule.mapped(w[0] + p as f64 * h, w[0] + (p + 1) as f64 * h).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        })
        .map(|(x, w)| {
            let (h, h1, h2) = f.derivatives(x);
            (x, w, h, h1, h2)
        })
        .collect();

    // First term on 0 < y ≤ D, graded toward the real axis.
    let mut first = 0.0;
    let mut hi = chi.d;
    for _ in 0..Y_LEVELS {
        let lo = 0.5 * hi;
        for (y, wy) in rule.mapped(lo, hi) {
            let c = chi.eval(y).0;
            if c == 0.0 {
                continue;
            }
            for &(x, wx, _, _, h2) in &xs {
                if h2 != 0.0 {
                    first += wx * wy * y * h2 * c * rho.stieltjes(Complex64::new(x, y)).im;
                }
            }
        }
        hi = lo;
    }
    first *= 2.0;

    // Second term on D/2 ≤ y ≤ D, where χ' lives.
    let (mut second_signed, mut second_abs) = (0.0, 0.0);
    let panels = 4;
    let hy = 0.5 * chi.d / panels as f64;
    for p in 0..panels {
        let y0 = 0.5 * chi.d + p as f64 * hy;
        for (y, wy) in rule.mapped(y0, y0 + hy) {
            let dc = chi.eval(y).1;
            for &(x, wx, h, h1, _) in &xs {
                let m = rho.stieltjes(Complex64::new(x, y));
                let term = Complex64::new(0.0, 1.0) * Complex64::new(h, y * h1) * dc * m;
                second_signed += wx * wy * term.re;
                second_abs += wx * wy * (h.abs() + y * h1.abs()) * dc.abs() * m.norm();
            }
        }
    }
    let (second_signed, second_abs) = (2.0 * second_signed, 2.0 * second_abs);

    let lhs = lhs_signed.abs();
    let rhs = (first.abs() + second_abs) / (2.0 * PI);
    Ok(HsCheck {
        lhs,
        rhs,
        identity: (first - second_signed) / (2.0 * PI),
        holds: lhs <= rhs * (1.0 + 1e-6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cutoff_shape() {
        let chi = SmoothCutoff { d: 2.0 };
        assert_eq!(chi.eval(0.3), (1.0, 0.0));
        assert_eq!(chi.eval(-2.5), (0.0, 0.0));
        let (c, dc) = chi.eval(1.5);
        assert!((c - 0.5).abs() < 1e-15 && dc < 0.0);
        let e = 1e-6;
        let fd = (chi.eval(1.3 + e).0 - chi.eval(1.3 - e).0) / (2.0 * e);
        assert!((fd - chi.eval(1.3).1).abs() < 1e-7);
    }

    #[test]
    fn identity_reproduces_the_integral() {
        let rho = SignedGridMeasure::from_density(-1.0, 1.0, 10, |x| x - 0.3 * x * x).unwrap();
        let f = LinearStatistic::Bump { centre: 0.2, radius: 0.7, amplitude: 1.0 };
        let c = hs_bound_check(&f, &rho, SmoothCutoff { d: 1.0 }).unwrap();
        let exact = rho.integrate(|x| f.value(x));
        assert!((c.identity - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{} vs {exact}", c.identity);
        assert!(c.holds);
    }

    #[test]
    fn zero_measure_gives_zero_both_sides() {
        let rho = SignedGridMeasure::new(vec![0.0, 0.5], vec![0.0, 0.0], 0.25).unwrap();
        let f = LinearStatistic::Bump { centre: 0.0, radius: 1.0, amplitude: 1.0 };
        let c = hs_bound_check(&f, &rho, SmoothCutoff { d: 1.0 }).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.holds);
    }

    #[test]
    fn cancelling_bumps_under_a_wide_test_function() {
        let narrow = |c: f64| move |x: f64| (1.0 - ((x - c) / 0.05).powi(2)).max(0.0);
        let (p, q) = (narrow(-0.2), narrow(0.2));
        let rho = SignedGridMeasure::from_density(-0.4, 0.4, 80, |x| p(x) - q(x)).unwrap();
        let f = LinearStatistic::Bump { centre: 0.0, radius: 3.0, amplitude: 1.0 };
        let c = hs_bound_check(&f, &rho, SmoothCutoff { d: 1.0 }).unwrap();
        assert!(c.lhs < 1e-3 * c.rhs, "{c:?}");
        assert!(c.holds);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bound_holds_for_random_data(
            w in prop::collection::vec(-1.0f64..1.0, 8),
            centre in -0.8f64..0.8,
            radius in 0.2f64..1.0,
            d in 0.3f64..2.0,
        ) {
            let rho = SignedGridMeasure::new(
                (0..8).map(|j| -0.875 + 0.25 * j as f64).collect(),
                w,
                0.125,
            ).unwrap();
            let f = LinearStatistic::Bump { centre, radius, amplitude: 1.0 };
            let c = hs_bound_check(&f, &rho, SmoothCutoff { d }).unwrap();
            prop_assert!(c.holds, "{c:?}");
        }
    }
}
