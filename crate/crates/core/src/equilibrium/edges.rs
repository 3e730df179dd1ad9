//! Square-root branch factors, the large-`z` expansion of `V'/∏√(…)`, and the
//! Newton solver for the support edges.
//!
//! With `s_j(z) = √(z−A_j)·√(z−B_j)` (principal roots) the product `∏ s_j`
//! is analytic off the cuts and behaves like `z^q` at infinity. On a cut the
//! same formula reproduces the sign convention used for the density
//! (`√(x−A)√(x−B) = −√(A−x)√(B−x)` left of a cut).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::grid::solve_dense;
use crate::error::{Error, Result};
use crate::potential::{horner, Potential};
use crate::quadrature::gauss_legendre;

/// One cut `[A, B]` of the support.
pub type Cut = (f64, f64);

/// `√(z−A)·√(z−B)` with principal square roots.
pub fn cut_factor(z: Complex64, a: f64, b: f64) -> Complex64 {
    (z - a).sqrt() * (z - b).sqrt()
}

/// Real-axis restriction of [`cut_factor`], exact about the sign of zero.
pub fn cut_factor_real(x: f64, a: f64, b: f64) -> Complex64 {
    if x >= b {
        Complex64::new(((x - a) * (x - b)).sqrt(), 0.0)
    } else if x <= a {
        Complex64::new(-((a - x) * (b - x)).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, ((x - a) * (b - x)).sqrt())
    }
}

pub fn branch_product(z: Complex64, cuts: &[Cut]) -> Complex64 {
    cuts.iter().map(|&(a, b)| cut_factor(z, a, b)).product()
}

pub fn branch_product_real(x: f64, cuts: &[Cut]) -> Complex64 {
    cuts.iter().map(|&(a, b)| cut_factor_real(x, a, b)).product()
}

/// Laurent expansion of `V'(ξ)/∏ s_j(ξ)` at infinity, truncated after `ξ^{−(q+1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LargeZExpansion {
    /// Coefficients of `ξ⁰, ξ¹, …` (the polynomial part).
    pub polynomial: Vec<f64>,
    /// Coefficients of `ξ^{−1}, …, ξ^{−(q+1)}`.
    pub negative: Vec<f64>,
}

impl LargeZExpansion {
    /// `r(z) = −(polynomial part)(z)`.
    pub fn r(&self, x: f64) -> f64 {
        -horner(&self.polynomial, x)
    }
}

/// Coefficients of `(1 − a u)^{−1/2}` up to `u^len`.
fn inverse_sqrt_series(a: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let mut g = 1.0;
    let mut pow = 1.0;
    for n in 0..=len {
        if n > 0 {
            g *= (2 * n - 1) as f64 / (2 * n) as f64;
            pow *= a;
        }
        out.push(g * pow);
    }
    out
}

fn series_mul(x: &[f64], y: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len + 1];
    for (i, a) in x.iter().enumerate().take(len + 1) {
        for (j, b) in y.iter().enumerate().take(len + 1 - i) {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn large_z_expansion(p: &Potential, cuts: &[Cut]) -> LargeZExpansion {
    let q = cuts.len() as isize;
    let dv = p.derivative_coefficients(1);
    let deg = dv.len() - 1;
    let len = deg + 1;
    let mut series = vec![0.0; len + 1];
    series[0] = 1.0;
    for &(a, b) in cuts {
        series = series_mul(&series, &inverse_sqrt_series(a, len), len);
        series = series_mul(&series, &inverse_sqrt_series(b, len), len);
    }
    // Coefficient of ξ^k is Σ_m v_m c_{m−q−k}.
    let coeff = |k: isize| -> f64 {
        dv.iter()
            .enumerate()
            .filter_map(|(m, v)| {
                let n = m as isize - q - k;
                (n >= 0 && (n as usize) <= len).then(|| v * series[n as usize])
            })
            .sum()
    };
    let top = deg as isize - q;
    let polynomial = if top >= 0 {
        (0..=top).map(coeff).collect()
    } else {
        vec![0.0]
    };
    let negative = (1..=q + 1).map(|k| coeff(-k)).collect();
    LargeZExpansion {
        polynomial,
        negative,
    }
}

/// `x(θ) = A + (B − A)·sin²θ` for `θ ∈ [0, π/2]`, and `dx/dθ`.
#[inline]
pub fn sin2_map(a: f64, b: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (a + (b - a) * s * s, 2.0 * (b - a) * s * c)
}

/// Inverse of [`sin2_map`].
#[inline]
pub fn sin2_angle(a: f64, b: f64, x: f64) -> f64 {
    ((x - a) / (b - a)).clamp(0.0, 1.0).sqrt().asin()
}

/// `∫` over a gap `[B_j, A_{j+1}]` of `r(x)·∏ s_k(x)`, which equals
/// `−(H(A_{j+1}) − H(B_j))` for the effective potential `H`.
fn gap_integral(expansion: &LargeZExpansion, cuts: &[Cut], j: usize) -> f64 {
    let (lo, hi) = (cuts[j].1, cuts[j + 1].0);
    gauss_legendre(48).integrate(
        |t| {
            let (x, dx) = sin2_map(lo, hi, t);
            expansion.r(x) * branch_product_real(x, cuts).re * dx
        },
        0.0,
        FRAC_PI_2,
    )
}

/// Residuals of the `2q` edge equations: `q + 1` moment conditions at
/// infinity and `q − 1` equal-constant conditions across the gaps.
pub fn edge_residuals(p: &Potential, cuts: &[Cut]) -> Vec<f64> {
    let exp = large_z_expansion(p, cuts);
    let q = cuts.len();
    let mut out = Vec::with_capacity(2 * q);
    for (k, c) in exp.negative.iter().enumerate() {
        out.push(if k == q { c - 2.0 } else { *c });
    }
    for j in 0..q.saturating_sub(1) {
        out.push(gap_integral(&exp, cuts, j));
    }
    out
}

fn to_cuts(e: &[f64]) -> Vec<Cut> {
    e.chunks(2).map(|c| (c[0], c[1])).collect()
}

fn ordered(e: &[f64]) -> bool {
    e.windows(2).all(|w| w[0] < w[1]) && e.iter().all(|x| x.is_finite())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct EdgeSolution {
    pub cuts: Vec<Cut>,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton on the edge equations, seeded from `init`. Steps that would
/// cross edges are rejected by halving.
pub fn solve_edges(p: &Potential, init: &[Cut]) -> Result<EdgeSolution> {
    if init.is_empty() {
        return Err(Error::EdgeSolver("no initial cuts".into()));
    }
    let mut e: Vec<f64> = init.iter().flat_map(|&(a, b)| [a, b]).collect();
    if !ordered(&e) {
        return Err(Error::EdgeSolver(format!("initial edges not increasing: {e:?}")));
    }
    let n = e.len();
    let mut res = edge_residuals(p, &to_cuts(&e));
    let mut norm = max_abs(&res);
    for it in 0..200 {
        if norm < 1e-14 {
            return Ok(EdgeSolution {
                cuts: to_cuts(&e),
                residual: norm,
                iterations: it,
            });
        }
        let mut jac = vec![0.0; n * n];
        for col in 0..n {
            let h = 1e-7 * e[col].abs().max(1.0);
            let mut plus = e.clone();
            let mut minus = e.clone();
            plus[col] += h;
            minus[col] -= h;
            let rp = edge_residuals(p, &to_cuts(&plus));
            let rm = edge_residuals(p, &to_cuts(&minus));
            for row in 0..n {
                jac[row * n + col] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let mut rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = solve_dense(&mut jac, &mut rhs, n)
            .ok_or_else(|| Error::EdgeSolver(format!("singular Jacobian at {e:?}")))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial: Vec<f64> = e.iter().zip(&step).map(|(x, d)| x + lambda * d).collect();
            if ordered(&trial) {
                let r = edge_residuals(p, &to_cuts(&trial));
                let tn = max_abs(&r);
                if tn < norm || tn < 1e-14 {
                    e = trial;
                    res = r;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if norm < 1e-11 {
                // Stalled at round-off level.
                return Ok(EdgeSolution {
                    cuts: to_cuts(&e),
                    residual: norm,
                    iterations: it,
                });
            }
            return Err(Error::EdgeSolver(format!(
                "Newton stalled at residual {norm:.3e} with edges {e:?}"
            )));
        }
    }
    if norm < 1e-11 {
        return Ok(EdgeSolution {
            cuts: to_cuts(&e),
            residual: norm,
            iterations: 200,
        });
    }
    Err(Error::EdgeSolver(format!(
        "Newton did not converge: residual {norm:.3e} with edges {e:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn branch_factor_behaves_like_z_at_infinity() {
        let z = Complex64::new(1e6, 3e5);
        let f = cut_factor(z, -2.0, 2.0);
        assert!((f / z - 1.0).norm() < 1e-10);
        let f = cut_factor(-z, -2.0, 2.0);
        assert!((f / -z - 1.0).norm() < 1e-10);
    }

    #[test]
    fn real_factor_matches_complex_limit() {
        for x in [-3.0, -1.0, 0.5, 1.9, 2.5] {
            let from_above = cut_factor(Complex64::new(x, 1e-300), -2.0, 2.0);
            let real = cut_factor_real(x, -2.0, 2.0);
            assert!((from_above - real).norm() < 1e-12, "{x}");
        }
        // Left of the cut: −√(A−x)√(B−x).
        assert_relative_eq!(cut_factor_real(-3.0, -2.0, 2.0).re, -(5.0f64).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn quadratic_expansion() {
        let p = Potential::new(vec![0.0, 0.0, 0.5], 0.0, "q").unwrap();
        let exp = large_z_expansion(&p, &[(-2.0, 2.0)]);
        assert_relative_eq!(exp.polynomial[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(exp.negative[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(exp.negative[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_edges_from_rough_guess() {
        let p = Potential::quadratic();
        let sol = solve_edges(&p, &[(-1.5, 2.6)]).unwrap();
        assert_relative_eq!(sol.cuts[0].0, -2.0, epsilon = 1e-10);
        assert_relative_eq!(sol.cuts[0].1, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn one_cut_quartic_matches_closed_form() {
        // V = x⁴/4 − c x², c < 1: b² = 4(c + √(c² + 3))/3.
        let c = 0.5;
        let p = Potential::symmetric_quartic(c);
        let b = (4.0 * (c + (c * c + 3.0f64).sqrt()) / 3.0).sqrt();
        let sol = solve_edges(&p, &[(-2.0, 2.0)]).unwrap();
        assert_relative_eq!(sol.cuts[0].1, b, epsilon = 1e-10);
        assert_relative_eq!(sol.cuts[0].0, -b, epsilon = 1e-10);
    }

    #[test]
    fn two_cut_quartic_is_symmetric_and_stable_under_perturbation() {
        let p = Potential::symmetric_quartic(2.0);
        let a = solve_edges(&p, &[(-2.6, -1.0), (1.0, 2.6)]).unwrap();
        let (a1, b1) = a.cuts[0];
        let (a2, b2) = a.cuts[1];
        assert!((a1 + b2).abs() < 1e-8 && (b1 + a2).abs() < 1e-8, "{:?}", a.cuts);
        let perturbed: Vec<Cut> = a
            .cuts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| if i == 0 { (x * 1.2, y * 0.8) } else { (x * 0.85, y * 1.15) })
            .collect();
        let b = solve_edges(&p, &perturbed).unwrap();
        for (u, v) in a.cuts.iter().zip(&b.cuts) {
            assert!((u.0 - v.0).abs() < 1e-8 && (u.1 - v.1).abs() < 1e-8);
        }
    }

    #[test]
    fn crossing_initial_edges_rejected() {
        let p = Potential::quadratic();
        assert!(solve_edges(&p, &[(1.0, -1.0)]).is_err());
    }
}
