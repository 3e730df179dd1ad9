//! Logarithmic energy of signed measures.
//!
//! On `[−1, 1]`, `ln|t| = Σ_k r_k e^{ikπt}` with `r_0 = −1` and
//! `r_k = −Si(π|k|)/(π|k|)`. For measures supported on a set of diameter below
//! one, `ℒ[m₁, m₂] = −∬ ln|x − y| dm₁ dm₂ = 4Σ_k |r_k| b_k(m₁) conj(b_k(m₂))` with
//! `b_k(m) = ½∫ e^{−ikπx} dm`, whenever one of the masses vanishes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::kernel::cell_pair_log_average;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// `r_0, …, r_K`.
pub fn fourier_log_coeffs(k_max: usize) -> Vec<f64> {
    let rule = gauss_legendre(20);
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(-1.0);
    let mut si = 0.0;
    for k in 1..=k_max {
        let lo = (k - 1) as f64 * PI;
        si += rule.integrate(|t| t.sin() / t, lo, lo + PI);
        out.push(-si / (PI * k as f64));
    }
    out
}

pub fn fourier_log_coeff(k: i64) -> f64 {
    let k = k.unsigned_abs() as usize;
    fourier_log_coeffs(k)[k]
}

/// Piecewise-constant signed measure: cell `j` carries mass `weights[j]`
/// spread uniformly over `[centres[j] − h, centres[j] + h]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedGridMeasure {
    pub centres: Vec<f64>,
    pub weights: Vec<f64>,
    pub half_width: f64,
}

impl SignedGridMeasure {
    pub fn new(centres: Vec<f64>, weights: Vec<f64>, half_width: f64) -> Result<Self> {
        if centres.len() != weights.len() || centres.is_empty() {
            return Err(Error::InvalidArgument(
                "grid measure needs matching, non-empty centres and weights".into(),
            ));
        }
        if !(half_width > 0.0) || weights.iter().chain(&centres).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid measure has invalid entries".into()));
        }
        Ok(Self {
            centres,
            weights,
            half_width,
        })
    }

    /// `m` equal cells on `[a, b]` with mass `density(centre)·(cell width)`.
    pub fn from_density(a: f64, b: f64, m: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 0.5 * (b - a) / m as f64;
        let centres: Vec<f64> = (0..m).map(|j| a + (2 * j + 1) as f64 * h).collect();
        let weights = centres.iter().map(|&c| density(c) * 2.0 * h).collect();
        Self::new(centres, weights, h)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    fn hull(&self) -> (f64, f64) {
        let lo = self.centres.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.centres.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - self.half_width, hi + self.half_width)
    }

    /// Stieltjes transform `∫ dm(t)/(z − t)`, exact for the piecewise-constant density.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let h = self.half_width;
        self.centres
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w / (2.0 * h) * ((z - (c - h)).ln() - (z - (c + h)).ln()))
            .sum()
    }

    /// `∫ f dm` with a 16-point rule per cell.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let rule = gauss_legendre(16);
        let h = self.half_width;
        self.centres
            .iter()
            .zip(&self.weights)
            .map(|(&c, &w)| w / (2.0 * h) * rule.integrate(&f, c - h, c + h))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogEnergyMethod {
    /// Exact cell-pair averages of `ln|x − y|`.
    Direct,
    /// Truncated Fourier series with `K` modes.
    Fourier { modes: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEnergy {
    pub value: f64,
    /// Bound on the neglected modes; zero for the direct method.
    pub tail_bound: f64,
}

pub fn log_energy(m1: &SignedGridMeasure, m2: &SignedGridMeasure, method: LogEnergyMethod) -> Result<LogEnergy> {
    match method {
        LogEnergyMethod::Direct => Ok(LogEnergy {
            value: direct(m1, m2),
            tail_bound: 0.0,
        }),
        LogEnergyMethod::Fourier { modes } => fourier(m1, m2, modes),
    }
}

fn direct(m1: &SignedGridMeasure, m2: &SignedGridMeasure) -> f64 {
    let (h1, h2) = (m1.half_width, m2.half_width);
    let mut total = 0.0;
    for (&c, &w) in m1.centres.iter().zip(&m1.weights) {
        if w == 0.0 {
            continue;
        }
        let row: f64 = m2
            .centres
            .iter()
            .zip(&m2.weights)
            .map(|(&d, &v)| v * cell_pair_log_average(c - h1, c + h1, d - h2, d + h2))
            .sum();
        total -= w * row;
    }
    total
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// `Σ_j w_j e^{−ikπs c_j} sinc(kπsh)`, i.e. `2b_k` of the rescaled measure.
fn mode(m: &SignedGridMeasure, k: usize, s: f64) -> Complex64 {
    let theta = k as f64 * PI * s;
    let sum: Complex64 = m
        .centres
        .iter()
        .zip(&m.weights)
        .map(|(&c, &w)| {
            let (sn, cs) = (theta * c).sin_cos();
            w * Complex64::new(cs, -sn)
        })
        .sum();
    sum * sinc(theta * m.half_width)
}

fn fourier(m1: &SignedGridMeasure, m2: &SignedGridMeasure, modes: usize) -> Result<LogEnergy> {
    let massless =
        |m: &SignedGridMeasure| m.total_mass().abs() <= 1e-12 * m.total_variation().max(f64::MIN_POSITIVE);
    if !massless(m1) && !massless(m2) {
        return Err(Error::NonzeroMass(m1.total_mass()));
    }
    let (a1, b1) = m1.hull();
    let (a2, b2) = m2.hull();
    let diameter = b1.max(b2) - a1.min(a2);
    // x ↦ s·x puts the union of supports in an interval of diameter 0.9.
    let s = 0.9 / diameter;
    let r = fourier_log_coeffs(modes);
    let mut value = 0.0;
    for (k, rk) in r.iter().enumerate().skip(1) {
        value += 2.0 * rk.abs() * (mode(m1, k, s) * mode(m2, k, s).conj()).re;
    }
    // ℒ changes by −m₁(I)m₂(I)·ln s under the rescaling.
    value += m1.total_mass() * m2.total_mass() * s.ln();
    // |r_k| ≤ Si(π)/(πk) = |r_1|/k and |sinc(u)| ≤ 1/|u|.
    let r1 = fourier_log_coeffs(1)[1].abs();
    let tail_bound = r1 * m1.total_variation() * m2.total_variation()
        / (PI * PI * s * s * m1.half_width * m2.half_width * (modes.max(1) as f64).powi(2));
    Ok(LogEnergy { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{composite, graded_around, graded_toward_left};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // r_k = ∫_0^1 ln t cos(kπt) dt = −1 + ∫_0^1 ln t (cos(kπt) − 1) dt.
    fn coeff_oracle(k: usize) -> f64 {
        let g = |t: f64| t.ln() * ((k as f64 * PI * t).cos() - 1.0);
        if k == 0 {
            return -1.0;
        }
        let first = 1.0 / k as f64;
        -1.0 + graded_toward_left(g, 0.0, first) + composite(g, first, 1.0, 2 * k, 20)
    }

    #[test]
    fn coefficients_match_direct_quadrature() {
        let r = fourier_log_coeffs(4096);
        for k in (0..=50).chain([511, 4096]) {
            let o = coeff_oracle(k);
            assert!((r[k] - o).abs() <= 1e-12, "k={k}: {} vs {o}", r[k]);
        }
        assert_eq!(fourier_log_coeff(-3), r[3]);
        assert_eq!(fourier_log_coeff(-3), fourier_log_coeff(3));
        assert!(r.iter().all(|&v| v < 0.0));
    }

    #[test]
    fn coefficients_decay_like_one_over_k() {
        // k|r_k| = Si(πk)/π lies between Si(2π)/π ≈ 0.4514 and Si(π)/π ≈ 0.5895.
        let r = fourier_log_coeffs(10_000);
        for (k, rk) in r.iter().enumerate().skip(1) {
            let scaled = k as f64 * rk.abs();
            assert!((1.0 / 2.25..=2.25).contains(&scaled), "k={k}: {scaled}");
            assert!(scaled >= 2.0 * r[2].abs() - 1e-15 && scaled <= r[1].abs() + 1e-15);
        }
    }

    #[test]
    fn dipole_has_positive_energy() {
        let m = SignedGridMeasure::new(vec![0.0, 0.1], vec![1.0, -1.0], 0.05).unwrap();
        assert!(log_energy(&m, &m, LogEnergyMethod::Direct).unwrap().value > 0.0);
    }

    fn odd_density(x: f64) -> f64 {
        x * (1.0 - x * x).powi(2)
    }

    #[test]
    fn fourier_and_direct_agree_on_a_smooth_zero_mass_measure() {
        let m = SignedGridMeasure::from_density(-1.0, 1.0, 200, odd_density).unwrap();
        assert!(m.total_mass().abs() < 1e-15);
        let d = log_energy(&m, &m, LogEnergyMethod::Direct).unwrap().value;
        let f = log_energy(&m, &m, LogEnergyMethod::Fourier { modes: 4096 }).unwrap();
        assert!(d > 0.0);
        assert!((d - f.value).abs() <= 1e-3 * d.abs(), "{d} vs {}", f.value);
        assert!((d - f.value).abs() <= f.tail_bound + 1e-12);
    }

    #[test]
    fn fourier_rejects_nonzero_mass() {
        let m = SignedGridMeasure::from_density(0.0, 1.0, 10, |_| 1.0).unwrap();
        assert!(matches!(
            log_energy(&m, &m, LogEnergyMethod::Fourier { modes: 16 }),
            Err(Error::NonzeroMass(_))
        ));
    }

    #[test]
    fn rescaling_is_invisible() {
        // The support here is wider than one, so the Fourier route must rescale.
        let m = SignedGridMeasure::from_density(-3.0, 3.0, 120, |x| odd_density(x / 3.0)).unwrap();
        let d = log_energy(&m, &m, LogEnergyMethod::Direct).unwrap().value;
        let f = log_energy(&m, &m, LogEnergyMethod::Fourier { modes: 4096 }).unwrap().value;
        assert!((d - f).abs() <= 1e-3 * d.abs(), "{d} vs {f}");
    }

    #[test]
    fn stieltjes_matches_quadrature() {
        let m = SignedGridMeasure::from_density(-1.0, 1.0, 7, |x| 1.0 + x).unwrap();
        let z = Complex64::new(0.2, 0.3);
        let rule = gauss_legendre(40);
        let mut oracle = Complex64::new(0.0, 0.0);
        for (&c, &w) in m.centres.iter().zip(&m.weights) {
            let h = m.half_width;
            oracle += rule.integrate_complex(|t| (z - t).inv() * (w / (2.0 * h)), c - h, c + h);
        }
        assert!((m.stieltjes(z) - oracle).norm() < 1e-12);
    }

    fn zero_mass(weights: Vec<f64>) -> SignedGridMeasure {
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        let m = weights.len();
        SignedGridMeasure::from_density(-0.5, 0.5, m, |_| 0.0)
            .map(|g| SignedGridMeasure {
                weights: weights.iter().map(|w| w - mean).collect(),
                ..g
            })
            .unwrap()
    }

    proptest! {
        #[test]
        fn energy_is_symmetric_and_cauchy_schwarz(
            a in prop::collection::vec(-1.0f64..1.0, 12),
            b in prop::collection::vec(-1.0f64..1.0, 12),
        ) {
            let (m1, m2) = (zero_mass(a), zero_mass(b));
            let e = |x: &SignedGridMeasure, y: &SignedGridMeasure| log_energy(x, y, LogEnergyMethod::Direct).unwrap().value;
            let (e12, e21, e11, e22) = (e(&m1, &m2), e(&m2, &m1), e(&m1, &m1), e(&m2, &m2));
            prop_assert!((e12 - e21).abs() <= 1e-12 * (1.0 + e12.abs()));
            prop_assert!(e11 >= -1e-14 && e22 >= -1e-14);
            prop_assert!(e12 * e12 <= e11 * e22 * (1.0 + 1e-9) + 1e-24);
        }
    }

    // Integral over [a, b] of a function whose derivative is singular at both ends.
    fn both_ends(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        graded_around(&f, a, m, a) + graded_around(&f, m, b, b)
    }

    #[test]
    fn direct_matches_its_definition_on_two_cells() {
        let m = SignedGridMeasure::new(vec![0.0, 1.0], vec![1.0, -1.0], 0.25).unwrap();
        // Density is +2 on the first cell and −2 on the second.
        let inner = |x: f64| {
            let f = |y: f64| (x - y).abs().ln();
            2.0 * graded_around(f, -0.25, 0.25, x.clamp(-0.25, 0.25))
                - 2.0 * graded_around(f, 0.75, 1.25, x.clamp(0.75, 1.25))
        };
        let oracle = -(2.0 * both_ends(inner, -0.25, 0.25) - 2.0 * both_ends(inner, 0.75, 1.25));
        let d = log_energy(&m, &m, LogEnergyMethod::Direct).unwrap().value;
        assert_relative_eq!(d, oracle, epsilon = 1e-9);
    }
}
