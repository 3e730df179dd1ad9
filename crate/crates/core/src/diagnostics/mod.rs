//! Statistics computed from samples and a solved equilibrium measure.

pub mod fourier;
pub mod hs;
pub mod statistic;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::sampler::GibbsModel;

pub use fourier::{
    fourier_log_coeff, fourier_log_coeffs, log_energy, LogEnergy, LogEnergyMethod, SignedGridMeasure,
};
pub use hs::{hs_bound_check, HsCheck, SmoothCutoff};
pub use statistic::LinearStatistic;

/// Linear-interpolation quantile of already sorted data.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_quantile(&v, 0.5)
}

/// Mean and standard error from `batches` contiguous batch means; plain
/// sample standard error when there are too few values to batch.
pub fn mean_and_se(values: &[f64], batches: usize) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let (groups, len) = if n >= 2 * batches && batches >= 2 {
        (batches, n / batches)
    } else {
        (n, 1)
    };
    let means: Vec<f64> = (0..groups)
        .map(|g| values[g * len..(g + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let mu = means.iter().sum::<f64>() / groups as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (groups - 1) as f64;
    (mean, (var / groups as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityStat {
    pub per_sample: Vec<f64>,
    pub q99: f64,
}

/// Bulk index bands `[(F_{i−1} + α)N, (F_i − α)N]` per cut (1-based indices);
/// all indices when every band is empty.
pub fn bulk_indices(eqm: &EquilibriumMeasure, n: usize, alpha: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cum = 0.0;
    for r in eqm.filling_fractions() {
        let lo = ((cum + alpha) * n as f64).ceil().max(1.0) as usize;
        let hi = ((cum + r - alpha) * n as f64).floor().min(n as f64) as usize;
        if lo <= hi {
            out.extend(lo..=hi);
        }
        cum += r;
    }
    out.retain(|&k| k >= 1 && k <= n);
    out.dedup();
    if out.is_empty() {
        out = (1..=n).collect();
    }
    out
}

/// Per sample, `max_{k in bulk} |λ_k − η_k|`, plus the 0.99 quantile.
pub fn rigidity_stat(samples: &[Vec<f64>], eqm: &EquilibriumMeasure, alpha: f64) -> Result<RigidityStat> {
    let n = samples.first().map_or(0, |s| s.len());
    if let Some(&min_r) = eqm.filling_fractions().iter().min_by(|a, b| a.total_cmp(b)) {
        if n > 1 && !(alpha > 0.0 && alpha < 0.5 * min_r) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, {}), got {alpha}",
                0.5 * min_r
            )));
        }
    }
    Ok(rigidity_stat_with(
        samples,
        &eqm.classical_locations(n),
        &bulk_indices(eqm, n, alpha),
    ))
}

/// As [`rigidity_stat`] with explicit reference locations and 1-based bulk indices.
pub fn rigidity_stat_with(samples: &[Vec<f64>], eta: &[f64], bulk: &[usize]) -> RigidityStat {
    let per_sample: Vec<f64> = samples
        .iter()
        .map(|s| {
            bulk.iter()
                .map(|&k| (s[k - 1] - eta[k - 1]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut sorted = per_sample.clone();
    sorted.sort_by(f64::total_cmp);
    RigidityStat {
        q99: sorted_quantile(&sorted, 0.99),
        per_sample,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fluctuation {
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl Fluctuation {
    /// Fraction of samples with `|value| > N^τ`.
    pub fn tail_fraction(&self, n: usize, tau: f64) -> f64 {
        let t = (n as f64).powf(tau);
        self.values.iter().filter(|v| v.abs() > t).count() as f64 / self.values.len() as f64
    }
}

/// `Σ h(λ_i) − N∫h dρ` per sample.
pub fn fluctuation_stat(
    samples: &[Vec<f64>],
    eqm: &EquilibriumMeasure,
    h: &LinearStatistic,
) -> Result<Fluctuation> {
    let mean_h = eqm.expectation(&|x| h.value(x))?;
    let values: Vec<f64> = samples
        .iter()
        .map(|s| s.iter().map(|&x| h.value(x)).sum::<f64>() - s.len() as f64 * mean_h)
        .collect();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(Fluctuation {
        values,
        mean,
        variance,
    })
}

/// `(1/N)Σ 1/(z − λ_i)`.
pub fn empirical_stieltjes(config: &[f64], z: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &x in config {
        let d = z - x;
        if d.norm() < 1e-12 {
            return Err(Error::Collision(z, x));
        }
        acc += d.inv();
    }
    Ok(acc / config.len() as f64)
}

/// `max_z |mean over samples of m_N(z) − m(z)|`.
pub fn stieltjes_gap(samples: &[Vec<f64>], eqm: &EquilibriumMeasure, zs: &[Complex64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in zs {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in samples {
            acc += empirical_stieltjes(s, z)?;
        }
        acc /= samples.len() as f64;
        worst = worst.max((acc - eqm.stieltjes(z)?).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopEstimate {
    pub values: Vec<f64>,
    pub mean: f64,
    pub se: f64,
}

/// `−(Nβ/2)Σ W'(y_i)φ(y_i) + βΣ_{i<j}(φ(y_i) − φ(y_j))/(y_i − y_j) + Σφ'(y_i)`
/// for one configuration, `W` the model's one-body field.
pub fn loop_observable(config: &[f64], model: &GibbsModel, phi: &LinearStatistic) -> Result<f64> {
    let n = config.len();
    let nb = n as f64 * model.beta;
    let mut first = 0.0;
    let mut third = 0.0;
    let mut blocks = Vec::with_capacity(n);
    for &y in config {
        first += model.field_derivative(y)? * phi.value(y);
        third += phi.d1(y);
        blocks.push(model.domain.block_of(y).unwrap_or(usize::MAX));
    }
    let mut pairs = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if !model.interacts(blocks[i], blocks[j]) {
                continue;
            }
            let d = config[i] - config[j];
            pairs += if d.abs() < 1e-13 {
                phi.d1(config[i])
            } else {
                (phi.value(config[i]) - phi.value(config[j])) / d
            };
        }
    }
    Ok(-0.5 * nb * first + model.beta * pairs + third)
}

/// Monte-Carlo mean of [`loop_observable`] with a batch-means standard error.
pub fn loop_residual(samples: &[Vec<f64>], model: &GibbsModel, phi: &LinearStatistic) -> Result<LoopEstimate> {
    let values = samples
        .iter()
        .map(|s| loop_observable(s, model, phi))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_se(&values, 20);
    Ok(LoopEstimate { values, mean, se })
}

/// `W₁(L_N, ρ) = ∫_0^1 |Q_N(u) − Q(u)| du` by quantile coupling. Each sample
/// owns `u ∈ ((k−1)/N, k/N]`, and `∫Q = ΔM∘Q` with `M(x) = ∫_{−∞}^x tρ`.
pub fn wasserstein1(config: &[f64], eqm: &EquilibriumMeasure) -> f64 {
    let mut sorted = config.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nodes: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let u = k as f64 / n as f64;
            let q = eqm.quantile(u);
            (u, eqm.first_moment_below(q))
        })
        .collect();
    let integral_q = |m_a: f64, m_b: f64| m_b - m_a;
    let mut total = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        let (u1, m1) = nodes[k];
        let (u2, m2) = nodes[k + 1];
        let star = eqm.cdf(x).clamp(u1, u2);
        let m_star = if star == u1 {
            m1
        } else if star == u2 {
            m2
        } else {
            eqm.first_moment_below(eqm.quantile(star))
        };
        total += x * (star - u1) - integral_q(m1, m_star);
        total += integral_q(m_star, m2) - x * (u2 - star);
    }
    total
}

/// Fraction of samples with at least one particle outside `∪[A_i − δ, B_i + δ]`.
pub fn escape_fraction(samples: &[Vec<f64>], eqm: &EquilibriumMeasure, delta: f64) -> f64 {
    let inside = |x: f64| eqm.edges().iter().any(|&(a, b)| a - delta <= x && x <= b + delta);
    let escaped = samples.iter().filter(|s| s.iter().any(|&x| !inside(x))).count();
    escaped as f64 / samples.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// 95% confidence interval for the slope; absent with only two points.
    pub ci: Option<(f64, f64)>,
}

/// Least squares of `ln y` against `ln N`.
pub fn fit_power_law(ns: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if ns.len() != ys.len() || ns.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (N, value) pairs".into()));
    }
    if ns.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("power-law fit needs positive data".into()));
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let ci = if x.len() > 2 {
        let df = m - 2.0;
        let se = (sse / df / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, df)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .inverse_cdf(0.975);
        Some((slope - t * se, slope + t * se))
    } else {
        None
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
        ci,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::SolveOptions;
    use crate::potential::Potential;
    use crate::quadrature::adaptive;
    use approx::assert_relative_eq;

    fn semicircle() -> EquilibriumMeasure {
        EquilibriumMeasure::solve(&Potential::quadratic(), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn rigidity_basics() {
        let m = semicircle();
        let one = rigidity_stat(&[vec![0.3]], &m, 0.1).unwrap();
        assert_relative_eq!(one.per_sample[0], (0.3 - 2.0f64).abs(), epsilon = 1e-15);
        let eta = m.classical_locations(50);
        let r = rigidity_stat(std::slice::from_ref(&eta), &m, 0.1).unwrap();
        assert_eq!(r.per_sample[0], 0.0);
        // Moving particles outside the bulk band changes nothing.
        let mut moved = eta.clone();
        moved[0] -= 0.5;
        moved[49] += 0.5;
        assert_eq!(rigidity_stat(&[moved], &m, 0.1).unwrap().per_sample[0], 0.0);
        assert!(rigidity_stat(&[eta], &m, 0.6).is_err());
    }

    #[test]
    fn bulk_bands_follow_filling_fractions() {
        let m = semicircle();
        assert_eq!(bulk_indices(&m, 10, 0.1), (1..=9).collect::<Vec<_>>());
        assert_eq!(bulk_indices(&m, 1, 0.1), vec![1]);
    }

    #[test]
    fn constant_statistic_is_centred_exactly() {
        let m = semicircle();
        let h = LinearStatistic::Constant { value: 2.5 };
        let f = fluctuation_stat(&[vec![0.1, 0.5, -1.0], vec![1.9, 0.0, 0.2]], &m, &h).unwrap();
        assert!(f.values.iter().all(|v| v.abs() < 1e-9));
        assert_eq!(f.tail_fraction(3, 0.1), 0.0);
    }

    #[test]
    fn stieltjes_of_a_point_mass() {
        let m = empirical_stieltjes(&[0.0], Complex64::new(0.0, 1.0)).unwrap();
        assert!((m - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(empirical_stieltjes(&[0.5], Complex64::new(0.5, 0.0)).is_err());
        let s = empirical_stieltjes(&[-1.0, 0.2, 3.0], Complex64::new(0.7, 0.01)).unwrap();
        assert!(s.im < 0.0);
    }

    #[test]
    fn classical_configuration_is_wasserstein_close() {
        let m = semicircle();
        for n in [10, 40, 160] {
            let w = wasserstein1(&m.classical_locations(n), &m);
            assert!(w <= 2.0 * 4.0 / n as f64, "{n}: {w}");
        }
    }

    #[test]
    fn single_particle_wasserstein_matches_quadrature() {
        let m = semicircle();
        for x0 in [0.0, 0.7, 2.5] {
            let w = wasserstein1(&[x0], &m);
            let left = adaptive(&|x| m.cdf(x), -2.0, x0.min(2.0), 1e-13).unwrap();
            let right = adaptive(&|x| 1.0 - m.cdf(x), x0.min(2.0), 2.0, 1e-13).unwrap();
            let beyond = (x0 - 2.0).max(0.0);
            assert_relative_eq!(w, left + right + beyond, epsilon = 1e-9);
        }
    }

    #[test]
    fn escape_fraction_basics() {
        let m = semicircle();
        let s = vec![vec![0.0, 2.1], vec![-2.5, 0.0], vec![1.0, 1.5]];
        assert_relative_eq!(escape_fraction(&s, &m, 0.2), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(escape_fraction(&s, &m, 10.0), 0.0);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let ns = [64.0, 128.0, 256.0, 512.0];
        let ys: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(-0.9)).collect();
        let f = fit_power_law(&ns, &ys).unwrap();
        assert_relative_eq!(f.slope, -0.9, epsilon = 1e-12);
        assert_relative_eq!(f.r2, 1.0, epsilon = 1e-12);
        let (lo, hi) = f.ci.unwrap();
        assert!(lo <= f.slope && f.slope <= hi);
    }

    #[test]
    fn loop_observable_uses_derivative_for_coincident_pairs() {
        let model = GibbsModel::full(Potential::quadratic(), 2.0, 2).unwrap();
        let phi = LinearStatistic::Sine { frequency: 1.0, phase: 0.3 };
        let a = loop_observable(&[0.4, 0.4], &model, &phi).unwrap();
        let b = loop_observable(&[0.4, 0.4 + 1e-9], &model, &phi).unwrap();
        assert!((a - b).abs() < 1e-6);
    }
}
