//! Restricted, decomposed and single-cut models built from a solved
//! equilibrium measure.
//!
//! With blocks `σ_α(κ) = [A_α − κ/2, B_α + κ/2]` and
//! `V*_α(x) = ∫_{σ∖σ_α} ln|x − y| ρ(y) dy`, the decomposed Hamiltonian replaces
//! cross-block interactions by their equilibrium averages:
//!
//! `ℋ_r = ½Σ(V − 2V*)(λ_i) − (1/2N)Σ_{i≠j, same block} ln|λ_i − λ_j| + (N/2)Σ*`
//!
//! where `Σ* = Σ_{α≠α'} ∫_{σ_α}∫_{σ_α'} ρρ ln|x − y|`.

use serde::{Deserialize, Serialize};

use super::{Domain, GibbsModel, Interaction};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::quadrature::ChebyshevInterpolant;

/// Chebyshev nodes per block for the tabulated external term.
pub const EXTRA_NODES: usize = 64;

/// Which of the admissibility conditions on `κ` hold. Only positivity,
/// `κ ≤ 0.1` and non-overlapping blocks are enforced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa: f64,
    pub below_tenth: bool,
    pub below_gap_hundredth: bool,
    pub short_blocks: bool,
}

/// `min(0.45·(smallest gap), 0.1)`.
pub fn default_kappa(eqm: &EquilibriumMeasure) -> f64 {
    (0.45 * eqm.min_gap()).min(0.1)
}

pub fn check_kappa(eqm: &EquilibriumMeasure, kappa: f64) -> Result<KappaReport> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidKappa {
            kappa,
            reason: "must be positive".into(),
        });
    }
    if kappa > 0.1 {
        return Err(Error::InvalidKappa {
            kappa,
            reason: "must not exceed 0.1".into(),
        });
    }
    let gap = eqm.min_gap();
    if kappa >= gap {
        return Err(Error::InvalidKappa {
            kappa,
            reason: format!("blocks overlap (smallest gap {gap})"),
        });
    }
    Ok(KappaReport {
        kappa,
        below_tenth: kappa < 0.1,
        below_gap_hundredth: kappa < gap / 100.0,
        short_blocks: eqm.edges().iter().all(|&(a, b)| b - a + kappa < 1.0),
    })
}

/// Cuts widened by `pad` on both sides; errors if neighbours would touch.
pub fn widened_cuts(eqm: &EquilibriumMeasure, pad: f64) -> Result<Vec<(f64, f64)>> {
    let iv: Vec<(f64, f64)> = eqm.edges().iter().map(|&(a, b)| (a - pad, b + pad)).collect();
    if !(pad >= 0.0) || iv.windows(2).any(|w| w[0].1 >= w[1].0) {
        return Err(Error::InvalidArgument(format!(
            "widening the cuts by {pad} makes them overlap"
        )));
    }
    Ok(iv)
}

/// `V*_α(x) = ∫_{σ∖σ_α} ln|x − y| ρ(y) dy`.
pub fn exterior_log_potential(eqm: &EquilibriumMeasure, alpha: usize, x: f64) -> f64 {
    eqm.log_potential_over(x, |k| k != alpha)
}

/// `Σ* = Σ_α ∫_{σ_α} ρ V*_α`.
pub fn sigma_star(eqm: &EquilibriumMeasure) -> Result<f64> {
    (0..eqm.q())
        .map(|alpha| eqm.integrate_on_cut(alpha, |x| exterior_log_potential(eqm, alpha, x)))
        .sum()
}

/// Full interaction on `∪[A_i − pad, B_i + pad]`.
pub fn build_restricted_model(
    eqm: &EquilibriumMeasure,
    beta: f64,
    n: usize,
    pad: f64,
) -> Result<GibbsModel> {
    let mut m = GibbsModel::on_domain(
        eqm.potential().clone(),
        beta,
        n,
        Domain::Intervals(widened_cuts(eqm, pad)?),
    )?;
    m.label = "restricted".into();
    Ok(m)
}

fn extra_table(eqm: &EquilibriumMeasure, alpha: usize, block: (f64, f64)) -> ChebyshevInterpolant {
    ChebyshevInterpolant::from_fn(block.0, block.1, EXTRA_NODES, |x| {
        -2.0 * exterior_log_potential(eqm, alpha, x)
    })
}

pub fn build_decomposed_model(
    eqm: &EquilibriumMeasure,
    beta: f64,
    n: usize,
    kappa: f64,
) -> Result<GibbsModel> {
    check_kappa(eqm, kappa)?;
    let blocks = widened_cuts(eqm, 0.5 * kappa)?;
    let extra = blocks
        .iter()
        .enumerate()
        .map(|(alpha, &b)| extra_table(eqm, alpha, b))
        .collect();
    let m = GibbsModel {
        label: "decomposed".into(),
        potential: eqm.potential().clone(),
        beta,
        n,
        domain: Domain::Intervals(blocks),
        interaction: Interaction::WithinBlock,
        potential_scale: 1.0,
        external_extra: Some(extra),
        constant_term: 0.5 * n as f64 * sigma_star(eqm)?,
    };
    m.validate()?;
    Ok(m)
}

/// `n_i` particles on `σ_i(κ)` (zero-based `i`) with field
/// `(c/R_i)·(V − 2V*_i)` and full interaction.
pub fn build_cut_model(
    eqm: &EquilibriumMeasure,
    beta: f64,
    i: usize,
    n_i: usize,
    c: f64,
    kappa: f64,
) -> Result<GibbsModel> {
    if i >= eqm.q() {
        return Err(Error::InvalidArgument(format!("cut index {i} out of range")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("scale c must be positive, got {c}")));
    }
    check_kappa(eqm, kappa)?;
    let (a, b) = eqm.edges()[i];
    let block = (a - 0.5 * kappa, b + 0.5 * kappa);
    let m = GibbsModel {
        label: format!("cut:{i}"),
        potential: eqm.potential().clone(),
        beta,
        n: n_i,
        domain: Domain::Intervals(vec![block]),
        interaction: Interaction::Full,
        potential_scale: c / eqm.filling_fractions()[i],
        external_extra: Some(vec![extra_table(eqm, i, block)]),
        constant_term: 0.0,
    };
    m.validate()?;
    Ok(m)
}

/// `ℋ_r − ℋ` from the two log-weights.
pub fn delta_h(full: &GibbsModel, decomposed: &GibbsModel, config: &[f64]) -> Result<f64> {
    if full.n != decomposed.n || full.beta != decomposed.beta {
        return Err(Error::InvalidArgument("models differ in N or beta".into()));
    }
    let (lf, lr) = (full.log_weight(config), decomposed.log_weight(config));
    if !(lf.is_finite() && lr.is_finite()) {
        return Err(Error::InvalidArgument(
            "configuration lies outside the blocks".into(),
        ));
    }
    Ok((lf - lr) / (full.n as f64 * full.beta))
}

/// `(1/2N)Σ_{cross-block i≠j} ln|λ_i − λ_j| − ΣV*(λ_j) + (N/2)Σ*`, with `V*`
/// read off the decomposed model's tables.
pub fn delta_h_direct(decomposed: &GibbsModel, config: &[f64]) -> Result<f64> {
    let n = config.len();
    let mut blocks = Vec::with_capacity(n);
    let mut vstar = 0.0;
    for &x in config {
        let b = decomposed
            .domain
            .block_of(x)
            .ok_or_else(|| Error::InvalidArgument("configuration lies outside the blocks".into()))?;
        if let Some(extra) = &decomposed.external_extra {
            vstar += -0.5 * extra[b].eval(x);
        }
        blocks.push(b);
    }
    let mut cross = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if blocks[i] != blocks[j] {
                cross += (config[i] - config[j]).abs().ln();
            }
        }
    }
    Ok(cross / n as f64 - vstar + decomposed.constant_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::SolveOptions;
    use crate::potential::Potential;
    use approx::assert_relative_eq;

    fn double_well() -> EquilibriumMeasure {
        EquilibriumMeasure::solve(&Potential::symmetric_quartic(2.0), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn kappa_rules() {
        let m = double_well();
        let k = default_kappa(&m);
        assert_eq!(k, 0.1);
        let r = check_kappa(&m, k).unwrap();
        assert!(!r.below_tenth && !r.below_gap_hundredth);
        // Each cut of this potential is longer than 1.
        assert!(!r.short_blocks);
        assert!(check_kappa(&m, 0.0).is_err());
        assert!(check_kappa(&m, 0.2).is_err());
        assert!(check_kappa(&m, 0.01).unwrap().below_gap_hundredth);
    }

    #[test]
    fn sigma_star_matches_tensor_quadrature() {
        let m = double_well();
        // Cuts are disjoint, so the cross integrand is smooth in both angles.
        let mut oracle = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                if i == j {
                    continue;
                }
                for (x, wx) in m.cut_rule(i, 80) {
                    for (y, wy) in m.cut_rule(j, 80) {
                        oracle += wx * wy * (x - y).abs().ln();
                    }
                }
            }
        }
        assert_relative_eq!(sigma_star(&m).unwrap(), oracle, epsilon = 1e-8);
    }

    #[test]
    fn exterior_term_is_mirror_symmetric_and_tabulated_accurately() {
        let m = double_well();
        let model = build_decomposed_model(&m, 2.0, 16, 0.1).unwrap();
        let extra = model.external_extra.as_ref().unwrap();
        for x in [1.4, 1.8, 2.2, 2.49] {
            assert_relative_eq!(extra[1].eval(x), extra[0].eval(-x), epsilon = 1e-10);
            let exact = -2.0 * exterior_log_potential(&m, 1, x);
            assert!((extra[1].eval(x) - exact).abs() <= 1e-9);
        }
    }

    #[test]
    fn one_cut_decomposition_is_the_restricted_model() {
        let m = EquilibriumMeasure::solve(&Potential::quadratic(), &SolveOptions::default()).unwrap();
        let kappa = default_kappa(&m);
        let dec = build_decomposed_model(&m, 2.0, 6, kappa).unwrap();
        let full = build_restricted_model(&m, 2.0, 6, 0.5 * kappa).unwrap();
        assert_eq!(dec.constant_term, 0.0);
        for config in [vec![-1.9, -1.0, -0.2, 0.3, 1.1, 2.04], vec![-2.0, -1.5, 0.0, 0.1, 0.5, 1.9]] {
            assert!(delta_h(&full, &dec, &config).unwrap().abs() < 1e-15);
            assert!(delta_h_direct(&dec, &config).unwrap().abs() < 1e-15);
        }
        let cut = build_cut_model(&m, 2.0, 0, 6, 1.5, kappa).unwrap();
        assert_relative_eq!(cut.potential_scale, 1.5 / m.filling_fractions()[0], epsilon = 1e-15);
    }

    #[test]
    fn delta_h_two_paths_agree() {
        let m = double_well();
        let kappa = default_kappa(&m);
        let n = 12;
        let dec = build_decomposed_model(&m, 2.0, n, kappa).unwrap();
        let full = build_restricted_model(&m, 2.0, n, 0.5 * kappa).unwrap();
        let mut config = m.half_offset_locations(n);
        config[3] += 0.01;
        config[10] -= 0.02;
        let a = delta_h(&full, &dec, &config).unwrap();
        let b = delta_h_direct(&dec, &config).unwrap();
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        assert!(delta_h(&full, &dec, &[0.0; 12]).is_err());
    }
}
