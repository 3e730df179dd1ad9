//! Exact sampler for `V(x) = x²/2` through a random tridiagonal matrix.
//!
//! Diagonal entries are `Normal(0, 2/(Nβ))` and the `k`-th off-diagonal entry
//! is `χ_{β(N−k)}/√(Nβ)`. The eigenvalue density is then proportional to
//! `∏|λ_i − λ_j|^β · exp(−(Nβ/4)Σλ_i²)` for every `β > 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

pub fn tridiagonal_sample(beta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    tridiagonal_sample_with(beta, n, &mut rng)
}

/// As [`tridiagonal_sample`], drawing from a caller-owned generator.
pub fn tridiagonal_sample_with(beta: f64, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "tridiagonal sampler needs beta > 0 and N ≥ 1 (got {beta}, {n})"
        )));
    }
    let nb = n as f64 * beta;
    let sd = (2.0 / nb).sqrt();
    let diag: Vec<f64> = (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let off = (1..n)
        .map(|k| {
            let chi2 = ChiSquared::new(beta * (n - k) as f64)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(chi2.sample(rng).sqrt() / nb.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(tridiagonal_eigenvalues(&diag, &off))
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` by implicit QL with Wilkinson shifts, sorted ascending.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert_eq!(e.len() + 1, n.max(1), "off-diagonal must have n − 1 entries");
    let mut d = d.to_vec();
    let mut e = e.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l || iterations == 64 {
                break;
            }
            iterations += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn dense_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
        let n = d.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        });
        let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    proptest! {
        #[test]
        fn ql_matches_dense_solver(d in prop::collection::vec(-5.0f64..5.0, 1..30), seed in 0u64..500) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let e: Vec<f64> = (1..d.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ours = tridiagonal_eigenvalues(&d, &e);
            let reference = dense_eigenvalues(&d, &e);
            for (a, b) in ours.iter().zip(&reference) {
                prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn handles_decoupled_blocks() {
        let v = tridiagonal_eigenvalues(&[3.0, 1.0, 2.0], &[0.0, 0.0]);
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        assert_eq!(tridiagonal_eigenvalues(&[4.0], &[]), vec![4.0]);
    }

    fn semicircle_cdf(x: f64) -> f64 {
        let x = x.clamp(-2.0, 2.0);
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }

    #[test]
    fn spectral_distribution_is_semicircular() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let mut pooled = Vec::new();
        let mut sums = Vec::new();
        for _ in 0..500 {
            let s = tridiagonal_sample_with(2.0, 64, &mut rng).unwrap();
            sums.push(s.iter().sum::<f64>());
            pooled.extend(s);
        }
        pooled.sort_by(f64::total_cmp);
        let n = pooled.len() as f64;
        let sup = pooled
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = semicircle_cdf(x);
                (f - k as f64 / n).abs().max((f - (k + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(sup <= 0.03, "sup distance {sup}");
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (sums.len() - 1) as f64;
        assert!(mean.abs() <= 3.0 * (var / sums.len() as f64).sqrt());
    }

    #[test]
    fn same_seed_same_sample() {
        assert_eq!(tridiagonal_sample(1.0, 10, 9).unwrap(), tridiagonal_sample(1.0, 10, 9).unwrap());
        assert!(tridiagonal_sample(0.0, 10, 9).is_err());
    }
}
