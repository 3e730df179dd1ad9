//! Gibbs laws on `N` particles and a single-site Metropolis sampler.
//!
//! Unnormalised log-density of a model:
//!
//! `−(Nβ/2)·Σ s·[V(λ_i) + e(λ_i)] + β·Σ_{i<j interacting} ln|λ_i − λ_j| − Nβ·C`
//!
//! with potential scale `s`, block-wise external term `e`, and constant `C`.

pub mod archive;
pub mod decomposition;
pub mod tridiagonal;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::ChebyshevInterpolant;

pub use archive::{read_archive, write_archive, ArchiveHeader};
pub use decomposition::{
    build_cut_model, build_decomposed_model, build_restricted_model, check_kappa, default_kappa,
    delta_h, delta_h_direct, sigma_star, KappaReport,
};
pub use tridiagonal::{tridiagonal_eigenvalues, tridiagonal_sample, tridiagonal_sample_with};

/// Largest particle number any sampler accepts.
pub const MAX_PARTICLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Full,
    /// Disjoint closed intervals in increasing order; each one is a block.
    Intervals(Vec<(f64, f64)>),
}

impl Domain {
    /// Block containing `x`, or `None` outside the domain.
    pub fn block_of(&self, x: f64) -> Option<usize> {
        match self {
            Domain::Full => x.is_finite().then_some(0),
            Domain::Intervals(iv) => iv.iter().position(|&(a, b)| a <= x && x <= b),
        }
    }

    pub fn blocks(&self) -> usize {
        match self {
            Domain::Full => 1,
            Domain::Intervals(iv) => iv.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Domain::Intervals(iv) = self {
            if iv.is_empty() || iv.iter().all(|(a, b)| !(b > a)) {
                return Err(Error::EmptyDomain);
            }
            if iv.iter().any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
                || iv.windows(2).any(|w| w[0].1 >= w[1].0)
            {
                return Err(Error::InvalidArgument(format!(
                    "domain intervals must be disjoint and increasing: {iv:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    Full,
    /// Only pairs lying in the same block interact.
    WithinBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsModel {
    pub label: String,
    pub potential: Potential,
    pub beta: f64,
    pub n: usize,
    pub domain: Domain,
    pub interaction: Interaction,
    pub potential_scale: f64,
    /// One table per domain block.
    pub external_extra: Option<Vec<ChebyshevInterpolant>>,
    pub constant_term: f64,
}

impl GibbsModel {
    /// The full law on `ℝ^N`.
    pub fn full(potential: Potential, beta: f64, n: usize) -> Result<Self> {
        Self::on_domain(potential, beta, n, Domain::Full)
    }

    /// Full interaction restricted to `domain`.
    pub fn on_domain(potential: Potential, beta: f64, n: usize, domain: Domain) -> Result<Self> {
        let m = Self {
            label: "full".into(),
            potential,
            beta,
            n,
            domain,
            interaction: Interaction::Full,
            potential_scale: 1.0,
            external_extra: None,
            constant_term: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if self.n > MAX_PARTICLES {
            return Err(Error::TooManyParticles(self.n, MAX_PARTICLES));
        }
        if !(self.potential_scale > 0.0 && self.potential_scale.is_finite()) {
            return Err(Error::InvalidArgument("potential scale must be positive".into()));
        }
        self.domain.validate()?;
        if self.interaction == Interaction::WithinBlock && self.domain == Domain::Full {
            return Err(Error::InvalidArgument(
                "within-block interaction needs a domain made of blocks".into(),
            ));
        }
        if let Some(extra) = &self.external_extra {
            if extra.len() != self.domain.blocks() {
                return Err(Error::InvalidArgument(format!(
                    "{} external tables for {} blocks",
                    extra.len(),
                    self.domain.blocks()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("model serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `s·(V(x) + e(x))` and the block of `x`; `None` outside the domain.
    #[inline]
    pub fn field(&self, x: f64) -> Option<(f64, usize)> {
        let b = self.domain.block_of(x)?;
        let mut v = self.potential.eval(x);
        if let Some(extra) = &self.external_extra {
            v += extra[b].eval(x);
        }
        Some((self.potential_scale * v, b))
    }

    /// Derivative of the one-body field, when it is available in closed form.
    pub fn field_derivative(&self, x: f64) -> Result<f64> {
        if self.external_extra.is_some() {
            return Err(Error::NotDifferentiable(
                "tabulated external term has no exact derivative".into(),
            ));
        }
        Ok(self.potential_scale * self.potential.d1(x))
    }

    #[inline]
    pub(crate) fn interacts(&self, bi: usize, bj: usize) -> bool {
        self.interaction == Interaction::Full || bi == bj
    }

    /// Unnormalised log-density; `−∞` outside the domain or at coincidences.
    pub fn log_weight(&self, config: &[f64]) -> f64 {
        if config.len() != self.n {
            return f64::NEG_INFINITY;
        }
        let nb = self.n as f64 * self.beta;
        let mut field = 0.0;
        let mut blocks = Vec::with_capacity(self.n);
        for &x in config {
            match self.field(x) {
                Some((f, b)) => {
                    field += f;
                    blocks.push(b);
                }
                None => return f64::NEG_INFINITY,
            }
        }
        let mut pairs = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.interacts(blocks[i], blocks[j]) {
                    let d = (config[i] - config[j]).abs();
                    if d == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    pairs += d.ln();
                }
            }
        }
        -0.5 * nb * field + self.beta * pairs - nb * self.constant_term
    }

    /// `log_weight(config with λ_i → y) − log_weight(config)`.
    pub fn log_weight_change(&self, config: &[f64], i: usize, y: f64) -> f64 {
        let x = config[i];
        let (Some((fx, bx)), Some((fy, by))) = (self.field(x), self.field(y)) else {
            return f64::NEG_INFINITY;
        };
        let mut delta = -0.5 * self.n as f64 * self.beta * (fy - fx);
        if self.interaction == Interaction::Full {
            // Products of ratios in short runs; one logarithm per run.
            let mut acc = 0.0;
            let mut prod = 1.0f64;
            let mut run = 0;
            for (j, &z) in config.iter().enumerate() {
                if j == i {
                    continue;
                }
                prod *= (y - z) / (x - z);
                run += 1;
                if run == 8 {
                    acc += prod.abs().ln();
                    prod = 1.0;
                    run = 0;
                }
            }
            acc += prod.abs().ln();
            if !acc.is_finite() {
                return f64::NEG_INFINITY;
            }
            delta += self.beta * acc;
        } else {
            let mut acc = 0.0;
            for (j, &z) in config.iter().enumerate() {
                if j == i {
                    continue;
                }
                let Some(bz) = self.domain.block_of(z) else {
                    return f64::NEG_INFINITY;
                };
                if bz == by {
                    let d = (y - z).abs();
                    if d == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    acc += d.ln();
                }
                if bz == bx {
                    acc -= (x - z).abs().ln();
                }
            }
            delta += self.beta * acc;
        }
        delta
    }

    /// Metropolis acceptance probability of moving particle `i` to `y`.
    pub fn acceptance_probability(&self, config: &[f64], i: usize, y: f64) -> f64 {
        let d = self.log_weight_change(config, i, y);
        if d >= 0.0 {
            1.0
        } else {
            d.exp()
        }
    }

    /// Evenly spread starting configuration, blocks filled in proportion to
    /// their lengths.
    pub fn default_start(&self) -> Vec<f64> {
        match &self.domain {
            Domain::Full => (0..self.n)
                .map(|k| -1.0 + 2.0 * (k as f64 + 0.5) / self.n as f64)
                .collect(),
            Domain::Intervals(iv) => {
                let total: f64 = iv.iter().map(|(a, b)| b - a).sum();
                let mut out = Vec::with_capacity(self.n);
                for k in 0..self.n {
                    let mut t = total * (k as f64 + 0.5) / self.n as f64;
                    for &(a, b) in iv {
                        if t <= b - a {
                            out.push(a + t);
                            break;
                        }
                        t -= b - a;
                    }
                }
                out
            }
        }
    }
}

/// Per-chain mutable state: labelled positions, step sizes, counters, RNG.
///
/// Positions keep their labels for the life of the chain, so each particle
/// keeps its own proposal scale and every single-site update is reversible;
/// configurations are sorted when they are reported.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub positions: Vec<f64>,
    pub steps: Vec<f64>,
    pub accepted: Vec<u64>,
    pub proposed: u64,
    pub sweeps: u64,
    /// Counters for the moves between blocks of a multi-interval domain.
    pub jumps_proposed: u64,
    pub jumps_accepted: u64,
    rng: ChaCha20Rng,
    window_accepted: Vec<u64>,
    window_sweeps: u64,
}

impl ChainState {
    pub fn new(model: &GibbsModel, start: Vec<f64>, seed: u64) -> Result<Self> {
        model.validate()?;
        if start.len() != model.n {
            return Err(Error::InvalidArgument(format!(
                "start has {} particles, model has {}",
                start.len(),
                model.n
            )));
        }
        if !model.log_weight(&start).is_finite() {
            return Err(Error::InvalidArgument(
                "start configuration has zero density".into(),
            ));
        }
        let mut sorted = start.clone();
        sorted.sort_by(f64::total_cmp);
        let spread = (sorted[model.n - 1] - sorted[0]).max(1e-3);
        let step = (spread / model.n as f64).max(1e-6);
        Ok(Self {
            positions: start,
            steps: vec![step; model.n],
            accepted: vec![0; model.n],
            proposed: 0,
            sweeps: 0,
            jumps_proposed: 0,
            jumps_accepted: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
            window_accepted: vec![0; model.n],
            window_sweeps: 0,
        })
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.positions.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted.iter().sum::<u64>() as f64 / self.proposed as f64
    }

    /// One Metropolis sweep over all particles. With `adapt`, step sizes are
    /// nudged every 50 sweeps toward an acceptance rate in `[0.3, 0.5]`.
    ///
    /// On a domain of several intervals the sweep ends with `⌈N/8⌉` extra
    /// single-site proposals drawn uniformly over the whole domain. The
    /// proposal density is the same in both directions, so these moves keep
    /// detailed balance while letting block occupancies change.
    pub fn sweep(&mut self, model: &GibbsModel, adapt: bool) {
        for i in 0..model.n {
            let z: f64 = self.rng.sample(StandardNormal);
            let y = self.positions[i] + self.steps[i] * z;
            let u: f64 = self.rng.random();
            let d = model.log_weight_change(&self.positions, i, y);
            self.proposed += 1;
            if d >= 0.0 || u < d.exp() {
                self.positions[i] = y;
                self.accepted[i] += 1;
                self.window_accepted[i] += 1;
            }
        }
        if let Domain::Intervals(iv) = &model.domain {
            if iv.len() > 1 {
                self.jump(model, iv);
            }
        }
        self.sweeps += 1;
        self.window_sweeps += 1;
        if adapt && self.window_sweeps == 50 {
            for i in 0..model.n {
                let rate = self.window_accepted[i] as f64 / 50.0;
                if !(0.3..=0.5).contains(&rate) {
                    self.steps[i] *= 0.5 + rate;
                }
                self.window_accepted[i] = 0;
            }
            self.window_sweeps = 0;
        }
    }

    fn jump(&mut self, model: &GibbsModel, blocks: &[(f64, f64)]) {
        let total: f64 = blocks.iter().map(|(a, b)| b - a).sum();
        for _ in 0..model.n.div_ceil(8) {
            let i = self.rng.random_range(0..model.n);
            let mut t = self.rng.random::<f64>() * total;
            let mut y = blocks[blocks.len() - 1].1;
            for &(a, b) in blocks {
                if t <= b - a {
                    y = a + t;
                    break;
                }
                t -= b - a;
            }
            let u: f64 = self.rng.random();
            let d = model.log_weight_change(&self.positions, i, y);
            self.jumps_proposed += 1;
            if d >= 0.0 || u < d.exp() {
                self.positions[i] = y;
                self.jumps_accepted += 1;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SampleOptions {
    pub n_samples: usize,
    pub thinning: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub start: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub samples: Vec<Vec<f64>>,
    /// Post-burn-in acceptance rate.
    pub acceptance: f64,
    /// Integrated autocorrelation time of `Σλ_i`, in units of retained samples.
    pub tau_int: f64,
    /// For each block, how often it held a given number of particles.
    pub occupancy: Vec<BTreeMap<usize, usize>>,
}

/// Burn-in with adaptation, then `n_samples` configurations every
/// `thinning` sweeps with frozen step sizes. Deterministic in the seed.
pub fn sample(model: &GibbsModel, opts: &SampleOptions) -> Result<SampleRun> {
    model.validate()?;
    if opts.n_samples == 0 || opts.thinning == 0 {
        return Err(Error::InvalidArgument("need n_samples ≥ 1 and thinning ≥ 1".into()));
    }
    let start = opts.start.clone().unwrap_or_else(|| model.default_start());
    let mut chain = ChainState::new(model, start, opts.seed)?;
    for _ in 0..opts.burn_in {
        chain.sweep(model, true);
    }
    chain.accepted.iter_mut().for_each(|a| *a = 0);
    chain.proposed = 0;
    let mut samples = Vec::with_capacity(opts.n_samples);
    let mut occupancy = vec![BTreeMap::new(); model.domain.blocks()];
    for _ in 0..opts.n_samples {
        for _ in 0..opts.thinning {
            chain.sweep(model, false);
        }
        let s = chain.sorted();
        let mut counts = vec![0usize; model.domain.blocks()];
        for &x in &s {
            if let Some(b) = model.domain.block_of(x) {
                counts[b] += 1;
            }
        }
        for (b, c) in counts.into_iter().enumerate() {
            *occupancy[b].entry(c).or_insert(0) += 1;
        }
        samples.push(s);
    }
    let sums: Vec<f64> = samples.iter().map(|s| s.iter().sum()).collect();
    Ok(SampleRun {
        samples,
        acceptance: chain.acceptance_rate(),
        tau_int: integrated_autocorrelation(&sums),
        occupancy,
    })
}

/// Integrated autocorrelation time with a self-consistent window `M ≥ 5τ`.
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let c = series[..n - lag]
            .iter()
            .zip(&series[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / n as f64;
        tau += 2.0 * c / c0;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn flat(n: usize, beta: f64, domain: Domain) -> GibbsModel {
        GibbsModel::on_domain(Potential::new(vec![0.0], 0.0, "zero").unwrap(), beta, n, domain).unwrap()
    }

    #[test]
    fn log_weight_examples() {
        let m = flat(2, 2.0, Domain::Full);
        assert_relative_eq!(m.log_weight(&[0.2, 0.7]), 2.0 * 0.5f64.ln(), epsilon = 1e-15);
        assert_eq!(m.log_weight(&[0.3, 0.3]), f64::NEG_INFINITY);
        let q = GibbsModel::full(Potential::new(vec![0.0, 0.0, 0.5], 0.0, "q").unwrap(), 3.0, 1).unwrap();
        assert_relative_eq!(q.log_weight(&[2.0]), -1.5 * 2.0, epsilon = 1e-15);
        let mut blocks = flat(2, 2.0, Domain::Intervals(vec![(-2.0, -1.0), (1.0, 2.0)]));
        blocks.interaction = Interaction::WithinBlock;
        assert_eq!(blocks.log_weight(&[-1.5, 1.5]), 0.0);
        assert_eq!(blocks.log_weight(&[0.0, 1.5]), f64::NEG_INFINITY);
    }

    #[test]
    fn incremental_change_matches_full_difference() {
        let m = GibbsModel::full(Potential::quadratic(), 2.0, 20).unwrap();
        let config: Vec<f64> = (0..20).map(|k| -1.9 + 0.2 * k as f64).collect();
        for (i, y) in [(3, -1.23), (0, 2.5), (19, 0.05)] {
            let mut moved = config.clone();
            moved[i] = y;
            let direct = m.log_weight(&moved) - m.log_weight(&config);
            assert_relative_eq!(m.log_weight_change(&config, i, y), direct, epsilon = 1e-9);
        }
        let mut blocks = m.clone();
        blocks.domain = Domain::Intervals(vec![(-2.0, -0.05), (0.0, 2.0)]);
        blocks.interaction = Interaction::WithinBlock;
        let mut moved = config.clone();
        moved[9] = 1.11;
        let direct = blocks.log_weight(&moved) - blocks.log_weight(&config);
        assert_relative_eq!(blocks.log_weight_change(&config, 9, 1.11), direct, epsilon = 1e-9);
    }

    #[test]
    fn detailed_balance_on_two_particles() {
        let m = GibbsModel::full(Potential::quadratic(), 2.0, 2).unwrap();
        let pts = [-1.3, -0.4, 0.1, 0.75, 1.6];
        for &a in &pts {
            for &b in &pts {
                for &c in &pts {
                    if a == b || c == b {
                        continue;
                    }
                    let x = [a, b];
                    let y = [c, b];
                    let fwd = m.acceptance_probability(&x, 0, c);
                    let back = m.acceptance_probability(&y, 0, a);
                    let ratio = (m.log_weight(&y) - m.log_weight(&x)).exp();
                    assert_relative_eq!(fwd / back, ratio, max_relative = 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn log_weight_is_exchangeable(mut xs in prop::collection::vec(-3.0f64..3.0, 2..8), seed in 0u64..1000) {
            let m = GibbsModel::full(Potential::quadratic(), 1.5, xs.len()).unwrap();
            let a = m.log_weight(&xs);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for i in (1..xs.len()).rev() {
                let j = rng.random_range(0..=i);
                xs.swap(i, j);
            }
            let b = m.log_weight(&xs);
            prop_assert!(a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn uniform_target_is_recovered() {
        let m = flat(1, 1.0, Domain::Intervals(vec![(0.0, 1.0)]));
        let run = sample(
            &m,
            &SampleOptions { n_samples: 100_000, thinning: 1, burn_in: 500, seed: 11, start: None },
        )
        .unwrap();
        let mut xs: Vec<f64> = run.samples.iter().map(|s| s[0]).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| (x - k as f64 / n).abs().max((x - (k + 1) as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks <= 0.02, "KS {ks}");
        assert!(xs.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
        let b = 20;
        let len = xs.len() / b;
        let means: Vec<f64> = (0..b).map(|k| xs[k * len..(k + 1) * len].iter().sum::<f64>() / len as f64).collect();
        let mu = means.iter().sum::<f64>() / b as f64;
        let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (b - 1) as f64;
        (mu, (var / b as f64).sqrt())
    }

    #[test]
    fn symmetric_model_has_centred_sum_and_is_stationary() {
        let m = GibbsModel::full(Potential::quadratic(), 2.0, 16).unwrap();
        let run = sample(
            &m,
            &SampleOptions { n_samples: 4000, thinning: 2, burn_in: 1000, seed: 5, start: None },
        )
        .unwrap();
        let sums: Vec<f64> = run.samples.iter().map(|s| s.iter().sum()).collect();
        let (mu, se) = batch_mean_se(&sums);
        assert!(mu.abs() <= 3.0 * se, "{mu} ± {se}");
        let lw: Vec<f64> = run.samples.iter().map(|s| m.log_weight(s)).collect();
        let half = lw.len() / 2;
        let (m1, s1) = batch_mean_se(&lw[..half]);
        let (m2, s2) = batch_mean_se(&lw[half..]);
        assert!((m1 - m2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt());
        assert!(run.acceptance > 0.2 && run.acceptance < 0.6, "{}", run.acceptance);
    }

    #[test]
    fn determinism_and_seed_consistency() {
        let m = GibbsModel::full(Potential::quadratic(), 2.0, 8).unwrap();
        let opts = |seed| SampleOptions { n_samples: 3000, thinning: 2, burn_in: 500, seed, start: None };
        let a = sample(&m, &opts(1)).unwrap();
        let b = sample(&m, &opts(1)).unwrap();
        assert_eq!(a, b);
        let c = sample(&m, &opts(2)).unwrap();
        let stat = |r: &SampleRun| -> Vec<f64> { r.samples.iter().map(|s| s.iter().map(|x| x * x).sum()).collect() };
        let (ma, sa) = batch_mean_se(&stat(&a));
        let (mc, sc) = batch_mean_se(&stat(&c));
        assert!((ma - mc).abs() <= 3.0 * (sa * sa + sc * sc).sqrt());
    }

    #[test]
    fn jumps_balance_block_occupancy() {
        let mut m = GibbsModel::full(Potential::quadratic(), 2.0, 1).unwrap();
        m.domain = Domain::Intervals(vec![(-2.0, -0.5), (0.2, 3.0)]);
        let run = sample(&m, &SampleOptions { n_samples: 40_000, thinning: 1, burn_in: 200, seed: 8, start: None }).unwrap();
        let w = |a, b| crate::quadrature::adaptive(&|x: f64| (-0.5 * x * x).exp(), a, b, 1e-12).unwrap();
        let exact = w(-2.0, -0.5) / (w(-2.0, -0.5) + w(0.2, 3.0));
        let p = *run.occupancy[0].get(&1).unwrap() as f64 / 40_000.0;
        assert!((p - exact).abs() < 0.015, "{p} vs {exact}");
    }

    #[test]
    fn samples_stay_inside_domain() {
        let mut m = GibbsModel::full(Potential::quadratic(), 2.0, 12).unwrap();
        m.domain = Domain::Intervals(vec![(-1.0, -0.2), (0.3, 0.9)]);
        let run = sample(&m, &SampleOptions { n_samples: 200, thinning: 1, burn_in: 100, seed: 3, start: None }).unwrap();
        assert!(run.samples.iter().flatten().all(|&x| m.domain.block_of(x).is_some()));
        let total: usize = run.occupancy[0].values().sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn rejects_bad_models() {
        let mut m = flat(3, 1.0, Domain::Full);
        m.domain = Domain::Intervals(vec![]);
        assert!(matches!(m.validate(), Err(Error::EmptyDomain)));
        m.domain = Domain::Full;
        m.n = MAX_PARTICLES + 1;
        assert!(matches!(m.validate(), Err(Error::TooManyParticles(..))));
    }
}
