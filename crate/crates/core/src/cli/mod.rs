//! Config-driven experiment runner behind the `betalab` binary.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{DiagnosticConfig, ExperimentConfig, ModelKind};

use crate::diagnostics::{
    self, escape_fraction, fit_power_law, fluctuation_stat, loop_residual, mean_and_se, median,
    rigidity_stat_with, stieltjes_gap, wasserstein1, ScalingFit,
};
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::sampler::{
    self, build_cut_model, build_decomposed_model, build_restricted_model, default_kappa, delta_h_direct,
    read_archive, tridiagonal_sample_with, write_archive, ArchiveHeader, GibbsModel, SampleOptions,
};

pub const EQUILIBRIUM_FILE: &str = "equilibrium.json";
pub const SUMMARY_FILE: &str = "eqm_summary.json";
pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.csv";

/// Process exit code for an error: 2 for configuration and input problems,
/// 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse(_)
        | Error::HashMismatch { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidKappa { .. }
        | Error::EmptyDomain
        | Error::TooManyParticles(..)
        | Error::Io(_) => 2,
        Error::InvalidOrder(_)
        | Error::NonConvergence { .. }
        | Error::EdgeSolver(_)
        | Error::NearSupport(..)
        | Error::Collision(..)
        | Error::NotDifferentiable(_)
        | Error::NonzeroMass(_)
        | Error::Quadrature(_) => 3,
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed_offset: u64,
    pub exact: bool,
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            seed_offset: 0,
            exact: false,
            threads: None,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::Config(e.to_string()))
    }

    fn archive_path(&self, n: usize, seed: u64) -> PathBuf {
        self.out.join("samples").join(format!("N{n}_seed{seed}.txt"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub label: String,
    pub q: usize,
    pub edges: Vec<(f64, f64)>,
    pub filling_fractions: Vec<f64>,
    /// `(max − min)/|mean|` of the effective potential on the support.
    pub constancy_residual: f64,
    /// `H − mean H` at each gap midpoint.
    pub gap_excess: Vec<f64>,
    pub rh_residual: f64,
    pub oracle_cdf_error: f64,
    pub edge_residual: f64,
}

impl EquilibriumSummary {
    pub fn of(eqm: &EquilibriumMeasure) -> Result<Self> {
        let c = eqm.constancy(400);
        let gap_excess = eqm
            .edges()
            .windows(2)
            .map(|w| eqm.effective_potential(0.5 * (w[0].1 + w[1].0)) - c.mean)
            .collect();
        Ok(Self {
            label: eqm.potential().label().to_string(),
            q: eqm.q(),
            edges: eqm.edges().to_vec(),
            filling_fractions: eqm.filling_fractions().to_vec(),
            constancy_residual: c.relative_residual(),
            gap_excess,
            rh_residual: eqm.check_rh_identity(&eqm.probe_points(20))?,
            oracle_cdf_error: eqm.oracle_cdf_error(),
            edge_residual: eqm.edge_residual(),
        })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Solves the equilibrium problem and writes the measure and its summary.
pub fn cmd_eqm(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<EquilibriumSummary> {
    let p = cfg.potential.build()?;
    let eqm = EquilibriumMeasure::solve(&p, &cfg.equilibrium.solve_options())?;
    fs::create_dir_all(&opts.out)?;
    eqm.save(&opts.out.join(EQUILIBRIUM_FILE))?;
    let summary = EquilibriumSummary::of(&eqm)?;
    write_json(&opts.out.join(SUMMARY_FILE), &summary)?;
    info!("equilibrium: q = {}, edges {:?}", summary.q, summary.edges);
    Ok(summary)
}

/// The stored measure, which must belong to the configured potential.
pub fn load_equilibrium(cfg: &ExperimentConfig, out: &Path) -> Result<EquilibriumMeasure> {
    let path = out.join(EQUILIBRIUM_FILE);
    if !path.exists() {
        return Err(Error::Config(format!(
            "{} not found; run `betalab eqm` first",
            path.display()
        )));
    }
    let eqm = EquilibriumMeasure::load(&path)?;
    if *eqm.potential() != cfg.potential.build()? {
        return Err(Error::Config(format!(
            "{} was solved for a different potential",
            path.display()
        )));
    }
    Ok(eqm)
}

pub fn build_model(cfg: &ExperimentConfig, eqm: &EquilibriumMeasure, n: usize) -> Result<GibbsModel> {
    let kappa = || cfg.kappa.unwrap_or_else(|| default_kappa(eqm));
    match cfg.model {
        ModelKind::Full => GibbsModel::full(cfg.potential.build()?, cfg.beta, n),
        ModelKind::Restricted => build_restricted_model(eqm, cfg.beta, n, cfg.delta.unwrap_or(0.0)),
        ModelKind::Decomposed => build_decomposed_model(eqm, cfg.beta, n, kappa()),
        ModelKind::Cut(i) => build_cut_model(eqm, cfg.beta, i, n, cfg.cut_scale, kappa()),
    }
}

/// Equilibrium quantiles at levels `(k − ½)/N`, restricted to cut `i` for
/// cut models.
fn start_positions(cfg: &ExperimentConfig, eqm: &EquilibriumMeasure, n: usize) -> Vec<f64> {
    match cfg.model {
        ModelKind::Cut(i) => {
            let before: f64 = eqm.filling_fractions()[..i].iter().sum();
            let r = eqm.filling_fractions()[i];
            (1..=n)
                .map(|k| eqm.quantile(before + r * (k as f64 - 0.5) / n as f64))
                .collect()
        }
        _ => eqm.half_offset_locations(n),
    }
}

/// Reference locations and bulk indices for the rigidity statistic.
fn rigidity_reference(
    cfg: &ExperimentConfig,
    eqm: &EquilibriumMeasure,
    n: usize,
    alpha: Option<f64>,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let min_r = eqm.filling_fractions().iter().copied().fold(f64::INFINITY, f64::min);
    let alpha = alpha.unwrap_or(0.1 * min_r);
    match cfg.model {
        ModelKind::Cut(i) => {
            let lo = ((alpha * n as f64).ceil() as usize).max(1);
            let hi = ((1.0 - alpha) * n as f64).floor() as usize;
            let mut bulk: Vec<usize> = (lo..=hi.min(n)).collect();
            if bulk.is_empty() {
                bulk = (1..=n).collect();
            }
            Ok((eqm.cut_classical_locations(i, n)?, bulk))
        }
        _ => Ok((eqm.classical_locations(n), diagnostics::bulk_indices(eqm, n, alpha))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub seed: u64,
    pub exact: bool,
    pub acceptance: Option<f64>,
    pub tau_int: Option<f64>,
    pub occupancy: Vec<BTreeMap<usize, usize>>,
}

fn use_exact(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<bool> {
    if !opts.exact {
        return Ok(false);
    }
    let ok = cfg.tridiagonal_eligible()?;
    if !ok {
        warn!("--exact applies only to the full model with V = x²/2; using MCMC");
    }
    Ok(ok)
}

fn cells(cfg: &ExperimentConfig, opts: &RunOptions) -> Vec<(usize, u64)> {
    cfg.n
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s.wrapping_add(opts.seed_offset))))
        .collect()
}

/// Draws one archive per `(N, seed)` cell.
pub fn cmd_sample(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<SampleSummary>> {
    let exact = use_exact(cfg, opts)?;
    let eqm = load_equilibrium(cfg, &opts.out)?;
    fs::create_dir_all(opts.out.join("samples"))?;
    let pool = opts.pool()?;
    pool.install(|| {
        cells(cfg, opts)
            .par_iter()
            .map(|&(n, seed)| {
                let model = build_model(cfg, &eqm, n)?;
                let s = &cfg.sampling;
                let (samples, summary) = if exact {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    let samples = (0..s.samples)
                        .map(|_| tridiagonal_sample_with(cfg.beta, n, &mut rng))
                        .collect::<Result<Vec<_>>>()?;
                    let summary = SampleSummary {
                        n,
                        seed,
                        exact,
                        acceptance: None,
                        tau_int: None,
                        occupancy: Vec::new(),
                    };
                    (samples, summary)
                } else {
                    let run = sampler::sample(
                        &model,
                        &SampleOptions {
                            n_samples: s.samples,
                            thinning: s.thinning,
                            burn_in: s.burn_in,
                            seed,
                            start: Some(start_positions(cfg, &eqm, n)),
                        },
                    )?;
                    info!(
                        "N = {n}, seed = {seed}: acceptance {:.3}, tau_int {:.2}",
                        run.acceptance, run.tau_int
                    );
                    let summary = SampleSummary {
                        n,
                        seed,
                        exact,
                        acceptance: Some(run.acceptance),
                        tau_int: Some(run.tau_int),
                        occupancy: run.occupancy,
                    };
                    (run.samples, summary)
                };
                let header = ArchiveHeader {
                    model_hash: model.hash(),
                    seed,
                    beta: cfg.beta,
                    n,
                    burn_in: if exact { 0 } else { s.burn_in },
                    thinning: if exact { 1 } else { s.thinning },
                };
                fs::write(opts.archive_path(n, seed), write_archive(&header, &samples))?;
                Ok(summary)
            })
            .collect()
    })
}

/// One row of the flat table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub statistic: String,
    pub n: Vec<usize>,
    /// Median over seeds at each `N`.
    pub medians: Vec<f64>,
    pub fit: Option<ScalingFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub equilibrium: EquilibriumSummary,
    pub records: Vec<Record>,
    pub scaling: Vec<ScalingRecord>,
}

fn stat_se(values: &[f64]) -> (f64, Option<f64>) {
    let (m, se) = mean_and_se(values, 20);
    (m, se.is_finite().then_some(se))
}

fn diagnose_cell(
    cfg: &ExperimentConfig,
    eqm: &EquilibriumMeasure,
    model: &GibbsModel,
    samples: &[Vec<f64>],
    d: &DiagnosticConfig,
) -> Result<(f64, Option<f64>)> {
    let n = model.n;
    let cut_model = matches!(cfg.model, ModelKind::Cut(_));
    if cut_model && !matches!(d, DiagnosticConfig::Rigidity { .. } | DiagnosticConfig::Escape { .. }) {
        return Err(Error::Config(format!(
            "diagnostic `{}` is not defined for single-cut models",
            d.name()
        )));
    }
    Ok(match d {
        DiagnosticConfig::Rigidity { alpha } => {
            let (eta, bulk) = rigidity_reference(cfg, eqm, n, *alpha)?;
            stat_se(&rigidity_stat_with(samples, &eta, &bulk).per_sample)
        }
        DiagnosticConfig::Fluctuation { h, .. } => {
            let f = fluctuation_stat(samples, eqm, h)?;
            let m = f.values.len() as f64;
            let se = (m > 1.0).then(|| f.variance * (2.0 / (m - 1.0)).sqrt());
            (f.variance, se)
        }
        DiagnosticConfig::StieltjesGap { z } => {
            (stieltjes_gap(samples, eqm, &DiagnosticConfig::z_points(z))?, None)
        }
        DiagnosticConfig::Loop { phi } => {
            let l = loop_residual(samples, model, phi)?;
            (l.mean, l.se.is_finite().then_some(l.se))
        }
        DiagnosticConfig::Wasserstein {} => {
            let w: Vec<f64> = samples.iter().map(|s| wasserstein1(s, eqm)).collect();
            stat_se(&w)
        }
        DiagnosticConfig::Escape { delta } => {
            let p = escape_fraction(samples, eqm, *delta);
            (p, Some((p * (1.0 - p) / samples.len() as f64).sqrt()))
        }
        DiagnosticConfig::DeltaH {} => {
            let v = samples
                .iter()
                .map(|s| delta_h_direct(model, s))
                .collect::<Result<Vec<f64>>>()?;
            stat_se(&v)
        }
    })
}

/// Reads every archive, checks it against the configuration and computes
/// the diagnostics. Writes the report, the flat table and plot series.
pub fn cmd_diagnose(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    let eqm = load_equilibrium(cfg, &opts.out)?;
    let equilibrium = EquilibriumSummary::of(&eqm)?;
    let labels = cfg.statistic_labels();
    let pool = opts.pool()?;
    let per_cell: Vec<Vec<Record>> = pool.install(|| {
        cells(cfg, opts)
            .par_iter()
            .map(|&(n, seed)| {
                if cfg.diagnostics.is_empty() {
                    return Ok(Vec::new());
                }
                let model = build_model(cfg, &eqm, n)?;
                let path = opts.archive_path(n, seed);
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let (header, samples) = read_archive(&text)?;
                if header.model_hash != model.hash() {
                    return Err(Error::HashMismatch {
                        expected: model.hash(),
                        found: header.model_hash,
                    });
                }
                if header.seed != seed || header.n != n {
                    return Err(Error::Config(format!(
                        "{} holds N = {}, seed = {}",
                        path.display(),
                        header.n,
                        header.seed
                    )));
                }
                cfg.diagnostics
                    .iter()
                    .zip(&labels)
                    .map(|(d, label)| {
                        let (value, stderr) = diagnose_cell(cfg, &eqm, &model, &samples, d)?;
                        Ok(Record {
                            model: cfg.model.to_string(),
                            n,
                            beta: cfg.beta,
                            seed,
                            statistic: label.clone(),
                            value,
                            stderr,
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let records: Vec<Record> = per_cell.into_iter().flatten().collect();
    let scaling = scaling_fits(cfg, &records);
    let report = ExperimentReport {
        config_hash: cfg.hash(),
        equilibrium,
        records,
        scaling,
    };
    write_outputs(&opts.out, &report)?;
    Ok(report)
}

fn scaling_fits(cfg: &ExperimentConfig, records: &[Record]) -> Vec<ScalingRecord> {
    cfg.statistic_labels()
        .into_iter()
        .map(|name| {
            let name = &name;
            let medians: Vec<f64> = cfg
                .n
                .iter()
                .map(|&n| {
                    let v: Vec<f64> = records
                        .iter()
                        .filter(|r| r.statistic == *name && r.n == n)
                        .map(|r| r.value)
                        .collect();
                    median(&v)
                })
                .collect();
            let ns: Vec<f64> = cfg.n.iter().map(|&n| n as f64).collect();
            ScalingRecord {
                statistic: name.clone(),
                n: cfg.n.clone(),
                fit: fit_power_law(&ns, &medians).ok(),
                medians,
            }
        })
        .collect()
}

pub fn write_table(path: &Path, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_outputs(out: &Path, report: &ExperimentReport) -> Result<()> {
    fs::create_dir_all(out.join("plots"))?;
    write_json(&out.join(REPORT_FILE), report)?;
    write_table(&out.join(TABLE_FILE), &report.records)?;
    for s in &report.scaling {
        let mut text = String::from("# N median\n");
        for (n, m) in s.n.iter().zip(&s.medians) {
            text.push_str(&format!("{n} {m:?}\n"));
        }
        fs::write(out.join("plots").join(format!("{}.dat", s.statistic)), text)?;
    }
    Ok(())
}

/// `eqm`, `sample` and `diagnose` in sequence.
pub fn cmd_scaling(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    cmd_eqm(cfg, opts)?;
    cmd_sample(cfg, opts)?;
    cmd_diagnose(cfg, opts)
}
