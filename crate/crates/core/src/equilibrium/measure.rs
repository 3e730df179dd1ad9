//! The equilibrium measure in square-root form.
//!
//! On cut `i` the density is `ρ(x) = −r(x)/(2π)·√((x−A_i)(B_i−x))·Q_i(x)` where
//! `Q_i` collects the (real) branch factors of the other cuts. Every integral
//! against `ρ` is taken in the variable `θ` of `x = A + (B−A)sin²θ`, where the
//! integrand becomes smooth.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::edges::{branch_product, cut_factor_real, sin2_angle, sin2_map, solve_edges, Cut};
use super::grid::{minimize_energy_on_grid, DiscreteMeasure, GridOptions, Initialization};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::{adaptive, adaptive_complex, gauss_legendre, graded_around, ChebyshevInterpolant};

pub const FORMAT: &str = "betalab-equilibrium";
pub const FORMAT_VERSION: u32 = 1;
/// Chebyshev nodes per cut used to tabulate `r`.
pub const R_NODES: usize = 32;

const INTEGRAL_TOL: f64 = 1e-15;

/// Axis-aligned rectangle enclosing the support, traversed clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub x_min: f64,
    pub x_max: f64,
    pub half_height: f64,
    pub nodes_per_panel: usize,
}

impl Contour {
    pub fn around(cuts: &[Cut]) -> Self {
        let (a, b) = (cuts[0].0, cuts[cuts.len() - 1].1);
        let pad = (0.5 * (b - a)).max(1.0);
        Self {
            x_min: a - pad,
            x_max: b + pad,
            half_height: pad,
            nodes_per_panel: 24,
        }
    }

    /// Same centre, every half-extent multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = 0.5 * (self.x_min + self.x_max);
        let h = 0.5 * (self.x_max - self.x_min) * factor;
        Self {
            x_min: c - h,
            x_max: c + h,
            half_height: self.half_height * factor,
            nodes_per_panel: self.nodes_per_panel,
        }
    }

    /// Twice as many quadrature nodes on every panel.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_panel: 2 * self.nodes_per_panel,
            ..self.clone()
        }
    }

    /// Distance from `z` to the rectangle boundary; negative outside.
    pub fn inner_distance(&self, z: Complex64) -> f64 {
        (z.re - self.x_min)
            .min(self.x_max - z.re)
            .min(self.half_height - z.im.abs())
    }

    pub fn encloses(&self, cuts: &[Cut]) -> bool {
        cuts.iter().all(|&(a, b)| a > self.x_min && b < self.x_max)
    }

    /// Clockwise `∮ f(ξ) dξ` with panels no longer than `panel`.
    pub fn integrate(&self, f: impl Fn(Complex64) -> Complex64, panel: f64) -> Complex64 {
        let h = self.half_height;
        let corners = [
            Complex64::new(self.x_min, h),
            Complex64::new(self.x_max, h),
            Complex64::new(self.x_max, -h),
            Complex64::new(self.x_min, -h),
        ];
        let rule = gauss_legendre(self.nodes_per_panel);
        let mut total = Complex64::new(0.0, 0.0);
        for s in 0..4 {
            let (p, q) = (corners[s], corners[(s + 1) % 4]);
            let d = q - p;
            let panels = ((d.norm() / panel).ceil() as usize).clamp(1, 100_000);
            for k in 0..panels {
                let lo = k as f64 / panels as f64;
                let hi = (k + 1) as f64 / panels as f64;
                total += rule.integrate_complex(|t| f(p + d * t), lo, hi) * d;
            }
        }
        total
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub cells: usize,
    pub tol: f64,
    pub max_iterations: usize,
    /// Oracle domain; chosen automatically when `None`.
    pub domain: Option<(f64, f64)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cells: 400,
            tol: 1e-7,
            max_iterations: 200_000,
            domain: None,
        }
    }
}

/// Spread of the effective potential over a support grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constancy {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Constancy {
    /// `(max − min)/|mean|`.
    pub fn relative_residual(&self) -> f64 {
        (self.max - self.min) / self.mean.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    potential: Potential,
    edges: Vec<Cut>,
    r_samples: Vec<ChebyshevInterpolant>,
    contour: Contour,
    filling_fractions: Vec<f64>,
    grid_fallback: DiscreteMeasure,
    edge_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    format: String,
    version: u32,
    measure: EquilibriumMeasure,
}

impl EquilibriumMeasure {
    /// Grid oracle, cluster detection, then Newton on the edge equations.
    pub fn solve(p: &Potential, opts: &SolveOptions) -> Result<Self> {
        let mut domain = match opts.domain {
            Some(d) => d,
            None => auto_domain(p),
        };
        let grid_opts = GridOptions {
            cells: opts.cells,
            tol: opts.tol,
            max_iterations: opts.max_iterations,
            init: Initialization::Uniform,
        };
        let mut oracle = minimize_energy_on_grid(|x| p.eval(x), domain, &grid_opts)?;
        if opts.domain.is_none() {
            // Grow the box until no mass sits against its walls.
            for _ in 0..8 {
                let w = &oracle.weights;
                let touching = w[..3].iter().chain(&w[w.len() - 3..]).any(|&x| x > 1e-8);
                if !touching {
                    break;
                }
                let (c, h) = (0.5 * (domain.0 + domain.1), 0.5 * (domain.1 - domain.0));
                domain = (c - 1.5 * h, c + 1.5 * h);
                oracle = minimize_energy_on_grid(|x| p.eval(x), domain, &grid_opts)?;
            }
        }
        let clusters = oracle.clusters();
        if clusters.is_empty() {
            return Err(Error::EdgeSolver("oracle produced no support cluster".into()));
        }
        let init: Vec<Cut> = clusters.iter().map(|c| (c.left_edge, c.right_edge)).collect();
        let report = || {
            clusters
                .iter()
                .map(|c| format!("[{:.4}, {:.4}] mass {:.4}", c.left_edge, c.right_edge, c.mass))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let sol = solve_edges(p, &init).map_err(|e| {
            Error::EdgeSolver(format!("{e}; oracle clusters: {}", report()))
        })?;
        let h = oracle.half_width * 2.0;
        for (cut, guess) in sol.cuts.iter().zip(&init) {
            if (cut.0 - guess.0).abs() > 4.0 * h || (cut.1 - guess.1).abs() > 4.0 * h {
                return Err(Error::EdgeSolver(format!(
                    "edges {:?} drifted away from oracle clusters: {}",
                    sol.cuts,
                    report()
                )));
            }
        }
        Self::from_edges(p.clone(), sol.cuts, oracle, sol.residual)
    }

    /// Assembles the measure from already solved edges.
    pub fn from_edges(
        potential: Potential,
        edges: Vec<Cut>,
        grid_fallback: DiscreteMeasure,
        edge_residual: f64,
    ) -> Result<Self> {
        if edges.is_empty() || edges.iter().any(|c| !(c.0 < c.1)) {
            return Err(Error::InvalidArgument(format!("invalid edges {edges:?}")));
        }
        if edges.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(Error::InvalidArgument(format!("overlapping cuts {edges:?}")));
        }
        let contour = Contour::around(&edges);
        let mut m = Self {
            potential,
            edges,
            r_samples: Vec::new(),
            contour,
            filling_fractions: Vec::new(),
            grid_fallback,
            edge_residual,
        };
        let mut samples = Vec::with_capacity(m.edges.len());
        for &(a, b) in &m.edges {
            let nodes = crate::quadrature::chebyshev_points(a, b, R_NODES);
            let values = nodes
                .iter()
                .map(|&x| m.r_value(Complex64::new(x, 0.0)).map(|r| r.re))
                .collect::<Result<Vec<f64>>>()?;
            samples.push(ChebyshevInterpolant { a, b, nodes, values });
        }
        m.r_samples = samples;
        m.filling_fractions = (0..m.q())
            .map(|i| m.partial_integral(i, FRAC_PI_2, |_| 1.0))
            .collect::<Result<_>>()?;
        Ok(m)
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn edges(&self) -> &[Cut] {
        &self.edges
    }

    pub fn q(&self) -> usize {
        self.edges.len()
    }

    pub fn filling_fractions(&self) -> &[f64] {
        &self.filling_fractions
    }

    pub fn grid_fallback(&self) -> &DiscreteMeasure {
        &self.grid_fallback
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn r_samples(&self) -> &[ChebyshevInterpolant] {
        &self.r_samples
    }

    pub fn edge_residual(&self) -> f64 {
        self.edge_residual
    }

    /// `[A₁, B_q]`.
    pub fn hull(&self) -> (f64, f64) {
        (self.edges[0].0, self.edges[self.q() - 1].1)
    }

    /// Smallest distance between consecutive cuts, `∞` for one cut.
    pub fn min_gap(&self) -> f64 {
        self.edges
            .windows(2)
            .map(|w| w[1].0 - w[0].1)
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy evaluating `r` on a different contour.
    pub fn with_contour(&self, contour: Contour) -> Result<Self> {
        if !contour.encloses(&self.edges) || contour.half_height <= 0.0 {
            return Err(Error::InvalidArgument("contour must enclose the support".into()));
        }
        Ok(Self {
            contour,
            ..self.clone()
        })
    }

    pub fn cut_index(&self, x: f64) -> Option<usize> {
        self.edges.iter().position(|&(a, b)| a <= x && x <= b)
    }

    /// `r(z) = (−i/2π)∮ V'(ξ)/∏s_j(ξ) dξ/(ξ − z)`, clockwise around the contour.
    pub fn r_value(&self, z: Complex64) -> Result<Complex64> {
        self.r_value_on(&self.contour, z)
    }

    pub fn r_value_on(&self, contour: &Contour, z: Complex64) -> Result<Complex64> {
        let d = contour.inner_distance(z);
        let scale = contour.x_max - contour.x_min;
        if !(d > 1e-9 * scale) {
            return Err(Error::InvalidArgument(format!(
                "point {z} is not strictly inside the contour; resize it"
            )));
        }
        let panel = d.min(contour.half_height);
        let integral = contour.integrate(
            |xi| self.potential.d1_complex(xi) / (branch_product(xi, &self.edges) * (xi - z)),
            panel,
        );
        Ok(Complex64::new(0.0, -1.0 / (2.0 * PI)) * integral)
    }

    /// Fast `r` on cut `i` from the Chebyshev table.
    fn r_on_cut(&self, i: usize, x: f64) -> f64 {
        self.r_samples[i].eval(x)
    }

    /// Branch factors of every cut except `i`, real on cut `i`.
    fn other_factors(&self, i: usize, x: f64) -> f64 {
        self.edges
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, &(a, b))| cut_factor_real(x, a, b).re)
            .product()
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.cut_index(x) {
            Some(i) => {
                let (a, b) = self.edges[i];
                let root = ((x - a) * (b - x)).max(0.0).sqrt();
                -self.r_on_cut(i, x) / (2.0 * PI) * root * self.other_factors(i, x)
            }
            None => 0.0,
        }
    }

    /// `ρ(x(θ))·dx/dθ` on cut `i`.
    fn theta_weight(&self, i: usize, theta: f64) -> (f64, f64) {
        let (a, b) = self.edges[i];
        let (s, c) = theta.sin_cos();
        let x = a + (b - a) * s * s;
        let sc = (b - a) * s * c;
        let w = -self.r_on_cut(i, x) / PI * sc * sc * self.other_factors(i, x);
        (x, w)
    }

    /// `∫_0^φ f(x(θ))ρ(x(θ))x'(θ) dθ` on cut `i`.
    fn partial_integral(&self, i: usize, phi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        if phi <= 0.0 {
            return Ok(0.0);
        }
        adaptive(
            &|t| {
                let (x, w) = self.theta_weight(i, t);
                f(x) * w
            },
            0.0,
            phi,
            INTEGRAL_TOL,
        )
        .map_err(Error::Quadrature)
    }

    fn partial(&self, i: usize, phi: f64) -> f64 {
        self.partial_integral(i, phi, |_| 1.0)
            .unwrap_or_else(|_| gauss_legendre(64).integrate(|t| self.theta_weight(i, t).1, 0.0, phi))
    }

    /// `∫_{A_i}^{B_i} f dρ` over cut `i`.
    pub fn integrate_on_cut(&self, i: usize, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.partial_integral(i, FRAC_PI_2, f)
    }

    /// Nodes `x(θ_k)` and weights `ρ(x)x'(θ)w_k` of an `n`-point rule on cut `i`.
    pub fn cut_rule(&self, i: usize, n: usize) -> Vec<(f64, f64)> {
        gauss_legendre(n)
            .mapped(0.0, FRAC_PI_2)
            .map(|(t, w)| {
                let (x, d) = self.theta_weight(i, t);
                (x, d * w)
            })
            .collect()
    }

    /// `∫ h dρ`.
    pub fn expectation(&self, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        (0..self.q())
            .map(|i| self.partial_integral(i, FRAC_PI_2, h))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let mut cum = 0.0f64;
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if x < a {
                return cum.clamp(0.0, 1.0);
            }
            if x < b {
                return (cum + self.partial(i, sin2_angle(a, b, x))).clamp(0.0, 1.0);
            }
            cum += self.filling_fractions[i];
        }
        1.0
    }

    /// `∫_{−∞}^x t ρ(t) dt`.
    pub fn first_moment_below(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if x <= a {
                break;
            }
            let phi = if x >= b { FRAC_PI_2 } else { sin2_angle(a, b, x) };
            acc += self
                .partial_integral(i, phi, |t| t)
                .unwrap_or_else(|_| gauss_legendre(64).integrate(|t| {
                    let (y, w) = self.theta_weight(i, t);
                    y * w
                }, 0.0, phi));
        }
        acc
    }

    /// Smallest `θ` with `∫_0^θ(weight on cut i) = target`.
    fn invert_on_cut(&self, i: usize, target: f64) -> f64 {
        let total = self.filling_fractions[i];
        if target <= 0.0 {
            return 0.0;
        }
        if target >= total {
            return FRAC_PI_2;
        }
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        let mut theta = FRAC_PI_2 * target / total;
        for _ in 0..200 {
            let g = self.partial(i, theta) - target;
            if g > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let w = self.theta_weight(i, theta).1;
            let mut next = if w > 0.0 { theta - g / w } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - theta).abs() <= 1e-16 || hi - lo <= 1e-16 {
                return next;
            }
            theta = next;
        }
        theta
    }

    /// `inf{x : F(x) ≥ p}`; a level sitting exactly on a gap plateau maps to
    /// the left end of the gap.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        if p == 0.0 {
            return self.edges[0].0;
        }
        if p == 1.0 {
            return self.edges[self.q() - 1].1;
        }
        let mut cum = 0.0;
        let q = self.q();
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            let next = cum + self.filling_fractions[i];
            if p <= next || i == q - 1 {
                if p >= next {
                    return b;
                }
                let theta = self.invert_on_cut(i, p - cum);
                return sin2_map(a, b, theta).0;
            }
            cum = next;
        }
        self.edges[q - 1].1
    }

    /// `η_k = F^{-1}(k/N)`, `k = 1..N`.
    pub fn classical_locations(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.quantile(k as f64 / n as f64)).collect()
    }

    /// `F^{-1}((k − 1/2)/N)`, `k = 1..N`.
    pub fn half_offset_locations(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.quantile((k as f64 - 0.5) / n as f64)).collect()
    }

    /// Quantiles of `ρ/R_i` restricted to cut `i` (zero-based) at levels `k/n`.
    pub fn cut_classical_locations(&self, i: usize, n: usize) -> Result<Vec<f64>> {
        if i >= self.q() {
            return Err(Error::InvalidArgument(format!("cut index {i} out of range")));
        }
        let (a, b) = self.edges[i];
        let r = self.filling_fractions[i];
        Ok((1..=n)
            .map(|k| {
                if k == n {
                    b
                } else {
                    sin2_map(a, b, self.invert_on_cut(i, r * k as f64 / n as f64)).0
                }
            })
            .collect())
    }

    /// `∫ ln|x − y| ρ(y) dy` over the cuts selected by `include`.
    pub fn log_potential_over(&self, x: f64, include: impl Fn(usize) -> bool) -> f64 {
        let mut acc = 0.0;
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if !include(i) {
                continue;
            }
            let star = sin2_angle(a, b, x);
            acc += graded_around(
                |t| {
                    let (y, w) = self.theta_weight(i, t);
                    let d = (x - y).abs();
                    if d == 0.0 || w == 0.0 {
                        0.0
                    } else {
                        d.ln() * w
                    }
                },
                0.0,
                FRAC_PI_2,
                star,
            );
        }
        acc
    }

    /// `H(x) = V(x) − 2∫ln|x − y|ρ(y)dy`.
    pub fn effective_potential(&self, x: f64) -> f64 {
        self.potential.eval(x) - 2.0 * self.log_potential_over(x, |_| true)
    }

    /// `H` sampled at `points` interior points spread over the cuts in
    /// proportion to their lengths.
    pub fn constancy(&self, points: usize) -> Constancy {
        let total: f64 = self.edges.iter().map(|c| c.1 - c.0).sum();
        let mut vals = Vec::with_capacity(points);
        for &(a, b) in &self.edges {
            let n = (((b - a) / total) * points as f64).round().max(1.0) as usize;
            for k in 0..n {
                let x = a + (b - a) * (k as f64 + 0.5) / n as f64;
                vals.push(self.effective_potential(x));
            }
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        Constancy {
            mean,
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Distance from `z` to the support.
    pub fn support_distance(&self, z: Complex64) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| {
                let x = z.re.clamp(a, b);
                (z - x).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `m(z) = ∫ρ(t)/(z − t) dt`.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        let d = self.support_distance(z);
        if !(d >= 1e-12) {
            return Err(Error::NearSupport(z, d));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.q() {
            acc += adaptive_complex(
                &|t| {
                    let (y, w) = self.theta_weight(i, t);
                    Complex64::new(w, 0.0) / (z - y)
                },
                0.0,
                FRAC_PI_2,
                1e-15,
            )
            .map_err(Error::Quadrature)?;
        }
        Ok(acc)
    }

    /// `n` points inside the contour at height `±half_height/2`, alternating
    /// above and below the axis.
    pub fn probe_points(&self, n: usize) -> Vec<Complex64> {
        let c = &self.contour;
        (0..n)
            .map(|k| {
                let t = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.5 };
                let x = c.x_min + (c.x_max - c.x_min) * (0.1 + 0.8 * t);
                let y = if k % 2 == 0 { 0.5 } else { -0.5 } * c.half_height;
                Complex64::new(x, y)
            })
            .collect()
    }

    /// Largest `|2m(z) − V'(z) − r(z)∏s_j(z)|` over `points`.
    pub fn check_rh_identity(&self, points: &[Complex64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &z in points {
            let lhs = self.stieltjes(z)? * 2.0 - self.potential.d1_complex(z);
            let rhs = self.r_value(z)? * branch_product(z, &self.edges);
            worst = worst.max((lhs - rhs).norm());
        }
        Ok(worst)
    }

    /// Sup-distance between the oracle and square-root distribution functions,
    /// probed at every cell boundary and centre of the oracle grid.
    pub fn oracle_cdf_error(&self) -> f64 {
        let g = &self.grid_fallback;
        g.grid
            .iter()
            .flat_map(|&c| [c - g.half_width, c, c + g.half_width])
            .map(|x| (g.cdf(x) - self.cdf(x)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&MeasureFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            measure: self.clone(),
        })
        .map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.format != FORMAT {
            return Err(Error::Parse(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported equilibrium file version {}",
                file.version
            )));
        }
        Ok(file.measure)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Box around the region where `V` has not yet beaten the logarithm by a
/// comfortable margin.
fn auto_domain(p: &Potential) -> (f64, f64) {
    let (xmin, vmin) = p.minimum().unwrap_or((0.0, p.eval(0.0) - p.offset()));
    let excess = |x: f64| p.eval(x) - p.offset() - vmin - 4.0 - 2.0 * (1.0 + (x - xmin).abs()).ln();
    let step = 0.01;
    let walk = |dir: f64| {
        let mut x = xmin;
        let mut last_negative = xmin;
        for _ in 0..1_000_000 {
            x += dir * step;
            if excess(x) <= 0.0 {
                last_negative = x;
            } else if (x - last_negative).abs() > 1.0 {
                break;
            }
        }
        last_negative + dir * step
    };
    let lo = walk(-1.0);
    let hi = walk(1.0);
    (lo, hi)
}
