//! Discrete energy minimisation over the probability simplex.
//!
//! The minimiser of `E(w) = Σ V(xᵢ)wᵢ − Σᵢⱼ wᵢwⱼ K(xᵢ, xⱼ)` on a uniform grid is
//! the reference ("oracle") solution for the equilibrium measure. `K` is the
//! smoothed log kernel with `ε` equal to half the grid spacing, so the diagonal
//! is finite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::kernel::smoothed_log_kernel;
use crate::error::{Error, Result};

/// Weights below this are treated as empty cells when clustering.
pub const EMPTY_WEIGHT: f64 = 1e-8;
/// Minimum run of empty cells that separates two clusters.
pub const MIN_GAP_CELLS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// Half-width of every cell.
    pub half_width: f64,
}

/// A contiguous run of occupied cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub first: usize,
    pub last: usize,
    pub left_edge: f64,
    pub right_edge: f64,
    pub mass: f64,
}

impl DiscreteMeasure {
    /// Distribution function treating each cell as uniformly filled.
    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.half_width;
        let mut acc = 0.0;
        for (&c, &w) in self.grid.iter().zip(&self.weights) {
            if x >= c + h {
                acc += w;
            } else if x > c - h {
                acc += w * (x - (c - h)) / (2.0 * h);
                break;
            } else {
                break;
            }
        }
        acc.min(1.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn clusters(&self) -> Vec<Cluster> {
        let h = self.half_width;
        let mut out: Vec<Cluster> = Vec::new();
        let mut empty_run = usize::MAX;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > EMPTY_WEIGHT {
                match out.last_mut() {
                    Some(c) if empty_run < MIN_GAP_CELLS => {
                        c.last = i;
                        c.right_edge = self.grid[i] + h;
                        c.mass += w;
                    }
                    _ => out.push(Cluster {
                        first: i,
                        last: i,
                        left_edge: self.grid[i] - h,
                        right_edge: self.grid[i] + h,
                        mass: w,
                    }),
                }
                empty_run = 0;
            } else {
                empty_run = empty_run.saturating_add(1);
                if let Some(c) = out.last_mut() {
                    if empty_run < MIN_GAP_CELLS {
                        c.mass += w;
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Initialization {
    Uniform,
    Random(u64),
}

#[derive(Clone, Debug)]
pub struct GridOptions {
    pub cells: usize,
    /// KKT tolerance on the discrete effective potential.
    pub tol: f64,
    pub max_iterations: usize,
    pub init: Initialization,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            cells: 400,
            tol: 1e-7,
            max_iterations: 200_000,
            init: Initialization::Uniform,
        }
    }
}

/// Cell centres of a uniform partition of `[a, b]` into `m` cells.
pub fn cell_centres(a: f64, b: f64, m: usize) -> Vec<f64> {
    let h = (b - a) / m as f64;
    (0..m).map(|i| a + (i as f64 + 0.5) * h).collect()
}

struct Problem {
    v: Vec<f64>,
    kernel: Vec<f64>,
    m: usize,
}

impl Problem {
    fn k_times(&self, w: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.kernel[i * self.m..(i + 1) * self.m];
            *o = row.iter().zip(w).map(|(k, x)| k * x).sum();
        }
    }

    /// Energy and gradient `V − 2Kw`.
    fn energy_and_gradient(&self, w: &[f64], kw: &mut [f64], grad: &mut [f64]) -> f64 {
        self.k_times(w, kw);
        let mut e = 0.0;
        for i in 0..self.m {
            e += self.v[i] * w[i] - w[i] * kw[i];
            grad[i] = self.v[i] - 2.0 * kw[i];
        }
        e
    }
}

/// Spread between the largest gradient on the support and the global minimum
/// gradient. Zero exactly at the constrained minimiser.
pub fn kkt_residual(weights: &[f64], grad: &[f64]) -> f64 {
    let floor = grad.iter().copied().fold(f64::INFINITY, f64::min);
    let top = weights
        .iter()
        .zip(grad)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, g)| *g)
        .fold(f64::NEG_INFINITY, f64::max);
    top - floor
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64], out: &mut [f64]) {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
}

/// Minimises the discrete log-gas energy of the external field `v` on a
/// uniform grid of `[a, b]` by accelerated projected gradient with Armijo
/// backtracking and adaptive restart, finished by an active-set solve on the
/// detected support.
pub fn minimize_energy_on_grid(
    v: impl Fn(f64) -> f64,
    domain: (f64, f64),
    opts: &GridOptions,
) -> Result<DiscreteMeasure> {
    let (a, b) = domain;
    if !(b > a) || opts.cells < 50 {
        return Err(Error::InvalidArgument(format!(
            "grid minimisation needs a < b and at least 50 cells (got [{a}, {b}], {})",
            opts.cells
        )));
    }
    let m = opts.cells;
    let grid = cell_centres(a, b, m);
    let eps = 0.5 * (b - a) / m as f64;
    let mut kernel = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let k = smoothed_log_kernel(grid[i], grid[j], eps);
            kernel[i * m + j] = k;
            kernel[j * m + i] = k;
        }
    }
    let problem = Problem {
        v: grid.iter().map(|&x| v(x)).collect(),
        kernel,
        m,
    };

    let mut w = match opts.init {
        Initialization::Uniform => vec![1.0 / m as f64; m],
        Initialization::Random(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        }
    };

    let mut y = w.clone();
    let mut kw = vec![0.0; m];
    let mut grad_y = vec![0.0; m];
    let mut grad_w = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut step_in = vec![0.0; m];
    let mut kw_trial = vec![0.0; m];
    let mut grad_trial = vec![0.0; m];
    let mut t = 1.0f64;
    let mut lip = 1.0f64;
    let mut e_w = problem.energy_and_gradient(&w, &mut kw, &mut grad_w);

    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let e_y = problem.energy_and_gradient(&y, &mut kw, &mut grad_y);
        let e_trial = loop {
            for i in 0..m {
                step_in[i] = y[i] - grad_y[i] / lip;
            }
            project_simplex(&step_in, &mut trial);
            let e = problem.energy_and_gradient(&trial, &mut kw_trial, &mut grad_trial);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for i in 0..m {
                let d = trial[i] - y[i];
                lin += grad_y[i] * d;
                sq += d * d;
            }
            if e <= e_y + lin + 0.5 * lip * sq + 1e-15 * e_y.abs() || lip > 1e18 {
                break e;
            }
            lip *= 2.0;
        };

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if e_trial > e_w + 1e-15 * e_w.abs() {
            // Restart momentum from the last iterate.
            t = 1.0;
            y.copy_from_slice(&w);
        } else {
            let beta = (t - 1.0) / t_next;
            for i in 0..m {
                let next = trial[i];
                y[i] = next + beta * (next - w[i]);
            }
            w.copy_from_slice(&trial);
            grad_w.copy_from_slice(&grad_trial);
            e_w = e_trial;
            t = t_next;
            // Let the step grow back after backtracking.
            lip *= 0.9;
        }

        if iterations % 25 == 0 {
            if kkt_residual(&w, &grad_w) <= opts.tol {
                break;
            }
            if iterations % 200 == 0 {
                if let Some((polished, r)) = active_set_polish(&problem, &w, opts.tol) {
                    w = polished;
                    if r <= opts.tol {
                        break;
                    }
                    e_w = problem.energy_and_gradient(&w, &mut kw, &mut grad_w);
                    y.copy_from_slice(&w);
                    t = 1.0;
                }
            }
        }
    }
    let residual = {
        problem.energy_and_gradient(&w, &mut kw, &mut grad_w);
        kkt_residual(&w, &grad_w)
    };
    if residual > opts.tol {
        let gradient_norm = grad_w.iter().map(|g| g * g).sum::<f64>().sqrt();
        return Err(Error::NonConvergence {
            iterations,
            residual,
            gradient_norm,
        });
    }
    Ok(DiscreteMeasure {
        grid,
        weights: w,
        half_width: eps,
    })
}

/// Primal active-set method started from the feasible point `w`: solve the
/// equality-constrained problem on the working set, step toward it as far as
/// feasibility allows (dropping cells that hit zero), and add the most
/// violated outside cell once the working-set problem is solved.
fn active_set_polish(problem: &Problem, w: &[f64], tol: f64) -> Option<(Vec<f64>, f64)> {
    let m = problem.m;
    let mut current = w.to_vec();
    let mut support: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0).collect();
    let mut kw = vec![0.0; m];
    let mut grad = vec![0.0; m];
    for _ in 0..(4 * m) {
        let s = support.len();
        if s == 0 {
            return None;
        }
        // [ -2K_SS  -1 ] [w_S]   [ -V_S ]
        // [  1ᵀ      0 ] [ c ] = [  1   ]
        let n = s + 1;
        let mut mat = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                mat[r * n + c] = -2.0 * problem.kernel[i * m + j];
            }
            mat[r * n + s] = -1.0;
            mat[s * n + r] = 1.0;
            rhs[r] = -problem.v[i];
        }
        rhs[s] = 1.0;
        let sol = solve_dense(&mut mat, &mut rhs, n)?;
        let blocking = support
            .iter()
            .enumerate()
            .filter(|&(r, _)| sol[r] < 0.0)
            .map(|(r, &i)| (i, current[i] / (current[i] - sol[r])))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((_, alpha)) = blocking {
            for (r, &i) in support.iter().enumerate() {
                current[i] += alpha * (sol[r] - current[i]);
            }
            // Drop every cell that reached (or overshot) zero.
            for &i in &support {
                if current[i] <= 1e-300 {
                    current[i] = 0.0;
                }
            }
            support.retain(|&i| current[i] > 0.0);
            let mass: f64 = current.iter().sum();
            current.iter_mut().for_each(|x| *x /= mass);
            continue;
        }
        for (r, &i) in support.iter().enumerate() {
            current[i] = sol[r];
        }
        problem.energy_and_gradient(&current, &mut kw, &mut grad);
        let c = sol[s];
        let (worst, violation) = (0..m)
            .filter(|&i| current[i] == 0.0)
            .map(|i| (i, c - grad[i]))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if worst == usize::MAX || violation <= 0.5 * tol {
            let r = kkt_residual(&current, &grad);
            return Some((current, r));
        }
        support.push(worst);
        support.sort_unstable();
    }
    None
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub(crate) fn solve_dense(mat: &mut [f64], rhs: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| mat[a * n + col].abs().total_cmp(&mat[b * n + col].abs()))?;
        if mat[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                mat.swap(col * n + k, piv * n + k);
            }
            rhs.swap(col, piv);
        }
        let d = mat[col * n + col];
        for r in (col + 1)..n {
            let f = mat[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                mat[r * n + k] -= f * mat[col * n + k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for k in (r + 1)..n {
            acc -= mat[r * n + k] * x[k];
        }
        x[r] = acc / mat[r * n + r];
    }
    Some(x)
}
