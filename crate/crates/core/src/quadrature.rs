//! Quadrature and interpolation primitives shared by the equilibrium and
//! diagnostics modules.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(f64) -> Complex64, a: f64, b: f64) -> Complex64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared, lazily built rule of order `n`.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
}

/// Composite rule with `panels` equal panels of order `n`.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(&f, lo, lo + h)
        })
        .sum()
}

/// Integral over `[a, b]` of a function with an integrable (e.g. logarithmic)
/// singularity at `a`, using panels graded geometrically toward `a`.
pub fn graded_toward_left(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    graded_offset(|d| f(a + d), a, b - a)
}

/// `∫_0^len g(d) dd` for `g` singular at `d = 0`. Grading stops once panels
/// fall below the resolution of `anchor`, so `g` is never evaluated there.
fn graded_offset(g: impl Fn(f64) -> f64, anchor: f64, len: f64) -> f64 {
    const RATIO: f64 = 0.25;
    const LEVELS: usize = 32;
    let rule = gauss_legendre(20);
    if len == 0.0 {
        return 0.0;
    }
    let floor = 4.0 * f64::EPSILON * anchor.abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    let mut hi = len;
    for _ in 0..LEVELS {
        let lo = hi * RATIO;
        if lo <= floor {
            break;
        }
        total += rule.integrate(&g, lo, hi);
        hi = lo;
    }
    total
}

/// Integral over `[a, b]` of a function singular at the interior point `s`.
pub fn graded_around(f: impl Fn(f64) -> f64, a: f64, b: f64, s: f64) -> f64 {
    let s = s.clamp(a, b);
    graded_offset(|d| f(s - d), s, s - a) + graded_offset(|d| f(s + d), s, b - s)
}

/// Adaptive bisection comparing 16- and 32-point Gauss–Legendre estimates.
pub fn adaptive_complex(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Complex64, String> {
    fn rec(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
    ) -> Result<Complex64, String> {
        let coarse = gauss_legendre(16).integrate_complex(f, a, b);
        let fine = gauss_legendre(32).integrate_complex(f, a, b);
        if (fine - coarse).norm() <= tol || (b - a).abs() < 1e-15 {
            return Ok(fine);
        }
        if depth >= 48 {
            return Err(format!(
                "interval [{a}, {b}] still off by {:e}",
                (fine - coarse).norm()
            ));
        }
        let m = 0.5 * (a + b);
        Ok(rec(f, a, m, 0.5 * tol, depth + 1)? + rec(f, m, b, 0.5 * tol, depth + 1)?)
    }
    rec(f, a, b, tol, 0)
}

pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, String> {
    adaptive_complex(&|x| Complex64::new(f(x), 0.0), a, b, tol).map(|c| c.re)
}

/// Chebyshev points of the second kind on `[a, b]`, ascending.
pub fn chebyshev_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|k| {
            let t = -(PI * k as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Barycentric interpolant through values at Chebyshev points of the second kind.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChebyshevInterpolant {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl ChebyshevInterpolant {
    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let nodes = chebyshev_points(a, b, n);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self {
            a,
            b,
            nodes,
            values,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let nodes = &self.nodes;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, (&xk, &fk)) in nodes.iter().zip(&self.values).enumerate() {
            let d = x - xk;
            if d == 0.0 {
                return fk;
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                w *= 0.5;
            }
            let t = w / d;
            num += t * fk;
            den += t;
        }
        num / den
    }
}
