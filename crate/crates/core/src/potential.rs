//! Polynomial confining potentials.
//!
//! A [`Potential`] is `V(x) = Σ c_k x^k + offset`. The offset only shifts the
//! partition function, so derivatives never see it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radii at which the logarithmic growth condition is probed.
pub const GROWTH_PROBES: [f64; 3] = [1e2, 1e4, 1e6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    coefficients: Vec<f64>,
    offset: f64,
    label: String,
}

impl Potential {
    /// Trailing zero coefficients are dropped so that `degree()` is exact.
    pub fn new(coefficients: Vec<f64>, offset: f64, label: impl Into<String>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidArgument(
                "potential coefficients and offset must be finite".into(),
            ));
        }
        let mut coefficients = coefficients;
        while coefficients.len() > 1 && *coefficients.last().unwrap() == 0.0 {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(0.0);
        }
        Ok(Self {
            coefficients,
            offset,
            label: label.into(),
        })
    }

    /// Like [`Potential::new`] but picks the offset so that `min V > 1`.
    pub fn with_auto_offset(coefficients: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let mut p = Self::new(coefficients, 0.0, label)?;
        p.offset = auto_offset(&p);
        Ok(p)
    }

    /// `x²/2`, the Gaussian ensembles.
    pub fn quadratic() -> Self {
        Self::with_auto_offset(vec![0.0, 0.0, 0.5], "quadratic").unwrap()
    }

    /// `x⁴/4 − c·x²`; two-cut for `c > 1`, one-cut below.
    pub fn symmetric_quartic(c: f64) -> Self {
        Self::with_auto_offset(vec![0.0, 0.0, -c, 0.0, 0.25], format!("symmetric_quartic({c})"))
            .unwrap()
    }

    /// `x⁴/4 − c·x² + t·x`, tilting one well below the other.
    pub fn asymmetric_quartic(c: f64, t: f64) -> Self {
        Self::with_auto_offset(
            vec![0.0, t, -c, 0.0, 0.25],
            format!("asymmetric_quartic({c},{t})"),
        )
        .unwrap()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn leading_coefficient(&self) -> f64 {
        *self.coefficients.last().unwrap()
    }

    /// True when `V(−x) = V(x)` coefficient-wise.
    pub fn is_even(&self) -> bool {
        self.coefficients
            .iter()
            .enumerate()
            .all(|(k, c)| k % 2 == 0 || *c == 0.0)
    }

    /// `V(x)` including the offset.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coefficients, x) + self.offset
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        horner_complex(&self.coefficients, z) + self.offset
    }

    pub fn deriv(&self, x: f64, order: u32) -> Result<f64> {
        match order {
            1 => Ok(horner(&self.derivative_coefficients(1), x)),
            2 => Ok(horner(&self.derivative_coefficients(2), x)),
            _ => Err(Error::InvalidOrder(order)),
        }
    }

    /// `V'(x)`, infallible shorthand used in hot loops.
    pub fn d1(&self, x: f64) -> f64 {
        let c = &self.coefficients;
        let mut acc = 0.0;
        for k in (1..c.len()).rev() {
            acc = acc * x + k as f64 * c[k];
        }
        acc
    }

    /// `V'(z)` on the complex plane.
    pub fn d1_complex(&self, z: Complex64) -> Complex64 {
        horner_complex(&self.derivative_coefficients(1), z)
    }

    /// Coefficients of the `order`-th derivative (offset dropped).
    pub fn derivative_coefficients(&self, order: usize) -> Vec<f64> {
        let mut c = self.coefficients.clone();
        for _ in 0..order {
            if c.len() <= 1 {
                return vec![0.0];
            }
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| k as f64 * v)
                .collect();
        }
        c
    }

    /// Global minimum of `V` (without offset), located from the real roots of `V'`.
    /// `None` if `V` is unbounded below.
    pub fn minimum(&self) -> Option<(f64, f64)> {
        let d = self.degree();
        if d == 0 {
            return Some((0.0, self.coefficients[0]));
        }
        if d % 2 == 1 || self.leading_coefficient() < 0.0 {
            return None;
        }
        let roots = real_roots(&self.derivative_coefficients(1));
        roots
            .into_iter()
            .map(|x| (x, horner(&self.coefficients, x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Infimum of `V''` over ℝ; `None` when it is −∞.
    pub fn curvature_infimum(&self) -> Option<f64> {
        let second = self.derivative_coefficients(2);
        let d = second.len() - 1;
        if d == 0 {
            return Some(second[0]);
        }
        if d % 2 == 1 || *second.last().unwrap() < 0.0 {
            return None;
        }
        let third: Vec<f64> = second
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| k as f64 * v)
            .collect();
        real_roots(&third)
            .into_iter()
            .map(|x| horner(&second, x))
            .min_by(f64::total_cmp)
    }

    /// Checks conditions 1–3 of the standing hypothesis on `V` plus the
    /// `V + offset > 1` normalisation.
    pub fn check_hypothesis(&self, beta: f64) -> HypothesisReport {
        // beta' ≥ max(beta, 1) is free; the tightest admissible choice is used.
        let beta_prime = beta.max(1.0) * (1.0 + 1e-12);
        let mut growth_witnesses = Vec::new();
        let structurally_confining = self.degree() >= 1
            && self.degree().is_multiple_of(2)
            && self.leading_coefficient() > 0.0;
        for &r in &GROWTH_PROBES {
            for x in [-r, r] {
                let ratio = beta * self.eval(x) / (2.0 * beta_prime * x.abs().ln());
                if !(ratio > 1.0) {
                    growth_witnesses.push(x);
                }
            }
        }
        let growth = structurally_confining && growth_witnesses.is_empty();

        let curvature_inf = self.curvature_infimum();
        let w0 = curvature_inf.map(|inf| (-inf / 2.0).max(0.0));

        let (shift_ok, shift_witness) = match self.minimum() {
            Some((x, v)) => (v + self.offset > 1.0, if v + self.offset > 1.0 { None } else { Some(x) }),
            None => (false, None),
        };

        HypothesisReport {
            analytic: true,
            growth,
            growth_witnesses,
            curvature_bounded: curvature_inf.is_some(),
            curvature_infimum: curvature_inf,
            w0,
            shifted_above_one: shift_ok,
            shift_witness,
        }
    }
}

/// Outcome of [`Potential::check_hypothesis`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub analytic: bool,
    pub growth: bool,
    pub growth_witnesses: Vec<f64>,
    pub curvature_bounded: bool,
    pub curvature_infimum: Option<f64>,
    /// Lower curvature bound `W₀ = max(0, −inf V''/2)`.
    pub w0: Option<f64>,
    pub shifted_above_one: bool,
    pub shift_witness: Option<f64>,
}

impl HypothesisReport {
    /// Conditions 1–3 (analyticity, growth, curvature).
    pub fn structural_pass(&self) -> bool {
        self.analytic && self.growth && self.curvature_bounded
    }

    pub fn all_pass(&self) -> bool {
        self.structural_pass() && self.shifted_above_one
    }
}

fn auto_offset(p: &Potential) -> f64 {
    match p.minimum() {
        Some((_, v)) if v <= 1.0 => 2.0 - v,
        _ => 0.0,
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

pub(crate) fn horner_complex(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &v| acc * z + v)
}

/// Real roots of a real polynomial, by recursive isolation between the
/// critical points (which are the roots of the derivative).
pub(crate) fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    if d == 1 {
        return vec![-c[0] / c[1]];
    }
    let dc: Vec<f64> = c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| k as f64 * v)
        .collect();
    let crit = real_roots(&dc);
    // Cauchy bound on root magnitude.
    let lead = c[d].abs();
    let bound = 1.0 + c[..d].iter().map(|v| v.abs() / lead).fold(0.0, f64::max);
    let mut knots = vec![-bound];
    knots.extend(crit.iter().copied().filter(|x| x.abs() < bound));
    knots.push(bound);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            roots.push(bisect(|x| horner(&c, x), a, b));
        }
    }
    if horner(&c, bound) == 0.0 {
        roots.push(bound);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + a.abs()));
    roots
}

pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
