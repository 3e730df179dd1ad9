//! Test functions for linear statistics and loop equations.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinearStatistic {
    Constant { value: f64 },
    /// `a(1 − u²)³` for `|u| < 1`, `u = (x − centre)/radius`; `C²` with compact support.
    Bump { centre: f64, radius: f64, amplitude: f64 },
    /// `exp(1 − 1/(1 − u²))` for `|u| < 1`; smooth with compact support.
    SmoothBump { centre: f64, radius: f64 },
    /// Polynomial (ascending coefficients) times the smooth bump.
    PolyCutoff { coefficients: Vec<f64>, centre: f64, radius: f64 },
    /// `sin(ωx + φ)`.
    Sine { frequency: f64, phase: f64 },
}

/// `(g, g', g'')` of the unit smooth bump in `u`.
fn smooth_bump(u: f64) -> (f64, f64, f64) {
    if u.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = 1.0 - u * u;
    let g = (1.0 - 1.0 / s).exp();
    let g1 = -2.0 * u * g / (s * s);
    let g2 = -2.0 * g / (s * s) - 2.0 * u * g1 / (s * s) - 8.0 * u * u * g / (s * s * s);
    (g, g1, g2)
}

fn poly_derivs(c: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut p1, mut p2) = (0.0, 0.0, 0.0);
    for &a in c.iter().rev() {
        p2 = p2 * x + 2.0 * p1;
        p1 = p1 * x + p;
        p = p * x + a;
    }
    (p, p1, p2)
}

impl LinearStatistic {
    /// `(h, h', h'')` at `x`.
    pub fn derivatives(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Self::Constant { value } => (value, 0.0, 0.0),
            Self::Bump {
                centre,
                radius,
                amplitude,
            } => {
                let u = (x - centre) / radius;
                if u.abs() >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let s = 1.0 - u * u;
                let h = amplitude * s.powi(3);
                let h1 = amplitude * -6.0 * u * s * s / radius;
                let h2 = amplitude * (-6.0 * s * s + 24.0 * u * u * s) / (radius * radius);
                (h, h1, h2)
            }
            Self::SmoothBump { centre, radius } => {
                let (g, g1, g2) = smooth_bump((x - centre) / radius);
                (g, g1 / radius, g2 / (radius * radius))
            }
            Self::PolyCutoff {
                ref coefficients,
                centre,
                radius,
            } => {
                let (g, g1, g2) = smooth_bump((x - centre) / radius);
                if g == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let (g1, g2) = (g1 / radius, g2 / (radius * radius));
                let (p, p1, p2) = poly_derivs(coefficients, x);
                (p * g, p1 * g + p * g1, p2 * g + 2.0 * p1 * g1 + p * g2)
            }
            Self::Sine { frequency, phase } => {
                let (s, c) = (frequency * x + phase).sin_cos();
                (s, frequency * c, -frequency * frequency * s)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x).0
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.derivatives(x).1
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.derivatives(x).2
    }

    /// Interval outside which `h` vanishes, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Bump { centre, radius, .. }
            | Self::SmoothBump { centre, radius }
            | Self::PolyCutoff { centre, radius, .. } => Some((centre - radius, centre + radius)),
            _ => None,
        }
    }

    /// `(‖h‖∞, ‖h'‖∞, ‖h''‖∞)`, exact for the sine and constant, sampled on
    /// 4001 points of the support otherwise.
    pub fn norms(&self) -> (f64, f64, f64) {
        match *self {
            Self::Constant { value } => (value.abs(), 0.0, 0.0),
            Self::Sine { frequency, .. } => (1.0, frequency.abs(), frequency * frequency),
            _ => {
                let (a, b) = self.support().expect("compact support");
                let m = 4000;
                (0..=m).fold((0.0f64, 0.0f64, 0.0f64), |acc, k| {
                    let (h, h1, h2) = self.derivatives(a + (b - a) * k as f64 / m as f64);
                    (acc.0.max(h.abs()), acc.1.max(h1.abs()), acc.2.max(h2.abs()))
                })
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::Bump { radius, .. } | Self::SmoothBump { radius, .. } | Self::PolyCutoff { radius, .. }
                if !(*radius > 0.0) =>
            {
                Err(format!("radius must be positive, got {radius}"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn examples() -> Vec<LinearStatistic> {
        vec![
            LinearStatistic::Bump { centre: 0.3, radius: 0.8, amplitude: 1.5 },
            LinearStatistic::SmoothBump { centre: -0.2, radius: 1.1 },
            LinearStatistic::PolyCutoff { coefficients: vec![0.5, -1.0, 2.0], centre: 0.0, radius: 1.3 },
            LinearStatistic::Sine { frequency: 2.0, phase: 0.4 },
        ]
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(x in -1.2f64..1.2) {
            let e = 1e-5;
            for h in examples() {
                let (_, d1, d2) = h.derivatives(x);
                let fd1 = (h.value(x + e) - h.value(x - e)) / (2.0 * e);
                let fd2 = (h.d1(x + e) - h.d1(x - e)) / (2.0 * e);
                prop_assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "{h:?} {d1} {fd1}");
                prop_assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()), "{h:?} {d2} {fd2}");
            }
        }
    }

    #[test]
    fn bump_is_c2_at_its_edge() {
        let h = LinearStatistic::Bump { centre: 0.0, radius: 1.0, amplitude: 1.0 };
        let (v, d1, d2) = h.derivatives(1.0 - 1e-6);
        assert!(v.abs() < 1e-15 && d1.abs() < 1e-10 && d2.abs() < 1e-4);
        assert_eq!(h.norms().0, 1.0);
    }

    #[test]
    fn serde_round_trip() {
        for h in examples() {
            let s = serde_json::to_string(&h).unwrap();
            assert_eq!(serde_json::from_str::<LinearStatistic>(&s).unwrap(), h);
        }
        assert!(LinearStatistic::Bump { centre: 0.0, radius: 0.0, amplitude: 1.0 }.validate().is_err());
    }
}
