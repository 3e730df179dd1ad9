//! Cell-averaged logarithmic kernels.

/// `t·ln|t|`, extended by continuity with `0` at `t = 0`.
#[inline]
pub(crate) fn t_log_t(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.abs().ln()
    }
}

/// Average of `ln|w − t|` over `t ∈ [x − ε, x + ε]`:
///
/// `p(x, w) = −1 + [(x+ε−w)·ln|x+ε−w| − (x−ε−w)·ln|x−ε−w|] / (2ε)`.
///
/// Finite on the diagonal, where it equals `−1 + ln ε`.
pub fn smoothed_log_kernel(x: f64, w: f64, eps: f64) -> f64 {
    debug_assert!(eps > 0.0);
    -1.0 + (t_log_t(x + eps - w) - t_log_t(x - eps - w)) / (2.0 * eps)
}

/// `u²·ln|u|/2 − 3u²/4`, a second antiderivative of `ln|u|`.
#[inline]
fn second_antiderivative(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u * u.abs().ln() - 0.75 * u * u
    }
}

/// Exact average of `ln|s − t|` over `s ∈ [a, b]`, `t ∈ [c, d]`.
pub fn cell_pair_log_average(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let g = second_antiderivative;
    let integral = -(g(b - d) - g(b - c) - g(a - d) + g(a - c));
    integral / ((b - a) * (d - c))
}
