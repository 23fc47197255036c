//! Reservation costs and the constants derived from them.

use crate::soco::Action;

/// `H(x, x^π) = (β_h/2)(1 + 1/λ₀)‖x − x^π‖²`, reserved for a hitting cost
/// whose context has not arrived yet.
pub fn reservation_h(x: &Action, x_pi: &Action, beta_h: f64, lambda0: f64) -> f64 {
    0.5 * beta_h * (1.0 + 1.0 / lambda0) * (x - x_pi).norm_squared()
}

/// `G`, reserved for the effect of the current window on the next `p`
/// switching costs:
///
/// `((1+1/λ₀)α/2) Σ_{k=1}^p ( L_k‖x_t−x^π_t‖² + Σ_{i=1}^{p−k} L_{k+i}‖x_{t−i}−x^π_{t−i}‖² )`
///
/// Windows are newest first (`[x_t, x_{t-1}, …]`) and must hold at least `p`
/// entries; only the first `p` are read.
pub fn reservation_g(x_window: &[&Action], x_pi_window: &[&Action], lips: &[f64], lambda0: f64) -> f64 {
    let p = lips.len();
    assert!(x_window.len() >= p && x_pi_window.len() >= p, "window shorter than p");
    let alpha = 1.0 + lips.iter().sum::<f64>();
    let dist: Vec<f64> = (0..p)
        .map(|i| (x_window[i] - x_pi_window[i]).norm_squared())
        .collect();
    let mut sum = 0.0;
    for k in 1..=p {
        sum += lips[k - 1] * dist[0];
        for i in 1..=(p - k) {
            sum += lips[k + i - 1] * dist[i];
        }
    }
    0.5 * (1.0 + 1.0 / lambda0) * alpha * sum
}

/// Weight of `‖x_{t-i} − x^π_{t-i}‖²` inside `G`, for `i = 0..p-1`:
/// `((1+1/λ₀)α/2) · Σ_{j>i} L_j`.
pub(crate) fn g_weights(lips: &[f64], lambda0: f64) -> Vec<f64> {
    let alpha = 1.0 + lips.iter().sum::<f64>();
    let c = 0.5 * (1.0 + 1.0 / lambda0) * alpha;
    (0..lips.len()).map(|i| c * lips[i..].iter().sum::<f64>()).collect()
}

/// `K = 2(λ − λ₀) / ((β_h + α²)(1 + 1/λ₀))`: the squared deviation budget
/// per unit of expert cost.
pub fn k_constant(lambda: f64, lambda0: f64, beta_h: f64, alpha: f64) -> f64 {
    2.0 * (lambda - lambda0) / ((beta_h + alpha * alpha) * (1.0 + 1.0 / lambda0))
}

/// Smallest `λ` for which advice anywhere in an action set of diameter
/// `diameter` is never modified when every per-step expert cost is at least
/// `epsilon`.
pub fn corollary1_lambda(diameter: f64, alpha: f64, beta_h: f64, epsilon: f64) -> f64 {
    let a = diameter * diameter * (alpha * alpha + beta_h);
    a / (2.0 * epsilon) + (2.0 * a / epsilon).sqrt()
}
