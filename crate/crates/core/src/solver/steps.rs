//! The closed-form pieces of one dual proximal gradient iteration, plus the
//! dual objective and its gradient.
//!
//! With `f(w) = I{w ≥ 0} + 2wᵀe + β‖w‖²` and `g(d) = −α Σ log d_i`, the dual
//! objective is `φ(λ) = F(λ) + G(λ)` where
//!
//! ```text
//! F(λ) = max_w ⟨Sᵀλ, w⟩ − f(w) = ‖max(0, Sᵀλ − 2e)‖² / (4β)
//! G(λ) = max_d ⟨−λ, d⟩ − g(d) = Nα(log α − 1) − α Σ log λ_i     (λ > 0)
//! ```

use crate::error::{Error, Result};
use crate::graph::{degree_adjoint, degree_apply, DualPoint, EdgeVector};

/// Lipschitz constant of `∇F`, `‖S‖²/(2β) = (N−1)/β`.
pub fn lipschitz_constant(n_nodes: usize, beta: f64) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::argument("need at least 2 nodes"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::argument(format!(
            "beta must be positive and finite (the step 1/L = beta/(N-1) depends on it), got {beta}"
        )));
    }
    Ok((n_nodes as f64 - 1.0) / beta)
}

/// Maximizer of `⟨Sᵀv, w⟩ − f(w)`: `max(0, (Sᵀv − 2e)/(2β))`.
///
/// Evaluated at the extrapolated point this is `w̄_k`; evaluated at the dual
/// iterate it is the recovered primal estimate `ŵ_k`.
fn primal_map(v: &DualPoint, e: &EdgeVector, beta: f64) -> EdgeVector {
    let mut w = degree_adjoint(v).into_values();
    let scale = 0.5 / beta;
    for (wk, ek) in w.iter_mut().zip(e.values()) {
        *wk = ((*wk - 2.0 * ek) * scale).max(0.0);
    }
    EdgeVector::from_raw(e.n_nodes(), w)
}

/// `w̄_k = max(0, (Sᵀω_k − 2e)/(2β))`.
pub fn wbar_update(omega: &DualPoint, e: &EdgeVector, beta: f64) -> EdgeVector {
    primal_map(omega, e, beta)
}

/// `ŵ_k = max(0, (Sᵀλ_k − 2e)/(2β))`. Its degrees may contain zeros.
pub fn primal_from_dual(lambda: &DualPoint, e: &EdgeVector, beta: f64) -> EdgeVector {
    primal_map(lambda, e, beta)
}

/// Scalar prox of `c·(−log)`: `(a + √(a² + 4c))/2`, evaluated without
/// cancellation when `a` is very negative.
pub(crate) fn prox_neg_log(a: f64, scaled_alpha: f64) -> f64 {
    let root = (a * a + 4.0 * scaled_alpha).sqrt();
    if a >= 0.0 {
        0.5 * (a + root)
    } else {
        2.0 * scaled_alpha / (root - a)
    }
}

/// `u_k = prox_{Lg}(Sw̄_k − Lω_k)`, element-wise. Always strictly positive.
pub fn u_update(wbar: &EdgeVector, omega: &DualPoint, alpha: f64, lipschitz: f64) -> DualPoint {
    let sw = degree_apply(wbar);
    let scaled_alpha = alpha * lipschitz;
    let u = sw
        .values()
        .iter()
        .zip(omega.values())
        .map(|(s, o)| prox_neg_log(s - lipschitz * o, scaled_alpha))
        .collect();
    DualPoint::from_raw(u)
}

/// `λ_k = ω_k − (Sw̄_k − u_k)/L`.
///
/// Since `u` solves `u² − au = αL` with `a = Sw̄ − Lω`, the update equals
/// `α/u` exactly. That form is used for any entry where the subtraction
/// loses the sign to rounding.
pub fn lambda_update(
    omega: &DualPoint,
    wbar: &EdgeVector,
    u: &DualPoint,
    alpha: f64,
    lipschitz: f64,
) -> DualPoint {
    let sw = degree_apply(wbar);
    let lambda = omega
        .values()
        .iter()
        .zip(sw.values())
        .zip(u.values())
        .map(|((o, s), ui)| {
            let direct = o - (s - ui) / lipschitz;
            if direct > 0.0 {
                direct
            } else {
                alpha / ui
            }
        })
        .collect();
    DualPoint::from_raw(lambda)
}

/// FISTA momentum scalar `t_{k+1} = (1 + √(1 + 4t_k²))/2`.
pub fn momentum_update(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// `ω_{k+1} = λ_k + ((t_k − 1)/t_{k+1})(λ_k − λ_{k−1})`.
pub fn extrapolate(lambda: &DualPoint, lambda_prev: &DualPoint, t: f64, t_next: f64) -> DualPoint {
    let coef = (t - 1.0) / t_next;
    if coef == 0.0 {
        return lambda.clone();
    }
    let omega = lambda
        .values()
        .iter()
        .zip(lambda_prev.values())
        .map(|(l, p)| l + coef * (l - p))
        .collect();
    DualPoint::from_raw(omega)
}

/// `F(λ) = ‖max(0, Sᵀλ − 2e)‖²/(4β)`.
pub fn dual_smooth_part(lambda: &DualPoint, e: &EdgeVector, beta: f64) -> f64 {
    let c = degree_adjoint(lambda);
    c.values()
        .iter()
        .zip(e.values())
        .map(|(ck, ek)| {
            let r = (ck - 2.0 * ek).max(0.0);
            r * r
        })
        .sum::<f64>()
        / (4.0 * beta)
}

/// `G(λ) = Nα(log α − 1) − α Σ log λ_i`, or `+∞` outside `λ > 0`.
pub fn dual_barrier_part(lambda: &DualPoint, alpha: f64) -> f64 {
    if lambda.values().iter().any(|l| *l <= 0.0) {
        return f64::INFINITY;
    }
    let n = lambda.n_nodes() as f64;
    let log_sum: f64 = lambda.values().iter().map(|l| l.ln()).sum();
    n * alpha * (alpha.ln() - 1.0) - alpha * log_sum
}

/// Dual objective `φ(λ) = F(λ) + G(λ)`; `+∞` if any `λ_i ≤ 0`.
pub fn dual_objective(lambda: &DualPoint, e: &EdgeVector, alpha: f64, beta: f64) -> f64 {
    let barrier = dual_barrier_part(lambda, alpha);
    if barrier.is_infinite() {
        return barrier;
    }
    dual_smooth_part(lambda, e, beta) + barrier
}

/// `∇F(λ) = S·max(0, (Sᵀλ − 2e)/(2β))`.
pub fn dual_gradient_f(lambda: &DualPoint, e: &EdgeVector, beta: f64) -> DualPoint {
    degree_apply(&primal_map(lambda, e, beta))
}

/// KKT stationarity residual `max_i |(Sw)_i λ_i − α| / α`.
pub fn optimality_residual(w: &EdgeVector, lambda: &DualPoint, alpha: f64) -> Result<f64> {
    if lambda.values().iter().any(|l| !(*l > 0.0)) {
        return Err(Error::argument(
            "optimality residual needs a strictly positive dual point",
        ));
    }
    if lambda.n_nodes() != w.n_nodes() {
        return Err(Error::argument("dual point and edge vector sizes differ"));
    }
    let d = degree_apply(w);
    Ok(d.values()
        .iter()
        .zip(lambda.values())
        .map(|(di, li)| (di * li - alpha).abs() / alpha)
        .fold(0.0, f64::max))
}
