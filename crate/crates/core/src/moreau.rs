//! Moreau-Yosida envelope and proximal operator.
//!
//! The envelope `u_eps(x) = inf_y { u(y) + |x - y|^2 / (2 eps) }` is a
//! `C^{1,1}` under-approximation of `u` whose gradient is `1/eps`-Lipschitz
//! and satisfies `grad u_eps(x) = (x - prox(x)) / eps = h(prox(x))`.
//!
//! The samplers never call into this module: evaluating the prox means
//! solving an optimization problem per step, which is exactly what the tamed
//! drift avoids. It exists to verify the envelope laws the convergence
//! analysis leans on, and to estimate the gradient Lipschitz constant `K`
//! (worst case `1/eps`) that parameter validation consumes.
//!
//! The inner problem `u(y) + |x - y|^2 / (2 eps)` is `(2m + 1/eps)`-strongly
//! convex; it is solved by gradient descent with the fixed step
//! `eps / (1 + eps * H)` where `H` bounds the Hessian of `u` on the region
//! the iterates can visit. That step guarantees contraction without asking
//! the target for second derivatives.

use crate::error::{require_positive, Error, Result};
use crate::targets::{norm, TargetPotential};

/// Parameters of the envelope computation.
#[derive(Debug, Clone, Copy)]
pub struct MoreauConfig {
    /// Regularization parameter; `eps < 1/m` keeps the envelope strongly
    /// convex with constant `m/2` or better.
    pub epsilon: f64,
    /// Inner solver terminates once the inner gradient norm drops below this.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl MoreauConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        require_positive("epsilon", epsilon)?;
        Ok(MoreauConfig {
            epsilon,
            inner_tol: 1e-10,
            inner_max_iters: 10_000,
        })
    }

    pub fn with_inner_tol(mut self, tol: f64) -> Result<Self> {
        require_positive("inner_tol", tol)?;
        self.inner_tol = tol;
        Ok(self)
    }
}

/// Hessian upper bound for `u` on the ball the inner iterates stay in.
///
/// Gradient descent with a conservative step shrinks the distance to the
/// minimizer monotonically, and the prox lies within `|x| + 2 sqrt(2u(0)/m)`
/// of the origin, so a ball of radius `3|x| + 4 sqrt(2u(0)/m) + 1` contains
/// the whole path. Assumption-style local Lipschitz data then bounds the
/// Hessian there by `L (1 + 2 rho)^l`.
fn hessian_bound(target: &TargetPotential, x: &[f64]) -> f64 {
    let rho = 3.0 * norm(x) + 4.0 * target.minimizer_radius_bound() + 1.0;
    target.lip_l * (1.0 + 2.0 * rho).powf(target.growth_l)
}

/// Proximal operator: the minimizer of `u(y) + |x - y|^2 / (2 eps)`.
pub fn prox(target: &TargetPotential, config: &MoreauConfig, x: &[f64]) -> Result<Vec<f64>> {
    let eps = config.epsilon;
    let d = target.dim();
    let step = eps / (1.0 + eps * hessian_bound(target, x));
    let mut y = x.to_vec();
    let mut g = vec![0.0; d];
    for _ in 0..config.inner_max_iters {
        target.grad_into(&y, &mut g);
        for (gi, (&yi, &xi)) in g.iter_mut().zip(y.iter().zip(x)) {
            *gi += (yi - xi) / eps;
        }
        let gnorm = norm(&g);
        if gnorm <= config.inner_tol {
            return Ok(y);
        }
        for (yi, &gi) in y.iter_mut().zip(&g) {
            *yi -= step * gi;
        }
    }
    target.grad_into(&y, &mut g);
    for (gi, (&yi, &xi)) in g.iter_mut().zip(y.iter().zip(x)) {
        *gi += (yi - xi) / eps;
    }
    Err(Error::ProxDidNotConverge {
        iters: config.inner_max_iters,
        residual: norm(&g),
    })
}

/// Envelope gradient `(x - prox(x)) / eps`.
///
/// Also evaluates `h(prox(x))` and verifies the two expressions agree within
/// `10 * inner_tol / eps`; a violation means the inner tolerance is too
/// loose for the requested accuracy.
pub fn envelope_grad(
    target: &TargetPotential,
    config: &MoreauConfig,
    x: &[f64],
) -> Result<Vec<f64>> {
    let p = prox(target, config, x)?;
    let eps = config.epsilon;
    let grad: Vec<f64> = x.iter().zip(&p).map(|(&xi, &pi)| (xi - pi) / eps).collect();
    let h_at_prox = target.grad(&p);
    let gap = grad
        .iter()
        .zip(&h_at_prox)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let tol = 10.0 * config.inner_tol / eps;
    if gap > tol {
        return Err(Error::EnvelopeInconsistent { gap, tol });
    }
    Ok(grad)
}

/// Envelope value `u(prox(x)) + |x - prox(x)|^2 / (2 eps)`.
///
/// Never exceeds `u(x)` and shares its minimum value with `u`.
pub fn envelope_value(target: &TargetPotential, config: &MoreauConfig, x: &[f64]) -> Result<f64> {
    let p = prox(target, config, x)?;
    let dist2: f64 = x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(target.value(&p) + dist2 / (2.0 * config.epsilon))
}

/// Gap between the raw and envelope gradients, with its a-priori bound.
#[derive(Debug, Clone, Copy)]
pub struct GradientGap {
    /// `|h(x) - grad u_eps(x)|`.
    pub gap: f64,
    /// `2^{2l+2} L (1 + |x| + sqrt(R))^{2l+2} eps` with `R = sqrt(2u(0)/m)`.
    pub bound: f64,
}

/// Measure how far the envelope gradient sits from `h` at `x`, together
/// with the bound it must satisfy. Diagnostics assert `gap <= bound`.
pub fn envelope_gradient_gap(
    target: &TargetPotential,
    config: &MoreauConfig,
    x: &[f64],
) -> Result<GradientGap> {
    let g = envelope_grad(target, config, x)?;
    let h = target.grad(x);
    let gap = h
        .iter()
        .zip(&g)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let r = target.minimizer_radius_bound();
    let exponent = 2.0 * target.growth_l + 2.0;
    let bound = 2f64.powf(exponent)
        * target.lip_l
        * (1.0 + norm(x) + r.sqrt()).powf(exponent)
        * config.epsilon;
    Ok(GradientGap { gap, bound })
}
