//! Target potentials and their analytic constants.
//!
//! A [`TargetPotential`] bundles a nonnegative objective `u`, its gradient
//! `h = grad u`, and the constants the samplers and diagnostics rely on:
//!
//! * `m` - strong-convexity constant, normalized so that
//!   `<h(x) - h(y), x - y> >= 2m |x - y|^2`. Built-in constructors therefore
//!   store half of the Hessian lower bound.
//! * `lip_l`, `growth_l` - local Lipschitz data with
//!   `|h(x) - h(y)| <= lip_l (1 + |x| + |y|)^growth_l |x - y|`.
//! * `u0 = u(0)` - enters the dissipativity bound
//!   `<h(x), x> >= (m/2)|x|^2 - u(0)`.
//!
//! The library verifies these constants on sampled points (see
//! [`TargetPotential::check_assumptions`]); it never infers them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{require_nonneg, require_positive, Error, Result};

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A potential satisfying the strong-convexity and local-Lipschitz
/// assumptions, together with its analytic constants.
///
/// Immutable after construction; cheap to clone and safe to share across
/// concurrently running chains.
#[derive(Clone)]
pub struct TargetPotential {
    dim: usize,
    value: Arc<ValueFn>,
    grad: Arc<GradFn>,
    /// Strong-convexity constant (the `2m` convention, see module docs).
    pub m: f64,
    /// Local Lipschitz prefactor `L`.
    pub lip_l: f64,
    /// Local Lipschitz growth exponent `l`.
    pub growth_l: f64,
    /// Value at the origin, `u(0)`.
    pub u0: f64,
    minimizer: Option<Vec<f64>>,
    /// Curvature `a` when the target is the exactly solvable quadratic.
    quadratic_a: Option<f64>,
}

impl fmt::Debug for TargetPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetPotential")
            .field("dim", &self.dim)
            .field("m", &self.m)
            .field("lip_l", &self.lip_l)
            .field("growth_l", &self.growth_l)
            .field("u0", &self.u0)
            .field("minimizer", &self.minimizer)
            .finish()
    }
}

impl TargetPotential {
    /// The quartic example target `u(x) = |x|^4 / 4 + (5/2)|x|^2` with
    /// gradient `h(x) = |x|^2 x + 5x`, so `m = 5/2`, `L = 5`, `l = 2`.
    pub fn quartic(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        TargetPotential {
            dim,
            value: Arc::new(|x: &[f64]| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                0.25 * r2 * r2 + 2.5 * r2
            }),
            grad: Arc::new(|x: &[f64], out: &mut [f64]| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                for (o, &c) in out.iter_mut().zip(x) {
                    *o = (r2 + 5.0) * c;
                }
            }),
            m: 2.5,
            lip_l: 5.0,
            growth_l: 2.0,
            u0: 0.0,
            minimizer: Some(vec![0.0; dim]),
            quadratic_a: None,
        }
    }

    /// The quadratic target `u(x) = (a/2)|x|^2`, exactly solvable: under the
    /// Gibbs measure at inverse temperature `beta` the position marginal is
    /// Gaussian with variance `1/(beta a)` per coordinate.
    pub fn quadratic(a: f64, dim: usize) -> Result<Self> {
        require_positive("a", a)?;
        assert!(dim >= 1, "dimension must be positive");
        Ok(TargetPotential {
            dim,
            value: Arc::new(move |x: &[f64]| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                0.5 * a * r2
            }),
            grad: Arc::new(move |x: &[f64], out: &mut [f64]| {
                for (o, &c) in out.iter_mut().zip(x) {
                    *o = a * c;
                }
            }),
            m: 0.5 * a,
            lip_l: a,
            growth_l: 0.0,
            u0: 0.0,
            minimizer: Some(vec![0.0; dim]),
            quadratic_a: Some(a),
        })
    }

    /// A user-supplied target. The constants are taken as given; call
    /// [`check_assumptions`](Self::check_assumptions) to verify them on
    /// sampled points.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        m: f64,
        lip_l: f64,
        growth_l: f64,
        u0: f64,
        minimizer: Option<Vec<f64>>,
    ) -> Result<Self> {
        require_positive("m", m)?;
        require_positive("lip_l", lip_l)?;
        require_nonneg("growth_l", growth_l)?;
        require_nonneg("u0", u0)?;
        if let Some(ref xs) = minimizer {
            if xs.len() != dim {
                return Err(Error::invalid("minimizer", "dimension mismatch"));
            }
        }
        Ok(TargetPotential {
            dim,
            value: Arc::new(value),
            grad: Arc::new(grad),
            m,
            lip_l,
            growth_l,
            u0,
            minimizer,
            quadratic_a: None,
        })
    }

    /// Select a built-in target by name: `quartic` or `quadratic:a=<v>`.
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        if name == "quartic" {
            return Ok(Self::quartic(dim));
        }
        if let Some(rest) = name.strip_prefix("quadratic:") {
            let a = rest
                .strip_prefix("a=")
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::invalid(
                        "target",
                        format!("expected quadratic:a=<value>, got {name}"),
                    )
                })?;
            return Self::quadratic(a, dim);
        }
        Err(Error::invalid(
            "target",
            format!("unknown target `{name}` (expected `quartic` or `quadratic:a=<v>`)"),
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluate `u(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.value)(x)
    }

    /// Evaluate `h(x) = grad u(x)` into `out`.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        (self.grad)(x, out);
    }

    /// Evaluate `h(x)` into a fresh vector.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, &mut out);
        out
    }

    pub fn minimizer(&self) -> Option<&[f64]> {
        self.minimizer.as_deref()
    }

    /// Curvature of the quadratic target, if this is one.
    pub fn quadratic_curvature(&self) -> Option<f64> {
        self.quadratic_a
    }

    /// Exact second moment of the position marginal, `d/(beta a)`, known in
    /// closed form for quadratic targets only.
    pub fn exact_theta_second_moment(&self, beta: f64) -> Option<f64> {
        self.quadratic_a.map(|a| self.dim as f64 / (beta * a))
    }

    /// Radius of the ball that must contain the minimizer,
    /// `sqrt(2 u(0) / m)`.
    pub fn minimizer_radius_bound(&self) -> f64 {
        (2.0 * self.u0 / self.m).sqrt()
    }

    /// Check strong convexity, local Lipschitz continuity and dissipativity
    /// on randomly sampled pairs with coordinates uniform in
    /// `[-box_radius, box_radius]`. Returns the first violated condition.
    pub fn check_assumptions(
        &self,
        rng: &mut impl rand::Rng,
        n_pairs: usize,
        box_radius: f64,
    ) -> Result<()> {
        let d = self.dim;
        let mut hx = vec![0.0; d];
        let mut hy = vec![0.0; d];
        let uniform = rand::distr::Uniform::new_inclusive(-box_radius, box_radius)
            .map_err(|e| Error::invalid("box_radius", e.to_string()))?;
        for _ in 0..n_pairs {
            let x: Vec<f64> = (0..d).map(|_| rng.sample(uniform)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.sample(uniform)).collect();
            self.grad_into(&x, &mut hx);
            self.grad_into(&y, &mut hy);

            if self.value(&x) < 0.0 {
                return Err(Error::invalid("u", format!("u(x) < 0 at {x:?}")));
            }

            // the quadratic target saturates both inequalities with exact
            // equality, so the comparisons carry an ulp-scale allowance
            let slack = 1e-12;
            let diff2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            let inner: f64 = hx
                .iter()
                .zip(&hy)
                .zip(x.iter().zip(&y))
                .map(|((ha, hb), (a, b))| (ha - hb) * (a - b))
                .sum();
            if inner < 2.0 * self.m * diff2 * (1.0 - slack) {
                return Err(Error::invalid(
                    "m",
                    format!(
                        "strong convexity fails: <dh, dx> = {inner} < 2m|dx|^2 = {}",
                        2.0 * self.m * diff2
                    ),
                ));
            }

            let grad_diff = hx
                .iter()
                .zip(&hy)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let nx = norm(&x);
            let ny = norm(&y);
            let bound = self.lip_l * (1.0 + nx + ny).powf(self.growth_l) * diff2.sqrt();
            if grad_diff > bound * (1.0 + slack) {
                return Err(Error::invalid(
                    "lip_l",
                    format!("local Lipschitz bound fails: |dh| = {grad_diff} > {bound}"),
                ));
            }

            let diss: f64 = hx.iter().zip(&x).map(|(h, c)| h * c).sum();
            if diss < 0.5 * self.m * nx * nx - self.u0 {
                return Err(Error::invalid(
                    "u0",
                    format!("dissipativity fails: <h(x), x> = {diss}"),
                ));
            }
        }
        if let Some(ref xs) = self.minimizer {
            let r = norm(xs);
            if r > self.minimizer_radius_bound() + 1e-12 {
                return Err(Error::invalid(
                    "minimizer",
                    format!(
                        "|x*| = {r} exceeds sqrt(2 u(0)/m) = {}",
                        self.minimizer_radius_bound()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Moment bounds of the position marginal of the Gibbs measure.
#[derive(Debug, Clone)]
pub struct InvariantMeasureSpec {
    pub beta: f64,
    /// `(2/m)(u(0) + d/beta)`, a bound on the second moment.
    pub second_moment_bound: f64,
    /// Bounds on `E|Y|^p` for the requested even orders `p >= 2`.
    pub p_moment_bounds: BTreeMap<u32, f64>,
}

/// Bound on the p-th moment of the position marginal:
/// `2^{p-1} ( (d/(beta m))^{p/2} (1 + p/d)^{p/2 - 1} + ((2/m)(u(0) + d/beta))^{p/2} )`.
fn p_moment_bound(target: &TargetPotential, beta: f64, p: u32) -> f64 {
    let d = target.dim() as f64;
    let m = target.m;
    let p_f = f64::from(p);
    let gaussian_part = (d / (beta * m)).powf(p_f / 2.0) * (1.0 + p_f / d).powf(p_f / 2.0 - 1.0);
    let second = (2.0 / m) * (target.u0 + d / beta);
    2f64.powf(p_f - 1.0) * (gaussian_part + second.powf(p_f / 2.0))
}

/// Evaluate the invariant-measure moment bounds for the exponent `p >= 2`.
/// No sampling is performed; this is formula evaluation only.
pub fn invariant_moment_bounds(
    target: &TargetPotential,
    beta: f64,
    p: u32,
) -> Result<InvariantMeasureSpec> {
    require_positive("beta", beta)?;
    if p < 2 {
        return Err(Error::invalid("p", format!("must be >= 2, got {p}")));
    }
    let d = target.dim() as f64;
    let second_moment_bound = (2.0 / target.m) * (target.u0 + d / beta);
    let mut p_moment_bounds = BTreeMap::new();
    p_moment_bounds.insert(p, p_moment_bound(target, beta, p));
    Ok(InvariantMeasureSpec {
        beta,
        second_moment_bound,
        p_moment_bounds,
    })
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}
