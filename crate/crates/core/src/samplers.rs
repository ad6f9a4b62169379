//! The two tamed kinetic samplers, an overdamped baseline, a discrete
//! Lyapunov oracle for quadratic targets, and parameter validation.
//!
//! Both kinetic samplers evolve a position/momentum pair `(theta, v)` whose
//! stationary law factorizes into the target position marginal and a
//! Gaussian momentum with variance `1/beta` per coordinate.
//!
//! * `tklmc1` is the plain Euler discretization
//!   `v' = v - lambda (gamma v + h_tam(theta)) + sqrt(2 gamma lambda / beta) xi`,
//!   `theta' = theta + lambda v` (the position update uses the pre-update
//!   momentum).
//! * `tklmc2` integrates the momentum equation exactly over the step and
//!   consumes a correlated Gaussian pair per iteration (see
//!   [`crate::kernels`]).
//!
//! Taming keeps both schemes stable for superlinearly growing gradients;
//! run with `untamed = true` to watch the raw Euler scheme explode.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{require_positive, Error, Result};
use crate::kernels::GaussianPairKernel;
use crate::taming::TamedGradient;
use crate::targets::TargetPotential;

/// Positions beyond this radius count as divergence even while finite,
/// separating taming's stability claim from float-overflow noise.
pub const DIVERGENCE_RADIUS: f64 = 1e10;

/// Sampler hyperparameters shared by every chain.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    /// Step size.
    pub lambda: f64,
    /// Friction.
    pub gamma: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Total iterations, including burn-in.
    pub n_steps: usize,
    /// Iterations discarded before recording starts; must stay below `n_steps`.
    pub burn_in: usize,
    pub seed: u64,
    /// Enforce the theoretical parameter restrictions instead of warning.
    pub strict_params: bool,
    /// Moreau-Yosida regularization parameter, consumed by validation only.
    pub epsilon: Option<f64>,
    /// Lipschitz constant of the regularized gradient; defaults to
    /// `1/epsilon` when unset.
    pub lipschitz_k: Option<f64>,
}

impl ChainConfig {
    pub fn new(
        lambda: f64,
        gamma: f64,
        beta: f64,
        n_steps: usize,
        burn_in: usize,
        seed: u64,
    ) -> Self {
        ChainConfig {
            lambda,
            gamma,
            beta,
            n_steps,
            burn_in,
            seed,
            strict_params: false,
            epsilon: None,
            lipschitz_k: None,
        }
    }

    /// `K`, either given directly or the worst case `1/epsilon`.
    pub fn resolved_k(&self) -> Option<f64> {
        self.lipschitz_k.or_else(|| self.epsilon.map(|e| 1.0 / e))
    }

    pub fn validate_basic(&self) -> Result<()> {
        require_positive("lambda", self.lambda)?;
        require_positive("gamma", self.gamma)?;
        require_positive("beta", self.beta)?;
        if self.n_steps == 0 || self.burn_in >= self.n_steps {
            return Err(Error::EmptyTrajectory);
        }
        Ok(())
    }
}

/// Position/momentum pair of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
}

impl KineticState {
    pub fn new(theta: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(theta.len(), v.len());
        KineticState { theta, v }
    }

    pub fn zeros(dim: usize) -> Self {
        KineticState {
            theta: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    /// False once any coordinate is non-finite or the position has left the
    /// divergence ball.
    pub fn is_stable(&self) -> bool {
        coords_stable(&self.theta, &self.v)
    }
}

/// Recorded states of one chain run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States kept every `thin` steps after burn-in.
    pub states: Vec<KineticState>,
    pub diverged: bool,
    pub divergence_step: Option<usize>,
}

impl Trajectory {
    /// Positions of the recorded states as rows.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.theta.clone()).collect()
    }

    /// First coordinates of the recorded positions (the natural series for
    /// one-dimensional chains).
    pub fn positions_1d(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.theta[0]).collect()
    }
}

/// Which recursion drives the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Tklmc1,
    Tklmc2,
    OverdampedTamed,
}

impl SamplerKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "tklmc1" => Some(SamplerKind::Tklmc1),
            "tklmc2" => Some(SamplerKind::Tklmc2),
            "overdamped" => Some(SamplerKind::OverdampedTamed),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Tklmc1 => "tklmc1",
            SamplerKind::Tklmc2 => "tklmc2",
            SamplerKind::OverdampedTamed => "overdamped",
        }
    }
}

/// How a chain is initialized.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Deterministic start at the given position with zero momentum.
    Point(Vec<f64>),
    /// Position and momentum drawn as `scale * N(0, I)`.
    Gaussian { scale: f64 },
}

impl InitialState {
    fn draw(&self, dim: usize, rng: &mut impl Rng) -> KineticState {
        match self {
            InitialState::Point(p) => {
                assert_eq!(p.len(), dim, "initial point dimension mismatch");
                KineticState::new(p.clone(), vec![0.0; dim])
            }
            InitialState::Gaussian { scale } => {
                let theta = (0..dim)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let v = (0..dim)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                KineticState::new(theta, v)
            }
        }
    }
}

/// One Euler step: `v' = v - lambda (gamma v + h_tam(theta)) + sqrt(2 gamma
/// lambda / beta) xi`, `theta' = theta + lambda v` with the old momentum.
pub fn tklmc1_step(
    target: &TargetPotential,
    config: &ChainConfig,
    state: &KineticState,
    xi: &[f64],
) -> Result<KineticState> {
    let tamed = TamedGradient::new(target, config.gamma)?;
    let drift = tamed.eval(&state.theta);
    Ok(kinetic_euler_step(config, state, &drift, xi))
}

fn euler_update(config: &ChainConfig, theta: &mut [f64], v: &mut [f64], drift: &[f64], xi: &[f64]) {
    let lambda = config.lambda;
    let noise = (2.0 * config.gamma * lambda / config.beta).sqrt();
    for i in 0..theta.len() {
        let vi = v[i];
        v[i] = vi - lambda * (config.gamma * vi + drift[i]) + noise * xi[i];
        theta[i] += lambda * vi;
    }
}

fn kinetic_euler_step(
    config: &ChainConfig,
    state: &KineticState,
    drift: &[f64],
    xi: &[f64],
) -> KineticState {
    let mut next = state.clone();
    euler_update(config, &mut next.theta, &mut next.v, drift, xi);
    next
}

/// One exponential-integrator step driven by a correlated pair from a
/// kernel built for the same `(gamma, lambda)`:
/// `v' = psi0 v - psi1 h_tam(theta) + sqrt(2 gamma / beta) Xi`,
/// `theta' = theta + psi1 v - psi2 h_tam(theta) + sqrt(2 gamma / beta) Xi'`.
pub fn tklmc2_step(
    target: &TargetPotential,
    config: &ChainConfig,
    kernel: &GaussianPairKernel,
    state: &KineticState,
    pair: (&[f64], &[f64]),
) -> Result<KineticState> {
    if kernel.gamma != config.gamma || kernel.lambda != config.lambda {
        return Err(Error::KernelMismatch {
            kernel_gamma: kernel.gamma,
            kernel_lambda: kernel.lambda,
            config_gamma: config.gamma,
            config_lambda: config.lambda,
        });
    }
    let tamed = TamedGradient::new(target, config.gamma)?;
    let drift = tamed.eval(&state.theta);
    Ok(exponential_step(config, kernel, state, &drift, pair))
}

fn exponential_update(
    config: &ChainConfig,
    kernel: &GaussianPairKernel,
    theta: &mut [f64],
    v: &mut [f64],
    drift: &[f64],
    (xi, xi_prime): (&[f64], &[f64]),
) {
    let noise = (2.0 * config.gamma / config.beta).sqrt();
    for i in 0..theta.len() {
        let vi = v[i];
        v[i] = kernel.psi0 * vi - kernel.psi1 * drift[i] + noise * xi[i];
        theta[i] += kernel.psi1 * vi - kernel.psi2 * drift[i] + noise * xi_prime[i];
    }
}

fn exponential_step(
    config: &ChainConfig,
    kernel: &GaussianPairKernel,
    state: &KineticState,
    drift: &[f64],
    pair: (&[f64], &[f64]),
) -> KineticState {
    let mut next = state.clone();
    exponential_update(config, kernel, &mut next.theta, &mut next.v, drift, pair);
    next
}

/// One overdamped Euler step with the tamed drift:
/// `theta' = theta - lambda h_tam(theta) + sqrt(2 lambda / beta) xi`.
pub fn overdamped_tamed_step(
    target: &TargetPotential,
    config: &ChainConfig,
    theta: &[f64],
    xi: &[f64],
) -> Result<Vec<f64>> {
    let tamed = TamedGradient::new(target, config.gamma)?;
    let drift = tamed.eval(theta);
    let mut next = theta.to_vec();
    overdamped_update(config, &mut next, &drift, xi);
    Ok(next)
}

fn overdamped_update(config: &ChainConfig, theta: &mut [f64], drift: &[f64], xi: &[f64]) {
    let noise = (2.0 * config.lambda / config.beta).sqrt();
    for i in 0..theta.len() {
        theta[i] += -config.lambda * drift[i] + noise * xi[i];
    }
}

fn coords_stable(theta: &[f64], v: &[f64]) -> bool {
    if !theta.iter().chain(v).all(|c| c.is_finite()) {
        return false;
    }
    theta.iter().map(|c| c * c).sum::<f64>() <= DIVERGENCE_RADIUS * DIVERGENCE_RADIUS
}

/// Stationary covariance of the per-coordinate `(theta, v)` pair of the
/// untamed Euler recursion on the quadratic target with curvature `a`.
///
/// Solves `S = A S A^T + Q` by fixed-point iteration, where
/// `A = [[1, lambda], [-lambda a, 1 - lambda gamma]]` and
/// `Q = diag(0, 2 gamma lambda / beta)`. Fails when the one-step map has
/// spectral radius at or above one.
pub fn exact_klmc_quadratic_stationary_cov(a: f64, config: &ChainConfig) -> Result<[[f64; 2]; 2]> {
    require_positive("a", a)?;
    let lambda = config.lambda;
    let gamma = config.gamma;
    let a_mat = [[1.0, lambda], [-lambda * a, 1.0 - lambda * gamma]];

    let trace = a_mat[0][0] + a_mat[1][1];
    let det = a_mat[0][0] * a_mat[1][1] - a_mat[0][1] * a_mat[1][0];
    let disc = trace * trace - 4.0 * det;
    let rho = if disc >= 0.0 {
        let s = disc.sqrt();
        ((trace + s).abs()).max((trace - s).abs()) / 2.0
    } else {
        det.sqrt()
    };
    if rho >= 1.0 {
        return Err(Error::UnstableStepMap { rho });
    }

    let q22 = 2.0 * gamma * lambda / config.beta;
    let mut s = [[0.0f64; 2]; 2];
    for _ in 0..10_000_000usize {
        let next = propagate_cov(&a_mat, &s, q22);
        let delta = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (next[i][j] - s[i][j]).abs())
            .fold(0.0f64, f64::max);
        s = next;
        if delta < 1e-14 {
            return Ok(s);
        }
    }
    Ok(s)
}

fn propagate_cov(a: &[[f64; 2]; 2], s: &[[f64; 2]; 2], q22: f64) -> [[f64; 2]; 2] {
    // A S A^T + diag(0, q22)
    let mut asat = [[0.0f64; 2]; 2];
    let mut as_ = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            as_[i][j] = a[i][0] * s[0][j] + a[i][1] * s[1][j];
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            asat[i][j] = as_[i][0] * a[j][0] + as_[i][1] * a[j][1];
        }
    }
    asat[1][1] += q22;
    asat
}

/// One theoretical parameter restriction that does not hold.
#[derive(Debug, Clone)]
pub struct ParamViolation {
    pub constraint: String,
    pub message: String,
    /// Advisory entries carry constants the analysis never pins down
    /// numerically; they warn but never fail strict validation.
    pub advisory: bool,
}

impl std::fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.advisory {
            "advisory"
        } else {
            "violation"
        };
        write!(f, "[{tag}] {}: {}", self.constraint, self.message)
    }
}

/// Check the chain parameters against the theoretical restrictions of the
/// chosen sampler. Empty result means everything holds.
///
/// For `tklmc1` the friction floor is
/// `max{ sqrt((K+m)/beta), K, 32, 48(2m+1)^2/m }` together with
/// `lambda < 1/gamma`. For `tklmc2` the floor is `sqrt(2K/beta)` plus
/// `lambda gamma < 1`, and the `lambda <= gamma^-5` scale is reported as
/// advisory because its constant is never stated numerically.
pub fn validate_params(
    target: &TargetPotential,
    config: &ChainConfig,
    algorithm: SamplerKind,
) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    let m = target.m;
    let k = config.resolved_k();
    match algorithm {
        SamplerKind::Tklmc1 => {
            let mut floor = 32f64.max(48.0 * (2.0 * m + 1.0).powi(2) / m);
            match k {
                Some(k) => {
                    floor = floor.max(((k + m) / config.beta).sqrt()).max(k);
                }
                None => out.push(ParamViolation {
                    constraint: "gamma_min".into(),
                    message: "K unresolved (set epsilon or lipschitz_k); K-dependent entries of the friction floor were not checked".into(),
                    advisory: true,
                }),
            }
            if config.gamma < floor {
                out.push(ParamViolation {
                    constraint: "gamma_min".into(),
                    message: format!(
                        "gamma = {} is below the tklmc1 friction floor {}",
                        config.gamma, floor
                    ),
                    advisory: false,
                });
            }
            if config.lambda >= 1.0 / config.gamma {
                out.push(ParamViolation {
                    constraint: "lambda_max".into(),
                    message: format!(
                        "lambda = {} must stay below 1/gamma = {}",
                        config.lambda,
                        1.0 / config.gamma
                    ),
                    advisory: false,
                });
            }
        }
        SamplerKind::Tklmc2 => {
            match k {
                Some(k) => {
                    let floor = (2.0 * k / config.beta).sqrt();
                    if config.gamma < floor {
                        out.push(ParamViolation {
                            constraint: "gamma_min".into(),
                            message: format!("gamma = {} is below the tklmc2 friction floor {}", config.gamma, floor),
                            advisory: false,
                        });
                    }
                }
                None => out.push(ParamViolation {
                    constraint: "gamma_min".into(),
                    message: "K unresolved (set epsilon or lipschitz_k); the friction floor sqrt(2K/beta) was not checked".into(),
                    advisory: true,
                }),
            }
            if config.lambda * config.gamma >= 1.0 {
                out.push(ParamViolation {
                    constraint: "lambda_max".into(),
                    message: format!(
                        "lambda * gamma = {} must stay below 1",
                        config.lambda * config.gamma
                    ),
                    advisory: false,
                });
            }
            let scale = config.gamma.powi(-5);
            if config.lambda > scale {
                out.push(ParamViolation {
                    constraint: "lambda_scale".into(),
                    message: format!(
                        "lambda = {} exceeds the gamma^-5 = {scale:e} scale (unpinned constant taken as 1)",
                        config.lambda
                    ),
                    advisory: true,
                });
            }
        }
        SamplerKind::OverdampedTamed => {}
    }
    out
}

/// Render violations one per line, as the CLI and strict mode report them.
pub fn violation_report(violations: &[ParamViolation]) -> String {
    violations
        .iter()
        .map(ParamViolation::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Pure derivation of per-chain seeds; distinct indices give distinct seeds.
pub fn derive_chain_seed(seed: u64, chain_index: u64) -> u64 {
    splitmix64(seed ^ (chain_index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run one chain and record every `thin`-th state after burn-in.
///
/// With `untamed = true` the raw gradient replaces the tamed one; this is a
/// validation mode for demonstrating the explosion of the plain scheme, and
/// divergence is reported through the trajectory flags rather than an error.
pub fn run_chain(
    target: &TargetPotential,
    config: &ChainConfig,
    kind: SamplerKind,
    untamed: bool,
    init: &InitialState,
    thin: usize,
) -> Result<Trajectory> {
    config.validate_basic()?;
    if thin == 0 {
        return Err(Error::invalid("thin", "must be at least 1"));
    }
    if config.strict_params {
        let violations = validate_params(target, config, kind);
        if violations.iter().any(|v| !v.advisory) {
            return Err(Error::ValidationFailed {
                report: violation_report(&violations),
            });
        }
    }

    let dim = target.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let state = init.draw(dim, &mut rng);
    let (mut theta, mut v) = (state.theta, state.v);
    let tamed = TamedGradient::new(target, config.gamma)?;
    let kernel = match kind {
        SamplerKind::Tklmc2 => Some(GaussianPairKernel::build(config.gamma, config.lambda)?),
        _ => None,
    };

    let capacity = (config.n_steps - config.burn_in).div_ceil(thin);
    let mut states = Vec::with_capacity(capacity);
    let mut drift = vec![0.0; dim];
    let mut xi = vec![0.0; dim];
    let mut xi_prime = vec![0.0; dim];

    for step in 1..=config.n_steps {
        if untamed {
            target.grad_into(&theta, &mut drift);
        } else {
            tamed.eval_into(&theta, &mut drift);
        }
        match kind {
            SamplerKind::Tklmc1 => {
                fill_standard_normal(&mut rng, &mut xi);
                euler_update(config, &mut theta, &mut v, &drift, &xi);
            }
            SamplerKind::Tklmc2 => {
                let kernel = kernel.as_ref().expect("kernel built for tklmc2");
                kernel.sample_pair_into(&mut rng, &mut xi, &mut xi_prime);
                exponential_update(config, kernel, &mut theta, &mut v, &drift, (&xi, &xi_prime));
            }
            SamplerKind::OverdampedTamed => {
                fill_standard_normal(&mut rng, &mut xi);
                overdamped_update(config, &mut theta, &drift, &xi);
            }
        }
        if !coords_stable(&theta, &v) {
            return Ok(Trajectory {
                states,
                diverged: true,
                divergence_step: Some(step),
            });
        }
        if step > config.burn_in && (step - config.burn_in - 1).is_multiple_of(thin) {
            states.push(KineticState::new(theta.clone(), v.clone()));
        }
    }

    Ok(Trajectory {
        states,
        diverged: false,
        divergence_step: None,
    })
}

fn fill_standard_normal(rng: &mut impl Rng, out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = rng.sample(StandardNormal);
    }
}
