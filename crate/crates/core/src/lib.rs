//! Tamed kinetic (underdamped) Langevin Monte Carlo for strongly convex
//! potentials whose gradients grow superlinearly.
//!
//! The library provides two samplers built on a monotone polygonal (tamed)
//! drift: a plain Euler discretization of the kinetic Langevin SDE and an
//! exponential-integrator variant driven by correlated Gaussian pairs. Both
//! remain stable where the untamed explicit Euler scheme explodes, and both
//! target the Gibbs measure with density proportional to `exp(-beta * u)`
//! in position and a standard Gaussian in momentum.
//!
//! Alongside the samplers live the verification tools used to check their
//! structural guarantees at desk scale: Moreau-Yosida envelopes and proximal
//! operators, invariant-measure moment bounds, one-dimensional and sliced
//! Wasserstein-2 diagnostics against quadrature references, a discrete
//! Lyapunov oracle for quadratic targets, and an excess-risk estimator for
//! the associated optimization problem.
//!
//! # Quick start
//!
//! ```
//! use tklmc::samplers::{run_chain, ChainConfig, InitialState, SamplerKind};
//! use tklmc::targets::TargetPotential;
//!
//! let target = TargetPotential::quartic(1);
//! let config = ChainConfig::new(2f64.powi(-7), 60.0, 5.0, 20_000, 2_000, 42);
//! let init = InitialState::Point(vec![0.0]);
//! let traj = run_chain(&target, &config, SamplerKind::Tklmc1, false, &init, 1).unwrap();
//! assert!(!traj.diverged);
//! ```

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod moreau;
pub mod samplers;
pub mod taming;
pub mod targets;

pub use error::{Error, Result};
