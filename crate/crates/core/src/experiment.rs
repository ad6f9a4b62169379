//! Batch experiment runner: flat `key = value` configs, multi-chain
//! execution with derived seeds, diagnostics aggregation and CSV artifacts.
//!
//! The config format is deliberately flat so any tool can write it: one
//! `key = value` per line, `#` starts a comment line, unknown keys are
//! errors. [`ExperimentSpec::render`] produces a canonical config that
//! parses back to an identical spec, which is what makes byte-identical
//! reruns checkable.
//!
//! Artifacts land in `out_dir`:
//!
//! * `metrics.csv` - rows `metric,value,tolerance,pass`
//! * `summary.txt` - flat `key = value` echo of the spec plus run outcome
//! * `trajectory.csv` - optional, `step,chain,theta_0..,v_0..`
//! * `histogram.csv` - optional, 100-bin density of the first coordinate

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{
    batch_means_se, build_reference_1d, build_reference_radial, excess_risk_estimate,
    geometric_decay_fit, w2_1d_empirical_vs_reference, ReferenceTarget1D,
};
use crate::error::{require_positive, Error, Result};
use crate::samplers::{
    derive_chain_seed, exact_klmc_quadratic_stationary_cov, run_chain, validate_params,
    violation_report, ChainConfig, InitialState, ParamViolation, SamplerKind, Trajectory,
};
use crate::targets::{invariant_moment_bounds, TargetPotential};

/// Which engine an experiment drives: one of the chain samplers, or the
/// closed-form stationary covariance for quadratic targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerChoice {
    Chain(SamplerKind),
    ExactQuadratic,
}

impl SamplerChoice {
    pub fn parse(name: &str) -> Option<Self> {
        if name == "exact-quadratic" {
            return Some(SamplerChoice::ExactQuadratic);
        }
        SamplerKind::parse(name).map(SamplerChoice::Chain)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerChoice::Chain(kind) => kind.name(),
            SamplerChoice::ExactQuadratic => "exact-quadratic",
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub target: String,
    pub sampler: SamplerChoice,
    pub dim: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub beta: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub n_chains: usize,
    pub thin: usize,
    pub strict: bool,
    pub untamed: bool,
    pub epsilon: Option<f64>,
    pub lipschitz_k: Option<f64>,
    pub init: InitialState,
    /// Compute the Wasserstein-2 distance to the quadrature reference.
    pub w2: bool,
    /// Moment orders to report; order 2 is named `theta_second_moment`.
    pub moments: Vec<u32>,
    pub excess_risk: bool,
    pub decay_fit: bool,
    pub trajectory: bool,
    pub histogram: bool,
    /// Reference and histogram support radius; derived from the target when unset.
    pub tail_radius: Option<f64>,
    pub out_dir: PathBuf,
    /// Worker threads for concurrent chains; 0 picks the default.
    pub jobs: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            target: "quartic".into(),
            sampler: SamplerChoice::Chain(SamplerKind::Tklmc1),
            dim: 1,
            lambda: 0.0078125,
            gamma: 60.0,
            beta: 5.0,
            n_steps: 153_600,
            burn_in: 0,
            seed: 0,
            n_chains: 1,
            thin: 1,
            strict: false,
            untamed: false,
            epsilon: None,
            lipschitz_k: None,
            init: InitialState::Point(vec![0.0]),
            w2: true,
            moments: vec![2],
            excess_risk: false,
            decay_fit: false,
            trajectory: false,
            histogram: false,
            tail_radius: None,
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

fn parse_or<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        reason: format!("cannot parse `{value}` for key `{key}`"),
    })
}

fn parse_init(value: &str, line: usize) -> Result<InitialState> {
    if let Some(rest) = value.strip_prefix("point:") {
        let coords: Result<Vec<f64>> = rest
            .split(',')
            .map(|c| parse_or::<f64>(c.trim(), line, "init"))
            .collect();
        let coords = coords?;
        if coords.is_empty() {
            return Err(Error::Config {
                line,
                reason: "init point needs at least one coordinate".into(),
            });
        }
        return Ok(InitialState::Point(coords));
    }
    if let Some(rest) = value.strip_prefix("gaussian:") {
        let scale: f64 = parse_or(rest.trim(), line, "init")?;
        return Ok(InitialState::Gaussian { scale });
    }
    Err(Error::Config {
        line,
        reason: format!("init must be point:<c1,..> or gaussian:<scale>, got `{value}`"),
    })
}

fn render_init(init: &InitialState) -> String {
    match init {
        InitialState::Point(coords) => {
            let joined = coords
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            format!("point:{joined}")
        }
        InitialState::Gaussian { scale } => format!("gaussian:{scale}"),
    }
}

impl ExperimentSpec {
    /// Apply one `key = value` assignment. `line` is used in error messages.
    pub fn apply_kv(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "target" => self.target = value.to_string(),
            "sampler" => {
                self.sampler = SamplerChoice::parse(value).ok_or_else(|| Error::Config {
                    line,
                    reason: format!(
                        "unknown sampler `{value}` (tklmc1|tklmc2|overdamped|exact-quadratic)"
                    ),
                })?;
            }
            "dim" => self.dim = parse_or(value, line, key)?,
            "lambda" => self.lambda = parse_or(value, line, key)?,
            "gamma" => self.gamma = parse_or(value, line, key)?,
            "beta" => self.beta = parse_or(value, line, key)?,
            "n_steps" => self.n_steps = parse_or(value, line, key)?,
            "burn_in" => self.burn_in = parse_or(value, line, key)?,
            "seed" => self.seed = parse_or(value, line, key)?,
            "n_chains" => self.n_chains = parse_or(value, line, key)?,
            "thin" => self.thin = parse_or(value, line, key)?,
            "strict" => self.strict = parse_or(value, line, key)?,
            "untamed" => self.untamed = parse_or(value, line, key)?,
            "epsilon" => self.epsilon = Some(parse_or(value, line, key)?),
            "lipschitz_k" => self.lipschitz_k = Some(parse_or(value, line, key)?),
            "init" => self.init = parse_init(value, line)?,
            "w2" => self.w2 = parse_or(value, line, key)?,
            "moments" => {
                self.moments = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_or::<u32>(v.trim(), line, key))
                        .collect::<Result<Vec<_>>>()?
                };
            }
            "excess_risk" => self.excess_risk = parse_or(value, line, key)?,
            "decay_fit" => self.decay_fit = parse_or(value, line, key)?,
            "trajectory" => self.trajectory = parse_or(value, line, key)?,
            "histogram" => self.histogram = parse_or(value, line, key)?,
            "tail_radius" => self.tail_radius = Some(parse_or(value, line, key)?),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "jobs" => self.jobs = parse_or(value, line, key)?,
            _ => {
                return Err(Error::Config {
                    line,
                    reason: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    /// Canonical config text; `parse_config(render(spec))` reproduces the spec.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "target = {}", self.target);
        let _ = writeln!(s, "sampler = {}", self.sampler.name());
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "n_steps = {}", self.n_steps);
        let _ = writeln!(s, "burn_in = {}", self.burn_in);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n_chains = {}", self.n_chains);
        let _ = writeln!(s, "thin = {}", self.thin);
        let _ = writeln!(s, "strict = {}", self.strict);
        let _ = writeln!(s, "untamed = {}", self.untamed);
        if let Some(e) = self.epsilon {
            let _ = writeln!(s, "epsilon = {e}");
        }
        if let Some(k) = self.lipschitz_k {
            let _ = writeln!(s, "lipschitz_k = {k}");
        }
        let _ = writeln!(s, "init = {}", render_init(&self.init));
        let _ = writeln!(s, "w2 = {}", self.w2);
        let _ = writeln!(
            s,
            "moments = {}",
            self.moments
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(s, "excess_risk = {}", self.excess_risk);
        let _ = writeln!(s, "decay_fit = {}", self.decay_fit);
        let _ = writeln!(s, "trajectory = {}", self.trajectory);
        let _ = writeln!(s, "histogram = {}", self.histogram);
        if let Some(t) = self.tail_radius {
            let _ = writeln!(s, "tail_radius = {t}");
        }
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "jobs = {}", self.jobs);
        s
    }

    /// Check cross-field constraints; parse and the CLI both call this after
    /// all assignments have been applied.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        let target = TargetPotential::from_name(&self.target, self.dim)?;
        require_positive("lambda", self.lambda)?;
        require_positive("gamma", self.gamma)?;
        require_positive("beta", self.beta)?;
        if self.n_steps == 0 || self.burn_in >= self.n_steps {
            return Err(Error::invalid("n_steps", "burn_in must stay below n_steps"));
        }
        if self.n_chains == 0 {
            return Err(Error::invalid("n_chains", "must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin", "must be at least 1"));
        }
        if let Some(e) = self.epsilon {
            require_positive("epsilon", e)?;
        }
        if let Some(k) = self.lipschitz_k {
            require_positive("lipschitz_k", k)?;
        }
        if let Some(t) = self.tail_radius {
            require_positive("tail_radius", t)?;
        }
        if let InitialState::Point(ref coords) = self.init {
            if coords.len() != 1 && coords.len() != self.dim {
                return Err(Error::invalid(
                    "init",
                    format!(
                        "point has {} coordinates but dim = {}",
                        coords.len(),
                        self.dim
                    ),
                ));
            }
        }
        if self.sampler == SamplerChoice::ExactQuadratic && target.quadratic_curvature().is_none() {
            return Err(Error::invalid(
                "sampler",
                "exact-quadratic needs a quadratic target",
            ));
        }
        Ok(())
    }

    pub fn chain_config(&self) -> ChainConfig {
        let mut config = ChainConfig::new(
            self.lambda,
            self.gamma,
            self.beta,
            self.n_steps,
            self.burn_in,
            self.seed,
        );
        config.strict_params = self.strict;
        config.epsilon = self.epsilon;
        config.lipschitz_k = self.lipschitz_k;
        config
    }
}

/// Parse a config file body into a validated spec.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    parse_config_with_overrides(text, &[])
}

/// Parse a config file body, then apply CLI-style overrides on top.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Config {
            line,
            reason: format!("expected `key = value`, got `{trimmed}`"),
        })?;
        spec.apply_kv(key.trim(), value.trim(), line)?;
    }
    for (key, value) in overrides {
        spec.apply_kv(key, value, 0)?;
    }
    spec.validate()?;
    Ok(spec)
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone)]
pub struct MetricRow {
    pub metric: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl MetricRow {
    fn plain(metric: impl Into<String>, value: f64) -> Self {
        MetricRow {
            metric: metric.into(),
            value,
            tolerance: None,
            pass: None,
        }
    }

    fn checked(metric: impl Into<String>, value: f64, tolerance: f64, pass: bool) -> Self {
        MetricRow {
            metric: metric.into(),
            value,
            tolerance: Some(tolerance),
            pass: Some(pass),
        }
    }
}

/// Outcome of a run, with everything the CLI needs for exit codes and
/// warnings.
#[derive(Debug)]
pub struct ExperimentReport {
    pub diverged: bool,
    /// `(chain index, step)` of the first divergence.
    pub divergence: Option<(usize, usize)>,
    pub violations: Vec<ParamViolation>,
    pub metrics: Vec<MetricRow>,
    pub n_recorded: usize,
}

/// Support radius that pushes the boundary density below the construction
/// floor, found by doubling.
pub fn auto_tail_radius(target: &TargetPotential, beta: f64) -> f64 {
    let mut probe = vec![0.0; target.dim()];
    let u_min = target
        .minimizer()
        .map(|m| target.value(m))
        .unwrap_or(0.0)
        .min(target.u0);
    let mut tail = 1.0f64;
    for _ in 0..60 {
        probe[0] = tail;
        if beta * (target.value(&probe) - u_min) > 40.0 {
            return tail;
        }
        tail *= 2.0;
    }
    tail
}

fn build_reference(target: &TargetPotential, spec: &ExperimentSpec) -> Result<ReferenceTarget1D> {
    let tail = spec
        .tail_radius
        .unwrap_or_else(|| auto_tail_radius(target, spec.beta));
    if spec.dim == 1 {
        build_reference_1d(target, spec.beta, tail, 16_001)
    } else {
        build_reference_radial(target, spec.beta, tail, 16_001)
    }
}

/// Project recorded positions onto the axis the reference lives on: the
/// coordinate itself in one dimension, the radius otherwise.
fn reference_coordinate(theta: &[f64]) -> f64 {
    if theta.len() == 1 {
        theta[0]
    } else {
        theta.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Run the experiment and write `metrics.csv`, `summary.txt` and any
/// requested optional artifacts into `spec.out_dir`.
///
/// Strict-mode validation failures surface as [`Error::ValidationFailed`];
/// divergence is reported through the returned report, with artifacts
/// still written for the completed portion.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let target = TargetPotential::from_name(&spec.target, spec.dim)?;
    let config = spec.chain_config();

    let mut report = ExperimentReport {
        diverged: false,
        divergence: None,
        violations: Vec::new(),
        metrics: Vec::new(),
        n_recorded: 0,
    };

    match spec.sampler {
        SamplerChoice::ExactQuadratic => {
            let a = target
                .quadratic_curvature()
                .expect("validated: exact-quadratic needs a quadratic target");
            let sigma = exact_klmc_quadratic_stationary_cov(a, &config)?;
            report
                .metrics
                .push(MetricRow::plain("sigma_theta_theta", sigma[0][0]));
            report
                .metrics
                .push(MetricRow::plain("sigma_theta_v", sigma[0][1]));
            report
                .metrics
                .push(MetricRow::plain("sigma_v_v", sigma[1][1]));
        }
        SamplerChoice::Chain(kind) => {
            report.violations = validate_params(&target, &config, kind);
            if spec.strict && report.violations.iter().any(|v| !v.advisory) {
                return Err(Error::ValidationFailed {
                    report: violation_report(&report.violations),
                });
            }
            let chains = run_chains(&target, spec, &config, kind)?;
            for (idx, traj) in chains.iter().enumerate() {
                if traj.diverged {
                    report.diverged = true;
                    report.divergence = Some((idx, traj.divergence_step.expect("diverged")));
                    break;
                }
            }
            report.n_recorded = chains.iter().map(|c| c.states.len()).sum();
            if report.n_recorded > 0 {
                compute_metrics(&target, spec, &chains, &mut report)?;
            }
            write_artifacts(spec, &chains)?;
        }
    }

    write_metrics_csv(&spec.out_dir, &report.metrics)?;
    write_summary(spec, &report)?;
    Ok(report)
}

fn run_chains(
    target: &TargetPotential,
    spec: &ExperimentSpec,
    config: &ChainConfig,
    kind: SamplerKind,
) -> Result<Vec<Trajectory>> {
    // strictness was already enforced at the experiment level
    let mut base = config.clone();
    base.strict_params = false;
    let init = match &spec.init {
        InitialState::Point(coords) if coords.len() == 1 && spec.dim > 1 => {
            InitialState::Point(vec![coords[0]; spec.dim])
        }
        other => other.clone(),
    };
    let run_one = |chain_idx: usize| -> Result<Trajectory> {
        let mut config = base.clone();
        config.seed = derive_chain_seed(spec.seed, chain_idx as u64);
        run_chain(target, &config, kind, spec.untamed, &init, spec.thin)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    pool.install(|| (0..spec.n_chains).into_par_iter().map(run_one).collect())
}

fn compute_metrics(
    target: &TargetPotential,
    spec: &ExperimentSpec,
    chains: &[Trajectory],
    report: &mut ExperimentReport,
) -> Result<()> {
    let metrics = &mut report.metrics;

    if !spec.moments.is_empty() {
        for &order in &spec.moments {
            let per_chain_terms: Vec<Vec<f64>> = chains
                .iter()
                .map(|c| {
                    c.states
                        .iter()
                        .map(|s| reference_norm_pow(&s.theta, order))
                        .collect()
                })
                .collect();
            let refs: Vec<&[f64]> = per_chain_terms.iter().map(Vec::as_slice).collect();
            let total: usize = per_chain_terms.iter().map(Vec::len).sum();
            let value = per_chain_terms.iter().flatten().sum::<f64>() / total as f64;
            let se = batch_means_se(&refs, 20);
            let name = if order == 2 {
                "theta_second_moment".to_string()
            } else {
                format!("theta_moment_{order}")
            };
            let row = match (target.exact_theta_second_moment(spec.beta), order, se) {
                (Some(exact), 2, Some(se)) => {
                    let tol = 4.0 * se;
                    MetricRow::checked(name, value, tol, (value - exact).abs() <= tol)
                }
                _ => {
                    let bound = if order == 2 {
                        invariant_moment_bounds(target, spec.beta, 2)?.second_moment_bound
                    } else {
                        invariant_moment_bounds(target, spec.beta, order.max(2))?.p_moment_bounds
                            [&order.max(2)]
                    };
                    let tol = bound + 4.0 * se.unwrap_or(0.0);
                    MetricRow::checked(name, value, tol, value <= tol)
                }
            };
            metrics.push(row);
        }

        let v_terms: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| {
                c.states
                    .iter()
                    .map(|s| reference_norm_pow(&s.v, 2))
                    .collect()
            })
            .collect();
        let total: usize = v_terms.iter().map(Vec::len).sum();
        let value = v_terms.iter().flatten().sum::<f64>() / total as f64;
        metrics.push(MetricRow::plain("v_second_moment", value));
    }

    let need_reference = spec.w2 || spec.decay_fit;
    let reference = if need_reference {
        Some(build_reference(target, spec)?)
    } else {
        None
    };

    if spec.w2 {
        let reference = reference.as_ref().expect("built above");
        let pooled: Vec<f64> = chains
            .iter()
            .flat_map(|c| c.states.iter().map(|s| reference_coordinate(&s.theta)))
            .collect();
        let w2 = w2_1d_empirical_vs_reference(&pooled, reference)?;
        metrics.push(MetricRow::plain("w2_reference", w2));
        if chains.len() >= 2 {
            let per_chain: Vec<f64> = chains
                .iter()
                .filter(|c| !c.states.is_empty())
                .map(|c| {
                    let coords: Vec<f64> = c
                        .states
                        .iter()
                        .map(|s| reference_coordinate(&s.theta))
                        .collect();
                    w2_1d_empirical_vs_reference(&coords, reference)
                })
                .collect::<Result<_>>()?;
            if per_chain.len() >= 2 {
                let n = per_chain.len() as f64;
                let mean = per_chain.iter().sum::<f64>() / n;
                let var = per_chain
                    .iter()
                    .map(|w| (w - mean) * (w - mean))
                    .sum::<f64>()
                    / (n - 1.0);
                metrics.push(MetricRow::plain("w2_reference_se", (var / n).sqrt()));
            }
        }
    }

    if spec.decay_fit {
        let reference = reference.as_ref().expect("built above");
        let series: Vec<f64> = chains[0]
            .states
            .iter()
            .map(|s| reference_coordinate(&s.theta))
            .collect();
        let n_windows = 20usize;
        if series.len() < n_windows * 2 {
            return Err(Error::invalid(
                "decay_fit",
                format!(
                    "needs at least {} recorded states in the first chain",
                    n_windows * 2
                ),
            ));
        }
        let window = series.len() / n_windows;
        let mut points = Vec::with_capacity(n_windows);
        for w in 0..n_windows {
            let chunk = &series[w * window..(w + 1) * window];
            let dist = w2_1d_empirical_vs_reference(chunk, reference)?;
            let mid_record = w * window + window / 2;
            let step = spec.burn_in + 1 + mid_record * spec.thin;
            points.push((step as f64, dist));
        }
        let fit = geometric_decay_fit(&points)?;
        metrics.push(MetricRow::plain("decay_rate", fit.rate));
        metrics.push(MetricRow::plain("decay_r_squared", fit.r_squared));
    }

    if spec.excess_risk {
        let positions: Vec<Vec<f64>> = chains
            .iter()
            .flat_map(|c| c.states.iter().map(|s| s.theta.clone()))
            .collect();
        let er = excess_risk_estimate(target, spec.beta, &positions)?;
        let per_chain_terms: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| {
                c.states
                    .iter()
                    .map(|s| {
                        let r: f64 = s.theta.iter().map(|c| c * c).sum::<f64>().sqrt();
                        if r <= er.r0 {
                            target.value(&s.theta)
                        } else {
                            target.u0
                        }
                    })
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = per_chain_terms.iter().map(Vec::as_slice).collect();
        let se = batch_means_se(&refs, 20).unwrap_or(0.0);
        let tol = er.bound_tail + 4.0 * se;
        metrics.push(MetricRow::checked(
            "excess_risk",
            er.estimate,
            tol,
            er.estimate <= tol,
        ));
        metrics.push(MetricRow::plain("excess_risk_r0", er.r0));
        metrics.push(MetricRow::plain("excess_risk_tail_bound", er.bound_tail));
    }

    Ok(())
}

fn reference_norm_pow(x: &[f64], order: u32) -> f64 {
    x.iter()
        .map(|c| c * c)
        .sum::<f64>()
        .sqrt()
        .powi(order as i32)
}

fn write_artifacts(spec: &ExperimentSpec, chains: &[Trajectory]) -> Result<()> {
    fs::create_dir_all(&spec.out_dir)?;

    if spec.trajectory {
        let path = spec.out_dir.join("trajectory.csv");
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        write!(out, "step,chain")?;
        for i in 0..spec.dim {
            write!(out, ",theta_{i}")?;
        }
        for i in 0..spec.dim {
            write!(out, ",v_{i}")?;
        }
        writeln!(out)?;
        for (chain_idx, traj) in chains.iter().enumerate() {
            for (k, state) in traj.states.iter().enumerate() {
                let step = spec.burn_in + 1 + k * spec.thin;
                write!(out, "{step},{chain_idx}")?;
                for c in &state.theta {
                    write!(out, ",{c}")?;
                }
                for c in &state.v {
                    write!(out, ",{c}")?;
                }
                writeln!(out)?;
            }
        }
        out.flush()?;
    }

    if spec.histogram {
        let target = TargetPotential::from_name(&spec.target, spec.dim)?;
        let tail = spec
            .tail_radius
            .unwrap_or_else(|| auto_tail_radius(&target, spec.beta));
        let n_bins = 100usize;
        let lo = -tail;
        let width = 2.0 * tail / n_bins as f64;
        let mut counts = vec![0u64; n_bins];
        let mut total = 0u64;
        for traj in chains {
            for s in &traj.states {
                let x = s.theta[0];
                if x >= lo && x < tail {
                    let bin = ((x - lo) / width) as usize;
                    counts[bin.min(n_bins - 1)] += 1;
                }
                total += 1;
            }
        }
        let path = spec.out_dir.join("histogram.csv");
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "bin_left,bin_right,count,density")?;
        for (b, &count) in counts.iter().enumerate() {
            let left = lo + b as f64 * width;
            let right = left + width;
            let density = if total > 0 {
                count as f64 / (total as f64 * width)
            } else {
                0.0
            };
            writeln!(out, "{left},{right},{count},{density}")?;
        }
        out.flush()?;
    }

    Ok(())
}

fn write_metrics_csv(out_dir: &Path, metrics: &[MetricRow]) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut out = std::io::BufWriter::new(fs::File::create(out_dir.join("metrics.csv"))?);
    writeln!(out, "metric,value,tolerance,pass")?;
    for row in metrics {
        let tol = row.tolerance.map(|t| t.to_string()).unwrap_or_default();
        let pass = row.pass.map(|p| p.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", row.metric, row.value, tol, pass)?;
    }
    out.flush()?;
    Ok(())
}

fn write_summary(spec: &ExperimentSpec, report: &ExperimentReport) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(spec.out_dir.join("summary.txt"))?);
    write!(out, "{}", spec.render())?;
    writeln!(out, "diverged = {}", report.diverged)?;
    if let Some((chain, step)) = report.divergence {
        writeln!(out, "divergence_chain = {chain}")?;
        writeln!(out, "divergence_step = {step}")?;
    }
    writeln!(out, "n_recorded = {}", report.n_recorded)?;
    writeln!(out, "violations = {}", report.violations.len())?;
    for (i, v) in report.violations.iter().enumerate() {
        writeln!(out, "violation_{i} = {v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Dump the quadrature reference CDF as CSV (`x,density,cdf`).
pub fn write_reference_csv(
    target_name: &str,
    dim: usize,
    beta: f64,
    tail_radius: Option<f64>,
    path: &Path,
) -> Result<()> {
    let target = TargetPotential::from_name(target_name, dim)?;
    let tail = tail_radius.unwrap_or_else(|| auto_tail_radius(&target, beta));
    let reference = if dim == 1 {
        build_reference_1d(&target, beta, tail, 16_001)?
    } else {
        build_reference_radial(&target, beta, tail, 16_001)?
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "x,density,cdf")?;
    for i in 0..reference.grid.len() {
        writeln!(
            out,
            "{},{},{}",
            reference.grid[i], reference.density[i], reference.cdf[i]
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_paper_example_config() {
        let text = "target = quartic\ngamma = 60\nbeta = 5\nlambda = 0.0078125\nn_steps = 153600\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.target, "quartic");
        assert_eq!(spec.gamma, 60.0);
        assert_eq!(spec.beta, 5.0);
        assert_eq!(spec.lambda, 0.0078125);
        assert_eq!(spec.n_steps, 153_600);
    }

    #[test]
    fn parse_rejects_bad_configs() {
        assert!(matches!(
            parse_config("lambda = -1\n"),
            Err(Error::InvalidParameter { name: "lambda", .. })
        ));
        assert!(matches!(
            parse_config("unknown_key = 1\n"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("lambda\n"),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            parse_config("thin = zero\n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# a comment\n\n  # another\n seed = 9 \n";
        assert_eq!(parse_config(text).unwrap().seed, 9);
    }

    #[test]
    fn overrides_win_over_file_values() {
        let spec = parse_config_with_overrides(
            "gamma = 60\n",
            &[("gamma".into(), "200".into()), ("seed".into(), "3".into())],
        )
        .unwrap();
        assert_eq!(spec.gamma, 200.0);
        assert_eq!(spec.seed, 3);
    }

    #[test]
    fn render_round_trip_defaults() {
        let spec = ExperimentSpec::default();
        assert_eq!(parse_config(&spec.render()).unwrap(), spec);
    }

    #[test]
    fn render_round_trip_exotic_values() {
        let spec = ExperimentSpec {
            target: "quadratic:a=2.5".into(),
            sampler: SamplerChoice::Chain(SamplerKind::Tklmc2),
            lambda: 1.0 / 3.0,
            epsilon: Some(0.013),
            lipschitz_k: Some(1.0 / 0.013),
            init: InitialState::Point(vec![-0.5, 1.25]),
            dim: 2,
            moments: vec![2, 4, 6],
            tail_radius: Some(4.25),
            jobs: 3,
            ..ExperimentSpec::default()
        };
        assert_eq!(parse_config(&spec.render()).unwrap(), spec);
    }

    #[test]
    fn exact_quadratic_requires_quadratic_target() {
        let mut spec = ExperimentSpec {
            sampler: SamplerChoice::ExactQuadratic,
            ..ExperimentSpec::default()
        };
        assert!(spec.validate().is_err());
        spec.target = "quadratic:a=5".into();
        assert!(spec.validate().is_ok());
    }
}
