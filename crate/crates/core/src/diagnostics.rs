//! Empirical verification: quadrature references, Wasserstein-2 distances,
//! moments, geometric-decay fits and the excess-risk estimator.
//!
//! One-dimensional references discretize the position marginal
//! `exp(-beta u) / Z` on a uniform grid; in higher dimension the radial
//! reduction `r^{d-1} exp(-beta u(r e))` plays the same role for the radius
//! of rotation-invariant targets. Wasserstein-2 distances use the quantile
//! coupling, which is exact in one dimension; `sliced_w2` averages the
//! one-dimensional distance over random projection directions.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{require_positive, Error, Result};
use crate::targets::{norm, TargetPotential};

/// Quadrature realization of a one-dimensional reference distribution.
#[derive(Debug, Clone)]
pub struct ReferenceTarget1D {
    pub beta: f64,
    /// Increasing abscissae.
    pub grid: Vec<f64>,
    /// Normalized density on the grid.
    pub density: Vec<f64>,
    /// Cumulative probabilities, increasing from 0 to 1.
    pub cdf: Vec<f64>,
    /// Log of the normalizing constant.
    pub log_z: f64,
}

/// Boundary density above this fraction of the peak fails construction.
const TAIL_MASS_FLOOR: f64 = 1e-12;

fn build_reference(
    beta: f64,
    grid: Vec<f64>,
    unnorm: Vec<f64>,
    check_left_tail: bool,
) -> Result<ReferenceTarget1D> {
    let n = grid.len();
    let h = grid[1] - grid[0];
    let peak = unnorm.iter().cloned().fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::invalid("density", "vanishes on the whole grid"));
    }
    let right = unnorm[n - 1] / peak;
    let left = unnorm[0] / peak;
    if right > TAIL_MASS_FLOOR || (check_left_tail && left > TAIL_MASS_FLOOR) {
        return Err(Error::InsufficientTailRadius {
            ratio: right.max(if check_left_tail { left } else { 0.0 }),
        });
    }

    // composite Simpson for the normalizing constant
    let mut z = unnorm[0] + unnorm[n - 1];
    for (i, v) in unnorm.iter().enumerate().take(n - 1).skip(1) {
        z += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    z *= h / 3.0;

    // cumulative trapezoid
    let mut cdf = vec![0.0; n];
    for i in 1..n {
        cdf[i] = cdf[i - 1] + 0.5 * h * (unnorm[i - 1] + unnorm[i]);
    }
    let total = cdf[n - 1];
    // Euler-Maclaurin endpoint term of the trapezoid rule; nonzero for the
    // radial density, whose slope at r = 0 does not vanish
    let endpoint =
        h * h / 12.0 * ((unnorm[n - 1] - unnorm[n - 2]) / h - (unnorm[1] - unnorm[0]) / h);
    if ((total - endpoint) / z - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(
            "n_grid",
            format!(
                "grid too coarse: trapezoid/Simpson mass mismatch {:e}",
                total / z - 1.0
            ),
        ));
    }
    for c in cdf.iter_mut() {
        *c /= total;
    }
    let density = unnorm.iter().map(|v| v / z).collect();
    Ok(ReferenceTarget1D {
        beta,
        grid,
        density,
        cdf,
        log_z: z.ln(),
    })
}

/// Discretize `exp(-beta u)` for a one-dimensional target on
/// `[-tail_radius, tail_radius]` with `n_grid` points (odd, for Simpson).
///
/// Fails when the density at the boundary still carries visible mass; pick
/// a larger `tail_radius` in that case.
pub fn build_reference_1d(
    target: &TargetPotential,
    beta: f64,
    tail_radius: f64,
    n_grid: usize,
) -> Result<ReferenceTarget1D> {
    if target.dim() != 1 {
        return Err(Error::invalid(
            "target",
            "reference quadrature needs dim = 1",
        ));
    }
    require_positive("beta", beta)?;
    require_positive("tail_radius", tail_radius)?;
    if n_grid < 3 || n_grid.is_multiple_of(2) {
        return Err(Error::invalid("n_grid", "must be odd and at least 3"));
    }
    let h = 2.0 * tail_radius / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid).map(|i| -tail_radius + i as f64 * h).collect();
    let unnorm: Vec<f64> = grid
        .iter()
        .map(|&x| (-beta * target.value(&[x])).exp())
        .collect();
    build_reference(beta, grid, unnorm, true)
}

/// Radial reduction for rotation-invariant targets in dimension `d > 1`:
/// the distribution of `|theta|` has density proportional to
/// `r^{d-1} exp(-beta u(r e_1))` on `[0, tail_radius]`.
pub fn build_reference_radial(
    target: &TargetPotential,
    beta: f64,
    tail_radius: f64,
    n_grid: usize,
) -> Result<ReferenceTarget1D> {
    require_positive("beta", beta)?;
    require_positive("tail_radius", tail_radius)?;
    if n_grid < 3 || n_grid.is_multiple_of(2) {
        return Err(Error::invalid("n_grid", "must be odd and at least 3"));
    }
    let d = target.dim();
    let h = tail_radius / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid).map(|i| i as f64 * h).collect();
    let mut probe = vec![0.0; d];
    let unnorm: Vec<f64> = grid
        .iter()
        .map(|&r| {
            probe[0] = r;
            r.powi(d as i32 - 1) * (-beta * target.value(&probe)).exp()
        })
        .collect();
    build_reference(beta, grid, unnorm, false)
}

impl ReferenceTarget1D {
    /// Quantile function by monotone interpolation of the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::QuantileOutOfRange { p });
        }
        let idx = self.cdf.partition_point(|&c| c < p);
        if idx == 0 {
            return Ok(self.grid[0]);
        }
        if idx >= self.cdf.len() {
            return Ok(*self.grid.last().expect("nonempty grid"));
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        if c1 <= c0 {
            return Ok(x0);
        }
        Ok(x0 + (p - c0) / (c1 - c0) * (x1 - x0))
    }

    /// CDF at an arbitrary point, linearly interpolated.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= *self.grid.last().expect("nonempty grid") {
            return 1.0;
        }
        let idx = self.grid.partition_point(|&g| g < x);
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (x - x0) / (x1 - x0) * (c1 - c0)
    }

    /// Moment `E X^order` of the reference by Simpson quadrature.
    pub fn moment(&self, order: u32) -> f64 {
        let n = self.grid.len();
        let h = self.grid[1] - self.grid[0];
        let f = |i: usize| self.grid[i].powi(order as i32) * self.density[i];
        let mut acc = f(0) + f(n - 1);
        for i in 1..n - 1 {
            acc += if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) };
        }
        acc * h / 3.0
    }
}

/// Quantile-coupling W2 between an empirical sample and a reference:
/// `sqrt( mean_i ( x_(i) - Q((i - 1/2)/n) )^2 )` over the sorted samples.
pub fn w2_1d_empirical_vs_reference(samples: &[f64], reference: &ReferenceTarget1D) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len();
    let mut acc = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let p = (i as f64 + 0.5) / n as f64;
        let q = reference.quantile(p)?;
        acc += (x - q) * (x - q);
    }
    Ok((acc / n as f64).sqrt())
}

/// Sorted-pairing W2 between two empirical samples of equal size (the exact
/// one-dimensional optimal coupling).
pub fn w2_1d_empirical(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySamples);
    }
    if a.len() != b.len() {
        return Err(Error::MismatchedSampleCounts {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let acc: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((acc / sa.len() as f64).sqrt())
}

/// Sliced W2: root of the average, over seeded random unit directions, of
/// the squared one-dimensional W2 between the projected samples.
pub fn sliced_w2(
    samples_a: &[Vec<f64>],
    samples_b: &[Vec<f64>],
    n_projections: usize,
    seed: u64,
) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples_a.len() != samples_b.len() {
        return Err(Error::MismatchedSampleCounts {
            left: samples_a.len(),
            right: samples_b.len(),
        });
    }
    if n_projections == 0 {
        return Err(Error::invalid("n_projections", "must be at least 1"));
    }
    let d = samples_a[0].len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut pa = vec![0.0; samples_a.len()];
    let mut pb = vec![0.0; samples_b.len()];
    for _ in 0..n_projections {
        let dir = random_unit_vector(d, &mut rng);
        for (p, s) in pa.iter_mut().zip(samples_a) {
            *p = dot(&dir, s);
        }
        for (p, s) in pb.iter_mut().zip(samples_b) {
            *p = dot(&dir, s);
        }
        let w = w2_1d_empirical(&pa, &pb)?;
        acc += w * w;
    }
    Ok((acc / n_projections as f64).sqrt())
}

fn random_unit_vector(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares fit of `log W2` against the step index.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Slope of the fit; negative during a contracting transient.
    pub rate: f64,
    pub r_squared: f64,
}

/// Fit a geometric decay to `(step, W2)` points; needs at least three
/// points with strictly positive distances.
pub fn geometric_decay_fit(distances: &[(f64, f64)]) -> Result<DecayFit> {
    if distances.len() < 3 {
        return Err(Error::invalid("distances", "need at least 3 points"));
    }
    if distances.iter().any(|&(_, w)| !(w.is_finite() && w > 0.0)) {
        return Err(Error::invalid(
            "distances",
            "all distances must be positive",
        ));
    }
    let n = distances.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(s, w) in distances {
        sx += s;
        sy += w.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(s, w) in distances {
        let dx = s - mx;
        let dy = w.ln() - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::invalid("distances", "all steps are identical"));
    }
    let rate = sxy / sxx;
    let ss_res = syy - rate * sxy;
    let r_squared = if syy <= 1e-30 {
        1.0
    } else {
        1.0 - (ss_res / syy).max(0.0)
    };
    Ok(DecayFit { rate, r_squared })
}

/// Truncation radius for the excess-risk estimator:
/// `sqrt(2 u(0)/m) + sqrt((u(0)+1) d / beta) + 1`.
#[derive(Debug, Clone, Copy)]
pub struct ExcessRiskConfig {
    pub r0: f64,
}

impl ExcessRiskConfig {
    pub fn for_target(target: &TargetPotential, beta: f64) -> Self {
        let d = target.dim() as f64;
        let r0 = (2.0 * target.u0 / target.m).sqrt() + ((target.u0 + 1.0) * d / beta).sqrt() + 1.0;
        ExcessRiskConfig { r0 }
    }
}

/// Excess-risk estimate together with its ingredients.
#[derive(Debug, Clone, Copy)]
pub struct ExcessRiskReport {
    /// Mean of `u(theta 1_{|theta| <= r0}) - u(x*)` over the positions.
    pub estimate: f64,
    pub r0: f64,
    /// The floor term `2d/(m beta)` that no estimate can beat.
    pub bound_tail: f64,
}

/// Evaluate the truncated excess-risk estimator on recorded positions.
pub fn excess_risk_estimate(
    target: &TargetPotential,
    beta: f64,
    positions: &[Vec<f64>],
) -> Result<ExcessRiskReport> {
    if positions.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let minimizer = target.minimizer().ok_or(Error::MissingMinimizer)?;
    let u_star = target.value(minimizer);
    let r0 = ExcessRiskConfig::for_target(target, beta).r0;
    let mut values: Vec<f64> = positions
        .iter()
        .map(|p| {
            if norm(p) <= r0 {
                target.value(p)
            } else {
                target.u0
            }
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let d = target.dim() as f64;
    Ok(ExcessRiskReport {
        estimate: mean - u_star,
        r0,
        bound_tail: 2.0 * d / (target.m * beta),
    })
}

/// Mean of `|x|^p` for each requested order.
///
/// Terms are sorted before summation, which makes the estimates exactly
/// invariant under permutation of the samples.
pub fn empirical_moments(samples: &[Vec<f64>], orders: &[u32]) -> Result<BTreeMap<u32, f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut out = BTreeMap::new();
    for &p in orders {
        let mut terms: Vec<f64> = samples.iter().map(|x| norm(x).powi(p as i32)).collect();
        terms.sort_by(|a, b| a.partial_cmp(b).expect("finite moments"));
        out.insert(p, terms.iter().sum::<f64>() / terms.len() as f64);
    }
    Ok(out)
}

/// Batch-means standard error of the grand mean of the given series.
///
/// The batch budget is spread evenly over the chains, so 4 chains at the
/// default budget of 20 get 5 contiguous batches each. Returns `None` when
/// there are not enough points to form the batches.
pub fn batch_means_se(chains: &[&[f64]], total_batches: usize) -> Option<f64> {
    if chains.is_empty() || total_batches < 2 {
        return None;
    }
    let per_chain = (total_batches / chains.len()).max(1);
    let mut means = Vec::with_capacity(per_chain * chains.len());
    for series in chains {
        if series.len() < per_chain {
            return None;
        }
        let batch_len = series.len() / per_chain;
        for b in 0..per_chain {
            let chunk = &series[b * batch_len..(b + 1) * batch_len];
            means.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
        }
    }
    if means.len() < 2 {
        return None;
    }
    let n = means.len() as f64;
    let grand = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (n - 1.0);
    Some((var / n).sqrt())
}
