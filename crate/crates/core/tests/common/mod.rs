//! Independent oracles used by the integration suites. Everything here is
//! deliberately written against the mathematical definitions, not against
//! the library's own code paths.

// each test target pulls in the subset it needs
#![allow(dead_code)]

/// Adaptive Simpson quadrature with interval bisection.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Proximal-point oracle in one dimension: grid scan for the sign change of
/// the strictly increasing inner gradient `u'(y) + (y - x)/eps`, then
/// bisection. Function-value search cannot localize the flat minimum this
/// precisely; the gradient root can.
pub fn prox_oracle_1d(u_grad: &dyn Fn(f64) -> f64, eps: f64, x: f64, lo: f64, hi: f64) -> f64 {
    let g = |y: f64| u_grad(y) + (y - x) / eps;
    let n = 100_000usize;
    let h = (hi - lo) / n as f64;
    let mut bracket = None;
    for i in 0..n {
        let a = lo + i as f64 * h;
        let b = a + h;
        if g(a) <= 0.0 && g(b) >= 0.0 {
            bracket = Some((a, b));
            break;
        }
    }
    let (mut a, mut b) = bracket.expect("gradient sign change inside the search interval");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m) <= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Exact minimum-cost perfect matching (Hungarian algorithm with
/// potentials, O(n^3)). Returns the total cost.
pub fn assignment_min_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    assert!(n > 0 && cost.iter().all(|row| row.len() == n));
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        total += cost[matched_row[j] - 1][j - 1];
    }
    total
}

/// Direct solve of the vectorized 2x2 stationary-covariance equation
/// `S = A S A^T + diag(0, q22)` as a 3x3 linear system in (s11, s12, s22).
pub fn lyapunov_direct_2x2(a: [[f64; 2]; 2], q22: f64) -> [[f64; 2]; 2] {
    let m = [
        [
            a[0][0] * a[0][0],
            2.0 * a[0][0] * a[0][1],
            a[0][1] * a[0][1],
        ],
        [
            a[0][0] * a[1][0],
            a[0][0] * a[1][1] + a[0][1] * a[1][0],
            a[0][1] * a[1][1],
        ],
        [
            a[1][0] * a[1][0],
            2.0 * a[1][0] * a[1][1],
            a[1][1] * a[1][1],
        ],
    ];
    // (I - M) s = rhs, 3x3 Gaussian elimination with partial pivoting
    let mut sys = [[0.0f64; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            sys[i][j] = if i == j { 1.0 - m[i][j] } else { -m[i][j] };
        }
    }
    sys[2][3] = q22;
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&r1, &r2| sys[r1][col].abs().partial_cmp(&sys[r2][col].abs()).unwrap())
            .unwrap();
        sys.swap(col, pivot);
        for row in col + 1..3 {
            let factor = sys[row][col] / sys[col][col];
            let (pivot_row, rest) = sys.split_at_mut(col + 1);
            let pivot_row = &pivot_row[col];
            let target_row = &mut rest[row - col - 1];
            for k in col..4 {
                target_row[k] -= factor * pivot_row[k];
            }
        }
    }
    let mut s = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = sys[row][3];
        for k in row + 1..3 {
            acc -= sys[row][k] * s[k];
        }
        s[row] = acc / sys[row][row];
    }
    [[s[0], s[1]], [s[1], s[2]]]
}

/// Mean and batch-means standard error over several equally long series,
/// recomputed here so acceptance tolerances do not depend on the library's
/// own implementation.
pub fn mean_and_se(chains: &[Vec<f64>], batches_per_chain: usize) -> (f64, f64) {
    let mut batch_means = Vec::new();
    let mut total_sum = 0.0;
    let mut total_n = 0usize;
    for series in chains {
        total_sum += series.iter().sum::<f64>();
        total_n += series.len();
        let len = series.len() / batches_per_chain;
        for b in 0..batches_per_chain {
            let chunk = &series[b * len..(b + 1) * len];
            batch_means.push(chunk.iter().sum::<f64>() / len as f64);
        }
    }
    let nb = batch_means.len() as f64;
    let grand = batch_means.iter().sum::<f64>() / nb;
    let var = batch_means
        .iter()
        .map(|m| (m - grand) * (m - grand))
        .sum::<f64>()
        / (nb - 1.0);
    (total_sum / total_n as f64, (var / nb).sqrt())
}
