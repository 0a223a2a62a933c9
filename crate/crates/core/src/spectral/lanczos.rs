//! Extremal eigenpair of a large symmetric operator by Lanczos without
//! reorthogonalisation: a first pass finds the top Ritz value, a second
//! pass replays the recurrence to assemble the Ritz vector, and the true
//! residual decides whether to restart from that vector.

/// Symmetric tridiagonal matrix with diagonal `a` and off-diagonal `b`.
pub(crate) fn top_eigenvalue(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let pivot_floor = -f64::EPSILON * (hi.abs() + lo.abs() + f64::MIN_POSITIVE);
    // number of eigenvalues strictly greater than x
    let count_above = |x: f64| {
        let mut c = 0;
        let mut d = 1.0;
        for i in 0..n {
            let bb = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
            d = a[i] - x - if i > 0 { bb / d } else { 0.0 };
            if d == 0.0 {
                d = pivot_floor;
            }
            if d > 0.0 {
                c += 1;
            }
        }
        c
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_above(mid) >= 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift) y = rhs` in place by Gaussian elimination with
/// partial pivoting; zero pivots are perturbed (inverse iteration).
fn tridiag_solve(a: &[f64], b: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = a.len();
    if n == 1 {
        let d = a[0] - shift;
        rhs[0] /= if d == 0.0 { f64::EPSILON } else { d };
        return;
    }
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let mut d: Vec<f64> = a.iter().map(|x| x - shift).collect();
    let dl = b.to_vec();
    let mut du = b.to_vec();
    let mut du2 = vec![0.0; n];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            rhs[i + 1] -= f * rhs[i];
            du2[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let t = d[i + 1];
            d[i + 1] = du[i] - f * t;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = t;
            let t = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = t - f * rhs[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    rhs[n - 1] /= d[n - 1];
    rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    for i in (0..n - 2).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
    }
}

/// Unit eigenvector of T for the eigenvalue `theta`.
pub(crate) fn tridiag_eigenvector(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    let n = a.len();
    let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..3 {
        tridiag_solve(a, b, theta, &mut y);
        let nrm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nrm.is_finite() && nrm > 0.0) {
            break;
        }
        y.iter_mut().for_each(|x| *x /= nrm);
    }
    y
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut s = crate::point::KahanSum::default();
    for (a, b) in x.iter().zip(y) {
        s.add(a * b);
    }
    s.value()
}

fn project_out(x: &mut [f64], deflate: Option<&[f64]>) {
    if let Some(u) = deflate {
        let c = dot(x, u);
        x.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
    }
}

pub(crate) struct EigenResult {
    pub theta: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Top eigenpair of the symmetric operator `op` (optionally restricted to
/// the orthogonal complement of the unit vector `deflate`). `iterations`
/// counts operator applications.
pub(crate) fn lanczos_top(
    n: usize,
    op: &dyn Fn(&[f64], &mut [f64]),
    start: &[f64],
    deflate: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> EigenResult {
    let mut x = start.to_vec();
    project_out(&mut x, deflate);
    let mut used = 0;
    let mut best = EigenResult { theta: f64::NAN, vector: x.clone(), residual: f64::INFINITY, iterations: 0, converged: false };
    let mut y = vec![0.0; n];
    loop {
        let nx = dot(&x, &x).sqrt();
        if !(nx > 0.0) {
            return best;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let start_vec = x.clone();
        let budget = (max_iter.saturating_sub(used) / 2).max(1);
        let (alphas, betas, steps) = lanczos_pass(n, op, &start_vec, deflate, budget, tol, None);
        used += steps;
        let theta = top_eigenvalue(&alphas, &betas[..alphas.len() - 1]);
        let s = tridiag_eigenvector(&alphas, &betas[..alphas.len() - 1], theta);
        let mut v = vec![0.0; n];
        let (_, _, replay) = lanczos_pass(n, op, &start_vec, deflate, alphas.len(), tol, Some((&s, &mut v)));
        used += replay;
        project_out(&mut v, deflate);
        let nv = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|c| *c /= nv);
        op(&v, &mut y);
        project_out(&mut y, deflate);
        used += 1;
        let th = dot(&v, &y);
        let res = y.iter().zip(&v).map(|(a, b)| (a - th * b) * (a - th * b)).sum::<f64>().sqrt();
        if res < best.residual || !best.theta.is_finite() {
            best = EigenResult { theta: th, vector: v.clone(), residual: res, iterations: used, converged: res <= tol };
        }
        best.iterations = used;
        if res <= tol || used >= max_iter {
            return best;
        }
        x = v;
    }
}

/// One Lanczos run of at most `steps` steps from the unit vector `q0`.
/// Without `accumulate` it stops once the top Ritz pair's residual
/// estimate is below `tol / 4`; with it, it replays exactly `steps` steps
/// and adds `s_j q_j` into the output vector.
fn lanczos_pass(
    n: usize,
    op: &dyn Fn(&[f64], &mut [f64]),
    q0: &[f64],
    deflate: Option<&[f64]>,
    steps: usize,
    tol: f64,
    mut accumulate: Option<(&[f64], &mut Vec<f64>)>,
) -> (Vec<f64>, Vec<f64>, usize) {
    let mut q_prev = vec![0.0; n];
    let mut q = q0.to_vec();
    let mut w = vec![0.0; n];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut beta_prev = 0.0;
    let replay = accumulate.is_some();
    let mut next_check = 8;
    for j in 0..steps {
        if let Some((s, out)) = accumulate.as_mut() {
            let c = s[j];
            out.iter_mut().zip(&q).for_each(|(o, qi)| *o += c * qi);
        }
        op(&q, &mut w);
        project_out(&mut w, deflate);
        for i in 0..n {
            w[i] -= beta_prev * q_prev[i];
        }
        let alpha = dot(&w, &q);
        for i in 0..n {
            w[i] -= alpha * q[i];
        }
        let beta = dot(&w, &w).sqrt();
        alphas.push(alpha);
        betas.push(beta);
        let k = alphas.len();
        if replay {
            if k == steps {
                return (alphas, betas, k);
            }
        } else if k >= n || beta <= 1e-14 * alpha.abs().max(1.0) || k == steps || k >= next_check {
            let theta = top_eigenvalue(&alphas, &betas[..k - 1]);
            let s = tridiag_eigenvector(&alphas, &betas[..k - 1], theta);
            let est = beta * s[k - 1].abs();
            if est <= 0.25 * tol || k >= n || beta <= 1e-14 * alpha.abs().max(1.0) || k == steps {
                return (alphas, betas, k);
            }
            next_check = k + (k / 8).max(8);
        }
        std::mem::swap(&mut q_prev, &mut q);
        for i in 0..n {
            q[i] = w[i] / beta;
        }
        beta_prev = beta;
    }
    let k = alphas.len();
    (alphas, betas, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_top_eigenvalue_of_path() {
        let m = 50;
        let a = vec![0.0; m];
        let b = vec![0.5; m - 1];
        let t = top_eigenvalue(&a, &b);
        assert!((t - (std::f64::consts::PI / (m as f64 + 1.0)).cos()).abs() < 1e-14);
        let s = tridiag_eigenvector(&a, &b, t);
        for i in 0..m {
            let left = if i > 0 { 0.5 * s[i - 1] } else { 0.0 } + if i + 1 < m { 0.5 * s[i + 1] } else { 0.0 };
            assert!((left - t * s[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_diagonal_operator() {
        let n = 300;
        let d: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 / n as f64).collect();
        let op = |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        };
        let r = lanczos_top(n, &op, &vec![1.0; n], None, 1e-10, 100_000);
        assert!(r.converged);
        assert!((r.theta - 1.0).abs() < 1e-12);
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let r = lanczos_top(n, &op, &vec![1.0; n], Some(&e0), 1e-10, 100_000);
        assert!((r.theta - d[1]).abs() < 1e-12, "{}", r.theta);
    }
}
