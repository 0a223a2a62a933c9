//! Quadrature rules and low-discrepancy direction sets.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pm = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (z * pn - pm) / (z * z - 1.0);
    (pn, d)
}

/// A list of (node, weight) pairs approximating ∫ over an interval.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn extend(&mut self, other: Rule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        crate::point::neumaier_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

/// Composite Gauss–Legendre on [a, b] with panels no wider than `max_width`.
pub fn composite_gauss(a: f64, b: f64, max_width: f64, order: usize) -> Rule {
    let mut rule = Rule::default();
    if b <= a {
        return rule;
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            rule.nodes.push(lo + 0.5 * h * (x + 1.0));
            rule.weights.push(0.5 * h * w);
        }
    }
    rule
}

/// Rule on [a, b] graded toward both endpoints: each half is written as
/// offset δ = half·e^{-u} from its endpoint, and u ∈ [0, depth] is covered
/// by Gauss panels. Resolves integrands with features at exponentially
/// small distance from the endpoints.
pub fn graded_gauss(a: f64, b: f64, depth: f64, order: usize) -> Rule {
    let mut rule = Rule::default();
    if b <= a {
        return rule;
    }
    let half = 0.5 * (b - a);
    let inner = composite_gauss(0.0, depth, 1.0, order);
    for (&u, &w) in inner.nodes.iter().zip(&inner.weights) {
        let delta = half * (-u).exp();
        rule.nodes.push(a + delta);
        rule.weights.push(w * delta);
        rule.nodes.push(b - delta);
        rule.weights.push(w * delta);
    }
    // midpoint cell for the innermost sliver [0, half·e^{-depth}]
    let tail = half * (-depth).exp();
    rule.nodes.push(a + 0.5 * tail);
    rule.weights.push(tail);
    rule.nodes.push(b - 0.5 * tail);
    rule.weights.push(tail);
    rule
}

/// Radical inverse in base `b` (Halton coordinate).
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Quasi-uniform unit directions on S^{n-1}.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            assert!(n <= 2 * PRIMES.len());
            let m = n.div_ceil(2);
            (0..count)
                .map(|k| {
                    let idx = k as u64 + 1;
                    let mut v = Vec::with_capacity(2 * m);
                    for j in 0..m {
                        let u1 = radical_inverse(idx, PRIMES[2 * j]).max(1e-300);
                        let u2 = radical_inverse(idx, PRIMES[2 * j + 1]);
                        let r = (-2.0 * u1.ln()).sqrt();
                        v.push(r * (2.0 * PI * u2).cos());
                        v.push(r * (2.0 * PI * u2).sin());
                    }
                    v.truncate(n);
                    let nv = crate::point::norm(&v);
                    v.iter_mut().for_each(|x| *x /= nv);
                    v
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn composite_exp() {
        let r = composite_gauss(0.0, 3.0, 0.5, 8);
        let q = r.integrate(f64::exp);
        assert!((q - (3f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn graded_resolves_endpoint_bump() {
        // ∫_0^1 k/(1+kx)^2 dx = k/(1+k) with a feature of width 1/k at 0
        let k = 1e9;
        let r = graded_gauss(0.0, 1.0, 40.0, 8);
        let q = r.integrate(|x| k / (1.0 + k * x).powi(2));
        assert!((q - k / (1.0 + k)).abs() < 1e-9, "{q}");
    }

    #[test]
    fn sphere_directions_are_unit_and_balanced() {
        for n in 2..6 {
            let d = sphere_directions(n, 4000);
            let mut mean = vec![0.0; n];
            for v in &d {
                assert!((crate::point::norm(v) - 1.0).abs() < 1e-12);
                for i in 0..n {
                    mean[i] += v[i] / d.len() as f64;
                }
            }
            assert!(crate::point::norm(&mean) < 0.02, "n={n} {mean:?}");
        }
    }
}
