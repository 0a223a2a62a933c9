//! Rayleigh quotients `∫ F*(df)² dμ / ∫ f² dμ`, upper bounds for the
//! bottom of the spectrum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_body::ConvexBody;
use crate::error::{Error, Result};
use crate::hilbert_measure::{sphere_profile, BallQuadrature, BallSampler, INTEGRAND_VOLUME};
use crate::hilbert_metric::{distance, finsler_dual_norm};
use crate::point::neumaier_sum;
use crate::quadrature::composite_gauss;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

pub enum Gradient<'a> {
    Analytic(&'a (dyn Fn(&[f64]) -> Vec<f64> + Sync)),
    CentralDifference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayleighOptions {
    pub samples: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        RayleighOptions { samples: 20_000, batch: 500, seed: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighValue {
    pub value: f64,
    /// 95% half-width from batch statistics.
    pub error: f64,
    pub samples: usize,
}

fn central_difference(body: &ConvexBody, f: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[i] = 1.0;
        let c = body.chord_params(x, &e)?;
        let h = FD_STEP.min(0.25 * c.t_minus.min(c.t_plus));
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    Ok(g)
}

/// Monte Carlo over B(x0, R) with measure-proportional sampling.
pub fn rayleigh_quotient(
    body: &ConvexBody,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    grad: Gradient,
    x0: &[f64],
    support_radius: f64,
    opts: RayleighOptions,
) -> Result<RayleighValue> {
    if opts.samples < 2 * opts.batch || opts.batch == 0 {
        return Err(Error::InvalidParameter("need at least two batches".into()));
    }
    // support check on an outer shell
    let outer = BallSampler::new(body, x0, support_radius + 1.0, INTEGRAND_VOLUME)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(u64::MAX);
    let mut checked = 0;
    for _ in 0..2000 {
        let x = outer.sample_position(&mut rng)?;
        if distance(body, x0, &x)? > support_radius * (1.0 + 1e-9) {
            checked += 1;
            if f(&x) != 0.0 {
                return Err(Error::InvalidParameter("f does not vanish outside the support ball".into()));
            }
            if checked >= 200 {
                break;
            }
        }
    }
    let sampler = BallSampler::new(body, x0, support_radius, INTEGRAND_VOLUME)?;
    let batches = opts.samples / opts.batch;
    let sums: Vec<Result<(f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(b as u64);
            let mut num = Vec::with_capacity(opts.batch);
            let mut den = Vec::with_capacity(opts.batch);
            for _ in 0..opts.batch {
                let s = sampler.sample(&mut rng)?;
                let fx = f(&s.x);
                let g = match &grad {
                    Gradient::Analytic(gf) => gf(&s.x),
                    Gradient::CentralDifference => central_difference(body, f, &s.x)?,
                };
                let dn = finsler_dual_norm(body, &s.x, &g)?.value;
                num.push(s.weight * dn * dn);
                den.push(s.weight * fx * fx);
            }
            Ok((neumaier_sum(num) / opts.batch as f64, neumaier_sum(den) / opts.batch as f64))
        })
        .collect();
    let sums: Vec<(f64, f64)> = sums.into_iter().collect::<Result<_>>()?;
    let num = neumaier_sum(sums.iter().map(|s| s.0)) / batches as f64;
    let den = neumaier_sum(sums.iter().map(|s| s.1)) / batches as f64;
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("f vanishes on the support ball".into()));
    }
    let value = num / den;
    // delta method on batch means
    let var = sums.iter().map(|(a, b)| (a - value * b).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    let error = 1.96 * (var / batches as f64).sqrt() / den;
    Ok(RayleighValue { value, error, samples: batches * opts.batch })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighGridPoint {
    pub epsilon: f64,
    pub radius: f64,
    pub value: f64,
    pub quadrature_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub lambda_estimate: f64,
    pub epsilon: f64,
    pub radius: f64,
    pub quadrature_error: f64,
    pub grid: Vec<RayleighGridPoint>,
}

/// Radial family `f(x) = e^{-h d(x0,x)/2} - e^{-h R/2}`, `h = (n-1) + ε`.
/// Since `F*(d d_{x0}) = 1`, the quotient reduces to
/// `∫ φ'² A / ∫ φ² A` over [0, R] with `A(ρ) = dμ(B(x0,ρ))/dρ`.
fn radial_quotient(h: f64, r: f64, nodes: &[f64], weights: &[f64], profile: &[f64]) -> f64 {
    let tail = (-0.5 * h * r).exp();
    let mut num = Vec::with_capacity(nodes.len());
    let mut den = Vec::with_capacity(nodes.len());
    for ((&rho, &w), &a) in nodes.iter().zip(weights).zip(profile) {
        let e = (-0.5 * h * rho).exp();
        num.push(w * a * 0.25 * h * h * e * e);
        den.push(w * a * (e - tail) * (e - tail));
    }
    neumaier_sum(num) / neumaier_sum(den)
}

/// Minimum of the radial family's Rayleigh quotient over the grid. ε may be
/// negative as long as h > 0 (small h approaches the tent function).
pub fn lambda1_upper_estimate(body: &ConvexBody, x0: &[f64], eps_grid: &[f64], r_grid: &[f64]) -> Result<RayleighReport> {
    if eps_grid.is_empty() || r_grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let n = body.dim() as f64;
    for &e in eps_grid {
        if !((n - 1.0) + e > 0.0) {
            return Err(Error::InvalidParameter(format!("h = (n-1) + ε must be positive (ε = {e})")));
        }
    }
    if r_grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    let q = BallQuadrature::default();
    let mut grid = Vec::new();
    for &r in r_grid {
        let fine = composite_gauss(0.0, r, 0.5, 8);
        let coarse = composite_gauss(0.0, r, 1.0, 6);
        let pf = sphere_profile(body, x0, &fine.nodes, &q)?;
        let pc = sphere_profile(body, x0, &coarse.nodes, &q)?;
        for &e in eps_grid {
            let h = (n - 1.0) + e;
            let v = radial_quotient(h, r, &fine.nodes, &fine.weights, &pf);
            let vc = radial_quotient(h, r, &coarse.nodes, &coarse.weights, &pc);
            grid.push(RayleighGridPoint { epsilon: e, radius: r, value: v, quadrature_error: (v - vc).abs() });
        }
    }
    let best = grid.iter().min_by(|a, b| a.value.partial_cmp(&b.value).unwrap()).cloned().expect("nonempty grid");
    Ok(RayleighReport {
        lambda_estimate: best.value,
        epsilon: best.epsilon,
        radius: best.radius,
        quadrature_error: best.quadrature_error,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;

    fn tri() -> ConvexBody {
        ConvexBody::polygon(&[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn triangle_tent_limit() {
        // A(ρ) = 2πρ: small h gives the tent quotient 6/R²
        let r = lambda1_upper_estimate(&tri(), &[1.0 / 3.0, 1.0 / 3.0], &[-0.999], &[12.0]).unwrap();
        assert!((r.lambda_estimate - 6.0 / 144.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn disk_family_near_quarter() {
        let disk = ConvexBody::ball(2).unwrap();
        // independent oracle: Simpson's rule with A(ρ) = 2π sinh ρ
        let simpson = |h: f64, r: f64| {
            let m = 20_000;
            let dx = r / m as f64;
            let tail = (-0.5 * h * r).exp();
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..=m {
                let x = k as f64 * dx;
                let c = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                let e = (-0.5 * h * x).exp();
                num += c * 0.25 * h * h * e * e * x.sinh();
                den += c * (e - tail) * (e - tail) * x.sinh();
            }
            num / den
        };
        for (eps, rad) in [(0.1, 12.0), (0.02, 16.0)] {
            let r = lambda1_upper_estimate(&disk, &[0.0, 0.0], &[eps], &[rad]).unwrap();
            let want = simpson(1.0 + eps, rad);
            assert!((r.lambda_estimate - want).abs() < 1e-7 * want, "{r:?} {want}");
        }
        let r = lambda1_upper_estimate(&disk, &[0.0, 0.0], &[0.1], &[12.0]).unwrap();
        assert!(r.lambda_estimate > 0.25, "{r:?}");
        let big = lambda1_upper_estimate(&disk, &[0.0, 0.0], &[20.0], &[12.0]).unwrap();
        assert!((big.lambda_estimate / (21.0f64 * 21.0 / 4.0) - 1.0).abs() < 0.1, "{big:?}");
        assert!(lambda1_upper_estimate(&disk, &[0.0, 0.0], &[-1.0], &[12.0]).is_err());
    }

    #[test]
    fn monte_carlo_matches_radial_reduction() {
        let disk = ConvexBody::ball(2).unwrap();
        let h = 1.1;
        let r = 4.0;
        let body = disk.clone();
        let f = move |x: &[f64]| {
            let d = distance(&body, &[0.0, 0.0], x).unwrap();
            if d >= r { 0.0 } else { (-0.5 * h * d).exp() - (-0.5 * h * r).exp() }
        };
        let mc = rayleigh_quotient(&disk, &f, Gradient::CentralDifference, &[0.0, 0.0], r, RayleighOptions::default())
            .unwrap();
        let rad = lambda1_upper_estimate(&disk, &[0.0, 0.0], &[0.1], &[r]).unwrap();
        assert!((mc.value - rad.lambda_estimate).abs() < mc.error + 0.02, "{mc:?} {rad:?}");
        assert!(mc.value >= 0.25 - mc.error - 0.02);
        let g = move |x: &[f64]| 3.0 * f(x);
        let mc3 = rayleigh_quotient(&disk, &g, Gradient::CentralDifference, &[0.0, 0.0], r, RayleighOptions::default())
            .unwrap();
        assert!((mc3.value - mc.value).abs() < 1e-10 * mc.value);
    }
}
