//! Hilbert distance, Finsler norm and its dual, metric balls, Busemann
//! functions and horoballs.

use std::f64::consts::PI;

use crate::convex_body::{wrap_angle, ConvexBody};
use crate::error::{Error, Result};
use crate::point::{axpy, check_dim, dot, norm, sub, Point};

/// Busemann limits stop once successive values differ by less than this.
pub const TOL_BUSEMANN: f64 = 1e-6;
/// Deepest approach parameter `t_k = 1 - (1 - t_0) 2^{-k}`.
pub const BUSEMANN_MAX_DEPTH: u32 = 40;
/// Directions sampled for the dual norm of smooth 2D bodies.
pub const M_DIR_DUAL: usize = 360;
/// Directions sampled for the dual norm in dimension ≥ 3.
pub const M_DIR_DUAL_ND: usize = 2000;

/// `[a,p,q,b] = (|q-a| / |p-a|) · (|p-b| / |q-b|)` for collinear points in
/// that order.
pub fn cross_ratio(a: &[f64], p: &[f64], q: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len();
    for x in [p, q, b] {
        check_dim(n, x)?;
    }
    let d = sub(b, a);
    let dd = dot(&d, &d);
    if dd == 0.0 {
        return Err(Error::BadOrdering);
    }
    let scale = dd.sqrt();
    let mut params = [0.0; 2];
    for (k, x) in [p, q].into_iter().enumerate() {
        let r = sub(x, a);
        let t = dot(&r, &d) / dd;
        let resid = norm(&axpy(&r, -t, &d));
        if resid > 1e-9 * scale.max(1.0) {
            return Err(Error::NotCollinear(resid));
        }
        params[k] = t;
    }
    let (tp, tq) = (params[0], params[1]);
    if !(0.0 < tp && tp < tq && tq < 1.0) {
        return Err(Error::BadOrdering);
    }
    Ok((tq / tp) * ((1.0 - tp) / (1.0 - tq)))
}

/// Hilbert distance with a first-order error bound propagated from the
/// chord tolerance. Symmetric by construction: the pair is ordered
/// lexicographically before the chord is computed.
pub fn distance_with_error(body: &ConvexBody, p: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    check_dim(body.dim(), p)?;
    check_dim(body.dim(), q)?;
    if p == q {
        if !body.contains_unchecked(p) {
            return Err(Error::NotInterior);
        }
        return Ok((0.0, 0.0));
    }
    let (p, q) = if lex_less(p, q) { (p, q) } else { (q, p) };
    let v = sub(q, p);
    let c = body.chord_params(p, &v)?;
    // a = p - tm v, q = p + v, b = p + tp v
    if !(c.t_plus > 1.0) {
        return Err(Error::NotInterior);
    }
    let (tm, tp) = (c.t_minus, c.t_plus);
    let d = 0.5 * ((1.0 / tm).ln_1p() - (-1.0 / tp).ln_1p());
    let err = 0.5 * c.tol * (1.0 / (tm * (1.0 + tm)) + 1.0 / (tp * (tp - 1.0)));
    Ok((d, err))
}

pub fn distance(body: &ConvexBody, p: &[f64], q: &[f64]) -> Result<f64> {
    distance_with_error(body, p, q).map(|(d, _)| d)
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// `F(p, v) = ½ |v| (1/|p - p⁻| + 1/|p - p⁺|)`.
pub fn finsler_norm(body: &ConvexBody, p: &[f64], v: &[f64]) -> Result<f64> {
    check_dim(body.dim(), v)?;
    if v.iter().all(|&x| x == 0.0) {
        if !body.contains(p)? {
            return Err(Error::NotInterior);
        }
        return Ok(0.0);
    }
    let c = body.chord_params(p, v)?;
    Ok(0.5 * (1.0 / c.t_minus + 1.0 / c.t_plus))
}

/// Linear frame adapted to the Finsler unit ball at a point: `L` maps the
/// Euclidean unit sphere approximately onto `{F(p,·) = 1}`. Used to spread
/// direction samples evenly over very anisotropic unit balls.
#[derive(Clone, Debug)]
pub struct FinslerFrame {
    pub n: usize,
    /// Row-major n×n.
    pub l: Vec<f64>,
    pub det: f64,
}

impl FinslerFrame {
    pub fn apply(&self, e: &[f64]) -> Point {
        let n = self.n;
        Point((0..n).map(|i| (0..n).map(|j| self.l[i * n + j] * e[j]).sum()).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut l = vec![0.0; n * n];
        (0..n).for_each(|i| l[i * n + i] = 1.0);
        FinslerFrame { n, l, det: 1.0 }
    }
}

fn frame_directions(n: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..8)
            .map(|k| {
                let t = PI * k as f64 / 8.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
        for j in (i + 1)..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = std::f64::consts::FRAC_1_SQRT_2;
                e[j] = s * std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(e);
            }
        }
    }
    dirs
}

pub fn finsler_frame(body: &ConvexBody, p: &[f64]) -> Result<FinslerFrame> {
    let n = body.dim();
    check_dim(n, p)?;
    if let Some(e) = body.as_ellipsoid() {
        return Ok(klein_frame(e, p));
    }
    let dirs = frame_directions(n);
    // for these direction sets Σ e eᵀ / m = I / n. The update is
    // multiplicative, L ← L·S with S² the normalised second moment of
    // {e / F(p, L e)}, which stays well conditioned for very thin unit balls.
    let scale = n as f64 / dirs.len() as f64;
    let mut frame = FinslerFrame::identity(n);
    for _ in 0..60 {
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for e in &dirs {
            let f = finsler_norm(body, p, &frame.apply(e))?;
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Degenerate(format!("Finsler norm {f} while building a frame")));
            }
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += scale * e[i] * e[j] / (f * f);
                }
            }
        }
        let mut eig = m.symmetric_eigen();
        // one step shrinks an axis by at most 1e-4; thin balls take a few steps
        let floor = 1e-8 * eig.eigenvalues.max();
        eig.eigenvalues.apply(|x| *x = x.max(floor).sqrt());
        let sq = &eig.eigenvectors
            * nalgebra::DMatrix::from_diagonal(&eig.eigenvalues)
            * eig.eigenvectors.transpose();
        let change = (&sq - nalgebra::DMatrix::<f64>::identity(n, n)).norm();
        let lm = nalgebra::DMatrix::from_row_slice(n, n, &frame.l) * &sq;
        let det = frame.det * eig.eigenvalues.iter().product::<f64>();
        frame = FinslerFrame { n, l: (0..n * n).map(|k| lm[(k / n, k % n)]).collect(), det };
        if change <= 1e-3 {
            break;
        }
    }
    Ok(frame)
}

/// The Klein metric is Riemannian: `F(x,v)² = vᵀGv` with
/// `G = ((1-q) A + (Ay)(Ay)ᵀ) / (1-q)²`, `A = S⁻¹`, `y = x - c`. The frame is
/// `G^{-1/2}`.
fn klein_frame(e: &crate::convex_body::Ellipsoid, x: &[f64]) -> FinslerFrame {
    let n = x.len();
    let a = e.inverse_shape();
    let y: Vec<f64> = (0..n).map(|i| x[i] - e.center[i]).collect();
    let ay: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * y[j]).sum()).collect();
    let one_q = 1.0 - e.quad(x);
    let g = nalgebra::DMatrix::from_fn(n, n, |i, j| (one_q * a[i * n + j] + ay[i] * ay[j]) / (one_q * one_q));
    let eig = g.symmetric_eigen();
    let inv_sqrt = eig.eigenvalues.map(|x| 1.0 / x.sqrt());
    let m = &eig.eigenvectors * nalgebra::DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    FinslerFrame { n, l: (0..n * n).map(|k| m[(k / n, k % n)]).collect(), det: inv_sqrt.iter().product() }
}

/// Value of a sampled extremum together with its resolution error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `F*(p, w) = max { w·v : F(p, v) ≤ 1 }`.
///
/// Ellipsoids use the closed form of the Klein metric; 2D polytopes are exact
/// (the unit ball is a polygon whose vertices sit on the spokes); other
/// bodies maximise `w·u / F(p,u)` over sampled directions with local
/// refinement, and report the refinement gain as the error.
pub fn finsler_dual_norm(body: &ConvexBody, p: &[f64], w: &[f64]) -> Result<Estimate> {
    let n = body.dim();
    check_dim(n, w)?;
    if !body.contains(p)? {
        return Err(Error::NotInterior);
    }
    if w.iter().all(|&x| x == 0.0) {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if let Some(e) = body.as_ellipsoid() {
        return Ok(Estimate { value: klein_dual_norm(e, p, w), error: 0.0 });
    }
    if n == 2 && body.as_polytope().is_some() {
        let mut best = f64::NEG_INFINITY;
        for a in body.breakpoint_angles(p) {
            let u = [a.cos(), a.sin()];
            best = best.max(dot(w, &u) / finsler_norm(body, p, &u)?);
        }
        return Ok(Estimate { value: best, error: 0.0 });
    }
    sampled_dual_norm(body, p, w)
}

/// Sampling route for the dual norm; also used to cross-check the exact ones.
pub fn sampled_dual_norm(body: &ConvexBody, p: &[f64], w: &[f64]) -> Result<Estimate> {
    let n = body.dim();
    let frame = finsler_frame(body, p)?;
    let ratio = |e: &[f64]| -> Result<f64> {
        let u = frame.apply(e);
        Ok(dot(w, &u) / finsler_norm(body, p, &u)?)
    };
    if n == 2 {
        let m = M_DIR_DUAL;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..m {
            let psi = 2.0 * PI * k as f64 / m as f64;
            let r = ratio(&[psi.cos(), psi.sin()])?;
            if r > best.0 {
                best = (r, psi);
            }
        }
        let h = 2.0 * PI / m as f64;
        let (mut a, mut b) = (best.1 - h, best.1 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |psi: f64| ratio(&[psi.cos(), psi.sin()]);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c)?, f(d)?);
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d)?;
            }
        }
        let refined = fc.max(fd).max(best.0);
        return Ok(Estimate { value: refined, error: refined - best.0 });
    }
    let dirs = crate::quadrature::sphere_directions(n, M_DIR_DUAL_ND);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(dirs.len());
    for (i, e) in dirs.iter().enumerate() {
        scored.push((ratio(e)?, i));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sampled = scored[0].0;
    let mut refined = sampled;
    for &(start, i) in scored.iter().take(3) {
        let mut e = dirs[i].clone();
        let mut val = start;
        let mut step = 0.05;
        while step > 1e-9 {
            let mut improved = false;
            for j in 0..n {
                for s in [step, -step] {
                    let mut e2 = e.clone();
                    e2[j] += s;
                    let nn = norm(&e2);
                    e2.iter_mut().for_each(|x| *x /= nn);
                    let v2 = ratio(&e2)?;
                    if v2 > val {
                        val = v2;
                        e = e2;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        refined = refined.max(val);
    }
    Ok(Estimate { value: refined, error: refined - sampled })
}

/// Dual of the Klein (hyperbolic) metric of an ellipsoid:
/// `F*(x,w)² = (1-|y|²)(|Mᵀw|² - (y·Mᵀw)²)` with `y = M⁻¹(x-c)`, `S = MMᵀ`.
fn klein_dual_norm(e: &crate::convex_body::Ellipsoid, x: &[f64], w: &[f64]) -> f64 {
    let n = x.len();
    let chol = nalgebra::Cholesky::new(e.shape.clone()).expect("shape is positive definite");
    let m = chol.l();
    let d = nalgebra::DVector::from_iterator(n, (0..n).map(|i| x[i] - e.center[i]));
    let y = m.solve_lower_triangular(&d).expect("nonsingular");
    let mw = m.transpose() * nalgebra::DVector::from_column_slice(w);
    let r2 = y.dot(&y);
    let yw = y.dot(&mw);
    ((1.0 - r2) * (mw.dot(&mw) - yw * yw)).max(0.0).sqrt()
}

// -------------------------------------------------------------------- balls

#[derive(Clone, Debug, PartialEq)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: impl Into<Point>, radius: f64) -> Self {
        BallSpec { center: center.into(), radius }
    }
}

pub fn ball_contains(body: &ConvexBody, spec: &BallSpec, x: &[f64]) -> Result<bool> {
    Ok(distance(body, &spec.center, x)? <= spec.radius)
}

/// Parameter `t` with `d(c, c + t·u) = r`, from the chord through `c` along
/// `u` with parameters (a, b): `t = ab(1 - e^{-2r}) / (a + b e^{-2r})`.
pub fn radial_parameter(a: f64, b: f64, r: f64) -> f64 {
    let em = (-2.0 * r).exp();
    a * b * (-(-2.0 * r).exp_m1()) / (a + b * em)
}

/// `dt/dr` for [`radial_parameter`].
pub fn radial_parameter_derivative(a: f64, b: f64, r: f64) -> f64 {
    let em = (-2.0 * r).exp();
    2.0 * em * a * b * (a + b) / ((a + b * em) * (a + b * em))
}

/// Point at Hilbert distance `r` from `center` along direction `u`.
pub fn sphere_point(body: &ConvexBody, center: &[f64], u: &[f64], r: f64) -> Result<Point> {
    let c = body.chord_params(center, u)?;
    Ok(axpy(center, radial_parameter(c.t_minus, c.t_plus, r), u))
}

/// Vertices of the sphere S(center, radius) at `m` equally spaced Euclidean
/// angles (2D).
pub fn ball_boundary_polyline(body: &ConvexBody, spec: &BallSpec, m: usize) -> Result<Vec<Point>> {
    if body.dim() != 2 {
        return Err(Error::InvalidParameter("ball polylines are 2D only".into()));
    }
    if m < 8 {
        return Err(Error::InvalidParameter(format!("polyline needs m ≥ 8, got {m}")));
    }
    if !(spec.radius >= 0.0 && spec.radius.is_finite()) {
        return Err(Error::InvalidParameter("radius must be finite and ≥ 0".into()));
    }
    if !body.contains(&spec.center)? {
        return Err(Error::NotInterior);
    }
    if spec.radius == 0.0 {
        return Ok(vec![spec.center.clone()]);
    }
    (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            sphere_point(body, &spec.center, &[t.cos(), t.sin()], spec.radius)
        })
        .collect()
}

/// Sphere polyline refined until every segment has Hilbert length at most
/// `max_segment`. Starts from the spoke angles (where a polygonal body's
/// sphere has its corners) plus directions spread by the Finsler frame.
pub fn sphere_polyline_adaptive(body: &ConvexBody, spec: &BallSpec, max_segment: f64) -> Result<Vec<Point>> {
    if body.dim() != 2 {
        return Err(Error::InvalidParameter("sphere polylines are 2D only".into()));
    }
    if !(max_segment > 0.0) {
        return Err(Error::InvalidParameter("max_segment must be positive".into()));
    }
    let c = &spec.center;
    if !body.contains(c)? {
        return Err(Error::NotInterior);
    }
    if spec.radius == 0.0 {
        return Ok(vec![c.clone()]);
    }
    let frame = finsler_frame(body, c)?;
    let mut angles = body.breakpoint_angles(c);
    for k in 0..64 {
        let psi = 2.0 * PI * k as f64 / 64.0;
        let u = frame.apply(&[psi.cos(), psi.sin()]);
        angles.push(wrap_angle(u[1].atan2(u[0])));
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let at = |t: f64| sphere_point(body, c, &[t.cos(), t.sin()], spec.radius);
    let mut out = Vec::new();
    let k = angles.len();
    for i in 0..k {
        let t0 = angles[i];
        let t1 = if i + 1 < k { angles[i + 1] } else { angles[0] + 2.0 * PI };
        let p0 = at(t0)?;
        let p1 = at(t1)?;
        out.push(p0.clone());
        refine_arc(body, &at, (t0, p0), (t1, p1), max_segment, 0, &mut out)?;
    }
    Ok(out)
}

fn refine_arc(
    body: &ConvexBody,
    at: &dyn Fn(f64) -> Result<Point>,
    (t0, p0): (f64, Point),
    (t1, p1): (f64, Point),
    max_segment: f64,
    depth: u32,
    out: &mut Vec<Point>,
) -> Result<()> {
    if depth >= 48 || distance(body, &p0, &p1)? <= max_segment {
        return Ok(());
    }
    let tm = 0.5 * (t0 + t1);
    let pm = at(tm)?;
    refine_arc(body, at, (t0, p0), (tm, pm.clone()), max_segment, depth + 1, out)?;
    out.push(pm.clone());
    refine_arc(body, at, (tm, pm), (t1, p1), max_segment, depth + 1, out)
}

// -------------------------------------------------------------------- horoballs

#[derive(Clone, Debug, PartialEq)]
pub struct HoroballSpec {
    pub base: Point,
    pub anchor: Point,
    /// Starting approach parameter t₀ ∈ (0,1).
    pub approach_parameter: f64,
}

impl HoroballSpec {
    pub fn new(base: impl Into<Point>, anchor: impl Into<Point>) -> Self {
        HoroballSpec { base: base.into(), anchor: anchor.into(), approach_parameter: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BusemannValue {
    pub value: f64,
    pub depth: u32,
    /// Whether the approach sequence was non-increasing (to 1e-9).
    pub monotone: bool,
}

/// Check that `base` lies on the boundary, seen from `anchor`.
fn check_base(body: &ConvexBody, spec: &HoroballSpec) -> Result<()> {
    let d = sub(&spec.base, &spec.anchor);
    let c = body.chord_params(&spec.anchor, &d)?;
    let tol = 1e-9 + c.tol;
    if (c.t_plus - 1.0).abs() > tol {
        return Err(Error::InvalidParameter(format!(
            "base is not on the boundary (exit parameter {:.3e})",
            c.t_plus
        )));
    }
    if !(spec.approach_parameter > 0.0 && spec.approach_parameter < 1.0) {
        return Err(Error::InvalidParameter("approach parameter must lie in (0,1)".into()));
    }
    Ok(())
}

/// `lim_{z → base} d(x, z) - d(anchor, z)` along `[anchor, base)`.
pub fn busemann_with(body: &ConvexBody, spec: &HoroballSpec, x: &[f64]) -> Result<BusemannValue> {
    check_base(body, spec)?;
    if !body.contains(x)? {
        return Err(Error::NotInterior);
    }
    if x == &spec.anchor[..] {
        return Ok(BusemannValue { value: 0.0, depth: 0, monotone: true });
    }
    let dir = sub(&spec.base, &spec.anchor);
    let mut prev: Option<f64> = None;
    let mut monotone = true;
    let gap0 = 1.0 - spec.approach_parameter;
    for k in 0..=BUSEMANN_MAX_DEPTH {
        let t = 1.0 - gap0 * 0.5f64.powi(k as i32);
        let z = axpy(&spec.anchor, t, &dir);
        if !body.contains_unchecked(&z) {
            break;
        }
        let b = distance(body, x, &z)? - distance(body, &spec.anchor, &z)?;
        if let Some(bp) = prev {
            if b > bp + 1e-9 {
                monotone = false;
            }
            if (b - bp).abs() < TOL_BUSEMANN {
                return Ok(BusemannValue { value: b, depth: k, monotone });
            }
        }
        prev = Some(b);
    }
    Err(Error::NonConvergence(format!(
        "Busemann limit not reached within depth {BUSEMANN_MAX_DEPTH} (last value {:?})",
        prev
    )))
}

pub fn busemann(body: &ConvexBody, base: &[f64], anchor: &[f64], x: &[f64]) -> Result<f64> {
    busemann_with(body, &HoroballSpec::new(base, anchor), x).map(|b| b.value)
}

/// Closed horoball: Busemann value ≤ 0, so the anchor lies on the horosphere.
pub fn horoball_contains(body: &ConvexBody, spec: &HoroballSpec, x: &[f64]) -> Result<bool> {
    Ok(busemann_with(body, spec, x)?.value <= 0.0)
}

/// Horosphere through the anchor, traced by radial bisection from a seed
/// on the segment between anchor and base (2D, m equally spaced angles).
/// Rays that reach the body's boundary inside the horoball (only near the
/// base) stop just short of the boundary.
pub fn horosphere_polyline(body: &ConvexBody, spec: &HoroballSpec, m: usize) -> Result<Vec<Point>> {
    if body.dim() != 2 {
        return Err(Error::InvalidParameter("horosphere polylines are 2D only".into()));
    }
    if m < 8 {
        return Err(Error::InvalidParameter(format!("polyline needs m ≥ 8, got {m}")));
    }
    check_base(body, spec)?;
    let seed = crate::point::lerp(&spec.anchor, &spec.base, 0.5);
    let inside = |x: &[f64]| -> Result<bool> { horoball_contains(body, spec, x) };
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let th = 2.0 * PI * k as f64 / m as f64;
        let u = [th.cos(), th.sin()];
        let c = body.chord_params(&seed, &u)?;
        let mut hi = c.t_plus * (1.0 - 1e-9);
        let mut lo = 0.0;
        if inside(&axpy(&seed, hi, &u))? {
            out.push(axpy(&seed, hi, &u));
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(&axpy(&seed, mid, &u))? {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * c.t_plus {
                break;
            }
        }
        out.push(axpy(&seed, 0.5 * (lo + hi), &u));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> ConvexBody {
        ConvexBody::polygon(&[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn cross_ratio_examples() {
        let r = cross_ratio(&[-1.0, 0.0], &[0.0, 0.0], &[0.5, 0.0], &[1.0, 0.0]).unwrap();
        assert!((r - 3.0).abs() < 1e-15);
        let r = cross_ratio(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[4.0, 0.0]).unwrap();
        assert!((r - 3.0).abs() < 1e-15);
        assert_eq!(cross_ratio(&[-1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]), Err(Error::BadOrdering));
        assert!(matches!(
            cross_ratio(&[-1.0, 0.0], &[0.0, 0.1], &[0.5, 0.0], &[1.0, 0.0]),
            Err(Error::NotCollinear(_))
        ));
        assert_eq!(cross_ratio(&[-1.0, 0.0], &[0.5, 0.0], &[0.0, 0.0], &[1.0, 0.0]), Err(Error::BadOrdering));
    }

    #[test]
    fn distance_examples() {
        let disk = ConvexBody::ball(2).unwrap();
        let d = distance(&disk, &[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert!((d - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(distance(&disk, &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
        let d = distance(&tri(), &[0.25, 0.25], &[0.5, 0.25]).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        assert_eq!(distance(&disk, &[0.0, 0.0], &[1.0, 0.0]), Err(Error::NotInterior));
        assert_eq!(distance(&disk, &[1.0, 0.0], &[1.0, 0.0]), Err(Error::NotInterior));
    }

    #[test]
    fn finsler_examples() {
        let disk = ConvexBody::ball(2).unwrap();
        assert!((finsler_norm(&disk, &[0.0, 0.0], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        for r in [0.1, 0.5, 0.9, 0.999] {
            let f = finsler_norm(&disk, &[r, 0.0], &[1.0, 0.0]).unwrap();
            assert!((f - 1.0 / (1.0 - r * r)).abs() < 1e-12 * f);
        }
        assert_eq!(finsler_norm(&tri(), &[0.2, 0.2], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dual_norm_examples() {
        let disk = ConvexBody::ball(2).unwrap();
        assert!((finsler_dual_norm(&disk, &[0.0, 0.0], &[1.0, 0.0]).unwrap().value - 1.0).abs() < 1e-15);
        for r in [0.3, 0.8, 0.99] {
            let exact = finsler_dual_norm(&disk, &[r, 0.0], &[1.0, 0.0]).unwrap().value;
            assert!((exact - (1.0 - r * r)).abs() < 1e-14);
            let s = sampled_dual_norm(&disk, &[r, 0.0], &[1.0, 0.0]).unwrap();
            assert!((s.value - (1.0 - r * r)).abs() < 1e-9 * (1.0 - r * r), "{r}: {s:?}");
        }
    }

    #[test]
    fn dual_norm_polygon_matches_sampling() {
        let t = tri();
        for (p, w) in [([0.2, 0.3], [1.0, -0.4]), ([0.05, 0.9], [0.3, 0.7]), ([0.6, 0.01], [-1.0, 2.0])] {
            let e = finsler_dual_norm(&t, &p, &w).unwrap().value;
            let s = sampled_dual_norm(&t, &p, &w).unwrap().value;
            assert!((e - s).abs() < 1e-8 * e, "{e} {s}");
        }
    }

    #[test]
    fn frame_normalises_thin_unit_ball() {
        let disk = ConvexBody::ball(2).unwrap();
        let r = 1.0 - 1e-8;
        let p = [r / 2f64.sqrt(), r / 2f64.sqrt()];
        let f = finsler_frame(&disk, &p).unwrap();
        for k in 0..16 {
            let psi = 2.0 * PI * k as f64 / 16.0;
            let u = f.apply(&[psi.cos(), psi.sin()]);
            let fv = finsler_norm(&disk, &p, &u).unwrap();
            assert!((fv - 1.0).abs() < 0.05, "{fv}");
        }
    }

    #[test]
    fn disk_ball_polyline_is_circle_of_radius_tanh() {
        let disk = ConvexBody::ball(2).unwrap();
        for r in [0.5, 2.0, 8.0] {
            let poly = ball_boundary_polyline(&disk, &BallSpec::new([0.0, 0.0], r), 64).unwrap();
            for v in &poly {
                assert!((norm(v) - r.tanh()).abs() <= 1e-9);
            }
        }
        let one = ball_boundary_polyline(&disk, &BallSpec::new([0.1, 0.0], 0.0), 16).unwrap();
        assert_eq!(one, vec![Point::xy(0.1, 0.0)]);
    }

    #[test]
    fn radial_parameter_matches_bisection() {
        let t = tri();
        let c = [0.3, 0.2];
        let u = [0.6, -0.8];
        let cp = t.chord_params(&c, &u).unwrap();
        for r in [0.1, 1.0, 5.0] {
            let s = radial_parameter(cp.t_minus, cp.t_plus, r);
            let (mut lo, mut hi) = (0.0, cp.t_plus);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if distance(&t, &c, &axpy(&c, mid, &u)).unwrap() < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((s - lo).abs() < 1e-12, "{s} {lo}");
        }
    }

    #[test]
    fn busemann_disk_closed_form() {
        let disk = ConvexBody::ball(2).unwrap();
        for t in [-0.5, 0.0, 0.3, 0.7] {
            let b = busemann(&disk, &[1.0, 0.0], &[0.0, 0.0], &[t, 0.0]).unwrap();
            assert!((b + f64::atanh(t)).abs() < 2e-6, "{t}: {b}");
        }
        let spec = HoroballSpec::new([1.0, 0.0], [0.0, 0.0]);
        assert!(horoball_contains(&disk, &spec, &[0.0, 0.0]).unwrap());
        assert!(!horoball_contains(&disk, &spec, &[-0.1, 0.0]).unwrap());
        assert!(busemann(&disk, &[0.5, 0.0], &[0.0, 0.0], &[0.1, 0.0]).is_err());
    }

    #[test]
    fn disk_horosphere_is_euclidean_circle() {
        // horocycle through 0 based at (1,0) in the Klein model: x = (1 - y²... )
        // in the Poincaré model it is the circle of radius ½ centred at (½,0);
        // Klein = 2P/(1+|P|²), so check the Busemann value vanishes on it.
        let disk = ConvexBody::ball(2).unwrap();
        let spec = HoroballSpec::new([1.0, 0.0], [0.0, 0.0]);
        let poly = horosphere_polyline(&disk, &spec, 32).unwrap();
        for v in &poly {
            if norm(v) < 0.999 {
                let b = busemann_with(&disk, &spec, v).unwrap().value;
                assert!(b.abs() < 1e-5, "{v:?} {b}");
            }
        }
    }

    #[test]
    fn klein_frame_maps_circle_to_unit_sphere() {
        let e = ConvexBody::ellipsoid(&Point::xy(0.1, -0.2), &nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]))
            .unwrap();
        let x = [0.9, 0.1];
        let f = finsler_frame(&e, &x).unwrap();
        for k in 0..12 {
            let t = 0.5 * k as f64;
            let v = f.apply(&[t.cos(), t.sin()]);
            assert!((finsler_norm(&e, &x, &v).unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
