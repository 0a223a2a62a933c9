//! Bounded open convex bodies described by containment and chord oracles.
//!
//! Three representations share one interface: polytopes (halfspaces
//! `a·x < c` with unit normals, plus the vertex list), ellipsoids
//! `(x-c)ᵀ S⁻¹ (x-c) < 1`, and sublevel bodies `{g < 1}` for an arbitrary
//! convex oracle `g`. Higher modules only call [`ConvexBody::contains`] and
//! [`ConvexBody::chord`] (or its parametric form).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::{axpy, check_dim, dot, norm, Point};

/// Boundary root-finding tolerance, relative to the bounding radius.
pub const TOL_BOUNDARY: f64 = 1e-12;

pub type SublevelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug)]
pub struct Polytope {
    pub vertices: Vec<Point>,
    /// Unit outward normals, row-major `m × n`.
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

impl Polytope {
    pub fn facet_count(&self) -> usize {
        self.offsets.len()
    }

    /// Facet `i` as (unit normal, offset) with the body on `a·x < c`.
    pub fn facet(&self, i: usize) -> (&[f64], f64) {
        let n = self.normals.len() / self.offsets.len();
        (&self.normals[i * n..(i + 1) * n], self.offsets[i])
    }
}

#[derive(Clone, Debug)]
pub struct Ellipsoid {
    pub center: Point,
    /// Shape matrix S; the body is `(x-c)ᵀ S⁻¹ (x-c) < 1`.
    pub shape: DMatrix<f64>,
    /// S⁻¹, row-major.
    q: Vec<f64>,
    det_shape: f64,
}

impl Ellipsoid {
    /// `(x-c)ᵀ S⁻¹ (x-c)`
    pub fn quad(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut acc = 0.0;
        for i in 0..n {
            let di = x[i] - self.center[i];
            let mut row = 0.0;
            for j in 0..n {
                row += self.q[i * n + j] * (x[j] - self.center[j]);
            }
            acc += di * row;
        }
        acc
    }

    pub fn det_shape(&self) -> f64 {
        self.det_shape
    }

    pub fn inverse_shape(&self) -> &[f64] {
        &self.q
    }
}

#[derive(Clone)]
pub struct Sublevel {
    g: SublevelFn,
    pub label: String,
}

impl Sublevel {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }
}

impl fmt::Debug for Sublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sublevel({})", self.label)
    }
}

#[derive(Clone, Debug)]
pub enum BodyKind {
    Polytope(Polytope),
    Ellipsoid(Ellipsoid),
    Sublevel(Sublevel),
}

#[derive(Clone, Debug)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
    interior_point: Point,
    bounding_radius: f64,
}

/// Intersection of a line with the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Chord {
    pub p_minus: Point,
    pub p_plus: Point,
    /// Achieved boundary tolerance (Euclidean length).
    pub tol: f64,
}

/// Chord in parametric form along `p + t·v`: the boundary is hit at
/// `t = -t_minus` and `t = t_plus`, both positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordParams {
    pub t_minus: f64,
    pub t_plus: f64,
    /// Tolerance on each parameter, in units of `v`.
    pub tol: f64,
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn interior_point(&self) -> &Point {
        &self.interior_point
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match &self.kind {
            BodyKind::Polytope(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_ellipsoid(&self) -> Option<&Ellipsoid> {
        match &self.kind {
            BodyKind::Ellipsoid(e) => Some(e),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            BodyKind::Polytope(p) => format!("polytope({} vertices, dim {})", p.vertices.len(), self.dim),
            BodyKind::Ellipsoid(_) => format!("ellipsoid(dim {})", self.dim),
            BodyKind::Sublevel(s) => format!("sublevel({})", s.label),
        }
    }

    // ---------------------------------------------------------------- constructors

    /// Convex polygon from (possibly unordered) vertices; the hull is taken.
    pub fn polygon(points: &[Point]) -> Result<Self> {
        for p in points {
            check_dim(2, p)?;
            if !p.is_finite() {
                return Err(Error::InvalidParameter("non-finite vertex".into()));
            }
        }
        let hull = convex_hull_2d(points);
        if hull.len() < 3 {
            return Err(Error::Degenerate("polygon has fewer than 3 extreme points".into()));
        }
        let area: f64 = (0..hull.len())
            .map(|i| {
                let (a, b) = (&hull[i], &hull[(i + 1) % hull.len()]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0;
        let scale = hull.iter().map(|p| norm(p)).fold(0.0, f64::max).max(1e-300);
        if area <= 1e-14 * scale * scale {
            return Err(Error::Degenerate("polygon has zero area".into()));
        }
        let mut normals = Vec::with_capacity(2 * hull.len());
        let mut offsets = Vec::with_capacity(hull.len());
        for i in 0..hull.len() {
            let (a, b) = (&hull[i], &hull[(i + 1) % hull.len()]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let nrm = [dy / len, -dx / len];
            normals.extend_from_slice(&nrm);
            offsets.push(nrm[0] * a[0] + nrm[1] * a[1]);
        }
        let centroid = centroid(&hull);
        Self::from_polytope(Polytope { vertices: hull, normals, offsets }, centroid)
    }

    /// Regular k-gon with the first vertex at angle 90°.
    pub fn regular_polygon(k: usize, circumradius: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParameter(format!("regular polygon needs k ≥ 3, got {k}")));
        }
        if !(circumradius > 0.0 && circumradius.is_finite()) {
            return Err(Error::InvalidParameter("circumradius must be positive".into()));
        }
        let pts: Vec<Point> = (0..k)
            .map(|j| {
                let a = PI / 2.0 + 2.0 * PI * j as f64 / k as f64;
                Point::xy(circumradius * a.cos(), circumradius * a.sin())
            })
            .collect();
        Self::polygon(&pts)
    }

    /// Standard simplex conv{0, e_1, …, e_n}.
    pub fn simplex(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("dimension must be ≥ 2".into()));
        }
        let mut verts = vec![Point::zeros(n)];
        for i in 0..n {
            let mut e = Point::zeros(n);
            e[i] = 1.0;
            verts.push(e);
        }
        Self::simplex_from_vertices(&verts)
    }

    /// Simplex with the given n+1 affinely independent vertices.
    pub fn simplex_from_vertices(verts: &[Point]) -> Result<Self> {
        let n = verts.first().map(|v| v.dim()).unwrap_or(0);
        if n < 2 || verts.len() != n + 1 {
            return Err(Error::InvalidParameter("simplex needs n+1 vertices in R^n, n ≥ 2".into()));
        }
        for v in verts {
            check_dim(n, v)?;
        }
        if n == 2 {
            return Self::polygon(verts);
        }
        // λ = H⁻¹ (x, 1) are barycentric coordinates; facet i is λ_i > 0.
        let h = DMatrix::from_fn(n + 1, n + 1, |r, c| if r < n { verts[c][r] } else { 1.0 });
        let hinv = h
            .clone()
            .try_inverse()
            .filter(|_| h.determinant().abs() > 1e-12)
            .ok_or_else(|| Error::Degenerate("simplex vertices are affinely dependent".into()))?;
        let mut normals = Vec::with_capacity(n * (n + 1));
        let mut offsets = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let a: Vec<f64> = (0..n).map(|j| -hinv[(i, j)]).collect();
            let c = hinv[(i, n)];
            let s = norm(&a);
            normals.extend(a.iter().map(|x| x / s));
            offsets.push(c / s);
        }
        let c = centroid(verts);
        Self::from_polytope(Polytope { vertices: verts.to_vec(), normals, offsets }, c)
    }

    fn from_polytope(p: Polytope, interior: Point) -> Result<Self> {
        let dim = interior.dim();
        let bounding_radius = p.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
        let body = ConvexBody { dim, kind: BodyKind::Polytope(p), interior_point: interior, bounding_radius };
        if !body.contains_unchecked(&body.interior_point) {
            return Err(Error::Degenerate("polytope has empty interior".into()));
        }
        Ok(body)
    }

    /// Euclidean unit ball in R^n.
    pub fn ball(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("dimension must be ≥ 2".into()));
        }
        Self::ellipsoid(&Point::zeros(n), &DMatrix::identity(n, n))
    }

    /// Ellipsoid `(x-c)ᵀ S⁻¹ (x-c) < 1` for symmetric positive-definite S.
    pub fn ellipsoid(center: &Point, shape: &DMatrix<f64>) -> Result<Self> {
        let n = center.dim();
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: shape.nrows() });
        }
        if n < 2 {
            return Err(Error::InvalidParameter("dimension must be ≥ 2".into()));
        }
        let sym = (shape + shape.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(sym.clone())
            .ok_or_else(|| Error::InvalidParameter("shape matrix is not positive definite".into()))?;
        let qm = chol.inverse();
        let det_shape = sym.determinant();
        let eig = sym.clone().symmetric_eigenvalues();
        let max_axis = eig.iter().cloned().fold(0.0, f64::max).sqrt();
        let q: Vec<f64> = (0..n * n).map(|k| qm[(k / n, k % n)]).collect();
        Ok(ConvexBody {
            dim: n,
            bounding_radius: norm(center) + max_axis,
            interior_point: center.clone(),
            kind: BodyKind::Ellipsoid(Ellipsoid { center: center.clone(), shape: sym, q, det_shape }),
        })
    }

    /// `{ |x|^p + |y|^q < 1 }`.
    pub fn superellipse(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("superellipse exponents must be ≥ 1, got ({p}, {q})")));
        }
        let g: SublevelFn = Arc::new(move |x: &[f64]| x[0].abs().powf(p) + x[1].abs().powf(q));
        Self::sublevel(2, g, Point::zeros(2), 2f64.sqrt(), format!("superellipse({p},{q})"))
    }

    /// Body `{g < 1}` for a convex oracle `g`. The caller guarantees that the
    /// body lies in the ball of radius `bounding_radius` about the origin.
    pub fn sublevel(
        dim: usize,
        g: SublevelFn,
        interior_point: Point,
        bounding_radius: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_dim(dim, &interior_point)?;
        if dim < 2 {
            return Err(Error::InvalidParameter("dimension must be ≥ 2".into()));
        }
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::InvalidParameter("bounding radius must be positive".into()));
        }
        if norm(&interior_point) >= bounding_radius {
            return Err(Error::InvalidParameter("interior point outside bounding ball".into()));
        }
        let body = ConvexBody {
            dim,
            kind: BodyKind::Sublevel(Sublevel { g, label: label.into() }),
            interior_point,
            bounding_radius,
        };
        if !body.contains_unchecked(&body.interior_point) {
            return Err(Error::NotInterior);
        }
        Ok(body)
    }

    // ---------------------------------------------------------------- oracles

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x)?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        if !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match &self.kind {
            BodyKind::Polytope(p) => {
                let n = self.dim;
                p.offsets.iter().enumerate().all(|(i, &c)| dot(&p.normals[i * n..(i + 1) * n], x) < c)
            }
            BodyKind::Ellipsoid(e) => e.quad(x) < 1.0,
            BodyKind::Sublevel(s) => s.eval(x) < 1.0,
        }
    }

    pub fn chord(&self, p: &[f64], v: &[f64]) -> Result<Chord> {
        let cp = self.chord_params(p, v)?;
        let vn = norm(v);
        Ok(Chord { p_minus: axpy(p, -cp.t_minus, v), p_plus: axpy(p, cp.t_plus, v), tol: cp.tol * vn })
    }

    /// Chord along `p + t·v` in parametric form.
    pub fn chord_params(&self, p: &[f64], v: &[f64]) -> Result<ChordParams> {
        check_dim(self.dim, p)?;
        check_dim(self.dim, v)?;
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroDirection);
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite direction".into()));
        }
        match &self.kind {
            BodyKind::Polytope(poly) => self.chord_polytope(poly, p, v),
            BodyKind::Ellipsoid(e) => chord_ellipsoid(e, p, v),
            BodyKind::Sublevel(s) => {
                if !self.contains_unchecked(p) {
                    return Err(Error::NotInterior);
                }
                let (tp, tolp) = self.sublevel_exit(s, p, v, 1.0)?;
                let (tm, tolm) = self.sublevel_exit(s, p, v, -1.0)?;
                Ok(ChordParams { t_minus: tm, t_plus: tp, tol: tolp.max(tolm) })
            }
        }
    }

    fn chord_polytope(&self, poly: &Polytope, p: &[f64], v: &[f64]) -> Result<ChordParams> {
        let n = self.dim;
        let mut tp = f64::INFINITY;
        let mut tm = f64::INFINITY;
        for (i, &c) in poly.offsets.iter().enumerate() {
            let a = &poly.normals[i * n..(i + 1) * n];
            let s = c - dot(a, p);
            if !(s > 0.0) {
                return Err(Error::NotInterior);
            }
            let av = dot(a, v);
            if av > 0.0 {
                tp = tp.min(s / av);
            } else if av < 0.0 {
                tm = tm.min(s / -av);
            }
        }
        if !(tp.is_finite() && tm.is_finite()) {
            return Err(Error::Degenerate("polytope is unbounded along a line".into()));
        }
        Ok(ChordParams { t_minus: tm, t_plus: tp, tol: 0.0 })
    }

    /// Exit parameter of `p + sign·t·v` from a sublevel body: exit of the
    /// bounding ball brackets the root, then Illinois regula falsi with
    /// bisection safeguards.
    fn sublevel_exit(&self, s: &Sublevel, p: &[f64], v: &[f64], sign: f64) -> Result<(f64, f64)> {
        let n = self.dim;
        let vn = norm(v);
        let r = self.bounding_radius * (1.0 + 1e-9);
        let pv = sign * dot(p, v);
        let pp = dot(p, p);
        let disc = pv * pv - vn * vn * (pp - r * r);
        let t_hi = (-pv + disc.max(0.0).sqrt()) / (vn * vn);
        let mut x = vec![0.0; n];
        let mut f = |t: f64| -> f64 {
            for i in 0..n {
                x[i] = p[i] + t * (sign * v[i]);
            }
            let g = s.eval(&x) - 1.0;
            if g.is_nan() {
                f64::INFINITY
            } else {
                g
            }
        };
        let (mut a, mut fa) = (0.0, f(0.0));
        let (mut b, mut fb) = (t_hi, f(t_hi));
        if !(fa < 0.0) {
            return Err(Error::NotInterior);
        }
        if fb < 0.0 {
            return Err(Error::InvalidParameter("bounding radius does not contain the body".into()));
        }
        let tol_abs = TOL_BOUNDARY * self.bounding_radius / vn;
        let mut side = 0i8;
        for it in 0..400 {
            let w = b - a;
            if w <= tol_abs.min(1e-9 * a.max(f64::MIN_POSITIVE)).max(4.0 * f64::EPSILON * b) {
                break;
            }
            let secant = fa.is_finite() && fb.is_finite() && fb > fa && it % 5 != 4;
            let mut c = if secant { (a * fb - b * fa) / (fb - fa) } else { 0.5 * (a + b) };
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            if c <= a || c >= b {
                break;
            }
            let fc = f(c);
            if fc < 0.0 {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                if fc == 0.0 {
                    return Ok((c, 0.0));
                }
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        Ok((0.5 * (a + b), 0.5 * (b - a)))
    }

    /// Angles in [0, 2π) of the spokes from `p` through each vertex and their
    /// opposites (2D polytopes). Chord endpoints switch facets exactly there.
    pub fn breakpoint_angles(&self, p: &[f64]) -> Vec<f64> {
        let Some(poly) = self.as_polytope() else { return Vec::new() };
        if self.dim != 2 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2 * poly.vertices.len());
        for v in &poly.vertices {
            let a = (v[1] - p[1]).atan2(v[0] - p[0]);
            out.push(wrap_angle(a));
            out.push(wrap_angle(a + PI));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        out
    }

    // ---------------------------------------------------------------- projective maps

    /// Image of the body under the projective map with homogeneous matrix `m`
    /// ((n+1)×(n+1), acting on `(x, 1)`).
    pub fn projective_transform(&self, m: &DMatrix<f64>) -> Result<ConvexBody> {
        let n = self.dim;
        if m.nrows() != n + 1 || m.ncols() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n + 1, got: m.nrows() });
        }
        let mut m = m.clone();
        let minv0 = m.clone().try_inverse().ok_or_else(|| Error::InvalidParameter("singular projective matrix".into()))?;
        if !minv0.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("singular projective matrix".into()));
        }
        let w0 = homogeneous_w(&m, &self.interior_point);
        if w0 == 0.0 {
            return Err(Error::UnboundedImage);
        }
        if w0 < 0.0 {
            m = -m;
        }
        let minv = m.clone().try_inverse().unwrap();
        let interior = projective_apply(&m, &self.interior_point).ok_or(Error::UnboundedImage)?;
        match &self.kind {
            BodyKind::Polytope(poly) => {
                let scale = m.row(n).iter().map(|x| x.abs()).sum::<f64>();
                let mut verts = Vec::with_capacity(poly.vertices.len());
                for v in &poly.vertices {
                    if homogeneous_w(&m, v) <= 1e-12 * scale {
                        return Err(Error::UnboundedImage);
                    }
                    verts.push(projective_apply(&m, v).ok_or(Error::UnboundedImage)?);
                }
                let mut normals = Vec::with_capacity(poly.normals.len());
                let mut offsets = Vec::with_capacity(poly.offsets.len());
                for i in 0..poly.facet_count() {
                    let (a, c) = poly.facet(i);
                    // covector ℓ = (a, -c) pulls back through M⁻¹
                    let l = DVector::from_iterator(n + 1, a.iter().cloned().chain(std::iter::once(-c)));
                    let l2 = minv.transpose() * l;
                    let a2: Vec<f64> = (0..n).map(|j| l2[j]).collect();
                    let s = norm(&a2);
                    normals.extend(a2.iter().map(|x| x / s));
                    offsets.push(-l2[n] / s);
                }
                let body = ConvexBody {
                    dim: n,
                    bounding_radius: verts.iter().map(|v| norm(v)).fold(0.0, f64::max),
                    kind: BodyKind::Polytope(Polytope { vertices: verts, normals, offsets }),
                    interior_point: interior,
                };
                if !body.contains_unchecked(&body.interior_point) {
                    return Err(Error::Degenerate("projective image lost its interior".into()));
                }
                Ok(body)
            }
            BodyKind::Ellipsoid(e) => {
                let (c2, s2) = ellipsoid_image(&m, &minv, &e.center, &e.shape)?;
                ConvexBody::ellipsoid(&c2, &s2)
            }
            BodyKind::Sublevel(s) => {
                let r = self.bounding_radius;
                let row: Vec<f64> = (0..n).map(|j| m[(n, j)]).collect();
                if m[(n, n)] - norm(&row) * r <= 0.0 {
                    return Err(Error::UnboundedImage);
                }
                let (bc, bs) = ellipsoid_image(&m, &minv, &Point::zeros(n), &(DMatrix::identity(n, n) * (r * r)))?;
                let max_axis = bs.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max).sqrt();
                let g0 = s.g.clone();
                let minv_c = minv.clone();
                let g: SublevelFn = Arc::new(move |y: &[f64]| {
                    let yh = DVector::from_iterator(n + 1, y.iter().cloned().chain(std::iter::once(1.0)));
                    let xh = &minv_c * yh;
                    let w = xh[n];
                    if !(w > 0.0) {
                        return f64::INFINITY;
                    }
                    let x: Vec<f64> = (0..n).map(|j| xh[j] / w).collect();
                    g0(&x)
                });
                ConvexBody::sublevel(n, g, interior, (norm(&bc) + max_axis) * (1.0 + 1e-9), format!("projective({})", s.label))
            }
        }
    }
}

/// Last homogeneous coordinate of `M (x, 1)`.
fn homogeneous_w(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    (0..n).map(|j| m[(n, j)] * x[j]).sum::<f64>() + m[(n, n)]
}

/// Apply a projective map to a point; `None` if it lands at infinity.
pub fn projective_apply(m: &DMatrix<f64>, x: &[f64]) -> Option<Point> {
    let n = x.len();
    let w = homogeneous_w(m, x);
    if w == 0.0 || !w.is_finite() {
        return None;
    }
    Some(Point((0..n).map(|i| ((0..n).map(|j| m[(i, j)] * x[j]).sum::<f64>() + m[(i, n)]) / w).collect()))
}

/// Image of the ellipsoid (c, S) under M (with inverse `minv`), as (center, shape).
fn ellipsoid_image(m: &DMatrix<f64>, minv: &DMatrix<f64>, c: &[f64], s: &DMatrix<f64>) -> Result<(Point, DMatrix<f64>)> {
    let n = c.len();
    let row = DVector::from_iterator(n, (0..n).map(|j| m[(n, j)]));
    let cv = DVector::from_column_slice(c);
    let w_min = row.dot(&cv) + m[(n, n)] - (row.transpose() * s * &row)[(0, 0)].max(0.0).sqrt();
    if w_min <= 0.0 {
        return Err(Error::UnboundedImage);
    }
    let q = s.clone().try_inverse().ok_or(Error::InvalidParameter("singular shape".into()))?;
    let qc = &q * &cv;
    let mut qh = DMatrix::zeros(n + 1, n + 1);
    qh.view_mut((0, 0), (n, n)).copy_from(&q);
    for i in 0..n {
        qh[(i, n)] = -qc[i];
        qh[(n, i)] = -qc[i];
    }
    qh[(n, n)] = cv.dot(&qc) - 1.0;
    let q2 = minv.transpose() * qh * minv;
    let a = q2.view((0, 0), (n, n)).into_owned();
    let a = (&a + a.transpose()) * 0.5;
    let b = DVector::from_iterator(n, (0..n).map(|i| q2[(i, n)]));
    let d = q2[(n, n)];
    let ainv = a.clone().try_inverse().ok_or(Error::UnboundedImage)?;
    let center = -(&ainv * &b);
    let k = b.dot(&(&ainv * &b)) - d;
    if !(k > 0.0) {
        return Err(Error::UnboundedImage);
    }
    let shape = ainv * k;
    if nalgebra::Cholesky::new(shape.clone()).is_none() {
        return Err(Error::UnboundedImage);
    }
    Ok((Point(center.iter().cloned().collect()), shape))
}

fn chord_ellipsoid(e: &Ellipsoid, p: &[f64], v: &[f64]) -> Result<ChordParams> {
    let n = p.len();
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for i in 0..n {
        let mut qv = 0.0;
        let mut qd = 0.0;
        for j in 0..n {
            qv += e.q[i * n + j] * v[j];
            qd += e.q[i * n + j] * (p[j] - e.center[j]);
        }
        a += v[i] * qv;
        b += v[i] * qd;
        c += (p[i] - e.center[i]) * qd;
    }
    c -= 1.0;
    if !(c < 0.0) {
        return Err(Error::NotInterior);
    }
    let disc = (b * b - a * c).sqrt();
    // positive root of A t² - 2βt + C = 0, written to avoid cancellation
    let root = |beta: f64| if beta >= 0.0 { (beta + disc) / a } else { -c / (disc - beta) };
    Ok(ChordParams { t_minus: root(b), t_plus: root(-b), tol: 0.0 })
}

/// Angle wrapped to [0, 2π).
pub fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

fn centroid(pts: &[Point]) -> Point {
    let n = pts[0].dim();
    let mut c = Point::zeros(n);
    for p in pts {
        for i in 0..n {
            c[i] += p[i] / pts.len() as f64;
        }
    }
    c
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull_2d(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Point, a: &Point, b: &Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> ConvexBody {
        ConvexBody::polygon(&[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn containment_examples() {
        let disk = ConvexBody::ball(2).unwrap();
        assert!(disk.contains(&[0.0, 0.0]).unwrap());
        assert!(!disk.contains(&[1.0, 0.0]).unwrap());
        assert!(disk.contains(&[0.99, 0.0]).unwrap());
        assert!(!disk.contains(&[1.01, 0.0]).unwrap());
        assert!(tri().contains(&[0.25, 0.25]).unwrap());
        assert!(!tri().contains(&[0.5, 0.5]).unwrap());
        assert_eq!(disk.contains(&[0.0, 0.0, 0.0]), Err(Error::DimensionMismatch { expected: 2, got: 3 }));
    }

    #[test]
    fn chord_examples() {
        let disk = ConvexBody::ball(2).unwrap();
        let c = disk.chord(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(&c.p_minus[..], &[-1.0, 0.0]);
        assert_eq!(&c.p_plus[..], &[1.0, 0.0]);

        let c = tri().chord(&[0.25, 0.25], &[1.0, 0.0]).unwrap();
        assert!((c.p_minus[0] - 0.0).abs() < 1e-15 && (c.p_minus[1] - 0.25).abs() < 1e-15);
        assert!((c.p_plus[0] - 0.75).abs() < 1e-15 && (c.p_plus[1] - 0.25).abs() < 1e-15);

        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let e = ConvexBody::ellipsoid(&Point::zeros(2), &s).unwrap();
        let c = e.chord(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((c.p_plus[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn chord_errors() {
        let disk = ConvexBody::ball(2).unwrap();
        assert_eq!(disk.chord(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::ZeroDirection));
        assert_eq!(disk.chord(&[2.0, 0.0], &[1.0, 0.0]), Err(Error::NotInterior));
        assert_eq!(tri().chord(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::NotInterior));
    }

    #[test]
    fn regular_polygon_vertices() {
        let t = ConvexBody::regular_polygon(3, 1.0).unwrap();
        let verts = &t.as_polytope().unwrap().vertices;
        assert_eq!(verts.len(), 3);
        for ang in [90f64, 210.0, 330.0] {
            let a = ang.to_radians();
            assert!(verts.iter().any(|v| (v[0] - a.cos()).abs() < 1e-12 && (v[1] - a.sin()).abs() < 1e-12));
        }
        assert!(ConvexBody::regular_polygon(2, 1.0).is_err());
    }

    #[test]
    fn degenerate_polytopes_rejected() {
        let r = ConvexBody::polygon(&[Point::xy(0.0, 0.0), Point::xy(1.0, 1.0), Point::xy(2.0, 2.0)]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
        let r = ConvexBody::simplex_from_vertices(&[
            Point::new(&[0.0, 0.0, 0.0]),
            Point::new(&[1.0, 0.0, 0.0]),
            Point::new(&[0.0, 1.0, 0.0]),
            Point::new(&[1.0, 1.0, 0.0]),
        ]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn simplex_3d_facets() {
        let s = ConvexBody::simplex(3).unwrap();
        assert!(s.contains(&[0.2, 0.2, 0.2]).unwrap());
        assert!(!s.contains(&[0.4, 0.4, 0.4]).unwrap());
        let c = s.chord(&[0.25, 0.25, 0.25], &[1.0, 0.0, 0.0]).unwrap();
        assert!((c.p_plus[0] - 0.5).abs() < 1e-14 && c.p_minus[0].abs() < 1e-14);
    }

    #[test]
    fn superellipse_chord_hits_level_set() {
        let b = ConvexBody::superellipse(4.0, 1.1).unwrap();
        let c = b.chord(&[0.1, -0.2], &[0.3, 0.7]).unwrap();
        let BodyKind::Sublevel(s) = b.kind() else { unreachable!() };
        assert!((s.eval(&c.p_plus) - 1.0).abs() < 1e-9);
        assert!((s.eval(&c.p_minus) - 1.0).abs() < 1e-9);
        assert!(ConvexBody::superellipse(0.5, 2.0).is_err());
    }

    #[test]
    fn projective_identity_and_diagonal() {
        let t = tri();
        let id = DMatrix::identity(3, 3);
        let t2 = t.projective_transform(&id).unwrap();
        assert_eq!(t2.as_polytope().unwrap().vertices, t.as_polytope().unwrap().vertices);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 1.0]));
        let t3 = t.projective_transform(&d).unwrap();
        let v = &t3.as_polytope().unwrap().vertices;
        assert!(v.iter().any(|p| p[0] == 2.0 && p[1] == 0.0));
        assert!(v.iter().any(|p| p[0] == 0.0 && p[1] == 3.0));
        assert!(t3.contains(&[0.5, 0.5]).unwrap());
        assert!(!t3.contains(&[1.5, 1.5]).unwrap());
    }

    #[test]
    fn projective_unbounded_rejected() {
        let disk = ConvexBody::ball(2).unwrap();
        // w = x + 0.5 vanishes inside the disk
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.5]);
        assert_eq!(disk.projective_transform(&m).unwrap_err(), Error::UnboundedImage);
        assert_eq!(tri().projective_transform(&m.clone()).map(|_| ()), Ok(()));
        let m2 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -3.0, 0.0, 1.0]);
        assert_eq!(tri().projective_transform(&m2).unwrap_err(), Error::UnboundedImage);
    }

    #[test]
    fn breakpoints_of_triangle() {
        let t = tri();
        let b = t.breakpoint_angles(&[0.25, 0.25]);
        assert_eq!(b.len(), 6);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }
}
