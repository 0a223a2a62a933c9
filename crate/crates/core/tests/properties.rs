use std::f64::consts::PI;

use hilbert_core::convex_body::projective_apply;
use hilbert_core::discretization::Graph;
use hilbert_core::hilbert_metric::{ball_contains, busemann, distance, sphere_point, BallSpec};
use hilbert_core::spectral::{spectral_radius, MarkovSystem, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use hilbert_core::{ConvexBody, Point};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn bodies() -> Vec<ConvexBody> {
    vec![
        ConvexBody::polygon(&[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap(),
        ConvexBody::regular_polygon(6, 1.0).unwrap(),
        ConvexBody::ball(2).unwrap(),
        ConvexBody::superellipse(4.0, 1.1).unwrap(),
    ]
}

/// Point on the ray at angle `a` from the interior point, a fraction `s` of
/// the way to the boundary.
fn inside(body: &ConvexBody, a: f64, s: f64) -> Point {
    let c = body.interior_point();
    let u = [a.cos(), a.sin()];
    let t = body.chord_params(c, &u).unwrap().t_plus * s;
    Point::xy(c[0] + t * u[0], c[1] + t * u[1])
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..2.0 * PI
}

fn frac() -> impl Strategy<Value = f64> {
    0.0..0.97
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_axioms(k in 0usize..4, a in angle(), s in frac(), b in angle(), t in frac(), c in angle(), u in frac()) {
        let body = &bodies()[k];
        let (p, q, r) = (inside(body, a, s), inside(body, b, t), inside(body, c, u));
        let pq = distance(body, &p, &q).unwrap();
        let qp = distance(body, &q, &p).unwrap();
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - qp).abs() <= 1e-9 * (1.0 + pq));
        prop_assert!(distance(body, &p, &p).unwrap() == 0.0);
        let pr = distance(body, &p, &r).unwrap();
        let rq = distance(body, &r, &q).unwrap();
        prop_assert!(pq <= pr + rq + 1e-9 * (1.0 + pq));
    }

    #[test]
    fn projective_maps_are_isometries(a in angle(), s in frac(), b in angle(), t in frac(), m in prop::array::uniform8(-0.3f64..0.3)) {
        let tri = &bodies()[0];
        let mut h = DMatrix::<f64>::identity(3, 3);
        for (i, x) in m.iter().enumerate() {
            h[(i / 3, i % 3)] += x;
        }
        let image = tri.projective_transform(&h);
        prop_assume!(image.is_ok());
        let image = image.unwrap();
        let (p, q) = (inside(tri, a, s), inside(tri, b, t));
        let (hp, hq) = (projective_apply(&h, &p).unwrap(), projective_apply(&h, &q).unwrap());
        let d = distance(tri, &p, &q).unwrap();
        let e = distance(&image, &hp, &hq).unwrap();
        prop_assert!((d - e).abs() <= 1e-7 * (1.0 + d), "{} vs {}", d, e);
    }

    #[test]
    fn sphere_points_are_at_the_radius(k in 0usize..4, a in angle(), r in 0.05f64..8.0) {
        let body = &bodies()[k];
        let c = body.interior_point().clone();
        let x = sphere_point(body, &c, &[a.cos(), a.sin()], r).unwrap();
        prop_assert!((distance(body, &c, &x).unwrap() - r).abs() <= 1e-7 * r.max(1.0));
        let spec = BallSpec::new(c.clone(), r * 1.001);
        prop_assert!(ball_contains(body, &spec, &x).unwrap());
    }

    #[test]
    fn busemann_is_one_lipschitz(k in 0usize..4, a in angle(), s in frac(), b in angle(), t in frac(), w in angle()) {
        let body = &bodies()[k];
        let base = inside(body, w, 1.0);
        let anchor = body.interior_point().clone();
        let (x, y) = (inside(body, a, s), inside(body, b, t));
        let bx = busemann(body, &base, &anchor, &x).unwrap();
        let by = busemann(body, &base, &anchor, &y).unwrap();
        let d = distance(body, &x, &y).unwrap();
        prop_assert!((bx - by).abs() <= d + 1e-6 * (1.0 + d), "|{} - {}| > {}", bx, by, d);
    }

    #[test]
    fn dirichlet_radius_shrinks_with_the_domain(n in 4usize..14, extra in prop::collection::vec((0usize..14, 0usize..14), 0..20), cut in 1usize..4) {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        edges.extend(extra.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b));
        edges.sort_unstable();
        edges.dedup();
        let g = Graph::from_edges(n, &edges).unwrap();
        let small = MarkovSystem::new(&g, &[0]).unwrap();
        let dir: Vec<usize> = (0..cut.min(n - 1)).collect();
        let smaller = MarkovSystem::new(&g, &dir).unwrap();
        let r1 = spectral_radius(&small, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap().rho;
        let r2 = spectral_radius(&smaller, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap().rho;
        prop_assert!((0.0..1.0).contains(&r1));
        prop_assert!(r2 <= r1 + 1e-9);
    }
}

#[test]
fn path_spectrum_matches_cosines() {
    for m in 1..30 {
        let g = Graph::path(m + 2);
        let sys = MarkovSystem::new(&g, &[0, m + 1]).unwrap();
        let rho = spectral_radius(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap().rho;
        assert!((rho - (PI / (m as f64 + 1.0)).cos()).abs() < 1e-8, "m = {m}");
    }
}
