use std::fmt::Write;

use hilbert_core::{ConvexBody, Point};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// Closed outline of a planar body: its vertices for polygons, otherwise
/// boundary points on `m` rays from the interior point.
pub fn outline(body: &ConvexBody, m: usize) -> hilbert_core::Result<Vec<Point>> {
    if let Some(p) = body.as_polytope() {
        return Ok(p.vertices.clone());
    }
    let c = body.interior_point();
    (0..m)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            let u = [a.cos(), a.sin()];
            let t = body.chord_params(c, &u)?.t_plus;
            Ok(Point::xy(c[0] + t * u[0], c[1] + t * u[1]))
        })
        .collect()
}

pub struct Layer {
    pub points: Vec<Point>,
    pub closed: bool,
    pub stroke: &'static str,
}

/// Body outline plus curves and marked points, fitted to a square canvas.
pub fn render(body: &[Point], layers: &[Layer], marks: &[Point]) -> String {
    let all = body.iter().chain(layers.iter().flat_map(|l| l.points.iter()));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let scale = (SIZE - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0).max(1e-300);
    let map = |p: &Point| (MARGIN + (p[0] - x0) * scale, SIZE - MARGIN - (p[1] - y0) * scale);
    let path = |pts: &[Point], closed: bool| {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = map(p);
            let _ = write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
        }
        if closed {
            d.push('Z');
        }
        d
    };
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>", path(body, true));
    for l in layers {
        let _ = writeln!(s, "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>", path(&l.points, l.closed), l.stroke);
    }
    for p in marks {
        let (x, y) = map(p);
        let _ = writeln!(s, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2.5\" fill=\"black\"/>");
    }
    s.push_str("</svg>\n");
    s
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
