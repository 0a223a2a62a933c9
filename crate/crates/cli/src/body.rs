use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use hilbert_core::{ConvexBody, Point};
use nalgebra::DMatrix;
use serde::Deserialize;

/// Body description read from `--body FILE`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Polygon { vertices: Vec<[f64; 2]> },
    RegularPolygon { sides: usize, circumradius: Option<f64> },
    Ellipsoid { center: Vec<f64>, shape: Vec<Vec<f64>> },
    Ball { dim: usize },
    Simplex { dim: usize },
    Superellipse { p: f64, q: f64 },
}

impl BodySpec {
    pub fn build(&self) -> hilbert_core::Result<ConvexBody> {
        match self {
            BodySpec::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::xy(v[0], v[1])).collect();
                ConvexBody::polygon(&pts)
            }
            BodySpec::RegularPolygon { sides, circumradius } => ConvexBody::regular_polygon(*sides, circumradius.unwrap_or(1.0)),
            BodySpec::Ellipsoid { center, shape } => {
                let n = center.len();
                if shape.len() != n || shape.iter().any(|r| r.len() != n) {
                    return Err(hilbert_core::Error::InvalidParameter(format!("shape must be {n}×{n}")));
                }
                let m = DMatrix::from_fn(n, n, |i, j| shape[i][j]);
                ConvexBody::ellipsoid(&Point::new(center), &m)
            }
            BodySpec::Ball { dim } => ConvexBody::ball(*dim),
            BodySpec::Simplex { dim } => ConvexBody::simplex(*dim),
            BodySpec::Superellipse { p, q } => ConvexBody::superellipse(*p, *q),
        }
    }
}

/// Built-in bodies for `--shape`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    /// Triangle with vertices (0,0), (1,0), (0,1).
    Triangle,
    /// Regular hexagon with circumradius 1.
    Hexagon,
    /// Unit disk (Klein model of the hyperbolic plane).
    Disk,
    /// |x|^4 + |y|^1.1 < 1.
    Superellipse,
}

impl Shape {
    pub fn spec(self) -> BodySpec {
        match self {
            Shape::Triangle => BodySpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] },
            Shape::Hexagon => BodySpec::RegularPolygon { sides: 6, circumradius: Some(1.0) },
            Shape::Disk => BodySpec::Ball { dim: 2 },
            Shape::Superellipse => BodySpec::Superellipse { p: 4.0, q: 1.1 },
        }
    }
}

pub fn read_spec(path: &Path) -> anyhow::Result<BodySpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The barycenter of the triangle is the natural base point for the
/// built-in shapes; otherwise the body's own interior point.
pub fn default_center(spec: &BodySpec, body: &ConvexBody) -> Point {
    match spec {
        BodySpec::Polygon { vertices } => {
            let k = vertices.len() as f64;
            Point::xy(vertices.iter().map(|v| v[0]).sum::<f64>() / k, vertices.iter().map(|v| v[1]).sum::<f64>() / k)
        }
        _ => body.interior_point().clone(),
    }
}

/// Parses `x,y[,z...]`.
pub fn parse_point(s: &str) -> Result<Point, String> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(Point::from(v)),
        _ => Err(format!("expected comma-separated finite coordinates, got {s:?}")),
    }
}

/// Comma-separated numbers given as a single flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct List(pub Vec<f64>);

impl std::ops::Deref for List {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Parses `a,b,c` into a list of numbers.
pub fn parse_list(s: &str) -> Result<List, String> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(List(v)),
        _ => Err(format!("expected comma-separated finite numbers, got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let ok: BodySpec = serde_json::from_str(r#"{"type":"superellipse","p":4,"q":1.1}"#).unwrap();
        assert_eq!(ok, BodySpec::Superellipse { p: 4.0, q: 1.1 });
        assert!(serde_json::from_str::<BodySpec>(r#"{"type":"superellipse","p":4,"q":1.1,"r":2}"#).is_err());
        assert!(serde_json::from_str::<BodySpec>(r#"{"type":"blob"}"#).is_err());
    }

    #[test]
    fn points_and_lists() {
        assert_eq!(parse_point("0.5, -1").unwrap(), Point::xy(0.5, -1.0));
        assert!(parse_point("1,x").is_err());
        assert_eq!(parse_list("1,2,3").unwrap().0, vec![1.0, 2.0, 3.0]);
        assert!(parse_list("").is_err());
    }
}
