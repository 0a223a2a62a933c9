//! Points and vectors in R^n, stored inline for n ≤ 4.

use smallvec::SmallVec;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

pub type Coords = SmallVec<[f64; 4]>;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Point(pub Coords);

pub type Vector = Point;

impl Point {
    pub fn new(c: &[f64]) -> Self {
        Point(SmallVec::from_slice(c))
    }

    pub fn zeros(n: usize) -> Self {
        Point(smallvec::smallvec![0.0; n])
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(&[x, y])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point::new(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::new(&v)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    Point(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

pub fn add(a: &[f64], b: &[f64]) -> Point {
    Point(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

pub fn scale(a: &[f64], s: f64) -> Point {
    Point(a.iter().map(|x| x * s).collect())
}

/// a + t·v
pub fn axpy(a: &[f64], t: f64, v: &[f64]) -> Point {
    Point(a.iter().zip(v).map(|(x, y)| x + t * y).collect())
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Point {
    Point(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect())
}

pub fn check_dim(expected: usize, p: &[f64]) -> Result<()> {
    if p.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: p.len() });
    }
    Ok(())
}

/// Euclidean volume of the unit ball in R^n.
pub fn unit_ball_volume_euclid(n: usize) -> f64 {
    // ω_0 = 1, ω_1 = 2, ω_n = 2π/n · ω_{n-2}
    let mut w = [1.0, 2.0];
    for k in 2..=n {
        w[k % 2] *= 2.0 * std::f64::consts::PI / k as f64;
    }
    w[n % 2]
}

/// Euclidean surface area of the unit sphere S^{n-1}.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume_euclid(n)
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::default();
    for x in it {
        s.add(x);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((unit_ball_volume_euclid(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume_euclid(3) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume_euclid(4) - pi * pi / 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * pi).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(v), 2.0);
    }
}

impl serde::Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl<'de> serde::Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Point::from(Vec::<f64>::deserialize(d)?))
    }
}
