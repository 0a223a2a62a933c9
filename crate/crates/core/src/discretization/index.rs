//! Neighbour search for nets in Hilbert geometries.
//!
//! Points are bucketed by their distance ρ to a fixed centre (shells of
//! fixed width) and, in 2D, sorted by the angle under which the centre sees
//! them. A query B(q, r) only visits shells with |ρ - ρ_q| ≤ r and, when the
//! centre lies outside the ball, the angular window of the ball. The window
//! is measured on the ball's boundary (exactly at the spokes for polygons,
//! at frame-spread directions otherwise) and inflated.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::convex_body::{wrap_angle, ConvexBody};
use crate::error::Result;
use crate::hilbert_metric::{distance, finsler_frame, radial_parameter, FinslerFrame};
use crate::point::{axpy, Point};

/// Slack on triangle-inequality filters, above the accumulated rounding
/// error of distances near the boundary.
const FILTER_SLACK: f64 = 1e-6;
const WINDOW_INFLATION: f64 = 1.05;
const WINDOW_REFINE: usize = 30;
const WINDOW_SAMPLES: usize = 16;

/// Angular window of a ball seen from the centre: `None` means the full
/// circle.
pub type Window = Option<(f64, f64)>;

#[derive(Clone, Debug)]
pub struct PolarIndex {
    center: Point,
    dim: usize,
    width: f64,
    rho: Vec<f64>,
    theta: Vec<f64>,
    shells2: Vec<BTreeSet<(u64, u32)>>,
    shells: Vec<Vec<u32>>,
}

impl PolarIndex {
    pub fn new(center: &[f64], width: f64) -> Self {
        PolarIndex {
            center: Point::new(center),
            dim: center.len(),
            width,
            rho: Vec::new(),
            theta: Vec::new(),
            shells2: Vec::new(),
            shells: Vec::new(),
        }
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.rho[i]
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i]
    }

    pub fn angle_of(&self, x: &[f64]) -> f64 {
        if self.dim == 2 {
            wrap_angle((x[1] - self.center[1]).atan2(x[0] - self.center[0]))
        } else {
            0.0
        }
    }

    fn shell_of(&self, rho: f64) -> usize {
        (rho / self.width).floor().max(0.0) as usize
    }

    /// Adds a point with known distance `rho` to the centre; returns its
    /// index.
    pub fn insert(&mut self, x: &[f64], rho: f64) -> u32 {
        let i = self.rho.len() as u32;
        let theta = self.angle_of(x);
        let s = self.shell_of(rho);
        self.rho.push(rho);
        self.theta.push(theta);
        if self.dim == 2 {
            if self.shells2.len() <= s {
                self.shells2.resize_with(s + 1, BTreeSet::new);
            }
            self.shells2[s].insert((theta.to_bits(), i));
        } else {
            if self.shells.len() <= s {
                self.shells.resize_with(s + 1, Vec::new);
            }
            self.shells[s].push(i);
        }
        i
    }

    /// Visits indices whose ρ lies in `[lo, hi]` and (2D) whose angle lies
    /// in `window`. The visitor returns `false` to stop early.
    pub fn visit(&self, lo: f64, hi: f64, window: Window, mut f: impl FnMut(u32) -> bool) {
        let s0 = self.shell_of(lo - FILTER_SLACK);
        let s1 = self.shell_of(hi + FILTER_SLACK);
        let keep = |i: u32| {
            let r = self.rho[i as usize];
            r >= lo - FILTER_SLACK && r <= hi + FILTER_SLACK
        };
        if self.dim != 2 {
            for s in s0..=s1.min(self.shells.len().saturating_sub(1)) {
                for &i in self.shells.get(s).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if keep(i) && !f(i) {
                        return;
                    }
                }
            }
            return;
        }
        let ranges: Vec<(f64, f64)> = match window {
            None => vec![(0.0, 2.0 * PI)],
            Some((c, h)) => {
                let a = c - h;
                let b = c + h;
                if a < 0.0 {
                    vec![(a + 2.0 * PI, 2.0 * PI), (0.0, b)]
                } else if b >= 2.0 * PI {
                    vec![(a, 2.0 * PI), (0.0, b - 2.0 * PI)]
                } else {
                    vec![(a, b)]
                }
            }
        };
        for s in s0..=s1.min(self.shells2.len().saturating_sub(1)) {
            let Some(set) = self.shells2.get(s) else { continue };
            for &(a, b) in &ranges {
                let lo_key = (a.max(0.0).to_bits(), 0u32);
                let hi_key = (b.to_bits(), u32::MAX);
                for &(_, i) in set.range(lo_key..=hi_key) {
                    if keep(i) && !f(i) {
                        return;
                    }
                }
            }
        }
    }

    /// Angular window containing B(q, r), where `rho_q = d(centre, q)`.
    pub fn window(&self, body: &ConvexBody, q: &[f64], rho_q: f64, r: f64, frame: &FinslerFrame) -> Result<Window> {
        if self.dim != 2 || rho_q <= r * (1.0 + 1e-9) + FILTER_SLACK {
            return Ok(None);
        }
        let theta_q = self.angle_of(q);
        let dev = |u: &[f64]| -> Result<f64> {
            let c = body.chord_params(q, u)?;
            let x = axpy(q, radial_parameter(c.t_minus, c.t_plus, r), u);
            Ok(wrap_angle(self.angle_of(&x) - theta_q + PI) - PI)
        };
        let dev_psi = |psi: f64| -> Result<f64> {
            let u = frame.apply(&[psi.cos(), psi.sin()]);
            let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
            dev(&[u[0] / nu, u[1] / nu])
        };
        let mut extent: f64 = 0.0;
        for a in body.breakpoint_angles(q) {
            extent = extent.max(dev(&[a.cos(), a.sin()])?.abs());
        }
        let step = 2.0 * PI / WINDOW_SAMPLES as f64;
        let samples: Vec<f64> = (0..WINDOW_SAMPLES).map(|k| dev_psi(step * k as f64)).collect::<Result<_>>()?;
        // the deviation peaks sharply for large balls; refine both extremes
        for sign in [1.0, -1.0] {
            let k = (0..WINDOW_SAMPLES)
                .max_by(|&a, &b| (sign * samples[a]).partial_cmp(&(sign * samples[b])).unwrap())
                .unwrap_or(0);
            let (mut a, mut b) = (step * (k as f64 - 1.0), step * (k as f64 + 1.0));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let mut x1 = b - g * (b - a);
            let mut x2 = a + g * (b - a);
            let mut f1 = sign * dev_psi(x1)?;
            let mut f2 = sign * dev_psi(x2)?;
            for _ in 0..WINDOW_REFINE {
                if f1 > f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = sign * dev_psi(x1)?;
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = sign * dev_psi(x2)?;
                }
            }
            extent = extent.max(f1.max(f2)).max(sign * samples[k]);
        }
        let dev = extent;
        let h = WINDOW_INFLATION * dev + 1e-12;
        Ok(if h >= PI { None } else { Some((theta_q, h)) })
    }

    /// All indexed points within Hilbert distance `r` of `q`, with their
    /// distances, sorted by index. `points` are the coordinates of the
    /// indexed points.
    pub fn within(&self, body: &ConvexBody, points: &[Point], q: &[f64], r: f64) -> Result<Vec<(u32, f64)>> {
        let rho_q = distance(body, &self.center, q)?;
        let frame = finsler_frame(body, q)?;
        let window = self.window(body, q, rho_q, r, &frame)?;
        self.within_window(body, points, q, rho_q, r, window)
    }

    pub fn within_window(
        &self,
        body: &ConvexBody,
        points: &[Point],
        q: &[f64],
        rho_q: f64,
        r: f64,
        window: Window,
    ) -> Result<Vec<(u32, f64)>> {
        let mut out = Vec::new();
        let mut err = None;
        self.visit(rho_q - r, rho_q + r, window, |i| match distance(body, q, &points[i as usize]) {
            Ok(d) => {
                if d <= r {
                    out.push((i, d));
                }
                true
            }
            Err(e) => {
                err = Some(e);
                false
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        out.sort_by_key(|p| p.0);
        Ok(out)
    }

    /// Nearest indexed point to `q` among those within `r`.
    pub fn nearest_within(&self, body: &ConvexBody, points: &[Point], q: &[f64], r: f64) -> Result<Option<(u32, f64)>> {
        Ok(self
            .within(body, points, q, r)?
            .into_iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0))))
    }
}
