//! ε-separated nets in Hilbert balls and their 3ρ-proximity graphs.

pub mod index;

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_body::ConvexBody;
use crate::error::{Error, Result};
use crate::hilbert_measure::{BallSampler, INTEGRAND_VOLUME};
use crate::hilbert_metric::{distance, finsler_frame, radial_parameter};
use crate::point::{axpy, check_dim, norm, Point};

pub use index::PolarIndex;

/// Tuning of [`build_net_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetOptions {
    /// Consecutive rejected candidates before an active point retires (dimension ≥ 3; planar nets sweep a fixed set of angles).
    pub candidates: usize,
    /// Consecutive probes that must find a net point within ε.
    pub probes: usize,
    pub max_points: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions { candidates: 30, probes: 10_000, max_points: 5_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Net {
    pub body: ConvexBody,
    pub points: Vec<Point>,
    pub epsilon: f64,
    pub domain_center: Point,
    pub domain_radius: f64,
    /// Largest distance from a certified probe to the net.
    pub covering_radius_est: f64,
    pub seed: u64,
    index: PolarIndex,
}

impl Net {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Hilbert distance of point `i` to the domain centre.
    pub fn radius_of(&self, i: usize) -> f64 {
        self.index.rho(i)
    }

    pub fn index(&self) -> &PolarIndex {
        &self.index
    }

    /// Net points within distance `r` of `q`, with distances, by index.
    pub fn within(&self, q: &[f64], r: f64) -> Result<Vec<(u32, f64)>> {
        self.index.within(&self.body, &self.points, q, r)
    }

    pub fn nearest_within(&self, q: &[f64], r: f64) -> Result<Option<(u32, f64)>> {
        self.index.nearest_within(&self.body, &self.points, q, r)
    }

    /// `index,x_1,...,x_n,rho` rows.
    pub fn to_csv(&self) -> String {
        let n = self.body.dim();
        let mut s = String::from("index");
        for k in 0..n {
            let _ = write!(s, ",x{}", k + 1);
        }
        s.push_str(",rho\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(s, "{i}");
            for c in p.iter() {
                let _ = write!(s, ",{c:.17e}");
            }
            let _ = writeln!(s, ",{:.17e}", self.radius_of(i));
        }
        s
    }
}

pub fn build_net(body: &ConvexBody, x0: &[f64], domain_radius: f64, epsilon: f64, seed: u64) -> Result<Net> {
    build_net_with(body, x0, domain_radius, epsilon, seed, NetOptions::default())
}

/// Maximal ε-separated subset of B(x0, R): grows the net outwards from x0
/// (candidates around each active point, spread by the
/// Finsler frame), then certifies maximality with measure-distributed
/// probes; a probe farther than ε from the net is inserted, the net grows
/// from it, and the certificate restarts.
pub fn build_net_with(
    body: &ConvexBody,
    x0: &[f64],
    domain_radius: f64,
    epsilon: f64,
    seed: u64,
    opts: NetOptions,
) -> Result<Net> {
    check_dim(body.dim(), x0)?;
    if !body.contains(x0)? {
        return Err(Error::NotInterior);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if !(domain_radius >= 0.0 && domain_radius.is_finite()) {
        return Err(Error::InvalidParameter("domain radius must be finite and ≥ 0".into()));
    }
    if opts.candidates == 0 {
        return Err(Error::InvalidParameter("need at least one candidate per active point".into()));
    }
    let mut net = Net {
        body: body.clone(),
        points: vec![Point::new(x0)],
        epsilon,
        domain_center: Point::new(x0),
        domain_radius,
        covering_radius_est: 0.0,
        seed,
        index: PolarIndex::new(x0, epsilon),
    };
    net.index.insert(x0, 0.0);
    if domain_radius == 0.0 {
        return Ok(net);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut active = VecDeque::from([0u32]);
    grow(&mut net, &mut active, &mut rng, &opts)?;

    let sampler = BallSampler::new(body, x0, domain_radius, INTEGRAND_VOLUME)?;
    let mut probe_rng = ChaCha8Rng::seed_from_u64(seed);
    probe_rng.set_stream(1);
    let mut passed = 0;
    let mut cover: f64 = 0.0;
    while passed < opts.probes {
        let x = sampler.sample_position(&mut probe_rng)?;
        let rho_x = distance(body, x0, &x)?;
        if rho_x > domain_radius {
            continue;
        }
        match net.nearest_within(&x, epsilon)? {
            Some((_, d)) => {
                passed += 1;
                cover = cover.max(d);
            }
            None => {
                let i = push_point(&mut net, x, rho_x, &opts)?;
                active.push_back(i);
                grow(&mut net, &mut active, &mut rng, &opts)?;
                passed = 0;
                cover = 0.0;
            }
        }
    }
    net.covering_radius_est = cover;
    Ok(net)
}

fn push_point(net: &mut Net, x: Point, rho: f64, opts: &NetOptions) -> Result<u32> {
    if net.points.len() >= opts.max_points {
        return Err(Error::TooLarge(format!("net exceeds {} points", opts.max_points)));
    }
    let i = net.index.insert(&x, rho);
    net.points.push(x);
    Ok(i)
}

const SWEEP_ANGLES: usize = 48;
const SWEEP_GAP: f64 = 1e-3;
/// Bisection depth between sweep angles covered by different net points.
const SWEEP_REFINE: u32 = 5;

/// Fate of one candidate: covered by an existing point, inserted as a new
/// point, or outside the domain.
#[derive(Clone, Copy)]
enum Candidate {
    Covered(u32),
    Inserted(u32),
    Outside,
}

impl Candidate {
    fn owner(self) -> Option<u32> {
        match self {
            Candidate::Covered(i) | Candidate::Inserted(i) => Some(i),
            Candidate::Outside => None,
        }
    }
}

struct Around<'a> {
    pa: &'a Point,
    frame: &'a crate::hilbert_metric::FinslerFrame,
    window: crate::discretization::index::Window,
}

fn try_candidate(
    net: &mut Net,
    at: &Around,
    e: &[f64],
    r: f64,
    active: &mut VecDeque<u32>,
    opts: &NetOptions,
) -> Result<Candidate> {
    let eps = net.epsilon;
    let mut u = at.frame.apply(e);
    let nu = norm(&u);
    u.iter_mut().for_each(|x| *x /= nu);
    let ch = net.body.chord_params(at.pa, &u)?;
    let mut c = axpy(at.pa, radial_parameter(ch.t_minus, ch.t_plus, r), &u);
    let mut rho_c = distance(&net.body, &net.domain_center, &c)?;
    if rho_c > net.domain_radius {
        // pull the candidate back onto the domain sphere along its ray
        let mut v = crate::point::sub(&c, &net.domain_center);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        rho_c = net.domain_radius * (1.0 - 1e-12);
        let cd = net.body.chord_params(&net.domain_center, &v)?;
        c = axpy(&net.domain_center, radial_parameter(cd.t_minus, cd.t_plus, rho_c), &v);
        rho_c = distance(&net.body, &net.domain_center, &c)?;
    }
    if rho_c > net.domain_radius || !net.body.contains_unchecked(&c) {
        return Ok(Candidate::Outside);
    }
    let mut owner = None;
    let mut err = None;
    let (body, points) = (&net.body, &net.points);
    net.index.visit(rho_c - eps, rho_c + eps, at.window, |i| match distance(body, &c, &points[i as usize]) {
        Ok(d) => {
            if d < eps {
                owner = Some(i);
            }
            owner.is_none()
        }
        Err(e) => {
            err = Some(e);
            false
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if let Some(i) = owner {
        return Ok(Candidate::Covered(i));
    }
    let i = push_point(net, c, rho_c, opts)?;
    active.push_back(i);
    Ok(Candidate::Inserted(i))
}

/// Between two sweep angles owned by different points an uncovered sliver
/// can hide; bisect while the owners differ.
#[allow(clippy::too_many_arguments)]
fn refine(
    net: &mut Net,
    at: &Around,
    (lo, a): (f64, u32),
    (hi, b): (f64, u32),
    depth: u32,
    active: &mut VecDeque<u32>,
    opts: &NetOptions,
) -> Result<()> {
    if depth == 0 || a == b {
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    let r = net.epsilon * (1.0 + SWEEP_GAP);
    let Some(m) = try_candidate(net, at, &[mid.cos(), mid.sin()], r, active, opts)?.owner() else {
        return Ok(());
    };
    refine(net, at, (lo, a), (mid, m), depth - 1, active, opts)?;
    refine(net, at, (mid, m), (hi, b), depth - 1, active, opts)
}

fn grow(net: &mut Net, active: &mut VecDeque<u32>, rng: &mut ChaCha8Rng, opts: &NetOptions) -> Result<()> {
    let n = net.body.dim();
    let eps = net.epsilon;
    while let Some(a) = active.pop_front() {
        let pa = net.points[a as usize].clone();
        let rho_a = net.index.rho(a as usize);
        let frame = finsler_frame(&net.body, &pa)?;
        // candidates are within 2ε of pa, so their ε-neighbours are within 3ε
        let window = net.index.window(&net.body, &pa, rho_a, 3.0 * eps, &frame)?;
        let at = Around { pa: &pa, frame: &frame, window };
        if n == 2 {
            // the sphere just outside ε, at evenly spaced frame angles from a
            // random phase
            let psi0 = rng.gen::<f64>() * 2.0 * PI;
            let step = 2.0 * PI / SWEEP_ANGLES as f64;
            let r = eps * (1.0 + SWEEP_GAP);
            let mut first = None;
            let mut prev: Option<(f64, u32)> = None;
            for k in 0..=SWEEP_ANGLES {
                let psi = psi0 + step * k as f64;
                let owner = if k < SWEEP_ANGLES {
                    try_candidate(net, &at, &[psi.cos(), psi.sin()], r, active, opts)?.owner()
                } else {
                    first
                };
                if k == 0 {
                    first = owner;
                }
                if let (Some(p), Some(b)) = (prev, owner) {
                    refine(net, &at, p, (psi, b), SWEEP_REFINE, active, opts)?;
                }
                prev = owner.map(|b| (psi, b));
            }
        } else {
            // random directions and radii in [ε, 2ε] until `candidates`
            // consecutive failures
            let mut fails = 0;
            while fails < opts.candidates {
                let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
                let r = eps * (1.0 + rng.gen::<f64>());
                match try_candidate(net, &at, &e, r, active, opts)? {
                    Candidate::Inserted(_) => fails = 0,
                    _ => fails += 1,
                }
            }
        }
    }
    Ok(())
}

// -------------------------------------------------------------------- graphs

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Checks symmetry, sortedness and absence of loops and duplicates.
    pub fn from_adjacency(adj: Vec<Vec<u32>>) -> Result<Self> {
        let n = adj.len();
        for (i, nb) in adj.iter().enumerate() {
            for w in nb.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidParameter(format!("adjacency of {i} not strictly sorted")));
                }
            }
            for &j in nb {
                if j as usize >= n || j as usize == i {
                    return Err(Error::InvalidParameter(format!("bad neighbour {j} of {i}")));
                }
                if adj[j as usize].binary_search(&(i as u32)).is_err() {
                    return Err(Error::InvalidParameter(format!("edge {i}-{j} not symmetric")));
                }
            }
        }
        Ok(Graph { adj })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b as u32);
            adj[b].push(a as u32);
        }
        for nb in &mut adj {
            nb.sort_unstable();
            nb.dedup();
        }
        Ok(Graph { adj })
    }

    pub fn path(m: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..m).map(|i| (i - 1, i)).collect();
        Graph::from_edges(m, &edges).expect("valid path")
    }

    pub fn cycle(m: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..m).map(|i| (i, (i + 1) % m)).collect();
        Graph::from_edges(m, &edges).expect("valid cycle")
    }

    pub fn complete(m: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
        Graph::from_edges(m, &edges).expect("valid complete graph")
    }

    /// Ball of radius `depth` in the `degree`-regular tree, rooted at 0, in
    /// breadth-first order.
    pub fn regular_tree(degree: usize, depth: usize) -> Self {
        let mut edges = Vec::new();
        let mut frontier = vec![0usize];
        let mut count = 1;
        for level in 0..depth {
            let mut next = Vec::new();
            for &v in &frontier {
                let kids = if level == 0 { degree } else { degree - 1 };
                for _ in 0..kids {
                    edges.push((v, count));
                    next.push(count);
                    count += 1;
                }
            }
            frontier = next;
        }
        Graph::from_edges(count, &edges).expect("valid tree")
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(|a| a.len()).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// Hop counts from `src`; `u32::MAX` for unreachable vertices.
    pub fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.bfs(0).iter().all(|&d| d != u32::MAX)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph G {\n");
        for i in 0..self.len() {
            let _ = writeln!(s, "  {i};");
        }
        for (i, nb) in self.adj.iter().enumerate() {
            for &j in nb {
                if (j as usize) > i {
                    let _ = writeln!(s, "  {i} -- {j};");
                }
            }
        }
        s.push_str("}\n");
        s
    }

    /// One line per vertex: `i: j k l`.
    pub fn to_adjacency_text(&self) -> String {
        let mut s = String::new();
        for (i, nb) in self.adj.iter().enumerate() {
            let _ = write!(s, "{i}:");
            for j in nb {
                let _ = write!(s, " {j}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct DiscretizationGraph {
    pub net: Net,
    pub rho: f64,
    pub graph: Graph,
    /// Smallest distance between adjacent net points (the net's separation,
    /// since 3ρ ≥ ε).
    pub min_edge_distance: f64,
}

impl DiscretizationGraph {
    pub fn adjacency(&self) -> &[Vec<u32>] {
        self.graph.adjacency()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.graph.degrees()
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }
}

/// Default ρ: the covering estimate rounded up to ε.
pub fn default_rho(net: &Net) -> f64 {
    net.epsilon.max(net.covering_radius_est)
}

/// Joins net points at Hilbert distance ≤ 3ρ.
pub fn build_graph(net: Net, rho: f64) -> Result<DiscretizationGraph> {
    if !(rho.is_finite() && rho >= net.covering_radius_est && rho > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rho = {rho} is below the covering estimate {}",
            net.covering_radius_est
        )));
    }
    let r = 3.0 * rho;
    let rows: Vec<Result<(Vec<u32>, f64)>> = (0..net.len())
        .into_par_iter()
        .map(|i| {
            let p = &net.points[i];
            let rho_p = net.index.rho(i);
            let frame = finsler_frame(&net.body, p)?;
            let window = net.index.window(&net.body, p, rho_p, r, &frame)?;
            let found = net.index.within_window(&net.body, &net.points, p, rho_p, r, window)?;
            let mut min_d = f64::INFINITY;
            let mut nb = Vec::with_capacity(found.len());
            for (j, d) in found {
                if j as usize != i {
                    nb.push(j);
                    min_d = min_d.min(d);
                }
            }
            Ok((nb, min_d))
        })
        .collect();
    let mut adj = Vec::with_capacity(net.len());
    let mut min_edge_distance = f64::INFINITY;
    for row in rows {
        let (nb, d) = row?;
        min_edge_distance = min_edge_distance.min(d);
        adj.push(nb);
    }
    let graph = Graph::from_adjacency(adj)?;
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(DiscretizationGraph { net, rho, graph, min_edge_distance })
}

/// Hop distance between two vertices.
pub fn graph_distance(graph: &Graph, i: usize, j: usize) -> Result<u32> {
    if i >= graph.len() || j >= graph.len() {
        return Err(Error::InvalidParameter("vertex index out of range".into()));
    }
    if i == j {
        return Ok(0);
    }
    let d = graph.bfs(i)[j];
    if d == u32::MAX {
        return Err(Error::Disconnected);
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsometryReport {
    /// Smallest a with d_C ≤ a·d_G on the sample.
    pub a_lower: f64,
    /// Slope and intercept with d_G ≤ a_upper·d_C + b on the sample.
    pub a_upper: f64,
    pub b: f64,
    pub pairs: usize,
    /// max d_C / (ρ d_G); at most 1 by the triangle inequality.
    pub max_rho_ratio: f64,
}

/// Samples vertex pairs and reports the distortion constants between hop
/// distance and Hilbert distance.
pub fn quasi_isometry_report(dg: &DiscretizationGraph, n_pairs: usize, seed: u64) -> Result<QuasiIsometryReport> {
    if n_pairs < 10 {
        return Err(Error::InvalidParameter("need at least 10 pairs".into()));
    }
    let n = dg.len();
    if n == 1 {
        return Ok(QuasiIsometryReport { a_lower: 1.0, a_upper: 1.0, b: 0.0, pairs: 0, max_rho_ratio: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = n_pairs.min(20);
    let mut pairs = Vec::with_capacity(n_pairs);
    for s in 0..sources {
        let i = rng.gen_range(0..n);
        let hops = dg.graph.bfs(i);
        let count = n_pairs / sources + usize::from(s < n_pairs % sources);
        for _ in 0..count {
            let mut j = rng.gen_range(0..n);
            if j == i {
                j = (j + 1) % n;
            }
            let dc = distance(&dg.net.body, &dg.net.points[i], &dg.net.points[j])?;
            pairs.push((dc, hops[j] as f64));
        }
    }
    let a_lower = pairs.iter().map(|(dc, dg)| dc / dg).fold(0.0, f64::max);
    let max_rho_ratio = a_lower / dg.rho;
    let far: Vec<&(f64, f64)> = pairs.iter().filter(|(dc, _)| *dc >= 1.0).collect();
    let a_upper = if far.is_empty() { 1.0 } else { far.iter().map(|(dc, dg)| dg / dc).fold(0.0, f64::max) };
    let b = pairs.iter().map(|(dc, dg)| dg - a_upper * dc).fold(0.0, f64::max);
    Ok(QuasiIsometryReport { a_lower, a_upper, b, pairs: pairs.len(), max_rho_ratio })
}

/// Upper bound on the number of points of an ε-separated set in a ball of
/// radius r: `e^{nε} 2^n ((e^{8r+2ε}-1)(e^{ε+2}-1)/(e^ε-1))^n`, in log form.
pub fn log_cardinality_bound(n: usize, epsilon: f64, r: f64) -> f64 {
    let nf = n as f64;
    nf * epsilon
        + nf * 2f64.ln()
        + nf * ((8.0 * r + 2.0 * epsilon).exp_m1().ln() + (epsilon + 2.0).exp_m1().ln() - epsilon.exp_m1().ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardinalityCheck {
    pub count: usize,
    pub log_bound: f64,
    pub satisfied: bool,
}

pub fn cardinality_bound_check(net: &Net, x: &[f64], r: f64) -> Result<CardinalityCheck> {
    if !net.body.contains(x)? {
        return Err(Error::NotInterior);
    }
    let count = net.within(x, r)?.len();
    let log_bound = log_cardinality_bound(net.body.dim(), net.epsilon, r);
    Ok(CardinalityCheck { count, log_bound, satisfied: count == 0 || (count as f64).ln() <= log_bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetCertificate {
    pub points: usize,
    pub min_separation: f64,
    pub separation_ok: bool,
    pub probes: usize,
    pub max_probe_distance: f64,
    pub covering_ok: bool,
    pub connected: bool,
    pub max_degree: usize,
    pub log_degree_bound: f64,
    pub degree_ok: bool,
    pub cardinality_checks: usize,
    pub cardinality_ok: bool,
}

impl NetCertificate {
    pub fn passed(&self) -> bool {
        self.separation_ok && self.covering_ok && self.connected && self.degree_ok && self.cardinality_ok
    }
}

/// Separation, covering on fresh probes, connectivity, degree bound and
/// cardinality bound on random balls.
pub fn certify(dg: &DiscretizationGraph, probes: usize, seed: u64) -> Result<NetCertificate> {
    let net = &dg.net;
    let eps = net.epsilon;
    let mut max_probe: f64 = 0.0;
    let mut covering_ok = true;
    if net.domain_radius > 0.0 {
        let sampler = BallSampler::new(&net.body, &net.domain_center, net.domain_radius, INTEGRAND_VOLUME)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point> = (0..probes).map(|_| sampler.sample_position(&mut rng)).collect::<Result<_>>()?;
        let found: Vec<Result<Option<(u32, f64)>>> = pts.par_iter().map(|x| net.nearest_within(x, eps + 1e-6)).collect();
        for f in found {
            match f? {
                Some((_, d)) => max_probe = max_probe.max(d),
                None => covering_ok = false,
            }
        }
    }
    let max_degree = dg.degrees().into_iter().max().unwrap_or(0);
    let log_degree_bound = log_cardinality_bound(net.body.dim(), eps, 3.0 * dg.rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut cardinality_ok = true;
    let checks = 200;
    for _ in 0..checks {
        let i = rng.gen_range(0..net.len());
        let r = rng.gen_range(0.0..(net.domain_radius + eps).max(eps));
        cardinality_ok &= cardinality_bound_check(net, &net.points[i], r)?.satisfied;
    }
    let min_separation = dg.min_edge_distance;
    Ok(NetCertificate {
        points: net.len(),
        min_separation,
        separation_ok: min_separation >= eps - 1e-9,
        probes,
        max_probe_distance: max_probe,
        covering_ok: covering_ok && max_probe <= eps + 1e-6,
        connected: dg.graph.is_connected(),
        max_degree,
        log_degree_bound,
        degree_ok: (max_degree as f64).ln() <= log_degree_bound,
        cardinality_checks: checks,
        cardinality_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> ConvexBody {
        ConvexBody::polygon(&[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(0.0, 1.0)]).unwrap()
    }

    const C: [f64; 2] = [1.0 / 3.0, 1.0 / 3.0];

    #[test]
    fn tiny_domain_gives_single_point() {
        let net = build_net(&tri(), &C, 0.3, 0.5, 1).unwrap();
        assert_eq!(net.len(), 1);
        assert!(net.covering_radius_est <= 0.3 + 1e-9);
        let g = build_graph(net, 0.5).unwrap();
        assert_eq!(g.graph.edge_count(), 0);
        assert_eq!(quasi_isometry_report(&g, 10, 1).unwrap().a_lower, 1.0);
    }

    fn brute_within(net: &Net, q: &[f64], r: f64) -> Vec<u32> {
        (0..net.len() as u32).filter(|&i| distance(&net.body, q, &net.points[i as usize]).unwrap() <= r).collect()
    }

    #[test]
    fn index_matches_brute_force() {
        let bodies = [
            tri(),
            ConvexBody::ball(2).unwrap(),
            ConvexBody::superellipse(4.0, 1.1).unwrap(),
            ConvexBody::regular_polygon(6, 1.0).unwrap(),
        ];
        for (b, body) in bodies.iter().enumerate() {
            let x0 = if b == 0 { C.to_vec() } else { vec![0.0, 0.0] };
            let net = build_net_with(&body, &x0, 4.0, 0.5, 3, NetOptions { probes: 500, ..Default::default() }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let sampler = BallSampler::new(&body, &x0, 4.0, INTEGRAND_VOLUME).unwrap();
            for k in 0..160 {
                let q = if k % 2 == 0 {
                    net.points[rng.gen_range(0..net.len())].clone()
                } else {
                    sampler.sample_position(&mut rng).unwrap()
                };
                let r = [0.5, 1.5, 3.0, 4.5][k % 4];
                let got: Vec<u32> = net.within(&q, r).unwrap().into_iter().map(|p| p.0).collect();
                assert_eq!(got, brute_within(&net, &q, r), "body {b}");
            }
        }
    }

    #[test]
    fn net_is_separated_and_graph_connected() {
        let net = build_net_with(&tri(), &C, 5.0, 0.5, 7, NetOptions::default()).unwrap();
        for i in 0..net.len() {
            for j in 0..i {
                assert!(distance(&net.body, &net.points[i], &net.points[j]).unwrap() >= 0.5);
            }
            assert!(net.radius_of(i) <= 5.0);
        }
        assert!(net.covering_radius_est <= 0.5);
        let g = build_graph(net, 0.5).unwrap();
        let cert = certify(&g, 2000, 11).unwrap();
        assert!(cert.passed(), "{cert:?}");
        let q = quasi_isometry_report(&g, 100, 3).unwrap();
        assert!(q.max_rho_ratio <= 3.0 + 1e-9, "{q:?}");
    }

    #[test]
    fn graph_rejects_small_rho() {
        let net = build_net_with(&tri(), &C, 3.0, 0.5, 7, NetOptions { probes: 500, ..Default::default() }).unwrap();
        let cov = net.covering_radius_est;
        assert!(build_graph(net, 0.5 * cov).is_err());
    }

    #[test]
    fn graph_constructors() {
        let t = Graph::regular_tree(3, 3);
        assert_eq!(t.len(), 1 + 3 + 6 + 12);
        assert!(t.is_connected());
        assert_eq!(Graph::cycle(12).degrees(), vec![2; 12]);
        assert_eq!(graph_distance(&Graph::path(5), 0, 4).unwrap(), 4);
        assert!(Graph::from_adjacency(vec![vec![1], vec![]]).is_err());
        assert!(Graph::path(3).to_dot().contains("1 -- 2"));
    }

    #[test]
    fn net_is_deterministic() {
        let a = build_net_with(&tri(), &C, 3.0, 0.5, 5, NetOptions { probes: 300, ..Default::default() }).unwrap();
        let b = build_net_with(&tri(), &C, 3.0, 0.5, 5, NetOptions { probes: 300, ..Default::default() }).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
