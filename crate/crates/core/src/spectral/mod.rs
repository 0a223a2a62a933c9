//! Simple random walks on discretisation graphs: Dirichlet spectral
//! radius, return probabilities, graph Cheeger constants, Rayleigh
//! quotients of the continuum Laplacian, smoothing, and the amenability
//! verdict that combines them.

pub mod cheeger;
mod lanczos;
pub mod rayleigh;
pub mod smoothing;
pub mod verdict;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::Graph;
use crate::error::{Error, Result};

pub use cheeger::{cheeger_graph_exact, cheeger_graph_sweep, inverse_cheeger_check, CheegerValue, InverseCheegerReport};
pub use rayleigh::{lambda1_upper_estimate, rayleigh_quotient, Gradient, RayleighOptions, RayleighReport, RayleighValue};
pub use smoothing::{smoothing, Smoothing};
pub use verdict::{amenability_verdict, Verdict, VerdictConfig, VerdictReport};

/// Tolerance on the eigen-residual of the lazy operator.
pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 100_000;

/// Walk operator `(Th)(x) = deg(x)⁻¹ Σ_{y~x} h(y)` on a graph, killed on a
/// Dirichlet vertex set. Interior vectors are indexed by position in
/// [`MarkovSystem::interior`].
#[derive(Clone, Debug)]
pub struct MarkovSystem<'a> {
    graph: &'a Graph,
    dirichlet: Vec<bool>,
    interior: Vec<u32>,
    local: Vec<u32>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    /// `1 / sqrt(deg_i deg_j)`: the symmetric similar matrix `D^{1/2} T D^{-1/2}`.
    vals: Vec<f64>,
    degrees: Vec<f64>,
}

impl<'a> MarkovSystem<'a> {
    /// `dirichlet` lists absorbing vertices (possibly none).
    pub fn new(graph: &'a Graph, dirichlet: &[usize]) -> Result<Self> {
        let mut mask = vec![false; graph.len()];
        for &d in dirichlet {
            if d >= graph.len() {
                return Err(Error::InvalidParameter(format!("Dirichlet vertex {d} out of range")));
            }
            mask[d] = true;
        }
        Self::from_mask(graph, mask)
    }

    pub fn from_mask(graph: &'a Graph, dirichlet: Vec<bool>) -> Result<Self> {
        if dirichlet.len() != graph.len() {
            return Err(Error::InvalidParameter("Dirichlet mask has the wrong length".into()));
        }
        let interior: Vec<u32> = (0..graph.len() as u32).filter(|&i| !dirichlet[i as usize]).collect();
        if interior.is_empty() {
            return Err(Error::InvalidParameter("no interior vertices".into()));
        }
        let mut local = vec![u32::MAX; graph.len()];
        for (k, &i) in interior.iter().enumerate() {
            local[i as usize] = k as u32;
        }
        let mut row_ptr = Vec::with_capacity(interior.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut degrees = Vec::with_capacity(interior.len());
        row_ptr.push(0);
        for &i in &interior {
            let di = graph.degree(i as usize);
            if di == 0 && graph.len() > 1 {
                return Err(Error::InvalidParameter(format!("interior vertex {i} has no neighbour")));
            }
            degrees.push(di.max(1) as f64);
            for &j in graph.neighbors(i as usize) {
                let lj = local[j as usize];
                if lj != u32::MAX {
                    cols.push(lj);
                    vals.push(1.0 / ((di * graph.degree(j as usize)) as f64).sqrt());
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(MarkovSystem { graph, dirichlet, interior, local, row_ptr, cols, vals, degrees })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.dirichlet[v]
    }

    pub fn has_dirichlet(&self) -> bool {
        self.dirichlet.iter().any(|&d| d)
    }

    /// Local (interior) index of a graph vertex.
    pub fn local_index(&self, v: usize) -> Option<usize> {
        let l = self.local[v];
        (l != u32::MAX).then_some(l as usize)
    }

    /// Degrees (in the whole graph) of the interior vertices.
    pub fn degree_weights(&self) -> &[f64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    /// `y = D^{1/2} T D^{-1/2} x` on the interior.
    pub fn apply_symmetric(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(1024).enumerate().for_each(|(c, out)| {
            for (k, o) in out.iter_mut().enumerate() {
                let i = c * 1024 + k;
                let mut s = 0.0;
                for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.vals[e] * x[self.cols[e] as usize];
                }
                *o = s;
            }
        });
    }

    /// `y = ½(x + D^{1/2} T D^{-1/2} x)`.
    pub fn apply_lazy(&self, x: &[f64], y: &mut [f64]) {
        self.apply_symmetric(x, y);
        y.iter_mut().zip(x).for_each(|(a, b)| *a = 0.5 * (*a + b));
    }

    /// `y = T x` (killed walk) on the interior.
    pub fn apply_walk(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(1024).enumerate().for_each(|(c, out)| {
            for (k, o) in out.iter_mut().enumerate() {
                let i = c * 1024 + k;
                let mut s = 0.0;
                for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += x[self.cols[e] as usize];
                }
                *o = s / self.degrees[i];
            }
        });
    }

    /// Dense symmetric matrix `D^{1/2} T D^{-1/2}` (small systems).
    pub fn dense_symmetric(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[e] as usize)] = self.vals[e];
            }
        }
        m
    }

    /// `D^{1/2} 1`, normalised: the top eigenvector when there is no
    /// Dirichlet set.
    pub fn stationary_direction(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.degrees.iter().map(|d| d.sqrt()).collect();
        let n = lanczos::dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Krylov iteration on the lazy operator.
    LanczosLazy,
    PowerLazy,
    Dense,
    ReturnProbability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub rho: f64,
    pub iterations: usize,
    /// `‖Lx - θx‖` for the unit Ritz vector of the lazy operator L.
    pub residual: f64,
    pub method: SpectralMethod,
    pub converged: bool,
    pub interior: usize,
}

/// Below this size the operator is diagonalised densely.
const DENSE_LIMIT: usize = 300;

/// Spectral radius of the killed walk: top eigenvalue θ of the lazy
/// operator ½(I + T) on the interior (self-adjoint in the degree inner
/// product), reported as ρ = 2θ - 1.
pub fn spectral_radius(system: &MarkovSystem, tol: f64, max_iter: usize) -> Result<SpectralReport> {
    let n = system.len();
    if n <= DENSE_LIMIT {
        let eig = system.dense_symmetric().symmetric_eigen();
        let (k, &top) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("nonempty");
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().cloned().collect();
        let theta = 0.5 * (1.0 + top);
        let mut y = vec![0.0; n];
        system.apply_lazy(&v, &mut y);
        let residual = y.iter().zip(&v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        return Ok(SpectralReport {
            rho: 2.0 * theta - 1.0,
            iterations: 0,
            residual,
            method: SpectralMethod::Dense,
            converged: residual <= tol.max(1e-13),
            interior: n,
        });
    }
    let start: Vec<f64> = system.degree_weights().iter().map(|d| d.sqrt()).collect();
    let op = |x: &[f64], y: &mut [f64]| system.apply_lazy(x, y);
    let r = lanczos::lanczos_top(n, &op, &start, None, tol, max_iter);
    Ok(SpectralReport {
        rho: 2.0 * r.theta - 1.0,
        iterations: r.iterations,
        residual: r.residual,
        method: SpectralMethod::LanczosLazy,
        converged: r.converged,
        interior: n,
    })
}

/// Plain power iteration on the lazy operator, from `D^{1/2} 1`.
pub fn spectral_radius_power(system: &MarkovSystem, tol: f64, max_iter: usize) -> Result<SpectralReport> {
    let n = system.len();
    let mut x: Vec<f64> = system.degree_weights().iter().map(|d| d.sqrt()).collect();
    let nx = lanczos::dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut theta = 0.0;
    let mut residual = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        system.apply_lazy(&x, &mut y);
        it += 1;
        theta = lanczos::dot(&x, &y);
        residual = y.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        if residual <= tol {
            break;
        }
        let ny = lanczos::dot(&y, &y).sqrt();
        if ny == 0.0 {
            break;
        }
        x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / ny);
    }
    Ok(SpectralReport {
        rho: 2.0 * theta - 1.0,
        iterations: it,
        residual,
        method: SpectralMethod::PowerLazy,
        converged: residual <= tol,
        interior: n,
    })
}

/// Second largest eigenvalue of T (no Dirichlet set): the top eigenvalue
/// on the complement of the stationary direction.
pub fn second_eigenvalue(system: &MarkovSystem, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>, bool)> {
    let n = system.len();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two vertices".into()));
    }
    if n <= 2000 {
        let eig = system.dense_symmetric().symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap().then(a.cmp(&b)));
        let k = idx[1];
        return Ok((eig.eigenvalues[k], eig.eigenvectors.column(k).iter().cloned().collect(), true));
    }
    let u = system.stationary_direction();
    let start: Vec<f64> = (0..n).map(|i| ((i * 2654435761usize) % 1000) as f64 / 1000.0 - 0.5).collect();
    let op = |x: &[f64], y: &mut [f64]| system.apply_lazy(x, y);
    let r = lanczos::lanczos_top(n, &op, &start, Some(&u), tol, max_iter);
    Ok((2.0 * r.theta - 1.0, r.vector, r.converged))
}

/// Top eigenvector of the symmetric operator on the interior (Dirichlet
/// case), dense or Krylov.
pub(crate) fn top_eigenvector(system: &MarkovSystem, tol: f64, max_iter: usize) -> (f64, Vec<f64>) {
    let n = system.len();
    if n <= 2000 {
        let eig = system.dense_symmetric().symmetric_eigen();
        let (k, &top) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .expect("nonempty");
        return (top, eig.eigenvectors.column(k).iter().cloned().collect());
    }
    let start: Vec<f64> = system.degree_weights().iter().map(|d| d.sqrt()).collect();
    let op = |x: &[f64], y: &mut [f64]| system.apply_lazy(x, y);
    let r = lanczos::lanczos_top(n, &op, &start, None, tol, max_iter);
    (2.0 * r.theta - 1.0, r.vector)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnProbability {
    /// `p^{(2k)}(x,x)^{1/(2k)}` at the largest even step.
    pub rho: f64,
    pub steps: usize,
    /// `(n, p^{(n)}(x,x)^{1/n})` at n = 2, 4, 8, … and the final step.
    pub sequence: Vec<(usize, f64)>,
}

/// Return probabilities of the killed (non-lazy) walk started at vertex
/// `x`.
pub fn return_probability_rho(system: &MarkovSystem, steps: usize, x: usize) -> Result<ReturnProbability> {
    if steps < 10 {
        return Err(Error::InvalidParameter("need at least 10 steps".into()));
    }
    let lx = system
        .local_index(x)
        .ok_or_else(|| Error::InvalidParameter(format!("vertex {x} is not interior")))?;
    let n = system.len();
    let last = steps - steps % 2;
    let mut v = vec![0.0; n];
    v[lx] = 1.0;
    let mut w = vec![0.0; n];
    let mut sequence = Vec::new();
    let mut next = 2;
    let mut rho = 0.0;
    // v is kept rescaled; the true vector is v·e^{log_scale}
    let mut log_scale = 0.0;
    for step in 1..=last {
        system.apply_walk(&v, &mut w);
        std::mem::swap(&mut v, &mut w);
        let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if m > 0.0 && m < 1e-100 {
            v.iter_mut().for_each(|x| *x /= m);
            log_scale += m.ln();
        }
        if step == next || step == last {
            let p = v[lx].max(0.0);
            let r = if p > 0.0 { ((p.ln() + log_scale) / step as f64).exp() } else { 0.0 };
            sequence.push((step, r));
            rho = r;
            if step == next {
                next *= 2;
            }
        }
    }
    Ok(ReturnProbability { rho, steps: last, sequence })
}

/// Vertices of a discretisation graph farther than `radius` from the net
/// centre (the Dirichlet set of the ball truncation).
pub fn ball_dirichlet_mask(dg: &crate::discretization::DiscretizationGraph, radius: f64) -> Vec<bool> {
    (0..dg.len()).map(|i| dg.net.radius_of(i) > radius).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dirichlet_path_oracle() {
        for m in [3usize, 10, 50] {
            let g = Graph::path(m + 2);
            let sys = MarkovSystem::new(&g, &[0, m + 1]).unwrap();
            let r = spectral_radius(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
            let exact = (PI / (m as f64 + 1.0)).cos();
            assert!((r.rho - exact).abs() < 1e-8, "{m}: {r:?}");
            let p = spectral_radius_power(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
            assert!((p.rho - exact).abs() < 1e-8, "{m}: {p:?}");
        }
    }

    #[test]
    fn large_path_uses_krylov() {
        let m = 2000;
        let g = Graph::path(m + 2);
        let sys = MarkovSystem::new(&g, &[0, m + 1]).unwrap();
        let r = spectral_radius(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert_eq!(r.method, SpectralMethod::LanczosLazy);
        assert!(r.converged, "{r:?}");
        assert!((r.rho - (PI / (m as f64 + 1.0)).cos()).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn single_interior_vertex_dies() {
        let g = Graph::complete(4);
        let sys = MarkovSystem::new(&g, &[1, 2, 3]).unwrap();
        let r = spectral_radius(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!(r.rho.abs() < 1e-15);
    }

    #[test]
    fn return_probability_increases_to_rho() {
        let g = Graph::path(5);
        let sys = MarkovSystem::new(&g, &[0, 4]).unwrap();
        let r = return_probability_rho(&sys, 4000, 2).unwrap();
        for w in r.sequence.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-15);
        }
        assert!((r.rho - 0.5f64.sqrt()).abs() < 1e-3);
        assert!(r.rho <= 0.5f64.sqrt() + 1e-12);
    }

    #[test]
    fn symmetric_operator_is_symmetric() {
        let g = Graph::regular_tree(3, 3);
        let sys = MarkovSystem::new(&g, &[]).unwrap();
        let m = sys.dense_symmetric();
        assert!((&m - m.transpose()).amax() < 1e-15);
        let (l2, _, _) = second_eigenvalue(&sys, 1e-12, 10_000).unwrap();
        assert!(l2 < 1.0);
    }
}
