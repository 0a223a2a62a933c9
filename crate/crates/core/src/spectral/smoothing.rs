//! Smoothing of vertex functions into functions on the body with a
//! partition of unity subordinate to the balls B(ξ, 2ρ).

use crate::discretization::DiscretizationGraph;
use crate::error::{Error, Result};

/// `(Sf)(x) = Σ_ξ φ_ξ(x) f(ξ)` with `φ_ξ = b_ξ / Σ_η b_η` and
/// `b_ξ(x) = max(0, 1 - d(x, ξ)/(2ρ))²`.
pub struct Smoothing<'a> {
    graph: &'a DiscretizationGraph,
    values: Vec<f64>,
}

pub fn smoothing<'a>(graph: &'a DiscretizationGraph, f: &[f64]) -> Result<Smoothing<'a>> {
    if f.len() != graph.len() {
        return Err(Error::InvalidParameter(format!("{} values for {} vertices", f.len(), graph.len())));
    }
    Ok(Smoothing { graph, values: f.to_vec() })
}

impl Smoothing<'_> {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let r = 2.0 * self.graph.rho;
        let near = self.graph.net.within(x, r)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, d) in near {
            let b = (1.0 - d / r).max(0.0).powi(2);
            num += b * self.values[i as usize];
            den += b;
        }
        if den == 0.0 {
            return Err(Error::InvalidParameter("point not covered by the net".into()));
        }
        Ok(num / den)
    }

    /// `⟨(1 - T) f, f⟩ / ‖f‖²` in the degree inner product.
    pub fn graph_dirichlet_ratio(&self) -> f64 {
        let g = &self.graph.graph;
        let f = &self.values;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..g.len() {
            let d = g.degree(i) as f64;
            let tf = if d > 0.0 { g.neighbors(i).iter().map(|&j| f[j as usize]).sum::<f64>() / d } else { 0.0 };
            num += d * (f[i] - tf) * f[i];
            den += d * f[i] * f[i];
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_body::ConvexBody;
    use crate::discretization::{build_graph, build_net_with, NetOptions};
    use crate::hilbert_metric::distance;

    #[test]
    fn partition_of_unity_and_support() {
        let disk = ConvexBody::ball(2).unwrap();
        let net = build_net_with(&disk, &[0.0, 0.0], 3.0, 0.5, 2, NetOptions { probes: 500, ..Default::default() }).unwrap();
        let g = build_graph(net, 0.5).unwrap();
        let ones = vec![1.0; g.len()];
        let s = smoothing(&g, &ones).unwrap();
        for x in [[0.1, 0.2], [0.5, -0.3], [-0.7, 0.1]] {
            assert!((s.eval(&x).unwrap() - 1.0).abs() < 1e-14);
        }
        let mut ind = vec![0.0; g.len()];
        ind[5] = 1.0;
        let s = smoothing(&g, &ind).unwrap();
        for x in [[0.1, 0.2], [0.5, -0.3], [-0.7, 0.1], [0.0, 0.0]] {
            if distance(&disk, &x, &g.net.points[5]).unwrap() > 1.0 {
                assert_eq!(s.eval(&x).unwrap(), 0.0);
            }
        }
        assert!(s.graph_dirichlet_ratio() > 0.0);
    }
}
