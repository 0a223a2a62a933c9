//! Graph Cheeger constants with exterior vertex boundary,
//! `min |∂F| / |F|` over interior sets with |F| ≤ |interior| / 2.

use serde::{Deserialize, Serialize};

use super::{second_eigenvalue, spectral_radius, top_eigenvector, MarkovSystem, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
use crate::discretization::Graph;
use crate::error::{Error, Result};

pub const EXACT_LIMIT: usize = 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerValue {
    pub boundary: usize,
    pub size: usize,
    pub value: f64,
    /// The minimising set (graph vertex ids, sorted).
    pub set: Vec<u32>,
}

impl CheegerValue {
    fn better_than(&self, b: usize, s: usize) -> bool {
        // b/s < boundary/size, exactly
        b * self.size < self.boundary * s
    }
}

fn interior_of(graph: &Graph, dirichlet: &[usize]) -> Result<(Vec<bool>, Vec<usize>)> {
    let mut mask = vec![false; graph.len()];
    for &d in dirichlet {
        if d >= graph.len() {
            return Err(Error::InvalidParameter(format!("Dirichlet vertex {d} out of range")));
        }
        mask[d] = true;
    }
    let interior: Vec<usize> = (0..graph.len()).filter(|&v| !mask[v]).collect();
    if interior.is_empty() {
        return Err(Error::InvalidParameter("no interior vertices".into()));
    }
    Ok((mask, interior))
}

fn size_cap(k: usize) -> usize {
    (k / 2).max(1)
}

/// Exhaustive minimum over interior subsets (at most 22 interior vertices).
pub fn cheeger_graph_exact(graph: &Graph, dirichlet: &[usize]) -> Result<CheegerValue> {
    let (_, interior) = interior_of(graph, dirichlet)?;
    let k = interior.len();
    if k > EXACT_LIMIT {
        return Err(Error::TooLarge(format!("{k} interior vertices (limit {EXACT_LIMIT})")));
    }
    // relevant vertices: interior first, then their outside neighbours
    let mut pos = vec![usize::MAX; graph.len()];
    let mut relevant = interior.clone();
    for (p, &v) in interior.iter().enumerate() {
        pos[v] = p;
    }
    for &v in &interior {
        for &w in graph.neighbors(v) {
            if pos[w as usize] == usize::MAX {
                pos[w as usize] = relevant.len();
                relevant.push(w as usize);
            }
        }
    }
    let words = relevant.len().div_ceil(64);
    let nb: Vec<Vec<u64>> = interior
        .iter()
        .map(|&v| {
            let mut m = vec![0u64; words];
            for &w in graph.neighbors(v) {
                let p = pos[w as usize];
                m[p / 64] |= 1 << (p % 64);
            }
            m
        })
        .collect();
    // neighbourhood unions of the low and high halves of a mask
    let lo_bits = k / 2;
    let hi_bits = k - lo_bits;
    let table = |offset: usize, bits: usize| {
        let mut t = vec![vec![0u64; words]; 1 << bits];
        for m in 1usize..(1 << bits) {
            let low = m.trailing_zeros() as usize;
            let prev = m & (m - 1);
            let row: Vec<u64> = t[prev].iter().zip(&nb[offset + low]).map(|(a, b)| a | b).collect();
            t[m] = row;
        }
        t
    };
    let lo_t = table(0, lo_bits);
    let hi_t = table(lo_bits, hi_bits);
    let cap = size_cap(k);
    let mut best: Option<(usize, usize, u64)> = None;
    for mask in 1u64..(1u64 << k) {
        let size = mask.count_ones() as usize;
        if size > cap {
            continue;
        }
        let a = &lo_t[(mask as usize) & ((1 << lo_bits) - 1)];
        let b = &hi_t[(mask as usize) >> lo_bits];
        let mut boundary = 0usize;
        for w in 0..words {
            let mut u = a[w] | b[w];
            if w == 0 {
                u &= !mask;
            }
            boundary += u.count_ones() as usize;
        }
        let better = match best {
            None => true,
            Some((bb, bs, _)) => boundary * bs < bb * size,
        };
        if better {
            best = Some((boundary, size, mask));
        }
    }
    let (boundary, size, mask) = best.expect("at least one subset");
    let mut set: Vec<u32> = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| interior[i] as u32).collect();
    set.sort_unstable();
    Ok(CheegerValue { boundary, size, value: boundary as f64 / size as f64, set })
}

/// Best prefix of a vertex ordering, with the boundary maintained
/// incrementally.
fn sweep_order(graph: &Graph, order: &[usize], cap: usize) -> CheegerValue {
    let mut in_f = vec![false; graph.len()];
    let mut touch = vec![0u32; graph.len()];
    let mut boundary = 0usize;
    let mut best = CheegerValue { boundary: usize::MAX, size: 1, value: f64::INFINITY, set: Vec::new() };
    let mut best_len = 0;
    for (s, &v) in order.iter().take(cap).enumerate() {
        if touch[v] > 0 {
            boundary -= 1;
        }
        in_f[v] = true;
        for &w in graph.neighbors(v) {
            let w = w as usize;
            if !in_f[w] && touch[w] == 0 {
                boundary += 1;
            }
            touch[w] += 1;
        }
        let size = s + 1;
        if best.boundary == usize::MAX || best.better_than(boundary, size) {
            best.boundary = boundary;
            best.size = size;
            best_len = size;
        }
    }
    best.value = best.boundary as f64 / best.size as f64;
    let mut set: Vec<u32> = order[..best_len].iter().map(|&v| v as u32).collect();
    set.sort_unstable();
    best.set = set;
    best
}

/// Upper bound by sweeping level sets of an eigenvector: the top Dirichlet
/// eigenvector with a Dirichlet set, the second eigenvector otherwise;
/// both orientations.
pub fn cheeger_graph_sweep(graph: &Graph, dirichlet: &[usize]) -> Result<CheegerValue> {
    let (_, interior) = interior_of(graph, dirichlet)?;
    let sys = MarkovSystem::new(graph, dirichlet)?;
    let sub_connected = {
        // the interior must be connected in the induced graph
        let mut seen = vec![false; graph.len()];
        let mut stack = vec![interior[0]];
        seen[interior[0]] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &w in graph.neighbors(v) {
                let w = w as usize;
                if !seen[w] && sys.local_index(w).is_some() {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        count == interior.len()
    };
    if !sub_connected {
        return Err(Error::Disconnected);
    }
    let k = interior.len();
    let cap = size_cap(k);
    if k == 1 {
        return Ok(sweep_order(graph, &interior, 1));
    }
    let vec = if sys.has_dirichlet() {
        top_eigenvector(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER).1
    } else {
        second_eigenvalue(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?.1
    };
    // eigenvector of T: D^{-1/2} x
    let f: Vec<f64> = vec.iter().zip(sys.degree_weights()).map(|(x, d)| x / d.sqrt()).collect();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap().then(a.cmp(&b)));
    let desc: Vec<usize> = idx.iter().map(|&i| interior[i]).collect();
    let asc: Vec<usize> = desc.iter().rev().cloned().collect();
    let a = sweep_order(graph, &desc, cap);
    let b = sweep_order(graph, &asc, cap);
    Ok(if b.better_than(a.boundary, a.size) { a } else if a.better_than(b.boundary, b.size) { b } else { a })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseCheegerReport {
    pub degree: usize,
    pub interior: usize,
    pub cheeger: f64,
    /// Whether the Cheeger value is exact (otherwise a sweep upper bound).
    pub exact: bool,
    /// Dirichlet spectral radius, or the second eigenvalue of T without a
    /// Dirichlet set.
    pub rho: f64,
    /// `4 (1 - ρ) / ρ`.
    pub bound: f64,
    pub holds: bool,
    pub caveat: String,
}

/// Checks `I ≥ 4(1-ρ)/ρ` for a graph whose interior vertices all have the
/// same degree.
pub fn inverse_cheeger_check(graph: &Graph, dirichlet: &[usize]) -> Result<InverseCheegerReport> {
    let (_, interior) = interior_of(graph, dirichlet)?;
    let degree = graph.degree(interior[0]);
    if degree < 2 || interior.iter().any(|&v| graph.degree(v) != degree) {
        return Err(Error::InvalidParameter("interior vertices must share a degree ≥ 2".into()));
    }
    let sys = MarkovSystem::new(graph, dirichlet)?;
    let rho = if sys.has_dirichlet() {
        spectral_radius(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?.rho
    } else {
        second_eigenvalue(&sys, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?.0
    };
    let exact = interior.len() <= EXACT_LIMIT;
    let cheeger = if exact { cheeger_graph_exact(graph, dirichlet)? } else { cheeger_graph_sweep(graph, dirichlet)? }.value;
    let bound = if rho > 0.0 { 4.0 * (1.0 - rho) / rho } else { f64::INFINITY };
    let mut caveat = String::from("finite truncation with |F| ≤ |interior|/2");
    if !sys.has_dirichlet() {
        caveat.push_str("; no Dirichlet set, ρ is the second eigenvalue of T");
    }
    if !exact {
        caveat.push_str("; Cheeger value is a sweep upper bound, so the comparison is not conclusive");
    }
    Ok(InverseCheegerReport { degree, interior: interior.len(), cheeger, exact, rho, bound, holds: cheeger >= bound, caveat })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_and_single_vertex() {
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        // two leaves share the centre as boundary
        assert_eq!(cheeger_graph_exact(&star, &[]).unwrap().value, 0.5);
        let single = Graph::from_edges(1, &[]).unwrap();
        assert_eq!(cheeger_graph_exact(&single, &[]).unwrap().value, 0.0);
    }

    #[test]
    fn cycle_and_complete() {
        let c = cheeger_graph_exact(&Graph::cycle(12), &[]).unwrap();
        assert_eq!((c.boundary, c.size), (2, 6));
        let k5 = cheeger_graph_exact(&Graph::complete(5), &[]).unwrap();
        assert_eq!(k5.value, 1.5);
        let r = inverse_cheeger_check(&Graph::cycle(12), &[]).unwrap();
        assert!((r.cheeger - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.rho - (2.0 * std::f64::consts::PI / 12.0).cos()).abs() < 1e-10);
    }

    #[test]
    fn sweep_finds_bridge() {
        let mut edges = Vec::new();
        for off in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    edges.push((off + i, off + j));
                }
            }
        }
        edges.push((4, 5));
        let g = Graph::from_edges(10, &edges).unwrap();
        let s = cheeger_graph_sweep(&g, &[]).unwrap();
        let e = cheeger_graph_exact(&g, &[]).unwrap();
        assert_eq!((s.boundary, s.size), (1, 5));
        assert_eq!(s.value, e.value);
    }

    #[test]
    fn disconnected_interior_rejected() {
        let g = Graph::path(5);
        assert!(matches!(cheeger_graph_sweep(&g, &[2]), Err(Error::Disconnected)));
    }

    #[test]
    fn tree_truncation_satisfies_inverse_cheeger() {
        for depth in [3, 4] {
            let t = Graph::regular_tree(3, depth);
            let leaves: Vec<usize> = (0..t.len()).filter(|&v| t.degree(v) == 1).collect();
            let r = inverse_cheeger_check(&t, &leaves).unwrap();
            assert!(r.exact && r.holds, "{r:?}");
        }
    }
}
