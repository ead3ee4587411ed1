//! Node centralities: degree, betweenness (Brandes) and eigenvector (power
//! iteration).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::SteinerInstance;

/// Sources handled per parallel task. Fixed so the floating-point reduction
/// order, and therefore the result bits, never depend on the thread count.
const SOURCE_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralityOptions {
    /// Shortest paths over edge weights (true) or hop counts (false).
    pub weighted_betweenness: bool,
    /// Eigenvector centrality of the weighted (true) or 0/1 (false) adjacency.
    pub weighted_eigenvector: bool,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
}

impl Default for CentralityOptions {
    fn default() -> Self {
        CentralityOptions {
            weighted_betweenness: true,
            weighted_eigenvector: false,
            eigen_tol: 1e-8,
            eigen_max_iter: 1000,
        }
    }
}

/// Per-node centralities, indexed by 0-based node id.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityTable {
    pub degree: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub eigenvector: Vec<f64>,
}

impl CentralityTable {
    pub fn compute(inst: &SteinerInstance, opts: &CentralityOptions) -> Result<Self> {
        let degree = degree_centrality(inst)?;
        let betweenness = if opts.weighted_betweenness {
            betweenness_centrality(inst)?
        } else {
            betweenness_by_hops(inst)
        };
        let eigenvector = eigenvector_with(
            inst,
            opts.weighted_eigenvector,
            opts.eigen_tol,
            opts.eigen_max_iter,
        )?;
        Ok(CentralityTable {
            degree,
            betweenness,
            eigenvector,
        })
    }
}

/// `deg(v) / (n - 1)`.
pub fn degree_centrality(inst: &SteinerInstance) -> Result<Vec<f64>> {
    let n = inst.node_count();
    if n < 2 {
        return Err(Error::SingleNodeGraph);
    }
    let scale = 1.0 / (n - 1) as f64;
    Ok((0..n).map(|v| inst.degree(v) as f64 * scale).collect())
}

/// Weighted shortest-path betweenness, normalised by `(n-1)(n-2)/2`.
///
/// Ties between shortest paths are resolved by counting every shortest path
/// (exact comparison on integer weight units).
pub fn betweenness_centrality(inst: &SteinerInstance) -> Result<Vec<f64>> {
    if let Some((id, e)) = inst
        .edges()
        .iter()
        .enumerate()
        .find(|(_, e)| e.weight.units() <= 0)
    {
        return Err(Error::NonPositiveWeight {
            edge: id + 1,
            weight: e.weight.to_string(),
        });
    }
    Ok(brandes(inst, |e| inst.edge(e).weight.units()))
}

/// Betweenness over hop counts (every edge has length 1).
pub fn betweenness_by_hops(inst: &SteinerInstance) -> Vec<f64> {
    brandes(inst, |_| 1)
}

fn brandes(inst: &SteinerInstance, length: impl Fn(usize) -> i64 + Sync) -> Vec<f64> {
    let n = inst.node_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut scratch = BrandesScratch::new(n);
            for &s in chunk {
                scratch.accumulate(inst, &length, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // Sums run over ordered pairs; dividing by (n-1)(n-2) equals normalising
    // the unordered-pair count by (n-1)(n-2)/2.
    if n > 2 {
        let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
        total.iter_mut().for_each(|x| *x *= scale);
    } else {
        total.iter_mut().for_each(|x| *x = 0.0);
    }
    total
}

struct BrandesScratch {
    dist: Vec<Option<i64>>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            dist: vec![None; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
        }
    }

    fn accumulate(
        &mut self,
        inst: &SteinerInstance,
        length: &impl Fn(usize) -> i64,
        s: usize,
        acc: &mut [f64],
    ) {
        self.dist.iter_mut().for_each(|d| *d = None);
        self.sigma.iter_mut().for_each(|x| *x = 0.0);
        self.delta.iter_mut().for_each(|x| *x = 0.0);
        self.preds.iter_mut().for_each(Vec::clear);
        self.order.clear();

        let mut settled = vec![false; inst.node_count()];
        let mut heap = BinaryHeap::new();
        self.dist[s] = Some(0);
        self.sigma[s] = 1.0;
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if settled[v] {
                continue;
            }
            settled[v] = true;
            self.order.push(v);
            for &e in inst.incident(v) {
                let w = inst.edge(e).other(v);
                let nd = d + length(e);
                match self.dist[w] {
                    Some(old) if nd > old => {}
                    Some(old) if nd == old => {
                        self.sigma[w] += self.sigma[v];
                        self.preds[w].push(v);
                    }
                    _ => {
                        self.dist[w] = Some(nd);
                        self.sigma[w] = self.sigma[v];
                        self.preds[w].clear();
                        self.preds[w].push(v);
                        heap.push(Reverse((nd, w)));
                    }
                }
            }
        }
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

/// Principal eigenvector of the 0/1 adjacency matrix, unit Euclidean norm.
///
/// Iterates `x <- (A + I) x`, which shares A's principal eigenvector but does
/// not oscillate on bipartite graphs. Stops once the L1 change between
/// successive normalised iterates drops below `tol * n`.
pub fn eigenvector_centrality(
    inst: &SteinerInstance,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    eigenvector_with(inst, false, tol, max_iter)
}

fn eigenvector_with(
    inst: &SteinerInstance,
    weighted: bool,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = inst.node_count();
    if n < 2 {
        return Err(Error::SingleNodeGraph);
    }
    let weight = |e: usize| {
        if weighted {
            inst.edge(e).weight.as_f64()
        } else {
            1.0
        }
    };
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        next.copy_from_slice(&x);
        for (id, e) in inst.edges().iter().enumerate() {
            let w = weight(id);
            next[e.u] += w * x[e.v];
            next[e.v] += w * x[e.u];
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NoConvergence(0));
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < n as f64 * tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(max_iter))
}
