//! Exact bottleneck distance: binary search over the finite set of candidate
//! costs, with a Hopcroft-Karp perfect-matching test at each candidate.

use std::collections::VecDeque;

use super::{PersistenceDiagram, PersistencePair};
use crate::error::Result;

/// Cost charged for each unmatched essential class by
/// [`bottleneck_with_penalty`]: the largest gap two densities can have.
pub const DEFAULT_ESSENTIAL_PENALTY: f64 = 1.0;

/// Bottleneck distance between the dimension-`dim` parts of two diagrams.
///
/// Finite points may match each other (L-infinity cost) or their diagonal
/// projection (cost `|birth - death| / 2`). Essential classes match only
/// essential classes, at cost `|b1 - b2|`; differing essential counts give
/// `f64::INFINITY`.
pub fn bottleneck_distance(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    dim: usize,
) -> Result<f64> {
    distance(d1.dim(dim)?, d2.dim(dim)?, None)
}

/// As [`bottleneck_distance`], but each essential class left unmatched costs
/// `penalty` instead of making the distance infinite.
pub fn bottleneck_with_penalty(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    dim: usize,
    penalty: f64,
) -> Result<f64> {
    distance(d1.dim(dim)?, d2.dim(dim)?, Some(penalty))
}

fn distance(a: &[PersistencePair], b: &[PersistencePair], penalty: Option<f64>) -> Result<f64> {
    let split = |pairs: &[PersistencePair]| {
        let mut births: Vec<f64> = pairs
            .iter()
            .filter(|p| p.essential)
            .map(|p| p.birth)
            .collect();
        births.sort_by(|x, y| y.total_cmp(x));
        let finite: Vec<(f64, f64)> = pairs
            .iter()
            .filter(|p| !p.essential)
            .map(|p| (p.birth, p.death))
            .collect();
        (births, finite)
    };
    let (ess_a, fin_a) = split(a);
    let (ess_b, fin_b) = split(b);

    // On the line, matching sorted sequences minimizes the largest gap.
    let mut worst = ess_a
        .iter()
        .zip(&ess_b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if ess_a.len() != ess_b.len() {
        match penalty {
            Some(p) => worst = worst.max(p),
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(worst.max(finite_bottleneck(&fin_a, &fin_b)))
}

#[inline]
fn linf(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

#[inline]
fn half_persistence(p: (f64, f64)) -> f64 {
    (p.0 - p.1).abs() / 2.0
}

/// Exact bottleneck distance between two finite multisets of points.
pub(crate) fn finite_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(a.len() * b.len() + a.len() + b.len());
    candidates.extend(a.iter().map(|&p| half_persistence(p)));
    candidates.extend(b.iter().map(|&q| half_persistence(q)));
    for &p in a {
        for &q in b {
            candidates.push(linf(p, q));
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // The largest candidate is always feasible (everything to the diagonal
    // or matched within it), so search for the first feasible one.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_exists(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Left vertices: points of `a`, then diagonal copies of `b`. Right
/// vertices: points of `b`, then diagonal copies of `a`.
fn perfect_matching_exists(a: &[(f64, f64)], b: &[(f64, f64)], eps: f64) -> bool {
    let (n, m) = (a.len(), b.len());
    let size = n + m;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            if linf(p, q) <= eps {
                adj[i].push(j);
            }
        }
        if half_persistence(p) <= eps {
            adj[i].push(m + i);
        }
    }
    for (j, &q) in b.iter().enumerate() {
        let row = &mut adj[n + j];
        if half_persistence(q) <= eps {
            row.push(j);
        }
        // diagonal to diagonal is free
        row.extend(m..m + n);
    }
    hopcroft_karp(&adj, size) == size
}

fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> usize {
    const NIL: usize = usize::MAX;
    let left = adj.len();
    let mut match_l = vec![NIL; left];
    let mut match_r = vec![NIL; right];
    let mut dist = vec![0usize; left];
    let mut matched = 0;
    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut it = vec![0usize; left];
        for u in 0..left {
            if match_l[u] == NIL && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut it)
            {
                matched += 1;
            }
        }
    }
}

fn augment(
    root: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    const NIL: usize = usize::MAX;
    // Iterative DFS along the BFS layers.
    let mut stack = vec![root];
    while let Some(&u) = stack.last() {
        if it[u] < adj[u].len() {
            let v = adj[u][it[u]];
            it[u] += 1;
            let w = match_r[v];
            if w == NIL {
                // Flip the path recorded on the stack.
                let mut v = v;
                while let Some(x) = stack.pop() {
                    let prev = match_l[x];
                    match_l[x] = v;
                    match_r[v] = x;
                    v = prev;
                }
                return true;
            }
            if dist[w] == dist[u].wrapping_add(1) {
                stack.push(w);
            }
        } else {
            dist[u] = usize::MAX;
            stack.pop();
        }
    }
    false
}
