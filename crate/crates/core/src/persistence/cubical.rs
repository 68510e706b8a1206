//! Superlevel persistence of a 2D pixel field.
//!
//! Pixels are top-dimensional cells carrying the field value; a lower cell
//! enters with its first incident pixel, so material components are
//! 8-connected and background regions 4-connected. Dimension 0 comes from a
//! union-find sweep over pixels by decreasing value. Dimension 1 uses
//! Alexander duality: holes of `{f >= t}` are the bounded 4-connected
//! components of `{f < t}`, tracked by a sweep of increasing value over the
//! grid padded with an always-present background ring.

use super::PersistencePair;

struct UnionFind {
    parent: Vec<usize>,
    /// Sweep rank of the oldest cell in each root's component.
    birth_rank: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            birth_rank: vec![usize::MAX; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Sweeps cells in `order`, merging with already-present neighbours. Each
/// merge kills the younger component (larger birth rank) at the current
/// value; returns `(birth value, death value)` per killed component and the
/// birth values of the survivors.
fn sweep<N>(values: &[f64], order: &[usize], neighbors: N) -> (Vec<(f64, f64)>, Vec<f64>)
where
    N: Fn(usize, &mut Vec<usize>),
{
    let n = values.len();
    let mut uf = UnionFind::new(n);
    let mut present = vec![false; n];
    let mut pairs = Vec::new();
    let mut nb = Vec::with_capacity(8);
    for (rank, &cell) in order.iter().enumerate() {
        present[cell] = true;
        uf.birth_rank[cell] = rank;
        let v = values[cell];
        nb.clear();
        neighbors(cell, &mut nb);
        for &q in &nb {
            if !present[q] {
                continue;
            }
            let (a, b) = (uf.find(cell), uf.find(q));
            if a == b {
                continue;
            }
            let (elder, younger) = if uf.birth_rank[a] < uf.birth_rank[b] {
                (a, b)
            } else {
                (b, a)
            };
            let birth = values[order[uf.birth_rank[younger]]];
            pairs.push((birth, v));
            uf.parent[younger] = elder;
        }
    }
    let mut survivors = Vec::new();
    for cell in 0..n {
        if uf.find(cell) == cell {
            survivors.push(values[order[uf.birth_rank[cell]]]);
        }
    }
    (pairs, survivors)
}

/// Dimension-0 pairs (zero-persistence pairs dropped) plus essential births.
pub(super) fn dim0(
    values: &[f64],
    nelx: usize,
    nely: usize,
) -> (Vec<PersistencePair>, Vec<PersistencePair>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // decreasing value, ties by linear index
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let neighbors = |cell: usize, out: &mut Vec<usize>| {
        let (row, col) = ((cell / nelx) as isize, (cell % nelx) as isize);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (r, c) = (row + dr, col + dc);
                if (dr, dc) != (0, 0)
                    && r >= 0
                    && c >= 0
                    && (r as usize) < nely
                    && (c as usize) < nelx
                {
                    out.push(r as usize * nelx + c as usize);
                }
            }
        }
    };
    let (pairs, survivors) = sweep(values, &order, neighbors);
    let finite = pairs
        .into_iter()
        .filter(|(b, d)| b != d)
        .map(|(birth, death)| PersistencePair::finite(birth, death))
        .collect();
    let essential = survivors
        .into_iter()
        .map(PersistencePair::essential)
        .collect();
    (finite, essential)
}

/// Dimension-1 pairs through the dual sweep of the background.
pub(super) fn dim1(values: &[f64], nelx: usize, nely: usize) -> Vec<PersistencePair> {
    let (w, h) = (nelx + 2, nely + 2);
    let mut padded = vec![f64::NEG_INFINITY; w * h];
    for row in 0..nely {
        for col in 0..nelx {
            padded[(row + 1) * w + col + 1] = values[row * nelx + col];
        }
    }
    let mut order: Vec<usize> = (0..padded.len()).collect();
    // increasing value, ties by linear index
    order.sort_by(|&a, &b| padded[a].total_cmp(&padded[b]).then(a.cmp(&b)));
    let neighbors = |cell: usize, out: &mut Vec<usize>| {
        let (row, col) = (cell / w, cell % w);
        if row > 0 {
            out.push(cell - w);
        }
        if row + 1 < h {
            out.push(cell + w);
        }
        if col > 0 {
            out.push(cell - 1);
        }
        if col + 1 < w {
            out.push(cell + 1);
        }
    };
    let (pairs, _) = sweep(&padded, &order, neighbors);
    // A background component born at b (sublevel) and absorbed at d is a
    // hole of the superlevel set for b < t <= d.
    pairs
        .into_iter()
        .filter(|(b, d)| b != d)
        .map(|(b, d)| PersistencePair::finite(d, b))
        .collect()
}
