//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use simptopo::fea::{solve_system, DensityField, GridDomain, LoadCase, MaterialModel, PointForce};
use simptopo::persistence::{PersistenceDiagram, PersistencePair};
use simptopo::simp::sensitivity_analysis;

/// Closed-form element stiffness of the 88-line code.
pub fn reference_ke(nu: f64) -> [[f64; 8]; 8] {
    let a11 = [
        [12., 3., -6., -3.],
        [3., 12., 3., 0.],
        [-6., 3., 12., -3.],
        [-3., 0., -3., 12.],
    ];
    let a12 = [
        [-6., -3., 0., 3.],
        [-3., -6., -3., -6.],
        [0., -3., -6., 3.],
        [3., -6., 3., -6.],
    ];
    let b11 = [
        [-4., 3., -2., 9.],
        [3., -4., -9., 4.],
        [-2., -9., -4., -3.],
        [9., 4., -3., -4.],
    ];
    let b12 = [
        [2., -3., 4., -9.],
        [-3., 2., 9., -2.],
        [4., 9., 2., 3.],
        [-9., -2., 3., 2.],
    ];
    let block = |m: &[[f64; 4]; 4], i: usize, j: usize, t: bool| if t { m[j][i] } else { m[i][j] };
    let mut ke = [[0.0; 8]; 8];
    for (i, row) in ke.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (bi, bj, li, lj) = (i / 4, j / 4, i % 4, j % 4);
            let (a, b) = match (bi, bj) {
                (0, 0) | (1, 1) => (block(&a11, li, lj, false), block(&b11, li, lj, false)),
                (0, 1) => (block(&a12, li, lj, false), block(&b12, li, lj, false)),
                _ => (block(&a12, li, lj, true), block(&b12, li, lj, true)),
            };
            *v = (a + nu * b) / (1.0 - nu * nu) / 24.0;
        }
    }
    ke
}

/// DOFs of element (elx, ely) in the 88-line numbering: nodes column-major,
/// row 0 on top, element corners LL, LR, UR, UL.
pub fn edofs(nely: usize, elx: usize, ely: usize) -> [usize; 8] {
    let n1 = (nely + 1) * elx + ely;
    let n2 = (nely + 1) * (elx + 1) + ely;
    [
        2 * n1 + 2,
        2 * n1 + 3,
        2 * n2 + 2,
        2 * n2 + 3,
        2 * n2,
        2 * n2 + 1,
        2 * n1,
        2 * n1 + 1,
    ]
}

pub struct DenseSolve {
    pub k: DMatrix<f64>,
    pub f: DVector<f64>,
    pub u: DVector<f64>,
}

/// Dense assembly and LU solve with constrained DOFs eliminated.
pub fn dense_solve(
    nelx: usize,
    nely: usize,
    rho: &[f64],
    mat: &MaterialModel,
    forces: &[PointForce],
    fixed: &[usize],
) -> DenseSolve {
    let ndof = 2 * (nelx + 1) * (nely + 1);
    let ke = reference_ke(mat.nu);
    let mut k = DMatrix::zeros(ndof, ndof);
    for elx in 0..nelx {
        for ely in 0..nely {
            let e = mat.emin + rho[ely * nelx + elx].powf(mat.penal) * (mat.e0 - mat.emin);
            let d = edofs(nely, elx, ely);
            for i in 0..8 {
                for j in 0..8 {
                    k[(d[i], d[j])] += e * ke[i][j];
                }
            }
        }
    }
    let mut f = DVector::zeros(ndof);
    for p in forces {
        f[2 * p.node] += p.fx;
        f[2 * p.node + 1] += p.fy;
    }
    let free: Vec<usize> = (0..ndof).filter(|d| !fixed.contains(d)).collect();
    let kff = DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]);
    let ff = DVector::from_fn(free.len(), |i, _| f[free[i]]);
    let uf = kff.lu().solve(&ff).expect("dense system singular");
    let mut u = DVector::zeros(ndof);
    for (i, &d) in free.iter().enumerate() {
        u[d] = uf[i];
    }
    for &d in fixed {
        f[d] = 0.0;
    }
    DenseSolve { k, f, u }
}

/// Total compliance `F^T u` from the dense oracle.
pub fn dense_compliance(
    grid: &GridDomain,
    rho: &DensityField,
    mat: &MaterialModel,
    lc: &LoadCase,
) -> f64 {
    let s = dense_solve(
        grid.nelx(),
        grid.nely(),
        rho.values(),
        mat,
        &lc.forces,
        &lc.fixed_dofs,
    );
    s.f.dot(&s.u)
}

/// Left edge clamped, one load at a random node in the right half.
pub fn random_cantilever<R: Rng>(rng: &mut R, nelx: usize, nely: usize) -> LoadCase {
    let fixed: Vec<usize> = (0..2 * (nely + 1)).collect();
    let col = rng.gen_range(nelx / 2..=nelx).max(1);
    let row = rng.gen_range(0..=nely);
    let force = PointForce {
        node: col * (nely + 1) + row,
        fx: rng.gen_range(-100.0..100.0),
        fy: rng.gen_range(-100.0..100.0),
    };
    LoadCase::new(vec![force], fixed, "a")
}

pub fn random_density<R: Rng>(
    rng: &mut R,
    nelx: usize,
    nely: usize,
    lo: f64,
    hi: f64,
) -> DensityField {
    let v = (0..nelx * nely).map(|_| rng.gen_range(lo..hi)).collect();
    DensityField::new(nelx, nely, v).unwrap()
}

/// Direct double loop over all element pairs.
pub fn brute_filter(nelx: usize, nely: usize, rmin: f64, rho: &[f64], dc: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rho.len()];
    for ey in 0..nely {
        for ex in 0..nelx {
            let (mut num, mut wsum) = (0.0, 0.0);
            for iy in 0..nely {
                for ix in 0..nelx {
                    let dist =
                        ((ex as f64 - ix as f64).powi(2) + (ey as f64 - iy as f64).powi(2)).sqrt();
                    let w = (rmin - dist).max(0.0);
                    num += w * rho[iy * nelx + ix] * dc[iy * nelx + ix];
                    wsum += w;
                }
            }
            let e = ey * nelx + ex;
            out[e] = num / (rho[e].max(1e-3) * wsum);
        }
    }
    out
}

/// Volume after an OC step with the multiplier found by plain bisection to
/// 1e-12 relative width.
pub fn oc_volume_oracle(rho: &[f64], dc: &[f64], volfrac: f64, move_limit: f64) -> f64 {
    let volume = |lambda: f64| {
        rho.iter()
            .zip(dc)
            .map(|(&r, &d)| {
                let cand = r * (-d / lambda).sqrt();
                cand.min(r + move_limit)
                    .min(1.0)
                    .max(r - move_limit)
                    .max(0.0)
            })
            .sum::<f64>()
            / rho.len() as f64
    };
    let (mut lo, mut hi) = (1e-40f64, 1e40f64);
    while (hi - lo) / (hi + lo) > 1e-12 {
        let mid = (lo * hi).sqrt();
        let mid = if mid <= lo || mid >= hi {
            0.5 * (lo + hi)
        } else {
            mid
        };
        if volume(mid) > volfrac {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    volume(0.5 * (lo + hi))
}

fn components(
    nelx: usize,
    nely: usize,
    on: impl Fn(i64, i64) -> bool,
    diag: bool,
    pad: i64,
) -> usize {
    let (w, h) = (nelx as i64 + 2 * pad, nely as i64 + 2 * pad);
    let mut seen = vec![false; (w * h) as usize];
    let mut count = 0;
    let mut nbrs = vec![(1, 0), (-1, 0), (0, 1), (0, -1)];
    if diag {
        nbrs.extend([(1, 1), (1, -1), (-1, 1), (-1, -1)]);
    }
    for y0 in 0..h {
        for x0 in 0..w {
            if seen[(y0 * w + x0) as usize] || !on(x0 - pad, y0 - pad) {
                continue;
            }
            count += 1;
            let mut queue = std::collections::VecDeque::from([(x0, y0)]);
            seen[(y0 * w + x0) as usize] = true;
            while let Some((x, y)) = queue.pop_front() {
                for (dx, dy) in &nbrs {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let idx = (ny * w + nx) as usize;
                    if !seen[idx] && on(nx - pad, ny - pad) {
                        seen[idx] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
    }
    count
}

/// 8-connected components of `{v >= t}` by breadth-first search.
pub fn bfs_components(values: &[f64], nelx: usize, nely: usize, t: f64) -> usize {
    let on = |x: i64, y: i64| values[y as usize * nelx + x as usize] >= t;
    components(nelx, nely, on, true, 0)
}

/// 4-connected background components of the padded image, minus the outer one.
pub fn bfs_holes(values: &[f64], nelx: usize, nely: usize, t: f64) -> usize {
    let off = |x: i64, y: i64| {
        x < 0
            || y < 0
            || x >= nelx as i64
            || y >= nely as i64
            || values[y as usize * nelx + x as usize] < t
    };
    components(nelx, nely, off, false, 1) - 1
}

/// Euler characteristic `V - E + F` of the union of closed unit squares of
/// `{v >= t}`.
pub fn euler_characteristic(values: &[f64], nelx: usize, nely: usize, t: f64) -> i64 {
    use std::collections::HashSet;
    let (mut verts, mut hedges, mut vedges) = (HashSet::new(), HashSet::new(), HashSet::new());
    let mut faces = 0i64;
    for y in 0..nely {
        for x in 0..nelx {
            if values[y * nelx + x] < t {
                continue;
            }
            faces += 1;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                verts.insert((x + dx, y + dy));
            }
            hedges.insert((x, y));
            hedges.insert((x, y + 1));
            vedges.insert((x, y));
            vedges.insert((x + 1, y));
        }
    }
    verts.len() as i64 - (hedges.len() + vedges.len()) as i64 + faces
}

/// `(b0, b1)` of `{v >= t}`: components by search, holes from `b1 = b0 - chi`.
pub fn betti_oracle(values: &[f64], nelx: usize, nely: usize, t: f64) -> (usize, usize) {
    let b0 = bfs_components(values, nelx, nely, t);
    let b1 = b0 as i64 - euler_characteristic(values, nelx, nely, t);
    (b0, b1 as usize)
}

fn linf(a: &PersistencePair, b: &PersistencePair) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

fn to_diag(a: &PersistencePair) -> f64 {
    (a.birth - a.death).abs() / 2.0
}

/// Minimum over every partial matching of the largest cost; unmatched points
/// go to the diagonal. Finite pairs only.
pub fn exhaustive_bottleneck(a: &[PersistencePair], b: &[PersistencePair]) -> f64 {
    fn rec(
        i: usize,
        a: &[PersistencePair],
        b: &[PersistencePair],
        used: &mut Vec<bool>,
        cur: f64,
        best: &mut f64,
    ) {
        if cur >= *best {
            return;
        }
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(p, _)| to_diag(p))
                .fold(cur, f64::max);
            *best = best.min(rest);
            return;
        }
        rec(i + 1, a, b, used, cur.max(to_diag(&a[i])), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(i + 1, a, b, used, cur.max(linf(&a[i], &b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

/// A dim-0 diagram of up to `max_points` finite pairs, values on a coarse
/// grid so ties occur.
pub fn random_diagram<R: Rng>(rng: &mut R, max_points: usize) -> PersistenceDiagram {
    let n = rng.gen_range(0..=max_points);
    let dim0 = (0..n)
        .map(|_| {
            let b = rng.gen_range(0..=20) as f64 / 20.0;
            let d = rng.gen_range(0..=20) as f64 / 20.0 * b;
            PersistencePair::finite(b, d)
        })
        .collect();
    PersistenceDiagram {
        dim0,
        dim1: Vec::new(),
    }
}

pub fn random_binary<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 })
        .collect()
}

pub fn naive_mse(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s / a.len() as f64
}

pub fn naive_bce(p: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        let q = p[i].clamp(1e-7, 1.0 - 1e-7);
        s -= y[i] * q.ln() + (1.0 - y[i]) * (1.0 - q).ln();
    }
    s / p.len() as f64
}

pub struct Top88Fixture {
    pub iterations: usize,
    pub compliance: f64,
    pub density: Vec<f64>,
}

/// Iteration count, final compliance, then the density rows.
pub fn load_top88_fixture(text: &str) -> Top88Fixture {
    let mut lines = text.lines();
    let iterations = lines.next().unwrap().trim().parse().unwrap();
    let compliance = lines.next().unwrap().trim().parse().unwrap();
    let density = lines
        .flat_map(|l| l.split_whitespace().map(|v| v.parse::<f64>().unwrap()))
        .collect();
    Top88Fixture {
        iterations,
        compliance,
        density,
    }
}

/// Half MBB beam: x rollers on the left edge, y support at the bottom-right
/// corner, unit downward load at the top-left node.
pub fn mbb_case(grid: &GridDomain) -> LoadCase {
    let mut fixed: Vec<usize> = (0..=grid.nely())
        .map(|r| 2 * grid.node_index(0, r))
        .collect();
    fixed.push(2 * grid.node_index(grid.nelx(), grid.nely()) + 1);
    LoadCase::new(
        vec![PointForce {
            node: 0,
            fx: 0.0,
            fy: -1.0,
        }],
        fixed,
        "mbb",
    )
}

/// Uniaxial tension: rollers on the left edge, a pin at the bottom-left and
/// consistent nodal forces for a unit traction on the right edge.
pub fn patch_test(nelx: usize, nely: usize, traction: f64) -> (f64, f64, f64) {
    let grid = GridDomain::new(nelx, nely).unwrap();
    let mut fixed: Vec<usize> = (0..=nely).map(|r| 2 * grid.node_index(0, r)).collect();
    fixed.push(2 * grid.node_index(0, nely) + 1);
    let forces = (0..=nely)
        .map(|r| {
            let share = if r == 0 || r == nely { 0.5 } else { 1.0 };
            PointForce {
                node: grid.node_index(nelx, r),
                fx: traction * share,
                fy: 0.0,
            }
        })
        .collect();
    let lc = LoadCase::new(forces, fixed, "patch");
    let rho = DensityField::uniform(&grid, 1.0).unwrap();
    let sol = solve_system(&grid, &rho, &MaterialModel::default(), &lc).unwrap();
    let (mut dev_x, mut max_y, mut max_xy) = (0.0f64, 0.0f64, 0.0f64);
    for s in &sol.stresses {
        dev_x = dev_x.max((s[0] - traction).abs() / traction);
        max_y = max_y.max(s[1].abs() / traction);
        max_xy = max_xy.max(s[2].abs() / traction);
    }
    (dev_x, max_y, max_xy)
}

pub fn compliance(grid: &GridDomain, v: Vec<f64>, mat: &MaterialModel, lc: &LoadCase) -> f64 {
    let rho = DensityField::new(grid.nelx(), grid.nely(), v).unwrap();
    solve_system(grid, &rho, mat, lc).unwrap().total_compliance
}

/// Largest gap between adjoint sensitivities and central differences,
/// relative to the largest sensitivity. Elements whose sensitivity is orders
/// of magnitude below the compliance are dominated by round-off in the
/// difference quotient, so a per-element ratio is not meaningful there.
pub fn fd_gap(grid: &GridDomain, rho: &DensityField, mat: &MaterialModel, lc: &LoadCase) -> f64 {
    let sol = solve_system(grid, rho, mat, lc).unwrap();
    let dc = sensitivity_analysis(grid, rho, mat, &sol).unwrap();
    let h = 1e-6;
    let scale = dc.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut worst = 0.0f64;
    for e in 0..rho.len() {
        let (mut up, mut down) = (rho.values().to_vec(), rho.values().to_vec());
        up[e] += h;
        down[e] -= h;
        let fd = (compliance(grid, up, mat, lc) - compliance(grid, down, mat, lc)) / (2.0 * h);
        worst = worst.max((fd - dc[e]).abs() / scale);
    }
    worst
}
