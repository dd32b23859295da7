//! Independent dense oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hetgp_core::environment::OccupancyGrid;
use nalgebra::DMatrix;

/// Closed-form profiles; the library integrates the same profiles numerically.
#[derive(Debug, Clone, Copy)]
pub enum Power {
    Constant(f64),
    /// `(t − center)²`.
    Parabola {
        center: f64,
    },
}

impl Power {
    /// `∫_a^b q(s) (b − s)^k ds` for k = 0, 1, 2, from polynomial antiderivatives.
    pub fn moments(&self, a: f64, b: f64) -> [f64; 3] {
        let h = b - a;
        let mut m = [0.0; 3];
        for (k, mk) in m.iter_mut().enumerate() {
            let k = k as i32;
            *mk = match *self {
                Power::Constant(q) => q * h.powi(k + 1) / (k + 1) as f64,
                Power::Parabola { center } => {
                    // Substitute u = b − s: q = (β − u)² with β = b − center.
                    let beta = b - center;
                    beta * beta * h.powi(k + 1) / (k + 1) as f64 - 2.0 * beta * h.powi(k + 2) / (k + 2) as f64
                        + h.powi(k + 3) / (k + 3) as f64
                }
            };
        }
        m
    }
}

pub fn phi(dt: f64, d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * d, 2 * d);
    for k in 0..d {
        m[(k, d + k)] = dt;
    }
    m
}

pub fn q_block(power: Power, a: f64, b: f64, d: usize) -> DMatrix<f64> {
    let [m0, m1, m2] = power.moments(a, b);
    let mut q = DMatrix::zeros(2 * d, 2 * d);
    for k in 0..d {
        q[(k, k)] = m2;
        q[(k, d + k)] = m1;
        q[(d + k, k)] = m1;
        q[(d + k, d + k)] = m0;
    }
    q
}

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("oracle matrix is singular")
}

/// `Aᵀ diag(K₀⁻¹, Q₁⁻¹, …, Q_N⁻¹) A + E_Nᵀ K_g⁻¹ E_N`, with `A` the
/// lower block-bidiagonal inverse transition operator.
pub fn dense_precision(times: &[f64], power: Power, d: usize, start_var: f64, goal_var: f64) -> DMatrix<f64> {
    let s = 2 * d;
    let n = times.len();
    let mut a = DMatrix::zeros(n * s, n * s);
    let mut w = DMatrix::zeros(n * s, n * s);
    for i in 0..n {
        a.view_mut((i * s, i * s), (s, s)).copy_from(&DMatrix::identity(s, s));
        if i == 0 {
            w.view_mut((0, 0), (s, s))
                .copy_from(&(DMatrix::identity(s, s) / start_var));
        } else {
            let dt = times[i] - times[i - 1];
            a.view_mut((i * s, (i - 1) * s), (s, s)).copy_from(&(-phi(dt, d)));
            let qi = inv(&q_block(power, times[i - 1], times[i], d));
            w.view_mut((i * s, i * s), (s, s)).copy_from(&qi);
        }
    }
    let mut p = a.transpose() * w * &a;
    let last = (n - 1) * s;
    for k in 0..s {
        p[(last + k, last + k)] += 1.0 / goal_var;
    }
    p
}

/// Conditional-mean coefficients of the state at `tau` given all support
/// states, from the joint covariance of the unconditioned process started
/// with identity covariance. Returns one `2d × 2d` block per support state.
pub fn conditioning_coeffs(times: &[f64], tau: f64, power: Power, d: usize) -> Vec<DMatrix<f64>> {
    let s = 2 * d;
    // Time-ordered node list with tau inserted.
    let mut nodes: Vec<f64> = times.to_vec();
    let pos = nodes.partition_point(|&t| t <= tau);
    nodes.insert(pos, tau);
    let m = nodes.len();
    // Marginal covariances, then cross covariances Cov(x_b, x_a) = Φ(t_b, t_a) P_a for a ≤ b.
    let mut marg = vec![DMatrix::identity(s, s)];
    for k in 1..m {
        let f = phi(nodes[k] - nodes[k - 1], d);
        let p = &f * &marg[k - 1] * f.transpose() + q_block(power, nodes[k - 1], nodes[k], d);
        marg.push(p);
    }
    let mut joint = DMatrix::zeros(m * s, m * s);
    for a in 0..m {
        for b in a..m {
            let c = phi(nodes[b] - nodes[a], d) * &marg[a];
            joint.view_mut((b * s, a * s), (s, s)).copy_from(&c);
            joint.view_mut((a * s, b * s), (s, s)).copy_from(&c.transpose());
        }
    }
    let support: Vec<usize> = (0..m).filter(|&k| k != pos).collect();
    let mut kss = DMatrix::zeros(support.len() * s, support.len() * s);
    let mut kts = DMatrix::zeros(s, support.len() * s);
    for (r, &a) in support.iter().enumerate() {
        for (c, &b) in support.iter().enumerate() {
            kss.view_mut((r * s, c * s), (s, s))
                .copy_from(&joint.view((a * s, b * s), (s, s)));
        }
        kts.view_mut((0, r * s), (s, s))
            .copy_from(&joint.view((pos * s, a * s), (s, s)));
    }
    // K_ts K_ss⁻¹ via a solve on the transpose.
    let coef = kss
        .cholesky()
        .expect("support covariance is positive definite")
        .solve(&kts.transpose())
        .transpose();
    (0..support.len())
        .map(|r| coef.view((0, r * s), (s, s)).into_owned())
        .collect()
}

/// Signed distance with the half-cell convention: free cells read the
/// distance to the nearest occupied center minus half a cell, occupied
/// cells the negated distance to the nearest free center minus half a cell;
/// cells without an opposite-kind cell read ± the raster diagonal.
pub fn brute_sdf(grid: &OccupancyGrid) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    let res = grid.resolution();
    let diag = grid.diagonal();
    let mut out = vec![0.0; w * h];
    for j in 0..h {
        for i in 0..w {
            let occ = grid.is_occupied(i, j);
            let mut best = f64::INFINITY;
            for jj in 0..h {
                for ii in 0..w {
                    if grid.is_occupied(ii, jj) != occ {
                        let dx = ii as f64 - i as f64;
                        let dy = jj as f64 - j as f64;
                        best = best.min(dx * dx + dy * dy);
                    }
                }
            }
            let v = if best.is_finite() {
                (best.sqrt() - 0.5) * res
            } else {
                diag
            };
            out[j * w + i] = if occ { -v } else { v };
        }
    }
    out
}

/// Edges of the n×n grid graph as `(a, b)` with `a < b`, cells row-major.
pub fn grid_edges(n: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let c = y * n + x;
            if x + 1 < n {
                e.push((c, c + 1));
            }
            if y + 1 < n {
                e.push((c, c + n));
            }
        }
    }
    e.sort_unstable();
    e
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Every spanning tree of the n×n grid graph, by exhaustive subset search.
pub fn spanning_trees(n: usize) -> BTreeSet<Vec<(usize, usize)>> {
    let edges = grid_edges(n);
    let cells = n * n;
    assert!(edges.len() <= 24, "exhaustive search only for small grids");
    let mut trees = BTreeSet::new();
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != cells - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..cells).collect();
        let mut acyclic = true;
        let mut chosen = Vec::with_capacity(cells - 1);
        for (k, &(a, b)) in edges.iter().enumerate() {
            if mask & (1 << k) == 0 {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                acyclic = false;
                break;
            }
            parent[ra] = rb;
            chosen.push((a, b));
        }
        if acyclic {
            trees.insert(chosen);
        }
    }
    trees
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
