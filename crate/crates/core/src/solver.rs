//! Grounded Laplacian systems.
//!
//! Every Dirichlet-type problem on a network reduces to `M x = b` where
//! `M = diag(d) - C` on the unknown nodes, `C` holds the conductances among
//! unknowns and `d_i = sum_j C_ij + g_i` with `g_i` the conductance from `i` to
//! the fixed nodes. `M` is a symmetric M-matrix.
//!
//! The direct method is symmetric Gaussian elimination in the
//! Grassmann-Taksar-Heyman form: pivots are recomputed as sums of positive
//! off-diagonal couplings plus grounding, so no subtraction ever occurs and the
//! factorization stays accurate when conductances span hundreds of orders of
//! magnitude. Large systems fall back to Jacobi-preconditioned conjugate
//! gradients.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::network::Network;
use crate::par;

/// Thresholds used by [`Solver`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverPolicy {
    /// Largest system factorized directly; larger ones use conjugate gradients.
    pub direct_limit: usize,
    /// Largest remainder switched to dense elimination.
    pub dense_limit: usize,
    /// Relative 2-norm residual at which conjugate gradients stop.
    pub cg_tolerance: f64,
    /// Relative sup-norm residual above which a solve is rejected.
    pub residual_tolerance: f64,
}

impl Default for SolverPolicy {
    fn default() -> Self {
        SolverPolicy { direct_limit: 20_000, dense_limit: 4_096, cg_tolerance: 1e-11, residual_tolerance: 1e-10 }
    }
}

/// `M = diag(d) - C` on `len()` unknowns.
#[derive(Debug, Clone)]
pub struct GroundedSystem {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    ground: Vec<f64>,
    diag: Vec<f64>,
}

impl GroundedSystem {
    /// The system on `unknowns` (sorted network nodes); all other nodes are fixed.
    ///
    /// `position[x]` must be the index of `x` in `unknowns`, or `usize::MAX`.
    pub fn from_network(net: &Network, unknowns: &[usize], position: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(unknowns.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut ground = Vec::with_capacity(unknowns.len());
        offsets.push(0);
        for &x in unknowns {
            let mut g = 0.0;
            for (y, c, _) in net.neighbors(x) {
                match position[y] {
                    usize::MAX => g += c,
                    j => {
                        cols.push(j);
                        vals.push(c);
                    }
                }
            }
            ground.push(g);
            offsets.push(cols.len());
        }
        Self::assemble(offsets, cols, vals, ground)
    }

    fn assemble(offsets: Vec<usize>, cols: Vec<usize>, vals: Vec<f64>, ground: Vec<f64>) -> Self {
        let diag = (0..ground.len())
            .map(|i| vals[offsets[i]..offsets[i + 1]].iter().sum::<f64>() + ground[i])
            .collect();
        GroundedSystem { offsets, cols, vals, ground, diag }
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn ground(&self) -> &[f64] {
        &self.ground
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        par::map_indices(self.len(), |i| self.diag[i] * x[i] - self.row(i).map(|(j, c)| c * x[j]).sum::<f64>())
    }

    /// `|M x - b|_inf / max(|b|_inf, max_i d_i |x_i|)`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mx = self.apply(x);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..self.len() {
            num = num.max((mx[i] - b[i]).abs());
            den = den.max(b[i].abs()).max(self.diag[i] * x[i].abs());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

#[derive(Debug, Clone)]
struct Elimination {
    order: Vec<usize>,
    pivots: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Elimination {
    fn factor(system: &GroundedSystem, dense_limit: usize) -> Self {
        let m = system.len();
        let mut rows: Vec<Vec<(usize, f64)>> = (0..m).map(|i| system.row(i).collect()).collect();
        let mut g = system.ground.clone();
        let mut alive = vec![true; m];
        let mut pos = vec![usize::MAX; m];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m).map(|i| Reverse((rows[i].len(), i))).collect();
        let mut out = Elimination {
            order: Vec::with_capacity(m),
            pivots: Vec::with_capacity(m),
            offsets: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        };
        let mut remaining = m;
        while let Some(Reverse((deg, k))) = heap.pop() {
            if !alive[k] || deg != rows[k].len() {
                continue;
            }
            if remaining > 1 && remaining <= dense_limit && 2 * deg >= remaining {
                heap.push(Reverse((deg, k)));
                break;
            }
            let nbrs = std::mem::take(&mut rows[k]);
            let d = nbrs.iter().map(|p| p.1).sum::<f64>() + g[k];
            alive[k] = false;
            remaining -= 1;
            for &(i, cik) in &nbrs {
                let f = cik / d;
                g[i] += f * g[k];
                let row = &mut rows[i];
                if let Some(at) = row.iter().position(|p| p.0 == k) {
                    row.swap_remove(at);
                }
                for (slot, p) in row.iter().enumerate() {
                    pos[p.0] = slot;
                }
                for &(j, ckj) in &nbrs {
                    if j == i {
                        continue;
                    }
                    let add = f * ckj;
                    match pos[j] {
                        usize::MAX => {
                            pos[j] = row.len();
                            row.push((j, add));
                        }
                        slot => row[slot].1 += add,
                    }
                }
                for p in row.iter() {
                    pos[p.0] = usize::MAX;
                }
                heap.push(Reverse((row.len(), i)));
            }
            out.push_step(k, d, nbrs.into_iter());
        }
        if remaining > 0 {
            let rest: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
            out.dense_tail(&rest, &rows, &g);
        }
        out
    }

    fn push_step(&mut self, k: usize, pivot: f64, entries: impl Iterator<Item = (usize, f64)>) {
        self.order.push(k);
        self.pivots.push(pivot);
        for (j, c) in entries {
            self.cols.push(j);
            self.vals.push(c);
        }
        self.offsets.push(self.cols.len());
    }

    fn dense_tail(&mut self, rest: &[usize], rows: &[Vec<(usize, f64)>], g: &[f64]) {
        let m = rest.len();
        let mut local = vec![usize::MAX; rows.len()];
        for (p, &i) in rest.iter().enumerate() {
            local[i] = p;
        }
        let mut a = vec![0.0; m * m];
        let mut g: Vec<f64> = rest.iter().map(|&i| g[i]).collect();
        for (p, &i) in rest.iter().enumerate() {
            for &(j, c) in &rows[i] {
                a[p * m + local[j]] += c;
            }
        }
        for p in 0..m {
            let pivot_row: Vec<f64> = a[p * m..(p + 1) * m].to_vec();
            let d = pivot_row[p + 1..].iter().sum::<f64>() + g[p];
            let gp = g[p];
            let tail = &mut a[(p + 1) * m..];
            let gains = {
                let mut gains = vec![0.0; m - p - 1];
                par::for_each_chunk_mut(tail, m, |r, row| {
                    let cip = row[p];
                    if cip == 0.0 {
                        return;
                    }
                    let f = cip / d;
                    let i = p + 1 + r;
                    for j in p + 1..m {
                        if j != i {
                            row[j] += f * pivot_row[j];
                        }
                    }
                });
                for (r, gain) in gains.iter_mut().enumerate() {
                    let cip = a[(p + 1 + r) * m + p];
                    *gain = cip / d * gp;
                }
                gains
            };
            for (r, gain) in gains.into_iter().enumerate() {
                g[p + 1 + r] += gain;
            }
            let entries: Vec<(usize, f64)> =
                (p + 1..m).filter(|&q| pivot_row[q] > 0.0).map(|q| (rest[q], pivot_row[q])).collect();
            self.push_step(rest[p], d, entries.into_iter());
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut r = b.to_vec();
        for s in 0..self.order.len() {
            let k = self.order[s];
            let rk = r[k] / self.pivots[s];
            if rk != 0.0 {
                for t in self.offsets[s]..self.offsets[s + 1] {
                    r[self.cols[t]] += self.vals[t] * rk;
                }
            }
        }
        let mut x = vec![0.0; b.len()];
        for s in (0..self.order.len()).rev() {
            let k = self.order[s];
            let mut acc = r[k];
            for t in self.offsets[s]..self.offsets[s + 1] {
                acc += self.vals[t] * x[self.cols[t]];
            }
            x[k] = acc / self.pivots[s];
        }
        x
    }
}

#[derive(Debug, Clone)]
enum Method {
    Direct(Elimination),
    Iterative,
}

/// A reusable solver for one grounded system.
#[derive(Debug, Clone)]
pub struct Solver {
    system: GroundedSystem,
    method: Method,
    policy: SolverPolicy,
}

impl Solver {
    pub fn new(system: GroundedSystem) -> Self {
        Self::with_policy(system, SolverPolicy::default())
    }

    pub fn with_policy(system: GroundedSystem, policy: SolverPolicy) -> Self {
        let method = if system.len() <= policy.direct_limit {
            Method::Direct(Elimination::factor(&system, policy.dense_limit))
        } else {
            Method::Iterative
        };
        Solver { system, method, policy }
    }

    pub fn system(&self) -> &GroundedSystem {
        &self.system
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.method, Method::Direct(_))
    }

    /// Solves `M x = b`, rejecting results whose residual is too large.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.system.len());
        if b.is_empty() {
            return Ok(Vec::new());
        }
        let x = match &self.method {
            Method::Direct(f) => f.solve(b),
            Method::Iterative => self.conjugate_gradient(b),
        };
        let residual = self.system.relative_residual(&x, b);
        if !(residual <= self.policy.residual_tolerance) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure { residual });
        }
        Ok(x)
    }

    fn conjugate_gradient(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let d = &self.system.diag;
        let mut x: Vec<f64> = (0..n).map(|i| b[i] / d[i]).collect();
        let mx = self.system.apply(&x);
        let mut r: Vec<f64> = (0..n).map(|i| b[i] - mx[i]).collect();
        let mut z: Vec<f64> = (0..n).map(|i| r[i] / d[i]).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let target = self.policy.cg_tolerance * dot(b, b).sqrt();
        let max_iter = 20 * n + 1000;
        for _ in 0..max_iter {
            if dot(&r, &r).sqrt() <= target {
                break;
            }
            let ap = self.system.apply(&p);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / d[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }
}
