//! Boxes of `Z^d` with the exterior shorted to a single node.
//!
//! The box `[-n, n]^d` carries the simple random walk: every lattice edge has
//! conductance `1/(2d)`, and every edge leaving the box is redirected to the
//! boundary node `∂`, which has no self-loop.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{check_unitary, energy, flow_from_paths, Flow};
use crate::network::{Network, NodeSet};
use crate::par;
use crate::potential::{capacity, Potential};

/// Largest box (interior nodes) accepted by [`capacity_sequence`].
pub const NODE_BUDGET: usize = 200_000;

#[derive(Debug, Clone)]
pub struct BoxNetwork {
    pub d: usize,
    pub n: usize,
    pub network: Network,
}

impl BoxNetwork {
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn interior_count(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    /// The boundary node `∂` (last index).
    pub fn boundary(&self) -> usize {
        self.interior_count()
    }

    /// Index of the lattice point `x`, each coordinate in `[-n, n]`.
    pub fn index(&self, x: &[i64]) -> usize {
        let s = self.side() as i64;
        x.iter().fold(0i64, |acc, &c| acc * s + (c + self.n as i64)) as usize
    }

    pub fn point(&self, mut i: usize) -> Vec<i64> {
        let s = self.side();
        let mut x = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            x[k] = (i % s) as i64 - self.n as i64;
            i /= s;
        }
        x
    }

    pub fn origin(&self) -> usize {
        self.index(&vec![0; self.d])
    }

    /// `C(0, ∂)`.
    pub fn capacity(&self) -> Result<f64> {
        capacity(&self.network, &NodeSet::singleton(self.origin()), &NodeSet::singleton(self.boundary()))
    }
}

/// The box `[-n, n]^d` with its exterior collapsed.
pub fn box_network(d: usize, n: usize) -> Result<BoxNetwork> {
    if !(1..=3).contains(&d) {
        return Err(Error::BadDimension(d));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("box half-width must be at least 1".into()));
    }
    let side = 2 * n + 1;
    let count = side.pow(d as u32);
    let c = 1.0 / (2 * d) as f64;
    let boundary = count;
    let mut edges = Vec::with_capacity(d * count + 2 * d * side.pow(d as u32 - 1));
    let mut to_boundary = vec![0usize; count];
    let mut stride = 1;
    for _axis in 0..d {
        for i in 0..count {
            let coord = (i / stride) % side;
            if coord + 1 < side {
                edges.push((i, i + stride, c));
            } else {
                to_boundary[i] += 1;
            }
            if coord == 0 {
                to_boundary[i] += 1;
            }
        }
        stride *= side;
    }
    for (i, &k) in to_boundary.iter().enumerate() {
        if k > 0 {
            edges.push((i, boundary, k as f64 * c));
        }
    }
    let network = Network::from_edges(count + 1, edges)?;
    Ok(BoxNetwork { d, n, network })
}

/// `C(0, ∂)` for the boxes of half-width `ns`, solved concurrently.
pub fn capacities(d: usize, ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    if !(1..=3).contains(&d) {
        return Err(Error::BadDimension(d));
    }
    for &n in ns {
        let size = (2 * n + 1).pow(d as u32);
        if size > NODE_BUDGET {
            return Err(Error::SizeLimit { what: "lattice box", size, limit: NODE_BUDGET });
        }
    }
    par::map_slice(ns, |&n| Ok((n, box_network(d, n)?.capacity()?))).into_iter().collect()
}

/// `C(0, ∂)` for `n = 1..=n_max`.
pub fn capacity_sequence(d: usize, n_max: usize) -> Result<Vec<(usize, f64)>> {
    let ns: Vec<usize> = (1..=n_max).collect();
    capacities(d, &ns)
}

/// `1 - ln(1 + |x|_inf) / ln(1 + n)` on the planar box, zero on `∂`.
pub fn log_test_function(n: usize) -> Result<(BoxNetwork, Potential)> {
    let b = box_network(2, n)?;
    let ln = (1.0 + n as f64).ln();
    let mut f = vec![0.0; b.network.node_count()];
    for (i, v) in f.iter_mut().enumerate().take(b.interior_count()) {
        let r = b.point(i).iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        *v = (1.0 - (1.0 + r as f64).ln() / ln).max(0.0);
    }
    Ok((b, Potential::new(f)))
}

/// `2 (1 + ln(n + 1)) / ln(1 + n)^2`.
pub fn log_energy_bound(n: usize) -> f64 {
    let l = (1.0 + n as f64).ln();
    2.0 * (1.0 + l) / (l * l)
}

/// `n` directions spread over the unit sphere (Fibonacci lattice).
pub fn sphere_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn ray_path(b: &BoxNetwork, theta: [f64; 3]) -> Vec<usize> {
    let n = b.n as i64;
    let mut p = [0i64; 3];
    let mut path = vec![b.index(&p)];
    let dist = |q: &[i64; 3]| {
        let t: f64 = (0..3).map(|i| q[i] as f64 * theta[i]).sum();
        (0..3).map(|i| (q[i] as f64 - t * theta[i]).powi(2)).sum::<f64>()
    };
    while p.iter().map(|c| c.abs()).max().unwrap() < n {
        let mut best: Option<([i64; 3], f64)> = None;
        for i in 0..3 {
            if theta[i] == 0.0 {
                continue;
            }
            let mut q = p;
            q[i] += if theta[i] > 0.0 { 1 } else { -1 };
            let dq = dist(&q);
            if best.is_none_or(|b| dq < b.1) {
                best = Some((q, dq));
            }
        }
        p = best.expect("nonzero direction").0;
        path.push(b.index(&p));
    }
    path.push(b.boundary());
    path
}

/// Radial unit flow from the origin to `∂` in the 3D box, averaged over
/// monotone lattice paths that follow `directions` rays.
pub fn radial_flow_with(n: usize, directions: usize) -> Result<(BoxNetwork, Flow)> {
    if n < 2 {
        return Err(Error::InvalidParameter("radial flow needs n >= 2".into()));
    }
    let b = box_network(3, n)?;
    let dirs = sphere_directions(directions);
    let w = 1.0 / directions as f64;
    let paths: Vec<(Vec<usize>, f64)> = par::map_slice(&dirs, |&t| (ray_path(&b, t), w));
    let flow = flow_from_paths(&b.network, &paths)?;
    check_unitary(&b.network, &flow, &NodeSet::singleton(b.origin()), &NodeSet::singleton(b.boundary()))?;
    Ok((b, flow))
}

/// [`radial_flow_with`] using 20000 directions.
pub fn radial_flow(n: usize) -> Result<(BoxNetwork, Flow)> {
    radial_flow_with(n, 20_000)
}

/// One row of a recurrence experiment.
#[derive(Debug, Clone, Serialize)]
pub struct LatticeRow {
    pub d: usize,
    pub n: usize,
    pub capacity: f64,
    /// `D(f_n)` of the logarithmic test function (planar boxes).
    pub upper_bound: Option<f64>,
    /// `1 / D(phi)` of the radial flow (3D boxes).
    pub lower_bound: Option<f64>,
    pub wall_time_ms: f64,
    /// `2 (1 + ln(n+1)) / ln(1+n)^2` for planar boxes, `1/(n+1)` on the line.
    pub closed_form: Option<f64>,
}

/// Capacity together with the dimension-specific certificate.
pub fn experiment_row(d: usize, n: usize) -> Result<LatticeRow> {
    let start = Instant::now();
    let b = box_network(d, n)?;
    let size = b.interior_count();
    if size > NODE_BUDGET {
        return Err(Error::SizeLimit { what: "lattice box", size, limit: NODE_BUDGET });
    }
    let capacity = b.capacity()?;
    let (mut upper_bound, mut lower_bound, mut closed_form) = (None, None, None);
    match d {
        1 => closed_form = Some(1.0 / (n as f64 + 1.0)),
        2 => {
            let (b, f) = log_test_function(n)?;
            upper_bound = Some(crate::flow::dirichlet_energy(&b.network, &f));
            closed_form = Some(log_energy_bound(n));
        }
        _ if n >= 2 => {
            let (b, phi) = radial_flow(n)?;
            lower_bound = Some(1.0 / energy(&b.network, &phi)?);
        }
        _ => {}
    }
    Ok(LatticeRow {
        d,
        n,
        capacity,
        upper_bound,
        lower_bound,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        closed_form,
    })
}

/// Rows for several half-widths, computed concurrently.
pub fn experiment(d: usize, ns: &[usize]) -> Result<Vec<LatticeRow>> {
    if !(1..=3).contains(&d) {
        return Err(Error::BadDimension(d));
    }
    par::map_slice(ns, |&n| experiment_row(d, n)).into_iter().collect()
}
