//! Flows, divergence, and the two variational bounds on capacity.
//!
//! A [`Flow`] stores one value per undirected edge of its network, read in the
//! `lo -> hi` direction; the reverse direction is the negative, so
//! antisymmetry holds by construction.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::network::{Network, NodeSet};
use crate::potential::Potential;

/// Absolute tolerance on divergence residuals for unitary flows.
pub const UNITARY_TOL: f64 = 1e-10;

/// Relative tolerance of the cycle law in [`potential_of`].
pub const CYCLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    values: Vec<f64>,
}

impl Flow {
    pub fn zero(net: &Network) -> Self {
        Flow { values: vec![0.0; net.edge_count()] }
    }

    /// Values indexed by edge id, each read in the `lo -> hi` direction.
    pub fn from_edge_values(net: &Network, values: Vec<f64>) -> Result<Self> {
        if values.len() != net.edge_count() {
            return Err(Error::DimensionMismatch { expected: net.edge_count(), found: values.len() });
        }
        Ok(Flow { values })
    }

    /// Builds a flow from directed values `phi(x, y)`; repeated pairs add up.
    pub fn from_directed(net: &Network, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut flow = Flow::zero(net);
        for &(x, y, v) in entries {
            if v == 0.0 {
                continue;
            }
            let e = net.edge_id(x, y).ok_or(Error::InfiniteResistanceEdge { x, y })?;
            flow.values[e] += if x < y { v } else { -v };
        }
        Ok(flow)
    }

    /// Values indexed by edge id in the `lo -> hi` direction.
    pub fn edge_values(&self) -> &[f64] {
        &self.values
    }

    pub fn edge_value(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// `phi(x, y)`; zero when `x` and `y` are not adjacent.
    pub fn on(&self, net: &Network, x: usize, y: usize) -> f64 {
        match net.edge_id(x, y) {
            Some(e) if x < y => self.values[e],
            Some(e) => -self.values[e],
            None => 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Flow {
        Flow { values: self.values.iter().map(|v| v * factor).collect() }
    }

    pub fn add(&self, other: &Flow) -> Flow {
        Flow { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check(&self, net: &Network) -> Result<()> {
        if self.values.len() != net.edge_count() {
            return Err(Error::DimensionMismatch { expected: net.edge_count(), found: self.values.len() });
        }
        Ok(())
    }
}

/// `div_x phi = sum_y phi(x, y)`.
pub fn divergence(net: &Network, flow: &Flow, x: usize) -> f64 {
    net.neighbors(x)
        .map(|(y, _, e)| if x < y { flow.values[e] } else { -flow.values[e] })
        .sum()
}

/// Divergence at every node.
pub fn divergences(net: &Network, flow: &Flow) -> Vec<f64> {
    let mut div = vec![0.0; net.node_count()];
    for (e, edge) in net.edges().iter().enumerate() {
        div[edge.lo] += flow.values[e];
        div[edge.hi] -= flow.values[e];
    }
    div
}

/// Strength of a flow from `A` to `B`: sources only in `A`, sinks only in `B`.
pub fn strength(net: &Network, flow: &Flow, a: &NodeSet, b: &NodeSet) -> Result<f64> {
    flow.check(net)?;
    let div = divergences(net, flow);
    let tol = UNITARY_TOL * flow.max_abs().max(1.0);
    let (am, bm) = (a.mask(net.node_count()), b.mask(net.node_count()));
    let (mut out, mut inn) = (0.0, 0.0);
    for (x, &d) in div.iter().enumerate() {
        let bad = if am[x] {
            out += d;
            d < -tol
        } else if bm[x] {
            inn -= d;
            d > tol
        } else {
            d.abs() > tol
        };
        if bad {
            return Err(Error::NotAFlowFromAToB { node: x, divergence: d });
        }
    }
    Ok(f64::max(out, inn))
}

/// Flux out of `K` through its edge boundary, and the total divergence on `K`.
pub fn stokes_flux(net: &Network, flow: &Flow, k: &NodeSet) -> (f64, f64) {
    let inside = k.mask(net.node_count());
    let mut flux = 0.0;
    for (e, edge) in net.edges().iter().enumerate() {
        match (inside[edge.lo], inside[edge.hi]) {
            (true, false) => flux += flow.values[e],
            (false, true) => flux -= flow.values[e],
            _ => {}
        }
    }
    let div = divergences(net, flow);
    (flux, k.iter().map(|x| div[x]).sum())
}

/// Ohm's law: `i(x, y) = c(x, y) (V(x) - V(y))`.
pub fn current_of(net: &Network, v: &Potential) -> Flow {
    let f = v.values();
    Flow { values: net.edges().iter().map(|e| e.conductance * (f[e.lo] - f[e.hi])).collect() }
}

/// Integrates `r phi` along a BFS tree rooted at node 0, giving 0 at the root.
///
/// Fails with the worst non-tree cycle when the cycle law does not hold.
pub fn potential_of(net: &Network, flow: &Flow) -> Result<Potential> {
    flow.check(net)?;
    let n = net.node_count();
    let mut v = vec![0.0; n];
    let mut parent = vec![usize::MAX; n];
    let mut tree_edge = vec![false; net.edge_count()];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for (y, c, e) in net.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                tree_edge[e] = true;
                v[y] = v[x] - flow.on(net, x, y) / c;
                queue.push_back(y);
            }
        }
    }
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut worst: Option<(usize, f64)> = None;
    for (e, edge) in net.edges().iter().enumerate() {
        if tree_edge[e] {
            continue;
        }
        let residual = (v[edge.lo] - v[edge.hi] - flow.values[e] / edge.conductance).abs();
        if residual > CYCLE_TOL * scale && residual > worst.map_or(0.0, |w| w.1) {
            worst = Some((e, residual));
        }
    }
    match worst {
        None => Ok(Potential::new(v)),
        Some((e, residual)) => {
            let edge = net.edge(e);
            Err(Error::CycleViolation { cycle: tree_cycle(&parent, edge.lo, edge.hi), residual })
        }
    }
}

fn tree_cycle(parent: &[usize], a: usize, b: usize) -> Vec<usize> {
    let up = |mut x: usize| {
        let mut p = vec![x];
        while parent[x] != usize::MAX {
            x = parent[x];
            p.push(x);
        }
        p
    };
    let (pa, pb) = (up(a), up(b));
    let mut i = pa.len();
    let mut j = pb.len();
    while i > 1 && j > 1 && pa[i - 2] == pb[j - 2] {
        i -= 1;
        j -= 1;
    }
    let mut cycle: Vec<usize> = pa[..i].to_vec();
    cycle.extend(pb[..j - 1].iter().rev());
    cycle.push(a);
    cycle
}

/// `D(phi) = 1/2 sum_e r(e) phi(e)^2` over directed edges.
pub fn energy(net: &Network, flow: &Flow) -> Result<f64> {
    flow.check(net)?;
    Ok(net.edges().iter().zip(&flow.values).map(|(e, v)| v * v / e.conductance).sum())
}

/// `D(f) = 1/2 sum_{x,y} c(x,y) (f(x) - f(y))^2`.
pub fn dirichlet_energy(net: &Network, f: &Potential) -> f64 {
    let v = f.values();
    net.edges().iter().map(|e| e.conductance * (v[e.lo] - v[e.hi]).powi(2)).sum()
}

/// `D(f)`, an upper bound on `C(A, B)` for any `f` equal to 1 on `A` and 0 on `B`.
pub fn dirichlet_upper_bound(net: &Network, a: &NodeSet, b: &NodeSet, f: &Potential) -> Result<f64> {
    if f.len() != net.node_count() {
        return Err(Error::DimensionMismatch { expected: net.node_count(), found: f.len() });
    }
    for (set, expected) in [(a, 1.0), (b, 0.0)] {
        for x in set.iter() {
            if f.get(x) != expected {
                return Err(Error::BadBoundaryValues { node: x, value: f.get(x), expected });
            }
        }
    }
    Ok(dirichlet_energy(net, f))
}

/// Checks that `flow` is unitary from `A` to `B`.
pub fn check_unitary(net: &Network, flow: &Flow, a: &NodeSet, b: &NodeSet) -> Result<()> {
    flow.check(net)?;
    let div = divergences(net, flow);
    let (am, bm) = (a.mask(net.node_count()), b.mask(net.node_count()));
    let (mut out, mut inn) = (0.0, 0.0);
    for (x, &d) in div.iter().enumerate() {
        if am[x] {
            out += d;
        } else if bm[x] {
            inn += d;
        } else if d.abs() > UNITARY_TOL {
            return Err(Error::NotUnitary { reason: format!("divergence {d:e} at interior node {x}") });
        }
    }
    if (out - 1.0).abs() > UNITARY_TOL {
        return Err(Error::NotUnitary { reason: format!("total divergence on the source set is {out}") });
    }
    if (inn + 1.0).abs() > UNITARY_TOL {
        return Err(Error::NotUnitary { reason: format!("total divergence on the sink set is {inn}") });
    }
    Ok(())
}

/// `1 / D(phi)`, a lower bound on `C(A, B)` for any unitary flow from `A` to `B`.
pub fn thomson_lower_bound(net: &Network, a: &NodeSet, b: &NodeSet, flow: &Flow) -> Result<f64> {
    check_unitary(net, flow, a, b)?;
    Ok(1.0 / energy(net, flow)?)
}

/// Averages the unit flows along weighted paths.
pub fn flow_from_paths(net: &Network, paths: &[(Vec<usize>, f64)]) -> Result<Flow> {
    let sum: f64 = paths.iter().map(|p| p.1).sum();
    if paths.iter().any(|p| !(p.1 >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightsNotNormalized { sum });
    }
    let mut flow = Flow::zero(net);
    for (k, (path, w)) in paths.iter().enumerate() {
        if path.is_empty() {
            return Err(Error::BrokenPath { path: k, step: 0 });
        }
        if let Some(&bad) = path.iter().find(|&&x| x >= net.node_count()) {
            return Err(Error::NodeOutOfRange { index: bad, len: net.node_count() });
        }
        for (step, pair) in path.windows(2).enumerate() {
            let e = net.edge_id(pair[0], pair[1]).ok_or(Error::BrokenPath { path: k, step })?;
            flow.values[e] += if pair[0] < pair[1] { *w } else { -*w };
        }
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{p4, t3};
    use crate::potential::equilibrium;

    fn set(xs: &[usize]) -> NodeSet {
        NodeSet::new(100, xs.iter().copied()).unwrap()
    }

    #[test]
    fn p4_current() {
        let net = p4();
        let eq = equilibrium(&net, &set(&[0]), &set(&[3])).unwrap();
        let i = &eq.current;
        assert!((divergence(&net, i, 1)).abs() < 1e-15);
        assert!((divergence(&net, i, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((strength(&net, i, &set(&[0]), &set(&[3])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let (flux, div) = stokes_flux(&net, i, &set(&[0, 1]));
        assert!((flux - 1.0 / 3.0).abs() < 1e-15 && (div - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(stokes_flux(&net, i, &NodeSet::default()), (0.0, 0.0));
        assert!((energy(&net, i).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let unit = i.scaled(3.0);
        assert!((energy(&net, &unit).unwrap() - 3.0).abs() < 1e-12);
        assert!((thomson_lower_bound(&net, &set(&[0]), &set(&[3]), &unit).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((strength(&net, &i.scaled(2.0), &set(&[0]), &set(&[3])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_bounds() {
        let net = t3();
        let (a, b) = (set(&[0]), set(&[1]));
        let direct = flow_from_paths(&net, &[(vec![0, 1], 1.0)]).unwrap();
        assert_eq!(thomson_lower_bound(&net, &a, &b, &direct).unwrap(), 1.0);
        let split = flow_from_paths(&net, &[(vec![0, 1], 2.0 / 3.0), (vec![0, 2, 1], 1.0 / 3.0)]).unwrap();
        assert!((thomson_lower_bound(&net, &a, &b, &split).unwrap() - 1.5).abs() < 1e-14);
        let half = flow_from_paths(&net, &[(vec![0, 1], 0.5), (vec![0, 2, 1], 0.5)]).unwrap();
        assert_eq!(half.on(&net, 0, 1), 0.5);
        assert_eq!(half.on(&net, 0, 2), 0.5);
        assert_eq!(half.on(&net, 2, 1), 0.5);
        assert_eq!(half.on(&net, 1, 2), -0.5);
        let circulation = Flow::from_directed(&net, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        match potential_of(&net, &circulation) {
            Err(Error::CycleViolation { cycle, residual }) => {
                assert!((residual - 3.0).abs() < 1e-14);
                assert_eq!(cycle.len(), 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            thomson_lower_bound(&net, &a, &b, &direct.scaled(0.5)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn path_construction_errors() {
        let net = p4();
        assert_eq!(
            flow_from_paths(&net, &[(vec![0, 2], 1.0)]).unwrap_err(),
            Error::BrokenPath { path: 0, step: 0 }
        );
        assert!(matches!(
            flow_from_paths(&net, &[(vec![0, 1], 0.5)]),
            Err(Error::WeightsNotNormalized { .. })
        ));
        let fwd = flow_from_paths(&net, &[(vec![0, 1, 2, 3], 1.0)]).unwrap();
        let back = flow_from_paths(&net, &[(vec![3, 2, 1, 0], 1.0)]).unwrap();
        assert_eq!(back, fwd.scaled(-1.0));
        assert!(matches!(Flow::from_directed(&net, &[(0, 3, 1.0)]), Err(Error::InfiniteResistanceEdge { .. })));
    }

    #[test]
    fn dirichlet_bounds_on_path() {
        let net = p4();
        let (a, b) = (set(&[0]), set(&[3]));
        let ind = Potential::new(vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(dirichlet_upper_bound(&net, &a, &b, &ind).unwrap(), 1.0);
        let lin = Potential::new(vec![1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert!((dirichlet_upper_bound(&net, &a, &b, &lin).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let bad = Potential::new(vec![0.5, 0.0, 0.0, 0.0]);
        assert!(matches!(dirichlet_upper_bound(&net, &a, &b, &bad), Err(Error::BadBoundaryValues { node: 0, .. })));
        assert_eq!(dirichlet_energy(&net, &Potential::new(vec![2.0; 4])), 0.0);
        let z = potential_of(&net, &Flow::zero(&net)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }
}
