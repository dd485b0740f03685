//! Dirichlet problems and potential-theoretic quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{current_of, Flow};
use crate::network::{Network, NodeSet};
use crate::par;
use crate::solver::{GroundedSystem, Solver};

/// Largest complement size for which [`green_function`] stores the full matrix.
pub const DENSE_GREEN_LIMIT: usize = 4096;

/// A real function on the nodes of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Self {
        Potential { values }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Potential { values: vec![value; n] }
    }

    /// The indicator function of `set`.
    pub fn indicator(n: usize, set: &NodeSet) -> Self {
        let mut values = vec![0.0; n];
        for x in set.iter() {
            values[x] = 1.0;
        }
        Potential { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The unknown nodes of a problem with `fixed` nodes, with their positions.
pub(crate) struct Interior {
    pub nodes: Vec<usize>,
    pub position: Vec<usize>,
}

impl Interior {
    pub fn new(n: usize, fixed: &[bool]) -> Self {
        let nodes: Vec<usize> = (0..n).filter(|&x| !fixed[x]).collect();
        let mut position = vec![usize::MAX; n];
        for (i, &x) in nodes.iter().enumerate() {
            position[x] = i;
        }
        Interior { nodes, position }
    }

    pub fn solver(&self, net: &Network) -> Solver {
        Solver::new(GroundedSystem::from_network(net, &self.nodes, &self.position))
    }

    /// Right-hand side `sum_{y fixed} c(x, y) f(y)` contributed by fixed values.
    pub fn boundary_rhs(&self, net: &Network, f: &[f64]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&x| {
                net.neighbors(x)
                    .filter(|&(y, _, _)| self.position[y] == usize::MAX)
                    .map(|(y, c, _)| c * f[y])
                    .sum()
            })
            .collect()
    }
}

/// Harmonic extension of boundary data given as `(node, value)` pairs.
///
/// The result is harmonic at every node without a prescribed value and lies
/// between the smallest and largest boundary value.
pub fn solve_dirichlet(net: &Network, boundary: &[(usize, f64)]) -> Result<Potential> {
    let n = net.node_count();
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut fixed = vec![false; n];
    let mut f = vec![0.0; n];
    for &(x, v) in boundary {
        if x >= n {
            return Err(Error::NodeOutOfRange { index: x, len: n });
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("boundary value {v} at node {x}")));
        }
        if fixed[x] {
            return Err(Error::DuplicateBoundary(x));
        }
        fixed[x] = true;
        f[x] = v;
    }
    let lo = boundary.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let hi = boundary.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let interior = Interior::new(n, &fixed);
    if interior.nodes.is_empty() {
        return Ok(Potential::new(f));
    }
    let rhs = interior.boundary_rhs(net, &f);
    let x = interior.solver(net).solve(&rhs)?;
    for (i, &node) in interior.nodes.iter().enumerate() {
        f[node] = x[i].clamp(lo, hi);
    }
    Ok(Potential::new(f))
}

fn check_pair(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    for s in [a, b] {
        if let Some(&bad) = s.as_slice().last().filter(|&&x| x >= net.node_count()) {
            return Err(Error::NodeOutOfRange { index: bad, len: net.node_count() });
        }
    }
    if let Some(x) = a.first_common(b) {
        return Err(Error::Overlap(x));
    }
    Ok(())
}

/// `V_{A,B}(x) = P_x(tau_A < tau_B)`.
pub fn equilibrium_potential(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<Potential> {
    check_pair(net, a, b)?;
    let boundary: Vec<(usize, f64)> = a.iter().map(|x| (x, 1.0)).chain(b.iter().map(|x| (x, 0.0))).collect();
    solve_dirichlet(net, &boundary)
}

/// Everything known about the equilibrium problem of a disjoint pair `(A, B)`.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub a: NodeSet,
    pub b: NodeSet,
    /// `V_{A,B}`.
    pub potential: Potential,
    pub capacity: f64,
    /// `c (V(x) - V(y))`.
    pub current: Flow,
    /// Divergence of the current at every node.
    pub charge: Vec<f64>,
    /// Normalized charge on `A`, zero elsewhere.
    pub harmonic_measure: Vec<f64>,
}

impl EquilibriumSolution {
    /// `P_a(tau_A^+ > tau_B^+)` for `a` in `A`.
    pub fn escape_probability(&self, net: &Network, a: usize) -> f64 {
        escape(net, &self.potential, a)
    }

    pub fn resistance(&self) -> f64 {
        1.0 / self.capacity
    }
}

/// `sum_y p(a, y) (1 - V(y))`, including the self-loop term.
fn escape(net: &Network, v: &Potential, a: usize) -> f64 {
    let f = v.values();
    let s: f64 = net.neighbors(a).map(|(y, c, _)| c * (1.0 - f[y])).sum::<f64>() + net.self_loop(a) * (1.0 - f[a]);
    s / net.mass(a)
}

pub fn equilibrium(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<EquilibriumSolution> {
    let potential = equilibrium_potential(net, a, b)?;
    let n = net.node_count();
    let am = a.mask(n);
    let f = potential.values();
    let mut charge = vec![0.0; n];
    for (x, q) in charge.iter_mut().enumerate() {
        *q = if am[x] {
            net.mass(x) * escape(net, &potential, x)
        } else {
            net.neighbors(x).map(|(y, c, _)| c * (f[x] - f[y])).sum()
        };
    }
    let capacity: f64 = a.iter().map(|x| charge[x]).sum();
    let harmonic_measure = (0..n).map(|x| if am[x] { charge[x] / capacity } else { 0.0 }).collect();
    let current = current_of(net, &potential);
    Ok(EquilibriumSolution { a: a.clone(), b: b.clone(), potential, capacity, current, charge, harmonic_measure })
}

pub fn capacity(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<f64> {
    Ok(equilibrium(net, a, b)?.capacity)
}

/// `R(A, B) = 1 / C(A, B)`.
pub fn effective_resistance(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<f64> {
    Ok(1.0 / capacity(net, a, b)?)
}

/// The Green function of the walk killed on `B`.
///
/// `G_B(x, y)` is the expected number of visits to `y` before `tau_B`, started
/// from `x` and counting time zero. It vanishes when `x` or `y` lies in `B`.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    b: NodeSet,
    interior: Vec<usize>,
    position: Vec<usize>,
    masses: Vec<f64>,
    storage: GreenStorage,
}

#[derive(Debug, Clone)]
enum GreenStorage {
    /// Column-major, `interior.len()` squared entries.
    Dense(Vec<f64>),
    OnDemand(Box<Solver>),
}

impl GreenMatrix {
    pub fn killing_set(&self) -> &NodeSet {
        &self.b
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, GreenStorage::Dense(_))
    }

    /// Column `y` over all nodes: `x -> G_B(x, y)`.
    pub fn column(&self, y: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.masses.len()];
        let j = self.position[y];
        if j == usize::MAX {
            return Ok(out);
        }
        let k = self.interior.len();
        match &self.storage {
            GreenStorage::Dense(g) => {
                for (i, &x) in self.interior.iter().enumerate() {
                    out[x] = g[j * k + i];
                }
            }
            GreenStorage::OnDemand(solver) => {
                let col = green_column(solver, j, self.masses[y])?;
                for (i, &x) in self.interior.iter().enumerate() {
                    out[x] = col[i];
                }
            }
        }
        Ok(out)
    }

    /// `G_B(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> Result<f64> {
        let (i, j) = (self.position[x], self.position[y]);
        if i == usize::MAX || j == usize::MAX {
            return Ok(0.0);
        }
        match &self.storage {
            GreenStorage::Dense(g) => Ok(g[j * self.interior.len() + i]),
            GreenStorage::OnDemand(_) => Ok(self.column(y)?[x]),
        }
    }
}

fn green_column(solver: &Solver, j: usize, mass: f64) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; solver.system().len()];
    rhs[j] = mass;
    solver.solve(&rhs)
}

/// Builds `G_B`; dense when `|B^c| <= 4096`, columns on demand otherwise.
pub fn green_function(net: &Network, b: &NodeSet) -> Result<GreenMatrix> {
    let n = net.node_count();
    if b.is_empty() || b.len() >= n {
        return Err(Error::EmptyTarget);
    }
    let interior = Interior::new(n, &b.mask(n));
    let solver = interior.solver(net);
    let k = interior.nodes.len();
    let masses = net.masses().to_vec();
    let storage = if k <= DENSE_GREEN_LIMIT {
        let cols = par::map_indices(k, |j| green_column(&solver, j, masses[interior.nodes[j]]));
        let mut g = Vec::with_capacity(k * k);
        for c in cols {
            g.extend(c?);
        }
        GreenStorage::Dense(g)
    } else {
        GreenStorage::OnDemand(Box::new(solver))
    };
    Ok(GreenMatrix { b: b.clone(), interior: interior.nodes, position: interior.position, masses, storage })
}

/// Both sides of the last-exit decomposition
/// `P_x(tau_A < tau_B) = sum_{a in A} G_B(x, a) P_a(tau_A^+ > tau_B^+)`.
pub fn last_exit_check(net: &Network, a: &NodeSet, b: &NodeSet, x: usize) -> Result<(f64, f64)> {
    let eq = equilibrium(net, a, b)?;
    if x >= net.node_count() {
        return Err(Error::NodeOutOfRange { index: x, len: net.node_count() });
    }
    let green = green_function(net, b)?;
    let mut rhs = 0.0;
    for y in a.iter() {
        rhs += green.get(x, y)? * eq.escape_probability(net, y);
    }
    Ok((eq.potential.get(x), rhs))
}

/// Expected visits to each node under `P_{nu_A}` before `tau_B`: `mu(x) V(x) / C`.
pub fn expected_visits(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<Vec<f64>> {
    let eq = equilibrium(net, a, b)?;
    Ok(eq.potential.values().iter().enumerate().map(|(x, v)| net.mass(x) * v / eq.capacity).collect())
}

/// `E_{nu_A}[tau_B] = mu(V_{A,B}) / C(A, B)` in steps.
pub fn hitting_time_from_harmonic(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<f64> {
    let eq = equilibrium(net, a, b)?;
    Ok(mu_of(net, &eq.potential) / eq.capacity)
}

fn mu_of(net: &Network, f: &Potential) -> f64 {
    net.masses().iter().zip(f.values()).map(|(m, v)| m * v).sum()
}

/// `x -> E_x[tau_B]` in steps of the walk.
pub fn hitting_times(net: &Network, b: &NodeSet) -> Result<Potential> {
    let n = net.node_count();
    if b.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if let Some(&bad) = b.as_slice().last().filter(|&&x| x >= n) {
        return Err(Error::NodeOutOfRange { index: bad, len: n });
    }
    let interior = Interior::new(n, &b.mask(n));
    let mut h = vec![0.0; n];
    if interior.nodes.is_empty() {
        return Ok(Potential::new(h));
    }
    let rhs: Vec<f64> = interior.nodes.iter().map(|&x| net.mass(x)).collect();
    let sol = interior.solver(net).solve(&rhs)?;
    for (i, &x) in interior.nodes.iter().enumerate() {
        h[x] = sol[i];
    }
    Ok(Potential::new(h))
}

/// `E_x[tau_B]` in steps of the walk.
pub fn hitting_time_exact(net: &Network, x: usize, b: &NodeSet) -> Result<f64> {
    if x >= net.node_count() {
        return Err(Error::NodeOutOfRange { index: x, len: net.node_count() });
    }
    Ok(hitting_times(net, b)?.get(x))
}

/// `C_{x,A} / C_{x,B}`, an upper bound on `P_x(tau_A < tau_B)` for `x` outside `A` and `B`.
pub fn pwc_bound(net: &Network, x: usize, a: &NodeSet, b: &NodeSet) -> Result<f64> {
    check_pair(net, a, b)?;
    if a.contains(x) || b.contains(x) {
        return Err(Error::XInTargets(x));
    }
    let sx = NodeSet::singleton(x);
    Ok(capacity(net, &sx, a)? / capacity(net, &sx, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{k2, p4, t3};

    fn s(xs: &[usize]) -> NodeSet {
        NodeSet::new(1000, xs.iter().copied()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn dirichlet_fixtures() {
        let f = solve_dirichlet(&p4(), &[(0, 1.0), (3, 0.0)]).unwrap();
        let want = [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
        assert!(f.values().iter().zip(want).all(|(a, b)| close(*a, b, 1e-15)));
        let c = solve_dirichlet(&t3(), &[(0, 7.5)]).unwrap();
        assert!(c.values().iter().all(|&v| v == 7.5));
        let t = solve_dirichlet(&t3(), &[(0, 1.0), (1, 0.0)]).unwrap();
        assert!(close(t.get(2), 0.5, 1e-15));
        assert_eq!(solve_dirichlet(&p4(), &[]).unwrap_err(), Error::EmptyBoundary);
        assert_eq!(solve_dirichlet(&p4(), &[(0, 1.0), (0, 0.0)]).unwrap_err(), Error::DuplicateBoundary(0));
    }

    #[test]
    fn capacities() {
        assert!(close(capacity(&k2(), &s(&[0]), &s(&[1])).unwrap(), 5.0, 1e-15));
        let eq = equilibrium(&p4(), &s(&[0]), &s(&[3])).unwrap();
        assert!(close(eq.capacity, 1.0 / 3.0, 1e-14));
        assert!(close(eq.charge[0], 1.0 / 3.0, 1e-14));
        assert!(close(eq.charge[3], -1.0 / 3.0, 1e-14));
        assert_eq!(eq.harmonic_measure[0], 1.0);
        assert!(close(capacity(&t3(), &s(&[0]), &s(&[1])).unwrap(), 1.5, 1e-14));
        assert!(close(effective_resistance(&p4(), &s(&[0]), &s(&[3])).unwrap(), 3.0, 1e-14));
        assert!(close(effective_resistance(&t3(), &s(&[0]), &s(&[1])).unwrap(), 2.0 / 3.0, 1e-14));
        assert_eq!(equilibrium(&p4(), &s(&[0, 1]), &s(&[1])).unwrap_err(), Error::Overlap(1));
        assert_eq!(equilibrium(&p4(), &NodeSet::default(), &s(&[1])).unwrap_err(), Error::EmptySet);
    }

    #[test]
    fn green_on_path() {
        let net = p4();
        let g = green_function(&net, &s(&[3])).unwrap();
        assert!(g.is_dense());
        assert!(close(g.get(0, 0).unwrap(), 3.0, 1e-13));
        assert!(close(g.get(1, 1).unwrap(), 4.0, 1e-13));
        assert!(close(g.get(0, 1).unwrap(), 4.0, 1e-13));
        assert!(close(g.get(1, 0).unwrap(), 2.0, 1e-13));
        let row: f64 = (0..4).map(|y| g.get(0, y).unwrap()).sum();
        assert!(close(row, 9.0, 1e-13));
        assert_eq!(g.get(3, 0).unwrap(), 0.0);
        assert_eq!(green_function(&net, &s(&[0, 1, 2, 3])).unwrap_err(), Error::EmptyTarget);
    }

    #[test]
    fn identities_on_path() {
        let net = p4();
        let (a, b) = (s(&[0]), s(&[3]));
        let (l, r) = last_exit_check(&net, &a, &b, 1).unwrap();
        assert!(close(l, 2.0 / 3.0, 1e-14) && close(r, 2.0 / 3.0, 1e-13));
        let (l, r) = last_exit_check(&net, &a, &b, 0).unwrap();
        assert!(close(l, 1.0, 1e-14) && close(r, 1.0, 1e-13));
        assert_eq!(last_exit_check(&net, &a, &b, 3).unwrap(), (0.0, 0.0));
        let v = expected_visits(&net, &a, &b).unwrap();
        assert!(close(v[1], 4.0, 1e-13) && close(v[0], 3.0, 1e-13) && v[3] == 0.0);
        assert!(close(hitting_time_from_harmonic(&net, &a, &b).unwrap(), 9.0, 1e-13));
        assert!(close(hitting_time_from_harmonic(&k2(), &s(&[0]), &s(&[1])).unwrap(), 1.0, 1e-15));
        assert!(close(hitting_time_exact(&net, 0, &b).unwrap(), 9.0, 1e-13));
        assert_eq!(hitting_time_exact(&net, 3, &b).unwrap(), 0.0);
        assert!(close(hitting_time_exact(&k2(), 0, &s(&[1])).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn pwc_on_fixtures() {
        let net = p4();
        let bound = pwc_bound(&net, 1, &s(&[0]), &s(&[3])).unwrap();
        // C_{1,0} = 1 and C_{1,3} = 1/2
        assert!(close(bound, 2.0, 1e-13));
        assert_eq!(pwc_bound(&net, 0, &s(&[0]), &s(&[3])).unwrap_err(), Error::XInTargets(0));
        let mid = pwc_bound(&t3(), 2, &s(&[0]), &s(&[1])).unwrap();
        assert!(mid >= 0.5);
    }
}
