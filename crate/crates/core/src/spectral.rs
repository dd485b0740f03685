//! Spectral gap, Cheeger constant, Poincaré bounds and mixing times.
//!
//! Throughout this module the reversible measure is normalized to a
//! probability `pi = mu / mu(X)` and the Dirichlet form is taken with respect
//! to the normalized conductances `c / mu(X)`. Gaps refer to the transition
//! kernel `P`, whose eigenvalues are computed from the symmetric matrix
//! `S = D^{1/2} P D^{-1/2}` with `D = diag(pi)`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::dirichlet_energy;
use crate::network::{Network, NodeSet};
use crate::par;
use crate::potential::{capacity, Interior, Potential};

/// Largest chain decomposed densely.
pub const DENSE_SPECTRUM_LIMIT: usize = 4096;
/// Largest chain for exhaustive Cheeger search.
pub const CHEEGER_LIMIT: usize = 20;
/// Largest chain for all-pairs resistances.
pub const RESISTANCE_LIMIT: usize = 512;
/// Largest chain for exact mixing times.
pub const MIXING_LIMIT: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Eigenvalues of `P` in descending order; only `1`, `lambda_1` and the
    /// smallest eigenvalue when `complete` is false.
    pub eigenvalues: Vec<f64>,
    /// `1 - lambda_1`.
    pub gap: f64,
    /// `max(|lambda_1|, |lambda_min|)`.
    pub lambda_bar: f64,
    /// The smallest eigenvalue is `-1` (bipartite chain).
    pub periodic: bool,
    pub complete: bool,
    /// Eigenfunction of `lambda_1` (in `l^2(pi)`), when computed densely.
    #[serde(skip)]
    pub second_eigenvector: Option<Potential>,
}

fn symmetrized(net: &Network) -> DMatrix<f64> {
    let n = net.node_count();
    let m = net.masses();
    let mut s = DMatrix::zeros(n, n);
    for x in 0..n {
        s[(x, x)] = net.self_loop(x) / m[x];
    }
    for e in net.edges() {
        let v = e.conductance / (m[e.lo] * m[e.hi]).sqrt();
        s[(e.lo, e.hi)] = v;
        s[(e.hi, e.lo)] = v;
    }
    s
}

fn sym_apply(net: &Network, v: &[f64]) -> Vec<f64> {
    let m = net.masses();
    par::map_indices(net.node_count(), |x| {
        let mut acc = net.self_loop(x) / m[x] * v[x];
        for (y, c, _) in net.neighbors(x) {
            acc += c / (m[x] * m[y]).sqrt() * v[y];
        }
        acc
    })
}

/// Eigenvalues of the transition kernel.
pub fn spectrum(net: &Network) -> Result<SpectrumReport> {
    let n = net.node_count();
    if n <= DENSE_SPECTRUM_LIMIT {
        dense_spectrum(net)
    } else {
        lanczos_spectrum(net, 300)
    }
}

fn dense_spectrum(net: &Network) -> Result<SpectrumReport> {
    let n = net.node_count();
    let eig = SymmetricEigen::new(symmetrized(net));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i].clamp(-1.0, 1.0)).collect();
    let second_eigenvector = (n > 1).then(|| {
        let u = eig.eigenvectors.column(idx[1]);
        Potential::new((0..n).map(|x| u[x] / net.mass(x).sqrt()).collect())
    });
    Ok(report(eigenvalues, true, second_eigenvector))
}

fn report(eigenvalues: Vec<f64>, complete: bool, second_eigenvector: Option<Potential>) -> SpectrumReport {
    let l1 = eigenvalues.get(1).copied().unwrap_or(1.0);
    let lmin = *eigenvalues.last().expect("nonempty");
    let lmin = if eigenvalues.len() > 1 { lmin } else { 1.0 };
    SpectrumReport {
        gap: 1.0 - l1,
        lambda_bar: l1.abs().max(lmin.abs()),
        periodic: (lmin + 1.0).abs() < 1e-10,
        complete,
        eigenvalues,
        second_eigenvector,
    }
}

/// Extremal eigenvalues by Lanczos with full reorthogonalization on the
/// complement of the stationary direction.
fn lanczos_spectrum(net: &Network, steps: usize) -> Result<SpectrumReport> {
    let n = net.node_count();
    let total = net.total_mass();
    let root: Vec<f64> = net.masses().iter().map(|m| (m / total).sqrt()).collect();
    let project = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in std::iter::once(&root).chain(basis.iter()) {
                let d: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(b).for_each(|(a, b)| *a -= d * b);
            }
        }
    };
    let mut v: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5).collect();
    project(&mut v, &[]);
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    let mut basis = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let steps = steps.min(n - 1);
    for k in 0..steps {
        let mut w = sym_apply(net, &basis[k]);
        let a: f64 = w.iter().zip(&basis[k]).map(|(x, y)| x * y).sum();
        alpha.push(a);
        project(&mut w, &basis);
        let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if k + 1 == steps || b < 1e-13 {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let ev = SymmetricEigen::new(t).eigenvalues;
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(1.0);
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min).max(-1.0);
    Ok(report(vec![1.0, hi, lo], false, None))
}

/// `pi`-variance of `f`.
fn variance(net: &Network, f: &Potential) -> f64 {
    let total = net.total_mass();
    let m = net.masses();
    let mean: f64 = f.values().iter().zip(m).map(|(v, w)| v * w).sum::<f64>() / total;
    f.values().iter().zip(m).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total
}

/// `D(f) / Var(f)`, an upper bound on the gap for every non-constant `f`.
pub fn variational_gap_check(net: &Network, f: &Potential) -> Result<f64> {
    if f.len() != net.node_count() {
        return Err(Error::DimensionMismatch { expected: net.node_count(), found: f.len() });
    }
    let var = variance(net, f);
    let scale = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(var > 1e-28 * scale * scale) {
        return Err(Error::ConstantFunction);
    }
    Ok(dirichlet_energy(net, f) / net.total_mass() / var)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerReport {
    pub constant: f64,
    /// A minimizing set with `pi(A) <= 1/2`.
    pub set: NodeSet,
}

/// `I = min_{pi(A) <= 1/2} C(A, A^c) / pi(A)` by exhaustive enumeration.
pub fn cheeger_constant(net: &Network) -> Result<CheegerReport> {
    let n = net.node_count();
    if n > CHEEGER_LIMIT {
        return Err(Error::SizeLimit { what: "exhaustive Cheeger search", size: n, limit: CHEEGER_LIMIT });
    }
    let half = 0.5 * net.total_mass() * (1.0 + 1e-12);
    let mut inside = vec![false; n];
    let (mut boundary, mut mass) = (0.0, 0.0);
    let mut best = (f64::INFINITY, 0u64);
    let mut code: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let entering = !inside[v];
        let mut delta = 0.0;
        for (y, c, _) in net.neighbors(v) {
            delta += if inside[y] { -c } else { c };
        }
        inside[v] = entering;
        code ^= 1 << v;
        if entering {
            boundary += delta;
            mass += net.mass(v);
        } else {
            boundary -= delta;
            mass -= net.mass(v);
        }
        if code != 0 && mass <= half {
            // recompute exactly to avoid drift in the accumulated sums
            let ratio = boundary.max(0.0) / mass;
            if ratio < best.0 * (1.0 + 1e-12) {
                let exact = set_ratio(net, code);
                if exact < best.0 {
                    best = (exact, code);
                }
            }
        }
    }
    let set = NodeSet::from_mask(&(0..n).map(|x| best.1 >> x & 1 == 1).collect::<Vec<_>>());
    Ok(CheegerReport { constant: best.0, set })
}

fn set_ratio(net: &Network, code: u64) -> f64 {
    let inside = |x: usize| code >> x & 1 == 1;
    let boundary: f64 = net.edges().iter().filter(|e| inside(e.lo) != inside(e.hi)).map(|e| e.conductance).sum();
    let mass: f64 = (0..net.node_count()).filter(|&x| inside(x)).map(|x| net.mass(x)).sum();
    boundary / mass
}

/// `(I^2 / 2, 2 I)`.
pub fn cheeger_bounds(net: &Network) -> Result<(f64, f64)> {
    let i = cheeger_constant(net)?.constant;
    Ok((i * i / 2.0, 2.0 * i))
}

/// `C(A, B) / (pi(A) pi(B))`, an upper bound on the gap.
pub fn potential_gap_upper(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<f64> {
    let c = capacity(net, a, b)?;
    Ok(c * net.total_mass() / (net.mass_of(a) * net.mass_of(b)))
}

/// All-pairs effective resistances, row-major `n x n`.
pub fn resistance_matrix(net: &Network) -> Result<Vec<f64>> {
    let n = net.node_count();
    if n > RESISTANCE_LIMIT {
        return Err(Error::SizeLimit { what: "all-pairs resistance", size: n, limit: RESISTANCE_LIMIT });
    }
    let mut fixed = vec![false; n];
    fixed[0] = true;
    let interior = Interior::new(n, &fixed);
    let solver = interior.solver(net);
    let k = n - 1;
    let cols = par::map_indices(k, |j| {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        solver.solve(&e)
    });
    // grounded inverse with node 0 at potential zero
    let mut g = vec![0.0; n * n];
    for (j, c) in cols.into_iter().enumerate() {
        for (i, v) in c?.into_iter().enumerate() {
            g[(i + 1) * n + j + 1] = v;
        }
    }
    let mut r = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                r[x * n + y] = g[x * n + x] + g[y * n + y] - g[x * n + y] - g[y * n + x];
            }
        }
    }
    Ok(r)
}

/// `1/2 sum_{x,y} pi(x) pi(y) R(x,y)` with normalized resistances, an upper bound on `1 / gap`.
pub fn resistance_poincare(net: &Network) -> Result<f64> {
    let n = net.node_count();
    let r = resistance_matrix(net)?;
    let m = net.masses();
    let mut sum = 0.0;
    for x in 0..n {
        for y in 0..n {
            sum += m[x] * m[y] * r[x * n + y];
        }
    }
    Ok(0.5 * sum / net.total_mass())
}

/// Weights `w_{x,y}(e)` of the flow Poincaré inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `1` on the support.
    W1,
    /// `|phi|`.
    W2,
    /// `|r phi|`.
    W3,
    /// `r phi^2`.
    W4,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 4] = [WeightScheme::W1, WeightScheme::W2, WeightScheme::W3, WeightScheme::W4];

    fn weight(self, phi: f64, r: f64) -> f64 {
        match self {
            WeightScheme::W1 => 1.0,
            WeightScheme::W2 => phi.abs(),
            WeightScheme::W3 => (r * phi).abs(),
            WeightScheme::W4 => r * phi * phi,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::W1 => "w1",
            WeightScheme::W2 => "w2",
            WeightScheme::W3 => "w3",
            WeightScheme::W4 => "w4",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w1" => Ok(WeightScheme::W1),
            "w2" => Ok(WeightScheme::W2),
            "w3" => Ok(WeightScheme::W3),
            "w4" => Ok(WeightScheme::W4),
            other => Err(Error::InvalidParameter(format!("unknown weight scheme `{other}`"))),
        }
    }
}

/// One unitary flow per ordered pair of distinct nodes.
///
/// Each flow is a list of `(edge id, value)` with the value read in the
/// `lo -> hi` direction of the edge.
#[derive(Debug, Clone)]
pub struct PathFamily {
    n: usize,
    flows: Vec<Vec<(usize, f64)>>,
}

impl PathFamily {
    /// BFS geodesics; among shortest paths the one through the smallest
    /// predecessor indices is chosen.
    pub fn geodesic(net: &Network) -> Self {
        let n = net.node_count();
        let trees = par::map_indices(n, |x| bfs_parents(net, x));
        let mut flows = vec![Vec::new(); n * n];
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let parent = &trees[x];
                let mut path = Vec::new();
                let mut z = y;
                while z != x {
                    let p = parent[z];
                    let e = net.edge_id(p, z).expect("tree edge");
                    path.push((e, if p < z { 1.0 } else { -1.0 }));
                    z = p;
                }
                path.reverse();
                flows[x * n + y] = path;
            }
        }
        PathFamily { n, flows }
    }

    /// A family from explicit unitary flows, keyed by ordered pair.
    pub fn from_flows(net: &Network, flows: Vec<((usize, usize), Vec<(usize, f64)>)>) -> Result<Self> {
        let n = net.node_count();
        let mut table: Vec<Option<Vec<(usize, f64)>>> = vec![None; n * n];
        for ((x, y), flow) in flows {
            if x >= n || y >= n {
                return Err(Error::NodeOutOfRange { index: x.max(y), len: n });
            }
            let mut div = std::collections::BTreeMap::new();
            for &(e, v) in &flow {
                if e >= net.edge_count() {
                    return Err(Error::NodeOutOfRange { index: e, len: net.edge_count() });
                }
                if !v.is_finite() {
                    return Err(Error::WeightViolation { x, y });
                }
                let edge = net.edge(e);
                *div.entry(edge.lo).or_insert(0.0) += v;
                *div.entry(edge.hi).or_insert(0.0) -= v;
            }
            for (&z, &d) in &div {
                let want = if z == x { 1.0 } else if z == y { -1.0 } else { 0.0 };
                if (d - want).abs() > crate::flow::UNITARY_TOL {
                    return Err(Error::NotUnitary { reason: format!("flow for pair ({x}, {y}) has divergence {d} at {z}") });
                }
            }
            table[x * n + y] = Some(flow);
        }
        let mut out = Vec::with_capacity(n * n);
        for (k, f) in table.into_iter().enumerate() {
            let (x, y) = (k / n, k % n);
            match f {
                Some(f) => out.push(f),
                None if x == y => out.push(Vec::new()),
                None => return Err(Error::IncompleteFamily { x, y }),
            }
        }
        Ok(PathFamily { n, flows: out })
    }

    pub fn flow(&self, x: usize, y: usize) -> &[(usize, f64)] {
        &self.flows[x * self.n + y]
    }
}

fn bfs_parents(net: &Network, root: usize) -> Vec<usize> {
    let n = net.node_count();
    let mut parent = vec![usize::MAX; n];
    parent[root] = root;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for (y, _, _) in net.neighbors(x) {
            if parent[y] == usize::MAX {
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    parent
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub scheme: WeightScheme,
    /// Upper bound on `1 / gap`.
    pub value: f64,
    /// The directed edge realizing the maximum.
    pub bottleneck: (usize, usize),
}

/// `max_e sum_{x,y: phi_xy(e) > 0} pi(x) pi(y) w_xy(e) D_xy`, with
/// `D_xy = sum_{phi_xy > 0} (r / w) phi_xy^2`, an upper bound on `1 / gap`.
pub fn flow_poincare(net: &Network, family: &PathFamily, scheme: WeightScheme) -> Result<PoincareReport> {
    let n = net.node_count();
    if family.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: family.n });
    }
    let total = net.total_mass();
    let pi: Vec<f64> = net.masses().iter().map(|m| m / total).collect();
    let rnorm: Vec<f64> = net.edges().iter().map(|e| total / e.conductance).collect();
    let loads = par::map_indices(n, |x| -> Result<Vec<f64>> {
        let mut load = vec![0.0; 2 * net.edge_count()];
        for y in (0..n).filter(|&y| y != x) {
            let flow = family.flow(x, y);
            let mut d = 0.0;
            for &(e, v) in flow {
                if v == 0.0 {
                    continue;
                }
                let w = scheme.weight(v, rnorm[e]);
                if !(w > 0.0) || !w.is_finite() {
                    return Err(Error::WeightViolation { x, y });
                }
                d += rnorm[e] / w * v * v;
            }
            for &(e, v) in flow {
                if v != 0.0 {
                    let slot = if v > 0.0 { 2 * e } else { 2 * e + 1 };
                    load[slot] += pi[x] * pi[y] * scheme.weight(v, rnorm[e]) * d;
                }
            }
        }
        Ok(load)
    });
    let mut total_load = vec![0.0; 2 * net.edge_count()];
    for l in loads {
        for (t, v) in total_load.iter_mut().zip(l?) {
            *t += v;
        }
    }
    let (slot, value) = total_load
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let e = net.edge(slot / 2);
    let bottleneck = if slot % 2 == 0 { (e.lo, e.hi) } else { (e.hi, e.lo) };
    Ok(PoincareReport { scheme, value, bottleneck })
}

/// Continuous-time semigroup `P_t = exp(-t (I - P))`.
///
/// `P_t` is assembled by scaling and squaring the uniformized series
/// `e^{-h} sum_j h^j P^j / j!`, whose terms are all nonnegative, so rows
/// started from states of tiny equilibrium mass stay accurate.
#[derive(Debug, Clone)]
pub struct Semigroup {
    kernel: DMatrix<f64>,
    pi: Vec<f64>,
}

/// Largest step taken by the series before squaring.
const SERIES_STEP: f64 = 0.5;

impl Semigroup {
    pub fn new(net: &Network) -> Result<Self> {
        let n = net.node_count();
        if n > MIXING_LIMIT {
            return Err(Error::SizeLimit { what: "exact mixing time", size: n, limit: MIXING_LIMIT });
        }
        let total = net.total_mass();
        let pi: Vec<f64> = net.masses().iter().map(|m| m / total).collect();
        let mut kernel = DMatrix::zeros(n, n);
        for x in 0..n {
            let m = net.mass(x);
            kernel[(x, x)] = net.self_loop(x) / m;
            for (y, c, _) in net.neighbors(x) {
                kernel[(x, y)] = c / m;
            }
        }
        Ok(Semigroup { kernel, pi })
    }

    /// `P_h` for `0 <= h <= SERIES_STEP` from the truncated series.
    fn series(&self, h: f64) -> DMatrix<f64> {
        let n = self.pi.len();
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        let mut weight = 1.0;
        for j in 1.. {
            weight *= h / j as f64;
            if weight < 1e-18 {
                break;
            }
            term = &term * &self.kernel * (h / j as f64);
            sum += &term;
        }
        sum * (-h).exp()
    }

    /// The matrix `P_t`.
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        let mut squarings = 0;
        let mut h = t;
        while h > SERIES_STEP {
            h *= 0.5;
            squarings += 1;
        }
        let mut m = self.series(h);
        for _ in 0..squarings {
            m = &m * &m;
        }
        m
    }

    fn row_tv(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let n = self.pi.len();
        par::map_indices(n, |x| 0.5 * (0..n).map(|y| (m[(x, y)] - self.pi[y]).abs()).sum::<f64>())
    }

    fn worst(&self, m: &DMatrix<f64>) -> f64 {
        self.row_tv(m).into_iter().fold(0.0, f64::max)
    }

    /// `max_x ||P_t(x, .) - pi||_TV`.
    pub fn worst_tv(&self, t: f64) -> f64 {
        self.worst(&self.at(t))
    }

    /// `||P_t(x, .) - pi||_TV` for every start `x`.
    pub fn tv_all(&self, t: f64) -> Vec<f64> {
        self.row_tv(&self.at(t))
    }

    /// `inf {t : max_x ||P_t(x, .) - pi||_TV <= level}` to relative precision `2^-42`.
    pub fn first_below(&self, level: f64) -> Result<f64> {
        let n = self.pi.len();
        if self.worst(&DMatrix::identity(n, n)) <= level {
            return Ok(0.0);
        }
        // bracket [hi / 2, hi] by repeated squaring
        let mut hi = SERIES_STEP;
        let mut m = self.series(hi);
        let mut below = DMatrix::identity(n, n);
        let mut lo = 0.0;
        while self.worst(&m) > level {
            if hi > 1e300 {
                return Err(Error::InvalidParameter("mixing time diverges".into()));
            }
            lo = hi;
            let next = &m * &m;
            below = std::mem::replace(&mut m, next);
            hi *= 2.0;
        }
        // bisect on [lo, hi]; each step kernel is evaluated afresh so that no
        // long squaring chain amplifies rounding
        let mut step = (hi - lo) / 2.0;
        while step > 1e-14 * hi {
            let candidate = &below * &self.at(step);
            if self.worst(&candidate) > level {
                below = candidate;
                lo += step;
            }
            step /= 2.0;
        }
        Ok(lo + 2.0 * step)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    /// `inf {t : max_x ||P_t(x, .) - pi||_TV <= 1/e}` in continuous time.
    pub tau1: f64,
    pub gap: f64,
    /// `-ln(1 - gap)`, infinite when `1 - gap <= 0`.
    pub log_rate: f64,
    /// Whether `-ln(1 - gap) >= 1 / tau1`.
    pub relation_holds: bool,
}

/// Exact continuous-time mixing time.
pub fn mixing_time(net: &Network) -> Result<MixingReport> {
    let tau1 = Semigroup::new(net)?.first_below((-1.0f64).exp())?;
    let gap = spectrum(net)?.gap;
    let log_rate = if 1.0 - gap <= 0.0 { f64::INFINITY } else { -(1.0 - gap).ln() };
    Ok(MixingReport { tau1, gap, log_rate, relation_holds: log_rate >= 1.0 / tau1 })
}

/// `||P^t(x, .) - pi||_TV` for the discrete-time chain after `t` steps.
pub fn discrete_tv(net: &Network, x: usize, t: usize) -> f64 {
    let n = net.node_count();
    let total = net.total_mass();
    let mut dist = vec![0.0; n];
    dist[x] = 1.0;
    for _ in 0..t {
        let mut next = vec![0.0; n];
        for z in 0..n {
            let pz = dist[z];
            if pz == 0.0 {
                continue;
            }
            let m = net.mass(z);
            next[z] += pz * net.self_loop(z) / m;
            for (y, c, _) in net.neighbors(z) {
                next[y] += pz * c / m;
            }
        }
        dist = next;
    }
    0.5 * (0..n).map(|y| (dist[y] - net.mass(y) / total).abs()).sum::<f64>()
}
