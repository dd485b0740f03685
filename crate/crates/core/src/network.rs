//! Finite electrical networks.
//!
//! A [`Network`] is a connected weighted graph on nodes `0..n` with symmetric
//! nonnegative conductances and optional self-loops. It doubles as the
//! reversible random walk with transition probabilities `p(x,y) = c(x,y)/mu(x)`,
//! where `mu(x) = sum_y c(x,y)` is the (unnormalized) reversible measure.
//!
//! Each undirected pair is stored once in [`Network::edges`] with `lo < hi`;
//! the adjacency rows reference that single stored value, so `c(x,y) == c(y,x)`
//! holds bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Relative tolerance of the detailed-balance check in [`Network::from_chain`].
pub const REVERSIBILITY_TOL: f64 = 1e-12;

/// A sorted set of node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    /// Builds a set from arbitrary indices; duplicates are merged.
    pub fn new(n: usize, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = nodes.into_iter().collect();
        if let Some(&bad) = v.iter().find(|&&x| x >= n) {
            return Err(Error::NodeOutOfRange { index: bad, len: n });
        }
        v.sort_unstable();
        v.dedup();
        Ok(NodeSet(v))
    }

    pub fn singleton(x: usize) -> Self {
        NodeSet(vec![x])
    }

    /// Builds a set from a membership mask.
    pub fn from_mask(mask: &[bool]) -> Self {
        NodeSet(mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &x in &self.0 {
            m[x] = true;
        }
        m
    }

    pub fn complement(&self, n: usize) -> NodeSet {
        let m = self.mask(n);
        NodeSet((0..n).filter(|&x| !m[x]).collect())
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }

    /// Smallest element shared with `other`, if any.
    pub fn first_common(&self, other: &NodeSet) -> Option<usize> {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Some(self.0[i]),
            }
        }
        None
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }
}

impl From<NodeSet> for Vec<usize> {
    fn from(s: NodeSet) -> Self {
        s.0
    }
}

/// A nonnegative measure on the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    values: Vec<f64>,
    total: f64,
}

impl Measure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "measure value {} at node {i} is not a nonnegative number",
                values[i]
            )));
        }
        let total: f64 = values.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("measure has zero total mass".into()));
        }
        Ok(Measure { values, total })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The same measure scaled to total mass one.
    pub fn normalized(&self) -> Measure {
        Measure {
            values: self.values.iter().map(|v| v / self.total).collect(),
            total: 1.0,
        }
    }

    pub fn of(&self, set: &NodeSet) -> f64 {
        set.iter().map(|x| self.values[x]).sum()
    }
}

/// An undirected edge stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
    pub conductance: f64,
}

impl Edge {
    pub fn resistance(&self) -> f64 {
        1.0 / self.conductance
    }
}

/// Sparse row-stochastic matrix with sorted columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    probs: Vec<f64>,
}

impl TransitionKernel {
    /// Builds a kernel from dense rows, keeping the nonzero entries.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (y, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    cols.push(y);
                    probs.push(p);
                }
            }
            offsets.push(cols.len());
        }
        Ok(TransitionKernel { offsets, cols, probs })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[x]..self.offsets[x + 1];
        self.cols[r.clone()].iter().copied().zip(self.probs[r].iter().copied())
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        let r = self.offsets[x]..self.offsets[x + 1];
        match self.cols[r.clone()].binary_search(&y) {
            Ok(k) => self.probs[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut out = vec![vec![0.0; n]; n];
        for (x, row) in out.iter_mut().enumerate() {
            for (y, p) in self.row(x) {
                row[y] = p;
            }
        }
        out
    }

    fn check_stochastic(&self) -> Result<()> {
        for x in 0..self.len() {
            let mut sum = 0.0;
            for (_, p) in self.row(x) {
                if !(p >= 0.0) || !p.is_finite() {
                    return Err(Error::NotStochastic { row: x, sum: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > REVERSIBILITY_TOL {
                return Err(Error::NotStochastic { row: x, sum });
            }
        }
        Ok(())
    }
}

/// An immutable finite electrical network.
#[derive(Debug, Clone)]
pub struct Network {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edge_of: Vec<usize>,
    edges: Vec<Edge>,
    self_loops: Vec<f64>,
    mass: Vec<f64>,
    total_mass: f64,
    labels: Option<Vec<String>>,
}

impl Network {
    /// Builds a network on nodes `0..n` from `(x, y, c)` triples.
    ///
    /// Zero conductances are accepted and dropped; self-loops `(x, x, c)` are kept.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        assemble(n, edges, None)
    }

    /// Like [`Network::from_edges`] with one label per node.
    pub fn from_labeled_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = labels.len();
        assemble(n, edges, Some(labels))
    }

    /// Builds the network of a reversible chain by `c(x,y) = mu(x) p(x,y)`.
    pub fn from_chain(kernel: &TransitionKernel, mu: &Measure) -> Result<Self> {
        let n = kernel.len();
        if mu.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: mu.len() });
        }
        kernel.check_stochastic()?;
        let m = mu.values();
        let mut worst: Option<(usize, usize, f64)> = None;
        let mut entries = Vec::new();
        for x in 0..n {
            for (y, p) in kernel.row(x) {
                if y < x {
                    continue;
                }
                let fxy = m[x] * p;
                if y == x {
                    entries.push((x, x, fxy));
                    continue;
                }
                let fyx = m[y] * kernel.get(y, x);
                let scale = fxy.abs().max(fyx.abs());
                let violation = if scale == 0.0 { 0.0 } else { (fxy - fyx).abs() / scale };
                if violation > worst.map_or(0.0, |w| w.2) {
                    worst = Some((x, y, violation));
                }
                entries.push((x, y, fxy));
            }
            // pairs with p(x,y) = 0 but p(y,x) > 0 for y < x
            for (y, _) in kernel.row(x) {
                if y < x && kernel.get(y, x) == 0.0 && m[x] * kernel.get(x, y) > 0.0 {
                    worst = Some((y, x, 1.0));
                }
            }
        }
        if let Some((x, y, violation)) = worst {
            if violation > REVERSIBILITY_TOL {
                return Err(Error::NotReversible { x, y, violation });
            }
        }
        assemble(n, entries, None)
    }

    pub fn node_count(&self) -> usize {
        self.mass.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges (self-loops excluded), sorted by `(lo, hi)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    /// Neighbors of `x` in increasing index order as `(y, c(x,y), edge id)`.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let r = self.offsets[x]..self.offsets[x + 1];
        self.neighbors[r.clone()]
            .iter()
            .zip(self.edge_of[r].iter())
            .map(move |(&y, &e)| (y, self.edges[e].conductance, e))
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    pub fn edge_id(&self, x: usize, y: usize) -> Option<usize> {
        let r = self.offsets[x]..self.offsets[x + 1];
        self.neighbors[r.clone()].binary_search(&y).ok().map(|k| self.edge_of[r.start + k])
    }

    /// `c(x,y)`, including the self-loop when `x == y`.
    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.self_loops[x];
        }
        self.edge_id(x, y).map_or(0.0, |e| self.edges[e].conductance)
    }

    pub fn self_loop(&self, x: usize) -> f64 {
        self.self_loops[x]
    }

    pub fn self_loops(&self) -> &[f64] {
        &self.self_loops
    }

    /// `mu(x) = sum_y c(x,y)`.
    pub fn mass(&self, x: usize) -> f64 {
        self.mass[x]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass_of(&self, set: &NodeSet) -> f64 {
        set.iter().map(|x| self.mass[x]).sum()
    }

    pub fn measure(&self) -> Measure {
        Measure { values: self.mass.clone(), total: self.total_mass }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    /// Resolves a label (or a decimal index for unlabeled networks).
    pub fn resolve(&self, label: &str) -> Result<usize> {
        match &self.labels {
            Some(l) => l
                .iter()
                .position(|s| s == label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string())),
            None => label
                .parse::<usize>()
                .ok()
                .filter(|&x| x < self.node_count())
                .ok_or_else(|| Error::UnknownLabel(label.to_string())),
        }
    }

    pub fn node_set<'a>(&self, labels: impl IntoIterator<Item = &'a str>) -> Result<NodeSet> {
        let ids = labels.into_iter().map(|l| self.resolve(l)).collect::<Result<Vec<_>>>()?;
        NodeSet::new(self.node_count(), ids)
    }

    pub fn transition_kernel(&self) -> TransitionKernel {
        let n = self.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(self.neighbors.len() + n);
        let mut probs = Vec::with_capacity(self.neighbors.len() + n);
        offsets.push(0);
        for x in 0..n {
            let m = self.mass[x];
            let mut pushed_diag = self.self_loops[x] == 0.0;
            for (y, c, _) in self.neighbors(x) {
                if !pushed_diag && y > x {
                    cols.push(x);
                    probs.push(self.self_loops[x] / m);
                    pushed_diag = true;
                }
                cols.push(y);
                probs.push(c / m);
            }
            if !pushed_diag {
                cols.push(x);
                probs.push(self.self_loops[x] / m);
            }
            offsets.push(cols.len());
        }
        TransitionKernel { offsets, cols, probs }
    }

    /// `(Lf)(x) = sum_y p(x,y) (f(y) - f(x))`.
    pub fn apply_generator(&self, f: &Potential) -> Potential {
        Potential::new(self.generator_values(f.values()))
    }

    pub(crate) fn generator_values(&self, f: &[f64]) -> Vec<f64> {
        (0..self.node_count())
            .map(|x| {
                let s: f64 = self.neighbors(x).map(|(y, c, _)| c * (f[y] - f[x])).sum();
                s / self.mass[x]
            })
            .collect()
    }

    /// Shorts every node of `set` into one new node `label`, appended last.
    ///
    /// Nodes outside `set` keep their relative order. Conductances from the
    /// set are summed onto the new node; edges inside the set and the new
    /// node's self-loop are dropped.
    pub fn collapse(&self, set: &NodeSet, label: &str) -> Result<Network> {
        let n = self.node_count();
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        if set.len() == n {
            return Err(Error::ComplementDisconnected);
        }
        let inside = set.mask(n);
        let mut new_index = vec![usize::MAX; n];
        let mut next = 0;
        for x in 0..n {
            if !inside[x] {
                new_index[x] = next;
                next += 1;
            }
        }
        let sink = next;
        let mut to_sink = vec![0.0; sink];
        let mut entries = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            match (inside[e.lo], inside[e.hi]) {
                (false, false) => entries.push((new_index[e.lo], new_index[e.hi], e.conductance)),
                (false, true) => to_sink[new_index[e.lo]] += e.conductance,
                (true, false) => to_sink[new_index[e.hi]] += e.conductance,
                (true, true) => {}
            }
        }
        for x in 0..n {
            if !inside[x] && self.self_loops[x] > 0.0 {
                entries.push((new_index[x], new_index[x], self.self_loops[x]));
            }
        }
        entries.extend(to_sink.iter().enumerate().filter(|(_, &c)| c > 0.0).map(|(x, &c)| (x, sink, c)));
        let labels = (0..n)
            .filter(|&x| !inside[x])
            .map(|x| self.label(x))
            .chain(std::iter::once(label.to_string()))
            .collect();
        assemble(sink + 1, entries, Some(labels)).map_err(|e| match e {
            Error::Disconnected { .. } | Error::ZeroMassNode(_) => Error::ComplementDisconnected,
            other => other,
        })
    }

    /// Lumps nodes into classes: `c'(A,B) = sum_{x in A, y in B} c(x,y)`.
    ///
    /// Edges inside a class become self-loops, so the walk on the quotient is
    /// the lumped walk whenever the lumping is exact (for instance when the
    /// classes are orbits of a group of automorphisms).
    pub fn quotient(&self, class_of: &[usize], class_count: usize) -> Result<Network> {
        let n = self.node_count();
        if class_of.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: class_of.len() });
        }
        if let Some(&bad) = class_of.iter().find(|&&k| k >= class_count) {
            return Err(Error::NodeOutOfRange { index: bad, len: class_count });
        }
        let mut loops = vec![0.0; class_count];
        let mut pairs: HashMap<(usize, usize), f64> = HashMap::new();
        for x in 0..n {
            loops[class_of[x]] += self.self_loops[x];
        }
        for e in &self.edges {
            let (a, b) = (class_of[e.lo], class_of[e.hi]);
            if a == b {
                loops[a] += 2.0 * e.conductance;
            } else {
                *pairs.entry((a.min(b), a.max(b))).or_insert(0.0) += e.conductance;
            }
        }
        let mut entries: Vec<(usize, usize, f64)> = pairs.into_iter().map(|((a, b), c)| (a, b, c)).collect();
        entries.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
        entries.extend(loops.iter().enumerate().filter(|(_, &c)| c > 0.0).map(|(k, &c)| (k, k, c)));
        assemble(class_count, entries, None)
    }

    /// The subnetwork induced on `set`: its edges and self-loops only.
    ///
    /// Node `i` of the result is the `i`-th element of `set`.
    pub fn induced(&self, set: &NodeSet) -> Result<Network> {
        let n = self.node_count();
        let mut new_index = vec![usize::MAX; n];
        for (i, x) in set.iter().enumerate() {
            new_index[x] = i;
        }
        let mut entries = Vec::new();
        for e in &self.edges {
            let (a, b) = (new_index[e.lo], new_index[e.hi]);
            if a != usize::MAX && b != usize::MAX {
                entries.push((a, b, e.conductance));
            }
        }
        for x in set.iter() {
            if self.self_loops[x] > 0.0 {
                entries.push((new_index[x], new_index[x], self.self_loops[x]));
            }
        }
        let labels = self.labels.as_ref().map(|l| set.iter().map(|x| l[x].clone()).collect());
        assemble(set.len(), entries, labels)
    }

    /// The lazy version: kernel `(I + P)/2`, obtained by adding `mu(x)` to each self-loop.
    pub fn lazy(&self) -> Network {
        let loops: Vec<f64> = (0..self.node_count()).map(|x| self.self_loops[x] + self.mass[x]).collect();
        self.with_self_loops(&loops).expect("adding self-loops keeps the network valid")
    }

    /// Same off-diagonal conductances with the given self-loops.
    pub fn with_self_loops(&self, loops: &[f64]) -> Result<Network> {
        let n = self.node_count();
        if loops.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: loops.len() });
        }
        let entries = self
            .edges
            .iter()
            .map(|e| (e.lo, e.hi, e.conductance))
            .chain(loops.iter().enumerate().map(|(x, &c)| (x, x, c)));
        assemble(n, entries, self.labels.clone())
    }

    /// All conductances multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Network {
        assert!(factor > 0.0 && factor.is_finite());
        let mut out = self.clone();
        for e in &mut out.edges {
            e.conductance *= factor;
        }
        for c in &mut out.self_loops {
            *c *= factor;
        }
        for m in &mut out.mass {
            *m *= factor;
        }
        out.total_mass *= factor;
        out
    }

    /// Conductances scaled so that `mu` is a probability measure.
    pub fn normalized(&self) -> Network {
        self.scaled(1.0 / self.total_mass)
    }

    /// Parses the whitespace edge-list format: `x y c` per line, `#` comments.
    ///
    /// A line holding a single label declares a node without edges.
    pub fn parse_edge_list(text: &str) -> Result<Network> {
        let mut builder = NetworkBuilder::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |message: String| Error::Parse { line: lineno + 1, message };
            match tokens.as_slice() {
                [x] => {
                    builder.node(x);
                }
                [x, y, c] => {
                    let c: f64 = c.parse().map_err(|_| parse_err(format!("bad conductance `{c}`")))?;
                    builder.edge(x, y, c);
                }
                _ => return Err(parse_err(format!("expected `x y c`, got `{line}`"))),
            }
        }
        builder.build()
    }

    /// Writes the network in the edge-list format, self-loops included.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let mut listed = vec![false; self.node_count()];
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {:e}", self.label(e.lo), self.label(e.hi), e.conductance);
            listed[e.lo] = true;
            listed[e.hi] = true;
        }
        for x in 0..self.node_count() {
            if self.self_loops[x] > 0.0 {
                let _ = writeln!(out, "{} {} {:e}", self.label(x), self.label(x), self.self_loops[x]);
                listed[x] = true;
            }
        }
        for (x, seen) in listed.iter().enumerate() {
            if !seen {
                let _ = writeln!(out, "{}", self.label(x));
            }
        }
        out
    }
}

/// Incremental builder keyed by string labels.
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize, f64)>,
}

impl NetworkBuilder {
    /// Returns the index of `label`, creating the node if needed.
    pub fn node(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    pub fn edge(&mut self, x: &str, y: &str, conductance: f64) -> &mut Self {
        let (a, b) = (self.node(x), self.node(y));
        self.edges.push((a, b, conductance));
        self
    }

    pub fn build(self) -> Result<Network> {
        Network::from_labeled_edges(self.labels, self.edges)
    }
}

/// Builds a labeled network from `(x, y, c)` label triples.
pub fn build_network(edges: &[(&str, &str, f64)]) -> Result<Network> {
    let mut b = NetworkBuilder::default();
    for &(x, y, c) in edges {
        b.edge(x, y, c);
    }
    b.build()
}

fn assemble(
    n: usize,
    entries: impl IntoIterator<Item = (usize, usize, f64)>,
    labels: Option<Vec<String>>,
) -> Result<Network> {
    if n == 0 {
        return Err(Error::EmptyNetwork);
    }
    let mut self_loops = vec![0.0; n];
    let mut loop_seen = vec![false; n];
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (x, y, c) in entries {
        for z in [x, y] {
            if z >= n {
                return Err(Error::NodeOutOfRange { index: z, len: n });
            }
        }
        if !c.is_finite() {
            return Err(Error::NonFiniteConductance { x, y });
        }
        if c < 0.0 {
            return Err(Error::NegativeConductance { x, y, conductance: c });
        }
        if x == y {
            if loop_seen[x] {
                return Err(Error::DuplicateEdge { x, y });
            }
            loop_seen[x] = true;
            self_loops[x] = c;
        } else {
            pairs.push((x.min(y), x.max(y), c));
        }
    }
    pairs.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
    if let Some(w) = pairs.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(Error::DuplicateEdge { x: w[0].0, y: w[0].1 });
    }
    let edges: Vec<Edge> = pairs
        .into_iter()
        .filter(|p| p.2 > 0.0)
        .map(|(lo, hi, conductance)| Edge { lo, hi, conductance })
        .collect();

    let mut degree = vec![0usize; n];
    for e in &edges {
        degree[e.lo] += 1;
        degree[e.hi] += 1;
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for d in &degree {
        offsets.push(offsets.last().unwrap() + d);
    }
    let mut fill = offsets.clone();
    let mut neighbors = vec![0usize; offsets[n]];
    let mut edge_of = vec![0usize; offsets[n]];
    // edges are sorted by (lo, hi): pushing hi-side entries first keeps rows sorted
    for (id, e) in edges.iter().enumerate() {
        neighbors[fill[e.hi]] = e.lo;
        edge_of[fill[e.hi]] = id;
        fill[e.hi] += 1;
    }
    for (id, e) in edges.iter().enumerate() {
        neighbors[fill[e.lo]] = e.hi;
        edge_of[fill[e.lo]] = id;
        fill[e.lo] += 1;
    }

    let components = count_components(n, &edges);
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let mut mass = self_loops.clone();
    for e in &edges {
        mass[e.lo] += e.conductance;
        mass[e.hi] += e.conductance;
    }
    if let Some(x) = mass.iter().position(|&m| m <= 0.0) {
        return Err(Error::ZeroMassNode(x));
    }
    let total_mass = mass.iter().sum();
    Ok(Network { offsets, neighbors, edge_of, edges, self_loops, mass, total_mass, labels })
}

fn count_components(n: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for e in edges {
        let (a, b) = (find(&mut parent, e.lo), find(&mut parent, e.hi));
        if a != b {
            parent[a.max(b)] = a.min(b);
            components -= 1;
        }
    }
    components
}
