//! Small fixture networks and seeded random networks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{build_network, Network, NodeSet};

/// Path 0-1-2-3 with unit conductances.
pub fn p4() -> Network {
    Network::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).expect("valid fixture")
}

/// Two nodes `a`, `b` with `c(a,b) = 5`.
pub fn k2() -> Network {
    build_network(&[("a", "b", 5.0)]).expect("valid fixture")
}

/// [`k2`] with self-loops `c(a,a) = c(b,b) = 5`, so that `p(a,b) = 1/2`.
pub fn lazy_k2() -> Network {
    build_network(&[("a", "b", 5.0), ("a", "a", 5.0), ("b", "b", 5.0)]).expect("valid fixture")
}

/// Triangle on `a`, `b`, `c` with unit conductances.
pub fn t3() -> Network {
    build_network(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)]).expect("valid fixture")
}

/// Alias of [`t3`]: the complete graph on three nodes.
pub fn k3() -> Network {
    t3()
}

/// Parameters of [`random_network`].
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub nodes: usize,
    /// Expected number of extra edges per node beyond a spanning tree.
    pub extra_per_node: f64,
    pub min_conductance: f64,
    pub max_conductance: f64,
    /// Probability that a node carries a self-loop.
    pub self_loop_probability: f64,
}

impl RandomSpec {
    pub fn new(nodes: usize) -> Self {
        RandomSpec { nodes, extra_per_node: 1.0, min_conductance: 0.1, max_conductance: 10.0, self_loop_probability: 0.0 }
    }
}

/// A connected random network: a random recursive tree plus random chords.
pub fn random_network(spec: RandomSpec, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.nodes.max(2);
    let draw = |rng: &mut ChaCha8Rng| rng.random_range(spec.min_conductance..=spec.max_conductance);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut pairs = std::collections::BTreeMap::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (x, y) = (perm[i], perm[j]);
        pairs.insert((x.min(y), x.max(y)), draw(&mut rng));
    }
    let extra = (spec.extra_per_node * n as f64).round() as usize;
    for _ in 0..extra {
        let x = rng.random_range(0..n);
        let y = rng.random_range(0..n);
        if x != y {
            let c = draw(&mut rng);
            pairs.entry((x.min(y), x.max(y))).or_insert(c);
        }
    }
    let mut entries: Vec<(usize, usize, f64)> = pairs.into_iter().map(|((x, y), c)| (x, y, c)).collect();
    for x in 0..n {
        if rng.random_bool(spec.self_loop_probability) {
            entries.push((x, x, draw(&mut rng)));
        }
    }
    Network::from_edges(n, entries).expect("random tree plus chords is connected")
}

/// A random pair of disjoint nonempty sets, each of size at most `max_size`.
pub fn random_disjoint_pair(n: usize, max_size: usize, seed: u64) -> (NodeSet, NodeSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let cap = max_size.max(1).min(n - 1);
    let ka = rng.random_range(1..=cap);
    let kb = rng.random_range(1..=cap.min(n - ka));
    let a = NodeSet::new(n, perm[..ka].iter().copied()).expect("in range");
    let b = NodeSet::new(n, perm[ka..ka + kb].iter().copied()).expect("in range");
    (a, b)
}
