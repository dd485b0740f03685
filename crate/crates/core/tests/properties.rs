use nalgebra::DMatrix;
use proptest::prelude::*;

use ohmic::flow::{dirichlet_upper_bound, energy, flow_from_paths, potential_of, stokes_flux, thomson_lower_bound, current_of};
use ohmic::generate::{random_disjoint_pair, random_network, RandomSpec};
use ohmic::mc::{simulate_hitting, McConfig, Start};
use ohmic::potential::{capacity, equilibrium, green_function, hitting_times};
use ohmic::spectral::{cheeger_bounds, spectrum};
use ohmic::{Flow, Network, NodeSet, Potential};

fn network(nodes: usize, seed: u64, loops: bool) -> Network {
    let mut spec = RandomSpec::new(nodes);
    spec.self_loop_probability = if loops { 0.3 } else { 0.0 };
    random_network(spec, seed)
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300)
}

/// Random signed edge values, a flow with arbitrary divergence.
fn random_flow(net: &Network, seed: u64) -> Flow {
    let mut s = seed | 1;
    let values = (0..net.edge_count())
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s % 2001) as f64 / 1000.0 - 1.0
        })
        .collect();
    Flow::from_edge_values(net, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn capacity_is_symmetric(nodes in 2usize..60, seed in any::<u64>(), loops in any::<bool>()) {
        let net = network(nodes, seed, loops);
        let (a, b) = random_disjoint_pair(nodes, 4, seed ^ 1);
        let ab = capacity(&net, &a, &b).unwrap();
        let ba = capacity(&net, &b, &a).unwrap();
        prop_assert!(close(ab, ba, 1e-10));
        prop_assert!(ab > 0.0);
    }

    #[test]
    fn equilibrium_is_consistent(nodes in 2usize..60, seed in any::<u64>(), loops in any::<bool>()) {
        let net = network(nodes, seed, loops);
        let (a, b) = random_disjoint_pair(nodes, 4, seed ^ 2);
        let eq = equilibrium(&net, &a, &b).unwrap();
        prop_assert!(eq.potential.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let nu: f64 = eq.harmonic_measure.iter().sum();
        prop_assert!(close(nu, 1.0, 1e-12));
        let sink: f64 = b.iter().map(|x| eq.charge[x]).sum();
        prop_assert!(close(-sink, eq.capacity, 1e-9));
        let unit = eq.current.scaled(1.0 / eq.capacity);
        let back = potential_of(&net, &current_of(&net, &eq.potential)).unwrap();
        let shift = eq.potential.get(0) - back.get(0);
        prop_assert!((0..nodes).all(|x| (back.get(x) + shift - eq.potential.get(x)).abs() < 1e-9));
        prop_assert!(close(energy(&net, &unit).unwrap(), 1.0 / eq.capacity, 1e-9));
    }

    #[test]
    fn rayleigh_monotonicity(nodes in 2usize..40, seed in any::<u64>(), pick in any::<prop::sample::Index>(), factor in 1.0f64..50.0) {
        let net = network(nodes, seed, false);
        let (a, b) = random_disjoint_pair(nodes, 3, seed ^ 3);
        let k = pick.index(net.edge_count());
        let raised = Network::from_edges(
            nodes,
            net.edges().iter().enumerate().map(|(i, e)| (e.lo, e.hi, if i == k { e.conductance * factor } else { e.conductance })),
        ).unwrap();
        prop_assert!(capacity(&raised, &a, &b).unwrap() >= capacity(&net, &a, &b).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn capacity_grows_with_the_source_set(nodes in 4usize..40, seed in any::<u64>()) {
        let net = network(nodes, seed, false);
        let (a, b) = random_disjoint_pair(nodes, 3, seed ^ 4);
        let extra = (0..nodes).find(|&x| !a.contains(x) && !b.contains(x));
        prop_assume!(extra.is_some());
        let bigger = NodeSet::new(nodes, a.iter().chain(extra)).unwrap();
        prop_assert!(capacity(&net, &bigger, &b).unwrap() >= capacity(&net, &a, &b).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn self_loops_do_not_change_capacity(nodes in 2usize..40, seed in any::<u64>(), weight in 0.0f64..20.0) {
        let net = network(nodes, seed, false);
        let (a, b) = random_disjoint_pair(nodes, 3, seed ^ 5);
        let loops: Vec<f64> = (0..nodes).map(|x| weight * (x % 3) as f64).collect();
        let looped = net.with_self_loops(&loops).unwrap();
        prop_assert!(close(capacity(&looped, &a, &b).unwrap(), capacity(&net, &a, &b).unwrap(), 1e-10));
    }

    #[test]
    fn collapsing_part_of_the_sink(nodes in 4usize..40, seed in any::<u64>()) {
        let net = network(nodes, seed, false);
        let (a, b) = random_disjoint_pair(nodes, 4, seed ^ 6);
        prop_assume!(b.len() < nodes - a.len());
        let shorted = net.collapse(&b, "sink").unwrap();
        // nodes outside `b` keep their order, the merged node is last
        let keep: Vec<usize> = (0..nodes).filter(|&x| !b.contains(x)).collect();
        let a2 = NodeSet::new(keep.len() + 1, a.iter().map(|x| keep.binary_search(&x).unwrap())).unwrap();
        let b2 = NodeSet::singleton(keep.len());
        prop_assert!(close(capacity(&shorted, &a2, &b2).unwrap(), capacity(&net, &a, &b).unwrap(), 1e-10));
    }

    #[test]
    fn chain_round_trip(nodes in 2usize..30, seed in any::<u64>(), loops in any::<bool>()) {
        let net = network(nodes, seed, loops);
        let back = Network::from_chain(&net.transition_kernel(), &net.measure()).unwrap();
        prop_assert_eq!(back.edge_count(), net.edge_count());
        for (e, f) in net.edges().iter().zip(back.edges()) {
            prop_assert_eq!((e.lo, e.hi), (f.lo, f.hi));
            prop_assert!(close(e.conductance, f.conductance, 1e-12));
        }
        for x in 0..nodes {
            prop_assert!((back.self_loop(x) - net.self_loop(x)).abs() <= 1e-12 * net.mass(x));
        }
    }

    #[test]
    fn stokes_identity(nodes in 2usize..40, seed in any::<u64>(), mask in any::<u64>()) {
        let net = network(nodes, seed, false);
        let phi = random_flow(&net, seed);
        let k = NodeSet::from_mask(&(0..nodes).map(|x| mask >> (x % 64) & 1 == 1).collect::<Vec<_>>());
        let (flux, div) = stokes_flux(&net, &phi, &k);
        prop_assert!((flux - div).abs() <= 1e-12 * (1.0 + net.edge_count() as f64));
    }

    #[test]
    fn dirichlet_thomson_sandwich(nodes in 2usize..40, seed in any::<u64>(), noise in 0.0f64..1.0) {
        let net = network(nodes, seed, false);
        let (a, b) = random_disjoint_pair(nodes, 3, seed ^ 7);
        let eq = equilibrium(&net, &a, &b).unwrap();
        let f = Potential::new(
            eq.potential.values().iter().enumerate()
                .map(|(x, v)| if a.contains(x) || b.contains(x) { *v } else { (v + noise * ((x * 7919) % 13) as f64 / 13.0).min(1.0) })
                .collect(),
        );
        prop_assert!(dirichlet_upper_bound(&net, &a, &b, &f).unwrap() >= eq.capacity * (1.0 - 1e-12));
        // a single BFS path from A to B carries a unitary flow
        let src = a.as_slice()[0];
        let mut parent = vec![usize::MAX; nodes];
        parent[src] = src;
        let mut queue = std::collections::VecDeque::from([src]);
        let mut end = src;
        while let Some(x) = queue.pop_front() {
            if b.contains(x) { end = x; break; }
            for (y, _, _) in net.neighbors(x) {
                if parent[y] == usize::MAX { parent[y] = x; queue.push_back(y); }
            }
        }
        let mut path = vec![end];
        while *path.last().unwrap() != src { path.push(parent[*path.last().unwrap()]); }
        path.reverse();
        let phi = flow_from_paths(&net, &[(path, 1.0)]).unwrap();
        prop_assert!(thomson_lower_bound(&net, &a, &b, &phi).unwrap() <= eq.capacity * (1.0 + 1e-12));
    }

    #[test]
    fn lazy_spectrum_is_an_affine_image(nodes in 2usize..30, seed in any::<u64>(), loops in any::<bool>()) {
        let net = network(nodes, seed, loops);
        let s = spectrum(&net).unwrap().eigenvalues;
        let l = spectrum(&net.lazy()).unwrap().eigenvalues;
        for (x, y) in s.iter().zip(&l) {
            prop_assert!(((1.0 + x) / 2.0 - y).abs() < 1e-10);
        }
    }

    #[test]
    fn cheeger_sandwich(nodes in 2usize..13, seed in any::<u64>(), loops in any::<bool>()) {
        let net = network(nodes, seed, loops);
        let gap = spectrum(&net).unwrap().gap;
        let (lo, hi) = cheeger_bounds(&net).unwrap();
        prop_assert!(lo <= gap + 1e-10 && gap <= hi + 1e-10);
    }

    #[test]
    fn green_reversibility(nodes in 3usize..40, seed in any::<u64>(), loops in any::<bool>()) {
        let net = network(nodes, seed, loops);
        let (_, b) = random_disjoint_pair(nodes, 3, seed ^ 8);
        let g = green_function(&net, &b).unwrap();
        let outside: Vec<usize> = (0..nodes).filter(|&x| !b.contains(x)).collect();
        let scale = outside.iter().map(|&x| g.get(x, x).unwrap()).fold(0.0, f64::max);
        for &x in &outside {
            for &y in &outside {
                let lhs = net.mass(x) * g.get(x, y).unwrap();
                let rhs = net.mass(y) * g.get(y, x).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * scale * net.mass(x).max(net.mass(y)));
            }
        }
    }

    #[test]
    fn hitting_times_match_dense_inverse(nodes in 3usize..40, seed in any::<u64>()) {
        let net = network(nodes, seed, true);
        let (_, b) = random_disjoint_pair(nodes, 3, seed ^ 9);
        let keep: Vec<usize> = (0..nodes).filter(|&x| !b.contains(x)).collect();
        let k = keep.len();
        let m = DMatrix::from_fn(k, k, |i, j| {
            let (x, y) = (keep[i], keep[j]);
            let p = if x == y { net.self_loop(x) } else { net.conductance(x, y) } / net.mass(x);
            if i == j { 1.0 - p } else { -p }
        });
        let t = m.lu().solve(&nalgebra::DVector::from_element(k, 1.0)).unwrap();
        let h = hitting_times(&net, &b).unwrap();
        for (i, &x) in keep.iter().enumerate() {
            prop_assert!(close(h.get(x), t[i], 1e-9));
        }
    }

    #[test]
    fn monte_carlo_is_seeded(nodes in 3usize..15, seed in any::<u64>()) {
        let net = network(nodes, seed, true);
        let (a, b) = random_disjoint_pair(nodes, 2, seed ^ 10);
        let cfg = McConfig::new(50, seed);
        let r1 = simulate_hitting(&net, &Start::Node(0), &a, &b, &cfg).unwrap();
        let r2 = simulate_hitting(&net, &Start::Node(0), &a, &b, &cfg).unwrap();
        prop_assert_eq!(r1.time_to_b, r2.time_to_b);
        prop_assert_eq!(r1.prob_a_first, r2.prob_a_first);
        prop_assert!(r1.time_to_b.stderr >= 0.0);
    }
}
