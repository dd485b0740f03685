//! Small closed-form fixtures across the public API.

use ohmic::flow::energy;
use ohmic::glauber::{critical_length, hamiltonian, GlauberParams, SpinConfig};
use ohmic::lattice::{box_network, capacity_sequence, log_energy_bound, radial_flow_with};
use ohmic::mc::{coupling_time, escape_time_law, net_flux, McConfig};
use ohmic::potential::{equilibrium, pwc_bound};
use ohmic::spectral::{cheeger_bounds, potential_gap_upper, resistance_poincare, spectrum, variational_gap_check};
use ohmic::{Error, Network, NodeSet, Potential};

fn path(n: usize) -> Network {
    Network::from_edges(n, (0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap()
}

fn triangle() -> Network {
    Network::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
}

fn lazy_pair() -> Network {
    Network::from_edges(2, [(0, 1, 5.0), (0, 0, 5.0), (1, 1, 5.0)]).unwrap()
}

fn one(x: usize) -> NodeSet {
    NodeSet::singleton(x)
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
}

#[test]
fn spectra_of_tiny_chains() {
    let k3 = spectrum(&triangle()).unwrap();
    assert!(close(k3.eigenvalues[1], -0.5, 1e-12));
    assert!(close(k3.gap, 1.5, 1e-12));
    let (lo, hi) = cheeger_bounds(&triangle()).unwrap();
    assert!(close(lo, 0.5, 1e-12) && close(hi, 2.0, 1e-12));

    let k2 = spectrum(&Network::from_edges(2, [(0, 1, 1.0)]).unwrap()).unwrap();
    assert!(close(k2.gap, 2.0, 1e-12));
    assert!(k2.periodic);
    assert!(close(spectrum(&lazy_pair()).unwrap().gap, 1.0, 1e-12));
}

#[test]
fn gap_upper_bounds() {
    assert!(close(potential_gap_upper(&lazy_pair(), &one(0), &one(1)).unwrap(), 1.0, 1e-12));
    let p4 = path(4);
    let gap = spectrum(&p4).unwrap().gap;
    assert!(close(potential_gap_upper(&p4, &one(0), &one(3)).unwrap(), 2.0, 1e-12));
    assert!(close(resistance_poincare(&lazy_pair()).unwrap(), 1.0, 1e-12));
    assert!(resistance_poincare(&p4).unwrap() >= 1.0 / gap * (1.0 - 1e-12));
    assert!(resistance_poincare(&triangle()).unwrap() >= 2.0 / 3.0 * (1.0 - 1e-12));

    // Rayleigh quotients: indicator, equilibrium potential, eigenfunction
    let a = NodeSet::new(4, [0]).unwrap();
    let b = one(3);
    assert!(variational_gap_check(&p4, &Potential::indicator(4, &a)).unwrap() >= gap);
    let v = equilibrium(&p4, &a, &b).unwrap().potential;
    assert!(variational_gap_check(&p4, &v).unwrap() >= gap);
    let f = spectrum(&p4).unwrap().second_eigenvector.unwrap();
    assert!(close(variational_gap_check(&p4, &f).unwrap(), gap, 1e-10));
    assert!(matches!(variational_gap_check(&p4, &Potential::constant(4, 2.0)), Err(Error::ConstantFunction)));
}

#[test]
fn capacity_ratio_bound() {
    let p4 = path(4);
    let bound = pwc_bound(&p4, 1, &one(0), &one(3)).unwrap();
    assert!(close(bound, 2.0, 1e-12));
    assert!(bound >= equilibrium(&p4, &one(0), &one(3)).unwrap().potential.get(1));
    let p5 = path(5);
    assert!(close(pwc_bound(&p5, 2, &one(0), &one(4)).unwrap(), 1.0, 1e-12));
    assert!(matches!(pwc_bound(&p4, 0, &one(0), &one(3)), Err(Error::XInTargets(0))));
}

#[test]
fn monte_carlo_fixtures() {
    let t3 = triangle();
    let r = net_flux(&t3, &one(0), &one(1), (0, 1), &McConfig::new(20_000, 11)).unwrap();
    assert!(r.z_score(2.0 / 3.0).abs() < 4.0, "{r:?}");

    assert!(matches!(escape_time_law(&t3, 1, &one(1), &McConfig::new(10, 0)), Err(Error::XInTargets(1))));

    // a deep well: leaving takes a geometric number of exponential holds
    let well = Network::from_edges(2, [(0, 1, 1.0), (0, 0, 99.0), (1, 1, 1.0)]).unwrap();
    let law = escape_time_law(&well, 0, &one(1), &McConfig::new(20_000, 5)).unwrap();
    assert!(close(law.exact_mean, 100.0, 1e-12));
    assert!(law.ks_statistic < 1.63 / (20_000f64).sqrt(), "{}", law.ks_statistic);
    assert!(law.exact_ks.unwrap() < 1e-6);

    assert_eq!(coupling_time(&lazy_pair(), 1, 1, &McConfig::new(10, 0)).unwrap().mean, 0.0);
}

#[test]
fn lattice_fixtures() {
    assert_eq!(box_network(1, 1).unwrap().interior_count(), 3);
    assert_eq!(box_network(2, 2).unwrap().interior_count(), 25);
    for (n, c) in capacity_sequence(1, 6).unwrap() {
        assert!(close(c, 1.0 / (n as f64 + 1.0), 1e-12));
    }
    assert!((log_energy_bound(10) - 1.182).abs() < 5e-4);

    // finite energy of the radial flow: increments shrink and 1/D stays below C
    let mut energies = Vec::new();
    for n in [3, 6, 9, 12] {
        let (b, phi) = radial_flow_with(n, 2000).unwrap();
        let d = energy(&b.network, &phi).unwrap();
        assert!(1.0 / d <= b.capacity().unwrap() * (1.0 + 1e-9));
        energies.push(d);
    }
    let steps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|s| *s > -1e-12), "{energies:?}");
    assert!(steps.windows(2).all(|w| w[1] < w[0]), "{energies:?}");
}

#[test]
fn ising_energies() {
    let params = GlauberParams::new(4, 1.0, 1.4, 1.0).unwrap();
    let a = SpinConfig::all_minus(4);
    assert!(close(hamiltonian(&params, &a), -4.8, 1e-12));
    assert!(close(hamiltonian(&params, &SpinConfig::all_plus(4)), -27.2, 1e-12));
    assert!(close(hamiltonian(&params, &a.flipped(5)) - hamiltonian(&params, &a), 2.6, 1e-12));
    assert_eq!(critical_length(1.0, 1.4).unwrap(), 2);
    assert_eq!(critical_length(1.0, 0.75).unwrap(), 3);
    assert!(matches!(critical_length(1.0, 2.0), Err(Error::DegenerateRatio { .. })));
}
