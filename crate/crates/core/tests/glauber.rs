use nalgebra::{DMatrix, DVector};

use ohmic::glauber::{
    communication_height, exact_nucleation_time, hamiltonian, landscape, metropolis_network, predicted_nucleation_time,
    EnergyLandscape, GlauberParams, SpinConfig,
};
use ohmic::potential::{equilibrium, hitting_times};
use ohmic::spectral::{mixing_time, potential_gap_upper, spectrum};
use ohmic::NodeSet;

/// `E_x[tau_target]` in steps, from a dense Metropolis kernel built here.
fn dense_hitting(params: &GlauberParams, source: usize, target: usize) -> f64 {
    let sites = params.sites();
    let n = 1usize << sites;
    let h: Vec<f64> = (0..n).map(|s| hamiltonian(params, &SpinConfig::from_index(params.l, s))).collect();
    let keep: Vec<usize> = (0..n).filter(|&s| s != target).collect();
    let pos = |s: usize| if s < target { s } else { s - 1 };
    let mut m = DMatrix::identity(n - 1, n - 1);
    for &x in &keep {
        let mut stay = 1.0;
        for site in 0..sites {
            let y = x ^ (1 << site);
            let p = (-params.beta * (h[y] - h[x]).max(0.0)).exp() / sites as f64;
            stay -= p;
            if y != target {
                m[(pos(x), pos(y))] -= p;
            }
        }
        m[(pos(x), pos(x))] -= stay;
    }
    let t = m.lu().solve(&DVector::from_element(n - 1, 1.0)).unwrap();
    t[pos(source)]
}

#[test]
fn two_by_two_matches_dense_enumeration() {
    let params = GlauberParams::new(2, 1.0, 1.4, 1.0).unwrap();
    let r = exact_nucleation_time(&params).unwrap();
    let oracle = dense_hitting(&params, 0, 15) / 4.0;
    assert!((r.direct_time - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", r.direct_time);
    assert!((r.harmonic_time - r.harmonic_time_direct).abs() <= 1e-8 * r.harmonic_time);
}

#[test]
fn metropolis_conductances_in_closed_form() {
    let params = GlauberParams::new(3, 1.0, 1.4, 1.5).unwrap();
    let net = metropolis_network(&params).unwrap();
    let h: Vec<f64> = (0..512).map(|s| hamiltonian(&params, &SpinConfig::from_index(3, s))).collect();
    let z: f64 = h.iter().map(|e| (-params.beta * e).exp()).sum();
    for x in (0..512).step_by(7) {
        assert!(net.self_loop(x) >= 0.0);
        for site in 0..9 {
            let y = x ^ (1 << site);
            let want = (-params.beta * h[x].max(h[y])).exp() / (9.0 * z);
            assert!((net.conductance(x, y) - want).abs() <= 1e-12 * want);
        }
        assert!((net.mass(x) - (-params.beta * h[x]).exp() / z).abs() <= 1e-12 * net.mass(x));
    }
}

#[test]
fn landscape_of_the_four_torus() {
    let params = GlauberParams::new(4, 1.0, 1.4, 1.0).unwrap();
    let r = landscape(&params).unwrap();
    assert_eq!(r.critical_length, 2);
    assert!((r.gamma - 3.8).abs() < 1e-12);
    assert!((r.gamma_closed_form - 3.8).abs() < 1e-12);
    assert!(r.b_is_ground_state);
    assert!(r.max_stability_outside_a < r.gamma);
    assert_eq!(r.predicted_gate_count, 128);
    assert!((r.prefactor() - 1.0 / 64.0).abs() < 1e-15);
    let a = SpinConfig::all_minus(4);
    assert_eq!(communication_height(&params, &a, &a).unwrap(), hamiltonian(&params, &a));
    let stronger = landscape(&GlauberParams::new(4, 1.0, 1.6, 1.0).unwrap()).unwrap();
    assert!(stronger.gamma < r.gamma);
}

#[test]
fn prediction_arithmetic() {
    let params = GlauberParams::new(4, 1.0, 1.4, 2.0).unwrap();
    let t = predicted_nucleation_time(&params).unwrap();
    assert!((t - 7.6f64.exp() / 64.0).abs() < 1e-9 * t);
}

#[test]
fn log_slope_approaches_the_barrier() {
    let params = GlauberParams::new(4, 1.0, 1.4, 6.0).unwrap();
    let r = exact_nucleation_time(&params).unwrap();
    // the 1/64 prefactor still shifts ln(E)/beta by ln(64)/6 ~ 0.69 at this temperature
    assert!((r.log_slope - 3.8).abs() <= 0.2 * 3.8, "slope {}", r.log_slope);
    let corrected = (r.direct_time / landscape(&params).unwrap().prefactor()).ln() / 6.0;
    assert!((corrected - 3.8).abs() <= 0.05 * 3.8, "corrected slope {corrected}");
    assert!((r.harmonic_time - r.harmonic_time_direct).abs() <= 1e-8 * r.harmonic_time);
    assert!(r.capacity_ratio > 1.0 && r.capacity_ratio < 1.1);
}

#[test]
fn three_torus_spectral_picture() {
    let beta = 4.0;
    let params = GlauberParams::new(3, 1.0, 1.4, beta).unwrap();
    let net = metropolis_network(&params).unwrap();
    let land = EnergyLandscape::from_params(&params).unwrap().report().unwrap();
    let (a, b) = (&land.cycle_a, &land.cycle_b);
    let gap = spectrum(&net).unwrap().gap;
    let upper = potential_gap_upper(&net, a, b).unwrap();
    let eq = equilibrium(&net, a, b).unwrap();
    let mu_v: f64 = net.masses().iter().zip(eq.potential.values()).map(|(m, v)| m * v).sum();
    let e_nu = mu_v / eq.capacity;
    assert!(gap <= upper);
    // both quantities track the inverse metastable time
    assert!(upper * e_nu > 0.5 && upper * e_nu < 2.0, "{}", upper * e_nu);
    assert!(gap * e_nu > 0.5 && gap * e_nu < 2.0, "{}", gap * e_nu);
    let tau1 = mixing_time(&net).unwrap().tau1;
    let e_ab = hitting_times(&net, &NodeSet::singleton(511)).unwrap().get(0);
    assert!(tau1 / e_ab > 0.5 && tau1 / e_ab < 2.0, "{}", tau1 / e_ab);
}

#[test]
fn exact_mode_limits() {
    assert!(matches!(
        landscape(&GlauberParams::new(5, 1.0, 1.4, 1.0).unwrap()),
        Err(ohmic::Error::SizeLimit { .. })
    ));
    assert!(GlauberParams::new(4, 1.0, 2.0, 1.0).is_err());
    assert!(GlauberParams::new(4, 1.0, 1.4, -1.0).is_err());
}
