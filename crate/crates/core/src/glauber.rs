//! Metropolis dynamics of the Ising model on a small periodic torus.
//!
//! Energies use `H(s) = -(J/2) sum_{<i,j>} s_i s_j - (h/2) sum_i s_i` over the
//! distinct nearest-neighbour pairs of the `L x L` torus. The single-spin-flip
//! network has `c(x, y) = exp(-beta max(H(x), H(y))) / (N Z)` for neighbouring
//! configurations, with `N = L^2`; its walk picks a uniform site and flips it
//! with Metropolis probability. Continuous-time quantities divide step counts
//! by `N` (each site carries a rate-one clock).
//!
//! Exact solves run on the quotient by the torus symmetry group (translations
//! and the dihedral group of the square), which lumps the chain exactly and
//! fixes the two homogeneous states.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{Network, NodeSet};
use crate::par;
use crate::potential::{equilibrium, hitting_times};

/// Largest torus handled exactly (sites).
pub const EXACT_SITES: usize = 16;
/// Energy tolerance for level sets.
pub const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlauberParams {
    /// Torus side.
    pub l: usize,
    pub j: f64,
    pub h: f64,
    pub beta: f64,
}

impl GlauberParams {
    pub fn new(l: usize, j: f64, h: f64, beta: f64) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParameter(format!("torus side {l} must be at least 2")));
        }
        for (name, v) in [("J", j), ("h", h), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        critical_length(j, h)?;
        Ok(GlauberParams { l, j, h, beta })
    }

    pub fn sites(&self) -> usize {
        self.l * self.l
    }

    fn check_exact(&self) -> Result<()> {
        if self.sites() > EXACT_SITES {
            return Err(Error::SizeLimit { what: "exact Glauber state space (sites)", size: self.sites(), limit: EXACT_SITES });
        }
        Ok(())
    }
}

/// `l_c = ceil(2J/h)`, defined when `2J/h > 1` is not an integer.
pub fn critical_length(j: f64, h: f64) -> Result<usize> {
    let ratio = 2.0 * j / h;
    if !(ratio > 1.0) || (ratio - ratio.round()).abs() < 1e-12 {
        return Err(Error::DegenerateRatio { ratio });
    }
    Ok(ratio.ceil() as usize)
}

/// A `±1` configuration on the torus; bit `i` set means spin `+1` at site `i = row * L + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SpinConfig {
    pub bits: u32,
    pub l: usize,
}

impl SpinConfig {
    pub fn from_index(l: usize, index: usize) -> Self {
        SpinConfig { bits: index as u32, l }
    }

    pub fn all_minus(l: usize) -> Self {
        SpinConfig { bits: 0, l }
    }

    pub fn all_plus(l: usize) -> Self {
        SpinConfig { bits: full_mask(l * l), l }
    }

    pub fn from_spins(l: usize, spins: &[i8]) -> Result<Self> {
        if spins.len() != l * l {
            return Err(Error::DimensionMismatch { expected: l * l, found: spins.len() });
        }
        let mut bits = 0u32;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                other => return Err(Error::InvalidParameter(format!("spin value {other}"))),
            }
        }
        Ok(SpinConfig { bits, l })
    }

    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn spin(&self, site: usize) -> i8 {
        if self.bits >> site & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn flipped(&self, site: usize) -> Self {
        SpinConfig { bits: self.bits ^ (1 << site), l: self.l }
    }

    pub fn plus_count(&self) -> u32 {
        self.bits.count_ones()
    }
}

fn full_mask(sites: usize) -> u32 {
    if sites >= 32 {
        u32::MAX
    } else {
        (1u32 << sites) - 1
    }
}

/// Distinct nearest-neighbour pairs of the `L x L` torus.
pub fn torus_bonds(l: usize) -> Vec<(usize, usize)> {
    let mut set = std::collections::BTreeSet::new();
    for r in 0..l {
        for c in 0..l {
            let i = r * l + c;
            for k in [r * l + (c + 1) % l, ((r + 1) % l) * l + c] {
                if k != i {
                    set.insert((i.min(k), i.max(k)));
                }
            }
        }
    }
    set.into_iter().collect()
}

fn energy_of(bits: u32, bonds: &[(usize, usize)], sites: usize, j: f64, h: f64) -> f64 {
    let broken = bonds.iter().filter(|&&(a, b)| (bits >> a ^ bits >> b) & 1 == 1).count() as f64;
    let aligned = bonds.len() as f64 - 2.0 * broken;
    let magnet = 2.0 * bits.count_ones() as f64 - sites as f64;
    -0.5 * j * aligned - 0.5 * h * magnet
}

pub fn hamiltonian(params: &GlauberParams, config: &SpinConfig) -> f64 {
    energy_of(config.bits, &torus_bonds(params.l), params.sites(), params.j, params.h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MinF(f64, usize);

impl Eq for MinF {}

impl PartialOrd for MinF {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MinF {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// The energy function of an exact-mode torus, independent of `beta`.
#[derive(Debug, Clone)]
pub struct EnergyLandscape {
    pub l: usize,
    pub j: f64,
    pub h: f64,
    energies: Vec<f64>,
}

impl EnergyLandscape {
    pub fn new(l: usize, j: f64, h: f64) -> Result<Self> {
        GlauberParams::new(l, j, h, 1.0)?.check_exact()?;
        let bonds = torus_bonds(l);
        let sites = l * l;
        let energies = par::map_indices(1 << sites, |s| energy_of(s as u32, &bonds, sites, j, h));
        Ok(EnergyLandscape { l, j, h, energies })
    }

    pub fn from_params(params: &GlauberParams) -> Result<Self> {
        Self::new(params.l, params.j, params.h)
    }

    pub fn sites(&self) -> usize {
        self.l * self.l
    }

    pub fn state_count(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, s: usize) -> f64 {
        self.energies[s]
    }

    pub fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn flips(&self, s: usize) -> impl Iterator<Item = usize> {
        (0..self.sites()).map(move |i| s ^ (1 << i))
    }

    /// `x -> Phi(source, x)`, the min-max energy over flip paths.
    pub fn minimax_from(&self, source: usize) -> Vec<f64> {
        let mut best = vec![f64::INFINITY; self.state_count()];
        let mut done = vec![false; self.state_count()];
        let mut heap = BinaryHeap::new();
        best[source] = self.energies[source];
        heap.push(MinF(best[source], source));
        while let Some(MinF(level, x)) = heap.pop() {
            if done[x] {
                continue;
            }
            done[x] = true;
            for y in self.flips(x) {
                let via = level.max(self.energies[y]);
                if via < best[y] {
                    best[y] = via;
                    heap.push(MinF(via, y));
                }
            }
        }
        best
    }

    /// `Phi(x, y)`.
    pub fn communication_height(&self, x: usize, y: usize) -> f64 {
        self.minimax_from(x)[y]
    }

    /// Connected component of `seed` in `{H < level}` under single flips.
    pub fn component_below(&self, seed: usize, level: f64) -> Vec<bool> {
        let mut inside = vec![false; self.state_count()];
        if self.energies[seed] >= level - LEVEL_TOL {
            return inside;
        }
        inside[seed] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(x) = queue.pop_front() {
            for y in self.flips(x) {
                if !inside[y] && self.energies[y] < level - LEVEL_TOL {
                    inside[y] = true;
                    queue.push_back(y);
                }
            }
        }
        inside
    }

    /// Quasi-square droplets of side lengths `l_c - 1` and `l_c` with one
    /// protuberance on a longer side, in every translation and orientation.
    pub fn droplet_set(&self, lc: usize) -> HashSet<u32> {
        let l = self.l as i64;
        let lc = lc as i64;
        let site = |r: i64, c: i64| (r.rem_euclid(l) * l + c.rem_euclid(l)) as u32;
        let mut out = HashSet::new();
        for r0 in 0..l {
            for c0 in 0..l {
                for (rows, cols) in [(lc - 1, lc), (lc, lc - 1)] {
                    let mut base = 0u32;
                    for r in 0..rows {
                        for c in 0..cols {
                            base |= 1 << site(r0 + r, c0 + c);
                        }
                    }
                    let slots: Vec<(i64, i64)> = if cols == lc {
                        (0..lc).flat_map(|k| [(r0 - 1, c0 + k), (r0 + rows, c0 + k)]).collect()
                    } else {
                        (0..lc).flat_map(|k| [(r0 + k, c0 - 1), (r0 + k, c0 + cols)]).collect()
                    };
                    for (r, c) in slots {
                        out.insert(base | 1 << site(r, c));
                    }
                }
            }
        }
        out
    }

    /// Full landscape analysis between the homogeneous states.
    pub fn report(&self) -> Result<LandscapeReport> {
        let lc = critical_length(self.j, self.h)?;
        let a = 0usize;
        let b = full_mask(self.sites()) as usize;
        let from_b = self.minimax_from(b);
        let phi = from_b[a];
        let ha = self.energies[a];
        let hb = self.energies[b];
        let min = self.min_energy();
        let b_is_ground = (0..self.state_count()).all(|x| x == b || self.energies[x] > hb + LEVEL_TOL);
        let in_a = self.component_below(a, phi);
        let in_b = self.component_below(b, phi);
        let gate: Vec<usize> = (0..self.state_count())
            .filter(|&z| (self.energies[z] - phi).abs() <= LEVEL_TOL)
            .filter(|&z| self.flips(z).any(|y| in_a[y]) && self.flips(z).any(|y| in_b[y]))
            .collect();
        let droplets = self.droplet_set(lc);
        let shape_failures = gate.iter().filter(|&&g| !droplets.contains(&(g as u32))).count();
        let stability = (0..self.state_count())
            .filter(|&x| x != a)
            .map(|x| from_b[x] - self.energies[x])
            .fold(f64::NEG_INFINITY, f64::max);
        let gamma = phi - ha;
        let lcf = lc as f64;
        Ok(LandscapeReport {
            l: self.l,
            j: self.j,
            h: self.h,
            critical_length: lc,
            energy_a: ha,
            energy_b: hb,
            b_is_ground_state: b_is_ground && (hb - min).abs() <= LEVEL_TOL,
            saddle_energy: phi,
            gamma,
            gamma_closed_form: 4.0 * self.j * lcf - self.h * (lcf * lcf - lcf + 1.0),
            cycle_a: NodeSet::from_mask(&in_a),
            cycle_b: NodeSet::from_mask(&in_b),
            gate_count: gate.len(),
            predicted_gate_count: 4 * lc * self.sites(),
            gate_shape_failures: shape_failures,
            gate,
            max_stability_outside_a: stability,
        })
    }

    /// Orbits of the torus symmetry group: `(class of each state, class count)`.
    pub fn orbits(&self) -> (Vec<usize>, usize) {
        let perms = torus_symmetries(self.l);
        let sites = self.sites();
        let reps = par::map_indices(self.state_count(), |s| {
            perms.iter().map(|p| permute(s as u32, p, sites)).min().expect("group is nonempty")
        });
        let mut distinct: Vec<u32> = reps.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let class_of = reps.iter().map(|r| distinct.binary_search(r).expect("listed")).collect();
        (class_of, distinct.len())
    }

    fn weights(&self, beta: f64) -> (Vec<f64>, f64) {
        let min = self.min_energy();
        let w: Vec<f64> = self.energies.iter().map(|e| (-beta * (e - min)).exp()).collect();
        let z = par::pairwise_sum(&w);
        (w, z)
    }

    /// The Metropolis network on all `2^N` states.
    pub fn network(&self, beta: f64) -> Result<Network> {
        let (n, entries) = self.entries(beta, None);
        Network::from_edges(n, entries)
    }

    /// The Metropolis network lumped by `classes`.
    pub fn lumped_network(&self, beta: f64, classes: &(Vec<usize>, usize)) -> Result<Network> {
        let (n, entries) = self.entries(beta, Some(classes));
        Network::from_edges(n, entries)
    }

    fn entries(&self, beta: f64, classes: Option<&(Vec<usize>, usize)>) -> (usize, Vec<(usize, usize, f64)>) {
        let (w, z) = self.weights(beta);
        let nsites = self.sites() as f64;
        let scale = 1.0 / (nsites * z);
        let class = |s: usize| classes.map_or(s, |c| c.0[s]);
        let count = classes.map_or(self.state_count(), |c| c.1);
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut loops = vec![0.0; count];
        for x in 0..self.state_count() {
            let mut reject = 0.0;
            for y in self.flips(x) {
                let accept = (-beta * (self.energies[y] - self.energies[x]).max(0.0)).exp();
                reject += 1.0 - accept;
                if y > x {
                    let c = w[x].min(w[y]) * scale;
                    let (p, q) = (class(x), class(y));
                    if p == q {
                        loops[p] += 2.0 * c;
                    } else {
                        *pairs.entry((p.min(q), p.max(q))).or_insert(0.0) += c;
                    }
                }
            }
            loops[class(x)] += w[x] / z * reject / nsites;
        }
        let mut entries: Vec<(usize, usize, f64)> = pairs.into_iter().map(|((p, q), c)| (p, q, c)).collect();
        entries.extend(loops.into_iter().enumerate().filter(|l| l.1 > 0.0).map(|(p, c)| (p, p, c)));
        (count, entries)
    }
}

fn torus_symmetries(l: usize) -> Vec<Vec<usize>> {
    let li = l as i64;
    let maps: [fn(i64, i64) -> (i64, i64); 8] = [
        |r, c| (r, c),
        |r, c| (c, -r),
        |r, c| (-r, -c),
        |r, c| (-c, r),
        |r, c| (r, -c),
        |r, c| (-r, c),
        |r, c| (c, r),
        |r, c| (-c, -r),
    ];
    let mut out = Vec::with_capacity(8 * l * l);
    for m in maps {
        for dr in 0..li {
            for dc in 0..li {
                let perm = (0..l * l)
                    .map(|i| {
                        let (r, c) = m((i / l) as i64, (i % l) as i64);
                        ((r + dr).rem_euclid(li) * li + (c + dc).rem_euclid(li)) as usize
                    })
                    .collect();
                out.push(perm);
            }
        }
    }
    out
}

fn permute(bits: u32, perm: &[usize], sites: usize) -> u32 {
    (0..sites).filter(|&i| bits >> i & 1 == 1).fold(0, |acc, i| acc | 1 << perm[i])
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeReport {
    pub l: usize,
    pub j: f64,
    pub h: f64,
    pub critical_length: usize,
    pub energy_a: f64,
    pub energy_b: f64,
    pub b_is_ground_state: bool,
    /// `Phi(a, b)`.
    pub saddle_energy: f64,
    /// `Phi(a, b) - H(a)`.
    pub gamma: f64,
    /// `4 J l_c - h (l_c^2 - l_c + 1)`.
    pub gamma_closed_form: f64,
    #[serde(skip)]
    pub cycle_a: NodeSet,
    #[serde(skip)]
    pub cycle_b: NodeSet,
    pub gate_count: usize,
    /// `4 l_c L^2`.
    pub predicted_gate_count: usize,
    /// Gate members outside the quasi-square plus protuberance family.
    pub gate_shape_failures: usize,
    #[serde(skip)]
    pub gate: Vec<usize>,
    /// `max_{x != a} Phi(x, b) - H(x)`.
    pub max_stability_outside_a: f64,
}

impl LandscapeReport {
    /// `3 l_c / ((2 l_c - 1) |G|)` with `|G| = 4 l_c L^2`.
    pub fn prefactor(&self) -> f64 {
        let lc = self.critical_length as f64;
        3.0 * lc / ((2.0 * lc - 1.0) * self.predicted_gate_count as f64)
    }

    /// Checks gate count, droplet shapes and that every gate member bridges the cycles.
    pub fn verify_gate(&self) -> Result<()> {
        if self.gate_count != self.predicted_gate_count {
            return Err(Error::GateMismatch(format!(
                "{} saddle configurations, expected 4 l_c L^2 = {}",
                self.gate_count, self.predicted_gate_count
            )));
        }
        if self.gate_shape_failures > 0 {
            return Err(Error::GateMismatch(format!(
                "{} saddle configurations are not quasi-squares with a protuberance",
                self.gate_shape_failures
            )));
        }
        Ok(())
    }
}

/// Landscape of the exact-mode torus of `params` (`beta` is ignored).
pub fn landscape(params: &GlauberParams) -> Result<LandscapeReport> {
    EnergyLandscape::from_params(params)?.report()
}

/// `Phi(x, y)` by min-max Dijkstra over single flips.
pub fn communication_height(params: &GlauberParams, x: &SpinConfig, y: &SpinConfig) -> Result<f64> {
    Ok(EnergyLandscape::from_params(params)?.communication_height(x.index(), y.index()))
}

/// The Metropolis network on `2^{L^2}` states.
pub fn metropolis_network(params: &GlauberParams) -> Result<Network> {
    EnergyLandscape::from_params(params)?.network(params.beta)
}

/// `3 l_c e^{Gamma beta} / ((2 l_c - 1) |G|)`, in continuous time.
pub fn predicted_nucleation_time(params: &GlauberParams) -> Result<f64> {
    let report = landscape(params)?;
    Ok(report.prefactor() * (report.gamma * params.beta).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct NucleationReport {
    pub beta: f64,
    /// `E_{nu_A}[tau_B]` from the capacity formula, continuous time.
    pub harmonic_time: f64,
    /// `sum_a nu_A(a) E_a[tau_B]` from direct hitting solves, continuous time.
    pub harmonic_time_direct: f64,
    /// `E_a[tau_b]`, continuous time.
    pub direct_time: f64,
    pub ratio: f64,
    pub capacity: f64,
    /// Capacity of `(A, B)` in the network restricted to `A ∪ G ∪ B`.
    pub reduced_capacity: f64,
    /// `capacity / reduced_capacity`.
    pub capacity_ratio: f64,
    pub predicted_time: f64,
    /// `direct_time / predicted_time`.
    pub predicted_ratio: f64,
    /// `ln(direct_time) / beta`.
    pub log_slope: f64,
}

/// Shared state for exact solves at several temperatures.
#[derive(Debug, Clone)]
pub struct NucleationStudy {
    pub landscape: EnergyLandscape,
    pub report: LandscapeReport,
    pub classes: (Vec<usize>, usize),
}

impl NucleationStudy {
    pub fn new(l: usize, j: f64, h: f64) -> Result<Self> {
        let landscape = EnergyLandscape::new(l, j, h)?;
        let report = landscape.report()?;
        let classes = landscape.orbits();
        Ok(NucleationStudy { landscape, report, classes })
    }

    fn class_set(&self, states: impl Iterator<Item = usize>) -> NodeSet {
        let (cls, count) = &self.classes;
        NodeSet::new(*count, states.map(|s| cls[s])).expect("class in range")
    }

    pub fn at(&self, beta: f64) -> Result<NucleationReport> {
        let net = self.landscape.lumped_network(beta, &self.classes)?;
        let n = self.landscape.sites() as f64;
        let a = self.class_set(self.report.cycle_a.iter());
        let b = self.class_set(self.report.cycle_b.iter());
        let gate = self.class_set(self.report.gate.iter().copied());
        let eq = equilibrium(&net, &a, &b)?;
        let mu_v: f64 = net.masses().iter().zip(eq.potential.values()).map(|(m, v)| m * v).sum();
        let harmonic_time = mu_v / eq.capacity / n;
        let to_b = hitting_times(&net, &b)?;
        let harmonic_time_direct =
            a.iter().map(|x| eq.harmonic_measure[x] * to_b.get(x)).sum::<f64>() / n;
        let (cls, _) = &self.classes;
        let b_state = full_mask(self.landscape.sites()) as usize;
        let direct_time = hitting_times(&net, &NodeSet::singleton(cls[b_state]))?.get(cls[0]) / n;
        let keep = a.union(&gate).union(&b);
        let reduced = net.induced(&keep)?;
        let local = |s: &NodeSet| NodeSet::new(keep.len(), s.iter().map(|x| keep.as_slice().binary_search(&x).expect("kept")));
        let reduced_capacity = equilibrium(&reduced, &local(&a)?, &local(&b)?)?.capacity;
        let predicted_time = self.report.prefactor() * (self.report.gamma * beta).exp();
        Ok(NucleationReport {
            beta,
            harmonic_time,
            harmonic_time_direct,
            direct_time,
            ratio: harmonic_time / direct_time,
            capacity: eq.capacity,
            reduced_capacity,
            capacity_ratio: eq.capacity / reduced_capacity,
            predicted_time,
            predicted_ratio: direct_time / predicted_time,
            log_slope: direct_time.ln() / beta,
        })
    }

    /// [`NucleationStudy::at`] for several temperatures, solved concurrently.
    pub fn sweep(&self, betas: &[f64]) -> Result<Vec<NucleationReport>> {
        par::map_slice(betas, |&b| self.at(b)).into_iter().collect()
    }
}

/// Exact nucleation times at `params.beta`.
pub fn exact_nucleation_time(params: &GlauberParams) -> Result<NucleationReport> {
    NucleationStudy::new(params.l, params.j, params.h)?.at(params.beta)
}
