//! Seeded Monte Carlo trajectories of the network walk.
//!
//! Trajectory `k` draws from `ChaCha8Rng` seeded with the run seed and set to
//! stream `k`, so results do not depend on scheduling. Self-loop holding is
//! sampled in one geometric draw; the continuous-time clock (rate-one jumps,
//! self-loops included) adds a `Gamma(k, 1)` duration for `k` held steps.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{Network, NodeSet};
use crate::par;
use crate::potential::{equilibrium, hitting_times};

/// Default per-trajectory step budget.
pub const MAX_STEPS: u64 = 1_000_000_000;
/// Largest transient set for the exact escape law.
pub const EXACT_LAW_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub max_steps: u64,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig { samples, seed, max_steps: MAX_STEPS }
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self, trajectory: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trajectory as u64);
        rng
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Estimate {
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        let mean = par::pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        let var = if n > 1 { par::pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, stderr: (var / n as f64).sqrt(), samples: n, seed }
    }

    /// `|mean - exact|` in standard errors; zero-variance estimates must be exact.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = (self.mean - exact).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d <= 1e-12 * exact.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Where trajectories start.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Node(usize),
    /// Unnormalized weights over all nodes.
    Distribution(Vec<f64>),
}

/// Precomputed jump tables.
#[derive(Debug, Clone)]
pub struct Walker {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    cumulative: Vec<f64>,
    /// Probability of leaving the current node in one step.
    leave: Vec<f64>,
}

impl Walker {
    pub fn new(net: &Network) -> Self {
        let n = net.node_count();
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut cumulative = Vec::new();
        let mut leave = Vec::with_capacity(n);
        for x in 0..n {
            let mut acc = 0.0;
            for (y, c, _) in net.neighbors(x) {
                acc += c;
                targets.push(y);
                cumulative.push(acc);
            }
            let off = acc;
            let start = offsets[x];
            for v in &mut cumulative[start..] {
                *v /= off;
            }
            leave.push(if net.self_loop(x) == 0.0 { 1.0 } else { off / net.mass(x) });
            offsets.push(targets.len());
        }
        Walker { offsets, targets, cumulative, leave }
    }

    /// One step of the walk, self-loops included.
    pub fn step<R: Rng>(&self, x: usize, rng: &mut R) -> usize {
        if self.leave[x] < 1.0 && rng.random::<f64>() >= self.leave[x] {
            return x;
        }
        self.jump(x, rng)
    }

    /// A move to a neighbor, conditioned on leaving.
    fn jump<R: Rng>(&self, x: usize, rng: &mut R) -> usize {
        let r = self.offsets[x]..self.offsets[x + 1];
        let u: f64 = rng.random();
        let cum = &self.cumulative[r.clone()];
        let k = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.targets[r.start + k]
    }

    /// Number of steps until the walk leaves `x` (the leaving step included).
    fn holding<R: Rng>(&self, x: usize, rng: &mut R) -> u64 {
        let p = self.leave[x];
        if p >= 1.0 {
            return 1;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        (u.ln() / (-p).ln_1p()).floor() as u64 + 1
    }
}

fn clock<R: Rng>(steps: u64, rng: &mut R) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    Gamma::new(steps as f64, 1.0).expect("positive shape").sample(rng)
}

fn draw_start<R: Rng>(start: &Start, rng: &mut R) -> usize {
    match start {
        Start::Node(x) => *x,
        Start::Distribution(w) => {
            let total: f64 = w.iter().sum();
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            for (x, &p) in w.iter().enumerate() {
                acc += p;
                if u < acc {
                    return x;
                }
            }
            w.iter().rposition(|&p| p > 0.0).expect("nonzero weights")
        }
    }
}

fn check_start(net: &Network, start: &Start) -> Result<()> {
    let n = net.node_count();
    match start {
        Start::Node(x) if *x >= n => Err(Error::NodeOutOfRange { index: *x, len: n }),
        Start::Distribution(w) if w.len() != n => Err(Error::DimensionMismatch { expected: n, found: w.len() }),
        Start::Distribution(w) if w.iter().any(|p| !(*p >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) => {
            Err(Error::WeightsNotNormalized { sum: w.iter().sum() })
        }
        _ => Ok(()),
    }
}

fn check_pair(net: &Network, a: &NodeSet, b: &NodeSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    for s in [a, b] {
        if let Some(&x) = s.as_slice().last().filter(|&&x| x >= net.node_count()) {
            return Err(Error::NodeOutOfRange { index: x, len: net.node_count() });
        }
    }
    match a.first_common(b) {
        Some(x) => Err(Error::Overlap(x)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HittingReport {
    /// `P(tau_A < tau_B)`.
    pub prob_a_first: Estimate,
    /// `E[tau_B]` in steps.
    pub time_to_b: Estimate,
    /// `E[tau_B]` on the rate-one continuous clock.
    pub time_to_b_continuous: Estimate,
}

struct Run {
    end_steps: u64,
    clock: f64,
    a_first: bool,
    flux: f64,
}

/// Runs until `stop` and tracks an optional directed edge.
fn run<R: Rng>(
    walker: &Walker,
    mut x: usize,
    a: &[bool],
    stop: &[bool],
    edge: Option<(usize, usize)>,
    max_steps: u64,
    rng: &mut R,
) -> Result<Run> {
    let mut steps = 0u64;
    let mut time = 0.0;
    let mut a_first = a[x];
    let mut flux = 0.0;
    while !stop[x] {
        let k = walker.holding(x, rng);
        steps += k;
        if steps > max_steps {
            return Err(Error::TimeoutExceeded { max_steps });
        }
        time += clock(k, rng);
        let y = walker.jump(x, rng);
        if let Some((u, v)) = edge {
            if (x, y) == (u, v) {
                flux += 1.0;
            } else if (x, y) == (v, u) {
                flux -= 1.0;
            }
        }
        a_first |= a[y] && !stop[y];
        x = y;
    }
    Ok(Run { end_steps: steps, clock: time, a_first, flux })
}

/// Estimates `P(tau_A < tau_B)` and `E[tau_B]` from `start`.
pub fn simulate_hitting(net: &Network, start: &Start, a: &NodeSet, b: &NodeSet, cfg: &McConfig) -> Result<HittingReport> {
    cfg.check()?;
    check_pair(net, a, b)?;
    check_start(net, start)?;
    let walker = Walker::new(net);
    let n = net.node_count();
    let (am, bm) = (a.mask(n), b.mask(n));
    let runs = par::map_indices(cfg.samples, |k| {
        let mut rng = cfg.rng(k);
        let x = draw_start(start, &mut rng);
        run(&walker, x, &am, &bm, None, cfg.max_steps, &mut rng)
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&Run) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
    Ok(HittingReport {
        prob_a_first: Estimate::from_samples(&col(&|r| if r.a_first { 1.0 } else { 0.0 }), cfg.seed),
        time_to_b: Estimate::from_samples(&col(&|r| r.end_steps as f64), cfg.seed),
        time_to_b_continuous: Estimate::from_samples(&col(&|r| r.clock), cfg.seed),
    })
}

/// Net number of crossings of the directed edge `(x, y)` before `tau_B`,
/// starting from the harmonic measure of `A`.
pub fn net_flux(net: &Network, a: &NodeSet, b: &NodeSet, edge: (usize, usize), cfg: &McConfig) -> Result<Estimate> {
    cfg.check()?;
    check_pair(net, a, b)?;
    if net.edge_id(edge.0, edge.1).is_none() {
        return Err(Error::InfiniteResistanceEdge { x: edge.0, y: edge.1 });
    }
    let nu = equilibrium(net, a, b)?.harmonic_measure;
    let start = Start::Distribution(nu);
    let walker = Walker::new(net);
    let n = net.node_count();
    let (am, bm) = (a.mask(n), b.mask(n));
    let fluxes = par::map_indices(cfg.samples, |k| {
        let mut rng = cfg.rng(k);
        let x = draw_start(&start, &mut rng);
        run(&walker, x, &am, &bm, Some(edge), cfg.max_steps, &mut rng).map(|r| r.flux)
    });
    Ok(Estimate::from_samples(&fluxes.into_iter().collect::<Result<Vec<_>>>()?, cfg.seed))
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeLaw {
    /// `E_source[tau]` from the exact hitting-time solve.
    pub exact_mean: f64,
    /// Sorted samples of `tau / exact_mean` on the continuous clock.
    #[serde(skip)]
    pub normalized: Vec<f64>,
    /// Kolmogorov-Smirnov distance of `normalized` to `Exp(1)`.
    pub ks_statistic: f64,
    /// Empirical `T` with `P(tau > T) = 1/e`.
    pub quantile: f64,
    /// `exact_mean / quantile`.
    pub mean_over_quantile: f64,
    /// Exact sup-distance between the law of `tau / E[tau]` and `Exp(1)`.
    pub exact_ks: Option<f64>,
    pub estimate: Estimate,
}

/// Law of the continuous-time hitting time of `targets` from `source`.
pub fn escape_time_law(net: &Network, source: usize, targets: &NodeSet, cfg: &McConfig) -> Result<EscapeLaw> {
    cfg.check()?;
    let n = net.node_count();
    if source >= n {
        return Err(Error::NodeOutOfRange { index: source, len: n });
    }
    if targets.is_empty() {
        return Err(Error::EmptyTarget);
    }
    if targets.contains(source) {
        return Err(Error::XInTargets(source));
    }
    let exact_mean = hitting_times(net, targets)?.get(source);
    let walker = Walker::new(net);
    let none = vec![false; n];
    let stop = targets.mask(n);
    let times = par::map_indices(cfg.samples, |k| {
        let mut rng = cfg.rng(k);
        run(&walker, source, &none, &stop, None, cfg.max_steps, &mut rng).map(|r| r.clock)
    });
    let times = times.into_iter().collect::<Result<Vec<_>>>()?;
    let estimate = Estimate::from_samples(&times, cfg.seed);
    let mut normalized: Vec<f64> = times.iter().map(|t| t / exact_mean).collect();
    normalized.sort_by(f64::total_cmp);
    let ks_statistic = ks_exponential(&normalized);
    let m = normalized.len();
    let q = ((m as f64) * (1.0 - (-1.0f64).exp())).ceil() as usize;
    let quantile = normalized[q.clamp(1, m) - 1] * exact_mean;
    let exact_ks = if n - targets.len() <= EXACT_LAW_LIMIT { Some(exact_law_ks(net, source, targets, exact_mean)?) } else { None };
    Ok(EscapeLaw {
        exact_mean,
        normalized,
        ks_statistic,
        quantile,
        mean_over_quantile: exact_mean / quantile,
        exact_ks,
        estimate,
    })
}

/// KS distance of sorted samples to `Exp(1)`.
pub fn ks_exponential(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x).exp();
            f64::max((i + 1) as f64 / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// `sup_s |P(tau > s E[tau]) - e^{-s}|` from the spectral decomposition of
/// the walk killed on `targets`, evaluated on a grid of `s in [0, 12]`.
fn exact_law_ks(net: &Network, source: usize, targets: &NodeSet, mean: f64) -> Result<f64> {
    let n = net.node_count();
    let keep: Vec<usize> = (0..n).filter(|&x| !targets.contains(x)).collect();
    let k = keep.len();
    let mut pos = vec![usize::MAX; n];
    for (i, &x) in keep.iter().enumerate() {
        pos[x] = i;
    }
    let m = net.masses();
    let mut s = DMatrix::zeros(k, k);
    for (i, &x) in keep.iter().enumerate() {
        s[(i, i)] = net.self_loop(x) / m[x];
        for (y, c, _) in net.neighbors(x) {
            if pos[y] != usize::MAX {
                s[(i, pos[y])] = c / (m[x] * m[y]).sqrt();
            }
        }
    }
    let eig = SymmetricEigen::new(s);
    let src = pos[source];
    // P_src(tau > t) = sum_k e^{-t (1 - theta_k)} u_k(src) / sqrt(m_src) * sum_y u_k(y) sqrt(m_y)
    let coef: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            let u = eig.eigenvectors.column(j);
            let w: f64 = keep.iter().enumerate().map(|(i, &y)| u[i] * m[y].sqrt()).sum();
            (1.0 - eig.eigenvalues[j], u[src] / m[source].sqrt() * w)
        })
        .collect();
    let grid = 24_000;
    let sup = (0..=grid)
        .map(|g| {
            let s = 12.0 * g as f64 / grid as f64;
            let surv: f64 = coef.iter().map(|&(rate, c)| c * (-rate * s * mean).exp()).sum();
            (surv - (-s).exp()).abs()
        })
        .fold(0.0, f64::max);
    Ok(sup)
}

/// Independent coupling: both walks step independently until they meet.
///
/// Returns the meeting step, or `None` when the walks are still apart after `cap` steps.
fn meet<R: Rng>(walker: &Walker, mut x: usize, mut y: usize, cap: u64, rng: &mut R) -> Option<u64> {
    let mut t = 0;
    while x != y {
        if t >= cap {
            return None;
        }
        x = walker.step(x, rng);
        y = walker.step(y, rng);
        t += 1;
    }
    Some(t)
}

/// Whether `x` and `y` sit on opposite sides of a bipartite network without self-loops.
fn never_meet(net: &Network, x: usize, y: usize) -> bool {
    if net.self_loops().iter().any(|&s| s > 0.0) {
        return false;
    }
    let mut side = vec![u8::MAX; net.node_count()];
    side[x] = 0;
    let mut queue = std::collections::VecDeque::from([x]);
    while let Some(z) = queue.pop_front() {
        for (w, _, _) in net.neighbors(z) {
            if side[w] == u8::MAX {
                side[w] = 1 - side[z];
                queue.push_back(w);
            } else if side[w] == side[z] {
                return false;
            }
        }
    }
    side[y] == 1
}

/// Mean meeting time of the independent coupling started at `(x, y)`.
pub fn coupling_time(net: &Network, x: usize, y: usize, cfg: &McConfig) -> Result<Estimate> {
    cfg.check()?;
    for z in [x, y] {
        check_start(net, &Start::Node(z))?;
    }
    if never_meet(net, x, y) {
        return Err(Error::InvalidParameter(format!(
            "independent walks from {x} and {y} keep opposite parity on a bipartite network and never meet"
        )));
    }
    let walker = Walker::new(net);
    let times = par::map_indices(cfg.samples, |k| {
        let mut rng = cfg.rng(k);
        meet(&walker, x, y, cfg.max_steps, &mut rng)
            .map(|t| t as f64)
            .ok_or(Error::TimeoutExceeded { max_steps: cfg.max_steps })
    });
    Ok(Estimate::from_samples(&times.into_iter().collect::<Result<Vec<_>>>()?, cfg.seed))
}

/// `t -> P(tau_c > t)` for the independent coupling of `x` with a walk started from `y`.
pub fn coupling_tail(net: &Network, x: usize, y: &Start, times: &[u64], cfg: &McConfig) -> Result<Vec<(u64, Estimate)>> {
    cfg.check()?;
    check_start(net, &Start::Node(x))?;
    check_start(net, y)?;
    let cap = times.iter().copied().max().unwrap_or(0);
    let walker = Walker::new(net);
    let meets = par::map_indices(cfg.samples, |k| {
        let mut rng = cfg.rng(k);
        let y0 = draw_start(y, &mut rng);
        meet(&walker, x, y0, cap, &mut rng)
    });
    Ok(times
        .iter()
        .map(|&t| {
            let tail: Vec<f64> = meets.iter().map(|m| if m.is_none_or(|s| s > t) { 1.0 } else { 0.0 }).collect();
            (t, Estimate::from_samples(&tail, cfg.seed))
        })
        .collect())
}
