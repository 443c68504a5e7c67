#![allow(dead_code)]

use mimo_mesh::hermitian::{ComplexMatrix, HermitianMatrix};
use mimo_mesh::mac::{MacUser, NodeMac};
use mimo_mesh::network::{
    random_scenario, Link, LinkChannel, ModelParams, RandomScenarioParams, Scenario, Session, Topology,
};
use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// (seed, nodes, sessions) of the desk scenarios used by the solver checks.
pub const DESK_SCENARIOS: [(u64, usize, usize); 5] = [(1, 6, 2), (2, 7, 2), (3, 8, 3), (4, 9, 3), (5, 10, 3)];

pub fn desk_scenario(seed: u64, nodes: usize, sessions: usize) -> Scenario {
    random_scenario(&RandomScenarioParams { seed, nodes, sessions, model: ModelParams::default() }).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex<f64> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix<f64> {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// `(A + A†) / 2` for Gaussian `A`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
    let a = random_matrix(rng, n, n);
    let h = ComplexMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    HermitianMatrix::from_matrix(h).unwrap()
}

/// Random positive definite matrix with unit trace.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
    let a = random_matrix(rng, n, n);
    let m = HermitianMatrix::identity(n).congruence_adjoint(&a, 1.0).add(&HermitianMatrix::scaled_identity(n, 0.05));
    let t = m.trace();
    m.scale(1.0 / t)
}

/// Feasible covariances: random shapes with total trace `fill · P`.
pub fn random_covariances(rng: &mut ChaCha8Rng, k: usize, n: usize, p: f64, fill: f64) -> Vec<HermitianMatrix<f64>> {
    let shares: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = shares.iter().sum();
    shares.iter().map(|s| random_density(rng, n).scale(fill * p * s / total)).collect()
}

pub fn random_node(rng: &mut ChaCha8Rng, k: usize, n_t: usize, n_r: usize) -> NodeMac<f64> {
    let users = (0..k)
        .map(|i| MacUser { link: i, h: random_matrix(rng, n_r, n_t), rho: rng.random_range(0.2..5.0) })
        .collect();
    NodeMac::new(0, users, rng.random_range(1.0..20.0)).unwrap()
}

pub fn scenario_from(
    positions: Vec<[f64; 2]>,
    links: &[(usize, usize)],
    sessions: Vec<Session>,
    seed: u64,
) -> Scenario {
    let model = ModelParams::default();
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let links: Vec<Link> = links
        .iter()
        .map(|&(src, dst)| Link { src, dst, distance: dist(positions[src], positions[dst]) })
        .collect();
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let channels = links
        .iter()
        .map(|l| LinkChannel {
            h: random_matrix(&mut rng, model.n_r, model.n_t),
            rho: mimo_mesh::network::path_gain(l.distance, model.g_pl, model.alpha),
        })
        .collect();
    let topo = Topology::from_links(positions, model.d_max, links).unwrap();
    Scenario::new(Some(seed), model, topo, sessions, channels).unwrap()
}

/// Two nodes, one directed link, one session across it.
pub fn single_link_scenario(seed: u64) -> Scenario {
    scenario_from(vec![[0.3, 0.5], [0.7, 0.5]], &[(0, 1)], vec![Session { src: 0, dst: 1 }], seed)
}

/// Six nodes: a hub with three leaves in range of it but not of each other,
/// two outer nodes, and one session from the hub to each leaf.
pub fn hub_scenario(seed: u64) -> Scenario {
    let positions = vec![[0.5, 0.5], [0.5, 0.8], [0.24, 0.35], [0.76, 0.35], [0.45, 1.0], [0.05, 0.2]];
    let sessions = (1..=3).map(|dst| Session { src: 0, dst }).collect();
    let topo = Topology::from_positions(positions.clone(), ModelParams::default().d_max).unwrap();
    let pairs: Vec<(usize, usize)> = topo.links().iter().map(|l| (l.src, l.dst)).collect();
    scenario_from(positions, &pairs, sessions, seed)
}

/// Eigenvalues of a 2×2 Hermitian `[[a, b], [b*, d]]` in closed form, descending.
pub fn eig2(m: &HermitianMatrix<f64>) -> [f64; 2] {
    let x = m.as_matrix();
    let (a, d, b) = (x[(0, 0)].re, x[(1, 1)].re, x[(0, 1)].norm());
    let mid = 0.5 * (a + d);
    let r = (0.25 * (a - d).powi(2) + b * b).sqrt();
    [mid + r, mid - r]
}

/// Single-user capacity in bits by closed-form water-filling over the mode
/// gains (independent of the library's bisection).
pub fn waterfill_capacity(gains: &[f64], p: f64) -> f64 {
    let mut g: Vec<f64> = gains.iter().copied().filter(|&x| x > 1e-12).collect();
    g.sort_by(|a, b| b.total_cmp(a));
    for m in (1..=g.len()).rev() {
        let level = (p + g[..m].iter().map(|x| 1.0 / x).sum::<f64>()) / m as f64;
        if level > 1.0 / g[m - 1] {
            return g[..m].iter().map(|x| (level * x).log2()).sum();
        }
    }
    0.0
}

/// Single-link capacity `C(P)` of a 2×2 link computed without the library's
/// eigensolver or water-filling.
pub fn link_capacity_2x2(ch: &LinkChannel, p: f64) -> f64 {
    let gram = HermitianMatrix::identity(2).congruence_adjoint(&ch.h, ch.rho);
    waterfill_capacity(&eig2(&gram), p)
}
