//! Problem instances: mesh topology, node-arc incidence, sessions, MIMO
//! channels, and flow-conservation checks.
//!
//! Power is noise-normalized: a budget of `p` dBm becomes the linear SNR
//! scale `10^(p/10)` (10 dBm → 10), i.e. unit receiver noise is assumed.

use std::collections::VecDeque;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::ComplexMatrix;

/// Distances below this are clamped before computing path gain.
pub const MIN_PATH_DISTANCE: f64 = 0.05;
pub const MAX_TOPOLOGY_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: usize,
    pub dst: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<[f64; 2]>,
    d_max: f64,
    links: Vec<Link>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
}

/// Node-arc incidence matrix: `+1` at a link's transmitter, `-1` at its receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    nodes: usize,
    links: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub src: usize,
    pub dst: usize,
}

/// Network-layer primal variables: per-link per-session flow and session rates.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    links: usize,
    sessions: usize,
    /// Row-major `L × F`.
    t: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    /// `n_r × n_t` gain matrix.
    pub h: ComplexMatrix<f64>,
    /// Path gain `G · D^{-α}`.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n_t: usize,
    pub n_r: usize,
    pub d_max: f64,
    pub p_max_dbm: f64,
    pub g_pl: f64,
    pub alpha: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { n_t: 2, n_r: 2, d_max: 0.5, p_max_dbm: 10.0, g_pl: 1.0, alpha: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: Option<u64>,
    pub params: ModelParams,
    pub topology: Topology,
    pub incidence: IncidenceMatrix,
    pub sessions: Vec<Session>,
    pub channels: Vec<LinkChannel>,
    /// Linear, noise-normalized power budget per node.
    pub p_max: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScenarioParams {
    pub seed: u64,
    pub nodes: usize,
    pub sessions: usize,
    pub model: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowViolationReport {
    /// `max |A·T − S|` over all (node, session) entries.
    pub max_violation: f64,
    /// (node, session) pairs whose conservation residual exceeds the tolerance.
    pub violated: Vec<(usize, usize)>,
    /// Most negative entry of `T` or `s` (0 when all are non-negative).
    pub most_negative: f64,
    /// `S` has support only on each session's endpoints, columns sum to zero,
    /// and the source entry equals the session rate.
    pub source_sink_ok: bool,
}

impl FlowViolationReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.most_negative >= -tol && self.source_sink_ok
    }
}

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn path_gain(distance: f64, g_pl: f64, alpha: f64) -> f64 {
    g_pl * distance.max(MIN_PATH_DISTANCE).powf(-alpha)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Topology {
    /// Links every ordered pair of distinct nodes within `d_max` of each other.
    pub fn from_positions(positions: Vec<[f64; 2]>, d_max: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 nodes, got {}",
                positions.len()
            )));
        }
        if !(d_max > 0.0) {
            return Err(Error::InvalidParameter(format!("d_max must be positive, got {d_max}")));
        }
        let n = positions.len();
        let mut links = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = distance(positions[i], positions[j]);
                if d > 0.0 && d <= d_max {
                    links.push(Link { src: i, dst: j, distance: d });
                }
            }
        }
        Self::from_links(positions, d_max, links)
    }

    /// Explicit link list; each link must be within range and not a self-loop,
    /// and the underlying undirected graph must be connected.
    pub fn from_links(positions: Vec<[f64; 2]>, d_max: f64, links: Vec<Link>) -> Result<Self> {
        let n = positions.len();
        for (idx, l) in links.iter().enumerate() {
            if l.src >= n || l.dst >= n {
                return Err(Error::InvalidScenario(format!("link {idx} references a missing node")));
            }
            if l.src == l.dst {
                return Err(Error::InvalidScenario(format!("link {idx} is a self-loop")));
            }
            if !(l.distance > 0.0) || l.distance > d_max + 1e-12 {
                return Err(Error::InvalidScenario(format!(
                    "link {idx} has distance {} outside (0, {d_max}]",
                    l.distance
                )));
            }
        }
        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        for (idx, l) in links.iter().enumerate() {
            out_links[l.src].push(idx);
            in_links[l.dst].push(idx);
        }
        let topo = Self { positions, d_max, links, out_links, in_links };
        let unreachable = topo.unreachable_from_first();
        if !unreachable.is_empty() {
            return Err(Error::Disconnected { unreachable });
        }
        Ok(topo)
    }

    fn unreachable_from_first(&self) -> Vec<usize> {
        let n = self.positions.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &l in self.out_links[v].iter().chain(&self.in_links[v]) {
                let w = if self.links[l].src == v { self.links[l].dst } else { self.links[l].src };
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (0..n).filter(|&v| !seen[v]).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, l: usize) -> &Link {
        &self.links[l]
    }

    /// Indices of links transmitted by `node`.
    pub fn out_links(&self, node: usize) -> &[usize] {
        &self.out_links[node]
    }

    pub fn in_links(&self, node: usize) -> &[usize] {
        &self.in_links[node]
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        let (n, l) = (self.n_nodes(), self.n_links());
        let mut data = vec![0.0; n * l];
        for (idx, link) in self.links.iter().enumerate() {
            data[link.src * l + idx] = 1.0;
            data[link.dst * l + idx] = -1.0;
        }
        IncidenceMatrix { nodes: n, links: l, data }
    }
}

/// Builds the topology and its incidence matrix from node coordinates.
pub fn build_topology(positions: Vec<[f64; 2]>, d_max: f64) -> Result<(Topology, IncidenceMatrix)> {
    let topo = Topology::from_positions(positions, d_max)?;
    let inc = topo.incidence();
    Ok((topo, inc))
}

impl IncidenceMatrix {
    pub fn n_nodes(&self) -> usize {
        self.nodes
    }

    pub fn n_links(&self) -> usize {
        self.links
    }

    #[inline]
    pub fn get(&self, node: usize, link: usize) -> f64 {
        self.data[node * self.links + link]
    }

    pub fn column(&self, link: usize) -> Vec<f64> {
        (0..self.nodes).map(|n| self.get(n, link)).collect()
    }

    /// `A · x` for a vector of per-link values.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nodes)
            .map(|n| (0..self.links).map(|l| self.get(n, l) * x[l]).sum())
            .collect()
    }
}

impl FlowState {
    pub fn zeros(links: usize, sessions: usize) -> Self {
        Self { links, sessions, t: vec![0.0; links * sessions], s: vec![0.0; sessions] }
    }

    pub fn n_links(&self) -> usize {
        self.links
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions
    }

    #[inline]
    pub fn t(&self, link: usize, session: usize) -> f64 {
        self.t[link * self.sessions + session]
    }

    #[inline]
    pub fn t_mut(&mut self, link: usize, session: usize) -> &mut f64 {
        &mut self.t[link * self.sessions + session]
    }

    /// Total flow carried by a link, `⟨1, Tᵀe_l⟩`.
    pub fn load(&self, link: usize) -> f64 {
        self.t[link * self.sessions..(link + 1) * self.sessions].iter().sum()
    }

    pub fn loads(&self) -> Vec<f64> {
        (0..self.links).map(|l| self.load(l)).collect()
    }

    pub fn session_column(&self, session: usize) -> Vec<f64> {
        (0..self.links).map(|l| self.t(l, session)).collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.t.iter_mut().for_each(|x| *x *= factor);
        self.s.iter_mut().for_each(|x| *x *= factor);
    }

    /// `self += w · other`.
    pub fn add_scaled(&mut self, other: &FlowState, w: f64) {
        assert_eq!((self.links, self.sessions), (other.links, other.sessions));
        for (a, b) in self.t.iter_mut().zip(&other.t) {
            *a += w * b;
        }
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            *a += w * b;
        }
    }
}

/// Source-sink matrix `S` (`N × F`, row-major): `s_f` at the source, `-s_f` at the sink.
pub fn source_sink_matrix(n_nodes: usize, sessions: &[Session], rates: &[f64]) -> Vec<f64> {
    let f = sessions.len();
    let mut s = vec![0.0; n_nodes * f];
    for (idx, sess) in sessions.iter().enumerate() {
        s[sess.src * f + idx] = rates[idx];
        s[sess.dst * f + idx] = -rates[idx];
    }
    s
}

fn source_sink_structure_ok(s: &[f64], n_nodes: usize, sessions: &[Session], rates: &[f64]) -> bool {
    let f = sessions.len();
    sessions.iter().enumerate().all(|(idx, sess)| {
        let col: Vec<f64> = (0..n_nodes).map(|n| s[n * f + idx]).collect();
        let off_support = col
            .iter()
            .enumerate()
            .all(|(n, &v)| n == sess.src || n == sess.dst || v == 0.0);
        let sums_to_zero = col.iter().sum::<f64>().abs() <= 1e-12 * (1.0 + rates[idx].abs());
        off_support && sums_to_zero && col[sess.src] == rates[idx]
    })
}

/// Checks `A·T = S` and the sign/structure constraints of a flow state.
pub fn validate_flows(scenario: &Scenario, flow: &FlowState, tol: f64) -> Result<FlowViolationReport> {
    let (n, l, f) = (scenario.n_nodes(), scenario.n_links(), scenario.sessions.len());
    if flow.n_links() != l || flow.n_sessions() != f || flow.s.len() != f {
        return Err(Error::Dimension(format!(
            "flow state is {}x{} but scenario has {l} links and {f} sessions",
            flow.n_links(),
            flow.n_sessions()
        )));
    }
    let s = source_sink_matrix(n, &scenario.sessions, &flow.s);
    let mut max_violation: f64 = 0.0;
    let mut violated = Vec::new();
    for sess in 0..f {
        let at = scenario.incidence.apply(&flow.session_column(sess));
        for node in 0..n {
            let r = (at[node] - s[node * f + sess]).abs();
            max_violation = max_violation.max(r);
            if r > tol {
                violated.push((node, sess));
            }
        }
    }
    let most_negative = flow.t.iter().chain(&flow.s).fold(0.0f64, |m, &x| m.min(x));
    Ok(FlowViolationReport {
        max_violation,
        violated,
        most_negative,
        source_sink_ok: source_sink_structure_ok(&s, n, &scenario.sessions, &flow.s),
    })
}

impl Scenario {
    /// Assembles and validates a scenario from its parts.
    pub fn new(
        seed: Option<u64>,
        params: ModelParams,
        topology: Topology,
        sessions: Vec<Session>,
        channels: Vec<LinkChannel>,
    ) -> Result<Self> {
        if channels.len() != topology.n_links() {
            return Err(Error::InvalidScenario(format!(
                "{} channels for {} links",
                channels.len(),
                topology.n_links()
            )));
        }
        for (idx, ch) in channels.iter().enumerate() {
            if ch.h.rows() != params.n_r || ch.h.cols() != params.n_t {
                return Err(Error::InvalidScenario(format!(
                    "link {idx} channel is {}x{}, expected {}x{}",
                    ch.h.rows(),
                    ch.h.cols(),
                    params.n_r,
                    params.n_t
                )));
            }
            if !(ch.rho > 0.0) || !ch.rho.is_finite() {
                return Err(Error::InvalidScenario(format!("link {idx} has path gain {}", ch.rho)));
            }
        }
        let n = topology.n_nodes();
        for (idx, s) in sessions.iter().enumerate() {
            if s.src >= n || s.dst >= n || s.src == s.dst {
                return Err(Error::InvalidScenario(format!(
                    "session {idx} has invalid endpoints ({}, {})",
                    s.src, s.dst
                )));
            }
            if !reachable(&topology, s.src, s.dst) {
                return Err(Error::Unreachable { src: s.src, dst: s.dst });
            }
        }
        let p = dbm_to_linear(params.p_max_dbm);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidScenario(format!("power budget {} dBm", params.p_max_dbm)));
        }
        let incidence = topology.incidence();
        Ok(Self { seed, params, incidence, sessions, channels, p_max: vec![p; n], topology })
    }

    /// Topology from positions with i.i.d. Rayleigh channels drawn from `seed`.
    pub fn with_random_channels(
        positions: Vec<[f64; 2]>,
        sessions: Vec<Session>,
        params: ModelParams,
        seed: u64,
    ) -> Result<Self> {
        let topology = Topology::from_positions(positions, params.d_max)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = draw_channels(&mut rng, &topology, &params);
        Self::new(Some(seed), params, topology, sessions, channels)
    }

    pub fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    pub fn n_links(&self) -> usize {
        self.topology.n_links()
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScenarioFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        file.into_scenario()
    }
}

fn reachable(topology: &Topology, src: usize, dst: usize) -> bool {
    let mut seen = vec![false; topology.n_nodes()];
    let mut queue = VecDeque::from([src]);
    seen[src] = true;
    while let Some(v) = queue.pop_front() {
        if v == dst {
            return true;
        }
        for &l in topology.out_links(v) {
            let w = topology.link(l).dst;
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

fn draw_channels(rng: &mut ChaCha8Rng, topology: &Topology, params: &ModelParams) -> Vec<LinkChannel> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    topology
        .links()
        .iter()
        .map(|link| {
            let h = ComplexMatrix::from_fn(params.n_r, params.n_t, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(re * scale, im * scale)
            });
            LinkChannel { h, rho: path_gain(link.distance, params.g_pl, params.alpha) }
        })
        .collect()
}

/// Random mesh: uniform node positions in the unit square (redrawn until the
/// graph is connected), Rayleigh channels, and sessions with random distinct
/// endpoints. Fully determined by `seed`.
pub fn random_scenario(p: &RandomScenarioParams) -> Result<Scenario> {
    if p.nodes < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {}", p.nodes)));
    }
    if p.model.n_t == 0 || p.model.n_r == 0 {
        return Err(Error::InvalidParameter("antenna counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for _ in 0..MAX_TOPOLOGY_ATTEMPTS {
        let positions: Vec<[f64; 2]> =
            (0..p.nodes).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let topology = match Topology::from_positions(positions, p.model.d_max) {
            Ok(t) => t,
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        };
        let channels = draw_channels(&mut rng, &topology, &p.model);
        let sessions = (0..p.sessions)
            .map(|_| {
                let src = rng.random_range(0..p.nodes);
                let mut dst = rng.random_range(0..p.nodes - 1);
                if dst >= src {
                    dst += 1;
                }
                Session { src, dst }
            })
            .collect();
        return Scenario::new(Some(p.seed), p.model, topology, sessions, channels);
    }
    Err(Error::RetryBudgetExhausted(MAX_TOPOLOGY_ATTEMPTS))
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkRecord {
    src: usize,
    dst: usize,
    d: f64,
    rho: f64,
    h_re: Vec<f64>,
    h_im: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    seed: Option<u64>,
    n: usize,
    f: usize,
    nt: usize,
    nr: usize,
    dmax: f64,
    pmax_dbm: f64,
    gpl: f64,
    alpha: f64,
    positions: Vec<[f64; 2]>,
    links: Vec<LinkRecord>,
    sessions: Vec<Session>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let p = &s.params;
        Self {
            seed: s.seed,
            n: s.n_nodes(),
            f: s.n_sessions(),
            nt: p.n_t,
            nr: p.n_r,
            dmax: p.d_max,
            pmax_dbm: p.p_max_dbm,
            gpl: p.g_pl,
            alpha: p.alpha,
            positions: s.topology.positions().to_vec(),
            links: s
                .topology
                .links()
                .iter()
                .zip(&s.channels)
                .map(|(l, ch)| LinkRecord {
                    src: l.src,
                    dst: l.dst,
                    d: l.distance,
                    rho: ch.rho,
                    h_re: ch.h.real_parts(),
                    h_im: ch.h.imag_parts(),
                })
                .collect(),
            sessions: s.sessions.clone(),
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        if self.positions.len() != self.n {
            return Err(Error::InvalidScenario(format!(
                "n = {} but {} positions",
                self.n,
                self.positions.len()
            )));
        }
        if self.sessions.len() != self.f {
            return Err(Error::InvalidScenario(format!(
                "f = {} but {} sessions",
                self.f,
                self.sessions.len()
            )));
        }
        let params = ModelParams {
            n_t: self.nt,
            n_r: self.nr,
            d_max: self.dmax,
            p_max_dbm: self.pmax_dbm,
            g_pl: self.gpl,
            alpha: self.alpha,
        };
        let mut links = Vec::with_capacity(self.links.len());
        let mut channels = Vec::with_capacity(self.links.len());
        for rec in self.links {
            links.push(Link { src: rec.src, dst: rec.dst, distance: rec.d });
            let h = ComplexMatrix::from_parts(self.nr, self.nt, &rec.h_re, &rec.h_im)?;
            channels.push(LinkChannel { h, rho: rec.rho });
        }
        let topology = Topology::from_links(self.positions, self.dmax, links)?;
        Scenario::new(self.seed, params, topology, self.sessions, channels)
    }
}
