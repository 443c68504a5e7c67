//! Network-layer dual subproblem: proportional-fair session rates routed on
//! minimum-price paths.
//!
//! For fixed link prices the network term separates per session into
//! `max ln s − c·s` over rates `s` and path costs `c`. Any flow split over
//! non-cheapest paths only raises `c`, so each session rides one cheapest
//! path at rate `1/c` (capped at `s_max` when the path is nearly free).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::network::{FlowState, Scenario, Topology};

/// Default session-rate cap used when the cheapest path price vanishes.
pub const DEFAULT_S_MAX: f64 = 1e6;

/// Non-negative price per unit flow on every link.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if let Some(bad) = u.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("prices must be finite and >= 0, got {bad}")));
        }
        Ok(Self(u))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PriceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionPath {
    /// Link indices from source to destination.
    pub links: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingSolution {
    pub flow: FlowState,
    pub paths: Vec<SessionPath>,
    /// `Σ_f (ln s_f − c_f s_f)`.
    pub theta_net: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    hops: usize,
}

impl Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.hops.cmp(&other.hops))
    }
}

#[derive(Debug, PartialEq)]
struct HeapEntry {
    label: Label,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, hops, node).
        other.label.cmp(&self.label).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra on `(price, hops)`; among equal labels the predecessor with the
/// smallest node id wins, which makes the chosen path deterministic.
pub fn shortest_path(topology: &Topology, u: &[f64], src: usize, dst: usize) -> Result<SessionPath> {
    let n = topology.n_nodes();
    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    best[src] = Some(Label { cost: 0.0, hops: 0 });
    heap.push(HeapEntry { label: Label { cost: 0.0, hops: 0 }, node: src });
    while let Some(HeapEntry { label, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == dst {
            break;
        }
        for &l in topology.out_links(node) {
            let w = topology.link(l).dst;
            if done[w] {
                continue;
            }
            let cand = Label { cost: label.cost + u[l], hops: label.hops + 1 };
            let better = match best[w] {
                None => true,
                Some(cur) => match cand.cmp(&cur) {
                    Ordering::Less => true,
                    Ordering::Equal => pred[w].is_some_and(|p| topology.link(p).src > node),
                    Ordering::Greater => false,
                },
            };
            if better {
                best[w] = Some(cand);
                pred[w] = Some(l);
                heap.push(HeapEntry { label: cand, node: w });
            }
        }
    }
    let Some(label) = best[dst] else {
        return Err(Error::Unreachable { src, dst });
    };
    let mut links = Vec::with_capacity(label.hops);
    let mut v = dst;
    while v != src {
        let l = pred[v].expect("settled node has a predecessor");
        links.push(l);
        v = topology.link(l).src;
    }
    links.reverse();
    let cost = links.iter().map(|&l| u[l]).sum();
    Ok(SessionPath { links, cost })
}

/// Cheapest path for every session under prices `u`.
pub fn shortest_paths(scenario: &Scenario, u: &PriceVector) -> Result<Vec<SessionPath>> {
    if u.len() != scenario.n_links() {
        return Err(Error::Dimension(format!("{} prices for {} links", u.len(), scenario.n_links())));
    }
    scenario
        .sessions
        .iter()
        .map(|s| shortest_path(&scenario.topology, u, s.src, s.dst))
        .collect()
}

/// Optimal rate for `max ln s − c s` with `s ≤ s_max`.
pub fn session_rate(cost: f64, s_max: f64) -> f64 {
    if cost * s_max <= 1.0 {
        s_max
    } else {
        1.0 / cost
    }
}

/// Solves the network-layer subproblem exactly for link prices `u`.
pub fn net_subproblem(scenario: &Scenario, u: &PriceVector, s_max: f64) -> Result<RoutingSolution> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidParameter(format!("s_max must be positive, got {s_max}")));
    }
    let paths = shortest_paths(scenario, u)?;
    let mut flow = FlowState::zeros(scenario.n_links(), scenario.n_sessions());
    let mut theta_net = 0.0;
    for (f, path) in paths.iter().enumerate() {
        let s = session_rate(path.cost, s_max);
        flow.s[f] = s;
        for &l in &path.links {
            *flow.t_mut(l, f) = s;
        }
        theta_net += s.ln() - path.cost * s;
    }
    Ok(RoutingSolution { flow, paths, theta_net })
}
