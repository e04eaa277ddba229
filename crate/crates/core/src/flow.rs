//! Successive-shortest-path min-cost flow on real capacities.
//!
//! Only used for the tie-broken transport plan; the plain `OT_d` value never
//! goes through here.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// Residual capacity below this is treated as saturated.
const CAP_EPS: f64 = 1e-15;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct FlowGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

#[derive(PartialEq)]
struct Visit {
    dist: f64,
    node: usize,
}

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FlowGraph {
    pub(crate) fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes], edges: Vec::new() }
    }

    /// Adds an arc with nonnegative cost and returns its id.
    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        debug_assert!(cost >= 0.0);
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge { to: from, cap: 0.0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow currently on arc `id`.
    pub(crate) fn flow(&self, id: usize) -> f64 {
        self.edges[id ^ 1].cap
    }

    /// Ships up to `amount` from `s` to `t` at minimum cost; returns the
    /// amount shipped.
    pub(crate) fn min_cost_flow(&mut self, s: usize, t: usize, amount: f64) -> f64 {
        let n = self.adj.len();
        let mut potential = vec![0.0f64; n];
        let mut shipped = 0.0;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev_edge = vec![usize::MAX; n];
        while amount - shipped > CAP_EPS {
            dist.fill(f64::INFINITY);
            prev_edge.fill(usize::MAX);
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Visit { dist: 0.0, node: s });
            while let Some(Visit { dist: d, node: u }) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap <= CAP_EPS {
                        continue;
                    }
                    let reduced = (edge.cost + potential[u] - potential[edge.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[edge.to] {
                        dist[edge.to] = nd;
                        prev_edge[edge.to] = e;
                        heap.push(Visit { dist: nd, node: edge.to });
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }
            let mut push = amount - shipped;
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            shipped += push;
        }
        shipped
    }
}
