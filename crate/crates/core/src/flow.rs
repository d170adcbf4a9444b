//! Dinic max-flow with real capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: f64,
    rev: usize,
}

pub(crate) struct FlowNetwork {
    adj: Vec<Vec<Edge>>,
    level: Vec<i64>,
    iter: Vec<usize>,
    eps: f64,
}

impl FlowNetwork {
    /// `eps` is the capacity below which an edge counts as saturated.
    pub fn new(nodes: usize, eps: f64) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            level: vec![0; nodes],
            iter: vec![0; nodes],
            eps,
        }
    }

    /// Add `from -> to`; returns the position of the edge in `from`'s list.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let pos = self.adj[from].len();
        let rev = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Edge { to, cap, rev });
        let back = pos;
        self.adj[to].push(Edge {
            to: from,
            cap: 0.0,
            rev: back,
        });
        pos
    }

    /// Flow currently carried by an edge added with capacity `original`.
    pub fn flow_on(&self, from: usize, pos: usize, original: f64) -> f64 {
        (original - self.adj[from][pos].cap).max(0.0)
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for e in &self.adj[u] {
                if e.cap > self.eps && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[u] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.iter[u] < self.adj[u].len() {
            let i = self.iter[u];
            let (to, cap) = (self.adj[u][i].to, self.adj[u][i].cap);
            if cap > self.eps && self.level[u] < self.level[to] {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.adj[u][i].cap -= got;
                    let rev = self.adj[u][i].rev;
                    self.adj[to][rev].cap += got;
                    return got;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
    }
}
