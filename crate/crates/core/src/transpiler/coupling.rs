//! Directed coupling graphs, presets and shortest-path distances.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance reported between nodes in different components.
pub const UNREACHABLE: usize = usize::MAX;

const DEVICES: [(&str, &str); 4] = [
    ("tenerife", include_str!("../../data/devices/tenerife.json")),
    ("melbourne", include_str!("../../data/devices/melbourne.json")),
    ("tokyo", include_str!("../../data/devices/tokyo.json")),
    ("johannesburg", include_str!("../../data/devices/johannesburg.json")),
];

/// Qubit connectivity: a CX with control `c` and target `t` is native iff
/// `(c, t)` is an edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct CouplingGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<RawGraph> for CouplingGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        CouplingGraph::new(raw.n, raw.edges.into_iter().map(|[c, t]| (c, t)))
    }
}

impl From<CouplingGraph> for RawGraph {
    fn from(g: CouplingGraph) -> Self {
        RawGraph { n: g.n, edges: g.edges.into_iter().map(|(c, t)| [c, t]).collect() }
    }
}

impl CouplingGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one qubit".into()));
        }
        let mut set = BTreeSet::new();
        for (c, t) in edges {
            if c == t {
                return Err(Error::Graph(format!("self-loop on qubit {c}")));
            }
            if c >= n || t >= n {
                return Err(Error::Graph(format!("edge ({c}, {t}) out of range for {n} qubits")));
            }
            set.insert((c, t));
        }
        Ok(CouplingGraph { n, edges: set })
    }

    fn bidirectional(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]))
    }

    pub fn all_to_all(n: usize) -> Result<Self> {
        Self::bidirectional(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    pub fn line(n: usize) -> Result<Self> {
        Self::bidirectional(n, (1..n).map(|a| (a - 1, a)))
    }

    /// Ring of `n` qubits (a line for `n <= 2`).
    pub fn ring(n: usize) -> Result<Self> {
        let closing = (n > 2).then_some((n - 1, 0));
        Self::bidirectional(n, (1..n).map(|a| (a - 1, a)).chain(closing))
    }

    /// Nearest-neighbour grid. The largest square `s×s` with `s² <= n` is
    /// numbered row-major; remaining qubits fill a new right column (top to
    /// bottom) and then a new bottom row (left to right).
    pub fn grid(n: usize) -> Result<Self> {
        let s = (1..=n).take_while(|k| k * k <= n).last().unwrap_or(0);
        let mut cells = Vec::with_capacity(n);
        for r in 0..s {
            for col in 0..s {
                cells.push((r, col));
            }
        }
        let extra = (0..s).map(|r| (r, s)).chain((0..=s).map(|col| (s, col)));
        cells.extend(extra.take(n - s * s));
        let index = |cell: (usize, usize)| cells.iter().position(|&x| x == cell);
        let mut pairs = Vec::new();
        for (i, &(r, col)) in cells.iter().enumerate() {
            for nb in [(r + 1, col), (r, col + 1)] {
                if let Some(j) = index(nb) {
                    pairs.push((i, j));
                }
            }
        }
        Self::bidirectional(n, pairs)
    }

    /// One of the shipped device graphs.
    pub fn device(name: &str) -> Result<Self> {
        let (_, text) = DEVICES
            .iter()
            .find(|(d, _)| d.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Graph(format!("unknown device `{name}`")))?;
        serde_json::from_str(text).map_err(|e| Error::Graph(format!("device `{name}`: {e}")))
    }

    pub fn device_names() -> impl Iterator<Item = &'static str> {
        DEVICES.iter().map(|(d, _)| *d)
    }

    /// Parse `all-to-all:N`, `line:N`, `loop:N`, `grid:N` (or `name(N)`), or a
    /// device name.
    pub fn preset(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, arg) = if let Some((name, rest)) = spec.split_once(':') {
            (name, Some(rest))
        } else if let Some((name, rest)) = spec.split_once('(') {
            (name, Some(rest.strip_suffix(')').ok_or_else(|| Error::Graph(format!("unbalanced `{spec}`")))?))
        } else {
            (spec, None)
        };
        let size = || -> Result<usize> {
            arg.ok_or_else(|| Error::Graph(format!("preset `{name}` needs a size")))?
                .trim()
                .parse()
                .map_err(|_| Error::Graph(format!("bad size in `{spec}`")))
        };
        match name.trim() {
            "all-to-all" | "full" => Self::all_to_all(size()?),
            "line" => Self::line(size()?),
            "loop" | "ring" => Self::ring(size()?),
            "grid" => Self::grid(size()?),
            other if arg.is_none() => Self::device(other),
            other => Err(Error::Graph(format!("unknown preset `{other}`"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Graph(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, control: usize, target: usize) -> bool {
        self.edges.contains(&(control, target))
    }

    /// Edge in either direction.
    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Undirected neighbours, ascending.
    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(c, t)| if c == q { Some(t) } else if t == q { Some(c) } else { None })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Undirected edges `(a, b)` with `a < b`, ascending.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self.edges.iter().map(|&(c, t)| (c.min(t), c.max(t))).collect();
        set.into_iter().collect()
    }

    /// All-pairs shortest-path lengths on the undirected skeleton.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        let adj: Vec<Vec<usize>> = (0..self.n).map(|q| self.neighbors(q)).collect();
        (0..self.n)
            .map(|src| {
                let mut dist = vec![UNREACHABLE; self.n];
                dist[src] = 0;
                let mut queue = VecDeque::from([src]);
                while let Some(u) = queue.pop_front() {
                    for &v in &adj[u] {
                        if dist[v] == UNREACHABLE {
                            dist[v] = dist[u] + 1;
                            queue.push_back(v);
                        }
                    }
                }
                dist
            })
            .collect()
    }

    /// Subgraph on `nodes`, relabelled so `nodes[i]` becomes `i`.
    pub fn induced(&self, nodes: &[usize]) -> Result<Self> {
        let pos = |q: usize| nodes.iter().position(|&x| x == q);
        if let Some(&bad) = nodes.iter().find(|&&q| q >= self.n) {
            return Err(Error::Graph(format!("node {bad} out of range for {} qubits", self.n)));
        }
        let edges = self.edges.iter().filter_map(|&(c, t)| Some((pos(c)?, pos(t)?)));
        Self::new(nodes.len(), edges)
    }

    pub fn is_connected(&self) -> bool {
        self.distances()[0].iter().all(|&d| d != UNREACHABLE)
    }
}

/// Physical qubits that host an `m`-qubit circuit.
///
/// Without `search` this is `0..m`, which must induce a connected subgraph.
/// With `search` (graphs of at most 20 qubits) every connected `m`-subset is
/// scored by the summed pairwise distance within it, then by edge count; the
/// lexicographically first best subset wins.
pub fn select_region(graph: &CouplingGraph, m: usize, search: bool) -> Result<Vec<usize>> {
    if m == 0 || m > graph.n() {
        return Err(Error::Graph(format!("cannot place {m} qubits on a {}-qubit graph", graph.n())));
    }
    if !search {
        let nodes: Vec<usize> = (0..m).collect();
        if !graph.induced(&nodes)?.is_connected() {
            return Err(Error::Graph(format!("qubits 0..{m} do not form a connected region")));
        }
        return Ok(nodes);
    }
    if graph.n() > 20 {
        return Err(Error::Graph(format!("placement search is limited to 20 qubits, graph has {}", graph.n())));
    }
    let mut best: Option<((usize, std::cmp::Reverse<usize>), Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..m).collect();
    loop {
        let sub = graph.induced(&subset)?;
        if sub.is_connected() {
            let total: usize = sub.distances().iter().flatten().sum();
            let key = (total, std::cmp::Reverse(sub.undirected_edges().len()));
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, subset.clone()));
            }
        }
        if !next_combination(&mut subset, graph.n()) {
            break;
        }
    }
    best.map(|(_, s)| s).ok_or_else(|| Error::Graph(format!("no connected region of {m} qubits")))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}
