//! Minimum-weight perfect matching of detection events, against each other
//! or the boundary, and conversion of the matching into corrections.
//!
//! Shortest paths over the line lattice are computed once per graph (one
//! Dijkstra per dot) and shared by every shot. Per shot, the events form a
//! complete graph whose edges are those path lengths; each event also gets a
//! boundary twin, twins are joined by zero-weight edges, and an exact blossom
//! matcher finds the optimum.

mod blossom;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

pub use blossom::max_weight_matching;

use crate::dgraph::{Dot, MatchingGraph};
use crate::engine::DetectionEventSet;
use crate::error::{Error, Result};

/// Fixed-point scale used to feed path lengths to the integer blossom
/// matcher. Rounding error per edge is below 2^-34.
const WEIGHT_SCALE: f64 = (1u64 << 33) as f64;

const NO_LINE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Decoder {
    pub graph: MatchingGraph,
    nodes: usize,
    /// `adjacency[u]` = `(neighbour, line index)`.
    adjacency: Vec<Vec<(usize, u32)>>,
    /// Row-major `[source][target]` over real dots (rows) and all nodes
    /// including the boundary (columns).
    dist: Vec<f64>,
    parity: Vec<bool>,
    pred_line: Vec<u32>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (distance, node index); node index order is (site, round).
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Decoder {
    pub fn new(graph: MatchingGraph) -> Self {
        let dots = graph.dot_count();
        let nodes = dots + 1;
        let mut adjacency = vec![Vec::new(); nodes];
        for (i, line) in graph.lines.iter().enumerate() {
            let (Some(a), Some(b)) = (graph.dot_index(line.a), graph.dot_index(line.b)) else {
                continue;
            };
            if a == b {
                continue;
            }
            adjacency[a].push((b, i as u32));
            adjacency[b].push((a, i as u32));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut decoder = Decoder {
            graph,
            nodes,
            adjacency,
            dist: vec![f64::INFINITY; dots * nodes],
            parity: vec![false; dots * nodes],
            pred_line: vec![NO_LINE; dots * nodes],
        };
        for source in 0..dots {
            decoder.dijkstra(source);
        }
        decoder
    }

    /// Label-setting shortest paths from `source`. The boundary is a sink:
    /// paths end there but never pass through it.
    fn dijkstra(&mut self, source: usize) {
        let boundary = self.nodes - 1;
        let row = source * self.nodes;
        let mut done = vec![false; self.nodes];
        let mut heap = BinaryHeap::new();
        self.dist[row + source] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: source });
        while let Some(HeapEntry { dist, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if node == boundary {
                continue;
            }
            for &(next, line) in &self.adjacency[node] {
                let nd = dist + self.graph.lines[line as usize].weight;
                let cur = self.dist[row + next];
                if !done[next] && nd < cur {
                    self.dist[row + next] = nd;
                    self.pred_line[row + next] = line;
                    self.parity[row + next] =
                        self.parity[row + node] ^ self.graph.lines[line as usize].correction.flips_logical;
                    heap.push(HeapEntry { dist: nd, node: next });
                }
            }
        }
    }

    fn node_of(&self, dot: Dot) -> Result<usize> {
        match self.graph.dot_index(dot) {
            Some(i) if !dot.is_boundary() => Ok(i),
            _ => Err(Error::UnknownDot(dot.to_string())),
        }
    }

    /// Shortest-path length between two nodes (either may be the boundary).
    pub fn distance(&self, a: Dot, b: Dot) -> Result<f64> {
        let (src, dst) = self.row_col(a, b)?;
        Ok(self.dist[src * self.nodes + dst])
    }

    fn row_col(&self, a: Dot, b: Dot) -> Result<(usize, usize)> {
        if a.is_boundary() {
            if b.is_boundary() {
                return Err(Error::UnknownDot("boundary-to-boundary path".into()));
            }
            return self.row_col(b, a);
        }
        let src = self.node_of(a)?;
        let dst = if b.is_boundary() { self.nodes - 1 } else { self.node_of(b)? };
        Ok((src, dst))
    }

    /// Indices of the lines along the stored shortest path from `a` to `b`.
    pub fn path(&self, a: Dot, b: Dot) -> Result<Vec<usize>> {
        let (src, dst) = self.row_col(a, b)?;
        let row = src * self.nodes;
        let mut out = Vec::new();
        let mut node = dst;
        while node != src {
            let line = self.pred_line[row + node];
            if line == NO_LINE {
                return Err(Error::Graph(format!("{a} and {b} are not connected")));
            }
            out.push(line as usize);
            let l = &self.graph.lines[line as usize];
            let (x, y) = (self.graph.dot_index(l.a).unwrap(), self.graph.dot_index(l.b).unwrap());
            node = if x == node { y } else { x };
        }
        out.reverse();
        Ok(out)
    }

    fn path_parity(&self, src: usize, dst: usize) -> bool {
        self.parity[src * self.nodes + dst]
    }

    pub fn build_event_graph(&self, events: &DetectionEventSet) -> Result<EventGraph> {
        let nodes = events
            .dots
            .iter()
            .map(|&d| self.node_of(d))
            .collect::<Result<Vec<_>>>()?;
        let n = nodes.len();
        let boundary = self.nodes - 1;
        let mut pair_distances = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist[nodes[i] * self.nodes + nodes[j]];
                pair_distances[i * n + j] = d;
                pair_distances[j * n + i] = d;
            }
        }
        let boundary_distances = nodes.iter().map(|&u| self.dist[u * self.nodes + boundary]).collect();
        Ok(EventGraph {
            events: events.dots.clone(),
            nodes,
            pair_distances,
            boundary_distances,
        })
    }

    /// Matches the events and returns the decoder's logical parity.
    pub fn decode(&self, events: &DetectionEventSet) -> Result<Decoded> {
        let eg = self.build_event_graph(events)?;
        let matching = min_weight_match(&eg)?;
        let boundary = self.nodes - 1;
        let mut logical_flip = false;
        for &(i, j) in &matching.pairs {
            logical_flip ^= self.path_parity(eg.nodes[i], eg.nodes[j]);
        }
        for &i in &matching.boundary_matches {
            logical_flip ^= self.path_parity(eg.nodes[i], boundary);
        }
        Ok(Decoded { event_graph: eg, matching, logical_flip })
    }

    pub fn corrections(&self, decoded: &Decoded) -> Result<CorrectionSet> {
        corrections_from_matching(&decoded.matching, &decoded.event_graph, self)
    }

    /// Events left after removing the endpoints of every correction line
    /// (symmetric difference). Empty when the corrections explain the history.
    pub fn residual_events(&self, events: &DetectionEventSet, corrections: &CorrectionSet) -> BTreeSet<Dot> {
        let mut residual: BTreeSet<Dot> = events.dots.iter().copied().collect();
        for &k in &corrections.lines {
            let l = &self.graph.lines[k];
            for d in [l.a, l.b] {
                if !d.is_boundary() && !residual.remove(&d) {
                    residual.insert(d);
                }
            }
        }
        residual
    }
}

/// Detection events with their pairwise and boundary path lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct EventGraph {
    pub events: Vec<Dot>,
    nodes: Vec<usize>,
    /// Row-major `n x n`.
    pub pair_distances: Vec<f64>,
    pub boundary_distances: Vec<f64>,
}

impl EventGraph {
    /// An event graph with arbitrary distances, detached from any lattice.
    pub fn from_distances(pair_distances: Vec<f64>, boundary_distances: Vec<f64>) -> Self {
        let n = boundary_distances.len();
        assert_eq!(pair_distances.len(), n * n, "pair distance matrix must be n x n");
        EventGraph {
            events: (0..n).map(|i| Dot::new(i, 0)).collect(),
            nodes: (0..n).collect(),
            pair_distances,
            boundary_distances,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    #[inline]
    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        self.pair_distances[i * self.len() + j]
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Matching {
    /// Event index pairs, `i < j`.
    pub pairs: Vec<(usize, usize)>,
    pub boundary_matches: Vec<usize>,
    pub total_weight: f64,
}

#[derive(Clone, Debug)]
pub struct Decoded {
    pub event_graph: EventGraph,
    pub matching: Matching,
    pub logical_flip: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CorrectionSet {
    /// Parity of logical-cut crossings over every matched path.
    pub logical_flip: bool,
    /// Stabilizer measurements `(site, round)` to flip.
    pub measurement_flips: BTreeSet<(u32, u32)>,
    /// Lines used an odd number of times.
    pub lines: Vec<usize>,
}

fn to_fixed(w: f64) -> i64 {
    (w * WEIGHT_SCALE).round() as i64 * 2
}

/// Minimum-weight matching where every event is paired with another event
/// or with the boundary (boundary capacity unlimited).
pub fn min_weight_match(eg: &EventGraph) -> Result<Matching> {
    let n = eg.len();
    let bd = &eg.boundary_distances;
    if bd.iter().any(|d| !d.is_finite()) {
        return Err(Error::Graph("an event cannot reach the boundary".into()));
    }
    match n {
        0 => return Ok(Matching::default()),
        1 => {
            return Ok(Matching { pairs: vec![], boundary_matches: vec![0], total_weight: bd[0] });
        }
        2 => {
            let pair = eg.pair_distance(0, 1);
            return Ok(if pair < bd[0] + bd[1] {
                Matching { pairs: vec![(0, 1)], boundary_matches: vec![], total_weight: pair }
            } else {
                Matching { pairs: vec![], boundary_matches: vec![0, 1], total_weight: bd[0] + bd[1] }
            });
        }
        _ => {}
    }

    // Events are 0..n, boundary twins n..2n.
    let mut edges: Vec<(usize, usize, i64)> = Vec::with_capacity(n * (n - 1) + n);
    for i in 0..n {
        for j in i + 1..n {
            let d = eg.pair_distance(i, j);
            // A pair no cheaper than both boundary matches is never needed.
            if d.is_finite() && d < bd[i] + bd[j] {
                edges.push((i, j, to_fixed(d)));
            }
        }
        edges.push((i, n + i, to_fixed(bd[i])));
        for j in i + 1..n {
            edges.push((n + i, n + j, 0));
        }
    }
    let max_w = edges.iter().map(|e| e.2).max().unwrap_or(0);
    let offset = max_w + 2;
    let flipped: Vec<_> = edges.iter().map(|&(i, j, w)| (i, j, offset - w)).collect();
    let mate = max_weight_matching(2 * n, &flipped, true);

    let mut m = Matching::default();
    for i in 0..n {
        match mate[i] {
            Some(j) if j < n => {
                if i < j {
                    m.pairs.push((i, j));
                    m.total_weight += eg.pair_distance(i, j);
                }
            }
            Some(j) if j == n + i => {
                m.boundary_matches.push(i);
                m.total_weight += bd[i];
            }
            other => {
                return Err(Error::Graph(format!("matcher left event {i} unmatched ({other:?})")));
            }
        }
    }
    Ok(m)
}

/// XOR of the correction metadata along every matched path.
pub fn corrections_from_matching(m: &Matching, eg: &EventGraph, decoder: &Decoder) -> Result<CorrectionSet> {
    let mut odd: BTreeSet<usize> = BTreeSet::new();
    let mut toggle = |lines: Vec<usize>| {
        for k in lines {
            if !odd.remove(&k) {
                odd.insert(k);
            }
        }
    };
    for &(i, j) in &m.pairs {
        toggle(decoder.path(eg.events[i], eg.events[j])?);
    }
    for &i in &m.boundary_matches {
        toggle(decoder.path(eg.events[i], Dot::Boundary)?);
    }
    let mut out = CorrectionSet::default();
    for &k in &odd {
        let c = decoder.graph.lines[k].correction;
        out.logical_flip ^= c.flips_logical;
        if let Some(meas) = c.measurement {
            if !out.measurement_flips.remove(&meas) {
                out.measurement_flips.insert(meas);
            }
        }
    }
    out.lines = odd.into_iter().collect();
    Ok(out)
}
