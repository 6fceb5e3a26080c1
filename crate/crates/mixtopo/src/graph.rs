//! Graph representation, degree bookkeeping, connectivity utilities and
//! edge-list file I/O shared by the generators and analysis modules.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("node {0} has no out-neighbors")]
    ZeroOutDegree(u32),
}

/// Simple graph over dense node ids `0..n`.
///
/// Undirected graphs store every edge as two arcs; `edge_count` counts
/// undirected edges once. Adjacency lists are kept sorted and free of
/// self-loops and duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

/// What was discarded while building a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropReport {
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSequence {
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeSummary {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

impl Graph {
    /// Builds a simple graph from raw arcs, dropping self-loops and
    /// duplicate arcs. For undirected graphs each input pair is inserted
    /// in both directions.
    pub fn build(
        n: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> (Graph, DropReport) {
        let mut adjacency = vec![Vec::new(); n];
        let mut report = DropReport::default();
        for (u, v) in edges {
            assert!((u as usize) < n && (v as usize) < n, "node id out of range");
            if u == v {
                report.self_loops += 1;
                continue;
            }
            adjacency[u as usize].push(v);
            if !directed {
                adjacency[v as usize].push(u);
            }
        }
        let mut arcs = 0usize;
        for list in &mut adjacency {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            report.duplicates += before - list.len();
            arcs += list.len();
        }
        if !directed {
            // each duplicate undirected edge was counted twice above
            report.duplicates /= 2;
        }
        let edge_count = if directed { arcs } else { arcs / 2 };
        (
            Graph {
                directed,
                adjacency,
                edge_count,
            },
            report,
        )
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Undirected edges for undirected graphs, arcs for directed ones.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adjacency[u as usize]
    }

    pub fn out_degree(&self, u: u32) -> usize {
        self.adjacency[u as usize].len()
    }

    pub fn has_arc(&self, u: u32, v: u32) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence {
            degrees: self.adjacency.iter().map(|a| a.len()).collect(),
        }
    }

    /// Per-node degrees with min/max/mean. Mean is `2L/n` for undirected
    /// graphs and arcs/n for directed ones.
    pub fn degree_stats(&self) -> (DegreeSequence, DegreeSummary) {
        let seq = self.degree_sequence();
        let min = seq.degrees.iter().copied().min().unwrap_or(0);
        let max = seq.degrees.iter().copied().max().unwrap_or(0);
        let arcs: usize = seq.degrees.iter().sum();
        let mean = arcs as f64 / self.n() as f64;
        (seq, DegreeSummary { min, max, mean })
    }

    /// True when every node is reachable from node 0 ignoring arc
    /// direction (weak connectivity).
    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.component_of(0).len() == self.n()
    }

    fn undirected_view(&self) -> Vec<Vec<u32>> {
        if !self.directed {
            return self.adjacency.clone();
        }
        let mut view = vec![Vec::new(); self.n()];
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                view[u].push(v);
                view[v as usize].push(u as u32);
            }
        }
        for list in &mut view {
            list.sort_unstable();
            list.dedup();
        }
        view
    }

    fn component_of(&self, start: u32) -> Vec<u32> {
        let view = self.undirected_view();
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([start]);
        seen[start as usize] = true;
        let mut comp = vec![start];
        while let Some(u) = queue.pop_front() {
            for &v in &view[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp
    }

    /// Largest (weakly) connected component, nodes relabeled `0..n'`
    /// preserving relative order. Ties between equal-size components go to
    /// the one containing the smallest original node id. Returns the new
    /// graph, the original ids of the retained nodes (index = new id) and
    /// the fraction of nodes kept.
    pub fn giant_component(&self) -> (Graph, Vec<u32>, f64) {
        assert!(self.n() >= 1);
        let view = self.undirected_view();
        let mut seen = vec![false; self.n()];
        let mut best: Vec<u32> = Vec::new();
        for start in 0..self.n() as u32 {
            if seen[start as usize] {
                continue;
            }
            let mut comp = vec![start];
            seen[start as usize] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &view[u as usize] {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            // first occurrence wins ties: components are discovered in order
            // of their smallest node id
            if comp.len() > best.len() {
                best = comp;
            }
        }
        best.sort_unstable();
        let mut new_id = vec![u32::MAX; self.n()];
        for (i, &old) in best.iter().enumerate() {
            new_id[old as usize] = i as u32;
        }
        let mut arcs: Vec<(u32, u32)> = Vec::new();
        for &old in &best {
            let u = new_id[old as usize];
            for &w in &self.adjacency[old as usize] {
                let v = new_id[w as usize];
                if v == u32::MAX {
                    continue;
                }
                if self.directed || u < v {
                    arcs.push((u, v));
                }
            }
        }
        let (g, _) = Graph::build(best.len(), self.directed, arcs);
        let fraction = best.len() as f64 / self.n() as f64;
        (g, best, fraction)
    }
}

/// Writes an edge list: header comment, then one arc per line. Undirected
/// edges are emitted once with `u < v`.
pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut out = String::new();
    writeln!(out, "# directed={} n={}", u8::from(g.directed()), g.n()).unwrap();
    for u in 0..g.n() as u32 {
        for &v in g.neighbors(u) {
            if g.directed() || u < v {
                writeln!(out, "{u} {v}").unwrap();
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses an edge-list file. Lines starting with `#` are headers/comments;
/// a `# directed=<0|1> n=<int>` header overrides the `directed` argument
/// and minimum node count. Self-loops and duplicate arcs are dropped and
/// counted in the report.
pub fn load_edge_list(
    path: impl AsRef<Path>,
    directed: bool,
) -> Result<(Graph, DropReport), GraphError> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, directed)
}

pub fn parse_edge_list(text: &str, directed: bool) -> Result<(Graph, DropReport), GraphError> {
    let mut directed = directed;
    let mut header_n = 0usize;
    let mut arcs: Vec<(u32, u32)> = Vec::new();
    let mut max_id: Option<u32> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            for field in rest.split_whitespace() {
                if let Some(v) = field.strip_prefix("directed=") {
                    directed = v == "1";
                } else if let Some(v) = field.strip_prefix("n=") {
                    header_n = v.parse().map_err(|_| GraphError::Parse {
                        line: idx + 1,
                        msg: format!("bad node count {v:?}"),
                    })?;
                }
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u32, GraphError> {
            tok.ok_or(GraphError::Parse {
                line: idx + 1,
                msg: "expected two node ids".into(),
            })?
            .parse()
            .map_err(|_| GraphError::Parse {
                line: idx + 1,
                msg: format!("not a non-negative integer: {line:?}"),
            })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        if it.next().is_some() {
            return Err(GraphError::Parse {
                line: idx + 1,
                msg: "trailing tokens after edge".into(),
            });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        arcs.push((u, v));
    }
    let n = match max_id {
        Some(m) => (m as usize + 1).max(header_n),
        None if header_n > 0 => header_n,
        None => return Err(GraphError::Empty),
    };
    Ok(Graph::build(n, directed, arcs))
}
