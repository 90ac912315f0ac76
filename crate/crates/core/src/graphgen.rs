//! Undirected graphs with mandatory self-loops.
//!
//! Every node is its own neighbour: `N(v)` contains `v`, the adjacency
//! matrix has a unit diagonal and degrees count the self-loop. Self-loops are
//! implicit in every serialized form.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, tag};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    n: usize,
    /// sorted neighbour lists, each containing the node itself
    neighbors: Vec<Vec<usize>>,
    /// unordered pairs `(i, j)` with `i < j`, sorted
    edges: Vec<(usize, usize)>,
    seed: Option<u64>,
}

/// Wire form: `{n, edges: [[i, j], ...], seed}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(raw: GraphJson) -> Result<Self> {
        Graph::from_edges(raw.n, raw.edges.iter().map(|e| (e[0], e[1])), raw.seed)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| [i, j]).collect(),
            seed: g.seed,
        }
    }
}

impl Graph {
    /// Builds a graph from unordered pairs. Pairs `(i, i)` are accepted and
    /// ignored since self-loops are always present; duplicates collapse.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut pairs = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a != b {
                pairs.push((a.min(b), a.max(b)));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut neighbors: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        for &(i, j) in &pairs {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            neighbors,
            edges: pairs,
            seed,
        })
    }

    /// Parses the plain edge-list format: one `i j` pair per line,
    /// 0-indexed. Blank lines and `#` comments are skipped. When `n` is not
    /// given it is one more than the largest index seen.
    pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut max_index = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::Parse(format!("line {}: '{s}' is not a node index", lineno + 1))
                })
            };
            match fields.as_slice() {
                [a, b] => {
                    let (a, b) = (parse(a)?, parse(b)?);
                    max_index = max_index.max(a).max(b);
                    pairs.push((a, b));
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected two node indices",
                        lineno + 1
                    )))
                }
            }
        }
        let n = match n {
            Some(n) => n,
            None if pairs.is_empty() => {
                return Err(Error::Parse("empty edge list and no node count".into()))
            }
            None => max_index + 1,
        };
        Graph::from_edges(n, pairs, None)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(i, j)| format!("{i} {j}\n")).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbourhood `N(v)`, including `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Entry of the self-looped adjacency matrix.
    pub fn adjacency(&self, i: usize, j: usize) -> u8 {
        u8::from(self.neighbors[i].binary_search(&j).is_ok())
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (v, list) in self.neighbors.iter().enumerate() {
            for &u in list {
                a[(v, u)] = 1.0;
            }
        }
        a
    }

    /// Nodes at distance at most `hops` from any node of `sources`.
    pub fn within_hops(&self, sources: &[usize], hops: usize) -> Vec<bool> {
        let mut reached = vec![false; self.n];
        let mut frontier: Vec<usize> = sources.to_vec();
        for &s in sources {
            reached[s] = true;
        }
        for _ in 0..hops {
            let mut next = Vec::new();
            for &v in &frontier {
                for &u in &self.neighbors[v] {
                    if !reached[u] {
                        reached[u] = true;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        reached
    }

    /// SHA-256 over the node count and the sorted edge set.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n as u64).to_le_bytes());
        for &(i, j) in &self.edges {
            hasher.update((i as u64).to_le_bytes());
            hasher.update((j as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStats {
    /// `|N(v)|` per node, self included
    pub degrees: Vec<usize>,
    pub min_degree: usize,
    pub max_degree: usize,
    pub is_homogeneous: bool,
    /// common degree, present only when homogeneous
    pub q: Option<usize>,
}

impl DegreeStats {
    /// degree -> node count
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for &d in &self.degrees {
            *hist.entry(d).or_insert(0) += 1;
        }
        hist
    }

    /// The common degree, or the error the bound calculators report.
    pub fn require_homogeneous(&self) -> Result<usize> {
        self.q.ok_or_else(|| Error::NonHomogeneous {
            min: self.min_degree,
            max: self.max_degree,
            histogram: self.histogram(),
        })
    }
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let degrees: Vec<usize> = g.neighbors.iter().map(Vec::len).collect();
    let min_degree = degrees.iter().copied().min().unwrap_or(0);
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let is_homogeneous = min_degree == max_degree;
    DegreeStats {
        degrees,
        min_degree,
        max_degree,
        is_homogeneous,
        q: is_homogeneous.then_some(min_degree),
    }
}

/// Circulant graph: node `i` is joined to `i ± 1, …, i ± ring_degree/2`
/// (mod n). Every node ends up with `|N(v)| = ring_degree + 1`.
///
/// The construction is deterministic; `seed` is only recorded.
pub fn gen_regular(n: usize, ring_degree: usize, seed: u64) -> Result<Graph> {
    if ring_degree == 0 || !ring_degree.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "ring_degree must be even and positive, got {ring_degree}"
        )));
    }
    if ring_degree >= n {
        return Err(Error::invalid(format!(
            "ring_degree {ring_degree} must be smaller than n = {n}"
        )));
    }
    let half = ring_degree / 2;
    let edges = (0..n).flat_map(|i| (1..=half).map(move |s| (i, (i + s) % n)));
    Graph::from_edges(n, edges, Some(seed))
}

/// Erdős–Rényi `G(n, p)` with self-loops added.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = stream_rng(seed, tag::GRAPH);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges, Some(seed))
}

pub fn gen_complete(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))), None)
}
