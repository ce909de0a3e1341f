//! Simple undirected graphs, ingestion, hop distances and synthetic graphs.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// Immutable, connected, simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds and validates a graph. Edge endpoints may be given in either
    /// order; they are stored as `(min, max)` in input order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("graph needs at least 2 nodes, got {n}")));
        }
        let mut adjacency = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        let mut stored = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Validation(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop at node {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if adjacency[u * n + v] {
                return Err(Error::Validation(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
            neighbors[u].push(v);
            neighbors[v].push(u);
            stored.push((u, v));
        }
        let g = Graph {
            n,
            edges: stored,
            adjacency,
            neighbors,
        };
        if !g.is_connected() {
            return Err(Error::Validation("graph is disconnected".into()));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Every edge in both directions: `(sources, targets)`, the forward
    /// copies first.
    pub fn directed_edges(&self) -> (Vec<usize>, Vec<usize>) {
        let m = self.edges.len();
        let mut src = Vec::with_capacity(2 * m);
        let mut dst = Vec::with_capacity(2 * m);
        for &(u, v) in &self.edges {
            src.push(u);
            dst.push(v);
        }
        for &(u, v) in &self.edges {
            src.push(v);
            dst.push(u);
        }
        (src, dst)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Argument("permutation length differs from node count".into()));
        }
        Graph::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Serializes in the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    GraphmlSubset,
}

impl GraphFormat {
    /// `.graphml` / `.xml` files are GraphML, anything else an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("graphml") | Some("xml") => GraphFormat::GraphmlSubset,
            _ => GraphFormat::EdgeList,
        }
    }
}

pub fn load_graph(path: impl AsRef<Path>, format: GraphFormat) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text),
        GraphFormat::GraphmlSubset => parse_graphml(&text),
    }
}

/// Assigns compact ids in first-appearance order.
#[derive(Default)]
struct Compactor<K> {
    ids: HashMap<K, usize>,
}

impl<K: std::hash::Hash + Eq> Compactor<K> {
    fn id(&mut self, key: K) -> usize {
        let next = self.ids.len();
        *self.ids.entry(key).or_insert(next)
    }

    fn len(&self) -> usize {
        self.ids.len()
    }
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let parse_pair = |lineno: usize, line: &str| -> Result<(u64, u64)> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!("line {lineno}: expected two integers, got {line:?}")));
        }
        let a = fields[0]
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
        let b = fields[1]
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("line {lineno}: {e}")))?;
        Ok((a, b))
    };

    let (lineno, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty edge list".into()))?;
    let (n, m) = parse_pair(lineno, header)?;
    let (n, m) = (n as usize, m as usize);

    let mut compactor = Compactor::default();
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        let (a, b) = parse_pair(lineno, line)?;
        if a == b {
            return Err(Error::Validation(format!("line {lineno}: self-loop at node {a}")));
        }
        edges.push((compactor.id(a), compactor.id(b)));
    }
    if edges.len() != m {
        return Err(Error::Parse(format!("header declares {m} edges, found {}", edges.len())));
    }
    if compactor.len() > n {
        return Err(Error::Validation(format!(
            "header declares {n} nodes, edges reference {}",
            compactor.len()
        )));
    }
    // Declared nodes that never appear in an edge are isolated; Graph::new
    // rejects them as disconnected.
    Graph::new(n, edges)
}

pub fn parse_graphml(text: &str) -> Result<Graph> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut compactor = Compactor::default();
    for node in doc.descendants().filter(|n| n.tag_name().name() == "node") {
        let id = node
            .attribute("id")
            .ok_or_else(|| Error::Parse("<node> without id".into()))?;
        compactor.id(id.to_string());
    }
    let mut edges = Vec::new();
    for edge in doc.descendants().filter(|n| n.tag_name().name() == "edge") {
        let endpoint = |attr: &str| -> Result<usize> {
            let id = edge
                .attribute(attr)
                .ok_or_else(|| Error::Parse(format!("<edge> without {attr}")))?;
            compactor
                .ids
                .get(id)
                .copied()
                .ok_or_else(|| Error::Parse(format!("<edge> references unknown node {id:?}")))
        };
        edges.push((endpoint("source")?, endpoint("target")?));
    }
    Graph::new(compactor.len(), edges)
}

/// All-pairs hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.n + j]
    }

    pub fn max(&self) -> u32 {
        self.d.iter().copied().max().unwrap_or(0)
    }

    /// Builds a matrix from raw row-major values; used for hand-made fixtures.
    pub fn from_rows(n: usize, d: Vec<u32>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::ShapeMismatch(format!("{} values for {n}x{n} matrix", d.len())));
        }
        Ok(DistanceMatrix { n, d })
    }
}

/// Breadth-first search from every source.
pub fn shortest_paths(g: &Graph) -> DistanceMatrix {
    let n = g.node_count();
    let mut d = vec![u32::MAX; n * n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        let row = &mut d[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            let next = row[v] + 1;
            for &w in g.neighbors(v) {
                if row[w] == u32::MAX {
                    row[w] = next;
                    queue.push_back(w);
                }
            }
        }
    }
    DistanceMatrix { n, d }
}

/// Random connected graph: a uniform random labelled spanning tree (decoded
/// from a random Prüfer sequence) plus `floor(extra_edge_fraction * N)`
/// distinct non-tree edges. `N` is drawn uniformly from `n_min..=n_max`.
pub fn random_graph(n_min: usize, n_max: usize, extra_edge_fraction: f64, seed: u64) -> Result<Graph> {
    if n_min < 2 || n_max < n_min {
        return Err(Error::Argument(format!("invalid node range {n_min}..={n_max}")));
    }
    if !(extra_edge_fraction >= 0.0) || !extra_edge_fraction.is_finite() {
        return Err(Error::Argument(format!("extra edge fraction {extra_edge_fraction} must be >= 0")));
    }
    let mut rng = rng::rng_from_seed(seed);
    let n = rng.gen_range(n_min..=n_max);
    let extra = (extra_edge_fraction * n as f64).floor() as usize;
    let available = n * (n - 1) / 2 - (n - 1);
    if extra > available {
        return Err(Error::Argument(format!(
            "{extra} extra edges requested but only {available} non-tree pairs exist for N={n}"
        )));
    }

    let mut edges = random_tree(n, &mut rng);
    let mut in_tree = vec![false; n * n];
    for &(u, v) in &edges {
        in_tree[u * n + v] = true;
        in_tree[v * n + u] = true;
    }
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|&(u, v)| !in_tree[u * n + v])
        .collect();
    let (chosen, _) = candidates.partial_shuffle(&mut rng, extra);
    edges.extend_from_slice(chosen);
    Graph::new(n, edges)
}

fn random_tree(n: usize, rng: &mut rng::Rng) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &p in &prufer {
        degree[p] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &p in &prufer {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf.min(p), leaf.max(p)));
        degree[leaf] -= 1;
        degree[p] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Path graph 0-1-...-(n-1).
pub fn path_graph(n: usize) -> Result<Graph> {
    Graph::new(n, (1..n).map(|i| (i - 1, i)))
}

pub fn cycle_graph(n: usize) -> Result<Graph> {
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// `rows x cols` grid; node `r * cols + c`.
pub fn grid_graph(rows: usize, cols: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// Star with center 0 and `leaves` leaves.
pub fn star_graph(leaves: usize) -> Result<Graph> {
    Graph::new(leaves + 1, (1..=leaves).map(|i| (0, i)))
}

pub fn complete_graph(n: usize) -> Result<Graph> {
    Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn floyd_warshall(g: &Graph) -> Vec<u32> {
        let n = g.node_count();
        let inf = u32::MAX / 4;
        let mut d = vec![inf; n * n];
        for i in 0..n {
            d[i * n + i] = 0;
        }
        for &(u, v) in g.edges() {
            d[u * n + v] = 1;
            d[v * n + u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i * n + k] + d[k * n + j];
                    if via < d[i * n + j] {
                        d[i * n + j] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn edge_list_example() {
        let g = parse_edge_list("3 2\n0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn edge_list_rejects_self_loop() {
        assert!(matches!(parse_edge_list("2 1\n0 0"), Err(Error::Validation(_))));
    }

    #[test]
    fn edge_list_compacts_ids_in_first_appearance_order() {
        let g = parse_edge_list("# comment\n3 2\n17 4\n\n4 9\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(parse_edge_list("3 2\n0 1"), Err(Error::Parse(_))));
        assert!(matches!(parse_edge_list("3 2\n0 x\n1 2"), Err(Error::Parse(_))));
        assert!(matches!(parse_edge_list("3 2\n0 1\n1 0"), Err(Error::Validation(_))));
        assert!(matches!(parse_edge_list("4 2\n0 1\n2 3"), Err(Error::Validation(_))));
        assert!(matches!(parse_edge_list("1 0\n"), Err(Error::Validation(_))));
        assert!(matches!(parse_edge_list(""), Err(Error::Parse(_))));
    }

    #[test]
    fn graphml_four_cycle() {
        let xml = r#"<?xml version="1.0"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="w" for="edge" attr.name="weight" attr.type="double"/>
  <graph edgedefault="undirected">
    <node id="a"/><node id="b"/><node id="c"/><node id="d"/>
    <edge source="a" target="b"/>
    <edge source="b" target="c"><data key="w">2.0</data></edge>
    <edge source="c" target="d"/>
    <edge source="d" target="a"/>
  </graph>
</graphml>"#;
        let g = parse_graphml(xml).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.edges(), &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        assert!(matches!(parse_graphml("<graphml><node"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_graphml(r#"<g><node id="a"/><edge source="a" target="z"/></g>"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn shortest_path_examples() {
        let p = path_graph(3).unwrap();
        assert_eq!(shortest_paths(&p).get(0, 2), 2);
        let c = cycle_graph(4).unwrap();
        let d = shortest_paths(&c);
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.get(0, 1), 1);
    }

    #[test]
    fn random_graph_examples() {
        let t = random_graph(10, 10, 0.0, 3).unwrap();
        assert_eq!(t.edge_count(), 9);
        let a = random_graph(10, 10, 0.3, 7).unwrap();
        let b = random_graph(10, 10, 0.3, 7).unwrap();
        assert_eq!(a, b);
        // 19 tree edges + floor(0.35 * 20) = 7 extra.
        let g = random_graph(20, 20, 0.35, 11).unwrap();
        assert_eq!(g.edge_count(), 26);
        let d = shortest_paths(&g);
        assert!((0..20).all(|j| d.get(0, j) != u32::MAX));
        assert!(matches!(random_graph(4, 4, 1.0, 1), Err(Error::Argument(_))));
        assert!(random_graph(4, 4, 0.75, 1).is_ok());
    }

    #[test]
    fn floyd_warshall_agreement_on_100_graphs() {
        for seed in 0..100 {
            let g = random_graph(2, 15, 0.4, seed).unwrap();
            let d = shortest_paths(&g);
            let fw = floyd_warshall(&g);
            let n = g.node_count();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(d.get(i, j), fw[i * n + j]);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn generated_graphs_are_consistent(seed in any::<u64>(), n in 2usize..30, frac in 0.0f64..0.5) {
            let g = random_graph(n, n, frac, seed).unwrap();
            let n = g.node_count();
            for u in 0..n {
                for v in 0..n {
                    prop_assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
                }
            }
            for &(u, v) in g.edges() {
                prop_assert!(u < v && g.has_edge(u, v));
            }
            let adj_count = (0..n * n).filter(|&k| g.has_edge(k / n, k % n)).count();
            prop_assert_eq!(adj_count, 2 * g.edge_count());
            let d = shortest_paths(&g);
            for i in 0..n {
                prop_assert_eq!(d.get(i, i), 0);
                for j in 0..n {
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    for k in 0..n {
                        prop_assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j));
                    }
                }
            }
        }
    }
}
