//! Named graphs with their hop distances and generator initial layouts.

use std::path::Path;

use crate::baselines::pmds::{pivot_mds, PMDS_ITERATIONS, PMDS_PIVOTS};
use crate::error::{Error, Result};
use crate::geometry::{canonicalize, Layout};
use crate::graph::{load_graph, random_graph, shortest_paths, DistanceMatrix, Graph, GraphFormat};
use crate::rng::derive_seed;

/// Seed used for every generator initial layout, so training and inference
/// see the same input for the same graph.
pub const INIT_LAYOUT_SEED: u64 = 0;

#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub graph: Graph,
    pub distances: DistanceMatrix,
    /// Canonicalized PivotMDS layout: the generator input and the reference
    /// for per-graph criterion normalization.
    pub init: Layout,
}

impl Sample {
    pub fn new(id: impl Into<String>, graph: Graph) -> Result<Self> {
        let distances = shortest_paths(&graph);
        let pmds = pivot_mds(&graph, &distances, PMDS_PIVOTS, PMDS_ITERATIONS, INIT_LAYOUT_SEED)?;
        let init = canonicalize(&pmds, &distances)?;
        Ok(Sample {
            id: id.into(),
            graph,
            distances,
            init,
        })
    }

    pub fn with_init(mut self, init: Layout) -> Result<Self> {
        init.check_for(&self.graph)?;
        self.init = init;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

/// Loads every graph file in `dir` (edge lists, plus `.graphml`/`.xml`),
/// sorted by id (the file stem).
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && matches!(ext, "txt" | "edges" | "graphml" | "xml") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut samples = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Parse(format!("bad file name {}", path.display())))?
            .to_string();
        let graph = load_graph(&path, GraphFormat::from_path(&path))
            .map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
                other => other,
            })?;
        samples.push(Sample::new(id, graph)?);
    }
    if samples.is_empty() {
        return Err(Error::Validation(format!("no graph files in {}", dir.display())));
    }
    Ok(samples)
}

/// `count` random graphs named `g0000`, `g0001`, ...; graph `i` uses the
/// sub-seed `derive_seed(seed, "graph", i)`.
pub fn synthetic_graphs(
    count: usize,
    n_min: usize,
    n_max: usize,
    extra_edge_fraction: f64,
    seed: u64,
) -> Result<Vec<(String, Graph)>> {
    (0..count)
        .map(|i| {
            let g = random_graph(n_min, n_max, extra_edge_fraction, derive_seed(seed, "graph", i as u64))?;
            Ok((format!("g{i:04}"), g))
        })
        .collect()
}

/// `synthetic_graphs` wrapped as samples.
pub fn synthetic(count: usize, n_min: usize, n_max: usize, extra_edge_fraction: f64, seed: u64) -> Result<Vec<Sample>> {
    synthetic_graphs(count, n_min, n_max, extra_edge_fraction, seed)?
        .into_iter()
        .map(|(id, g)| Sample::new(id, g))
        .collect()
}
