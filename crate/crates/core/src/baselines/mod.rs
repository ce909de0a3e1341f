//! Classical layout methods and good-layout collection building.

pub mod fr;
pub mod pmds;
pub mod sgd;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng as _;

use crate::collection::{CollectionEntry, LayoutCollection};
use crate::criteria::{better_than, evaluate, CriterionSpec, CriterionValue};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::geometry::{canonicalize, Layout};
use crate::rng;

pub use fr::fruchterman_reingold;
pub use pmds::pivot_mds;
pub use sgd::stress_sgd;

/// Uniform random positions in a `sqrt(N) x sqrt(N)` box.
pub fn random_layout(n: usize, seed: u64) -> Layout {
    let mut r = rng::rng_for(seed, "random-layout", 0);
    let side = (n as f64).sqrt();
    Layout {
        positions: (0..n).map(|_| [r.gen_range(0.0..side), r.gen_range(0.0..side)]).collect(),
    }
}

/// Anything that can lay out a dataset graph.
pub trait LayoutProducer: Sync {
    fn name(&self) -> &str;
    fn produce(&self, sample: &Sample) -> Result<Layout>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Pmds,
    StressSgd,
    Fr,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Pmds => "pmds",
            BaselineKind::StressSgd => "stress_sgd",
            BaselineKind::Fr => "fr",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pmds" => Ok(BaselineKind::Pmds),
            "stress_sgd" => Ok(BaselineKind::StressSgd),
            "fr" => Ok(BaselineKind::Fr),
            other => Err(Error::Argument(format!("unknown baseline method {other:?}"))),
        }
    }
}

/// A baseline with its run seed. Per-graph seeds are derived from the run
/// seed and the graph id; outputs are canonicalized.
#[derive(Debug, Clone, Copy)]
pub struct Baseline {
    pub kind: BaselineKind,
    pub seed: u64,
}

impl Baseline {
    pub fn new(kind: BaselineKind, seed: u64) -> Self {
        Baseline { kind, seed }
    }

    fn graph_seed(&self, id: &str) -> u64 {
        rng::derive_seed(self.seed, &format!("{}/{id}", self.kind), 0)
    }
}

impl LayoutProducer for Baseline {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn produce(&self, sample: &Sample) -> Result<Layout> {
        let (g, d) = (&sample.graph, &sample.distances);
        let seed = self.graph_seed(&sample.id);
        let raw = match self.kind {
            BaselineKind::Pmds => pivot_mds(g, d, pmds::PMDS_PIVOTS, pmds::PMDS_ITERATIONS, seed)?,
            BaselineKind::StressSgd => {
                let init = random_layout(g.node_count(), seed);
                stress_sgd(g, d, &init, sgd::SGD_EPOCHS, seed)?
            }
            BaselineKind::Fr => {
                let init = random_layout(g.node_count(), seed);
                fruchterman_reingold(g, &init, fr::FR_ITERATIONS, seed)?
            }
        };
        canonicalize(&raw, d)
    }
}

/// Layouts read from a directory of `<graph id>.txt` / `<graph id>.json`
/// files.
#[derive(Debug, Clone)]
pub struct LayoutDir {
    pub name: String,
    pub dir: PathBuf,
}

impl LayoutDir {
    pub fn new(name: impl Into<String>, dir: impl AsRef<Path>) -> Self {
        LayoutDir {
            name: name.into(),
            dir: dir.as_ref().to_path_buf(),
        }
    }

    pub fn path_for(&self, id: &str) -> Option<PathBuf> {
        ["txt", "json"]
            .iter()
            .map(|ext| self.dir.join(format!("{id}.{ext}")))
            .find(|p| p.is_file())
    }
}

impl LayoutProducer for LayoutDir {
    fn name(&self) -> &str {
        &self.name
    }

    fn produce(&self, sample: &Sample) -> Result<Layout> {
        let path = self
            .path_for(&sample.id)
            .ok_or_else(|| Error::Validation(format!("no layout for {} in {}", sample.id, self.dir.display())))?;
        let layout = Layout::load(path)?;
        layout.check_for(&sample.graph)?;
        Ok(layout)
    }
}

/// A method that failed on one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFailure {
    pub graph: String,
    pub method: String,
    pub message: String,
}

/// Per graph, keeps the best candidate over all methods under
/// [`better_than`]; earlier methods win exact ties. Method failures are
/// recorded per graph; a graph where every method fails has no entry.
pub fn build_collection(
    samples: &[Sample],
    spec: &CriterionSpec,
    methods: &[&dyn LayoutProducer],
) -> Result<(LayoutCollection, Vec<GraphFailure>)> {
    if methods.is_empty() {
        return Err(Error::Argument("build_collection needs at least one method".into()));
    }
    let mut entries = BTreeMap::new();
    let mut failures = Vec::new();
    for sample in samples {
        let mut best: Option<(Layout, CriterionValue, &str)> = None;
        for method in methods {
            let candidate = method
                .produce(sample)
                .and_then(|x| evaluate(spec, &x, &sample.graph, &sample.distances, Some(&sample.init)).map(|v| (x, v)));
            match candidate {
                Ok((x, v)) => {
                    if best.as_ref().is_none_or(|(_, bv, _)| better_than(&v, bv)) {
                        best = Some((x, v, method.name()));
                    }
                }
                Err(e) => failures.push(GraphFailure {
                    graph: sample.id.clone(),
                    method: method.name().to_string(),
                    message: e.to_string(),
                }),
            }
        }
        if let Some((layout, value, name)) = best {
            entries.insert(
                sample.id.clone(),
                CollectionEntry {
                    layout,
                    value,
                    provenance: name.to_string(),
                },
            );
        }
    }
    Ok((LayoutCollection::new(spec.clone(), entries), failures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::CriterionId;
    use crate::graph::random_graph;

    struct Fixed {
        name: &'static str,
        scale: f64,
    }

    impl LayoutProducer for Fixed {
        fn name(&self) -> &str {
            self.name
        }
        fn produce(&self, sample: &Sample) -> Result<Layout> {
            if self.scale < 0.0 {
                return Err(Error::DegenerateLayout("always fails".into()));
            }
            Ok(sample.init.scaled(self.scale))
        }
    }

    fn samples(count: u64) -> Vec<Sample> {
        (0..count)
            .map(|s| Sample::new(format!("g{s:03}"), random_graph(8, 14, 0.3, s).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn single_method_collection_is_that_method() {
        let data = samples(5);
        let pmds = Baseline::new(BaselineKind::Pmds, 1);
        let spec = CriterionSpec::single(CriterionId::Stress);
        let (c, failures) = build_collection(&data, &spec, &[&pmds]).unwrap();
        assert!(failures.is_empty());
        for s in &data {
            assert_eq!(c.entries[&s.id].layout, pmds.produce(s).unwrap());
            assert_eq!(c.entries[&s.id].provenance, "pmds");
        }
    }

    #[test]
    fn dominated_method_never_wins() {
        let data = samples(6);
        let good = Fixed { name: "good", scale: 1.0 };
        let bad = Fixed { name: "bad", scale: 3.0 };
        let broken = Fixed { name: "broken", scale: -1.0 };
        let spec = CriterionSpec::single(CriterionId::Stress);
        let (c, failures) = build_collection(&data, &spec, &[&bad, &broken, &good]).unwrap();
        let comp = c.composition();
        assert_eq!(comp["good"], 1.0);
        assert!(!comp.contains_key("bad"));
        assert_eq!(failures.len(), 6);
        assert!(failures.iter().all(|f| f.method == "broken"));
    }

    #[test]
    fn winner_matches_exhaustive_reevaluation() {
        let data = samples(50);
        let methods = [
            Baseline::new(BaselineKind::Pmds, 2),
            Baseline::new(BaselineKind::StressSgd, 2),
            Baseline::new(BaselineKind::Fr, 2),
        ];
        let refs: Vec<&dyn LayoutProducer> = methods.iter().map(|m| m as &dyn LayoutProducer).collect();
        let spec = CriterionSpec::single(CriterionId::Stress);
        let (c, _) = build_collection(&data, &spec, &refs).unwrap();
        for s in &data {
            let values: Vec<(f64, &str)> = methods
                .iter()
                .map(|m| (crate::criteria::stress(&m.produce(s).unwrap(), &s.distances), m.name()))
                .collect();
            let best = values.iter().fold(values[0], |b, &v| if v.0 < b.0 { v } else { b });
            assert_eq!(c.entries[&s.id].provenance, best.1);
            for m in &methods {
                let v = evaluate(&spec, &m.produce(s).unwrap(), &s.graph, &s.distances, None).unwrap();
                assert!(!better_than(&v, &c.entries[&s.id].value));
            }
        }
    }

    #[test]
    fn baselines_are_deterministic() {
        let data = samples(3);
        for kind in [BaselineKind::Pmds, BaselineKind::StressSgd, BaselineKind::Fr] {
            let m = Baseline::new(kind, 5);
            for s in &data {
                assert_eq!(m.produce(s).unwrap(), m.produce(s).unwrap());
            }
        }
    }
}
