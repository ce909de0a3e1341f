//! The per-graph collection of best-known layouts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criteria::{better_than, evaluate, CriterionSpec, CriterionValue};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::geometry::Layout;

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionEntry {
    pub layout: Layout,
    pub value: CriterionValue,
    /// Producing method name, or `generator@epoch <t>`.
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutCollection {
    pub criterion: CriterionSpec,
    pub entries: BTreeMap<String, CollectionEntry>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    criterion: CriterionSpec,
    graphs: BTreeMap<String, ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    layout: String,
    method: String,
    value: f64,
    stress: f64,
}

impl LayoutCollection {
    pub fn new(criterion: CriterionSpec, entries: BTreeMap<String, CollectionEntry>) -> Self {
        LayoutCollection { criterion, entries }
    }

    /// Evaluates `layouts` (keyed by graph id) and stores them all.
    pub fn from_layouts(
        criterion: CriterionSpec,
        samples: &[Sample],
        mut layouts: BTreeMap<String, Layout>,
        provenance: &str,
    ) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for s in samples {
            let layout = layouts
                .remove(&s.id)
                .ok_or_else(|| Error::Validation(format!("no layout for graph {}", s.id)))?;
            let value = evaluate(&criterion, &layout, &s.graph, &s.distances, Some(&s.init))?;
            entries.insert(
                s.id.clone(),
                CollectionEntry {
                    layout,
                    value,
                    provenance: provenance.to_string(),
                },
            );
        }
        Ok(LayoutCollection { criterion, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn covers(&self, samples: &[Sample]) -> Result<()> {
        match samples.iter().find(|s| !self.entries.contains_key(&s.id)) {
            Some(s) => Err(Error::Validation(format!("collection has no entry for graph {}", s.id))),
            None => Ok(()),
        }
    }

    pub fn mean_value(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.values().map(|e| e.value.value).sum::<f64>() / self.entries.len() as f64
    }

    /// Stores `candidate` iff it is strictly better than the incumbent.
    pub fn offer(&mut self, id: &str, layout: Layout, value: CriterionValue, provenance: String) -> bool {
        match self.entries.get_mut(id) {
            Some(entry) if better_than(&value, &entry.value) => {
                *entry = CollectionEntry {
                    layout,
                    value,
                    provenance,
                };
                true
            }
            Some(_) => false,
            None => {
                self.entries.insert(
                    id.to_string(),
                    CollectionEntry {
                        layout,
                        value,
                        provenance,
                    },
                );
                true
            }
        }
    }

    /// Share of graphs won by each provenance.
    pub fn composition(&self) -> BTreeMap<String, f64> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for e in self.entries.values() {
            *counts.entry(e.provenance.clone()).or_default() += 1;
        }
        let total = self.entries.len().max(1) as f64;
        counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect()
    }

    /// Writes the manifest and one text layout per graph under
    /// `<manifest dir>/layouts/`.
    pub fn save(&self, manifest: impl AsRef<Path>) -> Result<()> {
        let manifest = manifest.as_ref();
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let mut graphs = BTreeMap::new();
        for (id, e) in &self.entries {
            let rel = format!("layouts/{id}.txt");
            write_atomic(dir.join(&rel), e.layout.to_text())?;
            graphs.insert(
                id.clone(),
                ManifestEntry {
                    layout: rel,
                    method: e.provenance.clone(),
                    value: e.value.value,
                    stress: e.value.stress,
                },
            );
        }
        let m = Manifest {
            criterion: self.criterion.clone(),
            graphs,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        write_atomic(manifest, text + "\n")
    }

    /// Loads a manifest and re-evaluates every stored layout; a stored value
    /// that disagrees with re-evaluation (beyond 1e-9 relative) is rejected.
    pub fn load(manifest: impl AsRef<Path>, samples: &[Sample]) -> Result<Self> {
        let manifest = manifest.as_ref();
        let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", manifest.display())))?;
        let dir = manifest.parent().unwrap_or(Path::new("."));
        let mut entries = BTreeMap::new();
        for s in samples {
            let Some(me) = m.graphs.get(&s.id) else { continue };
            let layout = Layout::load(dir.join(&me.layout))?;
            let value = evaluate(&m.criterion, &layout, &s.graph, &s.distances, Some(&s.init))?;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
            if !close(value.value, me.value) || !close(value.stress, me.stress) {
                return Err(Error::Validation(format!(
                    "graph {}: stored value {} disagrees with re-evaluated {}",
                    s.id, me.value, value.value
                )));
            }
            entries.insert(
                s.id.clone(),
                CollectionEntry {
                    layout,
                    value,
                    provenance: me.method.clone(),
                },
            );
        }
        Ok(LayoutCollection {
            criterion: m.criterion,
            entries,
        })
    }

    /// Re-scores every entry under another criterion.
    pub fn reevaluated(&self, criterion: &CriterionSpec, samples: &[Sample]) -> Result<Self> {
        let layouts = samples
            .iter()
            .filter_map(|s| self.entries.get(&s.id).map(|e| (s.id.clone(), e.layout.clone())))
            .collect();
        let mut c = LayoutCollection::from_layouts(criterion.clone(), samples, layouts, "")?;
        for (id, e) in c.entries.iter_mut() {
            e.provenance = self.entries[id].provenance.clone();
        }
        Ok(c)
    }
}
