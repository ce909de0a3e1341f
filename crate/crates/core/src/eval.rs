//! Symmetric percent change comparisons between layout methods.

use std::fmt::Write as _;

use serde::Serialize;

use crate::baselines::{GraphFailure, LayoutProducer};
use crate::criteria::{evaluate, CriterionSpec};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::geometry::{canonicalize, Layout};
use crate::neural::{generate, Generator};

/// Cells with a larger share of failed graphs are flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.05;

/// `100 * (f - b) / max(f, b)`; negative when `f` is better. Both zero
/// gives 0.
pub fn spc(lambda_f: f64, lambda_b: f64) -> Result<f64> {
    if !(lambda_f >= 0.0 && lambda_b >= 0.0) || !lambda_f.is_finite() || !lambda_b.is_finite() {
        return Err(Error::Domain(format!("spc needs finite nonnegative values, got {lambda_f}, {lambda_b}")));
    }
    let m = lambda_f.max(lambda_b);
    if m == 0.0 {
        return Ok(0.0);
    }
    // dividing first keeps the ratio within [-1, 1] after rounding
    Ok(100.0 * ((lambda_f - lambda_b) / m))
}

pub fn average_spc(per_graph: &[f64]) -> Result<f64> {
    if per_graph.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    Ok(per_graph.iter().sum::<f64>() / per_graph.len() as f64)
}

/// Runs a trained generator as a layout method.
pub struct ModelProducer {
    pub name: String,
    pub generator: Generator,
}

impl LayoutProducer for ModelProducer {
    fn name(&self) -> &str {
        &self.name
    }

    fn produce(&self, sample: &Sample) -> Result<Layout> {
        generate(&self.generator, &sample.graph, &sample.distances, &sample.init)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSpc {
    pub graph: String,
    pub spc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpcCell {
    pub criterion: String,
    pub model: String,
    pub benchmark: String,
    /// `None` when no graph succeeded for both methods.
    pub average: Option<f64>,
    pub samples: Vec<GraphSpc>,
    pub failures: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsoluteMean {
    pub criterion: String,
    pub method: String,
    pub mean: Option<f64>,
    pub graphs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub graph: String,
    pub method: String,
    pub message: String,
}

impl From<GraphFailure> for FailureRecord {
    fn from(f: GraphFailure) -> Self {
        FailureRecord {
            graph: f.graph,
            method: f.method,
            message: f.message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpcReport {
    pub test_size: usize,
    pub criteria: Vec<String>,
    pub models: Vec<String>,
    pub benchmarks: Vec<String>,
    /// Ordered by criterion, then benchmark, then model.
    pub cells: Vec<SpcCell>,
    pub absolute: Vec<AbsoluteMean>,
    pub failures: Vec<FailureRecord>,
}

/// Per method and graph: criterion values in `criteria` order, or the
/// failure message.
type Scores = Vec<Vec<std::result::Result<Vec<f64>, String>>>;

fn score_all(methods: &[&dyn LayoutProducer], samples: &[Sample], criteria: &[CriterionSpec]) -> Scores {
    methods
        .iter()
        .map(|m| {
            samples
                .iter()
                .map(|s| {
                    let x = m.produce(s).and_then(|x| canonicalize(&x, &s.distances))?;
                    criteria
                        .iter()
                        .map(|c| evaluate(c, &x, &s.graph, &s.distances, Some(&s.init)).map(|v| v.value))
                        .collect::<Result<Vec<f64>>>()
                })
                .map(|r| r.map_err(|e| e.to_string()))
                .collect()
        })
        .collect()
}

/// SPC of every model against every benchmark under every criterion.
/// Each produced layout is canonicalized before evaluation.
pub fn compare(
    models: &[&dyn LayoutProducer],
    benchmarks: &[&dyn LayoutProducer],
    samples: &[Sample],
    criteria: &[CriterionSpec],
) -> Result<SpcReport> {
    if samples.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if models.is_empty() || benchmarks.is_empty() || criteria.is_empty() {
        return Err(Error::Argument("compare needs models, benchmarks and criteria".into()));
    }
    // methods appearing in both lists are run once
    let mut methods: Vec<&dyn LayoutProducer> = Vec::new();
    for &m in models.iter().chain(benchmarks) {
        if !methods.iter().any(|x| x.name() == m.name()) {
            methods.push(m);
        }
    }
    let index = |name: &str| methods.iter().position(|x| x.name() == name).expect("method listed");
    let scores = score_all(&methods, samples, criteria);

    let mut failures = Vec::new();
    for (m, per_graph) in methods.iter().zip(&scores) {
        for (s, r) in samples.iter().zip(per_graph) {
            if let Err(message) = r {
                failures.push(FailureRecord {
                    graph: s.id.clone(),
                    method: m.name().to_string(),
                    message: message.clone(),
                });
            }
        }
    }

    let mut cells = Vec::new();
    let mut absolute = Vec::new();
    for (ci, c) in criteria.iter().enumerate() {
        for m in &methods {
            let vals: Vec<f64> = scores[index(m.name())].iter().filter_map(|r| r.as_ref().ok().map(|v| v[ci])).collect();
            absolute.push(AbsoluteMean {
                criterion: c.label(),
                method: m.name().to_string(),
                mean: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                graphs: vals.len(),
            });
        }
        for b in benchmarks {
            for m in models {
                let (mi, bi) = (index(m.name()), index(b.name()));
                let mut per_graph = Vec::new();
                let mut failed = 0;
                for (gi, s) in samples.iter().enumerate() {
                    match (&scores[mi][gi], &scores[bi][gi]) {
                        (Ok(f), Ok(bv)) => per_graph.push(GraphSpc {
                            graph: s.id.clone(),
                            spc: spc(f[ci], bv[ci])?,
                        }),
                        _ => failed += 1,
                    }
                }
                let values: Vec<f64> = per_graph.iter().map(|g| g.spc).collect();
                cells.push(SpcCell {
                    criterion: c.label(),
                    model: m.name().to_string(),
                    benchmark: b.name().to_string(),
                    average: average_spc(&values).ok(),
                    samples: per_graph,
                    failures: failed,
                    flagged: failed as f64 > FAILURE_FLAG_FRACTION * samples.len() as f64,
                });
            }
        }
    }
    Ok(SpcReport {
        test_size: samples.len(),
        criteria: criteria.iter().map(CriterionSpec::label).collect(),
        models: models.iter().map(|m| m.name().to_string()).collect(),
        benchmarks: benchmarks.iter().map(|m| m.name().to_string()).collect(),
        cells,
        absolute,
        failures,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl SpcReport {
    pub fn cell(&self, criterion: &str, model: &str, benchmark: &str) -> Option<&SpcCell> {
        self.cells
            .iter()
            .find(|c| c.criterion == criterion && c.model == model && c.benchmark == benchmark)
    }

    /// One row per (criterion, benchmark), one column per model. Empty
    /// cells had no comparable graph.
    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("criterion,benchmark");
        for m in &self.models {
            write!(out, ",{m}").unwrap();
        }
        out.push('\n');
        for c in &self.criteria {
            for b in &self.benchmarks {
                write!(out, "{c},{b}").unwrap();
                for m in &self.models {
                    write!(out, ",{}", fmt_opt(self.cell(c, m, b).and_then(|x| x.average))).unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn absolute_csv(&self) -> String {
        let mut out = String::from("criterion,method,mean,graphs\n");
        for a in &self.absolute {
            writeln!(out, "{},{},{},{}", a.criterion, a.method, fmt_opt(a.mean), a.graphs).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Heatmap of the matrix: one panel per criterion, blue where the model
    /// is better, red where it is worse.
    pub fn heatmap_svg(&self) -> String {
        const CELL: f64 = 60.0;
        const LABEL: f64 = 110.0;
        let cols = self.models.len() as f64;
        let rows = self.benchmarks.len() as f64;
        let panel_h = CELL * (rows + 1.0) + 20.0;
        let width = LABEL + CELL * cols + 10.0;
        let height = panel_h * self.criteria.len() as f64;
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        for (pi, c) in self.criteria.iter().enumerate() {
            let top = pi as f64 * panel_h;
            writeln!(out, r#"<text x="4" y="{}">{}</text>"#, top + 14.0, xml_escape(c)).unwrap();
            for (mi, m) in self.models.iter().enumerate() {
                let x = LABEL + mi as f64 * CELL + CELL / 2.0;
                writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, top + CELL - 6.0, xml_escape(m)).unwrap();
            }
            for (bi, b) in self.benchmarks.iter().enumerate() {
                let y = top + CELL * (bi as f64 + 1.0);
                writeln!(out, r#"<text x="4" y="{}">{}</text>"#, y + CELL / 2.0 + 4.0, xml_escape(b)).unwrap();
                for (mi, m) in self.models.iter().enumerate() {
                    let x = LABEL + mi as f64 * CELL;
                    let v = self.cell(c, m, b).and_then(|cell| cell.average);
                    let fill = heat_colour(v);
                    writeln!(
                        out,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff"/>"##
                    )
                    .unwrap();
                    let text = v.map(|v| format!("{v:.1}")).unwrap_or_else(|| "n/a".into());
                    writeln!(
                        out,
                        r#"<text x="{}" y="{}" text-anchor="middle">{text}</text>"#,
                        x + CELL / 2.0,
                        y + CELL / 2.0 + 4.0
                    )
                    .unwrap();
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn heat_colour(v: Option<f64>) -> String {
    let Some(v) = v else {
        return "#cccccc".into();
    };
    let t = (v.abs() / 100.0).clamp(0.0, 1.0);
    let fade = (255.0 * (1.0 - t)).round() as u8;
    if v < 0.0 {
        format!("#{fade:02x}{fade:02x}ff")
    } else {
        format!("#ff{fade:02x}{fade:02x}")
    }
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{Baseline, BaselineKind};
    use crate::criteria::CriterionId;
    use crate::graph::random_graph;
    use rand::Rng as _;

    struct Scaled {
        name: &'static str,
        noise: f64,
    }

    impl LayoutProducer for Scaled {
        fn name(&self) -> &str {
            self.name
        }
        fn produce(&self, s: &Sample) -> Result<Layout> {
            if self.noise < 0.0 {
                return Err(Error::DegenerateLayout("always fails".into()));
            }
            let mut r = crate::rng::rng_for(7, &s.id, 0);
            let pos = s
                .init
                .positions
                .iter()
                .map(|p| [p[0] + self.noise * r.gen_range(-1.0..1.0), p[1] + self.noise * r.gen_range(-1.0..1.0)])
                .collect();
            Layout::new(pos)
        }
    }

    fn samples(n: u64) -> Vec<Sample> {
        (0..n)
            .map(|s| Sample::new(format!("g{s:02}"), random_graph(8, 14, 0.3, s + 50).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn spc_examples() {
        assert_eq!(spc(50.0, 100.0).unwrap(), -50.0);
        assert_eq!(spc(7.0, 7.0).unwrap(), 0.0);
        assert_eq!(spc(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(spc(0.0, 3.0).unwrap(), -100.0);
        assert!(spc(-1.0, 2.0).is_err());
        assert!(spc(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn spc_is_antisymmetric_and_bounded() {
        let mut r = crate::rng::rng_from_seed(1);
        for _ in 0..1000 {
            let a: f64 = r.gen_range(0.0..1e3);
            let b: f64 = r.gen_range(0.0..1e3);
            let (x, y) = (spc(a, b).unwrap(), spc(b, a).unwrap());
            assert_eq!(x, -y);
            assert!((-100.0..=100.0).contains(&x));
        }
    }

    #[test]
    fn average_examples() {
        assert_eq!(average_spc(&[-10.0, 10.0]).unwrap(), 0.0);
        assert_eq!(average_spc(&[-50.0]).unwrap(), -50.0);
        assert!(matches!(average_spc(&[]), Err(Error::EmptyTestSet)));
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = samples(6);
        let p = Baseline::new(BaselineKind::Pmds, 1);
        let r = compare(&[&p], &[&p], &s, &[CriterionSpec::single(CriterionId::Stress), CriterionSpec::combined()]).unwrap();
        assert_eq!(r.cells.len(), 2);
        for c in &r.cells {
            assert_eq!(c.average, Some(0.0));
            assert!(c.samples.iter().all(|g| g.spc == 0.0));
        }
    }

    #[test]
    fn dominating_model_has_negative_cells() {
        let s = samples(8);
        let good = Scaled { name: "good", noise: 0.0 };
        let bad = Scaled { name: "bad", noise: 2.0 };
        let r = compare(&[&good], &[&bad], &s, &[CriterionSpec::single(CriterionId::Stress)]).unwrap();
        let cell = &r.cells[0];
        assert!(cell.samples.iter().all(|g| g.spc < 0.0));
        assert!(cell.average.unwrap() < 0.0);
        let swapped = compare(&[&bad], &[&good], &s, &[CriterionSpec::single(CriterionId::Stress)]).unwrap();
        for (a, b) in cell.samples.iter().zip(&swapped.cells[0].samples) {
            assert_eq!(a.spc, -b.spc);
        }
    }

    #[test]
    fn failures_are_counted_and_flagged() {
        let s = samples(4);
        let good = Scaled { name: "good", noise: 0.0 };
        let broken = Scaled { name: "broken", noise: -1.0 };
        let r = compare(&[&good, &broken], &[&good], &s, &[CriterionSpec::single(CriterionId::Stress)]).unwrap();
        let cell = r.cell("stress", "broken", "good").unwrap();
        assert_eq!(cell.failures, 4);
        assert!(cell.flagged);
        assert_eq!(cell.average, None);
        assert!(!r.cell("stress", "good", "good").unwrap().flagged);
        assert_eq!(r.failures.len(), 4);
        assert!(r.matrix_csv().contains("stress,good,0,\n"));
    }

    #[test]
    fn outputs_are_deterministic() {
        let s = samples(3);
        let a = Scaled { name: "a", noise: 0.1 };
        let b = Scaled { name: "b", noise: 0.5 };
        let run = || compare(&[&a], &[&b], &s, &[CriterionSpec::combined()]).unwrap();
        let (x, y) = (run(), run());
        assert_eq!(x.to_json(), y.to_json());
        assert_eq!(x.heatmap_svg(), y.heatmap_svg());
        assert_eq!(x.matrix_csv().lines().count(), 2);
        assert!(x.heatmap_svg().matches("<rect").count() == 1);
    }
}
