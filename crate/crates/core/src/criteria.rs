//! Aesthetic criteria. Every criterion is lower-is-better.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonicalize, segment_intersection, Crossing, Layout};
use crate::graph::{DistanceMatrix, Graph};

/// Visibility radius for node occlusion, in canonical (hop-scaled) units.
pub const NODE_OCCLUSION_RADIUS: f64 = 0.1;
/// Floor on the initial-layout value when normalizing per graph.
pub const NORMALIZATION_FLOOR: f64 = 1e-9;
/// Criterion values closer than this are ties, broken by stress.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionId {
    Stress,
    Xing,
    Xangle,
    Iangle,
    Nodeocc,
    Edgeuni,
    Tsne,
}

impl CriterionId {
    pub const ALL: [CriterionId; 7] = [
        CriterionId::Stress,
        CriterionId::Xing,
        CriterionId::Xangle,
        CriterionId::Iangle,
        CriterionId::Nodeocc,
        CriterionId::Edgeuni,
        CriterionId::Tsne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionId::Stress => "stress",
            CriterionId::Xing => "xing",
            CriterionId::Xangle => "xangle",
            CriterionId::Iangle => "iangle",
            CriterionId::Nodeocc => "nodeocc",
            CriterionId::Edgeuni => "edgeuni",
            CriterionId::Tsne => "tsne",
        }
    }
}

impl fmt::Display for CriterionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown criterion {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    PerGraphInitial,
}

/// Weighted combination of criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct CriterionSpec {
    pub terms: BTreeMap<CriterionId, f64>,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Deserialize)]
struct RawSpec {
    terms: BTreeMap<CriterionId, f64>,
    #[serde(default)]
    normalization: Normalization,
}

impl TryFrom<RawSpec> for CriterionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        CriterionSpec::new(raw.terms, raw.normalization)
    }
}

impl CriterionSpec {
    pub fn new(terms: BTreeMap<CriterionId, f64>, normalization: Normalization) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Validation("criterion spec needs at least one term".into()));
        }
        if let Some((id, w)) = terms.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Validation(format!("weight {w} for {id} must be finite and >= 0")));
        }
        Ok(CriterionSpec { terms, normalization })
    }

    pub fn single(id: CriterionId) -> Self {
        CriterionSpec {
            terms: BTreeMap::from([(id, 1.0)]),
            normalization: Normalization::None,
        }
    }

    /// The seven-term combination with its published weights, normalized by
    /// each graph's initial layout.
    pub fn combined() -> Self {
        use CriterionId::*;
        CriterionSpec {
            terms: BTreeMap::from([
                (Stress, 0.2),
                (Xing, 0.05),
                (Xangle, 0.1),
                (Iangle, 0.1),
                (Nodeocc, 0.2),
                (Edgeuni, 0.15),
                (Tsne, 0.2),
            ]),
            normalization: Normalization::PerGraphInitial,
        }
    }

    pub fn scaled_weights(&self, factor: f64) -> Self {
        CriterionSpec {
            terms: self.terms.iter().map(|(&k, &w)| (k, w * factor)).collect(),
            normalization: self.normalization,
        }
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("specs always serialize")
    }

    /// Short label such as `stress` or `stress+xing`.
    pub fn label(&self) -> String {
        self.terms.keys().map(|k| k.name()).collect::<Vec<_>>().join("+")
    }
}

/// Result of evaluating a spec on one layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub value: f64,
    /// Raw stress of the layout, kept for tie-breaking.
    pub stress: f64,
    pub components: BTreeMap<CriterionId, f64>,
}

/// Strict "a is a better layout than b": lower value wins; values within
/// [`TIE_TOLERANCE`] are decided by lower stress.
pub fn better_than(a: &CriterionValue, b: &CriterionValue) -> bool {
    if (a.value - b.value).abs() <= TIE_TOLERANCE {
        a.stress < b.stress
    } else {
        a.value < b.value
    }
}

/// `sum_{i<j} (||X_i - X_j|| - d_ij)^2 / d_ij^2`.
pub fn stress(x: &Layout, d: &DistanceMatrix) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dij = f64::from(d.get(i, j));
            let diff = x.distance(i, j) - dij;
            total += diff * diff / (dij * dij);
        }
    }
    total
}

/// All proper crossings between edge pairs, in edge-pair order.
pub fn crossings(x: &Layout, g: &Graph) -> Vec<Crossing> {
    let edges = g.edges();
    let p = &x.positions;
    let mut out = Vec::new();
    for (a, &(u1, v1)) in edges.iter().enumerate() {
        for &(u2, v2) in &edges[a + 1..] {
            if u1 == u2 || u1 == v2 || v1 == u2 || v1 == v2 {
                continue;
            }
            if let Some(c) = segment_intersection(p[u1], p[v1], p[u2], p[v2]) {
                out.push(c);
            }
        }
    }
    out
}

pub fn crossing_count(x: &Layout, g: &Graph) -> usize {
    crossings(x, g).len()
}

/// Mean of `(pi/2 - theta) / (pi/2)` over crossings; zero without crossings.
pub fn crossing_angle_penalty(x: &Layout, g: &Graph) -> f64 {
    let cs = crossings(x, g);
    if cs.is_empty() {
        return 0.0;
    }
    let total: f64 = cs.iter().map(|c| (FRAC_PI_2 - c.acute_angle) / FRAC_PI_2).sum();
    total / cs.len() as f64
}

/// Mean over nodes of degree >= 2 of `(ideal - min_gap) / ideal` with
/// `ideal = 2 pi / deg`.
pub fn angular_resolution_penalty(x: &Layout, g: &Graph) -> f64 {
    let p = &x.positions;
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut angles = Vec::new();
    for v in 0..g.node_count() {
        let deg = g.degree(v);
        if deg < 2 {
            continue;
        }
        angles.clear();
        angles.extend(
            g.neighbors(v)
                .iter()
                .map(|&w| (p[w][1] - p[v][1]).atan2(p[w][0] - p[v][0])),
        );
        angles.sort_by(f64::total_cmp);
        let wrap = 2.0 * PI - (angles[deg - 1] - angles[0]);
        let min_gap = angles
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(wrap, f64::min);
        let ideal = 2.0 * PI / deg as f64;
        total += ((ideal - min_gap) / ideal).max(0.0);
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

/// Unordered node pairs closer than `radius`.
pub fn node_occlusion(x: &Layout, radius: f64) -> usize {
    let n = x.len();
    (0..n)
        .map(|i| (i + 1..n).filter(|&j| x.distance(i, j) < radius).count())
        .sum()
}

/// Coefficient of variation (population std over mean) of edge lengths.
pub fn edge_uniformity(x: &Layout, g: &Graph) -> Result<f64> {
    let lengths: Vec<f64> = g.edges().iter().map(|&(u, v)| x.distance(u, v)).collect();
    if lengths.is_empty() {
        return Err(Error::Validation("edge uniformity needs at least one edge".into()));
    }
    let m = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / m;
    if mean <= 0.0 {
        return Err(Error::DegenerateLayout("mean edge length is zero".into()));
    }
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / m;
    Ok(var.sqrt() / mean)
}

/// `KL(P || Q)` over unordered pairs with a Gaussian graph-space kernel
/// (bandwidth = mean hop distance) and a Student-t layout-space kernel.
pub fn tsne_divergence(x: &Layout, d: &DistanceMatrix) -> Result<f64> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Argument(format!("t-SNE divergence needs N >= 3, got {n}")));
    }
    let pairs = n * (n - 1) / 2;
    let mut sigma = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sigma += f64::from(d.get(i, j));
        }
    }
    sigma /= pairs as f64;
    let two_sigma_sq = 2.0 * sigma * sigma;

    let mut p = Vec::with_capacity(pairs);
    let mut q = Vec::with_capacity(pairs);
    for i in 0..n {
        for j in i + 1..n {
            let dij = f64::from(d.get(i, j));
            p.push((-dij * dij / two_sigma_sq).exp());
            let e = x.distance(i, j);
            q.push(1.0 / (1.0 + e * e));
        }
    }
    let zp: f64 = p.iter().sum();
    let zq: f64 = q.iter().sum();
    let mut kl = 0.0;
    for (&pu, &qu) in p.iter().zip(&q) {
        let (pn, qn) = (pu / zp, qu / zq);
        if pn > 0.0 {
            if qn <= 0.0 {
                return Err(Error::DegenerateLayout("layout affinity underflowed to zero".into()));
            }
            kl += pn * (pn / qn).ln();
        }
    }
    Ok(kl)
}

/// Raw value of one criterion. Node occlusion is measured on the
/// canonicalized layout; a layout with all nodes coincident occludes every
/// pair.
pub fn raw_value(id: CriterionId, x: &Layout, g: &Graph, d: &DistanceMatrix) -> Result<f64> {
    Ok(match id {
        CriterionId::Stress => stress(x, d),
        CriterionId::Xing => crossing_count(x, g) as f64,
        CriterionId::Xangle => crossing_angle_penalty(x, g),
        CriterionId::Iangle => angular_resolution_penalty(x, g),
        CriterionId::Nodeocc => match canonicalize(x, d) {
            Ok(c) => node_occlusion(&c, NODE_OCCLUSION_RADIUS) as f64,
            Err(Error::DegenerateLayout(_)) => {
                let n = x.len();
                (n * (n - 1) / 2) as f64
            }
            Err(e) => return Err(e),
        },
        CriterionId::Edgeuni => edge_uniformity(x, g)?,
        CriterionId::Tsne => tsne_divergence(x, d)?,
    })
}

/// Weighted (optionally normalized) sum of the criteria in `spec`.
pub fn evaluate(
    spec: &CriterionSpec,
    x: &Layout,
    g: &Graph,
    d: &DistanceMatrix,
    init: Option<&Layout>,
) -> Result<CriterionValue> {
    x.check_for(g)?;
    let init = match spec.normalization {
        Normalization::None => None,
        Normalization::PerGraphInitial => {
            let init = init.ok_or(Error::MissingInitialLayout)?;
            init.check_for(g)?;
            Some(init)
        }
    };
    let mut components = BTreeMap::new();
    let mut value = 0.0;
    for (&id, &weight) in &spec.terms {
        let raw = raw_value(id, x, g, d)?;
        let scale = match init {
            Some(init) => raw_value(id, init, g, d)?.max(NORMALIZATION_FLOOR),
            None => 1.0,
        };
        value += weight * raw / scale;
        components.insert(id, raw);
    }
    if !value.is_finite() {
        return Err(Error::DegenerateLayout(format!("criterion value {value} is not finite")));
    }
    let stress = match components.get(&CriterionId::Stress) {
        Some(&s) => s,
        None => stress(x, d),
    };
    Ok(CriterionValue {
        value,
        stress,
        components,
    })
}
