//! Layouts, canonicalization and planar segment geometry.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, Graph};

pub type Point = [f64; 2];

/// Node positions, one row per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: Vec<Point>,
}

impl Layout {
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        let layout = Layout { positions };
        layout.check_finite()?;
        Ok(layout)
    }

    pub fn from_flat(data: &[f64]) -> Result<Self> {
        if data.len() % 2 != 0 {
            return Err(Error::ShapeMismatch(format!("{} values do not form N x 2", data.len())));
        }
        Layout::new(data.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| [p[0], p[1]]).collect()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn check_finite(&self) -> Result<()> {
        match self.positions.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            Some(i) => Err(Error::Validation(format!("non-finite position at node {i}"))),
            None => Ok(()),
        }
    }

    /// Verifies the layout can be paired with `g`.
    pub fn check_for(&self, g: &Graph) -> Result<()> {
        if self.len() != g.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "layout has {} rows, graph has {} nodes",
                self.len(),
                g.node_count()
            )));
        }
        self.check_finite()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Applies `p -> scale * R p + shift` with `R` the rotation by `angle`.
    pub fn transformed(&self, angle: f64, scale: f64, shift: Point) -> Layout {
        let (s, c) = angle.sin_cos();
        Layout {
            positions: self
                .positions
                .iter()
                .map(|p| {
                    [
                        scale * (c * p[0] - s * p[1]) + shift[0],
                        scale * (s * p[0] + c * p[1]) + shift[1],
                    ]
                })
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Layout {
        Layout {
            positions: self.positions.iter().map(|p| [p[0] * factor, p[1] * factor]).collect(),
        }
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Layout {
        let mut positions = vec![[0.0; 2]; self.len()];
        for (i, &p) in perm.iter().enumerate() {
            positions[p] = self.positions[i];
        }
        Layout { positions }
    }

    pub fn centroid(&self) -> Point {
        let n = self.len() as f64;
        let (sx, sy) = self
            .positions
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    /// Population covariance `[var_x, cov_xy, var_y]`.
    pub fn covariance(&self) -> [f64; 3] {
        let c = self.centroid();
        let n = self.len() as f64;
        let mut acc = [0.0; 3];
        for p in &self.positions {
            let (x, y) = (p[0] - c[0], p[1] - c[1]);
            acc[0] += x * x;
            acc[1] += x * y;
            acc[2] += y * y;
        }
        acc.map(|v| v / n)
    }

    /// Text form: one `x y` line per node.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.positions {
            s.push_str(&format!("{} {}\n", p[0], p[1]));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Layout> {
        let mut positions = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected \"x y\"", i + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            };
            positions.push([parse(fields[0])?, parse(fields[1])?]);
        }
        Layout::new(positions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("layouts always serialize")
    }

    pub fn parse_json(text: &str) -> Result<Layout> {
        let layout: Layout = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        layout.check_finite()?;
        Ok(layout)
    }

    /// Loads a `.json` layout or a text layout, by extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Layout> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            Layout::parse_json(&text)
        } else {
            Layout::parse_text(&text)
        }
    }
}

/// Shifts the centroid to the origin.
pub fn translate_to_origin(x: &Layout) -> Layout {
    let c = x.centroid();
    Layout {
        positions: x.positions.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect(),
    }
}

/// Rotation that aligns the first principal axis of a zero-centered layout
/// with the x-axis, as a row-vector transform `p -> p * R`.
///
/// The matrix always has determinant +1. The remaining two-fold ambiguity
/// (rotation by pi) is fixed by making the third moment along the principal
/// axis nonnegative. Isotropic covariance (eigenvalues equal within 1e-12
/// relative to the trace) yields the identity.
pub fn principal_rotation(x: &Layout) -> [[f64; 2]; 2] {
    let [a, b, c] = x.covariance();
    let gap = (a - c).hypot(2.0 * b);
    let trace = a + c;
    if gap <= 1e-12 * trace || trace == 0.0 {
        return [[1.0, 0.0], [0.0, 1.0]];
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (mut s, mut co) = theta.sin_cos();
    let skew: f64 = x
        .positions
        .iter()
        .map(|p| (p[0] * co + p[1] * s).powi(3))
        .sum();
    if skew < 0.0 {
        s = -s;
        co = -co;
    }
    // Columns are the principal axis and its counter-clockwise normal.
    [[co, -s], [s, co]]
}

pub fn apply_rotation(x: &Layout, r: &[[f64; 2]; 2]) -> Layout {
    Layout {
        positions: x
            .positions
            .iter()
            .map(|p| {
                [
                    p[0] * r[0][0] + p[1] * r[1][0],
                    p[0] * r[0][1] + p[1] * r[1][1],
                ]
            })
            .collect(),
    }
}

/// Rotates a zero-centered layout onto its principal axes.
pub fn pca_rotate(x: &Layout) -> Layout {
    apply_rotation(x, &principal_rotation(x))
}

/// Uniform scale minimising stress:
/// `sum ||dX|| / d  /  sum ||dX||^2 / d^2` over unordered pairs.
pub fn optimal_scale(x: &Layout, d: &DistanceMatrix) -> Result<f64> {
    let n = x.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let dist = x.distance(i, j);
            let dij = f64::from(d.get(i, j));
            num += dist / dij;
            den += dist * dist / (dij * dij);
        }
    }
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateLayout("all positions coincide".into()));
    }
    Ok(num / den)
}

pub fn optimal_rescale(x: &Layout, d: &DistanceMatrix) -> Result<Layout> {
    Ok(x.scaled(optimal_scale(x, d)?))
}

/// Translation, principal-axis rotation and stress-optimal rescaling, in
/// that order.
pub fn canonicalize(x: &Layout, d: &DistanceMatrix) -> Result<Layout> {
    let centered = translate_to_origin(x);
    let rotated = pca_rotate(&centered);
    optimal_rescale(&rotated, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: Point,
    /// Acute angle between the two segment directions, in `(0, pi/2]`.
    pub acute_angle: f64,
}

const ORIENT_EPS: f64 = 1e-12;

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Sign of the turn `a -> b -> c`, zero when the sine of the angle at `a`
/// is within 1e-12 of zero.
fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let u = sub(b, a);
    let v = sub(c, a);
    let scale = norm(u) * norm(v);
    if scale == 0.0 {
        return 0;
    }
    let s = cross(u, v) / scale;
    if s > ORIENT_EPS {
        1
    } else if s < -ORIENT_EPS {
        -1
    } else {
        0
    }
}

/// Proper interior crossing of the open segments `p1p2` and `p3p4`.
/// Touching, shared endpoints, collinear overlap and disjoint segments all
/// return `None`.
pub fn segment_intersection(p1: Point, p2: Point, p3: Point, p4: Point) -> Option<Crossing> {
    let o1 = orientation(p1, p2, p3);
    let o2 = orientation(p1, p2, p4);
    let o3 = orientation(p3, p4, p1);
    let o4 = orientation(p3, p4, p2);
    if o1 * o2 >= 0 || o3 * o4 >= 0 {
        return None;
    }
    let u = sub(p2, p1);
    let v = sub(p4, p3);
    let denom = cross(u, v);
    let t = cross(sub(p3, p1), v) / denom;
    let point = [p1[0] + t * u[0], p1[1] + t * u[1]];
    let dot = u[0] * v[0] + u[1] * v[1];
    let acute_angle = denom.abs().atan2(dot.abs());
    Some(Crossing { point, acute_angle })
}
