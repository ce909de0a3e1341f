//! SVG rendering of layouts.

use std::fmt::Write as _;

use crate::error::Result;
use crate::geometry::Layout;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Width and height of the square viewport.
    pub width_px: f64,
    pub node_radius: f64,
    pub edge_width: f64,
    pub margin: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width_px: 600.0,
            node_radius: 5.0,
            edge_width: 1.5,
            margin: 20.0,
        }
    }
}

/// Maps layout coordinates into the viewport with a single scale factor,
/// centring the bounding box; `y` points up in layout space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewTransform {
    pub scale: f64,
    pub offset: [f64; 2],
}

impl ViewTransform {
    /// `None` when all points coincide.
    pub fn fit(x: &Layout, opts: &RenderOptions) -> Option<Self> {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &x.positions {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if !(extent > 0.0) {
            return None;
        }
        let inner = opts.width_px - 2.0 * opts.margin;
        let scale = inner / extent;
        let centre = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let mid = opts.width_px / 2.0;
        Some(ViewTransform {
            scale,
            offset: [mid - centre[0] * scale, mid + centre[1] * scale],
        })
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.offset[0] + p[0] * self.scale, self.offset[1] - p[1] * self.scale]
    }
}

/// Deterministic SVG with one `line` per edge and one `circle` per node.
pub fn render_svg(x: &Layout, g: &Graph, opts: &RenderOptions) -> Result<String> {
    x.check_for(g)?;
    let w = opts.width_px;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="{w}" height="{w}" fill="#ffffff"/>"##).unwrap();
    match ViewTransform::fit(x, opts) {
        None => {
            out.push_str("<!-- warning: degenerate layout, all nodes coincide -->\n");
            writeln!(
                out,
                r##"<circle cx="{:.3}" cy="{:.3}" r="{}" fill="#4477aa"/>"##,
                w / 2.0,
                w / 2.0,
                opts.node_radius
            )
            .unwrap();
        }
        Some(t) => {
            let pts: Vec<[f64; 2]> = x.positions.iter().map(|&p| t.apply(p)).collect();
            writeln!(out, r##"<g stroke="#555555" stroke-width="{}">"##, opts.edge_width).unwrap();
            for &(u, v) in g.edges() {
                writeln!(
                    out,
                    r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    pts[u][0], pts[u][1], pts[v][0], pts[v][1]
                )
                .unwrap();
            }
            out.push_str("</g>\n");
            writeln!(out, r##"<g fill="#4477aa">"##).unwrap();
            for p in &pts {
                writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="{}"/>"#, p[0], p[1], opts.node_radius).unwrap();
            }
            out.push_str("</g>\n");
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
