//! Deterministic SVG export of drawings: edges as lines, vertices as
//! circles, edges carrying the local crossing number highlighted, and an
//! optional caption line (crossing numbers, runtime).

use std::fmt::Write;

use crate::geometry::{CrossingIndex, Drawing};

#[derive(Debug, Clone)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Draw max-crossing edges in the highlight style.
    pub highlight_max_edges: bool,
    pub caption: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width: 480.0,
            height: 480.0,
            margin: 24.0,
            highlight_max_edges: true,
            caption: None,
        }
    }
}

fn fmt_coord(x: f64) -> String {
    format!("{x:.3}")
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the drawing as a standalone SVG document. Output is
/// byte-identical across runs for identical inputs.
pub fn render_svg(drawing: &Drawing, index: &CrossingIndex, opts: &SvgOptions) -> String {
    let (lo, hi) = drawing.bounding_box();
    let span_x = (hi.x - lo.x).max(1e-9);
    let span_y = (hi.y - lo.y).max(1e-9);
    let usable_w = opts.width - 2.0 * opts.margin;
    let usable_h = opts.height - 2.0 * opts.margin;
    let scale = (usable_w / span_x).min(usable_h / span_y);
    let map = |p: crate::geometry::Point| -> (f64, f64) {
        (
            opts.margin + (p.x - lo.x) * scale,
            // flip y so "up" in layout coordinates is up on screen
            opts.height - opts.margin - (p.y - lo.y) * scale,
        )
    };

    let lcr = index.local_crossing_number();
    let max_edges: std::collections::BTreeSet<usize> = if opts.highlight_max_edges && lcr > 0 {
        index.max_crossing_edges().into_iter().collect()
    } else {
        Default::default()
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt_coord(opts.width),
        fmt_coord(opts.height),
        fmt_coord(opts.width),
        fmt_coord(opts.height)
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);

    for (e, &(u, v)) in drawing.graph().edges().iter().enumerate() {
        let (x1, y1) = map(drawing.position(u));
        let (x2, y2) = map(drawing.position(v));
        let style = if max_edges.contains(&e) {
            r##"stroke="#d62728" stroke-width="2.4""##
        } else {
            r##"stroke="#555555" stroke-width="1.2""##
        };
        let _ = writeln!(
            out,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" {}/>"#,
            fmt_coord(x1),
            fmt_coord(y1),
            fmt_coord(x2),
            fmt_coord(y2),
            style
        );
    }
    for v in 0..drawing.graph().n() {
        let (cx, cy) = map(drawing.position(v));
        let _ = writeln!(
            out,
            r##"  <circle cx="{}" cy="{}" r="3.0" fill="#1f77b4"/>"##,
            fmt_coord(cx),
            fmt_coord(cy)
        );
    }
    if let Some(caption) = &opts.caption {
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" font-family="monospace" font-size="12">{}</text>"#,
            fmt_coord(opts.margin),
            fmt_coord(opts.height - 6.0),
            xml_escape(caption)
        );
    }
    out.push_str("</svg>\n");
    out
}
