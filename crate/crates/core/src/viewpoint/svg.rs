//! Static SVG serialization of a render tree. Output is deterministic so it
//! can be compared byte for byte.

use std::fmt::Write as _;

use crate::query::fmt_real;
use crate::store::Layout;

use super::render::{Affordance, RenderKind, RenderNode, RenderTree, CHAR_WIDTH};
use super::StyleValue;

/// Grid pitch drawn when the canvas carries the `grid` class.
pub const GRID_PITCH: f64 = 15.0;
const LINE: f64 = 16.0;
const PAD: f64 = 4.0;

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn n(x: f64) -> String {
    fmt_real((x * 1000.0).round() / 1000.0)
}

fn style_attrs(node: &RenderNode) -> String {
    let mut s = String::new();
    for (key, attr) in [("fill", "fill"), ("stroke", "stroke"), ("strokeWidth", "stroke-width"), ("dash", "stroke-dasharray")] {
        if let Some(v) = node.style.get(key) {
            let _ = write!(s, " {attr}=\"{}\"", esc(&v.svg_text()));
        }
    }
    s
}

fn extent(tree: &RenderTree) -> (f64, f64) {
    let mut w: f64 = 400.0;
    let mut h: f64 = 300.0;
    for node in tree.iter() {
        if let Some(g) = node.geometry {
            w = w.max(g.x + g.width + 20.0);
            h = h.max(g.y + g.height + 20.0);
        }
    }
    (w.ceil(), h.ceil())
}

/// Serializes `tree` as a standalone SVG document.
pub fn render_to_svg(tree: &RenderTree) -> String {
    let (w, h) = extent(tree);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        n(w),
        n(h),
        n(w),
        n(h)
    );
    let root = &tree.root;
    if root.has_class("grid") {
        let p = n(GRID_PITCH);
        let _ = writeln!(
            out,
            "<defs><pattern id=\"grid\" width=\"{p}\" height=\"{p}\" patternUnits=\"userSpaceOnUse\"><circle cx=\"1\" cy=\"1\" r=\"1\" fill=\"silver\"/></pattern></defs>"
        );
        let _ = writeln!(out, "<rect class=\"grid\" width=\"100%\" height=\"100%\" fill=\"url(#grid)\"/>");
    }
    let _ = writeln!(out, "<g class=\"{}\">", esc(&root.classes.join(" ")));
    let mut cursor = Cursor::at(Layout::new(0.0, 0.0, w, h));
    for child in &root.children {
        emit(child, &mut cursor, &mut out);
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Running insertion point for inline content. Vertices stack lines;
/// rows lay their content out left to right on one line.
struct Cursor {
    frame: Layout,
    line: usize,
    across: Option<f64>,
}

impl Cursor {
    fn at(frame: Layout) -> Self {
        Cursor {
            frame,
            line: 0,
            across: None,
        }
    }

    fn row(frame: Layout) -> Self {
        Cursor {
            frame,
            line: 0,
            across: Some(0.0),
        }
    }

    fn next(&mut self, body: &str) -> (f64, f64) {
        match &mut self.across {
            Some(dx) => {
                let at = (self.frame.x + PAD + *dx, self.frame.y + LINE - 2.0);
                *dx += body.chars().count() as f64 * CHAR_WIDTH + PAD * 2.0;
                at
            }
            None => {
                self.line += 1;
                (self.frame.x + PAD, self.frame.y + self.line as f64 * LINE)
            }
        }
    }
}

fn text(out: &mut String, class: &str, cursor: &mut Cursor, body: &str) {
    let (x, y) = cursor.next(body);
    let _ = writeln!(out, "<text class=\"{}\" x=\"{}\" y=\"{}\">{}</text>", esc(class), n(x), n(y), esc(body));
}

fn emit(node: &RenderNode, cursor: &mut Cursor, out: &mut String) {
    let class = node.classes.join(" ");
    match node.kind {
        RenderKind::Vertex | RenderKind::Row => {
            let g = node.geometry.unwrap_or(cursor.frame);
            let kind = if node.kind == RenderKind::Vertex { "vertex" } else { "row" };
            let id = node.source.map(|s| format!(" data-element=\"{s}\"")).unwrap_or_default();
            let _ = writeln!(out, "<g class=\"{}\"{id} data-key=\"{}\">", esc(format!("{kind} {class}").trim_end()), node.key);
            let style = style_attrs(node);
            match node.style.get("shape") {
                Some(StyleValue::Path(p)) if p == "diamond" => {
                    let (cx, cy) = g.center();
                    let _ = writeln!(
                        out,
                        "<path class=\"shape\" d=\"M{} {} L{} {} L{} {} L{} {} Z\"{style}/>",
                        n(cx),
                        n(g.y),
                        n(g.x + g.width),
                        n(cy),
                        n(cx),
                        n(g.y + g.height),
                        n(g.x),
                        n(cy)
                    );
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "<rect class=\"shape\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"{style}/>",
                        n(g.x),
                        n(g.y),
                        n(g.width),
                        n(g.height)
                    );
                }
            }
            let mut inner = if node.kind == RenderKind::Row { Cursor::row(g) } else { Cursor::at(g) };
            for c in &node.children {
                emit(c, &mut inner, out);
            }
            out.push_str("</g>\n");
        }
        RenderKind::Box => {
            let _ = writeln!(out, "<g class=\"{}\">", esc(format!("box {class}").trim_end()));
            for c in &node.children {
                emit(c, cursor, out);
            }
            out.push_str("</g>\n");
        }
        RenderKind::Text => text(out, if class.is_empty() { "text" } else { &class }, cursor, node.text.as_deref().unwrap_or("")),
        RenderKind::Input | RenderKind::Selector => {
            let body = match &node.affordance {
                Some(Affordance::Input { value, .. } | Affordance::Selector { value, .. }) => value.clone(),
                _ => String::new(),
            };
            text(out, &class, cursor, &body);
        }
        RenderKind::Toggle => {
            let body = match &node.affordance {
                Some(Affordance::Toggle { name, value, .. }) => format!("[{}] {name}", if *value { "x" } else { " " }),
                _ => String::new(),
            };
            text(out, &class, cursor, &body);
        }
        RenderKind::Slider => {
            let body = match &node.affordance {
                Some(Affordance::Slider { name, min, max, value, .. }) => format!("{name} {value} ({min}..{max})"),
                _ => String::new(),
            };
            text(out, &class, cursor, &body);
        }
        RenderKind::Control => {
            let _ = writeln!(out, "<g class=\"{}\">", esc(&class));
            text(out, "title", cursor, node.text.as_deref().unwrap_or(""));
            for c in &node.children {
                emit(c, cursor, out);
            }
            out.push_str("</g>\n");
        }
        RenderKind::Edge => {
            if let Some(Affordance::Edge { from, to, .. }) = &node.affordance {
                let _ = writeln!(
                    out,
                    "<path class=\"{}\" d=\"M{} {} L{} {}\"{}/>",
                    esc(&class),
                    n(from.0),
                    n(from.1),
                    n(to.0),
                    n(to.1),
                    style_attrs(node)
                );
            }
        }
        RenderKind::ErrorBadge => text(out, "error-badge", cursor, node.text.as_deref().unwrap_or("")),
        RenderKind::Marker => {
            let (x, y) = (cursor.frame.x + cursor.frame.width, cursor.frame.y);
            let _ = writeln!(out, "<g class=\"{}\">", esc(&class));
            let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"6\"/>", n(x), n(y));
            let _ = writeln!(out, "<title>{}</title>", esc(node.text.as_deref().unwrap_or("")));
            out.push_str("</g>\n");
        }
        RenderKind::Canvas => {
            for c in &node.children {
                emit(c, cursor, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(esc("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
